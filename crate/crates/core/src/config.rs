//! Flat `key = value` config files (TOML syntax).
//!
//! Scenario keys are the [`ScenarioConfig`] field names. A grid file adds
//! `delay_min`, `delay_max`, `n_delay`, `be_min`, `be_max`, `n_be` and an
//! optional `threads`; omitted grid keys take the 16 x 16 resistive defaults.

use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::{GridConfig, ScenarioConfig};

const GRID_KEYS: [&str; 7] = [
    "delay_min",
    "delay_max",
    "n_delay",
    "be_min",
    "be_max",
    "n_be",
    "threads",
];

fn parse_table(text: &str, source: &Path) -> Result<toml::Table> {
    text.parse::<toml::Table>().map_err(|e| Error::Parse {
        path: source.to_path_buf(),
        message: e.to_string(),
    })
}

fn scenario_from_table(table: toml::Table, source: &Path) -> Result<ScenarioConfig> {
    let config: ScenarioConfig =
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Parse {
                path: source.to_path_buf(),
                message: e.to_string(),
            })?;
    config.validate()?;
    Ok(config)
}

pub fn parse_scenario(text: &str, source: &Path) -> Result<ScenarioConfig> {
    scenario_from_table(parse_table(text, source)?, source)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub grid: GridConfig,
    pub threads: Option<usize>,
}

pub fn parse_grid(text: &str, source: &Path) -> Result<GridFile> {
    let mut table = parse_table(text, source)?;
    let mut grid_values = toml::Table::new();
    for key in GRID_KEYS {
        if let Some(v) = table.remove(key) {
            grid_values.insert(key.to_string(), v);
        }
    }
    let base = scenario_from_table(table, source)?;
    let mut grid = GridConfig::resistive(base);
    let bad = |key: &str, want: &str| Error::Parse {
        path: source.to_path_buf(),
        message: format!("{key} must be {want}"),
    };
    let float = |key: &str, v: &toml::Value| -> Result<f64> {
        v.as_float()
            .or_else(|| v.as_integer().map(|i| i as f64))
            .ok_or_else(|| bad(key, "a number"))
    };
    let count = |key: &str, v: &toml::Value| -> Result<usize> {
        v.as_integer()
            .filter(|&i| i >= 0)
            .map(|i| i as usize)
            .ok_or_else(|| bad(key, "a non-negative integer"))
    };
    let mut threads = None;
    for (key, v) in &grid_values {
        match key.as_str() {
            "delay_min" => grid.delay_min = float(key, v)?,
            "delay_max" => grid.delay_max = float(key, v)?,
            "be_min" => grid.be_min = float(key, v)?,
            "be_max" => grid.be_max = float(key, v)?,
            "n_delay" => grid.n_delay = count(key, v)?,
            "n_be" => grid.n_be = count(key, v)?,
            "threads" => threads = Some(count(key, v)?).filter(|&t| t > 0),
            _ => unreachable!(),
        }
    }
    grid.validate()?;
    Ok(GridFile { grid, threads })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    parse_scenario(&read(path)?, path)
}

pub fn load_grid(path: &Path) -> Result<GridFile> {
    parse_grid(&read(path)?, path)
}
