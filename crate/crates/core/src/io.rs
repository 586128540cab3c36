//! Trace and grid-summary CSV files.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::{StabilizerKind, SummaryRow, TraceRow};

pub const TRACE_COLUMNS: [&str; 21] = [
    "t",
    "f_p",
    "f0",
    "f1",
    "f2",
    "f3",
    "v0",
    "v1",
    "v2",
    "v3",
    "x2",
    "x3",
    "dx",
    "alpha",
    "beta",
    "v_fc",
    "f_lc",
    "e_obs_l",
    "e_obs_f",
    "hand_margin",
    "net_energy",
];

pub const SUMMARY_COLUMNS: [&str; 13] = [
    "delay_index",
    "be_index",
    "delay",
    "be",
    "stabilizer",
    "seed",
    "spearman_v2_v3",
    "spearman_f1_f0",
    "pearson_effort_leader",
    "pearson_effort_follower",
    "mean_abs_drift",
    "rmse_velocity",
    "min_combined_energy",
];

/// 17 significant digits, enough to round-trip any f64.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn trace_fields(r: &TraceRow) -> [f64; 21] {
    [
        r.t,
        r.f_p,
        r.f0,
        r.f1,
        r.f2,
        r.f3,
        r.v0,
        r.v1,
        r.v2,
        r.v3,
        r.x2,
        r.x3,
        r.dx,
        r.alpha,
        r.beta,
        r.v_fc,
        r.f_lc,
        r.e_obs_l,
        r.e_obs_f,
        r.hand_margin,
        r.net_energy,
    ]
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn write_trace<W: Write>(out: W, rows: &[TraceRow]) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for r in rows {
        w.write_record(trace_fields(r).iter().map(|&x| format_float(x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    write_trace(BufWriter::new(file), rows).map_err(|e| csv_err(path, e))
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow]) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.delay_index.to_string(),
            r.be_index.to_string(),
            format_float(r.delay),
            format_float(r.be),
            r.stabilizer.to_string(),
            r.seed.to_string(),
            format_opt(r.spearman_v2_v3),
            format_opt(r.spearman_f1_f0),
            format_opt(r.pearson_effort_leader),
            format_opt(r.pearson_effort_follower),
            format_float(r.mean_abs_drift),
            format_float(r.rmse_velocity),
            format_float(r.min_combined_energy),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    write_summary(BufWriter::new(file), rows).map_err(|e| csv_err(path, e))
}

fn parse_error(path: &Path, line: usize, message: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: format!("line {line}: {message}"),
    }
}

/// Read named numeric columns from any CSV with a header row.
pub fn read_columns<R: Read>(input: R, path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            header
                .iter()
                .position(|h| h.trim() == *n)
                .ok_or_else(|| parse_error(path, 1, format!("missing column {n:?}")))
        })
        .collect::<Result<_>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        for (c, &i) in idx.iter().enumerate() {
            let cell = rec.get(i).unwrap_or("");
            let x: f64 = cell
                .trim()
                .parse()
                .map_err(|e| parse_error(path, line + 2, format!("column {:?}: {e}", names[c])))?;
            cols[c].push(x);
        }
    }
    Ok(cols)
}

pub fn read_columns_csv(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let file = File::open(path).map_err(io_err(path))?;
    read_columns(file, path, names)
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let cols = read_columns_csv(path, &TRACE_COLUMNS)?;
    let n = cols[0].len();
    Ok((0..n)
        .map(|i| {
            let c = |j: usize| cols[j][i];
            TraceRow {
                t: c(0),
                f_p: c(1),
                f0: c(2),
                f1: c(3),
                f2: c(4),
                f3: c(5),
                v0: c(6),
                v1: c(7),
                v2: c(8),
                v3: c(9),
                x2: c(10),
                x3: c(11),
                dx: c(12),
                alpha: c(13),
                beta: c(14),
                v_fc: c(15),
                f_lc: c(16),
                e_obs_l: c(17),
                e_obs_f: c(18),
                hand_margin: c(19),
                net_energy: c(20),
            }
        })
        .collect())
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(SUMMARY_COLUMNS.iter().copied()) {
        return Err(parse_error(path, 1, "unexpected summary header"));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let cell = |j: usize| rec.get(j).unwrap_or("").trim();
        let num = |j: usize| -> Result<f64> {
            cell(j)
                .parse()
                .map_err(|e| parse_error(path, line, format!("{}: {e}", SUMMARY_COLUMNS[j])))
        };
        let opt = |j: usize| -> Result<Option<f64>> {
            if cell(j).is_empty() {
                Ok(None)
            } else {
                num(j).map(Some)
            }
        };
        let int = |j: usize| -> Result<u64> {
            cell(j)
                .parse()
                .map_err(|e| parse_error(path, line, format!("{}: {e}", SUMMARY_COLUMNS[j])))
        };
        rows.push(SummaryRow {
            delay_index: int(0)? as usize,
            be_index: int(1)? as usize,
            delay: num(2)?,
            be: num(3)?,
            stabilizer: cell(4)
                .parse::<StabilizerKind>()
                .map_err(|e| parse_error(path, line, e))?,
            seed: int(5)?,
            spearman_v2_v3: opt(6)?,
            spearman_f1_f0: opt(7)?,
            pearson_effort_leader: opt(8)?,
            pearson_effort_follower: opt(9)?,
            mean_abs_drift: num(10)?,
            rmse_velocity: num(11)?,
            min_combined_energy: num(12)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_trace_is_header_only() {
        let mut buf = Vec::new();
        write_trace(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            TRACE_COLUMNS.join(",") + "\n"
        );
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.0), "-2.0000000000000000e0");
    }

    #[test]
    fn missing_column_reported() {
        let err = read_columns("a,b\n1,2\n".as_bytes(), Path::new("x.csv"), &["f"]).unwrap_err();
        assert!(err.to_string().contains("\"f\""), "{err}");
    }

    #[test]
    fn missing_correlation_is_empty_cell() {
        let row = SummaryRow {
            delay_index: 0,
            be_index: 3,
            delay: 0.0,
            be: 18.0,
            stabilizer: StabilizerKind::BaselineTdpa,
            seed: 2,
            spearman_v2_v3: None,
            spearman_f1_f0: Some(0.5),
            pearson_effort_leader: None,
            pearson_effort_follower: Some(1.0),
            mean_abs_drift: 0.0,
            rmse_velocity: 0.0,
            min_combined_energy: 0.0,
        };
        let mut buf = Vec::new();
        write_summary(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let line = text.lines().nth(1).unwrap();
        assert!(line.contains("baseline_tdpa,2,,5.0"), "{line}");
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![
            prop::num::f64::NORMAL,
            prop::num::f64::SUBNORMAL,
            Just(0.0),
            Just(-0.0),
            -1e3f64..1e3,
        ]
    }

    proptest! {
        #[test]
        fn trace_round_trip(values in prop::collection::vec(prop::collection::vec(finite(), 21), 0..20)) {
            let rows: Vec<TraceRow> = values.iter().map(|v| TraceRow {
                t: v[0], f_p: v[1], f0: v[2], f1: v[3], f2: v[4], f3: v[5], v0: v[6], v1: v[7],
                v2: v[8], v3: v[9], x2: v[10], x3: v[11], dx: v[12], alpha: v[13], beta: v[14],
                v_fc: v[15], f_lc: v[16], e_obs_l: v[17], e_obs_f: v[18], hand_margin: v[19],
                net_energy: v[20],
            }).collect();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("trace.csv");
            write_trace_csv(&path, &rows).unwrap();
            let back = read_trace_csv(&path).unwrap();
            prop_assert_eq!(back.len(), rows.len());
            for (a, b) in rows.iter().zip(&back) {
                for (x, y) in trace_fields(a).iter().zip(trace_fields(b).iter()) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }

        #[test]
        fn summary_round_trip(
            idx in (0usize..16, 0usize..16),
            vals in prop::collection::vec(finite(), 5),
            corr in prop::collection::vec(prop::option::of(-1.0f64..=1.0), 4),
            seed in any::<u64>(),
        ) {
            let row = SummaryRow {
                delay_index: idx.0, be_index: idx.1, delay: vals[0], be: vals[1],
                stabilizer: StabilizerKind::Tbps2, seed,
                spearman_v2_v3: corr[0], spearman_f1_f0: corr[1],
                pearson_effort_leader: corr[2], pearson_effort_follower: corr[3],
                mean_abs_drift: vals[2], rmse_velocity: vals[3], min_combined_energy: vals[4],
            };
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("summary.csv");
            write_summary_csv(&path, std::slice::from_ref(&row)).unwrap();
            let back = read_summary_csv(&path).unwrap();
            prop_assert_eq!(back, vec![row]);
        }
    }
}
