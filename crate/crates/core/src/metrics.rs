//! Tracking and drift metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(a: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..a.len()).collect();
    idx.sort_by(|&i, &j| a[i].total_cmp(&a[j]));
    let mut ranks = vec![0.0; a.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && a[idx[end]] == a[idx[start]] {
            end += 1;
        }
        // ranks start+1 ..= end
        let r = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation, `None` if either series is constant or shorter than 2.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    check_lengths(a, b)?;
    let n = a.len();
    if n < 2 {
        return Ok(None);
    }
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(None);
    }
    let r = sab / (saa.sqrt() * sbb.sqrt());
    if !r.is_finite() {
        return Ok(None);
    }
    Ok(Some(r.clamp(-1.0, 1.0)))
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    check_lengths(a, b)?;
    pearson(&average_ranks(a), &average_ranks(b))
}

pub fn mean_abs_drift(x2: &[f64], x3: &[f64]) -> Result<f64> {
    check_lengths(x2, x3)?;
    if x2.is_empty() {
        return Ok(0.0);
    }
    Ok(x2.iter().zip(x3).map(|(a, b)| (a - b).abs()).sum::<f64>() / x2.len() as f64)
}

pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok((a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricReport {
    pub spearman_v2_v3: Option<f64>,
    pub spearman_f1_f0: Option<f64>,
    pub pearson_effort_leader: Option<f64>,
    pub pearson_effort_follower: Option<f64>,
    pub mean_abs_drift: f64,
    pub rmse_velocity: f64,
}
