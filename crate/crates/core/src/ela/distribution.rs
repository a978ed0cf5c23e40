//! Shape of the objective value distribution.

use super::check_design;
use crate::design::NumericDesign;
use crate::error::{Error, Result};

const GRID: usize = 512;
/// Smallest prominence, relative to the highest mode, of a counted peak.
const MIN_PROMINENCE: f64 = 0.05;

/// Silverman's rule of thumb for one dimension, `sd * (3n/4)^(-1/5)`.
pub(crate) fn silverman_bandwidth(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let m = y.iter().sum::<f64>() / n;
    let sd = (y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt();
    sd * (0.75 * n).powf(-0.2)
}

/// Height of a local maximum above the higher of the two lowest points
/// separating it from taller terrain (or the grid edge).
fn prominence(density: &[f64], g: usize) -> f64 {
    let h = density[g];
    let mut left = h;
    for &v in density[..g].iter().rev() {
        if v > h {
            break;
        }
        left = left.min(v);
    }
    let mut right = h;
    for &v in &density[g + 1..] {
        if v > h {
            break;
        }
        right = right.min(v);
    }
    h - left.max(right)
}

/// Number of prominent local maxima of a Gaussian KDE of `y` on a 512-point
/// grid reaching three bandwidths past the data range.
pub(crate) fn count_peaks(y: &[f64]) -> usize {
    let h = silverman_bandwidth(y);
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(h > 0.0) || hi == lo {
        return 1;
    }
    let start = lo - 3.0 * h;
    let step = (hi - lo + 6.0 * h) / (GRID - 1) as f64;
    let density: Vec<f64> = (0..GRID)
        .map(|g| {
            let t = start + g as f64 * step;
            y.iter()
                .map(|v| {
                    let z = (t - v) / h;
                    (-0.5 * z * z).exp()
                })
                .sum()
        })
        .collect();
    let top = density.iter().cloned().fold(0.0, f64::max);
    let peaks = (1..GRID - 1)
        .filter(|&g| density[g] > density[g - 1] && density[g] > density[g + 1])
        .filter(|&g| prominence(&density, g) > MIN_PROMINENCE * top)
        .count();
    peaks.max(1)
}

/// Skewness (biased Fisher–Pearson), excess kurtosis, and number of peaks.
pub fn ela_distribution(d: &NumericDesign) -> Result<[f64; 3]> {
    check_design(d)?;
    let y = &d.y;
    if y.len() < 4 {
        return Err(Error::Data(format!(
            "y-distribution features need at least 4 rows, got {}",
            y.len()
        )));
    }
    let n = y.len() as f64;
    let m = y.iter().sum::<f64>() / n;
    let m2 = y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    if m2 == 0.0 {
        return Ok([0.0, 0.0, 1.0]);
    }
    let m3 = y.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n;
    let m4 = y.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    Ok([m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0, count_peaks(y) as f64])
}
