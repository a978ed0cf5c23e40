//! Spread of the best design points relative to the whole design.

use super::{check_design, distance, median};
use crate::design::NumericDesign;
use crate::error::{Error, Result};

pub const DISPERSION_QUANTILES: [f64; 4] = [0.02, 0.05, 0.10, 0.25];

fn pairwise(points: &[&[f64]]) -> Vec<f64> {
    let mut out = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            out.push(distance(points[i], points[j]));
        }
    }
    out
}

fn mean_median(mut d: Vec<f64>) -> (f64, f64) {
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    (mean, median(&mut d))
}

/// For each quantile `q`, compares mean and median pairwise distances among
/// the `max(2, ⌈q·n⌉)` best points with those of the full design. Output
/// order: ratio_mean, ratio_median, diff_mean, diff_median, each over the
/// four quantiles.
pub fn dispersion(d: &NumericDesign) -> Result<[f64; 16]> {
    check_design(d)?;
    let n = d.n_rows();
    if n < 2 {
        return Err(Error::Data("dispersion needs at least 2 rows".into()));
    }
    // ties in y are broken by the point itself, so row order never matters
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        d.y[a].total_cmp(&d.y[b]).then_with(|| {
            d.x[a]
                .iter()
                .zip(&d.x[b])
                .map(|(u, v)| u.total_cmp(v))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let all: Vec<&[f64]> = d.x.iter().map(Vec::as_slice).collect();
    let (full_mean, full_median) = mean_median(pairwise(&all));

    let mut out = [0.0; 16];
    for (qi, q) in DISPERSION_QUANTILES.iter().enumerate() {
        let k = ((q * n as f64).ceil() as usize).max(2).min(n);
        let best: Vec<&[f64]> = order[..k].iter().map(|&i| d.x[i].as_slice()).collect();
        let (m, md) = mean_median(pairwise(&best));
        out[qi] = if full_mean > 0.0 { m / full_mean } else { 1.0 };
        out[4 + qi] = if full_median > 0.0 { md / full_median } else { 1.0 };
        out[8 + qi] = m - full_mean;
        out[12 + qi] = md - full_median;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::design;
    use super::*;
    use crate::seed;
    use rand::Rng;

    fn random_x(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = seed::rng(seed);
        (0..n).map(|_| vec![rng.random(), rng.random()]).collect()
    }

    #[test]
    fn independent_objective_has_unit_ratios() {
        for s in 0..5 {
            let x = random_x(500, s);
            let mut rng = seed::rng(1000 + s);
            let y = (0..500).map(|_| rng.random::<f64>()).collect();
            let f = dispersion(&design(x, y)).unwrap();
            // q = 0.25 ratios
            assert!(f[3] > 0.9 && f[3] < 1.1, "{}", f[3]);
            assert!(f[7] > 0.9 && f[7] < 1.1, "{}", f[7]);
        }
    }

    #[test]
    fn sphere_best_points_cluster() {
        let x = random_x(500, 9);
        let y = x
            .iter()
            .map(|r| (r[0] - 0.3).powi(2) + (r[1] - 0.6).powi(2))
            .collect();
        let f = dispersion(&design(x, y)).unwrap();
        assert_eq!(f.len(), 16);
        assert!(f[0] < 1.0);
        assert!(f[8] < 0.0);
    }

    #[test]
    fn small_designs_use_two_point_floor() {
        let x = vec![vec![0.0], vec![1.0], vec![3.0], vec![7.0]];
        let y = vec![0.0, 1.0, 2.0, 3.0];
        let f = dispersion(&design(x, y)).unwrap();
        // the two best points are 0 and 1 for every quantile
        let full_mean = (1.0 + 3.0 + 7.0 + 2.0 + 6.0 + 4.0) / 6.0;
        assert!((f[0] - 1.0 / full_mean).abs() < 1e-12);
        assert!((f[8] - (1.0 - full_mean)).abs() < 1e-12);
    }
}
