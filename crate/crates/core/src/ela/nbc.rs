//! Nearest-better clustering: nearest-neighbour versus nearest-better
//! distances.

use super::{check_design, distance, mean, pearson, sd};
use crate::design::NumericDesign;
use crate::error::{Error, Result};

/// Output when every objective value is equal and no point has a better
/// neighbour.
pub const DEGENERATE: [f64; 5] = [1.0, 1.0, 0.0, 0.0, 0.0];

fn safe_ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        1.0
    }
}

/// Features: sd(nn)/sd(nb), mean(nn)/mean(nb), cor(nn, nb), coefficient of
/// variation of nb/nn, and cor(indegree, y). Points without a strictly
/// better neighbour get the largest nearest-better distance of the others.
pub fn nearest_better_clustering(d: &NumericDesign) -> Result<[f64; 5]> {
    check_design(d)?;
    let n = d.n_rows();
    if n < 3 {
        return Err(Error::Data("nearest-better clustering needs at least 3 rows".into()));
    }
    let mut nn = vec![f64::INFINITY; n];
    let mut nb = vec![f64::INFINITY; n];
    let mut nb_index: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let dij = distance(&d.x[i], &d.x[j]);
            if dij < nn[i] {
                nn[i] = dij;
            }
            if d.y[j] < d.y[i] && dij < nb[i] {
                nb[i] = dij;
                nb_index[i] = Some(j);
            }
        }
    }
    let with_better: Vec<f64> = (0..n).filter(|&i| nb_index[i].is_some()).map(|i| nb[i]).collect();
    if with_better.is_empty() {
        return Ok(DEGENERATE);
    }
    let fill = with_better.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for i in 0..n {
        if nb_index[i].is_none() {
            nb[i] = fill;
        }
    }
    let mut indegree = vec![0.0; n];
    for j in nb_index.iter().flatten() {
        indegree[*j] += 1.0;
    }
    let ratios: Vec<f64> = nb
        .iter()
        .zip(&nn)
        .filter(|(_, a)| **a > 0.0)
        .map(|(b, a)| b / a)
        .collect();
    let cv = if ratios.len() >= 2 {
        safe_ratio(sd(&ratios), mean(&ratios))
    } else {
        0.0
    };
    let cv = if mean(&ratios) > 0.0 { cv } else { 0.0 };
    Ok([
        safe_ratio(sd(&nn), sd(&nb)),
        safe_ratio(mean(&nn), mean(&nb)),
        pearson(&nn, &nb),
        cv,
        pearson(&indegree, &d.y),
    ])
}
