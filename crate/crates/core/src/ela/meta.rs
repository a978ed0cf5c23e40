//! Linear and quadratic least-squares fits of the objective.

use nalgebra::{DMatrix, DVector};

use super::check_design;
use crate::design::NumericDesign;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct MetaFeatures {
    pub lin_simple_adj_r2: f64,
    pub lin_simple_intercept: f64,
    pub lin_simple_coef_min: f64,
    pub lin_simple_coef_max: f64,
    pub lin_simple_coef_max_by_min: f64,
    pub lin_w_interact_adj_r2: f64,
    pub quad_simple_adj_r2: f64,
    pub quad_simple_cond: f64,
    pub quad_w_interact_adj_r2: f64,
    pub rank_deficient: bool,
}

impl MetaFeatures {
    pub fn values(&self) -> [f64; 9] {
        [
            self.lin_simple_adj_r2,
            self.lin_simple_intercept,
            self.lin_simple_coef_min,
            self.lin_simple_coef_max,
            self.lin_simple_coef_max_by_min,
            self.lin_w_interact_adj_r2,
            self.quad_simple_adj_r2,
            self.quad_simple_cond,
            self.quad_w_interact_adj_r2,
        ]
    }
}

struct Fit {
    coef: Vec<f64>,
    adj_r2: f64,
    rank_deficient: bool,
}

/// Minimum-norm least squares of `y` on `[1, terms]` via SVD.
fn fit(terms: &[Vec<f64>], y: &[f64]) -> Fit {
    let n = y.len();
    let p = terms.first().map_or(0, Vec::len);
    let a = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { terms[i][j - 1] });
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * f64::EPSILON * n.max(p + 1) as f64;
    let rank = svd.rank(eps);
    let coef = svd.solve(&b, eps).expect("U and V were computed");
    let resid = &a * &coef - &b;
    let ss_res = resid.norm_squared();
    let my = y.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    let adj_r2 = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - p as f64 - 1.0);
    Fit {
        coef: coef.iter().copied().collect(),
        adj_r2,
        rank_deficient: rank < p + 1,
    }
}

/// `max / min`, with 1 for an all-zero pair and the denominator floored at
/// machine epsilon otherwise.
fn ratio(max: f64, min: f64) -> f64 {
    if max == 0.0 {
        1.0
    } else {
        max / min.max(f64::EPSILON)
    }
}

fn abs_range(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), c| {
        (lo.min(c.abs()), hi.max(c.abs()))
    })
}

/// Fits `y ~ x`, `y ~ x + interactions`, `y ~ x + x²` and
/// `y ~ x + x² + interactions`.
pub fn ela_meta(d: &NumericDesign) -> Result<MetaFeatures> {
    check_design(d)?;
    let n = d.n_rows();
    let k = d.dim();
    if n <= k * k + 2 * k + 2 {
        return Err(Error::Data(format!(
            "meta-model features need more than {} rows for {k} variables, got {n}",
            k * k + 2 * k + 2
        )));
    }
    let lin: Vec<Vec<f64>> = d.x.clone();
    let inter = |r: &[f64]| {
        let mut out = Vec::new();
        for a in 0..k {
            for b in a + 1..k {
                out.push(r[a] * r[b]);
            }
        }
        out
    };
    let sq = |r: &[f64]| r.iter().map(|v| v * v).collect::<Vec<_>>();
    let lin_inter: Vec<Vec<f64>> = d.x.iter().map(|r| [r.clone(), inter(r)].concat()).collect();
    let quad: Vec<Vec<f64>> = d.x.iter().map(|r| [r.clone(), sq(r)].concat()).collect();
    let quad_inter: Vec<Vec<f64>> = d
        .x
        .iter()
        .map(|r| [r.clone(), sq(r), inter(r)].concat())
        .collect();

    let f_lin = fit(&lin, &d.y);
    let f_lin_inter = fit(&lin_inter, &d.y);
    let f_quad = fit(&quad, &d.y);
    let f_quad_inter = fit(&quad_inter, &d.y);

    let (cmin, cmax) = abs_range(&f_lin.coef[1..]);
    let (qmin, qmax) = abs_range(&f_quad.coef[1 + k..]);
    Ok(MetaFeatures {
        lin_simple_adj_r2: f_lin.adj_r2,
        lin_simple_intercept: f_lin.coef[0],
        lin_simple_coef_min: cmin,
        lin_simple_coef_max: cmax,
        lin_simple_coef_max_by_min: ratio(cmax, cmin),
        lin_w_interact_adj_r2: f_lin_inter.adj_r2,
        quad_simple_adj_r2: f_quad.adj_r2,
        quad_simple_cond: ratio(qmax, qmin),
        quad_w_interact_adj_r2: f_quad_inter.adj_r2,
        rank_deficient: f_lin.rank_deficient
            || f_lin_inter.rank_deficient
            || f_quad.rank_deficient
            || f_quad_inter.rank_deficient,
    })
}
