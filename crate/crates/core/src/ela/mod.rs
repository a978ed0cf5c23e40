//! The 38 landscape features computed from a normalized numeric design:
//! meta model (9), y-distribution (3), dispersion (16), information
//! content (5) and nearest-better clustering (5).

mod dispersion;
mod distribution;
mod information;
mod meta;
mod nbc;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::design::{EncodingTag, NumericDesign};
use crate::error::{Error, Result};
use crate::io;

pub use dispersion::{dispersion, DISPERSION_QUANTILES};
pub use distribution::ela_distribution;
pub use information::{information_content, InformationContent, IcSettings};
pub use meta::{ela_meta, MetaFeatures};
pub use nbc::nearest_better_clustering;

pub const N_FEATURES: usize = 38;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "ela_meta.lin_simple.adj_r2",
    "ela_meta.lin_simple.intercept",
    "ela_meta.lin_simple.coef.min",
    "ela_meta.lin_simple.coef.max",
    "ela_meta.lin_simple.coef.max_by_min",
    "ela_meta.lin_w_interact.adj_r2",
    "ela_meta.quad_simple.adj_r2",
    "ela_meta.quad_simple.cond",
    "ela_meta.quad_w_interact.adj_r2",
    "ela_distr.skewness",
    "ela_distr.kurtosis",
    "ela_distr.number_of_peaks",
    "disp.ratio_mean_02",
    "disp.ratio_mean_05",
    "disp.ratio_mean_10",
    "disp.ratio_mean_25",
    "disp.ratio_median_02",
    "disp.ratio_median_05",
    "disp.ratio_median_10",
    "disp.ratio_median_25",
    "disp.diff_mean_02",
    "disp.diff_mean_05",
    "disp.diff_mean_10",
    "disp.diff_mean_25",
    "disp.diff_median_02",
    "disp.diff_median_05",
    "disp.diff_median_10",
    "disp.diff_median_25",
    "ic.h_max",
    "ic.eps_s",
    "ic.eps_max",
    "ic.eps_ratio",
    "ic.m0",
    "nbc.nn_nb.sd_ratio",
    "nbc.nn_nb.mean_ratio",
    "nbc.nn_nb.cor",
    "nbc.dist_ratio.coeff_var",
    "nbc.nb_fitness.cor",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub problem_id: String,
    pub repetition: usize,
    pub encoding: EncodingTag,
    /// In [`FEATURE_NAMES`] order.
    pub values: Vec<f64>,
    /// Some meta-model fit needed the minimum-norm least-squares fallback.
    pub rank_deficient: bool,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.values[i])
    }
}

/// Computes all five feature sets in a fixed order. `seed` drives the start
/// of the information-content tour.
pub fn compute_feature_vector(
    d: &NumericDesign,
    repetition: usize,
    seed: u64,
) -> Result<FeatureVector> {
    check_design(d)?;
    let meta = ela_meta(d)?;
    let mut values = Vec::with_capacity(N_FEATURES);
    values.extend(meta.values());
    values.extend(ela_distribution(d)?);
    values.extend(dispersion(d)?);
    values.extend(information_content(d, &IcSettings::default(), seed)?.values());
    values.extend(nearest_better_clustering(d)?);
    debug_assert_eq!(values.len(), N_FEATURES);
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!(
            "feature {} is not finite for `{}`",
            FEATURE_NAMES[i], d.problem_id
        )));
    }
    Ok(FeatureVector {
        problem_id: d.problem_id.clone(),
        repetition,
        encoding: d.encoding,
        values,
        rank_deficient: meta.rank_deficient,
    })
}

pub(crate) fn check_design(d: &NumericDesign) -> Result<()> {
    if d.x.len() != d.y.len() {
        return Err(Error::Data("X and Y have different lengths".into()));
    }
    let dim = d.dim();
    for row in &d.x {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: row.len(),
            });
        }
    }
    if d.x.iter().flatten().chain(&d.y).any(|v| !v.is_finite()) {
        return Err(Error::Data("design contains non-finite values".into()));
    }
    Ok(())
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub(crate) fn sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

pub(crate) fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Pearson correlation; 0 when either side has no variance.
pub(crate) fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Feature table: one row per (instance, repetition, encoding).
pub fn write_feature_table(path: &Path, rows: &[FeatureVector]) -> Result<()> {
    let mut w = io::csv_writer(path)?;
    let mut header = vec!["instance", "repetition", "encoding", "rank_deficient"];
    header.extend(FEATURE_NAMES);
    w.write_record(&header)?;
    for fv in rows {
        let mut rec = vec![
            fv.problem_id.clone(),
            fv.repetition.to_string(),
            fv.encoding.to_string(),
            fv.rank_deficient.to_string(),
        ];
        rec.extend(fv.values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_feature_table(path: &Path) -> Result<Vec<FeatureVector>> {
    let mut r = io::csv_reader(path)?;
    let header = r.headers()?.clone();
    if header.len() != 4 + N_FEATURES || header.iter().skip(4).ne(FEATURE_NAMES) {
        return Err(Error::Data(format!("{}: unexpected feature header", path.display())));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        out.push(FeatureVector {
            problem_id: rec[0].to_string(),
            repetition: rec[1]
                .parse()
                .map_err(|_| Error::Data(format!("bad repetition `{}`", &rec[1])))?,
            encoding: rec[2].parse()?,
            rank_deficient: &rec[3] == "true",
            values: rec.iter().skip(4).map(io::parse_f64).collect::<Result<_>>()?,
        });
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    pub fn design(x: Vec<Vec<f64>>, y: Vec<f64>) -> NumericDesign {
        let d = x.first().map_or(0, Vec::len);
        NumericDesign {
            problem_id: "t".into(),
            feature_names: (0..d).map(|j| format!("x{j}")).collect(),
            x,
            y,
            encoding: EncodingTag::Target,
        }
    }
}
