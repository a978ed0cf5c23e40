//! Turning categorical columns into real numbers: one-hot indicators, target
//! encoding (a static value per level), and SHAP encoding (a per-row
//! Shapley attribution from a surrogate forest).

mod shap;
mod shapley;

use serde::{Deserialize, Serialize};

use crate::design::{Design, EncodingTag, NumericDesign};
use crate::error::{Error, Result};
use crate::forest::ForestParams;
use crate::problem::{Value, VariableKind};

pub use shap::{shap_encode, shap_encode_detailed, RowExplanation};
pub use shapley::{
    exact_shapley, exact_shapley_game, permutation_shapley, permutation_shapley_game, CoalitionMask,
    CoalitionValue, Interventional, Memoized, ShapleyAttribution, MAX_EXACT_PLAYERS,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    /// Prior weight `m` of the target-encoding blend `n_j / (n_j + m)`.
    pub te_weight: f64,
    pub shap_n_permutations: usize,
    pub shap_background_cap: usize,
    pub shap_forest: ForestParams,
    pub seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            te_weight: 10.0,
            shap_n_permutations: 10,
            shap_background_cap: 100,
            shap_forest: ForestParams::regression(0),
            seed: 0,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.te_weight >= 0.0 && self.te_weight.is_finite()) {
            return Err(Error::Config(format!(
                "target-encoding weight must be a finite non-negative number, got {}",
                self.te_weight
            )));
        }
        if self.shap_n_permutations == 0 {
            return Err(Error::Config("shap_n_permutations must be at least 1".into()));
        }
        if self.shap_background_cap == 0 {
            return Err(Error::Config("shap_background_cap must be at least 1".into()));
        }
        self.shap_forest.validate()
    }
}

/// Design matrix with categories replaced by their integer codes.
pub(crate) fn coded_matrix(design: &Design) -> Vec<Vec<f64>> {
    design
        .rows
        .iter()
        .map(|r| r.iter().map(Value::as_f64).collect())
        .collect()
}

fn numeric_shell(design: &Design, encoding: EncodingTag) -> NumericDesign {
    NumericDesign {
        problem_id: design.problem_id.clone(),
        feature_names: design.columns.iter().map(|c| c.name.clone()).collect(),
        x: coded_matrix(design),
        y: design.y.clone(),
        encoding,
    }
}

/// Replaces each categorical column with one indicator column per level
/// (named `variable=level`); numeric columns pass through.
pub fn one_hot_encode(design: &Design) -> NumericDesign {
    let mut names = Vec::new();
    for c in &design.columns {
        match &c.kind {
            VariableKind::Categorical { categories } => {
                names.extend(categories.iter().map(|l| format!("{}={l}", c.name)));
            }
            _ => names.push(c.name.clone()),
        }
    }
    let x = design
        .rows
        .iter()
        .map(|row| {
            let mut out = Vec::with_capacity(names.len());
            for (v, c) in row.iter().zip(&design.columns) {
                match (&c.kind, v) {
                    (VariableKind::Categorical { categories }, Value::Category(k)) => {
                        out.extend((0..categories.len()).map(|l| if l == *k { 1.0 } else { 0.0 }));
                    }
                    _ => out.push(v.as_f64()),
                }
            }
            out
        })
        .collect();
    NumericDesign {
        problem_id: design.problem_id.clone(),
        feature_names: names,
        x,
        y: design.y.clone(),
        encoding: EncodingTag::Onehot,
    }
}

/// Replaces every level `j` of a categorical column by
/// `λ·mean(Y | j) + (1 − λ)·mean(Y)` with `λ = n_j / (n_j + m)`.
pub fn target_encode(design: &Design, m: f64) -> Result<NumericDesign> {
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::Config(format!("target-encoding weight must be >= 0, got {m}")));
    }
    let mut out = numeric_shell(design, EncodingTag::Target);
    if design.rows.is_empty() {
        return Ok(out);
    }
    let global = design.y.iter().sum::<f64>() / design.y.len() as f64;
    for j in design.categorical_columns() {
        let VariableKind::Categorical { categories } = &design.columns[j].kind else {
            unreachable!()
        };
        let mut sums = vec![0.0; categories.len()];
        let mut counts = vec![0usize; categories.len()];
        for (row, y) in design.rows.iter().zip(&design.y) {
            let k = row[j].as_f64() as usize;
            sums[k] += y;
            counts[k] += 1;
        }
        let encoded: Vec<f64> = sums
            .iter()
            .zip(&counts)
            .map(|(&s, &n)| {
                if n == 0 {
                    return global;
                }
                let n = n as f64;
                let lambda = n / (n + m);
                lambda * (s / n) + (1.0 - lambda) * global
            })
            .collect();
        for (row, src) in out.x.iter_mut().zip(&design.rows) {
            row[j] = encoded[src[j].as_f64() as usize];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::VariableSpec;

    fn design(rows: Vec<Vec<Value>>, y: Vec<f64>, columns: Vec<VariableSpec>) -> Design {
        Design {
            problem_id: "t".into(),
            columns,
            rows,
            y,
            seed: 0,
        }
    }

    fn two_level() -> Design {
        design(
            vec![vec![Value::Category(0)], vec![Value::Category(1)]],
            vec![0.0, 1.0],
            vec![VariableSpec::categorical("c", ["a", "b"])],
        )
    }

    #[test]
    fn target_encoding_hand_example() {
        let enc = target_encode(&two_level(), 10.0).unwrap();
        assert!((enc.x[0][0] - 5.0 / 11.0).abs() < 1e-12);
        assert!((enc.x[1][0] - 6.0 / 11.0).abs() < 1e-12);
        let raw = target_encode(&two_level(), 0.0).unwrap();
        assert_eq!(raw.x[0][0], 0.0);
        assert_eq!(raw.x[1][0], 1.0);
    }

    #[test]
    fn target_encoding_single_level_is_global_mean() {
        let d = design(
            vec![vec![Value::Category(1)]; 4],
            vec![1.0, 2.0, 3.0, 6.0],
            vec![VariableSpec::categorical("c", ["a", "b"])],
        );
        for m in [0.0, 1.0, 10.0, 1e6] {
            let enc = target_encode(&d, m).unwrap();
            assert!(enc.x.iter().all(|r| (r[0] - 3.0).abs() < 1e-12));
        }
        assert!(target_encode(&d, -1.0).is_err());
    }

    #[test]
    fn one_hot_layout() {
        let d = design(
            vec![
                vec![Value::Real(0.5), Value::Category(1)],
                vec![Value::Real(-1.0), Value::Category(2)],
            ],
            vec![0.0, 1.0],
            vec![
                VariableSpec::continuous("x", -2.0, 2.0),
                VariableSpec::categorical("c", ["a", "b", "c"]),
            ],
        );
        let enc = one_hot_encode(&d);
        assert_eq!(enc.feature_names, vec!["x", "c=a", "c=b", "c=c"]);
        assert_eq!(enc.x[0], vec![0.5, 0.0, 1.0, 0.0]);
        assert_eq!(enc.x[1], vec![-1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn numeric_only_designs_pass_through() {
        let d = design(
            vec![vec![Value::Real(0.5), Value::Integer(3)]],
            vec![2.0],
            vec![
                VariableSpec::continuous("x", 0.0, 1.0),
                VariableSpec::integer("k", 0, 5),
            ],
        );
        let oh = one_hot_encode(&d);
        assert_eq!(oh.x, vec![vec![0.5, 3.0]]);
        assert_eq!(target_encode(&d, 10.0).unwrap().x, oh.x);
    }
}
