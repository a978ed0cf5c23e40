//! SHAP encoding: fit a regression forest on the design (categories as
//! integer codes), explain every row with antithetic permutation sampling
//! against a background drawn from the design itself, and write each
//! categorical cell's attribution in place of its level.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::shapley::{permutation_shapley_game, CoalitionValue, Memoized, ShapleyAttribution};
use super::{coded_matrix, numeric_shell, EncoderConfig};
use crate::design::{Design, EncodingTag, NumericDesign};
use crate::error::{Error, Result};
use crate::forest::{fit_regression, CoalitionTable, RegressionForest};
use crate::seed;

struct ForestGame<'a> {
    forest: &'a RegressionForest,
    x: &'a [f64],
    background: &'a [Vec<f64>],
    scratch: Vec<usize>,
}

impl CoalitionValue for ForestGame<'_> {
    fn players(&self) -> usize {
        self.x.len()
    }

    fn value(&mut self, coalition: &[bool]) -> f64 {
        self.forest
            .interventional_mean(self.x, self.background, coalition, &mut self.scratch)
    }
}

/// Game over a precomputed table of coalition values.
struct TableGame {
    players: usize,
    values: Vec<f64>,
}

impl CoalitionValue for TableGame {
    fn players(&self) -> usize {
        self.players
    }

    fn value(&mut self, coalition: &[bool]) -> f64 {
        let bits = coalition
            .iter()
            .enumerate()
            .fold(0usize, |acc, (j, &on)| acc | (usize::from(on) << j));
        self.values[bits]
    }
}

/// Attribution of one design row plus the full-coalition value it must sum to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowExplanation {
    pub attribution: ShapleyAttribution,
    pub full_value: f64,
}

pub fn shap_encode(design: &Design, config: &EncoderConfig) -> Result<NumericDesign> {
    shap_encode_detailed(design, config).map(|(d, _)| d)
}

/// [`shap_encode`] that also returns the per-row explanations. The list is
/// empty when the design has no categorical column (nothing is explained).
pub fn shap_encode_detailed(
    design: &Design,
    config: &EncoderConfig,
) -> Result<(NumericDesign, Vec<RowExplanation>)> {
    config.validate()?;
    if design.rows.is_empty() {
        return Err(Error::Data("cannot SHAP-encode an empty design".into()));
    }
    let mut out = numeric_shell(design, EncodingTag::Shap);
    let cat_cols = design.categorical_columns();
    if cat_cols.is_empty() {
        return Ok((out, Vec::new()));
    }

    let x = coded_matrix(design);
    let forest = fit_regression(&x, &design.y, &config.shap_forest)?;

    let n = x.len();
    let background: Vec<Vec<f64>> = if n <= config.shap_background_cap {
        x.clone()
    } else {
        let mut rng = seed::rng(seed::derive_seed(config.seed, 0));
        let mut picked = index::sample(&mut rng, n, config.shap_background_cap).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|i| x[i].clone()).collect()
    };

    // small designs get every coalition value from one table lookup pass
    let table = CoalitionTable::new(&forest, &background);
    let explanations: Vec<RowExplanation> = x
        .par_iter()
        .enumerate()
        .map(|(i, row)| {
            let mut rng = seed::rng(seed::derive_seed(config.seed, i as u64 + 1));
            let full = vec![true; row.len()];
            let (attribution, full_value) = match &table {
                Some(t) => {
                    let mut game = TableGame {
                        players: row.len(),
                        values: t.values(row),
                    };
                    let full_value = game.value(&full);
                    (permutation_shapley_game(&mut game, config.shap_n_permutations, &mut rng)?, full_value)
                }
                None => {
                    let mut game = Memoized::new(ForestGame {
                        forest: &forest,
                        x: row,
                        background: &background,
                        scratch: Vec::with_capacity(background.len()),
                    });
                    let full_value = game.value(&full);
                    (permutation_shapley_game(&mut game, config.shap_n_permutations, &mut rng)?, full_value)
                }
            };
            Ok(RowExplanation {
                attribution,
                full_value,
            })
        })
        .collect::<Result<_>>()?;

    for (row, e) in out.x.iter_mut().zip(&explanations) {
        for &j in &cat_cols {
            row[j] = e.attribution.phi[j];
        }
    }
    Ok((out, explanations))
}
