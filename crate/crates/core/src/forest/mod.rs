//! Random forests for regression (the SHAP surrogate) and classification
//! (algorithm selectors and the meta model).
//!
//! Tree `t` is grown from its own RNG seeded with `derive_seed(seed, t)`, so
//! parallel and sequential fitting give identical forests.

mod coalition;
mod tree;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use coalition::{CoalitionTable, MAX_TABLE_FEATURES};
pub use tree::{Node, Tree};
use tree::{Builder, Criterion, Gini, Variance};

const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubsample {
    All,
    Sqrt,
    Fraction(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_features: FeatureSubsample,
    pub bootstrap: bool,
    pub seed: u64,
}

impl ForestParams {
    /// 100 fully grown bootstrapped trees considering every feature per split.
    pub fn regression(seed: u64) -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            max_features: FeatureSubsample::All,
            bootstrap: true,
            seed,
        }
    }

    /// Like [`regression`](Self::regression) but with `sqrt(p)` features per split.
    pub fn classification(seed: u64) -> Self {
        Self {
            max_features: FeatureSubsample::Sqrt,
            ..Self::regression(seed)
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be at least 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("min_samples_leaf must be at least 1".into()));
        }
        if let FeatureSubsample::Fraction(f) = self.max_features {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("feature fraction {f} not in (0, 1]")));
            }
        }
        Ok(())
    }
}

fn check_matrix(x: &[Vec<f64>], n_targets: usize) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::Data("cannot fit a forest on zero rows".into()));
    }
    if n_targets != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: n_targets,
        });
    }
    let p = x[0].len();
    if p == 0 {
        return Err(Error::Data("cannot fit a forest on zero features".into()));
    }
    for row in x {
        if row.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite feature value".into()));
        }
    }
    Ok(p)
}

fn grow_trees<C, F>(x: &[Vec<f64>], params: &ForestParams, make: F) -> Vec<Tree<C::Leaf>>
where
    C: Criterion,
    C::Leaf: Send,
    F: Fn() -> C + Sync,
{
    let n = x.len();
    (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(seed::derive_seed(params.seed, t as u64));
            let mut idx: Vec<usize> = if params.bootstrap {
                use rand::Rng;
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            Builder {
                x,
                criterion: make(),
                params,
                rng,
                nodes: Vec::new(),
            }
            .grow(&mut idx)
        })
        .collect()
}

fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionForest {
    pub format_version: u32,
    pub n_features: usize,
    pub trees: Vec<Tree<f64>>,
}

/// Fits a forest of variance-reduction trees.
pub fn fit_regression(x: &[Vec<f64>], y: &[f64], params: &ForestParams) -> Result<RegressionForest> {
    params.validate()?;
    let p = check_matrix(x, y.len())?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite target".into()));
    }
    Ok(RegressionForest {
        format_version: FORMAT_VERSION,
        n_features: p,
        trees: grow_trees(x, params, || Variance { y }),
    })
}

impl RegressionForest {
    /// Mean of the per-tree leaf means.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.n_features, x)?;
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| *t.leaf(x)).sum::<f64>() / self.trees.len() as f64
    }

    /// Mean prediction over `background` when the features in `mask` are
    /// taken from `x` and the others from each background row.
    pub(crate) fn interventional_mean(
        &self,
        x: &[f64],
        background: &[Vec<f64>],
        mask: &[bool],
        scratch: &mut Vec<usize>,
    ) -> f64 {
        let mut total = 0.0;
        for tree in &self.trees {
            scratch.clear();
            scratch.extend(0..background.len());
            total += tree.blended_sum(0, x, background, mask, scratch);
        }
        total / (self.trees.len() * background.len()) as f64
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(s)?;
        if f.format_version != FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported forest format version {}",
                f.format_version
            )));
        }
        Ok(f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationForest {
    pub format_version: u32,
    pub n_features: usize,
    /// Class order; probability vectors follow it and ties resolve to the
    /// earlier label.
    pub class_labels: Vec<String>,
    pub trees: Vec<Tree<Vec<u32>>>,
}

/// Fits a forest of Gini trees. `labels[i]` indexes into `class_labels`.
pub fn fit_classification(
    x: &[Vec<f64>],
    labels: &[usize],
    class_labels: Vec<String>,
    params: &ForestParams,
) -> Result<ClassificationForest> {
    params.validate()?;
    let p = check_matrix(x, labels.len())?;
    let n_classes = class_labels.len();
    if let Some(bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::Data(format!("label index {bad} out of {n_classes} classes")));
    }
    Ok(ClassificationForest {
        format_version: FORMAT_VERSION,
        n_features: p,
        trees: grow_trees(x, params, || Gini {
            y: labels,
            n_classes,
        }),
        class_labels,
    })
}

impl ClassificationForest {
    /// Average over trees of the class proportions in the reached leaf.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_features, x)?;
        let mut proba = vec![0.0; self.class_labels.len()];
        for t in &self.trees {
            let counts = t.leaf(x);
            let n: u32 = counts.iter().sum();
            for (p, &c) in proba.iter_mut().zip(counts) {
                *p += f64::from(c) / f64::from(n);
            }
        }
        let k = self.trees.len() as f64;
        proba.iter_mut().for_each(|p| *p /= k);
        Ok(proba)
    }

    /// Index of the most probable class, ties to the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }

    pub fn predict_label(&self, x: &[f64]) -> Result<&str> {
        Ok(&self.class_labels[self.predict(x)?])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(s)?;
        if f.format_version != FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported forest format version {}",
                f.format_version
            )));
        }
        Ok(f)
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, p) in v.iter().enumerate() {
        if *p > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_data(n: usize, p: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = seed::rng(seed);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random::<f64>()).collect())
            .collect();
        let y = x.iter().map(|r| r[0] * 3.0 + (r[1] * 6.0).sin()).collect();
        (x, y)
    }

    #[test]
    fn constant_target_predicts_constant() {
        let (x, _) = random_data(50, 3, 1);
        let y = vec![2.5; 50];
        let f = fit_regression(&x, &y, &ForestParams::regression(3)).unwrap();
        for row in &x {
            assert!((f.predict(row).unwrap() - 2.5).abs() < 1e-12);
        }
        assert!((f.predict(&[9.0, -9.0, 0.3]).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn single_unbootstrapped_tree_memorizes() {
        let (x, y) = random_data(80, 3, 2);
        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            ..ForestParams::regression(0)
        };
        let f = fit_regression(&x, &y, &params).unwrap();
        for (row, t) in x.iter().zip(&y) {
            assert_eq!(f.predict(row).unwrap(), *t);
        }
    }

    #[test]
    fn regression_is_deterministic_and_bounded() {
        let (x, y) = random_data(60, 4, 3);
        let p = ForestParams {
            n_trees: 20,
            ..ForestParams::regression(9)
        };
        let a = fit_regression(&x, &y, &p).unwrap();
        let b = fit_regression(&x, &y, &p).unwrap();
        assert_eq!(a, b);
        let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (probe, _) = random_data(100, 4, 4);
        for row in &probe {
            let v = a.predict(row).unwrap();
            assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_and_bad_input() {
        let (x, y) = random_data(10, 2, 5);
        let f = fit_regression(&x, &y, &ForestParams::regression(1)).unwrap();
        assert!(matches!(f.predict(&[0.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(
            fit_regression(&[], &[], &ForestParams::regression(1)),
            Err(Error::Data(_))
        ));
        let mut bad = x.clone();
        bad[0][0] = f64::INFINITY;
        assert!(fit_regression(&bad, &y, &ForestParams::regression(1)).is_err());
        let p = ForestParams {
            n_trees: 0,
            ..ForestParams::regression(1)
        };
        assert!(matches!(fit_regression(&x, &y, &p), Err(Error::Config(_))));
    }

    #[test]
    fn single_class_has_certain_probabilities() {
        let (x, _) = random_data(30, 3, 6);
        let labels = vec![1; 30];
        let f = fit_classification(
            &x,
            &labels,
            vec!["a".into(), "b".into()],
            &ForestParams::classification(2),
        )
        .unwrap();
        for row in &x {
            assert_eq!(f.predict_proba(row).unwrap(), vec![0.0, 1.0]);
            assert_eq!(f.predict_label(row).unwrap(), "b");
        }
    }

    #[test]
    fn separated_clusters_are_learned() {
        let mut rng = seed::rng(7);
        let mut x = Vec::new();
        let mut labels = Vec::new();
        for i in 0..100 {
            let c = i % 2;
            let center = if c == 0 { 0.0 } else { 10.0 };
            x.push(vec![
                center + rng.random::<f64>(),
                center + rng.random::<f64>(),
                rng.random::<f64>(),
            ]);
            labels.push(c);
        }
        let f = fit_classification(
            &x,
            &labels,
            vec!["lo".into(), "hi".into()],
            &ForestParams::classification(5),
        )
        .unwrap();
        let correct = x
            .iter()
            .zip(&labels)
            .filter(|(r, l)| f.predict(r).unwrap() == **l)
            .count();
        assert_eq!(correct, 100);
    }

    #[test]
    fn probabilities_average_leaf_proportions() {
        // two hand-built stumps: leaves (1,0) and (1,1) for x <= 0.5
        let t1 = Tree {
            nodes: vec![Node::Leaf { value: vec![3, 0] }],
        };
        let t2 = Tree {
            nodes: vec![
                Node::Split {
                    feature: 0,
                    threshold: 0.5,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { value: vec![2, 2] },
                Node::Leaf { value: vec![0, 4] },
            ],
        };
        let f = ClassificationForest {
            format_version: FORMAT_VERSION,
            n_features: 1,
            class_labels: vec!["a".into(), "b".into()],
            trees: vec![t1, t2],
        };
        assert_eq!(f.predict_proba(&[0.2]).unwrap(), vec![0.75, 0.25]);
        assert_eq!(f.predict(&[0.2]).unwrap(), 0);
        assert_eq!(f.predict_proba(&[0.9]).unwrap(), vec![0.5, 0.5]);
        // tie goes to the first label
        assert_eq!(f.predict(&[0.9]).unwrap(), 0);
    }

    #[test]
    fn json_dump_round_trips() {
        let (x, y) = random_data(30, 2, 8);
        let p = ForestParams {
            n_trees: 3,
            ..ForestParams::regression(1)
        };
        let f = fit_regression(&x, &y, &p).unwrap();
        let back = RegressionForest::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(back, f);
        let mut v: serde_json::Value = serde_json::from_str(&f.to_json().unwrap()).unwrap();
        v["format_version"] = 99.into();
        assert!(RegressionForest::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn interventional_mean_matches_blending() {
        let (x, y) = random_data(60, 3, 10);
        let p = ForestParams {
            n_trees: 10,
            ..ForestParams::regression(2)
        };
        let f = fit_regression(&x, &y, &p).unwrap();
        let bg = &x[..20];
        let point = &x[40];
        let mut scratch = Vec::new();
        for bits in 0..8u32 {
            let mask: Vec<bool> = (0..3).map(|j| bits >> j & 1 == 1).collect();
            let direct: f64 = bg
                .iter()
                .map(|b| {
                    let blend: Vec<f64> =
                        (0..3).map(|j| if mask[j] { point[j] } else { b[j] }).collect();
                    f.predict(&blend).unwrap()
                })
                .sum::<f64>()
                / bg.len() as f64;
            let fast = f.interventional_mean(point, bg, &mask, &mut scratch);
            assert!((fast - direct).abs() < 1e-12, "{fast} vs {direct}");
        }
    }
}
