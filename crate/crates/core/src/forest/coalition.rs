//! Interventional values of every feature coalition at once.
//!
//! A blended point (features in `S` from `x`, the rest from a background row
//! `b`) reaches a leaf exactly when, for each feature on the leaf's path, the
//! source of that feature satisfies all of the path's conditions on it. So
//! per leaf it suffices to know which features `x` fails and, for every `S`,
//! how many background rows fail only inside `S`.

use super::tree::Node;
use super::RegressionForest;

/// Largest number of features for which the `2^M` table is built.
pub const MAX_TABLE_FEATURES: usize = 12;

enum Step {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(usize),
}

pub struct CoalitionTable {
    n_features: usize,
    denominator: f64,
    trees: Vec<Vec<Step>>,
    /// Per leaf, `2^M` entries: leaf value times the number of background
    /// rows whose failed features all lie in the coalition.
    weights: Vec<f64>,
}

impl CoalitionTable {
    /// `None` when the forest has more than [`MAX_TABLE_FEATURES`] features
    /// or the background is empty.
    pub fn new(forest: &RegressionForest, background: &[Vec<f64>]) -> Option<Self> {
        let m = forest.n_features;
        if m > MAX_TABLE_FEATURES || background.is_empty() {
            return None;
        }
        let size = 1usize << m;
        let mut weights = Vec::new();
        let mut trees = Vec::with_capacity(forest.trees.len());
        for tree in &forest.trees {
            let mut steps = Vec::with_capacity(tree.nodes.len());
            // (node, failure mask of every background row on the way here)
            let mut stack = vec![(0usize, vec![0usize; background.len()])];
            let mut order = vec![usize::MAX; tree.nodes.len()];
            let mut pending = Vec::new();
            while let Some((node, masks)) = stack.pop() {
                order[node] = steps.len();
                match &tree.nodes[node] {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        let bit = 1usize << feature;
                        let (mut l, mut r) = (masks.clone(), masks);
                        for (k, b) in background.iter().enumerate() {
                            if b[*feature] <= *threshold {
                                r[k] |= bit;
                            } else {
                                l[k] |= bit;
                            }
                        }
                        pending.push((steps.len(), *left, *right));
                        steps.push(Step::Split {
                            feature: *feature,
                            threshold: *threshold,
                            left: 0,
                            right: 0,
                        });
                        stack.push((*right, r));
                        stack.push((*left, l));
                    }
                    Node::Leaf { value } => {
                        let start = weights.len();
                        weights.resize(start + size, 0.0);
                        let counts = &mut weights[start..];
                        for &f in &masks {
                            counts[f] += 1.0;
                        }
                        // sum over subsets: entry s counts rows failing inside s
                        for j in 0..m {
                            for s in 0..size {
                                if s >> j & 1 == 1 {
                                    counts[s] += counts[s ^ (1 << j)];
                                }
                            }
                        }
                        counts.iter_mut().for_each(|c| *c *= value);
                        steps.push(Step::Leaf(start / size));
                    }
                }
            }
            for (at, left, right) in pending {
                if let Step::Split { left: l, right: r, .. } = &mut steps[at] {
                    *l = order[left];
                    *r = order[right];
                }
            }
            trees.push(steps);
        }
        Some(Self {
            n_features: m,
            denominator: (forest.trees.len() * background.len()) as f64,
            trees,
            weights,
        })
    }

    /// Interventional value of every coalition for `x`, indexed by the
    /// coalition's bitmask (bit `j` set when feature `j` comes from `x`).
    pub fn values(&self, x: &[f64]) -> Vec<f64> {
        let size = 1usize << self.n_features;
        // grouped[g * size + s]: leaves that x reaches failing exactly g
        let mut grouped = vec![0.0; size * size];
        let mut stack = Vec::new();
        for steps in &self.trees {
            stack.push((0usize, 0usize));
            while let Some((i, fails)) = stack.pop() {
                match steps[i] {
                    Step::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        let bit = 1usize << feature;
                        if x[feature] <= threshold {
                            stack.push((right, fails | bit));
                            stack.push((left, fails));
                        } else {
                            stack.push((right, fails));
                            stack.push((left, fails | bit));
                        }
                    }
                    Step::Leaf(k) => {
                        let g = &mut grouped[fails * size..(fails + 1) * size];
                        for (a, w) in g.iter_mut().zip(&self.weights[k * size..(k + 1) * size]) {
                            *a += w;
                        }
                    }
                }
            }
        }
        let mut out = vec![0.0; size];
        for g in 0..size {
            let row = &grouped[g * size..(g + 1) * size];
            for (s, o) in out.iter_mut().enumerate() {
                if g & s == 0 {
                    *o += row[s];
                }
            }
        }
        out.iter_mut().for_each(|v| *v /= self.denominator);
        out
    }
}
