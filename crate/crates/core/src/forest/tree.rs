//! CART trees with axis-aligned splits.
//!
//! A sample goes left when `x[feature] <= threshold`. Among splits of equal
//! quality the lowest feature index wins, then the lowest threshold.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{FeatureSubsample, ForestParams};
use crate::seed::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node<L> {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: L,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree<L> {
    pub nodes: Vec<Node<L>>,
}

impl<L> Tree<L> {
    pub fn leaf(&self, x: &[f64]) -> &L {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go<L>(t: &Tree<L>, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }
}

impl Tree<f64> {
    /// Sum over `rows` (indices into `background`) of the leaf value reached
    /// by the blended point that takes features in `mask` from `x` and the
    /// rest from the background row. `rows` is reordered in place.
    pub(crate) fn blended_sum(
        &self,
        node: usize,
        x: &[f64],
        background: &[Vec<f64>],
        mask: &[bool],
        rows: &mut [usize],
    ) -> f64 {
        if rows.is_empty() {
            return 0.0;
        }
        match &self.nodes[node] {
            Node::Leaf { value } => value * rows.len() as f64,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if mask[*feature] {
                    let next = if x[*feature] <= *threshold { *left } else { *right };
                    self.blended_sum(next, x, background, mask, rows)
                } else {
                    // in-place partition: rows going left first
                    let mut k = 0;
                    for i in 0..rows.len() {
                        if background[rows[i]][*feature] <= *threshold {
                            rows.swap(i, k);
                            k += 1;
                        }
                    }
                    let (l, r) = rows.split_at_mut(k);
                    self.blended_sum(*left, x, background, mask, l)
                        + self.blended_sum(*right, x, background, mask, r)
                }
            }
        }
    }
}

/// Split quality bookkeeping for one kind of target.
pub(crate) trait Criterion {
    type Stats: Clone;
    type Leaf;

    fn empty(&self) -> Self::Stats;
    fn add(&self, s: &mut Self::Stats, i: usize);
    fn remove(&self, s: &mut Self::Stats, i: usize);
    /// Larger is better; parent terms are omitted since they are constant
    /// for a node.
    fn score(&self, left: &Self::Stats, right: &Self::Stats) -> f64;
    fn is_pure(&self, idx: &[usize]) -> bool;
    fn leaf(&self, idx: &[usize]) -> Self::Leaf;
}

pub(crate) struct Variance<'a> {
    pub y: &'a [f64],
}

impl Criterion for Variance<'_> {
    type Stats = (usize, f64);
    type Leaf = f64;

    fn empty(&self) -> Self::Stats {
        (0, 0.0)
    }
    fn add(&self, s: &mut Self::Stats, i: usize) {
        s.0 += 1;
        s.1 += self.y[i];
    }
    fn remove(&self, s: &mut Self::Stats, i: usize) {
        s.0 -= 1;
        s.1 -= self.y[i];
    }
    fn score(&self, l: &Self::Stats, r: &Self::Stats) -> f64 {
        l.1 * l.1 / l.0 as f64 + r.1 * r.1 / r.0 as f64
    }
    fn is_pure(&self, idx: &[usize]) -> bool {
        let first = self.y[idx[0]];
        idx.iter().all(|&i| self.y[i] == first)
    }
    fn leaf(&self, idx: &[usize]) -> f64 {
        if self.is_pure(idx) {
            return self.y[idx[0]];
        }
        idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64
    }
}

pub(crate) struct Gini<'a> {
    pub y: &'a [usize],
    pub n_classes: usize,
}

impl Criterion for Gini<'_> {
    type Stats = (usize, Vec<u32>);
    type Leaf = Vec<u32>;

    fn empty(&self) -> Self::Stats {
        (0, vec![0; self.n_classes])
    }
    fn add(&self, s: &mut Self::Stats, i: usize) {
        s.0 += 1;
        s.1[self.y[i]] += 1;
    }
    fn remove(&self, s: &mut Self::Stats, i: usize) {
        s.0 -= 1;
        s.1[self.y[i]] -= 1;
    }
    fn score(&self, l: &Self::Stats, r: &Self::Stats) -> f64 {
        let sq = |s: &Self::Stats| {
            s.1.iter().map(|&c| f64::from(c) * f64::from(c)).sum::<f64>() / s.0 as f64
        };
        sq(l) + sq(r)
    }
    fn is_pure(&self, idx: &[usize]) -> bool {
        let first = self.y[idx[0]];
        idx.iter().all(|&i| self.y[i] == first)
    }
    fn leaf(&self, idx: &[usize]) -> Vec<u32> {
        let mut counts = vec![0; self.n_classes];
        for &i in idx {
            counts[self.y[i]] += 1;
        }
        counts
    }
}

struct Candidate {
    score: f64,
    feature: usize,
    threshold: f64,
}

pub(crate) struct Builder<'a, C: Criterion> {
    pub x: &'a [Vec<f64>],
    pub criterion: C,
    pub params: &'a ForestParams,
    pub rng: Rng,
    pub nodes: Vec<Node<C::Leaf>>,
}

impl<C: Criterion> Builder<'_, C> {
    pub fn grow(mut self, idx: &mut [usize]) -> Tree<C::Leaf> {
        self.build(idx, 0);
        Tree { nodes: self.nodes }
    }

    fn make_leaf(&mut self, idx: &[usize]) -> usize {
        self.nodes.push(Node::Leaf {
            value: self.criterion.leaf(idx),
        });
        self.nodes.len() - 1
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let min_leaf = self.params.min_samples_leaf;
        let depth_capped = self.params.max_depth.is_some_and(|d| depth >= d);
        if depth_capped || idx.len() < 2 * min_leaf || self.criterion.is_pure(idx) {
            return self.make_leaf(idx);
        }
        let Some(best) = self.best_split(idx) else {
            return self.make_leaf(idx);
        };
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: self.criterion.leaf(&idx[..1]),
        });
        let mut k = 0;
        for i in 0..idx.len() {
            if self.x[idx[i]][best.feature] <= best.threshold {
                idx.swap(i, k);
                k += 1;
            }
        }
        let (l, r) = idx.split_at_mut(k);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[me] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        me
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<Candidate> {
        let p = self.x[0].len();
        let k = match self.params.max_features {
            FeatureSubsample::All => p,
            FeatureSubsample::Sqrt => ((p as f64).sqrt().floor() as usize).max(1),
            FeatureSubsample::Fraction(f) => ((f * p as f64).floor() as usize).clamp(1, p),
        };
        let mut order: Vec<usize> = (0..p).collect();
        if k < p {
            order.shuffle(&mut self.rng);
        }
        let mut best: Option<Candidate> = None;
        let mut visited = 0;
        let mut sorted = idx.to_vec();
        for &f in &order {
            if visited >= k {
                break;
            }
            sorted.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
            let lo = self.x[sorted[0]][f];
            let hi = self.x[sorted[sorted.len() - 1]][f];
            if lo == hi {
                // constant within the node; does not count toward the budget
                continue;
            }
            visited += 1;
            if let Some(c) = self.scan_feature(&sorted, f) {
                let better = match &best {
                    None => true,
                    Some(b) => {
                        c.score > b.score
                            || (c.score == b.score
                                && (c.feature < b.feature
                                    || (c.feature == b.feature && c.threshold < b.threshold)))
                    }
                };
                if better {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn scan_feature(&self, sorted: &[usize], f: usize) -> Option<Candidate> {
        let n = sorted.len();
        let min_leaf = self.params.min_samples_leaf;
        let mut left = self.criterion.empty();
        let mut right = self.criterion.empty();
        for &i in sorted {
            self.criterion.add(&mut right, i);
        }
        let mut best: Option<Candidate> = None;
        for pos in 0..n - 1 {
            let i = sorted[pos];
            self.criterion.add(&mut left, i);
            self.criterion.remove(&mut right, i);
            let a = self.x[i][f];
            let b = self.x[sorted[pos + 1]][f];
            if a == b || pos + 1 < min_leaf || n - pos - 1 < min_leaf {
                continue;
            }
            let score = self.criterion.score(&left, &right);
            if best.as_ref().is_none_or(|c| score > c.score) {
                let mut threshold = 0.5 * (a + b);
                if threshold >= b {
                    threshold = a;
                }
                best = Some(Candidate {
                    score,
                    feature: f,
                    threshold,
                });
            }
        }
        best
    }
}
