//! Shapley values of a coalition game: exact enumeration, and antithetic
//! permutation sampling (each sampled order is walked forward and reversed).

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Largest player count accepted by [`exact_shapley`].
pub const MAX_EXACT_PLAYERS: usize = 20;

/// Which players belong to a coalition.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CoalitionMask(pub Vec<bool>);

impl CoalitionMask {
    pub fn from_bits(bits: u64, m: usize) -> Self {
        Self((0..m).map(|i| bits >> i & 1 == 1).collect())
    }

    pub fn size(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapleyAttribution {
    /// Value of the empty coalition.
    pub base_value: f64,
    pub phi: Vec<f64>,
}

impl ShapleyAttribution {
    pub fn total(&self) -> f64 {
        self.base_value + self.phi.iter().sum::<f64>()
    }
}

pub trait CoalitionValue {
    fn players(&self) -> usize;
    fn value(&mut self, coalition: &[bool]) -> f64;
}

/// Interventional value function: features outside the coalition are taken
/// from each background row in turn and the model outputs are averaged.
pub struct Interventional<'a, F> {
    model: F,
    x: &'a [f64],
    background: &'a [Vec<f64>],
    buf: Vec<f64>,
}

impl<'a, F: Fn(&[f64]) -> f64> Interventional<'a, F> {
    pub fn new(model: F, x: &'a [f64], background: &'a [Vec<f64>]) -> Result<Self> {
        if background.is_empty() {
            return Err(Error::Data("background set is empty".into()));
        }
        if let Some(b) = background.iter().find(|b| b.len() != x.len()) {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: b.len(),
            });
        }
        Ok(Self {
            model,
            x,
            background,
            buf: vec![0.0; x.len()],
        })
    }
}

impl<F: Fn(&[f64]) -> f64> CoalitionValue for Interventional<'_, F> {
    fn players(&self) -> usize {
        self.x.len()
    }

    fn value(&mut self, coalition: &[bool]) -> f64 {
        let mut total = 0.0;
        for b in self.background {
            for (j, slot) in self.buf.iter_mut().enumerate() {
                *slot = if coalition[j] { self.x[j] } else { b[j] };
            }
            total += (self.model)(&self.buf);
        }
        total / self.background.len() as f64
    }
}

/// Caches coalition values by bitmask; for games with at most 64 players.
pub struct Memoized<G> {
    inner: G,
    cache: HashMap<u64, f64>,
}

impl<G: CoalitionValue> Memoized<G> {
    pub fn new(inner: G) -> Self {
        assert!(inner.players() <= 64, "memoization supports at most 64 players");
        Self {
            inner,
            cache: HashMap::new(),
        }
    }
}

impl<G: CoalitionValue> CoalitionValue for Memoized<G> {
    fn players(&self) -> usize {
        self.inner.players()
    }

    fn value(&mut self, coalition: &[bool]) -> f64 {
        let key = coalition
            .iter()
            .enumerate()
            .fold(0u64, |k, (i, &b)| if b { k | 1 << i } else { k });
        if let Some(v) = self.cache.get(&key) {
            return *v;
        }
        let v = self.inner.value(coalition);
        self.cache.insert(key, v);
        v
    }
}

/// Shapley values by full enumeration of the `2^M` coalitions.
pub fn exact_shapley_game<G: CoalitionValue>(game: &mut G) -> Result<ShapleyAttribution> {
    let m = game.players();
    if m > MAX_EXACT_PLAYERS {
        return Err(Error::Capability(format!(
            "exact Shapley enumeration supports at most {MAX_EXACT_PLAYERS} players, got {m}"
        )));
    }
    let n_sets = 1usize << m;
    let mut values = Vec::with_capacity(n_sets);
    let mut mask = vec![false; m];
    for bits in 0..n_sets {
        for (i, slot) in mask.iter_mut().enumerate() {
            *slot = bits >> i & 1 == 1;
        }
        values.push(game.value(&mask));
    }
    // weight of a coalition of size s not containing i: s!(M-s-1)!/M! = 1 / (M * C(M-1, s))
    let weights: Vec<f64> = (0..m.max(1))
        .map(|s| 1.0 / (m as f64 * binomial(m.saturating_sub(1), s)))
        .collect();
    let mut phi = vec![0.0; m];
    for bits in 0..n_sets {
        let size = (bits as u64).count_ones() as usize;
        for (i, p) in phi.iter_mut().enumerate() {
            if bits >> i & 1 == 0 {
                *p += weights[size] * (values[bits | 1 << i] - values[bits]);
            }
        }
    }
    Ok(ShapleyAttribution {
        base_value: values[0],
        phi,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Antithetic permutation estimate. Every pass telescopes from the empty
/// to the full coalition, so `base_value + Σ phi` equals the full-coalition
/// value regardless of how many permutations are drawn.
pub fn permutation_shapley_game<G: CoalitionValue, R: Rng>(
    game: &mut G,
    n_permutations: usize,
    rng: &mut R,
) -> Result<ShapleyAttribution> {
    if n_permutations == 0 {
        return Err(Error::Config("at least one permutation is required".into()));
    }
    let m = game.players();
    let mut mask = vec![false; m];
    let empty = game.value(&mask);
    let full = game.value(&vec![true; m]);
    let mut phi = vec![0.0; m];
    let mut order: Vec<usize> = (0..m).collect();
    for _ in 0..n_permutations {
        order.shuffle(rng);
        for reverse in [false, true] {
            mask.iter_mut().for_each(|b| *b = false);
            let mut prev = empty;
            for step in 0..m {
                let player = if reverse { order[m - 1 - step] } else { order[step] };
                mask[player] = true;
                let cur = if step + 1 == m { full } else { game.value(&mask) };
                phi[player] += cur - prev;
                prev = cur;
            }
        }
    }
    let passes = (2 * n_permutations) as f64;
    phi.iter_mut().for_each(|p| *p /= passes);
    Ok(ShapleyAttribution {
        base_value: empty,
        phi,
    })
}

/// Exact Shapley values of `model` at `x` under the interventional value
/// function over `background`.
pub fn exact_shapley<F: Fn(&[f64]) -> f64>(
    model: F,
    x: &[f64],
    background: &[Vec<f64>],
) -> Result<ShapleyAttribution> {
    if x.len() > MAX_EXACT_PLAYERS {
        return Err(Error::Capability(format!(
            "exact Shapley enumeration supports at most {MAX_EXACT_PLAYERS} features, got {}",
            x.len()
        )));
    }
    exact_shapley_game(&mut Interventional::new(model, x, background)?)
}

pub fn permutation_shapley<F: Fn(&[f64]) -> f64>(
    model: F,
    x: &[f64],
    background: &[Vec<f64>],
    n_permutations: usize,
    seed: u64,
) -> Result<ShapleyAttribution> {
    let mut rng = seed::rng(seed);
    permutation_shapley_game(&mut Interventional::new(model, x, background)?, n_permutations, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bg() -> Vec<Vec<f64>> {
        vec![vec![0.0, 1.0, 2.0], vec![1.0, 3.0, -1.0], vec![0.5, 0.5, 0.5]]
    }

    #[test]
    fn constant_model() {
        let a = exact_shapley(|_: &[f64]| 4.0, &[1.0, 2.0, 3.0], &bg()).unwrap();
        assert_eq!(a.base_value, 4.0);
        assert!(a.phi.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn single_player() {
        let background = vec![vec![1.0], vec![3.0]];
        let model = |x: &[f64]| x[0] * x[0];
        let a = exact_shapley(model, &[2.0], &background).unwrap();
        assert_eq!(a.base_value, 5.0);
        assert_eq!(a.phi, vec![4.0 - 5.0]);
    }

    #[test]
    fn additive_model_hand_values() {
        let background = vec![vec![0.0, 2.0], vec![2.0, 4.0]];
        let a = exact_shapley(|x: &[f64]| x[0] + x[1], &[5.0, 1.0], &background).unwrap();
        // phi_i = x_i - mean(background column i)
        assert!((a.phi[0] - 4.0).abs() < 1e-12);
        assert!((a.phi[1] + 2.0).abs() < 1e-12);
        assert!((a.base_value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn dummy_and_symmetry() {
        let model = |x: &[f64]| x[0] * x[1] + (x[0] + x[1]).sin();
        let background = vec![vec![0.2, 0.2, 7.0], vec![1.0, 1.0, -3.0]];
        let a = exact_shapley(model, &[0.7, 0.7, 2.0], &background).unwrap();
        assert!(a.phi[2].abs() <= 1e-12);
        assert!((a.phi[0] - a.phi[1]).abs() <= 1e-9);
    }

    #[test]
    fn efficiency_of_permutation_estimate() {
        let model = |x: &[f64]| x[0] * x[1] - x[2].powi(3) + x[0];
        let x = [0.3, -1.2, 2.0];
        for seed in 0..5 {
            for n in [1, 3] {
                let a = permutation_shapley(model, &x, &bg(), n, seed).unwrap();
                let full = model(&x);
                assert!((a.total() - full).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn guards() {
        let x = vec![0.0; 21];
        let background = vec![vec![0.0; 21]];
        assert!(matches!(
            exact_shapley(|_: &[f64]| 0.0, &x, &background),
            Err(Error::Capability(_))
        ));
        assert!(permutation_shapley(|_: &[f64]| 0.0, &[1.0], &[vec![0.0]], 0, 1).is_err());
        assert!(permutation_shapley(|_: &[f64]| 0.0, &[1.0], &[], 1, 1).is_err());
    }

    #[test]
    fn memoization_is_transparent() {
        let model = |x: &[f64]| x[0] * x[1] - x[2];
        let x = [1.0, 2.0, 3.0];
        let background = bg();
        let plain = permutation_shapley(model, &x, &background, 4, 9).unwrap();
        let mut game = Memoized::new(Interventional::new(model, &x, &background).unwrap());
        let memo = permutation_shapley_game(&mut game, 4, &mut seed::rng(9)).unwrap();
        assert_eq!(plain, memo);
    }
}
