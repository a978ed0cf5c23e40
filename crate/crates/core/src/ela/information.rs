//! Information content of a nearest-neighbour tour through the design.
//!
//! Consecutive tour points give slopes `s_i`; each slope becomes a symbol in
//! {-1, 0, +1} at sensitivity `ε`. The entropy of unequal consecutive symbol
//! pairs and the density of sign changes are tracked over a grid of `ε`.

use rand::Rng;

use super::{check_design, distance};
use crate::design::NumericDesign;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Debug, PartialEq)]
pub struct IcSettings {
    /// Number of log-spaced positive sensitivities.
    pub grid_points: usize,
    pub log10_min: f64,
    pub log10_max: f64,
    /// Entropy below which the landscape counts as settled.
    pub settling_threshold: f64,
    /// Fraction of `M(0)` that defines the half partial-information point.
    pub info_fraction: f64,
}

impl Default for IcSettings {
    fn default() -> Self {
        Self {
            grid_points: 1000,
            log10_min: -5.0,
            log10_max: 15.0,
            settling_threshold: 0.05,
            info_fraction: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InformationContent {
    pub h_max: f64,
    pub eps_s: f64,
    pub eps_max: f64,
    pub eps_ratio: f64,
    pub m0: f64,
}

impl InformationContent {
    pub fn values(&self) -> [f64; 5] {
        [self.h_max, self.eps_s, self.eps_max, self.eps_ratio, self.m0]
    }
}

/// Greedy nearest-neighbour ordering starting from `start`; ties go to the
/// lowest row index.
pub(crate) fn nearest_neighbour_tour(x: &[Vec<f64>], start: usize) -> Vec<usize> {
    let n = x.len();
    let mut visited = vec![false; n];
    let mut tour = Vec::with_capacity(n);
    let mut cur = start;
    visited[cur] = true;
    tour.push(cur);
    for _ in 1..n {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for j in 0..n {
            if !visited[j] {
                let dj = distance(&x[cur], &x[j]);
                if dj < best_d {
                    best_d = dj;
                    best = j;
                }
            }
        }
        visited[best] = true;
        tour.push(best);
        cur = best;
    }
    tour
}

fn symbol(s: f64, eps: f64) -> i8 {
    if s < -eps {
        -1
    } else if s > eps {
        1
    } else {
        0
    }
}

/// Entropy (log base 6) of the six unequal consecutive symbol pairs.
pub(crate) fn entropy(symbols: &[i8]) -> f64 {
    if symbols.len() < 2 {
        return 0.0;
    }
    let mut counts = [[0usize; 3]; 3];
    for w in symbols.windows(2) {
        counts[(w[0] + 1) as usize][(w[1] + 1) as usize] += 1;
    }
    let total = (symbols.len() - 1) as f64;
    let mut h = 0.0;
    for (a, row) in counts.iter().enumerate() {
        for (b, &c) in row.iter().enumerate() {
            if a != b && c > 0 {
                let p = c as f64 / total;
                h -= p * p.ln() / 6f64.ln();
            }
        }
    }
    h
}

/// Share of symbols that are non-zero and differ from the previous non-zero
/// symbol (the first non-zero symbol always counts).
pub(crate) fn partial_information(symbols: &[i8]) -> f64 {
    if symbols.is_empty() {
        return 0.0;
    }
    let mut last = 0i8;
    let mut count = 0usize;
    for &s in symbols {
        if s != 0 && s != last {
            count += 1;
            last = s;
        }
    }
    count as f64 / symbols.len() as f64
}

pub fn information_content(
    d: &NumericDesign,
    settings: &IcSettings,
    seed: u64,
) -> Result<InformationContent> {
    check_design(d)?;
    let n = d.n_rows();
    if n < 3 {
        return Err(Error::Data("information content needs at least 3 rows".into()));
    }
    let start = seed::rng(seed).random_range(0..n);
    let tour = nearest_neighbour_tour(&d.x, start);
    let slopes: Vec<f64> = tour
        .windows(2)
        .filter_map(|w| {
            let dist = distance(&d.x[w[0]], &d.x[w[1]]);
            // coincident points carry no slope
            (dist > 0.0).then(|| (d.y[w[1]] - d.y[w[0]]) / dist)
        })
        .collect();

    let max_abs = slopes.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let scale = if max_abs > 0.0 { max_abs } else { 1.0 };
    let k = settings.grid_points;
    let positive: Vec<f64> = (0..k)
        .map(|i| {
            let t = if k > 1 { i as f64 / (k - 1) as f64 } else { 0.0 };
            scale * 10f64.powf(settings.log10_min + t * (settings.log10_max - settings.log10_min))
        })
        .collect();

    let mut symbols = vec![0i8; slopes.len()];
    let mut eval = |eps: f64| {
        for (sym, s) in symbols.iter_mut().zip(&slopes) {
            *sym = symbol(*s, eps);
        }
        (entropy(&symbols), partial_information(&symbols))
    };

    let (h0, m0) = eval(0.0);
    let mut h_max = h0;
    let mut argmax_pos: Option<(f64, f64)> = None;
    let mut eps_s = None;
    let mut eps_ratio = None;
    for &eps in &positive {
        let (h, m) = eval(eps);
        h_max = h_max.max(h);
        if argmax_pos.is_none_or(|(best, _)| h > best) {
            argmax_pos = Some((h, eps));
        }
        if eps_s.is_none() && h < settings.settling_threshold {
            eps_s = Some(eps);
        }
        if eps_ratio.is_none() && m < settings.info_fraction * m0 {
            eps_ratio = Some(eps);
        }
    }
    // thresholds never crossed on the grid resolve to its largest value
    let last = *positive.last().expect("grid is non-empty");
    let eps_max = argmax_pos.map_or(last, |(_, e)| e);
    Ok(InformationContent {
        h_max,
        eps_s: eps_s.unwrap_or(last).log10(),
        eps_max: eps_max.log10(),
        eps_ratio: eps_ratio.unwrap_or(last).log10(),
        m0,
    })
}
