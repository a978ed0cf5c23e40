//! The three built-in optimizers. Every candidate is canonicalized before it
//! is evaluated, so inactive variables always sit at their defaults and the
//! search never wastes moves on them.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::design::sample_value;
use crate::problem::{MixedVariableProblem, Value, VariableKind};
use crate::seed::Rng as SeedRng;

/// Records every evaluation of one run.
pub(crate) struct Recorder<'a> {
    problem: &'a MixedVariableProblem,
    budget: usize,
    pub values: Vec<f64>,
}

impl<'a> Recorder<'a> {
    pub fn new(problem: &'a MixedVariableProblem, budget: usize) -> Self {
        Self {
            problem,
            budget,
            values: Vec::with_capacity(budget),
        }
    }

    fn left(&self) -> usize {
        self.budget - self.values.len()
    }

    fn eval(&mut self, point: &[Value]) -> f64 {
        let v = self.problem.evaluate_unchecked(point);
        self.values.push(v);
        v
    }
}

fn random_point(problem: &MixedVariableProblem, rng: &mut SeedRng) -> Vec<Value> {
    let mut p: Vec<Value> = problem.variables().iter().map(|v| sample_value(v, rng)).collect();
    problem.canonicalize(&mut p);
    p
}

/// Mutates active coordinates: Gaussian steps of relative size `sigmas[i]`
/// on continuous variables, geometric steps on integers, uniform resampling
/// of categoricals. Each coordinate changes with probability `1/k` over the
/// `k` active ones (at least one changes); with `all_numeric` every active
/// numeric coordinate moves.
fn mutate(
    problem: &MixedVariableProblem,
    point: &[Value],
    sigmas: &[f64],
    all_numeric: bool,
    rng: &mut SeedRng,
) -> Vec<Value> {
    let vars = problem.variables();
    let active: Vec<usize> = problem
        .active_mask(point)
        .iter()
        .enumerate()
        .filter_map(|(i, &a)| a.then_some(i))
        .collect();
    let p = 1.0 / active.len() as f64;
    let mut chosen: Vec<usize> = active
        .iter()
        .copied()
        .filter(|&i| (all_numeric && !vars[i].is_categorical()) || rng.random_bool(p))
        .collect();
    if chosen.is_empty() {
        chosen.push(*active.choose(rng).expect("at least one variable is active"));
    }
    let gauss = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = point.to_vec();
    for i in chosen {
        out[i] = match (&vars[i].kind, point[i]) {
            (VariableKind::Continuous { lower, upper }, Value::Real(x)) => {
                let step = sigmas[i] * (upper - lower) * gauss.sample(rng);
                Value::Real(reflect(x + step, *lower, *upper))
            }
            (VariableKind::Integer { lower, upper }, Value::Integer(k)) => {
                if lower == upper {
                    Value::Integer(k)
                } else {
                    // geometric step length with mean about sigma * range
                    let mean = (sigmas[i] * (upper - lower) as f64).max(1.0);
                    let q = 1.0 / mean;
                    let mut len = 1i64;
                    while !rng.random_bool(q.min(1.0)) && len < upper - lower {
                        len += 1;
                    }
                    let sign = if rng.random_bool(0.5) { 1 } else { -1 };
                    let mut next = k + sign * len;
                    if next < *lower || next > *upper {
                        next = k - sign * len;
                    }
                    Value::Integer(next.clamp(*lower, *upper))
                }
            }
            (VariableKind::Categorical { categories }, Value::Category(c)) => {
                if categories.len() < 2 {
                    Value::Category(c)
                } else {
                    let r = rng.random_range(0..categories.len() - 1);
                    Value::Category(if r >= c { r + 1 } else { r })
                }
            }
            (_, v) => v,
        };
    }
    problem.canonicalize(&mut out);
    out
}

fn reflect(mut x: f64, lower: f64, upper: f64) -> f64 {
    let width = upper - lower;
    for _ in 0..4 {
        if x < lower {
            x = 2.0 * lower - x;
        } else if x > upper {
            x = 2.0 * upper - x;
        } else {
            return x;
        }
    }
    lower + width * 0.5
}

pub(crate) fn random_search(rec: &mut Recorder, rng: &mut SeedRng) {
    while rec.left() > 0 {
        let p = random_point(rec.problem, rng);
        rec.eval(&p);
    }
}

const MU: usize = 3;
const LAMBDA: usize = 12;

struct Individual {
    point: Vec<Value>,
    sigmas: Vec<f64>,
    value: f64,
}

/// (μ+λ) evolution strategy with self-adapted step sizes, one per variable.
pub(crate) fn mixed_evolutionary(rec: &mut Recorder, rng: &mut SeedRng) {
    let d = rec.problem.dim();
    let tau_global = 1.0 / (2.0 * d as f64).sqrt();
    let tau_local = 1.0 / (2.0 * (d as f64).sqrt()).sqrt();
    let gauss = Normal::new(0.0, 1.0).expect("unit normal");
    let mut pop: Vec<Individual> = Vec::with_capacity(MU + LAMBDA);
    while pop.len() < MU && rec.left() > 0 {
        let point = random_point(rec.problem, rng);
        let value = rec.eval(&point);
        pop.push(Individual {
            point,
            sigmas: vec![0.2; d],
            value,
        });
    }
    while rec.left() > 0 {
        for _ in 0..LAMBDA.min(rec.left()) {
            let parent = &pop[rng.random_range(0..pop.len())];
            let g = tau_global * gauss.sample(rng);
            let sigmas: Vec<f64> = parent
                .sigmas
                .iter()
                .map(|s| (s * (g + tau_local * gauss.sample(rng)).exp()).clamp(1e-8, 0.5))
                .collect();
            let point = mutate(rec.problem, &parent.point, &sigmas, true, rng);
            let value = rec.eval(&point);
            pop.push(Individual { point, sigmas, value });
        }
        // stable sort keeps older individuals first among equals
        pop.sort_by(|a, b| a.value.total_cmp(&b.value));
        pop.truncate(MU);
    }
}

/// Simulated annealing from the best of a short random warm-up, with an
/// exponentially decaying temperature and a shrinking neighbourhood.
pub(crate) fn mixed_annealing(rec: &mut Recorder, rng: &mut SeedRng) {
    let warmup = (rec.budget / 10).clamp(1, rec.budget);
    let mut current = random_point(rec.problem, rng);
    let mut fc = rec.eval(&current);
    let mut seen = vec![fc];
    while rec.values.len() < warmup && rec.left() > 0 {
        let p = random_point(rec.problem, rng);
        let v = rec.eval(&p);
        seen.push(v);
        if v < fc {
            current = p;
            fc = v;
        }
    }
    let m = seen.iter().sum::<f64>() / seen.len() as f64;
    let sd = (seen.iter().map(|v| (v - m).powi(2)).sum::<f64>() / seen.len() as f64).sqrt();
    let t0 = if sd > 0.0 { sd } else { 1.0 };
    let steps = rec.left().max(1) as f64;
    let mut sigmas = vec![0.0; rec.problem.dim()];
    let mut k = 0.0;
    while rec.left() > 0 {
        let frac = k / steps;
        let temp = t0 * 1e-4f64.powf(frac);
        let sigma = 0.3 * (1.0 - frac) + 0.01;
        sigmas.fill(sigma);
        let cand = mutate(rec.problem, &current, &sigmas, false, rng);
        let v = rec.eval(&cand);
        if v <= fc || rng.random::<f64>() < (-(v - fc) / temp).exp() {
            current = cand;
            fc = v;
        }
        k += 1.0;
    }
}
