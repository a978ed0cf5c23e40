//! Built-in optimizer portfolio, run traces, per-instance targets and ERT.

mod algorithms;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{csv_reader, csv_writer, fmt_f64, parse_f64};
use crate::problem::MixedVariableProblem;
use crate::seed;
use algorithms::Recorder;

pub const DEFAULT_BUDGET_MULTIPLIER: usize = 100;
pub const DEFAULT_REPETITIONS: usize = 20;
pub const TARGET_QUANTILE: f64 = 0.01;

/// Portfolio members in declaration order, which also breaks ties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    RandomSearch,
    MixedEvolutionary,
    MixedAnnealing,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [
        Algorithm::RandomSearch,
        Algorithm::MixedEvolutionary,
        Algorithm::MixedAnnealing,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Algorithm::RandomSearch => "random_search",
            Algorithm::MixedEvolutionary => "mixed_evolutionary",
            Algorithm::MixedAnnealing => "mixed_annealing",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

/// Ids of the portfolio in declaration order.
pub fn portfolio_ids() -> Vec<String> {
    Algorithm::ALL.iter().map(|a| a.id().to_string()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub instance_id: String,
    pub algorithm_id: String,
    pub repetition: usize,
    /// Objective value of every evaluation, in order.
    pub values: Vec<f64>,
    pub best_so_far: Vec<f64>,
    pub seed: u64,
}

impl RunTrace {
    fn new(instance_id: &str, algorithm: Algorithm, repetition: usize, values: Vec<f64>, seed: u64) -> Self {
        let best_so_far = values
            .iter()
            .scan(f64::INFINITY, |best, &v| {
                *best = best.min(v);
                Some(*best)
            })
            .collect();
        Self {
            instance_id: instance_id.to_string(),
            algorithm_id: algorithm.id().to_string(),
            repetition,
            values,
            best_so_far,
            seed,
        }
    }

    pub fn budget(&self) -> usize {
        self.best_so_far.len()
    }
}

/// Runs `algorithm_id` for `repetitions` independent runs of `budget`
/// evaluations each. Repetition `r` is seeded with `derive_seed(seed, r)`.
pub fn run_algorithm(
    problem: &MixedVariableProblem,
    algorithm_id: &str,
    budget: usize,
    repetitions: usize,
    seed: u64,
) -> Result<Vec<RunTrace>> {
    let algorithm: Algorithm = algorithm_id.parse()?;
    if budget == 0 {
        return Err(Error::Config("budget must be positive".into()));
    }
    Ok((0..repetitions)
        .map(|rep| {
            let run_seed = seed::derive_seed(seed, rep as u64);
            let mut rng = seed::rng(run_seed);
            let mut rec = Recorder::new(problem, budget);
            match algorithm {
                Algorithm::RandomSearch => algorithms::random_search(&mut rec, &mut rng),
                Algorithm::MixedEvolutionary => algorithms::mixed_evolutionary(&mut rec, &mut rng),
                Algorithm::MixedAnnealing => algorithms::mixed_annealing(&mut rec, &mut rng),
            }
            RunTrace::new(problem.instance_id(), algorithm, rep, rec.values, run_seed)
        })
        .collect())
}

/// Linear-interpolation quantile (order statistic position `1 + q (n - 1)`).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let h = (s.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

/// The 0.01-quantile of every value evaluated in `traces`.
pub fn compute_target(traces: &[RunTrace]) -> Result<f64> {
    let all: Vec<f64> = traces.iter().flat_map(|t| t.values.iter().copied()).collect();
    if all.is_empty() {
        return Err(Error::Data("no evaluations to derive a target from".into()));
    }
    Ok(quantile(&all, TARGET_QUANTILE))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerformanceRecord {
    pub instance_id: String,
    pub algorithm_id: String,
    pub ert: f64,
    pub successes: usize,
    pub total_evals: usize,
}

/// 1-based index of the first evaluation reaching `target`.
pub fn hitting_time(trace: &RunTrace, target: f64) -> Option<usize> {
    trace.best_so_far.iter().position(|&b| b <= target).map(|i| i + 1)
}

/// ERT of one algorithm's runs; failed runs count the whole budget.
pub fn compute_ert(traces: &[RunTrace], target: f64, budget: usize) -> PerformanceRecord {
    let mut successes = 0;
    let mut total_evals = 0;
    for t in traces {
        match hitting_time(t, target) {
            Some(h) => {
                successes += 1;
                total_evals += h;
            }
            None => total_evals += budget,
        }
    }
    let ert = if successes > 0 {
        total_evals as f64 / successes as f64
    } else {
        f64::INFINITY
    };
    let (instance_id, algorithm_id) = traces
        .first()
        .map(|t| (t.instance_id.clone(), t.algorithm_id.clone()))
        .unwrap_or_default();
    PerformanceRecord {
        instance_id,
        algorithm_id,
        ert,
        successes,
        total_evals,
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct PerformanceTable {
    /// Algorithm ids in declaration order.
    pub algorithms: Vec<String>,
    pub records: BTreeMap<(String, String), PerformanceRecord>,
    pub targets: BTreeMap<String, f64>,
}

impl PerformanceTable {
    pub fn instances(&self) -> Vec<&str> {
        self.targets.keys().map(String::as_str).collect()
    }

    pub fn get(&self, instance: &str, algorithm: &str) -> Option<&PerformanceRecord> {
        self.records.get(&(instance.to_string(), algorithm.to_string()))
    }

    /// ERT of `algorithm` on `instance`; missing entries count as unsolved.
    pub fn ert(&self, instance: &str, algorithm: &str) -> f64 {
        self.get(instance, algorithm).map_or(f64::INFINITY, |r| r.ert)
    }

    /// Best ERT over the portfolio.
    pub fn vbs_ert(&self, instance: &str) -> f64 {
        self.algorithms
            .iter()
            .map(|a| self.ert(instance, a))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn insert(&mut self, record: PerformanceRecord) {
        self.records
            .insert((record.instance_id.clone(), record.algorithm_id.clone()), record);
    }

    /// Checks completeness and that every instance is solved by someone.
    pub fn validate(&self) -> Result<()> {
        for inst in self.instances() {
            for a in &self.algorithms {
                if self.get(inst, a).is_none() {
                    return Err(Error::Data(format!("no record for `{a}` on `{inst}`")));
                }
            }
            if !self.vbs_ert(inst).is_finite() {
                return Err(Error::Data(format!("no algorithm reaches the target on `{inst}`")));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = csv_writer(path)?;
        w.write_record(["instance", "algorithm", "ert", "successes", "total_evals", "target"])?;
        for inst in self.instances() {
            for a in &self.algorithms {
                if let Some(r) = self.get(inst, a) {
                    w.write_record([
                        inst,
                        a,
                        &fmt_f64(r.ert),
                        &r.successes.to_string(),
                        &r.total_evals.to_string(),
                        &fmt_f64(self.targets[inst]),
                    ])?;
                }
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut table = PerformanceTable::default();
        for row in csv_reader(path)?.records() {
            let row = row?;
            if row.len() != 6 {
                return Err(Error::Data(format!("performance row has {} cells", row.len())));
            }
            let count = |i: usize| {
                row[i]
                    .parse::<usize>()
                    .map_err(|_| Error::Data(format!("bad count `{}`", &row[i])))
            };
            let algorithm_id = row[1].to_string();
            if !table.algorithms.contains(&algorithm_id) {
                table.algorithms.push(algorithm_id.clone());
            }
            table.targets.insert(row[0].to_string(), parse_f64(&row[5])?);
            table.insert(PerformanceRecord {
                instance_id: row[0].to_string(),
                algorithm_id,
                ert: parse_f64(&row[2])?,
                successes: count(3)?,
                total_evals: count(4)?,
            });
        }
        Ok(table)
    }
}

/// Writes one instance's traces: algorithm, repetition, eval (1-based),
/// value, best_so_far.
pub fn write_traces(path: &Path, traces: &[RunTrace]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["algorithm", "repetition", "eval", "value", "best_so_far"])?;
    for t in traces {
        let rep = t.repetition.to_string();
        for (i, (v, b)) in t.values.iter().zip(&t.best_so_far).enumerate() {
            w.write_record([&t.algorithm_id, &rep, &(i + 1).to_string(), &fmt_f64(*v), &fmt_f64(*b)])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortfolioConfig {
    pub budget_multiplier: usize,
    pub repetitions: usize,
}

impl Default for PortfolioConfig {
    fn default() -> Self {
        Self {
            budget_multiplier: DEFAULT_BUDGET_MULTIPLIER,
            repetitions: DEFAULT_REPETITIONS,
        }
    }
}

/// All runs on one instance, its target, and one record per algorithm.
#[derive(Clone, Debug)]
pub struct InstanceBenchmark {
    pub traces: Vec<RunTrace>,
    pub target: f64,
    pub records: Vec<PerformanceRecord>,
}

pub fn benchmark_instance(
    problem: &MixedVariableProblem,
    config: &PortfolioConfig,
    seed: u64,
) -> Result<InstanceBenchmark> {
    let budget = config.budget_multiplier * problem.dim();
    let per_algorithm = Algorithm::ALL
        .iter()
        .map(|a| {
            let s = seed::derive_seed_str(seed, a.id());
            run_algorithm(problem, a.id(), budget, config.repetitions, s)
        })
        .collect::<Result<Vec<_>>>()?;
    let traces: Vec<RunTrace> = per_algorithm.iter().flatten().cloned().collect();
    let target = compute_target(&traces)?;
    let records = per_algorithm
        .iter()
        .zip(Algorithm::ALL)
        .map(|(runs, a)| {
            let mut r = compute_ert(runs, target, budget);
            r.instance_id = problem.instance_id().to_string();
            r.algorithm_id = a.id().to_string();
            r
        })
        .collect();
    Ok(InstanceBenchmark {
        traces,
        target,
        records,
    })
}

/// Benchmarks every problem; instance `i` is seeded from its id.
pub fn benchmark_suite(
    problems: &[MixedVariableProblem],
    config: &PortfolioConfig,
    seed: u64,
) -> Result<(PerformanceTable, Vec<InstanceBenchmark>)> {
    if config.budget_multiplier == 0 || config.repetitions == 0 {
        return Err(Error::Config("budget multiplier and repetitions must be positive".into()));
    }
    let runs = problems
        .par_iter()
        .map(|p| benchmark_instance(p, config, seed::derive_seed_str(seed, p.instance_id())))
        .collect::<Result<Vec<_>>>()?;
    let mut table = PerformanceTable {
        algorithms: portfolio_ids(),
        ..Default::default()
    };
    for (p, b) in problems.iter().zip(&runs) {
        table.targets.insert(p.instance_id().to_string(), b.target);
        for r in &b.records {
            table.insert(r.clone());
        }
    }
    table.validate()?;
    Ok((table, runs))
}
