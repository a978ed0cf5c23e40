//! Seeded synthetic suite of mixed-variable problems.
//!
//! Each instance combines a continuous base landscape over the numeric
//! variables with per-category additive offsets and per-category shifts of
//! the optimum along a random subset of numeric axes, so categorical choices
//! change both the level and the location of the basin.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{MixedVariableProblem, Objective, Value, VariableKind, VariableSpec};
use crate::error::{Error, Result};
use crate::seed;

fn default_levels() -> usize {
    3
}

/// A family of instances sharing one variable layout.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub name: String,
    pub continuous: usize,
    pub integer: usize,
    pub categorical: usize,
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Makes the last continuous variable conditional on the first
    /// categorical variable taking its first level.
    #[serde(default)]
    pub hierarchical: bool,
    pub count: usize,
}

impl Template {
    pub fn new(name: &str, continuous: usize, integer: usize, categorical: usize, count: usize) -> Self {
        Self {
            name: name.to_string(),
            continuous,
            integer,
            categorical,
            levels: default_levels(),
            hierarchical: false,
            count,
        }
    }

    pub fn hierarchical(mut self) -> Self {
        self.hierarchical = true;
        self
    }

    pub fn dim(&self) -> usize {
        self.continuous + self.integer + self.categorical
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub templates: Vec<Template>,
}

impl SuiteConfig {
    fn validate(&self) -> Result<()> {
        for (i, t) in self.templates.iter().enumerate() {
            if t.dim() == 0 {
                return Err(Error::Config(format!("template `{}` has no variables", t.name)));
            }
            if t.categorical > 0 && t.levels < 2 {
                return Err(Error::Config(format!(
                    "template `{}` needs at least two levels per categorical variable",
                    t.name
                )));
            }
            if self.templates[..i].iter().any(|o| o.name == t.name) {
                return Err(Error::Config(format!("duplicate template name `{}`", t.name)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Landscape {
    Sphere,
    Ellipsoid,
    Rastrigin,
}

/// Everything needed to rebuild one instance bit-exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub instance_id: String,
    pub template: Template,
    pub seed: u64,
    pub variables: Vec<VariableSpec>,
}

impl ManifestEntry {
    pub fn build(&self) -> Result<MixedVariableProblem> {
        let (variables, objective) = SyntheticObjective::generate(&self.template, self.seed)?;
        if variables != self.variables {
            return Err(Error::Data(format!(
                "manifest entry `{}` does not match its template and seed",
                self.instance_id
            )));
        }
        MixedVariableProblem::new(self.instance_id.clone(), variables, Arc::new(objective))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub seed: u64,
    pub instances: Vec<ManifestEntry>,
}

impl SuiteManifest {
    pub fn generate(config: &SuiteConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut instances = Vec::new();
        for t in &config.templates {
            for k in 0..t.count {
                let instance_id = format!("{}-{k:03}", t.name);
                let inst_seed = seed::derive_seed_str(seed, &instance_id);
                let (variables, _) = SyntheticObjective::generate(t, inst_seed)?;
                instances.push(ManifestEntry {
                    instance_id,
                    template: t.clone(),
                    seed: inst_seed,
                    variables,
                });
            }
        }
        Ok(Self { seed, instances })
    }

    pub fn problems(&self) -> Result<Vec<MixedVariableProblem>> {
        self.instances.iter().map(ManifestEntry::build).collect()
    }
}

pub fn generate_synthetic_suite(config: &SuiteConfig, seed: u64) -> Result<Vec<MixedVariableProblem>> {
    SuiteManifest::generate(config, seed)?.problems()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SyntheticObjective {
    pub landscape: Landscape,
    numeric: Vec<NumericAxis>,
    categorical: Vec<CategoricalEffect>,
    /// Axis weights of the base landscape.
    weights: Vec<f64>,
    optimum: Vec<f64>,
    /// Pairwise level interactions, used only when there is no numeric axis.
    interactions: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct NumericAxis {
    var: usize,
    lower: f64,
    upper: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CategoricalEffect {
    var: usize,
    /// Additive offset per level.
    offsets: Vec<f64>,
    /// Shift of the optimum per level, one entry per numeric axis.
    shifts: Vec<Vec<f64>>,
}

const BOX: f64 = 5.0;

impl SyntheticObjective {
    /// Draws the variable layout and the objective for one instance.
    pub fn generate(t: &Template, seed: u64) -> Result<(Vec<VariableSpec>, Self)> {
        if t.dim() == 0 {
            return Err(Error::Config(format!("template `{}` has no variables", t.name)));
        }
        let mut rng = seed::rng(seed);
        let mut variables = Vec::with_capacity(t.dim());
        // Categorical variables come first so they can act as activation parents.
        for c in 0..t.categorical {
            variables.push(VariableSpec::categorical(
                format!("cat{c}"),
                (0..t.levels).map(|l| format!("l{l}")),
            ));
        }
        for i in 0..t.continuous {
            variables.push(VariableSpec::continuous(format!("x{i}"), -BOX, BOX));
        }
        for i in 0..t.integer {
            let upper = rng.random_range(4..=16);
            variables.push(VariableSpec::integer(format!("k{i}"), 0, upper));
        }
        if t.hierarchical && t.categorical > 0 && t.continuous > 0 {
            let last = t.categorical + t.continuous - 1;
            variables[last] = variables[last]
                .clone()
                .active_when("cat0", vec![Value::Category(0)]);
        }

        let numeric: Vec<NumericAxis> = variables
            .iter()
            .enumerate()
            .filter_map(|(var, spec)| match spec.kind {
                VariableKind::Continuous { lower, upper } => Some(NumericAxis { var, lower, upper }),
                VariableKind::Integer { lower, upper } => Some(NumericAxis {
                    var,
                    lower: lower as f64,
                    upper: upper as f64,
                }),
                VariableKind::Categorical { .. } => None,
            })
            .collect();
        let n_num = numeric.len();

        let landscape = match rng.random_range(0..3) {
            0 => Landscape::Sphere,
            1 => Landscape::Ellipsoid,
            _ => Landscape::Rastrigin,
        };
        let weights: Vec<f64> = match landscape {
            // condition number 1e6, weights centred on 1
            Landscape::Ellipsoid if n_num > 1 => {
                let mut w: Vec<f64> = (0..n_num)
                    .map(|i| 10f64.powf(6.0 * i as f64 / (n_num - 1) as f64 - 3.0))
                    .collect();
                w.shuffle(&mut rng);
                w
            }
            Landscape::Ellipsoid => vec![10.0],
            _ => vec![1.0; n_num],
        };
        let optimum: Vec<f64> = (0..n_num).map(|_| rng.random_range(-3.0..3.0)).collect();

        // Offsets are spread so that levels always differ by a visible margin.
        let spread = rng.random_range(0.5..2.0) * (n_num.max(1) as f64);
        let categorical = (0..t.categorical)
            .map(|c| {
                let mut ranks: Vec<usize> = (0..t.levels).collect();
                ranks.shuffle(&mut rng);
                let offsets = ranks
                    .iter()
                    .map(|&r| spread * (r as f64 + rng.random_range(0.1..0.6)))
                    .collect();
                let mut axes: Vec<bool> = (0..n_num).map(|_| rng.random_bool(0.5)).collect();
                if n_num > 0 && !axes.iter().any(|&a| a) {
                    let k = rng.random_range(0..n_num);
                    axes[k] = true;
                }
                let shifts = (0..t.levels)
                    .map(|_| {
                        axes.iter()
                            .map(|&on| if on { rng.random_range(-1.5..1.5) } else { 0.0 })
                            .collect()
                    })
                    .collect();
                CategoricalEffect {
                    var: c,
                    offsets,
                    shifts,
                }
            })
            .collect();

        let interactions = if n_num == 0 && t.categorical > 1 {
            (0..t.categorical - 1)
                .map(|_| {
                    (0..t.levels)
                        .map(|_| (0..t.levels).map(|_| rng.random_range(0.0..spread)).collect())
                        .collect()
                })
                .collect()
        } else {
            Vec::new()
        };

        Ok((
            variables,
            Self {
                landscape,
                numeric,
                categorical,
                weights,
                optimum,
                interactions,
            },
        ))
    }

    fn base(&self, w: &[f64]) -> f64 {
        match self.landscape {
            Landscape::Sphere | Landscape::Ellipsoid => {
                w.iter().zip(&self.weights).map(|(v, a)| a * v * v).sum()
            }
            Landscape::Rastrigin => w
                .iter()
                .map(|v| v * v - 10.0 * (2.0 * PI * v).cos() + 10.0)
                .sum(),
        }
    }
}

impl Objective for SyntheticObjective {
    fn evaluate(&self, point: &[Value]) -> f64 {
        let mut w: Vec<f64> = self
            .numeric
            .iter()
            .zip(&self.optimum)
            .map(|(ax, o)| {
                let u = (point[ax.var].as_f64() - ax.lower) / (ax.upper - ax.lower);
                2.0 * BOX * u - BOX - o
            })
            .collect();
        let mut offset = 0.0;
        for eff in &self.categorical {
            let level = point[eff.var].as_f64() as usize;
            offset += eff.offsets[level];
            for (wk, s) in w.iter_mut().zip(&eff.shifts[level]) {
                *wk -= s;
            }
        }
        for (c, table) in self.interactions.iter().enumerate() {
            let a = point[self.categorical[c].var].as_f64() as usize;
            let b = point[self.categorical[c + 1].var].as_f64() as usize;
            offset += table[a][b];
        }
        self.base(&w) + offset
    }
}
