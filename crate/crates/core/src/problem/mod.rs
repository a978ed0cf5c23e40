//! Mixed-variable problems: continuous, integer and categorical decision
//! variables, optional hierarchical activation, and relaxed evaluation.
//!
//! Inactive variables (those whose activation condition is violated) are
//! replaced by a canonical default before the objective is called, so the
//! objective is constant along every inactive dimension.

mod suite;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use suite::{
    generate_synthetic_suite, Landscape, ManifestEntry, SuiteConfig, SuiteManifest,
    SyntheticObjective, Template,
};

/// One coordinate of a point in a mixed search space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    Real(f64),
    Integer(i64),
    /// Index into the variable's category list.
    Category(usize),
}

impl Value {
    /// Numeric view of the value; categories map to their integer code.
    pub fn as_f64(&self) -> f64 {
        match *self {
            Value::Real(v) => v,
            Value::Integer(v) => v as f64,
            Value::Category(c) => c as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VariableKind {
    Continuous { lower: f64, upper: f64 },
    Integer { lower: i64, upper: i64 },
    Categorical { categories: Vec<String> },
}

/// Condition under which a variable is active: its parent must currently be
/// active and hold one of `values`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Activation {
    pub parent: String,
    pub values: Vec<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: VariableKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<Activation>,
}

impl VariableSpec {
    pub fn continuous(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            kind: VariableKind::Continuous { lower, upper },
            activation: None,
        }
    }

    pub fn integer(name: impl Into<String>, lower: i64, upper: i64) -> Self {
        Self {
            name: name.into(),
            kind: VariableKind::Integer { lower, upper },
            activation: None,
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        categories: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            name: name.into(),
            kind: VariableKind::Categorical {
                categories: categories.into_iter().map(Into::into).collect(),
            },
            activation: None,
        }
    }

    pub fn active_when(mut self, parent: impl Into<String>, values: Vec<Value>) -> Self {
        self.activation = Some(Activation {
            parent: parent.into(),
            values,
        });
        self
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, VariableKind::Categorical { .. })
    }

    /// Value substituted for this variable whenever it is inactive: the
    /// midpoint of the range for numeric variables, the first category
    /// otherwise.
    pub fn canonical_default(&self) -> Value {
        match &self.kind {
            VariableKind::Continuous { lower, upper } => Value::Real(0.5 * (lower + upper)),
            // floor of the midpoint, without overflow
            VariableKind::Integer { lower, upper } => {
                Value::Integer(lower + (upper - lower).div_euclid(2))
            }
            VariableKind::Categorical { .. } => Value::Category(0),
        }
    }

    /// Checks that `value` has the right type and lies inside the bounds.
    pub fn check(&self, value: &Value) -> Result<()> {
        match (&self.kind, value) {
            (VariableKind::Continuous { lower, upper }, Value::Real(v)) => {
                if !v.is_finite() || v < lower || v > upper {
                    return Err(Error::domain(
                        &self.name,
                        format!("{v} outside [{lower}, {upper}]"),
                    ));
                }
            }
            (VariableKind::Integer { lower, upper }, Value::Integer(v)) => {
                if v < lower || v > upper {
                    return Err(Error::domain(
                        &self.name,
                        format!("{v} outside {{{lower}..{upper}}}"),
                    ));
                }
            }
            (VariableKind::Categorical { categories }, Value::Category(c)) => {
                if *c >= categories.len() {
                    return Err(Error::domain(
                        &self.name,
                        format!("category index {c} out of {} levels", categories.len()),
                    ));
                }
            }
            (_, v) => {
                return Err(Error::domain(&self.name, format!("value {v:?} has the wrong type")));
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        match &self.kind {
            VariableKind::Continuous { lower, upper } => {
                if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                    return Err(Error::Config(format!(
                        "continuous variable `{}` needs finite lower < upper",
                        self.name
                    )));
                }
            }
            VariableKind::Integer { lower, upper } => {
                if lower > upper {
                    return Err(Error::Config(format!(
                        "integer variable `{}` needs lower <= upper",
                        self.name
                    )));
                }
            }
            VariableKind::Categorical { categories } => {
                if categories.is_empty() {
                    return Err(Error::Config(format!(
                        "categorical variable `{}` has no categories",
                        self.name
                    )));
                }
                for (i, c) in categories.iter().enumerate() {
                    if categories[..i].contains(c) {
                        return Err(Error::Config(format!(
                            "categorical variable `{}` repeats category `{c}`",
                            self.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Deterministic objective over a full (relaxed) assignment.
pub trait Objective: Send + Sync + fmt::Debug {
    fn evaluate(&self, point: &[Value]) -> f64;
}

/// Adapts a closure to [`Objective`].
pub struct FnObjective<F>(pub F);

impl<F> fmt::Debug for FnObjective<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnObjective")
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[Value]) -> f64 + Send + Sync,
{
    fn evaluate(&self, point: &[Value]) -> f64 {
        (self.0)(point)
    }
}

/// A complete point in the search space, one value per declared variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment(pub Vec<Value>);

impl Assignment {
    pub fn values(&self) -> &[Value] {
        &self.0
    }
}

impl From<Vec<Value>> for Assignment {
    fn from(values: Vec<Value>) -> Self {
        Assignment(values)
    }
}

#[derive(Clone, Debug)]
pub struct MixedVariableProblem {
    instance_id: String,
    variables: Vec<VariableSpec>,
    /// For each variable, the index of its activation parent.
    parents: Vec<Option<usize>>,
    objective: Arc<dyn Objective>,
}

impl MixedVariableProblem {
    pub fn new(
        instance_id: impl Into<String>,
        variables: Vec<VariableSpec>,
        objective: Arc<dyn Objective>,
    ) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::Config("a problem needs at least one variable".into()));
        }
        let mut parents = Vec::with_capacity(variables.len());
        for (i, var) in variables.iter().enumerate() {
            var.validate()?;
            if variables[..i].iter().any(|v| v.name == var.name) {
                return Err(Error::Config(format!("duplicate variable name `{}`", var.name)));
            }
            let parent = match &var.activation {
                None => None,
                Some(act) => {
                    // Only earlier declarations are visible, which rules out cycles.
                    let p = variables[..i]
                        .iter()
                        .position(|v| v.name == act.parent)
                        .ok_or_else(|| {
                            Error::Config(format!(
                                "variable `{}` is conditioned on `{}`, which is not declared before it",
                                var.name, act.parent
                            ))
                        })?;
                    let parent = &variables[p];
                    if matches!(parent.kind, VariableKind::Continuous { .. }) {
                        return Err(Error::Config(format!(
                            "variable `{}` cannot be conditioned on continuous `{}`",
                            var.name, parent.name
                        )));
                    }
                    if act.values.is_empty() {
                        return Err(Error::Config(format!(
                            "activation of `{}` lists no parent values",
                            var.name
                        )));
                    }
                    for v in &act.values {
                        parent.check(v).map_err(|e| {
                            Error::Config(format!("activation of `{}`: {e}", var.name))
                        })?;
                    }
                    Some(p)
                }
            };
            parents.push(parent);
        }
        Ok(Self {
            instance_id: instance_id.into(),
            variables,
            parents,
            objective,
        })
    }

    pub fn instance_id(&self) -> &str {
        &self.instance_id
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn check_bounds(&self, point: &[Value]) -> Result<()> {
        if point.len() != self.variables.len() {
            return Err(Error::DimensionMismatch {
                expected: self.variables.len(),
                got: point.len(),
            });
        }
        self.variables
            .iter()
            .zip(point)
            .try_for_each(|(var, v)| var.check(v))
    }

    /// Activity of every variable at `point`. A variable is active when it is
    /// unconditioned, or when its parent is active and holds a listed value.
    pub fn active_mask(&self, point: &[Value]) -> Vec<bool> {
        let mut active = Vec::with_capacity(self.variables.len());
        for (i, var) in self.variables.iter().enumerate() {
            let on = match (&var.activation, self.parents[i]) {
                (Some(act), Some(p)) => active[p] && act.values.contains(&point[p]),
                _ => true,
            };
            active.push(on);
        }
        active
    }

    /// Replaces every inactive coordinate by its canonical default.
    pub fn canonicalize(&self, point: &mut [Value]) {
        let active = self.active_mask(point);
        for ((v, var), on) in point.iter_mut().zip(&self.variables).zip(active) {
            if !on {
                *v = var.canonical_default();
            }
        }
    }

    /// Evaluates the objective with activation conditions relaxed: inactive
    /// variables are reset to their defaults first, so the value does not
    /// depend on them.
    pub fn evaluate_relaxed(&self, point: &Assignment) -> Result<f64> {
        self.check_bounds(point.values())?;
        let mut p = point.0.clone();
        self.canonicalize(&mut p);
        Ok(self.objective.evaluate(&p))
    }

    /// Like [`evaluate_relaxed`](Self::evaluate_relaxed) for points already
    /// known to be in bounds.
    pub(crate) fn evaluate_unchecked(&self, point: &[Value]) -> f64 {
        let mut p = point.to_vec();
        self.canonicalize(&mut p);
        self.objective.evaluate(&p)
    }

    /// Calls the raw objective without any relaxation.
    pub fn evaluate_raw(&self, point: &[Value]) -> f64 {
        self.objective.evaluate(point)
    }
}
