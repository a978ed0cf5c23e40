//! Initial designs: uniform samples of the relaxed search space with their
//! objective values, and the min-max normalization applied after encoding.

use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::problem::{Assignment, MixedVariableProblem, Value, VariableKind, VariableSpec};
use crate::seed;

/// Default number of design points per dimension.
pub const DEFAULT_MULTIPLIER: usize = 50;

/// A mixed-typed sample `X` (one row per point) and its objective values `Y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub problem_id: String,
    pub columns: Vec<VariableSpec>,
    pub rows: Vec<Vec<Value>>,
    pub y: Vec<f64>,
    pub seed: u64,
}

impl Design {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn categorical_columns(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&j| self.columns[j].is_categorical())
            .collect()
    }

    /// Writes `<stem>.csv` (header row, category labels as strings) and
    /// `<stem>.json` (column specs and seed).
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        let csv_path = dir.join(format!("{stem}.csv"));
        let mut w = io::csv_writer(&csv_path)?;
        let mut header: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        header.push("y");
        w.write_record(&header)?;
        for (row, y) in self.rows.iter().zip(&self.y) {
            let mut rec: Vec<String> = row
                .iter()
                .zip(&self.columns)
                .map(|(v, c)| match (v, &c.kind) {
                    (Value::Category(i), VariableKind::Categorical { categories }) => {
                        categories[*i].clone()
                    }
                    (Value::Integer(i), _) => i.to_string(),
                    (v, _) => v.as_f64().to_string(),
                })
                .collect();
            rec.push(y.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(&csv_path, e))?;
        let meta = DesignMeta {
            problem_id: self.problem_id.clone(),
            columns: self.columns.clone(),
            seed: self.seed,
            n_rows: self.rows.len(),
        };
        io::write_json(&dir.join(format!("{stem}.json")), &meta)
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        let meta: DesignMeta = io::read_json(&dir.join(format!("{stem}.json")))?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let mut r = io::csv_reader(&csv_path)?;
        let mut rows = Vec::with_capacity(meta.n_rows);
        let mut y = Vec::with_capacity(meta.n_rows);
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != meta.columns.len() + 1 {
                return Err(Error::Data(format!("{}: malformed row", csv_path.display())));
            }
            let row = meta
                .columns
                .iter()
                .zip(rec.iter())
                .map(|(c, cell)| parse_cell(c, cell))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
            y.push(io::parse_f64(&rec[meta.columns.len()])?);
        }
        if rows.len() != meta.n_rows {
            return Err(Error::Data(format!(
                "{}: expected {} rows, found {}",
                csv_path.display(),
                meta.n_rows,
                rows.len()
            )));
        }
        Ok(Self {
            problem_id: meta.problem_id,
            columns: meta.columns,
            rows,
            y,
            seed: meta.seed,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct DesignMeta {
    problem_id: String,
    columns: Vec<VariableSpec>,
    seed: u64,
    n_rows: usize,
}

fn parse_cell(col: &VariableSpec, cell: &str) -> Result<Value> {
    match &col.kind {
        VariableKind::Continuous { .. } => Ok(Value::Real(io::parse_f64(cell)?)),
        VariableKind::Integer { .. } => cell
            .trim()
            .parse()
            .map(Value::Integer)
            .map_err(|_| Error::Data(format!("not an integer: `{cell}`"))),
        VariableKind::Categorical { categories } => categories
            .iter()
            .position(|c| c == cell)
            .map(Value::Category)
            .ok_or_else(|| Error::domain(&col.name, format!("unknown category `{cell}`"))),
    }
}

/// Draws `multiplier * D` points uniformly from the relaxed domain (activation
/// conditions ignored) and evaluates them with relaxed evaluation.
pub fn sample_initial_design(
    problem: &MixedVariableProblem,
    multiplier: usize,
    seed: u64,
) -> Result<Design> {
    if multiplier == 0 {
        return Err(Error::Config("design multiplier must be at least 1".into()));
    }
    let n = multiplier * problem.dim();
    let mut rng = seed::rng(seed);
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<Value> = problem
            .variables()
            .iter()
            .map(|v| sample_value(v, &mut rng))
            .collect();
        let row = Assignment(row);
        y.push(problem.evaluate_relaxed(&row)?);
        rows.push(row.0);
    }
    Ok(Design {
        problem_id: problem.instance_id().to_string(),
        columns: problem.variables().to_vec(),
        rows,
        y,
        seed,
    })
}

pub(crate) fn sample_value<R: Rng>(var: &VariableSpec, rng: &mut R) -> Value {
    match &var.kind {
        VariableKind::Continuous { lower, upper } => {
            Value::Real(lower + (upper - lower) * rng.random::<f64>())
        }
        VariableKind::Integer { lower, upper } => Value::Integer(rng.random_range(*lower..=*upper)),
        VariableKind::Categorical { categories } => {
            Value::Category(rng.random_range(0..categories.len()))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingTag {
    Onehot,
    Target,
    Shap,
}

impl EncodingTag {
    pub const ALL: [EncodingTag; 3] = [EncodingTag::Onehot, EncodingTag::Target, EncodingTag::Shap];

    pub fn as_str(&self) -> &'static str {
        match self {
            EncodingTag::Onehot => "onehot",
            EncodingTag::Target => "target",
            EncodingTag::Shap => "shap",
        }
    }
}

impl fmt::Display for EncodingTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EncodingTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "onehot" => Ok(EncodingTag::Onehot),
            "target" => Ok(EncodingTag::Target),
            "shap" => Ok(EncodingTag::Shap),
            _ => Err(Error::Data(format!("unknown encoding `{s}`"))),
        }
    }
}

/// A fully numeric design, as produced by an encoder and (after
/// [`normalize`]) consumed by the landscape features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericDesign {
    pub problem_id: String,
    pub feature_names: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub encoding: EncodingTag,
}

impl NumericDesign {
    pub fn n_rows(&self) -> usize {
        self.x.len()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.x.iter().map(|r| r[j]).collect()
    }

    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        let csv_path = dir.join(format!("{stem}.csv"));
        let mut w = io::csv_writer(&csv_path)?;
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push("y");
        w.write_record(&header)?;
        for (row, y) in self.x.iter().zip(&self.y) {
            let rec: Vec<String> = row.iter().chain(std::iter::once(y)).map(f64::to_string).collect();
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(&csv_path, e))?;
        let meta = NumericMeta {
            problem_id: self.problem_id.clone(),
            feature_names: self.feature_names.clone(),
            encoding_tag: self.encoding,
            n_rows: self.x.len(),
        };
        io::write_json(&dir.join(format!("{stem}.json")), &meta)
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        let meta: NumericMeta = io::read_json(&dir.join(format!("{stem}.json")))?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let mut r = io::csv_reader(&csv_path)?;
        let d = meta.feature_names.len();
        let mut x = Vec::with_capacity(meta.n_rows);
        let mut y = Vec::with_capacity(meta.n_rows);
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != d + 1 {
                return Err(Error::Data(format!("{}: malformed row", csv_path.display())));
            }
            let vals = rec.iter().map(io::parse_f64).collect::<Result<Vec<_>>>()?;
            y.push(vals[d]);
            x.push(vals[..d].to_vec());
        }
        Ok(Self {
            problem_id: meta.problem_id,
            feature_names: meta.feature_names,
            x,
            y,
            encoding: meta.encoding_tag,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct NumericMeta {
    problem_id: String,
    feature_names: Vec<String>,
    encoding_tag: EncodingTag,
    n_rows: usize,
}

/// Maps `v` to `(v - min) / (max - min)`; a constant column maps to 0.5.
pub fn normalize_column(col: &[f64]) -> Vec<f64> {
    let (lo, hi) = col
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return vec![0.5; col.len()];
    }
    let range = hi - lo;
    col.iter().map(|v| (v - lo) / range).collect()
}

/// Min-max normalizes every decision column and the objective independently.
pub fn normalize(design: &NumericDesign) -> Result<NumericDesign> {
    let d = design.dim();
    if design.y.len() != design.x.len() {
        return Err(Error::Data("X and Y have different lengths".into()));
    }
    for row in &design.x {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
    }
    if design.x.iter().flatten().chain(&design.y).any(|v| !v.is_finite()) {
        return Err(Error::Data(format!(
            "design `{}` contains non-finite values",
            design.problem_id
        )));
    }
    let mut x = vec![vec![0.0; d]; design.n_rows()];
    for j in 0..d {
        for (row, v) in x.iter_mut().zip(normalize_column(&design.column(j))) {
            row[j] = v;
        }
    }
    Ok(NumericDesign {
        problem_id: design.problem_id.clone(),
        feature_names: design.feature_names.clone(),
        x,
        y: normalize_column(&design.y),
        encoding: design.encoding,
    })
}
