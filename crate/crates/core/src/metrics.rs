//! relERT tables, SBS/VBS baselines, VBE normalization, gap closure, and the
//! report files built from them.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{csv_writer, fmt_f64, write_json};
use crate::portfolio::PerformanceTable;
use crate::selector::{OutcomeRow, Strategy};

/// Report columns, in their fixed order.
pub const COLUMNS: [&str; 6] = ["SBS", "TE", "SH", "Hybrid", "Meta", "Confidence"];
const HYBRID: usize = 3;

/// relERT of one (instance, repetition) row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelErtRow {
    pub instance_id: String,
    pub repetition: usize,
    /// Per portfolio algorithm, in declaration order.
    pub algorithms: Vec<f64>,
    /// Per report column, in [`COLUMNS`] order.
    pub columns: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelErtTable {
    pub algorithms: Vec<String>,
    pub sbs: String,
    pub rows: Vec<RelErtRow>,
}

/// Mean relERT over instances for every algorithm, in declaration order.
pub fn algorithm_means(perf: &PerformanceTable) -> Vec<f64> {
    let instances = perf.instances();
    perf.algorithms
        .iter()
        .map(|a| {
            instances
                .iter()
                .map(|i| perf.ert(i, a) / perf.vbs_ert(i))
                .sum::<f64>()
                / instances.len() as f64
        })
        .collect()
}

/// Algorithm with the lowest mean relERT; ties go to the earlier one.
pub fn single_best_solver(perf: &PerformanceTable) -> Result<String> {
    if perf.algorithms.is_empty() || perf.targets.is_empty() {
        return Err(Error::Data("empty performance table".into()));
    }
    let means = algorithm_means(perf);
    let mut best = 0;
    for (i, m) in means.iter().enumerate() {
        if *m < means[best] {
            best = i;
        }
    }
    Ok(perf.algorithms[best].clone())
}

/// Divides every realized ERT by the instance's VBS ERT.
pub fn relert(perf: &PerformanceTable, outcomes: &[OutcomeRow]) -> Result<RelErtTable> {
    let sbs = single_best_solver(perf)?;
    let rows = outcomes
        .iter()
        .map(|o| {
            let inst = o.instance_id.as_str();
            let vbs = perf.vbs_ert(inst);
            if !vbs.is_finite() {
                return Err(Error::Data(format!("no finite VBS ert for `{inst}`")));
            }
            let rel = |a: &str| perf.ert(inst, a) / vbs;
            let mut columns = vec![rel(&sbs)];
            columns.extend(Strategy::ALL.iter().map(|s| rel(o.choice(*s))));
            Ok(RelErtRow {
                instance_id: o.instance_id.clone(),
                repetition: o.repetition,
                algorithms: perf.algorithms.iter().map(|a| rel(a)).collect(),
                columns,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RelErtTable {
        algorithms: perf.algorithms.clone(),
        sbs,
        rows,
    })
}

/// Each row's columns divided by that row's Hybrid value.
pub fn vbe_normalize(rel: &RelErtTable) -> Vec<Vec<f64>> {
    rel.rows
        .iter()
        .map(|r| r.columns.iter().map(|v| v / r.columns[HYBRID]).collect())
        .collect()
}

/// Share (in percent) of the SBE-to-VBE gap that `method` closes; `None`
/// when the gap is empty.
pub fn gap_closure(sbe_mean: f64, method_mean: f64, vbe_mean: f64) -> Option<f64> {
    let gap = sbe_mean - vbe_mean;
    (gap != 0.0 && gap.is_finite()).then(|| 100.0 * (sbe_mean - method_mean) / gap)
}

/// Means of one group of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub instances: usize,
    pub rows: usize,
    /// Rows left out because some column is infinite.
    pub excluded_rows: usize,
    /// In [`COLUMNS`] order.
    pub mean_relert: Vec<f64>,
    pub vbe_normalized: Vec<f64>,
    /// Single best encoding: whichever of TE and SH has the lower
    /// normalized mean.
    pub sbe: String,
    pub gap_closure_meta: Option<f64>,
    pub gap_closure_confidence: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub seed: u64,
    pub config_hash: String,
    pub columns: Vec<String>,
    pub sbs: String,
    pub groups: Vec<GroupSummary>,
}

fn column_means(rows: &[&Vec<f64>]) -> Vec<f64> {
    (0..COLUMNS.len())
        .map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / rows.len() as f64)
        .collect()
}

fn summarize(group: &str, rel: &[&RelErtRow]) -> GroupSummary {
    let finite: Vec<&RelErtRow> = rel
        .iter()
        .copied()
        .filter(|r| r.columns.iter().all(|v| v.is_finite()))
        .collect();
    let raw: Vec<&Vec<f64>> = finite.iter().map(|r| &r.columns).collect();
    let normalized: Vec<Vec<f64>> = finite
        .iter()
        .map(|r| r.columns.iter().map(|v| v / r.columns[HYBRID]).collect())
        .collect();
    let mean_relert = column_means(&raw);
    let vbe_normalized = column_means(&normalized.iter().collect::<Vec<_>>());
    let (te, sh) = (vbe_normalized[1], vbe_normalized[2]);
    let (sbe, sbe_mean) = if sh < te { ("SH", sh) } else { ("TE", te) };
    let vbe = vbe_normalized[HYBRID];
    let mut instances: Vec<&str> = rel.iter().map(|r| r.instance_id.as_str()).collect();
    instances.dedup();
    GroupSummary {
        group: group.to_string(),
        instances: instances.len(),
        rows: rel.len(),
        excluded_rows: rel.len() - finite.len(),
        gap_closure_meta: gap_closure(sbe_mean, vbe_normalized[4], vbe),
        gap_closure_confidence: gap_closure(sbe_mean, vbe_normalized[5], vbe),
        mean_relert,
        vbe_normalized,
        sbe: sbe.to_string(),
    }
}

/// Template name of a suite instance id (`name-007` → `name`).
pub fn template_group(instance_id: &str) -> String {
    instance_id
        .rsplit_once('-')
        .map_or(instance_id, |(head, _)| head)
        .to_string()
}

/// Per-group summaries followed by an `All` summary.
pub fn summarize_groups(rel: &RelErtTable, grouping: impl Fn(&str) -> String) -> Vec<GroupSummary> {
    let mut groups: BTreeMap<String, Vec<&RelErtRow>> = BTreeMap::new();
    for r in &rel.rows {
        groups.entry(grouping(&r.instance_id)).or_default().push(r);
    }
    let mut out: Vec<GroupSummary> = groups.iter().map(|(g, rows)| summarize(g, rows)).collect();
    out.push(summarize("All", &rel.rows.iter().collect::<Vec<_>>()));
    out
}

pub fn build_report(
    rel: &RelErtTable,
    grouping: impl Fn(&str) -> String,
    seed: u64,
    config_hash: &str,
) -> Report {
    Report {
        seed,
        config_hash: config_hash.to_string(),
        columns: COLUMNS.iter().map(|c| c.to_string()).collect(),
        sbs: rel.sbs.clone(),
        groups: summarize_groups(rel, grouping),
    }
}

pub fn write_relert_table(path: &Path, rel: &RelErtTable) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["instance".to_string(), "repetition".into()];
    header.extend(rel.algorithms.iter().cloned());
    header.extend(COLUMNS.iter().map(|c| c.to_string()));
    w.write_record(&header)?;
    for r in &rel.rows {
        let mut rec = vec![r.instance_id.clone(), r.repetition.to_string()];
        rec.extend(r.algorithms.iter().chain(&r.columns).map(|v| fmt_f64(*v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_group_table(path: &Path, report: &Report, normalized: bool) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["group".to_string(), "instances".into(), "rows".into(), "excluded_rows".into()];
    header.extend(COLUMNS.iter().map(|c| c.to_string()));
    w.write_record(&header)?;
    for g in &report.groups {
        let mut rec = vec![
            g.group.clone(),
            g.instances.to_string(),
            g.rows.to_string(),
            g.excluded_rows.to_string(),
        ];
        let means = if normalized { &g.vbe_normalized } else { &g.mean_relert };
        rec.extend(means.iter().map(|v| fmt_f64(*v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `relert.csv`, `table_mean_relert.csv`, `table_vbe_normalized.csv`,
/// `scatter.csv` and `report.json` into `dir`.
pub fn emit_report(dir: &Path, rel: &RelErtTable, report: &Report) -> Result<()> {
    write_relert_table(&dir.join("relert.csv"), rel)?;
    write_group_table(&dir.join("table_mean_relert.csv"), report, false)?;
    write_group_table(&dir.join("table_vbe_normalized.csv"), report, true)?;
    let scatter = dir.join("scatter.csv");
    let mut w = csv_writer(&scatter)?;
    w.write_record(["instance", "repetition", "relert_sh", "relert_te"])?;
    for r in &rel.rows {
        w.write_record([
            r.instance_id.as_str(),
            &r.repetition.to_string(),
            &fmt_f64(r.columns[2]),
            &fmt_f64(r.columns[1]),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&scatter, e))?;
    write_json(&dir.join("report.json"), report)
}
