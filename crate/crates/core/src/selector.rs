//! Per-encoding algorithm selectors, grouped cross-validation, and the
//! Hybrid, Meta and Confidence strategies that combine the TE and SH
//! selectors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ela::FeatureVector;
use crate::error::{Error, Result};
use crate::forest::{fit_classification, ClassificationForest, ForestParams};
use crate::io::{csv_reader, csv_writer, fmt_f64, parse_f64};
use crate::portfolio::PerformanceTable;
use crate::seed;

pub const DEFAULT_FOLDS: usize = 10;
/// Folds of the inner split that produces out-of-fold selector predictions
/// for meta-model training.
pub const INNER_FOLDS: usize = 5;

/// Best algorithm per instance; ties go to the earlier declared algorithm.
pub fn label_instances(perf: &PerformanceTable) -> BTreeMap<String, String> {
    perf.instances()
        .into_iter()
        .map(|inst| {
            let mut best = &perf.algorithms[0];
            for a in &perf.algorithms[1..] {
                if perf.ert(inst, a) < perf.ert(inst, best) {
                    best = a;
                }
            }
            (inst.to_string(), best.clone())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub folds: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, instance: &str) -> Option<usize> {
        self.folds.get(instance).copied()
    }

    pub fn test_instances(&self, fold: usize) -> BTreeSet<&str> {
        self.folds
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(i, _)| i.as_str())
            .collect()
    }
}

/// Shuffles the (sorted, deduplicated) instance ids and deals them to `k`
/// folds round-robin.
pub fn grouped_kfold<S: AsRef<str>>(instances: &[S], k: usize, seed: u64) -> Result<FoldPlan> {
    let mut ids: Vec<&str> = instances.iter().map(AsRef::as_ref).collect();
    ids.sort_unstable();
    ids.dedup();
    if k < 2 || ids.len() < k {
        return Err(Error::Config(format!(
            "{k}-fold cross-validation needs k >= 2 and at least k instances, got {}",
            ids.len()
        )));
    }
    ids.shuffle(&mut seed::rng(seed));
    let folds = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.to_string(), i % k))
        .collect();
    Ok(FoldPlan { k, seed, folds })
}

/// Trains a classifier from feature rows to indices into `classes`.
/// With a single class present the forest is a constant selector.
pub fn train_selector(
    x: &[Vec<f64>],
    labels: &[usize],
    classes: &[String],
    params: &ForestParams,
) -> Result<ClassificationForest> {
    if x.is_empty() {
        return Err(Error::Data("cannot train a selector on an empty set".into()));
    }
    fit_classification(x, labels, classes.to_vec(), params)
}

/// The realized better of the two predictions; ties go to TE.
pub fn hybrid_oracle<'a>(pred_te: &'a str, pred_sh: &'a str, perf: &PerformanceTable, instance: &str) -> &'a str {
    if perf.ert(instance, pred_sh) < perf.ert(instance, pred_te) {
        pred_sh
    } else {
        pred_te
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "TE")]
    Te,
    #[serde(rename = "SH")]
    Sh,
    Hybrid,
    Meta,
    Confidence,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Te,
        Strategy::Sh,
        Strategy::Hybrid,
        Strategy::Meta,
        Strategy::Confidence,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Te => "TE",
            Strategy::Sh => "SH",
            Strategy::Hybrid => "Hybrid",
            Strategy::Meta => "Meta",
            Strategy::Confidence => "Confidence",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Binary training set for the meta model: TE features then SH features,
/// label 0 (TE) unless SH's prediction is strictly better.
#[derive(Clone, Debug, PartialEq)]
pub struct MetaDataset {
    pub x: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

pub const META_CLASSES: [&str; 2] = ["TE", "SH"];

pub fn build_meta_dataset(
    te_features: &[FeatureVector],
    sh_features: &[FeatureVector],
    te_predictions: &[String],
    sh_predictions: &[String],
    perf: &PerformanceTable,
) -> Result<MetaDataset> {
    let n = te_features.len();
    if sh_features.len() != n || te_predictions.len() != n || sh_predictions.len() != n {
        return Err(Error::Data("meta dataset inputs have different lengths".into()));
    }
    let mut x = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let (te, sh) = (&te_features[i], &sh_features[i]);
        if te.problem_id != sh.problem_id || te.repetition != sh.repetition {
            return Err(Error::Data(format!(
                "meta row {i} pairs {}#{} with {}#{}",
                te.problem_id, te.repetition, sh.problem_id, sh.repetition
            )));
        }
        let mut row = te.values.clone();
        row.extend_from_slice(&sh.values);
        x.push(row);
        let sh_better =
            perf.ert(&te.problem_id, &sh_predictions[i]) < perf.ert(&te.problem_id, &te_predictions[i]);
        labels.push(usize::from(sh_better));
    }
    Ok(MetaDataset { x, labels })
}

fn concat(te_row: &[f64], sh_row: &[f64]) -> Vec<f64> {
    let mut row = te_row.to_vec();
    row.extend_from_slice(sh_row);
    row
}

/// Asks the meta model which encoding to trust, then returns that
/// encoding's selector prediction on its own features.
pub fn meta_select(
    meta: &ClassificationForest,
    te_row: &[f64],
    sh_row: &[f64],
    selector_te: &ClassificationForest,
    selector_sh: &ClassificationForest,
) -> Result<String> {
    let choice = if meta.predict(&concat(te_row, sh_row))? == 0 {
        selector_te.predict_label(te_row)?
    } else {
        selector_sh.predict_label(sh_row)?
    };
    Ok(choice.to_string())
}

/// Trusts the selector whose top class probability is larger; ties go to TE.
pub fn confidence_select(
    selector_te: &ClassificationForest,
    te_row: &[f64],
    selector_sh: &ClassificationForest,
    sh_row: &[f64],
) -> Result<String> {
    let top = |p: Vec<f64>| p.into_iter().fold(0.0, f64::max);
    let c_te = top(selector_te.predict_proba(te_row)?);
    let c_sh = top(selector_sh.predict_proba(sh_row)?);
    let choice = if c_sh > c_te {
        selector_sh.predict_label(sh_row)?
    } else {
        selector_te.predict_label(te_row)?
    };
    Ok(choice.to_string())
}

/// Strategy choices for one (instance, repetition) test row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub instance_id: String,
    pub repetition: usize,
    pub fold: usize,
    /// Chosen algorithm per strategy, in [`Strategy::ALL`] order.
    pub chosen: Vec<String>,
    pub ert: Vec<f64>,
    pub relert: Vec<f64>,
}

impl OutcomeRow {
    pub fn choice(&self, s: Strategy) -> &str {
        &self.chosen[s as usize]
    }

    pub fn relert_of(&self, s: Strategy) -> f64 {
        self.relert[s as usize]
    }
}

pub fn write_outcomes(path: &Path, rows: &[OutcomeRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["instance".to_string(), "repetition".into(), "fold".into()];
    for s in Strategy::ALL {
        header.push(format!("{s}_choice"));
        header.push(format!("{s}_ert"));
        header.push(format!("{s}_relert"));
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.instance_id.clone(), r.repetition.to_string(), r.fold.to_string()];
        for i in 0..Strategy::ALL.len() {
            rec.push(r.chosen[i].clone());
            rec.push(fmt_f64(r.ert[i]));
            rec.push(fmt_f64(r.relert[i]));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_outcomes(path: &Path) -> Result<Vec<OutcomeRow>> {
    let n = Strategy::ALL.len();
    let mut out = Vec::new();
    for rec in csv_reader(path)?.records() {
        let rec = rec?;
        if rec.len() != 3 + 3 * n {
            return Err(Error::Data(format!("{}: malformed outcome row", path.display())));
        }
        let int = |i: usize| {
            rec[i]
                .parse::<usize>()
                .map_err(|_| Error::Data(format!("bad integer `{}`", &rec[i])))
        };
        let mut row = OutcomeRow {
            instance_id: rec[0].to_string(),
            repetition: int(1)?,
            fold: int(2)?,
            chosen: Vec::with_capacity(n),
            ert: Vec::with_capacity(n),
            relert: Vec::with_capacity(n),
        };
        for k in 0..n {
            row.chosen.push(rec[3 + 3 * k].to_string());
            row.ert.push(parse_f64(&rec[4 + 3 * k])?);
            row.relert.push(parse_f64(&rec[5 + 3 * k])?);
        }
        out.push(row);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub inner_folds: usize,
    /// Forest settings for selectors and the meta model; the seed is
    /// replaced per model.
    pub forest: ForestParams,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: DEFAULT_FOLDS,
            inner_folds: INNER_FOLDS,
            forest: ForestParams::classification(0),
        }
    }
}

/// Rows of both encodings keyed by (instance, repetition), checked to cover
/// the same keys and the performance table's instances.
struct Aligned<'a> {
    te: Vec<&'a FeatureVector>,
    sh: Vec<&'a FeatureVector>,
}

fn align<'a>(te: &'a [FeatureVector], sh: &'a [FeatureVector], perf: &PerformanceTable) -> Result<Aligned<'a>> {
    let key = |f: &'a FeatureVector| ((f.problem_id.as_str(), f.repetition), f);
    let te_map: BTreeMap<_, _> = te.iter().map(key).collect();
    let sh_map: BTreeMap<_, _> = sh.iter().map(key).collect();
    if te_map.len() != te.len() || sh_map.len() != sh.len() {
        return Err(Error::Data("duplicate (instance, repetition) feature rows".into()));
    }
    if te_map.keys().ne(sh_map.keys()) {
        return Err(Error::Data("TE and SH feature tables cover different rows".into()));
    }
    for (inst, _) in te_map.keys() {
        if perf.targets.get(*inst).is_none() {
            return Err(Error::Data(format!("no performance data for `{inst}`")));
        }
    }
    Ok(Aligned {
        te: te_map.into_values().collect(),
        sh: sh_map.into_values().collect(),
    })
}

fn class_index(classes: &[String], label: &str) -> usize {
    classes.iter().position(|c| c == label).expect("label is a portfolio member")
}

fn fit_on(
    rows: &[&FeatureVector],
    labels: &BTreeMap<String, String>,
    classes: &[String],
    params: &ForestParams,
) -> Result<ClassificationForest> {
    let x: Vec<Vec<f64>> = rows.iter().map(|f| f.values.clone()).collect();
    let y: Vec<usize> = rows
        .iter()
        .map(|f| class_index(classes, &labels[&f.problem_id]))
        .collect();
    train_selector(&x, &y, classes, params)
}

/// Meta model trained on out-of-fold TE/SH predictions from an inner grouped
/// split of the training rows, so its labels never see the outer test fold.
fn fit_meta(
    te: &[&FeatureVector],
    sh: &[&FeatureVector],
    labels: &BTreeMap<String, String>,
    perf: &PerformanceTable,
    config: &CvConfig,
    seed: u64,
) -> Result<ClassificationForest> {
    let classes = &perf.algorithms;
    let instances: Vec<&str> = te.iter().map(|f| f.problem_id.as_str()).collect();
    let n_inst = instances.iter().collect::<BTreeSet<_>>().len();
    let inner = grouped_kfold(&instances, config.inner_folds.min(n_inst), seed::derive_seed(seed, 0))?;
    let mut te_pred = vec![String::new(); te.len()];
    let mut sh_pred = vec![String::new(); te.len()];
    for g in 0..inner.k {
        let train: Vec<usize> = (0..te.len())
            .filter(|&i| inner.fold_of(&te[i].problem_id) != Some(g))
            .collect();
        let te_train: Vec<&FeatureVector> = train.iter().map(|&i| te[i]).collect();
        let sh_train: Vec<&FeatureVector> = train.iter().map(|&i| sh[i]).collect();
        let gs = seed::derive_seed(seed, 1 + g as u64);
        let sel_te = fit_on(&te_train, labels, classes, &config.forest.with_seed(seed::derive_seed(gs, 0)))?;
        let sel_sh = fit_on(&sh_train, labels, classes, &config.forest.with_seed(seed::derive_seed(gs, 1)))?;
        for i in (0..te.len()).filter(|&i| inner.fold_of(&te[i].problem_id) == Some(g)) {
            te_pred[i] = sel_te.predict_label(&te[i].values)?.to_string();
            sh_pred[i] = sel_sh.predict_label(&sh[i].values)?.to_string();
        }
    }
    let te_owned: Vec<FeatureVector> = te.iter().map(|f| (*f).clone()).collect();
    let sh_owned: Vec<FeatureVector> = sh.iter().map(|f| (*f).clone()).collect();
    let meta = build_meta_dataset(&te_owned, &sh_owned, &te_pred, &sh_pred, perf)?;
    let meta_classes: Vec<String> = META_CLASSES.iter().map(|s| s.to_string()).collect();
    train_selector(
        &meta.x,
        &meta.labels,
        &meta_classes,
        &config.forest.with_seed(seed::derive_seed(seed, u64::MAX)),
    )
}

/// Grouped k-fold evaluation of all five strategies. Fold `f` derives its
/// randomness from `derive_seed(seed, f)`; rows come back sorted by
/// (instance, repetition).
pub fn run_cv_experiment(
    te_features: &[FeatureVector],
    sh_features: &[FeatureVector],
    perf: &PerformanceTable,
    config: &CvConfig,
    seed: u64,
) -> Result<(FoldPlan, Vec<OutcomeRow>)> {
    let rows = align(te_features, sh_features, perf)?;
    let labels = label_instances(perf);
    let instances: Vec<&str> = rows.te.iter().map(|f| f.problem_id.as_str()).collect();
    let plan = grouped_kfold(&instances, config.folds, seed::derive_seed(seed, 0))?;
    let classes = &perf.algorithms;

    let per_fold = (0..plan.k)
        .into_par_iter()
        .map(|fold| -> Result<Vec<OutcomeRow>> {
            let fs = seed::derive_seed(seed, 1 + fold as u64);
            let in_test = |f: &FeatureVector| plan.fold_of(&f.problem_id) == Some(fold);
            let train: Vec<usize> = (0..rows.te.len()).filter(|&i| !in_test(rows.te[i])).collect();
            let te_train: Vec<&FeatureVector> = train.iter().map(|&i| rows.te[i]).collect();
            let sh_train: Vec<&FeatureVector> = train.iter().map(|&i| rows.sh[i]).collect();
            let sel_te = fit_on(&te_train, &labels, classes, &config.forest.with_seed(seed::derive_seed(fs, 0)))?;
            let sel_sh = fit_on(&sh_train, &labels, classes, &config.forest.with_seed(seed::derive_seed(fs, 1)))?;
            let meta = fit_meta(&te_train, &sh_train, &labels, perf, config, seed::derive_seed(fs, 2))?;

            let mut out = Vec::new();
            for i in (0..rows.te.len()).filter(|&i| in_test(rows.te[i])) {
                let (te, sh) = (rows.te[i], rows.sh[i]);
                let inst = te.problem_id.as_str();
                let p_te = sel_te.predict_label(&te.values)?.to_string();
                let p_sh = sel_sh.predict_label(&sh.values)?.to_string();
                let hybrid = hybrid_oracle(&p_te, &p_sh, perf, inst).to_string();
                let m = meta_select(&meta, &te.values, &sh.values, &sel_te, &sel_sh)?;
                let c = confidence_select(&sel_te, &te.values, &sel_sh, &sh.values)?;
                let chosen = vec![p_te, p_sh, hybrid, m, c];
                let vbs = perf.vbs_ert(inst);
                let ert: Vec<f64> = chosen.iter().map(|a| perf.ert(inst, a)).collect();
                let relert = ert.iter().map(|e| e / vbs).collect();
                out.push(OutcomeRow {
                    instance_id: inst.to_string(),
                    repetition: te.repetition,
                    fold,
                    chosen,
                    ert,
                    relert,
                });
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut outcomes: Vec<OutcomeRow> = per_fold.into_iter().flatten().collect();
    outcomes.sort_by(|a, b| (&a.instance_id, a.repetition).cmp(&(&b.instance_id, b.repetition)));
    Ok((plan, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::EncodingTag;
    use crate::forest::FeatureSubsample;
    use crate::portfolio::PerformanceRecord;

    fn perf(rows: &[(&str, &[f64])]) -> PerformanceTable {
        let mut t = PerformanceTable {
            algorithms: vec!["A".into(), "B".into(), "C".into()],
            ..Default::default()
        };
        for (inst, erts) in rows {
            t.targets.insert(inst.to_string(), 0.0);
            for (a, e) in t.algorithms.clone().iter().zip(*erts) {
                t.insert(PerformanceRecord {
                    instance_id: inst.to_string(),
                    algorithm_id: a.clone(),
                    ert: *e,
                    successes: 1,
                    total_evals: 1,
                });
            }
        }
        t
    }

    fn fv(inst: &str, rep: usize, enc: EncodingTag, values: Vec<f64>) -> FeatureVector {
        FeatureVector {
            problem_id: inst.into(),
            repetition: rep,
            encoding: enc,
            values,
            rank_deficient: false,
        }
    }

    #[test]
    fn labels_follow_lowest_ert_with_declaration_ties() {
        let p = perf(&[
            ("i1", &[10.0, 5.0, 9.0]),
            ("i2", &[5.0, 5.0, 9.0]),
            ("i3", &[f64::INFINITY, 7.0, 9.0]),
        ]);
        let l = label_instances(&p);
        assert_eq!(l["i1"], "B");
        assert_eq!(l["i2"], "A");
        assert_eq!(l["i3"], "B");
    }

    #[test]
    fn fold_sizes_are_balanced() {
        let ids: Vec<String> = (0..702).map(|i| format!("p{i}")).collect();
        let plan = grouped_kfold(&ids, 10, 3).unwrap();
        let mut sizes = [0usize; 10];
        for f in plan.folds.values() {
            sizes[*f] += 1;
        }
        assert!(sizes.iter().all(|&s| s == 70 || s == 71), "{sizes:?}");
        assert_eq!(plan, grouped_kfold(&ids, 10, 3).unwrap());
        assert!(grouped_kfold(&ids[..5], 10, 3).is_err());
    }

    #[test]
    fn repeated_instances_share_a_fold() {
        let ids: Vec<String> = (0..40).flat_map(|i| vec![format!("p{i}"); 20]).collect();
        let plan = grouped_kfold(&ids, 10, 1).unwrap();
        assert_eq!(plan.folds.len(), 40);
        assert!((0..10).all(|f| plan.test_instances(f).len() == 4));
    }

    #[test]
    fn single_class_selector_is_constant() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let classes: Vec<String> = vec!["A".into(), "B".into()];
        let f = train_selector(&x, &[1; 10], &classes, &ForestParams::classification(0)).unwrap();
        for i in 0..20 {
            assert_eq!(f.predict_label(&[i as f64 * 0.7, 3.0]).unwrap(), "B");
        }
        assert!(train_selector(&[], &[], &classes, &ForestParams::classification(0)).is_err());
    }

    #[test]
    fn hybrid_takes_the_better_prediction() {
        let p = perf(&[("i", &[10.0, 3.0, 3.0])]);
        assert_eq!(hybrid_oracle("A", "B", &p, "i"), "B");
        assert_eq!(hybrid_oracle("A", "A", &p, "i"), "A");
        // equal ert keeps TE's choice
        assert_eq!(hybrid_oracle("C", "B", &p, "i"), "C");
    }

    #[test]
    fn meta_labels() {
        let p = perf(&[("i", &[10.0, 3.0, 3.0])]);
        let te = vec![fv("i", 0, EncodingTag::Target, vec![1.0; 38]); 3];
        let sh = vec![fv("i", 0, EncodingTag::Shap, vec![2.0; 38]); 3];
        let te_pred = vec!["A".to_string(), "B".into(), "B".into()];
        let sh_pred = vec!["B".to_string(), "C".into(), "A".into()];
        let m = build_meta_dataset(&te, &sh, &te_pred, &sh_pred, &p).unwrap();
        assert_eq!(m.labels, vec![1, 0, 0]);
        assert_eq!(m.x[0].len(), 76);
        assert_eq!(m.x[0][37], 1.0);
        assert_eq!(m.x[0][38], 2.0);
        let bad = vec![fv("j", 0, EncodingTag::Shap, vec![2.0; 38]); 3];
        assert!(build_meta_dataset(&te, &bad, &te_pred, &sh_pred, &p).is_err());
    }

    fn constant_forest(label: usize, proba: f64) -> ClassificationForest {
        // one-feature forest: two leaves per class distribution
        let classes = vec!["A".to_string(), "B".into()];
        let n = 20;
        let hits = (proba * n as f64).round() as usize;
        let x: Vec<Vec<f64>> = vec![vec![0.0]; n];
        let y: Vec<usize> = (0..n).map(|i| if i < hits { label } else { 1 - label }).collect();
        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            max_features: FeatureSubsample::All,
            ..ForestParams::classification(0)
        };
        fit_classification(&x, &y, classes, &params).unwrap()
    }

    #[test]
    fn confidence_prefers_the_surer_selector() {
        let te = constant_forest(0, 0.9);
        let sh = constant_forest(1, 0.6);
        assert_eq!(confidence_select(&te, &[0.0], &sh, &[0.0]).unwrap(), "A");
        assert_eq!(confidence_select(&sh, &[0.0], &te, &[0.0]).unwrap(), "A");
        let sh_tie = constant_forest(1, 0.9);
        assert_eq!(confidence_select(&te, &[0.0], &sh_tie, &[0.0]).unwrap(), "A");
        for p in te.predict_proba(&[0.0]).unwrap() {
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn meta_select_routes_to_the_chosen_selector() {
        let te = constant_forest(0, 1.0);
        let sh = constant_forest(1, 1.0);
        let meta_te = constant_forest(0, 1.0);
        let meta_sh = constant_forest(1, 1.0);
        // meta forests were trained on one feature; pad to match concat
        let pick = |m: &ClassificationForest| {
            let mut m = m.clone();
            m.n_features = 2;
            meta_select(&m, &[0.0], &[0.0], &te, &sh).unwrap()
        };
        assert_eq!(pick(&meta_te), "A");
        assert_eq!(pick(&meta_sh), "B");
    }

    #[test]
    fn cv_experiment_invariants() {
        let algos = [[1.0, 4.0, 9.0], [6.0, 2.0, 9.0], [8.0, 8.0, 3.0]];
        let mut rows = Vec::new();
        let mut te = Vec::new();
        let mut sh = Vec::new();
        let names: Vec<String> = (0..30).map(|i| format!("p{i:02}")).collect();
        for (i, name) in names.iter().enumerate() {
            rows.push((name.as_str(), &algos[i % 3][..]));
            for rep in 0..4 {
                let noise = ((i * 7 + rep * 3) % 11) as f64 / 11.0;
                te.push(fv(name, rep, EncodingTag::Target, vec![10.0 * (i % 3) as f64 + noise; 38]));
                sh.push(fv(name, rep, EncodingTag::Shap, vec![noise * 3.0; 38]));
            }
        }
        let p = perf(&rows);
        let cfg = CvConfig {
            folds: 5,
            forest: ForestParams {
                n_trees: 15,
                ..ForestParams::classification(0)
            },
            ..Default::default()
        };
        let (plan, out) = run_cv_experiment(&te, &sh, &p, &cfg, 4).unwrap();
        assert_eq!(out.len(), 120);
        for r in &out {
            assert_eq!(plan.fold_of(&r.instance_id), Some(r.fold));
            let (t, s) = (r.relert_of(Strategy::Te), r.relert_of(Strategy::Sh));
            assert_eq!(r.relert_of(Strategy::Hybrid), t.min(s));
            for st in [Strategy::Meta, Strategy::Confidence] {
                let c = r.choice(st);
                assert!(c == r.choice(Strategy::Te) || c == r.choice(Strategy::Sh));
            }
            assert!(r.relert.iter().all(|&v| v >= 1.0));
        }
        // TE features carry the class, so its selector should be perfect
        assert!(out.iter().all(|r| r.relert_of(Strategy::Te) == 1.0));
        let (_, again) = run_cv_experiment(&te, &sh, &p, &cfg, 4).unwrap();
        assert_eq!(out, again);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("outcomes.csv");
        write_outcomes(&path, &out).unwrap();
        assert_eq!(read_outcomes(&path).unwrap(), out);
    }
}
