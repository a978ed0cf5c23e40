//! Seeded, resumable end-to-end pipeline.
//!
//! Stages write their artifacts under `<out>/<stage>/` together with a
//! `stage.json` manifest holding the master seed and the config hash. A stage
//! whose manifest already matches the current hash is skipped; a stage whose
//! input stage is missing or was produced under another hash refuses to run.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::design::{normalize, sample_initial_design, Design, EncodingTag, NumericDesign, DEFAULT_MULTIPLIER};
use crate::ela::{compute_feature_vector, read_feature_table, write_feature_table, FeatureVector};
use crate::encoding::{one_hot_encode, shap_encode, target_encode, EncoderConfig};
use crate::error::{Error, Result};
use crate::forest::ForestParams;
use crate::io::{read_json, write_json};
use crate::metrics::{build_report, emit_report, relert, template_group};
use crate::portfolio::{benchmark_suite, write_traces, PerformanceTable, PortfolioConfig};
use crate::problem::{MixedVariableProblem, SuiteConfig, SuiteManifest, Template};
use crate::seed::{derive_seed, derive_seed_str};
use crate::selector::{read_outcomes, run_cv_experiment, write_outcomes, CvConfig, DEFAULT_FOLDS, INNER_FOLDS};

pub const DEFAULT_FEATURE_REPETITIONS: usize = 20;

fn default_suite() -> SuiteConfig {
    SuiteConfig {
        templates: vec![
            Template::new("mixed-a", 2, 1, 1, 15),
            Template::new("mixed-b", 1, 1, 2, 15).hierarchical(),
            Template::new("mixed-c", 2, 0, 1, 15).hierarchical(),
        ],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub suite: SuiteConfig,
    /// Initial designs have `design_multiplier * D` rows.
    pub design_multiplier: usize,
    /// Independent designs (and feature vectors) per instance.
    pub repetitions: usize,
    /// Encodings whose features are computed; selection needs target and shap.
    pub encodings: Vec<EncodingTag>,
    pub encoder: EncoderConfig,
    pub selector_forest: ForestParams,
    pub portfolio: PortfolioConfig,
    pub cv_folds: usize,
    pub inner_folds: usize,
    pub seed: u64,
    /// Output directory; not part of the config hash.
    pub out: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            suite: default_suite(),
            design_multiplier: DEFAULT_MULTIPLIER,
            repetitions: DEFAULT_FEATURE_REPETITIONS,
            encodings: EncodingTag::ALL.to_vec(),
            encoder: EncoderConfig::default(),
            selector_forest: ForestParams::classification(0),
            portfolio: PortfolioConfig::default(),
            cv_folds: DEFAULT_FOLDS,
            inner_folds: INNER_FOLDS,
            seed: 0,
            out: PathBuf::from("mvela-out"),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn validate(&self) -> Result<()> {
        if self.design_multiplier == 0 || self.repetitions == 0 {
            return Err(Error::Config("design multiplier and repetitions must be positive".into()));
        }
        for needed in [EncodingTag::Target, EncodingTag::Shap] {
            if !self.encodings.contains(&needed) {
                return Err(Error::Config(format!("encodings must include `{needed}`")));
            }
        }
        self.encoder.validate()?;
        self.selector_forest.validate()
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("out");
        }
        // serde_json maps keep keys sorted, so this text is canonical
        let text = serde_json::to_string(&v)?;
        Ok(hex::encode(Sha256::digest(text.as_bytes())))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Suite,
    Sample,
    Encode,
    Features,
    Bench,
    Select,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Suite,
        Stage::Sample,
        Stage::Encode,
        Stage::Features,
        Stage::Bench,
        Stage::Select,
        Stage::Report,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Suite => "suite",
            Stage::Sample => "sample",
            Stage::Encode => "encode",
            Stage::Features => "features",
            Stage::Bench => "bench",
            Stage::Select => "select",
            Stage::Report => "report",
        }
    }

    pub fn dependencies(&self) -> &'static [Stage] {
        match self {
            Stage::Suite => &[],
            Stage::Sample => &[Stage::Suite],
            Stage::Encode => &[Stage::Sample],
            Stage::Features => &[Stage::Encode],
            Stage::Bench => &[Stage::Suite],
            Stage::Select => &[Stage::Features, Stage::Bench],
            Stage::Report => &[Stage::Select, Stage::Bench],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageStatus {
    Ran,
    /// Artifacts for the current config already existed.
    UpToDate,
}

pub struct Pipeline {
    config: PipelineConfig,
    hash: String,
}

fn design_stem(instance: &str, rep: usize) -> String {
    format!("{instance}_r{rep:02}")
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let hash = config.hash()?;
        Ok(Self { config, hash })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.config.out.join(stage.name())
    }

    fn manifest_path(&self, stage: Stage) -> PathBuf {
        self.stage_dir(stage).join("stage.json")
    }

    fn manifest(&self, stage: Stage) -> Option<StageManifest> {
        read_json(&self.manifest_path(stage)).ok()
    }

    fn is_current(&self, stage: Stage) -> bool {
        self.manifest(stage).is_some_and(|m| m.config_hash == self.hash)
    }

    fn require(&self, stage: Stage) -> Result<()> {
        let path = self.manifest_path(stage);
        let m: StageManifest = match read_json(&path) {
            Ok(m) => m,
            Err(_) => {
                return Err(Error::MissingStage {
                    stage: stage.name().to_string(),
                    path,
                })
            }
        };
        if m.config_hash != self.hash {
            return Err(Error::StaleStage {
                stage: stage.name().to_string(),
                expected: self.hash.clone(),
                found: m.config_hash,
            });
        }
        Ok(())
    }

    /// Runs one stage unless it is already up to date.
    pub fn run_stage(&self, stage: Stage) -> Result<StageStatus> {
        for dep in stage.dependencies() {
            self.require(*dep)?;
        }
        if self.is_current(stage) {
            return Ok(StageStatus::UpToDate);
        }
        // drop the old manifest first so an interrupted run is not mistaken
        // for a finished one
        let _ = std::fs::remove_file(self.manifest_path(stage));
        match stage {
            Stage::Suite => self.suite()?,
            Stage::Sample => self.sample()?,
            Stage::Encode => self.encode()?,
            Stage::Features => self.features()?,
            Stage::Bench => self.bench()?,
            Stage::Select => self.select()?,
            Stage::Report => self.report()?,
        }
        write_json(
            &self.manifest_path(stage),
            &StageManifest {
                stage: stage.name().to_string(),
                seed: self.config.seed,
                config_hash: self.hash.clone(),
            },
        )?;
        Ok(StageStatus::Ran)
    }

    /// Runs every stage in dependency order.
    pub fn run_all(&self) -> Result<Vec<(Stage, StageStatus)>> {
        Stage::ALL
            .iter()
            .map(|s| self.run_stage(*s).map(|st| (*s, st)))
            .collect()
    }

    pub fn report_path(&self) -> PathBuf {
        self.stage_dir(Stage::Report).join("report.json")
    }

    fn load_manifest(&self) -> Result<SuiteManifest> {
        read_json(&self.stage_dir(Stage::Suite).join("manifest.json"))
    }

    fn problems(&self) -> Result<Vec<MixedVariableProblem>> {
        self.load_manifest()?.problems()
    }

    /// (instance, repetition) pairs in a fixed order.
    fn jobs(&self) -> Result<Vec<(String, usize)>> {
        Ok(self
            .load_manifest()?
            .instances
            .iter()
            .flat_map(|e| (0..self.config.repetitions).map(move |r| (e.instance_id.clone(), r)))
            .collect())
    }

    fn suite(&self) -> Result<()> {
        let manifest = SuiteManifest::generate(&self.config.suite, derive_seed_str(self.config.seed, "suite"))?;
        write_json(&self.stage_dir(Stage::Suite).join("manifest.json"), &manifest)
    }

    fn sample(&self) -> Result<()> {
        let problems = self.problems()?;
        let dir = self.stage_dir(Stage::Sample);
        let jobs: Vec<(&MixedVariableProblem, usize)> = problems
            .iter()
            .flat_map(|p| (0..self.config.repetitions).map(move |r| (p, r)))
            .collect();
        jobs.par_iter().try_for_each(|(p, rep)| {
            let seed = derive_seed(derive_seed_str(self.config.seed, &format!("sample:{}", p.instance_id())), *rep as u64);
            let d = sample_initial_design(p, self.config.design_multiplier, seed)?;
            d.save(&dir, &design_stem(p.instance_id(), *rep))
        })
    }

    fn encode_one(&self, design: &Design, tag: EncodingTag, rep: usize) -> Result<NumericDesign> {
        let encoded = match tag {
            EncodingTag::Onehot => one_hot_encode(design),
            EncodingTag::Target => target_encode(design, self.config.encoder.te_weight)?,
            EncodingTag::Shap => {
                let s = derive_seed(derive_seed_str(self.config.seed, &format!("shap:{}", design.problem_id)), rep as u64);
                let cfg = EncoderConfig {
                    seed: s,
                    shap_forest: self.config.encoder.shap_forest.with_seed(derive_seed(s, u64::MAX)),
                    ..self.config.encoder.clone()
                };
                shap_encode(design, &cfg)?
            }
        };
        normalize(&encoded)
    }

    fn encode(&self) -> Result<()> {
        let src = self.stage_dir(Stage::Sample);
        let dir = self.stage_dir(Stage::Encode);
        self.jobs()?.par_iter().try_for_each(|(inst, rep)| {
            let stem = design_stem(inst, *rep);
            let design = Design::load(&src, &stem)?;
            for tag in &self.config.encodings {
                self.encode_one(&design, *tag, *rep)?.save(&dir.join(tag.as_str()), &stem)?;
            }
            Ok(())
        })
    }

    fn feature_path(&self, tag: EncodingTag) -> PathBuf {
        self.stage_dir(Stage::Features).join(format!("features_{tag}.csv"))
    }

    fn features(&self) -> Result<()> {
        let src = self.stage_dir(Stage::Encode);
        let jobs = self.jobs()?;
        for tag in &self.config.encodings {
            let rows = jobs
                .par_iter()
                .map(|(inst, rep)| {
                    let d = NumericDesign::load(&src.join(tag.as_str()), &design_stem(inst, *rep))?;
                    let seed = derive_seed(derive_seed_str(self.config.seed, &format!("ela:{inst}")), *rep as u64);
                    compute_feature_vector(&d, *rep, seed)
                })
                .collect::<Result<Vec<FeatureVector>>>()?;
            write_feature_table(&self.feature_path(*tag), &rows)?;
        }
        Ok(())
    }

    fn perf_path(&self) -> PathBuf {
        self.stage_dir(Stage::Bench).join("performance.csv")
    }

    fn bench(&self) -> Result<()> {
        let problems = self.problems()?;
        let (table, runs) = benchmark_suite(&problems, &self.config.portfolio, derive_seed_str(self.config.seed, "bench"))?;
        let traces = self.stage_dir(Stage::Bench).join("traces");
        problems
            .par_iter()
            .zip(&runs)
            .try_for_each(|(p, b)| write_traces(&traces.join(format!("{}.csv", p.instance_id())), &b.traces))?;
        table.save(&self.perf_path())
    }

    fn outcomes_path(&self) -> PathBuf {
        self.stage_dir(Stage::Select).join("outcomes.csv")
    }

    fn select(&self) -> Result<()> {
        let te = read_feature_table(&self.feature_path(EncodingTag::Target))?;
        let sh = read_feature_table(&self.feature_path(EncodingTag::Shap))?;
        let perf = PerformanceTable::load(&self.perf_path())?;
        let cv = CvConfig {
            folds: self.config.cv_folds,
            inner_folds: self.config.inner_folds,
            forest: self.config.selector_forest.clone(),
        };
        let (plan, outcomes) = run_cv_experiment(&te, &sh, &perf, &cv, derive_seed_str(self.config.seed, "select"))?;
        write_json(&self.stage_dir(Stage::Select).join("folds.json"), &plan)?;
        write_outcomes(&self.outcomes_path(), &outcomes)
    }

    fn report(&self) -> Result<()> {
        let perf = PerformanceTable::load(&self.perf_path())?;
        let outcomes = read_outcomes(&self.outcomes_path())?;
        let rel = relert(&perf, &outcomes)?;
        let report = build_report(&rel, template_group, self.config.seed, &self.hash);
        emit_report(&self.stage_dir(Stage::Report), &rel, &report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_experimental_protocol() {
        let c = PipelineConfig::default();
        assert_eq!(c.design_multiplier, 50);
        assert_eq!(c.repetitions, 20);
        assert_eq!(c.portfolio.budget_multiplier, 100);
        assert_eq!(c.portfolio.repetitions, 20);
        assert_eq!(c.cv_folds, 10);
    }

    #[test]
    fn hash_ignores_the_output_directory() {
        let a = PipelineConfig::default();
        let b = PipelineConfig {
            out: "elsewhere".into(),
            ..a.clone()
        };
        let c = PipelineConfig { seed: 1, ..a.clone() };
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
    }

    #[test]
    fn partial_config_files_fill_in_defaults() {
        let c: PipelineConfig = serde_json::from_str(r#"{"seed": 9, "cv_folds": 5}"#).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.cv_folds, 5);
        assert_eq!(c.repetitions, 20);
    }

    #[test]
    fn stage_names_round_trip() {
        for s in Stage::ALL {
            assert_eq!(s.name().parse::<Stage>().unwrap(), s);
        }
        assert!("nope".parse::<Stage>().is_err());
    }

    #[test]
    fn selection_needs_both_compared_encodings() {
        let c = PipelineConfig {
            encodings: vec![EncodingTag::Target],
            ..Default::default()
        };
        assert!(Pipeline::new(c).is_err());
    }
}
