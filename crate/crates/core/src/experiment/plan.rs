use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::provider::PredictionProvider;
use crate::data::Dataset;
use crate::eval::{coco_iou_grid, ApMethod, EvalConfig};
use crate::modifiers::ModifierSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSettings {
    pub iou_grid: Vec<f64>,
    /// Rotated NMS applied per image and class before matching; `None`
    /// leaves predictions as delivered.
    pub nms_threshold: Option<f64>,
    pub ap_method: ApMethod,
    /// Images per variant for the quality metrics; `None` uses all.
    pub quality_sample: Option<usize>,
    pub seed: u64,
    pub partition: String,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            iou_grid: coco_iou_grid(),
            nms_threshold: Some(0.5),
            ap_method: ApMethod::AllPoint,
            quality_sample: Some(50),
            seed: 0,
            partition: "test".to_string(),
        }
    }
}

impl EvalSettings {
    pub fn eval_config(&self) -> EvalConfig<f64> {
        EvalConfig {
            iou_thresholds: self.iou_grid.clone(),
            ap_method: self.ap_method,
            ..EvalConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.eval_config().validate()?;
        if let Some(t) = self.nms_threshold {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::invalid(format!("NMS threshold {t} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedRun {
    pub run_id: String,
    pub modifier: usize,
    pub provider: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub dataset: Dataset,
    pub modifiers: Vec<ModifierSpec>,
    pub providers: Vec<PredictionProvider>,
    pub eval: EvalSettings,
    pub runs: Vec<PlannedRun>,
}

/// File form of an experiment for the `run` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Manifest file or dataset directory.
    pub dataset: PathBuf,
    pub modifiers: Vec<ModifierSpec>,
    pub providers: Vec<PredictionProvider>,
    #[serde(default)]
    pub eval: EvalSettings,
    pub journal: PathBuf,
    /// Provider outputs; defaults to a `work` directory next to the journal.
    #[serde(default)]
    pub work_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(std::path::Path::new("."));
        let resolve = |p: &PathBuf| if p.is_relative() { base.join(p) } else { p.clone() };
        cfg.dataset = resolve(&cfg.dataset);
        cfg.journal = resolve(&cfg.journal);
        cfg.work_dir = cfg.work_dir.as_ref().map(resolve);
        for p in &mut cfg.providers {
            if let super::ProviderMode::Precomputed { predictions_root } = &mut p.mode {
                *predictions_root = resolve(predictions_root);
            }
        }
        Ok(cfg)
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        if self.dataset.is_dir() {
            let name = self
                .dataset
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".to_string());
            Dataset::from_directory(&self.dataset, name)
        } else {
            Dataset::load_manifest(&self.dataset)
        }
    }
}

/// Hash of dataset identity, modifier and provider, 16 hex digits.
fn run_id(dataset: &Dataset, modifier: &ModifierSpec, provider: &str) -> String {
    let mut h = Sha256::new();
    h.update(dataset.name.as_bytes());
    for (part, entries) in &dataset.partitions {
        h.update([0u8]);
        h.update(part.as_bytes());
        for e in entries {
            h.update([1u8]);
            h.update(e.id.as_bytes());
        }
    }
    h.update([2u8]);
    h.update(serde_json::to_string(modifier).expect("spec serializes").as_bytes());
    h.update([3u8]);
    h.update(provider.as_bytes());
    hex::encode(&h.finalize()[..8])
}

/// The run set in modifier-major order.
pub fn plan_experiment(
    dataset: Dataset,
    modifiers: Vec<ModifierSpec>,
    providers: Vec<PredictionProvider>,
    eval: EvalSettings,
) -> Result<ExperimentPlan> {
    if modifiers.is_empty() {
        return Err(Error::EmptyInput("modifiers"));
    }
    if providers.is_empty() {
        return Err(Error::EmptyInput("providers"));
    }
    eval.validate()?;
    let mut seen = HashSet::new();
    for m in &modifiers {
        m.validate()?;
        if !seen.insert(m.name()) {
            return Err(Error::Duplicate(m.name()));
        }
    }
    let mut names = HashSet::new();
    for p in &providers {
        p.validate()?;
        if !names.insert(p.name.as_str()) {
            return Err(Error::Duplicate(p.name.clone()));
        }
    }
    let runs = modifiers
        .iter()
        .enumerate()
        .flat_map(|(mi, m)| {
            let dataset = &dataset;
            providers.iter().enumerate().map(move |(pi, p)| PlannedRun {
                run_id: run_id(dataset, m, &p.name),
                modifier: mi,
                provider: pi,
            })
        })
        .collect();
    Ok(ExperimentPlan {
        dataset,
        modifiers,
        providers,
        eval,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn providers(n: usize) -> Vec<PredictionProvider> {
        (0..n)
            .map(|i| PredictionProvider::precomputed(format!("p{i}"), "/x"))
            .collect()
    }

    #[test]
    fn cross_product_modifier_major() {
        let mods: Vec<_> = [95u8, 90, 85, 80, 75, 70, 60, 50, 40, 30, 20, 15, 10]
            .map(ModifierSpec::jpeg)
            .to_vec();
        let plan = plan_experiment(Dataset::new("d"), mods, providers(2), EvalSettings::default()).unwrap();
        assert_eq!(plan.runs.len(), 26);
        assert_eq!((plan.runs[0].modifier, plan.runs[0].provider), (0, 0));
        assert_eq!((plan.runs[1].modifier, plan.runs[1].provider), (0, 1));
        assert_eq!((plan.runs[2].modifier, plan.runs[2].provider), (1, 0));
        let ids: HashSet<_> = plan.runs.iter().map(|r| r.run_id.clone()).collect();
        assert_eq!(ids.len(), 26);

        let again = plan_experiment(
            Dataset::new("d"),
            plan.modifiers.clone(),
            providers(2),
            EvalSettings::default(),
        )
        .unwrap();
        assert_eq!(again.runs, plan.runs);
        let other = plan_experiment(
            Dataset::new("e"),
            plan.modifiers.clone(),
            providers(2),
            EvalSettings::default(),
        )
        .unwrap();
        assert_ne!(other.runs[0].run_id, plan.runs[0].run_id);
    }

    #[test]
    fn single_run_and_errors() {
        let one = plan_experiment(
            Dataset::new("d"),
            vec![ModifierSpec::Identity],
            providers(1),
            EvalSettings::default(),
        )
        .unwrap();
        assert_eq!(one.runs.len(), 1);
        let dup = plan_experiment(
            Dataset::new("d"),
            vec![ModifierSpec::jpeg(70), ModifierSpec::jpeg(70)],
            providers(1),
            EvalSettings::default(),
        );
        assert!(matches!(dup, Err(Error::Duplicate(n)) if n == "jpeg_q70"));
        assert!(plan_experiment(Dataset::new("d"), vec![], providers(1), EvalSettings::default()).is_err());
        assert!(plan_experiment(
            Dataset::new("d"),
            vec![ModifierSpec::Identity],
            vec![],
            EvalSettings::default()
        )
        .is_err());
    }

    #[test]
    fn settings_defaults_from_partial_json() {
        let s: EvalSettings = serde_json::from_str(r#"{"nms_threshold": null, "seed": 7}"#).unwrap();
        assert_eq!(s.nms_threshold, None);
        assert_eq!(s.quality_sample, Some(50));
        assert_eq!(s.iou_grid.len(), 10);
    }
}
