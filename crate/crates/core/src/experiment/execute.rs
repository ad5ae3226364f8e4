use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, OnceLock};

use chrono::Utc;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::journal::{Journal, JournalWriter, RunRecord, RunStatus};
use super::plan::{EvalSettings, ExperimentPlan};
use crate::data::{Dataset, ImageEntry};
use crate::eval::{evaluate, ground_truth_from_entries, load_detections, nms_per_image_class};
use crate::modifiers::{apply_modifier, ApplyOptions, ModifiedDataset, ModifierSpec};
use crate::num::median;
use crate::quality::{psnr, rer, snr, Plane};
use crate::raster::Raster;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct ExecuteOptions {
    pub journal: PathBuf,
    /// Provider outputs go to `<work_dir>/predictions/<run id>`.
    pub work_dir: PathBuf,
    /// Materialized variants, reused across runs and invocations.
    pub cache_dir: PathBuf,
    pub workers: usize,
    pub apply: ApplyOptions,
}

impl ExecuteOptions {
    /// Defaults under `work_dir`, overridden by `IQB_CACHE_DIR` and
    /// `IQB_WORKERS`.
    pub fn from_env(journal: PathBuf, work_dir: PathBuf) -> Result<Self> {
        let cache_dir = std::env::var_os("IQB_CACHE_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| work_dir.join("cache"));
        let workers = match std::env::var("IQB_WORKERS") {
            Ok(v) => v
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Error::invalid(format!("IQB_WORKERS={v:?} is not a positive integer")))?,
            Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        Ok(ExecuteOptions {
            journal,
            work_dir,
            cache_dir,
            workers,
            apply: ApplyOptions::default(),
        })
    }
}

struct Variant {
    data: ModifiedDataset,
    quality: BTreeMap<String, f64>,
}

type Slot = Arc<OnceLock<std::result::Result<Arc<Variant>, String>>>;

/// Materializes each variant once, however many runs ask for it at once.
struct VariantCache<'a> {
    dataset: &'a Dataset,
    root: PathBuf,
    apply: ApplyOptions,
    eval: &'a EvalSettings,
    slots: Mutex<HashMap<String, Slot>>,
}

impl VariantCache<'_> {
    fn get(&self, spec: &ModifierSpec) -> Result<Arc<Variant>> {
        let slot = self.slots.lock().unwrap().entry(spec.name()).or_default().clone();
        slot.get_or_init(|| self.build(spec).map(Arc::new).map_err(|e| e.to_string()))
            .clone()
            .map_err(Error::invalid)
    }

    fn build(&self, spec: &ModifierSpec) -> Result<Variant> {
        let variant_root = self.root.join(spec.name());
        let cached = ModifiedDataset::load(&variant_root)
            .ok()
            .filter(|v| v.spec == *spec && v.dataset.image_count() + v.failures.len() == self.dataset.image_count());
        let data = match cached {
            Some(v) => {
                log::info!("reusing cached variant {}", variant_root.display());
                v
            }
            None => apply_modifier(self.dataset, spec, &self.root, &self.apply)?,
        };
        let quality = variant_quality(self.dataset, &data.dataset, self.eval)?;
        Ok(Variant { data, quality })
    }
}

fn dataset_key(dataset: &Dataset) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(dataset.name.as_bytes());
    for (part, e) in dataset.entries() {
        h.update(format!("\0{part}\0{}\0{}\0{}", e.id, e.path.display(), e.byte_size).as_bytes());
    }
    format!("{}-{}", sanitize(&dataset.name), hex::encode(&h.finalize()[..6]))
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// RER, SNR and PSNR (against the source image when sizes match) over a
/// seeded sample of the evaluation partition. Values are medians over the
/// images that produce one, except PSNR which is the mean.
pub fn variant_quality(base: &Dataset, variant: &Dataset, settings: &EvalSettings) -> Result<BTreeMap<String, f64>> {
    let entries = variant.partition(&settings.partition)?;
    let mut idx: Vec<usize> = (0..entries.len()).collect();
    if let Some(n) = settings.quality_sample {
        if n < idx.len() {
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(settings.seed));
            idx.truncate(n);
            idx.sort_unstable();
        }
    }
    let sources: HashMap<&str, &ImageEntry> = base
        .partition(&settings.partition)
        .map(|es| es.iter().map(|e| (e.id.as_str(), e)).collect())
        .unwrap_or_default();

    let per_image: Vec<Result<[Option<f64>; 5]>> = idx
        .par_iter()
        .map(|&i| {
            let e = &entries[i];
            let raster = Raster::open(&e.path)?;
            let plane = Plane::<f64>::luma(&raster);
            let (r, s) = if raster.width >= 64 && raster.height >= 64 {
                (Some(rer(&plane)?), Some(snr(&plane)?))
            } else {
                (None, None)
            };
            let p = match sources.get(e.id.as_str()) {
                Some(src) if src.width == e.width && src.height == e.height => {
                    let original = Raster::open(&src.path)?;
                    (original.channels == raster.channels)
                        .then(|| psnr(&original, &raster))
                        .transpose()?
                }
                _ => None,
            };
            Ok([
                r.and_then(|r| r.rer_median),
                r.and_then(|r| r.rer_x),
                r.and_then(|r| r.rer_y),
                s.map(|s| s.snr_linear).filter(|v| v.is_finite()),
                p.filter(|v| v.is_finite()),
            ])
        })
        .collect();
    let per_image = per_image.into_iter().collect::<Result<Vec<_>>>()?;
    let column = |k: usize| per_image.iter().filter_map(|v| v[k]).collect::<Vec<f64>>();

    let mut out = BTreeMap::new();
    for (k, name) in [(0, "rer"), (1, "rer_x"), (2, "rer_y"), (3, "snr")] {
        if let Some(m) = median(&column(k)) {
            out.insert(name.to_string(), m);
        }
    }
    if let Some(&s) = out.get("snr") {
        out.insert("snr_db".to_string(), 20.0 * s.log10());
    }
    let p = column(4);
    if !p.is_empty() {
        out.insert("psnr".to_string(), p.iter().sum::<f64>() / p.len() as f64);
    }
    out.insert("quality_images".to_string(), idx.len() as f64);
    Ok(out)
}

fn run_one(
    plan: &ExperimentPlan,
    cache: &VariantCache,
    opts: &ExecuteOptions,
    run_id: &str,
    spec: &ModifierSpec,
    provider: &super::PredictionProvider,
) -> (BTreeMap<String, f64>, Option<f64>, Result<()>) {
    let variant = match cache.get(spec) {
        Ok(v) => v,
        Err(e) => return (BTreeMap::new(), None, Err(e)),
    };
    let size = Some(variant.data.avg_size_mb);
    let result = (|| {
        let out_dir = opts.work_dir.join("predictions").join(run_id);
        let source = provider.obtain(&variant.data.root(), &spec.name(), &out_dir)?;
        let mut preds = load_detections(&source)?;
        if let Some(t) = plan.eval.nms_threshold {
            preds = nms_per_image_class(preds, t);
        }
        let gts = ground_truth_from_entries(variant.data.dataset.partition(&plan.eval.partition)?)?;
        let report = evaluate(&preds, &gts, &plan.eval.eval_config())?;
        let mut metrics = variant.quality.clone();
        metrics.insert("map".to_string(), report.map);
        metrics.insert("ar".to_string(), report.ar);
        if let Some(k) = report.iou_thresholds.iter().position(|&t| (t - 0.5).abs() < 1e-12) {
            let aps: Vec<f64> = report.per_class.values().filter_map(|c| c.ap[k]).collect();
            if !aps.is_empty() {
                metrics.insert("map_50".to_string(), aps.iter().sum::<f64>() / aps.len() as f64);
            }
        }
        for (class, c) in &report.per_class {
            if let Some(v) = c.mean_ap {
                metrics.insert(format!("ap/{class}"), v);
            }
            if let Some(v) = c.ar {
                metrics.insert(format!("ar/{class}"), v);
            }
        }
        metrics.insert("tp".to_string(), report.counts.tp as f64);
        metrics.insert("fp".to_string(), report.counts.fp as f64);
        metrics.insert("fn".to_string(), report.counts.fn_ as f64);
        Ok(metrics)
    })();
    match result {
        Ok(m) => (m, size, Ok(())),
        Err(e) => (BTreeMap::new(), size, Err(e)),
    }
}

/// Runs every planned (modifier, provider) pair and journals each record.
/// A failing run is journaled as failed and does not stop the others.
/// Records come back in plan order with their final run ids.
pub fn execute(plan: &ExperimentPlan, opts: &ExecuteOptions) -> Result<Vec<RunRecord>> {
    let writer = JournalWriter::spawn(Journal::open(&opts.journal)?);
    let cache = VariantCache {
        dataset: &plan.dataset,
        root: opts.cache_dir.join(dataset_key(&plan.dataset)),
        apply: opts.apply,
        eval: &plan.eval,
        slots: Mutex::new(HashMap::new()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| Error::invalid(e.to_string()))?;
    let sender = writer.sender();
    let records: Vec<Result<RunRecord>> = pool.install(|| {
        plan.runs
            .par_iter()
            .map(|run| {
                let spec = &plan.modifiers[run.modifier];
                let provider = &plan.providers[run.provider];
                let started_at = Utc::now();
                let (metrics, avg_size_mb, outcome) = run_one(plan, &cache, opts, &run.run_id, spec, provider);
                if let Err(e) = &outcome {
                    log::error!("run {} ({} / {}) failed: {e}", run.run_id, spec.name(), provider.name);
                }
                sender.append(RunRecord {
                    run_id: run.run_id.clone(),
                    dataset_variant: spec.name(),
                    provider: provider.name.clone(),
                    metrics,
                    avg_size_mb,
                    started_at,
                    finished_at: Utc::now(),
                    status: if outcome.is_ok() {
                        RunStatus::Ok
                    } else {
                        RunStatus::Failed
                    },
                    diagnostics: outcome.err().map(|e| e.to_string()),
                })
            })
            .collect()
    });
    drop(sender);
    writer.finish();
    records.into_iter().collect()
}
