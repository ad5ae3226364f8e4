//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 runtime
//! failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data::{parse_obb_annotations, tile_dataset, Dataset, TileConfig};
use crate::eval::{
    evaluate, ground_truth_from_entries, load_detections, nms_per_image_class, ApMethod, EvalConfig, GroundTruthObject,
    GroundTruthSet,
};
use crate::experiment::{
    execute, plan_experiment, variant_quality, EvalSettings, ExecuteOptions, ExperimentConfig, Journal, RunFilter,
    RunStatus,
};
use crate::modifiers::{apply_modifier, ApplyOptions, ChromaSubsampling, Interpolation, ModifierSpec};
use crate::quality::{psnr, rer, snr, Plane};
use crate::raster::Raster;
use crate::report::{emit_scatter, optimal_point, render_table, summarize};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "iqbench",
    version,
    about = "Image compression vs. detection performance benchmarking"
)]
#[command(arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Materialize modified dataset variants (JPEG sweep, resize, identity).
    Modify(ModifyArgs),
    /// RER, SNR and PSNR for an image or a dataset partition.
    Quality(QualityArgs),
    /// Evaluate predictions against ground truth.
    Eval(EvalArgs),
    /// Execute an experiment config and journal the runs.
    Run(RunArgs),
    /// Summary table and scatter CSV from a journal.
    Report(ReportArgs),
    /// Smallest average size whose mAP is within epsilon of the best.
    Optimum(OptimumArgs),
    /// Cut large images into square tiles.
    Tile(TileArgs),
}

#[derive(Debug, Args)]
pub struct ModifyArgs {
    /// Dataset manifest (JSON) or directory.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// JPEG qualities, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub quality: Vec<u8>,
    /// Resize scales in (0, 1], comma separated.
    #[arg(long, value_delimiter = ',')]
    pub resize: Vec<f64>,
    #[arg(long, default_value = "bilinear")]
    pub method: Interpolation,
    /// Also write an unmodified copy.
    #[arg(long)]
    pub identity: bool,
    /// Keep full-resolution chroma.
    #[arg(long)]
    pub yuv444: bool,
    /// Keep going when single images fail.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Args)]
pub struct QualityArgs {
    /// Single image to measure.
    #[arg(long, conflicts_with = "dataset", required_unless_present = "dataset")]
    pub image: Option<PathBuf>,
    /// Reference image for PSNR (with --image).
    #[arg(long, requires = "image")]
    pub reference: Option<PathBuf>,
    /// Dataset manifest or directory.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Source dataset for PSNR (with --dataset).
    #[arg(long, requires = "dataset")]
    pub source: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    pub partition: String,
    /// Images sampled per dataset; 0 uses all.
    #[arg(long, default_value_t = 50)]
    pub sample_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Annotation directory (`<image id>.txt`), dataset directory or manifest.
    #[arg(long)]
    pub gt: PathBuf,
    /// Merged prediction file or directory of per-image files.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long, default_value = "test")]
    pub partition: String,
    /// `start:step:end` or a comma separated list.
    #[arg(long, default_value = "0.5:0.05:0.95", value_parser = parse_iou_grid)]
    pub iou_grid: IouGrid,
    #[arg(long)]
    pub nms_threshold: Option<f64>,
    #[arg(long, default_value = "all_point")]
    pub ap_method: ApMethod,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the journal named in the config.
    #[arg(long)]
    pub journal: Option<PathBuf>,
    #[arg(long, value_parser = parse_iou_grid)]
    pub iou_grid: Option<IouGrid>,
    #[arg(long)]
    pub nms_threshold: Option<f64>,
    /// Quality-metric sample per variant; 0 uses all images.
    #[arg(long)]
    pub sample_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub journal: PathBuf,
    #[arg(long)]
    pub provider: Option<String>,
    /// Write the scatter CSV here (`-` for stdout).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimumArgs {
    #[arg(long)]
    pub journal: PathBuf,
    #[arg(long)]
    pub provider: String,
    /// Tolerated mAP loss below the best run.
    #[arg(long)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct TileArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1024)]
    pub tile: u32,
    #[arg(long, default_value_t = 0)]
    pub overlap: u32,
    #[arg(long, default_value_t = 0.5)]
    pub min_area_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IouGrid(pub Vec<f64>);

/// `0.5:0.05:0.95` (inclusive) or `0.5,0.75`.
pub fn parse_iou_grid(s: &str) -> std::result::Result<IouGrid, String> {
    let nums = |sep: char| -> std::result::Result<Vec<f64>, String> {
        s.split(sep)
            .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
            .collect()
    };
    let grid = if s.contains(':') {
        let v = nums(':')?;
        let [start, step, end] = v[..] else {
            return Err("range form is start:step:end".into());
        };
        if step.is_nan() || step <= 0.0 || end < start {
            return Err("range needs step > 0 and end >= start".into());
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        // round to the step's decimals so 0.5 + 2 * 0.05 prints as 0.6
        (0..=n)
            .map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9)
            .collect()
    } else {
        nums(',')?
    };
    if grid.is_empty() || !grid.iter().all(|&t| t > 0.0 && t < 1.0) {
        return Err("IoU thresholds must lie in (0, 1)".into());
    }
    Ok(IouGrid(grid))
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Modify(a) => modify(a),
        Command::Quality(a) => quality(a),
        Command::Eval(a) => eval(a),
        Command::Run(a) => run(a),
        Command::Report(a) => report(a),
        Command::Optimum(a) => optimum(a),
        Command::Tile(a) => tile(a),
    }
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    if path.is_dir() {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into());
        Dataset::from_directory(path, name)
    } else {
        Dataset::load_manifest(path)
    }
}

fn modify(a: ModifyArgs) -> Result<()> {
    let dataset = load_dataset(&a.dataset)?;
    let subsampling = if a.yuv444 {
        ChromaSubsampling::Yuv444
    } else {
        ChromaSubsampling::Yuv420
    };
    let mut specs = Vec::new();
    if a.identity {
        specs.push(ModifierSpec::Identity);
    }
    specs.extend(
        a.quality
            .iter()
            .map(|&quality| ModifierSpec::Jpeg { quality, subsampling }),
    );
    specs.extend(a.resize.iter().map(|&s| ModifierSpec::resize(s, a.method)));
    if specs.is_empty() {
        return Err(Error::invalid("nothing to do: pass --quality, --resize or --identity"));
    }
    let opts = ApplyOptions { strict: !a.lenient };
    println!("{:<24} {:>10} {:>8}", "variant", "size MB", "failed");
    for spec in &specs {
        let v = apply_modifier(&dataset, spec, &a.out, &opts)?;
        println!("{:<24} {:>10.3} {:>8}", v.name, v.avg_size_mb, v.failures.len());
    }
    Ok(())
}

fn quality(a: QualityArgs) -> Result<()> {
    let metrics = if let Some(path) = &a.image {
        let raster = Raster::open(path)?;
        let plane = Plane::<f64>::luma(&raster);
        let mut m = serde_json::Map::new();
        let r = rer(&plane)?;
        let s = snr(&plane)?;
        m.insert("rer".into(), serde_json::to_value(r.rer_median)?);
        m.insert("rer_x".into(), serde_json::to_value(r.rer_x)?);
        m.insert("rer_y".into(), serde_json::to_value(r.rer_y)?);
        m.insert("edge_count".into(), r.edge_count.into());
        // JSON has no infinity; the unavailable SNR is written as null
        m.insert(
            "snr".into(),
            serde_json::to_value(s.is_available().then_some(s.snr_linear))?,
        );
        m.insert(
            "snr_db".into(),
            serde_json::to_value(s.is_available().then_some(s.snr_db))?,
        );
        m.insert("noise_sigma".into(), serde_json::to_value(s.noise_sigma)?);
        if let Some(reference) = &a.reference {
            let p = psnr(&Raster::open(reference)?, &raster)?;
            m.insert("psnr".into(), serde_json::to_value(p.is_finite().then_some(p))?);
        }
        serde_json::Value::Object(m)
    } else {
        let variant = load_dataset(a.dataset.as_ref().expect("clap enforces one input"))?;
        let source = match &a.source {
            Some(p) => load_dataset(p)?,
            None => Dataset::new(""),
        };
        let settings = EvalSettings {
            quality_sample: (a.sample_size > 0).then_some(a.sample_size),
            seed: a.seed,
            partition: a.partition.clone(),
            ..EvalSettings::default()
        };
        serde_json::to_value(variant_quality(&source, &variant, &settings)?)?
    };
    println!("{}", serde_json::to_string_pretty(&metrics)?);
    Ok(())
}

fn load_ground_truth(path: &Path, partition: &str) -> Result<GroundTruthSet<f64>> {
    let is_label_dir = path.is_dir()
        && std::fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok())
            .all(|e| e.path().is_file() && e.path().extension().is_some_and(|x| x == "txt"));
    if !is_label_dir {
        let ds = load_dataset(path)?;
        return ground_truth_from_entries(ds.partition(partition)?);
    }
    let mut set = GroundTruthSet::new();
    for entry in std::fs::read_dir(path).map_err(|e| Error::io(path, e))? {
        let p = entry.map_err(|e| Error::io(path, e))?.path();
        let id = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        let objects = parse_obb_annotations(&text)?
            .iter()
            .map(|a| Ok(GroundTruthObject::new(a.to_quad()?, a.category.clone(), a.difficult)))
            .collect::<Result<Vec<_>>>()?;
        set.insert(id, objects);
    }
    Ok(set)
}

fn eval(a: EvalArgs) -> Result<()> {
    let gts = load_ground_truth(&a.gt, &a.partition)?;
    let mut preds = load_detections(&a.pred)?;
    if let Some(t) = a.nms_threshold {
        preds = nms_per_image_class(preds, t);
    }
    let cfg = EvalConfig {
        iou_thresholds: a.iou_grid.0,
        ap_method: a.ap_method,
        ..EvalConfig::default()
    };
    let report = evaluate(&preds, &gts, &cfg)?;
    let json = serde_json::to_string_pretty(&report)?;
    match &a.out {
        Some(p) => std::fs::write(p, json).map_err(|e| Error::io(p, e))?,
        None => println!("{json}"),
    }
    let c = report.counts;
    eprintln!(
        "mAP {:.3}  AR {:.3}  TP {} FP {} FN {} (IoU {})",
        report.map, report.ar, c.tp, c.fp, c.fn_, report.reference_iou
    );
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(j) = a.journal {
        cfg.journal = j;
    }
    if let Some(g) = a.iou_grid {
        cfg.eval.iou_grid = g.0;
    }
    if let Some(t) = a.nms_threshold {
        cfg.eval.nms_threshold = Some(t);
    }
    if let Some(n) = a.sample_size {
        cfg.eval.quality_sample = (n > 0).then_some(n);
    }
    let dataset = cfg.load_dataset()?;
    let work_dir = cfg
        .work_dir
        .clone()
        .unwrap_or_else(|| cfg.journal.parent().unwrap_or(Path::new(".")).join("work"));
    let plan = plan_experiment(dataset, cfg.modifiers, cfg.providers, cfg.eval)?;
    let opts = ExecuteOptions::from_env(cfg.journal.clone(), work_dir)?;
    let records = execute(&plan, &opts)?;
    let failed = records.iter().filter(|r| r.status == RunStatus::Failed).count();
    for r in records.iter().filter(|r| r.status == RunStatus::Failed) {
        eprintln!("run {} failed: {}", r.run_id, r.diagnostics.as_deref().unwrap_or(""));
    }
    match summarize(&records) {
        Ok(s) => print!("{}", render_table(&s)),
        Err(Error::NoSuccessfulRuns) => {}
        Err(e) => return Err(e),
    }
    println!(
        "{} runs, {} failed, journal {}",
        records.len(),
        failed,
        cfg.journal.display()
    );
    if failed == records.len() {
        return Err(Error::NoSuccessfulRuns);
    }
    Ok(())
}

fn journal_runs(path: &Path, provider: Option<String>) -> Result<Vec<crate::experiment::RunRecord>> {
    if !path.exists() {
        return Err(Error::io(path, std::io::ErrorKind::NotFound.into()));
    }
    Journal::open(path)?.list_runs(&RunFilter {
        provider,
        ..RunFilter::default()
    })
}

fn report(a: ReportArgs) -> Result<()> {
    let runs = journal_runs(&a.journal, a.provider)?;
    let summary = summarize(&runs)?;
    match a.csv.as_deref() {
        Some(p) if p == Path::new("-") => print!("{}", emit_scatter(&runs)?),
        Some(p) => {
            std::fs::write(p, emit_scatter(&runs)?).map_err(|e| Error::io(p, e))?;
            print!("{}", render_table(&summary));
        }
        None => print!("{}", render_table(&summary)),
    }
    Ok(())
}

fn optimum(a: OptimumArgs) -> Result<()> {
    let runs = journal_runs(&a.journal, Some(a.provider.clone()))?;
    let summary = summarize(&runs)?;
    let points = summary.points_for(&a.provider);
    let best = optimal_point(&points, a.epsilon)?;
    println!("{}", best.avg_size_mb);
    eprintln!(
        "{} {}: mAP {} at {} MB",
        best.provider, best.modifier, best.map, best.avg_size_mb
    );
    Ok(())
}

fn tile(a: TileArgs) -> Result<()> {
    let dataset = load_dataset(&a.dataset)?;
    let cfg = TileConfig {
        tile: a.tile,
        overlap: a.overlap,
        min_area_fraction: a.min_area_fraction,
        ..TileConfig::default()
    };
    let tiled = tile_dataset(&dataset, &cfg, &a.out)?;
    println!("{} tiles from {} images", tiled.image_count(), dataset.image_count());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iou_grid_forms() {
        let g = parse_iou_grid("0.5:0.05:0.95").unwrap().0;
        assert_eq!(g.len(), 10);
        assert_eq!(g[2], 0.6);
        assert_eq!(g[9], 0.95);
        assert_eq!(parse_iou_grid("0.5, 0.75").unwrap().0, vec![0.5, 0.75]);
        assert!(parse_iou_grid("0.5:0:0.9").is_err());
        assert!(parse_iou_grid("1.0").is_err());
        assert!(parse_iou_grid("a,b").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(main_with_args(["iqbench"]), 1);
        assert_eq!(main_with_args(["iqbench", "frobnicate"]), 1);
        assert_eq!(main_with_args(["iqbench", "optimum", "--journal", "x"]), 1);
        assert_eq!(main_with_args(["iqbench", "--help"]), 0);
    }

    #[test]
    fn runtime_errors_exit_two() {
        let code = main_with_args([
            "iqbench",
            "optimum",
            "--journal",
            "/nonexistent/j.jsonl",
            "--provider",
            "x",
            "--epsilon",
            "0.1",
        ]);
        assert_eq!(code, 2);
    }
}
