use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::jpeg::{jpeg_encode_with, JpegOptions};
use super::resize::resize_interpolate;
use super::spec::ModifierSpec;
use crate::data::{avg_file_size, serialize_obb_annotations, Dataset, ImageEntry};
use crate::geometry::Point;
use crate::raster::Raster;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct ApplyOptions {
    /// Abort when any image of a partition fails to transform.
    pub strict: bool,
}

impl Default for ApplyOptions {
    fn default() -> Self {
        ApplyOptions { strict: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageFailure {
    pub partition: String,
    pub id: String,
    pub error: String,
}

/// A materialized dataset variant and its measured file sizes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModifiedDataset {
    pub base: String,
    pub name: String,
    pub spec: ModifierSpec,
    pub avg_size_mb: f64,
    pub partition_avg_size_mb: BTreeMap<String, f64>,
    pub output_root: PathBuf,
    #[serde(default)]
    pub failures: Vec<ImageFailure>,
    #[serde(skip, default = "empty_dataset")]
    pub dataset: Dataset,
}

fn empty_dataset() -> Dataset {
    Dataset::new("")
}

const VARIANT_FILE: &str = "variant.json";
const MANIFEST_FILE: &str = "manifest.json";

impl ModifiedDataset {
    /// Directory holding the variant: `<output_root>/<modifier name>`.
    pub fn root(&self) -> PathBuf {
        self.output_root.join(&self.name)
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root().join(MANIFEST_FILE)
    }

    /// Loads a previously materialized variant from its directory.
    pub fn load(variant_root: &Path) -> Result<Self> {
        let path = variant_root.join(VARIANT_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut md: ModifiedDataset = serde_json::from_str(&text)?;
        md.dataset = Dataset::load_manifest(variant_root.join(MANIFEST_FILE))?;
        Ok(md)
    }

    fn save(&self) -> Result<()> {
        self.dataset.save_manifest(self.manifest_path())?;
        let path = self.root().join(VARIANT_FILE);
        fs::write(&path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(&path, e))
    }
}

/// Writes a transformed copy of every image under
/// `<output_root>/<modifier name>/<partition>/` together with annotation
/// files and manifests. Sizes are measured on the emitted files.
pub fn apply_modifier(
    dataset: &Dataset,
    spec: &ModifierSpec,
    output_root: &Path,
    opts: &ApplyOptions,
) -> Result<ModifiedDataset> {
    spec.validate()?;
    dataset.validate()?;
    let name = spec.name();
    let root = output_root.join(&name);

    let mut partitions = BTreeMap::new();
    let mut failures = Vec::new();
    let mut partition_avg = BTreeMap::new();
    for (part, entries) in &dataset.partitions {
        let dir = root.join(part);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let results: Vec<std::result::Result<ImageEntry, String>> = entries
            .par_iter()
            .map(|e| transform_entry(e, spec, &dir).map_err(|err| err.to_string()))
            .collect();
        let mut kept = Vec::with_capacity(entries.len());
        let mut lost = 0;
        for (entry, res) in entries.iter().zip(results) {
            match res {
                Ok(e) => kept.push(e),
                Err(error) => {
                    log::warn!("{name}: {part}/{}: {error}", entry.id);
                    lost += 1;
                    failures.push(ImageFailure {
                        partition: part.clone(),
                        id: entry.id.clone(),
                        error,
                    });
                }
            }
        }
        if lost > 0 && opts.strict {
            return Err(Error::ModifierFailed {
                partition: part.clone(),
                failed: lost,
                total: entries.len(),
            });
        }
        if !kept.is_empty() {
            partition_avg.insert(part.clone(), avg_file_size(&kept)?);
        }
        partitions.insert(part.clone(), kept);
    }

    let all: Vec<ImageEntry> = partitions.values().flatten().cloned().collect();
    let avg_size_mb = avg_file_size(&all)?;
    let mut provenance = dataset.provenance.clone();
    provenance.push(*spec);
    let md = ModifiedDataset {
        base: dataset.name.clone(),
        name: name.clone(),
        spec: *spec,
        avg_size_mb,
        partition_avg_size_mb: partition_avg,
        output_root: output_root.to_path_buf(),
        failures,
        dataset: Dataset {
            name: format!("{}_{name}", dataset.name),
            partitions,
            provenance,
        },
    };
    md.save()?;
    Ok(md)
}

fn transform_entry(entry: &ImageEntry, spec: &ModifierSpec, dir: &Path) -> Result<ImageEntry> {
    let write = |file: PathBuf, bytes: &[u8]| -> Result<PathBuf> {
        fs::write(&file, bytes).map_err(|e| Error::io(&file, e))?;
        Ok(file)
    };
    let (path, bytes_len, width, height, annotations) = match *spec {
        ModifierSpec::Identity => {
            let bytes = fs::read(&entry.path).map_err(|e| Error::io(&entry.path, e))?;
            let ext = entry
                .path
                .extension()
                .map(|e| e.to_string_lossy().into_owned())
                .unwrap_or_else(|| "img".into());
            let p = write(dir.join(format!("{}.{ext}", entry.id)), &bytes)?;
            (p, bytes.len(), entry.width, entry.height, entry.annotations.clone())
        }
        ModifierSpec::Jpeg { quality, subsampling } => {
            let raster = Raster::open(&entry.path)?;
            let bytes = jpeg_encode_with(&raster, &JpegOptions { quality, subsampling })?;
            let p = write(dir.join(format!("{}.jpg", entry.id)), &bytes)?;
            (p, bytes.len(), raster.width, raster.height, entry.annotations.clone())
        }
        ModifierSpec::Resize { scale, method } => {
            let raster = Raster::open(&entry.path)?;
            let out = resize_interpolate(&raster, scale, method)?;
            let sx = out.width as f64 / raster.width as f64;
            let sy = out.height as f64 / raster.height as f64;
            let bytes = out.encode_png()?;
            let p = write(dir.join(format!("{}.png", entry.id)), &bytes)?;
            let ann = entry
                .annotations
                .iter()
                .map(|o| o.map_points(|q| Point::new(q.x * sx, q.y * sy)))
                .collect();
            (p, bytes.len(), out.width, out.height, ann)
        }
    };

    let ann_path = dir.join(format!("{}.txt", entry.id));
    let geometry_untouched = !matches!(spec, ModifierSpec::Resize { .. });
    match (&entry.annotation_path, geometry_untouched) {
        (Some(src), true) => {
            fs::copy(src, &ann_path).map_err(|e| Error::io(src, e))?;
        }
        _ => {
            let text = serialize_obb_annotations(&annotations);
            fs::write(&ann_path, text).map_err(|e| Error::io(&ann_path, e))?;
        }
    }
    Ok(ImageEntry {
        id: entry.id.clone(),
        path,
        annotation_path: Some(ann_path),
        width,
        height,
        byte_size: bytes_len as u64,
        annotations,
    })
}

/// One JPEG variant per quality, in input order.
pub fn sweep(
    dataset: &Dataset,
    qualities: &[u8],
    output_root: &Path,
    opts: &ApplyOptions,
) -> Result<Vec<ModifiedDataset>> {
    if qualities.is_empty() {
        return Err(Error::EmptyInput("quality sweep"));
    }
    let specs: Vec<ModifierSpec> = qualities.iter().map(|&q| ModifierSpec::jpeg(q)).collect();
    for s in &specs {
        s.validate()?;
    }
    specs
        .iter()
        .map(|s| apply_modifier(dataset, s, output_root, opts))
        .collect()
}
