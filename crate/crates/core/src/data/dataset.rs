use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::annotation::{parse_obb_annotations, serialize_obb_annotations, AnnotatedObject};
use super::BYTES_PER_MB;
use crate::modifiers::ModifierSpec;
use crate::{Error, Result};

/// File extensions picked up when scanning a directory for images.
pub const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg", "tif", "tiff", "bmp"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub id: String,
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation_path: Option<PathBuf>,
    pub width: u32,
    pub height: u32,
    pub byte_size: u64,
    /// Loaded from `annotation_path`; not part of the manifest.
    #[serde(skip)]
    pub annotations: Vec<AnnotatedObject>,
}

impl ImageEntry {
    /// Builds an entry from an image on disk, reading only its header.
    pub fn from_file(id: impl Into<String>, path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let (width, height) = image::image_dimensions(&path)?;
        let byte_size = fs::metadata(&path).map_err(|e| Error::io(&path, e))?.len();
        Ok(ImageEntry {
            id: id.into(),
            path,
            annotation_path: None,
            width,
            height,
            byte_size,
            annotations: Vec::new(),
        })
    }

    pub fn with_annotation_file(mut self, path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        self.annotations = parse_obb_annotations(&text)?;
        self.annotation_path = Some(path);
        Ok(self)
    }
}

/// Partitioned image collection with the chain of modifiers that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub partitions: BTreeMap<String, Vec<ImageEntry>>,
    #[serde(default, rename = "modifiers")]
    pub provenance: Vec<ModifierSpec>,
}

impl Dataset {
    pub fn new(name: impl Into<String>) -> Self {
        Dataset {
            name: name.into(),
            partitions: BTreeMap::new(),
            provenance: Vec::new(),
        }
    }

    pub fn with_partition(mut self, name: impl Into<String>, entries: Vec<ImageEntry>) -> Self {
        self.partitions.insert(name.into(), entries);
        self
    }

    /// Checks id uniqueness across partitions and image dimensions.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for entries in self.partitions.values() {
            for e in entries {
                if !seen.insert(e.id.as_str()) {
                    return Err(Error::Duplicate(e.id.clone()));
                }
                if e.width == 0 || e.height == 0 {
                    return Err(Error::DegenerateImage {
                        id: e.id.clone(),
                        width: e.width,
                        height: e.height,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn partition(&self, name: &str) -> Result<&[ImageEntry]> {
        self.partitions
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::invalid(format!("dataset {} has no partition {name:?}", self.name)))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &ImageEntry)> {
        self.partitions
            .iter()
            .flat_map(|(p, v)| v.iter().map(move |e| (p.as_str(), e)))
    }

    pub fn image_count(&self) -> usize {
        self.partitions.values().map(Vec::len).sum()
    }

    /// Replaces partition `source` by new partitions named `targets`, split
    /// with `fractions` (see [`super::split_partition`]).
    pub fn split(&mut self, source: &str, targets: &[&str], fractions: &[f64], seed: u64) -> Result<()> {
        if targets.len() != fractions.len() {
            return Err(Error::invalid("one target name per fraction"));
        }
        let entries = self
            .partitions
            .remove(source)
            .ok_or_else(|| Error::invalid(format!("no partition {source:?}")))?;
        let parts = match super::split_partition(&entries, fractions, seed) {
            Ok(p) => p,
            Err(e) => {
                self.partitions.insert(source.to_string(), entries);
                return Err(e);
            }
        };
        for (name, part) in targets.iter().zip(parts) {
            self.partitions.insert(name.to_string(), part);
        }
        Ok(())
    }

    /// Reads a JSON manifest. Relative paths resolve against the manifest's
    /// directory and annotation files are loaded.
    pub fn load_manifest(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut ds: Dataset = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for entries in ds.partitions.values_mut() {
            for e in entries.iter_mut() {
                e.path = resolve(base, &e.path);
                if let Some(ann) = e.annotation_path.take() {
                    let ann = resolve(base, &ann);
                    let text = fs::read_to_string(&ann).map_err(|err| Error::io(&ann, err))?;
                    e.annotations = parse_obb_annotations(&text).map_err(|err| match err {
                        Error::Parse { line, message } => Error::Parse {
                            line,
                            message: format!("{}: {message}", ann.display()),
                        },
                        other => other,
                    })?;
                    e.annotation_path = Some(ann);
                }
            }
        }
        ds.validate()?;
        Ok(ds)
    }

    /// Writes the manifest; paths under the manifest's directory are stored
    /// relative to it.
    pub fn save_manifest(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or(Path::new("."));
        let mut ds = self.clone();
        for entries in ds.partitions.values_mut() {
            for e in entries.iter_mut() {
                e.path = relativize(base, &e.path);
                e.annotation_path = e.annotation_path.as_ref().map(|p| relativize(base, p));
            }
        }
        write_file(path, serde_json::to_string_pretty(&ds)?.as_bytes())
    }

    /// Scans a directory tree. Each subdirectory holding images becomes a
    /// partition (a DOTA-style `images/` + `labelTxt/` pair is understood);
    /// images directly under `root` form a single `test` partition.
    /// Annotations are `<stem>.txt` next to the image or in `labelTxt/`.
    pub fn from_directory(root: impl AsRef<Path>, name: impl Into<String>) -> Result<Self> {
        let root = root.as_ref();
        let mut ds = Dataset::new(name);
        let direct = scan_images(root)?;
        if !direct.is_empty() {
            ds.partitions.insert("test".into(), direct);
        }
        let mut subdirs: Vec<PathBuf> = fs::read_dir(root)
            .map_err(|e| Error::io(root, e))?
            .filter_map(|d| d.ok().map(|d| d.path()))
            .filter(|p| p.is_dir())
            .collect();
        subdirs.sort();
        for dir in subdirs {
            let images_dir = dir.join("images");
            let entries = if images_dir.is_dir() {
                scan_images(&images_dir)?
            } else {
                scan_images(&dir)?
            };
            if entries.is_empty() {
                continue;
            }
            let part = dir.file_name().unwrap().to_string_lossy().into_owned();
            ds.partitions.insert(part, entries);
        }
        ds.validate()?;
        Ok(ds)
    }
}

fn scan_images(dir: &Path) -> Result<Vec<ImageEntry>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|d| d.ok().map(|d| d.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .map(|e| IMAGE_EXTENSIONS.contains(&e.to_string_lossy().to_lowercase().as_str()))
                    .unwrap_or(false)
        })
        .collect();
    files.sort();
    let label_dir = dir
        .parent()
        .filter(|_| dir.file_name().is_some_and(|n| n == "images"))
        .map(|p| p.join("labelTxt"));
    files
        .into_iter()
        .map(|f| {
            let stem = f.file_stem().unwrap().to_string_lossy().into_owned();
            let entry = ImageEntry::from_file(stem.clone(), &f)?;
            let beside = f.with_extension("txt");
            let label = label_dir
                .as_ref()
                .map(|d| d.join(format!("{stem}.txt")))
                .filter(|p| p.is_file())
                .or_else(|| beside.is_file().then_some(beside));
            match label {
                Some(l) => entry.with_annotation_file(l),
                None => Ok(entry),
            }
        })
        .collect()
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn relativize(base: &Path, p: &Path) -> PathBuf {
    p.strip_prefix(base)
        .map(Path::to_path_buf)
        .unwrap_or_else(|_| p.to_path_buf())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_annotations(path: &Path, objects: &[AnnotatedObject]) -> Result<()> {
    write_file(path, serialize_obb_annotations(objects).as_bytes())
}

/// Mean of `byte_size` in decimal megabytes.
pub fn avg_file_size(entries: &[ImageEntry]) -> Result<f64> {
    if entries.is_empty() {
        return Err(Error::EmptyInput("average file size of no images"));
    }
    let total: u64 = entries.iter().map(|e| e.byte_size).sum();
    Ok(total as f64 / entries.len() as f64 / BYTES_PER_MB)
}
