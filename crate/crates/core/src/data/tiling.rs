use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::annotation::AnnotatedObject;
use super::dataset::{write_annotations, write_file, Dataset, ImageEntry};
use crate::geometry::{clip_convex, polygon_area, Point};
use crate::raster::Raster;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TileConfig {
    pub tile: u32,
    pub overlap: u32,
    pub pad_value: u8,
    /// Minimum share of an object's area inside a tile for it to be kept.
    pub min_area_fraction: f64,
}

impl Default for TileConfig {
    fn default() -> Self {
        TileConfig {
            tile: 1024,
            overlap: 0,
            pad_value: 0,
            min_area_fraction: 0.5,
        }
    }
}

impl TileConfig {
    fn check(&self) -> Result<()> {
        if self.tile == 0 || self.overlap >= self.tile {
            return Err(Error::invalid(format!(
                "tiling needs tile >= 1 and overlap < tile, got tile={} overlap={}",
                self.tile, self.overlap
            )));
        }
        if !(0.0..=1.0).contains(&self.min_area_fraction) {
            return Err(Error::invalid("min_area_fraction must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Square tile window in source-image pixels; may extend past the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileWindow {
    pub x: u32,
    pub y: u32,
    pub size: u32,
}

impl TileWindow {
    fn corners(&self) -> [Point<f64>; 4] {
        let (x0, y0) = (self.x as f64, self.y as f64);
        let (x1, y1) = (x0 + self.size as f64, y0 + self.size as f64);
        [
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ]
    }
}

/// Offsets `0, stride, 2 stride, ...` until a tile reaches the end of `len`.
pub fn tile_offsets(len: u32, tile: u32, stride: u32) -> Vec<u32> {
    let mut out = vec![0];
    let mut x = 0u32;
    while x + tile < len {
        x += stride;
        out.push(x);
    }
    out
}

pub fn plan_tiles(width: u32, height: u32, cfg: &TileConfig) -> Result<Vec<TileWindow>> {
    cfg.check()?;
    let stride = cfg.tile - cfg.overlap;
    let xs = tile_offsets(width, cfg.tile, stride);
    let ys = tile_offsets(height, cfg.tile, stride);
    Ok(ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| TileWindow { x, y, size: cfg.tile }))
        .collect())
}

/// Objects with at least `min_fraction` of their area inside `window`,
/// shifted into tile coordinates (vertices are not clipped).
pub fn assign_annotations(objects: &[AnnotatedObject], window: &TileWindow, min_fraction: f64) -> Vec<AnnotatedObject> {
    let clip = window.corners();
    let (ox, oy) = (window.x as f64, window.y as f64);
    objects
        .iter()
        .filter(|o| {
            let area = polygon_area(&o.quad);
            if area <= 0.0 {
                // degenerate: keep where its centroid lands
                let cx = o.quad.iter().map(|p| p.x).sum::<f64>() / 4.0;
                let cy = o.quad.iter().map(|p| p.y).sum::<f64>() / 4.0;
                return cx >= ox && cx < ox + window.size as f64 && cy >= oy && cy < oy + window.size as f64;
            }
            let mut subject = o.quad.to_vec();
            if crate::geometry::signed_area(&subject) < 0.0 {
                subject.reverse();
            }
            polygon_area(&clip_convex(&subject, &clip)) >= min_fraction * area
        })
        .map(|o| o.map_points(|p| Point::new(p.x - ox, p.y - oy)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Tile {
    pub window: TileWindow,
    pub entry: ImageEntry,
    pub raster: Raster,
}

/// Cuts an image into `tile x tile` crops on a regular grid, padding the
/// right and bottom tiles with `pad_value`.
pub fn tile_image(entry: &ImageEntry, raster: &Raster, cfg: &TileConfig) -> Result<Vec<Tile>> {
    if raster.width == 0 || raster.height == 0 {
        return Err(Error::DegenerateImage {
            id: entry.id.clone(),
            width: raster.width,
            height: raster.height,
        });
    }
    if (raster.width, raster.height) != (entry.width, entry.height) {
        return Err(Error::invalid(format!(
            "{}: entry says {}x{}, pixels are {}x{}",
            entry.id, entry.width, entry.height, raster.width, raster.height
        )));
    }
    let windows = plan_tiles(raster.width, raster.height, cfg)?;
    Ok(windows
        .into_iter()
        .map(|w| {
            let id = format!("{}__{}_{}", entry.id, w.x, w.y);
            let tile_entry = ImageEntry {
                path: format!("{id}.png").into(),
                id,
                annotation_path: None,
                width: w.size,
                height: w.size,
                byte_size: 0,
                annotations: assign_annotations(&entry.annotations, &w, cfg.min_area_fraction),
            };
            Tile {
                window: w,
                entry: tile_entry,
                raster: raster.crop_padded(w.x, w.y, w.size, w.size, cfg.pad_value),
            }
        })
        .collect())
}

/// Tiles every image of `dataset` into PNG crops under
/// `out_root/<partition>/`, with annotation files and a `manifest.json`.
pub fn tile_dataset(dataset: &Dataset, cfg: &TileConfig, out_root: &Path) -> Result<Dataset> {
    let mut out = Dataset {
        name: format!("{}_tiles{}", dataset.name, cfg.tile),
        partitions: Default::default(),
        provenance: dataset.provenance.clone(),
    };
    for (part, entries) in &dataset.partitions {
        let dir = out_root.join(part);
        let tiles: Vec<Vec<ImageEntry>> = entries
            .par_iter()
            .map(|e| {
                let raster = Raster::open(&e.path)?;
                tile_image(e, &raster, cfg)?
                    .into_iter()
                    .map(|t| {
                        let mut entry = t.entry;
                        let png = t.raster.encode_png()?;
                        entry.path = dir.join(format!("{}.png", entry.id));
                        entry.byte_size = png.len() as u64;
                        write_file(&entry.path, &png)?;
                        let ann = dir.join(format!("{}.txt", entry.id));
                        write_annotations(&ann, &entry.annotations)?;
                        entry.annotation_path = Some(ann);
                        Ok(entry)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        out.partitions.insert(part.clone(), tiles.concat());
    }
    out.save_manifest(out_root.join("manifest.json"))?;
    Ok(out)
}
