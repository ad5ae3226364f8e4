use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::ImageEntry;
use crate::geometry::{quad_nms, Quad};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord<T> {
    pub image_id: String,
    pub quad: Quad<T>,
    pub category: String,
    pub score: T,
}

impl<T: Scalar> DetectionRecord<T> {
    pub fn new(image_id: impl Into<String>, quad: Quad<T>, category: impl Into<String>, score: T) -> Result<Self> {
        if !(score.is_finite() && score >= T::zero() && score <= T::one()) {
            return Err(Error::invalid(format!("detection score {score} outside [0, 1]")));
        }
        Ok(DetectionRecord {
            image_id: image_id.into(),
            quad,
            category: category.into(),
            score,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthObject<T> {
    pub quad: Quad<T>,
    pub category: String,
    pub difficult: bool,
}

impl<T: Scalar> GroundTruthObject<T> {
    pub fn new(quad: Quad<T>, category: impl Into<String>, difficult: bool) -> Self {
        GroundTruthObject {
            quad,
            category: category.into(),
            difficult,
        }
    }
}

/// Ground truth keyed by image id. Images without objects still get a key
/// so that predictions on them are recognized.
pub type GroundTruthSet<T> = BTreeMap<String, Vec<GroundTruthObject<T>>>;

/// Ground truth from loaded dataset entries.
pub fn ground_truth_from_entries<'a>(entries: impl IntoIterator<Item = &'a ImageEntry>) -> Result<GroundTruthSet<f64>> {
    let mut set = GroundTruthSet::new();
    for entry in entries {
        let objects = entry
            .annotations
            .iter()
            .map(|a| Ok(GroundTruthObject::new(a.to_quad()?, a.category.clone(), a.difficult)))
            .collect::<Result<Vec<_>>>()?;
        if set.insert(entry.id.clone(), objects).is_some() {
            return Err(Error::Duplicate(entry.id.clone()));
        }
    }
    Ok(set)
}

/// Rotated NMS within each (image, category) group.
pub fn nms_per_image_class<T: Scalar>(preds: Vec<DetectionRecord<T>>, iou_threshold: T) -> Vec<DetectionRecord<T>> {
    let mut groups: BTreeMap<(String, String), Vec<DetectionRecord<T>>> = BTreeMap::new();
    for p in preds {
        groups
            .entry((p.image_id.clone(), p.category.clone()))
            .or_default()
            .push(p);
    }
    groups
        .into_values()
        .flat_map(|group| {
            let dets: Vec<_> = group.iter().map(|d| (d.quad, d.score)).collect();
            let keep = quad_nms(&dets, iou_threshold);
            keep.into_iter().map(|i| group[i].clone()).collect::<Vec<_>>()
        })
        .collect()
}
