use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::records::{DetectionRecord, GroundTruthObject};
use crate::geometry::quad_iou;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchOutcome {
    /// Matched the ground truth at this index.
    TruePositive(usize),
    FalsePositive,
    /// Best match was a difficult object; left out of the ranking.
    Ignored,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    /// Prediction indices by descending score (ties keep input order).
    pub order: Vec<usize>,
    /// Outcome per prediction, indexed like the input.
    pub outcomes: Vec<MatchOutcome>,
    /// Non-difficult ground truths left unmatched.
    pub unmatched_gt: usize,
}

impl MatchResult {
    pub fn tp(&self) -> usize {
        self.count(|o| matches!(o, MatchOutcome::TruePositive(_)))
    }

    pub fn fp(&self) -> usize {
        self.count(|o| *o == MatchOutcome::FalsePositive)
    }

    /// TP/FP flags in ranked order, ignored predictions dropped.
    pub fn ranked_flags(&self) -> Vec<bool> {
        self.order
            .iter()
            .filter_map(|&i| match self.outcomes[i] {
                MatchOutcome::TruePositive(_) => Some(true),
                MatchOutcome::FalsePositive => Some(false),
                MatchOutcome::Ignored => None,
            })
            .collect()
    }

    fn count(&self, f: impl Fn(&MatchOutcome) -> bool) -> usize {
        self.outcomes.iter().filter(|o| f(o)).count()
    }
}

pub(crate) fn score_order<T: Scalar>(scores: impl Iterator<Item = T>) -> Vec<usize> {
    let scores: Vec<T> = scores.collect();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    order
}

/// Greedy matching of one image's predictions of one class.
///
/// In descending score order each prediction takes the unmatched ground
/// truth with the highest IoU at or above `iou_threshold`. Difficult ground
/// truths are never consumed and a prediction landing on one is ignored.
pub fn match_detections<T: Scalar>(
    preds: &[DetectionRecord<T>],
    gts: &[GroundTruthObject<T>],
    iou_threshold: T,
) -> MatchResult {
    let ious: Vec<Vec<T>> = preds
        .iter()
        .map(|p| gts.iter().map(|g| quad_iou(&p.quad, &g.quad)).collect())
        .collect();
    let difficult: Vec<bool> = gts.iter().map(|g| g.difficult).collect();
    let order = score_order(preds.iter().map(|p| p.score));
    match_with_ious(order, &ious, &difficult, iou_threshold)
}

/// Matching on a precomputed `pred x gt` IoU matrix.
pub(crate) fn match_with_ious<T: Scalar>(
    order: Vec<usize>,
    ious: &[Vec<T>],
    difficult: &[bool],
    iou_threshold: T,
) -> MatchResult {
    let mut taken = vec![false; difficult.len()];
    let mut outcomes = vec![MatchOutcome::FalsePositive; ious.len()];
    for &p in &order {
        let mut best: Option<(usize, T)> = None;
        for (g, &iou) in ious[p].iter().enumerate() {
            if taken[g] || iou < iou_threshold {
                continue;
            }
            if best.is_none_or(|(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }
        outcomes[p] = match best {
            Some((g, _)) if difficult[g] => MatchOutcome::Ignored,
            Some((g, _)) => {
                taken[g] = true;
                MatchOutcome::TruePositive(g)
            }
            None => MatchOutcome::FalsePositive,
        };
    }
    let unmatched_gt = taken.iter().zip(difficult).filter(|(&t, &d)| !t && !d).count();
    MatchResult {
        order,
        outcomes,
        unmatched_gt,
    }
}
