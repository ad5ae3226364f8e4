use super::{iou, obb::OrientedBox, obb::Quad};
use crate::Scalar;

/// Greedy suppression over `scores` (higher first, ties in input order).
/// A candidate is dropped when `overlap(kept, candidate) >= threshold`.
pub fn greedy_nms<T: Scalar>(scores: &[T], threshold: T, overlap: impl Fn(usize, usize) -> T) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // stable: equal scores keep input order; NaN sorts last
    order.sort_by(|&i, &j| {
        scores[j]
            .partial_cmp(&scores[i])
            .unwrap_or_else(|| scores[i].is_nan().cmp(&scores[j].is_nan()))
    });
    let mut suppressed = vec![false; scores.len()];
    let mut keep = Vec::new();
    for (rank, &i) in order.iter().enumerate() {
        if suppressed[i] {
            continue;
        }
        keep.push(i);
        for &j in &order[rank + 1..] {
            if !suppressed[j] && overlap(i, j) >= threshold {
                suppressed[j] = true;
            }
        }
    }
    keep
}

/// Rotated NMS over `(box, score)` pairs; returns kept indices in score order.
pub fn rotated_nms<T: Scalar>(dets: &[(OrientedBox<T>, T)], iou_threshold: T) -> Vec<usize> {
    let quads: Vec<Quad<T>> = dets.iter().map(|(b, _)| b.to_corners()).collect();
    let scores: Vec<T> = dets.iter().map(|(_, s)| *s).collect();
    greedy_nms(&scores, iou_threshold, |i, j| {
        let (a, b) = (&dets[i].0, &dets[j].0);
        if a.is_axis_aligned() && b.is_axis_aligned() {
            iou::aabb_iou(a, b)
        } else {
            iou::quad_iou(&quads[i], &quads[j])
        }
    })
}

/// NMS over free quads, as read from prediction files.
pub fn quad_nms<T: Scalar>(dets: &[(Quad<T>, T)], iou_threshold: T) -> Vec<usize> {
    let scores: Vec<T> = dets.iter().map(|(_, s)| *s).collect();
    greedy_nms(&scores, iou_threshold, |i, j| iou::quad_iou(&dets[i].0, &dets[j].0))
}
