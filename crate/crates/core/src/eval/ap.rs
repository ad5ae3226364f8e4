use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Interpolation used for the area under the precision-recall curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApMethod {
    /// Exact area under the monotone precision envelope.
    #[default]
    AllPoint,
    /// Envelope sampled at recall 0, 0.1, ..., 1.
    Voc11,
    /// Envelope sampled at recall 0, 0.01, ..., 1.
    Coco101,
}

impl std::str::FromStr for ApMethod {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "all_point" | "all-point" | "allpoint" => Ok(ApMethod::AllPoint),
            "voc11" | "11point" => Ok(ApMethod::Voc11),
            "coco101" | "101point" => Ok(ApMethod::Coco101),
            _ => Err(crate::Error::invalid(format!("unknown AP method {s:?}"))),
        }
    }
}

/// Cumulative (precision, recall) after each ranked detection.
pub fn precision_recall<T: Scalar>(flags: &[bool], n_gt: usize) -> Vec<(T, T)> {
    let mut tp = 0usize;
    flags
        .iter()
        .enumerate()
        .map(|(i, &hit)| {
            tp += hit as usize;
            let precision = T::from_len(tp) / T::from_len(i + 1);
            let recall = if n_gt == 0 {
                T::zero()
            } else {
                T::from_len(tp) / T::from_len(n_gt)
            };
            (precision, recall)
        })
        .collect()
}

/// AP of ranked TP/FP flags against `n_gt` ground truths; `None` when there
/// is no ground truth.
pub fn average_precision<T: Scalar>(flags: &[bool], n_gt: usize, method: ApMethod) -> Option<T> {
    if n_gt == 0 {
        return None;
    }
    let pr = precision_recall::<T>(flags, n_gt);
    // envelope: max precision at any recall >= this one
    let mut envelope: Vec<T> = pr.iter().map(|p| p.0).collect();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let ap = match method {
        ApMethod::AllPoint => {
            let mut ap = T::zero();
            let mut prev_recall = T::zero();
            for (i, &(_, recall)) in pr.iter().enumerate() {
                if recall > prev_recall {
                    ap = ap + (recall - prev_recall) * envelope[i];
                    prev_recall = recall;
                }
            }
            ap
        }
        ApMethod::Voc11 => sampled(&pr, &envelope, 11),
        ApMethod::Coco101 => sampled(&pr, &envelope, 101),
    };
    Some(ap.min(T::one()))
}

fn sampled<T: Scalar>(pr: &[(T, T)], envelope: &[T], points: usize) -> T {
    let mut total = T::zero();
    let mut i = 0;
    for k in 0..points {
        let r = T::from_len(k) / T::from_len(points - 1);
        while i < pr.len() && pr[i].1 < r {
            i += 1;
        }
        if i < pr.len() {
            total = total + envelope[i];
        }
    }
    total / T::from_len(points)
}
