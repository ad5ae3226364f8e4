use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ap::{average_precision, ApMethod};
use super::matching::{match_with_ious, score_order, MatchOutcome};
use super::records::{DetectionRecord, GroundTruthSet};
use crate::geometry::quad_iou;
use crate::{Error, Result, Scalar};

/// IoU thresholds 0.50, 0.55, ..., 0.95.
pub fn coco_iou_grid<T: Scalar>() -> Vec<T> {
    (0..10).map(|k| T::lit(0.5 + 0.05 * k as f64)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig<T> {
    pub iou_thresholds: Vec<T>,
    #[serde(default)]
    pub ap_method: ApMethod,
    /// Threshold at which TP/FP/FN counts are reported.
    pub reference_iou: T,
}

impl<T: Scalar> Default for EvalConfig<T> {
    fn default() -> Self {
        EvalConfig {
            iou_thresholds: coco_iou_grid(),
            ap_method: ApMethod::AllPoint,
            reference_iou: T::lit(0.5),
        }
    }
}

impl<T: Scalar> EvalConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.iou_thresholds.is_empty() {
            return Err(Error::EmptyInput("IoU thresholds"));
        }
        let in_range = |t: &T| *t > T::zero() && *t < T::one();
        if !self.iou_thresholds.iter().all(in_range) || !in_range(&self.reference_iou) {
            return Err(Error::invalid("IoU thresholds must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn precision(&self) -> Option<f64> {
        let n = self.tp + self.fp;
        (n > 0).then(|| self.tp as f64 / n as f64)
    }

    pub fn recall(&self) -> Option<f64> {
        let n = self.tp + self.fn_;
        (n > 0).then(|| self.tp as f64 / n as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport<T> {
    /// AP per threshold, aligned with [`EvalReport::iou_thresholds`];
    /// `None` when the class has no non-difficult ground truth.
    pub ap: Vec<Option<T>>,
    pub mean_ap: Option<T>,
    pub ar: Option<T>,
    pub n_gt: usize,
    pub n_pred: usize,
    pub counts: Counts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<T> {
    pub iou_thresholds: Vec<T>,
    pub per_class: BTreeMap<String, ClassReport<T>>,
    pub map: T,
    pub ar: T,
    pub reference_iou: T,
    pub counts: Counts,
}

/// Pooled evaluation over all images.
///
/// Per class and threshold, predictions from every image are ranked
/// together by score (ties by image id, then input order). Classes without
/// non-difficult ground truth are left out of `map` and `ar`; with no such
/// class at all both are 0.
pub fn evaluate<T: Scalar>(
    preds: &[DetectionRecord<T>],
    gts: &GroundTruthSet<T>,
    cfg: &EvalConfig<T>,
) -> Result<EvalReport<T>> {
    cfg.validate()?;
    let unknown: BTreeSet<&str> = preds
        .iter()
        .filter(|p| !gts.contains_key(&p.image_id))
        .map(|p| p.image_id.as_str())
        .collect();
    if !unknown.is_empty() {
        return Err(Error::UnknownImages(unknown.into_iter().map(String::from).collect()));
    }

    let mut classes: BTreeSet<&str> = preds.iter().map(|p| p.category.as_str()).collect();
    classes.extend(gts.values().flatten().map(|g| g.category.as_str()));
    let classes: Vec<&str> = classes.into_iter().collect();

    let per_class: BTreeMap<String, ClassReport<T>> = classes
        .par_iter()
        .map(|&c| (c.to_string(), evaluate_class(preds, gts, c, cfg)))
        .collect();

    let mean = |vals: Vec<T>| {
        if vals.is_empty() {
            T::zero()
        } else {
            let n = T::from_len(vals.len());
            vals.into_iter().sum::<T>() / n
        }
    };
    let map = mean(per_class.values().filter_map(|c| c.mean_ap).collect());
    let ar = mean(per_class.values().filter_map(|c| c.ar).collect());
    let counts = per_class.values().fold(Counts::default(), |acc, c| Counts {
        tp: acc.tp + c.counts.tp,
        fp: acc.fp + c.counts.fp,
        fn_: acc.fn_ + c.counts.fn_,
    });
    Ok(EvalReport {
        iou_thresholds: cfg.iou_thresholds.clone(),
        per_class,
        map,
        ar,
        reference_iou: cfg.reference_iou,
        counts,
    })
}

struct ImageSlice<'a, T> {
    image_id: &'a str,
    preds: Vec<usize>,
    ious: Vec<Vec<T>>,
    difficult: Vec<bool>,
}

fn evaluate_class<T: Scalar>(
    preds: &[DetectionRecord<T>],
    gts: &GroundTruthSet<T>,
    class: &str,
    cfg: &EvalConfig<T>,
) -> ClassReport<T> {
    let mut by_image: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, p) in preds.iter().enumerate() {
        if p.category == class {
            by_image.entry(p.image_id.as_str()).or_default().push(i);
        }
    }
    let n_pred = by_image.values().map(Vec::len).sum();
    let mut n_gt = 0;
    let mut slices = Vec::new();
    for (image_id, objects) in gts {
        let objects: Vec<_> = objects.iter().filter(|g| g.category == class).collect();
        n_gt += objects.iter().filter(|g| !g.difficult).count();
        let idx = by_image.remove(image_id.as_str()).unwrap_or_default();
        if idx.is_empty() && objects.is_empty() {
            continue;
        }
        let ious = idx
            .iter()
            .map(|&i| objects.iter().map(|g| quad_iou(&preds[i].quad, &g.quad)).collect())
            .collect();
        slices.push(ImageSlice {
            image_id,
            preds: idx,
            ious,
            difficult: objects.iter().map(|g| g.difficult).collect(),
        });
    }

    let run = |thr: T| {
        // (score, image id, input index, is tp)
        let mut ranked: Vec<(T, &str, usize, bool)> = Vec::with_capacity(n_pred);
        let mut counts = Counts::default();
        for s in &slices {
            let order = score_order(s.preds.iter().map(|&i| preds[i].score));
            let m = match_with_ious(order, &s.ious, &s.difficult, thr);
            counts.tp += m.tp();
            counts.fp += m.fp();
            counts.fn_ += m.unmatched_gt;
            for (k, outcome) in m.outcomes.iter().enumerate() {
                let i = s.preds[k];
                match outcome {
                    MatchOutcome::Ignored => {}
                    o => ranked.push((
                        preds[i].score,
                        s.image_id,
                        i,
                        matches!(o, MatchOutcome::TruePositive(_)),
                    )),
                }
            }
        }
        ranked.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.1.cmp(b.1))
                .then_with(|| a.2.cmp(&b.2))
        });
        let flags: Vec<bool> = ranked.iter().map(|r| r.3).collect();
        (average_precision::<T>(&flags, n_gt, cfg.ap_method), counts)
    };

    let mut ap = Vec::with_capacity(cfg.iou_thresholds.len());
    let mut recalls = Vec::with_capacity(cfg.iou_thresholds.len());
    for &thr in &cfg.iou_thresholds {
        let (a, c) = run(thr);
        ap.push(a);
        if n_gt > 0 {
            recalls.push(T::from_len(c.tp) / T::from_len(n_gt));
        }
    }
    let counts = run(cfg.reference_iou).1;
    let k = T::from_len(cfg.iou_thresholds.len());
    let mean_ap = (n_gt > 0).then(|| ap.iter().map(|a| a.unwrap_or_else(T::zero)).sum::<T>() / k);
    let ar = (n_gt > 0).then(|| recalls.iter().copied().sum::<T>() / k);
    ClassReport {
        ap,
        mean_ap,
        ar,
        n_gt,
        n_pred,
        counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::GroundTruthObject;
    use crate::geometry::Quad;
    use proptest::prelude::*;

    fn rect(x: f64, y: f64, w: f64, h: f64) -> Quad<f64> {
        Quad::from_flat([x, y, x + w, y, x + w, y + h, x, y + h]).unwrap()
    }

    fn gt_set(items: &[(&str, Quad<f64>, &str)]) -> GroundTruthSet<f64> {
        let mut set = GroundTruthSet::new();
        for &(img, q, c) in items {
            set.entry(img.to_string())
                .or_insert_with(Vec::new)
                .push(GroundTruthObject::new(q, c, false));
        }
        set
    }

    #[test]
    fn perfect_predictions() {
        let gts = gt_set(&[
            ("a", rect(0.0, 0.0, 10.0, 4.0), "ship"),
            ("a", rect(20.0, 0.0, 10.0, 4.0), "plane"),
            ("b", rect(5.0, 5.0, 7.0, 7.0), "ship"),
        ]);
        let preds: Vec<_> = gts
            .iter()
            .flat_map(|(id, objs)| {
                objs.iter()
                    .map(move |o| DetectionRecord::new(id.clone(), o.quad, o.category.clone(), 1.0).unwrap())
            })
            .collect();
        let r = evaluate(&preds, &gts, &EvalConfig::default()).unwrap();
        assert_eq!(r.map, 1.0);
        assert_eq!(r.ar, 1.0);
        assert_eq!(r.counts, Counts { tp: 3, fp: 0, fn_: 0 });
    }

    #[test]
    fn iou_exactly_point_six() {
        // overlap 6 of a union of 10
        let gts = gt_set(&[("a", rect(0.0, 0.0, 8.0, 1.0), "ship")]);
        let preds = vec![DetectionRecord::new("a", rect(2.0, 0.0, 8.0, 1.0), "ship", 0.7).unwrap()];
        let r = evaluate(&preds, &gts, &EvalConfig::default()).unwrap();
        let ap = &r.per_class["ship"].ap;
        assert_eq!(ap[..3], [Some(1.0); 3]);
        assert!(ap[3..].iter().all(|a| *a == Some(0.0)));
        assert!((r.map - 0.3).abs() < 1e-12);
        assert!((r.ar - 0.3).abs() < 1e-12);
    }

    #[test]
    fn empty_predictions() {
        let gts = gt_set(&[("a", rect(0.0, 0.0, 8.0, 1.0), "ship")]);
        let r = evaluate(&[], &gts, &EvalConfig::default()).unwrap();
        assert_eq!((r.map, r.ar), (0.0, 0.0));
        assert_eq!(r.counts.fn_, 1);
    }

    #[test]
    fn unknown_image_lists_offenders() {
        let gts = gt_set(&[("a", rect(0.0, 0.0, 8.0, 1.0), "ship")]);
        let preds = vec![
            DetectionRecord::new("zz", rect(0.0, 0.0, 1.0, 1.0), "ship", 0.5).unwrap(),
            DetectionRecord::new("b", rect(0.0, 0.0, 1.0, 1.0), "ship", 0.5).unwrap(),
            DetectionRecord::new("b", rect(0.0, 0.0, 1.0, 1.0), "ship", 0.4).unwrap(),
        ];
        match evaluate(&preds, &gts, &EvalConfig::default()) {
            Err(Error::UnknownImages(ids)) => assert_eq!(ids, vec!["b", "zz"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn class_only_in_predictions_is_excluded() {
        let gts = gt_set(&[("a", rect(0.0, 0.0, 8.0, 1.0), "ship")]);
        let preds = vec![
            DetectionRecord::new("a", rect(0.0, 0.0, 8.0, 1.0), "ship", 0.9).unwrap(),
            DetectionRecord::new("a", rect(0.0, 0.0, 8.0, 1.0), "plane", 0.9).unwrap(),
        ];
        let r = evaluate(&preds, &gts, &EvalConfig::default()).unwrap();
        assert_eq!(r.map, 1.0);
        assert_eq!(r.per_class["plane"].mean_ap, None);
        assert_eq!(r.counts.fp, 1);
    }

    #[test]
    fn pooled_ranking_across_images() {
        // image a: TP at 0.9, image b: FP at 0.8, image b: TP at 0.7
        let gts = gt_set(&[
            ("a", rect(0.0, 0.0, 4.0, 4.0), "ship"),
            ("b", rect(0.0, 0.0, 4.0, 4.0), "ship"),
        ]);
        let preds = vec![
            DetectionRecord::new("b", rect(0.0, 0.0, 4.0, 4.0), "ship", 0.7).unwrap(),
            DetectionRecord::new("a", rect(0.0, 0.0, 4.0, 4.0), "ship", 0.9).unwrap(),
            DetectionRecord::new("b", rect(50.0, 0.0, 4.0, 4.0), "ship", 0.8).unwrap(),
        ];
        let cfg = EvalConfig {
            iou_thresholds: vec![0.5],
            ..Default::default()
        };
        let r = evaluate(&preds, &gts, &cfg).unwrap();
        assert!((r.map - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn f32_evaluation() {
        let q = Quad::<f32>::from_flat([0.0, 0.0, 4.0, 0.0, 4.0, 4.0, 0.0, 4.0]).unwrap();
        let mut gts = GroundTruthSet::new();
        gts.insert("a".to_string(), vec![GroundTruthObject::new(q, "ship", false)]);
        let preds = vec![DetectionRecord::new("a", q, "ship", 0.5f32).unwrap()];
        let r = evaluate(&preds, &gts, &EvalConfig::default()).unwrap();
        assert_eq!(r.map, 1.0f32);
    }

    fn scene() -> impl Strategy<Value = (GroundTruthSet<f64>, Vec<DetectionRecord<f64>>)> {
        let gt = prop::collection::vec(
            (
                0usize..3,
                0usize..2,
                0.0f64..60.0,
                0.0f64..60.0,
                4.0f64..20.0,
                4.0f64..20.0,
            ),
            1..12,
        );
        let pred = prop::collection::vec(
            (
                0usize..3,
                0usize..2,
                0.0f64..60.0,
                0.0f64..60.0,
                4.0f64..20.0,
                4.0f64..20.0,
                0.0f64..1.0,
            ),
            0..20,
        );
        (gt, pred).prop_map(|(g, p)| {
            let cls = ["ship", "plane"];
            let mut gts = GroundTruthSet::new();
            for img in 0..3 {
                gts.insert(format!("img{img}"), Vec::new());
            }
            for (img, c, x, y, w, h) in g {
                gts.get_mut(&format!("img{img}")).unwrap().push(GroundTruthObject::new(
                    rect(x, y, w, h),
                    cls[c],
                    false,
                ));
            }
            // half the predictions copy a jittered ground truth so there are hits
            let all: Vec<_> = gts
                .iter()
                .flat_map(|(id, v)| v.iter().map(move |o| (id.clone(), o.clone())))
                .collect();
            let preds = p
                .into_iter()
                .enumerate()
                .map(|(k, (img, c, x, y, w, h, s))| {
                    if k % 2 == 0 {
                        let (id, o) = &all[k % all.len()];
                        let q = o
                            .quad
                            .map(|v| crate::geometry::Point::new(v.x + x / 30.0, v.y + y / 30.0))
                            .unwrap();
                        DetectionRecord::new(id.clone(), q, o.category.clone(), s).unwrap()
                    } else {
                        DetectionRecord::new(format!("img{img}"), rect(x, y, w, h), cls[c], s).unwrap()
                    }
                })
                .collect();
            (gts, preds)
        })
    }

    proptest! {
        #[test]
        fn ranking_only_and_order_free((gts, preds) in scene(), seed in any::<u64>()) {
            let cfg = EvalConfig::default();
            let base = evaluate(&preds, &gts, &cfg).unwrap();
            prop_assert!(base.map >= 0.0 && base.map <= 1.0);
            prop_assert!(base.ar >= 0.0 && base.ar <= 1.0);

            // strictly increasing transform of the scores (exact in floating point)
            let squashed: Vec<_> = preds.iter().map(|p| DetectionRecord { score: p.score * 0.5, ..p.clone() }).collect();
            let r = evaluate(&squashed, &gts, &cfg).unwrap();
            prop_assert_eq!(&r.per_class, &base.per_class);

            // shuffle images: rename ids with an order-reversing map, permute records
            let rename = |id: &str| format!("{}{}", 9 - id.as_bytes()[3] as usize % 10, id);
            let gts2: GroundTruthSet<f64> = gts.iter().map(|(k, v)| (rename(k), v.clone())).collect();
            let mut preds2: Vec<_> = preds.iter().map(|p| DetectionRecord { image_id: rename(&p.image_id), ..p.clone() }).collect();
            let n = preds2.len();
            if n > 1 {
                preds2.rotate_left((seed % n as u64) as usize);
            }
            let r2 = evaluate(&preds2, &gts2, &cfg).unwrap();
            prop_assert!((r2.map - base.map).abs() < 1e-12);
            prop_assert!((r2.ar - base.ar).abs() < 1e-12);
        }
    }
}
