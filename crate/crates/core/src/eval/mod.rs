//! Detection evaluation: matching, AP/AR per class and IoU threshold, mAP.

mod ap;
mod evaluate;
mod io;
mod matching;
mod records;

pub use ap::{average_precision, precision_recall, ApMethod};
pub use evaluate::{coco_iou_grid, evaluate, ClassReport, Counts, EvalConfig, EvalReport};
pub use io::{load_detections, parse_detections, serialize_detections};
pub use matching::{match_detections, MatchOutcome, MatchResult};
pub use records::{ground_truth_from_entries, nms_per_image_class, DetectionRecord, GroundTruthObject, GroundTruthSet};
