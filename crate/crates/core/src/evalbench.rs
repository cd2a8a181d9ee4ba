//! Error statistics, dataset statistics and detection metrics.
//!
//! Conventions: percentiles interpolate linearly at rank `p/100·(n−1)`;
//! standard deviations are population (divide by `N`).

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::foreground::{BoundingBox, MotionLabel};
use crate::math;

#[derive(Clone, Debug, PartialEq)]
pub enum EvalError {
    EmptyList,
    EmptySeries,
    FrameMismatch { estimate: u64, truth: u64 },
    InvalidPercentile,
    InvalidThreshold,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::EmptyList => f.write_str("percentile of an empty list"),
            EvalError::EmptySeries => f.write_str("statistics of an empty series"),
            EvalError::FrameMismatch { estimate, truth } => {
                write!(f, "estimate for frame {estimate} compared with ground truth for frame {truth}")
            }
            EvalError::InvalidPercentile => f.write_str("percentile must be in [0, 100]"),
            EvalError::InvalidThreshold => f.write_str("IoU threshold must be in (0, 1)"),
        }
    }
}

impl core::error::Error for EvalError {}

/// One horizon per frame; used for both ground truth and estimates.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HorizonRecord {
    pub frame_index: u64,
    pub y: f64,
    pub alpha: f64,
}

/// `(|ΔY|, |Δα|)` between an estimate and the ground truth of the same frame.
pub fn horizon_error(estimate: &HorizonRecord, truth: &HorizonRecord) -> Result<(f64, f64), EvalError> {
    if estimate.frame_index != truth.frame_index {
        return Err(EvalError::FrameMismatch { estimate: estimate.frame_index, truth: truth.frame_index });
    }
    Ok(((estimate.y - truth.y).abs(), (estimate.alpha - truth.alpha).abs()))
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    v
}

fn percentile_sorted(v: &[f64], p: f64) -> f64 {
    let r = p / 100.0 * (v.len() - 1) as f64;
    let lo = math::floor(r) as usize;
    let hi = math::ceil(r) as usize;
    if lo == hi {
        v[lo]
    } else {
        v[lo] + (r - lo as f64) * (v[hi] - v[lo])
    }
}

pub fn percentile(values: &[f64], p: f64) -> Result<f64, EvalError> {
    if values.is_empty() {
        return Err(EvalError::EmptyList);
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(EvalError::InvalidPercentile);
    }
    Ok(percentile_sorted(&sorted(values), p))
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErrorStats {
    /// Frames with both an estimate and ground truth.
    pub frames: usize,
    /// Ground-truth frames without an estimate (detection failures).
    pub failures: usize,
    pub y_p25: f64,
    pub y_p50: f64,
    pub alpha_p25: f64,
    pub alpha_p50: f64,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub dy: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub dalpha: Vec<f64>,
}

/// Pairs estimates with ground truth by frame index. Ground-truth frames
/// with no estimate count as failures; estimates without ground truth are
/// ignored.
pub fn error_stats(estimates: &[HorizonRecord], truth: &[HorizonRecord]) -> Result<ErrorStats, EvalError> {
    let mut by_frame: Vec<&HorizonRecord> = estimates.iter().collect();
    by_frame.sort_by_key(|r| r.frame_index);
    let (mut dy, mut dalpha) = (Vec::new(), Vec::new());
    let mut failures = 0;
    for gt in truth {
        match by_frame.binary_search_by_key(&gt.frame_index, |r| r.frame_index) {
            Ok(i) => {
                let (a, b) = horizon_error(by_frame[i], gt)?;
                dy.push(a);
                dalpha.push(b);
            }
            Err(_) => failures += 1,
        }
    }
    if dy.is_empty() {
        return Err(EvalError::EmptySeries);
    }
    let (sy, sa) = (sorted(&dy), sorted(&dalpha));
    Ok(ErrorStats {
        frames: dy.len(),
        failures,
        y_p25: percentile_sorted(&sy, 25.0),
        y_p50: percentile_sorted(&sy, 50.0),
        alpha_p25: percentile_sorted(&sa, 25.0),
        alpha_p50: percentile_sorted(&sa, 50.0),
        dy,
        dalpha,
    })
}

/// Deviation extrema and population standard deviation of a series.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeriesStats {
    pub mean: f64,
    pub min_dev: f64,
    pub max_dev: f64,
    pub std: f64,
}

pub fn series_stats(values: &[f64]) -> Result<SeriesStats, EvalError> {
    if values.is_empty() {
        return Err(EvalError::EmptySeries);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut min_dev, mut max_dev, mut ss) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &v in values {
        let d = v - mean;
        min_dev = min_dev.min(d);
        max_dev = max_dev.max(d);
        ss += d * d;
    }
    Ok(SeriesStats { mean, min_dev, max_dev, std: math::sqrt(ss / n) })
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DatasetStats {
    pub frames: usize,
    pub y: SeriesStats,
    pub alpha: SeriesStats,
    pub min_objects: usize,
    pub max_objects: usize,
}

/// `object_counts` may be empty (no object ground truth), giving 0/0.
pub fn dataset_stats(truth: &[HorizonRecord], object_counts: &[usize]) -> Result<DatasetStats, EvalError> {
    let ys: Vec<f64> = truth.iter().map(|r| r.y).collect();
    let alphas: Vec<f64> = truth.iter().map(|r| r.alpha).collect();
    Ok(DatasetStats {
        frames: truth.len(),
        y: series_stats(&ys)?,
        alpha: series_stats(&alphas)?,
        min_objects: object_counts.iter().copied().min().unwrap_or(0),
        max_objects: object_counts.iter().copied().max().unwrap_or(0),
    })
}

/// One object box in one frame: a ground-truth annotation or a detection.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObjectRecord {
    pub frame_index: u64,
    pub object_id: u64,
    pub bbox: BoundingBox,
    pub motion: MotionLabel,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrecisionRecall {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when precision or recall had a zero denominator and is reported as 0.
    pub degenerate: bool,
}

impl PrecisionRecall {
    /// `tp_pred` counts matched predictions, `tp_truth` matched ground truth
    /// (they differ only in per-label breakdowns).
    fn from_counts(tp_pred: usize, n_pred: usize, tp_truth: usize, n_truth: usize) -> Self {
        let degenerate = n_pred == 0 || n_truth == 0;
        let precision = if n_pred == 0 { 0.0 } else { tp_pred as f64 / n_pred as f64 };
        let recall = if n_truth == 0 { 0.0 } else { tp_truth as f64 / n_truth as f64 };
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        PrecisionRecall {
            true_positives: tp_truth,
            false_positives: n_pred - tp_pred,
            false_negatives: n_truth - tp_truth,
            precision,
            recall,
            f1,
            degenerate,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectionMetrics {
    pub overall: PrecisionRecall,
    /// Recall over static ground truth; precision over predictions labeled static.
    pub static_objects: PrecisionRecall,
    pub dynamic_objects: PrecisionRecall,
}

/// Greedy one-to-one IoU matching per frame, highest IoU first; a pair
/// matches when `IoU ≥ iou_thresh`. Returns the matched `(prediction,
/// truth)` index pairs alongside the metrics.
pub fn match_detections(predictions: &[ObjectRecord], truth: &[ObjectRecord], iou_thresh: f64) -> Result<Vec<(usize, usize)>, EvalError> {
    if !(iou_thresh > 0.0 && iou_thresh < 1.0) {
        return Err(EvalError::InvalidThreshold);
    }
    let mut pred_idx: Vec<usize> = (0..predictions.len()).collect();
    pred_idx.sort_by_key(|&i| predictions[i].frame_index);
    let mut truth_idx: Vec<usize> = (0..truth.len()).collect();
    truth_idx.sort_by_key(|&i| truth[i].frame_index);

    let mut matches = Vec::new();
    let (mut pi, mut ti) = (0, 0);
    while pi < pred_idx.len() && ti < truth_idx.len() {
        let fp = predictions[pred_idx[pi]].frame_index;
        let ft = truth[truth_idx[ti]].frame_index;
        if fp < ft {
            pi += 1;
            continue;
        }
        if ft < fp {
            ti += 1;
            continue;
        }
        let pe = pi + pred_idx[pi..].iter().take_while(|&&i| predictions[i].frame_index == fp).count();
        let te = ti + truth_idx[ti..].iter().take_while(|&&i| truth[i].frame_index == ft).count();
        let mut pairs = Vec::new();
        for &p in &pred_idx[pi..pe] {
            for &t in &truth_idx[ti..te] {
                let iou = predictions[p].bbox.iou(&truth[t].bbox);
                if iou >= iou_thresh {
                    pairs.push((iou, p, t));
                }
            }
        }
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut used_p = vec![false; predictions.len()];
        let mut used_t = vec![false; truth.len()];
        for (_, p, t) in pairs {
            if !used_p[p] && !used_t[t] {
                used_p[p] = true;
                used_t[t] = true;
                matches.push((p, t));
            }
        }
        pi = pe;
        ti = te;
    }
    matches.sort_unstable();
    Ok(matches)
}

pub fn detection_metrics(predictions: &[ObjectRecord], truth: &[ObjectRecord], iou_thresh: f64) -> Result<DetectionMetrics, EvalError> {
    let matches = match_detections(predictions, truth, iou_thresh)?;
    let overall = PrecisionRecall::from_counts(matches.len(), predictions.len(), matches.len(), truth.len());
    let per_label = |label: MotionLabel| {
        let n_pred = predictions.iter().filter(|p| p.motion == label).count();
        let n_truth = truth.iter().filter(|t| t.motion == label).count();
        let tp_pred = matches.iter().filter(|&&(p, _)| predictions[p].motion == label).count();
        let tp_truth = matches.iter().filter(|&&(_, t)| truth[t].motion == label).count();
        PrecisionRecall::from_counts(tp_pred, n_pred, tp_truth, n_truth)
    };
    Ok(DetectionMetrics { overall, static_objects: per_label(MotionLabel::Static), dynamic_objects: per_label(MotionLabel::Dynamic) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(f: u64, y: f64, a: f64) -> HorizonRecord {
        HorizonRecord { frame_index: f, y, alpha: a }
    }

    fn obj(f: u64, id: u64, x: i64, y: i64, w: u32, h: u32, m: MotionLabel) -> ObjectRecord {
        ObjectRecord { frame_index: f, object_id: id, bbox: BoundingBox::new(x, y, w, h), motion: m }
    }

    #[test]
    fn horizon_error_examples() {
        assert_eq!(horizon_error(&rec(0, 5.0, 1.0), &rec(0, 5.0, 1.0)), Ok((0.0, 0.0)));
        assert_eq!(horizon_error(&rec(0, 110.0, 1.0), &rec(0, 100.0, -1.0)), Ok((10.0, 2.0)));
        assert!(matches!(horizon_error(&rec(1, 0.0, 0.0), &rec(2, 0.0, 0.0)), Err(EvalError::FrameMismatch { .. })));
    }

    #[test]
    fn percentile_examples() {
        assert_eq!(percentile(&[5.0], 37.0), Ok(5.0));
        assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0], 50.0), Ok(2.5));
        assert_eq!(percentile(&[4.0, 3.0, 2.0, 1.0], 25.0), Ok(1.75));
        assert_eq!(percentile(&[], 50.0), Err(EvalError::EmptyList));
        assert_eq!(percentile(&[1.0], 101.0), Err(EvalError::InvalidPercentile));
    }

    #[test]
    fn dataset_stats_examples() {
        let s = dataset_stats(&[rec(0, 10.0, -1.0), rec(1, 20.0, 1.0), rec(2, 30.0, 0.0)], &[1, 3, 2]).unwrap();
        assert_eq!(s.y.mean, 20.0);
        assert_eq!((s.y.min_dev, s.y.max_dev), (-10.0, 10.0));
        assert!((s.y.std - 8.164_965_809_277_26).abs() < 1e-9);
        assert_eq!((s.min_objects, s.max_objects), (1, 3));

        let a = series_stats(&[-1.0, 1.0]).unwrap();
        assert_eq!((a.min_dev, a.max_dev, a.std), (-1.0, 1.0, 1.0));

        let c = series_stats(&[7.0; 4]).unwrap();
        assert_eq!((c.min_dev, c.max_dev, c.std), (0.0, 0.0, 0.0));
        assert_eq!(dataset_stats(&[], &[]), Err(EvalError::EmptySeries));
    }

    #[test]
    fn error_stats_counts_failures() {
        let gt = [rec(0, 10.0, 0.0), rec(1, 10.0, 0.0), rec(2, 10.0, 0.0)];
        let est = [rec(2, 13.0, 0.5), rec(0, 11.0, 0.0)];
        let s = error_stats(&est, &gt).unwrap();
        assert_eq!((s.frames, s.failures), (2, 1));
        assert_eq!(s.y_p50, 2.0);
        assert_eq!(s.alpha_p25, 0.125);
    }

    #[test]
    fn identical_predictions() {
        let gt = [obj(0, 1, 0, 0, 10, 10, MotionLabel::Static), obj(1, 1, 5, 5, 8, 8, MotionLabel::Dynamic)];
        let m = detection_metrics(&gt, &gt, 0.5).unwrap();
        assert_eq!((m.overall.precision, m.overall.recall, m.overall.f1), (1.0, 1.0, 1.0));
        assert!(!m.overall.degenerate);
    }

    #[test]
    fn no_predictions_is_degenerate() {
        let gt = [obj(0, 1, 0, 0, 10, 10, MotionLabel::Static)];
        let m = detection_metrics(&[], &gt, 0.5).unwrap();
        assert_eq!((m.overall.precision, m.overall.recall), (0.0, 0.0));
        assert!(m.overall.degenerate);
        assert_eq!(m.overall.false_negatives, 1);
    }

    #[test]
    fn iou_exactly_at_threshold_matches() {
        // 6x10 boxes offset by 2 px: intersection 40, union 80
        let gt = [obj(0, 1, 0, 0, 6, 10, MotionLabel::Dynamic)];
        let pred = [obj(0, 9, 2, 0, 6, 10, MotionLabel::Dynamic)];
        assert_eq!(pred[0].bbox.iou(&gt[0].bbox), 0.5);
        let m = detection_metrics(&pred, &gt, 0.5).unwrap();
        assert_eq!(m.overall.true_positives, 1);
    }

    #[test]
    fn matching_is_one_to_one_and_per_frame() {
        let gt = [obj(0, 1, 0, 0, 10, 10, MotionLabel::Static), obj(1, 1, 0, 0, 10, 10, MotionLabel::Static)];
        let pred = [obj(0, 1, 0, 0, 10, 10, MotionLabel::Static), obj(0, 2, 1, 0, 10, 10, MotionLabel::Static), obj(2, 3, 0, 0, 10, 10, MotionLabel::Dynamic)];
        let matches = match_detections(&pred, &gt, 0.5).unwrap();
        assert_eq!(matches, vec![(0, 0)]);
        let m = detection_metrics(&pred, &gt, 0.5).unwrap();
        assert_eq!((m.overall.true_positives, m.overall.false_positives, m.overall.false_negatives), (1, 2, 1));
        assert_eq!(m.dynamic_objects.precision, 0.0);
        assert_eq!(m.static_objects.precision, 0.5);
        assert!(detection_metrics(&pred, &gt, 1.0).is_err());
    }
}
