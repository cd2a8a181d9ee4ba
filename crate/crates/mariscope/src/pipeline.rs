//! Stage implementations shared by the standalone subcommands and the
//! chained `pipeline` run, so both produce identical artifacts.
//!
//! Per-frame work (reading, horizon detection, registration, warping,
//! connected components, writing) runs on the caller's rayon pool; the
//! background model and the tracker see frames strictly in order. Results
//! never depend on the number of threads.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use mariscope_core::background::BackgroundMethod;
use mariscope_core::evalbench::{dataset_stats, detection_metrics, error_stats, DatasetStats, DetectionMetrics, EvalError, HorizonRecord, ObjectRecord};
use mariscope_core::foreground::{connected_components, Connectivity, TrackObservation, TrackerParams};
use mariscope_core::horizon::detect_horizon;
use mariscope_core::registration::{align_by_horizon, default_max_shift, default_strip_height, difference_image, landmark_transform, strip_cross_correlation, warp, Warped};
use mariscope_core::{BackgroundSubtractor, BoundingBox, ForegroundMask, Frame, FrameTransform, HorizonConfig, HorizonError, HorizonEstimate, HorizonLine, Tracker};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Config, ImageFormat, RegistrationConfig, RegistrationMode};
use crate::error::{Error, Result};
use crate::formats::{self, CsvSink, Landmarks};
use crate::io;
use crate::manifest::{CameraClass, Dataset};
use crate::overlay::{emit_overlay, Overlay};

pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::InvalidInput("--threads must be at least 1".into()));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
}

/// Reads frames in parallel, tagging each with its index.
pub fn read_frames(paths: &[(u64, PathBuf)]) -> Result<Vec<Frame>> {
    paths.par_iter().map(|(i, p)| io::read_frame(p).map(|f| f.with_index(*i))).collect()
}

pub fn detect_horizons(frames: &[Frame], config: &HorizonConfig) -> Vec<Result<HorizonEstimate, HorizonError>> {
    frames.par_iter().map(|f| detect_horizon(f, config)).collect()
}

pub fn horizon_record(frame_index: u64, e: &HorizonEstimate) -> HorizonRecord {
    HorizonRecord { frame_index, y: e.y, alpha: e.alpha }
}

fn as_estimate(r: &HorizonRecord) -> HorizonEstimate {
    HorizonEstimate { y: r.y, alpha: r.alpha, score: 0.0, candidate_rank: 0 }
}

/// Maps every frame into the coordinates of a reference frame.
///
/// In the horizon modes the reference is the first frame with a horizon
/// estimate. Roll and pitch come from the horizon, and in `horizon+strip`
/// mode yaw comes from strip cross-correlation against the reference. A
/// frame without a horizon reuses the previous frame's transform, and a
/// failed or weak strip match reuses the previous horizontal shift. Frames
/// before the reference keep the identity.
///
/// In `landmarks` mode a frame with point pairs onto an earlier frame `a`
/// gets `T_a ∘ fit`; other frames reuse the previous transform.
pub struct Registrar {
    config: RegistrationConfig,
    enabled: bool,
    landmarks: Landmarks,
    /// Transforms of frames that later frames are registered onto.
    anchors: HashMap<u64, Option<FrameTransform>>,
    reference: Option<(HorizonEstimate, Frame)>,
    last: FrameTransform,
    last_dx: f64,
}

impl Registrar {
    pub fn new(config: RegistrationConfig, camera: CameraClass) -> Result<Self> {
        let enabled = config.enabled_for(camera);
        let landmarks = match (&config.landmarks, enabled && config.mode == RegistrationMode::Landmarks) {
            (Some(p), true) => formats::read_landmarks_csv(p)?,
            (None, true) => return Err(Error::InvalidInput("landmark registration needs a landmark file".into())),
            _ => Landmarks::new(),
        };
        let anchors = landmarks.values().map(|(a, _)| (*a, None)).collect();
        Ok(Registrar { config, enabled, landmarks, anchors, reference: None, last: FrameTransform::identity(), last_dx: 0.0 })
    }

    pub fn enabled(&self) -> bool {
        self.enabled
    }

    /// `horizons` is only consulted in the horizon modes.
    pub fn transforms(&mut self, frames: &[Frame], horizons: &[Option<HorizonRecord>]) -> Result<Vec<FrameTransform>> {
        if !self.enabled {
            return Ok(vec![FrameTransform::identity(); frames.len()]);
        }
        if self.config.mode == RegistrationMode::Landmarks {
            return self.landmark_transforms(frames);
        }
        if self.reference.is_none() {
            if let Some(i) = horizons.iter().position(Option::is_some) {
                self.reference = Some((as_estimate(horizons[i].as_ref().unwrap()), frames[i].clone()));
            }
        }
        let Some((ref_est, ref_frame)) = &self.reference else {
            return Ok(vec![FrameTransform::identity(); frames.len()]);
        };
        let cfg = &self.config;
        let estimates: Vec<Option<(FrameTransform, Option<f64>)>> = frames
            .par_iter()
            .zip(horizons.par_iter())
            .map(|(f, h)| {
                let h = h.as_ref()?;
                let align = align_by_horizon(ref_est, &as_estimate(h), f.width());
                if cfg.mode == RegistrationMode::Horizon {
                    return Some((align, Some(0.0)));
                }
                let aligned = warp(f, &align, cfg.interpolation).frame;
                let sh = cfg.strip_height.unwrap_or_else(|| default_strip_height(f.height()));
                let ms = cfg.max_shift.unwrap_or_else(|| default_max_shift(f.width()));
                let dx = match strip_cross_correlation(ref_frame, &aligned, ref_est, sh, ms) {
                    Ok(m) if m.peak >= cfg.min_peak => Some(-(m.shift as f64)),
                    _ => None,
                };
                Some((align, dx))
            })
            .collect();

        let mut out = Vec::with_capacity(frames.len());
        for e in estimates {
            let t = match e {
                Some((align, dx)) => {
                    let dx = dx.unwrap_or(self.last_dx);
                    self.last_dx = dx;
                    if dx == 0.0 {
                        align
                    } else {
                        FrameTransform::translation(dx, 0.0).compose(&align)
                    }
                }
                // before the reference `last` is still the identity
                None => self.last,
            };
            self.last = t;
            out.push(t);
        }
        Ok(out)
    }

    fn landmark_transforms(&mut self, frames: &[Frame]) -> Result<Vec<FrameTransform>> {
        let fits: Vec<Option<Result<(u64, FrameTransform)>>> = frames
            .par_iter()
            .map(|f| {
                let (a, pairs) = self.landmarks.get(&f.index)?;
                Some(landmark_transform(pairs).map(|t| (*a, t)).map_err(|e| Error::stage("register", f.index, e)))
            })
            .collect();
        let mut out = Vec::with_capacity(frames.len());
        for (f, fit) in frames.iter().zip(fits) {
            let t = match fit.transpose()? {
                Some((a, fit)) => {
                    let ta = self.anchors.get(&a).copied().flatten();
                    let ta = ta.ok_or_else(|| Error::stage("register", f.index, format!("landmarks refer to frame {a}, which is not in the sequence")))?;
                    ta.compose(&fit)
                }
                None => self.last,
            };
            if let Some(slot) = self.anchors.get_mut(&f.index) {
                *slot = Some(t);
            }
            self.last = t;
            out.push(t);
        }
        Ok(out)
    }
}

pub fn apply_transforms(frames: &[Frame], transforms: &[FrameTransform], config: &RegistrationConfig) -> Vec<Warped> {
    frames.par_iter().zip(transforms.par_iter()).map(|(f, t)| {
        let mut w = warp(f, t, config.interpolation);
        w.frame = w.frame.with_index(f.index);
        w
    }).collect()
}

/// Absolute difference of two registered frames, zero wherever either
/// frame had no source pixel.
pub fn registered_difference(a: &Warped, b: &Warped) -> Result<Frame> {
    let d = difference_image(&a.frame, &b.frame).map_err(|e| Error::stage("register", b.frame.index, e))?;
    let n = d.channels().count();
    let mut data = d.data().to_vec();
    for (i, px) in data.chunks_mut(n).enumerate() {
        if !(a.valid[i] && b.valid[i]) {
            px.fill(0);
        }
    }
    Frame::new(d.width(), d.height(), d.channels(), data).map(|f| f.with_index(b.frame.index)).map_err(|e| Error::stage("register", b.frame.index, e))
}

/// Sequential background subtraction with warm-up.
pub struct BackgroundStage {
    method: BackgroundMethod,
    warmup: usize,
    model: Option<BackgroundSubtractor>,
    seen: usize,
}

impl BackgroundStage {
    pub fn new(method: BackgroundMethod, warmup: usize) -> Self {
        BackgroundStage { method, warmup, model: None, seen: 0 }
    }

    /// Returns the mask once the warm-up is over.
    pub fn push(&mut self, frame: &Frame, valid: Option<&[bool]>) -> Result<Option<ForegroundMask>> {
        let stage_err = |e: &dyn std::fmt::Display| Error::stage("background", frame.index, e);
        if self.model.is_none() {
            self.model = Some(BackgroundSubtractor::new(frame.width(), frame.height(), &self.method).map_err(|e| stage_err(&e))?);
        }
        let mask = self.model.as_mut().unwrap().apply_masked(frame, valid).map_err(|e| stage_err(&e))?;
        self.seen += 1;
        Ok((self.seen > self.warmup).then_some(mask))
    }

    pub fn frames_seen(&self) -> usize {
        self.seen
    }
}

/// Connected components per mask (parallel) feeding the tracker (ordered).
pub struct DetectStage {
    connectivity: Connectivity,
    min_area: usize,
    tracker: Tracker,
    observations: Vec<TrackObservation>,
}

impl DetectStage {
    pub fn new(connectivity: Connectivity, min_area: usize, params: TrackerParams) -> Self {
        DetectStage { connectivity, min_area, tracker: Tracker::new(params), observations: Vec::new() }
    }

    /// Observations of this batch with the labels known so far.
    pub fn push(&mut self, masks: &[(u64, &ForegroundMask)]) -> Result<Vec<TrackObservation>> {
        let blobs: Vec<_> = masks.par_iter().map(|(i, m)| connected_components(m, self.connectivity, self.min_area, *i)).collect();
        let mut batch = Vec::new();
        for ((i, _), b) in masks.iter().zip(&blobs) {
            let obs = self.tracker.step(*i, b).map_err(|e| Error::stage("detect", *i, e))?;
            batch.extend(obs);
        }
        self.observations.extend(batch.iter().cloned());
        Ok(batch)
    }

    /// All observations, relabeled with each track's final label.
    pub fn finish(self) -> Vec<TrackObservation> {
        let labels: HashMap<u64, _> = self.tracker.into_tracks().into_iter().map(|t| (t.id, t.label)).collect();
        let mut obs = self.observations;
        for o in &mut obs {
            o.label = labels[&o.track_id];
        }
        obs
    }
}

/// Horizon error summary; percentiles are absent when no frame had an estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub frames: usize,
    pub failures: usize,
    pub y_p25: Option<f64>,
    pub y_p50: Option<f64>,
    pub alpha_p25: Option<f64>,
    pub alpha_p50: Option<f64>,
    pub y_max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub dataset: String,
    /// Per dataset, as in a dataset overview table.
    pub dataset_stats: BTreeMap<String, DatasetStats>,
    /// Per dataset, then per horizon method.
    pub error_stats: BTreeMap<String, BTreeMap<String, ErrorSummary>>,
    pub detection: Option<DetectionReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub first_frame: u64,
    pub iou_threshold: f64,
    #[serde(flatten)]
    pub metrics: DetectionMetrics,
}

pub struct EvalInputs<'a> {
    pub dataset: &'a str,
    pub method: &'a str,
    pub frame_indices: &'a [u64],
    pub horizon_estimates: Option<&'a [HorizonRecord]>,
    pub horizon_gt: Option<&'a [HorizonRecord]>,
    pub tracks: Option<&'a [TrackObservation]>,
    pub objects_gt: Option<&'a [ObjectRecord]>,
    /// Raw → registered frame transforms; identity when absent.
    pub transforms: Option<&'a [(u64, FrameTransform)]>,
    /// Ground truth before this frame (background warm-up) is not scored.
    pub detection_start: u64,
    pub iou_threshold: f64,
}

/// Bounding box of a pixel box mapped through `t`.
pub fn transform_box(b: &BoundingBox, t: &FrameTransform) -> BoundingBox {
    if t.is_identity() {
        return *b;
    }
    let (x0, y0) = (b.x as f64, b.y as f64);
    let (x1, y1) = (x0 + b.w as f64 - 1.0, y0 + b.h as f64 - 1.0);
    let pts = [t.apply((x0, y0)), t.apply((x1, y0)), t.apply((x0, y1)), t.apply((x1, y1))];
    let min_x = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min).round();
    let max_x = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max).round();
    let min_y = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).round();
    let max_y = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).round();
    BoundingBox::new(min_x as i64, min_y as i64, (max_x - min_x) as u32 + 1, (max_y - min_y) as u32 + 1)
}

pub fn evaluate(inp: &EvalInputs) -> Result<Report> {
    let mut report = Report { dataset: inp.dataset.to_string(), dataset_stats: BTreeMap::new(), error_stats: BTreeMap::new(), detection: None };
    if let Some(gt) = inp.horizon_gt {
        let counts: Option<Vec<usize>> = inp.objects_gt.map(|objs| {
            let mut per: BTreeMap<u64, usize> = inp.frame_indices.iter().map(|&i| (i, 0)).collect();
            for o in objs {
                *per.entry(o.frame_index).or_default() += 1;
            }
            per.into_values().collect()
        });
        if !gt.is_empty() {
            let stats = dataset_stats(gt, counts.as_deref().unwrap_or(&[])).map_err(|e| Error::InvalidInput(e.to_string()))?;
            report.dataset_stats.insert(inp.dataset.to_string(), stats);
        }
        if let Some(est) = inp.horizon_estimates {
            let summary = match error_stats(est, gt) {
                Ok(s) => ErrorSummary {
                    frames: s.frames,
                    failures: s.failures,
                    y_p25: Some(s.y_p25),
                    y_p50: Some(s.y_p50),
                    alpha_p25: Some(s.alpha_p25),
                    alpha_p50: Some(s.alpha_p50),
                    y_max: s.dy.iter().copied().reduce(f64::max),
                },
                Err(EvalError::EmptySeries) => {
                    ErrorSummary { frames: 0, failures: gt.len(), y_p25: None, y_p50: None, alpha_p25: None, alpha_p50: None, y_max: None }
                }
                Err(e) => return Err(Error::InvalidInput(e.to_string())),
            };
            report.error_stats.entry(inp.dataset.to_string()).or_default().insert(inp.method.to_string(), summary);
        }
    }
    if let (Some(tracks), Some(objs)) = (inp.tracks, inp.objects_gt) {
        let transforms: HashMap<u64, FrameTransform> = inp.transforms.unwrap_or(&[]).iter().copied().collect();
        let truth: Vec<ObjectRecord> = objs
            .iter()
            .filter(|o| o.frame_index >= inp.detection_start)
            .map(|o| {
                let t = transforms.get(&o.frame_index).copied().unwrap_or_else(FrameTransform::identity);
                ObjectRecord { bbox: transform_box(&o.bbox, &t), ..*o }
            })
            .collect();
        let preds: Vec<ObjectRecord> = tracks
            .iter()
            .filter(|o| o.frame_index >= inp.detection_start)
            .map(|o| ObjectRecord { frame_index: o.frame_index, object_id: o.track_id, bbox: o.bbox, motion: o.label })
            .collect();
        let metrics = detection_metrics(&preds, &truth, inp.iou_threshold).map_err(|e| Error::InvalidInput(e.to_string()))?;
        report.detection = Some(DetectionReport { first_frame: inp.detection_start, iou_threshold: inp.iou_threshold, metrics });
    }
    Ok(report)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e))?;
    text.push('\n');
    io::create_parent(path)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Artifact layout of a pipeline run.
pub struct OutputLayout {
    pub root: PathBuf,
}

impl OutputLayout {
    pub fn horizon_csv(&self) -> PathBuf {
        self.root.join("horizon.csv")
    }
    pub fn transforms_csv(&self) -> PathBuf {
        self.root.join("transforms.csv")
    }
    pub fn registered(&self) -> PathBuf {
        self.root.join("registered")
    }
    pub fn masks(&self) -> PathBuf {
        self.root.join("masks")
    }
    pub fn tracks_csv(&self) -> PathBuf {
        self.root.join("tracks.csv")
    }
    pub fn report_json(&self) -> PathBuf {
        self.root.join("report.json")
    }
    pub fn overlays(&self) -> PathBuf {
        self.root.join("overlays")
    }
}

/// Writes registered frames and their validity masks.
pub fn write_registered(dir: &Path, warped: &[Warped], format: ImageFormat) -> Result<()> {
    warped.par_iter().try_for_each(|w| {
        let f = &w.frame;
        let gray = f.channels() == mariscope_core::Channels::Gray;
        io::write_frame(&io::numbered(dir, io::FRAME_PREFIX, f.index, format.ext(gray)), f)?;
        let valid = ForegroundMask { width: f.width(), height: f.height(), data: w.valid.clone() };
        io::write_mask(&io::numbered(dir, io::VALID_PREFIX, f.index, format.ext(true)), &valid)
    })
}

pub fn write_masks(dir: &Path, masks: &[(u64, ForegroundMask)], format: ImageFormat) -> Result<()> {
    masks.par_iter().try_for_each(|(i, m)| io::write_mask(&io::numbered(dir, io::MASK_PREFIX, *i, format.ext(true)), m))
}

/// Outcome of [`run_pipeline`].
pub struct PipelineSummary {
    pub frames: usize,
    pub horizon_failures: usize,
    pub report: Report,
}

/// Runs horizon → registration → background → detection → evaluation,
/// streaming `config.pipeline.chunk_frames` frames at a time.
pub fn run_pipeline(dataset: &Dataset, config: &Config, out: &Path) -> Result<PipelineSummary> {
    let layout = OutputLayout { root: out.to_path_buf() };
    io::create_dir(out)?;
    io::create_dir(&layout.registered())?;
    io::create_dir(&layout.masks())?;
    if config.pipeline.overlays {
        io::create_dir(&layout.overlays())?;
    }
    write_json(&out.join("config.json"), config)?;

    let fmt = config.pipeline.image_format;
    let mut horizon_sink = CsvSink::horizon_report(&layout.horizon_csv())?;
    let mut transform_sink = CsvSink::transforms(&layout.transforms_csv())?;
    let mut registrar = Registrar::new(config.registration.clone(), dataset.manifest.camera)?;
    let mut background = BackgroundStage::new(config.background.method, config.background.warmup);
    let mut detect = DetectStage::new(config.detection.connectivity, config.detection.min_area, config.detection.tracker);

    let mut estimates = Vec::new();
    let mut transforms = Vec::new();
    let mut failures = 0;
    let mut detection_start = None;

    for chunk in dataset.frames.chunks(config.pipeline.chunk_frames) {
        let frames = read_frames(chunk).map_err(|e| Error::stage("read", chunk[0].0, e))?;

        let detected = detect_horizons(&frames, &config.horizon);
        let mut horizons = Vec::with_capacity(frames.len());
        for (f, r) in frames.iter().zip(&detected) {
            match r {
                Ok(e) => {
                    horizon_sink.push_estimate(f.index, e)?;
                    estimates.push(horizon_record(f.index, e));
                    horizons.push(Some(horizon_record(f.index, e)));
                }
                Err(_) => {
                    failures += 1;
                    horizons.push(None);
                }
            }
        }
        horizon_sink.flush()?;

        let ts = registrar.transforms(&frames, &horizons)?;
        for (f, t) in frames.iter().zip(&ts) {
            transform_sink.push_transform(f.index, t)?;
            transforms.push((f.index, *t));
        }
        transform_sink.flush()?;
        let warped = apply_transforms(&frames, &ts, &config.registration);
        drop(frames);
        write_registered(&layout.registered(), &warped, fmt)?;

        let mut masks = Vec::new();
        for w in &warped {
            if let Some(m) = background.push(&w.frame, Some(&w.valid))? {
                detection_start.get_or_insert(w.frame.index);
                masks.push((w.frame.index, m));
            }
        }
        write_masks(&layout.masks(), &masks, fmt)?;

        let refs: Vec<(u64, &ForegroundMask)> = masks.iter().map(|(i, m)| (*i, m)).collect();
        let observations = detect.push(&refs)?;

        if config.pipeline.overlays {
            let reference = estimates.first().map(|r| HorizonLine::new(r.y, r.alpha));
            let by_index: HashMap<u64, &ForegroundMask> = refs.iter().copied().collect();
            warped.par_iter().try_for_each(|w| {
                let i = w.frame.index;
                let boxes: Vec<_> = observations.iter().filter(|o| o.frame_index == i).map(|o| (o.bbox, o.label)).collect();
                let horizon = if registrar.enabled() { reference } else { horizons.iter().flatten().find(|h| h.frame_index == i).map(|h| HorizonLine::new(h.y, h.alpha)) };
                let img = emit_overlay(&w.frame, &Overlay { horizon, boxes: &boxes, mask: by_index.get(&i).copied() })?;
                io::write_frame(&io::numbered(&layout.overlays(), io::FRAME_PREFIX, i, fmt.ext(false)), &img)
            })?;
        }
    }

    let observations = detect.finish();
    formats::write_tracks_csv(&layout.tracks_csv(), &observations)?;

    let horizon_gt = dataset.manifest.horizon_gt.as_deref().map(formats::read_horizon_csv).transpose()?;
    let objects_gt = dataset.manifest.objects_gt.as_deref().map(formats::read_objects_csv).transpose()?;
    let frame_indices: Vec<u64> = dataset.frames.iter().map(|f| f.0).collect();
    let report = evaluate(&EvalInputs {
        dataset: &dataset.manifest.name,
        method: config.horizon.metric.name(),
        frame_indices: &frame_indices,
        horizon_estimates: Some(&estimates),
        horizon_gt: horizon_gt.as_deref(),
        tracks: detection_start.map(|_| observations.as_slice()),
        objects_gt: objects_gt.as_deref(),
        transforms: Some(&transforms),
        detection_start: detection_start.unwrap_or(u64::MAX),
        iou_threshold: config.eval.iou_threshold,
    })?;
    write_json(&layout.report_json(), &report)?;
    Ok(PipelineSummary { frames: dataset.frames.len(), horizon_failures: failures, report })
}
