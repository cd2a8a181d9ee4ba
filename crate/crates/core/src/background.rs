//! Per-pixel statistical background models on grayscale intensities.
//!
//! Both models keep one independent state per pixel, so an update's result
//! never depends on pixel iteration order. Color frames are converted with
//! [`Frame::to_gray`] before modeling.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::imgcore::Frame;
use crate::math;

#[derive(Clone, Debug, PartialEq)]
pub enum BackgroundError {
    SizeMismatch,
    EmptySequence,
    WarmupTooLong { warmup: usize, frames: usize },
    InvalidParams(&'static str),
}

impl fmt::Display for BackgroundError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackgroundError::SizeMismatch => f.write_str("frame size does not match the background model"),
            BackgroundError::EmptySequence => f.write_str("no frames"),
            BackgroundError::WarmupTooLong { warmup, frames } => {
                write!(f, "warmup of {warmup} frames leaves nothing of a {frames}-frame sequence")
            }
            BackgroundError::InvalidParams(what) => write!(f, "invalid parameter: {what}"),
        }
    }
}

impl core::error::Error for BackgroundError {}

/// Binary per-pixel labels; `true` is foreground.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ForegroundMask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl ForegroundMask {
    pub fn new(width: usize, height: usize) -> Self {
        ForegroundMask { width, height, data: vec![false; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        ForegroundMask { width, height, data }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn foreground_count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// Intersection over union of the foreground sets; 1 when both are empty.
    pub fn iou(&self, other: &ForegroundMask) -> f64 {
        let (mut inter, mut union) = (0usize, 0usize);
        for (&a, &b) in self.data.iter().zip(&other.data) {
            inter += (a && b) as usize;
            union += (a || b) as usize;
        }
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SingleGaussianParams {
    pub learning_rate: f64,
    /// Match threshold in standard deviations.
    pub k: f64,
    pub initial_variance: f64,
    pub variance_floor: f64,
    /// Support weight below which an unmatched pixel re-initializes to the
    /// current intensity. Support decays by `1 - learning_rate` per unmatched
    /// frame, so a persistent change is absorbed after
    /// `ceil(ln(absorb_threshold) / ln(1 - learning_rate))` frames.
    pub absorb_threshold: f64,
}

impl Default for SingleGaussianParams {
    fn default() -> Self {
        SingleGaussianParams { learning_rate: 0.02, k: 2.5, initial_variance: 225.0, variance_floor: 4.0, absorb_threshold: 0.05 }
    }
}

impl SingleGaussianParams {
    fn validate(&self) -> Result<(), BackgroundError> {
        if !(self.learning_rate > 0.0 && self.learning_rate < 1.0) {
            return Err(BackgroundError::InvalidParams("learning_rate must be in (0, 1)"));
        }
        if !(self.k > 0.0) {
            return Err(BackgroundError::InvalidParams("k must be positive"));
        }
        if !(self.variance_floor > 0.0 && self.initial_variance >= self.variance_floor) {
            return Err(BackgroundError::InvalidParams("need 0 < variance_floor <= initial_variance"));
        }
        if !(self.absorb_threshold >= 0.0 && self.absorb_threshold < 1.0) {
            return Err(BackgroundError::InvalidParams("absorb_threshold must be in [0, 1)"));
        }
        Ok(())
    }

    /// Frames for a persistent change to be absorbed into the background.
    pub fn absorb_frames(&self) -> usize {
        math::ceil(math::ln(self.absorb_threshold) / math::ln(1.0 - self.learning_rate)) as usize
    }
}

/// One Gaussian per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleGaussianModel {
    pub params: SingleGaussianParams,
    width: usize,
    height: usize,
    mean: Vec<f64>,
    variance: Vec<f64>,
    support: Vec<f64>,
    initialized: Vec<bool>,
}

impl SingleGaussianModel {
    pub fn new(width: usize, height: usize, params: SingleGaussianParams) -> Result<Self, BackgroundError> {
        params.validate()?;
        let n = width * height;
        Ok(SingleGaussianModel {
            params,
            width,
            height,
            mean: vec![0.0; n],
            variance: vec![params.initial_variance; n],
            support: vec![1.0; n],
            initialized: vec![false; n],
        })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variance(&self) -> &[f64] {
        &self.variance
    }

    pub fn is_initialized(&self, i: usize) -> bool {
        self.initialized[i]
    }

    /// Sets one pixel's state directly.
    pub fn set_pixel(&mut self, i: usize, mean: f64, variance: f64) {
        self.mean[i] = mean;
        self.variance[i] = variance.max(self.params.variance_floor);
        self.support[i] = 1.0;
        self.initialized[i] = true;
    }

    /// Classifies `frame` against the model, then adapts the model.
    ///
    /// Background iff `|x − μ| ≤ k σ`. Matched pixels update `μ` first and
    /// then `σ²` with the new `μ`; unmatched pixels keep `μ, σ²`.
    pub fn update(&mut self, frame: &Frame) -> Result<ForegroundMask, BackgroundError> {
        self.update_masked(frame, None)
    }

    /// Like [`update`](Self::update), but pixels with `valid[i] == false`
    /// (e.g. outside a warped frame) are labeled background and left untouched.
    pub fn update_masked(&mut self, frame: &Frame, valid: Option<&[bool]>) -> Result<ForegroundMask, BackgroundError> {
        check_shape(frame, valid, self.width, self.height)?;
        let gray = frame.to_gray();
        let p = self.params;
        let mut mask = ForegroundMask::new(self.width, self.height);
        for (i, &v) in gray.data().iter().enumerate() {
            if valid.is_some_and(|m| !m[i]) {
                continue;
            }
            let x = v as f64;
            if !self.initialized[i] {
                self.set_pixel(i, x, p.initial_variance);
                continue;
            }
            let (mu, var) = (self.mean[i], self.variance[i]);
            if (x - mu).abs() <= p.k * math::sqrt(var) {
                let mu = (1.0 - p.learning_rate) * mu + p.learning_rate * x;
                let d = x - mu;
                self.mean[i] = mu;
                self.variance[i] = ((1.0 - p.learning_rate) * var + p.learning_rate * d * d).max(p.variance_floor);
                self.support[i] = (1.0 - p.learning_rate) * self.support[i] + p.learning_rate;
            } else {
                let s = (1.0 - p.learning_rate) * self.support[i];
                if s < p.absorb_threshold {
                    self.set_pixel(i, x, p.initial_variance);
                } else {
                    self.support[i] = s;
                    mask.data[i] = true;
                }
            }
        }
        Ok(mask)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct MixtureParams {
    pub components: usize,
    pub learning_rate: f64,
    pub k: f64,
    /// Portion `T` of the weight mass explained by background components.
    pub background_portion: f64,
    pub initial_variance: f64,
    pub variance_floor: f64,
    pub initial_weight: f64,
}

impl Default for MixtureParams {
    fn default() -> Self {
        MixtureParams {
            components: 4,
            learning_rate: 0.02,
            k: 2.5,
            background_portion: 0.8,
            initial_variance: 225.0,
            variance_floor: 4.0,
            initial_weight: 0.05,
        }
    }
}

impl MixtureParams {
    fn validate(&self) -> Result<(), BackgroundError> {
        if self.components == 0 {
            return Err(BackgroundError::InvalidParams("components must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate < 1.0) {
            return Err(BackgroundError::InvalidParams("learning_rate must be in (0, 1)"));
        }
        if !(self.background_portion > 0.0 && self.background_portion < 1.0) {
            return Err(BackgroundError::InvalidParams("background_portion must be in (0, 1)"));
        }
        if !(self.k > 0.0) {
            return Err(BackgroundError::InvalidParams("k must be positive"));
        }
        if !(self.variance_floor > 0.0 && self.initial_variance >= self.variance_floor) {
            return Err(BackgroundError::InvalidParams("need 0 < variance_floor <= initial_variance"));
        }
        if !(self.initial_weight > 0.0 && self.initial_weight < 1.0) {
            return Err(BackgroundError::InvalidParams("initial_weight must be in (0, 1)"));
        }
        Ok(())
    }
}

/// A single mixture component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

/// `K` Gaussians per pixel, kept sorted by `w/σ` descending; components with
/// zero weight are unused and sort last.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureModel {
    pub params: MixtureParams,
    width: usize,
    height: usize,
    comps: Vec<Component>,
}

impl MixtureModel {
    pub fn new(width: usize, height: usize, params: MixtureParams) -> Result<Self, BackgroundError> {
        params.validate()?;
        let empty = Component { weight: 0.0, mean: 0.0, variance: params.initial_variance };
        Ok(MixtureModel { params, width, height, comps: vec![empty; width * height * params.components] })
    }

    /// Components of pixel `i`, in sorted order.
    pub fn components(&self, i: usize) -> &[Component] {
        let k = self.params.components;
        &self.comps[i * k..(i + 1) * k]
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn update(&mut self, frame: &Frame) -> Result<ForegroundMask, BackgroundError> {
        self.update_masked(frame, None)
    }

    /// See [`SingleGaussianModel::update_masked`].
    pub fn update_masked(&mut self, frame: &Frame, valid: Option<&[bool]>) -> Result<ForegroundMask, BackgroundError> {
        check_shape(frame, valid, self.width, self.height)?;
        let gray = frame.to_gray();
        let p = self.params;
        let k = p.components;
        let mut mask = ForegroundMask::new(self.width, self.height);
        for (i, &v) in gray.data().iter().enumerate() {
            if valid.is_some_and(|m| !m[i]) {
                continue;
            }
            let comps = &mut self.comps[i * k..(i + 1) * k];
            mask.data[i] = !update_pixel(comps, v as f64, &p);
        }
        Ok(mask)
    }
}

fn check_shape(frame: &Frame, valid: Option<&[bool]>, width: usize, height: usize) -> Result<(), BackgroundError> {
    if frame.width() != width || frame.height() != height || valid.is_some_and(|m| m.len() != width * height) {
        return Err(BackgroundError::SizeMismatch);
    }
    Ok(())
}

// Returns true when the pixel is background.
fn update_pixel(comps: &mut [Component], x: f64, p: &MixtureParams) -> bool {
    if comps[0].weight <= 0.0 {
        comps[0] = Component { weight: 1.0, mean: x, variance: p.initial_variance };
        return true;
    }
    let active = comps.iter().take_while(|c| c.weight > 0.0).count();

    // background set from the current (pre-update) ordering
    let mut cum = 0.0;
    let mut n_background = 0;
    for c in &comps[..active] {
        cum += c.weight;
        n_background += 1;
        if cum > p.background_portion {
            break;
        }
    }

    let matched = comps[..active].iter().position(|c| (x - c.mean).abs() <= p.k * math::sqrt(c.variance));
    let is_background = match matched {
        Some(m) => {
            for (i, c) in comps[..active].iter_mut().enumerate() {
                c.weight = (1.0 - p.learning_rate) * c.weight + if i == m { p.learning_rate } else { 0.0 };
            }
            let c = &mut comps[m];
            let rate = (p.learning_rate / c.weight).min(1.0);
            c.mean += rate * (x - c.mean);
            let d = x - c.mean;
            c.variance = ((1.0 - rate) * c.variance + rate * d * d).max(p.variance_floor);
            m < n_background
        }
        None => {
            // unused slots have weight 0 and are picked first; ties go to the last slot
            let mut lowest = 0;
            for (i, c) in comps.iter().enumerate() {
                if c.weight <= comps[lowest].weight {
                    lowest = i;
                }
            }
            comps[lowest] = Component { weight: p.initial_weight, mean: x, variance: p.initial_variance };
            false
        }
    };

    let total: f64 = comps.iter().map(|c| c.weight).sum();
    for c in comps.iter_mut() {
        c.weight /= total;
    }
    sort_components(comps);
    is_background
}

// Insertion sort by w/σ descending (K is small and the list is nearly sorted).
fn sort_components(comps: &mut [Component]) {
    let key = |c: &Component| if c.weight > 0.0 { c.weight / math::sqrt(c.variance) } else { -1.0 };
    for i in 1..comps.len() {
        let mut j = i;
        while j > 0 && key(&comps[j]) > key(&comps[j - 1]) {
            comps.swap(j, j - 1);
            j -= 1;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "method", rename_all = "kebab-case"))]
pub enum BackgroundMethod {
    SingleGaussian(SingleGaussianParams),
    Gmm(MixtureParams),
}

impl Default for BackgroundMethod {
    fn default() -> Self {
        BackgroundMethod::Gmm(MixtureParams::default())
    }
}

/// Either background model behind one streaming interface.
#[derive(Clone, Debug, PartialEq)]
pub enum BackgroundSubtractor {
    SingleGaussian(SingleGaussianModel),
    Mixture(MixtureModel),
}

impl BackgroundSubtractor {
    pub fn new(width: usize, height: usize, method: &BackgroundMethod) -> Result<Self, BackgroundError> {
        Ok(match method {
            BackgroundMethod::SingleGaussian(p) => BackgroundSubtractor::SingleGaussian(SingleGaussianModel::new(width, height, *p)?),
            BackgroundMethod::Gmm(p) => BackgroundSubtractor::Mixture(MixtureModel::new(width, height, *p)?),
        })
    }

    pub fn apply(&mut self, frame: &Frame) -> Result<ForegroundMask, BackgroundError> {
        self.apply_masked(frame, None)
    }

    pub fn apply_masked(&mut self, frame: &Frame, valid: Option<&[bool]>) -> Result<ForegroundMask, BackgroundError> {
        match self {
            BackgroundSubtractor::SingleGaussian(m) => m.update_masked(frame, valid),
            BackgroundSubtractor::Mixture(m) => m.update_masked(frame, valid),
        }
    }
}

/// Feeds every frame to a fresh model and returns the masks of the frames
/// after the first `warmup`.
pub fn run_background_subtraction<'a, I>(frames: I, method: &BackgroundMethod, warmup: usize) -> Result<Vec<ForegroundMask>, BackgroundError>
where
    I: IntoIterator<Item = &'a Frame>,
{
    let frames: Vec<&Frame> = frames.into_iter().collect();
    let first = frames.first().ok_or(BackgroundError::EmptySequence)?;
    if warmup >= frames.len() {
        return Err(BackgroundError::WarmupTooLong { warmup, frames: frames.len() });
    }
    let mut model = BackgroundSubtractor::new(first.width(), first.height(), method)?;
    let mut masks = Vec::with_capacity(frames.len() - warmup);
    for (t, f) in frames.iter().enumerate() {
        let m = model.apply(f)?;
        if t >= warmup {
            masks.push(m);
        }
    }
    Ok(masks)
}
