//! Deterministic synthetic maritime scenes with exact ground truth.
//!
//! A scene is a sky/sea split along a moving horizon, traveling wave texture
//! on the sea, an optional shoreline band sitting on the horizon, and
//! rectangular objects. All randomness is keyed on `(seed, stream, frame,
//! ...)`, so any frame renders independently of the others.
//!
//! Geometry: for camera pose `(Y, α, yaw)` a pixel `(x, y)` maps to world
//! coordinates `u = rx·cos α − ry·sin α`, `v = rx·sin α + ry·cos α` with
//! `rx = x − xc`, `ry = y − Y`; the world horizon is `v = 0` and yaw shifts
//! world content right by `yaw` pixels. Object positions are given in
//! *reference* screen coordinates, i.e. the screen of the pose
//! `(reference_y, 0°, 0)`.

use alloc::vec::Vec;
use core::fmt;

use crate::background::ForegroundMask;
use crate::evalbench::{HorizonRecord, ObjectRecord};
use crate::foreground::{BoundingBox, MotionLabel};
use crate::horizon::HorizonLine;
use crate::imgcore::{Frame, ImageError};
use crate::math;
use crate::rng::{gaussian_at, uniform_at};

const STREAM_JITTER: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_SHORE: u64 = 3;

#[derive(Clone, Debug, PartialEq)]
pub enum SynthError {
    InvalidSpec(&'static str),
    /// The horizon center leaves the image at `frame`.
    SpecOutOfBounds { frame: u64, y: f64 },
    Image(ImageError),
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::InvalidSpec(what) => write!(f, "invalid scene spec: {what}"),
            SynthError::SpecOutOfBounds { frame, y } => write!(f, "horizon Y = {y} leaves the image at frame {frame}"),
            SynthError::Image(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SynthError {}

impl From<ImageError> for SynthError {
    fn from(e: ImageError) -> Self {
        SynthError::Image(e)
    }
}

/// Camera-induced horizon state of one frame.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CameraPose {
    pub y: f64,
    pub alpha: f64,
    pub yaw: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct Sinusoid {
    pub mean: f64,
    pub amplitude: f64,
    /// Frames per cycle; `0` means constant.
    pub period: f64,
    /// Radians.
    pub phase: f64,
}

impl Sinusoid {
    pub fn constant(v: f64) -> Self {
        Sinusoid { mean: v, ..Sinusoid::default() }
    }

    pub fn at(&self, t: f64) -> f64 {
        if self.period > 0.0 && self.amplitude != 0.0 {
            self.mean + self.amplitude * math::sin(2.0 * core::f64::consts::PI * t / self.period + self.phase)
        } else {
            self.mean
        }
    }

    /// Standard deviation over whole cycles.
    pub fn std(&self) -> f64 {
        if self.period > 0.0 {
            self.amplitude.abs() / core::f64::consts::SQRT_2
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Keyframe {
    pub frame: u64,
    pub y: f64,
    pub alpha: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub yaw: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum HorizonPath {
    Sinusoidal { y: Sinusoid, alpha: Sinusoid, yaw: Sinusoid },
    /// Linear interpolation between keyframes sorted by frame; held constant
    /// outside their range.
    Keyframes { keys: Vec<Keyframe> },
}

impl HorizonPath {
    pub fn constant(y: f64, alpha: f64) -> Self {
        HorizonPath::Sinusoidal { y: Sinusoid::constant(y), alpha: Sinusoid::constant(alpha), yaw: Sinusoid::default() }
    }

    pub fn at(&self, t: u64) -> CameraPose {
        match self {
            HorizonPath::Sinusoidal { y, alpha, yaw } => {
                let tf = t as f64;
                CameraPose { y: y.at(tf), alpha: alpha.at(tf), yaw: yaw.at(tf) }
            }
            HorizonPath::Keyframes { keys } => {
                let pose = |k: &Keyframe| CameraPose { y: k.y, alpha: k.alpha, yaw: k.yaw };
                let i = keys.partition_point(|k| k.frame <= t);
                if i == 0 {
                    return pose(&keys[0]);
                }
                if i == keys.len() {
                    return pose(&keys[i - 1]);
                }
                let (a, b) = (&keys[i - 1], &keys[i]);
                let s = (t - a.frame) as f64 / (b.frame - a.frame) as f64;
                let lerp = |p: f64, q: f64| p + s * (q - p);
                CameraPose { y: lerp(a.y, b.y), alpha: lerp(a.alpha, b.alpha), yaw: lerp(a.yaw, b.yaw) }
            }
        }
    }

    /// Y of the reference pose that object positions are expressed in.
    pub fn reference_y(&self) -> f64 {
        match self {
            HorizonPath::Sinusoidal { y, .. } => y.mean,
            HorizonPath::Keyframes { keys } => keys.first().map_or(0.0, |k| k.y),
        }
    }
}

/// Per-frame Gaussian camera shake, standard deviations in pixels / degrees.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct Jitter {
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
}

/// A traveling sinusoid on the sea surface, in world coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Wave {
    /// Intensity levels.
    pub amplitude: f64,
    /// Pixels.
    pub wavelength: f64,
    /// Frames per cycle; `0` freezes the wave.
    pub period: f64,
    /// Travel direction, degrees from the horizon direction.
    pub direction: f64,
}

/// Band of land above the horizon with piecewise-constant height.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Shoreline {
    pub color: [u8; 3],
    pub max_height: f64,
    pub segment: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObjectSpec {
    pub width: f64,
    pub height: f64,
    pub color: [u8; 3],
    /// Top-left corner in reference screen coordinates at `appear`.
    pub position: (f64, f64),
    #[cfg_attr(feature = "serde", serde(default))]
    pub velocity: (f64, f64),
    /// `[x_min, y_min, x_max, y_max]`; the object reflects off these walls.
    #[cfg_attr(feature = "serde", serde(default))]
    pub bounce: Option<[f64; 4]>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub appear: u64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub disappear: Option<u64>,
    pub motion: MotionLabel,
}

fn fold(p: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    let span = hi - lo;
    let m = (p - lo) - 2.0 * span * math::floor((p - lo) / (2.0 * span));
    lo + if m > span { 2.0 * span - m } else { m }
}

impl ObjectSpec {
    pub fn visible_at(&self, t: u64) -> bool {
        t >= self.appear && self.disappear.is_none_or(|d| t < d)
    }

    /// Top-left corner in reference coordinates at frame `t`.
    pub fn position_at(&self, t: u64) -> (f64, f64) {
        let dt = t.saturating_sub(self.appear) as f64;
        let (mut x, mut y) = (self.position.0 + self.velocity.0 * dt, self.position.1 + self.velocity.1 * dt);
        if let Some([x0, y0, x1, y1]) = self.bounce {
            x = fold(x, x0, x1 - self.width);
            y = fold(y, y0, y1 - self.height);
        }
        (x, y)
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub frames: u64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
    pub horizon: HorizonPath,
    #[cfg_attr(feature = "serde", serde(default))]
    pub jitter: Jitter,
    pub sky: [u8; 3],
    pub sea: [u8; 3],
    #[cfg_attr(feature = "serde", serde(default))]
    pub waves: Vec<Wave>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub noise_sigma: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub shoreline: Option<Shoreline>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub objects: Vec<ObjectSpec>,
}

/// One rendered frame and its ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct RenderedFrame {
    pub frame: Frame,
    pub pose: CameraPose,
    pub horizon: HorizonRecord,
    /// Objects with at least one pixel in the image; boxes are exact.
    pub objects: Vec<ObjectRecord>,
    /// Union of the exact object masks.
    pub object_mask: ForegroundMask,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.width < 2 || self.height < 2 {
            return Err(SynthError::InvalidSpec("width and height must be at least 2"));
        }
        if self.frames == 0 {
            return Err(SynthError::InvalidSpec("frames must be at least 1"));
        }
        if let HorizonPath::Keyframes { keys } = &self.horizon {
            if keys.is_empty() || keys.windows(2).any(|w| w[0].frame >= w[1].frame) {
                return Err(SynthError::InvalidSpec("keyframes must be non-empty and strictly increasing"));
            }
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(SynthError::InvalidSpec("noise_sigma must be non-negative"));
        }
        if self.waves.iter().any(|w| !(w.wavelength > 0.0)) {
            return Err(SynthError::InvalidSpec("wave wavelength must be positive"));
        }
        if let Some(s) = &self.shoreline {
            if !(s.segment > 0.0 && s.max_height >= 0.0) {
                return Err(SynthError::InvalidSpec("shoreline needs segment > 0 and max_height >= 0"));
            }
        }
        if self.objects.iter().any(|o| !(o.width > 0.0 && o.height > 0.0)) {
            return Err(SynthError::InvalidSpec("object size must be positive"));
        }
        for t in 0..self.frames {
            let p = self.pose(t);
            if !(0.0..=self.height as f64).contains(&p.y) {
                return Err(SynthError::SpecOutOfBounds { frame: t, y: p.y });
            }
        }
        Ok(())
    }

    /// Path pose plus this frame's jitter.
    pub fn pose(&self, t: u64) -> CameraPose {
        let mut p = self.horizon.at(t);
        let j = self.jitter;
        if j.dx != 0.0 {
            p.yaw += j.dx * gaussian_at(self.seed, &[STREAM_JITTER, t, 0]);
        }
        if j.dy != 0.0 {
            p.y += j.dy * gaussian_at(self.seed, &[STREAM_JITTER, t, 1]);
        }
        if j.dtheta != 0.0 {
            p.alpha += j.dtheta * gaussian_at(self.seed, &[STREAM_JITTER, t, 2]);
        }
        p
    }

    /// Standard deviation of the ground-truth Y over whole path cycles,
    /// including jitter; `None` for keyframed paths.
    pub fn analytic_y_std(&self) -> Option<f64> {
        match &self.horizon {
            HorizonPath::Sinusoidal { y, .. } => Some(math::sqrt(y.std() * y.std() + self.jitter.dy * self.jitter.dy)),
            HorizonPath::Keyframes { .. } => None,
        }
    }

    pub fn analytic_alpha_std(&self) -> Option<f64> {
        match &self.horizon {
            HorizonPath::Sinusoidal { alpha, .. } => Some(math::sqrt(alpha.std() * alpha.std() + self.jitter.dtheta * self.jitter.dtheta)),
            HorizonPath::Keyframes { .. } => None,
        }
    }

    fn shore_height(&self, s: &Shoreline, u: f64) -> f64 {
        let cell = math::floor(u / s.segment) as i64;
        s.max_height * uniform_at(self.seed, &[STREAM_SHORE, cell as u64])
    }

    /// Renders frame `t` (which may exceed `frames`; the path extrapolates).
    pub fn render_frame(&self, t: u64) -> Result<RenderedFrame, SynthError> {
        let (w, h) = (self.width, self.height);
        let pose = self.pose(t);
        if !(0.0..=h as f64).contains(&pose.y) {
            return Err(SynthError::SpecOutOfBounds { frame: t, y: pose.y });
        }
        let line = HorizonLine::new(pose.y, pose.alpha);
        let xc = (w as f64 - 1.0) / 2.0;
        let (s, c) = (math::sin(math::to_radians(pose.alpha)), math::cos(math::to_radians(pose.alpha)));
        let y_ref = self.horizon.reference_y();
        let tf = t as f64;

        // world -> reference screen for pixel (x, y)
        let to_ref = |x: usize, y: usize| {
            let (rx, ry) = (x as f64 - xc, y as f64 - pose.y);
            let u = rx * c - ry * s - pose.yaw;
            let v = rx * s + ry * c;
            (u, v, xc + u, y_ref + v)
        };
        let from_ref = |xr: f64, yr: f64| {
            let (u, v) = (xr - xc + pose.yaw, yr - y_ref);
            (xc + u * c + v * s, pose.y - u * s + v * c)
        };

        let waves: Vec<(f64, f64, f64, f64, f64)> = self
            .waves
            .iter()
            .map(|wv| {
                let k = 2.0 * core::f64::consts::PI / wv.wavelength;
                let d = math::to_radians(wv.direction);
                let omega = if wv.period > 0.0 { 2.0 * core::f64::consts::PI / wv.period } else { 0.0 };
                (wv.amplitude, k * math::cos(d), k * math::sin(d), omega * tf, 0.0)
            })
            .collect();

        let mut data = Vec::with_capacity(w * h * 3);
        let mut object_mask = ForegroundMask::new(w, h);
        let mut owner: Vec<u16> = Vec::new();

        // object footprints: per object, screen-space scan window
        let live: Vec<(usize, (f64, f64))> =
            self.objects.iter().enumerate().filter(|(_, o)| o.visible_at(t)).map(|(i, o)| (i, o.position_at(t))).collect();
        if !live.is_empty() {
            owner = alloc::vec![u16::MAX; w * h];
            for &(i, (ox, oy)) in &live {
                let o = &self.objects[i];
                let corners = [from_ref(ox, oy), from_ref(ox + o.width, oy), from_ref(ox, oy + o.height), from_ref(ox + o.width, oy + o.height)];
                let x0 = corners.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
                let x1 = corners.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
                let y0 = corners.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
                let y1 = corners.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
                let clamp = |v: f64, n: usize| (math::floor(v).max(0.0) as usize).min(n);
                let (sx0, sx1) = (clamp(x0 - 1.0, w), clamp(x1 + 2.0, w));
                let (sy0, sy1) = (clamp(y0 - 1.0, h), clamp(y1 + 2.0, h));
                for y in sy0..sy1 {
                    for x in sx0..sx1 {
                        let (_, _, xr, yr) = to_ref(x, y);
                        if xr >= ox && xr < ox + o.width && yr >= oy && yr < oy + o.height {
                            owner[y * w + x] = i as u16;
                        }
                    }
                }
            }
        }

        let mut boxes: Vec<Option<(usize, usize, usize, usize)>> = alloc::vec![None; self.objects.len()];
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let (u, v, _, _) = to_ref(x, y);
                let obj = owner.get(i).copied().filter(|&o| o != u16::MAX);
                let mut rgb = if let Some(o) = obj {
                    let b = boxes[o as usize].get_or_insert((x, y, x, y));
                    *b = (b.0.min(x), b.1.min(y), b.2.max(x), b.3.max(y));
                    object_mask.data[i] = true;
                    let col = self.objects[o as usize].color;
                    [col[0] as f64, col[1] as f64, col[2] as f64]
                } else if y < line.boundary_row(x, w, h) {
                    match &self.shoreline {
                        Some(sh) if -v <= self.shore_height(sh, u) => [sh.color[0] as f64, sh.color[1] as f64, sh.color[2] as f64],
                        _ => [self.sky[0] as f64, self.sky[1] as f64, self.sky[2] as f64],
                    }
                } else {
                    let mut d = 0.0;
                    for &(a, kx, ky, phase, _) in &waves {
                        d += a * math::sin(kx * u + ky * v - phase);
                    }
                    [self.sea[0] as f64 + d, self.sea[1] as f64 + d, self.sea[2] as f64 + d]
                };
                if self.noise_sigma > 0.0 {
                    let n = self.noise_sigma * gaussian_at(self.seed, &[STREAM_NOISE, t, i as u64]);
                    for ch in rgb.iter_mut() {
                        *ch += n;
                    }
                }
                data.extend(rgb.iter().map(|&v| math::to_u8(v)));
            }
        }

        let objects = boxes
            .iter()
            .enumerate()
            .filter_map(|(i, b)| {
                b.map(|(x0, y0, x1, y1)| ObjectRecord {
                    frame_index: t,
                    object_id: i as u64,
                    bbox: BoundingBox::new(x0 as i64, y0 as i64, (x1 - x0 + 1) as u32, (y1 - y0 + 1) as u32),
                    motion: self.objects[i].motion,
                })
            })
            .collect();

        let frame = Frame::new(w, h, crate::imgcore::Channels::Rgb, data)?.with_index(t);
        Ok(RenderedFrame { frame, pose, horizon: HorizonRecord { frame_index: t, y: pose.y, alpha: pose.alpha }, objects, object_mask })
    }

    /// Renders every frame in order.
    pub fn render(&self) -> Result<Vec<RenderedFrame>, SynthError> {
        self.validate()?;
        (0..self.frames).map(|t| self.render_frame(t)).collect()
    }
}

pub const PRESETS: [&str; 3] = ["calm-onshore", "buoy-motion", "hazy"];

/// Named scene presets at 320×240, 300 frames.
pub fn preset(name: &str, seed: u64) -> Option<SceneSpec> {
    match name {
        "calm-onshore" => Some(calm_onshore(seed)),
        "buoy-motion" => Some(buoy_motion(seed)),
        "hazy" => Some(hazy(seed)),
        _ => None,
    }
}

fn default_waves(amplitude: f64) -> Vec<Wave> {
    alloc::vec![
        Wave { amplitude, wavelength: 37.0, period: 23.0, direction: 10.0 },
        Wave { amplitude: amplitude * 0.6, wavelength: 13.0, period: 11.0, direction: 75.0 },
    ]
}

/// Fixed camera on shore: near-static horizon, clean image, two objects.
pub fn calm_onshore(seed: u64) -> SceneSpec {
    SceneSpec {
        width: 320,
        height: 240,
        frames: 300,
        seed,
        horizon: HorizonPath::Sinusoidal {
            y: Sinusoid { mean: 100.0, amplitude: 1.5, period: 150.0, phase: 0.0 },
            alpha: Sinusoid { mean: 0.3, amplitude: 0.05, period: 100.0, phase: 0.0 },
            yaw: Sinusoid::default(),
        },
        jitter: Jitter::default(),
        sky: [176, 196, 222],
        sea: [32, 64, 96],
        waves: default_waves(3.0),
        noise_sigma: 0.0,
        shoreline: None,
        objects: alloc::vec![
            ObjectSpec {
                width: 18.0,
                height: 8.0,
                color: [230, 230, 225],
                position: (60.0, 140.0),
                velocity: (0.0, 0.0),
                bounce: None,
                // after the default warm-up, so it is not learned as background
                appear: 60,
                disappear: None,
                motion: MotionLabel::Static,
            },
            ObjectSpec {
                width: 24.0,
                height: 10.0,
                color: [200, 40, 30],
                position: (20.0, 180.0),
                velocity: (1.5, 0.0),
                bounce: Some([0.0, 0.0, 320.0, 240.0]),
                appear: 0,
                disappear: None,
                motion: MotionLabel::Dynamic,
            },
        ],
    }
}

/// Camera on a buoy: large pitch and roll swings, yaw drift, shake, sensor
/// noise and a shoreline band.
pub fn buoy_motion(seed: u64) -> SceneSpec {
    SceneSpec {
        width: 320,
        height: 240,
        frames: 300,
        seed,
        horizon: HorizonPath::Sinusoidal {
            y: Sinusoid { mean: 120.0, amplitude: 34.0, period: 60.0, phase: 0.0 },
            alpha: Sinusoid { mean: 0.0, amplitude: 6.0, period: 43.0, phase: 1.0 },
            yaw: Sinusoid { mean: 0.0, amplitude: 20.0, period: 97.0, phase: 0.5 },
        },
        jitter: Jitter { dx: 1.0, dy: 1.0, dtheta: 0.2 },
        sky: [170, 190, 215],
        sea: [30, 60, 90],
        waves: default_waves(10.0),
        noise_sigma: 3.0,
        shoreline: Some(Shoreline { color: [150, 145, 130], max_height: 8.0, segment: 9.0 }),
        objects: alloc::vec![
            ObjectSpec {
                width: 20.0,
                height: 9.0,
                color: [235, 235, 230],
                position: (200.0, 150.0),
                velocity: (0.0, 0.0),
                bounce: None,
                // after the default warm-up, so it is not learned as background
                appear: 60,
                disappear: None,
                motion: MotionLabel::Static,
            },
            ObjectSpec {
                width: 26.0,
                height: 11.0,
                color: [210, 50, 40],
                position: (40.0, 175.0),
                velocity: (2.0, 0.0),
                bounce: Some([0.0, 0.0, 320.0, 240.0]),
                appear: 0,
                disappear: None,
                motion: MotionLabel::Dynamic,
            },
        ],
    }
}

/// Haze: sea and sky means a few intensity levels apart.
pub fn hazy(seed: u64) -> SceneSpec {
    SceneSpec {
        width: 320,
        height: 240,
        frames: 300,
        seed,
        horizon: HorizonPath::Sinusoidal {
            y: Sinusoid { mean: 110.0, amplitude: 4.0, period: 120.0, phase: 0.0 },
            alpha: Sinusoid { mean: 0.0, amplitude: 0.5, period: 90.0, phase: 0.0 },
            yaw: Sinusoid::default(),
        },
        jitter: Jitter::default(),
        sky: [150, 152, 155],
        sea: [143, 146, 150],
        waves: default_waves(2.0),
        noise_sigma: 4.0,
        shoreline: None,
        objects: Vec::new(),
    }
}
