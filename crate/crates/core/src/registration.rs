//! Frame-to-frame alignment.
//!
//! A [`FrameTransform`] maps pixel coordinates of a frame `b` into the
//! coordinates of a reference frame `a`:
//!
//! ```text
//! T(p) = s · R(θ) · (p − c) + c + t
//! ```
//!
//! where `c` is the pivot, `t` the translation, `s` the scale and `R(θ)` a
//! rotation that is counter-clockwise on screen for positive `θ` (image y
//! grows downward, so `R(θ) = [[cos θ, sin θ], [−sin θ, cos θ]]`). This is
//! the same sense as the horizon angle `α`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::horizon::HorizonEstimate;
use crate::imgcore::{Frame, ImageError};
use crate::math;

#[derive(Clone, Debug, PartialEq)]
pub enum RegistrationError {
    SizeMismatch,
    StripOutOfBounds,
    FlatStrip,
    DegenerateConfiguration,
    InvalidParams(&'static str),
}

impl fmt::Display for RegistrationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegistrationError::SizeMismatch => f.write_str("frames differ in size or channels"),
            RegistrationError::StripOutOfBounds => f.write_str("correlation strip leaves the frame"),
            RegistrationError::FlatStrip => f.write_str("correlation strip has zero variance"),
            RegistrationError::DegenerateConfiguration => f.write_str("landmarks do not determine a similarity transform"),
            RegistrationError::InvalidParams(what) => write!(f, "invalid parameter: {what}"),
        }
    }
}

impl core::error::Error for RegistrationError {}

impl From<ImageError> for RegistrationError {
    fn from(_: ImageError) -> Self {
        RegistrationError::SizeMismatch
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FrameTransform {
    /// Degrees, counter-clockwise on screen.
    pub rotation: f64,
    pub translation: (f64, f64),
    pub scale: f64,
    /// Pivot of rotation and scale.
    pub center: (f64, f64),
}

impl Default for FrameTransform {
    fn default() -> Self {
        FrameTransform::identity()
    }
}

impl FrameTransform {
    pub const fn identity() -> Self {
        FrameTransform { rotation: 0.0, translation: (0.0, 0.0), scale: 1.0, center: (0.0, 0.0) }
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        FrameTransform { translation: (dx, dy), ..FrameTransform::identity() }
    }

    pub fn is_identity(&self) -> bool {
        self.rotation == 0.0 && self.scale == 1.0 && self.translation == (0.0, 0.0)
    }

    fn cos_sin(&self) -> (f64, f64) {
        if self.rotation == 0.0 {
            (1.0, 0.0)
        } else {
            let r = math::to_radians(self.rotation);
            (math::cos(r), math::sin(r))
        }
    }

    /// Origin-pivot form `[a, b, tx, c, d, ty]` with `x' = a x + b y + tx`, `y' = c x + d y + ty`.
    pub fn to_affine(&self) -> [f64; 6] {
        let (c, s) = self.cos_sin();
        let (a, b, cc, d) = (self.scale * c, self.scale * s, -self.scale * s, self.scale * c);
        let (px, py) = self.center;
        let tx = px + self.translation.0 - (a * px + b * py);
        let ty = py + self.translation.1 - (cc * px + d * py);
        [a, b, tx, cc, d, ty]
    }

    pub fn apply(&self, p: (f64, f64)) -> (f64, f64) {
        let (c, s) = self.cos_sin();
        let (rx, ry) = (p.0 - self.center.0, p.1 - self.center.1);
        (
            self.scale * (c * rx + s * ry) + self.center.0 + self.translation.0,
            self.scale * (-s * rx + c * ry) + self.center.1 + self.translation.1,
        )
    }

    pub fn inverse(&self) -> FrameTransform {
        FrameTransform {
            rotation: -self.rotation,
            translation: (-self.translation.0, -self.translation.1),
            scale: 1.0 / self.scale,
            center: (self.center.0 + self.translation.0, self.center.1 + self.translation.1),
        }
    }

    /// `self ∘ inner`: applies `inner` first. The result pivots on the origin.
    pub fn compose(&self, inner: &FrameTransform) -> FrameTransform {
        let [a, b, tx1, c, d, ty1] = self.to_affine();
        let [_, _, tx2, _, _, ty2] = inner.to_affine();
        FrameTransform {
            rotation: normalize_degrees(self.rotation + inner.rotation),
            translation: (a * tx2 + b * ty2 + tx1, c * tx2 + d * ty2 + ty1),
            scale: self.scale * inner.scale,
            center: (0.0, 0.0),
        }
    }
}

fn normalize_degrees(mut d: f64) -> f64 {
    while d > 180.0 {
        d -= 360.0;
    }
    while d <= -180.0 {
        d += 360.0;
    }
    d
}

/// Roll and pitch correction mapping frame `b` onto frame `a`.
///
/// Rotates `b` by `α_a − α_b` about its horizon center `((W-1)/2, Y_b)`, then
/// shifts it vertically by `Y_a − Y_b`; `b`'s horizon lands on `a`'s.
/// Yaw is unobservable from the horizon, so there is no horizontal shift.
pub fn align_by_horizon(a: &HorizonEstimate, b: &HorizonEstimate, width: usize) -> FrameTransform {
    let xc = (width as f64 - 1.0) / 2.0;
    FrameTransform { rotation: a.alpha - b.alpha, translation: (0.0, a.y - b.y), scale: 1.0, center: (xc, b.y) }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StripMatch {
    /// `b(x + shift) ≈ a(x)`: content of `b` sits `shift` pixels right of `a`.
    pub shift: i32,
    /// Normalized cross-correlation at `shift`, in `[-1, 1]`.
    pub peak: f64,
}

/// Default strip height: `max(20, 5% of the frame height)`.
pub fn default_strip_height(height: usize) -> usize {
    20.max(height / 20)
}

/// Default search radius: a quarter of the width.
pub fn default_max_shift(width: usize) -> usize {
    width / 4
}

/// Horizontal shift maximizing zero-mean normalized cross-correlation of a
/// strip of rows centered on (and parallel to) the horizon.
///
/// For each candidate shift only the overlapping columns are compared, and
/// each row is centered on its own mean: the sea/sky step along the horizon
/// correlates equally at every horizontal shift and would otherwise swamp
/// the horizontal structure that actually carries the shift. A strip with
/// no horizontal variation is therefore [`RegistrationError::FlatStrip`].
/// The `strip_height / 10` rows on either side of the horizon itself are
/// skipped. Ties go to the smaller `|shift|`, then to the negative shift.
pub fn strip_cross_correlation(
    a: &Frame,
    b: &Frame,
    horizon: &HorizonEstimate,
    strip_height: usize,
    max_shift: usize,
) -> Result<StripMatch, RegistrationError> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(RegistrationError::SizeMismatch);
    }
    let (w, h) = (a.width(), a.height());
    if strip_height == 0 {
        return Err(RegistrationError::InvalidParams("strip_height must be positive"));
    }
    if 2 * max_shift >= w {
        return Err(RegistrationError::InvalidParams("max_shift must be below width/2"));
    }
    // Strip row r of column x is pixel row `boundary(x) − strip_height/2 + r`,
    // so the strip follows a tilted horizon and each row stays on one side.
    let line = horizon.line();
    let half = (strip_height / 2) as f64;
    let mut tops = Vec::with_capacity(w);
    for x in 0..w {
        let top = math::ceil(line.y_at(x as f64, w) - 1e-9) - half;
        if !(top >= 0.0 && top + strip_height as f64 <= h as f64) {
            return Err(RegistrationError::StripOutOfBounds);
        }
        tops.push(top as usize);
    }
    // The rows nearest the boundary carry the sea/sky step whenever the
    // estimate is off by a fraction of a pixel; leave them out.
    let guard = strip_height / 10;
    let rows: Vec<usize> = (0..strip_height).filter(|&r| r + guard < strip_height / 2 || r >= strip_height / 2 + guard).collect();
    let (ga, gb) = (a.to_gray(), b.to_gray());
    let strip = |f: &Frame| -> Vec<f64> {
        let d = f.data();
        rows.iter().flat_map(|&r| tops.iter().enumerate().map(move |(x, &t)| d[(t + r) * w + x] as f64)).collect()
    };
    let (sa, sb) = (strip(&ga), strip(&gb));
    if is_flat(&sa) || is_flat(&sb) {
        return Err(RegistrationError::FlatStrip);
    }

    let m = max_shift as i32;
    let mut best: Option<StripMatch> = None;
    for k in 0..=(2 * m) {
        // 0, -1, +1, -2, +2, ...
        let shift = if k % 2 == 0 { k / 2 } else { -(k + 1) / 2 };
        if let Some(r) = ncc_at(&sa, &sb, w, rows.len(), shift) {
            if best.is_none_or(|b| r > b.peak) {
                best = Some(StripMatch { shift, peak: r });
            }
        }
    }
    best.ok_or(RegistrationError::FlatStrip)
}

fn is_flat(s: &[f64]) -> bool {
    s.iter().all(|&v| v == s[0])
}

fn ncc_at(sa: &[f64], sb: &[f64], w: usize, rows: usize, shift: i32) -> Option<f64> {
    let x0 = (-shift).max(0) as usize;
    let x1 = (w as i32 - shift.max(0)) as usize;
    let n = (x1 - x0) as f64;
    let (mut num, mut va, mut vb) = (0.0, 0.0, 0.0);
    for r in 0..rows {
        let ra = &sa[r * w + x0..r * w + x1];
        let rb = &sb[((r * w + x0) as i64 + shift as i64) as usize..][..x1 - x0];
        let ma = ra.iter().sum::<f64>() / n;
        let mb = rb.iter().sum::<f64>() / n;
        for (&a, &b) in ra.iter().zip(rb) {
            let (da, db) = (a - ma, b - mb);
            num += da * db;
            va += da * da;
            vb += db * db;
        }
    }
    if va <= 0.0 || vb <= 0.0 {
        return None;
    }
    Some(num / math::sqrt(va * vb))
}

/// A point pair `(p_a, p_b)`: the same world point seen in frames `a` and `b`.
pub type LandmarkPair = ((f64, f64), (f64, f64));

/// Least-squares similarity transform `T` minimizing `Σ ‖T(p_b) − p_a‖²`
/// (closed-form 2-D Umeyama fit). The result pivots on the origin.
pub fn landmark_transform(pairs: &[LandmarkPair]) -> Result<FrameTransform, RegistrationError> {
    if pairs.len() < 2 {
        return Err(RegistrationError::DegenerateConfiguration);
    }
    let n = pairs.len() as f64;
    let (mut max, mut may, mut mbx, mut mby) = (0.0, 0.0, 0.0, 0.0);
    for &((ax, ay), (bx, by)) in pairs {
        max += ax;
        may += ay;
        mbx += bx;
        mby += by;
    }
    let (max, may, mbx, mby) = (max / n, may / n, mbx / n, mby / n);
    let (mut dot, mut cross, mut var_b, mut var_a) = (0.0, 0.0, 0.0, 0.0);
    for &((ax, ay), (bx, by)) in pairs {
        let (ax, ay, bx, by) = (ax - max, ay - may, bx - mbx, by - mby);
        dot += ax * bx + ay * by;
        cross += ax * by - ay * bx;
        var_b += bx * bx + by * by;
        var_a += ax * ax + ay * ay;
    }
    if var_b <= 1e-9 || var_a <= 1e-9 {
        return Err(RegistrationError::DegenerateConfiguration);
    }
    let theta = math::atan2(cross, dot);
    let scale = math::sqrt(dot * dot + cross * cross) / var_b;
    if !(scale > 1e-12) {
        return Err(RegistrationError::DegenerateConfiguration);
    }
    let (c, s) = (math::cos(theta), math::sin(theta));
    let tx = max - scale * (c * mbx + s * mby);
    let ty = may - scale * (-s * mbx + c * mby);
    Ok(FrameTransform { rotation: math::to_degrees(theta), translation: (tx, ty), scale, center: (0.0, 0.0) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Interpolation {
    Nearest,
    #[default]
    Bilinear,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Warped {
    pub frame: Frame,
    /// `true` where the output pixel had a source inside the input frame.
    pub valid: Vec<bool>,
}

/// Resamples `frame` so that output pixel `q` takes the input value at
/// `T⁻¹(q)`. Pixels whose source falls outside the frame are 0 and invalid.
pub fn warp(frame: &Frame, t: &FrameTransform, interpolation: Interpolation) -> Warped {
    let (w, h) = (frame.width(), frame.height());
    let nch = frame.channels().count();
    if t.is_identity() {
        return Warped { frame: frame.clone(), valid: vec![true; w * h] };
    }
    let [a, b, tx, c, d, ty] = t.inverse().to_affine();
    let mut out = vec![0u8; w * h * nch];
    let mut valid = vec![false; w * h];
    let src = frame.data();
    let (wf, hf) = ((w - 1) as f64, (h - 1) as f64);
    const EPS: f64 = 1e-9;
    for y in 0..h {
        for x in 0..w {
            let (xf, yf) = (x as f64, y as f64);
            let sx = a * xf + b * yf + tx;
            let sy = c * xf + d * yf + ty;
            let o = (y * w + x) * nch;
            match interpolation {
                Interpolation::Nearest => {
                    let (rx, ry) = (math::round(sx), math::round(sy));
                    if rx < 0.0 || ry < 0.0 || rx > wf || ry > hf {
                        continue;
                    }
                    let i = (ry as usize * w + rx as usize) * nch;
                    out[o..o + nch].copy_from_slice(&src[i..i + nch]);
                }
                Interpolation::Bilinear => {
                    if sx < -EPS || sy < -EPS || sx > wf + EPS || sy > hf + EPS {
                        continue;
                    }
                    let (sx, sy) = (sx.clamp(0.0, wf), sy.clamp(0.0, hf));
                    let (x0, y0) = (math::floor(sx) as usize, math::floor(sy) as usize);
                    let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
                    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
                    for ch in 0..nch {
                        let p = |xx: usize, yy: usize| src[(yy * w + xx) * nch + ch] as f64;
                        let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
                        let bot = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
                        out[o + ch] = math::to_u8(top * (1.0 - fy) + bot * fy);
                    }
                }
            }
            valid[y * w + x] = true;
        }
    }
    let frame = Frame::new(w, h, frame.channels(), out).expect("same shape").with_index(frame.index);
    Warped { frame, valid }
}

/// Per-pixel absolute difference.
pub fn difference_image(a: &Frame, b: &Frame) -> Result<Frame, RegistrationError> {
    if !a.same_shape(b) {
        return Err(RegistrationError::SizeMismatch);
    }
    let data = a.data().iter().zip(b.data()).map(|(&p, &q)| p.abs_diff(q)).collect();
    Ok(Frame::new(a.width(), a.height(), a.channels(), data)?.with_index(b.index))
}

/// Mean absolute difference over pixels valid in `mask` (all when `None`).
pub fn mean_abs_difference(a: &Frame, b: &Frame, mask: Option<&[bool]>) -> Result<f64, RegistrationError> {
    if !a.same_shape(b) {
        return Err(RegistrationError::SizeMismatch);
    }
    let nch = a.channels().count();
    let (mut sum, mut n) = (0u64, 0u64);
    for (i, (pa, pb)) in a.data().chunks_exact(nch).zip(b.data().chunks_exact(nch)).enumerate() {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        for (p, q) in pa.iter().zip(pb) {
            sum += p.abs_diff(*q) as u64;
            n += 1;
        }
    }
    Ok(if n == 0 { 0.0 } else { sum as f64 / n as f64 })
}
