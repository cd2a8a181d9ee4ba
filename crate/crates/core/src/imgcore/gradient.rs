use alloc::vec::Vec;

use super::{Channels, Frame, ImageError};
use crate::math;

/// Per-pixel Sobel response.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<i32>,
    pub gy: Vec<i32>,
    /// `sqrt(gx² + gy²)`
    pub magnitude: Vec<f64>,
    /// `atan2(gy, gx)` in radians.
    pub orientation: Vec<f64>,
}

impl GradientField {
    #[inline]
    pub fn magnitude_at(&self, x: usize, y: usize) -> f64 {
        self.magnitude[y * self.width + x]
    }
}

/// 3x3 Sobel with replicated borders on a grayscale frame.
pub fn sobel_gradient(frame: &Frame) -> Result<GradientField, ImageError> {
    if frame.channels() != Channels::Gray {
        return Err(ImageError::ChannelMismatch { expected: Channels::Gray, actual: frame.channels() });
    }
    let (w, h) = (frame.width(), frame.height());
    let d = frame.data();
    let n = w * h;
    let mut gx = Vec::with_capacity(n);
    let mut gy = Vec::with_capacity(n);
    let mut magnitude = Vec::with_capacity(n);
    let mut orientation = Vec::with_capacity(n);
    for y in 0..h {
        let ym = y.saturating_sub(1);
        let yp = (y + 1).min(h - 1);
        let (rm, r0, rp) = (&d[ym * w..ym * w + w], &d[y * w..y * w + w], &d[yp * w..yp * w + w]);
        for x in 0..w {
            let xm = x.saturating_sub(1);
            let xp = (x + 1).min(w - 1);
            let p = |row: &[u8], i: usize| row[i] as i32;
            let sx = (p(rm, xp) - p(rm, xm)) + 2 * (p(r0, xp) - p(r0, xm)) + (p(rp, xp) - p(rp, xm));
            let sy = (p(rp, xm) - p(rm, xm)) + 2 * (p(rp, x) - p(rm, x)) + (p(rp, xp) - p(rm, xp));
            gx.push(sx);
            gy.push(sy);
            magnitude.push(math::sqrt((sx * sx + sy * sy) as f64));
            orientation.push(math::atan2(sy as f64, sx as f64));
        }
    }
    Ok(GradientField { width: w, height: h, gx, gy, magnitude, orientation })
}
