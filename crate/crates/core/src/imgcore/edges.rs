use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::gradient::{sobel_gradient, GradientField};
use super::{Channels, Frame, ImageError};

/// Length class of a linked edge chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum LengthClass {
    Short,
    Medium,
    Long,
}

/// An 8-connected chain of edge pixels. `len()` is the pixel count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeSegment {
    pub pixels: Vec<(u32, u32)>,
    pub class: LengthClass,
}

impl EdgeSegment {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeMap {
    pub width: usize,
    pub height: usize,
    pub mask: Vec<bool>,
    pub segments: Vec<EdgeSegment>,
}

impl EdgeMap {
    /// An edge map from a raw mask, with no linked segments.
    pub fn from_mask(width: usize, height: usize, mask: Vec<bool>) -> Self {
        assert_eq!(mask.len(), width * height);
        EdgeMap { width, height, mask, segments: Vec::new() }
    }

    #[inline]
    pub fn is_edge(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    pub fn edge_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Edge pixel coordinates in raster order.
    pub fn edge_pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(move |(i, _)| (i % w, i / w))
    }
}

/// Hysteresis thresholds on Sobel magnitude plus the chain length classes.
///
/// `long_len` and `medium_len` default to `max(W,H)/3` and `max(W,H)/10`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct EdgeParams {
    pub high_thresh: f64,
    pub low_thresh: f64,
    pub long_len: Option<usize>,
    pub medium_len: Option<usize>,
}

impl Default for EdgeParams {
    fn default() -> Self {
        EdgeParams { high_thresh: 120.0, low_thresh: 50.0, long_len: None, medium_len: None }
    }
}

impl EdgeParams {
    pub fn length_thresholds(&self, width: usize, height: usize) -> (usize, usize) {
        let side = width.max(height);
        (self.long_len.unwrap_or(side / 3), self.medium_len.unwrap_or(side / 10))
    }
}

const NEIGHBORS8: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// Sobel, non-maximum thinning, hysteresis, then 8-connected chain linking.
pub fn edge_map(frame: &Frame, params: &EdgeParams) -> Result<EdgeMap, ImageError> {
    let (t_long, t_med) = params.length_thresholds(frame.width(), frame.height());
    if !(params.low_thresh >= 0.0 && params.low_thresh <= params.high_thresh) || t_med >= t_long {
        return Err(ImageError::InvalidThresholds);
    }
    if frame.channels() != Channels::Gray {
        return Err(ImageError::ChannelMismatch { expected: Channels::Gray, actual: frame.channels() });
    }
    let grad = sobel_gradient(frame)?;
    let thin = non_maximum(&grad);
    let mask = hysteresis(&grad, &thin, params.high_thresh, params.low_thresh);
    let segments = link_segments(grad.width, grad.height, &mask, t_long, t_med);
    Ok(EdgeMap { width: grad.width, height: grad.height, mask, segments })
}

// Neighbor offset along the gradient, quantized to 4 directions. The offset
// always points down or right so the tie rule below is orientation-stable.
fn gradient_step(gx: i32, gy: i32) -> (isize, isize) {
    // tan(22.5°) and tan(67.5°) as exact integer ratios would need sqrt(2);
    // 0.41421356 and 2.41421356 are enough at 8-bit gradient magnitudes.
    let (ax, ay) = (gx.unsigned_abs() as f64, gy.unsigned_abs() as f64);
    if ay <= 0.414_213_56 * ax {
        (1, 0)
    } else if ay >= 2.414_213_56 * ax {
        (0, 1)
    } else if (gx > 0) == (gy > 0) {
        (1, 1)
    } else {
        (-1, 1)
    }
}

fn non_maximum(grad: &GradientField) -> Vec<bool> {
    let (w, h) = (grad.width as isize, grad.height as isize);
    let mag = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w || y >= h {
            0.0
        } else {
            grad.magnitude[(y * w + x) as usize]
        }
    };
    let mut keep = vec![false; grad.magnitude.len()];
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            let m = grad.magnitude[i];
            if m <= 0.0 {
                continue;
            }
            let (dx, dy) = gradient_step(grad.gx[i], grad.gy[i]);
            // A plateau two pixels wide keeps its forward pixel: for a step
            // between rows r-1 and r this selects row r.
            keep[i] = m >= mag(x - dx, y - dy) && m > mag(x + dx, y + dy);
        }
    }
    keep
}

fn hysteresis(grad: &GradientField, thin: &[bool], high: f64, low: f64) -> Vec<bool> {
    let (w, h) = (grad.width, grad.height);
    let mut out = vec![false; w * h];
    let mut queue = VecDeque::new();
    for i in 0..w * h {
        if thin[i] && grad.magnitude[i] >= high {
            out[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for (dx, dy) in NEIGHBORS8 {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                continue;
            }
            let j = ny as usize * w + nx as usize;
            if !out[j] && thin[j] && grad.magnitude[j] >= low {
                out[j] = true;
                queue.push_back(j);
            }
        }
    }
    out
}

fn link_segments(w: usize, h: usize, mask: &[bool], t_long: usize, t_med: usize) -> Vec<EdgeSegment> {
    let mut seen = vec![false; w * h];
    let mut segments = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            pixels.push((x as u32, y as u32));
            for (dx, dy) in NEIGHBORS8 {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        let class = if pixels.len() >= t_long {
            LengthClass::Long
        } else if pixels.len() >= t_med {
            LengthClass::Medium
        } else {
            LengthClass::Short
        };
        segments.push(EdgeSegment { pixels, class });
    }
    segments
}
