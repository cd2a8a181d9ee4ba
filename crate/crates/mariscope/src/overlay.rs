//! Annotated frames: horizon line, detection boxes and mask tint.

use mariscope_core::{BoundingBox, ForegroundMask, Frame, HorizonLine, MotionLabel};

use crate::error::{Error, Result};

pub const HORIZON_COLOR: [u8; 3] = [255, 255, 0];
pub const TINT_COLOR: [u8; 3] = [255, 0, 255];

pub fn box_color(label: MotionLabel) -> [u8; 3] {
    match label {
        MotionLabel::Static => [0, 255, 255],
        MotionLabel::Dynamic => [255, 0, 0],
        MotionLabel::Undetermined => [255, 255, 255],
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Overlay<'a> {
    pub horizon: Option<HorizonLine>,
    pub boxes: &'a [(BoundingBox, MotionLabel)],
    pub mask: Option<&'a ForegroundMask>,
}

/// Draws onto an RGB copy of `frame`. Foreground pixels are blended half
/// way towards [`TINT_COLOR`], then the horizon (one pixel per column at the
/// rounded line row) and box outlines are drawn on top.
pub fn emit_overlay(frame: &Frame, overlay: &Overlay) -> Result<Frame> {
    let (w, h) = (frame.width(), frame.height());
    let mut out = frame.to_rgb();
    if let Some(mask) = overlay.mask {
        if mask.width != w || mask.height != h {
            return Err(Error::InvalidInput(format!("overlay mask is {}x{}, frame is {w}x{h}", mask.width, mask.height)));
        }
        for (i, &fg) in mask.data.iter().enumerate() {
            if fg {
                let px = &mut out.data_mut()[i * 3..i * 3 + 3];
                for (c, t) in px.iter_mut().zip(TINT_COLOR) {
                    *c = (*c as u16 + t as u16).div_ceil(2) as u8;
                }
            }
        }
    }
    let mut put = |x: i64, y: i64, rgb: [u8; 3]| {
        if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
            for (c, v) in rgb.iter().enumerate() {
                out.set_sample(x as usize, y as usize, c, *v);
            }
        }
    };
    if let Some(line) = overlay.horizon {
        for x in 0..w {
            let y = line.y_at(x as f64, w).round();
            if y.is_finite() {
                put(x as i64, y as i64, HORIZON_COLOR);
            }
        }
    }
    for &(b, label) in overlay.boxes {
        let color = box_color(label);
        let (x1, y1) = (b.x + b.w as i64 - 1, b.y + b.h as i64 - 1);
        for x in b.x..=x1 {
            put(x, b.y, color);
            put(x, y1, color);
        }
        for y in b.y..=y1 {
            put(b.x, y, color);
            put(x1, y, color);
        }
    }
    Ok(out)
}
