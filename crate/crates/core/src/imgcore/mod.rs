//! Frames and low-level pixel primitives.

mod distribution;
mod edges;
mod gradient;

pub use distribution::{region_distribution, ColorDistribution, RegionMask, DEFAULT_BINS};
pub use edges::{edge_map, EdgeMap, EdgeParams, EdgeSegment, LengthClass};
pub use gradient::{sobel_gradient, GradientField};

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ImageError {
    InvalidDimensions { width: usize, height: usize },
    DataLength { expected: usize, actual: usize },
    ChannelMismatch { expected: Channels, actual: Channels },
    SizeMismatch,
    InvalidThresholds,
    EmptyRegion,
    RegionOutOfBounds,
    BinMismatch,
    InvalidBins,
}

impl fmt::Display for ImageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImageError::InvalidDimensions { width, height } => {
                write!(f, "invalid frame dimensions {width}x{height} (minimum 2x2)")
            }
            ImageError::DataLength { expected, actual } => {
                write!(f, "pixel buffer has {actual} bytes, expected {expected}")
            }
            ImageError::ChannelMismatch { expected, actual } => {
                write!(f, "expected a {expected:?} frame, got {actual:?}")
            }
            ImageError::SizeMismatch => f.write_str("frame dimensions do not match"),
            ImageError::InvalidThresholds => f.write_str("invalid edge thresholds"),
            ImageError::EmptyRegion => f.write_str("region is empty"),
            ImageError::RegionOutOfBounds => f.write_str("region coordinate outside the frame"),
            ImageError::BinMismatch => f.write_str("distributions use different bin layouts"),
            ImageError::InvalidBins => f.write_str("bin count must be in 1..=256"),
        }
    }
}

impl core::error::Error for ImageError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Channels {
    Gray,
    Rgb,
}

impl Channels {
    #[inline]
    pub fn count(self) -> usize {
        match self {
            Channels::Gray => 1,
            Channels::Rgb => 3,
        }
    }
}

/// A decoded raster, row-major, interleaved channels, 8 bits per sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    channels: Channels,
    data: Vec<u8>,
    /// Ordinal within the sequence the frame came from.
    pub index: u64,
}

impl Frame {
    pub fn new(width: usize, height: usize, channels: Channels, data: Vec<u8>) -> Result<Self, ImageError> {
        if width < 2 || height < 2 {
            return Err(ImageError::InvalidDimensions { width, height });
        }
        let expected = width * height * channels.count();
        if data.len() != expected {
            return Err(ImageError::DataLength { expected, actual: data.len() });
        }
        Ok(Frame { width, height, channels, data, index: 0 })
    }

    pub fn filled(width: usize, height: usize, channels: Channels, value: u8) -> Result<Self, ImageError> {
        Frame::new(width, height, channels, vec![value; width * height * channels.count()])
    }

    /// Builds a grayscale frame from a per-pixel function.
    pub fn from_fn_gray(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self, ImageError> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Frame::new(width, height, Channels::Gray, data)
    }

    /// Builds an RGB frame from a per-pixel function.
    pub fn from_fn_rgb(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self, ImageError> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Frame::new(width, height, Channels::Rgb, data)
    }

    pub fn with_index(mut self, index: u64) -> Self {
        self.index = index;
        self
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> Channels {
        self.channels
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn sample(&self, x: usize, y: usize, c: usize) -> u8 {
        let n = self.channels.count();
        self.data[(y * self.width + x) * n + c]
    }

    #[inline]
    pub fn set_sample(&mut self, x: usize, y: usize, c: usize, v: u8) {
        let n = self.channels.count();
        self.data[(y * self.width + x) * n + c] = v;
    }

    /// All channels of one pixel.
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let n = self.channels.count();
        let i = (y * self.width + x) * n;
        &self.data[i..i + n]
    }

    pub fn same_shape(&self, other: &Frame) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Grayscale view: the frame itself when already gray, otherwise the luma conversion.
    pub fn to_gray(&self) -> Frame {
        match self.channels {
            Channels::Gray => self.clone(),
            Channels::Rgb => to_grayscale(self).expect("rgb frame"),
        }
    }

    /// Replicates a gray plane into three identical channels.
    pub fn to_rgb(&self) -> Frame {
        match self.channels {
            Channels::Rgb => self.clone(),
            Channels::Gray => {
                let mut data = Vec::with_capacity(self.data.len() * 3);
                for &v in &self.data {
                    data.extend_from_slice(&[v, v, v]);
                }
                Frame { width: self.width, height: self.height, channels: Channels::Rgb, data, index: self.index }
            }
        }
    }
}

/// ITU-R BT.601 luma: `round(0.299 R + 0.587 G + 0.114 B)`.
///
/// Evaluated in integer thousandths so rounding is exact.
#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    let s = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((s + 500) / 1000) as u8
}

pub fn to_grayscale(frame: &Frame) -> Result<Frame, ImageError> {
    if frame.channels != Channels::Rgb {
        return Err(ImageError::ChannelMismatch { expected: Channels::Rgb, actual: frame.channels });
    }
    let data = frame.data.chunks_exact(3).map(|p| luma(p[0], p[1], p[2])).collect();
    Ok(Frame { width: frame.width, height: frame.height, channels: Channels::Gray, data, index: frame.index })
}
