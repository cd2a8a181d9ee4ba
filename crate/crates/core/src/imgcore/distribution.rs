use alloc::vec;
use alloc::vec::Vec;

use super::{Frame, ImageError};

pub const DEFAULT_BINS: usize = 64;

/// A set of pixel coordinates over a `width x height` frame, stored as a mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionMask {
    pub width: usize,
    pub height: usize,
    bits: Vec<bool>,
    count: usize,
}

impl RegionMask {
    pub fn empty(width: usize, height: usize) -> Self {
        RegionMask { width, height, bits: vec![false; width * height], count: 0 }
    }

    pub fn full(width: usize, height: usize) -> Self {
        RegionMask { width, height, bits: vec![true; width * height], count: width * height }
    }

    pub fn from_coords(width: usize, height: usize, coords: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, ImageError> {
        let mut r = RegionMask::empty(width, height);
        for (x, y) in coords {
            if x >= width || y >= height {
                return Err(ImageError::RegionOutOfBounds);
            }
            r.insert(x, y);
        }
        Ok(r)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        let mut count = 0;
        for y in 0..height {
            for x in 0..width {
                let b = f(x, y);
                count += b as usize;
                bits.push(b);
            }
        }
        RegionMask { width, height, bits, count }
    }

    pub fn insert(&mut self, x: usize, y: usize) {
        let i = y * self.width + x;
        if !self.bits[i] {
            self.bits[i] = true;
            self.count += 1;
        }
    }

    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(move |(i, _)| (i % w, i / w))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct ChannelAccum {
    counts: Vec<u64>,
    sum: u64,
    sum_sq: u64,
}

/// Per-channel histogram and moments of a set of pixels.
///
/// Raw counts and integer sums are kept, so merging two distributions is
/// exact and the reported mean and (population) variance are exact up to
/// the final division.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorDistribution {
    bins: usize,
    pixel_count: u64,
    channels: Vec<ChannelAccum>,
}

impl ColorDistribution {
    pub fn new(channels: usize, bins: usize) -> Result<Self, ImageError> {
        if bins == 0 || bins > 256 {
            return Err(ImageError::InvalidBins);
        }
        let ch = ChannelAccum { counts: vec![0; bins], sum: 0, sum_sq: 0 };
        Ok(ColorDistribution { bins, pixel_count: 0, channels: vec![ch; channels] })
    }

    #[inline]
    pub fn bin_of(&self, v: u8) -> usize {
        v as usize * self.bins / 256
    }

    /// Adds one pixel; `samples` holds one value per channel.
    #[inline]
    pub fn add(&mut self, samples: &[u8]) {
        debug_assert_eq!(samples.len(), self.channels.len());
        let bins = self.bins;
        for (acc, &v) in self.channels.iter_mut().zip(samples) {
            acc.counts[v as usize * bins / 256] += 1;
            acc.sum += v as u64;
            acc.sum_sq += v as u64 * v as u64;
        }
        self.pixel_count += 1;
    }

    pub fn merge(&mut self, other: &ColorDistribution) -> Result<(), ImageError> {
        if self.bins != other.bins || self.channels.len() != other.channels.len() {
            return Err(ImageError::BinMismatch);
        }
        for (a, b) in self.channels.iter_mut().zip(&other.channels) {
            for (ca, cb) in a.counts.iter_mut().zip(&b.counts) {
                *ca += cb;
            }
            a.sum += b.sum;
            a.sum_sq += b.sum_sq;
        }
        self.pixel_count += other.pixel_count;
        Ok(())
    }

    #[inline]
    pub fn bins(&self) -> usize {
        self.bins
    }

    #[inline]
    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    #[inline]
    pub fn pixel_count(&self) -> u64 {
        self.pixel_count
    }

    pub fn same_layout(&self, other: &ColorDistribution) -> bool {
        self.bins == other.bins && self.channels.len() == other.channels.len()
    }

    pub fn counts(&self, channel: usize) -> &[u64] {
        &self.channels[channel].counts
    }

    /// Normalized histogram (sums to 1 when the distribution is non-empty).
    pub fn histogram(&self, channel: usize) -> Vec<f64> {
        let n = self.pixel_count.max(1) as f64;
        self.channels[channel].counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn mean(&self, channel: usize) -> f64 {
        if self.pixel_count == 0 {
            return 0.0;
        }
        self.channels[channel].sum as f64 / self.pixel_count as f64
    }

    /// Population variance, `(n·Σx² − (Σx)²) / n²` evaluated in integers.
    pub fn variance(&self, channel: usize) -> f64 {
        if self.pixel_count == 0 {
            return 0.0;
        }
        let n = self.pixel_count as u128;
        let c = &self.channels[channel];
        let num = n * c.sum_sq as u128 - (c.sum as u128) * (c.sum as u128);
        num as f64 / (n * n) as f64
    }
}

/// Histogram and moments over the pixels of `region`.
pub fn region_distribution(frame: &Frame, region: &RegionMask, bins: usize) -> Result<ColorDistribution, ImageError> {
    if region.width != frame.width() || region.height != frame.height() {
        return Err(ImageError::SizeMismatch);
    }
    if region.is_empty() {
        return Err(ImageError::EmptyRegion);
    }
    let mut dist = ColorDistribution::new(frame.channels().count(), bins)?;
    for (x, y) in region.iter() {
        dist.add(frame.pixel(x, y));
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::Channels;

    #[test]
    fn uniform_region_is_a_delta() {
        let f = Frame::filled(8, 8, Channels::Gray, 128).unwrap();
        let d = region_distribution(&f, &RegionMask::full(8, 8), DEFAULT_BINS).unwrap();
        let h = d.histogram(0);
        assert_eq!(h.iter().filter(|&&v| v > 0.0).count(), 1);
        assert_eq!(h[d.bin_of(128)], 1.0);
        assert_eq!(d.mean(0), 128.0);
        assert_eq!(d.variance(0), 0.0);
    }

    #[test]
    fn two_pixel_population_variance() {
        let f = Frame::from_fn_gray(2, 2, |x, y| if x == 0 && y == 0 { 0 } else { 255 }).unwrap();
        let r = RegionMask::from_coords(2, 2, [(0, 0), (1, 0)]).unwrap();
        let d = region_distribution(&f, &r, 64).unwrap();
        assert_eq!(d.mean(0), 127.5);
        assert_eq!(d.variance(0), 16256.25);
    }

    #[test]
    fn empty_region_is_rejected() {
        let f = Frame::filled(4, 4, Channels::Rgb, 1).unwrap();
        assert_eq!(region_distribution(&f, &RegionMask::empty(4, 4), 64), Err(ImageError::EmptyRegion));
        assert_eq!(RegionMask::from_coords(4, 4, [(4, 0)]), Err(ImageError::RegionOutOfBounds));
    }

    #[test]
    fn partition_merges_to_whole() {
        let f = Frame::from_fn_rgb(13, 9, |x, y| [(x * 19) as u8, (y * 29) as u8, ((x + y) * 7) as u8]).unwrap();
        let whole = region_distribution(&f, &RegionMask::full(13, 9), 32).unwrap();
        let left = RegionMask::from_fn(13, 9, |x, y| (x + 2 * y) % 5 < 2);
        let right = RegionMask::from_fn(13, 9, |x, y| (x + 2 * y) % 5 >= 2);
        let mut merged = region_distribution(&f, &left, 32).unwrap();
        merged.merge(&region_distribution(&f, &right, 32).unwrap()).unwrap();
        assert_eq!(merged, whole);
        for c in 0..3 {
            let s: f64 = whole.histogram(c).iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn merge_rejects_mismatched_layout() {
        let mut a = ColorDistribution::new(1, 64).unwrap();
        let b = ColorDistribution::new(1, 32).unwrap();
        assert_eq!(a.merge(&b), Err(ImageError::BinMismatch));
    }
}
