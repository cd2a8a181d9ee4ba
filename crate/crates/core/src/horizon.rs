//! Horizon detection as `(Y, α)`.
//!
//! `Y` is the row where the horizon crosses the vertical center column
//! `x = (W-1)/2`, measured from the top edge; `α` is its angle with the
//! image x axis in degrees, positive when the right end is higher (smaller
//! image y at larger x).
//!
//! Detection takes the strongest Hough line candidates of the edge map,
//! splits the frame into the regions above and below each one and keeps the
//! candidate whose regions are furthest apart under a statistical distance
//! between their color distributions.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::imgcore::{edge_map, ColorDistribution, EdgeMap, EdgeParams, Frame, ImageError, RegionMask, DEFAULT_BINS};
use crate::math;

#[derive(Clone, Debug, PartialEq)]
pub enum HorizonError {
    InvalidParams(&'static str),
    NoEdgePixels,
    VerticalLine,
    DegenerateSplit,
    BinMismatch,
    /// No usable line candidate: empty edge map or no line with enough votes.
    NoLineFeatures,
    Image(ImageError),
}

impl fmt::Display for HorizonError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HorizonError::InvalidParams(what) => write!(f, "invalid parameter: {what}"),
            HorizonError::NoEdgePixels => f.write_str("edge map has no edge pixels"),
            HorizonError::VerticalLine => f.write_str("line is vertical"),
            HorizonError::DegenerateSplit => f.write_str("candidate leaves one region (nearly) empty"),
            HorizonError::BinMismatch => f.write_str("distributions use different bin layouts"),
            HorizonError::NoLineFeatures => f.write_str("no line features"),
            HorizonError::Image(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for HorizonError {}

impl From<ImageError> for HorizonError {
    fn from(e: ImageError) -> Self {
        HorizonError::Image(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HorizonEstimate {
    /// Pixels from the top edge, at the vertical center column.
    pub y: f64,
    /// Degrees, counter-clockwise positive.
    pub alpha: f64,
    pub score: f64,
    /// Rank of the chosen Hough candidate (0 = most votes).
    pub candidate_rank: usize,
}

impl HorizonEstimate {
    pub fn line(&self) -> HorizonLine {
        HorizonLine { y: self.y, alpha: self.alpha }
    }
}

/// A non-vertical line in `(Y, α)` form.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HorizonLine {
    pub y: f64,
    pub alpha: f64,
}

impl HorizonLine {
    pub fn new(y: f64, alpha: f64) -> Self {
        HorizonLine { y, alpha }
    }

    /// Row of the line at column `x` (fractional).
    #[inline]
    pub fn y_at(&self, x: f64, width: usize) -> f64 {
        let xc = (width as f64 - 1.0) / 2.0;
        if self.alpha == 0.0 {
            return self.y;
        }
        self.y - (x - xc) * math::tan(math::to_radians(self.alpha))
    }

    /// Number of rows of column `x` that lie strictly above the line,
    /// clamped to `[0, height]`. Rows `0..boundary_row` form the upper region.
    #[inline]
    pub fn boundary_row(&self, x: usize, width: usize, height: usize) -> usize {
        let y = self.y_at(x as f64, width);
        // ceil with a small tolerance so lines through exact integer rows are
        // not pushed one row down by rounding noise.
        let b = math::ceil(y - 1e-9);
        if b <= 0.0 {
            0
        } else if b >= height as f64 {
            height
        } else {
            b as usize
        }
    }

    /// Perpendicular distance from `(x, y)` to the line.
    pub fn distance(&self, x: f64, y: f64, width: usize) -> f64 {
        (y - self.y_at(x, width)).abs() * math::cos(math::to_radians(self.alpha))
    }
}

/// A Hough accumulator cell: the line `x cos θ + y sin θ = ρ`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LineCandidate {
    pub rho: f64,
    /// Degrees in `[0, 180)`.
    pub theta: f64,
    pub votes: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct HoughParams {
    pub rho_step: f64,
    pub theta_step: f64,
    pub top_k: usize,
}

impl Default for HoughParams {
    fn default() -> Self {
        HoughParams { rho_step: 1.0, theta_step: 0.5, top_k: 10 }
    }
}

/// `(cos, sin)` of an angle in degrees, exact at multiples of 90°.
pub fn cos_sin_deg(deg: f64) -> (f64, f64) {
    if deg == 0.0 {
        (1.0, 0.0)
    } else if deg == 90.0 {
        (0.0, 1.0)
    } else {
        let r = math::to_radians(deg);
        (math::cos(r), math::sin(r))
    }
}

/// θ cell centers in degrees: `i * theta_step` for every value below 180.
pub fn theta_cells(theta_step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut i = 0usize;
    loop {
        let t = i as f64 * theta_step;
        if t >= 180.0 - 1e-9 {
            break;
        }
        out.push(t);
        i += 1;
    }
    out
}

/// Offset added to ρ before quantization: `ceil(hypot(W-1, H-1))`.
pub fn rho_offset(width: usize, height: usize) -> f64 {
    let (w, h) = ((width - 1) as f64, (height - 1) as f64);
    math::ceil(math::sqrt(w * w + h * h))
}

/// Ranking: votes descending, then closeness to horizontal, then ρ, then θ.
pub fn candidate_order(a: &LineCandidate, b: &LineCandidate) -> Ordering {
    b.votes
        .cmp(&a.votes)
        .then_with(|| (a.theta - 90.0).abs().total_cmp(&(b.theta - 90.0).abs()))
        .then_with(|| a.rho.total_cmp(&b.rho))
        .then_with(|| a.theta.total_cmp(&b.theta))
}

/// Standard ρ–θ Hough transform of the edge mask.
///
/// Each edge pixel votes once per θ cell, in the ρ bin
/// `round((x cos θ + y sin θ + offset) / rho_step)`. Returns at most
/// `top_k` cells with at least one vote, ranked by [`candidate_order`].
pub fn hough_lines(edges: &EdgeMap, params: &HoughParams) -> Result<Vec<LineCandidate>, HorizonError> {
    if !(params.rho_step > 0.0) {
        return Err(HorizonError::InvalidParams("rho_step must be positive"));
    }
    if !(params.theta_step > 0.0 && params.theta_step <= 180.0) {
        return Err(HorizonError::InvalidParams("theta_step must be in (0, 180]"));
    }
    if params.top_k == 0 {
        return Err(HorizonError::InvalidParams("top_k must be at least 1"));
    }
    let pixels: Vec<(usize, usize)> = edges.edge_pixels().collect();
    if pixels.is_empty() {
        return Err(HorizonError::NoEdgePixels);
    }
    let thetas = theta_cells(params.theta_step);
    let trig: Vec<(f64, f64)> = thetas.iter().map(|&t| cos_sin_deg(t)).collect();
    let offset = rho_offset(edges.width, edges.height);
    let n_rho = math::ceil(2.0 * offset / params.rho_step) as usize + 1;
    let mut acc = vec![0u32; thetas.len() * n_rho];
    for &(x, y) in &pixels {
        let (xf, yf) = (x as f64, y as f64);
        for (ti, &(c, s)) in trig.iter().enumerate() {
            let rho = xf * c + yf * s;
            let bin = math::round((rho + offset) / params.rho_step) as usize;
            acc[ti * n_rho + bin] += 1;
        }
    }
    let mut cells: Vec<LineCandidate> = acc
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0)
        .map(|(i, &votes)| LineCandidate {
            rho: (i % n_rho) as f64 * params.rho_step - offset,
            theta: thetas[i / n_rho],
            votes,
        })
        .collect();
    let k = params.top_k.min(cells.len());
    if k < cells.len() {
        cells.select_nth_unstable_by(k - 1, candidate_order);
        cells.truncate(k);
    }
    cells.sort_by(candidate_order);
    Ok(cells)
}

/// Converts a ρ–θ line to `(Y, α)` for an image `width` pixels wide.
pub fn line_to_horizon_params(line: &LineCandidate, width: usize) -> Result<HorizonLine, HorizonError> {
    let (c, s) = cos_sin_deg(line.theta);
    if s.abs() < 1e-12 {
        return Err(HorizonError::VerticalLine);
    }
    let xc = (width as f64 - 1.0) / 2.0;
    let mut alpha = 90.0 - line.theta;
    // θ outside [0, 180) describes the same line with ρ negated
    if alpha <= -90.0 {
        alpha += 180.0;
    } else if alpha >= 90.0 {
        alpha -= 180.0;
    }
    Ok(HorizonLine { y: (line.rho - xc * c) / s, alpha })
}

/// Partitions the frame into pixels strictly above the line and the rest.
pub fn split_regions(width: usize, height: usize, line: &HorizonLine) -> Result<(RegionMask, RegionMask), HorizonError> {
    if !(line.alpha.abs() < 90.0) {
        return Err(HorizonError::VerticalLine);
    }
    let bounds: Vec<usize> = (0..width).map(|x| line.boundary_row(x, width, height)).collect();
    let upper = RegionMask::from_fn(width, height, |x, y| y < bounds[x]);
    let lower = RegionMask::from_fn(width, height, |x, y| y >= bounds[x]);
    if upper.is_empty() || lower.is_empty() {
        return Err(HorizonError::DegenerateSplit);
    }
    Ok((upper, lower))
}

/// Color distributions of the upper and lower regions, in one pass.
pub fn split_distributions(frame: &Frame, line: &HorizonLine, bins: usize) -> Result<(ColorDistribution, ColorDistribution), HorizonError> {
    let (w, h) = (frame.width(), frame.height());
    let n = frame.channels().count();
    let mut upper = ColorDistribution::new(n, bins)?;
    let mut lower = ColorDistribution::new(n, bins)?;
    let bounds: Vec<usize> = (0..w).map(|x| line.boundary_row(x, w, h)).collect();
    for y in 0..h {
        for (x, &b) in bounds.iter().enumerate() {
            let px = frame.pixel(x, y);
            if y < b {
                upper.add(px);
            } else {
                lower.add(px);
            }
        }
    }
    Ok((upper, lower))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum DistanceMetric {
    /// `Σ_c (μa − μb)²`
    #[default]
    MeanShift,
    /// `Σ_c −ln Σ_bins sqrt(ha · hb)`
    Bhattacharyya,
    /// `1 / (1 + Σ_c (σa² + σb²))`
    IntraVariance,
}

impl DistanceMetric {
    pub const ALL: [DistanceMetric; 3] = [DistanceMetric::MeanShift, DistanceMetric::Bhattacharyya, DistanceMetric::IntraVariance];

    pub fn name(self) -> &'static str {
        match self {
            DistanceMetric::MeanShift => "mean-shift",
            DistanceMetric::Bhattacharyya => "bhattacharyya",
            DistanceMetric::IntraVariance => "intra-variance",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        DistanceMetric::ALL.into_iter().find(|m| m.name() == s)
    }
}

// Lower bound on the Bhattacharyya coefficient; disjoint histograms score
// -ln(1e-12) ≈ 27.6 per channel instead of infinity.
const BC_FLOOR: f64 = 1e-12;

/// Scalar separation between two distributions; higher is better for every metric.
pub fn statistical_distance(a: &ColorDistribution, b: &ColorDistribution, metric: DistanceMetric) -> Result<f64, HorizonError> {
    if !a.same_layout(b) {
        return Err(HorizonError::BinMismatch);
    }
    let channels = 0..a.channel_count();
    Ok(match metric {
        DistanceMetric::MeanShift => channels
            .map(|c| {
                let d = a.mean(c) - b.mean(c);
                d * d
            })
            .sum(),
        DistanceMetric::Bhattacharyya => channels
            .map(|c| {
                let (ha, hb) = (a.histogram(c), b.histogram(c));
                let bc: f64 = ha.iter().zip(&hb).map(|(p, q)| math::sqrt(p * q)).sum();
                (-math::ln(bc.max(BC_FLOOR))).max(0.0)
            })
            .sum(),
        DistanceMetric::IntraVariance => {
            let s: f64 = channels.map(|c| a.variance(c) + b.variance(c)).sum();
            1.0 / (1.0 + s)
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct HorizonConfig {
    pub metric: DistanceMetric,
    pub hough: HoughParams,
    pub edges: EdgeParams,
    pub bins: usize,
    /// Candidates leaving less than this fraction of the frame on either side are skipped.
    pub min_region_fraction: f64,
    /// Candidates need at least `min_vote_fraction * width` votes.
    pub min_vote_fraction: f64,
    /// Least-squares refit of `(Y, α)` on the edge pixels near the chosen candidate.
    pub refine: bool,
    /// Perpendicular distance (pixels) of edge pixels used by the refit.
    pub refine_band: f64,
}

impl Default for HorizonConfig {
    fn default() -> Self {
        HorizonConfig {
            metric: DistanceMetric::MeanShift,
            hough: HoughParams::default(),
            edges: EdgeParams::default(),
            bins: DEFAULT_BINS,
            min_region_fraction: 0.02,
            min_vote_fraction: 0.1,
            refine: true,
            refine_band: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredCandidate {
    pub rank: usize,
    pub line: LineCandidate,
    /// `None` for vertical or degenerate candidates.
    pub horizon: Option<HorizonLine>,
    pub score: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HorizonDetection {
    pub estimate: HorizonEstimate,
    pub candidates: Vec<ScoredCandidate>,
}

pub fn detect_horizon(frame: &Frame, config: &HorizonConfig) -> Result<HorizonEstimate, HorizonError> {
    detect_horizon_detailed(frame, config).map(|d| d.estimate)
}

/// Like [`detect_horizon`] but also returns every evaluated candidate.
pub fn detect_horizon_detailed(frame: &Frame, config: &HorizonConfig) -> Result<HorizonDetection, HorizonError> {
    let (w, h) = (frame.width(), frame.height());
    let gray = frame.to_gray();
    let edges = edge_map(&gray, &config.edges)?;
    let lines = match hough_lines(&edges, &config.hough) {
        Err(HorizonError::NoEdgePixels) => return Err(HorizonError::NoLineFeatures),
        other => other?,
    };
    let min_votes = math::ceil(config.min_vote_fraction * w as f64) as u32;
    let min_region = math::ceil(config.min_region_fraction * (w * h) as f64) as u64;

    let mut candidates = Vec::with_capacity(lines.len());
    let mut best: Option<(usize, f64)> = None;
    for (rank, line) in lines.into_iter().enumerate() {
        if line.votes < min_votes.max(1) {
            continue;
        }
        let mut scored = ScoredCandidate { rank, line, horizon: None, score: None };
        if let Ok(hl) = line_to_horizon_params(&line, w) {
            if hl.y >= 0.0 && hl.y <= h as f64 {
                let (upper, lower) = split_distributions(frame, &hl, config.bins)?;
                if upper.pixel_count() >= min_region && lower.pixel_count() >= min_region {
                    let score = statistical_distance(&upper, &lower, config.metric)?;
                    scored.horizon = Some(hl);
                    scored.score = Some(score);
                    if best.is_none_or(|(_, s)| score > s) {
                        best = Some((candidates.len(), score));
                    }
                }
            }
        }
        candidates.push(scored);
    }
    if candidates.is_empty() {
        return Err(HorizonError::NoLineFeatures);
    }
    let (idx, score) = best.ok_or(HorizonError::DegenerateSplit)?;
    let chosen = &candidates[idx];
    let mut line = chosen.horizon.expect("scored candidate has a line");
    if config.refine {
        if let Some(refined) = refine_line(&edges, &line, config.refine_band, h) {
            line = refined;
        }
    }
    let estimate = HorizonEstimate { y: line.y, alpha: line.alpha, score, candidate_rank: chosen.rank };
    Ok(HorizonDetection { estimate, candidates })
}

// Least-squares fit y = a + b (x - xc) over edge pixels within `band` of `line`.
fn refine_line(edges: &EdgeMap, line: &HorizonLine, band: f64, height: usize) -> Option<HorizonLine> {
    let w = edges.width;
    let xc = (w as f64 - 1.0) / 2.0;
    let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut xmin, mut xmax) = (usize::MAX, 0usize);
    for (x, y) in edges.edge_pixels() {
        if line.distance(x as f64, y as f64, w) > band {
            continue;
        }
        let u = x as f64 - xc;
        let v = y as f64;
        n += 1.0;
        sx += u;
        sy += v;
        sxx += u * u;
        sxy += u * v;
        xmin = xmin.min(x);
        xmax = xmax.max(x);
    }
    if n < 10.0 || xmax <= xmin {
        return None;
    }
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-9 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let refined = HorizonLine { y: intercept, alpha: -math::to_degrees(math::atan(slope)) };
    if refined.y < 0.0 || refined.y > height as f64 || !(refined.alpha.abs() < 90.0) {
        return None;
    }
    Some(refined)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::{region_distribution, Channels};

    fn row_edges(w: usize, h: usize, rows: &[usize]) -> EdgeMap {
        let mut mask = vec![false; w * h];
        for &r in rows {
            for x in 0..w {
                mask[r * w + x] = true;
            }
        }
        EdgeMap::from_mask(w, h, mask)
    }

    #[test]
    fn single_row_votes() {
        let e = row_edges(100, 100, &[50]);
        let c = hough_lines(&e, &HoughParams::default()).unwrap();
        assert_eq!(c[0].theta, 90.0);
        assert_eq!(c[0].rho, 50.0);
        assert_eq!(c[0].votes, 100);
        assert!(c.len() <= 10);
        assert!(c.windows(2).all(|p| candidate_order(&p[0], &p[1]) != Ordering::Greater));
    }

    #[test]
    fn empty_edge_map() {
        let e = row_edges(10, 10, &[]);
        assert_eq!(hough_lines(&e, &HoughParams::default()), Err(HorizonError::NoEdgePixels));
    }

    #[test]
    fn invalid_hough_params() {
        let e = row_edges(10, 10, &[3]);
        for p in [
            HoughParams { rho_step: 0.0, ..HoughParams::default() },
            HoughParams { theta_step: -1.0, ..HoughParams::default() },
            HoughParams { top_k: 0, ..HoughParams::default() },
        ] {
            assert!(matches!(hough_lines(&e, &p), Err(HorizonError::InvalidParams(_))));
        }
    }

    #[test]
    fn horizon_params_of_lines() {
        let l = LineCandidate { rho: 100.0, theta: 90.0, votes: 1 };
        assert_eq!(line_to_horizon_params(&l, 640).unwrap(), HorizonLine::new(100.0, 0.0));
        assert_eq!(line_to_horizon_params(&LineCandidate { rho: 10.0, theta: 90.0, votes: 1 }, 7).unwrap(), HorizonLine::new(10.0, 0.0));
        // the diagonal y = x has normal θ = 135°, ρ = 0
        let d = line_to_horizon_params(&LineCandidate { rho: 0.0, theta: 135.0, votes: 1 }, 100).unwrap();
        assert!((d.alpha + 45.0).abs() < 1e-12);
        assert!((d.y - 49.5).abs() < 1e-9);
        assert_eq!(
            line_to_horizon_params(&LineCandidate { rho: 3.0, theta: 0.0, votes: 1 }, 100),
            Err(HorizonError::VerticalLine)
        );
    }

    #[test]
    fn split_is_a_partition() {
        let (u, l) = split_regions(60, 100, &HorizonLine::new(50.0, 0.0)).unwrap();
        assert_eq!(u.len(), 50 * 60);
        assert_eq!(l.len(), 50 * 60);
        assert_eq!(split_regions(60, 100, &HorizonLine::new(0.0, 0.0)), Err(HorizonError::DegenerateSplit));
        let (u, l) = split_regions(37, 23, &HorizonLine::new(11.3, 17.0)).unwrap();
        assert_eq!(u.len() + l.len(), 37 * 23);
        assert!(u.bits().iter().zip(l.bits()).all(|(a, b)| a != b));
    }

    #[test]
    fn split_distributions_match_region_distribution() {
        let f = Frame::from_fn_rgb(41, 29, |x, y| [(x * 5) as u8, (y * 8) as u8, (x * y % 256) as u8]).unwrap();
        let line = HorizonLine::new(13.7, -8.0);
        let (u, l) = split_regions(41, 29, &line).unwrap();
        let (du, dl) = split_distributions(&f, &line, 64).unwrap();
        assert_eq!(du, region_distribution(&f, &u, 64).unwrap());
        assert_eq!(dl, region_distribution(&f, &l, 64).unwrap());
    }

    fn delta(v: u8) -> ColorDistribution {
        let mut d = ColorDistribution::new(1, 64).unwrap();
        d.add(&[v]);
        d
    }

    #[test]
    fn distance_fixtures() {
        let a = delta(10);
        assert_eq!(statistical_distance(&a, &a, DistanceMetric::MeanShift).unwrap(), 0.0);
        assert_eq!(statistical_distance(&a, &a, DistanceMetric::Bhattacharyya).unwrap(), 0.0);
        assert_eq!(statistical_distance(&a, &a, DistanceMetric::IntraVariance).unwrap(), 1.0);
        let (lo, hi) = (delta(0), delta(255));
        assert_eq!(statistical_distance(&lo, &hi, DistanceMetric::MeanShift).unwrap(), 65025.0);
        let b = statistical_distance(&lo, &hi, DistanceMetric::Bhattacharyya).unwrap();
        assert!((b - (-libm::log(BC_FLOOR))).abs() < 1e-12);
        let other = ColorDistribution::new(1, 32).unwrap();
        assert_eq!(statistical_distance(&lo, &other, DistanceMetric::MeanShift), Err(HorizonError::BinMismatch));
    }

    fn two_region(h_split: usize) -> Frame {
        Frame::from_fn_rgb(160, 120, |_, y| if y < h_split { [200, 200, 200] } else { [60, 60, 60] }).unwrap()
    }

    #[test]
    fn detects_clean_step() {
        for metric in DistanceMetric::ALL {
            let cfg = HorizonConfig { metric, ..HorizonConfig::default() };
            let est = detect_horizon(&two_region(60), &cfg).unwrap();
            assert!((est.y - 60.0).abs() <= 1.0, "{metric:?} {est:?}");
            assert!(est.alpha.abs() <= 0.5);
        }
    }

    #[test]
    fn uniform_frame_has_no_line_features() {
        let f = Frame::filled(50, 40, Channels::Rgb, 128).unwrap();
        assert_eq!(detect_horizon(&f, &HorizonConfig::default()), Err(HorizonError::NoLineFeatures));
    }

    #[test]
    fn metric_names_round_trip() {
        for m in DistanceMetric::ALL {
            assert_eq!(DistanceMetric::from_name(m.name()), Some(m));
        }
        assert_eq!(DistanceMetric::from_name("nope"), None);
    }
}
