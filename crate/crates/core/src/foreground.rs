//! Blob extraction, frame-to-frame association and static/dynamic labeling.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::background::ForegroundMask;
use crate::math;

/// Axis-aligned box in pixels; `x, y` is the top-left corner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundingBox {
    pub x: i64,
    pub y: i64,
    pub w: u32,
    pub h: u32,
}

impl BoundingBox {
    pub fn new(x: i64, y: i64, w: u32, h: u32) -> Self {
        BoundingBox { x, y, w, h }
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> u64 {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = (self.x + self.w as i64).min(other.x + other.w as i64);
        let y1 = (self.y + self.h as i64).min(other.y + other.h as i64);
        if x1 <= x0 || y1 <= y0 {
            0
        } else {
            ((x1 - x0) * (y1 - y0)) as u64
        }
    }

    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    pub fn contains(&self, px: f64, py: f64) -> bool {
        px >= self.x as f64 && py >= self.y as f64 && px <= (self.x + self.w as i64) as f64 && py <= (self.y + self.h as i64) as f64
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x as f64 + self.w as f64 / 2.0, self.y as f64 + self.h as f64 / 2.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MotionLabel {
    Static,
    Dynamic,
    Undetermined,
}

impl MotionLabel {
    pub fn name(self) -> &'static str {
        match self {
            MotionLabel::Static => "static",
            MotionLabel::Dynamic => "dynamic",
            MotionLabel::Undetermined => "undetermined",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "static" => Some(MotionLabel::Static),
            "dynamic" => Some(MotionLabel::Dynamic),
            "undetermined" => Some(MotionLabel::Undetermined),
            _ => None,
        }
    }
}

impl fmt::Display for MotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Blob {
    pub frame_index: u64,
    pub bbox: BoundingBox,
    pub area: usize,
    pub centroid: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Connectivity {
    #[cfg_attr(feature = "serde", serde(rename = "4"))]
    Four,
    #[cfg_attr(feature = "serde", serde(rename = "8"))]
    Eight,
}

/// Labels every foreground pixel with a component id (`0` is background,
/// components are numbered from 1 in raster order of their first pixel).
pub fn label_components(mask: &ForegroundMask, connectivity: Connectivity) -> (Vec<u32>, u32) {
    let (w, h) = (mask.width, mask.height);
    let mut parent: Vec<u32> = vec![0];
    let mut labels = vec![0u32; w * h];

    fn find(parent: &mut [u32], mut a: u32) -> u32 {
        while parent[a as usize] != a {
            parent[a as usize] = parent[parent[a as usize] as usize];
            a = parent[a as usize];
        }
        a
    }
    fn union(parent: &mut [u32], a: u32, b: u32) -> u32 {
        let (ra, rb) = (find(parent, a), find(parent, b));
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi as usize] = lo;
        lo
    }

    for y in 0..h {
        for x in 0..w {
            if !mask.data[y * w + x] {
                continue;
            }
            let mut neighbors = [0u32; 4];
            let mut n = 0;
            let mut push = |l: u32| {
                if l != 0 {
                    neighbors[n] = l;
                    n += 1;
                }
            };
            if x > 0 {
                push(labels[y * w + x - 1]);
            }
            if y > 0 {
                push(labels[(y - 1) * w + x]);
                if connectivity == Connectivity::Eight {
                    if x > 0 {
                        push(labels[(y - 1) * w + x - 1]);
                    }
                    if x + 1 < w {
                        push(labels[(y - 1) * w + x + 1]);
                    }
                }
            }
            let label = if n == 0 {
                let l = parent.len() as u32;
                parent.push(l);
                l
            } else {
                let mut root = find(&mut parent, neighbors[0]);
                for &l in &neighbors[1..n] {
                    root = union(&mut parent, root, l);
                }
                root
            };
            labels[y * w + x] = label;
        }
    }

    // resolve and renumber compactly in raster order of first appearance
    let mut remap = vec![0u32; parent.len()];
    let mut next = 0u32;
    for l in labels.iter_mut() {
        if *l == 0 {
            continue;
        }
        let root = find(&mut parent, *l) as usize;
        if remap[root] == 0 {
            next += 1;
            remap[root] = next;
        }
        *l = remap[root];
    }
    (labels, next)
}

/// Maximal connected foreground regions with at least `min_area` pixels,
/// ordered by area descending, then by box top-left `(y, x)`.
pub fn connected_components(mask: &ForegroundMask, connectivity: Connectivity, min_area: usize, frame_index: u64) -> Vec<Blob> {
    let (labels, count) = label_components(mask, connectivity);
    let n = count as usize;
    let mut area = vec![0usize; n];
    let mut sx = vec![0u64; n];
    let mut sy = vec![0u64; n];
    let mut bounds = vec![(usize::MAX, usize::MAX, 0usize, 0usize); n];
    for (i, &l) in labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let k = l as usize - 1;
        let (x, y) = (i % mask.width, i / mask.width);
        area[k] += 1;
        sx[k] += x as u64;
        sy[k] += y as u64;
        let b = &mut bounds[k];
        b.0 = b.0.min(x);
        b.1 = b.1.min(y);
        b.2 = b.2.max(x);
        b.3 = b.3.max(y);
    }
    let mut blobs: Vec<Blob> = (0..n)
        .filter(|&k| area[k] >= min_area.max(1))
        .map(|k| {
            let (x0, y0, x1, y1) = bounds[k];
            Blob {
                frame_index,
                bbox: BoundingBox::new(x0 as i64, y0 as i64, (x1 - x0 + 1) as u32, (y1 - y0 + 1) as u32),
                area: area[k],
                centroid: (sx[k] as f64 / area[k] as f64, sy[k] as f64 / area[k] as f64),
            }
        })
        .collect();
    blobs.sort_by(|a, b| b.area.cmp(&a.area).then(a.bbox.y.cmp(&b.bbox.y)).then(a.bbox.x.cmp(&b.bbox.x)));
    blobs
}

#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub id: u64,
    pub history: Vec<Blob>,
    pub label: MotionLabel,
    pub last_seen: u64,
}

impl Track {
    pub fn last(&self) -> &Blob {
        self.history.last().expect("tracks are never empty")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TrackerParams {
    pub max_dist: f64,
    /// A track unseen for more than this many frames is closed.
    pub gap_max: u64,
    pub min_history: usize,
    pub eps: f64,
}

impl Default for TrackerParams {
    fn default() -> Self {
        TrackerParams { max_dist: 30.0, gap_max: 5, min_history: 20, eps: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrackError {
    FrameOrderViolation { last: u64, got: u64 },
    MixedFrames,
}

impl fmt::Display for TrackError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrackError::FrameOrderViolation { last, got } => {
                write!(f, "blobs from frame {got} arrived after frame {last}")
            }
            TrackError::MixedFrames => f.write_str("blobs in one batch come from different frames"),
        }
    }
}

impl core::error::Error for TrackError {}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (a.0 - b.0, a.1 - b.1);
    math::sqrt(dx * dx + dy * dy)
}

/// Greedy nearest-centroid association. Pairs within `max_dist` are taken
/// smallest distance first (ties by track id, then blob position); returns,
/// per blob, the index into `tracks` it extended, or `None` if it opened a
/// new track (appended to `tracks`).
pub fn associate_blobs(tracks: &mut Vec<Track>, blobs: &[Blob], max_dist: f64, next_id: &mut u64) -> Result<Vec<Option<usize>>, TrackError> {
    let Some(first) = blobs.first() else {
        return Ok(Vec::new());
    };
    let frame = first.frame_index;
    if blobs.iter().any(|b| b.frame_index != frame) {
        return Err(TrackError::MixedFrames);
    }
    if let Some(last) = tracks.iter().map(|t| t.last_seen).max() {
        if frame <= last {
            return Err(TrackError::FrameOrderViolation { last, got: frame });
        }
    }
    let mut pairs: Vec<(f64, u64, usize, usize)> = Vec::new();
    for (ti, t) in tracks.iter().enumerate() {
        for (bi, b) in blobs.iter().enumerate() {
            let d = dist(t.last().centroid, b.centroid);
            if d <= max_dist {
                pairs.push((d, t.id, ti, bi));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)).then(a.3.cmp(&b.3)));
    let mut track_used = vec![false; tracks.len()];
    let mut assigned: Vec<Option<usize>> = vec![None; blobs.len()];
    for &(_, _, ti, bi) in &pairs {
        if track_used[ti] || assigned[bi].is_some() {
            continue;
        }
        track_used[ti] = true;
        assigned[bi] = Some(ti);
    }
    for (bi, b) in blobs.iter().enumerate() {
        match assigned[bi] {
            Some(ti) => {
                let t = &mut tracks[ti];
                t.history.push(b.clone());
                t.last_seen = frame;
            }
            None => {
                tracks.push(Track { id: *next_id, history: vec![b.clone()], label: MotionLabel::Undetermined, last_seen: frame });
                *next_id += 1;
            }
        }
    }
    Ok(assigned)
}

/// Static when every centroid of the last `min_history` observations lies
/// within `eps` of their mean; undetermined with fewer observations.
pub fn classify_motion(track: &Track, eps: f64, min_history: usize) -> MotionLabel {
    let n = min_history.max(1);
    if track.history.len() < n {
        return MotionLabel::Undetermined;
    }
    let recent = &track.history[track.history.len() - n..];
    let (mut mx, mut my) = (0.0, 0.0);
    for b in recent {
        mx += b.centroid.0;
        my += b.centroid.1;
    }
    mx /= n as f64;
    my /= n as f64;
    let max_dev = recent.iter().map(|b| dist(b.centroid, (mx, my))).fold(0.0, f64::max);
    if max_dev <= eps {
        MotionLabel::Static
    } else {
        MotionLabel::Dynamic
    }
}

/// Stateful multi-frame tracker: association, gap closing and labeling.
#[derive(Clone, Debug, Default)]
pub struct Tracker {
    pub params: TrackerParams,
    active: Vec<Track>,
    closed: Vec<Track>,
    next_id: u64,
    last_frame: Option<u64>,
}

/// One tracked detection in one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackObservation {
    pub frame_index: u64,
    pub track_id: u64,
    pub bbox: BoundingBox,
    pub area: usize,
    pub label: MotionLabel,
}

impl Tracker {
    pub fn new(params: TrackerParams) -> Self {
        Tracker { params, ..Tracker::default() }
    }

    pub fn active(&self) -> &[Track] {
        &self.active
    }

    pub fn closed(&self) -> &[Track] {
        &self.closed
    }

    /// All tracks, closed first, each group in id order.
    pub fn into_tracks(self) -> Vec<Track> {
        let mut all = self.closed;
        all.extend(self.active);
        all.sort_by_key(|t| t.id);
        all
    }

    /// Processes the blobs of `frame_index` (possibly none) and returns the
    /// observations made in this frame with their current labels.
    pub fn step(&mut self, frame_index: u64, blobs: &[Blob]) -> Result<Vec<TrackObservation>, TrackError> {
        if let Some(last) = self.last_frame {
            if frame_index <= last {
                return Err(TrackError::FrameOrderViolation { last, got: frame_index });
            }
        }
        if blobs.iter().any(|b| b.frame_index != frame_index) {
            return Err(TrackError::MixedFrames);
        }
        self.last_frame = Some(frame_index);

        let gap = self.params.gap_max;
        let (keep, close): (Vec<Track>, Vec<Track>) = core::mem::take(&mut self.active).into_iter().partition(|t| frame_index - t.last_seen <= gap + 1);
        self.closed.extend(close);
        self.active = keep;

        let assigned = associate_blobs(&mut self.active, blobs, self.params.max_dist, &mut self.next_id)?;
        let first_new = self.active.len() - assigned.iter().filter(|a| a.is_none()).count();
        let mut new_idx = first_new;
        let mut out = Vec::with_capacity(blobs.len());
        for (bi, b) in blobs.iter().enumerate() {
            let ti = match assigned[bi] {
                Some(ti) => ti,
                None => {
                    new_idx += 1;
                    new_idx - 1
                }
            };
            let t = &mut self.active[ti];
            t.label = classify_motion(t, self.params.eps, self.params.min_history);
            out.push(TrackObservation { frame_index, track_id: t.id, bbox: b.bbox, area: b.area, label: t.label });
        }
        Ok(out)
    }
}
