//! Straightforward reference implementations used as test oracles.
//!
//! Shared with the acceptance target of the CLI crate via `#[path]`.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, VecDeque};

/// Hough accumulator built cell by cell in a map, then fully sorted.
///
/// Returns `(rho, theta, votes)` for the best `top_k` cells.
pub fn hough(pixels: &[(usize, usize)], width: usize, height: usize, rho_step: f64, theta_step: f64, top_k: usize) -> Vec<(f64, f64, u32)> {
    use mariscope_core::horizon::{cos_sin_deg, rho_offset, theta_cells};
    let offset = rho_offset(width, height);
    let mut votes: BTreeMap<(usize, i64), u32> = BTreeMap::new();
    for (ti, &theta) in theta_cells(theta_step).iter().enumerate() {
        let (c, s) = cos_sin_deg(theta);
        for &(x, y) in pixels {
            let rho = x as f64 * c + y as f64 * s;
            let bin = ((rho + offset) / rho_step).round() as i64;
            *votes.entry((ti, bin)).or_default() += 1;
        }
    }
    let thetas = theta_cells(theta_step);
    let mut cells: Vec<(f64, f64, u32)> = votes.into_iter().map(|((ti, bin), v)| (bin as f64 * rho_step - offset, thetas[ti], v)).collect();
    cells.sort_by(|a, b| {
        b.2.cmp(&a.2)
            .then((a.1 - 90.0).abs().partial_cmp(&(b.1 - 90.0).abs()).unwrap())
            .then(a.0.partial_cmp(&b.0).unwrap())
            .then(a.1.partial_cmp(&b.1).unwrap())
    });
    cells.truncate(top_k);
    cells
}

/// BFS flood-fill labeling; 0 is background.
pub fn flood_fill(mask: &[bool], width: usize, height: usize, eight: bool) -> Vec<u32> {
    let mut labels = vec![0u32; mask.len()];
    let mut next = 0;
    let mut offsets = vec![(-1i64, 0i64), (1, 0), (0, -1), (0, 1)];
    if eight {
        offsets.extend([(-1, -1), (-1, 1), (1, -1), (1, 1)]);
    }
    for start in 0..mask.len() {
        if !mask[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let (x, y) = ((i % width) as i64, (i / width) as i64);
            for &(dx, dy) in &offsets {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= width as i64 || ny >= height as i64 {
                    continue;
                }
                let j = ny as usize * width + nx as usize;
                if mask[j] && labels[j] == 0 {
                    labels[j] = next;
                    queue.push_back(j);
                }
            }
        }
    }
    labels
}

/// True when two labelings describe the same partition (up to renaming).
pub fn same_partition(a: &[u32], b: &[u32]) -> bool {
    let mut ab: HashMap<u32, u32> = HashMap::new();
    let mut ba: HashMap<u32, u32> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        if (x == 0) != (y == 0) {
            return false;
        }
        if *ab.entry(x).or_insert(y) != y || *ba.entry(y).or_insert(x) != x {
            return false;
        }
    }
    true
}

/// Percentile by linear interpolation between closest ranks.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = p / 100.0 * (v.len() as f64 - 1.0);
    let below = rank.floor();
    let frac = rank - below;
    let i = below as usize;
    if i + 1 < v.len() {
        v[i] * (1.0 - frac) + v[i + 1] * frac
    } else {
        v[i]
    }
}

/// `(min deviation, max deviation, population std)` of a series.
pub fn deviation_stats(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let devs: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let min = devs.iter().cloned().fold(f64::MAX, f64::min);
    let max = devs.iter().cloned().fold(f64::MIN, f64::max);
    let var = devs.iter().map(|d| d * d).sum::<f64>() / n;
    (min, max, var.sqrt())
}

/// Minimum-total-distance assignment by exhaustive search over injective
/// maps from the smaller side; returns `(track, blob)` pairs.
pub fn best_assignment(tracks: &[(f64, f64)], blobs: &[(f64, f64)], max_dist: f64) -> Vec<(usize, usize)> {
    fn rec(t: usize, tracks: &[(f64, f64)], blobs: &[(f64, f64)], max_dist: f64, used: &mut Vec<bool>, cur: &mut Vec<(usize, usize)>, best: &mut (usize, f64, Vec<(usize, usize)>)) {
        if t == tracks.len() {
            let cost: f64 = cur.iter().map(|&(a, b)| dist(tracks[a], blobs[b])).sum();
            // prefer more matches, then lower cost
            if cur.len() > best.0 || (cur.len() == best.0 && cost < best.1) {
                *best = (cur.len(), cost, cur.clone());
            }
            return;
        }
        rec(t + 1, tracks, blobs, max_dist, used, cur, best);
        for b in 0..blobs.len() {
            if !used[b] && dist(tracks[t], blobs[b]) <= max_dist {
                used[b] = true;
                cur.push((t, b));
                rec(t + 1, tracks, blobs, max_dist, used, cur, best);
                cur.pop();
                used[b] = false;
            }
        }
    }
    let mut best = (0, f64::INFINITY, Vec::new());
    rec(0, tracks, blobs, max_dist, &mut vec![false; blobs.len()], &mut Vec::new(), &mut best);
    let mut out = best.2;
    out.sort();
    out
}

pub fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}
