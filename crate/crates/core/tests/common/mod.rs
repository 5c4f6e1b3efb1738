//! Independent reference implementations used to cross-check the library,
//! plus a synthetic corpus generator with known statistics.
#![allow(dead_code)]

pub mod synth;

use std::collections::HashMap;

use gazekit::grid::{Grid, Pixel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Per-pixel direct sum of truncated Gaussians, renormalized.
pub fn gaussian_direct(points: &[(usize, usize)], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as i64;
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for &(px, py) in points {
                let (dx, dy) = (x as i64 - px as i64, y as i64 - py as i64);
                if dx.abs() <= r && dy.abs() <= r {
                    s += (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
                }
            }
            out[y * w + x] = s;
        }
    }
    let total: f64 = out.iter().sum();
    out.iter().map(|v| v / total).collect()
}

/// Elementwise mean of equally sized maps, renormalized.
pub fn mean_maps(maps: &[Vec<f64>]) -> Vec<f64> {
    let n = maps[0].len();
    let mean: Vec<f64> = (0..n).map(|i| maps.iter().map(|m| m[i]).sum::<f64>() / maps.len() as f64).collect();
    let total: f64 = mean.iter().sum();
    mean.iter().map(|v| v / total).collect()
}

/// Top-percent bits from a full descending sort: keep everything at least
/// the value ranked ⌈p·n/100⌉.
pub fn top_percent_sorted(values: &[f64], percent: f64) -> Vec<bool> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let m = ((values.len() as f64 * percent / 100.0 - 1e-9).ceil() as usize).clamp(1, values.len());
    let thr = sorted[m - 1];
    values.iter().map(|&v| v >= thr).collect()
}

/// Recursive flood fill, 8-connected, labels in row-major first-pixel order.
pub fn flood_fill(bits: &[bool], w: usize, h: usize) -> Vec<Vec<(usize, usize)>> {
    fn visit(bits: &[bool], w: usize, h: usize, x: usize, y: usize, seen: &mut [bool], out: &mut Vec<(usize, usize)>) {
        if !bits[y * w + x] || seen[y * w + x] {
            return;
        }
        seen[y * w + x] = true;
        out.push((x, y));
        for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
            for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                visit(bits, w, h, nx, ny, seen, out);
            }
        }
    }
    let mut seen = vec![false; w * h];
    let mut regions = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if bits[y * w + x] && !seen[y * w + x] {
                let mut r = Vec::new();
                visit(bits, w, h, x, y, &mut seen, &mut r);
                r.sort_by_key(|&(x, y)| (y, x));
                regions.push(r);
            }
        }
    }
    regions
}

/// ROC area by explicit counting at every distinct positive value.
pub fn auc_counting(pos: &[f64], neg: &[f64]) -> f64 {
    let mut thresholds = pos.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut pts = vec![(0.0, 0.0)];
    for t in thresholds {
        let tp = pos.iter().filter(|&&v| v >= t).count() as f64 / pos.len() as f64;
        let fp = neg.iter().filter(|&&v| v >= t).count() as f64 / neg.len() as f64;
        pts.push((fp, tp));
    }
    pts.push((1.0, 1.0));
    pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum()
}

fn dedup(points: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut p = points.to_vec();
    p.sort_unstable();
    p.dedup();
    p
}

/// AUC-Judd: fixated pixels (deduplicated) against every other pixel.
pub fn auc_judd_oracle(map: &[f64], w: usize, fix: &[(usize, usize)]) -> f64 {
    let pos_px = dedup(fix);
    let pos: Vec<f64> = pos_px.iter().map(|&(x, y)| map[y * w + x]).collect();
    let neg: Vec<f64> = (0..map.len()).filter(|i| !pos_px.contains(&(i % w, i / w))).map(|i| map[i]).collect();
    auc_counting(&pos, &neg)
}

/// Replays the shuffled-AUC sampler: ChaCha8 seeded by `seed`, stream =
/// split index, partial Fisher-Yates over the pool.
pub fn sauc_replay(
    map: &[f64],
    w: usize,
    fix: &[(usize, usize)],
    pool: &[(usize, usize)],
    splits: usize,
    seed: u64,
) -> f64 {
    let pos_px = dedup(fix);
    let pos: Vec<f64> = pos_px.iter().map(|&(x, y)| map[y * w + x]).collect();
    let k = pos.len().min(pool.len());
    let mut total = 0.0;
    for s in 0..splits {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s as u64);
        let mut idx: Vec<usize> = (0..pool.len()).collect();
        for i in 0..k {
            let j = rng.random_range(i..pool.len());
            idx.swap(i, j);
        }
        let neg: Vec<f64> = idx[..k].iter().map(|&i| map[pool[i].1 * w + pool[i].0]).collect();
        total += auc_counting(&pos, &neg);
    }
    total / splits as f64
}

/// Population z-score mean at the given pixels.
pub fn nss_oracle(map: &[f64], w: usize, fix: &[(usize, usize)]) -> f64 {
    let n = map.len() as f64;
    let mean = map.iter().sum::<f64>() / n;
    let sd = (map.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    fix.iter().map(|&(x, y)| (map[y * w + x] - mean) / sd).sum::<f64>() / fix.len() as f64
}

/// Enumerates every monotone alignment path and returns the cheapest
/// `(total, pairs)`.
pub fn dtw_exhaustive(cost: &[Vec<f64>]) -> (f64, usize) {
    fn walk(cost: &[Vec<f64>], i: usize, j: usize, acc: f64, len: usize, best: &mut (f64, usize)) {
        let acc = acc + cost[i][j];
        let len = len + 1;
        let (n, m) = (cost.len(), cost[0].len());
        if i == n - 1 && j == m - 1 {
            if acc < best.0 {
                *best = (acc, len);
            }
            return;
        }
        if i + 1 < n && j + 1 < m {
            walk(cost, i + 1, j + 1, acc, len, best);
        }
        if i + 1 < n {
            walk(cost, i + 1, j, acc, len, best);
        }
        if j + 1 < m {
            walk(cost, i, j + 1, acc, len, best);
        }
    }
    let mut best = (f64::INFINITY, 0);
    walk(cost, 0, 0, 0.0, 0, &mut best);
    best
}

/// Winner-take-all over a suppression mask: each round takes the first
/// maximum among unsuppressed pixels (suppressed pixels read as 0).
pub fn wta_masked(map: &[f64], w: usize, h: usize, n: usize, radius: f64, floor: f64) -> Vec<(usize, usize)> {
    let mut suppressed = vec![false; w * h];
    let mut out = Vec::new();
    for _ in 0..n {
        let mut best = (0usize, f64::NEG_INFINITY);
        for i in 0..w * h {
            let v = if suppressed[i] { 0.0 } else { map[i] };
            if v > best.1 {
                best = (i, v);
            }
        }
        if best.1 <= floor {
            break;
        }
        let (bx, by) = (best.0 % w, best.0 / w);
        out.push((bx, by));
        for (i, s) in suppressed.iter_mut().enumerate() {
            let (dx, dy) = ((i % w) as f64 - bx as f64, (i / w) as f64 - by as f64);
            if dx * dx + dy * dy <= radius * radius {
                *s = true;
            }
        }
    }
    out
}

/// Bilinear read with zeros outside the grid.
pub fn bilinear_oracle(g: &[f64], w: usize, h: usize, x: f64, y: f64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let at = |xi: f64, yi: f64| {
        if xi < 0.0 || yi < 0.0 || xi >= w as f64 || yi >= h as f64 {
            0.0
        } else {
            g[yi as usize * w + xi as usize]
        }
    };
    at(x0, y0) * (1.0 - fx) * (1.0 - fy)
        + at(x0 + 1.0, y0) * fx * (1.0 - fy)
        + at(x0, y0 + 1.0) * (1.0 - fx) * fy
        + at(x0 + 1.0, y0 + 1.0) * fx * fy
}

/// Patch sampled cell by cell: normalized output coordinate, affine map,
/// back to pixel coordinates, bilinear read.
pub fn patch_oracle(g: &[f64], w: usize, h: usize, theta: [[f64; 2]; 2], c: (f64, f64), p: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(p * p);
    for r in 0..p {
        for col in 0..p {
            let u = (2.0 * col as f64 + 1.0) / p as f64 - 1.0;
            let v = (2.0 * r as f64 + 1.0) / p as f64 - 1.0;
            let xn = theta[0][0] * u + theta[0][1] * v + c.0;
            let yn = theta[1][0] * u + theta[1][1] * v + c.1;
            let px = ((xn + 1.0) * w as f64 - 1.0) / 2.0;
            let py = ((yn + 1.0) * h as f64 - 1.0) / 2.0;
            out.push(bilinear_oracle(g, w, h, px, py));
        }
    }
    out
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let e: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|v| v / z).collect()
}

/// Interval-intersection bin weights: `[bin][fixation]`.
pub fn bin_oracle(spans: &[(f64, f64)], bin: f64) -> Vec<Vec<f64>> {
    let end = spans.iter().map(|s| s.1).fold(0.0, f64::max);
    let n = ((end / bin).ceil() as usize).max(1);
    (0..n)
        .map(|b| {
            let (lo, hi) = (b as f64 * bin, (b + 1) as f64 * bin);
            spans
                .iter()
                .map(|&(s, e)| {
                    if e > s {
                        (e.min(hi) - s.max(lo)).max(0.0) / (e - s)
                    } else if s >= lo && s < hi {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Ranks by counting (ties share the mean rank), then Pearson.
pub fn spearman_oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|&a| {
                let less = v.iter().filter(|&&b| b < a).count() as f64;
                let eq = v.iter().filter(|&&b| b == a).count() as f64;
                less + (eq + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (rank(xs), rank(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

pub fn hash_tally<'a>(words: impl IntoIterator<Item = &'a str>) -> HashMap<String, usize> {
    let mut m = HashMap::new();
    for w in words {
        *m.entry(w.to_string()).or_insert(0) += 1;
    }
    m
}

pub fn grid(w: usize, h: usize, v: Vec<f64>) -> Grid {
    Grid::new(w, h, v).unwrap()
}

pub fn px(points: &[(usize, usize)]) -> Vec<Pixel> {
    points.iter().map(|&(x, y)| Pixel::new(x, y)).collect()
}
