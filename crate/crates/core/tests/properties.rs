mod common;

use common::*;
use gazekit::attend::{foveate, sample_patch, soft_attention, wta_select, AffineParams, DotScorer, PoolingMode};
use gazekit::domain::{Fixation, GazeSession, Task};
use gazekit::grid::{FloatGridStack, Grid, Pixel, RgbImage, SaliencyMap};
use gazekit::ingest::{parse_fixation_log, read_fgrid, write_fgrid, write_fixation_log};
use gazekit::metrics::{auc_judd, nss, shuffled_auc, sim, sim_distance, spearman};
use gazekit::salmap::{
    average_map, connected_components, fixations_to_salmap, top_count, top_percent_mask, BinaryMask,
};
use gazekit::temporal::{bin_weights, dtw_from_costs, PathNormalization};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn cfg() -> ProptestConfig {
    ProptestConfig::with_cases(1000)
}

prop_compose! {
    fn values(max_w: usize, max_h: usize)(w in 2..=max_w, h in 2..=max_h)
        (v in prop::collection::vec(0.0f64..1.0, w * h), w in Just(w), h in Just(h)) -> (usize, usize, Vec<f64>) {
        (w, h, v)
    }
}

prop_compose! {
    /// Map with a handful of distinct levels so ties are common.
    fn tied_values(max_w: usize, max_h: usize)(w in 2..=max_w, h in 2..=max_h)
        (v in prop::collection::vec(0u8..5, w * h), w in Just(w), h in Just(h)) -> (usize, usize, Vec<f64>) {
        (w, h, v.into_iter().map(f64::from).collect())
    }
}

prop_compose! {
    fn map_and_fix(max_w: usize, max_h: usize)((w, h, v) in values(max_w, max_h))
        (fix in prop::collection::vec((0..w, 0..h), 1..6), w in Just(w), h in Just(h), v in Just(v.clone()))
        -> (usize, usize, Vec<f64>, Vec<(usize, usize)>) {
        (w, h, v, fix)
    }
}

fn non_constant(v: &[f64]) -> bool {
    v.iter().any(|&x| x != v[0])
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn nss_matches_oracle_and_is_affine_invariant((w, h, v, fix) in map_and_fix(8, 8), a in 0.1f64..10.0, b in -5.0f64..5.0) {
        prop_assume!(non_constant(&v));
        let g = grid(w, h, v.clone());
        let n = nss(&g, &px(&fix)).unwrap();
        prop_assert!(rel_close(n, nss_oracle(&v, w, &fix), TOL));
        let t = nss(&g.map(|x| a * x + b), &px(&fix)).unwrap();
        prop_assert!(rel_close(n, t, TOL), "{n} vs {t}");
    }

    #[test]
    fn auc_judd_matches_counting_oracle((w, h, v) in tied_values(6, 6), seed in any::<u64>()) {
        let fix: Vec<(usize, usize)> = (0..1 + seed as usize % 5).map(|k| {
            let i = (seed as usize / 7 + k * 13) % (w * h);
            (i % w, i / w)
        }).collect();
        prop_assume!(fix.iter().collect::<std::collections::BTreeSet<_>>().len() < w * h);
        let got = auc_judd(&grid(w, h, v.clone()), &px(&fix)).unwrap();
        prop_assert!(rel_close(got, auc_judd_oracle(&v, w, &fix), TOL));
        prop_assert!((0.0..=1.0).contains(&got));
    }

    #[test]
    fn auc_judd_is_invariant_to_monotone_transforms((w, h, v, fix) in map_and_fix(7, 7)) {
        prop_assume!(fix.iter().collect::<std::collections::BTreeSet<_>>().len() < w * h);
        let g = grid(w, h, v.clone());
        let a = auc_judd(&g, &px(&fix)).unwrap();
        let b = auc_judd(&g.map(|x| (3.0 * x).exp() + 1.0), &px(&fix)).unwrap();
        prop_assert!(rel_close(a, b, TOL));
    }

    #[test]
    fn constant_map_auc_is_half((w, h, _v, fix) in map_and_fix(6, 6), c in 0.0f64..3.0) {
        prop_assume!(fix.iter().collect::<std::collections::BTreeSet<_>>().len() < w * h);
        prop_assert_eq!(auc_judd(&grid(w, h, vec![c; w * h]), &px(&fix)).unwrap(), 0.5);
    }

    #[test]
    fn shuffled_auc_replays_sampler((w, h, v, fix) in map_and_fix(6, 6),
                                    pool_seed in any::<u64>(), splits in 1usize..6, seed in any::<u64>()) {
        let pool: Vec<(usize, usize)> = (0..1 + pool_seed as usize % 12).map(|k| {
            let i = (pool_seed as usize / 3 + k * 7) % (w * h);
            (i % w, i / w)
        }).collect();
        let got = shuffled_auc(&grid(w, h, v.clone()), &px(&fix), &px(&pool), splits, seed).unwrap();
        prop_assert!(rel_close(got, sauc_replay(&v, w, &fix, &pool, splits, seed), TOL));
    }

    #[test]
    fn sim_is_symmetric_and_self_one((w, h, a) in values(7, 7), b in prop::collection::vec(0.0f64..1.0, 49)) {
        prop_assume!(a.iter().sum::<f64>() > 0.0 && b[..w * h].iter().sum::<f64>() > 0.0);
        let ma = SaliencyMap::normalize(grid(w, h, a)).unwrap().into_grid();
        let mb = SaliencyMap::normalize(grid(w, h, b[..w * h].to_vec())).unwrap().into_grid();
        prop_assert!((sim(&ma, &ma).unwrap() - 1.0).abs() <= TOL);
        let (ab, ba) = (sim(&ma, &mb).unwrap(), sim(&mb, &ma).unwrap());
        prop_assert!((ab - ba).abs() <= TOL);
        prop_assert!((0.0..=1.0 + TOL).contains(&ab));
        prop_assert!((sim_distance(&ma, &mb).unwrap() - (1.0 - ab)).abs() <= TOL);
        prop_assert_eq!(sim_distance(&ma, &ma).unwrap(), 0.0);
    }

    #[test]
    fn spearman_matches_rank_pearson(xs in prop::collection::vec(0u8..6, 3..12), seed in any::<u64>()) {
        let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
        let ys: Vec<f64> = (0..xs.len()).map(|i| ((seed >> (i % 60)) & 7) as f64).collect();
        prop_assume!(non_constant(&xs) && non_constant(&ys));
        let r = spearman(&xs, &ys).unwrap();
        prop_assert!(rel_close(r, spearman_oracle(&xs, &ys), TOL));
        prop_assert!((-1.0 - TOL..=1.0 + TOL).contains(&r));
        let mono: Vec<f64> = xs.iter().map(|x| x * x * x + 2.0).collect();
        prop_assert!((spearman(&xs, &mono).unwrap() - 1.0).abs() <= TOL);
    }

    #[test]
    fn dtw_matches_exhaustive_search(n in 1usize..=4, m in 1usize..=5, c in prop::collection::vec(0.0f64..1.0, 20)) {
        let cost: Vec<Vec<f64>> = (0..n).map(|i| c[i * m..(i + 1) * m].to_vec()).collect();
        let r = dtw_from_costs(&cost, PathNormalization::AlignedPairs);
        let (total, pairs) = dtw_exhaustive(&cost);
        prop_assert!(rel_close(r.total_cost, total, TOL));
        prop_assert_eq!(r.path.len(), pairs);
        prop_assert!(rel_close(r.distance, total / pairs as f64, TOL));
        prop_assert_eq!(r.path[0], (0, 0));
        prop_assert_eq!(*r.path.last().unwrap(), (n - 1, m - 1));
        for s in r.path.windows(2) {
            let (di, dj) = (s[1].0 - s[0].0, s[1].1 - s[0].1);
            prop_assert!(di <= 1 && dj <= 1 && di + dj >= 1);
        }
        let steps = dtw_from_costs(&cost, PathNormalization::Steps);
        prop_assert!(rel_close(steps.distance, steps.total_cost / (steps.path.len() - 1).max(1) as f64, TOL));
    }

    #[test]
    fn dtw_of_salmap_sequences_is_bounded_symmetric_and_zero_on_self(
        pts in prop::collection::vec((0usize..6, 0usize..5), 2..7), split in 1usize..6
    ) {
        use gazekit::temporal::{dtw_distance, AttentionSequence};
        let frames: Vec<SaliencyMap> = pts.iter().map(|&(x, y)| fixations_to_salmap(&[Pixel::new(x, y)], 6, 5, 1.0).unwrap()).collect();
        let k = split.min(frames.len() - 1);
        let a = AttentionSequence::new(frames[..k].to_vec(), (0..k).collect()).unwrap();
        let b = AttentionSequence::new(frames[k..].to_vec(), (0..frames.len() - k).collect()).unwrap();
        let self_d = dtw_distance(&a, &a, PathNormalization::AlignedPairs).unwrap();
        prop_assert!(self_d.distance.abs() <= TOL);
        let ab = dtw_distance(&a, &b, PathNormalization::AlignedPairs).unwrap().distance;
        let ba = dtw_distance(&b, &a, PathNormalization::AlignedPairs).unwrap().distance;
        prop_assert!((-TOL..=1.0 + TOL).contains(&ab));
        prop_assert!((ab - ba).abs() <= TOL);
    }

    #[test]
    fn components_match_flood_fill(w in 1usize..=16, h in 1usize..=16, bits in prop::collection::vec(any::<bool>(), 256)) {
        let bits = bits[..w * h].to_vec();
        let mask = BinaryMask { width: w, height: h, bits: bits.clone() };
        let got = connected_components(&mask);
        let want = flood_fill(&bits, w, h);
        prop_assert_eq!(got.len(), want.len());
        let mut covered = 0;
        for (k, (g, o)) in got.iter().zip(&want).enumerate() {
            prop_assert_eq!(g.label, k + 1);
            let pix: Vec<(usize, usize)> = g.pixels.iter().map(|p| (p.x, p.y)).collect();
            prop_assert_eq!(&pix, o);
            covered += pix.len();
        }
        prop_assert_eq!(covered, bits.iter().filter(|&&b| b).count());
    }

    #[test]
    fn top_percent_matches_sort_and_is_monotone((w, h, v) in tied_values(10, 10), p in 0.5f64..99.5, q in 0.5f64..99.5) {
        let g = grid(w, h, v.clone());
        let m = top_percent_mask(&g, p);
        prop_assert_eq!(&m.bits, &top_percent_sorted(&v, p));
        prop_assert!(m.count() >= top_count(w * h, p));
        let (lo, hi) = if p < q { (p, q) } else { (q, p) };
        let (a, b) = (top_percent_mask(&g, lo), top_percent_mask(&g, hi));
        prop_assert!(a.bits.iter().zip(&b.bits).all(|(x, y)| !x || *y));
    }

    #[test]
    fn wta_matches_masked_argmax((w, h, v) in values(12, 12), n in 1usize..8, r in 0.0f64..4.0, floor in 0.0f64..0.5) {
        let got = wta_select(&grid(w, h, v.clone()), n, r, floor);
        let want = wta_masked(&v, w, h, n, r, floor);
        match got {
            Ok(set) => {
                let pix: Vec<(usize, usize)> = set.locations().iter().map(|p| (p.x, p.y)).collect();
                prop_assert_eq!(&pix, &want);
                for (i, a) in pix.iter().enumerate() {
                    for b in &pix[i + 1..] {
                        let d2 = ((a.0 as f64 - b.0 as f64).powi(2) + (a.1 as f64 - b.1 as f64).powi(2)).sqrt();
                        prop_assert!(d2 > r);
                    }
                }
                let vals: Vec<f64> = pix.iter().map(|&(x, y)| v[y * w + x]).collect();
                prop_assert!(vals.windows(2).all(|s| s[0] >= s[1]));
            }
            Err(_) => prop_assert!(want.is_empty()),
        }
    }

    #[test]
    fn patch_matches_cellwise_bilinear((w, h, v) in values(8, 8), t in prop::array::uniform4(-1.5f64..1.5),
                                      c in (-1.0f64..1.0, -1.0f64..1.0), p in 1usize..6) {
        let stack = FloatGridStack::new(1, w, h, v.clone()).unwrap();
        let aff = AffineParams { theta: [[t[0], t[1]], [t[2], t[3]]], center: c };
        let got = sample_patch(&stack, &aff, p).unwrap();
        let want = patch_oracle(&v, w, h, aff.theta, c, p);
        for (a, b) in got.data().iter().zip(&want) {
            prop_assert!((a - b).abs() <= TOL);
        }
    }

    #[test]
    fn patch_sampling_is_linear_and_identity_preserving((w, h, a) in values(7, 7), b in prop::collection::vec(-1.0f64..1.0, 49),
                                                        k in -3.0f64..3.0, t in prop::array::uniform4(-1.0f64..1.0)) {
        let b = b[..w * h].to_vec();
        let aff = AffineParams { theta: [[t[0], t[1]], [t[2], t[3]]], center: (0.1, -0.2) };
        let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + k * y).collect();
        let s = |v: &[f64], af: &AffineParams, p: usize| sample_patch(&FloatGridStack::new(1, w, h, v.to_vec()).unwrap(), af, p).unwrap().data().to_vec();
        let (pa, pb, pc) = (s(&a, &aff, 4), s(&b, &aff, 4), s(&combo, &aff, 4));
        for i in 0..16 {
            prop_assert!((pc[i] - (pa[i] + k * pb[i])).abs() <= TOL);
        }
        let sq: Vec<f64> = a[..w.min(h) * w.min(h)].to_vec();
        let n = w.min(h);
        let id = sample_patch(&FloatGridStack::new(1, n, n, sq.clone()).unwrap(), &AffineParams::IDENTITY, n).unwrap();
        for (x, y) in id.data().iter().zip(&sq) {
            prop_assert!((x - y).abs() <= TOL);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn salmap_matches_direct_sum_and_ignores_order(pts in prop::collection::vec((0usize..9, 0usize..7), 1..5), sigma in 0.4f64..2.5) {
        let m = fixations_to_salmap(&px(&pts), 9, 7, sigma).unwrap();
        prop_assert!((m.as_grid().sum() - 1.0).abs() <= TOL);
        let want = gaussian_direct(&pts, 9, 7, sigma);
        for (a, b) in m.as_grid().values().iter().zip(&want) {
            prop_assert!((a - b).abs() <= TOL);
        }
        let mut rev = pts.clone();
        rev.reverse();
        let r = fixations_to_salmap(&px(&rev), 9, 7, sigma).unwrap();
        for (a, b) in m.as_grid().values().iter().zip(r.as_grid().values()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn average_map_matches_elementwise_mean(maps in prop::collection::vec(prop::collection::vec(0.01f64..1.0, 12), 1..5)) {
        let sm: Vec<SaliencyMap> = maps.iter().map(|v| SaliencyMap::normalize(grid(4, 3, v.clone())).unwrap()).collect();
        let norm: Vec<Vec<f64>> = sm.iter().map(|m| m.as_grid().values().to_vec()).collect();
        let got = average_map(&sm).unwrap();
        for (a, b) in got.as_grid().values().iter().zip(mean_maps(&norm)) {
            prop_assert!((a - b).abs() <= TOL);
        }
    }

    #[test]
    fn soft_attention_weights_match_softmax(feats in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 1..6),
                                            state in prop::collection::vec(-2.0f64..2.0, 3)) {
        let r = soft_attention(&feats, &state, &DotScorer, PoolingMode::Convex).unwrap();
        let scores: Vec<f64> = feats.iter().map(|f| f.iter().zip(&state).map(|(a, b)| a * b).sum()).collect();
        let want = softmax(&scores);
        prop_assert!((r.weights.iter().sum::<f64>() - 1.0).abs() <= TOL);
        for (a, b) in r.weights.iter().zip(&want) {
            prop_assert!((a - b).abs() <= TOL);
        }
        for d in 0..3 {
            let lo = feats.iter().map(|f| f[d]).fold(f64::INFINITY, f64::min);
            let hi = feats.iter().map(|f| f[d]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(r.pooled[d] >= lo - TOL && r.pooled[d] <= hi + TOL);
        }
        let lit = soft_attention(&feats, &state, &DotScorer, PoolingMode::MeanScaled).unwrap();
        for (a, b) in lit.pooled.iter().zip(&r.pooled) {
            prop_assert!((a * feats.len() as f64 - b).abs() <= TOL);
        }
    }

    #[test]
    fn bin_weights_match_interval_oracle(durs in prop::collection::vec((0u32..400, 0u32..900), 1..8), bin in 50.0f64..700.0) {
        let mut t = 0.0;
        let mut fixations = Vec::new();
        let mut spans = Vec::new();
        for (gap, d) in durs {
            let s = t + gap as f64;
            let e = s + d as f64;
            spans.push((s, e));
            fixations.push(Fixation { subject_id: "s".into(), image_id: "i".into(), t_start: s, t_end: e, x: 0.0, y: 0.0 });
            t = e;
        }
        let session = GazeSession { subject_id: "s".into(), image_id: "i".into(), task: Task::Free, fixations };
        let got = bin_weights(&session, bin).unwrap();
        let want = bin_oracle(&spans, bin);
        prop_assert_eq!(got.len(), want.len());
        let mut per_fix = vec![0.0; spans.len()];
        for (b, row) in got.iter().enumerate() {
            let mut dense = vec![0.0; spans.len()];
            for &(i, wgt) in row {
                dense[i] += wgt;
                per_fix[i] += wgt;
            }
            for (a, e) in dense.iter().zip(&want[b]) {
                prop_assert!((a - e).abs() <= TOL);
            }
        }
        for s in per_fix {
            prop_assert!((s - 1.0).abs() <= TOL);
        }
    }

    #[test]
    fn foveate_stays_within_input_range(v in prop::collection::vec(0.0f64..1.0, 3 * 48), cx in 0usize..8, cy in 0usize..6, r0 in 0.5f64..4.0) {
        let img = RgbImage::new(8, 6, v.clone()).unwrap();
        let out = foveate(&img, Pixel::new(cx, cy), 4, r0).unwrap();
        for c in 0..3 {
            let ch = img.channel(c);
            let (lo, hi) = ch.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, &x| (a.0.min(x), a.1.max(x)));
            for &x in out.channel(c).values() {
                prop_assert!(x >= lo - TOL && x <= hi + TOL);
            }
        }
        prop_assert_eq!(out.pixel(Pixel::new(cx, cy)), img.pixel(Pixel::new(cx, cy)));
    }

    #[test]
    fn fgrid_roundtrips(c in 1usize..4, w in 1usize..6, h in 1usize..6, v in prop::collection::vec(-1e6f64..1e6, 90)) {
        let data: Vec<f64> = v[..c * w * h].iter().map(|x| *x as f32 as f64).collect();
        let s = FloatGridStack::new(c, w, h, data).unwrap();
        prop_assert_eq!(read_fgrid(&write_fgrid(&s)).unwrap(), s);
    }

    #[test]
    fn fixation_log_roundtrips(rows in prop::collection::vec((0u32..5, 0u32..5, 0u32..5000, 0u32..800, 0u32..400, 0u32..300), 1..20)) {
        let recs: Vec<Fixation> = rows.iter().map(|&(s, i, t, d, x, y)| Fixation {
            subject_id: format!("s{s}"),
            image_id: format!("img{i}"),
            t_start: t as f64,
            t_end: (t + d) as f64,
            x: x as f64 + 0.25,
            y: y as f64 + 0.5,
        }).collect();
        prop_assert_eq!(parse_fixation_log(&write_fixation_log(&recs)).unwrap(), recs);
    }
}

#[test]
fn grid_helpers_agree_with_oracle() {
    let g = Grid::from_fn(3, 2, |x, y| (x + 3 * y) as f64);
    assert_eq!(g.bilinear_zero(0.5, 0.5), bilinear_oracle(g.values(), 3, 2, 0.5, 0.5));
    assert_eq!(g.bilinear_zero(-0.5, 1.0), bilinear_oracle(g.values(), 3, 2, -0.5, 1.0));
}
