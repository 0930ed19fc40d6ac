//! IoU scoring and optimal track/detection assignment.

use crate::geometry::BoundingBox;
use crate::scene::ObjectClass;
use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;

/// Intersection-over-union of two boxes, in [0, 1].
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    debug_assert!(a.w > 0.0 && a.h > 0.0 && b.w > 0.0 && b.h > 0.0);
    let (ax0, ay0, ax1, ay1) = a.corners();
    let (bx0, by0, bx1, by1) = b.corners();
    let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
    let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
    let inter = iw * ih;
    if inter == 0.0 {
        return 0.0;
    }
    let union = a.w * a.h + b.w * b.h - inter;
    // corner recomputation can overshoot by an ulp for identical boxes
    (inter / union).clamp(0.0, 1.0)
}

/// Outcome of one association round; indices refer to the input slices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Association {
    pub matches: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

const WEIGHT_SCALE: f64 = 1e9;

/// Matches tracks to detections maximizing total IoU (Kuhn-Munkres),
/// restricted to same-class pairs with IoU >= `iou_min`. Pairs failing the
/// gate contribute zero weight and are stripped from the result, so the
/// surviving matching is total-IoU-optimal over admissible pairs.
pub fn associate(
    tracks: &[(ObjectClass, BoundingBox)],
    detections: &[(ObjectClass, BoundingBox)],
    iou_min: f64,
) -> Association {
    debug_assert!((0.0..1.0).contains(&iou_min) && iou_min > 0.0);
    let nt = tracks.len();
    let nd = detections.len();
    if nt == 0 || nd == 0 {
        return Association {
            matches: vec![],
            unmatched_tracks: (0..nt).collect(),
            unmatched_detections: (0..nd).collect(),
        };
    }

    let gated = |ti: usize, di: usize| -> f64 {
        let (tc, tb) = &tracks[ti];
        let (dc, db) = &detections[di];
        if tc != dc {
            return 0.0;
        }
        let v = iou(tb, db);
        if v >= iou_min {
            v
        } else {
            0.0
        }
    };

    // kuhn_munkres needs rows <= columns; transpose when tracks dominate.
    let transposed = nt > nd;
    let (rows, cols) = if transposed { (nd, nt) } else { (nt, nd) };
    let weights: Vec<i64> = (0..rows)
        .flat_map(|r| {
            (0..cols).map(move |c| {
                let (ti, di) = if transposed { (c, r) } else { (r, c) };
                (gated(ti, di) * WEIGHT_SCALE).round() as i64
            })
        })
        .collect();
    let matrix = Matrix::from_vec(rows, cols, weights).expect("well-formed weight matrix");
    let (_, assignment) = kuhn_munkres(&matrix);

    let mut matches = Vec::new();
    let mut matched_tracks = vec![false; nt];
    let mut matched_detections = vec![false; nd];
    for (r, c) in assignment.into_iter().enumerate() {
        let (ti, di) = if transposed { (c, r) } else { (r, c) };
        if gated(ti, di) > 0.0 {
            matches.push((ti, di));
            matched_tracks[ti] = true;
            matched_detections[di] = true;
        }
    }
    matches.sort_unstable();
    Association {
        matches,
        unmatched_tracks: (0..nt).filter(|&i| !matched_tracks[i]).collect(),
        unmatched_detections: (0..nd).filter(|&i| !matched_detections[i]).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(cx: f64, cy: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(cx, cy, w, h)
    }

    #[test]
    fn iou_identical_and_disjoint() {
        let a = bb(10.0, 10.0, 4.0, 4.0);
        assert_eq!(iou(&a, &a), 1.0);
        let b = bb(100.0, 100.0, 4.0, 4.0);
        assert_eq!(iou(&a, &b), 0.0);
    }

    #[test]
    fn iou_offset_thirds() {
        // two 2x2 boxes offset by (1, 0): intersection 2, union 6
        let a = bb(1.0, 1.0, 2.0, 2.0);
        let b = bb(2.0, 1.0, 2.0, 2.0);
        assert!((iou(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_pair_matches_above_gate() {
        let t = [(ObjectClass::Chair, bb(10.0, 10.0, 10.0, 10.0))];
        let d = [(ObjectClass::Chair, bb(10.5, 10.0, 10.0, 10.0))];
        let a = associate(&t, &d, 0.3);
        assert_eq!(a.matches, vec![(0, 0)]);
        assert!(a.unmatched_tracks.is_empty());
        assert!(a.unmatched_detections.is_empty());
    }

    #[test]
    fn low_iou_leaves_both_unmatched() {
        let t = [(ObjectClass::Chair, bb(10.0, 10.0, 10.0, 10.0))];
        let d = [(ObjectClass::Chair, bb(19.0, 19.0, 10.0, 10.0))];
        let a = associate(&t, &d, 0.3);
        assert!(a.matches.is_empty());
        assert_eq!(a.unmatched_tracks, vec![0]);
        assert_eq!(a.unmatched_detections, vec![0]);
    }

    #[test]
    fn class_gate_blocks_cross_class_matches() {
        let t = [(ObjectClass::Chair, bb(10.0, 10.0, 10.0, 10.0))];
        let d = [(ObjectClass::Desk, bb(10.0, 10.0, 10.0, 10.0))];
        let a = associate(&t, &d, 0.3);
        assert!(a.matches.is_empty());
    }

    #[test]
    fn hungarian_beats_greedy_on_cross_case() {
        // greedy would grab the 0.6 pair first and strand the second track
        // with 0.5; optimal total is 0.55 + 0.55 = 1.1 > 0.6 + 0.5.
        // Construct boxes with those IoU values via overlap arithmetic.
        let t = [
            (ObjectClass::Chair, bb(0.0, 0.0, 10.0, 10.0)),
            (ObjectClass::Chair, bb(20.0, 0.0, 10.0, 10.0)),
        ];
        let d = [
            (ObjectClass::Chair, bb(2.0, 0.0, 10.0, 10.0)),
            (ObjectClass::Chair, bb(11.0, 0.0, 10.0, 10.0)),
        ];
        let a = associate(&t, &d, 0.05);
        let brute = brute_force(&t, &d, 0.05);
        assert_eq!(total_iou(&t, &d, &a.matches), brute);
    }

    fn total_iou(
        t: &[(ObjectClass, BoundingBox)],
        d: &[(ObjectClass, BoundingBox)],
        matches: &[(usize, usize)],
    ) -> f64 {
        matches.iter().map(|&(ti, di)| iou(&t[ti].1, &d[di].1)).sum()
    }

    /// Exhaustive best total IoU over all partial matchings.
    fn brute_force(
        tracks: &[(ObjectClass, BoundingBox)],
        detections: &[(ObjectClass, BoundingBox)],
        iou_min: f64,
    ) -> f64 {
        fn recurse(
            ti: usize,
            tracks: &[(ObjectClass, BoundingBox)],
            detections: &[(ObjectClass, BoundingBox)],
            used: &mut Vec<bool>,
            iou_min: f64,
        ) -> f64 {
            if ti == tracks.len() {
                return 0.0;
            }
            // option: leave this track unmatched
            let mut best = recurse(ti + 1, tracks, detections, used, iou_min);
            for di in 0..detections.len() {
                if used[di] || tracks[ti].0 != detections[di].0 {
                    continue;
                }
                let v = iou(&tracks[ti].1, &detections[di].1);
                if v < iou_min {
                    continue;
                }
                used[di] = true;
                best = best.max(v + recurse(ti + 1, tracks, detections, used, iou_min));
                used[di] = false;
            }
            best
        }
        let mut used = vec![false; detections.len()];
        recurse(0, tracks, detections, &mut used, iou_min)
    }

    #[test]
    fn iou_is_symmetric_and_bounded() {
        use proptest::prelude::*;
        let mut runner = proptest::test_runner::TestRunner::default();
        runner
            .run(
                &(
                    (0.0..100.0f64, 0.0..100.0f64, 1.0..50.0f64, 1.0..50.0f64),
                    (0.0..100.0f64, 0.0..100.0f64, 1.0..50.0f64, 1.0..50.0f64),
                ),
                |((ax, ay, aw, ah), (bx, by, bw, bh))| {
                    let a = bb(ax, ay, aw, ah);
                    let b = bb(bx, by, bw, bh);
                    let v = iou(&a, &b);
                    prop_assert!((0.0..=1.0).contains(&v));
                    prop_assert!((v - iou(&b, &a)).abs() < 1e-12);
                    // corner arithmetic may undershoot by ulps on
                    // irrational sizes; round pixel sizes stay exact
                    prop_assert!((iou(&a, &a) - 1.0).abs() < 1e-12);
                    Ok(())
                },
            )
            .unwrap();
    }

    #[test]
    fn optimality_matches_brute_force_up_to_six() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let classes = [ObjectClass::Chair, ObjectClass::Desk];
        for trial in 0..200 {
            let nt = rng.random_range(0..=6);
            let nd = rng.random_range(0..=6);
            let rand_box = |rng: &mut rand_chacha::ChaCha8Rng| {
                (
                    classes[rng.random_range(0..2)],
                    bb(
                        rng.random_range(0.0..60.0),
                        rng.random_range(0.0..60.0),
                        rng.random_range(5.0..20.0),
                        rng.random_range(5.0..20.0),
                    ),
                )
            };
            let tracks: Vec<_> = (0..nt).map(|_| rand_box(&mut rng)).collect();
            let dets: Vec<_> = (0..nd).map(|_| rand_box(&mut rng)).collect();

            let a = associate(&tracks, &dets, 0.1);
            // result is a matching
            let mut seen_t = std::collections::HashSet::new();
            let mut seen_d = std::collections::HashSet::new();
            for &(ti, di) in &a.matches {
                assert!(seen_t.insert(ti) && seen_d.insert(di), "trial {trial}");
            }
            assert_eq!(
                a.matches.len() + a.unmatched_tracks.len() + a.unmatched_detections.len(),
                nt + nd - a.matches.len()
            );
            // and it is optimal
            let got = total_iou(&tracks, &dets, &a.matches);
            let best = brute_force(&tracks, &dets, 0.1);
            assert!(
                (got - best).abs() < 1e-6,
                "trial {trial}: got {got}, brute force {best}"
            );
        }
    }
}
