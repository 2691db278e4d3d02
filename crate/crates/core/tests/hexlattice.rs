use std::collections::HashSet;

use hexmix::*;
use proptest::prelude::*;

fn states(a: i64, b: i64, c: i64) -> Vec<HeightField> {
    enumerate_all(&make_domain(a, b, c).unwrap(), 100_000).unwrap()
}

/// Flippable sites by trying every ±1 change and checking admissibility.
fn brute_flippable(f: &HeightField) -> HashSet<(i32, i32)> {
    f.domain()
        .vertices()
        .into_iter()
        .filter(|&(x, y)| {
            [-1, 1].iter().any(|&s| f.with_value(x, y, f.at(x, y) + s).map(|g| g.is_admissible()).unwrap_or(false))
        })
        .collect()
}

/// Independent count: tilings of (a, b, c) are families of b non-crossing
/// level paths; count them as boxed plane partitions by a transfer over
/// weakly decreasing rows.
fn plane_partitions(a: usize, b: usize, c: usize) -> u128 {
    fn rows(len: usize, max: usize) -> Vec<Vec<usize>> {
        if len == 0 {
            return vec![vec![]];
        }
        (0..=max).flat_map(|v| rows(len - 1, v).into_iter().map(move |mut r| {
            r.insert(0, v);
            r
        })).collect()
    }
    let all = rows(b, c);
    let mut ways: Vec<u128> = vec![1; all.len()];
    for _ in 1..a {
        ways = all
            .iter()
            .map(|r| all.iter().zip(&ways).filter(|(p, _)| p.iter().zip(r).all(|(x, y)| x >= y)).map(|(_, w)| w).sum())
            .collect();
    }
    ways.iter().sum()
}

#[test]
fn domain_examples() {
    let d = make_domain(1, 1, 1).unwrap();
    assert_eq!(d.vertex_count(), 7);
    assert_eq!(make_domain(2, 2, 2).unwrap().lozenge_count(), 12);
    for n in 1..6 {
        assert_eq!(make_domain(n, n, n).unwrap().lozenge_count() as i64, 3 * n * n);
    }
    assert!(make_domain(1, 1, 0).is_err());
    assert!(make_domain(-1, 2, 2).is_err());
}

#[test]
fn counts_agree_with_independent_recursion() {
    for (a, b, c) in [(1, 1, 1), (2, 1, 1), (2, 2, 2), (3, 2, 1), (2, 3, 2), (3, 3, 2)] {
        let n = states(a, b, c).len() as u128;
        assert_eq!(n, plane_partitions(a as usize, b as usize, c as usize), "({a},{b},{c})");
        assert_eq!(Some(n), boxed_plane_partitions(a as u32, b as u32, c as u32));
    }
    assert_eq!(boxed_plane_partitions(3, 3, 3), Some(980));
}

#[test]
fn enumeration_refuses_overflow() {
    let d = make_domain(2, 2, 2).unwrap();
    assert!(matches!(enumerate_all(&d, 19), Err(Error::EnumerationLimit(19))));
    assert_eq!(enumerate_all(&d, 20).unwrap().len(), 20);
    assert_eq!(distinct(&enumerate_all(&d, 20).unwrap()).len(), 20);
}

#[test]
fn extremes_and_volumes() {
    let d = make_domain(1, 1, 1).unwrap();
    let (min, max) = extreme_tilings(&d);
    assert_eq!((min.at(1, 1), max.at(1, 1)), (0, 1));
    assert_eq!((volume(&min), volume(&max)), (3, 4));
    assert_eq!(local_bounds(&max, 1, 1).unwrap(), (0, 1));
    assert_eq!(local_bounds(&max, 0, 0).unwrap(), (0, 0));

    let d = make_domain(2, 2, 2).unwrap();
    let (min, max) = extreme_tilings(&d);
    assert_eq!(volume(&max) - volume(&min), 8);
    for f in states(2, 2, 2) {
        assert!(min.leq(&f) && f.leq(&max));
        assert!(volume(&min) <= volume(&f) && volume(&f) <= volume(&max));
        for (x, y) in d.vertices() {
            if d.is_boundary(x, y) {
                assert_eq!(min.at(x, y), max.at(x, y));
            }
        }
    }
}

#[test]
fn flippable_matches_brute_force() {
    for (a, b, c) in [(1, 1, 1), (2, 1, 1), (2, 2, 2), (3, 2, 1)] {
        for f in states(a, b, c) {
            let fast: HashSet<(i32, i32)> = flippable(&f).iter().map(|s| (s.x, s.y)).collect();
            assert_eq!(fast, brute_flippable(&f));
            for s in flippable(&f) {
                assert_eq!(s.h_max - s.h_min, 1);
                let other = if f.at(s.x, s.y) == s.h_min { s.h_max } else { s.h_min };
                let g = f.with_value(s.x, s.y, other).unwrap();
                assert!(g.is_admissible());
                assert_eq!((volume(&g) - volume(&f)).abs(), 1);
                assert!(flippable(&g).iter().any(|t| (t.x, t.y) == (s.x, s.y)));
            }
        }
    }
    let d = make_domain(1, 1, 1).unwrap();
    for f in states(1, 1, 1) {
        assert_eq!(flippable(&f).iter().map(|s| (s.x, s.y)).collect::<Vec<_>>(), vec![(1, 1)]);
    }
    let (min, _) = extreme_tilings(&make_domain(2, 2, 2).unwrap());
    assert_eq!(flippable(&min).len(), 1);
    assert_eq!(d.interior().len(), 1);
}

#[test]
fn meet_join_is_a_lattice_on_all_pairs() {
    let all = states(2, 2, 2);
    for f in &all {
        assert_eq!(meet_join(f, f).unwrap(), (f.clone(), f.clone()));
        for g in &all {
            let (m, j) = meet_join(f, g).unwrap();
            assert!(m.is_admissible() && j.is_admissible());
            assert!(m.leq(f) && m.leq(g) && f.leq(&j) && g.leq(&j));
            if f.leq(g) && g.leq(f) {
                assert_eq!(f, g);
            }
            for h in &all {
                if h.leq(f) && h.leq(g) {
                    assert!(h.leq(&m));
                }
            }
        }
    }
    let (min, max) = extreme_tilings(all[0].domain());
    assert_eq!(meet_join(&min, &max).unwrap(), (min, max));
    let other = states(2, 1, 1);
    assert!(matches!(meet_join(&all[0], &other[0]), Err(Error::DomainMismatch)));
}

#[test]
fn symmetries_are_involutive_bijections() {
    let all = states(2, 2, 2);
    let set = distinct(&all);
    let (min, max) = extreme_tilings(all[0].domain());
    assert_eq!(symmetry_apply(&max, Symmetry::Complement).unwrap(), min);
    for s in [Symmetry::Complement, Symmetry::Transpose, Symmetry::ComplementTranspose] {
        let images: Vec<_> = all.iter().map(|f| symmetry_apply(f, s).unwrap()).collect();
        assert!(images.iter().all(|g| g.is_admissible()));
        assert_eq!(distinct(&images), set);
    }
    for f in &all {
        for s in [Symmetry::Complement, Symmetry::Transpose] {
            assert_eq!(&symmetry_apply(&symmetry_apply(f, s).unwrap(), s).unwrap(), f);
        }
    }
    let skew = states(3, 2, 1);
    assert!(matches!(symmetry_apply(&skew[0], Symmetry::Transpose), Err(Error::IncompatibleSymmetry(_))));
}

#[test]
fn level_lines_round_trip() {
    for (a, b, c) in [(1, 1, 1), (2, 2, 2), (3, 2, 1), (2, 3, 2)] {
        let d = make_domain(a, b, c).unwrap();
        for f in states(a, b, c) {
            let lines = level_lines(&f).unwrap();
            assert_eq!(lines.len(), b as usize);
            for (k, l) in lines.iter().enumerate() {
                assert_eq!(l.level, k as i32 + 1);
                assert_eq!(l.steps.len(), (a + c) as usize);
            }
            // disjoint: strictly stacked in every column
            for w in lines.windows(2) {
                assert!(w[0].ordinates().iter().zip(w[1].ordinates()).all(|(p, q)| *p < q));
            }
            assert_eq!(reconstruct(&d, &lines).unwrap(), f);
        }
    }
    let (_, max) = extreme_tilings(&make_domain(1, 1, 1).unwrap());
    let l = extract_level_line(&max, 1).unwrap();
    assert_eq!(l.start, (0, 0));
    assert_eq!(l.ordinates(), vec![0, 0, 1]);
    assert!(matches!(extract_level_line(&max, 2), Err(Error::LevelOutOfRange { .. })));
}

#[test]
fn grid_text_round_trip_is_bit_exact() {
    for f in states(2, 2, 2).into_iter().chain(states(3, 2, 1)) {
        let text = to_grid_text(&f);
        let back = parse_grid_text(&text).unwrap();
        assert_eq!(back, f);
        assert_eq!(to_grid_text(&back), text);
    }
    let (_, max) = extreme_tilings(&make_domain(1, 1, 1).unwrap());
    assert_eq!(to_grid_text(&max), "hex 1 1 1\n0 0 .\n1 1 0\n. 1 1\n");
    for bad in ["hex 1 1 1\n0 0 .\n1 2 0\n. 1 1\n", "hex 1 1 1\n0 0 .\n1 1 0\n", "hex 1 1 1\n0 0 .\n1 01 0\n. 1 1\n"] {
        assert!(parse_grid_text(bad).is_err(), "{bad:?}");
    }
}

proptest! {
    #[test]
    fn random_flip_walks_stay_admissible(seed in any::<u64>(), steps in 1usize..200) {
        let d = make_domain(3, 2, 4).unwrap();
        let (min, max) = extreme_tilings(&d);
        let mut f = min.clone();
        let mut s = seed;
        for _ in 0..steps {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let sites = flippable(&f);
            let site = sites[(s >> 33) as usize % sites.len()];
            let other = if f.at(site.x, site.y) == site.h_min { site.h_max } else { site.h_min };
            f = f.with_value(site.x, site.y, other).unwrap();
            prop_assert!(f.is_admissible());
            prop_assert!(min.leq(&f) && f.leq(&max));
        }
        let text = to_grid_text(&f);
        prop_assert_eq!(parse_grid_text(&text).unwrap(), f.clone());
        prop_assert_eq!(reconstruct(&d, &level_lines(&f).unwrap()).unwrap(), f);
    }
}
