use hexmix::harness::par_map;
use hexmix::rng::replica_seed;
use hexmix::*;
use proptest::prelude::*;

fn unit() -> std::sync::Arc<HexDomain> {
    make_domain(1, 1, 1).unwrap()
}

#[test]
fn heat_bath_examples() {
    let d = make_domain(2, 2, 2).unwrap();
    let cfg = ChainConfig::new(&d, 0);
    let (min, _) = extreme_tilings(&d);
    let site = flippable(&min)[0];
    assert_eq!(heat_bath_update(&min, site.x, site.y, 0.3, &cfg).unwrap().at(site.x, site.y), site.h_max);
    assert_eq!(heat_bath_update(&min, site.x, site.y, 0.7, &cfg).unwrap().at(site.x, site.y), site.h_min);
    for &i in d.interior() {
        let (x, y) = d.vertex(i as usize);
        if (x, y) != (site.x, site.y) {
            assert_eq!(heat_bath_update(&min, x, y, 0.1, &cfg).unwrap(), min);
        }
    }
    assert!(matches!(heat_bath_update(&min, 9, 0, 0.5, &cfg), Err(Error::OutsideDomain(9, 0))));

    // threshold moves with the tilt: p_up = 1/(1 + e^{-q/N})
    let tilted = ChainConfig::new(&d, 0).with_q(2.0);
    let p = 1.0 / (1.0 + (-1.0f64).exp());
    assert!((tilted.p_up() - p).abs() < 1e-15);
    assert_eq!(heat_bath_update(&min, site.x, site.y, p - 1e-9, &tilted).unwrap().at(site.x, site.y), site.h_max);
    assert_eq!(heat_bath_update(&min, site.x, site.y, p + 1e-9, &tilted).unwrap().at(site.x, site.y), site.h_min);
}

#[test]
fn updates_respect_floor_and_ceiling() {
    let d = make_domain(2, 2, 2).unwrap();
    let all = enumerate_all(&d, 100).unwrap();
    let (floor, ceiling) = (&all[3], &all[15]);
    assert!(floor.leq(ceiling));
    let cfg = ChainConfig::new(&d, 5).with_floor(floor.clone()).with_ceiling(ceiling.clone());
    let tr = run(&cfg, floor, 200.0, &(1..200).map(|t| t as f64).collect::<Vec<_>>()).unwrap();
    for s in &tr.snapshots {
        assert!(floor.leq(&s.field) && s.field.leq(ceiling) && s.field.is_admissible());
    }
    let mut chain = Chain::new(&cfg, floor).unwrap();
    chain.advance_with(100.0, |_, _, h| {
        let f = HeightField::from_grid(&d, h.to_vec()).unwrap();
        assert!(floor.leq(&f) && f.leq(ceiling));
    });
    let outside = all.iter().find(|f| !floor.leq(f)).unwrap();
    assert!(run(&cfg, outside, 1.0, &[]).is_err());
}

#[test]
fn run_examples() {
    let d = make_domain(2, 2, 2).unwrap();
    let (min, _) = extreme_tilings(&d);
    let cfg = ChainConfig::new(&d, 42);
    let tr = run(&cfg, &min, 0.0, &[]).unwrap();
    assert_eq!(tr.snapshots.len(), 1);
    assert_eq!(tr.last(), &min);

    let frozen = cfg.clone().with_floor(min.clone()).with_ceiling(min.clone());
    let tr = run(&frozen, &min, 50.0, &[10.0, 20.0]).unwrap();
    assert!(tr.snapshots.iter().all(|s| s.field == min));

    let a = run(&cfg, &min, 30.0, &[5.0, 10.0]).unwrap();
    let b = run(&cfg, &min, 30.0, &[5.0, 10.0]).unwrap();
    assert_eq!(a, b);
    assert_eq!(trajectory_to_text(&a), trajectory_to_text(&b));
    assert_ne!(run(&cfg.clone().with_seed(43), &min, 30.0, &[]).unwrap().events, 0);
    assert!(run(&cfg, &min, 5.0, &[6.0]).is_err());
}

#[test]
fn trajectory_text_round_trip() {
    let d = make_domain(3, 2, 2).unwrap();
    let (min, max) = extreme_tilings(&d);
    let cfg = ChainConfig::new(&d, 9).with_q(-0.7).with_ceiling(max);
    let tr = run(&cfg, &min, 12.5, &[0.1, 3.0, 7.25]).unwrap();
    let text = trajectory_to_text(&tr);
    let back = trajectory_from_text(&text).unwrap();
    assert_eq!(back, tr);
    assert_eq!(trajectory_to_text(&back), text);
    assert!(trajectory_from_text("# seed=1\n").is_err());
}

#[test]
fn two_state_occupation_is_balanced() {
    let d = unit();
    let (min, _) = extreme_tilings(&d);
    let horizon = 10_000.0;
    let mut chain = Chain::new(&ChainConfig::new(&d, 2024), &min).unwrap();
    let centre = d.index(1, 1);
    let (mut last_t, mut last_h, mut up_time) = (0.0, 0, 0.0);
    chain.advance_with(horizon, |ev, _, h| {
        up_time += (ev.time - last_t) * last_h as f64;
        last_t = ev.time;
        last_h = h[centre];
    });
    up_time += (horizon - last_t) * last_h as f64;
    let frac = up_time / horizon;
    // symmetric two-state chain switching at rate 1: Var ≈ 1/(4T)
    let sigma = (1.0 / (4.0 * horizon)).sqrt();
    assert!((frac - 0.5).abs() < 3.0 * sigma, "{frac}");
}

#[test]
fn grand_coupling_on_two_states() {
    let d = unit();
    let times: Vec<f64> = par_map(4000, |i| {
        let r = grand_coupling(&ChainConfig::new(&d, replica_seed(77, i as u64)), 100.0).unwrap();
        assert_eq!(r.events, 1);
        r.coalescence_time.unwrap()
    });
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    // first event of a single rate-2 clock
    assert!((mean - 0.5).abs() < 3.0 * 0.5 / (times.len() as f64).sqrt(), "{mean}");
}

#[test]
fn coupled_pairs_stay_ordered_and_merged() {
    let d = make_domain(3, 3, 3).unwrap();
    let cfg = ChainConfig::new(&d, 31).with_q(0.4);
    let (min, max) = clipped_extremes(&cfg);
    let r = coupled_run(&cfg, &cfg, &min, &max, 2000.0, false).unwrap();
    let t = r.coalescence_time.expect("coalesces well before the horizon");
    assert!(t < 2000.0);
    assert_eq!(r.bottom, r.top);
    assert!(r.order_checks >= 10_000);
    let stopped = grand_coupling(&cfg, 2000.0).unwrap();
    assert_eq!(stopped.coalescence_time, Some(t));
    assert!(coupled_run(&cfg, &cfg, &max, &min, 1.0, false).is_err());
}

#[test]
fn independent_streams_break_order() {
    let d = make_domain(2, 2, 2).unwrap();
    assert!(harness::shuffled_stream_detected(&d, 3, 100.0));
}

#[test]
fn cftp_is_exact_on_two_states() {
    let d = unit();
    let n = 10_000;
    let ups: usize = par_map(n, |i| cftp_sample(&ChainConfig::new(&d, replica_seed(5, i as u64))).unwrap().at(1, 1) as usize)
        .into_iter()
        .sum();
    let sigma = (n as f64 * 0.25).sqrt();
    assert!((ups as f64 - n as f64 / 2.0).abs() < 3.0 * sigma, "{ups}");
}

#[test]
fn cftp_strong_tilt_returns_the_maximum() {
    let d = make_domain(2, 2, 2).unwrap();
    let (_, max) = extreme_tilings(&d);
    let hits = (0..200).filter(|&i| cftp_sample(&ChainConfig::new(&d, i).with_q(50.0)).unwrap() == max).count();
    assert!(hits >= 198, "{hits}");
}

#[test]
fn cftp_cap_is_an_error() {
    let d = make_domain(6, 6, 6).unwrap();
    assert!(matches!(cftp(&ChainConfig::new(&d, 1), 2), Err(Error::CftpCap(2))));
    let out = cftp(&ChainConfig::new(&d, 1), 40).unwrap();
    assert!(out.epochs >= 3);
    assert_eq!(out.start, -(0..out.epochs).map(epoch_length).sum::<f64>());
    assert_eq!(cftp(&ChainConfig::new(&d, 1), 40).unwrap().field, out.field);
}

#[test]
fn epoch_lengths_double() {
    assert_eq!((0..6).map(epoch_length).collect::<Vec<_>>(), vec![1.0, 1.0, 2.0, 4.0, 8.0, 16.0]);
}

fn half_mask(d: &HexDomain, left: bool) -> Vec<bool> {
    let mut m = vec![false; d.width() * d.rows()];
    for (x, y) in d.vertices() {
        m[d.index(x, y)] = (2 * x < d.width() as i32) == left;
    }
    m
}

#[test]
fn censoring_examples() {
    let d = make_domain(2, 2, 2).unwrap();
    let (min, max) = extreme_tilings(&d);
    let cfg = ChainConfig::new(&d, 8).with_q(0.3);
    let full = CensorSchedule {
        intervals: vec![
            CensorInterval { start: 0.0, end: 4.0, region: None, floor: None, ceiling: None },
            CensorInterval { start: 4.0, end: 10.0, region: None, floor: None, ceiling: None },
        ],
    };
    let times = [1.0, 4.0, 7.5];
    let censored = censored_run(&cfg, &full, &max, &times).unwrap();
    let plain = run(&cfg, &max, 10.0, &times).unwrap();
    assert_eq!(censored.snapshots, plain.snapshots);

    let empty = CensorSchedule {
        intervals: vec![CensorInterval {
            start: 0.0,
            end: 10.0,
            region: Some(vec![false; d.width() * d.rows()]),
            floor: None,
            ceiling: None,
        }],
    };
    assert!(censored_run(&cfg, &empty, &max, &times).unwrap().snapshots.iter().all(|s| s.field == max));

    let clipped = CensorSchedule {
        intervals: vec![CensorInterval { start: 0.0, end: 30.0, region: None, floor: None, ceiling: Some(max.clone()) }],
    };
    let tr = censored_run(&cfg.clone().with_floor(min.clone()), &clipped, &min, &[10.0, 20.0]).unwrap();
    assert!(tr.snapshots.iter().all(|s| s.field.leq(&max) && min.leq(&s.field)));

    let iv = |s: f64, e: f64| CensorInterval { start: s, end: e, region: None, floor: None, ceiling: None };
    for bad in [vec![iv(0.0, 1.0), iv(1.5, 2.0)], vec![iv(0.0, 1.0), iv(0.5, 2.0)], vec![iv(0.5, 1.0)], vec![iv(0.0, 0.0)]] {
        assert!(matches!(
            censored_run(&cfg, &CensorSchedule { intervals: bad }, &max, &[]),
            Err(Error::Schedule(_))
        ));
    }
}

#[test]
fn censoring_from_the_top_dominates() {
    let d = make_domain(2, 2, 2).unwrap();
    let (_, max) = extreme_tilings(&d);
    let sched = CensorSchedule {
        intervals: (0..6)
            .map(|k| CensorInterval {
                start: k as f64 * 0.25,
                end: (k + 1) as f64 * 0.25,
                region: Some(half_mask(&d, k % 2 == 0)),
                floor: None,
                ceiling: None,
            })
            .collect(),
    };
    let t = 1.0;
    let n = 10_000;
    let pairs: Vec<(i64, i64)> = par_map(n, |i| {
        let cfg = ChainConfig::new(&d, replica_seed(1234, i as u64));
        let c = censored_run(&cfg, &sched, &max, &[t]).unwrap();
        let c = c.snapshots.iter().find(|s| s.time == t).unwrap();
        let p = run(&cfg.clone().with_seed(replica_seed(4321, i as u64)), &max, t, &[]).unwrap();
        (volume(&c.field), volume(p.last()))
    });
    let vols: Vec<i64> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    let (lo, hi) = (*vols.iter().min().unwrap(), *vols.iter().max().unwrap());
    // empirical survival functions; the censored one must not fall below beyond noise
    let slack = 2.0 * ((2.0f64 / 1e-4).ln() / (2.0 * n as f64)).sqrt();
    let mut strict = false;
    for v in lo..=hi {
        let sc = pairs.iter().filter(|p| p.0 >= v).count() as f64 / n as f64;
        let su = pairs.iter().filter(|p| p.1 >= v).count() as f64 / n as f64;
        assert!(sc >= su - slack, "v={v}: censored {sc} vs free {su}");
        strict |= sc > su + slack;
    }
    assert!(strict, "censoring made no visible difference");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_updates_preserve_order(i in 0usize..20, j in 0usize..20, site in 0usize..7, u in 0.0f64..1.0, q in -2.0f64..2.0) {
        let d = make_domain(2, 2, 2).unwrap();
        let all = enumerate_all(&d, 100).unwrap();
        let (f, g) = if all[i].leq(&all[j]) { (&all[i], &all[j]) } else if all[j].leq(&all[i]) { (&all[j], &all[i]) } else { return Ok(()) };
        let cfg = ChainConfig::new(&d, 0).with_q(q);
        let (x, y) = d.vertex(d.interior()[site] as usize);
        let (a, b) = (heat_bath_update(f, x, y, u, &cfg).unwrap(), heat_bath_update(g, x, y, u, &cfg).unwrap());
        prop_assert!(a.leq(&b) && a.is_admissible() && b.is_admissible());
    }

    #[test]
    fn runs_are_deterministic(seed in any::<u64>(), horizon in 0.0f64..20.0) {
        let d = make_domain(2, 3, 2).unwrap();
        let (min, _) = extreme_tilings(&d);
        let cfg = ChainConfig::new(&d, seed).with_q(0.5);
        let a = run(&cfg, &min, horizon, &[horizon / 2.0]).unwrap();
        prop_assert_eq!(&a, &run(&cfg, &min, horizon, &[horizon / 2.0]).unwrap());
        prop_assert!(a.snapshots.iter().all(|s| s.field.is_admissible()));
    }
}
