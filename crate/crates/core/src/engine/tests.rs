use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::*;
use crate::stats::{ks_one_sample, ks_two_sample, mean_se};
use crate::stream::RngStream;

fn unit() -> Interval {
    Interval::unit()
}

fn symmetric() -> Interval {
    Interval::new(-1.0, 1.0).unwrap()
}

#[test]
fn grid_rejects_bad_steps() {
    assert!(GridSpec::new(1e-3, 1e-6).is_ok());
    assert!(GridSpec::new(1e-6, 1e-3).is_err());
    assert!(GridSpec::new(0.0, 0.0).is_err());
    assert!(GridSpec::new(f64::NAN, 1e-6).is_err());
    let g = GridSpec::for_interval(&Interval::new(0.0, 2.0).unwrap());
    assert_eq!((g.coarse_dt(), g.fine_dt()), (4e-3, 4e-6));
}

#[test]
fn path_on_a_tenth_grid() {
    let grid = GridSpec::new(0.1, 1e-4).unwrap();
    let mut rng = RngStream::derive(1, 0);
    let p = simulate_path(0.0, 1.0, &grid, &mut rng).unwrap();
    assert_eq!(p.len(), 11);
    assert_eq!(p.values()[0], 0.0);
    assert_eq!(p.horizon(), 1.0);
    assert!(simulate_path(0.0, 0.0, &grid, &mut rng).is_err());
    assert!(simulate_path(f64::INFINITY, 1.0, &grid, &mut rng).is_err());
}

#[test]
fn terminal_value_is_standard_normal() {
    let grid = GridSpec::new(0.1, 1e-4).unwrap();
    let mut rng = RngStream::derive(2, 0);
    let w: Vec<f64> = (0..100_000)
        .map(|_| {
            *simulate_path(0.0, 1.0, &grid, &mut rng)
                .unwrap()
                .values()
                .last()
                .unwrap()
        })
        .collect();
    let m = mean_se(&w).unwrap();
    let var = w.iter().map(|x| (x - m.mean) * (x - m.mean)).sum::<f64>() / (w.len() - 1) as f64;
    assert!(m.mean.abs() <= 0.01, "mean {}", m.mean);
    assert!((0.99..=1.01).contains(&var), "var {var}");
}

#[test]
fn bridge_midpoint_moments() {
    let mut rng = RngStream::derive(3, 0);
    let mids: Vec<f64> = (0..100_000)
        .map(|_| bridge_midpoint((0.0, 0.0), (1.0, 0.0), &mut rng).unwrap().1)
        .collect();
    let m = mean_se(&mids).unwrap();
    let var = mids.iter().map(|x| (x - m.mean) * (x - m.mean)).sum::<f64>() / (mids.len() - 1) as f64;
    assert!(m.mean.abs() <= 0.005);
    assert!((0.245..=0.255).contains(&var), "{var}");
    let shifted: Vec<f64> = (0..10_000)
        .map(|_| bridge_midpoint((0.0, 1.0), (2.0, 3.0), &mut rng).unwrap().1)
        .collect();
    let m = mean_se(&shifted).unwrap();
    assert!((m.mean - 2.0).abs() <= 3.0 * m.se);
    let (t, _) = bridge_midpoint((0.0, 1.0), (2.0, 3.0), &mut rng).unwrap();
    assert_eq!(t, 1.0);
    assert!(bridge_midpoint((1.0, 0.0), (1.0, 0.0), &mut rng).is_err());
}

/// Does a bridge from `x` to `y` over `h` reach `level` (< both)? Resolved
/// by bisection down to `floor`, pruning halves whose crossing chance is
/// negligible; no crossing probability is used at the leaves.
fn bridge_reaches<R: Rng>(x: f64, y: f64, h: f64, level: f64, floor: f64, rng: &mut R) -> bool {
    if x <= level || y <= level {
        return true;
    }
    if h <= floor || bridge_cross_prob(x, y, level, h) < 1e-14 {
        return false;
    }
    let m = bridge_midpoint((0.0, x), (h, y), rng).unwrap().1;
    bridge_reaches(x, m, 0.5 * h, level, floor, rng) || bridge_reaches(m, y, 0.5 * h, level, floor, rng)
}

#[test]
fn single_barrier_probability_matches_simulated_bridges() {
    assert_eq!(single_barrier_cross_prob(0.3, 0.3, 0.3, 1.0), 1.0);
    let (delta, dt) = (0.1, 0.05);
    let p = single_barrier_cross_prob(delta, delta, 0.0, dt);
    assert!((p - (-2.0 * delta * delta / dt).exp()).abs() < 1e-15);
    let mut rng = RngStream::derive(4, 0);
    let n = 100_000;
    let hits = (0..n)
        .filter(|_| bridge_reaches(delta, delta, dt, 0.0, 1e-10, &mut rng))
        .count() as f64;
    let est = hits / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!((est - p).abs() <= 3.0 * se, "{est} vs {p}");
    let mut last = 1.0;
    for k in 1..40 {
        let q = single_barrier_cross_prob(0.05 * k as f64, 0.05, 0.0, 0.01);
        assert!(q <= last);
        last = q;
    }
    assert!(last < 1e-8);
}

#[test]
fn exit_inside_a_straddling_step() {
    let path = SampledPath::new(vec![0.0, 0.1, 0.2], vec![0.5, 0.5, 1.2], 9).unwrap();
    let grid = GridSpec::new(0.1, 1e-6).unwrap();
    let e = detect_exit(&path, &unit(), 0.0, &grid).unwrap().unwrap();
    assert_eq!(e.side, Side::B);
    assert!(e.time > 0.1 && e.time <= 0.2);
}

#[test]
fn no_exit_far_from_the_boundary() {
    let path = SampledPath::new(vec![0.0, 1e-3, 2e-3], vec![0.5, 0.5, 0.5], 9).unwrap();
    let grid = GridSpec::new(1e-3, 1e-6).unwrap();
    assert!(detect_exit(&path, &unit(), 0.0, &grid).unwrap().is_none());
}

#[test]
fn hidden_crossing_frequency_matches_bridge_probability() {
    // Steps from 0.05 to 0.05 over 1e-3 in (0, 1): p_a = e^-5, p_b ~ 0.
    let scanner = Scanner::new(unit(), 1e-6);
    let p = scanner.hidden_crossing_prob(0.05, 0.05, 1e-3);
    assert!((p - (-5.0_f64).exp()).abs() < 1e-12);
    let n = 100_000u64;
    let mut hits = 0;
    let mut events = Vec::new();
    let mut points = Vec::new();
    for key in 0..n {
        events.clear();
        points.clear();
        scanner.resolve(
            crate::stream::mix(key),
            (0.0, 0.05),
            (1e-3, 0.05),
            false,
            &mut events,
            &mut points,
        );
        if events.iter().any(|c| c.leaves()) {
            hits += 1;
        }
    }
    let est = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!((est - p).abs() <= 3.0 * se, "{est} vs {p}");
}

fn exit_from<R: RngCore>(x: f64, interval: &Interval, grid: &GridSpec, rng: &mut R) -> f64 {
    let mut path = simulate_path(x, 1.0, grid, rng).unwrap();
    loop {
        if let Some(e) = detect_exit(&path, interval, 0.0, grid).unwrap() {
            return e.time;
        }
        let h = path.horizon();
        extend_path(&mut path, 2.0 * h, grid, rng);
    }
}

#[test]
fn mean_exit_time_from_symmetric_interval() {
    let iv = symmetric();
    let grid = GridSpec::for_interval(&iv);
    let mut rng = RngStream::derive(5, 0);
    let times: Vec<f64> = (0..100_000).map(|_| exit_from(0.0, &iv, &grid, &mut rng)).collect();
    let m = mean_se(&times).unwrap();
    assert!((0.97..=1.03).contains(&m.mean), "{m:?}");
}

#[test]
fn endpoint_only_detection_is_never_earlier_and_bias_is_small() {
    let iv = symmetric();
    let grid = GridSpec::new(1e-3, 1e-5).unwrap();
    let corrected = Scanner::new(iv, 1e-5);
    let plain = Scanner::endpoint_only(iv, 1e-5);
    let reference = Scanner::new(iv, 1e-8);
    let mut rng = RngStream::derive(6, 0);
    let mut diffs = Vec::new();
    for _ in 0..2000 {
        let path = simulate_path(0.0, 6.0, &grid, &mut rng).unwrap();
        let c = scan_forward(&path, &corrected, 0.0).unwrap().exit;
        let p = scan_forward(&path, &plain, 0.0).unwrap().exit;
        let r = scan_forward(&path, &reference, 0.0).unwrap().exit;
        let (Some(c), Some(r)) = (c, r) else { continue };
        if let Some(p) = p {
            assert!(p.time >= c.time);
        }
        diffs.push(c.time - r.time);
    }
    // Hidden-touch decisions at the two resolutions are independent, so a
    // few paths differ by a whole excursion; those must not lean one way.
    let m = mean_se(&diffs).unwrap();
    assert!(m.mean.abs() <= 3.0 * m.se, "{m:?}");
    let matched: Vec<f64> = diffs.iter().copied().filter(|d| d.abs() <= 10.0 * 1e-5).collect();
    assert!(matched.len() as f64 >= 0.9 * diffs.len() as f64);
    let mm = matched.iter().sum::<f64>() / matched.len() as f64;
    assert!(mm.abs() < 2.0 * 1e-5, "{mm}");
}

#[test]
fn coarse_plus_refinement_matches_fine_grid() {
    let iv = symmetric();
    let coarse = GridSpec::new(4e-3, 4e-6).unwrap();
    let fine = GridSpec::new(2.5e-4, 4e-6).unwrap();
    let mut rng = RngStream::derive(7, 0);
    let a: Vec<f64> = (0..10_000).map(|_| exit_from(0.0, &iv, &coarse, &mut rng)).collect();
    let b: Vec<f64> = (0..10_000).map(|_| exit_from(0.0, &iv, &fine, &mut rng)).collect();
    assert!(ks_two_sample(&a, &b, 0.01).unwrap().pass);
}

#[test]
fn quadratic_variation_of_refined_paths() {
    // Coarse 1e-4 paths refined by bridge halving to 2^-18 spacing; the
    // quadratic variation then has standard deviation about 0.0028.
    let grid = GridSpec::new(1e-4, 1e-6).unwrap();
    let mut rng = RngStream::derive(8, 0);
    let mut inside = 0;
    let n = 1000;
    for _ in 0..n {
        let mut p = simulate_path(0.0, 1.0, &grid, &mut rng).unwrap();
        p.refine(4e-6);
        let qv: f64 = p.values().windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
        if (0.99..=1.01).contains(&qv) {
            inside += 1;
        }
    }
    assert!(inside >= 990, "{inside}");
}

#[test]
fn bridge_pinned_and_reversible() {
    let grid = GridSpec::new(1.0 / 16.0, 1e-6).unwrap();
    let mut rng = RngStream::derive(9, 0);
    let b = sample_brownian_bridge(0.0, 0.0, 1.0, &grid, &mut rng).unwrap();
    assert_eq!(b.values()[0], 0.0);
    assert_eq!(*b.values().last().unwrap(), 0.0);
    let mut mids = Vec::new();
    let mut forward = Vec::new();
    let mut reversed = Vec::new();
    for _ in 0..100_000 {
        let b = sample_brownian_bridge(0.0, 0.0, 1.0, &grid, &mut rng).unwrap();
        mids.push(b.value_at(0.5).unwrap());
    }
    for _ in 0..20_000 {
        let f = sample_brownian_bridge(1.0, 0.0, 1.0, &grid, &mut rng).unwrap();
        forward.push(f.value_at(0.25).unwrap());
        let r = sample_brownian_bridge(0.0, 1.0, 1.0, &grid, &mut rng)
            .unwrap()
            .reversed();
        reversed.push(r.value_at(0.25).unwrap());
    }
    let m = mean_se(&mids).unwrap();
    let var = m.se * m.se * mids.len() as f64;
    assert!((0.245..=0.255).contains(&var), "{var}");
    assert!(ks_two_sample(&forward, &reversed, 0.01).unwrap().pass);
}

/// CDF at `y` of the Bessel(3) bridge from 0 to `r` over [0, 1] at time
/// `t`, by trapezoid integration of its density.
fn bessel_bridge_cdf(r: f64, t: f64) -> impl Fn(f64) -> f64 {
    let u = 1.0 - t;
    let density = move |y: f64| {
        if y <= 0.0 {
            return 0.0;
        }
        let from_origin = y * y * (-y * y / (2.0 * t)).exp() / t.powf(1.5);
        let to_end = ((-(r - y) * (r - y) / (2.0 * u)).exp() - (-(r + y) * (r + y) / (2.0 * u)).exp()) / (y * u.sqrt());
        from_origin * to_end
    };
    let n = 20_000;
    let top = r + 10.0;
    let dy = top / n as f64;
    let mut cum = vec![0.0; n + 1];
    for i in 1..=n {
        let (y0, y1) = ((i - 1) as f64 * dy, i as f64 * dy);
        cum[i] = cum[i - 1] + 0.5 * dy * (density(y0) + density(y1));
    }
    let total = cum[n];
    move |y: f64| {
        if y <= 0.0 {
            return 0.0;
        }
        let x = (y / dy).min(n as f64 - 1e-9);
        let i = x as usize;
        let w = x - i as f64;
        (cum[i] + w * (cum[i + 1] - cum[i])) / total
    }
}

#[test]
fn bessel_bridge_positive_with_correct_marginal() {
    let grid = GridSpec::new(1.0 / 64.0, 1e-6).unwrap();
    let mut rng = RngStream::derive(10, 0);
    let r = 0.8;
    let mut mids = Vec::new();
    for _ in 0..20_000 {
        let p = sample_bessel3_bridge(r, 1.0, &grid, &mut rng).unwrap();
        assert_eq!(p.values()[0], 0.0);
        assert_eq!(*p.values().last().unwrap(), r);
        assert!(p.values()[1..].iter().all(|&v| v > 0.0));
        mids.push(p.value_at(0.5).unwrap());
    }
    let cdf = bessel_bridge_cdf(r, 0.5);
    let ks = ks_one_sample(&mids, cdf, 0.01).unwrap();
    assert!(ks.pass, "{ks:?}");
    assert!(sample_bessel3_bridge(0.0, 1.0, &grid, &mut rng).is_err());
}

#[test]
fn meander_endpoint_is_rayleigh() {
    let grid = GridSpec::new(0.05, 1e-6).unwrap();
    let mut rng = RngStream::derive(11, 0);
    let s = 1.0;
    let ends: Vec<f64> = (0..100_000)
        .map(|_| {
            let m = sample_meander(s, &grid, &mut rng).unwrap();
            assert_eq!(m.values()[0], 0.0);
            assert!(m.values()[1..].iter().all(|&v| v > 0.0));
            *m.values().last().unwrap()
        })
        .collect();
    let m = mean_se(&ends).unwrap();
    let expect = (core::f64::consts::PI * s / 2.0).sqrt();
    assert!((m.mean - expect).abs() <= 3.0 * m.se, "{} vs {expect}", m.mean);
}

#[test]
fn meander_agrees_with_offset_oracle() {
    let grid = GridSpec::new(1e-3, 1e-6).unwrap();
    let mut rng = RngStream::derive(12, 0);
    let (mut ends, mut maxes) = (Vec::new(), Vec::new());
    for _ in 0..5000 {
        let m = sample_meander(1.0, &grid, &mut rng).unwrap();
        ends.push(*m.values().last().unwrap());
        let mut peak: f64 = 0.0;
        for w in m.values().windows(2) {
            let u: f64 = rng.random();
            peak = peak.max(crate::math::bridge_max_below(w[0], w[1], 1e-3, f64::INFINITY, u));
        }
        maxes.push(peak);
    }
    let mut rng = RngStream::derive(12, 1);
    let (mut o_ends, mut o_maxes) = (Vec::new(), Vec::new());
    for _ in 0..3000 {
        let d = crate::oracle::offset_meander(1.0, 1e-3, 1e-3, u64::MAX, &mut rng).unwrap();
        o_ends.push(d.endpoint_disp);
        o_maxes.push(d.sup_disp);
    }
    let ke = ks_two_sample(&ends, &o_ends, 0.01).unwrap();
    let km = ks_two_sample(&maxes, &o_maxes, 0.01).unwrap();
    assert!(ke.pass, "{ke:?}");
    assert!(km.pass, "{km:?}");
}
