use alloc::vec::Vec;

use super::*;
use crate::analytic::{exit_rate, ito_tail, limit_cdf};
use crate::engine::sample_meander_below;
use crate::oracle::{exit_time, limit_cdf_quadrature, offset_excursion};
use crate::stats::{ks_one_sample, ks_two_sample, mean_se, wilson, Z_99};
use crate::stream::RngStream;

fn unit() -> Interval {
    Interval::unit()
}

fn grid() -> GridSpec {
    GridSpec::for_interval(&unit())
}

#[test]
fn conditioned_excursions_outlive_their_age() {
    let cfg = SamplerConfig::default();
    let mut rng = RngStream::derive(20, 0);
    for &s in &[0.1, 0.5, 1.5] {
        for side in [Side::A, Side::B] {
            for _ in 0..40 {
                let z = sample_q(side, s, &unit(), &grid(), &cfg, &mut rng).unwrap();
                assert!(z.lifetime() > s);
                assert_eq!(z.start(), side);
                assert_eq!(z.start_value(), unit().boundary(side));
                let v = z.samples().values();
                assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
                assert!(v[1..v.len() - 1].iter().all(|&x| x > 0.0 && x < 1.0));
            }
        }
    }
}

#[test]
fn wide_interval_endpoint_is_rayleigh() {
    let iv = Interval::new(0.0, 1000.0).unwrap();
    let g = GridSpec::for_interval(&iv);
    let cfg = SamplerConfig::default();
    let mut rng = RngStream::derive(21, 0);
    let f = Functional::EndpointDisp { clock: 1.0 };
    let ends: Vec<f64> = (0..100_000)
        .map(|_| {
            let z = sample_q(Side::A, 1.0, &iv, &g, &cfg, &mut rng).unwrap();
            eval_functional(&f, &z).unwrap()
        })
        .collect();
    let ks = ks_one_sample(&ends, |x| 1.0 - (-x * x / 2.0).exp(), 0.01).unwrap();
    assert!(ks.pass, "{ks:?}");
}

#[test]
fn conditioned_excursion_matches_offset_start() {
    let s = 0.1;
    let cfg = SamplerConfig::default();
    let mut rng = RngStream::derive(22, 0);
    let n = 2000;
    let (mut q_end, mut q_life) = (Vec::new(), Vec::new());
    let f = Functional::EndpointDisp { clock: s };
    for _ in 0..n {
        let z = sample_q(Side::A, s, &unit(), &grid(), &cfg, &mut rng).unwrap();
        q_end.push(eval_functional(&f, &z).unwrap());
        q_life.push(z.lifetime());
    }
    let (mut o_end, mut o_life) = (Vec::new(), Vec::new());
    for _ in 0..n {
        let d = offset_excursion(Side::A, s, 0.005, 1e-4, &unit(), 100_000, &mut rng).unwrap();
        o_end.push(d.endpoint_disp);
        o_life.push(d.lifetime);
    }
    let ks = ks_two_sample(&q_end, &o_end, 0.01).unwrap();
    assert!(ks.pass, "endpoint {ks:?}");
    let ks = ks_two_sample(&q_life, &o_life, 0.01).unwrap();
    assert!(ks.pass, "lifetime {ks:?}");
}

#[test]
fn limit_pair_side_is_fair() {
    let mut rng = RngStream::derive(23, 0);
    let n = 100_000;
    let a = (0..n)
        .filter(|_| {
            sample_limit_pair(&unit(), &SeriesConfig::default(), &mut rng)
                .unwrap()
                .0
                == Side::A
        })
        .count();
    let p = a as f64 / n as f64;
    assert!((0.495..=0.505).contains(&p), "{p}");
}

#[test]
fn limit_age_follows_its_distribution() {
    let cfg = SeriesConfig::default();
    let mut rng = RngStream::derive(24, 0);
    let ys: Vec<f64> = (0..10_000)
        .map(|_| sample_limit_pair(&unit(), &cfg, &mut rng).unwrap().1)
        .collect();
    let ks = ks_one_sample(&ys, |s| limit_cdf(s, &unit(), &cfg).unwrap().value, 0.01).unwrap();
    assert!(ks.pass, "{ks:?}");

    // Same law as the exit time of Brownian motion started uniformly.
    let exits: Vec<f64> = (0..4000)
        .map(|_| {
            let x: f64 = rng.random();
            exit_time(x, 100.0, &unit(), &grid(), &mut rng).unwrap()
        })
        .collect();
    let ks = ks_two_sample(&ys, &exits, 0.01).unwrap();
    assert!(ks.pass, "{ks:?}");
}

#[test]
fn limit_law_is_mirror_symmetric() {
    let cfg = SamplerConfig::default();
    let mut rng = RngStream::derive(25, 0);
    let (mut from_a, mut from_b) = (Vec::new(), Vec::new());
    let f = Functional::EndpointDisp { clock: 0.05 };
    for _ in 0..3000 {
        let draw = sample_p0(&unit(), &grid(), &cfg, &mut rng).unwrap();
        let e = eval_functional(&f, &draw.zeta).unwrap();
        match draw.x {
            Side::A => from_a.push(e),
            Side::B => from_b.push(-e),
        }
    }
    let ks = ks_two_sample(&from_a, &from_b, 0.01).unwrap();
    assert!(ks.pass, "{ks:?}");
}

#[test]
fn functionals_are_bounded() {
    let cfg = SamplerConfig::default();
    let mut rng = RngStream::derive(26, 0);
    for _ in 0..300 {
        let draw = sample_p0(&unit(), &grid(), &cfg, &mut rng).unwrap();
        let z = &draw.zeta;
        for clock in [0.0, 0.01, 0.3, 10.0] {
            let e = eval_functional(&Functional::EndpointDisp { clock }, z).unwrap();
            assert!((-1.0..=1.0).contains(&e));
        }
        let sup = eval_functional(&Functional::SupDisp, z).unwrap();
        assert!((0.0..=1.0).contains(&sup));
        let tail = eval_functional(&Functional::LifetimeTail { r: draw.y }, z).unwrap();
        assert_eq!(tail, 1.0);
        let occ = eval_functional(&Functional::OccAboveMid, z).unwrap();
        assert!((0.0..=1.0).contains(&occ));
        // Past the lifetime the displacement is frozen at the exit point.
        let end = eval_functional(
            &Functional::EndpointDisp {
                clock: z.lifetime() + 1.0,
            },
            z,
        )
        .unwrap();
        assert_eq!(end, unit().boundary(z.exit()) - z.start_value());
    }
}

#[test]
fn degenerate_functional_arguments() {
    let cfg = SamplerConfig::default();
    let mut rng = RngStream::derive(27, 0);
    let z = sample_q(Side::B, 0.2, &unit(), &grid(), &cfg, &mut rng).unwrap();
    assert_eq!(
        eval_functional(&Functional::EndpointDisp { clock: 0.0 }, &z).unwrap(),
        0.0
    );
    assert!(eval_functional(&Functional::EndpointDisp { clock: -1.0 }, &z).is_err());
    assert!(eval_functional(&Functional::EndpointDisp { clock: f64::NAN }, &z).is_err());
    assert!(eval_functional(&Functional::LifetimeTail { r: f64::INFINITY }, &z).is_err());
    assert_eq!(eval_functional(&Functional::LifetimeTail { r: 0.0 }, &z).unwrap(), 1.0);
    assert!(sample_q(Side::A, 0.0, &unit(), &grid(), &cfg, &mut rng).is_err());
    let bad = SamplerConfig {
        rejection_cap: 0,
        ..cfg
    };
    assert!(bad.validate().is_err());
}

#[test]
fn residual_lifetime_tail_matches_exit_rates() {
    let cfg = SamplerConfig::default();
    let mut rng = RngStream::derive(28, 0);
    for &(s, r) in &[(0.1, 0.1), (0.6, 0.2)] {
        let n = 4000;
        let tails: Vec<f64> = (0..n)
            .map(|_| {
                let z = sample_q(Side::A, s, &unit(), &grid(), &cfg, &mut rng).unwrap();
                eval_functional(&Functional::LifetimeTail { r: s + r }, &z).unwrap()
            })
            .collect();
        let m = mean_se(&tails).unwrap();
        let rate = |t| exit_rate(Side::A, t, &unit(), &cfg.series).unwrap().value;
        let expected = rate(s + r) / rate(s);
        assert!((m.mean - expected).abs() <= 3.0 * m.se, "s={s}: {m:?} vs {expected}");
    }
}

#[test]
fn meander_survival_below_the_far_boundary() {
    let cfg = SeriesConfig::default();
    let mut rng = RngStream::derive(29, 0);
    for &s in &[0.05, 0.3] {
        let n = 20_000u64;
        let kept = (0..n)
            .filter(|_| sample_meander_below(s, 1.0, &grid(), &mut rng).unwrap().is_some())
            .count() as u64;
        let expected = 2.0 * exit_rate(Side::A, s, &unit(), &cfg).unwrap().value / ito_tail(s).unwrap();
        let ci = wilson(kept, n, Z_99).unwrap();
        assert!(ci.contains(expected), "s={s}: {ci:?} vs {expected}");
    }
}

#[test]
fn quadrature_agrees_with_the_series() {
    let cfg = SeriesConfig::default();
    for iv in [unit(), Interval::new(-2.0, 1.0).unwrap()] {
        let l2 = iv.length() * iv.length();
        for &s in &[0.001, 0.02, 0.05, 0.2, 1.0, 3.0] {
            let q = limit_cdf_quadrature(s * l2, &iv, &cfg).unwrap();
            let f = limit_cdf(s * l2, &iv, &cfg).unwrap().value;
            assert!((q - f).abs() < 1e-8, "s={s}: {q} vs {f}");
        }
    }
}
