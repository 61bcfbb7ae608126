//! Excursions from a boundary point conditioned to outlive a given age,
//! draws from the limit law of the straddling excursion, and the bounded
//! functionals used to compare excursion laws.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::distr::Open01;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::analytic::{limit_cdf_inverse, psi, SeriesConfig};
use crate::engine::{sample_meander_below, scan_forward_points, GridSpec, Scanner};
use crate::error::{finite, positive, Error, Result};
use crate::interval::{Interval, Side};
use crate::path::{Excursion, LimitSample};

/// Tuning of [`sample_q`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    /// Ages up to `switch * L^2` use plain meander rejection.
    pub switch: f64,
    /// Length of the conditioned blocks beyond the switch, in `L^2`.
    pub block: f64,
    pub rejection_cap: u64,
    pub series: SeriesConfig,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            switch: 0.5,
            block: 0.25,
            rejection_cap: 1_000_000,
            series: SeriesConfig::default(),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        positive("switch", self.switch)?;
        positive("block", self.block)?;
        if self.rejection_cap == 0 {
            return Err(Error::Invalid("rejection_cap must be at least 1".into()));
        }
        Ok(())
    }
}

struct Budget {
    used: u64,
    cap: u64,
}

impl Budget {
    fn spend(&mut self, what: &'static str) -> Result<()> {
        self.used += 1;
        if self.used > self.cap {
            Err(Error::RejectionCap {
                what,
                iterations: self.cap,
            })
        } else {
            Ok(())
        }
    }
}

/// Brownian steps of size about `h` from `from`, ending exactly at `until`
/// when it is finite.
fn brownian_steps<'a, R: RngCore + ?Sized>(
    from: (f64, f64),
    until: f64,
    h: f64,
    rng: &'a mut R,
) -> impl Iterator<Item = (f64, f64)> + 'a {
    let n = if until.is_finite() {
        ((until - from.0) / h).ceil().max(1.0) as u64
    } else {
        u64::MAX
    };
    let step = if until.is_finite() {
        (until - from.0) / n as f64
    } else {
        h
    };
    let sd = step.sqrt();
    let mut cur = from;
    (1..=n).map(move |k| {
        let z: f64 = rng.sample(StandardNormal);
        let t = if k == n && until.is_finite() {
            until
        } else {
            from.0 + k as f64 * step
        };
        cur = (t, cur.1 + sd * z);
        cur
    })
}

/// A draw from the excursion law at boundary point `side`, conditioned on
/// lifetime greater than `s`.
///
/// Up to the switch age the excursion on `[0, s]` is a Brownian meander
/// accepted when it stays below the far boundary. Beyond it, the meander
/// covers `[0, switch]` and is reweighted by the survival probability of
/// the remaining age, and the rest of `[0, s]` is built from Brownian
/// blocks, each accepted in proportion to the survival probability from
/// its end. After `s` the path runs as Brownian motion until it exits.
pub fn sample_q<R: RngCore + ?Sized>(
    side: Side,
    s: f64,
    interval: &Interval,
    grid: &GridSpec,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<Excursion> {
    positive("s", s)?;
    let l = interval.length();
    let a = interval.a();
    let l2 = l * l;
    let switch = cfg.switch * l2;
    let head = s.min(switch);
    let mut budget = Budget {
        used: 0,
        cap: cfg.rejection_cap,
    };
    let remaining_after_head = s - head;
    let weight_cap = if remaining_after_head > 0.0 {
        psi(interval.midpoint(), remaining_after_head, interval, &cfg.series)?.value
    } else {
        1.0
    };

    // Meander head on [0, head], in displacement from `a`.
    let mut points: Vec<(f64, f64)> = loop {
        budget.spend("meander below the far boundary")?;
        let Some(m) = sample_meander_below(head, l, grid, rng)? else {
            continue;
        };
        let end = a + *m.values().last().unwrap();
        if remaining_after_head > 0.0 {
            let w = psi(end, remaining_after_head, interval, &cfg.series)?.value / weight_cap;
            if rng.random::<f64>() >= w {
                continue;
            }
        }
        break m.times().iter().zip(m.values()).map(|(&t, &v)| (t, a + v)).collect();
    };

    let scanner = Scanner::new(*interval, grid.fine_dt());
    let h = grid.coarse_dt();

    // Conditioned Brownian blocks on [head, s].
    let mut cur = *points.last().unwrap();
    while cur.0 < s {
        let end = (cur.0 + cfg.block * l2).min(s);
        let rem = s - end;
        let cap = if rem > 0.0 {
            psi(interval.midpoint(), rem, interval, &cfg.series)?.value
        } else {
            1.0
        };
        loop {
            budget.spend("conditioned block")?;
            let key = rng.next_u64();
            let scan = {
                let steps = brownian_steps(cur, end, h, rng);
                scan_forward_points(&scanner, key, false, cur, steps)
            };
            if scan.exit.is_some() {
                continue;
            }
            let block_end = scan.last.expect("block has at least one step");
            if rem > 0.0 {
                let w = psi(block_end.1, rem, interval, &cfg.series)?.value / cap;
                if rng.random::<f64>() >= w {
                    continue;
                }
            }
            points.extend(scan.points.iter().copied());
            points.push(block_end);
            cur = block_end;
            break;
        }
    }

    // Free Brownian motion after s until the exit.
    let key = rng.next_u64();
    let tail = {
        let steps = brownian_steps(cur, f64::INFINITY, h, rng);
        scan_forward_points(&scanner, key, false, cur, steps)
    };
    let exit = tail
        .exit
        .ok_or_else(|| Error::Invalid("conditioned excursion never exited".into()))?;
    points.extend(tail.points);

    let mut times = Vec::with_capacity(points.len() + 1);
    let mut values = Vec::with_capacity(points.len() + 1);
    for (t, v) in points {
        times.push(t);
        values.push(v);
    }
    times.push(exit.time);
    values.push(interval.boundary(exit.side));
    values[0] = a;
    let exc = Excursion::from_points(*interval, Side::A, exit.side, times, values, rng)?;
    Ok(match side {
        Side::A => exc,
        Side::B => exc.mirrored(),
    })
}

/// `(X, Y)` with `X` a fair choice of boundary point and `Y` drawn from the
/// limit age law by inversion.
pub fn sample_limit_pair<R: RngCore + ?Sized>(
    interval: &Interval,
    cfg: &SeriesConfig,
    rng: &mut R,
) -> Result<(Side, f64)> {
    let x = if rng.random::<bool>() { Side::A } else { Side::B };
    let u: f64 = rng.sample(Open01);
    let y = limit_cdf_inverse(u, interval, cfg)?;
    Ok((x, y))
}

/// One draw `(X, Y, zeta)` of the limit law: `zeta` from [`sample_q`] at
/// `(X, Y)`.
pub fn sample_p0<R: RngCore + ?Sized>(
    interval: &Interval,
    grid: &GridSpec,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<LimitSample> {
    let (x, y) = sample_limit_pair(interval, &cfg.series, rng)?;
    let zeta = sample_q(x, y, interval, grid, cfg, rng)?;
    Ok(LimitSample { x, y, zeta })
}

/// Bounded functionals of an excursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    /// `zeta(clock) - zeta(0)`
    EndpointDisp { clock: f64 },
    /// `sup |zeta(r) - zeta(0)|`
    SupDisp,
    /// `1{R > r}`
    LifetimeTail { r: f64 },
    /// Fraction of the lifetime spent above the interval midpoint.
    OccAboveMid,
}

impl Functional {
    pub fn name(&self) -> &'static str {
        match self {
            Functional::EndpointDisp { .. } => "endpoint_disp",
            Functional::SupDisp => "sup_disp",
            Functional::LifetimeTail { .. } => "lifetime_tail",
            Functional::OccAboveMid => "occ_above_mid",
        }
    }
}

pub fn eval_functional(f: &Functional, zeta: &Excursion) -> Result<f64> {
    Ok(match *f {
        Functional::EndpointDisp { clock } => {
            finite("clock", clock)?;
            if clock < 0.0 {
                return Err(Error::OutOfRange {
                    name: "clock",
                    value: clock,
                    expected: "must be >= 0",
                });
            }
            zeta.value_at(clock) - zeta.start_value()
        }
        Functional::SupDisp => zeta.peak_displacement(),
        Functional::LifetimeTail { r } => {
            finite("r", r)?;
            if zeta.lifetime() > r {
                1.0
            } else {
                0.0
            }
        }
        Functional::OccAboveMid => zeta.fraction_above(zeta.interval().midpoint()),
    })
}

#[cfg(test)]
mod tests;
