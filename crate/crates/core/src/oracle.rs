//! Brute-force reference computations used to certify the fast paths.
//! They are slow by design and only built for tests and validation runs.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::analytic::{psi, SeriesConfig};
use crate::engine::{scan_forward_points, GridSpec, Scanner};
use crate::error::{positive, Error, Result};
use crate::interval::{Interval, Side};
use crate::math::{bridge_cross_prob, bridge_max_below};

/// First exit time from the interval of Brownian motion from `x`, simulated
/// on `grid` with bridge-corrected detection, or `None` if still inside at
/// `until`.
pub fn exit_time<R: RngCore + ?Sized>(
    x: f64,
    until: f64,
    interval: &Interval,
    grid: &GridSpec,
    rng: &mut R,
) -> Option<f64> {
    let scanner = Scanner::new(*interval, grid.fine_dt());
    let key = rng.next_u64();
    let h = grid.coarse_dt();
    let sd = h.sqrt();
    let mut cur = (0.0, x);
    let steps = core::iter::from_fn(|| {
        if cur.0 >= until {
            return None;
        }
        let z: f64 = rng.sample(StandardNormal);
        cur = (cur.0 + h, cur.1 + sd * z);
        Some(cur)
    });
    let scan = scan_forward_points(&scanner, key, false, (0.0, x), steps);
    scan.exit.map(|c| c.time).filter(|&t| t <= until)
}

/// Monte Carlo survival probabilities `P_x(exit > s)` for each `s` in
/// `times`, from `n` paths. Returns the survivor counts.
pub fn survival_counts<R: RngCore + ?Sized>(
    x: f64,
    times: &[f64],
    n: u64,
    interval: &Interval,
    grid: &GridSpec,
    rng: &mut R,
) -> Vec<u64> {
    let until = times.iter().copied().fold(0.0, f64::max);
    let mut counts = alloc::vec![0u64; times.len()];
    for _ in 0..n {
        let exit = exit_time(x, until, interval, grid, rng).unwrap_or(f64::INFINITY);
        for (c, &s) in counts.iter_mut().zip(times) {
            if exit > s {
                *c += 1;
            }
        }
    }
    counts
}

/// `F(s)` by adaptive Simpson quadrature of `1 - psi(x, s)` over the
/// interval.
pub fn limit_cdf_quadrature(s: f64, interval: &Interval, cfg: &SeriesConfig) -> Result<f64> {
    let f = |x: f64| psi(x, s, interval, cfg).map(|v| 1.0 - v.value);
    let (a, b) = (interval.a(), interval.b());
    let (fa, fm, fb) = (f(a)?, f(0.5 * (a + b))?, f(b)?);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let integral = simpson(&f, a, b, fa, fm, fb, whole, 1e-13, 40)?;
    Ok(integral / (b - a))
}

#[allow(clippy::too_many_arguments)]
fn simpson(
    f: &impl Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return Ok(left + right + diff / 15.0);
    }
    Ok(simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
        + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
}

/// One excursion-like draw from the boundary-offset approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetDraw {
    /// Signed displacement at age `s` from the starting boundary point.
    pub endpoint_disp: f64,
    pub lifetime: f64,
    /// Supremum of the unsigned displacement.
    pub sup_disp: f64,
    pub attempts: u64,
}

/// Brownian motion started `eps` inside the boundary point `side`,
/// conditioned by rejection to stay in the interval through `s`, then run
/// until it exits.
///
/// Steps shrink with the distance to the nearest boundary, `dt = clamp((d /
/// 3)^2, (eps / 10)^2, dt_cap)`, and every step that stays inside is
/// killed with the single-barrier bridge probabilities.
pub fn offset_excursion<R: RngCore + ?Sized>(
    side: Side,
    s: f64,
    eps: f64,
    dt_cap: f64,
    interval: &Interval,
    max_attempts: u64,
    rng: &mut R,
) -> Result<OffsetDraw> {
    let mut d = offset_walk(s, eps, dt_cap, interval.length(), true, max_attempts, rng)?;
    if side == Side::B {
        d.endpoint_disp = -d.endpoint_disp;
    }
    Ok(d)
}

/// Brownian motion from `eps` conditioned by rejection to stay positive
/// on `[0, s]`; returns the value at `s` and the running maximum. The
/// lifetime field is `s`.
pub fn offset_meander<R: RngCore + ?Sized>(
    s: f64,
    eps: f64,
    dt_cap: f64,
    max_attempts: u64,
    rng: &mut R,
) -> Result<OffsetDraw> {
    offset_walk(s, eps, dt_cap, f64::INFINITY, false, max_attempts, rng)
}

fn offset_walk<R: RngCore + ?Sized>(
    s: f64,
    eps: f64,
    dt_cap: f64,
    l: f64,
    run_to_exit: bool,
    max_attempts: u64,
    rng: &mut R,
) -> Result<OffsetDraw> {
    positive("s", s)?;
    positive("eps", eps)?;
    positive("dt_cap", dt_cap)?;
    let dt_floor = (eps / 10.0) * (eps / 10.0);
    // Displacement from the starting boundary point: the walk lives in
    // (0, l) and starts at eps.
    let step = |d: f64| ((d / 3.0) * (d / 3.0)).clamp(dt_floor, dt_cap);
    let cross = |x: f64, y: f64, dt: f64| {
        let pa = bridge_cross_prob(x, y, 0.0, dt);
        let pb = if l.is_finite() {
            bridge_cross_prob(x, y, l, dt)
        } else {
            0.0
        };
        (pa, pb)
    };
    let mut attempts = 0;
    'attempt: loop {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::RejectionCap {
                what: "offset walk surviving the conditioning age",
                iterations: max_attempts,
            });
        }
        let mut t = 0.0;
        let mut x = eps;
        let mut peak = eps;
        let mut at_s: Option<f64> = None;
        loop {
            let mut dt = step(x.min(l - x));
            if at_s.is_none() && t + dt > s {
                dt = s - t;
            }
            let z: f64 = rng.sample(StandardNormal);
            let y = x + dt.sqrt() * z;
            let (pa, pb) = cross(x, y, dt);
            let killed = y <= 0.0 || y >= l || rng.random::<f64>() < pa + pb;
            if killed {
                let Some(end) = at_s else {
                    continue 'attempt;
                };
                let exit_high = if y >= l {
                    true
                } else if y <= 0.0 {
                    false
                } else {
                    rng.random::<f64>() * (pa + pb) < pb
                };
                return Ok(OffsetDraw {
                    endpoint_disp: end,
                    lifetime: t + 0.5 * dt,
                    sup_disp: if exit_high { l } else { peak },
                    attempts,
                });
            }
            let u: f64 = rng.random();
            peak = peak.max(bridge_max_below(x, y, dt, l, u));
            t += dt;
            x = y;
            if at_s.is_none() && t >= s {
                at_s = Some(x);
                if !run_to_exit {
                    return Ok(OffsetDraw {
                        endpoint_disp: x,
                        lifetime: s,
                        sup_disp: peak,
                        attempts,
                    });
                }
            }
        }
    }
}
