//! Survival probabilities, the age law and excursion tails for Brownian
//! motion in an interval, each with a reported truncation bound.
//!
//! Long times use the Dirichlet eigenfunction expansion on `(a, b)`. Below
//! `SMALL_TIME * L^2` the expansion needs many terms, so the method of
//! images (or its theta-function transform) is used instead.

use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{finite, positive, Error, Result};
use crate::interval::{Interval, Side};
use crate::math::{normal_cdf_integral, normal_mass, normal_sf};

/// Scaled time `s / L^2` below which the image representations are used.
pub const SMALL_TIME: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig {
    tail_tolerance: f64,
    max_terms: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            tail_tolerance: 1e-12,
            max_terms: 100_000,
        }
    }
}

impl SeriesConfig {
    pub fn new(tail_tolerance: f64, max_terms: usize) -> Result<Self> {
        positive("tail_tolerance", tail_tolerance)?;
        if max_terms == 0 {
            return Err(Error::Invalid("max_terms must be at least 1".into()));
        }
        Ok(SeriesConfig {
            tail_tolerance,
            max_terms,
        })
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.tail_tolerance
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }
}

/// A truncated series: `|value - exact| <= bound` before any clamping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub bound: f64,
    pub terms: usize,
}

impl SeriesValue {
    fn exact(value: f64) -> Self {
        SeriesValue {
            value,
            bound: 0.0,
            terms: 0,
        }
    }
}

/// Which representation a function evaluates with at a given time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Eigen,
    Image,
}

pub fn representation(s: f64, interval: &Interval) -> Representation {
    if s < SMALL_TIME * interval.length() * interval.length() {
        Representation::Image
    } else {
        Representation::Eigen
    }
}

/// Sum over odd `k >= 1` of `coef(k) * exp(-k^2 c)` where `|coef(k)| <=
/// envelope(k)` and `envelope` is nonincreasing. The remainder after the
/// last used `k` is bounded by a geometric series.
fn odd_mode_sum(c: f64, cfg: &SeriesConfig, coef: impl Fn(f64) -> f64, envelope: impl Fn(f64) -> f64) -> SeriesValue {
    let mut sum = 0.0;
    let mut terms = 0;
    let mut k = 1.0_f64;
    loop {
        sum += coef(k) * (-k * k * c).exp();
        terms += 1;
        let next = k + 2.0;
        let ratio = (-4.0 * next * c).exp();
        let bound = if ratio < 1.0 {
            envelope(next) * (-next * next * c).exp() / (1.0 - ratio)
        } else {
            f64::INFINITY
        };
        if bound <= cfg.tail_tolerance || terms >= cfg.max_terms {
            return SeriesValue {
                value: sum,
                bound,
                terms,
            };
        }
        k = next;
    }
}

/// Sum over image index `n = 0, +-1, +-2, ...` of `term(n)` where
/// `|term(n)| <= 2 sf((2|n| - 2) / r)` for `|n| >= 1`.
fn image_sum(r: f64, cfg: &SeriesConfig, term: impl Fn(f64) -> f64) -> SeriesValue {
    let mut sum = term(0.0);
    let mut terms = 1;
    let mut n = 1.0_f64;
    loop {
        sum += term(n) + term(-n);
        terms += 2;
        // Remaining |n| >= N + 1: 4 sum_{m > N} sf((2m - 2) / r); each step
        // in m shrinks the tail by at least half once 2N / r >= 1.
        let z = 2.0 * n / r;
        let bound = if z >= 1.0 { 8.0 * normal_sf(z) } else { f64::INFINITY };
        if bound <= cfg.tail_tolerance || terms >= cfg.max_terms {
            return SeriesValue {
                value: sum,
                bound,
                terms,
            };
        }
        n += 1.0;
    }
}

/// Probability that Brownian motion from `x` stays strictly inside the
/// interval up to time `s`.
pub fn psi(x: f64, s: f64, interval: &Interval, cfg: &SeriesConfig) -> Result<SeriesValue> {
    finite("x", x)?;
    finite("s", s)?;
    if x < interval.a() || x > interval.b() {
        return Err(Error::OutOfRange {
            name: "x",
            value: x,
            expected: "must lie in [a, b]",
        });
    }
    if s < 0.0 {
        return Err(Error::OutOfRange {
            name: "s",
            value: s,
            expected: "must be >= 0",
        });
    }
    if !interval.contains(x) {
        return Ok(SeriesValue::exact(0.0));
    }
    if s == 0.0 {
        return Ok(SeriesValue::exact(1.0));
    }
    let l = interval.length();
    let u = (x - interval.a()) / l;
    let tau = s / (l * l);
    let mut out = match representation(s, interval) {
        Representation::Eigen => {
            let c = PI * PI * tau / 2.0;
            odd_mode_sum(c, cfg, |k| 4.0 / (k * PI) * (k * PI * u).sin(), |k| 4.0 / (k * PI))
        }
        Representation::Image => {
            let r = tau.sqrt();
            image_sum(r, cfg, |n| {
                let direct = normal_mass((-u - 2.0 * n) / r, (1.0 - u - 2.0 * n) / r);
                let mirror = normal_mass((u - 2.0 * n) / r, (1.0 + u - 2.0 * n) / r);
                direct - mirror
            })
        }
    };
    out.value = out.value.clamp(0.0, 1.0);
    Ok(out)
}

/// `F(s) = 1 - (1/L) * integral of psi(x, s) over (a, b)`: the law of the
/// exit time of Brownian motion started uniformly in the interval.
pub fn limit_cdf(s: f64, interval: &Interval, cfg: &SeriesConfig) -> Result<SeriesValue> {
    finite("s", s)?;
    if s < 0.0 {
        return Err(Error::OutOfRange {
            name: "s",
            value: s,
            expected: "must be >= 0",
        });
    }
    if s == 0.0 {
        return Ok(SeriesValue::exact(0.0));
    }
    let l = interval.length();
    let tau = s / (l * l);
    let mut out = match representation(s, interval) {
        Representation::Eigen => {
            let c = PI * PI * tau / 2.0;
            let mut mean_psi = odd_mode_sum(c, cfg, |k| 8.0 / (k * k * PI * PI), |k| 8.0 / (k * k * PI * PI));
            mean_psi.value = 1.0 - mean_psi.value;
            mean_psi
        }
        Representation::Image => {
            let r = tau.sqrt();
            let g = |z: f64| normal_cdf_integral(z);
            let mut mean_psi = image_sum(r, cfg, |n| {
                let m = -2.0 * n;
                r * (3.0 * g((m + 1.0) / r) - 3.0 * g(m / r) + g((m - 1.0) / r) - g((m + 2.0) / r))
            });
            mean_psi.value = 1.0 - mean_psi.value;
            mean_psi
        }
    };
    out.value = out.value.clamp(0.0, 1.0);
    Ok(out)
}

/// Inverse of [`limit_cdf`] by bracketed bisection, accurate to
/// `|F(s) - p| <= 1e-10`.
pub fn limit_cdf_inverse(p: f64, interval: &Interval, cfg: &SeriesConfig) -> Result<f64> {
    finite("p", p)?;
    if !(0.0..1.0).contains(&p) {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            expected: "must lie in [0, 1)",
        });
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let f = |s: f64| limit_cdf(s, interval, cfg).map(|v| v.value);
    let l2 = interval.length() * interval.length();
    let mut lo = 0.0;
    let mut hi = 0.1 * l2;
    while f(hi)? < p {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 * l2 {
            return Err(Error::Invalid("age law inversion failed to bracket".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if (fm - p).abs() <= 1e-12 || hi - lo <= f64::EPSILON * hi {
            return Ok(mid);
        }
        if fm < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Excursion measure of lifetimes longer than `t`: `sqrt(2 / (pi t))`.
pub fn ito_tail(t: f64) -> Result<f64> {
    positive("t", t)?;
    Ok((2.0 / (PI * t)).sqrt())
}

/// Mass of excursions from a boundary point into the interval that survive
/// longer than `s`. The same for both boundary points.
pub fn exit_rate(_side: Side, s: f64, interval: &Interval, cfg: &SeriesConfig) -> Result<SeriesValue> {
    positive("s", s)?;
    let l = interval.length();
    let tau = s / (l * l);
    Ok(match representation(s, interval) {
        Representation::Eigen => {
            let c = PI * PI * tau / 2.0;
            let mut v = odd_mode_sum(c, cfg, |_| 1.0, |_| 1.0);
            v.value *= 2.0 / l;
            v.bound *= 2.0 / l;
            v
        }
        Representation::Image => {
            // Theta transform: sqrt(1/(2 pi s)) (1 + 2 sum (-1)^m e^{-m^2 L^2/(2s)}).
            let lead = (1.0 / (2.0 * PI * s)).sqrt();
            let mut sum = 1.0;
            let mut terms = 1;
            let mut m = 1.0_f64;
            loop {
                let sign = if (m as u64) % 2 == 1 { -1.0 } else { 1.0 };
                sum += 2.0 * sign * (-m * m / (2.0 * tau)).exp();
                terms += 1;
                let next = 2.0 * lead * (-(m + 1.0) * (m + 1.0) / (2.0 * tau)).exp();
                if next <= cfg.tail_tolerance || terms >= cfg.max_terms {
                    break SeriesValue {
                        value: lead * sum,
                        bound: next,
                        terms,
                    };
                }
                m += 1.0;
            }
        }
    })
}

/// Leading-mode approximation `(2/L) exp(-pi^2 s / (2 L^2))` of [`exit_rate`].
pub fn exit_rate_leading(s: f64, interval: &Interval) -> f64 {
    let l = interval.length();
    2.0 / l * (-PI * PI * s / (2.0 * l * l)).exp()
}
