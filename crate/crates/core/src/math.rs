//! Scalar helpers on top of `libm`.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    libm::exp(-0.5 * z * z) / libm::sqrt(2.0 * PI)
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Upper tail `P(Z > z)`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z * FRAC_1_SQRT_2)
}

/// `P(lo < Z < hi)` without cancellation in either tail.
pub fn normal_mass(lo: f64, hi: f64) -> f64 {
    if lo >= hi {
        return 0.0;
    }
    if lo >= 0.0 {
        normal_sf(lo) - normal_sf(hi)
    } else if hi <= 0.0 {
        normal_cdf(hi) - normal_cdf(lo)
    } else {
        1.0 - normal_cdf(lo) - normal_sf(hi)
    }
}

/// Antiderivative of the normal CDF: `z Phi(z) + phi(z)`.
pub fn normal_cdf_integral(z: f64) -> f64 {
    z * normal_cdf(z) + normal_pdf(z)
}

/// Probability that a Brownian bridge from `x` to `y` over `dt` touches
/// `level`. Both endpoints are assumed on the same side of it.
pub fn bridge_cross_prob(x: f64, y: f64, level: f64, dt: f64) -> f64 {
    let prod = (x - level) * (y - level);
    if prod <= 0.0 {
        return 1.0;
    }
    libm::exp(-2.0 * prod / dt)
}

/// Sample the maximum of a Brownian bridge from `x` to `y` over `dt`,
/// conditioned to stay below `cap` (pass `f64::INFINITY` for no cap).
pub fn bridge_max_below(x: f64, y: f64, dt: f64, cap: f64, u: f64) -> f64 {
    let hi = x.max(y);
    if dt <= 0.0 || hi >= cap {
        return hi.min(cap);
    }
    let q = if cap.is_finite() {
        libm::exp(-2.0 * (cap - x) * (cap - y) / dt)
    } else {
        0.0
    };
    let w = q + u * (1.0 - q);
    if w <= 0.0 {
        return cap;
    }
    let c = -0.5 * dt * libm::log(w);
    let m = 0.5 * ((x + y) + libm::sqrt((x - y) * (x - y) + 4.0 * c));
    m.clamp(hi, cap)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_reference_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-12);
        assert!((normal_mass(-1.0, 1.0) - 0.6826894921370859).abs() < 1e-13);
        assert!(normal_mass(30.0, 31.0) > 0.0);
    }

    #[test]
    fn bridge_cross_prob_limits() {
        assert_eq!(bridge_cross_prob(0.0, 0.3, 0.0, 1.0), 1.0);
        let d = 0.1;
        let p = bridge_cross_prob(d, d, 0.0, 0.5);
        assert!((p - libm::exp(-2.0 * d * d / 0.5)).abs() < 1e-15);
        let mut last = 1.0;
        for k in 1..20 {
            let p = bridge_cross_prob(k as f64 * 0.1, 0.2, 0.0, 0.1);
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn bridge_max_respects_bounds() {
        for i in 0..100 {
            let u = (i as f64 + 0.5) / 100.0;
            let m = bridge_max_below(0.2, 0.4, 0.01, 0.5, u);
            assert!((0.4..=0.5).contains(&m));
        }
    }
}
