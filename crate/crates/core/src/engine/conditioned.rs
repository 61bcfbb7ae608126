//! Conditioned Brownian building blocks: bridges, Bessel(3) bridges and the
//! Brownian meander.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use rand::distr::Open01;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use super::GridSpec;
use crate::error::{finite, positive, Result};
use crate::math::bridge_cross_prob;
use crate::path::SampledPath;

/// Fewest steps used for a conditioned path, however short.
const MIN_STEPS: usize = 8;

fn uniform_times(length: f64, grid: &GridSpec) -> (usize, f64) {
    let n = grid.steps_for(length).max(MIN_STEPS);
    (n, length / n as f64)
}

/// Sequentially sampled bridge coordinate pinned at `target` at `length`.
struct BridgeCoord {
    value: f64,
    target: f64,
}

impl BridgeCoord {
    fn advance<R: RngCore + ?Sized>(&mut self, elapsed: f64, h: f64, length: f64, rng: &mut R) {
        let remaining = length - elapsed;
        if remaining <= h {
            self.value = self.target;
            return;
        }
        let mean = self.value + (self.target - self.value) * h / remaining;
        let var = h * (remaining - h) / remaining;
        let z: f64 = rng.sample(StandardNormal);
        self.value = mean + var.sqrt() * z;
    }
}

/// Brownian bridge from `from` to `to` over `[0, length]`.
pub fn sample_brownian_bridge<R: RngCore + ?Sized>(
    from: f64,
    to: f64,
    length: f64,
    grid: &GridSpec,
    rng: &mut R,
) -> Result<SampledPath> {
    finite("from", from)?;
    finite("to", to)?;
    positive("length", length)?;
    let (n, h) = uniform_times(length, grid);
    let mut coord = BridgeCoord {
        value: from,
        target: to,
    };
    let mut times = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    times.push(0.0);
    values.push(from);
    for k in 1..=n {
        coord.advance((k - 1) as f64 * h, h, length, rng);
        times.push(if k == n { length } else { k as f64 * h });
        values.push(coord.value);
    }
    Ok(SampledPath::from_parts_unchecked(times, values, rng.next_u64()))
}

/// Norm of a 3-d Brownian bridge from the origin to `(endpoint, 0, 0)`.
struct Bessel3Bridge {
    coords: [BridgeCoord; 3],
}

impl Bessel3Bridge {
    fn new(endpoint: f64) -> Self {
        Bessel3Bridge {
            coords: [
                BridgeCoord {
                    value: 0.0,
                    target: endpoint,
                },
                BridgeCoord {
                    value: 0.0,
                    target: 0.0,
                },
                BridgeCoord {
                    value: 0.0,
                    target: 0.0,
                },
            ],
        }
    }

    fn advance<R: RngCore + ?Sized>(&mut self, elapsed: f64, h: f64, length: f64, rng: &mut R) -> f64 {
        for c in self.coords.iter_mut() {
            c.advance(elapsed, h, length, rng);
        }
        let [x, y, z] = [self.coords[0].value, self.coords[1].value, self.coords[2].value];
        (x * x + y * y + z * z).sqrt()
    }
}

/// Bessel(3) bridge from 0 to `endpoint > 0` over `[0, length]`.
pub fn sample_bessel3_bridge<R: RngCore + ?Sized>(
    endpoint: f64,
    length: f64,
    grid: &GridSpec,
    rng: &mut R,
) -> Result<SampledPath> {
    positive("endpoint", endpoint)?;
    positive("length", length)?;
    bessel3_capped(endpoint, length, f64::INFINITY, grid, rng).map(|p| p.expect("uncapped bridge is never rejected"))
}

/// Bessel(3) bridge that is abandoned as soon as it reaches `cap`; between
/// grid points the radial process is treated as a Brownian bridge.
fn bessel3_capped<R: RngCore + ?Sized>(
    endpoint: f64,
    length: f64,
    cap: f64,
    grid: &GridSpec,
    rng: &mut R,
) -> Result<Option<SampledPath>> {
    if endpoint >= cap {
        return Ok(None);
    }
    let (n, h) = uniform_times(length, grid);
    let mut bridge = Bessel3Bridge::new(endpoint);
    let mut times = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    times.push(0.0);
    values.push(0.0);
    let mut prev = 0.0;
    for k in 1..=n {
        let mut r = bridge.advance((k - 1) as f64 * h, h, length, rng);
        if k == n {
            r = endpoint;
        }
        if cap.is_finite() {
            if r >= cap {
                return Ok(None);
            }
            let p = bridge_cross_prob(prev, r, cap, h);
            if p > 0.0 && rng.random::<f64>() < p {
                return Ok(None);
            }
        }
        times.push(if k == n { length } else { k as f64 * h });
        values.push(r);
        prev = r;
    }
    Ok(Some(SampledPath::from_parts_unchecked(times, values, rng.next_u64())))
}

/// Rayleigh endpoint with scale `sqrt(length)`.
fn meander_endpoint<R: RngCore + ?Sized>(length: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    (-2.0 * length * u.ln()).sqrt()
}

/// Brownian meander of duration `length`: positive on `(0, length]`.
pub fn sample_meander<R: RngCore + ?Sized>(length: f64, grid: &GridSpec, rng: &mut R) -> Result<SampledPath> {
    positive("length", length)?;
    let r = meander_endpoint(length, rng);
    sample_bessel3_bridge(r, length, grid, rng)
}

/// One meander proposal that is returned only if it stays below `cap`.
pub fn sample_meander_below<R: RngCore + ?Sized>(
    length: f64,
    cap: f64,
    grid: &GridSpec,
    rng: &mut R,
) -> Result<Option<SampledPath>> {
    positive("length", length)?;
    positive("cap", cap)?;
    let r = meander_endpoint(length, rng);
    bessel3_capped(r, length, cap, grid, rng)
}
