use alloc::vec::Vec;
use core::cmp::Ordering;
#[allow(unused_imports)]
use num_traits::Float;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::interval::{Interval, Side};
use crate::math::bridge_max_below;
use crate::stream::{node_rng, step_key, Purpose};

/// A Brownian trajectory known at a strictly increasing set of times.
///
/// Between stored points the path is a Brownian bridge. Its hidden values
/// are drawn from generators keyed by `key` and the bracketing times, so
/// every query of the same path sees the same trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    times: Vec<f64>,
    values: Vec<f64>,
    key: u64,
    time_reversed: bool,
}

impl SampledPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>, key: u64) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::Invalid(
                "path needs matching, non-empty time and value lists".into(),
            ));
        }
        if times[0] != 0.0 {
            return Err(Error::Invalid("path times must start at 0".into()));
        }
        if times
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(Ordering::Greater))
        {
            return Err(Error::Invalid("path times must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("path values must be finite".into()));
        }
        Ok(SampledPath {
            times,
            values,
            key,
            time_reversed: false,
        })
    }

    pub(crate) fn from_parts_unchecked(times: Vec<f64>, values: Vec<f64>, key: u64) -> Self {
        debug_assert_eq!(times.len(), values.len());
        SampledPath {
            times,
            values,
            key,
            time_reversed: false,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn origin(&self) -> f64 {
        self.values[0]
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Whether this path was obtained by [`SampledPath::reversed`]; hidden
    /// bridges are then read in mirrored order.
    pub fn is_time_reversed(&self) -> bool {
        self.time_reversed
    }

    pub(crate) fn push(&mut self, t: f64, v: f64) {
        debug_assert!(t > self.horizon());
        self.times.push(t);
        self.values.push(v);
    }

    /// Index `i` of the step `[times[i], times[i+1])` containing `t`.
    /// Returns the last index when `t` equals the horizon.
    pub fn locate(&self, t: f64) -> Option<usize> {
        if t.is_nan() || t < 0.0 || t > self.horizon() {
            return None;
        }
        let i = self.times.partition_point(|&s| s <= t);
        Some(i.saturating_sub(1))
    }

    pub(crate) fn step_key(&self, i: usize) -> u64 {
        step_key(self.key, self.values[i], self.values[i + 1])
    }

    /// Path value at time `t`, drawing the hidden bridge value when `t` is
    /// not a stored time.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let i = self.locate(t)?;
        if self.times[i] == t {
            return Some(self.values[i]);
        }
        let key = self.step_key(i);
        Some(interior_value(
            key,
            self.times[i],
            self.values[i],
            self.times[i + 1],
            self.values[i + 1],
            t,
        ))
    }

    /// Insert the hidden value at `t` as a stored point; returns its index.
    pub fn insert_point(&mut self, t: f64) -> Option<usize> {
        let i = self.locate(t)?;
        if self.times[i] == t {
            return Some(i);
        }
        let v = self.value_at(t)?;
        self.times.insert(i + 1, t);
        self.values.insert(i + 1, v);
        Some(i + 1)
    }

    /// Insert bridge midpoints until every step is at most `max_dt` long.
    /// Each inserted value is the one [`SampledPath::insert_point`] would
    /// produce at that stage of halving.
    pub fn refine(&mut self, max_dt: f64) {
        if max_dt.is_nan() || max_dt <= 0.0 {
            return;
        }
        let mut times = Vec::with_capacity(self.times.len());
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.times.len() - 1 {
            times.push(self.times[i]);
            values.push(self.values[i]);
            self.halve(
                (self.times[i], self.values[i]),
                (self.times[i + 1], self.values[i + 1]),
                max_dt,
                &mut times,
                &mut values,
            );
        }
        times.push(self.horizon());
        values.push(*self.values.last().unwrap());
        self.times = times;
        self.values = values;
    }

    fn halve(
        &self,
        (t0, v0): (f64, f64),
        (t1, v1): (f64, f64),
        max_dt: f64,
        times: &mut Vec<f64>,
        values: &mut Vec<f64>,
    ) {
        let tm = 0.5 * (t0 + t1);
        if t1 - t0 <= max_dt || !(tm > t0 && tm < t1) {
            return;
        }
        let vm = interior_value(step_key(self.key, v0, v1), t0, v0, t1, v1, tm);
        self.halve((t0, v0), (tm, vm), max_dt, times, values);
        times.push(tm);
        values.push(vm);
        self.halve((tm, vm), (t1, v1), max_dt, times, values);
    }

    /// The path run backwards from its horizon. Boundary detection on the
    /// result resolves the same hidden bridges as on `self`.
    pub fn reversed(&self) -> SampledPath {
        let h = self.horizon();
        let times = self.times.iter().rev().map(|&t| h - t).collect();
        let values = self.values.iter().rev().copied().collect();
        SampledPath {
            times,
            values,
            key: self.key,
            time_reversed: !self.time_reversed,
        }
    }
}

/// Hidden value at `t` of the bridge `(t0, v0) -> (t1, v1)` with key `key`.
pub(crate) fn interior_value(key: u64, t0: f64, v0: f64, t1: f64, v1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let w = (t - t0) / h;
    let var = (t - t0) * (t1 - t) / h;
    let z: f64 = node_rng(key, t.to_bits(), Purpose::Interior).sample(StandardNormal);
    v0 + w * (v1 - v0) + var.max(0.0).sqrt() * z
}

/// A path fragment that leaves a boundary point, stays in the interval and
/// is frozen at the boundary point where it first leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct Excursion {
    start: Side,
    exit: Side,
    interval: Interval,
    samples: SampledPath,
    lifetime: f64,
    peak: f64,
}

impl Excursion {
    /// Build from points on the excursion's own clock. The first point must
    /// be `(0, boundary(start))` and the last `(lifetime, boundary(exit))`;
    /// interior values are clamped into `[a, b]`.
    ///
    /// The supremum of the displacement between stored points is drawn from
    /// the exact bridge-maximum law conditioned on not reaching the far side.
    pub fn from_points<R: RngCore + ?Sized>(
        interval: Interval,
        start: Side,
        exit: Side,
        times: Vec<f64>,
        mut values: Vec<f64>,
        rng: &mut R,
    ) -> Result<Self> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(Error::Invalid("excursion needs at least two points".into()));
        }
        if times[0] != 0.0 || values[0] != interval.boundary(start) {
            return Err(Error::Invalid(
                "excursion must start at its boundary point at clock 0".into(),
            ));
        }
        let n = values.len();
        if values[n - 1] != interval.boundary(exit) {
            return Err(Error::Invalid("excursion must end at its exit boundary point".into()));
        }
        for v in values.iter_mut() {
            *v = interval.clamp(*v);
        }
        let lifetime = times[n - 1];
        if lifetime.is_nan() || lifetime <= 0.0 {
            return Err(Error::Invalid("excursion lifetime must be positive".into()));
        }
        let samples = SampledPath::new(times, values, 0)?;

        let origin = interval.boundary(start);
        let disp = |v: f64| (v - origin).abs();
        let length = interval.length();
        let mut peak: f64 = 0.0;
        for (tw, vw) in samples.times.windows(2).zip(samples.values.windows(2)) {
            let (x, y) = (disp(vw[0]), disp(vw[1]));
            let u: f64 = rng.random();
            peak = peak.max(bridge_max_below(x, y, tw[1] - tw[0], length, u));
        }
        Ok(Excursion {
            start,
            exit,
            interval,
            samples,
            lifetime,
            peak,
        })
    }

    pub fn start(&self) -> Side {
        self.start
    }

    pub fn start_value(&self) -> f64 {
        self.interval.boundary(self.start)
    }

    pub fn exit(&self) -> Side {
        self.exit
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn samples(&self) -> &SampledPath {
        &self.samples
    }

    pub fn lifetime(&self) -> f64 {
        self.lifetime
    }

    /// Sampled supremum of `|zeta(r) - zeta(0)|` over the whole lifetime.
    pub fn peak_displacement(&self) -> f64 {
        self.peak
    }

    /// Value at clock `r`, linear between stored points and frozen after
    /// the lifetime.
    pub fn value_at(&self, r: f64) -> f64 {
        let times = &self.samples.times;
        let values = &self.samples.values;
        if r <= 0.0 {
            return values[0];
        }
        if r >= self.lifetime {
            return *values.last().unwrap();
        }
        let i = times.partition_point(|&s| s <= r) - 1;
        if times[i] == r {
            return values[i];
        }
        let w = (r - times[i]) / (times[i + 1] - times[i]);
        values[i] + w * (values[i + 1] - values[i])
    }

    /// Fraction of the lifetime spent strictly above `level`, with the path
    /// linear between stored points.
    pub fn fraction_above(&self, level: f64) -> f64 {
        let times = &self.samples.times;
        let values = &self.samples.values;
        let mut above = 0.0;
        for (tw, vw) in times.windows(2).zip(values.windows(2)) {
            let dt = tw[1] - tw[0];
            let (x, y) = (vw[0] - level, vw[1] - level);
            above += if x > 0.0 && y > 0.0 {
                dt
            } else if x > 0.0 && y <= 0.0 {
                dt * x / (x - y)
            } else if x <= 0.0 && y > 0.0 {
                dt * y / (y - x)
            } else {
                0.0
            };
        }
        (above / self.lifetime).clamp(0.0, 1.0)
    }

    /// The same excursion reflected through the interval midpoint.
    pub fn mirrored(&self) -> Excursion {
        let values = self.samples.values.iter().map(|&v| self.interval.mirror(v)).collect();
        Excursion {
            start: self.start.mirror(),
            exit: self.exit.mirror(),
            interval: self.interval,
            samples: SampledPath::from_parts_unchecked(self.samples.times.clone(), values, 0),
            lifetime: self.lifetime,
            peak: self.peak,
        }
    }
}

/// Functionals recorded for every observed straddling excursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StraddleFunctionals {
    pub lifetime: f64,
    /// `W_t - W_sigma`
    pub endpoint_disp: f64,
    pub sup_disp: f64,
    pub occ_above_mid: f64,
}

/// One replicate's straddling-excursion record at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StraddleObservation {
    pub t: f64,
    /// Last time at or before `t` outside the interval; 0 when never exited.
    pub sigma: f64,
    /// First exit after `t`.
    pub d: f64,
    /// Boundary value at `sigma`; equals `W_0` when never exited.
    pub x_sigma: f64,
    pub side: Option<Side>,
    pub w_t: f64,
    pub never_exited: bool,
    pub zeta: Option<Excursion>,
    pub functionals: Option<StraddleFunctionals>,
}

impl StraddleObservation {
    pub fn age(&self) -> f64 {
        self.t - self.sigma
    }
}

/// One draw `(X, Y, zeta)` from the limit law.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitSample {
    pub x: Side,
    pub y: f64,
    pub zeta: Excursion,
}
