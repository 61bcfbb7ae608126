//! Brownian paths on coarse grids with exact Gaussian increments, bridge
//! refinement and bridge-corrected boundary-crossing detection.

mod conditioned;
mod scan;

pub use conditioned::{sample_bessel3_bridge, sample_brownian_bridge, sample_meander, sample_meander_below};
pub(crate) use scan::node_midpoint;
pub use scan::{Crossing, CrossingKind, Scanner, PRUNE_FLOOR};

use alloc::vec::Vec;
use core::cmp::Ordering;
#[allow(unused_imports)]
use num_traits::Float;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{finite, positive, Error, Result};
use crate::interval::{Interval, Side};
use crate::math::bridge_cross_prob;
use crate::path::SampledPath;
use crate::stream::step_key;

/// Coarse simulation step and the resolution floor of bisection refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    coarse_dt: f64,
    fine_dt: f64,
}

impl GridSpec {
    pub fn new(coarse_dt: f64, fine_dt: f64) -> Result<Self> {
        positive("coarse_dt", coarse_dt)?;
        positive("fine_dt", fine_dt)?;
        if fine_dt > coarse_dt {
            return Err(Error::OutOfRange {
                name: "fine_dt",
                value: fine_dt,
                expected: "must not exceed coarse_dt",
            });
        }
        Ok(GridSpec { coarse_dt, fine_dt })
    }

    /// `coarse_dt = 1e-3 L^2`, `fine_dt = 1e-6 L^2`.
    pub fn for_interval(interval: &Interval) -> Self {
        let l2 = interval.length() * interval.length();
        GridSpec {
            coarse_dt: 1e-3 * l2,
            fine_dt: 1e-6 * l2,
        }
    }

    pub fn coarse_dt(&self) -> f64 {
        self.coarse_dt
    }

    pub fn fine_dt(&self) -> f64 {
        self.fine_dt
    }

    /// Uniform step count covering `length` with steps of at most `coarse_dt`.
    pub(crate) fn steps_for(&self, length: f64) -> usize {
        let n = (length / self.coarse_dt - 1e-9).ceil();
        (n as usize).max(1)
    }
}

/// Brownian path from `origin` on `[0, horizon]`, exact at the grid times.
pub fn simulate_path<R: RngCore + ?Sized>(
    origin: f64,
    horizon: f64,
    grid: &GridSpec,
    rng: &mut R,
) -> Result<SampledPath> {
    finite("origin", origin)?;
    positive("horizon", horizon)?;
    let n = grid.steps_for(horizon);
    let h = horizon / n as f64;
    let sd = h.sqrt();
    let mut times = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    times.push(0.0);
    values.push(origin);
    let mut v = origin;
    for k in 1..=n {
        let z: f64 = rng.sample(StandardNormal);
        v += sd * z;
        times.push(if k == n { horizon } else { k as f64 * h });
        values.push(v);
    }
    let key = rng.next_u64();
    Ok(SampledPath::from_parts_unchecked(times, values, key))
}

/// Continue `path` with fresh increments up to `new_horizon`.
pub fn extend_path<R: RngCore + ?Sized>(path: &mut SampledPath, new_horizon: f64, grid: &GridSpec, rng: &mut R) {
    let start = path.horizon();
    if new_horizon.partial_cmp(&start) != Some(Ordering::Greater) {
        return;
    }
    let n = grid.steps_for(new_horizon - start);
    let h = (new_horizon - start) / n as f64;
    let sd = h.sqrt();
    let mut v = *path.values().last().unwrap();
    for k in 1..=n {
        let z: f64 = rng.sample(StandardNormal);
        v += sd * z;
        let t = if k == n { new_horizon } else { start + k as f64 * h };
        path.push(t, v);
    }
}

/// Midpoint of the Brownian bridge between two path points.
pub fn bridge_midpoint<R: RngCore + ?Sized>(
    (t1, v1): (f64, f64),
    (t2, v2): (f64, f64),
    rng: &mut R,
) -> Result<(f64, f64)> {
    if t2.partial_cmp(&t1) != Some(Ordering::Greater) {
        return Err(Error::Invalid("bridge midpoint needs time1 < time2".into()));
    }
    let z: f64 = rng.sample(StandardNormal);
    Ok((0.5 * (t1 + t2), 0.5 * (v1 + v2) + 0.5 * (t2 - t1).sqrt() * z))
}

/// Probability that a Brownian bridge from `x` to `y` over `dt` touches
/// `level`: `exp(-2 (x - level)(y - level) / dt)`, or 1 when an endpoint
/// is at or beyond the level.
pub fn single_barrier_cross_prob(x: f64, y: f64, level: f64, dt: f64) -> f64 {
    bridge_cross_prob(x, y, level, dt)
}

/// First exit from the interval after `from`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitEvent {
    pub time: f64,
    pub side: Side,
}

/// First time after `from` at which the path leaves `interval`, or `None`
/// if it stays inside up to the path horizon.
pub fn detect_exit(path: &SampledPath, interval: &Interval, from: f64, grid: &GridSpec) -> Result<Option<ExitEvent>> {
    let scanner = Scanner::new(*interval, grid.fine_dt());
    Ok(scan_forward(path, &scanner, from)?.exit.map(|c| ExitEvent {
        time: c.time,
        side: c.side,
    }))
}

pub(crate) struct ForwardScan {
    pub exit: Option<Crossing>,
    /// Points strictly between the start and the exit, in time order.
    /// Without an exit, every point after the start except the last.
    pub points: Vec<(f64, f64)>,
    /// Final point of the scanned steps when there was no exit.
    pub last: Option<(f64, f64)>,
}

/// Scan the steps `from -> next[0] -> next[1] -> ...` for the first
/// crossing that leaves the interval.
pub(crate) fn scan_forward_points(
    scanner: &Scanner,
    path_key: u64,
    mirrored: bool,
    from: (f64, f64),
    next: impl IntoIterator<Item = (f64, f64)>,
) -> ForwardScan {
    let mut cur = from;
    let mut points = Vec::new();
    let mut events = Vec::new();
    let mut skeleton = Vec::new();
    for nxt in next {
        if nxt.0 <= cur.0 {
            continue;
        }
        events.clear();
        skeleton.clear();
        let key = step_key(path_key, cur.1, nxt.1);
        scanner.resolve(key, cur, nxt, mirrored, &mut events, &mut skeleton);
        if let Some(c) = events.iter().find(|c| c.leaves()).copied() {
            points.extend(skeleton.iter().filter(|p| p.0 < c.time));
            return ForwardScan {
                exit: Some(c),
                points,
                last: None,
            };
        }
        points.extend_from_slice(&skeleton);
        points.push(nxt);
        cur = nxt;
    }
    let last = points.pop();
    ForwardScan {
        exit: None,
        points,
        last,
    }
}

pub(crate) fn scan_forward(path: &SampledPath, scanner: &Scanner, from: f64) -> Result<ForwardScan> {
    let i0 = path
        .locate(from)
        .ok_or_else(|| Error::Invalid("scan start lies outside the path".into()))?;
    let v_from = path.value_at(from).unwrap();
    if !scanner.interval().contains(v_from) {
        return Err(Error::Invalid("forward scan must start inside the interval".into()));
    }
    let rest = path.times()[i0 + 1..]
        .iter()
        .copied()
        .zip(path.values()[i0 + 1..].iter().copied());
    Ok(scan_forward_points(
        scanner,
        path.key(),
        path.is_time_reversed(),
        (from, v_from),
        rest,
    ))
}

pub(crate) struct BackwardScan {
    pub entry: Option<Crossing>,
    /// Points strictly between the entry and the end, in time order.
    /// Without an entry, every point before the end except the first.
    pub points: Vec<(f64, f64)>,
}

/// Scan the steps `... -> prev[1] -> prev[0] -> to` backwards for the last
/// crossing that enters the interval.
pub(crate) fn scan_backward_points(
    scanner: &Scanner,
    path_key: u64,
    mirrored: bool,
    to: (f64, f64),
    prev: impl IntoIterator<Item = (f64, f64)>,
) -> BackwardScan {
    let mut cur = to;
    let mut rev_points = Vec::new();
    let mut events = Vec::new();
    let mut skeleton = Vec::new();
    for prv in prev {
        if prv.0 >= cur.0 {
            continue;
        }
        events.clear();
        skeleton.clear();
        let key = step_key(path_key, prv.1, cur.1);
        scanner.resolve(key, prv, cur, mirrored, &mut events, &mut skeleton);
        if let Some(c) = events.iter().rev().find(|c| c.enters()).copied() {
            rev_points.extend(skeleton.iter().rev().filter(|p| p.0 > c.time));
            rev_points.reverse();
            return BackwardScan {
                entry: Some(c),
                points: rev_points,
            };
        }
        rev_points.extend(skeleton.iter().rev());
        rev_points.push(prv);
        cur = prv;
    }
    rev_points.pop();
    rev_points.reverse();
    BackwardScan {
        entry: None,
        points: rev_points,
    }
}

/// Last entry into the interval at or before `to`.
pub(crate) fn scan_backward(path: &SampledPath, scanner: &Scanner, to: f64) -> Result<BackwardScan> {
    let i = path
        .locate(to)
        .ok_or_else(|| Error::Invalid("scan end lies outside the path".into()))?;
    let v_to = path.value_at(to).unwrap();
    if !scanner.interval().contains(v_to) {
        return Err(Error::Invalid("backward scan must start inside the interval".into()));
    }
    let earlier = path.times()[..=i]
        .iter()
        .copied()
        .zip(path.values()[..=i].iter().copied())
        .rev();
    Ok(scan_backward_points(
        scanner,
        path.key(),
        path.is_time_reversed(),
        (to, v_to),
        earlier,
    ))
}

#[cfg(test)]
mod tests;
