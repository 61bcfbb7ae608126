//! The excursion straddling a fixed time, excursion intervals of a path,
//! and a downcrossing estimator of local time.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::engine::{
    extend_path, node_midpoint, scan_backward, scan_backward_points, scan_forward, scan_forward_points, CrossingKind,
    ExitEvent, GridSpec, Scanner, PRUNE_FLOOR,
};
use crate::error::{finite, positive, Error, Result};
use crate::interval::{Interval, Side};
use crate::math::bridge_cross_prob;
use crate::path::{Excursion, SampledPath, StraddleFunctionals, StraddleObservation};
use crate::stream::{node_rng, step_key, Purpose};

/// Longest stretch a path is extended while looking for an exit, in units
/// of `L^2`.
const MAX_EXTENSION: f64 = 1e4;

/// Last boundary visit at or before `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaLocation {
    pub sigma: f64,
    /// Boundary value at `sigma`, or `W_0` when the path never left.
    pub x_sigma: f64,
    pub side: Option<Side>,
    pub never_exited: bool,
}

fn require_inside(interval: &Interval, v: f64, what: &str) -> Result<()> {
    if interval.contains(v) {
        Ok(())
    } else {
        Err(Error::Invalid(alloc::format!(
            "{what}: path value {v} at the reference time is not inside the interval"
        )))
    }
}

/// Backward scan from `t` for the last time the path was outside or on the
/// boundary of the interval.
pub fn locate_sigma(path: &SampledPath, t: f64, interval: &Interval, grid: &GridSpec) -> Result<SigmaLocation> {
    let w_t = path
        .value_at(t)
        .ok_or_else(|| Error::Invalid("t lies outside the path".into()))?;
    require_inside(interval, w_t, "locate_sigma")?;
    let scanner = Scanner::new(*interval, grid.fine_dt());
    let scan = scan_backward(path, &scanner, t)?;
    Ok(sigma_from(
        scan.entry.map(|c| (c.time, c.side)),
        path.origin(),
        interval,
    ))
}

fn sigma_from(entry: Option<(f64, Side)>, origin: f64, interval: &Interval) -> SigmaLocation {
    match entry {
        Some((sigma, side)) => SigmaLocation {
            sigma,
            x_sigma: interval.boundary(side),
            side: Some(side),
            never_exited: false,
        },
        None => SigmaLocation {
            sigma: 0.0,
            x_sigma: origin,
            side: None,
            never_exited: true,
        },
    }
}

/// Forward scan from `t` for the first exit, extending the path with fresh
/// increments while none is found.
pub fn locate_d<R: RngCore + ?Sized>(
    path: &mut SampledPath,
    t: f64,
    interval: &Interval,
    grid: &GridSpec,
    rng: &mut R,
) -> Result<ExitEvent> {
    forward_exit(path, t, interval, grid, rng).map(|(e, _)| e)
}

fn forward_exit<R: RngCore + ?Sized>(
    path: &mut SampledPath,
    t: f64,
    interval: &Interval,
    grid: &GridSpec,
    rng: &mut R,
) -> Result<(ExitEvent, Vec<(f64, f64)>)> {
    let scanner = Scanner::new(*interval, grid.fine_dt());
    let l2 = interval.length() * interval.length();
    let mut chunk = l2;
    loop {
        let scan = scan_forward(path, &scanner, t)?;
        if let Some(c) = scan.exit {
            return Ok((
                ExitEvent {
                    time: c.time,
                    side: c.side,
                },
                scan.points,
            ));
        }
        if path.horizon() - t > MAX_EXTENSION * l2 {
            return Err(Error::Invalid("no exit found after extending the path".into()));
        }
        let target = path.horizon() + chunk;
        extend_path(path, target, grid, rng);
        chunk *= 2.0;
    }
}

/// Assemble the straddling excursion from its entry, the points in between
/// and its exit. Times are absolute; the excursion clock starts at `sigma`.
#[allow(clippy::too_many_arguments)]
fn assemble<R: RngCore + ?Sized>(
    interval: &Interval,
    (sigma, start): (f64, Side),
    before: &[(f64, f64)],
    at_t: (f64, f64),
    after: &[(f64, f64)],
    exit: ExitEvent,
    rng: &mut R,
) -> Result<Excursion> {
    let n = before.len() + after.len() + 3;
    let mut times = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    times.push(0.0);
    values.push(interval.boundary(start));
    for &(s, v) in before.iter().chain(core::iter::once(&at_t)).chain(after) {
        times.push(s - sigma);
        values.push(v);
    }
    times.push(exit.time - sigma);
    values.push(interval.boundary(exit.side));
    Excursion::from_points(*interval, start, exit.side, times, values, rng)
}

fn functionals(zeta: &Excursion, endpoint_disp: f64) -> StraddleFunctionals {
    StraddleFunctionals {
        lifetime: zeta.lifetime(),
        endpoint_disp,
        sup_disp: zeta.peak_displacement(),
        occ_above_mid: zeta.fraction_above(zeta.interval().midpoint()),
    }
}

#[allow(clippy::too_many_arguments)]
fn observation<R: RngCore + ?Sized>(
    interval: &Interval,
    (t, w_t): (f64, f64),
    sigma: SigmaLocation,
    before: &[(f64, f64)],
    after: &[(f64, f64)],
    exit: ExitEvent,
    keep_zeta: bool,
    rng: &mut R,
) -> Result<StraddleObservation> {
    let (zeta, funcs) = match sigma.side {
        Some(side) => {
            let zeta = assemble(interval, (sigma.sigma, side), before, (t, w_t), after, exit, rng)?;
            let f = functionals(&zeta, w_t - sigma.x_sigma);
            (keep_zeta.then_some(zeta), Some(f))
        }
        None => (None, None),
    };
    Ok(StraddleObservation {
        t,
        sigma: sigma.sigma,
        d: exit.time,
        x_sigma: sigma.x_sigma,
        side: sigma.side,
        w_t,
        never_exited: sigma.never_exited,
        zeta,
        functionals: funcs,
    })
}

/// `(sigma_t, d_t, zeta_t)` of a path whose value at `t` lies inside the
/// interval. The path is extended if it ends before the excursion does.
pub fn extract_zeta<R: RngCore + ?Sized>(
    path: &mut SampledPath,
    t: f64,
    interval: &Interval,
    grid: &GridSpec,
    rng: &mut R,
) -> Result<StraddleObservation> {
    path.insert_point(t)
        .ok_or_else(|| Error::Invalid("t lies outside the path".into()))?;
    let w_t = path.value_at(t).unwrap();
    require_inside(interval, w_t, "extract_zeta")?;
    let scanner = Scanner::new(*interval, grid.fine_dt());
    let back = scan_backward(path, &scanner, t)?;
    let sigma = sigma_from(back.entry.map(|c| (c.time, c.side)), path.origin(), interval);
    let (exit, after) = forward_exit(path, t, interval, grid, rng)?;
    observation(interval, (t, w_t), sigma, &back.points, &after, exit, true, rng)
}

/// One replicate of the straddle study: Brownian motion from `start`
/// observed at `t`. Returns `None` when `W_t` falls outside the interval.
///
/// `W_t` is drawn first; the path before `t` is then generated backwards as
/// a bridge to `W_0 = start` only until the last boundary visit, and the
/// path after `t` forwards only until the exit.
pub fn straddle_replicate<R: RngCore + ?Sized>(
    t: f64,
    start: f64,
    interval: &Interval,
    grid: &GridSpec,
    keep_zeta: bool,
    rng: &mut R,
) -> Result<Option<StraddleObservation>> {
    positive("t", t)?;
    finite("start", start)?;
    let z: f64 = rng.sample(StandardNormal);
    let w_t = start + t.sqrt() * z;
    if !interval.contains(w_t) {
        return Ok(None);
    }
    let key = rng.next_u64();
    let scanner = Scanner::new(*interval, grid.fine_dt());
    let n = grid.steps_for(t);
    let h = t / n as f64;

    let mut cur = (t, w_t);
    let backward = (1..=n).map(|k| {
        let tau = if k == n { 0.0 } else { (n - k) as f64 * h };
        let v = if k == n {
            start
        } else {
            let (s, w) = cur;
            let mean = start + (w - start) * tau / s;
            let var = (s - tau) * tau / s;
            let z: f64 = rng.sample(StandardNormal);
            mean + var.sqrt() * z
        };
        cur = (tau, v);
        cur
    });
    let back = scan_backward_points(&scanner, key, false, (t, w_t), backward);
    let sigma = sigma_from(back.entry.map(|c| (c.time, c.side)), start, interval);

    let sd = h.sqrt();
    let mut fwd = (t, w_t);
    let mut steps = 0u64;
    let cap = (MAX_EXTENSION * interval.length() * interval.length() / h) as u64;
    let forward = core::iter::from_fn(|| {
        if steps >= cap {
            return None;
        }
        steps += 1;
        let z: f64 = rng.sample(StandardNormal);
        fwd = (t + steps as f64 * h, fwd.1 + sd * z);
        Some(fwd)
    });
    let ahead = scan_forward_points(&scanner, key, false, (t, w_t), forward);
    let exit = ahead
        .exit
        .map(|c| ExitEvent {
            time: c.time,
            side: c.side,
        })
        .ok_or_else(|| Error::Invalid("no exit found after t".into()))?;
    observation(
        interval,
        (t, w_t),
        sigma,
        &back.points,
        &ahead.points,
        exit,
        keep_zeta,
        rng,
    )
    .map(Some)
}

/// Maximal interval `(alpha, beta)` on which the path stays inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcursionInterval {
    pub alpha: f64,
    pub beta: f64,
    /// Boundary point at `alpha`.
    pub side: Side,
    /// The path was still inside at its horizon; `beta` is the horizon.
    pub censored: bool,
}

impl ExcursionInterval {
    pub fn length(&self) -> f64 {
        self.beta - self.alpha
    }
}

/// Excursions into the interval from its boundary, in time order. The
/// initial stretch of a path started inside is not an excursion and is
/// skipped; intervals shorter than `fine_dt` are treated as boundary time.
pub fn enumerate_excursions(path: &SampledPath, interval: &Interval, grid: &GridSpec) -> Vec<ExcursionInterval> {
    let scanner = Scanner::new(*interval, grid.fine_dt());
    let min_len = grid.fine_dt();
    let mirrored = path.is_time_reversed();
    let mut out = Vec::new();
    // `Some(Some(..))`: inside since a boundary visit; `Some(None)`: inside
    // since time 0.
    let mut open: Option<Option<(f64, Side)>> = interval.contains(path.origin()).then_some(None);
    let mut close = |open: &mut Option<Option<(f64, Side)>>, beta: f64, censored: bool| {
        if let Some(Some((alpha, side))) = open.take() {
            if beta - alpha >= min_len || censored {
                out.push(ExcursionInterval {
                    alpha,
                    beta,
                    side,
                    censored,
                });
            }
        }
    };
    let mut events = Vec::new();
    let mut skeleton = Vec::new();
    let (times, values) = (path.times(), path.values());
    for i in 0..times.len().saturating_sub(1) {
        events.clear();
        skeleton.clear();
        let key = step_key(path.key(), values[i], values[i + 1]);
        scanner.resolve(
            key,
            (times[i], values[i]),
            (times[i + 1], values[i + 1]),
            mirrored,
            &mut events,
            &mut skeleton,
        );
        for c in &events {
            match c.kind {
                CrossingKind::Exit => {
                    close(&mut open, c.time, false);
                }
                CrossingKind::Entry => open = Some(Some((c.time, c.side))),
                CrossingKind::Touch => {
                    close(&mut open, c.time, false);
                    open = Some(Some((c.time, c.side)));
                }
            }
        }
    }
    close(&mut open, path.horizon(), true);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Band {
    /// Reached `level + eps` since the last visit to `level`.
    Up,
    Down,
}

struct LevelWalk {
    key: u64,
    mirrored: bool,
    level: f64,
    upper: f64,
    floor_dt: f64,
    state: Band,
    count: u64,
}

impl LevelWalk {
    fn may_cross(&self, v0: f64, v1: f64, h: f64) -> bool {
        [self.level, self.upper]
            .iter()
            .any(|&l| (v0 - l) * (v1 - l) <= 0.0 || bridge_cross_prob(v0, v1, l, h) > PRUNE_FLOOR)
    }

    fn node(&mut self, node: u64, depth: u32, (t0, v0): (f64, f64), (t1, v1): (f64, f64)) {
        let h = t1 - t0;
        if h <= self.floor_dt || depth >= 60 {
            self.leaf(node, v0, v1, h);
            return;
        }
        if !self.may_cross(v0, v1, h) {
            return;
        }
        let tm = 0.5 * (t0 + t1);
        let vm = node_midpoint(self.key, node, v0, v1, h);
        let (left, right) = if self.mirrored {
            (2 * node + 1, 2 * node)
        } else {
            (2 * node, 2 * node + 1)
        };
        self.node(left, depth + 1, (t0, v0), (tm, vm));
        self.node(right, depth + 1, (tm, vm), (t1, v1));
    }

    fn leaf(&mut self, node: u64, v0: f64, v1: f64, h: f64) {
        let mut rng = node_rng(self.key, node, Purpose::LevelTouch);
        let (u_low, u_high): (f64, f64) = (rng.random(), rng.random());
        let hits = |level: f64, u: f64| (v0 - level) * (v1 - level) <= 0.0 || u < bridge_cross_prob(v0, v1, level, h);
        match self.state {
            Band::Up => {
                if v1 <= self.level || hits(self.level, u_low) {
                    self.count += 1;
                    self.state = Band::Down;
                    if v1 >= self.upper {
                        self.state = Band::Up;
                    }
                }
            }
            Band::Down => {
                if v1 >= self.upper || hits(self.upper, u_high) {
                    self.state = Band::Up;
                    if v1 <= self.level {
                        self.count += 1;
                        self.state = Band::Down;
                    }
                }
            }
        }
    }
}

/// `2 eps` times the number of downcrossings from `level + eps` to `level`
/// before `horizon`. Near the two levels the hidden path is resolved to
/// steps of `(eps / 4)^2`.
pub fn downcrossing_local_time(path: &SampledPath, level: f64, epsilon: f64, horizon: f64) -> Result<f64> {
    finite("level", level)?;
    positive("epsilon", epsilon)?;
    positive("horizon", horizon)?;
    if horizon > path.horizon() {
        return Err(Error::OutOfRange {
            name: "horizon",
            value: horizon,
            expected: "must not exceed the path horizon",
        });
    }
    let upper = level + epsilon;
    let mut walk = LevelWalk {
        key: 0,
        mirrored: path.is_time_reversed(),
        level,
        upper,
        floor_dt: 0.0625 * epsilon * epsilon,
        state: if path.origin() >= upper { Band::Up } else { Band::Down },
        count: 0,
    };
    let (times, values) = (path.times(), path.values());
    for i in 0..times.len() - 1 {
        if times[i] >= horizon {
            break;
        }
        let p0 = (times[i], values[i]);
        let p1 = if times[i + 1] <= horizon {
            (times[i + 1], values[i + 1])
        } else {
            (horizon, path.value_at(horizon).unwrap())
        };
        walk.key = step_key(path.key(), p0.1, p1.1);
        walk.node(1, 0, p0, p1);
    }
    Ok(2.0 * epsilon * walk.count as f64)
}
