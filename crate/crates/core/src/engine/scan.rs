//! Boundary crossings inside a coarse step.
//!
//! A step `(t0, v0) -> (t1, v1)` is refined by recursive bridge bisection.
//! Node `n` of the bisection tree (root 1, children `2n`, `2n + 1`) draws its
//! midpoint from a generator keyed by the step key and `n`, so the refinement
//! is a fixed property of the path: forward scans, backward scans and
//! enumeration all see the same hidden trajectory.
//!
//! A node is bisected while it can still contain a change of region: an
//! endpoint pair on different sides of a boundary, or a bridge crossing
//! probability above [`PRUNE_FLOOR`]. At resolution `fine_dt` a leaf whose
//! endpoints are both inside touches the boundary with the single-barrier
//! bridge probabilities `p_a + p_b`.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::interval::{Interval, Region, Side};
use crate::math::bridge_cross_prob;
use crate::stream::{node_rng, Purpose};

/// Crossing probability below which a node is not refined further.
pub const PRUNE_FLOOR: f64 = 1e-13;

const MAX_DEPTH: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingKind {
    /// Leaves the interval; reported at the first violating fine point.
    Exit,
    /// Enters the interval; reported at the last violating fine point.
    Entry,
    /// Touches the boundary inside one fine step and comes back; reported
    /// at the middle of that step.
    Touch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub time: f64,
    pub kind: CrossingKind,
    pub side: Side,
}

impl Crossing {
    pub fn leaves(&self) -> bool {
        matches!(self.kind, CrossingKind::Exit | CrossingKind::Touch)
    }

    pub fn enters(&self) -> bool {
        matches!(self.kind, CrossingKind::Entry | CrossingKind::Touch)
    }
}

/// Midpoint of tree node `node` for the bridge `v0 -> v1` of duration `h`.
pub(crate) fn node_midpoint(key: u64, node: u64, v0: f64, v1: f64, h: f64) -> f64 {
    let z: f64 = node_rng(key, node, Purpose::Midpoint).sample(StandardNormal);
    0.5 * (v0 + v1) + 0.5 * h.sqrt() * z
}

#[derive(Debug, Clone, Copy)]
pub struct Scanner {
    interval: Interval,
    fine_dt: f64,
    bridge_corrected: bool,
}

impl Scanner {
    pub fn new(interval: Interval, fine_dt: f64) -> Self {
        Scanner {
            interval,
            fine_dt,
            bridge_corrected: true,
        }
    }

    /// Only crossings that show up as a violating fine-grid point; hidden
    /// touches between inside points are ignored.
    pub fn endpoint_only(interval: Interval, fine_dt: f64) -> Self {
        Scanner {
            interval,
            fine_dt,
            bridge_corrected: false,
        }
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn fine_dt(&self) -> f64 {
        self.fine_dt
    }

    /// Combined single-barrier probability used to decide whether a step
    /// with both ends inside may hide a crossing.
    pub fn hidden_crossing_prob(&self, v0: f64, v1: f64, h: f64) -> f64 {
        let pa = bridge_cross_prob(v0, v1, self.interval.a(), h);
        let pb = bridge_cross_prob(v0, v1, self.interval.b(), h);
        (pa + pb).min(1.0)
    }

    /// All crossings of the step in time order. Generated skeleton points
    /// (strictly inside the step) are appended to `points` in time order.
    /// `mirrored` reads the bisection tree right to left, which is how a
    /// time-reversed path sees the same bridge.
    pub fn resolve(
        &self,
        key: u64,
        (t0, v0): (f64, f64),
        (t1, v1): (f64, f64),
        mirrored: bool,
        events: &mut Vec<Crossing>,
        points: &mut Vec<(f64, f64)>,
    ) {
        let mut walk = Walk {
            key,
            mirrored,
            events,
            points,
        };
        self.node(&mut walk, 1, 0, t0, v0, t1, v1);
    }

    fn may_change(&self, v0: f64, v1: f64, h: f64) -> bool {
        let (a, b) = (self.interval.a(), self.interval.b());
        match (self.interval.region(v0), self.interval.region(v1)) {
            (Region::Inside, Region::Inside) => {
                self.bridge_corrected && self.hidden_crossing_prob(v0, v1, h) > PRUNE_FLOOR
            }
            (Region::Below, Region::Below) => bridge_cross_prob(v0, v1, a, h) > PRUNE_FLOOR,
            (Region::Above, Region::Above) => bridge_cross_prob(v0, v1, b, h) > PRUNE_FLOOR,
            _ => true,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn node(&self, walk: &mut Walk<'_>, node: u64, depth: u32, t0: f64, v0: f64, t1: f64, v1: f64) {
        let h = t1 - t0;
        if h <= self.fine_dt || depth >= MAX_DEPTH {
            self.leaf(walk.key, node, t0, v0, t1, v1, walk.events);
            return;
        }
        if !self.may_change(v0, v1, h) {
            return;
        }
        let tm = 0.5 * (t0 + t1);
        let vm = node_midpoint(walk.key, node, v0, v1, h);
        let (left, right) = if walk.mirrored {
            (2 * node + 1, 2 * node)
        } else {
            (2 * node, 2 * node + 1)
        };
        self.node(walk, left, depth + 1, t0, v0, tm, vm);
        walk.points.push((tm, vm));
        self.node(walk, right, depth + 1, tm, vm, t1, v1);
    }

    #[allow(clippy::too_many_arguments)]
    fn leaf(&self, key: u64, node: u64, t0: f64, v0: f64, t1: f64, v1: f64, events: &mut Vec<Crossing>) {
        let iv = &self.interval;
        match (iv.region(v0), iv.region(v1)) {
            (Region::Inside, Region::Inside) => {
                if !self.bridge_corrected {
                    return;
                }
                let h = t1 - t0;
                let pa = bridge_cross_prob(v0, v1, iv.a(), h);
                let pb = bridge_cross_prob(v0, v1, iv.b(), h);
                if pa + pb <= PRUNE_FLOOR {
                    return;
                }
                let u: f64 = node_rng(key, node, Purpose::Touch).random();
                let side = if u < pa {
                    Side::A
                } else if u < pa + pb {
                    Side::B
                } else {
                    return;
                };
                events.push(Crossing {
                    time: 0.5 * (t0 + t1),
                    kind: CrossingKind::Touch,
                    side,
                });
            }
            (Region::Inside, out) => events.push(Crossing {
                time: t1,
                kind: CrossingKind::Exit,
                side: side_of(out),
            }),
            (out, Region::Inside) => events.push(Crossing {
                time: t0,
                kind: CrossingKind::Entry,
                side: side_of(out),
            }),
            _ => {}
        }
    }
}

struct Walk<'a> {
    key: u64,
    mirrored: bool,
    events: &'a mut Vec<Crossing>,
    points: &'a mut Vec<(f64, f64)>,
}

fn side_of(region: Region) -> Side {
    match region {
        Region::Below => Side::A,
        _ => Side::B,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scan(s: &Scanner, key: u64, v0: f64, v1: f64, h: f64) -> (Vec<Crossing>, Vec<(f64, f64)>) {
        let mut ev = Vec::new();
        let mut pts = Vec::new();
        s.resolve(key, (0.0, v0), (h, v1), false, &mut ev, &mut pts);
        (ev, pts)
    }

    #[test]
    fn straddling_step_always_exits_inside_the_step() {
        let s = Scanner::new(Interval::unit(), 1e-6);
        for key in 0..200 {
            let (ev, pts) = scan(&s, key, 0.5, 1.2, 0.5);
            let first = ev.iter().find(|c| c.leaves()).expect("exit");
            assert!(first.time > 0.0 && first.time <= 0.5);
            assert!(pts.windows(2).all(|w| w[1].0 > w[0].0));
        }
    }

    #[test]
    fn far_from_boundary_nothing_is_refined() {
        let s = Scanner::new(Interval::unit(), 1e-6);
        let (ev, pts) = scan(&s, 3, 0.5, 0.5, 1e-3);
        assert!(ev.is_empty() && pts.is_empty());
    }

    #[test]
    fn events_alternate_leaving_and_entering() {
        let s = Scanner::new(Interval::unit(), 1e-6);
        for key in 0..200 {
            let (ev, _) = scan(&s, key, 0.01, 0.02, 0.01);
            let mut inside = true;
            for c in &ev {
                match c.kind {
                    CrossingKind::Exit => {
                        assert!(inside);
                        inside = false
                    }
                    CrossingKind::Entry => {
                        assert!(!inside);
                        inside = true
                    }
                    CrossingKind::Touch => assert!(inside),
                }
            }
            assert!(inside);
        }
    }

    #[test]
    fn refinement_is_deterministic() {
        let s = Scanner::new(Interval::unit(), 1e-6);
        assert_eq!(scan(&s, 11, 0.02, 0.9, 0.1), scan(&s, 11, 0.02, 0.9, 0.1));
    }
}
