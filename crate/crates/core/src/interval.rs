use crate::error::{finite, Error, Result};

/// Boundary point of the interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn mirror(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

/// Where a value sits relative to the open interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// `v <= a`
    Below,
    Inside,
    /// `v >= b`
    Above,
}

/// The open set `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        finite("a", a)?;
        finite("b", b)?;
        if a < b {
            Ok(Interval { a, b })
        } else {
            Err(Error::InvalidInterval { a, b })
        }
    }

    /// The unit interval `(0, 1)`.
    pub fn unit() -> Self {
        Interval { a: 0.0, b: 1.0 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn boundary(&self, side: Side) -> f64 {
        match side {
            Side::A => self.a,
            Side::B => self.b,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v > self.a && v < self.b
    }

    pub fn region(&self, v: f64) -> Region {
        if v <= self.a {
            Region::Below
        } else if v >= self.b {
            Region::Above
        } else {
            Region::Inside
        }
    }

    /// Nearest boundary point; ties go to `a`.
    pub fn snap(&self, v: f64) -> Side {
        if (v - self.a).abs() <= (self.b - v).abs() {
            Side::A
        } else {
            Side::B
        }
    }

    /// Reflection `v -> a + b - v` through the midpoint.
    pub fn mirror(&self, v: f64) -> f64 {
        self.a + self.b - v
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.a, self.b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_reversed_and_degenerate() {
        assert!(matches!(Interval::new(1.0, 0.0), Err(Error::InvalidInterval { .. })));
        assert!(Interval::new(0.5, 0.5).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
        let i = Interval::new(-1.0, 2.0).unwrap();
        assert_eq!(i.length(), 3.0);
    }

    #[test]
    fn snap_prefers_a_on_ties() {
        let i = Interval::unit();
        assert_eq!(i.snap(0.5), Side::A);
        assert_eq!(i.snap(-0.1), Side::A);
        assert_eq!(i.snap(0.51), Side::B);
        assert_eq!(i.snap(1.3), Side::B);
    }

    #[test]
    fn boundary_points_are_outside() {
        let i = Interval::unit();
        assert_eq!(i.region(0.0), Region::Below);
        assert_eq!(i.region(1.0), Region::Above);
        assert_eq!(i.region(0.3), Region::Inside);
    }
}
