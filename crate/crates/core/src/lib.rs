//! Brownian excursions straddling a fixed time in an interval: path
//! simulation with bridge-corrected boundary detection, excursion
//! extraction, conditional excursion samplers, series for survival laws,
//! and the statistics used to compare them.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytic;
pub mod engine;
pub mod error;
pub mod extract;
pub mod interval;
pub mod limit;
pub mod math;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod path;
pub mod stats;
pub mod stream;

pub use error::{Error, Result};
pub use interval::{Interval, Region, Side};
pub use path::{Excursion, LimitSample, SampledPath, StraddleFunctionals, StraddleObservation};
pub use stream::RngStream;
