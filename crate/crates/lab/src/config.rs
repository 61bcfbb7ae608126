//! Run configuration: a line-oriented `key = value` file with `#` comments,
//! overridden by command-line flags.

use std::collections::BTreeMap;
use std::fmt;

use sha2::{Digest, Sha256};
use straddle_core::analytic::SeriesConfig;
use straddle_core::engine::GridSpec;
use straddle_core::limit::SamplerConfig;
use straddle_core::Interval;

/// Where a setting came from, for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Flag,
    Default,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    pub origin: Origin,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.origin {
            Origin::Line(n) => write!(f, "config line {n}: `{}`: {}", self.key, self.message),
            Origin::Flag => write!(f, "flag --{}: {}", self.key.replace('_', "-"), self.message),
            Origin::Default => write!(f, "`{}`: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Recognised keys, in echo order.
pub const KEYS: &[&str] = &[
    "interval",
    "seed",
    "t",
    "t_list",
    "n",
    "start",
    "coarse_dt",
    "fine_dt",
    "tail_tolerance",
    "max_terms",
    "switch",
    "block",
    "rejection_cap",
    "alpha",
    "buckets",
    "r",
    "ref_draws",
    "u",
    "y",
    "s_threshold",
    "epsilon",
    "horizon",
    "replicates",
    "min_excursions",
    "grid_x",
    "grid_s",
    "mc_paths",
    "s_list",
    "oracle_eps",
];

/// Raw settings before validation.
#[derive(Debug, Clone, Default)]
pub struct ConfigSource {
    entries: BTreeMap<String, (String, Origin)>,
}

impl ConfigSource {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads `key = value` lines. Blank lines and `#` comments are ignored.
    pub fn parse_file(text: &str) -> Result<Self, ConfigError> {
        let mut src = ConfigSource::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError {
                    key: line.to_string(),
                    origin: Origin::Line(line_no),
                    message: "expected `key = value`".into(),
                });
            };
            let key = k.trim().to_string();
            let origin = Origin::Line(line_no);
            check_key(&key, &origin)?;
            if src.entries.contains_key(&key) {
                return Err(ConfigError {
                    key,
                    origin,
                    message: "key given twice".into(),
                });
            }
            src.entries.insert(key, (v.trim().to_string(), origin));
        }
        Ok(src)
    }

    /// Overrides a key from a command-line flag.
    pub fn set_flag(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        check_key(key, &Origin::Flag)?;
        self.entries
            .insert(key.to_string(), (value.trim().to_string(), Origin::Flag));
        Ok(())
    }

    fn get(&self, key: &str) -> Option<(&str, &Origin)> {
        self.entries.get(key).map(|(v, o)| (v.as_str(), o))
    }

    /// Validates every setting and fills defaults. `seed` is required when
    /// `require_seed` is set; `interval` always is.
    pub fn resolve(&self, require_seed: bool) -> Result<RunConfig, ConfigError> {
        let p = Parser { src: self };
        let (a, b) = p.required("interval", parse_pair)?;
        let interval = Interval::new(a, b).map_err(|e| p.error("interval", e.to_string()))?;
        let l2 = interval.length() * interval.length();
        let seed = if require_seed {
            p.required("seed", parse_u64)?
        } else {
            p.optional("seed", parse_u64)?.unwrap_or(0)
        };

        let t = p.or("t", 10.0, parse_f64)?;
        p.positive("t", t)?;
        let t_list = p.or("t_list", vec![1.0, 50.0], parse_list)?;
        if t_list.is_empty() || t_list.iter().any(|&x| x <= 0.0) {
            return Err(p.error("t_list", "needs positive times".into()));
        }
        if t_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(p.error("t_list", "times must increase".into()));
        }
        let n = p.or("n", 1000, parse_usize)?;
        if n < 2 {
            return Err(p.error("n", "must be at least 2".into()));
        }
        let start = p.or("start", a, parse_f64)?;

        let coarse_dt = p.or("coarse_dt", 1e-4 * l2, parse_f64)?;
        let fine_dt = p.or("fine_dt", 1e-6 * l2, parse_f64)?;
        p.positive("coarse_dt", coarse_dt)?;
        p.positive("fine_dt", fine_dt)?;
        if fine_dt > coarse_dt {
            return Err(p.error(
                "fine_dt",
                format!("fine_dt = {fine_dt} exceeds coarse_dt = {coarse_dt}"),
            ));
        }
        let grid = GridSpec::new(coarse_dt, fine_dt).map_err(|e| p.error("coarse_dt", e.to_string()))?;

        let defaults = SeriesConfig::default();
        let tail = p.or("tail_tolerance", defaults.tail_tolerance(), parse_f64)?;
        let max_terms = p.or("max_terms", defaults.max_terms(), parse_usize)?;
        let series = SeriesConfig::new(tail, max_terms).map_err(|e| p.error("tail_tolerance", e.to_string()))?;
        let sampler_defaults = SamplerConfig::default();
        let sampler = SamplerConfig {
            switch: p.or("switch", sampler_defaults.switch, parse_f64)?,
            block: p.or("block", sampler_defaults.block, parse_f64)?,
            rejection_cap: p.or("rejection_cap", sampler_defaults.rejection_cap, parse_u64)?,
            series,
        };
        sampler.validate().map_err(|e| p.error("switch", e.to_string()))?;

        let alpha = p.or("alpha", 0.01, parse_f64)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(p.error("alpha", "must lie in (0, 1)".into()));
        }
        let buckets = p.or("buckets", 8, parse_usize)?;
        if buckets == 0 {
            return Err(p.error("buckets", "must be at least 1".into()));
        }
        let r = p.or("r", 0.1 * l2, parse_f64)?;
        p.positive("r", r)?;
        let ref_draws = p.or("ref_draws", 2000, parse_usize)?;
        if ref_draws < 2 {
            return Err(p.error("ref_draws", "must be at least 2".into()));
        }
        let u = p.or("u", vec![0.25 * l2, 0.5 * l2, l2], parse_list)?;
        if u.is_empty() || u.iter().any(|&x| x <= 0.0) {
            return Err(p.error("u", "needs positive ages".into()));
        }
        let len = interval.length();
        let y = p.or("y", vec![0.1 * len, 0.3 * len, 0.5 * len], parse_list)?;
        if y.is_empty() || y.iter().any(|&x| x <= 0.0) {
            return Err(p.error("y", "needs positive displacements".into()));
        }
        let s_threshold = p.or("s_threshold", 0.5 * l2, parse_f64)?;
        p.positive("s_threshold", s_threshold)?;
        let epsilon = p.or("epsilon", 0.01 * len, parse_f64)?;
        p.positive("epsilon", epsilon)?;
        let horizon = p.or("horizon", 200.0, parse_f64)?;
        p.positive("horizon", horizon)?;
        let replicates = p.or("replicates", 50, parse_usize)?;
        if replicates < 2 {
            return Err(p.error("replicates", "must be at least 2".into()));
        }
        let min_excursions = p.or("min_excursions", 0, parse_usize)?;
        let grid_x = p.or(
            "grid_x",
            vec![a + 0.25 * len, a + 0.5 * len, a + 0.75 * len],
            parse_list,
        )?;
        if grid_x.iter().any(|&x| !(a..=b).contains(&x)) {
            return Err(p.error("grid_x", "points must lie in [a, b]".into()));
        }
        let grid_s = p.or("grid_s", vec![0.1 * l2, 0.5 * l2, l2], parse_list)?;
        if grid_s.is_empty() || grid_s.iter().any(|&x| x <= 0.0) {
            return Err(p.error("grid_s", "needs positive times".into()));
        }
        let mc_paths = p.or("mc_paths", 0, parse_usize)?;
        let s_list = p.or("s_list", vec![0.25 * l2, l2], parse_list)?;
        if s_list.is_empty() || s_list.iter().any(|&x| x <= 0.0) {
            return Err(p.error("s_list", "needs positive ages".into()));
        }
        let oracle_eps = p.or("oracle_eps", 1e-3 * len, parse_f64)?;
        p.positive("oracle_eps", oracle_eps)?;

        Ok(RunConfig {
            interval,
            seed,
            t,
            t_list,
            n,
            start,
            grid,
            series,
            sampler,
            alpha,
            buckets,
            r,
            ref_draws,
            u,
            y,
            s_threshold,
            epsilon,
            horizon,
            replicates,
            min_excursions,
            grid_x,
            grid_s,
            mc_paths,
            s_list,
            oracle_eps,
        })
    }
}

fn check_key(key: &str, origin: &Origin) -> Result<(), ConfigError> {
    if KEYS.contains(&key) {
        Ok(())
    } else {
        Err(ConfigError {
            key: key.to_string(),
            origin: origin.clone(),
            message: "unknown key".into(),
        })
    }
}

struct Parser<'a> {
    src: &'a ConfigSource,
}

impl Parser<'_> {
    fn origin(&self, key: &str) -> Origin {
        self.src.get(key).map(|(_, o)| o.clone()).unwrap_or(Origin::Default)
    }

    fn error(&self, key: &str, message: String) -> ConfigError {
        ConfigError {
            key: key.to_string(),
            origin: self.origin(key),
            message,
        }
    }

    fn optional<T>(&self, key: &str, parse: fn(&str) -> Result<T, String>) -> Result<Option<T>, ConfigError> {
        match self.src.get(key) {
            None => Ok(None),
            Some((v, _)) => parse(v).map(Some).map_err(|m| self.error(key, m)),
        }
    }

    fn required<T>(&self, key: &str, parse: fn(&str) -> Result<T, String>) -> Result<T, ConfigError> {
        self.optional(key, parse)?
            .ok_or_else(|| self.error(key, "missing required key".into()))
    }

    fn or<T>(&self, key: &str, default: T, parse: fn(&str) -> Result<T, String>) -> Result<T, ConfigError> {
        Ok(self.optional(key, parse)?.unwrap_or(default))
    }

    fn positive(&self, key: &str, v: f64) -> Result<(), ConfigError> {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(self.error(key, format!("must be positive and finite, got {v}")))
        }
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_u64(s: &str) -> Result<u64, String> {
    // Accept `1e6`-style integers as well.
    s.parse::<u64>().or_else(|_| {
        let v = parse_f64(s)?;
        if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
            Ok(v as u64)
        } else {
            Err(format!("`{s}` is not a nonnegative integer"))
        }
    })
}

fn parse_usize(s: &str) -> Result<usize, String> {
    parse_u64(s).map(|v| v as usize)
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|x| parse_f64(x.trim())).collect()
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    match parse_list(s)?.as_slice() {
        &[a, b] => Ok((a, b)),
        _ => Err(format!("expected `a,b`, got `{s}`")),
    }
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub interval: Interval,
    pub seed: u64,
    /// Observation time of the straddle study.
    pub t: f64,
    /// Observation times of the convergence study.
    pub t_list: Vec<f64>,
    /// Accepted observations (or draws) per study.
    pub n: usize,
    pub start: f64,
    pub grid: GridSpec,
    pub series: SeriesConfig,
    pub sampler: SamplerConfig,
    pub alpha: f64,
    pub buckets: usize,
    /// Extra lifetime in the lifetime-tail functional.
    pub r: f64,
    /// Reference sampler draws per bucket edge.
    pub ref_draws: usize,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub s_threshold: f64,
    /// Band width of the downcrossing local-time estimator.
    pub epsilon: f64,
    pub horizon: f64,
    pub replicates: usize,
    /// Replicates are added in rounds until this many excursions qualify.
    pub min_excursions: usize,
    pub grid_x: Vec<f64>,
    pub grid_s: Vec<f64>,
    /// Monte Carlo paths per point when certifying the analytic laws; 0
    /// skips the simulation.
    pub mc_paths: usize,
    pub s_list: Vec<f64>,
    pub oracle_eps: f64,
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Every setting as `(key, value)` in [`KEYS`] order.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let c = self;
        let vals = [
            format!("{},{}", c.interval.a(), c.interval.b()),
            c.seed.to_string(),
            c.t.to_string(),
            list(&c.t_list),
            c.n.to_string(),
            c.start.to_string(),
            c.grid.coarse_dt().to_string(),
            c.grid.fine_dt().to_string(),
            c.series.tail_tolerance().to_string(),
            c.series.max_terms().to_string(),
            c.sampler.switch.to_string(),
            c.sampler.block.to_string(),
            c.sampler.rejection_cap.to_string(),
            c.alpha.to_string(),
            c.buckets.to_string(),
            c.r.to_string(),
            c.ref_draws.to_string(),
            list(&c.u),
            list(&c.y),
            c.s_threshold.to_string(),
            c.epsilon.to_string(),
            c.horizon.to_string(),
            c.replicates.to_string(),
            c.min_excursions.to_string(),
            list(&c.grid_x),
            list(&c.grid_s),
            c.mc_paths.to_string(),
            list(&c.s_list),
            c.oracle_eps.to_string(),
        ];
        KEYS.iter().copied().zip(vals).collect()
    }

    /// The echo as config-file text; parsing it reproduces `self`.
    pub fn to_text(&self) -> String {
        self.echo().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 of [`RunConfig::to_text`], hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_text().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
