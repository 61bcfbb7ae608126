//! Experiment drivers. Every replicate draws from its own stream, chosen by
//! `(seed, domain, lane, index)`, and results are collected in replicate
//! order, so outputs do not depend on the number of workers.

use rayon::prelude::*;
use straddle_core::analytic::{exit_rate, ito_tail, limit_cdf, psi, SeriesValue};
use straddle_core::engine::simulate_path;
use straddle_core::extract::{downcrossing_local_time, enumerate_excursions, straddle_replicate};
use straddle_core::limit::{eval_functional, sample_p0, sample_q, Functional};
use straddle_core::math::normal_mass;
use straddle_core::oracle::{exit_time, offset_excursion, survival_counts};
use straddle_core::stats::{
    ks_one_sample, ks_two_sample, mean_se, quantile, wilson, BucketReport, BucketStatus, KsReport, Z_99,
};
use straddle_core::{RngStream, Side, StraddleObservation};

use crate::config::RunConfig;
use crate::report::Check;
use crate::LabError;

pub type Result<T> = std::result::Result<T, LabError>;

/// Separates the random streams of unrelated parts of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Study = 0,
    Reference = 1,
    Limit = 2,
    Oracle = 3,
    Rate = 4,
    Certify = 5,
}

/// Stream `index` of `lane` within `domain`. Lane 0 of the study domain is
/// the plain replicate index.
pub fn stream(seed: u64, domain: Domain, lane: u64, index: u64) -> RngStream {
    debug_assert!(lane < 1 << 16 && index < 1 << 40);
    RngStream::derive(seed, (domain as u64) << 56 | lane << 40 | index)
}

/// Runs `f(0..n)` on `workers` threads, keeping index order.
pub fn par_map<T, F>(workers: usize, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| LabError::Runtime(e.to_string()))?;
    pool.install(|| (0..n as u64).into_par_iter().map(f).collect())
}

const SIDES: [Side; 2] = [Side::A, Side::B];

fn side_name(side: Side) -> &'static str {
    match side {
        Side::A => "a",
        Side::B => "b",
    }
}

// ---------------------------------------------------------------------------
// Straddle study

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub replicate: u64,
    /// Paths drawn until `W_t` landed inside the interval.
    pub attempts: u64,
    pub obs: StraddleObservation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Study {
    pub t: f64,
    pub rows: Vec<StudyRow>,
}

impl Study {
    pub fn attempts(&self) -> u64 {
        self.rows.iter().map(|r| r.attempts).sum()
    }

    pub fn never_exited(&self) -> usize {
        self.rows.iter().filter(|r| r.obs.never_exited).count()
    }

    /// Observations with a straddling excursion.
    pub fn exited(&self) -> impl Iterator<Item = &StraddleObservation> {
        self.rows.iter().map(|r| &r.obs).filter(|o| !o.never_exited)
    }
}

const MAX_ATTEMPTS: u64 = 100_000_000;

/// `n` accepted observations at time `t`. Replicate `i` keeps drawing from
/// its own stream until `W_t` lies inside the interval.
pub fn run_straddle_study(cfg: &RunConfig, t: f64, n: usize, lane: u64, workers: usize) -> Result<Study> {
    let rows = par_map(workers, n, |i| {
        let mut rng = stream(cfg.seed, Domain::Study, lane, i);
        let mut attempts = 0;
        loop {
            attempts += 1;
            if attempts > MAX_ATTEMPTS {
                return Err(LabError::Runtime(format!(
                    "replicate {i}: W_t never landed inside the interval"
                )));
            }
            if let Some(obs) = straddle_replicate(t, cfg.start, &cfg.interval, &cfg.grid, false, &mut rng)? {
                return Ok(StudyRow {
                    replicate: i,
                    attempts,
                    obs,
                });
            }
        }
    })?;
    Ok(Study { t, rows })
}

/// Acceptance and contract checks for a study.
pub fn study_checks(cfg: &RunConfig, study: &Study) -> Result<Vec<Check>> {
    let iv = cfg.interval;
    let t = study.t;
    let accepted = study.rows.len() as u64;
    let attempts = study.attempts();
    let sd = t.sqrt();
    let exact = normal_mass((iv.a() - cfg.start) / sd, (iv.b() - cfg.start) / sd);
    let ci = wilson(accepted, attempts, Z_99)?;
    let flat = iv.length() / (2.0 * std::f64::consts::PI * t).sqrt();
    let acceptance = Check::new("acceptance_rate", (ci.estimate / exact - 1.0).abs() <= 0.1)
        .with("accepted", accepted)
        .with("attempts", attempts)
        .with("rate", ci.estimate)
        .with("ci_low", ci.lo)
        .with("ci_high", ci.hi)
        .with("exact", exact)
        .with("ci_contains_exact", ci.contains(exact))
        .with("flat_density_approx", flat);

    let contract = study.rows.iter().all(|r| {
        let o = &r.obs;
        let base = iv.contains(o.w_t) && o.sigma <= t;
        if o.never_exited {
            base && o.sigma == 0.0 && o.functionals.is_none()
        } else {
            base && o.sigma < t && t < o.d && (o.x_sigma == iv.a() || o.x_sigma == iv.b()) && o.functionals.is_some()
        }
    });
    let never = study.never_exited();
    Ok(vec![
        acceptance,
        Check::new("observation_contract", contract).with("observations", accepted),
        Check::info("never_exited").with("count", never as u64),
    ])
}

// ---------------------------------------------------------------------------
// Conditional excursion law at finite t

#[derive(Debug, Clone, PartialEq)]
pub struct BucketCheck {
    pub study: Study,
    pub buckets: Vec<BucketReport>,
    pub checks: Vec<Check>,
}

/// Means of endpoint displacement at the conditioning age and of the
/// supremum displacement under the conditioned excursion law.
struct ReferenceMeans {
    endpoint: (f64, f64),
    sup: (f64, f64),
    positive_endpoints: usize,
}

fn reference_means(cfg: &RunConfig, side: Side, s: f64, lane: u64, workers: usize) -> Result<ReferenceMeans> {
    let draws = par_map(workers, cfg.ref_draws, |i| {
        let mut rng = stream(cfg.seed, Domain::Reference, lane, i);
        let z = sample_q(side, s, &cfg.interval, &cfg.grid, &cfg.sampler, &mut rng)?;
        Ok((
            eval_functional(&Functional::EndpointDisp { clock: s }, &z)?,
            eval_functional(&Functional::SupDisp, &z)?,
        ))
    })?;
    let ends: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let sups: Vec<f64> = draws.iter().map(|d| d.1).collect();
    let e = mean_se(&ends)?;
    let m = mean_se(&sups)?;
    Ok(ReferenceMeans {
        endpoint: (e.mean, e.se),
        sup: (m.mean, m.se),
        positive_endpoints: ends.iter().filter(|&&x| x > 0.0).count(),
    })
}

/// Bucket edges at empirical quantiles of the ages, from the smallest to
/// the largest observed age.
pub fn age_edges(ages: &[f64], buckets: usize) -> Vec<f64> {
    let mut sorted = ages.to_vec();
    sorted.sort_by(f64::total_cmp);
    (0..=buckets)
        .map(|k| quantile(&sorted, k as f64 / buckets as f64))
        .collect()
}

fn bucket_of(edges: &[f64], age: f64) -> usize {
    let k = edges.partition_point(|&e| e <= age);
    k.clamp(1, edges.len() - 1) - 1
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    match v.len() {
        0 => (f64::NAN, f64::NAN),
        1 => (v[0], f64::NAN),
        _ => {
            let m = mean_se(v).expect("two or more values");
            (m.mean, m.se)
        }
    }
}

/// Bins observations by `(x_sigma, age)` and compares bucket means of three
/// functionals of the straddling excursion with the conditioned excursion
/// law at the same boundary point and age.
pub fn check_buckets(cfg: &RunConfig, workers: usize) -> Result<BucketCheck> {
    let study = run_straddle_study(cfg, cfg.t, cfg.n, 0, workers)?;
    let mut checks = study_checks(cfg, &study)?;
    let obs: Vec<&StraddleObservation> = study.exited().collect();
    if obs.is_empty() {
        return Err(LabError::Runtime("no observation has a straddling excursion".into()));
    }
    let ages: Vec<f64> = obs.iter().map(|o| o.age()).collect();
    let edges = age_edges(&ages, cfg.buckets);
    let rate = |s: f64| -> Result<f64> { Ok(exit_rate(Side::A, s, &cfg.interval, &cfg.series)?.value) };

    let mut reports = Vec::new();
    let mut b_positive_obs = 0;
    let mut b_positive_ref = 0;
    for (si, &side) in SIDES.iter().enumerate() {
        for k in 0..cfg.buckets {
            let (lo, hi) = (edges[k], edges[k + 1]);
            let members: Vec<&StraddleObservation> = obs
                .iter()
                .copied()
                .filter(|o| o.side == Some(side) && bucket_of(&edges, o.age()) == k)
                .collect();
            let n_obs = members.len();
            let f = |o: &StraddleObservation| o.functionals.expect("exited observation");
            if side == Side::B {
                b_positive_obs += members.iter().filter(|o| f(o).endpoint_disp > 0.0).count();
            }

            let tails: Vec<f64> = members
                .iter()
                .map(|o| if f(o).lifetime > o.age() + cfg.r { 1.0 } else { 0.0 })
                .collect();
            let (emp_tail, se_tail) = mean_and_se(&tails);
            let mut ref_tail = 0.0;
            for o in &members {
                ref_tail += rate(o.age() + cfg.r)? / rate(o.age())?;
            }
            ref_tail /= n_obs.max(1) as f64;
            reports.push(BucketReport::judge(
                "lifetime_tail",
                side,
                (lo, hi),
                n_obs,
                emp_tail,
                ref_tail,
                se_tail,
                0.0,
            ));

            let ends: Vec<f64> = members.iter().map(|o| f(o).endpoint_disp).collect();
            let sups: Vec<f64> = members.iter().map(|o| f(o).sup_disp).collect();
            let (emp_end, se_end) = mean_and_se(&ends);
            let (emp_sup, se_sup) = mean_and_se(&sups);
            if n_obs < straddle_core::stats::MIN_BUCKET_OBS {
                for name in ["endpoint_disp", "sup_disp"] {
                    reports.push(BucketReport::judge(
                        name,
                        side,
                        (lo, hi),
                        n_obs,
                        f64::NAN,
                        f64::NAN,
                        f64::NAN,
                        f64::NAN,
                    ));
                }
                continue;
            }
            let lane = 1 + 3 * (si * cfg.buckets + k) as u64;
            let mid = reference_means(cfg, side, 0.5 * (lo + hi), lane, workers)?;
            let low = reference_means(cfg, side, lo, lane + 1, workers)?;
            let high = reference_means(cfg, side, hi, lane + 2, workers)?;
            if side == Side::B {
                b_positive_ref += mid.positive_endpoints + low.positive_endpoints + high.positive_endpoints;
            }
            let spread = |m: f64, a: f64, b: f64| (a - m).abs().max((b - m).abs());
            reports.push(BucketReport::judge(
                "endpoint_disp",
                side,
                (lo, hi),
                n_obs,
                emp_end,
                mid.endpoint.0,
                se_end.hypot(mid.endpoint.1),
                spread(mid.endpoint.0, low.endpoint.0, high.endpoint.0),
            ));
            reports.push(BucketReport::judge(
                "sup_disp",
                side,
                (lo, hi),
                n_obs,
                emp_sup,
                mid.sup.0,
                se_sup.hypot(mid.sup.1),
                spread(mid.sup.0, low.sup.0, high.sup.0),
            ));
        }
    }

    let judged: Vec<&BucketReport> = reports.iter().filter(|r| r.status != BucketStatus::Skipped).collect();
    let passed = judged.iter().filter(|r| r.pass()).count();
    let fraction = passed as f64 / judged.len().max(1) as f64;
    // Two-sided 3-sigma tests: about 0.27% false failures each.
    let expected_false = judged.len() as f64 * 0.0027;
    checks.push(
        Check::new("bucket_pass_fraction", !judged.is_empty() && fraction >= 0.8)
            .with("judged", judged.len() as u64)
            .with("passed", passed as u64)
            .with("skipped", (reports.len() - judged.len()) as u64)
            .with("fraction", fraction)
            .with("required", 0.8)
            .with("expected_false_failures", expected_false),
    );
    checks.push(
        Check::new(
            "b_endpoint_positive_part_zero",
            b_positive_obs == 0 && b_positive_ref == 0,
        )
        .with("observed", b_positive_obs as u64)
        .with("reference", b_positive_ref as u64),
    );
    Ok(BucketCheck {
        study,
        buckets: reports,
        checks,
    })
}

// ---------------------------------------------------------------------------
// Limit law

/// Functionals of one draw from the limit law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitDraw {
    pub x: Side,
    pub y: f64,
    /// `zeta(Y) - zeta(0)`
    pub endpoint_disp: f64,
    pub sup_disp: f64,
    pub occ_above_mid: f64,
    pub lifetime: f64,
}

pub fn sample_limit_draws(cfg: &RunConfig, n: usize, workers: usize) -> Result<Vec<LimitDraw>> {
    par_map(workers, n, |i| {
        let mut rng = stream(cfg.seed, Domain::Limit, 0, i);
        let s = sample_p0(&cfg.interval, &cfg.grid, &cfg.sampler, &mut rng)?;
        Ok(LimitDraw {
            x: s.x,
            y: s.y,
            endpoint_disp: eval_functional(&Functional::EndpointDisp { clock: s.y }, &s.zeta)?,
            sup_disp: eval_functional(&Functional::SupDisp, &s.zeta)?,
            occ_above_mid: eval_functional(&Functional::OccAboveMid, &s.zeta)?,
            lifetime: s.zeta.lifetime(),
        })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub t: f64,
    pub n: usize,
    pub age_ks: KsReport,
    pub side_a: straddle_core::stats::Proportion,
    pub endpoint_ks: KsReport,
    pub sup_ks: KsReport,
    pub occ_ks: KsReport,
}

pub const CONVERGENCE_KS_TARGET: f64 = 0.02;

/// Distances between the straddling excursion at each `t` and the limit
/// law.
pub fn convergence_rows(cfg: &RunConfig, studies: &[Study], limit: &[LimitDraw]) -> Result<Vec<ConvergenceRow>> {
    let lim_end: Vec<f64> = limit.iter().map(|d| d.endpoint_disp).collect();
    let lim_sup: Vec<f64> = limit.iter().map(|d| d.sup_disp).collect();
    let lim_occ: Vec<f64> = limit.iter().map(|d| d.occ_above_mid).collect();
    studies
        .iter()
        .map(|study| {
            let obs: Vec<&StraddleObservation> = study.exited().collect();
            let pick = |g: fn(&StraddleObservation) -> f64| obs.iter().map(|o| g(o)).collect::<Vec<f64>>();
            let ages = pick(|o| o.age());
            let age_ks = ks_one_sample(
                &ages,
                |s| {
                    limit_cdf(s, &cfg.interval, &cfg.series)
                        .map(|v| v.value)
                        .unwrap_or(f64::NAN)
                },
                cfg.alpha,
            )?;
            let at_a = obs.iter().filter(|o| o.side == Some(Side::A)).count() as u64;
            Ok(ConvergenceRow {
                t: study.t,
                n: obs.len(),
                age_ks,
                side_a: wilson(at_a, obs.len() as u64, Z_99)?,
                endpoint_ks: ks_two_sample(&pick(|o| o.functionals.unwrap().endpoint_disp), &lim_end, cfg.alpha)?,
                sup_ks: ks_two_sample(&pick(|o| o.functionals.unwrap().sup_disp), &lim_sup, cfg.alpha)?,
                occ_ks: ks_two_sample(&pick(|o| o.functionals.unwrap().occ_above_mid), &lim_occ, cfg.alpha)?,
            })
        })
        .collect()
}

/// Checks on the largest `t` and on the trend from the smallest one.
pub fn convergence_checks(rows: &[ConvergenceRow]) -> Vec<Check> {
    let (Some(first), Some(last)) = (rows.first(), rows.last()) else {
        return Vec::new();
    };
    let mut checks = vec![
        Check::new("age_ks_largest_t", last.age_ks.statistic <= CONVERGENCE_KS_TARGET)
            .with("t", last.t)
            .with("statistic", last.age_ks.statistic)
            .with("target", CONVERGENCE_KS_TARGET)
            .with("ks_threshold", last.age_ks.threshold),
        Check::new(
            "side_a_fraction_largest_t",
            (0.48..=0.52).contains(&last.side_a.estimate) && last.side_a.contains(0.5),
        )
        .with("t", last.t)
        .with("estimate", last.side_a.estimate)
        .with("ci_low", last.side_a.lo)
        .with("ci_high", last.side_a.hi),
    ];
    if rows.len() > 1 {
        let trend = |name: &str, f: fn(&ConvergenceRow) -> f64| {
            Check::new(format!("trend_{name}"), f(last) < f(first))
                .with("t_first", first.t)
                .with("t_last", last.t)
                .with("first", f(first))
                .with("last", f(last))
        };
        checks.push(trend("age_ks", |r| r.age_ks.statistic));
        checks.push(trend("endpoint_ks", |r| r.endpoint_ks.statistic));
        checks.push(trend("sup_ks", |r| r.sup_ks.statistic));
        checks.push(trend("occ_ks", |r| r.occ_ks.statistic));
    }
    for r in rows {
        checks.push(
            Check::info(format!("distances_t_{}", r.t))
                .with("age_ks", r.age_ks.statistic)
                .with("endpoint_ks", r.endpoint_ks.statistic)
                .with("sup_ks", r.sup_ks.statistic)
                .with("occ_ks", r.occ_ks.statistic)
                .with("side_a", r.side_a.estimate),
        );
    }
    checks
}

pub fn check_convergence(cfg: &RunConfig, workers: usize) -> Result<(Vec<ConvergenceRow>, Vec<Check>)> {
    let studies = cfg
        .t_list
        .iter()
        .enumerate()
        .map(|(j, &t)| run_straddle_study(cfg, t, cfg.n, j as u64, workers))
        .collect::<Result<Vec<_>>>()?;
    let limit = sample_limit_draws(cfg, cfg.n, workers)?;
    let rows = convergence_rows(cfg, &studies, &limit)?;
    Ok((rows.clone(), convergence_checks(&rows)))
}

// ---------------------------------------------------------------------------
// Application: joint law of the age and the displacement at t

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApplicationRow {
    pub u: f64,
    pub y: f64,
    pub direct: straddle_core::stats::Proportion,
    pub limit: straddle_core::stats::Proportion,
    pub agree: bool,
}

/// `P(0 < age < u, 0 < displacement < y)` from the study and from the
/// limit law, over the `(u, y)` grid.
pub fn application_rows(
    cfg: &RunConfig,
    study: &Study,
    limit: &[LimitDraw],
) -> Result<(Vec<ApplicationRow>, Vec<Check>)> {
    let obs: Vec<&StraddleObservation> = study.exited().collect();
    let mut rows = Vec::new();
    let mut b_hits = 0;
    for &u in &cfg.u {
        for &y in &cfg.y {
            let hit = |age: f64, disp: f64| 0.0 < age && age < u && 0.0 < disp && disp < y;
            let direct = obs
                .iter()
                .filter(|o| hit(o.age(), o.functionals.unwrap().endpoint_disp))
                .count() as u64;
            let lim = limit.iter().filter(|d| hit(d.y, d.endpoint_disp)).count() as u64;
            b_hits += limit
                .iter()
                .filter(|d| d.x == Side::B && hit(d.y, d.endpoint_disp))
                .count();
            let direct = wilson(direct, obs.len() as u64, Z_99)?;
            let limit_p = wilson(lim, limit.len() as u64, Z_99)?;
            let se = direct.se().hypot(limit_p.se());
            let agree = (direct.estimate - limit_p.estimate).abs() <= 3.0 * se;
            rows.push(ApplicationRow {
                u,
                y,
                direct,
                limit: limit_p,
                agree,
            });
        }
    }
    let agreeing = rows.iter().filter(|r| r.agree).count();
    let mut checks = vec![
        Check::new("direct_matches_limit_everywhere", agreeing == rows.len())
            .with("points", rows.len() as u64)
            .with("agreeing", agreeing as u64)
            .with("t", study.t),
        Check::new("b_contribution_zero", b_hits == 0).with("hits", b_hits as u64),
    ];
    for r in &rows {
        checks.push(
            Check::new(format!("point_u_{}_y_{}", r.u, r.y), r.agree)
                .with("direct", r.direct.estimate)
                .with("limit", r.limit.estimate),
        );
    }
    Ok((rows, checks))
}

pub fn application_limit(cfg: &RunConfig, workers: usize) -> Result<(Vec<ApplicationRow>, Vec<Check>)> {
    let study = run_straddle_study(cfg, cfg.t, cfg.n, 0, workers)?;
    let limit = sample_limit_draws(cfg, cfg.n, workers)?;
    let (rows, mut checks) = application_rows(cfg, &study, &limit)?;
    let mut all = study_checks(cfg, &study)?;
    all.append(&mut checks);
    Ok((rows, all))
}

// ---------------------------------------------------------------------------
// Excursions per unit local time

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub replicate: u64,
    pub local_time_a: f64,
    pub count_a: u64,
    pub count_a_double: u64,
    pub local_time_b: f64,
    pub count_b: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateCheck {
    pub rows: Vec<RateRow>,
    pub exit_rate: f64,
    pub checks: Vec<Check>,
}

fn rate_replicate(cfg: &RunConfig, i: u64) -> Result<RateRow> {
    let iv = cfg.interval;
    let mut rng = stream(cfg.seed, Domain::Rate, 0, i);
    let path = simulate_path(cfg.start, cfg.horizon, &cfg.grid, &mut rng)?;
    let ex = enumerate_excursions(&path, &iv, &cfg.grid);
    let count = |side: Side, s: f64| ex.iter().filter(|e| e.side == side && e.length() > s).count() as u64;
    Ok(RateRow {
        replicate: i,
        local_time_a: downcrossing_local_time(&path, iv.a(), cfg.epsilon, cfg.horizon)?,
        count_a: count(Side::A, cfg.s_threshold),
        count_a_double: count(Side::A, 2.0 * cfg.s_threshold),
        local_time_b: downcrossing_local_time(&path, iv.b(), cfg.epsilon, cfg.horizon)?,
        count_b: count(Side::B, cfg.s_threshold),
    })
}

/// Ratio `sum(count) / sum(local time)` and its delta-method standard
/// error across replicates.
pub fn ratio_estimate(counts: &[f64], times: &[f64]) -> (f64, f64) {
    let n = counts.len() as f64;
    let total_t: f64 = times.iter().sum();
    let ratio = counts.iter().sum::<f64>() / total_t;
    let resid: f64 = counts.iter().zip(times).map(|(c, l)| (c - ratio * l).powi(2)).sum();
    let se = (resid / (n * (n - 1.0))).sqrt() / (total_t / n);
    (ratio, se)
}

const MAX_RATE_ROUNDS: usize = 1000;

/// Counts excursions from each boundary point that outlive `s_threshold`,
/// per unit of downcrossing local time. Replicates come in rounds of
/// `replicates` until at least `min_excursions` qualify at `a`.
pub fn rate_check(cfg: &RunConfig, workers: usize) -> Result<RateCheck> {
    let mut rows: Vec<RateRow> = Vec::new();
    for round in 0..MAX_RATE_ROUNDS {
        let offset = (round * cfg.replicates) as u64;
        rows.extend(par_map(workers, cfg.replicates, |i| rate_replicate(cfg, offset + i))?);
        let qualifying: u64 = rows.iter().map(|r| r.count_a).sum();
        if qualifying as usize >= cfg.min_excursions {
            break;
        }
    }
    let expected = exit_rate(Side::A, cfg.s_threshold, &cfg.interval, &cfg.series)?.value;
    let col = |f: fn(&RateRow) -> f64, rows: &[RateRow]| rows.iter().map(f).collect::<Vec<f64>>();
    let (ra, se_a) = ratio_estimate(&col(|r| r.count_a as f64, &rows), &col(|r| r.local_time_a, &rows));
    let (rb, se_b) = ratio_estimate(&col(|r| r.count_b as f64, &rows), &col(|r| r.local_time_b, &rows));
    let first = &rows[..cfg.replicates];
    let (r_first, se_first) = ratio_estimate(&col(|r| r.count_a as f64, first), &col(|r| r.local_time_a, first));
    let qualifying: u64 = rows.iter().map(|r| r.count_a).sum();
    let doubled: u64 = rows.iter().map(|r| r.count_a_double).sum();

    let checks = vec![
        Check::new("rate_ratio_a", (ra / expected - 1.0).abs() <= 0.1)
            .with("ratio", ra)
            .with("se", se_a)
            .with("exit_rate", expected)
            .with("relative_error", ra / expected - 1.0)
            .with("replicates", rows.len() as u64)
            .with("qualifying_excursions", qualifying)
            .with("local_time", rows.iter().map(|r| r.local_time_a).sum::<f64>()),
        Check::new("rate_ratio_b_matches_a", (ra - rb).abs() <= 3.0 * se_a.hypot(se_b))
            .with("ratio_b", rb)
            .with("se_b", se_b),
        Check::new("doubling_threshold_decreases_count", doubled < qualifying)
            .with("count", qualifying)
            .with("count_doubled", doubled),
        Check::info("first_round")
            .with("replicates", cfg.replicates as u64)
            .with("ratio", r_first)
            .with("se", se_first)
            .with("relative_error", r_first / expected - 1.0),
    ];
    Ok(RateCheck {
        rows,
        exit_rate: expected,
        checks,
    })
}

// ---------------------------------------------------------------------------
// Analytic laws

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticRow {
    pub quantity: &'static str,
    pub x: Option<f64>,
    pub s: f64,
    pub value: f64,
    pub bound: Option<f64>,
    pub terms: Option<usize>,
    /// Monte Carlo estimate and its standard error, when simulated.
    pub mc: Option<(f64, f64)>,
}

fn series_row(quantity: &'static str, x: Option<f64>, s: f64, v: SeriesValue) -> AnalyticRow {
    AnalyticRow {
        quantity,
        x,
        s,
        value: v.value,
        bound: Some(v.bound),
        terms: Some(v.terms),
        mc: None,
    }
}

const MC_CHUNK: usize = 10_000;

/// Fraction of `paths` Brownian paths from `x` still inside at each time.
fn mc_survival(cfg: &RunConfig, x: f64, lane: u64, paths: usize, workers: usize) -> Result<Vec<f64>> {
    let chunks = paths.div_ceil(MC_CHUNK);
    let counts = par_map(workers, chunks, |c| {
        let mut rng = stream(cfg.seed, Domain::Certify, lane, c);
        let n = MC_CHUNK.min(paths - c as usize * MC_CHUNK) as u64;
        Ok(survival_counts(x, &cfg.grid_s, n, &cfg.interval, &cfg.grid, &mut rng))
    })?;
    let mut total = vec![0u64; cfg.grid_s.len()];
    for c in counts {
        for (t, v) in total.iter_mut().zip(c) {
            *t += v;
        }
    }
    Ok(total.into_iter().map(|k| k as f64 / paths as f64).collect())
}

/// Exit-time CDF of Brownian motion started uniformly in the interval.
fn mc_uniform_exit(cfg: &RunConfig, lane: u64, paths: usize, workers: usize) -> Result<Vec<f64>> {
    let until = cfg.grid_s.iter().copied().fold(0.0, f64::max);
    let chunks = paths.div_ceil(MC_CHUNK);
    let iv = cfg.interval;
    let counts = par_map(workers, chunks, |c| {
        use rand::Rng;
        let mut rng = stream(cfg.seed, Domain::Certify, lane, c);
        let n = MC_CHUNK.min(paths - c as usize * MC_CHUNK);
        let mut k = vec![0u64; cfg.grid_s.len()];
        for _ in 0..n {
            let x = iv.a() + iv.length() * rng.random::<f64>();
            let e = exit_time(x, until, &iv, &cfg.grid, &mut rng).unwrap_or(f64::INFINITY);
            for (k, &s) in k.iter_mut().zip(&cfg.grid_s) {
                if e <= s {
                    *k += 1;
                }
            }
        }
        Ok(k)
    })?;
    let mut total = vec![0u64; cfg.grid_s.len()];
    for c in counts {
        for (t, v) in total.iter_mut().zip(c) {
            *t += v;
        }
    }
    Ok(total.into_iter().map(|k| k as f64 / paths as f64).collect())
}

/// Tables of the survival probability, the limit age law and the exit
/// rate, with closed-form checks and, when `mc_paths > 0`, Monte Carlo
/// certification of the series.
pub fn analytic(cfg: &RunConfig, workers: usize) -> Result<(Vec<AnalyticRow>, Vec<Check>)> {
    let iv = cfg.interval;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for &x in &cfg.grid_x {
        for &s in &cfg.grid_s {
            rows.push(series_row("psi", Some(x), s, psi(x, s, &iv, &cfg.series)?));
        }
    }
    for &s in &cfg.grid_s {
        rows.push(series_row("limit_cdf", None, s, limit_cdf(s, &iv, &cfg.series)?));
    }
    let eps = cfg.oracle_eps;
    let mut worst: f64 = 0.0;
    for &s in &cfg.grid_s {
        let rate = exit_rate(Side::A, s, &iv, &cfg.series)?;
        let limit = psi(iv.a() + eps, s, &iv, &cfg.series)?.value / (2.0 * eps);
        let rel = (rate.value / limit - 1.0).abs();
        worst = worst.max(rel);
        rows.push(series_row("exit_rate", None, s, rate));
        rows.push(AnalyticRow {
            quantity: "exit_rate_eps_limit",
            x: Some(iv.a() + eps),
            s,
            value: limit,
            bound: None,
            terms: None,
            mc: None,
        });
        rows.push(AnalyticRow {
            quantity: "ito_tail",
            x: None,
            s,
            value: ito_tail(s)?,
            bound: None,
            terms: None,
            mc: None,
        });
    }
    checks.push(
        Check::new("exit_rate_matches_eps_limit", worst <= 0.01)
            .with("epsilon", eps)
            .with("max_relative_error", worst),
    );

    let unit = ito_tail(2.0 / std::f64::consts::PI)?;
    let half = ito_tail(8.0 / std::f64::consts::PI)?;
    let grid: Vec<f64> = (1..=1000).map(|k| k as f64 * 0.01).collect();
    let tails = grid
        .iter()
        .map(|&t| ito_tail(t))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let decreasing = tails.windows(2).all(|w| w[1] < w[0]);
    checks.push(
        Check::new(
            "ito_tail_closed_form",
            (unit - 1.0).abs() <= 1e-15 && (half - 0.5).abs() <= 1e-15 && decreasing,
        )
        .with("at_2_over_pi", unit)
        .with("at_8_over_pi", half)
        .with("strictly_decreasing", decreasing),
    );

    if cfg.mc_paths > 0 {
        let n = cfg.mc_paths as f64;
        let mut agreeing = 0;
        let mut total = 0;
        for (xi, &x) in cfg.grid_x.iter().enumerate() {
            let surv = mc_survival(cfg, x, xi as u64, cfg.mc_paths, workers)?;
            for (&s, &p) in cfg.grid_s.iter().zip(&surv) {
                let exact = psi(x, s, &iv, &cfg.series)?.value;
                let se = (exact * (1.0 - exact) / n).sqrt();
                let ok = (p - exact).abs() <= 3.0 * se;
                total += 1;
                agreeing += ok as usize;
                checks.push(
                    Check::new(format!("psi_mc_x_{x}_s_{s}"), ok)
                        .with("series", exact)
                        .with("monte_carlo", p)
                        .with("se", se),
                );
                let row = rows
                    .iter_mut()
                    .find(|r| r.quantity == "psi" && r.x == Some(x) && r.s == s)
                    .expect("psi row exists");
                row.mc = Some((p, se));
            }
        }
        let exits = mc_uniform_exit(cfg, cfg.grid_x.len() as u64, cfg.mc_paths, workers)?;
        for (&s, &p) in cfg.grid_s.iter().zip(&exits) {
            let exact = limit_cdf(s, &iv, &cfg.series)?.value;
            let se = (exact * (1.0 - exact) / n).sqrt();
            let ok = (p - exact).abs() <= 3.0 * se;
            total += 1;
            agreeing += ok as usize;
            checks.push(
                Check::new(format!("limit_cdf_mc_s_{s}"), ok)
                    .with("series", exact)
                    .with("monte_carlo", p)
                    .with("se", se),
            );
            let row = rows
                .iter_mut()
                .find(|r| r.quantity == "limit_cdf" && r.s == s)
                .expect("limit_cdf row exists");
            row.mc = Some((p, se));
        }
        checks.push(
            Check::info("monte_carlo_summary")
                .with("paths_per_point", cfg.mc_paths as u64)
                .with("agreeing", agreeing as u64)
                .with("total", total as u64),
        );
    }
    Ok((rows, checks))
}

// ---------------------------------------------------------------------------
// Conditioned excursion sampler against the boundary-offset oracle

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerRow {
    pub side: Side,
    pub s: f64,
    pub quantity: &'static str,
    pub ks: KsReport,
}

const ORACLE_MAX_ATTEMPTS: u64 = 1_000_000_000;

/// `(endpoint at s, lifetime, sup displacement)` of one draw.
type Draw = [f64; 3];

/// `n` draws from the sampler and from the oracle.
fn sampler_draws(cfg: &RunConfig, side: Side, s: f64, lane: u64, workers: usize) -> Result<(Vec<Draw>, Vec<Draw>)> {
    let q = par_map(workers, cfg.n, |i| {
        let mut rng = stream(cfg.seed, Domain::Reference, lane, i);
        let z = sample_q(side, s, &cfg.interval, &cfg.grid, &cfg.sampler, &mut rng)?;
        Ok([
            eval_functional(&Functional::EndpointDisp { clock: s }, &z)?,
            z.lifetime(),
            eval_functional(&Functional::SupDisp, &z)?,
        ])
    })?;
    let oracle = par_map(workers, cfg.n, |i| {
        let mut rng = stream(cfg.seed, Domain::Oracle, lane, i);
        let d = offset_excursion(
            side,
            s,
            cfg.oracle_eps,
            cfg.grid.coarse_dt(),
            &cfg.interval,
            ORACLE_MAX_ATTEMPTS,
            &mut rng,
        )?;
        Ok([d.endpoint_disp, d.lifetime, d.sup_disp])
    })?;
    Ok((q, oracle))
}

pub fn validate_samplers(cfg: &RunConfig, workers: usize) -> Result<(Vec<SamplerRow>, Vec<Check>)> {
    let mut rows = Vec::new();
    for (si, &side) in SIDES.iter().enumerate() {
        for (k, &s) in cfg.s_list.iter().enumerate() {
            let lane = (si * cfg.s_list.len() + k) as u64;
            let (q, oracle) = sampler_draws(cfg, side, s, lane, workers)?;
            for (j, quantity) in ["endpoint", "lifetime", "sup_disp"].into_iter().enumerate() {
                let a: Vec<f64> = q.iter().map(|d| d[j]).collect();
                let b: Vec<f64> = oracle.iter().map(|d| d[j]).collect();
                rows.push(SamplerRow {
                    side,
                    s,
                    quantity,
                    ks: ks_two_sample(&a, &b, cfg.alpha)?,
                });
            }
        }
    }
    let checks = rows
        .iter()
        .map(|r| Check::ks(format!("ks_{}_{}_s_{}", r.quantity, side_name(r.side), r.s), &r.ks))
        .collect();
    Ok((rows, checks))
}

pub fn side_label(side: Side) -> &'static str {
    side_name(side)
}
