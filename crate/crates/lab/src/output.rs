//! CSV tables with a provenance header, and the summary JSON.

use serde_json::{json, Value};
use straddle_core::stats::{BucketReport, BucketStatus};

use crate::config::RunConfig;
use crate::experiments::{side_label, AnalyticRow, ApplicationRow, ConvergenceRow, RateRow, SamplerRow, Study};
use crate::report::{all_pass, Check};

pub const TOOL: &str = "straddle-lab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest round-trip decimal; empty for a missing value.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

/// Comment lines naming the tool, the command and every resolved setting.
pub fn header(command: &str, cfg: &RunConfig) -> String {
    let mut out = format!(
        "# {TOOL} {VERSION}\n# command: {command}\n# seed: {}\n# config-sha256: {}\n",
        cfg.seed,
        cfg.hash()
    );
    for (k, v) in cfg.echo() {
        out.push_str(&format!("# config: {k} = {v}\n"));
    }
    out
}

pub fn csv(command: &str, cfg: &RunConfig, table: &Table) -> String {
    let mut out = header(command, cfg);
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        debug_assert_eq!(row.len(), table.columns.len());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn summary(command: &str, cfg: &RunConfig, checks: &[Check], extra: Value) -> String {
    let config: serde_json::Map<String, Value> = cfg
        .echo()
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::String(v)))
        .collect();
    let doc = json!({
        "tool": TOOL,
        "version": VERSION,
        "command": command,
        "seed": cfg.seed,
        "config_sha256": cfg.hash(),
        "config": config,
        "pass": all_pass(checks),
        "checks": checks,
        "extra": extra,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("summary serialises");
    s.push('\n');
    s
}

pub fn study_table(study: &Study) -> Table {
    let rows = study
        .rows
        .iter()
        .map(|r| {
            let o = &r.obs;
            let f = o.functionals;
            vec![
                r.replicate.to_string(),
                num(o.t),
                num(o.sigma),
                num(o.d),
                num(o.x_sigma),
                opt(f.map(|f| f.lifetime)),
                opt(f.map(|f| f.endpoint_disp)),
                opt(f.map(|f| f.sup_disp)),
                opt(f.map(|f| f.occ_above_mid)),
                flag(o.never_exited),
            ]
        })
        .collect();
    Table {
        columns: vec![
            "replicate",
            "t",
            "sigma",
            "d",
            "x_sigma",
            "lifetime",
            "endpoint_disp",
            "sup_disp",
            "occ_above_mid",
            "never_exited",
        ],
        rows,
    }
}

pub fn bucket_table(reports: &[BucketReport]) -> Table {
    let rows = reports
        .iter()
        .map(|r| {
            vec![
                r.functional.to_string(),
                side_label(r.side).to_string(),
                num(r.s_low),
                num(r.s_high),
                r.n_obs.to_string(),
                num(r.empirical_mean),
                num(r.reference_mean),
                num(r.combined_se),
                num(r.allowance),
                match r.status {
                    BucketStatus::Pass => "pass",
                    BucketStatus::Fail => "fail",
                    BucketStatus::Skipped => "skipped",
                }
                .to_string(),
            ]
        })
        .collect();
    Table {
        columns: vec![
            "functional",
            "x_sigma",
            "s_low",
            "s_high",
            "n_obs",
            "empirical_mean",
            "reference_mean",
            "combined_se",
            "allowance",
            "status",
        ],
        rows,
    }
}

pub fn convergence_table(rows: &[ConvergenceRow]) -> Table {
    Table {
        columns: vec![
            "t",
            "n",
            "age_ks",
            "age_ks_threshold",
            "p_side_a",
            "p_side_a_low",
            "p_side_a_high",
            "endpoint_ks",
            "sup_ks",
            "occ_ks",
        ],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    num(r.t),
                    r.n.to_string(),
                    num(r.age_ks.statistic),
                    num(r.age_ks.threshold),
                    num(r.side_a.estimate),
                    num(r.side_a.lo),
                    num(r.side_a.hi),
                    num(r.endpoint_ks.statistic),
                    num(r.sup_ks.statistic),
                    num(r.occ_ks.statistic),
                ]
            })
            .collect(),
    }
}

pub fn application_table(rows: &[ApplicationRow]) -> Table {
    Table {
        columns: vec![
            "u",
            "y",
            "direct",
            "direct_low",
            "direct_high",
            "limit",
            "limit_low",
            "limit_high",
            "agree",
        ],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    num(r.u),
                    num(r.y),
                    num(r.direct.estimate),
                    num(r.direct.lo),
                    num(r.direct.hi),
                    num(r.limit.estimate),
                    num(r.limit.lo),
                    num(r.limit.hi),
                    flag(r.agree),
                ]
            })
            .collect(),
    }
}

pub fn rate_table(rows: &[RateRow]) -> Table {
    Table {
        columns: vec![
            "replicate",
            "local_time_a",
            "count_a",
            "count_a_double",
            "local_time_b",
            "count_b",
        ],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.replicate.to_string(),
                    num(r.local_time_a),
                    r.count_a.to_string(),
                    r.count_a_double.to_string(),
                    num(r.local_time_b),
                    r.count_b.to_string(),
                ]
            })
            .collect(),
    }
}

pub fn analytic_table(rows: &[AnalyticRow]) -> Table {
    Table {
        columns: vec!["quantity", "x", "s", "value", "bound", "terms", "monte_carlo", "mc_se"],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.quantity.to_string(),
                    opt(r.x),
                    num(r.s),
                    num(r.value),
                    opt(r.bound),
                    r.terms.map(|t| t.to_string()).unwrap_or_default(),
                    opt(r.mc.map(|m| m.0)),
                    opt(r.mc.map(|m| m.1)),
                ]
            })
            .collect(),
    }
}

pub fn sampler_table(rows: &[SamplerRow]) -> Table {
    Table {
        columns: vec!["x", "s", "quantity", "statistic", "threshold", "pass"],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    side_label(r.side).to_string(),
                    num(r.s),
                    r.quantity.to_string(),
                    num(r.ks.statistic),
                    num(r.ks.threshold),
                    flag(r.ks.pass),
                ]
            })
            .collect(),
    }
}
