use straddle_lab::config::{ConfigSource, RunConfig};
use straddle_lab::experiments::{self as ex, Domain};
use straddle_lab::output;
use straddle_lab::{run, Command};

fn config(extra: &str) -> RunConfig {
    ConfigSource::parse_file(&format!("interval = 0,1\nseed = 11\n{extra}"))
        .unwrap()
        .resolve(true)
        .unwrap()
}

#[test]
fn streams_differ_by_domain_lane_and_index() {
    use rand::RngCore;
    let mut draws = Vec::new();
    for (d, lane, i) in [
        (Domain::Study, 0, 0),
        (Domain::Limit, 0, 0),
        (Domain::Study, 1, 0),
        (Domain::Study, 0, 1),
    ] {
        draws.push(ex::stream(1, d, lane, i).next_u64());
    }
    draws.sort_unstable();
    draws.dedup();
    assert_eq!(draws.len(), 4);
    assert_eq!(
        ex::stream(5, Domain::Rate, 2, 3).next_u64(),
        ex::stream(5, Domain::Rate, 2, 3).next_u64()
    );
}

#[test]
fn par_map_keeps_order() {
    let v = ex::par_map(3, 100, |i| Ok(i * i)).unwrap();
    assert_eq!(v, (0..100).map(|i| i * i).collect::<Vec<u64>>());
}

#[test]
fn study_rows_follow_the_contract() {
    let cfg = config("t = 4\nn = 300\n");
    let study = ex::run_straddle_study(&cfg, cfg.t, cfg.n, 0, 1).unwrap();
    assert_eq!(study.rows.len(), 300);
    assert!(study.attempts() >= 300);
    for (i, row) in study.rows.iter().enumerate() {
        assert_eq!(row.replicate, i as u64);
        let o = &row.obs;
        assert!(o.sigma < o.t && o.t < o.d || o.never_exited);
    }
    let table = output::study_table(&study);
    assert_eq!(table.rows.len(), 300);
    assert!(table.rows.iter().all(|r| r.len() == table.columns.len()));
}

#[test]
fn age_edges_are_increasing_quantiles() {
    let ages: Vec<f64> = (1..=1000).map(|i| i as f64 / 1000.0).collect();
    let e = ex::age_edges(&ages, 4);
    assert_eq!(e.len(), 5);
    assert_eq!(e[0], 0.001);
    assert_eq!(e[4], 1.0);
    assert!(e.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn ratio_estimate_matches_hand_computation() {
    let (r, se) = ex::ratio_estimate(&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0]);
    assert!((r - 2.0).abs() < 1e-12);
    assert!(se.abs() < 1e-12, "exact proportionality has no spread");
    let (r, se) = ex::ratio_estimate(&[1.0, 3.0], &[1.0, 1.0]);
    assert_eq!(r, 2.0);
    assert!(se > 0.0);
}

#[test]
fn analytic_table_has_truncation_bounds() {
    let cfg = ConfigSource::parse_file("interval = 0,1\ngrid_s = 0.1,1\n")
        .unwrap()
        .resolve(false)
        .unwrap();
    let (rows, checks) = ex::analytic(&cfg, 1).unwrap();
    assert!(checks.iter().all(|c| c.pass));
    let psi: Vec<_> = rows.iter().filter(|r| r.quantity == "psi").collect();
    assert_eq!(psi.len(), 6);
    for r in psi {
        assert!(r.bound.unwrap() < 1e-10);
        assert!(r.value > 0.0 && r.value < 1.0);
        assert!(r.mc.is_none());
    }
}

#[test]
fn small_runs_render_stable_outputs() {
    let cfg = config("t = 6\nn = 400\nref_draws = 40\nt_list = 1,6\nreplicates = 4\nhorizon = 10\ns_list = 0.1\n");
    for command in [
        Command::Simulate,
        Command::Buckets,
        Command::Converge,
        Command::Application,
        Command::RateCheck,
        Command::ValidateSamplers,
    ] {
        let a = run(command, &cfg, 1).unwrap();
        let b = run(command, &cfg, 2).unwrap();
        assert_eq!(a, b, "{}", command.name());
        assert!(a.csv.contains(&format!("# command: {}\n", command.name())));
        let doc: serde_json::Value = serde_json::from_str(&a.summary).unwrap();
        assert_eq!(doc["pass"], a.pass());
        assert_eq!(doc["checks"].as_array().unwrap().len(), a.checks.len());
    }
}

#[test]
fn shortest_round_trip_numbers() {
    assert_eq!(output::num(0.1), "0.1");
    assert_eq!(output::num(1.0), "1");
    assert_eq!(output::num(1e-7), "0.0000001");
    assert_eq!(output::num(f64::NAN), "");
    let x = 0.1 + 0.2;
    assert_eq!(output::num(x).parse::<f64>().unwrap(), x);
}
