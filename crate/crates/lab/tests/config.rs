use straddle_lab::config::{ConfigSource, Origin, KEYS};

const MINIMAL: &str = "interval = 0,1\nt = 10\nn = 1000\nseed = 1\n";

#[test]
fn minimal_file_fills_defaults_and_echoes() {
    let cfg = ConfigSource::parse_file(MINIMAL).unwrap().resolve(true).unwrap();
    assert_eq!((cfg.interval.a(), cfg.interval.b()), (0.0, 1.0));
    assert_eq!((cfg.t, cfg.n, cfg.seed), (10.0, 1000, 1));
    assert_eq!(cfg.start, 0.0);
    assert_eq!(cfg.buckets, 8);
    assert_eq!(cfg.alpha, 0.01);
    assert_eq!(cfg.grid_x, vec![0.25, 0.5, 0.75]);

    let echo = cfg.echo();
    assert_eq!(echo.iter().map(|(k, _)| *k).collect::<Vec<_>>(), KEYS);
    let get = |key: &str| echo.iter().find(|(k, _)| *k == key).unwrap().1.clone();
    assert_eq!(get("interval"), "0,1");
    assert_eq!(get("t"), "10");
    assert_eq!(get("n"), "1000");
    assert_eq!(get("seed"), "1");
}

#[test]
fn echoed_text_parses_back_to_the_same_config() {
    let cfg = ConfigSource::parse_file("interval = -2,3\nseed = 9\nu = 0.5,2\n")
        .unwrap()
        .resolve(true)
        .unwrap();
    let again = ConfigSource::parse_file(&cfg.to_text()).unwrap().resolve(true).unwrap();
    assert_eq!(cfg, again);
    assert_eq!(cfg.hash(), again.hash());
    assert_eq!(cfg.hash().len(), 64);
}

#[test]
fn defaults_scale_with_the_interval() {
    let cfg = ConfigSource::parse_file("interval = 0,2\nseed = 1\n")
        .unwrap()
        .resolve(true)
        .unwrap();
    assert_eq!(cfg.grid.coarse_dt(), 4e-4);
    assert_eq!(cfg.y, vec![0.2, 0.6, 1.0]);
    assert_eq!(cfg.s_threshold, 2.0);
}

#[test]
fn reversed_interval_names_the_key() {
    let err = ConfigSource::parse_file("interval = 1,0\nseed = 1\n")
        .unwrap()
        .resolve(true)
        .unwrap_err();
    assert_eq!(err.key, "interval");
    assert_eq!(err.origin, Origin::Line(1));
    assert!(err.to_string().contains("interval"), "{err}");
}

#[test]
fn flag_overrides_file() {
    let mut src = ConfigSource::parse_file(MINIMAL).unwrap();
    src.set_flag("seed", "7").unwrap();
    assert_eq!(src.resolve(true).unwrap().seed, 7);
}

#[test]
fn unknown_key_reports_its_line() {
    let err = ConfigSource::parse_file("interval = 0,1\n\n# note\nsedd = 3\n").unwrap_err();
    assert_eq!(err.key, "sedd");
    assert_eq!(err.origin, Origin::Line(4));
    assert!(err.to_string().starts_with("config line 4"), "{err}");

    let mut src = ConfigSource::new();
    let err = src.set_flag("bogus", "1").unwrap_err();
    assert_eq!(err.origin, Origin::Flag);
}

#[test]
fn malformed_and_duplicate_lines_are_rejected() {
    let err = ConfigSource::parse_file("interval 0,1\n").unwrap_err();
    assert_eq!(err.origin, Origin::Line(1));
    let err = ConfigSource::parse_file("seed = 1\nseed = 2\n").unwrap_err();
    assert_eq!((err.key.as_str(), err.origin), ("seed", Origin::Line(2)));
}

#[test]
fn fine_step_above_coarse_step_is_an_error() {
    let err = ConfigSource::parse_file("interval = 0,1\nseed = 1\ncoarse_dt = 1e-4\nfine_dt = 1e-3\n")
        .unwrap()
        .resolve(true)
        .unwrap_err();
    assert!(err.key == "fine_dt" || err.key == "coarse_dt", "{err}");
}

#[test]
fn invalid_values_are_rejected() {
    for (text, key) in [
        ("interval = 0,1\nseed = 1\ncoarse_dt = -1\n", "coarse_dt"),
        ("interval = 0,1\nseed = 1\nn = many\n", "n"),
        ("interval = 0,1\nseed = -4\n", "seed"),
        ("interval = 0\nseed = 1\n", "interval"),
    ] {
        let res = ConfigSource::parse_file(text).unwrap().resolve(true);
        assert_eq!(res.unwrap_err().key, key, "{text}");
    }
}

#[test]
fn seed_is_required_only_when_asked() {
    let src = ConfigSource::parse_file("interval = 0,1\n").unwrap();
    assert_eq!(src.resolve(true).unwrap_err().key, "seed");
    assert!(src.resolve(false).is_ok());

    let src = ConfigSource::parse_file("seed = 1\n").unwrap();
    assert_eq!(src.resolve(false).unwrap_err().key, "interval");
}
