use std::f64::consts::PI;

use kawahara_core::config::{parse_real, InitialSpec, KeyValues};
use kawahara_core::experiment::{
    emit_plot_data, rationals_up_to, run_dichotomy_experiment, sha256_hex, DichotomyConfig, Mode, RunManifest,
    SUMMARY_CSV, SUMMARY_HEADER,
};
use kawahara_core::data::StepFunctionSpec;
use kawahara_core::{Error, RationalTime};

fn small_config() -> DichotomyConfig {
    DichotomyConfig {
        n_modes: 256,
        grid_points: 1 << 13,
        levels: 9,
        rational_times: vec![RationalTime::new(0, 1).unwrap(), RationalTime::new(1, 3).unwrap(), RationalTime::new(2, 5).unwrap()],
        ..DichotomyConfig::default()
    }
}

#[test]
fn config_file_round_trip() {
    let text = "\
# comment
alpha = -1
n_modes = 512
grid.points = 16384
initial.kind = step
initial.jumps = 0, 2pi/3
initial.values = 1, -1   # trailing comment
times.rational = 1/2, 3/4
times.irrational = golden, 0.3183
dimension.levels = 10
seed = 9
";
    let cfg = DichotomyConfig::from_keys(&KeyValues::parse(text).unwrap()).unwrap();
    assert_eq!(cfg.alpha, -1);
    assert_eq!(cfg.n_modes, 512);
    assert_eq!(cfg.levels, 10);
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.rational_times, vec![RationalTime::new(1, 2).unwrap(), RationalTime::new(3, 4).unwrap()]);
    assert_eq!(cfg.irrational_times[1], ("0.3183".to_string(), 0.3183));
    match &cfg.initial {
        InitialSpec::Step(s) => {
            assert_eq!(s.jumps, vec![0.0, 2.0 * PI / 3.0]);
            assert_eq!(s.values, vec![1.0, -1.0]);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn config_errors_are_invalid_config() {
    for text in [
        "alpha = 2",
        "bogus = 1",
        "alpha = 0\nalpha = 1",
        "initial.jumps = 0, 1",
        "times.rational = 1/0",
        "dimension.levels = 7",
        "n_modes = x",
        "just text",
    ] {
        let result = KeyValues::parse(text).and_then(|kv| DichotomyConfig::from_keys(&kv));
        assert!(matches!(result, Err(Error::InvalidConfig(_))), "{text}: {result:?}");
    }
}

#[test]
fn real_expressions() {
    assert_eq!(parse_real("pi").unwrap(), PI);
    assert_eq!(parse_real("2pi/3").unwrap(), 2.0 * PI / 3.0);
    assert_eq!(parse_real("-0.5*pi").unwrap(), -0.5 * PI);
    assert!(parse_real("pie").is_err());
}

#[test]
fn initial_spec_forms() {
    let s = InitialSpec::parse("step:0=1,pi=0").unwrap();
    assert_eq!(s, InitialSpec::Step(StepFunctionSpec::indicator_half()));
    assert!(matches!(InitialSpec::parse("smoothed-step:0.1:0=1,pi=0").unwrap(), InitialSpec::SmoothedStep { width, .. } if width == 0.1));
    assert!(matches!(InitialSpec::parse("sobolev:0.5:3").unwrap(), InitialSpec::Sobolev { seed: 3, .. }));
    assert!(matches!(InitialSpec::parse("random:4").unwrap(), InitialSpec::Random { seed: 4, .. }));
    assert!(InitialSpec::parse("step").is_err());
    assert!(InitialSpec::parse("wave:1").is_err());
    assert!(InitialSpec::parse("step:1=0,0=1").is_err());
}

#[test]
fn initial_file_must_match_band() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    kawahara_core::data::make_random_data(8, 1.0, 0.0, 1.0, 1).write_json(&path).unwrap();
    let spec = InitialSpec::File { path: path.clone() };
    assert!(spec.build(8).is_ok());
    assert!(matches!(spec.build(9), Err(Error::BandMismatch { .. })));
    assert_eq!(spec.input_path(), Some(path.as_path()));
}

#[test]
fn linear_run_respects_plateau_bound_and_separates() {
    let report = run_dichotomy_experiment(&small_config()).unwrap();
    assert_eq!(report.times.len(), 3 + 4);
    assert_eq!(report.summary.plateau_bound_violations, 0);
    for t in report.times.iter().filter(|t| t.classification == "rational") {
        assert!(t.n_plateaus.unwrap() <= t.plateau_bound.unwrap());
    }
    let first = &report.times[0];
    assert_eq!(first.time, 0.0);
    assert_eq!(first.n_plateaus, Some(2));
    assert!((first.d_re - 1.0).abs() < 0.1, "{}", first.d_re);
    assert!(report.summary.separation.unwrap() > 0.0);
    assert_eq!(report.dimension_window, (17.0 / 16.0, 31.0 / 16.0));
}

#[test]
fn reports_are_reproducible() {
    let a = serde_json::to_string(&run_dichotomy_experiment(&small_config()).unwrap()).unwrap();
    let b = serde_json::to_string(&run_dichotomy_experiment(&small_config()).unwrap()).unwrap();
    assert_eq!(sha256_hex(a.as_bytes()), sha256_hex(b.as_bytes()));
}

#[test]
fn plot_data_matches_report() {
    let report = run_dichotomy_experiment(&small_config()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = emit_plot_data(&report, dir.path()).unwrap();
    assert_eq!(written.len(), 1 + report.times.len());
    let text = std::fs::read_to_string(dir.path().join(SUMMARY_CSV)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(SUMMARY_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), report.times.len());
    let max_rational = rows
        .iter()
        .filter(|r| r[1] == "rational")
        .map(|r| r[4].parse::<f64>().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(Some(max_rational), report.summary.max_d_re_rational);
    let counts = std::fs::read_to_string(dir.path().join("counts_0.csv")).unwrap();
    assert!(counts.starts_with("eps,count\n"));
    assert_eq!(counts.lines().count(), 1 + report.times[0].fit_re.counts.len());
}

#[test]
fn empty_report_gives_header_only() {
    let cfg = DichotomyConfig {
        rational_times: vec![],
        irrational_times: vec![],
        ..small_config()
    };
    let report = run_dichotomy_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_plot_data(&report, dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join(SUMMARY_CSV)).unwrap();
    assert_eq!(text, format!("{SUMMARY_HEADER}\n"));
}

#[test]
fn nonlinear_mode_reports_duhamel_slopes() {
    let cfg = DichotomyConfig {
        n_modes: 64,
        grid_points: 1 << 12,
        levels: 8,
        mode: Mode::Nonlinear,
        dt: 1e-3,
        rational_times: vec![RationalTime::new(0, 1).unwrap()],
        irrational_times: vec![("tiny".into(), 0.01 / std::f64::consts::TAU)],
        ..DichotomyConfig::default()
    };
    let report = run_dichotomy_experiment(&cfg).unwrap();
    assert!(report.times[1].slope_n.is_some());
    assert!(report.times[1].slope_n.unwrap() < report.times[1].slope_g);
}

#[test]
fn manifest_records_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("run.cfg");
    std::fs::write(&input, "alpha = 0\n").unwrap();
    let mut m = RunManifest::new("dichotomy", serde_json::json!({"alpha": 0}), vec![1]);
    m.hash_input(&input).unwrap();
    let out = dir.path().join("manifest.json");
    m.write(&out).unwrap();
    let back: RunManifest = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(back, m);
    assert_eq!(back.input_hashes.values().next().unwrap(), &sha256_hex(b"alpha = 0\n"));
}

#[test]
fn rational_grid_has_expected_size() {
    // 1 + Σ_{q=2}^{8} φ(q) = 1 + 1 + 2 + 2 + 4 + 2 + 6 + 4
    assert_eq!(rationals_up_to(8).len(), 22);
}
