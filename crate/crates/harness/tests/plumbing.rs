use frontlab::config::Config;
use frontlab::report::{Provenance, SCHEMA_LINE};
use frontlab::*;
use std::collections::HashSet;

fn report(criteria: Vec<Criterion>) -> ExperimentReport {
    ExperimentReport {
        id: ExperimentId::E1,
        title: "t".into(),
        criteria,
        notes: vec![],
        files: vec![],
        wall_time: 0.0,
        budget: 30.0,
        provenance: Provenance {
            config_hash: "0".into(),
            code_version: "v".into(),
            threads: 1,
            seedless: true,
        },
    }
}

#[test]
fn defaults_validate() {
    Config::default().validate().unwrap();
    let round = Config::parse(&Config::default().to_toml()).unwrap();
    assert_eq!(round, Config::default());
}

#[test]
fn unknown_keys_are_rejected() {
    assert!(Config::parse("[sim2d]\nnzz = 3\n").is_err());
    assert!(Config::parse("[nonsense]\n").is_err());
    assert!(Config::parse("[profile.reaction]\nname = \"kpp\"\nnu2 = 1.0\n").is_err());
}

#[test]
fn negative_nz_fails_validation() {
    let err = Config::parse("[comparison]\nnz = -5\n").unwrap_err();
    let msg = format!("{err:#}");
    assert!(msg.contains("comparison.nz"), "{msg}");
}

#[test]
fn invalid_config_never_reaches_a_run() {
    let cfg = Config::parse("[profile]\ndz = -0.1\n");
    assert!(cfg.is_err());
    let mut c = Config::default();
    c.sim2d.horizon = 50.0;
    let dir = tempfile::tempdir().unwrap();
    assert!(ExperimentConfig::new(ExperimentId::E6, c.clone(), dir.path()).is_err());
    assert!(ExperimentConfig::new(ExperimentId::E1, c, dir.path()).is_ok());
}

#[test]
fn config_hash_tracks_parameters() {
    let a = ExperimentConfig::new(ExperimentId::E1, Config::default(), "x").unwrap();
    let mut c = Config::default();
    c.profile.dz = 0.02;
    let b = ExperimentConfig::new(ExperimentId::E1, c, "x").unwrap();
    let e2 = ExperimentConfig::new(ExperimentId::E2, Config::default(), "x").unwrap();
    assert_eq!(a.config_hash().len(), 16);
    assert_eq!(a.config_hash(), a.clone().config_hash());
    assert_ne!(a.config_hash(), b.config_hash());
    assert_ne!(a.config_hash(), e2.config_hash());
}

#[test]
fn empty_report_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(emit_report(&report(vec![]), dir.path()).is_err());
    assert!(!dir.path().join("report.csv").exists());
}

#[test]
fn single_passing_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let r = report(vec![Criterion::within("c", 2.0, 2.0, 1e-3)]);
    emit_report(&r, dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], SCHEMA_LINE);
    assert_eq!(lines[1], "criterion,measured,target,tol,pass");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].ends_with(",true"), "{}", lines[2]);
    assert!(dir.path().join("report.txt").exists());
    assert_eq!(r.exit_code(), 0);
}

#[test]
fn mixed_results_exit_nonzero() {
    let r = report(vec![Criterion::at_most("a", 1.0, 2.0), Criterion::at_most("b", 3.0, 2.0)]);
    assert!(!r.passed());
    assert_eq!(r.failures(), 1);
    assert_ne!(r.exit_code(), 0);
    assert!(r.to_text().contains("FAIL b"));
}

#[test]
fn nan_measurements_fail() {
    assert!(!Criterion::at_most("a", f64::NAN, 1.0).pass);
    assert!(!Criterion::above("a", f64::NAN, 0.0).pass);
    assert!(!Criterion::within("a", f64::NAN, 0.0, 1.0).pass);
}

#[test]
fn csv_fields_with_commas_are_quoted() {
    let r = report(vec![Criterion::in_range("r", 0.5, 0.0, 1.0)]);
    assert!(r.to_csv().contains("\"[0, 1]\""));
}

#[test]
fn catalog() {
    let list = list_experiments();
    assert_eq!(list.len(), 7);
    let ids: HashSet<_> = list.iter().map(|e| e.id).collect();
    assert_eq!(ids.len(), 7);
    let e4 = list.iter().find(|e| e.id == ExperimentId::E4).unwrap();
    assert!(e4.title.contains("supersolution families"));
    assert!(list.iter().all(|e| !e.title.is_empty() && e.budget > 0.0));
}

#[test]
fn experiment_ids_round_trip() {
    for id in ExperimentId::ALL {
        assert_eq!(id.to_string().parse::<ExperimentId>().unwrap(), id);
        assert_eq!(id.to_string().to_lowercase().parse::<ExperimentId>().unwrap(), id);
    }
    assert!("E8".parse::<ExperimentId>().is_err());
    assert!("".parse::<ExperimentId>().is_err());
}

#[test]
fn every_csv_has_the_schema_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::new(ExperimentId::E1, Config::default(), dir.path()).unwrap();
    let r = run_experiment(&cfg).unwrap();
    assert!(r.passed(), "{}", r.to_text());
    for f in r.files.iter().map(String::as_str).chain(["report.csv"]) {
        let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
        assert_eq!(text.lines().next(), Some(SCHEMA_LINE), "{f}");
    }
}
