//! Runs E1-E7 and the cross-cutting checks, one PASS/FAIL line per criterion.

use frontlab::{commands, run_experiment, Config, ExperimentConfig, ExperimentId, ExperimentReport};
use frontlab_core::pde1d::{step, Boundary, Field1D, Grid1D};
use frontlab_core::pde2d::{max_stable_dt2d, step2d, Field2D, Grid2D};
use frontlab_core::profile::{exact_hadeler_rothe, hadeler_rothe_speed, ProfileGrid};
use frontlab_core::reaction::ReactionTerm;
use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;

struct Tally {
    failed: Vec<String>,
    total: usize,
}

impl Tally {
    fn line(&mut self, scope: &str, name: &str, pass: bool, detail: &str) {
        self.total += 1;
        println!("{} {scope} {name}  {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(format!("{scope} {name}"));
        }
    }
}

fn run(id: ExperimentId, dir: &Path) -> anyhow::Result<ExperimentReport> {
    run_experiment(&ExperimentConfig::new(id, Config::default(), dir)?)
}

fn column_equivalence() -> f64 {
    let f = ReactionTerm::hadeler_rothe(4.0).unwrap();
    let p = exact_hadeler_rothe(4.0, ProfileGrid::default()).unwrap().with_tails(-60.0, 60.0);
    let g = Grid2D::new(20.0, 16, Grid1D::with_spacing(-20.0, 25.0, 0.1).unwrap()).unwrap();
    let line: Vec<f64> = g.z.nodes().iter().map(|&z| p.value(z + 0.3).unwrap()).collect();
    let mut u2 = Field2D::from_line(g, Boundary::Dirichlet, &line);
    let mut u1 = Field1D::new(g.z, line, Boundary::Dirichlet);
    let c = hadeler_rothe_speed(4.0);
    let dt = 0.8 * max_stable_dt2d(g.dx(), g.z.dz());
    for _ in 0..2000 {
        step2d(&mut u2, &f, c, dt).unwrap();
        step(&mut u1, &f, c, dt).unwrap();
    }
    (0..g.nx)
        .flat_map(|i| u2.column(i).iter().zip(&u1.values).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max)
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn identical_reruns(root: &Path) -> anyhow::Result<(bool, String)> {
    let mut compared = 0;
    let mut differing = Vec::new();
    let cfg = Config::default();
    for label in ["E1", "E2", "sim1d"] {
        let mut outs = Vec::new();
        for k in 0..2 {
            let dir = root.join(format!("{label}_{k}"));
            match label {
                "sim1d" => {
                    commands::sim1d(&cfg, &dir)?;
                }
                id => {
                    run(id.parse()?, &dir)?;
                }
            }
            outs.push(files(&dir));
        }
        compared += outs[0].len();
        if outs[0].is_empty() || outs[0] != outs[1] {
            differing.push(label);
        }
    }
    Ok((differing.is_empty(), format!("{compared} CSVs compared, differing: {differing:?}")))
}

fn find<'a>(reports: &'a [ExperimentReport], id: ExperimentId, name: &str) -> Option<&'a frontlab::Criterion> {
    reports.iter().find(|r| r.id == id)?.criteria.iter().find(|c| c.name == name)
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    rayon::ThreadPoolBuilder::new().num_threads(1).build_global().ok();
    let root = tempfile::tempdir().expect("temp dir");
    let mut t = Tally { failed: Vec::new(), total: 0 };
    let mut reports = Vec::new();

    for id in ExperimentId::ALL {
        match run(id, &root.path().join(id.to_string())) {
            Ok(r) => {
                for c in &r.criteria {
                    let tol = if c.tol.is_empty() { String::new() } else { format!(" tol {}", c.tol) };
                    t.line(&id.to_string(), &c.name, c.pass, &format!("measured {} target {}{tol}", c.measured, c.target));
                }
                reports.push(r);
            }
            Err(e) => t.line(&id.to_string(), "run", false, &format!("{e:#}")),
        }
    }

    let corridors = [
        (ExperimentId::E3, "kpp_corridor"),
        (ExperimentId::E3, "hr4_corridor"),
        (ExperimentId::E6, "corridor"),
    ];
    let ok = corridors.iter().all(|(id, n)| find(&reports, *id, n).is_some_and(|c| c.pass));
    let measured: Vec<String> =
        corridors.iter().map(|(id, n)| find(&reports, *id, n).map_or("missing".into(), |c| c.measured.clone())).collect();
    t.line("cross", "corridor", ok, &format!("excursions {} target <= 1e-6", measured.join(", ")));

    let gap = column_equivalence();
    t.line("cross", "column_equivalence", gap <= 1e-12, &format!("measured {gap:e} target <= 1e-12"));

    let stable = find(&reports, ExperimentId::E4, "verdicts_stable_under_halving");
    t.line(
        "cross",
        "verdicts_stable_under_halving",
        stable.is_some_and(|c| c.pass),
        &stable.map_or("missing".into(), |c| format!("measured {}", c.measured)),
    );

    match identical_reruns(&root.path().join("rerun")) {
        Ok((pass, detail)) => t.line("cross", "byte_identical_reruns", pass, &detail),
        Err(e) => t.line("cross", "byte_identical_reruns", false, &format!("{e:#}")),
    }

    let over: Vec<String> = reports
        .iter()
        .filter(|r| r.wall_time > 2.0 * r.budget)
        .map(|r| format!("{} {:.1}s/{:.0}s", r.id, r.wall_time, r.budget))
        .collect();
    let times: Vec<String> = reports.iter().map(|r| format!("{} {:.1}s", r.id, r.wall_time)).collect();
    t.line(
        "cross",
        "wall_time_within_2x_budget",
        over.is_empty() && reports.len() == 7,
        &format!("{} over: {over:?}", times.join(", ")),
    );

    let codes = reports.iter().all(|r| (r.exit_code() == 0) == r.criteria.iter().all(|c| c.pass));
    t.line("cross", "exit_code_matches_verdicts", codes, "");

    println!("\n{}/{} criteria pass", t.total - t.failed.len(), t.total);
    if t.failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {}", t.failed.join("; "));
        ExitCode::FAILURE
    }
}
