//! The seven acceptance experiments.

use crate::config::*;
use crate::pipelines::*;
use crate::report::*;
use anyhow::{anyhow, bail, Result};
use frontlab_core::comparison::*;
use frontlab_core::fit::log_spaced;
use frontlab_core::front_dynamics::*;
use frontlab_core::pde1d::*;
use frontlab_core::profile::*;
use frontlab_core::{Certificate, Graph, Residual};
use std::f64::consts::{SQRT_2, TAU};
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogEntry {
    pub id: ExperimentId,
    pub title: &'static str,
    /// Results of the theory the experiment exercises.
    pub anchors: &'static str,
    /// Wall-time budget in seconds on a desk machine.
    pub budget: f64,
}

pub fn list_experiments() -> Vec<CatalogEntry> {
    use ExperimentId::*;
    vec![
        CatalogEntry {
            id: E1,
            title: "minimal speed and pushed/pulled classification",
            anchors: "c* >= 2 sqrt(f'(0)); steep tail rate lambda_-(c*) of pushed fronts",
            budget: 30.0,
        },
        CatalogEntry {
            id: E2,
            title: "shot profiles against the closed-form Hadeler-Rothe front",
            anchors: "explicit pushed front of u(1 - u)(1 + nu u)",
            budget: 30.0,
        },
        CatalogEntry {
            id: E3,
            title: "logarithmic shift: absent for pushed HR(4), -3/2 ln t for KPP",
            anchors: "convergence to the pushed front without log correction; Bramson delay",
            budget: 300.0,
        },
        CatalogEntry {
            id: E4,
            title: "sign certificates for the supersolution families and their subsolutions",
            anchors: "shifted-profile, multiplicative, exponential and modulated comparison functions",
            budget: 300.0,
        },
        CatalogEntry {
            id: E5,
            title: "curvature flow vs semilinear approximation; derivative decay rates",
            anchors: "small-gradient closeness of U and V; t^(-k/2) decay of V derivatives",
            budget: 300.0,
        },
        CatalogEntry {
            id: E6,
            title: "2D corrugated front converging to the modulated profile",
            anchors: "profile residual decay, level-set flattening, monotone transition band",
            budget: 600.0,
        },
        CatalogEntry {
            id: E7,
            title: "level set tracked by the semilinear flow after a handoff time",
            anchors: "sup |Gamma(x, t) - V(x, t - tau)| small for large tau",
            budget: 600.0,
        },
    ]
}

pub fn catalog_entry(id: ExperimentId) -> CatalogEntry {
    list_experiments().into_iter().find(|e| e.id == id).expect("every id is catalogued")
}

/// Criterion names per experiment, in report order.
pub fn criterion_names(id: ExperimentId) -> &'static [&'static str] {
    use ExperimentId::*;
    match id {
        E1 => &["kpp_c_star", "hr4_c_star", "hr4_class", "hr4_tail_exponent", "hr1_class"],
        E2 => &["hr3_profile_sup_diff", "hr4_profile_sup_diff", "hr6_profile_sup_diff"],
        E3 => &[
            "kpp_log_coefficient",
            "kpp_corridor",
            "hr4_log_coefficient",
            "hr4_corridor",
            "log_coefficient_separation",
        ],
        E4 => &[
            "rothe_super_q0_max",
            "rothe_pair",
            "wang_pair",
            "exponential_pair",
            "exponential_undersized_a_violates",
            "main_pair_flat",
            "main_pair_corrugated",
            "verdicts_stable_under_halving",
            "supersolution_corroboration",
        ],
        E5 => &[
            "uv_gap_amplitude_0.05",
            "uv_gap_halving_0.4",
            "uv_gap_halving_0.2",
            "decay_slope_v_x",
            "decay_slope_v_xx",
            "decay_slope_v_xxx",
            "decay_slope_v_xt",
        ],
        E6 => &[
            "profile_residual_t100",
            "gamma_x_shrink_10_200",
            "gamma_xx_shrink_10_200",
            "monotone_band_after_burn_in",
            "corridor",
        ],
        E7 => &["gamma_vs_v_tau_20", "gamma_vs_v_tau_40"],
    }
}

/// Burn-in time after which the transition band must be strictly monotone.
pub const T_BURN: f64 = 5.0;
/// Allowed excursion of a solution outside `[0, 1]`.
pub const CORRIDOR_TOL: f64 = 1e-6;

struct Run {
    dir: PathBuf,
    criteria: Vec<Criterion>,
    notes: Vec<String>,
    files: Vec<String>,
}

impl Run {
    fn csv<I: IntoIterator<Item = String>>(&mut self, name: &str, header: &str, rows: I) -> Result<()> {
        write_csv(&self.dir, name, header, rows)?;
        self.files.push(name.into());
        Ok(())
    }

    fn note(&mut self, s: String) {
        self.notes.push(s);
    }

    /// Runs `body`; on error every criterion in `names` fails with the diagnostic.
    fn stage(&mut self, names: &[&str], body: impl FnOnce(&mut Run) -> Result<Vec<Criterion>>) {
        match body(self) {
            Ok(c) => {
                debug_assert_eq!(c.iter().map(|c| c.name.as_str()).collect::<Vec<_>>(), names);
                self.criteria.extend(c);
            }
            Err(e) => self.criteria.extend(names.iter().map(|n| Criterion::errored(n, &e))),
        }
    }
}

/// Runs one experiment, writes its CSVs and report into `cfg.out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut run = Run {
        dir: cfg.out_dir.clone(),
        criteria: Vec::new(),
        notes: Vec::new(),
        files: Vec::new(),
    };
    let p = &cfg.params;
    match cfg.id {
        ExperimentId::E1 => e1(p, &mut run),
        ExperimentId::E2 => e2(p, &mut run),
        ExperimentId::E3 => e3(p, &mut run),
        ExperimentId::E4 => e4(p, &mut run),
        ExperimentId::E5 => e5(p, &mut run),
        ExperimentId::E6 => e6(p, &mut run),
        ExperimentId::E7 => e7(p, &mut run),
    }
    let entry = catalog_entry(cfg.id);
    let report = ExperimentReport {
        id: cfg.id,
        title: entry.title.into(),
        criteria: run.criteria,
        notes: run.notes,
        files: run.files,
        wall_time: start.elapsed().as_secs_f64(),
        budget: entry.budget,
        provenance: Provenance {
            config_hash: cfg.config_hash(),
            code_version: format!("frontlab {}", env!("CARGO_PKG_VERSION")),
            threads: rayon::current_num_threads(),
            seedless: cfg.seedless,
        },
    };
    emit_report(&report, &cfg.out_dir)?;
    Ok(report)
}

fn corridor_excursion((lo, hi): (f64, f64)) -> f64 {
    (-lo).max(hi - 1.0).max(0.0)
}

fn e1(p: &Config, run: &mut Run) {
    let ps = &p.profile;
    let mut rows = Vec::new();
    run.stage(&["kpp_c_star"], |_| {
        let fr = front(&ReactionSpec::kpp(), None, ps)?;
        let ms = fr.min_speed;
        rows.push(format!("KPP,{},{},{},{}", ms.c_star, ms.lo, ms.hi, classify(&fr)?));
        Ok(vec![Criterion::within("kpp_c_star", ms.c_star, 2.0, 1e-3)])
    });
    run.stage(&["hr4_c_star", "hr4_class", "hr4_tail_exponent"], |run| {
        let fr = front(&ReactionSpec::hadeler_rothe(4.0), None, ps)?;
        let ms = fr.min_speed;
        let class = classify(&fr)?;
        let window = fr.profile.default_decay_window()?;
        let tail = measure_decay_exponent(&fr.profile, window)?;
        rows.push(format!("HR(4),{},{},{},{class}", ms.c_star, ms.lo, ms.hi));
        run.note(format!("HR(4) tail exponent fitted on z in [{:.2}, {:.2}]", window.0, window.1));
        let pr = &fr.profile;
        run.csv(
            "profile_hr4.csv",
            "z,phi,phi_prime",
            (0..pr.len()).map(|i| row(&[pr.z(i), pr.phi()[i], pr.phi_prime()[i]])),
        )?;
        Ok(vec![
            Criterion::within("hr4_c_star", ms.c_star, 3.0 / SQRT_2, 1e-3),
            Criterion::label("hr4_class", &class.to_string(), "pushed"),
            Criterion::within("hr4_tail_exponent", tail, -SQRT_2, 0.02),
        ])
    });
    run.stage(&["hr1_class"], |_| {
        let fr = front(&ReactionSpec::hadeler_rothe(1.0), None, ps)?;
        let ms = fr.min_speed;
        let class = classify(&fr)?;
        rows.push(format!("HR(1),{},{},{},{class}", ms.c_star, ms.lo, ms.hi));
        Ok(vec![Criterion::label("hr1_class", &class.to_string(), "pulled")])
    });
    if let Err(e) = run.csv("speeds.csv", "reaction,c_star,lo,hi,class", rows) {
        run.note(format!("speeds.csv not written: {e:#}"));
    }
}

fn e2(p: &Config, run: &mut Run) {
    let mut rows = Vec::new();
    for (nu, name) in [(3.0, "hr3_profile_sup_diff"), (4.0, "hr4_profile_sup_diff"), (6.0, "hr6_profile_sup_diff")] {
        run.stage(&[name], |_| {
            let fr = front(&ReactionSpec::hadeler_rothe(nu), None, &p.profile)?;
            let exact = exact_hadeler_rothe(nu, ProfileGrid::default())?;
            let shot = &fr.profile;
            let mut sup: f64 = 0.0;
            for (i, &v) in shot.phi().iter().enumerate() {
                let z = shot.z(i);
                if z >= exact.z_lo() && z <= exact.z_hi() {
                    sup = sup.max((v - exact.value(z)?).abs());
                }
            }
            rows.push(row(&[nu, fr.profile.c(), sup]));
            Ok(vec![Criterion::at_most(name, sup, 1e-5)])
        });
    }
    if let Err(e) = run.csv("profiles.csv", "nu,c,sup_diff", rows) {
        run.note(format!("profiles.csv not written: {e:#}"));
    }
}

fn trace_rows(trace: &FrontTrace<f64>) -> Vec<String> {
    trace.samples.iter().map(|s| row(&[s.t, s.xi, s.sigma])).collect()
}

fn e3(p: &Config, run: &mut Run) {
    let s = &p.e3;
    let times = log_spaced(s.window.0, s.window.1, s.samples as usize);
    let dt = default_dt(s.dz);
    let mut r_kpp = None;
    let mut r_hr = None;
    run.stage(&["kpp_log_coefficient", "kpp_corridor"], |run| {
        let f = ReactionSpec::kpp().build()?;
        let grid = Grid1D::with_spacing(s.kpp_domain.0, s.kpp_domain.1, s.dz)?;
        let mut u = InitialData::Step { at: 0.0 }.build(grid, Boundary::Dirichlet, None)?;
        let c = f.linear_speed();
        let trace = run_front_convergence(&mut u, &f, c, dt, &times, 0.5, TailPolicy::Widen)?;
        let fit = fit_log_shift(&trace.times(), &trace.sigmas(), s.window, ShiftModel::Plain)?;
        run.note(format!(
            "KPP: frame c = {c}, fit c = {:.6}, r = {:.4}, s = {:.4}, rms = {:.2e}, widenings {}",
            fit.c_fit, fit.r, fit.s, fit.rms, trace.widenings
        ));
        run.csv("trace_kpp.csv", "t,xi,sigma", trace_rows(&trace))?;
        r_kpp = Some(fit.r);
        Ok(vec![
            Criterion::in_range("kpp_log_coefficient", fit.r, -1.8, -1.2),
            Criterion::at_most("kpp_corridor", corridor_excursion(trace.corridor), CORRIDOR_TOL),
        ])
    });
    run.stage(&["hr4_log_coefficient", "hr4_corridor"], |run| {
        let fr = front(&ReactionSpec::hadeler_rothe(4.0), None, &p.profile)?;
        let grid = Grid1D::with_spacing(s.hr_domain.0, s.hr_domain.1, s.dz)?;
        let cal = calibrate_frame_speed(&fr.reaction, &fr.profile, grid, dt, 60.0)?;
        let lambda = fr.profile.exponents().lambda_minus;
        let mut u = InitialData::ExpTail { k: 1.0, lambda }.build(grid, Boundary::Dirichlet, None)?;
        let trace = run_front_convergence(&mut u, &fr.reaction, cal.c_discrete, dt, &times, 0.5, TailPolicy::Widen)?;
        let fit = fit_log_shift(&trace.times(), &trace.sigmas(), s.window, ShiftModel::Plain)?;
        run.note(format!(
            "HR(4): frame c_h = {:.6} (c* = {:.6}), fit c = {:.6}, r = {:.2e}, rms = {:.2e}",
            cal.c_discrete,
            fr.profile.c(),
            fit.c_fit,
            fit.r,
            fit.rms
        ));
        run.csv("trace_hr4.csv", "t,xi,sigma", trace_rows(&trace))?;
        r_hr = Some(fit.r);
        Ok(vec![
            Criterion::abs_at_most("hr4_log_coefficient", fit.r, 0.1),
            Criterion::at_most("hr4_corridor", corridor_excursion(trace.corridor), CORRIDOR_TOL),
        ])
    });
    run.stage(&["log_coefficient_separation"], |_| match (r_kpp, r_hr) {
        (Some(a), Some(b)) => Ok(vec![Criterion::at_least("log_coefficient_separation", (a - b).abs(), 1.0)]),
        _ => bail!("needs both fits"),
    });
}

fn residual_rows(family: &str, cert: &Certificate) -> Vec<String> {
    let mut out = Vec::new();
    let mut push = |grid: &str, r: &Residual| {
        let c = r.critical();
        out.push(format!(
            "{family},{},{grid},{},{},{},{},{},{},{},{}",
            r.expected.name(),
            r.verdict,
            r.min.value,
            r.max.value,
            r.min_scaled,
            r.max_scaled,
            c.x,
            c.z,
            c.t
        ));
    };
    push("base", &cert.plus);
    push("base", &cert.minus);
    if let Some((a, b)) = &cert.refined {
        push("refined", a);
        push("refined", b);
    }
    out
}

fn verdict_text(cert: &Certificate) -> String {
    let consts: Vec<String> = cert.constants.iter().map(|(k, v)| format!("{k}={}", num(*v))).collect();
    format!(
        "{}/{} margins {:.2e}/{:.2e} [{}]",
        cert.plus.verdict,
        cert.minus.verdict,
        cert.plus.margin(),
        cert.minus.margin(),
        consts.join(" ")
    )
}

fn pair_criterion(name: &str, cert: &Certificate, tol: f64) -> Criterion {
    let fine = cert.refined.as_ref().is_some_and(|(a, b)| a.passed() && b.passed());
    Criterion::holds(name, cert.passed() && fine, verdict_text(cert), "Super/Sub on grid and refinement", Some(tol))
}

fn e4(p: &Config, run: &mut Run) {
    let s = &p.e4;
    let names = criterion_names(ExperimentId::E4);
    let (hr, kpp) = match (
        front(&ReactionSpec::hadeler_rothe(4.0), None, &p.profile),
        front(&ReactionSpec::kpp(), Some(s.wang_speed), &p.profile),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            run.criteria.extend(names.iter().map(|n| Criterion::errored(n, &e)));
            return;
        }
    };
    let (f, pr) = (&hr.reaction, &hr.profile);
    let c = pr.c();
    let grid = ResidualGrid::line((s.domain.0, s.domain.1, s.nz as usize), (0.0, s.t_hi, s.nt as usize));
    let search = RotheSearch::standard(c);
    let tol = s.analytic_tol;
    let mut certs: Vec<(&str, Certificate)> = Vec::new();
    let mut stable: Vec<(&str, bool)> = Vec::new();

    run.stage(&[names[0]], |_| {
        let q0 = s.q0_ladder[0];
        let side = search_rothe_side(f, pr, Sign::Super, q0, 0.0, 0.0, &grid, &search, tol)?;
        stable.push(("rothe_super", refinement_stable(&side.report, &side.refined)));
        let measured = format!(
            "{} on grid, {} refined, margin {:.2e} [q0={q0} beta={} C={}]",
            side.report.verdict,
            side.refined.verdict,
            side.report.margin(),
            side.beta,
            side.shift
        );
        let pass = side.report.passed() && side.refined.passed();
        Ok(vec![Criterion::holds(names[0], pass, measured, "Super on grid and refinement", Some(tol))])
    });
    run.stage(&[names[1]], |_| {
        let cert = admissible_rothe_pair(f, pr, &s.q0_ladder, 0.0, 0.0, &grid, &search, tol)?;
        let crit = pair_criterion(names[1], &cert, tol);
        certs.push(("rothe", cert));
        Ok(vec![crit])
    });
    run.stage(&[names[2]], |_| {
        let cert = check_wang_pair(&kpp.reaction, &kpp.profile, s.wang_epsilon, &grid, &WangSearch::standard(), tol)?;
        let crit = pair_criterion(names[2], &cert, tol);
        certs.push(("wang", cert));
        Ok(vec![crit])
    });
    let zspec = (s.domain.0, s.domain.1, s.nz as usize);
    run.stage(&[names[3], names[4]], |run| {
        let b = exponential_bound(f, pr)?;
        run.note(format!(
            "exponential pair: k = {:.6}, sup|f'| = {:.4}, a = {:.4}; undersized a = {:.4} (half the tail threshold {:.4})",
            b.k,
            b.fprime_sup,
            b.a_sufficient,
            0.5 * b.a_tail_threshold,
            b.a_tail_threshold
        ));
        let ok = check_exponential_pair(f, pr, 0.0, b.a_sufficient, zspec, s.nt as usize, tol)?;
        let bad = check_exponential_pair(f, pr, 0.0, 0.5 * b.a_tail_threshold, zspec, s.nt as usize, tol)?;
        let crit = pair_criterion(names[3], &ok, tol);
        certs.push(("exponential", ok));
        let violated = !(bad.plus.passed() && bad.minus.passed());
        let neg = Criterion::holds(names[4], violated, verdict_text(&bad), "sign violation", Some(tol));
        certs.push(("exponential_undersized", bad));
        Ok(vec![crit, neg])
    });
    let xgrid = ResidualGrid {
        x: Some((s.lx, s.nx as usize)),
        ..grid
    };
    let main = MainSearch::standard(c, s.main_epsilon);
    run.stage(&[names[5]], |_| {
        let h = s.v0_height;
        let cert = search_main_pair(f, pr, &move |_| h, &xgrid, &main, s.main_tol)?;
        let crit = pair_criterion(names[5], &cert, s.main_tol);
        certs.push(("main_flat", cert));
        Ok(vec![crit])
    });
    run.stage(&[names[6]], |run| {
        let (a, lx) = (s.corrugation, s.lx);
        let cert = search_main_pair(f, pr, &move |x| a * (TAU * x / lx).cos(), &xgrid, &main, s.main_tol)?;
        if let Some(sp) = cert.plus.split {
            run.note(format!(
                "main pair split (eta inferred as (z - V)/sqrt(1 + V_x^2)): sup|I| = {:.2e}, J in [{:.2e}, {:.2e}]",
                sp.sup_abs_i, sp.min_j, sp.max_j
            ));
        }
        let crit = pair_criterion(names[6], &cert, s.main_tol);
        certs.push(("main_corrugated", cert));
        Ok(vec![crit])
    });
    for (name, cert) in &certs {
        if *name != "exponential_undersized" {
            stable.push((name, cert.refinement_stable()));
        }
    }
    run.stage(&[names[7]], |_| {
        let expected = 6;
        let good = stable.iter().filter(|s| s.1).count();
        let unstable: Vec<&str> = stable.iter().filter(|s| !s.1).map(|s| s.0).collect();
        let measured = if unstable.is_empty() {
            format!("{good}/{expected}")
        } else {
            format!("{good}/{expected} (unstable: {})", unstable.join(" "))
        };
        Ok(vec![Criterion::holds(names[7], good == expected && stable.len() == expected, measured, "all certificates", None)])
    });
    run.stage(&[names[8]], |run| {
        let cert = certs
            .iter()
            .find(|c| c.0 == "rothe")
            .map(|c| &c.1)
            .ok_or_else(|| anyhow!("no certified shifted-profile pair"))?;
        let get = |k: &str| cert.constant(k).ok_or_else(|| anyhow!("missing {k}"));
        let (q0, beta, shift) = (get("q0")?, get("beta+")?, get("C+")?);
        let w = RotheCandidate {
            profile: pr.with_tails(s.domain.0 - shift - 5.0, s.domain.1 + 5.0),
            psi: CutoffPsi::new(-c / 2.0)?,
            q0,
            z1: 0.0,
            z2: 0.0,
            beta,
            shift,
            sign: Sign::Super,
        };
        let g1 = Grid1D::with_spacing(s.domain.0, s.domain.1, s.corroboration_dz)?;
        let excess = supersolution_excess(&w, f, c, g1, default_dt(s.corroboration_dz), &s.corroboration_times)?;
        let worst = excess.iter().fold(0.0f64, |m, e| m.max(e.1));
        run.note(format!("corroboration: solver started at w+ (q0 = {q0}) stays below it, max excess {worst:.2e}"));
        Ok(vec![Criterion::at_most(names[8], worst, 1e-4)])
    });
    let rows: Vec<String> = certs.iter().flat_map(|(n, c)| residual_rows(n, c)).collect();
    let consts: Vec<String> = certs
        .iter()
        .flat_map(|(n, c)| c.constants.iter().map(move |(k, v)| format!("{n},{k},{v}")))
        .collect();
    let written = run
        .csv(
            "certificates.csv",
            "family,sign,grid,verdict,min_l,max_l,min_scaled,max_scaled,critical_x,critical_z,critical_t",
            rows,
        )
        .and_then(|_| run.csv("constants.csv", "family,constant,value", consts));
    if let Err(e) = written {
        run.note(format!("certificate CSVs not written: {e:#}"));
    }
}

fn e5(p: &Config, run: &mut Run) {
    let fd = &p.frontdyn;
    let names = criterion_names(ExperimentId::E5);
    let c = match drift_speed(&fd.reaction, fd.speed, &p.profile) {
        Ok(c) => c,
        Err(e) => {
            run.criteria.extend(names.iter().map(|n| Criterion::errored(n, &e)));
            return;
        }
    };
    run.stage(&names[..3], |run| {
        let nx = fd.nx as usize;
        let dt = fd.cfl * max_graph_dt(fd.lx / nx as f64);
        let mut gaps = Vec::new();
        let mut rows = Vec::new();
        for a in [0.4, 0.2, 0.1, 0.05] {
            let cmp = compare_u_v(&FourierGraph::single(fd.lx, fd.mode as usize, a), nx, c, fd.horizon, dt, fd.samples as usize)?;
            rows.extend(cmp.series.iter().map(|(t, g)| row(&[a, *t, *g])));
            gaps.push(cmp.max_gap);
        }
        run.note(format!(
            "U/V gaps for A = 0.4, 0.2, 0.1, 0.05: {:.3e}, {:.3e}, {:.3e}, {:.3e}",
            gaps[0], gaps[1], gaps[2], gaps[3]
        ));
        run.csv("uv_gaps.csv", "amplitude,t,gap", rows)?;
        Ok(vec![
            Criterion::at_most(names[0], gaps[3], 0.01),
            Criterion::at_most(names[1], gaps[1] / gaps[0], 0.5),
            Criterion::at_most(names[2], gaps[2] / gaps[1], 0.5),
        ])
    });
    let s = &p.e5;
    run.stage(&names[3..], |run| {
        let (l, a, w) = (s.kink_period, s.kink_amplitude, s.kink_width);
        let nx = s.kink_nx as usize;
        let mut v = Graph::periodic(GraphKind::Semilinear { with_drift: false }, c, l, nx, |x| {
            a * (((x - l / 4.0) / w).tanh() - ((x - 3.0 * l / 4.0) / w).tanh())
        });
        let dt = fd.cfl * max_graph_dt(v.dx);
        let times = log_spaced(s.decay_window.0, s.decay_window.1, s.decay_samples as usize);
        let series = derivative_series(&mut v, &times, dt)?;
        run.csv(
            "decay.csv",
            "t,v_x,v_xx,v_xxx,v_xt",
            times.iter().zip(&series).map(|(t, d)| row(&[*t, d[0], d[1], d[2], d[3]])),
        )?;
        let slope = |k: usize| decay_rate_fit(&times, &series.iter().map(|d| d[k]).collect::<Vec<_>>());
        Ok(vec![
            Criterion::within(names[3], slope(0)?, -0.5, 0.15),
            Criterion::within(names[4], slope(1)?, -1.0, 0.2),
            Criterion::within(names[5], slope(2)?, -1.5, 0.3),
            Criterion::within(names[6], slope(3)?, -1.5, 0.3),
        ])
    });
}

fn write_2d(run: &mut Run, r: &Sim2dRun) -> Result<()> {
    let mut ls_rows = Vec::new();
    for d in &r.diagnostics {
        if let Some(ls) = &d.level_set {
            ls_rows.extend(ls.x.iter().zip(&ls.gamma).map(|(x, g)| row(&[d.t, *x, *g])));
        }
    }
    run.csv("levelset.csv", "t,x,gamma", ls_rows)?;
    run.csv(
        "diagnostics.csv",
        "t,residual,min_minus_uz,sup_ux,sup_uxx,sup_gx,sup_gxx",
        r.diagnostics.iter().map(|d| {
            let (gx, gxx) = d.gamma_derivatives.map_or((f64::NAN, f64::NAN), |g| (g.sup_gx, g.sup_gxx));
            row(&[d.t, d.residual, d.min_minus_uz, d.sup_ux, d.sup_uxx, gx, gxx])
        }),
    )?;
    run.note(format!(
        "2D run: frame c_h = {:.6} (c* = {:.6}), dt = {:.3e}, level {:.4}, band margin {:.4}",
        r.c_frame,
        r.front.profile.c(),
        r.dt,
        r.level,
        r.band_margin
    ));
    Ok(())
}

fn e6(p: &Config, run: &mut Run) {
    let names = criterion_names(ExperimentId::E6);
    run.stage(names, |run| {
        let r = run_sim2d(&p.sim2d, &p.profile)?;
        write_2d(run, &r)?;
        let gd = |t: f64| {
            r.at(t)?
                .gamma_derivatives
                .ok_or_else(|| anyhow!("no level set at t = {t}"))
        };
        let (g10, g200) = (gd(10.0)?, gd(200.0)?);
        let band = r
            .diagnostics
            .iter()
            .filter(|d| d.t >= T_BURN)
            .map(|d| d.min_minus_uz)
            // an empty band is reported as NaN and fails
            .fold(f64::INFINITY, |m, v| if m.is_nan() || v.is_nan() { f64::NAN } else { m.min(v) });
        let corridor = r
            .diagnostics
            .iter()
            .fold(0.0f64, |m, d| m.max(corridor_excursion(d.corridor)));
        Ok(vec![
            Criterion::at_most(names[0], r.at(100.0)?.residual, 0.02),
            Criterion::at_least(names[1], g10.sup_gx / g200.sup_gx, 5.0),
            Criterion::at_least(names[2], g10.sup_gxx / g200.sup_gxx, 5.0),
            Criterion::above(names[3], band, 0.0),
            Criterion::at_most(names[4], corridor, CORRIDOR_TOL),
        ])
    });
}

fn e7(p: &Config, run: &mut Run) {
    let names = criterion_names(ExperimentId::E7);
    run.stage(names, |run| {
        let r = run_sim2d(&p.sim2d, &p.profile)?;
        write_2d(run, &r)?;
        let levels = r.level_sets()?;
        let dt = p.sim2d.graph_cfl * max_graph_dt(p.sim2d.lx / p.sim2d.nx as f64);
        let c = r.front.profile.c();
        let g20 = gamma_vs_v(&levels, 20.0, c, dt)?;
        let g40 = gamma_vs_v(&levels, 40.0, c, dt)?;
        run.csv(
            "gamma_vs_v.csv",
            "tau,t,gap",
            [&g20, &g40]
                .into_iter()
                .flat_map(|g| g.series.iter().map(move |(t, gap)| row(&[g.tau, *t, *gap]))),
        )?;
        Ok(vec![
            Criterion::at_most(names[0], g20.max_gap, 0.1),
            Criterion::at_most(names[1], g40.max_gap, g20.max_gap),
        ])
    });
}
