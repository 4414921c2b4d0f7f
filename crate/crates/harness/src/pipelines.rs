//! Runs shared by the subcommands and the experiments. Each is a straight
//! sequence of library calls driven by one configuration section.

use crate::config::*;
use anyhow::{anyhow, bail, Context, Result};
use frontlab_core::comparison::*;
use frontlab_core::front_dynamics::{compare_u_v, max_graph_dt, advance_graph, FourierGraph, GraphKind, UvComparison};
use frontlab_core::pde1d::*;
use frontlab_core::pde2d::*;
use frontlab_core::profile::*;
use frontlab_core::{Certificate, Field1, Graph, Profile, Reaction};
use std::f64::consts::TAU;

pub fn profile_options(s: &ProfileSection) -> ProfileOptions<f64> {
    ProfileOptions {
        dz: s.dz,
        rtol: s.rtol,
        ..ProfileOptions::default()
    }
}

/// A front of `f` with how its speed was obtained.
#[derive(Debug, Clone)]
pub struct Front {
    pub reaction: Reaction,
    pub min_speed: MinSpeed<f64>,
    pub profile: Profile,
}

/// Bisects for the minimal speed and shoots the profile at the upper
/// bracket end (or at `speed` when given).
pub fn front(spec: &ReactionSpec, speed: Option<f64>, s: &ProfileSection) -> Result<Front> {
    let f = spec.build()?;
    let opts = profile_options(s);
    let ms = find_min_speed(&f, s.bisection_tol, &opts).with_context(|| format!("minimal speed of {}", spec.label()))?;
    let c = speed.unwrap_or(ms.hi);
    let profile = solve_profile(&f, c, &opts).with_context(|| format!("profile of {} at c = {c}", spec.label()))?;
    Ok(Front {
        reaction: f,
        min_speed: ms,
        profile,
    })
}

pub fn classify(fr: &Front) -> Result<FrontClass> {
    classify_front(&fr.reaction, fr.min_speed.c_star, &fr.profile, DEFAULT_PUSHED_MARGIN).context("classification")
}

fn frame_speed(frame: FrameKind, speed: Option<f64>, fr: &Front, grid: Grid1D<f64>, dt: f64, horizon: f64) -> Result<f64> {
    Ok(match frame {
        FrameKind::Calibrated => {
            calibrate_frame_speed(&fr.reaction, &fr.profile, grid, dt, horizon)
                .context("frame calibration")?
                .c_discrete
        }
        FrameKind::Continuous => fr.profile.c(),
        FrameKind::Fixed => speed.ok_or_else(|| anyhow!("frame = \"fixed\" needs a speed"))?,
    })
}

#[derive(Debug, Clone)]
pub struct Sim1dRun {
    pub front: Front,
    pub c_frame: f64,
    pub trace: FrontTrace<f64>,
    pub final_state: Field1,
}

pub fn run_sim1d(s: &Sim1dSection, ps: &ProfileSection) -> Result<Sim1dRun> {
    let fr = front(&s.reaction, None, ps)?;
    let grid = Grid1D::with_spacing(s.domain.0, s.domain.1, s.dz)?;
    let dt = s.cfl * max_stable_dt(s.dz);
    let c_frame = frame_speed(s.frame, s.speed, &fr, grid, dt, s.calibration_horizon)?;
    let init = match s.initial {
        InitialKind::Step => InitialData::Step { at: s.step_at },
        InitialKind::ExpTail => InitialData::ExpTail {
            k: s.tail_k,
            lambda: fr.profile.exponents().lambda_minus,
        },
        InitialKind::Profile => InitialData::ShiftedProfile { shift: s.shift },
    };
    let mut u = init.build(grid, Boundary::Dirichlet, Some(&fr.profile))?;
    let policy = if s.widen_tail { TailPolicy::Widen } else { TailPolicy::Fail };
    let times = uniform_times(s.horizon, s.samples as usize);
    let trace = run_front_convergence(&mut u, &fr.reaction, c_frame, dt, &times, s.level, policy)?;
    Ok(Sim1dRun {
        front: fr,
        c_frame,
        trace,
        final_state: u,
    })
}

#[derive(Debug, Clone)]
pub struct Sim2dRun {
    pub front: Front,
    pub c_frame: f64,
    pub dt: f64,
    pub level: f64,
    pub band_margin: f64,
    pub diagnostics: Vec<Diagnostics2D<f64>>,
}

impl Sim2dRun {
    pub fn at(&self, t: f64) -> Result<&Diagnostics2D<f64>> {
        self.diagnostics
            .iter()
            .find(|d| (d.t - t).abs() <= 1e-9 * t.max(1.0))
            .ok_or_else(|| anyhow!("no 2D sample at t = {t}"))
    }

    pub fn level_sets(&self) -> Result<Vec<LevelSet<f64>>> {
        self.diagnostics
            .iter()
            .map(|d| d.level_set.clone().ok_or_else(|| anyhow!("no level set at t = {}", d.t)))
            .collect()
    }
}

/// `0.5` and every integer up to `horizon`.
pub fn sim2d_times(horizon: f64) -> Vec<f64> {
    let mut t = vec![0.5];
    t.extend((1..=horizon as usize).map(|k| k as f64));
    t
}

pub fn run_sim2d(s: &Sim2dSection, ps: &ProfileSection) -> Result<Sim2dRun> {
    let fr = front(&s.reaction, None, ps)?;
    let zgrid = Grid1D::with_spacing(s.domain.0, s.domain.1, s.dz)?;
    let grid = Grid2D::new(s.lx, s.nx as usize, zgrid)?;
    let dt = s.cfl * max_stable_dt2d(grid.dx(), s.dz);
    let c_frame = frame_speed(s.frame, s.speed, &fr, zgrid, dt, s.calibration_horizon)?;
    let pad = s.amplitude.abs() + 1.0;
    let wide = fr.profile.with_tails(s.domain.0 - pad, s.domain.1 + pad);
    let k = TAU * s.mode as f64 / s.lx;
    let mut u = Field2D::from_fn(grid, Boundary::Dirichlet, |x, z| wide.value(z - s.amplitude * (k * x).cos()).unwrap_or(f64::NAN));
    if u.values.iter().any(|v| v.is_nan()) {
        bail!("initial data outside the profile range");
    }
    let level = fr.profile.value(0.0)?;
    let band_margin = s.band_margin.unwrap_or(level.min(1.0 - level) * (1.0 - 1e-3));
    let opts = Run2dOptions {
        level,
        band_margin,
        derivative_window: s.derivative_window,
    };
    let diagnostics = run_2d(&mut u, &fr.reaction, c_frame, dt, &sim2d_times(s.horizon), &fr.profile, &opts)?;
    Ok(Sim2dRun {
        front: fr,
        c_frame,
        dt,
        level,
        band_margin,
        diagnostics,
    })
}

#[derive(Debug, Clone)]
pub struct FrontdynRun {
    pub c: f64,
    pub graph: Vec<(f64, Vec<f64>)>,
    pub x: Vec<f64>,
    pub comparison: UvComparison<f64>,
}

pub fn drift_speed(spec: &ReactionSpec, speed: Option<f64>, ps: &ProfileSection) -> Result<f64> {
    match speed {
        Some(c) => Ok(c),
        None => {
            let f = spec.build()?;
            Ok(find_min_speed(&f, ps.bisection_tol, &profile_options(ps))?.c_star)
        }
    }
}

pub fn run_frontdyn(s: &FrontdynSection, ps: &ProfileSection) -> Result<FrontdynRun> {
    let c = drift_speed(&s.reaction, s.speed, ps)?;
    let phi = FourierGraph::single(s.lx, s.mode as usize, s.amplitude);
    let nx = s.nx as usize;
    let dt = s.cfl * max_graph_dt(s.lx / nx as f64);
    let comparison = compare_u_v(&phi, nx, c, s.horizon, dt, s.samples as usize)?;
    let kind = match s.kind {
        GraphKindCfg::Mcf => GraphKind::Mcf,
        GraphKindCfg::Semilinear => GraphKind::Semilinear { with_drift: true },
    };
    let mut w = Graph::periodic(kind, c, s.lx, nx, |x| phi.eval(x));
    let mut graph = vec![(0.0, w.values.clone())];
    for t in uniform_times(s.horizon, s.samples as usize) {
        let span = t - w.time;
        advance_graph(&mut w, span, dt)?;
        graph.push((w.time, w.values.clone()));
    }
    Ok(FrontdynRun {
        c,
        x: w.x_nodes(),
        graph,
        comparison,
    })
}

/// A checked pair and the candidates it was computed for.
pub struct ComparisonRun {
    pub front: Front,
    pub grid: ResidualGrid<f64>,
    pub certificate: Certificate,
    pub plus: Box<dyn Candidate<f64>>,
    pub minus: Box<dyn Candidate<f64>>,
    pub notes: Vec<String>,
}

fn constant(cert: &Certificate, name: &str) -> Result<f64> {
    cert.constant(name).ok_or_else(|| anyhow!("certificate lacks constant {name}"))
}

pub fn run_comparison(s: &ComparisonSection, ps: &ProfileSection) -> Result<ComparisonRun> {
    let fr = front(&s.reaction, s.speed, ps)?;
    let (f, p) = (&fr.reaction, &fr.profile);
    let c = p.c();
    let x = matches!(s.candidate, CandidateKind::Main).then_some((s.lx, s.nx as usize));
    let grid = ResidualGrid {
        x,
        z: (s.domain.0, s.domain.1, s.nz as usize),
        t: (0.0, s.t_hi, s.nt as usize),
    };
    let default_tol = if x.is_some() { MAIN_PAIR_TOL } else { ANALYTIC_TOL };
    let tol = s.tol.unwrap_or(default_tol);
    let mut notes = Vec::new();
    let lambda1 = -c / 2.0;
    let (certificate, plus, minus): (Certificate, Box<dyn Candidate<f64>>, Box<dyn Candidate<f64>>) = match s.candidate {
        CandidateKind::Rothe => {
            let search = RotheSearch::standard(c);
            let cert = if s.search {
                check_rothe_pair(f, p, s.q0, s.z1, s.z2, &grid, &search, tol)?
            } else {
                let w = rothe(p, &grid, s.q0, s.z1, s.z2, lambda1, (s.beta, s.shift), (s.beta, s.shift))?;
                certify_pair(&w.0, &w.1, f, c, &grid, tol, rothe_constants(s.q0, (s.beta, s.shift), (s.beta, s.shift), lambda1))?
            };
            let plus_bc = (constant(&cert, "beta+")?, constant(&cert, "C+")?);
            let minus_bc = (constant(&cert, "beta-")?, constant(&cert, "C-")?);
            let (a, b) = rothe(p, &grid, s.q0, s.z1, s.z2, lambda1, plus_bc, minus_bc)?;
            (cert, Box::new(a), Box::new(b))
        }
        CandidateKind::Wang => {
            let cert = if s.search {
                check_wang_pair(f, p, s.epsilon, &grid, &WangSearch::standard(), tol)?
            } else {
                let (a, b) = wang(p, &grid, s.epsilon, s.sigma, s.beta);
                certify_pair(&a, &b, f, c, &grid, tol, vec![("sigma", s.sigma), ("beta", s.beta), ("epsilon", s.epsilon)])?
            };
            let (a, b) = wang(p, &grid, s.epsilon, constant(&cert, "sigma")?, constant(&cert, "beta")?);
            (cert, Box::new(a), Box::new(b))
        }
        CandidateKind::Exponential => {
            let a = match s.a {
                Some(a) => a,
                None => {
                    let b = exponential_bound(f, p)?;
                    notes.push(format!("k = {}, sup|f'| = {}, sufficient a = {}", b.k, b.fprime_sup, b.a_sufficient));
                    b.a_sufficient
                }
            };
            let cert = check_exponential_pair(f, p, s.z0, a, grid.z, grid.t.2, tol)?;
            let wide = p.with_tails(grid.z.0 - s.z0 - p.dz(), grid.z.1 - s.z0 + p.dz());
            let make = |sign| ExponentialCandidate {
                profile: wide.clone(),
                z0: s.z0,
                a,
                sign,
            };
            let grid = cert.plus.grid;
            return Ok(ComparisonRun {
                grid,
                plus: Box::new(make(Sign::Super)),
                minus: Box::new(make(Sign::Sub)),
                certificate: cert,
                front: fr,
                notes,
            });
        }
        CandidateKind::Main => {
            let (h, amp, lx) = (s.v0_height, s.v0_amplitude, s.lx);
            let v0 = move |x: f64| h + amp * (TAU * x / lx).cos();
            let cert = if s.search {
                search_main_pair(f, p, &v0, &grid, &MainSearch::standard(c, s.epsilon), tol)?
            } else {
                let pair = build_modulation(s.epsilon, s.k, s.c0, s.c1, s.c2)?;
                check_main_pair(f, p, &v0, CutoffPsi::new(lambda1)?, pair, &grid, tol, true)?
            };
            let pair = build_modulation(
                constant(&cert, "epsilon")?,
                constant(&cert, "K")?,
                constant(&cert, "C0")?,
                constant(&cert, "C1")?,
                constant(&cert, "C2")?,
            )?;
            let (a, b) = main_candidates(p, &grid, &v0, pair, lambda1)?;
            notes.push("I/J split: eta inferred as (z - V)/sqrt(1 + V_x^2), shifted by q(t)".into());
            (cert, Box::new(a), Box::new(b))
        }
    };
    Ok(ComparisonRun {
        front: fr,
        grid,
        certificate,
        plus,
        minus,
        notes,
    })
}

fn rothe_constants(q0: f64, plus: (f64, f64), minus: (f64, f64), lambda1: f64) -> Vec<(&'static str, f64)> {
    vec![
        ("q0", q0),
        ("beta+", plus.0),
        ("C+", plus.1),
        ("beta-", minus.0),
        ("C-", minus.1),
        ("lambda1", lambda1),
    ]
}

#[allow(clippy::too_many_arguments)]
fn rothe(
    p: &Profile,
    grid: &ResidualGrid<f64>,
    q0: f64,
    z1: f64,
    z2: f64,
    lambda1: f64,
    plus: (f64, f64),
    minus: (f64, f64),
) -> Result<(RotheCandidate<f64>, RotheCandidate<f64>)> {
    let reach = plus.1.abs().max(minus.1.abs());
    let wide = p.with_tails(grid.z.0 - z1 - reach - p.dz(), grid.z.1 - z1 + reach + p.dz());
    let psi = CutoffPsi::new(lambda1)?;
    let make = |(beta, shift): (f64, f64), sign| RotheCandidate {
        profile: wide.clone(),
        psi,
        q0,
        z1,
        z2,
        beta,
        shift,
        sign,
    };
    Ok((make(plus, Sign::Super), make(minus, Sign::Sub)))
}

fn wang(p: &Profile, grid: &ResidualGrid<f64>, epsilon: f64, sigma: f64, beta: f64) -> (WangCandidate<f64>, WangCandidate<f64>) {
    let reach = sigma * epsilon;
    let wide = p.with_tails(grid.z.0 - reach - p.dz(), grid.z.1 + reach + p.dz());
    let make = |sign| WangCandidate {
        profile: wide.clone(),
        epsilon,
        sigma,
        beta,
        sign,
    };
    (make(Sign::Super), make(Sign::Sub))
}

fn main_candidates(
    p: &Profile,
    grid: &ResidualGrid<f64>,
    v0: &dyn Fn(f64) -> f64,
    pair: ModulationPair<f64>,
    lambda1: f64,
) -> Result<(MainCandidate<f64>, MainCandidate<f64>)> {
    let (lx, nx) = grid.x.ok_or_else(|| anyhow!("main pair needs an x axis"))?;
    let c = p.c();
    let values: Vec<f64> = (0..nx).map(|i| v0(grid.x_at(i))).collect();
    let slices = v_slices(&values, lx, c, &grid.t_nodes())?;
    let (vmin, vmax) = slices
        .iter()
        .flat_map(|s| s.v.iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let reach = pair.q_limit().abs() + 1.0;
    let wide = p.with_tails(grid.z.0 - vmax - reach - p.dz(), grid.z.1 - vmin + reach + p.dz());
    let psi = CutoffPsi::new(lambda1)?;
    let make = |sign| MainCandidate {
        profile: wide.clone(),
        psi,
        modulation: pair,
        slices: slices.clone(),
        sign,
        c,
    };
    Ok((make(Sign::Super), make(Sign::Sub)))
}

/// Human-readable certificate: constants, both sides, refinement.
pub fn certificate_text(cert: &Certificate) -> String {
    let mut s = String::new();
    let consts: Vec<String> = cert.constants.iter().map(|(k, v)| format!("{k} = {v}")).collect();
    s.push_str(&format!("constants: {}\n", consts.join(", ")));
    for r in [&cert.plus, &cert.minus] {
        s.push_str(&format!("  {}\n", r.summary()));
        if let Some(sp) = r.split {
            s.push_str(&format!(
                "    split: sup|I| = {:.3e}, J in [{:.3e}, {:.3e}]\n",
                sp.sup_abs_i, sp.min_j, sp.max_j
            ));
        }
    }
    match &cert.refined {
        Some((a, b)) => {
            s.push_str("refined grid:\n");
            s.push_str(&format!("  {}\n  {}\n", a.summary(), b.summary()));
            s.push_str(&format!("stable under refinement: {}\n", cert.refinement_stable()));
        }
        None => s.push_str("refined grid: not evaluated\n"),
    }
    s.push_str(&format!("pair {}\n", if cert.passed() { "certified" } else { "NOT certified" }));
    s
}
