//! TOML configuration. Every section is optional and every key has the
//! default of the standard runs; unknown keys are rejected.

use anyhow::{anyhow, bail, Context, Result};
use frontlab_core::Reaction;
use serde::{Deserialize, Serialize};
use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionSpec {
    /// `kpp`, `hadeler_rothe` or `polynomial`.
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    /// Power-series coefficients `a0, a1, ...` for `polynomial`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coefficients: Vec<f64>,
}

impl ReactionSpec {
    pub fn kpp() -> Self {
        ReactionSpec {
            name: "kpp".into(),
            nu: None,
            coefficients: Vec::new(),
        }
    }

    pub fn hadeler_rothe(nu: f64) -> Self {
        ReactionSpec {
            name: "hadeler_rothe".into(),
            nu: Some(nu),
            coefficients: Vec::new(),
        }
    }

    pub fn build(&self) -> Result<Reaction> {
        Reaction::by_name(&self.name, self.nu, &self.coefficients).map_err(|e| anyhow!("reaction `{}`: {e}", self.name))
    }

    pub fn label(&self) -> String {
        match (self.name.as_str(), self.nu) {
            ("hadeler_rothe", Some(nu)) => format!("HR({nu})"),
            ("hadeler_rothe", None) => "HR(4)".into(),
            ("kpp", _) => "KPP".into(),
            (name, _) => name.into(),
        }
    }
}

impl Default for ReactionSpec {
    fn default() -> Self {
        ReactionSpec::hadeler_rothe(4.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// Heaviside step at `step_at`.
    Step,
    /// `min(1, tail_k e^{lambda_- z})`.
    ExpTail,
    /// The profile shifted by `shift`.
    Profile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    /// Discrete front speed measured on the run's own grid.
    Calibrated,
    /// The profile speed.
    Continuous,
    /// `speed`.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKindCfg {
    Mcf,
    Semilinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CandidateKind {
    Rothe,
    Wang,
    Exponential,
    Main,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSection {
    pub reaction: ReactionSpec,
    /// Minimal speed when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    pub dz: f64,
    pub rtol: f64,
    pub bisection_tol: f64,
}

impl Default for ProfileSection {
    fn default() -> Self {
        ProfileSection {
            reaction: ReactionSpec::default(),
            speed: None,
            dz: 0.01,
            rtol: 1e-10,
            bisection_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sim1dSection {
    pub reaction: ReactionSpec,
    pub domain: (f64, f64),
    pub dz: f64,
    /// `dt = cfl * dz^2 / 2`.
    pub cfl: f64,
    pub initial: InitialKind,
    pub step_at: f64,
    pub tail_k: f64,
    pub shift: f64,
    pub frame: FrameKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    pub calibration_horizon: f64,
    pub horizon: f64,
    pub samples: i64,
    pub level: f64,
    /// Extend the domain to the right when the tail reaches the boundary.
    pub widen_tail: bool,
}

impl Default for Sim1dSection {
    fn default() -> Self {
        Sim1dSection {
            reaction: ReactionSpec::default(),
            domain: (-40.0, 60.0),
            dz: 0.1,
            cfl: 0.8,
            initial: InitialKind::ExpTail,
            step_at: 0.0,
            tail_k: 1.0,
            shift: 0.0,
            frame: FrameKind::Calibrated,
            speed: None,
            calibration_horizon: 60.0,
            horizon: 200.0,
            samples: 40,
            level: 0.5,
            widen_tail: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sim2dSection {
    pub reaction: ReactionSpec,
    pub lx: f64,
    pub nx: i64,
    pub domain: (f64, f64),
    pub dz: f64,
    /// `dt = cfl * max_stable_dt2d`.
    pub cfl: f64,
    /// Initial data `phi(z - amplitude cos(2 pi mode x / lx))`.
    pub amplitude: f64,
    pub mode: i64,
    /// Samples at `t = 0.5` and every integer up to `horizon`.
    pub horizon: f64,
    pub frame: FrameKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    pub calibration_horizon: f64,
    pub derivative_window: f64,
    /// `m (1 - 1e-3)` with `m = min(phi(0), 1 - phi(0))` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_margin: Option<f64>,
    /// Graph-flow step for the level-set comparison, `graph_cfl * dx^2 / 2`.
    pub graph_cfl: f64,
}

impl Default for Sim2dSection {
    fn default() -> Self {
        Sim2dSection {
            reaction: ReactionSpec::default(),
            lx: 20.0,
            nx: 100,
            domain: (-20.0, 25.0),
            dz: 0.1,
            cfl: 0.8,
            amplitude: 1.0,
            mode: 1,
            horizon: 200.0,
            frame: FrameKind::Calibrated,
            speed: None,
            calibration_horizon: 60.0,
            derivative_window: 10.0,
            band_margin: None,
            graph_cfl: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrontdynSection {
    /// Supplies the drift speed `c` (its minimal speed) unless `speed` is set.
    pub reaction: ReactionSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    pub lx: f64,
    pub nx: i64,
    pub amplitude: f64,
    pub mode: i64,
    pub horizon: f64,
    pub samples: i64,
    pub cfl: f64,
    /// Flow written to `graph.csv`.
    pub kind: GraphKindCfg,
}

impl Default for FrontdynSection {
    fn default() -> Self {
        FrontdynSection {
            reaction: ReactionSpec::default(),
            speed: None,
            lx: 20.0,
            nx: 128,
            amplitude: 0.05,
            mode: 1,
            horizon: 50.0,
            samples: 50,
            cfl: 0.8,
            kind: GraphKindCfg::Mcf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComparisonSection {
    pub candidate: CandidateKind,
    pub reaction: ReactionSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    /// Search the constants instead of using the ones below.
    pub search: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    pub domain: (f64, f64),
    pub nz: i64,
    pub t_hi: f64,
    pub nt: i64,
    pub lx: f64,
    pub nx: i64,
    pub q0: f64,
    pub z1: f64,
    pub z2: f64,
    pub beta: f64,
    pub shift: f64,
    pub sigma: f64,
    pub epsilon: f64,
    /// Exponential pair speed; the sufficient bound when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    pub z0: f64,
    pub k: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// `V0(x) = v0_height + v0_amplitude cos(2 pi x / lx)`.
    pub v0_height: f64,
    pub v0_amplitude: f64,
}

impl Default for ComparisonSection {
    fn default() -> Self {
        ComparisonSection {
            candidate: CandidateKind::Rothe,
            reaction: ReactionSpec::default(),
            speed: None,
            search: true,
            tol: None,
            domain: (-40.0, 40.0),
            nz: 401,
            t_hi: 50.0,
            nt: 26,
            lx: 20.0,
            nx: 20,
            q0: 0.1,
            z1: 0.0,
            z2: 0.0,
            beta: 1e-3,
            shift: 562.34,
            sigma: 3.1623,
            epsilon: 0.05,
            a: None,
            z0: 0.0,
            k: 1.0,
            c0: 1000.0,
            c1: 1e-6,
            c2: 1e-4,
            v0_height: 3.0,
            v0_amplitude: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct E3Section {
    pub kpp_domain: (f64, f64),
    pub hr_domain: (f64, f64),
    pub dz: f64,
    pub window: (f64, f64),
    pub samples: i64,
}

impl Default for E3Section {
    fn default() -> Self {
        E3Section {
            kpp_domain: (-60.0, 200.0),
            hr_domain: (-60.0, 60.0),
            dz: 0.1,
            window: (50.0, 500.0),
            samples: 160,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct E4Section {
    pub domain: (f64, f64),
    pub nz: i64,
    pub t_hi: f64,
    pub nt: i64,
    pub lx: f64,
    pub nx: i64,
    pub q0_ladder: Vec<f64>,
    pub wang_speed: f64,
    pub wang_epsilon: f64,
    pub main_epsilon: f64,
    pub v0_height: f64,
    pub corrugation: f64,
    pub analytic_tol: f64,
    pub main_tol: f64,
    pub corroboration_dz: f64,
    pub corroboration_times: Vec<f64>,
}

impl Default for E4Section {
    fn default() -> Self {
        E4Section {
            domain: (-40.0, 40.0),
            nz: 401,
            t_hi: 50.0,
            nt: 26,
            lx: 20.0,
            nx: 20,
            q0_ladder: vec![0.1, 0.03, 0.01, 0.003, 0.001],
            wang_speed: 2.5,
            wang_epsilon: 0.05,
            main_epsilon: 0.5,
            v0_height: 3.0,
            corrugation: 0.05,
            analytic_tol: 1e-8,
            main_tol: 1e-6,
            corroboration_dz: 0.05,
            corroboration_times: vec![1.0, 5.0, 20.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct E5Section {
    /// Drift-free decay run from `A (tanh((x - L/4)/w) - tanh((x - 3L/4)/w))`.
    pub kink_period: f64,
    pub kink_nx: i64,
    pub kink_amplitude: f64,
    pub kink_width: f64,
    pub decay_window: (f64, f64),
    pub decay_samples: i64,
}

impl Default for E5Section {
    fn default() -> Self {
        E5Section {
            kink_period: 200.0,
            kink_nx: 4000,
            kink_amplitude: 0.25,
            kink_width: 0.5,
            decay_window: (1.0, 100.0),
            decay_samples: 40,
        }
    }
}

/// The whole configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub profile: ProfileSection,
    pub sim1d: Sim1dSection,
    pub sim2d: Sim2dSection,
    pub frontdyn: FrontdynSection,
    pub comparison: ComparisonSection,
    pub e3: E3Section,
    pub e4: E4Section,
    pub e5: E5Section,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(text).context("parsing configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Config::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Checks every section, reporting all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut v = Checks::default();

        let p = &self.profile;
        v.reaction("profile.reaction", &p.reaction);
        if let Some(c) = p.speed {
            v.positive("profile.speed", c);
        }
        v.positive("profile.dz", p.dz);
        v.positive("profile.rtol", p.rtol);
        v.positive("profile.bisection_tol", p.bisection_tol);

        let s = &self.sim1d;
        v.reaction("sim1d.reaction", &s.reaction);
        v.nodes("sim1d", s.domain, s.dz, 64);
        v.cfl("sim1d.cfl", s.cfl);
        v.positive("sim1d.tail_k", s.tail_k);
        v.frame("sim1d", s.frame, s.speed);
        v.positive("sim1d.calibration_horizon", s.calibration_horizon);
        v.positive("sim1d.horizon", s.horizon);
        v.count("sim1d.samples", s.samples, 2);
        v.open_unit("sim1d.level", s.level);

        let s = &self.sim2d;
        v.reaction("sim2d.reaction", &s.reaction);
        v.positive("sim2d.lx", s.lx);
        v.count("sim2d.nx", s.nx, 4);
        v.nodes("sim2d", s.domain, s.dz, 64);
        v.cfl("sim2d.cfl", s.cfl);
        v.finite("sim2d.amplitude", s.amplitude);
        v.count("sim2d.mode", s.mode, 0);
        v.positive("sim2d.horizon", s.horizon);
        if s.horizon.fract() != 0.0 {
            v.fail("sim2d.horizon", format!("must be a whole number of time units, got {}", s.horizon));
        }
        v.frame("sim2d", s.frame, s.speed);
        v.positive("sim2d.calibration_horizon", s.calibration_horizon);
        v.positive("sim2d.derivative_window", s.derivative_window);
        if let Some(m) = s.band_margin {
            v.open_unit("sim2d.band_margin", m);
        }
        v.cfl("sim2d.graph_cfl", s.graph_cfl);

        let s = &self.frontdyn;
        v.reaction("frontdyn.reaction", &s.reaction);
        if let Some(c) = s.speed {
            v.positive("frontdyn.speed", c);
        }
        v.positive("frontdyn.lx", s.lx);
        v.count("frontdyn.nx", s.nx, 8);
        v.finite("frontdyn.amplitude", s.amplitude);
        v.count("frontdyn.mode", s.mode, 0);
        v.positive("frontdyn.horizon", s.horizon);
        v.count("frontdyn.samples", s.samples, 1);
        v.cfl("frontdyn.cfl", s.cfl);

        let s = &self.comparison;
        v.reaction("comparison.reaction", &s.reaction);
        if let Some(c) = s.speed {
            v.positive("comparison.speed", c);
        }
        if let Some(t) = s.tol {
            v.positive("comparison.tol", t);
        }
        v.interval("comparison.domain", s.domain);
        v.count("comparison.nz", s.nz, 3);
        v.positive("comparison.t_hi", s.t_hi);
        v.count("comparison.nt", s.nt, 2);
        v.positive("comparison.lx", s.lx);
        v.count("comparison.nx", s.nx, 4);
        v.open_unit("comparison.q0", s.q0);
        v.positive("comparison.beta", s.beta);
        v.finite("comparison.shift", s.shift);
        v.positive("comparison.sigma", s.sigma);
        v.positive("comparison.epsilon", s.epsilon);
        if let Some(a) = s.a {
            v.positive("comparison.a", a);
        }
        for (k, x) in [("z0", s.z0), ("z1", s.z1), ("z2", s.z2), ("v0_height", s.v0_height), ("v0_amplitude", s.v0_amplitude)] {
            v.finite(&format!("comparison.{k}"), x);
        }
        for (k, x) in [("k", s.k), ("c0", s.c0), ("c1", s.c1), ("c2", s.c2)] {
            v.positive(&format!("comparison.{k}"), x);
        }

        let s = &self.e3;
        v.nodes("e3.kpp", s.kpp_domain, s.dz, 64);
        v.nodes("e3.hr", s.hr_domain, s.dz, 64);
        v.interval("e3.window", s.window);
        if s.window.0 <= 0.0 {
            v.fail("e3.window", "must start after t = 0".into());
        }
        v.count("e3.samples", s.samples, 10);

        let s = &self.e4;
        v.interval("e4.domain", s.domain);
        v.count("e4.nz", s.nz, 3);
        v.positive("e4.t_hi", s.t_hi);
        v.count("e4.nt", s.nt, 2);
        v.positive("e4.lx", s.lx);
        v.count("e4.nx", s.nx, 4);
        if s.q0_ladder.is_empty() {
            v.fail("e4.q0_ladder", "must not be empty".into());
        }
        for q in &s.q0_ladder {
            v.open_unit("e4.q0_ladder", *q);
        }
        v.positive("e4.wang_speed", s.wang_speed);
        v.positive("e4.wang_epsilon", s.wang_epsilon);
        v.positive("e4.main_epsilon", s.main_epsilon);
        v.finite("e4.v0_height", s.v0_height);
        v.finite("e4.corrugation", s.corrugation);
        v.positive("e4.analytic_tol", s.analytic_tol);
        v.positive("e4.main_tol", s.main_tol);
        v.nodes("e4.corroboration", s.domain, s.corroboration_dz, 64);
        if s.corroboration_times.iter().any(|t| !(*t > 0.0)) || s.corroboration_times.windows(2).any(|w| w[1] <= w[0]) {
            v.fail("e4.corroboration_times", "must be positive and increasing".into());
        }

        let s = &self.e5;
        v.positive("e5.kink_period", s.kink_period);
        v.count("e5.kink_nx", s.kink_nx, 8);
        v.finite("e5.kink_amplitude", s.kink_amplitude);
        v.positive("e5.kink_width", s.kink_width);
        v.interval("e5.decay_window", s.decay_window);
        if s.decay_window.0 <= 0.0 {
            v.fail("e5.decay_window", "must start after t = 0".into());
        }
        v.count("e5.decay_samples", s.decay_samples, 3);

        v.finish()
    }
}

#[derive(Default)]
struct Checks(Vec<String>);

impl Checks {
    fn fail(&mut self, key: &str, msg: String) {
        self.0.push(format!("{key}: {msg}"));
    }

    fn finite(&mut self, key: &str, v: f64) {
        if !v.is_finite() {
            self.fail(key, format!("must be finite, got {v}"));
        }
    }

    fn positive(&mut self, key: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.fail(key, format!("must be positive, got {v}"));
        }
    }

    fn open_unit(&mut self, key: &str, v: f64) {
        if !(v > 0.0 && v < 1.0) {
            self.fail(key, format!("must lie in (0, 1), got {v}"));
        }
    }

    fn cfl(&mut self, key: &str, v: f64) {
        if !(v > 0.0 && v <= 1.0) {
            self.fail(key, format!("must lie in (0, 1], got {v}"));
        }
    }

    fn count(&mut self, key: &str, v: i64, min: i64) {
        if v < min {
            self.fail(key, format!("must be at least {min}, got {v}"));
        }
    }

    fn interval(&mut self, key: &str, (a, b): (f64, f64)) {
        if !(a.is_finite() && b.is_finite() && a < b) {
            self.fail(key, format!("needs lo < hi, got [{a}, {b}]"));
        }
    }

    fn nodes(&mut self, key: &str, domain: (f64, f64), dz: f64, min: usize) {
        self.interval(&format!("{key}.domain"), domain);
        self.positive(&format!("{key}.dz"), dz);
        if domain.1 > domain.0 && dz > 0.0 {
            let n = ((domain.1 - domain.0) / dz).round() + 1.0;
            if n < min as f64 {
                self.fail(&format!("{key}.dz"), format!("gives nz = {n}, below {min}"));
            }
        }
    }

    fn frame(&mut self, key: &str, frame: FrameKind, speed: Option<f64>) {
        match (frame, speed) {
            (FrameKind::Fixed, None) => self.fail(&format!("{key}.speed"), "required by frame = \"fixed\"".into()),
            (_, Some(c)) => self.finite(&format!("{key}.speed"), c),
            _ => {}
        }
    }

    fn reaction(&mut self, key: &str, r: &ReactionSpec) {
        if let Err(e) = r.build() {
            self.fail(key, e.to_string());
        }
    }

    fn finish(self) -> Result<()> {
        if self.0.is_empty() {
            Ok(())
        } else {
            bail!("invalid configuration:\n  {}", self.0.join("\n  "))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentId {
    E1,
    E2,
    E3,
    E4,
    E5,
    E6,
    E7,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 7] = [
        ExperimentId::E1,
        ExperimentId::E2,
        ExperimentId::E3,
        ExperimentId::E4,
        ExperimentId::E5,
        ExperimentId::E6,
        ExperimentId::E7,
    ];
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E{}", *self as u8 + 1)
    }
}

impl FromStr for ExperimentId {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| anyhow!("unknown experiment `{s}` (expected E1..E7)"))
    }
}

/// A validated request to run one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub id: ExperimentId,
    pub params: Config,
    pub out_dir: PathBuf,
    /// Recorded in the report; no experiment consults a random generator.
    pub seedless: bool,
}

impl ExperimentConfig {
    pub fn new(id: ExperimentId, params: Config, out_dir: impl Into<PathBuf>) -> Result<Self> {
        params.validate()?;
        if matches!(id, ExperimentId::E6 | ExperimentId::E7) && params.sim2d.horizon < 200.0 {
            bail!("invalid configuration:\n  sim2d.horizon: {id} samples up to t = 200, got {}", params.sim2d.horizon);
        }
        Ok(ExperimentConfig {
            id,
            params,
            out_dir: out_dir.into(),
            seedless: false,
        })
    }

    /// Hash of the experiment id and the effective configuration.
    pub fn config_hash(&self) -> String {
        let mut h = DefaultHasher::new();
        self.id.to_string().hash(&mut h);
        self.params.to_toml().hash(&mut h);
        format!("{:016x}", h.finish())
    }
}
