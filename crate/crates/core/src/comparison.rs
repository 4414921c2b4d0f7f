//! Explicit super- and subsolutions of the moving-frame operator
//!
//! `L[w] = w_t - w_xx - w_zz - c w_z - f(w)`
//!
//! and their certification by evaluating `L` on grids. A candidate supplies
//! its value and derivatives in closed form (profile derivatives come from
//! the stored `(phi, phi')` and the profile equation), so the only
//! discretization is the grid the sign is checked on.
//!
//! A grid point passes when `L >= -tol * M` (supersolution) or
//! `L <= tol * M` (subsolution), where `M` is the sum of the magnitudes of
//! the terms of `L` at that point. The test is relative so that candidates
//! whose perturbation is tiny cannot pass on an absolute slack.

use rayon::prelude::*;
use thiserror::Error;

use crate::front_dynamics::{advance_graph, max_graph_dt, GraphError, GraphField, GraphKind};
use crate::pde1d::{step_with, Boundary, Field1D, Grid1D, SolverError};
use crate::profile::{FrontProfile, ProfileError, ProfilePoint};
use crate::reaction::{kpp_bound_constant, ReactionTerm};
use crate::scalar::{lit, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComparisonError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("q(inf) = {q_inf} exceeds epsilon = {epsilon}")]
    EpsilonBudget { q_inf: f64, epsilon: f64 },
    #[error("invalid constants: {0}")]
    InvalidConstants(String),
    #[error("{candidate}: no constants in the search set achieve the sign; worst scaled violation {worst:e}")]
    SearchExhausted { candidate: String, worst: f64 },
    #[error("reaction term violates 0 < f'(0)u - f(u) < M u^(1+alpha) on the samples")]
    NotKppType,
    #[error("stored profile tail ends at phi = {0:e}; need phi < 1e-6 to bound phi'/phi")]
    TailTooShort(f64),
}

/// Sign a candidate is meant to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    /// `L[w] >= 0`.
    Super,
    /// `L[w] <= 0`.
    Sub,
}

impl Sign {
    fn factor<T: Real>(self) -> T {
        match self {
            Sign::Super => T::one(),
            Sign::Sub => -T::one(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Sign::Super => "super",
            Sign::Sub => "sub",
        }
    }
}

/// `psi(s) = chi(e^{lambda1 s})`, where `chi(y) = y` for `y <= 1/2`,
/// `chi(y) = 1` for `y >= 1`, and on `[1/2, 1]` the quintic matching value,
/// slope and curvature of both outer branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffPsi<T> {
    pub lambda1: T,
}

/// `psi` and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiValue<T> {
    pub psi: T,
    pub dpsi: T,
    pub d2psi: T,
}

impl<T: Real> CutoffPsi<T> {
    pub fn new(lambda1: T) -> Result<Self, ComparisonError> {
        if lambda1 == T::zero() || !lambda1.is_finite() {
            return Err(ComparisonError::InvalidConstants(format!("lambda1 = {lambda1}")));
        }
        Ok(CutoffPsi { lambda1 })
    }

    /// `(chi, chi', chi'')` at `y >= 0`.
    pub fn chi(y: T) -> (T, T, T) {
        let half = lit::<T>(0.5);
        if y <= half {
            (y, T::one(), T::zero())
        } else if y >= T::one() {
            (T::one(), T::zero(), T::zero())
        } else {
            // y = 1/2 + s/2, h(s) = 1/2 + s/2 + 2 s^3 - 7/2 s^4 + 3/2 s^5
            let s = (y - half) / half;
            let (s2, s3) = (s * s, s * s * s);
            let h = half + half * s + lit::<T>(2.0) * s3 - lit::<T>(3.5) * s3 * s + lit::<T>(1.5) * s3 * s2;
            let dh = half + lit::<T>(6.0) * s2 - lit::<T>(14.0) * s3 + lit::<T>(7.5) * s2 * s2;
            let d2h = lit::<T>(12.0) * s - lit::<T>(42.0) * s2 + lit::<T>(30.0) * s3;
            // ds/dy = 2
            let two = lit::<T>(2.0);
            (h.max(T::zero()).min(T::one()), dh * two, d2h * two * two)
        }
    }

    pub fn eval(&self, s: T) -> PsiValue<T> {
        let l = self.lambda1;
        let y = (l * s).exp();
        let (c0, c1, c2) = Self::chi(y);
        PsiValue {
            psi: c0,
            dpsi: c1 * l * y,
            d2psi: c2 * l * l * y * y + c1 * l * l * y,
        }
    }
}

/// `p(t) = (2/K) C1 C2 / (C2 + C1 t^2)` and `q(t) = C0 int_0^t p`, in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationPair<T> {
    pub epsilon: T,
    pub k: T,
    pub c0: T,
    pub c1: T,
    pub c2: T,
}

impl<T: Real> ModulationPair<T> {
    /// `p = q = 0`.
    pub fn zero() -> Self {
        ModulationPair {
            epsilon: T::zero(),
            k: T::one(),
            c0: T::zero(),
            c1: T::zero(),
            c2: T::one(),
        }
    }

    pub fn p(&self, t: T) -> T {
        lit::<T>(2.0) / self.k * self.c1 * self.c2 / (self.c2 + self.c1 * t * t)
    }

    pub fn dp(&self, t: T) -> T {
        let den = self.c2 + self.c1 * t * t;
        -lit::<T>(4.0) / self.k * self.c1 * self.c1 * self.c2 * t / (den * den)
    }

    pub fn q(&self, t: T) -> T {
        if self.c1 == T::zero() {
            return T::zero();
        }
        let r = (self.c1 * self.c2).sqrt();
        lit::<T>(2.0) * self.c0 / self.k * r * (t * (self.c1 / self.c2).sqrt()).atan()
    }

    pub fn dq(&self, t: T) -> T {
        self.c0 * self.p(t)
    }

    /// `P(t) = min(C2 t^{-2}, C1)`.
    pub fn envelope(&self, t: T) -> T {
        if t == T::zero() {
            self.c1
        } else {
            (self.c2 / (t * t)).min(self.c1)
        }
    }

    /// `lim q(t) = (2 C0 / K) sqrt(C1 C2) pi / 2`.
    pub fn q_limit(&self) -> T {
        lit::<T>(2.0) * self.c0 / self.k * (self.c1 * self.c2).sqrt() * T::FRAC_PI_2()
    }

    /// Largest violation of `P <= K p <= 2 P` over `times`, as a relative defect.
    pub fn bracket_defect(&self, times: &[T]) -> T {
        times.iter().fold(T::zero(), |m, &t| {
            let (kp, big) = (self.k * self.p(t), self.envelope(t));
            let lo = (big - kp) / big;
            let hi = (kp - big - big) / big;
            m.max(lo).max(hi)
        })
    }
}

/// Validates the constants (`C0 >= 1`, `0 < K <= 1`, all positive) and the
/// budget `q(inf) <= epsilon`.
pub fn build_modulation<T: Real>(epsilon: T, k: T, c0: T, c1: T, c2: T) -> Result<ModulationPair<T>, ComparisonError> {
    if !(k > T::zero() && k <= T::one()) || !(c0 >= T::one()) || !(c1 > T::zero()) || !(c2 > T::zero()) || !(epsilon > T::zero()) {
        return Err(ComparisonError::InvalidConstants(format!(
            "epsilon={epsilon}, K={k}, C0={c0}, C1={c1}, C2={c2}"
        )));
    }
    let pair = ModulationPair { epsilon, k, c0, c1, c2 };
    let q_inf = pair.q_limit();
    if q_inf > epsilon {
        return Err(ComparisonError::EpsilonBudget {
            q_inf: q_inf.as_f64(),
            epsilon: epsilon.as_f64(),
        });
    }
    if pair.p(T::zero()) > epsilon {
        return Err(ComparisonError::EpsilonBudget {
            q_inf: pair.p(T::zero()).as_f64(),
            epsilon: epsilon.as_f64(),
        });
    }
    Ok(pair)
}

/// Value and derivatives of a candidate at one grid node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet<T> {
    pub w: T,
    pub w_t: T,
    pub w_z: T,
    pub w_zz: T,
    pub w_xx: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridNode<T> {
    pub ix: usize,
    pub x: T,
    pub z: T,
    pub it: usize,
    pub t: T,
}

/// A closed-form candidate for the sign check.
pub trait Candidate<T: Real>: Sync {
    fn describe(&self) -> String;
    fn jet(&self, node: &GridNode<T>) -> Result<Jet<T>, ComparisonError>;
    /// Split `L = I + J` reported alongside the extrema, when meaningful.
    fn split(&self, _node: &GridNode<T>, _f: &ReactionTerm<T>, _c: T) -> Option<(T, T)> {
        None
    }
}

/// Evaluation box: optional periodic `x`, and closed intervals in `z` and `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualGrid<T> {
    /// `(period, nodes)`; `None` for candidates independent of `x`.
    pub x: Option<(T, usize)>,
    pub z: (T, T, usize),
    pub t: (T, T, usize),
}

impl<T: Real> ResidualGrid<T> {
    pub fn line(z: (T, T, usize), t: (T, T, usize)) -> Self {
        ResidualGrid { x: None, z, t }
    }

    fn axis(range: (T, T, usize), i: usize) -> T {
        let (a, b, n) = range;
        if n <= 1 {
            a
        } else {
            a + (b - a) * T::from_usize_lossy(i) / T::from_usize_lossy(n - 1)
        }
    }

    pub fn z_at(&self, i: usize) -> T {
        Self::axis(self.z, i)
    }

    pub fn t_at(&self, i: usize) -> T {
        Self::axis(self.t, i)
    }

    pub fn t_nodes(&self) -> Vec<T> {
        (0..self.t.2).map(|i| self.t_at(i)).collect()
    }

    pub fn nx(&self) -> usize {
        self.x.map_or(1, |x| x.1)
    }

    pub fn x_at(&self, i: usize) -> T {
        self.x.map_or(T::zero(), |(l, n)| l * T::from_usize_lossy(i) / T::from_usize_lossy(n))
    }

    pub fn points(&self) -> usize {
        self.nx() * self.z.2 * self.t.2
    }

    /// All spacings halved.
    pub fn refined(&self) -> Self {
        let r = |(a, b, n): (T, T, usize)| (a, b, if n <= 1 { n } else { 2 * n - 1 });
        ResidualGrid {
            x: self.x.map(|(l, n)| (l, 2 * n)),
            z: r(self.z),
            t: r(self.t),
        }
    }
}

/// Location and value of an extremum of `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum<T> {
    pub value: T,
    pub x: T,
    pub z: T,
    pub t: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Super,
    Sub,
    /// Both signs hold: `L` vanishes to tolerance.
    Zero,
    Neither,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Super => "Super",
            Verdict::Sub => "Sub",
            Verdict::Zero => "Zero",
            Verdict::Neither => "Neither",
        })
    }
}

/// Extrema of the `I`/`J` split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitDiagnostics<T> {
    pub sup_abs_i: T,
    pub min_j: T,
    pub max_j: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport<T> {
    pub candidate: String,
    pub expected: Sign,
    pub numeric_tol: T,
    pub grid: ResidualGrid<T>,
    pub min: Extremum<T>,
    pub max: Extremum<T>,
    /// Extrema of `L / M` (zero where `M = 0`).
    pub min_scaled: T,
    pub max_scaled: T,
    pub verdict: Verdict,
    pub split: Option<SplitDiagnostics<T>>,
}

impl<T: Real> ResidualReport<T> {
    pub fn passed(&self) -> bool {
        match self.expected {
            Sign::Super => matches!(self.verdict, Verdict::Super | Verdict::Zero),
            Sign::Sub => matches!(self.verdict, Verdict::Sub | Verdict::Zero),
        }
    }

    /// Scaled value of `L` in the direction that could break the expected sign
    /// (negative means a violation).
    pub fn margin(&self) -> T {
        match self.expected {
            Sign::Super => self.min_scaled,
            Sign::Sub => -self.max_scaled,
        }
    }

    /// The extremum relevant for the expected sign.
    pub fn critical(&self) -> Extremum<T> {
        match self.expected {
            Sign::Super => self.min,
            Sign::Sub => self.max,
        }
    }

    pub fn summary(&self) -> String {
        let c = self.critical();
        format!(
            "{}: expected {}, verdict {}, min L = {:.3e}, max L = {:.3e}, critical at (x={:.3}, z={:.3}, t={:.3}), tol {:.1e}",
            self.candidate,
            self.expected.name(),
            self.verdict,
            self.min.value,
            self.max.value,
            c.x,
            c.z,
            c.t,
            self.numeric_tol
        )
    }
}

/// Same verdict, and the critical extremum moved by less than `10 * tol`.
pub fn refinement_stable<T: Real>(coarse: &ResidualReport<T>, fine: &ResidualReport<T>) -> bool {
    let tol = coarse.numeric_tol.max(fine.numeric_tol);
    coarse.passed() == fine.passed()
        && (coarse.critical().value - fine.critical().value).abs() < lit::<T>(10.0) * tol
}

#[derive(Clone, Copy)]
struct Acc<T> {
    min: Extremum<T>,
    max: Extremum<T>,
    min_scaled: T,
    max_scaled: T,
    split: Option<SplitDiagnostics<T>>,
}

impl<T: Real> Acc<T> {
    fn new() -> Self {
        let e = |v| Extremum {
            value: v,
            x: T::zero(),
            z: T::zero(),
            t: T::zero(),
        };
        Acc {
            min: e(T::infinity()),
            max: e(T::neg_infinity()),
            min_scaled: T::infinity(),
            max_scaled: T::neg_infinity(),
            split: None,
        }
    }

    fn merge(mut self, o: Acc<T>) -> Self {
        if o.min.value < self.min.value {
            self.min = o.min;
        }
        if o.max.value > self.max.value {
            self.max = o.max;
        }
        self.min_scaled = self.min_scaled.min(o.min_scaled);
        self.max_scaled = self.max_scaled.max(o.max_scaled);
        self.split = match (self.split, o.split) {
            (Some(a), Some(b)) => Some(SplitDiagnostics {
                sup_abs_i: a.sup_abs_i.max(b.sup_abs_i),
                min_j: a.min_j.min(b.min_j),
                max_j: a.max_j.max(b.max_j),
            }),
            (a, b) => a.or(b),
        };
        self
    }
}

/// `L[w]` at one node, with the magnitude scale `M`.
pub fn operator_l<T: Real>(j: &Jet<T>, f: &ReactionTerm<T>, c: T) -> (T, T) {
    let fw = f.eval(j.w);
    let l = j.w_t - j.w_xx - j.w_zz - c * j.w_z - fw;
    let m = j.w_t.abs() + j.w_xx.abs() + j.w_zz.abs() + (c * j.w_z).abs() + fw.abs();
    (l, m)
}

/// Evaluates `L[candidate]` on every node of `grid` and classifies its sign.
pub fn residual_l<T: Real, C: Candidate<T> + ?Sized>(
    cand: &C,
    f: &ReactionTerm<T>,
    c: T,
    grid: &ResidualGrid<T>,
    expected: Sign,
    tol: T,
) -> Result<ResidualReport<T>, ComparisonError> {
    let slices: Vec<Result<Acc<T>, ComparisonError>> = (0..grid.t.2)
        .into_par_iter()
        .map(|it| {
            let t = grid.t_at(it);
            let mut acc = Acc::new();
            for ix in 0..grid.nx() {
                let x = grid.x_at(ix);
                for iz in 0..grid.z.2 {
                    let z = grid.z_at(iz);
                    let node = GridNode { ix, x, z, it, t };
                    let jet = cand.jet(&node)?;
                    let (l, m) = operator_l(&jet, f, c);
                    let scaled = if m > T::zero() { l / m } else { T::zero() };
                    let here = Extremum { value: l, x, z, t };
                    if l < acc.min.value {
                        acc.min = here;
                    }
                    if l > acc.max.value {
                        acc.max = here;
                    }
                    acc.min_scaled = acc.min_scaled.min(scaled);
                    acc.max_scaled = acc.max_scaled.max(scaled);
                    if let Some((i, jv)) = cand.split(&node, f, c) {
                        let s = acc.split.get_or_insert(SplitDiagnostics {
                            sup_abs_i: T::zero(),
                            min_j: T::infinity(),
                            max_j: T::neg_infinity(),
                        });
                        s.sup_abs_i = s.sup_abs_i.max(i.abs());
                        s.min_j = s.min_j.min(jv);
                        s.max_j = s.max_j.max(jv);
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let mut acc = Acc::new();
    for s in slices {
        acc = acc.merge(s?);
    }
    let sup_ok = acc.min_scaled >= -tol;
    let sub_ok = acc.max_scaled <= tol;
    let verdict = match (sup_ok, sub_ok) {
        (true, true) => Verdict::Zero,
        (true, false) => Verdict::Super,
        (false, true) => Verdict::Sub,
        (false, false) => Verdict::Neither,
    };
    Ok(ResidualReport {
        candidate: cand.describe(),
        expected,
        numeric_tol: tol,
        grid: *grid,
        min: acc.min,
        max: acc.max,
        min_scaled: acc.min_scaled,
        max_scaled: acc.max_scaled,
        verdict,
        split: acc.split,
    })
}

/// `(z, L, L/M)` along the `z` nodes of `grid` at the `x` node `ix` and time node `it`.
pub fn residual_line<T: Real, C: Candidate<T> + ?Sized>(
    cand: &C,
    f: &ReactionTerm<T>,
    c: T,
    grid: &ResidualGrid<T>,
    ix: usize,
    it: usize,
) -> Result<Vec<(T, T, T)>, ComparisonError> {
    let (x, t) = (grid.x_at(ix), grid.t_at(it));
    (0..grid.z.2)
        .map(|iz| {
            let z = grid.z_at(iz);
            let (l, m) = operator_l(&cand.jet(&GridNode { ix, x, z, it, t })?, f, c);
            Ok((z, l, if m > T::zero() { l / m } else { T::zero() }))
        })
        .collect()
}

/// Numeric tolerance for candidates built from closed forms and the profile.
pub const ANALYTIC_TOL: f64 = 1e-8;
/// Numeric tolerance where derivatives of `V` enter by finite differences.
pub const MAIN_PAIR_TOL: f64 = 1e-6;

fn profile_at<T: Real>(p: &FrontProfile<T>, z: T) -> Result<ProfilePoint<T>, ComparisonError> {
    Ok(p.eval(z)?)
}

/// `phi(z - shift) + lift`.
#[derive(Debug, Clone)]
pub struct ShiftedProfile<T> {
    pub profile: FrontProfile<T>,
    pub shift: T,
    pub lift: T,
}

impl<T: Real> ShiftedProfile<T> {
    /// Extends the profile so that every `z - shift` with `z` in `z_range` is covered.
    pub fn new(p: &FrontProfile<T>, shift: T, lift: T, z_range: (T, T)) -> Self {
        ShiftedProfile {
            profile: p.with_tails(z_range.0 - shift - p.dz(), z_range.1 - shift + p.dz()),
            shift,
            lift,
        }
    }
}

impl<T: Real> Candidate<T> for ShiftedProfile<T> {
    fn describe(&self) -> String {
        format!("phi(z - {}) + {}", self.shift, self.lift)
    }

    fn jet(&self, n: &GridNode<T>) -> Result<Jet<T>, ComparisonError> {
        let p = profile_at(&self.profile, n.z - self.shift)?;
        Ok(Jet {
            w: p.phi + self.lift,
            w_t: T::zero(),
            w_z: p.dphi,
            w_zz: p.d2phi,
            w_xx: T::zero(),
        })
    }
}

/// `w = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroCandidate;

impl<T: Real> Candidate<T> for ZeroCandidate {
    fn describe(&self) -> String {
        "0".into()
    }

    fn jet(&self, _: &GridNode<T>) -> Result<Jet<T>, ComparisonError> {
        Ok(Jet::default())
    }
}

/// `phi(z - z1 -/+ C (1 - e^{-beta t})) +/- q0 e^{-beta t} psi(z - z2)`.
#[derive(Debug, Clone)]
pub struct RotheCandidate<T> {
    pub profile: FrontProfile<T>,
    pub psi: CutoffPsi<T>,
    pub q0: T,
    pub z1: T,
    pub z2: T,
    pub beta: T,
    pub shift: T,
    pub sign: Sign,
}

impl<T: Real> Candidate<T> for RotheCandidate<T> {
    fn describe(&self) -> String {
        format!(
            "rothe-{} (q0={}, z1={}, z2={}, beta={}, C={})",
            self.sign.name(),
            self.q0,
            self.z1,
            self.z2,
            self.beta,
            self.shift
        )
    }

    fn jet(&self, n: &GridNode<T>) -> Result<Jet<T>, ComparisonError> {
        let s: T = self.sign.factor();
        let e = (-self.beta * n.t).exp();
        let xi = n.z - self.z1 - s * self.shift * (T::one() - e);
        let p = profile_at(&self.profile, xi)?;
        let ps = self.psi.eval(n.z - self.z2);
        let q = self.q0 * e;
        Ok(Jet {
            w: p.phi + s * q * ps.psi,
            w_t: p.dphi * (-s * self.shift * self.beta * e) - s * self.beta * q * ps.psi,
            w_z: p.dphi + s * q * ps.dpsi,
            w_zz: p.d2phi + s * q * ps.d2psi,
            w_xx: T::zero(),
        })
    }
}

/// `(1 +/- eps e^{-beta t}) phi(z -/+ sigma eps (1 - e^{-beta t}))`.
#[derive(Debug, Clone)]
pub struct WangCandidate<T> {
    pub profile: FrontProfile<T>,
    pub epsilon: T,
    pub sigma: T,
    pub beta: T,
    pub sign: Sign,
}

impl<T: Real> Candidate<T> for WangCandidate<T> {
    fn describe(&self) -> String {
        format!(
            "wang-{} (eps={}, sigma={}, beta={})",
            self.sign.name(),
            self.epsilon,
            self.sigma,
            self.beta
        )
    }

    fn jet(&self, n: &GridNode<T>) -> Result<Jet<T>, ComparisonError> {
        let s: T = self.sign.factor();
        let e = (-self.beta * n.t).exp();
        let a = T::one() + s * self.epsilon * e;
        let xi = n.z - s * self.sigma * self.epsilon * (T::one() - e);
        let p = profile_at(&self.profile, xi)?;
        Ok(Jet {
            w: a * p.phi,
            w_t: -s * self.epsilon * self.beta * e * p.phi - a * p.dphi * s * self.sigma * self.epsilon * self.beta * e,
            w_z: a * p.dphi,
            w_zz: a * p.d2phi,
            w_xx: T::zero(),
        })
    }
}

/// `(1 +/- e^{-(z - a t)}) phi(z - z0)`.
#[derive(Debug, Clone)]
pub struct ExponentialCandidate<T> {
    pub profile: FrontProfile<T>,
    pub z0: T,
    pub a: T,
    pub sign: Sign,
}

impl<T: Real> Candidate<T> for ExponentialCandidate<T> {
    fn describe(&self) -> String {
        format!("exponential-{} (a={}, z0={})", self.sign.name(), self.a, self.z0)
    }

    fn jet(&self, n: &GridNode<T>) -> Result<Jet<T>, ComparisonError> {
        let s: T = self.sign.factor();
        let e = (self.a * n.t - n.z).exp();
        let p = profile_at(&self.profile, n.z - self.z0)?;
        let g = T::one() + s * e;
        let two = lit::<T>(2.0);
        Ok(Jet {
            w: g * p.phi,
            w_t: s * self.a * e * p.phi,
            w_z: -s * e * p.phi + g * p.dphi,
            w_zz: s * e * p.phi - two * s * e * p.dphi + g * p.d2phi,
            w_xx: T::zero(),
        })
    }
}

/// Snapshot of `V` and its derivatives on the `x` nodes at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct VSlice<T> {
    pub v: Vec<T>,
    pub vx: Vec<T>,
    pub vxx: Vec<T>,
    pub vxxx: Vec<T>,
    pub vt: Vec<T>,
    pub vxt: Vec<T>,
}

impl<T: Real> VSlice<T> {
    /// Centered differences of a periodic `V`; `V_t` from the drift-free
    /// equation `V_t = V_xx + (c/2) V_x^2` with the same stencils.
    pub fn from_values(v: &[T], dx: T, c: T) -> Self {
        let n = v.len();
        let two = lit::<T>(2.0);
        let d1 = |w: &[T]| -> Vec<T> {
            (0..n)
                .map(|i| (w[(i + 1) % n] - w[(i + n - 1) % n]) / (two * dx))
                .collect()
        };
        let vx = d1(v);
        let vxx: Vec<T> = (0..n)
            .map(|i| (v[(i + 1) % n] - two * v[i] + v[(i + n - 1) % n]) / (dx * dx))
            .collect();
        let vxxx = d1(&vxx);
        let vt: Vec<T> = vxx
            .iter()
            .zip(&vx)
            .map(|(a, b)| *a + c / two * *b * *b)
            .collect();
        let vxt = d1(&vt);
        VSlice {
            v: v.to_vec(),
            vx,
            vxx,
            vxxx,
            vt,
            vxt,
        }
    }
}

/// `phi((z - V)/sqrt(1 + V_x^2) -/+ q(t)) +/- p(t) psi(z)` with `V` from the
/// drift-free semilinear flow.
#[derive(Debug, Clone)]
pub struct MainCandidate<T> {
    pub profile: FrontProfile<T>,
    pub psi: CutoffPsi<T>,
    pub modulation: ModulationPair<T>,
    /// One slice per time node of the grid it was built for.
    pub slices: Vec<VSlice<T>>,
    pub sign: Sign,
    pub c: T,
}

struct MainParts<T> {
    eta: ProfilePoint<T>,
    eta_t: T,
    eta_x: T,
    eta_xx: T,
    g: T,
    psi: PsiValue<T>,
    p: T,
    dp: T,
}

impl<T: Real> MainCandidate<T> {
    fn parts(&self, n: &GridNode<T>) -> Result<MainParts<T>, ComparisonError> {
        let sl = &self.slices[n.it];
        let i = n.ix;
        let (v, vx, vxx, vxxx, vt, vxt) = (sl.v[i], sl.vx[i], sl.vxx[i], sl.vxxx[i], sl.vt[i], sl.vxt[i]);
        let s: T = self.sign.factor();
        let one = T::one();
        let two = lit::<T>(2.0);
        let g = (one + vx * vx).sqrt();
        let g2 = g * g;
        let g3 = g2 * g;
        let gx = vx * vxx / g;
        let gxx = (vxx * vxx + vx * vxxx) / g - vx * vx * vxx * vxx / g3;
        let gt = vx * vxt / g;
        let d = n.z - v;
        let m = &self.modulation;
        let eta = d / g - s * m.q(n.t);
        let eta_t = -vt / g - d * gt / g2 - s * m.dq(n.t);
        let eta_x = -vx / g - d * gx / g2;
        let eta_xx = -vxx / g + two * vx * gx / g2 - d * (gxx * g - two * gx * gx) / g3;
        Ok(MainParts {
            eta: profile_at(&self.profile, eta)?,
            eta_t,
            eta_x,
            eta_xx,
            g,
            psi: self.psi.eval(n.z),
            p: m.p(n.t),
            dp: m.dp(n.t),
        })
    }
}

impl<T: Real> Candidate<T> for MainCandidate<T> {
    fn describe(&self) -> String {
        let m = &self.modulation;
        format!(
            "main-{} (K={}, C0={}, C1={}, C2={}, eps={}, lambda1={})",
            self.sign.name(),
            m.k,
            m.c0,
            m.c1,
            m.c2,
            m.epsilon,
            self.psi.lambda1
        )
    }

    fn jet(&self, n: &GridNode<T>) -> Result<Jet<T>, ComparisonError> {
        let s: T = self.sign.factor();
        let q = self.parts(n)?;
        let ph = q.eta;
        Ok(Jet {
            w: ph.phi + s * q.p * q.psi.psi,
            w_t: ph.dphi * q.eta_t + s * q.dp * q.psi.psi,
            w_z: ph.dphi / q.g + s * q.p * q.psi.dpsi,
            w_zz: ph.d2phi / (q.g * q.g) + s * q.p * q.psi.d2psi,
            w_xx: ph.d2phi * q.eta_x * q.eta_x + ph.dphi * q.eta_xx,
        })
    }

    /// `I` collects the terms of the front part `phi(eta)` alone; `J` the
    /// modulation `p psi` and its coupling through `f`. The split takes
    /// `eta = (z - V)/sqrt(1 + V_x^2)` (shifted by `q`).
    fn split(&self, n: &GridNode<T>, f: &ReactionTerm<T>, c: T) -> Option<(T, T)> {
        let s: T = self.sign.factor();
        let q = self.parts(n).ok()?;
        let ph = q.eta;
        let i = ph.dphi * q.eta_t
            - ph.d2phi * (q.eta_x * q.eta_x + T::one() / (q.g * q.g))
            - ph.dphi * q.eta_xx
            - c * ph.dphi / q.g
            - f.eval(ph.phi);
        let j = s * (q.dp * q.psi.psi - q.p * q.psi.d2psi - c * q.p * q.psi.dpsi)
            - (f.eval(ph.phi + s * q.p * q.psi.psi) - f.eval(ph.phi));
        Some((i, j))
    }
}

/// Geometric ladder `lo, lo r, ..., lo 10^decades` with `per_decade` steps per decade.
pub fn geometric_ladder<T: Real>(lo: T, decades: usize, per_decade: usize) -> Vec<T> {
    let n = decades * per_decade;
    let ten = lit::<T>(10.0);
    (0..=n)
        .map(|k| lo * ten.powf(T::from_usize_lossy(k) / T::from_usize_lossy(per_decade)))
        .collect()
}

/// A certified pair with the constants that achieved it.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCertificate<T> {
    pub constants: Vec<(&'static str, T)>,
    pub plus: ResidualReport<T>,
    pub minus: ResidualReport<T>,
    /// Same candidates on the grid with all spacings halved.
    pub refined: Option<(ResidualReport<T>, ResidualReport<T>)>,
}

impl<T: Real> PairCertificate<T> {
    pub fn passed(&self) -> bool {
        self.plus.passed() && self.minus.passed()
    }

    pub fn refinement_stable(&self) -> bool {
        match &self.refined {
            Some((p, m)) => refinement_stable(&self.plus, p) && refinement_stable(&self.minus, m),
            None => false,
        }
    }

    pub fn constant(&self, name: &str) -> Option<T> {
        self.constants.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

fn certify<T: Real, C: Candidate<T>>(
    plus: &C,
    minus: &C,
    f: &ReactionTerm<T>,
    c: T,
    grid: &ResidualGrid<T>,
    tol: T,
    refine: bool,
) -> Result<(ResidualReport<T>, ResidualReport<T>, Option<(ResidualReport<T>, ResidualReport<T>)>), ComparisonError> {
    let rp = residual_l(plus, f, c, grid, Sign::Super, tol)?;
    let rm = residual_l(minus, f, c, grid, Sign::Sub, tol)?;
    let refined = if refine && rp.passed() && rm.passed() {
        let fine = grid.refined();
        Some((
            residual_l(plus, f, c, &fine, Sign::Super, tol)?,
            residual_l(minus, f, c, &fine, Sign::Sub, tol)?,
        ))
    } else {
        None
    };
    Ok((rp, rm, refined))
}

/// Checks a given super/sub pair on `grid` and on its refinement.
pub fn certify_pair<T: Real, C: Candidate<T>>(
    plus: &C,
    minus: &C,
    f: &ReactionTerm<T>,
    c: T,
    grid: &ResidualGrid<T>,
    tol: T,
    constants: Vec<(&'static str, T)>,
) -> Result<PairCertificate<T>, ComparisonError> {
    let rp = residual_l(plus, f, c, grid, Sign::Super, tol)?;
    let rm = residual_l(minus, f, c, grid, Sign::Sub, tol)?;
    let fine = grid.refined();
    let refined = Some((
        residual_l(plus, f, c, &fine, Sign::Super, tol)?,
        residual_l(minus, f, c, &fine, Sign::Sub, tol)?,
    ));
    Ok(PairCertificate {
        constants,
        plus: rp,
        minus: rm,
        refined,
    })
}

/// Ladders searched for `(beta, C)` of the shifted-profile pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RotheSearch<T> {
    pub betas: Vec<T>,
    pub shifts: Vec<T>,
    pub lambda1: T,
}

impl<T: Real> RotheSearch<T> {
    /// `beta` in `[1e-3, 10]`, `C` in `[0.1, 1000]`, four steps per decade;
    /// `lambda1 = -c/2`, the midpoint of the characteristic roots.
    pub fn standard(c: T) -> Self {
        RotheSearch {
            betas: geometric_ladder(lit(1e-3), 4, 4),
            shifts: geometric_ladder(lit(0.1), 4, 4),
            lambda1: -c / lit(2.0),
        }
    }
}

/// One side of the shifted-profile pair with the constants that certified it.
#[derive(Debug, Clone, PartialEq)]
pub struct RotheSide<T> {
    pub beta: T,
    pub shift: T,
    pub report: ResidualReport<T>,
    pub refined: ResidualReport<T>,
}

/// Searches `(beta, C)` for one side of
/// `w+/- = phi(z - z1 -/+ C(1 - e^{-beta t})) +/- q0 e^{-beta t} psi(z - z2)`
/// and certifies the first success on both the grid and its refinement
/// (ordered by `beta`, then `C`).
pub fn search_rothe_side<T: Real>(
    f: &ReactionTerm<T>,
    p: &FrontProfile<T>,
    sign: Sign,
    q0: T,
    z1: T,
    z2: T,
    grid: &ResidualGrid<T>,
    search: &RotheSearch<T>,
    tol: T,
) -> Result<RotheSide<T>, ComparisonError> {
    let c = p.c();
    let psi = CutoffPsi::new(search.lambda1)?;
    let c_max = search.shifts.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let wide = p.with_tails(grid.z.0 - z1 - c_max - p.dz(), grid.z.1 - z1 + c_max + p.dz());
    let mut worst = T::neg_infinity();
    for &beta in &search.betas {
        for &shift in &search.shifts {
            let w = RotheCandidate {
                profile: wide.clone(),
                psi,
                q0,
                z1,
                z2,
                beta,
                shift,
                sign,
            };
            let report = residual_l(&w, f, c, grid, sign, tol)?;
            if !report.passed() {
                worst = worst.max(report.margin());
                continue;
            }
            // a sign that only holds on the coarse grid is not a certificate
            let refined = residual_l(&w, f, c, &grid.refined(), sign, tol)?;
            if refined.passed() {
                return Ok(RotheSide {
                    beta,
                    shift,
                    report,
                    refined,
                });
            }
            worst = worst.max(refined.margin());
        }
    }
    Err(ComparisonError::SearchExhausted {
        candidate: format!("rothe-{} (q0={q0})", sign.name()),
        worst: worst.as_f64(),
    })
}

/// Both sides of the shifted-profile pair at the same `q0`; each side has
/// its own `(beta, C)`.
pub fn check_rothe_pair<T: Real>(
    f: &ReactionTerm<T>,
    p: &FrontProfile<T>,
    q0: T,
    z1: T,
    z2: T,
    grid: &ResidualGrid<T>,
    search: &RotheSearch<T>,
    tol: T,
) -> Result<PairCertificate<T>, ComparisonError> {
    let plus = search_rothe_side(f, p, Sign::Super, q0, z1, z2, grid, search, tol)?;
    let minus = search_rothe_side(f, p, Sign::Sub, q0, z1, z2, grid, search, tol)?;
    Ok(PairCertificate {
        constants: vec![
            ("q0", q0),
            ("beta+", plus.beta),
            ("C+", plus.shift),
            ("beta-", minus.beta),
            ("C-", minus.shift),
            ("lambda1", search.lambda1),
        ],
        plus: plus.report,
        minus: minus.report,
        refined: Some((plus.refined, minus.refined)),
    })
}

/// Largest `q0` in `ladder` (tried in order) for which both sides certify.
pub fn admissible_rothe_pair<T: Real>(
    f: &ReactionTerm<T>,
    p: &FrontProfile<T>,
    ladder: &[T],
    z1: T,
    z2: T,
    grid: &ResidualGrid<T>,
    search: &RotheSearch<T>,
    tol: T,
) -> Result<PairCertificate<T>, ComparisonError> {
    let mut last = None;
    for &q0 in ladder {
        match check_rothe_pair(f, p, q0, z1, z2, grid, search, tol) {
            Ok(cert) => return Ok(cert),
            Err(e @ ComparisonError::SearchExhausted { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or_else(|| ComparisonError::InvalidConstants("empty q0 ladder".into())))
}

/// Ladders searched for `(sigma, beta)` of the multiplicative pair.
#[derive(Debug, Clone, PartialEq)]
pub struct WangSearch<T> {
    pub sigmas: Vec<T>,
    pub betas: Vec<T>,
}

impl<T: Real> WangSearch<T> {
    pub fn standard() -> Self {
        WangSearch {
            sigmas: geometric_ladder(lit(0.1), 4, 2),
            betas: geometric_ladder(lit(1e-3), 4, 2),
        }
    }
}

/// Searches `(sigma, beta)` for `(1 +/- eps e^{-beta t}) phi(z -/+ sigma eps (1 - e^{-beta t}))`.
/// Requires the bound `0 < f'(0) u - f(u) < M u^2` on sampled `u in (0, 1]`.
pub fn check_wang_pair<T: Real>(
    f: &ReactionTerm<T>,
    p: &FrontProfile<T>,
    epsilon: T,
    grid: &ResidualGrid<T>,
    search: &WangSearch<T>,
    tol: T,
) -> Result<PairCertificate<T>, ComparisonError> {
    if kpp_bound_constant(f, T::one(), 10_000).is_none() {
        return Err(ComparisonError::NotKppType);
    }
    let c = p.c();
    let s_max = search.sigmas.iter().fold(T::zero(), |m, v| m.max(v.abs())) * epsilon;
    let wide = p.with_tails(grid.z.0 - s_max - p.dz(), grid.z.1 + s_max + p.dz());
    let mut worst = T::neg_infinity();
    for &beta in &search.betas {
        for &sigma in &search.sigmas {
            let make = |sign| WangCandidate {
                profile: wide.clone(),
                epsilon,
                sigma,
                beta,
                sign,
            };
            let (rp, rm, refined) = certify(&make(Sign::Super), &make(Sign::Sub), f, c, grid, tol, true)?;
            let fine_ok = refined.as_ref().is_some_and(|(a, b)| a.passed() && b.passed());
            if rp.passed() && rm.passed() && fine_ok {
                return Ok(PairCertificate {
                    constants: vec![("sigma", sigma), ("beta", beta), ("epsilon", epsilon)],
                    plus: rp,
                    minus: rm,
                    refined,
                });
            }
            worst = worst.max(rp.margin().min(rm.margin()));
        }
    }
    Err(ComparisonError::SearchExhausted {
        candidate: "wang".into(),
        worst: worst.as_f64(),
    })
}

/// Constants of the exponential pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialBound<T> {
    /// `sup |phi'| / phi`.
    pub k: T,
    /// `sup_{[0,1]} |f'|`.
    pub fprime_sup: T,
    /// Sufficient speed `2k + 1 - c + sup|f'|`.
    pub a_sufficient: T,
    /// Below `1 - c + 2k` the tail sign fails.
    pub a_tail_threshold: T,
}

/// `k` from the stored profile (and its tail exponent), plus the derived bounds.
pub fn exponential_bound<T: Real>(f: &ReactionTerm<T>, p: &FrontProfile<T>) -> Result<ExponentialBound<T>, ComparisonError> {
    let last = *p.phi().last().unwrap_or(&T::one());
    if !(last < lit(1e-6)) {
        return Err(ComparisonError::TailTooShort(last.as_f64()));
    }
    let e = p.exponents();
    let tail = p
        .decay_exponent_measured()
        .map(|m| {
            if (m - e.lambda_minus).abs() < (m - e.lambda_plus).abs() {
                e.lambda_minus
            } else {
                e.lambda_plus
            }
        })
        .unwrap_or(e.lambda_minus);
    let k = p.log_derivative_bound().max(tail.abs());
    let fp = f.derivative_sup_norm(10_000);
    let c = p.c();
    let two = lit::<T>(2.0);
    Ok(ExponentialBound {
        k,
        fprime_sup: fp,
        a_sufficient: two * k + T::one() - c + fp,
        a_tail_threshold: T::one() - c + two * k,
    })
}

/// Exponential pair with speed `a`; the time range is `[0, (z_hi - 10)/a]`.
pub fn check_exponential_pair<T: Real>(
    f: &ReactionTerm<T>,
    p: &FrontProfile<T>,
    z0: T,
    a: T,
    z: (T, T, usize),
    nt: usize,
    tol: T,
) -> Result<PairCertificate<T>, ComparisonError> {
    if !(a > T::zero()) {
        return Err(ComparisonError::InvalidConstants(format!("a = {a}")));
    }
    let t_hi = ((z.1 - lit(10.0)) / a).max(T::zero());
    let grid = ResidualGrid::line(z, (T::zero(), t_hi, nt));
    let wide = p.with_tails(z.0 - z0 - p.dz(), z.1 - z0 + p.dz());
    let make = |sign| ExponentialCandidate {
        profile: wide.clone(),
        z0,
        a,
        sign,
    };
    let (rp, rm, refined) = certify(&make(Sign::Super), &make(Sign::Sub), f, p.c(), &grid, tol, true)?;
    Ok(PairCertificate {
        constants: vec![("a", a), ("z0", z0)],
        plus: rp,
        minus: rm,
        refined,
    })
}

/// Evolves `V` (drift-free) from `v0` on `nx` periodic nodes and snapshots it
/// at the grid's time nodes.
pub fn v_slices<T: Real>(v0: &[T], lx: T, c: T, t_nodes: &[T]) -> Result<Vec<VSlice<T>>, ComparisonError> {
    let dx = lx / T::from_usize_lossy(v0.len());
    let mut v = GraphField::new(GraphKind::Semilinear { with_drift: false }, c, dx, v0.to_vec());
    let dt = max_graph_dt(dx) * lit(0.5);
    let mut out = Vec::with_capacity(t_nodes.len());
    for &t in t_nodes {
        let span = t - v.time;
        advance_graph(&mut v, span, dt)?;
        out.push(VSlice::from_values(&v.values, dx, c));
    }
    Ok(out)
}

/// Main pair for given modulation constants. `v0` is sampled on the grid's
/// `x` nodes.
pub fn check_main_pair<T: Real>(
    f: &ReactionTerm<T>,
    p: &FrontProfile<T>,
    v0: &dyn Fn(T) -> T,
    psi: CutoffPsi<T>,
    pair: ModulationPair<T>,
    grid: &ResidualGrid<T>,
    tol: T,
    refine: bool,
) -> Result<PairCertificate<T>, ComparisonError> {
    let c = p.c();
    let (lx, _) = grid
        .x
        .ok_or_else(|| ComparisonError::InvalidConstants("main pair needs an x axis".into()))?;
    let build = |g: &ResidualGrid<T>| -> Result<(MainCandidate<T>, MainCandidate<T>), ComparisonError> {
        let nx = g.nx();
        let values: Vec<T> = (0..nx).map(|i| v0(g.x_at(i))).collect();
        let slices = v_slices(&values, lx, c, &g.t_nodes())?;
        let (vmin, vmax) = slices
            .iter()
            .flat_map(|s| s.v.iter())
            .fold((T::infinity(), T::neg_infinity()), |(a, b), &v| (a.min(v), b.max(v)));
        let q_max = pair.q_limit().abs() + T::one();
        let wide = p.with_tails(g.z.0 - vmax - q_max - p.dz(), g.z.1 - vmin + q_max + p.dz());
        let make = |sign| MainCandidate {
            profile: wide.clone(),
            psi,
            modulation: pair,
            slices: slices.clone(),
            sign,
            c,
        };
        Ok((make(Sign::Super), make(Sign::Sub)))
    };
    let (plus, minus) = build(grid)?;
    let rp = residual_l(&plus, f, c, grid, Sign::Super, tol)?;
    let rm = residual_l(&minus, f, c, grid, Sign::Sub, tol)?;
    let refined = if refine && rp.passed() && rm.passed() {
        let fine = grid.refined();
        let (fp, fm) = build(&fine)?;
        Some((
            residual_l(&fp, f, c, &fine, Sign::Super, tol)?,
            residual_l(&fm, f, c, &fine, Sign::Sub, tol)?,
        ))
    } else {
        None
    };
    let m = pair;
    Ok(PairCertificate {
        constants: vec![
            ("K", m.k),
            ("C0", m.c0),
            ("C1", m.c1),
            ("C2", m.c2),
            ("epsilon", m.epsilon),
            ("lambda1", psi.lambda1),
        ],
        plus: rp,
        minus: rm,
        refined,
    })
}

/// Ladders for the modulation constants (`K` fixed).
#[derive(Debug, Clone, PartialEq)]
pub struct MainSearch<T> {
    pub epsilon: T,
    pub k: T,
    pub c0: Vec<T>,
    pub c1: Vec<T>,
    /// `C2 = ratio * C1`; `sqrt(C1/C2)` bounds `|p'/p|`.
    pub ratios: Vec<T>,
    pub lambda1: T,
}

impl<T: Real> MainSearch<T> {
    pub fn standard(c: T, epsilon: T) -> Self {
        MainSearch {
            epsilon,
            k: T::one(),
            c0: geometric_ladder(T::one(), 4, 1),
            c1: geometric_ladder(lit(1e-6), 4, 1),
            ratios: geometric_ladder(lit(10.0), 4, 1),
            lambda1: -c / lit(2.0),
        }
    }
}

/// First admissible modulation (by `C1`, then ratio, then `C0`) whose main
/// pair passes on `grid` and on its refinement.
pub fn search_main_pair<T: Real>(
    f: &ReactionTerm<T>,
    p: &FrontProfile<T>,
    v0: &dyn Fn(T) -> T,
    grid: &ResidualGrid<T>,
    search: &MainSearch<T>,
    tol: T,
) -> Result<PairCertificate<T>, ComparisonError> {
    let psi = CutoffPsi::new(search.lambda1)?;
    let mut worst = T::neg_infinity();
    for &c1 in &search.c1 {
        for &ratio in &search.ratios {
            for &c0 in &search.c0 {
                let pair = match build_modulation(search.epsilon, search.k, c0, c1, c1 * ratio) {
                    Ok(m) => m,
                    Err(ComparisonError::EpsilonBudget { .. }) => continue,
                    Err(e) => return Err(e),
                };
                let cert = check_main_pair(f, p, v0, psi, pair, grid, tol, false)?;
                if cert.passed() {
                    let full = check_main_pair(f, p, v0, psi, pair, grid, tol, true)?;
                    if full.refined.as_ref().is_some_and(|(a, b)| a.passed() && b.passed()) {
                        return Ok(full);
                    }
                }
                worst = worst.max(cert.plus.margin().min(cert.minus.margin()));
            }
        }
    }
    Err(ComparisonError::SearchExhausted {
        candidate: "main".into(),
        worst: worst.as_f64(),
    })
}

/// Runs the 1D solver from `w(., 0)` and returns the largest excess
/// `u(z, t) - w(z, t)` over the interior nodes at each of `times`.
pub fn supersolution_excess<T: Real, C: Candidate<T>>(
    w: &C,
    f: &ReactionTerm<T>,
    c: T,
    grid: Grid1D<T>,
    dt: T,
    times: &[T],
) -> Result<Vec<(T, T)>, ComparisonError> {
    let at = |z: T, t: T| -> Result<T, ComparisonError> {
        Ok(w.jet(&GridNode {
            ix: 0,
            x: T::zero(),
            z,
            it: 0,
            t,
        })?
        .w)
    };
    let values = (0..grid.nz).map(|i| at(grid.z(i), T::zero())).collect::<Result<Vec<T>, _>>()?;
    let mut u = Field1D {
        grid,
        values,
        time: T::zero(),
        bc: Boundary::Dirichlet,
    };
    // boundary rows follow the candidate's own values, which bound the solution there
    let mut scratch = Vec::new();
    let mut out = Vec::new();
    let mut k: usize = 0;
    for &ts in times {
        let target = (ts / dt).round().to_usize().unwrap_or(0);
        while k < target {
            step_with(&mut u, f, c, dt, &mut scratch)?;
            k += 1;
            u.time = dt * T::from_usize_lossy(k);
            let n = u.values.len();
            u.values[0] = u.values[0].min(at(grid.z(0), u.time)?);
            u.values[n - 1] = u.values[n - 1].min(at(grid.z(n - 1), u.time)?);
        }
        let mut worst = T::neg_infinity();
        let n = u.values.len();
        for (i, &v) in u.values.iter().enumerate().take(n - 1).skip(1) {
            worst = worst.max(v - at(grid.z(i), u.time)?);
        }
        out.push((u.time, worst));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_branches_and_junctions() {
        let psi = CutoffPsi::new(0.5f64).unwrap();
        assert!((psi.eval(-10.0).psi - (-5.0f64).exp()).abs() < 1e-15);
        assert_eq!(psi.eval(10.0).psi, 1.0);
        // y = 1/2 and y = 1 junctions
        for y in [0.5f64, 1.0] {
            let s = y.ln() / 0.5;
            let (a, b) = (psi.eval(s - 1e-13), psi.eval(s + 1e-13));
            assert!((a.psi - b.psi).abs() < 1e-12);
            assert!((a.dpsi - b.dpsi).abs() < 1e-12);
            assert!((a.d2psi - b.d2psi).abs() < 1e-11);
        }
    }

    #[test]
    fn psi_derivatives_match_finite_differences() {
        let psi = CutoffPsi::new(-1.1f64).unwrap();
        let h = 1e-5;
        for k in -40..40 {
            // psi is only C2 at the junctions, so stay off them
            let s = k as f64 * 0.05 + 0.013;
            let v = psi.eval(s);
            let fd1 = (psi.eval(s + h).psi - psi.eval(s - h).psi) / (2.0 * h);
            let fd2 = (psi.eval(s + h).dpsi - psi.eval(s - h).dpsi) / (2.0 * h);
            assert!((v.dpsi - fd1).abs() < 1e-6, "s={s}");
            assert!((v.d2psi - fd2).abs() < 1e-6, "s={s}");
        }
    }

    #[test]
    fn modulation_example() {
        let m = build_modulation(4.0f64, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(m.p(0.0), 2.0);
        assert_eq!(m.q(0.0), 0.0);
        assert!((m.q_limit() - std::f64::consts::PI).abs() < 1e-15);
        assert!(m.bracket_defect(&[0.0, 0.5, 1.0, 2.0, 10.0]) <= 1e-12);
        assert!(matches!(build_modulation(3.0f64, 1.0, 1.0, 1.0, 1.0), Err(ComparisonError::EpsilonBudget { .. })));
        assert!(matches!(build_modulation(4.0f64, 2.0, 1.0, 1.0, 1.0), Err(ComparisonError::InvalidConstants(_))));
        // q' = C0 p
        let m = build_modulation(10.0f64, 0.5, 2.0, 0.3, 2.0).unwrap();
        let h = 1e-6;
        for t in [0.0, 0.7, 3.0, 20.0] {
            let fd = (m.q(t + h) - m.q((t - h).max(0.0))) / (h + h.min(t));
            assert!((fd - m.dq(t)).abs() < 1e-6);
            let fd = (m.p(t + h) - m.p((t - h).max(0.0))) / (h + h.min(t));
            assert!((fd - m.dp(t)).abs() < 1e-6);
        }
    }

    #[test]
    fn ladder_spans_decades() {
        let l: Vec<f64> = geometric_ladder(1e-3, 4, 2);
        assert_eq!(l.len(), 9);
        assert!((l[8] - 10.0).abs() < 1e-12 && (l[2] - 1e-2).abs() < 1e-15);
    }
}
