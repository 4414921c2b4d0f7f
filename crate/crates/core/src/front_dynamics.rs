//! Graph dynamics of the front: curvature flow with drift,
//!
//! `U_t = U_xx / (1 + U_x^2) + c sqrt(1 + U_x^2)`,
//!
//! and its small-gradient surrogate `V_t = V_xx + (c/2) V_x^2 (+ c)`.
//!
//! Both use explicit Euler with centered differences. The time step must
//! satisfy `dt <= dx^2 / 2`; for the semilinear scheme the update is monotone
//! (discrete comparison principle) while `|c V_x| dx <= 2`.

use thiserror::Error;

use crate::fit::{line_fit, FitError};
use crate::pde2d::LevelSet;
use crate::scalar::{lit, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("dt = {dt} exceeds dx^2/2 = {limit}")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("gradient blow-up at t = {t}: sup |W_x| = {grad}")]
    BlowUp { t: f64, grad: f64 },
    #[error("x grids differ: {0}")]
    GridMismatch(String),
    #[error("sup norm {0:e} below 1e-12: decay fit is meaningless")]
    FlatData(f64),
    #[error("series must span at least a decade in t, got [{0}, {1}]")]
    ShortSeries(f64, f64),
    #[error("handoff time {0} not among the level-set samples")]
    MissingHandoff(f64),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Gradient magnitude treated as blow-up.
pub const GRADIENT_BLOWUP: f64 = 1e3;

/// Which graph equation a field follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Mcf,
    Semilinear { with_drift: bool },
}

/// Ends of the `x` interval: periodic, or ghost nodes extrapolated linearly
/// (used for tilted planes, which are not periodic).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GraphBoundary {
    #[default]
    Periodic,
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphField<T> {
    /// Node spacing; nodes at `x_i = i dx`.
    pub dx: T,
    pub values: Vec<T>,
    pub time: T,
    pub kind: GraphKind,
    pub c: T,
    pub boundary: GraphBoundary,
}

impl<T: Real> GraphField<T> {
    pub fn new(kind: GraphKind, c: T, dx: T, values: Vec<T>) -> Self {
        assert!(values.len() >= 4, "graph needs at least 4 nodes");
        GraphField {
            dx,
            values,
            time: T::zero(),
            kind,
            c,
            boundary: GraphBoundary::Periodic,
        }
    }

    /// Periodic graph on `[0, lx)` with `nx` nodes.
    pub fn periodic(kind: GraphKind, c: T, lx: T, nx: usize, g: impl Fn(T) -> T) -> Self {
        let dx = lx / T::from_usize_lossy(nx);
        let values = (0..nx).map(|i| g(dx * T::from_usize_lossy(i))).collect();
        Self::new(kind, c, dx, values)
    }

    pub fn x(&self, i: usize) -> T {
        self.dx * T::from_usize_lossy(i)
    }

    pub fn x_nodes(&self) -> Vec<T> {
        (0..self.values.len()).map(|i| self.x(i)).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    #[inline]
    fn neighbours(&self, i: usize) -> (T, T) {
        let v = &self.values;
        let n = v.len();
        match self.boundary {
            GraphBoundary::Periodic => (v[(i + n - 1) % n], v[(i + 1) % n]),
            GraphBoundary::Linear => {
                let left = if i == 0 { v[0] + v[0] - v[1] } else { v[i - 1] };
                let right = if i == n - 1 { v[n - 1] + v[n - 1] - v[n - 2] } else { v[i + 1] };
                (left, right)
            }
        }
    }

    /// Right-hand side of the field's equation at every node.
    pub fn rhs(&self) -> Vec<T> {
        let (two, half) = (lit::<T>(2.0), lit::<T>(0.5));
        let inv_dx2 = T::one() / (self.dx * self.dx);
        let inv_2dx = T::one() / (two * self.dx);
        (0..self.values.len())
            .map(|i| {
                let (l, r) = self.neighbours(i);
                let v = self.values[i];
                let wx = (r - l) * inv_2dx;
                let wxx = (r - v - v + l) * inv_dx2;
                match self.kind {
                    GraphKind::Mcf => {
                        let g2 = T::one() + wx * wx;
                        wxx / g2 + self.c * g2.sqrt()
                    }
                    GraphKind::Semilinear { with_drift } => {
                        let base = wxx + half * self.c * wx * wx;
                        if with_drift {
                            base + self.c
                        } else {
                            base
                        }
                    }
                }
            })
            .collect()
    }

    /// Centered first difference at every node.
    pub fn derivative_x(&self) -> Vec<T> {
        let inv_2dx = T::one() / (lit::<T>(2.0) * self.dx);
        (0..self.values.len())
            .map(|i| {
                let (l, r) = self.neighbours(i);
                (r - l) * inv_2dx
            })
            .collect()
    }
}

/// Largest accepted time step.
pub fn max_graph_dt<T: Real>(dx: T) -> T {
    dx * dx / lit(2.0)
}

/// One explicit step of whichever equation `w.kind` names.
pub fn step_graph<T: Real>(w: &mut GraphField<T>, dt: T) -> Result<(), GraphError> {
    let limit = max_graph_dt(w.dx);
    if dt > limit * (T::one() + lit(1e-12)) {
        return Err(GraphError::StepTooLarge {
            dt: dt.as_f64(),
            limit: limit.as_f64(),
        });
    }
    let rhs = w.rhs();
    for (v, r) in w.values.iter_mut().zip(&rhs) {
        *v = *v + dt * *r;
    }
    w.time = w.time + dt;
    let grad = w.derivative_x().iter().fold(T::zero(), |m, g| m.max(g.abs()));
    if !(grad <= lit(GRADIENT_BLOWUP)) || w.values.iter().any(|v| !v.is_finite()) {
        return Err(GraphError::BlowUp {
            t: w.time.as_f64(),
            grad: grad.as_f64(),
        });
    }
    Ok(())
}

/// `U_t = U_xx / (1 + U_x^2) + c sqrt(1 + U_x^2)`.
pub fn step_mcf<T: Real>(u: &mut GraphField<T>, dt: T) -> Result<(), GraphError> {
    debug_assert_eq!(u.kind, GraphKind::Mcf);
    step_graph(u, dt)
}

/// `V_t = V_xx + (c/2) V_x^2`, plus `c` when the field carries the drift.
pub fn step_semilinear<T: Real>(v: &mut GraphField<T>, dt: T) -> Result<(), GraphError> {
    debug_assert!(matches!(v.kind, GraphKind::Semilinear { .. }));
    step_graph(v, dt)
}

/// Advances by exactly `span` in equal steps no larger than `dt_max`.
pub fn advance_graph<T: Real>(w: &mut GraphField<T>, span: T, dt_max: T) -> Result<(), GraphError> {
    if !(span > T::zero()) {
        return Ok(());
    }
    let n = (span / dt_max).ceil().to_usize().unwrap_or(1).max(1);
    let dt = span / T::from_usize_lossy(n);
    let t0 = w.time;
    for _ in 0..n {
        step_graph(w, dt)?;
    }
    w.time = t0 + span;
    Ok(())
}

/// Length functional `sum sqrt(1 + W_x^2) dx` over one period.
pub fn graph_length<T: Real>(w: &GraphField<T>) -> T {
    w.derivative_x().iter().map(|g| (T::one() + *g * *g).sqrt() * w.dx).sum()
}

/// Trigonometric initial graph `sum a_k cos(2 pi k x / lx + phase_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierGraph<T> {
    pub lx: T,
    /// `(k, amplitude, phase)`.
    pub modes: Vec<(usize, T, T)>,
}

impl<T: Real> FourierGraph<T> {
    pub fn single(lx: T, k: usize, amplitude: T) -> Self {
        FourierGraph {
            lx,
            modes: vec![(k, amplitude, T::zero())],
        }
    }

    pub fn eval(&self, x: T) -> T {
        let w = T::TAU() / self.lx;
        self.modes
            .iter()
            .map(|&(k, a, ph)| a * (w * T::from_usize_lossy(k) * x + ph).cos())
            .sum()
    }

    /// `max |phi_x|`, bounded by the mode sum.
    pub fn gradient_bound(&self) -> T {
        let w = T::TAU() / self.lx;
        self.modes.iter().map(|&(k, a, _)| a.abs() * w * T::from_usize_lossy(k)).sum()
    }
}

/// Sup-gap between the curvature flow and the drifted semilinear flow.
#[derive(Debug, Clone, PartialEq)]
pub struct UvComparison<T> {
    /// `(t, sup_x |U - V|)`.
    pub series: Vec<(T, T)>,
    pub max_gap: T,
    /// `max |phi_x|` of the initial graph.
    pub initial_gradient: T,
}

/// Runs both flows from `phi` (drift included in both) and records the gap
/// at `samples` evenly spaced times up to `horizon`.
pub fn compare_u_v<T: Real>(phi: &FourierGraph<T>, nx: usize, c: T, horizon: T, dt: T, samples: usize) -> Result<UvComparison<T>, GraphError> {
    let mut u = GraphField::periodic(GraphKind::Mcf, c, phi.lx, nx, |x| phi.eval(x));
    let mut v = GraphField::periodic(GraphKind::Semilinear { with_drift: true }, c, phi.lx, nx, |x| phi.eval(x));
    let gap = |u: &GraphField<T>, v: &GraphField<T>| {
        u.values
            .iter()
            .zip(&v.values)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    };
    let mut series = vec![(T::zero(), gap(&u, &v))];
    let span = horizon / T::from_usize_lossy(samples.max(1));
    for _ in 0..samples.max(1) {
        advance_graph(&mut u, span, dt)?;
        advance_graph(&mut v, span, dt)?;
        series.push((u.time, gap(&u, &v)));
    }
    let max_gap = series.iter().fold(T::zero(), |m, s| m.max(s.1));
    Ok(UvComparison {
        series,
        max_gap,
        initial_gradient: phi.gradient_bound(),
    })
}

/// Derivative norms of `V` tracked in the decay-rate experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayQuantity {
    Vx,
    Vxx,
    Vxxx,
    Vxt,
}

impl DecayQuantity {
    pub const ALL: [DecayQuantity; 4] = [DecayQuantity::Vx, DecayQuantity::Vxx, DecayQuantity::Vxxx, DecayQuantity::Vxt];

    pub fn name(self) -> &'static str {
        match self {
            DecayQuantity::Vx => "V_x",
            DecayQuantity::Vxx => "V_xx",
            DecayQuantity::Vxxx => "V_xxx",
            DecayQuantity::Vxt => "V_xt",
        }
    }
}

/// `sup |V_x|`, `sup |V_xx|`, `sup |V_xxx|`, `sup |V_xt|` by centered differences;
/// `V_t` is the scheme's own right-hand side.
pub fn derivative_sups<T: Real>(v: &GraphField<T>) -> [T; 4] {
    let n = v.values.len();
    let dx = v.dx;
    let two = lit::<T>(2.0);
    let w = &v.values;
    let at = |i: isize| w[i.rem_euclid(n as isize) as usize];
    let vt = v.rhs();
    let vt_at = |i: isize| vt[i.rem_euclid(n as isize) as usize];
    let mut out = [T::zero(); 4];
    for i in 0..n as isize {
        let d1 = (at(i + 1) - at(i - 1)) / (two * dx);
        let d2 = (at(i + 1) - two * at(i) + at(i - 1)) / (dx * dx);
        let d3 = (at(i + 2) - two * at(i + 1) + two * at(i - 1) - at(i - 2)) / (two * dx * dx * dx);
        let dxt = (vt_at(i + 1) - vt_at(i - 1)) / (two * dx);
        for (o, d) in out.iter_mut().zip([d1, d2, d3, dxt]) {
            *o = o.max(d.abs());
        }
    }
    out
}

/// Log-log least-squares slope of `sup_norm` against `t`.
pub fn decay_rate_fit<T: Real>(t: &[T], sup_norm: &[T]) -> Result<T, GraphError> {
    let (lo, hi) = t
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(a, b), &v| (a.min(v), b.max(v)));
    if !(lo > T::zero()) || hi < lo * lit(10.0) * (T::one() - lit(1e-12)) {
        return Err(GraphError::ShortSeries(lo.as_f64(), hi.as_f64()));
    }
    if let Some(s) = sup_norm.iter().find(|s| !(**s >= lit(1e-12))) {
        return Err(GraphError::FlatData(s.as_f64()));
    }
    let lt: Vec<T> = t.iter().map(|v| v.ln()).collect();
    let ls: Vec<T> = sup_norm.iter().map(|v| v.ln()).collect();
    Ok(line_fit(&lt, &ls)?.0)
}

/// Records [`derivative_sups`] of `v` at each of `times` (increasing, from `v.time`).
pub fn derivative_series<T: Real>(v: &mut GraphField<T>, times: &[T], dt: T) -> Result<Vec<[T; 4]>, GraphError> {
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let span = t - v.time;
        advance_graph(v, span, dt)?;
        out.push(derivative_sups(v));
    }
    Ok(out)
}

/// Gap between the level set and the drift-free semilinear flow started from it.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaVGap<T> {
    pub tau: T,
    /// `(t, sup_x |gamma(x, t) - V(x, t - tau)|)` for samples with `t >= tau`.
    pub series: Vec<(T, T)>,
    pub max_gap: T,
}

/// Initializes `V(., 0) = gamma(., tau)` and compares at every later sample.
pub fn gamma_vs_v<T: Real>(levels: &[LevelSet<T>], tau: T, c: T, dt: T) -> Result<GammaVGap<T>, GraphError> {
    let eps = lit::<T>(1e-9) * tau.abs().max(T::one());
    let start = levels
        .iter()
        .position(|l| (l.time - tau).abs() <= eps)
        .ok_or(GraphError::MissingHandoff(tau.as_f64()))?;
    let base = &levels[start];
    let n = base.x.len();
    let dx = if n > 1 { base.x[1] - base.x[0] } else { T::one() };
    let mut v = GraphField::new(GraphKind::Semilinear { with_drift: false }, c, dx, base.gamma.clone());
    let mut series = Vec::new();
    for l in &levels[start..] {
        if l.x.len() != n || (l.x.len() > 1 && ((l.x[1] - l.x[0]) - dx).abs() > lit::<T>(1e-12) * dx) {
            return Err(GraphError::GridMismatch(format!("{} nodes vs {n}", l.x.len())));
        }
        let span = (l.time - tau) - v.time;
        advance_graph(&mut v, span, dt)?;
        let gap = l
            .gamma
            .iter()
            .zip(&v.values)
            .fold(T::zero(), |m, (g, w)| m.max((*g - *w).abs()));
        series.push((l.time, gap));
    }
    let max_gap = series.iter().fold(T::zero(), |m, s| m.max(s.1));
    Ok(GammaVGap { tau, series, max_gap })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_graphs_translate_at_speed_c() {
        for kind in [GraphKind::Mcf, GraphKind::Semilinear { with_drift: true }] {
            let mut w = GraphField::periodic(kind, 2.0, 20.0, 64, |_| 0.0);
            let dt = 0.8 * max_graph_dt(w.dx);
            let mut expect: f64 = 0.0;
            for _ in 0..1000 {
                step_graph(&mut w, dt).unwrap();
                expect += 2.0 * dt;
                assert!(w.values.iter().all(|v| (v - expect).abs() <= 1e-13));
            }
        }
        let mut w = GraphField::periodic(GraphKind::Semilinear { with_drift: false }, 2.0, 20.0, 64, |_| 3.0);
        step_graph(&mut w, 0.01).unwrap();
        assert!(w.values.iter().all(|&v| v == 3.0));
    }

    #[test]
    fn tilted_plane_moves_at_normal_speed() {
        let eps = 0.3;
        let mut w = GraphField::new(GraphKind::Mcf, 2.0, 0.1, (0..50).map(|i| eps * 0.1 * i as f64).collect());
        w.boundary = GraphBoundary::Linear;
        let before = w.values.clone();
        let dt = 0.004;
        step_mcf(&mut w, dt).unwrap();
        let speed = 2.0 * (1.0f64 + eps * eps).sqrt();
        for (a, b) in w.values.iter().zip(before) {
            assert!(((a - b) / dt - speed).abs() < 1e-10);
        }
    }

    #[test]
    fn curvature_flow_smooths() {
        let mut w = GraphField::periodic(GraphKind::Mcf, 0.0, 20.0, 128, |x| 0.1 * (std::f64::consts::TAU * x / 20.0).cos());
        let dt = 0.5 * max_graph_dt(w.dx);
        let (mut sup, mut len) = (w.sup_abs(), graph_length(&w));
        for _ in 0..50 {
            advance_graph(&mut w, 0.5, dt).unwrap();
            let (s, l) = (w.sup_abs(), graph_length(&w));
            assert!(s < sup && l < len);
            sup = s;
            len = l;
        }
    }

    #[test]
    fn semilinear_heat_mode_decay() {
        let lx = 20.0;
        let k = std::f64::consts::TAU / lx;
        let mut v = GraphField::periodic(GraphKind::Semilinear { with_drift: false }, 0.0, lx, 128, |x| 0.1 * (k * x).cos());
        let dt = 0.5 * max_graph_dt(v.dx);
        for t in [1.0, 5.0, 10.0, 20.0] {
            let span = t - v.time;
            advance_graph(&mut v, span, dt).unwrap();
            assert!(v.sup_abs() <= 0.1 * (-k * k * t).exp() * 1.05);
        }
    }

    #[test]
    fn cole_hopf_mode() {
        // W = e^{cV/2} solves W_t = W_xx; take W = 1 + a e^{-k^2 t} cos kx
        let (c, a, lx) = (2.0, 0.5, 20.0);
        let k = std::f64::consts::TAU / lx;
        let exact = |x: f64, t: f64| (2.0 / c) * (1.0 + a * (-k * k * t).exp() * (k * x).cos()).ln();
        let mut v = GraphField::periodic(GraphKind::Semilinear { with_drift: false }, c, lx, 256, |x| exact(x, 0.0));
        let dt = 0.5 * max_graph_dt(v.dx);
        advance_graph(&mut v, 5.0, dt).unwrap();
        let err = (0..v.len()).map(|i| (v.values[i] - exact(v.x(i), 5.0)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn decay_fit_basics() {
        let t: Vec<f64> = crate::fit::log_spaced(1.0, 100.0, 50);
        let s: Vec<f64> = t.iter().map(|t| t.powf(-0.5)).collect();
        assert!((decay_rate_fit(&t, &s).unwrap() + 0.5).abs() < 1e-12);
        assert!(matches!(decay_rate_fit(&t[..10], &s[..10]), Err(GraphError::ShortSeries(..))));
        let z = vec![0.0; 50];
        assert!(matches!(decay_rate_fit(&t, &z), Err(GraphError::FlatData(_))));
    }

    #[test]
    fn flat_u_v_gap_is_zero() {
        let phi = FourierGraph::single(20.0, 1, 0.0);
        let cmp = compare_u_v(&phi, 64, 2.0, 5.0, 0.01, 5).unwrap();
        assert!(cmp.max_gap < 1e-12);
    }
}
