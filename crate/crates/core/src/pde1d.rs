//! Moving-frame equation `u_t = u_zz + c u_z + f(u)` on a truncated line.
//!
//! Explicit Euler in time, centered second-order differences in space. The
//! update is a convex combination of neighbouring values (plus the reaction
//! increment) when
//!
//! * `dt <= dz^2 / 2` (diffusion), and
//! * `|c| dz / 2 <= 1` (cell Peclet number),
//!
//! which is what keeps `0 <= u <= 1` exactly. Both are checked by [`step`].

use rayon::prelude::*;
use thiserror::Error;

use crate::fit::{least_squares, FitError};
use crate::profile::{FrontProfile, ProfileError};
use crate::reaction::ReactionTerm;
use crate::scalar::{lit, Real};

/// Abort threshold of the instability detector.
pub const BLOWUP_BOUND: f64 = 10.0;
/// Minimum node count in `z`.
pub const MIN_NODES: usize = 64;
/// Nodes per parallel chunk.
const CHUNK: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("grid needs at least {MIN_NODES} nodes in z, got {0}")]
    GridTooSmall(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("dt = {dt} exceeds the stability bound {limit}")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("cell Peclet number |c| dz / 2 = {0} exceeds 1")]
    Peclet(f64),
    #[error("instability at t = {t}, z = {z}: u = {u}")]
    Unstable { t: f64, z: f64, u: f64 },
    #[error("no crossing of level {0}")]
    NoCrossing(f64),
    #[error("u_z >= 0 at the crossing z = {0}")]
    NonMonotone(f64),
    #[error("{count} crossings of the level inside the band")]
    MultipleCrossings { count: usize },
    #[error("tail contamination: u = {u:e} at z = {z}")]
    TailContamination { z: f64, u: f64 },
    #[error("fit window [{0}, {1}] spans less than a decade")]
    WindowTooNarrow(f64, f64),
    #[error("no admissible shift in [{0}, {1}]")]
    NoAdmissibleShift(f64, f64),
    #[error("band |u - level| <= margin contains no nodes")]
    EmptyBand,
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Uniform grid on `[z_lo, z_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D<T> {
    pub z_lo: T,
    pub z_hi: T,
    pub nz: usize,
}

impl<T: Real> Grid1D<T> {
    pub fn new(z_lo: T, z_hi: T, nz: usize) -> Result<Self, SolverError> {
        if nz < MIN_NODES {
            return Err(SolverError::GridTooSmall(nz));
        }
        if !(z_hi > z_lo) || !z_lo.is_finite() || !z_hi.is_finite() {
            return Err(SolverError::InvalidGrid(format!("z range [{z_lo}, {z_hi}]")));
        }
        Ok(Grid1D { z_lo, z_hi, nz })
    }

    /// Grid with spacing as close as possible to `dz`.
    pub fn with_spacing(z_lo: T, z_hi: T, dz: T) -> Result<Self, SolverError> {
        let n = ((z_hi - z_lo) / dz).round().to_usize().unwrap_or(0) + 1;
        Self::new(z_lo, z_hi, n)
    }

    #[inline]
    pub fn dz(&self) -> T {
        (self.z_hi - self.z_lo) / T::from_usize_lossy(self.nz - 1)
    }

    #[inline]
    pub fn z(&self, i: usize) -> T {
        self.z_lo + self.dz() * T::from_usize_lossy(i)
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.nz).map(|i| self.z(i)).collect()
    }

    /// Same extent, spacing halved.
    pub fn refined(&self) -> Self {
        Grid1D {
            nz: 2 * self.nz - 1,
            ..*self
        }
    }
}

/// Boundary rows: `u = 1` on the left and `u = 0` on the right, or zero flux
/// at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Dirichlet,
    NeumannZero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field1D<T> {
    pub grid: Grid1D<T>,
    pub values: Vec<T>,
    pub time: T,
    pub bc: Boundary,
}

impl<T: Real> Field1D<T> {
    pub fn new(grid: Grid1D<T>, values: Vec<T>, bc: Boundary) -> Self {
        assert_eq!(values.len(), grid.nz, "one value per node");
        let mut u = Field1D {
            grid,
            values,
            time: T::zero(),
            bc,
        };
        u.apply_bc();
        u
    }

    pub fn from_fn(grid: Grid1D<T>, bc: Boundary, g: impl Fn(T) -> T) -> Self {
        let values = (0..grid.nz).map(|i| g(grid.z(i))).collect();
        Self::new(grid, values, bc)
    }

    fn apply_bc(&mut self) {
        if self.bc == Boundary::Dirichlet {
            let n = self.values.len();
            self.values[0] = T::one();
            self.values[n - 1] = T::zero();
        }
    }

    pub fn min_max(&self) -> (T, T) {
        self.values
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Value at an arbitrary `z` by linear interpolation, clamped to the grid.
    pub fn sample(&self, z: T) -> T {
        let s = ((z - self.grid.z_lo) / self.grid.dz())
            .max(T::zero())
            .min(T::from_usize_lossy(self.grid.nz - 1));
        let i = s.floor().to_usize().unwrap_or(0).min(self.grid.nz - 2);
        let th = s - T::from_usize_lossy(i);
        self.values[i] * (T::one() - th) + self.values[i + 1] * th
    }

    /// Appends zero nodes on the right until the grid reaches `z_hi`.
    pub fn widen_right(&mut self, z_hi: T) {
        let dz = self.grid.dz();
        let extra = ((z_hi - self.grid.z_hi) / dz).ceil().to_usize().unwrap_or(0);
        if extra == 0 {
            return;
        }
        let last = self.values.len() - 1;
        let edge = if self.bc == Boundary::NeumannZero { self.values[last] } else { T::zero() };
        self.values.extend(std::iter::repeat(edge).take(extra));
        self.grid = Grid1D {
            z_lo: self.grid.z_lo,
            z_hi: self.grid.z_hi + dz * T::from_usize_lossy(extra),
            nz: self.grid.nz + extra,
        };
    }
}

/// Largest `dt` accepted by [`step`] on a grid of spacing `dz`.
pub fn max_stable_dt<T: Real>(dz: T) -> T {
    dz * dz / lit(2.0)
}

/// Default time step: 80% of the diffusive limit.
pub fn default_dt<T: Real>(dz: T) -> T {
    max_stable_dt(dz) * lit(0.8)
}

pub(crate) fn check_stability<T: Real>(dz: T, c: T, dt: T, extra_diffusion: T) -> Result<(), SolverError> {
    let peclet = c.abs() * dz / lit(2.0);
    if peclet > T::one() {
        return Err(SolverError::Peclet(peclet.as_f64()));
    }
    // 2 dt / dz^2 plus any transverse contribution must stay <= 1
    let limit = T::one() / (lit::<T>(2.0) / (dz * dz) + extra_diffusion);
    if dt > limit * (T::one() + lit(1e-12)) {
        return Err(SolverError::StepTooLarge {
            dt: dt.as_f64(),
            limit: limit.as_f64(),
        });
    }
    Ok(())
}

/// Explicit update of the nodes `start..start + out.len()` (all interior).
#[inline(always)]
pub(crate) fn update_run<T: Real>(old: &[T], out: &mut [T], start: usize, dt: T, inv_dz2: T, cd: T, f: &ReactionTerm<T>) {
    let src = &old[start - 1..start + out.len() + 1];
    for (o, w) in out.iter_mut().zip(src.windows(3)) {
        let (um, u0, up) = (w[0], w[1], w[2]);
        *o = u0 + dt * ((up - u0 - u0 + um) * inv_dz2 + cd * (up - um) + f.eval(u0));
    }
}

/// Moving-frame right-hand side at interior node `i` of a line.
#[inline(always)]
pub(crate) fn line_rhs<T: Real>(u: &[T], i: usize, inv_dz2: T, c_half_inv_dz: T, f: &ReactionTerm<T>) -> T {
    let (um, u0, up) = (u[i - 1], u[i], u[i + 1]);
    (up - u0 - u0 + um) * inv_dz2 + c_half_inv_dz * (up - um) + f.eval(u0)
}

/// Advances `u` by one explicit step. The boundary rows are held (Dirichlet)
/// or mirrored (zero flux).
pub fn step<T: Real>(u: &mut Field1D<T>, f: &ReactionTerm<T>, c: T, dt: T) -> Result<(), SolverError> {
    let mut scratch = Vec::new();
    step_with(u, f, c, dt, &mut scratch)
}

/// [`step`] with a caller-owned scratch buffer.
pub fn step_with<T: Real>(
    u: &mut Field1D<T>,
    f: &ReactionTerm<T>,
    c: T,
    dt: T,
    scratch: &mut Vec<T>,
) -> Result<(), SolverError> {
    let dz = u.grid.dz();
    check_stability(dz, c, dt, T::zero())?;
    let n = u.values.len();
    scratch.clear();
    scratch.resize(n, T::zero());
    let inv_dz2 = T::one() / (dz * dz);
    let cd = c / (dz + dz);
    let old = &u.values;
    scratch[0] = old[0];
    scratch[n - 1] = old[n - 1];
    let interior = &mut scratch[1..n - 1];
    if interior.len() > 2 * CHUNK {
        interior
            .par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(k, out)| update_run(old, out, 1 + k * CHUNK, dt, inv_dz2, cd, f));
    } else {
        update_run(old, interior, 1, dt, inv_dz2, cd, f);
    }
    if u.bc == Boundary::NeumannZero {
        // ghost node mirrors the first interior neighbour
        let ghost = |a: T, b: T| a + dt * ((b - a) * (inv_dz2 + inv_dz2) + f.eval(a));
        scratch[0] = ghost(old[0], old[1]);
        scratch[n - 1] = ghost(old[n - 1], old[n - 2]);
    }
    std::mem::swap(&mut u.values, scratch);
    u.time = u.time + dt;
    check_finite_bounded(&u.values, u.time, |i| u.grid.z(i))
}

pub(crate) fn check_finite_bounded<T: Real>(v: &[T], t: T, z: impl Fn(usize) -> T) -> Result<(), SolverError> {
    let bound = lit::<T>(BLOWUP_BOUND);
    match v.iter().position(|x| !(x.abs() <= bound)) {
        None => Ok(()),
        Some(i) => Err(SolverError::Unstable {
            t: t.as_f64(),
            z: z(i).as_f64(),
            u: v[i].as_f64(),
        }),
    }
}

/// Discrete right-hand side `D2 u + c D1 u + f(u)` at interior nodes (zero at
/// the boundary rows). For a sampled traveling wave this is its truncation error.
pub fn discrete_residual<T: Real>(u: &Field1D<T>, f: &ReactionTerm<T>, c: T) -> Vec<T> {
    let dz = u.grid.dz();
    let inv_dz2 = T::one() / (dz * dz);
    let cd = c / (dz + dz);
    let n = u.values.len();
    (0..n)
        .map(|i| {
            if i == 0 || i == n - 1 {
                T::zero()
            } else {
                line_rhs(&u.values, i, inv_dz2, cd, f)
            }
        })
        .collect()
}

/// Runs `steps` steps of size `dt` and sets the clock to `t0 + steps * dt`
/// (no accumulated rounding in the time variable).
pub fn advance<T: Real>(u: &mut Field1D<T>, f: &ReactionTerm<T>, c: T, dt: T, steps: usize) -> Result<(), SolverError> {
    let t0 = u.time;
    let mut scratch = Vec::with_capacity(u.values.len());
    for _ in 0..steps {
        step_with(u, f, c, dt, &mut scratch)?;
    }
    u.time = t0 + dt * T::from_usize_lossy(steps);
    Ok(())
}

/// Position of the crossing of `level`, by linear interpolation between the
/// bracketing nodes. With a `band`, only crossings inside it count.
pub fn level_position<T: Real>(u: &Field1D<T>, level: T, band: Option<(T, T)>) -> Result<T, SolverError> {
    level_crossing(&u.values, u.grid.z_lo, u.grid.dz(), level, band)
}

pub(crate) fn level_crossing<T: Real>(v: &[T], z_lo: T, dz: T, level: T, band: Option<(T, T)>) -> Result<T, SolverError> {
    let mut found: Option<(usize, T)> = None;
    let mut count = 0;
    for i in 0..v.len() - 1 {
        let (a, b) = (v[i] - level, v[i + 1] - level);
        let crosses = (a >= T::zero() && b < T::zero()) || (a < T::zero() && b >= T::zero());
        if !crosses {
            continue;
        }
        let th = a / (a - b);
        let z = z_lo + dz * (T::from_usize_lossy(i) + th);
        if let Some((lo, hi)) = band {
            if z < lo || z > hi {
                continue;
            }
        }
        count += 1;
        if found.is_none() {
            found = Some((i, z));
        }
    }
    match (found, count) {
        (None, _) => Err(SolverError::NoCrossing(level.as_f64())),
        (Some(_), n) if n > 1 => Err(SolverError::MultipleCrossings { count: n }),
        (Some((i, z)), _) => {
            if v[i + 1] >= v[i] {
                Err(SolverError::NonMonotone(z.as_f64()))
            } else {
                Ok(z)
            }
        }
    }
}

/// Minimum of the centered difference `-u_z` over interior nodes with
/// `|u - level| <= margin`.
pub fn min_slope_in_band<T: Real>(u: &Field1D<T>, level: T, margin: T) -> Result<T, SolverError> {
    min_slope_line(&u.values, u.grid.dz(), level, margin).ok_or(SolverError::EmptyBand)
}

pub(crate) fn min_slope_line<T: Real>(v: &[T], dz: T, level: T, margin: T) -> Option<T> {
    let mut best: Option<T> = None;
    for i in 1..v.len() - 1 {
        if (v[i] - level).abs() <= margin {
            let s = (v[i - 1] - v[i + 1]) / (dz + dz);
            best = Some(best.map_or(s, |b: T| b.min(s)));
        }
    }
    best
}

/// Initial data.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData<T> {
    /// `1` left of `at`, `0` right of it, with two intermediate nodes `2/3`, `1/3`.
    Step { at: T },
    /// `min(1, k e^{lambda z})` with `lambda < 0`.
    ExpTail { k: T, lambda: T },
    /// `phi(z - shift)` for a supplied profile.
    ShiftedProfile { shift: T },
    Constant(T),
}

impl<T: Real> InitialData<T> {
    pub fn build(&self, grid: Grid1D<T>, bc: Boundary, profile: Option<&FrontProfile<T>>) -> Result<Field1D<T>, SolverError> {
        let field = match self {
            InitialData::Step { at } => {
                let first = (0..grid.nz).find(|&i| grid.z(i) >= *at).unwrap_or(grid.nz);
                let values = (0..grid.nz)
                    .map(|i| {
                        if i < first {
                            T::one()
                        } else if i == first {
                            lit(2.0 / 3.0)
                        } else if i == first + 1 {
                            lit(1.0 / 3.0)
                        } else {
                            T::zero()
                        }
                    })
                    .collect();
                Field1D::new(grid, values, bc)
            }
            InitialData::ExpTail { k, lambda } => Field1D::from_fn(grid, bc, |z| (*k * (*lambda * z).exp()).min(T::one())),
            InitialData::ShiftedProfile { shift } => {
                let p = profile.ok_or(SolverError::InvalidGrid("shifted profile needs a profile".into()))?;
                let wide = p.with_tails(grid.z_lo - *shift, grid.z_hi - *shift);
                let values = (0..grid.nz)
                    .map(|i| wide.value(grid.z(i) - *shift))
                    .collect::<Result<Vec<T>, _>>()?;
                Field1D::new(grid, values, bc)
            }
            InitialData::Constant(v) => Field1D::from_fn(grid, bc, |_| *v),
        };
        Ok(field)
    }
}

/// What to do when the right tail is no longer negligible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TailPolicy {
    #[default]
    Widen,
    Fail,
}

/// `u` at `z_hi - TAIL_PROBE_OFFSET` must stay below `TAIL_PROBE_LEVEL`.
pub const TAIL_PROBE_OFFSET: f64 = 5.0;
pub const TAIL_PROBE_LEVEL: f64 = 1e-6;

fn tail_check<T: Real>(u: &mut Field1D<T>, policy: TailPolicy) -> Result<bool, SolverError> {
    let z = u.grid.z_hi - lit(TAIL_PROBE_OFFSET);
    let v = u.sample(z);
    if v.abs() < lit(TAIL_PROBE_LEVEL) {
        return Ok(false);
    }
    match policy {
        TailPolicy::Fail => Err(SolverError::TailContamination { z: z.as_f64(), u: v.as_f64() }),
        TailPolicy::Widen => {
            let width = u.grid.z_hi - u.grid.z_lo;
            u.widen_right(u.grid.z_hi + width * lit(0.5));
            Ok(true)
        }
    }
}

/// One sample of a front trace; `sigma = xi + c t` is the lab-frame position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample<T> {
    pub t: T,
    pub xi: T,
    pub sigma: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontTrace<T> {
    pub c: T,
    pub samples: Vec<TraceSample<T>>,
    /// Number of times the domain was widened.
    pub widenings: usize,
    /// Extremes of `u` over all sampled states.
    pub corridor: (T, T),
}

impl<T: Real> FrontTrace<T> {
    /// `xi(T) - xi(T/2)`, with `xi(T/2)` taken at the sample nearest `T/2`.
    pub fn convergence_gap(&self) -> Option<T> {
        let last = self.samples.last()?;
        let half = last.t / lit(2.0);
        let mid = self
            .samples
            .iter()
            .min_by(|a, b| (a.t - half).abs().partial_cmp(&(b.t - half).abs()).unwrap())?;
        Some(last.xi - mid.xi)
    }

    pub fn times(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn sigmas(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.sigma).collect()
    }
}

/// Evolves `u` to each time in `sample_times` (increasing) and records the
/// moving-frame position `xi(t)` of `level`.
pub fn run_front_convergence<T: Real>(
    u: &mut Field1D<T>,
    f: &ReactionTerm<T>,
    c: T,
    dt: T,
    sample_times: &[T],
    level: T,
    policy: TailPolicy,
) -> Result<FrontTrace<T>, SolverError> {
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut widenings = 0;
    let mut corridor = u.min_max();
    let mut scratch = Vec::with_capacity(u.values.len());
    // the clock is t_start + k dt, so sample times land on exact multiples
    let t_start = u.time;
    let mut k: usize = 0;
    for &ts in sample_times {
        let target = ((ts - t_start) / dt).round().to_usize().unwrap_or(0);
        while k < target {
            step_with(u, f, c, dt, &mut scratch)?;
            k += 1;
            u.time = t_start + dt * T::from_usize_lossy(k);
            if k % 256 == 0 && tail_check(u, policy)? {
                widenings += 1;
            }
        }
        if tail_check(u, policy)? {
            widenings += 1;
        }
        let (lo, hi) = u.min_max();
        corridor = (corridor.0.min(lo), corridor.1.max(hi));
        let xi = level_position(u, level, None)?;
        samples.push(TraceSample {
            t: u.time,
            xi,
            sigma: xi + c * u.time,
        });
    }
    Ok(FrontTrace {
        c,
        samples,
        widenings,
        corridor,
    })
}

/// `n` sample times uniformly spaced on `(0, horizon]`.
pub fn uniform_times<T: Real>(horizon: T, n: usize) -> Vec<T> {
    (1..=n)
        .map(|i| horizon * T::from_usize_lossy(i) / T::from_usize_lossy(n))
        .collect()
}

/// Speed of the discrete traveling wave of the scheme on spacing `dz`.
///
/// The scheme's wave speed differs from the continuous `c` by `O(dz^2)`,
/// which shows up as a linear drift of `xi(t)` in the frame moving at `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameCalibration<T> {
    /// Frame speed used during calibration.
    pub c_reference: T,
    /// `c_reference` plus the measured drift of `xi`.
    pub c_discrete: T,
    /// RMS residual of the linear drift fit.
    pub rms: T,
}

/// Starts from the sampled profile, runs `horizon` time units in the frame
/// moving at `p.c()` and fits `xi(t)` linearly over the second half.
pub fn calibrate_frame_speed<T: Real>(
    f: &ReactionTerm<T>,
    p: &FrontProfile<T>,
    grid: Grid1D<T>,
    dt: T,
    horizon: T,
) -> Result<FrameCalibration<T>, SolverError> {
    let c = p.c();
    let mut u = InitialData::ShiftedProfile { shift: T::zero() }.build(grid, Boundary::Dirichlet, Some(p))?;
    let times = uniform_times(horizon, 64);
    let trace = run_front_convergence(&mut u, f, c, dt, &times, lit(0.5), TailPolicy::Fail)?;
    let half = horizon / lit(2.0);
    let (t, xi): (Vec<T>, Vec<T>) = trace.samples.iter().filter(|s| s.t >= half).map(|s| (s.t, s.xi)).unzip();
    let (slope, _, rms) = crate::fit::line_fit(&t, &xi)?;
    Ok(FrameCalibration {
        c_reference: c,
        c_discrete: c + slope,
        rms,
    })
}

/// Model for the lab-frame position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShiftModel {
    /// `sigma = c t + r ln t + s`.
    #[default]
    Plain,
    /// Adds a `d / sqrt(t)` term, the leading correction for pulled fronts.
    DiffusiveCorrection,
}

/// `sigma(t) ~ c_fit t + r ln t + s (+ d t^{-1/2})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftFit<T> {
    pub c_fit: T,
    pub r: T,
    pub s: T,
    /// Coefficient of `t^{-1/2}`; zero for the plain model.
    pub d: T,
    pub rms: T,
    pub window: (T, T),
    pub samples: usize,
}

/// Least-squares fit of the samples with `t` in `window`; the window must
/// span at least a decade.
pub fn fit_log_shift<T: Real>(t: &[T], sigma: &[T], window: (T, T), model: ShiftModel) -> Result<ShiftFit<T>, SolverError> {
    assert_eq!(t.len(), sigma.len());
    let (a, b) = window;
    if !(a > T::zero()) || b < a * lit(10.0) * (T::one() - lit(1e-12)) {
        return Err(SolverError::WindowTooNarrow(a.as_f64(), b.as_f64()));
    }
    let eps = (b - a) * lit(1e-9);
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (&ti, &si) in t.iter().zip(sigma) {
        if ti < a - eps || ti > b + eps {
            continue;
        }
        let mut row = vec![ti, ti.ln(), T::one()];
        if model == ShiftModel::DiffusiveCorrection {
            row.push(T::one() / ti.sqrt());
        }
        rows.push(row);
        rhs.push(si);
    }
    let fit = least_squares(&rows, &rhs)?;
    Ok(ShiftFit {
        c_fit: fit.coeffs[0],
        r: fit.coeffs[1],
        s: fit.coeffs[2],
        d: fit.coeffs.get(3).copied().unwrap_or(T::zero()),
        rms: fit.rms_residual,
        window,
        samples: rows.len(),
    })
}

/// Tight translates bounding `u` up to `delta`:
/// `u <= phi(z - upper) + delta` and `phi(z - lower) - delta <= u` on the grid,
/// with `upper` as small and `lower` as large as possible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sandwich<T> {
    /// Smallest shift whose translate plus `delta` lies above `u`.
    pub upper: T,
    /// Largest shift whose translate minus `delta` lies below `u`.
    pub lower: T,
}

impl<T: Real> Sandwich<T> {
    /// `lower - upper`; nonnegative when `u` is `delta`-close to one translate family.
    pub fn width(&self) -> T {
        self.lower - self.upper
    }

    pub fn ordered(&self) -> bool {
        self.upper <= self.lower
    }
}

/// Bisection for the [`Sandwich`] shifts within `[-range, range]`.
pub fn sandwich_shifts<T: Real>(u: &Field1D<T>, p: &FrontProfile<T>, delta: T, range: T) -> Result<Sandwich<T>, SolverError> {
    let grid = u.grid;
    let wide = p.with_tails(grid.z_lo - range - p.dz(), grid.z_hi + range + p.dz());
    let translate = |s: T| -> Result<Vec<T>, SolverError> {
        (0..grid.nz)
            .map(|i| wide.value(grid.z(i) - s).map_err(SolverError::from))
            .collect()
    };
    // phi(z - s) increases with s, so both admissible sets are intervals in s
    let above = |s: T| -> Result<bool, SolverError> {
        Ok(translate(s)?.iter().zip(&u.values).all(|(phi, v)| *v <= *phi + delta))
    };
    let below = |s: T| -> Result<bool, SolverError> {
        Ok(translate(s)?.iter().zip(&u.values).all(|(phi, v)| *phi - delta <= *v))
    };
    let (lo, hi) = (-range, range);
    let err = || SolverError::NoAdmissibleShift(lo.as_f64(), hi.as_f64());
    if !above(hi)? || !below(lo)? {
        return Err(err());
    }
    let tol = grid.dz() * lit(1e-6);
    let upper = if above(lo)? {
        lo
    } else {
        bisect(lo, hi, tol, |s| above(s))?
    };
    let lower = if below(hi)? {
        hi
    } else {
        let b = bisect(lo, hi, tol, |s| below(s).map(|ok| !ok))?;
        b - tol
    };
    Ok(Sandwich { upper, lower })
}

/// Smallest `s` in `(a, b]` with `pred(s)` true, for `pred` false at `a` and
/// true at `b` and monotone in between.
fn bisect<T: Real>(mut a: T, mut b: T, tol: T, mut pred: impl FnMut(T) -> Result<bool, SolverError>) -> Result<T, SolverError> {
    while b - a > tol {
        let m = (a + b) * lit(0.5);
        if pred(m)? {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{exact_hadeler_rothe, ProfileGrid};

    fn hr4() -> ReactionTerm<f64> {
        ReactionTerm::hadeler_rothe(4.0).unwrap()
    }

    #[test]
    fn equilibria_are_exact() {
        let g = Grid1D::new(-10.0, 10.0, 201).unwrap();
        let f = hr4();
        for v in [0.0, 1.0] {
            let mut u = Field1D::from_fn(g, Boundary::NeumannZero, |_| v);
            advance(&mut u, &f, 2.0, 0.004, 100).unwrap();
            assert!(u.values.iter().all(|&x| x == v));
        }
    }

    #[test]
    fn rejects_unstable_steps() {
        let g = Grid1D::new(-10.0, 10.0, 201).unwrap();
        let mut u = Field1D::from_fn(g, Boundary::Dirichlet, |z| if z < 0.0 { 1.0 } else { 0.0 });
        assert!(matches!(step(&mut u, &hr4(), 2.0, 0.006), Err(SolverError::StepTooLarge { .. })));
        let coarse = Grid1D::new(-100.0, 100.0, 64).unwrap();
        let mut u = Field1D::from_fn(coarse, Boundary::Dirichlet, |_| 0.0);
        assert!(matches!(step(&mut u, &hr4(), 2.0, 1.0), Err(SolverError::Peclet(_))));
        assert!(Grid1D::new(0.0, 1.0, 10).is_err());
    }

    #[test]
    fn level_position_cases() {
        let p = exact_hadeler_rothe(4.0, ProfileGrid { z_lo: -30.0, z_hi: 30.0, dz: 0.01 }).unwrap();
        let g = Grid1D::<f64>::with_spacing(-20.0, 20.0, 0.05).unwrap();
        let dz2 = g.dz() * g.dz();
        let u = Field1D::from_fn(g, Boundary::Dirichlet, |z| p.value(z).unwrap());
        assert!(level_position(&u, 0.5, None).unwrap().abs() <= dz2);
        let u = Field1D::from_fn(g, Boundary::Dirichlet, |z| p.value(z - 1.7).unwrap());
        assert!((level_position(&u, 0.5, None).unwrap() - 1.7).abs() <= dz2);
        let u = Field1D::from_fn(g, Boundary::NeumannZero, |_| 0.2);
        assert_eq!(level_position(&u, 0.5, None), Err(SolverError::NoCrossing(0.5)));
        let u = Field1D::from_fn(g, Boundary::NeumannZero, |z| 0.5 - 0.1 * (z / 3.0).sin());
        assert!(matches!(level_position(&u, 0.5, None), Err(SolverError::MultipleCrossings { .. })));
        let z: f64 = level_position(&u, 0.5, Some((-1.0, 1.0))).unwrap();
        assert!(z.abs() < 1e-12);
        let u = Field1D::from_fn(g, Boundary::NeumannZero, |z| 0.5 + 0.1 * z.tanh());
        assert!(matches!(level_position(&u, 0.5, None), Err(SolverError::NonMonotone(_))));
    }

    #[test]
    fn log_shift_fit_recovers_models() {
        let t: Vec<f64> = crate::fit::log_spaced(50.0, 500.0, 120);
        let s: Vec<f64> = t.iter().map(|&t| 2.0 * t - 1.5 * t.ln() + 3.0).collect();
        let fit = fit_log_shift(&t, &s, (50.0, 500.0), ShiftModel::Plain).unwrap();
        assert!((fit.c_fit - 2.0).abs() < 1e-10 && (fit.r + 1.5).abs() < 1e-9 && (fit.s - 3.0).abs() < 1e-8);
        let s: Vec<f64> = t.iter().map(|&t| 2.1213 * t + 5.0).collect();
        let fit = fit_log_shift(&t, &s, (50.0, 500.0), ShiftModel::Plain).unwrap();
        assert!(fit.r.abs() <= 1e-10);
        let s: Vec<f64> = t.iter().map(|&t| 2.0 * t - 1.5 * t.ln() + 1.0 - 5.3 / t.sqrt()).collect();
        let fit = fit_log_shift(&t, &s, (50.0, 500.0), ShiftModel::DiffusiveCorrection).unwrap();
        assert!((fit.r + 1.5).abs() < 1e-8 && (fit.d + 5.3).abs() < 1e-6);
        assert!(matches!(
            fit_log_shift(&t, &s, (50.0, 400.0), ShiftModel::Plain),
            Err(SolverError::WindowTooNarrow(..))
        ));
    }

    #[test]
    fn sandwich_of_translates() {
        let p = exact_hadeler_rothe(4.0, ProfileGrid::default()).unwrap();
        let g = Grid1D::<f64>::with_spacing(-30.0, 30.0, 0.05).unwrap();
        for shift in [0.0f64, 1.0] {
            let u = InitialData::ShiftedProfile { shift }.build(g, Boundary::Dirichlet, Some(&p)).unwrap();
            let sw = sandwich_shifts(&u, &p, 1e-6, 10.0).unwrap();
            assert!(sw.ordered());
            assert!((sw.upper - shift).abs() <= g.dz() && (sw.lower - shift).abs() <= g.dz(), "{sw:?}");
        }
    }

    #[test]
    fn step_data_shape() {
        let g = Grid1D::<f64>::new(-1.0, 1.0, 201).unwrap();
        let u = InitialData::Step { at: 0.0 }.build(g, Boundary::Dirichlet, None).unwrap();
        let i = 100;
        assert_eq!((u.values[i - 1], u.values[i + 2]), (1.0, 0.0));
        assert!((u.values[i] - 2.0 / 3.0).abs() < 1e-15 && (u.values[i + 1] - 1.0 / 3.0).abs() < 1e-15);
    }
}
