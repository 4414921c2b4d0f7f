//! Traveling-wave profiles `phi'' + c phi' + f(phi) = 0`, `phi(-inf) = 1`,
//! `phi(+inf) = 0`, built by shooting from the saddle `(1, 0)`.
//!
//! Profiles are stored on a uniform grid together with their exact
//! derivative, so the interpolant is a cubic Hermite spline and the second
//! derivative at any point follows from the equation itself.

use std::fmt;

use thiserror::Error;

use crate::fit::{line_fit, FitError};
use crate::ode::{integrate, Control, DenseStep, OdeFailure, OdeOptions};
use crate::reaction::{lambda_roots, CharacteristicExponents, ReactionError, ReactionTerm};
use crate::scalar::{lit, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("trajectory crossed phi = 0 at z = {z} with phi' < 0: speed {c} is below the minimal speed")]
    Overshoot { c: f64, z: f64 },
    #[error("trajectory turned back (phi' >= 0) at phi = {phi}, c = {c}")]
    NonMonotone { c: f64, phi: f64 },
    #[error("phi did not reach {target:e} before z = {z_max}")]
    DomainTooSmall { target: f64, z_max: f64 },
    #[error("integration failed: {0:?}")]
    Integration(OdeFailure),
    #[error("z = {z} outside stored profile range [{lo}, {hi}]")]
    OutOfDomain { z: f64, lo: f64, hi: f64 },
    #[error("decay window holds {0} grid points, need at least 10")]
    WindowTooShort(usize),
    #[error("profile not positive at z = {0} inside decay window")]
    NonPositiveInWindow(f64),
    #[error("decay window reaches phi = {phi} at z = {z}; tail region requires phi < 1e-2")]
    WindowOutsideTail { z: f64, phi: f64 },
    #[error("minimal-speed bracket did not close after {0} expansions")]
    BracketExpansion(usize),
    #[error("speed criterion says {speed}, decay criterion says {decay} (measured {measured}, lambda_- = {lambda_minus})")]
    Inconsistent {
        speed: &'static str,
        decay: &'static str,
        measured: f64,
        lambda_minus: f64,
    },
    #[error("exact profile needs nu > 2, got {0}")]
    NuNotPushed(f64),
    #[error(transparent)]
    Reaction(#[from] ReactionError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Shooting and storage settings.
#[derive(Debug, Clone, Copy)]
pub struct ProfileOptions<T> {
    /// Launch point `phi = 1 - start_offset` on the unstable manifold of `(1, 0)`.
    pub start_offset: T,
    /// Storage stops once `phi` drops below this value.
    pub stop_phi: T,
    /// Integration continues (unstored) down to this value to detect late overshoot.
    pub settle_phi: T,
    /// Storage grid spacing.
    pub dz: T,
    pub rtol: T,
    /// Abort with `DomainTooSmall` past this arclength.
    pub z_max: T,
}

impl<T: Real> Default for ProfileOptions<T> {
    fn default() -> Self {
        let tiny = T::min_positive_value().sqrt().sqrt();
        ProfileOptions {
            start_offset: lit(1e-9),
            stop_phi: lit(1e-8),
            settle_phi: lit::<T>(1e-40).max(tiny),
            dz: lit(0.01),
            rtol: lit(1e-10),
            z_max: lit(5000.0),
        }
    }
}

/// Value and first two derivatives of a profile at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint<T> {
    pub phi: T,
    pub dphi: T,
    pub d2phi: T,
}

/// A traveling-wave profile on a uniform grid, normalized so `phi(0) = 1/2`
/// for shot profiles.
#[derive(Debug, Clone)]
pub struct FrontProfile<T> {
    c: T,
    z_lo: T,
    dz: T,
    phi: Vec<T>,
    phi_prime: Vec<T>,
    exponents: CharacteristicExponents<T>,
    decay_exponent_measured: Option<T>,
    reaction: ReactionTerm<T>,
}

impl<T: Real> FrontProfile<T> {
    /// Wraps sampled data. `phi_prime` must be the derivative of `phi`.
    pub fn from_samples(
        reaction: ReactionTerm<T>,
        c: T,
        z_lo: T,
        dz: T,
        phi: Vec<T>,
        phi_prime: Vec<T>,
    ) -> Result<Self, ProfileError> {
        assert_eq!(phi.len(), phi_prime.len());
        assert!(phi.len() >= 2 && dz > T::zero());
        let exponents = lambda_roots(reaction.fprime0(), c)?;
        let mut p = FrontProfile {
            c,
            z_lo,
            dz,
            phi,
            phi_prime,
            exponents,
            decay_exponent_measured: None,
            reaction,
        };
        if let Ok(window) = p.default_decay_window() {
            p.decay_exponent_measured = measure_decay_exponent(&p, window).ok();
        }
        Ok(p)
    }

    pub fn c(&self) -> T {
        self.c
    }

    pub fn reaction(&self) -> &ReactionTerm<T> {
        &self.reaction
    }

    pub fn exponents(&self) -> CharacteristicExponents<T> {
        self.exponents
    }

    /// Tail log-slope over the default window, if the stored tail reaches it.
    pub fn decay_exponent_measured(&self) -> Option<T> {
        self.decay_exponent_measured
    }

    pub fn dz(&self) -> T {
        self.dz
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn z_lo(&self) -> T {
        self.z_lo
    }

    pub fn z_hi(&self) -> T {
        self.z(self.phi.len() - 1)
    }

    #[inline]
    pub fn z(&self, i: usize) -> T {
        self.z_lo + self.dz * T::from_usize_lossy(i)
    }

    pub fn z_grid(&self) -> Vec<T> {
        (0..self.phi.len()).map(|i| self.z(i)).collect()
    }

    pub fn phi(&self) -> &[T] {
        &self.phi
    }

    pub fn phi_prime(&self) -> &[T] {
        &self.phi_prime
    }

    fn second_derivative(&self, phi: T, dphi: T) -> T {
        -self.c * dphi - self.reaction.eval(phi)
    }

    /// Hermite interpolation of `(phi, phi')`; `phi''` from the profile equation.
    pub fn eval(&self, z: T) -> Result<ProfilePoint<T>, ProfileError> {
        let n = self.phi.len();
        let s = (z - self.z_lo) / self.dz;
        let last = T::from_usize_lossy(n - 1);
        let slack = lit::<T>(1e-9);
        if !(s >= -slack && s <= last + slack) {
            return Err(ProfileError::OutOfDomain {
                z: z.as_f64(),
                lo: self.z_lo.as_f64(),
                hi: self.z_hi().as_f64(),
            });
        }
        let s = s.max(T::zero()).min(last);
        let i = s.floor().to_usize().unwrap_or(0).min(n - 2);
        let theta = s - T::from_usize_lossy(i);
        let (p0, p1) = (self.phi[i], self.phi[i + 1]);
        let (d0, d1) = (self.phi_prime[i], self.phi_prime[i + 1]);
        let (s0, s1) = (self.second_derivative(p0, d0), self.second_derivative(p1, d1));
        let phi = hermite(theta, p0, p1, d0 * self.dz, d1 * self.dz);
        let dphi = hermite(theta, d0, d1, s0 * self.dz, s1 * self.dz);
        Ok(ProfilePoint {
            phi,
            dphi,
            d2phi: self.second_derivative(phi, dphi),
        })
    }

    pub fn value(&self, z: T) -> Result<T, ProfileError> {
        self.eval(z).map(|p| p.phi)
    }

    /// Residual `phi'' + c phi' + f(phi)` at interior nodes, with `phi''`
    /// from fourth-order central differences of the stored derivative.
    pub fn collocation_residual(&self) -> Vec<(T, T)> {
        let n = self.phi.len();
        let d = &self.phi_prime;
        let twelve_dz = lit::<T>(12.0) * self.dz;
        (2..n.saturating_sub(2))
            .map(|i| {
                let d2 = (-d[i + 2] + lit::<T>(8.0) * (d[i + 1] - d[i - 1]) + d[i - 2]) / twelve_dz;
                let r = d2 + self.c * d[i] + self.reaction.eval(self.phi[i]);
                (self.z(i), r)
            })
            .collect()
    }

    pub fn max_collocation_residual(&self) -> T {
        self.collocation_residual()
            .into_iter()
            .map(|(_, r)| r.abs())
            .fold(T::zero(), T::max)
    }

    /// `sup |phi'| / phi` over the stored grid.
    pub fn log_derivative_bound(&self) -> T {
        self.phi
            .iter()
            .zip(&self.phi_prime)
            .filter(|(p, _)| **p > T::zero())
            .map(|(p, d)| d.abs() / *p)
            .fold(T::zero(), T::max)
    }

    /// Window of nodes with `phi` in the last decade above the storage cutoff
    /// (`1e-8 < phi <= 1e-7` with default options).
    pub fn default_decay_window(&self) -> Result<(T, T), ProfileError> {
        let lo_level = lit::<T>(1e-8);
        let hi_level = lit::<T>(1e-7);
        let idx: Vec<usize> = (0..self.phi.len())
            .filter(|&i| self.phi[i] > lo_level && self.phi[i] <= hi_level)
            .collect();
        match (idx.first(), idx.last()) {
            (Some(&a), Some(&b)) if b > a => Ok((self.z(a), self.z(b))),
            _ => Err(ProfileError::WindowTooShort(idx.len())),
        }
    }

    /// Copy extended to `[z_lo, z_hi]` with the linearized tails: `1 - phi`
    /// grows like `e^{mu z}` on the left (`mu` the unstable rate of `(1, 0)`),
    /// `phi` decays like `e^{lambda z}` on the right with `lambda` the
    /// characteristic root nearest the stored end slope.
    pub fn with_tails(&self, z_lo: T, z_hi: T) -> FrontProfile<T> {
        let n = self.phi.len();
        let left_extra = if z_lo < self.z_lo {
            ((self.z_lo - z_lo) / self.dz).ceil().to_usize().unwrap_or(0)
        } else {
            0
        };
        let right_extra = if z_hi > self.z_hi() {
            ((z_hi - self.z_hi()) / self.dz).ceil().to_usize().unwrap_or(0)
        } else {
            0
        };
        let mu = saddle_rate(&self.reaction, self.c);
        let gap0 = T::one() - self.phi[0];
        let end = n - 1;
        let end_slope = self.phi_prime[end] / self.phi[end];
        let lam = if (end_slope - self.exponents.lambda_minus).abs()
            < (end_slope - self.exponents.lambda_plus).abs()
        {
            self.exponents.lambda_minus
        } else {
            self.exponents.lambda_plus
        };
        let mut phi = Vec::with_capacity(n + left_extra + right_extra);
        let mut dphi = Vec::with_capacity(n + left_extra + right_extra);
        for k in (1..=left_extra).rev() {
            let dzk = -self.dz * T::from_usize_lossy(k);
            let g = gap0 * (mu * dzk).exp();
            phi.push(T::one() - g);
            dphi.push(-mu * g);
        }
        phi.extend_from_slice(&self.phi);
        dphi.extend_from_slice(&self.phi_prime);
        for k in 1..=right_extra {
            let dzk = self.dz * T::from_usize_lossy(k);
            let v = self.phi[end] * (lam * dzk).exp();
            phi.push(v);
            dphi.push(lam * v);
        }
        FrontProfile {
            c: self.c,
            z_lo: self.z_lo - self.dz * T::from_usize_lossy(left_extra),
            dz: self.dz,
            phi,
            phi_prime: dphi,
            exponents: self.exponents,
            decay_exponent_measured: self.decay_exponent_measured,
            reaction: self.reaction.clone(),
        }
    }
}

#[inline]
fn hermite<T: Real>(t: T, p0: T, p1: T, m0: T, m1: T) -> T {
    let two = lit::<T>(2.0);
    let three = lit::<T>(3.0);
    let t2 = t * t;
    let t3 = t2 * t;
    (two * t3 - three * t2 + T::one()) * p0
        + (t3 - two * t2 + t) * m0
        + (three * t2 - two * t3) * p1
        + (t3 - t2) * m1
}

/// Positive root of `mu^2 + c mu + f'(1) = 0`.
fn saddle_rate<T: Real>(f: &ReactionTerm<T>, c: T) -> T {
    let disc = c * c - lit::<T>(4.0) * f.fprime1();
    (-c + disc.sqrt()) / lit(2.0)
}

enum ShotEnd {
    Settled,
    Overshoot(f64),
    NonMonotone(f64),
    DomainTooSmall,
}

struct Shot<T> {
    steps: Vec<DenseStep<T, 2>>,
    end: ShotEnd,
}

fn shoot<T: Real>(f: &ReactionTerm<T>, c: T, opts: &ProfileOptions<T>, keep_steps: bool) -> Result<Shot<T>, ProfileError> {
    let mu = saddle_rate(f, c);
    let steep_root = lambda_roots(f.fprime0(), c).ok().map(|e| e.lambda_minus);
    let delta = opts.start_offset;
    let y0 = [T::one() - delta, -mu * delta];
    let ode_opts = OdeOptions {
        rtol: opts.rtol,
        atol: T::min_positive_value().sqrt().max(lit(1e-300)),
        h_init: lit(1e-3),
        h_max: lit(0.5),
        max_steps: 10_000_000,
    };
    let mut steps = Vec::new();
    let mut end = ShotEnd::DomainTooSmall;
    let mut storing = keep_steps;
    let res = integrate(
        |_, y: &[T; 2]| [y[1], -c * y[1] - f.eval(y[0])],
        T::zero(),
        y0,
        opts.z_max,
        &ode_opts,
        |step| {
            let [phi, dphi] = step.y1;
            if storing {
                steps.push(*step);
                if phi < opts.stop_phi {
                    storing = false;
                }
            }
            if phi <= T::zero() {
                end = if dphi < T::zero() {
                    ShotEnd::Overshoot(step.t1().as_f64())
                } else {
                    ShotEnd::NonMonotone(phi.as_f64())
                };
                return Control::Stop;
            }
            if dphi >= T::zero() {
                end = ShotEnd::NonMonotone(phi.as_f64());
                return Control::Stop;
            }
            if phi < opts.settle_phi {
                // Deep in the linear regime the log-derivative w = phi'/phi obeys
                // w' = -(w - lambda_-)(w - lambda_+): below lambda_- it escapes
                // to -inf (a later crossing), otherwise it settles.
                let w = dphi / phi;
                end = match steep_root {
                    Some(lm) if w < lm => ShotEnd::Overshoot(step.t1().as_f64()),
                    Some(_) => ShotEnd::Settled,
                    None => ShotEnd::Overshoot(step.t1().as_f64()),
                };
                return Control::Stop;
            }
            Control::Continue
        },
    );
    res.map_err(ProfileError::Integration)?;
    Ok(Shot { steps, end })
}

/// Shoots the heteroclinic orbit for speed `c` and stores it on a uniform grid
/// translated so that `phi(0) = 1/2`.
pub fn solve_profile<T: Real>(f: &ReactionTerm<T>, c: T, opts: &ProfileOptions<T>) -> Result<FrontProfile<T>, ProfileError> {
    let shot = shoot(f, c, opts, true)?;
    match shot.end {
        ShotEnd::Settled => {}
        ShotEnd::Overshoot(z) => return Err(ProfileError::Overshoot { c: c.as_f64(), z }),
        ShotEnd::NonMonotone(phi) => return Err(ProfileError::NonMonotone { c: c.as_f64(), phi }),
        ShotEnd::DomainTooSmall => {
            return Err(ProfileError::DomainTooSmall {
                target: opts.settle_phi.as_f64(),
                z_max: opts.z_max.as_f64(),
            })
        }
    }
    let steps = shot.steps;
    let half = lit::<T>(0.5);
    let s_half = steps
        .iter()
        .find(|s| s.y0[0] >= half && s.y1[0] < half)
        .map(|s| {
            // bisection on the dense output
            let (mut a, mut b) = (s.t0, s.t1());
            for _ in 0..200 {
                let m = (a + b) * half;
                if s.eval(m)[0] >= half {
                    a = m;
                } else {
                    b = m;
                }
                if b - a <= T::epsilon() * m.abs().max(T::one()) {
                    break;
                }
            }
            (a + b) * half
        })
        .ok_or(ProfileError::DomainTooSmall {
            target: 0.5,
            z_max: opts.z_max.as_f64(),
        })?;
    let s_start = steps[0].t0;
    let s_end = steps.last().map(|s| s.t1()).unwrap_or(s_start);
    let dz = opts.dz;
    let k_lo = ((s_start - s_half) / dz).ceil().to_i64().unwrap_or(0);
    let k_hi = ((s_end - s_half) / dz).floor().to_i64().unwrap_or(0);
    let mut phi = Vec::with_capacity((k_hi - k_lo + 1).max(0) as usize);
    let mut dphi = Vec::with_capacity(phi.capacity());
    let mut cursor = 0usize;
    for k in k_lo..=k_hi {
        let s = s_half + dz * lit::<T>(k as f64);
        while cursor + 1 < steps.len() && steps[cursor].t1() < s {
            cursor += 1;
        }
        let y = if k == 0 {
            let mut y = steps[cursor].eval(s);
            y[0] = half;
            y
        } else {
            steps[cursor].eval(s)
        };
        phi.push(y[0]);
        dphi.push(y[1]);
    }
    let z_lo = dz * lit::<T>(k_lo as f64);
    FrontProfile::from_samples(f.clone(), c, z_lo, dz, phi, dphi)
}

/// Whether the unstable manifold of `(1, 0)` overshoots `phi = 0` at speed `c`.
pub fn overshoots<T: Real>(f: &ReactionTerm<T>, c: T, opts: &ProfileOptions<T>) -> Result<bool, ProfileError> {
    let shot = shoot(f, c, opts, false)?;
    Ok(matches!(shot.end, ShotEnd::Overshoot(_)))
}

/// Bisection result for the minimal speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinSpeed<T> {
    /// Bracket midpoint, never below `2 sqrt(f'(0))`.
    pub c_star: T,
    /// Largest speed seen to overshoot.
    pub lo: T,
    /// Smallest speed seen not to overshoot; a profile exists here.
    pub hi: T,
}

pub const MAX_BRACKET_EXPANSIONS: usize = 40;

pub fn find_min_speed<T: Real>(f: &ReactionTerm<T>, tol: T, opts: &ProfileOptions<T>) -> Result<MinSpeed<T>, ProfileError> {
    assert!(tol > T::zero(), "tolerance must be positive");
    let linear = f.linear_speed();
    // Below the linear speed the origin is a focus, so `linear - tol` always
    // overshoots; spiralling is too slow to observe numerically near it.
    let mut lo = linear - tol;
    if !overshoots(f, linear, opts)? {
        return Ok(MinSpeed {
            c_star: linear,
            lo,
            hi: linear,
        });
    }
    lo = lo.max(linear);
    let mut step = linear.max(T::one()) * lit(0.25);
    let mut hi = linear + step;
    let mut expansions = 0;
    while overshoots(f, hi, opts)? {
        lo = hi;
        step = step * lit(2.0);
        hi = hi + step;
        expansions += 1;
        if expansions > MAX_BRACKET_EXPANSIONS {
            return Err(ProfileError::BracketExpansion(expansions));
        }
    }
    while hi - lo > tol {
        let mid = (lo + hi) * lit(0.5);
        if overshoots(f, mid, opts)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(MinSpeed {
        c_star: ((lo + hi) * lit(0.5)).max(linear),
        lo,
        hi: hi.max(linear),
    })
}

/// Least-squares slope of `ln phi` against `z` over the grid nodes in `window`.
pub fn measure_decay_exponent<T: Real>(p: &FrontProfile<T>, window: (T, T)) -> Result<T, ProfileError> {
    let (z, v) = window_samples(p, window)?;
    let logs: Vec<T> = v.iter().map(|x| x.ln()).collect();
    let (slope, _, _) = line_fit(&z, &logs)?;
    Ok(slope)
}

/// Tail fit `ln phi = lambda z + ln(alpha z + beta)`, the double-root form.
/// Returns `(lambda, beta / alpha)`.
pub fn measure_decay_exponent_with_prefactor<T: Real>(
    p: &FrontProfile<T>,
    window: (T, T),
) -> Result<(T, T), ProfileError> {
    let (z, v) = window_samples(p, window)?;
    let logs: Vec<T> = v.iter().map(|x| x.ln()).collect();
    let z_min = z[0];
    // the offset r = beta/alpha must keep z + r positive on the window
    let sse = |r: T| -> Option<(T, T)> {
        let y: Vec<T> = z.iter().zip(&logs).map(|(zz, l)| *l - (*zz + r).ln()).collect();
        line_fit(&z, &y).ok().map(|(s, _, rms)| (rms, s))
    };
    let (mut a, mut b) = (-z_min + lit(1e-3), -z_min + lit(1e4));
    // golden-section search on ln(z + r) offset, in log-scale of (z_min + r)
    let g = lit::<T>(0.618_033_988_749_895);
    let to_r = |x: T| x.exp() - z_min;
    let (mut xa, mut xb) = ((a + z_min).ln(), (b + z_min).ln());
    for _ in 0..200 {
        let x1 = xb - g * (xb - xa);
        let x2 = xa + g * (xb - xa);
        let f1 = sse(to_r(x1)).map_or(T::infinity(), |v| v.0);
        let f2 = sse(to_r(x2)).map_or(T::infinity(), |v| v.0);
        if f1 < f2 {
            xb = x2;
        } else {
            xa = x1;
        }
        if xb - xa < lit(1e-10) {
            break;
        }
    }
    a = to_r(xa);
    b = to_r(xb);
    let r = (a + b) * lit(0.5);
    let (_, slope) = sse(r).ok_or(ProfileError::WindowTooShort(z.len()))?;
    Ok((slope, r))
}

fn window_samples<T: Real>(p: &FrontProfile<T>, window: (T, T)) -> Result<(Vec<T>, Vec<T>), ProfileError> {
    let (a, b) = (window.0.min(window.1), window.0.max(window.1));
    let mut z = Vec::new();
    let mut v = Vec::new();
    for (i, &phi) in p.phi().iter().enumerate() {
        let zi = p.z(i);
        if zi < a || zi > b {
            continue;
        }
        if !(phi > T::zero()) {
            return Err(ProfileError::NonPositiveInWindow(zi.as_f64()));
        }
        if phi >= lit(1e-2) {
            return Err(ProfileError::WindowOutsideTail {
                z: zi.as_f64(),
                phi: phi.as_f64(),
            });
        }
        z.push(zi);
        v.push(phi);
    }
    if z.len() < 10 {
        return Err(ProfileError::WindowTooShort(z.len()));
    }
    Ok((z, v))
}

/// Least-squares slope of `ln y` against `x` for raw samples (all `y > 0`).
pub fn log_slope<T: Real>(x: &[T], y: &[T]) -> Result<T, ProfileError> {
    if x.len() < 10 {
        return Err(ProfileError::WindowTooShort(x.len()));
    }
    if let Some(i) = y.iter().position(|v| !(*v > T::zero())) {
        return Err(ProfileError::NonPositiveInWindow(x[i].as_f64()));
    }
    let logs: Vec<T> = y.iter().map(|v| v.ln()).collect();
    Ok(line_fit(x, &logs)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontClass {
    Pushed,
    Pulled,
}

impl fmt::Display for FrontClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrontClass::Pushed => "pushed",
            FrontClass::Pulled => "pulled",
        })
    }
}

/// Relative agreement required between the measured tail exponent and
/// `lambda_-(c*)` for a pushed verdict.
pub const PUSHED_DECAY_REL_TOL: f64 = 0.05;
pub const DEFAULT_PUSHED_MARGIN: f64 = 1e-3;

/// Pushed iff `c* - 2 sqrt(f'(0)) > tol` and the tail decays at the steep rate
/// `lambda_-(c*)`; pulled iff `c*` is within `tol` of `2 sqrt(f'(0))`.
pub fn classify_front<T: Real>(
    f: &ReactionTerm<T>,
    cstar: T,
    p: &FrontProfile<T>,
    tol: T,
) -> Result<FrontClass, ProfileError> {
    let linear = f.linear_speed();
    if (cstar - linear).abs() <= tol {
        return Ok(FrontClass::Pulled);
    }
    let exps = lambda_roots(f.fprime0(), cstar)?;
    let measured = match p.decay_exponent_measured() {
        Some(m) => m,
        None => measure_decay_exponent(p, p.default_decay_window()?)?,
    };
    let steep = ((measured - exps.lambda_minus) / exps.lambda_minus).abs() <= lit(PUSHED_DECAY_REL_TOL);
    if cstar - linear > tol && steep {
        Ok(FrontClass::Pushed)
    } else {
        Err(ProfileError::Inconsistent {
            speed: if cstar - linear > tol { "pushed" } else { "below linear speed" },
            decay: if steep { "steep" } else { "not steep" },
            measured: measured.as_f64(),
            lambda_minus: exps.lambda_minus.as_f64(),
        })
    }
}

/// Closed-form Hadeler-Rothe minimal speed `sqrt(nu/2) + sqrt(2/nu)` (`nu > 2`).
pub fn hadeler_rothe_speed<T: Real>(nu: T) -> T {
    let two = lit::<T>(2.0);
    (nu / two).sqrt() + (two / nu).sqrt()
}

/// Grid for closed-form profiles.
#[derive(Debug, Clone, Copy)]
pub struct ProfileGrid<T> {
    pub z_lo: T,
    pub z_hi: T,
    pub dz: T,
}

impl<T: Real> Default for ProfileGrid<T> {
    fn default() -> Self {
        ProfileGrid {
            z_lo: lit(-20.0),
            z_hi: lit(20.0),
            dz: lit(0.01),
        }
    }
}

/// `phi(z) = 1 / (1 + e^{b z})`, `b = sqrt(nu/2)`, the exact minimal-speed front of
/// `u (1 - u)(1 + nu u)` for `nu > 2`.
pub fn exact_hadeler_rothe<T: Real>(nu: T, grid: ProfileGrid<T>) -> Result<FrontProfile<T>, ProfileError> {
    if !(nu > lit(2.0)) {
        return Err(ProfileError::NuNotPushed(nu.as_f64()));
    }
    let f = ReactionTerm::hadeler_rothe(nu)?;
    let b = (nu / lit(2.0)).sqrt();
    let n = ((grid.z_hi - grid.z_lo) / grid.dz).round().to_usize().unwrap_or(1) + 1;
    let mut phi = Vec::with_capacity(n);
    let mut dphi = Vec::with_capacity(n);
    for i in 0..n {
        let z = grid.z_lo + grid.dz * T::from_usize_lossy(i);
        let v = logistic_decreasing(b * z);
        phi.push(v);
        dphi.push(-b * v * (T::one() - v));
    }
    FrontProfile::from_samples(f, hadeler_rothe_speed(nu), grid.z_lo, grid.dz, phi, dphi)
}

/// `1 / (1 + e^x)` without overflow.
pub(crate) fn logistic_decreasing<T: Real>(x: T) -> T {
    if x > T::zero() {
        let e = (-x).exp();
        e / (T::one() + e)
    } else {
        T::one() / (T::one() + x.exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hr(nu: f64) -> ReactionTerm<f64> {
        ReactionTerm::hadeler_rothe(nu).unwrap()
    }

    #[test]
    fn exact_profile_basics() {
        let p = exact_hadeler_rothe::<f64>(4.0, ProfileGrid::default()).unwrap();
        assert!((p.value(0.0).unwrap() - 0.5).abs() < 1e-15);
        let h = 1e-5;
        let fd: f64 = (logistic_decreasing(2f64.sqrt() * h) - logistic_decreasing(-2f64.sqrt() * h)) / (2.0 * h);
        assert!((fd + 2f64.sqrt() / 4.0).abs() < 1e-9);
        assert!((p.eval(0.0).unwrap().dphi + 2f64.sqrt() / 4.0).abs() < 1e-14);
        // substitution identity with the analytic second derivative
        let b = 2f64.sqrt();
        let c = p.c();
        let f = hr(4.0);
        for (&phi, &d) in p.phi().iter().zip(p.phi_prime()) {
            let d2 = -b * d * (1.0 - 2.0 * phi);
            assert!((d2 + c * d + f.eval(phi)).abs() <= 1e-12);
        }
        assert!(exact_hadeler_rothe(2.0, ProfileGrid::default()).is_err());
    }

    #[test]
    fn hermite_interpolation_is_accurate() {
        let p = exact_hadeler_rothe::<f64>(4.0, ProfileGrid::default()).unwrap();
        for k in 0..400 {
            let z = -10.0 + 0.05 * k as f64 + 0.0037;
            let e = p.eval(z).unwrap();
            let exact: f64 = logistic_decreasing(2f64.sqrt() * z);
            assert!((e.phi - exact).abs() < 1e-10, "z={z}");
            assert!((e.dphi + 2f64.sqrt() * exact * (1.0 - exact)).abs() < 1e-9);
        }
        assert!(matches!(p.eval(25.0), Err(ProfileError::OutOfDomain { .. })));
    }

    #[test]
    fn shot_matches_closed_form() {
        let f = hr(4.0);
        let c = hadeler_rothe_speed(4.0);
        let p = solve_profile(&f, c + 1e-12, &ProfileOptions::default()).unwrap();
        let mut sup: f64 = 0.0;
        for (i, &v) in p.phi().iter().enumerate() {
            sup = sup.max((v - logistic_decreasing(2f64.sqrt() * p.z(i))).abs());
        }
        assert!(sup <= 1e-6, "sup error {sup}");
        assert!(p.phi()[0] > 1.0 - 1e-3);
        assert!(*p.phi().last().unwrap() < 1e-6);
        assert!(p.phi().windows(2).all(|w| w[1] < w[0]));
        assert!((p.value(0.0).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn kpp_profile_residual_and_decay() {
        let f = ReactionTerm::<f64>::kpp();
        let p = solve_profile::<f64>(&f, 2.5, &ProfileOptions::default()).unwrap();
        assert!(p.max_collocation_residual() <= 1e-6, "{}", p.max_collocation_residual());
        assert!(p.phi().iter().all(|v| *v > 0.0 && *v < 1.0));
        let m = p.decay_exponent_measured().unwrap();
        assert!((m + 0.5).abs() <= 0.02, "measured {m}");
    }

    #[test]
    fn slow_speed_overshoots() {
        let f = ReactionTerm::<f64>::kpp();
        assert!(matches!(
            solve_profile(&f, 1.0, &ProfileOptions::default()),
            Err(ProfileError::Overshoot { .. })
        ));
        // pushed family: between the linear speed and c*
        assert!(overshoots(&hr(4.0), 2.05, &ProfileOptions::default()).unwrap());
    }

    #[test]
    fn synthetic_exponential_slope() {
        let z: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = z.iter().map(|z| (-z).exp()).collect();
        assert!((log_slope::<f64>(&z, &y).unwrap() + 1.0).abs() <= 1e-6);
        assert!(log_slope(&z[..5], &y[..5]).is_err());
    }

    #[test]
    fn decay_window_errors() {
        let p = exact_hadeler_rothe::<f64>(4.0, ProfileGrid::default()).unwrap();
        assert!(matches!(measure_decay_exponent(&p, (0.0, 2.0)), Err(ProfileError::WindowOutsideTail { .. })));
        assert!(matches!(measure_decay_exponent(&p, (15.0, 15.05)), Err(ProfileError::WindowTooShort(_))));
        let m: f64 = measure_decay_exponent(&p, (12.0, 16.0)).unwrap();
        assert!((m + 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn tails_extend_smoothly() {
        let p = exact_hadeler_rothe::<f64>(4.0, ProfileGrid::default()).unwrap();
        let wide = p.with_tails(-60.0, 60.0);
        assert!(wide.z_lo() <= -60.0 && wide.z_hi() >= 60.0);
        for z in [-50.0, -30.0, 25.0, 45.0] {
            let v = wide.value(z).unwrap();
            let exact: f64 = logistic_decreasing(2f64.sqrt() * z);
            assert!((v - exact).abs() <= 1e-12 + 1e-6 * exact, "z={z}");
        }
    }
}
