//! Monostable nonlinearities `f`, their linear extension below zero, and the
//! characteristic exponents of the linearization at `u = 0`.

use std::fmt;

use thiserror::Error;

use crate::scalar::{lit, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReactionError {
    #[error("parameter nu must be positive, got {0}")]
    NonPositiveNu(f64),
    #[error("polynomial reaction needs f(0) = 0 (constant coefficient {0})")]
    NonzeroConstant(f64),
    #[error("polynomial reaction needs at least a linear term")]
    EmptyPolynomial,
    #[error("characteristic roots are complex for c = {c} (c^2 - 4 f'(0) = {discriminant})")]
    ComplexRoots { c: f64, discriminant: f64 },
    #[error("unknown reaction '{0}' (expected kpp, hadeler_rothe or polynomial)")]
    UnknownName(String),
}

/// The closed form used for `u >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum ReactionKind<T> {
    /// `u (1 - u)`
    Kpp,
    /// `u (1 - u) (1 + nu u)`
    HadelerRothe { nu: T },
    /// `sum_k coeffs[k] u^k`, `coeffs[0]` must vanish.
    Polynomial { coeffs: Vec<T> },
}

/// A reaction term `f` with `f(u) = f'(0) u` for `u < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionTerm<T> {
    kind: ReactionKind<T>,
    fprime0: T,
    fprime1: T,
}

impl<T: Real> ReactionTerm<T> {
    /// Fisher-KPP, `f(u) = u (1 - u)`.
    pub fn kpp() -> Self {
        Self::from_kind(ReactionKind::Kpp)
    }

    /// `f(u) = u (1 - u) (1 + nu u)`. Pushed minimal-speed front for `nu > 2`.
    pub fn hadeler_rothe(nu: T) -> Result<Self, ReactionError> {
        if !(nu > T::zero()) {
            return Err(ReactionError::NonPositiveNu(nu.as_f64()));
        }
        Ok(Self::from_kind(ReactionKind::HadelerRothe { nu }))
    }

    /// General polynomial `sum_k coeffs[k] u^k` on `u >= 0`. Sign conditions are
    /// not enforced here; run [`validate_monostable`] on the result.
    pub fn polynomial(coeffs: Vec<T>) -> Result<Self, ReactionError> {
        if coeffs.len() < 2 {
            return Err(ReactionError::EmptyPolynomial);
        }
        if coeffs[0] != T::zero() {
            return Err(ReactionError::NonzeroConstant(coeffs[0].as_f64()));
        }
        Ok(Self::from_kind(ReactionKind::Polynomial { coeffs }))
    }

    /// Looks a built-in family up by its configuration name.
    pub fn by_name(name: &str, nu: Option<T>, coeffs: &[T]) -> Result<Self, ReactionError> {
        match name {
            "kpp" => Ok(Self::kpp()),
            "hadeler_rothe" => Self::hadeler_rothe(nu.unwrap_or_else(|| lit(4.0))),
            "polynomial" => Self::polynomial(coeffs.to_vec()),
            other => Err(ReactionError::UnknownName(other.to_string())),
        }
    }

    fn from_kind(kind: ReactionKind<T>) -> Self {
        let mut term = ReactionTerm {
            kind,
            fprime0: T::zero(),
            fprime1: T::zero(),
        };
        term.fprime0 = term.closed_form_derivative(T::zero());
        term.fprime1 = term.closed_form_derivative(T::one());
        term
    }

    pub fn kind(&self) -> &ReactionKind<T> {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ReactionKind::Kpp => "kpp",
            ReactionKind::HadelerRothe { .. } => "hadeler_rothe",
            ReactionKind::Polynomial { .. } => "polynomial",
        }
    }

    pub fn params(&self) -> Vec<T> {
        match &self.kind {
            ReactionKind::Kpp => Vec::new(),
            ReactionKind::HadelerRothe { nu } => vec![*nu],
            ReactionKind::Polynomial { coeffs } => coeffs.clone(),
        }
    }

    pub fn fprime0(&self) -> T {
        self.fprime0
    }

    pub fn fprime1(&self) -> T {
        self.fprime1
    }

    /// Linear spreading speed `2 sqrt(f'(0))`, a lower bound for the minimal speed.
    pub fn linear_speed(&self) -> T {
        lit::<T>(2.0) * self.fprime0.sqrt()
    }

    fn closed_form(&self, u: T) -> T {
        let one = T::one();
        match &self.kind {
            ReactionKind::Kpp => u * (one - u),
            ReactionKind::HadelerRothe { nu } => u * (one - u) * (one + *nu * u),
            ReactionKind::Polynomial { coeffs } => horner(coeffs, u),
        }
    }

    fn closed_form_derivative(&self, u: T) -> T {
        let one = T::one();
        let two = lit::<T>(2.0);
        match &self.kind {
            ReactionKind::Kpp => one - two * u,
            // d/du [u + (nu - 1) u^2 - nu u^3]
            ReactionKind::HadelerRothe { nu } => {
                one + two * (*nu - one) * u - lit::<T>(3.0) * *nu * u * u
            }
            ReactionKind::Polynomial { coeffs } => {
                let mut acc = T::zero();
                for (k, &a) in coeffs.iter().enumerate().skip(1).rev() {
                    acc = acc * u + a * T::from_usize_lossy(k);
                }
                acc
            }
        }
    }

    /// `f(u)`, with `f(u) = f'(0) u` for `u < 0`.
    #[inline]
    pub fn eval(&self, u: T) -> T {
        if u < T::zero() {
            self.fprime0 * u
        } else {
            self.closed_form(u)
        }
    }

    /// `f'(u)`, with `f'(u) = f'(0)` for `u < 0`.
    #[inline]
    pub fn derivative(&self, u: T) -> T {
        if u < T::zero() {
            self.fprime0
        } else {
            self.closed_form_derivative(u)
        }
    }

    /// `sup |f'|` over `[0, 1]`, sampled on `samples + 1` points.
    pub fn derivative_sup_norm(&self, samples: usize) -> T {
        let n = samples.max(1);
        (0..=n)
            .map(|i| self.derivative(T::from_usize_lossy(i) / T::from_usize_lossy(n)).abs())
            .fold(T::zero(), T::max)
    }

    /// Roots of `lambda^2 + c lambda + f'(0) = 0`.
    pub fn exponents(&self, c: T) -> Result<CharacteristicExponents<T>, ReactionError> {
        lambda_roots(self.fprime0, c)
    }
}

fn horner<T: Real>(coeffs: &[T], u: T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, &a| acc * u + a)
}

impl<T: Real> fmt::Display for ReactionTerm<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ReactionKind::Kpp => write!(f, "kpp"),
            ReactionKind::HadelerRothe { nu } => write!(f, "hadeler_rothe(nu={nu})"),
            ReactionKind::Polynomial { coeffs } => write!(f, "polynomial{coeffs:?}"),
        }
    }
}

/// Roots of the characteristic quadratic `lambda^2 + c lambda + f'(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicExponents<T> {
    /// Steeper root.
    pub lambda_minus: T,
    /// Shallower root.
    pub lambda_plus: T,
    /// `c^2 - 4 f'(0)`
    pub discriminant: T,
    pub double_root: bool,
}

/// Discriminants within this distance of zero count as a double root.
pub const DOUBLE_ROOT_TOL: f64 = 1e-12;

pub fn lambda_roots<T: Real>(fprime0: T, c: T) -> Result<CharacteristicExponents<T>, ReactionError> {
    let two = lit::<T>(2.0);
    let disc = c * c - lit::<T>(4.0) * fprime0;
    let tol = lit::<T>(DOUBLE_ROOT_TOL).max(T::epsilon() * lit(16.0)) * (c * c).max(T::one());
    if disc < -tol {
        return Err(ReactionError::ComplexRoots {
            c: c.as_f64(),
            discriminant: disc.as_f64(),
        });
    }
    if disc.abs() <= tol {
        let root = -c / two;
        return Ok(CharacteristicExponents {
            lambda_minus: root,
            lambda_plus: root,
            discriminant: disc,
            double_root: true,
        });
    }
    // Larger-magnitude root first, then Vieta for the other to avoid cancellation.
    let sq = disc.sqrt();
    let big = if c >= T::zero() { (-c - sq) / two } else { (-c + sq) / two };
    let small = fprime0 / big;
    let (lambda_minus, lambda_plus) = if big < small { (big, small) } else { (small, big) };
    Ok(CharacteristicExponents {
        lambda_minus,
        lambda_plus,
        discriminant: disc,
        double_root: false,
    })
}

/// Which monostable sign condition a sample violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonostableCondition {
    ZeroAtZero,
    ZeroAtOne,
    PositiveSlopeAtZero,
    NegativeSlopeAtOne,
    PositiveInside,
    NegativeAboveOne,
}

impl fmt::Display for MonostableCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::ZeroAtZero => "f(0) = 0",
            Self::ZeroAtOne => "f(1) = 0",
            Self::PositiveSlopeAtZero => "f'(0) > 0",
            Self::NegativeSlopeAtOne => "f'(1) < 0",
            Self::PositiveInside => "f > 0 on (0,1)",
            Self::NegativeAboveOne => "f < 0 on (1,2]",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonostableViolation {
    pub condition: MonostableCondition,
    pub s: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonostableReport {
    pub samples: usize,
    pub tol: f64,
    pub violation: Option<MonostableViolation>,
}

impl MonostableReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

impl fmt::Display for MonostableReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.violation {
            None => write!(f, "pass ({} samples, tol {:e})", self.samples, self.tol),
            Some(v) => write!(f, "fail: {} violated at s = {}, value {:e}", v.condition, v.s, v.value),
        }
    }
}

pub const DEFAULT_MONOSTABLE_SAMPLES: usize = 10_000;

/// Checks the monostable sign conditions on uniform samples of `(0,1)` and
/// `(1,2]`. Interior samples must satisfy `f > -tol` (resp. `f < tol`);
/// with `tol = 0` the inequalities are strict. Reports the first violation.
pub fn validate_monostable<T: Real>(f: &ReactionTerm<T>, samples: usize, tol: T) -> MonostableReport {
    let samples = samples.max(100);
    let report = |violation| MonostableReport {
        samples,
        tol: tol.as_f64(),
        violation,
    };
    let violation = |condition, s: T, value: T| {
        Some(MonostableViolation {
            condition,
            s: s.as_f64(),
            value: value.as_f64(),
        })
    };
    let n = T::from_usize_lossy(samples);
    for i in 1..=samples {
        let s = T::from_usize_lossy(i) / (n + T::one());
        let v = f.eval(s);
        if !(v > -tol) || (tol == T::zero() && v <= T::zero()) {
            return report(violation(MonostableCondition::PositiveInside, s, v));
        }
    }
    for i in 1..=samples {
        let s = T::one() + T::from_usize_lossy(i) / n;
        let v = f.eval(s);
        if !(v < tol) || (tol == T::zero() && v >= T::zero()) {
            return report(violation(MonostableCondition::NegativeAboveOne, s, v));
        }
    }
    let zero_tol = tol.max(T::epsilon() * lit(8.0));
    let f0 = f.eval(T::zero());
    if f0.abs() > zero_tol {
        return report(violation(MonostableCondition::ZeroAtZero, T::zero(), f0));
    }
    let f1 = f.eval(T::one());
    if f1.abs() > zero_tol {
        return report(violation(MonostableCondition::ZeroAtOne, T::one(), f1));
    }
    if !(f.fprime0() > T::zero()) {
        return report(violation(MonostableCondition::PositiveSlopeAtZero, T::zero(), f.fprime0()));
    }
    if !(f.fprime1() < T::zero()) {
        return report(violation(MonostableCondition::NegativeSlopeAtOne, T::one(), f.fprime1()));
    }
    report(None)
}

/// Sampled check of `0 < f'(0) u - f(u) < M u^{1 + alpha}` on `(0, 1]`.
/// Returns the smallest admissible `M` for the given `alpha`, or `None` when
/// the lower inequality fails somewhere.
pub fn kpp_bound_constant<T: Real>(f: &ReactionTerm<T>, alpha: T, samples: usize) -> Option<T> {
    let n = samples.max(100);
    let mut m = T::zero();
    for i in 1..=n {
        let u = T::from_usize_lossy(i) / T::from_usize_lossy(n);
        let gap = f.fprime0() * u - f.eval(u);
        if !(gap > T::zero()) {
            return None;
        }
        m = m.max(gap / u.powf(T::one() + alpha));
    }
    Some(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn kpp_values() {
        let f = ReactionTerm::<f64>::kpp();
        assert_eq!(f.eval(0.5), 0.25);
        assert_eq!(f.eval(-2.0), -2.0);
        assert_eq!(f.fprime0(), 1.0);
        assert_eq!(f.fprime1(), -1.0);
    }

    #[test]
    fn hadeler_rothe_values() {
        let f = ReactionTerm::hadeler_rothe(4.0).unwrap();
        assert_relative_eq!(f.eval(0.5), 0.75, epsilon = 1e-15);
        assert_eq!(f.eval(-1.0), -1.0);
        assert_eq!(f.fprime0(), 1.0);
        // finite-difference oracle at u = 1
        let h = 1e-6;
        let fd = (f.closed_form(1.0 + h) - f.closed_form(1.0 - h)) / (2.0 * h);
        assert_relative_eq!(fd, -5.0, epsilon = 1e-8);
        assert_relative_eq!(f.fprime1(), -5.0, epsilon = 1e-14);
    }

    #[test]
    fn hadeler_rothe_rejects_nonpositive_nu() {
        assert!(ReactionTerm::<f64>::hadeler_rothe(0.0).is_err());
        assert!(ReactionTerm::<f64>::hadeler_rothe(-1.0).is_err());
        assert!(ReactionTerm::<f64>::hadeler_rothe(f64::NAN).is_err());
    }

    #[test]
    fn polynomial_matches_builtin() {
        // u (1-u)(1+4u) = u + 3u^2 - 4u^3
        let p = ReactionTerm::polynomial(vec![0.0, 1.0, 3.0, -4.0]).unwrap();
        let h = ReactionTerm::hadeler_rothe(4.0).unwrap();
        for i in 0..=40 {
            let u = -1.0 + 0.075 * i as f64;
            assert_relative_eq!(p.eval(u), h.eval(u), epsilon = 1e-13);
            assert_relative_eq!(p.derivative(u), h.derivative(u), epsilon = 1e-13);
        }
        assert!(ReactionTerm::polynomial(vec![0.1, 1.0]).is_err());
        assert!(ReactionTerm::<f64>::polynomial(vec![0.0]).is_err());
    }

    #[test]
    fn monostable_validation() {
        assert!(validate_monostable(&ReactionTerm::<f64>::kpp(), 10_000, 0.0).passed());
        for nu in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let f = ReactionTerm::hadeler_rothe(nu).unwrap();
            assert!(validate_monostable(&f, DEFAULT_MONOSTABLE_SAMPLES, 0.0).passed(), "nu={nu}");
        }
        // u (1-u)(u - 0.3) = -0.3 u + 1.3 u^2 - u^3
        let bistable = ReactionTerm::polynomial(vec![0.0, -0.3, 1.3, -1.0]).unwrap();
        let report = validate_monostable(&bistable, 1000, 0.0);
        let v = report.violation.expect("bistable must fail");
        assert_eq!(v.condition, MonostableCondition::PositiveInside);
        assert!(v.s < 0.3 && v.value <= 0.0);
    }

    #[test]
    fn roots_examples() {
        let e = lambda_roots(1.0, 2.5).unwrap();
        assert_relative_eq!(e.lambda_minus, -2.0, epsilon = 1e-15);
        assert_relative_eq!(e.lambda_plus, -0.5, epsilon = 1e-15);
        let e = lambda_roots(1.0, 2.0).unwrap();
        assert!(e.double_root);
        assert_eq!(e.lambda_minus, -1.0);
        assert_eq!(e.lambda_plus, -1.0);
        let c = 3.0 / 2f64.sqrt();
        let e = lambda_roots(1.0, c).unwrap();
        for l in [e.lambda_minus, e.lambda_plus] {
            assert!((l * l + c * l + 1.0).abs() < 1e-14);
        }
        assert_relative_eq!(e.lambda_minus, -2f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(e.lambda_plus, -1.0 / 2f64.sqrt(), epsilon = 1e-14);
        assert!(matches!(lambda_roots(1.0, 1.9), Err(ReactionError::ComplexRoots { .. })));
    }

    #[test]
    fn extension_is_continuous_at_zero() {
        for f in [ReactionTerm::<f64>::kpp(), ReactionTerm::hadeler_rothe(4.0).unwrap()] {
            let h = 1e-14;
            assert!((f.eval(-h) - f.eval(h)).abs() < 1e-12);
            assert!((f.derivative(-h) - f.derivative(0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn kpp_bound() {
        let m = kpp_bound_constant(&ReactionTerm::<f64>::kpp(), 1.0, 1000).unwrap();
        assert_relative_eq!(m, 1.0, epsilon = 1e-12);
        // HR(4): f'(0)u - f(u) = -3u^2 + 4u^3 < 0 near 0
        assert!(kpp_bound_constant(&ReactionTerm::hadeler_rothe(4.0).unwrap(), 1.0, 1000).is_none());
    }

    #[test]
    fn works_in_single_precision() {
        let f = ReactionTerm::<f32>::hadeler_rothe(4.0).unwrap();
        assert!((f.eval(0.5) - 0.75).abs() < 1e-6);
        let e = f.exponents(2.5).unwrap();
        assert!((e.lambda_minus * e.lambda_plus - 1.0).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn root_residual(fp0 in 0.01f64..10.0, excess in 0.0f64..5.0) {
            let c = 2.0 * fp0.sqrt() + excess;
            let e = lambda_roots(fp0, c).unwrap();
            prop_assert!(e.lambda_minus <= e.lambda_plus && e.lambda_plus < 0.0);
            for l in [e.lambda_minus, e.lambda_plus] {
                prop_assert!((l * l + c * l + fp0).abs() <= 1e-10);
            }
            if !e.double_root {
                prop_assert!(((e.lambda_minus + e.lambda_plus + c) / c).abs() < 1e-12);
                prop_assert!(((e.lambda_minus * e.lambda_plus - fp0) / fp0).abs() < 1e-12);
            }
        }
    }
}
