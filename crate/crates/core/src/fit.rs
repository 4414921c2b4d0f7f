//! Small dense least-squares fits (Householder QR) used by the tail, shift and
//! decay-rate estimators.

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("design matrix is rank deficient (column {0})")]
    RankDeficient(usize),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
}

/// Coefficients and residual statistics of a linear least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit<T> {
    pub coeffs: Vec<T>,
    pub rms_residual: T,
}

/// Solves `min ||A x - b||` where `rows[i]` is the i-th row of `A`.
pub fn least_squares<T: Real>(rows: &[Vec<T>], rhs: &[T]) -> Result<LinearFit<T>, FitError> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if m < n || n == 0 {
        return Err(FitError::TooFewSamples { needed: n.max(1), got: m });
    }
    for (i, (r, b)) in rows.iter().zip(rhs).enumerate() {
        if !b.is_finite() || r.iter().any(|v| !v.is_finite()) {
            return Err(FitError::NonFinite(i));
        }
    }
    // Column scaling keeps t, ln t, 1 designs well conditioned.
    let scale: Vec<T> = (0..n)
        .map(|j| {
            let s = rows.iter().map(|r| r[j] * r[j]).sum::<T>().sqrt();
            if s > T::zero() {
                s
            } else {
                T::one()
            }
        })
        .collect();
    let mut a: Vec<Vec<T>> = rows
        .iter()
        .map(|r| r.iter().zip(&scale).map(|(v, s)| *v / *s).collect())
        .collect();
    let mut b = rhs.to_vec();

    for k in 0..n {
        let norm = (k..m).map(|i| a[i][k] * a[i][k]).sum::<T>().sqrt();
        if norm <= T::epsilon() * T::from_usize_lossy(m) {
            return Err(FitError::RankDeficient(k));
        }
        let alpha = if a[k][k] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (k..m).map(|i| a[i][k]).collect();
        v[0] = v[0] - alpha;
        let vnorm2 = v.iter().map(|x| *x * *x).sum::<T>();
        if vnorm2 == T::zero() {
            continue;
        }
        for j in k..n {
            let dot = (k..m).map(|i| v[i - k] * a[i][j]).sum::<T>();
            let f = (dot + dot) / vnorm2;
            for i in k..m {
                a[i][j] = a[i][j] - f * v[i - k];
            }
        }
        let dot = (k..m).map(|i| v[i - k] * b[i]).sum::<T>();
        let f = (dot + dot) / vnorm2;
        for i in k..m {
            b[i] = b[i] - f * v[i - k];
        }
    }
    let mut x = vec![T::zero(); n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s = s - a[k][j] * x[j];
        }
        if a[k][k].abs() <= T::epsilon() {
            return Err(FitError::RankDeficient(k));
        }
        x[k] = s / a[k][k];
    }
    let coeffs: Vec<T> = x.iter().zip(&scale).map(|(v, s)| *v / *s).collect();
    let sse = rows
        .iter()
        .zip(rhs)
        .map(|(r, y)| {
            let pred = r.iter().zip(&coeffs).map(|(a, c)| *a * *c).sum::<T>();
            (pred - *y) * (pred - *y)
        })
        .sum::<T>();
    Ok(LinearFit {
        coeffs,
        rms_residual: (sse / T::from_usize_lossy(m)).sqrt(),
    })
}

/// Straight line `y = slope x + intercept`; returns `(slope, intercept, rms)`.
pub fn line_fit<T: Real>(x: &[T], y: &[T]) -> Result<(T, T, T), FitError> {
    if x.len() < 2 {
        return Err(FitError::TooFewSamples { needed: 2, got: x.len() });
    }
    let rows: Vec<Vec<T>> = x.iter().map(|&v| vec![v, T::one()]).collect();
    let fit = least_squares(&rows, y)?;
    Ok((fit.coeffs[0], fit.coeffs[1], fit.rms_residual))
}

/// `n` points log-spaced on `[a, b]`, endpoints included.
pub fn log_spaced<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    assert!(n >= 2 && a > T::zero() && b > a);
    let (la, lb) = (a.ln(), b.ln());
    let last = T::from_usize_lossy(n - 1);
    (0..n)
        .map(|i| {
            if i + 1 == n {
                b
            } else {
                (la + (lb - la) * T::from_usize_lossy(i) / last).exp()
            }
        })
        .collect()
}
