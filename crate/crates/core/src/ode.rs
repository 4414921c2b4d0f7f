//! Adaptive Dormand-Prince 5(4) integrator with continuous (dense) output.

use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub h_init: T,
    pub h_max: T,
    pub max_steps: usize,
}

impl<T: Real> Default for OdeOptions<T> {
    fn default() -> Self {
        OdeOptions {
            rtol: lit(1e-10),
            atol: lit(1e-300_f64.max(f64::from(f32::MIN_POSITIVE))),
            h_init: lit(1e-3),
            h_max: lit(0.5),
            max_steps: 2_000_000,
        }
    }
}

/// One accepted step, with enough data to evaluate the 4th-order
/// continuous extension anywhere in `[t0, t0 + h]`.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<T, const N: usize> {
    pub t0: T,
    pub h: T,
    pub y0: [T; N],
    pub y1: [T; N],
    rcont: [[T; N]; 5],
}

impl<T: Real, const N: usize> DenseStep<T, N> {
    pub fn t1(&self) -> T {
        self.t0 + self.h
    }

    pub fn eval(&self, t: T) -> [T; N] {
        let theta = (t - self.t0) / self.h;
        let theta1 = T::one() - theta;
        let mut out = [T::zero(); N];
        for (i, o) in out.iter_mut().enumerate() {
            let r = &self.rcont;
            *o = r[0][i]
                + theta * (r[1][i] + theta1 * (r[2][i] + theta * (r[3][i] + theta1 * r[4][i])));
        }
        out
    }
}

/// What the observer asks the integrator to do after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OdeFailure {
    StepSizeUnderflow { t: f64 },
    TooManySteps { t: f64 },
    NonFinite { t: f64 },
}

// Dormand-Prince tableau and dense-output coefficients (Hairer, Norsett, Wanner).
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy<T: Real, const N: usize>(y: &[T; N], h: T, terms: &[(f64, &[T; N])]) -> [T; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (a, k) in terms {
            acc = acc + lit::<T>(*a) * k[i];
        }
        *o = *o + h * acc;
    }
    out
}

/// Integrates `y' = rhs(t, y)` from `t0` until `t_end` or until `observer`
/// returns [`Control::Stop`]. Returns the final time and state.
pub fn integrate<T, const N: usize, F, O>(
    mut rhs: F,
    t0: T,
    y0: [T; N],
    t_end: T,
    opts: &OdeOptions<T>,
    mut observer: O,
) -> Result<(T, [T; N]), OdeFailure>
where
    T: Real,
    F: FnMut(T, &[T; N]) -> [T; N],
    O: FnMut(&DenseStep<T, N>) -> Control,
{
    let mut t = t0;
    let mut y = y0;
    let mut h = opts.h_init.min(t_end - t0);
    let mut k1 = rhs(t, &y);
    let mut fac_old = lit::<T>(1e-4);
    let safety = lit::<T>(0.9);
    let beta = lit::<T>(0.04);
    let expo = lit::<T>(0.2) - beta * lit(0.75);
    for _ in 0..opts.max_steps {
        if t >= t_end {
            return Ok((t, y));
        }
        if t + h > t_end {
            h = t_end - t;
        }
        if h <= T::epsilon() * t.abs().max(T::one()) {
            return Err(OdeFailure::StepSizeUnderflow { t: t.as_f64() });
        }
        let y2 = axpy(&y, h, &[(A21, &k1)]);
        let k2 = rhs(t + lit::<T>(C2) * h, &y2);
        let y3 = axpy(&y, h, &[(A31, &k1), (A32, &k2)]);
        let k3 = rhs(t + lit::<T>(C3) * h, &y3);
        let y4 = axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        let k4 = rhs(t + lit::<T>(C4) * h, &y4);
        let y5 = axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        let k5 = rhs(t + lit::<T>(C5) * h, &y5);
        let y6 = axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let k6 = rhs(t + h, &y6);
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = rhs(t + h, &y_new);

        let mut err = T::zero();
        for i in 0..N {
            let e = h
                * (lit::<T>(E1) * k1[i]
                    + lit::<T>(E3) * k3[i]
                    + lit::<T>(E4) * k4[i]
                    + lit::<T>(E5) * k5[i]
                    + lit::<T>(E6) * k6[i]
                    + lit::<T>(E7) * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err = err + (e / sc) * (e / sc);
        }
        err = (err / T::from_usize_lossy(N)).sqrt();
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            if h < lit(1e-12) {
                return Err(OdeFailure::NonFinite { t: t.as_f64() });
            }
            h = h * lit(0.1);
            continue;
        }

        let fac11 = err.powf(expo);
        let mut fac = fac11 / fac_old.powf(beta);
        fac = (fac / safety).max(lit(0.2)).min(lit(10.0));
        let h_new = h / fac;
        if err <= T::one() {
            fac_old = err.max(lit(1e-4));
            let mut rcont = [[T::zero(); N]; 5];
            for i in 0..N {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - h * k7[i] - bspl;
                rcont[4][i] = h
                    * (lit::<T>(D1) * k1[i]
                        + lit::<T>(D3) * k3[i]
                        + lit::<T>(D4) * k4[i]
                        + lit::<T>(D5) * k5[i]
                        + lit::<T>(D6) * k6[i]
                        + lit::<T>(D7) * k7[i]);
            }
            let step = DenseStep {
                t0: t,
                h,
                y0: y,
                y1: y_new,
                rcont,
            };
            t = t + h;
            y = y_new;
            k1 = k7;
            if observer(&step) == Control::Stop {
                return Ok((t, y));
            }
            h = h_new.min(opts.h_max);
        } else {
            h = h / (fac11 / safety).max(lit(0.2)).min(lit(10.0));
        }
    }
    Err(OdeFailure::TooManySteps { t: t.as_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_and_dense_output() {
        let mut samples = Vec::new();
        let (t, y) = integrate(
            |_, y: &[f64; 1]| [-y[0]],
            0.0,
            [1.0],
            5.0,
            &OdeOptions::default(),
            |s: &DenseStep<f64, 1>| {
                let mid = s.t0 + 0.5 * s.h;
                samples.push((mid, s.eval(mid)[0]));
                Control::Continue
            },
        )
        .unwrap();
        assert_eq!(t, 5.0);
        assert!((y[0] - (-5.0f64).exp()).abs() < 1e-11);
        for (tm, v) in samples {
            assert!((v - (-tm).exp()).abs() < 1e-9, "dense output at {tm}");
        }
    }

    #[test]
    fn harmonic_oscillator_period() {
        let (_, y) = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            2.0 * std::f64::consts::PI,
            &OdeOptions {
                atol: 1e-14,
                ..OdeOptions::default()
            },
            |_| Control::Continue,
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-8 && y[1].abs() < 1e-8);
    }

    #[test]
    fn observer_can_stop() {
        let (t, _) = integrate(
            |_, _: &[f64; 1]| [1.0],
            0.0,
            [0.0],
            100.0,
            &OdeOptions::default(),
            |s| if s.y1[0] > 1.0 { Control::Stop } else { Control::Continue },
        )
        .unwrap();
        assert!(t > 1.0 && t < 100.0);
    }
}
