//! Moving-frame equation in two dimensions, `x` periodic and `z` truncated,
//! with level-set extraction and the diagnostics of the front's flattening.
//!
//! Storage is one contiguous `z`-line per `x` node. The update is the 1D
//! update plus the transverse second difference, evaluated so that for
//! `x`-independent data the result is bitwise the 1D result.

use rayon::prelude::*;

use crate::pde1d::{check_finite_bounded, check_stability, level_crossing, min_slope_line, Boundary, Grid1D, SolverError};
use crate::profile::FrontProfile;
use crate::reaction::ReactionTerm;
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D<T> {
    /// Period in `x`.
    pub lx: T,
    pub nx: usize,
    pub z: Grid1D<T>,
}

impl<T: Real> Grid2D<T> {
    pub fn new(lx: T, nx: usize, z: Grid1D<T>) -> Result<Self, SolverError> {
        if nx < 4 || !(lx > T::zero()) {
            return Err(SolverError::InvalidGrid(format!("x period {lx} with {nx} nodes")));
        }
        Ok(Grid2D { lx, nx, z })
    }

    #[inline]
    pub fn dx(&self) -> T {
        self.lx / T::from_usize_lossy(self.nx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> T {
        self.dx() * T::from_usize_lossy(i)
    }

    pub fn x_nodes(&self) -> Vec<T> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    /// Both spacings halved.
    pub fn refined(&self) -> Self {
        Grid2D {
            lx: self.lx,
            nx: 2 * self.nx,
            z: self.z.refined(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field2D<T> {
    pub grid: Grid2D<T>,
    /// `values[i * nz + j] = u(x_i, z_j)`.
    pub values: Vec<T>,
    pub time: T,
    pub bc: Boundary,
}

impl<T: Real> Field2D<T> {
    pub fn from_fn(grid: Grid2D<T>, bc: Boundary, g: impl Fn(T, T) -> T) -> Self {
        let nz = grid.z.nz;
        let mut values = Vec::with_capacity(grid.nx * nz);
        for i in 0..grid.nx {
            let x = grid.x(i);
            values.extend((0..nz).map(|j| g(x, grid.z.z(j))));
        }
        let mut u = Field2D {
            grid,
            values,
            time: T::zero(),
            bc,
        };
        u.apply_bc();
        u
    }

    /// Copies of one line across all `x`.
    pub fn from_line(grid: Grid2D<T>, bc: Boundary, line: &[T]) -> Self {
        assert_eq!(line.len(), grid.z.nz);
        let mut values = Vec::with_capacity(grid.nx * line.len());
        for _ in 0..grid.nx {
            values.extend_from_slice(line);
        }
        let mut u = Field2D {
            grid,
            values,
            time: T::zero(),
            bc,
        };
        u.apply_bc();
        u
    }

    fn apply_bc(&mut self) {
        if self.bc == Boundary::Dirichlet {
            let nz = self.grid.z.nz;
            for row in self.values.chunks_mut(nz) {
                row[0] = T::one();
                row[nz - 1] = T::zero();
            }
        }
    }

    #[inline]
    pub fn column(&self, i: usize) -> &[T] {
        let nz = self.grid.z.nz;
        &self.values[i * nz..(i + 1) * nz]
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[i * self.grid.z.nz + j]
    }

    pub fn min_max(&self) -> (T, T) {
        self.values
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// Largest stable `dt` for the 5-point scheme.
pub fn max_stable_dt2d<T: Real>(dx: T, dz: T) -> T {
    T::one() / (lit::<T>(2.0) / (dz * dz) + lit::<T>(2.0) / (dx * dx))
}

/// Advances `u` by one explicit step (5-point Laplacian, periodic in `x`).
pub fn step2d<T: Real>(u: &mut Field2D<T>, f: &ReactionTerm<T>, c: T, dt: T) -> Result<(), SolverError> {
    let mut scratch = Vec::new();
    step2d_with(u, f, c, dt, &mut scratch)
}

pub fn step2d_with<T: Real>(
    u: &mut Field2D<T>,
    f: &ReactionTerm<T>,
    c: T,
    dt: T,
    scratch: &mut Vec<T>,
) -> Result<(), SolverError> {
    let g = u.grid;
    let (dx, dz) = (g.dx(), g.z.dz());
    let inv_dx2 = T::one() / (dx * dx);
    check_stability(dz, c, dt, inv_dx2 + inv_dx2)?;
    let (nx, nz) = (g.nx, g.z.nz);
    scratch.clear();
    scratch.resize(nx * nz, T::zero());
    let inv_dz2 = T::one() / (dz * dz);
    let cd = c / (dz + dz);
    let old = &u.values;
    let bc = u.bc;
    scratch.par_chunks_mut(nz).enumerate().for_each(|(i, out)| {
        let row = &old[i * nz..(i + 1) * nz];
        let left = &old[((i + nx - 1) % nx) * nz..][..nz];
        let right = &old[((i + 1) % nx) * nz..][..nz];
        for j in 1..nz - 1 {
            let (um, u0, up) = (row[j - 1], row[j], row[j + 1]);
            let lap_x = (left[j] - u0 - u0 + right[j]) * inv_dx2;
            out[j] = u0 + dt * ((up - u0 - u0 + um) * inv_dz2 + lap_x + cd * (up - um) + f.eval(u0));
        }
        match bc {
            Boundary::Dirichlet => {
                out[0] = row[0];
                out[nz - 1] = row[nz - 1];
            }
            Boundary::NeumannZero => {
                let two = inv_dz2 + inv_dz2;
                let lx0 = (left[0] - row[0] - row[0] + right[0]) * inv_dx2;
                let lx1 = (left[nz - 1] - row[nz - 1] - row[nz - 1] + right[nz - 1]) * inv_dx2;
                out[0] = row[0] + dt * ((row[1] - row[0]) * two + lx0 + f.eval(row[0]));
                out[nz - 1] = row[nz - 1] + dt * ((row[nz - 2] - row[nz - 1]) * two + lx1 + f.eval(row[nz - 1]));
            }
        }
    });
    std::mem::swap(&mut u.values, scratch);
    u.time = u.time + dt;
    check_finite_bounded(&u.values, u.time, |k| g.z.z(k % nz))
}

/// The graph `z = gamma(x)` of the `level` set of `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSet<T> {
    pub x: Vec<T>,
    pub gamma: Vec<T>,
    pub level: T,
    /// Minimum over columns of `-u_z` between the bracketing nodes.
    pub min_crossing_slope: T,
    pub time: T,
}

/// Sup norms of the periodic centered differences of `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaDerivatives<T> {
    pub sup_gx: T,
    pub sup_gxx: T,
    pub sup_gxxx: T,
}

impl<T: Real> LevelSet<T> {
    pub fn sup_abs(&self) -> T {
        self.gamma.iter().fold(T::zero(), |m, g| m.max(g.abs()))
    }

    pub fn mean(&self) -> T {
        self.gamma.iter().copied().sum::<T>() / T::from_usize_lossy(self.gamma.len())
    }

    pub fn derivatives(&self) -> GammaDerivatives<T> {
        let n = self.gamma.len();
        let dx = if n > 1 { self.x[1] - self.x[0] } else { T::one() };
        let g = |i: isize| self.gamma[i.rem_euclid(n as isize) as usize];
        let two = lit::<T>(2.0);
        let mut out = GammaDerivatives {
            sup_gx: T::zero(),
            sup_gxx: T::zero(),
            sup_gxxx: T::zero(),
        };
        for i in 0..n as isize {
            let d1 = (g(i + 1) - g(i - 1)) / (two * dx);
            let d2 = (g(i + 1) - two * g(i) + g(i - 1)) / (dx * dx);
            let d3 = (g(i + 2) - two * g(i + 1) + two * g(i - 1) - g(i - 2)) / (two * dx * dx * dx);
            out.sup_gx = out.sup_gx.max(d1.abs());
            out.sup_gxx = out.sup_gxx.max(d2.abs());
            out.sup_gxxx = out.sup_gxxx.max(d3.abs());
        }
        out
    }
}

/// Column-wise crossing of `level`. Fails with `MultipleCrossings` (column
/// index in `x_index`) while the level set is not yet a graph.
pub fn extract_level_set<T: Real>(u: &Field2D<T>, level: T, band: Option<(T, T)>) -> Result<LevelSet<T>, LevelSetError> {
    let g = u.grid;
    let dz = g.z.dz();
    let mut gamma = Vec::with_capacity(g.nx);
    let mut min_slope = T::infinity();
    for i in 0..g.nx {
        let col = u.column(i);
        let z = level_crossing(col, g.z.z_lo, dz, level, band).map_err(|e| LevelSetError { x_index: i, source: e })?;
        let j = ((z - g.z.z_lo) / dz).floor().to_usize().unwrap_or(0).min(g.z.nz - 2);
        min_slope = min_slope.min((col[j] - col[j + 1]) / dz);
        gamma.push(z);
    }
    Ok(LevelSet {
        x: g.x_nodes(),
        gamma,
        level,
        min_crossing_slope: min_slope,
        time: u.time,
    })
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("column {x_index}: {source}")]
pub struct LevelSetError {
    pub x_index: usize,
    pub source: SolverError,
}

/// `sup |u(x, z) - phi(z - gamma(x))|` over all nodes.
pub fn profile_residual<T: Real>(u: &Field2D<T>, gamma: &LevelSet<T>, p: &FrontProfile<T>) -> Result<T, SolverError> {
    let g = u.grid;
    let (gmin, gmax) = gamma
        .gamma
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(a, b), &v| (a.min(v), b.max(v)));
    let wide = p.with_tails(g.z.z_lo - gmax - p.dz(), g.z.z_hi - gmin + p.dz());
    let rows: Vec<Result<T, SolverError>> = (0..g.nx)
        .into_par_iter()
        .map(|i| {
            let col = u.column(i);
            let mut worst = T::zero();
            for (j, &v) in col.iter().enumerate() {
                let phi = wide.value(g.z.z(j) - gamma.gamma[i])?;
                worst = worst.max((v - phi).abs());
            }
            Ok(worst)
        })
        .collect();
    rows.into_iter().try_fold(T::zero(), |m, r| r.map(|v| m.max(v)))
}

/// `min(-u_z)` over nodes with `|u - level| <= margin`.
pub fn monotonicity_check<T: Real>(u: &Field2D<T>, level: T, margin: T) -> Result<T, SolverError> {
    let dz = u.grid.z.dz();
    (0..u.grid.nx)
        .filter_map(|i| min_slope_line(u.column(i), dz, level, margin))
        .fold(None, |m: Option<T>, s| Some(m.map_or(s, |m| m.min(s))))
        .ok_or(SolverError::EmptyBand)
}

/// Sup norms of the centered differences `u_x`, `u_xx` over `|z| <= r`.
pub fn x_derivative_sups<T: Real>(u: &Field2D<T>, r: T) -> (T, T) {
    let g = u.grid;
    let (nx, nz) = (g.nx, g.z.nz);
    let dx = g.dx();
    let two = lit::<T>(2.0);
    let mut sx = T::zero();
    let mut sxx = T::zero();
    for i in 0..nx {
        let (l, c, rr) = (u.column((i + nx - 1) % nx), u.column(i), u.column((i + 1) % nx));
        for j in 0..nz {
            if g.z.z(j).abs() > r {
                continue;
            }
            sx = sx.max(((rr[j] - l[j]) / (two * dx)).abs());
            sxx = sxx.max(((rr[j] - two * c[j] + l[j]) / (dx * dx)).abs());
        }
    }
    (sx, sxx)
}

/// Snapshot diagnostics of a 2D run.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics2D<T> {
    pub t: T,
    pub level_set: Option<LevelSet<T>>,
    /// `profile_residual`; NaN while the level set is not a graph.
    pub residual: T,
    /// `min(-u_z)` in the band; NaN if the band is empty.
    pub min_minus_uz: T,
    pub sup_ux: T,
    pub sup_uxx: T,
    pub gamma_derivatives: Option<GammaDerivatives<T>>,
    pub corridor: (T, T),
}

/// Settings for [`run_2d`].
#[derive(Debug, Clone, Copy)]
pub struct Run2dOptions<T> {
    pub level: T,
    /// Half-width of the band `|u - level| <= margin` for the monotonicity check.
    pub band_margin: T,
    /// `|z| <= r` window for the x-derivative norms, measured from the mean of gamma.
    pub derivative_window: T,
}

/// Evolves `u` to each of `sample_times` (increasing) and records diagnostics.
pub fn run_2d<T: Real>(
    u: &mut Field2D<T>,
    f: &ReactionTerm<T>,
    c: T,
    dt: T,
    sample_times: &[T],
    p: &FrontProfile<T>,
    opts: &Run2dOptions<T>,
) -> Result<Vec<Diagnostics2D<T>>, SolverError> {
    let mut out = Vec::with_capacity(sample_times.len());
    let mut scratch = Vec::with_capacity(u.values.len());
    let t_start = u.time;
    let mut k: usize = 0;
    for &ts in sample_times {
        let target = ((ts - t_start) / dt).round().to_usize().unwrap_or(0);
        while k < target {
            step2d_with(u, f, c, dt, &mut scratch)?;
            k += 1;
            u.time = t_start + dt * T::from_usize_lossy(k);
        }
        out.push(diagnose(u, p, opts)?);
    }
    Ok(out)
}

pub fn diagnose<T: Real>(u: &Field2D<T>, p: &FrontProfile<T>, opts: &Run2dOptions<T>) -> Result<Diagnostics2D<T>, SolverError> {
    let ls = extract_level_set(u, opts.level, None).ok();
    let residual = match &ls {
        Some(l) => profile_residual(u, l, p)?,
        None => T::nan(),
    };
    let min_minus_uz = monotonicity_check(u, opts.level, opts.band_margin).unwrap_or(T::nan());
    let (sup_ux, sup_uxx) = x_derivative_sups(u, opts.derivative_window);
    Ok(Diagnostics2D {
        t: u.time,
        gamma_derivatives: ls.as_ref().map(LevelSet::derivatives),
        level_set: ls,
        residual,
        min_minus_uz,
        sup_ux,
        sup_uxx,
        corridor: u.min_max(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde1d::{step, Field1D};
    use crate::profile::{exact_hadeler_rothe, ProfileGrid};

    fn grid(nx: usize) -> Grid2D<f64> {
        Grid2D::new(20.0, nx, Grid1D::with_spacing(-20.0, 20.0, 0.1).unwrap()).unwrap()
    }

    #[test]
    fn x_independent_data_matches_1d_bitwise() {
        let g = grid(16);
        let f = ReactionTerm::hadeler_rothe(4.0).unwrap();
        let mut u1 = Field1D::from_fn(g.z, Boundary::Dirichlet, |z| 0.5 * (1.0 - (z / 2.0).tanh()));
        let mut u2 = Field2D::from_line(g, Boundary::Dirichlet, &u1.values);
        let dt = 0.8 * max_stable_dt2d(g.dx(), g.z.dz());
        for _ in 0..200 {
            step(&mut u1, &f, 2.1, dt).unwrap();
            step2d(&mut u2, &f, 2.1, dt).unwrap();
            for i in 0..g.nx {
                assert_eq!(u2.column(i), &u1.values[..]);
            }
        }
        assert_eq!(x_derivative_sups(&u2, 10.0), (0.0, 0.0));
    }

    #[test]
    fn constant_one_is_steady() {
        let g = grid(8);
        let mut u = Field2D::from_fn(g, Boundary::NeumannZero, |_, _| 1.0);
        let f = ReactionTerm::hadeler_rothe(4.0).unwrap();
        for _ in 0..50 {
            step2d(&mut u, &f, 2.0, 0.001).unwrap();
        }
        assert!(u.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn level_set_of_constructed_field() {
        let p = exact_hadeler_rothe(4.0, ProfileGrid { z_lo: -30.0, z_hi: 30.0, dz: 0.01 }).unwrap();
        let g = grid(40);
        let k = 2.0 * std::f64::consts::PI / g.lx;
        let u = Field2D::from_fn(g, Boundary::Dirichlet, |x, z| p.value(z - 0.3 * (k * x).cos()).unwrap());
        let ls = extract_level_set(&u, 0.5, None).unwrap();
        let tol = g.dx() * g.dx() + g.z.dz() * g.z.dz();
        for (x, gm) in ls.x.iter().zip(&ls.gamma) {
            assert!((gm - 0.3 * (k * x).cos()).abs() <= tol);
        }
        assert!(profile_residual(&u, &ls, &p).unwrap() <= 1e-4);
        let flat = Field2D::from_fn(g, Boundary::Dirichlet, |_, z| p.value(z).unwrap());
        let ls = extract_level_set(&flat, 0.5, None).unwrap();
        assert!(ls.sup_abs() < 1e-12);
        assert!(profile_residual(&flat, &ls, &p).unwrap() <= 1e-6);
        let c = Field2D::from_fn(g, Boundary::NeumannZero, |_, _| 0.2);
        assert!(extract_level_set(&c, 0.5, None).is_err());
        let half = Field2D::from_fn(g, Boundary::NeumannZero, |_, _| 0.5);
        assert!(monotonicity_check(&half, 0.5, 0.0).unwrap() == 0.0);
    }

    #[test]
    fn corrugated_derivative_norms() {
        let p = exact_hadeler_rothe(4.0, ProfileGrid { z_lo: -30.0, z_hi: 30.0, dz: 0.01 }).unwrap();
        let g = Grid2D::new(20.0, 400, Grid1D::with_spacing(-20.0, 20.0, 0.01).unwrap()).unwrap();
        let a = 0.2;
        let k = 2.0 * std::f64::consts::PI / g.lx;
        let u = Field2D::from_fn(g, Boundary::Dirichlet, |x, z| p.value(z - a * (k * x).cos()).unwrap());
        let (sx, _) = x_derivative_sups(&u, 15.0);
        // sup |u_x| = a k max|phi'| with max|phi'| = b/4 at phi = 1/2
        let expect = a * k * 2f64.sqrt() / 4.0;
        assert!((sx - expect).abs() / expect < 0.01, "{sx} vs {expect}");
        let band = monotonicity_check(&u, 0.5, 0.5).unwrap();
        assert!(band > 0.0);
    }
}
