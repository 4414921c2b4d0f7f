use frontlab_core::pde1d::{step, Boundary, Field1D, Grid1D};
use frontlab_core::pde2d::*;
use frontlab_core::profile::{exact_hadeler_rothe, hadeler_rothe_speed, FrontProfile, ProfileGrid};
use frontlab_core::reaction::ReactionTerm;
use std::f64::consts::TAU;

fn setup(nx: usize, dz: f64) -> (ReactionTerm<f64>, FrontProfile<f64>, Grid2D<f64>) {
    let f = ReactionTerm::hadeler_rothe(4.0).unwrap();
    let p = exact_hadeler_rothe(4.0, ProfileGrid::default()).unwrap().with_tails(-60.0, 60.0);
    let g = Grid2D::new(20.0, nx, Grid1D::with_spacing(-20.0, 20.0, dz).unwrap()).unwrap();
    (f, p, g)
}

#[test]
fn column_consistency_over_many_steps() {
    let (f, p, g) = setup(8, 0.1);
    let line: Vec<f64> = g.z.nodes().iter().map(|&z| p.value(z - 0.7).unwrap()).collect();
    let mut u2 = Field2D::from_line(g, Boundary::Dirichlet, &line);
    let mut u1 = Field1D::new(g.z, line, Boundary::Dirichlet);
    let c = hadeler_rothe_speed(4.0);
    let dt = 0.8 * max_stable_dt2d(g.dx(), g.z.dz());
    for _ in 0..500 {
        step2d(&mut u2, &f, c, dt).unwrap();
        step(&mut u1, &f, c, dt).unwrap();
    }
    for i in 0..g.nx {
        let gap = u2.column(i).iter().zip(&u1.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(gap <= 1e-12, "column {i}: {gap}");
    }
}

#[test]
fn planar_wave_is_steady_to_order_dz2() {
    let (f, p, g) = setup(10, 0.1);
    let mut u = Field2D::from_fn(g, Boundary::Dirichlet, |_, z| p.value(z).unwrap());
    let start = u.values.clone();
    let dt = 0.8 * max_stable_dt2d(g.dx(), g.z.dz());
    let steps = (1.0 / dt).round() as usize;
    for _ in 0..steps {
        step2d(&mut u, &f, hadeler_rothe_speed(4.0), dt).unwrap();
    }
    let change = u.values.iter().zip(&start).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(change <= g.z.dz() * g.z.dz(), "{change}");
}

#[test]
fn level_set_examples() {
    let (_, p, g) = setup(64, 0.05);
    let k = TAU / g.lx;
    let u = Field2D::from_fn(g, Boundary::Dirichlet, |x, z| p.value(z - 0.3 * (k * x).cos()).unwrap());
    let ls = extract_level_set(&u, 0.5, None).unwrap();
    let tol = g.dx() * g.dx() + g.z.dz() * g.z.dz();
    for (x, gamma) in ls.x.iter().zip(&ls.gamma) {
        assert!((gamma - 0.3 * (k * x).cos()).abs() <= tol);
    }
    let planar = Field2D::from_fn(g, Boundary::Dirichlet, |_, z| p.value(z).unwrap());
    let ls = extract_level_set(&planar, 0.5, None).unwrap();
    assert!(ls.sup_abs() <= g.z.dz() * g.z.dz());
    let flat = Field2D::from_fn(g, Boundary::NeumannZero, |_, _| 0.2);
    assert!(extract_level_set(&flat, 0.5, None).is_err());
}

#[test]
fn profile_residual_examples() {
    let (_, p, g) = setup(40, 0.05);
    let k = TAU / g.lx;
    let u = Field2D::from_fn(g, Boundary::Dirichlet, |x, z| p.value(z - 0.5 * (k * x).sin()).unwrap());
    let ls = extract_level_set(&u, 0.5, None).unwrap();
    assert!(profile_residual(&u, &ls, &p).unwrap() <= 1e-4);
    let planar = Field2D::from_fn(g, Boundary::Dirichlet, |_, z| p.value(z).unwrap());
    let ls = extract_level_set(&planar, 0.5, None).unwrap();
    assert!(profile_residual(&planar, &ls, &p).unwrap() <= 1e-6);
}

#[test]
fn monotonicity_of_planar_wave() {
    let (_, p, g) = setup(8, 0.05);
    let u = Field2D::from_fn(g, Boundary::Dirichlet, |_, z| p.value(z).unwrap());
    let m = p.value(0.0).unwrap().min(1.0 - p.value(0.0).unwrap());
    let got = monotonicity_check(&u, 0.5, m * (1.0 - 1e-3)).unwrap();
    // min |phi'| over the band, on the profile's own fine grid
    let min_slope = p
        .z_grid()
        .iter()
        .zip(p.phi().iter().zip(p.phi_prime()))
        .filter(|(z, (v, _))| (**v - 0.5).abs() <= m * (1.0 - 1e-3) && z.abs() <= 20.0)
        .fold(f64::INFINITY, |a, (_, (_, d))| a.min(d.abs()));
    assert!(got >= 0.9 * min_slope, "{got} vs {min_slope}");
    let half = Field2D::from_fn(g, Boundary::NeumannZero, |_, _| 0.5);
    assert!(monotonicity_check(&half, 0.5, 0.0).map_or(true, |v| v == 0.0));
}

#[test]
fn x_derivatives_of_x_independent_data_vanish() {
    let (f, p, g) = setup(12, 0.1);
    let mut u = Field2D::from_fn(g, Boundary::Dirichlet, |_, z| p.value(z + 1.0).unwrap());
    let dt = 0.8 * max_stable_dt2d(g.dx(), g.z.dz());
    for _ in 0..100 {
        step2d(&mut u, &f, 2.0, dt).unwrap();
    }
    let (sx, sxx) = x_derivative_sups(&u, 10.0);
    assert!(sx <= 1e-12 && sxx <= 1e-12, "{sx} {sxx}");
}

#[test]
fn corrugation_flattens() {
    let (f, p, g) = setup(40, 0.1);
    let dt = 0.8 * max_stable_dt2d(g.dx(), g.z.dz());
    let k = TAU / g.lx;
    let mut u = Field2D::from_fn(g, Boundary::Dirichlet, |x, z| p.value(z - 0.5 * (k * x).cos()).unwrap());
    let opts = Run2dOptions {
        level: 0.5,
        band_margin: 0.5 * (1.0 - 1e-3),
        derivative_window: 10.0,
    };
    let d = run_2d(&mut u, &f, hadeler_rothe_speed(4.0), dt, &[5.0, 40.0], &p, &opts).unwrap();
    let (a, b) = (&d[0], &d[1]);
    assert!(b.sup_ux < 0.2 * a.sup_ux, "{} -> {}", a.sup_ux, b.sup_ux);
    assert!(b.min_minus_uz > 0.0);
    let (ga, gb) = (a.gamma_derivatives.unwrap(), b.gamma_derivatives.unwrap());
    assert!(gb.sup_gx < ga.sup_gx);
    assert!(b.corridor.0 >= -1e-6 && b.corridor.1 <= 1.0 + 1e-6);
}
