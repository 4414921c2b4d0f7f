use frontlab_core::comparison::*;
use frontlab_core::fit::log_spaced;
use frontlab_core::pde1d::Grid1D;
use frontlab_core::profile::{exact_hadeler_rothe, solve_profile, FrontProfile, ProfileGrid, ProfileOptions};
use frontlab_core::reaction::ReactionTerm;
use proptest::prelude::*;

fn hr4() -> (ReactionTerm<f64>, FrontProfile<f64>) {
    (
        ReactionTerm::hadeler_rothe(4.0).unwrap(),
        exact_hadeler_rothe(4.0, ProfileGrid::default()).unwrap(),
    )
}

fn line_grid() -> ResidualGrid<f64> {
    ResidualGrid::line((-40.0, 40.0, 401), (0.0, 50.0, 26))
}

#[test]
fn residual_of_simple_candidates() {
    let (f, p) = hr4();
    let g = line_grid();
    let wave = ShiftedProfile::new(&p, 0.0, 0.0, (-40.0, 40.0));
    let r = residual_l(&wave, &f, p.c(), &g, Sign::Super, 1e-6).unwrap();
    assert!(r.min.value.abs() <= 1e-6 && r.max.value.abs() <= 1e-6);
    assert_eq!(r.verdict, Verdict::Zero);

    let zero = residual_l(&ZeroCandidate, &f, p.c(), &g, Sign::Sub, 1e-12).unwrap();
    assert_eq!((zero.min.value, zero.max.value), (0.0, 0.0));

    // phi + 0.1 on the saturated side: L = f(phi) - f(phi + 0.1) > 0
    let lifted = ShiftedProfile::new(&p, 0.0, 0.1, (-40.0, -10.0));
    let left = ResidualGrid::line((-40.0, -10.0, 61), (0.0, 0.0, 1));
    let r = residual_l(&lifted, &f, p.c(), &left, Sign::Super, 1e-8).unwrap();
    assert!(r.min.value > 0.0);
    let z = r.min.z;
    let phi = p.with_tails(-40.0, 40.0).value(z).unwrap();
    assert!((r.min.value - (f.eval(phi) - f.eval(phi + 0.1))).abs() < 1e-10);
}

#[test]
fn rothe_supersolution_at_q0_one_tenth() {
    let (f, p) = hr4();
    let side = search_rothe_side(&f, &p, Sign::Super, 0.1, 0.0, 0.0, &line_grid(), &RotheSearch::standard(p.c()), 1e-8).unwrap();
    assert!(side.report.passed() && side.refined.passed());
    assert!(side.report.min.value >= -1e-8);
    assert!(refinement_stable(&side.report, &side.refined));
}

#[test]
fn rothe_without_perturbation_is_the_wave() {
    let (f, p) = hr4();
    let w = RotheCandidate {
        profile: p.with_tails(-45.0, 45.0),
        psi: CutoffPsi::new(-p.c() / 2.0).unwrap(),
        q0: 0.0,
        z1: 0.0,
        z2: 0.0,
        beta: 0.1,
        shift: 0.0,
        sign: Sign::Super,
    };
    let r = residual_l(&w, &f, p.c(), &line_grid(), Sign::Super, 1e-8).unwrap();
    assert_eq!(r.verdict, Verdict::Zero);
}

#[test]
fn rothe_pair_admissible_q0() {
    let (f, p) = hr4();
    let cert = admissible_rothe_pair(&f, &p, &[0.1, 0.03, 0.01, 0.003, 0.001], 0.0, 0.0, &line_grid(), &RotheSearch::standard(p.c()), 1e-8).unwrap();
    assert!(cert.passed() && cert.refinement_stable());
    assert!(cert.constant("q0").unwrap() < 0.1);
}

#[test]
fn wang_pair_for_kpp() {
    let f = ReactionTerm::kpp();
    let p = solve_profile(&f, 2.5, &ProfileOptions::default()).unwrap();
    let cert = check_wang_pair(&f, &p, 0.05, &line_grid(), &WangSearch::standard(), 1e-8).unwrap();
    assert!(cert.passed() && cert.refinement_stable());
    let exact = WangCandidate {
        profile: p.with_tails(-45.0, 45.0),
        epsilon: 0.0,
        sigma: 1.0,
        beta: 1.0,
        sign: Sign::Super,
    };
    let r = residual_l(&exact, &f, p.c(), &line_grid(), Sign::Super, 1e-8).unwrap();
    assert_eq!(r.verdict, Verdict::Zero);
    assert!(matches!(
        check_wang_pair(&ReactionTerm::hadeler_rothe(4.0).unwrap(), &p, 0.05, &line_grid(), &WangSearch::standard(), 1e-8),
        Err(ComparisonError::NotKppType)
    ));
}

#[test]
fn exponential_pair_and_negative_test() {
    let (f, p) = hr4();
    let b = exponential_bound(&f, &p).unwrap();
    assert!((b.k - 2f64.sqrt()).abs() < 1e-3, "k = {}", b.k);
    let ok = check_exponential_pair(&f, &p, 0.0, b.a_sufficient, (-40.0, 40.0, 401), 26, 1e-8).unwrap();
    assert!(ok.passed() && ok.refinement_stable());
    let bad = check_exponential_pair(&f, &p, 0.0, 0.5 * b.a_tail_threshold, (-40.0, 40.0, 401), 26, 1e-8).unwrap();
    assert!(!bad.plus.passed() || !bad.minus.passed());
    let short = exact_hadeler_rothe(4.0, ProfileGrid { z_lo: -5.0, z_hi: 5.0, dz: 0.01 }).unwrap();
    assert!(matches!(exponential_bound(&f, &short), Err(ComparisonError::TailTooShort(_))));
}

#[test]
fn main_pair_degenerate_and_flat() {
    let (f, p) = hr4();
    let g = ResidualGrid { x: Some((20.0, 10)), z: (-40.0, 40.0, 201), t: (0.0, 50.0, 11) };
    let psi = CutoffPsi::new(-p.c() / 2.0).unwrap();
    let zero = check_main_pair(&f, &p, &|_| 0.0, psi, ModulationPair::zero(), &g, 1e-6, false).unwrap();
    assert_eq!(zero.plus.verdict, Verdict::Zero);
    assert_eq!(zero.minus.verdict, Verdict::Zero);

    let g = ResidualGrid { x: Some((20.0, 10)), z: (-40.0, 40.0, 401), t: (0.0, 50.0, 26) };
    let cert = search_main_pair(&f, &p, &|_| 3.0, &g, &MainSearch::standard(p.c(), 0.5), 1e-6).unwrap();
    assert!(cert.passed() && cert.refinement_stable());
    assert!(cert.plus.min.value >= -1e-8);
    assert!(cert.plus.split.is_some());
}

#[test]
fn supersolution_bounds_the_solution() {
    let (f, p) = hr4();
    let side = search_rothe_side(&f, &p, Sign::Super, 0.003, 0.0, 0.0, &line_grid(), &RotheSearch::standard(p.c()), 1e-8).unwrap();
    let w = RotheCandidate {
        profile: p.with_tails(-45.0 - side.shift, 45.0),
        psi: CutoffPsi::new(-p.c() / 2.0).unwrap(),
        q0: 0.003,
        z1: 0.0,
        z2: 0.0,
        beta: side.beta,
        shift: side.shift,
        sign: Sign::Super,
    };
    let grid = Grid1D::with_spacing(-40.0, 40.0, 0.05).unwrap();
    let excess = supersolution_excess(&w, &f, p.c(), grid, 0.8 * 0.05 * 0.05 / 2.0, &[1.0, 5.0, 20.0]).unwrap();
    for (t, e) in excess {
        assert!(e <= 1e-4, "t={t}: excess {e}");
    }
}

#[test]
fn modulation_bracket_is_exact() {
    let t = log_spaced(1e-4, 1e6, 10_000);
    for (c1, c2, k) in [(1.0, 1.0, 1.0), (1e-6, 1e-3, 0.5), (0.3, 40.0, 0.9)] {
        let m = build_modulation(1e9, k, 1.0, c1, c2).unwrap();
        assert!(m.bracket_defect(&t) <= 1e-12);
        assert!(m.bracket_defect(&[0.0]) <= 1e-12);
        assert!(t.iter().all(|&s| m.p(s) <= 2.0 * c1 / k * (1.0 + 1e-15)));
    }
}

proptest! {
    #[test]
    fn psi_sandwich(lambda1 in -3.0f64..-0.1, s in -20.0f64..20.0) {
        let psi = CutoffPsi::new(lambda1).unwrap();
        let v = psi.eval(s).psi;
        let y = (lambda1 * s).exp();
        let lower = if y <= 0.5 { y } else { 0.0 };
        prop_assert!(lower <= v && v <= (2.0 * y).min(1.0));
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn psi_is_monotone(lambda1 in 0.1f64..3.0, s in -20.0f64..20.0, ds in 0.0f64..1.0) {
        let psi = CutoffPsi::new(lambda1).unwrap();
        prop_assert!(psi.eval(s).psi <= psi.eval(s + ds).psi);
        prop_assert!(psi.eval(s).dpsi >= 0.0);
    }
}
