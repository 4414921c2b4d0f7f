use frontlab_core::profile::{
    classify_front, exact_hadeler_rothe, find_min_speed, hadeler_rothe_speed,
    measure_decay_exponent_with_prefactor, solve_profile, FrontClass, ProfileGrid, ProfileOptions,
};
use frontlab_core::reaction::ReactionTerm;

fn hr(nu: f64) -> ReactionTerm<f64> {
    ReactionTerm::hadeler_rothe(nu).unwrap()
}

fn opts() -> ProfileOptions<f64> {
    ProfileOptions::default()
}

#[test]
fn minimal_speeds() {
    let kpp = find_min_speed(&ReactionTerm::kpp(), 1e-3, &opts()).unwrap();
    assert!((kpp.c_star - 2.0).abs() <= 1e-3, "{kpp:?}");
    assert!(kpp.c_star >= 2.0);

    let push = find_min_speed(&hr(4.0), 1e-3, &opts()).unwrap();
    assert!((push.c_star - 3.0 / 2f64.sqrt()).abs() <= 1e-3, "{push:?}");

    let pulled = find_min_speed(&hr(1.0), 1e-3, &opts()).unwrap();
    assert!((pulled.c_star - 2.0).abs() <= 1e-3, "{pulled:?}");
    // cross-check at halved tolerance
    let pulled_fine = find_min_speed(&hr(1.0), 5e-4, &opts()).unwrap();
    assert!((pulled_fine.c_star - pulled.c_star).abs() <= 1e-3);
}

#[test]
fn closed_form_speed_oracle() {
    // phi = 1/(1+e^{bz}) solves the profile equation iff c = b + 1/b with b^2 = nu/2
    for nu in [2.5f64, 3.0, 4.0, 6.0, 8.0] {
        let b: f64 = (nu / 2.0).sqrt();
        let c = hadeler_rothe_speed(nu);
        let f = hr(nu);
        let mut worst: f64 = 0.0;
        for k in -200..=200 {
            let z = k as f64 * 0.05;
            let phi = 1.0 / (1.0 + (b * z).exp());
            let d1 = -b * phi * (1.0 - phi);
            let d2 = -b * d1 * (1.0 - 2.0 * phi);
            worst = worst.max((d2 + c * d1 + f.eval(phi)).abs());
        }
        assert!(worst < 1e-13, "nu={nu} residual {worst}");
        let found = find_min_speed(&f, 1e-6, &opts()).unwrap();
        assert!((found.c_star - c).abs() <= 1e-6, "nu={nu}: {found:?} vs {c}");
    }
}

#[test]
fn min_speed_monotone_in_nu() {
    let speeds: Vec<f64> = [2.5, 3.0, 4.0, 6.0, 8.0]
        .iter()
        .map(|&nu| find_min_speed(&hr(nu), 1e-5, &opts()).unwrap().c_star)
        .collect();
    assert!(speeds.windows(2).all(|w| w[1] >= w[0]), "{speeds:?}");
}

#[test]
fn shooting_matches_exact_profile() {
    for nu in [3.0, 4.0, 6.0] {
        let f = hr(nu);
        let ms = find_min_speed(&f, 1e-10, &opts()).unwrap();
        let shot = solve_profile(&f, ms.hi, &opts()).unwrap();
        let exact = exact_hadeler_rothe(nu, ProfileGrid::default()).unwrap();
        let mut sup: f64 = 0.0;
        for (i, &v) in shot.phi().iter().enumerate() {
            let z = shot.z(i);
            if z < exact.z_lo() || z > exact.z_hi() {
                continue;
            }
            sup = sup.max((v - exact.value(z).unwrap()).abs());
        }
        assert!(sup <= 1e-5, "nu={nu}: sup {sup}");
    }
}

#[test]
fn translation_normalization() {
    let f = hr(4.0);
    let c = hadeler_rothe_speed(4.0) + 0.3;
    let a = solve_profile(&f, c, &opts()).unwrap();
    let b = solve_profile(&f, c, &ProfileOptions { start_offset: 1e-10, ..opts() }).unwrap();
    let mut sup: f64 = 0.0;
    for i in 0..a.len() {
        let z = a.z(i);
        if let Ok(v) = b.value(z) {
            sup = sup.max((a.phi()[i] - v).abs());
        }
    }
    assert!(sup <= 1e-8, "sup {sup}");
}

#[test]
fn exponent_dichotomy() {
    for nu in [3.0, 4.0, 6.0] {
        let f = hr(nu);
        let ms = find_min_speed(&f, 1e-10, &opts()).unwrap();
        let at_min = solve_profile(&f, ms.hi, &opts()).unwrap();
        let lm = f.exponents(ms.c_star).unwrap().lambda_minus;
        let m = at_min.decay_exponent_measured().unwrap();
        assert!(((m - lm) / lm).abs() <= 0.05, "nu={nu}: {m} vs {lm}");

        let c = ms.c_star + 0.3;
        let faster = solve_profile(&f, c, &opts()).unwrap();
        let lp = f.exponents(c).unwrap().lambda_plus;
        let m = faster.decay_exponent_measured().unwrap();
        assert!(((m - lp) / lp).abs() <= 0.05, "nu={nu}: {m} vs {lp}");
    }
}

#[test]
fn classification() {
    let f = hr(4.0);
    let ms = find_min_speed(&f, 1e-10, &opts()).unwrap();
    let p = solve_profile(&f, ms.hi, &opts()).unwrap();
    assert_eq!(classify_front(&f, ms.c_star, &p, 1e-3).unwrap(), FrontClass::Pushed);
    let m = p.decay_exponent_measured().unwrap();
    assert!((m + 2f64.sqrt()).abs() <= 0.02, "{m}");

    let kpp = ReactionTerm::kpp();
    let ms = find_min_speed(&kpp, 1e-6, &opts()).unwrap();
    let p = solve_profile(&kpp, ms.hi, &opts()).unwrap();
    assert_eq!(classify_front(&kpp, ms.c_star, &p, 1e-3).unwrap(), FrontClass::Pulled);
    // double-root tail: ln phi = -z + ln(alpha z + beta)
    let (lam, _) = measure_decay_exponent_with_prefactor(&p, p.default_decay_window().unwrap()).unwrap();
    assert!((lam + 1.0).abs() < 0.05, "{lam}");

    // nu = 2.05: c* - 2 = 1.5e-4, needs a margin below that
    let f = hr(2.05);
    let ms = find_min_speed(&f, 1e-10, &opts()).unwrap();
    assert!((ms.c_star - hadeler_rothe_speed(2.05)).abs() < 1e-8, "{ms:?}");
    let p = solve_profile(&f, ms.hi, &opts()).unwrap();
    assert_eq!(classify_front(&f, ms.c_star, &p, 1e-4).unwrap(), FrontClass::Pushed);
}
