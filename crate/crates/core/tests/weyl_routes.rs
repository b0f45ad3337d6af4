use num_complex::Complex64;
use omega_core::correlator::{omega_secular, GammaGrid, GridPoint};
use omega_core::rng::RngStream;
use omega_core::unitary::{eigenphases, haar_sample, UnitaryMatrix};
use omega_core::weyl::{
    enumerate_configs, satisfies_saddle_condition, standard_saddles, weyl_point, weyl_sum,
    weyl_term, PhiSpectrum, SubsetConfig, WeylNodes,
};
use rand::Rng;

fn random_thetas(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = RngStream::new(seed, 99).rng();
    (0..n)
        .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
        .collect()
}

fn secular_at(thetas: &[f64], x: f64) -> Complex64 {
    let u = UnitaryMatrix::diagonal(thetas).unwrap();
    omega_secular(&u, &GammaGrid::single_x(thetas.len(), x))
        .unwrap()
        .values[0]
}

#[test]
fn haar_n4_generic_and_near_pole() {
    let u = haar_sample(4, RngStream::new(21, 0)).unwrap();
    for (x, tol) in [(1.3, 1e-7), (1e-4, 1e-4)] {
        let grid = GammaGrid::single_x(4, x);
        let w = weyl_sum(&u, &grid).unwrap().values[0];
        let s = omega_secular(&u, &grid).unwrap().values[0];
        let rel = (w - s).norm() / s.norm();
        assert!(rel <= tol, "x={x} rel={rel:e}");
    }
}

#[test]
fn diagonal_exactness_up_to_n6() {
    for n in 1..=6 {
        let thetas = random_thetas(n, n as u64);
        for &x in &[0.37, 2.9, 1e-4] {
            let w = weyl_point(&thetas, &GridPoint::from_x(n, x), false)
                .unwrap()
                .omega;
            let s = secular_at(&thetas, x);
            let tol = if x < 1e-3 { 1e-4 } else { 1e-7 };
            let rel = (w - s).norm() / s.norm();
            assert!(rel <= tol, "n={n} x={x} rel={rel:e}");
        }
    }
}

#[test]
fn off_circle_gamma() {
    let thetas = random_thetas(3, 5);
    let g = Complex64::new(0.7, 0.2);
    let w = weyl_point(&thetas, &GridPoint::from_gamma(g), false)
        .unwrap()
        .omega;
    let u = UnitaryMatrix::diagonal(&thetas).unwrap();
    let s = omega_secular(&u, &GammaGrid::from_gamma(3, &[g]))
        .unwrap()
        .values[0];
    assert!((w - s).norm() / s.norm() < 1e-10);
}

#[test]
fn log_form_beyond_precise_range() {
    // well-separated phases: double-precision terms cancel only mildly
    let thetas: Vec<f64> = (0..9)
        .map(|j| std::f64::consts::TAU * (j as f64 + 0.3 * (j as f64).sin()) / 9.0)
        .collect();
    let x = 2.3;
    let w = weyl_point(&thetas, &GridPoint::from_x(9, x), true).unwrap();
    let s = secular_at(&thetas, x);
    assert!(
        (w.omega - s).norm() / s.norm() < 1e-7,
        "{} vs {}",
        w.omega,
        s
    );
    let count: u64 = w.aggregates.iter().map(|a| a.count).sum();
    assert_eq!(count, 48620);
}

#[test]
fn cancellation_keeps_sum_bounded() {
    let thetas = random_thetas(4, 3);
    let at_one = secular_at(&thetas, 0.0).re;
    let mut last_max = 0.0;
    for k in 1..=10 {
        let x = 10f64.powi(-k / 2 - 1) * (1.0 + 0.1 * k as f64);
        let r = weyl_point(&thetas, &GridPoint::from_x(4, x), false).unwrap();
        assert!(r.omega.norm() <= 2.0 * at_one, "x={x}");
        assert!(r.max_term >= last_max * 0.5);
        last_max = r.max_term;
    }
    assert!(last_max > 1e10);
}

#[test]
fn class_sums_reassemble_total() {
    let thetas = random_thetas(3, 8);
    let r = weyl_point(&thetas, &GridPoint::from_x(3, 0.8), true).unwrap();
    let total: Complex64 = r.aggregates.iter().map(|a| a.sum).sum();
    assert!((total - r.raw_sum).norm() < 1e-9 * r.max_term);
    for a in &r.aggregates {
        let expect = omega_core::numerics::special::binomial(3, a.p as isize)
            * omega_core::numerics::special::binomial(a.p, a.r as isize)
            * omega_core::numerics::special::binomial(3 - a.p, a.r as isize);
        assert_eq!(a.count as f64, expect);
    }
}

#[test]
fn complement_partner_is_conjugate_after_prefactor() {
    let thetas = random_thetas(2, 4);
    let x = 0.9;
    let phis = PhiSpectrum::new(&thetas, x);
    let pref = Complex64::from_polar(1.0, -x / 2.0);
    let mut total = Complex64::new(0.0, 0.0);
    for cfg in enumerate_configs(2).unwrap() {
        let a = pref * weyl_term(&cfg, &phis).unwrap();
        let partner = cfg.partner();
        assert_eq!(partner.p(), 2 - cfg.p());
        let b = pref * weyl_term(&partner, &phis).unwrap();
        assert!((a - b.conj()).norm() < 1e-10 * a.norm().max(1.0), "{cfg:?}");
        total += a;
    }
    assert!(total.im.abs() < 1e-10);
}

#[test]
fn all_upper_config_is_plus_saddle() {
    let u = haar_sample(3, RngStream::new(2, 2)).unwrap();
    let spec = eigenphases(&u).unwrap();
    let x = 0.5;
    let phis = PhiSpectrum::new(&spec.thetas, x);
    let cfg = SubsetConfig::new(3, vec![0, 1, 2]).unwrap();
    let term = weyl_term(&cfg, &phis).unwrap() * Complex64::from_polar(1.0, -x / 2.0);
    let (plus, minus) = standard_saddles(&spec, Complex64::from_polar(1.0, x / 3.0)).unwrap();
    assert!((term - plus).norm() < 1e-9 * plus.norm());
    let exact = omega_secular(&u, &GammaGrid::single_x(3, x))
        .unwrap()
        .values[0];
    // truncation to two saddles is not exact beyond N = 1
    assert!((plus + minus - exact).norm() > 1e-6 * exact.norm());
}

#[test]
fn saddle_condition_holds_exactly_on_configs() {
    for n in 1..=4 {
        let thetas = random_thetas(n, 40 + n as u64);
        let nodes = WeylNodes::new(&thetas, &GridPoint::from_x(n, 0.6));
        for cfg in enumerate_configs(n).unwrap() {
            assert!(satisfies_saddle_condition(cfg.elements(), nodes.z()));
        }
        for size in [n - 1, n + 1] {
            let elems: Vec<usize> = (0..size).collect();
            assert!(!satisfies_saddle_condition(&elems, nodes.z()));
        }
    }
}
