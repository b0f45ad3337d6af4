mod common;

use common::{binom, rel};
use num_complex::Complex64;
use omega_core::correlator::{
    character_traces, dim_rho, max_relative_deviation, multiplet_factor, omega_character,
    omega_secular, GammaGrid,
};
use omega_core::rng::RngStream;
use omega_core::unitary::{haar_sample, kicked_map, secular_coefficients, CMatrix, UnitaryMatrix};
use rand::Rng;

/// Trapezoid rule over the phase average of the two determinants.
fn omega_quadrature(
    u: &UnitaryMatrix,
    gamma: Complex64,
    prefactor: Complex64,
    nodes: usize,
) -> Complex64 {
    let n = u.n();
    let id = CMatrix::identity(n, n);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..nodes {
        let e = Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / nodes as f64);
        let left = (&id - u.matrix() * (gamma * e)).determinant();
        let right = (&id - u.adjoint() * e.conj()).determinant();
        acc += left * right;
    }
    acc / nodes as f64 * prefactor
}

#[test]
fn closed_forms_for_small_n() {
    let gammas = [
        Complex64::new(0.7, 0.2),
        Complex64::from_polar(1.0, 0.4),
        Complex64::new(1.3, -0.5),
    ];
    let u1 = UnitaryMatrix::diagonal(&[2.1]).unwrap();
    let id2 = UnitaryMatrix::identity(2).unwrap();
    for g in gammas {
        let grid = GammaGrid::from_gamma(1, &[g]);
        let want = g.powf(-0.5) * (1.0 + g);
        assert!(rel(omega_secular(&u1, &grid).unwrap().values[0], want) < 1e-14);
        assert!(rel(omega_character(&u1, &grid).unwrap().values[0], want) < 1e-14);

        let grid = GammaGrid::from_gamma(2, &[g]);
        let want = (1.0 + 4.0 * g + g * g) / g;
        assert!(rel(omega_secular(&id2, &grid).unwrap().values[0], want) < 1e-14);
        let hand = (1.0 + g + g * g) / g + 3.0;
        assert!(rel(hand, want) < 1e-14);
        assert!(rel(omega_character(&id2, &grid).unwrap().values[0], want) < 1e-14);
    }
}

#[test]
fn quadrature_oracle() {
    for n in 1..=6 {
        let u = haar_sample(n, RngStream::new(31, n as u64)).unwrap();
        let xs = [0.0, 0.9, 3.0, 7.5];
        let grid = GammaGrid::from_x(n, &xs);
        let sec = omega_secular(&u, &grid).unwrap();
        for (k, &x) in xs.iter().enumerate() {
            let q = omega_quadrature(
                &u,
                Complex64::from_polar(1.0, x / n as f64),
                Complex64::from_polar(1.0, -x / 2.0),
                512,
            );
            assert!(rel(sec.values[k], q) <= 1e-6, "n={n} x={x}");
        }
        let off = Complex64::new(0.6, 0.35);
        let q = omega_quadrature(&u, off, off.powf(-(n as f64) / 2.0), 512);
        let s = omega_secular(&u, &GammaGrid::from_gamma(n, &[off]))
            .unwrap()
            .values[0];
        assert!(rel(s, q) <= 1e-6);
    }
}

#[test]
fn route_equality_random_grid() {
    let mut rng = RngStream::new(32, 0).rng();
    for case in 0..50u64 {
        let n = 1 + (case % 8) as usize;
        let u = haar_sample(n, RngStream::new(32, 1 + case)).unwrap();
        let xs: Vec<f64> = (0..20).map(|_| rng.random::<f64>() * 30.0).collect();
        let grid = GammaGrid::from_x(n, &xs);
        let a = omega_secular(&u, &grid).unwrap();
        let b = omega_character(&u, &grid).unwrap();
        assert!(
            max_relative_deviation(&b.values, &a.values, 1e-300) <= 1e-9,
            "case {case}"
        );
        assert!(a.max_imaginary_ratio() <= 1e-9);
        // nonnegative at x = 0 only, where the integrand is |Det(1 - e^{i phi} U)|^2
        let at0 = omega_secular(&u, &GammaGrid::single_x(n, 0.0))
            .unwrap()
            .values[0];
        assert!(at0.re >= 0.0 && at0.im.abs() <= 1e-12 * at0.re.max(1.0));

        let gs: Vec<Complex64> = (0..20)
            .map(|_| Complex64::new(rng.random::<f64>() * 2.0, rng.random::<f64>() - 0.5))
            .collect();
        let grid = GammaGrid::from_gamma(n, &gs);
        let a = omega_secular(&u, &grid).unwrap();
        let b = omega_character(&u, &grid).unwrap();
        assert!(
            max_relative_deviation(&b.values, &a.values, 1e-300) <= 1e-9,
            "gamma case {case}"
        );
    }
}

#[test]
fn kicked_map_routes_agree() {
    let u = kicked_map(64, &[0.7, 0.3]).unwrap();
    let grid = GammaGrid::from_x(64, &[0.3, 2.0, 9.0, 25.0]);
    let a = omega_secular(&u, &grid).unwrap();
    let b = omega_character(&u, &grid).unwrap();
    assert!(max_relative_deviation(&b.values, &a.values, 1e-300) <= 1e-9);
}

#[test]
fn character_traces_partial_sums() {
    let id = character_traces(&UnitaryMatrix::identity(2).unwrap());
    assert_eq!(id.traces.len(), 2);
    assert!((id.traces[0] - 1.0).norm() < 1e-14 && (id.traces[1] - 3.0).norm() < 1e-12);
    assert_eq!(dim_rho(2, 1), 3.0);
    assert_eq!(
        character_traces(&UnitaryMatrix::diagonal(&[1.0]).unwrap())
            .traces
            .len(),
        1
    );

    let u = haar_sample(4, RngStream::new(33, 4)).unwrap();
    let t = character_traces(&u);
    let m = secular_coefficients(&u).squared_moduli();
    let mut partial = Complex64::new(0.0, 0.0);
    for (tp, mp) in t.traces.iter().zip(&m).take(3) {
        partial += tp;
        assert!((partial.re - mp).abs() <= 1e-10);
    }
    for n in 1..=8 {
        let u = haar_sample(n, RngStream::new(34, n as u64)).unwrap();
        assert!(character_traces(&u).bound_excess() <= 1e-8);
    }
}

#[test]
fn multiplet_factor_values() {
    assert_eq!(multiplet_factor(10, 0, 0.0).unwrap(), 11.0);
    assert!((multiplet_factor(2, 1, std::f64::consts::PI).unwrap() - 1.0).abs() < 1e-14);
    let n = 1000;
    for x in [0.5f64, 1.0, 3.0] {
        let want = n as f64 * (x / 2.0).sin() / (x / 2.0);
        let got = multiplet_factor(n, 0, x).unwrap();
        assert!(
            (got - want).abs() <= 1e-3 * want.abs(),
            "x={x}: {got} vs {want}"
        );
    }
    // continuity at the removable point
    let near = multiplet_factor(7, 2, 1e-7).unwrap();
    assert!((near - 4.0).abs() < 1e-9);
    assert!(multiplet_factor(3, 0, std::f64::consts::TAU * 3.0).is_err());
    assert!(multiplet_factor(3, 2, 1.0).is_err());
}

#[test]
fn omega_at_one_bounded_by_fock_dimension() {
    for n in 1..=6 {
        let bound = binom(2 * n as u64, n as u64) as f64;
        let total: f64 = (0..=n / 2)
            .map(|p| dim_rho(n, p) * (n - 2 * p + 1) as f64)
            .sum();
        assert_eq!(total, bound);
        let id = omega_secular(
            &UnitaryMatrix::identity(n).unwrap(),
            &GammaGrid::single_x(n, 0.0),
        )
        .unwrap();
        assert!((id.values[0].re - bound).abs() <= 1e-9 * bound);
        for seed in 0..5 {
            let u = haar_sample(n, RngStream::new(35, 10 * n as u64 + seed)).unwrap();
            let v = omega_secular(&u, &GammaGrid::single_x(n, 0.0))
                .unwrap()
                .values[0]
                .re;
            assert!(v <= bound * (1.0 + 1e-12));
        }
    }
}
