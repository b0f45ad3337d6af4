use omega_core::correlator::linspace;
use omega_core::crossover::{
    asymptotic_scaled, crossover_exact, crossover_exact_scaled, f_eps_prime, f_eps_second,
    ln_poisson_trace_derivative_form, ln_poisson_trace_stirling, ln_poisson_traces, poisson_traces,
    solve_y_eps, zero_crossings,
};
use omega_core::numerics::special::binomial_u128;

fn exact_binomial(n: u64, k: i64) -> i128 {
    if k < 0 {
        0
    } else {
        binomial_u128(n, k as u64).unwrap() as i128
    }
}

#[test]
fn finite_n_identity_exact_integers() {
    for n in 1..=30u64 {
        let sum: i128 = (0..=n as i64 / 2)
            .map(|p| {
                (exact_binomial(n, p) - exact_binomial(n, p - 1)) * (n as i128 - 2 * p as i128 + 1)
            })
            .sum();
        assert_eq!(sum, 1i128 << n, "N={n}");
        let traces = poisson_traces(n as usize).unwrap();
        for (p, t) in traces.iter().enumerate() {
            let want = exact_binomial(n, p as i64) - exact_binomial(n, p as i64 - 1);
            assert_eq!(*t, want as f64);
        }
    }
    let v = crossover_exact(12, 0.0, &[0.0]).unwrap().values[0].re;
    assert_eq!(v, 4096.0);
}

#[test]
fn log_space_traces_match_direct() {
    let direct = poisson_traces(300).unwrap();
    let logs = ln_poisson_traces(300).unwrap();
    for (d, l) in direct.iter().zip(&logs) {
        assert!((d.ln() - l).abs() < 1e-10);
    }
}

#[test]
fn stirling_asymptotic_of_traces() {
    let n = 200;
    let p = 30;
    let y = p as f64 / n as f64;
    let exact = ln_poisson_traces(n).unwrap()[p];
    let rel = (ln_poisson_trace_stirling(n, y).unwrap() - exact).exp() - 1.0;
    assert!(rel.abs() < 0.02, "rel={rel}");
    // with f'(y) as the slowly varying factor the form is off by ln((1-y)/y)(1-y)/(1-2y)
    let literal = (ln_poisson_trace_derivative_form(n, y).unwrap() - exact).exp();
    assert!((literal - 2.1).abs() < 0.1, "literal ratio {literal}");
    // the two agree as y -> 1/2
    let near = (ln_poisson_trace_derivative_form(2000, 0.499).unwrap()
        - ln_poisson_trace_stirling(2000, 0.499).unwrap())
    .exp();
    assert!((near - 1.0).abs() < 3e-3, "{near}");
}

#[test]
fn damping_bound_at_large_eps() {
    // relative size of p >= 1 towers, computed directly
    let (n, eps) = (100usize, 5.0);
    let xs = [0.0, 0.7, 3.0];
    let curve = crossover_exact(n, eps, &xs).unwrap();
    let traces = poisson_traces(n).unwrap();
    let mut bound = 0.0;
    for (p, t) in traces.iter().enumerate().skip(1) {
        bound +=
            t * (-2.0 * eps / n as f64 * (p * (n + 1 - p)) as f64).exp() * (n - 2 * p + 1) as f64;
    }
    for (x, v) in xs.iter().zip(&curve.values) {
        let p0 = omega_core::correlator::multiplet_factor(n, 0, *x).unwrap();
        let dev = (v.re - p0).abs();
        assert!(dev <= bound * 1.000001, "x={x}");
        assert!(dev / p0.abs() < 5e-3);
    }
}

#[test]
fn monotone_in_eps_at_zero() {
    let mut last = f64::INFINITY;
    for k in 0..20 {
        let eps = 0.25 * k as f64;
        let v = crossover_exact(40, eps, &[0.0]).unwrap().values[0].re;
        assert!(v < last, "eps={eps}");
        last = v;
    }
    assert!(last > 41.0 - 1e-9);
}

#[test]
fn y_eps_properties() {
    let y2 = solve_y_eps(2.0).unwrap();
    assert!((y2 - 0.021247987961).abs() < 1e-10);
    for eps in [1.2, 1.5, 2.0, 3.0, 8.0] {
        let y = solve_y_eps(eps).unwrap();
        assert!(f_eps_prime(y * (1.0 - 1e-9), eps).unwrap() >= 0.0);
        assert!(f_eps_prime((y + 1e-12).min(0.5 - 1e-15), eps).unwrap() <= 0.0);
        assert!(f_eps_second(y, eps).unwrap() < 0.0);
    }
    let r = solve_y_eps(8.0).unwrap() / (-16.0f64).exp();
    assert!((0.95..=1.05).contains(&r), "{r}");
    assert!((0.5 - solve_y_eps(1.0 + 1e-6).unwrap()) < 1e-2);
}

#[test]
fn supercritical_zero_spacing() {
    let xs = linspace(0.05, 60.0, 6000);
    for eps in [1.5, 2.0, 3.0] {
        let curve = crossover_exact_scaled(2000, eps, &xs).unwrap();
        let zeros = curve.zeros();
        assert!(zeros.len() >= 3, "eps={eps}");
        let y = solve_y_eps(eps).unwrap();
        let want = 2.0 * std::f64::consts::PI / (1.0 - 2.0 * y);
        let spacing = (zeros[zeros.len() - 1] - zeros[0]) / (zeros.len() - 1) as f64;
        assert!(
            (spacing / want - 1.0).abs() < 0.02,
            "eps={eps} spacing={spacing} want={want}"
        );
    }
}

#[test]
fn first_zero_and_asymptotic_zeros_at_eps2() {
    let xs = linspace(0.05, 40.0, 4000);
    let exact = crossover_exact_scaled(1000, 2.0, &xs).unwrap();
    let asym = asymptotic_scaled(1000, 2.0, &xs).unwrap();
    let y = solve_y_eps(2.0).unwrap();
    let first = exact.zeros()[0];
    assert!((first * (0.5 - y) / std::f64::consts::PI - 1.0).abs() < 0.02);
    for (a, b) in exact
        .zeros()
        .iter()
        .zip(zero_crossings(&asym.xs, &asym.values).iter())
    {
        assert!((a / b - 1.0).abs() < 0.02);
    }
    // Laplace prefactor: the ratio approaches 1 slowly, O(1/N) corrections
    let ratio = exact.ratio(&asym)[10];
    assert!((0.85..1.05).contains(&ratio), "ratio={ratio}");
}

#[test]
fn subcritical_value_carries_casimir_shift() {
    // exact sum keeps the +1 in p(N+1-p); its O(1) factor e^{-eps} is absent
    // from the closed form, so the ratio tends to e^{-eps} rather than 1
    let exact = crossover_exact_scaled(60, 0.5, &[1.0]).unwrap();
    let asym = asymptotic_scaled(60, 0.5, &[1.0]).unwrap();
    let ratio = exact.ratio(&asym)[0];
    assert!((ratio - 0.5947).abs() < 1e-3, "ratio={ratio}");
    let big = crossover_exact_scaled(4000, 0.5, &[1.0])
        .unwrap()
        .ratio(&asymptotic_scaled(4000, 0.5, &[1.0]).unwrap())[0];
    assert!((big / (-0.5f64).exp() - 1.0).abs() < 0.01, "big={big}");
    let small = asymptotic_scaled(10, 0.0, &[0.3]).unwrap();
    assert_eq!(small.unscaled().unwrap()[0], 1024.0);
}
