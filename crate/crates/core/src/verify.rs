//! Cross-route invariant suite behind `omega verify`.

use num_complex::Complex64;
use serde::Serialize;

use crate::averaging::{
    ensemble_correlator_analytic, ensemble_correlator_mc, isotropic_correlator,
    mc_v_average_adjoint, v_average_adjoint, EnsembleKind,
};
use crate::correlator::{max_relative_deviation, omega_character, omega_secular, GammaGrid};
use crate::crossover::{crossover_exact, solve_y_eps};
use crate::error::Result;
use crate::fock::{
    build_basis, casimir_table, character_trace, hermitian_spectrum, integer_spectrum, laplacian,
};
use crate::geometry::{expected_manifold_count, manifold_census, mc_omega, total_mass};
use crate::loops::{expected_loop_constant, loop_constant};
use crate::numerics::special::binomial_u128;
use crate::rng::RngStream;
use crate::unitary::{adjoint_operator, haar_sample};
use crate::weyl::weyl_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

impl std::str::FromStr for Level {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Self::Quick),
            "full" => Ok(Self::Full),
            other => Err(crate::Error::Parse(format!(
                "unknown level {other:?} (quick|full)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, outcome: Result<(bool, String)>) -> CheckResult {
    match outcome {
        Ok((passed, detail)) => CheckResult {
            name: name.into(),
            passed,
            detail,
        },
        Err(e) => CheckResult {
            name: name.into(),
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn sample_grid(n: usize) -> GammaGrid {
    GammaGrid::from_x(n, &[0.0, 0.4, 1.7, 5.3, 11.0])
}

fn routes(max_n: usize, seed: u64) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in 1..=max_n {
        let u = haar_sample(n, RngStream::new(seed, n as u64))?;
        let grid = sample_grid(n);
        let a = omega_secular(&u, &grid)?;
        let b = omega_character(&u, &grid)?;
        worst = worst.max(max_relative_deviation(&b.values, &a.values, 1e-300));
    }
    Ok((
        worst <= 1e-9,
        format!("secular vs character max rel {worst:.2e} (N<={max_n})"),
    ))
}

fn fock_route(max_n: usize, seed: u64) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in 1..=max_n {
        let basis = build_basis(n)?;
        let u = haar_sample(n, RngStream::new(seed, 100 + n as u64))?;
        for g in [Complex64::new(0.6, 0.3), Complex64::from_polar(1.0, 0.9)] {
            let f = character_trace(&u, g, &basis)?;
            let s = omega_secular(&u, &GammaGrid::from_gamma(n, &[g]))?.values[0];
            worst = worst.max((f - s).norm() / s.norm());
        }
    }
    Ok((
        worst <= 1e-8,
        format!("fock vs secular max rel {worst:.2e} (N<={max_n})"),
    ))
}

fn weyl_route(max_n: usize, seed: u64) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in 1..=max_n {
        let u = haar_sample(n, RngStream::new(seed, 200 + n as u64))?;
        let grid = GammaGrid::from_x(n, &[0.7, 3.1]);
        let w = weyl_sum(&u, &grid)?;
        let s = omega_secular(&u, &grid)?;
        worst = worst.max(max_relative_deviation(&w.values, &s.values, 1e-300));
    }
    Ok((
        worst <= 1e-7,
        format!("weyl vs secular max rel {worst:.2e} (N<={max_n})"),
    ))
}

fn casimir(max_n: usize) -> Result<(bool, String)> {
    for n in 1..=max_n {
        let basis = build_basis(n)?;
        let spec = integer_spectrum(&hermitian_spectrum(&laplacian(&basis))?)?;
        if spec != casimir_table(n) {
            return Ok((false, format!("Laplacian spectrum mismatch at N={n}")));
        }
    }
    Ok((
        true,
        format!("Laplacian spectra match 2p(N+1-p) table (N<={max_n})"),
    ))
}

fn loops(max_n: usize, two_loop_n: usize, seed: u64) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in 1..=max_n {
        let u = haar_sample(n, RngStream::new(seed, 300 + n as u64))?;
        let t = adjoint_operator(&u) * Complex64::from_polar(0.7, 0.3);
        let orders: &[usize] = if n <= two_loop_n { &[1, 2] } else { &[1] };
        for &order in orders {
            let c = loop_constant(&t, order)?;
            let want = expected_loop_constant(n, order)?;
            worst = worst.max((c - want).norm() / want.abs());
        }
    }
    Ok((worst <= 1e-8, format!("loop constants max rel {worst:.2e}")))
}

fn ensembles(full: bool, seed: u64) -> Result<(bool, String)> {
    for n in 1..=20usize {
        let v =
            ensemble_correlator_analytic(EnsembleKind::Poisson, n, &GammaGrid::single_x(n, 0.0))
                .values[0];
        if v.re != (1u64 << n) as f64 {
            return Ok((false, format!("Poisson Omega(1) != 2^N at N={n}")));
        }
    }
    if !full {
        return Ok((true, "Poisson Omega(1) = 2^N (N<=20)".into()));
    }
    let grid = GammaGrid::from_x(8, &[0.5, 2.0, 6.0]);
    let mc = ensemble_correlator_mc(
        EnsembleKind::Cue,
        8,
        &grid,
        10_000,
        RngStream::new(seed, 400),
    )?;
    let exact = ensemble_correlator_analytic(EnsembleKind::Cue, 8, &grid);
    let z = mc
        .curve
        .values
        .iter()
        .zip(&exact.values)
        .zip(&mc.stderr)
        .map(|((a, b), s)| (a - b).norm() / s)
        .fold(0.0, f64::max);
    Ok((z <= 3.0, format!("Poisson 2^N exact; CUE MC max z {z:.2}")))
}

fn v_average(seed: u64) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in 2..=3 {
        let u = haar_sample(n, RngStream::new(seed, 500 + n as u64))?;
        let closed = v_average_adjoint(&u)?;
        let mc = mc_v_average_adjoint(&u, 20_000, RngStream::new(seed, 510 + n as u64))?;
        let se = mc.stderr.expect("sampled scheme carries errors");
        for (k, (a, b)) in closed.matrix.iter().zip(mc.matrix.iter()).enumerate() {
            worst = worst.max((a - b).norm() / se[k].max(1e-12));
        }
    }
    Ok((
        worst <= 4.0,
        format!("V-average closed form vs MC max z {worst:.2}"),
    ))
}

fn isotropic(seed: u64) -> Result<(bool, String)> {
    let u = haar_sample(5, RngStream::new(seed, 600))?;
    let grid = sample_grid(5);
    let a = isotropic_correlator(&u, 0.0, &grid)?;
    let b = omega_character(&u, &grid)?;
    let dev = max_relative_deviation(&a.values, &b.values, 1e-300);
    Ok((
        dev <= 1e-12,
        format!("isotropic eps=0 identity dev {dev:.2e}"),
    ))
}

fn crossover() -> Result<(bool, String)> {
    for n in 1..=30usize {
        let v = crossover_exact(n, 0.0, &[0.0])?.values[0].re;
        if v != (1u64 << n) as f64 {
            return Ok((false, format!("finite-N identity fails at N={n}")));
        }
    }
    let r = solve_y_eps(8.0)? / (-16.0f64).exp();
    Ok((
        (0.95..=1.05).contains(&r),
        format!("identity N<=30; y_8 e^16 = {r:.5}"),
    ))
}

fn geometry(full: bool, seed: u64) -> Result<(bool, String)> {
    for n in 1..=10usize {
        let c = manifold_census(n)?;
        let want = binomial_u128(2 * n as u64, n as u64).expect("small");
        if c.count() != expected_manifold_count(n) || c.total_points() != want {
            return Ok((false, format!("census mismatch at N={n}")));
        }
        if (total_mass(n) - want as f64).abs() > 1e-9 * want as f64 {
            return Ok((false, format!("C_N I(N,N) != C(2N,N) at N={n}")));
        }
    }
    if !full {
        return Ok((true, "census and total mass (N<=10)".into()));
    }
    let u = haar_sample(1, RngStream::new(seed, 700))?;
    let g = Complex64::new(0.5, 0.2);
    let est = mc_omega(&u, g, 200_000, RngStream::new(seed, 701))?;
    let exact = omega_secular(&u, &GammaGrid::from_gamma(1, &[g]))?.values[0];
    let z = (est.estimate - exact).norm() / est.stderr;
    Ok((
        z <= 3.0,
        format!("census, total mass; mc_omega N=1 z {z:.2}"),
    ))
}

/// Runs the suite; every check is attempted even after failures.
pub fn run_suite(level: Level, seed: u64) -> Vec<CheckResult> {
    let full = level == Level::Full;
    let (route_n, fock_n, weyl_n, casimir_n) = if full { (8, 3, 8, 4) } else { (3, 2, 3, 2) };
    let mut out = vec![
        check("route-equivalence", routes(route_n, seed)),
        check("fock-oracle", fock_route(fock_n, seed)),
        check("weyl-exactness", weyl_route(weyl_n, seed)),
        check("casimir-table", casimir(casimir_n)),
        check(
            "loop-constants",
            loops(if full { 3 } else { 2 }, if full { 2 } else { 1 }, seed),
        ),
        check("ensembles", ensembles(full, seed)),
        check("isotropic", isotropic(seed)),
        check("crossover", crossover()),
        check("geometry", geometry(full, seed)),
    ];
    if full {
        out.push(check("v-average", v_average(seed)));
    }
    out
}
