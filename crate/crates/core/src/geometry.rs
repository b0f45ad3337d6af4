//! Geometry of `M_N = U(2N)/U(N)xU(N)`: normalization constants, Hua
//! integrals, critical-submanifold volumes and counts, invariant sampling and
//! the Monte Carlo coherent-state integral.

use num_complex::Complex64;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use statrs::function::gamma::ln_gamma;

use crate::numerics::special::{binomial_u128, ln_gamma_range, ln_gamma_string};
use crate::numerics::sum::{ComplexStats, RunningStats};
use crate::rng::RngStream;
use crate::unitary::{haar_from_rng, CMatrix, UnitaryMatrix};

/// `ln C_N = ln[Gamma(N+2)...Gamma(2N+1)] - ln[Gamma(2)...Gamma(N+1)]`.
pub fn ln_normalization_constant(n: usize) -> f64 {
    ln_gamma_range(n + 2, 2 * n + 1) - ln_gamma_range(2, n + 1)
}

pub fn normalization_constant(n: usize) -> f64 {
    ln_normalization_constant(n).exp()
}

/// `ln I(m,n)`, `I(m,n) = Gamma(1)..Gamma(n) Gamma(1)..Gamma(m) / Gamma(1)..Gamma(n+m)`.
pub fn ln_hua_integral(m: usize, n: usize) -> f64 {
    ln_gamma_string(n) + ln_gamma_string(m) - ln_gamma_string(n + m)
}

pub fn hua_integral(m: usize, n: usize) -> f64 {
    ln_hua_integral(m, n).exp()
}

/// `C_N I(N,N)`, equal to `C(2N,N)`.
pub fn total_mass(n: usize) -> f64 {
    (ln_normalization_constant(n) + ln_hua_integral(n, n)).exp()
}

/// `Vol M_(p,r) = I(p, N-p) I(r, p-r) I(r, N-p-r)`; isolated points give 1.
pub fn vol_submanifold(n: usize, p: usize, r: usize) -> Result<f64> {
    if p > n || r > p.min(n - p) {
        return Err(Error::Index(format!(
            "(p, r) = ({p}, {r}) invalid for N = {n}"
        )));
    }
    Ok(
        (ln_hua_integral(p, n - p) + ln_hua_integral(r, p - r) + ln_hua_integral(r, n - p - r))
            .exp(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifoldClass {
    pub p: usize,
    pub r: usize,
    pub volume: f64,
    pub points: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Census {
    pub n: usize,
    pub manifolds: Vec<ManifoldClass>,
}

impl Census {
    pub fn count(&self) -> usize {
        self.manifolds.len()
    }

    pub fn total_points(&self) -> u128 {
        self.manifolds.iter().map(|m| m.points).sum()
    }
}

/// `(N/2+1)^2` for even `N`, `(N+1)(N+3)/4` for odd `N`.
pub fn expected_manifold_count(n: usize) -> usize {
    if n.is_multiple_of(2) {
        (n / 2 + 1).pow(2)
    } else {
        (n + 1) * (n + 3) / 4
    }
}

/// All classes `(p, r)` with their volume and number of saddle points
/// `C(N,p) C(p,r) C(N-p,r)`.
pub fn manifold_census(n: usize) -> Result<Census> {
    if n == 0 {
        return Err(Error::EmptyDimension);
    }
    let b = |a: usize, k: usize| binomial_u128(a as u64, k as u64).expect("binomial overflow");
    let mut manifolds = Vec::new();
    for p in 0..=n {
        for r in 0..=p.min(n - p) {
            let points = b(n, p) * b(p, r) * b(n - p, r);
            manifolds.push(ManifoldClass {
                p,
                r,
                volume: vol_submanifold(n, p, r)?,
                points,
            });
        }
    }
    Ok(Census { n, manifolds })
}

/// A point of `M_N` in stereographic coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannPoint {
    pub z: CMatrix,
}

fn reciprocal_condition(m: &CMatrix) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

pub(crate) fn sample_invariant_with<R: rand::Rng>(n: usize, rng: &mut R) -> Result<GrassmannPoint> {
    for _ in 0..=10 {
        let g = haar_from_rng(2 * n, rng);
        let m = g.matrix();
        let g12 = m.view((0, n), (n, n)).into_owned();
        let g22 = m.view((n, n), (n, n)).into_owned();
        if reciprocal_condition(&g22) < 1e-10 {
            continue;
        }
        let inv = g22
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("singular g22".into()))?;
        return Ok(GrassmannPoint { z: g12 * inv });
    }
    Err(Error::Degenerate(
        "lower-right block of the U(2N) sample singular in 11 draws".into(),
    ))
}

/// `Z = g12 g22^{-1}` for Haar `g` in `U(2N)`.
pub fn sample_invariant(n: usize, stream: RngStream) -> Result<GrassmannPoint> {
    if n == 0 {
        return Err(Error::EmptyDimension);
    }
    sample_invariant_with(n, &mut stream.rng())
}

/// `gamma^{-N/2} Det(1 + gamma Z^dag U Z U^{-1}) / Det(1 + Z^dag Z)`.
pub fn coherent_integrand(u: &CMatrix, gamma: Complex64, z: &CMatrix) -> Complex64 {
    let n = u.nrows();
    let id = CMatrix::identity(n, n);
    let zd = z.adjoint();
    let num = (&id + &zd * u * z * u.adjoint() * gamma).determinant();
    let den = (&id + &zd * z).determinant();
    (gamma.ln() * (-(n as f64) / 2.0)).exp() * num / den
}

/// `S = -[log Det(1 + gamma Z^dag U Z U^{-1}) - log Det(1 + Z Z^dag)] + (N/2) log gamma`.
pub fn effective_action(u: &UnitaryMatrix, gamma: Complex64, z: &CMatrix) -> Result<Complex64> {
    let n = u.n();
    if z.nrows() != n || z.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: z.nrows(),
        });
    }
    let id = CMatrix::identity(n, n);
    let a = (&id + z.adjoint() * u.matrix() * z * u.adjoint() * gamma).determinant();
    let b = (&id + z * z.adjoint()).determinant();
    if a.norm() < 1e-300 || b.norm() < 1e-300 {
        return Err(Error::LogBranch);
    }
    Ok(-(a.ln() - b.ln()) + gamma.ln() * (n as f64 / 2.0))
}

pub const MAX_MC_N: usize = 3;
const BLOCK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: Complex64,
    pub stderr: f64,
    pub samples: u64,
}

/// Splits `samples` into fixed blocks, each with its own substream, and merges
/// block statistics in index order.
fn blocked_stats<F>(samples: u64, stream: RngStream, f: F) -> Result<ComplexStats>
where
    F: Fn(&mut rand_chacha::ChaCha20Rng) -> Result<Complex64> + Sync,
{
    let blocks = samples.div_ceil(BLOCK);
    let partials: Vec<Result<ComplexStats>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream.substream(b).rng();
            let mut stats = ComplexStats::default();
            let count = BLOCK.min(samples - b * BLOCK);
            for _ in 0..count {
                stats.push(f(&mut rng)?);
            }
            Ok(stats)
        })
        .collect();
    let mut total = ComplexStats::default();
    for p in partials {
        total.merge(&p?);
    }
    Ok(total)
}

/// Monte Carlo coherent-state integral: `C(2N,N)` times the invariant-measure
/// mean of [`coherent_integrand`].
pub fn mc_omega(
    u: &UnitaryMatrix,
    gamma: Complex64,
    samples: u64,
    stream: RngStream,
) -> Result<McEstimate> {
    let n = u.n();
    if n > MAX_MC_N {
        return Err(Error::OracleScale { n, max: MAX_MC_N });
    }
    if samples == 0 {
        return Err(Error::Config("samples must be at least 1".into()));
    }
    let stats = blocked_stats(samples, stream, |rng| {
        let p = sample_invariant_with(n, rng)?;
        Ok(coherent_integrand(u.matrix(), gamma, &p.z))
    })?;
    let mass = total_mass(n).round();
    Ok(McEstimate {
        estimate: stats.mean() * mass,
        stderr: stats.stderr() * mass,
        samples,
    })
}

/// Importance-sampled `I(m,n)` in flat coordinates. The proposal is the
/// radial density `(1+|Z|^2)^{-kappa}` on `C^{mn}` with `kappa = mn + 1/2`,
/// heavy enough to keep the weights square-integrable near rank-deficient
/// directions.
pub fn mc_hua_integral(m: usize, n: usize, samples: u64, stream: RngStream) -> Result<(f64, f64)> {
    if m == 0 || n == 0 {
        return Ok((1.0, 0.0));
    }
    if samples == 0 {
        return Err(Error::Config("samples must be at least 1".into()));
    }
    let dim = (m * n) as f64;
    let kappa = dim + 0.5;
    let radial = Beta::new(dim, kappa - dim).map_err(|e| Error::Config(e.to_string()))?;
    // proposal normalization Gamma(kappa - mn) / Gamma(kappa) in the measure d^2z / pi
    let ln_norm = ln_gamma(kappa - dim) - ln_gamma(kappa);
    let blocks = samples.div_ceil(BLOCK);
    let partials: Vec<RunningStats> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream.substream(b).rng();
            let mut stats = RunningStats::new();
            for _ in 0..BLOCK.min(samples - b * BLOCK) {
                let u: f64 = radial.sample(&mut rng);
                let r2 = u / (1.0 - u);
                let dir = CMatrix::from_fn(m, n, |_, _| {
                    Complex64::new(
                        StandardNormal.sample(&mut rng),
                        StandardNormal.sample(&mut rng),
                    )
                });
                let z = &dir * Complex64::new((r2 / dir.norm_squared()).sqrt(), 0.0);
                let det = (CMatrix::identity(n, n) + z.adjoint() * &z)
                    .determinant()
                    .re;
                let ln_w = -((m + n) as f64) * det.ln() + kappa * r2.ln_1p() + ln_norm;
                stats.push(ln_w.exp());
            }
            stats
        })
        .collect();
    let mut total = RunningStats::new();
    for p in &partials {
        total.merge(p);
    }
    Ok((total.mean(), total.stderr()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_small_n() {
        assert!((normalization_constant(1) - 2.0).abs() < 1e-12);
        assert!((normalization_constant(2) - 72.0).abs() < 1e-10);
        assert!((hua_integral(1, 1) - 1.0).abs() < 1e-14);
        assert!((hua_integral(2, 2) - 1.0 / 12.0).abs() < 1e-14);
        assert!((total_mass(5) - 252.0).abs() < 1e-9);
    }

    #[test]
    fn volumes() {
        assert_eq!(vol_submanifold(4, 0, 0).unwrap(), 1.0);
        assert!((vol_submanifold(2, 1, 0).unwrap() - 1.0).abs() < 1e-14);
        assert!(vol_submanifold(3, 2, 2).is_err());
    }

    #[test]
    fn census_small() {
        let c = manifold_census(2).unwrap();
        let labels: Vec<(usize, usize)> = c.manifolds.iter().map(|m| (m.p, m.r)).collect();
        assert_eq!(labels, vec![(0, 0), (1, 0), (1, 1), (2, 0)]);
        assert_eq!(c.total_points(), 6);
    }

    #[test]
    fn action_at_zero() {
        let u = UnitaryMatrix::identity(2).unwrap();
        let g = Complex64::new(0.7, 0.1);
        let s = effective_action(&u, g, &CMatrix::zeros(2, 2)).unwrap();
        assert!((s - g.ln()).norm() < 1e-14);
    }
}
