//! Averaging schemes: eigenbasis (V) average, isotropic heat-kernel damping,
//! semiclassical Gaussian smearing, and the Poisson / CUE ensembles.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlator::{
    character_traces, omega_from_characters, omega_from_variances, omega_secular_from,
    CorrelatorCurve, GammaGrid,
};
use crate::error::{Error, Result};
use crate::numerics::special::{binomial, sinc};
use crate::numerics::sum::RunningStats;
use crate::rng::RngStream;
use crate::unitary::{
    adjoint_of, adjoint_operator, cis, haar_from_rng, haar_sample, poisson_sample,
    secular_coefficients, uniform_mode, CMatrix, UnitaryMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    Poisson,
    Cue,
}

impl std::str::FromStr for EnsembleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" => Ok(Self::Poisson),
            "cue" => Ok(Self::Cue),
            other => Err(Error::Parse(format!(
                "unknown ensemble {other:?} (poisson|cue)"
            ))),
        }
    }
}

impl std::fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Poisson => "poisson",
            Self::Cue => "cue",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum AveragingScheme {
    None,
    Basis,
    /// Heat-kernel time `epsilon_kernel`; the crossover parameter is `N * epsilon_kernel`.
    Isotropic {
        kernel_time: f64,
    },
    Semiclassical {
        width: f64,
        samples: u64,
        generators: usize,
    },
    Ensemble {
        kind: EnsembleKind,
        samples: u64,
    },
}

impl AveragingScheme {
    pub fn label(&self) -> String {
        match self {
            Self::None => "none".into(),
            Self::Basis => "basis".into(),
            Self::Isotropic { kernel_time } => format!("isotropic(eps={kernel_time})"),
            Self::Semiclassical { width, samples, .. } => {
                format!("semiclassical(width={width};samples={samples})")
            }
            Self::Ensemble { kind, samples } => format!("ensemble({kind};samples={samples})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AveragedAdjoint {
    pub matrix: CMatrix,
    pub scheme: AveragingScheme,
    /// Entrywise standard errors for sampled schemes.
    pub stderr: Option<DMatrix<f64>>,
}

impl AveragedAdjoint {
    pub fn n(&self) -> usize {
        (self.matrix.nrows() as f64).sqrt().round() as usize
    }

    /// `|A u - u|` for the uniform mode `u`.
    pub fn uniform_mode_residual(&self) -> f64 {
        let u = uniform_mode(self.n());
        (&self.matrix * &u - &u)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn max_stderr(&self) -> Option<f64> {
        self.stderr
            .as_ref()
            .map(|s| s.iter().copied().fold(0.0, f64::max))
    }
}

/// Rank-one projector onto `vec(I)/sqrt(N)`.
pub fn uniform_projector(n: usize) -> CMatrix {
    let u = uniform_mode(n) / Complex64::new((n as f64).sqrt(), 0.0);
    &u * u.adjoint()
}

/// `(|Tr U|^2 - 1) / N`.
pub fn alpha(u: &UnitaryMatrix) -> f64 {
    (u.trace().norm_sqr() - 1.0) / u.n() as f64
}

/// Nontrivial eigenvalue `(|Tr U|^2 - 1) / (N^2 - 1)` of the basis average.
pub fn v_average_eigenvalue(u: &UnitaryMatrix) -> Result<f64> {
    let n = u.n();
    if n < 2 {
        return Err(Error::Domain {
            name: "N",
            value: n as f64,
            domain: "basis average needs N >= 2",
        });
    }
    let nn = (n * n) as f64;
    Ok((u.trace().norm_sqr() - 1.0) / (nn - 1.0))
}

/// `<Ad U>_V = P_I + (1 - P_I) (|Tr U|^2 - 1)/(N^2 - 1)`.
pub fn v_average_adjoint(u: &UnitaryMatrix) -> Result<AveragedAdjoint> {
    let lambda = v_average_eigenvalue(u)?;
    let n = u.n();
    let p = uniform_projector(n);
    let id = CMatrix::identity(n * n, n * n);
    Ok(AveragedAdjoint {
        matrix: &p + (id - &p) * Complex64::new(lambda, 0.0),
        scheme: AveragingScheme::Basis,
        stderr: None,
    })
}

/// Entrywise mean of `Ad(V U V^{-1})` over Haar `V`.
pub fn mc_v_average_adjoint(
    u: &UnitaryMatrix,
    samples: u64,
    stream: RngStream,
) -> Result<AveragedAdjoint> {
    let n = u.n();
    mc_adjoint(n, samples, AveragingScheme::Basis, |i| {
        let mut rng = stream.substream(i).rng();
        let v = haar_from_rng(n, &mut rng);
        let w = v.matrix() * u.matrix() * v.adjoint();
        Ok(adjoint_of(&w))
    })
}

fn mc_adjoint<F>(
    n: usize,
    samples: u64,
    scheme: AveragingScheme,
    draw: F,
) -> Result<AveragedAdjoint>
where
    F: Fn(u64) -> Result<CMatrix> + Sync,
{
    if samples == 0 {
        return Err(Error::Config("samples must be at least 1".into()));
    }
    let dim = n * n;
    const BLOCK: u64 = 256;
    let blocks = samples.div_ceil(BLOCK);
    type Acc = (Vec<RunningStats>, Vec<RunningStats>);
    let partials: Vec<Result<Acc>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut re = vec![RunningStats::new(); dim * dim];
            let mut im = vec![RunningStats::new(); dim * dim];
            for i in b * BLOCK..((b + 1) * BLOCK).min(samples) {
                let a = draw(i)?;
                for (k, z) in a.iter().enumerate() {
                    re[k].push(z.re);
                    im[k].push(z.im);
                }
            }
            Ok((re, im))
        })
        .collect();
    let mut re = vec![RunningStats::new(); dim * dim];
    let mut im = vec![RunningStats::new(); dim * dim];
    for part in partials {
        let (pr, pi) = part?;
        for k in 0..dim * dim {
            re[k].merge(&pr[k]);
            im[k].merge(&pi[k]);
        }
    }
    // nalgebra storage is column-major, matching the iteration order above
    let matrix = CMatrix::from_iterator(
        dim,
        dim,
        re.iter()
            .zip(&im)
            .map(|(r, i)| Complex64::new(r.mean(), i.mean())),
    );
    let stderr = DMatrix::from_iterator(
        dim,
        dim,
        re.iter()
            .zip(&im)
            .map(|(r, i)| r.stderr().hypot(i.stderr())),
    );
    Ok(AveragedAdjoint {
        matrix,
        scheme,
        stderr: Some(stderr),
    })
}

/// `2N C_N / (1 - alpha/N)^{N^2} * sin(x(1/2 - alpha))/x`; `C_N` replaced by
/// one unless `include_cn`.
pub fn v_saddle_correlator(u: &UnitaryMatrix, x: f64, include_cn: bool) -> Result<f64> {
    v_saddle_from_alpha(u.n(), alpha(u), x, include_cn)
}

pub fn v_saddle_from_alpha(n: usize, alpha: f64, x: f64, include_cn: bool) -> Result<f64> {
    let nf = n as f64;
    if alpha >= nf {
        return Err(Error::Domain {
            name: "alpha",
            value: alpha,
            domain: "alpha < N",
        });
    }
    let shape = (0.5 - alpha) * sinc(x * (0.5 - alpha));
    let ln_den = (nf * nf) * (1.0 - alpha / nf).ln();
    let cn = if include_cn {
        crate::geometry::normalization_constant(n)
    } else {
        1.0
    };
    Ok(2.0 * nf * cn * shape * (-ln_den).exp())
}

/// Scalar evaluation of the averaged standard saddles for the basis average:
/// `2 Re(e^{-ix/2} / ((1 - gamma)(1 - gamma lambda)^{N^2 - 1}))`.
pub fn v_average_saddles_closed_form(u: &UnitaryMatrix, x: f64) -> Result<f64> {
    let lambda = v_average_eigenvalue(u)?;
    let n = u.n();
    let g = cis(x / n as f64);
    let det = (1.0 - g) * (1.0 - g * lambda).powu((n * n - 1) as u32);
    if det.norm() == 0.0 {
        return Err(Error::AveragedSaddleDegenerate);
    }
    Ok(2.0 * (cis(-x / 2.0) / det).re)
}

/// Tower damping `exp(-2 epsilon_kernel p (N + 1 - p))`.
pub fn casimir_damping(n: usize, kernel_time: f64) -> Vec<f64> {
    (0..=n / 2)
        .map(|p| (-2.0 * kernel_time * (p * (n + 1 - p)) as f64).exp())
        .collect()
}

fn check_kernel_time(kernel_time: f64) -> Result<()> {
    if !(kernel_time >= 0.0) {
        return Err(Error::Domain {
            name: "epsilon",
            value: kernel_time,
            domain: "epsilon >= 0",
        });
    }
    Ok(())
}

/// Heat-kernel averaged correlator at kernel time `epsilon_kernel`.
pub fn isotropic_correlator(
    u: &UnitaryMatrix,
    kernel_time: f64,
    grid: &GammaGrid,
) -> Result<CorrelatorCurve> {
    check_kernel_time(kernel_time)?;
    let traces = character_traces(u);
    let damping = casimir_damping(u.n(), kernel_time);
    let values = grid
        .points
        .par_iter()
        .map(|p| omega_from_characters(&traces, p, Some(&damping)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelatorCurve::new(grid.clone(), values, "character")
        .with_scheme(AveragingScheme::Isotropic { kernel_time }.label()))
}

/// `P_I + e^{-2 N epsilon_kernel} (Ad U - P_I)`.
pub fn isotropic_adjoint(u: &UnitaryMatrix, kernel_time: f64) -> Result<AveragedAdjoint> {
    check_kernel_time(kernel_time)?;
    let n = u.n();
    let p = uniform_projector(n);
    let damp = (-2.0 * n as f64 * kernel_time).exp();
    Ok(AveragedAdjoint {
        matrix: &p + (adjoint_operator(u) - &p) * Complex64::new(damp, 0.0),
        scheme: AveragingScheme::Isotropic { kernel_time },
        stderr: None,
    })
}

fn hermitian_residual(h: &CMatrix) -> f64 {
    (h - h.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// `exp(-i H)` for Hermitian `H`.
pub fn unitary_exp(h: &CMatrix) -> CMatrix {
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let phases = nalgebra::DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| cis(-l)),
    );
    &eig.eigenvectors * CMatrix::from_diagonal(&phases) * eig.eigenvectors.adjoint()
}

/// Monte Carlo mean of `Ad(exp(-i sum_j t_j H_j) U)` with `t_j` iid
/// centered Gaussian of standard deviation `width / sqrt(2)`.
pub fn semiclassical_adjoint(
    u: &UnitaryMatrix,
    generators: &[CMatrix],
    width: f64,
    samples: u64,
    stream: RngStream,
) -> Result<AveragedAdjoint> {
    let n = u.n();
    if !(width > 0.0) {
        return Err(Error::Domain {
            name: "width",
            value: width,
            domain: "width > 0",
        });
    }
    for h in generators {
        if h.nrows() != n || h.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: h.nrows(),
            });
        }
        let residual = hermitian_residual(h);
        if residual > 1e-10 {
            return Err(Error::NotHermitian { residual });
        }
    }
    let normal = Normal::new(0.0, width / std::f64::consts::SQRT_2)
        .map_err(|e| Error::Config(e.to_string()))?;
    let scheme = AveragingScheme::Semiclassical {
        width,
        samples,
        generators: generators.len(),
    };
    mc_adjoint(n, samples, scheme, |i| {
        let mut rng = stream.substream(i).rng();
        let mut h = CMatrix::zeros(n, n);
        for g in generators {
            let t: f64 = normal.sample(&mut rng);
            h += g * Complex64::new(t, 0.0);
        }
        let w = unitary_exp(&h) * u.matrix();
        Ok(adjoint_of(&w))
    })
}

/// Position- and momentum-type generators for the kicked map:
/// `cos(2 pi j / N)` on the diagonal and its discrete-Fourier conjugate.
pub fn torus_generators(n: usize) -> Vec<CMatrix> {
    let nf = n as f64;
    let q = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        (0..n).map(|j| Complex64::new((std::f64::consts::TAU * j as f64 / nf).cos(), 0.0)),
    ));
    let f = CMatrix::from_fn(n, n, |j, k| {
        cis(-std::f64::consts::TAU * ((j * k) % n) as f64 / nf) / nf.sqrt()
    });
    let p = f.adjoint() * &q * &f;
    let p = (&p + p.adjoint()) * Complex64::new(0.5, 0.0);
    vec![q, p]
}

/// Ensemble variances `<|a_k|^2>`: `C(N,k)` for Poisson, one for CUE.
pub fn ensemble_variances(kind: EnsembleKind, n: usize) -> Vec<f64> {
    match kind {
        EnsembleKind::Poisson => (0..=n).map(|k| binomial(n, k as isize)).collect(),
        EnsembleKind::Cue => vec![1.0; n + 1],
    }
}

pub fn ensemble_correlator_analytic(
    kind: EnsembleKind,
    n: usize,
    grid: &GammaGrid,
) -> CorrelatorCurve {
    let variances = ensemble_variances(kind, n);
    let values = grid
        .points
        .iter()
        .map(|p| omega_from_variances(&variances, p))
        .collect();
    CorrelatorCurve::new(grid.clone(), values, "secular")
        .with_scheme(format!("ensemble({kind};analytic)"))
}

/// Sampled ensemble average with pointwise standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    pub curve: CorrelatorCurve,
    pub stderr: Vec<f64>,
}

pub fn ensemble_sample(kind: EnsembleKind, n: usize, stream: RngStream) -> Result<UnitaryMatrix> {
    match kind {
        EnsembleKind::Poisson => poisson_sample(n, stream),
        EnsembleKind::Cue => haar_sample(n, stream),
    }
}

pub fn ensemble_correlator_mc(
    kind: EnsembleKind,
    n: usize,
    grid: &GammaGrid,
    samples: u64,
    stream: RngStream,
) -> Result<SampledCurve> {
    if samples == 0 {
        return Err(Error::Config("samples must be at least 1".into()));
    }
    let per_sample: Vec<Result<Vec<Complex64>>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let u = ensemble_sample(kind, n, stream.substream(i))?;
            Ok(omega_secular_from(&secular_coefficients(&u), grid))
        })
        .collect();
    let mut re = vec![RunningStats::new(); grid.len()];
    let mut im = vec![RunningStats::new(); grid.len()];
    for sample in per_sample {
        for (k, z) in sample?.iter().enumerate() {
            re[k].push(z.re);
            im[k].push(z.im);
        }
    }
    let values = re
        .iter()
        .zip(&im)
        .map(|(r, i)| Complex64::new(r.mean(), i.mean()))
        .collect();
    let stderr = re
        .iter()
        .zip(&im)
        .map(|(r, i)| r.stderr().hypot(i.stderr()))
        .collect();
    let curve = CorrelatorCurve::new(grid.clone(), values, "mc")
        .with_scheme(AveragingScheme::Ensemble { kind, samples }.label());
    Ok(SampledCurve { curve, stderr })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_values() {
        let u = UnitaryMatrix::identity(3).unwrap();
        assert!((alpha(&u) - 8.0 / 3.0).abs() < 1e-14);
        let u = UnitaryMatrix::diagonal(&[0.0, std::f64::consts::PI]).unwrap();
        assert!((alpha(&u) + 0.5).abs() < 1e-14);
    }

    #[test]
    fn v_average_spectrum() {
        let u = UnitaryMatrix::diagonal(&[0.0, std::f64::consts::PI]).unwrap();
        let a = v_average_adjoint(&u).unwrap();
        assert!(a.uniform_mode_residual() < 1e-14);
        assert!((v_average_eigenvalue(&u).unwrap() + 1.0 / 3.0).abs() < 1e-15);
        assert!(v_average_adjoint(&UnitaryMatrix::identity(1).unwrap()).is_err());
        let id = v_average_adjoint(&UnitaryMatrix::identity(3).unwrap()).unwrap();
        assert!((id.matrix - CMatrix::identity(9, 9)).camax() < 1e-14);
    }

    #[test]
    fn v_saddle_limits() {
        let v = v_saddle_from_alpha(5, 0.0, 2.0, false).unwrap();
        assert!((v - 10.0 * 1f64.sin() / 2.0).abs() < 1e-13);
        let v0 = v_saddle_from_alpha(5, 0.3, 0.0, false).unwrap();
        assert!((v0 - 10.0 * 0.2 / (1.0 - 0.06f64).powi(25)).abs() < 1e-10);
        assert!(v_saddle_from_alpha(5, 5.0, 0.0, false).is_err());
    }

    #[test]
    fn damping_weights() {
        let d = casimir_damping(4, 0.25);
        assert_eq!(d[0], 1.0);
        assert!((d[1] - (-2.0f64).exp()).abs() < 1e-15);
        assert!((d[2] - (-3.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn isotropic_adjoint_limits() {
        let u = haar_sample(3, RngStream::new(1, 1)).unwrap();
        let a0 = isotropic_adjoint(&u, 0.0).unwrap();
        assert!((a0.matrix - adjoint_operator(&u)).camax() < 1e-14);
        let inf = isotropic_adjoint(&u, 1e3).unwrap();
        assert!((inf.matrix - uniform_projector(3)).camax() < 1e-14);
    }

    #[test]
    fn zero_generator_is_exact() {
        let u = haar_sample(3, RngStream::new(2, 2)).unwrap();
        let a = semiclassical_adjoint(&u, &[CMatrix::zeros(3, 3)], 0.5, 10, RngStream::new(3, 0))
            .unwrap();
        assert!((a.matrix - adjoint_operator(&u)).camax() < 1e-14);
        let bad = CMatrix::from_fn(3, 3, |i, j| Complex64::new((i + 2 * j) as f64, 0.0));
        assert!(matches!(
            semiclassical_adjoint(&u, &[bad], 0.5, 10, RngStream::new(3, 0)),
            Err(Error::NotHermitian { .. })
        ));
    }
}
