//! Unitary matrices: construction, sampling, eigenphases, secular
//! coefficients and the adjoint operator.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub type CMatrix = DMatrix<Complex64>;

pub const UNITARY_TOL: f64 = 1e-10;
pub const FILE_UNITARY_TOL: f64 = 1e-8;

#[inline]
pub fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// Largest entry of `|M^dagger M - I|`.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let prod = m.adjoint() * m;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            worst = worst.max((prod[(i, j)] - target).norm());
        }
    }
    worst
}

/// An `N x N` unitary matrix together with its measured unitarity residual.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    entries: CMatrix,
    residual: f64,
}

impl UnitaryMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        Self::with_tolerance(entries, UNITARY_TOL)
    }

    pub fn with_tolerance(entries: CMatrix, tolerance: f64) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        if entries.nrows() == 0 {
            return Err(Error::EmptyDimension);
        }
        let residual = unitarity_residual(&entries);
        if !(residual <= tolerance) {
            return Err(Error::NotUnitary {
                residual,
                tolerance,
            });
        }
        Ok(Self { entries, residual })
    }

    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDimension);
        }
        Self::new(CMatrix::identity(n, n))
    }

    pub fn diagonal(phases: &[f64]) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::EmptyDimension);
        }
        let n = phases.len();
        let mut m = CMatrix::zeros(n, n);
        for (j, &t) in phases.iter().enumerate() {
            m[(j, j)] = cis(t);
        }
        Self::new(m)
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn determinant(&self) -> Complex64 {
        self.entries.clone().determinant()
    }

    pub fn adjoint(&self) -> CMatrix {
        self.entries.adjoint()
    }

    /// `e^{i alpha} U`.
    pub fn rotated(&self, alpha: f64) -> Self {
        Self {
            entries: &self.entries * cis(alpha),
            residual: self.residual,
        }
    }

    /// Complex Schur factorization `U = Q T Q^dagger`; for a unitary matrix
    /// `T` is diagonal up to rounding.
    pub fn schur(&self) -> Result<(Vec<Complex64>, CMatrix)> {
        let n = self.n();
        let schur =
            nalgebra::linalg::Schur::try_new(self.entries.clone(), 1e-15, 10_000 * n.max(1))
                .ok_or(Error::EigenNonConvergence { residual: f64::NAN })?;
        let (q, t) = schur.unpack();
        let eig: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
        let recon =
            &q * CMatrix::from_diagonal(&nalgebra::DVector::from_vec(eig.clone())) * q.adjoint();
        let residual = (&recon - &self.entries).camax();
        if residual > 1e-8 {
            return Err(Error::EigenNonConvergence { residual });
        }
        Ok((eig, q))
    }

    pub fn to_file_format(&self) -> MatrixFile {
        let n = self.n();
        MatrixFile {
            n,
            re: (0..n)
                .map(|i| (0..n).map(|j| self.entries[(i, j)].re).collect())
                .collect(),
            im: (0..n)
                .map(|i| (0..n).map(|j| self.entries[(i, j)].im).collect())
                .collect(),
        }
    }

    pub fn from_file_format(file: &MatrixFile, tolerance: f64) -> Result<Self> {
        let m = file.to_matrix()?;
        Self::with_tolerance(m, tolerance)
    }

    pub fn read_json(path: &Path, tolerance: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: MatrixFile = serde_json::from_str(&text)?;
        Self::from_file_format(&file, tolerance)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_file_format())?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// On-disk matrix: `{"n": int, "re": [[...]], "im": [[...]]}`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixFile {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let (r, c) = m.shape();
        Self {
            n: r,
            re: (0..r)
                .map(|i| (0..c).map(|j| m[(i, j)].re).collect())
                .collect(),
            im: (0..r)
                .map(|i| (0..c).map(|j| m[(i, j)].im).collect())
                .collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.n;
        if n == 0 {
            return Err(Error::EmptyDimension);
        }
        let rows = self.re.len();
        if rows != n || self.im.len() != n {
            return Err(Error::NotSquare { rows, cols: n });
        }
        for (r_re, r_im) in self.re.iter().zip(&self.im) {
            if r_re.len() != n || r_im.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: r_re.len().max(r_im.len()),
                });
            }
        }
        Ok(CMatrix::from_fn(n, n, |i, j| {
            Complex64::new(self.re[i][j], self.im[i][j])
        }))
    }
}

/// Reads a JSON list of matrices in [`MatrixFile`] layout (used for
/// semiclassical generator sets).
pub fn read_matrix_list(path: &Path) -> Result<Vec<CMatrix>> {
    let text = std::fs::read_to_string(path)?;
    let files: Vec<MatrixFile> = serde_json::from_str(&text)?;
    files.iter().map(MatrixFile::to_matrix).collect()
}

fn complex_gaussian<R: rand::Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// iid standard complex Gaussian matrix.
pub fn ginibre<R: rand::Rng>(n: usize, rows: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(n, rows, |_, _| complex_gaussian(rng))
}

/// Haar-distributed unitary via QR of a Ginibre matrix, with the phases of
/// the triangular diagonal moved into `Q` so that the law is exactly Haar.
pub fn haar_sample(n: usize, stream: RngStream) -> Result<UnitaryMatrix> {
    if n == 0 {
        return Err(Error::EmptyDimension);
    }
    let mut rng = stream.rng();
    Ok(haar_from_rng(n, &mut rng))
}

pub(crate) fn haar_from_rng<R: rand::Rng>(n: usize, rng: &mut R) -> UnitaryMatrix {
    let g = ginibre(n, n, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    let residual = unitarity_residual(&q);
    UnitaryMatrix {
        entries: q,
        residual,
    }
}

/// Diagonal matrix of `n` iid uniform phases.
pub fn poisson_sample(n: usize, stream: RngStream) -> Result<UnitaryMatrix> {
    if n == 0 {
        return Err(Error::EmptyDimension);
    }
    let mut rng = stream.rng();
    let uniform = Uniform::new(0.0, 2.0 * PI).expect("valid range");
    let phases: Vec<f64> = (0..n).map(|_| uniform.sample(&mut rng)).collect();
    UnitaryMatrix::diagonal(&phases)
}

/// Discrete Fourier matrix composed with a diagonal kick
/// `diag(exp(-i n V(2 pi j / n)))`, `V(q) = sum_m k_m cos(m q)`.
pub fn kicked_map(n: usize, kick_strengths: &[f64]) -> Result<UnitaryMatrix> {
    if n == 0 {
        return Err(Error::EmptyDimension);
    }
    let nf = n as f64;
    let norm = 1.0 / nf.sqrt();
    let potential = |q: f64| -> f64 {
        kick_strengths
            .iter()
            .enumerate()
            .map(|(m, k)| k * ((m + 1) as f64 * q).cos())
            .sum()
    };
    let kick: Vec<Complex64> = (0..n)
        .map(|j| cis(-nf * potential(2.0 * PI * j as f64 / nf)))
        .collect();
    let m = CMatrix::from_fn(n, n, |j, k| {
        // reduce jk mod n before scaling to keep the phase exact for large n
        let phase = -2.0 * PI * ((j * k) % n) as f64 / nf;
        cis(phase) * norm * kick[k]
    });
    UnitaryMatrix::new(m)
}

/// Eigenphases sorted ascending in `[0, 2 pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenphaseSpectrum {
    pub thetas: Vec<f64>,
}

impl EigenphaseSpectrum {
    pub fn from_phases(mut thetas: Vec<f64>) -> Self {
        for t in thetas.iter_mut() {
            *t = t.rem_euclid(2.0 * PI);
            if *t >= 2.0 * PI {
                *t = 0.0;
            }
        }
        thetas.sort_by(|a, b| a.partial_cmp(b).expect("finite phases"));
        Self { thetas }
    }

    pub fn n(&self) -> usize {
        self.thetas.len()
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.thetas.iter().map(|&t| cis(t)).collect()
    }
}

pub fn eigenphases(u: &UnitaryMatrix) -> Result<EigenphaseSpectrum> {
    let (eig, _) = u.schur()?;
    let spectrum = EigenphaseSpectrum::from_phases(eig.iter().map(|z| z.arg()).collect());
    // characteristic-polynomial residual at points off the unit circle
    let lambdas = spectrum.eigenvalues();
    let n = u.n();
    let mut worst = 0.0f64;
    for k in 0..3 {
        let s = Complex64::from_polar(1.5, 0.7 + 2.1 * k as f64);
        let direct = (CMatrix::identity(n, n) * s - u.matrix()).determinant();
        let product: Complex64 = lambdas.iter().map(|l| s - l).product();
        let rel = (direct - product).norm() / direct.norm().max(product.norm());
        worst = worst.max(rel);
    }
    if worst > 1e-9 {
        return Err(Error::EigenNonConvergence { residual: worst });
    }
    Ok(spectrum)
}

/// Coefficients `a_k` of `Det(1 - sU) = sum_k s^k a_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecularCoefficients {
    pub a: Vec<Complex64>,
    pub det_u: Complex64,
}

impl SecularCoefficients {
    pub fn n(&self) -> usize {
        self.a.len() - 1
    }

    /// `sum_k s^k a_k` by Horner.
    pub fn evaluate(&self, s: Complex64) -> Complex64 {
        self.a
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &ak| acc * s + ak)
    }

    /// Largest `|a_{N-k} - Det(-U) conj(a_k)|`.
    pub fn self_inversive_residual(&self) -> f64 {
        let n = self.n();
        let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        let det_minus = self.det_u * sign;
        (0..=n)
            .map(|k| (self.a[n - k] - det_minus * self.a[k].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn squared_moduli(&self) -> Vec<f64> {
        self.a.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Power traces `t_l = Tr U^l` for `l = 1..=k`.
pub fn power_traces(u: &UnitaryMatrix, k: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(k);
    let mut power = u.matrix().clone();
    for l in 1..=k {
        out.push(power.trace());
        if l < k {
            power = &power * u.matrix();
        }
    }
    out
}

/// Newton recursion `a_k = -(t_k + sum_{l<k} a_l t_{k-l}) / k`.
pub fn secular_from_traces(traces: &[Complex64]) -> Vec<Complex64> {
    let n = traces.len();
    let mut a = Vec::with_capacity(n + 1);
    a.push(Complex64::new(1.0, 0.0));
    for k in 1..=n {
        let mut acc = traces[k - 1];
        for l in 1..k {
            acc += a[l] * traces[k - l - 1];
        }
        a.push(-acc / k as f64);
    }
    a
}

pub fn secular_coefficients(u: &UnitaryMatrix) -> SecularCoefficients {
    let traces = power_traces(u, u.n());
    SecularCoefficients {
        a: secular_from_traces(&traces),
        det_u: u.determinant(),
    }
}

/// Matrix of `Z -> U Z U^{-1}` on row-major vectorized `Z`: entry
/// `[(i,j),(k,l)] = U_ik conj(U_jl)`.
pub fn adjoint_operator(u: &UnitaryMatrix) -> CMatrix {
    adjoint_of(u.matrix())
}

pub(crate) fn adjoint_of(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let nn = n * n;
    CMatrix::from_fn(nn, nn, |row, col| {
        let (i, j) = (row / n, row % n);
        let (k, l) = (col / n, col % n);
        m[(i, k)] * m[(j, l)].conj()
    })
}

/// Row-major vectorization.
pub fn vectorize(z: &CMatrix) -> nalgebra::DVector<Complex64> {
    let (r, c) = z.shape();
    nalgebra::DVector::from_fn(r * c, |idx, _| z[(idx / c, idx % c)])
}

pub fn unvectorize(v: &nalgebra::DVector<Complex64>, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| v[i * n + j])
}

/// Row-major vectorization of the identity (the uniform mode).
pub fn uniform_mode(n: usize) -> nalgebra::DVector<Complex64> {
    vectorize(&CMatrix::identity(n, n))
}
