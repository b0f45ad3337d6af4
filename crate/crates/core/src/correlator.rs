//! The autocorrelation `Omega_U(gamma)` via secular coefficients and via
//! the character decomposition into `rho_p` towers.

use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::special::binomial;
use crate::unitary::{secular_coefficients, SecularCoefficients, UnitaryMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridMode {
    GammaValues,
    XValues,
}

/// One grid point. In x-mode `log_gamma = i x / N` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub gamma: Complex64,
    pub log_gamma: Complex64,
    pub x: Option<f64>,
}

impl GridPoint {
    pub fn from_x(n: usize, x: f64) -> Self {
        let log_gamma = Complex64::new(0.0, x / n as f64);
        Self {
            gamma: log_gamma.exp(),
            log_gamma,
            x: Some(x),
        }
    }

    pub fn from_gamma(gamma: Complex64) -> Self {
        Self {
            gamma,
            log_gamma: gamma.ln(),
            x: None,
        }
    }

    /// `gamma^e` on the principal branch.
    #[inline]
    pub fn power(&self, e: f64) -> Complex64 {
        (self.log_gamma * e).exp()
    }

    pub fn is_unit(&self) -> bool {
        self.log_gamma.norm() == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaGrid {
    pub mode: GridMode,
    pub n: usize,
    pub points: Vec<GridPoint>,
}

impl GammaGrid {
    pub fn from_x(n: usize, xs: &[f64]) -> Self {
        Self {
            mode: GridMode::XValues,
            n,
            points: xs.iter().map(|&x| GridPoint::from_x(n, x)).collect(),
        }
    }

    pub fn from_gamma(n: usize, gammas: &[Complex64]) -> Self {
        Self {
            mode: GridMode::GammaValues,
            n,
            points: gammas.iter().map(|&g| GridPoint::from_gamma(g)).collect(),
        }
    }

    pub fn single_x(n: usize, x: f64) -> Self {
        Self::from_x(n, &[x])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| p.x.unwrap_or(f64::NAN))
            .collect()
    }

    pub fn check_dimension(&self, n: usize) -> Result<()> {
        if self.mode == GridMode::XValues && self.n != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.n,
            });
        }
        Ok(())
    }
}

/// `steps` equally spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..steps)
            .map(|i| a + (b - a) * i as f64 / (steps - 1) as f64)
            .collect(),
    }
}

/// Parses `a:b:steps`.
pub fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Parse(format!("expected a:b:steps, got {spec:?}"));
    match parts.as_slice() {
        [single] => Ok(vec![single.trim().parse().map_err(|_| bad())?]),
        [a, b, steps] => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            let steps: usize = steps.trim().parse().map_err(|_| bad())?;
            if steps == 0 {
                return Err(bad());
            }
            Ok(linspace(a, b, steps))
        }
        _ => Err(bad()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorCurve {
    pub grid: GammaGrid,
    pub values: Vec<Complex64>,
    pub route: String,
    pub scheme: Option<String>,
}

pub const CSV_HEADER: &str = "x_or_gamma_re,gamma_im,omega_re,omega_im,route,scheme";

impl CorrelatorCurve {
    pub fn new(grid: GammaGrid, values: Vec<Complex64>, route: impl Into<String>) -> Self {
        Self {
            grid,
            values,
            route: route.into(),
            scheme: None,
        }
    }

    pub fn with_scheme(mut self, scheme: impl Into<String>) -> Self {
        self.scheme = Some(scheme.into());
        self
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    /// Largest `|Im| / max(|Omega|, 1)` over the grid.
    pub fn max_imaginary_ratio(&self) -> f64 {
        self.values
            .iter()
            .map(|z| z.im.abs() / z.norm().max(1.0))
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        let scheme = self.scheme.as_deref().unwrap_or("none");
        for (p, v) in self.grid.points.iter().zip(&self.values) {
            let first = p.x.unwrap_or(p.gamma.re);
            writeln!(
                out,
                "{},{},{},{},{},{}",
                first, p.gamma.im, v.re, v.im, self.route, scheme
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for CorrelatorCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|_| fmt::Error)?;
        f.write_str(&String::from_utf8_lossy(&buf))
    }
}

/// Largest relative deviation `|a - b| / max(|b|, floor)`.
pub fn max_relative_deviation(a: &[Complex64], b: &[Complex64], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm() / y.norm().max(floor))
        .fold(0.0, f64::max)
}

/// `sum_k gamma^{k - N/2} v_k` for a sequence of variances `v_0..v_N`.
pub fn omega_from_variances(variances: &[f64], point: &GridPoint) -> Complex64 {
    let n = variances.len() - 1;
    let half = n as f64 / 2.0;
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, v) in variances.iter().enumerate() {
        acc += point.power(k as f64 - half) * v;
    }
    acc
}

pub fn omega_secular_from(coeffs: &SecularCoefficients, grid: &GammaGrid) -> Vec<Complex64> {
    let variances = coeffs.squared_moduli();
    grid.points
        .par_iter()
        .map(|p| omega_from_variances(&variances, p))
        .collect()
}

pub fn omega_secular(u: &UnitaryMatrix, grid: &GammaGrid) -> Result<CorrelatorCurve> {
    grid.check_dimension(u.n())?;
    let coeffs = secular_coefficients(u);
    Ok(CorrelatorCurve::new(
        grid.clone(),
        omega_secular_from(&coeffs, grid),
        "secular",
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterTraces {
    pub n: usize,
    pub traces: Vec<Complex64>,
}

impl CharacterTraces {
    pub fn from_secular(coeffs: &SecularCoefficients) -> Self {
        let n = coeffs.n();
        let m = coeffs.squared_moduli();
        let traces = (0..=n / 2)
            .map(|p| {
                let prev = if p == 0 { 0.0 } else { m[p - 1] };
                Complex64::new(m[p] - prev, 0.0)
            })
            .collect();
        Self { n, traces }
    }

    pub fn from_real(n: usize, traces: &[f64]) -> Self {
        Self {
            n,
            traces: traces.iter().map(|&t| Complex64::new(t, 0.0)).collect(),
        }
    }

    /// Largest `|Tr rho_p| - dim rho_p`, positive when the bound is violated.
    pub fn bound_excess(&self) -> f64 {
        self.traces
            .iter()
            .enumerate()
            .map(|(p, t)| t.norm() - dim_rho(self.n, p))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `dim rho_p = C(N,p)^2 - C(N,p-1)^2`.
pub fn dim_rho(n: usize, p: usize) -> f64 {
    let a = binomial(n, p as isize);
    let b = binomial(n, p as isize - 1);
    a * a - b * b
}

pub fn character_traces(u: &UnitaryMatrix) -> CharacterTraces {
    CharacterTraces::from_secular(&secular_coefficients(u))
}

/// `sin((x/2)(1 - (2p-1)/N)) / sin(x/2N)`, with limit `N - 2p + 1` at `x = 0`.
pub fn multiplet_factor(n: usize, p: usize, x: f64) -> Result<f64> {
    if p > n / 2 {
        return Err(Error::Index(format!(
            "tower index p = {p} exceeds N/2 for N = {n}"
        )));
    }
    let nf = n as f64;
    let den = (x / (2.0 * nf)).sin();
    if x == 0.0 {
        return Ok((n - 2 * p + 1) as f64);
    }
    if den.abs() < 1e-14 * (1.0 + x.abs() / nf) {
        return Err(Error::GridPole { x });
    }
    let num = (0.5 * x * (1.0 - (2.0 * p as f64 - 1.0) / nf)).sin();
    Ok(num / den)
}

/// `(gamma^{p-N/2} - gamma^{N/2+1-p}) / (1 - gamma)` as the geometric sum
/// `sum_{j=0}^{N-2p} gamma^{p-N/2+j}`, which has no removable singularity.
pub fn multiplet_factor_gamma(n: usize, p: usize, point: &GridPoint) -> Complex64 {
    let start = p as f64 - n as f64 / 2.0;
    (0..=(n - 2 * p))
        .map(|j| point.power(start + j as f64))
        .sum()
}

/// Character-route value at one point with optional per-tower damping
/// weights.
pub fn omega_from_characters(
    traces: &CharacterTraces,
    point: &GridPoint,
    damping: Option<&[f64]>,
) -> Result<Complex64> {
    let n = traces.n;
    let mut acc = Complex64::new(0.0, 0.0);
    for (p, t) in traces.traces.iter().enumerate() {
        let w = damping.map_or(1.0, |d| d[p]);
        if w == 0.0 {
            continue;
        }
        let factor = match point.x {
            Some(x) => Complex64::new(multiplet_factor(n, p, x)?, 0.0),
            None => multiplet_factor_gamma(n, p, point),
        };
        acc += t * factor * w;
    }
    Ok(acc)
}

pub fn omega_character(u: &UnitaryMatrix, grid: &GammaGrid) -> Result<CorrelatorCurve> {
    grid.check_dimension(u.n())?;
    let traces = character_traces(u);
    let values = grid
        .points
        .par_iter()
        .map(|p| omega_from_characters(&traces, p, None))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelatorCurve::new(grid.clone(), values, "character"))
}
