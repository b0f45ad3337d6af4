//! Saddle configurations of the coherent-state integral and the exact Weyl
//! sum over them, plus the standard-saddle and averaged-saddle formulas.
//!
//! With `z_i = gamma e^{i theta_i}`, `z_{N+i} = e^{i theta_i}` the term of a
//! configuration `S` is
//! `prod_{v not in S} z_v^{N+1} / prod_{m in S, v not in S} (z_v - z_m)`
//! divided by `Det D`, and `gamma^{-N/2}` times the sum over all `S` is
//! `Omega_U(gamma)`. Individual terms grow like `(1 - gamma)^{-N}` and cancel,
//! so for `N <= 8` they are formed and summed in triple-double arithmetic from
//! exactly computed differences `z_v - z_m`.

use std::cmp::Ordering;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::correlator::{CorrelatorCurve, GammaGrid, GridPoint};
use crate::error::{Error, Result};
use crate::numerics::expansion::ComplexTriple;
use crate::numerics::special::binomial_u128;
use crate::numerics::sum::ComplexSum;
use crate::unitary::{cis, eigenphases, CMatrix, EigenphaseSpectrum, UnitaryMatrix};

pub const MAX_WEYL_N: usize = 14;
/// Largest `N` summed in triple-double; beyond it terms use log-magnitude form.
pub const PRECISE_MAX_N: usize = 8;
pub const POLE_THRESHOLD: f64 = 1e-12;
const CHUNKS: u128 = 64;

/// A saddle label: `N` distinct elements of `{0..2N}` (zero-based), sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SubsetConfig {
    n: usize,
    elements: Vec<usize>,
}

impl SubsetConfig {
    pub fn new(n: usize, mut elements: Vec<usize>) -> Result<Self> {
        elements.sort_unstable();
        elements.dedup();
        if elements.len() != n || elements.iter().any(|&e| e >= 2 * n) {
            return Err(Error::Index(format!(
                "a configuration needs {n} distinct elements below {}",
                2 * n
            )));
        }
        Ok(Self { n, elements })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Zero-based elements of `S`.
    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn mask(&self) -> u64 {
        self.elements.iter().fold(0u64, |m, &e| m | (1 << e))
    }

    pub fn contains(&self, e: usize) -> bool {
        self.elements.binary_search(&e).is_ok()
    }

    /// `S1 = S ∩ {0..N}`.
    pub fn s1(&self) -> Vec<usize> {
        self.elements
            .iter()
            .copied()
            .filter(|&e| e < self.n)
            .collect()
    }

    /// `S2 = {j - N : j in S, j >= N}`.
    pub fn s2(&self) -> Vec<usize> {
        self.elements
            .iter()
            .filter(|&&e| e >= self.n)
            .map(|&e| e - self.n)
            .collect()
    }

    pub fn complement(&self) -> Vec<usize> {
        (0..2 * self.n).filter(|e| !self.contains(*e)).collect()
    }

    pub fn p(&self) -> usize {
        self.elements.iter().filter(|&&e| e >= self.n).count()
    }

    pub fn r(&self) -> usize {
        let s2 = self.s2();
        self.elements
            .iter()
            .filter(|&&e| e < self.n && s2.contains(&e))
            .count()
    }

    /// The complementary configuration; on the unit circle its term (with the
    /// `gamma^{-N/2}` prefactor) is the complex conjugate of this one.
    pub fn partner(&self) -> Self {
        Self {
            n: self.n,
            elements: self.complement(),
        }
    }
}

/// Lexicographic stream of the `C(2N, N)` configurations.
#[derive(Debug, Clone)]
pub struct ConfigIter {
    n: usize,
    current: Option<Vec<usize>>,
    remaining: u128,
}

impl ConfigIter {
    fn starting_at(n: usize, rank: u128, count: u128) -> Self {
        let total = config_count(n);
        let count = count.min(total.saturating_sub(rank));
        let current = if count > 0 {
            Some(unrank(2 * n, n, rank))
        } else {
            None
        };
        Self {
            n,
            current,
            remaining: count,
        }
    }
}

impl Iterator for ConfigIter {
    type Item = SubsetConfig;

    fn next(&mut self) -> Option<SubsetConfig> {
        if self.remaining == 0 {
            return None;
        }
        let cur = self.current.take()?;
        self.remaining -= 1;
        if self.remaining > 0 {
            let mut nxt = cur.clone();
            if next_combination(&mut nxt, 2 * self.n) {
                self.current = Some(nxt);
            } else {
                self.remaining = 0;
            }
        }
        Some(SubsetConfig {
            n: self.n,
            elements: cur,
        })
    }
}

pub fn config_count(n: usize) -> u128 {
    binomial_u128(2 * n as u64, n as u64).expect("C(2N,N) fits in u128 for N <= 14")
}

fn next_combination(c: &mut [usize], total: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < total - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// The `rank`-th `k`-subset of `{0..total}` in lexicographic order.
fn unrank(total: usize, k: usize, mut rank: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for pos in 0..k {
        let mut c = next;
        loop {
            let below = binomial_u128((total - c - 1) as u64, (k - pos - 1) as u64).unwrap_or(0);
            if rank < below {
                break;
            }
            rank -= below;
            c += 1;
        }
        out.push(c);
        next = c + 1;
    }
    out
}

pub fn enumerate_configs(n: usize) -> Result<ConfigIter> {
    if n == 0 {
        return Err(Error::EmptyDimension);
    }
    if n > MAX_WEYL_N {
        return Err(Error::EnumerationCap { n, max: MAX_WEYL_N });
    }
    Ok(ConfigIter::starting_at(n, 0, config_count(n)))
}

/// Phases of `diag(gamma D, D)`: `phi_v = theta_v + x/N`, `phi_{v+N} = theta_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiSpectrum {
    pub phis: Vec<f64>,
}

impl PhiSpectrum {
    pub fn new(thetas: &[f64], x: f64) -> Self {
        let n = thetas.len() as f64;
        let phis = thetas
            .iter()
            .map(|t| t + x / n)
            .chain(thetas.iter().copied())
            .collect();
        Self { phis }
    }

    pub fn n(&self) -> usize {
        self.phis.len() / 2
    }
}

/// Double-precision nodes `z_v` for one grid point.
#[derive(Debug, Clone)]
pub struct WeylNodes {
    n: usize,
    z: Vec<Complex64>,
    det_d: Complex64,
    prefactor: Complex64,
}

impl WeylNodes {
    pub fn new(thetas: &[f64], point: &GridPoint) -> Self {
        let n = thetas.len();
        let lambdas: Vec<Complex64> = thetas.iter().map(|&t| cis(t)).collect();
        let z = match point.x {
            // phases added before exponentiating keep z exactly on the circle
            Some(x) => thetas
                .iter()
                .map(|&t| cis(t + x / n as f64))
                .chain(lambdas.iter().copied())
                .collect(),
            None => lambdas
                .iter()
                .map(|l| point.gamma * l)
                .chain(lambdas.iter().copied())
                .collect(),
        };
        let theta_sum: f64 = thetas.iter().sum();
        Self {
            n,
            z,
            det_d: cis(theta_sum),
            prefactor: point.power(-(n as f64) / 2.0),
        }
    }

    pub fn from_phis(phis: &PhiSpectrum) -> Self {
        let n = phis.n();
        let theta_sum: f64 = phis.phis[n..].iter().sum();
        let x_over_n = phis.phis[0] - phis.phis[n];
        Self {
            n,
            z: phis.phis.iter().map(|&p| cis(p)).collect(),
            det_d: cis(theta_sum),
            prefactor: cis(-(n as f64) * x_over_n / 2.0),
        }
    }

    pub fn z(&self) -> &[Complex64] {
        &self.z
    }

    fn check_poles(&self, cfg: &SubsetConfig) -> Result<()> {
        for &m in cfg.elements() {
            for v in cfg.complement() {
                let gap = (self.z[v] - self.z[m]).norm() / self.z[v].norm().max(self.z[m].norm());
                if gap <= POLE_THRESHOLD {
                    return Err(Error::WeylPole {
                        mu: m + 1,
                        nu: v + 1,
                        gap,
                    });
                }
            }
        }
        Ok(())
    }

    /// Rejects inputs where any two nodes collide (some configuration would
    /// then hit a pole).
    fn check_all_poles(&self) -> Result<()> {
        let total = 2 * self.n;
        for m in 0..total {
            for v in m + 1..total {
                let gap = (self.z[v] - self.z[m]).norm() / self.z[v].norm().max(self.z[m].norm());
                if gap <= POLE_THRESHOLD {
                    return Err(Error::WeylPole {
                        mu: m + 1,
                        nu: v + 1,
                        gap,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Exact differences `z_v - z_m` and powers `z_v^{N+1}` in triple-double.
struct PreciseTables {
    n: usize,
    diff: Vec<ComplexTriple>,
    pow: Vec<ComplexTriple>,
}

impl PreciseTables {
    fn new(nodes: &WeylNodes) -> Self {
        let total = 2 * nodes.n;
        let mut diff = Vec::with_capacity(total * total);
        for v in 0..total {
            for m in 0..total {
                diff.push(ComplexTriple::diff(nodes.z[v], nodes.z[m]));
            }
        }
        let pow = nodes
            .z
            .iter()
            .map(|&z| ComplexTriple::from_c64(z).powu(nodes.n as u32 + 1))
            .collect();
        Self {
            n: nodes.n,
            diff,
            pow,
        }
    }

    /// Term without the `1 / Det D` factor.
    fn raw_term(&self, cfg: &SubsetConfig) -> ComplexTriple {
        let total = 2 * self.n;
        let comp = cfg.complement();
        let mut num = ComplexTriple::one();
        for &v in &comp {
            num = num * self.pow[v];
        }
        let mut den = ComplexTriple::one();
        for &m in cfg.elements() {
            for &v in &comp {
                den = den * self.diff[v * total + m];
            }
        }
        num / den
    }
}

/// Log-magnitude and phase of `z_v - z_m` and `z_v^{N+1}`.
struct LogTables {
    n: usize,
    diff: Vec<(f64, f64)>,
    pow: Vec<(f64, f64)>,
}

impl LogTables {
    fn new(nodes: &WeylNodes) -> Self {
        let total = 2 * nodes.n;
        let k = nodes.n as f64 + 1.0;
        let mut diff = Vec::with_capacity(total * total);
        for v in 0..total {
            for m in 0..total {
                let d = nodes.z[v] - nodes.z[m];
                diff.push((d.norm().ln(), d.arg()));
            }
        }
        let pow = nodes
            .z
            .iter()
            .map(|z| (k * z.norm().ln(), k * z.arg()))
            .collect();
        Self {
            n: nodes.n,
            diff,
            pow,
        }
    }

    fn raw_term(&self, cfg: &SubsetConfig) -> (f64, f64) {
        let total = 2 * self.n;
        let comp = cfg.complement();
        let (mut lm, mut ph) = (0.0, 0.0);
        for &v in &comp {
            lm += self.pow[v].0;
            ph += self.pow[v].1;
        }
        for &m in cfg.elements() {
            for &v in &comp {
                let (l, a) = self.diff[v * total + m];
                lm -= l;
                ph -= a;
            }
        }
        (lm, ph)
    }
}

/// One Weyl term `prod_{mu in bar S1} e^{i phi_mu} / prod_{nu in S2~} e^{i phi_nu}
/// / prod_{mu in S, nu in bar S} (1 - e^{i(phi_mu - phi_nu)})`.
pub fn weyl_term(cfg: &SubsetConfig, phis: &PhiSpectrum) -> Result<Complex64> {
    if cfg.n() != phis.n() {
        return Err(Error::DimensionMismatch {
            expected: phis.n(),
            got: cfg.n(),
        });
    }
    let nodes = WeylNodes::from_phis(phis);
    nodes.check_poles(cfg)?;
    let tables = PreciseTables::new(&nodes);
    Ok(tables.raw_term(cfg).to_c64() / nodes.det_d)
}

/// Sum of the terms in one `(p, r)` class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassAggregate {
    pub p: usize,
    pub r: usize,
    pub count: u64,
    pub sum: Complex64,
    pub max_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeylPointResult {
    /// `gamma^{-N/2} sum_S term_S`.
    pub omega: Complex64,
    /// `sum_S term_S` without the prefactor.
    pub raw_sum: Complex64,
    pub max_term: f64,
    pub aggregates: Vec<ClassAggregate>,
}

fn class_slot(n: usize, p: usize, r: usize) -> usize {
    p * (n + 1) + r
}

fn collect_aggregates(
    n: usize,
    sums: Vec<ComplexSum>,
    counts: Vec<u64>,
    maxes: Vec<f64>,
) -> Vec<ClassAggregate> {
    let mut out = Vec::new();
    for p in 0..=n {
        for r in 0..=p.min(n - p) {
            let k = class_slot(n, p, r);
            if counts[k] > 0 {
                out.push(ClassAggregate {
                    p,
                    r,
                    count: counts[k],
                    sum: sums[k].value(),
                    max_abs: maxes[k],
                });
            }
        }
    }
    out
}

fn weyl_point_precise(nodes: &WeylNodes, with_aggregates: bool) -> Result<WeylPointResult> {
    let n = nodes.n;
    let tables = PreciseTables::new(nodes);
    let total = config_count(n);
    let chunk = total.div_ceil(CHUNKS);
    let mut terms: Vec<(SubsetConfig, ComplexTriple)> = (0..CHUNKS)
        .into_par_iter()
        .flat_map_iter(|c| {
            ConfigIter::starting_at(n, c * chunk, chunk)
                .map(|cfg| {
                    let t = tables.raw_term(&cfg);
                    (cfg, t)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    // descending magnitude, ties broken by lexicographic position (stable sort)
    terms.sort_by(|a, b| {
        b.1.abs_approx()
            .partial_cmp(&a.1.abs_approx())
            .unwrap_or(Ordering::Equal)
    });
    let mut acc = ComplexTriple::default();
    for (_, t) in &terms {
        acc = acc + *t;
    }
    let raw_sum = acc.to_c64() / nodes.det_d;
    let max_term = terms.first().map_or(0.0, |t| t.1.abs_approx());
    let aggregates = if with_aggregates {
        let slots = (n + 1) * (n + 1);
        let mut sums = vec![ComplexSum::new(); slots];
        let mut counts = vec![0u64; slots];
        let mut maxes = vec![0.0f64; slots];
        for (cfg, t) in &terms {
            let k = class_slot(n, cfg.p(), cfg.r());
            let v = t.to_c64() / nodes.det_d;
            sums[k].add(v);
            counts[k] += 1;
            maxes[k] = maxes[k].max(v.norm());
        }
        collect_aggregates(n, sums, counts, maxes)
    } else {
        Vec::new()
    };
    Ok(WeylPointResult {
        omega: raw_sum * nodes.prefactor,
        raw_sum,
        max_term,
        aggregates,
    })
}

fn weyl_point_log(nodes: &WeylNodes, with_aggregates: bool) -> Result<WeylPointResult> {
    let n = nodes.n;
    let tables = LogTables::new(nodes);
    let total = config_count(n);
    let chunk = total.div_ceil(CHUNKS);
    let slots = (n + 1) * (n + 1);

    struct Partial {
        scale: f64,
        sum: ComplexSum,
        classes: Vec<(f64, ComplexSum, u64, f64)>,
    }

    let partials: Vec<Partial> = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut terms: Vec<(usize, f64, f64)> = ConfigIter::starting_at(n, c * chunk, chunk)
                .map(|cfg| {
                    let (lm, ph) = tables.raw_term(&cfg);
                    (class_slot(n, cfg.p(), cfg.r()), lm, ph)
                })
                .collect();
            terms.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal));
            let scale = terms.first().map_or(f64::NEG_INFINITY, |t| t.1);
            let mut sum = ComplexSum::new();
            let mut classes = vec![
                (f64::NEG_INFINITY, ComplexSum::new(), 0u64, 0.0f64);
                if with_aggregates { slots } else { 0 }
            ];
            for &(k, lm, ph) in &terms {
                let v = Complex64::from_polar((lm - scale).exp(), ph);
                sum.add(v);
                if with_aggregates {
                    let class = &mut classes[k];
                    if class.2 == 0 {
                        class.0 = lm;
                    }
                    class.1.add(Complex64::from_polar((lm - class.0).exp(), ph));
                    class.2 += 1;
                    class.3 = class.3.max(lm);
                }
            }
            Partial {
                scale,
                sum,
                classes,
            }
        })
        .collect();

    let scale = partials
        .iter()
        .map(|p| p.scale)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut sum = ComplexSum::new();
    for part in &partials {
        if part.scale > f64::NEG_INFINITY {
            sum.add(part.sum.value() * (part.scale - scale).exp());
        }
    }
    let raw_sum = sum.value() * scale.exp() / nodes.det_d;

    let aggregates = if with_aggregates {
        let mut sums = vec![ComplexSum::new(); slots];
        let mut counts = vec![0u64; slots];
        let mut maxes = vec![0.0f64; slots];
        for part in &partials {
            for (k, (ref_lm, s, count, max_lm)) in part.classes.iter().enumerate() {
                if *count == 0 {
                    continue;
                }
                sums[k].add(s.value() * ref_lm.exp() / nodes.det_d);
                counts[k] += count;
                maxes[k] = maxes[k].max(max_lm.exp());
            }
        }
        collect_aggregates(n, sums, counts, maxes)
    } else {
        Vec::new()
    };
    Ok(WeylPointResult {
        omega: raw_sum * nodes.prefactor,
        raw_sum,
        max_term: scale.exp(),
        aggregates,
    })
}

/// Weyl sum at one grid point for eigenphases `thetas`.
pub fn weyl_point(
    thetas: &[f64],
    point: &GridPoint,
    with_aggregates: bool,
) -> Result<WeylPointResult> {
    let n = thetas.len();
    if n == 0 {
        return Err(Error::EmptyDimension);
    }
    if n > MAX_WEYL_N {
        return Err(Error::EnumerationCap { n, max: MAX_WEYL_N });
    }
    let nodes = WeylNodes::new(thetas, point);
    nodes.check_all_poles()?;
    if n <= PRECISE_MAX_N {
        weyl_point_precise(&nodes, with_aggregates)
    } else {
        weyl_point_log(&nodes, with_aggregates)
    }
}

pub fn weyl_sum_spectrum(
    spectrum: &EigenphaseSpectrum,
    grid: &GammaGrid,
) -> Result<CorrelatorCurve> {
    let values = grid
        .points
        .iter()
        .map(|p| weyl_point(&spectrum.thetas, p, false).map(|r| r.omega))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelatorCurve::new(grid.clone(), values, "weyl"))
}

pub fn weyl_sum(u: &UnitaryMatrix, grid: &GammaGrid) -> Result<CorrelatorCurve> {
    if grid.mode == crate::correlator::GridMode::XValues && grid.n != u.n() {
        return Err(Error::DimensionMismatch {
            expected: u.n(),
            got: grid.n,
        });
    }
    if u.n() > MAX_WEYL_N {
        return Err(Error::EnumerationCap {
            n: u.n(),
            max: MAX_WEYL_N,
        });
    }
    weyl_sum_spectrum(&eigenphases(u)?, grid)
}

/// The permuted matrix `g_S^{-1} diag(gamma D, D) g_S` with the elements of
/// `S` moved to the leading block.
pub fn permuted_saddle_matrix(cfg: &SubsetConfig, nodes: &[Complex64]) -> CMatrix {
    let order: Vec<usize> = cfg
        .elements()
        .iter()
        .copied()
        .chain(cfg.complement())
        .collect();
    let total = nodes.len();
    let diag = CMatrix::from_diagonal(&DVector::from_vec(nodes.to_vec()));
    let g = CMatrix::from_fn(total, total, |i, j| {
        if order[j] == i {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    g.transpose() * diag * g
}

/// Saddle condition for a subset of size `|S|`: off-diagonal `N x N` blocks
/// of the permuted matrix vanish and its lower-right block is invertible.
/// Subsets of the wrong size fail.
pub fn satisfies_saddle_condition(elements: &[usize], nodes: &[Complex64]) -> bool {
    let total = nodes.len();
    let n = total / 2;
    if elements.len() != n {
        return false;
    }
    let Ok(cfg) = SubsetConfig::new(n, elements.to_vec()) else {
        return false;
    };
    let m = permuted_saddle_matrix(&cfg, nodes);
    let zero = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if m[(i, n + j)] != zero || m[(n + i, j)] != zero {
                return false;
            }
        }
    }
    m.view((n, n), (n, n)).into_owned().determinant().norm() > 0.0
}

/// Contributions of the two standard saddles `Z = 0` and `Z = infinity`
/// (normalization constant set to one).
pub fn standard_saddles(
    spectrum: &EigenphaseSpectrum,
    gamma: Complex64,
) -> Result<(Complex64, Complex64)> {
    let n = spectrum.n();
    let thetas = &spectrum.thetas;
    let one = Complex64::new(1.0, 0.0);
    let log_gamma = gamma.ln();
    let half = n as f64 / 2.0;
    let evaluate = |g: Complex64| -> Result<Complex64> {
        let mut den = one;
        for i in 0..n {
            for j in 0..n {
                let f = one - g * cis(thetas[i] - thetas[j]);
                if f.norm() < POLE_THRESHOLD {
                    return Err(Error::SaddleDegeneracy { i: i + 1, j: j + 1 });
                }
                den *= f;
            }
        }
        Ok(one / den)
    };
    let plus = (-log_gamma * half).exp() * evaluate(gamma)?;
    let minus = (log_gamma * half).exp() * evaluate(one / gamma)?;
    Ok((plus, minus))
}

/// `2 C_N Re(e^{-ix/2} / Det(I - e^{ix/N} A))`; the prefactor is one unless
/// `include_cn`.
pub fn averaged_standard_saddles(adjoint_avg: &CMatrix, x: f64, include_cn: bool) -> Result<f64> {
    let n = dimension_of_adjoint(adjoint_avg)?;
    let gamma = cis(x / n as f64);
    let m = CMatrix::identity(n * n, n * n) - adjoint_avg * gamma;
    let det = m.determinant();
    if det.norm() < 1e-300 || !det.is_finite() {
        return Err(Error::AveragedSaddleDegenerate);
    }
    let value = 2.0 * (cis(-x / 2.0) / det).re;
    Ok(if include_cn {
        value * crate::geometry::normalization_constant(n)
    } else {
        value
    })
}

pub(crate) fn dimension_of_adjoint(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let n = (a.nrows() as f64).sqrt().round() as usize;
    if n * n != a.nrows() || n == 0 {
        return Err(Error::Index(format!(
            "{} is not a perfect square",
            a.nrows()
        )));
    }
    Ok(n)
}

/// Orthonormal basis (columns) of the complement of the uniform mode
/// `vec(I)/sqrt(N)`, from a Householder reflection.
pub fn complement_basis(n: usize) -> CMatrix {
    let dim = n * n;
    let mut u = DVector::<f64>::zeros(dim);
    for i in 0..n {
        u[i * n + i] = 1.0 / (n as f64).sqrt();
    }
    let mut v = u.clone();
    v[0] -= 1.0;
    let vv = v.dot(&v);
    let h = if vv > 0.0 {
        nalgebra::DMatrix::<f64>::identity(dim, dim) - (&v * v.transpose()) * (2.0 / vv)
    } else {
        nalgebra::DMatrix::<f64>::identity(dim, dim)
    };
    CMatrix::from_fn(dim, dim - 1, |i, j| Complex64::new(h[(i, j + 1)], 0.0))
}

/// `Det(I - A)` restricted to the complement of the uniform mode.
pub fn det_perp(adjoint_avg: &CMatrix) -> Result<Complex64> {
    let n = dimension_of_adjoint(adjoint_avg)?;
    if n == 1 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let b = complement_basis(n);
    let restricted = b.adjoint() * adjoint_avg * &b;
    let k = restricted.nrows();
    Ok((CMatrix::identity(k, k) - restricted).determinant())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapReport {
    pub gap: f64,
    pub relevance_sum: f64,
}

/// `gap = 1 - max_{j>=2} |lambda_j|`, `relevance = |sum_{j>=2} lambda_j/(1-lambda_j)|`,
/// where `lambda_1` is the eigenvalue closest to one.
pub fn gap_diagnostic(adjoint_avg: &CMatrix) -> Result<GapReport> {
    dimension_of_adjoint(adjoint_avg)?;
    let dim = adjoint_avg.nrows();
    let eig: Vec<Complex64> = if dim == 1 {
        vec![adjoint_avg[(0, 0)]]
    } else {
        let schur = nalgebra::linalg::Schur::try_new(adjoint_avg.clone(), 1e-14, 100_000)
            .ok_or(Error::EigenNonConvergence { residual: f64::NAN })?;
        let (_, t) = schur.unpack();
        (0..dim).map(|i| t[(i, i)]).collect()
    };
    let lead = eig
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - 1.0)
                .norm()
                .partial_cmp(&(b.1 - 1.0).norm())
                .unwrap_or(Ordering::Equal)
        })
        .map(|(i, _)| i)
        .expect("non-empty spectrum");
    let mut max_mod = 0.0f64;
    let mut relevance = Complex64::new(0.0, 0.0);
    for (i, l) in eig.iter().enumerate() {
        if i == lead {
            continue;
        }
        max_mod = max_mod.max(l.norm());
        relevance += l / (1.0 - l);
    }
    Ok(GapReport {
        gap: 1.0 - max_mod,
        relevance_sum: relevance.norm(),
    })
}

/// Lowest-order gapped estimate `N C_N / Det_perp(I - A) * sin(x/2)/(x/2)`;
/// `C_N` replaced by one unless `include_cn`.
pub fn zirn_approximation(adjoint_avg: &CMatrix, x: f64, include_cn: bool) -> Result<f64> {
    let n = dimension_of_adjoint(adjoint_avg)?;
    if n > 1 {
        let report = gap_diagnostic(adjoint_avg)?;
        if !(report.gap > 1e-8) {
            return Err(Error::NoSpectralGap { gap: report.gap });
        }
    }
    let det = det_perp(adjoint_avg)?;
    let cn = if include_cn {
        crate::geometry::normalization_constant(n)
    } else {
        1.0
    };
    Ok(n as f64 * cn / det.re * crate::numerics::special::sinc(x / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_counts_and_order() {
        let all: Vec<Vec<usize>> = enumerate_configs(2)
            .unwrap()
            .map(|c| c.elements().to_vec())
            .collect();
        assert_eq!(
            all,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(enumerate_configs(1).unwrap().count(), 2);
        assert_eq!(enumerate_configs(5).unwrap().count(), 252);
        assert!(matches!(
            enumerate_configs(15),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn unrank_matches_iteration() {
        let n = 4;
        for (rank, cfg) in enumerate_configs(n).unwrap().enumerate() {
            assert_eq!(unrank(2 * n, n, rank as u128), cfg.elements());
        }
    }

    #[test]
    fn derived_labels() {
        // S = {1, 3, 4} (one-based) at N = 3: S1 = {1,3}, S2 = {1}
        let cfg = SubsetConfig::new(3, vec![0, 2, 3]).unwrap();
        assert_eq!(cfg.s1(), vec![0, 2]);
        assert_eq!(cfg.s2(), vec![0]);
        assert_eq!(cfg.p(), 1);
        assert_eq!(cfg.r(), 1);
    }

    #[test]
    fn n1_terms_by_hand() {
        let theta = 0.7;
        let x = 0.9;
        let g = cis(x);
        let phis = PhiSpectrum::new(&[theta], x);
        let a = weyl_term(&SubsetConfig::new(1, vec![0]).unwrap(), &phis).unwrap();
        let b = weyl_term(&SubsetConfig::new(1, vec![1]).unwrap(), &phis).unwrap();
        assert!((a - 1.0 / (1.0 - g)).norm() < 1e-14);
        assert!((b - g / (1.0 - 1.0 / g)).norm() < 1e-14);
        assert!((a + b - (1.0 + g)).norm() < 1e-14);
    }

    #[test]
    fn pole_is_reported() {
        let phis = PhiSpectrum::new(&[0.3, 0.3], 0.5);
        let cfg = SubsetConfig::new(2, vec![0, 2]).unwrap();
        assert!(matches!(
            weyl_term(&cfg, &phis),
            Err(Error::WeylPole { .. })
        ));
    }

    #[test]
    fn standard_saddles_n1() {
        let spec = EigenphaseSpectrum::from_phases(vec![1.0]);
        let g = Complex64::new(0.6, 0.0);
        let (plus, minus) = standard_saddles(&spec, g).unwrap();
        assert!((plus - g.sqrt().inv() / (1.0 - g)).norm() < 1e-14);
        assert!((plus + minus - (1.0 + g) / g.sqrt()).norm() < 1e-13);
        assert!(plus.re > 0.0);
    }

    #[test]
    fn complement_basis_is_orthonormal() {
        let b = complement_basis(3);
        let gram = b.adjoint() * &b;
        assert!((gram - CMatrix::identity(8, 8)).camax() < 1e-14);
        let u = crate::unitary::uniform_mode(3);
        assert!((b.adjoint() * u).camax() < 1e-14);
    }
}
