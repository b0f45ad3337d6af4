//! One- and two-loop corrections around the averaged saddle, by exhaustive
//! Wick pairing of the trace monomials in `f1`, `f2`.
//!
//! `T` acts on `zeta` through row-major vectorization, `(T zeta)_{ij} =
//! sum_{kl} T_{(ij),(kl)} zeta_{kl}`, and the Gaussian weight is
//! `exp(-Tr zeta^dag (1 - T) zeta)` with contraction
//! `<zeta_a conj(zeta_b)> = [(1 - T)^{-1}]_{ab}`.

use nalgebra::DVector;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::McEstimate;
use crate::numerics::sum::ComplexStats;
use crate::rng::RngStream;
use crate::unitary::{unvectorize, vectorize, CMatrix};

pub const MAX_LOOP_N: usize = 3;
pub const MAX_LOOP_ORDER: usize = 2;

/// Holomorphic (`zeta` or `T zeta`) or antiholomorphic (`conj zeta`) entry
/// with matrix indices given as summation-variable ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Field {
    with_t: bool,
    row: usize,
    col: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Monomial {
    coeff: f64,
    holo: Vec<Field>,
    anti: Vec<Field>,
    vars: usize,
}

impl Monomial {
    fn one(coeff: f64) -> Self {
        Self {
            coeff,
            holo: Vec::new(),
            anti: Vec::new(),
            vars: 0,
        }
    }

    /// Multiplies by `Tr(zeta^dag Y_1 zeta^dag Y_2 ...)`, `Y_k = T zeta` where
    /// `word[k]` is true.
    fn times_trace(mut self, word: &[bool]) -> Self {
        let k = word.len();
        let base = self.vars;
        let v = |m: usize| base + (m % (2 * k));
        for (m, &with_t) in word.iter().enumerate() {
            // (zeta^dag)_{a b} = conj(zeta_{b a})
            self.anti.push(Field {
                with_t: false,
                row: v(2 * m + 1),
                col: v(2 * m),
            });
            self.holo.push(Field {
                with_t,
                row: v(2 * m + 1),
                col: v(2 * m + 2),
            });
        }
        self.vars += 2 * k;
        self
    }
}

const PLAIN2: &[bool] = &[false, false];
const WITH_T2: &[bool] = &[true, true];
const PLAIN3: &[bool] = &[false, false, false];
const WITH_T3: &[bool] = &[true, true, true];
const TRACE1: &[bool] = &[false];

fn f1_monomials(n: usize) -> Vec<Monomial> {
    let nf = n as f64;
    vec![
        Monomial::one(0.5).times_trace(PLAIN2),
        Monomial::one(-0.5).times_trace(WITH_T2),
        Monomial::one(-2.0 * nf).times_trace(TRACE1),
    ]
}

/// `f2 = -A3/3 + B3/3 + (A-B)^2/8 + 2N^2 t^2 + N A - N t (A - B)` with
/// `A = Tr(zeta^dag zeta)^2`, `B = Tr(zeta^dag T zeta)^2`, `t = Tr zeta^dag zeta`.
fn f2_monomials(n: usize) -> Vec<Monomial> {
    let nf = n as f64;
    vec![
        Monomial::one(-1.0 / 3.0).times_trace(PLAIN3),
        Monomial::one(1.0 / 3.0).times_trace(WITH_T3),
        Monomial::one(0.125).times_trace(PLAIN2).times_trace(PLAIN2),
        Monomial::one(-0.25)
            .times_trace(PLAIN2)
            .times_trace(WITH_T2),
        Monomial::one(0.125)
            .times_trace(WITH_T2)
            .times_trace(WITH_T2),
        Monomial::one(2.0 * nf * nf)
            .times_trace(TRACE1)
            .times_trace(TRACE1),
        Monomial::one(nf).times_trace(PLAIN2),
        Monomial::one(-nf).times_trace(TRACE1).times_trace(PLAIN2),
        Monomial::one(nf).times_trace(TRACE1).times_trace(WITH_T2),
    ]
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

struct Propagators {
    n: usize,
    g: CMatrix,
    tg: CMatrix,
}

fn dimension_of(t: &CMatrix) -> Result<usize> {
    if t.nrows() != t.ncols() {
        return Err(Error::NotSquare {
            rows: t.nrows(),
            cols: t.ncols(),
        });
    }
    let n = (t.nrows() as f64).sqrt().round() as usize;
    if n == 0 {
        return Err(Error::EmptyDimension);
    }
    if n * n != t.nrows() {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: t.nrows(),
        });
    }
    Ok(n)
}

/// `(1 - T)^{-1}`; `SingularPropagator` when `1 - T` is numerically singular.
pub fn propagator(t: &CMatrix) -> Result<CMatrix> {
    let m = t.nrows();
    let one_minus = CMatrix::identity(m, m) - t;
    let sv = one_minus.clone().singular_values();
    let max = sv.max();
    if max == 0.0 || sv.min() < 1e-13 * max {
        return Err(Error::SingularPropagator);
    }
    one_minus.try_inverse().ok_or(Error::SingularPropagator)
}

fn wick_expectation(mono: &Monomial, props: &Propagators) -> Complex64 {
    let n = props.n;
    let k = mono.holo.len();
    let total_assignments = n.pow(mono.vars as u32);
    let perms = permutations(k);
    let idx = |assign: &[usize], f: &Field| assign[f.row] * n + assign[f.col];
    let mut total = Complex64::new(0.0, 0.0);
    let mut assign = vec![0usize; mono.vars];
    for code in 0..total_assignments {
        let mut c = code;
        for a in assign.iter_mut() {
            *a = c % n;
            c /= n;
        }
        for perm in &perms {
            let mut prod = Complex64::new(1.0, 0.0);
            for (h, &a) in mono.holo.iter().zip(perm) {
                let p = if h.with_t { &props.tg } else { &props.g };
                prod *= p[(idx(&assign, h), idx(&assign, &mono.anti[a]))];
            }
            total += prod;
        }
    }
    total * mono.coeff
}

fn check_order(order: usize) -> Result<()> {
    if order == 0 || order > MAX_LOOP_ORDER {
        return Err(Error::Domain {
            name: "order",
            value: order as f64,
            domain: "{1, 2}",
        });
    }
    Ok(())
}

/// Normalized Gaussian expectation `<f_order>`; the loop constant.
pub fn loop_constant(t: &CMatrix, order: usize) -> Result<Complex64> {
    check_order(order)?;
    let n = dimension_of(t)?;
    if n > MAX_LOOP_N {
        return Err(Error::OracleScale { n, max: MAX_LOOP_N });
    }
    let g = propagator(t)?;
    let props = Propagators { n, tg: t * &g, g };
    let monos = if order == 1 {
        f1_monomials(n)
    } else {
        f2_monomials(n)
    };
    Ok(monos.par_iter().map(|m| wick_expectation(m, &props)).sum())
}

/// `int prod d^2 zeta / pi  exp(-Tr zeta^dag (1-T) zeta) f_order(zeta)`, i.e.
/// the loop constant times `Det(1 - T)^{-1}`.
pub fn loop_corrections(t: &CMatrix, order: usize) -> Result<Complex64> {
    let c = loop_constant(t, order)?;
    let m = t.nrows();
    let det = (CMatrix::identity(m, m) - t).determinant();
    Ok(c / det)
}

/// `-N^3` at one loop, `N^6/2 + 7N^4/12 - N^2/12` at two loops.
pub fn expected_loop_constant(n: usize, order: usize) -> Result<f64> {
    check_order(order)?;
    let nf = n as f64;
    Ok(if order == 1 {
        -nf.powi(3)
    } else {
        nf.powi(6) / 2.0 + 7.0 * nf.powi(4) / 12.0 - nf * nf / 12.0
    })
}

fn apply_t(t: &CMatrix, zeta: &CMatrix) -> CMatrix {
    let v: DVector<Complex64> = t * vectorize(zeta);
    unvectorize(&v, zeta.nrows())
}

/// Pointwise `f_order(zeta)`.
pub fn loop_integrand(t: &CMatrix, zeta: &CMatrix, order: usize) -> Result<Complex64> {
    check_order(order)?;
    let n = dimension_of(t)?;
    if zeta.nrows() != n || zeta.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: zeta.nrows(),
        });
    }
    let nf = n as f64;
    let zd = zeta.adjoint();
    let p = &zd * zeta;
    let q = &zd * apply_t(t, zeta);
    let tr = |m: &CMatrix| m.trace();
    let a = tr(&(&p * &p));
    let b = tr(&(&q * &q));
    let s = tr(&p);
    Ok(if order == 1 {
        0.5 * a - 0.5 * b - 2.0 * nf * s
    } else {
        -tr(&(&p * &p * &p)) / 3.0
            + tr(&(&q * &q * &q)) / 3.0
            + (a - b) * (a - b) * 0.125
            + s * s * (2.0 * nf * nf)
            + a * nf
            - s * (a - b) * nf
    })
}

const MC_BLOCK: u64 = 8192;

/// Monte Carlo estimate of [`loop_corrections`]: `zeta` drawn from the
/// standard complex Gaussian, reweighted by `exp(Tr zeta^dag T zeta)`.
/// Finite variance needs the Hermitian part of `T` below `1/2`.
pub fn mc_loop_integral(
    t: &CMatrix,
    order: usize,
    samples: u64,
    stream: RngStream,
) -> Result<McEstimate> {
    check_order(order)?;
    let n = dimension_of(t)?;
    if samples == 0 {
        return Err(Error::Config("samples must be at least 1".into()));
    }
    let blocks = samples.div_ceil(MC_BLOCK);
    let partials = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream.substream(b).rng();
            let mut stats = ComplexStats::default();
            for _ in 0..MC_BLOCK.min(samples - b * MC_BLOCK) {
                let zeta = CMatrix::from_fn(n, n, |_, _| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
                });
                let weight = (zeta.adjoint() * apply_t(t, &zeta)).trace().exp();
                stats.push(weight * loop_integrand(t, &zeta, order)?);
            }
            Ok(stats)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = ComplexStats::default();
    for p in &partials {
        total.merge(p);
    }
    Ok(McEstimate {
        estimate: total.mean(),
        stderr: total.stderr(),
        samples,
    })
}
