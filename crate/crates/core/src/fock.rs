//! Brute-force fermionic Fock-space oracle on the balanced subspace
//! `F = Ker(F+ - F-)` of `2N` modes, for `N <= 4`.
//!
//! Mode `+i` is bit `i`, mode `-i` is bit `N + i` (`i = 0..N`). Creation and
//! annihilation on mode `m` carry the Jordan-Wigner sign
//! `(-1)^{#occupied modes below m}`.

use std::collections::HashMap;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::correlator::{CorrelatorCurve, GammaGrid, GridPoint};
use crate::error::{Error, Result};
use crate::unitary::{CMatrix, UnitaryMatrix};

pub const MAX_FOCK_N: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Create(usize),
    Annihilate(usize),
}

#[derive(Debug, Clone)]
pub struct FockBasis {
    n: usize,
    states: Vec<u32>,
    index: HashMap<u32, usize>,
}

impl FockBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn plus(&self, i: usize) -> usize {
        i
    }

    pub fn minus(&self, i: usize) -> usize {
        self.n + i
    }

    pub fn plus_count(&self, s: u32) -> u32 {
        (s & ((1u32 << self.n) - 1)).count_ones()
    }

    pub fn minus_count(&self, s: u32) -> u32 {
        (s >> self.n).count_ones()
    }

    /// Applies `ops` right to left; `None` if the state is annihilated.
    fn apply(&self, ops: &[Op], state: u32) -> Option<(f64, u32)> {
        let mut s = state;
        let mut sign = 1.0;
        for op in ops.iter().rev() {
            let (m, create) = match *op {
                Op::Create(m) => (m, true),
                Op::Annihilate(m) => (m, false),
            };
            let bit = 1u32 << m;
            let occupied = s & bit != 0;
            if occupied == create {
                return None;
            }
            if (s & (bit - 1)).count_ones() % 2 == 1 {
                sign = -sign;
            }
            s ^= bit;
        }
        Some((sign, s))
    }

    /// Adds `coeff * (product of ops)` into `m`.
    fn add_term(&self, m: &mut CMatrix, coeff: Complex64, ops: &[Op]) {
        if coeff == Complex64::new(0.0, 0.0) {
            return;
        }
        for (col, &s) in self.states.iter().enumerate() {
            if let Some((sign, t)) = self.apply(ops, s) {
                let row = *self
                    .index
                    .get(&t)
                    .expect("balanced-preserving operator left the subspace");
                m[(row, col)] += coeff * sign;
            }
        }
    }

    fn zero(&self) -> CMatrix {
        CMatrix::zeros(self.dim(), self.dim())
    }

    fn diagonal_from(&self, f: impl Fn(u32) -> Complex64) -> CMatrix {
        let d = DVector::from_iterator(self.dim(), self.states.iter().map(|&s| f(s)));
        CMatrix::from_diagonal(&d)
    }
}

/// States with equal `+` and `-` occupation, sorted by bitmask value.
pub fn build_basis(n: usize) -> Result<FockBasis> {
    if n == 0 {
        return Err(Error::EmptyDimension);
    }
    if n > MAX_FOCK_N {
        return Err(Error::OracleScale { n, max: MAX_FOCK_N });
    }
    let low = (1u32 << n) - 1;
    let states: Vec<u32> = (0u32..(1u32 << (2 * n)))
        .filter(|s| (s & low).count_ones() == (s >> n).count_ones())
        .collect();
    let index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    Ok(FockBasis { n, states, index })
}

/// An operator on the balanced subspace.
#[derive(Debug, Clone)]
pub struct FockOperator {
    pub matrix: CMatrix,
}

impl FockOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn commutator(&self, other: &FockOperator) -> FockOperator {
        FockOperator {
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn distance(&self, other: &FockOperator) -> f64 {
        (&self.matrix - &other.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// `R(X) = a f+^dag f+ + b f+^dag f-^dag + c f- f+ + d f- f-^dag` for the
/// blocks of the `2N x 2N` matrix `X`.
pub fn rep_lie(x: &CMatrix, basis: &FockBasis) -> Result<FockOperator> {
    let n = basis.n();
    if x.nrows() != 2 * n || x.ncols() != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            got: x.nrows().max(x.ncols()),
        });
    }
    let mut m = basis.zero();
    for i in 0..n {
        for j in 0..n {
            let (pi, pj, mi, mj) = (basis.plus(i), basis.plus(j), basis.minus(i), basis.minus(j));
            basis.add_term(&mut m, x[(i, j)], &[Op::Create(pi), Op::Annihilate(pj)]);
            basis.add_term(&mut m, x[(i, n + j)], &[Op::Create(pi), Op::Create(mj)]);
            basis.add_term(
                &mut m,
                x[(n + i, j)],
                &[Op::Annihilate(mi), Op::Annihilate(pj)],
            );
            basis.add_term(
                &mut m,
                x[(n + i, n + j)],
                &[Op::Annihilate(mi), Op::Create(mj)],
            );
        }
    }
    Ok(FockOperator { matrix: m })
}

/// `E_ij = f+i^dag f+j - f-j^dag f-i`, the `u(N)` generators.
fn unitary_generator(basis: &FockBasis, i: usize, j: usize) -> CMatrix {
    let mut m = basis.zero();
    let one = Complex64::new(1.0, 0.0);
    basis.add_term(
        &mut m,
        one,
        &[Op::Create(basis.plus(i)), Op::Annihilate(basis.plus(j))],
    );
    basis.add_term(
        &mut m,
        -one,
        &[Op::Create(basis.minus(j)), Op::Annihilate(basis.minus(i))],
    );
    m
}

pub fn number_operators(basis: &FockBasis) -> (FockOperator, FockOperator) {
    let plus = basis.diagonal_from(|s| Complex64::new(basis.plus_count(s) as f64, 0.0));
    let minus = basis.diagonal_from(|s| Complex64::new(basis.minus_count(s) as f64, 0.0));
    (
        FockOperator { matrix: plus },
        FockOperator { matrix: minus },
    )
}

pub struct Su2Generators {
    pub j_up: FockOperator,
    pub j_down: FockOperator,
    pub j0: FockOperator,
}

pub fn su2_generators(basis: &FockBasis) -> Su2Generators {
    let n = basis.n();
    let one = Complex64::new(1.0, 0.0);
    let mut up = basis.zero();
    let mut down = basis.zero();
    for i in 0..n {
        basis.add_term(
            &mut up,
            one,
            &[Op::Create(basis.plus(i)), Op::Create(basis.minus(i))],
        );
        basis.add_term(
            &mut down,
            one,
            &[
                Op::Annihilate(basis.minus(i)),
                Op::Annihilate(basis.plus(i)),
            ],
        );
    }
    let j0 = basis.diagonal_from(|s| {
        Complex64::new(
            basis.plus_count(s) as f64 + basis.minus_count(s) as f64 - n as f64,
            0.0,
        )
    });
    Su2Generators {
        j_up: FockOperator { matrix: up },
        j_down: FockOperator { matrix: down },
        j0: FockOperator { matrix: j0 },
    }
}

/// Casimir `sum_ij E_ij E_ji` of the `u(N)` action.
pub fn laplacian(basis: &FockBasis) -> FockOperator {
    let n = basis.n();
    let gens: Vec<Vec<CMatrix>> = (0..n)
        .map(|i| (0..n).map(|j| unitary_generator(basis, i, j)).collect())
        .collect();
    let mut m = basis.zero();
    for i in 0..n {
        for j in 0..n {
            m += &gens[i][j] * &gens[j][i];
        }
    }
    FockOperator { matrix: m }
}

/// `(N+1)(F+ + F-) - (F+^2 + F-^2) - 2 J_up J_down`.
pub fn laplacian_from_number_operators(basis: &FockBasis) -> FockOperator {
    let n = basis.n() as f64;
    let (fp, fm) = number_operators(basis);
    let su2 = su2_generators(basis);
    let m = (&fp.matrix + &fm.matrix) * Complex64::new(n + 1.0, 0.0)
        - (&fp.matrix * &fp.matrix + &fm.matrix * &fm.matrix)
        - (&su2.j_up.matrix * &su2.j_down.matrix) * Complex64::new(2.0, 0.0);
    FockOperator { matrix: m }
}

/// Sorted eigenvalues of a Hermitian operator.
pub fn hermitian_spectrum(op: &FockOperator) -> Result<Vec<f64>> {
    let h = &op.matrix;
    let residual = (h - h.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if residual > 1e-10 {
        return Err(Error::NotHermitian { residual });
    }
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(ev)
}

/// Groups eigenvalues into `(value rounded to an integer, multiplicity)`,
/// failing if any eigenvalue is further than `1e-9` from an integer.
pub fn integer_spectrum(eigenvalues: &[f64]) -> Result<Vec<(i64, usize)>> {
    let mut out: Vec<(i64, usize)> = Vec::new();
    for &e in eigenvalues {
        let r = e.round();
        if (e - r).abs() > 1e-9 {
            return Err(Error::Degenerate(format!("non-integer eigenvalue {e}")));
        }
        let r = r as i64;
        match out.last_mut() {
            Some((v, c)) if *v == r => *c += 1,
            _ => out.push((r, 1)),
        }
    }
    Ok(out)
}

/// Expected `(2p(N+1-p), (N-2p+1) dim rho_p)` for `p = 0..=N/2`.
pub fn casimir_table(n: usize) -> Vec<(i64, usize)> {
    let mut rows: Vec<(i64, usize)> = (0..=n / 2)
        .map(|p| {
            let b = |k: isize| -> i128 {
                if k < 0 {
                    0
                } else {
                    crate::numerics::special::binomial_u128(n as u64, k as u64).unwrap() as i128
                }
            };
            let dim = b(p as isize).pow(2) - b(p as isize - 1).pow(2);
            let mult = (n - 2 * p + 1) as i128 * dim;
            ((2 * p * (n + 1 - p)) as i64, mult as usize)
        })
        .collect();
    rows.sort();
    // equal eigenvalues for different p cannot occur (2p(N+1-p) is strictly
    // increasing for p <= N/2), but merge defensively
    rows.dedup_by(|a, b| {
        if a.0 == b.0 {
            b.1 += a.1;
            true
        } else {
            false
        }
    });
    rows
}

/// Principal logarithm via the Schur form. If an eigenvalue lies within
/// `1e-6` of `-1` the matrix is first rotated by a global phase placing `-1`
/// in the middle of the widest eigenphase gap; the returned angle is that
/// rotation.
pub fn principal_log(u: &UnitaryMatrix) -> Result<(CMatrix, f64)> {
    let (eig, _) = u.schur()?;
    let near_branch = eig.iter().any(|z| (z + 1.0).norm() < 1e-6);
    let alpha = if near_branch {
        let mut phases: Vec<f64> = eig
            .iter()
            .map(|z| z.arg().rem_euclid(2.0 * std::f64::consts::PI))
            .collect();
        phases.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut best = (0.0, 0.0);
        for k in 0..phases.len() {
            let a = phases[k];
            let b = if k + 1 < phases.len() {
                phases[k + 1]
            } else {
                phases[0] + two_pi
            };
            if b - a > best.0 {
                best = (b - a, 0.5 * (a + b));
            }
        }
        if best.0 < 1e-5 {
            return Err(Error::LogBranch);
        }
        std::f64::consts::PI - best.1
    } else {
        0.0
    };
    let rotated = if alpha == 0.0 {
        u.clone()
    } else {
        u.rotated(alpha)
    };
    let (eig, q) = rotated.schur()?;
    if eig.iter().any(|z| (z + 1.0).norm() < 1e-9) {
        return Err(Error::LogBranch);
    }
    let logs = DVector::from_iterator(
        eig.len(),
        eig.iter().map(|z| Complex64::new(z.norm().ln(), z.arg())),
    );
    Ok((&q * CMatrix::from_diagonal(&logs) * q.adjoint(), alpha))
}

/// `Tr_F gamma^{(F+ + F- - N)/2} exp sum_ij (log U)_ij (f+i^dag f+j - f-j^dag f-i)`.
pub fn character_trace(
    u: &UnitaryMatrix,
    gamma: Complex64,
    basis: &FockBasis,
) -> Result<Complex64> {
    character_trace_at(u, &GridPoint::from_gamma(gamma), basis)
}

/// [`character_trace`] with the grid point's own branch of `log gamma`.
pub fn character_trace_at(
    u: &UnitaryMatrix,
    point: &GridPoint,
    basis: &FockBasis,
) -> Result<Complex64> {
    let n = basis.n();
    if u.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: u.n(),
        });
    }
    // Omega is invariant under U -> e^{i alpha} U, so no compensation is needed
    let (log_u, _) = principal_log(u)?;
    let mut generator = basis.zero();
    for i in 0..n {
        for j in 0..n {
            let l = log_u[(i, j)];
            if l.norm() == 0.0 {
                continue;
            }
            generator += unitary_generator(basis, i, j) * l;
        }
    }
    let evolution = generator.exp();
    let log_gamma = point.log_gamma;
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &s) in basis.states().iter().enumerate() {
        let j0 = basis.plus_count(s) as f64 + basis.minus_count(s) as f64 - n as f64;
        acc += (log_gamma * (0.5 * j0)).exp() * evolution[(k, k)];
    }
    Ok(acc)
}

/// Fock-route correlator curve.
pub fn omega_fock(u: &UnitaryMatrix, grid: &GammaGrid) -> Result<CorrelatorCurve> {
    grid.check_dimension(u.n())?;
    let basis = build_basis(u.n())?;
    let values = grid
        .points
        .iter()
        .map(|p| character_trace_at(u, p, &basis))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelatorCurve::new(grid.clone(), values, "fock"))
}
