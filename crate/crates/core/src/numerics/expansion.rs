//! Fixed-length floating-point expansions.
//!
//! A value is stored as `K` non-overlapping doubles ordered from largest to
//! smallest magnitude, which gives roughly `53 * K` bits of significand while
//! keeping the exponent range of `f64`. Every operation is computed exactly
//! with error-free transformations and then rounded back to `K` components,
//! so results are correct to about `2^(-53K)` relative per operation.
//!
//! This is used where individual terms are many orders of magnitude larger
//! than their sum and must cancel, e.g. the Weyl saddle sum near `gamma = 1`.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Adds `b` into the increasing-magnitude expansion `e` without rounding.
fn grow(e: &mut Vec<f64>, b: f64) {
    if b == 0.0 {
        return;
    }
    let mut q = b;
    let mut out = Vec::with_capacity(e.len() + 1);
    for &x in e.iter() {
        let (s, h) = two_sum(q, x);
        if h != 0.0 {
            out.push(h);
        }
        q = s;
    }
    if q != 0.0 {
        out.push(q);
    }
    *e = out;
}

/// Shewchuk's compression; output is increasing in magnitude with the last
/// component carrying the leading bits.
fn compress(e: &[f64]) -> Vec<f64> {
    let m = e.len();
    if m == 0 {
        return Vec::new();
    }
    let mut g = vec![0.0; m];
    let mut bottom = m - 1;
    let mut q = e[m - 1];
    for i in (0..m - 1).rev() {
        let (qn, r) = fast_two_sum(q, e[i]);
        if r != 0.0 {
            g[bottom] = qn;
            bottom -= 1;
            q = r;
        } else {
            q = qn;
        }
    }
    g[bottom] = q;
    let mut h = Vec::with_capacity(m);
    for &gi in &g[bottom + 1..] {
        let (qn, r) = fast_two_sum(gi, q);
        if r != 0.0 {
            h.push(r);
        }
        q = qn;
    }
    h.push(q);
    h
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expansion<const K: usize> {
    comps: [f64; K],
}

impl<const K: usize> Default for Expansion<K> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<const K: usize> Expansion<K> {
    pub const fn zero() -> Self {
        Self { comps: [0.0; K] }
    }

    pub fn from_f64(x: f64) -> Self {
        let mut comps = [0.0; K];
        comps[0] = x;
        Self { comps }
    }

    /// Exact difference of two doubles.
    pub fn diff(a: f64, b: f64) -> Self {
        let (s, e) = two_sum(a, -b);
        let mut comps = [0.0; K];
        comps[0] = s;
        if K > 1 {
            comps[1] = e;
        }
        Self { comps }
    }

    fn from_raw(mut raw: Vec<f64>) -> Self {
        // raw is an exact increasing-magnitude expansion
        raw = compress(&raw);
        let mut comps = [0.0; K];
        for (slot, v) in comps.iter_mut().zip(raw.iter().rev()) {
            *slot = *v;
        }
        Self { comps }
    }

    pub fn to_f64(&self) -> f64 {
        // components are ordered, so summing smallest first is accurate
        self.comps.iter().rev().sum()
    }

    pub fn leading(&self) -> f64 {
        self.comps[0]
    }

    pub fn components(&self) -> &[f64; K] {
        &self.comps
    }

    pub fn is_zero(&self) -> bool {
        self.comps[0] == 0.0
    }

    fn accumulate(raw: &mut Vec<f64>, values: &[f64]) {
        for &v in values {
            grow(raw, v);
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        let mut raw = Vec::with_capacity(2 * K);
        for &c in &self.comps {
            let (p, e) = two_prod(c, k);
            grow(&mut raw, e);
            grow(&mut raw, p);
        }
        Self::from_raw(raw)
    }

    /// Multiplies by `2^k` exactly (barring underflow).
    pub fn ldexp(&self, k: i32) -> Self {
        let mut out = *self;
        for c in out.comps.iter_mut() {
            *c = ldexp(*c, k);
        }
        out
    }

    pub fn abs(&self) -> Self {
        if self.comps[0] < 0.0 {
            -*self
        } else {
            *self
        }
    }

    pub fn recip(&self) -> Self {
        Self::from_f64(1.0) / *self
    }
}

/// `x * 2^k` without intermediate overflow for moderate `k`.
pub fn ldexp(x: f64, k: i32) -> f64 {
    let mut x = x;
    let mut k = k;
    while k > 1000 {
        x *= 2f64.powi(1000);
        k -= 1000;
    }
    while k < -1000 {
        x *= 2f64.powi(-1000);
        k += 1000;
    }
    x * 2f64.powi(k)
}

impl<const K: usize> Add for Expansion<K> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: Self) -> Self {
        let mut raw = Vec::with_capacity(2 * K);
        Self::accumulate(&mut raw, &self.comps);
        Self::accumulate(&mut raw, &rhs.comps);
        Self::from_raw(raw)
    }
}

impl<const K: usize> Neg for Expansion<K> {
    type Output = Self;
    fn neg(self) -> Self {
        let mut comps = self.comps;
        for c in comps.iter_mut() {
            *c = -*c;
        }
        Self { comps }
    }
}

impl<const K: usize> Sub for Expansion<K> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<const K: usize> Mul for Expansion<K> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut raw = Vec::with_capacity(2 * K * K);
        // products whose magnitude is below ~2^(-53K) of the leading one are
        // dropped after rounding anyway, but keeping all of them costs little
        for &a in &self.comps {
            if a == 0.0 {
                continue;
            }
            for &b in &rhs.comps {
                if b == 0.0 {
                    continue;
                }
                let (p, e) = two_prod(a, b);
                grow(&mut raw, e);
                grow(&mut raw, p);
            }
        }
        Self::from_raw(raw)
    }
}

impl<const K: usize> Div for Expansion<K> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let d = rhs.to_f64();
        let mut rem = self;
        let mut quotient = Vec::with_capacity(K + 1);
        for _ in 0..=K {
            let q = rem.to_f64() / d;
            if q == 0.0 || !q.is_finite() {
                if !q.is_finite() {
                    grow(&mut quotient, q);
                }
                break;
            }
            grow(&mut quotient, q);
            rem = rem - rhs.scale(q);
        }
        Self::from_raw(quotient)
    }
}

/// Complex number with expansion components.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexExpansion<const K: usize> {
    pub re: Expansion<K>,
    pub im: Expansion<K>,
}

impl<const K: usize> ComplexExpansion<K> {
    pub fn new(re: Expansion<K>, im: Expansion<K>) -> Self {
        Self { re, im }
    }

    pub fn from_c64(z: num_complex::Complex64) -> Self {
        Self::new(Expansion::from_f64(z.re), Expansion::from_f64(z.im))
    }

    pub fn one() -> Self {
        Self::new(Expansion::from_f64(1.0), Expansion::zero())
    }

    /// `a - b` for double-precision inputs, exactly.
    pub fn diff(a: num_complex::Complex64, b: num_complex::Complex64) -> Self {
        Self::new(Expansion::diff(a.re, b.re), Expansion::diff(a.im, b.im))
    }

    pub fn to_c64(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re, -self.im)
    }

    pub fn norm_sqr(&self) -> Expansion<K> {
        self.re * self.re + self.im * self.im
    }

    /// Approximate magnitude in double precision (for ordering only).
    pub fn abs_approx(&self) -> f64 {
        self.re.to_f64().hypot(self.im.to_f64())
    }

    pub fn ldexp(&self, k: i32) -> Self {
        Self::new(self.re.ldexp(k), self.im.ldexp(k))
    }

    pub fn powu(&self, mut n: u32) -> Self {
        let mut base = *self;
        let mut acc = Self::one();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            n >>= 1;
        }
        acc
    }
}

impl<const K: usize> Add for ComplexExpansion<K> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl<const K: usize> Sub for ComplexExpansion<K> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl<const K: usize> Mul for ComplexExpansion<K> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.re * rhs.re - self.im * rhs.im,
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}

impl<const K: usize> Div for ComplexExpansion<K> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let den = rhs.norm_sqr();
        let num = self * rhs.conj();
        Self::new(num.re / den, num.im / den)
    }
}

pub type TripleDouble = Expansion<3>;
pub type ComplexTriple = ComplexExpansion<3>;

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_third_is_accurate_beyond_double() {
        let third = TripleDouble::from_f64(1.0) / TripleDouble::from_f64(3.0);
        let back = third * TripleDouble::from_f64(3.0) - TripleDouble::from_f64(1.0);
        assert!(back.to_f64().abs() < 1e-45, "residual {}", back.to_f64());
    }

    #[test]
    fn cancellation_keeps_small_part() {
        let big = TripleDouble::from_f64(1e30);
        let tiny = TripleDouble::from_f64(1.0);
        let s = (big + tiny) - big;
        assert_eq!(s.to_f64(), 1.0);
    }

    #[test]
    fn diff_is_exact() {
        let a = 1.0 + f64::EPSILON;
        let b = 1e-20;
        let d = TripleDouble::diff(a, b) + TripleDouble::from_f64(b);
        assert_eq!(d.to_f64(), a);
        assert_eq!((d - TripleDouble::from_f64(a)).to_f64(), 0.0);
    }

    proptest! {
        #[test]
        fn product_of_doubles_matches_two_prod(a in -1e10f64..1e10, b in -1e10f64..1e10) {
            let p = TripleDouble::from_f64(a) * TripleDouble::from_f64(b);
            let (hi, lo) = two_prod(a, b);
            prop_assert_eq!(p.components()[0] + p.components()[1], hi + lo);
            prop_assert_eq!((p - TripleDouble::from_f64(hi)).to_f64(), lo);
        }

        #[test]
        fn division_inverts_multiplication(a in 1e-3f64..1e3, b in 1e-3f64..1e3, c in -1.0f64..1.0) {
            let x = TripleDouble::from_f64(a) + TripleDouble::from_f64(c * 1e-20);
            let y = TripleDouble::from_f64(b);
            let r = (x / y) * y - x;
            prop_assert!(r.to_f64().abs() <= 1e-44 * a.abs());
        }
    }
}
