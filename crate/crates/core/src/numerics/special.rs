use statrs::function::gamma::ln_gamma;

/// Exact binomial coefficient; `None` on overflow or k > n.
pub fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) after the multiplication
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Binomial coefficient as a double; exact while it fits in 53 bits.
pub fn binomial(n: usize, k: isize) -> f64 {
    if k < 0 || k as usize > n {
        return 0.0;
    }
    match binomial_u128(n as u64, k as u64) {
        Some(v) if v < (1u128 << 100) => v as f64,
        _ => ln_binomial(n, k as usize).exp(),
    }
}

pub fn ln_binomial(n: usize, k: usize) -> f64 {
    assert!(k <= n);
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `ln(Gamma(1) Gamma(2) ... Gamma(n))`; zero for the empty product.
pub fn ln_gamma_string(n: usize) -> f64 {
    (1..=n).map(|k| ln_gamma(k as f64)).sum()
}

/// `ln(Gamma(a) ... Gamma(b))` for `a <= b`, zero if `a > b`.
pub fn ln_gamma_range(a: usize, b: usize) -> f64 {
    if a > b {
        return 0.0;
    }
    (a..=b).map(|k| ln_gamma(k as f64)).sum()
}

/// `ln(exp(a) + exp(b))` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `sin(x)/x` with the removable point handled.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0 + x.powi(4) / 120.0
    } else {
        x.sin() / x
    }
}
