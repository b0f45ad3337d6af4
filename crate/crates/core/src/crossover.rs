//! Poisson to CUE crossover: Poisson-averaged characters damped by the
//! heat kernel, the large-N Laplace asymptotics and the frequency shift
//! `y_eps`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::correlator::{multiplet_factor, CorrelatorCurve, GammaGrid};
use crate::error::{Error, Result};
use crate::numerics::special::{binomial, ln_binomial};
use crate::numerics::sum::NeumaierSum;

pub const MAX_CROSSOVER_N: usize = 10_000;
const LOG_SPACE_N: usize = 300;
pub const CRITICAL_WIDTH: f64 = 1e-12;

/// `ln(C(N,p) - C(N,p-1))` for `p = 0..=N/2`; `-inf` where the trace vanishes.
pub fn ln_poisson_traces(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::EmptyDimension);
    }
    Ok((0..=n / 2)
        .map(|p| {
            let ratio = p as f64 / (n - p + 1) as f64;
            ln_binomial(n, p) + (-ratio).ln_1p()
        })
        .collect())
}

/// `<Tr rho_p>_Poisson = C(N,p) - C(N,p-1)`, length `N/2 + 1`.
pub fn poisson_traces(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::EmptyDimension);
    }
    if n > LOG_SPACE_N {
        return Ok(ln_poisson_traces(n)?.into_iter().map(f64::exp).collect());
    }
    Ok((0..=n / 2)
        .map(|p| binomial(n, p as isize) - binomial(n, p as isize - 1))
        .collect())
}

fn check_open_unit(name: &'static str, y: f64) -> Result<()> {
    if y > 0.0 && y < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value: y,
            domain: "(0, 1)",
        })
    }
}

/// `f(y) = -y ln y - (1-y) ln(1-y)`.
pub fn f_entropy(y: f64) -> Result<f64> {
    check_open_unit("y", y)?;
    Ok(-y * y.ln() - (1.0 - y) * (-y).ln_1p())
}

/// `f_eps(y) = f(y) - 2 eps y (1-y)`.
pub fn f_eps(y: f64, eps: f64) -> Result<f64> {
    Ok(f_entropy(y)? - 2.0 * eps * y * (1.0 - y))
}

/// `ln((1-y)/y)`, accurate near both `y -> 0` and `y -> 1/2`.
fn entropy_slope(y: f64) -> f64 {
    if y < 0.25 {
        (-y).ln_1p() - y.ln()
    } else {
        2.0 * (1.0 - 2.0 * y).atanh()
    }
}

pub fn f_eps_prime(y: f64, eps: f64) -> Result<f64> {
    check_open_unit("y", y)?;
    Ok(entropy_slope(y) - 2.0 * eps * (1.0 - 2.0 * y))
}

pub fn f_eps_second(y: f64, eps: f64) -> Result<f64> {
    check_open_unit("y", y)?;
    Ok(-1.0 / (y * (1.0 - y)) + 4.0 * eps)
}

/// Interior maximum of `f_eps` on `(0, 1/2)` by bisection to full precision.
pub fn solve_y_eps(eps: f64) -> Result<f64> {
    if !(eps > 1.0) {
        return Err(Error::Subcritical { eps });
    }
    let g = |y: f64| entropy_slope(y) - 2.0 * eps * (1.0 - 2.0 * y);
    let mut lo = 1e-300;
    if g(lo) <= 0.0 {
        return Err(Error::Domain {
            name: "eps",
            value: eps,
            domain: "root below 1e-300",
        });
    }
    // near eps = 1 the root sits at 1/2 - sqrt(3(eps-1)/4) to leading order
    let mut u = 0.25f64.min(0.5 * (0.75 * (eps - 1.0)).sqrt());
    while g(0.5 - u) >= 0.0 {
        u *= 0.5;
        if u < 1e-300 {
            return Err(Error::CriticalRegime);
        }
    }
    let mut hi = 0.5 - u;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossoverPoint {
    pub n: usize,
    pub eps: f64,
    pub regime: Regime,
    pub y_eps: Option<f64>,
}

impl CrossoverPoint {
    pub fn classify(n: usize, eps: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDimension);
        }
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::Domain {
                name: "eps",
                value: eps,
                domain: "[0, inf)",
            });
        }
        let (regime, y_eps) = if (eps - 1.0).abs() <= CRITICAL_WIDTH {
            (Regime::Critical, None)
        } else if eps < 1.0 {
            (Regime::Subcritical, None)
        } else {
            (Regime::Supercritical, Some(solve_y_eps(eps)?))
        };
        Ok(Self {
            n,
            eps,
            regime,
            y_eps,
        })
    }
}

/// Real curve stored as `exp(ln_scale) * values`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledCurve {
    pub xs: Vec<f64>,
    pub ln_scale: f64,
    pub values: Vec<f64>,
}

impl ScaledCurve {
    /// Unscaled values; `Domain` error if any overflows.
    pub fn unscaled(&self) -> Result<Vec<f64>> {
        let s = self.ln_scale.exp();
        let out: Vec<f64> = self.values.iter().map(|v| v * s).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain {
                name: "ln_scale",
                value: self.ln_scale,
                domain: "< ln(f64::MAX)",
            });
        }
        Ok(out)
    }

    /// Pointwise `self / other`, accounting for both scales.
    pub fn ratio(&self, other: &ScaledCurve) -> Vec<f64> {
        let k = (self.ln_scale - other.ln_scale).exp();
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| k * a / b)
            .collect()
    }

    /// Linearly interpolated sign changes.
    pub fn zeros(&self) -> Vec<f64> {
        zero_crossings(&self.xs, &self.values)
    }
}

pub fn zero_crossings(xs: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..values.len().min(xs.len()) {
        let (a, b) = (values[i - 1], values[i]);
        if a == 0.0 {
            out.push(xs[i - 1]);
        } else if a * b < 0.0 {
            out.push(xs[i - 1] + (xs[i] - xs[i - 1]) * a / (a - b));
        }
    }
    out
}

fn check_crossover_args(n: usize, eps: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyDimension);
    }
    if n > MAX_CROSSOVER_N {
        return Err(Error::OracleScale {
            n,
            max: MAX_CROSSOVER_N,
        });
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::Domain {
            name: "eps",
            value: eps,
            domain: "[0, inf)",
        });
    }
    Ok(())
}

/// `sum_p exp(-2 (eps/N) p(N+1-p)) <Tr rho_p>_Poisson * multiplet(x)` in
/// log space with max-shift scaling.
pub fn crossover_exact_scaled(n: usize, eps: f64, xs: &[f64]) -> Result<ScaledCurve> {
    check_crossover_args(n, eps)?;
    let kernel = eps / n as f64;
    let damping = |p: usize| -2.0 * kernel * (p * (n + 1 - p)) as f64;
    let (ln_scale, weights) = if n <= LOG_SPACE_N {
        let w: Vec<f64> = poisson_traces(n)?
            .into_iter()
            .enumerate()
            .map(|(p, t)| t * damping(p).exp())
            .collect();
        (0.0, w)
    } else {
        let ln_w: Vec<f64> = ln_poisson_traces(n)?
            .into_iter()
            .enumerate()
            .map(|(p, lt)| lt + damping(p))
            .collect();
        let m = ln_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (m, ln_w.iter().map(|l| (l - m).exp()).collect())
    };
    let values = xs
        .par_iter()
        .map(|&x| {
            let mut acc = NeumaierSum::new();
            for (p, w) in weights.iter().enumerate() {
                if *w != 0.0 {
                    acc.add(w * multiplet_factor(n, p, x)?);
                }
            }
            Ok(acc.value())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScaledCurve {
        xs: xs.to_vec(),
        ln_scale,
        values,
    })
}

fn real_curve(grid: GammaGrid, values: Vec<f64>, route: &str, eps: f64) -> CorrelatorCurve {
    CorrelatorCurve::new(
        grid,
        values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        route,
    )
    .with_scheme(format!("poisson-heat-kernel(eps={eps})"))
}

pub fn crossover_exact(n: usize, eps: f64, xs: &[f64]) -> Result<CorrelatorCurve> {
    let scaled = crossover_exact_scaled(n, eps, xs)?;
    Ok(real_curve(
        GammaGrid::from_x(n, xs),
        scaled.unscaled()?,
        "crossover-exact",
        eps,
    ))
}

/// Stirling asymptotic of the Poisson trace at `y = p/N`:
/// `(2 pi N)^{-1/2} (1-2y)/(1-y) / sqrt(y(1-y)) exp(N f(y))`, in log form.
pub fn ln_poisson_trace_stirling(n: usize, y: f64) -> Result<f64> {
    check_open_unit("y", y)?;
    if y >= 0.5 {
        return Err(Error::Domain {
            name: "y",
            value: y,
            domain: "(0, 1/2)",
        });
    }
    let nf = n as f64;
    Ok(
        -0.5 * (2.0 * std::f64::consts::PI * nf).ln() + ((1.0 - 2.0 * y) / (1.0 - y)).ln()
            - 0.5 * (y * (1.0 - y)).ln()
            + nf * f_entropy(y)?,
    )
}

/// Same leading form with the slowly varying factor replaced by
/// `f'(y) = ln((1-y)/y)`; agrees with [`ln_poisson_trace_stirling`] only as
/// `y -> 1/2`.
pub fn ln_poisson_trace_derivative_form(n: usize, y: f64) -> Result<f64> {
    let exact = ln_poisson_trace_stirling(n, y)?;
    Ok(exact - ((1.0 - 2.0 * y) / (1.0 - y)).ln() + entropy_slope(y).ln())
}

/// Large-N value on an x grid. Subcritical: `2^N e^{-N eps/2} (1-eps)^{-3/2}`.
/// Supercritical: Laplace evaluation at `y_eps` with slowly varying factor
/// `(1-2y)/(1-y) / sqrt(y(1-y))` and width `sqrt(2 pi / (N |f''_eps|))`.
pub fn asymptotic_scaled(n: usize, eps: f64, xs: &[f64]) -> Result<ScaledCurve> {
    check_crossover_args(n, eps)?;
    let point = CrossoverPoint::classify(n, eps)?;
    let nf = n as f64;
    match point.regime {
        Regime::Critical => Err(Error::CriticalRegime),
        Regime::Subcritical => Ok(ScaledCurve {
            xs: xs.to_vec(),
            ln_scale: nf * std::f64::consts::LN_2 - nf * eps / 2.0 - 1.5 * (1.0 - eps).ln(),
            values: vec![1.0; xs.len()],
        }),
        Regime::Supercritical => {
            let y = point.y_eps.expect("supercritical point carries y_eps");
            let tau = std::f64::consts::TAU;
            let ln_scale = (2.0 * nf * nf / (tau * nf).sqrt()).ln()
                + ((1.0 - 2.0 * y) / (1.0 - y)).ln()
                - 0.5 * (y * (1.0 - y)).ln()
                + nf * f_eps(y, eps)?
                + 0.5 * (tau / (nf * f_eps_second(y, eps)?.abs())).ln();
            let values = xs
                .iter()
                .map(|&x| {
                    if x == 0.0 {
                        0.5 - y
                    } else {
                        (x * (0.5 - y)).sin() / x
                    }
                })
                .collect();
            Ok(ScaledCurve {
                xs: xs.to_vec(),
                ln_scale,
                values,
            })
        }
    }
}

pub fn asymptotic_correlator(n: usize, eps: f64, xs: &[f64]) -> Result<CorrelatorCurve> {
    let scaled = asymptotic_scaled(n, eps, xs)?;
    Ok(real_curve(
        GammaGrid::from_x(n, xs),
        scaled.unscaled()?,
        "crossover-asymptotic",
        eps,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn traces_small() {
        assert_eq!(poisson_traces(4).unwrap(), vec![1.0, 3.0, 2.0]);
        assert_eq!(poisson_traces(1).unwrap(), vec![1.0]);
    }

    #[test]
    fn entropy_values() {
        assert!((f_entropy(0.5).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((f_eps(0.5, 1.0).unwrap() - (std::f64::consts::LN_2 - 0.5)).abs() < 1e-15);
        assert!((f_entropy(0.2).unwrap() - f_entropy(0.8).unwrap()).abs() < 1e-15);
        assert!(f_entropy(0.0).is_err());
        assert!(f_entropy(1.0).is_err());
    }

    #[test]
    fn classification() {
        assert_eq!(
            CrossoverPoint::classify(10, 0.3).unwrap().regime,
            Regime::Subcritical
        );
        assert_eq!(
            CrossoverPoint::classify(10, 1.0 + 1e-13).unwrap().regime,
            Regime::Critical
        );
        let p = CrossoverPoint::classify(10, 2.0).unwrap();
        assert_eq!(p.regime, Regime::Supercritical);
        assert!(p.y_eps.unwrap() > 0.0 && p.y_eps.unwrap() < 0.5);
        assert!(matches!(solve_y_eps(1.0), Err(Error::Subcritical { .. })));
        assert!(matches!(
            asymptotic_scaled(10, 1.0, &[1.0]),
            Err(Error::CriticalRegime)
        ));
    }
}
