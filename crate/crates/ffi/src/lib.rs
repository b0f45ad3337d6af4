//! C ABI over `omega-core`.
//!
//! Every entry point returns an [`OmegaStatus`]. On failure a message is kept
//! per thread and can be fetched with [`omega_last_error_message`]. Matrices
//! cross the boundary as opaque [`OmegaUnitary`] handles; complex arrays are
//! passed as separate real and imaginary buffers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use num_complex::Complex64;
use omega_core::averaging::isotropic_correlator;
use omega_core::correlator::{omega_character, omega_secular, CorrelatorCurve, GammaGrid};
use omega_core::crossover::{crossover_exact_scaled, solve_y_eps};
use omega_core::fock::omega_fock;
use omega_core::rng::RngStream;
use omega_core::unitary::{
    eigenphases, haar_sample, kicked_map, poisson_sample, secular_coefficients, CMatrix,
    UnitaryMatrix,
};
use omega_core::weyl::weyl_sum;
use omega_core::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotUnitary = 3,
    Domain = 4,
    Numerical = 5,
    Scale = 6,
    Io = 7,
    Panic = 8,
    BufferTooSmall = 9,
}

/// Correlator evaluation route, passed as `uint32_t`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaRoute {
    Secular = 0,
    Character = 1,
    Fock = 2,
    Weyl = 3,
}

impl OmegaRoute {
    fn from_raw(raw: u32) -> Option<Self> {
        Some(match raw {
            0 => Self::Secular,
            1 => Self::Character,
            2 => Self::Fock,
            3 => Self::Weyl,
            _ => return None,
        })
    }
}

/// Opaque unitary matrix.
pub struct OmegaUnitary {
    inner: UnitaryMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(OmegaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::EmptyDimension
            | Error::NotSquare { .. }
            | Error::DimensionMismatch { .. }
            | Error::Index(_)
            | Error::Parse(_)
            | Error::Config(_) => OmegaStatus::InvalidArgument,
            Error::NotUnitary { .. } | Error::NotHermitian { .. } => OmegaStatus::NotUnitary,
            Error::EigenNonConvergence { .. }
            | Error::LogBranch
            | Error::WeylPole { .. }
            | Error::SaddleDegeneracy { .. }
            | Error::AveragedSaddleDegenerate
            | Error::NoSpectralGap { .. }
            | Error::SingularPropagator
            | Error::GridPole { .. }
            | Error::Degenerate(_) => OmegaStatus::Numerical,
            Error::OracleScale { .. } | Error::EnumerationCap { .. } => OmegaStatus::Scale,
            Error::Subcritical { .. } | Error::CriticalRegime | Error::Domain { .. } => {
                OmegaStatus::Domain
            }
            Error::Io(_) => OmegaStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: OmegaStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OmegaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            OmegaStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            OmegaStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(ptr: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(fail(OmegaStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn output<'a, T>(ptr: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(fail(OmegaStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn handle<'a>(u: *const OmegaUnitary) -> Result<&'a UnitaryMatrix, Failure> {
    u.as_ref()
        .map(|h| &h.inner)
        .ok_or_else(|| fail(OmegaStatus::NullPointer, "unitary handle is null"))
}

unsafe fn store(out: *mut *mut OmegaUnitary, u: UnitaryMatrix) -> Result<(), Failure> {
    *out = Box::into_raw(Box::new(OmegaUnitary { inner: u }));
    Ok(())
}

fn check_out(out: *mut *mut OmegaUnitary) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(OmegaStatus::NullPointer, "out is null"));
    }
    Ok(())
}

fn write_complex(values: &[Complex64], re: &mut [f64], im: &mut [f64]) {
    for ((z, r), i) in values.iter().zip(re.iter_mut()).zip(im.iter_mut()) {
        *r = z.re;
        *i = z.im;
    }
}

fn route_curve(
    route: u32,
    u: &UnitaryMatrix,
    grid: &GammaGrid,
) -> Result<CorrelatorCurve, Failure> {
    let route = OmegaRoute::from_raw(route).ok_or_else(|| {
        fail(
            OmegaStatus::InvalidArgument,
            format!("unknown route {route}"),
        )
    })?;
    Ok(match route {
        OmegaRoute::Secular => omega_secular(u, grid)?,
        OmegaRoute::Character => omega_character(u, grid)?,
        OmegaRoute::Fock => omega_fock(u, grid)?,
        OmegaRoute::Weyl => weyl_sum(u, grid)?,
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn omega_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf`, truncating
/// to `len - 1` bytes plus a NUL. Returns the untruncated length including
/// the NUL, so a call with `len == 0` sizes the buffer.
///
/// # Safety
/// `buf` must point to `len` writable bytes or be null when `len == 0`.
#[no_mangle]
pub unsafe extern "C" fn omega_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Builds a unitary from row-major parts. `tolerance` bounds the residual
/// `max|U^dag U - I|`.
///
/// # Safety
/// `re` and `im` must hold `n * n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn omega_unitary_from_parts(
    n: usize,
    re: *const f64,
    im: *const f64,
    tolerance: f64,
    out: *mut *mut OmegaUnitary,
) -> OmegaStatus {
    guard(|| {
        check_out(out)?;
        if n == 0 {
            return Err(Error::EmptyDimension.into());
        }
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(fail(
                OmegaStatus::InvalidArgument,
                "tolerance must be positive and finite",
            ));
        }
        let len = n
            .checked_mul(n)
            .ok_or_else(|| fail(OmegaStatus::InvalidArgument, "n * n overflows"))?;
        let re = input(re, len, "re")?;
        let im = input(im, len, "im")?;
        let m = CMatrix::from_fn(n, n, |i, j| Complex64::new(re[i * n + j], im[i * n + j]));
        store(out, UnitaryMatrix::with_tolerance(m, tolerance)?)
    })
}

/// Haar-random unitary from the `(seed, stream)` ChaCha stream.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn omega_unitary_haar(
    n: usize,
    seed: u64,
    stream: u64,
    out: *mut *mut OmegaUnitary,
) -> OmegaStatus {
    guard(|| {
        check_out(out)?;
        store(out, haar_sample(n, RngStream::new(seed, stream))?)
    })
}

/// Random diagonal unitary with independent uniform phases.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn omega_unitary_poisson(
    n: usize,
    seed: u64,
    stream: u64,
    out: *mut *mut OmegaUnitary,
) -> OmegaStatus {
    guard(|| {
        check_out(out)?;
        store(out, poisson_sample(n, RngStream::new(seed, stream))?)
    })
}

/// Kicked map on `n` sites with the given kick strengths.
///
/// # Safety
/// `strengths` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn omega_unitary_kicked(
    n: usize,
    strengths: *const f64,
    len: usize,
    out: *mut *mut OmegaUnitary,
) -> OmegaStatus {
    guard(|| {
        check_out(out)?;
        let k = input(strengths, len, "strengths")?;
        store(out, kicked_map(n, k)?)
    })
}

/// Reads a matrix file in the CLI's JSON format.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn omega_unitary_read_json(
    path: *const c_char,
    tolerance: f64,
    out: *mut *mut OmegaUnitary,
) -> OmegaStatus {
    guard(|| {
        check_out(out)?;
        if path.is_null() {
            return Err(fail(OmegaStatus::NullPointer, "path is null"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(OmegaStatus::InvalidArgument, "path is not UTF-8"))?;
        store(out, UnitaryMatrix::read_json(Path::new(path), tolerance)?)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `u` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn omega_unitary_free(u: *mut OmegaUnitary) {
    if !u.is_null() {
        drop(Box::from_raw(u));
    }
}

/// # Safety
/// `u` must be a live handle; `out_n` must be writable.
#[no_mangle]
pub unsafe extern "C" fn omega_unitary_dim(
    u: *const OmegaUnitary,
    out_n: *mut usize,
) -> OmegaStatus {
    guard(|| {
        let u = handle(u)?;
        *output(out_n, 1, "out_n")?.first_mut().unwrap() = u.n();
        Ok(())
    })
}

/// Eigenphases in `[0, 2pi)`, ascending. `len` must be at least `n`.
///
/// # Safety
/// `u` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn omega_unitary_eigenphases(
    u: *const OmegaUnitary,
    out: *mut f64,
    len: usize,
) -> OmegaStatus {
    guard(|| {
        let u = handle(u)?;
        if len < u.n() {
            return Err(fail(
                OmegaStatus::BufferTooSmall,
                format!("need {} entries", u.n()),
            ));
        }
        let spec = eigenphases(u)?;
        output(out, len, "out")?[..u.n()].copy_from_slice(&spec.thetas);
        Ok(())
    })
}

/// Coefficients `a_0..a_n` of `Det(1 - sU)`. `len` must be at least `n + 1`.
///
/// # Safety
/// `u` must be a live handle; `re` and `im` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn omega_unitary_secular(
    u: *const OmegaUnitary,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> OmegaStatus {
    guard(|| {
        let u = handle(u)?;
        if len < u.n() + 1 {
            return Err(fail(
                OmegaStatus::BufferTooSmall,
                format!("need {} entries", u.n() + 1),
            ));
        }
        let a = secular_coefficients(u).a;
        write_complex(&a, output(re, len, "re")?, output(im, len, "im")?);
        Ok(())
    })
}

/// Correlator on the unit circle at `gamma = exp(i x / N)` for each of the
/// `len` values of `xs`. `route` is an [`OmegaRoute`].
///
/// # Safety
/// `u` must be a live handle; `xs`, `re`, `im` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn omega_correlator_x(
    u: *const OmegaUnitary,
    route: u32,
    xs: *const f64,
    len: usize,
    re: *mut f64,
    im: *mut f64,
) -> OmegaStatus {
    guard(|| {
        let u = handle(u)?;
        let grid = GammaGrid::from_x(u.n(), input(xs, len, "xs")?);
        let curve = route_curve(route, u, &grid)?;
        write_complex(
            &curve.values,
            output(re, len, "re")?,
            output(im, len, "im")?,
        );
        Ok(())
    })
}

/// Correlator at arbitrary complex `gamma`, principal branch for `gamma^(N/2)`.
///
/// # Safety
/// `u` must be a live handle; all four arrays must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn omega_correlator_gamma(
    u: *const OmegaUnitary,
    route: u32,
    gamma_re: *const f64,
    gamma_im: *const f64,
    len: usize,
    re: *mut f64,
    im: *mut f64,
) -> OmegaStatus {
    guard(|| {
        let u = handle(u)?;
        let gr = input(gamma_re, len, "gamma_re")?;
        let gi = input(gamma_im, len, "gamma_im")?;
        let gammas: Vec<Complex64> = gr
            .iter()
            .zip(gi)
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect();
        let grid = GammaGrid::from_gamma(u.n(), &gammas);
        let curve = route_curve(route, u, &grid)?;
        write_complex(
            &curve.values,
            output(re, len, "re")?,
            output(im, len, "im")?,
        );
        Ok(())
    })
}

/// Correlator averaged under the isotropic heat kernel at `kernel_time`.
///
/// # Safety
/// `u` must be a live handle; `xs`, `re`, `im` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn omega_isotropic_correlator(
    u: *const OmegaUnitary,
    kernel_time: f64,
    xs: *const f64,
    len: usize,
    re: *mut f64,
    im: *mut f64,
) -> OmegaStatus {
    guard(|| {
        let u = handle(u)?;
        let grid = GammaGrid::from_x(u.n(), input(xs, len, "xs")?);
        let curve = isotropic_correlator(u, kernel_time, &grid)?;
        write_complex(
            &curve.values,
            output(re, len, "re")?,
            output(im, len, "im")?,
        );
        Ok(())
    })
}

/// Exact crossover curve as `values[k] * exp(ln_scale)`.
///
/// # Safety
/// `xs` and `values` must hold `len` doubles; `ln_scale` must be writable.
#[no_mangle]
pub unsafe extern "C" fn omega_crossover_exact_scaled(
    n: usize,
    eps: f64,
    xs: *const f64,
    len: usize,
    values: *mut f64,
    ln_scale: *mut f64,
) -> OmegaStatus {
    guard(|| {
        let xs = input(xs, len, "xs")?;
        let ln_scale = output(ln_scale, 1, "ln_scale")?;
        let values = output(values, len, "values")?;
        let curve = crossover_exact_scaled(n, eps, xs)?;
        values.copy_from_slice(&curve.values);
        ln_scale[0] = curve.ln_scale;
        Ok(())
    })
}

/// Root `y_eps` of the supercritical saddle equation (`eps > 1`).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn omega_solve_y_eps(eps: f64, out: *mut f64) -> OmegaStatus {
    guard(|| {
        let out = output(out, 1, "out")?;
        out[0] = solve_y_eps(eps)?;
        Ok(())
    })
}
