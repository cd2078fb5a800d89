//! C ABI over `equator_forge`.
//!
//! Objects cross the boundary as opaque handles (`EfTensor`, `EfMetric`) that
//! the caller releases with the matching `*_free` function. Every fallible
//! call returns an [`EfStatus`]; on failure the message is available from
//! [`ef_last_error`] on the same thread until the next failing call.
//! Strings returned by the library are released with [`ef_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use equator_forge::correspondence::{metric_from_curv, ConstructionOptions, CurvatureMetric, SymmetricField};
use equator_forge::io::{parse_tensor, tensor_to_json};
use equator_forge::sphere::SpherePoint;
use equator_forge::tensor::{self, CurvatureTensor, GroupElement};
use equator_forge::verification::{verify_tensor, SuiteConfig};
use equator_forge::Error;
use nalgebra::{DMatrix, DVector};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Dimension = 3,
    Domain = 4,
    Positivity = 5,
    Symmetry = 6,
    Sampling = 7,
    Singular = 8,
    Unsupported = 9,
    Format = 10,
    Io = 11,
    Panic = 12,
}

impl From<&Error> for EfStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Dimension(_) => EfStatus::Dimension,
            Error::Domain(_) => EfStatus::Domain,
            Error::Positivity(_) => EfStatus::Positivity,
            Error::Symmetry { .. } => EfStatus::Symmetry,
            Error::Sampling(_) => EfStatus::Sampling,
            Error::Singular(_) => EfStatus::Singular,
            Error::Unsupported(_) => EfStatus::Unsupported,
            Error::Format(_) | Error::Json(_) => EfStatus::Format,
            Error::Io(_) => EfStatus::Io,
        }
    }
}

/// Opaque curvature tensor.
pub struct EfTensor(CurvatureTensor);

/// Opaque metric built from a curvature tensor.
pub struct EfMetric(CurvatureMetric);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<Vec<u8>>) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("error message contained NUL").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Null(&'static str),
    Utf8,
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

/// Runs `f`, translating errors and panics into a status plus the thread-local message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EfStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            EfStatus::NullPointer
        }
        Ok(Err(Failure::Utf8)) => {
            set_error("input is not valid UTF-8");
            EfStatus::InvalidUtf8
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            EfStatus::from(&e)
        }
        Err(_) => {
            set_error("internal panic");
            EfStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<T>(p: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    p.write(value);
    Ok(())
}

fn boxed_tensor(r: CurvatureTensor) -> *mut EfTensor {
    Box::into_raw(Box::new(EfTensor(r)))
}

fn owned_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::Core(Error::Format("output contained NUL".into())))
}

/// Message of the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn ef_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ef_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ef_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Constant-curvature tensor on S^n.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ef_tensor_round(n: usize, out_tensor: *mut *mut EfTensor) -> EfStatus {
    guard(|| out(out_tensor, boxed_tensor(tensor::round(n)?), "out"))
}

/// Fubini–Study tensor on S^(2m+1).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ef_tensor_fubini_study(m: usize, out_tensor: *mut *mut EfTensor) -> EfStatus {
    guard(|| out(out_tensor, boxed_tensor(tensor::fubini_study(m)?), "out"))
}

/// Seeded random positive tensor at distance `eps` from the round one.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ef_tensor_random(n: usize, eps: f64, seed: u64, out_tensor: *mut *mut EfTensor) -> EfStatus {
    guard(|| {
        out(
            out_tensor,
            boxed_tensor(tensor::random_positive(n, eps, seed)?.tensor),
            "out",
        )
    })
}

/// Tensor from `(n+1)^4` row-major coefficients.
///
/// # Safety
/// `coeffs` must point to `len` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ef_tensor_from_coeffs(
    n: usize,
    coeffs: *const f64,
    len: usize,
    out_tensor: *mut *mut EfTensor,
) -> EfStatus {
    guard(|| {
        let c = slice(coeffs, len, "coeffs")?;
        out(
            out_tensor,
            boxed_tensor(CurvatureTensor::from_coeffs(n, c.to_vec())?),
            "out",
        )
    })
}

/// Parses a `curv-dense-v1` JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ef_tensor_from_json(json: *const c_char, out_tensor: *mut *mut EfTensor) -> EfStatus {
    guard(|| {
        if json.is_null() {
            return Err(Failure::Null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|_| Failure::Utf8)?;
        out(out_tensor, boxed_tensor(parse_tensor(text)?.tensor), "out")
    })
}

/// Serialises to `curv-dense-v1` JSON. Free the result with [`ef_string_free`].
///
/// # Safety
/// `t` must be a live handle and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ef_tensor_to_json(t: *const EfTensor, out_json: *mut *mut c_char) -> EfStatus {
    guard(|| {
        let t = deref(t, "tensor")?;
        out(out_json, owned_string(tensor_to_json(&t.0, None)?)?, "out")
    })
}

/// Sphere dimension n, or 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ef_tensor_dim(t: *const EfTensor) -> usize {
    t.as_ref().map_or(0, |t| t.0.n())
}

/// Copies the `(n+1)^4` coefficients into `buf`, which must hold at least that many.
///
/// # Safety
/// `t` must be a live handle and `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ef_tensor_coeffs(t: *const EfTensor, buf: *mut f64, len: usize) -> EfStatus {
    guard(|| {
        let c = deref(t, "tensor")?.0.coeffs();
        if len < c.len() {
            return Err(Error::Dimension(format!("buffer holds {len}, need {}", c.len())).into());
        }
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        ptr::copy_nonoverlapping(c.as_ptr(), buf, c.len());
        Ok(())
    })
}

/// Sectional curvature of the plane spanned by `x` and `y` (each of length n+1).
///
/// # Safety
/// `x` and `y` must point to `len` doubles, `t` must be live, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ef_tensor_sectional(
    t: *const EfTensor,
    x: *const f64,
    y: *const f64,
    len: usize,
    out_value: *mut f64,
) -> EfStatus {
    guard(|| {
        let t = deref(t, "tensor")?;
        let v = tensor::sectional(&t.0, slice(x, len, "x")?, slice(y, len, "y")?)?;
        out(out_value, v, "out")
    })
}

/// Right action by the invertible `(n+1) x (n+1)` row-major matrix.
///
/// # Safety
/// `matrix` must point to `len` doubles, `t` must be live, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ef_tensor_act(
    t: *const EfTensor,
    matrix: *const f64,
    len: usize,
    out_tensor: *mut *mut EfTensor,
) -> EfStatus {
    guard(|| {
        let t = deref(t, "tensor")?;
        let m = t.0.n() + 1;
        if len != m * m {
            return Err(Error::Dimension(format!("matrix needs {} entries, found {len}", m * m)).into());
        }
        let g = GroupElement::new(DMatrix::from_row_slice(m, m, slice(matrix, len, "matrix")?))?;
        out(out_tensor, boxed_tensor(tensor::act(&t.0, &g)?), "out")
    })
}

/// Runs the verification suite with default settings and the given seed.
/// Writes the report as JSON and whether every check passed.
///
/// # Safety
/// `t` must be live; `out_json` and `out_pass` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ef_tensor_verify(
    t: *const EfTensor,
    seed: u64,
    out_json: *mut *mut c_char,
    out_pass: *mut bool,
) -> EfStatus {
    guard(|| {
        let t = deref(t, "tensor")?;
        if out_json.is_null() || out_pass.is_null() {
            return Err(Failure::Null("out"));
        }
        let cfg = SuiteConfig {
            seed,
            ..SuiteConfig::default()
        };
        let report = verify_tensor(&t.0, &cfg)?;
        let json = serde_json::to_string(&report).map_err(Error::from)?;
        out(out_json, owned_string(json)?, "out_json")?;
        out(out_pass, report.passed(), "out_pass")
    })
}

/// Releases a tensor handle. Null is ignored.
///
/// # Safety
/// `t` must be null or a live handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ef_tensor_free(t: *mut EfTensor) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Metric generated by a positive tensor.
///
/// # Safety
/// `t` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ef_metric_from_tensor(t: *const EfTensor, out_metric: *mut *mut EfMetric) -> EfStatus {
    guard(|| {
        let t = deref(t, "tensor")?;
        let g = metric_from_curv(&t.0, ConstructionOptions::default())?;
        out(out_metric, Box::into_raw(Box::new(EfMetric(g))), "out")
    })
}

/// `g_p(v, w)` at the unit point `p` for ambient tangent vectors `v`, `w`.
/// All three arrays have length n+1.
///
/// # Safety
/// The arrays must point to `len` doubles, `g` must be live, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ef_metric_eval(
    g: *const EfMetric,
    p: *const f64,
    v: *const f64,
    w: *const f64,
    len: usize,
    out_value: *mut f64,
) -> EfStatus {
    guard(|| {
        let g = deref(g, "metric")?;
        if len != g.0.n() + 1 {
            return Err(Error::Dimension(format!("expected vectors of length {}, found {len}", g.0.n() + 1)).into());
        }
        let point = SpherePoint::from_slice(slice(p, len, "p")?)?;
        let v = DVector::from_column_slice(slice(v, len, "v")?);
        let w = DVector::from_column_slice(slice(w, len, "w")?);
        out(out_value, g.0.eval(&point, &v, &w)?, "out")
    })
}

/// Ambient `(n+1) x (n+1)` matrix of the metric at `p`, row-major into `buf`.
///
/// # Safety
/// `p` must point to `len` doubles, `buf` to `buf_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ef_metric_matrix(
    g: *const EfMetric,
    p: *const f64,
    len: usize,
    buf: *mut f64,
    buf_len: usize,
) -> EfStatus {
    guard(|| {
        let g = deref(g, "metric")?;
        let point = SpherePoint::from_slice(slice(p, len, "p")?)?;
        if point.n() != g.0.n() {
            return Err(Error::Dimension(format!("point lives on S^{}, metric on S^{}", point.n(), g.0.n())).into());
        }
        let a = g.0.ambient(&point)?;
        let m = a.nrows();
        if buf_len < m * m {
            return Err(Error::Dimension(format!("buffer holds {buf_len}, need {}", m * m)).into());
        }
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        for i in 0..m {
            for j in 0..m {
                *buf.add(i * m + j) = a[(i, j)];
            }
        }
        Ok(())
    })
}

/// Releases a metric handle. Null is ignored.
///
/// # Safety
/// `g` must be null or a live handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ef_metric_free(g: *mut EfMetric) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}
