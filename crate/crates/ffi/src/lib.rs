//! C ABI over `speccy`.
//!
//! Every entry point returns an [`SpStatus`]. On failure the message is kept per thread and
//! read with [`sp_last_error`]. Strings handed out by the library are released with
//! [`sp_string_free`]; lattice handles with [`sp_lattice_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use speccy::arith::Rational;
use speccy::cm::degree_formula;
use speccy::eisenstein::EisensteinPackage;
use speccy::lattice::QuadLattice;
use speccy::ledger::{verify_ledger, EmbeddingContext};
use speccy::qseries::PrincipalPart;
use speccy::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Precondition = 3,
    /// The ledger was computed but at least one identity failed.
    Mismatch = 4,
    Internal = 5,
}

/// Opaque handle to an even lattice.
pub struct SpLattice {
    inner: QuadLattice,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(s));
}

fn status_of(err: &Error) -> SpStatus {
    match err {
        Error::Precondition(_)
        | Error::IndefiniteEnumeration
        | Error::NoEmbedding(_)
        | Error::BoundExceeded(_)
        | Error::OutsideCertifiedRegion(_) => SpStatus::Precondition,
        Error::Overflow(_) | Error::Saturation(_) | Error::Precision(_) => SpStatus::Internal,
        _ => SpStatus::InvalidInput,
    }
}

struct Failure(SpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<SpStatus, Failure>) -> SpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(Failure(s, msg))) => {
            set_error(msg);
            s
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            SpStatus::Internal
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SpStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(SpStatus::InvalidInput, msg.into())
}

unsafe fn lattice_ref<'a>(l: *const SpLattice, what: &str) -> Result<&'a QuadLattice, Failure> {
    l.as_ref().map(|h| &h.inner).ok_or_else(|| null(what))
}

unsafe fn square(data: *const i64, n: usize, what: &str) -> Result<Vec<Vec<i64>>, Failure> {
    if data.is_null() {
        return Err(null(what));
    }
    let flat = std::slice::from_raw_parts(data, n * n);
    Ok(flat.chunks(n).map(|r| r.to_vec()).collect())
}

fn rational(num: i64, den: i64) -> Result<Rational, Failure> {
    if den == 0 {
        return Err(invalid("zero denominator"));
    }
    Ok(Rational::new(num, den))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = CString::new(s).map_err(|_| invalid("interior NUL in output"))?.into_raw();
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. Valid until the next call.
#[no_mangle]
pub extern "C" fn sp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a lattice from an `n × n` row-major Gram matrix.
///
/// # Safety
/// `gram` must point to `n*n` integers; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_lattice_new(gram: *const i64, n: usize, out: *mut *mut SpLattice) -> SpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = QuadLattice::new(square(gram, n, "gram")?)?;
        *out = Box::into_raw(Box::new(SpLattice { inner }));
        Ok(SpStatus::Ok)
    })
}

/// # Safety
/// `l` must come from [`sp_lattice_new`] and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn sp_lattice_free(l: *mut SpLattice) {
    if !l.is_null() {
        drop(Box::from_raw(l));
    }
}

/// `|det|`, the order of the discriminant group.
///
/// # Safety
/// `l` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_lattice_disc(l: *const SpLattice, out: *mut u64) -> SpStatus {
    guard(|| {
        let l = lattice_ref(l, "lattice")?;
        *out.as_mut().ok_or_else(|| null("out"))? = l.disc();
        Ok(SpStatus::Ok)
    })
}

/// Whether the discriminant form is anisotropic.
///
/// # Safety
/// `l` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_lattice_is_maximal(l: *const SpLattice, out: *mut bool) -> SpStatus {
    guard(|| {
        let l = lattice_ref(l, "lattice")?;
        *out.as_mut().ok_or_else(|| null("out"))? = l.is_maximal();
        Ok(SpStatus::Ok)
    })
}

/// Degree of the CM cycle `Z(m, μ)` on a negative definite binary lattice, as JSON
/// `{"m", "mu", "prime", "weighted_count", "degree"}`. `mu_index` follows the coset order of
/// the discriminant group.
///
/// # Safety
/// `l0` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_cm_degree(
    l0: *const SpLattice,
    m_num: i64,
    m_den: i64,
    mu_index: usize,
    out_json: *mut *mut c_char,
) -> SpStatus {
    guard(|| {
        let l0 = lattice_ref(l0, "l0")?;
        let pkg = EisensteinPackage::new(l0.clone())?;
        let g = pkg.disc_group();
        if mu_index >= g.order() {
            return Err(invalid(format!("mu index {mu_index} out of range 0..{}", g.order())));
        }
        let mu = g.element(mu_index);
        let deg = degree_formula(&pkg, rational(m_num, m_den)?, &mu)?;
        let body = serde_json::json!({
            "m": speccy::arith::format_rational(&deg.m),
            "mu": mu.to_string(),
            "prime": deg.prime,
            "weighted_count": speccy::arith::format_rational(&deg.weighted_count),
            "degree": deg.degree.to_string(),
        });
        write_string(out_json, body.to_string())?;
        Ok(SpStatus::Ok)
    })
}

/// Runs the degree ledger for `L` with sublattice columns `sub` (`sub_rank` vectors of length
/// `rank(L)`, concatenated) and the principal part
/// `c00 + Σ_i (c_num[i]/c_den[i])·q^{−m_num[i]/m_den[i]}·φ_{mu[i]}`.
///
/// Writes the report as JSON and returns [`SpStatus::Mismatch`] when an identity fails.
///
/// # Safety
/// `sub` must hold `sub_rank * rank(L)` integers; the term arrays must each hold `terms`
/// entries (they may be NULL when `terms == 0`); `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_verify_ledger(
    l: *const SpLattice,
    sub: *const i64,
    sub_rank: usize,
    m_num: *const i64,
    m_den: *const i64,
    mu: *const usize,
    c_num: *const i64,
    c_den: *const i64,
    terms: usize,
    c00: i64,
    out_json: *mut *mut c_char,
) -> SpStatus {
    guard(|| {
        let l = lattice_ref(l, "lattice")?;
        let n = l.rank();
        if sub.is_null() {
            return Err(null("sub"));
        }
        let sub: Vec<Vec<i64>> = std::slice::from_raw_parts(sub, sub_rank * n).chunks(n).map(|c| c.to_vec()).collect();
        let g = l.discriminant_group();
        let mut pp = PrincipalPart::new(&g);
        pp.set_constant(Rational::from_integer(c00));
        if terms > 0 {
            if [m_num, m_den, c_num, c_den].iter().any(|p| p.is_null()) || mu.is_null() {
                return Err(null("principal part arrays"));
            }
            for i in 0..terms {
                let idx = *mu.add(i);
                if idx >= g.order() {
                    return Err(invalid(format!("mu index {idx} out of range 0..{}", g.order())));
                }
                let m = rational(*m_num.add(i), *m_den.add(i))?;
                let c = rational(*c_num.add(i), *c_den.add(i))?;
                pp.add_term(m, &g.element(idx), c)?;
            }
        }
        let top = pp.terms().keys().map(|(m, _)| *m).max().unwrap_or_default();
        let ctx = EmbeddingContext::new(l.clone(), &sub, top)?;
        let report = verify_ledger(&ctx, &pp)?;
        let body = serde_json::to_string(&report).map_err(|e| Failure(SpStatus::Internal, e.to_string()))?;
        write_string(out_json, body)?;
        Ok(if report.all_match() { SpStatus::Ok } else { SpStatus::Mismatch })
    })
}

/// Runs the command-line front end with `argv[0..argc]` and captures its output.
///
/// `exit_code` receives what the executable would return; both output strings must be freed.
///
/// # Safety
/// `argv` must hold `argc` NUL-terminated strings; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_run_cli(
    argc: usize,
    argv: *const *const c_char,
    exit_code: *mut i32,
    out: *mut *mut c_char,
    err: *mut *mut c_char,
) -> SpStatus {
    guard(|| {
        if argv.is_null() {
            return Err(null("argv"));
        }
        let mut args = Vec::with_capacity(argc);
        for i in 0..argc {
            let a = *argv.add(i);
            if a.is_null() {
                return Err(null("argv entry"));
            }
            args.push(CStr::from_ptr(a).to_str().map_err(|_| invalid("argv is not UTF-8"))?.to_string());
        }
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = speccy::cli::run(args, &mut o, &mut e);
        *exit_code.as_mut().ok_or_else(|| null("exit_code"))? = code;
        write_string(out, String::from_utf8_lossy(&o).into_owned())?;
        write_string(err, String::from_utf8_lossy(&e).into_owned())?;
        Ok(SpStatus::Ok)
    })
}
