//! C ABI over `factorlat`.
//!
//! Every function returns an [`FlStatus`]. Results go through out-pointers.
//! After a failure, [`fl_last_error_message`] describes it for the calling
//! thread. Strings handed out by the library are released with
//! [`fl_string_free`], class groups with [`fl_class_group_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use factorlat::blocks::{self, ClassSequence, Limits};
use factorlat::error::Error;
use factorlat::factorizer;
use factorlat::group::AbelianGroup;
use factorlat::quadratic::{Discriminant, FormClassGroup};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlStatus {
    Ok = 0,
    InvalidArgument = 1,
    InvalidDiscriminant = 2,
    ExplicitUnavailable = 3,
    TooLarge = 4,
    Io = 5,
    Internal = 6,
    Panic = 7,
}

/// Opaque class group handle.
pub struct FlClassGroup {
    inner: FormClassGroup,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> FlStatus {
    match e {
        Error::NotFundamental(_) | Error::Unsupported(_) => FlStatus::InvalidDiscriminant,
        Error::ExplicitUnavailable(_) => FlStatus::ExplicitUnavailable,
        Error::TooLarge(_) => FlStatus::TooLarge,
        Error::Io(_) => FlStatus::Io,
        Error::Internal(_) => FlStatus::Internal,
        _ => FlStatus::InvalidArgument,
    }
}

struct Fail(FlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: &str) -> Fail {
    Fail(FlStatus::InvalidArgument, msg.to_string())
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<FlStatus, Fail>) -> FlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => {
            if s == FlStatus::Ok {
                set_last_error("");
            }
            s
        }
        Ok(Err(Fail(s, msg))) => {
            set_last_error(&msg);
            s
        }
        Err(_) => {
            set_last_error("panic inside factorlat");
            FlStatus::Panic
        }
    }
}

fn limits(cap: u32) -> Limits {
    if cap == 0 {
        Limits::default()
    } else {
        Limits::default().with_enumeration_cap(cap as usize)
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(invalid(&format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(&format!("{name} is not UTF-8")))
}

unsafe fn group_arg<'a>(p: *const FlClassGroup) -> Result<&'a FormClassGroup, Fail> {
    p.as_ref().map(|g| &g.inner).ok_or_else(|| invalid("class group handle is null"))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(invalid("output pointer is null"));
    }
    out.write(v);
    Ok(())
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn fl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds the class group of `disc`. Accepts a fundamental discriminant or a
/// squarefree `d = 2, 3 mod 4`, meaning the field `Q(sqrt d)`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn fl_class_group_new(disc: i64, out: *mut *mut FlClassGroup) -> FlStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("output pointer is null"));
        }
        let cg = FormClassGroup::new(Discriminant::of_field(disc)?)?;
        out.write(Box::into_raw(Box::new(FlClassGroup { inner: cg })));
        Ok(FlStatus::Ok)
    })
}

/// # Safety
/// `cg` must be null or a handle from [`fl_class_group_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fl_class_group_free(cg: *mut FlClassGroup) {
    if !cg.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(cg))));
    }
}

/// # Safety
/// `cg` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fl_class_group_order(cg: *const FlClassGroup, out: *mut u64) -> FlStatus {
    guard(|| {
        let g = group_arg(cg)?;
        write_out(out, g.class_number())?;
        Ok(FlStatus::Ok)
    })
}

/// Writes up to `cap` invariant factors to `out` and the full count to `len`.
/// Returns `InvalidArgument` when `cap` is too small; `len` is still set.
///
/// # Safety
/// `cg` must be a live handle, `out` must hold `cap` values, `len` writable.
#[no_mangle]
pub unsafe extern "C" fn fl_class_group_invariants(
    cg: *const FlClassGroup,
    out: *mut u64,
    cap: usize,
    len: *mut usize,
) -> FlStatus {
    guard(|| {
        let factors = group_arg(cg)?.group().invariant_factors();
        write_out(len, factors.len())?;
        if factors.len() > cap {
            return Err(invalid(&format!("{} invariant factors do not fit in {cap}", factors.len())));
        }
        if !factors.is_empty() {
            if out.is_null() {
                return Err(invalid("output pointer is null"));
            }
            ptr::copy_nonoverlapping(factors.as_ptr(), out, factors.len());
        }
        Ok(FlStatus::Ok)
    })
}

/// Reduced form number `index` (principal form first) as `[a, b, c]`.
///
/// # Safety
/// `cg` must be a live handle and `out` must hold three values.
#[no_mangle]
pub unsafe extern "C" fn fl_class_group_form(cg: *const FlClassGroup, index: usize, out: *mut i64) -> FlStatus {
    guard(|| {
        let g = group_arg(cg)?;
        let f = g.reduced().get(index).ok_or_else(|| invalid(&format!("form index {index} out of range")))?;
        if out.is_null() {
            return Err(invalid("output pointer is null"));
        }
        ptr::copy_nonoverlapping([f.a, f.b, f.c].as_ptr(), out, 3);
        Ok(FlStatus::Ok)
    })
}

/// Number of irreducible factorizations of `n`. `cap` bounds the sequence
/// length; 0 selects the default.
///
/// # Safety
/// `cg` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fl_eta(cg: *const FlClassGroup, n: u64, cap: u32, out: *mut u64) -> FlStatus {
    guard(|| {
        let eta = factorizer::eta(n, group_arg(cg)?, &limits(cap))?;
        let eta = u64::try_from(eta).map_err(|_| Fail(FlStatus::TooLarge, format!("eta = {eta} exceeds 64 bits")))?;
        write_out(out, eta)?;
        Ok(FlStatus::Ok)
    })
}

/// Factorization report of `n` as JSON. If explicit elements were requested
/// but are unavailable, the symbolic report is still written and
/// `ExplicitUnavailable` is returned.
///
/// # Safety
/// `cg` must be a live handle and `out` writable; release `*out` with
/// [`fl_string_free`].
#[no_mangle]
pub unsafe extern "C" fn fl_factorize_json(
    cg: *const FlClassGroup,
    n: u64,
    want_explicit: bool,
    cap: u32,
    out: *mut *mut c_char,
) -> FlStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("output pointer is null"));
        }
        let g = group_arg(cg)?;
        let lim = limits(cap);
        let (report, status, msg) = match factorizer::enumerate(n, g, want_explicit, &lim) {
            Ok(r) => (r, FlStatus::Ok, String::new()),
            Err(e @ Error::ExplicitUnavailable(_)) => {
                (factorizer::enumerate(n, g, false, &lim)?, FlStatus::ExplicitUnavailable, e.to_string())
            }
            Err(e) => return Err(e.into()),
        };
        let json = serde_json::to_string(&report).map_err(|e| Fail(FlStatus::Internal, e.to_string()))?;
        let c = CString::new(json).map_err(|e| Fail(FlStatus::Internal, e.to_string()))?;
        out.write(c.into_raw());
        if status != FlStatus::Ok {
            set_last_error(&msg);
        }
        Ok(status)
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fl_string_free(s: *mut c_char) {
    if !s.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(CString::from_raw(s))));
    }
}

/// Number of minimal zero-sum partitions of a sequence over an abstract group.
/// `group` is `"d1,d2,..."`; `seq` is `"id:c1.c2:mult,..."`.
///
/// # Safety
/// `group` and `seq` must be NUL-terminated strings and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fl_partition_count(
    group: *const c_char,
    seq: *const c_char,
    cap: u32,
    out: *mut u64,
) -> FlStatus {
    guard(|| {
        let g: AbelianGroup = str_arg(group, "group")?.parse()?;
        let s = ClassSequence::from_spec(&g, str_arg(seq, "seq")?)?;
        let count = blocks::count_partitions(&s, &limits(cap))?;
        let count =
            u64::try_from(count).map_err(|_| Fail(FlStatus::TooLarge, format!("count {count} exceeds 64 bits")))?;
        write_out(out, count)?;
        Ok(FlStatus::Ok)
    })
}

/// Davenport constant of a nontrivial group given as `"d1,d2,..."`.
///
/// # Safety
/// `group` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fl_davenport(group: *const c_char, out: *mut u64) -> FlStatus {
    guard(|| {
        let g: AbelianGroup = str_arg(group, "group")?.parse()?;
        if g.order() == 1 {
            return Err(invalid("the trivial group has no nonempty zero-sum free sequences"));
        }
        write_out(out, blocks::davenport(&g, &Limits::default())?)?;
        Ok(FlStatus::Ok)
    })
}
