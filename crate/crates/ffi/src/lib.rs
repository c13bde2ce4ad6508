//! C ABI over the `cndp` solver.
//!
//! Instances and solutions are opaque heap handles released with their
//! `_free` functions. Fallible calls return a [`CndpStatus`]; on failure the
//! message is available from [`cndp_last_error`] on the same thread until
//! the next failing call. Strings returned through `char **` out-parameters
//! are owned by the caller and must be released with [`cndp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cndp::approx::{self, ApproxParams};
use cndp::gadgets::{compile, parse_dimacs};
use cndp::json::{instance_to_json, parse_instance, SolutionFile};
use cndp::{Algorithm, ClassTag, Error, FunctionClass, Instance};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CndpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidInstance = 4,
    NoFinitePath = 5,
    NotConverged = 6,
    InvalidArgument = 7,
    Unsatisfied = 8,
    NumericalFailure = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CndpAlgorithm {
    Relax = 0,
    SingleSink = 1,
    Bte = 2,
    Su = 3,
    Best2 = 4,
    Budgeted = 5,
}

impl From<CndpAlgorithm> for Algorithm {
    fn from(a: CndpAlgorithm) -> Self {
        match a {
            CndpAlgorithm::Relax => Algorithm::Relax,
            CndpAlgorithm::SingleSink => Algorithm::SingleSink,
            CndpAlgorithm::Bte => Algorithm::Bte,
            CndpAlgorithm::Su => Algorithm::Su,
            CndpAlgorithm::Best2 => Algorithm::Best2,
            CndpAlgorithm::Budgeted => Algorithm::Budgeted,
        }
    }
}

/// Guarantee constants of a latency class. `guarantee_budget` is infinite
/// for the general convex class.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CndpConstants {
    pub mu: f64,
    pub gamma: f64,
    pub guarantee_single: f64,
    pub guarantee_best2: f64,
    pub p_star: f64,
    pub guarantee_budget: f64,
}

/// Certificate summary of a solution.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CndpSummary {
    pub relaxation_cost: f64,
    pub routing_cost: f64,
    pub capacity_cost: f64,
    pub total: f64,
    pub ratio: f64,
    pub guarantee: f64,
    pub equilibrium_gap: f64,
}

pub struct CndpInstance {
    inner: Instance,
}

pub struct CndpSolution {
    instance: Instance,
    solution: approx::Solution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &Error) -> CndpStatus {
    match err {
        Error::Json(_) => CndpStatus::ParseError,
        Error::NoFinitePath { .. } => CndpStatus::NoFinitePath,
        Error::MaxItersExceeded { .. } => CndpStatus::NotConverged,
        Error::UnsatisfiedClause { .. } => CndpStatus::Unsatisfied,
        Error::NumericalFailure(_) | Error::InfiniteLatency => CndpStatus::NumericalFailure,
        Error::InvalidInstance(_)
        | Error::InvalidLatency(_)
        | Error::BadNode(_)
        | Error::WrongShape(_)
        | Error::InvalidFormula(_)
        | Error::NotStrictlyIncreasing
        | Error::NegativeInput { .. }
        | Error::FlowInfeasible(_) => CndpStatus::InvalidInstance,
        Error::InvalidArgument(msg) if msg.starts_with("malformed JSON") => CndpStatus::ParseError,
        _ => CndpStatus::InvalidArgument,
    }
}

/// Runs `body`, converting errors and panics into a status and a stored message.
fn guard(body: impl FnOnce() -> Result<(), (CndpStatus, String)>) -> CndpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CndpStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CndpStatus::Panic
        }
    }
}

fn lift(err: Error) -> (CndpStatus, String) {
    (status_of(&err), err.to_string())
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, (CndpStatus, String)> {
    if s.is_null() {
        return Err((CndpStatus::NullPointer, "null string argument".into()));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| (CndpStatus::InvalidUtf8, e.to_string()))
}

fn null_error(what: &str) -> (CndpStatus, String) {
    (CndpStatus::NullPointer, format!("null {what}"))
}

unsafe fn write_string(out: *mut *mut c_char, text: String) -> Result<(), (CndpStatus, String)> {
    let c = CString::new(text).map_err(|e| (CndpStatus::InvalidArgument, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

/// Message of the last failing call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cndp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cndp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses an instance from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cndp_instance_from_json(
    json: *const c_char,
    out: *mut *mut CndpInstance,
) -> CndpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_error("output pointer"));
        }
        let inner = parse_instance(read_str(json)?).map_err(lift)?;
        *out = Box::into_raw(Box::new(CndpInstance { inner }));
        Ok(())
    })
}

/// Compiles a DIMACS 3-CNF formula into an instance.
///
/// # Safety
/// `dimacs` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cndp_gadget_compile(
    dimacs: *const c_char,
    epsilon: f64,
    out: *mut *mut CndpInstance,
) -> CndpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_error("output pointer"));
        }
        let formula = parse_dimacs(read_str(dimacs)?).map_err(lift)?;
        let gadget = compile(&formula, epsilon).map_err(lift)?;
        *out = Box::into_raw(Box::new(CndpInstance { inner: gadget.instance }));
        Ok(())
    })
}

/// # Safety
/// `inst` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cndp_instance_free(inst: *mut CndpInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// # Safety
/// `inst` must be null or a live instance handle.
#[no_mangle]
pub unsafe extern "C" fn cndp_instance_num_edges(inst: *const CndpInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.inner.num_edges())
}

/// # Safety
/// `inst` must be null or a live instance handle.
#[no_mangle]
pub unsafe extern "C" fn cndp_instance_num_commodities(inst: *const CndpInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.inner.num_commodities())
}

/// Serializes an instance; release the result with [`cndp_string_free`].
///
/// # Safety
/// `inst` must be a live instance handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cndp_instance_to_json(
    inst: *const CndpInstance,
    out: *mut *mut c_char,
) -> CndpStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null_error("instance"))?;
        if out.is_null() {
            return Err(null_error("output pointer"));
        }
        write_string(out, instance_to_json(&inst.inner))
    })
}

/// Runs an algorithm. Budgeted runs need an instance with a budget.
///
/// # Safety
/// `inst` must be a live instance handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cndp_solve(
    inst: *const CndpInstance,
    algorithm: CndpAlgorithm,
    dispatch_only: bool,
    out: *mut *mut CndpSolution,
) -> CndpStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null_error("instance"))?;
        if out.is_null() {
            return Err(null_error("output pointer"));
        }
        let params = ApproxParams { dispatch_only, ..Default::default() };
        let solution = approx::solve(&inst.inner, algorithm.into(), &params).map_err(lift)?;
        *out = Box::into_raw(Box::new(CndpSolution { instance: inst.inner.clone(), solution }));
        Ok(())
    })
}

/// # Safety
/// `sol` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cndp_solution_free(sol: *mut CndpSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// # Safety
/// `sol` must be a live solution handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cndp_solution_summary(
    sol: *const CndpSolution,
    out: *mut CndpSummary,
) -> CndpStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null_error("solution"))?;
        let out = out.as_mut().ok_or_else(|| null_error("output pointer"))?;
        let c = &sol.solution.certificate;
        *out = CndpSummary {
            relaxation_cost: c.relaxation_cost,
            routing_cost: c.routing_cost,
            capacity_cost: c.capacity_cost,
            total: c.total,
            ratio: c.ratio,
            guarantee: c.guarantee,
            equilibrium_gap: c.equilibrium_gap,
        };
        Ok(())
    })
}

/// Copies per-edge capacities, in instance edge order, into `buf`, which
/// must hold at least `len` values with `len` equal to the edge count.
///
/// # Safety
/// `sol` must be a live solution handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn cndp_solution_capacities(
    sol: *const CndpSolution,
    buf: *mut f64,
    len: usize,
) -> CndpStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null_error("solution"))?;
        if buf.is_null() {
            return Err(null_error("buffer"));
        }
        let caps = sol.solution.caps.as_slice();
        if len != caps.len() {
            return Err((
                CndpStatus::InvalidArgument,
                format!("buffer holds {len} values, instance has {} edges", caps.len()),
            ));
        }
        ptr::copy_nonoverlapping(caps.as_ptr(), buf, len);
        Ok(())
    })
}

/// Serializes capacities, flows and certificate; release with [`cndp_string_free`].
///
/// # Safety
/// `sol` must be a live solution handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cndp_solution_to_json(
    sol: *const CndpSolution,
    out: *mut *mut c_char,
) -> CndpStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null_error("solution"))?;
        if out.is_null() {
            return Err(null_error("output pointer"));
        }
        let s = &sol.solution;
        let file = SolutionFile::new(&sol.instance, &s.flow, &s.caps)
            .with_certificate(s.certificate.clone());
        write_string(out, file.to_json())
    })
}

/// Constants of a class written as `poly:<degree>`, `concave` or `convex`.
///
/// # Safety
/// `class_tag` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cndp_constants(
    class_tag: *const c_char,
    out: *mut CndpConstants,
) -> CndpStatus {
    guard(|| {
        let tag: ClassTag = read_str(class_tag)?.parse().map_err(lift)?;
        let out = out.as_mut().ok_or_else(|| null_error("output pointer"))?;
        let class = FunctionClass::new(tag);
        *out = CndpConstants {
            mu: class.mu,
            gamma: class.gamma,
            guarantee_single: class.guarantee_single(),
            guarantee_best2: class.guarantee_best2(),
            p_star: class.p_star(),
            guarantee_budget: class.guarantee_budget().unwrap_or(f64::INFINITY),
        };
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::NoFinitePath { commodity: 0 }), CndpStatus::NoFinitePath);
        assert_eq!(status_of(&Error::BadNode("q".into())), CndpStatus::InvalidInstance);
        assert_eq!(status_of(&Error::InvalidClass("x".into())), CndpStatus::InvalidArgument);
        assert_eq!(
            status_of(&Error::InvalidArgument("malformed JSON: eof".into())),
            CndpStatus::ParseError
        );
    }

    #[test]
    fn panics_become_status() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, CndpStatus::Panic);
        let msg = unsafe { CStr::from_ptr(cndp_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "internal panic");
    }

    #[test]
    fn interior_nul_is_replaced() {
        set_error("a\0b");
        let msg = unsafe { CStr::from_ptr(cndp_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "a b");
    }
}
