//! C ABI for the extremal rational function solver.
//!
//! Every fallible function returns an [`RcStatus`]; on failure the message is
//! available from [`rc_last_error_message`] on the same thread. Handles are
//! opaque and must be released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use num_complex::Complex64;
use ratcheb::format::json_document;
use ratcheb::geometry::{CompactSet, ExtPoint};
use ratcheb::potential::{build_green, GreenModel};
use ratcheb::solver::{solve, Problem, Solution, SolveOptions};
use ratcheb::verify::{verify_solution, VerifyOptions};
use ratcheb::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcStatus {
    Ok = 0,
    InvalidArgument = 1,
    Domain = 2,
    NonConvergence = 3,
    Numeric = 4,
    NullPointer = 5,
    Panic = 6,
    Integrity = 7,
}

/// Exchange-iteration tunables.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcSolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub eps_pole: f64,
}

/// Problem data: set, pole divisor, reference point.
pub struct RcProblem(Problem);

/// A solved problem.
pub struct RcSolution(Solution);

/// Green function of the complement of a set with a fixed pole.
pub struct RcGreen(Arc<GreenModel>);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RcStatus {
    match e {
        Error::Argument(_) => RcStatus::InvalidArgument,
        Error::Domain(_) => RcStatus::Domain,
        Error::NonConvergence { .. } => RcStatus::NonConvergence,
        Error::Numeric(_) => RcStatus::Numeric,
        Error::Integrity(_) => RcStatus::Integrity,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> RcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RcStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            RcStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal panic: {msg}"));
            RcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Lib(Error::Argument(format!("{what} is not valid UTF-8"))))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn rc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default tolerances.
#[no_mangle]
pub extern "C" fn rc_solve_options_default() -> RcSolveOptions {
    let d = SolveOptions::default();
    RcSolveOptions {
        tol: d.tol,
        max_iter: d.max_iter,
        eps_pole: d.eps_pole,
    }
}

/// Parses the set, divisor and reference point literals, e.g.
/// `"[-1,1]"`, `"inf:3,2:1"`, `"inf"`.
///
/// # Safety
/// String arguments must be NUL-terminated; `out_problem` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_problem_parse(
    set: *const c_char,
    poles: *const c_char,
    x_star: *const c_char,
    out_problem: *mut *mut RcProblem,
) -> RcStatus {
    guard(|| {
        let slot = out(out_problem, "out_problem")?;
        *slot = std::ptr::null_mut();
        let p = Problem::parse(
            str_arg(set, "set")?,
            str_arg(poles, "poles")?,
            str_arg(x_star, "x_star")?,
        )?;
        *slot = Box::into_raw(Box::new(RcProblem(p)));
        Ok(())
    })
}

/// Releases a problem; null is ignored.
///
/// # Safety
/// `problem` must come from [`rc_problem_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rc_problem_free(problem: *mut RcProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Number of poles counted with multiplicity.
///
/// # Safety
/// `problem` must be a live handle; `out_n` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_problem_degree(
    problem: *const RcProblem,
    out_n: *mut usize,
) -> RcStatus {
    guard(|| {
        *out(out_n, "out_n")? = handle(problem, "problem")?.0.n();
        Ok(())
    })
}

/// Solves `problem`; `options` may be null for the defaults.
///
/// # Safety
/// `problem` must be a live handle; `options` null or readable; `out_solution` writable.
#[no_mangle]
pub unsafe extern "C" fn rc_solve(
    problem: *const RcProblem,
    options: *const RcSolveOptions,
    out_solution: *mut *mut RcSolution,
) -> RcStatus {
    guard(|| {
        let slot = out(out_solution, "out_solution")?;
        *slot = std::ptr::null_mut();
        let p = handle(problem, "problem")?;
        let o = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| rc_solve_options_default());
        let opts = SolveOptions {
            tol: o.tol,
            max_iter: o.max_iter,
            eps_pole: o.eps_pole,
        };
        let sol = solve(&p.0, &opts)?;
        *slot = Box::into_raw(Box::new(RcSolution(sol)));
        Ok(())
    })
}

/// Releases a solution; null is ignored.
///
/// # Safety
/// `solution` must come from [`rc_solve`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rc_solution_free(solution: *mut RcSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// The extremal value `m`.
///
/// # Safety
/// `solution` must be a live handle; `out_m` writable.
#[no_mangle]
pub unsafe extern "C" fn rc_solution_m(solution: *const RcSolution, out_m: *mut f64) -> RcStatus {
    guard(|| {
        *out(out_m, "out_m")? = handle(solution, "solution")?.0.m;
        Ok(())
    })
}

/// Final equioscillation defect and iteration count.
///
/// # Safety
/// `solution` must be a live handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn rc_solution_diagnostics(
    solution: *const RcSolution,
    out_defect: *mut f64,
    out_iterations: *mut usize,
) -> RcStatus {
    guard(|| {
        let d = &handle(solution, "solution")?.0.diagnostics;
        *out(out_defect, "out_defect")? = d.defect;
        *out(out_iterations, "out_iterations")? = d.iterations;
        Ok(())
    })
}

/// `F(x)` at a real point; infinite at poles.
///
/// # Safety
/// `solution` must be a live handle; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn rc_solution_eval(
    solution: *const RcSolution,
    x: f64,
    out_value: *mut f64,
) -> RcStatus {
    guard(|| {
        *out(out_value, "out_value")? = handle(solution, "solution")?.0.f.eval_real(x);
        Ok(())
    })
}

/// `F(z)` at a complex point.
///
/// # Safety
/// `solution` must be a live handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn rc_solution_eval_complex(
    solution: *const RcSolution,
    re: f64,
    im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> RcStatus {
    guard(|| {
        let w = handle(solution, "solution")?
            .0
            .f
            .eval(Complex64::new(re, im));
        *out(out_re, "out_re")? = w.re;
        *out(out_im, "out_im")? = w.im;
        Ok(())
    })
}

/// Number of points in the alternation set.
///
/// # Safety
/// `solution` must be a live handle; `out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn rc_solution_alternation_len(
    solution: *const RcSolution,
    out_len: *mut usize,
) -> RcStatus {
    guard(|| {
        *out(out_len, "out_len")? = handle(solution, "solution")?.0.alternation.len();
        Ok(())
    })
}

/// Alternation point `index`: its abscissa (`INFINITY` for the point at
/// infinity) and the sign `±1` of `F` there.
///
/// # Safety
/// `solution` must be a live handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn rc_solution_alternation_point(
    solution: *const RcSolution,
    index: usize,
    out_x: *mut f64,
    out_sign: *mut i32,
) -> RcStatus {
    guard(|| {
        let s = handle(solution, "solution")?;
        let pt = s.0.alternation.get(index).ok_or_else(|| {
            Error::Argument(format!(
                "index {index} out of range for {} points",
                s.0.alternation.len()
            ))
        })?;
        *out(out_x, "out_x")? = match pt.x {
            ExtPoint::Finite(x) => x,
            ExtPoint::Infinity => f64::INFINITY,
        };
        *out(out_sign, "out_sign")? = i32::from(pt.sign);
        Ok(())
    })
}

/// Runs every structural check; `out_pass` receives 1 if all pass, else 0.
///
/// # Safety
/// `solution` must be a live handle; `out_pass` writable.
#[no_mangle]
pub unsafe extern "C" fn rc_solution_verify(
    solution: *const RcSolution,
    samples: usize,
    seed: u64,
    out_pass: *mut i32,
) -> RcStatus {
    guard(|| {
        let s = handle(solution, "solution")?;
        let opts = VerifyOptions {
            samples,
            seed,
            ..VerifyOptions::default()
        };
        *out(out_pass, "out_pass")? = i32::from(verify_solution(&s.0, &opts).pass);
        Ok(())
    })
}

/// The solution as the JSON document written by the CLI; release with
/// [`rc_string_free`].
///
/// # Safety
/// `solution` must be a live handle; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn rc_solution_to_json(
    solution: *const RcSolution,
    out_json: *mut *mut c_char,
) -> RcStatus {
    guard(|| {
        let slot = out(out_json, "out_json")?;
        *slot = std::ptr::null_mut();
        let doc = json_document("solve", &handle(solution, "solution")?.0)?;
        let c = CString::new(doc).map_err(|e| Error::Integrity(e.to_string()))?;
        *slot = c.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Green function of the complement of `set` with pole `pole` (`"inf"` or a decimal).
///
/// # Safety
/// String arguments must be NUL-terminated; `out_green` writable.
#[no_mangle]
pub unsafe extern "C" fn rc_green_new(
    set: *const c_char,
    pole: *const c_char,
    out_green: *mut *mut RcGreen,
) -> RcStatus {
    guard(|| {
        let slot = out(out_green, "out_green")?;
        *slot = std::ptr::null_mut();
        let set = CompactSet::parse(str_arg(set, "set")?)?;
        let pole = ExtPoint::parse(str_arg(pole, "pole")?)?;
        *slot = Box::into_raw(Box::new(RcGreen(build_green(&set, pole)?)));
        Ok(())
    })
}

/// Releases a Green function; null is ignored.
///
/// # Safety
/// `green` must come from [`rc_green_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rc_green_free(green: *mut RcGreen) {
    if !green.is_null() {
        drop(Box::from_raw(green));
    }
}

/// `G(z)` at a complex point.
///
/// # Safety
/// `green` must be a live handle; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn rc_green_eval(
    green: *const RcGreen,
    re: f64,
    im: f64,
    out_value: *mut f64,
) -> RcStatus {
    guard(|| {
        *out(out_value, "out_value")? = handle(green, "green")?.0.eval(Complex64::new(re, im));
        Ok(())
    })
}
