//! C interface to the plasmabound solver.
//!
//! Every function returns a [`PbStatus`]; on failure the message is kept per thread
//! and can be read with [`pb_last_error`]. Handles are opaque and must be released
//! with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use plasmabound::domain::{Domain, DomainSpec};
use plasmabound::elliptic::GreenOperator;
use plasmabound::estimates::{
    check_energy_theorem, check_linf_bounds, check_thresholds, Primitives, Status,
};
use plasmabound::radial::{solve_disk_radial, RadialOptions};
use plasmabound::sobolev::{lambda_star, SobolevOptions};
use plasmabound::solver::{solve_plm, PlasmaSolution, SolutionHeader, SolveOptions};
use plasmabound::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidDomain = 3,
    NoSolution = 4,
    NotConverged = 5,
    Io = 6,
    Panic = 7,
    BufferTooSmall = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbShape {
    Disk = 0,
    /// `aspect × 1` rectangle; aspect 1 is the square.
    Rectangle = 1,
}

/// Scalar summary of a solution. Radial solutions report `pde_residual` as NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PbHeader {
    pub lambda: f64,
    pub p: f64,
    pub alpha: f64,
    pub theta: f64,
    pub energy: f64,
    pub mass_residual: f64,
    pub pde_residual: f64,
}

/// Counts of estimate entries by status.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PbCheckCounts {
    pub pass: usize,
    pub fail: usize,
    pub not_applicable: usize,
}

/// A normalized domain with its factorized operator.
pub struct PbDomain {
    domain: Domain,
    op: GreenOperator,
}

pub struct PbSolution {
    sol: PlasmaSolution,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> PbStatus {
    match err {
        Error::InvalidSpec(_) | Error::Degenerate(_) | Error::GridTooCoarse(_) | Error::OutsideMask { .. } => {
            PbStatus::InvalidDomain
        }
        Error::NoNonnegativeSolution { .. } => PbStatus::NoSolution,
        Error::LinearSolve { .. }
        | Error::NotPositiveDefinite(_)
        | Error::PicardDivergence { .. }
        | Error::PicardStalled { .. }
        | Error::Shooting(_)
        | Error::IterationCap { .. }
        | Error::Bracket { .. } => PbStatus::NotConverged,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => PbStatus::Io,
        _ => PbStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (PbStatus, String)>) -> PbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PbStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside plasmabound".into());
            PbStatus::Panic
        }
    }
}

fn lift<T>(r: plasmabound::Result<T>) -> Result<T, (PbStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null() -> (PbStatus, String) {
    (PbStatus::NullPointer, "null pointer argument".into())
}

unsafe fn as_ref<'a, T>(p: *const T) -> Result<&'a T, (PbStatus, String)> {
    p.as_ref().ok_or_else(null)
}

unsafe fn as_mut<'a, T>(p: *mut T) -> Result<&'a mut T, (PbStatus, String)> {
    p.as_mut().ok_or_else(null)
}

fn header(h: SolutionHeader) -> PbHeader {
    PbHeader {
        lambda: h.lambda,
        p: h.p,
        alpha: h.alpha,
        theta: h.theta,
        energy: h.energy,
        mass_residual: h.mass_residual,
        pde_residual: h.pde_residual,
    }
}

fn build_domain(spec: &DomainSpec) -> Result<Box<PbDomain>, (PbStatus, String)> {
    let domain = lift(Domain::normalize(spec))?;
    let op = lift(GreenOperator::new(&domain))?;
    Ok(Box::new(PbDomain { domain, op }))
}

/// Copies the last error message of this thread into `buf` (NUL terminated, truncated
/// to fit) and returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pb_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds a unit-area disk or rectangle at resolution `n`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn pb_domain_new(shape: PbShape, aspect: f64, n: usize, out: *mut *mut PbDomain) -> PbStatus {
    guard(|| {
        let out = as_mut(out)?;
        let spec = match shape {
            PbShape::Disk => DomainSpec::disk(n),
            PbShape::Rectangle => DomainSpec::rectangle(aspect, n),
        };
        *out = Box::into_raw(build_domain(&spec)?);
        Ok(())
    })
}

/// Builds a domain from its JSON description, e.g. `{"shape": "square", "n": 64}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn pb_domain_from_json(json: *const c_char, out: *mut *mut PbDomain) -> PbStatus {
    guard(|| {
        let out = as_mut(out)?;
        if json.is_null() {
            return Err(null());
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| (PbStatus::InvalidArgument, e.to_string()))?;
        let spec: DomainSpec = lift(serde_json::from_str(text).map_err(Error::from))?;
        *out = Box::into_raw(build_domain(&spec)?);
        Ok(())
    })
}

/// # Safety
/// `domain` must be null or a handle from `pb_domain_new`/`pb_domain_from_json`,
/// not freed before.
#[no_mangle]
pub unsafe extern "C" fn pb_domain_free(domain: *mut PbDomain) {
    if !domain.is_null() {
        drop(Box::from_raw(domain));
    }
}

/// Number of grid nodes, which is the length of every field.
///
/// # Safety
/// `domain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pb_domain_node_count(domain: *const PbDomain, out: *mut usize) -> PbStatus {
    guard(|| {
        *as_mut(out)? = as_ref(domain)?.domain.grid().len();
        Ok(())
    })
}

/// `|∂Ω|²/2π − 1` of the normalized domain.
///
/// # Safety
/// `domain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pb_domain_ell(domain: *const PbDomain, out: *mut f64) -> PbStatus {
    guard(|| {
        *as_mut(out)? = as_ref(domain)?.domain.ell();
        Ok(())
    })
}

/// `λ_*(Ω, p)` from the grid Sobolev constant.
///
/// # Safety
/// `domain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pb_lambda_star(domain: *const PbDomain, p: f64, out: *mut f64) -> PbStatus {
    guard(|| {
        let d = as_ref(domain)?;
        *as_mut(out)? = lift(lambda_star(&d.op, p, &SobolevOptions::default()))?;
        Ok(())
    })
}

/// Solves the plasma problem at `(λ, p)`. Returns `NoSolution` past the positivity
/// threshold.
///
/// # Safety
/// `domain` must be a live handle and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn pb_solve(domain: *const PbDomain, lambda: f64, p: f64, out: *mut *mut PbSolution) -> PbStatus {
    guard(|| {
        let d = as_ref(domain)?;
        let out = as_mut(out)?;
        let sol = lift(solve_plm(&d.op, lambda, p, &SolveOptions::default()))?;
        *out = Box::into_raw(Box::new(PbSolution { sol }));
        Ok(())
    })
}

/// # Safety
/// `sol` must be null or a handle from `pb_solve`, not freed before.
#[no_mangle]
pub unsafe extern "C" fn pb_solution_free(sol: *mut PbSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// # Safety
/// `sol` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pb_solution_header(sol: *const PbSolution, out: *mut PbHeader) -> PbStatus {
    guard(|| {
        *as_mut(out)? = header(as_ref(sol)?.sol.header());
        Ok(())
    })
}

/// Copies `ψ` into `buf`, which must hold the domain's node count.
///
/// # Safety
/// `sol` must be a live handle and `buf` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pb_solution_psi(sol: *const PbSolution, buf: *mut f64, len: usize) -> PbStatus {
    guard(|| {
        let psi = &as_ref(sol)?.sol.psi;
        if buf.is_null() {
            return Err(null());
        }
        if len < psi.len() {
            return Err((PbStatus::BufferTooSmall, format!("need {} values, got room for {len}", psi.len())));
        }
        ptr::copy_nonoverlapping(psi.as_ptr(), buf, psi.len());
        Ok(())
    })
}

/// Evaluates the energy, L∞ and threshold estimates of a solution with relative
/// `slack`.
///
/// # Safety
/// `domain` and `sol` must be live handles, `sol` solved on `domain`; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pb_check_estimates(
    domain: *const PbDomain,
    sol: *const PbSolution,
    slack: f64,
    out: *mut PbCheckCounts,
) -> PbStatus {
    guard(|| {
        let d = as_ref(domain)?;
        let s = as_ref(sol)?;
        let out = as_mut(out)?;
        if !(slack >= 0.0 && slack.is_finite()) {
            return Err((PbStatus::InvalidArgument, format!("slack must be finite and >= 0, got {slack}")));
        }
        let prim = lift(Primitives::from_grid(&d.domain, &s.sol))?;
        let entries = [check_energy_theorem(&prim, slack), check_linf_bounds(&prim, slack), check_thresholds(&prim, slack)];
        let mut counts = PbCheckCounts::default();
        for e in entries.iter().flatten() {
            match e.status {
                Status::Pass => counts.pass += 1,
                Status::Fail => counts.fail += 1,
                Status::NotApplicable => counts.not_applicable += 1,
            }
        }
        *out = counts;
        Ok(())
    })
}

/// Radial solution on the unit-area disk.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pb_radial_solve(lambda: f64, p: f64, out: *mut PbHeader) -> PbStatus {
    guard(|| {
        let out = as_mut(out)?;
        let r = lift(solve_disk_radial(lambda, p, &RadialOptions::default()))?;
        *out = PbHeader {
            lambda: r.lambda,
            p: r.p,
            alpha: r.alpha,
            theta: r.theta(),
            energy: r.energy,
            mass_residual: r.mass_residual(),
            pde_residual: f64::NAN,
        };
        Ok(())
    })
}
