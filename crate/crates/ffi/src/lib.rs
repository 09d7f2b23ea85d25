//! C interface to the rydgate simulator.
//!
//! Every entry point returns a [`RydgateStatus`]; on failure the message is
//! kept per thread and read back with [`rydgate_last_error_message`].
//! Handles are opaque and must be released with the matching `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use rydgate::gate::{analytic_blocking_fidelity, run_gate, GateInput, GateOptions, GateOutcome};
use rydgate::hilbert::parse_labels;
use rydgate::interferometer::{run_interferometer, BranchUnitary, GateMode};
use rydgate::{Config, ControlLevel, Error, Model, PhysParams, C64};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RydgateStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Io = 5,
    Panic = 6,
}

/// Physical parameter set.
pub struct RydgateParams(PhysParams);

/// Result of one gate run.
pub struct RydgateOutcome(GateOutcome);

/// Control input of [`rydgate_run_gate`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RydgateControl {
    Zero = 0,
    One = 1,
    /// (|0> + |1>)/√2
    Superposition = 2,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RydgateStatus {
    match e {
        Error::Config { .. } => RydgateStatus::Config,
        Error::Io(_) => RydgateStatus::Io,
        e if e.is_numerical() => RydgateStatus::Numerical,
        _ => RydgateStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (RydgateStatus, String)>) -> RydgateStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RydgateStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RydgateStatus::Panic
        }
    }
}

fn lib(e: Error) -> (RydgateStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (RydgateStatus, String) {
    (RydgateStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (RydgateStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (RydgateStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn complex_slice(re: *const f64, im: *const f64, len: usize, what: &str) -> Result<Vec<C64>, (RydgateStatus, String)> {
    if re.is_null() || im.is_null() {
        return Err(null(what));
    }
    let re = std::slice::from_raw_parts(re, len);
    let im = std::slice::from_raw_parts(im, len);
    Ok(re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rydgate_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rydgate_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Rb87 preset with `n_atoms` ensemble atoms.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn rydgate_params_preset(n_atoms: usize, out: *mut *mut RydgateParams) -> RydgateStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(RydgateParams(PhysParams::rb87(n_atoms))));
        Ok(())
    })
}

/// Parameters from config-file text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rydgate_params_from_config(text: *const c_char, out: *mut *mut RydgateParams) -> RydgateStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config = Config::parse(str_arg(text, "text")?).map_err(lib)?;
        *out = Box::into_raw(Box::new(RydgateParams(config.params)));
        Ok(())
    })
}

/// # Safety
/// `params` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rydgate_params_free(params: *mut RydgateParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Uniform V_k and V_jk, both in units of ε.
///
/// # Safety
/// `params` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rydgate_params_set_interactions(
    params: *mut RydgateParams,
    v_control_over_eps: f64,
    v_ensemble_over_eps: f64,
) -> RydgateStatus {
    guard(|| {
        let p = params.as_mut().ok_or_else(|| null("params"))?;
        p.0.set_uniform_interactions(v_control_over_eps, v_ensemble_over_eps);
        p.0.validate().map_err(lib)?;
        Ok(())
    })
}

/// Sets x_max through Ω_c, keeping the interactions fixed in units of ε.
///
/// # Safety
/// `params` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rydgate_params_set_x_max(params: *mut RydgateParams, x_max: f64) -> RydgateStatus {
    guard(|| {
        let p = params.as_mut().ok_or_else(|| null("params"))?;
        if !(x_max > 0.0 && x_max.is_finite()) {
            return Err((RydgateStatus::InvalidArgument, format!("x_max must be positive, got {x_max}")));
        }
        let eps = p.0.epsilon();
        let vk: Vec<f64> = p.0.v_control.iter().map(|v| v / eps).collect();
        let vjk: Vec<f64> = p.0.v_ensemble.iter().map(|v| v / eps).collect();
        p.0 = p.0.clone().with_x_max(x_max);
        let eps = p.0.epsilon();
        p.0.v_control = vk.iter().map(|v| v * eps).collect();
        p.0.v_ensemble = vjk.iter().map(|v| v * eps).collect();
        Ok(())
    })
}

/// ε in rad/s, or NaN for a null handle.
///
/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rydgate_params_epsilon(params: *const RydgateParams) -> f64 {
    params.as_ref().map_or(f64::NAN, |p| p.0.epsilon())
}

/// x_max, or NaN for a null handle.
///
/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rydgate_params_x_max(params: *const RydgateParams) -> f64 {
    params.as_ref().map_or(f64::NAN, |p| p.0.x_max())
}

/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rydgate_params_n_atoms(params: *const RydgateParams) -> usize {
    params.as_ref().map_or(0, |p| p.0.n_atoms)
}

/// Runs the gate on `control ⊗ ensemble`, where `ensemble` is a label
/// string over A and B whose length must equal the atom count.
///
/// # Safety
/// `params` must be a live handle, `ensemble` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rydgate_run_gate(
    params: *const RydgateParams,
    control: RydgateControl,
    ensemble: *const c_char,
    full_model: bool,
    include_decay: bool,
    out: *mut *mut RydgateOutcome,
) -> RydgateStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let labels = parse_labels(str_arg(ensemble, "ensemble")?).map_err(lib)?;
        let input = match control {
            RydgateControl::Zero => GateInput::basis(ControlLevel::Zero, labels),
            RydgateControl::One => GateInput::basis(ControlLevel::One, labels),
            RydgateControl::Superposition => GateInput::superposition(labels),
        }
        .map_err(lib)?;
        let options = GateOptions {
            model: if full_model { Model::Full } else { Model::Effective },
            include_decay,
            ..GateOptions::default()
        };
        let outcome = run_gate(&input, &p.0, &options).map_err(lib)?;
        *out = Box::into_raw(Box::new(RydgateOutcome(outcome)));
        Ok(())
    })
}

/// # Safety
/// `outcome` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rydgate_outcome_free(outcome: *mut RydgateOutcome) {
    if !outcome.is_null() {
        drop(Box::from_raw(outcome));
    }
}

unsafe fn outcome_field(outcome: *const RydgateOutcome, f: impl Fn(&GateOutcome) -> f64) -> f64 {
    outcome.as_ref().map_or(f64::NAN, |o| f(&o.0))
}

/// |<desired|final>|².
///
/// # Safety
/// `outcome` must be null (giving NaN) or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rydgate_outcome_fidelity(outcome: *const RydgateOutcome) -> f64 {
    outcome_field(outcome, |o| o.fidelity)
}

/// arg <desired|final>.
///
/// # Safety
/// `outcome` must be null (giving NaN) or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rydgate_outcome_conditional_phase(outcome: *const RydgateOutcome) -> f64 {
    outcome_field(outcome, |o| o.conditional_phase)
}

/// 1 - <ψ(T)|ψ(T)>.
///
/// # Safety
/// `outcome` must be null (giving NaN) or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rydgate_outcome_norm_loss(outcome: *const RydgateOutcome) -> f64 {
    outcome_field(outcome, |o| o.norm_loss)
}

/// Final population outside the computational subspace.
///
/// # Safety
/// `outcome` must be null (giving NaN) or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rydgate_outcome_leakage(outcome: *const RydgateOutcome) -> f64 {
    outcome_field(outcome, |o| o.leakage)
}

/// Peak population with two or more ensemble atoms in |R>.
///
/// # Safety
/// `outcome` must be null (giving NaN) or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rydgate_outcome_max_double_rydberg(outcome: *const RydgateOutcome) -> f64 {
    outcome_field(outcome, |o| o.max_double_rydberg)
}

/// Peak population with the control and an ensemble atom both in Rydberg states.
///
/// # Safety
/// `outcome` must be null (giving NaN) or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rydgate_outcome_max_control_ensemble_rydberg(outcome: *const RydgateOutcome) -> f64 {
    outcome_field(outcome, |o| o.max_control_ensemble_rydberg)
}

/// Phase of the transferred amplitude relative to β; NaN when β = 0.
///
/// # Safety
/// `outcome` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rydgate_outcome_transfer_phase(outcome: *const RydgateOutcome) -> f64 {
    outcome.as_ref().and_then(|o| o.0.transfer_phase).unwrap_or(f64::NAN)
}

/// # Safety
/// `outcome` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rydgate_outcome_steps(outcome: *const RydgateOutcome) -> usize {
    outcome.as_ref().map_or(0, |o| o.0.steps)
}

/// Closed-form blocking fidelity for `n_atoms` atoms and phase `phi`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rydgate_analytic_blocking_fidelity(n_atoms: usize, phi: f64, out: *mut f64) -> RydgateStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = analytic_blocking_fidelity(n_atoms, phi).map_err(lib)?;
        Ok(())
    })
}

/// Ideal-gate interferometer. `phi` has `dim` entries, `ua` and `ub` are
/// row-major `dim x dim`; real and imaginary parts are passed separately.
/// Writes the overlap estimate to `out_re`/`out_im`.
///
/// # Safety
/// All array pointers must cover the stated lengths; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn rydgate_interferometer_ideal(
    n_atoms: usize,
    dim: usize,
    phi_re: *const f64,
    phi_im: *const f64,
    ua_re: *const f64,
    ua_im: *const f64,
    ub_re: *const f64,
    ub_im: *const f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> RydgateStatus {
    guard(|| {
        if out_re.is_null() || out_im.is_null() {
            return Err(null("output"));
        }
        if dim == 0 {
            return Err((RydgateStatus::InvalidArgument, "dim must be positive".into()));
        }
        let phi = complex_slice(phi_re, phi_im, dim, "phi")?;
        let matrix = |re, im, what| -> Result<BranchUnitary, (RydgateStatus, String)> {
            let m = complex_slice(re, im, dim * dim, what)?;
            BranchUnitary::new(what, nalgebra::DMatrix::from_row_slice(dim, dim, &m)).map_err(lib)
        };
        let ua = matrix(ua_re, ua_im, "ua")?;
        let ub = matrix(ub_re, ub_im, "ub")?;
        let r = run_interferometer(&phi, &ua, &ub, &GateMode::Ideal { n_atoms }).map_err(lib)?;
        *out_re = r.overlap_estimate.re;
        *out_im = r.overlap_estimate.im;
        Ok(())
    })
}
