//! C ABI over the magnongate simulator.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free` function. Every fallible call returns an [`MgStatus`];
//! on failure [`mg_last_error_message`] describes the error of the last
//! failed call on the same thread. Strings returned through out-pointers
//! are released with [`mg_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use magnongate::config::{parse_config, RunConfig, SweepGrid};
use magnongate::error::Error;
use magnongate::model::GateKind;
use magnongate::output::sweep_csv;
use magnongate::reports::{geometry_report, params_report, sw_report};
use magnongate::sweep::{evaluate_gate, find_optimum, run_scenarios, run_sweep, SweepRow};

pub const MG_GATE_ISWAP: c_int = 0;
pub const MG_GATE_SQRT_ISWAP: c_int = 1;
pub const MG_GATE_CZ: c_int = 2;
pub const MG_GATE_ICNOT: c_int = 3;

pub const MG_REPORT_PARAMS: c_int = 0;
pub const MG_REPORT_GEOMETRY: c_int = 1;
pub const MG_REPORT_SCENARIOS: c_int = 2;
pub const MG_REPORT_VERIFY_SW: c_int = 3;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    OutOfRange = 3,
    Dimension = 4,
    InvalidArgument = 5,
    Precondition = 6,
    Regime = 7,
    Propagation = 8,
    Geometry = 9,
    Config = 10,
    Parse = 11,
    Io = 12,
    Panic = 13,
}

impl From<&Error> for MgStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Dimension(_) => MgStatus::Dimension,
            Error::InvalidArgument(_) => MgStatus::InvalidArgument,
            Error::Precondition(_) => MgStatus::Precondition,
            Error::Regime(_) => MgStatus::Regime,
            Error::Propagation(_) => MgStatus::Propagation,
            Error::Geometry(_) => MgStatus::Geometry,
            Error::Config { .. } => MgStatus::Config,
            Error::Parse { .. } => MgStatus::Parse,
            Error::Io(_) => MgStatus::Io,
        }
    }
}

/// Run configuration handle.
pub struct MgConfig {
    inner: RunConfig,
}

/// Sweep result handle; keeps the configuration it was run with.
pub struct MgSweep {
    cfg: RunConfig,
    rows: Vec<SweepRow>,
}

/// One gate evaluation. Frequencies in Hz, times in s.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MgGateResult {
    pub avg_fidelity: f64,
    pub average_leakage: f64,
    pub max_leakage: f64,
    pub t_gate_s: f64,
    pub coupling_hz: f64,
    pub n_th: f64,
    pub e_r: f64,
}

/// One sweep point. Values of a failed point are NaN and `ok` is false.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MgSweepRow {
    pub omega_m_ratio: f64,
    pub omega_m_hz: f64,
    pub e_r: f64,
    pub n_th: f64,
    pub kappa_hz: f64,
    pub coupling_hz: f64,
    pub t_gate_s: f64,
    pub avg_fidelity: f64,
    pub leakage: f64,
    pub ok: bool,
}

struct Failure(MgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(MgStatus::from(&e), e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MgStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {message}"));
            MgStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(MgStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure(MgStatus::InvalidUtf8, format!("`{what}`: {e}")))
}

fn gate_of(code: c_int) -> Result<GateKind, Failure> {
    match code {
        MG_GATE_ISWAP => Ok(GateKind::Iswap),
        MG_GATE_SQRT_ISWAP => Ok(GateKind::SqrtIswap),
        MG_GATE_CZ => Ok(GateKind::Cz),
        MG_GATE_ICNOT => Ok(GateKind::Icnot),
        other => Err(Failure(MgStatus::OutOfRange, format!("unknown gate code {other}"))),
    }
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s).map(CString::into_raw).map_err(|e| Failure(MgStatus::InvalidUtf8, e.to_string()))
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string(value).map_err(|e| Failure(MgStatus::Io, e.to_string()))
}

fn validated(cfg: RunConfig) -> Result<*mut MgConfig, Failure> {
    cfg.validate()?;
    Ok(Box::into_raw(Box::new(MgConfig { inner: cfg })))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Forgets the last error of this thread.
#[no_mangle]
pub extern "C" fn mg_clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Default configuration of gate `gate` (an `MG_GATE_*` code).
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn mg_config_new(gate: c_int, out: *mut *mut MgConfig) -> MgStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = validated(RunConfig::defaults(gate_of(gate)?))?;
        Ok(())
    })
}

/// Configuration parsed from TOML text.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mg_config_parse(text: *const c_char, out: *mut *mut MgConfig) -> MgStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let out = deref_mut(out, "out")?;
        *out = validated(parse_config(text)?)?;
        Ok(())
    })
}

/// Configuration read from a TOML file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mg_config_load(path: *const c_char, out: *mut *mut MgConfig) -> MgStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = deref_mut(out, "out")?;
        *out = validated(magnongate::config::load_config(Path::new(path))?)?;
        Ok(())
    })
}

/// Releases a configuration handle. NULL is ignored.
///
/// # Safety
/// `cfg` must come from `mg_config_*` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mg_config_free(cfg: *mut MgConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// The configured gate as an `MG_GATE_*` code.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mg_config_gate(cfg: *const MgConfig, out: *mut c_int) -> MgStatus {
    guard(|| {
        let cfg = deref(cfg, "cfg")?;
        *deref_mut(out, "out")? = match cfg.inner.gate {
            GateKind::Iswap => MG_GATE_ISWAP,
            GateKind::SqrtIswap => MG_GATE_SQRT_ISWAP,
            GateKind::Cz => MG_GATE_CZ,
            GateKind::Icnot => MG_GATE_ICNOT,
        };
        Ok(())
    })
}

fn update(cfg: &mut MgConfig, f: impl FnOnce(&mut RunConfig)) -> Result<(), Failure> {
    let mut next = cfg.inner.clone();
    f(&mut next);
    next.validate()?;
    cfg.inner = next;
    Ok(())
}

/// Sets the Fock sizes (q1, q2, m). The handle is unchanged on failure.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mg_config_set_dims(cfg: *mut MgConfig, q1: usize, q2: usize, m: usize) -> MgStatus {
    guard(|| update(deref_mut(cfg, "cfg")?, |c| c.dims = [q1, q2, m]))
}

/// Selects direct-coupling (true) or derived (false) mode.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mg_config_set_direct(cfg: *mut MgConfig, direct: bool) -> MgStatus {
    guard(|| update(deref_mut(cfg, "cfg")?, |c| c.direct = direct))
}

/// Evaluates sweep points in parallel (true) or serially (false).
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mg_config_set_parallel(cfg: *mut MgConfig, parallel: bool) -> MgStatus {
    guard(|| update(deref_mut(cfg, "cfg")?, |c| c.parallel = parallel))
}

/// Replaces the sweep grid by `len` explicit ratios ω_m/ω_q.
///
/// # Safety
/// `cfg` must be a live handle; `ratios` must point to `len` values.
#[no_mangle]
pub unsafe extern "C" fn mg_config_set_ratios(cfg: *mut MgConfig, ratios: *const f64, len: usize) -> MgStatus {
    guard(|| {
        let cfg = deref_mut(cfg, "cfg")?;
        if ratios.is_null() {
            return Err(null("ratios"));
        }
        let list = std::slice::from_raw_parts(ratios, len).to_vec();
        update(cfg, |c| c.sweep = SweepGrid::List(list))
    })
}

/// Evaluates the configured gate at one ratio with the configured dims
/// and magnon initial state.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mg_evaluate(cfg: *const MgConfig, ratio: f64, out: *mut MgGateResult) -> MgStatus {
    guard(|| {
        let c = &deref(cfg, "cfg")?.inner;
        let out = deref_mut(out, "out")?;
        let device = c.resolved_device()?;
        let init = match c.magnon_init {
            magnongate::config::MagnonInitConfig::Vacuum => Some(magnongate::lindblad::MagnonInit::Vacuum),
            magnongate::config::MagnonInitConfig::Thermal(Some(n)) => {
                Some(magnongate::lindblad::MagnonInit::Thermal(n))
            }
            magnongate::config::MagnonInitConfig::Thermal(None) => None,
        };
        let ev = evaluate_gate(&device, c.gate, ratio, c.dims, &c.overrides_for(c.gate), init)?;
        *out = MgGateResult {
            avg_fidelity: ev.avg_fidelity,
            average_leakage: ev.average_leakage,
            max_leakage: ev.max_leakage,
            t_gate_s: ev.t_gate_s,
            coupling_hz: ev.coupling_hz,
            n_th: ev.n_th,
            e_r: ev.e_r,
        };
        Ok(())
    })
}

/// Runs the configured sweep. Points that fail are kept with `ok` false.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mg_sweep_run(cfg: *const MgConfig, out: *mut *mut MgSweep) -> MgStatus {
    guard(|| {
        let c = deref(cfg, "cfg")?.inner.clone();
        let out = deref_mut(out, "out")?;
        let rows = run_sweep(&c)?;
        *out = Box::into_raw(Box::new(MgSweep { cfg: c, rows }));
        Ok(())
    })
}

/// Number of points in a sweep; 0 for NULL.
///
/// # Safety
/// `sweep` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mg_sweep_len(sweep: *const MgSweep) -> usize {
    sweep.as_ref().map_or(0, |s| s.rows.len())
}

/// Copies point `index` of a sweep.
///
/// # Safety
/// `sweep` must be a live handle; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mg_sweep_row(sweep: *const MgSweep, index: usize, out: *mut MgSweepRow) -> MgStatus {
    guard(|| {
        let s = deref(sweep, "sweep")?;
        let out = deref_mut(out, "out")?;
        let r = s.rows.get(index).ok_or_else(|| {
            Failure(MgStatus::OutOfRange, format!("row {index} out of range (len {})", s.rows.len()))
        })?;
        *out = MgSweepRow {
            omega_m_ratio: r.omega_m_ratio,
            omega_m_hz: r.omega_m_hz,
            e_r: r.e_r,
            n_th: r.n_th,
            kappa_hz: r.kappa_hz,
            coupling_hz: r.coupling_hz,
            t_gate_s: r.t_gate_s,
            avg_fidelity: r.avg_fidelity,
            leakage: r.leakage,
            ok: r.is_ok(),
        };
        Ok(())
    })
}

/// Index of the highest-fidelity point of a sweep.
///
/// # Safety
/// `sweep` must be a live handle; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mg_sweep_optimum(sweep: *const MgSweep, out: *mut usize) -> MgStatus {
    guard(|| {
        let s = deref(sweep, "sweep")?;
        let out = deref_mut(out, "out")?;
        let best = find_optimum(&s.rows)?;
        *out = s.rows.iter().position(|r| ptr::eq(r, best)).expect("optimum is one of the rows");
        Ok(())
    })
}

/// The sweep as CSV text, identical to the command-line output.
///
/// # Safety
/// `sweep` must be a live handle; `out` must be valid for one write.
/// Release the string with `mg_string_free`.
#[no_mangle]
pub unsafe extern "C" fn mg_sweep_csv(sweep: *const MgSweep, out: *mut *mut c_char) -> MgStatus {
    guard(|| {
        let s = deref(sweep, "sweep")?;
        let out = deref_mut(out, "out")?;
        *out = into_c_string(sweep_csv(&s.rows, &s.cfg))?;
        Ok(())
    })
}

/// Releases a sweep handle. NULL is ignored.
///
/// # Safety
/// `sweep` must come from `mg_sweep_run` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mg_sweep_free(sweep: *mut MgSweep) {
    if !sweep.is_null() {
        drop(Box::from_raw(sweep));
    }
}

/// One of the `MG_REPORT_*` reports as JSON text.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be valid for one write.
/// Release the string with `mg_string_free`.
#[no_mangle]
pub unsafe extern "C" fn mg_report_json(cfg: *const MgConfig, report: c_int, out: *mut *mut c_char) -> MgStatus {
    guard(|| {
        let c = &deref(cfg, "cfg")?.inner;
        let out = deref_mut(out, "out")?;
        let json = match report {
            MG_REPORT_PARAMS => to_json(&params_report(c)?)?,
            MG_REPORT_GEOMETRY => {
                let device = c.resolved_device()?;
                to_json(&geometry_report(&device.magnet, device.b_c)?)?
            }
            MG_REPORT_SCENARIOS => to_json(&run_scenarios(c)?)?,
            MG_REPORT_VERIFY_SW => to_json(&sw_report(c)?)?,
            other => return Err(Failure(MgStatus::OutOfRange, format!("unknown report code {other}"))),
        };
        *out = into_c_string(json)?;
        Ok(())
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_codes_follow_error_kinds() {
        assert_eq!(MgStatus::from(&Error::Regime("x".into())), MgStatus::Regime);
        assert_eq!(MgStatus::from(&Error::Parse { line: 1, message: "x".into() }), MgStatus::Parse);
    }

    #[test]
    fn panics_become_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, MgStatus::Panic);
        let msg = unsafe { CStr::from_ptr(mg_last_error_message()) }.to_str().unwrap();
        assert!(msg.contains("boom"));
    }

    #[test]
    fn gate_codes_round_trip() {
        for code in [MG_GATE_ISWAP, MG_GATE_SQRT_ISWAP, MG_GATE_CZ, MG_GATE_ICNOT] {
            assert!(gate_of(code).is_ok());
        }
        assert!(gate_of(7).is_err());
    }
}
