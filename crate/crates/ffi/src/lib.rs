//! C ABI over the `hetdet` toolkit.
//!
//! Every entry point returns a [`HetdetStatus`]. On failure a message is kept
//! per thread and can be read with [`hetdet_last_error_message`]. Handles are
//! opaque and must be released with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use hetdet::analytic::{noise_figure, psd_analytic, table1, Spectrum};
use hetdet::config::{parse_config, parse_config_str, RunConfig};
use hetdet::model::Hypothesis;
use hetdet::montecarlo::run_experiment;
use hetdet::Error;

/// Result codes shared by every function.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HetdetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    ConfigViolation = 4,
    Unsupported = 5,
    NumericalError = 6,
    IoError = 7,
    Panic = 8,
}

/// Which field partition the analytic spectrum is evaluated under.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HetdetHypothesis {
    /// Use the hypothesis named in the configuration.
    Configured = 0,
    OneField = 1,
    ThreeFields = 2,
}

/// Parsed run configuration.
pub struct HetdetConfig {
    inner: RunConfig,
}

/// Power spectral density on a frequency grid.
pub struct HetdetSpectrum {
    inner: Spectrum,
}

/// One row of the noise-figure table.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HetdetTableRow {
    pub power_w: f64,
    pub snr_in_db: f64,
    pub snr_out_db: f64,
    pub nf_db: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HetdetStatus {
    match e {
        Error::Parse { .. } | Error::UnknownKey(_) => HetdetStatus::ParseError,
        Error::ConfigViolation(_) | Error::WeakLo { .. } | Error::TooShort { .. } => HetdetStatus::ConfigViolation,
        Error::Unsupported(_) | Error::NonClassicalInput => HetdetStatus::Unsupported,
        Error::TruncationInsufficient { .. } | Error::RateUnbounded | Error::Unresolved(_) => HetdetStatus::NumericalError,
        Error::Io(_) => HetdetStatus::IoError,
        Error::InvalidSpec(_) | Error::UnknownMode(_) => HetdetStatus::InvalidArgument,
    }
}

struct Fail(HetdetStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(HetdetStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HetdetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HetdetStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            HetdetStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(HetdetStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn cfg_arg<'a>(p: *const HetdetConfig) -> Result<&'a RunConfig, Fail> {
    p.as_ref().map(|c| &c.inner).ok_or_else(|| null("config"))
}

/// Message for the last failed call on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn hetdet_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a configuration from `key = value` text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hetdet_config_from_str(text: *const c_char, out: *mut *mut HetdetConfig) -> HetdetStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = parse_config_str(str_arg(text, "text")?)?;
        *out = Box::into_raw(Box::new(HetdetConfig { inner: cfg }));
        Ok(())
    })
}

/// Parses a configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hetdet_config_from_file(path: *const c_char, out: *mut *mut HetdetConfig) -> HetdetStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = parse_config(Path::new(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(HetdetConfig { inner: cfg }));
        Ok(())
    })
}

/// Overrides the RNG seed.
///
/// # Safety
/// `cfg` must come from `hetdet_config_from_*` and not be freed.
#[no_mangle]
pub unsafe extern "C" fn hetdet_config_set_seed(cfg: *mut HetdetConfig, seed: u64) -> HetdetStatus {
    guard(|| {
        let c = cfg.as_mut().ok_or_else(|| null("config"))?;
        c.inner = c.inner.clone().with_seed(seed);
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hetdet_config_free(cfg: *mut HetdetConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Analytic PSD of the differenced current on the configured grid.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hetdet_psd_analytic(
    cfg: *const HetdetConfig,
    hypothesis: HetdetHypothesis,
    out: *mut *mut HetdetSpectrum,
) -> HetdetStatus {
    guard(|| {
        let c = cfg_arg(cfg)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let h = match hypothesis {
            HetdetHypothesis::Configured => c.hypothesis,
            HetdetHypothesis::OneField => Hypothesis::OneField,
            HetdetHypothesis::ThreeFields => Hypothesis::ThreeFields,
        };
        let state = c.field_state(h)?;
        let lo = c.local_oscillator()?;
        let s = psd_analytic(&state, &lo, &c.detector, &c.measurement, &c.grid)?;
        *out = Box::into_raw(Box::new(HetdetSpectrum { inner: s }));
        Ok(())
    })
}

/// Number of points in the spectrum (0 for null).
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hetdet_spectrum_len(s: *const HetdetSpectrum) -> usize {
    s.as_ref().map_or(0, |s| s.inner.len())
}

/// Frequencies in Hz; `len` entries owned by the handle.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hetdet_spectrum_freqs(s: *const HetdetSpectrum) -> *const f64 {
    s.as_ref().map_or(ptr::null(), |s| s.inner.freqs.as_ptr())
}

/// PSD values; `len` entries owned by the handle.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hetdet_spectrum_psd(s: *const HetdetSpectrum) -> *const f64 {
    s.as_ref().map_or(ptr::null(), |s| s.inner.psd.as_ptr())
}

/// Resolution bandwidth in Hz (NaN for null).
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hetdet_spectrum_rbw(s: *const HetdetSpectrum) -> f64 {
    s.as_ref().map_or(f64::NAN, |s| s.inner.rbw)
}

/// # Safety
/// `s` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hetdet_spectrum_free(s: *mut HetdetSpectrum) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Noise figure in dB for the configured coherent input. NaN when there is no signal.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hetdet_noise_figure(cfg: *const HetdetConfig, out: *mut f64) -> HetdetStatus {
    guard(|| {
        let c = cfg_arg(cfg)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let state = c.field_state(c.hypothesis)?;
        let lo = c.local_oscillator()?;
        *out = noise_figure(&state, &lo, &c.detector, &c.measurement)?.unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Noise-figure table for `n` optical powers (W), written into `rows[0..n]`.
///
/// # Safety
/// `powers` and `rows` must each point to `n` elements.
#[no_mangle]
pub unsafe extern "C" fn hetdet_table1(
    powers: *const f64,
    n: usize,
    window_s: f64,
    eta: f64,
    photon_energy_j: f64,
    rows: *mut HetdetTableRow,
) -> HetdetStatus {
    guard(|| {
        if n == 0 {
            return Ok(());
        }
        if powers.is_null() {
            return Err(null("powers"));
        }
        if rows.is_null() {
            return Err(null("rows"));
        }
        let p = std::slice::from_raw_parts(powers, n);
        let out = std::slice::from_raw_parts_mut(rows, n);
        for (dst, r) in out.iter_mut().zip(table1(p, window_s, eta, photon_energy_j)?) {
            *dst = HetdetTableRow { power_w: r.power_w, snr_in_db: r.snr_in_db, snr_out_db: r.snr_out_db, nf_db: r.nf_db };
        }
        Ok(())
    })
}

/// Runs the configured Monte Carlo scenario and returns its report as JSON.
/// `passed` receives 1 when every tolerance check holds.
///
/// # Safety
/// `cfg` must be a live handle; `json_out` a valid pointer; `passed` may be null.
#[no_mangle]
pub unsafe extern "C" fn hetdet_simulate_json(
    cfg: *const HetdetConfig,
    json_out: *mut *mut c_char,
    passed: *mut i32,
) -> HetdetStatus {
    guard(|| {
        let c = cfg_arg(cfg)?;
        if json_out.is_null() {
            return Err(null("json_out"));
        }
        let outcome = run_experiment(&c.setup()?, c.scenario)?;
        let body = serde_json::to_string(&outcome.report).map_err(|e| Fail(HetdetStatus::IoError, e.to_string()))?;
        if !passed.is_null() {
            *passed = i32::from(outcome.report.passed());
        }
        *json_out = CString::new(body).map_err(|e| Fail(HetdetStatus::IoError, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hetdet_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
