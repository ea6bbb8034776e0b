//! C ABI over `vhetsim`.
//!
//! Every fallible call returns a `VhetsimStatus`. On failure the message is
//! available from `vhetsim_last_error` on the same thread until the next
//! failing call. Handles are opaque and released with their `_free` function.
//! Strings handed out by the library are released with `vhetsim_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use vhetsim::config::{parse_config, render_config, ExperimentConfig, Scenario};
use vhetsim::nalgebra::DMatrix;
use vhetsim::output::{execute, Summary};
use vhetsim::power::{maxmin_allocate, TwoHopLink};
use vhetsim::stats::EmpiricalDistribution;
use vhetsim::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VhetsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Numerical = 5,
    Utf8 = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VhetsimScenario {
    Cs1 = 1,
    Cs2 = 2,
}

/// Opaque experiment configuration.
pub struct VhetsimConfig {
    inner: ExperimentConfig,
}

/// Opaque result of `vhetsim_run`.
pub struct VhetsimReport {
    rows: Vec<ReportRow>,
    crossover: Option<f64>,
}

struct ReportRow {
    scheme: CString,
    metric_name: CString,
    sweep_value: Option<f64>,
    count: usize,
    mean: f64,
    p5: f64,
    p50: f64,
}

/// One summary line. The string pointers borrow from the report and stay
/// valid until it is freed.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct VhetsimSummaryRow {
    pub scheme: *const c_char,
    pub metric_name: *const c_char,
    /// 0 when the row has no sweep value.
    pub has_sweep_value: i32,
    pub sweep_value: f64,
    pub count: usize,
    pub mean: f64,
    pub p5: f64,
    pub p50: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> VhetsimStatus {
    match e {
        Error::Config { .. } => VhetsimStatus::Config,
        Error::Io { .. } => VhetsimStatus::Io,
        Error::Singular(_) | Error::NonFinite { .. } => VhetsimStatus::Numerical,
        _ => VhetsimStatus::InvalidArgument,
    }
}

struct Failure(VhetsimStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(VhetsimStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> VhetsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VhetsimStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            VhetsimStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(VhetsimStatus::Utf8, format!("{what} is not UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failing call on this thread, or null. Owned by the
/// library; do not free.
#[no_mangle]
pub extern "C" fn vhetsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn vhetsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a JSON configuration document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vhetsim_config_parse(json: *const c_char, out: *mut *mut VhetsimConfig) -> VhetsimStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let cfg = parse_config(text)?;
        write_out(out, Box::into_raw(Box::new(VhetsimConfig { inner: cfg })), "out")
    })
}

/// Default configuration for a scenario.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vhetsim_config_default(
    scenario: VhetsimScenario,
    out: *mut *mut VhetsimConfig,
) -> VhetsimStatus {
    guard(|| {
        let s = match scenario {
            VhetsimScenario::Cs1 => Scenario::Cs1,
            VhetsimScenario::Cs2 => Scenario::Cs2,
        };
        let cfg = ExperimentConfig::defaults(s);
        write_out(out, Box::into_raw(Box::new(VhetsimConfig { inner: cfg })), "out")
    })
}

/// # Safety
/// `cfg` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn vhetsim_config_free(cfg: *mut VhetsimConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Sets the master seed and trial counts. Counts must be at least 1.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn vhetsim_config_set_plan(
    cfg: *mut VhetsimConfig,
    master_seed: u64,
    topologies: usize,
    realizations: usize,
) -> VhetsimStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        let mut next = cfg.inner.clone();
        next.plan.master_seed = master_seed;
        next.plan.topologies = topologies;
        next.plan.realizations = realizations;
        next.validate()?;
        cfg.inner = next;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle; `dir` a NUL-terminated UTF-8 path.
#[no_mangle]
pub unsafe extern "C" fn vhetsim_config_set_output_dir(cfg: *mut VhetsimConfig, dir: *const c_char) -> VhetsimStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        let dir = read_str(dir, "dir")?;
        let mut next = cfg.inner.clone();
        next.output_dir = PathBuf::from(dir);
        next.validate()?;
        cfg.inner = next;
        Ok(())
    })
}

/// Full JSON rendering of the configuration; free with `vhetsim_string_free`.
///
/// # Safety
/// `cfg` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vhetsim_config_to_json(cfg: *const VhetsimConfig, out: *mut *mut c_char) -> VhetsimStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        let s = CString::new(render_config(&cfg.inner)).expect("JSON has no NUL");
        write_out(out, s.into_raw(), "out")
    })
}

/// Runs the experiment, writes the CSV files into the configured output
/// directory and returns the summary. `threads` = 0 uses the default pool.
///
/// # Safety
/// `cfg` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vhetsim_run(
    cfg: *const VhetsimConfig,
    threads: usize,
    out: *mut *mut VhetsimReport,
) -> VhetsimStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let threads = (threads > 0).then_some(threads);
        let report = execute(&cfg.inner, threads)?;
        write_out(out, Box::into_raw(Box::new(report_from(&report.summary))), "out")
    })
}

fn report_from(summary: &Summary) -> VhetsimReport {
    VhetsimReport {
        rows: summary
            .rows
            .iter()
            .map(|r| ReportRow {
                scheme: CString::new(r.scheme.as_str()).expect("scheme has no NUL"),
                metric_name: CString::new(r.metric_name.as_str()).expect("metric has no NUL"),
                sweep_value: r.sweep_value,
                count: r.count,
                mean: r.mean,
                p5: r.p5,
                p50: r.p50,
            })
            .collect(),
        crossover: summary.crossover,
    }
}

/// Number of summary rows; 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vhetsim_report_len(report: *const VhetsimReport) -> usize {
    report.as_ref().map_or(0, |r| r.rows.len())
}

/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vhetsim_report_row(
    report: *const VhetsimReport,
    index: usize,
    out: *mut VhetsimSummaryRow,
) -> VhetsimStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        let r = report.rows.get(index).ok_or_else(|| {
            Failure(
                VhetsimStatus::InvalidArgument,
                format!("row {index} out of range (len {})", report.rows.len()),
            )
        })?;
        let row = VhetsimSummaryRow {
            scheme: r.scheme.as_ptr(),
            metric_name: r.metric_name.as_ptr(),
            has_sweep_value: r.sweep_value.is_some() as i32,
            sweep_value: r.sweep_value.unwrap_or(0.0),
            count: r.count,
            mean: r.mean,
            p5: r.p5,
            p50: r.p50,
        };
        write_out(out, row, "out")
    })
}

/// Writes the crossover element count and returns 1, or returns 0 when the
/// report has none.
///
/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vhetsim_report_crossover(report: *const VhetsimReport, out: *mut f64) -> i32 {
    match (report.as_ref().and_then(|r| r.crossover), out.is_null()) {
        (Some(n), false) => {
            out.write(n);
            1
        }
        _ => 0,
    }
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vhetsim_report_free(report: *mut VhetsimReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Free-space path loss in dB.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vhetsim_fspl_db(distance_m: f64, frequency_hz: f64, out: *mut f64) -> VhetsimStatus {
    guard(|| write_out(out, vhetsim::channel::fspl_db(distance_m, frequency_hz)?, "out"))
}

/// Free-space loss plus molecular absorption in dB.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vhetsim_subthz_pathloss_db(
    distance_m: f64,
    frequency_hz: f64,
    absorption_db_per_km: f64,
    out: *mut f64,
) -> VhetsimStatus {
    guard(|| {
        let v = vhetsim::channel::subthz_pathloss_db(distance_m, frequency_hz, absorption_db_per_km)?;
        write_out(out, v, "out")
    })
}

/// Thermal noise power in dBm.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vhetsim_noise_power_dbm(psd_dbm_hz: f64, bandwidth_hz: f64, out: *mut f64) -> VhetsimStatus {
    guard(|| write_out(out, vhetsim::units::noise_power_dbm(psd_dbm_hz, bandwidth_hz)?, "out"))
}

/// Nearest-rank percentile of `n` samples, `p` in (0, 100).
///
/// # Safety
/// `samples` must point to `n` readable doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vhetsim_percentile(samples: *const f64, n: usize, p: f64, out: *mut f64) -> VhetsimStatus {
    guard(|| {
        if samples.is_null() {
            return Err(null("samples"));
        }
        let d = EmpiricalDistribution::new(std::slice::from_raw_parts(samples, n).to_vec())?;
        write_out(out, d.percentile(p)?, "out")
    })
}

/// Max-min power allocation for `relays x users` two-hop links. Inputs are
/// row-major `relays x users` arrays of hop-1 SINRs and hop-2 gains; `budget`
/// is the transmit power budget of each relay. Writes the row-major power
/// matrix into `q_out` and the achieved minimum SINR into `min_sinr_out`.
///
/// # Safety
/// Array pointers must cover `relays * users` doubles.
#[no_mangle]
pub unsafe extern "C" fn vhetsim_maxmin_allocate(
    hop1_sinr: *const f64,
    hop2_gain: *const f64,
    relays: usize,
    users: usize,
    budget: f64,
    tolerance: f64,
    q_out: *mut f64,
    min_sinr_out: *mut f64,
) -> VhetsimStatus {
    guard(|| {
        if hop1_sinr.is_null() || hop2_gain.is_null() || q_out.is_null() || min_sinr_out.is_null() {
            return Err(null("array argument"));
        }
        let len = relays
            .checked_mul(users)
            .filter(|&l| l > 0)
            .ok_or_else(|| Failure(VhetsimStatus::InvalidArgument, "empty or oversized instance".into()))?;
        let a = std::slice::from_raw_parts(hop1_sinr, len);
        let g = std::slice::from_raw_parts(hop2_gain, len);
        let mut cells = Vec::with_capacity(len);
        for i in 0..len {
            cells.push(TwoHopLink::new(a[i], g[i])?);
        }
        let links = DMatrix::from_row_slice(relays, users, &cells);
        let res = maxmin_allocate(&links, budget, tolerance)?;
        let q = std::slice::from_raw_parts_mut(q_out, len);
        for m in 0..relays {
            for k in 0..users {
                q[m * users + k] = res.allocation.q[(m, k)];
            }
        }
        min_sinr_out.write(res.min_sinr);
        Ok(())
    })
}
