//! C ABI for the numerosity core.
//!
//! Every function returns an [`NmStatus`]; results come back through out
//! pointers. Strings crossing the boundary are NUL-terminated UTF-8. Strings
//! returned by the library must be released with [`nm_string_free`], handles
//! with their matching `*_free`. On failure [`nm_last_error_message`] describes
//! the error for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

use chrono::DateTime;
use numerosity::log::ParsedLog;
use numerosity::repo::{parse_payload, LogFormat};
use numerosity::session::{Session, SessionError, UserInput};
use numerosity::stats::{aggregate, binomial_tail, binomial_tail_ln, pearson, render_report, AnalysisOptions, ReportFormat};
use numerosity::trial::GameConfig;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Parse = 4,
    IllegalTransition = 5,
    Domain = 6,
    Internal = 7,
}

/// Opaque game session.
pub struct NmSession(Session);

/// Opaque parsed log.
pub struct NmLog(ParsedLog);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: NmStatus, message: impl ToString) -> NmStatus {
    let msg = CString::new(message.to_string().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
    status
}

/// Message for the last failing call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Runs `f`, turning a panic into `Internal`.
fn guard(f: impl FnOnce() -> NmStatus) -> NmStatus {
    std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)).unwrap_or_else(|_| fail(NmStatus::Internal, "panic"))
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, NmStatus> {
    if s.is_null() {
        return Err(fail(NmStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|e| fail(NmStatus::InvalidUtf8, e))
}

unsafe fn read_opt_str<'a>(s: *const c_char) -> Result<Option<&'a str>, NmStatus> {
    if s.is_null() {
        Ok(None)
    } else {
        read_str(s).map(Some)
    }
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> NmStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            NmStatus::Ok
        }
        Err(e) => fail(NmStatus::Internal, e),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, NmStatus> {
    serde_json::to_string(value).map_err(|e| fail(NmStatus::Internal, e))
}

macro_rules! check_null {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            return fail(NmStatus::NullPointer, concat!("null argument `", stringify!($p), "`"));
        })+
    };
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn nm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `P(X >= k)` for `X ~ Binomial(n, p)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nm_binomial_tail(k: u64, n: u64, p: f64, out: *mut f64) -> NmStatus {
    check_null!(out);
    match binomial_tail(k, n, p) {
        Ok(v) => {
            *out = v;
            NmStatus::Ok
        }
        Err(e) => fail(NmStatus::Domain, e),
    }
}

/// Natural log of [`nm_binomial_tail`], finite where the tail underflows.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nm_binomial_tail_ln(k: u64, n: u64, p: f64, out: *mut f64) -> NmStatus {
    check_null!(out);
    match binomial_tail_ln(k, n, p) {
        Ok(v) => {
            *out = v;
            NmStatus::Ok
        }
        Err(e) => fail(NmStatus::Domain, e),
    }
}

/// # Safety
/// `xs` and `ys` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nm_pearson(xs: *const f64, ys: *const f64, len: usize, out: *mut f64) -> NmStatus {
    check_null!(xs, ys, out);
    let (xs, ys) = (std::slice::from_raw_parts(xs, len), std::slice::from_raw_parts(ys, len));
    match pearson(xs, ys) {
        Ok(r) => {
            *out = r;
            NmStatus::Ok
        }
        Err(e) => fail(NmStatus::Domain, e),
    }
}

/// Creates a session. `config_json` may be null for the defaults.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nm_session_new(
    config_json: *const c_char,
    learner: *const c_char,
    trainer: *const c_char,
    seed: u64,
    out: *mut *mut NmSession,
) -> NmStatus {
    check_null!(out);
    guard(|| {
        let config: GameConfig = match tri!(read_opt_str(config_json)) {
            Some(json) => tri!(serde_json::from_str(json).map_err(|e| fail(NmStatus::Parse, e))),
            None => GameConfig::default(),
        };
        let (learner, trainer) = (tri!(read_str(learner)), tri!(read_str(trainer)));
        match Session::new(config, learner, trainer, seed) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(NmSession(s)));
                NmStatus::Ok
            }
            Err(e) => fail(NmStatus::InvalidArgument, e),
        }
    })
}

/// Applies one input (JSON, e.g. `{"type":"touch_slot","slot":0}`) at
/// `now_ms` milliseconds since the epoch, written to the log as wall-clock
/// time without zone conversion. Writes `{"events":[...],"record":...}`.
///
/// # Safety
/// `session` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nm_session_step(
    session: *mut NmSession,
    input_json: *const c_char,
    now_ms: i64,
    out_json: *mut *mut c_char,
) -> NmStatus {
    check_null!(session, out_json);
    guard(|| {
        let input: UserInput =
            tri!(serde_json::from_str(tri!(read_str(input_json))).map_err(|e| fail(NmStatus::Parse, e)));
        let Some(now) = DateTime::from_timestamp_millis(now_ms) else {
            return fail(NmStatus::InvalidArgument, "timestamp out of range");
        };
        match (*session).0.step(input, now.naive_utc()) {
            Ok(outcome) => {
                let json = tri!(to_json(&serde_json::json!({ "events": outcome.events, "record": outcome.record })));
                write_string(out_json, json)
            }
            Err(e @ SessionError::IllegalTransition { .. }) => fail(NmStatus::IllegalTransition, e),
            Err(e) => fail(NmStatus::InvalidArgument, e),
        }
    })
}

/// # Safety
/// `session` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nm_session_snapshot(session: *const NmSession, out_json: *mut *mut c_char) -> NmStatus {
    check_null!(session, out_json);
    let json = tri!(to_json(&(*session).0.snapshot()));
    write_string(out_json, json)
}

/// Removes and returns the queued feedback events as a JSON array.
///
/// # Safety
/// `session` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nm_session_drain_events(session: *mut NmSession, out_json: *mut *mut c_char) -> NmStatus {
    check_null!(session, out_json);
    let json = tri!(to_json(&(*session).0.drain_events()));
    write_string(out_json, json)
}

/// The session's trial log in `.csv` form.
///
/// # Safety
/// `session` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nm_session_log_csv(session: *const NmSession, out: *mut *mut c_char) -> NmStatus {
    check_null!(session, out);
    match (*session).0.log_csv() {
        Ok(csv) => write_string(out, csv),
        Err(e) => fail(NmStatus::Internal, e),
    }
}

/// # Safety
/// `session` must come from [`nm_session_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nm_session_free(session: *mut NmSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Parses a log; `format` is `"csv"` or `"txt"`.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nm_log_parse(text: *const c_char, format: *const c_char, out: *mut *mut NmLog) -> NmStatus {
    check_null!(out);
    guard(|| {
        let text = tri!(read_str(text));
        let format: LogFormat = tri!(tri!(read_str(format)).parse().map_err(|e| fail(NmStatus::InvalidArgument, e)));
        match parse_payload(text, format) {
            Ok(log) => {
                *out = Box::into_raw(Box::new(NmLog(log)));
                NmStatus::Ok
            }
            Err(e) => fail(NmStatus::Parse, e),
        }
    })
}

/// Number of records; 0 for a null handle.
///
/// # Safety
/// `log` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nm_log_len(log: *const NmLog) -> usize {
    log.as_ref().map_or(0, |l| l.0.records.len())
}

/// # Safety
/// `log` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nm_log_warning_count(log: *const NmLog) -> usize {
    log.as_ref().map_or(0, |l| l.0.warnings.len())
}

/// Record `index` as JSON.
///
/// # Safety
/// `log` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nm_log_record_json(log: *const NmLog, index: usize, out_json: *mut *mut c_char) -> NmStatus {
    check_null!(log, out_json);
    match (&*log).0.records.get(index) {
        Some(r) => {
            let json = tri!(to_json(r));
            write_string(out_json, json)
        }
        None => fail(NmStatus::InvalidArgument, format!("record index {index} out of range")),
    }
}

/// # Safety
/// `log` must come from [`nm_log_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nm_log_free(log: *mut NmLog) {
    if !log.is_null() {
        drop(Box::from_raw(log));
    }
}

/// Accuracy report over `count` logs. `options_json` (nullable) follows the
/// analysis options schema; `format` is `"md"`, `"csv"` or `"json"`.
///
/// # Safety
/// `logs` must point to `count` live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nm_analyze(
    logs: *const *const NmLog,
    count: usize,
    options_json: *const c_char,
    format: *const c_char,
    out: *mut *mut c_char,
) -> NmStatus {
    check_null!(out);
    if count > 0 && logs.is_null() {
        return fail(NmStatus::NullPointer, "null argument `logs`");
    }
    guard(|| {
        let options: AnalysisOptions = match tri!(read_opt_str(options_json)) {
            Some(json) => tri!(serde_json::from_str(json).map_err(|e| fail(NmStatus::Parse, e))),
            None => AnalysisOptions::default(),
        };
        let format: ReportFormat = tri!(tri!(read_str(format)).parse().map_err(|e| fail(NmStatus::InvalidArgument, e)));
        let handles = if count == 0 { &[][..] } else { std::slice::from_raw_parts(logs, count) };
        let mut parsed = Vec::with_capacity(count);
        for &h in handles {
            match h.as_ref() {
                Some(l) => parsed.push(l.0.clone()),
                None => return fail(NmStatus::NullPointer, "null log handle"),
            }
        }
        match aggregate(&parsed, &options) {
            Ok(report) => write_string(out, render_report(&report, format)),
            Err(e) => fail(NmStatus::Domain, e),
        }
    })
}
