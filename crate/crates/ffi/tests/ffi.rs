use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::ptr;

use numerosity_ffi::*;
use serde_json::Value;

const SHORT: &str = include_str!("../../core/tests/fixtures/excerpt_short.csv");

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    nm_string_free(s);
    out
}

unsafe fn last_error() -> String {
    CStr::from_ptr(nm_last_error_message()).to_str().unwrap().to_string()
}

#[test]
fn statistics_entry_points() {
    unsafe {
        let mut out = 0.0;
        assert_eq!(nm_binomial_tail(3, 4, 0.5, &mut out), NmStatus::Ok);
        assert!((out - 5.0 / 16.0).abs() < 1e-15);
        assert_eq!(nm_binomial_tail_ln(900, 1000, 0.25, &mut out), NmStatus::Ok);
        assert!(out.is_finite() && out < -700.0);
        assert_eq!(nm_binomial_tail(1, 4, 1.5, &mut out), NmStatus::Domain);

        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [2.0, 4.0, 6.0, 8.5];
        assert_eq!(nm_pearson(xs.as_ptr(), ys.as_ptr(), 4, &mut out), NmStatus::Ok);
        assert!(out > 0.99 && out <= 1.0);
        assert_eq!(nm_pearson(ptr::null(), ys.as_ptr(), 4, &mut out), NmStatus::NullPointer);
        let flat = [1.0; 4];
        assert_eq!(nm_pearson(xs.as_ptr(), flat.as_ptr(), 4, &mut out), NmStatus::Domain);
    }
}

#[test]
fn session_lifecycle() {
    unsafe {
        let mut session = ptr::null_mut();
        let config = numerosity::trial::GameConfig { trials_per_game: 2, ..Default::default() };
        let config = c(&serde_json::to_string(&config).unwrap());
        let (learner, trainer) = (c("Subject"), c("Experimenter"));
        assert_eq!(nm_session_new(config.as_ptr(), learner.as_ptr(), trainer.as_ptr(), 3, &mut session), NmStatus::Ok);

        let mut out = ptr::null_mut();
        let touch = c(r#"{"type":"touch_slot","slot":0}"#);
        let t0 = 1_652_979_720_000i64;
        assert_eq!(nm_session_step(session, touch.as_ptr(), t0, &mut out), NmStatus::IllegalTransition);
        assert!(!last_error().is_empty());

        let select = c(r#"{"type":"select_mode","mode":"heap"}"#);
        assert_eq!(nm_session_step(session, select.as_ptr(), t0, &mut out), NmStatus::Ok);
        let step: Value = serde_json::from_str(&take(out)).unwrap();
        assert!(step["record"].is_null());

        for i in 1..=2i64 {
            assert_eq!(nm_session_snapshot(session, &mut out), NmStatus::Ok);
            let snap: Value = serde_json::from_str(&take(out)).unwrap();
            let slot = snap["pending"]["trial"]["correct_index"].as_u64().unwrap();
            let input = c(&format!(r#"{{"type":"touch_slot","slot":{slot}}}"#));
            assert_eq!(nm_session_step(session, input.as_ptr(), t0 + i * 2500, &mut out), NmStatus::Ok);
            let step: Value = serde_json::from_str(&take(out)).unwrap();
            assert_eq!(step["record"]["correction"], true);
        }

        assert_eq!(nm_session_drain_events(session, &mut out), NmStatus::Ok);
        let events: Vec<Value> = serde_json::from_str(&take(out)).unwrap();
        assert!(!events.is_empty());
        assert_eq!(nm_session_drain_events(session, &mut out), NmStatus::Ok);
        assert_eq!(take(out), "[]");

        assert_eq!(nm_session_log_csv(session, &mut out), NmStatus::Ok);
        let log = numerosity::log::parse_log(&take(out)).unwrap();
        assert_eq!(log.records.len(), 2);
        assert!(log.records.iter().all(|r| r.learner == "Subject" && r.correction));

        let bad = c("{not json");
        assert_eq!(nm_session_step(session, bad.as_ptr(), t0, &mut out), NmStatus::Parse);
        nm_session_free(session);
        nm_session_free(ptr::null_mut());
    }
}

#[test]
fn parse_and_analyze_logs() {
    unsafe {
        let text = c(SHORT);
        let (csv, txt) = (c("csv"), c("txt"));
        let mut log = ptr::null_mut();
        assert_eq!(nm_log_parse(text.as_ptr(), csv.as_ptr(), &mut log), NmStatus::Ok);
        assert_eq!(nm_log_len(log), 3);
        assert_eq!(nm_log_warning_count(log), 0);
        assert_eq!(nm_log_len(ptr::null()), 0);

        let mut out = ptr::null_mut();
        assert_eq!(nm_log_record_json(log, 0, &mut out), NmStatus::Ok);
        let record: Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(record["test_no"], 1);
        assert_eq!(nm_log_record_json(log, 3, &mut out), NmStatus::InvalidArgument);

        let mut other = ptr::null_mut();
        assert_eq!(nm_log_parse(text.as_ptr(), txt.as_ptr(), &mut other), NmStatus::Parse);

        let logs = [log as *const NmLog];
        let md = c("md");
        assert_eq!(nm_analyze(logs.as_ptr(), 1, ptr::null(), md.as_ptr(), &mut out), NmStatus::Ok);
        let report = take(out);
        assert!(report.contains("Set size 3"), "{report}");
        let xml = c("xml");
        assert_eq!(nm_analyze(logs.as_ptr(), 1, ptr::null(), xml.as_ptr(), &mut out), NmStatus::InvalidArgument);
        let null_logs = [ptr::null::<NmLog>()];
        assert_eq!(nm_analyze(null_logs.as_ptr(), 1, ptr::null(), md.as_ptr(), &mut out), NmStatus::NullPointer);
        nm_log_free(log);
    }
}

#[test]
fn rejects_invalid_utf8() {
    unsafe {
        let bytes = CString::new(vec![0xffu8, 0xfe]).unwrap();
        let csv = c("csv");
        let mut log = ptr::null_mut();
        assert_eq!(nm_log_parse(bytes.as_ptr(), csv.as_ptr(), &mut log), NmStatus::InvalidUtf8);
        assert!(log.is_null());
        assert_eq!(nm_log_parse(ptr::null(), csv.as_ptr(), &mut log), NmStatus::NullPointer);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/numerosity.h")).unwrap();
    for name in [
        "nm_last_error_message",
        "nm_string_free",
        "nm_binomial_tail",
        "nm_binomial_tail_ln",
        "nm_pearson",
        "nm_session_new",
        "nm_session_step",
        "nm_session_snapshot",
        "nm_session_drain_events",
        "nm_session_log_csv",
        "nm_session_free",
        "nm_log_parse",
        "nm_log_len",
        "nm_log_warning_count",
        "nm_log_record_json",
        "nm_log_free",
        "nm_analyze",
    ] {
        assert!(header.contains(&format!(" {name}(")) || header.contains(&format!("*{name}(")), "{name} missing");
    }
    assert!(header.contains("typedef struct NmSession NmSession;"));
    assert!(header.contains("NM_STATUS_OK = 0"));
}
