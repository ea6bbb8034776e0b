use std::ffi::{CStr, CString};
use std::ptr;

use vhetsim_ffi::*;

fn last_error() -> String {
    let p = vhetsim_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn scalar_helpers() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(vhetsim_fspl_db(20e3, 120e9, &mut v), VhetsimStatus::Ok);
        assert!((v - 160.05).abs() < 0.01, "{v}");
        assert_eq!(vhetsim_subthz_pathloss_db(20e3, 120e9, 0.5, &mut v), VhetsimStatus::Ok);
        assert!((v - 170.05).abs() < 0.01, "{v}");
        assert_eq!(vhetsim_noise_power_dbm(-174.0, 1e6, &mut v), VhetsimStatus::Ok);
        assert!((v + 114.0).abs() < 1e-12);
        let samples = [40.0, 10.0, 30.0, 20.0];
        assert_eq!(vhetsim_percentile(samples.as_ptr(), 4, 50.0, &mut v), VhetsimStatus::Ok);
        assert_eq!(v, 20.0);
    }
}

#[test]
fn errors_carry_status_and_message() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(vhetsim_fspl_db(-1.0, 1e9, &mut v), VhetsimStatus::InvalidArgument);
        assert!(last_error().contains("distance"));
        assert_eq!(vhetsim_fspl_db(1.0, 1e9, ptr::null_mut()), VhetsimStatus::NullPointer);
        assert_eq!(
            vhetsim_percentile(ptr::null(), 3, 5.0, &mut v),
            VhetsimStatus::NullPointer
        );
        let s = [1.0];
        assert_eq!(
            vhetsim_percentile(s.as_ptr(), 1, 100.0, &mut v),
            VhetsimStatus::InvalidArgument
        );
        assert_eq!(vhetsim_fspl_db(f64::NAN, 1e9, &mut v), VhetsimStatus::Numerical);
    }
}

#[test]
fn config_handles() {
    let json = CString::new(r#"{"scenario": "cs2", "cs2": {"bandwidth_hz": -5}}"#).unwrap();
    let mut cfg: *mut VhetsimConfig = ptr::null_mut();
    unsafe {
        assert_eq!(vhetsim_config_parse(json.as_ptr(), &mut cfg), VhetsimStatus::Config);
        assert!(cfg.is_null());
        assert!(last_error().contains("cs2.bandwidth_hz"));

        let json = CString::new(r#"{"scenario": "cs2", "cs2": {}}"#).unwrap();
        assert_eq!(vhetsim_config_parse(json.as_ptr(), &mut cfg), VhetsimStatus::Ok);
        assert_eq!(vhetsim_config_set_plan(cfg, 3, 0, 1), VhetsimStatus::Config);
        assert_eq!(vhetsim_config_set_plan(cfg, 3, 2, 1), VhetsimStatus::Ok);
        let mut text: *mut std::ffi::c_char = ptr::null_mut();
        assert_eq!(vhetsim_config_to_json(cfg, &mut text), VhetsimStatus::Ok);
        let rendered = CStr::from_ptr(text).to_str().unwrap().to_owned();
        vhetsim_string_free(text);
        assert!(rendered.contains("\"master_seed\": 3"));
        assert!(rendered.contains("\"topologies\": 2"));
        vhetsim_config_free(cfg);

        let mut d: *mut VhetsimConfig = ptr::null_mut();
        assert_eq!(vhetsim_config_default(VhetsimScenario::Cs1, &mut d), VhetsimStatus::Ok);
        vhetsim_config_free(d);
        vhetsim_config_free(ptr::null_mut());
        vhetsim_string_free(ptr::null_mut());
    }
}

#[test]
fn run_small_cs2() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = CString::new(dir.path().to_str().unwrap()).unwrap();
    let json = CString::new(r#"{"scenario": "cs2", "cs2": {"haps_element_sweep": [4, 4096]}}"#).unwrap();
    unsafe {
        let mut cfg: *mut VhetsimConfig = ptr::null_mut();
        assert_eq!(vhetsim_config_parse(json.as_ptr(), &mut cfg), VhetsimStatus::Ok);
        assert_eq!(vhetsim_config_set_plan(cfg, 11, 4, 1), VhetsimStatus::Ok);
        assert_eq!(vhetsim_config_set_output_dir(cfg, out_dir.as_ptr()), VhetsimStatus::Ok);
        let mut report: *mut VhetsimReport = ptr::null_mut();
        assert_eq!(vhetsim_run(cfg, 1, &mut report), VhetsimStatus::Ok);
        assert_eq!(vhetsim_report_len(report), 3);
        let mut row = std::mem::zeroed::<VhetsimSummaryRow>();
        assert_eq!(vhetsim_report_row(report, 0, &mut row), VhetsimStatus::Ok);
        assert_eq!(CStr::from_ptr(row.scheme).to_str().unwrap(), "aerial");
        assert_eq!(CStr::from_ptr(row.metric_name).to_str().unwrap(), "min_rate_bps");
        assert_eq!((row.has_sweep_value, row.sweep_value, row.count), (1, 4.0, 4));
        assert!(row.mean > 0.0 && row.p5 <= row.p50);
        assert_eq!(vhetsim_report_row(report, 3, &mut row), VhetsimStatus::InvalidArgument);
        let mut n = 0.0;
        let _ = vhetsim_report_crossover(report, &mut n);
        vhetsim_report_free(report);
        vhetsim_config_free(cfg);
    }
    for f in ["trials.csv", "summary.csv", "cdf.csv"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
}

#[test]
fn maxmin_through_abi() {
    // symmetric 2x2: equal split is optimal
    let a = [10.0, 10.0, 10.0, 10.0];
    let g = [5.0, 5.0, 5.0, 5.0];
    let mut q = [0.0; 4];
    let mut s = 0.0;
    unsafe {
        let st = vhetsim_maxmin_allocate(a.as_ptr(), g.as_ptr(), 2, 2, 1.0, 1e-9, q.as_mut_ptr(), &mut s);
        assert_eq!(st, VhetsimStatus::Ok, "{}", last_error());
        for x in q {
            assert!((x - 0.5).abs() < 1e-4, "{q:?}");
        }
        // branch SINR a*g*q/(a+g*q+1) = 10*2.5/13.5 per branch, two branches
        assert!((s - 2.0 * 25.0 / 13.5).abs() < 1e-5, "{s}");
        let bad = [-1.0, 1.0, 1.0, 1.0];
        let st = vhetsim_maxmin_allocate(bad.as_ptr(), g.as_ptr(), 2, 2, 1.0, 1e-9, q.as_mut_ptr(), &mut s);
        assert_eq!(st, VhetsimStatus::InvalidArgument);
        let st = vhetsim_maxmin_allocate(a.as_ptr(), g.as_ptr(), 0, 2, 1.0, 1e-9, q.as_mut_ptr(), &mut s);
        assert_eq!(st, VhetsimStatus::InvalidArgument);
    }
}
