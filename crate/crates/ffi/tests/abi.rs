use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use ers_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = ers_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn parse(spec: &str) -> *mut ErsLaw {
    let mut law = ptr::null_mut();
    let status = unsafe { ers_law_parse(c(spec).as_ptr(), &mut law) };
    assert_eq!(status, ErsStatus::Ok, "{}", last_error());
    law
}

#[test]
fn exact_time_and_bound_through_the_abi() {
    let law = parse(r#"{ type = "DPRL", kappa1 = 1.0, kappa2 = 1.0, gamma1 = 0.5, gamma2 = 1.5 }"#);
    let mut est = ErsEstimate {
        kind: 9,
        time: 0.0,
        formula: 0,
    };
    unsafe {
        assert_eq!(ers_settling_bound(law, &mut est), ErsStatus::Ok);
        assert_eq!(est.kind, 1);
        assert!((est.time - std::f64::consts::PI).abs() < 1e-12);
        let label = CStr::from_ptr(ers_formula_label(est.formula)).to_str().unwrap();
        assert_eq!(label, "key.ts.bound.2");

        assert_eq!(ers_settling_time(law, 1.0, &mut est), ErsStatus::Ok);
        assert_eq!(est.kind, 0);
        assert!((est.time - std::f64::consts::FRAC_PI_2).abs() < 1e-12);

        let mut r = 0.0;
        assert_eq!(ers_law_rectify(law, 4.0, &mut r), ErsStatus::Ok);
        assert!((r + 2.0 + 8.0).abs() < 1e-12);

        assert_eq!(ers_residual_radius(law, 0.01, &mut r), ErsStatus::Unsupported);
        ers_law_free(law);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut law = ptr::null_mut();
    unsafe {
        assert_eq!(ers_law_parse(ptr::null(), &mut law), ErsStatus::NullPointer);
        assert_eq!(
            ers_law_parse(c("{ type = \"Nope\" }").as_ptr(), &mut law),
            ErsStatus::InvalidArgument
        );
        assert!(law.is_null());
        assert_eq!(
            ers_law_parse(c(r#"{ type = "SPRL", kappa = 1.0, gamma = 2.0 }"#).as_ptr(), &mut law),
            ErsStatus::InvalidArgument
        );
        assert!(last_error().contains("gamma"));
        let mut est = ErsEstimate {
            kind: 0,
            time: 0.0,
            formula: 0,
        };
        assert_eq!(ers_settling_time(ptr::null(), 1.0, &mut est), ErsStatus::NullPointer);
        assert!(ers_formula_label(10_000).is_null());
        ers_law_free(ptr::null_mut());
        ers_trace_free(ptr::null_mut());
        ers_string_free(ptr::null_mut());
    }
    let fractional =
        parse(r#"{ type = "FractionalExp", rho = 1.0, kappa = 1.0, alpha = 0.5, beta = 3.0, m = 1, estar = 1.0 }"#);
    let mut est = ErsEstimate {
        kind: 0,
        time: 0.0,
        formula: 0,
    };
    unsafe {
        assert_eq!(ers_settling_time(fractional, 1.0, &mut est), ErsStatus::Unsupported);
        ers_law_free(fractional);
    }
}

#[test]
fn scenario_run_exposes_qp_trace_and_report() {
    let config = c(r#"
[[scenario]]
name = "bench"
problem = { type = "benchmark" }
law = { type = "DPRL", kappa1 = 1.0, kappa2 = 1.0, gamma1 = 0.5, gamma2 = 1.5 }
numerics = { dt = 1e-3, horizon = 4.0 }
"#);
    let mut trace = ptr::null_mut();
    unsafe {
        assert_eq!(
            ers_run_scenario(config.as_ptr(), &mut trace),
            ErsStatus::Ok,
            "{}",
            last_error()
        );
        assert_eq!(ers_trace_len(trace), 4001);
        assert_eq!(ers_trace_width(trace), 3);
        let (mut t, mut e) = (0.0, [0.0; 3]);
        assert_eq!(ers_trace_sample(trace, 0, &mut t, e.as_mut_ptr()), ErsStatus::Ok);
        assert_eq!((t, e), (0.0, [1.0, 0.0, -1.0]));
        let settle = ers_trace_settling_time(trace, 1e-6);
        assert!(settle > 0.0 && settle <= std::f64::consts::PI);

        let json = ers_trace_report_json(trace);
        let report: serde_json::Value = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(report["scenario"], "bench");
        assert_eq!(report["pass"], true);
        ers_string_free(json);
        ers_trace_free(trace);

        assert_eq!(ers_run_scenario(c("").as_ptr(), &mut trace), ErsStatus::InvalidArgument);
        assert!(trace.is_null());
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/abi-<hash>
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("libers_ffi.a");
    assert!(lib.is_file(), "missing {}", lib.display());
    let exe = profile_dir.join("ers_ffi_smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("a C compiler on PATH");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
