use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use ratcheb_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(rc_last_error_message()) }
        .to_str()
        .unwrap()
        .to_string()
}

#[test]
fn chebyshev_t3_through_handles() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(
            rc_problem_parse(
                c("[-1,1]").as_ptr(),
                c("inf:3").as_ptr(),
                c("inf").as_ptr(),
                &mut p
            ),
            RcStatus::Ok
        );
        let mut n = 0;
        assert_eq!(rc_problem_degree(p, &mut n), RcStatus::Ok);
        assert_eq!(n, 3);
        let mut s = ptr::null_mut();
        assert_eq!(rc_solve(p, ptr::null(), &mut s), RcStatus::Ok);
        let mut m = 0.0;
        assert_eq!(rc_solution_m(s, &mut m), RcStatus::Ok);
        assert!((m - 4.0).abs() < 1e-9);
        let mut v = 0.0;
        assert_eq!(rc_solution_eval(s, 0.3, &mut v), RcStatus::Ok);
        assert!((v - (4.0 * 0.027 - 0.9)).abs() < 1e-9);
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(
            rc_solution_eval_complex(s, 0.0, 1.0, &mut re, &mut im),
            RcStatus::Ok
        );
        assert!(re.abs() < 1e-9 && (im + 7.0).abs() < 1e-9);
        let mut len = 0;
        assert_eq!(rc_solution_alternation_len(s, &mut len), RcStatus::Ok);
        assert_eq!(len, 4);
        let (mut x, mut sign) = (0.0, 0);
        assert_eq!(
            rc_solution_alternation_point(s, 0, &mut x, &mut sign),
            RcStatus::Ok
        );
        assert!((x + 1.0).abs() < 1e-9 && sign == -1);
        assert_eq!(
            rc_solution_alternation_point(s, 4, &mut x, &mut sign),
            RcStatus::InvalidArgument
        );
        assert!(last_error().contains("out of range"));
        let (mut defect, mut iters) = (1.0, 0);
        assert_eq!(
            rc_solution_diagnostics(s, &mut defect, &mut iters),
            RcStatus::Ok
        );
        assert!(defect <= 1e-10);
        let mut pass = 0;
        assert_eq!(rc_solution_verify(s, 200, 1, &mut pass), RcStatus::Ok);
        assert_eq!(pass, 1);
        let mut json = ptr::null_mut();
        assert_eq!(rc_solution_to_json(s, &mut json), RcStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_string();
        rc_string_free(json);
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["schema"], 1);
        rc_solution_free(s);
        rc_problem_free(p);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(
            rc_problem_parse(
                c("[1,-1]").as_ptr(),
                c("inf:1").as_ptr(),
                c("inf").as_ptr(),
                &mut p
            ),
            RcStatus::InvalidArgument
        );
        assert!(p.is_null());
        assert!(last_error().contains("a < b"));
        assert_eq!(
            rc_problem_parse(
                c("[-1,1]").as_ptr(),
                c("0.5:1").as_ptr(),
                c("inf").as_ptr(),
                &mut p
            ),
            RcStatus::Domain
        );
        assert_eq!(
            rc_problem_parse(ptr::null(), c("inf:1").as_ptr(), c("inf").as_ptr(), &mut p),
            RcStatus::NullPointer
        );
        assert_eq!(
            rc_problem_parse(
                c("[-1,1]").as_ptr(),
                c("inf:1").as_ptr(),
                c("inf").as_ptr(),
                ptr::null_mut()
            ),
            RcStatus::NullPointer
        );
        let mut m = 0.0;
        assert_eq!(rc_solution_m(ptr::null(), &mut m), RcStatus::NullPointer);

        assert_eq!(
            rc_problem_parse(
                c("[-1,-0.3];[0.2,1]").as_ptr(),
                c("inf:6,-0.05:4").as_ptr(),
                c("inf").as_ptr(),
                &mut p
            ),
            RcStatus::Ok
        );
        assert!(last_error().is_empty());
        let opts = RcSolveOptions {
            max_iter: 1,
            ..rc_solve_options_default()
        };
        let mut s = ptr::null_mut();
        assert_eq!(rc_solve(p, &opts, &mut s), RcStatus::NonConvergence);
        assert!(s.is_null());
        rc_problem_free(p);
        rc_problem_free(ptr::null_mut());
        rc_solution_free(ptr::null_mut());
    }
}

#[test]
fn green_handle() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(
            rc_green_new(c("[-1,1]").as_ptr(), c("inf").as_ptr(), &mut g),
            RcStatus::Ok
        );
        let mut v = 0.0;
        assert_eq!(rc_green_eval(g, 3.0, 0.0, &mut v), RcStatus::Ok);
        assert!((v - 3.0_f64.acosh()).abs() < 1e-9);
        rc_green_free(g);
    }
}

#[test]
fn header_declares_every_export() {
    let header =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/ratcheb.h"))
            .unwrap();
    let src =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 18);
    for name in exports {
        assert!(
            header.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
    assert!(header.contains("RC_STATUS_NON_CONVERGENCE = 3"));
}

#[test]
fn c_program_links_against_static_library() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let exe = Path::new(env!("CARGO_TARGET_TMPDIR")).join("ratcheb_smoke");
    let lib_dir = Path::new(env!("CARGO_TARGET_TMPDIR"))
        .parent()
        .unwrap()
        .join(profile_dir());
    let status = Command::new(cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(lib_dir.join("libratcheb_ffi.a"))
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}

fn profile_dir() -> &'static str {
    if cfg!(debug_assertions) {
        "debug"
    } else {
        "release"
    }
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|cc| Command::new(cc).arg("--version").output().is_ok())
        .ok_or(())
}
