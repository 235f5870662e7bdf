use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use mimo_wiretap_ffi::*;

fn last_error() -> String {
    let p = wt_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn scalar_channel_round_trip() {
    // |h_b|^2 = 4, |h_e|^2 = 1, P = 2: ln(9/3)
    let (hb, he) = ([2.0], [1.0]);
    let mut ch = ptr::null_mut();
    let st = unsafe { wt_channel_new(1, 1, 1, hb.as_ptr(), ptr::null(), he.as_ptr(), ptr::null(), &mut ch) };
    assert_eq!(st, WtStatus::Ok);

    let (mut nt, mut nr, mut ne) = (0, 0, 0);
    assert_eq!(unsafe { wt_channel_dims(ch, &mut nt, &mut nr, &mut ne) }, WtStatus::Ok);
    assert_eq!((nt, nr, ne), (1, 1, 1));

    for algo in [WtAlgorithm::Adca, WtAlgorithm::Pbra, WtAlgorithm::Dca] {
        let mut res = ptr::null_mut();
        assert_eq!(unsafe { wt_solve(ch, algo, 2.0, 5, &mut res) }, WtStatus::Ok);
        let mut rate = 0.0;
        assert_eq!(unsafe { wt_result_secrecy_rate(res, &mut rate) }, WtStatus::Ok);
        assert!((rate - 3f64.ln()).abs() < 1e-8, "{algo:?}: {rate}");

        let (mut re, mut im) = ([0.0; 1], [9.0; 1]);
        assert_eq!(unsafe { wt_result_covariance(res, re.as_mut_ptr(), im.as_mut_ptr(), 1) }, WtStatus::Ok);
        assert!((re[0] - 2.0).abs() < 1e-8 && im[0] == 0.0);

        let mut mm = 0.0;
        assert_eq!(unsafe { wt_result_minimax_value(res, &mut mm) }, WtStatus::Ok);
        assert_eq!(mm.is_nan(), algo != WtAlgorithm::Pbra);
        let mut iters = 0;
        assert_eq!(unsafe { wt_result_iterations(res, &mut iters) }, WtStatus::Ok);
        assert!(iters >= 1);
        unsafe { wt_result_free(res) };
    }
    unsafe { wt_channel_free(ch) };
}

#[test]
fn sampled_channel_covariance_is_feasible() {
    let mut ch = ptr::null_mut();
    assert_eq!(unsafe { wt_channel_sample(4, 3, 4, 0.9, 0.9, 1, &mut ch) }, WtStatus::Ok);
    let mut res = ptr::null_mut();
    assert_eq!(unsafe { wt_solve(ch, WtAlgorithm::Adca, 10.0, 5, &mut res) }, WtStatus::Ok);

    let (mut re, mut im) = (vec![0.0; 16], vec![0.0; 16]);
    let st = unsafe { wt_result_covariance(res, re.as_mut_ptr(), im.as_mut_ptr(), 15) };
    assert_eq!(st, WtStatus::DimensionMismatch);
    assert!(last_error().contains("16"));

    assert_eq!(unsafe { wt_result_covariance(res, re.as_mut_ptr(), im.as_mut_ptr(), 16) }, WtStatus::Ok);
    let trace: f64 = (0..4).map(|i| re[5 * i]).sum();
    assert!((trace - 10.0).abs() < 1e-8);
    for i in 0..4 {
        for j in 0..4 {
            assert!((re[4 * i + j] - re[4 * j + i]).abs() < 1e-10);
            assert!((im[4 * i + j] + im[4 * j + i]).abs() < 1e-10);
        }
    }
    unsafe {
        wt_result_free(res);
        wt_channel_free(ch);
    }
}

#[test]
fn errors_are_reported() {
    let mut ch = ptr::null_mut();
    let st = unsafe { wt_channel_new(1, 1, 1, ptr::null(), ptr::null(), ptr::null(), ptr::null(), &mut ch) };
    assert_eq!(st, WtStatus::NullPointer);
    assert!(last_error().contains("h_b"));
    assert!(ch.is_null());

    assert_eq!(unsafe { wt_channel_sample(0, 1, 1, 0.5, 0.5, 0, &mut ch) }, WtStatus::InvalidArgument);
    assert_eq!(unsafe { wt_channel_sample(2, 2, 2, 1.5, 0.5, 0, &mut ch) }, WtStatus::InvalidArgument);

    let nan = [f64::NAN];
    let st = unsafe { wt_channel_new(1, 1, 1, nan.as_ptr(), ptr::null(), nan.as_ptr(), ptr::null(), &mut ch) };
    assert_eq!(st, WtStatus::InvalidArgument);

    assert_eq!(unsafe { wt_channel_sample(2, 2, 2, 0.5, 0.5, 0, &mut ch) }, WtStatus::Ok);
    let mut res = ptr::null_mut();
    assert_eq!(unsafe { wt_solve(ch, WtAlgorithm::Adca, -1.0, 5, &mut res) }, WtStatus::InvalidArgument);
    assert_eq!(unsafe { wt_solve(ptr::null(), WtAlgorithm::Adca, 1.0, 5, &mut res) }, WtStatus::NullPointer);
    assert_eq!(unsafe { wt_solve(ch, WtAlgorithm::Adca, 1.0, 5, ptr::null_mut()) }, WtStatus::NullPointer);
    let mut rate = 0.0;
    assert_eq!(unsafe { wt_result_secrecy_rate(ptr::null(), &mut rate) }, WtStatus::NullPointer);
    unsafe {
        wt_channel_free(ch);
        wt_channel_free(ptr::null_mut());
        wt_result_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_the_api_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/mimo_wiretap.h");
    let text = std::fs::read_to_string(&header).expect("header is generated by the build script");
    for name in [
        "wt_last_error_message",
        "wt_channel_new",
        "wt_channel_sample",
        "wt_channel_free",
        "wt_channel_dims",
        "wt_solve",
        "wt_result_free",
        "wt_result_secrecy_rate",
        "wt_result_minimax_value",
        "wt_result_iterations",
        "wt_result_covariance",
        "WT_STATUS_NULL_POINTER",
        "WT_ALGORITHM_PBRA",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }

    let Ok(status) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(&header)
        .status()
    else {
        eprintln!("cc not found, skipping syntax check");
        return;
    };
    assert!(status.success());
}
