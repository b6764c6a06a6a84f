use std::ffi::{CStr, CString};
use std::ptr;

use qhmm_ffi::*;

const AD: &str = include_str!("../../../models/amplitude_damping.json");
const MARKET: &str = include_str!("../../../models/market.json");

fn load(json: &str) -> *mut QhmmModel {
    let c = CString::new(json).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { qhmm_model_from_json(c.as_ptr(), &mut m) }, QhmmStatus::Ok);
    assert!(!m.is_null());
    m
}

fn last_error() -> String {
    let p = qhmm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn amplitude_damping_probabilities() {
    let m = load(AD);
    unsafe {
        let mut n = 0;
        assert_eq!(qhmm_model_n_symbols(m, &mut n), QhmmStatus::Ok);
        assert_eq!(n, 2);
        let mut p = 0.0;
        assert_eq!(qhmm_sequence_probability(m, [1usize, 1, 0].as_ptr(), 3, &mut p), QhmmStatus::Ok);
        assert!((p - 0.0625).abs() < 1e-12);
        assert_eq!(qhmm_sequence_probability(m, ptr::null(), 0, &mut p), QhmmStatus::Ok);
        assert!((p - 1.0).abs() < 1e-12);

        let mut buf = [0.0; 4];
        let mut w = 0;
        assert_eq!(qhmm_distribution(m, 2, buf.as_mut_ptr(), 4, &mut w), QhmmStatus::Ok);
        assert_eq!(w, 4);
        let want = [0.75, 0.0, 0.125, 0.125];
        assert!(buf.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12));
        qhmm_model_free(m);
    }
}

#[test]
fn buffer_and_argument_errors() {
    let m = load(MARKET);
    unsafe {
        let mut buf = [0.0; 3];
        let mut w = 0;
        assert_eq!(qhmm_distribution(m, 2, buf.as_mut_ptr(), 3, &mut w), QhmmStatus::BufferTooSmall);
        assert_eq!(w, 4);
        assert!(last_error().contains("need 4"));

        let mut p = 0.0;
        assert_eq!(qhmm_sequence_probability(m, [5usize].as_ptr(), 1, &mut p), QhmmStatus::InvalidArgument);

        let mut s = [0usize; 6];
        assert_eq!(qhmm_simulate(m, 3, 3, 1, s.as_mut_ptr(), 6), QhmmStatus::BufferTooSmall);
        assert_eq!(qhmm_simulate(m, 3, 2, 1, s.as_mut_ptr(), 6), QhmmStatus::Ok);
        assert!(s.iter().all(|&x| x < 2));
        let mut again = [0usize; 6];
        qhmm_simulate(m, 3, 2, 1, again.as_mut_ptr(), 6);
        assert_eq!(s, again);
        qhmm_model_free(m);
    }
}

#[test]
fn bad_models() {
    let mut m = ptr::null_mut();
    let junk = CString::new("{\"nope\": 1}").unwrap();
    assert_eq!(unsafe { qhmm_model_from_json(junk.as_ptr(), &mut m) }, QhmmStatus::InvalidModel);
    assert!(m.is_null());
    assert!(last_error().contains("key"));
    let bad = [0xffu8, 0];
    assert_eq!(
        unsafe { qhmm_model_from_json(bad.as_ptr().cast(), &mut m) },
        QhmmStatus::InvalidUtf8
    );
    let v = unsafe { CStr::from_ptr(qhmm_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let h = include_str!("../include/qhmm.h");
    for f in [
        "qhmm_last_error",
        "qhmm_version",
        "qhmm_model_from_json",
        "qhmm_model_free",
        "qhmm_model_n_symbols",
        "qhmm_sequence_probability",
        "qhmm_distribution",
        "qhmm_simulate",
        "typedef struct QhmmModel QhmmModel",
    ] {
        assert!(h.contains(f), "{f} missing from header");
    }
}
