//! C interface to `qhmm-core`.
//!
//! Models live behind an opaque [`QhmmModel`] handle. Every fallible call
//! returns a [`QhmmStatus`]; on failure the message is available from
//! [`qhmm_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qhmm_core::language::enumerate_sequences;
use qhmm_core::qhmm::Model;

/// Opaque model handle.
pub struct QhmmModel {
    inner: Model,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QhmmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidModel = 3,
    InvalidArgument = 4,
    BufferTooSmall = 5,
    Internal = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn fail(status: QhmmStatus, msg: impl Into<String>) -> QhmmStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> QhmmStatus) -> QhmmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(QhmmStatus::Internal, "panic inside qhmm"),
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qhmm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qhmm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parse a model from JSON (classical, Kraus or unitary form).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qhmm_model_from_json(json: *const c_char, out: *mut *mut QhmmModel) -> QhmmStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(QhmmStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let Ok(s) = CStr::from_ptr(json).to_str() else {
            return fail(QhmmStatus::InvalidUtf8, "model JSON is not UTF-8");
        };
        match Model::from_json(s) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(QhmmModel { inner }));
                QhmmStatus::Ok
            }
            Err(e) => fail(QhmmStatus::InvalidModel, e.to_string()),
        }
    })
}

/// Release a model. NULL is ignored.
///
/// # Safety
/// `model` must come from [`qhmm_model_from_json`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn qhmm_model_free(model: *mut QhmmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qhmm_model_n_symbols(model: *const QhmmModel, out: *mut usize) -> QhmmStatus {
    guard(|| {
        let (Some(m), false) = (model.as_ref(), out.is_null()) else {
            return fail(QhmmStatus::NullPointer, "null argument");
        };
        *out = m.inner.n_symbols();
        QhmmStatus::Ok
    })
}

/// Probability of the symbol sequence `seq[0..len]`.
///
/// # Safety
/// `seq` must point to `len` readable values (may be NULL when `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn qhmm_sequence_probability(
    model: *const QhmmModel,
    seq: *const usize,
    len: usize,
    out: *mut f64,
) -> QhmmStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(QhmmStatus::NullPointer, "null model");
        };
        if out.is_null() || (seq.is_null() && len > 0) {
            return fail(QhmmStatus::NullPointer, "null argument");
        }
        let s = if len == 0 { &[][..] } else { std::slice::from_raw_parts(seq, len) };
        match m.inner.sequence_probability(s) {
            Ok(p) => {
                *out = p;
                QhmmStatus::Ok
            }
            Err(e) => fail(QhmmStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Probabilities of all `m^t` sequences of length `t` in lexicographic order.
/// `*written` receives the required length even when the buffer is too small.
///
/// # Safety
/// `buf` must have room for `cap` doubles; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qhmm_distribution(
    model: *const QhmmModel,
    t: usize,
    buf: *mut f64,
    cap: usize,
    written: *mut usize,
) -> QhmmStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(QhmmStatus::NullPointer, "null model");
        };
        if written.is_null() || (buf.is_null() && cap > 0) {
            return fail(QhmmStatus::NullPointer, "null argument");
        }
        let seqs = match enumerate_sequences(m.inner.n_symbols(), t) {
            Ok(s) => s,
            Err(e) => return fail(QhmmStatus::InvalidArgument, e.to_string()),
        };
        *written = seqs.len();
        if cap < seqs.len() {
            return fail(
                QhmmStatus::BufferTooSmall,
                format!("need {} entries, buffer has {cap}", seqs.len()),
            );
        }
        let table = match m.inner.distribution(t) {
            Ok(d) => d,
            Err(e) => return fail(QhmmStatus::InvalidArgument, e.to_string()),
        };
        let out = std::slice::from_raw_parts_mut(buf, cap);
        for (slot, s) in out.iter_mut().zip(&seqs) {
            *slot = table.get(s);
        }
        QhmmStatus::Ok
    })
}

/// Sample `shots` sequences of length `t` into `buf`, row-major
/// (`shots × t` symbols).
///
/// # Safety
/// `buf` must have room for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn qhmm_simulate(
    model: *const QhmmModel,
    t: usize,
    shots: usize,
    seed: u64,
    buf: *mut usize,
    cap: usize,
) -> QhmmStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(QhmmStatus::NullPointer, "null model");
        };
        let Some(need) = t.checked_mul(shots) else {
            return fail(QhmmStatus::InvalidArgument, "t * shots overflows");
        };
        if buf.is_null() && need > 0 {
            return fail(QhmmStatus::NullPointer, "null buffer");
        }
        if cap < need {
            return fail(QhmmStatus::BufferTooSmall, format!("need {need} entries, buffer has {cap}"));
        }
        match m.inner.simulate(t, shots, seed) {
            Ok(seqs) => {
                if need > 0 {
                    let out = std::slice::from_raw_parts_mut(buf, need);
                    for (row, s) in out.chunks_mut(t).zip(&seqs) {
                        row.copy_from_slice(s);
                    }
                }
                QhmmStatus::Ok
            }
            Err(e) => fail(QhmmStatus::InvalidArgument, e.to_string()),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_handling() {
        unsafe {
            let mut out: *mut QhmmModel = ptr::null_mut();
            assert_eq!(qhmm_model_from_json(ptr::null(), &mut out), QhmmStatus::NullPointer);
            assert!(!qhmm_last_error().is_null());
            qhmm_model_free(ptr::null_mut());
            let mut n = 0;
            assert_eq!(qhmm_model_n_symbols(ptr::null(), &mut n), QhmmStatus::NullPointer);
        }
    }
}
