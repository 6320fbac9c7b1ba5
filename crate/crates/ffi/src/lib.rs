//! C ABI over the `dmr` library.
//!
//! Every function returns a [`DmrStatus`]; results come back through out
//! pointers. On failure, `dmr_last_error` returns a message for the calling
//! thread. Strings returned to the caller must be released with
//! `dmr_string_free`, handles with their `_free` function.

use dmr::actions::{chrf, parse_action, serialize_action, turn_score};
use dmr::context::{AgentState, HistoryWindow, QueryFormat};
use dmr::dom::{count_tokens, extract_candidates, parse_html};
use dmr::encoder::{load_checkpoint, save_checkpoint, DualEncoderModel, HashEncoderConfig};
use dmr::ranking::{rank_turn, RankingResult};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    ParseError = 4,
    NotFound = 5,
    Io = 6,
    Internal = 7,
}

/// A dual-encoder model.
pub struct DmrModel(DualEncoderModel);

/// A ranked candidate list.
pub struct DmrRanking {
    result: RankingResult,
    uids: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(DmrStatus, String);

impl Failure {
    fn new(status: DmrStatus, message: impl ToString) -> Self {
        Failure(status, message.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DmrStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err(Failure::new(DmrStatus::Internal, "panic")));
    match outcome {
        Ok(()) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DmrStatus::Ok
        }
        Err(Failure(status, message)) => {
            let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
            LAST_ERROR.with(|e| *e.borrow_mut() = Some(message));
            status
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(DmrStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(DmrStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, name).map(Some)
    }
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::new(DmrStatus::NullPointer, format!("{name} is null")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(DmrStatus::NullPointer, format!("{name} is null")))
}

fn owned_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::new(DmrStatus::Internal, "string contains NUL"))
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn dmr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn dmr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dmr_count_tokens(text: *const c_char, out: *mut usize) -> DmrStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        *out_arg(out, "out")? = count_tokens(text);
        Ok(())
    })
}

/// New model with n-gram orders 2, 3 and 4.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dmr_model_new(base_dim: usize, proj_dim: usize, seed: u64, out: *mut *mut DmrModel) -> DmrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let config = HashEncoderConfig {
            base_dim,
            proj_dim,
            seed,
            ..HashEncoderConfig::default()
        };
        let model = DualEncoderModel::init(&config).map_err(|e| Failure::new(DmrStatus::InvalidArgument, e))?;
        *out = Box::into_raw(Box::new(DmrModel(model)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dmr_model_load(path: *const c_char, out: *mut *mut DmrModel) -> DmrStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let model = load_checkpoint(Path::new(path)).map_err(|e| {
            let status = match e {
                dmr::encoder::EncoderError::Io(_) => DmrStatus::Io,
                _ => DmrStatus::ParseError,
            };
            Failure::new(status, e)
        })?;
        *out = Box::into_raw(Box::new(DmrModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dmr_model_save(model: *const DmrModel, path: *const c_char) -> DmrStatus {
    guard(|| {
        let model = handle(model, "model")?;
        let path = str_arg(path, "path")?;
        save_checkpoint(&model.0, Path::new(path)).map_err(|e| Failure::new(DmrStatus::Io, e))
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dmr_model_free(model: *mut DmrModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Ranks the candidate elements of `html` against `utterance`, with no
/// interaction history. `target_uid` may be null. `token_limit` 0 means
/// unlimited. The ranking keeps every candidate; `k` is recorded for
/// callers that only want the head.
///
/// # Safety
/// `model` must be a live handle, string arguments NUL-terminated (or null
/// where allowed) and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dmr_rank_html(
    model: *const DmrModel,
    html: *const c_char,
    utterance: *const c_char,
    target_uid: *const c_char,
    token_limit: usize,
    k: usize,
    out: *mut *mut DmrRanking,
) -> DmrStatus {
    guard(|| {
        let model = handle(model, "model")?;
        let html = str_arg(html, "html")?;
        let utterance = str_arg(utterance, "utterance")?;
        let target = opt_str_arg(target_uid, "target_uid")?;
        let out = out_arg(out, "out")?;
        let dom = parse_html(html).map_err(|e| Failure::new(DmrStatus::ParseError, e))?;
        let limit = (token_limit > 0).then_some(token_limit);
        let candidates = extract_candidates(&dom, target, limit).map_err(|e| Failure::new(DmrStatus::NotFound, e))?;
        let state = AgentState {
            turn_index: 0,
            dom,
            utterance: utterance.to_owned(),
            history: HistoryWindow {
                turns: Vec::new(),
                window_size: 0,
            },
            screenshot_ref: None,
            viewport: None,
            candidates,
        };
        let result = rank_turn(&state, &model.0, k, &QueryFormat::default())
            .map_err(|e| Failure::new(DmrStatus::InvalidArgument, e))?;
        let uids = result
            .scored
            .iter()
            .map(|s| CString::new(s.uid.as_str()).map_err(|_| Failure::new(DmrStatus::Internal, "uid contains NUL")))
            .collect::<Result<_, _>>()?;
        *out = Box::into_raw(Box::new(DmrRanking { result, uids }));
        Ok(())
    })
}

/// Number of ranked candidates, or 0 for a null handle.
///
/// # Safety
/// `ranking` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dmr_ranking_len(ranking: *const DmrRanking) -> usize {
    ranking.as_ref().map_or(0, |r| r.uids.len())
}

/// uid of the candidate at 0-based position `i`. The string is owned by the
/// ranking.
///
/// # Safety
/// `ranking` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dmr_ranking_uid(ranking: *const DmrRanking, i: usize, out: *mut *const c_char) -> DmrStatus {
    guard(|| {
        let r = handle(ranking, "ranking")?;
        let uid = r
            .uids
            .get(i)
            .ok_or_else(|| Failure::new(DmrStatus::InvalidArgument, format!("index {i} out of range")))?;
        *out_arg(out, "out")? = uid.as_ptr();
        Ok(())
    })
}

/// # Safety
/// `ranking` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dmr_ranking_score(ranking: *const DmrRanking, i: usize, out: *mut f64) -> DmrStatus {
    guard(|| {
        let r = handle(ranking, "ranking")?;
        let s = r
            .result
            .scored
            .get(i)
            .ok_or_else(|| Failure::new(DmrStatus::InvalidArgument, format!("index {i} out of range")))?;
        *out_arg(out, "out")? = s.score;
        Ok(())
    })
}

/// 1-based rank of the target, or 0 when no target was given.
///
/// # Safety
/// `ranking` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dmr_ranking_target_rank(ranking: *const DmrRanking) -> usize {
    ranking.as_ref().and_then(|r| r.result.target_rank).unwrap_or(0)
}

/// # Safety
/// `ranking` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dmr_ranking_free(ranking: *mut DmrRanking) {
    if !ranking.is_null() {
        drop(Box::from_raw(ranking));
    }
}

/// # Safety
/// String arguments must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dmr_chrf(
    prediction: *const c_char,
    reference: *const c_char,
    max_order: usize,
    out: *mut f64,
) -> DmrStatus {
    guard(|| {
        let p = str_arg(prediction, "prediction")?;
        let r = str_arg(reference, "reference")?;
        if max_order == 0 {
            return Err(Failure::new(DmrStatus::InvalidArgument, "max_order must be >= 1"));
        }
        *out_arg(out, "out")? = chrf(p, r, max_order);
        Ok(())
    })
}

/// Parses an action string and returns its canonical form.
///
/// # Safety
/// `text` must be NUL-terminated; `out` writable. Free the result with
/// `dmr_string_free`.
#[no_mangle]
pub unsafe extern "C" fn dmr_parse_action(text: *const c_char, out: *mut *mut c_char) -> DmrStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let out = out_arg(out, "out")?;
        let action = parse_action(text).map_err(|e| Failure::new(DmrStatus::ParseError, e))?;
        *out = owned_string(serialize_action(&action))?;
        Ok(())
    })
}

/// Final score of a predicted action against the reference, both given as
/// action strings.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dmr_turn_score(
    prediction: *const c_char,
    reference: *const c_char,
    max_order: usize,
    out: *mut f64,
) -> DmrStatus {
    guard(|| {
        let parse = |s| parse_action(s).map_err(|e| Failure::new(DmrStatus::ParseError, e));
        let p = parse(str_arg(prediction, "prediction")?)?;
        let r = parse(str_arg(reference, "reference")?)?;
        if max_order == 0 {
            return Err(Failure::new(DmrStatus::InvalidArgument, "max_order must be >= 1"));
        }
        *out_arg(out, "out")? = turn_score(&p, &r, max_order).final_score;
        Ok(())
    })
}
