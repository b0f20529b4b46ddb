//! C interface to the adaptive questionnaire engine.
//!
//! Handles are opaque. Every fallible function returns a `VaaStatus`; on
//! failure `vaa_last_error()` describes the problem for the calling
//! thread. A session keeps its engine alive, so the two may be freed in
//! either order.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use vaa_core::engine::{Engine, EngineConfig, Respondent};
use vaa_core::latent::IdealModel;
use vaa_core::selectors::{select, SelectorKind};
use vaa_core::{Error, ReactionMatrix, RecType};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VaaStatus {
    Ok = 0,
    /// The questionnaire has no further question.
    Done = 1,
    NullArgument = -1,
    InvalidInput = -2,
    UnknownQuestion = -3,
    AlreadyAnswered = -4,
    UnknownSelector = -5,
    Io = -6,
    Internal = -7,
    Panic = -8,
}

/// Type I matches on answered questions, Type II on answers completed
/// with predictions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[allow(clippy::upper_case_acronyms)]
pub enum VaaRecType {
    I = 1,
    II = 2,
}

pub struct VaaEngine {
    engine: Arc<Engine>,
    question_ids: Vec<CString>,
    candidate_ids: Vec<CString>,
}

pub struct VaaSession {
    engine: Arc<Engine>,
    selector: SelectorKind,
    respondent: Respondent,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type FfiResult<T> = Result<T, Failure>;

fn status_of(e: &Error) -> VaaStatus {
    match e {
        Error::Input(_) | Error::Degenerate(_) | Error::Csv(_) | Error::Json(_) => VaaStatus::InvalidInput,
        Error::UnknownQuestion(_) => VaaStatus::UnknownQuestion,
        Error::AlreadyAnswered(_) => VaaStatus::AlreadyAnswered,
        Error::UnknownSelector { .. } => VaaStatus::UnknownSelector,
        Error::Io { .. } => VaaStatus::Io,
        _ => VaaStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> FfiResult<VaaStatus>) -> VaaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("`{what}` is null"));
            VaaStatus::NullArgument
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("panic inside the engine");
            VaaStatus::Panic
        }
    }
}

fn null_error(what: &'static str) -> Failure {
    Failure::Null(what)
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null_error(what));
    }
    // SAFETY: the caller passes a NUL-terminated string.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Error::Input(format!("`{what}` is not UTF-8")).into())
}

unsafe fn session_mut<'a>(s: *mut VaaSession) -> FfiResult<&'a mut VaaSession> {
    // SAFETY: non-null handles come from `vaa_session_new`.
    unsafe { s.as_mut() }.ok_or_else(|| null_error("session"))
}

fn ids(v: &[String]) -> Vec<CString> {
    v.iter().map(|s| CString::new(s.as_str()).unwrap_or_default()).collect()
}

/// Message for the last failure on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vaa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a fitted model (JSON) and the complete candidate answers (CSV)
/// and builds a grid of `resolution`² cells (0 for the default).
///
/// # Safety
/// `model_path` and `candidates_path` must be NUL-terminated strings and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vaa_engine_load(
    model_path: *const c_char,
    candidates_path: *const c_char,
    resolution: usize,
    out: *mut *mut VaaEngine,
) -> VaaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_error("out"));
        }
        let model = IdealModel::load(unsafe { str_arg(model_path, "model_path")? })?;
        let candidates = ReactionMatrix::read_csv(unsafe { str_arg(candidates_path, "candidates_path")? })?;
        let mut cfg = EngineConfig::default();
        if resolution > 0 {
            cfg.resolution = resolution;
        }
        let engine = Engine::new(model, &candidates, cfg)?;
        let handle = VaaEngine {
            question_ids: ids(engine.question_ids()),
            candidate_ids: ids(engine.candidate_ids()),
            engine: Arc::new(engine),
        };
        // SAFETY: checked non-null above.
        unsafe { *out = Box::into_raw(Box::new(handle)) };
        Ok(VaaStatus::Ok)
    })
}

/// # Safety
/// `engine` must come from `vaa_engine_load` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vaa_engine_free(engine: *mut VaaEngine) {
    if !engine.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(engine) });
    }
}

/// # Safety
/// `engine` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn vaa_engine_n_questions(engine: *const VaaEngine) -> usize {
    unsafe { engine.as_ref() }.map_or(0, |e| e.engine.n_questions())
}

/// # Safety
/// `engine` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn vaa_engine_n_candidates(engine: *const VaaEngine) -> usize {
    unsafe { engine.as_ref() }.map_or(0, |e| e.engine.candidates().len())
}

/// Id of question `index`, owned by the engine; null when out of range.
///
/// # Safety
/// `engine` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn vaa_engine_question_id(engine: *const VaaEngine, index: usize) -> *const c_char {
    unsafe { engine.as_ref() }
        .and_then(|e| e.question_ids.get(index))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Id of candidate `index`, owned by the engine; null when out of range.
///
/// # Safety
/// `engine` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn vaa_engine_candidate_id(engine: *const VaaEngine, index: usize) -> *const c_char {
    unsafe { engine.as_ref() }
        .and_then(|e| e.candidate_ids.get(index))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Starts a respondent at the prior. `selector` is a registry name such
/// as `posterior_rmse`; `seed` drives the random selector.
///
/// # Safety
/// `engine` must be live, `selector` NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn vaa_session_new(
    engine: *const VaaEngine,
    selector: *const c_char,
    seed: u64,
    out: *mut *mut VaaSession,
) -> VaaStatus {
    guard(|| {
        let engine = unsafe { engine.as_ref() }.ok_or_else(|| null_error("engine"))?;
        if out.is_null() {
            return Err(null_error("out"));
        }
        let selector: SelectorKind = unsafe { str_arg(selector, "selector")? }
            .parse()
            .map_err(Failure::Core)?;
        let session = VaaSession {
            respondent: engine.engine.respondent(seed),
            engine: Arc::clone(&engine.engine),
            selector,
        };
        unsafe { *out = Box::into_raw(Box::new(session)) };
        Ok(VaaStatus::Ok)
    })
}

/// # Safety
/// `session` must come from `vaa_session_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vaa_session_free(session: *mut VaaSession) {
    if !session.is_null() {
        drop(unsafe { Box::from_raw(session) });
    }
}

/// Writes the next question's index to `out`, or returns `Done`.
///
/// # Safety
/// `session` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn vaa_session_next(session: *mut VaaSession, out: *mut usize) -> VaaStatus {
    guard(|| {
        let s = unsafe { session_mut(session)? };
        if out.is_null() {
            return Err(null_error("out"));
        }
        match select(s.selector, &s.engine, &s.respondent)? {
            Some(choice) => {
                unsafe { *out = choice.question };
                Ok(VaaStatus::Ok)
            }
            None => Ok(VaaStatus::Done),
        }
    })
}

/// Records an answer: non-zero `agree` is agreement.
///
/// # Safety
/// `session` must be live.
#[no_mangle]
pub unsafe extern "C" fn vaa_session_answer(session: *mut VaaSession, question: usize, agree: c_int) -> VaaStatus {
    guard(|| {
        let s = unsafe { session_mut(session)? };
        s.respondent.answer(&s.engine, question, agree != 0)?;
        Ok(VaaStatus::Ok)
    })
}

/// Skips a question: it is never offered again and carries no information.
///
/// # Safety
/// `session` must be live.
#[no_mangle]
pub unsafe extern "C" fn vaa_session_skip(session: *mut VaaSession, question: usize) -> VaaStatus {
    guard(|| {
        let s = unsafe { session_mut(session)? };
        s.respondent.skip(question)?;
        Ok(VaaStatus::Ok)
    })
}

/// Number of answered questions, or 0 for a null handle.
///
/// # Safety
/// `session` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn vaa_session_n_answered(session: *const VaaSession) -> usize {
    unsafe { session.as_ref() }.map_or(0, |s| s.respondent.n_answered())
}

/// Fills `out[0..len]` with the predictive agreement probability of every
/// question; `len` must equal the number of questions.
///
/// # Safety
/// `session` must be live and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn vaa_session_predictive(session: *mut VaaSession, out: *mut f64, len: usize) -> VaaStatus {
    guard(|| {
        let s = unsafe { session_mut(session)? };
        if out.is_null() {
            return Err(null_error("out"));
        }
        let p = s.respondent.predictions(&s.engine);
        if len != p.len() {
            return Err(Error::Input(format!("buffer holds {len} values, need {}", p.len())).into());
        }
        // SAFETY: the caller provides `len` writable slots.
        unsafe { std::slice::from_raw_parts_mut(out, len) }.copy_from_slice(&p);
        Ok(VaaStatus::Ok)
    })
}

/// Writes the `m` closest candidates (row indices, ascending distance)
/// and their distances. `distances` may be null.
///
/// # Safety
/// `session` must be live; `candidates` and non-null `distances` must be
/// valid for `m` writes.
#[no_mangle]
pub unsafe extern "C" fn vaa_session_recommend(
    session: *mut VaaSession,
    kind: VaaRecType,
    m: usize,
    candidates: *mut usize,
    distances: *mut f64,
) -> VaaStatus {
    guard(|| {
        let s = unsafe { session_mut(session)? };
        if candidates.is_null() {
            return Err(null_error("candidates"));
        }
        let kind = match kind {
            VaaRecType::I => RecType::TypeI,
            VaaRecType::II => RecType::TypeII,
        };
        let rec = s.engine.recommend(&s.respondent, kind, m)?;
        let out = unsafe { std::slice::from_raw_parts_mut(candidates, m) };
        for (o, item) in out.iter_mut().zip(&rec.items) {
            *o = item.candidate;
        }
        if !distances.is_null() {
            let out = unsafe { std::slice::from_raw_parts_mut(distances, m) };
            for (o, item) in out.iter_mut().zip(&rec.items) {
                *o = item.distance;
            }
        }
        Ok(VaaStatus::Ok)
    })
}
