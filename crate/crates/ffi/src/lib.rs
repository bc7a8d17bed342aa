//! C interface to the `nrcprov` engine.
//!
//! Queries are compiled into opaque [`NrcQuery`] handles. Inputs and
//! outputs cross the boundary as NUL-terminated UTF-8 JSON in the formats
//! the command-line tool reads and writes. Every function returns an
//! [`NrcStatus`]; on failure, [`nrc_last_error`] describes the error on the
//! calling thread. Strings returned through out-parameters are owned by the
//! caller and must be released with [`nrc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use serde_json::Value as Json;

use nrcprov::annot::color_env;
use nrcprov::bundle::SliceBundle;
use nrcprov::json::{
    actx_from_json, aenv_from_json, atype_to_json, avalue_to_json, env_from_json, value_to_json,
};
use nrcprov::parse::parse_type;
use nrcprov::typecheck::TypeCtx;
use nrcprov::verify::auto_context;
use nrcprov::{Error, Query};

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NrcStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    Syntax = 3,
    Type = 4,
    Analysis = 5,
    Eval = 6,
    /// Malformed or ill-typed JSON input.
    Data = 7,
    Bundle = 8,
    /// The engine panicked; the handle arguments should be considered lost.
    Panic = 9,
    Other = 10,
}

/// A compiled query.
pub struct NrcQuery {
    query: Query,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(NrcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let status = match e {
            Error::Syntax(_) => NrcStatus::Syntax,
            Error::Type(_) => NrcStatus::Type,
            Error::Analysis(_) => NrcStatus::Analysis,
            Error::Eval(_) => NrcStatus::Eval,
            Error::Data(_) => NrcStatus::Data,
            Error::Bundle(_) => NrcStatus::Bundle,
            _ => NrcStatus::Other,
        };
        Failure(status, e.to_string())
    }
}

fn data_error(e: impl std::fmt::Display) -> Failure {
    Failure(NrcStatus::Data, e.to_string())
}

fn set_last_error(message: String) {
    let text = CString::new(message.replace('\0', " ")).expect("NUL bytes were removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

/// Runs `body`, recording its error and converting panics into a status.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> NrcStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => NrcStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".to_owned());
            NrcStatus::Panic
        }
    }
}

/// # Safety
/// `p` is null or a valid NUL-terminated string.
unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(NrcStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(NrcStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

/// # Safety
/// As for [`text`]; a null pointer yields `None`.
unsafe fn optional_text<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

fn parse_json(s: &str) -> Result<Json, Failure> {
    serde_json::from_str(s).map_err(data_error)
}

/// # Safety
/// `q` is null or a handle from [`nrc_query_compile`] not yet freed.
unsafe fn handle<'a>(q: *const NrcQuery) -> Result<&'a Query, Failure> {
    q.as_ref()
        .map(|h| &h.query)
        .ok_or_else(|| Failure(NrcStatus::NullArgument, "query handle is null".to_owned()))
}

/// # Safety
/// `out` is null or valid for writing one pointer.
unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(
            NrcStatus::NullArgument,
            "output pointer is null".to_owned(),
        ));
    }
    let c = CString::new(s).map_err(|_| Failure(NrcStatus::Other, "output contains NUL".to_owned()))?;
    *out = c.into_raw();
    Ok(())
}

fn type_ctx(types: &Json) -> Result<TypeCtx, Failure> {
    let map = types
        .as_object()
        .ok_or_else(|| data_error("types must be an object from variable names to type strings"))?;
    let mut ctx = TypeCtx::new();
    for (x, t) in map {
        let t = t
            .as_str()
            .ok_or_else(|| data_error(format!("type of `{x}` must be a string")))?;
        ctx.insert(x, parse_type(t).map_err(Error::from)?);
    }
    Ok(ctx)
}

/// The error message for the last failed call on this thread, or null.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn nrc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// The library version as a static string.
#[no_mangle]
pub extern "C" fn nrc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` is null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nrc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and type-checks `source` against `types_json`, an object mapping
/// each input variable to a type such as `"{(A: int, B: int)}"`.
///
/// # Safety
/// String arguments are null or NUL-terminated; `out` is null or writable.
#[no_mangle]
pub unsafe extern "C" fn nrc_query_compile(
    source: *const c_char,
    types_json: *const c_char,
    out: *mut *mut NrcQuery,
) -> NrcStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(
                NrcStatus::NullArgument,
                "output pointer is null".to_owned(),
            ));
        }
        let source = text(source, "source")?;
        let ctx = type_ctx(&parse_json(text(types_json, "types")?)?)?;
        let query = Query::compile(source, &ctx)?;
        *out = Box::into_raw(Box::new(NrcQuery { query }));
        Ok(())
    })
}

/// Releases a query handle. Null is ignored.
///
/// # Safety
/// `q` is null or a handle from [`nrc_query_compile`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nrc_query_free(q: *mut NrcQuery) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// The result type of the query, as text.
///
/// # Safety
/// `q` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn nrc_query_type(q: *const NrcQuery, out: *mut *mut c_char) -> NrcStatus {
    guard(|| put_string(out, handle(q)?.ty.to_string()))
}

/// The desugared, elaborated query, as text.
///
/// # Safety
/// `q` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn nrc_query_core(q: *const NrcQuery, out: *mut *mut c_char) -> NrcStatus {
    guard(|| put_string(out, handle(q)?.rendered()))
}

/// Evaluates the query on plain JSON data and writes the plain result.
///
/// # Safety
/// `q` is a live handle; `data_json` is NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn nrc_query_eval(
    q: *const NrcQuery,
    data_json: *const c_char,
    out: *mut *mut c_char,
) -> NrcStatus {
    guard(|| {
        let query = handle(q)?;
        let env = env_from_json(&parse_json(text(data_json, "data")?)?).map_err(Error::from)?;
        put_string(out, value_to_json(&query.eval(&env)?).to_string())
    })
}

/// Evaluates the query with provenance tracking. `adata_json` is an
/// annotated environment; when it is null, `data_json` is read as plain
/// data and every node is colored by its path.
///
/// # Safety
/// `q` is a live handle; string arguments are null or NUL-terminated;
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn nrc_query_track(
    q: *const NrcQuery,
    adata_json: *const c_char,
    data_json: *const c_char,
    out: *mut *mut c_char,
) -> NrcStatus {
    guard(|| {
        let query = handle(q)?;
        let env = annotated_input(adata_json, data_json)?;
        put_string(out, avalue_to_json(&query.track(&env)?).to_string())
    })
}

/// Computes the annotated result type under `actx_json`, an object mapping
/// each input variable to an annotated type. When it is null, every type
/// node is annotated with its own path.
///
/// # Safety
/// `q` is a live handle; `actx_json` is null or NUL-terminated; `out` is
/// writable.
#[no_mangle]
pub unsafe extern "C" fn nrc_query_analyze(
    q: *const NrcQuery,
    actx_json: *const c_char,
    out: *mut *mut c_char,
) -> NrcStatus {
    guard(|| {
        let query = handle(q)?;
        let actx = match optional_text(actx_json, "context")? {
            Some(s) => actx_from_json(&parse_json(s)?).map_err(Error::from)?,
            None => auto_context(&query.ctx),
        };
        put_string(out, atype_to_json(&query.analyze(&actx)?).to_string())
    })
}

/// Writes a slice bundle for the query. Inputs are as for
/// [`nrc_query_track`]; `actx_json` may be null to leave out the static
/// analysis.
///
/// # Safety
/// `q` is a live handle; string arguments are null or NUL-terminated;
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn nrc_query_bundle(
    q: *const NrcQuery,
    adata_json: *const c_char,
    data_json: *const c_char,
    actx_json: *const c_char,
    out: *mut *mut c_char,
) -> NrcStatus {
    guard(|| {
        let query = handle(q)?;
        let env = annotated_input(adata_json, data_json)?;
        let actx = match optional_text(actx_json, "context")? {
            Some(s) => Some(actx_from_json(&parse_json(s)?).map_err(Error::from)?),
            None => None,
        };
        let bundle = SliceBundle::build(query, &env, actx.as_ref())?;
        put_string(out, bundle.to_json().to_string())
    })
}

/// # Safety
/// Both arguments are null or NUL-terminated.
unsafe fn annotated_input(
    adata_json: *const c_char,
    data_json: *const c_char,
) -> Result<nrcprov::annot::AEnv, Failure> {
    if let Some(s) = optional_text(adata_json, "annotated data")? {
        return Ok(aenv_from_json(&parse_json(s)?).map_err(Error::from)?);
    }
    let s = text(data_json, "data")?;
    Ok(color_env(&env_from_json(&parse_json(s)?).map_err(Error::from)?))
}
