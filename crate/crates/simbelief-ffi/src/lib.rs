//! C ABI over the simbelief model checker: opaque handles, integer status
//! codes, JSON strings for structured results.
//!
//! The matching header lives at `include/simbelief.h` and is maintained by
//! hand; a test keeps it in sync with the exported symbols.
//!
//! Conventions:
//!
//! * Handles (`SbModel`, `SbFormula`) are created and released by this
//!   library; never free them with anything but the matching `*_free`.
//! * Functions returning `int` use 1/0 for true/false and negative
//!   [`SbStatus`] codes for failure; functions returning pointers use NULL
//!   for failure. [`sb_last_error`] describes the most recent failure on
//!   the calling thread.
//! * Returned strings are owned by the caller and must be released with
//!   [`sb_string_free`].

// Pointer contracts (ownership, lifetime, encoding) are documented once in
// the header and the module docs rather than per function.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::sync::OnceLock;

use simbelief::model::{Model, QueryError};
use simbelief::morphism::{check_morphism, MapFile, VertexMap};
use simbelief::semantics::RelationTable;
use simbelief::syntax::{parse_with, Formula};

/// Status codes shared with the header.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbStatus {
    Ok = 0,
    NullArgument = -1,
    InvalidUtf8 = -2,
    ParseError = -3,
    LoadError = -4,
    InvalidModel = -5,
    UnknownWorld = -6,
    UnknownAgent = -7,
    EmptyGroup = -8,
    MorphismError = -9,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: impl Into<String>) {
    let message = message.into();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(message.replace('\0', "?"))
            .unwrap_or_else(|_| CString::new("error").unwrap());
    });
}

fn query_status(e: &QueryError) -> SbStatus {
    match e {
        QueryError::UnknownAgent(_) => SbStatus::UnknownAgent,
        QueryError::UnknownWorld(_) => SbStatus::UnknownWorld,
        QueryError::EmptyGroup => SbStatus::EmptyGroup,
    }
}

/// An opaque loaded model. The relation table is built lazily on the first
/// evaluation and only for valid models.
pub struct SbModel {
    model: Model,
    table: OnceLock<Option<RelationTable>>,
}

impl SbModel {
    fn new(model: Model) -> Box<SbModel> {
        Box::new(SbModel { model, table: OnceLock::new() })
    }

    fn table(&self) -> Option<&RelationTable> {
        self.table
            .get_or_init(|| {
                self.model
                    .validate()
                    .ok()
                    .then(|| RelationTable::new(self.model.clone()))
            })
            .as_ref()
    }
}

/// An opaque parsed formula.
pub struct SbFormula {
    formula: Formula,
}

unsafe fn cstr<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, SbStatus> {
    if ptr.is_null() {
        set_error(format!("{what} is NULL"));
        return Err(SbStatus::NullArgument);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(s),
        Err(_) => {
            set_error(format!("{what} is not valid UTF-8"));
            Err(SbStatus::InvalidUtf8)
        }
    }
}

fn to_owned_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', "?"))
        .unwrap_or_else(|_| CString::new("").unwrap())
        .into_raw()
}

unsafe fn model_ref<'a>(ptr: *const SbModel, what: &str) -> Result<&'a SbModel, SbStatus> {
    if ptr.is_null() {
        set_error(format!("{what} is NULL"));
        return Err(SbStatus::NullArgument);
    }
    Ok(&*ptr)
}

unsafe fn formula_ref<'a>(ptr: *const SbFormula) -> Result<&'a SbFormula, SbStatus> {
    if ptr.is_null() {
        set_error("formula is NULL");
        return Err(SbStatus::NullArgument);
    }
    Ok(&*ptr)
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn sb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread; valid until the next
/// failing call. Do not free.
#[no_mangle]
pub extern "C" fn sb_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parses a model from JSON. NULL on failure.
#[no_mangle]
pub unsafe extern "C" fn sb_model_load_json(json: *const c_char) -> *mut SbModel {
    let Ok(text) = cstr(json, "json") else { return std::ptr::null_mut() };
    match Model::from_json(text) {
        Ok(model) => Box::into_raw(SbModel::new(model)),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Reads and parses a model file. NULL on failure.
#[no_mangle]
pub unsafe extern "C" fn sb_model_load_file(path: *const c_char) -> *mut SbModel {
    let Ok(path) = cstr(path, "path") else { return std::ptr::null_mut() };
    match Model::from_file(path) {
        Ok(model) => Box::into_raw(SbModel::new(model)),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Releases a model handle; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn sb_model_free(model: *mut SbModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// 1 when the model satisfies all structural invariants, 0 when it does
/// not, negative on failure.
#[no_mangle]
pub unsafe extern "C" fn sb_model_is_valid(model: *const SbModel) -> c_int {
    match model_ref(model, "model") {
        Ok(h) => h.model.validate().ok() as c_int,
        Err(status) => status as c_int,
    }
}

/// Validation report as JSON `{"ok": bool, "violations": [...]}`.
/// NULL on failure; free with `sb_string_free`.
#[no_mangle]
pub unsafe extern "C" fn sb_model_validation_json(model: *const SbModel) -> *mut c_char {
    let Ok(h) = model_ref(model, "model") else { return std::ptr::null_mut() };
    let report = h.model.validate();
    to_owned_c(
        serde_json::json!({"ok": report.ok(), "violations": report.violations}).to_string(),
    )
}

/// World names and their vertex sets as JSON. Free with `sb_string_free`.
#[no_mangle]
pub unsafe extern "C" fn sb_model_worlds_json(model: *const SbModel) -> *mut c_char {
    let Ok(h) = model_ref(model, "model") else { return std::ptr::null_mut() };
    let worlds: Vec<serde_json::Value> = h
        .model
        .worlds()
        .iter()
        .map(|w| {
            serde_json::json!({
                "name": w.name,
                "vertices": w.face.vertices().collect::<Vec<_>>(),
            })
        })
        .collect();
    to_owned_c(serde_json::json!(worlds).to_string())
}

/// Per-agent relations as JSON: multiplicities, indistinguishable pairs,
/// strict plausibility pairs, and the most plausible worlds. NULL on
/// failure (invalid model, unknown agent).
#[no_mangle]
pub unsafe extern "C" fn sb_model_relations_json(
    model: *const SbModel,
    agent: *const c_char,
) -> *mut c_char {
    let Ok(h) = model_ref(model, "model") else { return std::ptr::null_mut() };
    let Ok(agent) = cstr(agent, "agent") else { return std::ptr::null_mut() };
    let Some(table) = h.table() else {
        set_error("model failed validation");
        return std::ptr::null_mut();
    };
    let Some(a) = table.model().agent_index(agent) else {
        set_error(format!("unknown agent `{agent}`"));
        return std::ptr::null_mut();
    };
    let names: Vec<&str> = table.model().worlds().iter().map(|w| w.name.as_str()).collect();
    let n = names.len();
    let pairs = |pred: &dyn Fn(usize, usize) -> bool| -> Vec<(&str, &str)> {
        (0..n)
            .flat_map(|x| (0..n).map(move |y| (x, y)))
            .filter(|&(x, y)| pred(x, y))
            .map(|(x, y)| (names[x], names[y]))
            .collect()
    };
    let json = serde_json::json!({
        "agent": agent,
        "multiplicity": names
            .iter()
            .enumerate()
            .map(|(i, w)| (w.to_string(), table.mult_idx(a, i)))
            .collect::<std::collections::BTreeMap<_, _>>(),
        "sim": pairs(&|x, y| table.sim_idx(a, x, y)),
        "strictly_more_plausible": pairs(&|x, y| table.plaus_lt_idx(a, x, y)),
        "min": names
            .iter()
            .map(|w| (w.to_string(), table.min_plausible(agent, w).expect("agent exists")))
            .collect::<std::collections::BTreeMap<_, _>>(),
    });
    to_owned_c(json.to_string())
}

/// The 1-skeleton as Graphviz DOT. Free with `sb_string_free`.
#[no_mangle]
pub unsafe extern "C" fn sb_model_export_dot(model: *const SbModel) -> *mut c_char {
    let Ok(h) = model_ref(model, "model") else { return std::ptr::null_mut() };
    to_owned_c(simbelief::dot::export_dot(&h.model).text)
}

/// Parses a formula; pass a nonzero `experimental` to admit the group
/// modalities `Sb{G}` / `B{G}`. NULL on failure.
#[no_mangle]
pub unsafe extern "C" fn sb_formula_parse(
    text: *const c_char,
    experimental: c_int,
) -> *mut SbFormula {
    let Ok(text) = cstr(text, "formula text") else { return std::ptr::null_mut() };
    match parse_with(text, experimental != 0) {
        Ok(formula) => Box::into_raw(Box::new(SbFormula { formula })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Releases a formula handle; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn sb_formula_free(formula: *mut SbFormula) {
    if !formula.is_null() {
        drop(Box::from_raw(formula));
    }
}

/// Canonical rendering of the formula. Free with `sb_string_free`.
#[no_mangle]
pub unsafe extern "C" fn sb_formula_print(formula: *const SbFormula) -> *mut c_char {
    match formula_ref(formula) {
        Ok(f) => to_owned_c(f.formula.to_string()),
        Err(_) => std::ptr::null_mut(),
    }
}

/// 1 when the formula lies in the positive fragment, 0 otherwise, negative
/// on failure.
#[no_mangle]
pub unsafe extern "C" fn sb_formula_is_positive(formula: *const SbFormula) -> c_int {
    match formula_ref(formula) {
        Ok(f) => f.formula.is_positive() as c_int,
        Err(status) => status as c_int,
    }
}

/// Truth of the formula at the named world: 1 true, 0 false, negative
/// SbStatus on failure. The model must be valid.
#[no_mangle]
pub unsafe extern "C" fn sb_eval(
    model: *const SbModel,
    world: *const c_char,
    formula: *const SbFormula,
) -> c_int {
    let h = match model_ref(model, "model") {
        Ok(h) => h,
        Err(status) => return status as c_int,
    };
    let world = match cstr(world, "world") {
        Ok(w) => w,
        Err(status) => return status as c_int,
    };
    let f = match formula_ref(formula) {
        Ok(f) => f,
        Err(status) => return status as c_int,
    };
    let Some(table) = h.table() else {
        set_error("model failed validation");
        return SbStatus::InvalidModel as c_int;
    };
    match table.eval(world, &f.formula) {
        Ok(value) => value as c_int,
        Err(e) => {
            set_error(e.to_string());
            query_status(&e) as c_int
        }
    }
}

/// JSON array of the world names where the formula holds. NULL on failure.
#[no_mangle]
pub unsafe extern "C" fn sb_extension_json(
    model: *const SbModel,
    formula: *const SbFormula,
) -> *mut c_char {
    let Ok(h) = model_ref(model, "model") else { return std::ptr::null_mut() };
    let Ok(f) = formula_ref(formula) else { return std::ptr::null_mut() };
    let Some(table) = h.table() else {
        set_error("model failed validation");
        return std::ptr::null_mut();
    };
    match table.extension(&f.formula) {
        Ok(worlds) => to_owned_c(serde_json::json!(worlds).to_string()),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Checks the four morphism conditions for a vertex map given as JSON
/// (either a bare `{"v": "u", ...}` object or a full map file with a
/// `"map"` field). On success writes a JSON report to `report_json_out`
/// (free with `sb_string_free`) and returns `SB_OK`.
#[no_mangle]
pub unsafe extern "C" fn sb_check_morphism_json(
    source: *const SbModel,
    target: *const SbModel,
    map_json: *const c_char,
    report_json_out: *mut *mut c_char,
) -> c_int {
    if report_json_out.is_null() {
        set_error("report_json_out is NULL");
        return SbStatus::NullArgument as c_int;
    }
    let src = match model_ref(source, "source") {
        Ok(h) => h,
        Err(status) => return status as c_int,
    };
    let tgt = match model_ref(target, "target") {
        Ok(h) => h,
        Err(status) => return status as c_int,
    };
    let text = match cstr(map_json, "map json") {
        Ok(t) => t,
        Err(status) => return status as c_int,
    };
    let map: VertexMap = match serde_json::from_str::<std::collections::BTreeMap<String, String>>(text)
    {
        Ok(raw) => VertexMap::new(raw),
        Err(_) => match MapFile::from_json(text) {
            Ok(file) => file.vertex_map(),
            Err(e) => {
                set_error(format!("map json is neither a map object nor a map file: {e}"));
                return SbStatus::LoadError as c_int;
            }
        },
    };
    match check_morphism(&src.model, &tgt.model, &map) {
        Ok(report) => {
            let json = serde_json::json!({
                "simplicial": report.simplicial,
                "color_preserving": report.color_preserving,
                "worlds_to_worlds": report.worlds_to_worlds,
                "valuation_preserving": report.valuation_preserving,
                "morphism": report.is_morphism(),
                "witnesses": report.witnesses,
            });
            *report_json_out = to_owned_c(json.to_string());
            SbStatus::Ok as c_int
        }
        Err(e) => {
            set_error(e.to_string());
            SbStatus::MorphismError as c_int
        }
    }
}

/// Releases a string returned by this library; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn sb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
