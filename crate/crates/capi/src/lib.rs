//! C ABI for the docstruct library.
//!
//! Objects cross the boundary as opaque handles created and released by this
//! library; strings returned to the caller are NUL-terminated UTF-8 owned by
//! the caller and released with [`docstruct_string_free`]. Every fallible
//! call returns a [`DocstructStatus`]; on failure,
//! [`docstruct_last_error`] yields a thread-local message describing it.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;

use docstruct::grammar::{postprocess, GrammarConfig};
use docstruct::hocr::{HocrDocument, Word};
use docstruct::model::{to_canonical_json, BBox, DocumentGraph, DocumentTree};
use docstruct::query;
use docstruct::relhead::{infer_graph, pair_score_table, RelationModel};
use docstruct::validation::validate_tree;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocstructStatus {
    Ok = 0,
    /// A pointer argument was null or not valid UTF-8.
    InvalidArgument = 1,
    /// Input text failed to parse (JSON, hOCR, or query syntax).
    ParseError = 2,
    /// The input parsed but violates a structural invariant.
    ValidationError = 3,
    /// Internal failure.
    Internal = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn docstruct_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string; do not free it.
#[no_mangle]
pub extern "C" fn docstruct_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Frees a string previously returned by this library.
///
/// # Safety
/// `s` must be a pointer returned by a docstruct function documented as
/// caller-freed, not yet freed, or null.
#[no_mangle]
pub unsafe extern "C" fn docstruct_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Result<&'a str, DocstructStatus> {
    if ptr.is_null() {
        set_error("null pointer argument");
        return Err(DocstructStatus::InvalidArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        DocstructStatus::InvalidArgument
    })
}

fn export_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

/// Opaque page graph handle.
pub struct DocstructGraph {
    inner: DocumentGraph,
}

/// Opaque valid-tree handle.
pub struct DocstructTree {
    inner: DocumentTree,
}

/// Opaque relation-model handle.
pub struct DocstructModel {
    inner: RelationModel,
}

/// Opaque parsed hOCR document handle.
pub struct DocstructHocr {
    inner: HocrDocument,
}

/// Parses an interchange JSON page into a graph handle.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn docstruct_graph_parse_json(
    json: *const c_char,
    out: *mut *mut DocstructGraph,
) -> DocstructStatus {
    if out.is_null() {
        set_error("null output pointer");
        return DocstructStatus::InvalidArgument;
    }
    let json = match utf8_arg(json) {
        Ok(s) => s,
        Err(status) => return status,
    };
    match DocumentGraph::from_json_str(json) {
        Ok(graph) => {
            *out = Box::into_raw(Box::new(DocstructGraph { inner: graph }));
            DocstructStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            DocstructStatus::ParseError
        }
    }
}

/// Canonical interchange JSON for a graph; caller frees the string.
///
/// # Safety
/// `graph` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn docstruct_graph_to_json(graph: *const DocstructGraph) -> *mut c_char {
    if graph.is_null() {
        set_error("null graph handle");
        return std::ptr::null_mut();
    }
    export_string((*graph).inner.to_canonical_json())
}

/// # Safety
/// `graph` must be a live handle or null; it is consumed.
#[no_mangle]
pub unsafe extern "C" fn docstruct_graph_free(graph: *mut DocstructGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Validation report for a graph as JSON (`{"violations": [...]}`, empty
/// list when the graph is a valid tree); caller frees the string.
///
/// # Safety
/// `graph` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn docstruct_graph_validate_json(
    graph: *const DocstructGraph,
) -> *mut c_char {
    if graph.is_null() {
        set_error("null graph handle");
        return std::ptr::null_mut();
    }
    export_string(to_canonical_json(&validate_tree(&(*graph).inner)))
}

/// Repairs a graph into a valid tree. `model` is optional (may be null):
/// when present its pair scores guide the parent completion. When
/// `trace_json_out` is non-null it receives the repair trace as JSON (caller
/// frees).
///
/// # Safety
/// Handles must be live; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn docstruct_postprocess(
    graph: *const DocstructGraph,
    model: *const DocstructModel,
    strict_unordered_group: bool,
    out: *mut *mut DocstructTree,
    trace_json_out: *mut *mut c_char,
) -> DocstructStatus {
    if graph.is_null() || out.is_null() {
        set_error("null pointer argument");
        return DocstructStatus::InvalidArgument;
    }
    let g = &(*graph).inner;
    let scores = if model.is_null() {
        None
    } else {
        Some(pair_score_table(g, &(*model).inner))
    };
    let config = GrammarConfig { strict_unordered_group };
    let (tree, trace) = postprocess(g, scores.as_ref(), config);
    if !trace_json_out.is_null() {
        *trace_json_out = export_string(trace.to_canonical_json());
    }
    *out = Box::into_raw(Box::new(DocstructTree { inner: tree }));
    DocstructStatus::Ok
}

/// Tree as interchange JSON (graph fields plus `root`); caller frees.
///
/// # Safety
/// `tree` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn docstruct_tree_to_json(tree: *const DocstructTree) -> *mut c_char {
    if tree.is_null() {
        set_error("null tree handle");
        return std::ptr::null_mut();
    }
    export_string((*tree).inner.to_canonical_json())
}

/// # Safety
/// `tree` must be a live handle or null; it is consumed.
#[no_mangle]
pub unsafe extern "C" fn docstruct_tree_free(tree: *mut DocstructTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Loads a serialized relation model.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn docstruct_model_load_json(
    json: *const c_char,
    out: *mut *mut DocstructModel,
) -> DocstructStatus {
    if out.is_null() {
        set_error("null output pointer");
        return DocstructStatus::InvalidArgument;
    }
    let json = match utf8_arg(json) {
        Ok(s) => s,
        Err(status) => return status,
    };
    match RelationModel::load_json(json) {
        Ok(model) => {
            *out = Box::into_raw(Box::new(DocstructModel { inner: model }));
            DocstructStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            DocstructStatus::ParseError
        }
    }
}

/// # Safety
/// `model` must be a live handle or null; it is consumed.
#[no_mangle]
pub unsafe extern "C" fn docstruct_model_free(model: *mut DocstructModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Runs category refinement and relation prediction on a page, producing a
/// new graph handle.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn docstruct_infer(
    model: *const DocstructModel,
    graph: *const DocstructGraph,
    out: *mut *mut DocstructGraph,
) -> DocstructStatus {
    if model.is_null() || graph.is_null() || out.is_null() {
        set_error("null pointer argument");
        return DocstructStatus::InvalidArgument;
    }
    let pred = infer_graph(&(*graph).inner, &(*model).inner);
    *out = Box::into_raw(Box::new(DocstructGraph { inner: pred }));
    DocstructStatus::Ok
}

/// Converts a tree plus an optional JSON word list (`[{"text", "bbox"}]`,
/// may be null) into hOCR; caller frees the returned string.
///
/// # Safety
/// `tree` must be a live handle; `words_json` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn docstruct_tree_to_hocr(
    tree: *const DocstructTree,
    words_json: *const c_char,
    out: *mut *mut c_char,
) -> DocstructStatus {
    if tree.is_null() || out.is_null() {
        set_error("null pointer argument");
        return DocstructStatus::InvalidArgument;
    }
    let words: Vec<Word> = if words_json.is_null() {
        Vec::new()
    } else {
        let text = match utf8_arg(words_json) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match serde_json::from_str(text) {
            Ok(words) => words,
            Err(e) => {
                set_error(&e.to_string());
                return DocstructStatus::ParseError;
            }
        }
    };
    match docstruct::hocr::to_hocr(&(*tree).inner, &words) {
        Ok(xml) => {
            *out = export_string(xml);
            DocstructStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            DocstructStatus::ValidationError
        }
    }
}

/// Parses an hOCR document for querying.
///
/// # Safety
/// `xml` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn docstruct_hocr_parse(
    xml: *const c_char,
    out: *mut *mut DocstructHocr,
) -> DocstructStatus {
    if out.is_null() {
        set_error("null output pointer");
        return DocstructStatus::InvalidArgument;
    }
    let xml = match utf8_arg(xml) {
        Ok(s) => s,
        Err(status) => return status,
    };
    match HocrDocument::parse(xml) {
        Ok(doc) => {
            *out = Box::into_raw(Box::new(DocstructHocr { inner: doc }));
            DocstructStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            DocstructStatus::ParseError
        }
    }
}

/// # Safety
/// `doc` must be a live handle or null; it is consumed.
#[no_mangle]
pub unsafe extern "C" fn docstruct_hocr_free(doc: *mut DocstructHocr) {
    if !doc.is_null() {
        drop(Box::from_raw(doc));
    }
}

/// Evaluates a structure query; on success `out` receives the matched nodes
/// as a JSON array of `{id, category, bbox, text}` (caller frees).
///
/// # Safety
/// `doc` must be a live handle; `expr` NUL-terminated; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn docstruct_hocr_query(
    doc: *const DocstructHocr,
    expr: *const c_char,
    direct_followedby: bool,
    out: *mut *mut c_char,
) -> DocstructStatus {
    if doc.is_null() || out.is_null() {
        set_error("null pointer argument");
        return DocstructStatus::InvalidArgument;
    }
    let expr = match utf8_arg(expr) {
        Ok(s) => s,
        Err(status) => return status,
    };
    let document = &(*doc).inner;
    match query::evaluate(document, expr, direct_followedby) {
        Ok(hits) => {
            let matches: Vec<query::QueryMatch> = hits
                .iter()
                .map(|&i| query::QueryMatch::from_node(document, i))
                .collect();
            *out = export_string(to_canonical_json(&matches));
            DocstructStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            DocstructStatus::ParseError
        }
    }
}

/// Intersection-over-union of two boxes given as corner coordinates.
#[no_mangle]
pub extern "C" fn docstruct_iou(
    ax0: f64,
    ay0: f64,
    ax1: f64,
    ay1: f64,
    bx0: f64,
    by0: f64,
    bx1: f64,
    by1: f64,
) -> f64 {
    match (BBox::new(ax0, ay0, ax1, ay1), BBox::new(bx0, by0, bx1, by1)) {
        (Ok(a), Ok(b)) => docstruct::metrics::iou(&a, &b),
        _ => {
            set_error("invalid box coordinates");
            -1.0
        }
    }
}

/// Scores one prediction/ground-truth page pair; `out` receives the
/// evaluation report JSON (caller frees).
///
/// # Safety
/// Inputs must be NUL-terminated strings; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn docstruct_evaluate_pair(
    pred_json: *const c_char,
    gt_json: *const c_char,
    iou_threshold: f64,
    out: *mut *mut c_char,
) -> DocstructStatus {
    if out.is_null() {
        set_error("null output pointer");
        return DocstructStatus::InvalidArgument;
    }
    if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
        set_error("iou threshold outside (0, 1]");
        return DocstructStatus::InvalidArgument;
    }
    let pred = match utf8_arg(pred_json) {
        Ok(s) => s,
        Err(status) => return status,
    };
    let gt = match utf8_arg(gt_json) {
        Ok(s) => s,
        Err(status) => return status,
    };
    let pred = match DocumentGraph::from_json_str(pred) {
        Ok(g) => g,
        Err(e) => {
            set_error(&format!("pred: {e}"));
            return DocstructStatus::ParseError;
        }
    };
    let gt = match DocumentGraph::from_json_str(gt) {
        Ok(g) => g,
        Err(e) => {
            set_error(&format!("gt: {e}"));
            return DocstructStatus::ParseError;
        }
    };
    let report = docstruct::metrics::evaluate_pair(&pred, &gt, iou_threshold);
    *out = export_string(to_canonical_json(&report));
    DocstructStatus::Ok
}
