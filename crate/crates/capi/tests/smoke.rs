//! Drives the C ABI end to end from Rust: handle lifecycle, error codes,
//! and string ownership.

use docstruct_capi::*;
use std::ffi::{CStr, CString};

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take_string(ptr: *mut std::os::raw::c_char) -> String {
    assert!(!ptr.is_null());
    let s = CStr::from_ptr(ptr).to_str().unwrap().to_owned();
    docstruct_string_free(ptr);
    s
}

const PAGE: &str = r#"{
    "page_size": {"width": 1000, "height": 1400},
    "entities": [
        {"id": "r", "category": "document_root", "bbox": [0, 0, 1000, 1400], "confidence": 1.0},
        {"id": "t", "category": "text_block", "bbox": [40, 130, 700, 480], "confidence": 0.9}
    ],
    "relations": []
}"#;

#[test]
fn graph_parse_validate_postprocess_and_hocr() {
    unsafe {
        let mut graph: *mut DocstructGraph = std::ptr::null_mut();
        let status = docstruct_graph_parse_json(cstr(PAGE).as_ptr(), &mut graph);
        assert_eq!(status, DocstructStatus::Ok);

        // The raw graph is not a valid tree (orphan text block).
        let report = take_string(docstruct_graph_validate_json(graph));
        assert!(report.contains("missing_parent"), "{report}");

        let mut tree: *mut DocstructTree = std::ptr::null_mut();
        let mut trace: *mut std::os::raw::c_char = std::ptr::null_mut();
        let status = docstruct_postprocess(graph, std::ptr::null(), false, &mut tree, &mut trace);
        assert_eq!(status, DocstructStatus::Ok);
        let trace_json = take_string(trace);
        assert!(trace_json.contains("repairs"));

        let tree_json = take_string(docstruct_tree_to_json(tree));
        assert!(tree_json.contains("\"root\""));

        let words = cstr(r#"[{"text": "hello", "bbox": [50, 140, 120, 160]}]"#);
        let mut xml: *mut std::os::raw::c_char = std::ptr::null_mut();
        let status = docstruct_tree_to_hocr(tree, words.as_ptr(), &mut xml);
        assert_eq!(status, DocstructStatus::Ok);
        let xml = take_string(xml);
        assert!(xml.contains("ocr_page"));
        assert!(xml.contains("hello"));

        // Round the document through the query engine.
        let mut doc: *mut DocstructHocr = std::ptr::null_mut();
        let status = docstruct_hocr_parse(cstr(&xml).as_ptr(), &mut doc);
        assert_eq!(status, DocstructStatus::Ok);
        let mut matches: *mut std::os::raw::c_char = std::ptr::null_mut();
        let status = docstruct_hocr_query(
            doc,
            cstr("//span[text()=\"hello\"]/..").as_ptr(),
            false,
            &mut matches,
        );
        assert_eq!(status, DocstructStatus::Ok);
        let matches = take_string(matches);
        assert!(matches.contains("text_block"), "{matches}");

        docstruct_hocr_free(doc);
        docstruct_tree_free(tree);
        docstruct_graph_free(graph);
    }
}

#[test]
fn parse_errors_set_status_and_message() {
    unsafe {
        let mut graph: *mut DocstructGraph = std::ptr::null_mut();
        let status = docstruct_graph_parse_json(cstr("{ nope").as_ptr(), &mut graph);
        assert_eq!(status, DocstructStatus::ParseError);
        assert!(graph.is_null());
        let message = CStr::from_ptr(docstruct_last_error()).to_str().unwrap();
        assert!(!message.is_empty());

        let status = docstruct_graph_parse_json(std::ptr::null(), &mut graph);
        assert_eq!(status, DocstructStatus::InvalidArgument);
    }
}

#[test]
fn iou_and_evaluate_through_the_abi() {
    unsafe {
        let v = docstruct_iou(0.0, 0.0, 2.0, 2.0, 1.0, 0.0, 3.0, 2.0);
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
        // Inverted box reports failure as a negative value.
        assert_eq!(docstruct_iou(5.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0), -1.0);

        let mut report: *mut std::os::raw::c_char = std::ptr::null_mut();
        let status =
            docstruct_evaluate_pair(cstr(PAGE).as_ptr(), cstr(PAGE).as_ptr(), 0.5, &mut report);
        assert_eq!(status, DocstructStatus::Ok);
        let report_json = take_string(report);
        assert!(report_json.contains("\"map\": 100.0"), "{report_json}");

        let mut report2: *mut std::os::raw::c_char = std::ptr::null_mut();
        let status =
            docstruct_evaluate_pair(cstr(PAGE).as_ptr(), cstr(PAGE).as_ptr(), 1.5, &mut report2);
        assert_eq!(status, DocstructStatus::InvalidArgument);
    }
}

#[test]
fn version_is_exposed() {
    unsafe {
        let v = CStr::from_ptr(docstruct_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}
