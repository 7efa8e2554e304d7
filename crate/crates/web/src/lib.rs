//! Browser bindings for the sketch toolkit. Every export takes proof text and
//! returns a JSON string so the page needs no generated type glue.

use dsp_sketch::{
    check_no_cheat, extract_gaps, fill_gap, parse_sketch, serialize, strip_comments, ParseError,
};
use serde::Serialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

#[derive(Serialize)]
struct ErrorView {
    offset: usize,
    line: usize,
    column: usize,
    message: String,
    expected: Vec<String>,
}

fn error_view(src: &str, e: &ParseError) -> Value {
    let before = &src[..e.offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    json!({
        "ok": false,
        "error": ErrorView {
            offset: e.offset,
            line,
            column,
            message: e.message.clone(),
            expected: e.expected.clone(),
        }
    })
}

/// Parses a sketch and lists its gaps and step counts.
pub fn inspect_json(src: &str) -> Value {
    let ast = match parse_sketch(src) {
        Ok(ast) => ast,
        Err(e) => return error_view(src, &e),
    };
    json!({
        "ok": true,
        "theorem": ast.header.as_ref().map(|h| h.name.clone()),
        "gaps": extract_gaps(&ast),
        "gap_count": ast.gap_count(),
        "tactic_count": ast.tactic_count(),
        "comment_count": ast.comment_count(),
        "normalized": serialize(&ast),
    })
}

/// Reports cheating keywords outside comments and literals. Works on text
/// that does not parse.
pub fn cheat_json(src: &str) -> Value {
    let report = check_no_cheat(src);
    json!({ "ok": true, "clean": report.clean, "offending": report.offending })
}

/// Replaces gap number `index` (document order) with `step`.
pub fn fill_json(src: &str, index: usize, step: &str) -> Value {
    let ast = match parse_sketch(src) {
        Ok(ast) => ast,
        Err(e) => return error_view(src, &e),
    };
    let gaps = extract_gaps(&ast);
    let Some(site) = gaps.get(index) else {
        return json!({ "ok": false, "error": { "message": format!("no gap {index}; the sketch has {}", gaps.len()) } });
    };
    match fill_gap(&ast, site, step) {
        Ok(filled) => {
            json!({ "ok": true, "text": serialize(&filled), "gap_count": filled.gap_count() })
        }
        Err(e) => json!({ "ok": false, "error": { "message": e.to_string() } }),
    }
}

/// Removes every comment and reprints the sketch.
pub fn strip_json(src: &str) -> Value {
    match parse_sketch(src) {
        Ok(ast) => json!({ "ok": true, "text": serialize(&strip_comments(&ast)) }),
        Err(e) => error_view(src, &e),
    }
}

#[wasm_bindgen]
pub fn inspect(src: &str) -> String {
    inspect_json(src).to_string()
}

#[wasm_bindgen]
pub fn cheat_check(src: &str) -> String {
    cheat_json(src).to_string()
}

#[wasm_bindgen]
pub fn fill(src: &str, index: usize, step: &str) -> String {
    fill_json(src, index, step).to_string()
}

#[wasm_bindgen]
pub fn strip(src: &str) -> String {
    strip_json(src).to_string()
}
