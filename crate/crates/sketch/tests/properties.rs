use std::time::{Duration, Instant};

use dsp_sketch::strategy::sketch;
use dsp_sketch::*;
use proptest::collection::vec;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 1000,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn serialize_then_parse_is_identity(ast in sketch()) {
        let text = serialize(&ast);
        let parsed = parse_sketch(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(parsed, ast);
    }

    #[test]
    fn filling_a_gap_removes_exactly_that_gap(ast in sketch(), pick in any::<prop::sample::Index>()) {
        let gaps = extract_gaps(&ast);
        prop_assert_eq!(gaps.len(), ast.gap_count());
        if gaps.is_empty() {
            return Ok(());
        }
        let i = pick.index(gaps.len());
        let filled = fill_gap(&ast, &gaps[i], "by auto").unwrap();
        let after = extract_gaps(&filled);
        prop_assert_eq!(after.len(), gaps.len() - 1);
        let mut expected = gaps.clone();
        expected.remove(i);
        prop_assert_eq!(after, expected);
    }

    #[test]
    fn gaps_come_in_source_order(ast in sketch()) {
        let parsed = parse_sketch(&serialize(&ast)).unwrap();
        let starts: Vec<usize> = extract_gaps(&parsed)
            .iter()
            .map(|g| parsed.spans[&g.path].start)
            .collect();
        prop_assert!(starts.windows(2).all(|w| w[0] < w[1]), "{:?}", starts);
    }

    #[test]
    fn stripping_comments_keeps_gaps(ast in sketch()) {
        let stripped = strip_comments(&ast);
        prop_assert_eq!(stripped.comment_count(), 0);
        prop_assert_eq!(stripped.gap_count(), ast.gap_count());
        prop_assert_eq!(strip_comments(&stripped), stripped.clone());
        let reparsed = parse_sketch(&serialize(&stripped)).unwrap();
        prop_assert_eq!(reparsed, stripped);
    }

    #[test]
    fn accepted_final_proofs_are_cheat_free(ast in sketch()) {
        let text = serialize(&ast);
        let mut has_cheat = false;
        ast.visit(&mut |n| {
            if let Some(Justification::Tactic(t)) = n.justification() {
                has_cheat |= t == "sorry";
            }
        });
        prop_assert_eq!(check_no_cheat(&text).clean, !has_cheat);
    }

    #[test]
    fn parser_never_panics_on_bytes(bytes in vec(any::<u8>(), 0..512)) {
        let _ = parse_sketch_bytes(&bytes);
    }

    #[test]
    fn parser_never_panics_on_token_soup(parts in vec(prop_oneof![
        Just("proof"), Just("qed"), Just("have"), Just("show"), Just("?thesis"),
        Just("\"x\""), Just("c0:"), Just("using"), Just("by"), Just("auto"),
        Just("(*"), Just("*)"), Just("case"), Just("next"), Just("<ATP>"),
        Just("</ATP>"), Just("sledgehammer"), Just("("), Just(")"), Just("theorem"),
        Just("shows"), Just("fixes"), Just("::"), Just("‹"), Just("›"), Just("<...>"),
    ], 0..60)) {
        let _ = parse_sketch(&parts.join(" "));
    }
}

#[test]
fn deep_nesting_is_an_error_not_a_crash() {
    let src = "proof -\n".repeat(10_000);
    let err = parse_sketch(&src).unwrap_err();
    assert!(err.offset <= src.len());
    let src = format!("proof -\n  (*{}", "(*".repeat(100_000));
    assert!(parse_sketch(&src).is_err());
}

#[test]
fn one_mebibyte_parses_quickly() {
    let step = "  have c1: \"0 \\<le> a^2 - 10/28*a + (5/28)^2\" using c0\n    sledgehammer\n  (* comment *)\n";
    let mut src = String::from("theorem t:\n  shows \"P\"\nproof -\n");
    while src.len() < (1 << 20) - 64 {
        src.push_str(step);
    }
    src.push_str("qed\n");
    let start = Instant::now();
    let ast = parse_sketch(&src).unwrap();
    let elapsed = start.elapsed();
    assert!(ast.gap_count() > 5000);
    let budget = if cfg!(debug_assertions) { 1000 } else { 100 };
    assert!(elapsed < Duration::from_millis(budget), "{elapsed:?}");

    let garbage: String = (0..(1 << 20))
        .map(|i| ['(', '"', 'x', ' ', '*', '‹'][i % 6])
        .collect();
    let start = Instant::now();
    let _ = parse_sketch(&garbage);
    assert!(start.elapsed() < Duration::from_millis(budget));
}

#[test]
fn constructed_step_serializes_with_one_gap() {
    let ast = SketchAst::new(
        Some(TheoremHeader::theorem("t", "x = 1")),
        vec![ProofNode::Block(ProofBlock {
            method: Some("-".into()),
            children: vec![ProofNode::Have(HaveStep {
                chain: None,
                label: Some("c1".into()),
                proposition: "x = 1".into(),
                facts: Facts::default(),
                justification: Justification::Gap,
            })],
            cases: vec![],
        })],
    );
    let text = serialize(&ast);
    assert!(text.contains("c1") && text.contains("\"x = 1\""));
    assert_eq!(text.matches(GAP_TOKEN).count(), 1);
}

#[test]
fn minimal_header_only() {
    let ast = parse_sketch("theorem t: shows \"True\"").unwrap();
    assert_eq!(ast.header.as_ref().unwrap().shows, "True");
    assert!(ast.body.is_empty());
    assert!(extract_gaps(&ast).is_empty());
}

#[test]
fn header_invariants_are_enforced() {
    assert!(parse_sketch("theorem t: shows \"\"").is_err());
    assert!(parse_sketch("theorem t: fixes x :: nat and x :: real shows \"P\"").is_err());
}

#[test]
fn parse_errors_report_offset_and_expectations() {
    let src = "proof -\n  have c0: \"x\" using\n";
    let err = parse_sketch(src).unwrap_err();
    assert!(err.offset <= src.len());
    assert!(!err.message.is_empty());
    let err = parse_sketch("proof - have c0: \"x\" sledgehammer").unwrap_err();
    assert!(err.expected.iter().any(|e| e == "qed"), "{err}");
    let err = parse_sketch_bytes(b"proof - \xff").unwrap_err();
    assert_eq!(err.offset, 8);
}
