use std::fs;
use std::path::PathBuf;

use dsp_sketch::*;

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/sketches")
}

fn fixture(name: &str) -> String {
    fs::read_to_string(fixture_dir().join(name)).unwrap()
}

fn all_fixtures() -> Vec<(String, String)> {
    let mut out: Vec<_> = fs::read_dir(fixture_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "thy"))
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn every_fixture_parses_and_round_trips() {
    let fixtures = all_fixtures();
    assert!(fixtures.len() >= 20, "only {} fixtures", fixtures.len());
    for (name, src) in fixtures {
        let ast = parse_sketch(&src).unwrap_or_else(|e| panic!("{name}: {e}"));
        let text = serialize(&ast);
        let again = parse_sketch(&text).unwrap_or_else(|e| panic!("{name} reparse: {e}\n{text}"));
        assert_eq!(ast, again, "{name} round trip");
        assert_eq!(serialize(&again), text, "{name} serialization is stable");
    }
}

#[test]
fn binomial_sketch_has_seven_gaps() {
    let ast = parse_sketch(&fixture("algebra_binomnegdiscrineq_10alt28asqp1.thy")).unwrap();
    let header = ast.header.as_ref().unwrap();
    assert_eq!(
        header.name.as_deref(),
        Some("algebra_binomnegdiscrineq_10alt28asqp1")
    );
    assert_eq!(header.fixes[0].name, "a");
    assert_eq!(header.fixes[0].sort.as_deref(), Some("real"));

    assert_eq!(ast.body.len(), 1);
    let ProofNode::Block(outer) = &ast.body[0] else {
        panic!("expected a block")
    };
    assert_eq!(outer.method.as_deref(), Some("-"));
    let c0 = outer
        .children
        .iter()
        .find(|n| n.label() == Some("c0"))
        .expect("c0");
    assert!(matches!(c0.justification(), Some(Justification::Nested(_))));

    let gaps = extract_gaps(&ast);
    assert_eq!(gaps.len(), 7);
    let labels: Vec<_> = gaps.iter().map(|g| g.label.as_deref()).collect();
    assert_eq!(
        labels,
        [
            Some("c1"),
            Some("c2"),
            Some("c3"),
            Some("c4"),
            Some("c5"),
            None,
            None
        ]
    );
    assert_eq!(
        gaps[0].proposition,
        "(a - (5/28))^2 = a^2 - 10/28a + (5/28)^2"
    );
    assert_eq!(gaps[5].proposition, "?thesis");
    assert_eq!(gaps[6].proposition, "?thesis");
    assert_eq!(gaps[1].facts_used, ["c1"]);
    assert_eq!(gaps[4].facts_in_scope, ["c1", "c2", "c3", "c4"]);
    assert_eq!(gaps[6].facts_in_scope, ["c0"]);
    assert!(gaps[1]
        .preceding_comment
        .as_deref()
        .unwrap()
        .contains("we get 0 <= a^2"));
    assert!(gaps[2].preceding_comment.is_some());
    assert!(gaps[3].preceding_comment.is_none());
    assert!(unresolved_facts(&ast).is_empty());
}

#[test]
fn gcd_proof_has_five_tactics_and_no_gaps() {
    let src = fixture("imo_1959_p1.thy");
    let ast = parse_sketch(&src).unwrap();
    assert_eq!(ast.gap_count(), 0);
    assert!(extract_gaps(&ast).is_empty());
    let mut tactics = Vec::new();
    ast.visit(&mut |node| {
        if let Some(Justification::Tactic(t)) = node.justification() {
            tactics.push(t.clone());
        }
    });
    assert_eq!(tactics.len(), 5);
    assert_eq!(tactics[0], "by auto");
    assert_eq!(tactics[1], "by auto");
    assert_eq!(tactics[2], "by auto");
    assert!(tactics[3].starts_with("by (smt (z3) BitM_plus_one"));
    assert!(tactics[3].ends_with("semiring_norm(3))"));
    assert_eq!(tactics[4], "by blast");
    assert!(check_no_cheat(&src).clean);
}

#[test]
fn library_facts_are_flagged_not_rejected() {
    let ast = parse_sketch(&fixture("numbertheory_sqmod4in01d_cases.thy")).unwrap();
    let names: Vec<_> = unresolved_facts(&ast).into_iter().map(|f| f.name).collect();
    assert_eq!(
        names,
        ["evenE", "power2_eq_square", "oddE", "power2_eq_square"]
    );
}

#[test]
fn case_blocks_and_chains_are_recognised() {
    let ast = parse_sketch(&fixture("induction_1pxpownlt1pnx.thy")).unwrap();
    let ProofNode::Block(b) = &ast.body[0] else {
        panic!()
    };
    assert_eq!(b.method.as_deref(), Some("(induct n)"));
    let names: Vec<_> = b.cases.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, ["0", "(Suc n)"]);

    let ast = parse_sketch(&fixture("numbertheory_sqmod4in01d_residues.thy")).unwrap();
    let mut chains = Vec::new();
    ast.visit(&mut |node| match node {
        ProofNode::Have(s) => chains.push(s.chain),
        ProofNode::Show(s) => chains.push(s.chain),
        _ => {}
    });
    assert_eq!(
        chains,
        [None, None, Some(Chain::Also), Some(Chain::Finally)]
    );
}

#[test]
fn short_form_statement_with_terminal_step() {
    let ast = parse_sketch(&fixture("mathd_numbertheory_551.thy")).unwrap();
    let h = ast.header.as_ref().unwrap();
    assert_eq!(h.shows, "1529 mod 6 = (5::nat)");
    assert_eq!(
        ast.body,
        [ProofNode::Terminal(Justification::Tactic("by auto".into()))]
    );
}

#[test]
fn unnamed_theorem_with_bare_gap_markers() {
    let ast = parse_sketch(&fixture("imo_1959_p1_human_sketch.thy")).unwrap();
    assert_eq!(ast.header.as_ref().unwrap().name, None);
    let gaps = extract_gaps(&ast);
    assert_eq!(gaps.len(), 3);
    assert_eq!(gaps[1].proposition, "... = (7*n + 1, 1)");
    assert_eq!(ast.comment_count(), 1);
}

#[test]
fn filling_every_gap_closes_the_sketch() {
    let mut ast = parse_sketch(&fixture("algebra_binomnegdiscrineq_10alt28asqp1.thy")).unwrap();
    let first = extract_gaps(&ast)[0].clone();
    let once = fill_gap(&ast, &first, "by auto").unwrap();
    assert_eq!(extract_gaps(&once).len(), 6);
    assert_eq!(
        fill_gap(&once, &first, "by auto"),
        Err(FillError::InvalidSite {
            path: first.path.clone()
        })
    );

    while let Some(site) = extract_gaps(&ast).first().cloned() {
        ast = fill_gap(&ast, &site, "by simp").unwrap();
    }
    let text = serialize(&ast);
    assert!(!text.contains(GAP_TOKEN));
    assert_eq!(parse_sketch(&text).unwrap(), ast);
}

#[test]
fn stripping_keeps_gaps_and_is_idempotent() {
    let ast = parse_sketch(&fixture("algebra_binomnegdiscrineq_10alt28asqp1.thy")).unwrap();
    assert!(ast.comment_count() > 0);
    let stripped = strip_comments(&ast);
    assert_eq!(stripped.comment_count(), 0);
    assert_eq!(stripped.gap_count(), 7);
    assert_eq!(strip_comments(&stripped), stripped);
}

#[test]
fn spans_lie_within_source_and_siblings_do_not_overlap() {
    for (name, src) in all_fixtures() {
        let ast = parse_sketch(&src).unwrap();
        assert!(!ast.spans.is_empty(), "{name}");
        for (path, span) in &ast.spans {
            assert!(
                span.start <= span.end && span.end <= src.len(),
                "{name} {path:?}"
            );
            assert!(ast.node(path).is_some(), "{name} {path:?}");
        }
        let entries: Vec<_> = ast.spans.iter().collect();
        for (i, (pa, sa)) in entries.iter().enumerate() {
            for (pb, sb) in &entries[i + 1..] {
                let siblings = pa.len() == pb.len() && pa[..pa.len() - 1] == pb[..pb.len() - 1];
                if siblings {
                    assert!(
                        sa.end <= sb.start || sb.end <= sa.start,
                        "{name} {pa:?} {pb:?}"
                    );
                }
            }
        }
    }
}
