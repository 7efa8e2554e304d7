//! Proptest strategies for sketch trees.

use proptest::collection::vec;
use proptest::option;
use proptest::prelude::*;

use crate::*;

fn label() -> BoxedStrategy<String> {
    prop_oneof![
        (0..20u32).prop_map(|i| format!("c{i}")),
        (0..3u32).prop_map(|i| format!("h{i}")),
        Just("step_1'".to_string()),
    ]
    .boxed()
}

fn proposition() -> BoxedStrategy<String> {
    prop_oneof![
        "[a-z0-9][a-z0-9 +*/=<>()^-]{0,23}",
        Just("0 \\<le> 28*a^2 - 10*a + 1".to_string()),
        Just("a mod 4 \\<in> {0, 1, 2, 3}".to_string()),
        Just("x \\<le> -1 \\<Longrightarrow> False".to_string()),
        Just("... = (7*n + 1, 1)".to_string()),
        Just("‹x = 42› ⟹ y ≥ 0".to_string()),
    ]
    .boxed()
}

pub fn comment() -> BoxedStrategy<String> {
    prop_oneof![
        "[ a-zA-Z0-9.,=+]{0,30}",
        Just(" nested (* inner *) text ".to_string()),
        Just(" We have \\gcd(7n+1,1)=1 ".to_string()),
    ]
    .boxed()
}

pub fn tactic() -> BoxedStrategy<String> {
    prop_oneof![
        Just("by auto".to_string()),
        Just("by simp".to_string()),
        Just("by (auto simp: field_simps)".to_string()),
        Just("by (smt (z3) numeral_eq_Suc power_mod)".to_string()),
        Just("by (induct n) auto".to_string()),
        Just("sorry".to_string()),
    ]
    .boxed()
}

fn facts() -> BoxedStrategy<Facts> {
    let name = prop_oneof![
        label(),
        Just("assms".to_string()),
        Just("gcd_add2".to_string())
    ];
    (vec(name.clone(), 0..3), vec(name, 0..2))
        .prop_map(|(using, unfolding)| Facts { using, unfolding })
        .boxed()
}

fn chain() -> impl Strategy<Value = Option<Chain>> {
    option::of(prop_oneof![
        Just(Chain::Then),
        Just(Chain::Also),
        Just(Chain::Finally)
    ])
}

fn method() -> impl Strategy<Value = Option<String>> {
    option::of(prop_oneof![
        Just("-".to_string()),
        Just("(induct n)".to_string()),
        Just("(cases \"even a\")".to_string()),
        Just("auto".to_string()),
    ])
}

fn case_name() -> BoxedStrategy<String> {
    prop_oneof![
        Just("True".to_string()),
        Just("False".to_string()),
        Just("0".to_string()),
        Just("(Suc n)".to_string()),
    ]
    .boxed()
}

fn flat_justification() -> BoxedStrategy<Justification> {
    prop_oneof![
        3 => Just(Justification::Gap),
        2 => tactic().prop_map(Justification::Tactic),
    ]
    .boxed()
}

fn step(just: BoxedStrategy<Justification>) -> BoxedStrategy<ProofNode> {
    let have = (
        chain(),
        option::of(label()),
        proposition(),
        facts(),
        just.clone(),
    )
        .prop_map(|(chain, label, proposition, facts, justification)| {
            ProofNode::Have(HaveStep {
                chain,
                label,
                proposition,
                facts,
                justification,
            })
        });
    let target = prop_oneof![
        Just(ShowTarget::thesis()),
        Just(ShowTarget::Abbrev("?case".into())),
        proposition().prop_map(ShowTarget::Prop),
    ];
    let show = (chain(), target, facts(), just.clone()).prop_map(
        |(chain, target, facts, justification)| {
            ProofNode::Show(ShowStep {
                chain,
                target,
                facts,
                justification,
            })
        },
    );
    let vars = vec(
        prop_oneof![Just("k".to_string()), Just("m".to_string())],
        1..3,
    );
    let obtain = (
        chain(),
        vars,
        option::of(label()),
        proposition(),
        facts(),
        just,
    )
        .prop_map(|(chain, vars, label, proposition, facts, justification)| {
            ProofNode::Obtain(ObtainStep {
                chain,
                vars,
                label,
                proposition,
                facts,
                justification,
            })
        });
    let assume = (option::of(label()), proposition())
        .prop_map(|(label, proposition)| ProofNode::Assume(AssumeStep { label, proposition }));
    prop_oneof![4 => have, 2 => show, 1 => obtain, 1 => assume, 1 => comment().prop_map(ProofNode::Comment)]
        .boxed()
}

fn block_from(nodes: BoxedStrategy<ProofNode>) -> BoxedStrategy<ProofBlock> {
    let case = (case_name(), vec(nodes.clone(), 0..3))
        .prop_map(|(name, children)| CaseBlock { name, children });
    (
        method(),
        vec(nodes, 0..5),
        prop_oneof![3 => Just(Vec::new()), 1 => vec(case, 1..3)],
    )
        .prop_map(|(method, children, cases)| ProofBlock {
            method,
            children,
            cases,
        })
        .boxed()
}

fn block() -> BoxedStrategy<ProofBlock> {
    let nodes = step(flat_justification().boxed())
        .boxed()
        .prop_recursive(3, 40, 5, |inner| {
            let nested = block_from(inner).prop_map(Justification::Nested);
            step(prop_oneof![3 => flat_justification(), 1 => nested].boxed())
        })
        .boxed();
    block_from(nodes).boxed()
}

fn header() -> BoxedStrategy<TheoremHeader> {
    let sort = option::of(prop_oneof![
        Just("real".to_string()),
        Just("nat".to_string()),
        Just("\"real \\<Rightarrow> real\"".to_string()),
    ]);
    let fixes = vec(sort, 0..3).prop_map(|sorts| {
        sorts
            .into_iter()
            .enumerate()
            .map(|(i, sort)| FixedVar {
                name: format!("x{i}"),
                sort,
            })
            .collect::<Vec<_>>()
    });
    let assumes = vec(
        (option::of(label()), proposition())
            .prop_map(|(label, proposition)| Assumption { label, proposition }),
        0..3,
    );
    (
        prop_oneof![Just("theorem".to_string()), Just("lemma".to_string())],
        option::of(prop_oneof![
            Just("t".to_string()),
            Just("imo_1959_p1".to_string())
        ]),
        fixes,
        assumes,
        proposition(),
    )
        .prop_map(|(keyword, name, fixes, assumes, shows)| TheoremHeader {
            keyword,
            name,
            fixes,
            assumes,
            shows,
        })
        .boxed()
}

/// Random sketches whose serialization parses back to the same tree.
pub fn sketch() -> BoxedStrategy<SketchAst> {
    let main = prop_oneof![
        3 => block().prop_map(ProofNode::Block),
        1 => flat_justification().prop_map(ProofNode::Terminal),
    ];
    (
        option::of(header()),
        vec(comment().prop_map(ProofNode::Comment), 0..2),
        option::of(main),
        vec(comment().prop_map(ProofNode::Comment), 0..2),
    )
        .prop_map(|(header, before, main, after)| {
            let mut body = before;
            let has_main = main.is_some();
            body.extend(main);
            if has_main {
                body.extend(after);
            }
            SketchAst::new(header, body)
        })
        .boxed()
}
