mod oracles;

use std::collections::BTreeSet;

use corpuslab::featuregraph::{build_feature_graph, filter_edges, EdgeType, NoResolver};
use corpuslab::lexparse::{decode_tknb, lex, parse, tokens_tknb};
use oracles::corpus;
use proptest::prelude::*;
use proptest::sample::subsequence;

fn token_text() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-zA-Z_][a-zA-Z0-9_]{0,8}",
        "[0-9]{1,5}",
        "\"[a-z ,.;]{0,10}\"",
        "'[a-z,]'",
        Just(",".to_string()),
        Just(";".to_string()),
        Just("(".to_string()),
        Just(")".to_string()),
        Just("+=".to_string()),
        Just("&&".to_string()),
        Just("return".to_string()),
    ]
}

proptest! {
    #[test]
    fn tknb_decodes_to_the_lexemes(parts in prop::collection::vec(token_text(), 0..30)) {
        let src = parts.join(" ");
        let tokens = lex(&src).unwrap();
        let lexemes: Vec<String> = tokens.iter().map(|t| t.lexeme.clone()).collect();
        prop_assert_eq!(decode_tknb(&tokens_tknb(&tokens)), lexemes);
    }

    #[test]
    fn edge_filters_are_idempotent(
        idx in 0usize..1000,
        keep in subsequence(EdgeType::ALL.to_vec(), 1..=EdgeType::ALL.len()),
    ) {
        let methods: Vec<_> = corpus().handwritten().collect();
        let m = methods[idx % methods.len()];
        let g = build_feature_graph(m, &NoResolver).unwrap();
        let keep: BTreeSet<EdgeType> = keep.into_iter().collect();
        let once = filter_edges(&g, &keep).unwrap();
        prop_assert_eq!(&filter_edges(&once, &keep).unwrap(), &once);
        prop_assert!(once.edges.keys().all(|t| keep.contains(t)));
        for t in &keep {
            prop_assert_eq!(once.edges.get(t), g.edges.get(t));
        }
    }
}

#[test]
fn every_fixture_method_tree_is_well_formed() {
    for m in corpus().methods() {
        m.ast.validate().unwrap();
        let lexemes: Vec<&str> = m.ast.terminals().into_iter().filter_map(|t| m.ast.lexeme(t)).collect();
        let relexed = lex(&m.text).unwrap();
        assert_eq!(lexemes, relexed.iter().map(|t| t.lexeme.as_str()).collect::<Vec<_>>(), "{}", m.signature);
    }
}

#[test]
fn outside_the_subset_is_a_syntax_error() {
    for src in [
        "class A { void f() { switch (x) { } } }",
        "class A { Runnable f() { return () -> 1; } }",
        "class A { void f() { try { g(); } catch (E e) { } } }",
        "class A { void f() { for (int x : xs) { } } }",
    ] {
        assert!(parse(src).is_err(), "{src}");
    }
}
