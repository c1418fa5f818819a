mod oracles;

use corpuslab::pathcontexts::{extract_paths, subtokens, to_c2sq, to_c2vc, PathConfig, RenderOptions};
use oracles::{all_pairs_paths, corpus};
use proptest::prelude::*;

#[test]
fn unlimited_extraction_equals_all_pairs() {
    for m in corpus().methods() {
        let mut got: Vec<(usize, usize, String)> = extract_paths(&m.ast, &PathConfig::unlimited(), 0)
            .unwrap()
            .into_iter()
            .map(|p| (p.start, p.end, p.shape()))
            .collect();
        let mut want = all_pairs_paths(&m.ast);
        let leaves = m.ast.terminals().len();
        assert_eq!(want.len(), leaves * (leaves - 1) / 2);
        got.sort();
        want.sort();
        assert_eq!(got, want, "{}", m.signature);
    }
}

#[test]
fn limits_only_remove_paths() {
    let cfg = PathConfig { max_length: 6, max_width: 3, max_contexts: usize::MAX };
    for m in corpus().handwritten() {
        let all = all_pairs_paths(&m.ast);
        let limited = extract_paths(&m.ast, &cfg, 0).unwrap();
        assert!(limited.len() <= all.len());
        for p in &limited {
            assert!(p.length() <= 6);
            assert!(all.iter().any(|(s, e, shape)| (*s, *e) == (p.start, p.end) && *shape == p.shape()));
        }
    }
}

#[test]
fn sampling_is_seed_reproducible() {
    let cfg = PathConfig { max_contexts: 10, ..PathConfig::default() };
    for m in corpus().methods().take(60) {
        let a = extract_paths(&m.ast, &cfg, 7).unwrap();
        let b = extract_paths(&m.ast, &cfg, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.len() <= 10);
        let opts = RenderOptions::default();
        assert_eq!(to_c2vc(m, &a, opts), to_c2vc(m, &b, opts));
        assert_eq!(to_c2sq(m, &a), to_c2sq(m, &b));
    }
}

#[test]
fn sampling_keeps_a_subset() {
    let m = corpus().method("Flow", "score(int,int)");
    let full = extract_paths(&m.ast, &PathConfig { max_contexts: usize::MAX, ..PathConfig::default() }, 0).unwrap();
    let cfg = PathConfig { max_contexts: 5, ..PathConfig::default() };
    let seeds: Vec<_> = (0..4).map(|s| extract_paths(&m.ast, &cfg, s).unwrap()).collect();
    for sample in &seeds {
        assert_eq!(sample.len(), 5);
        assert!(sample.iter().all(|p| full.contains(p)));
    }
    assert!(seeds.windows(2).any(|w| w[0] != w[1]), "different seeds should usually differ");
}

#[test]
fn zero_limits_are_rejected() {
    let m = corpus().method("Flow", "empty()");
    let cfg = PathConfig { max_length: 0, ..PathConfig::default() };
    assert!(extract_paths(&m.ast, &cfg, 0).is_err());
}

proptest! {
    #[test]
    fn subtokens_are_lowercase_pieces_of_the_identifier(ident in "[a-zA-Z_][a-zA-Z0-9_]{0,20}") {
        let parts = subtokens(&ident);
        let squashed: String = ident.chars().filter(|c| *c != '_').collect::<String>().to_lowercase();
        prop_assert_eq!(parts.concat(), squashed);
        for p in &parts {
            prop_assert!(!p.is_empty());
            prop_assert_eq!(p.to_lowercase(), p.clone());
        }
    }
}
