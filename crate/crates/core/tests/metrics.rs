mod oracles;

use corpuslab::metrics::{compute_metrics, cyclomatic, npath};
use oracles::{census, cmpx_from_tokens, corpus, npath_by_enumeration, FLOW};

#[test]
fn hand_analyzed_values_agree_with_both_oracles() {
    let c = corpus();
    for &(sig, cmpx, npth) in FLOW {
        let m = c.method("Flow", sig);
        assert_eq!(cmpx_from_tokens(m), cmpx, "{sig} decision-count oracle");
        assert_eq!(npath_by_enumeration(&m.ast) as u64, npth, "{sig} path oracle");
        let r = compute_metrics(m);
        assert_eq!((r.cmpx, r.npth), (cmpx, npth), "{sig}");
    }
}

#[test]
fn complexity_matches_oracles_corpus_wide() {
    for m in corpus().methods() {
        assert_eq!(cyclomatic(&m.ast), cmpx_from_tokens(m), "{}", m.signature);
        assert_eq!(npath(&m.ast), npath_by_enumeration(&m.ast) as u64, "{}", m.signature);
    }
}

#[test]
fn token_census_adds_up() {
    for m in corpus().methods() {
        let r = compute_metrics(m);
        let c = census(m);
        assert_eq!(r.nmtk, c.total, "{}", m.signature);
        assert_eq!(r.nmop, c.operators);
        assert_eq!(r.nmlt, c.literals);
        assert_eq!(r.nmop + r.nmlt + c.identifiers + c.keywords + c.separators, r.nmtk);
    }
}

#[test]
fn line_counts_and_returns() {
    let c = corpus();
    let r = compute_metrics(c.method("Flow", "sign(int)"));
    assert_eq!((r.tloc, r.sloc, r.nmrt, r.mxin, r.nmpr), (9, 9, 3, 1, 1));
    let r = compute_metrics(c.method("Flow", "pairs(int)"));
    assert_eq!((r.nmrt, r.mxin), (1, 2));
    let r = compute_metrics(c.method("Flow", "empty()"));
    assert_eq!((r.tloc, r.sloc, r.nmtk), (2, 2, 6));
}
