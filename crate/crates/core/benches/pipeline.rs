use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use corpuslab::callgraph::build_corpus_callgraph;
use corpuslab::corpus::{catalog_corpus, Strictness};
use corpuslab::featuregraph::{build_feature_graph, NoResolver};
use corpuslab::fixture::{write_fixture, FixtureConfig};
use corpuslab::lexparse::MethodSource;
use corpuslab::metrics::compute_metrics;
use corpuslab::par::{self, ExecMode};
use corpuslab::tokenstats::{tokenizer_ratio, train_bpe, Lexical, RatioMode};

const MODES: [(&str, ExecMode); 2] = [("parallel", ExecMode::Parallel), ("sequential", ExecMode::Sequential)];

fn stages(c: &mut Criterion) {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("corpus");
    write_fixture(&root, &FixtureConfig { inflate: vec![30, 60, 110] }).unwrap();
    let projects = catalog_corpus(&root, Strictness::SkipUnparseable, ExecMode::Sequential).unwrap();
    let methods: Vec<&MethodSource> = projects.iter().flat_map(|p| p.methods()).collect();
    let docs: Vec<&str> = methods.iter().map(|m| m.text.as_str()).collect();
    let vocab = train_bpe(&docs, 1024, 0, "code").unwrap();

    let mut g = c.benchmark_group("stages");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::new("catalog", name), &mode, |b, &m| {
            b.iter(|| catalog_corpus(&root, Strictness::SkipUnparseable, m).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("metrics", name), &mode, |b, &m| {
            b.iter(|| par::map(m, &methods, |x| compute_metrics(x)))
        });
        g.bench_with_input(BenchmarkId::new("featuregraph", name), &mode, |b, &m| {
            b.iter(|| par::map(m, &methods, |x| build_feature_graph(x, &NoResolver).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("callgraph", name), &mode, |b, &m| {
            b.iter(|| build_corpus_callgraph(&projects, m))
        });
        g.bench_with_input(BenchmarkId::new("bpe-ratio", name), &mode, |b, &m| {
            b.iter(|| tokenizer_ratio(&vocab, &Lexical, &docs, RatioMode::PerMethod, m).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, stages);
criterion_main!(benches);
