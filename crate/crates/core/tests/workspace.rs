mod oracles;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;

use corpuslab::corpus::{assign_id, read_metadata, write_metadata, EntityKind, PropertyKey, SizeBucket};
use corpuslab::featuregraph::{filter_edges, EdgeType, FeatureGraph};
use corpuslab::lexparse::lex;
use corpuslab::taskgen::{evaluate_exact_match, most_frequent_name, recover_masked, Split};
use corpuslab::workspace::{Workspace, WorkspaceConfig};
use oracles::{corpus, pipeline, recount_fit, SEED};
use sha2::{Digest, Sha256};

fn read(ws: &Workspace, rel: &str) -> String {
    fs::read_to_string(ws.path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

fn first_line(ws: &Workspace, rel: &str) -> String {
    read(ws, rel).lines().next().unwrap().to_string()
}

// ---------------------------------------------------------------- metadata

#[test]
fn metadata_round_trips_with_exact_headers() {
    let c = corpus();
    let dir = tempfile::tempdir().unwrap();
    write_metadata(&c.catalog, dir.path()).unwrap();
    assert_eq!(read_metadata(dir.path()).unwrap(), c.catalog);
    let header = |f: &str| fs::read_to_string(dir.path().join(f)).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header("projects.csv"), "project_id,project_path,project_name");
    assert_eq!(header("packages.csv"), "project_id,package_id,package_path,package_name");
    assert_eq!(header("classes.csv"), "project_id,package_id,class_id,class_path,class_name");
    assert_eq!(
        header("methods.csv"),
        "project_id,package_id,class_id,method_id,method_path,method_name,start_line,end_line,method_signature"
    );
}

#[test]
fn ids_are_truncated_sha256() {
    let key = "project:demo@demo";
    let mut h = Sha256::new();
    h.update(b"project\0");
    h.update(key.as_bytes());
    let want = hex::encode(&h.finalize()[..16]);
    assert_eq!(assign_id(EntityKind::Project, key).unwrap().to_hex(), want);
    let demo = corpus().project("demo").project();
    assert_eq!(demo.project_id.to_hex(), want);
}

#[test]
fn fixture_shape() {
    let c = corpus();
    let demo = &c.project("demo").catalog;
    assert_eq!(
        (demo.projects.len(), demo.packages.len(), demo.classes.len(), demo.methods.len()),
        (1, 2, 3, 5)
    );
    assert_eq!(c.projects.len(), 7);
    assert!(c.catalog.methods.len() >= 40);
    let skipped: Vec<&str> = c.projects.iter().flat_map(|p| &p.diagnostics).map(|d| d.path.as_str()).collect();
    assert_eq!(skipped, [corpuslab::fixture::BROKEN_FILE]);
    let buckets: BTreeSet<SizeBucket> = c.catalog.size_buckets().into_values().collect();
    assert_eq!(buckets.len(), 4);
    c.catalog.validate().unwrap();
}

#[test]
fn catalog_is_deterministic_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let root = oracles::write_corpus(dir.path());
    let a = Workspace::new(WorkspaceConfig::new(&root, dir.path().join("a"))).unwrap();
    let b = Workspace::new(WorkspaceConfig::new(&root, dir.path().join("b"))).unwrap();
    a.catalog().unwrap();
    b.catalog().unwrap();
    for f in ["projects.csv", "packages.csv", "classes.csv", "methods.csv"] {
        assert_eq!(read(&a, &format!("metadata/{f}")), read(&b, &format!("metadata/{f}")));
    }
    // ids derive from root-relative paths, so any copy of the fixture
    // catalogues identically
    assert_eq!(a.read_catalog().unwrap(), corpus().catalog);
}

// ------------------------------------------------------------ representations

#[test]
fn ftgr_child_filter_equals_asts_for_every_method() {
    let ws = pipeline();
    let asts = ws.read_repr("ASTS").unwrap();
    let ftgr = ws.read_repr("FTGR").unwrap();
    assert_eq!(asts.len(), ftgr.len());
    let keep = BTreeSet::from([EdgeType::Child]);
    for (id, payload) in &ftgr {
        let g = FeatureGraph::from_json(payload).unwrap();
        let filtered = filter_edges(&g, &keep).unwrap();
        let tree = FeatureGraph::from_json(&asts[id]).unwrap();
        assert_eq!(filtered.edges, tree.edges, "{id}");
        assert_eq!(filtered.nodes[..tree.nodes.len()], tree.nodes[..], "{id}");
    }
}

#[test]
fn every_repr_covers_every_method() {
    let ws = pipeline();
    let methods: BTreeSet<_> = ws.read_catalog().unwrap().methods.iter().map(|m| m.method_id).collect();
    for ty in ["TEXT", "TKNA", "TKNB", "ASTS", "C2VC", "C2SQ", "FTGR"] {
        let r = ws.read_repr(ty).unwrap();
        assert_eq!(r.keys().copied().collect::<BTreeSet<_>>(), methods, "{ty}");
        assert_eq!(first_line(ws, &format!("repr/{ty}.csv")), "method_id,payload");
    }
}

// ------------------------------------------------------------- properties

#[test]
fn property_files_hold_every_method() {
    let ws = pipeline();
    let n = ws.read_catalog().unwrap().methods.len();
    for key in PropertyKey::builtins().filter(|k| k.has_computer()) {
        let rows = ws.read_property(&key).unwrap();
        assert_eq!(rows.len(), n, "{key}");
    }
    let sloc = ws.read_property(&PropertyKey::new("SLOC").unwrap()).unwrap();
    let tloc = ws.read_property(&PropertyKey::new("TLOC").unwrap()).unwrap();
    for (id, s) in &sloc {
        assert!(s.as_int().unwrap() <= tloc[id].as_int().unwrap());
    }
}

// ---------------------------------------------------------------- taskgen

#[test]
fn splits_are_project_disjoint() {
    let ws = pipeline();
    let catalog = ws.read_catalog().unwrap();
    let project_of: BTreeMap<_, _> = catalog.methods.iter().map(|m| (m.method_id, m.project_id)).collect();
    for task in ["call-mask", "mutation", "property-CMPX"] {
        let ds = ws.read_task(task).unwrap();
        let mut seen = BTreeMap::new();
        let mut violations = 0;
        for s in &ds.samples {
            if *seen.entry(project_of[&s.method_id]).or_insert(s.split) != s.split {
                violations += 1;
            }
        }
        assert_eq!(violations, 0, "{task}");
        assert!(ds.leaking_projects().is_empty());
    }
    let ds = ws.read_task("call-mask").unwrap();
    for split in Split::ALL {
        assert!(ds.split(split).count() > 0, "{split} is empty");
    }
}

#[test]
fn datasets_are_seed_reproducible() {
    use corpuslab::taskgen::SplitFracs;
    use corpuslab::workspace::TaskSpec;
    let ws = pipeline();
    let mask = TaskSpec::CallMask { include_constructors: false, context_hops: 0, exclude_masked: true };
    ws.taskgen(&mask, SplitFracs::default(), Some("call-mask-again")).unwrap();
    assert_eq!(read(ws, "tasks/call-mask/dataset.csv"), read(ws, "tasks/call-mask-again/dataset.csv"));
    assert_eq!(read(ws, "tasks/call-mask/masks.csv"), read(ws, "tasks/call-mask-again/masks.csv"));
    ws.taskgen(&TaskSpec::Mutation { p_mutate: 0.5 }, SplitFracs::default(), Some("mutation-again")).unwrap();
    assert_eq!(read(ws, "tasks/mutation/dataset.csv"), read(ws, "tasks/mutation-again/dataset.csv"));
}

#[test]
fn masks_recover_the_original_tokens() {
    let ws = pipeline();
    let tkna = ws.read_repr("TKNA").unwrap();
    let ds = ws.read_task("call-mask").unwrap();
    assert!(ds.samples.len() > 100);
    for s in &ds.samples {
        assert_eq!(s.payload.matches("<MASK>").count(), 1);
        assert_eq!(recover_masked(s), tkna[&s.method_id], "{}", s.sample_id);
        assert!(s.stratum.is_some());
    }
}

#[test]
fn mutations_are_argument_swaps_at_the_requested_rate() {
    let ws = pipeline();
    let tkna = ws.read_repr("TKNA").unwrap();
    let ds = ws.read_task("mutation").unwrap();
    let mut mutated = 0;
    for s in &ds.samples {
        let original = &tkna[&s.method_id];
        if s.label == "mutated" {
            mutated += 1;
            assert_ne!(&s.payload, original);
            let mut a: Vec<&str> = s.payload.split(' ').collect();
            let mut b: Vec<&str> = original.split(' ').collect();
            a.sort_unstable();
            b.sort_unstable();
            assert_eq!(a, b, "a swap keeps the token multiset");
        } else {
            assert_eq!(s.label, "clean");
            assert_eq!(&s.payload, original);
        }
    }
    // only methods with two distinct arguments somewhere can be mutated;
    // among all methods the rate must stay below p and well above zero
    let n = ds.samples.len() as f64;
    let rate = mutated as f64 / n;
    let sd = (0.25 / n).sqrt();
    assert!(rate < 0.5 + 4.0 * sd, "{rate}");
    assert!(mutated > 0);
}

#[test]
fn balanced_property_task_has_equal_label_counts() {
    let ws = pipeline();
    let ds = ws.read_task("property-CMPX").unwrap();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &ds.samples {
        *counts.entry(s.label.as_str()).or_default() += 1;
    }
    assert!(counts.len() >= 2);
    let first = *counts.values().next().unwrap();
    assert!(counts.values().all(|&c| c == first), "{counts:?}");
}

#[test]
fn baseline_strata_recombine_to_overall() {
    let ws = pipeline();
    let ds = ws.read_task("call-mask").unwrap();
    let preds = corpuslab::taskgen::read_predictions(&ws.path("reports/eval-call-mask-most-frequent.predictions.csv")).unwrap();
    assert_eq!(preds, most_frequent_name(&ds));
    let r = evaluate_exact_match(&ds, &preds, Split::Test);
    let n: usize = r.per_stratum.values().map(|a| a.n).sum();
    assert_eq!(n, r.overall.n);
    let recombined: f64 = r.per_stratum.values().map(|a| a.accuracy * a.n as f64).sum::<f64>() / n as f64;
    assert!((recombined - r.overall.accuracy).abs() < 1e-9);
    let by_bucket: f64 = r.per_bucket.values().map(|a| a.accuracy * a.n as f64).sum::<f64>() / n as f64;
    assert!((by_bucket - r.overall.accuracy).abs() < 1e-9);
    // the report file agrees with the in-memory tally
    let csv = read(ws, "reports/eval-call-mask-most-frequent.csv");
    let overall = csv.lines().nth(1).unwrap();
    assert_eq!(overall, format!("overall,all,{},{},{:.6}", r.overall.n, r.overall.correct, r.overall.accuracy));
}

// -------------------------------------------------------------- tokenstats

fn ratio_row(ws: &Workspace, tag: &str) -> String {
    read(ws, "tokenstats/ratios.csv")
        .lines()
        .find(|l| l.starts_with(&format!("{tag},")))
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .to_string()
}

#[test]
fn ratios_match_a_two_pass_recount_and_keep_their_order() {
    let ws = pipeline();
    let catalog = ws.read_catalog().unwrap();
    let text = ws.read_repr("TEXT").unwrap();
    // pass one: per-method counts
    let mut counts: BTreeMap<&str, Vec<(usize, usize)>> = BTreeMap::new();
    for tag in ["code", "mixed", "english"] {
        let v = ws.read_vocab(tag).unwrap();
        assert_eq!(v.size(), 1024, "{tag}");
        for m in &catalog.methods {
            let t = &text[&m.method_id];
            let base = lex(t).map_or(0, |x| x.len());
            counts.entry(tag).or_default().push((v.encode(t).len(), base));
        }
    }
    // pass two: means
    let mut ratio = BTreeMap::new();
    for (tag, rows) in &counts {
        let kept: Vec<_> = rows.iter().filter(|r| r.1 > 0).collect();
        let mean = kept.iter().map(|&&(s, b)| 100.0 * s as f64 / b as f64).sum::<f64>() / kept.len() as f64;
        assert_eq!(format!("{mean:.6}"), ratio_row(ws, tag), "{tag}");
        ratio.insert(*tag, mean);
    }
    assert!(ratio["code"] <= ratio["mixed"]);
    assert!(ratio["mixed"] <= 100.0);
    assert!(ratio["code"] < 100.0 && 100.0 < ratio["english"]);
}

#[test]
fn bpe_round_trips_every_document() {
    let ws = pipeline();
    let text = ws.read_repr("TEXT").unwrap();
    let english = corpuslab::workspace::english_documents();
    for tag in ["code", "mixed", "english"] {
        let v = ws.read_vocab(tag).unwrap();
        for t in text.values().map(String::as_str).chain(english.iter().copied()) {
            let ids = v.encode(t);
            assert_eq!(v.decode(&ids), t);
            assert!(ids.len() >= t.len().div_ceil(v.longest_symbol()));
        }
    }
}

#[test]
fn fit_tables_equal_a_recount_and_are_monotone() {
    let ws = pipeline();
    let sizes = read(ws, "tokenstats/sizes.csv");
    assert_eq!(sizes.lines().next().unwrap(), "entity_id,granularity,tokenizer_tag,subtoken_count");
    let want = recount_fit(&sizes, &[256, 512, 1024, 2048, 4096]);
    let fit = read(ws, "tokenstats/fit.csv");
    let mut rdr = csv::Reader::from_reader(fit.as_bytes());
    let mut seen = 0;
    let mut last: BTreeMap<(String, String, String), f64> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let fraction: f64 = rec[6].parse().unwrap();
        assert!((0.0..=1.0).contains(&fraction));
        let group = (rec[0].to_string(), rec[1].to_string(), rec[2].to_string());
        if let Some(&prev) = last.get(&group) {
            assert!(fraction >= prev, "{group:?}");
        }
        last.insert(group, fraction);
        if !rec[2].is_empty() {
            continue;
        }
        let t: u64 = rec[3].parse().unwrap();
        let (pop, ok) = want[&(rec[0].to_string(), rec[1].to_string(), t)];
        assert_eq!((rec[4].parse::<usize>().unwrap(), rec[5].parse::<usize>().unwrap()), (pop, ok));
        assert_eq!(&rec[6], format!("{:.6}", ok as f64 / pop as f64));
        seen += 1;
    }
    assert_eq!(seen, want.len());
    assert_eq!(read(ws, "reports/windows.csv"), fit);
}

#[test]
fn containment_of_sizes() {
    let ws = pipeline();
    let catalog = ws.read_catalog().unwrap();
    let rows = corpuslab::tokenstats::read_sizes_csv(&ws.path("tokenstats/sizes.csv")).unwrap();
    let size: BTreeMap<(_, String), u64> = rows.iter().map(|r| ((r.entity_id, r.tokenizer_tag.clone()), r.subtoken_count)).collect();
    for tag in ["lexical", "code", "english"] {
        let tag = tag.to_string();
        for m in &catalog.methods {
            assert!(size[&(m.class_id, tag.clone())] >= size[&(m.method_id, tag.clone())]);
        }
        for p in &catalog.packages {
            assert!(size[&(p.project_id, tag.clone())] >= size[&(p.package_id, tag.clone())]);
        }
    }
}

// ---------------------------------------------------------------- reports

#[test]
fn call_report_sums_to_one_hundred_percent() {
    let ws = pipeline();
    let csv = read(ws, "reports/calls.csv");
    let mut rows = csv.lines().skip(1).map(|l| l.split(',').collect::<Vec<_>>());
    let (mut count, mut pct) = (0usize, 0f64);
    let recount = oracles::recount_call_types(&read(ws, "callgraph/callgraph.csv"));
    for r in rows.by_ref() {
        assert_eq!(r[1].parse::<usize>().unwrap(), recount[r[0]], "{}", r[0]);
        count += r[1].parse::<usize>().unwrap();
        pct += r[2].parse::<f64>().unwrap();
    }
    assert_eq!(count, recount.values().sum::<usize>());
    assert!((pct - 100.0).abs() < 1e-4);
}

#[test]
fn bias_table_counts_every_method_once() {
    let ws = pipeline();
    let n = ws.read_catalog().unwrap().methods.len() as u64;
    let csv = read(ws, "reports/bias.csv");
    let total: u64 = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, n);
}

#[test]
fn every_artifact_records_the_seed() {
    let ws = pipeline();
    for run in [
        "metadata/run.json",
        "repr/run.json",
        "properties/run.json",
        "callgraph/run.json",
        "tasks/call-mask/run.json",
        "tokenstats/run.json",
        "reports/calls.run.json",
    ] {
        let v: serde_json::Value = serde_json::from_str(&read(ws, run)).unwrap();
        assert_eq!(v["seed"], SEED, "{run}");
    }
}

#[test]
fn unknown_property_names_its_producer() {
    let ws = pipeline();
    let err = ws.read_property(&PropertyKey::new("RSLK").unwrap()).unwrap_err().to_string();
    assert!(err.contains("props-import"), "{err}");
}
