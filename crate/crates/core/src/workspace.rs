//! File-based pipeline over a corpus directory and an output workspace.
//!
//! Each command reads the artifacts it depends on, writes only its own
//! files and records the seed and settings in a `run.json` beside them.
//! Commands return a JSON summary object.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::callgraph::{
    build_corpus_callgraph, classify_distribution, connectivity_props, CallGraph, CallType, ProjectIndex,
};
use crate::corpus::csvio::{read_csv, write_csv, write_file};
use crate::corpus::properties::{read_property_csv, write_property_csv};
use crate::corpus::{
    catalog_project, discover_projects, merged_catalog, read_metadata, write_metadata, Catalog, EntityId,
    ProjectParse, PropertyKey, PropertyStore, PropertyTable, Strictness,
};
use crate::featuregraph::{build_feature_graph, filter_edges, EdgeType, FeatureGraph};
use crate::lexparse::{method_tkna, method_tknb, MethodSource};
use crate::metrics::{compute_metrics, metric_tables, property_correlation_report};
use crate::par::{self, ExecMode};
use crate::pathcontexts::{extract_paths, to_c2sq, to_c2vc, PathConfig, RenderOptions};
use crate::taskgen::{
    evaluate_exact_match, make_call_masking_task, make_mutation_task, make_property_task, most_frequent_name,
    read_predictions, unigram_baseline, write_predictions, EvalReport, Filter, MaskConfig, Split, SplitFracs,
    TaskDataset,
};
use crate::tokenstats::{
    compute_sizes, fit_to_csv, read_sizes_csv, sizes_to_csv, tokenizer_ratio, train_bpe, window_fit, BpeVocab,
    FitRow, Lexical, RatioMode, Tokenizer, ENGLISH_TEXT, THRESHOLDS,
};
use crate::{Error, Result};

pub const METADATA_DIR: &str = "metadata";
pub const REPR_DIR: &str = "repr";
pub const PROPERTIES_DIR: &str = "properties";
pub const CALLGRAPH_DIR: &str = "callgraph";
pub const TASKS_DIR: &str = "tasks";
pub const TOKENSTATS_DIR: &str = "tokenstats";
pub const REPORTS_DIR: &str = "reports";
pub const REPR_HEADER: &[&str] = &["method_id", "payload"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReprType {
    Text,
    Tkna,
    Tknb,
    Asts,
    C2vc,
    C2sq,
    Ftgr,
}

impl ReprType {
    pub const ALL: [ReprType; 7] = [
        ReprType::Text,
        ReprType::Tkna,
        ReprType::Tknb,
        ReprType::Asts,
        ReprType::C2vc,
        ReprType::C2sq,
        ReprType::Ftgr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReprType::Text => "TEXT",
            ReprType::Tkna => "TKNA",
            ReprType::Tknb => "TKNB",
            ReprType::Asts => "ASTS",
            ReprType::C2vc => "C2VC",
            ReprType::C2sq => "C2SQ",
            ReprType::Ftgr => "FTGR",
        }
    }
}

impl fmt::Display for ReprType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReprType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ReprType::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| {
            let valid: Vec<&str> = ReprType::ALL.iter().map(|t| t.as_str()).collect();
            Error::InvalidArgument(format!("unknown representation `{s}`; valid types: {}", valid.join(",")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReprSettings {
    pub paths: PathConfig,
    pub render: RenderOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskSpec {
    Property {
        key: String,
        filters: Vec<Filter>,
        balance: bool,
        repr: String,
    },
    CallMask {
        include_constructors: bool,
        context_hops: usize,
        exclude_masked: bool,
    },
    Mutation {
        p_mutate: f64,
    },
}

impl TaskSpec {
    /// Directory name under `tasks/`.
    pub fn default_name(&self) -> String {
        match self {
            TaskSpec::Property { key, .. } => format!("property-{key}"),
            TaskSpec::CallMask { context_hops: 0, .. } => "call-mask".into(),
            TaskSpec::CallMask { context_hops, .. } => format!("call-mask-ctx{context_hops}"),
            TaskSpec::Mutation { .. } => "mutation".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenStatsConfig {
    pub vocab_size: usize,
    pub ratio_mode: RatioMode,
}

impl Default for TokenStatsConfig {
    fn default() -> Self {
        TokenStatsConfig {
            vocab_size: 1024,
            ratio_mode: RatioMode::PerMethod,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Predictor {
    MostFrequent,
    Unigram,
    File(PathBuf),
}

impl Predictor {
    fn tag(&self) -> String {
        match self {
            Predictor::MostFrequent => "most-frequent".into(),
            Predictor::Unigram => "unigram".into(),
            Predictor::File(p) => p
                .file_stem()
                .map_or_else(|| "predictions".into(), |s| s.to_string_lossy().into_owned()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Study {
    /// Call-type distribution of the call graph.
    Calls { include_constructors: bool },
    /// Window-fit tables by granularity, tokenizer and project size.
    Windows,
    /// SLOC × CMPX binned counts.
    Bias { x_width: i64, y_width: i64 },
    /// Exact-match evaluation of a task dataset.
    Eval { task: String, predictor: Predictor, split: Split },
}

#[derive(Debug, Clone)]
pub struct WorkspaceConfig {
    pub corpus_root: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Worker threads; 0 keeps the pool default.
    pub threads: usize,
    pub strictness: Strictness,
    pub exec: ExecMode,
}

impl WorkspaceConfig {
    pub fn new(corpus_root: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        WorkspaceConfig {
            corpus_root: corpus_root.into(),
            out_dir: out_dir.into(),
            seed: 0,
            threads: 0,
            strictness: Strictness::SkipUnparseable,
            exec: ExecMode::Parallel,
        }
    }
}

/// The catalog plus freshly parsed sources for every catalogued project.
pub struct Loaded {
    pub catalog: Catalog,
    pub projects: Vec<ProjectParse>,
}

impl Loaded {
    /// Methods in catalog order.
    pub fn methods(&self) -> Vec<&MethodSource> {
        let by_id: BTreeMap<EntityId, &MethodSource> =
            self.projects.iter().flat_map(|p| p.methods()).map(|m| (m.method_id, m)).collect();
        self.catalog.methods.iter().filter_map(|m| by_id.get(&m.method_id).copied()).collect()
    }

    pub fn skipped_files(&self) -> usize {
        self.projects.iter().map(|p| p.diagnostics.len()).sum()
    }
}

#[derive(Serialize, Deserialize)]
struct ReprRow {
    method_id: EntityId,
    payload: String,
}

pub struct Workspace {
    cfg: WorkspaceConfig,
}

impl Workspace {
    pub fn new(cfg: WorkspaceConfig) -> Result<Self> {
        if !cfg.corpus_root.is_dir() {
            return Err(Error::NotFound(format!("corpus root {}", cfg.corpus_root.display())));
        }
        fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
        Ok(Workspace { cfg })
    }

    pub fn config(&self) -> &WorkspaceConfig {
        &self.cfg
    }

    pub fn path(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.cfg.out_dir.join(rel)
    }

    fn exec(&self) -> ExecMode {
        self.cfg.exec
    }

    fn pooled<R: Send>(&self, f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
        par::with_threads(self.cfg.threads, f)
    }

    fn require(&self, rel: impl AsRef<Path>, producer: &str) -> Result<PathBuf> {
        let p = self.path(rel);
        if p.exists() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact {
                path: p,
                producer: producer.to_string(),
            })
        }
    }

    fn write_run(&self, file: &Path, command: &str, settings: Value) -> Result<()> {
        let run = json!({
            "command": command,
            "seed": self.cfg.seed,
            "settings": settings,
            "version": env!("CARGO_PKG_VERSION"),
        });
        write_text(file, &(serde_json::to_string_pretty(&run)? + "\n"))
    }

    fn seed_of(&self, rel: &Path) -> Result<u64> {
        let p = self.path(rel);
        let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        let v: Value = serde_json::from_str(&text)?;
        v["seed"]
            .as_u64()
            .ok_or_else(|| Error::InvalidArgument(format!("{} has no seed", p.display())))
    }

    pub fn read_catalog(&self) -> Result<Catalog> {
        self.require(Path::new(METADATA_DIR).join("projects.csv"), "catalog")?;
        read_metadata(&self.path(METADATA_DIR))
    }

    fn catalog_settings(&self) -> Value {
        json!({
            "corpus_root": self.cfg.corpus_root.display().to_string(),
            "strictness": strictness_str(self.cfg.strictness),
        })
    }

    /// The corpus root recorded by the last `catalog` or `add-project` run in
    /// `out_dir`, if any.
    pub fn recorded_corpus_root(out_dir: &Path) -> Option<PathBuf> {
        let text = fs::read_to_string(out_dir.join(METADATA_DIR).join("run.json")).ok()?;
        let v: Value = serde_json::from_str(&text).ok()?;
        v["settings"]["corpus_root"].as_str().map(PathBuf::from)
    }

    /// Re-parses every catalogued project; fails if the sources no longer
    /// match the recorded metadata.
    pub fn load(&self) -> Result<Loaded> {
        let catalog = self.read_catalog()?;
        let projects = par::map(self.exec(), &catalog.projects, |p| {
            catalog_project(&self.cfg.corpus_root, &p.project_path, self.cfg.strictness, self.exec())
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        if merged_catalog(&projects) != catalog {
            return Err(Error::InvalidArgument(format!(
                "sources under {} no longer match {}; re-run `catalog` or `add-project --replace`",
                self.cfg.corpus_root.display(),
                self.path(METADATA_DIR).display()
            )));
        }
        Ok(Loaded { catalog, projects })
    }

    /// Catalogues every project directory under the corpus root.
    pub fn catalog(&self) -> Result<Value> {
        self.pooled(|| {
            let names = discover_projects(&self.cfg.corpus_root)?;
            let projects = par::map(self.exec(), &names, |p| {
                catalog_project(&self.cfg.corpus_root, p, self.cfg.strictness, self.exec())
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let catalog = merged_catalog(&projects);
            let dir = self.path(METADATA_DIR);
            write_metadata(&catalog, &dir)?;
            self.write_run(&dir.join("run.json"), "catalog", self.catalog_settings())?;
            let skipped: usize = projects.iter().map(|p| p.diagnostics.len()).sum();
            Ok(catalog_summary("catalog", &catalog, skipped))
        })
    }

    /// Adds (or with `replace`, refreshes) one project and regenerates the
    /// metadata, representation, property and call-graph artifacts.
    pub fn add_project(&self, root: &Path, replace: bool) -> Result<Value> {
        let rel = self.project_rel(root)?;
        self.pooled(|| {
            let mut catalog = if self.path(METADATA_DIR).join("projects.csv").exists() {
                self.read_catalog()?
            } else {
                Catalog::default()
            };
            let parsed = catalog_project(&self.cfg.corpus_root, &rel, self.cfg.strictness, self.exec())?;
            let id = parsed.project().project_id;
            if catalog.projects.iter().any(|p| p.project_id == id) && !replace {
                return Err(Error::Duplicate(format!("{} ({rel})", parsed.project().project_name)));
            }
            let skipped = parsed.diagnostics.len();
            let added = parsed.catalog.clone();
            catalog.merge(parsed.catalog);
            let dir = self.path(METADATA_DIR);
            write_metadata(&catalog, &dir)?;
            self.write_run(&dir.join("run.json"), "catalog", self.catalog_settings())?;
            Ok(())
                .and_then(|_| self.repr(&ReprType::ALL, &ReprSettings::default()))
                .and_then(|_| self.metrics())
                .and_then(|_| self.callgraph())?;
            let mut summary = catalog_summary("add-project", &added, skipped);
            summary["project"] = json!(rel);
            summary["replaced"] = json!(replace);
            summary["workspace_methods"] = json!(catalog.methods.len());
            Ok(summary)
        })
    }

    fn project_rel(&self, root: &Path) -> Result<String> {
        let corpus = fs::canonicalize(&self.cfg.corpus_root).map_err(|e| Error::io(&self.cfg.corpus_root, e))?;
        let candidate = if root.is_absolute() || root.exists() {
            root.to_path_buf()
        } else {
            self.cfg.corpus_root.join(root)
        };
        let abs = fs::canonicalize(&candidate).map_err(|e| Error::io(&candidate, e))?;
        let rel = abs.strip_prefix(&corpus).map_err(|_| {
            Error::InvalidArgument(format!("{} is not under the corpus root {}", abs.display(), corpus.display()))
        })?;
        let parts: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
        if parts.is_empty() {
            return Err(Error::InvalidArgument("the corpus root itself is not a project".into()));
        }
        Ok(parts.join("/"))
    }

    pub fn repr(&self, types: &[ReprType], settings: &ReprSettings) -> Result<Value> {
        if types.is_empty() {
            return Err(Error::InvalidArgument("no representation type requested".into()));
        }
        self.pooled(|| {
            let loaded = self.load()?;
            let dir = self.path(REPR_DIR);
            let types: BTreeSet<ReprType> = types.iter().copied().collect();
            for &ty in &types {
                let mut payloads: BTreeMap<EntityId, String> = BTreeMap::new();
                for project in &loaded.projects {
                    let index = ProjectIndex::new(project);
                    let methods: Vec<&MethodSource> = project.methods().collect();
                    let rows = par::map(self.exec(), &methods, |m| {
                        representation(ty, m, &index, settings, self.cfg.seed).map(|p| (m.method_id, p))
                    });
                    for row in rows {
                        let (id, p) = row?;
                        payloads.insert(id, p);
                    }
                }
                write_repr(&dir.join(format!("{ty}.csv")), &loaded.catalog, &payloads)?;
            }
            let names: Vec<&str> = types.iter().map(|t| t.as_str()).collect();
            self.write_run(
                &dir.join("run.json"),
                "repr",
                json!({
                    "types": names,
                    "max_length": settings.paths.max_length,
                    "max_width": settings.paths.max_width,
                    "max_contexts": settings.paths.max_contexts,
                    "normalize_identifiers": settings.render.normalize_identifiers,
                }),
            )?;
            Ok(json!({
                "command": "repr",
                "types": names,
                "methods": loaded.catalog.methods.len(),
                "skipped_files": loaded.skipped_files(),
            }))
        })
    }

    /// A new representation made of the FTGR graphs restricted to `keep`.
    pub fn derive_repr(&self, name: &str, keep: &BTreeSet<EdgeType>) -> Result<Value> {
        if name.len() < 2 || name.len() > 16 || !name.bytes().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit()) {
            return Err(Error::InvalidArgument(format!("representation name `{name}` must be 2-16 of A-Z0-9")));
        }
        if name.parse::<ReprType>().is_ok() {
            return Err(Error::InvalidArgument(format!("`{name}` is a built-in representation")));
        }
        let src = self.require(Path::new(REPR_DIR).join("FTGR.csv"), "repr --types FTGR")?;
        let catalog = self.read_catalog()?;
        let rows: Vec<ReprRow> = read_csv(&src, REPR_HEADER)?;
        let mut payloads = BTreeMap::new();
        for r in rows {
            let g = filter_edges(&FeatureGraph::from_json(&r.payload)?, keep)?;
            payloads.insert(r.method_id, g.to_json());
        }
        let path = self.path(REPR_DIR).join(format!("{name}.csv"));
        write_repr(&path, &catalog, &payloads)?;
        let kept: Vec<&str> = keep.iter().map(|e| e.as_str()).collect();
        self.write_run(
            &self.path(REPR_DIR).join(format!("{name}.run.json")),
            "repr",
            json!({ "derived_from": "FTGR", "keep": kept }),
        )?;
        Ok(json!({ "command": "repr", "derived": name, "keep": kept, "methods": payloads.len() }))
    }

    pub fn read_repr(&self, name: &str) -> Result<BTreeMap<EntityId, String>> {
        let path = self.require(Path::new(REPR_DIR).join(format!("{name}.csv")), &format!("repr --types {name}"))?;
        let rows: Vec<ReprRow> = read_csv(&path, REPR_HEADER)?;
        Ok(rows.into_iter().map(|r| (r.method_id, r.payload)).collect())
    }

    pub fn metrics(&self) -> Result<Value> {
        self.pooled(|| {
            let loaded = self.load()?;
            let methods = loaded.methods();
            let records = par::map(self.exec(), &methods, |m| compute_metrics(m));
            let dir = self.path(PROPERTIES_DIR);
            let tables = metric_tables(&records);
            let keys: Vec<String> = tables.iter().map(|(k, _)| k.to_string()).collect();
            for (key, rows) in tables {
                write_property_csv(&PropertyTable { key, rows: rows.into_iter().collect() }, &dir)?;
            }
            self.write_run(&dir.join("run.json"), "metrics", json!({ "keys": keys }))?;
            Ok(json!({ "command": "metrics", "methods": records.len(), "keys": keys }))
        })
    }

    pub fn callgraph(&self) -> Result<Value> {
        self.pooled(|| {
            let loaded = self.load()?;
            let graph = build_corpus_callgraph(&loaded.projects, self.exec());
            let dir = self.path(CALLGRAPH_DIR);
            graph.write_csv(&dir.join("callgraph.csv"))?;
            let props = connectivity_props(&graph, &loaded.catalog);
            let keys: Vec<String> = props.iter().map(|(k, _)| k.to_string()).collect();
            for (key, rows) in props {
                write_property_csv(&PropertyTable { key, rows: rows.into_iter().collect() }, &self.path(PROPERTIES_DIR))?;
            }
            self.write_run(&dir.join("run.json"), "callgraph", json!({ "property_keys": keys }))?;
            let mut per_type = serde_json::Map::new();
            for t in CallType::ALL {
                per_type.insert(t.to_string(), json!(graph.edges.iter().filter(|e| e.call_type == t).count()));
            }
            Ok(json!({ "command": "callgraph", "edges": graph.len(), "call_types": per_type }))
        })
    }

    pub fn read_callgraph(&self, catalog: &Catalog) -> Result<CallGraph> {
        let path = self.require(Path::new(CALLGRAPH_DIR).join("callgraph.csv"), "callgraph")?;
        CallGraph::read_csv(&path, catalog)
    }

    /// Imports an externally computed `method_id,value` table.
    pub fn props_import(&self, key: &str, src: &Path) -> Result<Value> {
        let key = PropertyKey::new(key)?;
        let catalog = self.read_catalog()?;
        let rows = read_property_csv(&key, src)?;
        let mut store = PropertyStore::new(catalog.methods.iter().map(|m| m.method_id));
        let rejected = store.add_property(key.clone(), rows);
        let dir = self.path(PROPERTIES_DIR);
        store.write_table(&key, &dir)?;
        self.write_run(
            &dir.join(format!("{key}.import.json")),
            "props-import",
            json!({ "source": src.display().to_string() }),
        )?;
        let stored = store.table(&key)?.rows.len();
        Ok(json!({ "command": "props-import", "key": key.to_string(), "stored": stored, "rejected": rejected.len() }))
    }

    pub fn read_property(&self, key: &PropertyKey) -> Result<BTreeMap<EntityId, crate::corpus::PropertyValue>> {
        let producer = if key.has_computer() {
            if ["NUPC", "NUCC", "NMNC", "NMLC"].contains(&key.code()) { "callgraph" } else { "metrics" }
        } else {
            "props-import"
        };
        let path = self.require(Path::new(PROPERTIES_DIR).join(format!("{key}.csv")), producer)?;
        Ok(read_property_csv(key, &path)?.into_iter().collect())
    }

    pub fn taskgen(&self, spec: &TaskSpec, fracs: SplitFracs, name: Option<&str>) -> Result<Value> {
        let name = name.map_or_else(|| spec.default_name(), str::to_string);
        if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
            return Err(Error::InvalidArgument(format!("bad task name `{name}`")));
        }
        let dir = self.path(TASKS_DIR).join(&name);
        let seed = self.cfg.seed;
        self.pooled(|| {
            let (ds, settings) = match spec {
                TaskSpec::Property {
                    key,
                    filters,
                    balance,
                    repr,
                } => {
                    let catalog = self.read_catalog()?;
                    let payloads = self.read_repr(repr)?;
                    let key = PropertyKey::new(key)?;
                    let mut store = PropertyStore::new(catalog.methods.iter().map(|m| m.method_id));
                    let mut keys: BTreeSet<PropertyKey> = filters.iter().map(|f| f.key.clone()).collect();
                    keys.insert(key.clone());
                    for k in keys {
                        let rows = self.read_property(&k)?;
                        store.add_property(k, rows);
                    }
                    let ds = make_property_task(&catalog, &store, &payloads, &key, filters, *balance, &fracs, seed)?;
                    let shown: Vec<String> = filters.iter().map(Filter::to_string).collect();
                    (ds, json!({ "key": key.to_string(), "filters": shown, "balance": balance, "repr": repr }))
                }
                TaskSpec::CallMask {
                    include_constructors,
                    context_hops,
                    exclude_masked,
                } => {
                    self.require(Path::new(REPR_DIR).join("TKNA.csv"), "repr --types TKNA")?;
                    let loaded = self.load()?;
                    let graph = self.read_callgraph(&loaded.catalog)?;
                    let cfg = MaskConfig {
                        seed,
                        fracs,
                        include_constructors: *include_constructors,
                        context_hops: *context_hops,
                        exclude_masked: *exclude_masked,
                    };
                    let (ds, masks) = make_call_masking_task(&loaded.catalog, &loaded.methods(), &graph, &cfg, self.exec())?;
                    write_csv(&dir.join("masks.csv"), &masks, &["sample_id", "line", "col"])?;
                    (
                        ds,
                        json!({
                            "include_constructors": include_constructors,
                            "context_hops": context_hops,
                            "exclude_masked": exclude_masked,
                        }),
                    )
                }
                TaskSpec::Mutation { p_mutate } => {
                    self.require(Path::new(REPR_DIR).join("TKNA.csv"), "repr --types TKNA")?;
                    let loaded = self.load()?;
                    let (ds, swaps) = make_mutation_task(&loaded.catalog, &loaded.methods(), *p_mutate, seed, &fracs)?;
                    write_csv(&dir.join("mutations.csv"), &swaps, &["sample_id", "line", "col", "arg_a", "arg_b"])?;
                    (ds, json!({ "p_mutate": p_mutate }))
                }
            };
            ds.write_csv(&dir.join("dataset.csv"))?;
            self.write_run(
                &dir.join("run.json"),
                "taskgen",
                json!({
                    "task": ds.task,
                    "fracs": [fracs.train, fracs.valid, fracs.test],
                    "spec": settings,
                }),
            )?;
            Ok(dataset_summary(&name, &ds))
        })
    }

    pub fn read_task(&self, name: &str) -> Result<TaskDataset> {
        let dir = Path::new(TASKS_DIR).join(name);
        let path = self.require(dir.join("dataset.csv"), &format!("taskgen (task `{name}`)"))?;
        let seed = self.seed_of(&dir.join("run.json"))?;
        let catalog = self.read_catalog()?;
        let project_of = catalog.methods.iter().map(|m| (m.method_id, m.project_id)).collect();
        TaskDataset::read_csv(&path, name, seed, &project_of)
    }

    /// Trains code, English and mixed vocabularies of equal target size and
    /// writes vocabularies, efficiency ratios, entity sizes and fit tables.
    pub fn tokenstats(&self, cfg: &TokenStatsConfig) -> Result<Value> {
        self.pooled(|| {
            let loaded = self.load()?;
            let methods = loaded.methods();
            let code: Vec<&str> = methods.iter().map(|m| m.text.as_str()).collect();
            let english: Vec<&str> = english_documents();
            let mixed: Vec<&str> = code.iter().chain(&english).copied().collect();
            let seed = self.cfg.seed;
            let vocabs = [
                train_bpe(&code, cfg.vocab_size, seed, "code")?,
                train_bpe(&mixed, cfg.vocab_size, seed, "mixed")?,
                train_bpe(&english, cfg.vocab_size, seed, "english")?,
            ];
            let dir = self.path(TOKENSTATS_DIR);
            let mut ratios = String::from("tokenizer,vocab_size,mode,ratio\n");
            let mut ratio_json = serde_json::Map::new();
            for v in &vocabs {
                v.write(&dir.join(format!("vocab-{}.txt", v.corpus_tag)))?;
                let r = tokenizer_ratio(v, &Lexical, &code, cfg.ratio_mode, self.exec())?;
                ratios.push_str(&format!("{},{},{},{r:.6}\n", v.corpus_tag, v.size(), ratio_mode_str(cfg.ratio_mode)));
                ratio_json.insert(v.corpus_tag.clone(), json!(round6(r)));
            }
            write_text(&dir.join("ratios.csv"), &ratios)?;
            let toks: Vec<&dyn Tokenizer> =
                std::iter::once(&Lexical as &dyn Tokenizer).chain(vocabs.iter().map(|v| v as &dyn Tokenizer)).collect();
            let sizes = compute_sizes(&loaded.projects, &toks, self.exec());
            write_text(&dir.join("sizes.csv"), &sizes_to_csv(&sizes))?;
            let fit = fit_tables(&loaded.catalog, &sizes);
            write_text(&dir.join("fit.csv"), &fit_to_csv(&fit))?;
            self.write_run(
                &dir.join("run.json"),
                "tokenstats",
                json!({
                    "vocab_size": cfg.vocab_size,
                    "ratio_mode": ratio_mode_str(cfg.ratio_mode),
                    "thresholds": THRESHOLDS,
                }),
            )?;
            let sizes_json: serde_json::Map<String, Value> =
                vocabs.iter().map(|v| (v.corpus_tag.clone(), json!(v.size()))).collect();
            Ok(json!({
                "command": "tokenstats",
                "documents": code.len(),
                "vocab_sizes": sizes_json,
                "ratios": ratio_json,
                "size_rows": sizes.len(),
                "fit_rows": fit.len(),
            }))
        })
    }

    pub fn read_vocab(&self, tag: &str) -> Result<BpeVocab> {
        let path = self.require(Path::new(TOKENSTATS_DIR).join(format!("vocab-{tag}.txt")), "tokenstats")?;
        BpeVocab::read(&path)
    }

    pub fn report(&self, study: &Study) -> Result<Value> {
        let dir = self.path(REPORTS_DIR);
        match study {
            Study::Calls { include_constructors } => {
                let catalog = self.read_catalog()?;
                let graph = self.read_callgraph(&catalog)?;
                let dist = classify_distribution(&graph, *include_constructors)?;
                let mut csv = String::from("call_type,count,percent\n");
                let mut txt = format!("{:<10}{:>8}{:>10}\n", "call type", "count", "percent");
                let mut pct = serde_json::Map::new();
                for t in CallType::ALL {
                    let n = dist.counts.get(&t).copied().unwrap_or(0);
                    let f = dist.fractions.get(&t).copied().unwrap_or(0.0) * 100.0;
                    csv.push_str(&format!("{t},{n},{f:.6}\n"));
                    txt.push_str(&format!("{:<10}{n:>8}{f:>9.2}%\n", t.to_string()));
                    pct.insert(t.to_string(), json!(round6(f)));
                }
                txt.push_str(&format!("{:<10}{:>8}{:>9.2}%\n", "total", dist.total, 100.0));
                write_text(&dir.join("calls.csv"), &csv)?;
                write_text(&dir.join("calls.txt"), &txt)?;
                self.write_run(
                    &dir.join("calls.run.json"),
                    "report",
                    json!({ "study": "calls", "include_constructors": include_constructors }),
                )?;
                Ok(json!({ "command": "report", "study": "calls", "total": dist.total, "percent": pct }))
            }
            Study::Windows => {
                let catalog = self.read_catalog()?;
                let path = self.require(Path::new(TOKENSTATS_DIR).join("sizes.csv"), "tokenstats")?;
                let sizes = read_sizes_csv(&path)?;
                let fit = fit_tables(&catalog, &sizes);
                write_text(&dir.join("windows.csv"), &fit_to_csv(&fit))?;
                write_text(&dir.join("windows.txt"), &windows_text(&fit))?;
                self.write_run(&dir.join("windows.run.json"), "report", json!({ "study": "windows" }))?;
                Ok(json!({ "command": "report", "study": "windows", "rows": fit.len() }))
            }
            Study::Bias { x_width, y_width } => {
                let sloc = self.read_property(&PropertyKey::new("SLOC")?)?;
                let cmpx = self.read_property(&PropertyKey::new("CMPX")?)?;
                let table = property_correlation_report(&sloc, &cmpx, *x_width, *y_width)?;
                write_text(&dir.join("bias.csv"), &table.to_csv())?;
                write_text(&dir.join("bias.txt"), &bias_text(&table))?;
                self.write_run(
                    &dir.join("bias.run.json"),
                    "report",
                    json!({ "study": "bias", "x": "SLOC", "y": "CMPX", "x_width": x_width, "y_width": y_width }),
                )?;
                Ok(json!({ "command": "report", "study": "bias", "methods": table.total(), "bins": table.cells.len() }))
            }
            Study::Eval { task, predictor, split } => {
                let ds = self.read_task(task)?;
                let preds = match predictor {
                    Predictor::MostFrequent => most_frequent_name(&ds),
                    Predictor::Unigram => unigram_baseline(&ds),
                    Predictor::File(p) => read_predictions(p)?,
                };
                let tag = format!("eval-{task}-{}", predictor.tag());
                if !matches!(predictor, Predictor::File(_)) {
                    write_predictions(&dir.join(format!("{tag}.predictions.csv")), &preds)?;
                }
                let report = evaluate_exact_match(&ds, &preds, *split);
                write_text(&dir.join(format!("{tag}.csv")), &eval_csv(&report))?;
                write_text(&dir.join(format!("{tag}.txt")), &eval_text(task, &report))?;
                self.write_run(
                    &dir.join(format!("{tag}.run.json")),
                    "report",
                    json!({ "study": "eval", "task": task, "predictor": predictor.tag(), "split": split.to_string() }),
                )?;
                Ok(json!({
                    "command": "report",
                    "study": "eval",
                    "task": task,
                    "split": split.to_string(),
                    "n": report.overall.n,
                    "accuracy": round6(report.overall.accuracy),
                    "missing": report.missing,
                }))
            }
        }
    }
}

fn representation(
    ty: ReprType,
    m: &MethodSource,
    index: &ProjectIndex<'_>,
    settings: &ReprSettings,
    seed: u64,
) -> Result<String> {
    Ok(match ty {
        ReprType::Text => m.text.clone(),
        ReprType::Tkna => method_tkna(m),
        ReprType::Tknb => method_tknb(m),
        ReprType::Asts => FeatureGraph::from_ast(&m.ast).to_json(),
        ReprType::Ftgr => build_feature_graph(m, index)?.to_json(),
        ReprType::C2vc => to_c2vc(m, &extract_paths(&m.ast, &settings.paths, method_seed(seed, &m.method_id))?, settings.render),
        ReprType::C2sq => to_c2sq(m, &extract_paths(&m.ast, &settings.paths, method_seed(seed, &m.method_id))?),
    })
}

/// Per-method sampling seed: the run seed mixed with the method id.
pub fn method_seed(seed: u64, id: &EntityId) -> u64 {
    let b = id.as_bytes();
    seed ^ u64::from_be_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]])
}

fn write_repr(path: &Path, catalog: &Catalog, payloads: &BTreeMap<EntityId, String>) -> Result<()> {
    let rows: Vec<ReprRow> = catalog
        .methods
        .iter()
        .filter_map(|m| {
            payloads.get(&m.method_id).map(|p| ReprRow {
                method_id: m.method_id,
                payload: p.clone(),
            })
        })
        .collect();
    write_csv(path, &rows, REPR_HEADER)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_file(path, text.as_bytes())
}

fn strictness_str(s: Strictness) -> &'static str {
    match s {
        Strictness::SkipUnparseable => "skip-unparseable",
        Strictness::FailFast => "fail-fast",
    }
}

fn ratio_mode_str(m: RatioMode) -> &'static str {
    match m {
        RatioMode::PerMethod => "per-method",
        RatioMode::Pooled => "pooled",
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Paragraphs of the bundled English text.
pub fn english_documents() -> Vec<&'static str> {
    ENGLISH_TEXT.split("\n\n").map(str::trim).filter(|p| !p.is_empty()).collect()
}

fn fit_tables(catalog: &Catalog, sizes: &[crate::tokenstats::SizeRow]) -> Vec<FitRow> {
    let mut fit = window_fit(catalog, sizes, &THRESHOLDS, false);
    fit.extend(window_fit(catalog, sizes, &THRESHOLDS, true));
    fit
}

fn catalog_summary(command: &str, c: &Catalog, skipped: usize) -> Value {
    json!({
        "command": command,
        "projects": c.projects.len(),
        "packages": c.packages.len(),
        "classes": c.classes.len(),
        "methods": c.methods.len(),
        "skipped_files": skipped,
    })
}

fn dataset_summary(name: &str, ds: &TaskDataset) -> Value {
    let mut splits = serde_json::Map::new();
    for s in Split::ALL {
        splits.insert(s.to_string(), json!(ds.split(s).count()));
    }
    let mut strata: BTreeMap<String, usize> = BTreeMap::new();
    for s in &ds.samples {
        if let Some(t) = s.stratum {
            *strata.entry(t.to_string()).or_default() += 1;
        }
    }
    json!({
        "command": "taskgen",
        "task": name,
        "samples": ds.samples.len(),
        "splits": splits,
        "strata": strata,
        "leaking_projects": ds.leaking_projects().len(),
    })
}

fn windows_text(fit: &[FitRow]) -> String {
    let mut out = format!("{:<9}{:<10}{:<7}", "level", "tokenizer", "bucket");
    for t in THRESHOLDS {
        out.push_str(&format!("{t:>8}"));
    }
    out.push('\n');
    let mut groups: BTreeMap<(String, String, String), BTreeMap<u64, f64>> = BTreeMap::new();
    for r in fit {
        let bucket = r.size_bucket.map_or_else(|| "all".to_string(), |b| b.to_string());
        groups
            .entry((r.granularity.to_string(), r.tokenizer.clone(), bucket))
            .or_default()
            .insert(r.threshold, r.fit_fraction);
    }
    for ((g, t, b), row) in groups {
        out.push_str(&format!("{g:<9}{t:<10}{b:<7}"));
        for th in THRESHOLDS {
            match row.get(&th) {
                Some(f) => out.push_str(&format!("{:>7.1}%", f * 100.0)),
                None => out.push_str(&format!("{:>8}", "-")),
            }
        }
        out.push('\n');
    }
    out
}

fn bias_text(t: &crate::metrics::BinnedTable) -> String {
    let xs: Vec<i64> = t.x_marginal().into_keys().collect();
    let ys: Vec<i64> = t.y_marginal().into_keys().collect();
    let mut out = format!("{:>12}", "CMPX \\ SLOC");
    for x in &xs {
        out.push_str(&format!("{:>10}", format!("{}-{}", x * t.x_width, (x + 1) * t.x_width - 1)));
    }
    out.push('\n');
    for y in &ys {
        out.push_str(&format!("{:>12}", format!("{}-{}", y * t.y_width, (y + 1) * t.y_width - 1)));
        for x in &xs {
            out.push_str(&format!("{:>10}", t.cells.get(&(*x, *y)).copied().unwrap_or(0)));
        }
        out.push('\n');
    }
    out
}

fn eval_csv(r: &EvalReport) -> String {
    let mut out = String::from("scope,key,n,correct,accuracy\n");
    let mut row = |scope: &str, key: &str, a: &crate::taskgen::Accuracy| {
        out.push_str(&format!("{scope},{key},{},{},{:.6}\n", a.n, a.correct, a.accuracy));
    };
    row("overall", "all", &r.overall);
    for (k, a) in &r.per_stratum {
        row("stratum", k, a);
    }
    for (k, a) in &r.per_bucket {
        row("bucket", k, a);
    }
    out
}

fn eval_text(task: &str, r: &EvalReport) -> String {
    let mut out = format!("task {task}, split {}: {} samples, {} without prediction\n", r.split, r.overall.n, r.missing);
    out.push_str(&format!("{:<10}{:>6}{:>9}{:>10}\n", "group", "n", "correct", "accuracy"));
    let mut line = |k: &str, a: &crate::taskgen::Accuracy| {
        out.push_str(&format!("{k:<10}{:>6}{:>9}{:>10.4}\n", a.n, a.correct, a.accuracy));
    };
    line("overall", &r.overall);
    for (k, a) in &r.per_stratum {
        line(k, a);
    }
    for (k, a) in &r.per_bucket {
        line(&format!("size {k}"), a);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::{write_fixture, FixtureConfig};

    fn small() -> (tempfile::TempDir, Workspace) {
        let tmp = tempfile::tempdir().unwrap();
        let corpus = tmp.path().join("corpus");
        write_fixture(&corpus, &FixtureConfig { inflate: vec![12] }).unwrap();
        let ws = Workspace::new(WorkspaceConfig::new(&corpus, tmp.path().join("out"))).unwrap();
        (tmp, ws)
    }

    #[test]
    fn repr_type_names_round_trip() {
        for t in ReprType::ALL {
            assert_eq!(t.as_str().parse::<ReprType>().unwrap(), t);
        }
        let err = "AST".parse::<ReprType>().unwrap_err().to_string();
        assert!(err.contains("TEXT,TKNA,TKNB,ASTS,C2VC,C2SQ,FTGR"), "{err}");
    }

    #[test]
    fn missing_prerequisite_names_the_producer() {
        let (_tmp, ws) = small();
        match ws.metrics() {
            Err(Error::MissingArtifact { producer, .. }) => assert_eq!(producer, "catalog"),
            other => panic!("{other:?}"),
        }
        ws.catalog().unwrap();
        let spec = TaskSpec::CallMask {
            include_constructors: false,
            context_hops: 0,
            exclude_masked: true,
        };
        match ws.taskgen(&spec, SplitFracs::default(), None) {
            Err(Error::MissingArtifact { path, .. }) => assert!(path.ends_with("repr/TKNA.csv")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn catalog_reports_the_broken_file() {
        let (_tmp, ws) = small();
        let s = ws.catalog().unwrap();
        assert_eq!(s["projects"], 5);
        assert_eq!(s["skipped_files"], 1);
    }

    #[test]
    fn add_project_refuses_duplicates_unless_replacing() {
        let (_tmp, ws) = small();
        let demo = ws.config().corpus_root.join("demo");
        let s = ws.add_project(&demo, false).unwrap();
        assert_eq!(s["methods"], 5);
        assert!(ws.path("repr/FTGR.csv").exists());
        assert!(ws.path("callgraph/callgraph.csv").exists());
        assert!(matches!(ws.add_project(&demo, false), Err(Error::Duplicate(_))));
        ws.add_project(&demo, true).unwrap();
    }
}
