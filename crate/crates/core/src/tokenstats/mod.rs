//! Subtokenization efficiency and context-window fit.

mod bpe;

pub use bpe::{train_bpe, BpeVocab, BASE_SYMBOLS};

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::catalog::ProjectParse;
use crate::corpus::{Catalog, EntityId, SizeBucket};
use crate::lexparse::lex;
use crate::par::{self, ExecMode};
use crate::{Error, Result};

pub const THRESHOLDS: [u64; 5] = [256, 512, 1024, 2048, 4096];
pub const SIZES_HEADER: &str = "entity_id,granularity,tokenizer_tag,subtoken_count";
pub const FIT_HEADER: &str = "granularity,tokenizer,size_bucket,threshold,population,fit_count,fit_fraction";

/// Bundled plain English prose for the contrast vocabulary.
pub const ENGLISH_TEXT: &str = include_str!("../../data/english.txt");

pub trait Tokenizer: Sync {
    fn tag(&self) -> &str;
    fn count(&self, text: &str) -> usize;
}

impl Tokenizer for BpeVocab {
    fn tag(&self) -> &str {
        &self.corpus_tag
    }

    fn count(&self, text: &str) -> usize {
        self.encode(text).len()
    }
}

/// The lexer's token count; text that does not lex counts as zero.
pub struct Lexical;

impl Tokenizer for Lexical {
    fn tag(&self) -> &str {
        "lexical"
    }

    fn count(&self, text: &str) -> usize {
        lex(text).map_or(0, |t| t.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatioMode {
    /// Mean of per-document ratios.
    #[default]
    PerMethod,
    /// Ratio of summed counts.
    Pooled,
}

/// Subtokens per 100 baseline tokens. Documents with no baseline tokens
/// are skipped.
pub fn tokenizer_ratio(
    tok: &dyn Tokenizer,
    baseline: &dyn Tokenizer,
    texts: &[&str],
    mode: RatioMode,
    exec: ExecMode,
) -> Result<f64> {
    let counts: Vec<(usize, usize)> = par::map(exec, texts, |t| (tok.count(t), baseline.count(t)))
        .into_iter()
        .filter(|&(_, b)| b > 0)
        .collect();
    if counts.is_empty() {
        return Err(Error::InvalidArgument("no document with baseline tokens".into()));
    }
    Ok(match mode {
        RatioMode::PerMethod => {
            counts.iter().map(|&(s, b)| 100.0 * s as f64 / b as f64).sum::<f64>() / counts.len() as f64
        }
        RatioMode::Pooled => {
            let (s, b) = counts.iter().fold((0, 0), |(s, b), &(x, y)| (s + x, b + y));
            100.0 * s as f64 / b as f64
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Method,
    Class,
    Package,
    Project,
}

impl Granularity {
    pub const ALL: [Granularity; 4] = [Granularity::Method, Granularity::Class, Granularity::Package, Granularity::Project];

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Method => "method",
            Granularity::Class => "class",
            Granularity::Package => "package",
            Granularity::Project => "project",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Granularity::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown granularity `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeRow {
    pub entity_id: EntityId,
    pub granularity: Granularity,
    pub tokenizer_tag: String,
    pub subtoken_count: u64,
}

/// Entity sizes under each tokenizer. A class is measured by its whole
/// source file; packages and projects sum their classes.
pub fn compute_sizes(projects: &[ProjectParse], tokenizers: &[&dyn Tokenizer], exec: ExecMode) -> Vec<SizeRow> {
    let mut rows = Vec::new();
    for tok in tokenizers {
        let tag = tok.tag().to_string();
        for p in projects {
            let methods: Vec<_> = p.methods().collect();
            let method_sizes = par::map(exec, &methods, |m| tok.count(&m.text) as u64);
            let file_sizes = par::map(exec, &p.files, |f| tok.count(&f.source) as u64);
            let mut class_size = BTreeMap::new();
            for (f, &size) in p.files.iter().zip(&file_sizes) {
                for c in &f.class_ids {
                    class_size.insert(*c, size);
                }
            }
            let mut package_size: BTreeMap<EntityId, u64> = BTreeMap::new();
            let mut project_size: BTreeMap<EntityId, u64> = BTreeMap::new();
            for c in &p.catalog.classes {
                let s = class_size.get(&c.class_id).copied().unwrap_or(0);
                *package_size.entry(c.package_id).or_default() += s;
                *project_size.entry(c.project_id).or_default() += s;
            }
            let mut push = |id, g, n| {
                rows.push(SizeRow {
                    entity_id: id,
                    granularity: g,
                    tokenizer_tag: tag.clone(),
                    subtoken_count: n,
                })
            };
            for (m, &s) in methods.iter().zip(&method_sizes) {
                push(m.method_id, Granularity::Method, s);
            }
            for (id, s) in class_size {
                push(id, Granularity::Class, s);
            }
            for (id, s) in package_size {
                push(id, Granularity::Package, s);
            }
            for (id, s) in project_size {
                push(id, Granularity::Project, s);
            }
        }
    }
    rows.sort_by(|a, b| {
        (a.granularity, &a.tokenizer_tag, a.entity_id).cmp(&(b.granularity, &b.tokenizer_tag, b.entity_id))
    });
    rows
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

pub fn sizes_to_csv(rows: &[SizeRow]) -> String {
    let mut w = csv_writer();
    w.write_record(SIZES_HEADER.split(',')).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.entity_id.to_hex(),
            r.granularity.to_string(),
            r.tokenizer_tag.clone(),
            r.subtoken_count.to_string(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

pub fn read_sizes_csv(path: &Path) -> Result<Vec<SizeRow>> {
    let name = path.display().to_string();
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::csv(&name, e))?;
    let header = r.headers().map_err(|e| Error::csv(&name, e))?.iter().collect::<Vec<_>>().join(",");
    if header != SIZES_HEADER {
        return Err(Error::Parse {
            source_name: name,
            line: 1,
            message: format!("expected header `{SIZES_HEADER}`"),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(&name, e))?;
        let bad = |m: String| Error::Parse {
            source_name: name.clone(),
            line: i as u64 + 2,
            message: m,
        };
        rows.push(SizeRow {
            entity_id: rec[0].parse().map_err(|e: Error| bad(e.to_string()))?,
            granularity: rec[1].parse().map_err(|e: Error| bad(e.to_string()))?,
            tokenizer_tag: rec[2].to_string(),
            subtoken_count: rec[3].parse().map_err(|_| bad(format!("bad count `{}`", &rec[3])))?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRow {
    pub granularity: Granularity,
    pub tokenizer: String,
    pub size_bucket: Option<SizeBucket>,
    pub threshold: u64,
    pub population: usize,
    pub fit_count: usize,
    pub fit_fraction: f64,
}

/// Owning project of every entity in the catalogue.
fn project_of(catalog: &Catalog) -> BTreeMap<EntityId, EntityId> {
    let mut out = BTreeMap::new();
    for p in &catalog.projects {
        out.insert(p.project_id, p.project_id);
    }
    for p in &catalog.packages {
        out.insert(p.package_id, p.project_id);
    }
    for c in &catalog.classes {
        out.insert(c.class_id, c.project_id);
    }
    for m in &catalog.methods {
        out.insert(m.method_id, m.project_id);
    }
    out
}

/// Fraction of entities whose size fits each threshold, per granularity
/// and tokenizer, optionally split by the owning project's size bucket.
/// Empty populations produce no rows.
pub fn window_fit(catalog: &Catalog, sizes: &[SizeRow], thresholds: &[u64], by_bucket: bool) -> Vec<FitRow> {
    let projects = project_of(catalog);
    let buckets = catalog.size_buckets();
    let mut groups: BTreeMap<(Granularity, &str, Option<SizeBucket>), Vec<u64>> = BTreeMap::new();
    for r in sizes {
        let bucket = if by_bucket {
            match projects.get(&r.entity_id).and_then(|p| buckets.get(p)) {
                Some(&b) => Some(b),
                None => continue,
            }
        } else {
            None
        };
        groups
            .entry((r.granularity, r.tokenizer_tag.as_str(), bucket))
            .or_default()
            .push(r.subtoken_count);
    }
    let mut rows = Vec::new();
    for ((g, tag, bucket), counts) in groups {
        for &t in thresholds {
            let fit = counts.iter().filter(|&&c| c <= t).count();
            rows.push(FitRow {
                granularity: g,
                tokenizer: tag.to_string(),
                size_bucket: bucket,
                threshold: t,
                population: counts.len(),
                fit_count: fit,
                fit_fraction: fit as f64 / counts.len() as f64,
            });
        }
    }
    rows
}

pub fn fit_to_csv(rows: &[FitRow]) -> String {
    let mut w = csv_writer();
    w.write_record(FIT_HEADER.split(',')).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.granularity.to_string(),
            r.tokenizer.clone(),
            r.size_bucket.map(|b| b.to_string()).unwrap_or_default(),
            r.threshold.to_string(),
            r.population.to_string(),
            r.fit_count.to_string(),
            format!("{:.6}", r.fit_fraction),
        ])
        .expect("in-memory write");
    }
    finish(w)
}
