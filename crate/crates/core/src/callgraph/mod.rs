//! Project-wide static call graphs, call locality, connectivity properties
//! and n-hop neighbourhoods.

mod resolve;

pub use resolve::{ProjectIndex, Resolution};

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::catalog::ProjectParse;
use crate::corpus::{Catalog, EntityId, MethodMeta, PropertyKey, PropertyValue};
use crate::par::{self, ExecMode};
use crate::{Error, Result};

pub const CALLGRAPH_HEADER: &str = "caller_method_id,callee_method_id,callee_signature,call_type,line,col";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CallType {
    Local,
    Package,
    Project,
    #[serde(rename = "API")]
    Api,
}

impl CallType {
    pub const ALL: [CallType; 4] = [CallType::Local, CallType::Package, CallType::Project, CallType::Api];

    pub fn as_str(self) -> &'static str {
        match self {
            CallType::Local => "Local",
            CallType::Package => "Package",
            CallType::Project => "Project",
            CallType::Api => "API",
        }
    }

    /// Locality of a resolved call from the two methods' parent ids.
    pub fn classify(caller: &MethodMeta, callee: &MethodMeta) -> CallType {
        if caller.class_id == callee.class_id {
            CallType::Local
        } else if caller.package_id == callee.package_id {
            CallType::Package
        } else {
            CallType::Project
        }
    }
}

impl fmt::Display for CallType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CallType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CallType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown call type `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallEdge {
    pub caller: EntityId,
    /// `None` for calls leaving the project (API).
    pub callee: Option<EntityId>,
    pub callee_signature: String,
    pub callee_name: String,
    pub call_type: CallType,
    pub is_constructor: bool,
    /// Position of the callee name token.
    pub line: u32,
    pub col: u32,
}

impl CallEdge {
    pub fn site(&self) -> (u32, u32) {
        (self.line, self.col)
    }
}

/// Call multigraph with caller and callee indices into `edges`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CallGraph {
    pub edges: Vec<CallEdge>,
    by_caller: BTreeMap<EntityId, Vec<usize>>,
    by_callee: BTreeMap<EntityId, Vec<usize>>,
}

impl CallGraph {
    pub fn from_edges(mut edges: Vec<CallEdge>) -> Self {
        edges.sort_by_key(|e| (e.caller, e.site()));
        let mut g = CallGraph {
            edges,
            ..CallGraph::default()
        };
        for (i, e) in g.edges.iter().enumerate() {
            g.by_caller.entry(e.caller).or_default().push(i);
            if let Some(c) = e.callee {
                g.by_callee.entry(c).or_default().push(i);
            }
        }
        g
    }

    pub fn merge(graphs: impl IntoIterator<Item = CallGraph>) -> Self {
        CallGraph::from_edges(graphs.into_iter().flat_map(|g| g.edges).collect())
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn outgoing(&self, caller: &EntityId) -> impl Iterator<Item = &CallEdge> {
        self.by_caller.get(caller).into_iter().flatten().map(|&i| &self.edges[i])
    }

    pub fn incoming(&self, callee: &EntityId) -> impl Iterator<Item = &CallEdge> {
        self.by_callee.get(callee).into_iter().flatten().map(|&i| &self.edges[i])
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(CALLGRAPH_HEADER.split(',')).expect("in-memory write");
        for e in &self.edges {
            w.write_record([
                e.caller.to_hex(),
                e.callee.map(|c| c.to_hex()).unwrap_or_default(),
                e.callee_signature.clone(),
                e.call_type.to_string(),
                e.line.to_string(),
                e.col.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::corpus::csvio::write_file(path, self.to_csv().as_bytes())
    }

    /// Reads a graph written by [`CallGraph::write_csv`]. Callee names and the
    /// constructor flag are recovered from the catalogue and the signature.
    pub fn read_csv(path: &Path, catalog: &Catalog) -> Result<Self> {
        let name = path.display().to_string();
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(path)
            .map_err(|e| Error::csv(&name, e))?;
        let mut records = r.records();
        match records.next() {
            Some(Ok(h)) if h.iter().collect::<Vec<_>>().join(",") == CALLGRAPH_HEADER => {}
            Some(Err(e)) => return Err(Error::csv(&name, e)),
            _ => {
                return Err(Error::Parse {
                    source_name: name,
                    line: 1,
                    message: format!("expected header `{CALLGRAPH_HEADER}`"),
                })
            }
        }
        let class_names: BTreeMap<EntityId, &str> =
            catalog.classes.iter().map(|c| (c.class_id, c.class_name.as_str())).collect();
        let mut edges = Vec::new();
        for (i, rec) in records.enumerate() {
            let rec = rec.map_err(|e| Error::csv(&name, e))?;
            let line = i as u64 + 2;
            let bad = |message: String| Error::Parse {
                source_name: name.clone(),
                line,
                message,
            };
            if rec.len() != 6 {
                return Err(bad(format!("expected 6 fields, found {}", rec.len())));
            }
            let caller: EntityId = rec[0].parse().map_err(|e: Error| bad(e.to_string()))?;
            let callee: Option<EntityId> = if rec[1].is_empty() {
                None
            } else {
                Some(rec[1].parse().map_err(|e: Error| bad(e.to_string()))?)
            };
            let signature = rec[2].to_string();
            let (callee_name, is_constructor) = match callee.and_then(|c| catalog.method(&c)) {
                Some(m) => (
                    m.method_name.clone(),
                    class_names.get(&m.class_id).is_some_and(|&c| c == m.method_name),
                ),
                None if callee.is_some() => return Err(bad(format!("unknown callee {}", &rec[1]))),
                None => (signature_name(&signature).to_string(), signature.starts_with("new ")),
            };
            edges.push(CallEdge {
                caller,
                callee,
                callee_signature: signature,
                callee_name,
                call_type: rec[3].parse().map_err(|e: Error| bad(e.to_string()))?,
                is_constructor,
                line: rec[4].parse().map_err(|_| bad(format!("bad line `{}`", &rec[4])))?,
                col: rec[5].parse().map_err(|_| bad(format!("bad col `{}`", &rec[5])))?,
            });
        }
        Ok(CallGraph::from_edges(edges))
    }
}

/// Simple method name inside a signature such as `new a.B(int)` or
/// `String.format(String,?)`.
pub fn signature_name(sig: &str) -> &str {
    let head = sig.split('(').next().unwrap_or(sig);
    let head = head.strip_prefix("new ").unwrap_or(head);
    head.rsplit('.').next().unwrap_or(head)
}

/// Resolves every call site of one project. Calls never cross projects.
pub fn build_callgraph(project: &ProjectParse, mode: ExecMode) -> CallGraph {
    let index = ProjectIndex::new(project);
    let meta: BTreeMap<EntityId, &MethodMeta> = project.catalog.methods.iter().map(|m| (m.method_id, m)).collect();
    let methods: Vec<_> = project.methods().collect();
    let per_method = par::map(mode, &methods, |m| {
        let caller = meta[&m.method_id];
        index
            .resolve_method(m)
            .into_iter()
            .map(|r| {
                let tok = m.ast.token(r.name_node).expect("call site token");
                let call_type = match r.callee.and_then(|c| meta.get(&c)) {
                    Some(callee) => CallType::classify(caller, callee),
                    None => CallType::Api,
                };
                CallEdge {
                    caller: m.method_id,
                    callee: r.callee,
                    callee_signature: r.signature,
                    callee_name: r.name,
                    call_type,
                    is_constructor: r.is_constructor,
                    line: tok.line,
                    col: tok.col,
                }
            })
            .collect::<Vec<_>>()
    });
    CallGraph::from_edges(per_method.into_iter().flatten().collect())
}

pub fn build_corpus_callgraph(projects: &[ProjectParse], mode: ExecMode) -> CallGraph {
    CallGraph::merge(projects.iter().map(|p| build_callgraph(p, mode)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CallDistribution {
    pub total: usize,
    pub counts: BTreeMap<CallType, usize>,
    pub fractions: BTreeMap<CallType, f64>,
}

pub fn classify_distribution(g: &CallGraph, include_constructors: bool) -> Result<CallDistribution> {
    distribution_of(g.edges.iter().filter(|e| include_constructors || !e.is_constructor).map(|e| e.call_type))
}

pub fn distribution_of(types: impl IntoIterator<Item = CallType>) -> Result<CallDistribution> {
    let mut counts: BTreeMap<CallType, usize> = CallType::ALL.iter().map(|&t| (t, 0)).collect();
    for t in types {
        *counts.get_mut(&t).expect("all types present") += 1;
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return Err(Error::EmptyDistribution);
    }
    let fractions = counts.iter().map(|(&t, &c)| (t, c as f64 / total as f64)).collect();
    Ok(CallDistribution { total, counts, fractions })
}

/// NUPC, NUCC, NMLC and NMNC for every method of the catalogue.
pub fn connectivity_props(g: &CallGraph, catalog: &Catalog) -> Vec<(PropertyKey, Vec<(EntityId, PropertyValue)>)> {
    let keys = ["NUPC", "NUCC", "NMLC", "NMNC"];
    let mut rows: Vec<Vec<(EntityId, PropertyValue)>> = vec![Vec::new(); keys.len()];
    for m in &catalog.methods {
        let id = m.method_id;
        let callers: BTreeSet<EntityId> = g.incoming(&id).map(|e| e.caller).collect();
        let callees: BTreeSet<EntityId> = g.outgoing(&id).filter_map(|e| e.callee).collect();
        let local = g.outgoing(&id).filter(|e| e.call_type == CallType::Local).count();
        let nonlocal = g.outgoing(&id).count() - local;
        for (slot, v) in [callers.len(), callees.len(), local, nonlocal].into_iter().enumerate() {
            rows[slot].push((id, PropertyValue::Integer(v as i64)));
        }
    }
    keys.into_iter()
        .zip(rows)
        .map(|(k, r)| (PropertyKey::new(k).expect("builtin key"), r))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Callees,
    Callers,
}

/// One call site leaving the center, as seen by the first hop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopSite {
    pub line: u32,
    pub col: u32,
    pub name: String,
    pub callee: Option<EntityId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextBundle {
    pub center: EntityId,
    pub direction: Direction,
    /// `hop_sets[k]`: methods within `k` steps, center included.
    pub hop_sets: Vec<BTreeSet<EntityId>>,
    /// Names of API callees met while expanding (callee direction only).
    pub external: BTreeSet<String>,
    /// Direct neighbours by site; callee direction only.
    pub first_hop: Vec<HopSite>,
}

impl ContextBundle {
    pub fn hops(&self) -> usize {
        self.hop_sets.len() - 1
    }
}

pub fn n_hop_context(
    g: &CallGraph,
    catalog: &Catalog,
    center: &EntityId,
    n: usize,
    direction: Direction,
) -> Result<ContextBundle> {
    if catalog.method(center).is_none() {
        return Err(Error::NotFound(format!("method {center}")));
    }
    let mut seen = BTreeSet::from([*center]);
    let mut hop_sets = vec![seen.clone()];
    let mut external = BTreeSet::new();
    let mut frontier = VecDeque::from([*center]);
    for _ in 0..n {
        let mut next = VecDeque::new();
        for m in frontier {
            let neighbours: Vec<Option<EntityId>> = match direction {
                Direction::Callees => g
                    .outgoing(&m)
                    .map(|e| {
                        if e.callee.is_none() {
                            external.insert(e.callee_name.clone());
                        }
                        e.callee
                    })
                    .collect(),
                Direction::Callers => g.incoming(&m).map(|e| Some(e.caller)).collect(),
            };
            for nb in neighbours.into_iter().flatten() {
                if seen.insert(nb) {
                    next.push_back(nb);
                }
            }
        }
        hop_sets.push(seen.clone());
        frontier = next;
    }
    let first_hop = match direction {
        Direction::Callees if n > 0 => g
            .outgoing(center)
            .map(|e| HopSite {
                line: e.line,
                col: e.col,
                name: e.callee_name.clone(),
                callee: e.callee,
            })
            .collect(),
        _ => Vec::new(),
    };
    Ok(ContextBundle {
        center: *center,
        direction,
        hop_sets,
        external,
        first_hop,
    })
}
