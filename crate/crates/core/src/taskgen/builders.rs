use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{assign_project_splits, sample_id, SplitFracs, TaskDataset, TaskSample};
use crate::callgraph::{CallGraph, ContextBundle, Direction};
use crate::corpus::{Catalog, EntityId, PropertyKey, PropertyStore, PropertyValue, SizeBucket};
use crate::lexparse::{tokens_tkna, MethodSource, NodeKind, Token, TokenKind};
use crate::par::{self, ExecMode};
use crate::{Error, Result};

pub const MASK: &str = "<MASK>";
pub const CTX: &str = "<CTX>";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

/// `KEY op value` over another property, e.g. `SLOC>=5`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Filter {
    pub key: PropertyKey,
    pub cmp: Cmp,
    pub value: String,
}

impl Filter {
    pub fn accepts(&self, v: &PropertyValue) -> bool {
        let ord = match (v.as_int(), self.value.parse::<i64>()) {
            (Some(a), Ok(b)) => a.cmp(&b),
            _ => v.to_string().as_str().cmp(self.value.as_str()),
        };
        match self.cmp {
            Cmp::Lt => ord.is_lt(),
            Cmp::Le => ord.is_le(),
            Cmp::Eq => ord.is_eq(),
            Cmp::Ne => ord.is_ne(),
            Cmp::Ge => ord.is_ge(),
            Cmp::Gt => ord.is_gt(),
        }
    }
}

impl FromStr for Filter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        const OPS: [(&str, Cmp); 6] = [
            (">=", Cmp::Ge),
            ("<=", Cmp::Le),
            ("!=", Cmp::Ne),
            ("==", Cmp::Eq),
            (">", Cmp::Gt),
            ("<", Cmp::Lt),
        ];
        for (op, cmp) in OPS {
            if let Some((k, v)) = s.split_once(op) {
                return Ok(Filter {
                    key: PropertyKey::new(k.trim())?,
                    cmp,
                    value: v.trim().to_string(),
                });
            }
        }
        Err(Error::InvalidArgument(format!("bad filter `{s}`; expected KEY<op>VALUE")))
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.cmp {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Eq => "==",
            Cmp::Ne => "!=",
            Cmp::Ge => ">=",
            Cmp::Gt => ">",
        };
        write!(f, "{}{op}{}", self.key, self.value)
    }
}

fn buckets_by_method(catalog: &Catalog) -> BTreeMap<EntityId, (EntityId, SizeBucket)> {
    let buckets = catalog.size_buckets();
    catalog
        .methods
        .iter()
        .map(|m| (m.method_id, (m.project_id, buckets[&m.project_id])))
        .collect()
}

/// Turns (method, stratum, label, payload) rows, already in catalogue
/// order, into a split dataset.
fn assemble(
    task: &str,
    seed: u64,
    fracs: &SplitFracs,
    catalog: &Catalog,
    rows: Vec<(EntityId, Option<crate::callgraph::CallType>, String, String)>,
) -> TaskDataset {
    let owners = buckets_by_method(catalog);
    let mut per_project: BTreeMap<EntityId, usize> = BTreeMap::new();
    for (m, ..) in &rows {
        *per_project.entry(owners[m].0).or_default() += 1;
    }
    let splits = assign_project_splits(&per_project, fracs, seed);
    let samples = rows
        .into_iter()
        .enumerate()
        .map(|(i, (method_id, stratum, label, payload))| {
            let (project_id, size_bucket) = owners[&method_id];
            TaskSample {
                sample_id: sample_id(task, i),
                method_id,
                project_id,
                split: splits[&project_id],
                stratum,
                size_bucket,
                label,
                payload,
            }
        })
        .collect();
    TaskDataset {
        task: task.to_string(),
        seed,
        samples,
    }
}

/// Property prediction: payload → property value. Filters run before the
/// optional down-sampling to the rarest label's count.
#[allow(clippy::too_many_arguments)]
pub fn make_property_task(
    catalog: &Catalog,
    store: &PropertyStore,
    payloads: &BTreeMap<EntityId, String>,
    key: &PropertyKey,
    filters: &[Filter],
    balance: bool,
    fracs: &SplitFracs,
    seed: u64,
) -> Result<TaskDataset> {
    let target = store.table(key)?;
    let filter_tables = filters
        .iter()
        .map(|f| store.table(&f.key).map(|t| (f, t)))
        .collect::<Result<Vec<_>>>()?;
    let mut selected: Vec<(EntityId, String)> = catalog
        .methods
        .iter()
        .filter_map(|m| {
            let v = target.rows.get(&m.method_id)?;
            payloads.get(&m.method_id)?;
            let keep = filter_tables
                .iter()
                .all(|(f, t)| t.rows.get(&m.method_id).is_some_and(|x| f.accepts(x)));
            keep.then(|| (m.method_id, v.to_string()))
        })
        .collect();
    if selected.is_empty() {
        let shown: Vec<String> = filters.iter().map(Filter::to_string).collect();
        return Err(Error::EmptyTask(format!("no method has {key} after filters [{}]", shown.join(", "))));
    }
    if balance {
        let mut by_label: BTreeMap<String, Vec<EntityId>> = BTreeMap::new();
        for (m, l) in &selected {
            by_label.entry(l.clone()).or_default().push(*m);
        }
        let quota = by_label.values().map(Vec::len).min().unwrap_or(0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut keep = BTreeSet::new();
        for ids in by_label.values_mut() {
            ids.shuffle(&mut rng);
            keep.extend(ids.iter().take(quota).copied());
        }
        selected.retain(|(m, _)| keep.contains(m));
    }
    let rows = selected
        .into_iter()
        .map(|(m, label)| (m, None, label, payloads[&m].clone()))
        .collect();
    Ok(assemble(&format!("property:{key}"), seed, fracs, catalog, rows))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskConfig {
    pub seed: u64,
    pub fracs: SplitFracs,
    pub include_constructors: bool,
    /// Callee hops appended as `<CTX>` names; 0 disables augmentation.
    pub context_hops: usize,
    /// Keep the masked site's own callee name out of the context.
    pub exclude_masked: bool,
}

impl Default for MaskConfig {
    fn default() -> Self {
        MaskConfig {
            seed: 0,
            fracs: SplitFracs::default(),
            include_constructors: false,
            context_hops: 0,
            exclude_masked: true,
        }
    }
}

/// Site of the masked call in each call-masking sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskRecord {
    pub sample_id: String,
    pub line: u32,
    pub col: u32,
}

fn token_at(tokens: &[Token], line: u32, col: u32) -> Option<usize> {
    tokens.iter().position(|t| t.line == line && t.col == col)
}

/// Method-call completion: one seeded call site per method has its callee
/// name replaced by `<MASK>` in the TKNA payload.
pub fn make_call_masking_task(
    catalog: &Catalog,
    methods: &[&MethodSource],
    graph: &CallGraph,
    cfg: &MaskConfig,
    exec: ExecMode,
) -> Result<(TaskDataset, Vec<MaskRecord>)> {
    let by_id: BTreeMap<EntityId, &MethodSource> = methods.iter().map(|m| (m.method_id, *m)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // sequential seeded pass: (method, chosen edge)
    let mut chosen = Vec::new();
    for meta in &catalog.methods {
        let Some(m) = by_id.get(&meta.method_id) else { continue };
        let eligible: Vec<_> = graph
            .outgoing(&m.method_id)
            .filter(|e| cfg.include_constructors || !e.is_constructor)
            .filter(|e| {
                token_at(&m.ast.tokens, e.line, e.col).is_some_and(|t| m.ast.tokens[t].kind == TokenKind::Identifier)
            })
            .collect();
        if eligible.is_empty() {
            continue;
        }
        let e = eligible[rng.random_range(0..eligible.len())];
        chosen.push((*m, e.clone()));
    }
    let rows = par::map(exec, &chosen, |(m, e)| {
        let mut tokens = m.ast.tokens.clone();
        let t = token_at(&tokens, e.line, e.col).expect("eligible site");
        let label = std::mem::replace(&mut tokens[t].lexeme, MASK.to_string());
        (m.method_id, Some(e.call_type), label, tokens_tkna(&tokens))
    });
    if rows.is_empty() {
        return Err(Error::EmptyTask("no method has an eligible call site".into()));
    }
    let mut ds = assemble("call-mask", cfg.seed, &cfg.fracs, catalog, rows);
    let masks: Vec<MaskRecord> = ds
        .samples
        .iter()
        .zip(&chosen)
        .map(|(s, (_, e))| MaskRecord {
            sample_id: s.sample_id.clone(),
            line: e.line,
            col: e.col,
        })
        .collect();
    if cfg.context_hops > 0 {
        for (s, mask) in ds.samples.iter_mut().zip(&masks) {
            let bundle = crate::callgraph::n_hop_context(graph, catalog, &s.method_id, cfg.context_hops, Direction::Callees)?;
            *s = augment_with_context(s, &bundle, mask, cfg.context_hops, cfg.exclude_masked)?;
        }
        ds.task = format!("call-mask+ctx{}", cfg.context_hops);
    }
    Ok((ds, masks))
}

/// Puts the label back at the mask; equals the unmasked TKNA payload.
pub fn recover_masked(sample: &TaskSample) -> String {
    let payload = sample.payload.split(&format!(" {CTX}")).next().unwrap_or(&sample.payload);
    let mut out: Vec<&str> = Vec::new();
    let mut done = false;
    // tokens never contain the marker, so the first bare occurrence is it
    for part in payload.split(' ') {
        if !done && part == MASK {
            out.push(&sample.label);
            done = true;
        } else {
            out.push(part);
        }
    }
    out.join(" ")
}

/// Appends `<CTX>` and the sorted, distinct callee names of the first hop.
/// With `exclude_masked`, the masked site itself contributes nothing, so
/// its name survives only if another site also reaches it.
pub fn augment_with_context(
    sample: &TaskSample,
    bundle: &ContextBundle,
    mask: &MaskRecord,
    hop: usize,
    exclude_masked: bool,
) -> Result<TaskSample> {
    if sample.payload.split(' ').any(|t| t == CTX) {
        return Err(Error::AlreadyAugmented(sample.sample_id.clone()));
    }
    if bundle.center != sample.method_id || bundle.direction != Direction::Callees {
        return Err(Error::InvalidArgument(format!(
            "context bundle for {} does not belong to sample {}",
            bundle.center, sample.sample_id
        )));
    }
    if hop > 1 {
        return Err(Error::InvalidArgument(format!("context hop {hop} unsupported; use 0 or 1")));
    }
    if hop == 0 || bundle.first_hop.is_empty() {
        return Ok(sample.clone());
    }
    let names: BTreeSet<&str> = bundle
        .first_hop
        .iter()
        .filter(|h| !(exclude_masked && (h.line, h.col) == (mask.line, mask.col)))
        .map(|h| h.name.as_str())
        .collect();
    let mut out = sample.clone();
    out.payload.push(' ');
    out.payload.push_str(CTX);
    for n in names {
        out.payload.push(' ');
        out.payload.push_str(n);
    }
    Ok(out)
}

/// Argument swap applied to one sample of the mutation task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationRecord {
    pub sample_id: String,
    pub line: u32,
    pub col: u32,
    pub arg_a: usize,
    pub arg_b: usize,
}

/// Line and column of a call's name token.
type Site = (u32, u32);
/// Half-open token range.
type Span = (usize, usize);

/// Token ranges of each argument of every call with two or more arguments,
/// keyed by the call's name-token position.
fn argument_spans(m: &MethodSource) -> Vec<(Site, Vec<Span>)> {
    let ast = &m.ast;
    let mut out = Vec::new();
    for n in 0..ast.len() {
        if !matches!(ast.kind(n), NodeKind::MethodCall | NodeKind::ObjectCreation) {
            continue;
        }
        let Some(args) = ast.child_of_kind(n, NodeKind::Arguments) else { continue };
        let spans: Vec<(usize, usize)> = ast
            .children(args)
            .iter()
            .filter(|&&c| !ast.kind(c).is_terminal())
            .map(|&c| {
                let toks: Vec<usize> = ast.terminals_in(c).filter_map(|t| ast.nodes[t].token).collect();
                (toks[0], *toks.last().expect("argument has tokens") + 1)
            })
            .collect();
        if spans.len() < 2 {
            continue;
        }
        let first = ast.terminals_in(n).next().and_then(|t| ast.token(t)).expect("call token");
        out.push(((first.line, first.col), spans));
    }
    out
}

fn swap_spans(tokens: &[Token], a: (usize, usize), b: (usize, usize)) -> Vec<Token> {
    let mut out = tokens[..a.0].to_vec();
    out.extend_from_slice(&tokens[b.0..b.1]);
    out.extend_from_slice(&tokens[a.1..b.0]);
    out.extend_from_slice(&tokens[a.0..a.1]);
    out.extend_from_slice(&tokens[b.1..]);
    out
}

/// Variable-misuse style detection: with probability `p_mutate` a method
/// gets two distinct-text arguments of one call swapped.
pub fn make_mutation_task(
    catalog: &Catalog,
    methods: &[&MethodSource],
    p_mutate: f64,
    seed: u64,
    fracs: &SplitFracs,
) -> Result<(TaskDataset, Vec<MutationRecord>)> {
    if !(p_mutate > 0.0 && p_mutate <= 1.0) {
        return Err(Error::InvalidArgument(format!("p_mutate must lie in (0,1], got {p_mutate}")));
    }
    let by_id: BTreeMap<EntityId, &MethodSource> = methods.iter().map(|m| (m.method_id, *m)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut swaps = Vec::new();
    for meta in &catalog.methods {
        let Some(m) = by_id.get(&meta.method_id) else { continue };
        let tokens = &m.ast.tokens;
        let draw: f64 = rng.random();
        let text = |s: (usize, usize)| tokens_tkna(&tokens[s.0..s.1]);
        let candidates: Vec<(Site, usize, usize, Span, Span)> = argument_spans(m)
            .into_iter()
            .flat_map(|(site, spans)| {
                let mut v = Vec::new();
                for i in 0..spans.len() {
                    for j in i + 1..spans.len() {
                        if text(spans[i]) != text(spans[j]) {
                            v.push((site, i, j, spans[i], spans[j]));
                        }
                    }
                }
                v
            })
            .collect();
        let (label, payload) = if draw < p_mutate && !candidates.is_empty() {
            let (site, i, j, a, b) = candidates[rng.random_range(0..candidates.len())];
            swaps.push((rows.len(), site, i, j));
            ("mutated".to_string(), tokens_tkna(&swap_spans(tokens, a, b)))
        } else {
            ("clean".to_string(), tokens_tkna(tokens))
        };
        rows.push((m.method_id, None, label, payload));
    }
    if rows.is_empty() {
        return Err(Error::EmptyTask("no methods".into()));
    }
    let ds = assemble("mutation", seed, fracs, catalog, rows);
    let records = swaps
        .into_iter()
        .map(|(i, (line, col), a, b)| MutationRecord {
            sample_id: ds.samples[i].sample_id.clone(),
            line,
            col,
            arg_a: a,
            arg_b: b,
        })
        .collect();
    Ok((ds, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexparse::lex;

    #[test]
    fn filters_parse_and_compare() {
        let f: Filter = "SLOC>=5".parse().unwrap();
        assert!(f.accepts(&PropertyValue::Integer(5)));
        assert!(!f.accepts(&PropertyValue::Integer(4)));
        let g: Filter = "NAME==get".parse().unwrap();
        assert!(g.accepts(&PropertyValue::Text("get".into())));
        assert_eq!(g.to_string(), "NAME==get");
        assert!("SLOC~5".parse::<Filter>().is_err());
    }

    #[test]
    fn swapping_argument_spans() {
        let toks = lex("f ( a , b + 1 )").unwrap();
        let swapped = swap_spans(&toks, (2, 3), (4, 7));
        assert_eq!(tokens_tkna(&swapped), "f ( b + 1 , a )");
    }
}
