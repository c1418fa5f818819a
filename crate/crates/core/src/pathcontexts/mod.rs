//! AST path contexts in the two flavours consumed by path-attention models:
//! hashed paths over raw tokens (C2VC) and explicit node sequences over
//! subtokens (C2SQ).

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::lexparse::{Ast, MethodSource, NodeKind};
use crate::{Error, Result};

pub const UP: char = '^';
pub const DOWN: char = '_';

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathConfig {
    pub max_length: usize,
    pub max_width: usize,
    pub max_contexts: usize,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig { max_length: 8, max_width: 2, max_contexts: 200 }
    }
}

impl PathConfig {
    pub fn unlimited() -> Self {
        PathConfig { max_length: usize::MAX, max_width: usize::MAX, max_contexts: usize::MAX }
    }

    fn check(&self) -> Result<()> {
        if self.max_length == 0 || self.max_width == 0 || self.max_contexts == 0 {
            return Err(Error::InvalidArgument("path limits must be at least 1".into()));
        }
        Ok(())
    }
}

/// A path between two terminals through their lowest common ancestor.
/// `up` runs from the start terminal to the LCA's child, `down` from the
/// LCA's other child to the end terminal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPath {
    pub start: usize,
    pub end: usize,
    pub up: Vec<NodeKind>,
    pub lca: NodeKind,
    pub down: Vec<NodeKind>,
}

impl RawPath {
    /// Nodes on the path, counting both terminals and the LCA.
    pub fn length(&self) -> usize {
        self.up.len() + 1 + self.down.len()
    }

    /// `Keyword^ReturnStmt_Literal_IntLiteral`
    pub fn shape(&self) -> String {
        let mut s = String::new();
        for k in &self.up {
            s.push_str(k.as_str());
            s.push(UP);
        }
        s.push_str(self.lca.as_str());
        for k in &self.down {
            s.push(DOWN);
            s.push_str(k.as_str());
        }
        s
    }

    pub fn hash(&self) -> u64 {
        path_hash(&self.shape())
    }
}

pub fn path_hash(shape: &str) -> u64 {
    let digest = Sha256::digest(shape.as_bytes());
    u64::from_be_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Enumerates terminal pairs (ordered by token position) whose connecting
/// path fits the limits, then samples down to `max_contexts`.
pub fn extract_paths(ast: &Ast, cfg: &PathConfig, seed: u64) -> Result<Vec<RawPath>> {
    cfg.check()?;
    let mut paths = candidate_paths(ast, cfg.max_length, cfg.max_width);
    if paths.len() > cfg.max_contexts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut keep = index::sample(&mut rng, paths.len(), cfg.max_contexts).into_vec();
        keep.sort_unstable();
        let mut slots: Vec<Option<RawPath>> = paths.into_iter().map(Some).collect();
        paths = keep.into_iter().map(|i| slots[i].take().expect("distinct")).collect();
    }
    Ok(paths)
}

fn candidate_paths(ast: &Ast, max_length: usize, max_width: usize) -> Vec<RawPath> {
    let terminals = ast.terminals();
    let mut chain_pos = vec![usize::MAX; ast.len()];
    let mut out = Vec::new();
    for (ai, &a) in terminals.iter().enumerate() {
        let chain = ancestors(ast, a);
        for (i, &n) in chain.iter().enumerate() {
            chain_pos[n] = i;
        }
        for &b in &terminals[ai + 1..] {
            let mut down_nodes = Vec::new();
            let mut cur = b;
            while chain_pos[cur] == usize::MAX {
                down_nodes.push(cur);
                cur = ast.parent[cur].expect("terminals share the root");
            }
            let lca = cur;
            let up_len = chain_pos[lca];
            if up_len + 1 + down_nodes.len() > max_length {
                continue;
            }
            let left = chain[up_len - 1];
            let right = *down_nodes.last().expect("b is not an ancestor of a");
            if child_index(ast, lca, left).abs_diff(child_index(ast, lca, right)) > max_width {
                continue;
            }
            out.push(RawPath {
                start: a,
                end: b,
                up: chain[..up_len].iter().map(|&n| ast.kind(n)).collect(),
                lca: ast.kind(lca),
                down: down_nodes.iter().rev().map(|&n| ast.kind(n)).collect(),
            });
        }
        for &n in &chain {
            chain_pos[n] = usize::MAX;
        }
    }
    out
}

fn ancestors(ast: &Ast, mut n: usize) -> Vec<usize> {
    let mut chain = vec![n];
    while let Some(p) = ast.parent[n] {
        chain.push(p);
        n = p;
    }
    chain
}

fn child_index(ast: &Ast, parent: usize, child: usize) -> usize {
    ast.children(parent).iter().position(|&c| c == child).expect("child of parent")
}

/// Splits an identifier on underscores and case boundaries, lowercasing
/// each part: `parseHTTPResponse_v2` → `parse http response v2`.
pub fn subtokens(ident: &str) -> Vec<String> {
    let mut parts = Vec::new();
    for chunk in ident.split('_').filter(|c| !c.is_empty()) {
        let chars: Vec<char> = chunk.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let (prev, cur) = (chars[i - 1], chars[i]);
            let next_lower = chars.get(i + 1).is_some_and(|c| c.is_lowercase());
            let boundary = cur.is_uppercase() && (!prev.is_uppercase() || next_lower);
            if boundary {
                parts.push(chars[start..i].iter().collect::<String>().to_lowercase());
                start = i;
            }
        }
        parts.push(chars[start..].iter().collect::<String>().to_lowercase());
    }
    parts
}

/// Terminal text made safe for a space-separated, comma-joined record.
fn escape(text: &str, extra_pipe: bool) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            ',' => out.push_str("<LITCOMMA>"),
            '|' if extra_pipe => out.push_str("<PIPE>"),
            c if c.is_whitespace() => out.push_str("<SPACE>"),
            c => out.push(c),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RenderOptions {
    /// Replace identifier terminals with their lowercased subtoken
    /// concatenation in C2VC records.
    pub normalize_identifiers: bool,
}

fn c2vc_terminal(ast: &Ast, n: usize, opts: RenderOptions) -> String {
    let text = ast.lexeme(n).unwrap_or_default();
    if opts.normalize_identifiers && ast.kind(n) == NodeKind::Identifier {
        let joined = subtokens(text).concat();
        if !joined.is_empty() {
            return escape(&joined, false);
        }
    }
    escape(text, false)
}

fn c2sq_terminal(ast: &Ast, n: usize) -> String {
    let text = ast.lexeme(n).unwrap_or_default();
    let parts = match ast.kind(n) {
        NodeKind::Identifier => subtokens(text),
        _ => Vec::new(),
    };
    if parts.is_empty() {
        escape(text, true)
    } else {
        parts.iter().map(|p| escape(p, true)).collect::<Vec<_>>().join("|")
    }
}

pub fn to_c2vc(m: &MethodSource, paths: &[RawPath], opts: RenderOptions) -> String {
    let mut record = m.name.clone();
    for p in paths {
        record.push(' ');
        record.push_str(&format!(
            "{},{},{}",
            c2vc_terminal(&m.ast, p.start, opts),
            p.hash(),
            c2vc_terminal(&m.ast, p.end, opts)
        ));
    }
    record
}

pub fn to_c2sq(m: &MethodSource, paths: &[RawPath]) -> String {
    let mut record = subtokens(&m.name).join("|");
    for p in paths {
        record.push(' ');
        record.push_str(&format!("{},{},{}", c2sq_terminal(&m.ast, p.start), p.shape(), c2sq_terminal(&m.ast, p.end)));
    }
    record
}
