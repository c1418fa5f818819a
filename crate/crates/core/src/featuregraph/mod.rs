//! Method feature graphs: the syntax tree plus lexical, data-flow and
//! control-flow edges, with edge filtering and a JSON record format.

mod build;

pub use build::{build_feature_graph, CallResolver, NoResolver};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexparse::{Ast, NodeKind};

/// Edge vocabulary, in serialization order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeType {
    Child,
    NextToken,
    LastRead,
    LastWrite,
    ComputedFrom,
    LastLexicalUse,
    GuardedBy,
    GuardedByNegation,
    ReturnTo,
    FormalArgName,
}

impl EdgeType {
    pub const ALL: [EdgeType; 10] = [
        EdgeType::Child,
        EdgeType::NextToken,
        EdgeType::LastRead,
        EdgeType::LastWrite,
        EdgeType::ComputedFrom,
        EdgeType::LastLexicalUse,
        EdgeType::GuardedBy,
        EdgeType::GuardedByNegation,
        EdgeType::ReturnTo,
        EdgeType::FormalArgName,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeType::Child => "Child",
            EdgeType::NextToken => "NextToken",
            EdgeType::LastRead => "LastRead",
            EdgeType::LastWrite => "LastWrite",
            EdgeType::ComputedFrom => "ComputedFrom",
            EdgeType::LastLexicalUse => "LastLexicalUse",
            EdgeType::GuardedBy => "GuardedBy",
            EdgeType::GuardedByNegation => "GuardedByNegation",
            EdgeType::ReturnTo => "ReturnTo",
            EdgeType::FormalArgName => "FormalArgName",
        }
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        EdgeType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown edge type `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    #[serde(rename = "type", with = "node_kind_str")]
    pub kind: NodeKind,
    pub token: Option<String>,
    pub line: u32,
    pub col: u32,
}

mod node_kind_str {
    use super::NodeKind;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(k: &NodeKind, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(k.as_str())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NodeKind, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Typed multigraph over a method's syntax tree. AST nodes keep their tree
/// indices; synthetic nodes (field definitions, formal parameter names)
/// follow them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: BTreeMap<EdgeType, BTreeSet<(usize, usize)>>,
    pub token_order: Vec<usize>,
}

impl FeatureGraph {
    /// The tree alone: nodes plus `Child` edges.
    pub fn from_ast(ast: &Ast) -> Self {
        let nodes = ast
            .nodes
            .iter()
            .map(|n| GraphNode {
                kind: n.kind,
                token: n.token.map(|t| ast.tokens[t].lexeme.clone()),
                line: n.line,
                col: n.col,
            })
            .collect();
        let mut g = FeatureGraph {
            nodes,
            edges: BTreeMap::new(),
            token_order: ast.terminals(),
        };
        for (p, c) in ast.child_edges() {
            g.add_edge(p, c, EdgeType::Child);
        }
        g
    }

    pub fn add_edge(&mut self, src: usize, dst: usize, ty: EdgeType) {
        self.edges.entry(ty).or_default().insert((src, dst));
    }

    pub fn add_node(&mut self, node: GraphNode) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    pub fn edges_of(&self, ty: EdgeType) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.get(&ty).into_iter().flatten().copied()
    }

    /// All edges as `(src, dst, type)`, grouped by type.
    pub fn edge_list(&self) -> Vec<(usize, usize, EdgeType)> {
        self.edges
            .iter()
            .flat_map(|(ty, es)| es.iter().map(move |&(s, d)| (s, d, *ty)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.values().map(BTreeSet::len).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&Wire::from(self)).expect("graph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: WireIn = serde_json::from_str(text)?;
        let mut nodes = Vec::with_capacity(wire.nodes.len());
        for (expected, n) in wire.nodes.into_iter().enumerate() {
            if n.i != expected {
                return Err(Error::InvalidArgument(format!("node index {} out of order", n.i)));
            }
            nodes.push(n.node);
        }
        let mut edges: BTreeMap<EdgeType, BTreeSet<(usize, usize)>> = BTreeMap::new();
        for (name, pairs) in wire.edges {
            let ty: EdgeType = name.parse()?;
            for [s, d] in pairs {
                if s >= nodes.len() || d >= nodes.len() {
                    return Err(Error::InvalidArgument(format!("edge ({s},{d}) out of range")));
                }
                edges.entry(ty).or_default().insert((s, d));
            }
        }
        let token_order = nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.kind.is_terminal())
            .map(|(i, _)| i)
            .collect();
        Ok(FeatureGraph {
            nodes,
            edges,
            token_order,
        })
    }
}

/// Keeps only edges whose type is in `keep`; the node set is unchanged.
pub fn filter_edges(g: &FeatureGraph, keep: &BTreeSet<EdgeType>) -> Result<FeatureGraph> {
    if keep.is_empty() {
        return Err(Error::InvalidArgument("edge filter keeps nothing".into()));
    }
    Ok(FeatureGraph {
        nodes: g.nodes.clone(),
        edges: g
            .edges
            .iter()
            .filter(|(ty, _)| keep.contains(ty))
            .map(|(ty, es)| (*ty, es.clone()))
            .collect(),
        token_order: g.token_order.clone(),
    })
}

#[derive(Serialize)]
struct WireNode<'a> {
    i: usize,
    #[serde(flatten)]
    node: &'a GraphNode,
}

struct WireEdges<'a>(&'a BTreeMap<EdgeType, BTreeSet<(usize, usize)>>);

impl Serialize for WireEdges<'_> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let non_empty: Vec<_> = self.0.iter().filter(|(_, es)| !es.is_empty()).collect();
        let mut map = s.serialize_map(Some(non_empty.len()))?;
        for (ty, es) in non_empty {
            let pairs: Vec<[usize; 2]> = es.iter().map(|&(a, b)| [a, b]).collect();
            map.serialize_entry(ty.as_str(), &pairs)?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct Wire<'a> {
    nodes: Vec<WireNode<'a>>,
    edges: WireEdges<'a>,
}

impl<'a> From<&'a FeatureGraph> for Wire<'a> {
    fn from(g: &'a FeatureGraph) -> Self {
        Wire {
            nodes: g.nodes.iter().enumerate().map(|(i, node)| WireNode { i, node }).collect(),
            edges: WireEdges(&g.edges),
        }
    }
}

#[derive(Deserialize)]
struct WireNodeIn {
    i: usize,
    #[serde(flatten)]
    node: GraphNode,
}

#[derive(Deserialize)]
struct WireIn {
    nodes: Vec<WireNodeIn>,
    edges: BTreeMap<String, Vec<[usize; 2]>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexparse::parse_statement;

    #[test]
    fn json_round_trip_and_order() {
        let ast = parse_statement("x = y + 1;").unwrap();
        let mut g = FeatureGraph::from_ast(&ast);
        g.add_edge(3, 1, EdgeType::ReturnTo);
        g.add_edge(1, 3, EdgeType::NextToken);
        let json = g.to_json();
        let child = json.find("\"Child\"").unwrap();
        let next = json.find("\"NextToken\"").unwrap();
        let ret = json.find("\"ReturnTo\"").unwrap();
        assert!(child < next && next < ret);
        assert_eq!(FeatureGraph::from_json(&json).unwrap(), g);
        assert_eq!(g.to_json(), json);
    }

    #[test]
    fn terminals_carry_positions() {
        let ast = parse_statement("x = 1;").unwrap();
        let json = FeatureGraph::from_ast(&ast).to_json();
        assert!(json.contains(r#"{"i":3,"type":"Identifier","token":"x","line":1,"col":1}"#), "{json}");
    }

    #[test]
    fn malformed_record_rejected() {
        assert!(FeatureGraph::from_json("{\"nodes\":[]}").is_err());
        assert!(FeatureGraph::from_json(r#"{"nodes":[],"edges":{"Child":[[0,1]]}}"#).is_err());
        assert!(FeatureGraph::from_json(r#"{"nodes":[],"edges":{"Bogus":[]}}"#).is_err());
    }

    #[test]
    fn filter_rules() {
        let ast = parse_statement("x = 1;").unwrap();
        let mut g = FeatureGraph::from_ast(&ast);
        g.add_edge(0, 3, EdgeType::LastRead);
        assert!(filter_edges(&g, &BTreeSet::new()).is_err());
        let all: BTreeSet<_> = EdgeType::ALL.into_iter().collect();
        assert_eq!(filter_edges(&g, &all).unwrap(), g);
        let child = BTreeSet::from([EdgeType::Child]);
        let once = filter_edges(&g, &child).unwrap();
        assert_eq!(filter_edges(&once, &child).unwrap(), once);
        assert_eq!(once, FeatureGraph::from_ast(&ast));
    }
}
