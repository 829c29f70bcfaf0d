//! Finite simplicial graphs and induced subgraphs.
//!
//! Vertices are named by strings and stored in lexicographic order, so a
//! vertex index doubles as its rank in the fixed total order used for every
//! canonical tie-break downstream. Induced subgraphs are bitmasks over those
//! indices.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard ceiling on the number of vertices a graph may carry.
pub const MAX_VERTICES: usize = 64;

/// Default vertex-count limit for exhaustive subgraph enumeration.
pub const DEFAULT_SUBGRAPH_LIMIT: usize = 16;

pub type Vertex = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("self-loop on vertex `{0}`")]
    SelfLoop(String),
    #[error("graph has {0} vertices, at most {MAX_VERTICES} supported")]
    TooManyVertices(usize),
    #[error("subgraph enumeration over {count} vertices exceeds the limit of {limit}")]
    LimitExceeded { count: usize, limit: usize },
}

/// An induced subgraph, stored as the set of its vertex indices.
///
/// Edges are always inherited from the parent graph, so the vertex set is
/// the whole description.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subgraph(u64);

impl Subgraph {
    pub const EMPTY: Subgraph = Subgraph(0);

    pub fn from_bits(bits: u64) -> Self {
        Subgraph(bits)
    }

    pub fn single(v: Vertex) -> Self {
        Subgraph(1 << v)
    }

    pub fn from_vertices<I: IntoIterator<Item = Vertex>>(vs: I) -> Self {
        Subgraph(vs.into_iter().fold(0, |acc, v| acc | (1 << v)))
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, v: Vertex) -> bool {
        v < MAX_VERTICES && self.0 & (1 << v) != 0
    }

    pub fn is_subset(self, other: Subgraph) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: Subgraph) -> Subgraph {
        Subgraph(self.0 | other.0)
    }

    pub fn intersection(self, other: Subgraph) -> Subgraph {
        Subgraph(self.0 & other.0)
    }

    pub fn difference(self, other: Subgraph) -> Subgraph {
        Subgraph(self.0 & !other.0)
    }

    pub fn insert(&mut self, v: Vertex) {
        self.0 |= 1 << v;
    }

    /// Smallest vertex in the set.
    pub fn first(self) -> Option<Vertex> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn iter(self) -> impl Iterator<Item = Vertex> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let v = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(v)
            }
        })
    }

    /// ShortLex comparison key: fewer vertices first, then the sorted vertex
    /// sequence lexicographically.
    pub fn shortlex_key(self) -> (usize, Vec<Vertex>) {
        (self.len(), self.iter().collect())
    }
}

impl fmt::Debug for Subgraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A finite simplicial graph: no loops, no multi-edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicialGraph {
    names: Vec<String>,
    adjacency: Vec<u64>,
}

/// Serialized shape of a graph: vertex names plus an edge list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub vertices: Vec<String>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
}

impl SimplicialGraph {
    /// Builds a graph, sorting vertex names so that index order is
    /// lexicographic order.
    pub fn new<S: AsRef<str>>(vertices: &[S], edges: &[(S, S)]) -> Result<Self, GraphError> {
        let mut names: Vec<String> = vertices.iter().map(|s| s.as_ref().to_string()).collect();
        if names.len() > MAX_VERTICES {
            return Err(GraphError::TooManyVertices(names.len()));
        }
        names.sort();
        for pair in names.windows(2) {
            if pair[0] == pair[1] {
                return Err(GraphError::DuplicateVertex(pair[0].clone()));
            }
        }
        let mut graph = SimplicialGraph {
            adjacency: vec![0; names.len()],
            names,
        };
        for (u, v) in edges {
            let (u, v) = (u.as_ref(), v.as_ref());
            let iu = graph.vertex(u).ok_or_else(|| GraphError::UnknownVertex(u.to_string()))?;
            let iv = graph.vertex(v).ok_or_else(|| GraphError::UnknownVertex(v.to_string()))?;
            if iu == iv {
                return Err(GraphError::SelfLoop(u.to_string()));
            }
            graph.adjacency[iu] |= 1 << iv;
            graph.adjacency[iv] |= 1 << iu;
        }
        Ok(graph)
    }

    pub fn from_spec(spec: &GraphSpec) -> Result<Self, GraphError> {
        let edges: Vec<(&str, &str)> = spec
            .edges
            .iter()
            .map(|(a, b)| (a.as_str(), b.as_str()))
            .collect();
        let vertices: Vec<&str> = spec.vertices.iter().map(String::as_str).collect();
        Self::new(&vertices, &edges)
    }

    pub fn to_spec(&self) -> GraphSpec {
        let mut edges = Vec::new();
        for u in 0..self.len() {
            for v in (u + 1)..self.len() {
                if self.adjacent(u, v) {
                    edges.push((self.names[u].clone(), self.names[v].clone()));
                }
            }
        }
        GraphSpec {
            vertices: self.names.clone(),
            edges,
        }
    }

    /// Path graph on `n` vertices named `a, b, c, ...`.
    pub fn path(n: usize) -> Self {
        let names = letter_names(n);
        let edges: Vec<(&str, &str)> = (1..n)
            .map(|i| (names[i - 1].as_str(), names[i].as_str()))
            .collect();
        Self::new(&names.iter().map(String::as_str).collect::<Vec<_>>(), &edges)
            .expect("path graph is well formed")
    }

    /// Cycle graph on `n >= 3` vertices.
    pub fn cycle(n: usize) -> Self {
        let names = letter_names(n);
        let edges: Vec<(&str, &str)> = (0..n)
            .map(|i| (names[i].as_str(), names[(i + 1) % n].as_str()))
            .collect();
        Self::new(&names.iter().map(String::as_str).collect::<Vec<_>>(), &edges)
            .expect("cycle graph is well formed")
    }

    pub fn complete(n: usize) -> Self {
        let names = letter_names(n);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((names[i].as_str(), names[j].as_str()));
            }
        }
        Self::new(&names.iter().map(String::as_str).collect::<Vec<_>>(), &edges)
            .expect("complete graph is well formed")
    }

    pub fn edgeless(n: usize) -> Self {
        let names = letter_names(n);
        Self::new::<&str>(&names.iter().map(String::as_str).collect::<Vec<_>>(), &[])
            .expect("edgeless graph is well formed")
    }

    /// Labeled graph on `n` vertices whose edges are selected by the bits of
    /// `mask`, taken over the pairs `(i, j)`, `i < j`, in lexicographic order.
    pub fn from_edge_mask(n: usize, mask: u64) -> Self {
        let names = letter_names(n);
        let mut edges = Vec::new();
        let mut bit = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                if mask & (1 << bit) != 0 {
                    edges.push((names[i].as_str(), names[j].as_str()));
                }
                bit += 1;
            }
        }
        Self::new(&names.iter().map(String::as_str).collect::<Vec<_>>(), &edges)
            .expect("masked graph is well formed")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: Vertex) -> &str {
        &self.names[v]
    }

    pub fn vertex(&self, name: &str) -> Option<Vertex> {
        self.names.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }

    pub fn all(&self) -> Subgraph {
        if self.len() == 64 {
            Subgraph(u64::MAX)
        } else {
            Subgraph((1u64 << self.len()) - 1)
        }
    }

    pub fn adjacent(&self, u: Vertex, v: Vertex) -> bool {
        self.adjacency[u] & (1 << v) != 0
    }

    /// Neighbours of a single vertex.
    pub fn neighbours(&self, v: Vertex) -> Subgraph {
        Subgraph(self.adjacency[v])
    }

    /// Vertices outside `sub` adjacent to every vertex of `sub`.
    ///
    /// The link of the empty subgraph is the whole graph.
    pub fn link(&self, sub: Subgraph) -> Subgraph {
        if sub.is_empty() {
            return self.all();
        }
        sub.iter()
            .fold(self.all(), |acc, v| acc.intersection(self.neighbours(v)))
            .difference(sub)
    }

    /// `sub` together with its link; the star of the empty subgraph is the
    /// whole graph.
    pub fn star(&self, sub: Subgraph) -> Subgraph {
        if sub.is_empty() {
            return self.all();
        }
        sub.union(self.link(sub))
    }

    pub fn has_isolated_vertices(&self) -> bool {
        (0..self.len()).any(|v| self.adjacency[v] == 0)
    }

    /// Every nonempty induced subgraph accepted by `filter`, in increasing
    /// bitmask order.
    pub fn enumerate_subgraphs(
        &self,
        limit: usize,
        filter: Option<&dyn Fn(Subgraph) -> bool>,
    ) -> Result<Vec<Subgraph>, GraphError> {
        if self.len() > limit || self.len() >= 63 {
            return Err(GraphError::LimitExceeded {
                count: self.len(),
                limit,
            });
        }
        let total = 1u64 << self.len();
        Ok((1..total)
            .map(Subgraph)
            .filter(|&s| filter.is_none_or(|f| f(s)))
            .collect())
    }

    /// Nonempty subgraphs with nonempty link.
    pub fn subgraphs_with_link(&self, limit: usize) -> Result<Vec<Subgraph>, GraphError> {
        self.enumerate_subgraphs(limit, Some(&|s| !self.link(s).is_empty()))
    }

    pub fn parse_subgraph(&self, names: &[&str]) -> Result<Subgraph, GraphError> {
        let mut sub = Subgraph::EMPTY;
        for n in names {
            let v = self
                .vertex(n)
                .ok_or_else(|| GraphError::UnknownVertex(n.to_string()))?;
            sub.insert(v);
        }
        Ok(sub)
    }

    pub fn subgraph_names(&self, sub: Subgraph) -> Vec<String> {
        sub.iter().map(|v| self.names[v].clone()).collect()
    }

    /// Renders a subgraph as `{a,c}`.
    pub fn format_subgraph(&self, sub: Subgraph) -> String {
        format!("{{{}}}", self.subgraph_names(sub).join(","))
    }

    pub fn vertex_set(&self) -> BTreeSet<&str> {
        self.names.iter().map(String::as_str).collect()
    }
}

fn letter_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            if i < 26 {
                ((b'a' + i as u8) as char).to_string()
            } else {
                format!("v{i:02}")
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sub(g: &SimplicialGraph, names: &[&str]) -> Subgraph {
        g.parse_subgraph(names).unwrap()
    }

    #[test]
    fn link_examples() {
        let p3 = SimplicialGraph::path(3);
        assert_eq!(p3.link(sub(&p3, &["b"])), sub(&p3, &["a", "c"]));
        let p4 = SimplicialGraph::path(4);
        assert_eq!(p4.link(sub(&p4, &["b", "c"])), Subgraph::EMPTY);
        assert_eq!(p4.link(sub(&p4, &["a", "c"])), sub(&p4, &["b"]));
        assert_eq!(p4.link(Subgraph::EMPTY), p4.all());
    }

    #[test]
    fn star_examples() {
        let p3 = SimplicialGraph::path(3);
        assert_eq!(p3.star(sub(&p3, &["b"])), p3.all());
        let p4 = SimplicialGraph::path(4);
        assert_eq!(p4.star(sub(&p4, &["b"])), sub(&p4, &["a", "b", "c"]));
        assert_eq!(p4.star(sub(&p4, &["a", "c"])), sub(&p4, &["a", "b", "c"]));
    }

    #[test]
    fn enumerate_with_link_filter() {
        let p4 = SimplicialGraph::path(4);
        let got = p4.subgraphs_with_link(16).unwrap();
        let want: Vec<Subgraph> = [
            vec!["a"],
            vec!["b"],
            vec!["a", "c"],
            vec!["c"],
            vec!["b", "d"],
            vec!["d"],
        ]
        .iter()
        .map(|n| sub(&p4, n))
        .collect();
        let mut got_sorted = got.clone();
        got_sorted.sort();
        let mut want_sorted = want;
        want_sorted.sort();
        assert_eq!(got_sorted, want_sorted);

        let p3 = SimplicialGraph::path(3);
        let mut got = p3.subgraphs_with_link(16).unwrap();
        got.sort();
        let mut want: Vec<Subgraph> = [vec!["a"], vec!["b"], vec!["c"], vec!["a", "c"]]
            .iter()
            .map(|n| sub(&p3, n))
            .collect();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn enumerate_single_vertex_and_counts() {
        let g = SimplicialGraph::edgeless(1);
        assert_eq!(g.enumerate_subgraphs(16, None).unwrap(), vec![Subgraph::single(0)]);
        let p4 = SimplicialGraph::path(4);
        assert_eq!(p4.enumerate_subgraphs(16, None).unwrap().len(), 15);
        assert_eq!(
            SimplicialGraph::edgeless(5).enumerate_subgraphs(4, None),
            Err(GraphError::LimitExceeded { count: 5, limit: 4 })
        );
    }

    #[test]
    fn isolated_vertices() {
        assert!(!SimplicialGraph::path(4).has_isolated_vertices());
        assert!(SimplicialGraph::edgeless(2).has_isolated_vertices());
        assert!(!SimplicialGraph::path(3).has_isolated_vertices());
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            SimplicialGraph::new(&["a", "a"], &[]),
            Err(GraphError::DuplicateVertex("a".into()))
        );
        assert_eq!(
            SimplicialGraph::new(&["a", "b"], &[("a", "a")]),
            Err(GraphError::SelfLoop("a".into()))
        );
        assert_eq!(
            SimplicialGraph::new(&["a"], &[("a", "z")]),
            Err(GraphError::UnknownVertex("z".into()))
        );
    }

    #[test]
    fn vertices_sorted_lexicographically() {
        let g = SimplicialGraph::new(&["c", "a", "b"], &[("c", "a")]).unwrap();
        assert_eq!(g.names(), &["a", "b", "c"]);
        assert!(g.adjacent(0, 2));
    }

    #[test]
    fn link_properties_exhaustive_small_graphs() {
        // every labeled graph on 4 vertices
        for mask in 0..64u64 {
            let g = SimplicialGraph::from_edge_mask(4, mask);
            let subs = g.enumerate_subgraphs(16, None).unwrap();
            for &l in &subs {
                assert!(l.is_subset(g.star(l)));
                assert!(g.link(l).intersection(l).is_empty());
                for &o in &subs {
                    let full_join = l.iter().all(|u| o.iter().all(|w| g.adjacent(u, w)));
                    assert_eq!(l.is_subset(g.link(o)), full_join, "mask {mask} {l:?} {o:?}");
                }
            }
            for v in 0..4 {
                for w in 0..4 {
                    assert_eq!(
                        g.link(Subgraph::single(w)).contains(v),
                        g.link(Subgraph::single(v)).contains(w)
                    );
                }
            }
        }
    }
}
