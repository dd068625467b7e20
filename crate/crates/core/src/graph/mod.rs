//! Undirected issue graphs and their structural metrics.

pub(crate) mod components;
mod metrics;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::ingest::Repository;
use crate::taxonomy::{LinkCategory, LinkTaxonomy};
use crate::{Error, Result};

pub use components::{connected_components, is_star, is_tree, Component};
pub use metrics::{
    complexity_metrics, degree_assortativity, metrics_report, shape_metrics, transitivity,
    triangle_count, Complexity, GraphMetricsReport, Shape,
};

/// Simple undirected graph over issue keys.
///
/// Vertices are stored in ascending key order; vertex indices follow that
/// order, so the smallest index of a vertex set is also its smallest key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IssueGraph {
    keys: Vec<String>,
    index: HashMap<String, usize>,
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
}

impl IssueGraph {
    pub fn new<I, S>(vertices: I) -> IssueGraph
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut keys: Vec<String> = vertices.into_iter().map(Into::into).collect();
        keys.sort();
        keys.dedup();
        let index = keys.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
        IssueGraph {
            adjacency: vec![Vec::new(); keys.len()],
            keys,
            index,
            edge_count: 0,
        }
    }

    /// Builds a graph from vertex keys and key pairs. Parallel edges collapse;
    /// self-loops and unknown endpoints are rejected.
    pub fn from_edges<I, S, E, A, B>(vertices: I, edges: E) -> Result<IssueGraph>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
        E: IntoIterator<Item = (A, B)>,
        A: AsRef<str>,
        B: AsRef<str>,
    {
        let mut g = IssueGraph::new(vertices);
        for (a, b) in edges {
            g.add_edge(a.as_ref(), b.as_ref())?;
        }
        Ok(g)
    }

    /// Adds an undirected edge; returns whether it was new.
    pub fn add_edge(&mut self, a: &str, b: &str) -> Result<bool> {
        let u = self.require(a)?;
        let v = self.require(b)?;
        self.add_edge_by_index(u, v)
    }

    pub(crate) fn add_edge_by_index(&mut self, u: usize, v: usize) -> Result<bool> {
        if u == v {
            return Err(Error::Precondition(format!(
                "self-loop on {:?} in a simple graph",
                self.keys[u]
            )));
        }
        match self.adjacency[u].binary_search(&v) {
            Ok(_) => Ok(false),
            Err(pos) => {
                self.adjacency[u].insert(pos, v);
                let pos = self.adjacency[v].binary_search(&u).unwrap_err();
                self.adjacency[v].insert(pos, u);
                self.edge_count += 1;
                Ok(true)
            }
        }
    }

    fn require(&self, key: &str) -> Result<usize> {
        self.index
            .get(key)
            .copied()
            .ok_or_else(|| Error::UnknownKey(key.to_string()))
    }

    pub fn vertex_count(&self) -> usize {
        self.keys.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn key(&self, v: usize) -> &str {
        &self.keys[v]
    }

    pub fn index_of(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Sorted neighbor indices.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Each edge once, as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Same graph with vertex keys renamed by `f`. `f` must be injective.
    pub fn relabel(&self, mut f: impl FnMut(&str) -> String) -> IssueGraph {
        let names: Vec<String> = self.keys.iter().map(|k| f(k)).collect();
        let mut g = IssueGraph::new(names.iter().cloned());
        for (u, v) in self.edges() {
            let a = g.index[&names[u]];
            let b = g.index[&names[v]];
            g.add_edge_by_index(a, b).expect("relabel keeps the graph simple");
        }
        g
    }
}

/// Which links span a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slice {
    All,
    Type(String),
    Category(LinkCategory),
}

impl FromStr for Slice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("all") {
            return Ok(Slice::All);
        }
        match s.split_once(':') {
            Some((kind, name)) if kind.eq_ignore_ascii_case("type") && !name.trim().is_empty() => {
                Ok(Slice::Type(name.trim().to_string()))
            }
            Some((kind, name)) if kind.eq_ignore_ascii_case("category") => name
                .parse()
                .map(Slice::Category)
                .map_err(|_| Error::InvalidSlice(s.to_string())),
            _ => Err(Error::InvalidSlice(s.to_string())),
        }
    }
}

impl fmt::Display for Slice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slice::All => f.write_str("all"),
            Slice::Type(t) => write!(f, "type:{t}"),
            Slice::Category(c) => write!(f, "category:{c}"),
        }
    }
}

/// Graph over every repository issue, with the links selected by `slice`.
///
/// Type slices match on canonical types, so any raw spelling of the type
/// name is accepted. Links whose type the taxonomy cannot resolve only appear
/// in the `all` slice.
pub fn build_graph(repo: &Repository, taxonomy: &LinkTaxonomy, slice: &Slice) -> Result<IssueGraph> {
    let wanted_type = match slice {
        Slice::Type(name) => Some(
            taxonomy
                .normalize_type(name)
                .map_err(|_| Error::InvalidSlice(slice.to_string()))?,
        ),
        _ => None,
    };
    let mut g = IssueGraph::new(repo.issues.keys().cloned());
    for link in &repo.links {
        let keep = match slice {
            Slice::All => true,
            Slice::Type(_) => taxonomy.normalize_type(&link.raw_type).ok() == wanted_type,
            Slice::Category(c) => taxonomy
                .classify(&link.raw_type)
                .map(|(_, cat)| cat == *c)
                .unwrap_or(false),
        };
        if keep {
            g.add_edge(&link.source, &link.target)?;
        }
    }
    Ok(g)
}
