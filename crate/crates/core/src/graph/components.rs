use serde::{Deserialize, Serialize};

use super::IssueGraph;
use crate::{Error, Result};

/// A connected component. `degree_sequence[i]` is the degree of `vertices[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub vertices: Vec<String>,
    pub edge_count: usize,
    pub degree_sequence: Vec<usize>,
}

impl Component {
    pub fn size(&self) -> usize {
        self.vertices.len()
    }

    pub fn max_degree(&self) -> usize {
        self.degree_sequence.iter().copied().max().unwrap_or(0)
    }
}

/// Index-level component summary used by the metric code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ComponentShape {
    pub size: usize,
    pub edges: usize,
    pub max_degree: usize,
}

/// Vertex index sets of the components, largest first, ties by smallest key.
pub(crate) fn component_indices(g: &IssueGraph) -> Vec<Vec<usize>> {
    let n = g.vertex_count();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut members = Vec::new();
        while let Some(u) = stack.pop() {
            members.push(u);
            for &v in g.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    // discovery order already ascends by smallest member; a stable sort keeps it for ties
    out.sort_by_key(|c| std::cmp::Reverse(c.len()));
    out
}

pub(crate) fn component_shapes(g: &IssueGraph) -> Vec<ComponentShape> {
    component_indices(g)
        .iter()
        .map(|members| {
            let degree_sum: usize = members.iter().map(|&v| g.degree(v)).sum();
            ComponentShape {
                size: members.len(),
                edges: degree_sum / 2,
                max_degree: members.iter().map(|&v| g.degree(v)).max().unwrap_or(0),
            }
        })
        .collect()
}

/// Partition of the vertices into connected components.
pub fn connected_components(g: &IssueGraph) -> Vec<Component> {
    component_indices(g)
        .into_iter()
        .map(|members| {
            let degree_sequence: Vec<usize> = members.iter().map(|&v| g.degree(v)).collect();
            Component {
                vertices: members.iter().map(|&v| g.key(v).to_string()).collect(),
                edge_count: degree_sequence.iter().sum::<usize>() / 2,
                degree_sequence,
            }
        })
        .collect()
}

fn require_complex(c: &Component) -> Result<()> {
    if c.size() < 3 {
        return Err(Error::Precondition(format!(
            "shape analysis needs a component with at least 3 issues, got {}",
            c.size()
        )));
    }
    Ok(())
}

/// A connected component is a tree iff it has exactly `n - 1` edges.
pub fn is_tree(c: &Component) -> Result<bool> {
    require_complex(c)?;
    Ok(c.edge_count + 1 == c.size())
}

/// A tree with one vertex adjacent to all others.
pub fn is_star(c: &Component) -> Result<bool> {
    Ok(is_tree(c)? && c.max_degree() + 1 == c.size())
}
