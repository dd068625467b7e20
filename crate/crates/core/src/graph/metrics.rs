//! Complexity, shape, assortativity and transitivity of issue graphs.
//!
//! Denominators:
//! * `pct_isolated` counts size-1 components over all vertices;
//! * `pct_2comp` / `pct_3comp_plus` count components of size exactly 2 and
//!   at least 3 over all components with 2 or more vertices;
//! * `avg_density`, `pct_trees` and `pct_stars` average over components
//!   with 3 or more vertices.
//!
//! A metric without a qualifying denominator is `None` and serializes as
//! `null`.

use serde::{Deserialize, Serialize};

use super::components::{component_shapes, ComponentShape};
use super::IssueGraph;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complexity {
    pub pct_isolated: Option<f64>,
    pub pct_2comp: Option<f64>,
    pub pct_3comp_plus: Option<f64>,
    pub avg_density: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub pct_trees: Option<f64>,
    pub pct_stars: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphMetricsReport {
    pub pct_isolated: Option<f64>,
    pub pct_2comp: Option<f64>,
    pub pct_3comp_plus: Option<f64>,
    pub avg_density: Option<f64>,
    pub pct_trees: Option<f64>,
    pub pct_stars: Option<f64>,
    pub assortativity: Option<f64>,
    pub transitivity: f64,
}

impl GraphMetricsReport {
    /// Column headers in table order.
    pub const COLUMNS: [&'static str; 8] = [
        "%Isolated",
        "%2Comp",
        "%3Comp+",
        "AvgDensity",
        "%Trees",
        "%Stars",
        "Assortativity",
        "Transitivity",
    ];

    /// Values in [`Self::COLUMNS`] order.
    pub fn values(&self) -> [Option<f64>; 8] {
        [
            self.pct_isolated,
            self.pct_2comp,
            self.pct_3comp_plus,
            self.avg_density,
            self.pct_trees,
            self.pct_stars,
            self.assortativity,
            Some(self.transitivity),
        ]
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn complexity_of(n: usize, shapes: &[ComponentShape]) -> Complexity {
    let isolated = shapes.iter().filter(|c| c.size == 1).count();
    let two = shapes.iter().filter(|c| c.size == 2).count();
    let complex: Vec<&ComponentShape> = shapes.iter().filter(|c| c.size >= 3).collect();
    let avg_density = (!complex.is_empty()).then(|| mean_density(&complex));
    Complexity {
        pct_isolated: ratio(isolated, n),
        pct_2comp: ratio(two, two + complex.len()),
        pct_3comp_plus: ratio(complex.len(), two + complex.len()),
        avg_density,
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Mean of `2e / (s(s-1))` over the components, summed as an exact fraction
/// so the result is independent of component order. Falls back to a float sum
/// if the fraction outgrows 128 bits.
fn mean_density(complex: &[&ComponentShape]) -> f64 {
    let exact = complex.iter().try_fold((0u128, 1u128), |(num, den), c| {
        let (e, d) = (2 * c.edges as u128, (c.size * (c.size - 1)) as u128);
        let num = num.checked_mul(d)?.checked_add(e.checked_mul(den)?)?;
        let den = den.checked_mul(d)?;
        let g = gcd(num, den);
        Some((num / g, den / g))
    });
    let count = complex.len() as u128;
    if let Some((num, den)) = exact {
        if let Some(den) = den.checked_mul(count) {
            let g = gcd(num, den);
            return (num / g) as f64 / (den / g) as f64;
        }
    }
    let sum: f64 = complex
        .iter()
        .map(|c| c.edges as f64 / (c.size * (c.size - 1) / 2) as f64)
        .sum();
    sum / complex.len() as f64
}

fn shape_of(shapes: &[ComponentShape]) -> Shape {
    let complex: Vec<&ComponentShape> = shapes.iter().filter(|c| c.size >= 3).collect();
    let trees: Vec<&&ComponentShape> = complex.iter().filter(|c| c.edges + 1 == c.size).collect();
    let stars = trees.iter().filter(|c| c.max_degree + 1 == c.size).count();
    Shape {
        pct_trees: ratio(trees.len(), complex.len()),
        pct_stars: ratio(stars, complex.len()),
    }
}

pub fn complexity_metrics(g: &IssueGraph) -> Complexity {
    complexity_of(g.vertex_count(), &component_shapes(g))
}

pub fn shape_metrics(g: &IssueGraph) -> Shape {
    shape_of(&component_shapes(g))
}

/// Pearson correlation of endpoint degrees over both orientations of every
/// edge. `Ok(None)` when the degree variance is zero (regular graphs).
///
/// With both orientations present the two marginals coincide, so the
/// coefficient reduces to `(M·Σxy − (Σx)²) / (M·Σx² − (Σx)²)` with `M = 2m`;
/// numerator and denominator are evaluated exactly in integers.
pub fn degree_assortativity(g: &IssueGraph) -> Result<Option<f64>> {
    if g.edge_count() == 0 {
        return Err(Error::Undefined(
            "assortativity of a graph without edges".into(),
        ));
    }
    let (mut sx, mut sxx, mut sxy) = (0i128, 0i128, 0i128);
    for (u, v) in g.edges() {
        let (du, dv) = (g.degree(u) as i128, g.degree(v) as i128);
        sx += du + dv;
        sxx += du * du + dv * dv;
        sxy += 2 * du * dv;
    }
    let m = 2 * g.edge_count() as i128;
    let numerator = m * sxy - sx * sx;
    let denominator = m * sxx - sx * sx;
    if denominator == 0 {
        return Ok(None);
    }
    Ok(Some(numerator as f64 / denominator as f64))
}

/// Number of triangles, by neighbor intersection along a degree ordering:
/// each edge is oriented towards the endpoint of higher (degree, index) rank
/// and every triangle is found exactly once from its lowest-ranked vertex.
pub fn triangle_count(g: &IssueGraph) -> u64 {
    let n = g.vertex_count();
    let rank_less = |a: usize, b: usize| (g.degree(a), a) < (g.degree(b), b);
    let forward: Vec<Vec<usize>> = (0..n)
        .map(|u| {
            g.neighbors(u)
                .iter()
                .copied()
                .filter(|&v| rank_less(u, v))
                .collect()
        })
        .collect();
    let mut total = 0u64;
    for u in 0..n {
        for &v in &forward[u] {
            total += sorted_intersection_len(&forward[u], &forward[v]);
        }
    }
    total
}

fn sorted_intersection_len(a: &[usize], b: &[usize]) -> u64 {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// `3·triangles / Σ_v C(deg v, 2)`, or 0 when there are no triads.
pub fn transitivity(g: &IssueGraph) -> f64 {
    let triads: u64 = (0..g.vertex_count())
        .map(|v| {
            let d = g.degree(v) as u64;
            d * d.saturating_sub(1) / 2
        })
        .sum();
    if triads == 0 {
        return 0.0;
    }
    (3 * triangle_count(g)) as f64 / triads as f64
}

pub fn metrics_report(g: &IssueGraph) -> GraphMetricsReport {
    let shapes = component_shapes(g);
    let complexity = complexity_of(g.vertex_count(), &shapes);
    let shape = shape_of(&shapes);
    GraphMetricsReport {
        pct_isolated: complexity.pct_isolated,
        pct_2comp: complexity.pct_2comp,
        pct_3comp_plus: complexity.pct_3comp_plus,
        avg_density: complexity.avg_density,
        pct_trees: shape.pct_trees,
        pct_stars: shape.pct_stars,
        assortativity: degree_assortativity(g).ok().flatten(),
        transitivity: transitivity(g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> IssueGraph {
        let names: Vec<String> = (0..n).map(|i| format!("v{i:02}")).collect();
        IssueGraph::from_edges(
            names.clone(),
            edges.iter().map(|&(a, b)| (names[a].clone(), names[b].clone())),
        )
        .unwrap()
    }

    #[test]
    fn single_edge_in_ten() {
        let c = complexity_metrics(&graph(10, &[(0, 1)]));
        assert_eq!(c.pct_isolated, Some(0.8));
        assert_eq!(c.pct_2comp, Some(1.0));
        assert_eq!(c.pct_3comp_plus, Some(0.0));
        assert_eq!(c.avg_density, None);
    }

    #[test]
    fn path_density() {
        let c = complexity_metrics(&graph(3, &[(0, 1), (1, 2)]));
        assert_eq!(c.avg_density, Some(2.0 / 3.0));
        assert_eq!(c.pct_isolated, Some(0.0));
    }

    #[test]
    fn star_and_triangle_shape() {
        let g = graph(8, &[(0, 1), (0, 2), (0, 3), (0, 4), (5, 6), (6, 7), (5, 7)]);
        let s = shape_metrics(&g);
        assert_eq!(s.pct_trees, Some(0.5));
        assert_eq!(s.pct_stars, Some(0.5));
        assert_eq!(shape_metrics(&graph(2, &[(0, 1)])).pct_trees, None);
    }

    #[test]
    fn star_assortativity() {
        let g = graph(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]);
        assert_eq!(degree_assortativity(&g).unwrap(), Some(-1.0));
    }

    #[test]
    fn regular_and_empty_assortativity() {
        let triangle = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(degree_assortativity(&triangle).unwrap(), None);
        assert!(matches!(degree_assortativity(&graph(3, &[])), Err(Error::Undefined(_))));
    }

    #[test]
    fn transitivity_examples() {
        assert_eq!(transitivity(&graph(3, &[(0, 1), (1, 2), (0, 2)])), 1.0);
        assert_eq!(transitivity(&graph(3, &[(0, 1), (1, 2)])), 0.0);
        // triangle plus pendant: 3·1 / (1 + 3 + 1 + 0)
        assert_eq!(transitivity(&graph(4, &[(0, 1), (1, 2), (0, 2), (1, 3)])), 0.6);
        assert_eq!(transitivity(&graph(2, &[])), 0.0);
    }

    #[test]
    fn degenerate_report() {
        let r = metrics_report(&graph(4, &[]));
        assert_eq!(r.pct_isolated, Some(1.0));
        assert_eq!(r.pct_2comp, None);
        assert_eq!(r.pct_3comp_plus, None);
        assert_eq!(r.avg_density, None);
        assert_eq!(r.pct_trees, None);
        assert_eq!(r.pct_stars, None);
        assert_eq!(r.assortativity, None);
        assert_eq!(r.transitivity, 0.0);
        let json = serde_json::to_value(r).unwrap();
        assert!(json["avg_density"].is_null());

        let none = metrics_report(&graph(0, &[]));
        assert_eq!(none.pct_isolated, None);
    }

    #[test]
    fn k4_triangles() {
        let g = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(triangle_count(&g), 4);
        assert_eq!(transitivity(&g), 1.0);
    }
}
