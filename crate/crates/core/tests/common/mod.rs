//! Independent oracles and fixture builders shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use linkgraph::graph::IssueGraph;
use linkgraph::ingest::{load_repository, Repository};

pub type Q = Ratio<i128>;

pub fn fixture_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/fixture_repo.json")
}

pub fn golden_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden_metrics.json")
}

pub fn fixture() -> Repository {
    load_repository(fixture_path(), "fixture").unwrap().clean()
}

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("N-{i:03}")).collect()
}

/// G(n, p) edge list over vertices `0..n`.
pub fn random_edges(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    edges
}

pub fn graph(n: usize, edges: &[(usize, usize)]) -> IssueGraph {
    let ns = names(n);
    IssueGraph::from_edges(ns.clone(), edges.iter().map(|&(a, b)| (ns[a].clone(), ns[b].clone())))
        .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut adj = vec![vec![false; n]; n];
    for &(a, b) in edges {
        adj[a][b] = true;
        adj[b][a] = true;
    }
    adj
}

/// Transitivity by enumerating every vertex triple.
pub fn transitivity_oracle(n: usize, edges: &[(usize, usize)]) -> Q {
    let adj = adjacency(n, edges);
    let mut triangles = 0i128;
    let mut triads = 0i128;
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let (ab, ac, bc) = (adj[a][b], adj[a][c], adj[b][c]);
                if ab && ac && bc {
                    triangles += 1;
                }
                // one connected triple per centre with both spokes present
                triads += i128::from(ab && ac) + i128::from(ab && bc) + i128::from(ac && bc);
            }
        }
    }
    if triads == 0 {
        Q::from_integer(0)
    } else {
        Q::new(3 * triangles, triads)
    }
}

/// Textbook two-pass Pearson correlation; `None` when either side has zero
/// variance.
pub fn pearson(xy: &[(f64, f64)]) -> Option<f64> {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in xy {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx.sqrt() * syy.sqrt()))
    }
}

/// Degree pairs over both orientations of every edge.
pub fn symmetrized_degree_pairs(n: usize, edges: &[(usize, usize)]) -> Vec<(f64, f64)> {
    let mut deg = vec![0usize; n];
    for &(a, b) in edges {
        deg[a] += 1;
        deg[b] += 1;
    }
    edges
        .iter()
        .flat_map(|&(a, b)| [(deg[a] as f64, deg[b] as f64), (deg[b] as f64, deg[a] as f64)])
        .collect()
}

/// Acyclicity by DFS with parent tracking.
pub fn dfs_acyclic(n: usize, edges: &[(usize, usize)]) -> bool {
    let adj = adjacency(n, edges);
    let mut seen = vec![false; n];
    for root in 0..n {
        if seen[root] {
            continue;
        }
        let mut stack = vec![(root, usize::MAX)];
        while let Some((u, parent)) = stack.pop() {
            if seen[u] {
                return false;
            }
            seen[u] = true;
            for v in 0..n {
                if adj[u][v] && v != parent {
                    if seen[v] {
                        return false;
                    }
                    stack.push((v, u));
                }
            }
        }
    }
    true
}

/// Every simple graph on `n` labelled vertices, as edge lists.
pub fn all_graphs(n: usize) -> Vec<Vec<(usize, usize)>> {
    let slots: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    (0u32..1 << slots.len())
        .map(|mask| {
            slots
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, e)| *e)
                .collect()
        })
        .collect()
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

/// Component sizes, edge counts and max degrees by union-find.
pub fn components_oracle(n: usize, edges: &[(usize, usize)]) -> Vec<(usize, usize, usize)> {
    let mut parent: Vec<usize> = (0..n).collect();
    let mut deg = vec![0usize; n];
    let unique: BTreeSet<(usize, usize)> =
        edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    for &(a, b) in &unique {
        deg[a] += 1;
        deg[b] += 1;
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let mut acc: std::collections::BTreeMap<usize, (usize, usize, usize)> = Default::default();
    for (v, &d) in deg.iter().enumerate() {
        let r = find(&mut parent, v);
        let e = acc.entry(r).or_default();
        e.0 += 1;
        e.1 += d;
        e.2 = e.2.max(d);
    }
    acc.into_values().map(|(s, d, m)| (s, d / 2, m)).collect()
}

/// Exact metric values of a graph; `None` where the metric is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactMetrics {
    pub pct_isolated: Option<Q>,
    pub pct_2comp: Option<Q>,
    pub pct_3comp_plus: Option<Q>,
    pub avg_density: Option<Q>,
    pub pct_trees: Option<Q>,
    pub pct_stars: Option<Q>,
    pub assortativity: Option<Q>,
    pub transitivity: Q,
}

fn ratio(num: usize, den: usize) -> Option<Q> {
    (den > 0).then(|| Q::new(num as i128, den as i128))
}

pub fn exact_metrics(n: usize, edges: &[(usize, usize)]) -> ExactMetrics {
    let comps = components_oracle(n, edges);
    let isolated = comps.iter().filter(|c| c.0 == 1).count();
    let two = comps.iter().filter(|c| c.0 == 2).count();
    let complex: Vec<_> = comps.iter().filter(|c| c.0 >= 3).collect();
    let trees: Vec<_> = complex.iter().filter(|c| c.1 + 1 == c.0).collect();
    let stars = trees.iter().filter(|c| c.2 + 1 == c.0).count();
    let avg_density = (!complex.is_empty()).then(|| {
        let sum: Q = complex
            .iter()
            .map(|c| Q::new(2 * c.1 as i128, (c.0 * (c.0 - 1)) as i128))
            .sum();
        sum / Q::from_integer(complex.len() as i128)
    });

    // Pearson over the symmetrized pairs in exact arithmetic
    let pairs = symmetrized_degree_pairs(n, edges);
    let assortativity = if pairs.is_empty() {
        None
    } else {
        let m = pairs.len() as i128;
        let xs: Vec<i128> = pairs.iter().map(|p| p.0 as i128).collect();
        let ys: Vec<i128> = pairs.iter().map(|p| p.1 as i128).collect();
        let mx = Q::new(xs.iter().sum(), m);
        let my = Q::new(ys.iter().sum(), m);
        let mut cov = Q::from_integer(0);
        let mut vx = Q::from_integer(0);
        let mut vy = Q::from_integer(0);
        for (x, y) in xs.iter().zip(&ys) {
            let dx = Q::from_integer(*x) - mx;
            let dy = Q::from_integer(*y) - my;
            cov += dx * dy;
            vx += dx * dx;
            vy += dy * dy;
        }
        // symmetrized, so vx == vy and the square root cancels
        assert_eq!(vx, vy);
        (vx != Q::from_integer(0)).then(|| cov / vx)
    };

    ExactMetrics {
        pct_isolated: ratio(isolated, n),
        pct_2comp: ratio(two, two + complex.len()),
        pct_3comp_plus: ratio(complex.len(), two + complex.len()),
        avg_density,
        pct_trees: ratio(trees.len(), complex.len()),
        pct_stars: ratio(stars, complex.len()),
        assortativity,
        transitivity: transitivity_oracle(n, edges),
    }
}

pub fn to_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// Vertex count and index edge list of an [`IssueGraph`].
pub fn edge_list(g: &IssueGraph) -> (usize, Vec<(usize, usize)>) {
    (g.vertex_count(), g.edges().collect())
}

/// Repository whose OtherLink pairs are textual near-copies, exactly like its
/// Dup pairs; NonLink candidates are unrelated closed issues.
pub fn near_copy_repository(seed: u64, dup_pairs: usize, other_pairs: usize, loners: usize) -> Repository {
    let mut rng = rng(seed);
    let mut vocab: Vec<String> = (0..4000).map(|i| format!("w{i}")).collect();
    vocab.shuffle(&mut rng);
    let mut words = vocab.into_iter();
    let mut issues = Vec::new();
    let mut links = Vec::new();
    let mut next = 1;
    let mut issue = |text: String, resolution: &str, issues: &mut Vec<serde_json::Value>| {
        let key = format!("NC-{next}");
        next += 1;
        issues.push(json!({
            "key": key, "project": "NC", "title": text.split(' ').take(4).collect::<Vec<_>>().join(" "),
            "description": text, "issue_type": "Bug", "status": "Closed",
            "resolution": resolution, "created": "2020-01-01", "is_private": false
        }));
        key
    };
    let link_types = ["Relates", "Blocks", "Epic", "Depends", "Incorporates", "Test"];
    for i in 0..dup_pairs + other_pairs {
        let topic: Vec<String> = words.by_ref().take(12).collect();
        let a_text = topic.join(" ");
        let mut b_words = topic[..11].to_vec();
        b_words.push(words.next().unwrap());
        let b_text = b_words.join(" ");
        let is_dup = i < dup_pairs;
        let a = issue(a_text, "Fixed", &mut issues);
        let b = issue(b_text, if is_dup { "Duplicate" } else { "Fixed" }, &mut issues);
        let ty = if is_dup { "Duplicate" } else { link_types[i % link_types.len()] };
        links.push(json!({"source": b, "target": a, "type": ty, "direction": null}));
    }
    for _ in 0..loners {
        let text: Vec<String> = words.by_ref().take(12).collect();
        issue(text.join(" "), "Fixed", &mut issues);
    }
    let doc = json!({"name": "near-copy", "issues": issues, "links": links});
    Repository::from_json_str(&doc.to_string(), "near-copy").unwrap().clean()
}
