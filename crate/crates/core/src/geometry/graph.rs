use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use super::distance::{DistanceField, DistanceMatrix};
use crate::error::{KleError, Result};

/// Undirected graph with non-negative edge weights, stored as sorted
/// adjacency lists.
#[derive(Clone, Debug, Default)]
pub struct SparseGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl SparseGraph {
    pub fn new(n: usize) -> Self {
        SparseGraph {
            adjacency: vec![Vec::new(); n],
        }
    }

    /// Builds a graph from an edge list; duplicate edges keep the smaller weight.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut g = SparseGraph::new(n);
        for &(a, b, w) in edges {
            g.add_edge(a, b, w)?;
        }
        Ok(g)
    }

    /// Adds the undirected edge `a - b`, keeping the smaller weight when it exists.
    pub fn add_edge(&mut self, a: usize, b: usize, w: f64) -> Result<()> {
        let n = self.len();
        if a >= n || b >= n {
            return Err(KleError::invalid(format!(
                "edge ({a}, {b}) out of range for {n} nodes"
            )));
        }
        if !(w >= 0.0 && w.is_finite()) {
            return Err(KleError::invalid(format!(
                "edge weight must be non-negative, got {w}"
            )));
        }
        if a == b {
            return Ok(());
        }
        for (from, to) in [(a, b), (b, a)] {
            let list = &mut self.adjacency[from];
            match list.binary_search_by_key(&to, |&(t, _)| t) {
                Ok(pos) => list[pos].1 = list[pos].1.min(w),
                Err(pos) => list.insert(pos, (to, w)),
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node]
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search_by_key(&b, |&(t, _)| t).is_ok()
    }

    /// Number of connected components.
    pub fn n_components(&self) -> usize {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut stack = Vec::new();
        let mut components = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &(u, _) in &self.adjacency[v] {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
        }
        components
    }

    /// Single-source shortest path lengths (Dijkstra). Unreachable nodes get
    /// `f64::INFINITY`.
    pub fn dijkstra(&self, source: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.len()];
        self.dijkstra_into(source, &mut dist);
        dist
    }

    fn dijkstra_into(&self, source: usize, dist: &mut [f64]) {
        dist.fill(f64::INFINITY);
        dist[source] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(State {
            cost: 0.0,
            node: source,
        });
        while let Some(State { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            for &(next, w) in &self.adjacency[node] {
                let candidate = cost + w;
                if candidate < dist[next] {
                    dist[next] = candidate;
                    heap.push(State {
                        cost: candidate,
                        node: next,
                    });
                }
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct State {
    cost: f64,
    node: usize,
}

impl Eq for State {}

// min-heap on cost
impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-nearest-neighbor graph with Euclidean edge weights. An edge is kept if
/// either endpoint selects the other; ties are broken by lower index.
///
/// Fails with [`KleError::Disconnected`] when the result has more than one
/// component.
pub fn knn_graph<P: AsRef<[f64]> + Sync>(points: &[P], k: usize) -> Result<SparseGraph> {
    let n = points.len();
    if n < 2 {
        return Err(KleError::invalid("k-NN graph needs at least two points"));
    }
    if k == 0 || k >= n {
        return Err(KleError::invalid(format!("k must be in 1..{n}, got {k}")));
    }
    let dim = points[0].as_ref().len();
    if points.iter().any(|p| p.as_ref().len() != dim) {
        return Err(KleError::invalid("points have mixed dimensions"));
    }
    let selections: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = points[i].as_ref();
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (squared_distance(pi, points[j].as_ref()), j))
                .collect();
            let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            cand.select_nth_unstable_by(k - 1, by_dist);
            cand.truncate(k);
            cand.into_iter().map(|(d2, j)| (j, d2.sqrt())).collect()
        })
        .collect();
    let mut graph = SparseGraph::new(n);
    for (i, sel) in selections.iter().enumerate() {
        for &(j, d) in sel {
            graph.add_edge(i, j, d)?;
        }
    }
    let components = graph.n_components();
    if components > 1 {
        return Err(KleError::Disconnected { components });
    }
    Ok(graph)
}

/// Dense all-pairs shortest path lengths via one Dijkstra run per source.
///
/// The result is made exactly symmetric by taking the smaller of the two
/// directed path lengths for each pair.
pub fn all_pairs_shortest_paths(graph: &SparseGraph) -> Result<DistanceField> {
    let n = graph.len();
    if n == 0 {
        return Err(KleError::invalid("graph has no nodes"));
    }
    let components = graph.n_components();
    if components > 1 {
        return Err(KleError::Disconnected { components });
    }
    let mut data = vec![0.0; n * n];
    data.par_chunks_mut(n)
        .enumerate()
        .for_each(|(source, row)| graph.dijkstra_into(source, row));
    for i in 0..n {
        data[i * n + i] = 0.0;
        for j in (i + 1)..n {
            let d = data[i * n + j].min(data[j * n + i]);
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    Ok(DistanceField::Matrix(DistanceMatrix::from_raw(n, data)?))
}
