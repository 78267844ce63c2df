//! Network topologies, combination weights and the canonical directed-link
//! ordering.
//!
//! Nodes are indexed from zero. Every node is its own neighbor, and the
//! adjacency relation is symmetric. Combination weights `a[(l, k)]` are the
//! weights node `k` puts on data coming from node `l`. Each column must sum to
//! one.

use std::collections::VecDeque;
use std::fmt;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// Tolerance used when validating user-supplied column sums.
pub const COLUMN_SUM_TOL: f64 = 1e-12;

/// Undirected, reflexive, connected graph over `n_nodes` nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    adjacency: Vec<Vec<bool>>,
    neighborhoods: Vec<Vec<usize>>,
}

impl Topology {
    /// Builds a topology from an undirected edge list. Self-loops in the list
    /// are ignored (every node is implicitly its own neighbor).
    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::config("topology needs at least one node"));
        }
        let mut adjacency = vec![vec![false; n_nodes]; n_nodes];
        for &(a, b) in edges {
            if a >= n_nodes || b >= n_nodes {
                return Err(Error::config(format!(
                    "edge ({a}, {b}) references a node outside 0..{n_nodes}"
                )));
            }
            adjacency[a][b] = true;
            adjacency[b][a] = true;
        }
        Self::from_adjacency(adjacency)
    }

    /// Builds a topology from a boolean adjacency matrix. The diagonal is
    /// forced to `true`; asymmetric or disconnected inputs are rejected.
    pub fn from_adjacency(mut adjacency: Vec<Vec<bool>>) -> Result<Self> {
        let n = adjacency.len();
        if n == 0 {
            return Err(Error::config("topology needs at least one node"));
        }
        if adjacency.iter().any(|row| row.len() != n) {
            return Err(Error::config("adjacency matrix must be square"));
        }
        for k in 0..n {
            adjacency[k][k] = true;
            for l in 0..k {
                if adjacency[k][l] != adjacency[l][k] {
                    return Err(Error::config(format!(
                        "adjacency is not symmetric between nodes {l} and {k}"
                    )));
                }
            }
        }
        let neighborhoods = (0..n)
            .map(|k| (0..n).filter(|&l| adjacency[l][k]).collect())
            .collect();
        let topology = Topology {
            adjacency,
            neighborhoods,
        };
        if !topology.is_connected() {
            return Err(Error::config("topology is not connected"));
        }
        Ok(topology)
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_neighbor(&self, l: usize, k: usize) -> bool {
        self.adjacency[l][k]
    }

    /// Ordered neighborhood of `k`, including `k` itself.
    pub fn neighborhood(&self, k: usize) -> &[usize] {
        &self.neighborhoods[k]
    }

    /// Neighbors of `k` other than `k`, ascending.
    pub fn neighbors_excluding_self(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.neighborhoods[k].iter().copied().filter(move |&l| l != k)
    }

    /// Number of non-self neighbors of `k`.
    pub fn degree(&self, k: usize) -> usize {
        self.neighborhoods[k].len() - 1
    }

    pub fn mean_degree(&self) -> f64 {
        let total: usize = (0..self.n_nodes()).map(|k| self.degree(k)).sum();
        total as f64 / self.n_nodes() as f64
    }

    /// Undirected edges `(a, b)` with `a < b`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n_nodes();
        let mut out = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                if self.adjacency[a][b] {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Breadth-first search from node 0.
    pub fn is_connected(&self) -> bool {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(k) = queue.pop_front() {
            for &l in &self.neighborhoods[k] {
                if !seen[l] {
                    seen[l] = true;
                    count += 1;
                    queue.push_back(l);
                }
            }
        }
        count == n
    }
}

/// Draws a connected random topology with mean non-self degree
/// `target_avg_degree` in expectation.
///
/// A uniformly random labelled spanning tree (random Prüfer sequence) is drawn
/// first; further edges are then sampled uniformly without replacement from the
/// remaining node pairs until the expected edge count equals
/// `n_nodes * target_avg_degree / 2`. A fractional edge count is resolved by a
/// Bernoulli draw, so the expectation is exact whenever the target is at least
/// the tree's own mean degree `2 (n - 1) / n`.
pub fn generate_random_topology(
    n_nodes: usize,
    target_avg_degree: f64,
    seed: u64,
) -> Result<Topology> {
    if n_nodes < 2 {
        return Err(Error::config("random topology needs at least 2 nodes"));
    }
    if !target_avg_degree.is_finite() || target_avg_degree < 1.0 {
        return Err(Error::config(format!(
            "average degree {target_avg_degree} < 1 cannot guarantee connectivity"
        )));
    }
    if target_avg_degree > (n_nodes - 1) as f64 {
        return Err(Error::config(format!(
            "average degree {target_avg_degree} exceeds n_nodes - 1 = {}",
            n_nodes - 1
        )));
    }
    let mut rng = stream(seed, 0, Purpose::Topology, n_nodes as u64);

    let mut edges = random_tree(n_nodes, &mut rng);
    let mut in_tree = vec![vec![false; n_nodes]; n_nodes];
    for &(a, b) in &edges {
        in_tree[a][b] = true;
        in_tree[b][a] = true;
    }
    let mut candidates: Vec<(usize, usize)> = (0..n_nodes)
        .flat_map(|a| ((a + 1)..n_nodes).map(move |b| (a, b)))
        .filter(|&(a, b)| !in_tree[a][b])
        .collect();

    let extra = n_nodes as f64 * target_avg_degree / 2.0 - (n_nodes - 1) as f64;
    let mut n_extra = 0usize;
    if extra > 0.0 {
        n_extra = extra.floor() as usize;
        if rng.random::<f64>() < extra.fract() {
            n_extra += 1;
        }
    }
    let n_extra = n_extra.min(candidates.len());
    let (chosen, _) = candidates.partial_shuffle(&mut rng, n_extra);
    edges.extend_from_slice(chosen);
    Topology::from_edges(n_nodes, &edges)
}

fn random_tree<R: Rng>(n: usize, rng: &mut R) -> Vec<(usize, usize)> {
    if n == 2 {
        return vec![(0, 1)];
    }
    let prufer: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &v in &prufer {
        degree[v] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &v in &prufer {
        let leaf = (0..n).find(|&u| degree[u] == 1).expect("a leaf always exists");
        edges.push((leaf.min(v), leaf.max(v)));
        degree[leaf] -= 1;
        degree[v] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&u| degree[u] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// Nonnegative `N x N` combination matrix with unit column sums.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinationMatrix {
    weights: DMatrix<f64>,
}

impl CombinationMatrix {
    /// Validates a user-supplied matrix against the topology: entries in
    /// `[0, 1]`, zero outside each neighborhood, columns summing to one.
    pub fn from_matrix(topology: &Topology, weights: DMatrix<f64>) -> Result<Self> {
        let n = topology.n_nodes();
        if weights.nrows() != n || weights.ncols() != n {
            return Err(Error::config(format!(
                "combination matrix is {}x{}, expected {n}x{n}",
                weights.nrows(),
                weights.ncols()
            )));
        }
        for k in 0..n {
            for l in 0..n {
                let a = weights[(l, k)];
                if !a.is_finite() || !(0.0..=1.0).contains(&a) {
                    return Err(Error::config(format!("weight a[{l},{k}] = {a} outside [0, 1]")));
                }
                if a != 0.0 && !topology.is_neighbor(l, k) {
                    return Err(Error::config(format!(
                        "weight a[{l},{k}] is nonzero but {l} is not a neighbor of {k}"
                    )));
                }
            }
            let sum: f64 = weights.column(k).sum();
            if (sum - 1.0).abs() > COLUMN_SUM_TOL {
                return Err(Error::config(format!("column {k} sums to {sum}, expected 1")));
            }
        }
        Ok(CombinationMatrix { weights })
    }

    pub fn n_nodes(&self) -> usize {
        self.weights.nrows()
    }

    /// Weight node `k` assigns to data from node `l`.
    #[inline]
    pub fn weight(&self, l: usize, k: usize) -> f64 {
        self.weights[(l, k)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.weights
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }
}

/// Uniform averaging over each neighborhood: `a[(l, k)] = 1 / |N_k|`.
pub fn build_uniform_combination(topology: &Topology) -> CombinationMatrix {
    let n = topology.n_nodes();
    let mut weights = DMatrix::zeros(n, n);
    for k in 0..n {
        let hood = topology.neighborhood(k);
        let w = 1.0 / hood.len() as f64;
        for &l in hood {
            weights[(l, k)] = w;
        }
    }
    CombinationMatrix { weights }
}

/// Directed link from `source` to `sink`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Link {
    pub source: usize,
    pub sink: usize,
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // one-based, as links are usually reported
        write!(f, "l({},{})", self.source + 1, self.sink + 1)
    }
}

/// All directed links, grouped by sink in ascending order, sources ascending
/// within each group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkIndex {
    links: Vec<Link>,
    // offsets[k]..offsets[k + 1] are the positions of links into sink k
    offsets: Vec<usize>,
}

impl LinkIndex {
    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn get(&self, position: usize) -> Option<Link> {
        self.links.get(position).copied()
    }

    /// Position of a link in the list, if present.
    pub fn position(&self, link: Link) -> Option<usize> {
        if link.sink + 1 >= self.offsets.len() {
            return None;
        }
        let range = self.offsets[link.sink]..self.offsets[link.sink + 1];
        self.links[range.clone()]
            .binary_search_by_key(&link.source, |l| l.source)
            .ok()
            .map(|i| range.start + i)
    }

    /// Positions of all links into `sink`.
    pub fn incoming(&self, sink: usize) -> std::ops::Range<usize> {
        self.offsets[sink]..self.offsets[sink + 1]
    }
}

pub fn enumerate_links(topology: &Topology) -> LinkIndex {
    let n = topology.n_nodes();
    let mut links = Vec::new();
    let mut offsets = Vec::with_capacity(n + 1);
    for k in 0..n {
        offsets.push(links.len());
        links.extend(
            topology
                .neighbors_excluding_self(k)
                .map(|l| Link { source: l, sink: k }),
        );
    }
    offsets.push(links.len());
    LinkIndex { links, offsets }
}
