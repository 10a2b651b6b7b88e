//! Random geometric graphs and Metropolis weight matrices.
//!
//! A graph instance is drawn by placing `n` nodes uniformly in the unit
//! square and connecting every pair within the communication radius. Draws
//! that come out disconnected are regenerated with a derived sub-seed until a
//! connected instance appears, so a `(n, radius, seed)` triple always maps to
//! the same graph bit-for-bit.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fmt_f64;
use crate::rng::{stream_rng, Stream};

/// Default cap on connectivity retries in [`generate_rgg`].
pub const DEFAULT_RETRY_CAP: u32 = 1000;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("could not generate connected graph: n={n}, radius={radius}, seed={seed}, attempts={attempts}")]
    Disconnected {
        n: usize,
        radius: f64,
        seed: u64,
        attempts: u32,
    },
    #[error("invalid graph parameters: {0}")]
    InvalidParams(String),
    #[error("Metropolis diagonal out of (0,1): w_{i}{i} = {value}")]
    BadDiagonal { i: usize, value: f64 },
}

/// Undirected simple graph on the unit square, before weights are attached.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Graph {
    pub n: usize,
    /// Node coordinates in [0,1]^2.
    pub coords: Vec<[f64; 2]>,
    /// Unordered edges as (i, j) with i < j.
    pub edges: Vec<(usize, usize)>,
    /// Neighbor lists, sorted ascending.
    pub neighbors: Vec<Vec<usize>>,
    /// How many disconnected draws were discarded before this instance.
    pub retries: u32,
}

impl Graph {
    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// Draws a connected random geometric graph.
///
/// Coordinates are i.i.d. uniform on the unit square; an edge is present iff
/// the Euclidean distance is at most `radius`. Disconnected draws are retried
/// with an incremented sub-seed up to `retry_cap` times.
pub fn generate_rgg(
    n: usize,
    radius: f64,
    seed: u64,
    retry_cap: u32,
) -> Result<Graph, TopologyError> {
    if n < 2 {
        return Err(TopologyError::InvalidParams(format!("n must be >= 2, got {n}")));
    }
    // radius = 0 is allowed to fall through to the retry cap (no edges ever).
    if !(radius >= 0.0 && radius <= f64::sqrt(2.0)) {
        return Err(TopologyError::InvalidParams(format!(
            "radius must be in [0, sqrt(2)], got {radius}"
        )));
    }
    for attempt in 0..retry_cap {
        let mut rng = stream_rng(seed, Stream::Graph(attempt as u64));
        let coords: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let mut edges = Vec::new();
        let mut neighbors = vec![Vec::new(); n];
        let r2 = radius * radius;
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = coords[i][0] - coords[j][0];
                let dy = coords[i][1] - coords[j][1];
                if dx * dx + dy * dy <= r2 {
                    edges.push((i, j));
                    neighbors[i].push(j);
                    neighbors[j].push(i);
                }
            }
        }
        let g = Graph {
            n,
            coords,
            edges,
            neighbors,
            retries: attempt,
        };
        if is_connected(&g) {
            return Ok(g);
        }
    }
    Err(TopologyError::Disconnected {
        n,
        radius,
        seed,
        attempts: retry_cap,
    })
}

/// True iff a breadth-first traversal from node 0 reaches every node.
pub fn is_connected(g: &Graph) -> bool {
    let mut seen = vec![false; g.n];
    let mut queue = std::collections::VecDeque::new();
    seen[0] = true;
    queue.push_back(0usize);
    let mut count = 1usize;
    while let Some(i) = queue.pop_front() {
        for &j in &g.neighbors[i] {
            if !seen[j] {
                seen[j] = true;
                count += 1;
                queue.push_back(j);
            }
        }
    }
    count == g.n
}

/// Graph plus its symmetric row-stochastic weight matrix.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    pub graph: Graph,
    /// Dense symmetric n x n weight matrix; rows sum to 1.
    pub w: DMatrix<f64>,
    /// Smallest diagonal entry of `w`.
    pub w_min: f64,
    /// Largest diagonal entry of `w`.
    pub w_max: f64,
}

impl WeightedGraph {
    pub fn n(&self) -> usize {
        self.graph.n
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.graph.neighbors[i]
    }

    /// Edge-list export, one `i j w_ij` triple per line with 0-based indices
    /// and 17 significant digits.
    pub fn export_edge_list(&self) -> String {
        let mut out = String::new();
        for &(i, j) in &self.graph.edges {
            out.push_str(&format!("{} {} {}\n", i, j, fmt_f64(self.w[(i, j)])));
        }
        out
    }
}

/// Builds the Metropolis weight matrix `w_ij = 1 / (2 (1 + max(d_i, d_j)))`
/// for edges, with the diagonal absorbing the remaining row mass.
pub fn metropolis_weights(g: Graph) -> Result<WeightedGraph, TopologyError> {
    if !is_connected(&g) {
        return Err(TopologyError::InvalidParams(
            "metropolis_weights requires a connected graph".into(),
        ));
    }
    let n = g.n;
    let mut w = DMatrix::zeros(n, n);
    for &(i, j) in &g.edges {
        let val = 1.0 / (2.0 * (1.0 + g.degree(i).max(g.degree(j)) as f64));
        w[(i, j)] = val;
        w[(j, i)] = val;
    }
    for i in 0..n {
        // Fixed ascending order so the diagonal is bit-reproducible.
        let mut off = 0.0;
        for &j in &g.neighbors[i] {
            off += w[(i, j)];
        }
        let diag = 1.0 - off;
        if diag <= 0.0 || diag >= 1.0 {
            return Err(TopologyError::BadDiagonal { i, value: diag });
        }
        w[(i, i)] = diag;
    }
    let w_min = (0..n).map(|i| w[(i, i)]).fold(f64::INFINITY, f64::min);
    let w_max = (0..n).map(|i| w[(i, i)]).fold(f64::NEG_INFINITY, f64::max);
    Ok(WeightedGraph {
        graph: g,
        w,
        w_min,
        w_max,
    })
}

/// Eigenvalues of W sorted descending, plus the second-largest modulus.
#[derive(Debug, Clone)]
pub struct SpectralDiagnostics {
    pub eigenvalues: Vec<f64>,
    pub second_largest_modulus: f64,
}

/// Dense symmetric eigendecomposition of W. Diagnostic only, never on the
/// algorithm path.
pub fn spectral_diagnostics(g: &WeightedGraph) -> SpectralDiagnostics {
    let eig = g.w.clone().symmetric_eigen();
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let second_largest_modulus = eigenvalues
        .iter()
        .skip(1)
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    SpectralDiagnostics {
        eigenvalues,
        second_largest_modulus,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn path3() -> Graph {
        Graph {
            n: 3,
            coords: vec![[0.0, 0.0], [0.1, 0.0], [0.2, 0.0]],
            edges: vec![(0, 1), (1, 2)],
            neighbors: vec![vec![1], vec![0, 2], vec![1]],
            retries: 0,
        }
    }

    fn k2() -> Graph {
        Graph {
            n: 2,
            coords: vec![[0.0, 0.0], [1.0, 1.0]],
            edges: vec![(0, 1)],
            neighbors: vec![vec![1], vec![0]],
            retries: 0,
        }
    }

    #[test]
    fn k2_always_connected_at_max_radius() {
        let g = generate_rgg(2, f64::sqrt(2.0), 42, DEFAULT_RETRY_CAP).unwrap();
        assert_eq!(g.edges, vec![(0, 1)]);
    }

    #[test]
    fn paper_scale_instance_is_connected() {
        let n = 100;
        let radius = (f64::ln(n as f64) / n as f64).sqrt();
        let g = generate_rgg(n, radius, 3, DEFAULT_RETRY_CAP).unwrap();
        assert!(is_connected(&g));
        assert!(g.edge_count() > 0);
    }

    #[test]
    fn zero_radius_hits_retry_cap() {
        let err = generate_rgg(5, 0.0, 1, 10).unwrap_err();
        assert!(matches!(err, TopologyError::Disconnected { attempts: 10, .. }));
    }

    #[test]
    fn connectivity_cases() {
        assert!(is_connected(&k2()));
        assert!(is_connected(&path3()));
        let isolated = Graph {
            n: 2,
            coords: vec![[0.0, 0.0], [1.0, 1.0]],
            edges: vec![],
            neighbors: vec![vec![], vec![]],
            retries: 0,
        };
        assert!(!is_connected(&isolated));
    }

    #[test]
    fn metropolis_path3_hand_values() {
        let wg = metropolis_weights(path3()).unwrap();
        assert_abs_diff_eq!(wg.w[(0, 1)], 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(wg.w[(1, 2)], 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(wg.w[(0, 0)], 5.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(wg.w[(1, 1)], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(wg.w[(2, 2)], 5.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn metropolis_k2_hand_values() {
        let wg = metropolis_weights(k2()).unwrap();
        assert_abs_diff_eq!(wg.w[(0, 1)], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(wg.w[(0, 0)], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(wg.w[(1, 1)], 0.75, epsilon = 1e-15);
    }

    #[test]
    fn rows_sum_to_one_and_diag_at_least_half() {
        let g = generate_rgg(30, 0.5, 9, DEFAULT_RETRY_CAP).unwrap();
        let wg = metropolis_weights(g).unwrap();
        for i in 0..wg.n() {
            let row_sum: f64 = (0..wg.n()).map(|j| wg.w[(i, j)]).sum();
            assert_abs_diff_eq!(row_sum, 1.0, epsilon = 1e-12);
            assert!(wg.w[(i, i)] >= 0.5);
        }
        assert!(wg.w_min >= 0.5 && wg.w_max < 1.0);
    }

    #[test]
    fn zero_pattern_matches_edges() {
        let g = generate_rgg(20, 0.6, 11, DEFAULT_RETRY_CAP).unwrap();
        let wg = metropolis_weights(g).unwrap();
        for i in 0..wg.n() {
            for j in 0..wg.n() {
                if i == j {
                    continue;
                }
                let is_edge = wg.graph.neighbors[i].contains(&j);
                assert_eq!(wg.w[(i, j)] > 0.0, is_edge, "mismatch at ({i},{j})");
                assert_eq!(wg.w[(i, j)], wg.w[(j, i)]);
            }
        }
    }

    #[test]
    fn determinism_bit_for_bit() {
        let a = generate_rgg(40, 0.4, 123, DEFAULT_RETRY_CAP).unwrap();
        let b = generate_rgg(40, 0.4, 123, DEFAULT_RETRY_CAP).unwrap();
        assert_eq!(a.coords, b.coords);
        assert_eq!(a.edges, b.edges);
        let wa = metropolis_weights(a).unwrap();
        let wb = metropolis_weights(b).unwrap();
        assert_eq!(wa.w.as_slice(), wb.w.as_slice());
    }

    #[test]
    fn spectrum_k2() {
        let wg = metropolis_weights(k2()).unwrap();
        let d = spectral_diagnostics(&wg);
        assert_abs_diff_eq!(d.eigenvalues[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.eigenvalues[1], 0.5, epsilon = 1e-12);
        assert!(d.second_largest_modulus < 1.0);
    }

    #[test]
    fn spectrum_general() {
        let g = generate_rgg(25, 0.5, 5, DEFAULT_RETRY_CAP).unwrap();
        let wg = metropolis_weights(g).unwrap();
        let d = spectral_diagnostics(&wg);
        assert_abs_diff_eq!(d.eigenvalues[0], 1.0, epsilon = 1e-9);
        assert!(d.second_largest_modulus < 1.0);
        // unit eigenvalue carries the all-ones eigenvector: W e = e
        let ones = nalgebra::DVector::from_element(wg.n(), 1.0);
        let we = &wg.w * &ones;
        for i in 0..wg.n() {
            assert_abs_diff_eq!(we[i], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn edge_list_export_roundtrip_precision() {
        let wg = metropolis_weights(path3()).unwrap();
        let text = wg.export_edge_list();
        let mut lines = text.lines();
        let first: Vec<&str> = lines.next().unwrap().split(' ').collect();
        assert_eq!(first[0], "0");
        assert_eq!(first[1], "1");
        let parsed: f64 = first[2].parse().unwrap();
        assert_eq!(parsed, wg.w[(0, 1)]);
    }
}
