//! Undirected communication topologies and their graph Laplacians.
//!
//! Stacked network vectors are laid out agent-major: entries `i*d .. (i+1)*d`
//! belong to agent `i`. The lifted Laplacian `L ⊗ I_d` is never formed; it is
//! applied block by block through the neighbor lists.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algorithms::Preconditioner;
use crate::error::{Error, Result};
use crate::linalg::sorted_eigenvalues;

/// Eigenvalues below this fraction of the largest one count as zero.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Ring,
    Path,
    Complete,
    Star,
    Custom,
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TopologyKind::Ring => "ring",
            TopologyKind::Path => "path",
            TopologyKind::Complete => "complete",
            TopologyKind::Star => "star",
            TopologyKind::Custom => "custom",
        };
        f.write_str(name)
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ring" => Ok(TopologyKind::Ring),
            "path" => Ok(TopologyKind::Path),
            "complete" => Ok(TopologyKind::Complete),
            "star" => Ok(TopologyKind::Star),
            "custom" => Ok(TopologyKind::Custom),
            other => Err(Error::InvalidTopology(format!("unknown kind {other:?}"))),
        }
    }
}

/// A validated undirected, connected, unweighted graph on `m` agents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    m: usize,
    kind: TopologyKind,
    /// Sorted, each pair stored as `(i, j)` with `i < j`.
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Topology {
    pub fn agents(&self) -> usize {
        self.m
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, agent: usize) -> &[usize] {
        &self.neighbors[agent]
    }

    pub fn degree(&self, agent: usize) -> usize {
        self.neighbors[agent].len()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Edge-list text: first line `m`, then one `i j` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.m);
        for (i, j) in &self.edges {
            out.push_str(&format!("{i} {j}\n"));
        }
        out
    }

    /// Parses the edge-list text format. Blank lines and `#` comments are ignored.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let m: usize = lines
            .next()
            .ok_or_else(|| Error::InvalidTopology("empty edge list".into()))?
            .parse()
            .map_err(|e| Error::InvalidTopology(format!("agent count: {e}")))?;
        let mut edges = Vec::new();
        for (n, line) in lines.enumerate() {
            let mut parts = line.split_whitespace();
            let mut next = || -> Result<usize> {
                parts
                    .next()
                    .ok_or_else(|| Error::InvalidTopology(format!("edge line {}: missing endpoint", n + 2)))?
                    .parse()
                    .map_err(|e| Error::InvalidTopology(format!("edge line {}: {e}", n + 2)))
            };
            let (i, j) = (next()?, next()?);
            if parts.next().is_some() {
                return Err(Error::InvalidTopology(format!(
                    "edge line {}: expected two endpoints",
                    n + 2
                )));
            }
            edges.push((i, j));
        }
        build_topology(TopologyKind::Custom, m, Some(&edges))
    }

    /// Parses `kind:m` (for example `ring:5`).
    pub fn from_spec(spec: &str) -> Result<Self> {
        let (kind, m) = spec
            .split_once(':')
            .ok_or_else(|| Error::InvalidTopology(format!("expected kind:m, got {spec:?}")))?;
        let kind: TopologyKind = kind.parse()?;
        if kind == TopologyKind::Custom {
            return Err(Error::InvalidTopology(
                "custom topologies are read from an edge-list file".into(),
            ));
        }
        let m = m
            .trim()
            .parse()
            .map_err(|e| Error::InvalidTopology(format!("agent count in {spec:?}: {e}")))?;
        build_topology(kind, m, None)
    }
}

/// Builds a topology of the given kind.
///
/// Built-in kinds use their canonical edge sets (ring `i ↔ i+1 mod m`, path
/// `i ↔ i+1`, complete, star centred on agent 0). `custom_edges` is accepted
/// only with [`TopologyKind::Custom`] and must form a connected simple graph.
pub fn build_topology(
    kind: TopologyKind,
    m: usize,
    custom_edges: Option<&[(usize, usize)]>,
) -> Result<Topology> {
    if m == 0 {
        return Err(Error::InvalidTopology("agent count must be at least 1".into()));
    }
    let raw: Vec<(usize, usize)> = match (kind, custom_edges) {
        (TopologyKind::Custom, Some(edges)) => edges.to_vec(),
        (TopologyKind::Custom, None) => {
            return Err(Error::InvalidTopology("custom topology needs an edge list".into()))
        }
        (_, Some(_)) => {
            return Err(Error::InvalidTopology(format!(
                "explicit edges are only accepted for custom topologies, not {kind}"
            )))
        }
        (TopologyKind::Ring, None) => (0..m).map(|i| (i, (i + 1) % m)).filter(|(i, j)| i != j).collect(),
        (TopologyKind::Path, None) => (1..m).map(|i| (i - 1, i)).collect(),
        (TopologyKind::Complete, None) => (0..m)
            .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
            .collect(),
        (TopologyKind::Star, None) => (1..m).map(|i| (0, i)).collect(),
    };

    let mut set = BTreeSet::new();
    for &(i, j) in &raw {
        if i >= m || j >= m {
            return Err(Error::InvalidTopology(format!(
                "edge ({i}, {j}) references an agent outside 0..{m}"
            )));
        }
        if i == j {
            return Err(Error::InvalidTopology(format!("self-loop at agent {i}")));
        }
        let key = (i.min(j), i.max(j));
        // Ring on two agents produces the same pair twice; only custom lists are strict.
        if !set.insert(key) && kind == TopologyKind::Custom {
            return Err(Error::InvalidTopology(format!("duplicate edge ({i}, {j})")));
        }
    }
    let edges: Vec<_> = set.into_iter().collect();

    let mut neighbors = vec![Vec::new(); m];
    for &(i, j) in &edges {
        neighbors[i].push(j);
        neighbors[j].push(i);
    }
    for list in &mut neighbors {
        list.sort_unstable();
    }

    let reached = reachable_from_zero(&neighbors);
    if reached < m {
        return Err(Error::Disconnected(format!(
            "only {reached} of {m} agents reachable from agent 0"
        )));
    }

    Ok(Topology {
        m,
        kind,
        edges,
        neighbors,
    })
}

fn reachable_from_zero(neighbors: &[Vec<usize>]) -> usize {
    let mut seen = vec![false; neighbors.len()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = queue.pop_front() {
        for &j in &neighbors[i] {
            if !seen[j] {
                seen[j] = true;
                count += 1;
                queue.push_back(j);
            }
        }
    }
    count
}

/// Graph Laplacian `L = D − A` together with its lift `L ⊗ I_d`.
#[derive(Debug, Clone)]
pub struct LaplacianOperator {
    matrix: DMatrix<f64>,
    d: usize,
    neighbors: Vec<Vec<usize>>,
    /// Ascending eigenvalues of `L`.
    spectrum: Vec<f64>,
}

/// Builds the Laplacian of `topology` lifted to block dimension `d`.
pub fn laplacian(topology: &Topology, d: usize) -> Result<LaplacianOperator> {
    if d == 0 {
        return Err(Error::InvalidParameter("block dimension must be at least 1".into()));
    }
    let m = topology.agents();
    let mut matrix = DMatrix::zeros(m, m);
    for i in 0..m {
        matrix[(i, i)] = topology.degree(i) as f64;
    }
    for &(i, j) in topology.edges() {
        matrix[(i, j)] = -1.0;
        matrix[(j, i)] = -1.0;
    }
    let spectrum = sorted_eigenvalues(&matrix);
    Ok(LaplacianOperator {
        matrix,
        d,
        neighbors: (0..m).map(|i| topology.neighbors(i).to_vec()).collect(),
        spectrum,
    })
}

impl LaplacianOperator {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn agents(&self) -> usize {
        self.neighbors.len()
    }

    pub fn block_dim(&self) -> usize {
        self.d
    }

    pub fn stacked_len(&self) -> usize {
        self.agents() * self.d
    }

    pub fn neighbors(&self, agent: usize) -> &[usize] {
        &self.neighbors[agent]
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn lambda_max(&self) -> f64 {
        self.spectrum.last().copied().unwrap_or(0.0)
    }

    /// Same operator with a different block dimension.
    pub fn with_block_dim(&self, d: usize) -> LaplacianOperator {
        LaplacianOperator {
            d,
            ..self.clone()
        }
    }

    /// Writes `Σ_{j∈N_i} (x_j − x_i)` for agent `i` into `out` (length `d`).
    ///
    /// Reads only agent `i`'s block and its neighbors' blocks.
    pub fn neighbor_disagreement_into(&self, x: &[f64], agent: usize, out: &mut [f64]) {
        let d = self.d;
        let own = &x[agent * d..(agent + 1) * d];
        out.fill(0.0);
        for &j in &self.neighbors[agent] {
            let other = &x[j * d..(j + 1) * d];
            for ((o, xj), xi) in out.iter_mut().zip(other).zip(own) {
                *o += xj - xi;
            }
        }
    }

    /// `(L ⊗ I_d) x` for a stacked vector `x` of length `m d`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out);
        out
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.stacked_len(), "stacked vector length");
        let d = self.d;
        for i in 0..self.agents() {
            let block = &mut out[i * d..(i + 1) * d];
            self.neighbor_disagreement_into(x, i, block);
            block.iter_mut().for_each(|v| *v = -*v);
        }
    }

    /// Moore–Penrose pseudo-inverse of `L` (m × m).
    pub fn pseudo_inverse(&self) -> DMatrix<f64> {
        let tol = ZERO_EIGENVALUE_TOL * self.lambda_max().max(f64::MIN_POSITIVE);
        crate::linalg::spectral_map(&self.matrix, |l| if l > tol { 1.0 / l } else { 0.0 })
    }

    /// Smallest nonzero and largest eigenvalue of `L`.
    pub fn spectral_interval(&self) -> Result<(f64, f64)> {
        spectral_interval(self)
    }
}

/// `(λ_min_nonzero, λ_max)` of the Laplacian.
///
/// Eigenvalues below `1e-10 · λ_max` are the structural zero; a connected graph
/// has exactly one.
pub fn spectral_interval(laplacian: &LaplacianOperator) -> Result<(f64, f64)> {
    let lambda_max = laplacian.lambda_max();
    let tol = ZERO_EIGENVALUE_TOL * lambda_max;
    let zeros = laplacian.spectrum.iter().filter(|&&l| l <= tol).count();
    if zeros > 1 {
        return Err(Error::Disconnected(format!(
            "{zeros} eigenvalues below {tol:e}"
        )));
    }
    let lambda_min = laplacian
        .spectrum
        .iter()
        .copied()
        .find(|&l| l > tol)
        .ok_or_else(|| Error::InvalidTopology("a single agent has no nonzero Laplacian eigenvalue".into()))?;
    Ok((lambda_min, lambda_max))
}

/// Smallest nonzero eigenvalue of `h β K (L ⊗ I)`.
///
/// `K (L⊗I)` is similar to the symmetric PSD matrix `K^{1/2} (L⊗I) K^{1/2}`,
/// whose null space has dimension exactly `d` on a connected graph, so the
/// answer is its `(d+1)`-th smallest eigenvalue.
pub fn effective_connectivity(
    h: f64,
    beta: f64,
    preconditioner: &Preconditioner,
    laplacian: &LaplacianOperator,
) -> Result<f64> {
    if !(h > 0.0) || !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "h and beta must be positive (h={h}, beta={beta})"
        )));
    }
    let (lambda_min, _) = spectral_interval(laplacian)?;
    let d = laplacian.block_dim();
    let m = laplacian.agents();
    if preconditioner.agents() != m || preconditioner.block_dim() != d {
        return Err(Error::DimensionMismatch {
            expected: m * d,
            got: preconditioner.agents() * preconditioner.block_dim(),
        });
    }
    let roots = match preconditioner.sqrt_blocks()? {
        None => return Ok(h * beta * lambda_min),
        Some(roots) => roots,
    };

    let n = m * d;
    let mut sym = DMatrix::zeros(n, n);
    for i in 0..m {
        for j in 0..m {
            let l_ij = laplacian.matrix[(i, j)];
            if l_ij == 0.0 {
                continue;
            }
            let block = (&roots[i] * &roots[j]) * l_ij;
            sym.view_mut((i * d, j * d), (d, d)).copy_from(&block);
        }
    }
    // Symmetrize against round-off before the symmetric solver.
    let sym = (&sym + sym.transpose()) * 0.5;
    let values = sorted_eigenvalues(&sym);
    Ok(h * beta * values[d])
}
