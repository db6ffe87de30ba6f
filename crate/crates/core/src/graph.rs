//! Graph container and the self-loop-normalized spectral operators built from it.
//!
//! The normalized adjacency is `Ã = (D+I)^{-1/2} (A+I) (D+I)^{-1/2}` and the
//! normalized Laplacian is `L̃ = I − Ã`. Both are stored as [`SparseSymMatrix`].

use std::collections::BTreeSet;

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Result, SpcError};

/// Undirected simple graph with dense node features and integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    features: Array2<f64>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl Graph {
    /// Builds a graph, normalizing every edge to `(min, max)` and dropping duplicates
    /// in either orientation. Self-loops are rejected.
    pub fn new(
        num_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        features: Array2<f64>,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(SpcError::InvalidGraph(format!("self-loop at node {a}")));
            }
            if a >= num_nodes || b >= num_nodes {
                return Err(SpcError::InvalidGraph(format!(
                    "edge ({a}, {b}) out of range for {num_nodes} nodes"
                )));
            }
            set.insert((a.min(b), a.max(b)));
        }
        if features.nrows() != num_nodes {
            return Err(SpcError::InvalidGraph(format!(
                "feature matrix has {} rows, expected {num_nodes}",
                features.nrows()
            )));
        }
        if labels.len() != num_nodes {
            return Err(SpcError::InvalidGraph(format!(
                "{} labels for {num_nodes} nodes",
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(SpcError::InvalidGraph(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(Self {
            num_nodes,
            edges: set.into_iter().collect(),
            features,
            labels,
            num_classes,
        })
    }

    /// Graph structure only: zero-width features, every node labelled 0.
    pub fn from_edges(num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::new(num_nodes, edges, Array2::zeros((num_nodes, 0)), vec![0; num_nodes], 1)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Sorted `(i, j)` pairs with `i < j`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// Same nodes, features and labels with a different edge set.
    pub fn with_edges(&self, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::new(
            self.num_nodes,
            edges,
            self.features.clone(),
            self.labels.clone(),
            self.num_classes,
        )
    }

    /// Scales every feature row to unit L1 norm. All-zero rows are left alone.
    pub fn row_normalize_features(&mut self) {
        for mut row in self.features.rows_mut() {
            let s: f64 = row.iter().map(|v| v.abs()).sum();
            if s > 0.0 {
                row.mapv_inplace(|v| v / s);
            }
        }
    }
}

/// Symmetric sparse matrix in compressed row storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    dim: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and each row's
    /// columns are sorted. The caller supplies both triangles.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
        for &(i, j, v) in triplets {
            if i >= dim || j >= dim {
                return Err(SpcError::DimensionMismatch(format!(
                    "entry ({i}, {j}) outside {dim}x{dim}"
                )));
            }
            rows[i].push((j, v));
        }
        let mut row_offsets = Vec::with_capacity(dim + 1);
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_offsets.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            let mut iter = row.into_iter().peekable();
            while let Some((j, mut v)) = iter.next() {
                while let Some(&(j2, v2)) = iter.peek() {
                    if j2 != j {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                col_indices.push(j);
                values.push(v);
            }
            row_offsets.push(col_indices.len());
        }
        let m = Self {
            dim,
            row_offsets,
            col_indices,
            values,
        };
        if !m.is_symmetric(1e-12) {
            return Err(SpcError::InvalidGraph("triplets are not symmetric".into()));
        }
        Ok(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            row_offsets: (0..=dim).collect(),
            col_indices: (0..dim).collect(),
            values: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `i` in ascending column order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[span.clone()].binary_search(&j) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.dim).all(|i| self.row(i).all(|(j, v)| (self.get(j, i) - v).abs() <= tol))
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.dim, self.dim));
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                out[[i, j]] = v;
            }
        }
        out
    }

    /// `a·self + b·other` over the union of both sparsity patterns.
    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(SpcError::DimensionMismatch(format!(
                "{} vs {}",
                self.dim, other.dim
            )));
        }
        let mut triplets = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.dim {
            triplets.extend(self.row(i).map(|(j, v)| (i, j, a * v)));
            triplets.extend(other.row(i).map(|(j, v)| (i, j, b * v)));
        }
        Self::from_triplets(self.dim, &triplets)
    }

    pub fn matvec(&self, x: &Array1<f64>) -> Array1<f64> {
        assert_eq!(x.len(), self.dim, "matvec dimension mismatch");
        Array1::from_iter((0..self.dim).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum::<f64>()))
    }
}

fn normalized_adjacency_triplets(g: &Graph) -> Vec<(usize, usize, f64)> {
    let scale: Vec<f64> = g
        .degrees()
        .into_iter()
        .map(|d| 1.0 / ((d + 1) as f64).sqrt())
        .collect();
    let mut triplets = Vec::with_capacity(2 * g.num_edges() + g.num_nodes());
    for i in 0..g.num_nodes() {
        triplets.push((i, i, scale[i] * scale[i]));
    }
    for &(a, b) in g.edges() {
        let v = scale[a] * scale[b];
        triplets.push((a, b, v));
        triplets.push((b, a, v));
    }
    triplets
}

/// `Ã = (D+I)^{-1/2}(A+I)(D+I)^{-1/2}`; isolated nodes get diagonal 1.
pub fn build_normalized_adjacency(g: &Graph) -> SparseSymMatrix {
    SparseSymMatrix::from_triplets(g.num_nodes(), &normalized_adjacency_triplets(g))
        .expect("normalized adjacency is symmetric by construction")
}

/// `L̃ = I − Ã`. Spectrum lies in `[0, 2]`.
pub fn build_normalized_laplacian(g: &Graph) -> SparseSymMatrix {
    let triplets: Vec<_> = normalized_adjacency_triplets(g)
        .into_iter()
        .map(|(i, j, v)| if i == j { (i, j, 1.0 - v) } else { (i, j, -v) })
        .collect();
    SparseSymMatrix::from_triplets(g.num_nodes(), &triplets)
        .expect("normalized Laplacian is symmetric by construction")
}

/// Fraction of edges whose endpoints share a label.
pub fn edge_homophily(g: &Graph) -> Result<f64> {
    if g.num_edges() == 0 {
        return Err(SpcError::NoEdges);
    }
    let labels = g.labels();
    let same = g.edges().iter().filter(|&&(a, b)| labels[a] == labels[b]).count();
    Ok(same as f64 / g.num_edges() as f64)
}

/// Sparse times dense block. Each output entry accumulates in ascending column order.
pub fn spmm(m: &SparseSymMatrix, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if b.nrows() != m.dim() {
        return Err(SpcError::DimensionMismatch(format!(
            "sparse {}x{} times dense {}x{}",
            m.dim(),
            m.dim(),
            b.nrows(),
            b.ncols()
        )));
    }
    let cols = b.ncols();
    let b = b.as_standard_layout();
    let src = b.as_slice().expect("standard layout");
    let mut out = vec![0.0; m.dim() * cols];
    for (i, out_row) in out.chunks_exact_mut(cols.max(1)).enumerate().take(m.dim()) {
        for (j, v) in m.row(i) {
            for (o, x) in out_row.iter_mut().zip(&src[j * cols..(j + 1) * cols]) {
                *o += v * x;
            }
        }
    }
    Ok(Array2::from_shape_vec((m.dim(), cols), out).expect("shape matches buffer"))
}
