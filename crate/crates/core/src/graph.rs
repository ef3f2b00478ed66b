//! Undirected simple graphs and the adjacency/degree/Laplacian
//! constructions everything else is built on.
//!
//! Self-loops are never stored in the edge set: Â = A + I is applied
//! analytically by the `with_self_loops` flag, so there is exactly one
//! canonical `Graph` value per dataset.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense matrices get expensive fast; refuse graphs beyond this many nodes
/// unless the caller raises the cap explicitly.
pub const DEFAULT_NODE_CAP: usize = 4096;

/// Undirected simple graph with optional node features and labels.
///
/// Edges are stored canonically as `(i, j)` with `i < j`, sorted, with no
/// duplicates and no self-loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    features: Option<Array2<f64>>,
    labels: Option<Vec<usize>>,
}

/// Per-node degrees, with or without the self-loop convention.
///
/// With self-loops, `d_i = Σ_j A_ij + 1 ≥ 1`, so normalizations
/// involving `d_i` never divide by zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeVector {
    pub values: Array1<f64>,
    pub with_self_loops: bool,
}

impl Graph {
    /// Build a graph with the default node cap.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        Self::with_cap(n, edges, DEFAULT_NODE_CAP)
    }

    /// Build a graph with an explicit node cap.
    pub fn with_cap(n: usize, edges: Vec<(usize, usize)>, cap: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        if n > cap {
            return Err(Error::NodeCapExceeded { n, cap });
        }
        let mut canonical = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            if a >= n || b >= n {
                return Err(Error::EdgeOutOfRange { i: a, j: b, n });
            }
            canonical.push((a.min(b), a.max(b)));
        }
        canonical.sort_unstable();
        for w in canonical.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateEdge {
                    i: w[0].0,
                    j: w[0].1,
                });
            }
        }
        Ok(Graph {
            n,
            edges: canonical,
            features: None,
            labels: None,
        })
    }

    pub fn with_features(mut self, features: Array2<f64>) -> Result<Self> {
        if features.nrows() != self.n {
            return Err(Error::FeatureRowMismatch {
                rows: features.nrows(),
                n: self.n,
            });
        }
        self.features = Some(features);
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::LabelLengthMismatch {
                len: labels.len(),
                n: self.n,
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features(&self) -> Option<&Array2<f64>> {
        self.features.as_ref()
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Number of classes (max label + 1), if labels are present.
    pub fn num_classes(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|labels| labels.iter().max().map_or(0, |m| m + 1))
    }

    /// Symmetric 0/1 adjacency matrix; the flag adds the analytic
    /// self-loops (Â = A + I).
    pub fn adjacency(&self, with_self_loops: bool) -> Array2<f64> {
        let mut a = Array2::zeros((self.n, self.n));
        for &(i, j) in &self.edges {
            a[[i, j]] = 1.0;
            a[[j, i]] = 1.0;
        }
        if with_self_loops {
            for i in 0..self.n {
                a[[i, i]] = 1.0;
            }
        }
        a
    }

    /// Row sums of the chosen adjacency.
    pub fn degrees(&self, with_self_loops: bool) -> DegreeVector {
        let mut values = Array1::zeros(self.n);
        for &(i, j) in &self.edges {
            values[i] += 1.0;
            values[j] += 1.0;
        }
        if with_self_loops {
            values += 1.0;
        }
        DegreeVector {
            values,
            with_self_loops,
        }
    }

    /// Self-loop-normalized adjacency L̂ = D̂^(−1/2) Â D̂^(−1/2), with
    /// entries Â_ij / √(d_i d_j) and diagonal 1/d_i.
    ///
    /// Total on any graph: with self-loops every d_i ≥ 1.
    pub fn laplacian_hat(&self) -> Array2<f64> {
        let d = self.degrees(true).values;
        let inv_sqrt = d.mapv(|x| 1.0 / x.sqrt());
        let mut l = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            l[[i, i]] = 1.0 / d[i];
        }
        for &(i, j) in &self.edges {
            let v = inv_sqrt[i] * inv_sqrt[j];
            l[[i, j]] = v;
            l[[j, i]] = v;
        }
        l
    }

    /// Symmetric-normalized Laplacian L = I − D^(−1/2) A D^(−1/2),
    /// without self-loops. Errors on isolated nodes, where the
    /// normalization is undefined.
    pub fn laplacian_sym(&self) -> Result<Array2<f64>> {
        Ok(Array2::eye(self.n) - self.laplacian_tilde_negated()?)
    }

    /// L̃ = L − I = −D^(−1/2) A D^(−1/2).
    pub fn laplacian_tilde(&self) -> Result<Array2<f64>> {
        Ok(-self.laplacian_tilde_negated()?)
    }

    fn laplacian_tilde_negated(&self) -> Result<Array2<f64>> {
        let d = self.degrees(false).values;
        if let Some(idx) = d.iter().position(|&x| x <= 0.0) {
            return Err(Error::IsolatedNode(idx));
        }
        let inv_sqrt = d.mapv(|x| 1.0 / x.sqrt());
        let mut m = Array2::zeros((self.n, self.n));
        for &(i, j) in &self.edges {
            let v = inv_sqrt[i] * inv_sqrt[j];
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
        Ok(m)
    }

    /// Connected components as disjoint node sets covering [0, n),
    /// ordered by smallest member; nodes within a component ascending.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut neighbors = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        let mut component = vec![usize::MAX; self.n];
        let mut count = 0;
        for start in 0..self.n {
            if component[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            component[start] = count;
            while let Some(v) = stack.pop() {
                for &w in &neighbors[v] {
                    if component[w] == usize::MAX {
                        component[w] = count;
                        stack.push(w);
                    }
                }
            }
            count += 1;
        }
        let mut out = vec![Vec::new(); count];
        for (node, &c) in component.iter().enumerate() {
            out[c].push(node);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components().len() == 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::max_abs_diff;
    use ndarray::array;

    fn triangle() -> Graph {
        Graph::new(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn adjacency_examples() {
        let single = Graph::new(1, vec![]).unwrap();
        assert_eq!(single.adjacency(true), array![[1.0]]);

        let path = Graph::new(2, vec![(0, 1)]).unwrap();
        assert_eq!(path.adjacency(false), array![[0.0, 1.0], [1.0, 0.0]]);

        assert_eq!(triangle().adjacency(true), Array2::from_elem((3, 3), 1.0));
    }

    #[test]
    fn degree_examples() {
        let single = Graph::new(1, vec![]).unwrap();
        assert_eq!(single.degrees(true).values, array![1.0]);

        let star = Graph::new(3, vec![(0, 1), (0, 2)]).unwrap();
        assert_eq!(star.degrees(true).values, array![3.0, 2.0, 2.0]);

        assert_eq!(triangle().degrees(false).values, array![2.0, 2.0, 2.0]);
    }

    #[test]
    fn laplacian_hat_examples() {
        let single = Graph::new(1, vec![]).unwrap();
        assert_eq!(single.laplacian_hat(), array![[1.0]]);

        // 2-node path: d = (2, 2), off-diagonal 1/√4, diagonal 1/2.
        let path = Graph::new(2, vec![(0, 1)]).unwrap();
        assert!(max_abs_diff(&path.laplacian_hat(), &array![[0.5, 0.5], [0.5, 0.5]]) < 1e-15);

        // Complete graph: L̂ = (1/n) everywhere.
        for n in [3usize, 5] {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    edges.push((i, j));
                }
            }
            let g = Graph::new(n, edges).unwrap();
            let expected = Array2::from_elem((n, n), 1.0 / n as f64);
            assert!(max_abs_diff(&g.laplacian_hat(), &expected) < 1e-15);
        }
    }

    #[test]
    fn laplacian_hat_diagonal_is_inverse_degree() {
        let star = Graph::new(4, vec![(0, 1), (0, 2), (0, 3)]).unwrap();
        let l = star.laplacian_hat();
        let d = star.degrees(true).values;
        for i in 0..4 {
            assert!((l[[i, i]] - 1.0 / d[i]).abs() < 1e-15);
            for j in 0..4 {
                assert!(l[[i, j]] >= 0.0);
                assert!((l[[i, j]] - l[[j, i]]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn laplacian_hat_fixed_eigenvector_sqrt_degree() {
        let g = Graph::new(5, vec![(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)]).unwrap();
        let l = g.laplacian_hat();
        let u = g.degrees(true).values.mapv(f64::sqrt);
        let lu = l.dot(&u);
        let worst = lu
            .iter()
            .zip(u.iter())
            .fold(0.0f64, |acc, (&a, &b)| acc.max((a - b).abs()));
        assert!(worst <= 1e-12, "residual {worst:e}");
    }

    #[test]
    fn laplacian_sym_examples() {
        let path = Graph::new(2, vec![(0, 1)]).unwrap();
        assert!(max_abs_diff(&path.laplacian_sym().unwrap(), &array![[1.0, -1.0], [-1.0, 1.0]]) < 1e-15);

        let l = triangle().laplacian_sym().unwrap();
        for i in 0..3 {
            assert!((l[[i, i]] - 1.0).abs() < 1e-15);
            for j in 0..3 {
                if i != j {
                    assert!((l[[i, j]] + 0.5).abs() < 1e-15);
                }
            }
        }

        let with_isolated = Graph::new(3, vec![(0, 1)]).unwrap();
        match with_isolated.laplacian_sym() {
            Err(Error::IsolatedNode(2)) => {}
            other => panic!("expected IsolatedNode(2), got {other:?}"),
        }
    }

    #[test]
    fn laplacian_tilde_is_sym_minus_identity() {
        let g = triangle();
        let expected = g.laplacian_sym().unwrap() - Array2::<f64>::eye(3);
        assert!(max_abs_diff(&g.laplacian_tilde().unwrap(), &expected) < 1e-15);
    }

    #[test]
    fn component_examples() {
        assert_eq!(triangle().connected_components(), vec![vec![0, 1, 2]]);

        let two_edges = Graph::new(4, vec![(0, 1), (2, 3)]).unwrap();
        assert_eq!(two_edges.connected_components(), vec![vec![0, 1], vec![2, 3]]);

        let isolated = Graph::new(3, vec![]).unwrap();
        assert_eq!(
            isolated.connected_components(),
            vec![vec![0], vec![1], vec![2]]
        );
    }

    #[test]
    fn construction_rejects_bad_edges() {
        assert!(matches!(Graph::new(0, vec![]), Err(Error::EmptyGraph)));
        assert!(matches!(
            Graph::new(2, vec![(0, 0)]),
            Err(Error::SelfLoop(0))
        ));
        assert!(matches!(
            Graph::new(2, vec![(0, 2)]),
            Err(Error::EdgeOutOfRange { .. })
        ));
        assert!(matches!(
            Graph::new(3, vec![(0, 1), (1, 0)]),
            Err(Error::DuplicateEdge { i: 0, j: 1 })
        ));
        assert!(matches!(
            Graph::with_cap(10, vec![], 4),
            Err(Error::NodeCapExceeded { n: 10, cap: 4 })
        ));
    }

    #[test]
    fn feature_and_label_validation() {
        let g = Graph::new(2, vec![(0, 1)]).unwrap();
        assert!(matches!(
            g.clone().with_features(Array2::zeros((3, 2))),
            Err(Error::FeatureRowMismatch { rows: 3, n: 2 })
        ));
        assert!(matches!(
            g.clone().with_labels(vec![0]),
            Err(Error::LabelLengthMismatch { len: 1, n: 2 })
        ));
        let g = g
            .with_features(Array2::zeros((2, 4)))
            .unwrap()
            .with_labels(vec![0, 1])
            .unwrap();
        assert_eq!(g.num_classes(), Some(2));
    }
}
