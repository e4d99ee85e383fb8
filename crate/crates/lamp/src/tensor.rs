//! Dense 2-D tensors and the plain (tape-free) math shared by training and inference.
//!
//! Everything is row-major `f64`. Graphs at this scale are small, so sparsity
//! enters through edge lists ([`scatter_sum`]) rather than sparse matrices.

use thiserror::Error;

/// Norm guard added to each row norm in [`cosine_sim_matrix`]; zero rows get similarity 0.
pub const COSINE_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum TensorError {
    #[error("{op}: shape mismatch between {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("expected a scalar (1x1) tensor, got {0:?}")]
    NotScalar((usize, usize)),
    #[error("{op}: index {index} out of range for size {size}")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        size: usize,
    },
}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "tensor data length mismatch");
        Tensor { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Tensor { rows: r, cols: c, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Tensor::zeros(n, n);
        for i in 0..n {
            t.set(i, i, 1.0);
        }
        t
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn matmul(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        if self.cols != other.rows {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                lhs: self.shape(),
                rhs: other.shape(),
            });
        }
        let mut out = Tensor::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let out_row = out.row_mut(i);
                for (o, &b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Tensor {
        let mut out = Tensor::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    fn zip(&self, other: &Tensor, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor, TensorError> {
        if self.shape() != other.shape() {
            return Err(TensorError::ShapeMismatch {
                op,
                lhs: self.shape(),
                rhs: other.shape(),
            });
        }
        Ok(Tensor {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        self.zip(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        self.zip(other, "sub", |a, b| a - b)
    }

    pub fn mul_elem(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        self.zip(other, "mul_elem", |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Tensor {
        self.map(|v| v * c)
    }

    /// Adds a 1×cols bias row to every row.
    pub fn add_bias(&self, bias: &Tensor) -> Result<Tensor, TensorError> {
        if bias.rows != 1 || bias.cols != self.cols {
            return Err(TensorError::ShapeMismatch {
                op: "add_bias",
                lhs: self.shape(),
                rhs: bias.shape(),
            });
        }
        let mut out = self.clone();
        for i in 0..out.rows {
            for (o, &b) in out.row_mut(i).iter_mut().zip(&bias.data) {
                *o += b;
            }
        }
        Ok(out)
    }

    pub fn relu(&self) -> Tensor {
        self.map(|v| if v > 0.0 { v } else { 0.0 })
    }

    pub fn exp(&self) -> Tensor {
        self.map(f64::exp)
    }

    pub fn ln(&self) -> Tensor {
        self.map(f64::ln)
    }

    /// Per-row sums as an n×1 column.
    pub fn row_sums(&self) -> Tensor {
        let mut out = Tensor::zeros(self.rows, 1);
        for i in 0..self.rows {
            out.set(i, 0, self.row(i).iter().sum());
        }
        out
    }

    /// Per-column sums as a 1×cols row.
    pub fn col_sums(&self) -> Tensor {
        let mut out = Tensor::zeros(1, self.cols);
        for i in 0..self.rows {
            for (o, &v) in out.data.iter_mut().zip(self.row(i)) {
                *o += v;
            }
        }
        out
    }

    /// Main diagonal of a square matrix as an n×1 column.
    pub fn diag(&self) -> Result<Tensor, TensorError> {
        if self.rows != self.cols {
            return Err(TensorError::ShapeMismatch {
                op: "diag",
                lhs: self.shape(),
                rhs: self.shape(),
            });
        }
        let mut out = Tensor::zeros(self.rows, 1);
        for i in 0..self.rows {
            out.set(i, 0, self.get(i, i));
        }
        Ok(out)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            0.0
        } else {
            self.sum() / self.data.len() as f64
        }
    }

    pub fn scalar(&self) -> Result<f64, TensorError> {
        if self.shape() != (1, 1) {
            return Err(TensorError::NotScalar(self.shape()));
        }
        Ok(self.data[0])
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        self.row(i).iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Neighbor-sum message passing: row v of the output is the sum of `x`'s rows
/// over v's neighbors, both directions of each undirected edge contributing.
pub fn scatter_sum(x: &Tensor, edges: &[(usize, usize)]) -> Result<Tensor, TensorError> {
    let n = x.rows();
    let mut out = Tensor::zeros(n, x.cols());
    for &(u, v) in edges {
        let hi = u.max(v);
        if hi >= n {
            return Err(TensorError::IndexOutOfRange {
                op: "scatter_sum",
                index: hi,
                size: n,
            });
        }
        for j in 0..x.cols() {
            out.set(v, j, out.get(v, j) + x.get(u, j));
            out.set(u, j, out.get(u, j) + x.get(v, j));
        }
    }
    Ok(out)
}

fn check_segment_ids(ids: &[usize], rows: usize, segments: usize) -> Result<(), TensorError> {
    if ids.len() != rows {
        return Err(TensorError::IndexOutOfRange {
            op: "segment_ids",
            index: ids.len(),
            size: rows,
        });
    }
    if let Some(&bad) = ids.iter().find(|&&g| g >= segments) {
        return Err(TensorError::IndexOutOfRange {
            op: "segment_ids",
            index: bad,
            size: segments,
        });
    }
    Ok(())
}

/// Sums rows that share a segment id into one output row per segment.
pub fn segment_sum(x: &Tensor, ids: &[usize], segments: usize) -> Result<Tensor, TensorError> {
    check_segment_ids(ids, x.rows(), segments)?;
    let mut out = Tensor::zeros(segments, x.cols());
    for (i, &g) in ids.iter().enumerate() {
        for (o, &v) in out.row_mut(g).iter_mut().zip(x.row(i)) {
            *o += v;
        }
    }
    Ok(out)
}

/// Per-segment means; empty segments stay zero.
pub fn segment_mean(x: &Tensor, ids: &[usize], segments: usize) -> Result<Tensor, TensorError> {
    let mut out = segment_sum(x, ids, segments)?;
    let counts = segment_counts(ids, segments);
    for (g, &c) in counts.iter().enumerate() {
        if c > 0 {
            let inv = 1.0 / c as f64;
            for v in out.row_mut(g) {
                *v *= inv;
            }
        }
    }
    Ok(out)
}

pub fn segment_counts(ids: &[usize], segments: usize) -> Vec<usize> {
    let mut counts = vec![0usize; segments];
    for &g in ids {
        counts[g] += 1;
    }
    counts
}

/// Row gather: output row k is `x`'s row `idx[k]`.
pub fn gather_rows(x: &Tensor, idx: &[usize]) -> Result<Tensor, TensorError> {
    let mut out = Tensor::zeros(idx.len(), x.cols());
    for (k, &i) in idx.iter().enumerate() {
        if i >= x.rows() {
            return Err(TensorError::IndexOutOfRange {
                op: "gather_rows",
                index: i,
                size: x.rows(),
            });
        }
        out.row_mut(k).copy_from_slice(x.row(i));
    }
    Ok(out)
}

/// Pairwise cosine similarities: entry (i, j) is
/// `a_i · b_j / ((‖a_i‖ + ε)(‖b_j‖ + ε))` with ε = [`COSINE_EPS`].
pub fn cosine_sim_matrix(a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
    if a.cols() != b.cols() {
        return Err(TensorError::ShapeMismatch {
            op: "cosine_sim_matrix",
            lhs: a.shape(),
            rhs: b.shape(),
        });
    }
    let na: Vec<f64> = (0..a.rows()).map(|i| a.row_norm(i) + COSINE_EPS).collect();
    let nb: Vec<f64> = (0..b.rows()).map(|j| b.row_norm(j) + COSINE_EPS).collect();
    let mut out = Tensor::zeros(a.rows(), b.rows());
    for i in 0..a.rows() {
        for j in 0..b.rows() {
            let dot: f64 = a.row(i).iter().zip(b.row(j)).map(|(&x, &y)| x * y).sum();
            out.set(i, j, dot / (na[i] * nb[j]));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn matmul_identity_is_noop() {
        let x = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        let i = Tensor::identity(3);
        assert_eq!(i.matmul(&x).unwrap(), x);
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = Tensor::zeros(2, 3);
        let b = Tensor::zeros(2, 3);
        let err = a.matmul(&b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(2, 3)"), "{msg}");
    }

    #[test]
    fn relu_clamps_negatives() {
        let x = Tensor::from_vec(1, 2, vec![-1.0, 2.0]);
        assert_eq!(x.relu().data(), &[0.0, 2.0]);
    }

    #[test]
    fn add_bias_on_zeros_broadcasts() {
        let x = Tensor::zeros(3, 2);
        let b = Tensor::from_vec(1, 2, vec![0.5, -0.25]);
        let out = x.add_bias(&b).unwrap();
        for i in 0..3 {
            assert_eq!(out.row(i), &[0.5, -0.25]);
        }
    }

    #[test]
    fn scatter_sum_edgeless_is_zero() {
        let x = Tensor::from_rows(&[vec![1.0], vec![2.0]]);
        let out = scatter_sum(&x, &[]).unwrap();
        assert_eq!(out, Tensor::zeros(2, 1));
    }

    #[test]
    fn scatter_sum_k2_swaps_rows() {
        let x = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let out = scatter_sum(&x, &[(0, 1)]).unwrap();
        assert_eq!(out.row(0), &[3.0, 4.0]);
        assert_eq!(out.row(1), &[1.0, 2.0]);
    }

    #[test]
    fn scatter_sum_triangle_sums_other_rows() {
        let x = Tensor::from_rows(&[vec![1.0], vec![10.0], vec![100.0]]);
        let out = scatter_sum(&x, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        assert_eq!(out.row(0), &[110.0]);
        assert_eq!(out.row(1), &[101.0]);
        assert_eq!(out.row(2), &[11.0]);
    }

    #[test]
    fn segment_sum_single_graph_is_column_sums() {
        let x = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let out = segment_sum(&x, &[0, 0], 1).unwrap();
        assert_eq!(out.row(0), &[4.0, 6.0]);
    }

    #[test]
    fn segment_sum_keeps_graphs_apart() {
        let x = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let out = segment_sum(&x, &[0, 1], 2).unwrap();
        assert_eq!(out.row(0), &[1.0, 2.0]);
        assert_eq!(out.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn segment_sum_two_node_then_one_node_graph() {
        let x = Tensor::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![2.0, 2.0]]);
        let out = segment_sum(&x, &[0, 0, 1], 2).unwrap();
        assert_eq!(out.row(0), &[2.0, 2.0]);
        assert_eq!(out.row(1), &[2.0, 2.0]);
    }

    #[test]
    fn segment_mean_averages() {
        let x = Tensor::from_rows(&[vec![2.0], vec![4.0], vec![5.0]]);
        let out = segment_mean(&x, &[0, 0, 1], 2).unwrap();
        assert_eq!(out.row(0), &[3.0]);
        assert_eq!(out.row(1), &[5.0]);
    }

    #[test]
    fn cosine_identical_orthogonal_negated() {
        let a = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let b = Tensor::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]);
        let s = cosine_sim_matrix(&a, &b).unwrap();
        assert_abs_diff_eq!(s.get(0, 0), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.get(1, 0), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.get(0, 1), -1.0, epsilon = 1e-9);
    }

    #[test]
    fn cosine_zero_row_gives_zero_similarity() {
        let a = Tensor::zeros(1, 3);
        let b = Tensor::from_rows(&[vec![1.0, 2.0, 3.0]]);
        let s = cosine_sim_matrix(&a, &b).unwrap();
        assert_eq!(s.get(0, 0), 0.0);
    }

    #[test]
    fn gather_rows_picks_and_errors() {
        let x = Tensor::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]);
        let g = gather_rows(&x, &[2, 0]).unwrap();
        assert_eq!(g.row(0), &[3.0]);
        assert_eq!(g.row(1), &[1.0]);
        assert!(gather_rows(&x, &[3]).is_err());
    }
}
