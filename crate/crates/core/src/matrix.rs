use serde::{Deserialize, Serialize};

/// Dense square matrix in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        DenseMatrix { n, data }
    }

    /// Builds a matrix from row-major values; `None` if the length is not a square.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == n * n).then_some(DenseMatrix { n, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Principal submatrix on `indices`, in the given order.
    pub fn submatrix(&self, indices: &[usize]) -> Self {
        DenseMatrix::from_fn(indices.len(), |a, b| self.get(indices[a], indices[b]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_submatrix() {
        let m = DenseMatrix::from_fn(3, |i, j| (10 * i + j) as f64);
        assert_eq!(m.row(1), &[10.0, 11.0, 12.0]);
        let s = m.submatrix(&[2, 0]);
        assert_eq!(s.as_slice(), &[22.0, 20.0, 2.0, 0.0]);
        assert!(DenseMatrix::from_row_major(2, vec![0.0; 3]).is_none());
    }
}
