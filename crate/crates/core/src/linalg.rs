//! Dense/structural matrix representation and the Moore-Penrose pseudo-inverse.
//!
//! Workloads as large as the national school-district table (13,000 parallel
//! counting queries) are identity matrices; representing them structurally
//! keeps every closed-form computation O(k) instead of O(k^2) memory and
//! O(k^3) time.

use nalgebra::DMatrix;

/// Relative singular-value cutoff: values below `RANK_TOLERANCE * s_max`
/// are treated as zero when inverting.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// A real matrix, stored densely or as a structural identity.
#[derive(Debug, Clone, PartialEq)]
pub enum WorkloadMatrix {
    Identity(usize),
    Dense(DMatrix<f64>),
}

impl WorkloadMatrix {
    pub fn nrows(&self) -> usize {
        match self {
            WorkloadMatrix::Identity(n) => *n,
            WorkloadMatrix::Dense(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            WorkloadMatrix::Identity(n) => *n,
            WorkloadMatrix::Dense(m) => m.ncols(),
        }
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        match self {
            WorkloadMatrix::Identity(_) => {
                if row == col {
                    1.0
                } else {
                    0.0
                }
            }
            WorkloadMatrix::Dense(m) => m[(row, col)],
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, WorkloadMatrix::Identity(_))
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.ncols(), "dimension mismatch");
        match self {
            WorkloadMatrix::Identity(_) => v.to_vec(),
            WorkloadMatrix::Dense(m) => (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
                .collect(),
        }
    }

    /// Matrix-matrix product `self * other`.
    pub fn matmul(&self, other: &WorkloadMatrix) -> WorkloadMatrix {
        assert_eq!(self.ncols(), other.nrows(), "dimension mismatch");
        match (self, other) {
            (WorkloadMatrix::Identity(_), _) => other.clone(),
            (_, WorkloadMatrix::Identity(_)) => self.clone(),
            (WorkloadMatrix::Dense(a), WorkloadMatrix::Dense(b)) => {
                WorkloadMatrix::Dense(a * b)
            }
        }
    }

    /// Squared Frobenius norm.
    pub fn frobenius_norm_sq(&self) -> f64 {
        match self {
            WorkloadMatrix::Identity(n) => *n as f64,
            WorkloadMatrix::Dense(m) => m.iter().map(|x| x * x).sum(),
        }
    }

    /// Maximum column l1 norm.
    pub fn max_column_l1(&self) -> f64 {
        match self {
            WorkloadMatrix::Identity(_) => 1.0,
            WorkloadMatrix::Dense(m) => (0..m.ncols())
                .map(|j| (0..m.nrows()).map(|i| m[(i, j)].abs()).sum::<f64>())
                .fold(0.0, f64::max),
        }
    }

    /// Frobenius distance to another matrix of the same shape.
    pub fn frobenius_distance(&self, other: &WorkloadMatrix) -> f64 {
        assert_eq!(self.nrows(), other.nrows());
        assert_eq!(self.ncols(), other.ncols());
        let mut sum = 0.0;
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                let d = self.entry(i, j) - other.entry(i, j);
                sum += d * d;
            }
        }
        sum.sqrt()
    }

    /// Force a dense copy.
    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            WorkloadMatrix::Identity(n) => DMatrix::identity(*n, *n),
            WorkloadMatrix::Dense(m) => m.clone(),
        }
    }

    /// Moore-Penrose pseudo-inverse via singular value decomposition.
    ///
    /// Singular values below [`RANK_TOLERANCE`] times the largest singular
    /// value are treated as zero. An identity stays an identity.
    pub fn pseudo_inverse(&self) -> WorkloadMatrix {
        match self {
            WorkloadMatrix::Identity(n) => WorkloadMatrix::Identity(*n),
            WorkloadMatrix::Dense(m) => {
                let svd = m.clone().svd(true, true);
                let u = svd.u.expect("svd requested u");
                let v_t = svd.v_t.expect("svd requested v_t");
                let s_max = svd
                    .singular_values
                    .iter()
                    .cloned()
                    .fold(0.0_f64, f64::max);
                let cutoff = RANK_TOLERANCE * s_max;
                // pinv = V * S^+ * U^T
                let r = svd.singular_values.len();
                let mut s_inv = DMatrix::zeros(r, r);
                for i in 0..r {
                    let s = svd.singular_values[i];
                    if s > cutoff {
                        s_inv[(i, i)] = 1.0 / s;
                    }
                }
                WorkloadMatrix::Dense(v_t.transpose() * s_inv * u.transpose())
            }
        }
    }

    /// FNV-1a hash of the shape and entry bytes, for fingerprinting fixtures.
    pub fn fnv1a_hash(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut absorb = |bytes: &[u8]| {
            for &b in bytes {
                h ^= u64::from(b);
                h = h.wrapping_mul(PRIME);
            }
        };
        absorb(&(self.nrows() as u64).to_le_bytes());
        absorb(&(self.ncols() as u64).to_le_bytes());
        match self {
            WorkloadMatrix::Identity(_) => absorb(b"identity"),
            WorkloadMatrix::Dense(m) => {
                for i in 0..m.nrows() {
                    for j in 0..m.ncols() {
                        absorb(&m[(i, j)].to_bits().to_le_bytes());
                    }
                }
            }
        }
        h
    }
}
