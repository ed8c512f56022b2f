//! Pauli product operator basis with lexicographic ordering (II, IX, IY, IZ, XI, …, ZZ).
//!
//! Every Pauli product is a monomial matrix: row `r` has a single nonzero
//! entry `phase[r]` at column `perm[r]`. The superoperator and χ-matrix
//! conversions lean on that structure to stay O(d) per operator pair.

use super::matrix::{c, ComplexMatrix, C64, ONE};
use crate::error::{Error, Result};

const SINGLE_LABELS: [char; 4] = ['I', 'X', 'Y', 'Z'];

#[derive(Clone, Debug, PartialEq)]
pub struct PauliOp {
    pub label: String,
    pub perm: Vec<usize>,
    pub phase: Vec<C64>,
}

impl PauliOp {
    fn single(which: usize) -> Self {
        let (perm, phase) = match which {
            0 => (vec![0, 1], vec![ONE, ONE]),
            1 => (vec![1, 0], vec![ONE, ONE]),
            2 => (vec![1, 0], vec![c(0.0, -1.0), c(0.0, 1.0)]),
            3 => (vec![0, 1], vec![ONE, c(-1.0, 0.0)]),
            _ => unreachable!(),
        };
        Self {
            label: SINGLE_LABELS[which].to_string(),
            perm,
            phase,
        }
    }

    fn kron(&self, other: &Self) -> Self {
        let d2 = other.perm.len();
        let n = self.perm.len() * d2;
        let mut perm = Vec::with_capacity(n);
        let mut phase = Vec::with_capacity(n);
        for r1 in 0..self.perm.len() {
            for r2 in 0..d2 {
                perm.push(self.perm[r1] * d2 + other.perm[r2]);
                phase.push(self.phase[r1] * other.phase[r2]);
            }
        }
        Self {
            label: format!("{}{}", self.label, other.label),
            perm,
            phase,
        }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let d = self.dim();
        let mut m = ComplexMatrix::zeros(d, d);
        for (row, (&col, &ph)) in self.perm.iter().zip(&self.phase).enumerate() {
            m[(row, col)] = ph;
        }
        m
    }

    /// P · M
    pub fn left_mul(&self, m: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::from_fn(m.rows(), m.cols(), |i, j| {
            self.phase[i] * m[(self.perm[i], j)]
        })
    }

    /// M · P†
    pub fn right_mul_adjoint(&self, m: &ComplexMatrix) -> ComplexMatrix {
        // (M P†)_{ij} = Σ_k M_ik conj(P_jk) = M_{i,perm[j]} conj(phase[j])
        ComplexMatrix::from_fn(m.rows(), m.cols(), |i, j| {
            m[(i, self.perm[j])] * self.phase[j].conj()
        })
    }
}

/// The 4ⁿ Pauli products on `n_qubits` qubits.
#[derive(Clone, Debug)]
pub struct PauliBasis {
    n_qubits: usize,
    ops: Vec<PauliOp>,
    operators: Vec<ComplexMatrix>,
}

impl PauliBasis {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if !(1..=2).contains(&n_qubits) {
            return Err(Error::InvalidDimension(format!(
                "Pauli basis supports 1 or 2 qubits, got {n_qubits}"
            )));
        }
        let mut ops: Vec<PauliOp> = (0..4).map(PauliOp::single).collect();
        for _ in 1..n_qubits {
            ops = ops
                .iter()
                .flat_map(|a| (0..4).map(move |b| a.kron(&PauliOp::single(b))))
                .collect();
        }
        let operators = ops.iter().map(PauliOp::to_matrix).collect();
        Ok(Self {
            n_qubits,
            ops,
            operators,
        })
    }

    /// Basis for a Hilbert space of dimension `dim` (2 or 4).
    pub fn for_dim(dim: usize) -> Result<Self> {
        match dim {
            2 => Self::new(1),
            4 => Self::new(2),
            _ => Err(Error::InvalidDimension(format!("Hilbert dimension {dim}"))),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Hilbert-space dimension d = 2ⁿ.
    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn ops(&self) -> &[PauliOp] {
        &self.ops
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn labels(&self) -> Vec<String> {
        self.ops.iter().map(|op| op.label.clone()).collect()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.ops.iter().position(|op| op.label == label)
    }

    /// Expansion coefficients `c_m` with `M = Σ c_m A_m`, i.e. `c_m = Tr(A_m† M) / d`.
    pub fn decompose(&self, m: &ComplexMatrix) -> Vec<C64> {
        let d = self.dim() as f64;
        self.ops
            .iter()
            .map(|op| {
                // Tr(P† M) = Σ_k conj(phase[k]) M[k, perm[k]]
                let mut acc = C64::new(0.0, 0.0);
                for (row, (&col, &ph)) in op.perm.iter().zip(&op.phase).enumerate() {
                    acc += ph.conj() * m[(row, col)];
                }
                acc / d
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::matrix::tensor_product;

    #[test]
    fn labels_are_lexicographic() {
        let b = PauliBasis::new(2).unwrap();
        let labels = b.labels();
        assert_eq!(labels.len(), 16);
        assert_eq!(&labels[..5], &["II", "IX", "IY", "IZ", "XI"]);
        assert_eq!(labels[15], "ZZ");
    }

    #[test]
    fn hilbert_schmidt_orthogonality() {
        for n in 1..=2 {
            let b = PauliBasis::new(n).unwrap();
            let d = b.dim() as f64;
            for (m, am) in b.operators().iter().enumerate() {
                assert!(am.is_hermitian(1e-15));
                let sq = am.matmul(am);
                assert!(sq.max_abs_diff(&ComplexMatrix::identity(b.dim())) < 1e-15);
                for (k, ak) in b.operators().iter().enumerate() {
                    let ip = am.adjoint().trace_product(ak);
                    let expected = if m == k { d } else { 0.0 };
                    assert!((ip - c(expected, 0.0)).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn matches_dense_kron() {
        let one = PauliBasis::new(1).unwrap();
        let two = PauliBasis::new(2).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let dense = tensor_product(&one.operators()[a], &one.operators()[b]);
                assert_eq!(dense, two.operators()[4 * a + b]);
            }
        }
    }

    #[test]
    fn sparse_products_match_dense() {
        let b = PauliBasis::new(2).unwrap();
        let m = ComplexMatrix::from_fn(4, 4, |i, j| c(i as f64 - j as f64, (i * j) as f64));
        for op in b.ops() {
            let p = op.to_matrix();
            assert!(op.left_mul(&m).max_abs_diff(&p.matmul(&m)) < 1e-14);
            assert!(
                op.right_mul_adjoint(&m)
                    .max_abs_diff(&m.matmul(&p.adjoint()))
                    < 1e-14
            );
        }
    }

    #[test]
    fn decompose_reconstructs() {
        let b = PauliBasis::new(2).unwrap();
        let m = ComplexMatrix::from_fn(4, 4, |i, j| c((i + 2 * j) as f64, i as f64 - 1.0));
        let coeffs = b.decompose(&m);
        let mut rebuilt = ComplexMatrix::zeros(4, 4);
        for (cm, op) in coeffs.iter().zip(b.operators()) {
            rebuilt = &rebuilt + &op.scale(*cm);
        }
        assert!(rebuilt.max_abs_diff(&m) < 1e-13);
    }

    #[test]
    fn rejects_three_qubits() {
        assert!(PauliBasis::new(3).is_err());
        assert!(PauliBasis::for_dim(8).is_err());
    }
}
