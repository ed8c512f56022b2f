use super::cholesky;
use super::linalg::hermitian_eig;
use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

const HERMITIAN_ABS_TOL: f64 = 1e-12;
const EIGEN_FLOOR: f64 = -1e-10;
const TRACE_TOL: f64 = 1e-12;

/// A one- or two-qubit density matrix: Hermitian, PSD and unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let dim = m.rows();
        if !m.is_square() || !(dim == 2 || dim == 4) {
            return Err(Error::InvalidDimension(format!(
                "density matrix must be 2x2 or 4x4, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let herr = m.hermiticity_error();
        if herr > HERMITIAN_ABS_TOL * m.frobenius_norm().max(1.0) {
            return Err(Error::NotHermitian(herr));
        }
        let m = m.hermitian_part();
        let tr = m.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let min_eig = hermitian_eig(&m)?.min_value();
        if min_eig < EIGEN_FLOOR {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self { matrix: m })
    }

    /// Normalises a PSD matrix to unit trace before validating it.
    pub fn from_psd(m: &ComplexMatrix) -> Result<Self> {
        let tr = m.trace().re;
        if !(tr > 0.0) {
            return Err(Error::InvalidState(format!("non-positive trace {tr}")));
        }
        Self::new(m.hermitian_part().scale_real(1.0 / tr))
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalised) ket.
    pub fn pure(ket: &[C64]) -> Result<Self> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        if !(norm > 0.0) {
            return Err(Error::InvalidState("zero ket".into()));
        }
        Self::new(ComplexMatrix::projector(ket).scale_real(1.0 / norm))
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::new(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// ⟨ψ|ρ|ψ⟩
    pub fn expectation(&self, ket: &[C64]) -> f64 {
        let rho_psi = self.matrix.apply(ket);
        ket.iter()
            .zip(&rho_psi)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .re
    }

    /// Tr(ρ O)
    pub fn expectation_op(&self, op: &ComplexMatrix) -> C64 {
        self.matrix.trace_product(op)
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        Self::new(super::matrix::tensor_product(&self.matrix, &other.matrix))
    }

    /// Half the trace norm of the difference.
    pub fn trace_distance(&self, other: &ComplexMatrix) -> Result<f64> {
        let diff = &self.matrix - other;
        let eig = hermitian_eig(&diff.hermitian_part())?;
        Ok(0.5 * eig.values.iter().map(|l| l.abs()).sum::<f64>())
    }
}

/// `T†T / Tr(T†T)` for packed lower-triangular parameters.
pub fn state_from_cholesky_params(t: &[f64], dim: usize) -> Result<DensityMatrix> {
    if !(dim == 2 || dim == 4) {
        return Err(Error::InvalidDimension(format!("state dimension {dim}")));
    }
    if t.len() != dim * dim {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            found: t.len(),
        });
    }
    DensityMatrix::new(cholesky::unit_trace_from_params(t, dim)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::matrix::{r, ONE, ZERO};
    use proptest::prelude::*;

    #[test]
    fn unit_diagonal_parameter_gives_ground_state() {
        let rho = state_from_cholesky_params(&[1.0, 0.0, 0.0, 0.0], 2).unwrap();
        assert!(
            rho.matrix()
                .max_abs_diff(&ComplexMatrix::projector(&[ONE, ZERO]))
                < 1e-15
        );
    }

    #[test]
    fn equal_diagonal_gives_maximally_mixed() {
        let mut t = vec![0.0; 16];
        t[..4].copy_from_slice(&[0.3; 4]);
        let rho = state_from_cholesky_params(&t, 4).unwrap();
        assert!(
            rho.matrix()
                .max_abs_diff(&ComplexMatrix::identity(4).scale(r(0.25)))
                < 1e-15
        );
    }

    #[test]
    fn zero_parameters_rejected() {
        assert!(matches!(
            state_from_cholesky_params(&[0.0; 4], 2),
            Err(Error::ZeroParameter(_))
        ));
        assert!(state_from_cholesky_params(&[1.0; 3], 2).is_err());
        assert!(state_from_cholesky_params(&[1.0; 9], 3).is_err());
    }

    #[test]
    fn validation_errors() {
        assert!(DensityMatrix::new(ComplexMatrix::from_real_diag(&[0.6, 0.6])).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::from_real_diag(&[1.2, -0.2])).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::identity(3).scale_real(1.0 / 3.0)).is_err());
        let skew = ComplexMatrix::from_rows(&[vec![r(0.5), r(0.1)], vec![r(-0.1), r(0.5)]]);
        assert!(matches!(
            DensityMatrix::new(skew),
            Err(Error::NotHermitian(_))
        ));
    }

    proptest! {
        #[test]
        fn cholesky_output_is_always_physical(
            t in proptest::collection::vec(-1e3f64..1e3, 16)
                .prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3))
        ) {
            let rho = state_from_cholesky_params(&t, 4).unwrap();
            prop_assert!((rho.matrix().trace().re - 1.0).abs() <= 1e-12);
            prop_assert!(rho.matrix().hermiticity_error() <= 1e-12);
            prop_assert!(hermitian_eig(rho.matrix()).unwrap().min_value() >= -1e-10);
        }
    }
}
