//! χ-matrix processes over the Pauli basis, `E(ρ) = Σ χ_mn A_m ρ A_n†`.

use crate::error::{Error, Result};
use crate::qcore::linalg::{hermitian_eig, project_to_density, pseudo_inverse};
use crate::qcore::{ComplexMatrix, MatrixJson, PauliBasis, C64};

const TRACE_TOL: f64 = 1e-10;
/// Relative singular-value cutoff used when inverting the input channel.
pub const DECONVOLUTION_RCOND: f64 = 1e-8;
/// Input channels with a superoperator condition number at or above this are rejected.
pub const MAX_CONDITION: f64 = 1e8;

#[derive(Clone, Debug)]
pub struct ProcessMatrix {
    basis: PauliBasis,
    chi: ComplexMatrix,
}

impl ProcessMatrix {
    /// Validates size, Hermiticity and unit trace.
    pub fn new(chi: ComplexMatrix) -> Result<Self> {
        let basis = basis_for_chi(&chi)?;
        let herr = chi.hermiticity_error();
        if herr > 1e-10 * chi.frobenius_norm().max(1.0) {
            return Err(Error::NotHermitian(herr));
        }
        let tr = chi.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("process matrix trace {tr}")));
        }
        Ok(Self {
            basis,
            chi: chi.hermitian_part(),
        })
    }

    /// Hermitian part of `chi` scaled to unit trace.
    pub fn normalized(chi: &ComplexMatrix) -> Result<Self> {
        basis_for_chi(chi)?;
        let h = chi.hermitian_part();
        let tr = h.trace().re;
        if !(tr.abs() > 1e-300) {
            return Err(Error::InvalidState("process matrix has zero trace".into()));
        }
        Self::new(h.scale_real(1.0 / tr))
    }

    /// χ = c c† for `U = Σ c_m A_m`.
    pub fn from_unitary(u: &ComplexMatrix) -> Result<Self> {
        let basis = PauliBasis::for_dim(u.rows())?;
        let coeffs = basis.decompose(u);
        Self::normalized(&ComplexMatrix::outer(&coeffs, &coeffs))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_unitary(&ComplexMatrix::identity(dim))
    }

    /// The ideal controlled-phase process, `U = (II + IZ + ZI − ZZ)/2`.
    pub fn cphase_ideal() -> Self {
        Self::from_unitary(&crate::timebin::ideal_cphase_unitary())
            .expect("ideal gate is a valid process")
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn chi(&self) -> &ComplexMatrix {
        &self.chi
    }

    pub fn basis(&self) -> &PauliBasis {
        &self.basis
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(hermitian_eig(&self.chi)?.min_value())
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson::from_matrix(&self.chi).with_basis(self.basis.labels())
    }

    pub fn from_json(json: &MatrixJson) -> Result<Self> {
        let chi = json.to_matrix()?;
        let p = Self::new(chi)?;
        if let Some(labels) = &json.basis_ordering {
            if *labels != p.basis.labels() {
                return Err(Error::BasisMismatch(format!(
                    "unsupported basis ordering {labels:?}"
                )));
            }
        }
        Ok(p)
    }

    pub fn superoperator(&self) -> ComplexMatrix {
        chi_to_superoperator(self)
    }

    /// E(ρ) via the χ sum.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let ops = self.basis.ops();
        let d = self.dim();
        let mut out = ComplexMatrix::zeros(d, d);
        let left: Vec<ComplexMatrix> = ops.iter().map(|a| a.left_mul(rho)).collect();
        for (m, am_rho) in left.iter().enumerate() {
            for (n, an) in ops.iter().enumerate() {
                let w = self.chi[(m, n)];
                if w == C64::new(0.0, 0.0) {
                    continue;
                }
                out = &out + &an.right_mul_adjoint(am_rho).scale(w);
            }
        }
        out
    }
}

fn basis_for_chi(chi: &ComplexMatrix) -> Result<PauliBasis> {
    match (chi.rows(), chi.cols()) {
        (4, 4) => PauliBasis::new(1),
        (16, 16) => PauliBasis::new(2),
        (r, c) => Err(Error::InvalidDimension(format!(
            "process matrix must be 4x4 or 16x16, got {r}x{c}"
        ))),
    }
}

/// Row-major superoperator: `S vec(ρ) = vec(E(ρ))`, `S = Σ χ_mn A_m ⊗ conj(A_n)`.
pub fn chi_to_superoperator(process: &ProcessMatrix) -> ComplexMatrix {
    raw_superoperator(process.basis(), process.chi())
}

fn raw_superoperator(basis: &PauliBasis, chi: &ComplexMatrix) -> ComplexMatrix {
    let d = basis.dim();
    let ops = basis.ops();
    let mut s = ComplexMatrix::zeros(d * d, d * d);
    for (m, am) in ops.iter().enumerate() {
        for (n, an) in ops.iter().enumerate() {
            let w = chi[(m, n)];
            if w == C64::new(0.0, 0.0) {
                continue;
            }
            // (A_m ⊗ conj A_n)[(i,k),(perm_m i, perm_n k)]
            for i in 0..d {
                let wi = w * am.phase[i];
                for k in 0..d {
                    s[(i * d + k, am.perm[i] * d + an.perm[k])] += wi * an.phase[k].conj();
                }
            }
        }
    }
    s
}

/// Inverse of [`chi_to_superoperator`]: `χ_mn = Tr[(A_m ⊗ conj A_n)† S] / d²`.
/// The result is not renormalised.
pub fn superoperator_to_chi(s: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = match s.rows() {
        4 => 2,
        16 => 4,
        n => {
            return Err(Error::InvalidDimension(format!(
                "superoperator must be 4x4 or 16x16, got {n}x{}",
                s.cols()
            )))
        }
    };
    if !s.is_square() {
        return Err(Error::InvalidDimension(
            "superoperator must be square".into(),
        ));
    }
    let basis = PauliBasis::for_dim(d)?;
    let ops = basis.ops();
    let norm = (d * d) as f64;
    Ok(ComplexMatrix::from_fn(d * d, d * d, |m, n| {
        let (am, an) = (&ops[m], &ops[n]);
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for k in 0..d {
                let entry = s[(i * d + k, am.perm[i] * d + an.perm[k])];
                acc += (am.phase[i] * an.phase[k].conj()).conj() * entry;
            }
        }
        acc / norm
    }))
}

/// `outer ∘ inner`, renormalised to unit trace.
pub fn compose_processes(outer: &ProcessMatrix, inner: &ProcessMatrix) -> Result<ProcessMatrix> {
    if outer.dim() != inner.dim() {
        return Err(Error::DimensionMismatch {
            expected: outer.dim(),
            found: inner.dim(),
        });
    }
    let s = outer.superoperator().matmul(&inner.superoperator());
    ProcessMatrix::normalized(&superoperator_to_chi(&s)?)
}

/// Removes a known input channel: `S_gate = S_total · pinv(S_input)`,
/// then projects to the nearest physical χ.
pub fn deconvolve_input_imperfection(
    chi_total: &ProcessMatrix,
    chi_input: &ProcessMatrix,
) -> Result<ProcessMatrix> {
    if chi_total.dim() != chi_input.dim() {
        return Err(Error::DimensionMismatch {
            expected: chi_total.dim(),
            found: chi_input.dim(),
        });
    }
    let (pinv, condition) = pseudo_inverse(&chi_input.superoperator(), DECONVOLUTION_RCOND);
    if !(condition < MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let s = chi_total.superoperator().matmul(&pinv);
    let chi = superoperator_to_chi(&s)?;
    ProcessMatrix::new(project_to_density(&chi.hermitian_part())?)
}
