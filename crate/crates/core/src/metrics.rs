//! Scalar figures of merit for states, processes and truth tables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::json::round_sig;
use crate::qcore::linalg::{hermitian_eig, singular_values, sqrt_psd};
use crate::qcore::{ComplexMatrix, DensityMatrix, PauliBasis, C64};
use crate::tomo::ProcessMatrix;

/// Reference state for [`state_fidelity`].
#[derive(Clone, Debug)]
pub enum Target {
    Pure(Vec<C64>),
    Mixed(DensityMatrix),
}

impl From<Vec<C64>> for Target {
    fn from(v: Vec<C64>) -> Self {
        Target::Pure(v)
    }
}

impl From<&[C64]> for Target {
    fn from(v: &[C64]) -> Self {
        Target::Pure(v.to_vec())
    }
}

impl From<DensityMatrix> for Target {
    fn from(d: DensityMatrix) -> Self {
        Target::Mixed(d)
    }
}

impl From<&DensityMatrix> for Target {
    fn from(d: &DensityMatrix) -> Self {
        Target::Mixed(d.clone())
    }
}

/// Uhlmann fidelity `(Tr √(√a b √a))²` of two PSD unit-trace matrices.
pub fn uhlmann_fidelity(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: b.rows(),
        });
    }
    let sa = sqrt_psd(a)?;
    let inner = sa.matmul(b).matmul(&sa).hermitian_part();
    let eig = hermitian_eig(&inner)?;
    let root: f64 = eig.values.iter().map(|&l| l.max(0.0).sqrt()).sum();
    Ok((root * root).clamp(0.0, 1.0))
}

/// `⟨ψ|ρ|ψ⟩` for a pure target (normalised here), Uhlmann fidelity otherwise.
pub fn state_fidelity(rho: &DensityMatrix, target: impl Into<Target>) -> Result<f64> {
    match target.into() {
        Target::Pure(ket) => {
            if ket.len() != rho.dim() {
                return Err(Error::DimensionMismatch {
                    expected: rho.dim(),
                    found: ket.len(),
                });
            }
            let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
            if !(norm > 0.0) {
                return Err(Error::InvalidState("zero target ket".into()));
            }
            Ok((rho.expectation(&ket) / norm).clamp(0.0, 1.0))
        }
        Target::Mixed(sigma) => {
            if sigma.dim() != rho.dim() {
                return Err(Error::DimensionMismatch {
                    expected: rho.dim(),
                    found: sigma.dim(),
                });
            }
            uhlmann_fidelity(rho.matrix(), sigma.matrix())
        }
    }
}

/// `Tr(χ_ideal χ)` for a rank-1 ideal process, Uhlmann fidelity on χ otherwise.
pub fn process_fidelity(chi: &ProcessMatrix, chi_ideal: &ProcessMatrix) -> Result<f64> {
    if chi.dim() != chi_ideal.dim() || chi.basis().labels() != chi_ideal.basis().labels() {
        return Err(Error::BasisMismatch(format!(
            "process matrices over {} and {} Pauli operators",
            chi.basis().len(),
            chi_ideal.basis().len()
        )));
    }
    let top = hermitian_eig(chi_ideal.chi())?.values[0];
    if top >= 1.0 - 1e-12 {
        Ok(chi_ideal.chi().trace_product(chi.chi()).re.clamp(0.0, 1.0))
    } else {
        uhlmann_fidelity(chi_ideal.chi(), chi.chi())
    }
}

fn unit_interval(what: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::OutOfRange {
            what,
            value,
            lo: 0.0,
            hi: 1.0,
        })
    }
}

/// `(4 F_p + 1) / 5` for two qubits.
pub fn average_gate_fidelity(process_fidelity: f64) -> Result<f64> {
    let f = unit_interval("process fidelity", process_fidelity)?;
    Ok((4.0 * f + 1.0) / 5.0)
}

/// Lower bound `max(0, 2 F_p − 1)` on the entangling capability.
pub fn entangling_capability(process_fidelity: f64) -> Result<f64> {
    let f = unit_interval("process fidelity", process_fidelity)?;
    Ok((2.0 * f - 1.0).max(0.0))
}

/// Mean probability of the ideal outcome; `table[input][output]`.
pub fn logic_fidelity(table: &[[f64; 4]; 4], ideal: &[usize; 4]) -> Result<f64> {
    let mut seen = [false; 4];
    for &k in ideal {
        if k >= 4 || seen[k] {
            return Err(Error::MalformedTable(format!(
                "{ideal:?} is not a permutation"
            )));
        }
        seen[k] = true;
    }
    for (i, row) in table.iter().enumerate() {
        if row.iter().any(|p| !p.is_finite() || *p < -1e-12) {
            return Err(Error::MalformedTable(format!(
                "row {i} has invalid entries"
            )));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::MalformedTable(format!("row {i} sums to {s}")));
        }
    }
    Ok(table.iter().zip(ideal).map(|(row, &k)| row[k]).sum::<f64>() / 4.0)
}

/// `(F_zz + F_xx − 1, min(F_zz, F_xx))`.
pub fn hofmann_bounds(f_zz: f64, f_xx: f64) -> Result<(f64, f64)> {
    let a = unit_interval("F_zz", f_zz)?;
    let b = unit_interval("F_xx", f_xx)?;
    Ok((a + b - 1.0, a.min(b)))
}

/// Correlation matrix `T_ab = Tr(ρ σ_a ⊗ σ_b)`, a, b ∈ {X, Y, Z}.
pub fn correlation_matrix(rho: &DensityMatrix) -> Result<[[f64; 3]; 3]> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.dim(),
        });
    }
    let basis = PauliBasis::new(2)?;
    let mut t = [[0.0; 3]; 3];
    for (a, row) in t.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            // index of σ_a ⊗ σ_b in the lexicographic ordering
            let op = &basis.operators()[(a + 1) * 4 + (b + 1)];
            *v = rho.expectation_op(op).re;
        }
    }
    Ok(t)
}

/// Maximal CHSH value `2√(s₁² + s₂²)` over measurement settings.
pub fn chsh_max(rho: &DensityMatrix) -> Result<f64> {
    let t = correlation_matrix(rho)?;
    let m = ComplexMatrix::from_fn(3, 3, |i, j| C64::new(t[i][j], 0.0));
    let s = singular_values(&m);
    Ok(2.0 * (s[0] * s[0] + s[1] * s[1]).sqrt())
}

/// Table-I style summary of a gate characterisation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub process_fidelity: f64,
    pub average_fidelity: f64,
    pub entangling_capability: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub process_fidelity_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub logic_fidelity_zz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub logic_fidelity_xx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cnot_lower_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cnot_upper_bound: Option<f64>,
}

impl GateReport {
    pub fn from_process_fidelity(f_p: f64) -> Result<Self> {
        Ok(Self {
            process_fidelity: f_p,
            average_fidelity: average_gate_fidelity(f_p)?,
            entangling_capability: entangling_capability(f_p)?,
            process_fidelity_std: None,
            logic_fidelity_zz: None,
            logic_fidelity_xx: None,
            cnot_lower_bound: None,
            cnot_upper_bound: None,
        })
    }

    /// Report built from CNOT logic fidelities alone: the process fidelity
    /// fields use the Hofmann lower bound.
    pub fn from_logic_fidelities(f_zz: f64, f_xx: f64) -> Result<Self> {
        let (lo, _) = hofmann_bounds(f_zz, f_xx)?;
        Self::from_process_fidelity(lo.max(0.0))?.with_logic_fidelities(f_zz, f_xx)
    }

    pub fn with_logic_fidelities(mut self, f_zz: f64, f_xx: f64) -> Result<Self> {
        let (lo, hi) = hofmann_bounds(f_zz, f_xx)?;
        self.logic_fidelity_zz = Some(f_zz);
        self.logic_fidelity_xx = Some(f_xx);
        self.cnot_lower_bound = Some(lo);
        self.cnot_upper_bound = Some(hi);
        Ok(self)
    }

    pub fn with_uncertainty(mut self, std: f64) -> Self {
        self.process_fidelity_std = Some(std);
        self
    }

    /// Pretty JSON with numbers rounded to the repo-wide precision.
    pub fn to_json(&self) -> String {
        let r = round_sig;
        let o = |v: Option<f64>| v.map(round_sig);
        let rounded = Self {
            process_fidelity: r(self.process_fidelity),
            average_fidelity: r(self.average_fidelity),
            entangling_capability: r(self.entangling_capability),
            process_fidelity_std: o(self.process_fidelity_std),
            logic_fidelity_zz: o(self.logic_fidelity_zz),
            logic_fidelity_xx: o(self.logic_fidelity_xx),
            cnot_lower_bound: o(self.cnot_lower_bound),
            cnot_upper_bound: o(self.cnot_upper_bound),
        };
        serde_json::to_string_pretty(&rounded).expect("report serialises")
    }
}
