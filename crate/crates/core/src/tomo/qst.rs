use super::mle::{maximize, MleFit, MleOptions, PoissonLikelihood};
use super::projectors::ProjectorSet;
use super::records::{CountRecord, Observations};
use crate::error::{Error, Result};
use crate::qcore::linalg::real_least_squares;
use crate::qcore::{ComplexMatrix, DensityMatrix, PauliBasis, C64};

/// Linear-inversion estimate from observations. Unit trace and Hermitian;
/// may have negative eigenvalues.
pub fn linear_inversion(obs: &Observations, projs: &ProjectorSet) -> Result<ComplexMatrix> {
    if obs.len() != projs.len() {
        return Err(Error::DimensionMismatch {
            expected: projs.len(),
            found: obs.len(),
        });
    }
    let basis = PauliBasis::new(projs.n_qubits())?;
    let n_params = basis.len();
    let mut design = Vec::new();
    let mut rhs = Vec::new();
    for (proj, rate) in projs.projectors().iter().zip(obs.rates()) {
        let Some(rate) = rate else { continue };
        design.extend(basis.operators().iter().map(|s| proj.trace_product(s).re));
        rhs.push(rate);
    }
    let rows = rhs.len();
    if rows < n_params {
        return Err(Error::SingularDesign {
            rank: rows,
            required: n_params,
        });
    }
    let (coef, rank) = real_least_squares(&design, rows, n_params, &rhs);
    if rank < n_params {
        return Err(Error::SingularDesign {
            rank,
            required: n_params,
        });
    }
    let d = projs.dim();
    let mut m = ComplexMatrix::zeros(d, d);
    for (op, &a) in basis.operators().iter().zip(&coef) {
        m = &m + &op.scale(C64::new(a, 0.0));
    }
    let tr = m.trace().re;
    if !(tr.abs() > 1e-300) {
        return Err(Error::InvalidState("no counts recorded".into()));
    }
    Ok(m.hermitian_part().scale_real(1.0 / tr))
}

pub fn qst_linear_inversion(
    records: &[CountRecord],
    projs: &ProjectorSet,
) -> Result<ComplexMatrix> {
    linear_inversion(&Observations::from_records(records, projs.len())?, projs)
}

/// MLE state with its optimiser trace.
#[derive(Clone, Debug)]
pub struct StateFit {
    pub state: DensityMatrix,
    pub fit: MleFit,
}

/// Maximum-likelihood state, seeded from linear inversion.
pub fn mle_state(obs: &Observations, projs: &ProjectorSet, opts: &MleOptions) -> Result<StateFit> {
    if obs.total() <= 0.0 {
        return Err(Error::InvalidState("no counts recorded".into()));
    }
    let seed = linear_inversion(obs, projs)?;
    let mut obj = PoissonLikelihood::new(projs.dim());
    obj.add_group(projs.projectors(), &obs.weights, &obs.durations)?;
    let fit = maximize(&obj, &seed, opts)?;
    Ok(StateFit {
        state: DensityMatrix::new(fit.estimate.clone())?,
        fit,
    })
}

pub fn qst_mle(records: &[CountRecord], projs: &ProjectorSet) -> Result<DensityMatrix> {
    let obs = Observations::from_records(records, projs.len())?;
    Ok(mle_state(&obs, projs, &MleOptions::default())?.state)
}
