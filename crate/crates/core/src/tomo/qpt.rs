use super::mle::{maximize, FrobeniusObjective, MleFit, MleOptions, PoissonLikelihood};
use super::process::{superoperator_to_chi, ProcessMatrix};
use super::projectors::{ProjectorSet, Setting};
use super::qst::linear_inversion;
use super::records::Observations;
use crate::error::{Error, Result};
use crate::qcore::linalg::{project_to_density, pseudo_inverse};
use crate::qcore::{ComplexMatrix, DensityMatrix, PauliBasis};
use crate::timebin::StandardKet;

const INPUT_KETS: [StandardKet; 4] = [
    StandardKet::T1,
    StandardKet::T2,
    StandardKet::Plus,
    StandardKet::L,
];

/// The 16 two-qubit product inputs over {t₁, t₂, +, L} per qubit, control first.
#[derive(Clone, Debug, PartialEq)]
pub struct TomographyInputSet {
    inputs: Vec<Setting>,
}

impl Default for TomographyInputSet {
    fn default() -> Self {
        let inputs = INPUT_KETS
            .iter()
            .flat_map(|&a| INPUT_KETS.iter().map(move |&b| Setting(vec![a, b])))
            .collect();
        Self { inputs }
    }
}

impl TomographyInputSet {
    pub fn standard() -> Self {
        Self::default()
    }

    pub fn inputs(&self) -> &[Setting] {
        &self.inputs
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.inputs.iter().map(Setting::to_string).collect()
    }

    pub fn density_matrices(&self) -> Vec<ComplexMatrix> {
        self.inputs.iter().map(Setting::projector).collect()
    }
}

/// Unnormalised linear-inversion result.
#[derive(Clone, Debug)]
pub struct LinearProcessFit {
    /// χ scaled to unit trace; may be non-positive.
    pub chi: ComplexMatrix,
    /// ‖S·In − Out‖_F over the input/output columns.
    pub residual: f64,
}

/// Fits the linear map taking each `inputs[j]` to `outputs[j]` and returns it as χ.
pub fn linear_process_fit(
    inputs: &[ComplexMatrix],
    outputs: &[ComplexMatrix],
) -> Result<LinearProcessFit> {
    let d = inputs.first().map(ComplexMatrix::rows).unwrap_or(0);
    let need = d * d;
    if inputs.len() != outputs.len() || inputs.len() < need || need == 0 {
        return Err(Error::IncompleteInputSet(format!(
            "{} inputs and {} outputs; {} required",
            inputs.len(),
            outputs.len(),
            need.max(16)
        )));
    }
    if inputs
        .iter()
        .chain(outputs)
        .any(|m| m.rows() != d || m.cols() != d)
    {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: inputs
                .iter()
                .chain(outputs)
                .map(ComplexMatrix::rows)
                .find(|&r| r != d)
                .unwrap_or(d),
        });
    }
    let columns = |ms: &[ComplexMatrix]| {
        let vs: Vec<Vec<_>> = ms.iter().map(ComplexMatrix::vec).collect();
        ComplexMatrix::from_fn(need, ms.len(), |i, j| vs[j][i])
    };
    let inp = columns(inputs);
    let out = columns(outputs);
    let (pinv, _) = pseudo_inverse(&inp, 1e-10);
    // a spanning input set has In·pinv(In) = I
    let span = inp.matmul(&pinv);
    if span.max_abs_diff(&ComplexMatrix::identity(need)) > 1e-8 {
        return Err(Error::IncompleteInputSet(
            "inputs do not span the operator space".into(),
        ));
    }
    let s = out.matmul(&pinv);
    let residual = (&s.matmul(&inp) - &out).frobenius_norm();
    let chi = superoperator_to_chi(&s)?.hermitian_part();
    let tr = chi.trace().re;
    if !(tr.abs() > 1e-300) {
        return Err(Error::InvalidState(
            "reconstructed process has zero trace".into(),
        ));
    }
    Ok(LinearProcessFit {
        chi: chi.scale_real(1.0 / tr),
        residual,
    })
}

fn check_outputs(outputs: &[DensityMatrix], inputs: &TomographyInputSet) -> Result<()> {
    if outputs.len() != inputs.len() || inputs.len() != 16 {
        return Err(Error::IncompleteInputSet(format!(
            "expected 16 outputs, got {}",
            outputs.len()
        )));
    }
    if let Some(o) = outputs.iter().find(|o| o.dim() != 4) {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: o.dim(),
        });
    }
    Ok(())
}

/// Linear-inversion χ from the 16 output states of the standard inputs.
pub fn qpt_linear_inversion(
    outputs: &[DensityMatrix],
    inputs: &TomographyInputSet,
) -> Result<LinearProcessFit> {
    check_outputs(outputs, inputs)?;
    let outs: Vec<ComplexMatrix> = outputs.iter().map(|o| o.matrix().clone()).collect();
    linear_process_fit(&inputs.density_matrices(), &outs)
}

#[derive(Clone, Debug)]
pub struct ProcessFit {
    pub process: ProcessMatrix,
    pub linear: LinearProcessFit,
    pub fit: MleFit,
}

/// Physical χ closest (Frobenius) to the linear-inversion estimate.
pub fn qpt_mle_from_states(
    outputs: &[DensityMatrix],
    inputs: &TomographyInputSet,
    opts: &MleOptions,
) -> Result<ProcessFit> {
    let linear = qpt_linear_inversion(outputs, inputs)?;
    physical_fit(linear, opts)
}

fn physical_fit(linear: LinearProcessFit, opts: &MleOptions) -> Result<ProcessFit> {
    let fit = maximize(&FrobeniusObjective::new(&linear.chi), &linear.chi, opts)?;
    Ok(ProcessFit {
        process: ProcessMatrix::new(fit.estimate.clone())?,
        linear,
        fit,
    })
}

/// Joint Poisson likelihood of all count data given χ.
///
/// With `p_jk = Tr(P_k E(ρ_j)) = Tr(χ B_jk)` and
/// `(B_jk)_nm = Tr(A_n† P_k A_m ρ_j)`, each input forms one group.
pub fn qpt_mle_from_counts(
    observations: &[Observations],
    inputs: &TomographyInputSet,
    projs: &ProjectorSet,
    opts: &MleOptions,
) -> Result<ProcessFit> {
    if observations.len() != inputs.len() || inputs.len() != 16 {
        return Err(Error::IncompleteInputSet(format!(
            "expected count data for 16 inputs, got {}",
            observations.len()
        )));
    }
    if projs.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: projs.dim(),
        });
    }
    let basis = PauliBasis::new(2)?;
    let ops = basis.ops();
    let mut obj = PoissonLikelihood::new(16);
    let mut seeds = Vec::with_capacity(16);
    for (obs, rho) in observations.iter().zip(inputs.density_matrices()) {
        let effects: Vec<ComplexMatrix> = projs
            .projectors()
            .iter()
            .map(|p| {
                // Tr(A_n† P A_m ρ) = Tr(P · A_m ρ A_n†)
                let left: Vec<ComplexMatrix> = ops.iter().map(|a| a.left_mul(&rho)).collect();
                ComplexMatrix::from_fn(16, 16, |n, m| {
                    p.trace_product(&ops[n].right_mul_adjoint(&left[m]))
                })
            })
            .collect();
        obj.add_group(&effects, &obs.weights, &obs.durations)?;
        seeds.push(linear_inversion(obs, projs)?);
    }
    let linear = linear_process_fit(&inputs.density_matrices(), &seeds)?;
    let seed = project_to_density(&linear.chi)?;
    let fit = maximize(&obj, &seed, opts)?;
    Ok(ProcessFit {
        process: ProcessMatrix::new(fit.estimate.clone())?,
        linear,
        fit,
    })
}

pub fn qpt_mle(outputs: &[DensityMatrix], inputs: &TomographyInputSet) -> Result<ProcessMatrix> {
    Ok(qpt_mle_from_states(outputs, inputs, &MleOptions::default())?.process)
}

/// χ of (ideal gate ∘ preparation error), from the measured versions of the
/// 16 inputs: each ideal input is paired with `U ρ_measured U†`.
pub fn build_chi_input(
    measured_inputs: &[DensityMatrix],
    inputs: &TomographyInputSet,
    gate: &ComplexMatrix,
) -> Result<ProcessMatrix> {
    check_outputs(measured_inputs, inputs)?;
    let outs: Vec<ComplexMatrix> = measured_inputs
        .iter()
        .map(|rho| gate.matmul(rho.matrix()).matmul(&gate.adjoint()))
        .collect();
    let linear = linear_process_fit(&inputs.density_matrices(), &outs)?;
    Ok(physical_fit(linear, &MleOptions::default())?.process)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::tensor_product;
    use crate::testutil::random_density;
    use crate::timebin::ideal_cphase_unitary;
    use crate::tomo::projectors::measurement_probabilities;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ideal_outputs(u: &ComplexMatrix) -> Vec<DensityMatrix> {
        TomographyInputSet::standard()
            .density_matrices()
            .iter()
            .map(|rho| DensityMatrix::new(u.matmul(rho).matmul(&u.adjoint())).unwrap())
            .collect()
    }

    fn overlap(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        a.trace_product(b).re
    }

    #[test]
    fn standard_inputs() {
        let set = TomographyInputSet::standard();
        assert_eq!(set.len(), 16);
        assert_eq!(set.labels()[0], "t1:t1");
        assert_eq!(set.labels()[15], "L:L");
    }

    #[test]
    fn ideal_cphase_linear_inversion() {
        let set = TomographyInputSet::standard();
        let lin = qpt_linear_inversion(&ideal_outputs(&ideal_cphase_unitary()), &set).unwrap();
        assert!(lin.residual < 1e-12);
        assert!(lin.chi.max_abs_diff(ProcessMatrix::cphase_ideal().chi()) < 1e-12);
    }

    #[test]
    fn identity_process() {
        let set = TomographyInputSet::standard();
        let lin = qpt_linear_inversion(&ideal_outputs(&ComplexMatrix::identity(4)), &set).unwrap();
        assert!((lin.chi[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(lin.chi.frobenius_norm() - 1.0 < 1e-12);
    }

    #[test]
    fn ideal_mle_fidelity() {
        let set = TomographyInputSet::standard();
        let chi = qpt_mle(&ideal_outputs(&ideal_cphase_unitary()), &set).unwrap();
        assert!(overlap(chi.chi(), ProcessMatrix::cphase_ideal().chi()) >= 1.0 - 1e-8);
    }

    #[test]
    fn noisy_outputs_give_physical_chi() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let set = TomographyInputSet::standard();
        let u = ideal_cphase_unitary();
        let noisy: Vec<DensityMatrix> = ideal_outputs(&u)
            .into_iter()
            .map(|rho| {
                let mix =
                    &rho.matrix().scale_real(0.9) + &random_density(4, 4, &mut rng).scale_real(0.1);
                DensityMatrix::new(mix).unwrap()
            })
            .collect();
        let fit = qpt_mle_from_states(&noisy, &set, &MleOptions::default()).unwrap();
        let lin_min = crate::qcore::hermitian_eig(&fit.linear.chi)
            .unwrap()
            .min_value();
        assert!(
            lin_min < 0.0,
            "independent output noise should look unphysical"
        );
        assert!(fit.process.min_eigenvalue().unwrap() >= -1e-10);
        assert!((fit.process.chi().trace().re - 1.0).abs() < 1e-10);
        assert!(fit.fit.trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn counts_based_fit_on_exact_data() {
        let set = TomographyInputSet::standard();
        let projs = ProjectorSet::overcomplete(2).unwrap();
        let obs: Vec<Observations> = ideal_outputs(&ideal_cphase_unitary())
            .iter()
            .map(|rho| {
                Observations::from_probabilities(&measurement_probabilities(rho, &projs).unwrap())
            })
            .collect();
        let fit = qpt_mle_from_counts(&obs, &set, &projs, &MleOptions::default()).unwrap();
        assert!(overlap(fit.process.chi(), ProcessMatrix::cphase_ideal().chi()) >= 1.0 - 1e-8);
    }

    #[test]
    fn incomplete_inputs_rejected() {
        let set = TomographyInputSet::standard();
        let outs = ideal_outputs(&ideal_cphase_unitary());
        assert!(matches!(
            qpt_linear_inversion(&outs[..15], &set),
            Err(Error::IncompleteInputSet(_))
        ));
        let repeated: Vec<ComplexMatrix> = vec![set.density_matrices()[0].clone(); 16];
        assert!(matches!(
            linear_process_fit(&repeated, &repeated),
            Err(Error::IncompleteInputSet(_))
        ));
    }

    #[test]
    fn perfect_inputs_give_ideal_chi_input() {
        let set = TomographyInputSet::standard();
        let measured: Vec<DensityMatrix> = set
            .density_matrices()
            .into_iter()
            .map(|m| DensityMatrix::new(m).unwrap())
            .collect();
        let chi = build_chi_input(&measured, &set, &ideal_cphase_unitary()).unwrap();
        assert!(overlap(chi.chi(), ProcessMatrix::cphase_ideal().chi()) >= 1.0 - 1e-8);
    }

    /// Per-qubit state with fidelity `f` to the ideal ket; the remaining
    /// weight sits on the orthogonal ket.
    fn imperfect(ket: StandardKet, f: f64) -> ComplexMatrix {
        let a = ket.amplitudes();
        let perp = [-a[1].conj(), a[0].conj()];
        &ComplexMatrix::projector(&a).scale_real(f)
            + &ComplexMatrix::projector(&perp).scale_real(1.0 - f)
    }

    fn inputs_with_errors(strength: f64) -> Vec<DensityMatrix> {
        let fid = |k: StandardKet| match k {
            StandardKet::T1 | StandardKet::T2 => 1.0 - 0.001 * strength,
            StandardKet::Plus => 1.0 - 0.021 * strength,
            _ => 1.0 - 0.018 * strength,
        };
        TomographyInputSet::standard()
            .inputs()
            .iter()
            .map(|s| {
                let m = tensor_product(
                    &imperfect(s.0[0], fid(s.0[0])),
                    &imperfect(s.0[1], fid(s.0[1])),
                );
                DensityMatrix::new(m).unwrap()
            })
            .collect()
    }

    /// Single-qubit linear-inversion process fidelity from the Bloch vectors
    /// of the measured t₁, t₂, +, L inputs: the affine Bloch map is fixed by
    /// the four inputs and `F = (1 + Tr M) / 4`.
    fn bloch_oracle(
        t1: &ComplexMatrix,
        t2: &ComplexMatrix,
        plus: &ComplexMatrix,
        l: &ComplexMatrix,
    ) -> f64 {
        let bloch = |m: &ComplexMatrix| {
            [
                2.0 * m[(0, 1)].re,
                -2.0 * m[(0, 1)].im,
                (m[(0, 0)] - m[(1, 1)]).re,
            ]
        };
        let (a, b, p, q) = (bloch(t1), bloch(t2), bloch(plus), bloch(l));
        let c: Vec<f64> = (0..3).map(|i| (a[i] + b[i]) / 2.0).collect();
        let tr_m = (a[2] - b[2]) / 2.0 + (p[0] - c[0]) + (q[1] - c[1]);
        (1.0 + tr_m) / 4.0
    }

    #[test]
    fn chi_input_fidelity_for_measured_input_pattern() {
        // per-qubit input fidelities 0.999 / 0.999 / 0.979 / 0.982
        let set = TomographyInputSet::standard();
        let chi = build_chi_input(&inputs_with_errors(1.0), &set, &ideal_cphase_unitary()).unwrap();
        let f = overlap(chi.chi(), ProcessMatrix::cphase_ideal().chi());
        let one = |k: StandardKet, f: f64| imperfect(k, 1.0 - f);
        let f1 = bloch_oracle(
            &one(StandardKet::T1, 0.001),
            &one(StandardKet::T2, 0.001),
            &one(StandardKet::Plus, 0.021),
            &one(StandardKet::L, 0.018),
        );
        // the fit is close to the (already nearly physical) linear estimate
        assert!(
            (f - f1 * f1).abs() < 2e-3,
            "F_input = {f}, oracle {}",
            f1 * f1
        );
        assert!(f > 0.95 && f < 0.99);
    }

    #[test]
    fn chi_input_fidelity_decreases_with_error_strength() {
        let set = TomographyInputSet::standard();
        let target = ProcessMatrix::cphase_ideal();
        let f: Vec<f64> = [0.0, 0.5, 1.0, 2.0, 4.0]
            .iter()
            .map(|&s| {
                let chi =
                    build_chi_input(&inputs_with_errors(s), &set, &ideal_cphase_unitary()).unwrap();
                overlap(chi.chi(), target.chi())
            })
            .collect();
        assert!(f.windows(2).all(|w| w[1] < w[0]), "{f:?}");
    }
}
