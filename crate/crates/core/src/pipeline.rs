//! End-to-end reconstructions: simulated counts in, reconstructed states,
//! process matrices and figures of merit out.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expsim::{
    simulate_gate_experiment, simulate_gate_runs, simulate_input_characterisation,
    simulate_truth_table, InputCharacterisation, NoiseConfig, SimulatedRun, SimulationOptions,
};
use crate::metrics::{
    chsh_max, hofmann_bounds, logic_fidelity, process_fidelity, state_fidelity, GateReport,
};
use crate::qcore::{ComplexMatrix, DensityMatrix, C64};
use crate::timebin::{cphase_postselected, ideal_cphase_unitary, CnotBasis, StandardKet};
use crate::tomo::{
    build_chi_input, compose_processes, deconvolve_input_imperfection, mle_state,
    qpt_mle_from_counts, qpt_mle_from_states, MleOptions, ProcessFit, ProcessMatrix, ProjectorSet,
    Setting, StateFit, TomographyInputSet,
};

/// Maximum-likelihood state for every run, in run order.
pub fn reconstruct_states(
    runs: &[SimulatedRun],
    projs: &ProjectorSet,
    opts: &MleOptions,
) -> Result<Vec<StateFit>> {
    runs.par_iter()
        .map(|run| mle_state(&run.observations()?, projs, opts))
        .collect()
}

/// The 16 two-qubit inputs as products of the characterised single-qubit
/// states, in [`TomographyInputSet`] order.
pub fn measured_inputs(
    control: &[DensityMatrix],
    target: &[DensityMatrix],
) -> Result<Vec<DensityMatrix>> {
    if control.len() != 4 || target.len() != 4 {
        return Err(Error::IncompleteInputSet(format!(
            "need 4 characterised states per qubit, got {} and {}",
            control.len(),
            target.len()
        )));
    }
    control
        .iter()
        .flat_map(|a| target.iter().map(move |b| a.tensor(b)))
        .collect()
}

#[derive(Clone, Debug)]
pub struct QptAnalysis {
    pub outputs: Vec<StateFit>,
    pub control_inputs: Vec<StateFit>,
    pub target_inputs: Vec<StateFit>,
    /// χ̃ fitted to the reconstructed output states.
    pub chi_raw: ProcessFit,
    pub chi_input: ProcessMatrix,
    pub chi_cphase: ProcessMatrix,
    pub raw_fidelity: f64,
    pub input_fidelity: f64,
    pub cphase_fidelity: f64,
}

impl QptAnalysis {
    /// Report on the compensated gate.
    pub fn report(&self) -> Result<GateReport> {
        GateReport::from_process_fidelity(self.cphase_fidelity)
    }

    /// Every maximum-likelihood fit that went into the analysis.
    pub fn fits(&self) -> impl Iterator<Item = &crate::tomo::MleFit> {
        self.outputs
            .iter()
            .chain(&self.control_inputs)
            .chain(&self.target_inputs)
            .map(|s| &s.fit)
            .chain(std::iter::once(&self.chi_raw.fit))
    }
}

/// How χ̃ is fitted to the gate data.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum QptMethod {
    /// One Poisson likelihood over the counts of all 16 inputs.
    #[default]
    JointLikelihood,
    /// Nearest physical χ to the linear inversion of the per-input MLE states.
    FromStates,
}

impl std::str::FromStr for QptMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(Self::JointLikelihood),
            "states" => Ok(Self::FromStates),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

/// Per-input QST, χ̃ fit, χ_input from the characterised inputs, then
/// removal of the preparation error.
pub fn analyse_qpt(
    runs: &[SimulatedRun],
    chars: &InputCharacterisation,
    projs: &ProjectorSet,
    opts: &MleOptions,
    method: QptMethod,
) -> Result<QptAnalysis> {
    let inputs = TomographyInputSet::standard();
    let outputs = reconstruct_states(runs, projs, opts)?;
    let single = ProjectorSet::overcomplete(1)?;
    let control_inputs = reconstruct_states(&chars.control, &single, opts)?;
    let target_inputs = reconstruct_states(&chars.target, &single, opts)?;

    let chi_raw = match method {
        QptMethod::JointLikelihood => {
            let obs = runs
                .iter()
                .map(SimulatedRun::observations)
                .collect::<Result<Vec<_>>>()?;
            qpt_mle_from_counts(&obs, &inputs, projs, opts)?
        }
        QptMethod::FromStates => {
            let states: Vec<DensityMatrix> = outputs.iter().map(|s| s.state.clone()).collect();
            qpt_mle_from_states(&states, &inputs, opts)?
        }
    };

    let measured = measured_inputs(
        &control_inputs
            .iter()
            .map(|s| s.state.clone())
            .collect::<Vec<_>>(),
        &target_inputs
            .iter()
            .map(|s| s.state.clone())
            .collect::<Vec<_>>(),
    )?;
    let chi_input = build_chi_input(&measured, &inputs, &ideal_cphase_unitary())?;
    let ideal = ProcessMatrix::cphase_ideal();
    // CP is self-inverse: CP ∘ (CP ∘ prep) = prep
    let prep = compose_processes(&ideal, &chi_input)?;
    let chi_cphase = deconvolve_input_imperfection(&chi_raw.process, &prep)?;

    Ok(QptAnalysis {
        raw_fidelity: process_fidelity(&chi_raw.process, &ideal)?,
        input_fidelity: process_fidelity(&chi_input, &ideal)?,
        cphase_fidelity: process_fidelity(&chi_cphase, &ideal)?,
        outputs,
        control_inputs,
        target_inputs,
        chi_raw,
        chi_input,
        chi_cphase,
    })
}

/// Simulated data for one process tomography run.
#[derive(Clone, Debug)]
pub struct QptData {
    pub runs: Vec<SimulatedRun>,
    pub chars: InputCharacterisation,
    pub projectors: ProjectorSet,
}

pub fn simulate_qpt(config: &NoiseConfig, sim: &SimulationOptions) -> Result<QptData> {
    Ok(QptData {
        runs: simulate_gate_experiment(&TomographyInputSet::standard(), config, sim)?,
        chars: simulate_input_characterisation(config, sim)?,
        projectors: sim.projectors(2)?,
    })
}

pub fn run_qpt(
    config: &NoiseConfig,
    sim: &SimulationOptions,
    method: QptMethod,
) -> Result<(QptData, QptAnalysis)> {
    let data = simulate_qpt(config, sim)?;
    let analysis = analyse_qpt(
        &data.runs,
        &data.chars,
        &data.projectors,
        &MleOptions::default(),
        method,
    )?;
    Ok((data, analysis))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapSummary {
    pub replicas: usize,
    pub raw_fidelities: Vec<f64>,
    pub cphase_fidelities: Vec<f64>,
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

impl BootstrapSummary {
    pub fn raw_std(&self) -> f64 {
        sample_std(&self.raw_fidelities)
    }

    pub fn cphase_std(&self) -> f64 {
        sample_std(&self.cphase_fidelities)
    }
}

fn resample(runs: &[SimulatedRun], rng: &mut ChaCha8Rng) -> Vec<SimulatedRun> {
    runs.iter()
        .map(|run| {
            let mut r = run.clone();
            for rec in &mut r.records {
                rec.counts = if rec.counts > 0 {
                    Poisson::new(rec.counts as f64)
                        .expect("positive mean")
                        .sample(rng) as u64
                } else {
                    0
                };
            }
            r
        })
        .collect()
}

/// Parametric bootstrap: every count is redrawn from a Poisson distribution
/// with the observed count as mean and the full analysis is repeated.
/// Exact-mode data carries no counting noise, so every replica equals the
/// original.
pub fn bootstrap_qpt(
    data: &QptData,
    replicas: usize,
    seed: u64,
    opts: &MleOptions,
    method: QptMethod,
) -> Result<BootstrapSummary> {
    let results: Vec<(f64, f64)> = (0..replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(5_000 + i as u64);
            let runs = resample(&data.runs, &mut rng);
            let chars = InputCharacterisation {
                control: resample(&data.chars.control, &mut rng),
                target: resample(&data.chars.target, &mut rng),
            };
            let a = analyse_qpt(&runs, &chars, &data.projectors, opts, method)?;
            Ok((a.raw_fidelity, a.cphase_fidelity))
        })
        .collect::<Result<_>>()?;
    Ok(BootstrapSummary {
        replicas,
        raw_fidelities: results.iter().map(|r| r.0).collect(),
        cphase_fidelities: results.iter().map(|r| r.1).collect(),
    })
}

pub fn entangle_inputs() -> Vec<Setting> {
    use StandardKet::{Plus, L};
    [[Plus, Plus], [Plus, L], [L, L], [L, Plus]]
        .into_iter()
        .map(|p| Setting(p.to_vec()))
        .collect()
}

#[derive(Clone, Debug)]
pub struct EntangledOutput {
    pub input: Setting,
    pub state: DensityMatrix,
    pub target: Vec<C64>,
    pub fidelity: f64,
    pub chsh: f64,
}

/// Ideal post-selected output for a product of standard kets.
pub fn analytic_output(input: &Setting) -> Vec<C64> {
    cphase_postselected(&input.0[0].qubit(), &input.0[1].qubit())
        .state
        .to_vec()
}

pub fn run_entangle(config: &NoiseConfig, sim: &SimulationOptions) -> Result<Vec<EntangledOutput>> {
    let inputs = entangle_inputs();
    let runs = simulate_gate_runs(&inputs, config, sim)?;
    let fits = reconstruct_states(&runs, &sim.projectors(2)?, &MleOptions::default())?;
    inputs
        .into_iter()
        .zip(fits)
        .map(|(input, fit)| {
            let target = analytic_output(&input);
            Ok(EntangledOutput {
                fidelity: state_fidelity(&fit.state, target.clone())?,
                chsh: chsh_max(&fit.state)?,
                input,
                state: fit.state,
                target,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CnotAnalysis {
    pub zz: [[f64; 4]; 4],
    pub xx: [[f64; 4]; 4],
    pub zz_counts: [[u64; 4]; 4],
    pub xx_counts: [[u64; 4]; 4],
    pub fidelity_zz: f64,
    pub fidelity_xx: f64,
    pub bounds: (f64, f64),
}

impl CnotAnalysis {
    pub fn report(&self) -> Result<GateReport> {
        GateReport::from_logic_fidelities(self.fidelity_zz, self.fidelity_xx)
    }
}

pub fn run_cnot_tables(config: &NoiseConfig, sim: &SimulationOptions) -> Result<CnotAnalysis> {
    let zz = simulate_truth_table(CnotBasis::Zz, config, sim)?;
    let xx = simulate_truth_table(CnotBasis::Xx, config, sim)?;
    let fidelity_zz = logic_fidelity(&zz.table, &CnotBasis::Zz.ideal_permutation())?;
    let fidelity_xx = logic_fidelity(&xx.table, &CnotBasis::Xx.ideal_permutation())?;
    Ok(CnotAnalysis {
        bounds: hofmann_bounds(fidelity_zz, fidelity_xx)?,
        zz: zz.table,
        xx: xx.table,
        zz_counts: zz.counts,
        xx_counts: xx.counts,
        fidelity_zz,
        fidelity_xx,
    })
}

#[derive(Clone, Debug)]
pub struct SingleQubitState {
    pub ket: StandardKet,
    pub state: DensityMatrix,
    pub fidelity: f64,
}

/// Tomography of the control party's four preparations.
pub fn run_single_qubit_qst(
    config: &NoiseConfig,
    sim: &SimulationOptions,
) -> Result<Vec<SingleQubitState>> {
    let chars = simulate_input_characterisation(config, sim)?;
    let fits = reconstruct_states(
        &chars.control,
        &ProjectorSet::overcomplete(1)?,
        &MleOptions::default(),
    )?;
    crate::expsim::CHARACTERISED_KETS
        .iter()
        .zip(fits)
        .map(|(&ket, fit)| {
            Ok(SingleQubitState {
                ket,
                fidelity: state_fidelity(&fit.state, ket.amplitudes().to_vec())?,
                state: fit.state,
            })
        })
        .collect()
}

/// Gate χ from a measured χ̃ and a χ_input (ideal gate ∘ preparation).
pub fn compensate(chi_total: &ProcessMatrix, chi_input: &ProcessMatrix) -> Result<ProcessMatrix> {
    let prep = compose_processes(&ProcessMatrix::cphase_ideal(), chi_input)?;
    deconvolve_input_imperfection(chi_total, &prep)
}

/// Ideal-gate output for an input density matrix; handy for oracles.
pub fn ideal_gate_output(rho: &ComplexMatrix) -> ComplexMatrix {
    let u = ideal_cphase_unitary();
    u.matmul(rho).matmul(&u.adjoint())
}
