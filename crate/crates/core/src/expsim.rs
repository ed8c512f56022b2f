//! Monte Carlo model of the counting experiment: pair generation, losses,
//! detection, accidental and dark coincidences, preparation phase errors and
//! switch bias drift.
//!
//! Every random draw comes from a ChaCha8 stream derived from the master seed
//! and a fixed stream id, so results do not depend on evaluation order or
//! thread count.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{ComplexMatrix, DensityMatrix};
use crate::timebin::{gate_postselected, CnotBasis, StandardKet, SwitchSetting, TimeBinQubit};
use crate::tomo::{CountRecord, LabeledCount, Observations, ProjectorSet, Setting};

/// Insertion losses in dB.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossBudget {
    /// Per measurement interferometer, one in each output arm.
    pub interferometer: f64,
    /// Per photon passing the switch.
    pub switch: f64,
    /// Residual end-to-end loss not itemised above (coupling, filtering,
    /// preparation), applied once per coincidence.
    pub system: f64,
}

impl Default for LossBudget {
    fn default() -> Self {
        Self {
            interferometer: 2.0,
            switch: 7.7,
            system: 44.0,
        }
    }
}

impl LossBudget {
    pub fn lossless() -> Self {
        Self {
            interferometer: 0.0,
            switch: 0.0,
            system: 0.0,
        }
    }

    /// Loss seen by one photon on its way to a detector.
    fn per_arm_db(&self) -> f64 {
        self.interferometer + self.switch + self.system / 2.0
    }

    fn total_db(&self) -> f64 {
        2.0 * self.per_arm_db()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub mean_pairs_per_pulse: f64,
    pub rep_rate_hz: f64,
    pub det_eff: (f64, f64),
    pub dark_cps: (f64, f64),
    pub loss_db: LossBudget,
    pub accidental_fraction: f64,
    /// Standard deviation of the systematic preparation phase offset.
    pub phase_sigma_rad: f64,
    /// Standard deviation of the per-setting jitter of both switch angles.
    pub splitting_drift_sigma: f64,
    pub seed: u64,
    pub coincidence_window_s: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            mean_pairs_per_pulse: 0.028,
            rep_rate_hz: 2.5e8,
            det_eff: (0.57, 0.62),
            dark_cps: (40.0, 40.0),
            loss_db: LossBudget::default(),
            accidental_fraction: 0.02,
            phase_sigma_rad: 0.0,
            splitting_drift_sigma: 0.0,
            seed: 0,
            coincidence_window_s: 1e-9,
        }
    }
}

impl NoiseConfig {
    /// No accidentals, dark counts, phase errors or drift.
    pub fn noiseless() -> Self {
        Self {
            dark_cps: (0.0, 0.0),
            accidental_fraction: 0.0,
            ..Self::default()
        }
    }

    /// Defaults plus preparation phase noise and switch drift at a level that
    /// reproduces the measured single-qubit input fidelities.
    pub fn measured_regime() -> Self {
        Self {
            phase_sigma_rad: 0.2,
            splitting_drift_sigma: 0.02,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if !(finite_nonneg(self.mean_pairs_per_pulse) && self.mean_pairs_per_pulse < 1.0) {
            return bad(format!(
                "mean_pairs_per_pulse must be in [0, 1), got {}",
                self.mean_pairs_per_pulse
            ));
        }
        if !finite_nonneg(self.rep_rate_hz) {
            return bad(format!(
                "rep_rate_hz must be >= 0, got {}",
                self.rep_rate_hz
            ));
        }
        for (i, e) in [self.det_eff.0, self.det_eff.1].into_iter().enumerate() {
            if !(0.0..=1.0).contains(&e) {
                return bad(format!("det_eff[{i}] must be in [0, 1], got {e}"));
            }
        }
        for (i, d) in [self.dark_cps.0, self.dark_cps.1].into_iter().enumerate() {
            if !finite_nonneg(d) {
                return bad(format!("dark_cps[{i}] must be >= 0, got {d}"));
            }
        }
        let l = &self.loss_db;
        for (name, v) in [
            ("interferometer", l.interferometer),
            ("switch", l.switch),
            ("system", l.system),
        ] {
            if !finite_nonneg(v) {
                return bad(format!("loss_db.{name} must be >= 0, got {v}"));
            }
        }
        for (name, v) in [
            ("accidental_fraction", self.accidental_fraction),
            ("phase_sigma_rad", self.phase_sigma_rad),
            ("splitting_drift_sigma", self.splitting_drift_sigma),
        ] {
            if !finite_nonneg(v) {
                return bad(format!("{name} must be >= 0, got {v}"));
            }
        }
        if !(self.coincidence_window_s.is_finite() && self.coincidence_window_s > 0.0) {
            return bad(format!(
                "coincidence_window_s must be > 0, got {}",
                self.coincidence_window_s
            ));
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Reads a `.toml` file as TOML and anything else as JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => Self::from_toml_str(&text),
            _ => Self::from_json_str(&text),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }
}

/// Expected signal coincidence rate in Hz:
/// `rep · μ · success · η₁ · η₂ · 10^(−loss/10)`.
pub fn coincidence_rate_estimate(config: &NoiseConfig, success_prob: f64) -> f64 {
    config.rep_rate_hz
        * config.mean_pairs_per_pulse
        * success_prob
        * config.det_eff.0
        * config.det_eff.1
        * 10f64.powf(-config.loss_db.total_db() / 10.0)
}

/// Coincidences from a dark count on one detector and a photon (or dark
/// count) on the other, within the coincidence window.
pub fn dark_coincidence_rate(config: &NoiseConfig) -> f64 {
    let arm = 10f64.powf(-config.loss_db.per_arm_db() / 10.0);
    let pairs = config.rep_rate_hz * config.mean_pairs_per_pulse;
    let singles = (
        pairs * config.det_eff.0 * arm,
        pairs * config.det_eff.1 * arm,
    );
    let (d1, d2) = config.dark_cps;
    (d1 * singles.1 + d2 * singles.0 + d1 * d2) * config.coincidence_window_s
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean > 0.0 && mean.is_finite() {
        Poisson::new(mean).expect("positive mean").sample(rng) as u64
    } else {
        0
    }
}

/// Per-setting expected coincidence rates. `probs[k]` is the probability
/// per emitted pair (post-selection success included) of a coincidence in
/// setting `k`.
pub fn expected_rates(probs: &[f64], config: &NoiseConfig) -> Vec<f64> {
    let signal = coincidence_rate_estimate(config, 1.0);
    let clean: Vec<f64> = probs
        .iter()
        .map(|&p| {
            if p.is_finite() {
                p.clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    let mean = if clean.is_empty() {
        0.0
    } else {
        clean.iter().sum::<f64>() / clean.len() as f64
    };
    // a flat accidental floor carrying `accidental_fraction` of the signal
    let accidental = config.accidental_fraction * signal * mean;
    let dark = dark_coincidence_rate(config);
    clean
        .iter()
        .map(|&p| signal * p + accidental + dark)
        .collect()
}

fn sample_with(
    rng: &mut ChaCha8Rng,
    probs: &[f64],
    config: &NoiseConfig,
    duration_s: f64,
) -> Vec<CountRecord> {
    let duration = if duration_s.is_finite() {
        duration_s.max(0.0)
    } else {
        0.0
    };
    expected_rates(probs, config)
        .into_iter()
        .enumerate()
        .map(|(k, rate)| CountRecord {
            setting_index: k,
            counts: poisson(rng, rate * duration),
            duration_s: duration,
        })
        .collect()
}

/// Poisson counts for every setting, deterministic in `rng_seed`.
pub fn sample_counts(
    probs: &[f64],
    config: &NoiseConfig,
    duration_s: f64,
    rng_seed: u64,
) -> Vec<CountRecord> {
    sample_with(
        &mut ChaCha8Rng::seed_from_u64(rng_seed),
        probs,
        config,
        duration_s,
    )
}

/// Both switch angles jittered by independent Gaussian noise.
pub fn perturb_switch(
    setting: &SwitchSetting,
    config: &NoiseConfig,
    rng: &mut impl rand::Rng,
) -> SwitchSetting {
    let sigma = config.splitting_drift_sigma;
    if sigma <= 0.0 {
        return *setting;
    }
    let n = Normal::new(0.0, sigma).expect("finite sigma");
    SwitchSetting {
        theta_t1: setting.theta_t1 + n.sample(rng),
        theta_t2: setting.theta_t2 + n.sample(rng),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Party {
    Control,
    Target,
}

/// Systematic relative-phase offsets of each party's preparation
/// interferometers: index 0 for the ± method, 1 for the L/R method.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PreparationErrors {
    pub control: [f64; 2],
    pub target: [f64; 2],
}

impl PreparationErrors {
    pub fn none() -> Self {
        Self {
            control: [0.0; 2],
            target: [0.0; 2],
        }
    }

    /// One draw per run from the master seed.
    pub fn draw(config: &NoiseConfig) -> Self {
        let sigma = config.phase_sigma_rad;
        if sigma <= 0.0 {
            return Self::none();
        }
        let mut rng = stream(config.seed, 0);
        let n = Normal::new(0.0, sigma).expect("finite sigma");
        let mut d = || n.sample(&mut rng);
        Self {
            control: [d(), d()],
            target: [d(), d()],
        }
    }

    /// The qubit a party actually prepares when aiming for `ket`. Only
    /// superposition states pick up the interferometer phase error.
    pub fn prepare(&self, party: Party, ket: StandardKet) -> TimeBinQubit {
        let offsets = match party {
            Party::Control => self.control,
            Party::Target => self.target,
        };
        let q = ket.qubit();
        match ket {
            StandardKet::Plus | StandardKet::Minus => q.with_phase_offset(offsets[0]),
            StandardKet::L | StandardKet::R => q.with_phase_offset(offsets[1]),
            StandardKet::T1 | StandardKet::T2 => q,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationOptions {
    /// Integration time per measurement setting.
    pub duration_s: f64,
    /// Infinite statistics: estimators see Born probabilities of the true
    /// state and no counting noise.
    pub exact: bool,
    /// Use the 16-setting two-qubit projector set instead of all 36.
    pub minimal_projectors: bool,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            duration_s: 600.0,
            exact: false,
            minimal_projectors: false,
        }
    }
}

impl SimulationOptions {
    pub fn exact() -> Self {
        Self {
            exact: true,
            ..Self::default()
        }
    }

    pub fn projectors(&self, n_qubits: usize) -> Result<ProjectorSet> {
        if self.minimal_projectors {
            ProjectorSet::minimal(n_qubits)
        } else {
            ProjectorSet::overcomplete(n_qubits)
        }
    }
}

/// Simulated tomography of one prepared input.
#[derive(Clone, Debug)]
pub struct SimulatedRun {
    pub input: Setting,
    pub true_state: DensityMatrix,
    /// Born probabilities of `true_state` for every setting.
    pub probabilities: Vec<f64>,
    /// One record per setting; expected signal counts in exact mode.
    pub records: Vec<CountRecord>,
    pub exact: bool,
}

impl SimulatedRun {
    pub fn observations(&self) -> Result<Observations> {
        if self.exact {
            Ok(Observations::from_probabilities(&self.probabilities))
        } else {
            Observations::from_records(&self.records, self.probabilities.len())
        }
    }

    pub fn labeled_counts(&self, projs: &ProjectorSet) -> Vec<LabeledCount> {
        self.records
            .iter()
            .map(|r| LabeledCount {
                setting: projs.settings()[r.setting_index].clone(),
                input: self.input.clone(),
                counts: r.counts,
                duration_s: r.duration_s,
            })
            .collect()
    }
}

/// Builds a run from the per-setting states actually present while each
/// setting was measured. `states[k]` is `(ket, success)`.
fn finish_run(
    input: Setting,
    states: &[(Vec<crate::qcore::C64>, f64)],
    projs: &ProjectorSet,
    config: &NoiseConfig,
    opts: &SimulationOptions,
    rng: &mut ChaCha8Rng,
) -> Result<SimulatedRun> {
    let dim = projs.dim();
    // ground truth: success-weighted mixture over settings
    let total: f64 = states.iter().map(|(_, s)| s).sum();
    let mut mix = ComplexMatrix::zeros(dim, dim);
    for (ket, s) in states {
        mix = &mix + &ComplexMatrix::projector(ket).scale_real(s / total);
    }
    let true_state = DensityMatrix::new(mix.hermitian_part())?;
    let probabilities = crate::tomo::measurement_probabilities(&true_state, projs)?;
    let per_pair: Vec<f64> = projs
        .projectors()
        .iter()
        .zip(states)
        .map(|(p, (ket, s))| {
            s * crate::qcore::DensityMatrix::pure(ket)
                .map(|d| d.expectation_op(p).re)
                .unwrap_or(0.0)
        })
        .collect();
    let records = if opts.exact {
        let signal = coincidence_rate_estimate(config, 1.0);
        per_pair
            .iter()
            .enumerate()
            .map(|(k, p)| CountRecord {
                setting_index: k,
                counts: (signal * p * opts.duration_s).round() as u64,
                duration_s: opts.duration_s,
            })
            .collect()
    } else {
        sample_with(rng, &per_pair, config, opts.duration_s)
    };
    Ok(SimulatedRun {
        input,
        true_state,
        probabilities,
        records,
        exact: opts.exact,
    })
}

const GATE_STREAM: u64 = 1_000;
const INPUT_STREAM: u64 = 2_000;
const TABLE_STREAM: u64 = 3_000;

fn simulate_gate_input(
    index: usize,
    input: &Setting,
    prep: &PreparationErrors,
    projs: &ProjectorSet,
    config: &NoiseConfig,
    opts: &SimulationOptions,
) -> Result<SimulatedRun> {
    if input.n_qubits() != 2 {
        return Err(Error::InvalidDimension(format!(
            "gate input `{input}` must name two qubits"
        )));
    }
    let mut rng = stream(config.seed, GATE_STREAM + index as u64);
    let control = prep.prepare(Party::Control, input.0[0]);
    let target = prep.prepare(Party::Target, input.0[1]);
    let nominal = SwitchSetting::cphase();
    let states: Vec<_> = (0..projs.len())
        .map(|_| {
            let out = gate_postselected(
                &control,
                &target,
                &perturb_switch(&nominal, config, &mut rng),
            );
            (out.state.to_vec(), out.success_prob)
        })
        .collect();
    finish_run(input.clone(), &states, projs, config, opts, &mut rng)
}

/// Gate runs for arbitrary two-qubit product inputs, in input order.
pub fn simulate_gate_runs(
    inputs: &[Setting],
    config: &NoiseConfig,
    opts: &SimulationOptions,
) -> Result<Vec<SimulatedRun>> {
    config.validate()?;
    let projs = opts.projectors(2)?;
    let prep = PreparationErrors::draw(config);
    inputs
        .par_iter()
        .enumerate()
        .map(|(j, input)| simulate_gate_input(j, input, &prep, &projs, config, opts))
        .collect()
}

/// The 16-input process tomography experiment.
pub fn simulate_gate_experiment(
    inputs: &crate::tomo::TomographyInputSet,
    config: &NoiseConfig,
    opts: &SimulationOptions,
) -> Result<Vec<SimulatedRun>> {
    simulate_gate_runs(inputs.inputs(), config, opts)
}

/// Single-qubit tomography of each party's t₁, t₂, +, L preparations with
/// the switch left passive.
#[derive(Clone, Debug)]
pub struct InputCharacterisation {
    pub control: Vec<SimulatedRun>,
    pub target: Vec<SimulatedRun>,
}

pub const CHARACTERISED_KETS: [StandardKet; 4] = [
    StandardKet::T1,
    StandardKet::T2,
    StandardKet::Plus,
    StandardKet::L,
];

pub fn simulate_input_characterisation(
    config: &NoiseConfig,
    opts: &SimulationOptions,
) -> Result<InputCharacterisation> {
    config.validate()?;
    let projs = ProjectorSet::overcomplete(1)?;
    let prep = PreparationErrors::draw(config);
    let run_party = |party: Party, offset: u64| -> Result<Vec<SimulatedRun>> {
        CHARACTERISED_KETS
            .iter()
            .enumerate()
            .map(|(j, &ket)| {
                let mut rng = stream(config.seed, INPUT_STREAM + offset + j as u64);
                let q = prep.prepare(party, ket);
                let states = vec![(q.amplitudes().to_vec(), 1.0); projs.len()];
                finish_run(Setting(vec![ket]), &states, &projs, config, opts, &mut rng)
            })
            .collect()
    };
    Ok(InputCharacterisation {
        control: run_party(Party::Control, 0)?,
        target: run_party(Party::Target, 100)?,
    })
}

/// Truth-table measurement in one of the CNOT bases.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthTableRun {
    pub basis: CnotBasis,
    /// `counts[input][outcome]`; expected signal counts in exact mode.
    pub counts: [[u64; 4]; 4],
    /// Row-normalised outcome frequencies.
    pub table: [[f64; 4]; 4],
}

pub fn simulate_truth_table(
    basis: CnotBasis,
    config: &NoiseConfig,
    opts: &SimulationOptions,
) -> Result<TruthTableRun> {
    config.validate()?;
    let prep = PreparationErrors::draw(config);
    let signal = coincidence_rate_estimate(config, 1.0);
    let id = match basis {
        CnotBasis::Zz => 0,
        CnotBasis::Xx => 10,
    };
    let mut counts = [[0u64; 4]; 4];
    let mut table = [[0.0; 4]; 4];
    for row in 0..4 {
        let mut rng = stream(config.seed, TABLE_STREAM + id + row as u64);
        let (c, t) = basis.encode(row / 2, row % 2);
        let control = prep.prepare(Party::Control, c);
        let target = prep.prepare(Party::Target, t);
        let per_pair: Vec<f64> = (0..4)
            .map(|k| {
                let out = gate_postselected(
                    &control,
                    &target,
                    &perturb_switch(&SwitchSetting::cphase(), config, &mut rng),
                );
                out.success_prob * crate::timebin::overlap_sqr(&basis.outcome_ket(k), &out.state)
            })
            .collect();
        let weights: Vec<f64> = if opts.exact {
            counts[row] =
                std::array::from_fn(|k| (signal * per_pair[k] * opts.duration_s).round() as u64);
            per_pair.clone()
        } else {
            let recs = sample_with(&mut rng, &per_pair, config, opts.duration_s);
            for r in &recs {
                counts[row][r.setting_index] = r.counts;
            }
            recs.iter().map(|r| r.counts as f64).collect()
        };
        let total: f64 = weights.iter().sum();
        if total > 0.0 {
            table[row] = std::array::from_fn(|k| weights[k] / total);
        } else {
            table[row] = [0.25; 4];
        }
    }
    Ok(TruthTableRun {
        basis,
        counts,
        table,
    })
}
