use timebin::expsim::{NoiseConfig, SimulationOptions};
use timebin::metrics::{hofmann_bounds, logic_fidelity};
use timebin::pipeline::{run_cnot_tables, run_qpt, QptMethod};
use timebin::qcore::{kron_vec, ComplexMatrix, DensityMatrix};
use timebin::timebin::CnotBasis;
use timebin::tomo::ProcessMatrix;

fn mean_raw_fidelity(config: &NoiseConfig, runs: u64, sim: &SimulationOptions) -> f64 {
    (0..runs)
        .map(|seed| {
            run_qpt(&config.clone().with_seed(seed), sim, QptMethod::default())
                .unwrap()
                .1
                .raw_fidelity
        })
        .sum::<f64>()
        / runs as f64
}

const RUNS: u64 = 30;

#[test]
fn phase_noise_never_helps() {
    let base = NoiseConfig::default();
    let noisy = NoiseConfig {
        phase_sigma_rad: 0.3,
        ..base.clone()
    };
    let sim = SimulationOptions::default();
    let (a, b) = (
        mean_raw_fidelity(&base, RUNS, &sim),
        mean_raw_fidelity(&noisy, RUNS, &sim),
    );
    assert!(b < a, "{b} vs {a}");
}

#[test]
fn switch_drift_never_helps() {
    let base = NoiseConfig::default();
    let noisy = NoiseConfig {
        splitting_drift_sigma: 0.15,
        ..base.clone()
    };
    let sim = SimulationOptions::default();
    let (a, b) = (
        mean_raw_fidelity(&base, RUNS, &sim),
        mean_raw_fidelity(&noisy, RUNS, &sim),
    );
    assert!(b < a, "{b} vs {a}");
}

#[test]
fn accidentals_never_help() {
    let base = NoiseConfig::default();
    let noisy = NoiseConfig {
        accidental_fraction: 0.08,
        ..base.clone()
    };
    let sim = SimulationOptions::default();
    let (a, b) = (
        mean_raw_fidelity(&base, RUNS, &sim),
        mean_raw_fidelity(&noisy, RUNS, &sim),
    );
    assert!(b < a, "{b} vs {a}");
}

#[test]
fn measured_regime_lands_in_band() {
    let f = mean_raw_fidelity(
        &NoiseConfig::measured_regime(),
        10,
        &SimulationOptions::default(),
    );
    assert!((0.90..=0.99).contains(&f), "{f}");
}

fn truth_table(chi: &ProcessMatrix, basis: CnotBasis) -> [[f64; 4]; 4] {
    std::array::from_fn(|row| {
        let (c, t) = basis.encode(row / 2, row % 2);
        let input = ComplexMatrix::projector(&kron_vec(&c.amplitudes(), &t.amplitudes()));
        // the fitted map is not exactly trace preserving; rows are renormalised below
        let out = DensityMatrix::from_psd(&chi.apply(&input)).unwrap();
        let p: [f64; 4] = std::array::from_fn(|k| out.expectation(&basis.outcome_ket(k)));
        let total: f64 = p.iter().sum();
        p.map(|x| x / total)
    })
}

#[test]
fn hofmann_bounds_sandwich_process_fidelity() {
    // logic fidelities and F_p both taken from the same reconstructed gate
    let config = NoiseConfig {
        phase_sigma_rad: 0.2,
        splitting_drift_sigma: 0.05,
        ..NoiseConfig::default()
    };
    for seed in 0..20 {
        let (_, qpt) = run_qpt(
            &config.clone().with_seed(seed),
            &SimulationOptions::default(),
            QptMethod::default(),
        )
        .unwrap();
        let chi = &qpt.chi_raw.process;
        let f_zz = logic_fidelity(
            &truth_table(chi, CnotBasis::Zz),
            &CnotBasis::Zz.ideal_permutation(),
        )
        .unwrap();
        let f_xx = logic_fidelity(
            &truth_table(chi, CnotBasis::Xx),
            &CnotBasis::Xx.ideal_permutation(),
        )
        .unwrap();
        let (lo, hi) = hofmann_bounds(f_zz, f_xx).unwrap();
        assert!(lo <= hi);
        assert!(
            lo <= qpt.raw_fidelity + 1e-9 && qpt.raw_fidelity <= hi + 1e-9,
            "seed {seed}: {lo} <= {} <= {hi}",
            qpt.raw_fidelity
        );
    }
}

#[test]
fn noisy_truth_tables_stay_below_one() {
    let config = NoiseConfig::measured_regime();
    for seed in 0..5 {
        let c = run_cnot_tables(
            &config.clone().with_seed(seed),
            &SimulationOptions::default(),
        )
        .unwrap();
        assert!(c.bounds.0 <= c.bounds.1);
        assert!(c.fidelity_zz < 1.0 && c.fidelity_xx < 1.0);
        assert!(c.fidelity_zz > 0.85 && c.fidelity_xx > 0.85, "{c:?}");
    }
}
