use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use timebin::expsim::{simulate_gate_experiment, NoiseConfig, SimulationOptions};
use timebin::pipeline::{analyse_qpt, simulate_qpt, QptMethod};
use timebin::tomo::{
    compose_processes, deconvolve_input_imperfection, mle_state, qpt_mle_from_counts, MleOptions,
    ProcessMatrix, ProjectorSet, TomographyInputSet,
};

fn bench_qst(c: &mut Criterion) {
    let runs = simulate_gate_experiment(
        &TomographyInputSet::standard(),
        &NoiseConfig::default(),
        &SimulationOptions::default(),
    )
    .unwrap();
    let projs = ProjectorSet::overcomplete(2).unwrap();
    let obs = runs[15].observations().unwrap();
    c.bench_function("qst_mle_two_qubit", |b| {
        b.iter(|| mle_state(black_box(&obs), &projs, &MleOptions::default()).unwrap())
    });
}

fn bench_qpt(c: &mut Criterion) {
    let set = TomographyInputSet::standard();
    let runs =
        simulate_gate_experiment(&set, &NoiseConfig::default(), &SimulationOptions::default())
            .unwrap();
    let projs = ProjectorSet::overcomplete(2).unwrap();
    let obs: Vec<_> = runs.iter().map(|r| r.observations().unwrap()).collect();
    let mut g = c.benchmark_group("qpt");
    g.sample_size(10);
    g.bench_function("joint_likelihood", |b| {
        b.iter(|| {
            qpt_mle_from_counts(black_box(&obs), &set, &projs, &MleOptions::default()).unwrap()
        })
    });
    let data = simulate_qpt(&NoiseConfig::default(), &SimulationOptions::default()).unwrap();
    g.bench_function("full_analysis", |b| {
        b.iter(|| {
            analyse_qpt(
                black_box(&data.runs),
                &data.chars,
                &data.projectors,
                &MleOptions::default(),
                QptMethod::default(),
            )
            .unwrap()
        })
    });
    g.finish();
}

fn bench_simulation(c: &mut Criterion) {
    let set = TomographyInputSet::standard();
    let config = NoiseConfig::measured_regime();
    c.bench_function("simulate_gate_experiment", |b| {
        b.iter(|| {
            simulate_gate_experiment(&set, black_box(&config), &SimulationOptions::default())
                .unwrap()
        })
    });
}

fn bench_deconvolution(c: &mut Criterion) {
    let ideal = ProcessMatrix::cphase_ideal();
    let prep = ProcessMatrix::identity(4).unwrap();
    let total = compose_processes(&ideal, &prep).unwrap();
    c.bench_function("deconvolve", |b| {
        b.iter(|| deconvolve_input_imperfection(black_box(&total), &prep).unwrap())
    });
}

criterion_group!(
    benches,
    bench_qst,
    bench_qpt,
    bench_simulation,
    bench_deconvolution
);
criterion_main!(benches);
