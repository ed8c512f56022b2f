//! Random fixtures for unit tests.

use rand::Rng;

use crate::qcore::matrix::{c, ComplexMatrix, C64};

pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, n, |_, _| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    (&g + &g.adjoint()).scale_real(0.5)
}

pub fn random_ket(dim: usize, rng: &mut impl Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..dim)
        .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// Random unit-trace PSD matrix of the given rank.
pub fn random_density(dim: usize, rank: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, rank, |_, _| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let m = g.matmul(&g.adjoint());
    let tr = m.trace().re;
    m.hermitian_part().scale_real(1.0 / tr)
}
