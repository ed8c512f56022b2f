//! Hermitian eigendecomposition and the projections built on it.

use nalgebra::{DMatrix, SymmetricEigen, SVD};

use super::matrix::{r, ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Relative Hermiticity tolerance shared across the crate.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues in descending order with matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEig {
    /// V · diag(f(λ)) · V†
    pub fn reassemble_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        let mapped: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let out = ComplexMatrix::from_fn(n, n, |i, j| {
            let mut acc = C64::new(0.0, 0.0);
            for (k, &l) in mapped.iter().enumerate() {
                if l != 0.0 {
                    acc += v[(i, k)] * v[(j, k)].conj() * l;
                }
            }
            acc
        });
        out.hermitian_part()
    }

    pub fn reassemble(&self) -> ComplexMatrix {
        self.reassemble_with(|l| l)
    }

    pub fn min_value(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }
}

fn check_hermitian(m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidDimension(format!(
            "expected square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::NotHermitian(m.hermiticity_error()));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix, `m = V diag(λ) V†`.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEig> {
    check_hermitian(m)?;
    let eig = SymmetricEigen::new(m.hermitian_part().to_nalgebra());
    let n = m.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEig { values, vectors })
}

/// Clips negative eigenvalues to zero.
pub fn nearest_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(m)?;
    if eig.min_value() >= 0.0 {
        return Ok(m.hermitian_part());
    }
    Ok(eig.reassemble_with(|l| l.max(0.0)))
}

/// Euclidean projection of a real vector onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            shift = candidate;
        }
    }
    v.iter().map(|&x| (x - shift).max(0.0)).collect()
}

/// Frobenius-nearest PSD matrix with unit trace.
pub fn project_to_density(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(m)?;
    let projected = project_to_simplex(&eig.values);
    let n = projected.len();
    let v = &eig.vectors;
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        projected
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 0.0)
            .map(|(k, &l)| v[(i, k)] * v[(j, k)].conj() * l)
            .sum()
    })
    .hermitian_part())
}

/// Principal square root of a PSD matrix; small negative eigenvalues are clipped.
pub fn sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(hermitian_eig(m)?.reassemble_with(|l| l.max(0.0).sqrt()))
}

/// Singular values in descending order.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let svd = SVD::new(m.to_nalgebra(), false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Moore–Penrose pseudo-inverse with relative singular value cutoff `rcond`.
/// Also returns the condition number `σ_max / σ_min` over all singular values.
pub fn pseudo_inverse(m: &ComplexMatrix, rcond: f64) -> (ComplexMatrix, f64) {
    let svd = SVD::new(m.to_nalgebra(), true, true);
    let s = &svd.singular_values;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let smin = s.iter().copied().fold(f64::INFINITY, f64::min);
    let cutoff = rcond * smax;
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let k = s.len();
    // pinv = V · diag(1/σ) · U†
    let inv = DMatrix::from_fn(m.cols(), m.rows(), |i, j| {
        let mut acc = C64::new(0.0, 0.0);
        for q in 0..k {
            if s[q] > cutoff {
                acc += vt[(q, i)].conj() * u[(j, q)].conj() / s[q];
            }
        }
        acc
    });
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    (ComplexMatrix::from_nalgebra(&inv), condition)
}

/// Real linear least squares `min ‖A x − b‖` for row-major `a` (`rows × cols`).
/// Returns the solution and the numerical rank of `A`.
pub fn real_least_squares(a: &[f64], rows: usize, cols: usize, b: &[f64]) -> (Vec<f64>, usize) {
    let am = DMatrix::from_row_slice(rows, cols, a);
    let svd = SVD::new(am, true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = 1e-10 * smax.max(1e-300);
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let bm = nalgebra::DVector::from_column_slice(b);
    let x = svd.solve(&bm, eps).expect("u and v_t computed");
    (x.iter().copied().collect(), rank)
}

/// Dense matrix inverse via the pseudo-inverse with a tight cutoff.
pub fn inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (inv, cond) = pseudo_inverse(m, 1e-13);
    if !cond.is_finite() || cond > 1e13 {
        return Err(Error::IllConditioned { condition: cond });
    }
    Ok(inv)
}

/// `m` scaled to unit trace, keeping only the Hermitian part.
pub fn normalize_trace(m: &ComplexMatrix) -> ComplexMatrix {
    let t = m.trace().re;
    m.hermitian_part().scale(r(1.0 / t))
}
