//! Lower-triangular parameterisation `M = T†T / Tr(T†T)` of unit-trace PSD matrices.
//!
//! A `d×d` factor is packed into `d²` reals: the `d` (real) diagonal entries
//! first, then the strictly lower entries in row-major order as `(re, im)`
//! pairs.

use super::matrix::{c, r, ComplexMatrix, C64};
use crate::error::{Error, Result};

pub fn param_count(dim: usize) -> usize {
    dim * dim
}

/// Unpacks the lower-triangular factor `T`.
pub fn factor_from_params(t: &[f64], dim: usize) -> ComplexMatrix {
    assert_eq!(
        t.len(),
        param_count(dim),
        "expected {} parameters",
        dim * dim
    );
    let mut m = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = r(t[i]);
    }
    let mut k = dim;
    for i in 1..dim {
        for j in 0..i {
            m[(i, j)] = c(t[k], t[k + 1]);
            k += 2;
        }
    }
    m
}

/// Packs the lower triangle of `factor`; entries above the diagonal and the
/// imaginary parts of the diagonal are ignored.
pub fn params_from_factor(factor: &ComplexMatrix) -> Vec<f64> {
    let dim = factor.rows();
    let mut t = Vec::with_capacity(param_count(dim));
    for i in 0..dim {
        t.push(factor[(i, i)].re);
    }
    for i in 1..dim {
        for j in 0..i {
            t.push(factor[(i, j)].re);
            t.push(factor[(i, j)].im);
        }
    }
    t
}

/// `T†T` without normalisation.
pub fn gram(factor: &ComplexMatrix) -> ComplexMatrix {
    factor.adjoint().matmul(factor)
}

/// `T†T / Tr(T†T)` for the packed factor.
pub fn unit_trace_from_params(t: &[f64], dim: usize) -> Result<ComplexMatrix> {
    let a = gram(&factor_from_params(t, dim));
    let tr = a.trace().re;
    if !(tr >= 1e-300) || !tr.is_finite() {
        return Err(Error::ZeroParameter(tr));
    }
    Ok(a.hermitian_part().scale_real(1.0 / tr))
}

/// Lower-triangular `T` with `T†T = m` for a positive definite `m`.
///
/// Flipping both indices turns this into an ordinary Cholesky factorisation:
/// with `J` the exchange matrix, `J m J = L L†` and `T = J L† J`.
pub fn factor_positive_definite(m: &ComplexMatrix) -> Option<ComplexMatrix> {
    let n = m.rows();
    let flipped = ComplexMatrix::from_fn(n, n, |i, j| m[(n - 1 - i, n - 1 - j)]);
    let l = cholesky_lower(&flipped)?;
    Some(ComplexMatrix::from_fn(n, n, |i, j| {
        l[(n - 1 - j, n - 1 - i)].conj()
    }))
}

fn cholesky_lower(a: &ComplexMatrix) -> Option<ComplexMatrix> {
    let n = a.rows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = r(d);
        for i in j + 1..n {
            let mut s: C64 = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

/// Packed parameters for a PSD seed. The seed is mixed with `floor · I / d`
/// (relative to its trace) so the factorisation exists for rank-deficient input.
pub fn params_from_psd(m: &ComplexMatrix, floor: f64) -> Vec<f64> {
    let n = m.rows();
    let tr = m.trace().re.max(1e-300);
    let mut seed = m.hermitian_part().scale_real(1.0 / tr);
    for i in 0..n {
        seed[(i, i)] += r(floor / n as f64);
    }
    let factor = factor_positive_definite(&seed)
        .or_else(|| {
            // one more nudge for badly rounded input
            for i in 0..n {
                seed[(i, i)] += r(1e-8);
            }
            factor_positive_definite(&seed)
        })
        .unwrap_or_else(|| ComplexMatrix::identity(n));
    params_from_factor(&factor)
}

/// Gradient with respect to the packed parameters of a function of `A = T†T`,
/// given its Hermitian gradient `g` (so that `df = Re Tr(g dA)`).
pub fn chain_rule(factor: &ComplexMatrix, g: &ComplexMatrix) -> Vec<f64> {
    let dim = factor.rows();
    let tg = factor.matmul(g);
    let mut out = Vec::with_capacity(param_count(dim));
    for i in 0..dim {
        out.push(2.0 * tg[(i, i)].re);
    }
    for i in 1..dim {
        for j in 0..i {
            out.push(2.0 * tg[(i, j)].re);
            out.push(2.0 * tg[(i, j)].im);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_density;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pack_roundtrip() {
        let t: Vec<f64> = (0..16).map(|k| k as f64 * 0.1 - 0.7).collect();
        assert_eq!(params_from_factor(&factor_from_params(&t, 4)), t);
    }

    #[test]
    fn factorises_positive_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for dim in [2, 4, 16] {
            let rho = random_density(dim, dim, &mut rng);
            let t = factor_positive_definite(&rho).expect("full rank");
            for i in 0..dim {
                for j in i + 1..dim {
                    assert_eq!(t[(i, j)], crate::qcore::matrix::ZERO);
                }
            }
            assert!(gram(&t).max_abs_diff(&rho) < 1e-12);
        }
    }

    #[test]
    fn chain_rule_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dim = 3;
        let t: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = crate::testutil::random_hermitian(dim, &mut rng);
        let f = |p: &[f64]| gram(&factor_from_params(p, dim)).trace_product(&g).re;
        let analytic = chain_rule(&factor_from_params(&t, dim), &g);
        for k in 0..t.len() {
            let h = 1e-6;
            let mut up = t.clone();
            let mut dn = t.clone();
            up[k] += h;
            dn[k] -= h;
            let fd = (f(&up) - f(&dn)) / (2.0 * h);
            assert!(
                (fd - analytic[k]).abs() < 1e-7,
                "param {k}: {fd} vs {}",
                analytic[k]
            );
        }
    }
}
