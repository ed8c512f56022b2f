//! Maximum-likelihood fitting over unit-trace PSD matrices.
//!
//! The estimate is parameterised as `X = T†T / Tr(T†T)` with `T` lower
//! triangular, and the objective is maximised by limited-memory BFGS with an
//! Armijo backtracking line search. Only strictly improving steps are
//! accepted, so the recorded objective trace is non-decreasing.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::qcore::cholesky::{chain_rule, factor_from_params, gram, params_from_psd};
use crate::qcore::linalg::nearest_psd;
use crate::qcore::ComplexMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Stop when the parameter step falls below this.
    pub step_tolerance: f64,
    /// Stop when the relative objective change stays below this.
    pub relative_tolerance: f64,
    /// Weight of the maximally mixed component added to the seed.
    pub seed_floor: f64,
    pub memory: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            step_tolerance: 1e-8,
            relative_tolerance: 1e-10,
            seed_floor: 1e-9,
            memory: 10,
        }
    }
}

/// Result of a converged fit.
#[derive(Clone, Debug)]
pub struct MleFit {
    /// Unit-trace PSD estimate.
    pub estimate: ComplexMatrix,
    pub objective: f64,
    /// Objective value after the seed and after every accepted iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
}

/// A concave objective on unit-trace PSD matrices.
pub trait Objective {
    fn dim(&self) -> usize;
    /// Objective value, `-inf` outside its domain.
    fn value(&self, x: &ComplexMatrix) -> f64;
    /// Value and Hermitian gradient `G` with `df = Re Tr(G dX)`.
    fn value_and_gradient(&self, x: &ComplexMatrix) -> (f64, ComplexMatrix);
}

/// One group of measurements sharing an unknown overall rate.
#[derive(Clone, Debug)]
struct Group {
    effects: Vec<ComplexMatrix>,
    weights: Vec<f64>,
    durations: Vec<f64>,
    total_weight: f64,
    /// Σ_k τ_k E_k
    exposure: ComplexMatrix,
}

/// Poisson log-likelihood with the rate of each group profiled out:
/// `Σ_g [Σ_k n_k log(τ_k p_k) − N_g log Σ_k τ_k p_k]`, `p_k = Tr(E_k X)`.
///
/// With equal durations and a constant `Σ_k p_k` this is the multinomial
/// likelihood `Σ_k n_k log p_k` up to a constant.
#[derive(Clone, Debug)]
pub struct PoissonLikelihood {
    dim: usize,
    groups: Vec<Group>,
}

impl PoissonLikelihood {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            groups: Vec::new(),
        }
    }

    /// Adds a group. Settings with zero duration are dropped.
    pub fn add_group(
        &mut self,
        effects: &[ComplexMatrix],
        weights: &[f64],
        durations: &[f64],
    ) -> Result<()> {
        if effects.len() != weights.len() || effects.len() != durations.len() {
            return Err(Error::DimensionMismatch {
                expected: effects.len(),
                found: weights.len().min(durations.len()),
            });
        }
        let mut group = Group {
            effects: Vec::new(),
            weights: Vec::new(),
            durations: Vec::new(),
            total_weight: 0.0,
            exposure: ComplexMatrix::zeros(self.dim, self.dim),
        };
        for ((e, &n), &t) in effects.iter().zip(weights).zip(durations) {
            if e.rows() != self.dim || e.cols() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: e.rows(),
                });
            }
            if !(n >= 0.0) || !n.is_finite() {
                return Err(Error::NonFinite);
            }
            if t <= 0.0 {
                continue;
            }
            group.exposure = &group.exposure + &e.scale_real(t);
            group.effects.push(e.clone());
            group.weights.push(n);
            group.durations.push(t);
            group.total_weight += n;
        }
        if group.total_weight > 0.0 {
            self.groups.push(group);
        }
        Ok(())
    }

    pub fn total_weight(&self) -> f64 {
        self.groups.iter().map(|g| g.total_weight).sum()
    }

    fn eval(&self, x: &ComplexMatrix, mut grad: Option<&mut ComplexMatrix>) -> f64 {
        let mut f = 0.0;
        for g in &self.groups {
            let norm = g.exposure.trace_product(x).re;
            if !(norm > 0.0) {
                return f64::NEG_INFINITY;
            }
            f -= g.total_weight * norm.ln();
            for ((e, &n), &t) in g.effects.iter().zip(&g.weights).zip(&g.durations) {
                if n == 0.0 {
                    continue;
                }
                let p = e.trace_product(x).re;
                if !(p > 0.0) {
                    return f64::NEG_INFINITY;
                }
                f += n * (t * p).ln();
                if let Some(gm) = grad.as_deref_mut() {
                    *gm = &*gm + &e.scale_real(n / p);
                }
            }
            if let Some(gm) = grad.as_deref_mut() {
                *gm = &*gm - &g.exposure.scale_real(g.total_weight / norm);
            }
        }
        f
    }
}

impl Objective for PoissonLikelihood {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &ComplexMatrix) -> f64 {
        self.eval(x, None)
    }

    fn value_and_gradient(&self, x: &ComplexMatrix) -> (f64, ComplexMatrix) {
        let mut g = ComplexMatrix::zeros(self.dim, self.dim);
        let f = self.eval(x, Some(&mut g));
        (f, g.hermitian_part())
    }
}

/// `−‖X − target‖²_F`: its maximiser over unit-trace PSD matrices is the
/// Frobenius-nearest physical matrix.
#[derive(Clone, Debug)]
pub struct FrobeniusObjective {
    target: ComplexMatrix,
}

impl FrobeniusObjective {
    pub fn new(target: &ComplexMatrix) -> Self {
        Self {
            target: target.hermitian_part(),
        }
    }
}

impl Objective for FrobeniusObjective {
    fn dim(&self) -> usize {
        self.target.rows()
    }

    fn value(&self, x: &ComplexMatrix) -> f64 {
        let d = (x - &self.target).frobenius_norm();
        -d * d
    }

    fn value_and_gradient(&self, x: &ComplexMatrix) -> (f64, ComplexMatrix) {
        let diff = x - &self.target;
        let d = diff.frobenius_norm();
        (-d * d, diff.scale_real(-2.0))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Maps parameters to `(X, f, ∇_t f)`.
struct Problem<'a, O: Objective> {
    obj: &'a O,
    dim: usize,
}

impl<O: Objective> Problem<'_, O> {
    fn point(&self, t: &[f64]) -> Option<ComplexMatrix> {
        let a = gram(&factor_from_params(t, self.dim));
        let s = a.trace().re;
        if !(s > 1e-300) || !s.is_finite() {
            return None;
        }
        Some(a.hermitian_part().scale_real(1.0 / s))
    }

    fn value(&self, t: &[f64]) -> f64 {
        match self.point(t) {
            Some(x) => self.obj.value(&x),
            None => f64::NEG_INFINITY,
        }
    }

    fn value_and_gradient(&self, t: &[f64]) -> (f64, Vec<f64>) {
        let factor = factor_from_params(t, self.dim);
        let a = gram(&factor);
        let s = a.trace().re;
        let x = a.hermitian_part().scale_real(1.0 / s);
        let (f, g) = self.obj.value_and_gradient(&x);
        // X = A / Tr A  ⇒  G_A = (G − Tr(G X) I) / Tr A
        let shift = g.trace_product(&x).re;
        let mut ga = g;
        for i in 0..self.dim {
            ga[(i, i)] -= shift;
        }
        (f, chain_rule(&factor, &ga.scale_real(1.0 / s)))
    }
}

/// Seed matrix for the optimiser: nearest PSD matrix of `raw` mixed with a
/// `floor` weight of the maximally mixed state.
pub fn seed_params(raw: &ComplexMatrix, floor: f64) -> Result<Vec<f64>> {
    let psd = nearest_psd(&raw.hermitian_part())?;
    let tr = psd.trace().re;
    let psd = if tr > 1e-12 {
        psd
    } else {
        ComplexMatrix::identity(raw.rows())
    };
    Ok(params_from_psd(&psd, floor))
}

/// Maximises `obj` starting from the physical matrix nearest `seed`.
pub fn maximize(obj: &impl Objective, seed: &ComplexMatrix, opts: &MleOptions) -> Result<MleFit> {
    let dim = obj.dim();
    if seed.rows() != dim || !seed.is_square() {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: seed.rows(),
        });
    }
    let problem = Problem { obj, dim };
    let mut t = seed_params(seed, opts.seed_floor)?;
    let mut f = problem.value(&t);
    if !f.is_finite() {
        // a seed on the boundary of the domain; start from the mixed state
        t = seed_params(&ComplexMatrix::identity(dim), 0.0)?;
        f = problem.value(&t);
        if !f.is_finite() {
            return Err(Error::InvalidState(
                "objective undefined at the maximally mixed state".into(),
            ));
        }
    }

    let (_, mut grad) = problem.value_and_gradient(&t);
    // work with the negated objective: h = −f, ∇h = −grad
    let mut g: Vec<f64> = grad.iter().map(|v| -v).collect();
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut trace = vec![f];
    let mut small_changes = 0usize;

    for iter in 1..=opts.max_iterations {
        let tn = norm(&t);
        if !(0.5..=2.0).contains(&tn) {
            // the objective is scale invariant in t; keep parameters well scaled
            for v in t.iter_mut() {
                *v /= tn;
            }
            let (_, gr) = problem.value_and_gradient(&t);
            grad = gr;
            g = grad.iter().map(|v| -v).collect();
            history.clear();
        }
        if norm(&g) * norm(&t) < 1e-300 {
            return Ok(finish(&problem, &t, f, trace, iter - 1));
        }

        let mut accepted = None;
        for attempt in 0..2 {
            let dir = if attempt == 0 && !history.is_empty() {
                two_loop(&g, &history)
            } else {
                history.clear();
                g.iter().map(|v| -v).collect()
            };
            let slope = dot(&g, &dir);
            if !(slope < 0.0) || !slope.is_finite() {
                continue;
            }
            let mut alpha = if history.is_empty() {
                (0.1 * norm(&t).max(1e-3) / norm(&dir)).min(1.0)
            } else {
                1.0
            };
            for _ in 0..80 {
                let trial: Vec<f64> = t.iter().zip(&dir).map(|(a, b)| a + alpha * b).collect();
                let ft = problem.value(&trial);
                if ft.is_finite() && ft > f && -ft <= -f + 1e-4 * alpha * slope {
                    accepted = Some((trial, ft, alpha, dir.clone()));
                    break;
                }
                alpha *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
        }

        let Some((t_new, f_new, alpha, dir)) = accepted else {
            // no improving step exists along the steepest direction at this precision
            return Ok(finish(&problem, &t, f, trace, iter - 1));
        };

        let (_, grad_new) = problem.value_and_gradient(&t_new);
        let g_new: Vec<f64> = grad_new.iter().map(|v| -v).collect();
        let s: Vec<f64> = dir.iter().map(|d| alpha * d).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            history.push_back((s.clone(), y, 1.0 / sy));
            if history.len() > opts.memory {
                history.pop_front();
            }
        }

        let step = norm(&s);
        let change = (f_new - f).abs() / f_new.abs().max(1e-300);
        t = t_new;
        f = f_new;
        g = g_new;
        trace.push(f);

        if step < opts.step_tolerance {
            return Ok(finish(&problem, &t, f, trace, iter));
        }
        if change < opts.relative_tolerance {
            small_changes += 1;
            if small_changes >= 3 {
                return Ok(finish(&problem, &t, f, trace, iter));
            }
        } else {
            small_changes = 0;
        }
    }

    let best = problem
        .point(&t)
        .ok_or_else(|| Error::InvalidState("degenerate parameters".into()))?;
    Err(Error::NonConvergence {
        best: Box::new(best),
        diagnostic: format!(
            "no convergence after {} iterations; objective {f:.6e}",
            opts.max_iterations
        ),
    })
}

fn finish<O: Objective>(
    problem: &Problem<'_, O>,
    t: &[f64],
    f: f64,
    trace: Vec<f64>,
    iterations: usize,
) -> MleFit {
    let estimate = problem
        .point(t)
        .expect("accepted iterates have positive trace");
    MleFit {
        estimate,
        objective: f,
        trace,
        iterations,
    }
}

fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    let (s, y, _) = history.back().expect("non-empty history");
    let gamma = dot(s, y) / dot(y, y);
    for v in q.iter_mut() {
        *v *= gamma;
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}
