use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::qcore::{kron_vec, ComplexMatrix, DensityMatrix, C64};
use crate::timebin::StandardKet;

/// One measurement setting: a product of per-qubit kets. Labels join the
/// per-qubit ket labels with `:`, e.g. `t1:plus`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Setting(pub Vec<StandardKet>);

impl Setting {
    pub fn ket(&self) -> Vec<C64> {
        self.0
            .iter()
            .map(|k| k.amplitudes().to_vec())
            .reduce(|a, b| kron_vec(&a, &b))
            .expect("at least one qubit")
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::projector(&self.ket())
    }

    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<&str> = self.0.iter().map(|k| k.label()).collect();
        f.write_str(&labels.join(":"))
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kets = s
            .split(':')
            .map(str::parse)
            .collect::<Result<Vec<StandardKet>>>()
            .map_err(|_| Error::UnknownLabel(s.to_string()))?;
        if !(1..=2).contains(&kets.len()) {
            return Err(Error::UnknownLabel(s.to_string()));
        }
        Ok(Setting(kets))
    }
}

/// Ordered rank-1 product projectors.
#[derive(Clone, Debug)]
pub struct ProjectorSet {
    n_qubits: usize,
    settings: Vec<Setting>,
    projectors: Vec<ComplexMatrix>,
}

const MINIMAL_KETS: [StandardKet; 4] = [
    StandardKet::T1,
    StandardKet::T2,
    StandardKet::Plus,
    StandardKet::L,
];

impl ProjectorSet {
    pub fn from_settings(settings: Vec<Setting>) -> Result<Self> {
        let n_qubits = settings
            .first()
            .map(Setting::n_qubits)
            .ok_or_else(|| Error::InvalidDimension("empty projector set".into()))?;
        if settings.iter().any(|s| s.n_qubits() != n_qubits) {
            return Err(Error::InvalidDimension(
                "projector settings mix qubit counts".into(),
            ));
        }
        let projectors = settings.iter().map(Setting::projector).collect();
        Ok(Self {
            n_qubits,
            settings,
            projectors,
        })
    }

    fn products(n_qubits: usize, kets: &[StandardKet]) -> Result<Self> {
        let mut settings: Vec<Vec<StandardKet>> = vec![vec![]];
        for _ in 0..n_qubits {
            settings = settings
                .into_iter()
                .flat_map(|prefix| {
                    kets.iter().map(move |&k| {
                        let mut s = prefix.clone();
                        s.push(k);
                        s
                    })
                })
                .collect();
        }
        Self::from_settings(settings.into_iter().map(Setting).collect())
    }

    /// All products of {t₁, t₂, +, −, L, R}: 6 settings per qubit, 36 for two.
    pub fn overcomplete(n_qubits: usize) -> Result<Self> {
        Self::products(n_qubits, &StandardKet::ALL)
    }

    /// Products of {t₁, t₂, +, L}: the minimal informationally complete set.
    pub fn minimal(n_qubits: usize) -> Result<Self> {
        Self::products(n_qubits, &MINIMAL_KETS)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn settings(&self) -> &[Setting] {
        &self.settings
    }

    pub fn projectors(&self) -> &[ComplexMatrix] {
        &self.projectors
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        let s: Setting = label.parse().ok()?;
        self.settings.iter().position(|x| *x == s)
    }
}

/// Born-rule probabilities `Tr(P_k ρ)`.
pub fn measurement_probabilities(rho: &DensityMatrix, projs: &ProjectorSet) -> Result<Vec<f64>> {
    probabilities_of(rho.matrix(), projs)
}

pub(crate) fn probabilities_of(rho: &ComplexMatrix, projs: &ProjectorSet) -> Result<Vec<f64>> {
    if rho.rows() != projs.dim() {
        return Err(Error::DimensionMismatch {
            expected: projs.dim(),
            found: rho.rows(),
        });
    }
    Ok(projs
        .projectors()
        .iter()
        .map(|p| p.trace_product(rho).re.clamp(0.0, 1.0))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_density;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sizes_and_labels() {
        let p = ProjectorSet::overcomplete(2).unwrap();
        assert_eq!(p.len(), 36);
        assert_eq!(p.settings()[0].to_string(), "t1:t1");
        assert_eq!(p.settings()[35].to_string(), "R:R");
        assert_eq!(p.index_of("plus:L"), Some(2 * 6 + 4));
        assert_eq!(ProjectorSet::minimal(2).unwrap().len(), 16);
        assert_eq!(ProjectorSet::overcomplete(1).unwrap().len(), 6);
        assert!("t1:bogus".parse::<Setting>().is_err());
        assert!("t1:t1:t1".parse::<Setting>().is_err());
    }

    #[test]
    fn projectors_are_rank_one() {
        for p in ProjectorSet::overcomplete(2).unwrap().projectors() {
            assert!(p.is_hermitian(1e-14));
            assert!(p.matmul(p).max_abs_diff(p) < 1e-14);
            assert!((p.trace().re - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn single_qubit_examples() {
        let projs = ProjectorSet::overcomplete(1).unwrap();
        let rho = DensityMatrix::pure(&StandardKet::T1.amplitudes()).unwrap();
        let p = measurement_probabilities(&rho, &projs).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15);
        assert!((p[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_qubit_probabilities_match_direct_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = DensityMatrix::new(random_density(4, 4, &mut rng)).unwrap();
        let projs = ProjectorSet::overcomplete(2).unwrap();
        let p = measurement_probabilities(&rho, &projs).unwrap();
        for (s, pk) in projs.settings().iter().zip(&p) {
            // ⟨ψ|ρ|ψ⟩ computed with an explicit matrix product
            let psi = s.ket();
            let direct = ComplexMatrix::projector(&psi)
                .matmul(rho.matrix())
                .trace()
                .re;
            assert!((direct - pk).abs() < 1e-12);
            assert!((rho.expectation(&psi) - pk).abs() < 1e-12);
        }
        // three complete bases per qubit
        assert!((p.iter().sum::<f64>() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        assert!(matches!(
            measurement_probabilities(&rho, &ProjectorSet::overcomplete(2).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
