//! Time-bin qubits and the post-selected controlled-phase gate built from a
//! 2×2 electro-optic switch.
//!
//! The switch acts as a beam splitter whose angle depends on the time slot.
//! The control photon enters port A and the target photon port B. A
//! mode-dependent attenuator scales the `t₁` amplitude of both photons by
//! `1/√3` before the switch. Keeping only coincidences between output ports
//! C and D yields the gate with success probability 1/9.
//!
//! Two-photon amplitudes are propagated mode by mode. Terms where both photons
//! end up in the same output mode pair are summed coherently, which is what
//! produces the sign flip on `|t₂t₂⟩`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::qcore::matrix::{c, kron_vec, r, ComplexMatrix, C64, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Port {
    A,
    B,
    C,
    D,
}

/// Switch input port.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputPort {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimeBin {
    T1,
    T2,
}

impl TimeBin {
    pub const ALL: [TimeBin; 2] = [TimeBin::T1, TimeBin::T2];

    pub fn index(self) -> usize {
        match self {
            TimeBin::T1 => 0,
            TimeBin::T2 => 1,
        }
    }
}

/// A single optical mode: a port at a time slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mode {
    pub port: Port,
    pub time: TimeBin,
}

/// `n₁|t₁⟩ + n₂ e^{iφ}|t₂⟩` with non-negative `n₁, n₂` and `n₁² + n₂² = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeBinQubit {
    n1: f64,
    n2: f64,
    phi: f64,
}

impl TimeBinQubit {
    pub fn new(n1: f64, n2: f64, phi: f64) -> Result<Self> {
        if !(n1 >= 0.0 && n2 >= 0.0) || !phi.is_finite() {
            return Err(Error::InvalidState(format!(
                "time-bin amplitudes must be non-negative, got ({n1}, {n2}, φ={phi})"
            )));
        }
        if (n1 * n1 + n2 * n2 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!(
                "time-bin qubit not normalised: n1²+n2² = {}",
                n1 * n1 + n2 * n2
            )));
        }
        Ok(Self { n1, n2, phi })
    }

    /// Builds the qubit from an arbitrary amplitude pair, dropping global phase and norm.
    pub fn from_amplitudes(a: [C64; 2]) -> Result<Self> {
        let norm = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidState("zero amplitude pair".into()));
        }
        let (n1, n2) = (a[0].norm() / norm, a[1].norm() / norm);
        let phi = if n1 == 0.0 || n2 == 0.0 {
            0.0
        } else {
            a[1].arg() - a[0].arg()
        };
        let scale = (n1 * n1 + n2 * n2).sqrt();
        Ok(Self {
            n1: n1 / scale,
            n2: n2 / scale,
            phi,
        })
    }

    pub fn n1(&self) -> f64 {
        self.n1
    }

    pub fn n2(&self) -> f64 {
        self.n2
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Same amplitudes with the relative phase shifted by `delta`.
    pub fn with_phase_offset(&self, delta: f64) -> Self {
        Self {
            phi: self.phi + delta,
            ..*self
        }
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        [r(self.n1), C64::from_polar(self.n2, self.phi)]
    }

    pub fn is_superposition(&self) -> bool {
        self.n1 > 1e-12 && self.n2 > 1e-12
    }
}

/// The six single-qubit states used for preparation and measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StandardKet {
    T1,
    T2,
    Plus,
    Minus,
    L,
    R,
}

impl StandardKet {
    pub const ALL: [StandardKet; 6] = [
        StandardKet::T1,
        StandardKet::T2,
        StandardKet::Plus,
        StandardKet::Minus,
        StandardKet::L,
        StandardKet::R,
    ];

    pub fn label(self) -> &'static str {
        match self {
            StandardKet::T1 => "t1",
            StandardKet::T2 => "t2",
            StandardKet::Plus => "plus",
            StandardKet::Minus => "minus",
            StandardKet::L => "L",
            StandardKet::R => "R",
        }
    }

    pub fn amplitudes(self) -> [C64; 2] {
        let h = FRAC_1_SQRT_2;
        match self {
            StandardKet::T1 => [r(1.0), ZERO],
            StandardKet::T2 => [ZERO, r(1.0)],
            StandardKet::Plus => [r(h), r(h)],
            StandardKet::Minus => [r(h), r(-h)],
            StandardKet::L => [r(h), c(0.0, h)],
            StandardKet::R => [r(h), c(0.0, -h)],
        }
    }

    pub fn qubit(self) -> TimeBinQubit {
        let h = FRAC_1_SQRT_2;
        let (n1, n2, phi) = match self {
            StandardKet::T1 => (1.0, 0.0, 0.0),
            StandardKet::T2 => (0.0, 1.0, 0.0),
            StandardKet::Plus => (h, h, 0.0),
            StandardKet::Minus => (h, h, PI),
            StandardKet::L => (h, h, PI / 2.0),
            StandardKet::R => (h, h, -PI / 2.0),
        };
        TimeBinQubit { n1, n2, phi }
    }

    pub fn is_superposition(self) -> bool {
        !matches!(self, StandardKet::T1 | StandardKet::T2)
    }
}

impl fmt::Display for StandardKet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for StandardKet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StandardKet::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

/// Interferometer phase difference of the switch in each time slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwitchSetting {
    pub theta_t1: f64,
    pub theta_t2: f64,
}

impl SwitchSetting {
    pub fn new(theta_t1: f64, theta_t2: f64) -> Result<Self> {
        if !theta_t1.is_finite() || !theta_t2.is_finite() {
            return Err(Error::Config("switch angles must be finite".into()));
        }
        Ok(Self { theta_t1, theta_t2 })
    }

    /// Pass `t₁`, one-third beam splitter on `t₂`.
    pub fn cphase() -> Self {
        Self {
            theta_t1: 0.0,
            theta_t2: 2.0 * (1.0 / 3f64.sqrt()).acos(),
        }
    }

    pub fn theta(&self, time: TimeBin) -> f64 {
        match time {
            TimeBin::T1 => self.theta_t1,
            TimeBin::T2 => self.theta_t2,
        }
    }
}

/// Amplitudes on output ports (C, D) for a photon entering `input` at `time`.
pub fn switch_map(setting: &SwitchSetting, input: InputPort, time: TimeBin) -> [C64; 2] {
    let half = setting.theta(time) / 2.0;
    let (s, co) = half.sin_cos();
    match input {
        InputPort::A => [r(co), r(-s)],
        InputPort::B => [r(s), r(co)],
    }
}

/// Mode-dependent attenuation merged into preparation: `(n₁/√3, n₂e^{iφ})`.
pub fn apply_mda(q: &TimeBinQubit) -> [C64; 2] {
    let a = q.amplitudes();
    [a[0] / 3f64.sqrt(), a[1]]
}

/// Two-photon state in the Fock basis. Keys are mode pairs in canonical
/// (sorted) order; the amplitude of a doubly occupied mode carries the
/// bosonic √2.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TwoPhotonState {
    amplitudes: BTreeMap<(Mode, Mode), C64>,
}

impl TwoPhotonState {
    fn add(&mut self, key: (Mode, Mode), amp: C64) {
        let key = if key.0 <= key.1 { key } else { (key.1, key.0) };
        *self.amplitudes.entry(key).or_insert(ZERO) += amp;
    }

    pub fn amplitudes(&self) -> &BTreeMap<(Mode, Mode), C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, a: Mode, b: Mode) -> C64 {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.amplitudes.get(&key).copied().unwrap_or(ZERO)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|z| z.norm_sqr()).sum()
    }

    /// Coincidence sector (one photon in C, one in D) as a two-qubit amplitude
    /// vector ordered (t₁t₁, t₁t₂, t₂t₁, t₂t₂); the C photon is the first qubit.
    pub fn coincidence_amplitudes(&self) -> [C64; 4] {
        let mut out = [ZERO; 4];
        for tc in TimeBin::ALL {
            for td in TimeBin::ALL {
                out[2 * tc.index() + td.index()] = self.amplitude(
                    Mode {
                        port: Port::C,
                        time: tc,
                    },
                    Mode {
                        port: Port::D,
                        time: td,
                    },
                );
            }
        }
        out
    }
}

/// Propagates a control photon in port A and a target photon in port B through
/// the switch. Amplitude pairs are over (t₁, t₂) and need not be normalised.
pub fn propagate(control: [C64; 2], target: [C64; 2], setting: &SwitchSetting) -> TwoPhotonState {
    let outputs = |amps: [C64; 2], port: InputPort| -> Vec<(Mode, C64)> {
        let mut v = Vec::with_capacity(4);
        for time in TimeBin::ALL {
            let a = amps[time.index()];
            if a == ZERO {
                continue;
            }
            let [to_c, to_d] = switch_map(setting, port, time);
            v.push((
                Mode {
                    port: Port::C,
                    time,
                },
                a * to_c,
            ));
            v.push((
                Mode {
                    port: Port::D,
                    time,
                },
                a * to_d,
            ));
        }
        v
    };
    let ctrl = outputs(control, InputPort::A);
    let tgt = outputs(target, InputPort::B);
    let mut state = TwoPhotonState::default();
    for &(m, a) in &ctrl {
        for &(n, b) in &tgt {
            let amp = a * b;
            // c†_m c†_m |0⟩ = √2 |2_m⟩
            let amp = if m == n { amp * 2f64.sqrt() } else { amp };
            state.add((m, n), amp);
        }
    }
    state
}

/// Post-selected output of the gate for a given switch setting, before renormalisation.
pub fn postselected_amplitudes(
    control: &TimeBinQubit,
    target: &TimeBinQubit,
    setting: &SwitchSetting,
    with_mda: bool,
) -> [C64; 4] {
    let prep = |q: &TimeBinQubit| {
        if with_mda {
            apply_mda(q)
        } else {
            q.amplitudes()
        }
    };
    propagate(prep(control), prep(target), setting).coincidence_amplitudes()
}

/// Renormalised post-selected state and its success probability.
#[derive(Clone, Debug, PartialEq)]
pub struct GateOutput {
    pub state: [C64; 4],
    pub success_prob: f64,
}

impl GateOutput {
    fn from_raw(raw: [C64; 4]) -> Self {
        let p: f64 = raw.iter().map(|z| z.norm_sqr()).sum();
        let s = if p > 0.0 { 1.0 / p.sqrt() } else { 0.0 };
        Self {
            state: raw.map(|z| z * s),
            success_prob: p,
        }
    }
}

/// The post-selected C-Phase gate with MDA and the nominal switch setting.
pub fn cphase_postselected(control: &TimeBinQubit, target: &TimeBinQubit) -> GateOutput {
    GateOutput::from_raw(postselected_amplitudes(
        control,
        target,
        &SwitchSetting::cphase(),
        true,
    ))
}

/// The post-selected gate for an arbitrary switch setting.
pub fn gate_postselected(
    control: &TimeBinQubit,
    target: &TimeBinQubit,
    setting: &SwitchSetting,
) -> GateOutput {
    GateOutput::from_raw(postselected_amplitudes(control, target, setting, true))
}

/// Single Kraus operator `K` of the post-selected gate: for product inputs the
/// raw coincidence amplitudes equal `K · (control ⊗ target)`.
/// Columns are obtained by propagating the four computational basis inputs.
pub fn postselection_operator(setting: &SwitchSetting, with_mda: bool) -> ComplexMatrix {
    let mut k = ComplexMatrix::zeros(4, 4);
    for (col, (a, b)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
        let basis = |i: usize| {
            let mut v = [ZERO; 2];
            v[i] = r(1.0);
            v
        };
        let (ca, cb) = (basis(a), basis(b));
        let prep = |v: [C64; 2]| {
            if with_mda {
                [v[0] / 3f64.sqrt(), v[1]]
            } else {
                v
            }
        };
        let out = propagate(prep(ca), prep(cb), setting).coincidence_amplitudes();
        for (row, z) in out.into_iter().enumerate() {
            k[(row, col)] = z;
        }
    }
    k
}

/// diag(1, 1, 1, −1) in the (t₁t₁, t₁t₂, t₂t₁, t₂t₂) basis.
pub fn ideal_cphase_unitary() -> ComplexMatrix {
    ComplexMatrix::from_real_diag(&[1.0, 1.0, 1.0, -1.0])
}

/// Rotates a state so its first non-negligible amplitude is real and non-negative.
pub fn canonical_phase(state: &[C64]) -> Vec<C64> {
    match state.iter().find(|z| z.norm() > 1e-12) {
        Some(first) => {
            let rot = first.conj() / first.norm();
            state.iter().map(|z| z * rot).collect()
        }
        None => state.to_vec(),
    }
}

/// |⟨a|b⟩|² for normalised kets.
pub fn overlap_sqr(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.conj() * y)
        .sum::<C64>()
        .norm_sqr()
}

/// Complementary bases used to run the C-Phase gate as a CNOT.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CnotBasis {
    /// Control in {t₁, t₂}, target in {+, −}.
    Zz,
    /// Control in {+, −}, target in {t₁, t₂}; realises the reversed CNOT.
    Xx,
}

impl CnotBasis {
    fn control_kets(self) -> [StandardKet; 2] {
        match self {
            CnotBasis::Zz => [StandardKet::T1, StandardKet::T2],
            CnotBasis::Xx => [StandardKet::Plus, StandardKet::Minus],
        }
    }

    fn target_kets(self) -> [StandardKet; 2] {
        match self {
            CnotBasis::Zz => [StandardKet::Plus, StandardKet::Minus],
            CnotBasis::Xx => [StandardKet::T1, StandardKet::T2],
        }
    }

    /// Kets encoding logical `(control, target)` bits.
    pub fn encode(self, control_bit: usize, target_bit: usize) -> (StandardKet, StandardKet) {
        (
            self.control_kets()[control_bit],
            self.target_kets()[target_bit],
        )
    }

    fn decode(self, control: StandardKet, target: StandardKet) -> Result<(usize, usize)> {
        let c = self.control_kets().iter().position(|&k| k == control);
        let t = self.target_kets().iter().position(|&k| k == target);
        match (c, t) {
            (Some(c), Some(t)) => Ok((c, t)),
            _ => Err(Error::InvalidEncoding(format!(
                "({control}, {target}) is not a valid {self:?} input"
            ))),
        }
    }

    /// Logical output index for each logical input in the ideal gate.
    pub fn ideal_permutation(self) -> [usize; 4] {
        match self {
            // control flips target
            CnotBasis::Zz => [0, 1, 3, 2],
            // target flips control
            CnotBasis::Xx => [0, 3, 2, 1],
        }
    }

    /// Product measurement kets for logical outcome index `k = 2c + t`.
    pub fn outcome_ket(self, k: usize) -> Vec<C64> {
        let (c, t) = self.encode(k / 2, k % 2);
        kron_vec(&c.amplitudes(), &t.amplitudes())
    }
}

impl FromStr for CnotBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zz" => Ok(CnotBasis::Zz),
            "xx" => Ok(CnotBasis::Xx),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

/// Runs the post-selected gate on encoded inputs and returns the probabilities
/// of the four logical outcomes measured in the same basis.
pub fn cnot_via_bases(
    control: StandardKet,
    target: StandardKet,
    basis: CnotBasis,
) -> Result<[f64; 4]> {
    basis.decode(control, target)?;
    let out = cphase_postselected(&control.qubit(), &target.qubit());
    Ok(outcome_probabilities(&out.state, basis))
}

/// Projects a two-qubit pure state onto the four logical outcomes of `basis`.
pub fn outcome_probabilities(state: &[C64], basis: CnotBasis) -> [f64; 4] {
    let mut p = [0.0; 4];
    for (k, pk) in p.iter_mut().enumerate() {
        *pk = overlap_sqr(&basis.outcome_ket(k), state);
    }
    let total: f64 = p.iter().sum();
    p.map(|x| x / total)
}

/// 4×4 truth table (rows: logical inputs, columns: outcomes) for the lossless gate.
pub fn cnot_truth_table(basis: CnotBasis) -> [[f64; 4]; 4] {
    let mut table = [[0.0; 4]; 4];
    for (k, row) in table.iter_mut().enumerate() {
        let (c, t) = basis.encode(k / 2, k % 2);
        *row = cnot_via_bases(c, t, basis).expect("encoded labels are valid");
    }
    table
}
