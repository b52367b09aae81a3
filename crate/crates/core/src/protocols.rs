//! The recognition protocols: binary {X, Z} for both parities of k, the
//! three-qubit ternary {X, Y, Z} amplifier for odd k, and general orthogonal
//! axes via frame conjugation. Everything is simulated exactly on
//! statevectors; closed forms live alongside as independent routes.

use std::collections::BTreeMap;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bloch::{frame_unitary, rotation_gate, BlochHamiltonian};
use crate::error::{Error, Result};
use crate::linalg::{c, cr, ComplexMatrix, ONE, ZERO};
use crate::qsp::{
    complete_partner, even_phase_sequence, layer_strip, odd_target, phase_z, PhaseSequence,
};
use crate::state::StateVector;

/// Fejér form of the X-recognition error, f_k(θ) = [sin((k+1)θ)/((k+1)sinθ)]².
///
/// θ ∈ {0, π} are removable singularities with value 1.
pub fn error_polynomial(k: usize, theta: f64) -> f64 {
    let s = theta.sin();
    if s.abs() < 1e-6 {
        return 1.0;
    }
    let r = ((k + 1) as f64 * theta).sin() / ((k + 1) as f64 * s);
    r * r
}

/// The same quantity from the exponential sum Σ (k−|l|+1)/(k+1)² e^{2ilθ};
/// an independent route kept for cross-checking.
pub fn error_polynomial_sum(k: usize, theta: f64) -> f64 {
    let kk = (k + 1) as f64;
    let mut acc = ZERO;
    for l in -(k as i64)..=k as i64 {
        let w = (k as f64 - l.unsigned_abs() as f64 + 1.0) / (kk * kk);
        acc += c(0.0, 2.0 * l as f64 * theta).exp() * w;
    }
    acc.re
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GateKind {
    Hadamard,
    CNot,
    CSwap,
    Toffoli,
    /// e^{iZφ}.
    PhaseZ(f64),
    /// Standard rotation e^{−iXφ/2}.
    RotX(f64),
    /// Standard rotation e^{−iZφ/2}.
    RotZ(f64),
    /// The ternary recombination gate, parametrized by the phase sums.
    UPhase { psi_x: f64, psi_y: f64 },
    /// SU(2) frame change mapping (n0, n1) onto (X, Z), or its inverse.
    Frame { n0: BlochHamiltonian, n1: BlochHamiltonian, dagger: bool },
}

impl GateKind {
    pub fn qubits(&self) -> usize {
        match self {
            GateKind::CNot => 2,
            GateKind::CSwap | GateKind::Toffoli => 3,
            _ => 1,
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let m = match self {
            GateKind::Hadamard => {
                let s = cr(std::f64::consts::FRAC_1_SQRT_2);
                ComplexMatrix::from_rows(&[&[s, s], &[s, -s]])
            }
            GateKind::CNot => {
                let mut m = ComplexMatrix::identity(4);
                m[(2, 2)] = ZERO;
                m[(3, 3)] = ZERO;
                m[(2, 3)] = ONE;
                m[(3, 2)] = ONE;
                m
            }
            GateKind::CSwap => {
                // Control plus two swapped targets: 3 qubits.
                let mut m = ComplexMatrix::identity(8);
                m[(5, 5)] = ZERO;
                m[(6, 6)] = ZERO;
                m[(5, 6)] = ONE;
                m[(6, 5)] = ONE;
                m
            }
            GateKind::Toffoli => {
                // Controls are the first two targets, the last is flipped.
                let mut m = ComplexMatrix::identity(8);
                m[(6, 6)] = ZERO;
                m[(7, 7)] = ZERO;
                m[(6, 7)] = ONE;
                m[(7, 6)] = ONE;
                m
            }
            GateKind::PhaseZ(phi) => phase_z(*phi),
            GateKind::RotX(phi) => rotation_gate(&BlochHamiltonian::x(), phi / 2.0),
            GateKind::RotZ(phi) => rotation_gate(&BlochHamiltonian::z(), phi / 2.0),
            GateKind::UPhase { psi_x, psi_y } => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let e = |t: f64| c(t.cos(), t.sin()) * s;
                ComplexMatrix::from_rows(&[
                    &[e(-psi_y), e(*psi_x)],
                    &[e(-psi_x), -e(*psi_y)],
                ])
            }
            GateKind::Frame { n0, n1, dagger } => {
                let u = frame_unitary(n0, n1)?;
                if *dagger {
                    u.dagger()
                } else {
                    u
                }
            }
        };
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CircuitElement {
    Gate { kind: GateKind, targets: Vec<usize> },
    /// Placeholder for one query to the unknown unitary, acting on `target`.
    Slot { target: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolCircuit {
    qubits: usize,
    slots: usize,
    elements: Vec<CircuitElement>,
    measured: Vec<usize>,
    decision: BTreeMap<String, String>,
}

impl ProtocolCircuit {
    pub fn new(
        qubits: usize,
        elements: Vec<CircuitElement>,
        measured: Vec<usize>,
        decision: BTreeMap<String, String>,
    ) -> Result<Self> {
        let slots = elements
            .iter()
            .filter(|e| matches!(e, CircuitElement::Slot { .. }))
            .count();
        if decision.len() != 1 << measured.len() {
            return Err(Error::Domain(format!(
                "decision map must cover all {} outcomes, has {}",
                1 << measured.len(),
                decision.len()
            )));
        }
        Ok(Self { qubits, slots, elements, measured, decision })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn elements(&self) -> &[CircuitElement] {
        &self.elements
    }

    pub fn measured(&self) -> &[usize] {
        &self.measured
    }

    pub fn decision(&self) -> &BTreeMap<String, String> {
        &self.decision
    }

    /// Runs the circuit with every slot filled by `slot_gate` and returns
    /// the final state.
    pub fn run(&self, slot_gate: &ComplexMatrix) -> Result<StateVector> {
        let gates = vec![slot_gate.clone(); self.slots];
        self.run_with_slot_gates(&gates)
    }

    /// Runs the circuit with the j-th slot (in time order) filled by
    /// `slot_gates[j]`. The fill-ins need not be unitary.
    pub fn run_with_slot_gates(&self, slot_gates: &[ComplexMatrix]) -> Result<StateVector> {
        if slot_gates.len() != self.slots {
            return Err(Error::Domain(format!(
                "expected {} slot gates, got {}",
                self.slots,
                slot_gates.len()
            )));
        }
        let mut state = StateVector::zero_state(self.qubits);
        let mut next = 0;
        for el in &self.elements {
            match el {
                CircuitElement::Gate { kind, targets } => {
                    state.apply_gate(&kind.to_matrix()?, targets)?;
                }
                CircuitElement::Slot { target } => {
                    state.apply_gate(&slot_gates[next], &[*target])?;
                    next += 1;
                }
            }
        }
        Ok(state)
    }
}

fn outcome_label(index: usize, bits: usize) -> String {
    (0..bits)
        .map(|b| {
            if index & (1 << (bits - 1 - b)) != 0 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

/// Exact outcome distribution with every slot replaced by e^{−iHθ}.
pub fn outcome_distribution(
    circuit: &ProtocolCircuit,
    hidden: &BlochHamiltonian,
    theta: f64,
) -> Result<BTreeMap<String, f64>> {
    let state = circuit.run(&rotation_gate(hidden, theta))?;
    let probs = state.measure_probabilities(circuit.measured());
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::Numeric(format!("probabilities sum to {total}")));
    }
    Ok(probs
        .iter()
        .enumerate()
        .map(|(i, &p)| (outcome_label(i, circuit.measured().len()), p))
        .collect())
}

/// Distribution over hypothesis guesses after applying the decision map.
pub fn guess_distribution(
    circuit: &ProtocolCircuit,
    hidden: &BlochHamiltonian,
    theta: f64,
) -> Result<BTreeMap<String, f64>> {
    let outcomes = outcome_distribution(circuit, hidden, theta)?;
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    for (label, p) in outcomes {
        let guess = circuit
            .decision
            .get(&label)
            .ok_or_else(|| Error::Domain(format!("no decision for outcome {label}")))?;
        *out.entry(guess.clone()).or_insert(0.0) += p;
    }
    Ok(out)
}

fn odd_phases(k: usize) -> Result<PhaseSequence> {
    let p = odd_target(k)?;
    let q = complete_partner(&p)?;
    layer_strip(&p, &q)
}

/// The single-qubit {X, Z} recognition circuit: a Z-phase QSP chain for odd
/// k, the reflected X-phase chain with a central Rz(π) for even k.
/// Outcome 0 decides Z, outcome 1 decides X.
pub fn build_binary_circuit(k: usize) -> Result<ProtocolCircuit> {
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    let mut elements = Vec::new();
    if k % 2 == 1 {
        let seq = odd_phases(k)?;
        // Time order is right-to-left in e^{iZφ_0} Π_j e^{−iHθ} e^{iZφ_j}.
        elements.push(CircuitElement::Gate {
            kind: GateKind::PhaseZ(seq.phases[k]),
            targets: vec![0],
        });
        for j in (0..k).rev() {
            elements.push(CircuitElement::Slot { target: 0 });
            elements.push(CircuitElement::Gate {
                kind: GateKind::PhaseZ(seq.phases[j]),
                targets: vec![0],
            });
        }
    } else {
        let seq = even_phase_sequence(k)?;
        let n = k / 2;
        elements.push(CircuitElement::Gate {
            kind: GateKind::RotX(-seq.phases[0]),
            targets: vec![0],
        });
        for j in 1..=n {
            elements.push(CircuitElement::Slot { target: 0 });
            elements.push(CircuitElement::Gate {
                kind: GateKind::RotX(-seq.phases[j]),
                targets: vec![0],
            });
        }
        elements.push(CircuitElement::Gate {
            kind: GateKind::RotZ(std::f64::consts::PI),
            targets: vec![0],
        });
        for j in (0..=n).rev() {
            elements.push(CircuitElement::Gate {
                kind: GateKind::RotX(seq.phases[j]),
                targets: vec![0],
            });
            if j > 0 {
                elements.push(CircuitElement::Slot { target: 0 });
            }
        }
    }
    let decision = BTreeMap::from([
        ("0".to_string(), "Z".to_string()),
        ("1".to_string(), "X".to_string()),
    ]);
    ProtocolCircuit::new(1, elements, vec![0], decision)
}

/// The three-qubit ternary {X, Y, Z} circuit of the odd-k amplifier.
///
/// Runs the {X,Z} phase chain on one branch and the {Y,Z} chain (with
/// ψ_y built so Q_y = iQ_x*) on the other, with the slot shuttled between
/// branches by Fredkin gates; measures qubits 0 and 2, deciding
/// 00/10 → Z, 01 → Y, 11 → X.
pub fn build_ternary_circuit(k: usize) -> Result<ProtocolCircuit> {
    if k % 2 == 0 {
        return Err(Error::Domain(format!(
            "ternary protocol is defined for odd k, got {k}"
        )));
    }
    let seq = odd_phases(k)?;
    let psi_x = seq.phases.clone();
    let mut psi_y: Vec<f64> = psi_x.iter().map(|p| -p).collect();
    psi_y[0] += std::f64::consts::PI;
    let sum_x: f64 = psi_x.iter().sum();
    let sum_y: f64 = psi_y.iter().sum();

    let gate = |kind: GateKind, targets: Vec<usize>| CircuitElement::Gate { kind, targets };
    let mut elements = vec![
        gate(GateKind::Hadamard, vec![0]),
        gate(GateKind::CNot, vec![0, 1]),
        gate(GateKind::CNot, vec![0, 2]),
        gate(GateKind::PhaseZ(psi_x[k]), vec![1]),
        gate(GateKind::PhaseZ(psi_y[k]), vec![2]),
    ];
    for j in (0..k).rev() {
        elements.push(gate(GateKind::CSwap, vec![0, 1, 2]));
        elements.push(CircuitElement::Slot { target: 2 });
        elements.push(gate(GateKind::CSwap, vec![0, 1, 2]));
        elements.push(gate(GateKind::PhaseZ(psi_x[j]), vec![1]));
        elements.push(gate(GateKind::PhaseZ(psi_y[j]), vec![2]));
    }
    elements.push(gate(GateKind::CSwap, vec![0, 1, 2]));
    elements.push(gate(GateKind::CNot, vec![0, 2]));
    elements.push(gate(GateKind::Hadamard, vec![0]));
    elements.push(gate(GateKind::UPhase { psi_x: sum_x, psi_y: sum_y }, vec![1]));
    elements.push(gate(GateKind::Toffoli, vec![1, 2, 0]));

    let decision = BTreeMap::from([
        ("00".to_string(), "Z".to_string()),
        ("10".to_string(), "Z".to_string()),
        ("01".to_string(), "Y".to_string()),
        ("11".to_string(), "X".to_string()),
    ]);
    ProtocolCircuit::new(3, elements, vec![0, 2], decision)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProtocolKind {
    Binary,
    Ternary,
}

/// Closed-form optimal average success probability.
pub fn average_success(kind: ProtocolKind, k: usize) -> Result<Ratio<i64>> {
    let ki = k as i64;
    match kind {
        ProtocolKind::Binary => {
            if k == 0 {
                return Err(Error::Domain("k must be positive".into()));
            }
            Ok(Ratio::new(2 * ki + 1, 2 * ki + 2))
        }
        ProtocolKind::Ternary => {
            if k % 2 == 0 {
                return Err(Error::Domain("ternary success needs odd k".into()));
            }
            Ok(Ratio::new(3 * ki + 1, 3 * ki + 3))
        }
    }
}

/// Composite Simpson over [0, π] on a 2049-point uniform grid.
pub fn simpson_average<F: FnMut(f64) -> Result<f64>>(mut f: F) -> Result<f64> {
    const N: usize = 2048;
    let h = std::f64::consts::PI / N as f64;
    let mut acc = 0.0;
    for i in 0..=N {
        let w = if i == 0 || i == N {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * f(i as f64 * h)?;
    }
    Ok(acc * h / 3.0 / std::f64::consts::PI)
}

/// Average success by quadrature of the simulated guess distribution,
/// uniform prior over hypotheses and over θ ∈ (0, π].
pub fn average_success_quadrature(kind: ProtocolKind, k: usize) -> Result<f64> {
    let (circuit, hypotheses): (ProtocolCircuit, Vec<(&str, BlochHamiltonian)>) = match kind {
        ProtocolKind::Binary => (
            build_binary_circuit(k)?,
            vec![("X", BlochHamiltonian::x()), ("Z", BlochHamiltonian::z())],
        ),
        ProtocolKind::Ternary => (
            build_ternary_circuit(k)?,
            vec![
                ("X", BlochHamiltonian::x()),
                ("Y", BlochHamiltonian::y()),
                ("Z", BlochHamiltonian::z()),
            ],
        ),
    };
    simpson_average(|theta| {
        let mut s = 0.0;
        for (label, axis) in &hypotheses {
            let guesses = guess_distribution(&circuit, axis, theta)?;
            s += guesses.get(*label).copied().unwrap_or(0.0);
        }
        Ok(s / hypotheses.len() as f64)
    })
}

/// Closed-form variance of the binary success probability over θ,
/// k(2k+1)/(12(k+1)³).
pub fn success_variance(k: usize) -> Result<f64> {
    if k == 0 || k % 2 == 0 {
        return Err(Error::Domain("variance closed form needs odd k".into()));
    }
    let kf = k as f64;
    Ok(kf * (2.0 * kf + 1.0) / (12.0 * (kf + 1.0).powi(3)))
}

/// Variance by quadrature of the simulated per-θ success probability.
pub fn success_variance_quadrature(k: usize) -> Result<f64> {
    let circuit = build_binary_circuit(k)?;
    let axes = [("X", BlochHamiltonian::x()), ("Z", BlochHamiltonian::z())];
    let succ = |theta: f64| -> Result<f64> {
        let mut s = 0.0;
        for (label, axis) in &axes {
            s += guess_distribution(&circuit, axis, theta)?
                .get(*label)
                .copied()
                .unwrap_or(0.0);
        }
        Ok(s / 2.0)
    };
    let mean = simpson_average(succ)?;
    simpson_average(|theta| Ok((succ(theta)? - mean).powi(2)))
}

/// θ_j = jπ/(k+1), j = 1..k: the angles where the X-recognition error
/// vanishes and the pair is perfectly distinguished.
pub fn perfect_discrimination_angles(k: usize) -> Vec<f64> {
    (1..=k)
        .map(|j| j as f64 * std::f64::consts::PI / (k + 1) as f64)
        .collect()
}

/// Monte Carlo outcome counts, deterministic for a given seed.
pub fn sample_shots(
    circuit: &ProtocolCircuit,
    hidden: &BlochHamiltonian,
    theta: f64,
    shots: u64,
    seed: u64,
) -> Result<BTreeMap<String, u64>> {
    let dist = outcome_distribution(circuit, hidden, theta)?;
    let labels: Vec<&String> = dist.keys().collect();
    let mut cdf = Vec::with_capacity(labels.len());
    let mut acc = 0.0;
    for label in &labels {
        acc += dist[*label];
        cdf.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<String, u64> =
        labels.iter().map(|l| ((*l).clone(), 0)).collect();
    for _ in 0..shots {
        let r: f64 = rng.gen();
        let idx = cdf.partition_point(|&edge| edge < r).min(labels.len() - 1);
        *counts.get_mut(labels[idx]).unwrap() += 1;
    }
    Ok(counts)
}

/// Recognition of {n0·σ, n1·σ} for an orthogonal axis pair: each slot is
/// conjugated by the frame unitary, reducing to the {X, Z} circuit.
pub fn general_axis_binary(
    n0: &BlochHamiltonian,
    n1: &BlochHamiltonian,
    k: usize,
) -> Result<ProtocolCircuit> {
    if n0.dot(n1).abs() > 1e-10 {
        return Err(Error::Domain(
            "general_axis_binary needs orthogonal axes".into(),
        ));
    }
    let base = build_binary_circuit(k)?;
    let trivial = n0.dot(&BlochHamiltonian::x()) > 1.0 - 1e-14
        && n1.dot(&BlochHamiltonian::z()) > 1.0 - 1e-14;
    if trivial {
        return Ok(base);
    }
    let mut elements = Vec::new();
    for el in base.elements() {
        match el {
            CircuitElement::Slot { target } => {
                elements.push(CircuitElement::Gate {
                    kind: GateKind::Frame { n0: *n0, n1: *n1, dagger: true },
                    targets: vec![*target],
                });
                elements.push(CircuitElement::Slot { target: *target });
                elements.push(CircuitElement::Gate {
                    kind: GateKind::Frame { n0: *n0, n1: *n1, dagger: false },
                    targets: vec![*target],
                });
            }
            g => elements.push(g.clone()),
        }
    }
    ProtocolCircuit::new(
        base.qubits(),
        elements,
        base.measured().to_vec(),
        base.decision().clone(),
    )
}

/// A labelled hypothesis: a Bloch axis with its prior probability.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Hypothesis {
    pub label: String,
    pub axis: BlochHamiltonian,
    pub prior: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HypothesisSet {
    hypotheses: Vec<Hypothesis>,
}

impl HypothesisSet {
    pub fn new(hypotheses: Vec<Hypothesis>) -> Result<Self> {
        let total: f64 = hypotheses.iter().map(|h| h.prior).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("priors sum to {total}")));
        }
        if hypotheses.iter().any(|h| h.prior < 0.0) {
            return Err(Error::Domain("negative prior".into()));
        }
        Ok(Self { hypotheses })
    }

    /// Uniform {X, Z}.
    pub fn xz() -> Self {
        Self {
            hypotheses: vec![
                Hypothesis { label: "X".into(), axis: BlochHamiltonian::x(), prior: 0.5 },
                Hypothesis { label: "Z".into(), axis: BlochHamiltonian::z(), prior: 0.5 },
            ],
        }
    }

    /// Uniform {X, Y, Z}.
    pub fn xyz() -> Self {
        let third = 1.0 / 3.0;
        Self {
            hypotheses: vec![
                Hypothesis { label: "X".into(), axis: BlochHamiltonian::x(), prior: third },
                Hypothesis { label: "Y".into(), axis: BlochHamiltonian::y(), prior: third },
                Hypothesis { label: "Z".into(), axis: BlochHamiltonian::z(), prior: third },
            ],
        }
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    pub fn pairwise_orthogonal(&self, tol: f64) -> bool {
        for (i, a) in self.hypotheses.iter().enumerate() {
            for b in &self.hypotheses[i + 1..] {
                if a.axis.dot(&b.axis).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn error_polynomial_anchors() {
        assert!((error_polynomial(1, PI / 4.0) - 0.5).abs() < 1e-12);
        assert!((error_polynomial(3, PI / 4.0)).abs() < 1e-12);
        assert!((error_polynomial(7, 1e-9) - 1.0).abs() < 1e-12);
        for k in 1..=6 {
            for i in 0..30 {
                let theta = PI * (i as f64 + 0.3) / 30.0;
                let a = error_polynomial(k, theta);
                let b = error_polynomial_sum(k, theta);
                assert!((a - b).abs() < 1e-11, "k={k} θ={theta}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn binary_one_side_is_perfect() {
        // Odd k never misreports Z, even k never misreports X.
        for k in [1usize, 2, 3, 4] {
            let circ = build_binary_circuit(k).unwrap();
            assert_eq!(circ.slots(), k);
            let (axis, outcome) = if k % 2 == 1 {
                (BlochHamiltonian::z(), "0")
            } else {
                (BlochHamiltonian::x(), "1")
            };
            for i in 0..25 {
                let theta = PI * (i as f64 + 0.5) / 25.0;
                let d = outcome_distribution(&circ, &axis, theta).unwrap();
                assert!((d[outcome] - 1.0).abs() < 1e-10, "k={k} θ={theta}");
            }
        }
    }

    #[test]
    fn binary_error_matches_fejer() {
        // The fallible side misreports with probability f_k(θ).
        for k in [1usize, 2, 3, 6] {
            let circ = build_binary_circuit(k).unwrap();
            let (axis, wrong) = if k % 2 == 1 {
                (BlochHamiltonian::x(), "0")
            } else {
                (BlochHamiltonian::z(), "1")
            };
            for i in 0..40 {
                let theta = PI * (i as f64 + 0.5) / 40.0;
                let d = outcome_distribution(&circ, &axis, theta).unwrap();
                let f = error_polynomial(k, theta);
                assert!((d[wrong] - f).abs() < 1e-9, "k={k} θ={theta}: {} vs {f}", d[wrong]);
            }
        }
    }

    #[test]
    fn ternary_distributions() {
        for k in [1usize, 3] {
            let circ = build_ternary_circuit(k).unwrap();
            assert_eq!(circ.slots(), k);
            for i in 0..20 {
                let theta = PI * (i as f64 + 0.5) / 20.0;
                let want = 1.0 - error_polynomial(k, theta);
                let dx = outcome_distribution(&circ, &BlochHamiltonian::x(), theta).unwrap();
                assert!((dx["11"] - want).abs() < 1e-9, "X k={k} θ={theta}: {}", dx["11"]);
                let dy = outcome_distribution(&circ, &BlochHamiltonian::y(), theta).unwrap();
                assert!((dy["01"] - want).abs() < 1e-9, "Y k={k} θ={theta}: {}", dy["01"]);
                let dz = outcome_distribution(&circ, &BlochHamiltonian::z(), theta).unwrap();
                assert!((dz["00"] + dz["10"] - 1.0).abs() < 1e-10, "Z k={k} θ={theta}");
            }
        }
    }

    #[test]
    fn closed_forms_match_quadrature() {
        for k in [1usize, 2, 3] {
            let cf = average_success(ProtocolKind::Binary, k).unwrap();
            let cf = *cf.numer() as f64 / *cf.denom() as f64;
            let quad = average_success_quadrature(ProtocolKind::Binary, k).unwrap();
            assert!((cf - quad).abs() < 1e-6, "binary k={k}: {cf} vs {quad}");
        }
        let cf = average_success(ProtocolKind::Ternary, 1).unwrap();
        let quad = average_success_quadrature(ProtocolKind::Ternary, 1).unwrap();
        assert!((*cf.numer() as f64 / *cf.denom() as f64 - quad).abs() < 1e-6);
    }

    #[test]
    fn variance_anchors() {
        assert!((success_variance(1).unwrap() - 1.0 / 32.0).abs() < 1e-15);
        assert!((success_variance(3).unwrap() - 7.0 / 256.0).abs() < 1e-15);
        let quad = success_variance_quadrature(1).unwrap();
        assert!((quad - 1.0 / 32.0).abs() < 1e-6);
    }

    #[test]
    fn discrimination_angles_kill_error() {
        for k in [1usize, 3, 5] {
            let angles = perfect_discrimination_angles(k);
            assert_eq!(angles.len(), k);
            let circ = build_binary_circuit(k).unwrap();
            for theta in angles {
                assert!(error_polynomial(k, theta) <= 1e-12);
                let d = outcome_distribution(&circ, &BlochHamiltonian::x(), theta).unwrap();
                assert!(d["1"] >= 1.0 - 1e-10);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_and_consistent() {
        let circ = build_binary_circuit(1).unwrap();
        let z = sample_shots(&circ, &BlochHamiltonian::z(), 0.9, 1000, 7).unwrap();
        assert_eq!(z["0"], 1000);
        let a = sample_shots(&circ, &BlochHamiltonian::x(), PI / 3.0, 100_000, 42).unwrap();
        let b = sample_shots(&circ, &BlochHamiltonian::x(), PI / 3.0, 100_000, 42).unwrap();
        assert_eq!(a, b);
        // f_1(π/3) = 1/4; 4σ band around 25000.
        let sigma = (100_000.0f64 * 0.25 * 0.75).sqrt();
        assert!((a["0"] as f64 - 25_000.0).abs() < 4.0 * sigma);
    }

    #[test]
    fn general_axis_reduces_and_matches() {
        let xz = general_axis_binary(&BlochHamiltonian::x(), &BlochHamiltonian::z(), 1).unwrap();
        assert_eq!(&xz, &build_binary_circuit(1).unwrap());

        // (z, x): hidden n0 = z should behave like the X hypothesis.
        let circ = general_axis_binary(&BlochHamiltonian::z(), &BlochHamiltonian::x(), 1).unwrap();
        for i in 0..10 {
            let theta = PI * (i as f64 + 0.5) / 10.0;
            let d = outcome_distribution(&circ, &BlochHamiltonian::z(), theta).unwrap();
            assert!((d["0"] - error_polynomial(1, theta)).abs() < 1e-9);
            let d = outcome_distribution(&circ, &BlochHamiltonian::x(), theta).unwrap();
            assert!((d["0"] - 1.0).abs() < 1e-10);
        }

        let y = BlochHamiltonian::y();
        let circ = general_axis_binary(&y, &BlochHamiltonian::z(), 3).unwrap();
        let mut avg = simpson_average(|theta| {
            let dy = outcome_distribution(&circ, &y, theta)?;
            let dz = outcome_distribution(&circ, &BlochHamiltonian::z(), theta)?;
            Ok(0.5 * (dy["1"] + dz["0"]))
        })
        .unwrap();
        avg = (avg - 7.0 / 8.0).abs();
        assert!(avg < 1e-6);
    }

    #[test]
    fn hypothesis_sets() {
        assert!(HypothesisSet::xz().pairwise_orthogonal(1e-12));
        assert!(HypothesisSet::xyz().pairwise_orthogonal(1e-12));
        assert!(HypothesisSet::new(vec![Hypothesis {
            label: "X".into(),
            axis: BlochHamiltonian::x(),
            prior: 0.7,
        }])
        .is_err());
    }
}
