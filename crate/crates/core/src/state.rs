//! Statevector simulation primitives for 1–3 qubit circuits.
//!
//! Qubit 0 is the leftmost tensor factor and the most significant bit of a
//! basis-state index, matching top-to-bottom wire order in circuit diagrams.

use crate::error::{Error, Result};
use crate::linalg::{C64, ComplexMatrix, ONE, ZERO};

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// |00…0⟩ on `qubits` qubits.
    pub fn zero_state(qubits: usize) -> Self {
        let mut amps = vec![ZERO; 1 << qubits];
        amps[0] = ONE;
        Self { qubits, amps }
    }

    pub fn from_amplitudes(qubits: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 1 << qubits {
            return Err(Error::Domain(format!(
                "state needs {} amplitudes, got {}",
                1 << qubits,
                amps.len()
            )));
        }
        Ok(Self { qubits, amps })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Applies a 2^m × 2^m gate to the ordered target qubits; `targets[0]` is
    /// the most significant bit of the gate's own index space.
    pub fn apply_gate(&mut self, gate: &ComplexMatrix, targets: &[usize]) -> Result<()> {
        let m = targets.len();
        if gate.rows() != (1 << m) || gate.cols() != (1 << m) {
            return Err(Error::Domain(format!(
                "gate on {m} targets must be {0}x{0}, got {1}x{2}",
                1 << m,
                gate.rows(),
                gate.cols()
            )));
        }
        for (i, &t) in targets.iter().enumerate() {
            if t >= self.qubits {
                return Err(Error::Domain(format!("target qubit {t} out of range")));
            }
            if targets[..i].contains(&t) {
                return Err(Error::Domain(format!("duplicate target qubit {t}")));
            }
        }
        // Bit position (from the least significant end) of each target.
        let shifts: Vec<usize> = targets.iter().map(|&t| self.qubits - 1 - t).collect();
        let target_mask: usize = shifts.iter().map(|&s| 1usize << s).sum();
        let dim = self.amps.len();
        let sub = 1usize << m;
        let mut gathered = vec![ZERO; sub];
        for base in 0..dim {
            if base & target_mask != 0 {
                continue;
            }
            for g in 0..sub {
                let mut idx = base;
                for (bit, &s) in shifts.iter().enumerate() {
                    if g & (1 << (m - 1 - bit)) != 0 {
                        idx |= 1 << s;
                    }
                }
                gathered[g] = self.amps[idx];
            }
            for g in 0..sub {
                let mut acc = ZERO;
                for h in 0..sub {
                    acc += gate[(g, h)] * gathered[h];
                }
                let mut idx = base;
                for (bit, &s) in shifts.iter().enumerate() {
                    if g & (1 << (m - 1 - bit)) != 0 {
                        idx |= 1 << s;
                    }
                }
                self.amps[idx] = acc;
            }
        }
        Ok(())
    }

    /// Marginal probabilities of measuring the given qubits (in the given
    /// order) in the computational basis. Index bit 0 of the returned table
    /// corresponds to `measured[0]` as the most significant bit.
    pub fn measure_probabilities(&self, measured: &[usize]) -> Vec<f64> {
        let m = measured.len();
        let shifts: Vec<usize> = measured.iter().map(|&t| self.qubits - 1 - t).collect();
        let mut probs = vec![0.0; 1 << m];
        for (idx, amp) in self.amps.iter().enumerate() {
            let p = amp.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let mut out = 0usize;
            for (bit, &s) in shifts.iter().enumerate() {
                if idx & (1 << s) != 0 {
                    out |= 1 << (m - 1 - bit);
                }
            }
            probs[out] += p;
        }
        probs
    }
}
