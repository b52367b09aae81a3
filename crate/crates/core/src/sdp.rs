//! A small interior-point solver for the recognition dual, the
//! general-axis sweep built on it, and a brute-force one-slot oracle.
//!
//! The dual problem is: minimize tr(V)/2^k subject to V ⪰ p_j·Ω_j for every
//! hypothesis j and V lying in the dual affine space of the strategy class.
//! The affine space here is homogeneous (the trace normalization is folded
//! into the objective), so it is the range of an orthogonal projector Π
//! built from commuting trace-and-replace differences. We minimize a
//! log-det barrier with projected Newton steps, solving each Newton system
//! by conjugate gradients inside the subspace.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bloch::BlochHamiltonian;
use crate::error::{Error, Result};
use crate::linalg::{cr, hermitian_eigenvalues, C64, ComplexMatrix};
use crate::protocols::build_binary_circuit;
use crate::tester::{
    circuit_to_tester, performance_operator, trace_and_replace, CombConstraints,
    PerformanceOperator, StrategyClass,
};

/// Lower-triangular L with L·L† = m; fails if m is not positive definite.
fn cholesky(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = m.rows();
    let mut l = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[(i, j)];
            for t in 0..j {
                s -= l[(i, t)] * l[(j, t)].conj();
            }
            if i == j {
                if s.re <= 0.0 || s.im.abs() > 1e-9 * (1.0 + s.re.abs()) {
                    return Err(Error::Numeric(format!(
                        "matrix not positive definite at pivot {i}: {s}"
                    )));
                }
                l[(i, i)] = cr(s.re.sqrt());
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Solves L·L†·X = I from a Cholesky factor.
fn cholesky_inverse(l: &ComplexMatrix) -> ComplexMatrix {
    let n = l.rows();
    let mut inv = ComplexMatrix::zeros(n, n);
    for col in 0..n {
        // Forward substitution for L y = e_col.
        let mut y = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut s = if i == col { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            for t in 0..i {
                s -= l[(i, t)] * y[t];
            }
            y[i] = s / l[(i, i)];
        }
        // Back substitution for L† x = y.
        for i in (0..n).rev() {
            let mut s = y[i];
            for t in i + 1..n {
                s -= l[(t, i)].conj() * inv[(t, col)];
            }
            inv[(i, col)] = s / l[(i, i)];
        }
    }
    inv
}

fn log_det_from_cholesky(l: &ComplexMatrix) -> f64 {
    (0..l.rows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum()
}

fn inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x.conj() * y).re)
        .sum()
}

/// Orthogonal projection onto the affine-identity subspace: each identity
/// R_left(V) = R_right(V) contributes a commuting projector I − (R_left −
/// R_right), applied in sequence.
fn project_to_dual_space(m: &ComplexMatrix, constraints: &CombConstraints) -> Result<ComplexMatrix> {
    let mut out = m.clone();
    for id in constraints.identities() {
        let left = trace_and_replace(&out, &id.left)?;
        let right = trace_and_replace(&out, &id.right)?;
        out = out.sub(&left).add(&right);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    /// Optimal average success probability.
    pub value: f64,
    /// Dual witness W̄ normalized to trace 2^k.
    pub witness: ComplexMatrix,
    /// Total Newton iterations spent.
    pub iterations: usize,
}

const MAX_NEWTON: usize = 200;
const GAP_TOL: f64 = 1e-7;
const BARRIER_GROWTH: f64 = 20.0;

/// Minimizes the certified success bound over the chosen dual strategy
/// class. `strategy` names the primal class being bounded; its dual affine
/// space supplies the subspace constraints.
pub fn solve_recognition_sdp(
    operators: &[PerformanceOperator],
    priors: &[f64],
    strategy: StrategyClass,
) -> Result<SdpSolution> {
    if operators.is_empty() || operators.len() != priors.len() {
        return Err(Error::Domain("need one prior per performance operator".into()));
    }
    let k = operators[0].k();
    if operators.iter().any(|o| o.k() != k) {
        return Err(Error::Domain("performance operators disagree on slot count".into()));
    }
    if k > 3 {
        return Err(Error::Resource("SDP solver path is limited to k ≤ 3".into()));
    }
    if (priors.iter().sum::<f64>() - 1.0).abs() > 1e-12 || priors.iter().any(|&p| p < 0.0) {
        return Err(Error::Domain("priors must be a probability vector".into()));
    }
    let dual_class = match strategy {
        StrategyClass::Seq => StrategyClass::DualSeq,
        StrategyClass::Gen => StrategyClass::DualGen,
        other => {
            return Err(Error::Domain(format!(
                "solver accepts Seq or Gen strategies, got {other:?}"
            )))
        }
    };
    let constraints = CombConstraints::new(dual_class, k)?;
    let dim = 1usize << (2 * k);
    let blocks: Vec<ComplexMatrix> = operators
        .iter()
        .zip(priors)
        .map(|(o, &p)| o.matrix().scaled(cr(p)))
        .collect();

    // Strictly feasible start: a multiple of the identity dominates every
    // block and satisfies all trace-and-replace identities.
    let alpha = blocks
        .iter()
        .map(|b| hermitian_eigenvalues(b).map(|e| e.last().copied().unwrap_or(0.0)))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0_f64, f64::max)
        + 1.0;
    let mut v = ComplexMatrix::identity(dim).scaled(cr(alpha));

    let m = blocks.len();
    let mut t = 1.0;
    let mut iterations = 0usize;
    let mut trace_log: Vec<String> = Vec::new();

    let barrier = |v: &ComplexMatrix, t: f64| -> Result<(f64, Vec<ComplexMatrix>)> {
        let mut val = t * v.trace().re;
        let mut invs = Vec::with_capacity(m);
        for b in &blocks {
            let l = cholesky(&v.sub(b))?;
            val -= log_det_from_cholesky(&l);
            invs.push(cholesky_inverse(&l));
        }
        Ok((val, invs))
    };

    loop {
        // Center for the current barrier weight.
        loop {
            let (f0, invs) = barrier(&v, t)?;
            let mut grad = ComplexMatrix::identity(dim).scaled(cr(t));
            for s in &invs {
                grad = grad.sub(s);
            }
            let grad = project_to_dual_space(&grad.hermitized(), &constraints)?;

            // Newton direction by CG on Δ ↦ Π(Σ S⁻¹ Δ S⁻¹).
            let hess = |d: &ComplexMatrix| -> Result<ComplexMatrix> {
                let mut acc = ComplexMatrix::zeros(dim, dim);
                for s in &invs {
                    acc = acc.add(&s.mul(d).mul(s));
                }
                project_to_dual_space(&acc.hermitized(), &constraints)
            };
            let mut delta = ComplexMatrix::zeros(dim, dim);
            let mut r = grad.scaled(cr(-1.0));
            let mut p = r.clone();
            let mut rs = inner(&r, &r);
            let cg_tol = rs * 1e-24;
            for _ in 0..8 * dim {
                if rs <= cg_tol {
                    break;
                }
                let hp = hess(&p)?;
                let denom = inner(&p, &hp);
                if denom <= 0.0 {
                    break;
                }
                let a = rs / denom;
                delta = delta.add(&p.scaled(cr(a)));
                r = r.sub(&hp.scaled(cr(a)));
                let rs_new = inner(&r, &r);
                p = r.add(&p.scaled(cr(rs_new / rs)));
                rs = rs_new;
            }

            // A centering residual of δ in the barrier costs only δ/t in
            // the objective, so the stop threshold scales with t.
            let decrement = -inner(&grad, &delta);
            if decrement < 1e-10 * (1.0 + t) {
                break;
            }
            // Backtracking line search keeping every block positive definite.
            let mut step = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let candidate = v.add(&delta.scaled(cr(step)));
                if let Ok((f1, _)) = barrier(&candidate, t) {
                    if f1 <= f0 - 0.01 * step * decrement {
                        v = candidate;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            iterations += 1;
            trace_log.push(format!(
                "t={t:.3e} iter={iterations} decrement={decrement:.3e} step={step:.3e}"
            ));
            if !moved {
                return Err(Error::Numeric(format!(
                    "line search stalled\n{}",
                    trace_log.join("\n")
                )));
            }
            if iterations >= MAX_NEWTON {
                return Err(Error::Numeric(format!(
                    "Newton budget of {MAX_NEWTON} exhausted\n{}",
                    trace_log.join("\n")
                )));
            }
        }
        // Barrier duality gap for m blocks of size dim.
        if (m * dim) as f64 / t <= GAP_TOL {
            break;
        }
        t *= BARRIER_GROWTH;
    }

    let trace = v.trace().re;
    let value = trace / (1u64 << k) as f64;
    let witness = v.scaled(cr((1u64 << k) as f64 / trace));
    Ok(SdpSolution { value, witness, iterations })
}

/// One row of the general-axis comparison.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub axis: [f64; 3],
    pub optimal: f64,
    pub fixed_protocol: f64,
    pub guessing: f64,
}

/// Compares, over n0 = (sin α, 0, cos α) against n1 = z, the SDP-optimal
/// recognition value with the fixed {X, Z} protocol applied unchanged, and
/// the random-guessing floor.
pub fn general_axis_sweep(k: usize, grid: usize) -> Result<Vec<SweepRow>> {
    if k != 1 && k != 3 {
        return Err(Error::Domain(format!("sweep supports k ∈ {{1, 3}}, got {k}")));
    }
    if grid < 2 {
        return Err(Error::Domain("sweep needs at least two grid points".into()));
    }
    let omega_z = performance_operator(&BlochHamiltonian::z(), k)?;
    let tester = circuit_to_tester(&build_binary_circuit(k)?)?;
    let fixed_z = tester.pair("Z", omega_z.matrix())?;
    let mut rows = Vec::with_capacity(grid);
    for i in 0..grid {
        let alpha = PI / 2.0 * i as f64 / (grid - 1) as f64;
        let axis = BlochHamiltonian::new(alpha.sin(), 0.0, alpha.cos())?;
        let omega_0 = performance_operator(&axis, k)?;
        let solution = solve_recognition_sdp(
            &[omega_0.clone(), omega_z.clone()],
            &[0.5, 0.5],
            StrategyClass::Seq,
        )?;
        let fixed = 0.5 * (tester.pair("X", omega_0.matrix())? + fixed_z);
        let row = SweepRow {
            alpha,
            axis: axis.axis(),
            optimal: solution.value,
            fixed_protocol: fixed,
            guessing: 0.5,
        };
        if row.optimal < row.fixed_protocol - 1e-6 || row.fixed_protocol < 0.5 - 1e-6 {
            return Err(Error::Numeric(format!(
                "sweep ordering violated at α={alpha}: optimal {} < fixed {} or fixed < 1/2",
                row.optimal, row.fixed_protocol
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn normalize(v: &mut [C64]) {
    let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= n;
    }
}

/// θ-averaged output of the slot applied to half of a two-qubit probe:
/// cross terms between the ±1 eigenspaces average out exactly, leaving the
/// pinched state Σ_± (I ⊗ P_±) ρ (I ⊗ P_±).
fn averaged_output(axis: &BlochHamiltonian, probe: &[C64]) -> ComplexMatrix {
    let (plus, minus) = axis.eigenbasis();
    let mut out = ComplexMatrix::zeros(4, 4);
    for evec in [plus, minus] {
        // (I ⊗ |e⟩⟨e|) |probe⟩.
        let mut pinched = vec![C64::new(0.0, 0.0); 4];
        for block in 0..2 {
            let amp = evec[0].conj() * probe[2 * block] + evec[1].conj() * probe[2 * block + 1];
            pinched[2 * block] = amp * evec[0];
            pinched[2 * block + 1] = amp * evec[1];
        }
        out.add_outer(&pinched, &pinched, 1.0);
    }
    out
}

fn helstrom_value(a0: &BlochHamiltonian, a1: &BlochHamiltonian, probe: &[C64]) -> Result<f64> {
    let rho0 = averaged_output(a0, probe);
    let rho1 = averaged_output(a1, probe);
    let diff = rho0.sub(&rho1).hermitized();
    let trace_norm: f64 = hermitian_eigenvalues(&diff)?.iter().map(|e| e.abs()).sum();
    Ok(0.5 + 0.25 * trace_norm)
}

/// Brute-force optimal one-slot discrimination of the two θ-averaged
/// evolutions: random two-qubit probes followed by a local hill climb,
/// scored by the Helstrom bound ½ + ¼‖ρ̄₀ − ρ̄₁‖₁.
pub fn helstrom_one_slot_oracle(
    axis0: &BlochHamiltonian,
    axis1: &BlochHamiltonian,
    probes: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample = |rng: &mut ChaCha8Rng| -> Vec<C64> {
        let mut v: Vec<C64> = (0..4)
            .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        normalize(&mut v);
        v
    };
    let mut best_probe = sample(&mut rng);
    let mut best = helstrom_value(axis0, axis1, &best_probe)?;
    for _ in 1..probes {
        let probe = sample(&mut rng);
        let value = helstrom_value(axis0, axis1, &probe)?;
        if value > best {
            best = value;
            best_probe = probe;
        }
    }
    let mut step = 0.1;
    while step > 1e-6 {
        let mut improved = false;
        for _ in 0..40 {
            let mut probe = best_probe.clone();
            for z in probe.iter_mut() {
                *z += C64::new(step * (rng.gen::<f64>() - 0.5), step * (rng.gen::<f64>() - 0.5));
            }
            normalize(&mut probe);
            let value = helstrom_value(axis0, axis1, &probe)?;
            if value > best {
                best = value;
                best_probe = probe;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xz_operators(k: usize) -> Vec<PerformanceOperator> {
        vec![
            performance_operator(&BlochHamiltonian::x(), k).unwrap(),
            performance_operator(&BlochHamiltonian::z(), k).unwrap(),
        ]
    }

    #[test]
    fn binary_k1_value() {
        for strategy in [StrategyClass::Seq, StrategyClass::Gen] {
            let sol = solve_recognition_sdp(&xz_operators(1), &[0.5, 0.5], strategy).unwrap();
            assert!((sol.value - 0.75).abs() < 1e-4, "{strategy:?}: {}", sol.value);
        }
    }

    #[test]
    fn binary_k2_value() {
        let sol = solve_recognition_sdp(&xz_operators(2), &[0.5, 0.5], StrategyClass::Seq).unwrap();
        assert!((sol.value - 5.0 / 6.0).abs() < 1e-4, "{}", sol.value);
    }

    #[test]
    fn identical_hypotheses_are_a_coin_flip() {
        let z = performance_operator(&BlochHamiltonian::z(), 1).unwrap();
        let sol =
            solve_recognition_sdp(&[z.clone(), z], &[0.5, 0.5], StrategyClass::Seq).unwrap();
        assert!((sol.value - 0.5).abs() < 1e-4, "{}", sol.value);
    }

    #[test]
    fn ternary_k1_value() {
        let ops = vec![
            performance_operator(&BlochHamiltonian::x(), 1).unwrap(),
            performance_operator(&BlochHamiltonian::y(), 1).unwrap(),
            performance_operator(&BlochHamiltonian::z(), 1).unwrap(),
        ];
        let third = 1.0 / 3.0;
        let sol =
            solve_recognition_sdp(&ops, &[third, third, third], StrategyClass::Seq).unwrap();
        assert!((sol.value - 2.0 / 3.0).abs() < 1e-4, "{}", sol.value);
    }

    #[test]
    fn witness_stays_in_dual_space() {
        let sol = solve_recognition_sdp(&xz_operators(2), &[0.5, 0.5], StrategyClass::Seq).unwrap();
        let constraints = CombConstraints::new(StrategyClass::DualSeq, 2).unwrap();
        for id in constraints.identities() {
            let l = trace_and_replace(&sol.witness, &id.left).unwrap();
            let r = trace_and_replace(&sol.witness, &id.right).unwrap();
            assert!(l.sub(&r).max_abs() < 1e-6, "{}", id.label);
        }
        assert!((sol.witness.trace().re - 4.0).abs() < 1e-6);
    }

    #[test]
    fn sweep_k1_anchors() {
        let rows = general_axis_sweep(1, 5).unwrap();
        let first = rows.first().unwrap();
        assert!((first.optimal - 0.5).abs() < 1e-4, "{}", first.optimal);
        assert!((first.fixed_protocol - 0.5).abs() < 1e-9);
        let last = rows.last().unwrap();
        assert!((last.optimal - 0.75).abs() < 1e-4, "{}", last.optimal);
        assert!((last.fixed_protocol - 0.75).abs() < 1e-9);
    }

    #[test]
    fn oracle_matches_sdp_on_tilted_axis() {
        let alpha = PI / 3.0;
        let tilted = BlochHamiltonian::new(alpha.sin(), 0.0, alpha.cos()).unwrap();
        let ops = vec![
            performance_operator(&tilted, 1).unwrap(),
            performance_operator(&BlochHamiltonian::z(), 1).unwrap(),
        ];
        let sol = solve_recognition_sdp(&ops, &[0.5, 0.5], StrategyClass::Seq).unwrap();
        let oracle =
            helstrom_one_slot_oracle(&tilted, &BlochHamiltonian::z(), 20_000, 7).unwrap();
        assert!((sol.value - oracle).abs() < 1e-3, "sdp {} oracle {oracle}", sol.value);
    }

    #[test]
    fn oracle_recovers_orthogonal_answer() {
        let oracle =
            helstrom_one_slot_oracle(&BlochHamiltonian::x(), &BlochHamiltonian::z(), 20_000, 3)
                .unwrap();
        assert!((oracle - 0.75).abs() < 1e-3, "{oracle}");
    }
}
