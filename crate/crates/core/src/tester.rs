//! Channel-level measurement machinery: θ-averaged Choi operators of the
//! unknown evolution, causal-structure constraint checking for the
//! strategy classes, closed-form dual optimality certificates, and
//! extraction of tester operators from concrete circuits.
//!
//! Subsystems are the 2k qubit factors of the k slot Choi spaces, labelled
//! in interleaved order I_1 O_1 I_2 O_2 … I_k O_k, so slot j (0-based) owns
//! labels 2j (input) and 2j+1 (output). Matrix indices put label 0 at the
//! most significant bit.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bloch::{rotation_gate, BlochHamiltonian};
use crate::error::{Error, Result};
use crate::linalg::{choi_vec, hermitian_min_eig, C64, ComplexMatrix, ONE};
use crate::protocols::ProtocolCircuit;
use crate::state::StateVector;

/// Dense 4^k matrices cap out here; beyond this the eigensolves dominate.
pub const MAX_SLOTS: usize = 6;

pub fn input_label(slot: usize) -> usize {
    2 * slot
}

pub fn output_label(slot: usize) -> usize {
    2 * slot + 1
}

/// tr_X(·) ⊗ I_X/d_X on the listed qubit subsystems.
pub fn trace_and_replace(m: &ComplexMatrix, systems: &[usize]) -> Result<ComplexMatrix> {
    let dim = m.rows();
    if m.cols() != dim || !dim.is_power_of_two() {
        return Err(Error::Domain(format!(
            "trace_and_replace needs a square power-of-two matrix, got {}×{}",
            m.rows(),
            m.cols()
        )));
    }
    let nq = dim.trailing_zeros() as usize;
    let mut out = m.clone();
    for &q in systems {
        if q >= nq {
            return Err(Error::Domain(format!(
                "subsystem label {q} out of range for {nq} qubits"
            )));
        }
        let bit = 1usize << (nq - 1 - q);
        let mut next = ComplexMatrix::zeros(dim, dim);
        for i in 0..dim {
            if i & bit != 0 {
                continue;
            }
            for j in 0..dim {
                if j & bit != 0 {
                    continue;
                }
                let avg = (out[(i, j)] + out[(i | bit, j | bit)]) * 0.5;
                next[(i, j)] = avg;
                next[(i | bit, j | bit)] = avg;
            }
        }
        out = next;
    }
    Ok(out)
}

fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}

/// Σ_j |j⟩_I |j⟩_O per slot, tensored k times: the unnormalized maximally
/// entangled vector of the identity channel.
pub fn identity_choi_vector(k: usize) -> Vec<C64> {
    let single = choi_vec(&ComplexMatrix::identity(2));
    let mut v = single.clone();
    for _ in 1..k {
        v = kron_vec(&v, &single);
    }
    v
}

/// |I⟩⟩⟨⟨I|^{⊗k}.
pub fn identity_choi_projector(k: usize) -> ComplexMatrix {
    let v = identity_choi_vector(k);
    let mut m = ComplexMatrix::zeros(v.len(), v.len());
    m.add_outer(&v, &v, 1.0);
    m
}

/// θ-averaged k-fold Choi operator of e^{−iHθ}: the data object every
/// strategy value tr(T·Ω) is computed against.
#[derive(Clone, Debug)]
pub struct PerformanceOperator {
    k: usize,
    axis: BlochHamiltonian,
    matrix: ComplexMatrix,
    weight_classes: Vec<Vec<usize>>,
    span: Vec<Vec<C64>>,
}

impl PerformanceOperator {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn axis(&self) -> &BlochHamiltonian {
        &self.axis
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// k-bit strings grouped by Hamming weight; class sizes are the
    /// binomial multiplicities.
    pub fn weight_classes(&self) -> &[Vec<usize>] {
        &self.weight_classes
    }

    /// The k+1 unnormalized rank-one block vectors whose outer products sum
    /// to the matrix; they span its range.
    pub fn span_vectors(&self) -> &[Vec<C64>] {
        &self.span
    }

    fn verify(&self) -> Result<()> {
        let dim = self.matrix.rows();
        if !self.matrix.is_hermitian(1e-10) {
            return Err(Error::Numeric("performance operator not Hermitian".into()));
        }
        let target = (1usize << self.k) as f64;
        let tr = self.matrix.trace();
        if (tr.re - target).abs() > 1e-8 || tr.im.abs() > 1e-8 {
            return Err(Error::Numeric(format!(
                "performance operator trace {tr} ≠ {target}"
            )));
        }
        // Dense eigensolves stop being affordable around dim 1024; beyond
        // that the min eigenvalue is computed on the range, which the block
        // vectors span by construction.
        let min = if dim <= 256 {
            hermitian_min_eig(&self.matrix)?
        } else {
            min_eig_in_span(&self.matrix, &self.span)?
        };
        if min < -1e-9 {
            return Err(Error::Numeric(format!(
                "performance operator not PSD, min eigenvalue {min}"
            )));
        }
        // Invariance under the diagonal action that defined the average:
        // conjugating every slot by e^{−iHθ} must leave each block vector,
        // and hence the matrix, fixed.
        for theta in [0.7, 2.3] {
            let factor = conjugation_factor(&rotation_gate(&self.axis, theta));
            for w in &self.span {
                let moved = apply_slotwise(&factor, w, self.k);
                let drift = moved
                    .iter()
                    .zip(w)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max);
                if drift > 1e-10 * dim as f64 {
                    return Err(Error::Numeric(
                        "performance operator not invariant under its own U(1) action".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Applies the same 4×4 factor to every slot pair of a 4^k vector, i.e. the
/// action of f^{⊗k} without materializing the 4^k × 4^k matrix.
fn apply_slotwise(f: &ComplexMatrix, v: &[C64], k: usize) -> Vec<C64> {
    let mut cur = v.to_vec();
    for l in 0..k {
        let stride = 1usize << (2 * (k - 1 - l));
        let mut next = vec![C64::new(0.0, 0.0); cur.len()];
        for base in 0..cur.len() {
            let slot = (base / stride) % 4;
            let low = base % stride;
            let high = base / (stride * 4);
            for s in 0..4 {
                let src = high * stride * 4 + s * stride + low;
                next[base] += f[(slot, s)] * cur[src];
            }
        }
        cur = next;
    }
    cur
}

/// Minimum eigenvalue of a Hermitian matrix whose range lies in the span of
/// the given vectors: project onto an orthonormal basis of the span and
/// eigensolve the small compression. Rank deficiency contributes the zero
/// eigenvalue explicitly. Falls back to the dense solve if a probe shows the
/// range actually escaping the span.
fn min_eig_in_span(m: &ComplexMatrix, span: &[Vec<C64>]) -> Result<f64> {
    let dim = m.rows();
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for v in span {
        let mut u = v.clone();
        // Two Gram–Schmidt passes keep the basis orthonormal to roundoff.
        for _ in 0..2 {
            for b in &basis {
                let ip: C64 = b.iter().zip(&u).map(|(x, y)| x.conj() * y).sum();
                for (ui, bi) in u.iter_mut().zip(b) {
                    *ui -= ip * bi;
                }
            }
        }
        let norm: f64 = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let scale: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-10 * scale.max(1.0) {
            for z in u.iter_mut() {
                *z /= norm;
            }
            basis.push(u);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..2 {
        let probe: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let image = m.matvec(&probe);
        let mut residual = image.clone();
        for b in &basis {
            let ip: C64 = b.iter().zip(&image).map(|(x, y)| x.conj() * y).sum();
            for (ri, bi) in residual.iter_mut().zip(b) {
                *ri -= ip * bi;
            }
        }
        let res: f64 = residual.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let norm: f64 = image.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if res > 1e-8 * norm.max(m.max_abs()).max(1.0) {
            return hermitian_min_eig(m);
        }
    }

    let r = basis.len();
    let mut small = ComplexMatrix::zeros(r, r);
    for (j, bj) in basis.iter().enumerate() {
        let mbj = m.matvec(bj);
        for (i, bi) in basis.iter().enumerate() {
            small[(i, j)] = bi.iter().zip(&mbj).map(|(x, y)| x.conj() * y).sum();
        }
    }
    let eigs = crate::linalg::hermitian_eigenvalues(&small.hermitized())?;
    let interior = eigs.first().copied().unwrap_or(0.0);
    Ok(if r < dim { interior.min(0.0) } else { interior })
}

/// Per-slot conjugation Ū ⊗ U matching the (input, output) Choi pairing.
fn conjugation_factor(u: &ComplexMatrix) -> ComplexMatrix {
    let mut ubar = u.clone();
    for z in ubar.data_mut() {
        *z = z.conj();
    }
    crate::linalg::kron(&ubar, u)
}

/// Analytic construction: rank-one blocks over Hamming-weight classes for
/// the z axis, conjugated into the requested eigenframe.
pub fn performance_operator(axis: &BlochHamiltonian, k: usize) -> Result<PerformanceOperator> {
    if k == 0 {
        return Err(Error::Domain("slot count must be positive".into()));
    }
    if k > MAX_SLOTS {
        return Err(Error::Resource(format!(
            "performance operator needs a dense 4^{k} matrix; limit is k ≤ {MAX_SLOTS}"
        )));
    }
    let dim = 1usize << (2 * k);
    let mut weight_classes: Vec<Vec<usize>> = vec![Vec::new(); k + 1];
    for j in 0..1usize << k {
        weight_classes[j.count_ones() as usize].push(j);
    }
    // Per-slot Choi vectors of the two eigenprojectors of the axis; for z
    // these are e₀ and e₃ and the weight vectors reduce to doubled-index
    // basis sums. Assembling block vectors directly avoids conjugating the
    // dense matrix, which would cost two 4^k-dimensional products.
    let (plus, minus) = axis.eigenbasis();
    let projector = |e: [C64; 2]| {
        let mut p = ComplexMatrix::zeros(2, 2);
        p.add_outer(&e, &e, 1.0);
        p
    };
    let slot = [choi_vec(&projector(plus)), choi_vec(&projector(minus))];
    let mut span = Vec::with_capacity(k + 1);
    let mut matrix = ComplexMatrix::zeros(dim, dim);
    for class in &weight_classes {
        let mut w = vec![C64::new(0.0, 0.0); dim];
        for &j in class {
            let mut acc = vec![ONE];
            for l in 0..k {
                let bit = (j >> (k - 1 - l)) & 1;
                acc = kron_vec(&acc, &slot[bit]);
            }
            for (wi, ai) in w.iter_mut().zip(&acc) {
                *wi += ai;
            }
        }
        matrix.add_outer(&w, &w, 1.0);
        span.push(w);
    }
    let matrix = matrix.hermitized();
    let op = PerformanceOperator { k, axis: *axis, matrix, weight_classes, span };
    op.verify()?;
    Ok(op)
}

/// Trapezoid average of |U_H(θ/2)⟩⟩⟨⟨·|^{⊗k} over the 2π period; the
/// independent cross-check for the analytic construction.
pub fn performance_operator_quadrature(
    axis: &BlochHamiltonian,
    k: usize,
    points: usize,
) -> Result<ComplexMatrix> {
    if k == 0 || k > MAX_SLOTS {
        return Err(Error::Resource(format!("quadrature limited to 1 ≤ k ≤ {MAX_SLOTS}")));
    }
    let dim = 1usize << (2 * k);
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for m in 0..points {
        let theta = 2.0 * PI * m as f64 / points as f64;
        let v = choi_vec(&rotation_gate(axis, theta / 2.0));
        let mut big = v.clone();
        for _ in 1..k {
            big = kron_vec(&big, &v);
        }
        acc.add_outer(&big, &big, 1.0 / points as f64);
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrategyClass {
    /// All slots probed at once; outputs never feed back.
    Par,
    /// Slots in a fixed causal chain.
    Seq,
    /// No causal-order assumption; no affine identity list exists, only
    /// normalization against channel pairs.
    Gen,
    /// Dual affine space of Seq: (k−1)-slot comb Choi operators,
    /// positivity dropped.
    DualSeq,
    /// Dual affine space of Gen: k-partite non-signaling Choi operators,
    /// positivity dropped.
    DualGen,
}

/// One trace-and-replace identity R_left(W) = R_right(W).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceIdentity {
    pub label: String,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CombConstraints {
    k: usize,
    class: StrategyClass,
    identities: Vec<TraceIdentity>,
    trace_target: Option<f64>,
}

impl CombConstraints {
    pub fn new(class: StrategyClass, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("slot count must be positive".into()));
        }
        let tail = |j: usize| -> Vec<usize> {
            // Every label belonging to slots strictly after slot j (1-based).
            (j..k).flat_map(|s| [input_label(s), output_label(s)]).collect()
        };
        let mut identities = Vec::new();
        let mut trace_target = Some((1u64 << k) as f64);
        match class {
            StrategyClass::Par => {
                identities.push(TraceIdentity {
                    label: "replace all outputs".into(),
                    left: Vec::new(),
                    right: (0..k).map(output_label).collect(),
                });
            }
            StrategyClass::Seq => {
                for j in (1..=k).rev() {
                    let left = tail(j);
                    let mut right = vec![output_label(j - 1)];
                    right.extend(&left);
                    identities.push(TraceIdentity {
                        label: format!("slot {j}: no signaling back through O_{j}"),
                        left,
                        right,
                    });
                }
            }
            StrategyClass::Gen => {
                trace_target = None;
            }
            StrategyClass::DualSeq => {
                for j in (1..=k).rev() {
                    let mut left = vec![output_label(j - 1)];
                    left.extend(tail(j));
                    let mut right = vec![input_label(j - 1)];
                    right.extend(&left);
                    identities.push(TraceIdentity {
                        label: format!("comb tooth {j}: independent of I_{j} once O_{j} is replaced"),
                        left,
                        right,
                    });
                }
            }
            StrategyClass::DualGen => {
                for j in 1..=k {
                    identities.push(TraceIdentity {
                        label: format!("non-signaling at slot {j}"),
                        left: vec![output_label(j - 1)],
                        right: vec![input_label(j - 1), output_label(j - 1)],
                    });
                }
            }
        }
        Ok(Self { k, class, identities, trace_target })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn class(&self) -> StrategyClass {
        self.class
    }

    pub fn identities(&self) -> &[TraceIdentity] {
        &self.identities
    }

    pub fn trace_target(&self) -> Option<f64> {
        self.trace_target
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub residuals: Vec<(String, f64)>,
    pub trace_residual: Option<f64>,
    pub pass: bool,
}

pub fn check_constraints(w: &ComplexMatrix, constraints: &CombConstraints) -> Result<ConstraintReport> {
    let dim = 1usize << (2 * constraints.k);
    if w.rows() != dim || w.cols() != dim {
        return Err(Error::Domain(format!(
            "operator is {}×{}, constraints expect {dim}×{dim}",
            w.rows(),
            w.cols()
        )));
    }
    if !w.is_hermitian(1e-8) {
        return Err(Error::Domain("constraint check expects a Hermitian operator".into()));
    }
    let mut residuals = Vec::new();
    let mut pass = true;
    for id in &constraints.identities {
        let left = trace_and_replace(w, &id.left)?;
        let right = trace_and_replace(w, &id.right)?;
        let r = left.sub(&right).max_abs();
        pass &= r <= 1e-9;
        residuals.push((id.label.clone(), r));
    }
    let trace_residual = constraints.trace_target.map(|t| (w.trace().re - t).abs());
    if let Some(r) = trace_residual {
        pass &= r <= 1e-9 * constraints.trace_target.unwrap().max(1.0);
    }
    Ok(ConstraintReport { residuals, trace_residual, pass })
}

/// A feasible dual point (λ, W̄): proof that no strategy in the class beats
/// average success λ.
#[derive(Clone, Debug)]
pub struct DualCertificate {
    hypotheses: usize,
    lambda: Ratio<i64>,
    matrix: ComplexMatrix,
}

impl DualCertificate {
    pub fn hypotheses(&self) -> usize {
        self.hypotheses
    }

    pub fn lambda(&self) -> Ratio<i64> {
        self.lambda
    }

    pub fn lambda_value(&self) -> f64 {
        *self.lambda.numer() as f64 / *self.lambda.denom() as f64
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

fn psd_check(m: &ComplexMatrix, span: Option<&[Vec<C64>]>, what: &str) -> Result<f64> {
    let min = match span {
        Some(vectors) if m.rows() > 256 => min_eig_in_span(&m.hermitized(), vectors)?,
        _ => hermitian_min_eig(&m.hermitized())?,
    };
    let scale = m.max_abs().max(1.0);
    if min < -1e-9 * scale {
        return Err(Error::Certificate(format!("{what} not PSD, min eigenvalue {min}")));
    }
    Ok(min)
}

fn dual_feasibility(w: &ComplexMatrix, k: usize) -> Result<()> {
    for class in [StrategyClass::DualSeq, StrategyClass::DualGen] {
        let report = check_constraints(w, &CombConstraints::new(class, k)?)?;
        if !report.pass {
            return Err(Error::Certificate(format!(
                "dual witness fails {class:?} constraints: {report:?}"
            )));
        }
    }
    Ok(())
}

/// λ = (2k+1)/(2k+2) with W̄ = (k+1)/(2k+1)(Ω_X + Ω_Z) − 1/(2k+1)|I⟩⟩⟨⟨I|^{⊗k};
/// all feasibility and slack-positivity conditions are re-verified before
/// the certificate is returned.
pub fn binary_certificate(k: usize) -> Result<DualCertificate> {
    if k == 0 || k > MAX_SLOTS {
        return Err(Error::Resource(format!("binary certificate limited to 1 ≤ k ≤ {MAX_SLOTS}")));
    }
    let kf = k as f64;
    let omega_x = performance_operator(&BlochHamiltonian::x(), k)?;
    let omega_z = performance_operator(&BlochHamiltonian::z(), k)?;
    let phi = identity_choi_projector(k);
    let w = omega_x
        .matrix()
        .add(omega_z.matrix())
        .scaled(crate::linalg::cr((kf + 1.0) / (2.0 * kf + 1.0)))
        .sub(&phi.scaled(crate::linalg::cr(1.0 / (2.0 * kf + 1.0))));
    let lambda = Ratio::new(2 * k as i64 + 1, 2 * k as i64 + 2);
    let span: Vec<Vec<C64>> = omega_x
        .span_vectors()
        .iter()
        .chain(omega_z.span_vectors())
        .cloned()
        .collect();
    psd_check(&w, Some(&span), "binary dual witness")?;
    dual_feasibility(&w, k)?;
    let lv = (2.0 * kf + 1.0) / (2.0 * kf + 2.0);
    for (a, b) in [(&omega_x, &omega_z), (&omega_z, &omega_x)] {
        let slack = w.scaled(crate::linalg::cr(2.0 * lv)).sub(a.matrix());
        let expected = b.matrix().sub(&phi.scaled(crate::linalg::cr(1.0 / (kf + 1.0))));
        if slack.sub(&expected).max_abs() > 1e-9 {
            return Err(Error::Certificate(
                "binary slack does not match its closed form".into(),
            ));
        }
        psd_check(&slack, Some(&span), "binary certificate slack")?;
    }
    Ok(DualCertificate { hypotheses: 2, lambda, matrix: w })
}

/// λ = (3k+1)/(3k+3) for odd k, with W̄ built from all three axis operators.
pub fn ternary_certificate(k: usize) -> Result<DualCertificate> {
    if k % 2 == 0 {
        return Err(Error::Domain(format!("ternary certificate needs odd k, got {k}")));
    }
    if k > 5 {
        return Err(Error::Resource("ternary certificate limited to odd k ≤ 5".into()));
    }
    let kf = k as f64;
    let omegas = [
        performance_operator(&BlochHamiltonian::x(), k)?,
        performance_operator(&BlochHamiltonian::y(), k)?,
        performance_operator(&BlochHamiltonian::z(), k)?,
    ];
    let phi = identity_choi_projector(k);
    let sum = omegas[0].matrix().add(omegas[1].matrix()).add(omegas[2].matrix());
    let w = sum
        .scaled(crate::linalg::cr((kf + 1.0) / (3.0 * kf + 1.0)))
        .sub(&phi.scaled(crate::linalg::cr(2.0 / (3.0 * kf + 1.0))));
    let lambda = Ratio::new(3 * k as i64 + 1, 3 * k as i64 + 3);
    let span: Vec<Vec<C64>> = omegas
        .iter()
        .flat_map(|o| o.span_vectors().iter().cloned())
        .collect();
    psd_check(&w, Some(&span), "ternary dual witness")?;
    dual_feasibility(&w, k)?;
    let lv = (3.0 * kf + 1.0) / (3.0 * kf + 3.0);
    for j in 0..3 {
        let slack = w.scaled(crate::linalg::cr(3.0 * lv)).sub(omegas[j].matrix());
        let expected = sum
            .sub(omegas[j].matrix())
            .sub(&phi.scaled(crate::linalg::cr(2.0 / (kf + 1.0))));
        if slack.sub(&expected).max_abs() > 1e-9 {
            return Err(Error::Certificate(
                "ternary slack does not match its closed form".into(),
            ));
        }
        psd_check(&slack, Some(&span), "ternary certificate slack")?;
    }
    Ok(DualCertificate { hypotheses: 3, lambda, matrix: w })
}

/// Gap of the spectral floor: min eig(Ω_H − |I⟩⟩⟨⟨I|^{⊗k}/(k+1)). Non-negative
/// for every axis; the quantity the certificates lean on.
pub fn spectral_floor_gap(axis: &BlochHamiltonian, k: usize) -> Result<f64> {
    let omega = performance_operator(axis, k)?;
    let phi = identity_choi_projector(k);
    let m = omega
        .matrix()
        .sub(&phi.scaled(crate::linalg::cr(1.0 / (k as f64 + 1.0))));
    hermitian_min_eig(&m.hermitized())
}

/// One PSD operator per hypothesis; pairing with a performance operator
/// gives that hypothesis' average success contribution.
#[derive(Clone, Debug)]
pub struct TesterRealization {
    k: usize,
    operators: BTreeMap<String, ComplexMatrix>,
}

impl TesterRealization {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> Vec<&String> {
        self.operators.keys().collect()
    }

    pub fn operator(&self, label: &str) -> Option<&ComplexMatrix> {
        self.operators.get(label)
    }

    /// Re tr(T_label · Ω).
    pub fn pair(&self, label: &str, omega: &ComplexMatrix) -> Result<f64> {
        let t = self
            .operators
            .get(label)
            .ok_or_else(|| Error::Domain(format!("no tester for hypothesis {label}")))?;
        Ok(t.mul(omega).trace().re)
    }

    pub fn total(&self) -> ComplexMatrix {
        let dim = 1usize << (2 * self.k);
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for t in self.operators.values() {
            sum = sum.add(t);
        }
        sum
    }
}

/// Extracts the tester operators realized by a circuit: the final state is
/// multilinear in the k slot fill-ins, so running once per matrix-unit
/// plug-in tuple recovers the full tensor, and grouping the squared
/// amplitudes by decision label gives one Gram operator per hypothesis.
pub fn circuit_to_tester(circuit: &ProtocolCircuit) -> Result<TesterRealization> {
    let k = circuit.slots();
    if k == 0 {
        return Err(Error::Domain("circuit has no slots".into()));
    }
    if k > 4 {
        return Err(Error::Resource("tester extraction limited to k ≤ 4 slots".into()));
    }
    let dim4 = 1usize << (2 * k);
    let states: Vec<StateVector> = (0..dim4)
        .map(|idx| {
            let gates: Vec<ComplexMatrix> = (0..k)
                .map(|l| {
                    let i = idx >> (2 * (k - 1 - l) + 1) & 1;
                    let o = idx >> (2 * (k - 1 - l)) & 1;
                    let mut e = ComplexMatrix::zeros(2, 2);
                    e[(o, i)] = ONE;
                    e
                })
                .collect();
            circuit.run_with_slot_gates(&gates)
        })
        .collect::<Result<_>>()?;

    let full_dim = 1usize << circuit.qubits();
    let mut by_outcome: BTreeMap<String, ComplexMatrix> = BTreeMap::new();
    for b in 0..full_dim {
        let label: String = circuit
            .measured()
            .iter()
            .map(|&q| {
                if b >> (circuit.qubits() - 1 - q) & 1 == 1 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect();
        let gamma_bar: Vec<C64> = states.iter().map(|s| s.amplitudes()[b].conj()).collect();
        by_outcome
            .entry(label)
            .or_insert_with(|| ComplexMatrix::zeros(dim4, dim4))
            .add_outer(&gamma_bar, &gamma_bar, 1.0);
    }
    let mut operators: BTreeMap<String, ComplexMatrix> = BTreeMap::new();
    for (outcome, t) in by_outcome {
        let guess = circuit
            .decision()
            .get(&outcome)
            .ok_or_else(|| Error::Domain(format!("no decision for outcome {outcome}")))?;
        let entry = operators
            .entry(guess.clone())
            .or_insert_with(|| ComplexMatrix::zeros(dim4, dim4));
        *entry = entry.add(&t);
    }
    let realization = TesterRealization { k, operators };

    // Each operator must be a physical tester component and the sum a
    // causally ordered chain.
    for (label, t) in &realization.operators {
        psd_check(t, None, &format!("tester for {label}"))?;
    }
    let report = check_constraints(&realization.total(), &CombConstraints::new(StrategyClass::Seq, k)?)?;
    if !report.pass {
        return Err(Error::Certificate(format!(
            "extracted tester sum violates sequential constraints: {report:?}"
        )));
    }
    // Plugging concrete unitaries back in must reproduce the simulator.
    for (axis, theta) in [
        (BlochHamiltonian::x(), 0.83),
        (BlochHamiltonian::z(), 2.11),
        (BlochHamiltonian::normalized(1.0, -1.0, 0.5).unwrap(), 1.37),
    ] {
        let u = rotation_gate(&axis, theta);
        let v = choi_vec(&u);
        let mut big = v.clone();
        for _ in 1..k {
            big = kron_vec(&big, &v);
        }
        let direct = crate::protocols::guess_distribution(circuit, &axis, theta)?;
        for (label, t) in &realization.operators {
            let got = quadratic_form(t, &big);
            let want = direct.get(label).copied().unwrap_or(0.0);
            if (got - want).abs() > 1e-8 {
                return Err(Error::Certificate(format!(
                    "tester for {label} predicts {got}, simulator gives {want}"
                )));
            }
        }
    }
    Ok(realization)
}

fn quadratic_form(m: &ComplexMatrix, v: &[C64]) -> f64 {
    let mv = m.matvec(v);
    v.iter().zip(&mv).map(|(a, b)| (a.conj() * b).re).sum()
}
