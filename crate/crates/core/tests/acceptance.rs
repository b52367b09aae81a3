//! Acceptance gate: one test per headline guarantee, each printing a single
//! PASS/FAIL line. Tolerances and ranges are part of the contract.

use std::f64::consts::PI;
use std::time::Instant;

use hamrec::bloch::BlochHamiltonian;
use hamrec::linalg::{cr, ONE};
use hamrec::protocols::{
    average_success, average_success_quadrature, build_binary_circuit, build_ternary_circuit,
    error_polynomial, error_polynomial_sum, guess_distribution, outcome_distribution,
    perfect_discrimination_angles, sample_shots, success_variance, success_variance_quadrature,
    HypothesisSet, ProtocolKind,
};
use hamrec::qsp::{even_construction, evaluate_qsp, odd_target, synthesize_phases};
use hamrec::sdp::{general_axis_sweep, helstrom_one_slot_oracle, solve_recognition_sdp};
use hamrec::tester::{
    binary_certificate, performance_operator, spectral_floor_gap, ternary_certificate,
    StrategyClass,
};

fn report(criterion: usize, what: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {what} ... {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_01_binary_average_success() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for k in 1..=8 {
        let exact = (2.0 * k as f64 + 1.0) / (2.0 * k as f64 + 2.0);
        let sim = average_success_quadrature(ProtocolKind::Binary, k).unwrap();
        worst = worst.max((sim - exact).abs());
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-6 && elapsed.as_secs_f64() < 10.0;
    report(
        1,
        "binary average success (2k+1)/(2k+2), k = 1..8",
        pass,
        &format!("worst deviation {worst:.3e}, elapsed {elapsed:?}"),
    );
}

#[test]
fn criterion_02_ternary_average_success() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for k in [1usize, 3, 5] {
        let exact = (3.0 * k as f64 + 1.0) / (3.0 * k as f64 + 3.0);
        let sim = average_success_quadrature(ProtocolKind::Ternary, k).unwrap();
        worst = worst.max((sim - exact).abs());
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-6 && elapsed.as_secs_f64() < 30.0;
    report(
        2,
        "ternary average success (3k+1)/(3k+3), k = 1, 3, 5",
        pass,
        &format!("worst deviation {worst:.3e}, elapsed {elapsed:?}"),
    );
}

#[test]
fn criterion_03_perfect_discrimination() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for k in 1..=8usize {
        let sets: Vec<(hamrec::protocols::ProtocolCircuit, HypothesisSet)> = if k % 2 == 1 {
            vec![
                (build_binary_circuit(k).unwrap(), HypothesisSet::xz()),
                (build_ternary_circuit(k).unwrap(), HypothesisSet::xyz()),
            ]
        } else {
            vec![(build_binary_circuit(k).unwrap(), HypothesisSet::xz())]
        };
        for theta in perfect_discrimination_angles(k) {
            for (circuit, set) in &sets {
                for h in set.hypotheses() {
                    let guesses = guess_distribution(circuit, &h.axis, theta).unwrap();
                    let misid = 1.0 - guesses.get(&h.label).copied().unwrap_or(0.0);
                    worst = worst.max(misid);
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-10 && elapsed.as_secs_f64() < 5.0;
    report(
        3,
        "perfect discrimination at θ_j = jπ/(k+1), k = 1..8",
        pass,
        &format!("worst misidentification {worst:.3e}, elapsed {elapsed:?}"),
    );
}

#[test]
fn criterion_04_error_polynomial_triple_agreement() {
    let mut worst = 0.0f64;
    for k in 1..=8usize {
        let circuit = build_binary_circuit(k).unwrap();
        // The imperfect side: outcome 0 under X for odd k, outcome 1 under Z
        // for even k.
        let (axis, outcome) = if k % 2 == 1 {
            (BlochHamiltonian::x(), "0")
        } else {
            (BlochHamiltonian::z(), "1")
        };
        for i in 0..1001 {
            let theta = PI * i as f64 / 1000.0;
            let sim = outcome_distribution(&circuit, &axis, theta)
                .unwrap()
                .get(outcome)
                .copied()
                .unwrap_or(0.0);
            let closed = error_polynomial(k, theta);
            let summed = error_polynomial_sum(k, theta);
            worst = worst
                .max((sim - closed).abs())
                .max((sim - summed).abs())
                .max((closed - summed).abs());
        }
    }
    let pass = worst <= 1e-9;
    report(
        4,
        "error polynomial: simulation, coefficient sum, closed form agree",
        pass,
        &format!("worst pairwise deviation {worst:.3e}"),
    );
}

#[test]
fn criterion_05_success_variance() {
    let mut worst = 0.0f64;
    for k in [1usize, 3, 5, 7] {
        let quad = success_variance_quadrature(k).unwrap();
        let exact = success_variance(k).unwrap();
        worst = worst.max((quad - exact).abs());
    }
    let k1 = success_variance(1).unwrap();
    let pass = worst <= 1e-6 && (k1 - 0.03125).abs() < 5e-7;
    report(
        5,
        "success variance k(2k+1)/(12(k+1)³), odd k ≤ 7",
        pass,
        &format!("worst deviation {worst:.3e}, k=1 value {k1}"),
    );
}

#[test]
fn criterion_06_spectral_floor_psd() {
    let start = Instant::now();
    let mut min_gap = f64::INFINITY;
    for k in 1..=5usize {
        for axis in [BlochHamiltonian::x(), BlochHamiltonian::y(), BlochHamiltonian::z()] {
            min_gap = min_gap.min(spectral_floor_gap(&axis, k).unwrap());
        }
    }
    let elapsed = start.elapsed();
    let pass = min_gap >= -1e-9 && elapsed.as_secs_f64() < 60.0;
    report(
        6,
        "Ω_H − Φ/(k+1) is PSD for H ∈ {X, Y, Z}, k ≤ 5",
        pass,
        &format!("min eigenvalue {min_gap:.3e}, elapsed {elapsed:?}"),
    );
}

#[test]
fn criterion_07_dual_certificates() {
    let mut pass = true;
    let mut detail = String::new();
    for k in 1..=6usize {
        match binary_certificate(k) {
            Ok(cert) => {
                if cert.lambda() != average_success(ProtocolKind::Binary, k).unwrap() {
                    pass = false;
                    detail = format!("binary k = {k}: λ mismatch");
                }
            }
            Err(e) => {
                pass = false;
                detail = format!("binary k = {k}: {e}");
            }
        }
    }
    for k in [1usize, 3, 5] {
        match ternary_certificate(k) {
            Ok(cert) => {
                if cert.lambda() != average_success(ProtocolKind::Ternary, k).unwrap() {
                    pass = false;
                    detail = format!("ternary k = {k}: λ mismatch");
                }
            }
            Err(e) => {
                pass = false;
                detail = format!("ternary k = {k}: {e}");
            }
        }
    }
    report(
        7,
        "dual certificates verify, binary k ≤ 6 and ternary odd k ≤ 5",
        pass,
        &detail,
    );
}

#[test]
fn criterion_08_sdp_anchors() {
    let omega_x = performance_operator(&BlochHamiltonian::x(), 1).unwrap();
    let omega_y = performance_operator(&BlochHamiltonian::y(), 1).unwrap();
    let omega_z = performance_operator(&BlochHamiltonian::z(), 1).unwrap();

    let seq = solve_recognition_sdp(
        &[omega_x.clone(), omega_z.clone()],
        &[0.5, 0.5],
        StrategyClass::Seq,
    )
    .unwrap()
    .value;
    let gen = solve_recognition_sdp(
        &[omega_x.clone(), omega_z.clone()],
        &[0.5, 0.5],
        StrategyClass::Gen,
    )
    .unwrap()
    .value;
    let same = solve_recognition_sdp(
        &[omega_z.clone(), omega_z.clone()],
        &[0.5, 0.5],
        StrategyClass::Seq,
    )
    .unwrap()
    .value;
    let third = 1.0 / 3.0;
    let ternary = solve_recognition_sdp(
        &[omega_x, omega_y, omega_z],
        &[third, third, third],
        StrategyClass::Seq,
    )
    .unwrap()
    .value;

    let pass = (seq - 0.75).abs() <= 1e-4
        && (same - 0.5).abs() <= 1e-6
        && (ternary - 2.0 / 3.0).abs() <= 1e-4
        && (gen - seq).abs() <= 1e-4;
    report(
        8,
        "SDP anchors: 3/4 binary, 1/2 degenerate, 2/3 ternary, GEN = SEQ",
        pass,
        &format!("seq {seq}, gen {gen}, degenerate {same}, ternary {ternary}"),
    );
}

#[test]
fn criterion_09_general_axis_sweep() {
    let rows = general_axis_sweep(1, 21).unwrap();
    let mut pass = rows.len() == 21;
    for row in &rows {
        pass &= row.optimal >= row.fixed_protocol - 1e-6 && row.fixed_protocol >= 0.5 - 1e-6;
    }
    pass &= (rows[0].optimal - 0.5).abs() <= 1e-4;
    pass &= (rows[20].optimal - 0.75).abs() <= 1e-4;
    pass &= (rows[20].fixed_protocol - 0.75).abs() <= 1e-6;

    // Interior cross-check against the probe-sampling discrimination oracle.
    let row = &rows[10];
    let axis = BlochHamiltonian::new(row.axis[0], row.axis[1], row.axis[2]).unwrap();
    let oracle =
        helstrom_one_slot_oracle(&axis, &BlochHamiltonian::z(), 20_000, 424242).unwrap();
    let gap = (oracle - row.optimal).abs();
    pass &= gap <= 1e-3;
    report(
        9,
        "axis sweep ordering, anchors, and interior oracle cross-check",
        pass,
        &format!("interior gap {gap:.3e}, endpoints {} / {}", rows[0].optimal, rows[20].optimal),
    );
}

#[test]
fn criterion_10_monte_carlo_bands() {
    let shots = 100_000u64;
    let mut pass = true;
    let mut detail = String::new();
    let mut points = 0;
    for k in 1..=5usize {
        let circuit = build_binary_circuit(k).unwrap();
        for theta in [0.37 * PI, 0.61 * PI] {
            for (label, axis) in [("X", BlochHamiltonian::x()), ("Z", BlochHamiltonian::z())] {
                points += 1;
                let seed = (k as u64) * 100 + theta.to_bits() % 89 + label.len() as u64;
                let exact = outcome_distribution(&circuit, &axis, theta).unwrap();
                let counts = sample_shots(&circuit, &axis, theta, shots, seed).unwrap();
                let again = sample_shots(&circuit, &axis, theta, shots, seed).unwrap();
                if counts != again {
                    pass = false;
                    detail = format!("rerun differs at k = {k}, θ = {theta}, {label}");
                }
                for (outcome, &p) in &exact {
                    let freq = *counts.get(outcome).unwrap_or(&0) as f64 / shots as f64;
                    let sigma = (p * (1.0 - p) / shots as f64).sqrt();
                    if (freq - p).abs() > 4.0 * sigma + 1e-12 {
                        pass = false;
                        detail = format!(
                            "band violation at k = {k}, θ = {theta}, hidden {label}, outcome {outcome}: freq {freq}, p {p}"
                        );
                    }
                }
            }
        }
    }
    pass &= points == 20;
    report(
        10,
        "Monte Carlo frequencies inside 4σ bands, byte-identical reruns",
        pass,
        &detail,
    );
}

#[test]
fn criterion_11_qsp_roundtrip() {
    let mut worst = 0.0f64;
    let x = BlochHamiltonian::x();
    let z = BlochHamiltonian::z();
    for k in (1..=31usize).step_by(2) {
        let seq = synthesize_phases(k).unwrap();
        let target = odd_target(k).unwrap();
        for i in 0..=200 {
            let theta = PI * i as f64 / 200.0;
            let u = evaluate_qsp(&seq, theta, &x);
            worst = worst.max((u[(0, 0)] - cr(target.eval(theta.cos()))).norm());
        }
    }
    let mut boundary = 0.0f64;
    for k in (2..=32usize).step_by(2) {
        let built = even_construction(k).unwrap();
        boundary = boundary.max((built.p.eval(ONE) - cr(std::f64::consts::SQRT_2)).norm());
        boundary = boundary.max(built.q.eval(ONE).norm());
        let seq = synthesize_phases(k).unwrap();
        for i in 0..=200 {
            let theta = 1e-3 + (PI - 2e-3) * i as f64 / 200.0;
            let u = evaluate_qsp(&seq, theta, &z);
            worst = worst.max((u[(1, 0)].norm_sqr() - error_polynomial(k, theta)).abs());
        }
    }
    let pass = worst <= 1e-8 && boundary <= 1e-9;
    report(
        11,
        "phase synthesis roundtrip, odd k ≤ 31 and even k ≤ 32",
        pass,
        &format!("worst roundtrip {worst:.3e}, worst boundary {boundary:.3e}"),
    );
}
