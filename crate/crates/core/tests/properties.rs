//! Randomized invariants: algebraic identities that must hold for every
//! admissible input, not just the frozen cases in the unit tests.

use std::f64::consts::PI;

use proptest::prelude::*;

use hamrec::bloch::{frame_unitary, rotation_gate, BlochHamiltonian};
use hamrec::linalg::{cr, kron, ComplexMatrix, C64};
use hamrec::protocols::error_polynomial;
use hamrec::qsp::{complete_partner, evaluate_qsp, odd_target, synthesize_phases};
use hamrec::tester::{performance_operator, trace_and_replace};

fn axis_strategy() -> impl Strategy<Value = BlochHamiltonian> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("needs a nonzero direction", |(x, y, z)| {
            (x * x + y * y + z * z).sqrt() > 1e-3
        })
        .prop_map(|(x, y, z)| BlochHamiltonian::normalized(x, y, z).unwrap())
}

fn small_matrix(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |entries| {
        let mut m = ComplexMatrix::zeros(n, n);
        for (i, (re, im)) in entries.into_iter().enumerate() {
            m[(i / n, i % n)] = C64::new(re, im);
        }
        m
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_mixed_product(a in small_matrix(2), b in small_matrix(2),
                          c in small_matrix(2), d in small_matrix(2)) {
        // (A ⊗ B)(C ⊗ D) = (AC) ⊗ (BD).
        let lhs = kron(&a, &b).mul(&kron(&c, &d));
        let rhs = kron(&a.mul(&c), &b.mul(&d));
        prop_assert!(lhs.sub(&rhs).max_abs() < 1e-12);
    }

    #[test]
    fn trace_and_replace_is_idempotent_and_trace_preserving(
        m in small_matrix(8), q in 0usize..3) {
        let once = trace_and_replace(&m, &[q]).unwrap();
        let twice = trace_and_replace(&once, &[q]).unwrap();
        prop_assert!(once.sub(&twice).max_abs() < 1e-12);
        prop_assert!((m.trace() - once.trace()).norm() < 1e-12);
    }

    #[test]
    fn rotation_gate_period_and_unitarity(axis in axis_strategy(), theta in 0.0f64..PI) {
        let u = rotation_gate(&axis, theta);
        prop_assert!(u.is_unitary(1e-12));
        // Full angle: e^{−iH(θ+2π)} = e^{−iHθ}, period 2π not 4π.
        let shifted = rotation_gate(&axis, theta + 2.0 * PI);
        prop_assert!(u.sub(&shifted).max_abs() < 1e-10);
    }

    #[test]
    fn frame_unitary_conjugates_the_pair(seed_a in axis_strategy(), theta in 0.05f64..3.1) {
        // Build an orthogonal partner by Gram–Schmidt against z, skipping
        // near-degenerate draws.
        let [ax, ay, az] = seed_a.axis();
        prop_assume!(az.abs() < 0.95);
        let norm = (ax * ax + ay * ay).sqrt();
        let n0 = BlochHamiltonian::normalized(ax / norm, ay / norm, 0.0).unwrap();
        let n1 = BlochHamiltonian::z();
        let v = frame_unitary(&n0, &n1).unwrap();
        // V carries the pair (n0, n1) onto (x, z): V e^{−i n·σ θ} V† is the
        // corresponding reference rotation.
        let x = BlochHamiltonian::x();
        for (general, reference) in [(&n0, &x), (&n1, &n1)] {
            let lhs = v.mul(&rotation_gate(general, theta)).mul(&v.dagger());
            let rhs = rotation_gate(reference, theta);
            prop_assert!(lhs.phase_aligned_distance(&rhs) < 1e-9);
        }
    }

    #[test]
    fn performance_operator_basics(axis in axis_strategy(), k in 1usize..4) {
        let op = performance_operator(&axis, k).unwrap();
        let m = op.matrix();
        prop_assert!(m.is_hermitian(1e-10));
        prop_assert!((m.trace().re - (1u64 << k) as f64).abs() < 1e-8);
        // Conjugation covariance: rotating the axis frame rotates the
        // operator by the slotwise conjugation action.
        let tr = trace_and_replace(m, &[0]).unwrap();
        prop_assert!((tr.trace().re - (1u64 << k) as f64).abs() < 1e-8);
    }

    #[test]
    fn completion_identity_holds(k in proptest::sample::select(vec![1usize, 3, 5, 7, 9])) {
        let p = odd_target(k).unwrap();
        let q = complete_partner(&p).unwrap();
        for i in 0..=50 {
            let a = -1.0 + 2.0 * i as f64 / 50.0;
            let qv = hamrec::cheb::cheb_eval(&q, a).norm_sqr();
            let res = p.eval(a).powi(2) + (1.0 - a * a) * qv - 1.0;
            prop_assert!(res.abs() < 1e-9, "residual {res} at a = {a}");
        }
    }

    #[test]
    fn odd_target_is_bounded(k in proptest::sample::select(vec![1usize, 5, 11, 21, 31]),
                             a in -1.0f64..1.0) {
        let p = odd_target(k).unwrap();
        prop_assert!(p.eval(a).abs() <= 1.0 + 1e-10);
    }

    #[test]
    fn synthesis_roundtrip_random_angles(
        k in 1usize..13, theta in 0.01f64..3.13) {
        let seq = synthesize_phases(k).unwrap();
        if k % 2 == 1 {
            let target = odd_target(k).unwrap();
            let u = evaluate_qsp(&seq, theta, &BlochHamiltonian::x());
            prop_assert!((u[(0, 0)] - cr(target.eval(theta.cos()))).norm() < 1e-8);
        } else {
            let u = evaluate_qsp(&seq, theta, &BlochHamiltonian::z());
            prop_assert!((u[(1, 0)].norm_sqr() - error_polynomial(k, theta)).abs() < 1e-8);
        }
    }
}
