//! Chebyshev-basis polynomial arithmetic and root finding.
//!
//! Phase stripping works in the Chebyshev basis on purpose: coefficients of
//! the recognition targets stay O(1) there up to degree 31, whereas monomial
//! coefficients grow like 2^k and would eat the 1e−8 roundtrip budget.

use crate::error::{Error, Result};
use crate::lapack;
use crate::linalg::{cr, C64, ComplexMatrix, ZERO};

/// Clenshaw evaluation of Σ cᵢ Tᵢ(x) with complex coefficients.
pub fn cheb_eval(coeffs: &[C64], x: f64) -> C64 {
    let mut b1 = ZERO;
    let mut b2 = ZERO;
    for &ck in coeffs.iter().rev() {
        let tmp = b1;
        b1 = ck + b1 * (2.0 * x) - b2;
        b2 = tmp;
    }
    b1 - b2 * x
}

pub fn cheb_eval_real(coeffs: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in coeffs.iter().rev() {
        let tmp = b1;
        b1 = ck + 2.0 * x * b1 - b2;
        b2 = tmp;
    }
    b1 - x * b2
}

/// Clenshaw evaluation of a real Chebyshev series at a complex point; the
/// recurrence is unchanged off the real axis.
pub fn cheb_eval_at(coeffs: &[f64], z: C64) -> C64 {
    let mut b1 = ZERO;
    let mut b2 = ZERO;
    for &ck in coeffs.iter().rev() {
        let tmp = b1;
        b1 = cr(ck) + 2.0 * z * b1 - b2;
        b2 = tmp;
    }
    b1 - z * b2
}

/// Chebyshev coefficients of the derivative, via the downward recurrence
/// d_{j−1} = d_{j+1} + 2j c_j.
pub fn cheb_derivative(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len();
    if n <= 1 {
        return vec![0.0];
    }
    let mut d = vec![0.0; n - 1];
    for j in (1..n).rev() {
        let upper = if j + 1 < n - 1 { d[j + 1] } else { 0.0 };
        d[j - 1] = upper + 2.0 * j as f64 * coeffs[j];
    }
    d[0] /= 2.0;
    d
}

/// First-kind Chebyshev nodes cos((2i+1)π/2n), i = 0..n−1.
pub fn cheb_nodes(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| ((2 * i + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos())
        .collect()
}

/// Interpolates values at the `n` first-kind nodes into Chebyshev
/// coefficients c₀..c_{n−1} (exact for polynomials of degree < n).
pub fn cheb_interpolate(values: &[C64]) -> Vec<C64> {
    let n = values.len();
    let mut coeffs = vec![ZERO; n];
    for (j, cj) in coeffs.iter_mut().enumerate() {
        let mut acc = ZERO;
        for (i, v) in values.iter().enumerate() {
            let ang = j as f64 * (2 * i + 1) as f64 * std::f64::consts::PI / (2 * n) as f64;
            acc += v * ang.cos();
        }
        let scale = if j == 0 { 1.0 / n as f64 } else { 2.0 / n as f64 };
        *cj = acc * scale;
    }
    coeffs
}

/// Chebyshev coefficients of x·p(x): x·Tₙ = (T_{n+1} + T_{|n−1|})/2.
pub fn cheb_mul_x(coeffs: &[C64]) -> Vec<C64> {
    let n = coeffs.len();
    let mut out = vec![ZERO; n + 1];
    for (k, &ck) in coeffs.iter().enumerate() {
        if k == 0 {
            out[1] += ck;
        } else {
            out[k + 1] += ck * 0.5;
            out[k - 1] += ck * 0.5;
        }
    }
    out
}

/// Chebyshev coefficients of x²·p(x): x²Tₙ = (T_{n+2} + 2Tₙ + T_{|n−2|})/4.
pub fn cheb_mul_x2(coeffs: &[C64]) -> Vec<C64> {
    cheb_mul_x(&cheb_mul_x(coeffs))
}

/// Drops trailing coefficients below `tol`, returning the tight vector.
pub fn cheb_trim(mut coeffs: Vec<C64>, tol: f64) -> Vec<C64> {
    while coeffs.len() > 1 && coeffs.last().unwrap().norm() <= tol {
        coeffs.pop();
    }
    coeffs
}

/// Roots of a real-coefficient polynomial given in the Chebyshev basis, via
/// the colleague matrix (the Chebyshev analogue of the companion matrix).
pub fn colleague_roots(coeffs: &[f64]) -> Result<Vec<C64>> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let cn = coeffs[n];
    if cn.abs() < 1e-300 {
        return Err(Error::Numeric("colleague_roots: zero leading coefficient".into()));
    }
    if n == 1 {
        return Ok(vec![cr(-coeffs[0] / cn)]);
    }
    // Multiplication-by-x operator on span{T_0..T_{n−1}}, reduced modulo p.
    let mut a = ComplexMatrix::zeros(n, n);
    a[(1, 0)] = cr(1.0);
    for j in 1..n - 1 {
        a[(j - 1, j)] = cr(0.5);
        a[(j + 1, j)] = cr(0.5);
    }
    a[(n - 2, n - 1)] = cr(0.5);
    for i in 0..n {
        a[(i, n - 1)] -= cr(coeffs[i] / (2.0 * cn));
    }
    lapack::zgeev_values(a.data(), n)
}

/// Roots of a monomial-basis polynomial c₀ + c₁z + … + cₙzⁿ via the
/// companion matrix.
pub fn companion_roots(coeffs: &[f64]) -> Result<Vec<C64>> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let cn = coeffs[n];
    if cn.abs() < 1e-300 {
        return Err(Error::Numeric("companion_roots: zero leading coefficient".into()));
    }
    let mut a = ComplexMatrix::zeros(n, n);
    for j in 1..n {
        a[(j, j - 1)] = cr(1.0);
    }
    for i in 0..n {
        a[(i, n - 1)] = cr(-coeffs[i] / cn);
    }
    lapack::zgeev_values(a.data(), n)
}

/// Horner evaluation of a monomial-basis polynomial at a complex point.
pub fn poly_eval_at(coeffs: &[f64], z: C64) -> C64 {
    let mut acc = ZERO;
    for &ck in coeffs.iter().rev() {
        acc = acc * z + cr(ck);
    }
    acc
}

/// Newton-polishes eigenvalue-derived roots against the polynomial itself;
/// companion and colleague eigenvalues drift once the degree passes ~40.
pub fn polish_monomial_roots(coeffs: &[f64], roots: Vec<C64>) -> Vec<C64> {
    let deriv: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &ck)| i as f64 * ck)
        .collect();
    roots
        .into_iter()
        .map(|mut z| {
            for _ in 0..50 {
                let d = poly_eval_at(&deriv, z);
                if d.norm() == 0.0 {
                    break;
                }
                let step = poly_eval_at(coeffs, z) / d;
                z -= step;
                if step.norm() < 1e-15 * z.norm().max(1.0) {
                    break;
                }
            }
            z
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn clenshaw_matches_direct() {
        // p = 1 + 2T_1 − T_3 at a few points.
        let coeffs = [cr(1.0), cr(2.0), ZERO, cr(-1.0)];
        for &x in &[-0.9, -0.3, 0.0, 0.5, 1.0] {
            let t3 = 4.0 * x * x * x - 3.0 * x;
            let direct = 1.0 + 2.0 * x - t3;
            assert!((cheb_eval(&coeffs, x) - cr(direct)).norm() < 1e-14);
        }
    }

    #[test]
    fn interpolation_roundtrip() {
        let coeffs = [c(0.3, -0.1), cr(1.0), c(0.0, 2.0), cr(-0.5), c(0.25, 0.25)];
        let nodes = cheb_nodes(coeffs.len());
        let values: Vec<C64> = nodes.iter().map(|&x| cheb_eval(&coeffs, x)).collect();
        let back = cheb_interpolate(&values);
        for (a, b) in coeffs.iter().zip(&back) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn mul_x_shifts_degree() {
        // x·T_2 = (T_3 + T_1)/2.
        let out = cheb_mul_x(&[ZERO, ZERO, cr(1.0)]);
        assert!((out[1] - cr(0.5)).norm() < 1e-15);
        assert!((out[3] - cr(0.5)).norm() < 1e-15);
        assert!(out[0].norm() < 1e-15 && out[2].norm() < 1e-15);
    }

    #[test]
    fn colleague_finds_chebyshev_roots() {
        // T_4 has roots cos((2i+1)π/8).
        let roots = colleague_roots(&[0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let mut re: Vec<f64> = roots.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        let mut expect: Vec<f64> = (0..4)
            .map(|i| ((2 * i + 1) as f64 * std::f64::consts::PI / 8.0).cos())
            .collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in re.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(roots.iter().all(|z| z.im.abs() < 1e-10));
    }

    #[test]
    fn companion_finds_quartic_roots() {
        // z⁴ + 4z² + 1 = 0 → z² = −2 ± √3.
        let roots = companion_roots(&[1.0, 0.0, 4.0, 0.0, 1.0]).unwrap();
        for z in &roots {
            let v = z.powu(4) + z.powu(2) * 4.0 + 1.0;
            assert!(v.norm() < 1e-12);
        }
    }
}
