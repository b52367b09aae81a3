//! Dense complex matrices, Kronecker products, Choi vectorization, and
//! Hermitian eigenvalue utilities.
//!
//! Matrices are row-major `Complex64`. Dimensions stay small enough
//! (≤ 4096 for the k = 6 certificates) that dense storage is the right
//! trade-off throughout.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lapack;

pub type C64 = Complex64;

pub const ZERO: C64 = Complex64::new(0.0, 0.0);
pub const ONE: C64 = Complex64::new(1.0, 0.0);
pub const I: C64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    Complex64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    Complex64::new(re, 0.0)
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl std::fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for col in 0..self.cols.min(8) {
                let v = self[(r, col)];
                write!(f, "{:+.4}{:+.4}i  ", v.re, v.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (r, col): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + col]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, col): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + col]
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn mul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let lhs = k * other.cols;
                let dst = i * other.cols;
                for j in 0..other.cols {
                    out.data[dst + j] += a * other.data[lhs + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![ZERO; self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = ZERO;
            for (a, x) in row.iter().zip(v) {
                acc += a * x;
            }
            out[i] = acc;
        }
        out
    }

    pub fn add(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn scaled(&self, s: C64) -> ComplexMatrix {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= s;
        }
        out
    }

    pub fn dagger(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for col in 0..self.cols {
                out[(col, r)] = self[(r, col)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Accumulates the rank-1 update `scale · v w†`.
    pub fn add_outer(&mut self, v: &[C64], w: &[C64], scale: f64) {
        assert_eq!(v.len(), self.rows);
        assert_eq!(w.len(), self.cols);
        for r in 0..self.rows {
            let sv = v[r] * scale;
            if sv == ZERO {
                continue;
            }
            let dst = r * self.cols;
            for (j, wj) in w.iter().enumerate() {
                self.data[dst + j] += sv * wj.conj();
            }
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for r in 0..self.rows {
            for col in r..self.cols {
                if (self[(r, col)] - self[(col, r)].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let p = self.dagger().mul(self);
        let id = ComplexMatrix::identity(self.rows);
        p.sub(&id).max_abs() <= tol
    }

    /// Symmetrizes floating-point noise: (M + M†)/2.
    pub fn hermitized(&self) -> ComplexMatrix {
        self.add(&self.dagger()).scaled(cr(0.5))
    }

    /// Max-norm of the phase-aligned difference, i.e. distance up to a global
    /// phase. Useful for SU(2) comparisons where the lift is defined up to sign.
    pub fn phase_aligned_distance(&self, other: &ComplexMatrix) -> f64 {
        let mut phase = ONE;
        let mut best = 0.0;
        for (a, b) in self.data.iter().zip(&other.data) {
            let mag = a.norm() * b.norm();
            if mag > best {
                best = mag;
                phase = (a * b.conj()) / mag;
            }
        }
        self.sub(&other.scaled(phase)).max_abs()
    }
}

/// Kronecker product A ⊗ B.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for ar in 0..a.rows() {
        for ac in 0..a.cols() {
            let v = a[(ar, ac)];
            if v == ZERO {
                continue;
            }
            for br in 0..b.rows() {
                for bc in 0..b.cols() {
                    out[(ar * b.rows() + br, ac * b.cols() + bc)] = v * b[(br, bc)];
                }
            }
        }
    }
    out
}

/// Choi double-ket |U⟩⟩ = Σ_j (I ⊗ U)|jj⟩ as a length-d² vector.
///
/// Component ordering: index i·d + o holds U[o][i], i.e. the first tensor
/// factor (input system) is the most significant index.
pub fn choi_vec(u: &ComplexMatrix) -> Vec<C64> {
    assert_eq!(u.rows(), u.cols(), "choi_vec needs a square matrix");
    let d = u.rows();
    let mut v = vec![ZERO; d * d];
    for i in 0..d {
        for o in 0..d {
            v[i * d + o] = u[(o, i)];
        }
    }
    v
}

fn hermitian_gate(m: &ComplexMatrix) -> Result<()> {
    if m.rows() != m.cols() {
        return Err(Error::Domain("hermitian_min_eig: matrix not square".into()));
    }
    let tol = 1e-10 * m.max_abs().max(1.0);
    if !m.is_hermitian(tol) {
        return Err(Error::Domain("hermitian_min_eig: matrix not Hermitian".into()));
    }
    Ok(())
}

/// Estimates the spectral norm by a few power iterations on M†M = M² (Hermitian M).
fn spectral_norm_estimate(m: &ComplexMatrix) -> f64 {
    let n = m.rows();
    let mut v: Vec<C64> = (0..n)
        .map(|i| c((1.0 + (i as f64 * 0.7391).sin()) / 2.0, (i as f64 * 0.421).cos() / 3.0))
        .collect();
    let mut est = 0.0;
    for _ in 0..20 {
        let w = m.matvec(&v);
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        est = norm / v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v = w.iter().map(|z| z / norm).collect();
    }
    est
}

fn residual(m: &ComplexMatrix, lambda: f64, v: &[C64]) -> f64 {
    let mv = m.matvec(v);
    mv.iter()
        .zip(v)
        .map(|(a, b)| (a - b * lambda).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Smallest eigenvalue of a Hermitian matrix together with its eigenvector.
///
/// Dense LAPACK up to dimension 1024; above that a residual-verified Lanczos
/// iteration on the spectral complement handles the low-rank certificate
/// matrices, falling back to the dense driver if the residual bound fails.
pub fn hermitian_min_eigpair(m: &ComplexMatrix) -> Result<(f64, Vec<C64>)> {
    hermitian_gate(m)?;
    let n = m.rows();
    let scale = spectral_norm_estimate(m).max(1e-300);
    let tol = 1e-8 * scale;
    if n > 1024 {
        if let Some((lambda, v)) = lanczos_min_eig(m, tol) {
            return Ok((lambda, v));
        }
    }
    let (vals, vecs) = lapack::zheevr_range(m.data(), n, 1, 1)?;
    let (lambda, v) = (vals[0], vecs[0].clone());
    let res = residual(m, lambda, &v);
    if res > tol {
        return Err(Error::Numeric(format!(
            "hermitian_min_eig: eigenpair residual {res:.3e} exceeds {tol:.3e}"
        )));
    }
    Ok((lambda, v))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn hermitian_min_eig(m: &ComplexMatrix) -> Result<f64> {
    hermitian_min_eigpair(m).map(|(lambda, _)| lambda)
}

/// All eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    hermitian_gate(m)?;
    lapack::zheevr_values(m.data(), m.rows())
}

/// Lanczos with full reorthogonalization on cI − M, whose largest eigenvalue
/// is c − λ_min(M). Returns None if the residual target is not met.
fn lanczos_min_eig(m: &ComplexMatrix, tol: f64) -> Option<(f64, Vec<C64>)> {
    let n = m.rows();
    // Row-sum bound on the spectrum so that cI − M is positive semidefinite.
    let c_shift = (0..n)
        .map(|r| m.data()[r * n..(r + 1) * n].iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let apply = |x: &[C64]| -> Vec<C64> {
        let mut y = m.matvec(x);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = xi * c_shift - *yi;
        }
        y
    };

    let max_iter = 480.min(n);
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut q: Vec<C64> = (0..n)
        .map(|i| c((i as f64 * 0.137).sin() + 0.5, (i as f64 * 0.613).cos()))
        .collect();
    let nrm = q.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in q.iter_mut() {
        *z /= nrm;
    }
    basis.push(q);

    for j in 0..max_iter {
        let mut w = apply(&basis[j]);
        // Full reorthogonalization keeps the Ritz residuals trustworthy.
        for _ in 0..2 {
            for b in &basis {
                let proj: C64 = b.iter().zip(&w).map(|(bi, wi)| bi.conj() * wi).sum();
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= proj * bi;
                }
            }
        }
        let alpha: f64 = basis[j]
            .iter()
            .zip(apply(&basis[j]).iter())
            .map(|(bi, wi)| (bi.conj() * wi).re)
            .sum();
        alphas.push(alpha);
        let beta = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

        let check_now = beta < 1e-13 || (j + 1) % 24 == 0 || j + 1 == max_iter;
        if check_now {
            let k = alphas.len();
            let mut t = ComplexMatrix::zeros(k, k);
            for i in 0..k {
                t[(i, i)] = cr(alphas[i]);
                if i + 1 < k {
                    t[(i, i + 1)] = cr(betas[i]);
                    t[(i + 1, i)] = cr(betas[i]);
                }
            }
            if let Ok((vals, vecs)) = lapack::zheevr_range(t.data(), k, k, k) {
                let mu = vals[0];
                let y = &vecs[0];
                let mut v = vec![ZERO; n];
                for (coeff, b) in y.iter().zip(&basis) {
                    for (vi, bi) in v.iter_mut().zip(b) {
                        *vi += coeff * bi;
                    }
                }
                let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                for z in v.iter_mut() {
                    *z /= vn;
                }
                let lambda = c_shift - mu;
                if residual(m, lambda, &v) <= tol {
                    return Some((lambda, v));
                }
            }
        }
        if beta < 1e-13 {
            break;
        }
        betas.push(beta);
        let next: Vec<C64> = w.iter().map(|z| z / beta).collect();
        basis.push(next);
    }
    None
}
