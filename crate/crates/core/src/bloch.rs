//! Bloch-axis Hamiltonians H = n⃗·σ⃗ and the SU(2) ↔ SO(3) frame machinery
//! that reduces recognition along general orthogonal axes to the {X, Z} case.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, cr, C64, ComplexMatrix, I, ONE, ZERO};

/// A traceless single-qubit Hamiltonian identified with its unit Bloch axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochHamiltonian {
    axis: [f64; 3],
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[&[ZERO, -I], &[I, ZERO]])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]])
}

impl BlochHamiltonian {
    /// Strict constructor: the axis must already be unit length within 1e−12.
    pub fn new(nx: f64, ny: f64, nz: f64) -> Result<Self> {
        let norm = (nx * nx + ny * ny + nz * nz).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "Bloch axis must be normalized; got norm {norm}"
            )));
        }
        Ok(Self { axis: [nx, ny, nz] })
    }

    /// Rescales an arbitrary nonzero vector to the unit sphere.
    pub fn normalized(nx: f64, ny: f64, nz: f64) -> Result<Self> {
        let norm = (nx * nx + ny * ny + nz * nz).sqrt();
        if norm < 1e-14 {
            return Err(Error::Domain("Bloch axis must be nonzero".into()));
        }
        Ok(Self { axis: [nx / norm, ny / norm, nz / norm] })
    }

    pub fn x() -> Self {
        Self { axis: [1.0, 0.0, 0.0] }
    }

    pub fn y() -> Self {
        Self { axis: [0.0, 1.0, 0.0] }
    }

    pub fn z() -> Self {
        Self { axis: [0.0, 0.0, 1.0] }
    }

    pub fn axis(&self) -> [f64; 3] {
        self.axis
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.axis.iter().zip(&other.axis).map(|(a, b)| a * b).sum()
    }

    /// The matrix n⃗·σ⃗.
    pub fn matrix(&self) -> ComplexMatrix {
        let [nx, ny, nz] = self.axis;
        ComplexMatrix::from_rows(&[
            &[cr(nz), c(nx, -ny)],
            &[c(nx, ny), cr(-nz)],
        ])
    }

    /// Orthonormal eigenvectors (u₊, u₋) of n⃗·σ⃗ with eigenvalues ±1.
    pub fn eigenbasis(&self) -> ([C64; 2], [C64; 2]) {
        let [nx, ny, nz] = self.axis;
        let beta = nz.clamp(-1.0, 1.0).acos();
        let gamma = if nx.abs() + ny.abs() < 1e-15 { 0.0 } else { ny.atan2(nx) };
        let (cb, sb) = ((beta / 2.0).cos(), (beta / 2.0).sin());
        let phase = c(gamma.cos(), gamma.sin());
        let plus = [cr(cb), phase * sb];
        let minus = [-phase.conj() * sb, cr(cb)];
        (plus, minus)
    }
}

/// exp(−i θ n⃗·σ⃗) = cos θ I − i sin θ (n⃗·σ⃗).
pub fn rotation_gate(axis: &BlochHamiltonian, angle: f64) -> ComplexMatrix {
    let h = axis.matrix();
    let id = ComplexMatrix::identity(2);
    id.scaled(cr(angle.cos())).add(&h.scaled(c(0.0, -angle.sin())))
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// SU(2) lift of the rotation that carries (n0, n1) onto (x, z):
/// U (n0·σ⃗) U† = X and U (n1·σ⃗) U† = Z.
///
/// Built from R ∈ SO(3) with columns (n0, n1×n0, n1); this choice of middle
/// column already gives det R = +1, and the lift of Rᵀ (the map n0 → x) is
/// recovered as a unit quaternion. The postconditions are re-verified before
/// returning.
pub fn frame_unitary(n0: &BlochHamiltonian, n1: &BlochHamiltonian) -> Result<ComplexMatrix> {
    if n0.dot(n1).abs() > 1e-10 {
        return Err(Error::Domain("frame_unitary: axes must be orthogonal".into()));
    }
    let a = n0.axis();
    let b = n1.axis();
    let n2 = cross(b, a);
    // Rows of Rᵀ are the columns (n0, n2, n1) of R.
    let rt = [a, n2, b];

    // Shepperd's method: quaternion (w, v) with U = wI − i v·σ⃗.
    let tr = rt[0][0] + rt[1][1] + rt[2][2];
    let (w, x, y, z);
    if tr > 0.0 {
        let s = (tr + 1.0).sqrt() * 2.0;
        w = 0.25 * s;
        x = (rt[2][1] - rt[1][2]) / s;
        y = (rt[0][2] - rt[2][0]) / s;
        z = (rt[1][0] - rt[0][1]) / s;
    } else if rt[0][0] >= rt[1][1] && rt[0][0] >= rt[2][2] {
        let s = (1.0 + rt[0][0] - rt[1][1] - rt[2][2]).sqrt() * 2.0;
        w = (rt[2][1] - rt[1][2]) / s;
        x = 0.25 * s;
        y = (rt[0][1] + rt[1][0]) / s;
        z = (rt[0][2] + rt[2][0]) / s;
    } else if rt[1][1] >= rt[2][2] {
        let s = (1.0 + rt[1][1] - rt[0][0] - rt[2][2]).sqrt() * 2.0;
        w = (rt[0][2] - rt[2][0]) / s;
        x = (rt[0][1] + rt[1][0]) / s;
        y = 0.25 * s;
        z = (rt[1][2] + rt[2][1]) / s;
    } else {
        let s = (1.0 + rt[2][2] - rt[0][0] - rt[1][1]).sqrt() * 2.0;
        w = (rt[1][0] - rt[0][1]) / s;
        x = (rt[0][2] + rt[2][0]) / s;
        y = (rt[1][2] + rt[2][1]) / s;
        z = 0.25 * s;
    }
    let u = ComplexMatrix::from_rows(&[
        &[c(w, -z), c(-y, -x)],
        &[c(y, -x), c(w, z)],
    ]);

    let check = |h: &ComplexMatrix, target: &ComplexMatrix| -> f64 {
        u.mul(h).mul(&u.dagger()).sub(target).max_abs()
    };
    let r0 = check(&n0.matrix(), &pauli_x());
    let r1 = check(&n1.matrix(), &pauli_z());
    if r0 > 1e-10 || r1 > 1e-10 {
        return Err(Error::Numeric(format!(
            "frame_unitary conjugation residuals {r0:.3e}, {r1:.3e}"
        )));
    }
    Ok(u)
}
