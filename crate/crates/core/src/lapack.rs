//! Thin FFI layer over the system LAPACKE C interface (OpenBLAS backed).
//!
//! Only the three drivers the crate needs are declared: `zheevr` for
//! Hermitian eigenproblems and `zgeev` for general complex eigenvalues
//! (companion and colleague matrices). All calls use row-major layout.

use num_complex::Complex64;

use crate::error::{Error, Result};

const LAPACK_ROW_MAJOR: i32 = 101;

extern "C" {
    fn LAPACKE_zheevr(
        matrix_layout: i32,
        jobz: u8,
        range: u8,
        uplo: u8,
        n: i32,
        a: *mut Complex64,
        lda: i32,
        vl: f64,
        vu: f64,
        il: i32,
        iu: i32,
        abstol: f64,
        m: *mut i32,
        w: *mut f64,
        z: *mut Complex64,
        ldz: i32,
        isuppz: *mut i32,
    ) -> i32;

    fn LAPACKE_zgeev(
        matrix_layout: i32,
        jobvl: u8,
        jobvr: u8,
        n: i32,
        a: *mut Complex64,
        lda: i32,
        w: *mut Complex64,
        vl: *mut Complex64,
        ldvl: i32,
        vr: *mut Complex64,
        ldvr: i32,
    ) -> i32;
}

fn check_info(driver: &str, info: i32) -> Result<()> {
    if info == 0 {
        Ok(())
    } else {
        Err(Error::Numeric(format!("{driver} failed with info = {info}")))
    }
}

/// Eigenvalues `il..=iu` (1-based, ascending) of a Hermitian matrix given in
/// row-major order, together with the matching eigenvectors (one per row of
/// the returned vector list).
pub fn zheevr_range(
    a: &[Complex64],
    n: usize,
    il: usize,
    iu: usize,
) -> Result<(Vec<f64>, Vec<Vec<Complex64>>)> {
    assert_eq!(a.len(), n * n);
    assert!(1 <= il && il <= iu && iu <= n);
    let mut work = a.to_vec();
    let found = iu - il + 1;
    let mut m: i32 = 0;
    let mut w = vec![0.0f64; n];
    let mut z = vec![Complex64::default(); n * found];
    let mut isuppz = vec![0i32; 2 * n.max(1)];
    let info = unsafe {
        LAPACKE_zheevr(
            LAPACK_ROW_MAJOR,
            b'V',
            b'I',
            b'L',
            n as i32,
            work.as_mut_ptr(),
            n as i32,
            0.0,
            0.0,
            il as i32,
            iu as i32,
            0.0,
            &mut m,
            w.as_mut_ptr(),
            z.as_mut_ptr(),
            found as i32,
            isuppz.as_mut_ptr(),
        )
    };
    check_info("zheevr", info)?;
    let m = m as usize;
    let values = w[..m].to_vec();
    let vectors = (0..m)
        .map(|j| (0..n).map(|i| z[i * found + j]).collect())
        .collect();
    Ok((values, vectors))
}

/// All eigenvalues (ascending) of a Hermitian matrix, no eigenvectors.
pub fn zheevr_values(a: &[Complex64], n: usize) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let mut work = a.to_vec();
    let mut m: i32 = 0;
    let mut w = vec![0.0f64; n];
    // jobz = 'N': z and isuppz are not referenced but must be valid pointers.
    let mut z = vec![Complex64::default(); 1];
    let mut isuppz = vec![0i32; 2 * n.max(1)];
    let info = unsafe {
        LAPACKE_zheevr(
            LAPACK_ROW_MAJOR,
            b'N',
            b'A',
            b'L',
            n as i32,
            work.as_mut_ptr(),
            n as i32,
            0.0,
            0.0,
            0,
            0,
            0.0,
            &mut m,
            w.as_mut_ptr(),
            z.as_mut_ptr(),
            1,
            isuppz.as_mut_ptr(),
        )
    };
    check_info("zheevr", info)?;
    w.truncate(m as usize);
    Ok(w)
}

/// Eigenvalues of a general complex matrix (row-major).
pub fn zgeev_values(a: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    assert_eq!(a.len(), n * n);
    let mut work = a.to_vec();
    let mut w = vec![Complex64::default(); n];
    // The row-major LAPACKE wrapper validates ldvl/ldvr ≥ n even when the
    // eigenvectors are not requested.
    let mut dummy = vec![Complex64::default(); n * n];
    let info = unsafe {
        LAPACKE_zgeev(
            LAPACK_ROW_MAJOR,
            b'N',
            b'N',
            n as i32,
            work.as_mut_ptr(),
            n as i32,
            w.as_mut_ptr(),
            dummy.as_mut_ptr(),
            n as i32,
            dummy.as_mut_ptr(),
            n as i32,
        )
    };
    check_info("zgeev", info)?;
    Ok(w)
}
