//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use super::LinalgError;

/// All eigenvalues of a real square matrix, sorted by (re, im).
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>, LinalgError> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 200 * n.max(10))
        .ok_or(LinalgError::NoConvergence { what: "dense Schur", iterations: 200 * n.max(10) })?;
    let mut ev: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    sort_complex(&mut ev);
    Ok(ev)
}

pub fn sort_complex(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Unit eigenvector for an (approximate) eigenvalue `lambda` by inverse iteration.
pub fn eigenvector(m: &DMatrix<f64>, lambda: Complex64) -> Result<DVector<Complex64>, LinalgError> {
    let n = m.nrows();
    let scale = m.norm().max(1.0);
    // nudge off the exact eigenvalue so the factorization stays regular
    let shift = lambda + Complex64::new(scale * 1e-13, scale * 1e-13 * std::f64::consts::FRAC_1_SQRT_2);
    let mut a = to_complex(m);
    for i in 0..n {
        a[(i, i)] -= shift;
    }
    let lu = a.lu();
    let mut x = DVector::from_fn(n, |i, _| Complex64::new(1.0 + 0.1 * (i as f64).sin(), 0.05 * (i as f64).cos()));
    for _ in 0..3 {
        x = lu.solve(&x).ok_or(LinalgError::SingularPivot { index: 0 })?;
        let nrm = x.norm();
        if !nrm.is_finite() || nrm == 0.0 {
            return Err(LinalgError::SingularPivot { index: 0 });
        }
        x /= Complex64::new(nrm, 0.0);
    }
    Ok(x)
}

/// Rotates a complex vector so its largest component is real positive.
pub fn normalize_phase(x: &mut DVector<Complex64>) {
    let k = x.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).map(|p| p.0).unwrap_or(0);
    if x.is_empty() || x[k].norm() == 0.0 {
        return;
    }
    let phase = x[k] / x[k].norm();
    let inv = phase.conj();
    x.iter_mut().for_each(|v| *v *= inv);
}

/// Spectral norm of `(m - z)^{-1}`, i.e. the reciprocal of the smallest singular value.
pub fn resolvent_norm(m: &DMatrix<f64>, z: Complex64) -> f64 {
    let n = m.nrows();
    let mut a = to_complex(m);
    for i in 0..n {
        a[(i, i)] -= z;
    }
    let sv = a.singular_values();
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    1.0 / smin
}

/// 2-norm condition number.
pub fn condition_number(m: &DMatrix<Complex64>) -> f64 {
    let sv = m.clone().singular_values();
    let hi = sv.iter().copied().fold(0.0, f64::max);
    let lo = sv.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}
