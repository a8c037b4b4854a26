//! Shift-invert Arnoldi for a few eigenvalues of a sparse real matrix nearest a real shift.
//!
//! The Krylov space of `(A - sigma)^{-1}` is grown (full reorthogonalization) until
//! the wanted Ritz pairs meet the residual tolerance, then the pairs are mapped back
//! and their residuals re-measured on `A` itself.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::banded::BandedLu;
use super::dense;
use super::sparse::CsrMatrix;
use super::LinalgError;

#[derive(Debug, Clone)]
pub struct ArnoldiOptions {
    pub count: usize,
    /// Relative Ritz residual target on the inverted operator.
    pub tol: f64,
    pub max_dim: usize,
    pub check_every: usize,
    pub seed: u64,
    pub want_vectors: bool,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        ArnoldiOptions { count: 6, tol: 1e-10, max_dim: 240, check_every: 8, seed: 0x5eed, want_vectors: false }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<Complex64>,
    pub vectors: Vec<DVector<Complex64>>,
    /// ‖A x − λ x‖ / (‖A‖∞ ‖x‖) for each pair.
    pub residuals: Vec<f64>,
    pub krylov_dim: usize,
    pub shift: f64,
}

pub fn factor_shifted(a: &CsrMatrix, sigma: f64) -> Result<BandedLu, LinalgError> {
    a.to_band_shifted(sigma).factor()
}

pub fn shift_invert(a: &CsrMatrix, sigma: f64, opts: &ArnoldiOptions) -> Result<EigenPairs, LinalgError> {
    let lu = factor_shifted(a, sigma)?;
    shift_invert_with(a, &lu, sigma, opts)
}

pub fn shift_invert_with(
    a: &CsrMatrix,
    lu: &BandedLu,
    sigma: f64,
    opts: &ArnoldiOptions,
) -> Result<EigenPairs, LinalgError> {
    let n = a.n;
    let max_dim = opts.max_dim.min(n);
    let count = opts.count.min(max_dim.saturating_sub(1)).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nrm = norm(&v0);
    v0.iter_mut().for_each(|x| *x /= nrm);

    let mut basis: Vec<Vec<f64>> = vec![v0];
    let mut h = DMatrix::<f64>::zeros(max_dim + 1, max_dim);
    let mut m = 0usize;
    let mut picked: Option<Vec<(Complex64, DVector<Complex64>)>> = None;

    while m < max_dim {
        let j = m;
        let mut w = basis[j].clone();
        lu.solve_in_place(&mut w);
        // two passes of classical Gram-Schmidt
        for _ in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let c = dot(q, &w);
                h[(i, j)] += c;
                axpy(-c, q, &mut w);
            }
        }
        let beta = norm(&w);
        h[(j + 1, j)] = beta;
        m = j + 1;
        let scale = h.view((0, 0), (m, m)).norm().max(f64::MIN_POSITIVE);
        let breakdown = beta <= 1e-14 * scale;
        if !breakdown {
            w.iter_mut().for_each(|x| *x /= beta);
            basis.push(w);
        }
        let check = breakdown || m == max_dim || (m >= count + 4 && m % opts.check_every == 0);
        if check {
            let hm = h.view((0, 0), (m, m)).into_owned();
            let sel = select_ritz(&hm, count)?;
            let converged = breakdown
                || sel.iter().all(|(theta, y)| beta * y[m - 1].norm() <= opts.tol * theta.norm());
            if converged || m == max_dim {
                picked = Some(sel);
                if converged {
                    break;
                }
                return Err(LinalgError::NoConvergence { what: "shift-invert Arnoldi", iterations: m });
            }
        }
        if breakdown {
            break;
        }
    }
    let sel = picked.ok_or(LinalgError::NoConvergence { what: "shift-invert Arnoldi", iterations: m })?;

    let anorm = a.inf_norm().max(f64::MIN_POSITIVE);
    let mut out: Vec<(Complex64, DVector<Complex64>, f64)> = Vec::with_capacity(sel.len());
    for (theta, y) in sel {
        let lambda = Complex64::new(sigma, 0.0) + Complex64::new(1.0, 0.0) / theta;
        let mut xr = vec![0.0; n];
        let mut xi = vec![0.0; n];
        for (k, q) in basis.iter().take(m).enumerate() {
            axpy(y[k].re, q, &mut xr);
            axpy(y[k].im, q, &mut xi);
        }
        let mut ar = vec![0.0; n];
        let mut ai = vec![0.0; n];
        a.matvec(&xr, &mut ar);
        a.matvec(&xi, &mut ai);
        let mut rr = 0.0;
        let mut xx = 0.0;
        for i in 0..n {
            let x = Complex64::new(xr[i], xi[i]);
            let r = Complex64::new(ar[i], ai[i]) - lambda * x;
            rr += r.norm_sqr();
            xx += x.norm_sqr();
        }
        let res = rr.sqrt() / (anorm * xx.sqrt());
        let mut vec = DVector::from_fn(n, |i, _| Complex64::new(xr[i], xi[i]) / xx.sqrt());
        dense::normalize_phase(&mut vec);
        out.push((lambda, vec, res));
    }
    out.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    Ok(EigenPairs {
        values: out.iter().map(|p| p.0).collect(),
        residuals: out.iter().map(|p| p.2).collect(),
        vectors: if opts.want_vectors { out.into_iter().map(|p| p.1).collect() } else { Vec::new() },
        krylov_dim: m,
        shift: sigma,
    })
}

/// The `count` Ritz values of largest modulus with unit eigenvectors; a conjugate
/// partner split off by the cut is kept.
fn select_ritz(hm: &DMatrix<f64>, count: usize) -> Result<Vec<(Complex64, DVector<Complex64>)>, LinalgError> {
    let mut ev = dense::eigenvalues(hm)?;
    ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(a.im.total_cmp(&b.im)));
    let mut k = count.min(ev.len());
    if k < ev.len() && ev[k - 1].im != 0.0 && (ev[k] - ev[k - 1].conj()).norm() <= 1e-12 * ev[k].norm() {
        k += 1;
    }
    ev.truncate(k);
    ev.into_iter().map(|t| Ok((t, dense::eigenvector(hm, t)?))).collect()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
