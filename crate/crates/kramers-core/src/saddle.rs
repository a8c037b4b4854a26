//! Transverse spectral data at saddles and the Eyring-Kramers predictions built from it.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labelling::{GenericReport, WellMap};
use crate::landscape::{CriticalKind, CriticalPoint, Landscape};
use crate::linalg::{dense, LinalgError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SaddleError {
    #[error("critical point at {0:?} is not an index-1 saddle")]
    NotASaddle(Vec<f64>),
    #[error("Hess V + B^T has {count} eigenvalues with negative real part (expected exactly one real); b may not be orthogonal to grad V")]
    NegativeCount { count: usize },
    #[error("negative eigenvalue {re}+{im}i of Hess V + B^T is not real")]
    ComplexNegative { re: f64, im: f64 },
    #[error("eigenvector for mu is ill-conditioned (singular value ratio {ratio:.3e})")]
    Conditioning { ratio: f64 },
    #[error("invariant {name} violated: {detail}")]
    Invariant { name: &'static str, detail: String },
    #[error("unsupported well map: {0}")]
    Unsupported(String),
    #[error("h must lie in (0, 1], got {0}")]
    BadH(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaddleSpectralData {
    /// Index into the critical point list (usize::MAX when built from bare matrices).
    pub saddle: usize,
    pub location: Vec<f64>,
    pub mu: f64,
    pub xi: Vec<f64>,
    pub lambda1: f64,
    /// Row-major M_V = Hess + 2|mu| xi xi^T.
    pub m_v: Vec<f64>,
    pub det_hessian: f64,
    /// xi was flipped to point into E(m).
    pub flipped: bool,
    pub oriented: bool,
}

impl SaddleSpectralData {
    pub fn xi_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.xi)
    }

    pub fn m_v_matrix(&self) -> DMatrix<f64> {
        let d = self.xi.len();
        DMatrix::from_row_slice(d, d, &self.m_v)
    }

    /// Flips xi so that xi . toward > 0.
    pub fn orient(&mut self, toward: &[f64]) {
        let dot: f64 = self.xi.iter().zip(toward).map(|(a, b)| a * b).sum();
        if dot < 0.0 {
            self.xi.iter_mut().for_each(|x| *x = -*x);
            self.flipped = !self.flipped;
        }
        self.oriented = true;
    }
}

const IMAG_TOL: f64 = 1e-10;
const REL_TOL: f64 = 1e-10;

/// Computes mu, xi, lambda_1 and M_V for a saddle with Hessian `hess` and Jacobian `b_jac` of b.
pub fn transverse_matrices(hess: &DMatrix<f64>, b_jac: &DMatrix<f64>) -> Result<SaddleSpectralData, SaddleError> {
    let d = hess.nrows();
    let a = hess + b_jac.transpose();
    let scale = a.norm().max(1.0);
    let ev = dense::eigenvalues(&a)?;
    let neg: Vec<_> = ev.iter().filter(|z| z.re < 0.0).collect();
    if neg.len() != 1 {
        return Err(SaddleError::NegativeCount { count: neg.len() });
    }
    if neg[0].im.abs() > IMAG_TOL * scale {
        return Err(SaddleError::ComplexNegative { re: neg[0].re, im: neg[0].im });
    }
    let mu = neg[0].re;

    // null vector of A - mu I from the SVD
    let mut shifted = a.clone();
    for i in 0..d {
        shifted[(i, i)] -= mu;
    }
    let svd = shifted.svd(false, true);
    let vt = svd.v_t.as_ref().ok_or(SaddleError::Conditioning { ratio: f64::NAN })?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    if d > 1 {
        let ratio = svd.singular_values[order[1]] / scale;
        if ratio < 1e-8 {
            return Err(SaddleError::Conditioning { ratio });
        }
    }
    let mut xi: DVector<f64> = vt.row(order[0]).transpose();
    xi /= xi.norm();
    // deterministic sign before any orientation: largest component positive
    let kmax = xi.iamax();
    if xi[kmax] < 0.0 {
        xi = -xi;
    }

    let sym = nalgebra::SymmetricEigen::new(hess.clone());
    let lambda1 = sym.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let m_v = hess + (&xi * xi.transpose()) * (2.0 * mu.abs());
    let data = SaddleSpectralData {
        saddle: usize::MAX,
        location: Vec::new(),
        mu,
        xi: xi.iter().copied().collect(),
        lambda1,
        m_v: m_v.transpose().iter().copied().collect(),
        det_hessian: hess.determinant(),
        flipped: false,
        oriented: false,
    };
    check_invariants(&data, hess, b_jac)?;
    Ok(data)
}

/// The postconditions on (mu, xi, M_V) listed for index-1 saddles.
pub fn check_invariants(data: &SaddleSpectralData, hess: &DMatrix<f64>, b_jac: &DMatrix<f64>) -> Result<(), SaddleError> {
    let xi = data.xi_vector();
    let m_v = data.m_v_matrix();
    let det_h = hess.determinant();
    let det_m = m_v.determinant();
    if (det_m + det_h).abs() > REL_TOL * det_h.abs().max(f64::MIN_POSITIVE) * 10.0 {
        return Err(SaddleError::Invariant {
            name: "det M_V = -det Hess",
            detail: format!("det M_V = {det_m}, det Hess = {det_h}"),
        });
    }
    if m_v.clone().cholesky().is_none() {
        return Err(SaddleError::Invariant { name: "M_V positive definite", detail: format!("{m_v}") });
    }
    let amu = data.mu.abs();
    let al1 = data.lambda1.abs();
    if amu < al1 * (1.0 - 1e-12) {
        return Err(SaddleError::Invariant { name: "|mu| >= |lambda_1|", detail: format!("{amu} < {al1}") });
    }
    let btxi = (b_jac.transpose() * &xi).norm();
    let equal = (amu - al1).abs() <= 1e-8 * al1.max(1.0);
    if btxi <= 1e-8 && !equal {
        return Err(SaddleError::Invariant {
            name: "|mu| = |lambda_1| when B^T xi = 0",
            detail: format!("|mu| = {amu}, |lambda_1| = {al1}"),
        });
    }
    let hinv = hess.clone().lu().solve(&xi).ok_or(SaddleError::Invariant {
        name: "Hess invertible",
        detail: "singular".into(),
    })?;
    let q = hinv.dot(&xi) * data.mu;
    if (q - 1.0).abs() > REL_TOL * 10.0 {
        return Err(SaddleError::Invariant { name: "mu <Hess^-1 xi, xi> = 1", detail: format!("{q}") });
    }
    Ok(())
}

pub fn transverse_data(s: &CriticalPoint, b_jac: &DMatrix<f64>) -> Result<SaddleSpectralData, SaddleError> {
    if s.kind != CriticalKind::Saddle {
        return Err(SaddleError::NotASaddle(s.location.clone()));
    }
    let mut data = transverse_matrices(&s.hessian_matrix(), b_jac)?;
    data.location = s.location.clone();
    Ok(data)
}

/// Saddle data for every saddle in some j(m), oriented into the corresponding E(m).
pub fn saddle_data_for(
    land: &Landscape,
    criticals: &[CriticalPoint],
    wellmap: &WellMap,
) -> Result<Vec<SaddleSpectralData>, SaddleError> {
    let mut out: Vec<SaddleSpectralData> = Vec::new();
    for e in &wellmap.entries {
        for (k, &s) in e.saddles.iter().enumerate() {
            if out.iter().any(|d| d.saddle == s) {
                continue;
            }
            let cp = &criticals[s];
            let mut data = transverse_data(cp, &land.jac_b_at(&cp.location))?;
            data.saddle = s;
            data.orient(&e.toward[k]);
            out.push(data);
        }
    }
    Ok(out)
}

/// zeta(m) for a non-global minimum.
pub fn prefactor(
    minimum: usize,
    wellmap: &WellMap,
    criticals: &[CriticalPoint],
    saddles: &[SaddleSpectralData],
    generic: &GenericReport,
) -> Result<f64, SaddleError> {
    if !generic.generic && !generic.double_well_equal_depth {
        return Err(SaddleError::Unsupported(format!("non-generic landscape: {}", generic.violations.join("; "))));
    }
    let entry = wellmap
        .entry_for(minimum)
        .ok_or_else(|| SaddleError::Unsupported(format!("critical point {minimum} is not a labelled minimum")))?;
    if entry.sigma.is_none() {
        return Err(SaddleError::Unsupported("zeta is not defined for the global minimum".into()));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut head = criticals[minimum].det_hessian().sqrt();
    if generic.double_well_equal_depth {
        head += criticals[wellmap.global_min().minimum].det_hessian().sqrt();
    }
    let mut sum = 0.0;
    for s in &entry.saddles {
        let d = saddles
            .iter()
            .find(|d| d.saddle == *s)
            .ok_or_else(|| SaddleError::Unsupported(format!("missing saddle data for critical point {s}")))?;
        sum += d.mu.abs() / d.det_hessian.abs().sqrt();
    }
    Ok(head / two_pi * sum)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EkPrediction {
    pub minimum: usize,
    pub location: Vec<f64>,
    pub value: f64,
    /// `None` is +infinity (global minimum).
    pub barrier: Option<f64>,
    pub zeta: Option<f64>,
    pub h: f64,
    pub lambda: f64,
    /// Relative error marker: the law holds up to a factor 1 + O(sqrt(h)).
    pub error_order: f64,
}

/// One prediction per minimum, in labelling order.
pub fn predict_spectrum(
    criticals: &[CriticalPoint],
    wellmap: &WellMap,
    generic: &GenericReport,
    saddles: &[SaddleSpectralData],
    h: f64,
) -> Result<Vec<EkPrediction>, SaddleError> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(SaddleError::BadH(h));
    }
    wellmap
        .entries
        .iter()
        .map(|e| {
            let cp = &criticals[e.minimum];
            let (zeta, lambda) = match e.barrier {
                None => (None, 0.0),
                Some(s) => {
                    let z = prefactor(e.minimum, wellmap, criticals, saddles, generic)?;
                    (Some(z), z * (-s / h).exp())
                }
            };
            Ok(EkPrediction {
                minimum: e.minimum,
                location: cp.location.clone(),
                value: cp.value,
                barrier: e.barrier,
                zeta,
                h,
                lambda,
                error_order: h.sqrt(),
            })
        })
        .collect()
}

/// Closed form of mu for Hess = diag(-a, b) and B = c J0 Hess.
pub fn mu_rotational_2d(a: f64, b: f64, c: f64) -> f64 {
    let t = b - a;
    0.5 * (t - (t * t + 4.0 * a * b * (1.0 + c * c)).sqrt())
}

/// Random orthogonal matrix from the QR factorization of a Gaussian matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let g: DMatrix<f64> = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

pub fn random_antisymmetric<R: Rng + ?Sized>(rng: &mut R, d: usize, scale: f64) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(d, d);
    for r in 0..d {
        for c in r + 1..d {
            let v: f64 = StandardNormal.sample(rng);
            j[(r, c)] = scale * v;
            j[(c, r)] = -scale * v;
        }
    }
    j
}

/// A random index-1 Hessian Q diag(-a, b_2..b_d) Q^T and a compatible B = J Hess.
pub fn random_saddle<R: Rng + ?Sized>(rng: &mut R, d: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let q = random_orthogonal(rng, d);
    let diag = DVector::from_fn(d, |i, _| {
        let v = rng.random_range(0.2..5.0);
        if i == 0 {
            -v
        } else {
            v
        }
    });
    let hess = &q * DMatrix::from_diagonal(&diag) * q.transpose();
    let hess = (&hess + hess.transpose()) * 0.5;
    let scale = rng.random_range(0.0..3.0);
    let j = random_antisymmetric(rng, d, scale);
    let b = &j * &hess;
    (hess, b)
}
