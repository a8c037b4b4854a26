//! Graded matrices Omega (M' + O(h)) Omega, their block Schur complements, and
//! disc-based cluster counting of their spectra.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dense, LinalgError};
use crate::saddle::random_orthogonal;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GradedError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid graded structure: {0}")]
    Invalid(String),
    #[error("top block J(h) is singular; h is too large relative to min |sigma(M_1)|")]
    SingularTop,
    #[error("eigenvalue {re}+{im}i lies outside every cluster disc (tau or h too large)")]
    Outside { re: f64, im: f64 },
    #[error("cluster discs {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("fixed-point refinement did not converge")]
    NoConvergence,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub const TAU0: f64 = 0.1;
pub const H0: f64 = 0.01;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradedStructure {
    pub dims: Vec<usize>,
    /// tau_2..tau_p.
    pub tau: Vec<f64>,
    /// M_1..M_p.
    #[serde(skip)]
    pub blocks: Vec<DMatrix<f64>>,
    pub h: f64,
}

impl GradedStructure {
    pub fn new(dims: Vec<usize>, tau: Vec<f64>, blocks: Vec<DMatrix<f64>>, h: f64) -> Result<Self, GradedError> {
        let s = GradedStructure { dims, tau, blocks, h };
        s.validate(1.0)?;
        Ok(s)
    }

    pub fn validate(&self, tau0: f64) -> Result<(), GradedError> {
        let p = self.dims.len();
        if p == 0 || self.dims.contains(&0) {
            return Err(GradedError::Invalid("block dimensions must be positive".into()));
        }
        if self.tau.len() + 1 != p {
            return Err(GradedError::Invalid(format!("{} scales for {p} blocks", self.tau.len())));
        }
        if let Some(t) = self.tau.iter().find(|&&t| !(t > 0.0 && t <= tau0)) {
            return Err(GradedError::Invalid(format!("scale {t} outside (0, {tau0}]")));
        }
        if self.blocks.len() != p {
            return Err(GradedError::Invalid(format!("{} diagonal blocks for {p} dimensions", self.blocks.len())));
        }
        for (b, &r) in self.blocks.iter().zip(&self.dims) {
            if b.nrows() != r || b.ncols() != r {
                return Err(GradedError::DimensionMismatch { expected: r, got: b.nrows() });
            }
            if b.clone().lu().determinant().abs() <= f64::EPSILON * b.norm().powi(r as i32) {
                return Err(GradedError::Invalid("diagonal block is singular".into()));
            }
        }
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.dims.len()
    }

    pub fn size(&self) -> usize {
        self.dims.iter().sum()
    }

    /// Cumulative scales eps_1 = 1, eps_j = tau_2 ... tau_j.
    pub fn eps(&self) -> Vec<f64> {
        let mut e = vec![1.0];
        for &t in &self.tau {
            e.push(e.last().copied().unwrap_or(1.0) * t);
        }
        e
    }

    pub fn omega(&self) -> Vec<f64> {
        self.eps().iter().zip(&self.dims).flat_map(|(&e, &r)| std::iter::repeat_n(e, r)).collect()
    }

    pub fn m_prime(&self) -> DMatrix<f64> {
        let n = self.size();
        let mut m = DMatrix::zeros(n, n);
        let mut off = 0;
        for b in &self.blocks {
            let r = b.nrows();
            m.view_mut((off, off), (r, r)).copy_from(b);
            off += r;
        }
        m
    }

    /// Structure of the lower blocks (r_2..r_p, tau_3..tau_p).
    pub fn tail(&self) -> GradedStructure {
        GradedStructure {
            dims: self.dims[1..].to_vec(),
            tau: self.tau.get(1..).map(<[f64]>::to_vec).unwrap_or_default(),
            blocks: self.blocks[1..].to_vec(),
            h: self.h,
        }
    }
}

/// Omega (M' + perturbation) Omega.
pub fn assemble_graded(s: &GradedStructure, perturbation: &DMatrix<f64>) -> Result<DMatrix<f64>, GradedError> {
    let n = s.size();
    if perturbation.nrows() != n || perturbation.ncols() != n {
        return Err(GradedError::DimensionMismatch { expected: n, got: perturbation.nrows() });
    }
    let w = s.omega();
    let core = s.m_prime() + perturbation;
    Ok(DMatrix::from_fn(n, n, |i, j| w[i] * core[(i, j)] * w[j]))
}

#[derive(Debug, Clone)]
pub struct Peeled {
    pub j: DMatrix<f64>,
    /// Top-right coupling.
    pub upper: DMatrix<f64>,
    /// Bottom-left coupling.
    pub lower: DMatrix<f64>,
    pub n: DMatrix<f64>,
    /// N - lower J^{-1} upper.
    pub z: DMatrix<f64>,
}

pub fn peel(m: &DMatrix<f64>, s: &GradedStructure) -> Result<Peeled, GradedError> {
    if s.p() < 2 {
        return Err(GradedError::Invalid("peel needs at least two blocks".into()));
    }
    if m.nrows() != s.size() {
        return Err(GradedError::DimensionMismatch { expected: s.size(), got: m.nrows() });
    }
    let r = s.dims[0];
    let k = m.nrows() - r;
    let j = m.view((0, 0), (r, r)).into_owned();
    let upper = m.view((0, r), (r, k)).into_owned();
    let lower = m.view((r, 0), (k, r)).into_owned();
    let n = m.view((r, r), (k, k)).into_owned();
    let jinv_u = j.clone().lu().solve(&upper).ok_or(GradedError::SingularTop)?;
    if !jinv_u.iter().all(|v| v.is_finite()) {
        return Err(GradedError::SingularTop);
    }
    let z = &n - &lower * jinv_u;
    Ok(Peeled { j, upper, lower, n, z })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Disc {
    pub block: usize,
    /// Eigenvalue of M_block.
    pub lambda: [f64; 2],
    pub center: [f64; 2],
    pub radius: f64,
    pub count: usize,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolventCheck {
    pub probes: usize,
    pub max_ratio: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterReport {
    pub discs: Vec<Disc>,
    pub eigenvalues: Vec<[f64; 2]>,
    /// Disc index per eigenvalue.
    pub assignment: Vec<usize>,
    pub k: f64,
    /// Smallest K for which every eigenvalue lies in the disc of its nearest center.
    pub k_min: f64,
    pub resolvent: ResolventCheck,
    pub counts_match: bool,
}

fn c2(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn cz(a: [f64; 2]) -> Complex64 {
    Complex64::new(a[0], a[1])
}

/// Default disc constant 10 (1 + max ||M_j||_2).
pub fn default_k(s: &GradedStructure) -> f64 {
    let m = s.blocks.iter().map(|b| b.clone().svd(false, false).singular_values.max()).fold(0.0, f64::max);
    10.0 * (1.0 + m)
}

/// Distinct eigenvalues of a block with their multiplicities.
fn distinct_eigenvalues(b: &DMatrix<f64>) -> Result<Vec<(Complex64, usize)>, GradedError> {
    let ev = dense::eigenvalues(b)?;
    let tol = 1e-8 * b.norm().max(1.0);
    let mut out: Vec<(Complex64, usize)> = Vec::new();
    for z in ev {
        match out.iter_mut().find(|(w, _)| (*w - z).norm() <= tol) {
            Some(e) => e.1 += 1,
            None => out.push((z, 1)),
        }
    }
    Ok(out)
}

pub fn cluster_discs(s: &GradedStructure, k: f64) -> Result<Vec<Disc>, GradedError> {
    let eps = s.eps();
    let mut discs = Vec::new();
    for (j, b) in s.blocks.iter().enumerate() {
        let e2 = eps[j] * eps[j];
        for (lam, mult) in distinct_eigenvalues(b)? {
            discs.push(Disc {
                block: j,
                lambda: c2(lam),
                center: c2(lam * e2),
                radius: k * e2 * s.h,
                count: 0,
                multiplicity: mult,
            });
        }
    }
    for a in 0..discs.len() {
        for b in a + 1..discs.len() {
            if (cz(discs[a].center) - cz(discs[b].center)).norm() <= discs[a].radius + discs[b].radius {
                return Err(GradedError::Overlap(a, b));
            }
        }
    }
    Ok(discs)
}

/// Assigns every eigenvalue of `m` to its cluster disc and checks counts against multiplicities.
pub fn localized_spectrum(m: &DMatrix<f64>, s: &GradedStructure, k: f64) -> Result<ClusterReport, GradedError> {
    if m.nrows() != s.size() {
        return Err(GradedError::DimensionMismatch { expected: s.size(), got: m.nrows() });
    }
    let mut discs = cluster_discs(s, k)?;
    let ev = dense::eigenvalues(m)?;
    let eps = s.eps();
    let mut assignment = Vec::with_capacity(ev.len());
    let mut k_min: f64 = 0.0;
    for &z in &ev {
        // nearest center measured in units of the disc scale
        let (best, d) = discs
            .iter()
            .enumerate()
            .map(|(i, dsc)| (i, (z - cz(dsc.center)).norm() / (eps[dsc.block].powi(2) * s.h)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or(GradedError::Invalid("no discs".into()))?;
        k_min = k_min.max(d);
        let inside: Vec<usize> =
            discs.iter().enumerate().filter(|(_, dsc)| (z - cz(dsc.center)).norm() <= dsc.radius).map(|p| p.0).collect();
        if inside.len() != 1 || inside[0] != best {
            return Err(GradedError::Outside { re: z.re, im: z.im });
        }
        discs[best].count += 1;
        assignment.push(best);
    }
    let counts_match = discs.iter().all(|d| d.count == d.multiplicity);
    let resolvent = resolvent_probe(m, &ev, &discs)?;
    Ok(ClusterReport { discs, eigenvalues: ev.iter().copied().map(c2).collect(), assignment, k, k_min, resolvent, counts_match })
}

/// Checks ||(M - z)^{-1}|| dist(z, sigma(M)) <= cond(V) at points just outside each disc.
fn resolvent_probe(m: &DMatrix<f64>, ev: &[Complex64], discs: &[Disc]) -> Result<ResolventCheck, GradedError> {
    let bound = eigvec_condition(m, ev)?;
    let mut max_ratio: f64 = 0.0;
    let mut probes = 0;
    for d in discs {
        for q in 0..4 {
            let ang = std::f64::consts::FRAC_PI_4 + q as f64 * std::f64::consts::FRAC_PI_2;
            let z = cz(d.center) + Complex64::from_polar(2.0 * d.radius, ang);
            let dist = ev.iter().map(|l| (l - z).norm()).fold(f64::INFINITY, f64::min);
            max_ratio = max_ratio.max(dense::resolvent_norm(m, z) * dist);
            probes += 1;
        }
    }
    Ok(ResolventCheck { probes, max_ratio, bound, pass: max_ratio <= bound * 1.01 })
}

/// 2-norm condition number of a unit-column eigenvector matrix.
pub fn eigvec_condition(m: &DMatrix<f64>, ev: &[Complex64]) -> Result<f64, GradedError> {
    let n = m.nrows();
    let mut v = DMatrix::<Complex64>::zeros(n, n);
    for (k, &l) in ev.iter().enumerate() {
        let x = dense::eigenvector(m, l)?;
        v.set_column(k, &x);
    }
    Ok(dense::condition_number(&v))
}

fn complex_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>, GradedError> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let it = 200 * n.max(10);
    let schur = Schur::try_new(m.clone(), f64::EPSILON, it)
        .ok_or(LinalgError::NoConvergence { what: "complex Schur", iterations: it })?;
    let mut ev: Vec<Complex64> =
        schur.eigenvalues().ok_or(GradedError::NoConvergence)?.iter().copied().collect();
    dense::sort_complex(&mut ev);
    Ok(ev)
}

fn nearest(set: &[Complex64], z: Complex64) -> Complex64 {
    set.iter().copied().min_by(|a, b| (a - z).norm().total_cmp(&(b - z).norm())).unwrap_or(z)
}

fn shifted_inverse_apply(
    a: &DMatrix<Complex64>,
    lambda: Complex64,
    rhs: &DMatrix<Complex64>,
) -> Result<DMatrix<Complex64>, GradedError> {
    let mut s = a.clone();
    for i in 0..s.nrows() {
        s[(i, i)] -= lambda;
    }
    s.lu().solve(rhs).ok_or(GradedError::SingularTop)
}

const FP_ITERS: usize = 30;

fn recurse(m: &DMatrix<Complex64>, dims: &[usize]) -> Result<Vec<Complex64>, GradedError> {
    if dims.len() == 1 {
        return complex_eigenvalues(m);
    }
    let r = dims[0];
    let k = m.nrows() - r;
    let j = m.view((0, 0), (r, r)).into_owned();
    let u = m.view((0, r), (r, k)).into_owned();
    let l = m.view((r, 0), (k, r)).into_owned();
    let n = m.view((r, r), (k, k)).into_owned();
    let mut out = Vec::with_capacity(m.nrows());

    // top cluster: lambda in sigma(J - U (N - lambda)^{-1} L)
    for l0 in complex_eigenvalues(&j)? {
        let mut lam = l0;
        for it in 0..FP_ITERS {
            let t = &j - &u * shifted_inverse_apply(&n, lam, &l)?;
            let next = nearest(&complex_eigenvalues(&t)?, lam);
            let done = (next - lam).norm() <= 1e-15 * next.norm();
            lam = next;
            if done {
                break;
            }
            if it + 1 == FP_ITERS {
                return Err(GradedError::NoConvergence);
            }
        }
        out.push(lam);
    }

    // lower clusters: lambda in sigma(Z(lambda)), Z(lambda) = N - L (J - lambda)^{-1} U, graded over dims[1..]
    let z0 = &n - &l * shifted_inverse_apply(&j, Complex64::new(0.0, 0.0), &u)?;
    for l0 in recurse(&z0, &dims[1..])? {
        let mut lam = l0;
        for it in 0..FP_ITERS {
            let z = &n - &l * shifted_inverse_apply(&j, lam, &u)?;
            let next = nearest(&recurse(&z, &dims[1..])?, lam);
            let done = (next - lam).norm() <= 1e-15 * next.norm().max(f64::MIN_POSITIVE);
            lam = next;
            if done {
                break;
            }
            if it + 1 == FP_ITERS {
                return Err(GradedError::NoConvergence);
            }
        }
        out.push(lam);
    }
    dense::sort_complex(&mut out);
    Ok(out)
}

/// Spectrum by peeling the top block and recursing on the nonlinear Schur complement.
pub fn recursive_spectrum(m: &DMatrix<f64>, s: &GradedStructure) -> Result<Vec<Complex64>, GradedError> {
    if m.nrows() != s.size() {
        return Err(GradedError::DimensionMismatch { expected: s.size(), got: m.nrows() });
    }
    recurse(&dense::to_complex(m), &s.dims)
}

/// Rank of the Riesz projector on the disc D(center, radius), from the trace of a
/// trapezoid-rule contour integral of the resolvent.
pub fn projector_rank(m: &DMatrix<f64>, center: Complex64, radius: f64, nodes: usize) -> Result<usize, GradedError> {
    let n = m.nrows();
    let a = dense::to_complex(m);
    let mut tr = Complex64::new(0.0, 0.0);
    for q in 0..nodes {
        let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * q as f64 / nodes as f64);
        let z = center + w * radius;
        let mut s = -a.clone();
        for i in 0..n {
            s[(i, i)] += z;
        }
        let inv = s.try_inverse().ok_or(GradedError::SingularTop)?;
        tr += inv.trace() * w * radius;
    }
    tr /= nodes as f64;
    Ok(tr.re.round().max(0.0) as usize)
}

#[derive(Debug, Clone)]
pub struct RandomParams {
    pub p_max: usize,
    pub r_max: usize,
    pub tau_range: (f64, f64),
    pub h_range: (f64, f64),
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams { p_max: 4, r_max: 4, tau_range: (0.03, TAU0), h_range: (0.001, H0) }
    }
}

/// A random graded structure together with a unit-norm perturbation direction R;
/// the perturbed matrix is assemble_graded(structure, h R).
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub structure: GradedStructure,
    pub direction: DMatrix<f64>,
}

impl RandomInstance {
    pub fn matrix(&self) -> Result<DMatrix<f64>, GradedError> {
        assemble_graded(&self.structure, &(&self.direction * self.structure.h))
    }

    pub fn with_h(&self, h: f64) -> RandomInstance {
        let mut c = self.clone();
        c.structure.h = h;
        c
    }
}

/// Eigenvalues of magnitude in [1, 2], pairwise at least `sep` apart; complex ones come in conjugate pairs.
fn random_block_spectrum<R: Rng + ?Sized>(rng: &mut R, r: usize, sep: f64) -> Vec<(f64, f64)> {
    loop {
        let mut out: Vec<(f64, f64)> = Vec::new();
        while out.len() < r {
            let rad = rng.random_range(1.0..2.0);
            if r - out.len() >= 2 && rng.random_bool(0.5) {
                let th = rng.random_range(0.6..std::f64::consts::PI - 0.6);
                out.push((rad * th.cos(), rad * th.sin()));
                out.push((rad * th.cos(), -rad * th.sin()));
            } else {
                out.push((if rng.random_bool(0.5) { rad } else { -rad }, 0.0));
            }
        }
        let ok = (0..r).all(|a| (a + 1..r).all(|b| ((out[a].0 - out[b].0).hypot(out[a].1 - out[b].1)) >= sep));
        if ok {
            return out;
        }
    }
}

/// V D V^{-1} with D built from 1x1 real and 2x2 rotation-scaling blocks.
pub fn random_block<R: Rng + ?Sized>(rng: &mut R, r: usize) -> DMatrix<f64> {
    let spec = random_block_spectrum(rng, r, 1.0);
    let mut d = DMatrix::zeros(r, r);
    let mut i = 0;
    while i < r {
        let (re, im) = spec[i];
        if im != 0.0 {
            d[(i, i)] = re;
            d[(i + 1, i + 1)] = re;
            d[(i, i + 1)] = -im;
            d[(i + 1, i)] = im;
            i += 2;
        } else {
            d[(i, i)] = re;
            i += 1;
        }
    }
    let g: DMatrix<f64> = DMatrix::from_fn(r, r, |_, _| StandardNormal.sample(rng));
    let g = &g / g.norm();
    let v = random_orthogonal(rng, r) * (DMatrix::identity(r, r) + g * 0.2);
    let vinv = v.clone().try_inverse().unwrap_or_else(|| DMatrix::identity(r, r));
    &v * d * vinv
}

pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, params: &RandomParams) -> RandomInstance {
    let p = rng.random_range(1..=params.p_max);
    let dims: Vec<usize> = (0..p).map(|_| rng.random_range(1..=params.r_max)).collect();
    let tau: Vec<f64> = (1..p).map(|_| rng.random_range(params.tau_range.0..=params.tau_range.1)).collect();
    let blocks: Vec<DMatrix<f64>> = dims.iter().map(|&r| random_block(rng, r)).collect();
    let h = rng.random_range(params.h_range.0..=params.h_range.1);
    let n: usize = dims.iter().sum();
    let raw: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let nrm = raw.clone().svd(false, false).singular_values.max();
    RandomInstance { structure: GradedStructure { dims, tau, blocks, h }, direction: raw / nrm }
}

/// Largest eigenvalue-to-center distance per disc, relative to the disc scale.
pub fn center_distances(report: &ClusterReport, s: &GradedStructure) -> Vec<f64> {
    let eps = s.eps();
    let mut out = vec![0.0f64; report.discs.len()];
    for (z, &d) in report.eigenvalues.iter().zip(&report.assignment) {
        let disc = &report.discs[d];
        let dist = (cz(*z) - cz(disc.center)).norm() / eps[disc.block].powi(2);
        out[d] = out[d].max(dist);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_by_two(tau: f64, h: f64) -> (GradedStructure, DMatrix<f64>) {
        let s = GradedStructure::new(
            vec![1, 1],
            vec![tau],
            vec![DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 2.0)],
            h,
        )
        .unwrap();
        let p = DMatrix::from_row_slice(2, 2, &[0.0, h, h, 0.0]);
        (s, p)
    }

    #[test]
    fn assemble_small_example() {
        let (s, p) = two_by_two(0.1, 0.01);
        let m = assemble_graded(&s, &p).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[1.0, 0.001, 0.001, 0.02]);
        assert!((m - want).norm() < 1e-15);
    }

    #[test]
    fn p1_is_identity_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = random_block(&mut rng, 3);
        let s = GradedStructure::new(vec![3], vec![], vec![b.clone()], 0.01).unwrap();
        let m = assemble_graded(&s, &DMatrix::zeros(3, 3)).unwrap();
        assert!((m - b).norm() < 1e-15);
    }

    #[test]
    fn peel_closed_form() {
        let (tau, h) = (0.1, 0.01);
        let (s, p) = two_by_two(tau, h);
        let m = assemble_graded(&s, &p).unwrap();
        let pe = peel(&m, &s).unwrap();
        assert!((pe.j[(0, 0)] - 1.0).abs() < 1e-15);
        let z = 2.0 * tau * tau - tau * tau * h * h;
        assert!((pe.z[(0, 0)] - z).abs() < 1e-17);
        let back = {
            let mut b = DMatrix::zeros(2, 2);
            b[(0, 0)] = pe.j[(0, 0)];
            b[(0, 1)] = pe.upper[(0, 0)];
            b[(1, 0)] = pe.lower[(0, 0)];
            b[(1, 1)] = pe.n[(0, 0)];
            b
        };
        assert_eq!(back, m);
    }

    #[test]
    fn peel_block_diagonal() {
        let (s, _) = two_by_two(0.1, 0.01);
        let m = assemble_graded(&s, &DMatrix::zeros(2, 2)).unwrap();
        let pe = peel(&m, &s).unwrap();
        assert_eq!(pe.z, pe.n);
        assert!((pe.z[(0, 0)] - 0.02).abs() < 1e-17);
    }

    #[test]
    fn quadratic_formula_clusters() {
        let (tau, h) = (0.05, 0.01);
        let (s, p) = two_by_two(tau, h);
        let m = assemble_graded(&s, &p).unwrap();
        // eigenvalues of [[1, t h],[t h, 2 t^2]]
        let (a, d, b) = (1.0, 2.0 * tau * tau, tau * h);
        let disc = ((a - d) * (a - d) / 4.0 + b * b).sqrt();
        let exact = [(a + d) / 2.0 - disc, (a + d) / 2.0 + disc];
        let rep = localized_spectrum(&m, &s, default_k(&s)).unwrap();
        assert!(rep.counts_match);
        assert!((rep.eigenvalues[0][0] - exact[0]).abs() < 1e-15);
        assert!((rep.eigenvalues[1][0] - exact[1]).abs() < 1e-14);
        assert_eq!(rep.discs.iter().map(|d| d.count).collect::<Vec<_>>(), vec![1, 1]);
        assert!(rep.resolvent.pass);
    }

    #[test]
    fn eigenvalue_outside_discs_is_reported() {
        let (s, _) = two_by_two(0.1, 0.001);
        let big = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let m = assemble_graded(&s, &big).unwrap();
        assert!(matches!(localized_spectrum(&m, &s, 10.0), Err(GradedError::Outside { .. })));
    }

    #[test]
    fn recursive_matches_dense_and_projector() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let params = RandomParams::default();
        for _ in 0..20 {
            let inst = random_instance(&mut rng, &params);
            let m = inst.matrix().unwrap();
            let s = &inst.structure;
            let rep = localized_spectrum(&m, s, default_k(s)).unwrap();
            assert!(rep.counts_match);
            let rec = recursive_spectrum(&m, s).unwrap();
            let eps = s.eps();
            for (z, &d) in rep.eigenvalues.iter().zip(&rep.assignment) {
                let scale = eps[rep.discs[d].block].powi(2);
                let r = nearest(&rec, cz(*z));
                assert!((r - cz(*z)).norm() <= 1e-8 * scale, "{r} vs {z:?}");
            }
            if m.nrows() <= 20 {
                for d in &rep.discs {
                    assert_eq!(projector_rank(&m, cz(d.center), d.radius, 64).unwrap(), d.multiplicity);
                }
            }
        }
    }

    #[test]
    fn diagonalizable_resolvent_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_block(&mut rng, 4);
        let ev = dense::eigenvalues(&m).unwrap();
        let cond = eigvec_condition(&m, &ev).unwrap();
        for _ in 0..100 {
            let z = Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let dist = ev.iter().map(|l| (l - z).norm()).fold(f64::INFINITY, f64::min);
            assert!(dense::resolvent_norm(&m, z) * dist <= cond * 1.01);
        }
    }
}
