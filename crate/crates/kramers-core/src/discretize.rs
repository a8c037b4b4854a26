//! Finite-volume discretization of L on a 2D node grid, its unitary (flat) form,
//! small spectrum by shift-invert Arnoldi, and Crank-Nicolson semigroup decay.
//!
//! Diffusion uses square-root-approximation rates k_ij = (h/D^2) exp(-(V_j - V_i)/2h),
//! which satisfy detailed balance for w = exp(-V/h). When the landscape carries a
//! stream factor j (b_h w = J0 grad Phi, Phi = -h j w), the transport part is built
//! from face fluxes of Phi at cell corners, so it is exactly divergence free and
//! antisymmetric in the weighted inner product. Otherwise centered differences are
//! used. Boundary faces carry no flux.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::landscape::{CriticalPoint, Landscape};
use crate::linalg::{shift_invert, ArnoldiOptions, CsrMatrix, LinalgError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscretizeError {
    #[error("PDE discretization supports d = 2 only (got {0})")]
    Dimension(usize),
    #[error("box too small: critical point {location:?} lies within 4 grid spacings of the boundary")]
    BoxTooSmall { location: Vec<f64> },
    #[error("grid needs at least 8 nodes per axis, got {0}")]
    TooCoarse(usize),
    #[error("Peclet number {peclet:.3} exceeds 1; use at least {suggested_n} nodes per axis")]
    Peclet { peclet: f64, suggested_n: usize },
    #[error("operation needs the weighted L form")]
    WrongForm,
    #[error("time step {dt} violates dt*h/D^2 <= {limit} (value {value:.3})")]
    TimeStep { dt: f64, limit: f64, value: f64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    pub half_width: f64,
    pub delta: f64,
}

impl Grid {
    pub fn new(half_width: f64, n: usize) -> Result<Self, DiscretizeError> {
        if n < 8 {
            return Err(DiscretizeError::TooCoarse(n));
        }
        Ok(Grid { n, half_width, delta: 2.0 * half_width / (n - 1) as f64 })
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.n, k / self.n)
    }

    #[inline]
    pub fn coord(&self, t: usize) -> f64 {
        -self.half_width + self.delta * t as f64
    }

    #[inline]
    pub fn point(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.ij(k);
        [self.coord(i), self.coord(j)]
    }

    pub fn nodes(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Form {
    /// L itself, paired with the weights w for inner products.
    LWeighted,
    /// h W^{1/2} L W^{-1/2}, the flat form acting on L^2(dx).
    PFlat,
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub form: Form,
    pub h: f64,
    pub grid: Grid,
    pub matrix: CsrMatrix,
    pub boundary: &'static str,
    /// V at the nodes.
    pub potential: Vec<f64>,
    /// Normalized node weights exp(-V/h)/Z (sum to one).
    pub weights: Vec<f64>,
    pub stream_fluxes: bool,
}

impl OperatorMatrix {
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        self.matrix.matvec(u, out);
    }

    pub fn apply_vec(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.matrix.matvec(u, &mut out);
        out
    }

    /// Adjoint in the weighted inner product: (A* u)_i = sum_j w_j A_ji u_j / w_i.
    pub fn apply_weighted_adjoint(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let mut out = vec![0.0; n];
        for j in 0..n {
            let wu = self.weights[j] * u[j];
            for (i, a) in self.matrix.row(j) {
                out[i] += a * wu;
            }
        }
        for i in 0..n {
            out[i] /= self.weights[i];
        }
        out
    }

    pub fn weighted_dot(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).zip(&self.weights).map(|((a, b), w)| a * b * w).sum()
    }

    pub fn weighted_norm(&self, u: &[f64]) -> f64 {
        self.weighted_dot(u, u).sqrt()
    }

    pub fn weighted_mean(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }
}

/// Largest |grad V + b_h| over the nodes times D/2h.
pub fn peclet(land: &Landscape, h: f64, grid: &Grid) -> f64 {
    let mut u = [0.0; 2];
    let mut best = 0.0f64;
    for k in 0..grid.len() {
        land.drift_into(&grid.point(k), h, &mut u);
        best = best.max(u[0].hypot(u[1]));
    }
    grid.delta * best / (2.0 * h)
}

pub fn check_box(grid: &Grid, criticals: &[CriticalPoint]) -> Result<(), DiscretizeError> {
    let margin = 4.0 * grid.delta;
    for cp in criticals {
        if cp.location.iter().any(|&x| grid.half_width - x.abs() < margin) {
            return Err(DiscretizeError::BoxTooSmall { location: cp.location.clone() });
        }
    }
    Ok(())
}

fn log_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = v.clone().fold(f64::NEG_INFINITY, f64::max);
    m + v.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Per-node transport data: for each of the 4 face neighbours (E, N, W, S),
/// either the corner potentials (stream form) or the centered rate.
struct Transport {
    stream: bool,
    /// stream factor at the corners, index (ci, cj) in 0..=n
    corner_j: Vec<f64>,
    corner_v: Vec<f64>,
    /// b_h at nodes (centered form)
    bh: Vec<[f64; 2]>,
}

impl Transport {
    fn new(land: &Landscape, h: f64, grid: &Grid) -> Self {
        let n = grid.n;
        if land.has_stream() {
            let m = n + 1;
            let mut corner_j = vec![0.0; m * m];
            let mut corner_v = vec![0.0; m * m];
            for cj in 0..m {
                for ci in 0..m {
                    let x = [grid.coord(ci) - 0.5 * grid.delta, grid.coord(cj) - 0.5 * grid.delta];
                    let outer = ci == 0 || cj == 0 || ci == n || cj == n;
                    corner_j[cj * m + ci] = if outer { 0.0 } else { land.stream_at(&x).unwrap_or(0.0) };
                    corner_v[cj * m + ci] = land.potential(&x);
                }
            }
            Transport { stream: true, corner_j, corner_v, bh: Vec::new() }
        } else {
            let bh = (0..grid.len())
                .into_par_iter()
                .map(|k| {
                    let b = land.bh_at(&grid.point(k), h);
                    [b[0], b[1]]
                })
                .collect();
            Transport { stream: false, corner_j: Vec::new(), corner_v: Vec::new(), bh }
        }
    }

    /// Phi(corner) / w(ref) = -h j exp(-(V_c - ref)/h).
    #[inline]
    fn phi_rel(&self, grid: &Grid, ci: usize, cj: usize, h: f64, reference: f64) -> f64 {
        let m = grid.n + 1;
        let k = cj * m + ci;
        let j = self.corner_j[k];
        if j == 0.0 {
            0.0
        } else {
            -h * j * (-(self.corner_v[k] - reference) / h).exp()
        }
    }

    /// Outward flux F_ij through the face towards neighbour `dir`, divided by w at `reference`.
    /// dir: 0 = E, 1 = N, 2 = W, 3 = S.
    fn flux_rel(&self, grid: &Grid, i: usize, j: usize, dir: usize, h: f64, reference: f64) -> f64 {
        // corner (ci, cj) sits at (x_i - D/2, y_j - D/2); cell i has SW=(i,j), SE=(i+1,j), NE=(i+1,j+1), NW=(i,j+1)
        let p = |ci, cj| self.phi_rel(grid, ci, cj, h, reference);
        match dir {
            0 => p(i + 1, j + 1) - p(i + 1, j),
            1 => p(i, j + 1) - p(i + 1, j + 1),
            2 => p(i, j) - p(i, j + 1),
            _ => p(i + 1, j) - p(i, j),
        }
    }
}

/// Neighbour in direction dir (E, N, W, S), if inside the grid.
#[inline]
fn neighbor(grid: &Grid, i: usize, j: usize, dir: usize) -> Option<(usize, usize)> {
    match dir {
        0 if i + 1 < grid.n => Some((i + 1, j)),
        1 if j + 1 < grid.n => Some((i, j + 1)),
        2 if i > 0 => Some((i - 1, j)),
        3 if j > 0 => Some((i, j - 1)),
        _ => None,
    }
}

const NORMALS: [[f64; 2]; 4] = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];

/// Which resolution guards `assemble_with` enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Guards {
    pub peclet: bool,
    pub box_margin: bool,
}

impl Default for Guards {
    fn default() -> Self {
        Guards { peclet: true, box_margin: true }
    }
}

impl Guards {
    /// For algebraic checks on deliberately coarse grids.
    pub fn none() -> Self {
        Guards { peclet: false, box_margin: false }
    }
}

/// Assembles the weighted generator L or its flat form h W^{1/2} L W^{-1/2}.
pub fn assemble(
    land: &Landscape,
    criticals: &[CriticalPoint],
    h: f64,
    grid: &Grid,
    form: Form,
) -> Result<OperatorMatrix, DiscretizeError> {
    assemble_with(land, criticals, h, grid, form, Guards::default())
}

pub fn assemble_with(
    land: &Landscape,
    criticals: &[CriticalPoint],
    h: f64,
    grid: &Grid,
    form: Form,
    guards: Guards,
) -> Result<OperatorMatrix, DiscretizeError> {
    if land.dim != 2 {
        return Err(DiscretizeError::Dimension(land.dim));
    }
    if !(h > 0.0 && h <= 1.0) {
        return Err(DiscretizeError::Invalid(format!("h must lie in (0, 1], got {h}")));
    }
    if guards.peclet {
        let pe = peclet(land, h, grid);
        if pe > 1.0 {
            let suggested_n = ((grid.n - 1) as f64 * pe).ceil() as usize + 1;
            return Err(DiscretizeError::Peclet { peclet: pe, suggested_n });
        }
    }
    if guards.box_margin {
        check_box(grid, criticals)?;
    }
    let potential: Vec<f64> = (0..grid.len()).into_par_iter().map(|k| land.potential(&grid.point(k))).collect();
    let lse = log_sum_exp(potential.iter().map(|v| -v / h));
    let weights: Vec<f64> = potential.iter().map(|v| (-v / h - lse).exp()).collect();
    let tr = Transport::new(land, h, grid);
    let d2 = grid.delta * grid.delta;

    let rows: Vec<Vec<(usize, f64)>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = grid.ij(k);
            let vi = potential[k];
            let mut row = Vec::with_capacity(5);
            let mut diag = 0.0;
            for dir in 0..4 {
                let Some((ni, nj)) = neighbor(grid, i, j, dir) else { continue };
                let q = grid.index(ni, nj);
                let vj = potential[q];
                // diffusion rate
                let ks = h / d2 * (-(vj - vi) / (2.0 * h)).exp();
                // transport rate
                let kb = if tr.stream {
                    -tr.flux_rel(grid, i, j, dir, h, vi) / (2.0 * d2)
                } else {
                    let axis_boundary = match dir {
                        0 | 2 => i == 0 || i + 1 == grid.n,
                        _ => j == 0 || j + 1 == grid.n,
                    };
                    if axis_boundary {
                        0.0
                    } else {
                        let b = tr.bh[k];
                        -(b[0] * NORMALS[dir][0] + b[1] * NORMALS[dir][1]) / (2.0 * grid.delta)
                    }
                };
                match form {
                    Form::LWeighted => {
                        diag += ks + kb;
                        row.push((q, -(ks + kb)));
                    }
                    Form::PFlat => {
                        diag += h * ks;
                        let off = if tr.stream {
                            // h F_ij / (2 D^2 sqrt(w_i w_j))
                            let mid = 0.5 * (vi + vj);
                            -h * h / d2 + h * tr.flux_rel(grid, i, j, dir, h, mid) / (2.0 * d2)
                        } else {
                            -h * h / d2 - h * kb * (-(vi - vj) / (2.0 * h)).exp()
                        };
                        if !tr.stream {
                            diag += h * kb;
                        }
                        row.push((q, off));
                    }
                }
            }
            row.push((k, diag));
            row
        })
        .collect();

    Ok(OperatorMatrix {
        form,
        h,
        grid: *grid,
        matrix: CsrMatrix::from_rows(rows),
        boundary: "no-flux",
        potential,
        weights,
        stream_fluxes: tr.stream,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Computed eigenvalues sorted by real part, as (re, im).
    pub values: Vec<[f64; 2]>,
    pub residuals: Vec<f64>,
    /// Number of eigenvalues below the observed gap.
    pub n0_observed: usize,
    /// Largest real part inside the cluster.
    pub cluster_edge: f64,
    /// Smallest excluded real part.
    pub gap_witness: f64,
    /// Half the smallest excluded real part.
    pub threshold: f64,
    pub shift: f64,
    pub krylov_dim: usize,
    #[serde(skip)]
    pub vectors: Vec<DVector<Complex64>>,
}

impl SpectrumResult {
    pub fn complex(&self) -> Vec<Complex64> {
        self.values.iter().map(|v| Complex64::new(v[0], v[1])).collect()
    }

    /// Real part of the k-th eigenvalue (0-based).
    pub fn re(&self, k: usize) -> f64 {
        self.values[k][0]
    }
}

/// Index splitting the sorted real parts at the first consecutive gap at least half as
/// large as the largest one.
pub fn observed_gap(re: &[f64]) -> usize {
    if re.len() < 2 {
        return re.len();
    }
    let gaps: Vec<f64> = re.windows(2).map(|w| w[1] - w[0]).collect();
    let gmax = gaps.iter().copied().fold(0.0, f64::max);
    gaps.iter().position(|&g| g >= 0.5 * gmax).map(|k| k + 1).unwrap_or(re.len())
}

/// Shift used for the inversion: slightly left of 0 so the kernel stays regular.
pub fn default_shift(op: &OperatorMatrix) -> f64 {
    -1e-8 * op.matrix.inf_norm()
}

/// The `count` eigenvalues nearest 0 with the observed gap.
pub fn small_spectrum(op: &OperatorMatrix, count: usize, want_vectors: bool) -> Result<SpectrumResult, DiscretizeError> {
    if count == 0 || count > 20 {
        return Err(DiscretizeError::Invalid(format!("count must lie in 1..=20, got {count}")));
    }
    let opts = ArnoldiOptions { count, want_vectors, ..Default::default() };
    let mut shift = default_shift(op);
    let res = match shift_invert(&op.matrix, shift, &opts) {
        Ok(r) => r,
        Err(LinalgError::SingularPivot { .. }) => {
            shift *= 10.0;
            shift_invert(&op.matrix, shift, &opts)?
        }
        Err(e) => return Err(e.into()),
    };
    let values: Vec<[f64; 2]> = res.values.iter().map(|z| [z.re, z.im]).collect();
    let re: Vec<f64> = values.iter().map(|v| v[0]).collect();
    let n0 = observed_gap(&re);
    let cluster_edge = re[..n0].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let gap_witness = re.get(n0).copied().unwrap_or(f64::INFINITY);
    Ok(SpectrumResult {
        values,
        residuals: res.residuals,
        n0_observed: n0,
        cluster_edge,
        gap_witness,
        threshold: 0.5 * gap_witness,
        shift,
        krylov_dim: res.krylov_dim,
        vectors: res.vectors,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub dt: f64,
    pub steps: usize,
    /// (t, log ||u(t) - Pi_0 u0||_w) samples used in the fit.
    pub samples: Vec<(f64, f64)>,
}

/// Largest dt*h/D^2 accepted by the Crank-Nicolson driver.
pub const CN_LIMIT: f64 = 50.0;

/// Crank-Nicolson for u' + L u = 0 with four implicit-Euler half steps at the start;
/// returns the least-squares decay rate of the weighted norm over [T/2, T].
pub fn semigroup_decay(op: &OperatorMatrix, u0: &[f64], t_end: f64, dt: f64) -> Result<DecayFit, DiscretizeError> {
    if op.form != Form::LWeighted {
        return Err(DiscretizeError::WrongForm);
    }
    if u0.len() != op.grid.len() {
        return Err(DiscretizeError::Invalid("initial vector length does not match the grid".into()));
    }
    if !(dt > 0.0 && t_end > 4.0 * dt) {
        return Err(DiscretizeError::Invalid(format!("need 0 < 4 dt < T, got dt = {dt}, T = {t_end}")));
    }
    let value = dt * op.h / (op.grid.delta * op.grid.delta);
    if value > CN_LIMIT {
        return Err(DiscretizeError::TimeStep { dt, limit: CN_LIMIT, value });
    }
    let n = u0.len();
    let half = 0.5 * dt;
    let scaled = CsrMatrix { vals: op.matrix.vals.iter().map(|v| v * half).collect(), ..op.matrix.clone() };
    let lu = scaled.to_band_shifted(-1.0).factor()?;

    let mean = op.weighted_mean(u0);
    let mut u: Vec<f64> = u0.iter().map(|v| v - mean).collect();
    let steps = (t_end / dt).round() as usize;
    let mut t = 0.0;
    let mut samples = Vec::new();
    let mut lu_buf = vec![0.0; n];
    let record = |t: f64, u: &[f64], samples: &mut Vec<(f64, f64)>| {
        if t >= 0.5 * t_end - 1e-12 {
            let m = op.weighted_mean(u);
            let r: Vec<f64> = u.iter().map(|v| v - m).collect();
            samples.push((t, op.weighted_norm(&r).ln()));
        }
    };
    // startup: 4 implicit Euler steps of size dt/2 with the same factorization
    for _ in 0..4 {
        lu.solve_in_place(&mut u);
        t += half;
    }
    let mut done = 2;
    record(t, &u, &mut samples);
    while done < steps {
        op.matrix.matvec(&u, &mut lu_buf);
        for (ui, li) in u.iter_mut().zip(&lu_buf) {
            *ui -= half * li;
        }
        lu.solve_in_place(&mut u);
        t += dt;
        done += 1;
        record(t, &u, &mut samples);
    }
    let (slope, intercept, r2) = linear_fit(&samples);
    Ok(DecayFit { rate: -slope, intercept, r_squared: r2, dt, steps, samples })
}

/// Least-squares line y = a x + b with R^2.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (a, b, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{find_critical_points, preset};
    use crate::linalg::dense;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn build_with(name: &str, c: f64, h: f64, n: usize, form: Form, guards: Guards) -> OperatorMatrix {
        let land = preset(name, None, c).unwrap();
        let cps = find_critical_points(&land, 32).unwrap();
        let grid = Grid::new(land.half_width, n).unwrap();
        assemble_with(&land, &cps, h, &grid, form, guards).unwrap()
    }

    fn build(name: &str, c: f64, h: f64, n: usize, form: Form) -> OperatorMatrix {
        build_with(name, c, h, n, form, Guards::default())
    }

    fn coarse(name: &str, c: f64, h: f64, n: usize, form: Form) -> OperatorMatrix {
        build_with(name, c, h, n, form, Guards::none())
    }

    #[test]
    fn reversible_flat_form_is_symmetric() {
        let op = coarse("tilted_double_well", 0.0, 0.2, 24, Form::PFlat);
        let m = op.matrix.to_dense();
        let asym = (&m - m.transpose()).amax();
        assert!(asym <= 1e-12 * m.amax(), "{asym}");
    }

    #[test]
    fn constants_are_in_kernel_of_l_and_adjoint() {
        for c in [0.0, 1.0] {
            let op = coarse("tilted_double_well", c, 0.2, 32, Form::LWeighted);
            let one = vec![1.0; op.grid.len()];
            let l1 = op.apply_vec(&one);
            assert!(op.weighted_norm(&l1) <= 1e-10);
            let ls1 = op.apply_weighted_adjoint(&one);
            assert!(ls1.iter().map(|v| v.abs()).fold(0.0, f64::max) <= 1e-9 * op.matrix.inf_norm());
        }
    }

    #[test]
    fn discrete_accretivity() {
        let op = coarse("triple_well", 1.0, 0.3, 40, Form::LWeighted);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let u: Vec<f64> = (0..op.grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let q = op.weighted_dot(&op.apply_vec(&u), &u);
            assert!(q >= -1e-10, "{q}");
        }
    }

    #[test]
    fn flat_form_matches_similarity_on_dense_oracle() {
        let l = coarse("tilted_double_well", 1.0, 0.25, 20, Form::LWeighted);
        let p = coarse("tilted_double_well", 1.0, 0.25, 20, Form::PFlat);
        let el = dense::eigenvalues(&l.matrix.to_dense()).unwrap();
        let ep = dense::eigenvalues(&p.matrix.to_dense()).unwrap();
        for (a, b) in el.iter().zip(&ep).take(10) {
            assert!((a * 0.25 - b).norm() <= 1e-8 * b.norm().max(1e-3), "{a} {b}");
        }
    }

    #[test]
    fn single_well_has_one_small_eigenvalue() {
        let op = build("single_well", 0.0, 0.25, 32, Form::LWeighted);
        let sp = small_spectrum(&op, 6, false).unwrap();
        let dense_ev = dense::eigenvalues(&op.matrix.to_dense()).unwrap();
        for (a, b) in sp.complex().iter().zip(&dense_ev) {
            assert!((a - b).norm() <= 1e-8 * b.norm().max(1.0));
        }
        assert_eq!(sp.n0_observed, 1);
        assert!(sp.re(0).abs() < 1e-9);
        assert!(sp.re(1) >= 0.5 * 0.25);
    }

    #[test]
    fn spectrum_closed_under_conjugation() {
        let op = coarse("tilted_double_well", 2.0, 0.25, 40, Form::LWeighted);
        let sp = small_spectrum(&op, 10, false).unwrap();
        let z = sp.complex();
        for a in &z {
            if a.im.abs() > 1e-8 {
                assert!(z.iter().any(|b| (b - a.conj()).norm() <= 1e-8 * a.norm()));
            }
        }
    }

    #[test]
    fn peclet_guard_refuses_coarse_grid() {
        let land = preset("tilted_double_well", None, 1.0).unwrap();
        let cps = find_critical_points(&land, 32).unwrap();
        let grid = Grid::new(land.half_width, 16).unwrap();
        assert!(matches!(assemble(&land, &cps, 0.05, &grid, Form::LWeighted), Err(DiscretizeError::Peclet { .. })));
    }

    #[test]
    fn box_too_small_rejected() {
        let land = preset("tilted_double_well", None, 0.0).unwrap().with_half_width(1.05).unwrap();
        let cps = find_critical_points(&preset("tilted_double_well", None, 0.0).unwrap(), 32).unwrap();
        let grid = Grid::new(1.05, 64).unwrap();
        assert!(matches!(assemble(&land, &cps, 0.3, &grid, Form::LWeighted), Err(DiscretizeError::BoxTooSmall { .. })));
    }

    #[test]
    fn ornstein_uhlenbeck_decay_rate() {
        let op = build("harmonic_well", 0.0, 0.2, 64, Form::LWeighted);
        let u0: Vec<f64> = op.grid.nodes().iter().map(|p| p[0] + 0.3 * p[1] * p[1]).collect();
        let fit = semigroup_decay(&op, &u0, 8.0, 0.02).unwrap();
        assert!((fit.rate - 1.0).abs() < 0.02, "{}", fit.rate);
    }

    #[test]
    fn observed_gap_picks_first_large_jump() {
        assert_eq!(observed_gap(&[0.0, 0.004, 2.0, 2.01, 4.0]), 2);
        assert_eq!(observed_gap(&[0.0, 0.05, 0.15, 2.0, 2.0, 4.1]), 3);
        assert_eq!(observed_gap(&[0.0, 1.0, 2.0, 3.0]), 1);
    }
}
