//! Quasimodes psi = theta (kappa + 1) on the PDE grid and their weighted quadratic forms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretize::{Grid, OperatorMatrix};
use crate::labelling::{LabelError, SublevelTopology, WellEntry, WellMap};
use crate::landscape::{CriticalPoint, Landscape};
use crate::saddle::SaddleSpectralData;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuasimodeError {
    #[error("E_(m,3rho0,3delta0) has {count} components with m/m-hat split {detail}; rho0 or delta0 too large or grid too coarse (retry with smaller values)")]
    ComponentCount { count: usize, detail: String },
    #[error("strip regions of two saddles overlap")]
    StripOverlap,
    #[error("no partner component for this minimum (non-generic landscape)")]
    NoPartner,
    #[error("missing saddle data for critical point {0}")]
    MissingSaddle(usize),
    #[error("quasimode grid ({0} nodes) does not match operator grid ({1} nodes)")]
    GridMismatch(usize, usize),
    #[error("support structure violated between minima {0} and {1}: supports neither disjoint nor nested")]
    SupportStructure(usize, usize),
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error(transparent)]
    Label(#[from] LabelError),
}

/// e^{-1/t} glue: 1 for t <= 0, 0 for t >= 1, smooth in between.
pub fn glue(t: f64) -> f64 {
    let f = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let a = f(1.0 - t);
        a / (a + f(t))
    }
}

/// Even plateau bump: 1 on [-1, 1], 0 off [-2, 2].
pub fn chi(eta: f64) -> f64 {
    glue(eta.abs() - 1.0)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

const QUAD_TOL: f64 = 1e-12;

/// The error-function profile across one saddle.
#[derive(Debug, Clone, Copy)]
pub struct Profile {
    pub abs_mu: f64,
    pub rho0: f64,
    pub h: f64,
    /// C_{s,h}: half the full integral.
    pub c: f64,
}

impl Profile {
    pub fn new(abs_mu: f64, rho0: f64, h: f64) -> Self {
        let mut p = Profile { abs_mu, rho0, h, c: 1.0 };
        p.c = adaptive_simpson(&|e| p.integrand(e), 0.0, 2.0 * rho0, QUAD_TOL);
        p
    }

    #[inline]
    fn integrand(&self, eta: f64) -> f64 {
        chi(eta / self.rho0) * (-self.abs_mu * eta * eta / (2.0 * self.h)).exp()
    }

    /// kappa at signed distance t = xi . (x - s).
    pub fn kappa(&self, t: f64) -> f64 {
        if t.abs() >= 2.0 * self.rho0 {
            return t.signum();
        }
        // quadrature noise can overshoot the plateau by ~1e-13
        (adaptive_simpson(&|e| self.integrand(e), 0.0, t, QUAD_TOL) / self.c).clamp(-1.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffParams {
    pub rho0: f64,
    pub delta0: f64,
}

#[derive(Debug, Clone)]
pub struct Strip {
    pub saddle: usize,
    pub location: Vec<f64>,
    pub xi: Vec<f64>,
    pub abs_mu: f64,
    pub mask: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct CutoffGeometry {
    pub minimum: usize,
    pub partner: usize,
    pub params: CutoffParams,
    pub sigma: f64,
    pub sigma_prev: Option<f64>,
    pub grid: Grid,
    pub potential: Vec<f64>,
    pub e_minus: Vec<bool>,
    pub strips: Vec<Strip>,
    pub e_plus_side: Vec<bool>,
    pub e_minus_side: Vec<bool>,
}

fn topology_for(land: &Landscape, grid: &Grid) -> Result<SublevelTopology, QuasimodeError> {
    if (land.half_width - grid.half_width).abs() > 1e-12 {
        return Err(QuasimodeError::Invalid("grid box differs from the landscape box".into()));
    }
    Ok(SublevelTopology::new(land, grid.n)?)
}

/// Default (rho0, delta0): rho0 keeps m and m-hat outside the 3 rho0 strips; delta0 is
/// 0.2 times the gap to the previous level, or large enough that theta = 1 on the box
/// when the previous level is +infinity.
pub fn default_params(
    entry: &WellEntry,
    criticals: &[CriticalPoint],
    saddles: &[SaddleSpectralData],
    max_box_v: f64,
) -> Result<CutoffParams, QuasimodeError> {
    let sigma = entry.sigma.ok_or_else(|| QuasimodeError::Invalid("global minimum has no cutoff".into()))?;
    let partner = entry.partner.ok_or(QuasimodeError::NoPartner)?;
    let m = &criticals[entry.minimum].location;
    let mh = &criticals[partner].location;
    let mut reach = f64::INFINITY;
    for s in &entry.saddles {
        let d = saddles.iter().find(|d| d.saddle == *s).ok_or(QuasimodeError::MissingSaddle(*s))?;
        let proj = |p: &[f64]| d.xi.iter().zip(p).zip(&d.location).map(|((x, a), b)| x * (a - b)).sum::<f64>();
        reach = reach.min(proj(m).abs()).min(proj(mh).abs());
    }
    let rho0 = 0.3 * reach;
    let delta0 = match entry.sigma_prev {
        Some(prev) => 0.2 * (prev - sigma),
        None => ((max_box_v - sigma) / 1.5).max(0.0) + 1.0,
    };
    Ok(CutoffParams { rho0, delta0 })
}

pub fn build_cutoffs(
    land: &Landscape,
    entry: &WellEntry,
    criticals: &[CriticalPoint],
    saddles: &[SaddleSpectralData],
    params: CutoffParams,
    grid: &Grid,
) -> Result<CutoffGeometry, QuasimodeError> {
    if !(params.rho0 > 0.0 && params.delta0 > 0.0) {
        return Err(QuasimodeError::Invalid(format!("rho0 and delta0 must be positive: {params:?}")));
    }
    let sigma = entry.sigma.ok_or_else(|| QuasimodeError::Invalid("global minimum has no cutoff".into()))?;
    let partner = entry.partner.ok_or(QuasimodeError::NoPartner)?;
    if let Some(prev) = entry.sigma_prev {
        if sigma + 2.0 * params.delta0 >= prev {
            return Err(QuasimodeError::Invalid(format!(
                "delta0 = {} too large: sigma + 2 delta0 must stay below the previous level {prev}",
                params.delta0
            )));
        }
    }
    let topo = topology_for(land, grid)?;
    let total = grid.len();
    let m_node = topo.nearest_node(&criticals[entry.minimum].location);
    let mh_node = topo.nearest_node(&criticals[partner].location);

    let e_minus: Vec<bool> = match entry.sigma_prev {
        None => vec![true; total],
        Some(prev) => {
            let comps = topo.components(prev);
            let id = comps.of(m_node).ok_or_else(|| QuasimodeError::Invalid("minimum outside its sublevel set".into()))?;
            comps.label.iter().map(|&l| l == id).collect()
        }
    };

    let top = sigma + 3.0 * params.delta0;
    let mut strips = Vec::new();
    for s in &entry.saddles {
        let d = saddles.iter().find(|d| d.saddle == *s).ok_or(QuasimodeError::MissingSaddle(*s))?;
        let in_b: Vec<bool> = (0..total)
            .map(|k| {
                let p = grid.point(k);
                let t = d.xi[0] * (p[0] - d.location[0]) + d.xi[1] * (p[1] - d.location[1]);
                topo.values[k] <= top && t.abs() <= 3.0 * params.rho0
            })
            .collect();
        let comps = topo.components_masked(f64::INFINITY, |k| in_b[k]);
        let s_node = topo.nearest_node(&d.location);
        let id = comps.of(s_node).ok_or_else(|| QuasimodeError::Invalid("saddle node outside its strip".into()))?;
        strips.push(Strip {
            saddle: *s,
            location: d.location.clone(),
            xi: d.xi.clone(),
            abs_mu: d.mu.abs(),
            mask: comps.label.iter().map(|&l| l == id).collect(),
        });
    }
    for a in 0..strips.len() {
        for b in a + 1..strips.len() {
            if strips[a].mask.iter().zip(&strips[b].mask).any(|(x, y)| *x && *y) {
                return Err(QuasimodeError::StripOverlap);
            }
        }
    }
    let in_strip = |k: usize| strips.iter().any(|s| s.mask[k]);
    let region = |k: usize| e_minus[k] && topo.values[k] < top && !in_strip(k);
    let comps = topo.components_masked(f64::INFINITY, region);
    let cm = comps.of(m_node);
    let ch = comps.of(mh_node);
    match (cm, ch) {
        (Some(a), Some(b)) if a != b && comps.count == 2 => {
            let e_plus_side = comps.label.iter().map(|&l| l == a).collect();
            let e_minus_side = comps.label.iter().map(|&l| l == b).collect();
            Ok(CutoffGeometry {
                minimum: entry.minimum,
                partner,
                params,
                sigma,
                sigma_prev: entry.sigma_prev,
                grid: *grid,
                potential: topo.values,
                e_minus,
                strips,
                e_plus_side,
                e_minus_side,
            })
        }
        _ => Err(QuasimodeError::ComponentCount {
            count: comps.count,
            detail: format!("m in {cm:?}, m-hat in {ch:?}"),
        }),
    }
}

/// Tries the default parameters, then shrinks both by 0.7 up to five times.
pub fn build_cutoffs_auto(
    land: &Landscape,
    entry: &WellEntry,
    criticals: &[CriticalPoint],
    saddles: &[SaddleSpectralData],
    grid: &Grid,
) -> Result<CutoffGeometry, QuasimodeError> {
    let max_v = (0..grid.len()).map(|k| land.potential(&grid.point(k))).fold(f64::NEG_INFINITY, f64::max);
    let mut p = default_params(entry, criticals, saddles, max_v)?;
    let mut last = None;
    for _ in 0..6 {
        match build_cutoffs(land, entry, criticals, saddles, p, grid) {
            Ok(g) => return Ok(g),
            Err(e) => last = Some(e),
        }
        p.rho0 *= 0.7;
        if entry.sigma_prev.is_some() {
            p.delta0 *= 0.7;
        }
    }
    Err(last.unwrap_or(QuasimodeError::Invalid("no attempt made".into())))
}

#[derive(Debug, Clone)]
pub struct Quasimode {
    pub minimum: usize,
    pub h: f64,
    pub psi: Vec<f64>,
    /// ||psi||_{L^2(m_h)}
    pub norm: f64,
    pub phi: Vec<f64>,
    pub global: bool,
}

/// psi = theta (kappa + 1) on the geometry's grid, normalized with the operator weights.
pub fn build_quasimode(geom: &CutoffGeometry, h: f64, weights: &[f64]) -> Result<Quasimode, QuasimodeError> {
    if weights.len() != geom.grid.len() {
        return Err(QuasimodeError::GridMismatch(geom.grid.len(), weights.len()));
    }
    let p = geom.params;
    let profiles: Vec<Profile> = geom.strips.iter().map(|s| Profile::new(s.abs_mu, p.rho0, h)).collect();
    let top = geom.sigma + 3.0 * p.delta0;
    let psi: Vec<f64> = (0..geom.grid.len())
        .into_par_iter()
        .map(|k| {
            let v = geom.potential[k];
            if !geom.e_minus[k] || v >= top {
                return 0.0;
            }
            let theta = glue((v - geom.sigma - 1.5 * p.delta0) / (0.5 * p.delta0));
            if theta == 0.0 {
                return 0.0;
            }
            let kappa = if let Some((s, prof)) = geom.strips.iter().zip(&profiles).find(|(s, _)| s.mask[k]) {
                let x = geom.grid.point(k);
                prof.kappa(s.xi[0] * (x[0] - s.location[0]) + s.xi[1] * (x[1] - s.location[1]))
            } else if geom.e_plus_side[k] {
                1.0
            } else {
                -1.0
            };
            theta * (kappa + 1.0)
        })
        .collect();
    Ok(normalize(geom.minimum, h, psi, weights, false))
}

/// psi = 1 for the global minimum.
pub fn global_quasimode(minimum: usize, h: f64, weights: &[f64]) -> Quasimode {
    normalize(minimum, h, vec![1.0; weights.len()], weights, true)
}

fn normalize(minimum: usize, h: f64, psi: Vec<f64>, weights: &[f64], global: bool) -> Quasimode {
    let norm = psi.iter().zip(weights).map(|(p, w)| p * p * w).sum::<f64>().sqrt();
    let phi = psi.iter().map(|p| p / norm).collect();
    Quasimode { minimum, h, psi, norm, phi, global }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadraticForms {
    /// <L psi, psi>_w
    pub dirichlet_psi: f64,
    /// <L phi, phi>_w
    pub dirichlet_phi: f64,
    /// ||L psi||^2_w
    pub residual: f64,
    /// ||L* psi||^2_w
    pub residual_adjoint: f64,
}

pub fn dirichlet_and_residuals(qm: &Quasimode, op: &OperatorMatrix) -> Result<QuadraticForms, QuasimodeError> {
    if qm.psi.len() != op.grid.len() {
        return Err(QuasimodeError::GridMismatch(qm.psi.len(), op.grid.len()));
    }
    let lpsi = op.apply_vec(&qm.psi);
    let lspsi = op.apply_weighted_adjoint(&qm.psi);
    let d = op.weighted_dot(&lpsi, &qm.psi);
    Ok(QuadraticForms {
        dirichlet_psi: d,
        dirichlet_phi: d / (qm.norm * qm.norm),
        residual: op.weighted_dot(&lpsi, &lpsi),
        residual_adjoint: op.weighted_dot(&lspsi, &lspsi),
    })
}

/// Indices of nodes in the support, dilated by one face neighbour.
fn dilated_support(grid: &Grid, psi: &[f64]) -> Vec<bool> {
    let mut out = vec![false; psi.len()];
    for (k, &v) in psi.iter().enumerate() {
        if v != 0.0 {
            let (i, j) = grid.ij(k);
            out[k] = true;
            if i > 0 {
                out[k - 1] = true;
            }
            if i + 1 < grid.n {
                out[k + 1] = true;
            }
            if j > 0 {
                out[k - grid.n] = true;
            }
            if j + 1 < grid.n {
                out[k + grid.n] = true;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SupportRelation {
    /// One of the pair is the global (constant) quasimode.
    Global,
    Disjoint,
    /// The first is constant 2 on a neighbourhood of the second's support.
    Nested,
}

/// Support relation of a pair, one grid neighbour of margin included.
pub fn support_relation(grid: &Grid, a: &Quasimode, b: &Quasimode) -> Option<SupportRelation> {
    if a.global || b.global {
        return Some(SupportRelation::Global);
    }
    let da = dilated_support(grid, &a.psi);
    let db = dilated_support(grid, &b.psi);
    if b.psi.iter().zip(&da).all(|(v, d)| *v == 0.0 || !d) {
        return Some(SupportRelation::Disjoint);
    }
    if db.iter().zip(&a.psi).all(|(d, v)| !d || *v == 2.0) || da.iter().zip(&b.psi).all(|(d, v)| !d || *v == 2.0) {
        return Some(SupportRelation::Nested);
    }
    None
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Interaction {
    pub minima: Vec<usize>,
    /// a[j][k] = <L phi_j, phi_k>_w
    pub a: Vec<Vec<f64>>,
    /// g[j][k] = <phi_j, phi_k>_w
    pub gram: Vec<Vec<f64>>,
    pub relations: Vec<Vec<Option<SupportRelation>>>,
}

impl Interaction {
    /// Largest off-diagonal |a_jk| relative to the largest diagonal entry.
    pub fn offdiag_relative(&self) -> f64 {
        let n = self.a.len();
        let dmax = (0..n).map(|j| self.a[j][j].abs()).fold(0.0, f64::max);
        let mut off: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                if j != k {
                    off = off.max(self.a[j][k].abs());
                }
            }
        }
        off / dmax
    }

    pub fn gram_offdiag(&self) -> f64 {
        let n = self.gram.len();
        let mut off: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                if j != k {
                    off = off.max(self.gram[j][k].abs());
                }
            }
        }
        off
    }
}

pub fn interaction_matrix(qms: &[Quasimode], op: &OperatorMatrix) -> Result<Interaction, QuasimodeError> {
    for q in qms {
        if q.phi.len() != op.grid.len() {
            return Err(QuasimodeError::GridMismatch(q.phi.len(), op.grid.len()));
        }
    }
    let n = qms.len();
    let mut relations = vec![vec![None; n]; n];
    for j in 0..n {
        for k in 0..n {
            if j != k {
                let r = support_relation(&op.grid, &qms[j], &qms[k]);
                if r.is_none() {
                    return Err(QuasimodeError::SupportStructure(qms[j].minimum, qms[k].minimum));
                }
                relations[j][k] = r;
            }
        }
    }
    let lphi: Vec<Vec<f64>> = qms.iter().map(|q| op.apply_vec(&q.phi)).collect();
    let a = (0..n).map(|j| (0..n).map(|k| op.weighted_dot(&lphi[j], &qms[k].phi)).collect()).collect();
    let gram = (0..n).map(|j| (0..n).map(|k| op.weighted_dot(&qms[j].phi, &qms[k].phi)).collect()).collect();
    Ok(Interaction { minima: qms.iter().map(|q| q.minimum).collect(), a, gram, relations })
}

fn d_of(cp: &CriticalPoint) -> f64 {
    cp.det_hessian().abs().sqrt()
}

/// 4 (D_mbar / D_m) exp(-(V(m) - V(mbar))/h).
pub fn l2_prediction(m: &CriticalPoint, mbar: &CriticalPoint, h: f64) -> f64 {
    4.0 * d_of(mbar) / d_of(m) * (-(m.value - mbar.value) / h).exp()
}

/// sum over j(m) of (|mu|/2pi) (D_m / D_s) exp(-(V(s) - V(m))/h).
pub fn dirichlet_phi_prediction(
    entry: &WellEntry,
    criticals: &[CriticalPoint],
    saddles: &[SaddleSpectralData],
    h: f64,
) -> Result<f64, QuasimodeError> {
    let m = &criticals[entry.minimum];
    entry
        .saddles
        .iter()
        .map(|s| {
            let d = saddles.iter().find(|d| d.saddle == *s).ok_or(QuasimodeError::MissingSaddle(*s))?;
            let sp = &criticals[*s];
            Ok(d.mu.abs() / (2.0 * std::f64::consts::PI) * d_of(m) / d_of(sp) * (-(sp.value - m.value) / h).exp())
        })
        .sum()
}

/// sum over j(m) of (2|mu|/pi) (D_mbar / D_s) exp(-(V(s) - V(mbar))/h).
pub fn dirichlet_psi_prediction(
    entry: &WellEntry,
    wellmap: &WellMap,
    criticals: &[CriticalPoint],
    saddles: &[SaddleSpectralData],
    h: f64,
) -> Result<f64, QuasimodeError> {
    let mbar = &criticals[wellmap.global_min().minimum];
    entry
        .saddles
        .iter()
        .map(|s| {
            let d = saddles.iter().find(|d| d.saddle == *s).ok_or(QuasimodeError::MissingSaddle(*s))?;
            let sp = &criticals[*s];
            Ok(2.0 * d.mu.abs() / std::f64::consts::PI * d_of(mbar) / d_of(sp) * (-(sp.value - mbar.value) / h).exp())
        })
        .sum()
}

/// All quasimodes of a well map on one grid, in labelling order.
pub fn build_all(
    land: &Landscape,
    wellmap: &WellMap,
    criticals: &[CriticalPoint],
    saddles: &[SaddleSpectralData],
    op: &OperatorMatrix,
) -> Result<Vec<Quasimode>, QuasimodeError> {
    wellmap
        .entries
        .iter()
        .map(|e| {
            if e.sigma.is_none() {
                Ok(global_quasimode(e.minimum, op.h, &op.weights))
            } else {
                let g = build_cutoffs_auto(land, e, criticals, saddles, &op.grid)?;
                build_quasimode(&g, op.h, &op.weights)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_is_an_even_plateau() {
        assert_eq!(chi(0.0), 1.0);
        assert_eq!(chi(1.0), 1.0);
        assert_eq!(chi(2.0), 0.0);
        assert_eq!(chi(-2.5), 0.0);
        assert!((chi(1.5) - 0.5).abs() < 1e-15);
        for t in [0.1, 0.7, 1.2, 1.9] {
            assert_eq!(chi(t), chi(-t));
        }
    }

    #[test]
    fn simpson_gaussian() {
        let v = adaptive_simpson(&|x: f64| (-x * x).exp(), -6.0, 6.0, 1e-13);
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn profile_normalization_and_oddness() {
        for h in [0.05, 0.1, 0.2] {
            let p = Profile::new(4.0, 0.3, h);
            assert_eq!(p.kappa(0.0), 0.0);
            assert!((p.kappa(0.6) - 1.0).abs() < 1e-12);
            assert!((p.kappa(0.599_999) - 1.0).abs() < 1e-9);
            for t in [0.01, 0.05, 0.2, 0.45] {
                assert!((p.kappa(t) + p.kappa(-t)).abs() < 1e-10);
                assert!(p.kappa(t) > 0.0 && p.kappa(t) <= 1.0 + 1e-12);
            }
            // C^{-1} = sqrt(2|mu|/(pi h)) (1 + O(exp(-gamma/h)))
            let want = (2.0 * 4.0 / (std::f64::consts::PI * h)).sqrt();
            let rel = (1.0 / p.c / want - 1.0).abs();
            assert!(rel < 4.0 * (-4.0 * 0.09 / (2.0 * h)).exp(), "h={h} rel={rel}");
        }
    }

    use crate::labelling::analyze;
    use crate::landscape::{find_critical_points, preset, CriticalKind};
    use crate::saddle::saddle_data_for;

    struct Setup {
        land: Landscape,
        cps: Vec<CriticalPoint>,
        wm: WellMap,
        sd: Vec<SaddleSpectralData>,
    }

    fn setup(name: &str, c: f64) -> Setup {
        let land = preset(name, None, c).unwrap();
        let cps = find_critical_points(&land, 32).unwrap();
        let lab = analyze(&land, &cps, 160).unwrap();
        let sd = saddle_data_for(&land, &cps, &lab.wellmap).unwrap();
        Setup { land, cps, wm: lab.wellmap, sd }
    }

    fn shallow(s: &Setup) -> &WellEntry {
        s.wm.entries.iter().find(|e| e.sigma.is_some()).unwrap()
    }

    #[test]
    fn small_params_split_into_two_components() {
        let s = setup("tilted_double_well", 1.0);
        let e = shallow(&s);
        let p = CutoffParams { rho0: 0.1, delta0: 0.1 };
        let memberships = |n: usize| {
            let grid = Grid::new(s.land.half_width, n).unwrap();
            let g = build_cutoffs(&s.land, e, &s.cps, &s.sd, p, &grid).unwrap();
            let topo = SublevelTopology::new(&s.land, n).unwrap();
            s.cps
                .iter()
                .map(|cp| {
                    let k = topo.nearest_node(&cp.location);
                    (g.e_plus_side[k], g.e_minus_side[k], g.strips.iter().any(|st| st.mask[k]))
                })
                .collect::<Vec<_>>()
        };
        let coarse = memberships(97);
        let fine = memberships(193);
        assert_eq!(coarse, fine);
        assert_eq!(coarse[e.minimum], (true, false, false));
        assert_eq!(coarse[e.partner.unwrap()], (false, true, false));
        for (i, cp) in s.cps.iter().enumerate() {
            if cp.kind == CriticalKind::Saddle {
                assert!(coarse[i].2);
            }
        }
    }

    #[test]
    fn huge_rho_is_rejected() {
        let s = setup("tilted_double_well", 0.0);
        let grid = Grid::new(s.land.half_width, 97).unwrap();
        let r = build_cutoffs(&s.land, shallow(&s), &s.cps, &s.sd, CutoffParams { rho0: 1.5, delta0: 0.1 }, &grid);
        assert!(matches!(r, Err(QuasimodeError::ComponentCount { .. })));
    }

    #[test]
    fn quasimode_shape() {
        let s = setup("tilted_double_well", 1.0);
        let e = shallow(&s);
        let h = 0.2;
        let grid = Grid::new(s.land.half_width, 129).unwrap();
        let op = crate::discretize::assemble(&s.land, &s.cps, h, &grid, crate::discretize::Form::LWeighted).unwrap();
        let g = build_cutoffs_auto(&s.land, e, &s.cps, &s.sd, &grid).unwrap();
        let q = build_quasimode(&g, h, &op.weights).unwrap();
        assert!(q.psi.iter().all(|v| (0.0..=2.0).contains(v)));
        let topo = SublevelTopology::new(&s.land, 129).unwrap();
        let km = topo.nearest_node(&s.cps[e.minimum].location);
        assert_eq!(q.psi[km], 2.0);
        for k in topo.ball(&s.cps[e.minimum].location, 0.1) {
            assert_eq!(q.psi[k], 2.0);
        }
        assert_eq!(q.psi[topo.nearest_node(&s.cps[e.partner.unwrap()].location)], 0.0);
        let prof = Profile::new(g.strips[0].abs_mu, g.params.rho0, h);
        assert_eq!(prof.kappa(0.0), 0.0);

        let glob = global_quasimode(s.wm.global_min().minimum, h, &op.weights);
        assert!((op.weighted_norm(&glob.phi) - 1.0).abs() < 1e-12);
        let lphi = op.apply_vec(&glob.phi);
        assert!(lphi.iter().all(|v| v.abs() < 1e-9));

        let qms = vec![glob, q];
        let inter = interaction_matrix(&qms, &op).unwrap();
        let f = dirichlet_and_residuals(&qms[1], &op).unwrap();
        assert!((inter.a[1][1] - f.dirichlet_phi).abs() <= 1e-12 * f.dirichlet_phi.abs());
        assert!(inter.offdiag_relative() < 1e-10);
        assert!((inter.gram[1][1] - 1.0).abs() < 1e-12);
    }
}
