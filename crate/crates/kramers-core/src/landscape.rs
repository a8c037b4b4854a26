//! Potentials, drift fields and their critical points.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{self, Compiled, Expr, ExprError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LandscapeError {
    #[error("expression error in {field}: {source}")]
    Expr {
        field: String,
        #[source]
        source: ExprError,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("degenerate critical point at {location:?}: smallest |hessian eigenvalue| {min_abs_eig:.3e}")]
    MorseViolation { location: Vec<f64>, min_abs_eig: f64 },
    #[error("J_u = B Hess^-1 at {location:?} is not antisymmetric (defect {defect:.3e})")]
    NotAntisymmetric { location: Vec<f64>, defect: f64 },
    #[error("expected a nondegenerate critical point")]
    SingularHessian,
}

/// JSON landscape description: either a named preset or explicit expressions.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct LandscapeSpec {
    #[serde(default)]
    pub preset: Option<String>,
    /// Tilt for `tilted_double_well`.
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub dimension: Option<usize>,
    #[serde(default, rename = "V")]
    pub v: Option<String>,
    #[serde(default)]
    pub b: Option<Vec<String>>,
    #[serde(default)]
    pub nu: Option<Vec<String>>,
    /// Optional scalar j with b = j J0 grad V and nu = -J0 grad j (d = 2).
    #[serde(default)]
    pub stream: Option<String>,
    /// Half width L of the box [-L, L]^d.
    #[serde(default, rename = "box")]
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Landscape {
    pub name: String,
    pub dim: usize,
    pub v: Expr,
    pub b: Vec<Expr>,
    pub nu: Vec<Expr>,
    pub stream: Option<Expr>,
    pub half_width: f64,
    pub grad: Vec<Expr>,
    pub hess: Vec<Vec<Expr>>,
    /// jac_b[i][j] = d b_i / d x_j
    pub jac_b: Vec<Vec<Expr>>,
    compiled: CompiledFields,
}

#[derive(Debug, Clone)]
struct CompiledFields {
    v: Compiled,
    grad: Vec<Compiled>,
    hess: Vec<Vec<Compiled>>,
    b: Vec<Compiled>,
    nu: Vec<Compiled>,
    jac_b: Vec<Vec<Compiled>>,
    stream: Option<Compiled>,
}

/// Antisymmetric J0 = [[0, 1], [-1, 0]].
pub fn j0() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
}

impl Landscape {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        v: Expr,
        b: Vec<Expr>,
        nu: Vec<Expr>,
        stream: Option<Expr>,
        half_width: f64,
    ) -> Result<Self, LandscapeError> {
        if dim < 2 {
            return Err(LandscapeError::Invalid(format!("dimension must be >= 2, got {dim}")));
        }
        if b.len() != dim || nu.len() != dim {
            return Err(LandscapeError::Invalid(format!(
                "b and nu need {dim} components, got {} and {}",
                b.len(),
                nu.len()
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(LandscapeError::Invalid(format!("box half width must be positive, got {half_width}")));
        }
        if stream.is_some() && dim != 2 {
            return Err(LandscapeError::Invalid("a stream factor is only supported for d = 2".into()));
        }
        let arity = std::iter::once(&v).chain(&b).chain(&nu).chain(stream.iter()).map(Expr::arity).max().unwrap_or(0);
        if arity > dim {
            return Err(LandscapeError::Invalid(format!("expression uses variable {arity} but dimension is {dim}")));
        }
        let grad = expr::gradient(&v, dim);
        let hess = expr::hessian(&v, dim);
        let jac_b: Vec<Vec<Expr>> = b.iter().map(|bi| (0..dim).map(|j| bi.diff(j)).collect()).collect();
        let compiled = CompiledFields {
            v: Compiled::new(&v),
            grad: grad.iter().map(Compiled::new).collect(),
            hess: hess.iter().map(|r| r.iter().map(Compiled::new).collect()).collect(),
            b: b.iter().map(Compiled::new).collect(),
            nu: nu.iter().map(Compiled::new).collect(),
            jac_b: jac_b.iter().map(|r| r.iter().map(Compiled::new).collect()).collect(),
            stream: stream.as_ref().map(Compiled::new),
        };
        Ok(Landscape { name: name.into(), dim, v, b, nu, stream, half_width, grad, hess, jac_b, compiled })
    }

    /// Builds from a spec, scaling the non-reversible part (b, nu, stream) by `c`.
    pub fn from_spec(spec: &LandscapeSpec, c: f64) -> Result<Self, LandscapeError> {
        if let Some(p) = &spec.preset {
            let mut land = preset(p, spec.a, c)?;
            if let Some(l) = spec.half_width {
                land = land.with_half_width(l)?;
            }
            return Ok(land);
        }
        let dim = spec.dimension.ok_or_else(|| LandscapeError::Invalid("missing `dimension`".into()))?;
        let v_src = spec.v.as_deref().ok_or_else(|| LandscapeError::Invalid("missing `V` expression".into()))?;
        let parse = |field: &str, s: &str| {
            expr::parse(s, dim).map_err(|source| LandscapeError::Expr { field: field.to_string(), source })
        };
        let v = parse("V", v_src)?;
        let list = |field: &str, src: &Option<Vec<String>>| -> Result<Vec<Expr>, LandscapeError> {
            match src {
                None => Ok(vec![expr::constant(0.0); dim]),
                Some(items) => items
                    .iter()
                    .enumerate()
                    .map(|(i, s)| parse(&format!("{field}[{i}]"), s).map(|e| expr::mul(expr::constant(c), e)))
                    .collect(),
            }
        };
        let b = list("b", &spec.b)?;
        let nu = list("nu", &spec.nu)?;
        let stream = match &spec.stream {
            Some(s) => Some(expr::mul(expr::constant(c), parse("stream", s)?)),
            None => None,
        };
        let l = spec.half_width.ok_or_else(|| LandscapeError::Invalid("missing `box`".into()))?;
        Landscape::new("custom", dim, v, b, nu, stream, l)
    }

    pub fn with_half_width(self, l: f64) -> Result<Self, LandscapeError> {
        Landscape::new(self.name, self.dim, self.v, self.b, self.nu, self.stream, l)
    }

    /// Same V with b, nu and the stream factor negated (the weighted adjoint's field).
    pub fn reversed(&self) -> Result<Self, LandscapeError> {
        let b = self.b.iter().map(|e| expr::neg(e.clone())).collect();
        let nu = self.nu.iter().map(|e| expr::neg(e.clone())).collect();
        let stream = self.stream.clone().map(expr::neg);
        Landscape::new(format!("{}-reversed", self.name), self.dim, self.v.clone(), b, nu, stream, self.half_width)
    }

    pub fn potential(&self, x: &[f64]) -> f64 {
        self.compiled.v.eval(x)
    }

    pub fn grad_at(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.dim, self.compiled.grad.iter().map(|g| g.eval(x)))
    }

    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, g) in out.iter_mut().zip(&self.compiled.grad) {
            *o = g.eval(x);
        }
    }

    pub fn hess_at(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.compiled.hess[i][j].eval(x))
    }

    pub fn b_at(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.dim, self.compiled.b.iter().map(|g| g.eval(x)))
    }

    pub fn nu_at(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.dim, self.compiled.nu.iter().map(|g| g.eval(x)))
    }

    /// b_h = b + h nu
    pub fn bh_at(&self, x: &[f64], h: f64) -> DVector<f64> {
        self.b_at(x) + self.nu_at(x) * h
    }

    /// Drift U_h = grad V + b + h nu written into `out`.
    pub fn drift_into(&self, x: &[f64], h: f64, out: &mut [f64]) {
        let c = &self.compiled;
        for i in 0..self.dim {
            out[i] = c.grad[i].eval(x) + c.b[i].eval(x) + h * c.nu[i].eval(x);
        }
    }

    pub fn jac_b_at(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.compiled.jac_b[i][j].eval(x))
    }

    pub fn stream_at(&self, x: &[f64]) -> Option<f64> {
        self.compiled.stream.as_ref().map(|s| s.eval(x))
    }

    pub fn has_stream(&self) -> bool {
        self.stream.is_some()
    }

    /// Largest |U_h| over the nodes of an m^d sampling grid of the box.
    pub fn max_drift(&self, h: f64, m: usize) -> f64 {
        let mut best = 0.0f64;
        let mut x = vec![0.0; self.dim];
        let mut u = vec![0.0; self.dim];
        let total = m.pow(self.dim as u32);
        for k in 0..total {
            let mut r = k;
            for xi in x.iter_mut() {
                let t = r % m;
                r /= m;
                *xi = -self.half_width + 2.0 * self.half_width * t as f64 / (m - 1) as f64;
            }
            self.drift_into(&x, h, &mut u);
            best = best.max(u.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
        best
    }
}

/// b = c J0 grad V for a 2D potential, with matching constant stream factor.
fn rotational(name: &str, v: Expr, c: f64, l: f64) -> Result<Landscape, LandscapeError> {
    let dv_dx = v.diff(0);
    let dv_dy = v.diff(1);
    let b = vec![expr::mul(expr::constant(c), dv_dy), expr::mul(expr::constant(-c), dv_dx)];
    let nu = vec![expr::constant(0.0), expr::constant(0.0)];
    Landscape::new(name, 2, v, b, nu, Some(expr::constant(c)), l)
}

pub const PRESETS: &[&str] = &["sym_double_well", "tilted_double_well", "triple_well", "single_well", "harmonic_well"];

pub fn preset(name: &str, a: Option<f64>, c: f64) -> Result<Landscape, LandscapeError> {
    let p = |s: &str| expr::parse(s, 2).expect("preset expression");
    match name {
        "sym_double_well" => rotational(name, p("(x^2-1)^2 + y^2"), c, 1.5),
        "tilted_double_well" => {
            let a = a.unwrap_or(0.5);
            let v = expr::add(p("(x^2-1)^2 + y^2"), expr::mul(expr::constant(a), expr::var(0)));
            rotational(name, v, c, 1.5)
        }
        "triple_well" => rotational(name, p("x^2*(x-2)^2*(x+2)^2/16 + 0.3*x + y^2"), c, 2.5),
        "single_well" => rotational(name, p("x^2 + y^2"), c, 1.5),
        "harmonic_well" => rotational(name, p("(x^2 + y^2)/2"), c, 2.0),
        other => Err(LandscapeError::UnknownPreset(other.to_string())),
    }
}

// ---------------------------------------------------------------- critical points

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalKind {
    Minimum,
    Saddle,
    HigherIndex,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub location: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    /// Row-major d x d.
    pub hessian: Vec<f64>,
    pub morse_index: usize,
    pub kind: CriticalKind,
}

impl CriticalPoint {
    pub fn hessian_matrix(&self) -> DMatrix<f64> {
        let d = self.location.len();
        DMatrix::from_row_slice(d, d, &self.hessian)
    }

    pub fn det_hessian(&self) -> f64 {
        self.hessian_matrix().determinant()
    }
}

pub const MORSE_THRESHOLD: f64 = 1e-6;
pub const NEWTON_TOL: f64 = 1e-10;
const DEDUP_RADIUS: f64 = 1e-6;

fn newton(land: &Landscape, x0: &[f64]) -> Option<DVector<f64>> {
    let mut x = DVector::from_column_slice(x0);
    let l = land.half_width;
    for _ in 0..60 {
        let g = land.grad_at(x.as_slice());
        let gn = g.norm();
        if !gn.is_finite() {
            return None;
        }
        let h = land.hess_at(x.as_slice());
        let step = h.lu().solve(&g)?;
        if !step.iter().all(|s| s.is_finite()) {
            return None;
        }
        x -= &step;
        if x.iter().any(|&xi| xi.abs() > 2.0 * l) {
            return None;
        }
        if step.norm() <= 1e-15 * (1.0 + x.norm()) {
            break;
        }
    }
    let g = land.grad_at(x.as_slice());
    (g.norm() <= NEWTON_TOL).then_some(x)
}

fn seeds(land: &Landscape, per_axis: usize) -> Vec<Vec<f64>> {
    let d = land.dim;
    let l = land.half_width;
    let total = (per_axis as f64).powi(d as i32);
    if total <= 65536.0 {
        let total = per_axis.pow(d as u32);
        (0..total)
            .map(|k| {
                let mut r = k;
                (0..d)
                    .map(|_| {
                        let t = r % per_axis;
                        r /= per_axis;
                        -l + 2.0 * l * (t as f64 + 0.5) / per_axis as f64
                    })
                    .collect()
            })
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0xc0ffee);
        (0..65536).map(|_| (0..d).map(|_| rng.random_range(-l..l)).collect()).collect()
    }
}

pub fn find_critical_points(land: &Landscape, seed_resolution: usize) -> Result<Vec<CriticalPoint>, LandscapeError> {
    if seed_resolution < 8 {
        return Err(LandscapeError::Invalid(format!("seed resolution must be >= 8, got {seed_resolution}")));
    }
    let found: Vec<DVector<f64>> = seeds(land, seed_resolution).par_iter().filter_map(|s| newton(land, s)).collect();
    let l = land.half_width;
    let mut uniq: Vec<DVector<f64>> = Vec::new();
    for x in found {
        if x.iter().any(|&xi| xi.abs() >= l * (1.0 - 1e-9)) {
            continue;
        }
        if !uniq.iter().any(|u| (u - &x).norm() <= DEDUP_RADIUS) {
            uniq.push(x);
        }
    }
    uniq.sort_by(|a, b| {
        a.iter().zip(b.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    uniq.iter().map(|x| classify(land, x.as_slice())).collect()
}

pub fn classify(land: &Landscape, x: &[f64]) -> Result<CriticalPoint, LandscapeError> {
    let h = land.hess_at(x);
    let eig = SymmetricEigen::new(h.clone()).eigenvalues;
    let min_abs = eig.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
    if min_abs < MORSE_THRESHOLD {
        return Err(LandscapeError::MorseViolation { location: x.to_vec(), min_abs_eig: min_abs });
    }
    let morse_index = eig.iter().filter(|&&e| e < 0.0).count();
    let kind = match morse_index {
        0 => CriticalKind::Minimum,
        1 => CriticalKind::Saddle,
        _ => CriticalKind::HigherIndex,
    };
    Ok(CriticalPoint {
        location: x.to_vec(),
        value: land.potential(x),
        grad_norm: land.grad_at(x).norm(),
        hessian: h.transpose().as_slice().to_vec(),
        morse_index,
        kind,
    })
}

// ---------------------------------------------------------------- stationarity

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StationarityReport {
    /// max |b . grad V|
    pub b_dot_grad: f64,
    /// max |div nu|
    pub div_nu: f64,
    /// max |div b - nu . grad V|
    pub div_b: f64,
    pub samples: usize,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn validate_stationarity(land: &Landscape, samples: usize, tolerance: f64, seed: u64) -> StationarityReport {
    let d = land.dim;
    let div_nu_expr: Vec<Compiled> = land.nu.iter().enumerate().map(|(i, n)| Compiled::new(&n.diff(i))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = land.half_width;
    let (mut r1, mut r2, mut r3) = (0.0f64, 0.0f64, 0.0f64);
    let n = samples.max(100);
    for _ in 0..n {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-l..l)).collect();
        let g = land.grad_at(&x);
        let b = land.b_at(&x);
        let nu = land.nu_at(&x);
        let jb = land.jac_b_at(&x);
        let div_b: f64 = (0..d).map(|i| jb[(i, i)]).sum();
        let div_nu: f64 = div_nu_expr.iter().map(|c| c.eval(&x)).sum();
        r1 = r1.max(b.dot(&g).abs());
        r2 = r2.max(div_nu.abs());
        r3 = r3.max((div_b - nu.dot(&g)).abs());
    }
    let pass = r1 <= tolerance && r2 <= tolerance && r3 <= tolerance;
    StationarityReport { b_dot_grad: r1, div_nu: r2, div_b: r3, samples: n, tolerance, pass }
}

/// Checks w b_h = J0 grad(-h j w) pointwise, i.e. b = j J0 grad V and nu = -J0 grad j.
pub fn stream_consistency(land: &Landscape, samples: usize, seed: u64) -> Option<f64> {
    let s = land.stream.as_ref()?;
    let ds = [Compiled::new(&s.diff(0)), Compiled::new(&s.diff(1))];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = land.half_width;
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = [rng.random_range(-l..l), rng.random_range(-l..l)];
        let j = land.stream_at(&x).unwrap_or(0.0);
        let g = land.grad_at(&x);
        let b = land.b_at(&x);
        let nu = land.nu_at(&x);
        let (sx, sy) = (ds[0].eval(&x), ds[1].eval(&x));
        worst = worst
            .max((b[0] - j * g[1]).abs())
            .max((b[1] + j * g[0]).abs())
            .max((nu[0] + sy).abs())
            .max((nu[1] - sx).abs());
    }
    Some(worst)
}

/// J_u = B(u) Hess V(u)^{-1}, checked for antisymmetry.
pub fn local_antisymmetric_factor(cp: &CriticalPoint, land: &Landscape) -> Result<DMatrix<f64>, LandscapeError> {
    let b = land.jac_b_at(&cp.location);
    let h = cp.hessian_matrix();
    let hinv = h.try_inverse().ok_or(LandscapeError::SingularHessian)?;
    let j = b * hinv;
    let defect = (&j + j.transpose()).norm();
    if defect > 1e-8 * (1.0 + j.norm()) {
        return Err(LandscapeError::NotAntisymmetric { location: cp.location.clone(), defect });
    }
    Ok(j)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic_roots(a: f64) -> Vec<f64> {
        // sign-change bracketing and bisection on 4x^3 - 4x + a
        let f = |x: f64| 4.0 * x * x * x - 4.0 * x + a;
        let mut roots = Vec::new();
        let n = 4000;
        for k in 0..n {
            let (mut lo, mut hi) = (-2.0 + 4.0 * k as f64 / n as f64, -2.0 + 4.0 * (k + 1) as f64 / n as f64);
            if f(lo) * f(hi) < 0.0 {
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if f(lo) * f(mid) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
        }
        roots
    }

    #[test]
    fn tilted_well_critical_points() {
        let land = preset("tilted_double_well", Some(0.5), 0.0).unwrap().with_half_width(2.0).unwrap();
        let cps = find_critical_points(&land, 32).unwrap();
        assert_eq!(cps.len(), 3);
        let roots = cubic_roots(0.5);
        assert_eq!(roots.len(), 3);
        for (cp, r) in cps.iter().zip(&roots) {
            assert!((cp.location[0] - r).abs() < 1e-10, "{:?} vs {r}", cp.location);
            assert!(cp.location[1].abs() < 1e-12);
            assert!(cp.grad_norm <= NEWTON_TOL);
        }
        let idx: Vec<usize> = cps.iter().map(|c| c.morse_index).collect();
        assert_eq!(idx, vec![0, 1, 0]);
    }

    #[test]
    fn symmetric_saddle_hessian() {
        let land = preset("sym_double_well", None, 1.0).unwrap();
        let cps = find_critical_points(&land, 32).unwrap();
        let s = cps.iter().find(|c| c.kind == CriticalKind::Saddle).unwrap();
        assert!(s.location.iter().all(|x| x.abs() < 1e-12));
        let h = s.hessian_matrix();
        // finite-difference cross-check of the hand-derived diag(-4, 2)
        let eps = 1e-4;
        for i in 0..2 {
            for j in 0..2 {
                let mut xp = s.location.clone();
                xp[j] += eps;
                let mut xm = s.location.clone();
                xm[j] -= eps;
                let fd = (land.grad_at(&xp)[i] - land.grad_at(&xm)[i]) / (2.0 * eps);
                assert!((fd - h[(i, j)]).abs() < 1e-6);
            }
        }
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[-4.0, 0.0, 0.0, 2.0]));
    }

    #[test]
    fn single_well_has_one_minimum() {
        let land = preset("single_well", None, 0.0).unwrap();
        let cps = find_critical_points(&land, 16).unwrap();
        assert_eq!(cps.len(), 1);
        assert_eq!(cps[0].kind, CriticalKind::Minimum);
        assert!(cps[0].location.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn degenerate_point_rejected() {
        let v = expr::parse("x^4 + y^2", 2).unwrap();
        let zero = vec![expr::constant(0.0); 2];
        let land = Landscape::new("quartic", 2, v, zero.clone(), zero, None, 1.0).unwrap();
        assert!(matches!(find_critical_points(&land, 16), Err(LandscapeError::MorseViolation { .. })));
    }

    #[test]
    fn stationarity_examples() {
        for name in PRESETS {
            let land = preset(name, None, 1.3).unwrap();
            let rep = validate_stationarity(&land, 500, 1e-10, 1);
            assert!(rep.pass, "{name}: {rep:?}");
            assert!(stream_consistency(&land, 200, 2).unwrap() < 1e-12);
        }
        let v = expr::parse("(x^2-1)^2 + y^2", 2).unwrap();
        let g = expr::gradient(&v, 2);
        let zero = vec![expr::constant(0.0); 2];
        let bad = Landscape::new("gradient drift", 2, v, g, zero, None, 1.5).unwrap();
        let rep = validate_stationarity(&bad, 200, 1e-10, 1);
        assert!(!rep.pass);
        assert!(rep.b_dot_grad > 1e-3);
    }

    #[test]
    fn supersymmetric_field_passes() {
        // J = jt(V) J0 with jt(v) = 1 + v^2/4, b = J grad V, nu_k = sum_i d_i J_ik
        let v = expr::parse("(x^2-1)^2 + y^2 + 0.3*x", 2).unwrap();
        let jt = expr::add(expr::constant(1.0), expr::div(expr::powi(v.clone(), 2), expr::constant(4.0)));
        let gx = v.diff(0);
        let gy = v.diff(1);
        let b = vec![expr::mul(jt.clone(), gy), expr::neg(expr::mul(jt.clone(), gx))];
        let nu = vec![expr::neg(jt.diff(1)), jt.diff(0)];
        let land = Landscape::new("susy", 2, v, b, nu, Some(jt), 1.5).unwrap();
        let rep = validate_stationarity(&land, 500, 1e-10, 9);
        assert!(rep.pass, "{rep:?}");
        assert!(stream_consistency(&land, 100, 3).unwrap() < 1e-12);
    }

    #[test]
    fn antisymmetric_factor_is_c_j0() {
        for &c in &[0.0, 1.0, -2.5] {
            let land = preset("tilted_double_well", None, c).unwrap();
            for cp in find_critical_points(&land, 32).unwrap() {
                let j = local_antisymmetric_factor(&cp, &land).unwrap();
                assert!((j - j0() * c).norm() < 1e-12);
            }
        }
    }
}
