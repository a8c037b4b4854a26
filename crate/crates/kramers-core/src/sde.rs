//! Euler-Maruyama hitting times for dX = -U_h(X) dt + sqrt(2h) dB.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labelling::WellMap;
use crate::landscape::{CriticalPoint, Landscape};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdeError {
    #[error("dt = {dt} exceeds the guard min(h,1)/(10 max|U_h|) = {limit}")]
    DtGuard { dt: f64, limit: f64 },
    #[error("target ball of radius {radius} reaches V = {max_v} >= sigma(m) = {sigma}")]
    TargetTooLarge { radius: f64, max_v: f64, sigma: f64 },
    #[error("no admissible target radius found")]
    NoTarget,
    #[error("landscape has a single minimum, nothing to hit")]
    SingleWell,
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub h: f64,
    pub dt: f64,
    pub trials: usize,
    pub seed: u64,
    pub start: Vec<f64>,
    pub target_center: Vec<f64>,
    pub target_radius: f64,
    /// Trials still running at this time are censored.
    pub max_time: f64,
}

/// Largest dt allowed by the drift guard.
pub fn dt_limit(land: &Landscape, h: f64) -> f64 {
    h.min(1.0) / (10.0 * land.max_drift(h, 101))
}

/// Max of V over a polar sampling of the closed ball.
fn max_v_on_ball(land: &Landscape, c: &[f64], r: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut x = c.to_vec();
    for ir in 1..=8 {
        let rr = r * ir as f64 / 8.0;
        for ia in 0..64 {
            let a = std::f64::consts::TAU * ia as f64 / 64.0;
            x[0] = c[0] + rr * a.cos();
            x[1] = c[1] + rr * a.sin();
            best = best.max(land.potential(&x));
        }
    }
    best
}

pub fn validate_target(land: &Landscape, center: &[f64], radius: f64, sigma: f64) -> Result<(), SdeError> {
    let max_v = max_v_on_ball(land, center, radius);
    if max_v >= sigma {
        return Err(SdeError::TargetTooLarge { radius, max_v, sigma });
    }
    Ok(())
}

/// Start at the first non-global minimum, target a ball around the global minimum
/// (radius halved from 0.25 until its closure sits below sigma(m)), dt at the guard.
pub fn default_config(
    land: &Landscape,
    criticals: &[CriticalPoint],
    wellmap: &WellMap,
    h: f64,
    trials: usize,
    seed: u64,
) -> Result<SimulationConfig, SdeError> {
    if land.dim != 2 {
        return Err(SdeError::Invalid("hitting-time runs are two-dimensional".into()));
    }
    let entry = wellmap.entries.iter().find(|e| e.sigma.is_some()).ok_or(SdeError::SingleWell)?;
    let sigma = entry.sigma.unwrap_or(f64::INFINITY);
    let center = criticals[wellmap.global_min().minimum].location.clone();
    let mut r = 0.25;
    while validate_target(land, &center, r, sigma).is_err() {
        r *= 0.5;
        if r < 1e-3 {
            return Err(SdeError::NoTarget);
        }
    }
    Ok(SimulationConfig {
        h,
        dt: dt_limit(land, h),
        trials,
        seed,
        start: criticals[entry.minimum].location.clone(),
        target_center: center,
        target_radius: r,
        max_time: 1e4,
    })
}

/// Constant stream factor (constant J) is the setting where the hitting-time
/// asymptotics apply; other fields are run but flagged.
pub fn within_hypotheses(land: &Landscape) -> bool {
    let b_zero = land.b.iter().chain(&land.nu).all(|e| e.is_const(0.0));
    b_zero || land.stream.as_ref().is_some_and(|s| s.as_const().is_some())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HittingStats {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub censored: usize,
    /// Box reflections summed over trials.
    pub reflections: u64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy)]
struct Trial {
    tau: f64,
    hit: bool,
    reflections: u64,
}

fn reflect(x: &mut f64, l: f64) -> bool {
    let mut hit = false;
    // at most a couple of folds for any sane dt
    for _ in 0..4 {
        if *x > l {
            *x = 2.0 * l - *x;
            hit = true;
        } else if *x < -l {
            *x = -2.0 * l - *x;
            hit = true;
        } else {
            break;
        }
    }
    hit
}

/// Each coarse step draws two normals per axis. With `halves` the path takes two
/// dt/2 steps driven by them, otherwise one dt step driven by (z1 + z2)/sqrt 2, so
/// coarse and fine paths share their Brownian increments.
fn run_trial(land: &Landscape, cfg: &SimulationConfig, index: usize, halves: bool) -> Trial {
    let d = land.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let mut x = cfg.start.clone();
    let mut u = vec![0.0; d];
    let mut z = vec![[0.0f64; 2]; d];
    let r2 = cfg.target_radius * cfg.target_radius;
    let inside = |x: &[f64]| x.iter().zip(&cfg.target_center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= r2;
    if inside(&x) {
        return Trial { tau: 0.0, hit: true, reflections: 0 };
    }
    let (sub, dt) = if halves { (2, cfg.dt / 2.0) } else { (1, cfg.dt) };
    let noise = (2.0 * cfg.h * dt).sqrt();
    let max_steps = (cfg.max_time / cfg.dt).ceil() as u64;
    let mut reflections = 0;
    for step in 0..max_steps {
        for zi in z.iter_mut() {
            zi[0] = StandardNormal.sample(&mut rng);
            zi[1] = StandardNormal.sample(&mut rng);
        }
        for k in 0..sub {
            land.drift_into(&x, cfg.h, &mut u);
            for i in 0..d {
                let w = if halves { z[i][k] } else { (z[i][0] + z[i][1]) * std::f64::consts::FRAC_1_SQRT_2 };
                x[i] += -u[i] * dt + noise * w;
                if reflect(&mut x[i], land.half_width) {
                    reflections += 1;
                }
            }
            if inside(&x) {
                return Trial { tau: step as f64 * cfg.dt + (k + 1) as f64 * dt, hit: true, reflections };
            }
        }
    }
    Trial { tau: cfg.max_time, hit: false, reflections }
}

fn stats(land: &Landscape, cfg: &SimulationConfig, halves: bool) -> Result<HittingStats, SdeError> {
    if cfg.trials < 2 || !(cfg.h > 0.0) || !(cfg.dt > 0.0) || !(cfg.max_time > 0.0) {
        return Err(SdeError::Invalid(format!("{cfg:?}")));
    }
    if cfg.start.len() != land.dim || cfg.target_center.len() != land.dim {
        return Err(SdeError::Invalid("start/target dimension mismatch".into()));
    }
    let limit = dt_limit(land, cfg.h);
    if cfg.dt > limit * (1.0 + 1e-12) {
        return Err(SdeError::DtGuard { dt: cfg.dt, limit });
    }
    let trials: Vec<Trial> = (0..cfg.trials).into_par_iter().map(|i| run_trial(land, cfg, i, halves)).collect();
    let n = trials.len() as f64;
    let mean = trials.iter().map(|t| t.tau).sum::<f64>() / n;
    let var = trials.iter().map(|t| (t.tau - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(HittingStats {
        mean,
        stderr: (var / n).sqrt(),
        trials: cfg.trials,
        censored: trials.iter().filter(|t| !t.hit).count(),
        reflections: trials.iter().map(|t| t.reflections).sum(),
        dt: if halves { cfg.dt / 2.0 } else { cfg.dt },
    })
}

pub fn hitting_time_stats(land: &Landscape, cfg: &SimulationConfig) -> Result<HittingStats, SdeError> {
    stats(land, cfg, false)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DtAudit {
    pub coarse: HittingStats,
    pub fine: HittingStats,
    pub shift: f64,
    pub passes: bool,
}

/// Reruns at dt/2 on the same Brownian paths; passes when the mean moves by less
/// than one standard error.
pub fn dt_audit(land: &Landscape, cfg: &SimulationConfig) -> Result<DtAudit, SdeError> {
    let coarse = stats(land, cfg, false)?;
    let fine = stats(land, cfg, true)?;
    let shift = (fine.mean - coarse.mean).abs();
    Ok(DtAudit { coarse, fine, shift, passes: shift < coarse.stderr.min(fine.stderr) })
}
