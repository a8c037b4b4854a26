#![allow(dead_code)]

use std::io::Write;

use kramers_core::discretize::{peclet, Grid};
use kramers_core::expr::{self, Expr, Func};
use kramers_core::labelling::{analyze, Labelling, WellEntry};
use kramers_core::landscape::{find_critical_points, preset, CriticalPoint, Landscape};
use kramers_core::saddle::{saddle_data_for, SaddleSpectralData};
use rand::Rng;

pub struct Setup {
    pub land: Landscape,
    pub cps: Vec<CriticalPoint>,
    pub lab: Labelling,
    pub sd: Vec<SaddleSpectralData>,
}

impl Setup {
    pub fn new(name: &str, c: f64) -> Setup {
        let land = preset(name, None, c).unwrap();
        let cps = find_critical_points(&land, 32).unwrap();
        let lab = analyze(&land, &cps, 256).unwrap();
        let sd = saddle_data_for(&land, &cps, &lab.wellmap).unwrap();
        Setup { land, cps, lab, sd }
    }

    /// Non-global wells in labelling order.
    pub fn wells(&self) -> Vec<&WellEntry> {
        self.lab.wellmap.entries.iter().filter(|e| e.sigma.is_some()).collect()
    }
}

/// Smallest n = start + k*step whose grid meets the Peclet bound.
pub fn grid_for(land: &Landscape, h: f64, start: usize, step: usize) -> Grid {
    let mut n = start;
    loop {
        let g = Grid::new(land.half_width, n).unwrap();
        if peclet(land, h, &g) <= 1.0 {
            return g;
        }
        n += step;
    }
}

/// Written straight to stderr so the line survives libtest output capture.
pub fn report(line: &str) {
    let mut e = std::io::stderr().lock();
    let _ = writeln!(e, "{line}");
}

pub fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Random expression in x, y that evaluates finitely on [-2, 2]^2: divisions and
/// logs only see arguments bounded away from zero.
/// The top two levels are always compound.
pub fn random_expr<R: Rng + ?Sized>(rng: &mut R, depth: u32) -> Expr {
    grow(rng, depth, 2)
}

fn grow<R: Rng + ?Sized>(rng: &mut R, depth: u32, forced: u32) -> Expr {
    if depth == 0 || (forced == 0 && rng.random_bool(0.25)) {
        return match rng.random_range(0..3) {
            0 => expr::var(0),
            1 => expr::var(1),
            _ => expr::constant((rng.random_range(-2.0f64..2.0) * 8.0).round() / 8.0),
        };
    }
    let a = grow(rng, depth - 1, forced.saturating_sub(1));
    match rng.random_range(0..9) {
        0 | 1 => expr::add(a, grow(rng, depth - 1, forced.saturating_sub(1))),
        2 | 3 => expr::mul(a, grow(rng, depth - 1, forced.saturating_sub(1))),
        4 => expr::sub(a, grow(rng, depth - 1, forced.saturating_sub(1))),
        5 => expr::div(a, expr::add(expr::constant(1.0), expr::powi(grow(rng, depth - 1, forced.saturating_sub(1)), 2))),
        6 => expr::powi(a, rng.random_range(2..=3)),
        7 => {
            let f = [Func::Sin, Func::Cos, Func::Exp][rng.random_range(0..3)];
            // keep exp arguments small
            let arg = if f == Func::Exp { expr::mul(expr::constant(0.25), a) } else { a };
            expr::call(f, arg)
        }
        _ => expr::call(Func::Log, expr::add(expr::constant(1.0), expr::powi(a, 2))),
    }
}

const D1: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];

fn fd_gradient4(f: &dyn Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut s = 0.0;
            for &(k, w) in &D1 {
                let mut y = x.to_vec();
                y[i] += k * step;
                s += w * f(&y);
            }
            s / (12.0 * step)
        })
        .collect()
}

fn fd_hessian4(f: &dyn Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<Vec<f64>> {
    let d = x.len();
    let mut out = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            if i == j {
                let w = [(-2.0, -1.0), (-1.0, 16.0), (0.0, -30.0), (1.0, 16.0), (2.0, -1.0)];
                let mut s = 0.0;
                for &(k, c) in &w {
                    let mut y = x.to_vec();
                    y[i] += k * step;
                    s += c * f(&y);
                }
                out[i][i] = s / (12.0 * step * step);
            } else if j > i {
                let mut s = 0.0;
                for &(ka, wa) in &D1 {
                    for &(kb, wb) in &D1 {
                        let mut y = x.to_vec();
                        y[i] += ka * step;
                        y[j] += kb * step;
                        s += wa * wb * f(&y);
                    }
                }
                out[i][j] = s / (144.0 * step * step);
                out[j][i] = out[i][j];
            }
        }
    }
    out
}

/// Richardson combination of fourth-order gradients at `step` and `step / 2`.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let a = fd_gradient4(f, x, step);
    let b = fd_gradient4(f, x, 0.5 * step);
    a.iter().zip(&b).map(|(a, b)| (16.0 * b - a) / 15.0).collect()
}

/// Richardson combination of fourth-order Hessians at `step` and `step / 2`.
pub fn fd_hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<Vec<f64>> {
    let a = fd_hessian4(f, x, step);
    let b = fd_hessian4(f, x, 0.5 * step);
    a.iter().zip(&b).map(|(ra, rb)| ra.iter().zip(rb).map(|(a, b)| (16.0 * b - a) / 15.0).collect()).collect()
}

/// Round-off level of the difference quotients above for a function of size `f`.
pub fn fd_noise(f: f64, step: f64, order: i32) -> f64 {
    1e-13 * f.abs().max(1.0) / (0.5 * step).powi(order)
}
