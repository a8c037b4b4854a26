mod common;

use common::{random_expr, Setup};
use kramers_core::discretize::{assemble, assemble_with, small_spectrum, Form, Grid, Guards};
use kramers_core::expr;
use kramers_core::graded::{default_k, localized_spectrum, random_instance, RandomParams};
use kramers_core::landscape::{find_critical_points, preset};
use kramers_core::quasimode::Profile;
use kramers_core::saddle::{random_orthogonal, random_saddle, transverse_matrices};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_then_parse_is_identity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_expr(&mut rng, 4);
        let once = e.to_string_dim(2);
        let back = expr::parse(&once, 2).unwrap();
        prop_assert_eq!(&back, &e);
        prop_assert_eq!(back.to_string_dim(2), once);
    }

    #[test]
    fn derivative_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, x in -1.5f64..1.5, y in -1.5f64..1.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_expr(&mut rng, 3);
        let g = random_expr(&mut rng, 3);
        let lhs = expr::add(expr::mul(expr::constant(a), f.clone()), g.clone()).diff(0).eval(&[x, y]).unwrap();
        let rhs = a * f.diff(0).eval(&[x, y]).unwrap() + g.diff(0).eval(&[x, y]).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn saddle_data_is_orthogonally_invariant(seed in any::<u64>(), d in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (hess, b) = random_saddle(&mut rng, d);
        let q = random_orthogonal(&mut rng, d);
        let a = transverse_matrices(&hess, &b).unwrap();
        let r = transverse_matrices(&(&q * &hess * q.transpose()), &(&q * &b * q.transpose())).unwrap();
        prop_assert!((a.mu - r.mu).abs() <= 1e-10 * a.mu.abs());
        let rotated = &q * a.xi_vector();
        prop_assert!((rotated.dot(&r.xi_vector()).abs() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn reversible_limit_recovers_hessian_eigenpair(seed in any::<u64>(), d in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (hess, _) = random_saddle(&mut rng, d);
        let data = transverse_matrices(&hess, &DMatrix::zeros(d, d)).unwrap();
        let sym = nalgebra::SymmetricEigen::new(hess.clone());
        let k = sym.eigenvalues.imin();
        prop_assert!((data.mu - sym.eigenvalues[k]).abs() <= 1e-10 * data.mu.abs());
        prop_assert!((sym.eigenvectors.column(k).dot(&data.xi_vector()).abs() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn graded_spectrum_is_fully_assigned(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, &RandomParams::default());
        let s = &inst.structure;
        let rep = localized_spectrum(&inst.matrix().unwrap(), s, default_k(s)).unwrap();
        prop_assert!(rep.counts_match);
        prop_assert_eq!(rep.eigenvalues.len(), s.size());
        prop_assert!(rep.k_min <= rep.k);
    }

    #[test]
    fn kappa_is_odd_and_bounded(mu in 0.5f64..8.0, rho in 0.05f64..0.5, h in 0.02f64..0.3, t in -1.0f64..1.0) {
        let p = Profile::new(mu, rho, h);
        let k = p.kappa(t);
        prop_assert!((-1.0..=1.0).contains(&k));
        prop_assert!((k + p.kappa(-t)).abs() <= 1e-10);
    }
}

fn weighted_dot(w: &[f64], u: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(u).zip(v).map(|((w, a), b)| w * a * b).sum()
}

#[test]
fn generator_is_accretive_with_exact_adjoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (name, c, h) in [("tilted_double_well", 1.0, 0.3), ("triple_well", 0.7, 0.4), ("sym_double_well", -2.0, 0.25)] {
        let land = preset(name, None, c).unwrap();
        let cps = find_critical_points(&land, 32).unwrap();
        let grid = Grid::new(land.half_width, 33).unwrap();
        let op = assemble_with(&land, &cps, h, &grid, Form::LWeighted, Guards::none()).unwrap();
        let ones = vec![1.0; grid.len()];
        assert!(op.apply_vec(&ones).iter().all(|v| v.abs() < 1e-9));
        assert!(op.apply_weighted_adjoint(&ones).iter().all(|v| v.abs() < 1e-9));
        for _ in 0..50 {
            let u: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lu = op.apply_vec(&u);
            let q = weighted_dot(&op.weights, &lu, &u);
            assert!(q >= -1e-12 * weighted_dot(&op.weights, &lu, &lu).sqrt(), "{name}: <Lu,u> = {q}");
            let left = weighted_dot(&op.weights, &lu, &v);
            let right = weighted_dot(&op.weights, &u, &op.apply_weighted_adjoint(&v));
            assert!((left - right).abs() <= 1e-10 * left.abs().max(1e-3), "{name}: {left} vs {right}");
        }
    }
}

#[test]
fn flat_form_is_the_weighted_similarity() {
    let land = preset("tilted_double_well", None, 1.0).unwrap();
    let cps = find_critical_points(&land, 32).unwrap();
    let h = 0.3;
    let grid = Grid::new(land.half_width, 25).unwrap();
    let l = assemble_with(&land, &cps, h, &grid, Form::LWeighted, Guards::none()).unwrap();
    let p = assemble_with(&land, &cps, h, &grid, Form::PFlat, Guards::none()).unwrap();
    let sq: Vec<f64> = l.weights.iter().map(|w| w.sqrt()).collect();
    let ld = l.matrix.to_dense();
    let pd = p.matrix.to_dense();
    let n = grid.len();
    let similar = DMatrix::from_fn(n, n, |i, j| h * sq[i] * ld[(i, j)] / sq[j]);
    assert!((&similar - &pd).abs().max() <= 1e-10 * pd.abs().max());
}

#[test]
fn small_eigenvalue_converges_under_refinement() {
    let s = Setup::new("tilted_double_well", 1.0);
    let h = 0.3;
    let lam: Vec<f64> = [64usize, 128, 256]
        .iter()
        .map(|&n| {
            let grid = Grid::new(s.land.half_width, n).unwrap();
            small_spectrum(&assemble(&s.land, &s.cps, h, &grid, Form::LWeighted).unwrap(), 4, false).unwrap().re(1)
        })
        .collect();
    let d1 = (lam[1] - lam[0]).abs();
    let d2 = (lam[2] - lam[1]).abs();
    assert!(d2 < 0.5 * d1, "{lam:?}");
    assert!(d2 / lam[2] < 1e-2, "{lam:?}");
}

#[test]
fn weights_are_a_probability_vector() {
    let land = preset("triple_well", None, 0.0).unwrap();
    let cps = find_critical_points(&land, 32).unwrap();
    let grid = Grid::new(land.half_width, 41).unwrap();
    let op = assemble_with(&land, &cps, 0.2, &grid, Form::LWeighted, Guards::none()).unwrap();
    let total: f64 = op.weights.iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(op.weights.iter().all(|w| *w > 0.0));
}
