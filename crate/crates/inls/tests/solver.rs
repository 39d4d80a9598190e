use std::sync::Arc;

use inls::functionals::{self, TermSpec};
use inls::grid::{self, Family, RadialGrid, RadialProfile};
use inls::regimes::{derive_params, scaled_threshold, Params};
use inls::solver::{self, SolveOptions};
use inls::InlsError;

fn reference() -> (Params, Arc<RadialGrid>) {
    (derive_params(3, 1.0, 3.5, 3.0).unwrap(), Arc::new(grid::make_grid(1e-4, 1e4, 1025, 3).unwrap()))
}

fn gaussian(g: &Arc<RadialGrid>) -> RadialProfile {
    grid::sample_function(g, Family::gaussian(1.0)).unwrap()
}

#[test]
fn converged_init_is_a_fixed_point() {
    let (pr, g) = reference();
    let opts = SolveOptions::default();
    let first = solver::minimize_rayleigh(&g, &pr, &gaussian(&g), &opts).unwrap();
    let again = solver::minimize_rayleigh(&g, &pr, &first.profile, &opts).unwrap();
    assert!(again.iters <= 2, "{} iterations", again.iters);
    assert!((again.value - first.value).abs() <= 1e-10);
    assert!(first.el_res <= opts.grad_tol && first.converged);
}

#[test]
fn eigen_inits_and_rescaling_agree() {
    let (pr, g) = reference();
    let opts = SolveOptions::default();
    let a = solver::minimize_rayleigh(&g, &pr, &gaussian(&g), &opts).unwrap();
    let bump = grid::sample_function(&g, Family::bump(1.0, 2.0)).unwrap();
    let b = solver::minimize_rayleigh(&g, &pr, &bump, &opts).unwrap();
    assert!((a.value - b.value).abs() <= 1e-4 * a.value);
    for k in [3, 9] {
        let init = grid::scale(&gaussian(&g), (k as f64 * g.h()).exp(), pr.delta);
        let c = solver::minimize_rayleigh(&g, &pr, &init, &opts).unwrap();
        assert!((c.value - a.value).abs() <= 1e-8, "k = {}: {} vs {}", k, c.value, a.value);
    }
}

#[test]
fn eigenpair_satisfies_the_identities() {
    let (pr, g) = reference();
    let rep = solver::minimize_rayleigh(&g, &pr, &gaussian(&g), &SolveOptions::default()).unwrap();
    let u = &rep.profile;
    assert!(rep.value > 0.0);
    assert!(functionals::eigen_relation_residual(u, &pr, rep.value) <= 1e-4);
    let eigen_term = [TermSpec::new(rep.value, pr.a, pr.p)];
    assert!(functionals::pohozaev_residual(u, &pr, &eigen_term).unwrap() <= 1e-3);
    assert!(functionals::el_residual(u, &pr, rep.value, &[]).unwrap() <= 1e-8);
}

#[test]
fn newton_sharpens_a_loose_eigenfunction() {
    let (pr, g) = reference();
    let loose = SolveOptions { grad_tol: 1e-5, ..SolveOptions::default() };
    let rep = solver::minimize_rayleigh(&g, &pr, &gaussian(&g), &loose).unwrap();
    let sharp = solver::newton_refine(&rep.profile, &pr, rep.value, &[], &SolveOptions::default()).unwrap();
    assert!(sharp.el_res <= 1e-10);
    assert!(rep.el_res / sharp.el_res >= 1e3, "drop {}", rep.el_res / sharp.el_res);
    assert!(sharp.eigen_rel_res <= 1e-4);
}

#[test]
fn newton_reaches_target_from_default_output() {
    // the residual bottoms out near 1e-11, so the drop is bounded by where descent stopped
    let (pr, g) = reference();
    for init in [gaussian(&g), grid::sample_function(&g, Family::bump(1.0, 2.0)).unwrap()] {
        let rep = solver::minimize_rayleigh(&g, &pr, &init, &SolveOptions::default()).unwrap();
        let sharp = solver::newton_refine(&rep.profile, &pr, rep.value, &[], &SolveOptions::default()).unwrap();
        assert!(sharp.converged && sharp.el_res <= 1e-10 && sharp.el_res < rep.el_res);
    }
}

#[test]
fn newton_keeps_zero() {
    let (pr, g) = reference();
    let z = RadialProfile::zeros(g);
    let rep = solver::newton_refine(&z, &pr, 0.0, &[TermSpec::new(1.0, 1.5, 3.0)], &SolveOptions::default()).unwrap();
    assert!(rep.profile.is_zero());
    assert_eq!(rep.value, 0.0);
}

#[test]
fn iteration_cap_reports_divergence() {
    let (pr, g) = reference();
    let opts = SolveOptions { max_iters: 3, ..SolveOptions::default() };
    let err = solver::minimize_rayleigh(&g, &pr, &gaussian(&g), &opts).unwrap_err();
    assert!(matches!(err, InlsError::Diverged { .. }));
    assert_eq!(err.code(), "DIVERGED");
}

fn subscaled() -> (Params, Arc<RadialGrid>) {
    (derive_params(3, 0.5, 2.5, 2.25).unwrap(), Arc::new(grid::make_grid(1e-4, 1e4, 1025, 3).unwrap()))
}

#[test]
fn coercive_level_falls_with_coefficient() {
    let (pr, g) = subscaled();
    let opts = SolveOptions::default();
    let levels: Vec<f64> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&c| solver::minimize_coercive(&g, &pr, &[TermSpec::new(c, 1.5, 2.1)], 0.0, &opts).unwrap())
        .map(|rep| {
            assert!(rep.converged && rep.el_res <= opts.grad_tol);
            rep.value
        })
        .collect();
    assert!(levels[0] < 0.0 && levels[1] < levels[0] && levels[2] < levels[1], "{:?}", levels);
}

#[test]
fn coercive_preconditions() {
    let (pr, g) = subscaled();
    let opts = SolveOptions::default();
    let rs = scaled_threshold(&pr, 1.5);
    let err = solver::minimize_coercive(&g, &pr, &[TermSpec::new(1.0, 1.5, rs)], 0.0, &opts).unwrap_err();
    assert_eq!(err.code(), "NOT_COERCIVE_CONFIG");
    let zero = solver::minimize_coercive(&g, &pr, &[], 0.0, &opts).unwrap();
    assert!(zero.profile.is_zero() && zero.value == 0.0);
}

#[test]
fn probe_ignores_grid_exact_rescaling() {
    let (_, g) = reference();
    let opts = SolveOptions::default();
    let init = gaussian(&g);
    let a = solver::probe_from(&g, 3, 0.0, &init, &opts).unwrap();
    let moved = grid::scale(&init, (12.0 * g.h()).exp(), 0.5);
    let b = solver::probe_from(&g, 3, 0.0, &moved, &opts).unwrap();
    assert!(a > 0.0);
    assert!((a - b).abs() <= 1e-6 * a, "{} vs {}", a, b);
    let weighted = solver::probe_best_constant(&g, 3, 1.0, &opts).unwrap();
    assert!(weighted > 0.0);
    assert!(solver::probe_best_constant(&g, 3, 2.0, &opts).is_err());
}
