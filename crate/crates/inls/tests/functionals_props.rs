use std::sync::Arc;

use inls::functionals::{self, TermSpec};
use inls::grid::{self, Family, RadialGrid, RadialProfile};
use inls::regimes::{derive_params, Params};
use inls::InlsError;
use proptest::prelude::*;

fn setup() -> (Params, Arc<RadialGrid>) {
    (derive_params(3, 1.0, 3.5, 3.0).unwrap(), Arc::new(grid::make_grid(1e-3, 1e3, 257, 3).unwrap()))
}

fn gauss(g: &Arc<RadialGrid>, amp: f64, sigma: f64) -> RadialProfile {
    grid::sample_function(g, Family::gaussian(sigma)).unwrap().scaled_by(amp)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gradient_matches_differences(
        amp in 0.3f64..2.0,
        sigma in 0.3f64..3.0,
        lambda in -3.0f64..3.0,
        c in -2.0f64..2.0,
        eta in 0.0f64..1.99,
        r in 2.1f64..6.0,
        node in 0usize..256,
    ) {
        let (pr, g) = setup();
        let u = gauss(&g, amp, sigma);
        let terms = [TermSpec::new(c, eta, r)];
        let gp = functionals::grad_phi(&u, &pr, lambda, &terms).unwrap();
        let bump = |e: f64| {
            let mut v = u.values().to_vec();
            v[node] += e;
            functionals::phi(&RadialProfile::new(g.clone(), v).unwrap(), &pr, lambda, &terms).unwrap()
        };
        let scale = gp.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let best = [1e-4, 1e-5, 1e-6]
            .iter()
            .map(|&e| ((bump(e) - bump(-e)) / (2.0 * e) - gp[node]).abs())
            .fold(f64::INFINITY, f64::min);
        prop_assert!(best <= 1e-5 * scale.max(gp[node].abs()));
    }

    #[test]
    fn projection_lands_on_manifold(amp in 0.2f64..1.5, sigma in 0.5f64..2.0) {
        let (pr, _) = setup();
        let g = Arc::new(grid::make_grid(1e-4, 1e4, 1025, 3).unwrap());
        let u = gauss(&g, amp, sigma);
        let v = functionals::project_to_m(&u, &pr).unwrap();
        prop_assert!((functionals::i_energy(&v, &pr) - 1.0).abs() <= 1e-6);
        // off-grid dilations interpolate, so the quotient only survives to O(h^2),
        // and only while the dilated profile stays clear of the domain ends
        let t = functionals::i_energy(&u, &pr).powf(-1.0 / pr.ell);
        prop_assume!((1e-2..1e2).contains(&t));
        let q = functionals::rayleigh(&u, &pr).unwrap();
        prop_assert!((functionals::rayleigh(&v, &pr).unwrap() - q).abs() <= 1e-3 * q);
    }

    #[test]
    fn residuals_are_bounded(amp in 0.1f64..3.0, sigma in 0.2f64..4.0, lambda in -2.0f64..2.0, c in -2.0f64..2.0) {
        let (pr, g) = setup();
        let u = gauss(&g, amp, sigma);
        let terms = [TermSpec::new(c, 1.5, 2.5)];
        let p = functionals::pohozaev_residual(&u, &pr, &terms).unwrap();
        let e = functionals::eigen_relation_residual(&u, &pr, lambda);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((0.0..=1.0).contains(&e));
        prop_assert!(functionals::el_residual(&u, &pr, lambda, &terms).unwrap() >= 0.0);
        prop_assert!(functionals::i_energy(&u, &pr) > 0.0 && functionals::j_energy(&u, &pr) > 0.0);
    }
}

#[test]
fn amplitude_breaks_quotient_invariance() {
    let (pr, g) = setup();
    let u = gauss(&g, 1.0, 1.0);
    let a = functionals::rayleigh(&u, &pr).unwrap();
    let b = functionals::rayleigh(&u.scaled_by(2.0), &pr).unwrap();
    assert!((a - b).abs() > 1e-3 * a);
}

#[test]
fn zero_profile() {
    let (pr, g) = setup();
    let z = RadialProfile::zeros(g);
    let terms = [TermSpec::new(1.0, 1.5, 2.5)];
    assert_eq!(functionals::i_energy(&z, &pr), 0.0);
    assert_eq!(functionals::phi(&z, &pr, 1.0, &terms).unwrap(), 0.0);
    assert!(functionals::grad_phi(&z, &pr, 1.0, &terms).unwrap().iter().all(|x| *x == 0.0));
    assert!(matches!(functionals::rayleigh(&z, &pr), Err(InlsError::ZeroProfile)));
    assert!(matches!(functionals::project_to_m(&z, &pr), Err(InlsError::ZeroProfile)));
}

#[test]
fn unit_level_projection_is_identity() {
    let (pr, _) = setup();
    let g = Arc::new(grid::make_grid(1e-4, 1e4, 1025, 3).unwrap());
    let u = functionals::project_to_m(&gauss(&g, 1.0, 1.0), &pr).unwrap();
    let again = functionals::project_to_m(&u, &pr).unwrap();
    assert!((functionals::i_energy(&again, &pr) - 1.0).abs() <= 1e-10);
    let drift = u.values().iter().zip(again.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(drift <= 1e-8);
}

#[test]
fn term_parsing() {
    let t: TermSpec = "-1.5:0.25:3".parse().unwrap();
    assert_eq!((t.c, t.eta, t.r), (-1.5, 0.25, 3.0));
    assert!("1:2".parse::<TermSpec>().is_err());
    assert!("a:b:c".parse::<TermSpec>().is_err());
    let (pr, g) = setup();
    let u = gauss(&g, 1.0, 1.0);
    assert!(functionals::phi(&u, &pr, 0.0, &[TermSpec::new(1.0, 0.5, 0.9)]).is_err());
    assert!(functionals::pohozaev_residual(&u, &pr, &[TermSpec::new(1.0, 2.5, 3.0)]).is_err());
}
