//! Descent drivers for the first eigenvalue, coercive energies, Newton polishing
//! and Sobolev-quotient probes.
//!
//! All descents use the same step: a Levenberg-damped Newton direction
//! `-(H + mu P)^{-1} g`, where `P` is the convex part of the Hessian, followed by
//! Armijo backtracking on the objective. Far from a minimizer `mu` is large and the
//! step is a preconditioned gradient step; near it `mu -> 0` and the iteration is
//! Newton's method.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{InlsError, Result};
use crate::fmt::ser17;
use crate::functionals::{
    dual_norm, eigen_relation_residual, el_residual, pohozaev_residual, rayleigh, Objective, TermSpec,
};
use crate::grid::{dirichlet_energy, sample_function, scale, weighted_integral, Family, RadialGrid, RadialProfile};
use crate::regimes::{classify_pair, critical_exponent, ell_of, Params, Regime, WeightedPair};
use crate::tridiag;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step_init: f64,
    pub armijo_c: f64,
    pub armijo_shrink: f64,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iters: 50_000,
            grad_tol: 1e-8,
            step_init: 1.0,
            armijo_c: 1e-4,
            armijo_shrink: 0.5,
            seed: 0,
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<()> {
        let ok = self.max_iters >= 1
            && self.grad_tol > 0.0
            && self.step_init > 0.0
            && self.armijo_c > 0.0
            && self.armijo_c < 1.0
            && self.armijo_shrink > 0.0
            && self.armijo_shrink < 1.0;
        if ok {
            Ok(())
        } else {
            Err(InlsError::Domain("invalid solve options".into()))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(serialize_with = "ser17")]
    pub value: f64,
    pub iters: usize,
    #[serde(serialize_with = "ser17")]
    pub el_res: f64,
    #[serde(serialize_with = "ser17")]
    pub pohozaev_res: f64,
    #[serde(serialize_with = "ser17")]
    pub eigen_rel_res: f64,
    pub converged: bool,
    pub profile_path: Option<String>,
    #[serde(skip)]
    pub profile: RadialProfile,
}

enum Model {
    Plain(Objective),
    /// `ln N(u) - gamma ln D(u)`
    Quotient { num: Objective, den: Objective, gamma: f64 },
}

struct Eval {
    value: f64,
    /// Gradient of the objective.
    grad: Vec<f64>,
    /// Stationarity vector whose dual norm is the stopping residual.
    station: Vec<f64>,
    /// `kappa = gamma N / D` for quotients.
    kappa: f64,
    norm: f64,
}

impl Model {
    fn value(&self, u: &[f64]) -> f64 {
        match self {
            Model::Plain(obj) => obj.value(u),
            Model::Quotient { num, den, gamma } => {
                let (n, d) = (num.value(u), den.value(u));
                if n > 0.0 && d > 0.0 { n.ln() - gamma * d.ln() } else { f64::INFINITY }
            }
        }
    }

    fn eval(&self, u: &[f64]) -> Eval {
        match self {
            Model::Plain(obj) => {
                let g = obj.grad(u);
                Eval { value: obj.value(u), station: g.clone(), grad: g, kappa: 0.0, norm: 1.0 }
            }
            Model::Quotient { num, den, gamma } => {
                let (n, d) = (num.value(u), den.value(u));
                let kappa = gamma * n / d;
                let gn = num.grad(u);
                let gd = den.grad(u);
                let station: Vec<f64> = gn.iter().zip(&gd).map(|(a, b)| a - kappa * b).collect();
                let grad = station.iter().map(|s| s / n).collect();
                Eval { value: n.ln() - gamma * d.ln(), grad, station, kappa, norm: n }
            }
        }
    }

    /// Damped Newton direction for the objective at `u`.
    fn direction(&self, u: &[f64], ev: &Eval, mu: f64) -> Option<Vec<f64>> {
        match self {
            Model::Plain(obj) => {
                let (mut d, off) = obj.hessian(u, false);
                let (p, _) = obj.hessian(u, true);
                let scale = 1.0 + mu;
                // P shares the stiffness off-diagonal, so (H + mu P) keeps the
                // stiffness part scaled by 1 + mu
                for (di, pi) in d.iter_mut().zip(&p) {
                    *di += mu * pi;
                }
                let off: Vec<f64> = off.iter().map(|o| o * scale).collect();
                let rhs: Vec<f64> = ev.grad.iter().map(|g| -g).collect();
                tridiag::solve_symmetric(&d, &off, &rhs)
            }
            Model::Quotient { num, den, gamma } => {
                let (mut d, off) = num.hessian(u, false);
                let (dd, _) = den.hessian(u, false);
                let (p, _) = num.hessian(u, true);
                for i in 0..d.len() {
                    d[i] += mu * p[i] - ev.kappa * dd[i];
                }
                let off: Vec<f64> = off.iter().map(|o| o * (1.0 + mu)).collect();
                // system scaled by N: (H_N - kappa H_D + mu P + rho/N gN gN^T) x = -station
                let rhs: Vec<f64> = ev.station.iter().map(|s| -s).collect();
                let x = tridiag::solve_symmetric(&d, &off, &rhs)?;
                let rho = 1.0 / gamma - 1.0;
                if rho.abs() < 1e-15 {
                    return Some(x);
                }
                let gn = num.grad(u);
                let y = tridiag::solve_symmetric(&d, &off, &gn)?;
                let c = rho / ev.norm;
                let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                let denom = 1.0 + c * dot(&gn, &y);
                if denom == 0.0 {
                    return None;
                }
                let f = c * dot(&gn, &x) / denom;
                Some(x.iter().zip(&y).map(|(a, b)| a - f * b).collect())
            }
        }
    }
}

struct Descent {
    values: Vec<f64>,
    iters: usize,
    residual: f64,
    converged: bool,
}

/// Residual normalization for the stopping rule.
#[derive(Clone, Copy)]
enum Stop {
    Absolute,
    /// Relative to the dual norm of the numerator gradient.
    Relative,
}

fn descend(model: &Model, grid: &Arc<RadialGrid>, init: &[f64], opts: &SolveOptions, stop: Stop) -> Descent {
    let probe = RadialProfile::zeros(grid.clone());
    let m = init.len();
    let mut u = init.to_vec();
    u[m - 1] = 0.0;
    let mut mu = 1.0_f64;
    let residual_of = |u: &[f64], ev: &Eval| {
        let r = dual_norm(&probe, &ev.station);
        match (stop, model) {
            (Stop::Relative, Model::Quotient { num, .. }) => r / dual_norm(&probe, &num.grad(u)),
            _ => r,
        }
    };
    let mut ev = model.eval(&u);
    let mut res = residual_of(&u, &ev);
    let mut iters = 0;
    while iters < opts.max_iters {
        if res <= opts.grad_tol {
            return Descent { values: u, iters, residual: res, converged: true };
        }
        iters += 1;
        let mut dir = model.direction(&u, &ev, mu);
        let mut slope = dir.as_ref().map_or(f64::NAN, |d| dot(&ev.grad, d));
        while !(slope < 0.0) {
            mu = (mu * 4.0).max(1e-6);
            if mu > 1e30 {
                break;
            }
            dir = model.direction(&u, &ev, mu);
            slope = dir.as_ref().map_or(f64::NAN, |d| dot(&ev.grad, d));
        }
        let Some(d) = dir.filter(|_| slope < 0.0) else {
            break;
        };
        let umax = u.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let dmax = d.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let t0 = if umax > 0.0 && dmax > 0.3 * umax {
            opts.step_init.min(0.3 * umax / dmax)
        } else {
            opts.step_init
        };
        let mut t = t0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = (0..m)
                .map(|i| if i < m - 1 { u[i] + t * d[i] } else { 0.0 })
                .collect();
            let f = model.value(&trial);
            if f.is_finite() && f <= ev.value + opts.armijo_c * t * slope {
                accepted = Some(trial);
                break;
            }
            t *= opts.armijo_shrink;
        }
        match accepted {
            Some(next) => {
                let stalled = next == u;
                u = next;
                ev = model.eval(&u);
                res = residual_of(&u, &ev);
                if t == opts.step_init {
                    mu /= 3.0;
                } else {
                    mu *= 2.0;
                }
                if stalled {
                    break;
                }
            }
            None => {
                mu = (mu * 4.0).max(1e-6);
                if mu > 1e30 {
                    break;
                }
            }
        }
    }
    let converged = res <= opts.grad_tol;
    Descent { values: u, iters, residual: res, converged }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn eigen_term(params: &Params, lambda: f64) -> TermSpec {
    TermSpec::new(lambda, params.a, params.p)
}

/// First eigenvalue by descent of the scale-free quotient `I/J`.
pub fn minimize_rayleigh(grid: &Arc<RadialGrid>, params: &Params, init: &RadialProfile, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    check_grid(grid, params, init)?;
    if init.is_zero() {
        return Err(InlsError::ZeroProfile);
    }
    rayleigh(init, params)?;
    let i_obj = Objective::new(init, 1.0, &[(1.0, params.b, params.q)]);
    let j_obj = Objective::new(init, 0.0, &[(1.0, params.a, params.p)]);
    let model = Model::Quotient { num: i_obj, den: j_obj, gamma: 1.0 };
    let run = descend(&model, grid, init.values(), opts, Stop::Absolute);
    if !run.converged {
        return Err(InlsError::Diverged { iters: run.iters, el_res: run.residual });
    }
    let u = RadialProfile::new(grid.clone(), run.values)?;
    let lambda = rayleigh(&u, params)?;
    let el_res = el_residual(&u, params, lambda, &[])?;
    Ok(SolveReport {
        value: lambda,
        iters: run.iters,
        el_res,
        pohozaev_res: pohozaev_residual(&u, params, &[eigen_term(params, lambda)])?,
        eigen_rel_res: eigen_relation_residual(&u, params, lambda),
        converged: true,
        profile_path: None,
        profile: u,
    })
}

fn check_grid(grid: &Arc<RadialGrid>, params: &Params, u: &RadialProfile) -> Result<()> {
    if grid.dim() != params.n {
        return Err(InlsError::Domain(format!("grid dimension {} != N = {}", grid.dim(), params.n)));
    }
    if u.grid() != grid.as_ref() {
        return Err(InlsError::Domain("profile lives on a different grid".into()));
    }
    Ok(())
}

/// Check that `Phi = I - lambda J - sum c_j/r_j W_j` is bounded below by
/// scaling: every positive term is subscaled or dominated by a negative term
/// with a larger scaling rate.
pub fn coercivity_check(params: &Params, terms: &[TermSpec], lambda: f64) -> Result<()> {
    let mut positive = Vec::new();
    let mut negative = Vec::new();
    for t in terms {
        let v = classify_pair(params, WeightedPair::new(t.eta, t.r), false);
        if !v.admissible {
            return Err(InlsError::NotCoerciveConfig(format!(
                "term ({}, {}) is not admissible ({})",
                t.eta, t.r, v.reason
            )));
        }
        let rate = ell_of(params, t.eta, t.r);
        if t.c > 0.0 {
            positive.push((v.regime, rate, *t));
        } else if t.c < 0.0 {
            negative.push(rate);
        }
    }
    if lambda > 0.0 {
        positive.push((Regime::Scaled, params.ell, eigen_term(params, lambda)));
    }
    for (regime, rate, t) in positive {
        let dominated = negative.iter().any(|&n| n > rate);
        if regime != Regime::Subscaled && !dominated {
            return Err(InlsError::NotCoerciveConfig(format!(
                "positive term (eta, r) = ({}, {}) is {} and not dominated",
                t.eta,
                t.r,
                regime.name()
            )));
        }
    }
    Ok(())
}

/// Negative-energy minimizer of `Phi` for coercive configurations.
pub fn minimize_coercive(grid: &Arc<RadialGrid>, params: &Params, terms: &[TermSpec], lambda: f64, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    if grid.dim() != params.n {
        return Err(InlsError::Domain(format!("grid dimension {} != N = {}", grid.dim(), params.n)));
    }
    coercivity_check(params, terms, lambda)?;
    let zero = RadialProfile::zeros(grid.clone());
    let obj = Objective::phi(&zero, params, lambda, terms);
    let gauss = sample_function(grid, Family::gaussian(1.0))?;

    // start from the most negative grid-exact rescaling of the Gaussian
    let m = grid.len() as i64;
    let mut best = (0.0, zero.clone());
    let mut k = -(m - 1);
    while k < m - 1 {
        let v = scale(&gauss, (k as f64 * grid.h()).exp(), params.delta);
        let f = obj.value(v.values());
        if f < best.0 {
            best = (f, v);
        }
        k += 4;
    }
    let mut effective = terms.to_vec();
    if lambda != 0.0 {
        effective.push(eigen_term(params, lambda));
    }
    let (run_values, iters, res, converged) = if best.1.is_zero() {
        (zero.values().to_vec(), 0, 0.0, true)
    } else {
        let model = Model::Plain(obj);
        let run = descend(&model, grid, best.1.values(), opts, Stop::Absolute);
        (run.values, run.iters, run.residual, run.converged)
    };
    if !converged {
        return Err(InlsError::Diverged { iters, el_res: res });
    }
    let u = RadialProfile::new(grid.clone(), run_values)?;
    let obj = Objective::phi(&u, params, lambda, terms);
    Ok(SolveReport {
        value: obj.value(u.values()),
        iters,
        el_res: el_residual(&u, params, lambda, terms)?,
        pohozaev_res: pohozaev_residual(&u, params, &effective).unwrap_or(f64::NAN),
        eigen_rel_res: eigen_relation_residual(&u, params, lambda),
        converged: true,
        profile_path: None,
        profile: u,
    })
}

/// Residual target of [`newton_refine`].
pub const NEWTON_TOL: f64 = 1e-10;

/// Damped Newton on `Phi` with the exact tridiagonal Hessian; `value` is `Phi`.
pub fn newton_refine(u: &RadialProfile, params: &Params, lambda: f64, terms: &[TermSpec], opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    crate::functionals::phi(u, params, lambda, terms)?;
    let obj = Objective::phi(u, params, lambda, terms);
    let m = u.values().len();
    let target = opts.grad_tol.min(NEWTON_TOL);
    let mut x = u.values().to_vec();
    let mut g = obj.grad(&x);
    let mut res = dual_norm(u, &g);
    let mut iters = 0;
    let limit = opts.max_iters.min(200);
    while res > target && iters < limit {
        iters += 1;
        let (diag, off) = obj.hessian(&x, false);
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let d = tridiag::solve_symmetric(&diag, &off, &rhs)
            .ok_or_else(|| InlsError::SingularHessian(format!("at iteration {}", iters)))?;
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..40 {
            let trial: Vec<f64> = (0..m).map(|i| if i < m - 1 { x[i] + t * d[i] } else { 0.0 }).collect();
            let gt = obj.grad(&trial);
            let rt = dual_norm(u, &gt);
            if rt.is_finite() && rt < (1.0 - 1e-4 * t) * res {
                next = Some((trial, gt, rt));
                break;
            }
            t *= 0.5;
        }
        match next {
            Some((trial, gt, rt)) => {
                x = trial;
                g = gt;
                res = rt;
            }
            None => break,
        }
    }
    if res > target {
        return Err(InlsError::Diverged { iters, el_res: res });
    }
    let v = RadialProfile::new(u.grid_arc().clone(), x)?;
    let mut effective = terms.to_vec();
    if lambda != 0.0 {
        effective.push(eigen_term(params, lambda));
    }
    Ok(SolveReport {
        value: obj.value(v.values()),
        iters,
        el_res: res,
        pohozaev_res: pohozaev_residual(&v, params, &effective).unwrap_or(f64::NAN),
        eigen_rel_res: eigen_relation_residual(&v, params, lambda),
        converged: true,
        profile_path: None,
        profile: v,
    })
}

/// Sobolev quotient `D(u) / W(u; 2*_eta, eta)^{2/2*_eta}`.
pub fn sobolev_quotient(u: &RadialProfile, eta: f64) -> Result<f64> {
    let r = critical_exponent(u.grid().dim(), eta)?;
    let w = weighted_integral(u, r, eta)?;
    if w == 0.0 {
        return Err(InlsError::ZeroProfile);
    }
    Ok(dirichlet_energy(u) / w.powf(2.0 / r))
}

/// Upper bound for the best constant `S_eta` by descent of the Sobolev quotient
/// from a Gaussian.
pub fn probe_best_constant(grid: &Arc<RadialGrid>, n: u32, eta: f64, opts: &SolveOptions) -> Result<f64> {
    let init = sample_function(grid, Family::gaussian(1.0))?;
    probe_from(grid, n, eta, &init, opts)
}

/// [`probe_best_constant`] from a supplied initial profile.
pub fn probe_from(grid: &Arc<RadialGrid>, n: u32, eta: f64, init: &RadialProfile, opts: &SolveOptions) -> Result<f64> {
    opts.validate()?;
    if n < 3 || !(eta >= 0.0 && eta < 2.0) || grid.dim() != n {
        return Err(InlsError::Domain("probe needs N >= 3 matching the grid and 0 <= eta < 2".into()));
    }
    if init.is_zero() {
        return Err(InlsError::ZeroProfile);
    }
    let r = critical_exponent(n, eta)?;
    let num = Objective::new(init, 1.0, &[]);
    let den = Objective::new(init, 0.0, &[(1.0, eta, r)]);
    let model = Model::Quotient { num, den, gamma: 2.0 / r };
    let run = descend(&model, grid, init.values(), opts, Stop::Relative);
    let u = RadialProfile::new(grid.clone(), run.values)?;
    sobolev_quotient(&u, eta)
}
