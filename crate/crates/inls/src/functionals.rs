//! Energies `I`, `J`, `Phi`, their exact discrete derivatives, the manifold
//! projection and verification residuals.

use std::str::FromStr;

use serde::Serialize;

use crate::error::{InlsError, Result};
use crate::fmt::{ser17, ser17_opt};
use crate::grid::{dirichlet_energy, power_sum, scale, RadialProfile};
use crate::regimes::Params;

/// One power nonlinearity `c |u|^{r-2} u / |x|^eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermSpec {
    pub c: f64,
    pub eta: f64,
    pub r: f64,
}

impl TermSpec {
    pub fn new(c: f64, eta: f64, r: f64) -> Self {
        TermSpec { c, eta, r }
    }
}

impl FromStr for TermSpec {
    type Err = InlsError;

    /// `c:eta:r`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(InlsError::Parse(format!("term `{}` is not c:eta:r", s)));
        }
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| InlsError::Parse(format!("bad number `{}` in term", t)))
        };
        Ok(TermSpec::new(num(parts[0])?, num(parts[1])?, num(parts[2])?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalReport {
    #[serde(rename = "I", serialize_with = "ser17")]
    pub i: f64,
    #[serde(rename = "J", serialize_with = "ser17")]
    pub j: f64,
    #[serde(serialize_with = "ser17_opt")]
    pub rayleigh: Option<f64>,
    #[serde(serialize_with = "ser17")]
    pub phi: f64,
    #[serde(serialize_with = "ser17")]
    pub grad_norm: f64,
}

struct PowerTerm {
    coef: f64,
    r: f64,
    w: Vec<f64>,
}

/// `dcoef * D/2 + sum coef/r * W(r, eta)` with precomputed quadrature weights.
pub(crate) struct Objective {
    kc: Vec<f64>,
    dcoef: f64,
    terms: Vec<PowerTerm>,
}

/// `|u|^{r-2} u`, zero at the origin.
fn odd_pow(u: f64, r: f64) -> f64 {
    if u == 0.0 { 0.0 } else { u.abs().powf(r - 2.0) * u }
}

fn abs_pow(u: f64, r: f64) -> f64 {
    if u == 0.0 { 0.0 } else { u.abs().powf(r) }
}

impl Objective {
    pub(crate) fn new(u: &RadialProfile, dcoef: f64, pieces: &[(f64, f64, f64)]) -> Self {
        let g = u.grid();
        let scale = g.omega() * g.h();
        let terms = pieces
            .iter()
            .filter(|(c, _, _)| *c != 0.0)
            .map(|&(coef, eta, r)| PowerTerm {
                coef,
                r,
                w: g.power_weights(eta).into_iter().map(|w| w * scale).collect(),
            })
            .collect();
        Objective { kc: g.stiffness(), dcoef, terms }
    }

    /// Energy of `I - lambda J - sum c_j/r_j W_j`.
    pub(crate) fn phi(u: &RadialProfile, params: &Params, lambda: f64, terms: &[TermSpec]) -> Self {
        let mut pieces = vec![(1.0, params.b, params.q), (-lambda, params.a, params.p)];
        pieces.extend(terms.iter().map(|t| (-t.c, t.eta, t.r)));
        Objective::new(u, 1.0, &pieces)
    }

    pub(crate) fn value(&self, u: &[f64]) -> f64 {
        let mut d = 0.0;
        for (i, k) in self.kc.iter().enumerate() {
            let du = u[i + 1] - u[i];
            d += k * du * du;
        }
        let mut v = 0.5 * self.dcoef * d;
        for t in &self.terms {
            let s: f64 = u.iter().zip(&t.w).map(|(x, w)| w * abs_pow(*x, t.r)).sum();
            v += t.coef / t.r * s;
        }
        v
    }

    /// Gradient with respect to the free nodes `0..M-1`.
    pub(crate) fn grad(&self, u: &[f64]) -> Vec<f64> {
        let m = u.len();
        let mut g = vec![0.0; m];
        for (i, k) in self.kc.iter().enumerate() {
            let f = self.dcoef * k * (u[i + 1] - u[i]);
            g[i] -= f;
            g[i + 1] += f;
        }
        for t in &self.terms {
            for i in 0..m {
                g[i] += t.coef * t.w[i] * odd_pow(u[i], t.r);
            }
        }
        g.truncate(m - 1);
        g
    }

    /// Tridiagonal Hessian on the free nodes: `(diag, off)`. With `positive_only`
    /// only the convex part (stiffness and positive coefficients) is assembled.
    pub(crate) fn hessian(&self, u: &[f64], positive_only: bool) -> (Vec<f64>, Vec<f64>) {
        let n = u.len() - 1;
        let dc = if positive_only { self.dcoef.max(0.0) } else { self.dcoef };
        let mut diag = vec![0.0; n];
        for i in 0..n {
            let left = if i > 0 { self.kc[i - 1] } else { 0.0 };
            diag[i] = dc * (left + self.kc[i]);
        }
        let off: Vec<f64> = self.kc[..n - 1].iter().map(|k| -dc * k).collect();
        for t in &self.terms {
            if positive_only && t.coef <= 0.0 {
                continue;
            }
            for i in 0..n {
                if u[i] != 0.0 {
                    diag[i] += t.coef * (t.r - 1.0) * t.w[i] * u[i].abs().powf(t.r - 2.0);
                }
            }
        }
        (diag, off)
    }
}

fn check_terms(u: &RadialProfile, terms: &[TermSpec], pohozaev: bool) -> Result<()> {
    let nf = u.grid().dim() as f64;
    let eta_max = if pohozaev { 2.0 } else { nf };
    for t in terms {
        if !(t.r > 1.0) || !(t.eta >= 0.0 && t.eta < eta_max) || !t.c.is_finite() {
            return Err(InlsError::Domain(format!(
                "term (c, eta, r) = ({}, {}, {}) needs r > 1 and 0 <= eta < {}",
                t.c, t.eta, t.r, eta_max
            )));
        }
    }
    Ok(())
}

fn w_of(u: &RadialProfile, r: f64, eta: f64) -> f64 {
    power_sum(u, &u.grid().power_weights(eta), r)
}

pub fn i_energy(u: &RadialProfile, params: &Params) -> f64 {
    0.5 * dirichlet_energy(u) + w_of(u, params.q, params.b) / params.q
}

pub fn j_energy(u: &RadialProfile, params: &Params) -> f64 {
    w_of(u, params.p, params.a) / params.p
}

pub fn rayleigh(u: &RadialProfile, params: &Params) -> Result<f64> {
    let j = j_energy(u, params);
    if u.is_zero() || j == 0.0 {
        return Err(InlsError::ZeroProfile);
    }
    Ok(i_energy(u, params) / j)
}

/// Rescale `u` onto `I = 1`: closed-form factor `I^{-1/ell}`, then a root solve in
/// `ln t` to absorb the interpolation error of off-grid scalings.
pub fn project_to_m(u: &RadialProfile, params: &Params) -> Result<RadialProfile> {
    if u.is_zero() {
        return Err(InlsError::ZeroProfile);
    }
    let i0 = i_energy(u, params);
    let x0 = -i0.ln() / params.ell;
    let f = |x: f64| i_energy(&scale(u, x.exp(), params.delta), params).ln();
    let f0 = f(x0);
    if f0.abs() <= 1e-12 {
        return Ok(scale(u, x0.exp(), params.delta));
    }
    let h = u.grid().h();
    let dir = if f0 > 0.0 { -1.0 } else { 1.0 };
    let (mut lo, mut hi) = (x0, x0);
    let mut step = h;
    let mut found = false;
    for _ in 0..60 {
        let x = x0 + dir * step;
        let fx = f(x);
        if !fx.is_finite() {
            break;
        }
        if (fx > 0.0) != (f0 > 0.0) {
            if dir > 0.0 { hi = x } else { lo = x }
            found = true;
            break;
        }
        if dir > 0.0 { lo = x } else { hi = x }
        step *= 2.0;
    }
    if !found {
        return Err(InlsError::Domain("projection onto I = 1 leaves the grid".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 { lo = mid } else { hi = mid }
    }
    let x = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
    Ok(scale(u, x.exp(), params.delta))
}

pub fn phi(u: &RadialProfile, params: &Params, lambda: f64, terms: &[TermSpec]) -> Result<f64> {
    check_terms(u, terms, false)?;
    Ok(Objective::phi(u, params, lambda, terms).value(u.values()))
}

/// Exact gradient of the discrete `Phi` with respect to the free nodes (outer node excluded).
pub fn grad_phi(u: &RadialProfile, params: &Params, lambda: f64, terms: &[TermSpec]) -> Result<Vec<f64>> {
    check_terms(u, terms, false)?;
    Ok(Objective::phi(u, params, lambda, terms).grad(u.values()))
}

/// Size of a nodal residual vector in the `|x|`-weighted dual metric.
pub(crate) fn dual_norm(u: &RadialProfile, g: &[f64]) -> f64 {
    let w = u.grid().dual_weights();
    g.iter().zip(&w).map(|(g, w)| g * g / w).sum::<f64>().sqrt()
}

pub fn el_residual(u: &RadialProfile, params: &Params, lambda: f64, terms: &[TermSpec]) -> Result<f64> {
    let g = grad_phi(u, params, lambda, terms)?;
    Ok(dual_norm(u, &g))
}

pub fn pohozaev_residual(u: &RadialProfile, params: &Params, terms: &[TermSpec]) -> Result<f64> {
    check_terms(u, terms, true)?;
    let nf = params.nf();
    let lhs = 0.5 * (nf - 2.0) * dirichlet_energy(u) + (nf - params.b) / params.q * w_of(u, params.q, params.b);
    let rhs: f64 = terms
        .iter()
        .map(|t| t.c * (nf - t.eta) / t.r * w_of(u, t.r, t.eta))
        .sum();
    Ok((lhs - rhs).abs() / (lhs.abs() + rhs.abs() + f64::EPSILON))
}

pub fn eigen_relation_residual(u: &RadialProfile, params: &Params, lambda: f64) -> f64 {
    let i = i_energy(u, params);
    let lj = lambda * j_energy(u, params);
    (i - lj).abs() / (i.abs() + lj.abs() + f64::EPSILON)
}

pub fn functional_report(u: &RadialProfile, params: &Params, lambda: f64, terms: &[TermSpec]) -> Result<FunctionalReport> {
    Ok(FunctionalReport {
        i: i_energy(u, params),
        j: j_energy(u, params),
        rayleigh: rayleigh(u, params).ok(),
        phi: phi(u, params, lambda, terms)?,
        grad_norm: el_residual(u, params, lambda, terms)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, sample_function, Family};
    use crate::regimes::derive_params;
    use std::sync::Arc;

    fn setup() -> (Params, RadialProfile) {
        let pr = derive_params(3, 1.0, 3.5, 3.0).unwrap();
        let g = Arc::new(make_grid(1e-4, 1e4, 1025, 3).unwrap());
        (pr, sample_function(&g, Family::gaussian(1.0)).unwrap())
    }

    #[test]
    fn zero_profile_values() {
        let (pr, u) = setup();
        let z = RadialProfile::zeros(u.grid_arc().clone());
        assert_eq!(i_energy(&z, &pr), 0.0);
        assert_eq!(j_energy(&z, &pr), 0.0);
        assert_eq!(rayleigh(&z, &pr), Err(InlsError::ZeroProfile));
        assert_eq!(project_to_m(&z, &pr).unwrap_err(), InlsError::ZeroProfile);
        let terms = [TermSpec::new(1.0, 1.5, 2.5)];
        assert_eq!(phi(&z, &pr, 1.0, &terms).unwrap(), 0.0);
        assert!(grad_phi(&z, &pr, 1.0, &terms).unwrap().iter().all(|g| *g == 0.0));
        assert_eq!(el_residual(&z, &pr, 1.0, &terms).unwrap(), 0.0);
        assert_eq!(pohozaev_residual(&z, &pr, &terms).unwrap(), 0.0);
        assert_eq!(eigen_relation_residual(&z, &pr, 1.0), 0.0);
    }

    #[test]
    fn phi_reduces_to_i() {
        let (pr, u) = setup();
        assert!((phi(&u, &pr, 0.0, &[]).unwrap() - i_energy(&u, &pr)).abs() < 1e-14);
        assert!(phi(&u, &pr, 0.0, &[TermSpec::new(1.0, 1.0, 0.5)]).is_err());
        assert!(pohozaev_residual(&u, &pr, &[TermSpec::new(1.0, 2.5, 3.0)]).is_err());
    }

    #[test]
    fn pairing_with_u() {
        // <grad I(u), u> = D(u) + W(q, b)
        let (pr, u) = setup();
        let g = grad_phi(&u, &pr, 0.0, &[]).unwrap();
        let pair: f64 = g.iter().zip(u.values()).map(|(a, b)| a * b).sum();
        let expect = dirichlet_energy(&u) + w_of(&u, pr.q, pr.b);
        assert!((pair - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn amplitude_breaks_rayleigh() {
        let (pr, u) = setup();
        let r1 = rayleigh(&u, &pr).unwrap();
        let r2 = rayleigh(&u.scaled_by(2.0), &pr).unwrap();
        assert!((r1 - r2).abs() > 1e-3);
    }

    #[test]
    fn projection_hits_manifold() {
        let (pr, u) = setup();
        let v = project_to_m(&u, &pr).unwrap();
        assert!((i_energy(&v, &pr) - 1.0).abs() < 1e-6);
        let w = project_to_m(&v, &pr).unwrap();
        assert!((i_energy(&w, &pr) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn parse_terms() {
        let t: TermSpec = "1.5:0.25:2.5".parse().unwrap();
        assert_eq!(t, TermSpec::new(1.5, 0.25, 2.5));
        assert!("1:2".parse::<TermSpec>().is_err());
        assert!("a:b:c".parse::<TermSpec>().is_err());
    }

    #[test]
    fn report_json_keys() {
        let (pr, u) = setup();
        let rep = functional_report(&u, &pr, 0.5, &[]).unwrap();
        let text = serde_json::to_string(&rep).unwrap();
        for key in ["\"I\"", "\"J\"", "\"rayleigh\"", "\"phi\"", "\"grad_norm\""] {
            assert!(text.contains(key), "{}", text);
        }
    }
}
