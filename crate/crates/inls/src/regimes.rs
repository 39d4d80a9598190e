//! Exponent calculus: derived parameters, embedding intervals, admissibility,
//! regime classification, nonexistence and threshold levels.

use serde::Serialize;

use crate::error::{InlsError, Result};
use crate::fmt::{ser17, sig17};

/// Comparison tolerance for endpoint and regime ties.
pub const TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Params {
    #[serde(rename = "N")]
    pub n: u32,
    #[serde(serialize_with = "ser17")]
    pub b: f64,
    #[serde(serialize_with = "ser17")]
    pub q: f64,
    #[serde(serialize_with = "ser17")]
    pub p: f64,
    #[serde(serialize_with = "ser17")]
    pub delta: f64,
    #[serde(serialize_with = "ser17")]
    pub a: f64,
    #[serde(serialize_with = "ser17")]
    pub ell: f64,
}

impl Params {
    pub fn nf(&self) -> f64 {
        self.n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedPair {
    pub eta: f64,
    pub r: f64,
}

impl WeightedPair {
    pub fn new(eta: f64, r: f64) -> Self {
        WeightedPair { eta, r }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Regime {
    Subscaled,
    Scaled,
    Superscaled,
    NotApplicable,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Subscaled => "Subscaled",
            Regime::Scaled => "Scaled",
            Regime::Superscaled => "Superscaled",
            Regime::NotApplicable => "NotApplicable",
        }
    }
}

/// Range of powers `r` for which the weighted embedding holds at a fixed weight.
/// `upper` is `f64::INFINITY` exactly when `N = 2`; `lower` is NaN when the weight
/// admits no interval at all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddingInterval {
    #[serde(serialize_with = "ser17")]
    pub lower: f64,
    #[serde(serialize_with = "ser17")]
    pub upper: f64,
    pub lower_included: bool,
    pub upper_included: bool,
    pub radial: bool,
    pub compact_interior: bool,
}

impl EmbeddingInterval {
    fn undefined(n: u32, radial: bool) -> Self {
        EmbeddingInterval {
            lower: f64::NAN,
            upper: if n == 2 { f64::INFINITY } else { f64::NAN },
            lower_included: false,
            upper_included: false,
            radial,
            compact_interior: false,
        }
    }

    /// Membership with endpoint ties resolved at [`TOL`].
    pub fn contains(&self, r: f64) -> bool {
        if self.lower.is_nan() || r.is_nan() {
            return false;
        }
        let lo_ok = if (r - self.lower).abs() <= TOL {
            self.lower_included
        } else {
            r > self.lower
        };
        let hi_ok = if self.upper.is_infinite() {
            true
        } else if (r - self.upper).abs() <= TOL {
            self.upper_included
        } else {
            r < self.upper
        };
        lo_ok && hi_ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeVerdict {
    pub admissible: bool,
    pub regime: Regime,
    pub interval: EmbeddingInterval,
    pub reason: &'static str,
}

pub fn derive_params(n: u32, b: f64, q: f64, p: f64) -> Result<Params> {
    let fail = |s: &str| Err(InlsError::HypothesisViolation(s.to_string()));
    if !(b.is_finite() && q.is_finite() && p.is_finite()) {
        return fail("parameters must be finite");
    }
    if n < 2 {
        return fail("N >= 2");
    }
    if b <= 0.0 {
        return fail("0 < b");
    }
    if b >= 2.0 {
        return fail("b < 2");
    }
    if p <= 2.0 {
        return fail("2 < p");
    }
    if q <= p {
        return fail("p < q");
    }
    let nf = n as f64;
    if n >= 3 && q >= 2.0 * (nf - b) / (nf - 2.0) {
        return fail("q < 2(N-b)/(N-2)");
    }
    let delta = (2.0 - b) / (q - 2.0);
    let a = delta.mul_add(q - p, b);
    let ell = compensated_ell(delta, b, q, nf);
    if !(a > b && a < 2.0) {
        return fail("b < a < 2");
    }
    if ell <= 0.0 {
        return fail("ell > 0");
    }
    Ok(Params { n, b, q, p, delta, a, ell })
}

/// `2(N-eta)/(N-2)`, or `+inf` in the plane.
pub fn critical_exponent(n: u32, eta: f64) -> Result<f64> {
    let nf = n as f64;
    if n < 2 || !(eta >= 0.0 && eta < nf) {
        return Err(InlsError::Domain(format!("eta = {} outside [0, {})", eta, n)));
    }
    if n == 2 {
        Ok(f64::INFINITY)
    } else {
        Ok(2.0 * (nf - eta) / (nf - 2.0))
    }
}

pub fn lower_endpoint(params: &Params, eta: f64, radial: bool) -> Result<f64> {
    let (nf, b, q) = (params.nf(), params.b, params.q);
    if !(eta >= 0.0 && eta < nf) {
        return Err(InlsError::Domain(format!("eta = {} outside [0, {})", eta, params.n)));
    }
    if radial && eta < b {
        return Ok((q * (2.0 * nf - 2.0 - eta) + 2.0 * (b - eta)) / (2.0 * nf - 2.0 - b));
    }
    if eta >= b {
        Ok(q * (nf - eta) / (nf - b))
    } else if params.n == 2 {
        Err(InlsError::Domain("N = 2 with eta < b has no nonradial interval".into()))
    } else {
        Ok((eta * q * (nf - 2.0) + 2.0 * nf * (b - eta)) / (b * (nf - 2.0)))
    }
}

pub fn embedding_interval(params: &Params, eta: f64, radial: bool) -> Result<EmbeddingInterval> {
    let lower = lower_endpoint(params, eta, radial)?;
    let upper = critical_exponent(params.n, eta)?;
    let three_plus = params.n >= 3;
    let compact_interior = if !three_plus && !(radial && eta < params.b) {
        eta > params.b
    } else {
        true
    };
    Ok(EmbeddingInterval {
        lower,
        upper,
        lower_included: eta <= params.b,
        upper_included: three_plus && eta <= 2.0,
        radial,
        compact_interior,
    })
}

/// `r delta + eta - N` with an exact product and a compensated sum; the result is
/// small next to its summands near the critical exponent.
fn compensated_ell(delta: f64, eta: f64, r: f64, nf: f64) -> f64 {
    let s = eta - nf;
    let z = s - eta;
    let err = (eta - (s - z)) + (-nf - z);
    r.mul_add(delta, s) + err
}

pub fn ell_of(params: &Params, eta: f64, r: f64) -> f64 {
    compensated_ell(params.delta, eta, r, params.nf())
}

pub fn scaled_threshold(params: &Params, eta: f64) -> f64 {
    params.q + (params.b - eta) / params.delta
}

fn regime_of(params: &Params, pair: WeightedPair) -> Regime {
    let d = pair.r - scaled_threshold(params, pair.eta);
    if d.abs() <= TOL {
        Regime::Scaled
    } else if d < 0.0 {
        Regime::Subscaled
    } else {
        Regime::Superscaled
    }
}

pub fn classify_pair(params: &Params, pair: WeightedPair, radial: bool) -> RegimeVerdict {
    let WeightedPair { eta, r } = pair;
    let nf = params.nf();
    let interval = embedding_interval(params, eta, radial)
        .unwrap_or_else(|_| EmbeddingInterval::undefined(params.n, radial));
    let reject = |reason| RegimeVerdict {
        admissible: false,
        regime: Regime::NotApplicable,
        interval,
        reason,
    };
    if !(eta.is_finite() && !r.is_nan()) {
        return reject("NOT_FINITE");
    }
    if eta < 0.0 {
        return reject("ETA_NEGATIVE");
    }
    if params.n == 2 {
        if eta < params.b && !radial {
            return reject("N2_ETA_LT_B");
        }
        if eta >= 2.0 {
            return reject("ETA_TOO_LARGE");
        }
    } else if eta >= (nf + 2.0) / 2.0 {
        return reject("ETA_TOO_LARGE");
    }
    if r <= 1.0 {
        return reject("R_LE_ONE");
    }
    if interval.lower.is_nan() {
        return reject("NO_INTERVAL");
    }
    if !interval.contains(r) {
        let below = if (r - interval.lower).abs() <= TOL {
            true
        } else {
            r < interval.lower
        };
        return reject(if below { "R_BELOW_LOWER" } else { "R_ABOVE_UPPER" });
    }
    RegimeVerdict {
        admissible: true,
        regime: regime_of(params, pair),
        interval,
        reason: "OK",
    }
}

/// Pohozaev-type nonexistence of nontrivial solutions for a single `(eta, r)` term.
pub fn nonexistence(params: &Params, eta: f64, r: f64) -> Result<bool> {
    if !(eta >= 0.0 && eta < 2.0) || !(r > 1.0) {
        return Err(InlsError::Domain(format!("(eta, r) = ({}, {}) needs 0 <= eta < 2, r > 1", eta, r)));
    }
    let nf = params.nf();
    let low = params.q * (nf - eta) / (nf - params.b);
    let at_or_below = r <= low || (r - low).abs() <= TOL;
    if params.n == 2 {
        return Ok(at_or_below);
    }
    let crit = critical_exponent(params.n, eta)?;
    Ok(at_or_below || r >= crit || (r - crit).abs() <= TOL)
}

/// Companion pair `(eta~, r~, theta)` for the interpolation inequality between
/// `L^r_eta`, `L^r~_eta~` and the eigen-term space `L^p_a`.
pub fn interpolation_pair(params: &Params, pair: WeightedPair) -> Result<(f64, f64, f64)> {
    let verdict = classify_pair(params, pair, false);
    if !verdict.admissible {
        return Err(InlsError::Domain(format!("pair is not admissible ({})", verdict.reason)));
    }
    let (a, p, b) = (params.a, params.p, params.b);
    let WeightedPair { eta, r } = pair;

    if (eta - a).abs() <= TOL {
        if (r - p).abs() <= TOL {
            return Ok((a, p, 0.5));
        }
        let iv = embedding_interval(params, a, false)?;
        let rt = if r > p {
            0.5 * (iv.lower.max(1.0) + p)
        } else if iv.upper.is_finite() {
            0.5 * (p + iv.upper)
        } else {
            2.0 * p
        };
        let theta = (1.0 / p - 1.0 / rt) / (1.0 / r - 1.0 / rt);
        return Ok((a, rt, theta));
    }

    // walk eta~ toward a from the far side until the companion is admissible
    let mut et = if eta > a { 0.5 * (b + a) } else { 0.5 * (a + 2.0) };
    for _ in 0..200 {
        let theta = (a - et) * r / (p * (eta - et));
        if theta > 0.0 && theta < 1.0 && et > b && et < 2.0 {
            let inv = 1.0 / p + theta / (1.0 - theta) * (1.0 / p - 1.0 / r);
            if inv > 0.0 {
                let rt = 1.0 / inv;
                if classify_pair(params, WeightedPair::new(et, rt), false).admissible {
                    return Ok((et, rt, theta));
                }
            }
        }
        et = 0.5 * (et + a);
    }
    Err(InlsError::SearchFailed(format!("no companion for ({}, {})", eta, r)))
}

/// Palais–Smale level below which compactness holds for a single critical term.
pub fn ps_threshold(n: u32, eta1: f64, s: f64) -> Result<f64> {
    if n < 3 || !(eta1 >= 0.0 && eta1 < 2.0) || !(s >= 0.0) || !s.is_finite() {
        return Err(InlsError::Domain("ps_threshold needs N >= 3, 0 <= eta1 < 2, S >= 0".into()));
    }
    let nf = n as f64;
    Ok((2.0 - eta1) / (2.0 * (nf - eta1)) * s.powf((nf - eta1) / (2.0 - eta1)))
}

/// Positive root `S~` of `mu S2^{-2*_2/2} S~^{(2-eta2)/(N-2)} + S1^{-2*_1/2} S~^{(2-eta1)/(N-2)} = 1`.
pub fn tilde_s_root(mu: f64, s1: f64, s2: f64, n: u32, eta1: f64, eta2: f64) -> Result<f64> {
    let ok_eta = |e: f64| e >= 0.0 && e < 2.0;
    if !(mu >= 0.0) || !(s1 > 0.0) || !(s2 > 0.0) || n < 3 || !ok_eta(eta1) || !ok_eta(eta2) {
        return Err(InlsError::Domain("tilde_s_root needs mu >= 0, S1, S2 > 0, N >= 3, 0 <= eta < 2".into()));
    }
    if !(mu.is_finite() && s1.is_finite() && s2.is_finite()) {
        return Err(InlsError::Domain("arguments must be finite".into()));
    }
    let f = tilde_s_lhs(mu, s1, s2, n, eta1, eta2);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while f(hi) < 1.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(InlsError::Domain("no bracket for the root".into()));
        }
    }
    if lo == 0.0 {
        while f(hi * 0.5) >= 1.0 && hi > f64::MIN_POSITIVE {
            hi *= 0.5;
        }
        lo = hi * 0.5;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if (f(lo) - 1.0).abs() <= (f(hi) - 1.0).abs() { lo } else { hi })
}

/// Left-hand side of the `S~` equation as a function of `S~`.
pub fn tilde_s_lhs(mu: f64, s1: f64, s2: f64, n: u32, eta1: f64, eta2: f64) -> impl Fn(f64) -> f64 {
    let nf = n as f64;
    let c2 = mu * s2.powf(-(nf - eta2) / (nf - 2.0));
    let c1 = s1.powf(-(nf - eta1) / (nf - 2.0));
    let (e2, e1) = ((2.0 - eta2) / (nf - 2.0), (2.0 - eta1) / (nf - 2.0));
    move |s: f64| c2 * s.powf(e2) + c1 * s.powf(e1)
}

/// Zeros `R1 < R2` of `gamma(t) = t - C mu t^{e1} - C1 t^{e2}`, `e1 = ell(eta,r)/ell`,
/// `e2 = ell(eta1, 2*_{eta1})/ell`. `None` when gamma stays negative.
pub fn gamma_mu_roots(
    params: &Params,
    pair: WeightedPair,
    eta1: f64,
    mu: f64,
    c: f64,
    c1: f64,
) -> Result<Option<(f64, f64)>> {
    if !(mu >= 0.0 && c >= 0.0 && c1 >= 0.0) {
        return Err(InlsError::Domain("mu, C, C1 must be nonnegative".into()));
    }
    let crit = critical_exponent(params.n, eta1)?;
    if !crit.is_finite() {
        return Err(InlsError::Domain("critical term needs N >= 3".into()));
    }
    let e1 = ell_of(params, pair.eta, pair.r) / params.ell;
    let e2 = ell_of(params, eta1, crit) / params.ell;
    if !(e1 > 0.0 && e1 < 1.0 && e2 > 1.0) {
        return Err(InlsError::Domain(format!(
            "need 0 < ell(eta,r) < ell < ell(eta1,2*): exponents {} and {}",
            e1, e2
        )));
    }
    let k1 = c * mu;
    let h = |t: f64| k1 * t.powf(e1 - 1.0) + c1 * t.powf(e2 - 1.0);
    if k1 == 0.0 && c1 == 0.0 {
        return Ok(Some((0.0, f64::INFINITY)));
    }
    if k1 == 0.0 {
        return Ok(Some((0.0, c1.powf(-1.0 / (e2 - 1.0)))));
    }
    if c1 == 0.0 {
        return Ok(Some((k1.powf(1.0 / (1.0 - e1)), f64::INFINITY)));
    }
    let tstar = (k1 * (1.0 - e1) / (c1 * (e2 - 1.0))).powf(1.0 / (e2 - e1));
    if !(h(tstar) < 1.0) {
        return Ok(None);
    }
    // h decreases on (0, t*) and increases beyond it
    let bisect = |mut lo: f64, mut hi: f64, rising: bool| {
        for _ in 0..2000 {
            let mid = if lo > 0.0 && hi.is_finite() { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
            if mid <= lo || mid >= hi {
                break;
            }
            if (h(mid) < 1.0) == rising {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let mut lo = tstar;
    while h(lo) < 1.0 {
        lo *= 0.5;
    }
    let mut hi = tstar;
    while h(hi) < 1.0 {
        hi *= 2.0;
    }
    Ok(Some((bisect(lo, tstar, false), bisect(tstar, hi, true))))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionRow {
    pub eta: f64,
    pub r: f64,
    pub verdict: RegimeVerdict,
    pub nonexistence: Option<bool>,
}

pub const REGION_HEADER: &str = "eta,r,admissible,regime,nonexistence,lower,lower_included,upper,upper_included";

pub fn region_map(params: &Params, eta_grid: &[f64], r_grid: &[f64], radial: bool) -> Result<Vec<RegionRow>> {
    if eta_grid.is_empty() || r_grid.is_empty() {
        return Err(InlsError::EmptyGrid);
    }
    let increasing = |g: &[f64]| g.windows(2).all(|w| w[0] < w[1]);
    if !increasing(eta_grid) || !increasing(r_grid) {
        return Err(InlsError::Domain("grids must be strictly increasing".into()));
    }
    let mut rows = Vec::with_capacity(eta_grid.len() * r_grid.len());
    for &eta in eta_grid {
        for &r in r_grid {
            rows.push(RegionRow {
                eta,
                r,
                verdict: classify_pair(params, WeightedPair::new(eta, r), radial),
                nonexistence: nonexistence(params, eta, r).ok(),
            });
        }
    }
    Ok(rows)
}

pub fn region_csv(rows: &[RegionRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(REGION_HEADER);
    out.push('\n');
    for row in rows {
        let iv = &row.verdict.interval;
        let nonex = match row.nonexistence {
            Some(v) => v.to_string(),
            None => "na".to_string(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            sig17(row.eta),
            sig17(row.r),
            row.verdict.admissible,
            row.verdict.regime.name(),
            nonex,
            sig17(iv.lower),
            iv.lower_included,
            sig17(iv.upper),
            iv.upper_included
        ));
    }
    out
}
