//! Log-uniform radial grids, singular-weight quadrature and the scaling action
//! `u_t(s) = t^delta u(t s)`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{InlsError, Result};
use crate::fmt::{parse_f64, sig17};

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    s_min: f64,
    s_max: f64,
    m: usize,
    h: f64,
    n: u32,
    omega: f64,
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn s_min(&self) -> f64 {
        self.s_min
    }
    pub fn s_max(&self) -> f64 {
        self.s_max
    }
    pub fn len(&self) -> usize {
        self.m
    }
    pub fn is_empty(&self) -> bool {
        self.m == 0
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn dim(&self) -> u32 {
        self.n
    }
    /// Surface area of the unit sphere in R^N.
    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Node weights `w_i s_i^(N-eta)` of the log-variable quadrature, without `omega h`.
    /// Below `s_min` the profile is extended by its first value, which gives the
    /// first node the summed geometric tail `1/(1 - e^{-alpha h})`.
    pub(crate) fn power_weights(&self, eta: f64) -> Vec<f64> {
        let alpha = self.n as f64 - eta;
        let mut w: Vec<f64> = self.nodes.iter().map(|s| s.powf(alpha)).collect();
        w[0] /= -(-alpha * self.h).exp_m1();
        w
    }

    /// Cell stiffness `omega gamma s_i^(N-2)`, i = 0..M-2, of the piecewise-linear energy.
    pub(crate) fn stiffness(&self) -> Vec<f64> {
        let nf = self.n as f64;
        let em1 = self.h.exp_m1();
        let gamma = (nf * self.h).exp_m1() / (nf * em1 * em1);
        self.nodes[..self.m - 1]
            .iter()
            .map(|s| self.omega * gamma * s.powf(nf - 2.0))
            .collect()
    }

    /// Diagonal of the discrete `|x|^2`-weighted `L^2` metric used to measure
    /// residual vectors: `omega h ϖ_i s_i^(N-2)` with half weight at the first node.
    pub(crate) fn dual_weights(&self) -> Vec<f64> {
        let nf = self.n as f64;
        let mut w: Vec<f64> = self
            .nodes
            .iter()
            .map(|s| self.omega * self.h * s.powf(nf - 2.0))
            .collect();
        w[0] *= 0.5;
        w
    }
}

/// `2 pi^(N/2) / Gamma(N/2)` through the half-integer recurrence.
pub fn sphere_area(n: u32) -> f64 {
    // Gamma(1) = 1, Gamma(1/2) = sqrt(pi), Gamma(x + 1) = x Gamma(x)
    let (mut g, mut x) = if n % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    let target = n as f64 / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    2.0 * PI.powf(target) / g
}

pub fn make_grid(s_min: f64, s_max: f64, m: usize, n: u32) -> Result<RadialGrid> {
    if !(s_min > 0.0 && s_max > s_min && s_max.is_finite()) {
        return Err(InlsError::Domain(format!("need 0 < s_min < s_max, got [{}, {}]", s_min, s_max)));
    }
    if m < 16 {
        return Err(InlsError::Domain(format!("M = {} < 16", m)));
    }
    if n < 2 {
        return Err(InlsError::Domain("N >= 2".into()));
    }
    let h = (s_max.ln() - s_min.ln()) / (m - 1) as f64;
    let nodes: Vec<f64> = (0..m).map(|i| s_min * (i as f64 * h).exp()).collect();
    if !nodes.windows(2).all(|w| w[0] < w[1]) {
        return Err(InlsError::Domain("nodes are not strictly increasing".into()));
    }
    Ok(RadialGrid { s_min, s_max, m, h, n, omega: sphere_area(n), nodes })
}

/// Nodal values on a grid; the outer node is pinned to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(grid: Arc<RadialGrid>, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(InlsError::Domain(format!(
                "profile has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(InlsError::Domain("profile values must be finite".into()));
        }
        *values.last_mut().unwrap() = 0.0;
        Ok(RadialProfile { grid, values })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let values = vec![0.0; grid.len()];
        RadialProfile { grid, values }
    }

    pub(crate) fn from_raw(grid: Arc<RadialGrid>, mut values: Vec<f64>) -> Self {
        *values.last_mut().unwrap() = 0.0;
        RadialProfile { grid, values }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }
    pub fn grid_arc(&self) -> &Arc<RadialGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// `tau * u`.
    pub fn scaled_by(&self, tau: f64) -> RadialProfile {
        RadialProfile::from_raw(self.grid.clone(), self.values.iter().map(|v| tau * v).collect())
    }
}

pub fn weighted_integral(u: &RadialProfile, r: f64, eta: f64) -> Result<f64> {
    let g = u.grid();
    if !(r >= 1.0) || !(eta >= 0.0 && eta < g.dim() as f64) {
        return Err(InlsError::Domain(format!("weighted_integral needs r >= 1, 0 <= eta < N (r = {}, eta = {})", r, eta)));
    }
    Ok(power_sum(u, &g.power_weights(eta), r))
}

pub(crate) fn power_sum(u: &RadialProfile, w: &[f64], r: f64) -> f64 {
    let g = u.grid();
    let s: f64 = u.values.iter().zip(w).map(|(v, w)| w * v.abs().powf(r)).sum();
    g.omega * g.h * s
}

pub fn dirichlet_energy(u: &RadialProfile) -> f64 {
    let kc = u.grid().stiffness();
    u.values
        .windows(2)
        .zip(&kc)
        .map(|(w, k)| k * (w[1] - w[0]) * (w[1] - w[0]))
        .sum()
}

/// Tolerance in units of `h` for treating `ln t` as a whole number of steps.
const GRID_EXACT_TOL: f64 = 1e-9;

pub fn scale(u: &RadialProfile, t: f64, delta: f64) -> RadialProfile {
    let g = u.grid_arc().clone();
    let m = g.len();
    if t == 0.0 {
        return RadialProfile::zeros(g);
    }
    if t == 1.0 {
        return u.clone();
    }
    let amp = t.powf(delta);
    let shift = t.ln() / g.h();
    let k = shift.round();
    let vals = &u.values;
    let out: Vec<f64> = if (shift - k).abs() <= GRID_EXACT_TOL {
        let k = k as i64;
        (0..m as i64)
            .map(|i| {
                let j = i + k;
                if j >= m as i64 - 1 {
                    0.0
                } else {
                    amp * vals[j.max(0) as usize]
                }
            })
            .collect()
    } else {
        (0..m)
            .map(|i| {
                let x = i as f64 + shift;
                if x >= (m - 1) as f64 {
                    0.0
                } else if x <= 0.0 {
                    amp * vals[0]
                } else {
                    let j = x.floor() as usize;
                    let f = x - j as f64;
                    amp * ((1.0 - f) * vals[j] + f * vals[j + 1])
                }
            })
            .collect()
    };
    RadialProfile::from_raw(g, out)
}

/// Closed-form families used as initial data and oracles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params")]
pub enum Family {
    /// `A exp(-s^2 / (2 sigma^2))`
    Gaussian { amplitude: f64, sigma: f64 },
    /// Smooth bump `A exp(1 - 1/(1 - y^2))` on `[lo, hi]`.
    Bump { amplitude: f64, lo: f64, hi: f64 },
    /// `A (1 + (s/lambda)^2)^{-(N-2)/2}`
    AubinTalenti { amplitude: f64, lambda: f64 },
}

impl Family {
    pub fn gaussian(sigma: f64) -> Self {
        Family::Gaussian { amplitude: 1.0, sigma }
    }
    pub fn bump(lo: f64, hi: f64) -> Self {
        Family::Bump { amplitude: 1.0, lo, hi }
    }
    pub fn aubin_talenti(lambda: f64) -> Self {
        Family::AubinTalenti { amplitude: 1.0, lambda }
    }
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian { .. } => "Gaussian",
            Family::Bump { .. } => "Bump",
            Family::AubinTalenti { .. } => "AubinTalenti",
        }
    }
}

pub fn sample_function(grid: &Arc<RadialGrid>, family: Family) -> Result<RadialProfile> {
    let positive = |xs: &[f64]| xs.iter().all(|x| *x > 0.0 && x.is_finite());
    let nf = grid.dim() as f64;
    let vals: Vec<f64> = match family {
        Family::Gaussian { amplitude, sigma } => {
            if !positive(&[amplitude, sigma]) {
                return Err(InlsError::Domain("Gaussian needs positive amplitude and sigma".into()));
            }
            grid.nodes()
                .iter()
                .map(|s| amplitude * (-0.5 * (s / sigma) * (s / sigma)).exp())
                .collect()
        }
        Family::Bump { amplitude, lo, hi } => {
            if !positive(&[amplitude, lo, hi]) || hi <= lo {
                return Err(InlsError::Domain("Bump needs 0 < lo < hi and positive amplitude".into()));
            }
            grid.nodes()
                .iter()
                .map(|s| {
                    let y = (2.0 * s - lo - hi) / (hi - lo);
                    if y.abs() < 1.0 {
                        amplitude * (1.0 - 1.0 / (1.0 - y * y)).exp()
                    } else {
                        0.0
                    }
                })
                .collect()
        }
        Family::AubinTalenti { amplitude, lambda } => {
            if !positive(&[amplitude, lambda]) || grid.dim() < 3 {
                return Err(InlsError::Domain("AubinTalenti needs N >= 3 and positive parameters".into()));
            }
            grid.nodes()
                .iter()
                .map(|s| amplitude * (1.0 + (s / lambda) * (s / lambda)).powf(-(nf - 2.0) / 2.0))
                .collect()
        }
    };
    Ok(RadialProfile::from_raw(grid.clone(), vals))
}

/// Header metadata of a stored profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileMeta {
    #[serde(rename = "N")]
    pub n: u32,
    pub s_min: f64,
    pub s_max: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub family: String,
    pub params: serde_json::Value,
}

pub fn profile_csv(u: &RadialProfile, family: &str, params: serde_json::Value) -> String {
    let g = u.grid();
    let meta = ProfileMeta {
        n: g.dim(),
        s_min: g.s_min(),
        s_max: g.s_max(),
        m: g.len(),
        family: family.to_string(),
        params,
    };
    let mut out = String::with_capacity(48 * (g.len() + 2));
    out.push_str("# ");
    out.push_str(&serde_json::to_string(&meta).expect("metadata serializes"));
    out.push_str("\ns,u\n");
    for (s, v) in g.nodes().iter().zip(u.values()) {
        out.push_str(&sig17(*s));
        out.push(',');
        out.push_str(&sig17(*v));
        out.push('\n');
    }
    out
}

pub fn parse_profile_csv(text: &str) -> Result<(RadialProfile, ProfileMeta)> {
    let bad = |m: &str| InlsError::Parse(m.to_string());
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| bad("empty profile file"))?;
    let json = first.strip_prefix('#').ok_or_else(|| bad("missing metadata line"))?;
    let meta: ProfileMeta = serde_json::from_str(json.trim()).map_err(|e| bad(&e.to_string()))?;
    if lines.next().map(str::trim) != Some("s,u") {
        return Err(bad("missing `s,u` header"));
    }
    let grid = Arc::new(make_grid(meta.s_min, meta.s_max, meta.m, meta.n)?);
    let mut vals = Vec::with_capacity(meta.m);
    for (i, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let (s, v) = line.split_once(',').ok_or_else(|| bad("row without comma"))?;
        let s = parse_f64(s).ok_or_else(|| bad("bad s value"))?;
        let v = parse_f64(v).ok_or_else(|| bad("bad u value"))?;
        if i < meta.m && (s - grid.nodes()[i]).abs() > 1e-12 * s.abs() {
            return Err(bad(&format!("node {} does not match the grid", i)));
        }
        vals.push(v);
    }
    let u = RadialProfile::new(grid, vals)?;
    Ok((u, meta))
}
