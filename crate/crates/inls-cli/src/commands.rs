use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use inls::fmt::{ser17, ser17_opt};
use inls::functionals::{self, TermSpec};
use inls::grid::{self, Family, RadialProfile};
use inls::regimes::{self, WeightedPair};
use inls::solver::{self, SolveOptions, SolveReport};
use inls::{InlsError, Params, Result};

use crate::{Command, GridArgs, InitKind, OptArgs, ParamArgs};

pub fn exit_code(e: &InlsError) -> u8 {
    match e {
        InlsError::Diverged { .. } | InlsError::SingularHessian(_) | InlsError::SearchFailed(_) => 3,
        _ => 2,
    }
}

pub fn diagnostic(code: &str, message: &str) -> String {
    serde_json::json!({ "error": code, "message": message }).to_string()
}

fn params_of(a: &ParamArgs) -> Result<Params> {
    regimes::derive_params(a.n, a.b, a.q, a.p)
}

fn grid_of(a: &GridArgs, n: u32) -> Result<Arc<grid::RadialGrid>> {
    Ok(Arc::new(grid::make_grid(a.s_min, a.s_max, a.m, n)?))
}

fn opts_of(a: &OptArgs) -> SolveOptions {
    SolveOptions {
        max_iters: a.max_iters,
        grad_tol: a.grad_tol,
        step_init: a.step_init,
        armijo_c: a.armijo_c,
        armijo_shrink: a.armijo_shrink,
        seed: a.seed,
    }
}

fn parse_terms(raw: &[String]) -> Result<Vec<TermSpec>> {
    raw.iter().map(|t| t.parse()).collect()
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("report serializes")
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| InlsError::Io(format!("{}: {}", path.display(), e)))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Store the profile and report under `out` and fill in `profile_path`.
fn store(report: &mut SolveReport, out: &Option<std::path::PathBuf>, stem: &str, meta: serde_json::Value) -> Result<()> {
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| InlsError::Io(format!("{}: {}", dir.display(), e)))?;
        let path = dir.join(format!("{}_profile.csv", stem));
        write(&path, &grid::profile_csv(&report.profile, stem, meta))?;
        report.profile_path = Some(path.display().to_string());
        write(&dir.join(format!("{}_report.json", stem)), &to_json(report))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Verification {
    #[serde(rename = "I", serialize_with = "ser17")]
    i: f64,
    #[serde(rename = "J", serialize_with = "ser17")]
    j: f64,
    #[serde(serialize_with = "ser17_opt")]
    rayleigh: Option<f64>,
    #[serde(serialize_with = "ser17")]
    phi: f64,
    #[serde(serialize_with = "ser17")]
    grad_norm: f64,
    #[serde(serialize_with = "ser17")]
    el_res: f64,
    #[serde(serialize_with = "ser17")]
    pohozaev_res: f64,
    #[serde(serialize_with = "ser17")]
    eigen_rel_res: f64,
}

#[derive(Serialize)]
struct Roots {
    #[serde(rename = "R1", serialize_with = "ser17")]
    r1: f64,
    #[serde(rename = "R2", serialize_with = "ser17")]
    r2: f64,
}

#[derive(Serialize)]
struct Thresholds {
    #[serde(serialize_with = "ser17")]
    c_star: f64,
    #[serde(serialize_with = "ser17")]
    tilde_s: f64,
    #[serde(serialize_with = "ser17")]
    tilde_level: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_roots: Option<Option<Roots>>,
}

#[derive(Serialize)]
struct Probe {
    #[serde(rename = "S", serialize_with = "ser17")]
    s: f64,
    #[serde(rename = "N")]
    n: u32,
    #[serde(serialize_with = "ser17")]
    eta: f64,
}

#[derive(Serialize)]
struct RegionSummary {
    rows: usize,
    path: String,
}

pub fn run(cmd: Command) -> Result<String> {
    match cmd {
        Command::Classify { params, eta, r, radial } => {
            let pr = params_of(&params)?;
            Ok(to_json(&regimes::classify_pair(&pr, WeightedPair::new(eta, r), radial)))
        }
        Command::RegionMap { params, eta_min, eta_max, eta_n, r_min, r_max, r_n, radial, out } => {
            let pr = params_of(&params)?;
            let rows = regimes::region_map(&pr, &linspace(eta_min, eta_max, eta_n), &linspace(r_min, r_max, r_n), radial)?;
            let csv = regimes::region_csv(&rows);
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir).map_err(|e| InlsError::Io(format!("{}: {}", dir.display(), e)))?;
                    let path = dir.join("region_map.csv");
                    write(&path, &csv)?;
                    Ok(to_json(&RegionSummary { rows: rows.len(), path: path.display().to_string() }))
                }
                None => Ok(csv.trim_end().to_string()),
            }
        }
        Command::Eigen { params, grid: ga, opts, init, out } => {
            let pr = params_of(&params)?;
            let g = grid_of(&ga, pr.n)?;
            let family = match init {
                InitKind::Gaussian => Family::gaussian(1.0),
                InitKind::Bump => Family::bump(1.0, 2.0),
            };
            let u0 = grid::sample_function(&g, family)?;
            let mut rep = solver::minimize_rayleigh(&g, &pr, &u0, &opts_of(&opts))?;
            let meta = serde_json::json!({ "lambda": rep.value, "init": family.name() });
            store(&mut rep, &out, "eigen", meta)?;
            Ok(to_json(&rep))
        }
        Command::Minimize { params, grid: ga, opts, terms, eta, r, lambda, out } => {
            let pr = params_of(&params)?;
            let g = grid_of(&ga, pr.n)?;
            let mut terms = parse_terms(&terms)?;
            match (eta, r) {
                (Some(eta), Some(r)) => terms.push(TermSpec::new(1.0, eta, r)),
                (None, None) => {}
                _ => return Err(InlsError::Parse("--eta and --r go together".into())),
            }
            let mut rep = solver::minimize_coercive(&g, &pr, &terms, lambda, &opts_of(&opts))?;
            let listed: Vec<String> = terms.iter().map(|t| format!("{}:{}:{}", t.c, t.eta, t.r)).collect();
            let meta = serde_json::json!({ "lambda": lambda, "terms": listed });
            store(&mut rep, &out, "minimize", meta)?;
            Ok(to_json(&rep))
        }
        Command::Verify { params, profile, terms, lambda } => {
            let pr = params_of(&params)?;
            let text = fs::read_to_string(&profile).map_err(|e| InlsError::Io(format!("{}: {}", profile.display(), e)))?;
            let (u, meta) = grid::parse_profile_csv(&text)?;
            if meta.n != pr.n {
                return Err(InlsError::Domain(format!("profile has N = {} but --N {}", meta.n, pr.n)));
            }
            let terms = parse_terms(&terms)?;
            Ok(to_json(&verify(&u, &pr, lambda, &terms)?))
        }
        Command::Thresholds { n, eta1, s, mu, s1, s2, eta2, b, q, p, eta, r, c, c1 } => {
            let c_star = regimes::ps_threshold(n, eta1, s.unwrap_or(s1))?;
            let tilde_s = regimes::tilde_s_root(mu, s1, s2, n, eta1, eta2)?;
            let nf = n as f64;
            let tilde_level = (2.0 - eta1) / (2.0 * (nf - eta1)) * tilde_s;
            let gamma_roots = match (b, q, p, eta, r) {
                (Some(b), Some(q), Some(p), Some(eta), Some(r)) => {
                    let pr = regimes::derive_params(n, b, q, p)?;
                    let roots = regimes::gamma_mu_roots(&pr, WeightedPair::new(eta, r), eta1, mu, c.unwrap_or(1.0), c1.unwrap_or(1.0))?;
                    Some(roots.map(|(r1, r2)| Roots { r1, r2 }))
                }
                (None, None, None, None, None) => None,
                _ => return Err(InlsError::Parse("gamma roots need --b --q --p --eta --r".into())),
            };
            Ok(to_json(&Thresholds { c_star, tilde_s, tilde_level, gamma_roots }))
        }
        Command::Probe { n, eta, grid: ga, opts } => {
            let g = grid_of(&ga, n)?;
            let s = solver::probe_best_constant(&g, n, eta, &opts_of(&opts))?;
            Ok(to_json(&Probe { s, n, eta }))
        }
    }
}

/// Residuals of `Phi = I - lambda J - sum c/r W` at `u`; the eigen term joins the
/// Pohozaev balance when `lambda != 0`.
fn verify(u: &RadialProfile, pr: &Params, lambda: f64, terms: &[TermSpec]) -> Result<Verification> {
    let rep = functionals::functional_report(u, pr, lambda, terms)?;
    let mut effective = terms.to_vec();
    if lambda != 0.0 {
        effective.push(TermSpec::new(lambda, pr.a, pr.p));
    }
    Ok(Verification {
        i: rep.i,
        j: rep.j,
        rayleigh: rep.rayleigh,
        phi: rep.phi,
        grad_norm: rep.grad_norm,
        el_res: rep.grad_norm,
        pohozaev_res: functionals::pohozaev_residual(u, pr, &effective)?,
        eigen_rel_res: functionals::eigen_relation_residual(u, pr, lambda),
    })
}
