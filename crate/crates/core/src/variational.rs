//! Free energy `J_λ(ρ) = p/(p+1)∫ρ^{1+1/p} − λ/2 ∫ρ G[ρ]` over unit-mass densities,
//! its minimization by spectral projected gradient, and the positivity threshold.

use serde::Serialize;

use crate::elliptic::{GreenOperator, ScalarField};
use crate::error::{Error, Result};

/// Nonnegative grid density with unit mass.
#[derive(Debug, Clone)]
pub struct Density {
    values: ScalarField,
}

impl Density {
    pub const MASS_TOL: f64 = 1e-10;

    pub fn new(g: &GreenOperator, values: ScalarField) -> Result<Self> {
        if values.len() != g.len() {
            return Err(Error::InvalidArgument(format!(
                "density has {} values, grid has {} nodes",
                values.len(),
                g.len()
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument("density must be finite and nonnegative".into()));
        }
        let mass = g.grid().integrate(&values);
        if (mass - 1.0).abs() > Self::MASS_TOL {
            return Err(Error::InvalidArgument(format!("density mass is {mass}, expected 1")));
        }
        Ok(Self { values })
    }

    pub fn uniform(g: &GreenOperator) -> Self {
        let area: f64 = g.grid().weights().iter().sum();
        Self { values: vec![1.0 / area; g.len()] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> ScalarField {
        self.values
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VariationalOptions {
    /// Bound on the W-norm of the projected gradient step.
    pub tol: f64,
    pub max_iter: usize,
    /// Density below which a node is treated as outside the support.
    pub support: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
}

impl Default for VariationalOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 100_000, support: 1e-12, armijo: 1e-4 }
    }
}

#[derive(Debug, Clone)]
pub struct VariationalResult {
    pub lambda: f64,
    pub p: f64,
    pub density: Density,
    /// `G[ρ]`.
    pub potential: ScalarField,
    pub alpha: f64,
    pub objective: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationalHeader {
    pub lambda: f64,
    pub p: f64,
    pub alpha: f64,
    #[serde(rename = "J")]
    pub objective: f64,
    pub residual: f64,
}

impl VariationalResult {
    pub fn header(&self) -> VariationalHeader {
        VariationalHeader {
            lambda: self.lambda,
            p: self.p,
            alpha: self.alpha,
            objective: self.objective,
            residual: self.residual,
        }
    }
}

fn energy_parts(g: &GreenOperator, rho: &[f64], pot: &[f64], lambda: f64, p: f64) -> f64 {
    let w = g.grid().weights();
    let e = (p + 1.0) / p;
    let mut first = 0.0;
    let mut second = 0.0;
    for k in 0..rho.len() {
        first += w[k] * rho[k].powf(e);
        second += w[k] * rho[k] * pot[k];
    }
    p / (p + 1.0) * first - 0.5 * lambda * second
}

/// `J_λ(ρ)`.
pub fn free_energy(g: &GreenOperator, rho: &Density, lambda: f64, p: f64) -> Result<f64> {
    let pot = g.apply(rho.values())?;
    Ok(energy_parts(g, rho.values(), &pot, lambda, p))
}

/// Minimizer of `Σ w_i d_i (x_i − y_i)²` over `{x ≥ 0, Σ w x = 1}`:
/// `x_i = (y_i − τ/d_i)₊` with `τ` fixed by the mass.
fn project(w: &[f64], y: &[f64], d: &[f64]) -> ScalarField {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| (y[b] * d[b]).total_cmp(&(y[a] * d[a])));
    let (mut swb, mut swy) = (0.0, 0.0);
    let mut tau = 0.0;
    for (k, &i) in order.iter().enumerate() {
        swb += w[i] / d[i];
        swy += w[i] * y[i];
        let t = (swy - 1.0) / swb;
        let next = order.get(k + 1).map(|&j| y[j] * d[j]);
        if next.is_none_or(|c| c <= t) {
            tau = t;
            break;
        }
    }
    y.iter().zip(d).map(|(v, di)| (v - tau / di).max(0.0)).collect()
}

/// Diagonal of the Hessian of the convex part, `ρ^{1/p−1}/p`, floored away from `ρ = 0`
/// so that empty nodes can re-enter the support.
fn curvature(rho: &[f64], p: f64) -> Vec<f64> {
    rho.iter().map(|r| r.max(CURVATURE_FLOOR).powf(1.0 / p - 1.0) / p).collect()
}

const CURVATURE_FLOOR: f64 = 1e-10;

fn gradient(rho: &[f64], pot: &[f64], lambda: f64, p: f64) -> ScalarField {
    rho.iter().zip(pot).map(|(r, u)| r.powf(1.0 / p) - lambda * u).collect()
}

/// Mass-weighted average of the stationarity expression over the support.
fn multiplier(w: &[f64], rho: &[f64], grad: &[f64], support: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..rho.len() {
        if rho[k] > support {
            num += w[k] * rho[k] * grad[k];
            den += w[k] * rho[k];
        }
    }
    num / den
}

fn w_norm(w: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(v).map(|(a, b)| a * b * b).sum::<f64>().sqrt()
}

/// Minimizes `J_λ` starting from the uniform density.
pub fn minimize_j(g: &GreenOperator, lambda: f64, p: f64, opts: &VariationalOptions) -> Result<VariationalResult> {
    minimize_j_from(g, lambda, p, Density::uniform(g), opts)
}

/// Projected gradient with monotone Armijo backtracking. In the W inner product the
/// gradient of `J_λ` is `ρ^{1/p} − λG[ρ]`; steps are scaled by the inverse curvature of
/// the convex part and by a Barzilai–Borwein factor.
pub fn minimize_j_from(
    g: &GreenOperator,
    lambda: f64,
    p: f64,
    start: Density,
    opts: &VariationalOptions,
) -> Result<VariationalResult> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p must be >= 1, got {p}")));
    }
    if start.values.len() != g.len() {
        return Err(Error::InvalidArgument("start density is on another grid".into()));
    }
    let w = g.grid().weights();
    let n = g.len();
    let mut rho = start.into_values();
    let mut pot = if lambda == 0.0 { vec![0.0; n] } else { g.apply(&rho)? };
    let mut j = energy_parts(g, &rho, &pot, lambda, p);
    let mut grad = gradient(&rho, &pot, lambda, p);
    let ones = vec![1.0; n];
    let mut step = 1.0;
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        // unit-step Euclidean projected gradient as the stationarity measure
        let y1: Vec<f64> = rho.iter().zip(&grad).map(|(r, d)| r - d).collect();
        let r1: Vec<f64> = project(w, &y1, &ones).iter().zip(&rho).map(|(a, b)| a - b).collect();
        residual = w_norm(w, &r1);
        history.push(residual);
        if history.len() > 10 {
            history.remove(0);
        }
        if residual <= opts.tol {
            break;
        }
        iterations += 1;
        let metric = curvature(&rho, p);
        let y: Vec<f64> = (0..n).map(|k| rho[k] - step * grad[k] / metric[k]).collect();
        let d: Vec<f64> = project(w, &y, &metric).iter().zip(&rho).map(|(a, b)| a - b).collect();
        let slope: f64 = (0..n).map(|k| w[k] * grad[k] * d[k]).sum();
        let pd = if lambda == 0.0 { vec![0.0; n] } else { g.apply(&d)? };
        let mut t = 1.0;
        let (trial, trial_pot, trial_j) = loop {
            let r: Vec<f64> = rho.iter().zip(&d).map(|(a, b)| (a + t * b).max(0.0)).collect();
            let u: Vec<f64> = pot.iter().zip(&pd).map(|(a, b)| a + t * b).collect();
            let jt = energy_parts(g, &r, &u, lambda, p);
            if jt <= j + opts.armijo * t * slope || t < 1e-12 {
                break (r, u, jt);
            }
            t *= 0.5;
        };
        if trial_j > j {
            // no descent left at round-off level
            break;
        }
        let new_grad = gradient(&trial, &trial_pot, lambda, p);
        let (mut ss, mut sy) = (0.0, 0.0);
        for k in 0..n {
            let s = trial[k] - rho[k];
            ss += w[k] * metric[k] * s * s;
            sy += w[k] * s * (new_grad[k] - grad[k]);
        }
        step = if sy > 0.0 { (ss / sy).clamp(1e-6, 1e6) } else { 1e6 };
        rho = trial;
        pot = trial_pot;
        j = trial_j;
        grad = new_grad;
    }
    if residual > opts.tol {
        return Err(Error::IterationCap { what: "free energy minimization", iterations, residual, history });
    }
    let alpha = multiplier(w, &rho, &grad, opts.support);
    let density = Density { values: rho };
    let objective = free_energy(g, &density, lambda, p)?;
    Ok(VariationalResult { lambda, p, density, potential: pot, alpha, objective, residual, iterations })
}

/// Bisection on the sign of the minimizer's multiplier over `[lo, hi]`, warm-started
/// from the minimizer at the nearer bracket end.
pub fn positivity_threshold(
    g: &GreenOperator,
    p: f64,
    bracket: (f64, f64),
    tol: f64,
    opts: &VariationalOptions,
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(0.0 <= lo && lo < hi) {
        return Err(Error::InvalidArgument(format!("bad bracket [{lo}, {hi}]")));
    }
    let at_lo = minimize_j(g, lo, p, opts)?;
    let at_hi = minimize_j(g, hi, p, opts)?;
    if !(at_lo.alpha > 0.0 && at_hi.alpha < 0.0) {
        return Err(Error::Bracket { lo, hi });
    }
    let mut rho_lo = at_lo.density;
    let mut rho_hi = at_hi.density;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let start = if mid - lo <= hi - mid { rho_lo.clone() } else { rho_hi.clone() };
        let r = minimize_j_from(g, mid, p, start, opts)?;
        if r.alpha > 0.0 {
            lo = mid;
            rho_lo = r.density;
        } else {
            hi = mid;
            rho_hi = r.density;
        }
    }
    Ok(0.5 * (lo + hi))
}
