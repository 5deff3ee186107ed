//! Best Sobolev constants `Λ(Ω, s) = inf ∫|∇w|² / (∫|w|^s)^{2/s}` and the explicit
//! positivity threshold `λ_*`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::elliptic::{torsion, GreenOperator, ScalarField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct SobolevOptions {
    /// Relative change of the quotient that ends the iteration.
    pub tol: f64,
    /// Relative sup-norm change of the iterate that must also be reached.
    pub field_tol: f64,
    pub max_iter: usize,
}

impl Default for SobolevOptions {
    fn default() -> Self {
        Self { tol: 1e-12, field_tol: 1e-9, max_iter: 10_000 }
    }
}

#[derive(Debug, Clone)]
pub struct SobolevResult {
    pub s: f64,
    /// `Λ(Ω, s)`.
    pub lambda: f64,
    /// Minimizer, normalized to `∫w^s = 1`.
    pub w: ScalarField,
    /// `|R_s(w) − Λ| / Λ` for the returned `w`.
    pub rayleigh_residual: f64,
    pub iterations: usize,
    /// Largest relative increase of the quotient between steps (zero when monotone).
    pub max_increase: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SobolevRecord {
    pub s: f64,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    pub lambda_star: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl From<&SobolevResult> for SobolevRecord {
    fn from(r: &SobolevResult) -> Self {
        Self {
            s: r.s,
            lambda: r.lambda,
            lambda_star: lambda_star_from_constant(r.lambda, r.s - 1.0),
            iterations: r.iterations,
            residual: r.rayleigh_residual,
        }
    }
}

fn lp_norm(g: &GreenOperator, v: &[f64], s: f64) -> f64 {
    let vs: Vec<f64> = v.iter().map(|x| x.abs().powf(s)).collect();
    g.grid().integrate(&vs).powf(1.0 / s)
}

/// `R_s(v)` for `v = G[f]`, with the numerator `⟨v, f⟩ = ∫|∇v|²`.
fn quotient(g: &GreenOperator, v: &[f64], f: &[f64], s: f64) -> f64 {
    g.grid().inner(v, f) / lp_norm(g, v, s).powi(2)
}

/// Nonlinear inverse iteration `w ← G[w^{s−1}] / ‖G[w^{s−1}]‖_s` from the torsion
/// function.
pub fn best_constant(g: &GreenOperator, s: f64, opts: &SobolevOptions) -> Result<SobolevResult> {
    if !(s >= 2.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("exponent s must be at least 2, got {s}")));
    }
    let mut w = torsion(g)?;
    let norm = lp_norm(g, &w, s);
    w.iter_mut().for_each(|x| *x /= norm);
    let mut prev = f64::INFINITY;
    let mut history = Vec::new();
    let mut max_increase = 0.0f64;
    for it in 1..=opts.max_iter {
        let f: Vec<f64> = w.iter().map(|x| x.max(0.0).powf(s - 1.0)).collect();
        let v = g.apply(&f)?;
        let r = quotient(g, &v, &f, s);
        if prev.is_finite() {
            max_increase = max_increase.max((r - prev) / prev);
        }
        let norm = lp_norm(g, &v, s);
        let mut change = 0.0f64;
        let mut size = 0.0f64;
        for (a, b) in w.iter_mut().zip(&v) {
            let nb = b / norm;
            change = change.max((nb - *a).abs());
            size = size.max(nb.abs());
            *a = nb;
        }
        history.push(r);
        if history.len() > 8 {
            history.remove(0);
        }
        if (prev - r).abs() <= opts.tol * r && change <= opts.field_tol * size {
            let f: Vec<f64> = w.iter().map(|x| x.max(0.0).powf(s - 1.0)).collect();
            let v = g.apply(&f)?;
            let check = quotient(g, &v, &f, s);
            // R_s of w itself: ∫|∇w|² = ⟨w, −Δ_h w⟩ with −Δ_h w = G⁻¹ applied through v
            let rw = g.grid().inner(&w, &g.neg_laplacian(&w)) / lp_norm(g, &w, s).powi(2);
            return Ok(SobolevResult {
                s,
                lambda: rw,
                rayleigh_residual: ((check - rw) / rw).abs(),
                w,
                iterations: it,
                max_increase,
            });
        }
        prev = r;
    }
    Err(Error::IterationCap { what: "sobolev inverse iteration", iterations: opts.max_iter, residual: 0.0, history })
}

/// `λ_* = ((8π/(p+1))^{p−1} Λ^{p+1})^{1/(2p)}` with `Λ = Λ(Ω, p+1)`.
pub fn lambda_star_from_constant(big_lambda: f64, p: f64) -> f64 {
    ((8.0 * PI / (p + 1.0)).powf(p - 1.0) * big_lambda.powf(p + 1.0)).powf(1.0 / (2.0 * p))
}

/// `λ_*(Ω, p)` from the grid Sobolev constant `Λ(Ω, p+1)`.
pub fn lambda_star(g: &GreenOperator, p: f64, opts: &SobolevOptions) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("p must be at least 1, got {p}")));
    }
    let sob = best_constant(g, p + 1.0, opts)?;
    Ok(lambda_star_from_constant(sob.lambda, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Domain, DomainSpec};
    use crate::radial::{disk_sobolev_constant, RadialOptions};

    fn op(spec: DomainSpec) -> GreenOperator {
        GreenOperator::new(&Domain::normalize(&spec).unwrap()).unwrap()
    }

    #[test]
    fn square_first_eigenvalue() {
        let g = op(DomainSpec::square(64));
        let r = best_constant(&g, 2.0, &SobolevOptions::default()).unwrap();
        assert!((r.lambda / (2.0 * PI * PI) - 1.0).abs() < 1e-2, "{}", r.lambda);
        assert!(r.max_increase <= 1e-12);
        assert!(r.rayleigh_residual < 1e-6);
        assert!(r.w.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn disk_cubic_constant_matches_radial() {
        let g = op(DomainSpec::disk(64));
        let r = best_constant(&g, 3.0, &SobolevOptions::default()).unwrap();
        let exact = disk_sobolev_constant(3.0, &RadialOptions::default()).unwrap();
        assert!((r.lambda / exact - 1.0).abs() < 1e-2, "{} vs {exact}", r.lambda);
        assert!(r.max_increase <= 1e-12, "{}", r.max_increase);
        let ws: Vec<f64> = r.w.iter().map(|x| x.powi(3)).collect();
        assert!((g.grid().integrate(&ws) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponents_collapse_at_p_one() {
        assert_eq!(lambda_star_from_constant(17.5, 1.0), 17.5);
    }
}
