//! Distribution functions of `u = λψ` over its superlevel sets `{u > t}`:
//! `μ(t) = |{u > t}|`, `m(t) = λ∫_{u>t}(α+u)^p`, `e(t) = ∫_{u>t}|∇u|²`.
//!
//! On the grid, `e` treats `u` as linear along each lattice link (boundary links end
//! at the exact crossing, where `u = 0`); the part of a link above `t` carries its
//! share of the link energy. Then `−de/dt` is the discrete flux through `{u = t}`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::domain::Link;
use crate::error::{Error, Result};
use crate::radial::RadialSolution;
use crate::solver::PlasmaSolution;
use crate::domain::Grid;

/// Top level is `θ(1 − LEVEL_MARGIN)` so that the last set is not empty by round-off.
pub const LEVEL_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct LevelSetProfile {
    pub lambda: f64,
    pub p: f64,
    pub alpha: f64,
    pub theta: f64,
    pub levels: Vec<f64>,
    pub mu: Vec<f64>,
    pub m: Vec<f64>,
    pub e: Vec<f64>,
}

fn levels(theta: f64, n_levels: usize) -> Result<Vec<f64>> {
    if n_levels < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 levels, got {n_levels}")));
    }
    let top = theta * (1.0 - LEVEL_MARGIN);
    Ok((0..n_levels).map(|k| top * k as f64 / (n_levels - 1) as f64).collect())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument("level-set profile needs lambda > 0; at lambda = 0 it is trivial".into()))
    }
}

/// Profile of a grid solution; set membership by node value, integrals with the cell
/// weights.
pub fn profile(grid: &Grid, sol: &PlasmaSolution, n_levels: usize) -> Result<LevelSetProfile> {
    check_lambda(sol.lambda)?;
    if sol.psi.len() != grid.len() {
        return Err(Error::InvalidArgument("solution lives on another grid".into()));
    }
    let u = sol.u();
    let w = grid.weights();
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by(|&a, &b| u[b].total_cmp(&u[a]));
    // cumulative sums over nodes by decreasing u
    let mut cum = Vec::with_capacity(order.len() + 1);
    let mut acc = [0.0; 2];
    cum.push(acc);
    for &k in &order {
        acc[0] += w[k];
        acc[1] += w[k] * (sol.alpha + u[k]).max(0.0).powf(sol.p);
        cum.push(acc);
    }
    let links = link_segments(grid, &u);
    let levels = levels(sol.theta, n_levels)?;
    let mut out = LevelSetProfile {
        lambda: sol.lambda,
        p: sol.p,
        alpha: sol.alpha,
        theta: sol.theta,
        mu: Vec::with_capacity(n_levels),
        m: Vec::with_capacity(n_levels),
        e: Vec::with_capacity(n_levels),
        levels,
    };
    for &t in &out.levels {
        let count = order.partition_point(|&k| u[k] > t);
        let c = cum[count];
        out.mu.push(c[0]);
        out.m.push(sol.lambda * c[1]);
        out.e.push(links.iter().map(|&(lo, hi, c)| c * (hi - lo.max(t)).max(0.0)).sum());
    }
    Ok(out)
}

/// `(low, high, slope)` per link: `u` runs from `low` to `high` and the link energy is
/// `slope · (high − low)`.
fn link_segments(grid: &Grid, u: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(2 * u.len());
    for (k, node) in grid.nodes().iter().enumerate() {
        for (d, link) in node.links.iter().enumerate() {
            match *link {
                // east and north only, so each interior link is counted once
                Link::Node(j) if d == 0 || d == 2 => {
                    let (lo, hi) = if u[k] < u[j] { (u[k], u[j]) } else { (u[j], u[k]) };
                    out.push((lo, hi, hi - lo));
                }
                Link::Node(_) => {}
                Link::Boundary(theta) => {
                    let (lo, hi) = if u[k] < 0.0 { (u[k], 0.0) } else { (0.0, u[k]) };
                    out.push((lo, hi, (hi - lo) / theta));
                }
            }
        }
    }
    out
}

/// Profile of a radial solution from its ODE integrals: `μ = πr²`, `m = 2πλ∫w^p r`,
/// `e = 2π∫w'² r` up to the level radius `r(t)`.
pub fn radial_profile(sol: &RadialSolution, n_levels: usize) -> Result<LevelSetProfile> {
    check_lambda(sol.lambda)?;
    let theta = sol.theta();
    let levels = levels(theta, n_levels)?;
    let mut out = LevelSetProfile {
        lambda: sol.lambda,
        p: sol.p,
        alpha: sol.alpha,
        theta,
        mu: Vec::with_capacity(n_levels),
        m: Vec::with_capacity(n_levels),
        e: Vec::with_capacity(n_levels),
        levels,
    };
    for &t in &out.levels {
        let r = if t == 0.0 { sol.radius } else { sol.radius_at_level(t).ok_or_else(|| Error::Shooting(format!("no level radius for t = {t}")))? };
        let s = sol.state_at(r).ok_or_else(|| Error::Shooting("radial profile unavailable".into()))?;
        out.mu.push(PI * r * r);
        out.m.push(2.0 * PI * sol.lambda * s[2]);
        out.e.push(2.0 * PI * s[4]);
    }
    Ok(out)
}

/// The two sides of the level inequality `((α+t)m + e)/(p+1) ≤ m²/8π + λ(α+t)^{p+1}μ/(p+1)`
/// at every level.
pub fn level_sides(profile: &LevelSetProfile, alpha: f64, lambda: f64, p: f64) -> Vec<(f64, f64)> {
    (0..profile.levels.len())
        .map(|k| {
            let a = alpha + profile.levels[k];
            let (mu, m, e) = (profile.mu[k], profile.m[k], profile.e[k]);
            ((a * m + e) / (p + 1.0), m * m / (8.0 * PI) + lambda * a.powf(p + 1.0) * mu / (p + 1.0))
        })
        .collect()
}

/// `−m²/8π − λ(α+t)^{p+1}μ/(p+1) + (α+t)m/(p+1) + e/(p+1)` at every level.
pub fn level_residuals(profile: &LevelSetProfile, alpha: f64, lambda: f64, p: f64) -> Vec<f64> {
    level_sides(profile, alpha, lambda, p).into_iter().map(|(l, r)| l - r).collect()
}

/// Largest value of [`level_residuals`]; should not exceed the discretization slack.
pub fn check_integrated_inequality(profile: &LevelSetProfile, alpha: f64, lambda: f64, p: f64) -> f64 {
    level_residuals(profile, alpha, lambda, p).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Worst gap between `e(t_0) − e(t_k)` and the trapezoid integral of `m` over
/// `[t_0, t_k]`, relative to `e(t_0)`.
pub fn diffem_defect(profile: &LevelSetProfile) -> f64 {
    let t = &profile.levels;
    let e0 = profile.e[0];
    let mut integral = 0.0;
    let mut worst = 0.0f64;
    for k in 1..t.len() {
        integral += 0.5 * (profile.m[k - 1] + profile.m[k]) * (t[k] - t[k - 1]);
        let drop = e0 - profile.e[k];
        worst = worst.max((drop - integral).abs() / e0);
    }
    worst
}

/// Rows `(t, mu, m, e, residual)`.
pub fn profile_rows(profile: &LevelSetProfile) -> Vec<[f64; 5]> {
    let res = level_residuals(profile, profile.alpha, profile.lambda, profile.p);
    (0..profile.levels.len())
        .map(|k| [profile.levels[k], profile.mu[k], profile.m[k], profile.e[k], res[k]])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Domain, DomainSpec};
    use crate::elliptic::GreenOperator;
    use crate::radial::{solve_disk_radial, RadialOptions};
    use crate::solver::{solve_plm, SolveOptions};

    #[test]
    fn radial_boundary_row_and_equality() {
        let sol = solve_disk_radial(1.0, 2.0, &RadialOptions::default()).unwrap();
        let prof = radial_profile(&sol, 50).unwrap();
        assert!((prof.mu[0] - 1.0).abs() < 1e-12);
        assert!((prof.m[0] - 1.0).abs() < 1e-8);
        assert!((prof.e[0] - 2.0 * sol.energy).abs() < 1e-8);
        let worst = check_integrated_inequality(&prof, sol.alpha, 1.0, 2.0);
        assert!(worst.abs() < 1e-6, "{worst}");
        assert!(diffem_defect(&prof) < 1e-3);
    }

    #[test]
    fn grid_profile_is_monotone() {
        let d = Domain::normalize(&DomainSpec::square(48)).unwrap();
        let g = GreenOperator::new(&d).unwrap();
        let sol = solve_plm(&g, 2.0, 2.0, &SolveOptions::default()).unwrap();
        let prof = profile(d.grid(), &sol, 60).unwrap();
        for v in [&prof.mu, &prof.m, &prof.e] {
            assert!(v.windows(2).all(|w| w[1] <= w[0]));
        }
        assert!((prof.mu[0] - 1.0).abs() < 1e-10);
        assert!((prof.m[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn lambda_zero_is_rejected() {
        let d = Domain::normalize(&DomainSpec::disk(24)).unwrap();
        let g = GreenOperator::new(&d).unwrap();
        let sol = solve_plm(&g, 0.0, 2.0, &SolveOptions::default()).unwrap();
        assert!(profile(d.grid(), &sol, 10).is_err());
    }
}
