//! High-accuracy radial solutions on the unit-area disk.
//!
//! With `w = α + λψ` the problem reads `−(r w')'/r = λ w₊^p`, `w'(0) = 0`, `w(R) = α`,
//! `2π∫₀^R w₊^p r dr = 1`. We shoot on the center value `c = w(0)`: `α = w(R)` and the
//! mass both follow from one integration, so the boundary shooting and the root-find
//! on `α` collapse into a single scalar search in `c`.

use std::f64::consts::PI;

use crate::domain::{Domain, Grid};
use crate::error::{Error, Result};
use crate::numerics::brent;
use crate::ode::{integrate, Tolerances, Trajectory};

/// State: `[w, w', ∫w₊^p r, ∫w₊^{p+1} r, ∫w'² r]`.
type State = [f64; 5];

#[derive(Debug, Clone, Copy)]
pub struct RadialOptions {
    pub rtol: f64,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self { rtol: 1e-10 }
    }
}

impl RadialOptions {
    fn tolerances(&self) -> Tolerances {
        Tolerances { rtol: self.rtol, atol: self.rtol * 1e-3, max_steps: 500_000 }
    }
}

#[derive(Debug, Clone)]
enum Profile {
    /// `λ = 0`: `ψ = (R² − r²)/4`.
    Torsion,
    Shot(Trajectory<5>),
}

/// A radial solution `(α, ψ)` with the integrals needed by the estimates.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub lambda: f64,
    pub p: f64,
    pub alpha: f64,
    /// `w(0) = α + θ`.
    pub center: f64,
    pub radius: f64,
    /// `2π∫ w₊^p r dr`.
    pub mass: f64,
    /// `½∫|∇ψ|²` from the gradient integral.
    pub energy: f64,
    /// `½∫ψ(α+λψ)^p`, from the source integral.
    pub energy_ibp: f64,
    profile: Profile,
}

fn rhs(lambda: f64, p: f64) -> impl Fn(f64, &State) -> State {
    move |r, y| {
        let wp = y[0].max(0.0).powf(p);
        [
            y[1],
            -y[1] / r - lambda * wp,
            wp * r,
            wp * y[0].max(0.0) * r,
            y[1] * y[1] * r,
        ]
    }
}

fn series_start(lambda: f64, p: f64, c: f64, r0: f64) -> State {
    let cp = c.powf(p);
    let b = lambda * lambda * p * c.powf(2.0 * p - 1.0);
    [
        c - lambda * cp * r0 * r0 / 4.0 + b * r0.powi(4) / 64.0,
        -lambda * cp * r0 / 2.0 + b * r0.powi(3) / 16.0,
        cp * r0 * r0 / 2.0,
        cp * c * r0 * r0 / 2.0,
        lambda * lambda * cp * cp * r0.powi(4) / 16.0,
    ]
}

struct Shot {
    alpha: f64,
    mass: f64,
    traj: Trajectory<5>,
}

fn shoot(lambda: f64, p: f64, c: f64, radius: f64, opts: &RadialOptions) -> Result<Shot> {
    let r0 = 1e-6 * radius;
    let traj = integrate(rhs(lambda, p), r0, series_start(lambda, p, c, r0), radius, opts.tolerances())
        .map_err(|e| Error::Shooting(format!("integration from center value {c} failed: {e}")))?;
    let end = traj.last();
    Ok(Shot { alpha: end[0], mass: 2.0 * PI * end[2], traj })
}

/// Tolerance below zero still accepted as `α = 0`.
const ALPHA_FLOOR: f64 = -1e-9;

impl RadialSolution {
    fn from_shot(lambda: f64, p: f64, radius: f64, shot: Shot) -> Self {
        let end = shot.traj.last();
        let alpha = shot.alpha;
        Self {
            lambda,
            p,
            alpha,
            center: shot.traj.y[0][0],
            radius,
            mass: shot.mass,
            energy: PI * end[4] / (lambda * lambda),
            energy_ibp: PI / lambda * (end[3] - alpha * end[2]),
            profile: Profile::Shot(shot.traj),
        }
    }

    fn torsion(p: f64, radius: f64) -> Self {
        Self {
            lambda: 0.0,
            p,
            alpha: 1.0,
            center: 1.0,
            radius,
            mass: PI * radius * radius,
            energy: PI * radius.powi(4) / 16.0,
            energy_ibp: PI * radius.powi(4) / 16.0,
            profile: Profile::Torsion,
        }
    }

    /// `θ = max u = λ‖ψ‖∞`.
    pub fn theta(&self) -> f64 {
        match self.profile {
            Profile::Torsion => 0.0,
            Profile::Shot(_) => self.center - self.alpha,
        }
    }

    /// `‖ψ‖∞ = ψ(0)`.
    pub fn psi_max(&self) -> f64 {
        self.psi(0.0)
    }

    pub fn psi(&self, r: f64) -> f64 {
        match &self.profile {
            Profile::Torsion => 0.25 * (self.radius * self.radius - r * r).max(0.0),
            Profile::Shot(traj) => {
                if r <= traj.t[0] {
                    (self.center - self.alpha) / self.lambda
                } else {
                    (traj.eval(r.min(self.radius))[0] - self.alpha) / self.lambda
                }
            }
        }
    }

    /// `|∫(α+λψ)^p − 1|`.
    pub fn mass_residual(&self) -> f64 {
        (self.mass - 1.0).abs()
    }

    /// ODE state `[w, w', ∫w^p r, ∫w^{p+1} r, ∫w'² r]` at radius `r`; `None` at `λ = 0`.
    pub fn state_at(&self, r: f64) -> Option<[f64; 5]> {
        match &self.profile {
            Profile::Torsion => None,
            Profile::Shot(traj) => Some(if r <= traj.t[0] { series_at_zero(self) } else { traj.eval(r) }),
        }
    }

    /// Radius where `u = λψ` drops to `t`, for `0 ≤ t < θ`.
    pub fn radius_at_level(&self, t: f64) -> Option<f64> {
        if !matches!(self.profile, Profile::Shot(_)) || t < 0.0 || t >= self.theta() {
            return None;
        }
        let target = self.alpha + t;
        let (mut lo, mut hi) = (0.0, self.radius);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.state_at(mid)?[0] > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * self.radius {
                break;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// `ψ` sampled at the nodes of a grid centered on the disk.
    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        let o = grid.origin();
        grid.nodes()
            .iter()
            .map(|n| self.psi((n.pos[0] - o[0]).hypot(n.pos[1] - o[1])))
            .collect()
    }
}

fn series_at_zero(sol: &RadialSolution) -> [f64; 5] {
    [sol.center, 0.0, 0.0, 0.0, 0.0]
}

/// Solves the problem on the unit-area disk.
pub fn solve_disk_radial(lambda: f64, p: f64, opts: &RadialOptions) -> Result<RadialSolution> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be non-negative, got {lambda}")));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p must be at least 1, got {p}")));
    }
    let radius = Domain::disk_radius();
    if lambda == 0.0 {
        return Ok(RadialSolution::torsion(p, radius));
    }
    let none = || Error::NoNonnegativeSolution { lambda, p };
    let first = shoot(lambda, p, 1.0, radius, opts)?;
    if first.alpha < ALPHA_FLOOR {
        // α(c) is non-increasing in c and the mass never exceeds c^p, so no c ≥ 1 helps
        return Err(none());
    }
    if p == 1.0 {
        // linear: w scales with c
        let c = 1.0 / first.mass;
        let shot = shoot(lambda, p, c, radius, opts)?;
        return Ok(RadialSolution::from_shot(lambda, p, radius, shot));
    }
    let (mut lo, mut hi) = (1.0, 2.0);
    let mut overshoot = false;
    for _ in 0..200 {
        let s = shoot(lambda, p, hi, radius, opts)?;
        if s.alpha < 0.0 {
            overshoot = true;
            break;
        }
        if s.mass >= 1.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    let xtol = 1e-15;
    if overshoot {
        let c0 = brent(|c| Ok(shoot(lambda, p, c, radius, opts)?.alpha), lo, hi, xtol * hi, 200)?;
        let s0 = shoot(lambda, p, c0, radius, opts)?;
        if s0.mass < 1.0 - 1e-9 {
            return Err(none());
        }
        if s0.mass <= 1.0 {
            return Ok(RadialSolution::from_shot(lambda, p, radius, s0));
        }
        hi = c0;
    }
    let c = brent(|c| Ok(shoot(lambda, p, c, radius, opts)?.mass - 1.0), lo, hi, xtol * hi, 200)?;
    let shot = shoot(lambda, p, c, radius, opts)?;
    if shot.alpha < ALPHA_FLOOR {
        return Err(none());
    }
    Ok(RadialSolution::from_shot(lambda, p, radius, shot))
}

/// Lane–Emden data for `y'' + y'/x + y₊^p = 0`, `y(0) = 1`, up to its first zero.
#[derive(Debug, Clone, Copy)]
pub struct LaneEmden {
    pub p: f64,
    /// First zero `ξ₁`.
    pub xi1: f64,
    /// `y'(ξ₁)`.
    pub slope: f64,
    /// `∫₀^{ξ₁} y^p x dx`.
    pub source: f64,
    /// `∫₀^{ξ₁} y^{p+1} x dx`.
    pub power: f64,
    /// `∫₀^{ξ₁} y'² x dx`.
    pub dirichlet: f64,
}

pub fn lane_emden(p: f64, opts: &RadialOptions) -> Result<LaneEmden> {
    let tol = Tolerances { rtol: opts.rtol.min(1e-12), atol: 1e-15, max_steps: 500_000 };
    let x0 = 1e-7;
    let y0 = series_start(1.0, p, 1.0, x0);
    let mut x_end = 4.0;
    let traj = loop {
        let t = integrate(rhs(1.0, p), x0, y0, x_end, tol)?;
        if t.last()[0] < 0.0 {
            break t;
        }
        x_end *= 2.0;
        if x_end > 1e4 {
            return Err(Error::Shooting(format!("Lane-Emden profile for p = {p} never vanishes")));
        }
    };
    let i = traj.y.iter().position(|y| y[0] < 0.0).expect("sign change present");
    let xi_guess = brent(|x| Ok(traj.eval(x)[0]), traj.t[i - 1], traj.t[i], 1e-15, 200)?;
    // re-integrate exactly to the zero so the integrals carry no interpolation error,
    // then polish the endpoint with one Newton step
    let run = |x: f64| integrate(rhs(1.0, p), x0, y0, x, tol).map(|t| t.last());
    let end = run(xi_guess)?;
    let xi1 = xi_guess - end[0] / end[1];
    let end = run(xi1)?;
    Ok(LaneEmden { p, xi1, slope: end[1], source: end[2], power: end[3], dirichlet: end[4] })
}

/// The disk solution with `α = 0`, built by rescaling the Lane–Emden profile; returns
/// its `λ` (the positivity threshold of the disk) and the solution itself.
pub fn alpha_zero_disk(p: f64, opts: &RadialOptions) -> Result<(f64, RadialSolution)> {
    let le = lane_emden(p, opts)?;
    let radius = Domain::disk_radius();
    let k = le.xi1 / radius;
    // unit mass: 2π c^p ξ₁|y'(ξ₁)| / k² = 1
    let c = (k * k / (2.0 * PI * le.xi1 * le.slope.abs())).powf(1.0 / p);
    let lambda = k * k * c.powf(1.0 - p);
    let shot = shoot(lambda, p, c, radius, opts)?;
    Ok((lambda, RadialSolution::from_shot(lambda, p, radius, shot)))
}

/// `Λ(𝔻, s)`: the Rayleigh quotient `∫|∇w|²/(∫w^s)^{2/s}` of the radial ground state.
pub fn disk_sobolev_constant(s: f64, opts: &RadialOptions) -> Result<f64> {
    if !(s >= 2.0) {
        return Err(Error::InvalidArgument(format!("exponent s must be at least 2, got {s}")));
    }
    let le = lane_emden(s - 1.0, opts)?;
    let radius = Domain::disk_radius();
    let scale = radius / le.xi1;
    Ok(2.0 * PI * le.dirichlet / (2.0 * PI * scale * scale * le.power).powf(2.0 / s))
}

#[cfg(test)]
mod tests {
    use super::*;

    const J0: f64 = 2.404_825_557_695_773;

    #[test]
    fn torsion_closed_form() {
        let s = solve_disk_radial(0.0, 2.0, &RadialOptions::default()).unwrap();
        assert_eq!(s.alpha, 1.0);
        assert!((s.energy - 1.0 / (16.0 * PI)).abs() < 1e-15);
        assert!((s.psi_max() - 1.0 / (4.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn bessel_eigenvalue_gives_zero_alpha() {
        let s = solve_disk_radial(PI * J0 * J0, 1.0, &RadialOptions::default()).unwrap();
        assert!(s.alpha.abs() < 1e-6, "{}", s.alpha);
        let le = lane_emden(1.0, &RadialOptions::default()).unwrap();
        assert!((le.xi1 - J0).abs() < 1e-10, "{}", le.xi1);
        let (lam, _) = alpha_zero_disk(1.0, &RadialOptions::default()).unwrap();
        assert!((lam - PI * J0 * J0).abs() < 1e-8);
        assert!(matches!(
            solve_disk_radial(PI * J0 * J0 * 1.01, 1.0, &RadialOptions::default()),
            Err(Error::NoNonnegativeSolution { .. })
        ));
    }

    #[test]
    fn mass_and_energy_routes_agree() {
        for p in [1.0, 2.0, 3.0] {
            let s = solve_disk_radial(1.0, p, &RadialOptions::default()).unwrap();
            assert!(s.mass_residual() < 1e-10, "{}", s.mass_residual());
            assert!((s.energy - s.energy_ibp).abs() < 1e-9 * s.energy);
            assert!(s.alpha > 0.0 && s.alpha < 1.0);
        }
    }

    #[test]
    fn lane_emden_pohozaev_identity() {
        // ∫|∇y|² = ∫y^{p+1} since y vanishes at ξ₁
        for p in [1.0, 2.0, 3.5] {
            let le = lane_emden(p, &RadialOptions::default()).unwrap();
            assert!((le.power - le.dirichlet).abs() < 1e-9 * le.power);
            // and the source integral equals −ξ₁ y'(ξ₁)
            assert!((le.source + le.xi1 * le.slope).abs() < 1e-9);
        }
    }

    #[test]
    fn alpha_zero_threshold_p2() {
        let (lam, sol) = alpha_zero_disk(2.0, &RadialOptions::default()).unwrap();
        assert!((lam - 12.485269).abs() < 1e-5, "{lam}");
        assert!(sol.alpha.abs() < 1e-9);
        assert!(sol.mass_residual() < 1e-9);
        let lam_disk = disk_sobolev_constant(3.0, &RadialOptions::default()).unwrap();
        assert!((lam_disk - 14.261252).abs() < 1e-5, "{lam_disk}");
    }

    #[test]
    fn beyond_threshold_has_no_solution() {
        assert!(matches!(
            solve_disk_radial(13.0, 2.0, &RadialOptions::default()),
            Err(Error::NoNonnegativeSolution { .. })
        ));
        let s = solve_disk_radial(12.4, 2.0, &RadialOptions::default()).unwrap();
        assert!(s.alpha > 0.0 && s.alpha < 0.1, "{}", s.alpha);
    }
}
