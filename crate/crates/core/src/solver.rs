//! Grid solutions of `−Δψ = (α + λψ)^p`, `∫(α + λψ)^p = 1`, and the map to the free
//! boundary formulation `−Δv = v₊^p` with prescribed current.

use serde::Serialize;

use crate::elliptic::{dirichlet_energy, torsion, GreenOperator, ScalarField};
use crate::error::{Error, Result};
use crate::numerics::brent;
use crate::sobolev::{best_constant, SobolevOptions};
use crate::variational::{minimize_j, minimize_j_from, VariationalOptions};

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Initial Picard damping; halved on divergence down to `omega_min`.
    pub omega: f64,
    pub omega_min: f64,
    /// Relative sup-norm update that ends the inner iteration.
    pub update_tol: f64,
    /// Target `|∫(α+λψ)^p − 1|`.
    pub mass_tol: f64,
    pub max_inner: usize,
    pub max_outer: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { omega: 1.0, omega_min: 0.25, update_tol: 1e-10, mass_tol: 1e-9, max_inner: 5_000, max_outer: 200 }
    }
}

/// Bookkeeping of one outer solve.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SolveDiagnostics {
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub omega: f64,
    /// Sampled `(α, M(α))` pairs of the outer search, sorted by `α`.
    pub mass_samples: Vec<(f64, f64)>,
    /// Adjacent samples where `M` failed to increase.
    pub monotonicity_violations: usize,
    /// The solution came from the free energy minimizer, not from Picard iteration.
    pub variational: bool,
}

/// A grid solution `(α, ψ)`.
#[derive(Debug, Clone)]
pub struct PlasmaSolution {
    pub lambda: f64,
    pub p: f64,
    pub alpha: f64,
    pub psi: ScalarField,
    /// `max λψ`.
    pub theta: f64,
    /// `½∫ψ(α+λψ)^p`.
    pub energy: f64,
    pub mass_residual: f64,
    /// Relative residual of `−Δ_h ψ = (α + λψ)^p`.
    pub pde_residual: f64,
    pub diagnostics: SolveDiagnostics,
}

/// JSON header of a solution.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionHeader {
    pub lambda: f64,
    pub p: f64,
    pub alpha: f64,
    pub theta: f64,
    pub energy: f64,
    pub mass_residual: f64,
    pub pde_residual: f64,
}

fn source(alpha: f64, lambda: f64, p: f64, psi: &[f64]) -> Vec<f64> {
    psi.iter().map(|v| (alpha + lambda * v).max(0.0).powf(p)).collect()
}

impl PlasmaSolution {
    /// Assembles a solution and its derived quantities from `(λ, p, α, ψ)`.
    pub fn from_parts(g: &GreenOperator, lambda: f64, p: f64, alpha: f64, psi: ScalarField) -> Self {
        let f = source(alpha, lambda, p, &psi);
        let grid = g.grid();
        let mass = grid.integrate(&f);
        Self {
            lambda,
            p,
            alpha,
            theta: lambda * psi.iter().copied().fold(0.0, f64::max),
            energy: dirichlet_energy(grid, &psi, &f),
            mass_residual: (mass - 1.0).abs(),
            pde_residual: g.relative_residual(&psi, &f),
            psi,
            diagnostics: SolveDiagnostics::default(),
        }
    }

    /// `u = λψ`.
    pub fn u(&self) -> ScalarField {
        self.psi.iter().map(|v| self.lambda * v).collect()
    }

    /// `(α + λψ)^p`.
    pub fn density(&self) -> ScalarField {
        source(self.alpha, self.lambda, self.p, &self.psi)
    }

    pub fn psi_max(&self) -> f64 {
        self.psi.iter().copied().fold(0.0, f64::max)
    }

    pub fn header(&self) -> SolutionHeader {
        SolutionHeader {
            lambda: self.lambda,
            p: self.p,
            alpha: self.alpha,
            theta: self.theta,
            energy: self.energy,
            mass_residual: self.mass_residual,
            pde_residual: self.pde_residual,
        }
    }
}

struct Inner {
    psi: ScalarField,
    mass: f64,
    iterations: usize,
}

enum Sweep {
    Converged(Inner),
    /// The monotone iterates already carry more than the cap, so `M(α)` does too.
    Exceeded { mass: f64, iterations: usize },
}

/// Damped Picard iteration `ψ ← (1−ω)ψ + ω G[(α + λψ)^p]` at fixed `α`.
///
/// Started from a subsolution the iterates increase monotonically, so once their mass
/// passes `mass_cap` the fixed point (if any) has larger mass and the sweep stops.
fn picard(
    g: &GreenOperator,
    (alpha, lambda, p): (f64, f64, f64),
    start: &[f64],
    omega: f64,
    mass_cap: f64,
    opts: &SolveOptions,
) -> Result<Sweep> {
    let grid = g.grid();
    let mut psi = start.to_vec();
    let mut last_diff = f64::INFINITY;
    let mut last_update = f64::INFINITY;
    let mut growing = 0usize;
    for it in 1..=opts.max_inner {
        let f = source(alpha, lambda, p, &psi);
        let mass = grid.integrate(&f);
        if mass > mass_cap {
            return Ok(Sweep::Exceeded { mass, iterations: it });
        }
        let next = g.apply(&f)?;
        let mut diff = 0.0f64;
        let mut size = 0.0f64;
        for (a, b) in psi.iter_mut().zip(&next) {
            let v = (1.0 - omega) * *a + omega * b;
            diff = diff.max((v - *a).abs());
            size = size.max(v.abs());
            *a = v;
        }
        let update = if size > 0.0 { diff / size } else { 0.0 };
        if !(lambda * size < 1e8) || !update.is_finite() {
            return Err(Error::PicardDivergence { omega, iterations: it });
        }
        // from a subsolution the increments shrink whenever a fixed point lies above
        growing = if diff > last_diff { growing + 1 } else { 0 };
        if growing >= 50 {
            return Err(Error::PicardDivergence { omega, iterations: it });
        }
        // a contraction too slow to finish within the budget counts as a stall
        if it > 20 && diff < last_diff && update > opts.update_tol {
            let rate = diff / last_diff;
            let needed = (opts.update_tol / update).ln() / rate.ln();
            if needed > (opts.max_inner - it) as f64 {
                return Err(Error::PicardStalled { iterations: it, update });
            }
        }
        last_diff = diff;
        last_update = update;
        if update <= opts.update_tol {
            let mass = grid.integrate(&source(alpha, lambda, p, &psi));
            return Ok(Sweep::Converged(Inner { psi, mass, iterations: it }));
        }
    }
    Err(Error::PicardStalled { iterations: opts.max_inner, update: last_update })
}

fn is_divergence(e: &Error) -> bool {
    matches!(e, Error::PicardDivergence { .. } | Error::PicardStalled { .. })
}

/// Mass beyond which a sweep stops early; high enough that iterations near the root
/// converge and feed the secant steps.
const MASS_CAP: f64 = 1.5;

#[derive(Debug, Clone, Copy)]
struct Eval {
    /// `M(α) − 1`, or a lower bound when not converged.
    excess: f64,
    converged: bool,
}

/// Inner solutions keyed by `α`; serves subsolution warm starts.
struct Samples {
    converged: Vec<(f64, Inner)>,
    exceeded: Vec<(f64, f64)>,
    inner_iterations: usize,
    omega: f64,
}

impl Samples {
    /// The converged `ψ` with the largest `α' ≤ α`; a subsolution at `α`.
    fn start_for(&self, alpha: f64, n: usize) -> Vec<f64> {
        self.converged
            .iter()
            .filter(|(a, _)| *a <= alpha)
            .max_by(|x, y| x.0.total_cmp(&y.0))
            .map(|(_, s)| s.psi.clone())
            .unwrap_or_else(|| vec![0.0; n])
    }

    fn eval(&mut self, g: &GreenOperator, alpha: f64, lambda: f64, p: f64, opts: &SolveOptions) -> Result<Eval> {
        if let Some((_, s)) = self.converged.iter().find(|(a, _)| *a == alpha) {
            return Ok(Eval { excess: s.mass - 1.0, converged: true });
        }
        let start = self.start_for(alpha, g.len());
        let mut omega = opts.omega;
        let sweep = loop {
            match picard(g, (alpha, lambda, p), &start, omega, MASS_CAP, opts) {
                Err(Error::PicardDivergence { .. }) if omega * 0.5 >= opts.omega_min => omega *= 0.5,
                other => break other?,
            }
        };
        self.omega = self.omega.min(omega);
        match sweep {
            Sweep::Converged(inner) => {
                self.inner_iterations += inner.iterations;
                let excess = inner.mass - 1.0;
                self.converged.push((alpha, inner));
                Ok(Eval { excess, converged: true })
            }
            Sweep::Exceeded { mass, iterations } => {
                self.inner_iterations += iterations;
                self.exceeded.push((alpha, mass));
                Ok(Eval { excess: mass - 1.0, converged: false })
            }
        }
    }

    fn take(mut self, alpha: f64) -> (Inner, SolveDiagnostics) {
        self.converged.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mass_samples: Vec<(f64, f64)> = self.converged.iter().map(|(a, s)| (*a, s.mass)).collect();
        let violations = mass_samples.windows(2).filter(|w| w[1].1 <= w[0].1).count();
        let outer = self.converged.len() + self.exceeded.len();
        let idx = self.converged.iter().position(|(a, _)| *a == alpha).expect("root was sampled");
        let inner = self.converged.swap_remove(idx).1;
        let diag = SolveDiagnostics {
            outer_iterations: outer,
            inner_iterations: self.inner_iterations,
            omega: self.omega,
            mass_samples,
            monotonicity_violations: violations,
            variational: false,
        };
        (inner, diag)
    }
}

/// Solves for `(α, ψ)` on the minimal branch reached by Picard iteration.
///
/// The outer search drives `M(α) = ∫(α + λψ_α)^p` to one over `α ∈ [0, 1]`: bisection
/// while the upper end is only known to exceed unit mass, regula falsi once both ends
/// are converged fixed points. If the iteration at `α = 1` fails outright, a 33-point
/// scan locates an upper end first.
pub fn solve_plm(g: &GreenOperator, lambda: f64, p: f64, opts: &SolveOptions) -> Result<PlasmaSolution> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be non-negative, got {lambda}")));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p must be at least 1, got {p}")));
    }
    if lambda == 0.0 {
        let psi = torsion(g)?;
        return Ok(PlasmaSolution::from_parts(g, 0.0, p, 1.0, psi));
    }
    let mut samples = Samples { converged: Vec::new(), exceeded: Vec::new(), inner_iterations: 0, omega: opts.omega };
    let found = bracket(g, lambda, p, opts, &mut samples).and_then(|b| match b {
        Bracket::Root(a) => Ok(a),
        Bracket::Interval(lo, hi, hi_eval) => refine(g, lambda, p, opts, &mut samples, lo, hi, hi_eval),
    });
    let alpha = match found {
        Ok(a) => a,
        Err(Error::NoNonnegativeSolution { .. }) => return beyond_picard(g, lambda, p),
        Err(e) => return Err(e),
    };
    let (inner, diag) = samples.take(alpha);
    if diag.monotonicity_violations > 0 {
        log::warn!("M(alpha) not monotone at lambda = {lambda}, p = {p}: {:?}", diag.mass_samples);
    }
    let mut sol = PlasmaSolution::from_parts(g, lambda, p, alpha, inner.psi);
    sol.diagnostics = diag;
    Ok(sol)
}

/// Past the reach of the Picard iteration the minimizer of the free energy still
/// yields a solution as long as its multiplier is positive.
fn beyond_picard(g: &GreenOperator, lambda: f64, p: f64) -> Result<PlasmaSolution> {
    let coarse = minimize_j(g, lambda, p, &VariationalOptions::default())?;
    if !(coarse.alpha > 0.0) {
        return Err(Error::NoNonnegativeSolution { lambda, p });
    }
    let tight = VariationalOptions { tol: 1e-8, max_iter: 20_000, ..Default::default() };
    let min = match minimize_j_from(g, lambda, p, coarse.density.clone(), &tight) {
        Ok(m) if m.alpha > 0.0 => m,
        Ok(_) | Err(Error::IterationCap { .. }) => coarse,
        Err(e) => return Err(e),
    };
    log::debug!("lambda = {lambda}, p = {p}: Picard branch ended, using the free energy minimizer");
    // re-fit α to the potential so that the mass constraint holds exactly
    let psi = min.potential;
    let grid = g.grid();
    let mass = |a: f64| Ok(grid.integrate(&source(a, lambda, p, &psi)) - 1.0);
    let alpha = brent(mass, 0.0, 1.0, 1e-15, 200).unwrap_or(min.alpha);
    let mut sol = PlasmaSolution::from_parts(g, lambda, p, alpha, psi);
    sol.diagnostics.outer_iterations = min.iterations;
    sol.diagnostics.variational = true;
    Ok(sol)
}

enum Bracket {
    Root(f64),
    /// `M(lo) < 1` at a converged `lo`; `M(hi) > 1` or beyond the branch.
    Interval(f64, f64, Eval),
}

fn bracket(g: &GreenOperator, lambda: f64, p: f64, opts: &SolveOptions, s: &mut Samples) -> Result<Bracket> {
    let none = || Error::NoNonnegativeSolution { lambda, p };
    match s.eval(g, 0.0, lambda, p, opts) {
        Ok(e) if e.excess.abs() <= opts.mass_tol && e.converged => return Ok(Bracket::Root(0.0)),
        Ok(e) if e.excess > 0.0 => return Err(none()),
        Ok(_) => {}
        Err(e) if is_divergence(&e) => return Err(none()),
        Err(e) => return Err(e),
    }
    match s.eval(g, 1.0, lambda, p, opts) {
        Ok(e) if e.converged && e.excess.abs() <= opts.mass_tol => return Ok(Bracket::Root(1.0)),
        Ok(e) if e.excess > 0.0 => return Ok(Bracket::Interval(0.0, 1.0, e)),
        Ok(e) => {
            return Err(Error::InvalidArgument(format!(
                "mass {} below one at alpha = 1; inconsistent grid",
                e.excess + 1.0
            )))
        }
        Err(e) if is_divergence(&e) => {}
        Err(e) => return Err(e),
    }
    log::debug!("inner iteration failed at alpha = 1 (lambda = {lambda}, p = {p}); scanning");
    let mut last_ok = 0.0;
    for k in 1..32 {
        let a = k as f64 / 32.0;
        match s.eval(g, a, lambda, p, opts) {
            Ok(e) if e.converged && e.excess.abs() <= opts.mass_tol => return Ok(Bracket::Root(a)),
            Ok(e) if e.excess > 0.0 => return Ok(Bracket::Interval(last_ok, a, e)),
            Ok(_) => last_ok = a,
            Err(e) if is_divergence(&e) => {
                let fail = Eval { excess: f64::INFINITY, converged: false };
                return Ok(Bracket::Interval(last_ok, a, fail));
            }
            Err(e) => return Err(e),
        }
    }
    let fail = Eval { excess: f64::INFINITY, converged: false };
    Ok(Bracket::Interval(last_ok, 1.0, fail))
}

/// Shrinks the bracket until a converged `α` meets the mass tolerance.
#[allow(clippy::too_many_arguments)]
fn refine(
    g: &GreenOperator,
    lambda: f64,
    p: f64,
    opts: &SolveOptions,
    s: &mut Samples,
    lo: f64,
    hi: f64,
    hi_eval: Eval,
) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = s.eval(g, a, lambda, p, opts)?.excess;
    let mut fb = hi_eval.excess;
    let mut b_exact = hi_eval.converged;
    // previous converged point below the root, for one-sided secant steps
    let mut below: Option<(f64, f64)> = None;
    let mut side = 0i8;
    for _ in 0..opts.max_outer {
        // an unconverged upper end this close to a mass-deficient fixed point marks
        // the end of the Picard branch, not a root
        if b - a <= 1e-14 || (!b_exact && b - a <= 1e-6) {
            break;
        }
        let candidate = if b_exact {
            (a * fb - b * fa) / (fb - fa)
        } else if let Some((a0, f0)) = below {
            a - fa * (a - a0) / (fa - f0)
        } else {
            f64::NAN
        };
        let c = if candidate > a && candidate < b { candidate } else { 0.5 * (a + b) };
        let e = match s.eval(g, c, lambda, p, opts) {
            Ok(e) => e,
            Err(e) if is_divergence(&e) => Eval { excess: f64::INFINITY, converged: false },
            Err(e) => return Err(e),
        };
        if e.converged && e.excess.abs() <= opts.mass_tol {
            return Ok(c);
        }
        if e.converged && e.excess < 0.0 {
            below = Some((a, fa));
            a = c;
            fa = e.excess;
            if side == -1 && b_exact {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            fb = e.excess;
            if side == 1 && e.converged {
                fa *= 0.5;
            }
            side = if e.converged { 1 } else { 0 };
            b_exact = e.converged;
        }
    }
    if b_exact {
        return Err(Error::IterationCap {
            what: "outer alpha search",
            iterations: opts.max_outer,
            residual: fa.abs().min(fb.abs()),
            history: vec![a, b],
        });
    }
    // every α above a converged mass-deficient one leaves the branch
    Err(Error::NoNonnegativeSolution { lambda, p })
}

/// The `α = 0` solution built from the ground state of `K w = Λ W w^p`, `∫w^{p+1} = 1`:
/// `u = c w` with `c = (∫w^p)^{−1/p}` solves `−Δu = λu^p` at `λ = Λ c^{1−p}`.
pub fn solve_alpha_zero(g: &GreenOperator, p: f64, opts: &SobolevOptions) -> Result<PlasmaSolution> {
    let sob = best_constant(g, p + 1.0, opts)?;
    let grid = g.grid();
    let wp: Vec<f64> = sob.w.iter().map(|v| v.max(0.0).powf(p)).collect();
    let c = grid.integrate(&wp).powf(-1.0 / p);
    let lambda = sob.lambda * c.powf(1.0 - p);
    let psi: Vec<f64> = sob.w.iter().map(|v| c * v / lambda).collect();
    Ok(PlasmaSolution::from_parts(g, lambda, p, 0.0, psi))
}

/// Solution of the free boundary problem `−Δv = v₊^p`, `v = γ` on the boundary,
/// `∫v₊^p = I`.
#[derive(Debug, Clone)]
pub struct FreeBoundarySolution {
    pub current: f64,
    pub gamma: f64,
    pub p: f64,
    pub v: ScalarField,
}

/// `I = λ^q`, `γ = λ^{1/(p−1)} α`, `v = λ^{1/(p−1)}(α + λψ)`.
pub fn to_free_boundary(sol: &PlasmaSolution) -> Result<FreeBoundarySolution> {
    let p = sol.p;
    if !(p > 1.0) {
        return Err(Error::InvalidArgument(format!("the current map needs p > 1, got {p}")));
    }
    if !(sol.lambda > 0.0) {
        return Err(Error::InvalidArgument("the current map needs lambda > 0".into()));
    }
    let q = p / (p - 1.0);
    let scale = sol.lambda.powf(1.0 / (p - 1.0));
    Ok(FreeBoundarySolution {
        current: sol.lambda.powf(q),
        gamma: scale * sol.alpha,
        p,
        v: sol.psi.iter().map(|x| scale * (sol.alpha + sol.lambda * x)).collect(),
    })
}

/// `α = I^{−1/p} γ`, `ψ = I^{−1}(v − γ)`, `λ = I^{1/q}`.
pub fn from_free_boundary(g: &GreenOperator, fb: &FreeBoundarySolution) -> Result<PlasmaSolution> {
    let p = fb.p;
    if !(p > 1.0) {
        return Err(Error::InvalidArgument(format!("the current map needs p > 1, got {p}")));
    }
    if !(fb.current > 0.0) {
        return Err(Error::InvalidArgument(format!("current must be positive, got {}", fb.current)));
    }
    if fb.gamma < 0.0 {
        return Err(Error::InvalidArgument(format!("boundary value gamma = {} is negative", fb.gamma)));
    }
    let q = p / (p - 1.0);
    let alpha = fb.current.powf(-1.0 / p) * fb.gamma;
    let lambda = fb.current.powf(1.0 / q);
    let psi = fb.v.iter().map(|v| (v - fb.gamma) / fb.current).collect();
    Ok(PlasmaSolution::from_parts(g, lambda, p, alpha, psi))
}

/// `max |I^{−1/p} v − (α + λψ)|` over the nodes.
pub fn duality_defect(sol: &PlasmaSolution, fb: &FreeBoundarySolution) -> f64 {
    let s = fb.current.powf(-1.0 / fb.p);
    fb.v.iter()
        .zip(&sol.psi)
        .map(|(v, x)| (s * v - (sol.alpha + sol.lambda * x)).abs())
        .fold(0.0, f64::max)
}

/// Relative defect of `∫v₊^p = I`.
pub fn current_defect(g: &GreenOperator, fb: &FreeBoundarySolution) -> f64 {
    let vp: Vec<f64> = fb.v.iter().map(|v| v.max(0.0).powf(fb.p)).collect();
    (g.grid().integrate(&vp) - fb.current).abs() / fb.current
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Domain, DomainSpec};
    use crate::radial::{solve_disk_radial, RadialOptions};

    fn op(spec: DomainSpec) -> GreenOperator {
        GreenOperator::new(&Domain::normalize(&spec).unwrap()).unwrap()
    }

    #[test]
    fn lambda_zero_is_torsion() {
        let g = op(DomainSpec::square(32));
        let s = solve_plm(&g, 0.0, 2.0, &SolveOptions::default()).unwrap();
        assert_eq!(s.alpha, 1.0);
        assert!(s.mass_residual < 1e-12);
        assert_eq!(s.theta, 0.0);
    }

    #[test]
    fn disk_p2_matches_radial() {
        let g = op(DomainSpec::disk(64));
        let s = solve_plm(&g, 1.0, 2.0, &SolveOptions::default()).unwrap();
        let r = solve_disk_radial(1.0, 2.0, &RadialOptions::default()).unwrap();
        assert!((s.alpha - r.alpha).abs() < 1e-3, "{} vs {}", s.alpha, r.alpha);
        assert!(s.mass_residual <= 1e-8);
        assert!(s.pde_residual <= 1e-8, "{}", s.pde_residual);
        assert_eq!(s.diagnostics.monotonicity_violations, 0);
        assert!(s.psi.iter().all(|v| *v > 0.0));
        assert!((s.alpha + s.theta).powf(2.0) > 1.0);
    }

    #[test]
    fn duality_roundtrip() {
        let g = op(DomainSpec::square(32));
        let s = solve_plm(&g, 4.0, 2.0, &SolveOptions::default()).unwrap();
        let fb = to_free_boundary(&s).unwrap();
        assert!((fb.current - 16.0).abs() < 1e-12);
        assert!((fb.gamma - 4.0 * s.alpha).abs() < 1e-12);
        assert!(duality_defect(&s, &fb) < 1e-10);
        assert!(current_defect(&g, &fb) < 1e-6);
        let back = from_free_boundary(&g, &fb).unwrap();
        assert!((back.lambda - 4.0).abs() < 1e-12);
        assert!((back.alpha - s.alpha).abs() < 1e-12);
        let d = back.psi.iter().zip(&s.psi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(d < 1e-12);
        let mut neg = fb.clone();
        neg.gamma = -0.1;
        assert!(from_free_boundary(&g, &neg).is_err());
        let mut p1 = s.clone();
        p1.p = 1.0;
        assert!(to_free_boundary(&p1).is_err());
    }
}
