//! Universal estimates evaluated on computed solutions.
//!
//! Every entry is oriented so that `margin = rhs − lhs ≥ 0` means the inequality holds.
//! An entry passes when `margin ≥ −tolerance`, where the tolerance is the slack times
//! the larger of `|lhs|` and `|rhs|`.

use std::f64::consts::{E, PI};
use std::fmt;

use serde::Serialize;

use crate::domain::Domain;
use crate::elliptic::dirichlet_energy;
use crate::error::{Error, Result};
use crate::numerics::k_tilde;
use crate::radial::RadialSolution;
use crate::solver::{FreeBoundarySolution, PlasmaSolution};

/// Relative slack for grid solutions.
pub const GRID_SLACK: f64 = 1e-2;
/// Relative slack for radial solutions.
pub const RADIAL_SLACK: f64 = 1e-4;
/// `α` at or below this counts as zero for the conditional hypotheses.
pub const ALPHA_ZERO: f64 = 1e-6;
/// Absolute tolerance on `α` in the equality cases of the positivity theorem.
pub const EQUALITY_ALPHA_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::NotApplicable => "n/a",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Entry {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub slack: f64,
    /// Absolute allowance `slack · max(|lhs|, |rhs|)`.
    pub tolerance: f64,
    pub status: Status,
}

impl Entry {
    /// `lhs ≤ rhs` up to relative slack.
    pub fn le(name: &str, lhs: f64, rhs: f64, slack: f64) -> Self {
        let tolerance = slack * lhs.abs().max(rhs.abs());
        Self::with_tolerance(name, lhs, rhs, slack, tolerance)
    }

    /// `lhs ≤ rhs` up to a fixed absolute tolerance.
    pub fn le_abs(name: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::with_tolerance(name, lhs, rhs, 0.0, tolerance)
    }

    fn with_tolerance(name: &str, lhs: f64, rhs: f64, slack: f64, tolerance: f64) -> Self {
        let margin = rhs - lhs;
        let status = if margin.is_finite() && margin >= -tolerance { Status::Pass } else { Status::Fail };
        Self { name: name.to_string(), lhs, rhs, margin, slack, tolerance, status }
    }

    pub fn not_applicable(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            margin: rhs - lhs,
            slack: 0.0,
            tolerance: 0.0,
            status: Status::NotApplicable,
        }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

/// Solution data the estimates are built from, recomputed from `(λ, p, α, ψ)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Primitives {
    pub lambda: f64,
    pub p: f64,
    pub alpha: f64,
    /// `‖ψ‖∞`.
    pub psi_max: f64,
    /// `max λψ`.
    pub theta: f64,
    /// `½∫ψ(α+λψ)^p`.
    pub energy: f64,
    /// `|∂Ω|²/2π − 1` of the domain.
    pub ell: f64,
    pub radial: bool,
}

impl Primitives {
    pub fn from_grid(domain: &Domain, sol: &PlasmaSolution) -> Result<Self> {
        let grid = domain.grid();
        if sol.psi.len() != grid.len() {
            return Err(Error::InvalidArgument("solution lives on another grid".into()));
        }
        let f: Vec<f64> = sol.psi.iter().map(|v| (sol.alpha + sol.lambda * v).max(0.0).powf(sol.p)).collect();
        let psi_max = sol.psi.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            lambda: sol.lambda,
            p: sol.p,
            alpha: sol.alpha,
            psi_max,
            theta: sol.lambda * psi_max,
            energy: dirichlet_energy(grid, &sol.psi, &f),
            ell: domain.ell(),
            radial: false,
        })
    }

    pub fn from_radial(sol: &RadialSolution) -> Self {
        Self {
            lambda: sol.lambda,
            p: sol.p,
            alpha: sol.alpha,
            psi_max: sol.psi_max(),
            theta: sol.theta(),
            energy: sol.energy,
            ell: 1.0,
            radial: true,
        }
    }

    pub fn default_slack(&self) -> f64 {
        if self.radial {
            RADIAL_SLACK
        } else {
            GRID_SLACK
        }
    }
}

/// `α(1 − α^p) ≤ 2λ((p+1)/16π − E)` and `E ≤ (p+1)/16π`.
pub fn check_energy_theorem(s: &Primitives, slack: f64) -> Vec<Entry> {
    let cap = (s.p + 1.0) / (16.0 * PI);
    vec![
        Entry::le("energy_identity", s.alpha * (1.0 - s.alpha.powf(s.p)), 2.0 * s.lambda * (cap - s.energy), slack),
        Entry::le("energy_cap", s.energy, cap, slack),
    ]
}

/// Three sup-norm bounds: through the energy, the universal one, and the bound on `θ`
/// valid for `λ < 2π/p`.
pub fn check_linf_bounds(s: &Primitives, slack: f64) -> Vec<Entry> {
    let p = s.p;
    let green = k_tilde(p) / (4.0 * PI) * (s.alpha + 2.0 * s.lambda * s.energy).powf(p / (p + 1.0));
    let universal = (p + 1.0) / (4.0 * PI) * (1.0 + s.lambda * p / (8.0 * PI));
    let level = if s.lambda < 2.0 * PI / p {
        Entry::le("linf_theta", s.theta, s.lambda * s.ell / (2.0 * PI - s.lambda * p), slack)
    } else {
        Entry::not_applicable("linf_theta", s.theta, f64::INFINITY)
    };
    vec![
        Entry::le("linf_energy", s.psi_max, green, slack),
        Entry::le("linf_universal", s.psi_max, universal, slack),
        level,
    ]
}

/// Piecewise lower bound for the `λ` at which `α` can vanish; at the breakpoints
/// both neighbouring pieces apply and the larger is returned.
pub fn g_lower_bound(p: f64) -> f64 {
    let pieces: [(f64, f64, fn(f64) -> f64); 5] = [
        (1.0, 4.0, |t| 16.0 * PI / (E * (t + 1.0))),
        (4.0, 16.0, |t| 16.0 * PI / (E * t)),
        (16.0, 24.0, |t| 16.0 * PI / (E * t) * (t + 1.0) / t),
        (24.0, 48.0, |t| 24.0 * PI / (E * (t + 1.0))),
        (48.0, f64::INFINITY, |t| 24.0 * PI / (E * t) * 1.5),
    ];
    pieces
        .iter()
        .filter(|(a, b, _)| *a <= p && p <= *b)
        .map(|(_, _, f)| f(p))
        .fold(f64::NAN, f64::max)
}

/// Explicit lower bounds on `α` for small `λ` and the lower bounds on `λ` when `α = 0`.
/// Entries whose hypothesis fails are not applicable.
pub fn check_thresholds(s: &Primitives, slack: f64) -> Vec<Entry> {
    let p = s.p;
    let inv_q = 1.0 - 1.0 / p;
    let mut out = Vec::with_capacity(4);
    let first = 4.0 * PI / (E * p);
    out.push(if s.lambda <= first {
        Entry::le("alpha_above_half", 0.5, s.alpha, slack)
    } else {
        Entry::not_applicable("alpha_above_half", 0.5, s.alpha)
    });
    let second = first / s.ell;
    let floor = 0.5f64.max(inv_q);
    out.push(if s.lambda <= second {
        Entry::le("alpha_above_half_and_inv_q", floor, s.alpha, slack)
    } else {
        Entry::not_applicable("alpha_above_half_and_inv_q", floor, s.alpha)
    });
    let zero = s.alpha <= ALPHA_ZERO;
    let bound = 16.0 * PI / (E * (p + 1.0));
    let g = g_lower_bound(p);
    for (name, lb) in [("lambda_when_alpha_zero", bound), ("lambda_when_alpha_zero_g", g)] {
        out.push(if zero { Entry::le(name, lb, s.lambda, slack) } else { Entry::not_applicable(name, lb, s.lambda) });
    }
    out
}

/// Lower bound on the current when the boundary value vanishes: `I ≥ λ_*^q`.
pub fn check_corollary_current(fb: &FreeBoundarySolution, lambda_star: f64, slack: f64) -> Entry {
    let name = "current_floor";
    let q = fb.p / (fb.p - 1.0);
    let floor = lambda_star.powf(q);
    if fb.p > 1.0 && fb.gamma <= ALPHA_ZERO {
        Entry::le(name, floor, fb.current, slack)
    } else {
        Entry::not_applicable(name, floor, fb.current)
    }
}

/// `α > 0` for `λ ≤ λ_*`; in the equality cases (`p = 1` at `λ = λ_*`, or the disk at
/// `λ = λ_*`) only `|α| ≤ 10⁻³` is expected.
pub fn check_positivity_theorem(s: &Primitives, lambda_star: f64, is_disk: bool, slack: f64) -> Entry {
    let name = "alpha_positive_below_lambda_star";
    if s.lambda > lambda_star + 1e-9 {
        return Entry::not_applicable(name, 0.0, s.alpha);
    }
    let at_star = (s.lambda - lambda_star).abs() <= 1e-6 * lambda_star;
    if at_star && (s.p == 1.0 || is_disk) {
        return Entry::le_abs("alpha_vanishes_at_lambda_star", s.alpha.abs(), EQUALITY_ALPHA_TOL, 0.0);
    }
    Entry::le(name, 0.0, s.alpha, slack)
}

/// Per-solution ledger of estimate entries.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub domain: String,
    pub n: usize,
    pub lambda: f64,
    pub p: f64,
    pub source: String,
    pub entries: Vec<Entry>,
}

impl EstimateReport {
    pub fn new(domain: &str, n: usize, lambda: f64, p: f64, source: &str) -> Self {
        Self { domain: domain.to_string(), n, lambda, p, source: source.to_string(), entries: Vec::new() }
    }

    pub fn for_primitives(domain: &str, n: usize, s: &Primitives) -> Self {
        Self::new(domain, n, s.lambda, s.p, if s.radial { "radial" } else { "grid" })
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(Entry::passed)
    }

    pub fn count(&self, status: Status) -> usize {
        self.entries.iter().filter(|e| e.status == status).count()
    }

    /// Aligned text table.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{} n={} lambda={} p={} ({})\n{:<36} {:>14} {:>14} {:>12} {:>6}\n",
            self.domain, self.n, self.lambda, self.p, self.source, "entry", "lhs", "rhs", "margin", "status"
        );
        for e in &self.entries {
            out.push_str(&format!(
                "{:<36} {:>14.6e} {:>14.6e} {:>12.3e} {:>6}\n",
                e.name, e.lhs, e.rhs, e.margin, e.status
            ));
        }
        out
    }
}
