//! Parameter sweeps over `(domain, p, λ)` cells, report aggregation and the threshold
//! table.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, DomainSpec};
use crate::elliptic::GreenOperator;
use crate::error::{Error, Result};
use crate::estimates::{
    check_corollary_current, check_energy_theorem, check_linf_bounds, check_positivity_theorem,
    check_thresholds, Entry, EstimateReport, Primitives, Status, GRID_SLACK, RADIAL_SLACK,
};
use crate::io::{fmt_num, write_field_file, write_json};
use crate::levelset::{diffem_defect, level_sides, profile, radial_profile, LevelSetProfile};
use crate::radial::{disk_sobolev_constant, solve_disk_radial, RadialOptions};
use crate::sobolev::{lambda_star, lambda_star_from_constant, SobolevOptions};
use crate::solver::{
    current_defect, duality_defect, from_free_boundary, solve_plm, to_free_boundary, PlasmaSolution,
    SolutionHeader, SolveOptions,
};
use crate::variational::{minimize_j, positivity_threshold, Density, VariationalOptions};

/// Allowed range for slack overrides.
pub const SLACK_RANGE: (f64, f64) = (1e-6, 1e-1);
/// Bound on the level-set energy drop defect.
pub const DIFFEM_TOL: f64 = 0.05;
/// Absolute tolerance of the duality identities.
pub const DUALITY_TOL: f64 = 1e-10;
/// Relative tolerance of `∫v₊^p = I`.
pub const CURRENT_TOL: f64 = 1e-4;
/// Multiplier agreement between the minimizer and the solver.
pub const MULTIPLIER_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckGroup {
    Energy,
    Linf,
    Thresholds,
    Levelset,
    Sobolev,
    Variational,
    Duality,
    All,
}

impl CheckGroup {
    pub const EVERY: [CheckGroup; 7] = [
        CheckGroup::Energy,
        CheckGroup::Linf,
        CheckGroup::Thresholds,
        CheckGroup::Levelset,
        CheckGroup::Sobolev,
        CheckGroup::Variational,
        CheckGroup::Duality,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    List(Vec<f64>),
    Range {
        min: f64,
        max: f64,
        count: usize,
        #[serde(default)]
        spacing: Spacing,
    },
}

impl LambdaSpec {
    pub fn linear(min: f64, max: f64, count: usize) -> Self {
        LambdaSpec::Range { min, max, count, spacing: Spacing::Linear }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match *self {
            LambdaSpec::List(ref v) => v.clone(),
            LambdaSpec::Range { min, max, count, spacing } => {
                if count == 0 || !(min <= max) {
                    return Err(Error::Config(format!("bad lambda range [{min}, {max}] x {count}")));
                }
                if count == 1 {
                    vec![min]
                } else {
                    let s = |k: usize| k as f64 / (count - 1) as f64;
                    match spacing {
                        Spacing::Linear => (0..count).map(|k| min + (max - min) * s(k)).collect(),
                        Spacing::Log => {
                            if !(min > 0.0) {
                                return Err(Error::Config("log spacing needs lambda min > 0".into()));
                            }
                            (0..count).map(|k| min * (max / min).powf(s(k))).collect()
                        }
                    }
                }
            }
        };
        if v.is_empty() {
            return Err(Error::Config("lambda list is empty".into()));
        }
        if let Some(bad) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::Config(format!("lambda values must be finite and >= 0, got {bad}")));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Slack {
    pub grid: f64,
    pub radial: f64,
}

impl Default for Slack {
    fn default() -> Self {
        Self { grid: GRID_SLACK, radial: RADIAL_SLACK }
    }
}

fn default_n() -> usize {
    128
}

fn default_checks() -> Vec<CheckGroup> {
    vec![CheckGroup::All]
}

fn default_workers() -> usize {
    1
}

fn default_levels() -> usize {
    200
}

/// JSON sweep description. Domain entries without `n` use the sweep resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub domains: Vec<DomainSpec>,
    pub p: Vec<f64>,
    pub lambda: LambdaSpec,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_checks")]
    pub checks: Vec<CheckGroup>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub slack: Slack,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Number of levels in level-set profiles.
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Also write `ψ` of every solved cell as a field CSV.
    #[serde(default)]
    pub write_fields: bool,
}

impl SweepConfig {
    pub fn new(domains: Vec<DomainSpec>, p: Vec<f64>, lambda: LambdaSpec) -> Self {
        Self {
            domains,
            p,
            lambda,
            n: default_n(),
            checks: default_checks(),
            out: None,
            slack: Slack::default(),
            workers: default_workers(),
            levels: default_levels(),
            write_fields: false,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.domains.is_empty() {
            return Err(Error::Config("domain list is empty".into()));
        }
        if self.p.is_empty() {
            return Err(Error::Config("p list is empty".into()));
        }
        if let Some(bad) = self.p.iter().find(|p| !(p.is_finite() && **p >= 1.0)) {
            return Err(Error::Config(format!("p values must be >= 1, got {bad}")));
        }
        self.lambda.values()?;
        if self.checks.is_empty() {
            return Err(Error::Config("check list is empty".into()));
        }
        for s in [self.slack.grid, self.slack.radial] {
            if !(SLACK_RANGE.0..=SLACK_RANGE.1).contains(&s) {
                return Err(Error::Config(format!("slack {s} outside [{:e}, {:e}]", SLACK_RANGE.0, SLACK_RANGE.1)));
            }
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.levels < 2 {
            return Err(Error::Config("levels must be at least 2".into()));
        }
        Ok(())
    }

    pub fn groups(&self) -> Vec<CheckGroup> {
        let mut g: Vec<CheckGroup> = if self.checks.contains(&CheckGroup::All) {
            CheckGroup::EVERY.to_vec()
        } else {
            self.checks.clone()
        };
        g.sort();
        g.dedup();
        g
    }

    fn resolved(&self, spec: &DomainSpec) -> DomainSpec {
        if spec.n == 0 {
            spec.with_resolution(self.n)
        } else {
            spec.clone()
        }
    }
}

/// Runs `f` over `items` on up to `workers` threads. Workers pull indices from a shared
/// counter and send results back over a channel; the caller's thread assembles them in
/// input order.
pub fn par_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    thread::scope(|s| {
        for _ in 0..workers.clamp(1, items.len().max(1)) {
            let tx = tx.clone();
            let (next, f) = (&next, &f);
            s.spawn(move || loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= items.len() {
                    break;
                }
                if tx.send((k, f(&items[k]))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (k, r) in rx {
            slots[k] = Some(r);
        }
    });
    slots.into_iter().map(|r| r.expect("every item produces a result")).collect()
}

struct Prepared {
    domain: Domain,
    op: GreenOperator,
}

fn prepare(config: &SweepConfig) -> Result<Vec<Prepared>> {
    let specs: Vec<DomainSpec> = config.domains.iter().map(|s| config.resolved(s)).collect();
    par_map(&specs, config.workers, |spec| {
        let domain = Domain::normalize(spec)?;
        let op = GreenOperator::new(&domain)?;
        Ok(Prepared { domain, op })
    })
    .into_iter()
    .collect()
}

/// Result of one `(domain, p, λ)` cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub domain: String,
    pub n: usize,
    pub p: f64,
    pub lambda: f64,
    pub solution: Option<SolutionHeader>,
    /// The grid solution came from the free energy minimizer.
    pub variational_branch: bool,
    pub errors: Vec<String>,
    pub reports: Vec<EstimateReport>,
}

impl CellResult {
    pub fn entries(&self) -> impl Iterator<Item = (&EstimateReport, &Entry)> {
        self.reports.iter().flat_map(|r| r.entries.iter().map(move |e| (r, e)))
    }

    fn file_stem(&self, index: usize) -> String {
        format!("{}-n{}-p{}-l{index:03}", self.domain, self.n, self.p)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub cells: usize,
    pub pass: usize,
    pub fail: usize,
    pub not_applicable: usize,
    pub errors: usize,
    /// One line per failed entry.
    pub failures: Vec<String>,
    /// One line per cell error.
    pub error_messages: Vec<String>,
}

/// Everything a sweep produced, in `(domain, p, λ)` order.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub summary: SweepSummary,
    pub cells: Vec<CellResult>,
}

/// `λ_*(Ω, p)` on the grid of every domain and `λ_*(𝔻, p)` from the radial constant.
struct Thresholds {
    grid: BTreeMap<(usize, usize), f64>,
    disk: BTreeMap<usize, f64>,
}

fn thresholds(config: &SweepConfig, prepared: &[Prepared]) -> Result<Thresholds> {
    let jobs: Vec<(usize, usize)> =
        (0..prepared.len()).flat_map(|d| (0..config.p.len()).map(move |k| (d, k))).collect();
    let grid = par_map(&jobs, config.workers, |&(d, k)| lambda_star(&prepared[d].op, config.p[k], &SobolevOptions::default()));
    let disk = par_map(&config.p, config.workers, |&p| {
        disk_sobolev_constant(p + 1.0, &RadialOptions::default()).map(|c| lambda_star_from_constant(c, p))
    });
    Ok(Thresholds {
        grid: jobs.into_iter().zip(grid).map(|(j, v)| v.map(|v| (j, v))).collect::<Result<_>>()?,
        disk: disk.into_iter().enumerate().map(|(k, v)| v.map(|v| (k, v))).collect::<Result<_>>()?,
    })
}

/// The level chain is judged at its worst level, with the slack taken relative to the
/// largest side over all levels.
fn level_entries(report: &mut EstimateReport, prof: &LevelSetProfile, slack: f64) {
    let sides = level_sides(prof, prof.alpha, prof.lambda, prof.p);
    let scale = sides.iter().fold(0.0f64, |s, (l, r)| s.max(l.abs()).max(r.abs()));
    if let Some(&(l, r)) = sides.iter().min_by(|a, b| (a.1 - a.0).total_cmp(&(b.1 - b.0))) {
        report.entries.push(Entry::le_abs("level_chain", l, r, slack * scale));
    }
    report.entries.push(Entry::le_abs("level_energy_drop", diffem_defect(prof), DIFFEM_TOL, 0.0));
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

struct CellInput<'a> {
    config: &'a SweepConfig,
    groups: &'a [CheckGroup],
    prepared: &'a Prepared,
    lambda_star: Option<f64>,
    disk_lambda_star: Option<f64>,
}

fn run_cell(input: &CellInput, p: f64, lambda: f64) -> (CellResult, Option<PlasmaSolution>) {
    let CellInput { config, groups, prepared, .. } = *input;
    let has = |g: CheckGroup| groups.contains(&g);
    let domain = &prepared.domain;
    let g = &prepared.op;
    let tag = domain.tag();
    let n = domain.spec().n;
    let mut cell = CellResult {
        domain: tag.clone(),
        n,
        p,
        lambda,
        solution: None,
        variational_branch: false,
        errors: Vec::new(),
        reports: Vec::new(),
    };
    let mut grid_report = EstimateReport::new(&tag, n, lambda, p, "grid");
    let solved = solve_plm(g, lambda, p, &SolveOptions::default());
    match &solved {
        Ok(sol) => {
            cell.solution = Some(sol.header());
            cell.variational_branch = sol.diagnostics.variational;
            match grid_entries(input, sol, &mut grid_report) {
                Ok(()) => {}
                Err(e) => cell.errors.push(format!("grid checks: {e}")),
            }
        }
        Err(e) => cell.errors.push(format!("grid solve: {e}")),
    }
    if has(CheckGroup::Variational) {
        match minimize_j(g, lambda, p, &VariationalOptions::default()) {
            Ok(min) => {
                let uniform = crate::variational::free_energy(g, &Density::uniform(g), lambda, p);
                if let Ok(ju) = uniform {
                    grid_report.entries.push(Entry::le_abs("free_energy_below_uniform", min.objective, ju, 1e-12));
                }
                match &solved {
                    Ok(sol) => grid_report.entries.push(Entry::le_abs(
                        "multiplier_matches_solver",
                        (min.alpha - sol.alpha).abs(),
                        MULTIPLIER_TOL,
                        0.0,
                    )),
                    Err(Error::NoNonnegativeSolution { .. }) => {
                        grid_report.entries.push(Entry::le_abs("multiplier_nonpositive_without_solution", min.alpha, 0.0, 0.0))
                    }
                    Err(_) => {}
                }
            }
            Err(e) => cell.errors.push(format!("free energy minimization: {e}")),
        }
    }
    if !grid_report.entries.is_empty() {
        cell.reports.push(grid_report);
    }
    if domain.is_disk() {
        match radial_report(input, p, lambda) {
            Ok(Some(r)) => cell.reports.push(r),
            Ok(None) => {}
            Err(e) => cell.errors.push(format!("radial: {e}")),
        }
    }
    let kept = if config.write_fields { solved.ok() } else { None };
    (cell, kept)
}

fn grid_entries(input: &CellInput, sol: &PlasmaSolution, report: &mut EstimateReport) -> Result<()> {
    let CellInput { config, groups, prepared, lambda_star, disk_lambda_star } = *input;
    let has = |g: CheckGroup| groups.contains(&g);
    let domain = &prepared.domain;
    let slack = config.slack.grid;
    let prim = Primitives::from_grid(domain, sol)?;
    if has(CheckGroup::Energy) {
        report.entries.extend(check_energy_theorem(&prim, slack));
    }
    if has(CheckGroup::Linf) {
        report.entries.extend(check_linf_bounds(&prim, slack));
    }
    if has(CheckGroup::Thresholds) {
        report.entries.extend(check_thresholds(&prim, slack));
    }
    if has(CheckGroup::Levelset) && sol.lambda > 0.0 {
        let prof = profile(domain.grid(), sol, config.levels)?;
        level_entries(report, &prof, slack);
    }
    if has(CheckGroup::Sobolev) {
        if let (Some(ls), Some(ld)) = (lambda_star, disk_lambda_star) {
            report.entries.push(check_positivity_theorem(&prim, ls, domain.is_disk(), slack));
            report.entries.push(Entry::le("lambda_star_not_below_disk", ld, ls, slack));
        }
    }
    if has(CheckGroup::Duality) && sol.p > 1.0 && sol.lambda > 0.0 {
        let g = &prepared.op;
        let fb = to_free_boundary(sol)?;
        let scale = 1.0 + sol.alpha + sol.theta;
        report.entries.push(Entry::le_abs("duality_identity", duality_defect(sol, &fb), 0.0, DUALITY_TOL * scale));
        let back = from_free_boundary(g, &fb)?;
        let gap = (back.alpha - sol.alpha).abs().max(sol.lambda * max_abs_diff(&back.psi, &sol.psi)).max((back.lambda - sol.lambda).abs());
        report.entries.push(Entry::le_abs("duality_roundtrip", gap, 0.0, DUALITY_TOL * scale));
        report.entries.push(Entry::le_abs("current_matches_mass", current_defect(g, &fb), CURRENT_TOL, 0.0));
        if let Some(ls) = lambda_star {
            report.entries.push(check_corollary_current(&fb, ls, slack));
        }
    }
    Ok(())
}

fn radial_report(input: &CellInput, p: f64, lambda: f64) -> Result<Option<EstimateReport>> {
    let CellInput { config, groups, prepared, disk_lambda_star, .. } = *input;
    let has = |g: CheckGroup| groups.contains(&g);
    let slack = config.slack.radial;
    let sol = match solve_disk_radial(lambda, p, &RadialOptions::default()) {
        Ok(s) => s,
        Err(Error::NoNonnegativeSolution { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let prim = Primitives::from_radial(&sol);
    let mut report = EstimateReport::new("disk", prepared.domain.spec().n, lambda, p, "radial");
    if has(CheckGroup::Energy) {
        report.entries.extend(check_energy_theorem(&prim, slack));
    }
    if has(CheckGroup::Linf) {
        report.entries.extend(check_linf_bounds(&prim, slack));
    }
    if has(CheckGroup::Thresholds) {
        report.entries.extend(check_thresholds(&prim, slack));
    }
    if has(CheckGroup::Levelset) && lambda > 0.0 {
        level_entries(&mut report, &radial_profile(&sol, config.levels)?, slack);
    }
    if has(CheckGroup::Sobolev) {
        if let Some(ld) = disk_lambda_star {
            report.entries.push(check_positivity_theorem(&prim, ld, true, slack));
        }
    }
    Ok(if report.entries.is_empty() { None } else { Some(report) })
}

/// Solves and checks every cell; writes per-cell JSON, `entries.csv`, `cells.csv` and
/// `summary.json` when the config names an output directory.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let groups = config.groups();
    let lambdas = config.lambda.values()?;
    let prepared = prepare(config)?;
    let stars = if groups.contains(&CheckGroup::Sobolev) || groups.contains(&CheckGroup::Duality) {
        Some(thresholds(config, &prepared)?)
    } else {
        None
    };
    let (np, nl) = (config.p.len(), lambdas.len());
    let jobs: Vec<(usize, usize, usize)> = (0..prepared.len())
        .flat_map(|d| (0..np).flat_map(move |k| (0..nl).map(move |l| (d, k, l))))
        .collect();
    let results = par_map(&jobs, config.workers, |&(d, k, l)| {
        let input = CellInput {
            config,
            groups: &groups,
            prepared: &prepared[d],
            lambda_star: stars.as_ref().and_then(|s| s.grid.get(&(d, k)).copied()),
            disk_lambda_star: stars.as_ref().and_then(|s| s.disk.get(&k).copied()),
        };
        run_cell(&input, config.p[k], lambdas[l])
    });
    let mut summary = SweepSummary {
        cells: results.len(),
        pass: 0,
        fail: 0,
        not_applicable: 0,
        errors: 0,
        failures: Vec::new(),
        error_messages: Vec::new(),
    };
    for (cell, _) in &results {
        for (r, e) in cell.entries() {
            match e.status {
                Status::Pass => summary.pass += 1,
                Status::NotApplicable => summary.not_applicable += 1,
                Status::Fail => {
                    summary.fail += 1;
                    summary.failures.push(format!(
                        "{} n={} p={} lambda={} [{}] {}: lhs {} rhs {} margin {}",
                        cell.domain, cell.n, cell.p, cell.lambda, r.source, e.name, e.lhs, e.rhs, e.margin
                    ));
                }
            }
        }
        for msg in &cell.errors {
            summary.errors += 1;
            summary.error_messages.push(format!("{} n={} p={} lambda={}: {msg}", cell.domain, cell.n, cell.p, cell.lambda));
        }
    }
    if let Some(out) = &config.out {
        write_outputs(out, &jobs, &prepared, &results, &summary)?;
    }
    Ok(SweepOutcome { summary, cells: results.into_iter().map(|(c, _)| c).collect() })
}

fn write_outputs(
    out: &Path,
    jobs: &[(usize, usize, usize)],
    prepared: &[Prepared],
    results: &[(CellResult, Option<PlasmaSolution>)],
    summary: &SweepSummary,
) -> Result<()> {
    let cells_dir = out.join("cells");
    fs::create_dir_all(&cells_dir)?;
    for (&(d, _, l), (cell, sol)) in jobs.iter().zip(results) {
        let stem = cell.file_stem(l);
        write_json(&cells_dir.join(format!("{stem}.json")), cell)?;
        if let Some(sol) = sol {
            write_field_file(&cells_dir.join(format!("{stem}-psi.csv")), prepared[d].domain.grid(), &sol.psi)?;
        }
    }
    write_entries_csv(&out.join("entries.csv"), results.iter().map(|(c, _)| c))?;
    write_cells_csv(&out.join("cells.csv"), results.iter().map(|(c, _)| c))?;
    write_json(&out.join("summary.json"), summary)?;
    Ok(())
}

pub fn write_entries_csv<'a>(path: &Path, cells: impl Iterator<Item = &'a CellResult>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "domain", "n", "p", "lambda", "source", "entry", "lhs", "rhs", "margin", "slack", "tolerance", "status",
    ])?;
    for cell in cells {
        for (r, e) in cell.entries() {
            w.write_record([
                cell.domain.clone(),
                cell.n.to_string(),
                fmt_num(cell.p),
                fmt_num(cell.lambda),
                r.source.clone(),
                e.name.clone(),
                fmt_num(e.lhs),
                fmt_num(e.rhs),
                fmt_num(e.margin),
                fmt_num(e.slack),
                fmt_num(e.tolerance),
                e.status.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_cells_csv<'a>(path: &Path, cells: impl Iterator<Item = &'a CellResult>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "domain", "n", "p", "lambda", "alpha", "theta", "energy", "mass_residual", "pde_residual", "branch", "error",
    ])?;
    for cell in cells {
        let num = |f: fn(&SolutionHeader) -> f64| cell.solution.as_ref().map(|s| fmt_num(f(s))).unwrap_or_default();
        let branch = match (&cell.solution, cell.variational_branch) {
            (None, _) => "",
            (Some(_), false) => "picard",
            (Some(_), true) => "minimizer",
        };
        w.write_record([
            cell.domain.clone(),
            cell.n.to_string(),
            fmt_num(cell.p),
            fmt_num(cell.lambda),
            num(|s| s.alpha),
            num(|s| s.theta),
            num(|s| s.energy),
            num(|s| s.mass_residual),
            num(|s| s.pde_residual),
            branch.to_string(),
            cell.errors.join("; "),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of the threshold table.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdRow {
    pub domain: String,
    pub n: usize,
    pub p: f64,
    pub lambda_star: f64,
    pub lambda_double_star: f64,
    pub ratio: f64,
    /// Disk with `λ** = λ_*` within 2%.
    pub disk_equality: bool,
}

/// Bisected positivity threshold, with the bracket grown outwards from `λ_*`.
pub fn bisect_threshold(g: &GreenOperator, p: f64, lambda_star: f64) -> Result<f64> {
    let opts = VariationalOptions::default();
    let sign = |l: f64| minimize_j(g, l, p, &opts).map(|r| r.alpha);
    let mut lo = 0.9 * lambda_star;
    let mut tries = 0;
    while sign(lo)? <= 0.0 {
        lo *= 0.8;
        tries += 1;
        if tries > 30 {
            return Err(Error::Bracket { lo, hi: lambda_star });
        }
    }
    let mut hi = 1.1 * lambda_star;
    tries = 0;
    while sign(hi)? >= 0.0 {
        lo = hi;
        hi *= 1.25;
        tries += 1;
        if tries > 30 {
            return Err(Error::Bracket { lo, hi });
        }
    }
    positivity_threshold(g, p, (lo, hi), 1e-3 * lambda_star, &opts)
}

/// `(domain, p, λ_*, λ**, ratio, disk equality)` for every domain and `p` of the config;
/// written to `thresholds.csv` when the config has an output directory.
pub fn emit_threshold_table(config: &SweepConfig) -> Result<Vec<ThresholdRow>> {
    config.validate()?;
    let prepared = prepare(config)?;
    let jobs: Vec<(usize, usize)> =
        (0..prepared.len()).flat_map(|d| (0..config.p.len()).map(move |k| (d, k))).collect();
    let rows = par_map(&jobs, config.workers, |&(d, k)| -> Result<ThresholdRow> {
        let (dom, g, p) = (&prepared[d].domain, &prepared[d].op, config.p[k]);
        let ls = lambda_star(g, p, &SobolevOptions::default())?;
        let lss = bisect_threshold(g, p, ls)?;
        let ratio = lss / ls;
        Ok(ThresholdRow {
            domain: dom.tag(),
            n: dom.spec().n,
            p,
            lambda_star: ls,
            lambda_double_star: lss,
            ratio,
            disk_equality: dom.is_disk() && (ratio - 1.0).abs() <= 0.02,
        })
    });
    let rows: Vec<ThresholdRow> = rows.into_iter().collect::<Result<_>>()?;
    if let Some(out) = &config.out {
        fs::create_dir_all(out)?;
        write_threshold_csv(&out.join("thresholds.csv"), &rows)?;
    }
    Ok(rows)
}

pub fn write_threshold_csv(path: &Path, rows: &[ThresholdRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["domain", "n", "p", "lambda_star", "lambda_double_star", "ratio", "disk_equality"])?;
    for r in rows {
        w.write_record([
            r.domain.clone(),
            r.n.to_string(),
            fmt_num(r.p),
            fmt_num(r.lambda_star),
            fmt_num(r.lambda_double_star),
            fmt_num(r.ratio),
            r.disk_equality.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_ranges() {
        assert_eq!(LambdaSpec::linear(0.0, 5.0, 6).values().unwrap(), vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let log = LambdaSpec::Range { min: 1.0, max: 100.0, count: 3, spacing: Spacing::Log }.values().unwrap();
        assert!((log[1] - 10.0).abs() < 1e-12);
        assert!(LambdaSpec::List(vec![]).values().is_err());
        assert!(LambdaSpec::List(vec![-1.0]).values().is_err());
    }

    #[test]
    fn config_json() {
        let json = r#"{"domains":[{"shape":"square"}],"p":[2],"lambda":[1],"checks":["energy"],"n":32}"#;
        let c: SweepConfig = serde_json::from_str(json).unwrap();
        assert_eq!(c.groups(), vec![CheckGroup::Energy]);
        assert_eq!(c.resolved(&c.domains[0]).n, 32);
        let json = r#"{"domains":[{"shape":"disk"}],"p":[1],"lambda":{"min":0,"max":1,"count":3}}"#;
        let c: SweepConfig = serde_json::from_str(json).unwrap();
        assert_eq!(c.groups().len(), 7);
        assert_eq!(c.lambda.values().unwrap().len(), 3);
    }

    #[test]
    fn validation() {
        let base = SweepConfig::new(vec![DomainSpec::square(0)], vec![2.0], LambdaSpec::List(vec![1.0]));
        assert!(base.validate().is_ok());
        let mut c = base.clone();
        c.lambda = LambdaSpec::List(vec![]);
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = base.clone();
        c.slack.grid = 0.5;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.p = vec![0.5];
        assert!(c.validate().is_err());
    }

    #[test]
    fn par_map_keeps_order() {
        let v: Vec<usize> = (0..50).collect();
        assert_eq!(par_map(&v, 4, |x| x * 2), v.iter().map(|x| x * 2).collect::<Vec<_>>());
    }
}
