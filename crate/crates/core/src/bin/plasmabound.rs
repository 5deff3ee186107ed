use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use plasmabound::domain::{Domain, DomainSpec};
use plasmabound::elliptic::GreenOperator;
use plasmabound::io::{fmt_num, write_json, write_rows};
use plasmabound::levelset::{profile, profile_rows, radial_profile};
use plasmabound::radial::{solve_disk_radial, RadialOptions};
use plasmabound::sobolev::{best_constant, SobolevOptions, SobolevRecord};
use plasmabound::solver::{solve_plm, SolveOptions};
use plasmabound::sweep::{emit_threshold_table, run_sweep, LambdaSpec, SweepConfig, SweepOutcome};
use plasmabound::{Error, Result};

#[derive(Parser)]
#[command(name = "plasmabound", version, about = "Plasma problem solver and estimate checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one cell, print its header and check every estimate.
    Solve {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        slack: Option<f64>,
    },
    /// Run a sweep described by a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        slack: Option<f64>,
    },
    /// Table of λ_* against the bisected positivity threshold.
    Thresholds {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        p: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Best Sobolev constants Λ(Ω, s) and the matching λ_*.
    Sobolev {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        s: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Level-set profile CSV `(t, mu, m, e, residual)` of one cell.
    Profile {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 200)]
        levels: usize,
        /// Use the radial ODE solution (disk only).
        #[arg(long)]
        radial: bool,
        /// CSV file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeName {
    Disk,
    Square,
    Rectangle,
    Polygon,
}

#[derive(Args)]
struct ShapeArgs {
    #[arg(long, value_enum, default_value = "disk")]
    shape: ShapeName,
    /// Side ratio of a rectangle.
    #[arg(long, default_value_t = 2.0)]
    aspect: f64,
    /// Polygon vertices as `x,y;x,y;...`.
    #[arg(long)]
    vertices: Option<String>,
    #[arg(long, default_value_t = 128)]
    n: usize,
}

impl ShapeArgs {
    fn spec(&self) -> Result<DomainSpec> {
        Ok(match self.shape {
            ShapeName::Disk => DomainSpec::disk(self.n),
            ShapeName::Square => DomainSpec::square(self.n),
            ShapeName::Rectangle => DomainSpec::rectangle(self.aspect, self.n),
            ShapeName::Polygon => {
                let text = self.vertices.as_deref().ok_or_else(|| Error::Config("--vertices is required for a polygon".into()))?;
                DomainSpec::polygon(parse_vertices(text)?, self.n)
            }
        })
    }
}

fn parse_vertices(text: &str) -> Result<Vec<[f64; 2]>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let xy: Vec<f64> = pair
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("bad vertex '{pair}': {e}")))?;
            match xy[..] {
                [x, y] => Ok([x, y]),
                _ => Err(Error::Config(format!("vertex '{pair}' needs two coordinates"))),
            }
        })
        .collect()
}

fn report(outcome: &SweepOutcome) -> bool {
    let s = &outcome.summary;
    println!(
        "cells {}  pass {}  fail {}  n/a {}  errors {}",
        s.cells, s.pass, s.fail, s.not_applicable, s.errors
    );
    for msg in &s.error_messages {
        eprintln!("error: {msg}");
    }
    for f in &s.failures {
        eprintln!("FAIL {f}");
    }
    s.fail == 0
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve { shape, lambda, p, out, slack } => {
            let spec = shape.spec()?;
            let mut config = SweepConfig::new(vec![spec], vec![p], LambdaSpec::List(vec![lambda]));
            config.n = shape.n;
            config.write_fields = out.is_some();
            config.out = out;
            if let Some(s) = slack {
                config.slack.grid = s;
            }
            let outcome = run_sweep(&config)?;
            let cell = &outcome.cells[0];
            if let Some(h) = &cell.solution {
                println!("{}", serde_json::to_string_pretty(h)?);
            }
            for r in &cell.reports {
                print!("{}", r.table());
            }
            Ok(report(&outcome))
        }
        Command::Sweep { config, out, n, workers, slack } => {
            let mut c = SweepConfig::from_file(&config)?;
            if out.is_some() {
                c.out = out;
            }
            if let Some(n) = n {
                c.n = n;
            }
            if let Some(w) = workers {
                c.workers = w;
            }
            if let Some(s) = slack {
                c.slack.grid = s;
            }
            Ok(report(&run_sweep(&c)?))
        }
        Command::Thresholds { config, shape, p, out, workers } => {
            let mut c = match config {
                Some(path) => SweepConfig::from_file(&path)?,
                None => {
                    let mut c = SweepConfig::new(vec![shape.spec()?], p, LambdaSpec::List(vec![0.0]));
                    c.n = shape.n;
                    c
                }
            };
            if out.is_some() {
                c.out = out;
            }
            if let Some(w) = workers {
                c.workers = w;
            }
            let rows = emit_threshold_table(&c)?;
            println!("domain,n,p,lambda_star,lambda_double_star,ratio,disk_equality");
            for r in rows {
                println!(
                    "{},{},{},{},{},{},{}",
                    r.domain,
                    r.n,
                    fmt_num(r.p),
                    fmt_num(r.lambda_star),
                    fmt_num(r.lambda_double_star),
                    fmt_num(r.ratio),
                    r.disk_equality
                );
            }
            Ok(true)
        }
        Command::Sobolev { shape, s, out } => {
            let domain = Domain::normalize(&shape.spec()?)?;
            let g = GreenOperator::new(&domain)?;
            let records = s
                .iter()
                .map(|&s| best_constant(&g, s, &SobolevOptions::default()).map(|r| SobolevRecord::from(&r)))
                .collect::<Result<Vec<_>>>()?;
            println!("{}", serde_json::to_string_pretty(&records)?);
            if let Some(path) = out {
                write_json(&path, &records)?;
            }
            Ok(true)
        }
        Command::Profile { shape, lambda, p, levels, radial, out } => {
            let prof = if radial {
                if !matches!(shape.shape, ShapeName::Disk) {
                    return Err(Error::Config("--radial needs --shape disk".into()));
                }
                radial_profile(&solve_disk_radial(lambda, p, &RadialOptions::default())?, levels)?
            } else {
                let domain = Domain::normalize(&shape.spec()?)?;
                let g = GreenOperator::new(&domain)?;
                let sol = solve_plm(&g, lambda, p, &SolveOptions::default())?;
                profile(domain.grid(), &sol, levels)?
            };
            let header = ["t", "mu", "m", "e", "residual"];
            let rows = profile_rows(&prof);
            match out {
                Some(path) => write_rows(fs::File::create(path)?, header, &rows)?,
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    write_rows(&mut lock, header, &rows)?;
                    lock.flush()?;
                }
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
