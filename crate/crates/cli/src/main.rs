//! `sadic-heat`: radii, kernels, solutions, spectra, sampled paths and
//! verification suites for the S-adic heat equation.

mod config;
mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex;
use sadic_heat::filtration::format_ratio;
use sadic_heat::funcspace::FunctionFile;
use sadic_heat::markov::{trajectory_stats, write_trajectories_csv, PathSampler};
use sadic_heat::sadic::CoordJson;
use sadic_heat::spectral::{duhamel_solve, heat_kernel_at, spectrum};
use sadic_heat::verify::{run_suite, SUITES};
use sadic_heat::{Field, RadialPosition, SAdicPoint, TestFunction, Window};
use serde_json::Value;

use config::{Config, ConfigArgs};
use table::{num, Format, Table};

#[derive(Debug, Parser)]
#[command(name = "sadic-heat", version, about = "Heat equations on S-adic numbers")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output format for tables
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv, env = "SADIC_FORMAT")]
    format: Format,
    /// Write the table to this file instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Radii of the filtration
    Radii(RangeArgs),
    /// Heat kernel values along a norm ladder or at given points
    Kernel(KernelArgs),
    /// Evolve a function file, optionally with a source term
    Solve(SolveArgs),
    /// Same as `solve --duhamel`
    Duhamel(SolveArgs),
    /// Sample paths of the jump process
    Sample(SampleArgs),
    /// Eigenvalues of D^alpha by level
    Spectrum(RangeArgs),
    /// Run verification suites
    Verify(VerifyArgs),
    /// Print the effective configuration
    Config,
}

#[derive(Debug, Args)]
struct RangeArgs {
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    from: i64,
    #[arg(long, default_value_t = 10, allow_hyphen_values = true)]
    to: i64,
}

#[derive(Debug, Args)]
struct KernelArgs {
    /// Comma-separated times
    #[arg(long, value_delimiter = ',', required = true)]
    t: Vec<f64>,
    /// Lowest sphere level of the ladder
    #[arg(long, default_value_t = -6, allow_hyphen_values = true)]
    from: i64,
    /// Highest sphere level of the ladder
    #[arg(long, default_value_t = 6, allow_hyphen_values = true)]
    to: i64,
    /// JSON array of points (each a list of {p, num, den_exp}) instead of the ladder
    #[arg(long)]
    points: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Initial function file
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated output times
    #[arg(long, value_delimiter = ',', required = true)]
    t: Vec<f64>,
    /// Directory for the solution files
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Add a source term (requires --source)
    #[arg(long)]
    duhamel: bool,
    /// Time-independent source function file
    #[arg(long)]
    source: Option<PathBuf>,
    /// Simpson panels for the source integral
    #[arg(long, default_value_t = 64)]
    steps: usize,
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Final time
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Equal steps from 0 to t
    #[arg(long, default_value_t = 10)]
    steps: usize,
    #[arg(long, default_value_t = 1000)]
    paths: u64,
    /// Trajectory CSV destination
    #[arg(long, default_value = "trajectories.csv")]
    trajectories: PathBuf,
    /// Significance level of the statistical checks
    #[arg(long, default_value_t = 0.01)]
    alpha_level: f64,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Suite name, or "all"
    #[arg(default_value = "all")]
    suite: String,
    /// Sample count for the statistical checks
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Runs a command; `Ok(false)` means some check failed.
fn run(cli: Cli) -> Result<bool> {
    let cfg = Config::load(&cli.config)?;
    let mut out: Box<dyn Write> = match &cli.output {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let (table, ok) = match cli.command {
        Command::Radii(r) => (radii(&cfg, &r)?, true),
        Command::Kernel(k) => (kernel(&cfg, &k)?, true),
        Command::Solve(s) => (solve(&cfg, &s, s.duhamel)?, true),
        Command::Duhamel(s) => (solve(&cfg, &s, true)?, true),
        Command::Sample(s) => sample(&cfg, &s)?,
        Command::Spectrum(r) => (spectrum_table(&cfg, &r)?, true),
        Command::Verify(v) => verify(&cfg, &v)?,
        Command::Config => {
            serde_json::to_writer_pretty(&mut out, &cfg)?;
            writeln!(out)?;
            out.flush()?;
            return Ok(true);
        }
    };
    table.write(&mut out, cli.format)?;
    out.flush()?;
    Ok(ok)
}

fn check_range(r: &RangeArgs) -> Result<()> {
    if r.from > r.to {
        bail!("empty range {}..{}", r.from, r.to);
    }
    Ok(())
}

fn radii(cfg: &Config, r: &RangeArgs) -> Result<Table> {
    check_range(r)?;
    let f = cfg.filtration()?;
    let mut t = Table::new(&["n", "radius", "radius_float", "ramification_prime"]);
    for n in r.from..=r.to {
        t.push(vec![
            Value::from(n),
            Value::String(format_ratio(&f.radius(n)?)),
            num(f.radius_f64(n)?),
            Value::from(f.ramification_prime(n)?),
        ]);
    }
    Ok(t)
}

fn kernel(cfg: &Config, k: &KernelArgs) -> Result<Table> {
    let sym = cfg.symbol()?;
    let f = sym.filtration().clone();
    let positions: Vec<(f64, RadialPosition)> = match &k.points {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let pts: Vec<Vec<CoordJson>> = serde_json::from_str(&text).context("points file")?;
            let cap = f.level_cap() - 1;
            let wide = Window::new(cap, -cap)?;
            pts.iter()
                .map(|c| {
                    let x = SAdicPoint::from_json(f.clone(), c, wide)?;
                    Ok((x.norm_f64(), x.radial_position()))
                })
                .collect::<Result<_>>()?
        }
        None => {
            if k.from > k.to {
                bail!("empty level range {}..{}", k.from, k.to);
            }
            let mut v = vec![(0.0, RadialPosition::Origin)];
            for n in k.from..=k.to {
                v.push((f.radius_f64(n)?, RadialPosition::Sphere(n)));
            }
            v
        }
    };
    let mut t = Table::new(&["x_norm", "t", "Z", "tail_bound", "levels_used"]);
    for &time in &k.t {
        for &(norm, pos) in &positions {
            let z = heat_kernel_at(&sym, pos, time, cfg.eps)?;
            t.push(vec![num(norm), num(time), num(z.value), num(z.tail_bound), Value::from(z.levels_used)]);
        }
    }
    Ok(t)
}

fn read_function(cfg: &Config, path: &PathBuf) -> Result<TestFunction> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: FunctionFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(TestFunction::from_file(cfg.filtration()?, &file)?)
}

fn write_function(path: &PathBuf, f: &TestFunction) -> Result<()> {
    let w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(w, &f.to_file())?;
    Ok(())
}

fn solve(cfg: &Config, s: &SolveArgs, duhamel: bool) -> Result<Table> {
    let sym = cfg.symbol()?;
    let u0 = read_function(cfg, &s.input)?;
    let source = match (&s.source, duhamel) {
        (Some(p), true) => Some(read_function(cfg, p)?),
        (None, true) => bail!("--duhamel needs --source"),
        (Some(_), false) => bail!("--source given without --duhamel"),
        (None, false) => None,
    };
    if let Some(g) = &source {
        if (g.support_level(), g.constancy_level()) != (u0.support_level(), u0.constancy_level()) {
            bail!("source and initial function live on different windows");
        }
    }
    std::fs::create_dir_all(&s.out_dir)?;
    let field = Field::new(&sym, &u0)?;
    let mut t = Table::new(&["t", "file", "l2_norm", "integral_re", "integral_im", "exterior_mass", "tail_bound"]);
    for (i, &time) in s.t.iter().enumerate() {
        if !(time >= 0.0) || !time.is_finite() {
            bail!("times must be finite and >= 0, got {time}");
        }
        let (u, tail, ext) = match &source {
            _ if time == 0.0 => (u0.clone(), 0.0, 0.0),
            None => {
                let ev = field.evolve(time)?;
                let view = ev.on_window(cfg.eps)?;
                (view.function, view.tail_bound, ev.exterior_mass(cfg.eps)?.value)
            }
            Some(g) => {
                let r = duhamel_solve(&sym, &u0, |_| Ok(g.clone()), time, s.steps, cfg.eps)?;
                (r.solution, r.tail_bound, f64::NAN)
            }
        };
        let path = s.out_dir.join(format!("u_{i}.json"));
        write_function(&path, &u)?;
        let integral: Complex<f64> = u.integral();
        t.push(vec![
            num(time),
            Value::String(path.display().to_string()),
            num(u.norm_l2()),
            num(integral.re),
            num(integral.im),
            if ext.is_nan() { Value::Null } else { num(ext) },
            num(tail),
        ]);
    }
    Ok(t)
}

fn sample(cfg: &Config, s: &SampleArgs) -> Result<(Table, bool)> {
    if s.steps == 0 || !(s.t > 0.0) || !s.t.is_finite() {
        bail!("need t > 0 and at least one step");
    }
    let sym = cfg.symbol()?;
    let w = cfg.sample_window.window()?;
    let grid: Vec<f64> = (0..=s.steps).map(|i| s.t * i as f64 / s.steps as f64).collect();
    let sampler = PathSampler::new(&sym, &grid, w, cfg.eps)?;
    let paths = sampler.sample_many(cfg.seed, s.paths)?;
    let mut csv = BufWriter::new(
        File::create(&s.trajectories).with_context(|| format!("creating {}", s.trajectories.display()))?,
    );
    write_trajectories_csv(&mut csv, sym.filtration().primes(), &paths)?;
    csv.flush()?;
    let redraws: u64 = paths.iter().map(|p| p.redraws).sum();
    if redraws > 0 {
        eprintln!("note: {redraws} increment draws fell outside the sample window and were redrawn");
    }
    let reports = trajectory_stats(&sym, &paths, w, cfg.eps, s.alpha_level)?;
    let ok = reports.iter().all(|r| r.pass);
    let mut t = Table::new(&["test", "N", "statistic", "p_value", "pass"]);
    for r in reports {
        t.push(vec![Value::String(r.test), Value::from(r.n), num(r.statistic), num(r.p_value), Value::from(r.pass)]);
    }
    Ok((t, ok))
}

fn spectrum_table(cfg: &Config, r: &RangeArgs) -> Result<Table> {
    check_range(r)?;
    let sym = cfg.symbol()?;
    let mut t = Table::new(&["level", "radius", "eigenvalue"]);
    for e in spectrum(&sym, r.from, r.to)? {
        t.push(vec![Value::from(e.level), num(sym.filtration().radius_f64(e.level)?), num(e.eigenvalue)]);
    }
    Ok(t)
}

fn verify(cfg: &Config, v: &VerifyArgs) -> Result<(Table, bool)> {
    let vc = cfg.verify_config(v.samples)?;
    let names: Vec<&str> = if v.suite == "all" { SUITES.to_vec() } else { vec![v.suite.as_str()] };
    let mut t = Table::new(&["suite", "check", "value", "limit", "pass"]);
    let mut ok = true;
    for name in names {
        let rep = run_suite(name, &vc)?;
        ok &= rep.pass;
        for c in rep.checks {
            t.push(vec![Value::String(c.suite), Value::String(c.name), num(c.value), num(c.limit), Value::from(c.pass)]);
        }
    }
    Ok((t, ok))
}
