//! Run configuration: a JSON file, then environment variables, then flags.

use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::Args;
use sadic_heat::filtration::{DEFAULT_DIMENSION_CAP, DEFAULT_LEVEL_CAP};
use sadic_heat::{Filtration, GeneralSpec, PrimeSet, Symbol, Window};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub support_level: i64,
    pub resolution_level: i64,
}

impl WindowConfig {
    pub fn window(&self) -> Result<Window> {
        Ok(Window::new(self.support_level, self.resolution_level)?)
    }
}

/// Alternative filtrations; the default is the S-adic one built from `primes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiltrationConfig {
    General(GeneralSpec),
    Taibleson { p: u64, dim: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub primes: Vec<u64>,
    pub alpha: f64,
    pub window: WindowConfig,
    /// Window for the sampled process, wide enough to hold its heavy tail.
    pub sample_window: WindowConfig,
    pub eps: f64,
    pub seed: u64,
    pub level_cap: i64,
    pub dimension_cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filtration: Option<FiltrationConfig>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            primes: vec![2, 3],
            alpha: 1.0,
            window: WindowConfig { support_level: 3, resolution_level: -3 },
            sample_window: WindowConfig { support_level: 16, resolution_level: -8 },
            eps: 1e-12,
            seed: 1,
            level_cap: DEFAULT_LEVEL_CAP,
            dimension_cap: DEFAULT_DIMENSION_CAP,
            filtration: None,
        }
    }
}

/// Partial configuration as read from a file; missing keys keep defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    primes: Option<Vec<u64>>,
    alpha: Option<f64>,
    window: Option<WindowConfig>,
    sample_window: Option<WindowConfig>,
    eps: Option<f64>,
    seed: Option<u64>,
    level_cap: Option<i64>,
    dimension_cap: Option<usize>,
    filtration: Option<FiltrationConfig>,
}

/// Global options; each also reads `SADIC_<KEY>` from the environment.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON configuration file
    #[arg(long, global = true, env = "SADIC_CONFIG")]
    pub config: Option<std::path::PathBuf>,
    /// Comma-separated primes of S
    #[arg(long, global = true, env = "SADIC_PRIMES", value_delimiter = ',')]
    pub primes: Option<Vec<u64>>,
    #[arg(long, global = true, env = "SADIC_ALPHA")]
    pub alpha: Option<f64>,
    /// Support level k of the function window
    #[arg(long, global = true, env = "SADIC_SUPPORT", allow_hyphen_values = true)]
    pub support: Option<i64>,
    /// Resolution level l of the function window
    #[arg(long, global = true, env = "SADIC_RESOLUTION", allow_hyphen_values = true)]
    pub resolution: Option<i64>,
    #[arg(long, global = true, env = "SADIC_SAMPLE_SUPPORT", allow_hyphen_values = true)]
    pub sample_support: Option<i64>,
    #[arg(long, global = true, env = "SADIC_SAMPLE_RESOLUTION", allow_hyphen_values = true)]
    pub sample_resolution: Option<i64>,
    #[arg(long, global = true, env = "SADIC_EPS")]
    pub eps: Option<f64>,
    #[arg(long, global = true, env = "SADIC_SEED")]
    pub seed: Option<u64>,
    #[arg(long, global = true, env = "SADIC_LEVEL_CAP")]
    pub level_cap: Option<i64>,
    #[arg(long, global = true, env = "SADIC_DIMENSION_CAP")]
    pub dimension_cap: Option<usize>,
}

impl Config {
    pub fn load(args: &ConfigArgs) -> Result<Self> {
        let mut cfg = Config::default();
        if let Some(path) = &args.config {
            cfg.apply_file(path)?;
        }
        let set = |dst: &mut i64, v: Option<i64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        if let Some(p) = &args.primes {
            cfg.primes = p.clone();
        }
        if let Some(a) = args.alpha {
            cfg.alpha = a;
        }
        set(&mut cfg.window.support_level, args.support);
        set(&mut cfg.window.resolution_level, args.resolution);
        set(&mut cfg.sample_window.support_level, args.sample_support);
        set(&mut cfg.sample_window.resolution_level, args.sample_resolution);
        if let Some(e) = args.eps {
            cfg.eps = e;
        }
        if let Some(s) = args.seed {
            cfg.seed = s;
        }
        set(&mut cfg.level_cap, args.level_cap);
        if let Some(d) = args.dimension_cap {
            cfg.dimension_cap = d;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let f: ConfigFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        macro_rules! take {
            ($($k:ident),*) => {$(if let Some(v) = f.$k { self.$k = v; })*};
        }
        take!(primes, alpha, window, sample_window, eps, seed, level_cap, dimension_cap);
        if f.filtration.is_some() {
            self.filtration = f.filtration;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        PrimeSet::new(self.primes.iter().copied())?;
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            bail!("alpha must be positive, got {}", self.alpha);
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            bail!("eps must be positive, got {}", self.eps);
        }
        if self.level_cap < 2 {
            bail!("level_cap must be at least 2");
        }
        self.window.window().context("window")?;
        self.sample_window.window().context("sample_window")?;
        self.filtration()?;
        Ok(())
    }

    pub fn filtration(&self) -> Result<Arc<Filtration>> {
        let f = match &self.filtration {
            None => Filtration::from_primes(&self.primes)?,
            Some(FiltrationConfig::General(spec)) => Filtration::general(spec.clone())?,
            Some(FiltrationConfig::Taibleson { p, dim }) => Filtration::taibleson(*p, *dim)?,
        };
        Ok(Arc::new(f.with_level_cap(self.level_cap).with_dimension_cap(self.dimension_cap)))
    }

    pub fn symbol(&self) -> Result<Symbol> {
        Ok(Symbol::new(self.filtration()?, self.alpha)?)
    }

    pub fn verify_config(&self, samples: usize) -> Result<sadic_heat::verify::VerifyConfig> {
        if self.filtration.is_some() {
            bail!("verification suites run on the S-adic filtration given by primes");
        }
        Ok(sadic_heat::verify::VerifyConfig {
            primes: self.primes.clone(),
            alpha: self.alpha,
            window: self.window.window()?,
            eps: self.eps,
            seed: self.seed,
            samples,
            level_cap: self.level_cap,
            dimension_cap: self.dimension_cap,
        })
    }
}
