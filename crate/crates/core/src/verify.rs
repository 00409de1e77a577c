//! Named verification suites over the invariants of every module.

use std::sync::Arc;

use num_complex::Complex;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filtration::{is_prime, Filtration, GeneralSpec};
use crate::funcspace::TestFunction;
use crate::markov::{condition_checks, path_rng, IncrementSampler, PathSampler};
use crate::sadic::{sample_uniform_ball, RadialPosition, SAdicPoint, Window};
use crate::spectral::{
    duhamel_solve, evolve, heat_kernel_at, heat_kernel_mass, kernel_estimates_check, radial_convolution, spectrum,
    SpectralField, SymbolAlpha,
};
use crate::stats::{ks_one_sample, ks_two_sample, within_binomial_sigma};

pub const SUITES: &[&str] =
    &["filtration", "sadic", "fourier", "kernel", "spectral", "semigroup", "markov", "duhamel", "generalization"];

/// Parameters shared by all suites.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    pub primes: Vec<u64>,
    pub alpha: f64,
    pub window: Window,
    pub eps: f64,
    pub seed: u64,
    /// Sample count for the statistical checks.
    pub samples: usize,
    pub level_cap: i64,
    pub dimension_cap: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            primes: vec![2, 3],
            alpha: 1.0,
            window: Window { support: 3, resolution: -3 },
            eps: 1e-12,
            seed: 20240601,
            samples: 100_000,
            level_cap: crate::filtration::DEFAULT_LEVEL_CAP,
            dimension_cap: crate::filtration::DEFAULT_DIMENSION_CAP,
        }
    }
}

impl VerifyConfig {
    pub fn filtration(&self) -> Result<Arc<Filtration>> {
        Ok(Arc::new(
            Filtration::from_primes(&self.primes)?
                .with_level_cap(self.level_cap)
                .with_dimension_cap(self.dimension_cap),
        ))
    }

    pub fn symbol(&self) -> Result<SymbolAlpha<f64>> {
        SymbolAlpha::new(self.filtration()?, self.alpha)
    }
}

/// One pass/fail line: `value` compared against `limit`.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub pass: bool,
}

struct Sink {
    suite: &'static str,
    checks: Vec<Check>,
}

impl Sink {
    fn new(suite: &'static str) -> Self {
        Sink { suite, checks: Vec::new() }
    }

    /// Passes when `value <= limit`.
    fn at_most(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        let pass = value <= limit;
        self.push(name, value, limit, pass);
    }

    /// Passes when `value >= limit`.
    fn at_least(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        let pass = value >= limit;
        self.push(name, value, limit, pass);
    }

    fn flag(&mut self, name: impl Into<String>, ok: bool) {
        self.push(name, if ok { 1.0 } else { 0.0 }, 1.0, ok);
    }

    fn push(&mut self, name: impl Into<String>, value: f64, limit: f64, pass: bool) {
        self.checks.push(Check { suite: self.suite.to_string(), name: name.into(), value, limit, pass });
    }

    fn finish(self) -> SuiteReport {
        let pass = self.checks.iter().all(|c| c.pass);
        SuiteReport { suite: self.suite.to_string(), checks: self.checks, pass }
    }
}

pub fn run_suite(name: &str, cfg: &VerifyConfig) -> Result<SuiteReport> {
    match name {
        "filtration" => filtration_suite(cfg),
        "sadic" => sadic_suite(cfg),
        "fourier" => fourier_suite(cfg),
        "kernel" => kernel_suite(cfg),
        "spectral" => spectral_suite(cfg),
        "semigroup" => semigroup_suite(cfg),
        "markov" => markov_suite(cfg),
        "duhamel" => duhamel_suite(cfg),
        "generalization" => generalization_suite(cfg),
        other => Err(Error::InvalidArgument(format!("unknown suite {other:?}; known: {}", SUITES.join(", ")))),
    }
}

pub fn run_all(cfg: &VerifyConfig) -> Result<Vec<SuiteReport>> {
    SUITES.iter().map(|s| run_suite(s, cfg)).collect()
}

fn random_function(f: &Arc<Filtration>, k: i64, l: i64, rng: &mut impl Rng) -> Result<TestFunction<f64>> {
    let dim = crate::sadic::CosetGrid::new(f.clone(), k, l)?.len();
    let v = (0..dim).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    TestFunction::new(f.clone(), k, l, v)
}

fn max_diff(a: &TestFunction<f64>, b: &TestFunction<f64>) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn filtration_suite(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let f = cfg.filtration()?;
    let mut s = Sink::new("filtration");
    // lcm of prime powers from S, folded over the sorted powers
    let mut powers: Vec<(u128, u64)> = Vec::new();
    for &p in &cfg.primes {
        let mut q = p as u128;
        while q < 1u128 << 100 {
            powers.push((q, p));
            q *= p as u128;
        }
    }
    powers.sort_unstable();
    let top = 20.min(cfg.level_cap - 1);
    let mut lcm = 1u128;
    let mut distinct = vec![1u128];
    for (q, p) in powers {
        if distinct.len() > top as usize {
            break;
        }
        if lcm % q != 0 {
            lcm *= p as u128;
            distinct.push(lcm);
        }
    }
    let mut mismatches = 0;
    for n in 0..=top {
        let r = f.radius_int(n)?;
        if r.to_string() != distinct[n as usize].to_string() {
            mismatches += 1;
        }
    }
    s.at_most("radii match the lcm sequence", mismatches as f64, 0.0);
    let mut bad = 0;
    for n in -top..=top {
        let q = f.radius(n)? / f.radius(n - 1)?;
        let q1 = f.radius(1 - n)? / f.radius(-n)?;
        let inv = f.radius(n)? * f.radius(-n)?;
        let prime = q.denom().is_one() && q.numer().to_string().parse::<u64>().is_ok_and(is_prime);
        if q != q1 || !inv.is_one() || !prime {
            bad += 1;
        }
    }
    s.at_most("q(n) = q(1-n) prime and r_n r_-n = 1", bad as f64, 0.0);
    Ok(s.finish())
}

fn sadic_suite(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let f = cfg.filtration()?;
    let w = cfg.window;
    let mut s = Sink::new("sadic");
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let (mut ultra, mut additive, mut annihil) = (0, 0, 0);
    for _ in 0..500 {
        let x = sample_uniform_ball(&f, w.support, w, &mut rng)?;
        let y = sample_uniform_ball(&f, w.support, w, &mut rng)?;
        let z = sample_uniform_ball(&f, w.support, w, &mut rng)?;
        let dxz = x.distance(&z)?;
        let m = x.distance(&y)?.max(y.distance(&z)?);
        if dxz > m {
            ultra += 1;
        }
        if x.add(&y)?.char_phase() != x.char_phase().add(&y.char_phase()) {
            additive += 1;
        }
    }
    // the annihilator of B_n is B_{-n}
    let n = (w.support / 2).max(0);
    let wx = Window::new(n, -n)?;
    for _ in 0..200 {
        let xi = sample_uniform_ball(&f, -n, wx, &mut rng)?;
        let x = sample_uniform_ball(&f, n, wx, &mut rng)?;
        if !SAdicPoint::pairing(&xi, &x)?.is_trivial() {
            annihil += 1;
        }
    }
    s.at_most("ultrametric inequality violations", ultra as f64, 0.0);
    s.at_most("character additivity violations", additive as f64, 0.0);
    s.at_most("annihilator violations", annihil as f64, 0.0);
    Ok(s.finish())
}

fn fourier_suite(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let f = cfg.filtration()?;
    let w = cfg.window;
    let mut s = Sink::new("fourier");
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed ^ 0xF0);
    let (mut pars, mut inv, mut direct) = (0.0f64, 0.0f64, 0.0f64);
    for trial in 0..8 {
        let k = w.support - (trial % 2);
        let l = w.resolution + (trial / 2) % 2;
        let g = random_function(&f, k, l, &mut rng)?;
        let gh = g.fourier()?;
        let n2 = g.norm_l2();
        pars = pars.max((gh.norm_l2() - n2).abs() / n2);
        inv = inv.max(max_diff(&gh.inverse_fourier()?, &g) / g.max_abs());
        if g.dimension() <= 512 {
            direct = direct.max(max_diff(&g.fourier_direct()?, &gh) / gh.max_abs());
        }
    }
    s.at_most("Parseval relative error", pars, 1e-12);
    s.at_most("double inversion relative error", inv, 1e-12);
    s.at_most("factored vs direct transform", direct, 1e-12);
    Ok(s.finish())
}

fn kernel_suite(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let sym = cfg.symbol()?;
    let mut s = Sink::new("kernel");
    for t in [0.01, 1.0, 100.0] {
        let m = heat_kernel_mass(&sym, t, 1e-11)?;
        s.at_most(format!("|mass - 1| at t={t}"), (m.value - 1.0).abs(), 1e-9);
    }
    let mut samples = vec![];
    for t in [0.01, 0.1, 1.0, 10.0, 100.0] {
        samples.push((RadialPosition::Origin, t));
        for n in -6..=6 {
            samples.push((RadialPosition::Sphere(n), t));
        }
    }
    let rep = kernel_estimates_check(&sym, &samples, cfg.eps)?;
    s.at_most("estimate violations", rep.violations as f64, 0.0);
    let mut not_positive = 0;
    let mut not_decreasing = 0;
    for t in [0.1, 1.0] {
        let z: Vec<f64> = (-6..=6)
            .map(|n| Ok(heat_kernel_at(&sym, RadialPosition::Sphere(n), t, cfg.eps)?.value))
            .collect::<Result<_>>()?;
        not_positive += z.iter().filter(|&&v| !(v > 0.0)).count();
        not_decreasing += z.windows(2).filter(|p| p[1] > p[0] * (1.0 + 1e-12)).count();
    }
    s.at_most("non-positive kernel values", not_positive as f64, 0.0);
    s.at_most("increases along the norm ladder", not_decreasing as f64, 0.0);
    Ok(s.finish())
}

/// `e_n` on the window: the inverse transform of `Δ_{S_n}` on the dual grid.
pub fn window_eigenfunction(f: &Arc<Filtration>, window: Window, n: i64) -> Result<TestFunction<f64>> {
    let dual = crate::sadic::CosetGrid::new(f.clone(), -window.resolution, -window.support)?;
    let vals = (0..dual.len())
        .map(|i| Ok(if dual.sphere_level(i)? == Some(n) { Complex::new(1.0, 0.0) } else { Complex::new(0.0, 0.0) }))
        .collect::<Result<Vec<_>>>()?;
    TestFunction::from_grid(Arc::new(dual), vals)?.inverse_fourier()
}

fn spectral_suite(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let sym = cfg.symbol()?;
    let f = sym.filtration().clone();
    let w = cfg.window;
    let mut s = Sink::new("spectral");
    let mut worst = 0.0f64;
    for n in (1 - w.support)..=(-w.resolution) {
        let e = window_eigenfunction(&f, w, n)?;
        let d = SpectralField::new(&sym, &e)?.apply_dalpha()?.on_window(cfg.eps)?.function;
        let lam = f.radius_f64(n)?.powf(cfg.alpha);
        let res = d.sub(&e.scale(Complex::new(lam, 0.0)))?.norm_l2() / e.norm_l2();
        worst = worst.max(res);
    }
    s.at_most("eigen-residual over window levels", worst, 1e-10);
    let spec = spectrum(&sym, 1, 3)?;
    let mut err = 0.0f64;
    for e in &spec {
        err = err.max((e.eigenvalue - f.radius_f64(e.level)?.powf(cfg.alpha)).abs());
    }
    s.at_most("spectrum listing vs radii", err, 1e-12);
    Ok(s.finish())
}

fn semigroup_suite(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let sym = cfg.symbol()?;
    let f = sym.filtration().clone();
    let w = cfg.window;
    let mut s = Sink::new("semigroup");
    // kernel level: Z(t) ∗ Z(s) against Z(t+s), radially
    let (lo, hi) = (-50.max(2 - cfg.level_cap), 60.min(cfg.level_cap - 2));
    let table = |t: f64| -> Result<Vec<f64>> {
        (lo..=hi).map(|n| Ok(heat_kernel_at(&sym, RadialPosition::Sphere(n), t, 1e-16)?.value)).collect()
    };
    let mut worst = 0.0f64;
    for (t, u) in [(0.1, 0.1), (0.1, 1.0), (1.0, 0.1), (1.0, 1.0)] {
        let (a, b) = (table(t)?, table(u)?);
        let mut at = vec![None];
        at.extend((w.resolution + 1..=w.support).map(Some));
        for j in at {
            let conv = radial_convolution(&f, &a, &b, lo, j)?;
            let pos = j.map_or(RadialPosition::Origin, RadialPosition::Sphere);
            let z = heat_kernel_at(&sym, pos, t + u, 1e-14)?.value;
            worst = worst.max((conv - z).abs());
        }
    }
    s.at_most("sup |Z(t+s) - Z(t)*Z(s)|", worst, 1e-8);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed ^ 0x5E);
    let g = random_function(&f, w.support, w.resolution, &mut rng)?;
    let field = SpectralField::new(&sym, &g)?;
    let mut worst = 0.0f64;
    for (t, u) in [(0.1, 0.1), (0.1, 1.0), (1.0, 0.1), (1.0, 1.0)] {
        let two = field.evolve(u)?.evolve(t)?.on_window(cfg.eps)?.function;
        let one = field.evolve(t + u)?.on_window(cfg.eps)?.function;
        worst = worst.max(max_diff(&two, &one));
    }
    s.at_most("evolve(evolve(f,s),t) vs evolve(f,s+t)", worst, 1e-8);
    let mut norms = vec![g.norm_l2()];
    for t in [0.1, 0.5, 1.0, 2.0] {
        norms.push(evolve(&sym, &g, t, cfg.eps)?.function.norm_l2());
    }
    s.flag("L2 norm non-increasing", norms.windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-12)));
    Ok(s.finish())
}

fn level_index(x: &SAdicPoint) -> Result<i64> {
    Ok(x.sphere_level()?.unwrap_or(x.window().resolution))
}

/// Window used by the statistical checks: wide enough that the truncated
/// tail of the increment law is negligible at `samples` draws.
pub fn markov_window(cfg: &VerifyConfig) -> Window {
    Window { support: 16.min(cfg.level_cap - 2), resolution: -(8.min(cfg.level_cap - 2)) }
}

fn markov_suite(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let sym = cfg.symbol()?;
    let w = markov_window(cfg);
    let n = cfg.samples;
    let mut s = Sink::new("markov");
    let sampler = IncrementSampler::new(&sym, 1.0, w, cfg.eps)?;
    let draws: Vec<SAdicPoint> = (0..n as u64)
        .into_par_iter()
        .map(|i| Ok(sampler.sample(&mut path_rng(cfg.seed, i))?.point))
        .collect::<Result<_>>()?;
    let levels: Vec<i64> = draws.iter().map(level_index).collect::<Result<_>>()?;
    let cond = sampler.conditioned_cdf();
    let ks = ks_one_sample("increment levels", &levels, w.resolution, &cond, 0.01);
    s.at_least("increment-level KS p-value", ks.p_value, 0.01);
    let mut worst_z = 0.0f64;
    for target in [-2i64, 0, 2, 4] {
        let hits = levels.iter().filter(|&&l| l <= target).count();
        let (z, _) = within_binomial_sigma(hits, n, cond[(target - w.resolution) as usize], 3.0);
        worst_z = worst_z.max(z);
    }
    s.at_most("empirical CDF within binomial sigmas", worst_z, 3.0);
    // symmetry: X against -X on independent halves
    let half = n / 2;
    let a: Vec<i64> = draws[..half].iter().map(|x| phase_bucket(x, 64)).collect();
    let b: Vec<i64> = draws[half..].iter().map(|x| phase_bucket(&x.neg(), 64)).collect();
    s.at_least("sign-flip KS p-value", ks_two_sample("sign flip", &a, &b, 0.01).p_value, 0.01);
    let sines: Vec<f64> = draws.iter().map(|x| (2.0 * std::f64::consts::PI * phase_f64(x)).sin()).collect();
    let mean = sines.iter().sum::<f64>() / n as f64;
    let var = sines.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    s.at_most("|mean sin(2π phase)| in standard errors", mean.abs() / (var / n as f64).sqrt().max(1e-300), 4.0);
    // Chapman–Kolmogorov: two steps of 0.5 against one step of 1
    let two = PathSampler::new(&sym, &[0.0, 0.5, 1.0], w, cfg.eps)?.sample_many(cfg.seed ^ 0xC0, n as u64)?;
    let end: Vec<i64> = two.iter().map(|tr| level_index(tr.points.last().unwrap())).collect::<Result<_>>()?;
    let one: Vec<i64> = (0..n as u64)
        .into_par_iter()
        .map(|i| level_index(&sampler.sample(&mut path_rng(cfg.seed ^ 0xC1, i))?.point))
        .collect::<Result<_>>()?;
    s.at_least("Chapman–Kolmogorov two-sample KS p-value", ks_two_sample("CK", &end, &one, 0.01).p_value, 0.01);
    let rep = condition_checks(&sym, 1.0, 0, &[2, 4, 6, 8, 10], &[1e-1, 1e-2, 1e-3, 1e-4], w.support, cfg.eps)?;
    s.flag("condition L(B) ladder", rep.l_rows.iter().all(|r| r.ok) && rep.l_monotone);
    s.flag("condition M(B) ladder", rep.m_rows.iter().all(|r| r.ok) && rep.m_ratio_stable);
    Ok(s.finish())
}

fn phase_f64(x: &SAdicPoint) -> f64 {
    crate::scalar::ratio_to_f64(x.char_phase().phase())
}

fn phase_bucket(x: &SAdicPoint, buckets: i64) -> i64 {
    ((phase_f64(x) * buckets as f64).floor() as i64).clamp(0, buckets - 1)
}

/// Errors of the Duhamel solver on an eigenmode with constant source.
pub fn duhamel_errors(sym: &SymbolAlpha<f64>, window: Window, panels: &[usize], eps: f64) -> Result<Vec<f64>> {
    let f = sym.filtration();
    let n = -window.resolution;
    let e = window_eigenfunction(f, window, n)?;
    let lam = f.radius_f64(n)?.powf(sym.alpha());
    let (tf, c) = (0.5, 0.8);
    let want = (-lam * tf).exp() + c * (1.0 - (-lam * tf).exp()) / lam;
    let target = e.scale(Complex::new(want, 0.0));
    let src = |_t: f64| Ok(e.scale(Complex::new(c, 0.0)));
    panels
        .iter()
        .map(|&m| {
            let r = duhamel_solve(sym, &e, src, tf, m, eps)?;
            Ok(max_diff(&r.solution, &target) / target.max_abs())
        })
        .collect()
}

fn duhamel_suite(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let sym = cfg.symbol()?;
    let mut s = Sink::new("duhamel");
    let w = Window::new(1, -1)?;
    let errs = duhamel_errors(&sym, w, &[4, 8, 16, 64], cfg.eps)?;
    s.at_most("relative error at 64 panels", errs[3], 1e-6);
    for i in 0..2 {
        let ratio = errs[i] / errs[i + 1];
        s.push(format!("convergence ratio {}->{} panels", 4 << i, 8 << i), ratio, 22.0, (10.0..=22.0).contains(&ratio));
    }
    Ok(s.finish())
}

fn generalization_suite(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut s = Sink::new("generalization");
    let p = cfg.primes[0];
    let single = SymbolAlpha::new(Arc::new(Filtration::from_primes(&[p])?), cfg.alpha)?;
    let general = SymbolAlpha::new(Arc::new(Filtration::general(GeneralSpec::constant(p))?), cfg.alpha)?;
    let mut differ = 0;
    for t in [0.01, 1.0, 100.0] {
        let mut pos = vec![RadialPosition::Origin];
        pos.extend((-6..=6).map(RadialPosition::Sphere));
        for x in pos {
            let a = heat_kernel_at(&single, x, t, cfg.eps)?;
            let b = heat_kernel_at(&general, x, t, cfg.eps)?;
            if a.value.to_bits() != b.value.to_bits() || a.tail_bound.to_bits() != b.tail_bound.to_bits() {
                differ += 1;
            }
        }
    }
    s.at_most("constant-ramification kernel differs from single prime", differ as f64, 0.0);
    let dim = 2u32;
    let tb = Filtration::taibleson(p, dim)?;
    let mut bad = 0;
    for l in -4i64..=4 {
        let want = BigRational::from_integer(p.into()).pow((l * dim as i64) as i32);
        if tb.radius(tb.expanded_level(l)?)? != want {
            bad += 1;
        }
    }
    s.at_most("expanded radii differ from p^(n l)", bad as f64, 0.0);
    let tsym = SymbolAlpha::new(Arc::new(tb), cfg.alpha)?;
    for t in [0.01, 1.0, 100.0] {
        let m = heat_kernel_mass(&tsym, t, 1e-11)?;
        s.at_most(format!("expanded filtration |mass - 1| at t={t}"), (m.value - 1.0).abs(), 1e-9);
    }
    Ok(s.finish())
}
