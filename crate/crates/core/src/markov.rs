//! The Markov jump process generated by the heat semigroup.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filtration::Filtration;
use crate::sadic::{sample_uniform_sphere, RadialPosition, SAdicPoint, Window};
use crate::scalar::Real;
use crate::spectral::{radial_integral, CertifiedValue, RadialWeight, SymbolAlpha};
use crate::stats::{ks_one_sample, mean_zero_test, StatReport};

/// The ball `center + B_level`, of measure `r_level`.
#[derive(Debug, Clone)]
pub struct BallSpec {
    pub center: SAdicPoint,
    pub level: i64,
}

impl BallSpec {
    pub fn new(center: SAdicPoint, level: i64) -> Result<Self> {
        center.filtration().check_level(level)?;
        Ok(BallSpec { center, level })
    }

    pub fn measure(&self) -> Result<f64> {
        self.center.filtration().radius_f64(self.level)
    }

    /// Whether `x` lies in the ball; `x - center` must be resolved modulo `B_level`.
    pub fn contains(&self, x: &SAdicPoint) -> Result<bool> {
        let d = x.sub(&self.center)?;
        if d.window().resolution > self.level {
            return Err(Error::Resolution(format!(
                "point known modulo B_{}, ball needs B_{}",
                d.window().resolution,
                self.level
            )));
        }
        Ok(d.sphere_level()?.is_none_or(|s| s <= self.level))
    }

    pub fn translate(&self, z: &SAdicPoint) -> Result<Self> {
        Ok(BallSpec { center: self.center.add(z)?, level: self.level })
    }
}

/// `P(t, x, B) = ∫_B Z(x - y, t) dy`; at `t = 0` the indicator of `B`.
///
/// For `t > 0` this is `r_L ∫_{B_{-L}} e^{-t‖ξ‖^α} χ(-(x - c)ξ) dξ` with `B = c + B_L`.
pub fn transition_p<T: Real>(
    sym: &SymbolAlpha<T>,
    t: T,
    x: &SAdicPoint,
    ball: &BallSpec,
    eps: T,
) -> Result<CertifiedValue<T>> {
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be >= 0, got {t}")));
    }
    if t == T::zero() {
        let inside = ball.contains(x)?;
        return Ok(CertifiedValue::exact(if inside { T::one() } else { T::zero() }));
    }
    let d = x.sub(&ball.center)?;
    if d.window().resolution > ball.level {
        return Err(Error::Resolution(format!(
            "point known modulo B_{}, ball needs B_{}",
            d.window().resolution,
            ball.level
        )));
    }
    transition_p_radial(sym, t, d.radial_position(), ball.level, eps)
}

/// [`transition_p`] with the displacement `x - c` given by its radial position.
pub fn transition_p_radial<T: Real>(
    sym: &SymbolAlpha<T>,
    t: T,
    displacement: RadialPosition,
    level: i64,
    eps: T,
) -> Result<CertifiedValue<T>> {
    let f = sym.filtration();
    let r_l = f.radius_real::<T>(level)?;
    let w = RadialWeight::heat(sym.alpha(), t)?;
    let v = radial_integral(f, &w, displacement, Some(-level), eps / r_l.max(T::one()))?;
    Ok(v.scale(r_l))
}

/// `P(‖X_t‖ ≤ r_n) = r_n ∫_{B_{-n}} e^{-t‖ξ‖^α} dξ`.
pub fn radial_cdf<T: Real>(sym: &SymbolAlpha<T>, t: T, n: i64, eps: T) -> Result<CertifiedValue<T>> {
    if !(t > T::zero()) {
        return Err(Error::InvalidArgument(format!("radial law needs t > 0, got {t}")));
    }
    transition_p_radial(sym, t, RadialPosition::Origin, n, eps)
}

/// Inverse-CDF sampler for increments `X_t` truncated to a window: the
/// level is drawn from the radial law, then a point uniformly on that
/// sphere. Levels at or below the resolution give the zero point; draws
/// beyond the support are redrawn and counted.
#[derive(Debug, Clone)]
pub struct IncrementSampler {
    filtration: Arc<Filtration>,
    window: Window,
    cdf: Vec<f64>,
    exterior: CertifiedValue<f64>,
}

/// One sampled increment and the level it was drawn from (`None` for the zero point).
#[derive(Debug, Clone)]
pub struct Increment {
    pub point: SAdicPoint,
    pub level: Option<i64>,
    pub redraws: u64,
}

impl IncrementSampler {
    pub fn new<T: Real>(sym: &SymbolAlpha<T>, t: T, window: Window, eps: T) -> Result<Self> {
        let f = sym.filtration();
        let cdf = (window.resolution..=window.support)
            .map(|n| Ok(radial_cdf(sym, t, n, eps)?.value.to_f64_lossy()))
            .collect::<Result<Vec<f64>>>()?;
        let top = radial_cdf(sym, t, window.support, eps)?;
        let inside = *cdf.last().expect("window has at least one level");
        if inside < 1e-6 {
            return Err(Error::WindowOverflow(format!(
                "window holds only {inside:e} of the increment law"
            )));
        }
        let exterior = CertifiedValue {
            value: (T::one() - top.value).to_f64_lossy().max(0.0),
            tail_bound: top.tail_bound.to_f64_lossy(),
            levels_used: top.levels_used,
        };
        Ok(IncrementSampler { filtration: f.clone(), window, cdf, exterior })
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// `P(‖X_t‖ ≤ r_n)` for `n` from the resolution to the support level.
    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// The CDF conditioned on staying inside the window.
    pub fn conditioned_cdf(&self) -> Vec<f64> {
        let top = *self.cdf.last().unwrap();
        self.cdf.iter().map(|c| c / top).collect()
    }

    /// Mass of the increment law outside `B_support`.
    pub fn exterior_mass(&self) -> CertifiedValue<f64> {
        self.exterior
    }

    /// Level drawn for a uniform variate `u`, or `None` if it falls beyond the window.
    pub fn level_for(&self, u: f64) -> Option<Option<i64>> {
        let top = *self.cdf.last().unwrap();
        if u > top {
            return None;
        }
        let i = self.cdf.partition_point(|&c| c < u);
        Some(if i == 0 { None } else { Some(self.window.resolution + i as i64) })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Increment> {
        let mut redraws = 0u64;
        loop {
            let u: f64 = rng.gen();
            match self.level_for(u) {
                None => {
                    redraws += 1;
                    if redraws > 1_000_000 {
                        return Err(Error::WindowOverflow("increment sampler failed to land in window".into()));
                    }
                }
                Some(None) => {
                    let point = SAdicPoint::zero(self.filtration.clone(), self.window)?;
                    return Ok(Increment { point, level: None, redraws });
                }
                Some(Some(n)) => {
                    let point = sample_uniform_sphere(&self.filtration, n, self.window, rng)?;
                    return Ok(Increment { point, level: Some(n), redraws });
                }
            }
        }
    }
}

/// Single increment `X_t` on a window.
pub fn sample_increment<T: Real, R: Rng + ?Sized>(
    sym: &SymbolAlpha<T>,
    t: T,
    window: Window,
    rng: &mut R,
    eps: T,
) -> Result<Increment> {
    IncrementSampler::new(sym, t, window, eps)?.sample(rng)
}

/// A sampled path of the process.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<SAdicPoint>,
    pub seed: u64,
    pub path: u64,
    pub redraws: u64,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.first() != Some(&0.0) {
        return Err(Error::InvalidArgument("time grid must start at 0".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Samplers for each distinct step of a grid.
pub struct PathSampler {
    grid: Vec<f64>,
    window: Window,
    filtration: Arc<Filtration>,
    samplers: HashMap<u64, IncrementSampler>,
}

impl PathSampler {
    pub fn new<T: Real>(sym: &SymbolAlpha<T>, grid: &[f64], window: Window, eps: T) -> Result<Self> {
        check_grid(grid)?;
        let mut samplers = HashMap::new();
        for w in grid.windows(2) {
            let dt = w[1] - w[0];
            if let std::collections::hash_map::Entry::Vacant(e) = samplers.entry(dt.to_bits()) {
                e.insert(IncrementSampler::new(sym, T::of(dt), window, eps)?);
            }
        }
        Ok(PathSampler { grid: grid.to_vec(), window, filtration: sym.filtration().clone(), samplers })
    }

    pub fn sampler_for(&self, dt: f64) -> Option<&IncrementSampler> {
        self.samplers.get(&dt.to_bits())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, seed: u64, path: u64) -> Result<Trajectory> {
        let mut x = SAdicPoint::zero(self.filtration.clone(), self.window)?;
        let mut points = vec![x.clone()];
        let mut redraws = 0;
        for w in self.grid.windows(2) {
            let inc = self.samplers[&(w[1] - w[0]).to_bits()].sample(rng)?;
            redraws += inc.redraws;
            x = x.add(&inc.point)?;
            points.push(x.clone());
        }
        Ok(Trajectory { times: self.grid.clone(), points, seed, path, redraws })
    }

    /// Path `i` is drawn from the ChaCha20 stream `i` of `seed`, so results
    /// do not depend on scheduling.
    pub fn sample_many(&self, seed: u64, count: u64) -> Result<Vec<Trajectory>> {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let mut rng = path_rng(seed, i);
                self.sample(&mut rng, seed, i)
            })
            .collect()
    }
}

pub fn path_rng(seed: u64, path: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

pub fn sample_path<T: Real, R: Rng + ?Sized>(
    sym: &SymbolAlpha<T>,
    grid: &[f64],
    window: Window,
    rng: &mut R,
    eps: T,
) -> Result<Trajectory> {
    PathSampler::new(sym, grid, window, eps)?.sample(rng, 0, 0)
}

pub fn sample_paths<T: Real>(
    sym: &SymbolAlpha<T>,
    grid: &[f64],
    window: Window,
    seed: u64,
    count: u64,
    eps: T,
) -> Result<Vec<Trajectory>> {
    PathSampler::new(sym, grid, window, eps)?.sample_many(seed, count)
}

/// Writes trajectories as CSV: `time`, then `num_p,den_exp_p` per prime,
/// `norm`, and the path index.
pub fn write_trajectories_csv<W: Write>(out: &mut W, primes: &[u64], paths: &[Trajectory]) -> std::io::Result<()> {
    let mut header = vec!["time".to_string()];
    for p in primes {
        header.push(format!("num_{p}"));
        header.push(format!("den_exp_{p}"));
    }
    header.push("norm".into());
    header.push("path".into());
    writeln!(out, "{}", header.join(","))?;
    for tr in paths {
        for (t, x) in tr.times.iter().zip(&tr.points) {
            let mut row = vec![format!("{t}")];
            for c in x.to_json() {
                row.push(match c.num {
                    crate::sadic::IntRepr::Small(v) => v.to_string(),
                    crate::sadic::IntRepr::Big(s) => s,
                });
                row.push(c.den_exp.to_string());
            }
            row.push(format!("{}", x.norm_f64()));
            row.push(tr.path.to_string());
            writeln!(out, "{}", row.join(","))?;
        }
    }
    Ok(())
}

/// Statistics of sampled paths: the first-step increment levels and the
/// endpoint levels against the radial law (each conditioned on the window),
/// and the mean of `sin 2π{x}_S` at the endpoints, which vanishes for a symmetric law.
pub fn trajectory_stats<T: Real>(
    sym: &SymbolAlpha<T>,
    paths: &[Trajectory],
    window: Window,
    eps: T,
    alpha: f64,
) -> Result<Vec<StatReport>> {
    let first = paths.first().ok_or_else(|| Error::InvalidArgument("no paths".into()))?;
    if first.times.len() < 2 {
        return Err(Error::InvalidArgument("paths need at least one step".into()));
    }
    let level = |x: &SAdicPoint| Ok(x.sphere_level()?.unwrap_or(window.resolution));
    let dt = first.times[1] - first.times[0];
    let t_end = *first.times.last().unwrap();
    let inc = IncrementSampler::new(sym, T::of(dt), window, eps)?;
    let steps: Vec<i64> = paths.iter().map(|p| level(&p.points[1])).collect::<Result<_>>()?;
    let end_law = IncrementSampler::new(sym, T::of(t_end), window, eps)?;
    let ends: Vec<i64> = paths.iter().map(|p| level(p.points.last().unwrap())).collect::<Result<_>>()?;
    let sines: Vec<f64> = paths
        .iter()
        .map(|p| {
            let ph = crate::scalar::ratio_to_f64(p.points.last().unwrap().char_phase().phase());
            (2.0 * std::f64::consts::PI * ph).sin()
        })
        .collect();
    Ok(vec![
        ks_one_sample("increment_levels_ks", &steps, window.resolution, &inc.conditioned_cdf(), alpha),
        ks_one_sample("endpoint_levels_ks", &ends, window.resolution, &end_law.conditioned_cdf(), alpha),
        mean_zero_test("phase_symmetry_mean_sin", &sines, alpha),
    ])
}

/// One row of the L(B) ladder: a point at distance `r_s` from the ball.
#[derive(Debug, Clone, Serialize)]
pub struct LadderRow {
    pub level: i64,
    pub sup_p: f64,
    pub bound: f64,
    pub ok: bool,
    pub outside_window: bool,
}

/// One row of the M(B) ladder.
#[derive(Debug, Clone, Serialize)]
pub struct ExitRow {
    pub t: f64,
    /// `P(t, x, Q_S \ B)` for `x ∈ B`.
    pub p_out: f64,
    /// `P(t, x, B_K \ B)`: the part of the exit mass inside the window ball `B_K`.
    pub p_annulus: f64,
    pub ratio: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub ball_level: i64,
    pub c_l: f64,
    pub c_m: f64,
    pub l_rows: Vec<LadderRow>,
    pub l_monotone: bool,
    pub m_rows: Vec<ExitRow>,
    pub m_ratio_stable: bool,
    pub pass: bool,
}

/// Checks the two decay conditions for the ball `B_L` (balls are
/// translation invariant, so the center is the origin):
/// away from the ball, `sup_{t ≤ t_max} P(t,x,B) ≤ t_max C ‖x‖^{-α-1} μ(B)`
/// with `C = max q^α`, decreasing along the ladder; and the exit
/// probability `P(t,x,Q_S \ B) ≤ C_M t` with `C_M = r_L ∫_{B_{-L}} ‖ξ‖^α dξ`.
pub fn condition_checks<T: Real>(
    sym: &SymbolAlpha<T>,
    t_max: T,
    ball_level: i64,
    x_levels: &[i64],
    t_ladder: &[T],
    window_support: i64,
    eps: T,
) -> Result<ConditionReport> {
    let f = sym.filtration();
    let a = sym.alpha().to_f64_lossy();
    let c_l = sym.ramification_constant();
    let mu = f.radius_f64(ball_level)?;
    let t_grid: Vec<T> = (0..=16).map(|j| t_max * T::of(10f64.powf(-(j as f64) / 4.0))).collect();
    let mut l_rows = Vec::new();
    for &s in x_levels {
        if s <= ball_level {
            return Err(Error::InvalidArgument(format!("ladder level {s} lies inside the ball")));
        }
        let mut sup = 0.0f64;
        for &t in &t_grid {
            let p = transition_p_radial(sym, t, RadialPosition::Sphere(s), ball_level, eps)?;
            sup = sup.max(p.value.to_f64_lossy());
        }
        let bound = t_max.to_f64_lossy() * c_l * f.radius_f64(s)?.powf(-a - 1.0) * mu;
        l_rows.push(LadderRow { level: s, sup_p: sup, bound, ok: sup <= bound * (1.0 + 1e-12), outside_window: s > window_support });
    }
    let l_monotone = l_rows.windows(2).all(|w| w[1].sup_p <= w[0].sup_p * (1.0 + 1e-12));

    let r_l = f.radius_f64(ball_level)?;
    let pw = RadialWeight::power(sym.alpha())?;
    let c_m = r_l * radial_integral(f, &pw, RadialPosition::Origin, Some(-ball_level), eps)?.value.to_f64_lossy();
    let mut m_rows = Vec::new();
    for &t in t_ladder {
        let inside = transition_p_radial(sym, t, RadialPosition::Origin, ball_level, eps)?.value.to_f64_lossy();
        let window_ball = transition_p_radial(sym, t, RadialPosition::Origin, window_support.max(ball_level), eps)?
            .value
            .to_f64_lossy();
        let p_out = 1.0 - inside;
        let tf = t.to_f64_lossy();
        m_rows.push(ExitRow {
            t: tf,
            p_out,
            p_annulus: window_ball - inside,
            ratio: p_out / tf,
            ok: p_out <= c_m * tf * (1.0 + 1e-9) && window_ball - inside <= p_out + 1e-12,
        });
    }
    let m_ratio_stable = m_rows.windows(2).all(|w| {
        let (r0, r1) = (w[0].ratio, w[1].ratio);
        (r1 - r0).abs() <= 0.5 * r0.abs().max(r1.abs())
    });
    let pass = l_rows.iter().all(|r| r.ok) && l_monotone && m_rows.iter().all(|r| r.ok) && m_ratio_stable;
    Ok(ConditionReport { ball_level, c_l, c_m, l_rows, l_monotone, m_rows, m_ratio_stable, pass })
}
