//! The operator `D^α`, the heat kernel `Z(x,t)`, and the heat semigroup.
//!
//! Every radial quantity reduces to a sum over the filtration's spheres.
//! [`radial_integral`] evaluates
//! `∫_{B_N} w(‖ξ‖) χ(-x·ξ) dξ` for a radial weight `w` using the closed-form
//! sphere integrals of the character, and reports a rigorous bound on the
//! part of the series it did not sum.

use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filtration::Filtration;
use crate::funcspace::TestFunction;
use crate::sadic::{CosetGrid, RadialPosition, SAdicPoint};
use crate::scalar::Real;

pub const DEFAULT_EPS: f64 = 1e-12;

/// The symbol `‖ξ‖^α` on a given filtration.
#[derive(Debug, Clone)]
pub struct SymbolAlpha<T: Real> {
    alpha: T,
    filtration: Arc<Filtration>,
}

impl<T: Real> SymbolAlpha<T> {
    pub fn new(filtration: Arc<Filtration>, alpha: T) -> Result<Self> {
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        Ok(SymbolAlpha { alpha, filtration })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn filtration(&self) -> &Arc<Filtration> {
        &self.filtration
    }

    /// `Γ(1/α + 1)`, the constant of the on-diagonal bound.
    pub fn gamma_constant(&self) -> f64 {
        statrs::function::gamma::gamma(1.0 / self.alpha.to_f64_lossy() + 1.0)
    }

    /// `max_q q^α` over the ramification indices.
    pub fn ramification_constant(&self) -> f64 {
        (self.filtration.max_ramification() as f64).powf(self.alpha.to_f64_lossy())
    }

    /// Constant of the combined bound `Z ≤ C' t (t^{1/α} + ‖x‖)^{-α-1}`.
    pub fn combined_constant(&self) -> f64 {
        let a = self.alpha.to_f64_lossy();
        2f64.powf(a + 1.0) * self.gamma_constant().max(self.ramification_constant())
    }
}

/// The radial weight `w(r) = r^β exp(-t r^α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialWeight<T> {
    pub alpha: T,
    pub beta: T,
    pub t: T,
}

impl<T: Real> RadialWeight<T> {
    pub fn new(alpha: T, beta: T, t: T) -> Result<Self> {
        let ok = alpha > T::zero() && alpha.is_finite() && beta >= T::zero() && beta.is_finite() && t >= T::zero() && t.is_finite();
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "invalid radial weight (alpha={alpha}, beta={beta}, t={t})"
            )));
        }
        Ok(RadialWeight { alpha, beta, t })
    }

    /// `exp(-t r^α)`.
    pub fn heat(alpha: T, t: T) -> Result<Self> {
        Self::new(alpha, T::zero(), t)
    }

    /// `r^α`.
    pub fn power(alpha: T) -> Result<Self> {
        Self::new(alpha, alpha, T::zero())
    }

    /// `r^α exp(-t r^α)`.
    pub fn heat_power(alpha: T, t: T) -> Result<Self> {
        Self::new(alpha, alpha, t)
    }

    pub fn unit() -> Self {
        RadialWeight { alpha: T::one(), beta: T::zero(), t: T::zero() }
    }

    pub fn is_unit(&self) -> bool {
        self.beta == T::zero() && self.t == T::zero()
    }

    pub fn eval(&self, r: T) -> T {
        if r == T::zero() {
            return self.at_zero();
        }
        let pw = if self.beta == T::zero() { T::one() } else { r.powf(self.beta) };
        let decay = if self.t == T::zero() { T::one() } else { (-self.t * r.powf(self.alpha)).exp() };
        pw * decay
    }

    pub fn at_zero(&self) -> T {
        if self.beta == T::zero() {
            T::one()
        } else {
            T::zero()
        }
    }

    /// `w(r0) - w(r1)` for `r0 < r1`, free of cancellation for pure heat weights.
    fn diff(&self, r0: T, r1: T) -> T {
        if self.beta == T::zero() {
            if self.t == T::zero() {
                return T::zero();
            }
            let a = r0.powf(self.alpha);
            let b = r1.powf(self.alpha);
            -(-self.t * a).exp() * (-self.t * (b - a)).exp_m1()
        } else {
            self.eval(r0) - self.eval(r1)
        }
    }

    /// `1 - w(r)` for `β = 0`.
    fn deficit(&self, r: T) -> T {
        -(-self.t * r.powf(self.alpha)).exp_m1()
    }

    /// Upper bound for `w` on `[0, r]`.
    fn sup_below(&self, r: T) -> T {
        if self.beta == T::zero() {
            T::one()
        } else {
            r.powf(self.beta)
        }
    }

    /// Upper bound for `|w(a) - w(b)|` over `0 <= a <= b <= r`.
    fn diff_bound(&self, r: T) -> T {
        if self.beta == T::zero() {
            (self.t * r.powf(self.alpha)).min(T::one())
        } else {
            r.powf(self.beta)
        }
    }

    pub fn to_f64(&self) -> RadialWeight<f64> {
        RadialWeight {
            alpha: self.alpha.to_f64_lossy(),
            beta: self.beta.to_f64_lossy(),
            t: self.t.to_f64_lossy(),
        }
    }
}

/// A value with a rigorous bound on its truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifiedValue<T> {
    pub value: T,
    pub tail_bound: T,
    pub levels_used: usize,
}

impl<T: Real> CertifiedValue<T> {
    pub fn exact(value: T) -> Self {
        CertifiedValue { value, tail_bound: T::zero(), levels_used: 0 }
    }

    pub fn scale(self, c: T) -> Self {
        CertifiedValue { value: self.value * c, tail_bound: self.tail_bound * c.abs(), levels_used: self.levels_used }
    }
}

fn sum_small_first<T: Real>(terms: &[T]) -> T {
    terms.iter().rev().fold(T::zero(), |acc, &v| acc + v)
}

fn unreachable<T: Real>(eps: T) -> Error {
    Error::Unreachable { eps: eps.to_f64_lossy() }
}

/// Sums `Σ_{n ≤ top} term(n)` downwards until the bound on the omitted part
/// (`tail(n)` for the terms below level `n`) falls to `eps`.
fn sum_downward<T: Real>(
    f: &Filtration,
    top: i64,
    eps: T,
    mut term: impl FnMut(i64) -> Result<T>,
    mut tail: impl FnMut(i64) -> Result<T>,
) -> Result<(T, T, usize)> {
    let mut terms = Vec::new();
    let mut n = top;
    loop {
        terms.push(term(n)?);
        let rest = tail(n)?;
        if rest <= eps {
            return Ok((sum_small_first(&terms), rest, terms.len()));
        }
        n -= 1;
        if n - 1 < -f.level_cap() {
            return Err(unreachable(eps));
        }
    }
}

/// `∫_{B_N} w(‖ξ‖) χ(-x·ξ) dξ` for `x` at `pos`; `upper = None` integrates
/// over all of `Q_S`.
///
/// With `x ∈ S_s` and `m = -s`, the sphere integrals of the character give
/// `Σ_{n ≤ N} w(r_n)(r_n - r_{n-1})` when `N ≤ m` (or `x = 0`), and
/// `Σ_{n ≤ m} r_n (w(r_n) - w(r_{n+1}))` when `N > m`.
pub fn radial_integral<T: Real>(
    f: &Filtration,
    w: &RadialWeight<T>,
    pos: RadialPosition,
    upper: Option<i64>,
    eps: T,
) -> Result<CertifiedValue<T>> {
    if !(eps > T::zero()) {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    let r = |n: i64| f.radius_real::<T>(n);
    let two = T::of(2.0);
    let m = match pos {
        RadialPosition::Origin => None,
        RadialPosition::Sphere(s) => Some(-s),
    };
    let ball_top = match (m, upper) {
        (None, u) => Some(u),
        (Some(m), Some(n)) if n <= m => Some(Some(n)),
        _ => None,
    };
    match ball_top {
        Some(Some(n)) => {
            f.check_level(n)?;
            if w.is_unit() {
                return Ok(CertifiedValue::exact(r(n)?));
            }
            if w.beta == T::zero() {
                // r_N - ∫_{B_N} (1 - w): the deficit decays like r^{1+α} near the origin
                let (v, tail, used) = sum_downward(
                    f,
                    n,
                    eps,
                    |k| Ok(w.deficit(r(k)?) * (r(k)? - r(k - 1)?)),
                    |k| Ok(w.diff_bound(r(k - 1)?) * r(k - 1)?),
                )?;
                return Ok(CertifiedValue { value: r(n)? - v, tail_bound: tail, levels_used: used });
            }
            let (v, tail, used) = sum_downward(
                f,
                n,
                eps,
                |k| Ok(w.eval(r(k)?) * (r(k)? - r(k - 1)?)),
                |k| Ok(two * w.sup_below(r(k - 1)?) * r(k - 1)?),
            )?;
            Ok(CertifiedValue { value: v, tail_bound: tail, levels_used: used })
        }
        Some(None) => {
            if w.t == T::zero() {
                return Err(Error::Nonconvergent(
                    "weight does not decay; the integral over Q_S diverges at the origin".into(),
                ));
            }
            let (top, up_tail) = upward_cutoff(f, w, eps / two)?;
            let (v, tail, used) = sum_downward(
                f,
                top,
                eps / two,
                |k| Ok(w.eval(r(k)?) * (r(k)? - r(k - 1)?)),
                |k| Ok(two * w.sup_below(r(k - 1)?) * r(k - 1)?),
            )?;
            Ok(CertifiedValue { value: v, tail_bound: tail + up_tail, levels_used: used })
        }
        None => {
            let m = m.expect("telescoped form needs x != 0");
            f.check_level(m + 1)?;
            let (v, tail, used) = sum_downward(
                f,
                m,
                eps,
                |k| Ok(r(k)? * w.diff(r(k)?, r(k + 1)?)),
                |k| Ok(two * w.diff_bound(r(k)?) * r(k - 1)?),
            )?;
            Ok(CertifiedValue { value: v, tail_bound: tail, levels_used: used })
        }
    }
}

/// Smallest level `N` past which `Σ_{n>N} w(r_n)(r_n - r_{n-1})` is
/// provably at most `eps`, with the bound. Uses `g(r) = r^{1+β} e^{-t r^α}`:
/// past its maximum `g(2r) <= ρ g(r)` with `ρ = 2^{1+β} e^{-t r^α (2^α-1)}`,
/// and radii at least double per level.
fn upward_cutoff<T: Real>(f: &Filtration, w: &RadialWeight<T>, eps: T) -> Result<(i64, T)> {
    let one = T::one();
    let two = T::of(2.0);
    let half = T::of(0.5);
    let r_star = ((one + w.beta) / (w.t * w.alpha)).powf(one / w.alpha);
    let g = |r: T| r.powf(one + w.beta) * (-w.t * r.powf(w.alpha)).exp();
    let mut n = 0i64;
    loop {
        if n >= f.level_cap() {
            return Err(unreachable(eps));
        }
        let big_r = f.radius_real::<T>(n)?;
        if big_r >= r_star {
            let rho = two.powf(one + w.beta) * (-w.t * big_r.powf(w.alpha) * (two.powf(w.alpha) - one)).exp();
            if rho <= half {
                let bound = g(two * big_r) / (one - rho);
                if bound <= eps {
                    return Ok((n, bound));
                }
            }
        }
        n += 1;
    }
}

/// `Z(x,t)` at a radial position, `t > 0`.
pub fn heat_kernel_at<T: Real>(sym: &SymbolAlpha<T>, pos: RadialPosition, t: T, eps: T) -> Result<CertifiedValue<T>> {
    if !(t > T::zero()) {
        return Err(Error::InvalidArgument(format!("heat kernel needs t > 0, got {t}")));
    }
    radial_integral(&sym.filtration, &RadialWeight::heat(sym.alpha, t)?, pos, None, eps)
}

pub fn heat_kernel<T: Real>(sym: &SymbolAlpha<T>, x: &SAdicPoint, t: T, eps: T) -> Result<CertifiedValue<T>> {
    heat_kernel_at(sym, x.radial_position(), t, eps)
}

/// `∂Z/∂t = -∫ ‖ξ‖^α e^{-t‖ξ‖^α} χ(-xξ) dξ`.
pub fn heat_kernel_time_derivative<T: Real>(
    sym: &SymbolAlpha<T>,
    pos: RadialPosition,
    t: T,
    eps: T,
) -> Result<CertifiedValue<T>> {
    if !(t > T::zero()) {
        return Err(Error::InvalidArgument(format!("time derivative needs t > 0, got {t}")));
    }
    let v = radial_integral(&sym.filtration, &RadialWeight::heat_power(sym.alpha, t)?, pos, None, eps)?;
    Ok(CertifiedValue { value: -v.value, ..v })
}

/// Rigorous bound `Z(x,t) ≤ t C r_s^{-1-α} / (1 - 2^{-1-α})` on the sphere
/// `S_s`, from `1 - e^{-u} ≤ u` in the telescoped series.
pub fn sphere_value_bound<T: Real>(sym: &SymbolAlpha<T>, s: i64, t: T) -> Result<T> {
    let a = sym.alpha;
    let one = T::one();
    let c = T::of(sym.ramification_constant());
    let r = sym.filtration.radius_real::<T>(s)?;
    Ok(t * c * r.powf(-one - a) / (one - T::of(2.0).powf(-one - a)))
}

/// Total mass `∫ Z(x,t) dx = Σ_s Z|_{S_s} (r_s - r_{s-1})`, summed sphere by
/// sphere with both tails bounded.
pub fn heat_kernel_mass<T: Real>(sym: &SymbolAlpha<T>, t: T, eps: T) -> Result<CertifiedValue<T>> {
    let f = &sym.filtration;
    let one = T::one();
    let two = T::of(2.0);
    let quarter = eps / T::of(4.0);
    let z0 = heat_kernel_at(sym, RadialPosition::Origin, t, quarter)?;
    // bottom: Σ_{s ≤ lo} Z(S_s) μ(S_s) ≤ Z(0) r_lo
    let mut lo = 0i64;
    while (z0.value + z0.tail_bound) * f.radius_real::<T>(lo)? > quarter {
        lo -= 1;
        if lo <= -f.level_cap() {
            return Err(unreachable(eps));
        }
    }
    // top: Σ_{s > hi} Z(S_s) μ(S_s) ≤ bound(s) r_s summed geometrically
    let a = sym.alpha;
    let geo = one / (one - two.powf(-a));
    let mut hi = 0i64;
    while sphere_value_bound(sym, hi + 1, t)? * f.radius_real::<T>(hi + 1)? * geo > quarter {
        hi += 1;
        if hi + 1 >= f.level_cap() {
            return Err(unreachable(eps));
        }
    }
    let levels: Vec<i64> = (lo + 1..=hi).collect();
    let count = T::of(levels.len().max(1) as f64);
    let parts: Vec<Result<(T, T)>> = levels
        .par_iter()
        .map(|&s| {
            let mu = f.radius_real::<T>(s)? - f.radius_real::<T>(s - 1)?;
            let target = (quarter / (count * mu)).min(eps);
            let z = heat_kernel_at(sym, RadialPosition::Sphere(s), t, target)?;
            Ok((z.value * mu, z.tail_bound * mu))
        })
        .collect();
    let mut vals = Vec::with_capacity(parts.len());
    let mut tails = T::zero();
    for p in parts {
        let (v, tb) = p?;
        vals.push(v);
        tails = tails + tb;
    }
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let total = vals.iter().fold(T::zero(), |acc, &v| acc + v);
    let bottom = (z0.value + z0.tail_bound) * f.radius_real::<T>(lo)?;
    let top = sphere_value_bound(sym, hi + 1, t)? * f.radius_real::<T>(hi + 1)? * geo;
    Ok(CertifiedValue { value: total, tail_bound: tails + bottom + top, levels_used: levels.len() })
}

/// One bound evaluated at one `(x, t)`.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateCheck {
    pub position: RadialPosition,
    pub t: f64,
    pub bound: &'static str,
    pub z: f64,
    pub limit: f64,
    /// `limit / z`; at least one when the bound holds.
    pub margin: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub alpha: f64,
    pub checks: Vec<EstimateCheck>,
    pub violations: usize,
}

/// Checks the on-diagonal, off-diagonal and combined kernel bounds at each
/// sample. The off-diagonal bound is skipped at the origin.
pub fn kernel_estimates_check<T: Real>(
    sym: &SymbolAlpha<T>,
    samples: &[(RadialPosition, T)],
    eps: T,
) -> Result<EstimateReport> {
    const SLACK: f64 = 1e-12;
    let a = sym.alpha.to_f64_lossy();
    let gamma = sym.gamma_constant();
    let c = sym.ramification_constant();
    let c2 = sym.combined_constant();
    let rows: Vec<Result<Vec<EstimateCheck>>> = samples
        .par_iter()
        .map(|&(pos, t)| {
            let z = heat_kernel_at(sym, pos, t, eps)?.value.to_f64_lossy();
            let t = t.to_f64_lossy();
            let norm = match pos {
                RadialPosition::Origin => 0.0,
                RadialPosition::Sphere(s) => sym.filtration.radius_f64(s)?,
            };
            let mut out = Vec::with_capacity(3);
            let mut push = |bound: &'static str, limit: f64| {
                out.push(EstimateCheck {
                    position: pos,
                    t,
                    bound,
                    z,
                    limit,
                    margin: limit / z,
                    ok: z <= limit * (1.0 + SLACK),
                });
            };
            push("on_diagonal", gamma * t.powf(-1.0 / a));
            if norm > 0.0 {
                push("off_diagonal", c * t * norm.powf(-a - 1.0));
            }
            push("combined", c2 * t * (t.powf(1.0 / a) + norm).powf(-a - 1.0));
            Ok(out)
        })
        .collect();
    let mut checks = Vec::new();
    for r in rows {
        checks.extend(r?);
    }
    let violations = checks.iter().filter(|c| !c.ok).count();
    Ok(EstimateReport { alpha: a, checks, violations })
}

/// An eigenvalue `r_n^α` of `D^α` with its level; the eigenspace is spanned
/// by the inverse transforms of functions supported on `S_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigenpair<T> {
    pub level: i64,
    pub eigenvalue: T,
}

/// Eigenvalues for levels `lo..=hi`, strictly increasing. Zero is an
/// accumulation point of the spectrum, not an eigenvalue.
pub fn spectrum<T: Real>(sym: &SymbolAlpha<T>, lo: i64, hi: i64) -> Result<Vec<Eigenpair<T>>> {
    (lo..=hi)
        .map(|n| Ok(Eigenpair { level: n, eigenvalue: sym.filtration.radius_real::<T>(n)?.powf(sym.alpha) }))
        .collect()
}

/// `e_n = F^{-1}[Δ_{S_n}]`, an element of `D^{-n}_{1-n}`.
pub fn eigenfunction<T: Real>(sym: &SymbolAlpha<T>, n: i64) -> Result<TestFunction<T>> {
    TestFunction::indicator_sphere(sym.filtration.clone(), n)?.inverse_fourier()
}

/// A function represented on the Fourier side: values on the nonzero cells
/// of the dual window, plus the zero-cell mode `f̂(0)` whose multiplier is
/// carried analytically as a [`RadialWeight`].
///
/// Window views are `F^{-1}[body] + f̂(0) ∫_{B_{-k}} w(‖ξ‖) χ(-xξ) dξ`, where
/// the second term is constant on `B_k` and decays outside it.
#[derive(Debug, Clone)]
pub struct SpectralField<T: Real> {
    sym: SymbolAlpha<T>,
    body: TestFunction<T>,
    levels: Arc<Vec<Option<i64>>>,
    zero_mode: Complex<T>,
    weight: RadialWeight<T>,
    original: Option<TestFunction<T>>,
}

/// A window view with its certified error.
#[derive(Debug, Clone)]
pub struct WindowView<T: Real> {
    pub function: TestFunction<T>,
    pub tail_bound: T,
}

fn sphere_levels(grid: &CosetGrid) -> Result<Vec<Option<i64>>> {
    (0..grid.len()).map(|i| grid.sphere_level(i)).collect()
}

impl<T: Real> SpectralField<T> {
    pub fn new(sym: &SymbolAlpha<T>, f: &TestFunction<T>) -> Result<Self> {
        if **f.filtration() != *sym.filtration {
            return Err(Error::Incompatible("function and symbol use different filtrations".into()));
        }
        let mut body = f.fourier()?;
        let levels = sphere_levels(body.grid())?;
        let zero_mode = body.values()[0];
        let mut vals = body.clone().into_values();
        vals[0] = Complex::zero();
        body = TestFunction::from_grid(body.grid().clone(), vals)?;
        Ok(SpectralField {
            sym: sym.clone(),
            body,
            levels: Arc::new(levels),
            zero_mode,
            weight: RadialWeight { alpha: sym.alpha, ..RadialWeight::unit() },
            original: Some(f.clone()),
        })
    }

    pub fn support_level(&self) -> i64 {
        -self.body.constancy_level()
    }

    pub fn constancy_level(&self) -> i64 {
        -self.body.support_level()
    }

    pub fn zero_mode(&self) -> Complex<T> {
        self.zero_mode
    }

    pub fn weight(&self) -> RadialWeight<T> {
        self.weight
    }

    pub fn fourier_body(&self) -> &TestFunction<T> {
        &self.body
    }

    fn multiply(&self, m: impl Fn(T) -> T) -> Result<TestFunction<T>> {
        let f = self.sym.filtration();
        let vals = self
            .body
            .values()
            .iter()
            .zip(self.levels.iter())
            .map(|(v, lvl)| match lvl {
                Some(n) => Ok(*v * m(f.radius_real::<T>(*n)?)),
                None => Ok(Complex::zero()),
            })
            .collect::<Result<Vec<_>>>()?;
        TestFunction::from_grid(self.body.grid().clone(), vals)
    }

    /// `D^α`: multiplies by `‖ξ‖^α`.
    pub fn apply_dalpha(&self) -> Result<Self> {
        let a = self.sym.alpha;
        Ok(SpectralField {
            body: self.multiply(|r| r.powf(a))?,
            weight: RadialWeight { beta: self.weight.beta + a, ..self.weight },
            original: None,
            ..self.clone()
        })
    }

    /// `S(s)`: multiplies by `exp(-s‖ξ‖^α)`; `s = 0` is the identity.
    pub fn evolve(&self, s: T) -> Result<Self> {
        if !(s >= T::zero()) || !s.is_finite() {
            return Err(Error::InvalidArgument(format!("evolution time must be >= 0, got {s}")));
        }
        if s == T::zero() {
            return Ok(self.clone());
        }
        let a = self.sym.alpha;
        Ok(SpectralField {
            body: self.multiply(|r| (-s * r.powf(a)).exp())?,
            weight: RadialWeight { t: self.weight.t + s, ..self.weight },
            original: None,
            ..self.clone()
        })
    }

    /// Value of the zero-cell term on `B_k`.
    fn zero_cell_constant(&self, eps: T) -> Result<CertifiedValue<T>> {
        radial_integral(
            self.sym.filtration(),
            &self.weight,
            RadialPosition::Origin,
            Some(-self.support_level()),
            eps,
        )
    }

    pub fn on_window(&self, eps: T) -> Result<WindowView<T>> {
        if let Some(f) = &self.original {
            return Ok(WindowView { function: f.clone(), tail_bound: T::zero() });
        }
        let inv = self.body.inverse_fourier()?;
        if self.zero_mode == Complex::zero() {
            return Ok(WindowView { function: inv, tail_bound: T::zero() });
        }
        let c = self.zero_cell_constant(eps)?;
        let add = self.zero_mode * c.value;
        Ok(WindowView { function: inv.map(|v| v + add), tail_bound: self.zero_mode.norm() * c.tail_bound })
    }

    /// Value at any point; outside `B_k` only the zero-cell term contributes.
    pub fn evaluate(&self, x: &SAdicPoint, eps: T) -> Result<(Complex<T>, T)> {
        let k = self.support_level();
        let outside = x.sphere_level()?.is_some_and(|s| s > k);
        if !outside {
            let view = self.on_window(eps)?;
            return Ok((view.function.evaluate(x)?, view.tail_bound));
        }
        if self.zero_mode == Complex::zero() {
            return Ok((Complex::zero(), T::zero()));
        }
        let v = radial_integral(self.sym.filtration(), &self.weight, x.radial_position(), Some(-k), eps)?;
        Ok((self.zero_mode * v.value, self.zero_mode.norm() * v.tail_bound))
    }

    /// `|∫_{Q_S \ B_k} u|`: the part of the field outside the window, equal to
    /// `|f̂(0)| · |w(0) - r_k c|` with `c` the zero-cell constant on `B_k`.
    pub fn exterior_mass(&self, eps: T) -> Result<CertifiedValue<T>> {
        if self.original.is_some() || self.zero_mode == Complex::zero() {
            return Ok(CertifiedValue::exact(T::zero()));
        }
        let c = self.zero_cell_constant(eps)?;
        let r_k = self.sym.filtration().radius_real::<T>(self.support_level())?;
        let a = self.zero_mode.norm();
        Ok(CertifiedValue {
            value: a * (self.weight.at_zero() - r_k * c.value).abs(),
            tail_bound: a * r_k * c.tail_bound,
            levels_used: c.levels_used,
        })
    }
}

/// `D^α f` on the window of `f`.
pub fn apply_dalpha<T: Real>(sym: &SymbolAlpha<T>, f: &TestFunction<T>, eps: T) -> Result<WindowView<T>> {
    SpectralField::new(sym, f)?.apply_dalpha()?.on_window(eps)
}

/// `S(t) f = Z(·,t) ∗ f` on the window of `f`.
pub fn evolve<T: Real>(sym: &SymbolAlpha<T>, f: &TestFunction<T>, t: T, eps: T) -> Result<WindowView<T>> {
    SpectralField::new(sym, f)?.evolve(t)?.on_window(eps)
}

/// `(f ∗ g)(x)` for radial `f, g` given by their sphere values on levels
/// `lo..lo+len`; values outside that range count as zero. `at = None` is
/// the origin. The sphere `S_j` splits the integral into `‖y‖ < ‖x‖`
/// (where `‖x-y‖ = ‖x‖`), `‖y‖ > ‖x‖` (where `‖x-y‖ = ‖y‖`) and `y ∈ S_j`,
/// where `x - y` covers `B_j` minus one coset of `B_{j-1}` inside `S_j`.
pub fn radial_convolution<T: Real>(f: &Filtration, fv: &[T], gv: &[T], lo: i64, at: Option<i64>) -> Result<T> {
    if fv.len() != gv.len() {
        return Err(Error::InvalidArgument("sphere value tables differ in length".into()));
    }
    let hi = lo + fv.len() as i64 - 1;
    let mu = |i: i64| -> Result<T> { Ok(f.radius_real::<T>(i)? - f.radius_real::<T>(i - 1)?) };
    let get = |v: &[T], i: i64| if i < lo || i > hi { T::zero() } else { v[(i - lo) as usize] };
    let mut terms = Vec::new();
    match at {
        None => {
            for i in lo..=hi {
                terms.push(get(fv, i) * get(gv, i) * mu(i)?);
            }
        }
        Some(j) => {
            let fj = get(fv, j);
            let gj = get(gv, j);
            let mut inner = T::zero();
            for i in lo..j.min(hi + 1) {
                let m = mu(i)?;
                terms.push(fj * get(gv, i) * m);
                inner = inner + get(fv, i) * m;
            }
            for i in (j + 1).max(lo)..=hi {
                terms.push(get(fv, i) * get(gv, i) * mu(i)?);
            }
            let r_j = f.radius_real::<T>(j)?;
            let r_jm = f.radius_real::<T>(j - 1)?;
            terms.push(gj * (inner + fj * (r_j - T::of(2.0) * r_jm)));
        }
    }
    terms.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
    Ok(terms.into_iter().fold(T::zero(), |acc, v| acc + v))
}

/// Result of the inhomogeneous solver.
#[derive(Debug, Clone)]
pub struct DuhamelResult<T: Real> {
    pub solution: TestFunction<T>,
    /// Simpson panel width.
    pub step: T,
    pub tail_bound: T,
}

/// `u(T) = S(T)u0 + ∫_0^T S(T-τ) g(τ) dτ` with composite Simpson over
/// `steps` panels (`steps` even, at least 2).
pub fn duhamel_solve<T, G>(
    sym: &SymbolAlpha<T>,
    u0: &TestFunction<T>,
    source: G,
    t_final: T,
    steps: usize,
    eps: T,
) -> Result<DuhamelResult<T>>
where
    T: Real,
    G: Fn(T) -> Result<TestFunction<T>> + Sync,
{
    if steps < 2 || steps % 2 != 0 {
        return Err(Error::InvalidArgument(format!("steps must be even and >= 2, got {steps}")));
    }
    if !(t_final > T::zero()) || !t_final.is_finite() {
        return Err(Error::InvalidArgument(format!("final time must be positive, got {t_final}")));
    }
    let window = (u0.support_level(), u0.constancy_level());
    let h = t_final / T::of(steps as f64);
    let nodes: Vec<Result<(TestFunction<T>, T)>> = (0..=steps)
        .into_par_iter()
        .map(|i| {
            let tau = h * T::of(i as f64);
            let g = source(tau)?;
            if (g.support_level(), g.constancy_level()) != window {
                return Err(Error::Incompatible(format!(
                    "source window ({},{}) differs from the initial window ({},{})",
                    g.support_level(),
                    g.constancy_level(),
                    window.0,
                    window.1
                )));
            }
            let view = evolve(sym, &g, (t_final - tau).max(T::zero()), eps)?;
            let wgt = if i == 0 || i == steps {
                T::one()
            } else if i % 2 == 1 {
                T::of(4.0)
            } else {
                T::of(2.0)
            };
            Ok((view.function, wgt * h / T::of(3.0) * view.tail_bound))
        })
        .collect();
    let base = evolve(sym, u0, t_final, eps)?;
    let mut acc: Vec<Complex<T>> = base.function.values().to_vec();
    let mut tail = base.tail_bound;
    for (i, node) in nodes.into_iter().enumerate() {
        let (g, tb) = node?;
        let wgt = if i == 0 || i == steps {
            T::one()
        } else if i % 2 == 1 {
            T::of(4.0)
        } else {
            T::of(2.0)
        };
        let c = wgt * h / T::of(3.0);
        for (a, v) in acc.iter_mut().zip(g.values()) {
            *a = *a + *v * c;
        }
        tail = tail + tb;
    }
    let solution = TestFunction::from_grid(base.function.grid().clone(), acc)?;
    Ok(DuhamelResult { solution, step: h, tail_bound: tail })
}
