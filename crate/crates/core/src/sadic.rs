//! Finite-precision elements of `Q_S`.
//!
//! A point carries one exact rational per prime, each with a power of that
//! prime as denominator, and a [`Window`]: the point lies in `B_support` and
//! is known modulo `B_resolution`. Coordinates are stored as the canonical
//! representative in `[0, p^m)` where `p^m Z_p` is the `p`-component of the
//! resolution ball.

use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint, Sign};
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filtration::{format_ratio, Filtration};
use crate::scalar::Real;

/// Support and resolution levels, `resolution <= support`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub support: i64,
    pub resolution: i64,
}

impl Window {
    pub fn new(support: i64, resolution: i64) -> Result<Self> {
        if resolution > support {
            return Err(Error::InvalidArgument(format!(
                "resolution level {resolution} exceeds support level {support}"
            )));
        }
        Ok(Window { support, resolution })
    }

    /// Coarser resolution and larger support of the two.
    pub fn merge(self, other: Window) -> Window {
        Window {
            support: self.support.max(other.support),
            resolution: self.resolution.max(other.resolution),
        }
    }
}

pub(crate) fn pow_int(p: u64, e: u32) -> BigInt {
    BigInt::from(p).pow(e)
}

/// Exponent `e` with `den(x) = p^e`, or an error if the denominator has other factors.
pub fn den_exponent(x: &BigRational, p: u64) -> Result<i64> {
    let mut d = x.denom().clone();
    let bp = BigInt::from(p);
    let mut e = 0i64;
    while !d.is_one() {
        let (q, r) = d.div_rem(&bp);
        if !r.is_zero() {
            return Err(Error::InvalidArgument(format!(
                "denominator of {} is not a power of {p}",
                format_ratio(x)
            )));
        }
        d = q;
        e += 1;
    }
    Ok(e)
}

/// p-adic valuation of a rational whose denominator is a power of `p`; `None` for zero.
pub fn p_valuation(x: &BigRational, p: u64) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    let bp = BigInt::from(p);
    let mut n = x.numer().abs();
    let mut v = 0i64;
    loop {
        let (q, r) = n.div_rem(&bp);
        if !r.is_zero() {
            break;
        }
        n = q;
        v += 1;
    }
    let mut d = x.denom().clone();
    while !d.is_one() {
        let (q, r) = d.div_rem(&bp);
        if !r.is_zero() {
            break;
        }
        d = q;
        v -= 1;
    }
    Some(v)
}

/// Canonical representative of `x mod p^m Z_p` in `[0, p^m)`.
pub fn reduce_mod(x: &BigRational, p: u64, m: i64) -> BigRational {
    let e = den_exponent(x, p).expect("coordinate denominators are powers of p");
    let big_e = e.max(-m).max(0);
    let scaled = x.numer() * pow_int(p, (big_e - e) as u32);
    let modulus = pow_int(p, (m + big_e) as u32);
    let r = scaled.mod_floor(&modulus);
    BigRational::new(r, pow_int(p, big_e as u32))
}

/// p-adic fractional part `{x}_p` in `[0, 1)`.
pub fn fractional_part(x: &BigRational, p: u64) -> BigRational {
    reduce_mod(x, p, 0)
}

/// Exact phase of a character value `exp(2πi·phase)`, kept in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CharacterValue {
    phase: BigRational,
}

impl CharacterValue {
    pub fn new(phase: BigRational) -> Self {
        let fl = phase.floor();
        CharacterValue { phase: phase - fl }
    }

    pub fn trivial() -> Self {
        CharacterValue { phase: BigRational::zero() }
    }

    pub fn phase(&self) -> &BigRational {
        &self.phase
    }

    pub fn is_trivial(&self) -> bool {
        self.phase.is_zero()
    }

    pub fn add(&self, other: &CharacterValue) -> CharacterValue {
        CharacterValue::new(&self.phase + &other.phase)
    }

    pub fn conj(&self) -> CharacterValue {
        CharacterValue::new(-self.phase.clone())
    }

    pub fn to_complex<T: Real>(&self) -> Complex<T> {
        let ph = self.phase.to_f64().unwrap_or(0.0);
        let a = 2.0 * std::f64::consts::PI * ph;
        Complex::new(T::of(a.cos()), T::of(a.sin()))
    }
}

/// Order of a point: `-level` of the smallest ball containing it, or the
/// zero marker when the point vanishes at the window resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Finite(i64),
    /// Zero modulo the window; the true order is at least `at_least`.
    Zero { at_least: i64 },
}

impl Order {
    pub fn is_infinite(self) -> bool {
        matches!(self, Order::Zero { .. })
    }
}

/// Where a point sits relative to the filtration: the origin, or the sphere
/// `S_n = B_n \ B_{n-1}` of radius `r_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RadialPosition {
    Origin,
    Sphere(i64),
}

#[derive(Clone)]
pub struct SAdicPoint {
    filtration: Arc<Filtration>,
    coords: Vec<BigRational>,
    window: Window,
}

impl fmt::Debug for SAdicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SAdicPoint{}@{:?}", self, self.window)
    }
}

impl fmt::Display for SAdicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(format_ratio).collect();
        write!(f, "({})", parts.join(", "))
    }
}

impl PartialEq for SAdicPoint {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords && self.window == other.window
    }
}

impl Eq for SAdicPoint {}

fn require_sadic(f: &Filtration) -> Result<()> {
    if f.is_sadic() {
        Ok(())
    } else {
        Err(Error::NotSAdic)
    }
}

fn check_window(f: &Filtration, w: Window) -> Result<()> {
    f.check_level(w.support)?;
    f.check_level(w.resolution)?;
    Window::new(w.support, w.resolution).map(|_| ())
}

impl SAdicPoint {
    /// Builds a point from exact coordinates (one per prime, ascending).
    pub fn new(filtration: Arc<Filtration>, coords: Vec<BigRational>, window: Window) -> Result<Self> {
        require_sadic(&filtration)?;
        check_window(&filtration, window)?;
        if coords.len() != filtration.primes().len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coordinates, got {}",
                filtration.primes().len(),
                coords.len()
            )));
        }
        for (x, &p) in coords.iter().zip(filtration.primes()) {
            den_exponent(x, p)?;
        }
        let pt = SAdicPoint { filtration, coords, window };
        let pt = pt.canonical()?;
        pt.check_support()?;
        Ok(pt)
    }

    pub fn from_ratios(filtration: Arc<Filtration>, coords: &[(i64, i64)], window: Window) -> Result<Self> {
        let c = coords
            .iter()
            .map(|&(n, d)| {
                if d == 0 {
                    Err(Error::InvalidArgument("zero denominator".into()))
                } else {
                    Ok(BigRational::new(n.into(), d.into()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(filtration, c, window)
    }

    /// Diagonal embedding of an integer.
    pub fn from_integer(filtration: Arc<Filtration>, n: i64, window: Window) -> Result<Self> {
        let c = vec![BigRational::from_integer(n.into()); filtration.primes().len()];
        Self::new(filtration, c, window)
    }

    pub fn zero(filtration: Arc<Filtration>, window: Window) -> Result<Self> {
        Self::from_integer(filtration, 0, window)
    }

    fn canonical(mut self) -> Result<Self> {
        let ex = self.filtration.prime_exponents(self.window.resolution)?;
        for ((x, &p), e) in self.coords.iter_mut().zip(self.filtration.primes()).zip(ex) {
            *x = reduce_mod(x, p, -e);
        }
        Ok(self)
    }

    fn check_support(&self) -> Result<()> {
        let ex = self.filtration.prime_exponents(self.window.support)?;
        for ((x, &p), e) in self.coords.iter().zip(self.filtration.primes()).zip(ex) {
            if let Some(v) = p_valuation(x, p) {
                if v < -e {
                    return Err(Error::WindowOverflow(format!(
                        "coordinate {} at p={p} lies outside B_{}",
                        format_ratio(x),
                        self.window.support
                    )));
                }
            }
        }
        Ok(())
    }

    /// Same class at a coarser resolution / larger support.
    pub fn rewindow(&self, window: Window) -> Result<Self> {
        check_window(&self.filtration, window)?;
        if window.resolution < self.window.resolution {
            return Err(Error::Resolution(format!(
                "cannot refine resolution {} to {}",
                self.window.resolution, window.resolution
            )));
        }
        let pt = SAdicPoint { filtration: self.filtration.clone(), coords: self.coords.clone(), window };
        let pt = pt.canonical()?;
        pt.check_support()?;
        Ok(pt)
    }

    pub fn filtration(&self) -> &Arc<Filtration> {
        &self.filtration
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.coords
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn coordinate(&self, p: u64) -> Option<&BigRational> {
        self.filtration.primes().iter().position(|&q| q == p).map(|i| &self.coords[i])
    }

    /// Little-endian base-`p` digits of coordinate `p`, starting at exponent
    /// `-ord_p(r_support)` and ending below the resolution modulus.
    pub fn digits(&self, p: u64) -> Result<Vec<u64>> {
        let i = self
            .filtration
            .primes()
            .iter()
            .position(|&q| q == p)
            .ok_or_else(|| Error::InvalidArgument(format!("{p} is not in S")))?;
        let a = self.filtration.prime_exponent(p, self.window.support)?;
        let b = self.filtration.prime_exponent(p, self.window.resolution)?;
        let mut j = scale_pow(&self.coords[i], p, a).to_integer();
        let mut out = Vec::with_capacity((a - b) as usize);
        let bp = BigInt::from(p);
        for _ in 0..(a - b) {
            let (q, r) = j.div_rem(&bp);
            out.push(r.to_u64().unwrap());
            j = q;
        }
        Ok(out)
    }

    fn compatible(&self, other: &SAdicPoint) -> Result<()> {
        if Arc::ptr_eq(&self.filtration, &other.filtration) || *self.filtration == *other.filtration {
            Ok(())
        } else {
            Err(Error::Incompatible("points belong to different prime sets".into()))
        }
    }

    pub fn add(&self, other: &SAdicPoint) -> Result<SAdicPoint> {
        self.compatible(other)?;
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect();
        let pt = SAdicPoint {
            filtration: self.filtration.clone(),
            coords,
            window: self.window.merge(other.window),
        };
        pt.canonical()
    }

    pub fn neg(&self) -> SAdicPoint {
        let coords = self.coords.iter().map(|a| -a.clone()).collect();
        SAdicPoint { filtration: self.filtration.clone(), coords, window: self.window }
            .canonical()
            .expect("window already validated")
    }

    pub fn sub(&self, other: &SAdicPoint) -> Result<SAdicPoint> {
        self.add(&other.neg())
    }

    /// Product of two points. The result is only determined modulo a ball
    /// that depends on the operands' valuations; that guaranteed resolution
    /// becomes the result's resolution, and an error is returned when it is
    /// coarser than the merged support.
    pub fn mul(&self, other: &SAdicPoint) -> Result<SAdicPoint> {
        self.compatible(other)?;
        let f = &self.filtration;
        let ex = f.prime_exponents(self.window.resolution)?;
        let ey = f.prime_exponents(other.window.resolution)?;
        let mut need = Vec::with_capacity(f.primes().len());
        let mut coords = Vec::with_capacity(f.primes().len());
        for (i, &p) in f.primes().iter().enumerate() {
            let (mx, my) = (-ex[i], -ey[i]);
            let vx = p_valuation(&self.coords[i], p).map_or(mx, |v| v.min(mx));
            let vy = p_valuation(&other.coords[i], p).map_or(my, |v| v.min(my));
            let mu = (my + vx).min(mx + vy);
            need.push(Some(-mu));
            coords.push(&self.coords[i] * &other.coords[i]);
        }
        let support = self.window.support.max(other.window.support);
        let resolution = f.level_containing(&need).map_err(|_| {
            Error::WindowOverflow("product precision falls outside the level cap".into())
        })?;
        if resolution > support {
            return Err(Error::WindowOverflow(format!(
                "product is only determined modulo B_{resolution}, coarser than the window support B_{support}"
            )));
        }
        let pt = SAdicPoint { filtration: f.clone(), coords, window: Window { support, resolution } };
        let pt = pt.canonical()?;
        // the product may leave the merged support ball
        let lvl = pt.sphere_level()?;
        let support = lvl.map_or(support, |l| l.max(support));
        if let Err(e) = f.check_level(support) {
            return Err(Error::WindowOverflow(e.to_string()));
        }
        Ok(SAdicPoint { window: Window { support, resolution }, ..pt })
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    /// Level `n` of the sphere `S_n` containing the point; `None` at zero.
    pub fn sphere_level(&self) -> Result<Option<i64>> {
        if self.is_zero() {
            return Ok(None);
        }
        let need: Vec<Option<i64>> = self
            .coords
            .iter()
            .zip(self.filtration.primes())
            .map(|(x, &p)| p_valuation(x, p).map(|v| -v))
            .collect();
        self.filtration.level_containing(&need).map(Some)
    }

    pub fn radial_position(&self) -> RadialPosition {
        match self.sphere_level().expect("point levels are within the cap") {
            Some(n) => RadialPosition::Sphere(n),
            None => RadialPosition::Origin,
        }
    }

    pub fn order(&self) -> Order {
        match self.sphere_level().expect("point levels are within the cap") {
            Some(n) => Order::Finite(-n),
            None => Order::Zero { at_least: -self.window.resolution },
        }
    }

    /// `‖x‖ = r_n` for `x ∈ S_n`; zero at the origin.
    pub fn norm(&self) -> BigRational {
        match self.sphere_level().expect("point levels are within the cap") {
            Some(n) => self.filtration.radius(n).expect("level within cap"),
            None => BigRational::zero(),
        }
    }

    pub fn norm_f64(&self) -> f64 {
        match self.sphere_level().expect("point levels are within the cap") {
            Some(n) => self.filtration.radius_f64(n).expect("level within cap"),
            None => 0.0,
        }
    }

    pub fn distance(&self, other: &SAdicPoint) -> Result<BigRational> {
        Ok(self.sub(other)?.norm())
    }

    /// Phase of the canonical character: `sum_p {x_p}_p mod 1`. The value is
    /// a class function only when the resolution is at most level 0.
    pub fn char_phase(&self) -> CharacterValue {
        let sum = self
            .coords
            .iter()
            .zip(self.filtration.primes())
            .fold(BigRational::zero(), |acc, (x, &p)| acc + fractional_part(x, p));
        CharacterValue::new(sum)
    }

    /// `χ(ξ·x)`; fails if the product is not determined modulo `Z_S`.
    pub fn pairing(xi: &SAdicPoint, x: &SAdicPoint) -> Result<CharacterValue> {
        let prod = xi.mul(x)?;
        if prod.window.resolution > 0 {
            return Err(Error::WindowOverflow(format!(
                "product known only modulo B_{}; the character needs B_0",
                prod.window.resolution
            )));
        }
        Ok(prod.char_phase())
    }

    pub fn to_json(&self) -> Vec<CoordJson> {
        self.coords
            .iter()
            .zip(self.filtration.primes())
            .map(|(x, &p)| CoordJson {
                p,
                num: IntRepr::from_bigint(x.numer()),
                den_exp: den_exponent(x, p).expect("canonical"),
            })
            .collect()
    }

    pub fn from_json(filtration: Arc<Filtration>, coords: &[CoordJson], window: Window) -> Result<Self> {
        let mut out = Vec::with_capacity(filtration.primes().len());
        for &p in filtration.primes() {
            let c = coords
                .iter()
                .find(|c| c.p == p)
                .ok_or_else(|| Error::Format(format!("missing coordinate for p={p}")))?;
            out.push(c.to_ratio()?);
        }
        if coords.len() != out.len() {
            return Err(Error::Format("coordinate for a prime outside S".into()));
        }
        Self::new(filtration, out, window)
    }
}

/// `x · p^a` for any integer `a`.
pub(crate) fn scale_pow(x: &BigRational, p: u64, a: i64) -> BigRational {
    let pw = BigRational::from_integer(pow_int(p, a.unsigned_abs() as u32));
    if a >= 0 {
        x * pw
    } else {
        x / pw
    }
}

/// An integer that serializes as a JSON number when it fits in `i64`, else as a string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntRepr {
    Small(i64),
    Big(String),
}

impl IntRepr {
    pub fn from_bigint(n: &BigInt) -> Self {
        match n.to_i64() {
            Some(v) => IntRepr::Small(v),
            None => IntRepr::Big(n.to_string()),
        }
    }

    pub fn to_bigint(&self) -> Result<BigInt> {
        match self {
            IntRepr::Small(v) => Ok(BigInt::from(*v)),
            IntRepr::Big(s) => s.parse().map_err(|_| Error::Format(format!("bad integer {s:?}"))),
        }
    }
}

/// Textual encoding of one coordinate: `num / p^den_exp`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoordJson {
    pub p: u64,
    pub num: IntRepr,
    pub den_exp: i64,
}

impl CoordJson {
    pub fn to_ratio(&self) -> Result<BigRational> {
        let n = self.num.to_bigint()?;
        let pw = pow_int(self.p, self.den_exp.unsigned_abs() as u32);
        Ok(if self.den_exp >= 0 {
            BigRational::new(n, pw)
        } else {
            BigRational::from_integer(n * pw)
        })
    }
}

/// Indexing of the cosets of `B_ℓ` in `B_k`: per prime, representatives
/// `j · p^{-ord_p(r_k)}` for `0 <= j < p^{ord_p(r_k) - ord_p(r_ℓ)}`; the
/// flat order is row-major with primes ascending (first prime slowest) and
/// `j` ascending within a prime.
#[derive(Debug, Clone)]
pub struct CosetGrid {
    filtration: Arc<Filtration>,
    support: i64,
    resolution: i64,
    base: Vec<i64>,
    counts: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl CosetGrid {
    pub fn new(filtration: Arc<Filtration>, support: i64, resolution: i64) -> Result<Self> {
        require_sadic(&filtration)?;
        check_window(&filtration, Window { support, resolution })?;
        let a = filtration.prime_exponents(support)?;
        let b = filtration.prime_exponents(resolution)?;
        let cap = filtration.dimension_cap();
        let overflow = || Error::DimensionCap {
            count: format_ratio(
                &(filtration.radius(support).unwrap() / filtration.radius(resolution).unwrap()),
            ),
            cap,
        };
        let mut counts = Vec::with_capacity(a.len());
        let mut len = 1usize;
        for (i, &p) in filtration.primes().iter().enumerate() {
            let d = (a[i] - b[i]) as u32;
            let c = p.checked_pow(d).ok_or_else(overflow)? as usize;
            len = len.checked_mul(c).ok_or_else(overflow)?;
            if len > cap {
                return Err(overflow());
            }
            counts.push(c);
        }
        let mut strides = vec![1usize; counts.len()];
        for i in (0..counts.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * counts[i + 1];
        }
        Ok(CosetGrid { filtration, support, resolution, base: a, counts, strides, len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn support(&self) -> i64 {
        self.support
    }

    pub fn resolution(&self) -> i64 {
        self.resolution
    }

    pub fn filtration(&self) -> &Arc<Filtration> {
        &self.filtration
    }

    /// Per-prime coset counts `p^{ord_p(r_k) - ord_p(r_ℓ)}`.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Per-prime exponents `ord_p(r_k)`.
    pub fn base_exponents(&self) -> &[i64] {
        &self.base
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn digits(&self, idx: usize) -> Vec<usize> {
        self.counts.iter().zip(&self.strides).map(|(&c, &s)| (idx / s) % c).collect()
    }

    pub fn index(&self, js: &[usize]) -> usize {
        js.iter().zip(&self.strides).map(|(j, s)| j * s).sum()
    }

    pub fn window(&self) -> Window {
        Window { support: self.support, resolution: self.resolution }
    }

    /// Sphere level of the representative with index `idx`; `None` for the zero coset.
    pub fn sphere_level(&self, idx: usize) -> Result<Option<i64>> {
        let js = self.digits(idx);
        if js.iter().all(|&j| j == 0) {
            return Ok(None);
        }
        let need: Vec<Option<i64>> = js
            .iter()
            .zip(self.filtration.primes())
            .zip(&self.base)
            .map(|((&j, &p), &a)| {
                if j == 0 {
                    return None;
                }
                let mut v = 0i64;
                let mut j = j as u64;
                while j % p == 0 {
                    j /= p;
                    v += 1;
                }
                Some(a - v)
            })
            .collect();
        self.filtration.level_containing(&need).map(Some)
    }

    pub fn point(&self, idx: usize) -> SAdicPoint {
        let js = self.digits(idx);
        let coords = self
            .filtration
            .primes()
            .iter()
            .enumerate()
            .map(|(i, &p)| scaled_rep(js[i] as u64, p, self.base[i]))
            .collect();
        SAdicPoint { filtration: self.filtration.clone(), coords, window: self.window() }
    }

    pub fn points(&self) -> Vec<SAdicPoint> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    /// Index of the coset containing `x`, or `None` if `x ∉ B_k`.
    pub fn locate(&self, x: &SAdicPoint) -> Result<Option<usize>> {
        if x.window.resolution > self.resolution {
            return Err(Error::Resolution(format!(
                "point resolved only modulo B_{}, cosets need B_{}",
                x.window.resolution, self.resolution
            )));
        }
        let lv = self.filtration.prime_exponents(self.resolution)?;
        let mut idx = 0usize;
        for (i, &p) in self.filtration.primes().iter().enumerate() {
            let r = reduce_mod(&x.coords[i], p, -lv[i]);
            let scaled = scale_pow(&r, p, self.base[i]);
            if !scaled.is_integer() {
                return Ok(None);
            }
            let j = scaled.to_integer().to_usize().expect("index below coset count");
            idx += j * self.strides[i];
        }
        Ok(Some(idx))
    }
}

fn scaled_rep(j: u64, p: u64, base: i64) -> BigRational {
    scale_pow(&BigRational::from_integer(j.into()), p, -base)
}

/// Canonical representatives of `B_k / B_ℓ` in [`CosetGrid`] order.
pub fn enumerate_cosets(filtration: &Arc<Filtration>, k: i64, l: i64) -> Result<Vec<SAdicPoint>> {
    Ok(CosetGrid::new(filtration.clone(), k, l)?.points())
}

fn random_digits<R: Rng + ?Sized>(rng: &mut R, p: u64, count: usize, nonzero_first: bool) -> BigUint {
    let mut j = BigUint::zero();
    let mut pw = BigUint::one();
    for i in 0..count {
        let d = if i == 0 && nonzero_first { rng.gen_range(1..p) } else { rng.gen_range(0..p) };
        j += &pw * d;
        pw *= p;
    }
    j
}

fn sample_in_ball<R: Rng + ?Sized>(
    filtration: &Arc<Filtration>,
    n: i64,
    window: Window,
    rng: &mut R,
    sphere: bool,
) -> Result<SAdicPoint> {
    require_sadic(filtration)?;
    check_window(filtration, window)?;
    if n > window.support {
        return Err(Error::WindowOverflow(format!(
            "ball B_{n} exceeds the window support B_{}",
            window.support
        )));
    }
    if n <= window.resolution {
        if sphere {
            return Err(Error::Resolution(format!(
                "sphere S_{n} is not resolved modulo B_{}",
                window.resolution
            )));
        }
        return SAdicPoint::zero(filtration.clone(), window);
    }
    let a = filtration.prime_exponents(n)?;
    let b = filtration.prime_exponents(window.resolution)?;
    let ramified = if sphere { Some(filtration.ramification_prime(n)?) } else { None };
    let coords = filtration
        .primes()
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let j = random_digits(rng, p, (a[i] - b[i]) as usize, ramified == Some(p));
            let j = BigRational::from_integer(BigInt::from_biguint(Sign::Plus, j));
            scale_pow(&j, p, -a[i])
        })
        .collect();
    Ok(SAdicPoint { filtration: filtration.clone(), coords, window })
}

/// Uniform draw from `B_n` at the window resolution.
pub fn sample_uniform_ball<R: Rng + ?Sized>(
    filtration: &Arc<Filtration>,
    n: i64,
    window: Window,
    rng: &mut R,
) -> Result<SAdicPoint> {
    sample_in_ball(filtration, n, window, rng, false)
}

/// Uniform draw from `S_n = B_n \ B_{n-1}`: the lowest digit of the
/// ramified coordinate is drawn from `1..p`, all others freely.
pub fn sample_uniform_sphere<R: Rng + ?Sized>(
    filtration: &Arc<Filtration>,
    n: i64,
    window: Window,
    rng: &mut R,
) -> Result<SAdicPoint> {
    sample_in_ball(filtration, n, window, rng, true)
}
