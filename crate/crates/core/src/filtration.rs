//! Radius sequences of self-dual filtrations.
//!
//! An S-adic filtration has balls `B_n = r_n^{-1} Z_S` whose radii are the
//! distinct values of `lcm{p^l <= N : p in S}`, re-indexed so that they are
//! strictly increasing with `r_0 = 1`, and extended to negative levels by
//! `r_{-n} = 1 / r_n`. Consecutive radii differ by a prime factor
//! `q(n) = r_n / r_{n-1}` and the sequence satisfies `q(n) = q(1 - n)`.
//!
//! General filtrations are described by their ramification sequence alone;
//! every radial quantity (heat kernel, spectrum, radial laws) only needs the
//! radii, so they share all of that machinery with the S-adic case.

use std::fmt;
use std::sync::RwLock;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{biguint_to_f64, Real};

pub const DEFAULT_LEVEL_CAP: i64 = 64;
pub const DEFAULT_DIMENSION_CAP: usize = 4096;

/// Deterministic Miller-Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let pow = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(acc, b);
            }
            b = mul(b, b);
            e >>= 1;
        }
        acc
    };
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Prime factors of `n` in ascending order, with multiplicity.
pub fn factorize(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        while n % d == 0 {
            out.push(d);
            n /= d;
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// The finite set `S` of primes, kept in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct PrimeSet(Vec<u64>);

impl PrimeSet {
    pub fn new(primes: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut v: Vec<u64> = primes.into_iter().collect();
        if v.is_empty() {
            return Err(Error::InvalidPrimeSet("empty".into()));
        }
        if let Some(&p) = v.iter().find(|&&p| !is_prime(p)) {
            return Err(Error::NotPrime(p));
        }
        v.sort_unstable();
        if v.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidPrimeSet("duplicate prime".into()));
        }
        Ok(PrimeSet(v))
    }

    pub fn primes(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, p: u64) -> bool {
        self.0.binary_search(&p).is_ok()
    }

    pub fn index_of(&self, p: u64) -> Option<usize> {
        self.0.binary_search(&p).ok()
    }
}

impl TryFrom<Vec<u64>> for PrimeSet {
    type Error = Error;
    fn try_from(v: Vec<u64>) -> Result<Self> {
        PrimeSet::new(v)
    }
}

impl From<PrimeSet> for Vec<u64> {
    fn from(s: PrimeSet) -> Self {
        s.0
    }
}

impl fmt::Display for PrimeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Value of the von Mangoldt-type function: `log p` is carried as the prime `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VonMangoldt {
    Zero,
    Log(u64),
}

impl VonMangoldt {
    pub fn value(self) -> f64 {
        match self {
            VonMangoldt::Zero => 0.0,
            VonMangoldt::Log(p) => (p as f64).ln(),
        }
    }
}

/// `Λ_S(n)`, extended to `n <= 0` by `Λ(|n| + 1)`.
pub fn von_mangoldt(primes: &PrimeSet, n: i64) -> VonMangoldt {
    let m = if n > 0 { n as u64 } else { n.unsigned_abs() + 1 };
    if m < 2 {
        return VonMangoldt::Zero;
    }
    let f = factorize(m);
    let p = f[0];
    if f.iter().all(|&q| q == p) && primes.contains(p) {
        VonMangoldt::Log(p)
    } else {
        VonMangoldt::Zero
    }
}

/// Raw (not re-indexed) `e^{ψ_S(n)}`: `lcm{p^l <= |n|}`, inverted for `n < 0`.
pub fn raw_chebyshev_exp(primes: &PrimeSet, n: i64) -> BigRational {
    let m = n.unsigned_abs();
    let mut acc = BigUint::one();
    for &p in primes.primes() {
        let mut pw = p as u128;
        while pw <= m as u128 {
            acc *= p;
            pw *= p as u128;
        }
    }
    let r = BigRational::from_integer(acc.into());
    if n < 0 {
        r.recip()
    } else {
        r
    }
}

/// Ramification sequence `q(1), q(2), ...` of a general filtration: a finite
/// prefix followed by a repeating period (the period may be empty, in which
/// case levels beyond the prefix are unavailable).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralSpec {
    pub prefix: Vec<u64>,
    pub period: Vec<u64>,
    /// Declared upper bound on every ramification index.
    pub bound: u64,
    /// Present when the sequence came from composite indices: the number of
    /// consecutive prime levels each original index expanded into.
    pub grouping: Option<Grouping>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grouping {
    pub prefix: Vec<usize>,
    pub period: Vec<usize>,
}

impl GeneralSpec {
    pub fn constant(p: u64) -> Self {
        GeneralSpec { prefix: vec![], period: vec![p], bound: p, grouping: None }
    }

    pub fn periodic(period: Vec<u64>) -> Self {
        let bound = period.iter().copied().max().unwrap_or(0);
        GeneralSpec { prefix: vec![], period, bound, grouping: None }
    }

    pub fn explicit(seq: Vec<u64>) -> Self {
        let bound = seq.iter().copied().max().unwrap_or(0);
        GeneralSpec { prefix: seq, period: vec![], bound, grouping: None }
    }

    /// Expands composite indices (e.g. `p^n` per step for `Q_p^n`) into
    /// consecutive prime levels, recording the grouping.
    pub fn from_composite(prefix: &[u64], period: &[u64]) -> Result<Self> {
        let expand = |v: &[u64]| -> Result<(Vec<u64>, Vec<usize>)> {
            let mut seq = Vec::new();
            let mut groups = Vec::new();
            for &c in v {
                if c < 2 {
                    return Err(Error::InvalidFiltration(format!("index {c} < 2")));
                }
                let f = factorize(c);
                groups.push(f.len());
                seq.extend(f);
            }
            Ok((seq, groups))
        };
        let (pre, pre_g) = expand(prefix)?;
        let (per, per_g) = expand(period)?;
        let bound = pre.iter().chain(per.iter()).copied().max().unwrap_or(0);
        Ok(GeneralSpec {
            prefix: pre,
            period: per,
            bound,
            grouping: Some(Grouping { prefix: pre_g, period: per_g }),
        })
    }

    fn get(&self, k: usize) -> Option<u64> {
        // k is 1-based
        let i = k - 1;
        if i < self.prefix.len() {
            Some(self.prefix[i])
        } else if self.period.is_empty() {
            None
        } else {
            Some(self.period[(i - self.prefix.len()) % self.period.len()])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FiltrationKind {
    SAdic(PrimeSet),
    General(GeneralSpec),
}

/// Outcome of locating a radius in the radius sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelLocation {
    Exact(i64),
    /// `radius(below) < r < radius(below + 1)`.
    Between { below: i64 },
}

#[derive(Debug, Default)]
struct Memo {
    /// `q[k - 1] = q(k)` for `k >= 1`.
    q: Vec<u64>,
    /// `radii[n] = r_n` for `n >= 0`.
    radii: Vec<BigUint>,
    radii_f64: Vec<f64>,
    /// `exps[n][i] = ord_{primes[i]}(r_n)` for `n >= 0`.
    exps: Vec<Vec<i64>>,
    /// Next unused power of each prime (S-adic generation state).
    next_powers: Vec<BigUint>,
}

/// A self-dual filtration, described at the radial level.
#[derive(Debug)]
pub struct Filtration {
    kind: FiltrationKind,
    primes: Vec<u64>,
    level_cap: i64,
    dimension_cap: usize,
    memo: RwLock<Memo>,
}

impl Clone for Filtration {
    fn clone(&self) -> Self {
        Filtration::build(self.kind.clone(), self.level_cap, self.dimension_cap)
    }
}

impl PartialEq for Filtration {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Filtration {
    fn build(kind: FiltrationKind, level_cap: i64, dimension_cap: usize) -> Self {
        let primes = match &kind {
            FiltrationKind::SAdic(s) => s.primes().to_vec(),
            FiltrationKind::General(g) => {
                let mut v: Vec<u64> = g.prefix.iter().chain(g.period.iter()).copied().collect();
                v.sort_unstable();
                v.dedup();
                v
            }
        };
        let memo = Memo {
            q: Vec::new(),
            radii: vec![BigUint::one()],
            radii_f64: vec![1.0],
            exps: vec![vec![0; primes.len()]],
            next_powers: primes.iter().map(|&p| BigUint::from(p)).collect(),
        };
        Filtration { kind, primes, level_cap, dimension_cap, memo: RwLock::new(memo) }
    }

    pub fn sadic(primes: PrimeSet) -> Self {
        Self::build(FiltrationKind::SAdic(primes), DEFAULT_LEVEL_CAP, DEFAULT_DIMENSION_CAP)
    }

    /// Convenience constructor from a list of primes.
    pub fn from_primes(primes: &[u64]) -> Result<Self> {
        Ok(Self::sadic(PrimeSet::new(primes.iter().copied())?))
    }

    /// Builds a general filtration from its ramification sequence for `n >= 1`;
    /// levels `n <= 0` follow from `q(n) = q(1 - n)`.
    pub fn general(spec: GeneralSpec) -> Result<Self> {
        if spec.prefix.is_empty() && spec.period.is_empty() {
            return Err(Error::InvalidFiltration("empty ramification sequence".into()));
        }
        if spec.bound < 2 {
            return Err(Error::InvalidFiltration("bound must be at least 2".into()));
        }
        for &q in spec.prefix.iter().chain(spec.period.iter()) {
            if !is_prime(q) {
                return Err(Error::NotPrime(q));
            }
            if q > spec.bound {
                return Err(Error::InvalidFiltration(format!(
                    "ramification {q} exceeds the declared bound {}: indices must be uniformly bounded from above",
                    spec.bound
                )));
            }
        }
        Ok(Self::build(FiltrationKind::General(spec), DEFAULT_LEVEL_CAP, DEFAULT_DIMENSION_CAP))
    }

    /// Filtration of `Q_p^dim` by `p^l Z_p^dim`, expanded into prime steps.
    pub fn taibleson(p: u64, dim: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let idx = p
            .checked_pow(dim)
            .ok_or_else(|| Error::InvalidArgument("p^dim overflows u64".into()))?;
        Self::general(GeneralSpec::from_composite(&[], &[idx])?)
    }

    pub fn with_level_cap(mut self, cap: i64) -> Self {
        self.level_cap = cap.max(1);
        self
    }

    pub fn with_dimension_cap(mut self, cap: usize) -> Self {
        self.dimension_cap = cap.max(1);
        self
    }

    pub fn kind(&self) -> &FiltrationKind {
        &self.kind
    }

    pub fn is_sadic(&self) -> bool {
        matches!(self.kind, FiltrationKind::SAdic(_))
    }

    pub fn prime_set(&self) -> Option<&PrimeSet> {
        match &self.kind {
            FiltrationKind::SAdic(s) => Some(s),
            FiltrationKind::General(_) => None,
        }
    }

    /// Distinct primes occurring as ramification indices.
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn level_cap(&self) -> i64 {
        self.level_cap
    }

    pub fn dimension_cap(&self) -> usize {
        self.dimension_cap
    }

    /// Largest ramification index that occurs (`max_{p in S} p` in the S-adic case).
    pub fn max_ramification(&self) -> u64 {
        match &self.kind {
            FiltrationKind::SAdic(s) => *s.primes().last().unwrap(),
            FiltrationKind::General(g) => {
                g.prefix.iter().chain(g.period.iter()).copied().max().unwrap_or(2)
            }
        }
    }

    pub fn check_level(&self, n: i64) -> Result<()> {
        if n.abs() > self.level_cap {
            Err(Error::LevelCap { level: n, cap: self.level_cap })
        } else {
            Ok(())
        }
    }

    fn ensure(&self, n: usize) -> Result<()> {
        if self.memo.read().unwrap().radii.len() > n {
            return Ok(());
        }
        let mut memo = self.memo.write().unwrap();
        while memo.radii.len() <= n {
            let k = memo.radii.len(); // next level to fill
            let q = match &self.kind {
                FiltrationKind::SAdic(_) => {
                    let (i, _) = memo
                        .next_powers
                        .iter()
                        .enumerate()
                        .min_by(|a, b| a.1.cmp(b.1))
                        .unwrap();
                    let p = self.primes[i];
                    memo.next_powers[i] *= p;
                    p
                }
                FiltrationKind::General(g) => g.get(k).ok_or_else(|| {
                    Error::InvalidFiltration(format!(
                        "ramification sequence defines only {} levels",
                        g.prefix.len()
                    ))
                })?,
            };
            let r = &memo.radii[k - 1] * q;
            let rf = biguint_to_f64(&r);
            let mut e = memo.exps[k - 1].clone();
            let i = self.primes.binary_search(&q).expect("ramification prime is tracked");
            e[i] += 1;
            memo.q.push(q);
            memo.radii.push(r);
            memo.radii_f64.push(rf);
            memo.exps.push(e);
        }
        Ok(())
    }

    /// Ramification index `q(n) = r_n / r_{n-1}`.
    pub fn ramification_prime(&self, n: i64) -> Result<u64> {
        self.check_level(n)?;
        let k = if n >= 1 { n } else { 1 - n };
        self.ensure(k as usize)?;
        Ok(self.memo.read().unwrap().q[k as usize - 1])
    }

    /// Exact radius `r_n`.
    pub fn radius(&self, n: i64) -> Result<BigRational> {
        self.check_level(n)?;
        let k = n.unsigned_abs() as usize;
        self.ensure(k)?;
        let r = BigRational::from_integer(self.memo.read().unwrap().radii[k].clone().into());
        Ok(if n < 0 { r.recip() } else { r })
    }

    /// Integer radius `r_n` for `n >= 0`.
    pub fn radius_int(&self, n: i64) -> Result<BigUint> {
        if n < 0 {
            return Err(Error::InvalidArgument(format!("radius at level {n} is not an integer")));
        }
        self.check_level(n)?;
        self.ensure(n as usize)?;
        Ok(self.memo.read().unwrap().radii[n as usize].clone())
    }

    /// `r_n` as `f64`; negative levels are reciprocals of the positive ones.
    pub fn radius_f64(&self, n: i64) -> Result<f64> {
        self.check_level(n)?;
        let k = n.unsigned_abs() as usize;
        self.ensure(k)?;
        let r = self.memo.read().unwrap().radii_f64[k];
        Ok(if n < 0 { 1.0 / r } else { r })
    }

    pub fn radius_real<T: Real>(&self, n: i64) -> Result<T> {
        Ok(T::of(self.radius_f64(n)?))
    }

    /// Radii for the contiguous level range `lo..=hi`.
    pub fn radii_f64(&self, lo: i64, hi: i64) -> Result<Vec<f64>> {
        self.check_level(lo)?;
        self.check_level(hi)?;
        let top = lo.unsigned_abs().max(hi.unsigned_abs()) as usize;
        self.ensure(top)?;
        let memo = self.memo.read().unwrap();
        Ok((lo..=hi)
            .map(|n| {
                let r = memo.radii_f64[n.unsigned_abs() as usize];
                if n < 0 {
                    1.0 / r
                } else {
                    r
                }
            })
            .collect())
    }

    /// `ord_p(r_n)`; negative for negative levels. Zero for primes that never ramify.
    pub fn prime_exponent(&self, p: u64, n: i64) -> Result<i64> {
        self.check_level(n)?;
        let Ok(i) = self.primes.binary_search(&p) else {
            return Ok(0);
        };
        let k = n.unsigned_abs() as usize;
        self.ensure(k)?;
        let e = self.memo.read().unwrap().exps[k][i];
        Ok(if n < 0 { -e } else { e })
    }

    /// `ord_p(r_n)` for every tracked prime, in ascending prime order.
    pub fn prime_exponents(&self, n: i64) -> Result<Vec<i64>> {
        self.check_level(n)?;
        let k = n.unsigned_abs() as usize;
        self.ensure(k)?;
        let e = self.memo.read().unwrap().exps[k].clone();
        Ok(if n < 0 { e.into_iter().map(|v| -v).collect() } else { e })
    }

    /// Smallest level `L` with `ord_p(r_L) >= need[i]` for every prime `i`
    /// (entries of `None` impose no constraint). This is the smallest ball
    /// `B_L = prod p^{-ord_p(r_L)} Z_p` containing a point whose p-adic
    /// valuations are `-need[i]`.
    pub fn level_containing(&self, need: &[Option<i64>]) -> Result<i64> {
        let ok = |l: i64| -> Result<bool> {
            let e = self.prime_exponents(l)?;
            Ok(need.iter().zip(e.iter()).all(|(n, e)| n.map_or(true, |n| *e >= n)))
        };
        let cap = self.level_cap;
        if !ok(cap)? {
            return Err(Error::LevelCap { level: cap + 1, cap });
        }
        if ok(-cap)? {
            return if need.iter().all(Option::is_none) {
                Ok(-cap)
            } else {
                Err(Error::LevelCap { level: -cap - 1, cap })
            };
        }
        let (mut lo, mut hi) = (-cap, cap); // ok(lo) false, ok(hi) true
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if ok(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Locates a positive rational in the radius sequence.
    pub fn level_of_radius(&self, r: &BigRational) -> Result<LevelLocation> {
        if r <= &BigRational::zero() {
            return Err(Error::InvalidArgument("radius must be positive".into()));
        }
        let mut n = 0i64;
        if *r >= BigRational::one() {
            loop {
                let rn = self.radius(n)?;
                if &rn == r {
                    return Ok(LevelLocation::Exact(n));
                }
                let next = self.radius(n + 1)?;
                if r < &next {
                    return Ok(LevelLocation::Between { below: n });
                }
                n += 1;
            }
        } else {
            loop {
                n -= 1;
                let rn = self.radius(n)?;
                if &rn == r {
                    return Ok(LevelLocation::Exact(n));
                }
                if &rn < r {
                    return Ok(LevelLocation::Between { below: n });
                }
            }
        }
    }

    /// Group level of an original (composite) index for filtrations built by
    /// [`GeneralSpec::from_composite`]; identity otherwise.
    pub fn expanded_level(&self, original: i64) -> Result<i64> {
        let FiltrationKind::General(GeneralSpec { grouping: Some(g), .. }) = &self.kind else {
            return Ok(original);
        };
        let m = original.unsigned_abs() as usize;
        let mut total = 0usize;
        for i in 0..m {
            let size = if i < g.prefix.len() {
                g.prefix[i]
            } else if g.period.is_empty() {
                return Err(Error::InvalidFiltration("grouping exhausted".into()));
            } else {
                g.period[(i - g.prefix.len()) % g.period.len()]
            };
            total += size;
        }
        let t = total as i64;
        Ok(if original < 0 { -t } else { t })
    }

    /// Raw radius sequence value (S-adic only), before re-indexing.
    pub fn raw_radius(&self, n: i64) -> Result<BigRational> {
        match &self.kind {
            FiltrationKind::SAdic(s) => Ok(raw_chebyshev_exp(s, n)),
            FiltrationKind::General(_) => Err(Error::NotSAdic),
        }
    }

    /// Raw von Mangoldt-type value (S-adic only).
    pub fn lambda(&self, n: i64) -> Result<VonMangoldt> {
        match &self.kind {
            FiltrationKind::SAdic(s) => Ok(von_mangoldt(s, n)),
            FiltrationKind::General(_) => Err(Error::NotSAdic),
        }
    }
}

/// Formats an exact rational as `a/b` (or `a` for integers).
pub fn format_ratio(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
