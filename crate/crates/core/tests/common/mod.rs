//! Test-side oracles, written without the library's radial formulas.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Ramification primes `q(1), q(2), ...` of the S-adic filtration: the
/// base of the `L`-th smallest prime power with base in `S`. Each new prime
/// power multiplies the lcm by its base.
pub fn ramification_sequence(primes: &[u64], levels: usize) -> Vec<u64> {
    let mut powers: Vec<(u128, u64)> = Vec::new();
    for &p in primes {
        let mut q = p as u128;
        while q < 1u128 << 120 {
            powers.push((q, p));
            q = match q.checked_mul(p as u128) {
                Some(v) => v,
                None => break,
            };
        }
    }
    powers.sort_unstable();
    powers.into_iter().take(levels).map(|(_, p)| p).collect()
}

/// `r_n` for `0 <= n <= levels` by folding lcm over the sorted prime powers.
pub fn lcm_radii(primes: &[u64], levels: usize) -> Vec<f64> {
    let mut powers: Vec<u128> = Vec::new();
    for &p in primes {
        let mut q = p as u128;
        while q < 1u128 << 100 {
            powers.push(q);
            q *= p as u128;
        }
    }
    powers.sort_unstable();
    let mut out = vec![1.0];
    let mut lcm = BigInt::one();
    for q in powers {
        let next = lcm.lcm(&BigInt::from(q));
        if next != lcm {
            lcm = next;
            out.push(lcm.to_f64().unwrap());
            if out.len() > levels {
                break;
            }
        }
    }
    out
}

/// `r_n` for any integer `n`, with `r_{-n} = 1/r_n`.
pub fn radius(primes: &[u64], n: i64) -> f64 {
    let r = lcm_radii(primes, n.unsigned_abs() as usize)[n.unsigned_abs() as usize];
    if n >= 0 {
        r
    } else {
        1.0 / r
    }
}

/// `ord_p(y)`, `None` for zero.
pub fn ord_p(y: &BigRational, p: u64) -> Option<i64> {
    if y.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    let mut v = 0i64;
    let (mut n, mut d) = (y.numer().abs(), y.denom().abs());
    while (&n % &pb).is_zero() {
        n /= &pb;
        v += 1;
    }
    while (&d % &pb).is_zero() {
        d /= &pb;
        v -= 1;
    }
    Some(v)
}

/// p-adic fractional part `{y}_p ∈ [0,1)`: writing `y = a / (p^k b)` with
/// `p ∤ b`, it is `c / p^k` with `c ≡ a b^{-1} (mod p^k)`.
pub fn frac_p(y: &BigRational, p: u64) -> BigRational {
    let pb = BigInt::from(p);
    let mut d = y.denom().clone();
    let mut pk = BigInt::one();
    while (&d % &pb).is_zero() {
        d /= &pb;
        pk *= &pb;
    }
    if pk.is_one() {
        return BigRational::zero();
    }
    // inverse of d modulo p^k
    let g = d.extended_gcd(&pk);
    assert!(g.gcd.is_one());
    let inv = g.x.mod_floor(&pk);
    let c = (y.numer() * inv).mod_floor(&pk);
    BigRational::new(c, pk)
}

pub fn chi(phase: &BigRational) -> Complex<f64> {
    let a = 2.0 * std::f64::consts::PI * phase.to_f64().unwrap();
    Complex::new(a.cos(), a.sin())
}

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// A product of `Q_{p_i}` axes with a filtration `B_L = ∏ p_i^{-e_i(L)} Z_{p_i}`
/// and a pairing that matches axis `i` of `ξ` with axis `partner[i]` of `x`.
pub struct AxisModel {
    pub axes: Vec<u64>,
    pub partner: Vec<usize>,
    exps: Box<dyn Fn(i64) -> Vec<i64> + Sync>,
}

impl AxisModel {
    /// `Q_S` with the lcm filtration.
    pub fn sadic(primes: &[u64]) -> Self {
        let primes = primes.to_vec();
        let seq = ramification_sequence(&primes, 400);
        let ps = primes.clone();
        AxisModel {
            axes: primes.clone(),
            partner: (0..primes.len()).collect(),
            exps: Box::new(move |l: i64| {
                let m = l.unsigned_abs() as usize;
                let sign = if l >= 0 { 1 } else { -1 };
                ps.iter().map(|&p| sign * seq[..m].iter().filter(|&&q| q == p).count() as i64).collect()
            }),
        }
    }

    /// `Q_p^n` with the flag filtration
    /// `B_{nℓ+j} = (p^{-ℓ-1} Z_p)^j × (p^{-ℓ} Z_p)^{n-j}`, self-dual under the
    /// reversed pairing `Σ ξ_i x_{n-1-i}`.
    pub fn flag(p: u64, n: usize) -> Self {
        AxisModel {
            axes: vec![p; n],
            partner: (0..n).rev().collect(),
            exps: Box::new(move |l: i64| {
                let ell = l.div_euclid(n as i64);
                let j = l.rem_euclid(n as i64) as usize;
                (0..n).map(|i| if i < j { ell + 1 } else { ell }).collect()
            }),
        }
    }

    pub fn exponents(&self, l: i64) -> Vec<i64> {
        (self.exps)(l)
    }

    pub fn radius(&self, l: i64) -> f64 {
        self.axes.iter().zip(self.exponents(l)).map(|(&p, e)| (p as f64).powi(e as i32)).product()
    }

    /// Smallest `L` in `[lo, hi]` with `v_i >= -e_i(L)` for every axis (`None` entries are unconstrained).
    pub fn level_of(&self, v: &[Option<i64>], lo: i64, hi: i64) -> Option<i64> {
        (lo..=hi).find(|&l| {
            self.exponents(l).iter().zip(v).all(|(&e, vi)| vi.is_none_or(|vi| vi >= -e))
        })
    }

    /// Sphere level of a point given per axis.
    pub fn level_of_point(&self, x: &[BigRational]) -> Option<i64> {
        let v: Vec<Option<i64>> = x.iter().zip(&self.axes).map(|(c, &p)| ord_p(c, p)).collect();
        if v.iter().all(|o| o.is_none()) {
            return None;
        }
        self.level_of(&v, -100, 100)
    }

    /// Midpoint Riemann sum of `∫_{B_M} e^{-t‖ξ‖^α} χ(-xξ) dξ` over the cosets
    /// of `B_{-R}`. On one axis the character sum over `{c : ord c = v} mod p^h`
    /// is the difference of two subgroup sums, each `p^{h-u}` or `0`. The
    /// level of a coset is the max of its per-axis levels, so the exact mass
    /// of the cosets at level `≤ L` is a product of per-axis prefix sums.
    pub fn riemann_sum(&self, x: &[BigRational], t: f64, alpha: f64, m: i64, r: i64) -> f64 {
        let n = self.axes.len();
        let top = self.exponents(m);
        let cell = self.exponents(-r);
        let pow = |p: u64, e: i64| BigRational::from_integer(BigInt::from(p)).pow(e as i32);
        // per axis: (level of the valuation class, exact S(v) / p^h); the zero class has no level
        let mut axes: Vec<Vec<(Option<i64>, BigRational)>> = Vec::with_capacity(n);
        for i in 0..n {
            let p = self.axes[i];
            let lo = -top[i];
            let hi = -cell[i];
            let xo = ord_p(&x[self.partner[i]], p);
            let full = |u: i64| -> BigRational {
                if xo.is_none_or(|o| o + u >= 0) {
                    pow(p, -u)
                } else {
                    BigRational::zero()
                }
            };
            let mut list: Vec<(Option<i64>, BigRational)> = (lo..hi)
                .map(|u| {
                    let level = (-r..=m).find(|&l| u >= -self.exponents(l)[i]);
                    (level, full(u) - full(u + 1))
                })
                .collect();
            list.push((None, pow(p, -hi)));
            axes.push(list);
        }
        let mass_up_to = |level: Option<i64>| -> BigRational {
            axes.iter()
                .map(|list| {
                    list.iter()
                        .filter(|(l, _)| match (l, level) {
                            (None, _) => true,
                            (Some(_), None) => false,
                            (Some(a), Some(b)) => *a <= b,
                        })
                        .fold(BigRational::zero(), |acc, (_, v)| acc + v)
                })
                .fold(BigRational::one(), |acc, v| acc * v)
        };
        let origin = mass_up_to(None);
        let mut per_level = Vec::new();
        let mut prev = origin.clone();
        for l in -r..=m {
            let cur = mass_up_to(Some(l));
            let c = &cur - &prev;
            if !c.is_zero() {
                per_level.push((l, c.to_f64().unwrap()));
            }
            prev = cur;
        }
        let total = prev;
        // Σ c_L w_L against the weight at the outermost populated level
        let ra = |l: i64| self.radius(l).powf(alpha);
        let Some(&(star, _)) = per_level.last() else {
            return origin.to_f64().unwrap();
        };
        let w_star = (-t * ra(star)).exp();
        let mut z = w_star * total.to_f64().unwrap() - (-t * ra(star)).exp_m1() * origin.to_f64().unwrap();
        for &(l, c) in &per_level {
            if l != star {
                let gap = t * (ra(star) - ra(l));
                let dw = if gap < 1.0 { w_star * gap.exp_m1() } else { (-t * ra(l)).exp() - w_star };
                z += c * dw;
            }
        }
        z
    }

    /// O-RS: the Riemann sum with `M` and `R` pushed until two successive
    /// values agree to `tol` relative. Returns the value and the last change.
    pub fn ors_kernel(&self, x: &[BigRational], t: f64, alpha: f64, tol: f64) -> (f64, f64) {
        let mut level = 8;
        let mut prev = self.riemann_sum(x, t, alpha, level, level);
        loop {
            level += 4;
            let cur = self.riemann_sum(x, t, alpha, level, level);
            let change = (cur - prev).abs();
            if change <= tol * cur.abs().max(1e-300) || level > 200 {
                return (cur, change);
            }
            prev = cur;
        }
    }
}

/// Direct sum of `e^{-t‖ξ‖^α} χ(-xξ) μ` over every coset of `B_{-R}` in
/// `B_M` for a single-prime model, enumerated explicitly.
pub fn brute_force_single_prime(p: u64, x: &BigRational, t: f64, alpha: f64, m: i64, r: i64) -> f64 {
    let count = (p as i64).pow((m + r) as u32);
    let mut total = 0.0;
    for j in 0..count {
        let c = BigRational::new(BigInt::from(j), BigInt::from(p).pow(m as u32));
        let norm = match ord_p(&c, p) {
            None => 0.0,
            Some(v) if v >= r => 0.0,
            Some(v) => (p as f64).powi(-(v as i32)),
        };
        let w = if norm == 0.0 { 1.0 } else { (-t * norm.powf(alpha)).exp() };
        total += w * chi(&frac_p(&(-(x * &c)), p)).re;
    }
    total * (p as f64).powi(-(r as i32))
}
