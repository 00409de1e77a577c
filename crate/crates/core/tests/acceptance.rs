//! Acceptance criteria 1 to 9. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::sync::Arc;
use std::time::Instant;

use common::{chi, frac_p, radius, AxisModel};
use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sadic_heat::markov::{condition_checks, path_rng, sample_paths, IncrementSampler};
use sadic_heat::spectral::{
    apply_dalpha, duhamel_solve, heat_kernel_at, heat_kernel_mass, kernel_estimates_check, spectrum,
    SpectralField,
};
use sadic_heat::stats::{ks_one_sample, ks_two_sample};
use sadic_heat::{CosetGrid, Filtration, GeneralSpec, RadialPosition, SAdicPoint, Symbol, TestFunction, Window};

const EPS: f64 = 1e-12;
const ALPHAS: [f64; 3] = [0.5, 1.0, 2.0];

fn prime_sets() -> Vec<Vec<u64>> {
    vec![vec![2], vec![2, 3], vec![3, 5]]
}

fn sym_of(f: Filtration, alpha: f64) -> Symbol {
    Symbol::new(Arc::new(f), alpha).unwrap()
}

fn sadic(primes: &[u64], alpha: f64) -> Symbol {
    sym_of(Filtration::from_primes(primes).unwrap().with_level_cap(256), alpha)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_function(f: &Arc<Filtration>, k: i64, l: i64, rng: &mut ChaCha8Rng) -> TestFunction {
    let grid = CosetGrid::new(f.clone(), k, l).unwrap();
    let values = (0..grid.len()).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    TestFunction::new(f.clone(), k, l, values).unwrap()
}

fn max_abs_diff(a: &TestFunction, b: &TestFunction) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

// 1. kernel normalization
fn kernel_normalization(sym: impl Fn(&[u64], f64) -> Symbol, sets: &[Vec<u64>]) -> (f64, f64) {
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    for s in sets {
        for a in ALPHAS {
            let sy = sym(s, a);
            for t in [0.01, 1.0, 100.0] {
                let start = Instant::now();
                let m = heat_kernel_mass(&sy, t, EPS).unwrap();
                slowest = slowest.max(start.elapsed().as_secs_f64());
                worst = worst.max((m.value - 1.0).abs());
            }
        }
    }
    (worst, slowest)
}

fn criterion_1() -> Outcome {
    let (worst, slowest) = kernel_normalization(sadic, &prime_sets());
    outcome(
        worst <= 1e-9 && slowest < 1.0,
        format!("max |mass - 1| = {worst:.2e}, slowest case {slowest:.3} s over 27 cases"),
    )
}

// 2. series vs Riemann-sum oracle; the library runs at eps 1e-40 so its
// certified tail is negligible even where Z is tiny
struct OracleStats {
    points: usize,
    worst_excess: f64,
    worst_rel: f64,
}

fn compare_with_ors(
    model: &AxisModel,
    sym: &Symbol,
    level_scale: i64,
    points: &[Vec<BigRational>],
    library_level: impl Fn(&[BigRational]) -> Option<i64> + Sync,
) -> OracleStats {
    let cases: Vec<(usize, f64)> =
        (0..points.len()).flat_map(|i| [0.01, 1.0, 100.0].map(|t| (i, t))).collect();
    let results: Vec<(f64, f64)> = cases
        .par_iter()
        .map(|&(i, t)| {
            let x = &points[i];
            let level = model.level_of_point(x).expect("nonzero point");
            assert_eq!(library_level(x), Some(level), "library and oracle disagree on the level of {x:?}");
            assert!(level.abs() <= 6 * level_scale);
            let lib = heat_kernel_at(sym, RadialPosition::Sphere(level), t, 1e-40).unwrap();
            let (ors, change) = model.ors_kernel(x, t, sym.alpha(), 1e-11);
            let err = (lib.value - ors).abs();
            let allowed = 1e-6 * ors.abs() + lib.tail_bound + change;
            (err / allowed, err / ors.abs())
        })
        .collect();
    OracleStats {
        points: points.len(),
        worst_excess: results.iter().map(|r| r.0).fold(0.0, f64::max),
        worst_rel: results.iter().map(|r| r.1).fold(0.0, f64::max),
    }
}

fn sadic_points(model: &AxisModel) -> Vec<Vec<BigRational>> {
    let primes = model.axes.clone();
    let mut out = Vec::new();
    for level in -6..=6i64 {
        let e = model.exponents(level);
        let mut found = 0;
        for (i, &p) in primes.iter().enumerate() {
            for unit in [1i64, -1, 7] {
                if unit % p as i64 == 0 {
                    continue;
                }
                let mut x = vec![BigRational::zero(); primes.len()];
                let pe = BigInt::from(p).pow(e[i].unsigned_abs() as u32);
                x[i] = if e[i] >= 0 {
                    BigRational::new(BigInt::from(unit), pe)
                } else {
                    BigRational::from_integer(BigInt::from(unit) * pe)
                };
                // a smaller second coordinate must not change the level
                if primes.len() > 1 {
                    let j = (i + 1) % primes.len();
                    x[j] = BigRational::from_integer(BigInt::from(primes[j]).pow(8));
                }
                if model.level_of_point(&x) == Some(level) && found < 2 {
                    out.push(x);
                    found += 1;
                }
            }
        }
        assert!(found > 0, "no sample point at level {level}");
    }
    out
}

fn criterion_2() -> Outcome {
    let mut total = 0;
    let mut worst_excess: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    for s in prime_sets() {
        let model = AxisModel::sadic(&s);
        let points = sadic_points(&model);
        let f = Arc::new(Filtration::from_primes(&s).unwrap().with_level_cap(256));
        for a in ALPHAS {
            let sy = Symbol::new(f.clone(), a).unwrap();
            let stats = compare_with_ors(&model, &sy, 1, &points, |x| {
                SAdicPoint::new(f.clone(), x.to_vec(), Window::new(12, -12).unwrap()).unwrap().sphere_level().unwrap()
            });
            total += stats.points;
            worst_excess = worst_excess.max(stats.worst_excess);
            worst_rel = worst_rel.max(stats.worst_rel);
        }
    }
    outcome(
        worst_excess <= 1.0,
        format!(
            "{total} point/alpha pairs x 3 times, worst rel err {worst_rel:.2e}, worst err/allowance {worst_excess:.3}"
        ),
    )
}

// 3. Fourier exactness
fn character_table_error(primes: &[u64], k: i64, l: i64) -> f64 {
    let f = Arc::new(Filtration::from_primes(primes).unwrap());
    let grid = CosetGrid::new(f.clone(), k, l).unwrap();
    let dual = CosetGrid::new(f.clone(), -l, -k).unwrap();
    let r_l = radius(primes, l);
    let mut worst: f64 = 0.0;
    for j in 0..grid.len() {
        let col = TestFunction::delta_coset(f.clone(), k, l, j).unwrap().fourier().unwrap();
        let x = grid.point(j);
        for i in 0..dual.len() {
            let xi = dual.point(i);
            let mut phase = BigRational::zero();
            for (a, &p) in primes.iter().enumerate() {
                phase += frac_p(&(&xi.coords()[a] * &x.coords()[a]), p);
            }
            let expected = chi(&phase) * r_l;
            worst = worst.max((col.values()[i] - expected).norm());
        }
    }
    worst
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let windows: [(&[u64], i64, i64); 7] = [
        (&[2], 3, -4),
        (&[2], 0, -7),
        (&[2, 3], 3, -3),
        (&[2, 3], 2, -2),
        (&[2, 3], 5, 1),
        (&[3, 5], 2, -1),
        (&[3, 5], -1, -3),
    ];
    let mut parseval: f64 = 0.0;
    let mut inversion: f64 = 0.0;
    let mut max_dim = 0;
    for (primes, k, l) in windows {
        let f = Arc::new(Filtration::from_primes(primes).unwrap());
        for _ in 0..4 {
            let g = random_function(&f, k, l, &mut rng);
            assert!(g.dimension() <= 144);
            max_dim = max_dim.max(g.dimension());
            let gh = g.fourier().unwrap();
            parseval = parseval.max((gh.norm_l2() - g.norm_l2()).abs() / g.norm_l2());
            let back = gh.inverse_fourier().unwrap();
            inversion = inversion.max(max_abs_diff(&back, &g) / g.max_abs());
            let back2 = g.inverse_fourier().unwrap().fourier().unwrap();
            inversion = inversion.max(max_abs_diff(&back2, &g) / g.max_abs());
        }
    }
    let mut table: f64 = 0.0;
    let mut dims = Vec::new();
    for (primes, k, l) in [(&[2u64][..], 1, 0), (&[2, 3][..], 1, 0), (&[2][..], 1, -1), (&[2, 3][..], 4, 2), (&[3, 5][..], 0, -1)] {
        let d = CosetGrid::new(Arc::new(Filtration::from_primes(primes).unwrap()), k, l).unwrap().len();
        if d == 2 || d == 4 {
            dims.push(d);
            table = table.max(character_table_error(primes, k, l));
        }
    }
    let all_small = dims.iter().all(|&d| d == 2 || d == 4) && dims.len() >= 4;
    outcome(
        parseval <= 1e-12 && inversion <= 1e-12 && table <= 1e-14 && all_small,
        format!(
            "Parseval {parseval:.1e}, double inversion {inversion:.1e} (dims up to {max_dim}), character table {table:.1e} on dims {dims:?}"
        ),
    )
}

// 4. spectral correctness
fn criterion_4() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for primes in [vec![2u64, 3], vec![2], vec![3, 5]] {
        let model = AxisModel::sadic(&primes);
        let f = Arc::new(Filtration::from_primes(&primes).unwrap());
        for (k, l) in [(3, -3), (4, -2), (2, -4)] {
            let Ok(dual) = CosetGrid::new(f.clone(), -l, -k) else { continue };
            if dual.len() > 4096 {
                continue;
            }
            let levels: Vec<Option<i64>> = (0..dual.len()).map(|i| model.level_of_point(dual.point(i).coords())).collect();
            for n in (-k + 1)..=(-l) {
                let values =
                    levels.iter().map(|&s| if s == Some(n) { Complex::one() } else { Complex::zero() }).collect();
                let delta = TestFunction::new(f.clone(), -l, -k, values).unwrap();
                let e = delta.inverse_fourier().unwrap();
                for a in ALPHAS {
                    let sy = Symbol::new(f.clone(), a).unwrap();
                    let d = apply_dalpha(&sy, &e, EPS).unwrap();
                    let lambda = radius(&primes, n).powf(a);
                    let res = d.function.sub(&e.scale(Complex::new(lambda, 0.0))).unwrap();
                    worst = worst.max(res.norm_l2() / e.norm_l2());
                    count += 1;
                }
            }
        }
    }
    let sy = sadic(&[2, 3], 1.0);
    let listed: Vec<f64> = spectrum(&sy, 1, 3).unwrap().iter().map(|e| e.eigenvalue).collect();
    let expected: Vec<f64> = (1..=3).map(|n| radius(&[2, 3], n)).collect();
    let spectrum_ok = listed == expected && expected == [2.0, 6.0, 12.0];
    outcome(
        worst <= 1e-10 && spectrum_ok,
        format!("worst eigen-residual {worst:.1e} over {count} (level, window, alpha) cases; spectrum starts {listed:?}"),
    )
}

// 5. semigroup law
/// `(Z_t ∗ Z_s)` at a point of sphere level `at` (`None`: origin), from sphere
/// values: for `y ∈ S_i`, `i ≠ j`, `‖x - y‖ = r_max(i,j)`; for `y ∈ S_j` the
/// difference ranges over `B_j` minus one coset of `B_{j-1}`.
fn convolve_spheres(primes: &[u64], zt: &dyn Fn(i64) -> f64, zs: &dyn Fn(i64) -> f64, z0t: f64, at: Option<i64>) -> f64 {
    let (lo, hi) = (-60i64, 60i64);
    let mu = |i: i64| radius(primes, i) - radius(primes, i - 1);
    let mut total = 0.0;
    match at {
        None => {
            for i in lo..=hi {
                total += zt(i) * zs(i) * mu(i);
            }
            total += z0t * zs(lo) * radius(primes, lo - 1);
        }
        Some(j) => {
            for i in lo..=hi {
                if i != j {
                    total += zt(i.max(j)) * zs(i) * mu(i);
                }
            }
            // y ∈ B_{lo-1}: x - y ∈ S_j
            total += zt(j) * zs(lo) * radius(primes, lo - 1);
            let mut inner = z0t * radius(primes, lo - 1);
            for m in lo..j {
                inner += zt(m) * mu(m);
            }
            inner += zt(j) * (radius(primes, j) - 2.0 * radius(primes, j - 1));
            total += zs(j) * inner;
        }
    }
    total
}

fn criterion_5() -> Outcome {
    let primes = [2u64, 3];
    let mut kernel_err: f64 = 0.0;
    let mut evolve_err: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for a in ALPHAS {
        let sy = sadic(&primes, a);
        let table = |t: f64| -> (Vec<f64>, f64) {
            let v = (-61..=61).map(|n| heat_kernel_at(&sy, RadialPosition::Sphere(n), t, 1e-15).unwrap().value).collect();
            (v, heat_kernel_at(&sy, RadialPosition::Origin, t, 1e-15).unwrap().value)
        };
        for (t, s) in [(0.1, 0.1), (0.1, 1.0), (1.0, 0.1), (1.0, 1.0)] {
            let (vt, z0t) = table(t);
            let (vs, _) = table(s);
            let zt = |n: i64| vt[(n + 61) as usize];
            let zs = |n: i64| vs[(n + 61) as usize];
            let mut positions = vec![None];
            positions.extend((-3..=3).map(Some));
            for at in positions {
                let conv = convolve_spheres(&primes, &zt, &zs, z0t, at);
                let pos = at.map_or(RadialPosition::Origin, RadialPosition::Sphere);
                let direct = heat_kernel_at(&sy, pos, t + s, 1e-15).unwrap().value;
                kernel_err = kernel_err.max((conv - direct).abs());
            }
            let f = Arc::new(Filtration::from_primes(&primes).unwrap());
            let g = random_function(&f, 3, -3, &mut rng);
            let field = SpectralField::new(&sy, &g).unwrap();
            let two = field.evolve(s).unwrap().evolve(t).unwrap().on_window(EPS).unwrap();
            let one = field.evolve(s + t).unwrap().on_window(EPS).unwrap();
            evolve_err = evolve_err.max(max_abs_diff(&two.function, &one.function));
        }
    }
    outcome(
        kernel_err <= 1e-8 && evolve_err <= 1e-8,
        format!("sup |Z_(t+s) - Z_t * Z_s| = {kernel_err:.1e}; evolve composition {evolve_err:.1e}"),
    )
}

// 6. estimate inequalities
fn gamma_oracle(alpha: f64) -> f64 {
    match alpha {
        a if a == 0.5 => 2.0,
        a if a == 1.0 => 1.0,
        a if a == 2.0 => std::f64::consts::PI.sqrt() / 2.0,
        _ => unreachable!(),
    }
}

fn criterion_6() -> Outcome {
    let mut checks = 0;
    let mut violations = 0;
    let mut oracle_violations = 0;
    let mut constants_ok = true;
    for s in prime_sets() {
        for a in ALPHAS {
            let sy = sadic(&s, a);
            let g = gamma_oracle(a);
            let c = (*s.iter().max().unwrap() as f64).powf(a);
            let c2 = 2f64.powf(a + 1.0) * g.max(c);
            constants_ok &= (sy.gamma_constant() - g).abs() <= 1e-14 * g
                && (sy.ramification_constant() - c).abs() <= 1e-14 * c
                && (sy.combined_constant() - c2).abs() <= 1e-14 * c2;
            let mut grid = Vec::new();
            for j in -4..=4 {
                let t = 10f64.powf(j as f64 / 2.0);
                grid.push((RadialPosition::Origin, t));
                for n in -8..=8 {
                    grid.push((RadialPosition::Sphere(n), t));
                }
            }
            let report = kernel_estimates_check(&sy, &grid, EPS).unwrap();
            checks += report.checks.len();
            violations += report.violations;
            for &(pos, t) in &grid {
                let z = heat_kernel_at(&sy, pos, t, EPS).unwrap().value;
                let norm = match pos {
                    RadialPosition::Origin => 0.0,
                    RadialPosition::Sphere(n) => radius(&s, n),
                };
                let slack = 1.0 + 1e-12;
                let mut ok = z <= g * t.powf(-1.0 / a) * slack;
                if norm > 0.0 {
                    ok &= z <= c * t * norm.powf(-a - 1.0) * slack;
                }
                ok &= z <= c2 * t * (t.powf(1.0 / a) + norm).powf(-a - 1.0) * slack;
                if !ok {
                    oracle_violations += 1;
                }
            }
        }
    }
    outcome(
        violations == 0 && oracle_violations == 0 && constants_ok,
        format!("{checks} bound checks, {violations} library violations, {oracle_violations} recomputed violations, constants match: {constants_ok}"),
    )
}

// 7. Markov statistics
fn criterion_7() -> Outcome {
    let start = Instant::now();
    let primes = [2u64, 3];
    let sy = sadic(&primes, 1.0);
    let window = Window::new(16, -8).unwrap();
    let n = 100_000u64;
    let t = 1.0;
    // law of the level from sphere masses Σ Z(S_m) μ(S_m)
    let lo = -60i64;
    let z = |m: i64| heat_kernel_at(&sy, RadialPosition::Sphere(m), t, EPS).unwrap().value;
    let z0 = heat_kernel_at(&sy, RadialPosition::Origin, t, EPS).unwrap().value;
    let mut below = z0 * radius(&primes, lo);
    let mut cdf = Vec::new();
    for m in (lo + 1)..=window.support {
        below += z(m) * (radius(&primes, m) - radius(&primes, m - 1));
        if m >= window.resolution {
            cdf.push(below);
        }
    }
    let top = *cdf.last().unwrap();
    let cdf: Vec<f64> = cdf.iter().map(|c| c / top).collect();
    let sampler = IncrementSampler::new(&sy, t, window, EPS).unwrap();
    let levels: Vec<i64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(11, i);
            sampler.sample(&mut rng).unwrap().level.unwrap_or(window.resolution)
        })
        .collect();
    let ks = ks_one_sample("increment_levels", &levels, window.resolution, &cdf, 0.01);

    let level = |x: &SAdicPoint| x.sphere_level().unwrap().unwrap_or(window.resolution);
    let two = sample_paths(&sy, &[0.0, 0.5, 1.0], window, 12, n, EPS).unwrap();
    let one = sample_paths(&sy, &[0.0, 1.0], window, 13, n, EPS).unwrap();
    let a: Vec<i64> = two.iter().map(|p| level(p.points.last().unwrap())).collect();
    let b: Vec<i64> = one.iter().map(|p| level(p.points.last().unwrap())).collect();
    let ck = ks_two_sample("chapman_kolmogorov", &a, &b, 0.01);

    let ladder: Vec<f64> = (0..8).map(|j| 10f64.powf(-(j as f64) / 2.0)).collect();
    let cond = condition_checks(&sy, 1.0, 0, &[1, 2, 3, 4, 6, 8, 12], &ladder, 16, EPS).unwrap();
    // recomputed bounds: C = 3^α, C_M = r_L ∫_{B_{-L}} ‖ξ‖^α at L = 0, by sphere sums
    let c_m: f64 = (-120..=0).map(|m| radius(&primes, m) * (radius(&primes, m) - radius(&primes, m - 1))).sum();
    let l_ok = cond.l_rows.iter().all(|r| r.sup_p <= 3.0 * radius(&primes, r.level).powi(-2) * (1.0 + 1e-12));
    let m_ok = (cond.c_m - c_m).abs() <= 1e-12 * c_m && cond.m_rows.iter().all(|r| r.p_out <= c_m * r.t * (1.0 + 1e-9));
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        ks.pass && ck.pass && cond.pass && l_ok && m_ok && elapsed < 30.0,
        format!(
            "increment KS p = {:.3}, Chapman-Kolmogorov KS p = {:.3}, L(B)/M(B) ladders {} (recomputed {}), {elapsed:.1} s",
            ks.p_value,
            ck.p_value,
            if cond.pass { "conform" } else { "fail" },
            if l_ok && m_ok { "conform" } else { "fail" }
        ),
    )
}

// 8. Duhamel accuracy
fn criterion_8() -> Outcome {
    let primes = [2u64, 3];
    let t_final = 1.0;
    let mut worst64: f64 = 0.0;
    let mut ratios = Vec::new();
    for (a, n) in [(1.0, 1i64), (1.0, 2), (2.0, 1)] {
        let sy = sadic(&primes, a);
        let f = sy.filtration().clone();
        let dual = CosetGrid::new(f.clone(), n, n - 1).unwrap();
        let model = AxisModel::sadic(&primes);
        let values = (0..dual.len())
            .map(|i| if model.level_of_point(dual.point(i).coords()) == Some(n) { Complex::one() } else { Complex::zero() })
            .collect();
        let e = TestFunction::new(f.clone(), n, n - 1, values).unwrap().inverse_fourier().unwrap();
        let lambda = radius(&primes, n).powf(a);
        let decay = (-lambda * t_final).exp();
        let coeff = decay + (lambda * t_final.cos() + t_final.sin() - lambda * decay) / (lambda * lambda + 1.0);
        let exact = e.scale(Complex::new(coeff, 0.0));
        let err = |steps: usize| {
            let source = |tau: f64| Ok(e.scale(Complex::new(tau.cos(), 0.0)));
            let u = duhamel_solve(&sy, &e, source, t_final, steps, EPS).unwrap();
            u.solution.sub(&exact).unwrap().norm_l2() / exact.norm_l2()
        };
        let errs: Vec<f64> = [4, 8, 16, 64].iter().map(|&s| err(s)).collect();
        worst64 = worst64.max(errs[3]);
        ratios.push(errs[0] / errs[1]);
        ratios.push(errs[1] / errs[2]);
    }
    let ratios_ok = ratios.iter().all(|r| (10.0..=22.0).contains(r));
    outcome(
        worst64 <= 1e-6 && ratios_ok,
        format!(
            "relative error at 64 panels {worst64:.1e}; halving ratios {}",
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

// 9. general filtrations
fn flag_points(model: &AxisModel, dim: usize) -> Vec<Vec<BigRational>> {
    let p = model.axes[0];
    let mut out = Vec::new();
    let span = 6 * dim as i64;
    for level in (-span..=span).step_by((dim as usize).max(1)).chain([1 - span, span - 1, 1, -1]) {
        // a single nonzero coordinate on the axis that grows at this step
        let e = model.exponents(level);
        let prev = model.exponents(level - 1);
        let axis = (0..dim).find(|&i| e[i] != prev[i]).unwrap();
        for unit in [1i64, p as i64 + 1] {
            let mut x = vec![BigRational::zero(); dim];
            let pe = BigRational::from_integer(BigInt::from(p)).pow(-e[axis] as i32);
            x[axis] = pe * BigRational::from_integer(BigInt::from(unit));
            if dim > 1 {
                let other = (axis + 1) % dim;
                x[other] = BigRational::from_integer(BigInt::from(p).pow((span + 4) as u32));
            }
            if model.level_of_point(&x) == Some(level) {
                out.push(x);
            }
        }
    }
    out
}

fn criterion_9() -> Outcome {
    // constant ramification vs S = {p}
    let mut identical = true;
    let mut compared = 0;
    for p in [2u64, 3, 5] {
        for a in ALPHAS {
            let gen = sym_of(Filtration::general(GeneralSpec::constant(p)).unwrap().with_level_cap(256), a);
            let sad = sadic(&[p], a);
            for t in [0.01, 1.0, 100.0] {
                let mut positions = vec![RadialPosition::Origin];
                positions.extend((-10..=10).map(RadialPosition::Sphere));
                for pos in positions {
                    let x = heat_kernel_at(&gen, pos, t, EPS).unwrap();
                    let y = heat_kernel_at(&sad, pos, t, EPS).unwrap();
                    identical &= x.value.to_bits() == y.value.to_bits() && x.tail_bound.to_bits() == y.tail_bound.to_bits();
                    compared += 1;
                }
                let mg = heat_kernel_mass(&gen, t, EPS).unwrap().value;
                let ms = heat_kernel_mass(&sad, t, EPS).unwrap().value;
                identical &= mg.to_bits() == ms.to_bits();
            }
        }
    }
    // Taibleson radii
    let mut radii_ok = true;
    let cases: [(u64, u32); 4] = [(2, 2), (3, 2), (2, 3), (5, 1)];
    for (p, n) in cases {
        let f = Filtration::taibleson(p, n).unwrap();
        for ell in -4i64..=4 {
            let lvl = f.expanded_level(ell).unwrap();
            let want = BigRational::from_integer(BigInt::from(p)).pow((n as i64 * ell) as i32);
            radii_ok &= lvl == n as i64 * ell && f.radius(lvl).unwrap() == want;
        }
        for m in -12i64..=12 {
            radii_ok &= f.radius(m).unwrap() == BigRational::from_integer(BigInt::from(p)).pow(m as i32);
        }
    }
    // criteria 1 and 2 on Taibleson filtrations
    let taib = |p: u64, n: u32, a: f64| sym_of(Filtration::taibleson(p, n).unwrap().with_level_cap(512), a);
    let mut worst_mass: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    for (p, n) in cases {
        let (w, s) = kernel_normalization(|_, a| taib(p, n, a), &[vec![p]]);
        worst_mass = worst_mass.max(w);
        slowest = slowest.max(s);
    }
    let mut total = 0;
    let mut worst_excess: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    for (p, n) in [(2u64, 2u32), (3, 2), (2, 3)] {
        let model = AxisModel::flag(p, n as usize);
        let points = flag_points(&model, n as usize);
        for a in ALPHAS {
            let sy = taib(p, n, a);
            let stats = compare_with_ors(&model, &sy, n as i64, &points, |x| model.level_of_point(x));
            total += stats.points;
            worst_excess = worst_excess.max(stats.worst_excess);
            worst_rel = worst_rel.max(stats.worst_rel);
        }
    }
    outcome(
        identical && radii_ok && worst_mass <= 1e-9 && slowest < 1.0 && worst_excess <= 1.0,
        format!(
            "constant-p kernel bit-identical on {compared} values: {identical}; radii p^(n l): {radii_ok}; Taibleson mass err {worst_mass:.1e} (slowest {slowest:.3} s); Q_p^n oracle on {total} point/alpha pairs, worst rel err {worst_rel:.1e}, err/allowance {worst_excess:.3}"
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("kernel normalization", criterion_1),
        ("oracle equivalence", criterion_2),
        ("Fourier exactness", criterion_3),
        ("spectral correctness", criterion_4),
        ("semigroup law", criterion_5),
        ("estimate inequalities", criterion_6),
        ("Markov statistics", criterion_7),
        ("Duhamel accuracy", criterion_8),
        ("generalization", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {name}: {tag} [{:.1} s] {}", i + 1, start.elapsed().as_secs_f64(), o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
