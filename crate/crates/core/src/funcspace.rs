//! Locally constant test functions on `Q_S` and their Fourier analysis.
//!
//! A [`TestFunction`] lives in `D^ℓ_k`: supported in `B_k`, constant on
//! cosets of `B_ℓ`, stored as one complex value per coset in [`CosetGrid`]
//! order. The Fourier transform maps `D^ℓ_k` onto `D^{-k}_{-ℓ}`.

use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filtration::Filtration;
use crate::sadic::{CoordJson, CosetGrid, SAdicPoint};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct TestFunction<T: Real> {
    grid: Arc<CosetGrid>,
    values: Vec<Complex<T>>,
}

/// Whether a function has vanishing total integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LizorkinTag(pub bool);

fn same_filtration(a: &Filtration, b: &Filtration) -> Result<()> {
    if std::ptr::eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::Incompatible("functions live on different filtrations".into()))
    }
}

/// Maps an index of `fine` to the index of the containing coset of
/// `coarse`, or `None` when the fine coset lies outside the coarse support.
fn coarse_index(fine: &CosetGrid, coarse: &CosetGrid, idx: usize) -> Option<usize> {
    let js = fine.digits(idx);
    let mut out = 0usize;
    for (i, &p) in fine.filtration().primes().iter().enumerate() {
        let a2 = fine.base_exponents()[i];
        let a = coarse.base_exponents()[i];
        let b = a - log_count(p, coarse.counts()[i]);
        let keep = (p as usize).pow((a2 - b) as u32);
        let shift = (p as usize).pow((a2 - a) as u32);
        let r = js[i] % keep;
        if r % shift != 0 {
            return None;
        }
        out += (r / shift) * coarse.strides()[i];
    }
    Some(out)
}

fn log_count(p: u64, mut c: usize) -> i64 {
    let mut e = 0;
    while c > 1 {
        c /= p as usize;
        e += 1;
    }
    e
}

impl<T: Real> TestFunction<T> {
    pub fn new(filtration: Arc<Filtration>, k: i64, l: i64, values: Vec<Complex<T>>) -> Result<Self> {
        let grid = Arc::new(CosetGrid::new(filtration, k, l)?);
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(TestFunction { grid, values })
    }

    pub fn from_grid(grid: Arc<CosetGrid>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(TestFunction { grid, values })
    }

    pub fn zeros(filtration: Arc<Filtration>, k: i64, l: i64) -> Result<Self> {
        let grid = Arc::new(CosetGrid::new(filtration, k, l)?);
        let values = vec![Complex::zero(); grid.len()];
        Ok(TestFunction { grid, values })
    }

    /// Samples `f` at the canonical representative of every coset.
    pub fn from_fn(
        filtration: Arc<Filtration>,
        k: i64,
        l: i64,
        mut f: impl FnMut(&SAdicPoint) -> Complex<T>,
    ) -> Result<Self> {
        let grid = Arc::new(CosetGrid::new(filtration, k, l)?);
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Ok(TestFunction { grid, values })
    }

    /// `Δ_{B_n}` as an element of `D^n_n`.
    pub fn indicator_ball(filtration: Arc<Filtration>, n: i64) -> Result<Self> {
        Self::new(filtration, n, n, vec![Complex::new(T::one(), T::zero())])
    }

    /// `Δ_{S_n}` as an element of `D^{n-1}_n`.
    pub fn indicator_sphere(filtration: Arc<Filtration>, n: i64) -> Result<Self> {
        let grid = Arc::new(CosetGrid::new(filtration, n, n - 1)?);
        let mut values = vec![Complex::new(T::one(), T::zero()); grid.len()];
        values[0] = Complex::zero();
        Ok(TestFunction { grid, values })
    }

    /// Indicator of the single coset with index `idx`.
    pub fn delta_coset(filtration: Arc<Filtration>, k: i64, l: i64, idx: usize) -> Result<Self> {
        let mut f = Self::zeros(filtration, k, l)?;
        if idx >= f.values.len() {
            return Err(Error::InvalidArgument(format!("coset index {idx} out of range")));
        }
        f.values[idx] = Complex::new(T::one(), T::zero());
        Ok(f)
    }

    pub fn grid(&self) -> &Arc<CosetGrid> {
        &self.grid
    }

    pub fn filtration(&self) -> &Arc<Filtration> {
        self.grid.filtration()
    }

    pub fn support_level(&self) -> i64 {
        self.grid.support()
    }

    pub fn constancy_level(&self) -> i64 {
        self.grid.resolution()
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    /// Haar measure of one coset, `r_ℓ`.
    pub fn cell_measure(&self) -> T {
        self.filtration().radius_real(self.constancy_level()).expect("level validated")
    }

    pub fn evaluate(&self, x: &SAdicPoint) -> Result<Complex<T>> {
        same_filtration(self.filtration(), x.filtration())?;
        Ok(match self.grid.locate(x)? {
            Some(i) => self.values[i],
            None => Complex::zero(),
        })
    }

    /// Re-expresses the function on a larger support `k2 >= k` and finer
    /// constancy level `l2 <= l`.
    pub fn refine(&self, k2: i64, l2: i64) -> Result<Self> {
        let (k, l) = (self.support_level(), self.constancy_level());
        if k2 < k || l2 > l {
            return Err(Error::Resolution(format!(
                "cannot refine window ({k},{l}) to ({k2},{l2})"
            )));
        }
        if (k2, l2) == (k, l) {
            return Ok(self.clone());
        }
        let fine = Arc::new(CosetGrid::new(self.filtration().clone(), k2, l2)?);
        let values = (0..fine.len())
            .map(|i| match coarse_index(&fine, &self.grid, i) {
                Some(j) => self.values[j],
                None => Complex::zero(),
            })
            .collect();
        Ok(TestFunction { grid: fine, values })
    }

    /// Both operands re-expressed on the common window `(max k, min ℓ)`.
    pub fn common_refinement(&self, other: &Self) -> Result<(Self, Self)> {
        same_filtration(self.filtration(), other.filtration())?;
        let k = self.support_level().max(other.support_level());
        let l = self.constancy_level().min(other.constancy_level());
        Ok((self.refine(k, l)?, other.refine(k, l)?))
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        TestFunction { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        self.map(|v| v * c)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.common_refinement(other)?;
        let values = a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect();
        Ok(TestFunction { grid: a.grid, values })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex::new(-T::one(), T::zero())))
    }

    /// `∫ f dμ`.
    pub fn integral(&self) -> Complex<T> {
        let s: Complex<T> = self.values.iter().copied().sum();
        s * self.cell_measure()
    }

    pub fn norm_l2(&self) -> T {
        let s: T = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.cell_measure()).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().map(|v| v.norm()).fold(T::zero(), T::max)
    }

    /// Fourier transform `f̂(ξ) = ∫ χ(ξx) f(x) dx`, computed as a product of
    /// one-dimensional transforms along each prime coordinate.
    pub fn fourier(&self) -> Result<Self> {
        self.transform(false)
    }

    pub fn inverse_fourier(&self) -> Result<Self> {
        self.transform(true)
    }

    fn dual_grid(&self) -> Result<Arc<CosetGrid>> {
        Ok(Arc::new(CosetGrid::new(
            self.filtration().clone(),
            -self.constancy_level(),
            -self.support_level(),
        )?))
    }

    fn transform(&self, inverse: bool) -> Result<Self> {
        let out_grid = self.dual_grid()?;
        let mut data = self.values.clone();
        let sign = if inverse { -1.0 } else { 1.0 };
        for (axis, &count) in self.grid.counts().iter().enumerate() {
            if count == 1 {
                continue;
            }
            let stride = self.grid.strides()[axis];
            let tw: Vec<Complex<T>> = (0..count)
                .map(|m| {
                    let a = sign * 2.0 * std::f64::consts::PI * m as f64 / count as f64;
                    Complex::new(T::of(a.cos()), T::of(a.sin()))
                })
                .collect();
            let block = stride * count;
            data.par_chunks_mut(block).for_each(|chunk| {
                let mut buf = vec![Complex::<T>::zero(); count];
                for offset in 0..stride {
                    for (i, slot) in buf.iter_mut().enumerate() {
                        let mut acc = Complex::zero();
                        for j in 0..count {
                            acc = acc + tw[(i * j) % count] * chunk[offset + j * stride];
                        }
                        *slot = acc;
                    }
                    for (i, v) in buf.iter().enumerate() {
                        chunk[offset + i * stride] = *v;
                    }
                }
            });
        }
        let w = self.cell_measure();
        for v in &mut data {
            *v = *v * w;
        }
        Ok(TestFunction { grid: out_grid, values: data })
    }

    /// Fourier transform by direct `O(N²)` summation over the character
    /// table; the reference against which [`fourier`](Self::fourier) is defined.
    pub fn fourier_direct(&self) -> Result<Self> {
        self.transform_direct(false)
    }

    pub fn inverse_fourier_direct(&self) -> Result<Self> {
        self.transform_direct(true)
    }

    fn transform_direct(&self, inverse: bool) -> Result<Self> {
        let out_grid = self.dual_grid()?;
        let counts = self.grid.counts().to_vec();
        let n = self.values.len();
        let sign = if inverse { -1.0 } else { 1.0 };
        let w = self.cell_measure();
        let in_digits: Vec<Vec<usize>> = (0..n).map(|j| self.grid.digits(j)).collect();
        let values = (0..n)
            .into_par_iter()
            .map(|i| {
                let di = out_grid.digits(i);
                let mut acc = Complex::<T>::zero();
                for (j, dj) in in_digits.iter().enumerate() {
                    let phase: f64 = counts
                        .iter()
                        .enumerate()
                        .map(|(a, &c)| ((di[a] * dj[a]) % c) as f64 / c as f64)
                        .sum();
                    let ang = sign * 2.0 * std::f64::consts::PI * phase.fract();
                    acc = acc + Complex::new(T::of(ang.cos()), T::of(ang.sin())) * self.values[j];
                }
                acc * w
            })
            .collect();
        Ok(TestFunction { grid: out_grid, values })
    }

    /// `⟨f, g⟩ = ∫ f ḡ dμ` on the common refinement.
    pub fn inner_product(&self, other: &Self) -> Result<Complex<T>> {
        let (a, b) = self.common_refinement(other)?;
        let s: Complex<T> = a.values.iter().zip(&b.values).map(|(x, y)| x * y.conj()).sum();
        Ok(s * a.cell_measure())
    }

    /// `f ∗ g` via the convolution theorem on the common refinement.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.common_refinement(other)?;
        let fa = a.fourier()?;
        let fb = b.fourier()?;
        let values = fa.values.iter().zip(&fb.values).map(|(x, y)| x * y).collect();
        TestFunction { grid: fa.grid, values }.inverse_fourier()
    }

    /// `f - (∫f / r_k) Δ_{B_k}`: the closest zero-mean function on the window.
    pub fn lizorkin_project(&self) -> Self {
        let r_k: T = self.filtration().radius_real(self.support_level()).expect("level validated");
        let mean = self.integral() / r_k;
        self.map(|v| v - mean)
    }

    pub fn lizorkin_tag(&self, tol: T) -> LizorkinTag {
        LizorkinTag(self.integral().norm() <= tol)
    }

    pub fn to_f64(&self) -> TestFunction<f64> {
        TestFunction {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .map(|v| Complex::new(v.re.to_f64_lossy(), v.im.to_f64_lossy()))
                .collect(),
        }
    }

    pub fn to_file(&self) -> FunctionFile {
        FunctionFile {
            primes: self.filtration().primes().to_vec(),
            support_level: self.support_level(),
            constancy_level: self.constancy_level(),
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| CosetValue {
                    coset: self.grid.point(i).to_json(),
                    re: v.re.to_f64_lossy(),
                    im: v.im.to_f64_lossy(),
                })
                .collect(),
        }
    }

    /// Reads a function file; coset entries must follow the grid order.
    pub fn from_file(filtration: Arc<Filtration>, file: &FunctionFile) -> Result<Self> {
        if filtration.primes() != file.primes.as_slice() {
            return Err(Error::Format(format!(
                "file primes {:?} do not match {:?}",
                file.primes,
                filtration.primes()
            )));
        }
        let grid = Arc::new(CosetGrid::new(filtration, file.support_level, file.constancy_level)?);
        if file.values.len() != grid.len() {
            return Err(Error::Format(format!(
                "expected {} coset values, found {}",
                grid.len(),
                file.values.len()
            )));
        }
        let mut values = Vec::with_capacity(grid.len());
        for (i, cv) in file.values.iter().enumerate() {
            let x = SAdicPoint::from_json(grid.filtration().clone(), &cv.coset, grid.window())?;
            if grid.locate(&x)? != Some(i) {
                return Err(Error::Format(format!("coset entry {i} is out of order")));
            }
            values.push(Complex::new(T::of(cv.re), T::of(cv.im)));
        }
        Ok(TestFunction { grid, values })
    }
}

/// On-disk representation of a test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionFile {
    pub primes: Vec<u64>,
    pub support_level: i64,
    pub constancy_level: i64,
    pub values: Vec<CosetValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosetValue {
    pub coset: Vec<CoordJson>,
    pub re: f64,
    pub im: f64,
}
