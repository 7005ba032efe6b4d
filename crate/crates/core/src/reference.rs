//! Reference densities and distribution statistics for 1D checks.
//!
//! A [`Density1D`] lives on a finite interval and keeps a tabulated CDF so
//! that bin masses, CDF values and inverse-CDF draws are cheap after
//! construction.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{ensure_positive, Error, Result};
use crate::io::CsvTable;
use crate::rng::SampleRng;
use crate::score::GmmPrior;

/// Maximum recursion depth of adaptive Simpson.
const MAX_DEPTH: u32 = 48;
/// Cells in the tabulated CDF.
const CDF_CELLS: usize = 8192;
/// Normalization tolerance checked at construction.
pub const NORMALIZATION_TOL: f64 = 1e-8;

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Option<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Some(left + right + delta / 15.0);
    }
    if depth == 0 {
        return None;
    }
    Some(
        adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?,
    )
}

/// Adaptive Simpson integral of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// The interval is first cut into a few panels so that narrow features are
/// not missed by the initial coarse estimate.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("bad interval [{a}, {b}]")));
    }
    ensure_positive("tol", tol)?;
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    let mut total = 0.0;
    for i in 0..PANELS {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == PANELS { b } else { lo + h };
        let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
        let whole = simpson(fa, fm, fb, hi - lo);
        total += adaptive(&f, lo, hi, fa, fm, fb, whole, tol / PANELS as f64, MAX_DEPTH)
            .ok_or(Error::Quadrature { a: lo, b: hi, tol })?;
    }
    Ok(total)
}

#[derive(Clone)]
enum Shape {
    /// Gaussian mixture in closed form.
    Mixture {
        weights: Vec<f64>,
        means: Vec<f64>,
        variances: Vec<f64>,
    },
    /// Unnormalized function divided by its quadrature integral.
    Numeric {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        z: f64,
    },
}

/// A normalized density on `[a, b]`.
#[derive(Clone)]
pub struct Density1D {
    a: f64,
    b: f64,
    shape: Shape,
    /// CDF at `CDF_CELLS + 1` equispaced knots.
    cdf: Vec<f64>,
}

impl std::fmt::Debug for Density1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Density1D")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("normalizer", &self.normalizer())
            .finish()
    }
}

fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

impl Density1D {
    fn build(a: f64, b: f64, shape: Shape) -> Result<Self> {
        let mut d = Self {
            a,
            b,
            shape,
            cdf: Vec::new(),
        };
        let h = (b - a) / CDF_CELLS as f64;
        let mut cdf = Vec::with_capacity(CDF_CELLS + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for i in 0..CDF_CELLS {
            let lo = a + i as f64 * h;
            acc += integrate(|x| d.pdf(x), lo, lo + h, 1e-14)?;
            cdf.push(acc);
        }
        if (acc - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidArgument(format!(
                "density integrates to {acc} on [{a}, {b}]"
            )));
        }
        d.cdf = cdf;
        Ok(d)
    }

    /// Gaussian mixture restricted to `[a, b]` (its tail mass must be negligible).
    pub fn mixture(weights: Vec<f64>, means: Vec<f64>, variances: Vec<f64>, a: f64, b: f64) -> Result<Self> {
        if weights.is_empty() || weights.len() != means.len() || weights.len() != variances.len() {
            return Err(Error::InvalidArgument("inconsistent mixture".into()));
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.iter().map(|w| w / total).collect();
        Self::build(
            a,
            b,
            Shape::Mixture {
                weights,
                means,
                variances,
            },
        )
    }

    pub fn lower(&self) -> f64 {
        self.a
    }

    pub fn upper(&self) -> f64 {
        self.b
    }

    /// Normalizing constant of the unnormalized function this density came
    /// from; 1 for closed forms.
    pub fn normalizer(&self) -> f64 {
        match &self.shape {
            Shape::Mixture { .. } => 1.0,
            Shape::Numeric { z, .. } => *z,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.a || x > self.b {
            return 0.0;
        }
        match &self.shape {
            Shape::Mixture {
                weights,
                means,
                variances,
            } => weights
                .iter()
                .zip(means)
                .zip(variances)
                .map(|((w, m), v)| w * normal_pdf(x, *m, *v))
                .sum(),
            Shape::Numeric { f, z } => f(x) / z,
        }
    }

    /// Integral of the density over `[a, b]` from the table.
    pub fn total_mass(&self) -> f64 {
        self.cdf[CDF_CELLS]
    }

    /// CDF by cubic Hermite interpolation of the tabulated values, using the
    /// pdf as the slope.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.a {
            return 0.0;
        }
        if x >= self.b {
            return self.cdf[CDF_CELLS];
        }
        let h = (self.b - self.a) / CDF_CELLS as f64;
        let i = (((x - self.a) / h) as usize).min(CDF_CELLS - 1);
        let x0 = self.a + i as f64 * h;
        let t = (x - x0) / h;
        let (y0, y1) = (self.cdf[i], self.cdf[i + 1]);
        let (m0, m1) = (self.pdf(x0) * h, self.pdf(x0 + h) * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        v.clamp(y0.min(y1), y0.max(y1))
    }

    /// Probability mass of each of `bins` equal-width bins over `[a, b]`.
    pub fn bin_masses(&self, bins: usize) -> Vec<f64> {
        let h = (self.b - self.a) / bins as f64;
        (0..bins)
            .map(|k| {
                let lo = self.a + k as f64 * h;
                let hi = if k + 1 == bins { self.b } else { lo + h };
                self.cdf(hi) - self.cdf(lo)
            })
            .collect()
    }

    /// Inverse-CDF draw.
    pub fn sample(&self, rng: &mut SampleRng) -> f64 {
        self.quantile(rng.uniform())
    }

    /// Inverse CDF at probability `p` in `[0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        let u = p.clamp(0.0, 1.0) * self.total_mass();
        let k = self.cdf.partition_point(|c| *c <= u).clamp(1, CDF_CELLS);
        let h = (self.b - self.a) / CDF_CELLS as f64;
        let (mut lo, mut hi) = (self.a + (k - 1) as f64 * h, self.a + k as f64 * h);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `(z, pdf)` rows on an equispaced grid.
    pub fn to_csv(&self, points: usize) -> CsvTable {
        let mut t = CsvTable::new("density", &["z", "pdf"]);
        let n = points.max(2);
        for i in 0..n {
            let x = self.a + (self.b - self.a) * i as f64 / (n - 1) as f64;
            t.push_reals(&[x, self.pdf(x)]);
        }
        t
    }
}

/// Normalize a nonnegative function on `[a, b]` by adaptive quadrature. The
/// tolerance is absolute for integrals above 1 and relative below.
pub fn quadrature_normalize<F>(f: F, a: f64, b: f64, tol: f64) -> Result<(f64, Density1D)>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let mut z = integrate(&f, a, b, tol)?;
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::InvalidArgument(format!("cannot normalize: integral {z}")));
    }
    // Tilted densities can have tiny integrals; hold the error relative.
    if z < 1.0 {
        z = integrate(&f, a, b, tol * z)?;
    }
    let d = Density1D::build(a, b, Shape::Numeric { f: Arc::new(f), z })?;
    Ok((z, d))
}

fn prior_1d(prior: &GmmPrior) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if prior.dim() != 1 {
        return Err(Error::InvalidArgument(format!(
            "1D prior required, got dimension {}",
            prior.dim()
        )));
    }
    Ok((
        prior.weights().to_vec(),
        prior.means().iter().map(|m| m[0]).collect(),
        prior.variances().iter().map(|v| v[0]).collect(),
    ))
}

/// Default support `[min mu_i - 8 s, max mu_i + 8 s]` with `s` the largest
/// component standard deviation.
pub fn default_support(prior: &GmmPrior) -> Result<(f64, f64)> {
    let (_, means, vars) = prior_1d(prior)?;
    Ok(span(&means, &vars, |_| 0.0))
}

/// `[min (m_i - shift_i) - 8 s, max (m_i + shift_i) + 8 s]` with `s` the
/// largest standard deviation.
fn span(means: &[f64], vars: &[f64], shift: impl Fn(f64) -> f64) -> (f64, f64) {
    let s = vars.iter().cloned().fold(0.0, f64::max).sqrt();
    let lo = means.iter().zip(vars).map(|(m, v)| m - shift(*v)).fold(f64::INFINITY, f64::min);
    let hi = means.iter().zip(vars).map(|(m, v)| m + shift(*v)).fold(f64::NEG_INFINITY, f64::max);
    (lo - 8.0 * s, hi + 8.0 * s)
}

/// The prior itself as a density on its default support.
pub fn prior_density(prior: &GmmPrior) -> Result<Density1D> {
    let (w, m, v) = prior_1d(prior)?;
    let (a, b) = default_support(prior)?;
    Density1D::mixture(w, m, v, a, b)
}

/// Closed form of `p(z) exp(-eta (z - mu)^2)`, renormalized.
///
/// Each component `N(m, v)` times the Gaussian weight is again Gaussian with
/// precision `1/v + 2 eta`; its mass scales with `N(m; mu, v + 1/(2 eta))`.
pub fn product_density_quadratic(prior: &GmmPrior, eta: f64, mu: f64) -> Result<Density1D> {
    ensure_positive("eta", eta)?;
    let (w, m, v) = prior_1d(prior)?;
    let mut weights = Vec::new();
    let mut means = Vec::new();
    let mut vars = Vec::new();
    for i in 0..w.len() {
        let prec = 1.0 / v[i] + 2.0 * eta;
        means.push((m[i] / v[i] + 2.0 * eta * mu) / prec);
        vars.push(1.0 / prec);
        weights.push(w[i] * normal_pdf(m[i], mu, v[i] + 0.5 / eta));
    }
    // The product modes sit between the prior modes and mu, so the prior's
    // own support can cut them off when mu lies outside it.
    let (a, b) = span(&means, &vars, |_| 0.0);
    Density1D::mixture(weights, means, vars, a, b)
}

/// `p(z) exp(-eta |z - mu|)`, normalized by quadrature.
pub fn product_density_l1(prior: &GmmPrior, eta: f64, mu: f64) -> Result<Density1D> {
    ensure_positive("eta", eta)?;
    // Tilting N(m, v) by exp(+-eta z) moves its mean by eta v either way.
    let (_, m, v) = prior_1d(prior)?;
    let (a, b) = span(&m, &v, |var| eta * var);
    let p = prior.clone();
    let f = move |x: f64| p.density(&[x], 0.0).unwrap_or(0.0) * (-eta * (x - mu).abs()).exp();
    quadrature_normalize(f, a, b, 1e-13).map(|(_, d)| d)
}

/// Equal-width histogram of `samples` over `[lo, hi]`, as mass fractions.
/// The returned tail mass counts samples outside the range.
pub fn histogram(samples: &[f64], lo: f64, hi: f64, bins: usize) -> (Vec<f64>, f64) {
    let mut counts = vec![0usize; bins];
    let mut outside = 0usize;
    let w = (hi - lo) / bins as f64;
    for &s in samples {
        if !(s >= lo && s <= hi) {
            outside += 1;
            continue;
        }
        let k = (((s - lo) / w) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let n = samples.len() as f64;
    (counts.iter().map(|c| *c as f64 / n).collect(), outside as f64 / n)
}

fn check_sample_count(samples: &[f64], bins: usize) -> Result<()> {
    if samples.len() < 1000 {
        return Err(Error::InvalidArgument(format!(
            "need at least 1000 samples, got {}",
            samples.len()
        )));
    }
    if bins < 10 {
        return Err(Error::InvalidArgument(format!("need at least 10 bins, got {bins}")));
    }
    Ok(())
}

/// Total-variation distance between the sample histogram and the density's
/// bin masses on `[a, b]`. Samples outside the support count fully.
pub fn tv_distance(samples: &[f64], density: &Density1D, bins: usize) -> Result<f64> {
    check_sample_count(samples, bins)?;
    let (emp, outside) = histogram(samples, density.a, density.b, bins);
    let masses = density.bin_masses(bins);
    let inner: f64 = emp.iter().zip(&masses).map(|(e, m)| (e - m).abs()).sum();
    Ok((0.5 * (inner + outside)).min(1.0))
}

/// Total-variation distance between two sample histograms on `[lo, hi]`.
pub fn tv_between_samples(x: &[f64], y: &[f64], lo: f64, hi: f64, bins: usize) -> Result<f64> {
    check_sample_count(x, bins)?;
    check_sample_count(y, bins)?;
    let (hx, ox) = histogram(x, lo, hi, bins);
    let (hy, oy) = histogram(y, lo, hi, bins);
    let inner: f64 = hx.iter().zip(&hy).map(|(a, b)| (a - b).abs()).sum();
    Ok((0.5 * (inner + (ox - oy).abs())).min(1.0))
}

/// Kolmogorov-Smirnov statistic between the empirical CDF and the density's CDF.
pub fn ks_statistic(samples: &[f64], density: &Density1D) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("samples"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = density.cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d.min(1.0))
}
