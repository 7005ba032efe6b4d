//! Disk-union signed-distance decoder.
//!
//! A latent `z` of length `3K` maps through an affine whitening to raw
//! parameters `(c_1x, c_1y, rho_1, ..., c_Kx, c_Ky, rho_K)`. Disk radii are
//! `r_k = softplus(rho_k)`, and the field is the soft minimum of the disk
//! distances
//!
//! ```text
//! D(z, x) = -tau * ln sum_k exp(-(|x - c_k| - r_k) / tau)
//! ```
//!
//! The norm is smoothed as `sqrt(|x - c|^2 + DELTA^2)` so that `D` is smooth
//! at disk centers too.

use crate::error::{ensure_len, ensure_positive, Error, Result};
use crate::rng::SampleRng;
use crate::types::{Latent, PointCloud2, Vec2};

/// Default soft-min temperature.
pub const DEFAULT_TAU: f64 = 0.02;
/// Default disk count for the 2D benchmark.
pub const DEFAULT_DISKS: usize = 5;
/// Norm smoothing length.
const DELTA2: f64 = 1e-12;

pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

pub fn softplus_inv(r: f64) -> f64 {
    r + (-(-r).exp_m1()).ln()
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Affine map between whitened latents and raw disk parameters:
/// `raw = shift + scale * (M z)` with an optional orthogonal mixing matrix `M`
/// (identity when absent).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Whitening {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
    /// Row-major orthogonal mixing matrix.
    #[serde(default)]
    pub mix: Option<Vec<Vec<f64>>>,
}

impl Whitening {
    pub fn identity(n: usize) -> Self {
        Self {
            shift: vec![0.0; n],
            scale: vec![1.0; n],
            mix: None,
        }
    }

    /// Per-coordinate standardization fitted to raw parameter samples.
    pub fn fit(raw: &[Vec<f64>]) -> Result<Self> {
        if raw.len() < 2 {
            return Err(Error::Empty("whitening samples"));
        }
        let n = raw[0].len();
        let count = raw.len() as f64;
        let mut shift = vec![0.0; n];
        for r in raw {
            ensure_len(n, r.len())?;
            for j in 0..n {
                shift[j] += r[j] / count;
            }
        }
        let mut scale = vec![0.0; n];
        for r in raw {
            for j in 0..n {
                scale[j] += (r[j] - shift[j]).powi(2) / (count - 1.0);
            }
        }
        for s in &mut scale {
            *s = s.sqrt().max(1e-6);
        }
        Ok(Self { shift, scale, mix: None })
    }

    /// Attach an orthogonal mixing matrix so every latent coordinate moves
    /// every raw parameter.
    pub fn with_mix(mut self, m: Vec<Vec<f64>>) -> Result<Self> {
        let n = self.dim();
        ensure_len(n, m.len())?;
        for (i, row) in m.iter().enumerate() {
            ensure_len(n, row.len())?;
            for (j, other) in m.iter().enumerate() {
                let d: f64 = row.iter().zip(other).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                if (d - expect).abs() > 1e-9 {
                    return Err(Error::InvalidArgument("mixing matrix is not orthogonal".into()));
                }
            }
        }
        self.mix = Some(m);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    fn mix_apply(&self, z: &[f64]) -> Vec<f64> {
        match &self.mix {
            Some(m) => m.iter().map(|row| row.iter().zip(z).map(|(a, b)| a * b).sum()).collect(),
            None => z.to_vec(),
        }
    }

    fn mix_transpose(&self, v: &[f64]) -> Vec<f64> {
        match &self.mix {
            Some(m) => {
                let mut out = vec![0.0; v.len()];
                for (row, vi) in m.iter().zip(v) {
                    for (o, a) in out.iter_mut().zip(row) {
                        *o += a * vi;
                    }
                }
                out
            }
            None => v.to_vec(),
        }
    }

    pub fn to_raw(&self, z: &[f64]) -> Vec<f64> {
        self.mix_apply(z)
            .iter()
            .zip(&self.shift)
            .zip(&self.scale)
            .map(|((z, m), s)| m + s * z)
            .collect()
    }

    pub fn to_latent(&self, raw: &[f64]) -> Vec<f64> {
        let u: Vec<f64> = raw
            .iter()
            .zip(&self.shift)
            .zip(&self.scale)
            .map(|((r, m), s)| (r - m) / s)
            .collect();
        self.mix_transpose(&u)
    }

    /// Pull a raw-parameter gradient back to the whitened latent.
    pub fn grad_to_latent(&self, raw_grad: &[f64]) -> Vec<f64> {
        let g: Vec<f64> = raw_grad.iter().zip(&self.scale).map(|(g, s)| g * s).collect();
        self.mix_transpose(&g)
    }
}

/// Decoder configuration.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DiskDecoder {
    k: usize,
    tau: f64,
    whitening: Whitening,
}

/// Disk parameters decoded from one latent.
#[derive(Debug, Clone, PartialEq)]
pub struct Disks {
    pub centers: Vec<Vec2>,
    pub rho: Vec<f64>,
    pub radii: Vec<f64>,
    pub tau: f64,
}

/// Field value with its derivatives at one query point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldEval {
    pub value: f64,
    pub grad_x: Vec2,
    /// Gradient with respect to the raw parameters.
    pub grad_raw: Vec<f64>,
}

impl DiskDecoder {
    pub fn new(k: usize, tau: f64, whitening: Whitening) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("decoder needs at least one disk".into()));
        }
        ensure_positive("tau", tau)?;
        ensure_len(3 * k, whitening.dim())?;
        Ok(Self { k, tau, whitening })
    }

    /// Decoder whose latent is the raw parameter vector.
    pub fn unwhitened(k: usize, tau: f64) -> Result<Self> {
        Self::new(k, tau, Whitening::identity(3 * k))
    }

    pub fn disks_count(&self) -> usize {
        self.k
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn whitening(&self) -> &Whitening {
        &self.whitening
    }

    pub fn latent_dim(&self) -> usize {
        3 * self.k
    }

    /// Raw parameters for explicit disks: `(center, radius)` pairs.
    pub fn raw_from_disks(disks: &[(Vec2, f64)]) -> Result<Vec<f64>> {
        let mut raw = Vec::with_capacity(3 * disks.len());
        for (c, r) in disks {
            ensure_positive("radius", *r)?;
            raw.extend_from_slice(&[c[0], c[1], softplus_inv(*r)]);
        }
        Ok(raw)
    }

    /// Latent for explicit disks.
    pub fn latent_from_disks(&self, disks: &[(Vec2, f64)]) -> Result<Latent> {
        ensure_len(self.k, disks.len())?;
        Latent::new(self.whitening.to_latent(&Self::raw_from_disks(disks)?))
    }

    pub fn disks(&self, z: &[f64]) -> Result<Disks> {
        ensure_len(self.latent_dim(), z.len())?;
        let raw = self.whitening.to_raw(z);
        Ok(Disks::from_raw(&raw, self.tau))
    }

    pub fn decode(&self, z: &[f64], x: Vec2) -> Result<f64> {
        Ok(self.disks(z)?.value(x))
    }

    pub fn decode_grad_x(&self, z: &[f64], x: Vec2) -> Result<Vec2> {
        Ok(self.disks(z)?.value_grad_x(x).1)
    }

    pub fn decode_grad_z(&self, z: &[f64], x: Vec2) -> Result<Vec<f64>> {
        let e = self.disks(z)?.eval(x);
        Ok(self.whitening.grad_to_latent(&e.grad_raw))
    }
}

struct Terms {
    /// Smoothed distance to each center.
    n: Vec<f64>,
    /// Unit direction from each center to `x`.
    u: Vec<Vec2>,
    /// Soft-min weights.
    w: Vec<f64>,
    value: f64,
}

impl Disks {
    pub fn from_raw(raw: &[f64], tau: f64) -> Self {
        let k = raw.len() / 3;
        let mut centers = Vec::with_capacity(k);
        let mut rho = Vec::with_capacity(k);
        let mut radii = Vec::with_capacity(k);
        for d in raw.chunks_exact(3) {
            centers.push([d[0], d[1]]);
            rho.push(d[2]);
            radii.push(softplus(d[2]));
        }
        Self {
            centers,
            rho,
            radii,
            tau,
        }
    }

    fn terms(&self, x: Vec2) -> Terms {
        let k = self.centers.len();
        let mut n = Vec::with_capacity(k);
        let mut u = Vec::with_capacity(k);
        let mut d = Vec::with_capacity(k);
        for (c, r) in self.centers.iter().zip(&self.radii) {
            let (dx, dy) = (x[0] - c[0], x[1] - c[1]);
            let nk = (dx * dx + dy * dy + DELTA2).sqrt();
            n.push(nk);
            u.push([dx / nk, dy / nk]);
            d.push(nk - r);
        }
        let m = d.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut w: Vec<f64> = d.iter().map(|di| (-(di - m) / self.tau).exp()).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        Terms {
            n,
            u,
            w,
            value: m - self.tau * total.ln(),
        }
    }

    /// Field value.
    pub fn value(&self, x: Vec2) -> f64 {
        self.terms(x).value
    }

    /// Hard minimum of the per-disk distances.
    pub fn hard_min(&self, x: Vec2) -> f64 {
        self.centers
            .iter()
            .zip(&self.radii)
            .map(|(c, r)| ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + DELTA2).sqrt() - r)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn value_grad_x(&self, x: Vec2) -> (f64, Vec2) {
        let t = self.terms(x);
        let mut g = [0.0; 2];
        for (w, u) in t.w.iter().zip(&t.u) {
            g[0] += w * u[0];
            g[1] += w * u[1];
        }
        (t.value, g)
    }

    /// Value, spatial gradient and raw-parameter gradient.
    pub fn eval(&self, x: Vec2) -> FieldEval {
        let t = self.terms(x);
        let mut grad_x = [0.0; 2];
        let mut grad_raw = vec![0.0; 3 * self.centers.len()];
        for k in 0..self.centers.len() {
            let (w, u) = (t.w[k], t.u[k]);
            grad_x[0] += w * u[0];
            grad_x[1] += w * u[1];
            grad_raw[3 * k] = -w * u[0];
            grad_raw[3 * k + 1] = -w * u[1];
            grad_raw[3 * k + 2] = -w * sigmoid(self.rho[k]);
        }
        FieldEval {
            value: t.value,
            grad_x,
            grad_raw,
        }
    }

    /// Spatial gradient at `x` and the product `v^T d(grad_x D)/d(raw)`.
    pub fn grad_x_vjp(&self, x: Vec2, v: Vec2) -> (f64, Vec2, Vec<f64>) {
        let t = self.terms(x);
        let k = self.centers.len();
        let a: Vec<f64> = t.u.iter().map(|u| v[0] * u[0] + v[1] * u[1]).collect();
        let abar: f64 = t.w.iter().zip(&a).map(|(w, a)| w * a).sum();
        let mut g = [0.0; 2];
        let mut out = vec![0.0; 3 * k];
        for j in 0..k {
            let (w, u, n) = (t.w[j], t.u[j], t.n[j]);
            g[0] += w * u[0];
            g[1] += w * u[1];
            // through the soft-min weights
            let dw = w * (a[j] - abar) / self.tau;
            out[3 * j] = dw * u[0];
            out[3 * j + 1] = dw * u[1];
            out[3 * j + 2] = dw * sigmoid(self.rho[j]);
            // through the unit direction: d u / d c = -(I/n - r r^T / n^3)
            let r = [u[0] * n, u[1] * n];
            let vr = v[0] * r[0] + v[1] * r[1];
            let n3 = n * n * n;
            out[3 * j] -= w * (v[0] / n - vr * r[0] / n3);
            out[3 * j + 1] -= w * (v[1] / n - vr * r[1] / n3);
        }
        (t.value, g, out)
    }
}

/// Reorder disk triples in a raw vector so centers ascend in x, then y.
pub fn canonical_order(raw: &[f64]) -> Vec<f64> {
    let mut disks: Vec<&[f64]> = raw.chunks_exact(3).collect();
    disks.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    disks.concat()
}

/// k-means fit of the point cloud with k-means++ seeding.
///
/// Returns cluster centers and assignments after Lloyd iterations converge.
pub fn kmeans(points: &[Vec2], k: usize, rng: &mut SampleRng) -> Result<(Vec<Vec2>, Vec<usize>)> {
    if points.len() < k {
        return Err(Error::InvalidArgument(format!(
            "need at least {k} points, got {}",
            points.len()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let d2 = |a: &Vec2, b: &Vec2| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    let mut centers = vec![points[rng.index(points.len())]];
    let mut best: Vec<f64> = points.iter().map(|p| d2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = best.iter().sum();
        let next = if total > 0.0 {
            let target = rng.uniform() * total;
            let mut acc = 0.0;
            let mut pick = points.len() - 1;
            for (i, b) in best.iter().enumerate() {
                acc += b;
                if acc > target {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.index(points.len())
        };
        centers.push(points[next]);
        for (b, p) in best.iter_mut().zip(points) {
            *b = b.min(d2(p, &centers[centers.len() - 1]));
        }
    }
    let mut assign = vec![0usize; points.len()];
    for _ in 0..200 {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut arg = 0;
            let mut dmin = f64::INFINITY;
            for (j, c) in centers.iter().enumerate() {
                let d = d2(p, c);
                if d < dmin {
                    dmin = d;
                    arg = j;
                }
            }
            if assign[i] != arg {
                assign[i] = arg;
                changed = true;
            }
        }
        let mut sums = vec![[0.0; 2]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assign) {
            sums[a][0] += p[0];
            sums[a][1] += p[1];
            counts[a] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centers[j] = [sums[j][0] / counts[j] as f64, sums[j][1] / counts[j] as f64];
            }
        }
        if !changed {
            break;
        }
    }
    Ok((centers, assign))
}

/// Warm-start latent from a point cloud: one disk per k-means cluster with
/// radius equal to the mean member distance to the cluster center, disks in
/// canonical order, mapped through the inverse whitening.
pub fn encode_init(decoder: &DiskDecoder, cloud: &PointCloud2, rng: &mut SampleRng) -> Result<Latent> {
    let k = decoder.disks_count();
    let (centers, assign) = kmeans(cloud.points(), k, rng)?;
    let mut sum = vec![0.0; k];
    let mut count = vec![0usize; k];
    for (p, &a) in cloud.points().iter().zip(&assign) {
        sum[a] += ((p[0] - centers[a][0]).powi(2) + (p[1] - centers[a][1]).powi(2)).sqrt();
        count[a] += 1;
    }
    let disks: Vec<(Vec2, f64)> = centers
        .iter()
        .enumerate()
        .map(|(j, c)| (*c, (sum[j] / count[j].max(1) as f64).max(1e-3)))
        .collect();
    let raw = canonical_order(&DiskDecoder::raw_from_disks(&disks)?);
    Latent::new(decoder.whitening.to_latent(&raw))
}
