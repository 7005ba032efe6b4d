//! Geometric guidance losses over the decoded field and their latent gradients.
//!
//! `L(z, P) = L_surface + lambda * L_eikonal + mu * L_siren`, with the
//! eikonal and off-surface terms estimated by Monte Carlo over uniform
//! samples of `[-1, 1]^2`, drawn fresh at every evaluation.

use serde::{Deserialize, Serialize};

use crate::contour::DOMAIN;
use crate::decoder::{DiskDecoder, Disks};
use crate::error::{ensure_len, ensure_positive, Error, Result};
use crate::rng::SampleRng;
use crate::types::{PointCloud2, Vec2};

/// Area of the scene domain.
pub const DOMAIN_AREA: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GuidanceConfig {
    pub lambda: f64,
    pub mu: f64,
    pub alpha: f64,
    pub xi: f64,
    pub m_eikonal: usize,
    pub m_siren: usize,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            mu: 0.0,
            alpha: 100.0,
            xi: 1e-3,
            m_eikonal: 256,
            m_siren: 256,
        }
    }
}

impl GuidanceConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda", self.lambda), ("mu", self.mu), ("xi", self.xi)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be >= 0, got {v}")));
            }
        }
        ensure_positive("alpha", self.alpha)?;
        if self.lambda > 0.0 && self.m_eikonal == 0 {
            return Err(Error::InvalidArgument("m_eikonal must be >= 1".into()));
        }
        if self.mu > 0.0 && self.m_siren == 0 {
            return Err(Error::InvalidArgument("m_siren must be >= 1".into()));
        }
        Ok(())
    }
}

/// Loss value, latent gradient and the per-term breakdown.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossEval {
    pub value: f64,
    pub grad: Vec<f64>,
    pub surface: f64,
    pub eikonal: f64,
    pub siren: f64,
    pub regularizer: f64,
}

/// A differentiable guidance loss as seen by the samplers.
pub trait Guidance {
    fn dim(&self) -> usize;
    fn evaluate(&mut self, z: &[f64]) -> Result<LossEval>;
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn uniform_domain(rng: &mut SampleRng) -> Vec2 {
    [rng.uniform_range(DOMAIN.0, DOMAIN.1), rng.uniform_range(DOMAIN.0, DOMAIN.1)]
}

fn surface_raw(disks: &Disks, cloud: &PointCloud2) -> Result<(f64, Vec<f64>)> {
    if cloud.is_empty() {
        return Err(Error::Empty("point cloud"));
    }
    let n = cloud.len() as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; 3 * disks.centers.len()];
    for &x in cloud.points() {
        let e = disks.eval(x);
        value += e.value.abs();
        let s = sign(e.value);
        if s != 0.0 {
            for (g, d) in grad.iter_mut().zip(&e.grad_raw) {
                *g += s * d / n;
            }
        }
    }
    Ok((value / n, grad))
}

fn eikonal_raw(disks: &Disks, xs: &[Vec2]) -> (f64, Vec<f64>) {
    let m = xs.len() as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; 3 * disks.centers.len()];
    for &x in xs {
        let g = disks.value_grad_x(x).1;
        let n = (g[0] * g[0] + g[1] * g[1]).sqrt();
        value += (n - 1.0).powi(2);
        if n > 0.0 {
            let c = 2.0 * (n - 1.0) / n;
            let (_, _, vjp) = disks.grad_x_vjp(x, [c * g[0], c * g[1]]);
            for (a, b) in grad.iter_mut().zip(&vjp) {
                *a += b / m;
            }
        }
    }
    (value / m, grad)
}

fn siren_raw(disks: &Disks, xs: &[Vec2], alpha: f64) -> (f64, Vec<f64>) {
    let m = xs.len() as f64;
    let scale = DOMAIN_AREA * alpha / 2.0;
    let mut value = 0.0;
    let mut grad = vec![0.0; 3 * disks.centers.len()];
    for &x in xs {
        let e = disks.eval(x);
        let w = (-alpha * e.value.abs()).exp();
        value += w;
        let s = sign(e.value);
        if s != 0.0 {
            for (g, d) in grad.iter_mut().zip(&e.grad_raw) {
                *g -= scale * alpha * s * w * d / m;
            }
        }
    }
    (scale * value / m, grad)
}

fn draw_points(rng: &mut SampleRng, m: usize) -> Vec<Vec2> {
    (0..m).map(|_| uniform_domain(rng)).collect()
}

/// Mean absolute field value at the measurement points.
pub fn surface_loss(decoder: &DiskDecoder, z: &[f64], cloud: &PointCloud2) -> Result<(f64, Vec<f64>)> {
    let (v, g) = surface_raw(&decoder.disks(z)?, cloud)?;
    Ok((v, decoder.whitening().grad_to_latent(&g)))
}

/// Monte-Carlo mean of `(|grad_x D| - 1)^2` over `m` uniform domain samples.
pub fn eikonal_loss(decoder: &DiskDecoder, z: &[f64], rng: &mut SampleRng, m: usize) -> Result<(f64, Vec<f64>)> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be >= 1".into()));
    }
    let (v, g) = eikonal_raw(&decoder.disks(z)?, &draw_points(rng, m));
    Ok((v, decoder.whitening().grad_to_latent(&g)))
}

/// Monte-Carlo estimate of `(|Omega| alpha / 2) E[exp(-alpha |D|)]`.
pub fn siren_loss(
    decoder: &DiskDecoder,
    z: &[f64],
    rng: &mut SampleRng,
    m: usize,
    alpha: f64,
) -> Result<(f64, Vec<f64>)> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be >= 1".into()));
    }
    ensure_positive("alpha", alpha)?;
    let (v, g) = siren_raw(&decoder.disks(z)?, &draw_points(rng, m), alpha);
    Ok((v, decoder.whitening().grad_to_latent(&g)))
}

/// Surface term plus weighted eikonal and off-surface terms.
pub fn geometric_loss(
    decoder: &DiskDecoder,
    z: &[f64],
    cloud: &PointCloud2,
    cfg: &GuidanceConfig,
    rng: &mut SampleRng,
) -> Result<LossEval> {
    cfg.validate()?;
    let disks = decoder.disks(z)?;
    let (surface, mut grad) = surface_raw(&disks, cloud)?;
    let mut out = LossEval {
        surface,
        ..LossEval::default()
    };
    if cfg.lambda > 0.0 {
        let (v, g) = eikonal_raw(&disks, &draw_points(rng, cfg.m_eikonal));
        out.eikonal = v;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += cfg.lambda * b);
    }
    if cfg.mu > 0.0 {
        let (v, g) = siren_raw(&disks, &draw_points(rng, cfg.m_siren), cfg.alpha);
        out.siren = v;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += cfg.mu * b);
    }
    out.value = out.surface + cfg.lambda * out.eikonal + cfg.mu * out.siren;
    out.grad = decoder.whitening().grad_to_latent(&grad);
    Ok(out)
}

/// Geometric loss plus `xi |z|^2`.
pub fn map_objective(
    decoder: &DiskDecoder,
    z: &[f64],
    cloud: &PointCloud2,
    cfg: &GuidanceConfig,
    rng: &mut SampleRng,
) -> Result<LossEval> {
    let mut out = geometric_loss(decoder, z, cloud, cfg, rng)?;
    out.regularizer = cfg.xi * z.iter().map(|v| v * v).sum::<f64>();
    out.value += out.regularizer;
    for (g, v) in out.grad.iter_mut().zip(z) {
        *g += 2.0 * cfg.xi * v;
    }
    Ok(out)
}

/// Geometric guidance bound to one scan, with its own Monte-Carlo stream.
#[derive(Debug, Clone)]
pub struct GeometricGuidance {
    pub decoder: DiskDecoder,
    pub cloud: PointCloud2,
    pub cfg: GuidanceConfig,
    pub rng: SampleRng,
    /// Add the MAP regularizer.
    pub map: bool,
}

impl Guidance for GeometricGuidance {
    fn dim(&self) -> usize {
        self.decoder.latent_dim()
    }

    fn evaluate(&mut self, z: &[f64]) -> Result<LossEval> {
        if self.map {
            map_objective(&self.decoder, z, &self.cloud, &self.cfg, &mut self.rng)
        } else {
            geometric_loss(&self.decoder, z, &self.cloud, &self.cfg, &mut self.rng)
        }
    }
}

/// `|z - target|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticGuidance {
    pub target: Vec<f64>,
}

impl Guidance for QuadraticGuidance {
    fn dim(&self) -> usize {
        self.target.len()
    }

    fn evaluate(&mut self, z: &[f64]) -> Result<LossEval> {
        ensure_len(self.target.len(), z.len())?;
        let grad: Vec<f64> = z.iter().zip(&self.target).map(|(a, b)| 2.0 * (a - b)).collect();
        let value = z.iter().zip(&self.target).map(|(a, b)| (a - b).powi(2)).sum();
        Ok(LossEval {
            value,
            grad,
            ..LossEval::default()
        })
    }
}

/// `sum_j |z_j - target_j|`.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsGuidance {
    pub target: Vec<f64>,
}

impl Guidance for AbsGuidance {
    fn dim(&self) -> usize {
        self.target.len()
    }

    fn evaluate(&mut self, z: &[f64]) -> Result<LossEval> {
        ensure_len(self.target.len(), z.len())?;
        let grad: Vec<f64> = z.iter().zip(&self.target).map(|(a, b)| sign(a - b)).collect();
        let value = z.iter().zip(&self.target).map(|(a, b)| (a - b).abs()).sum();
        Ok(LossEval {
            value,
            grad,
            ..LossEval::default()
        })
    }
}

/// `L = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoGuidance {
    pub dim: usize,
}

impl Guidance for NoGuidance {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&mut self, z: &[f64]) -> Result<LossEval> {
        ensure_len(self.dim, z.len())?;
        Ok(LossEval {
            grad: vec![0.0; self.dim],
            ..LossEval::default()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::DEFAULT_TAU;

    fn one_disk() -> (DiskDecoder, Vec<f64>) {
        let dec = DiskDecoder::unwhitened(1, DEFAULT_TAU).unwrap();
        let z = dec.latent_from_disks(&[([0.0, 0.0], 0.5)]).unwrap().into_vec();
        (dec, z)
    }

    #[test]
    fn surface_loss_values() {
        let (dec, z) = one_disk();
        let on: Vec<Vec2> = (0..12)
            .map(|i| {
                let t = i as f64 * 0.5;
                [0.5 * t.cos(), 0.5 * t.sin()]
            })
            .collect();
        assert!(surface_loss(&dec, &z, &PointCloud2::new(on).unwrap()).unwrap().0 < 1e-12);
        let off = PointCloud2::new(vec![[0.8, 0.0]]).unwrap();
        assert!((surface_loss(&dec, &z, &off).unwrap().0 - 0.3).abs() < 1e-12);
        assert!(surface_loss(&dec, &z, &PointCloud2::new(vec![]).unwrap()).is_err());
    }

    #[test]
    fn eikonal_of_exact_disk_vanishes() {
        let (dec, z) = one_disk();
        let mut rng = SampleRng::seed_from_u64(2);
        let (v, _) = eikonal_loss(&dec, &z, &mut rng, 4096).unwrap();
        assert!(v <= 1e-4, "{v}");
    }

    #[test]
    fn eikonal_of_doubled_field_is_one() {
        let (dec, z) = one_disk();
        let disks = dec.disks(&z).unwrap();
        let mut rng = SampleRng::seed_from_u64(2);
        let xs = draw_points(&mut rng, 4096);
        let v: f64 = xs
            .iter()
            .map(|&x| {
                let g = disks.value_grad_x(x).1;
                (2.0 * (g[0] * g[0] + g[1] * g[1]).sqrt() - 1.0).powi(2)
            })
            .sum::<f64>()
            / xs.len() as f64;
        assert!((v - 1.0).abs() < 1e-3);
    }

    #[test]
    fn siren_limits() {
        // huge disk covering the domain with its boundary far away
        let dec = DiskDecoder::unwhitened(1, DEFAULT_TAU).unwrap();
        let z = dec.latent_from_disks(&[([0.0, 0.0], 20.0)]).unwrap().into_vec();
        let mut rng = SampleRng::seed_from_u64(4);
        let (v, _) = siren_loss(&dec, &z, &mut rng, 256, 100.0).unwrap();
        assert!(v <= 1e-12);
        let (dec1, z1) = one_disk();
        let (p, _) = siren_loss(&dec1, &z1, &mut rng, 100_000, 400.0).unwrap();
        assert!((p - std::f64::consts::PI).abs() <= 0.1 * std::f64::consts::PI, "{p}");
    }

    #[test]
    fn siren_of_zero_field() {
        let disks = Disks::from_raw(&[0.0, 0.0, crate::decoder::softplus_inv(0.5)], DEFAULT_TAU);
        // every sample exactly on the surface
        let xs = vec![[0.5, 0.0]; 8];
        let (v, _) = siren_raw(&disks, &xs, 100.0);
        assert!((v - 200.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn degenerate_weights_reduce_to_surface() {
        let (dec, z) = one_disk();
        let cloud = PointCloud2::new(vec![[0.7, 0.1], [0.0, 0.3]]).unwrap();
        let cfg = GuidanceConfig {
            lambda: 0.0,
            ..GuidanceConfig::default()
        };
        let mut rng = SampleRng::seed_from_u64(1);
        let g = geometric_loss(&dec, &z, &cloud, &cfg, &mut rng).unwrap();
        let s = surface_loss(&dec, &z, &cloud).unwrap();
        assert_eq!(g.value, s.0);
        assert_eq!(g.grad, s.1);
    }

    #[test]
    fn components_add_up() {
        let (dec, z) = one_disk();
        let cloud = PointCloud2::new(vec![[0.7, 0.1], [0.0, 0.3]]).unwrap();
        let cfg = GuidanceConfig {
            mu: 0.01,
            ..GuidanceConfig::default()
        };
        let mut rng = SampleRng::seed_from_u64(1);
        let g = geometric_loss(&dec, &z, &cloud, &cfg, &mut rng).unwrap();
        let mut rng = SampleRng::seed_from_u64(1);
        let e = eikonal_loss(&dec, &z, &mut rng, cfg.m_eikonal).unwrap().0;
        let s = siren_loss(&dec, &z, &mut rng, cfg.m_siren, cfg.alpha).unwrap().0;
        assert!((g.eikonal - e).abs() < 1e-15 && (g.siren - s).abs() < 1e-15);
        assert!((g.value - (g.surface + 0.1 * e + 0.01 * s)).abs() < 1e-14);
    }

    #[test]
    fn map_regularizer() {
        let (dec, z) = one_disk();
        let cloud = PointCloud2::new(vec![[0.7, 0.1]]).unwrap();
        let mut cfg = GuidanceConfig {
            xi: 0.0,
            ..GuidanceConfig::default()
        };
        let a = map_objective(&dec, &z, &cloud, &cfg, &mut SampleRng::seed_from_u64(3)).unwrap();
        let b = geometric_loss(&dec, &z, &cloud, &cfg, &mut SampleRng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        cfg.xi = 0.5;
        let zero = vec![0.0; 3];
        let a = map_objective(&dec, &zero, &cloud, &cfg, &mut SampleRng::seed_from_u64(3)).unwrap();
        assert_eq!(a.regularizer, 0.0);
    }

    #[test]
    fn losses_are_nonnegative() {
        let dec = DiskDecoder::unwhitened(3, DEFAULT_TAU).unwrap();
        let mut rng = SampleRng::seed_from_u64(8);
        for _ in 0..20 {
            let z: Vec<f64> = (0..9).map(|_| 0.5 * rng.normal()).collect();
            let cloud = PointCloud2::new(vec![[rng.normal() * 0.5, rng.normal() * 0.5]]).unwrap();
            assert!(surface_loss(&dec, &z, &cloud).unwrap().0 >= 0.0);
            assert!(eikonal_loss(&dec, &z, &mut rng, 16).unwrap().0 >= 0.0);
            assert!(siren_loss(&dec, &z, &mut rng, 16, 100.0).unwrap().0 >= 0.0);
        }
    }

    #[test]
    fn toy_guidance() {
        let mut q = QuadraticGuidance { target: vec![0.5] };
        let e = q.evaluate(&[1.5]).unwrap();
        assert_eq!((e.value, e.grad[0]), (1.0, 2.0));
        let mut a = AbsGuidance { target: vec![0.5] };
        let e = a.evaluate(&[0.0]).unwrap();
        assert_eq!((e.value, e.grad[0]), (0.5, -1.0));
        assert_eq!(a.evaluate(&[0.5]).unwrap().grad[0], 0.0);
    }
}
