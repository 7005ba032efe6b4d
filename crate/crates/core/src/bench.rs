//! 2D reconstruction benchmark: procedural shapes, simulated scans, and the
//! sampler comparison runner.
//!
//! Every shape is a union of `K = 5` disks: a family template deformed by a
//! few whole-shape modes plus small per-disk jitter, all Gaussian in raw
//! decoder coordinates, so each family's prior is an exact Gaussian.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::{extract_contour, field_normals, Contour};
use crate::decoder::{encode_init, softplus_inv, DiskDecoder, Whitening, DEFAULT_DISKS, DEFAULT_TAU};
use crate::error::{ensure_positive, Error, Result};
use crate::guidance::{GeometricGuidance, GuidanceConfig};
use crate::io::{fmt_real, CsvTable};
use crate::metrics::{chamfer_angle, chamfer_distance};
use crate::rng::SampleRng;
use crate::samplers::{
    daps_run, dps_run, gg_langevin_run, map_run, DapsConfig, DpsConfig, Outcome, RunOptions, SamplerTrace, UpdateRule,
    GUIDANCE_STREAM, INIT_STREAM,
};
use crate::schedule::SamplerConfig;
use crate::score::{train_score_model, GmmPrior, Score, ScoreOracle, TrainConfig, TrainReport};
use crate::svg::SvgCanvas;
use crate::types::{PointCloud2, Vec2};

const SHAPE_STREAM: u64 = 16;
const SCAN_STREAM: u64 = 17;
const ENCODER_STREAM: u64 = 18;
const PRIOR_STREAM: u64 = 19;

/// Procedural shape families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeFamily {
    Dumbbell,
    Tripod,
    Worm,
    Blob,
}

impl ShapeFamily {
    pub const ALL: [ShapeFamily; 4] = [Self::Dumbbell, Self::Tripod, Self::Worm, Self::Blob];

    pub fn name(self) -> &'static str {
        match self {
            Self::Dumbbell => "dumbbell",
            Self::Tripod => "tripod",
            Self::Worm => "worm",
            Self::Blob => "blob",
        }
    }

    fn id(self) -> u64 {
        self as u64
    }

    /// Template disks `(center, radius)`.
    pub fn template(self) -> Vec<(Vec2, f64)> {
        match self {
            Self::Dumbbell => vec![
                ([-0.45, 0.0], 0.27),
                ([-0.18, 0.0], 0.14),
                ([0.0, 0.0], 0.14),
                ([0.18, 0.0], 0.14),
                ([0.45, 0.0], 0.27),
            ],
            Self::Tripod => {
                let leg = |deg: f64, d: f64, r: f64| {
                    let a = deg.to_radians();
                    ([d * a.cos(), d * a.sin()], r)
                };
                vec![
                    ([0.0, 0.0], 0.25),
                    leg(90.0, 0.42, 0.19),
                    leg(210.0, 0.42, 0.19),
                    leg(330.0, 0.42, 0.19),
                    leg(90.0, 0.7, 0.14),
                ]
            }
            Self::Worm => {
                let radii = [0.24, 0.21, 0.19, 0.17, 0.15];
                (0..5)
                    .map(|i| {
                        let a = (170.0 - 32.0 * i as f64).to_radians();
                        ([0.5 * a.cos(), -0.22 + 0.5 * a.sin()], radii[i])
                    })
                    .collect()
            }
            Self::Blob => vec![
                ([0.0, 0.0], 0.35),
                ([0.25, 0.2], 0.25),
                ([-0.25, 0.15], 0.22),
                ([0.1, -0.3], 0.2),
                ([-0.2, -0.25], 0.18),
            ],
        }
    }

    pub fn template_raw(self) -> Vec<f64> {
        self.template()
            .iter()
            .flat_map(|&(c, r)| [c[0], c[1], softplus_inv(r)])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldConfig {
    /// Std of the shared deformation factors, in the units of [`Deformation`].
    pub translate: f64,
    pub rotate: f64,
    pub scale: f64,
    pub stretch: f64,
    pub thicken: f64,
    pub bend: f64,
    /// Std of independent per-disk center jitter.
    pub center_jitter: f64,
    /// Std of independent jitter on the softplus-inverse radius.
    pub rho_jitter: f64,
    pub tau: f64,
    /// Training shapes for the encoder head; 0 leaves the raw k-means latent.
    pub encoder_training_shapes: usize,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            translate: 0.03,
            rotate: 0.15,
            scale: 0.08,
            stretch: 0.08,
            thicken: 0.1,
            bend: 0.3,
            center_jitter: 0.01,
            rho_jitter: 0.02,
            tau: DEFAULT_TAU,
            encoder_training_shapes: 200,
        }
    }
}

/// Whole-shape deformation modes, linearized at the template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Deformation {
    TranslateX,
    TranslateY,
    /// Rotation about the centroid (radians).
    Rotate,
    /// Log of a uniform scaling about the centroid, radii included.
    Scale,
    /// Log of a stretch along the principal axis with matching squash across it.
    Stretch,
    /// Log of a common radius factor.
    Thicken,
    /// Parabolic bend across the principal axis (inverse scene units).
    Bend,
}

impl Deformation {
    pub const ALL: [Deformation; 7] = [
        Self::TranslateX,
        Self::TranslateY,
        Self::Rotate,
        Self::Scale,
        Self::Stretch,
        Self::Thicken,
        Self::Bend,
    ];

    fn std(self, c: &WorldConfig) -> f64 {
        match self {
            Self::TranslateX | Self::TranslateY => c.translate,
            Self::Rotate => c.rotate,
            Self::Scale => c.scale,
            Self::Stretch => c.stretch,
            Self::Thicken => c.thicken,
            Self::Bend => c.bend,
        }
    }

    /// Raw-parameter direction of this mode for `family`.
    pub fn direction(self, family: ShapeFamily) -> Vec<f64> {
        let disks = family.template();
        let k = disks.len() as f64;
        let mean = [
            disks.iter().map(|d| d.0[0]).sum::<f64>() / k,
            disks.iter().map(|d| d.0[1]).sum::<f64>() / k,
        ];
        let (u, v) = principal_axes(&disks, mean);
        // d rho / d log r for rho = softplus^{-1}(r).
        let dlog = |r: f64| r / (1.0 - (-r).exp());
        let along: Vec<f64> = disks.iter().map(|d| (d.0[0] - mean[0]) * u[0] + (d.0[1] - mean[1]) * u[1]).collect();
        let bend_mean = along.iter().map(|s| s * s).sum::<f64>() / k;
        disks
            .iter()
            .zip(&along)
            .flat_map(|(&(c, r), &s)| {
                let p = [c[0] - mean[0], c[1] - mean[1]];
                let across = p[0] * v[0] + p[1] * v[1];
                match self {
                    Self::TranslateX => [1.0, 0.0, 0.0],
                    Self::TranslateY => [0.0, 1.0, 0.0],
                    Self::Rotate => [-p[1], p[0], 0.0],
                    Self::Scale => [p[0], p[1], dlog(r)],
                    Self::Stretch => [s * u[0] - across * v[0], s * u[1] - across * v[1], 0.0],
                    Self::Thicken => [0.0, 0.0, dlog(r)],
                    Self::Bend => {
                        let b = s * s - bend_mean;
                        [b * v[0], b * v[1], 0.0]
                    }
                }
            })
            .collect()
    }
}

/// Unit principal axis of the template centers and its perpendicular.
fn principal_axes(disks: &[(Vec2, f64)], mean: Vec2) -> (Vec2, Vec2) {
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (c, _) in disks {
        let (x, y) = (c[0] - mean[0], c[1] - mean[1]);
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let u = [angle.cos(), angle.sin()];
    (u, [-u[1], u[0]])
}

/// Class-conditioned setting for one shape family: the whitened decoder and
/// the matching Gaussian shape prior.
///
/// Shapes are `template + sum_j f_j a_j + jitter` with independent Gaussian
/// factors, so raw parameters are exactly `N(template, S)`. The whitening
/// standardizes each raw coordinate and rotates onto the eigenvectors of the
/// resulting correlation matrix; in those coordinates the prior is a
/// diagonal Gaussian whose variances average to one. Directions the family
/// never varies along carry small prior variance.
#[derive(Debug, Clone)]
pub struct BenchWorld {
    pub config: WorldConfig,
    pub family: ShapeFamily,
    pub decoder: DiskDecoder,
    pub prior: GmmPrior,
    pub head: EncoderHead,
}

/// A ground-truth shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSpec {
    pub family: ShapeFamily,
    pub seed: u64,
    /// Whitened latent of the shape under the world decoder.
    pub latent: Vec<f64>,
}

impl BenchWorld {
    pub fn new(config: WorldConfig, family: ShapeFamily) -> Result<Self> {
        ensure_positive("center_jitter", config.center_jitter)?;
        ensure_positive("rho_jitter", config.rho_jitter)?;
        for d in Deformation::ALL {
            let s = d.std(&config);
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument(format!("{d:?} std must be >= 0, got {s}")));
            }
        }
        let n = 3 * DEFAULT_DISKS;
        let mut cov = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            cov[(j, j)] = if j % 3 == 2 { config.rho_jitter } else { config.center_jitter }.powi(2);
        }
        for d in Deformation::ALL {
            let a = DVector::from_vec(d.direction(family));
            cov += d.std(&config).powi(2) * &a * a.transpose();
        }
        let scale: Vec<f64> = (0..n).map(|j| cov[(j, j)].sqrt()).collect();
        let corr = DMatrix::from_fn(n, n, |i, j| cov[(i, j)] / (scale[i] * scale[j]));
        let eig = SymmetricEigen::new(corr);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut mixing = vec![vec![0.0; n]; n];
        let mut variances = Vec::with_capacity(n);
        for (col, &src) in order.iter().enumerate() {
            let v = eig.eigenvectors.column(src);
            // Fix the sign so the largest entry is positive.
            let pivot = (0..n).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap_or(0);
            let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
            for row in 0..n {
                mixing[row][col] = sign * v[row];
            }
            variances.push(eig.eigenvalues[src].max(1e-12));
        }
        let whitening = Whitening {
            shift: family.template_raw(),
            scale,
            mix: None,
        }
        .with_mix(orthonormalize(mixing))?;
        let decoder = DiskDecoder::new(DEFAULT_DISKS, config.tau, whitening)?;
        let prior = GmmPrior::new(vec![1.0], vec![vec![0.0; n]], vec![variances])?;
        let shapes = config.encoder_training_shapes;
        let mut world = Self {
            config,
            family,
            decoder,
            prior,
            head: EncoderHead::identity(n),
        };
        if shapes > 0 {
            world.head = world.fit_head(shapes)?;
        }
        Ok(world)
    }

    /// Ground-truth instance for `seed`.
    pub fn shape(&self, seed: u64) -> ShapeSpec {
        let mut rng = SampleRng::fork_from(mix(seed, self.family.id(), 0), SHAPE_STREAM);
        let raw = sample_raw(self.family, &self.config, &mut rng);
        ShapeSpec {
            family: self.family,
            seed,
            latent: self.decoder.whitening().to_latent(&raw),
        }
    }

    /// Reorder the disk slots of `z` so its centers best match the template.
    pub fn align_to_template(&self, z: &[f64]) -> Vec<f64> {
        let k = self.decoder.disks_count();
        let w = self.decoder.whitening();
        let raw = w.to_raw(z);
        let target = self.family.template_raw();
        let mut best = (f64::INFINITY, raw.clone());
        for perm in permutations(k) {
            let permuted: Vec<f64> = perm.iter().flat_map(|&s| raw[3 * s..3 * s + 3].to_vec()).collect();
            let d: f64 = (0..k)
                .map(|i| (permuted[3 * i] - target[3 * i]).powi(2) + (permuted[3 * i + 1] - target[3 * i + 1]).powi(2))
                .sum();
            if d < best.0 {
                best = (d, permuted);
            }
        }
        w.to_latent(&best.1)
    }

    /// Warm start: k-means disks with their slots matched to the template,
    /// passed through the calibrated per-coordinate head.
    pub fn encode(&self, cloud: &PointCloud2, rng: &mut SampleRng) -> Result<Vec<f64>> {
        Ok(self.head.apply(&self.encode_raw(cloud, rng)?))
    }

    fn encode_raw(&self, cloud: &PointCloud2, rng: &mut SampleRng) -> Result<Vec<f64>> {
        Ok(self.align_to_template(encode_init(&self.decoder, cloud, rng)?.as_slice()))
    }

    /// Fit the encoder head on scans of fresh training shapes from both
    /// regimes. Training shapes come from their own random stream, so they
    /// never coincide with benchmark shapes.
    fn fit_head(&self, shapes: usize) -> Result<EncoderHead> {
        let d = self.decoder.latent_dim();
        let mut pairs = Vec::new();
        for i in 0..shapes as u64 {
            let mut rng = SampleRng::fork_from(mix(i, self.family.id(), 0), ENCODER_STREAM);
            let raw = sample_raw(self.family, &self.config, &mut rng);
            let shape = ShapeSpec {
                family: self.family,
                seed: i,
                latent: self.decoder.whitening().to_latent(&raw),
            };
            for regime in ScanRegime::ALL {
                let (_, cloud) = scan_shape(self, &shape, regime, &mut rng)?;
                if cloud.len() < self.decoder.disks_count() {
                    continue;
                }
                pairs.push((self.encode_raw(&cloud, &mut rng)?, shape.latent.clone()));
            }
        }
        if pairs.len() < 2 {
            return Err(Error::Empty("encoder training scans"));
        }
        let n = pairs.len() as f64;
        let mut head = EncoderHead::identity(d);
        for j in 0..d {
            let mx = pairs.iter().map(|p| p.0[j]).sum::<f64>() / n;
            let my = pairs.iter().map(|p| p.1[j]).sum::<f64>() / n;
            let sxx: f64 = pairs.iter().map(|p| (p.0[j] - mx).powi(2)).sum();
            let sxy: f64 = pairs.iter().map(|p| (p.0[j] - mx) * (p.1[j] - my)).sum();
            let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
            head.slope[j] = slope;
            head.offset[j] = my - slope * mx;
        }
        Ok(head)
    }
}

/// Per-coordinate affine map applied to the k-means latent: the least-squares
/// regression of true latents on k-means latents over training scans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderHead {
    pub slope: Vec<f64>,
    pub offset: Vec<f64>,
}

impl EncoderHead {
    pub fn identity(d: usize) -> Self {
        Self {
            slope: vec![1.0; d],
            offset: vec![0.0; d],
        }
    }

    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(&self.slope)
            .zip(&self.offset)
            .map(|((z, a), b)| a * z + b)
            .collect()
    }
}

/// One world per family, each with its own prior score oracle.
#[derive(Debug, Clone)]
pub struct BenchSuite {
    pub worlds: Vec<(BenchWorld, ScoreOracle)>,
}

impl BenchSuite {
    /// Worlds for `families` scored by their analytic priors.
    pub fn analytic(config: &WorldConfig, families: &[ShapeFamily]) -> Result<Self> {
        let worlds = families
            .iter()
            .map(|&f| {
                let w = BenchWorld::new(config.clone(), f)?;
                let oracle = ScoreOracle::AnalyticGmm(w.prior.clone());
                Ok((w, oracle))
            })
            .collect::<Result<_>>()?;
        Ok(Self { worlds })
    }

    /// Worlds for `families` scored by noise predictors trained on `samples`
    /// prior draws each. Training seeds are offset by the family id.
    pub fn learned(
        config: &WorldConfig,
        families: &[ShapeFamily],
        train: &TrainConfig,
        samples: usize,
    ) -> Result<(Self, Vec<TrainReport>)> {
        let mut worlds = Vec::new();
        let mut reports = Vec::new();
        for &f in families {
            let w = BenchWorld::new(config.clone(), f)?;
            let seed = train.seed.wrapping_add(f.id());
            let mut rng = SampleRng::fork_from(seed, PRIOR_STREAM);
            let data: Vec<Vec<f64>> = (0..samples).map(|_| w.prior.sample(&mut rng)).collect();
            let cfg = TrainConfig { seed, ..train.clone() };
            let report = train_score_model(&data, &cfg, None)?;
            worlds.push((w, ScoreOracle::Learned(report.model.clone())));
            reports.push(report);
        }
        Ok((Self { worlds }, reports))
    }

    pub fn get(&self, family: ShapeFamily) -> Option<&(BenchWorld, ScoreOracle)> {
        self.worlds.iter().find(|(w, _)| w.family == family)
    }
}

/// Raw parameters drawn from the family's factor model.
fn sample_raw(family: ShapeFamily, config: &WorldConfig, rng: &mut SampleRng) -> Vec<f64> {
    let mut raw: Vec<f64> = family
        .template_raw()
        .iter()
        .enumerate()
        .map(|(j, v)| v + if j % 3 == 2 { config.rho_jitter } else { config.center_jitter } * rng.normal())
        .collect();
    for d in Deformation::ALL {
        let f = d.std(config) * rng.normal();
        raw.iter_mut().zip(d.direction(family)).for_each(|(r, a)| *r += f * a);
    }
    raw
}

/// Gram-Schmidt over columns, removing the round-off left by the eigensolver.
fn orthonormalize(m: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for c in 0..n {
        let mut v: Vec<f64> = (0..n).map(|r| m[r][c]).collect();
        for _ in 0..2 {
            for u in &cols {
                let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        cols.push(v.into_iter().map(|a| a / norm).collect());
    }
    (0..n).map(|r| (0..n).map(|c| cols[c][r]).collect()).collect()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// SplitMix64-style mixing of a seed with cell coordinates.
fn mix(seed: u64, a: u64, b: u64) -> u64 {
    let mut x = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xD1B5_4A32_D192_ED03);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Planar cut applied after scanning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutSpec {
    pub normal: Vec2,
    pub offset: f64,
    pub decay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub sensors: Vec<Vec2>,
    pub rays_per_sensor: usize,
    /// Half-width of each sensor's ray fan, aimed at the origin, in radians.
    pub fan_half_angle: f64,
    /// Std of the Gaussian range error along each ray.
    pub noise: f64,
    pub cut: Option<CutSpec>,
}

impl ScanSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sensors.is_empty() {
            return Err(Error::Empty("sensors"));
        }
        if self.rays_per_sensor == 0 {
            return Err(Error::InvalidArgument("rays_per_sensor must be positive".into()));
        }
        if self.sensors.iter().any(|s| s[0].abs() <= 1.0 && s[1].abs() <= 1.0) {
            return Err(Error::InvalidArgument("sensors must lie outside the domain".into()));
        }
        if !(self.noise >= 0.0) {
            return Err(Error::InvalidArgument("noise must be >= 0".into()));
        }
        if let Some(c) = &self.cut {
            ensure_positive("cut decay", c.decay)?;
            if ((c.normal[0].powi(2) + c.normal[1].powi(2)).sqrt() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument("cut normal must be unit length".into()));
            }
        }
        Ok(())
    }
}

/// The two scan settings of the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanRegime {
    /// Two sensors, 30 rays each, range noise 0.01.
    Sparse,
    /// Four sensors, 60 rays each, range noise 0.005, then a random cut.
    Incomplete,
}

/// Sensors sit on this circle around the origin.
pub const SENSOR_RADIUS: f64 = 2.0;
/// Default cut decay length.
pub const CUT_DECAY: f64 = 0.1;

impl ScanRegime {
    pub const ALL: [ScanRegime; 2] = [Self::Sparse, Self::Incomplete];

    pub fn name(self) -> &'static str {
        match self {
            Self::Sparse => "sparse",
            Self::Incomplete => "incomplete",
        }
    }

    fn id(self) -> u64 {
        self as u64
    }

    /// Randomized scan layout: evenly spaced sensors with a random rotation,
    /// plus a random cut plane for the incomplete regime.
    pub fn spec(self, rng: &mut SampleRng) -> ScanSpec {
        let (n, rays, noise) = match self {
            Self::Sparse => (2, 30, 0.01),
            Self::Incomplete => (4, 60, 0.005),
        };
        let phase = rng.uniform_range(0.0, 2.0 * PI);
        let sensors = (0..n)
            .map(|i| {
                let a = phase + 2.0 * PI * i as f64 / n as f64;
                [SENSOR_RADIUS * a.cos(), SENSOR_RADIUS * a.sin()]
            })
            .collect();
        let cut = match self {
            Self::Sparse => None,
            Self::Incomplete => {
                let a = rng.uniform_range(0.0, 2.0 * PI);
                Some(CutSpec {
                    normal: [a.cos(), a.sin()],
                    offset: rng.uniform_range(-0.3, 0.1),
                    decay: CUT_DECAY,
                })
            }
        };
        ScanSpec {
            sensors,
            rays_per_sensor: rays,
            fan_half_angle: 0.45,
            noise,
            cut,
        }
    }
}

/// First crossing of the zero level along a ray, refined by bisection.
fn cast_ray<F: Fn(Vec2) -> f64>(field: &F, origin: Vec2, dir: Vec2, t_max: f64) -> Option<f64> {
    let at = |t: f64| [origin[0] + t * dir[0], origin[1] + t * dir[1]];
    let mut t = 0.0;
    let mut d = field(origin);
    if d <= 0.0 {
        return Some(0.0);
    }
    while t < t_max {
        // The soft-min field never exceeds the distance to the disk union, so
        // stepping by it cannot jump over the boundary.
        let t_next = t + d.max(1e-4);
        let d_next = field(at(t_next));
        if d_next <= 0.0 {
            let (mut lo, mut hi) = (t, t_next);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let v = field(at(mid));
                if v.abs() <= 1e-12 {
                    return Some(mid);
                }
                if v > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-15 {
                    break;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        t = t_next;
        d = d_next;
    }
    None
}

/// Ray-cast scan of a shape: each ray returns its first boundary hit moved
/// along the ray by Gaussian range noise. Misses and points leaving the domain
/// are dropped. The cut, if any, is not applied here.
pub fn simulate_scan(decoder: &DiskDecoder, z: &[f64], spec: &ScanSpec, rng: &mut SampleRng) -> Result<PointCloud2> {
    spec.validate()?;
    let disks = decoder.disks(z)?;
    let field = |x: Vec2| disks.value(x);
    let mut points = Vec::new();
    for s in &spec.sensors {
        let r = (s[0] * s[0] + s[1] * s[1]).sqrt();
        let base = (-s[1]).atan2(-s[0]);
        let t_max = r + 2f64.sqrt();
        for i in 0..spec.rays_per_sensor {
            let frac = if spec.rays_per_sensor > 1 {
                i as f64 / (spec.rays_per_sensor - 1) as f64
            } else {
                0.5
            };
            let a = base + spec.fan_half_angle * (2.0 * frac - 1.0);
            let dir = [a.cos(), a.sin()];
            let noise = rng.normal() * spec.noise;
            if let Some(t) = cast_ray(&field, *s, dir, t_max) {
                let t = t + noise;
                let p = [s[0] + t * dir[0], s[1] + t * dir[1]];
                if p[0].abs() <= 1.0 && p[1].abs() <= 1.0 {
                    points.push(p);
                }
            }
        }
    }
    PointCloud2::new(points)
}

/// Drop points on the positive side of the plane `<normal, x> = offset`,
/// keeping each with probability `exp(-d / decay)` where `d` is its signed
/// distance. Points on the other side are kept untouched.
pub fn apply_cut(cloud: &PointCloud2, cut: &CutSpec, rng: &mut SampleRng) -> Result<PointCloud2> {
    ensure_positive("cut decay", cut.decay)?;
    let mut points = Vec::new();
    let mut normals = Vec::new();
    for (i, p) in cloud.points().iter().enumerate() {
        let d = cut.normal[0] * p[0] + cut.normal[1] * p[1] - cut.offset;
        let keep = d <= 0.0 || rng.uniform() < (-d / cut.decay).exp();
        if keep {
            points.push(*p);
            if let Some(n) = cloud.normals() {
                normals.push(n[i]);
            }
        }
    }
    match cloud.normals() {
        Some(_) => PointCloud2::with_normals(points, normals),
        None => PointCloud2::new(points),
    }
}

/// Complete scan for a benchmark cell: layout, ray casting, and cut.
pub fn scan_shape(world: &BenchWorld, shape: &ShapeSpec, regime: ScanRegime, rng: &mut SampleRng) -> Result<(ScanSpec, PointCloud2)> {
    let spec = regime.spec(rng);
    let mut cloud = simulate_scan(&world.decoder, &shape.latent, &spec, rng)?;
    if let Some(cut) = &spec.cut {
        cloud = apply_cut(&cloud, cut, rng)?;
    }
    Ok((spec, cloud))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Chamfer distance, times 100.
    pub chamfer_distance: f64,
    /// Chamfer angle in degrees.
    pub chamfer_angle: f64,
}

/// Arc-length uniform samples of the zero level set with outward normals.
pub fn contour_samples(decoder: &DiskDecoder, z: &[f64], resolution: usize, n: usize) -> Result<(Contour, Vec<Vec2>, Vec<Vec2>)> {
    let contour = extract_contour(decoder, z, resolution)?;
    if contour.is_empty() {
        return Err(Error::Empty("reconstructed contour"));
    }
    let points = contour.sample_uniform(n);
    let normals = field_normals(&decoder.disks(z)?, &points)?;
    Ok((contour, points, normals))
}

/// Chamfer metrics between the shapes of two latents.
pub fn shape_metrics(decoder: &DiskDecoder, z: &[f64], truth: &[f64], resolution: usize, n: usize) -> Result<Metrics> {
    let (_, a, na) = contour_samples(decoder, z, resolution, n)?;
    let (_, b, nb) = contour_samples(decoder, truth, resolution, n)?;
    Ok(Metrics {
        chamfer_distance: chamfer_distance(&a, &b)?,
        chamfer_angle: chamfer_angle(&a, &na, &b, &nb)?,
    })
}

/// Samplers compared by the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// Guided Langevin with the regime's preset schedule.
    Gg,
    /// Guided Langevin at constant sigma 0.05 for 2000 steps in every regime.
    GgConstant,
    Map,
    Dps,
    Daps,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gg => "gg",
            Self::GgConstant => "gg_constant",
            Self::Map => "map",
            Self::Dps => "dps",
            Self::Daps => "daps",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        [Self::Gg, Self::GgConstant, Self::Map, Self::Dps, Self::Daps]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown sampler {s:?}")))
    }

    /// Step budget, schedule, and strength for this sampler in `regime`.
    pub fn config(self, regime: ScanRegime, seed: u64) -> SamplerConfig {
        match (self, regime) {
            (Self::GgConstant, _) | (_, ScanRegime::Sparse) => SamplerConfig::sparse_default(seed),
            (_, ScanRegime::Incomplete) => SamplerConfig::incomplete_default(seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchManifest {
    pub families: Vec<ShapeFamily>,
    pub regimes: Vec<ScanRegime>,
    pub samplers: Vec<SamplerKind>,
    pub seeds: Vec<u64>,
    pub guidance: GuidanceConfig,
    pub dps: DpsConfig,
    pub daps: DapsConfig,
    pub contour_resolution: usize,
    pub metric_points: usize,
    /// Update rule of the guided Langevin samplers.
    pub gg_update: UpdateRule,
}

impl Default for BenchManifest {
    fn default() -> Self {
        Self {
            families: vec![ShapeFamily::Dumbbell, ShapeFamily::Tripod, ShapeFamily::Worm],
            regimes: vec![ScanRegime::Sparse, ScanRegime::Incomplete],
            samplers: vec![SamplerKind::Gg, SamplerKind::Map, SamplerKind::Dps, SamplerKind::Daps],
            seeds: vec![0, 1, 2],
            // Baseline weights picked by mean CD over both regimes on seeds
            // 100..103, which the default seeds never touch.
            guidance: GuidanceConfig {
                xi: 1e-4,
                ..GuidanceConfig::default()
            },
            dps: DpsConfig {
                eta: 1e4,
                ..DpsConfig::default()
            },
            daps: DapsConfig {
                eta: 2e3,
                ..DapsConfig::default()
            },
            contour_resolution: 256,
            metric_points: 2000,
            gg_update: UpdateRule::Adam,
        }
    }
}

/// One unit of benchmark work.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub family: ShapeFamily,
    pub regime: ScanRegime,
    pub sampler: SamplerKind,
    pub seed: u64,
}

impl BenchManifest {
    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() || self.regimes.is_empty() || self.samplers.is_empty() || self.seeds.is_empty() {
            return Err(Error::Empty("manifest"));
        }
        self.guidance.validate()?;
        if self.contour_resolution < 16 {
            return Err(Error::InvalidArgument("contour_resolution must be >= 16".into()));
        }
        if self.metric_points < 2000 {
            return Err(Error::InvalidArgument("metric_points must be >= 2000".into()));
        }
        Ok(())
    }

    /// Cells in report order: family, regime, seed, sampler.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &family in &self.families {
            for &regime in &self.regimes {
                for &seed in &self.seeds {
                    for &sampler in &self.samplers {
                        out.push(Cell {
                            family,
                            regime,
                            sampler,
                            seed,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub cell: Cell,
    pub scan: Vec<Vec2>,
    pub truth: Vec<f64>,
    pub init: Vec<f64>,
    pub final_latent: Vec<f64>,
    pub final_loss: f64,
    pub metrics: Result<Metrics>,
    pub wall_seconds: f64,
}

/// Run one cell. Scan and initialization depend only on family, regime, and
/// seed, so every sampler in a group sees the same input.
pub fn run_cell(suite: &BenchSuite, manifest: &BenchManifest, cell: Cell) -> CellResult {
    run_cell_traced(suite, manifest, cell, 0).0
}

/// [`run_cell`] that also returns the sampler trace, recorded every
/// `record_every` steps (0 keeps only the final step).
pub fn run_cell_traced(
    suite: &BenchSuite,
    manifest: &BenchManifest,
    cell: Cell,
    record_every: usize,
) -> (CellResult, Option<SamplerTrace>) {
    let start = Instant::now();
    let (world, oracle) = suite.get(cell.family).expect("family present in suite");
    let shape = world.shape(cell.seed);
    let group = mix(cell.seed, cell.family.id(), cell.regime.id() + 1);
    let mut result = CellResult {
        cell,
        scan: Vec::new(),
        truth: shape.latent.clone(),
        init: Vec::new(),
        final_latent: Vec::new(),
        final_loss: f64::NAN,
        metrics: Err(Error::Empty("not run")),
        wall_seconds: 0.0,
    };
    let mut kept = None;
    let run = (|| -> Result<Metrics> {
        let mut scan_rng = SampleRng::fork_from(group, SCAN_STREAM);
        let (_, cloud) = scan_shape(world, &shape, cell.regime, &mut scan_rng)?;
        result.scan = cloud.points().to_vec();
        if cloud.len() < world.decoder.disks_count() {
            return Err(Error::Empty("scan has fewer points than disks"));
        }
        let mut init_rng = SampleRng::fork_from(group, INIT_STREAM);
        let z0 = world.encode(&cloud, &mut init_rng)?;
        result.init.clone_from(&z0);
        let cfg = cell.sampler.config(cell.regime, mix(group, cell.sampler as u64, 7));
        let mut guidance = GeometricGuidance {
            decoder: world.decoder.clone(),
            cloud,
            cfg: manifest.guidance.clone(),
            rng: SampleRng::fork_from(cfg.seed, GUIDANCE_STREAM),
            map: cell.sampler == SamplerKind::Map,
        };
        let opts = RunOptions {
            record_every: if record_every == 0 { cfg.steps } else { record_every },
            ..RunOptions::default()
        };
        let trace = match cell.sampler {
            SamplerKind::Gg | SamplerKind::GgConstant => {
                let opts = RunOptions {
                    rule: manifest.gg_update,
                    ..opts
                };
                gg_langevin_run(oracle, &mut guidance, &z0, &cfg, &opts)?
            }
            SamplerKind::Map => map_run(&mut guidance, &z0, &cfg, &opts)?,
            SamplerKind::Dps => dps_run(oracle, &mut guidance, &z0, &cfg, &manifest.dps, &opts)?,
            SamplerKind::Daps => daps_run(oracle, &mut guidance, &z0, &cfg, &manifest.daps, &opts)?,
        };
        result.final_loss = trace.records.last().map_or(f64::NAN, |r| r.loss);
        let trace = kept.insert(trace);
        if let Outcome::Diverged { step, reason } = &trace.outcome {
            return Err(Error::Divergence {
                step: *step,
                reason: reason.clone(),
            });
        }
        result.final_latent.clone_from(&trace.final_latent);
        shape_metrics(
            &world.decoder,
            &trace.final_latent,
            &shape.latent,
            manifest.contour_resolution,
            manifest.metric_points,
        )
    })();
    result.metrics = run;
    result.wall_seconds = start.elapsed().as_secs_f64();
    (result, kept)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub cells: Vec<CellResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub regime: ScanRegime,
    pub sampler: SamplerKind,
    pub cells: usize,
    pub failures: usize,
    pub cd_mean: f64,
    pub cd_std: f64,
    pub ca_mean: f64,
    pub ca_std: f64,
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Run every cell of the manifest. Cells run in parallel; results come back
/// in manifest order and failures are recorded per cell.
pub fn run_experiment(suite: &BenchSuite, manifest: &BenchManifest) -> Result<BenchReport> {
    manifest.validate()?;
    for &f in &manifest.families {
        let (world, oracle) = suite
            .get(f)
            .ok_or_else(|| Error::InvalidArgument(format!("no world for family {}", f.name())))?;
        if oracle.dim() != world.decoder.latent_dim() {
            return Err(Error::DimensionMismatch {
                expected: world.decoder.latent_dim(),
                got: oracle.dim(),
            });
        }
    }
    let cells = manifest.cells();
    let results = cells.par_iter().map(|&c| run_cell(suite, manifest, c)).collect();
    Ok(BenchReport { cells: results })
}

impl BenchReport {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.metrics.is_err()).count()
    }

    /// One row per cell. Wall time is left out so reruns are byte-identical.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(
            "bench-cells",
            &["family", "regime", "sampler", "seed", "status", "cd", "ca", "final_loss", "scan_points"],
        );
        for c in &self.cells {
            let (status, cd, ca) = match &c.metrics {
                Ok(m) => ("ok".to_string(), fmt_real(m.chamfer_distance), fmt_real(m.chamfer_angle)),
                Err(e) => (format!("failed: {}", e.to_string().replace(',', ";")), "nan".into(), "nan".into()),
            };
            t.push(vec![
                c.cell.family.name().into(),
                c.cell.regime.name().into(),
                c.cell.sampler.name().into(),
                c.cell.seed.to_string(),
                status,
                cd,
                ca,
                fmt_real(c.final_loss),
                c.scan.len().to_string(),
            ]);
        }
        t
    }

    pub fn timing_csv(&self) -> CsvTable {
        let mut t = CsvTable::new("bench-timing", &["family", "regime", "sampler", "seed", "wall_seconds"]);
        for c in &self.cells {
            t.push(vec![
                c.cell.family.name().into(),
                c.cell.regime.name().into(),
                c.cell.sampler.name().into(),
                c.cell.seed.to_string(),
                format!("{:.3}", c.wall_seconds),
            ]);
        }
        t
    }

    /// Per regime and sampler statistics over successful cells, in first-seen order.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut keys: Vec<(ScanRegime, SamplerKind)> = Vec::new();
        for c in &self.cells {
            let k = (c.cell.regime, c.cell.sampler);
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        keys.into_iter()
            .map(|(regime, sampler)| {
                let group: Vec<&CellResult> = self
                    .cells
                    .iter()
                    .filter(|c| c.cell.regime == regime && c.cell.sampler == sampler)
                    .collect();
                let ok: Vec<Metrics> = group.iter().filter_map(|c| c.metrics.as_ref().ok().copied()).collect();
                let (cd_mean, cd_std) = mean_std(&ok.iter().map(|m| m.chamfer_distance).collect::<Vec<_>>());
                let (ca_mean, ca_std) = mean_std(&ok.iter().map(|m| m.chamfer_angle).collect::<Vec<_>>());
                SummaryRow {
                    regime,
                    sampler,
                    cells: group.len(),
                    failures: group.len() - ok.len(),
                    cd_mean,
                    cd_std,
                    ca_mean,
                    ca_std,
                }
            })
            .collect()
    }

    pub fn mean_cd(&self, regime: ScanRegime, sampler: SamplerKind) -> Option<f64> {
        self.summary()
            .into_iter()
            .find(|r| r.regime == regime && r.sampler == sampler)
            .map(|r| r.cd_mean)
    }

    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary {
            cells: usize,
            failures: usize,
            groups: Vec<SummaryRow>,
        }
        let s = Summary {
            cells: self.cells.len(),
            failures: self.failures(),
            groups: self.summary(),
        };
        // NaN means (all cells failed) serialize as null.
        serde_json::to_string_pretty(&s).expect("summary serializes") + "\n"
    }

    /// Overlay of the scan, the ground truth, and the reconstruction.
    pub fn overlay_svg(&self, suite: &BenchSuite, index: usize, resolution: usize) -> Result<String> {
        let c = self.cells.get(index).ok_or(Error::InvalidArgument(format!("no cell {index}")))?;
        let (world, _) = suite
            .get(c.cell.family)
            .ok_or_else(|| Error::InvalidArgument(format!("no world for family {}", c.cell.family.name())))?;
        let mut canvas = SvgCanvas::new(400.0, 400.0, (-1.0, 1.0), (-1.0, 1.0));
        for p in extract_contour(&world.decoder, &c.truth, resolution)?.polylines {
            canvas.polyline(&p.points, p.closed, "#888888", 2.0);
        }
        if !c.final_latent.is_empty() {
            for p in extract_contour(&world.decoder, &c.final_latent, resolution)?.polylines {
                canvas.polyline(&p.points, p.closed, "#1f5fbf", 1.5);
            }
        }
        canvas.points(&c.scan, 2.0, "#c03020");
        canvas.text(
            [-0.95, 0.9],
            &format!("{} {} {} seed {}", c.cell.family.name(), c.cell.regime.name(), c.cell.sampler.name(), c.cell.seed),
        );
        Ok(canvas.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world(f: ShapeFamily) -> BenchWorld {
        BenchWorld::new(WorldConfig::default(), f).unwrap()
    }

    #[test]
    fn templates_fit_in_domain() {
        for f in ShapeFamily::ALL {
            let w = world(f);
            let template = extract_contour(&w.decoder, &w.prior.means()[0], 128).unwrap();
            assert_eq!(template.polylines.len(), 1, "{f:?} template is not one piece");
            for seed in 0..20 {
                let s = w.shape(seed);
                let c = extract_contour(&w.decoder, &s.latent, 128).unwrap();
                assert!(!c.is_empty());
                for p in c.polylines.iter().flat_map(|p| &p.points) {
                    assert!(p[0].abs() < 0.99 && p[1].abs() < 0.99, "{f:?} {p:?}");
                }
            }
        }
    }

    #[test]
    fn prior_mean_is_template() {
        for f in ShapeFamily::ALL {
            let w = world(f);
            assert_eq!(w.prior.means().len(), 1);
            let raw = w.decoder.whitening().to_raw(&w.prior.means()[0]);
            for (a, b) in raw.iter().zip(f.template_raw()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shape_latents_follow_the_prior() {
        let w = world(ShapeFamily::Blob);
        let var = &w.prior.variances()[0];
        let total: f64 = var.iter().sum();
        assert!((total / var.len() as f64 - 1.0).abs() < 1e-9);
        let n = 4000;
        let d = w.decoder.latent_dim();
        let mut sum = vec![0.0; d];
        let mut cross = vec![vec![0.0; d]; d];
        for seed in 0..n {
            let z = w.shape(seed).latent;
            let u: Vec<f64> = z.iter().zip(var).map(|(a, v)| a / v.sqrt()).collect();
            for i in 0..d {
                sum[i] += u[i] / n as f64;
                for j in 0..d {
                    cross[i][j] += u[i] * u[j] / n as f64;
                }
            }
        }
        for i in 0..d {
            assert!(sum[i].abs() < 0.06, "mean {i} {}", sum[i]);
            for j in 0..d {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((cross[i][j] - expect).abs() < 0.08, "moment {i},{j} {}", cross[i][j]);
            }
        }
    }

    #[test]
    fn prior_concentrates_on_few_directions() {
        let w = world(ShapeFamily::Worm);
        let var = &w.prior.variances()[0];
        assert!(var.windows(2).all(|p| p[0] >= p[1]));
        assert!(var[0] > 2.0 && var[var.len() - 1] < 0.2, "{var:?}");
    }

    #[test]
    fn permutation_count() {
        let p = permutations(5);
        assert_eq!(p.len(), 120);
        let mut q = p.clone();
        q.dedup();
        assert_eq!(q.len(), 120);
    }

    #[test]
    fn alignment_recovers_template_order() {
        let w = world(ShapeFamily::Tripod);
        let raw = ShapeFamily::Tripod.template_raw();
        let mut shuffled = Vec::new();
        for s in [3, 0, 4, 1, 2] {
            shuffled.extend_from_slice(&raw[3 * s..3 * s + 3]);
        }
        let z = w.decoder.whitening().to_latent(&shuffled);
        for a in w.align_to_template(&z) {
            assert!(a.abs() < 1e-9);
        }
    }

    fn unit_disk() -> (DiskDecoder, Vec<f64>) {
        let dec = DiskDecoder::unwhitened(1, DEFAULT_TAU).unwrap();
        let z = dec.latent_from_disks(&[([0.1, -0.05], 0.4)]).unwrap().into_vec();
        (dec, z)
    }

    #[test]
    fn noiseless_scan_hits_boundary() {
        let (dec, z) = unit_disk();
        let spec = ScanSpec {
            sensors: vec![[2.0, 0.0], [0.0, 2.0], [-2.0, 0.0], [0.0, -2.0]],
            rays_per_sensor: 40,
            fan_half_angle: 0.45,
            noise: 0.0,
            cut: None,
        };
        let cloud = simulate_scan(&dec, &z, &spec, &mut SampleRng::seed_from_u64(0)).unwrap();
        assert!(cloud.len() > 50);
        for p in cloud.points() {
            assert!(dec.decode(&z, *p).unwrap().abs() <= 1e-6);
        }
    }

    #[test]
    fn single_sensor_sees_one_side() {
        let (dec, z) = unit_disk();
        let spec = ScanSpec {
            sensors: vec![[2.0, 0.0]],
            rays_per_sensor: 200,
            fan_half_angle: 0.45,
            noise: 0.0,
            cut: None,
        };
        let cloud = simulate_scan(&dec, &z, &spec, &mut SampleRng::seed_from_u64(0)).unwrap();
        assert!(!cloud.is_empty());
        // Every hit faces the sensor.
        for p in cloud.points() {
            assert!(p[0] > 0.1);
        }
    }

    #[test]
    fn scan_is_deterministic() {
        let w = world(ShapeFamily::Worm);
        let s = w.shape(1);
        let a = scan_shape(&w, &s, ScanRegime::Incomplete, &mut SampleRng::seed_from_u64(4)).unwrap();
        let b = scan_shape(&w, &s, ScanRegime::Incomplete, &mut SampleRng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cut_keep_rate() {
        let cut = CutSpec {
            normal: [1.0, 0.0],
            offset: 0.0,
            decay: 0.1,
        };
        let cloud = PointCloud2::new(vec![[0.1, 0.0]; 100_000]).unwrap();
        let kept = apply_cut(&cloud, &cut, &mut SampleRng::seed_from_u64(2)).unwrap();
        let rate = kept.len() as f64 / 1e5;
        assert!((rate - (-1f64).exp()).abs() < 0.01, "{rate}");

        let neg = PointCloud2::new(vec![[-0.3, 0.2], [-0.01, 0.9]]).unwrap();
        assert_eq!(apply_cut(&neg, &cut, &mut SampleRng::seed_from_u64(2)).unwrap(), neg);
        let far = PointCloud2::new(vec![[0.9, 0.0]; 1000]).unwrap();
        assert!(apply_cut(&far, &cut, &mut SampleRng::seed_from_u64(2)).unwrap().len() <= 1);
    }

    #[test]
    fn empty_manifest_rejected() {
        let suite = BenchSuite::analytic(&WorldConfig::default(), &[ShapeFamily::Worm]).unwrap();
        let m = BenchManifest {
            seeds: Vec::new(),
            ..BenchManifest::default()
        };
        assert!(run_experiment(&suite, &m).is_err());
        // Families without a world are rejected up front.
        assert!(run_experiment(&suite, &BenchManifest::default()).is_err());
    }

    #[test]
    fn mean_std_values() {
        assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 2f64.sqrt()));
        assert_eq!(mean_std(&[5.0]), (5.0, 0.0));
    }
}
