//! Shared finite-difference checks. Each `check_*` builds a random instance
//! from `seed` and returns the worst relative error between the analytic and
//! central-difference gradients, or `None` when the instance lands on a
//! declared non-smooth locus.

#![allow(dead_code)]

use ggl_core::bench::{BenchWorld, ShapeFamily, WorldConfig};
use ggl_core::decoder::{DiskDecoder, DEFAULT_DISKS};
use ggl_core::guidance::{eikonal_loss, geometric_loss, map_objective, siren_loss, surface_loss, GuidanceConfig};
use ggl_core::smallnet::{Activation, Mlp};
use ggl_core::{PointCloud2, SampleRng, Vec2};

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-5;

/// Points closer than this to the zero level are on the L1 kink.
const KINK_MARGIN: f64 = 1e-4;

/// Samples where `|grad_x D|` is this small sit on the eikonal kink.
const GRAD_NORM_MARGIN: f64 = 1e-3;

/// Componentwise relative error. The denominator is floored at 1e-3 of the
/// largest entry and at 1e-9 absolute, so entries that are pure round-off
/// (about `eps |f| / h`) do not dominate.
pub fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = analytic
        .iter()
        .chain(numeric)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-6);
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1e-3 * scale))
        .fold(0.0, f64::max)
}

/// Fourth-order central difference. The two-point rule's `h^2` truncation
/// term alone reaches 1e-5 relative on sharp soft-min blends.
pub fn central_diff<F: FnMut(&[f64]) -> f64>(mut f: F, at: &[f64]) -> Vec<f64> {
    let h = FD_STEP;
    (0..at.len())
        .map(|i| {
            let mut x = at.to_vec();
            let mut eval = |d: f64| {
                x[i] = at[i] + d;
                f(&x)
            };
            (eval(-2.0 * h) - 8.0 * eval(-h) + 8.0 * eval(h) - eval(2.0 * h)) / (12.0 * h)
        })
        .collect()
}

/// Either a raw-parameter decoder with random disks and temperature, or a
/// benchmark world decoder (whitened and rotated) at a prior-scale latent.
pub fn random_decoder(rng: &mut SampleRng) -> (DiskDecoder, Vec<f64>) {
    if rng.uniform() < 0.5 {
        let k = 1 + rng.index(DEFAULT_DISKS);
        let tau = rng.uniform_range(0.01, 0.1);
        let dec = DiskDecoder::unwhitened(k, tau).unwrap();
        let z = (0..3 * k)
            .map(|j| if j % 3 == 2 { rng.uniform_range(-2.0, 0.0) } else { rng.uniform_range(-0.6, 0.6) })
            .collect();
        (dec, z)
    } else {
        let family = ShapeFamily::ALL[rng.index(ShapeFamily::ALL.len())];
        let config = WorldConfig {
            encoder_training_shapes: 0,
            ..WorldConfig::default()
        };
        let world = BenchWorld::new(config, family).unwrap();
        let z = world.prior.sample(rng);
        (world.decoder, z)
    }
}

fn random_point(rng: &mut SampleRng) -> Vec2 {
    [rng.uniform_range(-1.0, 1.0), rng.uniform_range(-1.0, 1.0)]
}

/// Scan-like cloud away from the zero level.
fn random_cloud(dec: &DiskDecoder, z: &[f64], rng: &mut SampleRng) -> PointCloud2 {
    let mut pts = Vec::new();
    while pts.len() < 20 {
        let x = random_point(rng);
        let d = dec.decode(z, x).unwrap();
        if d.abs() > KINK_MARGIN && d.abs() < 0.3 {
            pts.push(x);
        }
    }
    PointCloud2::new(pts).unwrap()
}

/// Replays the uniform domain draws the Monte-Carlo terms will make.
fn mc_points(rng: &SampleRng, m: usize) -> Vec<Vec2> {
    let mut r = rng.clone();
    (0..m).map(|_| random_point(&mut r)).collect()
}

fn near_kink(dec: &DiskDecoder, z: &[f64], xs: &[Vec2]) -> bool {
    xs.iter().any(|&x| dec.decode(z, x).unwrap().abs() < KINK_MARGIN)
}

pub fn check_mlp(seed: u64) -> Option<f64> {
    let mut rng = SampleRng::seed_from_u64(seed);
    let sizes = [3, 6, 5, 2];
    let mut net = Mlp::new(&sizes, Activation::Silu, &mut rng).unwrap();
    for p in net.params_mut() {
        if *p == 0.0 {
            *p = 0.3 * rng.normal();
        }
    }
    let x: Vec<f64> = (0..3).map(|_| rng.uniform_range(-2.0, 2.0)).collect();
    let ct: Vec<f64> = (0..2).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    let g = net.grad(&x, &ct).unwrap();
    let objective = |n: &Mlp, x: &[f64]| -> f64 { n.forward(x).unwrap().iter().zip(&ct).map(|(o, c)| o * c).sum() };
    let params = net.params().to_vec();
    let fd_params = central_diff(
        |p| {
            let mut n = net.clone();
            n.params_mut().copy_from_slice(p);
            objective(&n, &x)
        },
        &params,
    );
    let fd_input = central_diff(|xi| objective(&net, xi), &x);
    Some(rel_err(&g.params, &fd_params).max(rel_err(&g.input, &fd_input)))
}

pub fn check_decode_grad_x(seed: u64) -> Option<f64> {
    let mut rng = SampleRng::seed_from_u64(seed);
    let (dec, z) = random_decoder(&mut rng);
    let x = random_point(&mut rng);
    let g = dec.decode_grad_x(&z, x).unwrap();
    let fd = central_diff(|p| dec.decode(&z, [p[0], p[1]]).unwrap(), &x);
    Some(rel_err(&g, &fd))
}

pub fn check_decode_grad_z(seed: u64) -> Option<f64> {
    let mut rng = SampleRng::seed_from_u64(seed);
    let (dec, z) = random_decoder(&mut rng);
    let x = random_point(&mut rng);
    let g = dec.decode_grad_z(&z, x).unwrap();
    let fd = central_diff(|zz| dec.decode(zz, x).unwrap(), &z);
    Some(rel_err(&g, &fd))
}

pub fn check_surface(seed: u64) -> Option<f64> {
    let mut rng = SampleRng::seed_from_u64(seed);
    let (dec, z) = random_decoder(&mut rng);
    let cloud = random_cloud(&dec, &z, &mut rng);
    let g = surface_loss(&dec, &z, &cloud).unwrap().1;
    let fd = central_diff(|zz| surface_loss(&dec, zz, &cloud).unwrap().0, &z);
    Some(rel_err(&g, &fd))
}

/// Smallest `|grad_x D|` over `xs`; the eikonal integrand is not smooth
/// where this vanishes.
pub fn min_grad_norm(dec: &DiskDecoder, z: &[f64], xs: &[Vec2]) -> f64 {
    xs.iter()
        .map(|&x| {
            let g = dec.decode_grad_x(z, x).unwrap();
            g[0].hypot(g[1])
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn check_eikonal(seed: u64) -> Option<f64> {
    let mut rng = SampleRng::seed_from_u64(seed);
    let (dec, z) = random_decoder(&mut rng);
    let mc = SampleRng::seed_from_u64(seed ^ 0xE1C0);
    if min_grad_norm(&dec, &z, &mc_points(&mc, 64)) < GRAD_NORM_MARGIN {
        return None;
    }
    let g = eikonal_loss(&dec, &z, &mut mc.clone(), 64).unwrap().1;
    let fd = central_diff(|zz| eikonal_loss(&dec, zz, &mut mc.clone(), 64).unwrap().0, &z);
    Some(rel_err(&g, &fd))
}

pub fn check_siren(seed: u64) -> Option<f64> {
    let mut rng = SampleRng::seed_from_u64(seed);
    let (dec, z) = random_decoder(&mut rng);
    let mc = SampleRng::seed_from_u64(seed ^ 0x5123);
    if near_kink(&dec, &z, &mc_points(&mc, 64)) {
        return None;
    }
    let alpha = 20.0;
    let g = siren_loss(&dec, &z, &mut mc.clone(), 64, alpha).unwrap().1;
    let fd = central_diff(|zz| siren_loss(&dec, zz, &mut mc.clone(), 64, alpha).unwrap().0, &z);
    Some(rel_err(&g, &fd))
}

fn full_config() -> GuidanceConfig {
    GuidanceConfig {
        lambda: 0.1,
        mu: 0.5,
        alpha: 20.0,
        xi: 1e-2,
        m_eikonal: 32,
        m_siren: 32,
    }
}

/// Geometric loss with every term on. The Monte-Carlo stream draws the
/// eikonal points first, then the off-surface points.
fn geometric_case(seed: u64, map: bool) -> Option<f64> {
    let mut rng = SampleRng::seed_from_u64(seed);
    let (dec, z) = random_decoder(&mut rng);
    let cloud = random_cloud(&dec, &z, &mut rng);
    let cfg = full_config();
    let mc = SampleRng::seed_from_u64(seed ^ 0x6E0);
    let all = mc_points(&mc, cfg.m_eikonal + cfg.m_siren);
    if near_kink(&dec, &z, &all[cfg.m_eikonal..]) || min_grad_norm(&dec, &z, &all[..cfg.m_eikonal]) < GRAD_NORM_MARGIN {
        return None;
    }
    let eval = |zz: &[f64]| {
        let f = if map { map_objective } else { geometric_loss };
        f(&dec, zz, &cloud, &cfg, &mut mc.clone()).unwrap()
    };
    let g = eval(&z).grad;
    let fd = central_diff(|zz| eval(zz).value, &z);
    Some(rel_err(&g, &fd))
}

pub fn check_geometric(seed: u64) -> Option<f64> {
    geometric_case(seed, false)
}

pub fn check_map(seed: u64) -> Option<f64> {
    geometric_case(seed, true)
}

pub type Check = fn(u64) -> Option<f64>;

pub const ALL_CHECKS: [(&str, Check); 8] = [
    ("mlp_grad", check_mlp),
    ("decode_grad_x", check_decode_grad_x),
    ("decode_grad_z", check_decode_grad_z),
    ("surface_loss", check_surface),
    ("eikonal_loss", check_eikonal),
    ("siren_loss", check_siren),
    ("geometric_loss", check_geometric),
    ("map_objective", check_map),
];

/// Run `check` on seeds until `cases` instances were checked; returns the
/// worst error and the number of skipped instances.
pub fn sweep(check: Check, cases: usize) -> (f64, usize) {
    let mut worst: f64 = 0.0;
    let (mut done, mut skipped, mut seed) = (0, 0, 0u64);
    while done < cases {
        match check(seed) {
            Some(e) => {
                worst = worst.max(e);
                done += 1;
            }
            None => skipped += 1,
        }
        seed += 1;
    }
    (worst, skipped)
}
