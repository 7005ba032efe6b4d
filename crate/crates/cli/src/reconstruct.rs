//! `reconstruct`: scan one procedural shape and sample a reconstruction.

use std::path::PathBuf;

use ggl_core::bench::{
    run_cell_traced, BenchManifest, BenchReport, BenchSuite, Cell, SamplerKind, ScanRegime, ShapeFamily, WorldConfig,
};
use ggl_core::contour::{contour_csv, contour_normals, extract_contour};
use ggl_core::guidance::GuidanceConfig;
use ggl_core::io::CsvTable;
use ggl_core::samplers::{DapsConfig, DpsConfig, UpdateRule};
use serde::{Deserialize, Serialize};

use crate::config;
use crate::output::OutDir;
use crate::{CliResult, Common, Failure};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconstructFile {
    pub out: PathBuf,
    /// Selects the ground-truth shape, the scan and the sampler noise.
    pub seed: u64,
    pub family: ShapeFamily,
    pub regime: ScanRegime,
    pub sampler: SamplerKind,
    pub record_every: usize,
    pub world: WorldConfig,
    pub guidance: GuidanceConfig,
    pub dps: DpsConfig,
    pub daps: DapsConfig,
    pub gg_update: UpdateRule,
    pub contour_resolution: usize,
    pub metric_points: usize,
}

impl Default for ReconstructFile {
    fn default() -> Self {
        let m = BenchManifest::default();
        Self {
            out: PathBuf::from("out/reconstruct"),
            seed: 0,
            family: ShapeFamily::Tripod,
            regime: ScanRegime::Sparse,
            sampler: SamplerKind::Gg,
            record_every: 10,
            world: WorldConfig::default(),
            guidance: m.guidance,
            dps: m.dps,
            daps: m.daps,
            gg_update: m.gg_update,
            contour_resolution: m.contour_resolution,
            metric_points: m.metric_points,
        }
    }
}

#[derive(Debug, Serialize)]
struct MetricsJson<'a> {
    family: &'a str,
    regime: &'a str,
    sampler: &'a str,
    seed: u64,
    chamfer_distance: f64,
    chamfer_angle: f64,
    final_loss: f64,
    scan_points: usize,
    truth: &'a [f64],
    init: &'a [f64],
    final_latent: &'a [f64],
}

pub fn run(common: &Common) -> CliResult<()> {
    let mut file: ReconstructFile = config::load(common)?;
    if let Some(s) = &common.sampler {
        file.sampler = SamplerKind::parse(s)?;
    }
    if let Some(seed) = common.seed {
        file.seed = seed;
    }
    let manifest = BenchManifest {
        families: vec![file.family],
        regimes: vec![file.regime],
        samplers: vec![file.sampler],
        seeds: vec![file.seed],
        guidance: file.guidance.clone(),
        dps: file.dps.clone(),
        daps: file.daps.clone(),
        contour_resolution: file.contour_resolution,
        metric_points: file.metric_points,
        gg_update: file.gg_update,
    };
    manifest.validate()?;
    if common.stop_after_validation() {
        return Ok(());
    }
    if common.analytic_only {
        // Reconstruction always scores with the analytic prior.
        println!("note: reconstruct uses the analytic prior score");
    }
    let out = OutDir::create(config::out_dir(common, &file.out))?;
    let suite = BenchSuite::analytic(&file.world, &[file.family])?;
    let cell = Cell {
        family: file.family,
        regime: file.regime,
        sampler: file.sampler,
        seed: file.seed,
    };
    let (result, trace) = run_cell_traced(&suite, &manifest, cell, file.record_every.max(1));

    let mut scan = CsvTable::new("scan", &["x", "y"]);
    for p in &result.scan {
        scan.push_reals(p);
    }
    out.csv("scan.csv", &scan)?;
    if let Some(t) = &trace {
        out.csv("trace.csv", &t.to_csv())?;
    }
    let report = BenchReport {
        cells: vec![result.clone()],
    };
    out.text("overlay.svg", &report.overlay_svg(&suite, 0, file.contour_resolution)?)?;

    let metrics = match &result.metrics {
        Ok(m) => *m,
        Err(e) => {
            let e: Failure = e.clone().into();
            return Err(e);
        }
    };
    let (world, _) = &suite.worlds[0];
    let contour = extract_contour(&world.decoder, &result.final_latent, file.contour_resolution)?;
    let normals = contour_normals(&world.decoder, &result.final_latent, &contour)?;
    out.csv("contour.csv", &contour_csv(&contour, &normals))?;
    out.json(
        "metrics.json",
        &MetricsJson {
            family: file.family.name(),
            regime: file.regime.name(),
            sampler: file.sampler.name(),
            seed: file.seed,
            chamfer_distance: metrics.chamfer_distance,
            chamfer_angle: metrics.chamfer_angle,
            final_loss: result.final_loss,
            scan_points: result.scan.len(),
            truth: &result.truth,
            init: &result.init,
            final_latent: &result.final_latent,
        },
    )?;
    println!(
        "{} {} {} seed {}: CD {:.3}  CA {:.2} deg",
        file.family.name(),
        file.regime.name(),
        file.sampler.name(),
        file.seed,
        metrics.chamfer_distance,
        metrics.chamfer_angle
    );
    println!("wrote {}", out.root().display());
    Ok(())
}
