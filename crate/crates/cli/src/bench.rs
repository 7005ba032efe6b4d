//! `bench`: the sampler comparison over shapes, regimes and seeds.

use std::path::PathBuf;

use ggl_core::bench::{run_experiment, BenchManifest, BenchSuite, SamplerKind, WorldConfig};
use serde::Deserialize;

use crate::config::{self, TrainSection};
use crate::output::OutDir;
use crate::{train, CliResult, Common, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Analytic,
    Learned,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchFile {
    pub out: PathBuf,
    pub oracle: OracleKind,
    /// Write an overlay SVG for every cell.
    pub overlays: bool,
    pub world: WorldConfig,
    pub manifest: BenchManifest,
    /// Used when `oracle = "learned"`.
    pub train: TrainSection,
}

impl Default for BenchFile {
    fn default() -> Self {
        Self {
            out: PathBuf::from("out/bench"),
            oracle: OracleKind::Analytic,
            overlays: true,
            world: WorldConfig::default(),
            manifest: BenchManifest::default(),
            train: TrainSection::default(),
        }
    }
}

pub fn run(common: &Common, seeds: Option<u64>) -> CliResult<()> {
    let mut file: BenchFile = config::load(common)?;
    let m = &mut file.manifest;
    match (common.seed, seeds) {
        (start, Some(k)) => m.seeds = (start.unwrap_or(0)..start.unwrap_or(0) + k).collect(),
        (Some(s), None) => m.seeds = vec![s],
        (None, None) => {}
    }
    if let Some(s) = &common.sampler {
        m.samplers = vec![SamplerKind::parse(s)?];
    }
    m.validate()?;
    file.train.to_config(0)?;
    if common.stop_after_validation() {
        return Ok(());
    }
    let out = OutDir::create(config::out_dir(common, &file.out))?;

    let suite = if file.oracle == OracleKind::Learned && !common.analytic_only {
        let cfg = file.train.to_config(m.seeds[0])?;
        let (suite, reports) = BenchSuite::learned(&file.world, &m.families, &cfg, file.train.samples)?;
        for ((world, _), r) in suite.worlds.iter().zip(&reports) {
            println!(
                "score model {}: held-out loss {:.4} -> {:.4}",
                world.family.name(),
                r.heldout_initial,
                r.heldout_final
            );
            out.csv(&format!("loss_{}.csv", world.family.name()), &train::loss_csv(r, 0))?;
        }
        suite
    } else {
        BenchSuite::analytic(&file.world, &m.families)?
    };

    let report = run_experiment(&suite, m)?;
    out.csv("cells.csv", &report.to_csv())?;
    out.csv("timing.csv", &report.timing_csv())?;
    out.text("summary.json", &report.summary_json())?;
    if file.overlays {
        for (i, c) in report.cells.iter().enumerate() {
            let name = format!(
                "overlay_{}_{}_{}_{}.svg",
                c.cell.family.name(),
                c.cell.regime.name(),
                c.cell.sampler.name(),
                c.cell.seed
            );
            out.text(&name, &report.overlay_svg(&suite, i, m.contour_resolution)?)?;
        }
    }

    println!("{:<11} {:<12} {:>5} {:>6} {:>8} {:>8} {:>8} {:>8}", "regime", "sampler", "cells", "failed", "cd", "cd_std", "ca", "ca_std");
    for r in report.summary() {
        println!(
            "{:<11} {:<12} {:>5} {:>6} {:>8.3} {:>8.3} {:>8.2} {:>8.2}",
            r.regime.name(),
            r.sampler.name(),
            r.cells,
            r.failures,
            r.cd_mean,
            r.cd_std,
            r.ca_mean,
            r.ca_std
        );
    }
    println!("wrote {}", out.root().display());
    let failed = report.failures();
    if failed > 0 {
        return Err(Failure::Partial(format!("{failed} of {} cells failed", report.cells.len())));
    }
    Ok(())
}
