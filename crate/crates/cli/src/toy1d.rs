//! `toy1d`: bimodal prior, sampled histograms against closed-form targets.

use std::path::PathBuf;

use ggl_core::io::{fmt_real, CsvTable};
use ggl_core::reference::{histogram, ks_statistic, prior_density, tv_distance, Density1D};
use ggl_core::svg::SvgCanvas;
use ggl_core::toy::{gg_samples, half_denoising_samples, langevin_samples, toy_target, ToyConfig, ToyWeight};
use ggl_core::ScoreOracle;
use serde::{Deserialize, Serialize};

use crate::config::{self, TrainSection};
use crate::output::OutDir;
use crate::{train, CliResult, Common};

const PANEL: f64 = 320.0;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyFile {
    pub out: PathBuf,
    pub analytic_only: bool,
    /// Load a trained model instead of training one.
    pub model: Option<PathBuf>,
    pub toy: ToyConfig,
    pub train: TrainSection,
}

impl Default for ToyFile {
    fn default() -> Self {
        Self {
            out: PathBuf::from("out/toy1d"),
            analytic_only: false,
            model: None,
            toy: ToyConfig::default(),
            train: TrainSection::default(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Row {
    oracle: &'static str,
    method: &'static str,
    target: &'static str,
    samples: usize,
    tv: f64,
    ks: f64,
}

fn histogram_csv(samples: &[f64], target: &Density1D, bins: usize) -> CsvTable {
    let (lo, hi) = (target.lower(), target.upper());
    let (emp, _) = histogram(samples, lo, hi, bins);
    let masses = target.bin_masses(bins);
    let w = (hi - lo) / bins as f64;
    let mut t = CsvTable::new("histogram", &["left", "right", "empirical", "target"]);
    for k in 0..bins {
        let l = lo + k as f64 * w;
        t.push_reals(&[l, l + w, emp[k], masses[k]]);
    }
    t
}

/// Histogram bars as densities with the target curve on top.
fn panel(samples: &[f64], target: &Density1D, bins: usize, title: &str) -> String {
    let (lo, hi) = (target.lower(), target.upper());
    let (emp, _) = histogram(samples, lo, hi, bins);
    let w = (hi - lo) / bins as f64;
    let curve: Vec<[f64; 2]> = (0..=400)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / 400.0;
            [x, target.pdf(x)]
        })
        .collect();
    let top = emp
        .iter()
        .map(|m| m / w)
        .chain(curve.iter().map(|p| p[1]))
        .fold(0.0, f64::max)
        * 1.15;
    let mut c = SvgCanvas::new(PANEL, PANEL, (lo, hi), (0.0, top));
    let bars: Vec<(f64, f64, f64)> = emp
        .iter()
        .enumerate()
        .map(|(k, m)| (lo + k as f64 * w, lo + (k + 1) as f64 * w, m / w))
        .collect();
    c.bars(&bars, "#7fa7d9");
    c.polyline(&curve, false, "#c03020", 1.5);
    c.text([lo + 0.03 * (hi - lo), 0.93 * top], title);
    c.render()
}

/// Lay out rendered panels on a grid of `cols` columns.
fn grid(panels: &[String], cols: usize) -> String {
    let rows = panels.len().div_ceil(cols);
    let (w, h) = (PANEL * cols as f64, PANEL * rows as f64);
    let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n");
    for (i, p) in panels.iter().enumerate() {
        let (x, y) = (PANEL * (i % cols) as f64, PANEL * (i / cols) as f64);
        s.push_str(&p.replacen("<svg ", &format!("<svg x=\"{x}\" y=\"{y}\" "), 1));
    }
    s.push_str("</svg>\n");
    s
}

pub fn run(common: &Common) -> CliResult<()> {
    config::reject_sampler(common, "toy1d")?;
    let mut file: ToyFile = config::load(common)?;
    if let Some(seed) = common.seed {
        file.toy.seed = seed;
    }
    file.toy.validate()?;
    file.train.to_config(file.toy.seed)?;
    if common.stop_after_validation() {
        return Ok(());
    }
    let cfg = &file.toy;
    let out = OutDir::create(config::out_dir(common, &file.out))?;
    let prior = cfg.prior()?;

    let mut oracles = vec![("analytic", ScoreOracle::AnalyticGmm(prior.clone()))];
    if !(file.analytic_only || common.analytic_only) {
        let model = match &file.model {
            Some(p) => train::load_model(p)?,
            None => {
                let report = train::fit(&prior, &file.train, cfg.seed, None)?;
                println!(
                    "score model: held-out loss {:.4} -> {:.4}",
                    report.heldout_initial, report.heldout_final
                );
                out.csv("loss.csv", &train::loss_csv(&report, 0))?;
                report.model
            }
        };
        out.text("model.txt", &model.to_text())?;
        oracles.push(("learned", ScoreOracle::Learned(model)));
    }

    let prior_target = prior_density(&prior)?;
    out.csv("density_prior.csv", &prior_target.to_csv(501))?;
    let weights = [ToyWeight::Quadratic, ToyWeight::Abs];
    let mut targets = Vec::new();
    for w in weights {
        let t = toy_target(&prior, w, cfg.eta, cfg.mu)?;
        out.csv(&format!("density_{}.csv", w.name()), &t.to_csv(501))?;
        targets.push(t);
    }

    let mut rows = Vec::new();
    let mut figure = Vec::new();
    let mut record = |oracle: &'static str, method: &'static str, target_name: &'static str, samples: &[f64], target: &Density1D| -> CliResult<String> {
        let tv = tv_distance(samples, target, cfg.bins)?;
        let ks = ks_statistic(samples, target)?;
        println!("{oracle:>8} {method:<15} {target_name:<9} tv={tv:.4} ks={ks:.4}");
        let stem = format!("{oracle}_{method}_{target_name}");
        out.csv(&format!("hist_{stem}.csv"), &histogram_csv(samples, target, cfg.bins))?;
        let svg = panel(samples, target, cfg.bins, &format!("{oracle} {method} ({target_name}) TV {tv:.3}"));
        out.text(&format!("hist_{stem}.svg"), &svg)?;
        rows.push(Row {
            oracle,
            method,
            target: target_name,
            samples: samples.len(),
            tv,
            ks,
        });
        Ok(svg)
    };

    for (name, oracle) in &oracles {
        if matches!(oracle, ScoreOracle::AnalyticGmm(_)) {
            let s = langevin_samples(oracle, cfg)?;
            record(name, "langevin", "prior", &s, &prior_target)?;
        }
        let s = half_denoising_samples(oracle, cfg)?;
        record(name, "half_denoising", "prior", &s, &prior_target)?;
        for (w, target) in weights.iter().zip(&targets) {
            let s = gg_samples(oracle, target, Some((*w, cfg.eta, cfg.mu)), cfg)?;
            figure.push(record(name, "gg", w.name(), &s, target)?);
        }
    }
    out.text("figure.svg", &grid(&figure, 2))?;
    out.json("summary.json", &rows)?;

    let mut samples_note = CsvTable::new("toy-config", &["key", "value"]);
    for (k, v) in [("eta", cfg.eta), ("mu", cfg.mu), ("sigma", cfg.sigma), ("mode", cfg.mode)] {
        samples_note.push(vec![k.to_string(), fmt_real(v)]);
    }
    out.csv("config.csv", &samples_note)?;
    println!("wrote {}", out.root().display());
    Ok(())
}
