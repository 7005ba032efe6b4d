//! `train-score`: fit a noise predictor to samples of a declared prior.

use std::path::{Path, PathBuf};

use ggl_core::bench::{BenchWorld, ShapeFamily, WorldConfig};
use ggl_core::io::{fmt_real, CsvTable};
use ggl_core::score::{dsm_loss, train_score_model, DsmSample, TrainReport};
use ggl_core::{GmmPrior, NoisePredictor, SampleRng};
use serde::{Deserialize, Serialize};

use crate::config::{self, TrainSection};
use crate::output::OutDir;
use crate::{CliResult, Common, Failure};

const INIT_CHECK_DRAWS: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    /// Two equal modes at `+-mode`.
    Bimodal { mode: f64, variance: f64 },
    /// The latent prior of a procedural shape family.
    Family {
        family: ShapeFamily,
        #[serde(default)]
        world: WorldConfig,
    },
    /// Explicit diagonal mixture.
    Gmm {
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        variances: Vec<Vec<f64>>,
    },
}

impl PriorSpec {
    pub fn build(&self) -> CliResult<GmmPrior> {
        Ok(match self {
            PriorSpec::Bimodal { mode, variance } => GmmPrior::symmetric_bimodal_1d(*mode, *variance)?,
            PriorSpec::Family { family, world } => {
                let cfg = WorldConfig {
                    encoder_training_shapes: 0,
                    ..world.clone()
                };
                BenchWorld::new(cfg, *family)?.prior
            }
            PriorSpec::Gmm {
                weights,
                means,
                variances,
            } => GmmPrior::new(weights.clone(), means.clone(), variances.clone())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainFile {
    pub seed: u64,
    pub out: PathBuf,
    /// Standardize the prior to zero mean and unit variance per coordinate.
    pub whiten: bool,
    pub prior: PriorSpec,
    pub train: TrainSection,
}

impl Default for TrainFile {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out/train-score"),
            whiten: true,
            prior: PriorSpec::Bimodal {
                mode: 1.0,
                variance: 0.04,
            },
            train: TrainSection::default(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TrainSummary {
    dim: usize,
    samples: usize,
    steps: usize,
    /// Steps including any run this one resumed from.
    total_steps: usize,
    resumed: bool,
    heldout_initial: f64,
    heldout_final: f64,
}

/// Train on `n` draws of `prior`; shared with `toy1d`.
pub fn fit(prior: &GmmPrior, section: &TrainSection, seed: u64, init: Option<NoisePredictor>) -> CliResult<TrainReport> {
    let cfg = section.to_config(seed)?;
    let mut rng = SampleRng::fork_from(seed, 0x7EA1);
    let samples: Vec<Vec<f64>> = (0..section.samples).map(|_| prior.sample(&mut rng)).collect();
    Ok(train_score_model(&samples, &cfg, init)?)
}

pub fn loss_csv(report: &TrainReport, offset: usize) -> CsvTable {
    let mut t = CsvTable::new("loss-curve", &["step", "loss"]);
    for (step, loss) in &report.loss_curve {
        t.push(vec![(step + offset).to_string(), fmt_real(*loss)]);
    }
    t
}

pub fn load_model(path: &Path) -> CliResult<NoisePredictor> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    NoisePredictor::from_text(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

/// Steps already spent on a saved model, from the report next to it.
fn previous_steps(model: &Path) -> usize {
    let report = model.with_file_name("report.json");
    std::fs::read_to_string(report)
        .ok()
        .and_then(|s| serde_json::from_str::<TrainSummary>(&s).ok())
        .map_or(0, |r| r.total_steps)
}

pub fn run(common: &Common, resume: Option<&Path>) -> CliResult<()> {
    config::reject_sampler(common, "train-score")?;
    let file: TrainFile = config::load(common)?;
    let seed = common.seed.unwrap_or(file.seed);
    let mut prior = file.prior.build()?;
    if file.whiten {
        prior = prior.whitened();
    }
    file.train.to_config(seed)?;
    if common.stop_after_validation() {
        return Ok(());
    }
    let (init, offset) = match resume {
        Some(p) => (Some(load_model(p)?), previous_steps(p)),
        None => (None, 0),
    };
    let out = OutDir::create(config::out_dir(common, &file.out))?;
    if init.is_none() {
        // Same construction as the training run, so this is the model it starts from.
        let mut rng = SampleRng::seed_from_u64(seed);
        let fresh = NoisePredictor::new(prior.dim(), &file.train.hidden, &mut rng)?;
        let mut draws = SampleRng::fork_from(seed, 0x1417);
        let batch: Vec<DsmSample> = (0..INIT_CHECK_DRAWS)
            .map(|_| DsmSample::draw(prior.sample(&mut draws), &mut draws))
            .collect();
        println!("init loss ({INIT_CHECK_DRAWS} fresh draws): {:.4}", dsm_loss(&fresh, &batch)?);
    }
    let report = fit(&prior, &file.train, seed, init)?;
    println!("init loss (held-out): {:.4}", report.heldout_initial);
    println!("final loss (held-out): {:.4}", report.heldout_final);

    out.text("model.txt", &report.model.to_text())?;
    out.text("prior.txt", &prior.to_text())?;
    out.csv("loss.csv", &loss_csv(&report, offset))?;
    out.json(
        "report.json",
        &TrainSummary {
            dim: prior.dim(),
            samples: file.train.samples,
            steps: file.train.steps,
            total_steps: offset + file.train.steps,
            resumed: resume.is_some(),
            heldout_initial: report.heldout_initial,
            heldout_final: report.heldout_final,
        },
    )?;
    println!("wrote {}", out.root().display());
    Ok(())
}
