//! Score oracles for the latent prior.
//!
//! Two oracles are provided: an analytic diagonal Gaussian mixture whose
//! noisy-data score is available in closed form (each component convolved
//! with `N(0, sigma^2 I)` simply inflates its variance), and a learned noise
//! predictor with the EDM parametrization
//!
//! ```text
//! eps_hat(z, sigma) = phi(z / c, ln sigma) / c + sigma * z / c^2,   c = sqrt(1 + sigma^2)
//! s_sigma(z)        = -eps_hat(z, sigma) / sigma
//! ```
//!
//! trained with the weighted denoising objective `E[(1 + sigma^2) |eps_hat(z + sigma eps) - eps|^2]`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{ensure_len, ensure_positive, Error, Result};
use crate::rng::SampleRng;
use crate::smallnet::{Activation, AdamState, ForwardCache, Mlp};
use crate::schedule::AdamParams;

const GMM_TAG: &str = "ggl-gmm";
const PREDICTOR_TAG: &str = "ggl-noise-predictor";
const FORMAT_VERSION: u32 = 1;

/// Location and scale of the noise-level distribution used in training.
pub const LOG_SIGMA_MEAN: f64 = -1.2;
pub const LOG_SIGMA_STD: f64 = 1.2;

/// Anything that can report the noisy-data score of the prior.
pub trait Score {
    fn dim(&self) -> usize;

    /// `grad_z log (p * N(0, sigma^2 I))(z)`.
    fn noisy_score(&self, z: &[f64], sigma: f64) -> Result<Vec<f64>>;

    /// Noise-free score `grad_z log p(z)`.
    fn true_score(&self, _z: &[f64]) -> Result<Vec<f64>> {
        Err(Error::Unsupported("true score is only available for analytic priors"))
    }

    /// Vector-Jacobian product `J^T g` of the one-step denoiser
    /// `z + sigma^2 s_sigma(z)`.
    fn denoiser_vjp(&self, _z: &[f64], _sigma: f64, _g: &[f64]) -> Result<Vec<f64>> {
        Err(Error::Unsupported("denoiser Jacobian not available"))
    }
}

/// Diagonal-covariance Gaussian mixture prior.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmPrior {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
}

impl GmmPrior {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, variances: Vec<Vec<f64>>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty("mixture components"));
        }
        ensure_len(weights.len(), means.len())?;
        ensure_len(weights.len(), variances.len())?;
        let d = means[0].len();
        if d == 0 {
            return Err(Error::Empty("mixture dimension"));
        }
        for (m, v) in means.iter().zip(&variances) {
            ensure_len(d, m.len())?;
            ensure_len(d, v.len())?;
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument("non-finite mean".into()));
            }
            if v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return Err(Error::InvalidArgument("variances must be positive".into()));
            }
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidArgument("weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("weights sum to {total}, not 1")));
        }
        Ok(Self {
            weights,
            means,
            variances,
        })
    }

    /// Isotropic standard normal in `d` dimensions.
    pub fn standard_normal(d: usize) -> Self {
        Self::new(vec![1.0], vec![vec![0.0; d]], vec![vec![1.0; d]]).expect("valid prior")
    }

    /// Two equal-weight modes at `+-mean` with shared per-dimension variance (1D).
    pub fn symmetric_bimodal_1d(mean: f64, variance: f64) -> Result<Self> {
        Self::new(
            vec![0.5, 0.5],
            vec![vec![-mean], vec![mean]],
            vec![vec![variance], vec![variance]],
        )
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn variances(&self) -> &[Vec<f64>] {
        &self.variances
    }

    /// Mixture mean and per-dimension variance.
    pub fn moments(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        let mut mean = vec![0.0; d];
        let mut second = vec![0.0; d];
        for ((w, m), v) in self.weights.iter().zip(&self.means).zip(&self.variances) {
            for j in 0..d {
                mean[j] += w * m[j];
                second[j] += w * (v[j] + m[j] * m[j]);
            }
        }
        let var = second.iter().zip(&mean).map(|(s, m)| s - m * m).collect();
        (mean, var)
    }

    /// Affinely standardized copy: zero mean and unit variance per dimension.
    pub fn whitened(&self) -> Self {
        let (mean, var) = self.moments();
        let std: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();
        let means = self
            .means
            .iter()
            .map(|m| m.iter().zip(&mean).zip(&std).map(|((x, c), s)| (x - c) / s).collect())
            .collect();
        let variances = self
            .variances
            .iter()
            .map(|v| v.iter().zip(&std).map(|(x, s)| x / (s * s)).collect())
            .collect();
        Self {
            weights: self.weights.clone(),
            means,
            variances,
        }
    }

    /// Per-component log densities of the sigma-convolved mixture, including
    /// the log weight.
    fn component_log_terms(&self, z: &[f64], sigma2: f64) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.variances)
            .map(|((w, m), v)| {
                let mut acc = w.ln();
                for j in 0..z.len() {
                    let s = v[j] + sigma2;
                    let r = z[j] - m[j];
                    acc -= 0.5 * ((2.0 * PI * s).ln() + r * r / s);
                }
                acc
            })
            .collect()
    }

    fn responsibilities(&self, z: &[f64], sigma2: f64) -> Vec<f64> {
        let logs = self.component_log_terms(z, sigma2);
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut r: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = r.iter().sum();
        r.iter_mut().for_each(|x| *x /= total);
        r
    }

    /// `log (p * N(0, sigma^2 I))(z)`; `sigma = 0` gives the prior itself.
    pub fn log_density(&self, z: &[f64], sigma: f64) -> Result<f64> {
        ensure_len(self.dim(), z.len())?;
        let logs = self.component_log_terms(z, sigma * sigma);
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln())
    }

    pub fn density(&self, z: &[f64], sigma: f64) -> Result<f64> {
        self.log_density(z, sigma).map(f64::exp)
    }

    fn score_inner(&self, z: &[f64], sigma2: f64) -> Vec<f64> {
        let r = self.responsibilities(z, sigma2);
        let mut out = vec![0.0; z.len()];
        for ((ri, m), v) in r.iter().zip(&self.means).zip(&self.variances) {
            if *ri == 0.0 {
                continue;
            }
            for j in 0..z.len() {
                out[j] -= ri * (z[j] - m[j]) / (v[j] + sigma2);
            }
        }
        out
    }

    /// Hessian-vector product of the sigma-convolved log density.
    fn hessian_vec(&self, z: &[f64], sigma2: f64, g: &[f64]) -> Vec<f64> {
        let d = z.len();
        let r = self.responsibilities(z, sigma2);
        let mut mean_grad = vec![0.0; d];
        let mut out = vec![0.0; d];
        for ((ri, m), v) in r.iter().zip(&self.means).zip(&self.variances) {
            if *ri == 0.0 {
                continue;
            }
            let comp: Vec<f64> = (0..d).map(|j| -(z[j] - m[j]) / (v[j] + sigma2)).collect();
            let proj: f64 = comp.iter().zip(g).map(|(a, b)| a * b).sum();
            for j in 0..d {
                out[j] += ri * (comp[j] * proj - g[j] / (v[j] + sigma2));
                mean_grad[j] += ri * comp[j];
            }
        }
        let proj: f64 = mean_grad.iter().zip(g).map(|(a, b)| a * b).sum();
        for j in 0..d {
            out[j] -= mean_grad[j] * proj;
        }
        out
    }

    /// Draw a component by weight, then a Gaussian sample from it.
    pub fn sample(&self, rng: &mut SampleRng) -> Vec<f64> {
        let u = rng.uniform();
        let mut acc = 0.0;
        let mut k = self.components() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                k = i;
                break;
            }
        }
        self.means[k]
            .iter()
            .zip(&self.variances[k])
            .map(|(m, v)| m + v.sqrt() * rng.normal())
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{GMM_TAG} {FORMAT_VERSION}");
        let _ = writeln!(s, "dim {}", self.dim());
        let _ = writeln!(s, "components {}", self.components());
        for ((w, m), v) in self.weights.iter().zip(&self.means).zip(&self.variances) {
            let mut line = format!("{w:.16e}");
            for x in m.iter().chain(v) {
                let _ = write!(line, " {x:.16e}");
            }
            let _ = writeln!(s, "{line}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        if header.trim() != format!("{GMM_TAG} {FORMAT_VERSION}") {
            return Err(Error::Format(format!("bad mixture header {header:?}")));
        }
        let field = |line: Option<&str>, key: &str| -> Result<usize> {
            line.and_then(|l| l.strip_prefix(key))
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::Format(format!("missing {key}")))
        };
        let d = field(lines.next(), "dim ")?;
        let k = field(lines.next(), "components ")?;
        let (mut weights, mut means, mut variances) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..k {
            let vals = lines
                .next()
                .ok_or_else(|| Error::Format("truncated mixture".into()))?
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| Error::Format(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != 1 + 2 * d {
                return Err(Error::Format("bad component line".into()));
            }
            weights.push(vals[0]);
            means.push(vals[1..1 + d].to_vec());
            variances.push(vals[1 + d..].to_vec());
        }
        Self::new(weights, means, variances)
    }
}

/// Closed-form noisy score of the mixture.
pub fn gmm_noisy_score(prior: &GmmPrior, sigma: f64, z: &[f64]) -> Result<Vec<f64>> {
    ensure_positive("sigma", sigma)?;
    ensure_len(prior.dim(), z.len())?;
    Ok(prior.score_inner(z, sigma * sigma))
}

/// Noise-free score of the mixture.
pub fn gmm_true_score(prior: &GmmPrior, z: &[f64]) -> Result<Vec<f64>> {
    ensure_len(prior.dim(), z.len())?;
    Ok(prior.score_inner(z, 0.0))
}

pub fn sample_prior(prior: &GmmPrior, rng: &mut SampleRng) -> Vec<f64> {
    prior.sample(rng)
}

/// Training noise level, `exp(N(-1.2, 1.2^2))`.
pub fn sample_sigma(rng: &mut SampleRng) -> f64 {
    (LOG_SIGMA_MEAN + LOG_SIGMA_STD * rng.normal()).exp()
}

/// Learned noise predictor: an MLP over `(z / c, ln sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePredictor {
    net: Mlp,
}

impl NoisePredictor {
    /// Fresh predictor with the given hidden widths; outputs zero until trained.
    pub fn new(dim: usize, hidden: &[usize], rng: &mut SampleRng) -> Result<Self> {
        let mut sizes = vec![dim + 1];
        sizes.extend_from_slice(hidden);
        sizes.push(dim);
        Ok(Self {
            net: Mlp::new(&sizes, Activation::Silu, rng)?,
        })
    }

    pub fn from_net(net: Mlp) -> Result<Self> {
        if net.input_dim() != net.output_dim() + 1 {
            return Err(Error::InvalidArgument(format!(
                "noise predictor needs input dim = output dim + 1, got {} -> {}",
                net.input_dim(),
                net.output_dim()
            )));
        }
        Ok(Self { net })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn dim(&self) -> usize {
        self.net.output_dim()
    }

    fn embed(z: &[f64], sigma: f64, c: f64) -> Vec<f64> {
        let mut input: Vec<f64> = z.iter().map(|v| v / c).collect();
        input.push(sigma.ln());
        input
    }

    pub fn to_text(&self) -> String {
        format!("{PREDICTOR_TAG} {FORMAT_VERSION}\nembedding log_sigma\n{}", self.net.to_text())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut parts = text.splitn(3, '\n');
        let header = parts.next().unwrap_or_default();
        if header.trim() != format!("{PREDICTOR_TAG} {FORMAT_VERSION}") {
            return Err(Error::Format(format!("bad predictor header {header:?}")));
        }
        if parts.next().map(str::trim) != Some("embedding log_sigma") {
            return Err(Error::Format("unknown sigma embedding".into()));
        }
        Self::from_net(Mlp::from_text(parts.next().unwrap_or_default())?)
    }
}

/// EDM-parametrized noise prediction.
pub fn edm_predict_eps(model: &NoisePredictor, z: &[f64], sigma: f64) -> Result<Vec<f64>> {
    ensure_positive("sigma", sigma)?;
    ensure_len(model.dim(), z.len())?;
    let c2 = 1.0 + sigma * sigma;
    let c = c2.sqrt();
    let phi = model.net.forward(&NoisePredictor::embed(z, sigma, c))?;
    Ok(phi.iter().zip(z).map(|(p, zi)| p / c + sigma * zi / c2).collect())
}

/// Noisy-data score from a noise estimate: `-eps / sigma`.
pub fn score_from_eps(eps: &[f64], sigma: f64) -> Result<Vec<f64>> {
    ensure_positive("sigma", sigma)?;
    Ok(eps.iter().map(|e| -e / sigma).collect())
}

/// One denoising example: clean latent, noise level and noise draw.
#[derive(Debug, Clone, PartialEq)]
pub struct DsmSample {
    pub z: Vec<f64>,
    pub sigma: f64,
    pub eps: Vec<f64>,
}

impl DsmSample {
    pub fn draw(z: Vec<f64>, rng: &mut SampleRng) -> Self {
        let sigma = sample_sigma(rng);
        let eps = rng.standard_normal(z.len());
        Self { z, sigma, eps }
    }
}

/// Weight of the denoising objective at noise level `sigma`.
pub fn dsm_weight(sigma: f64) -> f64 {
    1.0 + sigma * sigma
}

/// Mean over the batch of `w_sigma * mean_j (eps_hat_j(z + sigma eps) - eps_j)^2`.
///
/// The squared error is averaged over latent coordinates so that a freshly
/// initialized model on a whitened prior scores 1 regardless of dimension.
pub fn dsm_loss(model: &NoisePredictor, batch: &[DsmSample]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Empty("dsm batch"));
    }
    let mut total = 0.0;
    for s in batch {
        let noisy: Vec<f64> = s.z.iter().zip(&s.eps).map(|(z, e)| z + s.sigma * e).collect();
        let pred = edm_predict_eps(model, &noisy, s.sigma)?;
        let se: f64 = pred.iter().zip(&s.eps).map(|(p, e)| (p - e).powi(2)).sum::<f64>() / pred.len() as f64;
        total += dsm_weight(s.sigma) * se;
    }
    let loss = total / batch.len() as f64;
    if !loss.is_finite() {
        return Err(Error::Divergence {
            step: 0,
            reason: "non-finite denoising loss".into(),
        });
    }
    Ok(loss)
}

/// Loss and parameter gradient of [`dsm_loss`] on one batch.
fn dsm_loss_and_grad(model: &NoisePredictor, batch: &[DsmSample], grad: &mut [f64]) -> Result<f64> {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut cache = ForwardCache::default();
    let mut total = 0.0;
    let n = batch.len() as f64;
    for s in batch {
        let d = s.z.len();
        let c2 = 1.0 + s.sigma * s.sigma;
        let c = c2.sqrt();
        let noisy: Vec<f64> = s.z.iter().zip(&s.eps).map(|(z, e)| z + s.sigma * e).collect();
        let input = NoisePredictor::embed(&noisy, s.sigma, c);
        let phi = model.net.forward_cached(&input, &mut cache)?.to_vec();
        let w = dsm_weight(s.sigma);
        let mut ct = Vec::with_capacity(d);
        let mut se = 0.0;
        for j in 0..d {
            let r = phi[j] / c + s.sigma * noisy[j] / c2 - s.eps[j];
            se += r * r;
            ct.push(w * 2.0 * r / (c * d as f64 * n));
        }
        total += w * se / d as f64;
        model.net.backward_accumulate(&cache, &ct, grad)?;
    }
    Ok(total / n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub batch: usize,
    pub steps: usize,
    /// Fraction of samples held out for evaluation.
    pub holdout: f64,
    /// Record the mean training loss every this many steps.
    pub log_every: usize,
    /// Decay of the exponential moving average of the weights; the averaged
    /// weights are returned. 0 disables averaging.
    pub ema: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![32, 32, 32],
            lr: 1e-3,
            batch: 256,
            steps: 16000,
            holdout: 0.1,
            log_every: 100,
            ema: 0.999,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: NoisePredictor,
    /// `(step, mean training loss over the logging window)`.
    pub loss_curve: Vec<(usize, f64)>,
    pub heldout_initial: f64,
    pub heldout_final: f64,
}

/// Fit a noise predictor to prior samples by Adam on the denoising objective.
///
/// Starts from `init` when given (resuming); otherwise from a fresh model.
/// The learning rate follows a cosine decay to 5% of `lr` over the run.
pub fn train_score_model(
    samples: &[Vec<f64>],
    config: &TrainConfig,
    init: Option<NoisePredictor>,
) -> Result<TrainReport> {
    if samples.len() < 1000 {
        return Err(Error::InvalidArgument(format!(
            "need at least 1000 training samples, got {}",
            samples.len()
        )));
    }
    let d = samples[0].len();
    if samples.iter().any(|s| s.len() != d) {
        return Err(Error::InvalidArgument("ragged training samples".into()));
    }
    if config.batch == 0 || config.steps == 0 {
        return Err(Error::InvalidArgument("batch and steps must be positive".into()));
    }
    let mut rng = SampleRng::seed_from_u64(config.seed);
    let mut model = match init {
        Some(m) => {
            ensure_len(d, m.dim())?;
            m
        }
        None => NoisePredictor::new(d, &config.hidden, &mut rng)?,
    };

    let n_hold = ((samples.len() as f64 * config.holdout) as usize).clamp(1, samples.len() / 2);
    let (heldout, train) = samples.split_at(n_hold);
    let mut eval_rng = SampleRng::fork_from(config.seed, 0xE7A1);
    let eval_batch: Vec<DsmSample> = heldout
        .iter()
        .map(|z| DsmSample::draw(z.clone(), &mut eval_rng))
        .collect();
    let heldout_initial = dsm_loss(&model, &eval_batch)?;

    let mut adam = AdamState::new(model.net.num_params(), config.lr, AdamParams::default());
    let mut grad = vec![0.0; model.net.num_params()];
    let mut averaged = model.net.params().to_vec();
    let mut curve = Vec::new();
    let mut window = 0.0;
    let mut window_len = 0;
    for step in 0..config.steps {
        let batch: Vec<DsmSample> = (0..config.batch)
            .map(|_| DsmSample::draw(train[rng.index(train.len())].clone(), &mut rng))
            .collect();
        let loss = dsm_loss_and_grad(&model, &batch, &mut grad)?;
        if !loss.is_finite() {
            return Err(Error::Divergence {
                step,
                reason: "non-finite training loss".into(),
            });
        }
        let progress = step as f64 / config.steps as f64;
        adam.lr = config.lr * (0.05 + 0.95 * 0.5 * (1.0 + (PI * progress).cos()));
        adam.step(model.net.params_mut(), &grad).map_err(|_| Error::Divergence {
            step,
            reason: "non-finite gradient".into(),
        })?;
        // bias-corrected average so early steps are not pulled toward init
        let decay = config.ema.min((1.0 + step as f64) / (10.0 + step as f64));
        for (a, p) in averaged.iter_mut().zip(model.net.params()) {
            *a = decay * *a + (1.0 - decay) * p;
        }
        window += loss;
        window_len += 1;
        if window_len == config.log_every.max(1) || step + 1 == config.steps {
            curve.push((step + 1, window / window_len as f64));
            window = 0.0;
            window_len = 0;
        }
    }
    if config.ema > 0.0 {
        model.net.params_mut().copy_from_slice(&averaged);
    }
    let heldout_final = dsm_loss(&model, &eval_batch)?;
    Ok(TrainReport {
        model,
        loss_curve: curve,
        heldout_initial,
        heldout_final,
    })
}

/// A prior score oracle.
#[derive(Debug, Clone)]
pub enum ScoreOracle {
    AnalyticGmm(GmmPrior),
    Learned(NoisePredictor),
}

impl Score for ScoreOracle {
    fn dim(&self) -> usize {
        match self {
            ScoreOracle::AnalyticGmm(p) => p.dim(),
            ScoreOracle::Learned(m) => m.dim(),
        }
    }

    fn noisy_score(&self, z: &[f64], sigma: f64) -> Result<Vec<f64>> {
        match self {
            ScoreOracle::AnalyticGmm(p) => gmm_noisy_score(p, sigma, z),
            ScoreOracle::Learned(m) => score_from_eps(&edm_predict_eps(m, z, sigma)?, sigma),
        }
    }

    fn true_score(&self, z: &[f64]) -> Result<Vec<f64>> {
        match self {
            ScoreOracle::AnalyticGmm(p) => gmm_true_score(p, z),
            ScoreOracle::Learned(_) => Err(Error::Unsupported("learned oracle has no noise-free score")),
        }
    }

    fn denoiser_vjp(&self, z: &[f64], sigma: f64, g: &[f64]) -> Result<Vec<f64>> {
        ensure_positive("sigma", sigma)?;
        ensure_len(self.dim(), z.len())?;
        ensure_len(self.dim(), g.len())?;
        let s2 = sigma * sigma;
        match self {
            ScoreOracle::AnalyticGmm(p) => {
                let hv = p.hessian_vec(z, s2, g);
                Ok(g.iter().zip(&hv).map(|(gi, h)| gi + s2 * h).collect())
            }
            ScoreOracle::Learned(m) => {
                // z + sigma^2 s = z - sigma eps_hat ; d eps_hat/dz = J_phi / c^2 + sigma / c^2
                let c2 = 1.0 + s2;
                let c = c2.sqrt();
                let back = m.net.grad(&NoisePredictor::embed(z, sigma, c), g)?;
                Ok((0..z.len())
                    .map(|j| g[j] - sigma * (back.input[j] / c2 + sigma * g[j] / c2))
                    .collect())
            }
        }
    }
}

impl Score for GmmPrior {
    fn dim(&self) -> usize {
        GmmPrior::dim(self)
    }

    fn noisy_score(&self, z: &[f64], sigma: f64) -> Result<Vec<f64>> {
        gmm_noisy_score(self, sigma, z)
    }

    fn true_score(&self, z: &[f64]) -> Result<Vec<f64>> {
        gmm_true_score(self, z)
    }

    fn denoiser_vjp(&self, z: &[f64], sigma: f64, g: &[f64]) -> Result<Vec<f64>> {
        ScoreOracle::AnalyticGmm(self.clone()).denoiser_vjp(z, sigma, g)
    }
}

/// The zero score, `s_sigma = 0` for every sigma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroScore {
    pub dim: usize,
}

impl Score for ZeroScore {
    fn dim(&self) -> usize {
        self.dim
    }

    fn noisy_score(&self, z: &[f64], _sigma: f64) -> Result<Vec<f64>> {
        ensure_len(self.dim, z.len())?;
        Ok(vec![0.0; self.dim])
    }

    fn true_score(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.noisy_score(z, 1.0)
    }

    fn denoiser_vjp(&self, _z: &[f64], _sigma: f64, g: &[f64]) -> Result<Vec<f64>> {
        Ok(g.to_vec())
    }
}
