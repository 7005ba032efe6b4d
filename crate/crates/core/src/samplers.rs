//! Langevin-type samplers, the guided HDND loop and baseline guided samplers.
//!
//! All samplers take a [`Score`] oracle and a [`Guidance`] loss and return a
//! [`SamplerTrace`]. Randomness comes from streams forked off the config
//! seed: stream [`NOISE_STREAM`] drives the injected noise; callers give
//! guidance objects their own stream so Monte-Carlo loss estimates never
//! perturb the noise sequence.

use rayon::prelude::*;

use crate::error::{ensure_len, Error, Result};
use crate::guidance::{Guidance, LossEval};
use crate::io::{fmt_real, CsvTable};
use crate::rng::SampleRng;
use crate::schedule::{schedule_sigma, SamplerConfig};
use crate::score::Score;
use crate::smallnet::AdamState;

pub const NOISE_STREAM: u64 = 0;
pub const GUIDANCE_STREAM: u64 = 1;
pub const INIT_STREAM: u64 = 2;

/// Runs stop when the latent norm exceeds this (whitened units).
pub const DIVERGENCE_NORM: f64 = 1e3;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn add_noise(z: &[f64], sigma: f64, rng: &mut SampleRng) -> Vec<f64> {
    let n = rng.standard_normal(z.len());
    z.iter().zip(&n).map(|(z, n)| z + sigma * n).collect()
}

/// `z~ = z + sigma n ; z' = z~ + (sigma^2 / 2) s(z)` with the noise-free score
/// taken at the pre-noise point.
pub fn langevin_step<S: Score + ?Sized>(oracle: &S, z: &[f64], sigma: f64, rng: &mut SampleRng) -> Result<Vec<f64>> {
    let s = oracle.true_score(z)?;
    let half = 0.5 * sigma * sigma;
    let noised = add_noise(z, sigma, rng);
    Ok(noised.iter().zip(&s).map(|(a, b)| a + half * b).collect())
}

/// `z~ = z + sigma n ; z' = z~ + (sigma^2 / 2) s_sigma(z~)`.
pub fn half_denoising_step<S: Score + ?Sized>(
    oracle: &S,
    z: &[f64],
    sigma: f64,
    rng: &mut SampleRng,
) -> Result<Vec<f64>> {
    let noised = add_noise(z, sigma, rng);
    let s = oracle.noisy_score(&noised, sigma)?;
    let half = 0.5 * sigma * sigma;
    Ok(noised.iter().zip(&s).map(|(a, b)| a + half * b).collect())
}

/// Langevin step on `p(z) exp(-eta L(z))` with the noise-free score:
/// `z' = z + sigma n + (sigma^2 / 2) s(z) - beta grad L(z)`.
pub fn guided_langevin_true_step<S: Score + ?Sized>(
    oracle: &S,
    z: &[f64],
    sigma: f64,
    beta: f64,
    loss_grad: &[f64],
    rng: &mut SampleRng,
) -> Result<Vec<f64>> {
    ensure_len(z.len(), loss_grad.len())?;
    let s = oracle.true_score(z)?;
    let half = 0.5 * sigma * sigma;
    let noised = add_noise(z, sigma, rng);
    Ok(noised
        .iter()
        .zip(&s)
        .zip(loss_grad)
        .map(|((a, b), g)| a + half * b - beta * g)
        .collect())
}

/// Intermediate states of one hybrid step.
#[derive(Debug, Clone, PartialEq)]
pub struct HdndState {
    pub noised: Vec<f64>,
    pub half_denoised: Vec<f64>,
    /// Guidance gradient at the pre-noise latent.
    pub grad: Vec<f64>,
}

impl HdndState {
    /// The plain hybrid update `z' = z^ - beta g`.
    pub fn plain_update(&self, beta: f64) -> Vec<f64> {
        self.half_denoised
            .iter()
            .zip(&self.grad)
            .map(|(z, g)| z - beta * g)
            .collect()
    }
}

/// Half-denoise the noised latent with the prior score while keeping the
/// guidance gradient computed on the un-noised `z_t`.
pub fn hdnd_step<S: Score + ?Sized>(
    oracle: &S,
    z: &[f64],
    sigma: f64,
    loss_grad: &[f64],
    rng: &mut SampleRng,
) -> Result<HdndState> {
    ensure_len(z.len(), loss_grad.len())?;
    if loss_grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Divergence {
            step: 0,
            reason: "non-finite guidance gradient".into(),
        });
    }
    let noised = add_noise(z, sigma, rng);
    let s = oracle.noisy_score(&noised, sigma)?;
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            step: 0,
            reason: "non-finite score".into(),
        });
    }
    let half = 0.5 * sigma * sigma;
    let half_denoised = noised.iter().zip(&s).map(|(a, b)| a + half * b).collect();
    Ok(HdndState {
        noised,
        half_denoised,
        grad: loss_grad.to_vec(),
    })
}

/// How the guidance gradient is applied to the half-denoised iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    /// Adam with learning rate beta, state persisting across steps.
    Adam,
    /// `z' = z^ - beta g`.
    Plain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub rule: UpdateRule,
    /// Record every this many steps (the final step is always recorded).
    pub record_every: usize,
    /// Store latent snapshots in the records.
    pub keep_latents: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            rule: UpdateRule::Adam,
            record_every: 10,
            keep_latents: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: usize,
    pub sigma: f64,
    pub loss: f64,
    pub surface: f64,
    pub eikonal: f64,
    pub siren: f64,
    pub regularizer: f64,
    pub score_norm: f64,
    pub grad_norm: f64,
    pub latent: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Completed,
    Diverged { step: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerTrace {
    pub method: &'static str,
    pub records: Vec<TraceRecord>,
    /// Latent after the last completed step.
    pub final_latent: Vec<f64>,
    pub outcome: Outcome,
}

impl SamplerTrace {
    fn new(method: &'static str, z0: &[f64]) -> Self {
        Self {
            method,
            records: Vec::new(),
            final_latent: z0.to_vec(),
            outcome: Outcome::Completed,
        }
    }

    pub fn diverged(&self) -> bool {
        matches!(self.outcome, Outcome::Diverged { .. })
    }

    /// Turn a divergence outcome into an error.
    pub fn into_result(self) -> Result<Self> {
        match &self.outcome {
            Outcome::Completed => Ok(self),
            Outcome::Diverged { step, reason } => Err(Error::Divergence {
                step: *step,
                reason: reason.clone(),
            }),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        opts: &RunOptions,
        t: usize,
        last: bool,
        sigma: f64,
        loss: &LossEval,
        score_norm: f64,
        z: &[f64],
    ) {
        if !t.is_multiple_of(opts.record_every.max(1)) && !last {
            return;
        }
        self.records.push(TraceRecord {
            t,
            sigma,
            loss: loss.value,
            surface: loss.surface,
            eikonal: loss.eikonal,
            siren: loss.siren,
            regularizer: loss.regularizer,
            score_norm,
            grad_norm: norm(&loss.grad),
            latent: opts.keep_latents.then(|| z.to_vec()),
        });
    }

    /// Check the state after step `t`; returns false and marks the trace when
    /// it diverged.
    fn check(&mut self, t: usize, z: &[f64]) -> bool {
        if z.iter().any(|v| !v.is_finite()) {
            self.outcome = Outcome::Diverged {
                step: t,
                reason: "non-finite latent".into(),
            };
            return false;
        }
        let n = norm(z);
        if n > DIVERGENCE_NORM {
            self.outcome = Outcome::Diverged {
                step: t,
                reason: format!("latent norm {n:.3e} exceeds {DIVERGENCE_NORM:e}"),
            };
            return false;
        }
        true
    }

    fn fail(&mut self, t: usize, err: Error) {
        self.outcome = Outcome::Diverged {
            step: t,
            reason: err.to_string(),
        };
    }

    /// One row per record.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(
            "trace",
            &[
                "t",
                "sigma",
                "loss",
                "surface",
                "eikonal",
                "siren",
                "regularizer",
                "score_norm",
                "grad_norm",
            ],
        );
        for r in &self.records {
            let mut row = vec![r.t.to_string()];
            row.extend(
                [
                    r.sigma,
                    r.loss,
                    r.surface,
                    r.eikonal,
                    r.siren,
                    r.regularizer,
                    r.score_norm,
                    r.grad_norm,
                ]
                .iter()
                .map(|x| fmt_real(*x)),
            );
            t.push(row);
        }
        t
    }
}

fn is_divergence(e: &Error) -> bool {
    matches!(e, Error::Divergence { .. })
}

/// Guided Langevin with half-denoising on the prior and guidance on the
/// un-noised iterate.
///
/// Each step: evaluate `g_t = grad L(z_t)`, draw `z~_t = z_t + sigma_t n`,
/// half-denoise to `z^_t = z~_t + (sigma_t^2 / 2) s(z~_t)`, then move `z^_t`
/// along `g_t` with the chosen update rule (Adam with learning rate beta, or
/// the plain step `z^_t - beta g_t`).
pub fn gg_langevin_run<S: Score + ?Sized, G: Guidance + ?Sized>(
    oracle: &S,
    guidance: &mut G,
    z0: &[f64],
    cfg: &SamplerConfig,
    opts: &RunOptions,
) -> Result<SamplerTrace> {
    cfg.validate()?;
    ensure_len(oracle.dim(), z0.len())?;
    ensure_len(guidance.dim(), z0.len())?;
    let mut rng = SampleRng::fork_from(cfg.seed, NOISE_STREAM);
    let mut adam = AdamState::new(z0.len(), cfg.beta, cfg.adam);
    let mut trace = SamplerTrace::new("gg_langevin", z0);
    let mut z = z0.to_vec();
    for t in 0..cfg.steps {
        let sigma = schedule_sigma(&cfg.schedule, t);
        let step = guidance
            .evaluate(&z)
            .and_then(|loss| Ok((hdnd_step(oracle, &z, sigma, &loss.grad, &mut rng)?, loss)));
        let (state, loss) = match step {
            Ok(v) => v,
            Err(e) if is_divergence(&e) => {
                trace.fail(t, e);
                break;
            }
            Err(e) => return Err(e),
        };
        let next = match opts.rule {
            UpdateRule::Plain => state.plain_update(cfg.beta),
            UpdateRule::Adam => {
                let mut params = state.half_denoised.clone();
                if let Err(e) = adam.step(&mut params, &state.grad) {
                    trace.fail(t, e);
                    break;
                }
                params
            }
        };
        if !trace.check(t, &next) {
            break;
        }
        let half = 0.5 * sigma * sigma;
        let score_norm = norm(&state.half_denoised.iter().zip(&state.noised).map(|(a, b)| (a - b) / half).collect::<Vec<_>>());
        z = next;
        trace.record(opts, t, t + 1 == cfg.steps, sigma, &loss, score_norm, &z);
        trace.final_latent.clone_from(&z);
    }
    Ok(trace)
}

/// Deterministic Adam minimization of the guidance objective (pass a loss
/// with the MAP regularizer enabled). The learning rate is `cfg.beta`.
pub fn map_run<G: Guidance + ?Sized>(
    guidance: &mut G,
    z0: &[f64],
    cfg: &SamplerConfig,
    opts: &RunOptions,
) -> Result<SamplerTrace> {
    cfg.validate()?;
    ensure_len(guidance.dim(), z0.len())?;
    let mut adam = AdamState::new(z0.len(), cfg.beta, cfg.adam);
    let mut trace = SamplerTrace::new("map", z0);
    let mut z = z0.to_vec();
    for t in 0..cfg.steps {
        let loss = match guidance.evaluate(&z) {
            Ok(l) => l,
            Err(e) if is_divergence(&e) => {
                trace.fail(t, e);
                break;
            }
            Err(e) => return Err(e),
        };
        let mut next = z.clone();
        if let Err(e) = adam.step(&mut next, &loss.grad) {
            trace.fail(t, e);
            break;
        }
        if !trace.check(t, &next) {
            break;
        }
        z = next;
        trace.record(opts, t, t + 1 == cfg.steps, 0.0, &loss, 0.0, &z);
        trace.final_latent.clone_from(&z);
    }
    Ok(trace)
}

/// Settings of the reverse-diffusion guided sampler.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DpsConfig {
    pub sigma_max: f64,
    pub sigma_min: f64,
    /// Exponent of the noise-level grid.
    pub rho: f64,
    /// Weight of the guidance likelihood `exp(-eta L)`.
    pub eta: f64,
}

impl Default for DpsConfig {
    fn default() -> Self {
        Self {
            sigma_max: 80.0,
            sigma_min: 0.002,
            rho: 7.0,
            eta: 24.0,
        }
    }
}

/// Decreasing noise levels `sigma_0 = max > ... > sigma_{n-1} = min` on the
/// power-`rho` grid, followed by an explicit 0.
pub fn power_sigma_grid(sigma_max: f64, sigma_min: f64, rho: f64, n: usize) -> Vec<f64> {
    let (a, b) = (sigma_max.powf(1.0 / rho), sigma_min.powf(1.0 / rho));
    let mut grid: Vec<f64> = (0..n)
        .map(|i| {
            let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            (a + t * (b - a)).powf(rho)
        })
        .collect();
    grid.push(0.0);
    grid
}

/// Guided reverse-time sampling with the loss evaluated on the one-step
/// denoised estimate.
///
/// The warm start is noised to `sigma_max`, then an Euler-Maruyama reverse
/// step of the variance-exploding SDE is taken on the power grid. The guidance
/// term treats `exp(-eta L(z0_hat(z)))` as the likelihood and differentiates
/// it through the denoiser, scaled like the score by the variance decrement
/// `sigma_i^2 - sigma_{i+1}^2`. That scaling is a choice for this
/// parametrization; the original method tunes a separate step size.
pub fn dps_run<S: Score + ?Sized, G: Guidance + ?Sized>(
    oracle: &S,
    guidance: &mut G,
    z0: &[f64],
    cfg: &SamplerConfig,
    dps: &DpsConfig,
    opts: &RunOptions,
) -> Result<SamplerTrace> {
    cfg.validate()?;
    ensure_len(oracle.dim(), z0.len())?;
    let mut rng = SampleRng::fork_from(cfg.seed, NOISE_STREAM);
    let grid = power_sigma_grid(dps.sigma_max, dps.sigma_min, dps.rho, cfg.steps);
    let mut trace = SamplerTrace::new("dps", z0);
    let mut z = add_noise(z0, dps.sigma_max, &mut rng);
    for t in 0..cfg.steps {
        let (sigma, next_sigma) = (grid[t], grid[t + 1]);
        let result = (|| -> Result<(Vec<f64>, LossEval, f64)> {
            let s = oracle.noisy_score(&z, sigma)?;
            let s2 = sigma * sigma;
            let denoised: Vec<f64> = z.iter().zip(&s).map(|(a, b)| a + s2 * b).collect();
            let loss = guidance.evaluate(&denoised)?;
            let pulled = if dps.eta > 0.0 {
                oracle.denoiser_vjp(&z, sigma, &loss.grad)?
            } else {
                vec![0.0; z.len()]
            };
            let dvar = s2 - next_sigma * next_sigma;
            let noise = rng.standard_normal(z.len());
            let next = (0..z.len())
                .map(|j| z[j] + dvar * (s[j] - dps.eta * pulled[j]) + dvar.sqrt() * noise[j])
                .collect();
            Ok((next, loss, norm(&s)))
        })();
        let (next, loss, score_norm) = match result {
            Ok(v) => v,
            Err(e) if is_divergence(&e) => {
                trace.fail(t, e);
                break;
            }
            Err(e) => return Err(e),
        };
        if !trace.check(t, &next) {
            break;
        }
        z = next;
        trace.record(opts, t, t + 1 == cfg.steps, sigma, &loss, score_norm, &z);
        trace.final_latent.clone_from(&z);
    }
    Ok(trace)
}

/// Settings of the decoupled annealed sampler.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DapsConfig {
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub mcmc_steps: usize,
    /// Langevin step at level `r` is `step_scale * r^2`.
    pub step_scale: f64,
    pub eta: f64,
}

impl Default for DapsConfig {
    fn default() -> Self {
        Self {
            sigma_max: 1.0,
            sigma_min: 0.01,
            mcmc_steps: 250,
            step_scale: 0.02,
            eta: 24.0,
        }
    }
}

/// Decoupled annealed posterior sampling.
///
/// Starting from `z0 + sigma_max n`, for each level `r` of a geometric ladder
/// from `sigma_max` to `sigma_min`: denoise with one Tweedie step, run
/// `mcmc_steps` Langevin steps on `N(x; x0_hat, r^2) exp(-eta L(x))` from the
/// denoised point, then re-noise the result to the next level. The number of
/// levels is `cfg.steps / mcmc_steps` so the step budget matches the other
/// samplers. Tweedie replaces the probability-flow solve of the original
/// method, and the Langevin step size schedule is a choice.
pub fn daps_run<S: Score + ?Sized, G: Guidance + ?Sized>(
    oracle: &S,
    guidance: &mut G,
    z0: &[f64],
    cfg: &SamplerConfig,
    daps: &DapsConfig,
    opts: &RunOptions,
) -> Result<SamplerTrace> {
    cfg.validate()?;
    ensure_len(oracle.dim(), z0.len())?;
    if daps.mcmc_steps == 0 {
        return Err(Error::InvalidArgument("mcmc_steps must be positive".into()));
    }
    let levels = (cfg.steps / daps.mcmc_steps).max(1);
    let ladder: Vec<f64> = (0..levels)
        .map(|i| {
            let t = if levels > 1 { i as f64 / (levels - 1) as f64 } else { 1.0 };
            daps.sigma_max * (daps.sigma_min / daps.sigma_max).powf(t)
        })
        .collect();
    let mut rng = SampleRng::fork_from(cfg.seed, NOISE_STREAM);
    let mut trace = SamplerTrace::new("daps", z0);
    let mut x = add_noise(z0, daps.sigma_max, &mut rng);
    let mut t = 0;
    let total = levels * daps.mcmc_steps;
    'levels: for (li, &r) in ladder.iter().enumerate() {
        let s = match oracle.noisy_score(&x, r) {
            Ok(s) => s,
            Err(e) if is_divergence(&e) => {
                trace.fail(t, e);
                break;
            }
            Err(e) => return Err(e),
        };
        let anchor: Vec<f64> = x.iter().zip(&s).map(|(a, b)| a + r * r * b).collect();
        let score_norm = norm(&s);
        let delta = daps.step_scale * r * r;
        let mut x0 = anchor.clone();
        for _ in 0..daps.mcmc_steps {
            let loss = match guidance.evaluate(&x0) {
                Ok(l) => l,
                Err(e) if is_divergence(&e) => {
                    trace.fail(t, e);
                    break 'levels;
                }
                Err(e) => return Err(e),
            };
            let noise = rng.standard_normal(x0.len());
            let next: Vec<f64> = (0..x0.len())
                .map(|j| {
                    let drift = -(x0[j] - anchor[j]) / (r * r) - daps.eta * loss.grad[j];
                    x0[j] + delta * drift + (2.0 * delta).sqrt() * noise[j]
                })
                .collect();
            if !trace.check(t, &next) {
                break 'levels;
            }
            x0 = next;
            trace.record(opts, t, t + 1 == total, r, &loss, score_norm, &x0);
            trace.final_latent.clone_from(&x0);
            t += 1;
        }
        if li + 1 < levels {
            x = add_noise(&x0, ladder[li + 1], &mut rng);
        }
    }
    Ok(trace)
}

/// Draw stationary samples from many independent chains.
///
/// Chain `c` starts at `init(c, rng_c)` and takes `steps` transitions with its
/// own stream forked from `seed`; the first `burn_in` steps are discarded and
/// every `thin`-th state afterwards is kept. Chains run in parallel but the
/// output order is fixed (chain-major).
pub fn chain_samples<I, F>(
    chains: usize,
    steps: usize,
    burn_in: usize,
    thin: usize,
    seed: u64,
    init: I,
    step: F,
) -> Result<Vec<Vec<f64>>>
where
    I: Fn(usize, &mut SampleRng) -> Vec<f64> + Sync,
    F: Fn(&[f64], &mut SampleRng) -> Result<Vec<f64>> + Sync,
{
    let thin = thin.max(1);
    let per_chain: Vec<Result<Vec<Vec<f64>>>> = (0..chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = SampleRng::fork_from(seed, 1000 + c as u64);
            let mut z = init(c, &mut rng);
            let mut out = Vec::new();
            for t in 0..steps {
                z = step(&z, &mut rng)?;
                if t >= burn_in && (t - burn_in).is_multiple_of(thin) {
                    out.push(z.clone());
                }
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::new();
    for r in per_chain {
        all.extend(r?);
    }
    Ok(all)
}
