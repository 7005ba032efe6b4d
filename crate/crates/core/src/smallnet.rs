//! A small fully-connected network with exact reverse-mode gradients, plus
//! an Adam optimizer over flat parameter vectors.
//!
//! Parameters live in one flat buffer, layer by layer: the row-major weight
//! matrix `(out, in)` followed by the bias `(out)`. Gradients and optimizer
//! moments share that layout.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::rng::SampleRng;
use crate::schedule::AdamParams;

const FORMAT_TAG: &str = "ggl-mlp";
const FORMAT_VERSION: u32 = 1;

/// Hidden-layer nonlinearity. SiLU is smooth and grows linearly for large
/// inputs, so score estimates extrapolate without saturating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Silu,
}

impl Activation {
    fn tag(self) -> &'static str {
        match self {
            Activation::Silu => "silu",
        }
    }

    fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "silu" => Ok(Activation::Silu),
            other => Err(Error::Format(format!("unknown activation {other:?}"))),
        }
    }

    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Silu => x * sigmoid(x),
        }
    }

    #[inline]
    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Silu => {
                let s = sigmoid(x);
                s * (1.0 + x * (1.0 - s))
            }
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
}

/// Parameter and input gradients of `<cotangent, output>`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrad {
    pub params: Vec<f64>,
    pub input: Vec<f64>,
}

/// Pre-activations of one forward pass, reused by the backward pass.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    // pre[l] = W_l a_{l-1} + b_l ; acts[0] is the input.
    pre: Vec<Vec<f64>>,
    acts: Vec<Vec<f64>>,
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    /// Fan-in scaled random hidden layers and a zero final layer, so a fresh
    /// network outputs exactly zero.
    pub fn new(sizes: &[usize], activation: Activation, rng: &mut SampleRng) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidArgument(format!("bad layer sizes {sizes:?}")));
        }
        let mut params = Vec::with_capacity(param_count(sizes));
        let last = sizes.len() - 2;
        for (l, w) in sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            if l == last {
                params.extend(std::iter::repeat_n(0.0, fan_in * fan_out + fan_out));
            } else {
                let scale = (2.0 / fan_in as f64).sqrt();
                params.extend((0..fan_in * fan_out).map(|_| scale * rng.normal()));
                params.extend(std::iter::repeat_n(0.0, fan_out));
            }
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            activation,
            params,
        })
    }

    pub fn from_params(sizes: &[usize], activation: Activation, params: Vec<f64>) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidArgument(format!("bad layer sizes {sizes:?}")));
        }
        ensure_len(param_count(sizes), params.len())?;
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("non-finite parameter".into()));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            activation,
            params,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn layer_count(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut cache = ForwardCache::default();
        self.forward_cached(input, &mut cache)?;
        Ok(cache.pre.last().unwrap().clone())
    }

    /// Forward pass that keeps intermediates; the output is the last
    /// pre-activation (the output layer is linear).
    pub fn forward_cached<'a>(&self, input: &[f64], cache: &'a mut ForwardCache) -> Result<&'a [f64]> {
        ensure_len(self.input_dim(), input.len())?;
        let layers = self.layer_count();
        cache.pre.resize(layers, Vec::new());
        cache.acts.resize(layers, Vec::new());
        cache.acts[0].clear();
        cache.acts[0].extend_from_slice(input);

        let mut offset = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[offset..offset + n_in * n_out];
            let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;

            let (acts, pre) = (&cache.acts, &mut cache.pre[l]);
            let a_in = &acts[l];
            pre.clear();
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                let s: f64 = row.iter().zip(a_in).map(|(wi, ai)| wi * ai).sum();
                pre.push(s + b[o]);
            }
            if l + 1 < layers {
                let act = self.activation;
                let next: Vec<f64> = cache.pre[l].iter().map(|&x| act.apply(x)).collect();
                cache.acts[l + 1] = next;
            }
        }
        Ok(cache.pre.last().unwrap())
    }

    /// Exact gradients of `<cotangent, forward(input)>`.
    pub fn grad(&self, input: &[f64], cotangent: &[f64]) -> Result<MlpGrad> {
        let mut cache = ForwardCache::default();
        self.forward_cached(input, &mut cache)?;
        let mut params = vec![0.0; self.params.len()];
        let input = self.backward_accumulate(&cache, cotangent, &mut params)?;
        Ok(MlpGrad { params, input })
    }

    /// Backward pass over a filled cache. Parameter gradients are added into
    /// `param_grad`; the input gradient is returned.
    pub fn backward_accumulate(
        &self,
        cache: &ForwardCache,
        cotangent: &[f64],
        param_grad: &mut [f64],
    ) -> Result<Vec<f64>> {
        ensure_len(self.output_dim(), cotangent.len())?;
        ensure_len(self.params.len(), param_grad.len())?;
        let layers = self.layer_count();

        let mut offsets = Vec::with_capacity(layers);
        let mut offset = 0;
        for l in 0..layers {
            offsets.push(offset);
            offset += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }

        // delta = d<ct, out>/d pre_l
        let mut delta = cotangent.to_vec();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let a_in = &cache.acts[l];
            {
                let (gw, gb) = param_grad[off..off + n_in * n_out + n_out].split_at_mut(n_in * n_out);
                for o in 0..n_out {
                    let d = delta[o];
                    if d != 0.0 {
                        let row = &mut gw[o * n_in..(o + 1) * n_in];
                        for (g, a) in row.iter_mut().zip(a_in) {
                            *g += d * a;
                        }
                    }
                    gb[o] += d;
                }
            }
            let w = &self.params[off..off + n_in * n_out];
            let mut back = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                if d != 0.0 {
                    for (bk, wi) in back.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                        *bk += d * wi;
                    }
                }
            }
            if l > 0 {
                let act = self.activation;
                for (bk, &z) in back.iter_mut().zip(&cache.pre[l - 1]) {
                    *bk *= act.derivative(z);
                }
            }
            delta = back;
        }
        Ok(delta)
    }

    /// Versioned text serialization; values use 17 significant digits so the
    /// round trip is bit-exact.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{FORMAT_TAG} {FORMAT_VERSION}");
        let _ = writeln!(s, "activation {}", self.activation.tag());
        let sizes: Vec<String> = self.sizes.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "sizes {}", sizes.join(" "));
        let _ = writeln!(s, "params {}", self.params.len());
        for p in &self.params {
            let _ = writeln!(s, "{p:.16e}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::Format(format!("missing {what}")))
        };
        let header = next("header")?;
        let version = header
            .strip_prefix(FORMAT_TAG)
            .map(str::trim)
            .ok_or_else(|| Error::Format(format!("bad header {header:?}")))?;
        if version != FORMAT_VERSION.to_string() {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let activation = next("activation")?
            .strip_prefix("activation ")
            .ok_or_else(|| Error::Format("missing activation line".into()))
            .and_then(Activation::from_tag)?;
        let sizes = next("sizes")?
            .strip_prefix("sizes ")
            .ok_or_else(|| Error::Format("missing sizes line".into()))?
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| Error::Format(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let count: usize = next("params")?
            .strip_prefix("params ")
            .ok_or_else(|| Error::Format("missing params line".into()))?
            .trim()
            .parse()
            .map_err(|e: std::num::ParseIntError| Error::Format(e.to_string()))?;
        let params = lines
            .by_ref()
            .take(count)
            .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Format(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        if params.len() != count {
            return Err(Error::Format(format!("expected {count} params, found {}", params.len())));
        }
        Self::from_params(&sizes, activation, params)
    }
}

/// Adam with bias correction over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n: usize, lr: f64, hyper: AdamParams) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
            beta1: hyper.beta1,
            beta2: hyper.beta2,
            eps: hyper.eps,
        }
    }

    /// One Adam update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        ensure_len(self.m.len(), params.len())?;
        ensure_len(self.m.len(), grads.len())?;
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence {
                step: self.t as usize,
                reason: "non-finite gradient".into(),
            });
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}
