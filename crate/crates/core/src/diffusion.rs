//! Text-conditioned DDPM over the 128-d latent space: linear beta schedule,
//! closed-form forward noising, a 3-layer batch-normalized MLP denoiser fed
//! concat(z_t, sinusoidal(t), text), training with per-sample empty-text
//! dropout, and the ancestral sampler.

use crate::ae::{LatentVec, LATENT_DIM};
use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::nn::{
    mse, mse_backward, relu_backward, relu_inplace, seeded_rng, sinusoidal_encode, standard_normal, Adam,
    AdamConfig, BatchNorm, Linear, Param,
};
use crate::tensor::Tensor;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Width of the sinusoidal timestep encoding.
pub const TIME_ENC_DIM: usize = 128;

/// Per-timestep beta/alpha tables for t = 1..T. Index 0 of `alpha_bar`
/// holds the t=0 convention value 1.
#[derive(Debug, Clone)]
pub struct NoiseSchedule {
    pub t_max: usize,
    pub beta: Vec<f32>,
    pub alpha: Vec<f32>,
    /// alpha_bar[t] = prod_{s<=t} alpha_s, with alpha_bar[0] = 1.
    pub alpha_bar: Vec<f32>,
}

impl NoiseSchedule {
    pub fn beta_t(&self, t: usize) -> f32 {
        self.beta[t - 1]
    }

    pub fn alpha_t(&self, t: usize) -> f32 {
        self.alpha[t - 1]
    }

    pub fn alpha_bar_t(&self, t: usize) -> f32 {
        self.alpha_bar[t]
    }
}

/// Linear beta interpolation between `beta_start` and `beta_end` over T steps.
pub fn build_schedule(t_max: usize, beta_start: f64, beta_end: f64) -> Result<NoiseSchedule> {
    if t_max < 1 {
        return Err(Error::Config("schedule needs T >= 1".into()));
    }
    if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
        return Err(Error::Config(format!(
            "need 0 < beta_start <= beta_end < 1, got [{beta_start}, {beta_end}]"
        )));
    }
    let mut beta = Vec::with_capacity(t_max);
    for t in 0..t_max {
        let frac = if t_max == 1 { 0.0 } else { t as f64 / (t_max - 1) as f64 };
        beta.push((beta_start + frac * (beta_end - beta_start)) as f32);
    }
    let alpha: Vec<f32> = beta.iter().map(|b| 1.0 - b).collect();
    let mut alpha_bar = Vec::with_capacity(t_max + 1);
    alpha_bar.push(1.0);
    let mut prod = 1.0f32;
    for &a in &alpha {
        prod *= a;
        alpha_bar.push(prod);
    }
    Ok(NoiseSchedule {
        t_max,
        beta,
        alpha,
        alpha_bar,
    })
}

/// z_t = sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) eps.
pub fn forward_noise(z0: &LatentVec, t: usize, eps: &[f32], sched: &NoiseSchedule) -> Result<LatentVec> {
    if t < 1 || t > sched.t_max {
        return Err(Error::Config(format!("timestep {t} outside 1..={}", sched.t_max)));
    }
    if eps.len() != LATENT_DIM {
        return Err(Error::shape(format!("noise must be {LATENT_DIM}-d")));
    }
    let ab = sched.alpha_bar_t(t);
    let (sa, sb) = (ab.sqrt(), (1.0 - ab).sqrt());
    Ok(LatentVec(
        z0.0.iter().zip(eps).map(|(z, e)| sa * z + sb * e).collect(),
    ))
}

/// What the denoiser is trained to output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PredictionTarget {
    /// Standard DDPM: the total noise in z_t.
    #[default]
    Epsilon,
    /// The literal per-step delta z_t - z_{t-1} (fidelity variant).
    StepDelta,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LdmConfig {
    pub t_max: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub hidden: usize,
    /// Conditioning vector width (multihot K+1 or the 128-d joint space).
    pub d_text: usize,
    pub steps: usize,
    pub batch: usize,
    pub lr: f32,
    pub empty_text_prob: f64,
    pub predict: PredictionTarget,
    pub seed: u64,
}

impl Default for LdmConfig {
    fn default() -> Self {
        LdmConfig {
            t_max: 1000,
            beta_start: 1e-4,
            beta_end: 0.02,
            hidden: 512,
            d_text: 128,
            steps: 20_000,
            batch: 32,
            lr: 1e-3,
            empty_text_prob: 0.05,
            predict: PredictionTarget::Epsilon,
            seed: 0,
        }
    }
}

/// 3 linear layers with batch norm + ReLU after the first two.
pub struct Denoiser {
    pub l1: Linear,
    pub bn1: BatchNorm,
    pub l2: Linear,
    pub bn2: BatchNorm,
    pub l3: Linear,
    pub config: LdmConfig,
    pub schedule: NoiseSchedule,
    trained: bool,
}

pub struct DenoiserCache {
    x: Tensor,
    bn1: crate::nn::BnCache,
    r1: Tensor,
    bn2: crate::nn::BnCache,
    r2: Tensor,
}

impl Denoiser {
    pub fn new(config: LdmConfig) -> Result<Self> {
        let schedule = build_schedule(config.t_max, config.beta_start, config.beta_end)?;
        let mut rng = seeded_rng(config.seed);
        let in_dim = LATENT_DIM + TIME_ENC_DIM + config.d_text;
        let l1 = Linear::new(in_dim, config.hidden, &mut rng);
        let l2 = Linear::new(config.hidden, config.hidden, &mut rng);
        // Zero-init the output layer so the untrained model predicts zero
        // noise and the initial MSE sits at the analytic E[eps^2] = 1.
        let mut l3 = Linear::new(config.hidden, LATENT_DIM, &mut rng);
        l3.w.value.fill(0.0);
        Ok(Denoiser {
            l1,
            bn1: BatchNorm::new(config.hidden),
            l2,
            bn2: BatchNorm::new(config.hidden),
            l3,
            config,
            schedule,
            trained: false,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.l1.input_dim()
    }

    fn concat_input(&self, z_t: &[f32], t: usize, w: &[f32]) -> Result<Vec<f32>> {
        if w.len() != self.config.d_text {
            return Err(Error::shape(format!(
                "text embedding is {}-d, denoiser configured for {}",
                w.len(),
                self.config.d_text
            )));
        }
        let enc = sinusoidal_encode(t as u32, TIME_ENC_DIM)?;
        let mut row = Vec::with_capacity(self.input_dim());
        row.extend_from_slice(z_t);
        row.extend_from_slice(&enc.data);
        row.extend_from_slice(w);
        Ok(row)
    }

    /// Eval-mode prediction (running batch-norm statistics).
    pub fn predict(&self, z_t: &LatentVec, t: usize, w: &[f32]) -> Result<Vec<f32>> {
        let row = self.concat_input(&z_t.0, t, w)?;
        let x = Tensor::from_vec(&[1, self.input_dim()], row);
        let mut h = self.l1.forward(&x);
        h = self.bn1.forward_eval(&h);
        relu_inplace(&mut h);
        h = self.l2.forward(&h);
        h = self.bn2.forward_eval(&h);
        relu_inplace(&mut h);
        Ok(self.l3.forward(&h).data)
    }

    pub fn forward_train(&mut self, x: &Tensor) -> Result<(Tensor, DenoiserCache)> {
        let (mut r1, bn1) = self.bn1.forward_train(&self.l1.forward(x))?;
        relu_inplace(&mut r1);
        let (mut r2, bn2) = self.bn2.forward_train(&self.l2.forward(&r1))?;
        relu_inplace(&mut r2);
        let out = self.l3.forward(&r2);
        Ok((
            out,
            DenoiserCache {
                x: x.clone(),
                bn1,
                r1,
                bn2,
                r2,
            },
        ))
    }

    pub fn backward(&mut self, cache: &DenoiserCache, d_out: &Tensor) {
        let dr2 = self.l3.backward(&cache.r2, d_out);
        let db2 = relu_backward(&dr2, &cache.r2);
        let da2 = self.bn2.backward(&cache.bn2, &db2);
        let dr1 = self.l2.backward(&cache.r1, &da2);
        let db1 = relu_backward(&dr1, &cache.r1);
        let da1 = self.bn1.backward(&cache.bn1, &db1);
        self.l1.backward(&cache.x, &da1);
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.l1.params_mut();
        p.extend(self.bn1.params_mut());
        p.extend(self.l2.params_mut());
        p.extend(self.bn2.params_mut());
        p.extend(self.l3.params_mut());
        p
    }

    /// Trains on (latent, text) pairs; every step draws a batch, a timestep
    /// per sample, and fresh noise, and with probability `empty_text_prob`
    /// replaces a sample's conditioning with the zero (empty-text) vector.
    /// Returns the per-step loss curve.
    pub fn train(&mut self, latents: &[LatentVec], texts: &[Vec<f32>]) -> Result<Vec<f32>> {
        if latents.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if latents.len() != texts.len() {
            return Err(Error::shape(format!(
                "{} latents vs {} texts",
                latents.len(),
                texts.len()
            )));
        }
        let cfg = self.config.clone();
        if cfg.batch < 2 {
            return Err(Error::BatchTooSmall("denoiser batch norm needs batch >= 2".into()));
        }
        let mut rng = seeded_rng(cfg.seed.wrapping_add(1));
        let mut opt = Adam::new(AdamConfig {
            lr: cfg.lr,
            ..Default::default()
        });
        let empty = vec![0.0f32; cfg.d_text];

        let mut losses = Vec::with_capacity(cfg.steps);
        for _ in 0..cfg.steps {
            let mut x = Tensor::zeros(&[cfg.batch, self.input_dim()]);
            let mut target = Tensor::zeros(&[cfg.batch, LATENT_DIM]);
            for r in 0..cfg.batch {
                let idx = rng.gen_range(0..latents.len());
                let t = rng.gen_range(1..=cfg.t_max);
                let eps = standard_normal(LATENT_DIM, &mut rng);
                let dropout = rng.gen_bool(cfg.empty_text_prob);
                let w = if dropout { &empty } else { &texts[idx] };

                let z_t = forward_noise(&latents[idx], t, &eps, &self.schedule)?;
                let row = self.concat_input(&z_t.0, t, w)?;
                x.row_mut(r).copy_from_slice(&row);
                match cfg.predict {
                    PredictionTarget::Epsilon => target.row_mut(r).copy_from_slice(&eps),
                    PredictionTarget::StepDelta => {
                        let ab_prev = self.schedule.alpha_bar_t(t - 1);
                        let (sa, sb) = (ab_prev.sqrt(), (1.0 - ab_prev).sqrt());
                        for (d, (zt, (z0, e))) in target
                            .row_mut(r)
                            .iter_mut()
                            .zip(z_t.0.iter().zip(latents[idx].0.iter().zip(&eps)))
                        {
                            *d = zt - (sa * z0 + sb * e);
                        }
                    }
                }
            }

            for p in self.params_mut() {
                p.zero_grad();
            }
            let (pred, cache) = self.forward_train(&x)?;
            losses.push(mse(&pred, &target)?);
            let d_out = mse_backward(&pred, &target);
            self.backward(&cache, &d_out);
            opt.step(&mut self.params_mut());
        }
        self.trained = true;
        Ok(losses)
    }

    /// Ancestral sampling from z_steps ~ N(0, I) down to z_0 with
    /// sigma_t = sqrt(beta_t) (zero at the final step). The step-delta
    /// variant subtracts the predicted delta directly.
    pub fn sample(&self, w: &[f32], seed: u64, steps: usize) -> Result<LatentVec> {
        if !self.trained {
            return Err(Error::UntrainedEncoder);
        }
        if steps < 1 || steps > self.config.t_max {
            return Err(Error::Config(format!(
                "sampler steps {steps} outside 1..={}",
                self.config.t_max
            )));
        }
        let mut rng = seeded_rng(seed);
        let mut z = LatentVec(standard_normal(LATENT_DIM, &mut rng));
        for t in (1..=steps).rev() {
            let eps_hat = self.predict(&z, t, w)?;
            match self.config.predict {
                PredictionTarget::Epsilon => {
                    let beta = self.schedule.beta_t(t);
                    let alpha = self.schedule.alpha_t(t);
                    let ab = self.schedule.alpha_bar_t(t);
                    let coef = beta / (1.0 - ab).sqrt();
                    let inv_sqrt_alpha = 1.0 / alpha.sqrt();
                    let sigma = if t > 1 { beta.sqrt() } else { 0.0 };
                    let xi = standard_normal(LATENT_DIM, &mut rng);
                    for ((zv, eh), n) in z.0.iter_mut().zip(&eps_hat).zip(&xi) {
                        *zv = inv_sqrt_alpha * (*zv - coef * eh) + sigma * n;
                    }
                }
                PredictionTarget::StepDelta => {
                    for (zv, eh) in z.0.iter_mut().zip(&eps_hat) {
                        *zv -= eh;
                    }
                }
            }
        }
        Ok(z)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new(serde_json::json!({
            "kind": "ldm",
            "config": serde_json::to_value(&self.config).unwrap(),
            "trained": self.trained,
        }));
        ck.push("l1.w", &self.l1.w.value);
        ck.push("l1.b", &self.l1.b.value);
        ck.push("bn1.gamma", &self.bn1.gamma.value);
        ck.push("bn1.beta", &self.bn1.beta.value);
        ck.push("bn1.running_mean", &self.bn1.running_mean);
        ck.push("bn1.running_var", &self.bn1.running_var);
        ck.push("l2.w", &self.l2.w.value);
        ck.push("l2.b", &self.l2.b.value);
        ck.push("bn2.gamma", &self.bn2.gamma.value);
        ck.push("bn2.beta", &self.bn2.beta.value);
        ck.push("bn2.running_mean", &self.bn2.running_mean);
        ck.push("bn2.running_var", &self.bn2.running_var);
        ck.push("l3.w", &self.l3.w.value);
        ck.push("l3.b", &self.l3.b.value);
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.meta["kind"] != "ldm" {
            return Err(Error::Checkpoint(format!("expected ldm checkpoint, got {}", ck.meta["kind"])));
        }
        let config: LdmConfig = serde_json::from_value(ck.meta["config"].clone())?;
        let trained = ck.meta["trained"].as_bool().unwrap_or(false);
        let mut d = Denoiser::new(config)?;
        ck.load_into("l1.w", &mut d.l1.w.value)?;
        ck.load_into("l1.b", &mut d.l1.b.value)?;
        ck.load_into("bn1.gamma", &mut d.bn1.gamma.value)?;
        ck.load_into("bn1.beta", &mut d.bn1.beta.value)?;
        ck.load_into("bn1.running_mean", &mut d.bn1.running_mean)?;
        ck.load_into("bn1.running_var", &mut d.bn1.running_var)?;
        ck.load_into("l2.w", &mut d.l2.w.value)?;
        ck.load_into("l2.b", &mut d.l2.b.value)?;
        ck.load_into("bn2.gamma", &mut d.bn2.gamma.value)?;
        ck.load_into("bn2.beta", &mut d.bn2.beta.value)?;
        ck.load_into("bn2.running_mean", &mut d.bn2.running_mean)?;
        ck.load_into("bn2.running_var", &mut d.bn2.running_var)?;
        ck.load_into("l3.w", &mut d.l3.w.value)?;
        ck.load_into("l3.b", &mut d.l3.b.value)?;
        d.trained = trained;
        Ok(d)
    }

    /// Marks parameters as trained (used by tests exercising the sampler
    /// with hand-set weights).
    pub fn mark_trained(&mut self) {
        self.trained = true;
    }
}
