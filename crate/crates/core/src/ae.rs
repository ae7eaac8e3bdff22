//! Pianoroll autoencoder: a multi-resolution LSTM encoder reads the grid at
//! strides 1, 2 and 4 and projects the concatenated final hidden states to a
//! 128-d latent; an autoregressive LSTM decoder with a sigmoid head unrolls
//! 128 steps back to the grid. Trained on per-cell binary cross-entropy
//! (reconstruction quality is still evaluated as MSE), optionally with
//! noise injected into the latent. Cross-entropy rather than MSE through
//! the sigmoid: velocities live in [0, 1] and both losses share the same
//! optimum, but MSE's gradient vanishes on confidently wrong cells, which
//! permanently traps rare per-item hits at zero.

use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::midi::{Pianoroll, CELLS, CHANNELS, SLICES};
use crate::nn::{
    bce, bce_backward_logits, mse, seeded_rng, standard_normal, Adam, AdamConfig, Linear, LstmCell, LstmStepCache,
    Param, Prng,
};
use crate::tensor::{add_inplace, Tensor};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const LATENT_DIM: usize = 128;
pub const BRANCH_STRIDES: [usize; 3] = [1, 2, 4];

/// 128-d latent code.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentVec(pub Vec<f32>);

impl LatentVec {
    pub fn new(v: Vec<f32>) -> Result<Self> {
        if v.len() != LATENT_DIM {
            return Err(Error::shape(format!("latent must be {LATENT_DIM}-d, got {}", v.len())));
        }
        Ok(LatentVec(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    #[default]
    None,
    Low,
    High,
}

impl NoiseKind {
    /// Amplitude interval the per-call noise scale is drawn from.
    pub fn range(self) -> (f32, f32) {
        match self {
            NoiseKind::None => (0.0, 0.0),
            NoiseKind::Low => (0.001, 0.01),
            NoiseKind::High => (0.01, 0.1),
        }
    }
}

/// z' = z + a * xi with a ~ U[lo, hi] and xi ~ N(0, I); identity for
/// `NoiseKind::None`.
pub fn inject_latent_noise(z: &LatentVec, noise: NoiseKind, rng: &mut Prng) -> LatentVec {
    if noise == NoiseKind::None {
        return z.clone();
    }
    let (lo, hi) = noise.range();
    let a = rng.gen_range(lo..=hi);
    let xi = standard_normal(LATENT_DIM, rng);
    LatentVec(z.0.iter().zip(&xi).map(|(v, n)| v + a * n).collect())
}

// ---------------------------------------------------------------------------
// Encoder
// ---------------------------------------------------------------------------

/// Three parallel LSTM branches over the time axis at strides 1/2/4; their
/// final hidden states are concatenated and linearly projected.
pub struct MrLstmEncoder {
    pub branches: Vec<LstmCell>,
    pub merge: Linear,
    pub hidden: usize,
}

pub struct EncoderCache {
    branch_caches: Vec<Vec<LstmStepCache>>,
    concat: Tensor,
}

impl MrLstmEncoder {
    pub fn new(hidden: usize, out_dim: usize, rng: &mut Prng) -> Self {
        let branches = BRANCH_STRIDES.iter().map(|_| LstmCell::new(CHANNELS, hidden, rng)).collect();
        MrLstmEncoder {
            branches,
            merge: Linear::new(3 * hidden, out_dim, rng),
            hidden,
        }
    }

    pub fn out_dim(&self) -> usize {
        self.merge.output_dim()
    }

    pub fn forward(&self, rolls: &[&Pianoroll]) -> (Tensor, EncoderCache) {
        let b = rolls.len();
        let mut concat = Tensor::zeros(&[b, 3 * self.hidden]);
        let mut branch_caches = Vec::with_capacity(3);
        for (k, (&stride, cell)) in BRANCH_STRIDES.iter().zip(&self.branches).enumerate() {
            let mut h = Tensor::zeros(&[b, self.hidden]);
            let mut c = Tensor::zeros(&[b, self.hidden]);
            let mut caches = Vec::with_capacity(SLICES / stride);
            let mut t = 0;
            while t < SLICES {
                let mut x = Tensor::zeros(&[b, CHANNELS]);
                for (r, roll) in rolls.iter().enumerate() {
                    for ch in 0..CHANNELS {
                        x.data[r * CHANNELS + ch] = roll.get(t, ch);
                    }
                }
                let (h_t, c_t, cache) = cell.step(&x, &h, &c);
                h = h_t;
                c = c_t;
                caches.push(cache);
                t += stride;
            }
            for r in 0..b {
                concat.data[r * 3 * self.hidden + k * self.hidden..r * 3 * self.hidden + (k + 1) * self.hidden]
                    .copy_from_slice(h.row(r));
            }
            branch_caches.push(caches);
        }
        let z = self.merge.forward(&concat);
        (z, EncoderCache { branch_caches, concat })
    }

    pub fn backward(&mut self, cache: &EncoderCache, dz: &Tensor) {
        let b = dz.rows();
        let dconcat = self.merge.backward(&cache.concat, dz);
        for (k, cell) in self.branches.iter_mut().enumerate() {
            let mut dh = Tensor::zeros(&[b, self.hidden]);
            for r in 0..b {
                dh.row_mut(r).copy_from_slice(
                    &dconcat.row(r)[k * self.hidden..(k + 1) * self.hidden],
                );
            }
            let mut dc = Tensor::zeros(&[b, self.hidden]);
            for step in cache.branch_caches[k].iter().rev() {
                let (_dx, dh_prev, dc_prev) = cell.step_backward(step, &dh, &dc);
                dh = dh_prev;
                dc = dc_prev;
            }
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = Vec::new();
        for cell in &mut self.branches {
            p.extend(cell.params_mut());
        }
        p.extend(self.merge.params_mut());
        p
    }
}

// ---------------------------------------------------------------------------
// Decoder
// ---------------------------------------------------------------------------

/// Latent -> (h0, c0), then a 128-step autoregressive LSTM whose sigmoid
/// head emits the 9 channel velocities and feeds them back as the next
/// step's input alongside a learned 32-d projection of the latent and a
/// sinusoidal position code.
/// Step 0 consumes a learned start vector. The latent is re-injected at
/// every step because an initial-state-only latent has to survive 128
/// forget gates: in practice the unroll loses it long before the final bar
/// and reconstruction of late slices never trains. The position code
/// anchors the step phase so the free-running unroll does not depend on the
/// LSTM state keeping an exact 128-step counter, which fed-back output
/// errors otherwise corrupt (late bars drift and fills vanish).
pub struct Decoder {
    pub proj_h: Linear,
    pub proj_c: Linear,
    /// Projects the latent to the low-dimensional per-step conditioning
    /// vector. Re-injecting the full 128-d latent at all 128 steps would
    /// dominate the unroll's cost; a learned 32-d summary carries the
    /// per-item detail at a quarter of the input width.
    pub proj_in: Linear,
    pub start: Param,
    pub cell: LstmCell,
    pub head: Linear,
    pub hidden: usize,
}

pub struct DecoderCache {
    z: Tensor,
    steps: Vec<LstmStepCache>,
    hiddens: Vec<Tensor>,
    outputs: Vec<Tensor>,
    /// Step inputs were ground-truth slices, not fed-back outputs, so the
    /// feedback path carries no gradient.
    teacher: bool,
}

/// Width of the decoder's sinusoidal step-position code.
pub const DECODER_POS_DIM: usize = 16;

/// Width of the projected latent fed to the decoder at every step.
pub const DECODER_Z_DIM: usize = 32;

/// Sin/cos pairs at wavelengths 2, 4, ..., 256 slices, covering sub-beat up
/// to whole-loop phase.
fn pos_features(t: usize) -> [f32; DECODER_POS_DIM] {
    let mut f = [0.0f32; DECODER_POS_DIM];
    for i in 0..DECODER_POS_DIM / 2 {
        let angle = std::f32::consts::TAU * t as f32 / (2u64 << i) as f32;
        f[2 * i] = angle.sin();
        f[2 * i + 1] = angle.cos();
    }
    f
}

impl Decoder {
    pub fn new(hidden: usize, rng: &mut Prng) -> Self {
        Decoder {
            proj_h: Linear::new(LATENT_DIM, hidden, rng),
            proj_c: Linear::new(LATENT_DIM, hidden, rng),
            proj_in: Linear::new(LATENT_DIM, DECODER_Z_DIM, rng),
            start: Param::new(Tensor::zeros(&[CHANNELS])),
            cell: LstmCell::new(CHANNELS + DECODER_Z_DIM + DECODER_POS_DIM, hidden, rng),
            head: Linear::new(hidden, CHANNELS, rng),
            hidden,
        }
    }

    /// Step input [y_prev | proj_in(z) | pos(t)] for the whole batch.
    fn step_input(&self, y_prev: &Tensor, zp: &Tensor, t: usize) -> Tensor {
        let b = zp.rows();
        let pos = pos_features(t);
        let mut x = Tensor::zeros(&[b, CHANNELS + DECODER_Z_DIM + DECODER_POS_DIM]);
        for r in 0..b {
            let row = x.row_mut(r);
            row[..CHANNELS].copy_from_slice(y_prev.row(r));
            row[CHANNELS..CHANNELS + DECODER_Z_DIM].copy_from_slice(zp.row(r));
            row[CHANNELS + DECODER_Z_DIM..].copy_from_slice(&pos);
        }
        x
    }

    /// z: [B, 128] -> pianoroll batch [B, 1152], values in (0, 1).
    pub fn forward(&self, z: &Tensor) -> (Tensor, DecoderCache) {
        let b = z.rows();
        let mut h = self.proj_h.forward(z);
        let mut c = self.proj_c.forward(z);
        let zp = self.proj_in.forward(z);
        let mut y_prev = Tensor::zeros(&[b, CHANNELS]);
        for r in 0..b {
            y_prev.row_mut(r).copy_from_slice(&self.start.value.data);
        }

        let mut out = Tensor::zeros(&[b, CELLS]);
        let mut steps = Vec::with_capacity(SLICES);
        let mut hiddens = Vec::with_capacity(SLICES);
        let mut outputs = Vec::with_capacity(SLICES);
        for t in 0..SLICES {
            let x = self.step_input(&y_prev, &zp, t);
            let (h_t, c_t, cache) = self.cell.step(&x, &h, &c);
            let mut y = self.head.forward(&h_t);
            y.data.iter_mut().for_each(|v| *v = crate::nn::sigmoid(*v));
            for r in 0..b {
                out.row_mut(r)[t * CHANNELS..(t + 1) * CHANNELS].copy_from_slice(y.row(r));
            }
            steps.push(cache);
            hiddens.push(h_t.clone());
            outputs.push(y.clone());
            h = h_t;
            c = c_t;
            y_prev = y;
        }
        (
            out,
            DecoderCache {
                z: z.clone(),
                steps,
                hiddens,
                outputs,
                teacher: false,
            },
        )
    }

    /// Teacher-forced unroll for training: step t consumes the ground-truth
    /// slice t-1 (step 0 still takes the start vector) instead of the
    /// model's own previous output. Free-running generation learns much too
    /// slowly because early steps feed garbage into later ones; once the
    /// model fits the data the two unrolls agree, since fed-back outputs
    /// converge to the targets.
    pub fn forward_teacher(&self, z: &Tensor, target: &Tensor) -> (Tensor, DecoderCache) {
        let b = z.rows();
        let mut h = self.proj_h.forward(z);
        let mut c = self.proj_c.forward(z);
        let zp = self.proj_in.forward(z);
        let mut y_prev = Tensor::zeros(&[b, CHANNELS]);
        for r in 0..b {
            y_prev.row_mut(r).copy_from_slice(&self.start.value.data);
        }

        let mut out = Tensor::zeros(&[b, CELLS]);
        let mut steps = Vec::with_capacity(SLICES);
        let mut hiddens = Vec::with_capacity(SLICES);
        let mut outputs = Vec::with_capacity(SLICES);
        for t in 0..SLICES {
            let x = self.step_input(&y_prev, &zp, t);
            let (h_t, c_t, cache) = self.cell.step(&x, &h, &c);
            let mut y = self.head.forward(&h_t);
            y.data.iter_mut().for_each(|v| *v = crate::nn::sigmoid(*v));
            for r in 0..b {
                out.row_mut(r)[t * CHANNELS..(t + 1) * CHANNELS].copy_from_slice(y.row(r));
            }
            steps.push(cache);
            hiddens.push(h_t.clone());
            outputs.push(y);
            h = h_t;
            c = c_t;
            for r in 0..b {
                y_prev
                    .row_mut(r)
                    .copy_from_slice(&target.row(r)[t * CHANNELS..(t + 1) * CHANNELS]);
            }
        }
        (
            out,
            DecoderCache {
                z: z.clone(),
                steps,
                hiddens,
                outputs,
                teacher: true,
            },
        )
    }

    /// Backward through the full unroll, including the feedback path from
    /// each output into the next step's input. `d_logits` is the loss
    /// gradient at the head's pre-sigmoid activations (as produced by
    /// `bce_backward_logits`). Returns dL/dz.
    pub fn backward(&mut self, cache: &DecoderCache, d_logits: &Tensor) -> Tensor {
        let b = d_logits.rows();
        let mut dh_rec = Tensor::zeros(&[b, self.hidden]);
        let mut dc_rec = Tensor::zeros(&[b, self.hidden]);
        // gradient reaching y_t through its use as part of step t+1's input
        let mut dy_fb = Tensor::zeros(&[b, CHANNELS]);

        let mut dzp = Tensor::zeros(&[b, DECODER_Z_DIM]);
        for t in (0..SLICES).rev() {
            // the feedback gradient into step t+1 passes through the
            // sigmoid (no feedback term under teacher forcing — inputs are
            // constants); the loss gradient arrives at the logits directly
            let mut dy = dy_fb;
            let y = &cache.outputs[t];
            for (d, &o) in dy.data.iter_mut().zip(&y.data) {
                *d *= o * (1.0 - o);
            }
            for r in 0..b {
                for ch in 0..CHANNELS {
                    dy.data[r * CHANNELS + ch] += d_logits.row(r)[t * CHANNELS + ch];
                }
            }
            let mut dh = self.head.backward(&cache.hiddens[t], &dy);
            add_inplace(&mut dh, &dh_rec);

            let (dx, dh_prev, dc_prev) = self.cell.step_backward(&cache.steps[t], &dh, &dc_rec);
            // split the input gradient: y-part feeds back (or the start
            // vector at t=0), projected-latent part accumulates every step,
            // and the position code is a constant whose gradient is dropped
            dy_fb = Tensor::zeros(&[b, CHANNELS]);
            for r in 0..b {
                let row = dx.row(r);
                if t == 0 {
                    for ch in 0..CHANNELS {
                        self.start.grad.data[ch] += row[ch];
                    }
                } else if !cache.teacher {
                    dy_fb.row_mut(r).copy_from_slice(&row[..CHANNELS]);
                }
                for k in 0..DECODER_Z_DIM {
                    dzp.data[r * DECODER_Z_DIM + k] += row[CHANNELS + k];
                }
            }
            dh_rec = dh_prev;
            dc_rec = dc_prev;
        }

        let mut dz = self.proj_in.backward(&cache.z, &dzp);
        add_inplace(&mut dz, &self.proj_h.backward(&cache.z, &dh_rec));
        add_inplace(&mut dz, &self.proj_c.backward(&cache.z, &dc_rec));
        dz
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.proj_h.params_mut();
        p.extend(self.proj_c.params_mut());
        p.extend(self.proj_in.params_mut());
        p.push(&mut self.start);
        p.extend(self.cell.params_mut());
        p.extend(self.head.params_mut());
        p
    }
}

// ---------------------------------------------------------------------------
// The autoencoder
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AeConfig {
    pub hidden_enc: usize,
    pub hidden_dec: usize,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f32,
    pub noise: NoiseKind,
    /// Fraction of epochs trained with a teacher-forced decoder unroll
    /// before switching to the free-running unroll that generation uses.
    /// Free-running gradients are uninformative from a cold start; teacher
    /// forcing learns the structure first, then fine-tuning under the real
    /// objective closes the exposure gap.
    pub teacher_frac: f32,
    /// Learning rate for the free-running fine-tuning phase. Free-running
    /// gradients flow through all 128 feedback steps and are far larger
    /// than teacher-forced ones; the warm-up rate destabilizes this phase.
    pub finetune_lr: f32,
    /// Global gradient-norm clip; 0 disables. Free-running unrolls produce
    /// occasional exploding gradients that can undo the warm-started
    /// solution in a single step.
    pub clip_norm: f32,
    pub seed: u64,
}

impl Default for AeConfig {
    fn default() -> Self {
        AeConfig {
            hidden_enc: 128,
            hidden_dec: 256,
            epochs: 2000,
            batch: 32,
            lr: 1e-3,
            noise: NoiseKind::None,
            teacher_frac: 0.75,
            finetune_lr: 1e-4,
            clip_norm: 1.0,
            seed: 0,
        }
    }
}

pub struct Autoencoder {
    pub encoder: MrLstmEncoder,
    pub decoder: Decoder,
    pub config: AeConfig,
}

impl Autoencoder {
    pub fn new(config: AeConfig) -> Self {
        let mut rng = seeded_rng(config.seed);
        Autoencoder {
            encoder: MrLstmEncoder::new(config.hidden_enc, LATENT_DIM, &mut rng),
            decoder: Decoder::new(config.hidden_dec, &mut rng),
            config,
        }
    }

    pub fn encode(&self, roll: &Pianoroll) -> LatentVec {
        let (z, _) = self.encoder.forward(&[roll]);
        LatentVec(z.data)
    }

    pub fn decode(&self, z: &LatentVec) -> Pianoroll {
        let zt = Tensor::from_vec(&[1, LATENT_DIM], z.0.clone());
        let (out, _) = self.decoder.forward(&zt);
        Pianoroll::from_grid(out.data).expect("sigmoid output is in (0,1)")
    }

    /// Mean reconstruction MSE over a corpus (no noise, no training).
    pub fn reconstruction_mse(&self, rolls: &[Pianoroll]) -> f32 {
        let refs: Vec<&Pianoroll> = rolls.iter().collect();
        let (z, _) = self.encoder.forward(&refs);
        let (out, _) = self.decoder.forward(&z);
        let target = batch_targets(&refs);
        mse(&out, &target).expect("shapes agree")
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.encoder.params_mut();
        p.extend(self.decoder.params_mut());
        p
    }

    /// Trains on per-cell binary cross-entropy with Adam; returns the
    /// per-epoch mean loss curve. Deterministic given the config seed.
    pub fn train(&mut self, corpus: &[Pianoroll]) -> Result<Vec<f32>> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let cfg = self.config.clone();
        let mut rng = seeded_rng(cfg.seed.wrapping_add(1));
        let mut opt = Adam::new(AdamConfig {
            lr: cfg.lr,
            ..Default::default()
        });

        let teacher_epochs = (cfg.teacher_frac.clamp(0.0, 1.0) * cfg.epochs as f32) as usize;
        let mut losses = Vec::with_capacity(cfg.epochs);
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        for epoch in 0..cfg.epochs {
            if epoch == teacher_epochs && epoch > 0 {
                // fresh optimizer state for the free-running phase
                opt = Adam::new(AdamConfig {
                    lr: cfg.finetune_lr,
                    ..Default::default()
                });
            }
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0f32;
            let mut batches = 0usize;
            for chunk in order.chunks(cfg.batch.max(1)) {
                let refs: Vec<&Pianoroll> = chunk.iter().map(|&i| &corpus[i]).collect();
                let target = batch_targets(&refs);

                for p in self.params_mut() {
                    p.zero_grad();
                }
                let (mut z, enc_cache) = self.encoder.forward(&refs);
                if cfg.noise != NoiseKind::None {
                    let (lo, hi) = cfg.noise.range();
                    for r in 0..z.rows() {
                        let a = rng.gen_range(lo..=hi);
                        let xi = standard_normal(LATENT_DIM, &mut rng);
                        for (v, n) in z.row_mut(r).iter_mut().zip(&xi) {
                            *v += a * n;
                        }
                    }
                }
                let (out, dec_cache) = if epoch < teacher_epochs {
                    self.decoder.forward_teacher(&z, &target)
                } else {
                    self.decoder.forward(&z)
                };
                epoch_loss += bce(&out, &target)?;
                batches += 1;

                let d_logits = bce_backward_logits(&out, &target);
                let dz = self.decoder.backward(&dec_cache, &d_logits);
                // additive noise passes gradients through unchanged
                self.encoder.backward(&enc_cache, &dz);
                if cfg.clip_norm > 0.0 {
                    let norm = self
                        .params_mut()
                        .iter()
                        .map(|p| p.grad.data.iter().map(|g| g * g).sum::<f32>())
                        .sum::<f32>()
                        .sqrt();
                    if norm > cfg.clip_norm {
                        let scale = cfg.clip_norm / norm;
                        for p in self.params_mut() {
                            for g in p.grad.data.iter_mut() {
                                *g *= scale;
                            }
                        }
                    }
                }
                opt.step(&mut self.params_mut());
            }
            losses.push(epoch_loss / batches as f32);
        }
        Ok(losses)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new(serde_json::json!({
            "kind": "autoencoder",
            "config": serde_json::to_value(&self.config).unwrap(),
        }));
        for (name, t) in self.named_tensors() {
            ck.push(name, t);
        }
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.meta["kind"] != "autoencoder" {
            return Err(Error::Checkpoint(format!("expected autoencoder checkpoint, got {}", ck.meta["kind"])));
        }
        let config: AeConfig = serde_json::from_value(ck.meta["config"].clone())?;
        let mut ae = Autoencoder::new(config);
        for (name, t) in ae.named_tensors_mut() {
            ck.load_into(&name, t)?;
        }
        Ok(ae)
    }

    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out: Vec<(String, &Tensor)> = Vec::new();
        for (k, cell) in self.encoder.branches.iter().enumerate() {
            out.push((format!("enc.branch{k}.w_x"), &cell.w_x.value));
            out.push((format!("enc.branch{k}.w_h"), &cell.w_h.value));
            out.push((format!("enc.branch{k}.b"), &cell.b.value));
        }
        out.push(("enc.merge.w".into(), &self.encoder.merge.w.value));
        out.push(("enc.merge.b".into(), &self.encoder.merge.b.value));
        out.push(("dec.proj_h.w".into(), &self.decoder.proj_h.w.value));
        out.push(("dec.proj_h.b".into(), &self.decoder.proj_h.b.value));
        out.push(("dec.proj_c.w".into(), &self.decoder.proj_c.w.value));
        out.push(("dec.proj_c.b".into(), &self.decoder.proj_c.b.value));
        out.push(("dec.proj_in.w".into(), &self.decoder.proj_in.w.value));
        out.push(("dec.proj_in.b".into(), &self.decoder.proj_in.b.value));
        out.push(("dec.start".into(), &self.decoder.start.value));
        out.push(("dec.cell.w_x".into(), &self.decoder.cell.w_x.value));
        out.push(("dec.cell.w_h".into(), &self.decoder.cell.w_h.value));
        out.push(("dec.cell.b".into(), &self.decoder.cell.b.value));
        out.push(("dec.head.w".into(), &self.decoder.head.w.value));
        out.push(("dec.head.b".into(), &self.decoder.head.b.value));
        out
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out: Vec<(String, &mut Tensor)> = Vec::new();
        for (k, cell) in self.encoder.branches.iter_mut().enumerate() {
            out.push((format!("enc.branch{k}.w_x"), &mut cell.w_x.value));
            out.push((format!("enc.branch{k}.w_h"), &mut cell.w_h.value));
            out.push((format!("enc.branch{k}.b"), &mut cell.b.value));
        }
        out.push(("enc.merge.w".into(), &mut self.encoder.merge.w.value));
        out.push(("enc.merge.b".into(), &mut self.encoder.merge.b.value));
        out.push(("dec.proj_h.w".into(), &mut self.decoder.proj_h.w.value));
        out.push(("dec.proj_h.b".into(), &mut self.decoder.proj_h.b.value));
        out.push(("dec.proj_c.w".into(), &mut self.decoder.proj_c.w.value));
        out.push(("dec.proj_c.b".into(), &mut self.decoder.proj_c.b.value));
        out.push(("dec.proj_in.w".into(), &mut self.decoder.proj_in.w.value));
        out.push(("dec.proj_in.b".into(), &mut self.decoder.proj_in.b.value));
        out.push(("dec.start".into(), &mut self.decoder.start.value));
        out.push(("dec.cell.w_x".into(), &mut self.decoder.cell.w_x.value));
        out.push(("dec.cell.w_h".into(), &mut self.decoder.cell.w_h.value));
        out.push(("dec.cell.b".into(), &mut self.decoder.cell.b.value));
        out.push(("dec.head.w".into(), &mut self.decoder.head.w.value));
        out.push(("dec.head.b".into(), &mut self.decoder.head.b.value));
        out
    }
}

/// Stacks pianorolls into a [B, 1152] target tensor.
pub fn batch_targets(rolls: &[&Pianoroll]) -> Tensor {
    let mut t = Tensor::zeros(&[rolls.len(), CELLS]);
    for (r, roll) in rolls.iter().enumerate() {
        t.row_mut(r).copy_from_slice(roll.values());
    }
    t
}
