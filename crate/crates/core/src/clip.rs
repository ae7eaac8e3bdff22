//! Contrastive text-drumbeat pretraining: a MIDI encoder and a text
//! projection head are trained jointly so matched pairs score high cosine
//! similarity and mismatched pairs low, via symmetric cross entropy. Only
//! the text side is kept for downstream conditioning.

use crate::ae::{MrLstmEncoder, LATENT_DIM};
use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::midi::Pianoroll;
use crate::nn::{seeded_rng, softmax_cross_entropy, Adam, AdamConfig, Linear, Param};
use crate::tensor::{l2_norm, Tensor};
use crate::text::BASE_EMBED_DIM;
use serde::{Deserialize, Serialize};

/// Joint embedding width (matches the latent/conditioning width).
pub const JOINT_DIM: usize = LATENT_DIM;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ClipConfig {
    pub hidden_midi: usize,
    pub temperature: f32,
    pub epochs: usize,
    pub lr: f32,
    pub seed: u64,
}

impl Default for ClipConfig {
    fn default() -> Self {
        ClipConfig {
            hidden_midi: 64,
            temperature: 0.07,
            epochs: 500,
            lr: 1e-3,
            seed: 0,
        }
    }
}

pub struct ClipModel {
    pub midi_encoder: MrLstmEncoder,
    pub head: Linear, // 512 -> 128
    pub config: ClipConfig,
}

/// Rows of `x` normalized to unit L2 norm. Errors on a zero row.
fn normalize_rows(x: &Tensor) -> Result<(Tensor, Vec<f32>)> {
    let mut out = x.clone();
    let mut norms = Vec::with_capacity(x.rows());
    for r in 0..x.rows() {
        let norm = l2_norm(x.row(r));
        if norm == 0.0 {
            return Err(Error::DegenerateEmbedding);
        }
        out.row_mut(r).iter_mut().for_each(|v| *v /= norm);
        norms.push(norm);
    }
    Ok((out, norms))
}

/// dL/dx for u = x / ||x||: dx = (du - u (u . du)) / ||x||, per row.
fn normalize_rows_backward(unit: &Tensor, norms: &[f32], du: &Tensor) -> Tensor {
    let mut dx = Tensor::zeros(&unit.shape);
    let d = unit.cols();
    for r in 0..unit.rows() {
        let u = unit.row(r);
        let g = du.row(r);
        let u_dot_g: f32 = u.iter().zip(g).map(|(a, b)| a * b).sum();
        for j in 0..d {
            dx.data[r * d + j] = (g[j] - u[j] * u_dot_g) / norms[r];
        }
    }
    dx
}

/// Symmetric cross entropy over the scaled similarity matrix plus its
/// gradient dL/dS.
fn symmetric_ce(s: &Tensor) -> (f32, Tensor) {
    let n = s.rows();
    let mut loss = 0.0f32;
    let mut ds = Tensor::zeros(&[n, n]);
    // rows: each midi embedding classifies its text
    for i in 0..n {
        let (l, g) = softmax_cross_entropy(s.row(i), i);
        loss += l;
        for j in 0..n {
            ds.data[i * n + j] += g[j] / (2.0 * n as f32);
        }
    }
    // columns: each text embedding classifies its midi
    for j in 0..n {
        let col: Vec<f32> = (0..n).map(|i| s.data[i * n + j]).collect();
        let (l, g) = softmax_cross_entropy(&col, j);
        loss += l;
        for i in 0..n {
            ds.data[i * n + j] += g[i] / (2.0 * n as f32);
        }
    }
    (loss / (2.0 * n as f32), ds)
}

impl ClipModel {
    pub fn new(config: ClipConfig) -> Self {
        let mut rng = seeded_rng(config.seed);
        let mut model = ClipModel {
            midi_encoder: MrLstmEncoder::new(config.hidden_midi, JOINT_DIM, &mut rng),
            head: Linear::new(BASE_EMBED_DIM, JOINT_DIM, &mut rng),
            config,
        };
        // Both towers start with a shared bias direction that dominates the
        // input-dependent part, so after normalization the initial
        // similarity matrix is nearly constant and the first loss sits at
        // the uniform-logit value ln N instead of being blown up by the
        // 1/temperature scale.
        model.midi_encoder.merge.b.value.fill(0.05);
        model.head.b.value.fill(0.15);
        model
    }

    /// Projects a 512-d base text embedding into the unit-norm joint space.
    pub fn project_text(&self, base: &Tensor) -> Result<Vec<f32>> {
        if base.len() != BASE_EMBED_DIM {
            return Err(Error::shape(format!(
                "base embedding must be {BASE_EMBED_DIM}-d, got {}",
                base.len()
            )));
        }
        let x = Tensor::from_vec(&[1, BASE_EMBED_DIM], base.data.clone());
        let y = self.head.forward(&x);
        let (unit, _) = normalize_rows(&y)?;
        Ok(unit.data)
    }

    /// Encodes a pianoroll into the unit-norm joint space.
    pub fn encode_midi(&self, roll: &Pianoroll) -> Result<Vec<f32>> {
        let (z, _) = self.midi_encoder.forward(&[roll]);
        let (unit, _) = normalize_rows(&z)?;
        Ok(unit.data)
    }

    /// Scaled similarity matrix S[i][j] = cos(midi_i, text_j) / temperature.
    pub fn similarity(&self, rolls: &[&Pianoroll], bases: &Tensor) -> Result<Tensor> {
        let (m_raw, _) = self.midi_encoder.forward(rolls);
        let (m, _) = normalize_rows(&m_raw)?;
        let t_raw = self.head.forward(bases);
        let (t, _) = normalize_rows(&t_raw)?;
        let mut s = crate::tensor::matmul_bt(&m, &t);
        s.data.iter_mut().for_each(|v| *v /= self.config.temperature);
        Ok(s)
    }

    /// Symmetric contrastive loss for one batch, without updating anything.
    pub fn loss(&self, rolls: &[&Pianoroll], bases: &Tensor) -> Result<f32> {
        if rolls.len() < 2 {
            return Err(Error::BatchTooSmall("contrastive loss needs N >= 2".into()));
        }
        let s = self.similarity(rolls, bases)?;
        Ok(symmetric_ce(&s).0)
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.midi_encoder.params_mut();
        p.extend(self.head.params_mut());
        p
    }

    /// Full-batch training over the paired corpus; returns the loss curve.
    pub fn train(&mut self, rolls: &[Pianoroll], bases: &Tensor) -> Result<Vec<f32>> {
        let n = rolls.len();
        if n < 2 {
            return Err(Error::BatchTooSmall("contrastive training needs >= 2 pairs".into()));
        }
        if bases.rows() != n {
            return Err(Error::shape(format!("{n} rolls vs {} base embeddings", bases.rows())));
        }
        let refs: Vec<&Pianoroll> = rolls.iter().collect();
        let tau = self.config.temperature;
        let mut opt = Adam::new(AdamConfig {
            lr: self.config.lr,
            ..Default::default()
        });

        let mut losses = Vec::with_capacity(self.config.epochs);
        for _ in 0..self.config.epochs {
            for p in self.params_mut() {
                p.zero_grad();
            }
            let (m_raw, enc_cache) = self.midi_encoder.forward(&refs);
            let (m, m_norms) = normalize_rows(&m_raw)?;
            let t_raw = self.head.forward(bases);
            let (t, t_norms) = normalize_rows(&t_raw)?;

            let mut s = crate::tensor::matmul_bt(&m, &t);
            s.data.iter_mut().for_each(|v| *v /= tau);
            let (loss, ds) = symmetric_ce(&s);
            losses.push(loss);

            // dm = dS . t / tau ; dt = dS^T . m / tau
            let mut dm = crate::tensor::matmul(&ds, &t);
            dm.data.iter_mut().for_each(|v| *v /= tau);
            let mut dt = crate::tensor::matmul_at(&ds, &m);
            dt.data.iter_mut().for_each(|v| *v /= tau);

            let dm_raw = normalize_rows_backward(&m, &m_norms, &dm);
            let dt_raw = normalize_rows_backward(&t, &t_norms, &dt);
            self.midi_encoder.backward(&enc_cache, &dm_raw);
            self.head.backward(bases, &dt_raw);
            opt.step(&mut self.params_mut());
        }
        Ok(losses)
    }

    /// Fraction of texts whose best-matching MIDI row is the paired one.
    pub fn retrieval_accuracy(&self, rolls: &[&Pianoroll], bases: &Tensor) -> Result<f32> {
        let s = self.similarity(rolls, bases)?;
        let n = s.rows();
        let mut hits = 0usize;
        for j in 0..n {
            let best = (0..n).max_by(|&a, &b| s.data[a * n + j].total_cmp(&s.data[b * n + j])).unwrap();
            if best == j {
                hits += 1;
            }
        }
        Ok(hits as f32 / n as f32)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new(serde_json::json!({
            "kind": "clip",
            "config": serde_json::to_value(&self.config).unwrap(),
        }));
        for (k, cell) in self.midi_encoder.branches.iter().enumerate() {
            ck.push(format!("midi.branch{k}.w_x"), &cell.w_x.value);
            ck.push(format!("midi.branch{k}.w_h"), &cell.w_h.value);
            ck.push(format!("midi.branch{k}.b"), &cell.b.value);
        }
        ck.push("midi.merge.w", &self.midi_encoder.merge.w.value);
        ck.push("midi.merge.b", &self.midi_encoder.merge.b.value);
        ck.push("head.w", &self.head.w.value);
        ck.push("head.b", &self.head.b.value);
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.meta["kind"] != "clip" {
            return Err(Error::Checkpoint(format!("expected clip checkpoint, got {}", ck.meta["kind"])));
        }
        let config: ClipConfig = serde_json::from_value(ck.meta["config"].clone())?;
        let mut model = ClipModel::new(config);
        for (k, cell) in model.midi_encoder.branches.iter_mut().enumerate() {
            ck.load_into(&format!("midi.branch{k}.w_x"), &mut cell.w_x.value)?;
            ck.load_into(&format!("midi.branch{k}.w_h"), &mut cell.w_h.value)?;
            ck.load_into(&format!("midi.branch{k}.b"), &mut cell.b.value)?;
        }
        ck.load_into("midi.merge.w", &mut model.midi_encoder.merge.w.value)?;
        ck.load_into("midi.merge.b", &mut model.midi_encoder.merge.b.value)?;
        ck.load_into("head.w", &mut model.head.w.value)?;
        ck.load_into("head.b", &mut model.head.b.value)?;
        Ok(model)
    }
}
