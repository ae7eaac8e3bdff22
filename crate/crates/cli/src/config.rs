//! Run configuration: one JSON file covering paths, per-stage
//! hyperparameters, and the text-encoder choice. Every field has a default,
//! so an empty `{}` config gives a working toy pipeline.

use drumgen_core::ae::AeConfig;
use drumgen_core::clip::ClipConfig;
use drumgen_core::diffusion::LdmConfig;
use drumgen_core::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    #[default]
    Multihot,
    Contrastive,
}

impl EncoderKind {
    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::Multihot => "multihot",
            EncoderKind::Contrastive => "contrastive",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Directory scanned by `preprocess` / written by `synth-corpus`.
    pub corpus_dir: PathBuf,
    /// Corpus manifest JSON (its .f32 blob sits next to it).
    pub manifest: PathBuf,
    /// Keyword vocabulary JSON, written by `preprocess`.
    pub vocab: PathBuf,
    pub checkpoints: PathBuf,
    pub logs: PathBuf,
    /// One subdirectory per generated prompt set.
    pub generated: PathBuf,
    pub reports: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            corpus_dir: "corpus".into(),
            manifest: "work/corpus.json".into(),
            vocab: "work/vocab.json".into(),
            checkpoints: "work/checkpoints".into(),
            logs: "work/logs".into(),
            generated: "work/generated".into(),
            reports: "work/reports".into(),
        }
    }
}

impl Paths {
    pub fn ae_checkpoint(&self) -> PathBuf {
        self.checkpoints.join("ae.ck")
    }

    pub fn clip_checkpoint(&self) -> PathBuf {
        self.checkpoints.join("clip.ck")
    }

    pub fn ldm_checkpoint(&self) -> PathBuf {
        self.checkpoints.join("ldm.ck")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    /// Reverse-process steps; must not exceed the schedule length.
    pub steps: usize,
}

impl Default for SamplerSection {
    fn default() -> Self {
        SamplerSection { steps: 1000 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSection {
    /// Samples per prompt when --n is not given.
    pub n: usize,
    /// Tempo written to generated MIDI when the prompt has none.
    pub default_bpm: u32,
}

impl Default for GenerateSection {
    fn default() -> Self {
        GenerateSection { n: 10, default_bpm: 120 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    /// Seeded random dataset pairs drawn for the random-pairs column.
    pub random_pairs: usize,
    /// Closest fraction of the dataset kept per generated sample.
    pub percentile: f64,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        EvaluateSection {
            random_pairs: 200,
            percentile: 0.01,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabSection {
    /// Document-frequency mass retained by the keyword list.
    pub coverage: f64,
    pub stoplist: Vec<String>,
}

impl Default for VocabSection {
    fn default() -> Self {
        VocabSection {
            coverage: 0.95,
            stoplist: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub encoder: EncoderKind,
    /// Skip a training stage whose checkpoint already exists.
    pub resume: bool,
    pub paths: Paths,
    pub ae: AeConfig,
    pub clip: ClipConfig,
    pub ldm: LdmConfig,
    pub vocab: VocabSection,
    pub sampler: SamplerSection,
    pub generate: GenerateSection,
    pub evaluate: EvaluateSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            encoder: EncoderKind::default(),
            resume: false,
            paths: Paths::default(),
            ae: AeConfig::default(),
            clip: ClipConfig::default(),
            ldm: LdmConfig::default(),
            vocab: VocabSection::default(),
            sampler: SamplerSection::default(),
            generate: GenerateSection::default(),
            evaluate: EvaluateSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg: RunConfig = match path {
            Some(p) => serde_json::from_slice(&std::fs::read(p).map_err(|e| {
                Error::Config(format!("cannot read config {}: {e}", p.display()))
            })?)?,
            None => RunConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&mut self) -> Result<()> {
        if self.sampler.steps < 1 || self.sampler.steps > self.ldm.t_max {
            return Err(Error::Config(format!(
                "sampler.steps must lie in 1..={}, got {}",
                self.ldm.t_max, self.sampler.steps
            )));
        }
        if self.generate.n < 1 {
            return Err(Error::Config("generate.n must be >= 1".into()));
        }
        if self.generate.default_bpm == 0 {
            return Err(Error::Config("generate.default_bpm must be positive".into()));
        }
        if !(self.vocab.coverage > 0.0 && self.vocab.coverage <= 1.0) {
            return Err(Error::Config(format!(
                "vocab.coverage must be in (0,1], got {}",
                self.vocab.coverage
            )));
        }
        if !(self.evaluate.percentile > 0.0 && self.evaluate.percentile <= 1.0) {
            return Err(Error::Config(format!(
                "evaluate.percentile must be in (0,1], got {}",
                self.evaluate.percentile
            )));
        }
        if self.evaluate.random_pairs < 1 {
            return Err(Error::Config("evaluate.random_pairs must be >= 1".into()));
        }
        Ok(())
    }
}
