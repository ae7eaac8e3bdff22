//! Subcommand implementations. Every command validates its inputs before
//! writing anything, writes files atomically, and is deterministic for a
//! fixed seed and config.

use crate::config::{EncoderKind, RunConfig};
use crate::{Cli, Command};
use drumgen_core::ae::{Autoencoder, LatentVec, LATENT_DIM};
use drumgen_core::checkpoint::{write_atomic, Checkpoint};
use drumgen_core::clip::ClipModel;
use drumgen_core::corpus::{
    load_corpus, load_f32_records, save_corpus, save_f32_records, Corpus, ManifestRecord,
};
use drumgen_core::diffusion::Denoiser;
use drumgen_core::error::{Error, Result};
use drumgen_core::eval::{
    density_svg, euclidean_latent, hamming, intra_set, kde, nearest_percentile, report_csv,
    Comparison, DistanceReport, Metric,
};
use drumgen_core::midi::{
    binarize, parse_midi, pianoroll_to_midi, quantize, BinaryPianoroll, DrumChannelMap, Pianoroll,
    CELLS, DEFAULT_BINARIZE_THRESHOLD,
};
use drumgen_core::nn::seeded_rng;
use drumgen_core::synth::synth_corpus;
use drumgen_core::tensor::Tensor;
use drumgen_core::text::{
    base_embed, build_vocab, clean_path, encode_multihot, extract_bpm, KeywordVocab, PromptText,
    VocabConfig, BASE_EMBED_DIM,
};
use rand::Rng;
use std::path::{Path, PathBuf};
use std::time::Instant;
use walkdir::WalkDir;

pub(crate) fn run(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(encoder) = cli.encoder {
        cfg.encoder = encoder;
    }
    match cli.command {
        Command::Preprocess => preprocess(&cfg, cli.out.as_deref()),
        Command::SynthCorpus => synth(&cfg, cli.n, cli.out.as_deref()),
        Command::TrainAe => train_ae(&cfg),
        Command::TrainClip => train_clip(&cfg),
        Command::TrainLdm => train_ldm(&cfg),
        Command::Generate => generate(&cfg, cli.prompt.as_deref(), cli.n, cli.out.as_deref()),
        Command::Evaluate => evaluate(&cfg, cli.out.as_deref()),
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

fn require_file(path: &Path, stage: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Dependency(format!(
            "{stage} (expected {})",
            path.display()
        )))
    }
}

fn load_corpus_checked(cfg: &RunConfig) -> Result<Corpus> {
    require_file(&cfg.paths.manifest, "preprocess")?;
    let corpus = load_corpus(&cfg.paths.manifest)?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(corpus)
}

fn load_vocab(cfg: &RunConfig) -> Result<KeywordVocab> {
    require_file(&cfg.paths.vocab, "preprocess")?;
    Ok(serde_json::from_slice(&std::fs::read(&cfg.paths.vocab)?)?)
}

fn load_ae(cfg: &RunConfig) -> Result<Autoencoder> {
    let path = cfg.paths.ae_checkpoint();
    require_file(&path, "autoencoder")?;
    Autoencoder::from_checkpoint(&Checkpoint::load(&path)?)
}

fn load_clip(cfg: &RunConfig) -> Result<ClipModel> {
    let path = cfg.paths.clip_checkpoint();
    require_file(&path, "contrastive pretraining")?;
    ClipModel::from_checkpoint(&Checkpoint::load(&path)?)
}

fn load_ldm(cfg: &RunConfig) -> Result<Denoiser> {
    let path = cfg.paths.ldm_checkpoint();
    require_file(&path, "latent diffusion")?;
    Denoiser::from_checkpoint(&Checkpoint::load(&path)?)
}

fn write_training_log(cfg: &RunConfig, stage: &str, losses: &[f32], wall: f64) -> Result<()> {
    let log = serde_json::json!({
        "stage": stage,
        "seed": cfg.seed,
        "epochs": losses.len(),
        "losses": losses,
        "wall_seconds": wall,
    });
    let path = cfg.paths.logs.join(format!("{stage}.json"));
    ensure_parent(&path)?;
    write_atomic(&path, &serde_json::to_vec_pretty(&log)?)
}

// ---------------------------------------------------------------------------
// preprocess / synth-corpus
// ---------------------------------------------------------------------------

fn preprocess(cfg: &RunConfig, out: Option<&Path>) -> Result<()> {
    let manifest_path = out.unwrap_or(&cfg.paths.manifest);
    let root = &cfg.paths.corpus_dir;
    if !root.is_dir() {
        return Err(Error::Config(format!(
            "corpus directory {} does not exist",
            root.display()
        )));
    }

    let mut midi_paths: Vec<PathBuf> = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::Config(format!("cannot scan {}: {e}", root.display())))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let is_midi = entry
            .path()
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("mid") || e.eq_ignore_ascii_case("midi"));
        if is_midi {
            midi_paths.push(entry.path().to_path_buf());
        }
    }

    let map = DrumChannelMap::default();
    let mut records: Vec<(ManifestRecord, Pianoroll)> = Vec::new();
    let mut prompts: Vec<PromptText> = Vec::new();
    let (mut skipped, mut unsupported) = (0usize, 0usize);
    for path in &midi_paths {
        let rel = path
            .strip_prefix(root)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/");
        let roll = match parse_midi(&std::fs::read(path)?).and_then(|t| quantize(&t, &map)) {
            Ok(roll) => roll,
            Err(Error::UnsupportedMeter { numerator, denominator }) => {
                eprintln!("skip {rel}: unsupported meter {numerator}/{denominator}");
                unsupported += 1;
                continue;
            }
            Err(e @ (Error::Parse { .. } | Error::EmptyTrack | Error::Shape(_))) => {
                eprintln!("skip {rel}: {e}");
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let prompt = clean_path(&rel);
        records.push((
            ManifestRecord {
                id: rel.clone(),
                source: rel,
                text: prompt.text.clone(),
                offset: 0, // assigned on save
            },
            roll,
        ));
        prompts.push(prompt);
    }
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let vocab = build_vocab(
        &prompts,
        &VocabConfig {
            coverage: cfg.vocab.coverage,
            stoplist: cfg.vocab.stoplist.clone(),
            allow: None,
        },
    )?;

    ensure_parent(manifest_path)?;
    save_corpus(manifest_path, &records)?;
    ensure_parent(&cfg.paths.vocab)?;
    write_atomic(&cfg.paths.vocab, &serde_json::to_vec_pretty(&vocab)?)?;

    println!(
        "preprocess: parsed {} / skipped {} / unsupported meter {}; vocabulary {} keywords",
        records.len(),
        skipped,
        unsupported,
        vocab.len()
    );
    Ok(())
}

fn synth(cfg: &RunConfig, n: Option<usize>, out: Option<&Path>) -> Result<()> {
    let n = n.unwrap_or(64);
    if n < 1 {
        return Err(Error::Config("synth-corpus needs --n >= 1".into()));
    }
    let out_dir = out.unwrap_or(&cfg.paths.corpus_dir);
    let files = synth_corpus(n, cfg.seed, out_dir)?;
    println!("synth-corpus: wrote {} files under {}", files.len(), out_dir.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// training stages
// ---------------------------------------------------------------------------

fn train_ae(cfg: &RunConfig) -> Result<()> {
    let path = cfg.paths.ae_checkpoint();
    if cfg.resume && path.is_file() {
        println!("train-ae: checkpoint {} exists, skipping", path.display());
        return Ok(());
    }
    let corpus = load_corpus_checked(cfg)?;
    let mut ae_cfg = cfg.ae.clone();
    ae_cfg.seed = cfg.seed;
    let mut ae = Autoencoder::new(ae_cfg);

    let start = Instant::now();
    let losses = ae.train(&corpus.rolls)?;
    let wall = start.elapsed().as_secs_f64();

    ensure_parent(&path)?;
    ae.to_checkpoint().save(&path)?;
    write_training_log(cfg, "train-ae", &losses, wall)?;
    println!(
        "train-ae: {} epochs on {} rolls, final loss {:.6}",
        losses.len(),
        corpus.len(),
        losses.last().unwrap()
    );
    Ok(())
}

fn train_clip(cfg: &RunConfig) -> Result<()> {
    let path = cfg.paths.clip_checkpoint();
    if cfg.resume && path.is_file() {
        println!("train-clip: checkpoint {} exists, skipping", path.display());
        return Ok(());
    }
    let corpus = load_corpus_checked(cfg)?;
    let mut bases = Tensor::zeros(&[corpus.len(), BASE_EMBED_DIM]);
    for (r, rec) in corpus.manifest.records.iter().enumerate() {
        let emb = base_embed(&PromptText::from_prompt(&rec.text));
        bases.row_mut(r).copy_from_slice(&emb.data);
    }
    let mut clip_cfg = cfg.clip.clone();
    clip_cfg.seed = cfg.seed;
    let mut model = ClipModel::new(clip_cfg);

    let start = Instant::now();
    let losses = model.train(&corpus.rolls, &bases)?;
    let wall = start.elapsed().as_secs_f64();

    ensure_parent(&path)?;
    model.to_checkpoint().save(&path)?;
    write_training_log(cfg, "train-clip", &losses, wall)?;
    let refs: Vec<&Pianoroll> = corpus.rolls.iter().collect();
    println!(
        "train-clip: {} epochs on {} pairs, final loss {:.6}, retrieval {:.3}",
        losses.len(),
        corpus.len(),
        losses.last().unwrap(),
        model.retrieval_accuracy(&refs, &bases)?
    );
    Ok(())
}

/// Conditioning vector for one prompt under the configured encoder.
/// Empty prompts map to the zero vector (the unconditional mode).
fn conditioning(
    cfg: &RunConfig,
    prompt: &PromptText,
    vocab: Option<&KeywordVocab>,
    clip: Option<&ClipModel>,
    d_text: usize,
) -> Result<Vec<f32>> {
    if prompt.tokens.is_empty() {
        return Ok(vec![0.0; d_text]);
    }
    let w = match cfg.encoder {
        EncoderKind::Multihot => encode_multihot(prompt, vocab.expect("vocab loaded")).to_dense(),
        EncoderKind::Contrastive => {
            clip.expect("clip loaded").project_text(&base_embed(prompt))?
        }
    };
    if w.len() != d_text {
        return Err(Error::Config(format!(
            "{} conditioning is {}-d but the diffusion model expects {d_text}; \
             retrain with a matching --encoder / vocabulary",
            cfg.encoder.name(),
            w.len()
        )));
    }
    Ok(w)
}

fn train_ldm(cfg: &RunConfig) -> Result<()> {
    let path = cfg.paths.ldm_checkpoint();
    if cfg.resume && path.is_file() {
        println!("train-ldm: checkpoint {} exists, skipping", path.display());
        return Ok(());
    }
    let corpus = load_corpus_checked(cfg)?;
    let ae = load_ae(cfg)?;
    let (vocab, clip) = match cfg.encoder {
        EncoderKind::Multihot => (Some(load_vocab(cfg)?), None),
        EncoderKind::Contrastive => (None, Some(load_clip(cfg)?)),
    };
    let d_text = match cfg.encoder {
        EncoderKind::Multihot => vocab.as_ref().unwrap().len() + 1,
        EncoderKind::Contrastive => LATENT_DIM,
    };

    let latents: Vec<LatentVec> = corpus.rolls.iter().map(|r| ae.encode(r)).collect();
    let mut texts = Vec::with_capacity(corpus.len());
    for rec in &corpus.manifest.records {
        let prompt = PromptText::from_prompt(&rec.text);
        texts.push(conditioning(cfg, &prompt, vocab.as_ref(), clip.as_ref(), d_text)?);
    }

    let mut ldm_cfg = cfg.ldm.clone();
    ldm_cfg.seed = cfg.seed;
    ldm_cfg.d_text = d_text;
    let mut denoiser = Denoiser::new(ldm_cfg)?;

    let start = Instant::now();
    let losses = denoiser.train(&latents, &texts)?;
    let wall = start.elapsed().as_secs_f64();

    ensure_parent(&path)?;
    denoiser.to_checkpoint().save(&path)?;
    write_training_log(cfg, "train-ldm", &losses, wall)?;
    println!(
        "train-ldm: {} steps, {} conditioning ({d_text}-d), final loss {:.6}",
        losses.len(),
        cfg.encoder.name(),
        losses.last().unwrap()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

fn prompt_slug(prompt: &str) -> String {
    let slug: String = prompt
        .to_lowercase()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
        .collect();
    let slug = slug.split('-').filter(|s| !s.is_empty()).collect::<Vec<_>>().join("-");
    if slug.is_empty() {
        "empty".to_string()
    } else {
        slug
    }
}

fn generate(cfg: &RunConfig, prompt: Option<&str>, n: Option<usize>, out: Option<&Path>) -> Result<()> {
    let prompt_str = prompt.unwrap_or("");
    let n = n.unwrap_or(cfg.generate.n);
    if n < 1 {
        return Err(Error::Config("generate needs --n >= 1".into()));
    }
    let ae = load_ae(cfg)?;
    let denoiser = load_ldm(cfg)?;
    let d_text = denoiser.config.d_text;
    let (vocab, clip) = match cfg.encoder {
        EncoderKind::Multihot => (Some(load_vocab(cfg)?), None),
        EncoderKind::Contrastive => (None, Some(load_clip(cfg)?)),
    };

    let prompt_text = PromptText::from_prompt(prompt_str);
    let w = conditioning(cfg, &prompt_text, vocab.as_ref(), clip.as_ref(), d_text)?;
    let bpm = extract_bpm(&prompt_text).unwrap_or(cfg.generate.default_bpm);

    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.paths.generated.join(prompt_slug(prompt_str)));
    std::fs::create_dir_all(&dir)?;

    let mut latents = Vec::with_capacity(n);
    let mut rolls = Vec::with_capacity(n);
    for i in 0..n {
        let z = denoiser.sample(&w, cfg.seed + i as u64, cfg.sampler.steps)?;
        let roll = ae.decode(&z);
        let bytes = pianoroll_to_midi(&roll, bpm as f64)?;
        write_atomic(&dir.join(format!("gen-{i:02}.mid")), &bytes)?;
        latents.push(z.0);
        rolls.push(roll.values().to_vec());
    }
    save_f32_records(&dir.join("latents.f32"), LATENT_DIM, &latents)?;
    save_f32_records(&dir.join("rolls.f32"), CELLS, &rolls)?;
    let meta = serde_json::json!({
        "prompt": prompt_str,
        "encoder": cfg.encoder.name(),
        "seed": cfg.seed,
        "n": n,
        "bpm": bpm,
        "steps": cfg.sampler.steps,
    });
    write_atomic(&dir.join("meta.json"), &serde_json::to_vec_pretty(&meta)?)?;
    println!("generate: {n} samples for {prompt_str:?} at {bpm} bpm -> {}", dir.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct GenSet {
    bins: Vec<BinaryPianoroll>,
    latents: Vec<LatentVec>,
}

fn load_generated_sets(dir: &Path) -> Result<Vec<GenSet>> {
    if !dir.is_dir() {
        return Err(Error::Config(format!(
            "generated directory {} does not exist; run generate first",
            dir.display()
        )));
    }
    let mut subdirs: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();

    let mut sets = Vec::new();
    for sub in subdirs {
        let (lat_path, roll_path) = (sub.join("latents.f32"), sub.join("rolls.f32"));
        if !lat_path.is_file() || !roll_path.is_file() {
            continue;
        }
        let latents = load_f32_records(&lat_path, LATENT_DIM)?
            .into_iter()
            .map(LatentVec)
            .collect();
        let bins = load_f32_records(&roll_path, CELLS)?
            .into_iter()
            .map(|grid| Ok(binarize(&Pianoroll::from_grid(grid)?, DEFAULT_BINARIZE_THRESHOLD)))
            .collect::<Result<Vec<_>>>()?;
        sets.push(GenSet { bins, latents });
    }
    if sets.is_empty() {
        return Err(Error::Config(format!(
            "no generated sample sets under {}",
            dir.display()
        )));
    }
    Ok(sets)
}

/// Indices of dataset records sharing an identical multihot vector, for
/// every vector represented by at least two records.
fn same_text_groups(corpus: &Corpus, vocab: &KeywordVocab) -> Vec<Vec<usize>> {
    let mut groups: std::collections::BTreeMap<Vec<u32>, Vec<usize>> = Default::default();
    for (i, rec) in corpus.manifest.records.iter().enumerate() {
        let mh = encode_multihot(&PromptText::from_prompt(&rec.text), vocab);
        let key: Vec<u32> = mh
            .to_dense()
            .iter()
            .map(|v| v.to_bits())
            .collect();
        groups.entry(key).or_default().push(i);
    }
    groups.into_values().filter(|g| g.len() >= 2).collect()
}

fn evaluate(cfg: &RunConfig, out: Option<&Path>) -> Result<()> {
    let reports_dir = out.unwrap_or(&cfg.paths.reports);
    let corpus = load_corpus_checked(cfg)?;
    let ae = load_ae(cfg)?;
    let vocab = load_vocab(cfg)?;
    let sets = load_generated_sets(&cfg.paths.generated)?;

    let ds_bins: Vec<BinaryPianoroll> = corpus
        .rolls
        .iter()
        .map(|r| binarize(r, DEFAULT_BINARIZE_THRESHOLD))
        .collect();
    let ds_latents: Vec<LatentVec> = corpus.rolls.iter().map(|r| ae.encode(r)).collect();
    let groups = same_text_groups(&corpus, &vocab);

    // one fixed pair list shared by both metrics
    let mut rng = seeded_rng(cfg.seed);
    let mut random_pairs = Vec::with_capacity(cfg.evaluate.random_pairs);
    if corpus.len() < 2 {
        return Err(Error::BatchTooSmall("random dataset pairs need >= 2 records".into()));
    }
    while random_pairs.len() < cfg.evaluate.random_pairs {
        let i = rng.gen_range(0..corpus.len());
        let j = rng.gen_range(0..corpus.len());
        if i != j {
            random_pairs.push((i, j));
        }
    }

    let p = cfg.evaluate.percentile;
    let mut rows: Vec<DistanceReport> = Vec::with_capacity(8);
    for metric in [Metric::Hamming, Metric::Euclidean] {
        // distance between dataset items i and j under this metric
        let ds_pair = |i: usize, j: usize| -> f64 {
            match metric {
                Metric::Hamming => hamming(&ds_bins[i], &ds_bins[j]) as f64,
                Metric::Euclidean => euclidean_latent(&ds_latents[i], &ds_latents[j]),
            }
        };

        for comparison in Comparison::all() {
            let raw: Vec<f64> = match comparison {
                Comparison::SameTextDataset => {
                    let mut vals = Vec::new();
                    for g in &groups {
                        vals.extend(intra_set(g, |&a, &b| ds_pair(a, b))?);
                    }
                    vals
                }
                Comparison::RandomDataset => {
                    random_pairs.iter().map(|&(i, j)| ds_pair(i, j)).collect()
                }
                Comparison::GeneratedVsDataset => {
                    let mut vals = Vec::new();
                    for set in &sets {
                        match metric {
                            Metric::Hamming => {
                                for g in &set.bins {
                                    vals.extend(nearest_percentile(
                                        g,
                                        &ds_bins,
                                        |a, b| hamming(a, b) as f64,
                                        p,
                                    )?);
                                }
                            }
                            Metric::Euclidean => {
                                for z in &set.latents {
                                    vals.extend(nearest_percentile(z, &ds_latents, euclidean_latent, p)?);
                                }
                            }
                        }
                    }
                    vals
                }
                Comparison::GeneratedVsGenerated => {
                    let mut vals = Vec::new();
                    for set in &sets {
                        let within = match metric {
                            Metric::Hamming => {
                                intra_set(&set.bins, |a, b| hamming(a, b) as f64)?
                            }
                            Metric::Euclidean => intra_set(&set.latents, euclidean_latent)?,
                        };
                        vals.extend(within);
                    }
                    vals
                }
            };
            if raw.is_empty() {
                return Err(Error::Config(format!(
                    "no values for {}/{}; need more data or generated sets",
                    metric.name(),
                    comparison.name()
                )));
            }
            rows.push(DistanceReport::from_values(metric, comparison, raw)?);
        }
    }

    std::fs::create_dir_all(reports_dir.join("raw"))?;
    write_atomic(&reports_dir.join("distances.csv"), report_csv(&rows).as_bytes())?;
    for row in &rows {
        let mut dump = String::with_capacity(row.raw.len() * 12);
        for v in &row.raw {
            dump.push_str(&format!("{v:.6}\n"));
        }
        let name = format!("{}_{}.txt", row.metric.name(), row.comparison.name());
        write_atomic(&reports_dir.join("raw").join(name), dump.as_bytes())?;
    }

    for metric in [Metric::Hamming, Metric::Euclidean] {
        let mut curves = Vec::new();
        for row in rows.iter().filter(|r| r.metric == metric) {
            // zero-variance cells (e.g. all-identical distances) have no density
            if let Ok(curve) = kde(&row.raw, None) {
                curves.push((row.comparison.name(), curve));
            }
        }
        let refs: Vec<(&str, &drumgen_core::eval::DensityCurve)> =
            curves.iter().map(|(n, c)| (*n, c)).collect();
        let svg = density_svg(&refs);
        write_atomic(
            &reports_dir.join(format!("density_{}.svg", metric.name())),
            svg.as_bytes(),
        )?;
    }

    for row in &rows {
        println!(
            "{:<10} {:<24} min {:>10.4}  mean {:>10.4}  std {:>10.4}  n {}",
            row.metric.name(),
            row.comparison.name(),
            row.min,
            row.mean,
            row.std,
            row.raw.len()
        );
    }
    println!("evaluate: wrote {}", reports_dir.join("distances.csv").display());
    Ok(())
}
