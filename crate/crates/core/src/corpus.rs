//! Pianoroll corpus on disk: a JSON manifest (one record per loop with its
//! prompt text and blob offset) next to a raw little-endian f32 blob holding
//! 1152 values per record in time-major order.

use crate::checkpoint::write_atomic;
use crate::error::{Error, Result};
use crate::midi::{Pianoroll, CELLS};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    pub source: String,
    pub text: String,
    /// Record index into the blob (record * 1152 floats).
    pub offset: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub records: Vec<ManifestRecord>,
    /// Blob filename, relative to the manifest.
    pub blob: String,
}

impl CorpusManifest {
    pub fn validate(&self, blob_len_bytes: u64) -> Result<()> {
        let n_records = blob_len_bytes / (CELLS as u64 * 4);
        let mut seen = std::collections::BTreeSet::new();
        for rec in &self.records {
            if !seen.insert(&rec.id) {
                return Err(Error::Config(format!("duplicate corpus id {:?}", rec.id)));
            }
            if rec.offset >= n_records {
                return Err(Error::Config(format!(
                    "record {:?} offset {} outside blob ({n_records} records)",
                    rec.id, rec.offset
                )));
            }
        }
        Ok(())
    }
}

/// In-memory corpus: manifest plus decoded pianorolls, index-aligned.
pub struct Corpus {
    pub manifest: CorpusManifest,
    pub rolls: Vec<Pianoroll>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.rolls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rolls.is_empty()
    }
}

pub fn save_corpus(manifest_path: &Path, records: &[(ManifestRecord, Pianoroll)]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let blob_name = manifest_path
        .file_stem()
        .map(|s| format!("{}.f32", s.to_string_lossy()))
        .unwrap_or_else(|| "corpus.f32".to_string());

    let mut blob = Vec::with_capacity(records.len() * CELLS * 4);
    let mut manifest = CorpusManifest {
        records: Vec::with_capacity(records.len()),
        blob: blob_name.clone(),
    };
    for (i, (rec, roll)) in records.iter().enumerate() {
        let mut rec = rec.clone();
        rec.offset = i as u64;
        manifest.records.push(rec);
        for v in roll.values() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }

    let blob_path = manifest_path.with_file_name(&blob_name);
    write_atomic(&blob_path, &blob)?;
    write_atomic(manifest_path, &serde_json::to_vec_pretty(&manifest)?)?;
    Ok(())
}

pub fn load_corpus(manifest_path: &Path) -> Result<Corpus> {
    let manifest: CorpusManifest = serde_json::from_slice(&fs::read(manifest_path)?)?;
    let blob_path = manifest_path.with_file_name(&manifest.blob);
    let blob = fs::read(&blob_path)?;
    manifest.validate(blob.len() as u64)?;

    let mut rolls = Vec::with_capacity(manifest.records.len());
    for rec in &manifest.records {
        let start = rec.offset as usize * CELLS * 4;
        let grid = blob[start..start + CELLS * 4]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        rolls.push(Pianoroll::from_grid(grid)?);
    }
    Ok(Corpus { manifest, rolls })
}

/// Raw little-endian f32 dump used for latents and precomputed embeddings:
/// `dim` floats per record, no header.
pub fn save_f32_records(path: &Path, dim: usize, records: &[Vec<f32>]) -> Result<()> {
    let mut out = Vec::with_capacity(records.len() * dim * 4);
    for r in records {
        if r.len() != dim {
            return Err(Error::shape(format!("record has {} floats, expected {dim}", r.len())));
        }
        for v in r {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    write_atomic(path, &out)
}

pub fn load_f32_records(path: &Path, dim: usize) -> Result<Vec<Vec<f32>>> {
    let bytes = fs::read(path)?;
    if bytes.len() % (dim * 4) != 0 {
        return Err(Error::shape(format!(
            "file length {} is not a multiple of {} bytes",
            bytes.len(),
            dim * 4
        )));
    }
    Ok(bytes
        .chunks_exact(dim * 4)
        .map(|rec| {
            rec.chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect()
        })
        .collect())
}
