//! Deterministic synthetic drum-loop corpus: parameterized genre templates
//! (rock/latin/funk/blues x groove/fill x tempo) rendered to real MIDI files
//! under descriptive filepaths, as a desk-scale stand-in for a commercial
//! loop library. Entirely synthetic data.

use crate::checkpoint::write_atomic;
use crate::error::Result;
use crate::midi::{pianoroll_to_midi, Pianoroll, CHANNELS, SLICES};
use crate::nn::{seeded_rng, Prng};
use rand::Rng;
use std::path::{Path, PathBuf};

const GENRES: [&str; 4] = ["Rock", "Latin", "Funk", "Blues"];
const KINDS: [&str; 2] = ["Groove", "Fill"];
const TEMPOS: [u32; 2] = [100, 140];

// channel indices
const KICK: usize = 0;
const SNARE: usize = 1;
const CHH: usize = 2;
const OHH: usize = 3;
const RIDE: usize = 4;
const CRASH: usize = 5;
const LTOM: usize = 6;
const MTOM: usize = 7;
const HTOM: usize = 8;

fn set_bar(roll: &mut Pianoroll, bar: usize, slot: usize, ch: usize, vel: u8) {
    let slice = bar * 32 + slot;
    if slice < SLICES {
        roll.set(slice, ch, vel as f32 / 127.0);
    }
}

// Velocity bases sit away from 64 (the 0.5 binarization threshold) by more
// than the jitter, so a loop's binary pattern never depends on the jitter
// draw: audible hits stay above threshold, ghost notes below.
fn jitter(rng: &mut Prng, base: u8) -> u8 {
    (base as i16 + rng.gen_range(-6i16..=6)).clamp(1, 127) as u8
}

/// One bar (32 slices) of the genre's base groove, written into `bar`.
fn genre_bar(roll: &mut Pianoroll, genre: &str, bar: usize, rng: &mut Prng) {
    match genre {
        "Rock" => {
            for slot in [0, 16] {
                set_bar(roll, bar, slot, KICK, jitter(rng, 112));
            }
            for slot in [8, 24] {
                set_bar(roll, bar, slot, SNARE, jitter(rng, 105));
            }
            for slot in (0..32).step_by(4) {
                set_bar(roll, bar, slot, CHH, jitter(rng, 80));
            }
        }
        "Latin" => {
            for slot in [0, 12, 16, 28] {
                set_bar(roll, bar, slot, KICK, jitter(rng, 105));
            }
            for slot in [6, 22] {
                set_bar(roll, bar, slot, HTOM, jitter(rng, 95));
            }
            for slot in [10, 26] {
                set_bar(roll, bar, slot, MTOM, jitter(rng, 90));
            }
            for slot in (0..32).step_by(4) {
                set_bar(roll, bar, slot, RIDE, jitter(rng, 75));
            }
        }
        "Funk" => {
            for slot in [0, 6, 16, 22] {
                set_bar(roll, bar, slot, KICK, jitter(rng, 110));
            }
            for slot in [8, 24] {
                set_bar(roll, bar, slot, SNARE, jitter(rng, 108));
            }
            set_bar(roll, bar, 14, SNARE, jitter(rng, 40)); // ghost note
            // the open hat replaces the closed hat on the "and" of beat 4
            for slot in (0..28).step_by(2).chain([30]) {
                set_bar(roll, bar, slot, CHH, jitter(rng, 76));
            }
            set_bar(roll, bar, 28, OHH, jitter(rng, 100));
        }
        "Blues" => {
            // shuffled ride: swung pair per beat
            for beat in 0..4 {
                set_bar(roll, bar, beat * 8, RIDE, jitter(rng, 85));
                set_bar(roll, bar, beat * 8 + 5, RIDE, jitter(rng, 76));
            }
            for slot in [0, 16] {
                set_bar(roll, bar, slot, KICK, jitter(rng, 108));
            }
            for slot in [8, 24] {
                set_bar(roll, bar, slot, SNARE, jitter(rng, 100));
            }
        }
        _ => unreachable!("unknown genre template {genre}"),
    }
}

/// Replaces the last bar with a descending tom fill and a crash downbeat.
fn fill_bar(roll: &mut Pianoroll, rng: &mut Prng) {
    let bar = 3;
    for slot in 0..32 {
        let slice = bar * 32 + slot;
        for ch in 0..CHANNELS {
            roll.set(slice, ch, 0.0);
        }
    }
    set_bar(roll, bar, 0, CRASH, jitter(rng, 115));
    set_bar(roll, bar, 0, KICK, jitter(rng, 110));
    for (i, slot) in (8..32).step_by(2).enumerate() {
        let ch = match i % 3 {
            0 => HTOM,
            1 => MTOM,
            _ => LTOM,
        };
        set_bar(roll, bar, slot, ch, jitter(rng, 95));
    }
}

/// Off-beat slots no genre template occupies; used for per-loop variation.
const VAR_SLOTS: [usize; 12] = [1, 3, 7, 9, 11, 15, 17, 19, 23, 25, 27, 31];

/// Renders one loop for template index `variant`.
pub fn render_template(genre: &str, kind: &str, rng: &mut Prng) -> Pianoroll {
    let mut roll = Pianoroll::new();
    for bar in 0..4 {
        genre_bar(&mut roll, genre, bar, rng);
    }
    if kind == "Fill" {
        fill_bar(&mut roll, rng);
    }
    // One syncopated kick per bar at a random off-beat slot: loops from the
    // same template differ in their hit pattern, not just their velocities,
    // the way takes in a real loop library do.
    for bar in 0..4 {
        let slot = VAR_SLOTS[rng.gen_range(0..VAR_SLOTS.len())];
        set_bar(&mut roll, bar, slot, KICK, jitter(rng, 118));
    }
    roll
}

/// A generated file: its path relative to the corpus root plus its loop.
pub struct SynthFile {
    pub relpath: PathBuf,
    pub roll: Pianoroll,
    pub bpm: u32,
}

/// Deterministically generates `n` loops cycling over the genre x kind x
/// tempo templates, with per-file velocity jitter.
pub fn synth_files(n: usize, seed: u64) -> Vec<SynthFile> {
    let mut rng = seeded_rng(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let genre = GENRES[i % GENRES.len()];
        let kind = KINDS[(i / GENRES.len()) % KINDS.len()];
        let bpm = TEMPOS[(i / (GENRES.len() * KINDS.len())) % TEMPOS.len()];
        let roll = render_template(genre, kind, &mut rng);
        let relpath = PathBuf::from(format!(
            "{genre} GM/{kind}s/{bpm} {genre} {kind} {:02}.mid",
            i / (GENRES.len() * KINDS.len() * TEMPOS.len()) + 1
        ));
        out.push(SynthFile { relpath, roll, bpm });
    }
    out
}

/// Writes the corpus as MIDI files under `out_dir`; returns the relative
/// paths in generation order.
pub fn synth_corpus(n: usize, seed: u64, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let files = synth_files(n, seed);
    let mut paths = Vec::with_capacity(files.len());
    for f in &files {
        let path = out_dir.join(&f.relpath);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let bytes = pianoroll_to_midi(&f.roll, f.bpm as f64)?;
        write_atomic(&path, &bytes)?;
        paths.push(f.relpath.clone());
    }
    Ok(paths)
}
