//! Codec properties: binary pianorolls survive the full
//! encode -> parse -> quantize -> binarize cycle exactly, the parser is
//! total over arbitrary bytes, and the quantizer's tick arithmetic, tiling,
//! truncation, and meter gate match hand-worked cases.

use drumgen_core::error::Error;
use drumgen_core::midi::{
    binarize, parse_midi, pianoroll_to_midi, quantize, tile_to_four_bars, BinaryPianoroll,
    DrumChannelMap, MidiDrumTrack, Pianoroll, CELLS, CHANNELS, DEFAULT_BINARIZE_THRESHOLD,
};
use proptest::prelude::*;

fn roundtrip(roll: &Pianoroll, bpm: f64) -> Pianoroll {
    let bytes = pianoroll_to_midi(roll, bpm).unwrap();
    let track = parse_midi(&bytes).unwrap();
    quantize(&track, &DrumChannelMap::default()).unwrap()
}

proptest! {
    /// Core codec invariant: any non-empty binary grid comes back bit-exact
    /// at any tempo in the parser's supported range.
    #[test]
    fn binary_roundtrip_is_exact(
        mut bits in proptest::collection::vec(proptest::bool::weighted(0.12), CELLS),
        bpm in 40.0f64..240.0,
    ) {
        if bits.iter().all(|b| !b) {
            bits[0] = true;
        }
        let roll = BinaryPianoroll::from_bits(bits.iter().map(|&b| b as u8).collect()).unwrap();
        let back = binarize(&roundtrip(&roll.to_pianoroll(), bpm), DEFAULT_BINARIZE_THRESHOLD);
        prop_assert_eq!(back, roll);
    }

    /// Velocities survive within one quantization step of the 7-bit scale.
    #[test]
    fn velocity_roundtrip_within_one_step(
        cells in proptest::collection::vec((0usize..CELLS, 0.02f32..=1.0), 1..64),
    ) {
        let mut roll = Pianoroll::new();
        for &(cell, v) in &cells {
            roll.set(cell / CHANNELS, cell % CHANNELS, v);
        }
        let back = roundtrip(&roll, 120.0);
        for (a, b) in roll.values().iter().zip(back.values()) {
            prop_assert!((a - b).abs() <= 0.5 / 127.0 + 1e-6, "{a} vs {b}");
        }
    }

    /// The parser must reject or accept arbitrary bytes without panicking.
    #[test]
    fn parser_is_total(bytes in proptest::collection::vec(any::<u8>(), 0..512)) {
        let _ = parse_midi(&bytes);
    }

    /// Same, with a plausible header so the fuzz reaches the track decoder.
    #[test]
    fn parser_is_total_past_header(body in proptest::collection::vec(any::<u8>(), 0..256)) {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"MThd");
        bytes.extend_from_slice(&6u32.to_be_bytes());
        bytes.extend_from_slice(&0u16.to_be_bytes());
        bytes.extend_from_slice(&1u16.to_be_bytes());
        bytes.extend_from_slice(&480u16.to_be_bytes());
        bytes.extend_from_slice(b"MTrk");
        bytes.extend_from_slice(&(body.len() as u32).to_be_bytes());
        bytes.extend_from_slice(&body);
        let _ = parse_midi(&bytes);
    }

    /// Tiling a full-length grid is the identity.
    #[test]
    fn tile_full_length_is_identity(
        bits in proptest::collection::vec(proptest::bool::weighted(0.1), CELLS),
    ) {
        let grid: Vec<f32> = bits.iter().map(|&b| b as u8 as f32).collect();
        let tiled = tile_to_four_bars(&grid).unwrap();
        prop_assert_eq!(tiled.values(), &grid[..]);
    }
}

fn track_with(resolution: u16, length_ticks: u64, events: Vec<(u64, u8, u8)>) -> MidiDrumTrack {
    MidiDrumTrack {
        resolution,
        bpm: 120.0,
        time_signature: (4, 4),
        length_ticks,
        events,
    }
}

#[test]
fn quantize_tick_arithmetic() {
    // resolution 960 -> slice width 120 ticks; rounding to nearest slice.
    let track = track_with(
        960,
        15_360,
        vec![(0, 36, 127), (119, 38, 100), (179, 42, 90), (180, 42, 80), (241, 46, 70)],
    );
    let roll = quantize(&track, &DrumChannelMap::default()).unwrap();
    assert_eq!(roll.get(0, 0), 1.0); // kick at slice 0
    assert_eq!(roll.get(1, 1), 100.0 / 127.0); // 119/120 rounds to slice 1
    assert_eq!(roll.get(1, 2), 90.0 / 127.0); // 179/120 = 1.49 -> slice 1
    assert_eq!(roll.get(2, 2), 80.0 / 127.0); // 180/120 = 1.5 -> slice 2
    assert_eq!(roll.get(2, 3), 70.0 / 127.0); // 241/120 = 2.008 -> slice 2
}

#[test]
fn quantize_takes_max_velocity_on_collision() {
    let track = track_with(480, 7680, vec![(0, 35, 60), (5, 36, 90), (10, 36, 30)]);
    let roll = quantize(&track, &DrumChannelMap::default()).unwrap();
    assert_eq!(roll.get(0, 0), 90.0 / 127.0);
}

#[test]
fn quantize_truncates_past_four_bars() {
    // EOT-derived length far past 4 bars; the late crash must vanish and the
    // early hit must not tile into it.
    let track = track_with(480, 15_360, vec![(0, 36, 127), (7680, 49, 127)]);
    let roll = quantize(&track, &DrumChannelMap::default()).unwrap();
    assert_eq!(roll.get(0, 0), 1.0);
    assert_eq!(roll.values().iter().filter(|&&v| v > 0.0).count(), 1);
}

#[test]
fn quantize_tiles_short_loops() {
    // One 4/4 bar at 480 tpqn = 1920 ticks = 32 slices, repeated 4x.
    let track = track_with(480, 1920, vec![(0, 36, 127), (960, 38, 100)]);
    let roll = quantize(&track, &DrumChannelMap::default()).unwrap();
    for bar in 0..4 {
        assert_eq!(roll.get(bar * 32, 0), 1.0);
        assert_eq!(roll.get(bar * 32 + 16, 1), 100.0 / 127.0);
    }
    assert_eq!(roll.values().iter().filter(|&&v| v > 0.0).count(), 8);
}

#[test]
fn tile_indexing_for_odd_prefix() {
    // L = 48: out[i] = partial[i mod 48], so slice 79 reads prefix slice 31.
    let mut partial = vec![0.0f32; 48 * CHANNELS];
    partial[31 * CHANNELS + 4] = 0.75;
    let roll = tile_to_four_bars(&partial).unwrap();
    assert_eq!(roll.get(31, 4), 0.75);
    assert_eq!(roll.get(79, 4), 0.75);
    assert_eq!(roll.get(127, 4), 0.75);
    assert_eq!(roll.get(78, 4), 0.0);
}

#[test]
fn compound_meter_is_rejected() {
    let mut track = track_with(480, 7680, vec![(0, 36, 127)]);
    track.time_signature = (6, 8);
    match quantize(&track, &DrumChannelMap::default()) {
        Err(Error::UnsupportedMeter { numerator: 6, denominator: 8 }) => {}
        other => panic!("expected UnsupportedMeter, got {other:?}"),
    }
}

#[test]
fn simple_meters_are_accepted() {
    for num in 2..=4u8 {
        let mut track = track_with(480, 7680, vec![(0, 36, 127)]);
        track.time_signature = (num, 4);
        quantize(&track, &DrumChannelMap::default()).unwrap();
    }
}

/// Hand-assembled format-0 file: tempo 100 bpm, one kick at tick 0 and a
/// running-status snare at tick 240, velocity-0 note-on (ignored), EOT.
#[test]
fn hand_assembled_smf_decodes() {
    let mut track: Vec<u8> = Vec::new();
    track.extend_from_slice(&[0x00, 0xff, 0x51, 0x03, 0x09, 0x27, 0xc0]); // 600000 usq
    track.extend_from_slice(&[0x00, 0xff, 0x58, 0x04, 0x03, 0x02, 0x18, 0x08]); // 3/4
    track.extend_from_slice(&[0x00, 0x99, 36, 100]);
    track.extend_from_slice(&[0x81, 0x70, 38, 90]); // delta 240, running status
    track.extend_from_slice(&[0x00, 42, 0]); // velocity 0: dropped
    track.extend_from_slice(&[0x60, 0xff, 0x2f, 0x00]); // EOT at tick 336

    let mut bytes = Vec::new();
    bytes.extend_from_slice(b"MThd");
    bytes.extend_from_slice(&6u32.to_be_bytes());
    bytes.extend_from_slice(&0u16.to_be_bytes());
    bytes.extend_from_slice(&1u16.to_be_bytes());
    bytes.extend_from_slice(&96u16.to_be_bytes());
    bytes.extend_from_slice(b"MTrk");
    bytes.extend_from_slice(&(track.len() as u32).to_be_bytes());
    bytes.extend_from_slice(&track);

    let parsed = parse_midi(&bytes).unwrap();
    assert_eq!(parsed.resolution, 96);
    assert!((parsed.bpm - 100.0).abs() < 1e-9);
    assert_eq!(parsed.time_signature, (3, 4));
    assert_eq!(parsed.length_ticks, 336);
    assert_eq!(parsed.events, vec![(0, 36, 100), (240, 38, 90)]);
}

#[test]
fn smpte_division_is_rejected() {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(b"MThd");
    bytes.extend_from_slice(&6u32.to_be_bytes());
    bytes.extend_from_slice(&0u16.to_be_bytes());
    bytes.extend_from_slice(&1u16.to_be_bytes());
    bytes.extend_from_slice(&0xE728u16.to_be_bytes()); // -25 fps SMPTE
    assert!(matches!(parse_midi(&bytes), Err(Error::Parse { .. })));
}

#[test]
fn format_two_is_rejected() {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(b"MThd");
    bytes.extend_from_slice(&6u32.to_be_bytes());
    bytes.extend_from_slice(&2u16.to_be_bytes());
    bytes.extend_from_slice(&1u16.to_be_bytes());
    bytes.extend_from_slice(&480u16.to_be_bytes());
    assert!(matches!(parse_midi(&bytes), Err(Error::Parse { .. })));
}

#[test]
fn empty_roll_exports_but_reimports_as_empty_track() {
    let bytes = pianoroll_to_midi(&Pianoroll::new(), 120.0).unwrap();
    assert!(matches!(parse_midi(&bytes), Err(Error::EmptyTrack)));
}
