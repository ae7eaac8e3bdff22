//! Standard MIDI File decoding/encoding and the lossy pianoroll conversion:
//! drum loops are quantized onto a fixed 128-slice x 9-channel grid of
//! normalized velocities, short loops are tiled out to 4 bars, and generated
//! grids are serialized back to playable SMF data.

use crate::error::{Error, Result};

/// Time slices per pianoroll (4 bars at 32 slices per 4/4 bar).
pub const SLICES: usize = 128;
/// Drum channels: kick, snare, closed hat, open hat, ride, crash,
/// low/mid/high tom.
pub const CHANNELS: usize = 9;
/// Total grid cells.
pub const CELLS: usize = SLICES * CHANNELS;
/// Slices per quarter note on the fixed grid.
pub const SLICES_PER_QUARTER: usize = 8;

/// Canonical GM pitch emitted for each channel on export.
pub const CANONICAL_PITCHES: [u8; CHANNELS] = [36, 38, 42, 46, 51, 49, 43, 47, 50];

/// Metadata and note events extracted from one drum loop.
#[derive(Debug, Clone, PartialEq)]
pub struct MidiDrumTrack {
    pub resolution: u16,
    pub bpm: f64,
    pub time_signature: (u8, u8),
    pub length_ticks: u64,
    /// (tick, note_number, velocity), sorted by tick, velocities in 1..=127.
    pub events: Vec<(u64, u8, u8)>,
}

/// 128 x 9 grid of normalized velocities in [0, 1], time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Pianoroll {
    grid: Vec<f32>,
}

impl Pianoroll {
    pub fn new() -> Self {
        Pianoroll { grid: vec![0.0; CELLS] }
    }

    pub fn from_grid(grid: Vec<f32>) -> Result<Self> {
        if grid.len() != CELLS {
            return Err(Error::shape(format!("pianoroll needs {CELLS} cells, got {}", grid.len())));
        }
        if grid.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::shape("pianoroll values must lie in [0,1]"));
        }
        Ok(Pianoroll { grid })
    }

    pub fn get(&self, slice: usize, channel: usize) -> f32 {
        self.grid[slice * CHANNELS + channel]
    }

    pub fn set(&mut self, slice: usize, channel: usize, v: f32) {
        debug_assert!((0.0..=1.0).contains(&v));
        self.grid[slice * CHANNELS + channel] = v;
    }

    pub fn values(&self) -> &[f32] {
        &self.grid
    }
}

impl Default for Pianoroll {
    fn default() -> Self {
        Self::new()
    }
}

/// 128 x 9 grid of {0, 1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryPianoroll {
    grid: Vec<u8>,
}

impl BinaryPianoroll {
    pub fn get(&self, slice: usize, channel: usize) -> u8 {
        self.grid[slice * CHANNELS + channel]
    }

    pub fn values(&self) -> &[u8] {
        &self.grid
    }

    pub fn to_pianoroll(&self) -> Pianoroll {
        Pianoroll {
            grid: self.grid.iter().map(|&b| b as f32).collect(),
        }
    }

    pub fn from_bits(grid: Vec<u8>) -> Result<Self> {
        if grid.len() != CELLS {
            return Err(Error::shape(format!("binary pianoroll needs {CELLS} cells")));
        }
        if grid.iter().any(|&v| v > 1) {
            return Err(Error::shape("binary pianoroll values must be 0 or 1"));
        }
        Ok(BinaryPianoroll { grid })
    }
}

/// out[i][j] = 1 iff roll[i][j] >= threshold.
pub fn binarize(roll: &Pianoroll, threshold: f32) -> BinaryPianoroll {
    BinaryPianoroll {
        grid: roll.grid.iter().map(|&v| u8::from(v >= threshold)).collect(),
    }
}

pub const DEFAULT_BINARIZE_THRESHOLD: f32 = 0.5;

/// GM percussion pitch -> drum channel. Unmapped pitches are dropped.
#[derive(Debug, Clone)]
pub struct DrumChannelMap {
    table: [Option<u8>; 128],
}

impl Default for DrumChannelMap {
    fn default() -> Self {
        let mut table = [None; 128];
        let groups: [&[u8]; CHANNELS] = [
            &[35, 36],                 // kick
            &[37, 38, 39, 40],         // snare
            &[42, 44],                 // closed hi-hat
            &[46],                     // open hi-hat
            &[51, 53, 59],             // ride
            &[49, 52, 55, 57],         // crash
            &[41, 43, 45],             // low tom
            &[47, 48],                 // mid tom
            &[50, 60, 61, 62, 63, 64], // high tom
        ];
        for (ch, pitches) in groups.iter().enumerate() {
            for &p in *pitches {
                table[p as usize] = Some(ch as u8);
            }
        }
        DrumChannelMap { table }
    }
}

impl DrumChannelMap {
    pub fn channel(&self, note: u8) -> Option<u8> {
        self.table.get(note as usize).copied().flatten()
    }
}

// ---------------------------------------------------------------------------
// SMF decoding
// ---------------------------------------------------------------------------

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn u8(&mut self) -> Result<u8> {
        let b = *self
            .bytes
            .get(self.pos)
            .ok_or_else(|| Error::parse(self.pos, "unexpected end of data"))?;
        self.pos += 1;
        Ok(b)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::parse(self.pos, format!("truncated: wanted {n} bytes")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    /// Variable-length quantity, at most 4 bytes per the SMF spec.
    fn vlq(&mut self) -> Result<u32> {
        let mut value = 0u32;
        for i in 0..4 {
            let b = self.u8()?;
            value = (value << 7) | (b & 0x7f) as u32;
            if b & 0x80 == 0 {
                return Ok(value);
            }
            if i == 3 {
                break;
            }
        }
        Err(Error::parse(self.pos, "variable-length quantity too long"))
    }
}

struct TrackNotes {
    /// (tick, channel, note, velocity)
    notes: Vec<(u64, u8, u8, u8)>,
    end_tick: u64,
    tempo_usq: Option<u32>,
    time_sig: Option<(u8, u8)>,
}

fn parse_track(r: &mut Reader) -> Result<TrackNotes> {
    let tag = r.take(4)?;
    if tag != b"MTrk" {
        return Err(Error::parse(r.pos - 4, "expected MTrk chunk tag"));
    }
    let len = r.u32()? as usize;
    let end = r
        .pos
        .checked_add(len)
        .filter(|&e| e <= r.bytes.len())
        .ok_or_else(|| Error::parse(r.pos, "track chunk length exceeds data"))?;

    let mut out = TrackNotes {
        notes: Vec::new(),
        end_tick: 0,
        tempo_usq: None,
        time_sig: None,
    };
    let mut tick: u64 = 0;
    let mut running_status: Option<u8> = None;

    while r.pos < end {
        tick += r.vlq()? as u64;
        out.end_tick = out.end_tick.max(tick);
        let first = r.u8()?;
        let status = if first & 0x80 != 0 {
            if first < 0xf0 {
                running_status = Some(first);
            }
            first
        } else {
            r.pos -= 1; // data byte, reuse running status
            running_status.ok_or_else(|| Error::parse(r.pos, "data byte with no running status"))?
        };

        match status {
            0xff => {
                let meta = r.u8()?;
                let len = r.vlq()? as usize;
                let data = r.take(len)?;
                match meta {
                    0x51 if len == 3 => {
                        let usq = u32::from_be_bytes([0, data[0], data[1], data[2]]);
                        out.tempo_usq.get_or_insert(usq);
                    }
                    0x58 if len >= 2 => {
                        let denom = 1u8.checked_shl(data[1] as u32).unwrap_or(0);
                        out.time_sig.get_or_insert((data[0], denom));
                    }
                    0x2f => {
                        out.end_tick = out.end_tick.max(tick);
                        r.pos = end;
                    }
                    _ => {}
                }
            }
            0xf0 | 0xf7 => {
                let len = r.vlq()? as usize;
                r.take(len)?;
            }
            _ => {
                let kind = status >> 4;
                let channel = status & 0x0f;
                match kind {
                    0x9 => {
                        let note = r.u8()?;
                        let vel = r.u8()?;
                        if note < 128 && vel > 0 {
                            // velocity-0 note-ons are note-offs; dropped
                            out.notes.push((tick, channel, note, vel.min(127)));
                        }
                    }
                    0x8 | 0xa | 0xb | 0xe => {
                        r.take(2)?;
                    }
                    0xc | 0xd => {
                        r.take(1)?;
                    }
                    _ => return Err(Error::parse(r.pos - 1, format!("unknown status byte 0x{status:02x}"))),
                }
            }
        }
    }
    Ok(out)
}

/// Decodes an SMF (format 0 or 1) and merges its drum events: notes on MIDI
/// channel 10 always, plus any track whose notes all fall on mapped GM
/// percussion pitches (drum libraries often export on channel 1).
pub fn parse_midi(bytes: &[u8]) -> Result<MidiDrumTrack> {
    let mut r = Reader { bytes, pos: 0 };
    let tag = r.take(4)?;
    if tag != b"MThd" {
        return Err(Error::parse(0, "expected MThd chunk tag"));
    }
    let hlen = r.u32()?;
    if hlen < 6 {
        return Err(Error::parse(r.pos - 4, "header chunk too short"));
    }
    let format = r.u16()?;
    if format > 1 {
        return Err(Error::parse(r.pos - 2, format!("unsupported SMF format {format}")));
    }
    let ntrks = r.u16()?;
    let division = r.u16()?;
    if division & 0x8000 != 0 {
        return Err(Error::parse(r.pos - 2, "SMPTE time division unsupported"));
    }
    if division == 0 {
        return Err(Error::parse(r.pos - 2, "zero ticks-per-quarter"));
    }
    r.take((hlen - 6) as usize)?;

    let map = DrumChannelMap::default();
    let mut events: Vec<(u64, u8, u8)> = Vec::new();
    let mut length_ticks = 0u64;
    let mut tempo_usq: Option<u32> = None;
    let mut time_sig: Option<(u8, u8)> = None;

    for _ in 0..ntrks {
        if r.pos >= bytes.len() {
            break;
        }
        let track = parse_track(&mut r)?;
        length_ticks = length_ticks.max(track.end_tick);
        if tempo_usq.is_none() {
            tempo_usq = track.tempo_usq;
        }
        if time_sig.is_none() {
            time_sig = track.time_sig;
        }
        if track.notes.is_empty() {
            continue;
        }
        let all_percussive = track
            .notes
            .iter()
            .all(|&(_, ch, note, _)| ch == 9 || map.channel(note).is_some());
        for &(tick, ch, note, vel) in &track.notes {
            if ch == 9 || all_percussive {
                events.push((tick, note, vel));
            }
        }
    }

    if events.is_empty() {
        return Err(Error::EmptyTrack);
    }
    events.sort_by_key(|&(tick, note, vel)| (tick, note, vel));

    let bpm = match tempo_usq {
        Some(usq) if usq > 0 => 60_000_000.0 / usq as f64,
        _ => 120.0,
    };
    Ok(MidiDrumTrack {
        resolution: division,
        bpm,
        time_signature: time_sig.unwrap_or((4, 4)),
        length_ticks,
        events,
    })
}

// ---------------------------------------------------------------------------
// Quantization
// ---------------------------------------------------------------------------

/// Quantizes a drum track onto the 128 x 9 grid: 8 slices per quarter note,
/// max velocity on cell collisions, loops shorter than 4 bars tiled, longer
/// material truncated.
pub fn quantize(track: &MidiDrumTrack, map: &DrumChannelMap) -> Result<Pianoroll> {
    let (num, denom) = track.time_signature;
    if denom != 4 || !(2..=4).contains(&num) {
        return Err(Error::UnsupportedMeter {
            numerator: num,
            denominator: denom,
        });
    }
    let slice_width = track.resolution as f64 / SLICES_PER_QUARTER as f64;

    let mut partial = vec![0.0f32; CELLS];
    let mut max_slice = 0usize;
    let mut any = false;
    for &(tick, note, vel) in &track.events {
        let Some(ch) = map.channel(note) else { continue };
        let slice = (tick as f64 / slice_width).round() as usize;
        if slice >= SLICES {
            continue; // beyond 4 bars: truncated
        }
        any = true;
        max_slice = max_slice.max(slice);
        let cell = &mut partial[slice * CHANNELS + ch as usize];
        *cell = cell.max(vel as f32 / 127.0);
    }
    if !any {
        return Err(Error::EmptyTrack);
    }

    let from_length = (track.length_ticks as f64 / slice_width).round() as usize;
    let loop_len = from_length.clamp(max_slice + 1, SLICES);
    tile_to_four_bars(&partial[..loop_len * CHANNELS])
}

/// Repeats a loop prefix of L slices out to the full 128:
/// out[i] = partial[i mod L].
pub fn tile_to_four_bars(partial: &[f32]) -> Result<Pianoroll> {
    if partial.is_empty() || partial.len() % CHANNELS != 0 {
        return Err(Error::EmptyTrack);
    }
    let l = partial.len() / CHANNELS;
    if l > SLICES {
        return Err(Error::shape(format!("prefix of {l} slices exceeds {SLICES}")));
    }
    let mut grid = vec![0.0f32; CELLS];
    for slice in 0..SLICES {
        let src = slice % l;
        grid[slice * CHANNELS..(slice + 1) * CHANNELS]
            .copy_from_slice(&partial[src * CHANNELS..(src + 1) * CHANNELS]);
    }
    Pianoroll::from_grid(grid)
}

// ---------------------------------------------------------------------------
// SMF encoding
// ---------------------------------------------------------------------------

const EXPORT_RESOLUTION: u16 = 480;
const EXPORT_TICKS_PER_SLICE: u64 = EXPORT_RESOLUTION as u64 / SLICES_PER_QUARTER as u64;

fn push_vlq(out: &mut Vec<u8>, mut value: u32) {
    let mut stack = [0u8; 4];
    let mut n = 0;
    loop {
        stack[n] = (value & 0x7f) as u8;
        value >>= 7;
        n += 1;
        if value == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        let mut b = stack[i];
        if i > 0 {
            b |= 0x80;
        }
        out.push(b);
    }
}

/// Serializes a pianoroll as SMF format 0 at 480 ticks per quarter: each
/// nonzero cell becomes a channel-10 note-on at its canonical pitch with a
/// note-off one slice later.
pub fn pianoroll_to_midi(roll: &Pianoroll, bpm: f64) -> Result<Vec<u8>> {
    if !(bpm > 0.0) {
        return Err(Error::Config(format!("bpm must be positive, got {bpm}")));
    }

    // (tick, is_on, pitch, velocity); note-offs sort before note-ons at the
    // same tick via the bool.
    let mut notes: Vec<(u64, bool, u8, u8)> = Vec::new();
    for slice in 0..SLICES {
        for ch in 0..CHANNELS {
            let v = roll.get(slice, ch);
            if v > 0.0 {
                let vel = (v * 127.0).round().max(1.0) as u8;
                let tick = slice as u64 * EXPORT_TICKS_PER_SLICE;
                notes.push((tick, true, CANONICAL_PITCHES[ch], vel));
                notes.push((tick + EXPORT_TICKS_PER_SLICE, false, CANONICAL_PITCHES[ch], 0));
            }
        }
    }
    notes.sort_by_key(|&(tick, is_on, pitch, _)| (tick, is_on, pitch));

    let mut track: Vec<u8> = Vec::new();
    // tempo
    let usq = (60_000_000.0 / bpm).round() as u32;
    track.extend_from_slice(&[0x00, 0xff, 0x51, 0x03]);
    track.extend_from_slice(&usq.to_be_bytes()[1..]);
    // 4/4 time signature
    track.extend_from_slice(&[0x00, 0xff, 0x58, 0x04, 0x04, 0x02, 0x18, 0x08]);

    let mut last_tick = 0u64;
    for &(tick, is_on, pitch, vel) in &notes {
        push_vlq(&mut track, (tick - last_tick) as u32);
        last_tick = tick;
        if is_on {
            track.extend_from_slice(&[0x99, pitch, vel]);
        } else {
            track.extend_from_slice(&[0x89, pitch, 0]);
        }
    }
    // end of track at the 4-bar boundary
    let end_tick = SLICES as u64 * EXPORT_TICKS_PER_SLICE;
    push_vlq(&mut track, (end_tick.saturating_sub(last_tick)) as u32);
    track.extend_from_slice(&[0xff, 0x2f, 0x00]);

    let mut out: Vec<u8> = Vec::with_capacity(track.len() + 22);
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes()); // format 0
    out.extend_from_slice(&1u16.to_be_bytes());
    out.extend_from_slice(&EXPORT_RESOLUTION.to_be_bytes());
    out.extend_from_slice(b"MTrk");
    out.extend_from_slice(&(track.len() as u32).to_be_bytes());
    out.extend_from_slice(&track);
    Ok(out)
}
