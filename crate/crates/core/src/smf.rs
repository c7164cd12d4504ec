//! Standard MIDI File (format 0/1) import.
//!
//! Big-endian chunk framing, variable-length delta times and running status
//! per the SMF specification. Each channel-bearing track becomes one part;
//! simultaneous notes on a track are split greedily into voices.

use num_traits::Zero;
use thiserror::Error;

use crate::score::{
    position_of, Beats, Clef, Dynamic, EventContent, Metre, Note, Part, Score, ScoreError,
    Section, SymbolicEvent, Voice,
};

#[derive(Debug, Error)]
pub enum SmfError {
    #[error("byte {offset}: unexpected end of file")]
    UnexpectedEof { offset: usize },
    #[error("byte {offset}: expected chunk `{expected}`")]
    BadChunk { offset: usize, expected: &'static str },
    #[error("byte {offset}: header length must be 6")]
    BadHeaderLength { offset: usize },
    #[error("unsupported SMF format {0}, only 0 and 1 are handled")]
    UnsupportedFormat(u16),
    #[error("SMPTE time division is not supported")]
    SmpteDivision,
    #[error("header declares {declared} tracks but file contains {found}")]
    TrackCountMismatch { declared: u16, found: u16 },
    #[error("byte {offset}: invalid event status {status:#04x}")]
    BadStatus { offset: usize, status: u8 },
    #[error("file contains no notes")]
    NoNotes,
    #[error(transparent)]
    Model(#[from] ScoreError),
}

/// Parsed file plus importer diagnostics.
#[derive(Debug)]
pub struct SmfImport {
    pub score: Score,
    pub warnings: Vec<String>,
    /// First tempo meta-event, if any, as beats per minute.
    pub initial_tempo_bpm: Option<f64>,
    /// All tempo events as (tick, bpm).
    pub tempo_events: Vec<(u64, f64)>,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn u8(&mut self) -> Result<u8, SmfError> {
        let b = *self
            .bytes
            .get(self.pos)
            .ok_or(SmfError::UnexpectedEof { offset: self.pos })?;
        self.pos += 1;
        Ok(b)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], SmfError> {
        if self.pos + n > self.bytes.len() {
            return Err(SmfError::UnexpectedEof { offset: self.pos });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, SmfError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, SmfError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn vlq(&mut self) -> Result<u32, SmfError> {
        let mut value: u32 = 0;
        for _ in 0..4 {
            let byte = self.u8()?;
            value = (value << 7) | (byte & 0x7f) as u32;
            if byte & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(SmfError::BadStatus { offset: self.pos, status: 0x80 })
    }
}

#[derive(Debug, Clone)]
struct RawNote {
    onset_tick: u64,
    dur_ticks: u64,
    pitch: u8,
    velocity: u8,
}

#[derive(Debug, Default)]
struct RawTrack {
    name: Option<String>,
    program: Option<u8>,
    notes: Vec<RawNote>,
    has_channel_events: bool,
    end_tick: u64,
}

/// Decodes an SMF byte stream into a [`Score`].
pub fn parse_smf(bytes: &[u8]) -> Result<SmfImport, SmfError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let mut warnings = Vec::new();

    if cur.take(4)? != b"MThd" {
        return Err(SmfError::BadChunk { offset: 0, expected: "MThd" });
    }
    if cur.u32()? != 6 {
        return Err(SmfError::BadHeaderLength { offset: cur.pos - 4 });
    }
    let format = cur.u16()?;
    if format > 1 {
        return Err(SmfError::UnsupportedFormat(format));
    }
    let declared_tracks = cur.u16()?;
    let division = cur.u16()?;
    if division & 0x8000 != 0 {
        return Err(SmfError::SmpteDivision);
    }
    let tpq = division as u32;

    let mut tracks = Vec::new();
    let mut time_sigs: Vec<(u64, Metre)> = Vec::new();
    let mut tempo_events: Vec<(u64, f64)> = Vec::new();
    let mut found: u16 = 0;
    while found < declared_tracks {
        if cur.pos >= bytes.len() {
            return Err(SmfError::TrackCountMismatch { declared: declared_tracks, found });
        }
        let chunk_start = cur.pos;
        let tag = cur.take(4)?;
        let len = cur.u32()? as usize;
        let body = cur.take(len)?;
        if tag != b"MTrk" {
            // Unknown chunks are skipped per the SMF spec.
            warnings.push(format!("skipped unknown chunk at byte {chunk_start}"));
            continue;
        }
        let track = parse_track(body, chunk_start + 8, &mut time_sigs, &mut tempo_events, &mut warnings)?;
        tracks.push(track);
        found += 1;
    }

    time_sigs.sort_by_key(|(tick, _)| *tick);
    tempo_events.sort_by(|a, b| a.0.cmp(&b.0));

    let sections = sections_from_time_sigs(&time_sigs, tpq, &mut warnings);

    let mut parts = Vec::new();
    let mut used_names: Vec<String> = Vec::new();
    for (i, track) in tracks.iter().enumerate() {
        if !track.has_channel_events {
            continue;
        }
        let base_name = track.name.clone().unwrap_or_else(|| format!("track-{}", i + 1));
        let mut name = base_name.clone();
        let mut suffix = 2;
        while used_names.contains(&name) {
            name = format!("{base_name}-{suffix}");
            suffix += 1;
        }
        used_names.push(name.clone());
        let staff = parts.len() as u32 + 1;
        parts.push(build_part(name, track, staff, tpq, &sections, &mut warnings)?);
    }

    if parts.is_empty() || parts.iter().all(|p: &Part| p.voices.iter().all(|v| v.events.is_empty()))
    {
        return Err(SmfError::NoNotes);
    }

    let initial_tempo_bpm = tempo_events.first().map(|(_, bpm)| *bpm);
    let score = Score {
        work_ref: "midi-import".to_string(),
        title: tracks.iter().find_map(|t| t.name.clone()),
        ticks_per_quarter: tpq,
        parts,
    };
    score.validate()?;
    Ok(SmfImport { score, warnings, initial_tempo_bpm, tempo_events })
}

fn parse_track(
    body: &[u8],
    base_offset: usize,
    time_sigs: &mut Vec<(u64, Metre)>,
    tempo_events: &mut Vec<(u64, f64)>,
    warnings: &mut Vec<String>,
) -> Result<RawTrack, SmfError> {
    let mut cur = Cursor { bytes: body, pos: 0 };
    let mut track = RawTrack::default();
    let mut tick: u64 = 0;
    let mut running_status: Option<u8> = None;
    // FIFO of open note-ons per (channel, pitch).
    let mut open: Vec<((u8, u8), u64, u8)> = Vec::new();

    while cur.pos < body.len() {
        tick += cur.vlq()? as u64;
        let first = cur.u8()?;
        let status = if first & 0x80 != 0 {
            if first < 0xf0 {
                running_status = Some(first);
            }
            first
        } else {
            cur.pos -= 1;
            running_status.ok_or(SmfError::BadStatus {
                offset: base_offset + cur.pos,
                status: first,
            })?
        };

        match status {
            0x80..=0xef => {
                track.has_channel_events = true;
                let channel = status & 0x0f;
                match status & 0xf0 {
                    0x80 | 0x90 => {
                        let pitch = cur.u8()? & 0x7f;
                        let velocity = cur.u8()? & 0x7f;
                        let is_on = status & 0xf0 == 0x90 && velocity > 0;
                        if is_on {
                            open.push(((channel, pitch), tick, velocity));
                        } else {
                            // First open note with this key, in onset order.
                            if let Some(idx) =
                                open.iter().position(|(key, _, _)| *key == (channel, pitch))
                            {
                                let (_, onset, vel) = open.remove(idx);
                                track.notes.push(RawNote {
                                    onset_tick: onset,
                                    dur_ticks: tick.saturating_sub(onset),
                                    pitch,
                                    velocity: vel,
                                });
                            } else {
                                warnings.push(format!(
                                    "unmatched note-off for pitch {pitch} at tick {tick}"
                                ));
                            }
                        }
                    }
                    0xa0 | 0xb0 | 0xe0 => {
                        cur.take(2)?;
                    }
                    0xc0 => {
                        let program = cur.u8()? & 0x7f;
                        if track.program.is_none() {
                            track.program = Some(program);
                        }
                    }
                    0xd0 => {
                        cur.take(1)?;
                    }
                    _ => unreachable!(),
                }
            }
            0xff => {
                let meta_type = cur.u8()?;
                let len = cur.vlq()? as usize;
                let data = cur.take(len)?;
                match meta_type {
                    0x03 => {
                        if track.name.is_none() {
                            track.name = Some(String::from_utf8_lossy(data).trim().to_string());
                        }
                    }
                    0x51 => {
                        if data.len() == 3 {
                            let us = u32::from_be_bytes([0, data[0], data[1], data[2]]);
                            if us > 0 {
                                tempo_events.push((tick, 60_000_000.0 / us as f64));
                            }
                        }
                    }
                    0x58 => {
                        if data.len() >= 2 {
                            let numerator = data[0] as u32;
                            let denominator = 1u32 << data[1];
                            if let Ok(metre) = Metre::new(numerator, denominator) {
                                time_sigs.push((tick, metre));
                            } else {
                                warnings.push(format!(
                                    "ignored unsupported time signature {numerator}/{denominator}"
                                ));
                            }
                        }
                    }
                    0x2f => {
                        track.end_tick = tick;
                        break;
                    }
                    _ => {}
                }
            }
            0xf0 | 0xf7 => {
                let len = cur.vlq()? as usize;
                cur.take(len)?;
            }
            _ => {
                return Err(SmfError::BadStatus { offset: base_offset + cur.pos - 1, status });
            }
        }
    }
    if track.end_tick == 0 {
        track.end_tick = tick;
    }

    // Close anything still sounding at the end of the track.
    for ((_, pitch), onset, vel) in open {
        warnings.push(format!(
            "note-on without note-off for pitch {pitch}; closed at final tick {}",
            track.end_tick
        ));
        track.notes.push(RawNote {
            onset_tick: onset,
            dur_ticks: track.end_tick.saturating_sub(onset).max(1),
            pitch,
            velocity: vel,
        });
    }
    track.notes.sort_by_key(|n| (n.onset_tick, n.pitch));
    Ok(track)
}

/// Converts the global time-signature list into a section list shared by all
/// parts. Changes that fall mid-bar are deferred to the next bar line.
fn sections_from_time_sigs(
    time_sigs: &[(u64, Metre)],
    tpq: u32,
    warnings: &mut Vec<String>,
) -> Vec<Section> {
    let mut sections: Vec<Section> = Vec::new();
    let mut bar: u32 = 1;
    let mut bar_start = Beats::zero();
    let mut metre = Metre::COMMON;

    for (tick, new_metre) in time_sigs {
        let abs = Beats::new(*tick as i64, tpq as i64);
        // Advance bar counting under the current metre up to the change point.
        let bar_len = metre.bar_beats();
        if abs > bar_start {
            let full = ((abs - bar_start) / bar_len).floor().to_integer();
            bar += full as u32;
            bar_start += bar_len * Beats::from_integer(full);
            if abs > bar_start {
                warnings.push(format!(
                    "time signature change at tick {tick} is mid-bar; applied from bar {}",
                    bar + 1
                ));
                bar += 1;
                bar_start += bar_len;
            }
        }
        if sections.last().map(|s: &Section| s.metre) == Some(*new_metre) {
            continue;
        }
        if let Some(last) = sections.last_mut() {
            if last.start_bar == bar {
                last.metre = *new_metre;
                metre = *new_metre;
                continue;
            }
        }
        if sections.is_empty() && bar > 1 {
            // Bars before the first declared signature default to 4/4.
            sections.push(Section { start_bar: 1, metre: Metre::COMMON, clef: Clef::Treble });
        }
        sections.push(Section { start_bar: bar, metre: *new_metre, clef: Clef::Treble });
        metre = *new_metre;
    }
    if sections.is_empty() || sections[0].start_bar != 1 {
        let mut with_default =
            vec![Section { start_bar: 1, metre: Metre::COMMON, clef: Clef::Treble }];
        with_default.extend(sections);
        sections = with_default;
    }
    sections
}

fn build_part(
    name: String,
    track: &RawTrack,
    staff: u32,
    tpq: u32,
    sections: &[Section],
    warnings: &mut Vec<String>,
) -> Result<Part, SmfError> {
    // Greedy first-free voice assignment over onset-sorted notes.
    let mut voices: Vec<(Vec<SymbolicEvent>, Beats)> = Vec::new();
    for note in &track.notes {
        let onset = Beats::new(note.onset_tick as i64, tpq as i64);
        let mut dur = Beats::new(note.dur_ticks as i64, tpq as i64);
        if dur <= Beats::zero() {
            warnings.push(format!(
                "zero-length note at tick {}; stretched to one tick",
                note.onset_tick
            ));
            dur = Beats::new(1, tpq as i64);
        }
        let position = position_of(onset, sections)?;
        let event = SymbolicEvent {
            content: EventContent::Note(Note::from_midi(note.pitch)),
            position,
            duration_beats: dur,
            dynamic: Some(Dynamic::velocity(note.velocity)),
        };
        match voices.iter_mut().find(|(_, free_at)| *free_at <= onset) {
            Some((events, free_at)) => {
                events.push(event);
                *free_at = onset + dur;
            }
            None => voices.push((vec![event], onset + dur)),
        }
    }
    if voices.is_empty() {
        voices.push((Vec::new(), Beats::zero()));
    }
    Ok(Part {
        name,
        midi_program: track.program.unwrap_or(0),
        staff,
        voices: voices
            .into_iter()
            .enumerate()
            .map(|(i, (events, _))| Voice { index: i as u32 + 1, events })
            .collect(),
        sections: sections.to_vec(),
    })
}
