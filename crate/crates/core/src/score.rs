//! In-memory symbolic score model: parts, voices, sections and events.
//!
//! Beat offsets and durations are exact rationals so that position arithmetic
//! and pattern equality are bit-exact; seconds only appear after alignment.

use std::collections::BTreeSet;

use num_traits::Zero;
use thiserror::Error;

pub use crate::rational::Beats;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("score must contain at least one part")]
    NoParts,
    #[error("duplicate part name `{0}`")]
    DuplicatePart(String),
    #[error("part `{part}`: voice {voice} has unsorted or overlapping events near beat {at}")]
    VoiceOverlap { part: String, voice: u32, at: String },
    #[error("part `{part}`: no section covers bar {bar}")]
    UncoveredBar { part: String, bar: u32 },
    #[error("part `{part}`: sections out of order or overlapping at bar {bar}")]
    SectionOrder { part: String, bar: u32 },
    #[error("part `{part}`: event at bar {bar} has beat {beat} >= bar length {len}")]
    BeatPastBarEnd { part: String, bar: u32, beat: String, len: String },
    #[error("part `{part}`: event position at bar {bar} is inconsistent with the active metres")]
    PositionMismatch { part: String, bar: u32 },
    #[error("invalid metre denominator {0}: must be a power of two up to 32")]
    BadDenominator(u32),
    #[error("midi pitch {midi} does not match spelling {spelling}")]
    PitchMismatch { midi: u8, spelling: String },
    #[error("non-positive duration at bar {bar}")]
    NonPositiveDuration { bar: u32 },
    #[error("dynamic must carry a literal or a velocity")]
    EmptyDynamic,
    #[error("bar {0} lies before the first section")]
    BarBeforeFirstSection(u32),
    #[error("octave {0} out of range -1..=9")]
    OctaveRange(i8),
    #[error("part `{part}`: voice index must be positive")]
    VoiceIndexZero { part: String },
}

/// The seven natural note letters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NoteName {
    C,
    D,
    E,
    F,
    G,
    A,
    B,
}

impl NoteName {
    pub const ALL: [NoteName; 7] = [
        NoteName::C,
        NoteName::D,
        NoteName::E,
        NoteName::F,
        NoteName::G,
        NoteName::A,
        NoteName::B,
    ];

    pub fn letter(self) -> char {
        match self {
            NoteName::C => 'C',
            NoteName::D => 'D',
            NoteName::E => 'E',
            NoteName::F => 'F',
            NoteName::G => 'G',
            NoteName::A => 'A',
            NoteName::B => 'B',
        }
    }

    pub fn from_letter(c: char) -> Option<NoteName> {
        Some(match c.to_ascii_uppercase() {
            'C' => NoteName::C,
            'D' => NoteName::D,
            'E' => NoteName::E,
            'F' => NoteName::F,
            'G' => NoteName::G,
            'A' => NoteName::A,
            'B' => NoteName::B,
            _ => return None,
        })
    }
}

/// Semitone of the natural note within the octave: C=0, D=2, E=4, F=5, G=7, A=9, B=11.
pub fn natural_semitone(name: NoteName) -> u8 {
    match name {
        NoteName::C => 0,
        NoteName::D => 2,
        NoteName::E => 4,
        NoteName::F => 5,
        NoteName::G => 7,
        NoteName::A => 9,
        NoteName::B => 11,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Accidental {
    #[default]
    None,
    Sharp,
    Flat,
    DoubleSharp,
    DoubleFlat,
}

impl Accidental {
    pub fn offset(self) -> i16 {
        match self {
            Accidental::None => 0,
            Accidental::Sharp => 1,
            Accidental::Flat => -1,
            Accidental::DoubleSharp => 2,
            Accidental::DoubleFlat => -2,
        }
    }

    /// Spelling used by the HTS pitch grammar: `""`, `"#"`, `"b"`, `"##"`, `"bb"`.
    pub fn suffix(self) -> &'static str {
        match self {
            Accidental::None => "",
            Accidental::Sharp => "#",
            Accidental::Flat => "b",
            Accidental::DoubleSharp => "##",
            Accidental::DoubleFlat => "bb",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Accidental::None => "natural",
            Accidental::Sharp => "sharp",
            Accidental::Flat => "flat",
            Accidental::DoubleSharp => "double-sharp",
            Accidental::DoubleFlat => "double-flat",
        }
    }
}

/// A pitched note: spelling plus its MIDI number.
///
/// Invariant: `midi_pitch = 12 * (octave + 1) + natural_semitone(name) + accidental.offset()`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Note {
    pub name: NoteName,
    pub accidental: Accidental,
    pub octave: i8,
    pub midi_pitch: u8,
}

impl Note {
    /// Builds a note from its spelling, deriving the MIDI number.
    pub fn spelled(name: NoteName, accidental: Accidental, octave: i8) -> Result<Note, ScoreError> {
        if !(-1..=9).contains(&octave) {
            return Err(ScoreError::OctaveRange(octave));
        }
        let midi =
            12 * (octave as i16 + 1) + natural_semitone(name) as i16 + accidental.offset();
        if !(0..=127).contains(&midi) {
            return Err(ScoreError::PitchMismatch {
                midi: midi.clamp(0, 127) as u8,
                spelling: format!("{}{}{}", name.letter(), accidental.suffix(), octave),
            });
        }
        Ok(Note { name, accidental, octave, midi_pitch: midi as u8 })
    }

    /// Builds a note from a MIDI number using sharp spellings for black keys.
    pub fn from_midi(midi: u8) -> Note {
        debug_assert!(midi <= 127);
        let octave = (midi as i16 / 12 - 1) as i8;
        let (name, accidental) = match midi % 12 {
            0 => (NoteName::C, Accidental::None),
            1 => (NoteName::C, Accidental::Sharp),
            2 => (NoteName::D, Accidental::None),
            3 => (NoteName::D, Accidental::Sharp),
            4 => (NoteName::E, Accidental::None),
            5 => (NoteName::F, Accidental::None),
            6 => (NoteName::F, Accidental::Sharp),
            7 => (NoteName::G, Accidental::None),
            8 => (NoteName::G, Accidental::Sharp),
            9 => (NoteName::A, Accidental::None),
            10 => (NoteName::A, Accidental::Sharp),
            _ => (NoteName::B, Accidental::None),
        };
        Note { name, accidental, octave, midi_pitch: midi }
    }

    pub fn pitch_class(&self) -> u8 {
        self.midi_pitch % 12
    }

    fn check(&self) -> Result<(), ScoreError> {
        let expected = Note::spelled(self.name, self.accidental, self.octave)?;
        if expected.midi_pitch != self.midi_pitch {
            return Err(ScoreError::PitchMismatch {
                midi: self.midi_pitch,
                spelling: format!(
                    "{}{}{}",
                    self.name.letter(),
                    self.accidental.suffix(),
                    self.octave
                ),
            });
        }
        Ok(())
    }
}

/// Either a pitched note or a rest. Rests carry no pitch fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventContent {
    Note(Note),
    Rest,
}

impl EventContent {
    pub fn is_rest(&self) -> bool {
        matches!(self, EventContent::Rest)
    }

    pub fn note(&self) -> Option<&Note> {
        match self {
            EventContent::Note(n) => Some(n),
            EventContent::Rest => None,
        }
    }
}

/// Position of an event: bar number, beat offset within the bar, and the
/// absolute beat offset from the score start. All three are kept consistent
/// with the active metres.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Position {
    pub bar: u32,
    pub beat: Beats,
    pub abs_beats: Beats,
}

/// Dynamic marking: a literal such as "mf" and/or a MIDI velocity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dynamic {
    pub literal: Option<String>,
    pub midi_velocity: Option<u8>,
}

impl Dynamic {
    pub fn velocity(v: u8) -> Dynamic {
        Dynamic { literal: None, midi_velocity: Some(v) }
    }
}

/// One note or rest.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolicEvent {
    pub content: EventContent,
    pub position: Position,
    pub duration_beats: Beats,
    pub dynamic: Option<Dynamic>,
}

impl SymbolicEvent {
    pub fn end_abs_beats(&self) -> Beats {
        self.position.abs_beats + self.duration_beats
    }

    /// Velocity used for rendering: the event's own, else a medium default.
    pub fn effective_velocity(&self) -> u8 {
        self.dynamic
            .as_ref()
            .and_then(|d| d.midi_velocity)
            .unwrap_or(DEFAULT_VELOCITY)
    }
}

pub const DEFAULT_VELOCITY: u8 = 64;

/// Time signature of a section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Metre {
    pub numerator: u32,
    pub denominator: u32,
}

impl Metre {
    pub const COMMON: Metre = Metre { numerator: 4, denominator: 4 };

    pub fn new(numerator: u32, denominator: u32) -> Result<Metre, ScoreError> {
        if numerator == 0 || !matches!(denominator, 1 | 2 | 4 | 8 | 16 | 32) {
            return Err(ScoreError::BadDenominator(denominator));
        }
        Ok(Metre { numerator, denominator })
    }

    /// Bar length in beats; a beat is a quarter note, so 6/8 lasts 3 beats.
    pub fn bar_beats(&self) -> Beats {
        Beats::new(self.numerator as i64 * 4, self.denominator as i64)
    }
}

impl std::fmt::Display for Metre {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Clef {
    Treble,
    Bass,
    Alto,
    Tenor,
    Other(String),
}

impl Clef {
    pub fn label(&self) -> &str {
        match self {
            Clef::Treble => "treble",
            Clef::Bass => "bass",
            Clef::Alto => "alto",
            Clef::Tenor => "tenor",
            Clef::Other(s) => s,
        }
    }

    pub fn from_label(s: &str) -> Clef {
        match s {
            "treble" => Clef::Treble,
            "bass" => Clef::Bass,
            "alto" => Clef::Alto,
            "tenor" => Clef::Tenor,
            other => Clef::Other(other.to_string()),
        }
    }
}

/// A run of bars sharing one metre and clef, starting at `start_bar` and
/// extending until the next section of the same part.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Section {
    pub start_bar: u32,
    pub metre: Metre,
    pub clef: Clef,
}

/// A monophonic stream of events, sorted by onset and non-overlapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Voice {
    pub index: u32,
    pub events: Vec<SymbolicEvent>,
}

/// An instrument part: voices plus the section list governing its bars.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Part {
    pub name: String,
    pub midi_program: u8,
    pub staff: u32,
    pub voices: Vec<Voice>,
    pub sections: Vec<Section>,
}

/// A full symbolic score.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Score {
    pub work_ref: String,
    pub title: Option<String>,
    pub ticks_per_quarter: u32,
    pub parts: Vec<Part>,
}

/// One event in score order, with its owning part and voice.
#[derive(Debug, Clone, Copy)]
pub struct FlatEvent<'a> {
    pub part_index: usize,
    pub part_name: &'a str,
    pub voice_index: u32,
    pub event: &'a SymbolicEvent,
}

impl Score {
    /// Checks every structural invariant of the model.
    pub fn validate(&self) -> Result<(), ScoreError> {
        if self.parts.is_empty() {
            return Err(ScoreError::NoParts);
        }
        let mut names = BTreeSet::new();
        for part in &self.parts {
            if !names.insert(part.name.clone()) {
                return Err(ScoreError::DuplicatePart(part.name.clone()));
            }
            part.validate()?;
        }
        Ok(())
    }

    /// All events across parts and voices, globally sorted by absolute beat
    /// offset with ties broken by part order, then voice index.
    pub fn flatten_events(&self) -> Vec<FlatEvent<'_>> {
        let mut out = Vec::new();
        for (part_index, part) in self.parts.iter().enumerate() {
            for voice in &part.voices {
                for event in &voice.events {
                    out.push(FlatEvent {
                        part_index,
                        part_name: &part.name,
                        voice_index: voice.index,
                        event,
                    });
                }
            }
        }
        out.sort_by_key(|fe| (fe.event.position.abs_beats, fe.part_index, fe.voice_index));
        out
    }

    pub fn event_count(&self) -> usize {
        self.parts
            .iter()
            .map(|p| p.voices.iter().map(|v| v.events.len()).sum::<usize>())
            .sum()
    }

    /// Largest bar number of any event, 0 for an all-empty score.
    pub fn last_bar(&self) -> u32 {
        self.parts
            .iter()
            .flat_map(|p| p.voices.iter())
            .flat_map(|v| v.events.iter())
            .map(|e| e.position.bar)
            .max()
            .unwrap_or(0)
    }

    /// End of the last sounding event, in beats from the score start.
    pub fn end_abs_beats(&self) -> Beats {
        self.parts
            .iter()
            .flat_map(|p| p.voices.iter())
            .flat_map(|v| v.events.iter())
            .map(|e| e.end_abs_beats())
            .max()
            .unwrap_or_else(Beats::zero)
    }
}

impl Part {
    fn validate(&self) -> Result<(), ScoreError> {
        if self.voices.is_empty() {
            return Err(ScoreError::VoiceOverlap {
                part: self.name.clone(),
                voice: 0,
                at: "no voices".into(),
            });
        }
        let mut prev_bar = 0u32;
        for section in &self.sections {
            Metre::new(section.metre.numerator, section.metre.denominator)?;
            if section.start_bar == 0 || section.start_bar <= prev_bar && prev_bar != 0 {
                return Err(ScoreError::SectionOrder {
                    part: self.name.clone(),
                    bar: section.start_bar,
                });
            }
            prev_bar = section.start_bar;
        }
        for voice in &self.voices {
            if voice.index == 0 {
                return Err(ScoreError::VoiceIndexZero { part: self.name.clone() });
            }
            let mut prev_end: Option<Beats> = None;
            for event in &voice.events {
                if let EventContent::Note(n) = &event.content {
                    n.check()?;
                }
                if event.duration_beats <= Beats::zero() {
                    return Err(ScoreError::NonPositiveDuration { bar: event.position.bar });
                }
                if let Some(d) = &event.dynamic {
                    if d.literal.is_none() && d.midi_velocity.is_none() {
                        return Err(ScoreError::EmptyDynamic);
                    }
                }
                // Position consistency against the active metres.
                let expected = abs_beats_of(event.position.bar, event.position.beat, &self.sections)
                    .map_err(|_| ScoreError::UncoveredBar {
                        part: self.name.clone(),
                        bar: event.position.bar,
                    })?;
                if expected != event.position.abs_beats {
                    return Err(ScoreError::PositionMismatch {
                        part: self.name.clone(),
                        bar: event.position.bar,
                    });
                }
                let bar_len = metre_at(event.position.bar, &self.sections)
                    .ok_or(ScoreError::UncoveredBar {
                        part: self.name.clone(),
                        bar: event.position.bar,
                    })?
                    .bar_beats();
                if event.position.beat >= bar_len {
                    return Err(ScoreError::BeatPastBarEnd {
                        part: self.name.clone(),
                        bar: event.position.bar,
                        beat: crate::rational::fraction_string(event.position.beat),
                        len: crate::rational::fraction_string(bar_len),
                    });
                }
                if let Some(prev) = prev_end {
                    if event.position.abs_beats < prev {
                        return Err(ScoreError::VoiceOverlap {
                            part: self.name.clone(),
                            voice: voice.index,
                            at: crate::rational::fraction_string(event.position.abs_beats),
                        });
                    }
                }
                prev_end = Some(event.end_abs_beats());
            }
        }
        Ok(())
    }
}

/// Metre in force at `bar`, or `None` when the bar precedes the first section.
pub fn metre_at(bar: u32, sections: &[Section]) -> Option<Metre> {
    let mut found = None;
    for section in sections {
        if section.start_bar <= bar {
            found = Some(section.metre);
        } else {
            break;
        }
    }
    found
}

/// Absolute beat offset of (bar, beat): the sum of full-bar lengths before
/// `bar` under the active metres, plus `beat`.
pub fn abs_beats_of(bar: u32, beat: Beats, sections: &[Section]) -> Result<Beats, ScoreError> {
    if sections.is_empty() || bar < sections[0].start_bar {
        return Err(ScoreError::BarBeforeFirstSection(bar));
    }
    let mut acc = Beats::zero();
    for (i, section) in sections.iter().enumerate() {
        let section_end = sections.get(i + 1).map(|s| s.start_bar).unwrap_or(u32::MAX);
        if bar < section_end {
            acc += section.metre.bar_beats() * Beats::from_integer((bar - section.start_bar) as i64);
            return Ok(acc + beat);
        }
        acc +=
            section.metre.bar_beats() * Beats::from_integer((section_end - section.start_bar) as i64);
    }
    unreachable!("loop returns before exhausting sections");
}

/// Inverse of [`abs_beats_of`]: splits an absolute offset into (bar, beat).
pub fn position_of(abs: Beats, sections: &[Section]) -> Result<Position, ScoreError> {
    if sections.is_empty() || abs < Beats::zero() {
        return Err(ScoreError::BarBeforeFirstSection(0));
    }
    let mut acc = Beats::zero();
    for (i, section) in sections.iter().enumerate() {
        let bar_len = section.metre.bar_beats();
        let section_end = sections.get(i + 1).map(|s| s.start_bar);
        let bars_in_section = section_end.map(|e| (e - section.start_bar) as i64);
        let section_beats = bars_in_section.map(|n| bar_len * Beats::from_integer(n));
        let within = abs - acc;
        let in_this_section = match section_beats {
            Some(total) => within < total,
            None => true,
        };
        if in_this_section {
            let bar_offset = (within / bar_len).floor().to_integer();
            let beat = within - bar_len * Beats::from_integer(bar_offset);
            return Ok(Position {
                bar: section.start_bar + bar_offset as u32,
                beat,
                abs_beats: abs,
            });
        }
        acc += section_beats.expect("bounded section");
    }
    unreachable!("last section is unbounded");
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sections_44() -> Vec<Section> {
        vec![Section { start_bar: 1, metre: Metre::COMMON, clef: Clef::Treble }]
    }

    fn quarter_note(midi: u8, bar: u32, beat: i64, sections: &[Section]) -> SymbolicEvent {
        let beat = Beats::from_integer(beat);
        SymbolicEvent {
            content: EventContent::Note(Note::from_midi(midi)),
            position: Position {
                bar,
                beat,
                abs_beats: abs_beats_of(bar, beat, sections).unwrap(),
            },
            duration_beats: Beats::from_integer(1),
            dynamic: None,
        }
    }

    fn one_part_score(events: Vec<SymbolicEvent>) -> Score {
        Score {
            work_ref: "test".into(),
            title: None,
            ticks_per_quarter: 480,
            parts: vec![Part {
                name: "P".into(),
                midi_program: 0,
                staff: 1,
                voices: vec![Voice { index: 1, events }],
                sections: sections_44(),
            }],
        }
    }

    #[test]
    fn natural_semitones_match_pitch_classes() {
        assert_eq!(natural_semitone(NoteName::C), 0);
        assert_eq!(natural_semitone(NoteName::B), 11);
        assert_eq!(natural_semitone(NoteName::F), 5);
        assert_eq!(natural_semitone(NoteName::D), 2);
        assert_eq!(natural_semitone(NoteName::E), 4);
        assert_eq!(natural_semitone(NoteName::G), 7);
        assert_eq!(natural_semitone(NoteName::A), 9);
    }

    #[test]
    fn midi_reconstruction_formula() {
        // midi = 12 * (octave + 1) + natural + accidental offset
        let n = Note::spelled(NoteName::C, Accidental::None, 4).unwrap();
        assert_eq!(n.midi_pitch, 60);
        let n = Note::spelled(NoteName::C, Accidental::None, 5).unwrap();
        assert_eq!(n.midi_pitch, 72);
        let n = Note::spelled(NoteName::A, Accidental::None, 4).unwrap();
        assert_eq!(n.midi_pitch, 69);
        let n = Note::spelled(NoteName::B, Accidental::Flat, 3).unwrap();
        assert_eq!(n.midi_pitch, 58);
        let n = Note::spelled(NoteName::F, Accidental::DoubleSharp, 2).unwrap();
        assert_eq!(n.midi_pitch, 43);
    }

    #[test]
    fn from_midi_round_trips_formula() {
        for midi in 0u8..=127 {
            let n = Note::from_midi(midi);
            let back = Note::spelled(n.name, n.accidental, n.octave).unwrap();
            assert_eq!(back.midi_pitch, midi);
        }
    }

    #[test]
    fn abs_beats_examples() {
        let s = sections_44();
        assert_eq!(
            abs_beats_of(1, Beats::zero(), &s).unwrap(),
            Beats::zero()
        );
        // bar 2 beat 1 in 4/4: 4 beats of bar 1 plus 1
        assert_eq!(
            abs_beats_of(2, Beats::from_integer(1), &s).unwrap(),
            Beats::from_integer(5)
        );
        // 3/4 throughout: bar 3 starts after 2 bars of 3 beats
        let s34 = vec![Section {
            start_bar: 1,
            metre: Metre::new(3, 4).unwrap(),
            clef: Clef::Bass,
        }];
        assert_eq!(
            abs_beats_of(3, Beats::zero(), &s34).unwrap(),
            Beats::from_integer(6)
        );
    }

    #[test]
    fn abs_beats_before_first_section_errors() {
        let s = vec![Section { start_bar: 3, metre: Metre::COMMON, clef: Clef::Treble }];
        assert!(abs_beats_of(2, Beats::zero(), &s).is_err());
    }

    #[test]
    fn abs_beats_strictly_increasing() {
        let s = vec![
            Section { start_bar: 1, metre: Metre::COMMON, clef: Clef::Treble },
            Section { start_bar: 3, metre: Metre::new(3, 4).unwrap(), clef: Clef::Treble },
            Section { start_bar: 6, metre: Metre::new(6, 8).unwrap(), clef: Clef::Treble },
        ];
        let mut last = None;
        for bar in 1..=10u32 {
            for beat_num in 0..4i64 {
                let beat = Beats::new(beat_num, 2);
                if beat >= metre_at(bar, &s).unwrap().bar_beats() {
                    continue;
                }
                let abs = abs_beats_of(bar, beat, &s).unwrap();
                if let Some(prev) = last {
                    assert!(abs > prev, "bar {bar} beat {beat_num}/2 not increasing");
                }
                last = Some(abs);
            }
        }
    }

    #[test]
    fn position_of_inverts_abs_beats_of() {
        let s = vec![
            Section { start_bar: 1, metre: Metre::COMMON, clef: Clef::Treble },
            Section { start_bar: 4, metre: Metre::new(3, 4).unwrap(), clef: Clef::Alto },
        ];
        for bar in 1..=8u32 {
            for num in 0..6i64 {
                let beat = Beats::new(num, 2);
                if beat >= metre_at(bar, &s).unwrap().bar_beats() {
                    continue;
                }
                let abs = abs_beats_of(bar, beat, &s).unwrap();
                let pos = position_of(abs, &s).unwrap();
                assert_eq!((pos.bar, pos.beat), (bar, beat));
            }
        }
    }

    #[test]
    fn flatten_is_sorted_and_complete() {
        let sections = sections_44();
        let mut score = one_part_score(vec![
            quarter_note(60, 1, 0, &sections),
            quarter_note(62, 1, 1, &sections),
            quarter_note(64, 1, 2, &sections),
        ]);
        score.parts.push(Part {
            name: "Q".into(),
            midi_program: 0,
            staff: 2,
            voices: vec![Voice {
                index: 1,
                events: vec![quarter_note(48, 1, 0, &sections)],
            }],
            sections: sections_44(),
        });
        score.validate().unwrap();
        let flat = score.flatten_events();
        assert_eq!(flat.len(), 4);
        // Tied onsets resolve by part order.
        assert_eq!(flat[0].part_name, "P");
        assert_eq!(flat[1].part_name, "Q");
        let abs: Vec<_> = flat.iter().map(|f| f.event.position.abs_beats).collect();
        let sorted = {
            let mut v = abs.clone();
            v.sort();
            v
        };
        assert_eq!(abs, sorted);
    }

    #[test]
    fn empty_voice_contributes_nothing() {
        let sections = sections_44();
        let mut score = one_part_score(vec![quarter_note(60, 1, 0, &sections)]);
        score.parts[0].voices.push(Voice { index: 2, events: vec![] });
        score.validate().unwrap();
        assert_eq!(score.flatten_events().len(), 1);
    }

    #[test]
    fn overlap_rejected() {
        let sections = sections_44();
        let mut e1 = quarter_note(60, 1, 0, &sections);
        e1.duration_beats = Beats::from_integer(2);
        let e2 = quarter_note(62, 1, 1, &sections);
        let score = one_part_score(vec![e1, e2]);
        assert!(matches!(score.validate(), Err(ScoreError::VoiceOverlap { .. })));
    }

    #[test]
    fn beat_past_bar_end_rejected() {
        let e = SymbolicEvent {
            content: EventContent::Rest,
            position: Position {
                bar: 1,
                beat: Beats::from_integer(4),
                abs_beats: Beats::from_integer(4),
            },
            duration_beats: Beats::from_integer(1),
            dynamic: None,
        };
        let score = one_part_score(vec![e]);
        assert!(matches!(score.validate(), Err(ScoreError::BeatPastBarEnd { .. })));
    }

    #[test]
    fn inconsistent_pitch_rejected() {
        let sections = sections_44();
        let mut e = quarter_note(60, 1, 0, &sections);
        if let EventContent::Note(n) = &mut e.content {
            n.midi_pitch = 61; // C4 spelled, but wrong number
        }
        let score = one_part_score(vec![e]);
        assert!(matches!(score.validate(), Err(ScoreError::PitchMismatch { .. })));
    }
}
