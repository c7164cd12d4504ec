//! HTS, a line-oriented text score format used as the golden fixture syntax.
//!
//! ```text
//! #score tpq=480 title="Wie bin ich doch so herzlich froh"
//! #part Soprano 52 1
//! #section Soprano 4/4 treble startbar=1
//! 1:0 1 C5 vel=80 dyn=mf
//! 1:1 1/2 R
//! ```
//!
//! Directives start with `#` at column zero; every other non-blank line is an
//! event `<bar>:<beat> <duration> <pitch|R> [vel=..] [voice=..] [dyn=..]
//! [part=..]`. Events without a `part=` tag belong to the most recently
//! declared part. Beats and durations are rationals like `3/2`.

use num_traits::Zero;
use thiserror::Error;

use crate::rational::{fraction_string, parse_fraction};
use crate::score::{
    abs_beats_of, metre_at, Accidental, Beats, Clef, Dynamic, EventContent, Metre, Note, NoteName,
    Part, Position, Score, ScoreError, Section, SymbolicEvent, Voice,
};

#[derive(Debug, Error)]
pub enum HtsError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: undeclared part `{part}`")]
    UndeclaredPart { line: usize, part: String },
    #[error("line {line}: malformed pitch `{pitch}`")]
    BadPitch { line: usize, pitch: String },
    #[error("line {line}: beat {beat} is outside bar {bar} (bar length {len})")]
    BeatOutsideBar { line: usize, bar: u32, beat: String, len: String },
    #[error("line {line}: bar {bar} is not covered by any declared section")]
    NoSection { line: usize, bar: u32 },
    #[error("score has no parts")]
    Empty,
    #[error(transparent)]
    Model(#[from] ScoreError),
}

fn syntax(line: usize, msg: impl Into<String>) -> HtsError {
    HtsError::Syntax { line, msg: msg.into() }
}

/// Work identifier derived from a title; HTS does not carry one explicitly.
pub fn derive_work_ref(title: Option<&str>) -> String {
    match title {
        None => "untitled-work".to_string(),
        Some(t) => {
            let mut out = String::new();
            let mut prev_dash = true;
            for c in t.to_lowercase().chars() {
                if c.is_alphanumeric() {
                    out.push(c);
                    prev_dash = false;
                } else if !prev_dash {
                    out.push('-');
                    prev_dash = true;
                }
            }
            while out.ends_with('-') {
                out.pop();
            }
            if out.is_empty() {
                "untitled-work".to_string()
            } else {
                out
            }
        }
    }
}

/// Parses a pitch token like `C5`, `Bb3`, `F##-1`.
pub fn parse_pitch(token: &str) -> Option<(NoteName, Accidental, i8)> {
    let mut chars = token.chars();
    let name = NoteName::from_letter(chars.next()?)?;
    let rest: String = chars.collect();
    let (accidental, octave_str) = if let Some(s) = rest.strip_prefix("##") {
        (Accidental::DoubleSharp, s)
    } else if let Some(s) = rest.strip_prefix("bb") {
        (Accidental::DoubleFlat, s)
    } else if let Some(s) = rest.strip_prefix('#') {
        (Accidental::Sharp, s)
    } else if let Some(s) = rest.strip_prefix('b') {
        (Accidental::Flat, s)
    } else {
        (Accidental::None, rest.as_str())
    };
    let octave: i8 = octave_str.parse().ok()?;
    if !(-1..=9).contains(&octave) {
        return None;
    }
    Some((name, accidental, octave))
}

struct PartBuilder {
    name: String,
    midi_program: u8,
    staff: u32,
    sections: Vec<Section>,
    // voice index -> events, in first-appearance order
    voices: Vec<(u32, Vec<SymbolicEvent>)>,
}

impl PartBuilder {
    fn voice_mut(&mut self, index: u32) -> &mut Vec<SymbolicEvent> {
        if let Some(pos) = self.voices.iter().position(|(i, _)| *i == index) {
            return &mut self.voices[pos].1;
        }
        self.voices.push((index, Vec::new()));
        &mut self.voices.last_mut().unwrap().1
    }
}

/// Parses an HTS document into a validated [`Score`].
pub fn parse_hts(text: &str) -> Result<Score, HtsError> {
    let mut tpq: u32 = 480;
    let mut title: Option<String> = None;
    let mut parts: Vec<PartBuilder> = Vec::new();
    let mut current_part: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() {
            continue;
        }
        if let Some(directive) = line.strip_prefix('#') {
            let mut fields = directive.split_whitespace();
            match fields.next() {
                Some("score") => {
                    let rest = directive.strip_prefix("score").unwrap_or("").trim();
                    for (key, value) in parse_score_fields(rest, line_no)? {
                        match key.as_str() {
                            "tpq" => {
                                tpq = value
                                    .parse::<u32>()
                                    .ok()
                                    .filter(|v| *v > 0)
                                    .ok_or_else(|| {
                                        syntax(line_no, "tpq must be a positive integer")
                                    })?;
                            }
                            "title" => title = Some(value),
                            other => {
                                return Err(syntax(
                                    line_no,
                                    format!("unknown #score field `{other}`"),
                                ))
                            }
                        }
                    }
                }
                Some("part") => {
                    let name = fields
                        .next()
                        .ok_or_else(|| syntax(line_no, "#part needs a name"))?
                        .to_string();
                    if parts.iter().any(|p| p.name == name) {
                        return Err(syntax(line_no, format!("duplicate part `{name}`")));
                    }
                    let program: u8 = fields
                        .next()
                        .and_then(|f| f.parse().ok())
                        .filter(|p| *p <= 127)
                        .ok_or_else(|| syntax(line_no, "#part needs a MIDI program 0-127"))?;
                    let staff: u32 = fields
                        .next()
                        .and_then(|f| f.parse().ok())
                        .filter(|s| *s > 0)
                        .ok_or_else(|| syntax(line_no, "#part needs a positive staff number"))?;
                    if fields.next().is_some() {
                        return Err(syntax(line_no, "trailing fields after #part"));
                    }
                    parts.push(PartBuilder {
                        name,
                        midi_program: program,
                        staff,
                        sections: Vec::new(),
                        voices: Vec::new(),
                    });
                    current_part = Some(parts.len() - 1);
                }
                Some("section") => {
                    let part_name = fields
                        .next()
                        .ok_or_else(|| syntax(line_no, "#section needs a part name"))?;
                    let part_idx = parts.iter().position(|p| p.name == part_name).ok_or_else(
                        || HtsError::UndeclaredPart { line: line_no, part: part_name.to_string() },
                    )?;
                    let metre_tok = fields
                        .next()
                        .ok_or_else(|| syntax(line_no, "#section needs a metre like 4/4"))?;
                    let (num, den) = metre_tok
                        .split_once('/')
                        .and_then(|(n, d)| Some((n.parse::<u32>().ok()?, d.parse::<u32>().ok()?)))
                        .ok_or_else(|| syntax(line_no, "malformed metre"))?;
                    let metre = Metre::new(num, den).map_err(|e| syntax(line_no, e.to_string()))?;
                    let clef_tok = fields
                        .next()
                        .ok_or_else(|| syntax(line_no, "#section needs a clef"))?;
                    let start_bar = fields
                        .next()
                        .and_then(|f| f.strip_prefix("startbar="))
                        .and_then(|f| f.parse::<u32>().ok())
                        .filter(|b| *b > 0)
                        .ok_or_else(|| syntax(line_no, "#section needs startbar=<positive int>"))?;
                    if fields.next().is_some() {
                        return Err(syntax(line_no, "trailing fields after #section"));
                    }
                    parts[part_idx].sections.push(Section {
                        start_bar,
                        metre,
                        clef: Clef::from_label(clef_tok),
                    });
                }
                Some(other) => {
                    return Err(syntax(line_no, format!("unknown directive `#{other}`")));
                }
                None => return Err(syntax(line_no, "empty directive")),
            }
            continue;
        }

        // Event line.
        let mut fields = line.split_whitespace();
        let pos_tok = fields.next().ok_or_else(|| syntax(line_no, "empty event line"))?;
        let (bar_s, beat_s) = pos_tok
            .split_once(':')
            .ok_or_else(|| syntax(line_no, "event position must be <bar>:<beat>"))?;
        let bar: u32 = bar_s
            .parse()
            .ok()
            .filter(|b| *b > 0)
            .ok_or_else(|| syntax(line_no, "bar must be a positive integer"))?;
        let beat = parse_fraction(beat_s)
            .filter(|b| *b >= Beats::zero())
            .ok_or_else(|| syntax(line_no, "beat must be a non-negative rational"))?;
        let dur_tok = fields.next().ok_or_else(|| syntax(line_no, "event needs a duration"))?;
        let duration = parse_fraction(dur_tok)
            .filter(|d| *d > Beats::zero())
            .ok_or_else(|| syntax(line_no, "duration must be a positive rational"))?;
        let pitch_tok =
            fields.next().ok_or_else(|| syntax(line_no, "event needs a pitch or R"))?;

        let mut velocity: Option<u8> = None;
        let mut voice_index: u32 = 1;
        let mut dyn_literal: Option<String> = None;
        let mut part_override: Option<String> = None;
        for tag in fields {
            if let Some(v) = tag.strip_prefix("vel=") {
                velocity = Some(
                    v.parse::<u8>()
                        .ok()
                        .filter(|v| *v <= 127)
                        .ok_or_else(|| syntax(line_no, "vel= must be 0-127"))?,
                );
            } else if let Some(v) = tag.strip_prefix("voice=") {
                voice_index = v
                    .parse::<u32>()
                    .ok()
                    .filter(|v| *v > 0)
                    .ok_or_else(|| syntax(line_no, "voice= must be a positive integer"))?;
            } else if let Some(v) = tag.strip_prefix("dyn=") {
                if v.is_empty() {
                    return Err(syntax(line_no, "dyn= must not be empty"));
                }
                dyn_literal = Some(v.to_string());
            } else if let Some(v) = tag.strip_prefix("part=") {
                part_override = Some(v.to_string());
            } else {
                return Err(syntax(line_no, format!("unknown event tag `{tag}`")));
            }
        }

        let part_idx = match part_override {
            Some(name) => parts
                .iter()
                .position(|p| p.name == name)
                .ok_or(HtsError::UndeclaredPart { line: line_no, part: name })?,
            None => current_part.ok_or_else(|| syntax(line_no, "event before any #part"))?,
        };

        let content = if pitch_tok == "R" {
            EventContent::Rest
        } else {
            let (name, accidental, octave) = parse_pitch(pitch_tok).ok_or_else(|| {
                HtsError::BadPitch { line: line_no, pitch: pitch_tok.to_string() }
            })?;
            let note = Note::spelled(name, accidental, octave).map_err(|_| HtsError::BadPitch {
                line: line_no,
                pitch: pitch_tok.to_string(),
            })?;
            EventContent::Note(note)
        };

        let sections = &parts[part_idx].sections;
        let metre = metre_at(bar, sections).ok_or(HtsError::NoSection { line: line_no, bar })?;
        if beat >= metre.bar_beats() {
            return Err(HtsError::BeatOutsideBar {
                line: line_no,
                bar,
                beat: fraction_string(beat),
                len: fraction_string(metre.bar_beats()),
            });
        }
        let abs = abs_beats_of(bar, beat, sections)
            .map_err(|_| HtsError::NoSection { line: line_no, bar })?;

        let dynamic = if velocity.is_some() || dyn_literal.is_some() {
            Some(Dynamic { literal: dyn_literal, midi_velocity: velocity })
        } else {
            None
        };
        parts[part_idx].voice_mut(voice_index).push(SymbolicEvent {
            content,
            position: Position { bar, beat, abs_beats: abs },
            duration_beats: duration,
            dynamic,
        });
    }

    if parts.is_empty() {
        return Err(HtsError::Empty);
    }

    let score = Score {
        work_ref: derive_work_ref(title.as_deref()),
        title,
        ticks_per_quarter: tpq,
        parts: parts
            .into_iter()
            .map(|pb| {
                let voices = pb
                    .voices
                    .into_iter()
                    .map(|(index, mut events)| {
                        events.sort_by_key(|e| e.position.abs_beats);
                        Voice { index, events }
                    })
                    .collect::<Vec<_>>();
                Part {
                    name: pb.name,
                    midi_program: pb.midi_program,
                    staff: pb.staff,
                    voices: if voices.is_empty() {
                        vec![Voice { index: 1, events: Vec::new() }]
                    } else {
                        voices
                    },
                    sections: pb.sections,
                }
            })
            .collect(),
    };
    score.validate()?;
    Ok(score)
}

/// Serializes a score to canonical HTS text; `parse_hts` inverts it.
pub fn write_hts(score: &Score) -> String {
    let mut out = String::new();
    out.push_str(&format!("#score tpq={}", score.ticks_per_quarter));
    if let Some(title) = &score.title {
        out.push_str(&format!(" title=\"{title}\""));
    }
    out.push('\n');
    for part in &score.parts {
        out.push_str(&format!("#part {} {} {}\n", part.name, part.midi_program, part.staff));
        for section in &part.sections {
            out.push_str(&format!(
                "#section {} {} {} startbar={}\n",
                part.name,
                section.metre,
                section.clef.label(),
                section.start_bar
            ));
        }
        let tag_voices = !(part.voices.len() == 1 && part.voices[0].index == 1);
        for voice in &part.voices {
            for event in &voice.events {
                out.push_str(&format!(
                    "{}:{} {}",
                    event.position.bar,
                    fraction_string(event.position.beat),
                    fraction_string(event.duration_beats)
                ));
                match &event.content {
                    EventContent::Rest => out.push_str(" R"),
                    EventContent::Note(n) => out.push_str(&format!(
                        " {}{}{}",
                        n.name.letter(),
                        n.accidental.suffix(),
                        n.octave
                    )),
                }
                if let Some(v) = event.dynamic.as_ref().and_then(|d| d.midi_velocity) {
                    out.push_str(&format!(" vel={v}"));
                }
                if tag_voices {
                    out.push_str(&format!(" voice={}", voice.index));
                }
                if let Some(l) = event.dynamic.as_ref().and_then(|d| d.literal.as_ref()) {
                    out.push_str(&format!(" dyn={l}"));
                }
                out.push('\n');
            }
        }
    }
    out
}

fn parse_score_fields(rest: &str, line_no: usize) -> Result<Vec<(String, String)>, HtsError> {
    // tpq=480 title="free text with spaces"
    let mut out = Vec::new();
    let mut s = rest.trim();
    while !s.is_empty() {
        let eq =
            s.find('=').ok_or_else(|| syntax(line_no, "expected key=value in #score"))?;
        let key = s[..eq].trim().to_string();
        let after = &s[eq + 1..];
        if let Some(stripped) = after.strip_prefix('"') {
            let close = stripped
                .find('"')
                .ok_or_else(|| syntax(line_no, "unterminated quoted value"))?;
            out.push((key, stripped[..close].to_string()));
            s = stripped[close + 1..].trim_start();
        } else {
            let end = after.find(char::is_whitespace).unwrap_or(after.len());
            out.push((key, after[..end].to_string()));
            s = after[end..].trim_start();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_event_line() {
        let text = "#part Sop 52 1\n#section Sop 4/4 treble startbar=1\n1:0 1 C5 vel=80\n";
        let score = parse_hts(text).unwrap();
        assert_eq!(score.parts.len(), 1);
        let ev = &score.parts[0].voices[0].events[0];
        match &ev.content {
            EventContent::Note(n) => assert_eq!(n.midi_pitch, 72),
            EventContent::Rest => panic!("expected note"),
        }
        assert_eq!(ev.dynamic.as_ref().unwrap().midi_velocity, Some(80));
    }

    #[test]
    fn rest_line() {
        let text = "#part P 0 1\n#section P 4/4 treble startbar=1\n1:0 1 R\n";
        let score = parse_hts(text).unwrap();
        let ev = &score.parts[0].voices[0].events[0];
        assert!(ev.content.is_rest());
        assert_eq!(ev.duration_beats, Beats::from_integer(1));
    }

    #[test]
    fn beat_outside_bar_names_line() {
        let text = "#part P 0 1\n#section P 4/4 treble startbar=1\n1:4 1 C4\n";
        match parse_hts(text) {
            Err(HtsError::BeatOutsideBar { line, bar, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(bar, 1);
            }
            other => panic!("expected BeatOutsideBar, got {other:?}"),
        }
    }

    #[test]
    fn undeclared_part_rejected() {
        let text = "#part P 0 1\n#section P 4/4 treble startbar=1\n1:0 1 C4 part=Q\n";
        assert!(matches!(parse_hts(text), Err(HtsError::UndeclaredPart { line: 3, .. })));
    }

    #[test]
    fn malformed_pitch_rejected() {
        let text = "#part P 0 1\n#section P 4/4 treble startbar=1\n1:0 1 H4\n";
        assert!(matches!(parse_hts(text), Err(HtsError::BadPitch { line: 3, .. })));
    }

    #[test]
    fn negative_octave_pitch() {
        assert_eq!(
            parse_pitch("C#-1"),
            Some((NoteName::C, Accidental::Sharp, -1))
        );
        assert_eq!(parse_pitch("Bbb7"), Some((NoteName::B, Accidental::DoubleFlat, 7)));
        assert!(parse_pitch("C10").is_none());
    }

    #[test]
    fn round_trip_fixture() {
        let text = concat!(
            "#score tpq=480 title=\"Two Voices\"\n",
            "#part Sop 52 1\n",
            "#section Sop 4/4 treble startbar=1\n",
            "#section Sop 3/4 treble startbar=3\n",
            "1:0 1 C5 vel=80 voice=1 dyn=mf\n",
            "1:1 1/2 D5 voice=1\n",
            "1:0 2 E4 voice=2\n",
            "3:0 3 R voice=1\n",
            "#part Bass 42 2\n",
            "#section Bass 4/4 bass startbar=1\n",
            "1:0 4 C2\n",
        );
        let score = parse_hts(text).unwrap();
        let emitted = write_hts(&score);
        let back = parse_hts(&emitted).unwrap();
        assert_eq!(score, back);
        // Two-voice part keeps explicit voice tags.
        assert!(emitted.lines().filter(|l| l.contains("voice=")).count() >= 4);
    }

    #[test]
    fn empty_voice_part_round_trips_header_only() {
        let score = Score {
            work_ref: derive_work_ref(None),
            title: None,
            ticks_per_quarter: 96,
            parts: vec![Part {
                name: "P".into(),
                midi_program: 5,
                staff: 1,
                voices: vec![Voice { index: 1, events: vec![] }],
                sections: vec![Section {
                    start_bar: 1,
                    metre: Metre::COMMON,
                    clef: Clef::Treble,
                }],
            }],
        };
        let emitted = write_hts(&score);
        let back = parse_hts(&emitted).unwrap();
        assert_eq!(score, back);
    }

    #[test]
    fn work_ref_slug() {
        assert_eq!(derive_work_ref(Some("Wie schön leuchtet!")), "wie-schön-leuchtet");
        assert_eq!(derive_work_ref(None), "untitled-work");
        assert_eq!(derive_work_ref(Some("---")), "untitled-work");
    }
}
