//! Melodic feature extraction: interval, rhythmic and melodic n-gram
//! patterns, each minable with or without rests.

use std::collections::BTreeMap;

use crate::rational::fraction_string;
use crate::score::{Beats, EventContent, Position, Score, Section, Voice};

/// The three pattern families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PatternFamily {
    Interval,
    Rhythmic,
    Melodic,
}

impl PatternFamily {
    pub fn label(self) -> &'static str {
        match self {
            PatternFamily::Interval => "interval",
            PatternFamily::Rhythmic => "rhythm",
            PatternFamily::Melodic => "melody",
        }
    }
}

/// What to tokenize and whether rests participate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatternKind {
    pub family: PatternFamily,
    pub include_rests: bool,
}

/// One token of a tokenized voice.
///
/// With `include_rests` set, rests appear as explicit [`Token::Rest`] markers
/// in all three families; an interval adjacent to a rest is itself the rest
/// marker, never a pitch difference across the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Token {
    /// Signed pitch difference in semitones between consecutive notes.
    Interval(i32),
    /// Duration of one note, in beats.
    Duration(Beats),
    /// Pitch class and duration of one note.
    Melodic { pitch_class: u8, duration: Beats },
    Rest,
}

impl Token {
    pub fn label(&self) -> String {
        match self {
            Token::Interval(i) => format!("{i:+}"),
            Token::Duration(d) => fraction_string(*d),
            Token::Melodic { pitch_class, duration } => {
                format!("{pitch_class}:{}", fraction_string(*duration))
            }
            Token::Rest => "R".to_string(),
        }
    }
}

/// Joined labels of a token sequence, e.g. `+2,-2`.
pub fn key_label(tokens: &[Token]) -> String {
    tokens.iter().map(Token::label).collect::<Vec<_>>().join(",")
}

/// A token bound to the events it came from.
#[derive(Debug, Clone, Copy)]
pub struct SourceToken {
    pub token: Token,
    /// Onset of the first contributing event.
    pub start: Position,
    /// Offset of the last contributing event, in absolute beats.
    pub end_abs_beats: Beats,
}

/// One place a pattern occurs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternOccurrence {
    pub part: String,
    pub voice: u32,
    pub start: Position,
    pub end: Position,
}

/// A pattern (canonical token sequence) with every place it occurs.
#[derive(Debug, Clone)]
pub struct PatternOccurrenceSet {
    pub kind: PatternKind,
    pub key: Vec<Token>,
    pub length: usize,
    pub occurrences: Vec<PatternOccurrence>,
    pub count: usize,
}

impl PatternOccurrenceSet {
    pub fn key_label(&self) -> String {
        key_label(&self.key)
    }

    /// Family-prefixed form used as the pattern identifier in the knowledge
    /// graph, e.g. `interval:+2,-2`.
    pub fn qualified_key(&self) -> String {
        format!("{}:{}", self.kind.family.label(), self.key_label())
    }
}

/// Tokenizes one voice under the given kind.
pub fn tokenize(voice: &Voice, kind: PatternKind) -> Vec<SourceToken> {
    let events = &voice.events;
    let mut out = Vec::new();
    match kind.family {
        PatternFamily::Interval => {
            for pair in events.windows(2) {
                let (a, b) = (&pair[0], &pair[1]);
                match (&a.content, &b.content) {
                    (EventContent::Note(na), EventContent::Note(nb)) => {
                        out.push(SourceToken {
                            token: Token::Interval(nb.midi_pitch as i32 - na.midi_pitch as i32),
                            start: a.position,
                            end_abs_beats: b.end_abs_beats(),
                        });
                    }
                    _ if kind.include_rests => {
                        out.push(SourceToken {
                            token: Token::Rest,
                            start: a.position,
                            end_abs_beats: b.end_abs_beats(),
                        });
                    }
                    // Without rests an interval never spans a rest: the rest
                    // breaks adjacency and the pair is dropped.
                    _ => {}
                }
            }
        }
        PatternFamily::Rhythmic | PatternFamily::Melodic => {
            for event in events {
                let token = match &event.content {
                    EventContent::Rest => {
                        if !kind.include_rests {
                            continue;
                        }
                        Token::Rest
                    }
                    EventContent::Note(n) => match kind.family {
                        PatternFamily::Rhythmic => Token::Duration(event.duration_beats),
                        PatternFamily::Melodic => Token::Melodic {
                            pitch_class: n.pitch_class(),
                            duration: event.duration_beats,
                        },
                        PatternFamily::Interval => unreachable!(),
                    },
                };
                out.push(SourceToken {
                    token,
                    start: event.position,
                    end_abs_beats: event.end_abs_beats(),
                });
            }
        }
    }
    out
}

/// Mines every n-gram with `n_min <= n <= n_max` occurring at least
/// `min_count` times across all voices of the score. Patterns are formed
/// within voices; occurrences aggregate across voices. Results are sorted by
/// count descending, then length descending, then key ascending.
pub fn mine_patterns(
    score: &Score,
    kind: PatternKind,
    n_min: usize,
    n_max: usize,
    min_count: usize,
) -> Vec<PatternOccurrenceSet> {
    assert!(n_min >= 1 && n_min <= n_max, "invalid n-gram range");
    assert!(min_count >= 2, "min_count below 2 would report every window");

    let mut by_key: BTreeMap<Vec<Token>, Vec<PatternOccurrence>> = BTreeMap::new();
    for part in &score.parts {
        for voice in &part.voices {
            let tokens = tokenize(voice, kind);
            for n in n_min..=n_max {
                if tokens.len() < n {
                    continue;
                }
                for window in tokens.windows(n) {
                    let key: Vec<Token> = window.iter().map(|t| t.token).collect();
                    let end = end_position(window[n - 1].end_abs_beats, &part.sections);
                    by_key.entry(key).or_default().push(PatternOccurrence {
                        part: part.name.clone(),
                        voice: voice.index,
                        start: window[0].start,
                        end,
                    });
                }
            }
        }
    }

    let mut out: Vec<PatternOccurrenceSet> = by_key
        .into_iter()
        .filter(|(_, occs)| occs.len() >= min_count)
        .map(|(key, mut occurrences)| {
            occurrences.sort_by(|a, b| {
                (a.start.abs_beats, &a.part, a.voice).cmp(&(b.start.abs_beats, &b.part, b.voice))
            });
            PatternOccurrenceSet {
                kind,
                length: key.len(),
                count: occurrences.len(),
                key,
                occurrences,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then(b.length.cmp(&a.length))
            .then(a.key.cmp(&b.key))
    });
    out
}

fn end_position(end_abs: Beats, sections: &[Section]) -> Position {
    crate::score::position_of(end_abs, sections).unwrap_or(Position {
        bar: 0,
        beat: Beats::from_integer(0),
        abs_beats: end_abs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::{
        abs_beats_of, Clef, EventContent, Metre, Note, Part, Position, Section, SymbolicEvent,
        Voice,
    };

    fn sections() -> Vec<Section> {
        vec![Section { start_bar: 1, metre: Metre::COMMON, clef: Clef::Treble }]
    }

    fn melody(midis: &[Option<u8>]) -> Score {
        // One event per beat; None is a rest.
        let secs = sections();
        let events = midis
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let bar = (i / 4) as u32 + 1;
                let beat = Beats::from_integer((i % 4) as i64);
                SymbolicEvent {
                    content: match m {
                        Some(p) => EventContent::Note(Note::from_midi(*p)),
                        None => EventContent::Rest,
                    },
                    position: Position {
                        bar,
                        beat,
                        abs_beats: abs_beats_of(bar, beat, &secs).unwrap(),
                    },
                    duration_beats: Beats::from_integer(1),
                    dynamic: None,
                }
            })
            .collect();
        let score = Score {
            work_ref: "t".into(),
            title: None,
            ticks_per_quarter: 480,
            parts: vec![Part {
                name: "P".into(),
                midi_program: 0,
                staff: 1,
                voices: vec![Voice { index: 1, events }],
                sections: secs,
            }],
        };
        score.validate().unwrap();
        score
    }

    const INTERVALS_NO_RESTS: PatternKind =
        PatternKind { family: PatternFamily::Interval, include_rests: false };
    const INTERVALS_WITH_RESTS: PatternKind =
        PatternKind { family: PatternFamily::Interval, include_rests: true };

    #[test]
    fn interval_tokens_basic() {
        let score = melody(&[Some(60), Some(62), Some(60)]);
        let tokens = tokenize(&score.parts[0].voices[0], INTERVALS_NO_RESTS);
        let vals: Vec<Token> = tokens.iter().map(|t| t.token).collect();
        assert_eq!(vals, vec![Token::Interval(2), Token::Interval(-2)]);
    }

    #[test]
    fn rest_breaks_adjacency_without_rests() {
        let score = melody(&[Some(60), None, Some(62)]);
        let tokens = tokenize(&score.parts[0].voices[0], INTERVALS_NO_RESTS);
        assert!(tokens.is_empty());
    }

    #[test]
    fn rest_marker_with_rests() {
        let score = melody(&[Some(60), None, Some(62)]);
        let tokens = tokenize(&score.parts[0].voices[0], INTERVALS_WITH_RESTS);
        let vals: Vec<Token> = tokens.iter().map(|t| t.token).collect();
        assert_eq!(vals, vec![Token::Rest, Token::Rest]);
    }

    #[test]
    fn melodic_tokens_carry_pitch_class_and_duration() {
        let score = melody(&[Some(60), Some(69), None]);
        let kind = PatternKind { family: PatternFamily::Melodic, include_rests: true };
        let tokens = tokenize(&score.parts[0].voices[0], kind);
        let vals: Vec<Token> = tokens.iter().map(|t| t.token).collect();
        assert_eq!(
            vals,
            vec![
                Token::Melodic { pitch_class: 0, duration: Beats::from_integer(1) },
                Token::Melodic { pitch_class: 9, duration: Beats::from_integer(1) },
                Token::Rest,
            ]
        );
    }

    #[test]
    fn alternating_melody_interval_bigram() {
        // C D C D C: interval sequence +2,-2,+2,-2
        let score = melody(&[Some(60), Some(62), Some(60), Some(62), Some(60)]);
        let sets = mine_patterns(&score, INTERVALS_NO_RESTS, 2, 2, 2);
        assert_eq!(sets.len(), 1);
        assert_eq!(sets[0].key_label(), "+2,-2");
        assert_eq!(sets[0].count, 2);
        assert_eq!(sets[0].occurrences[0].start.abs_beats, Beats::from_integer(0));
        assert_eq!(sets[0].occurrences[1].start.abs_beats, Beats::from_integer(2));
    }

    #[test]
    fn single_note_yields_nothing() {
        let score = melody(&[Some(60)]);
        let sets = mine_patterns(&score, INTERVALS_NO_RESTS, 1, 4, 2);
        assert!(sets.is_empty());
    }

    #[test]
    fn uniform_rhythm_trigram() {
        let score = melody(&[Some(60); 8]);
        let kind = PatternKind { family: PatternFamily::Rhythmic, include_rests: false };
        let sets = mine_patterns(&score, kind, 3, 3, 2);
        assert_eq!(sets.len(), 1);
        assert_eq!(sets[0].key_label(), "1,1,1");
        assert_eq!(sets[0].count, 6);
    }

    #[test]
    fn raising_min_count_never_adds_patterns() {
        let score = melody(&[Some(60), Some(62), Some(60), Some(62), Some(64), Some(60)]);
        for kind in [INTERVALS_NO_RESTS, INTERVALS_WITH_RESTS] {
            let loose = mine_patterns(&score, kind, 2, 4, 2);
            let tight = mine_patterns(&score, kind, 2, 4, 3);
            for t in &tight {
                assert!(loose.iter().any(|l| l.key == t.key && l.count >= t.count));
            }
            assert!(tight.len() <= loose.len());
        }
    }
}
