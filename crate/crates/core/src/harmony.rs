//! Harmonic feature extraction: vertical chord slices, recurring chord
//! progressions, dissonance counts and key estimation.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::rational::to_f64;
use crate::score::{Beats, EventContent, Position, Score};

#[derive(Debug, Error)]
pub enum HarmonyError {
    #[error("score contains no notes")]
    NoNotes,
    #[error("empty pitch-class set cannot be labeled")]
    EmptyPcSet,
}

// Krumhansl-Kessler key profiles, fixed for reproducibility.
pub const KK_MAJOR: [f64; 12] =
    [6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88];
pub const KK_MINOR: [f64; 12] =
    [6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17];

/// Interval classes treated as dissonant: seconds, tritone, sevenths.
pub const DISSONANT_CLASSES: [u8; 5] = [1, 2, 6, 10, 11];

pub const PITCH_NAMES: [&str; 12] =
    ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"];

/// One vertical slice: everything sounding between two onset/offset
/// boundaries. An empty pitch set is a rest slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChordSlice {
    pub onset: Position,
    pub duration_beats: Beats,
    /// MIDI pitches sounding throughout the slice, ascending.
    pub pitches: Vec<u8>,
    /// Distinct pitch classes, ascending.
    pub pitch_classes: Vec<u8>,
    pub label: String,
}

impl ChordSlice {
    pub fn is_rest(&self) -> bool {
        self.pitches.is_empty()
    }

    pub fn end_abs_beats(&self) -> Beats {
        self.onset.abs_beats + self.duration_beats
    }

    /// True when any pitch pair forms a dissonant interval class.
    pub fn has_dissonance(&self) -> bool {
        for (i, a) in self.pitches.iter().enumerate() {
            for b in &self.pitches[i + 1..] {
                let ic = (*b as i16 - *a as i16).unsigned_abs() as u8 % 12;
                if DISSONANT_CLASSES.contains(&ic) {
                    return true;
                }
            }
        }
        false
    }
}

/// A recurring sequence of chord labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChordProgression {
    pub labels: Vec<String>,
    /// Onset of the first slice of each occurrence.
    pub occurrences: Vec<Position>,
    pub count: usize,
}

/// Tally of one dissonant interval class over all slices.
#[derive(Debug, Clone, PartialEq)]
pub struct DissonanceReport {
    pub interval_class: u8,
    pub count: usize,
    /// Onset of every slice containing at least one such pair.
    pub example_sites: Vec<Position>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Major,
    Minor,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Major => "major",
            Mode::Minor => "minor",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyCandidate {
    pub tonic_pc: u8,
    pub mode: Mode,
    pub correlation: f64,
}

/// Best and runner-up key by profile correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyEstimate {
    pub tonic_pc: u8,
    pub mode: Mode,
    pub correlation: f64,
    pub runner_up: KeyCandidate,
}

impl KeyEstimate {
    pub fn label(&self) -> String {
        format!("{} {}", PITCH_NAMES[self.tonic_pc as usize], self.mode.label())
    }
}

/// Collapses the score into chord slices. Slice boundaries are exactly the
/// union of all note onsets and offsets; each slice holds the pitches that
/// sound throughout it. A gap where every part rests becomes a rest slice.
pub fn chordify(score: &Score) -> Result<Vec<ChordSlice>, HarmonyError> {
    // (onset, offset, pitch) for every note event.
    let mut notes: Vec<(Beats, Beats, u8)> = Vec::new();
    for part in &score.parts {
        for voice in &part.voices {
            for event in &voice.events {
                if let EventContent::Note(n) = &event.content {
                    notes.push((event.position.abs_beats, event.end_abs_beats(), n.midi_pitch));
                }
            }
        }
    }
    if notes.is_empty() {
        return Err(HarmonyError::NoNotes);
    }

    let mut boundaries: Vec<Beats> = notes.iter().flat_map(|(on, off, _)| [*on, *off]).collect();
    boundaries.sort();
    boundaries.dedup();

    // Positions are expressed against the first part's section list.
    let sections = &score.parts[0].sections;

    let mut slices = Vec::new();
    for pair in boundaries.windows(2) {
        let (start, end) = (pair[0], pair[1]);
        if end <= start {
            continue;
        }
        let mut pitches: Vec<u8> = notes
            .iter()
            .filter(|(on, off, _)| *on <= start && *off >= end)
            .map(|(_, _, p)| *p)
            .collect();
        pitches.sort_unstable();
        pitches.dedup();
        let mut pitch_classes: Vec<u8> = pitches.iter().map(|p| p % 12).collect();
        pitch_classes.sort_unstable();
        pitch_classes.dedup();
        let label = if pitches.is_empty() {
            "rest".to_string()
        } else {
            label_chord_with_bass(&pitch_classes, Some(pitches[0] % 12))
                .expect("non-empty pitch set")
        };
        let onset = crate::score::position_of(start, sections).map_err(|_| HarmonyError::NoNotes)?;
        slices.push(ChordSlice {
            onset,
            duration_beats: end - start,
            pitches,
            pitch_classes,
            label,
        });
    }
    Ok(slices)
}

const TEMPLATES: [(&[u8], &str); 7] = [
    (&[0, 4, 7], "maj"),
    (&[0, 3, 7], "min"),
    (&[0, 3, 6], "dim"),
    (&[0, 4, 8], "aug"),
    (&[0, 4, 7, 10], "7"),
    (&[0, 4, 7, 11], "maj7"),
    (&[0, 3, 7, 10], "min7"),
];

/// Labels a pitch-class set: `<root><quality>` when the set matches a triad
/// or seventh template under some rotation, otherwise a `pcset{..}` literal.
pub fn label_chord(pitch_classes: &[u8]) -> Result<String, HarmonyError> {
    label_chord_with_bass(pitch_classes, None)
}

/// Like [`label_chord`] but prefers the matching rotation whose root equals
/// the bass pitch class, which disambiguates symmetric chords.
pub fn label_chord_with_bass(
    pitch_classes: &[u8],
    bass_pc: Option<u8>,
) -> Result<String, HarmonyError> {
    if pitch_classes.is_empty() {
        return Err(HarmonyError::EmptyPcSet);
    }
    let mut set = [false; 12];
    let mut size = 0usize;
    for pc in pitch_classes {
        if !set[(*pc % 12) as usize] {
            set[(*pc % 12) as usize] = true;
            size += 1;
        }
    }

    let mut matches: Vec<(u8, &str)> = Vec::new();
    for (template, quality) in TEMPLATES {
        if template.len() != size {
            continue;
        }
        for root in 0..12u8 {
            if template.iter().all(|t| set[((t + root) % 12) as usize]) {
                matches.push((root, quality));
            }
        }
    }
    if matches.is_empty() {
        let mut pcs: Vec<u8> = (0..12).filter(|pc| set[*pc as usize]).collect();
        pcs.sort_unstable();
        let inner =
            pcs.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",");
        return Ok(format!("pcset{{{inner}}}"));
    }
    let (root, quality) = match bass_pc.and_then(|b| matches.iter().find(|(r, _)| *r == b % 12)) {
        Some(m) => *m,
        // Lowest rotation origin keeps the choice deterministic.
        None => *matches.iter().min_by_key(|(r, _)| *r).unwrap(),
    };
    Ok(format!("{}{}", PITCH_NAMES[root as usize], quality))
}

/// Mines recurring label sequences over the chord slices. Rest slices are
/// skipped and consecutive duplicate labels are collapsed before mining.
pub fn mine_progressions(
    slices: &[ChordSlice],
    n_min: usize,
    n_max: usize,
    min_count: usize,
) -> Vec<ChordProgression> {
    assert!(n_min >= 1 && n_min <= n_max, "invalid n-gram range");
    assert!(min_count >= 2, "min_count below 2 would report every window");

    let mut collapsed: Vec<(&str, Position)> = Vec::new();
    for slice in slices {
        if slice.is_rest() {
            continue;
        }
        if collapsed.last().map(|(l, _)| *l) != Some(slice.label.as_str()) {
            collapsed.push((slice.label.as_str(), slice.onset));
        }
    }

    let mut by_key: BTreeMap<Vec<String>, Vec<Position>> = BTreeMap::new();
    for n in n_min..=n_max {
        if collapsed.len() < n {
            continue;
        }
        for window in collapsed.windows(n) {
            let key: Vec<String> = window.iter().map(|(l, _)| l.to_string()).collect();
            by_key.entry(key).or_default().push(window[0].1);
        }
    }
    let mut out: Vec<ChordProgression> = by_key
        .into_iter()
        .filter(|(_, occ)| occ.len() >= min_count)
        .map(|(labels, mut occurrences)| {
            occurrences.sort_by_key(|p| p.abs_beats);
            ChordProgression { labels, count: occurrences.len(), occurrences }
        })
        .collect();
    out.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then(b.labels.len().cmp(&a.labels.len()))
            .then(a.labels.cmp(&b.labels))
    });
    out
}

/// Counts dissonant interval classes over all pitch pairs of every slice,
/// most frequent first.
pub fn find_dissonances(slices: &[ChordSlice]) -> Vec<DissonanceReport> {
    let mut counts: BTreeMap<u8, (usize, Vec<Position>)> = BTreeMap::new();
    for slice in slices {
        let mut seen_here = [false; 12];
        for (i, a) in slice.pitches.iter().enumerate() {
            for b in &slice.pitches[i + 1..] {
                let ic = (*b as i16 - *a as i16).unsigned_abs() as u8 % 12;
                if !DISSONANT_CLASSES.contains(&ic) {
                    continue;
                }
                let entry = counts.entry(ic).or_default();
                entry.0 += 1;
                if !seen_here[ic as usize] {
                    entry.1.push(slice.onset);
                    seen_here[ic as usize] = true;
                }
            }
        }
    }
    let mut out: Vec<DissonanceReport> = counts
        .into_iter()
        .map(|(interval_class, (count, example_sites))| DissonanceReport {
            interval_class,
            count,
            example_sites,
        })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then(a.interval_class.cmp(&b.interval_class)));
    out
}

/// Fraction of non-rest slices containing at least one dissonant pair.
pub fn dissonance_rate(slices: &[ChordSlice]) -> f64 {
    let sounding: Vec<&ChordSlice> = slices.iter().filter(|s| !s.is_rest()).collect();
    if sounding.is_empty() {
        return 0.0;
    }
    sounding.iter().filter(|s| s.has_dissonance()).count() as f64 / sounding.len() as f64
}

/// Duration-weighted pitch-class histogram of all notes.
pub fn pitch_class_histogram(score: &Score) -> [f64; 12] {
    let mut hist = [0.0f64; 12];
    for part in &score.parts {
        for voice in &part.voices {
            for event in &voice.events {
                if let EventContent::Note(n) = &event.content {
                    hist[n.pitch_class() as usize] += to_f64(event.duration_beats);
                }
            }
        }
    }
    hist
}

/// Pearson correlation; zero when either side has no variance.
pub fn pearson(x: &[f64; 12], y: &[f64; 12]) -> f64 {
    let mx = x.iter().sum::<f64>() / 12.0;
    let my = y.iter().sum::<f64>() / 12.0;
    let mut num = 0.0;
    let mut dx2 = 0.0;
    let mut dy2 = 0.0;
    for i in 0..12 {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        num += dx * dy;
        dx2 += dx * dx;
        dy2 += dy * dy;
    }
    if dx2 == 0.0 || dy2 == 0.0 {
        return 0.0;
    }
    num / (dx2 * dy2).sqrt()
}

/// Estimates the key by correlating the duration-weighted pitch-class
/// histogram against all 24 rotations of the major and minor profiles.
/// Ties break toward the lower tonic, major before minor.
pub fn estimate_key(score: &Score) -> Result<KeyEstimate, HarmonyError> {
    let hist = pitch_class_histogram(score);
    if hist.iter().all(|v| *v == 0.0) {
        return Err(HarmonyError::NoNotes);
    }
    let mut candidates: Vec<KeyCandidate> = Vec::with_capacity(24);
    for mode in [Mode::Major, Mode::Minor] {
        let profile = match mode {
            Mode::Major => &KK_MAJOR,
            Mode::Minor => &KK_MINOR,
        };
        for tonic in 0..12u8 {
            let mut rotated = [0.0f64; 12];
            for pc in 0..12usize {
                rotated[pc] = profile[(pc + 12 - tonic as usize) % 12];
            }
            candidates.push(KeyCandidate {
                tonic_pc: tonic,
                mode,
                correlation: pearson(&hist, &rotated),
            });
        }
    }
    candidates.sort_by(|a, b| {
        b.correlation
            .partial_cmp(&a.correlation)
            .unwrap()
            .then(a.tonic_pc.cmp(&b.tonic_pc))
            .then(a.mode.cmp(&b.mode))
    });
    Ok(KeyEstimate {
        tonic_pc: candidates[0].tonic_pc,
        mode: candidates[0].mode,
        correlation: candidates[0].correlation,
        runner_up: candidates[1],
    })
}
