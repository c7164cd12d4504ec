//! Chromagrams: 12-bin pitch-class energy per frame, from audio via a Hann
//! STFT or rendered directly from a symbolic score.

use num_traits::Zero;
use rustfft::{num_complex::Complex, FftPlanner};

use super::{AudioClip, AudioError};
use crate::rational::to_f64;
use crate::score::{Beats, EventContent, Score};

pub const DEFAULT_FRAME_LEN: usize = 2048;
pub const DEFAULT_HOP: usize = 512;
const FREQ_MIN_HZ: f64 = 55.0;
const FREQ_MAX_HZ: f64 = 8000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChromaOrigin {
    Audio,
    Symbolic,
}

/// A sequence of max-normalized 12-bin pitch-class columns.
#[derive(Debug, Clone)]
pub struct Chromagram {
    pub columns: Vec<[f64; 12]>,
    pub hop_s: f64,
    pub origin: ChromaOrigin,
}

impl Chromagram {
    pub fn frame_count(&self) -> usize {
        self.columns.len()
    }

    pub fn duration_s(&self) -> f64 {
        self.columns.len() as f64 * self.hop_s
    }
}

/// Cosine similarity with the zero-column convention: two zero columns are
/// perfectly similar, a zero and a nonzero column are maximally dissimilar.
pub fn cosine_similarity(a: &[f64; 12], b: &[f64; 12]) -> f64 {
    let aa: f64 = a.iter().map(|v| v * v).sum();
    let bb: f64 = b.iter().map(|v| v * v).sum();
    match (aa == 0.0, bb == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        (false, false) => {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            // sqrt(aa*bb) keeps the similarity of a column with itself at
            // exactly 1, so self-alignment costs are exactly zero.
            dot / (aa * bb).sqrt()
        }
    }
}

fn normalize_column(col: &mut [f64; 12]) {
    let max = col.iter().cloned().fold(0.0f64, f64::max);
    if max > 0.0 {
        for v in col.iter_mut() {
            *v /= max;
        }
    }
}

/// STFT chroma: Hann window, magnitude spectrum, bins between 55 Hz and
/// 8 kHz mapped to `round(12*log2(f/440) + 69) mod 12`, summed per class
/// and max-normalized per column.
pub fn chroma_from_audio(
    clip: &AudioClip,
    frame_len: usize,
    hop: usize,
) -> Result<Chromagram, AudioError> {
    if frame_len < 2 || hop == 0 {
        return Err(AudioError::BadFrameParams { frame_len, hop });
    }
    if clip.samples.len() < frame_len {
        return Err(AudioError::ClipTooShort {
            samples: clip.samples.len(),
            needed: frame_len,
        });
    }
    let sr = clip.sample_rate as f64;
    let window: Vec<f64> = (0..frame_len)
        .map(|n| {
            0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / (frame_len as f64 - 1.0)).cos()
        })
        .collect();
    // Bin -> pitch class, fixed per clip.
    let bin_pc: Vec<Option<usize>> = (0..frame_len / 2)
        .map(|k| {
            let f = k as f64 * sr / frame_len as f64;
            if !(FREQ_MIN_HZ..=FREQ_MAX_HZ).contains(&f) {
                return None;
            }
            let midi = (12.0 * (f / 440.0).log2() + 69.0).round() as i64;
            Some(midi.rem_euclid(12) as usize)
        })
        .collect();

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(frame_len);
    let mut columns = Vec::new();
    let mut start = 0usize;
    let mut buf = vec![Complex::new(0.0, 0.0); frame_len];
    while start + frame_len <= clip.samples.len() {
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex::new(clip.samples[start + i] as f64 * window[i], 0.0);
        }
        fft.process(&mut buf);
        let mut col = [0.0f64; 12];
        for (k, pc) in bin_pc.iter().enumerate() {
            if let Some(pc) = pc {
                col[*pc] += buf[k].norm();
            }
        }
        normalize_column(&mut col);
        columns.push(col);
        start += hop;
    }
    Ok(Chromagram { columns, hop_s: hop as f64 / sr, origin: ChromaOrigin::Audio })
}

/// Renders a chromagram straight from the score, replacing audio synthesis:
/// each sounding note adds `velocity/127` to its pitch class and half that
/// to the class a fifth above.
pub fn chroma_from_score(
    score: &Score,
    tempo_bpm: f64,
    hop_s: f64,
) -> Result<Chromagram, AudioError> {
    if tempo_bpm <= 0.0 || hop_s <= 0.0 {
        return Err(AudioError::BadTempo(tempo_bpm));
    }
    let end_beats = score.end_abs_beats();
    if end_beats <= Beats::zero() {
        return Err(AudioError::EmptyScore);
    }
    let seconds_per_beat = 60.0 / tempo_bpm;
    let total_s = to_f64(end_beats) * seconds_per_beat;
    let frames = (total_s / hop_s).ceil().max(1.0) as usize;

    // (start_s, end_s, pitch class, weight)
    let mut notes: Vec<(f64, f64, usize, f64)> = Vec::new();
    for part in &score.parts {
        for voice in &part.voices {
            for event in &voice.events {
                if let EventContent::Note(n) = &event.content {
                    let start = to_f64(event.position.abs_beats) * seconds_per_beat;
                    let end = to_f64(event.end_abs_beats()) * seconds_per_beat;
                    let weight = event.effective_velocity() as f64 / 127.0;
                    notes.push((start, end, n.pitch_class() as usize, weight));
                }
            }
        }
    }

    let mut columns = Vec::with_capacity(frames);
    for i in 0..frames {
        let t = i as f64 * hop_s;
        let mut col = [0.0f64; 12];
        for (start, end, pc, weight) in &notes {
            if *start <= t && t < *end {
                col[*pc] += weight;
                col[(*pc + 7) % 12] += weight / 2.0;
            }
        }
        normalize_column(&mut col);
        columns.push(col);
    }
    Ok(Chromagram { columns, hop_s, origin: ChromaOrigin::Symbolic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::{
        abs_beats_of, Clef, Dynamic, EventContent, Metre, Note, Part, Position, Section,
        SymbolicEvent, Voice,
    };

    fn sine(freq: f64, seconds: f64, sr: u32) -> AudioClip {
        let n = (seconds * sr as f64) as usize;
        let samples = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / sr as f64).sin() as f32 * 0.8)
            .collect();
        AudioClip { samples, sample_rate: sr }
    }

    fn argmax(col: &[f64; 12]) -> usize {
        col.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0
    }

    #[test]
    fn a440_lands_in_pitch_class_9() {
        let clip = sine(440.0, 1.0, 22050);
        let chroma = chroma_from_audio(&clip, DEFAULT_FRAME_LEN, DEFAULT_HOP).unwrap();
        assert!(chroma.frame_count() > 4);
        for col in &chroma.columns[1..chroma.columns.len() - 1] {
            assert_eq!(argmax(col), 9);
        }
    }

    #[test]
    fn middle_c_lands_in_pitch_class_0() {
        let clip = sine(261.63, 1.0, 22050);
        let chroma = chroma_from_audio(&clip, DEFAULT_FRAME_LEN, DEFAULT_HOP).unwrap();
        for col in &chroma.columns[1..chroma.columns.len() - 1] {
            assert_eq!(argmax(col), 0);
        }
    }

    #[test]
    fn silence_is_all_zero() {
        let clip = AudioClip { samples: vec![0.0; 8192], sample_rate: 22050 };
        let chroma = chroma_from_audio(&clip, DEFAULT_FRAME_LEN, DEFAULT_HOP).unwrap();
        for col in &chroma.columns {
            assert!(col.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn short_clip_is_an_error() {
        let clip = AudioClip { samples: vec![0.0; 100], sample_rate: 22050 };
        assert!(chroma_from_audio(&clip, DEFAULT_FRAME_LEN, DEFAULT_HOP).is_err());
    }

    fn single_note_score(midi: u8, dur_beats: i64, velocity: u8) -> Score {
        let sections = vec![Section { start_bar: 1, metre: Metre::COMMON, clef: Clef::Treble }];
        let event = SymbolicEvent {
            content: EventContent::Note(Note::from_midi(midi)),
            position: Position {
                bar: 1,
                beat: Beats::zero(),
                abs_beats: abs_beats_of(1, Beats::zero(), &sections).unwrap(),
            },
            duration_beats: Beats::from_integer(dur_beats),
            dynamic: Some(Dynamic::velocity(velocity)),
        };
        Score {
            work_ref: "t".into(),
            title: None,
            ticks_per_quarter: 480,
            parts: vec![Part {
                name: "P".into(),
                midi_program: 0,
                staff: 1,
                voices: vec![Voice { index: 1, events: vec![event] }],
                sections,
            }],
        }
    }

    #[test]
    fn rendered_note_fills_expected_frames() {
        // One C4 beat at 60 bpm is one second: frames 0..9 at hop 0.1 s.
        let score = single_note_score(60, 1, 100);
        let chroma = chroma_from_score(&score, 60.0, 0.1).unwrap();
        assert_eq!(chroma.frame_count(), 10);
        for col in &chroma.columns {
            assert_eq!(argmax(col), 0);
            assert!(col[7] > 0.0); // fifth overtone
        }
    }

    #[test]
    fn fifth_weighting_rule() {
        // C4 and G4 together: pc 7 collects G's fundamental plus C's
        // overtone, pc 0 only C's fundamental, pc 2 only G's overtone.
        let mut score = single_note_score(60, 1, 127);
        let position = score.parts[0].voices[0].events[0].position;
        score.parts[0].voices.push(Voice {
            index: 2,
            events: vec![SymbolicEvent {
                content: EventContent::Note(Note::from_midi(67)),
                position,
                duration_beats: Beats::from_integer(1),
                dynamic: Some(Dynamic::velocity(127)),
            }],
        });
        let chroma = chroma_from_score(&score, 60.0, 0.25).unwrap();
        let col = &chroma.columns[0];
        assert!(col[0] > 0.0 && col[7] > 0.0);
        // Before normalization pc7 = 1.5w, pc0 = w, pc2 = 0.5w; the
        // max-normalized column keeps those ratios.
        assert!((col[7] - 1.0).abs() < 1e-12);
        assert!((col[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((col[2] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rest_only_frames_are_zero_columns() {
        // Note lasting 1 beat, then silence until beat 2 via a second note.
        let mut score = single_note_score(60, 1, 100);
        let sections = score.parts[0].sections.clone();
        score.parts[0].voices[0].events.push(SymbolicEvent {
            content: EventContent::Note(Note::from_midi(64)),
            position: crate::score::position_of(Beats::from_integer(3), &sections).unwrap(),
            duration_beats: Beats::from_integer(1),
            dynamic: None,
        });
        let chroma = chroma_from_score(&score, 60.0, 0.5).unwrap();
        // Beats 1..3 are silent: frames at 1.0s..2.5s are zero columns.
        assert!(chroma.columns[2].iter().all(|v| *v == 0.0));
        assert!(chroma.columns[5].iter().all(|v| *v == 0.0));
        assert!(chroma.columns[6].iter().any(|v| *v > 0.0));
    }

    #[test]
    fn empty_score_is_an_error() {
        let mut score = single_note_score(60, 1, 100);
        score.parts[0].voices[0].events.clear();
        assert!(matches!(chroma_from_score(&score, 120.0, 0.1), Err(AudioError::EmptyScore)));
    }
}
