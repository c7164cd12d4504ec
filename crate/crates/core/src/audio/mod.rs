//! Audio-to-score alignment: WAV decoding, chroma features on both sides,
//! dynamic time warping, and the resulting beats-to-seconds map.

pub mod chroma;
pub mod dtw;
pub mod synth;
pub mod wav;

use thiserror::Error;

pub use chroma::{chroma_from_audio, chroma_from_score, ChromaOrigin, Chromagram};
pub use dtw::{dtw, WarpPath};
pub use wav::{read_wav, write_wav};

use crate::rational::to_f64;
use crate::score::{abs_beats_of, Beats, Score, ScoreError};

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("clip has {samples} samples but one frame needs {needed}")]
    ClipTooShort { samples: usize, needed: usize },
    #[error("invalid frame parameters: frame_len {frame_len}, hop {hop}")]
    BadFrameParams { frame_len: usize, hop: usize },
    #[error("tempo must be positive, got {0}")]
    BadTempo(f64),
    #[error("score contains no events to render")]
    EmptyScore,
    #[error("chromagram has no frames")]
    EmptyChromagram,
    #[error("query lies outside the score span")]
    QueryOutOfRange,
    #[error("alignment has no anchors")]
    NoAnchors,
    #[error(transparent)]
    Model(#[from] ScoreError),
}

/// A mono audio clip with samples in `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct AudioClip {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Mean RMS over consecutive one-second windows (the whole clip when it
    /// is shorter than a second).
    pub fn mean_rms(&self) -> f64 {
        let win = (self.sample_rate as usize).min(self.samples.len()).max(1);
        let mut sums = Vec::new();
        let mut start = 0;
        while start + win <= self.samples.len() {
            let e: f64 =
                self.samples[start..start + win].iter().map(|s| (*s as f64) * (*s as f64)).sum();
            sums.push((e / win as f64).sqrt());
            start += win;
        }
        if sums.is_empty() {
            let e: f64 = self.samples.iter().map(|s| (*s as f64) * (*s as f64)).sum();
            return (e / self.samples.len().max(1) as f64).sqrt();
        }
        sums.iter().sum::<f64>() / sums.len() as f64
    }
}

/// One correspondence between score time and recording time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub abs_beats: f64,
    pub time_s: f64,
}

/// Monotone correspondence between a score and one recording.
#[derive(Debug, Clone)]
pub struct AlignmentMap {
    /// (audio frame, symbolic frame) pairs of the optimal warp path.
    pub path: Vec<(usize, usize)>,
    /// Strictly increasing (beats, seconds) pairs derived from the path.
    pub anchors: Vec<Anchor>,
    pub total_cost: f64,
    pub recording_ref: String,
}

/// A seconds interval on one recording's timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeInterval {
    pub start_s: f64,
    pub end_s: f64,
    pub recording_ref: String,
}

/// A bar/beat span of the score, used to query the alignment.
#[derive(Debug, Clone, Copy)]
pub struct BeatSpan {
    pub start_bar: u32,
    pub start_beat: Beats,
    pub end_bar: u32,
    pub end_beat: Beats,
}

/// Parameters shared by both chroma renderings during alignment.
#[derive(Debug, Clone, Copy)]
pub struct AlignParams {
    pub frame_len: usize,
    pub hop: usize,
    pub tempo_bpm: f64,
}

impl Default for AlignParams {
    fn default() -> Self {
        AlignParams {
            frame_len: chroma::DEFAULT_FRAME_LEN,
            hop: chroma::DEFAULT_HOP,
            tempo_bpm: 120.0,
        }
    }
}

/// Aligns a recording to the score: renders the symbolic chromagram on the
/// recording's own frame grid, warps, and derives anchors.
pub fn align_score_to_audio(
    score: &Score,
    clip: &AudioClip,
    params: AlignParams,
    recording_ref: &str,
) -> Result<AlignmentMap, AudioError> {
    let audio_chroma = chroma_from_audio(clip, params.frame_len, params.hop)?;
    let sym_chroma = chroma_from_score(score, params.tempo_bpm, audio_chroma.hop_s)?;
    align_chromagrams(&audio_chroma, &sym_chroma, params.tempo_bpm, recording_ref)
}

/// DTW between an audio-side and a symbolic-side chromagram, plus anchor
/// extraction. The symbolic hop and tempo fix the beats-per-frame scale.
pub fn align_chromagrams(
    audio_chroma: &Chromagram,
    sym_chroma: &Chromagram,
    tempo_bpm: f64,
    recording_ref: &str,
) -> Result<AlignmentMap, AudioError> {
    let warp = dtw(audio_chroma, sym_chroma)?;
    dtw::assert_valid_path(&warp, audio_chroma.frame_count(), sym_chroma.frame_count());
    let beats_per_sym_frame = sym_chroma.hop_s * tempo_bpm / 60.0;

    let mut anchors: Vec<Anchor> = Vec::new();
    let mut last_sym = usize::MAX;
    for (a, s) in &warp.steps {
        if *s == last_sym {
            continue; // keep the first audio frame matched to each symbolic frame
        }
        last_sym = *s;
        let anchor = Anchor {
            abs_beats: *s as f64 * beats_per_sym_frame,
            time_s: *a as f64 * audio_chroma.hop_s,
        };
        match anchors.last() {
            Some(prev) if anchor.time_s <= prev.time_s => {}
            _ => anchors.push(anchor),
        }
    }
    Ok(AlignmentMap { path: warp.steps, anchors, total_cost: warp.total_cost, recording_ref: recording_ref.to_string() })
}

impl AlignmentMap {
    /// Seconds at a beat offset, linearly interpolated between anchors and
    /// clamped to the anchor range.
    pub fn beats_to_seconds(&self, beats: f64) -> Result<f64, AudioError> {
        let anchors = &self.anchors;
        if anchors.is_empty() {
            return Err(AudioError::NoAnchors);
        }
        if beats <= anchors[0].abs_beats {
            return Ok(anchors[0].time_s);
        }
        if beats >= anchors[anchors.len() - 1].abs_beats {
            return Ok(anchors[anchors.len() - 1].time_s);
        }
        let hi = anchors.partition_point(|a| a.abs_beats < beats);
        let (lo, hi) = (&anchors[hi - 1], &anchors[hi]);
        let span = hi.abs_beats - lo.abs_beats;
        if span <= 0.0 {
            return Ok(lo.time_s);
        }
        let frac = (beats - lo.abs_beats) / span;
        Ok(lo.time_s + frac * (hi.time_s - lo.time_s))
    }

    /// Inverse lookup: beats at a seconds offset, clamped to the anchors.
    pub fn seconds_to_beats(&self, time_s: f64) -> Result<f64, AudioError> {
        let anchors = &self.anchors;
        if anchors.is_empty() {
            return Err(AudioError::NoAnchors);
        }
        if time_s <= anchors[0].time_s {
            return Ok(anchors[0].abs_beats);
        }
        if time_s >= anchors[anchors.len() - 1].time_s {
            return Ok(anchors[anchors.len() - 1].abs_beats);
        }
        let hi = anchors.partition_point(|a| a.time_s < time_s);
        let (lo, hi) = (&anchors[hi - 1], &anchors[hi]);
        let span = hi.time_s - lo.time_s;
        if span <= 0.0 {
            return Ok(lo.abs_beats);
        }
        let frac = (time_s - lo.time_s) / span;
        Ok(lo.abs_beats + frac * (hi.abs_beats - lo.abs_beats))
    }

    /// CSV of the anchors: `abs_beats,time_s` rows.
    pub fn anchors_csv(&self) -> String {
        let mut out = String::from("abs_beats,time_s\n");
        for a in &self.anchors {
            out.push_str(&format!("{:.6},{:.6}\n", a.abs_beats, a.time_s));
        }
        out
    }
}

/// Maps a bar/beat span of the score onto a seconds interval of the aligned
/// recording. Bar numbering follows the first part's sections.
pub fn map_beats_to_seconds(
    align: &AlignmentMap,
    score: &Score,
    query: BeatSpan,
) -> Result<TimeInterval, AudioError> {
    let sections = &score.parts.first().ok_or(AudioError::EmptyScore)?.sections;
    let start = abs_beats_of(query.start_bar, query.start_beat, sections)
        .map_err(|_| AudioError::QueryOutOfRange)?;
    let end = abs_beats_of(query.end_bar, query.end_beat, sections)
        .map_err(|_| AudioError::QueryOutOfRange)?;
    let score_end = score.end_abs_beats();
    if start > end || end > score_end {
        return Err(AudioError::QueryOutOfRange);
    }
    Ok(TimeInterval {
        start_s: align.beats_to_seconds(to_f64(start))?,
        end_s: align.beats_to_seconds(to_f64(end))?,
        recording_ref: align.recording_ref.clone(),
    })
}

/// Convenience query for a whole bar: `[bar, bar+1)` in beat terms, with the
/// end clamped to the score end.
pub fn bar_interval(
    align: &AlignmentMap,
    score: &Score,
    bar: u32,
) -> Result<TimeInterval, AudioError> {
    let sections = &score.parts.first().ok_or(AudioError::EmptyScore)?.sections;
    let start =
        abs_beats_of(bar, Beats::from_integer(0), sections).map_err(|_| AudioError::QueryOutOfRange)?;
    let metre =
        crate::score::metre_at(bar, sections).ok_or(AudioError::QueryOutOfRange)?;
    let end = (start + metre.bar_beats()).min(score.end_abs_beats());
    if start > score.end_abs_beats() {
        return Err(AudioError::QueryOutOfRange);
    }
    Ok(TimeInterval {
        start_s: align.beats_to_seconds(to_f64(start))?,
        end_s: align.beats_to_seconds(to_f64(end))?,
        recording_ref: align.recording_ref.clone(),
    })
}
