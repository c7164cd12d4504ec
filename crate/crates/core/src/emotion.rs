//! Russell-circumplex emotion tagging via a deterministic heuristic.
//!
//! Arousal comes from loudness and tempo, valence from mode and dissonance.
//! The `method` field records the provenance so a learned classifier can be
//! slotted in behind the same output type later.

use crate::audio::AudioClip;
use crate::harmony::{KeyEstimate, Mode};

pub const METHOD: &str = "heuristic-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quadrant {
    /// Positive valence, positive arousal (happy/excited).
    Q1,
    /// Negative valence, positive arousal (tense/angry).
    Q2,
    /// Negative valence, negative arousal (sad/depressed).
    Q3,
    /// Positive valence, negative arousal (calm/content).
    Q4,
}

impl Quadrant {
    pub fn label(self) -> &'static str {
        match self {
            Quadrant::Q1 => "Q1",
            Quadrant::Q2 => "Q2",
            Quadrant::Q3 => "Q3",
            Quadrant::Q4 => "Q4",
        }
    }

    pub fn from_label(s: &str) -> Option<Quadrant> {
        Some(match s {
            "Q1" => Quadrant::Q1,
            "Q2" => Quadrant::Q2,
            "Q3" => Quadrant::Q3,
            "Q4" => Quadrant::Q4,
            _ => return None,
        })
    }

    /// Boundary convention: zero valence or arousal counts as positive.
    pub fn from_signs(valence: f64, arousal: f64) -> Quadrant {
        match (valence >= 0.0, arousal >= 0.0) {
            (true, true) => Quadrant::Q1,
            (false, true) => Quadrant::Q2,
            (false, false) => Quadrant::Q3,
            (true, false) => Quadrant::Q4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmotionTag {
    pub quadrant: Quadrant,
    pub valence: f64,
    pub arousal: f64,
    pub method: String,
}

/// Core formula over the already-extracted signals, kept separate so the
/// properties (sign consistency, monotonicity) can be tested directly.
pub fn classify_from_signals(
    mean_rms: f64,
    tempo_bpm: f64,
    mode: Mode,
    dissonance_rate: f64,
) -> EmotionTag {
    let rms_z = (mean_rms - 0.1) / 0.1;
    let tempo_z = (tempo_bpm - 100.0) / 60.0;
    let arousal = ((rms_z + tempo_z) / 2.0).clamp(-1.0, 1.0);

    let base = match mode {
        Mode::Major => 0.5,
        Mode::Minor => -0.5,
    };
    let valence =
        (base + 0.25 * (1.0 - dissonance_rate) - 0.25 * dissonance_rate).clamp(-1.0, 1.0);

    EmotionTag {
        quadrant: Quadrant::from_signs(valence, arousal),
        valence,
        arousal,
        method: METHOD.to_string(),
    }
}

/// Tags a recording given the score-side key estimate and dissonance rate.
pub fn classify_emotion(
    clip: &AudioClip,
    key: &KeyEstimate,
    score_tempo_bpm: f64,
    dissonance_rate: f64,
) -> EmotionTag {
    classify_from_signals(clip.mean_rms(), score_tempo_bpm, key.mode, dissonance_rate)
}
