//! Naive additive-sine rendering of a score, used to produce deterministic
//! recording fixtures for tests and demos.

use super::AudioClip;
use crate::rational::to_f64;
use crate::score::{EventContent, Score};

/// Renders every note as a sine at its equal-tempered frequency, amplitude
/// `velocity/127 * 0.2`, then normalizes peaks above full scale.
pub fn render_sine_preview(score: &Score, tempo_bpm: f64, sample_rate: u32) -> AudioClip {
    let seconds_per_beat = 60.0 / tempo_bpm;
    let total_s = to_f64(score.end_abs_beats()) * seconds_per_beat;
    let n = (total_s * sample_rate as f64).ceil() as usize;
    let mut samples = vec![0.0f32; n.max(1)];

    for part in &score.parts {
        for voice in &part.voices {
            for event in &voice.events {
                let note = match &event.content {
                    EventContent::Note(n) => n,
                    EventContent::Rest => continue,
                };
                let freq = 440.0 * 2f64.powf((note.midi_pitch as f64 - 69.0) / 12.0);
                let amp = event.effective_velocity() as f64 / 127.0 * 0.2;
                let start = to_f64(event.position.abs_beats) * seconds_per_beat;
                let end = to_f64(event.end_abs_beats()) * seconds_per_beat;
                let first = (start * sample_rate as f64).ceil() as usize;
                let last = ((end * sample_rate as f64).floor() as usize).min(samples.len());
                for i in first..last {
                    let t = i as f64 / sample_rate as f64 - start;
                    samples[i] += (amp * (2.0 * std::f64::consts::PI * freq * t).sin()) as f32;
                }
            }
        }
    }

    let peak = samples.iter().fold(0.0f32, |m, s| m.max(s.abs()));
    if peak > 1.0 {
        for s in &mut samples {
            *s /= peak;
        }
    }
    AudioClip { samples, sample_rate }
}
