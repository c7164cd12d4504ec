//! Structural segmentation of a recording: checkerboard novelty over the
//! chroma self-similarity matrix, peak picking, and mean-chroma clustering
//! for section labels.

use thiserror::Error;

use crate::audio::chroma::{cosine_similarity, Chromagram};

#[derive(Debug, Error)]
pub enum StructureError {
    #[error("need more than {min} frames for kernel_half {kernel_half}, got {frames}")]
    TooFewFrames { frames: usize, min: usize, kernel_half: usize },
    #[error("self-similarity needs at least 2 frames")]
    TooSmall,
    #[error("boundaries must be sorted and lie within the clip")]
    BadBoundaries,
}

pub const DEFAULT_KERNEL_HALF: usize = 8;
/// Peaks must clear mean + 0.5 sigma of the novelty curve.
pub const PEAK_THRESHOLD_SIGMA: f64 = 0.5;
/// Minimum distance between kept peaks, in frames.
pub const MIN_PEAK_DISTANCE: usize = 8;
/// Single-linkage cosine-distance threshold for merging segment clusters.
pub const CLUSTER_DISTANCE: f64 = 0.15;

/// A labeled span of the recording. Labels are "A", "B", ... in order of
/// first appearance; acoustically similar segments share a label.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start_s: f64,
    pub end_s: f64,
    pub label: String,
}

/// Frame-by-frame cosine similarity matrix, stored row-major.
pub fn self_similarity(chroma: &Chromagram) -> Result<Vec<Vec<f64>>, StructureError> {
    let n = chroma.frame_count();
    if n < 2 {
        return Err(StructureError::TooSmall);
    }
    let mut s = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        s[i][i] = 1.0;
        for j in 0..i {
            let v = cosine_similarity(&chroma.columns[i], &chroma.columns[j]);
            s[i][j] = v;
            s[j][i] = v;
        }
    }
    Ok(s)
}

/// Correlates a Gaussian-tapered checkerboard kernel of size `2*kernel_half`
/// along the diagonal. Frames where the kernel does not fully fit are zero,
/// and the output is half-wave rectified.
pub fn novelty_curve(
    similarity: &[Vec<f64>],
    kernel_half: usize,
) -> Result<Vec<f64>, StructureError> {
    let n = similarity.len();
    if n <= 2 * kernel_half {
        return Err(StructureError::TooFewFrames {
            frames: n,
            min: 2 * kernel_half,
            kernel_half,
        });
    }
    let h = kernel_half as i64;
    let sigma = kernel_half as f64 / 2.0;
    // Offsets -h..h-1 with half-cell centering keep the kernel symmetric
    // around the boundary between cells t-1 and t.
    let kernel: Vec<Vec<f64>> = (0..2 * kernel_half)
        .map(|i| {
            let ci = i as f64 - kernel_half as f64 + 0.5;
            (0..2 * kernel_half)
                .map(|j| {
                    let cj = j as f64 - kernel_half as f64 + 0.5;
                    ci.signum() * cj.signum() * (-(ci * ci + cj * cj) / (2.0 * sigma * sigma)).exp()
                })
                .collect()
        })
        .collect();

    let mut out = vec![0.0f64; n];
    for t in kernel_half..n - kernel_half {
        let mut acc = 0.0;
        for i in 0..2 * kernel_half {
            let row = (t as i64 - h + i as i64) as usize;
            for j in 0..2 * kernel_half {
                let col = (t as i64 - h + j as i64) as usize;
                acc += kernel[i][j] * similarity[row][col];
            }
        }
        out[t] = acc.max(0.0);
    }
    Ok(out)
}

/// Picks interior boundaries: local maxima above mean + 0.5 sigma, at least
/// [`MIN_PEAK_DISTANCE`] frames apart, larger peak winning conflicts.
/// Returned times exclude the implicit edges at 0 and the clip end.
pub fn pick_boundaries(novelty: &[f64], hop_s: f64) -> Vec<f64> {
    if novelty.len() < 3 {
        return Vec::new();
    }
    let n = novelty.len() as f64;
    let mean = novelty.iter().sum::<f64>() / n;
    let var = novelty.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let threshold = mean + PEAK_THRESHOLD_SIGMA * var.sqrt();

    let mut peaks: Vec<usize> = (1..novelty.len() - 1)
        .filter(|&t| {
            novelty[t] > threshold && novelty[t] > novelty[t - 1] && novelty[t] >= novelty[t + 1]
        })
        .collect();
    // Larger peaks claim their neighborhood first.
    peaks.sort_by(|a, b| novelty[*b].partial_cmp(&novelty[*a]).unwrap().then(a.cmp(b)));
    let mut kept: Vec<usize> = Vec::new();
    for p in peaks {
        if kept.iter().all(|k| k.abs_diff(p) >= MIN_PEAK_DISTANCE) {
            kept.push(p);
        }
    }
    kept.sort_unstable();
    kept.into_iter().map(|t| t as f64 * hop_s).collect()
}

/// Splits the clip at the boundaries and labels each span by single-linkage
/// clustering of mean chroma vectors. Distinct letters are assigned in order
/// of first appearance.
pub fn label_segments(
    chroma: &Chromagram,
    boundaries: &[f64],
) -> Result<Vec<Segment>, StructureError> {
    let duration = chroma.duration_s();
    let mut edges = vec![0.0f64];
    for b in boundaries {
        if *b < 0.0 || *b > duration || edges.last().is_some_and(|last| b <= last) {
            return Err(StructureError::BadBoundaries);
        }
        edges.push(*b);
    }
    if edges.last().copied().unwrap_or(0.0) < duration {
        edges.push(duration);
    }

    // Mean chroma per segment.
    let mut means: Vec<[f64; 12]> = Vec::new();
    let mut spans: Vec<(f64, f64)> = Vec::new();
    for pair in edges.windows(2) {
        let (start, end) = (pair[0], pair[1]);
        let first = (start / chroma.hop_s).round() as usize;
        let last = ((end / chroma.hop_s).round() as usize).min(chroma.frame_count());
        let mut mean = [0.0f64; 12];
        let count = last.saturating_sub(first).max(1);
        for col in chroma.columns.iter().skip(first).take(last - first.min(last)) {
            for (m, v) in mean.iter_mut().zip(col) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= count as f64;
        }
        means.push(mean);
        spans.push((start, end));
    }

    // Single-linkage agglomeration under the cosine-distance threshold.
    let mut cluster_of: Vec<usize> = (0..means.len()).collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..means.len() {
            for j in i + 1..means.len() {
                if cluster_of[i] == cluster_of[j] {
                    continue;
                }
                let d = 1.0 - cosine_similarity(&means[i], &means[j]);
                if best.is_none() || d < best.unwrap().0 {
                    best = Some((d, cluster_of[i], cluster_of[j]));
                }
            }
        }
        match best {
            Some((d, a, b)) if d <= CLUSTER_DISTANCE => {
                let target = a.min(b);
                let source = a.max(b);
                for c in &mut cluster_of {
                    if *c == source {
                        *c = target;
                    }
                }
            }
            _ => break,
        }
    }

    // Letters in order of first appearance.
    let mut letter_of: Vec<Option<char>> = vec![None; means.len()];
    let mut next = b'A';
    let mut out = Vec::new();
    for (i, (start, end)) in spans.iter().enumerate() {
        let c = cluster_of[i];
        let letter = match letter_of[c] {
            Some(l) => l,
            None => {
                let l = next as char;
                letter_of[c] = Some(l);
                next += 1;
                l
            }
        };
        out.push(Segment { start_s: *start, end_s: *end, label: letter.to_string() });
    }
    Ok(out)
}

/// Full pipeline: novelty boundaries plus clustered labels.
pub fn segment(chroma: &Chromagram, kernel_half: usize) -> Result<Vec<Segment>, StructureError> {
    let ssm = self_similarity(chroma)?;
    let novelty = novelty_curve(&ssm, kernel_half)?;
    let boundaries = pick_boundaries(&novelty, chroma.hop_s);
    label_segments(chroma, &boundaries)
}

/// CSV rows `start_s,end_s,label`.
pub fn segments_csv(segments: &[Segment]) -> String {
    let mut out = String::from("start_s,end_s,label\n");
    for s in segments {
        out.push_str(&format!("{:.6},{:.6},{}\n", s.start_s, s.end_s, s.label));
    }
    out
}
