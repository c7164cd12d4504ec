//! Dynamic time warping over chroma columns with cosine distance.

use super::chroma::{cosine_similarity, Chromagram};
use super::AudioError;

/// A warp path through the cost matrix plus its accumulated cost.
#[derive(Debug, Clone)]
pub struct WarpPath {
    /// (audio frame, symbolic frame) pairs from (0,0) to (F_a-1, F_s-1).
    pub steps: Vec<(usize, usize)>,
    pub total_cost: f64,
}

/// Cosine distance between two columns, `1 - cosine_similarity`.
pub fn cost(a: &[f64; 12], b: &[f64; 12]) -> f64 {
    1.0 - cosine_similarity(a, b)
}

/// Full-matrix DTW with steps {(1,0),(0,1),(1,1)}, no step weights. Returns
/// a globally minimal monotone path anchored at both ends. Ties prefer the
/// diagonal so self-alignment is exactly the diagonal.
pub fn dtw(a: &Chromagram, b: &Chromagram) -> Result<WarpPath, AudioError> {
    let (na, nb) = (a.frame_count(), b.frame_count());
    if na == 0 || nb == 0 {
        return Err(AudioError::EmptyChromagram);
    }

    let mut acc = vec![f64::INFINITY; na * nb];
    let idx = |i: usize, j: usize| i * nb + j;
    for i in 0..na {
        for j in 0..nb {
            let c = cost(&a.columns[i], &b.columns[j]);
            let best_prev = if i == 0 && j == 0 {
                0.0
            } else {
                let mut best = f64::INFINITY;
                if i > 0 && j > 0 {
                    best = acc[idx(i - 1, j - 1)];
                }
                if i > 0 {
                    best = best.min(acc[idx(i - 1, j)]);
                }
                if j > 0 {
                    best = best.min(acc[idx(i, j - 1)]);
                }
                best
            };
            acc[idx(i, j)] = c + best_prev;
        }
    }

    let mut steps = Vec::with_capacity(na + nb);
    let (mut i, mut j) = (na - 1, nb - 1);
    steps.push((i, j));
    while i > 0 || j > 0 {
        let diag = if i > 0 && j > 0 { acc[idx(i - 1, j - 1)] } else { f64::INFINITY };
        let up = if i > 0 { acc[idx(i - 1, j)] } else { f64::INFINITY };
        let left = if j > 0 { acc[idx(i, j - 1)] } else { f64::INFINITY };
        if diag <= up && diag <= left {
            i -= 1;
            j -= 1;
        } else if up <= left {
            i -= 1;
        } else {
            j -= 1;
        }
        steps.push((i, j));
    }
    steps.reverse();
    Ok(WarpPath { steps, total_cost: acc[idx(na - 1, nb - 1)] })
}

/// Panics when the path violates the monotone step contract; used by tests
/// and by the alignment pipeline as a cheap internal check.
pub fn assert_valid_path(path: &WarpPath, na: usize, nb: usize) {
    assert_eq!(path.steps.first(), Some(&(0, 0)), "path must start at (0,0)");
    assert_eq!(
        path.steps.last(),
        Some(&(na - 1, nb - 1)),
        "path must end at the final cell"
    );
    for pair in path.steps.windows(2) {
        let (di, dj) =
            (pair[1].0 as i64 - pair[0].0 as i64, pair[1].1 as i64 - pair[0].1 as i64);
        assert!(
            matches!((di, dj), (1, 0) | (0, 1) | (1, 1)),
            "illegal step {:?} -> {:?}",
            pair[0],
            pair[1]
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::chroma::ChromaOrigin;

    fn gram(cols: Vec<[f64; 12]>) -> Chromagram {
        Chromagram { columns: cols, hop_s: 0.1, origin: ChromaOrigin::Audio }
    }

    fn unit(pc: usize) -> [f64; 12] {
        let mut c = [0.0; 12];
        c[pc] = 1.0;
        c
    }

    #[test]
    fn self_alignment_is_the_diagonal() {
        let g = gram((0..6).map(|i| unit(i % 12)).collect());
        let path = dtw(&g, &g).unwrap();
        assert_valid_path(&path, 6, 6);
        assert_eq!(path.total_cost, 0.0);
        let expected: Vec<(usize, usize)> = (0..6).map(|i| (i, i)).collect();
        assert_eq!(path.steps, expected);
    }

    #[test]
    fn two_by_two_prefers_matching_diagonal() {
        // cost matrix [[0,1],[1,0]]
        let a = gram(vec![unit(0), unit(3)]);
        let b = gram(vec![unit(0), unit(3)]);
        let path = dtw(&a, &b).unwrap();
        assert_eq!(path.steps, vec![(0, 0), (1, 1)]);
        assert_eq!(path.total_cost, 0.0);
    }

    #[test]
    fn all_ones_cost_matrix_gives_diagonal_cost() {
        // Orthogonal columns everywhere: every cell costs 1, the shortest
        // monotone path through a 3x3 grid has 3 cells.
        let a = gram(vec![unit(0), unit(0), unit(0)]);
        let b = gram(vec![unit(6), unit(6), unit(6)]);
        let path = dtw(&a, &b).unwrap();
        assert_valid_path(&path, 3, 3);
        assert!((path.total_cost - 3.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_cost() {
        let a = gram(vec![unit(0), unit(4), unit(7), unit(4)]);
        let b = gram(vec![unit(0), unit(0), unit(4), unit(7)]);
        let ab = dtw(&a, &b).unwrap();
        let ba = dtw(&b, &a).unwrap();
        assert!((ab.total_cost - ba.total_cost).abs() < 1e-12);
    }

    #[test]
    fn empty_input_is_an_error() {
        let a = gram(vec![]);
        let b = gram(vec![unit(0)]);
        assert!(matches!(dtw(&a, &b), Err(AudioError::EmptyChromagram)));
    }
}
