//! Exact cosine k-nearest-neighbour search over two embedding sets.
//!
//! Rows are L2-normalized into `f64`, so cosine similarity is a dot product.
//! Similarities are produced a block at a time with a dense matrix product
//! and folded into per-row (and optionally per-column) top-k lists. Query rows
//! are split into chunks processed in parallel; column lists from different
//! chunks are merged afterwards. Every comparison uses the same total order
//! (higher similarity first, then smaller index), so results do not depend on
//! chunking or thread count.

use std::ops::Range;

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView2};
use rayon::prelude::*;

use super::embed::EmbeddingMatrix;
use crate::error::{Error, Result};

const ROW_BLOCK: usize = 128;
const COL_BLOCK: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub similarity: f64,
}

/// Row-normalized copy of an embedding matrix.
pub(crate) struct UnitRows(pub(crate) Array2<f64>);

impl UnitRows {
    pub(crate) fn new(m: &EmbeddingMatrix) -> Self {
        let mut data = Array2::zeros((m.rows(), m.dim()));
        for (i, mut row) in data.outer_iter_mut().enumerate() {
            let src = m.row(i);
            let norm = src.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt();
            for (dst, &v) in row.iter_mut().zip(src) {
                *dst = f64::from(v) / norm;
            }
        }
        UnitRows(data)
    }

    fn rows(&self) -> usize {
        self.0.nrows()
    }
}

/// Flat storage for `n` sorted top-k lists.
#[derive(Clone, Debug)]
pub(crate) struct TopK {
    pub(crate) k: usize,
    pub(crate) scores: Vec<f64>,
    pub(crate) index: Vec<u32>,
}

const EMPTY: u32 = u32::MAX;

#[inline]
fn beats(score: f64, idx: u32, other: f64, other_idx: u32) -> bool {
    score > other || (score == other && idx < other_idx)
}

/// Offers `(score, idx)` to list `r` of `k`-wide flat storage.
#[inline]
fn offer(scores: &mut [f64], index: &mut [u32], k: usize, r: usize, score: f64, idx: u32) {
    let base = r * k;
    let last = base + k - 1;
    if !beats(score, idx, scores[last], index[last]) {
        return;
    }
    let mut p = last;
    while p > base && beats(score, idx, scores[p - 1], index[p - 1]) {
        scores[p] = scores[p - 1];
        index[p] = index[p - 1];
        p -= 1;
    }
    scores[p] = score;
    index[p] = idx;
}

impl TopK {
    pub(crate) fn new(n: usize, k: usize) -> Self {
        TopK {
            k,
            scores: vec![f64::NEG_INFINITY; n * k],
            index: vec![EMPTY; n * k],
        }
    }

    #[inline]
    fn floor(&self, r: usize) -> f64 {
        self.scores[r * self.k + self.k - 1]
    }

    #[inline]
    fn offer(&mut self, r: usize, score: f64, idx: u32) {
        offer(&mut self.scores, &mut self.index, self.k, r, score, idx);
    }

    fn merge(mut self, other: TopK) -> TopK {
        let k = self.k;
        for (slot, (&score, &idx)) in other.scores.iter().zip(&other.index).enumerate() {
            if idx != EMPTY {
                self.offer(slot / k, score, idx);
            }
        }
        self
    }

    pub(crate) fn entries(&self, r: usize) -> impl Iterator<Item = (u32, f64)> + '_ {
        let range = r * self.k..(r + 1) * self.k;
        self.index[range.clone()]
            .iter()
            .zip(&self.scores[range])
            .filter(|(&i, _)| i != EMPTY)
            .map(|(&i, &s)| (i, s))
    }
}

/// Calls `visit(first_row, first_col, block)` for every similarity block of
/// `q[rows] x t^T`.
fn scan_blocks<F>(q: &UnitRows, t: &UnitRows, rows: Range<usize>, mut visit: F)
where
    F: FnMut(usize, usize, ArrayView2<'_, f64>),
{
    let nt = t.rows();
    let mut buf = Array2::<f64>::zeros((ROW_BLOCK, COL_BLOCK.min(nt.max(1))));
    let mut r0 = rows.start;
    while r0 < rows.end {
        let r1 = (r0 + ROW_BLOCK).min(rows.end);
        let qb = q.0.slice(s![r0..r1, ..]);
        let mut c0 = 0;
        while c0 < nt {
            let c1 = (c0 + COL_BLOCK).min(nt);
            let tb = t.0.slice(s![c0..c1, ..]);
            let mut out = buf.slice_mut(s![..r1 - r0, ..c1 - c0]);
            general_mat_mul(1.0, &qb, &tb.t(), 0.0, &mut out);
            visit(r0, c0, out.view());
            c0 = c1;
        }
        r0 = r1;
    }
}

fn chunk_rows(n: usize) -> usize {
    let jobs = rayon::current_num_threads() * 4;
    let per_job = n.div_ceil(jobs.max(1));
    per_job.div_ceil(ROW_BLOCK).max(1) * ROW_BLOCK
}

/// Runs a parallel pass over query-row chunks. `per_element` receives the
/// chunk-local row list, the shared-per-chunk column list, global row and
/// column indices, and the similarity, and returns a count to accumulate.
fn parallel_pass<F>(
    q: &UnitRows,
    t: &UnitRows,
    rows: &mut TopK,
    col_k: Option<usize>,
    per_element: F,
) -> (Option<TopK>, u64)
where
    F: Fn(&mut [f64], &mut [u32], usize, Option<&mut TopK>, usize, usize, f64) -> u64 + Sync,
{
    let nq = q.rows();
    let nt = t.rows();
    let k = rows.k;
    let chunk = chunk_rows(nq);
    rows.scores
        .par_chunks_mut(chunk * k)
        .zip(rows.index.par_chunks_mut(chunk * k))
        .enumerate()
        .map(|(ci, (scores, index))| {
            let start = ci * chunk;
            let end = (start + chunk).min(nq);
            let mut cols = col_k.map(|ck| TopK::new(nt, ck));
            let mut count = 0u64;
            scan_blocks(q, t, start..end, |r0, c0, block| {
                for (bi, sims) in block.outer_iter().enumerate() {
                    let i = r0 + bi;
                    for (bj, &sim) in sims.iter().enumerate() {
                        count += per_element(scores, index, i - start, cols.as_mut(), i, c0 + bj, sim);
                    }
                }
            });
            (cols, count)
        })
        .reduce_with(|(a, ca), (b, cb)| {
            let merged = match (a, b) {
                (Some(a), Some(b)) => Some(a.merge(b)),
                (a, b) => a.or(b),
            };
            (merged, ca + cb)
        })
        .unwrap_or((col_k.map(|ck| TopK::new(nt, ck)), 0))
}

/// Top-k similarity lists for every query row and, if requested, for every
/// target row (its top-k among the queries).
pub(crate) fn neighbor_lists(q: &UnitRows, t: &UnitRows, k: usize, both: bool) -> (TopK, Option<TopK>) {
    let mut rows = TopK::new(q.rows(), k);
    let (cols, _) = parallel_pass(q, t, &mut rows, both.then_some(k), |scores, index, r, cols, i, j, sim| {
        if sim >= scores[r * k + k - 1] {
            offer(scores, index, k, r, sim, j as u32);
        }
        if let Some(cols) = cols {
            if sim >= cols.floor(j) {
                cols.offer(j, sim, i as u32);
            }
        }
        0
    });
    (rows, cols)
}

/// Best-scoring partner for every query row and every target row under
/// `score(i, j, sim)`; `None` scores are skipped and counted.
pub(crate) fn best_partners<S>(q: &UnitRows, t: &UnitRows, score: S) -> (TopK, TopK, u64)
where
    S: Fn(usize, usize, f64) -> Option<f64> + Sync,
{
    let mut rows = TopK::new(q.rows(), 1);
    let (cols, skipped) = parallel_pass(q, t, &mut rows, Some(1), |scores, index, r, cols, i, j, sim| {
        let Some(m) = score(i, j, sim) else {
            return 1;
        };
        if m >= scores[r] {
            offer(scores, index, 1, r, m, j as u32);
        }
        let cols = cols.expect("column lists requested");
        if m >= cols.floor(j) {
            cols.offer(j, m, i as u32);
        }
        0
    });
    (rows, cols.expect("column lists requested"), skipped)
}

fn check_pair(queries: &EmbeddingMatrix, targets: &EmbeddingMatrix, k: usize) -> Result<()> {
    if queries.dim() != targets.dim() {
        return Err(Error::Embedding(format!(
            "dimension mismatch: {} vs {}",
            queries.dim(),
            targets.dim()
        )));
    }
    if k == 0 {
        return Err(Error::Param("k must be at least 1".into()));
    }
    if k > targets.rows() {
        return Err(Error::Param(format!(
            "k = {k} exceeds the {} available {} sentences",
            targets.rows(),
            targets.style()
        )));
    }
    if targets.rows() > EMPTY as usize {
        return Err(Error::Param("too many rows".into()));
    }
    Ok(())
}

pub(crate) fn validate(queries: &EmbeddingMatrix, targets: &EmbeddingMatrix, k: usize) -> Result<()> {
    check_pair(queries, targets, k)?;
    check_pair(targets, queries, k)
}

/// Exact top-`k` targets by cosine similarity for every query row, best
/// first, ties broken by smaller target index.
pub fn knn(queries: &EmbeddingMatrix, targets: &EmbeddingMatrix, k: usize) -> Result<Vec<Vec<Neighbor>>> {
    check_pair(queries, targets, k)?;
    let (rows, _) = neighbor_lists(&UnitRows::new(queries), &UnitRows::new(targets), k, false);
    Ok((0..queries.rows())
        .map(|r| {
            rows.entries(r)
                .map(|(index, similarity)| Neighbor {
                    index: index as usize,
                    similarity,
                })
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Style;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(style: Style, n: usize, dim: usize, seed: u64) -> EmbeddingMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n * dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        EmbeddingMatrix::new(style, (0..n).map(|i| format!("{i}")).collect(), dim, values).unwrap()
    }

    /// Plain re-scan: score every target, sort, take k.
    fn rescan(q: &EmbeddingMatrix, t: &EmbeddingMatrix, k: usize) -> Vec<Vec<(usize, f64)>> {
        let cos = |a: &[f32], b: &[f32]| {
            let dot: f64 = a.iter().zip(b).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum();
            let na: f64 = a.iter().map(|&x| f64::from(x).powi(2)).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|&x| f64::from(x).powi(2)).sum::<f64>().sqrt();
            dot / (na * nb)
        };
        (0..q.rows())
            .map(|i| {
                let mut all: Vec<(usize, f64)> = (0..t.rows()).map(|j| (j, cos(q.row(i), t.row(j)))).collect();
                all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
                all.truncate(k);
                all
            })
            .collect()
    }

    #[test]
    fn matches_rescan_oracle() {
        let q = random(Style::Expert, 50, 16, 1);
        let t = random(Style::Layman, 50, 16, 2);
        for k in [1, 4, 50] {
            let got = knn(&q, &t, k).unwrap();
            let want = rescan(&q, &t, k);
            for (g, w) in got.iter().zip(&want) {
                assert_eq!(g.len(), k);
                for (n, (j, s)) in g.iter().zip(w) {
                    assert_eq!(n.index, *j);
                    assert!((n.similarity - s).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn spans_several_blocks() {
        let q = random(Style::Expert, 300, 8, 3);
        let t = random(Style::Layman, 2 * COL_BLOCK + 17, 8, 4);
        let got = knn(&q, &t, 3).unwrap();
        let want = rescan(&q, &t, 3);
        for (g, w) in got.iter().zip(&want) {
            let gi: Vec<usize> = g.iter().map(|n| n.index).collect();
            let wi: Vec<usize> = w.iter().map(|p| p.0).collect();
            assert_eq!(gi, wi);
        }
    }

    #[test]
    fn identical_row_ranks_first() {
        let t = random(Style::Layman, 20, 8, 5);
        let q = EmbeddingMatrix::new(Style::Expert, vec!["q".into()], 8, t.row(13).to_vec()).unwrap();
        let got = knn(&q, &t, 2).unwrap();
        assert_eq!(got[0][0].index, 13);
        assert!((got[0][0].similarity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_targets_tie_by_index() {
        let mut values = vec![0.0f32; 5 * 6];
        for i in 0..5 {
            values[i * 6 + i + 1] = 1.0;
        }
        let t = EmbeddingMatrix::new(Style::Layman, (0..5).map(|i| i.to_string()).collect(), 6, values).unwrap();
        let q = EmbeddingMatrix::new(Style::Expert, vec!["q".into()], 6, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let got = knn(&q, &t, 3).unwrap();
        assert_eq!(got[0].iter().map(|n| n.index).collect::<Vec<_>>(), [0, 1, 2]);
        assert!(got[0].iter().all(|n| n.similarity == 0.0));
    }

    #[test]
    fn errors() {
        let q = random(Style::Expert, 3, 4, 6);
        let t = random(Style::Layman, 3, 4, 7);
        assert!(knn(&q, &t, 4).is_err());
        assert!(knn(&q, &t, 0).is_err());
        assert!(knn(&q, &random(Style::Layman, 3, 5, 8), 1).is_err());
    }
}
