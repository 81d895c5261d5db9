//! Fixtures and independent reference implementations shared by the
//! integration test targets.
#![allow(dead_code)]

use medstyle_core::corpus::{Corpus, Sentence, Style};
use medstyle_core::eval::{Direction, RatingRecord, SystemMetrics};
use medstyle_core::mining::EmbeddingMatrix;
use medstyle_core::term_graph::TermEdge;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Mining reference: dense O(n^2) evaluation of the margin criterion.

pub struct OraclePair {
    pub expert: usize,
    pub layman: usize,
    pub margin: f64,
}

fn unit(rows: &[Vec<f32>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| {
            let norm = r.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt();
            r.iter().map(|&v| f64::from(v) / norm).collect()
        })
        .collect()
}

fn top_k_sum(mut sims: Vec<f64>, k: usize) -> f64 {
    sims.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sims.iter().take(k).sum()
}

/// Best partner by margin in both directions, union, greedy one-use sweep in
/// descending margin order, then the threshold.
pub fn exhaustive_mine(expert: &[Vec<f32>], layman: &[Vec<f32>], k: usize, threshold: f64) -> Vec<OraclePair> {
    let (x, y) = (unit(expert), unit(layman));
    let cos: Vec<Vec<f64>> = x
        .iter()
        .map(|a| y.iter().map(|b| a.iter().zip(b).map(|(p, q)| p * q).sum()).collect())
        .collect();
    let rx: Vec<f64> = cos.iter().map(|row| top_k_sum(row.clone(), k)).collect();
    let ry: Vec<f64> = (0..y.len())
        .map(|j| top_k_sum(cos.iter().map(|row| row[j]).collect(), k))
        .collect();
    let m = |i: usize, j: usize| {
        let denom = rx[i] / (2 * k) as f64 + ry[j] / (2 * k) as f64;
        (denom > 0.0).then(|| cos[i][j] / denom)
    };

    let mut candidates: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..x.len() {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..y.len() {
            if let Some(v) = m(i, j) {
                if best.map_or(true, |(_, b)| v > b) {
                    best = Some((j, v));
                }
            }
        }
        if let Some((j, v)) = best {
            candidates.push((i, j, v));
        }
    }
    for j in 0..y.len() {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..x.len() {
            if let Some(v) = m(i, j) {
                if best.map_or(true, |(_, b)| v > b) {
                    best = Some((i, v));
                }
            }
        }
        if let Some((i, v)) = best {
            if !candidates.iter().any(|&(a, b, _)| a == i && b == j) {
                candidates.push((i, j, v));
            }
        }
    }
    candidates.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));

    let mut used_x = vec![false; x.len()];
    let mut used_y = vec![false; y.len()];
    let mut out = Vec::new();
    for (i, j, v) in candidates {
        if used_x[i] || used_y[j] {
            continue;
        }
        used_x[i] = true;
        used_y[j] = true;
        if v >= threshold {
            out.push(OraclePair {
                expert: i,
                layman: j,
                margin: v,
            });
        }
    }
    out
}

/// Clustered Gaussian embeddings: rows of both styles scatter around shared
/// centres, so some cross-style pairs are near-duplicates and others compete.
pub fn clustered_instance(seed: u64) -> (EmbeddingMatrix, EmbeddingMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = rng.gen_range(60..=200);
    let n_expert = rng.gen_range(total / 3..=2 * total / 3);
    let n_layman = total - n_expert;
    let dim = rng.gen_range(8..=48);
    let centres: Vec<Vec<f64>> = (0..rng.gen_range(5..30))
        .map(|_| (0..dim).map(|_| gaussian(&mut rng)).collect())
        .collect();
    let spread = rng.gen_range(0.05..0.8);
    let mut make = |n: usize, style: Style, prefix: &str| {
        let mut values = Vec::with_capacity(n * dim);
        for _ in 0..n {
            let c = &centres[rng.gen_range(0..centres.len())];
            values.extend(c.iter().map(|&v| (v + spread * gaussian(&mut rng)) as f32));
        }
        let ids = (0..n).map(|i| format!("{prefix}{i}")).collect();
        EmbeddingMatrix::new(style, ids, dim, values).unwrap()
    };
    let e = make(n_expert, Style::Expert, "e");
    let l = make(n_layman, Style::Layman, "l");
    (e, l)
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller; enough for fixtures.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn rows(m: &EmbeddingMatrix) -> Vec<Vec<f32>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

// ---------------------------------------------------------------------------
// Terminology graph fixture: 12 annotated concepts with hand-traced outcomes.

fn annotated(id: &str, style: Style, text: &str, cui: &str, phrase: &str) -> Sentence {
    let s = Sentence::from_text(id, style, text);
    let p = medstyle_core::tokenize(phrase);
    let start = s
        .tokens
        .windows(p.len())
        .position(|w| w == p.as_slice())
        .unwrap_or_else(|| panic!("{phrase:?} not in {text:?}"));
    s.with_concept(cui, start, start + p.len())
}

/// `(cui, expert phrase, layman phrase)` annotations; one sentence each.
const GRAPH_MENTIONS: &[(&str, &str, &str)] = &[
    // C01 clean pair, repeated so frequency is 2 on both sides.
    ("C01", "dyspnea", "shortness of breath"),
    ("C01", "dyspnea", "shortness of breath"),
    // C02 spelling variant, distance 1 -> excluded.
    ("C02", "anaemia", "anemia"),
    // C03 identical surfaces -> excluded.
    ("C03", "fever", "fever"),
    // C04 distance 3, one below the threshold -> excluded.
    ("C04", "naevus", "nevi"),
    // C05 distance exactly 4 -> kept.
    ("C05", "ulcer", "sore"),
    // C06 expert tie at frequency 1: "hyperthermia" sorts before "pyrexia".
    ("C06", "pyrexia", "high temperature"),
    ("C06", "hyperthermia", "high temperature"),
    // C07 layman tie: "belly pain" < "stomach ache".
    ("C07", "abdominal pain", "stomach ache"),
    ("C07", "abdominal pain", "belly pain"),
    // C08 expert majority beats lexicographic order: "tachycardia" x2 vs "palpitations" x1.
    ("C08", "tachycardia", "fast heartbeat"),
    ("C08", "tachycardia", "fast heartbeat"),
    ("C08", "palpitations", "fast heartbeat"),
    // C09 and C10 collide on the layman surface "chills"; C09 wins on frequency.
    ("C09", "rigors", "chills"),
    ("C09", "rigors", "chills"),
    ("C10", "shivering fits", "chills"),
    // C11 and C12 collide on the expert surface "syncope" at equal frequency;
    // the smaller CUI wins.
    ("C11", "syncope", "fainting"),
    ("C12", "syncope", "passing out"),
];

pub fn graph_fixture_corpus() -> Corpus {
    let mut sentences = Vec::new();
    for (i, &(cui, expert, layman)) in GRAPH_MENTIONS.iter().enumerate() {
        sentences.push(annotated(
            &format!("e{i}"),
            Style::Expert,
            &format!("the patient presented with {expert} today"),
            cui,
            expert,
        ));
        sentences.push(annotated(
            &format!("l{i}"),
            Style::Layman,
            &format!("you may notice {layman} at first"),
            cui,
            layman,
        ));
    }
    Corpus::new(sentences).unwrap()
}

/// Hand-traced result for [`graph_fixture_corpus`] with `d = 4`:
/// - C02 (distance 1), C03 (identical) and C04 (distance 3) are excluded;
/// - C05 sits exactly on the threshold and is kept;
/// - C06 votes "hyperthermia" (lexicographically before "pyrexia");
/// - C07 votes "belly pain" (before "stomach ache");
/// - C08 votes "tachycardia" by frequency;
/// - C10 loses "chills" to C09; C12 loses "syncope" to C11.
pub fn graph_fixture_edges() -> Vec<TermEdge> {
    vec![
        TermEdge::new("C01", "dyspnea", "shortness of breath"),
        TermEdge::new("C05", "ulcer", "sore"),
        TermEdge::new("C06", "hyperthermia", "high temperature"),
        TermEdge::new("C07", "abdominal pain", "belly pain"),
        TermEdge::new("C08", "tachycardia", "fast heartbeat"),
        TermEdge::new("C09", "rigors", "chills"),
        TermEdge::new("C11", "syncope", "fainting"),
    ]
}

// ---------------------------------------------------------------------------
// Published system-level results (human ratings and automatic metrics), in
// the order: Style Transformer, DeleteAndRetrieve, ControlledGen, Basic,
// KBA only, SSL only, KBA+SSL, KBA+SSL Large.

pub const SYSTEMS: [&str; 8] = ["styletr", "dar", "ctrlgen", "basic", "kba", "ssl", "kba+ssl", "large"];
pub const BLEU: [f64; 8] = [61.2, 30.6, 80.4, 19.8, 37.1, 59.2, 39.2, 40.2];
pub const STYLE_ACC: [f64; 8] = [0.43, 0.64, 0.14, 0.66, 0.62, 0.41, 0.63, 0.61];
pub const PPL: [f64; 8] = [207.0, 141.0, 171.0, 338.0, 240.0, 163.0, 159.0, 127.0];
/// `[csr, usr, gsr, ucsr, ugsr, osr]` per system.
pub const RATES: [[f64; 6]; 8] = [
    [0.703, 0.281, 0.615, 0.176, 0.058, 0.113],
    [0.695, 0.321, 0.472, 0.231, 0.148, 0.123],
    [0.852, 0.195, 0.739, 0.103, 0.147, 0.086],
    [0.683, 0.301, 0.465, 0.161, 0.088, 0.068],
    [0.733, 0.315, 0.600, 0.194, 0.131, 0.113],
    [0.870, 0.303, 0.732, 0.257, 0.215, 0.200],
    [0.825, 0.373, 0.652, 0.301, 0.224, 0.200],
    [0.860, 0.373, 0.666, 0.320, 0.235, 0.216],
];

pub fn system_table() -> Vec<SystemMetrics> {
    (0..8)
        .map(|i| SystemMetrics {
            system: SYSTEMS[i].to_string(),
            bleu: BLEU[i],
            style_accuracy: STYLE_ACC[i],
            ppl: PPL[i],
            csr: RATES[i][0],
            usr: RATES[i][1],
            gsr: RATES[i][2],
        })
        .collect()
}

/// Builds `n` single-annotator ratings whose six success rates are exactly
/// `rates` (given as fractions with denominator `n`), or `None` when the
/// rates are not realisable by any set of items.
///
/// Items are partitioned into the eight content/understanding/grammar
/// success patterns; the cell sizes follow from inclusion-exclusion with the
/// free content-and-grammar-only cell set as large as the grammar total allows.
pub fn ratings_for(rates: [f64; 6], n: usize) -> Option<Vec<RatingRecord>> {
    let count = |r: f64| (r * n as f64).round() as i64;
    let [c, u, g, uc, ug, all] = rates.map(count);
    let uc_only = uc - all;
    let ug_only = ug - all;
    let u_only = u - all - uc_only - ug_only;
    let cg_only = (g - all - ug_only).min(c - all - uc_only);
    let c_only = c - all - uc_only - cg_only;
    let g_only = g - all - ug_only - cg_only;
    let none = n as i64 - (all + uc_only + ug_only + u_only + cg_only + c_only + g_only);
    let cells = [
        (all, (5, 5, 5)),
        (uc_only, (5, 5, 2)),
        (ug_only, (2, 5, 5)),
        (u_only, (2, 5, 2)),
        (cg_only, (5, 2, 5)),
        (c_only, (5, 2, 2)),
        (g_only, (2, 2, 5)),
        (none, (2, 2, 2)),
    ];
    if cells.iter().any(|&(k, _)| k < 0) {
        return None;
    }
    let mut out = Vec::with_capacity(n);
    for (k, (cs, us, gs)) in cells {
        for _ in 0..k {
            let id = format!("item{:04}", out.len());
            out.push(RatingRecord::new(id, Direction::E2L, cs, us, gs));
        }
    }
    Some(out)
}

// ---------------------------------------------------------------------------

/// Peak resident set size of this process in bytes, when the platform reports it.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}
