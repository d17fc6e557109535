//! Oracles and helpers shared by the integration test targets. Everything
//! here is written directly from the definitions and stays independent of
//! the library's computation paths.

#![allow(dead_code)] // each test target uses its own subset

use std::fmt::Write as _;

use gazelag::fixmap::{read_map_csv, SaliencyMap};

/// Brute-force all-pairs AUC: the fraction of (positive, negative) pairs
/// where the positive value outranks the negative, ties counting one half.
pub fn all_pairs_auc(values: &[f64], positive: &[bool]) -> f64 {
    let pos: Vec<f64> = values
        .iter()
        .zip(positive)
        .filter(|(_, p)| **p)
        .map(|(v, _)| *v)
        .collect();
    let neg: Vec<f64> = values
        .iter()
        .zip(positive)
        .filter(|(_, p)| !**p)
        .map(|(v, _)| *v)
        .collect();
    let mut score = 0.0;
    for &p in &pos {
        for &q in &neg {
            if p > q {
                score += 1.0;
            } else if p == q {
                score += 0.5;
            }
        }
    }
    score / (pos.len() as f64 * neg.len() as f64)
}

/// P(W+ <= w) for the signed-rank statistic by enumerating all 2^n sign
/// vectors over ranks 1..=n.
pub fn enumerated_signed_rank_cdf(w: f64, n: usize) -> f64 {
    let mut at_or_below = 0u64;
    for mask in 0u64..(1u64 << n) {
        let sum: u64 = (1..=n as u64).filter(|k| mask >> (k - 1) & 1 == 1).sum();
        if sum as f64 <= w {
            at_or_below += 1;
        }
    }
    at_or_below as f64 / (1u64 << n) as f64
}

/// Build a map with arbitrary values through the public lossless-CSV import;
/// shortest round-trip float formatting keeps the values bit-exact.
pub fn map_from_values(width: usize, values: &[f64]) -> SaliencyMap {
    assert_eq!(values.len() % width, 0);
    let mut text = String::with_capacity(values.len() * 8);
    for row in values.chunks(width) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                text.push(',');
            }
            write!(text, "{v}").unwrap();
        }
        text.push('\n');
    }
    read_map_csv(&text).unwrap()
}

/// Spearman rank correlation with midranks on ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let rank = |vals: &[f64]| -> Vec<f64> {
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let mut ranks = vec![0.0; vals.len()];
        let mut i = 0;
        while i < vals.len() {
            let mut j = i;
            while j < vals.len() && vals[order[j]] == vals[order[i]] {
                j += 1;
            }
            let midrank = (i + 1 + j) as f64 / 2.0;
            for &k in &order[i..j] {
                ranks[k] = midrank;
            }
            i = j;
        }
        ranks
    };
    let rx = rank(x);
    let ry = rank(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..x.len() {
        let dx = rx[i] - mx;
        let dy = ry[i] - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    cov / (vx.sqrt() * vy.sqrt())
}
