//! Saliency-map similarity scores: Pearson correlation over pixels (PCC),
//! normalized scanpath saliency (NSS), and ROC area (AUC) in two variants —
//! fixated pixels against the rest (points) and reference-map top-quantile
//! pixels against the rest (maps).
//!
//! AUC is computed exactly through the Mann-Whitney rank-sum formulation with
//! midrank tie handling; mean/std are population statistics throughout.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::fixmap::SaliencyMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Nss,
    AucPoints,
    AucMaps,
    Pcc,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::Nss,
        MetricKind::AucPoints,
        MetricKind::AucMaps,
        MetricKind::Pcc,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MetricKind::Nss => "nss",
            MetricKind::AucPoints => "auc-points",
            MetricKind::AucMaps => "auc-maps",
            MetricKind::Pcc => "pcc",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nss" => Ok(MetricKind::Nss),
            "auc-points" => Ok(MetricKind::AucPoints),
            "auc-maps" => Ok(MetricKind::AucMaps),
            "pcc" => Ok(MetricKind::Pcc),
            other => Err(MetricError::UnknownKind(other.to_string())),
        }
    }
}

/// A metric value plus the support it was computed from (fixation count for
/// the point metrics, pixel count for the map metrics).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricScore {
    pub kind: MetricKind,
    pub value: f64,
    pub n_support: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("maps have different dimensions")]
    DimensionMismatch,
    #[error("map has zero variance")]
    DegenerateMap,
    #[error("no fixation points given")]
    NoPoints,
    #[error("fixation ({0}, {1}) outside the map")]
    PointOutOfBounds(f64, f64),
    #[error("fixations cover every pixel; AUC undefined")]
    AllPixelsPositive,
    #[error("top_frac must lie strictly between 0 and 1")]
    InvalidTopFrac,
    #[error("unknown metric '{0}'")]
    UnknownKind(String),
}

/// Population mean and sum of squared deviations about it.
pub(crate) fn centered_moments(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ssd = values
        .iter()
        .map(|v| {
            let d = v - mean;
            d * d
        })
        .sum::<f64>();
    (mean, ssd)
}

/// Map a fixation coordinate to a pixel: round half away from zero, then
/// clamp to the grid. Errors if the coordinate itself is out of bounds.
pub(crate) fn round_to_pixel(x: f64, y: f64, width: u32, height: u32) -> Result<(u32, u32), MetricError> {
    if !x.is_finite()
        || !y.is_finite()
        || x < 0.0
        || x >= width as f64
        || y < 0.0
        || y >= height as f64
    {
        return Err(MetricError::PointOutOfBounds(x, y));
    }
    let px = (x.round() as u32).min(width - 1);
    let py = (y.round() as u32).min(height - 1);
    Ok((px, py))
}

/// Pearson linear correlation over all pixels, population statistics.
pub fn pcc(a: &SaliencyMap, b: &SaliencyMap) -> Result<MetricScore, MetricError> {
    if a.width_px() != b.width_px() || a.height_px() != b.height_px() {
        return Err(MetricError::DimensionMismatch);
    }
    let (mean_a, ssd_a) = centered_moments(a.values());
    let (mean_b, ssd_b) = centered_moments(b.values());
    let value = pcc_from_moments(a.values(), mean_a, ssd_a, b.values(), mean_b, ssd_b)?;
    Ok(MetricScore {
        kind: MetricKind::Pcc,
        value,
        n_support: a.values().len(),
    })
}

/// Shared PCC core so the sweep can reuse per-frame moments; bit-identical to
/// the standalone path.
pub(crate) fn pcc_from_moments(
    a: &[f64],
    mean_a: f64,
    ssd_a: f64,
    b: &[f64],
    mean_b: f64,
    ssd_b: f64,
) -> Result<f64, MetricError> {
    if ssd_a == 0.0 || ssd_b == 0.0 {
        return Err(MetricError::DegenerateMap);
    }
    let cross: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - mean_a) * (y - mean_b))
        .sum();
    Ok((cross / (ssd_a.sqrt() * ssd_b.sqrt())).clamp(-1.0, 1.0))
}

/// Normalized scanpath saliency: mean of the z-scored map sampled at the
/// fixation pixels.
pub fn nss(map: &SaliencyMap, fixations: &[(f64, f64)]) -> Result<MetricScore, MetricError> {
    if fixations.is_empty() {
        return Err(MetricError::NoPoints);
    }
    let (mean, ssd) = centered_moments(map.values());
    if ssd == 0.0 {
        return Err(MetricError::DegenerateMap);
    }
    let std = (ssd / map.values().len() as f64).sqrt();
    let mut acc = 0.0;
    for &(x, y) in fixations {
        let (px, py) = round_to_pixel(x, y, map.width_px(), map.height_px())?;
        acc += (map.get(px, py) - mean) / std;
    }
    Ok(MetricScore {
        kind: MetricKind::Nss,
        value: acc / fixations.len() as f64,
        n_support: fixations.len(),
    })
}

/// Indices of `values` sorted ascending by value.
pub(crate) fn sorted_order(values: &[f64]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..values.len() as u32).collect();
    order.sort_unstable_by(|&a, &b| values[a as usize].total_cmp(&values[b as usize]));
    order
}

/// AUC from the rank sum of the positive class.
pub(crate) fn auc_from_rank_sum(rank_sum_pos: f64, n_pos: usize, n_total: usize) -> f64 {
    let n_pos_f = n_pos as f64;
    let n_neg_f = (n_total - n_pos) as f64;
    let u = rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0;
    u / (n_pos_f * n_neg_f)
}

/// Rank-sum AUC with midrank ties. `order` must be the ascending sort order
/// of `values`; `is_positive` labels each index.
pub(crate) fn auc_from_order(
    values: &[f64],
    order: &[u32],
    is_positive: impl Fn(usize) -> bool,
    n_pos: usize,
) -> f64 {
    let n = values.len();
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < n {
        let v = values[order[i] as usize];
        let mut j = i;
        let mut pos_in_group = 0usize;
        while j < n && values[order[j] as usize] == v {
            if is_positive(order[j] as usize) {
                pos_in_group += 1;
            }
            j += 1;
        }
        if pos_in_group > 0 {
            // ranks are 1-based; a tie group spanning i..j has midrank (i+1+j)/2
            rank_sum_pos += pos_in_group as f64 * ((i + 1 + j) as f64 / 2.0);
        }
        i = j;
    }
    auc_from_rank_sum(rank_sum_pos, n_pos, n)
}

/// Midrank of `v` among a sorted population (1-based, halves on ties).
pub(crate) fn midrank_in_sorted(sorted: &[f64], v: f64) -> f64 {
    let below = sorted.partition_point(|&s| s < v);
    let not_above = sorted.partition_point(|&s| s <= v);
    (below + not_above + 1) as f64 / 2.0
}

/// ROC area with fixated pixels as positives and all remaining pixels as
/// negatives; ties count one half.
pub fn auc_points(map: &SaliencyMap, fixations: &[(f64, f64)]) -> Result<MetricScore, MetricError> {
    if fixations.is_empty() {
        return Err(MetricError::NoPoints);
    }
    let n = map.values().len();
    let mut positive = vec![false; n];
    let mut n_pos = 0usize;
    for &(x, y) in fixations {
        let (px, py) = round_to_pixel(x, y, map.width_px(), map.height_px())?;
        let idx = py as usize * map.width_px() as usize + px as usize;
        if !positive[idx] {
            positive[idx] = true;
            n_pos += 1;
        }
    }
    if n_pos == n {
        return Err(MetricError::AllPixelsPositive);
    }
    let order = sorted_order(map.values());
    let value = auc_from_order(map.values(), &order, |i| positive[i], n_pos);
    Ok(MetricScore {
        kind: MetricKind::AucPoints,
        value,
        n_support: fixations.len(),
    })
}

pub(crate) struct QuantileMask {
    pub mask: Vec<bool>,
    pub n_pos: usize,
}

/// Binarize at the nearest-rank `(1 - top_frac)` quantile: positives are the
/// pixels at or above it. When the quantile lands on the map minimum (maps
/// dominated by one low value) that rule would mark every pixel positive, so
/// the positive set shrinks to the strictly-greater pixels.
pub(crate) fn top_quantile_mask(values: &[f64], top_frac: f64) -> Result<QuantileMask, MetricError> {
    if !top_frac.is_finite() || top_frac <= 0.0 || top_frac >= 1.0 {
        return Err(MetricError::InvalidTopFrac);
    }
    let n = values.len();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Err(MetricError::DegenerateMap);
    }
    let rank = ((1.0 - top_frac) * n as f64).ceil() as usize;
    let rank = rank.clamp(1, n);
    let mut sorted = values.to_vec();
    let (_, threshold, _) = sorted.select_nth_unstable_by(rank - 1, f64::total_cmp);
    let threshold = *threshold;
    let strict = threshold == min;
    let mut mask = vec![false; n];
    let mut n_pos = 0usize;
    for (i, &v) in values.iter().enumerate() {
        let hit = if strict { v > threshold } else { v >= threshold };
        if hit {
            mask[i] = true;
            n_pos += 1;
        }
    }
    Ok(QuantileMask { mask, n_pos })
}

/// Map-vs-map ROC area: the reference map is binarized at its top-`top_frac`
/// pixel quantile and the candidate map is scored against that labeling.
pub fn auc_maps(
    candidate: &SaliencyMap,
    reference: &SaliencyMap,
    top_frac: f64,
) -> Result<MetricScore, MetricError> {
    if candidate.width_px() != reference.width_px()
        || candidate.height_px() != reference.height_px()
    {
        return Err(MetricError::DimensionMismatch);
    }
    let labels = top_quantile_mask(reference.values(), top_frac)?;
    let order = sorted_order(candidate.values());
    let value = auc_from_order(candidate.values(), &order, |i| labels.mask[i], labels.n_pos);
    Ok(MetricScore {
        kind: MetricKind::AucMaps,
        value,
        n_support: labels.n_pos,
    })
}
