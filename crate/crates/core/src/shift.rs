//! Discrete time-shift sweep between an actor and a viewer gaze stream.
//!
//! For every evaluated frame `t` and shift `tau`, the sweep scores the
//! actor's view of frame `t` against the viewer's at `t + tau` (positive
//! `tau` = the viewer lags the actor). Map metrics (PCC, map AUC) compare
//! the two frames' fixation maps with the actor first; point metrics (NSS,
//! point AUC) evaluate the actor's raw gaze points against the viewer's map.
//! Cells where either side has no gaze, or where `t + tau` leaves the video,
//! are absent rather than zero-filled.
//!
//! Per-frame viewer artifacts (maps, moments, sorted values, quantile masks)
//! are cached in a rolling window and rows may be computed in parallel; every
//! cell is a pure function and aggregation runs in fixed frame order, so
//! results are bit-identical for any thread count or chunk size.

use std::collections::VecDeque;
use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::fixmap::{map_for_frame, KernelParams, SaliencyMap};
use crate::gaze::GazeStream;
use crate::metrics::{
    auc_from_order, auc_from_rank_sum, centered_moments, midrank_in_sorted, pcc_from_moments,
    round_to_pixel, sorted_order, top_quantile_mask, MetricKind,
};

#[derive(Debug, Error, PartialEq)]
pub enum ShiftError {
    #[error("stream metadata mismatch: {0}")]
    MetaMismatch(String),
    #[error("shift grid is empty")]
    EmptyGrid,
    #[error("frame step must be at least 1")]
    InvalidFrameStep,
    #[error("no comparable frames between the two streams")]
    NoComparableFrames,
    #[error("tau {0} not in the sweep grid")]
    TauNotInGrid(i32),
}

/// Inclusive shift range in frames with a positive step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShiftGrid {
    tau_min: i32,
    tau_max: i32,
    step: u32,
}

impl ShiftGrid {
    pub fn new(tau_min: i32, tau_max: i32, step: u32) -> Result<Self, ShiftError> {
        if tau_min > tau_max || step == 0 {
            return Err(ShiftError::EmptyGrid);
        }
        Ok(Self {
            tau_min,
            tau_max,
            step,
        })
    }

    pub fn tau_min(&self) -> i32 {
        self.tau_min
    }

    pub fn tau_max(&self) -> i32 {
        self.tau_max
    }

    pub fn step(&self) -> u32 {
        self.step
    }

    pub fn taus(&self) -> Vec<i32> {
        (self.tau_min..=self.tau_max)
            .step_by(self.step as usize)
            .collect()
    }
}

/// Shift in frames converted to milliseconds.
pub fn tau_to_ms(tau: i32, fps: f64) -> f64 {
    tau as f64 * 1000.0 / fps
}

/// Full per-(frame, tau) score matrix with per-tau aggregates.
#[derive(Debug, Clone)]
pub struct ShiftSweepResult {
    pub grid: ShiftGrid,
    pub metric: MetricKind,
    pub taus: Vec<i32>,
    /// Frame indices actually evaluated (every `frame_step`-th frame).
    pub frames: Vec<u32>,
    /// `scores[i][j]` is the score at `(frames[i], taus[j])`.
    pub scores: Vec<Vec<Option<f64>>>,
    pub per_tau_mean: Vec<Option<f64>>,
    /// Population standard deviation of the present scores per column.
    pub per_tau_std: Vec<Option<f64>>,
    pub per_tau_n: Vec<usize>,
    pub fps: f64,
}

impl ShiftSweepResult {
    pub fn tau_ms(&self, tau: i32) -> f64 {
        tau_to_ms(tau, self.fps)
    }

    /// Machine-readable sweep report: one row per tau.
    pub fn write_report_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "tau_frames,tau_ms,metric,mean,std,n")?;
        for (j, &tau) in self.taus.iter().enumerate() {
            let mean = fmt_stat(self.per_tau_mean[j]);
            let std = fmt_stat(self.per_tau_std[j]);
            writeln!(
                out,
                "{},{:.6},{},{},{},{}",
                tau,
                self.tau_ms(tau),
                self.metric.as_str(),
                mean,
                std,
                self.per_tau_n[j]
            )?;
        }
        Ok(())
    }
}

fn fmt_stat(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.6}"),
        None => "nan".to_string(),
    }
}

/// Per-viewer-frame data needed to score cells, precomputed once per frame.
enum ViewerArtifact {
    Pcc {
        map: SaliencyMap,
        mean: f64,
        ssd: f64,
    },
    Nss {
        map: SaliencyMap,
        mean: f64,
        std: f64,
    },
    AucPoints {
        map: SaliencyMap,
        sorted: Vec<f64>,
    },
    AucMaps {
        mask: Vec<bool>,
        n_pos: usize,
    },
}

fn build_viewer_artifact(
    viewer: &GazeStream,
    frame: u32,
    params: &KernelParams,
    metric: MetricKind,
    top_frac: f64,
) -> Option<ViewerArtifact> {
    let map = map_for_frame(viewer, frame, 0, params)?;
    match metric {
        MetricKind::Pcc => {
            let (mean, ssd) = centered_moments(map.values());
            if ssd == 0.0 {
                return None;
            }
            Some(ViewerArtifact::Pcc { map, mean, ssd })
        }
        MetricKind::Nss => {
            let (mean, ssd) = centered_moments(map.values());
            if ssd == 0.0 {
                return None;
            }
            let std = (ssd / map.values().len() as f64).sqrt();
            Some(ViewerArtifact::Nss { map, mean, std })
        }
        MetricKind::AucPoints => {
            let mut sorted = map.values().to_vec();
            sorted.sort_unstable_by(f64::total_cmp);
            Some(ViewerArtifact::AucPoints { map, sorted })
        }
        MetricKind::AucMaps => top_quantile_mask(map.values(), top_frac)
            .ok()
            .map(|q| ViewerArtifact::AucMaps {
                mask: q.mask,
                n_pos: q.n_pos,
            }),
    }
}

/// Actor-side data for one evaluated frame.
enum ActorRow {
    /// Raw valid gaze points plus their deduplicated pixel indices.
    Points {
        points: Vec<(f64, f64)>,
        pixels: Vec<usize>,
    },
    Map {
        map: SaliencyMap,
        mean: f64,
        ssd: f64,
    },
    MapOrder {
        map: SaliencyMap,
        order: Vec<u32>,
    },
}

fn build_actor_row(
    actor: &GazeStream,
    frame: u32,
    params: &KernelParams,
    metric: MetricKind,
) -> Option<ActorRow> {
    match metric {
        MetricKind::Nss | MetricKind::AucPoints => {
            let points = actor.samples_for_frame(frame, 0);
            if points.is_empty() {
                return None;
            }
            let width = actor.meta.width_px;
            let height = actor.meta.height_px;
            let mut pixels: Vec<usize> = points
                .iter()
                .map(|&(x, y)| {
                    let (px, py) =
                        round_to_pixel(x, y, width, height).expect("valid samples lie in bounds");
                    py as usize * width as usize + px as usize
                })
                .collect();
            pixels.sort_unstable();
            pixels.dedup();
            Some(ActorRow::Points { points, pixels })
        }
        MetricKind::Pcc => {
            let map = map_for_frame(actor, frame, 0, params)?;
            let (mean, ssd) = centered_moments(map.values());
            if ssd == 0.0 {
                return None;
            }
            Some(ActorRow::Map { map, mean, ssd })
        }
        MetricKind::AucMaps => {
            let map = map_for_frame(actor, frame, 0, params)?;
            let order = sorted_order(map.values());
            Some(ActorRow::MapOrder { map, order })
        }
    }
}

fn score_cell(actor_row: &ActorRow, viewer_art: &ViewerArtifact) -> Option<f64> {
    match (actor_row, viewer_art) {
        (
            ActorRow::Map { map, mean, ssd },
            ViewerArtifact::Pcc {
                map: vmap,
                mean: vmean,
                ssd: vssd,
            },
        ) => pcc_from_moments(map.values(), *mean, *ssd, vmap.values(), *vmean, *vssd).ok(),
        (
            ActorRow::Points { points, .. },
            ViewerArtifact::Nss { map, mean, std },
        ) => {
            let mut acc = 0.0;
            for &(x, y) in points {
                let (px, py) = round_to_pixel(x, y, map.width_px(), map.height_px())
                    .expect("valid samples lie in bounds");
                acc += (map.get(px, py) - mean) / std;
            }
            Some(acc / points.len() as f64)
        }
        (
            ActorRow::Points { pixels, .. },
            ViewerArtifact::AucPoints { map, sorted },
        ) => {
            let n = map.values().len();
            if pixels.len() == n {
                return None;
            }
            let rank_sum: f64 = pixels
                .iter()
                .map(|&i| midrank_in_sorted(sorted, map.values()[i]))
                .sum();
            Some(auc_from_rank_sum(rank_sum, pixels.len(), n))
        }
        (
            ActorRow::MapOrder { map, order },
            ViewerArtifact::AucMaps { mask, n_pos },
        ) => Some(auc_from_order(
            map.values(),
            order,
            |i| mask[i],
            *n_pos,
        )),
        _ => unreachable!("actor row and viewer artifact always share the metric"),
    }
}

/// Rolling cache of viewer artifacts over a contiguous frame range.
struct ViewerCache {
    start: i64,
    entries: VecDeque<Option<ViewerArtifact>>,
}

impl ViewerCache {
    fn new() -> Self {
        Self {
            start: 0,
            entries: VecDeque::new(),
        }
    }

    fn get(&self, frame: i64) -> Option<&ViewerArtifact> {
        let offset = frame - self.start;
        if offset < 0 || offset >= self.entries.len() as i64 {
            return None;
        }
        self.entries[offset as usize].as_ref()
    }

    /// Make the cache cover exactly `lo..=hi`, building new entries in
    /// parallel and dropping frames that fell out of the window.
    fn advance(
        &mut self,
        lo: i64,
        hi: i64,
        viewer: &GazeStream,
        params: &KernelParams,
        metric: MetricKind,
        top_frac: f64,
    ) {
        if self.entries.is_empty() || self.start + (self.entries.len() as i64) < lo {
            self.entries.clear();
            self.start = lo;
        }
        while self.start < lo && !self.entries.is_empty() {
            self.entries.pop_front();
            self.start += 1;
        }
        let next = self.start + self.entries.len() as i64;
        if next <= hi {
            let new_frames: Vec<u32> = (next..=hi).map(|f| f as u32).collect();
            let built: Vec<Option<ViewerArtifact>> = new_frames
                .par_iter()
                .map(|&f| build_viewer_artifact(viewer, f, params, metric, top_frac))
                .collect();
            self.entries.extend(built);
        }
    }
}

/// Chunk size keeping the rolling cache near a fixed memory budget.
fn chunk_len(metric: MetricKind, width: u32, height: u32, span: usize) -> usize {
    let pixels = width as usize * height as usize;
    let artifact_bytes = match metric {
        MetricKind::Pcc | MetricKind::Nss => pixels * 8,
        MetricKind::AucPoints => pixels * 16,
        MetricKind::AucMaps => pixels,
    }
    .max(1);
    const BUDGET: usize = 256 << 20;
    (BUDGET / artifact_bytes).saturating_sub(span).clamp(16, 512)
}

/// Sweep the metric over every `frame_step`-th actor frame and every shift in
/// the grid.
pub fn shift_sweep(
    actor: &GazeStream,
    viewer: &GazeStream,
    metric: MetricKind,
    grid: ShiftGrid,
    params: &KernelParams,
    frame_step: u32,
    top_frac: f64,
) -> Result<ShiftSweepResult, ShiftError> {
    if actor.meta.width_px != viewer.meta.width_px
        || actor.meta.height_px != viewer.meta.height_px
    {
        return Err(ShiftError::MetaMismatch(format!(
            "dimensions differ: {}x{} vs {}x{}",
            actor.meta.width_px, actor.meta.height_px, viewer.meta.width_px, viewer.meta.height_px
        )));
    }
    if actor.meta.fps != viewer.meta.fps {
        return Err(ShiftError::MetaMismatch(format!(
            "frame rates differ: {} vs {}",
            actor.meta.fps, viewer.meta.fps
        )));
    }
    if frame_step == 0 {
        return Err(ShiftError::InvalidFrameStep);
    }

    let taus = grid.taus();
    let n_taus = taus.len();
    let actor_total = actor.effective_n_frames();
    let viewer_total = viewer.effective_n_frames() as i64;
    let frames: Vec<u32> = (0..actor_total).step_by(frame_step as usize).collect();
    if frames.is_empty() || viewer_total == 0 {
        return Err(ShiftError::NoComparableFrames);
    }

    let span = (grid.tau_max - grid.tau_min) as usize + 1;
    let chunk = chunk_len(metric, actor.meta.width_px, actor.meta.height_px, span);
    let mut cache = ViewerCache::new();
    let mut scores: Vec<Vec<Option<f64>>> = Vec::with_capacity(frames.len());

    for chunk_frames in frames.chunks(chunk) {
        let lo = (*chunk_frames.first().unwrap() as i64 + grid.tau_min as i64).max(0);
        let hi = (*chunk_frames.last().unwrap() as i64 + grid.tau_max as i64).min(viewer_total - 1);
        if hi >= lo {
            cache.advance(lo, hi, viewer, params, metric, top_frac);
        }
        let cache_ref = &cache;
        let rows: Vec<Vec<Option<f64>>> = chunk_frames
            .par_iter()
            .map(|&t| {
                let Some(actor_row) = build_actor_row(actor, t, params, metric) else {
                    return vec![None; n_taus];
                };
                taus.iter()
                    .map(|&tau| {
                        let v = t as i64 + tau as i64;
                        if v < 0 || v >= viewer_total {
                            return None;
                        }
                        let art = cache_ref.get(v)?;
                        score_cell(&actor_row, art)
                    })
                    .collect()
            })
            .collect();
        scores.extend(rows);
    }

    let mut per_tau_mean = Vec::with_capacity(n_taus);
    let mut per_tau_std = Vec::with_capacity(n_taus);
    let mut per_tau_n = Vec::with_capacity(n_taus);
    for j in 0..n_taus {
        let column: Vec<f64> = scores.iter().filter_map(|row| row[j]).collect();
        let n = column.len();
        per_tau_n.push(n);
        if n == 0 {
            per_tau_mean.push(None);
            per_tau_std.push(None);
        } else {
            let (mean, ssd) = centered_moments(&column);
            per_tau_mean.push(Some(mean));
            per_tau_std.push(Some((ssd / n as f64).sqrt()));
        }
    }
    if per_tau_n.iter().all(|&n| n == 0) {
        return Err(ShiftError::NoComparableFrames);
    }

    Ok(ShiftSweepResult {
        grid,
        metric,
        taus,
        frames,
        scores,
        per_tau_mean,
        per_tau_std,
        per_tau_n,
        fps: actor.meta.fps,
    })
}

/// The shift with the best mean score among columns whose support reaches at
/// least half the maximum support. Ties prefer the smallest |tau|, then the
/// positive one.
pub fn best_shift(result: &ShiftSweepResult) -> Result<(i32, f64), ShiftError> {
    let max_n = result.per_tau_n.iter().copied().max().unwrap_or(0);
    if max_n == 0 {
        return Err(ShiftError::NoComparableFrames);
    }
    let mut best: Option<(i32, f64)> = None;
    for (j, &tau) in result.taus.iter().enumerate() {
        let n = result.per_tau_n[j];
        if n == 0 || n * 2 < max_n {
            continue;
        }
        let mean = result.per_tau_mean[j].expect("mean present when n > 0");
        let better = match best {
            None => true,
            Some((best_tau, best_mean)) => {
                mean > best_mean
                    || (mean == best_mean
                        && (tau.abs() < best_tau.abs()
                            || (tau.abs() == best_tau.abs() && tau > best_tau)))
            }
        };
        if better {
            best = Some((tau, mean));
        }
    }
    best.ok_or(ShiftError::NoComparableFrames)
}

/// Per-frame score pairs for two shifts, restricted to frames where both
/// columns are present, in frame order.
pub fn paired_scores(
    result: &ShiftSweepResult,
    tau_a: i32,
    tau_b: i32,
) -> Result<(Vec<f64>, Vec<f64>), ShiftError> {
    let ja = result
        .taus
        .iter()
        .position(|&t| t == tau_a)
        .ok_or(ShiftError::TauNotInGrid(tau_a))?;
    let jb = result
        .taus
        .iter()
        .position(|&t| t == tau_b)
        .ok_or(ShiftError::TauNotInGrid(tau_b))?;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for row in &result.scores {
        if let (Some(x), Some(y)) = (row[ja], row[jb]) {
            a.push(x);
            b.push(y);
        }
    }
    if a.is_empty() {
        return Err(ShiftError::NoComparableFrames);
    }
    Ok((a, b))
}
