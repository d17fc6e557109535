//! Seeded synthetic actor/viewer gaze-stream pairs with a known ground-truth
//! lag, for exercising the shift sweep end to end.
//!
//! Determinism: all randomness comes from a ChaCha8 generator
//! (`rand_chacha::ChaCha8Rng`) seeded with `seed_from_u64`; Gaussian deviates
//! use `rand_distr::StandardNormal`. Identical parameters (including the
//! seed) always reproduce bit-identical streams.
//!
//! The actor trajectory is an AR(1) process per axis around the image center
//! with stationary standard deviation width/6 (x) and height/6 (y). Each
//! frame emits two samples offset by +-1 px uniform noise, matching the
//! two-samples-per-frame cadence of the target eye-tracker logs. The viewer
//! stream copies the actor's samples `lag_frames` earlier with independent
//! Gaussian jitter per axis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::gaze::{GazeSample, GazeStream, VideoMeta};

/// Samples emitted per frame.
pub const SAMPLES_PER_FRAME: u32 = 2;

/// Default AR(1) coefficient of the synthetic trajectory.
pub const DEFAULT_SMOOTHNESS: f64 = 0.9;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthesis parameters: {0}")]
    InvalidParams(String),
    #[error("lag of {lag} frames too large for a stream of {n_frames} frames")]
    LagTooLarge { lag: i32, n_frames: u32 },
}

#[derive(Debug, Clone, Copy)]
pub struct SynthParams {
    pub seed: u64,
    pub n_frames: u32,
    pub meta: VideoMeta,
    /// AR(1) coefficient of the gaze trajectory, strictly inside (0, 1).
    pub smoothness: f64,
    pub lag_frames: i32,
    pub jitter_sigma_px: f64,
    pub dropout_prob: f64,
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        let err = |msg: String| Err(SynthError::InvalidParams(msg));
        if self.n_frames == 0 {
            return err("n_frames must be at least 1".into());
        }
        if !(self.smoothness > 0.0 && self.smoothness < 1.0) {
            return err(format!(
                "smoothness must lie strictly inside (0, 1), got {}",
                self.smoothness
            ));
        }
        if self.lag_frames.unsigned_abs() >= self.n_frames {
            return err(format!(
                "|lag_frames| = {} must be below n_frames = {}",
                self.lag_frames.unsigned_abs(),
                self.n_frames
            ));
        }
        if !self.jitter_sigma_px.is_finite() || self.jitter_sigma_px < 0.0 {
            return err(format!(
                "jitter sigma must be non-negative, got {}",
                self.jitter_sigma_px
            ));
        }
        if !(self.dropout_prob >= 0.0 && self.dropout_prob < 1.0) {
            return err(format!(
                "dropout probability must lie in [0, 1), got {}",
                self.dropout_prob
            ));
        }
        Ok(())
    }
}

fn clamp_coord(v: f64, size_px: u32) -> f64 {
    v.clamp(0.0, (size_px - 1) as f64)
}

/// Generate the actor stream. Draw order per frame is fixed: the two AR(1)
/// axis innovations, then per sample its x offset, y offset, and dropout
/// draw.
pub fn generate_actor_stream(p: &SynthParams) -> Result<GazeStream, SynthError> {
    p.validate()?;
    let meta = VideoMeta {
        n_frames: p.n_frames,
        ..p.meta
    };
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let width = meta.width_px as f64;
    let height = meta.height_px as f64;
    let (cx, cy) = (width / 2.0, height / 2.0);
    let (sx, sy) = (width / 6.0, height / 6.0);
    // innovation scale keeping the stationary std at sx/sy
    let innovation = (1.0 - p.smoothness * p.smoothness).sqrt();

    let mut gx = cx + sx * rng.sample::<f64, _>(StandardNormal);
    let mut gy = cy + sy * rng.sample::<f64, _>(StandardNormal);
    let mut samples = Vec::with_capacity(p.n_frames as usize * SAMPLES_PER_FRAME as usize);
    for frame in 0..p.n_frames {
        if frame > 0 {
            gx = cx + p.smoothness * (gx - cx) + sx * innovation * rng.sample::<f64, _>(StandardNormal);
            gy = cy + p.smoothness * (gy - cy) + sy * innovation * rng.sample::<f64, _>(StandardNormal);
        }
        for sub in 0..SAMPLES_PER_FRAME {
            let x = clamp_coord(gx + rng.random_range(-1.0..=1.0), meta.width_px);
            let y = clamp_coord(gy + rng.random_range(-1.0..=1.0), meta.height_px);
            let dropped = rng.random::<f64>() < p.dropout_prob;
            samples.push(GazeSample {
                frame_index: frame,
                t_s: (frame as f64 + sub as f64 / SAMPLES_PER_FRAME as f64) / meta.fps,
                x_px: x,
                y_px: y,
                valid: !dropped,
            });
        }
    }
    Ok(GazeStream {
        meta,
        samples,
        label: "actor".to_string(),
    })
}

/// Derive a viewer stream: frame `t` copies the actor's samples at frame
/// `t - lag_frames` (so positive lag means the viewer sees everything
/// `lag_frames` later), with independent Gaussian jitter per axis. Frames
/// whose source falls outside the recording carry no samples.
pub fn derive_viewer_stream(
    actor: &GazeStream,
    lag_frames: i32,
    jitter_sigma_px: f64,
    seed: u64,
) -> Result<GazeStream, SynthError> {
    let n_frames = actor.effective_n_frames();
    if n_frames == 0 || lag_frames.unsigned_abs() >= n_frames {
        return Err(SynthError::LagTooLarge {
            lag: lag_frames,
            n_frames,
        });
    }
    if !jitter_sigma_px.is_finite() || jitter_sigma_px < 0.0 {
        return Err(SynthError::InvalidParams(format!(
            "jitter sigma must be non-negative, got {jitter_sigma_px}"
        )));
    }

    // frame -> sample range in the (sorted) actor stream
    let mut frame_ranges = vec![(0usize, 0usize); n_frames as usize];
    {
        let mut i = 0;
        while i < actor.samples.len() {
            let frame = actor.samples[i].frame_index as usize;
            let start = i;
            while i < actor.samples.len() && actor.samples[i].frame_index as usize == frame {
                i += 1;
            }
            if frame < frame_ranges.len() {
                frame_ranges[frame] = (start, i);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let time_shift = lag_frames as f64 / actor.meta.fps;
    let mut samples = Vec::new();
    for frame in 0..n_frames {
        let source = frame as i64 - lag_frames as i64;
        if source < 0 || source >= n_frames as i64 {
            continue;
        }
        let (start, end) = frame_ranges[source as usize];
        for s in &actor.samples[start..end] {
            let jx: f64 = rng.sample(StandardNormal);
            let jy: f64 = rng.sample(StandardNormal);
            samples.push(GazeSample {
                frame_index: frame,
                t_s: s.t_s + time_shift,
                x_px: clamp_coord(s.x_px + jitter_sigma_px * jx, actor.meta.width_px),
                y_px: clamp_coord(s.y_px + jitter_sigma_px * jy, actor.meta.height_px),
                valid: s.valid,
            });
        }
    }
    Ok(GazeStream {
        meta: actor.meta,
        samples,
        label: "viewer".to_string(),
    })
}
