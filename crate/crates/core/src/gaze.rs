//! Gaze-log ingestion: parsing, validation, and per-frame indexing of
//! eye-tracker samples bound to video metadata.
//!
//! The canonical log format is CSV with columns `frame,t_s,x_px,y_px,valid`
//! (`valid` is `0` or `1`), with an optional header line. Parsing is strict:
//! any malformed row aborts with its line number. Samples whose coordinates
//! are out of bounds or non-finite are kept but marked invalid.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GazeError {
    #[error("gaze log is not valid UTF-8")]
    NotUtf8,
    #[error("gaze log contains no data rows")]
    EmptyLog,
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("timestamps decrease at sample {index} after frame ordering")]
    InconsistentTimestamps { index: usize },
    #[error("invalid video metadata: {0}")]
    InvalidMeta(String),
}

/// Dimensions and timing of the video the gaze samples refer to.
///
/// `n_frames == 0` means the frame count is unknown; bounds checks against it
/// are skipped and consumers fall back to the highest frame index seen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VideoMeta {
    pub width_px: u32,
    pub height_px: u32,
    pub fps: f64,
    pub n_frames: u32,
}

impl VideoMeta {
    pub fn new(width_px: u32, height_px: u32, fps: f64, n_frames: u32) -> Result<Self, GazeError> {
        if width_px == 0 || height_px == 0 {
            return Err(GazeError::InvalidMeta(
                "width and height must be at least 1".into(),
            ));
        }
        if !fps.is_finite() || fps <= 0.0 {
            return Err(GazeError::InvalidMeta(
                "fps must be a positive finite number".into(),
            ));
        }
        Ok(Self {
            width_px,
            height_px,
            fps,
            n_frames,
        })
    }

    /// Duration of one frame in milliseconds (`1000 / fps`).
    pub fn frame_duration_ms(&self) -> f64 {
        1000.0 / self.fps
    }

    pub(crate) fn in_bounds(&self, x: f64, y: f64) -> bool {
        x.is_finite()
            && y.is_finite()
            && x >= 0.0
            && x < self.width_px as f64
            && y >= 0.0
            && y < self.height_px as f64
    }
}

/// Parse a metadata spec of the form `width=640,height=480,fps=15[,frames=N]`.
///
/// Pairs may be separated by commas or newlines, so the same parser accepts
/// both the `--meta` command-line flag and a sidecar key=value file.
pub fn parse_meta_spec(spec: &str) -> Result<VideoMeta, GazeError> {
    let mut width: Option<u32> = None;
    let mut height: Option<u32> = None;
    let mut fps: Option<f64> = None;
    let mut frames: u32 = 0;

    for token in spec.split([',', '\n']) {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| GazeError::InvalidMeta(format!("expected key=value, got '{token}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| GazeError::InvalidMeta(format!("bad {what} value '{value}'"));
        match key {
            "width" => width = Some(value.parse().map_err(|_| bad("width"))?),
            "height" => height = Some(value.parse().map_err(|_| bad("height"))?),
            "fps" => fps = Some(value.parse().map_err(|_| bad("fps"))?),
            "frames" | "n_frames" => frames = value.parse().map_err(|_| bad("frames"))?,
            other => {
                return Err(GazeError::InvalidMeta(format!("unknown key '{other}'")));
            }
        }
    }

    match (width, height, fps) {
        (Some(w), Some(h), Some(f)) => VideoMeta::new(w, h, f, frames),
        _ => Err(GazeError::InvalidMeta(
            "width, height, and fps are all required".into(),
        )),
    }
}

/// One eye-tracker sample. Invalid samples keep their raw coordinates but are
/// excluded from all map building and metric computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazeSample {
    pub frame_index: u32,
    pub t_s: f64,
    pub x_px: f64,
    pub y_px: f64,
    pub valid: bool,
}

/// A time-ordered gaze recording for one (video, subject) pair.
///
/// Samples are sorted by `(frame_index, t_s)` and the stream is immutable
/// after construction, so it is safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeStream {
    pub meta: VideoMeta,
    pub samples: Vec<GazeSample>,
    pub label: String,
}

/// Exact sample counts for a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationReport {
    pub total: usize,
    pub valid: usize,
    pub invalid: usize,
    pub frames_with_no_valid_sample: usize,
}

/// Parse a canonical gaze CSV against the given metadata.
///
/// Rows are kept in input order, then stably sorted by `(frame_index, t_s)`.
/// A header line is detected by a non-numeric first field and skipped. Rows
/// with the wrong column count, unparseable fields, non-finite timestamps, or
/// frame indices beyond `meta.n_frames` abort the parse.
pub fn parse_gaze_log(raw_text: &[u8], meta: VideoMeta, label: &str) -> Result<GazeStream, GazeError> {
    let text = std::str::from_utf8(raw_text).map_err(|_| GazeError::NotUtf8)?;
    let mut samples: Vec<GazeSample> = Vec::new();
    let mut seen_content = false;

    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let row = raw_line.trim();
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if !seen_content {
            seen_content = true;
            if fields[0].parse::<f64>().is_err() {
                continue; // header
            }
        }
        let malformed = |reason: String| GazeError::MalformedRow { line, reason };
        if fields.len() != 5 {
            return Err(malformed(format!("expected 5 columns, found {}", fields.len())));
        }
        let frame_index: u32 = fields[0]
            .parse()
            .map_err(|_| malformed(format!("bad frame index '{}'", fields[0])))?;
        let t_s: f64 = fields[1]
            .parse()
            .map_err(|_| malformed(format!("bad timestamp '{}'", fields[1])))?;
        if !t_s.is_finite() {
            return Err(malformed(format!("non-finite timestamp '{}'", fields[1])));
        }
        let x_px: f64 = fields[2]
            .parse()
            .map_err(|_| malformed(format!("bad x coordinate '{}'", fields[2])))?;
        let y_px: f64 = fields[3]
            .parse()
            .map_err(|_| malformed(format!("bad y coordinate '{}'", fields[3])))?;
        let flagged = match fields[4] {
            "0" => false,
            "1" => true,
            other => return Err(malformed(format!("valid flag must be 0 or 1, got '{other}'"))),
        };
        if meta.n_frames > 0 && frame_index >= meta.n_frames {
            return Err(malformed(format!(
                "frame index {frame_index} outside video of {} frames",
                meta.n_frames
            )));
        }
        samples.push(GazeSample {
            frame_index,
            t_s,
            x_px,
            y_px,
            valid: flagged && meta.in_bounds(x_px, y_px),
        });
    }

    if samples.is_empty() {
        return Err(GazeError::EmptyLog);
    }

    // Stable sort: rows with equal (frame, t) keys keep their input order.
    samples.sort_by(|a, b| {
        a.frame_index
            .cmp(&b.frame_index)
            .then(a.t_s.partial_cmp(&b.t_s).expect("timestamps are finite"))
    });

    for (index, pair) in samples.windows(2).enumerate() {
        if pair[1].t_s < pair[0].t_s {
            return Err(GazeError::InconsistentTimestamps { index: index + 1 });
        }
    }

    Ok(GazeStream {
        meta,
        samples,
        label: label.to_string(),
    })
}

impl GazeStream {
    /// Valid gaze points on frames within `frame ± window`, in stream order.
    pub fn samples_for_frame(&self, frame: u32, window: u32) -> Vec<(f64, f64)> {
        let lo = frame.saturating_sub(window);
        let hi = frame.saturating_add(window);
        self.samples
            .iter()
            .filter(|s| s.valid && s.frame_index >= lo && s.frame_index <= hi)
            .map(|s| (s.x_px, s.y_px))
            .collect()
    }

    /// Exact counts of valid/invalid samples and of frames lacking any valid
    /// sample (over `0..meta.n_frames`; zero when the frame count is unknown).
    pub fn validate(&self) -> ValidationReport {
        let total = self.samples.len();
        let valid = self.samples.iter().filter(|s| s.valid).count();
        let n_frames = self.meta.n_frames as usize;
        let frames_with_no_valid_sample = if n_frames == 0 {
            0
        } else {
            let mut covered = vec![false; n_frames];
            for s in self.samples.iter().filter(|s| s.valid) {
                if (s.frame_index as usize) < n_frames {
                    covered[s.frame_index as usize] = true;
                }
            }
            covered.iter().filter(|c| !**c).count()
        };
        ValidationReport {
            total,
            valid,
            invalid: total - valid,
            frames_with_no_valid_sample,
        }
    }

    /// Frame count to iterate over: `meta.n_frames` when known, otherwise one
    /// past the highest frame index present in the samples.
    pub fn effective_n_frames(&self) -> u32 {
        if self.meta.n_frames > 0 {
            self.meta.n_frames
        } else {
            self.samples
                .iter()
                .map(|s| s.frame_index + 1)
                .max()
                .unwrap_or(0)
        }
    }

    /// Re-emit the canonical CSV: integer frame, timestamp with 6 decimals,
    /// coordinates with 3 decimals, valid flag as 0/1.
    pub fn to_canonical_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.samples.len() + 1));
        out.push_str("frame,t_s,x_px,y_px,valid\n");
        for s in &self.samples {
            writeln!(
                out,
                "{},{:.6},{:.3},{:.3},{}",
                s.frame_index,
                s.t_s,
                s.x_px,
                s.y_px,
                u8::from(s.valid)
            )
            .expect("writing to a String cannot fail");
        }
        out
    }
}
