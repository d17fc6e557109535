//! Batch commands behind the command-line binary. Each command validates its
//! inputs, runs the corresponding pipeline stage, writes its artifacts, and
//! prints a one-line summary; identical flags and inputs always produce
//! byte-identical outputs.
//!
//! Exit-code contract: 0 success, 1 I/O failure, 2 domain error (degenerate
//! or missing data), 64 usage error.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::fixmap::{self, map_for_frame, KernelParams};
use crate::gaze::{parse_gaze_log, GazeStream, VideoMeta};
use crate::metrics::MetricKind;
use crate::shift::{best_shift, paired_scores, shift_sweep, tau_to_ms, ShiftGrid, ShiftSweepResult};
use crate::stats::{wilcoxon_signed_rank, Alternative, StatsError, WilcoxonResult};
use crate::synth::{derive_viewer_stream, generate_actor_stream, SynthParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug)]
pub enum CmdError {
    Usage(String),
    Io(String),
    Domain(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Usage(_) => EXIT_USAGE,
            CmdError::Io(_) => EXIT_IO,
            CmdError::Domain(_) => EXIT_DOMAIN,
        }
    }
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdError::Usage(m) => write!(f, "usage: {m}"),
            CmdError::Io(m) => write!(f, "i/o: {m}"),
            CmdError::Domain(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CmdError {}

fn read_file(path: &Path) -> Result<Vec<u8>, CmdError> {
    fs::read(path).map_err(|e| CmdError::Io(format!("reading {}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CmdError> {
    fs::write(path, bytes).map_err(|e| CmdError::Io(format!("writing {}: {e}", path.display())))
}

fn load_stream(path: &Path, meta: VideoMeta, label: &str) -> Result<GazeStream, CmdError> {
    let raw = read_file(path)?;
    parse_gaze_log(&raw, meta, label)
        .map_err(|e| CmdError::Domain(format!("{}: {e}", path.display())))
}

fn kernel(sigma: f64) -> Result<KernelParams, CmdError> {
    KernelParams::new(sigma).map_err(|e| CmdError::Usage(e.to_string()))
}

#[derive(Debug, Clone)]
pub struct MapCmd {
    pub gaze_csv: PathBuf,
    pub meta: VideoMeta,
    pub frame: u32,
    pub window: u32,
    pub sigma: f64,
    pub out_pgm: Option<PathBuf>,
    pub out_csv: Option<PathBuf>,
}

/// Render the fixation map of one frame window to PGM and/or lossless CSV.
pub fn cmd_map(cmd: &MapCmd) -> Result<(), CmdError> {
    let stream = load_stream(&cmd.gaze_csv, cmd.meta, "gaze")?;
    let params = kernel(cmd.sigma)?;
    let map = map_for_frame(&stream, cmd.frame, cmd.window, &params).ok_or_else(|| {
        CmdError::Domain(format!(
            "no valid gaze samples for frame {} (window {})",
            cmd.frame, cmd.window
        ))
    })?;
    if let Some(path) = &cmd.out_pgm {
        let mut buf = Vec::new();
        fixmap::write_pgm16(&map, &mut buf).expect("writing to memory cannot fail");
        write_file(path, &buf)?;
    }
    if let Some(path) = &cmd.out_csv {
        let mut buf = Vec::new();
        fixmap::write_map_csv(&map, &mut buf).expect("writing to memory cannot fail");
        write_file(path, &buf)?;
    }
    println!(
        "map frame={} window={} sigma={:.6} sum={:.6}",
        cmd.frame,
        cmd.window,
        cmd.sigma,
        map.sum()
    );
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SweepCmd {
    pub actor_csv: PathBuf,
    pub viewer_csv: PathBuf,
    pub meta: VideoMeta,
    pub metric: MetricKind,
    pub grid: ShiftGrid,
    pub sigma: f64,
    pub frame_step: u32,
    pub top_frac: f64,
    pub out_report: Option<PathBuf>,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub result: ShiftSweepResult,
    pub best_tau: i32,
    pub best_tau_ms: f64,
    pub best_mean: f64,
}

fn run_sweep(cmd: &SweepCmd) -> Result<ShiftSweepResult, CmdError> {
    let actor = load_stream(&cmd.actor_csv, cmd.meta, "actor")?;
    let viewer = load_stream(&cmd.viewer_csv, cmd.meta, "viewer")?;
    let params = kernel(cmd.sigma)?;
    if !(cmd.top_frac > 0.0 && cmd.top_frac < 1.0) {
        return Err(CmdError::Usage(format!(
            "top-frac must lie strictly between 0 and 1, got {}",
            cmd.top_frac
        )));
    }
    shift_sweep(
        &actor,
        &viewer,
        cmd.metric,
        cmd.grid,
        &params,
        cmd.frame_step,
        cmd.top_frac,
    )
    .map_err(|e| match e {
        crate::shift::ShiftError::EmptyGrid | crate::shift::ShiftError::InvalidFrameStep => {
            CmdError::Usage(e.to_string())
        }
        other => CmdError::Domain(other.to_string()),
    })
}

/// Sweep the metric over the shift grid, write the report CSV, and print the
/// best shift.
pub fn cmd_sweep(cmd: &SweepCmd) -> Result<SweepOutcome, CmdError> {
    let result = run_sweep(cmd)?;
    let (best_tau, best_mean) = best_shift(&result).map_err(|e| CmdError::Domain(e.to_string()))?;
    if let Some(path) = &cmd.out_report {
        let mut buf = Vec::new();
        result
            .write_report_csv(&mut buf)
            .expect("writing to memory cannot fail");
        write_file(path, &buf)?;
    }
    let best_tau_ms = tau_to_ms(best_tau, result.fps);
    println!(
        "best_shift={} ({:.6} ms) mean={:.6} metric={} n={}",
        best_tau,
        best_tau_ms,
        best_mean,
        cmd.metric,
        result.per_tau_n[result
            .taus
            .iter()
            .position(|&t| t == best_tau)
            .expect("best tau is in the grid")]
    );
    Ok(SweepOutcome {
        result,
        best_tau,
        best_tau_ms,
        best_mean,
    })
}

#[derive(Debug, Clone)]
pub enum WilcoxonInput {
    /// CSV with two numeric columns of paired scores (optional header).
    PairsCsv(PathBuf),
    /// Run a sweep and pair per-frame scores at two shifts. When `tau_a` is
    /// absent the best shift is used; `tau_b` defaults to 0 at the flag layer.
    FromSweep {
        sweep: SweepCmd,
        tau_a: Option<i32>,
        tau_b: i32,
    },
}

#[derive(Debug, Clone)]
pub struct WilcoxonCmd {
    pub input: WilcoxonInput,
    pub alternative: Alternative,
}

fn parse_pairs_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>), CmdError> {
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut seen_content = false;
    for (i, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !seen_content {
            seen_content = true;
            if fields[0].parse::<f64>().is_err() {
                continue; // header
            }
        }
        if fields.len() != 2 {
            return Err(CmdError::Domain(format!(
                "pairs CSV line {}: expected 2 columns, found {}",
                i + 1,
                fields.len()
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| {
                CmdError::Domain(format!("pairs CSV line {}: bad number '{s}'", i + 1))
            })
        };
        a.push(parse(fields[0])?);
        b.push(parse(fields[1])?);
    }
    if a.is_empty() {
        return Err(CmdError::Domain("pairs CSV holds no data rows".into()));
    }
    Ok((a, b))
}

/// Wilcoxon signed-rank test on paired scores, from a two-column CSV or from
/// a sweep's per-frame scores at two shifts.
pub fn cmd_wilcoxon(cmd: &WilcoxonCmd) -> Result<WilcoxonResult, CmdError> {
    let (a, b, pairing) = match &cmd.input {
        WilcoxonInput::PairsCsv(path) => {
            let raw = read_file(path)?;
            let text = String::from_utf8(raw)
                .map_err(|_| CmdError::Domain("pairs CSV is not valid UTF-8".into()))?;
            let (a, b) = parse_pairs_csv(&text)?;
            (a, b, "columns".to_string())
        }
        WilcoxonInput::FromSweep { sweep, tau_a, tau_b } => {
            let result = run_sweep(sweep)?;
            let tau_a = match tau_a {
                Some(t) => *t,
                None => {
                    best_shift(&result)
                        .map_err(|e| CmdError::Domain(e.to_string()))?
                        .0
                }
            };
            let (a, b) = paired_scores(&result, tau_a, *tau_b)
                .map_err(|e| CmdError::Domain(e.to_string()))?;
            (a, b, format!("tau={tau_a} vs tau={}", tau_b))
        }
    };
    let result = wilcoxon_signed_rank(&a, &b, cmd.alternative).map_err(|e| match e {
        StatsError::LengthMismatch | StatsError::UnknownAlternative(_) => {
            CmdError::Usage(e.to_string())
        }
        other => CmdError::Domain(other.to_string()),
    })?;
    println!(
        "wilcoxon {pairing} alternative={} w_plus={:.6} n_effective={} method={} p_value={:.6}",
        result.alternative, result.w_plus, result.n_effective, result.method, result.p_value
    );
    Ok(result)
}

#[derive(Debug, Clone)]
pub struct SynthCmd {
    pub meta: VideoMeta,
    pub seed: u64,
    pub smoothness: f64,
    pub lag_frames: i32,
    pub jitter_sigma_px: f64,
    pub dropout_prob: f64,
    pub out_actor: PathBuf,
    pub out_viewer: PathBuf,
}

/// Generate a synthetic actor/viewer pair and write both canonical CSVs. The
/// viewer's jitter stream is seeded with `seed + 1` so one flag controls the
/// whole pair.
pub fn cmd_synth(cmd: &SynthCmd) -> Result<(), CmdError> {
    if cmd.meta.n_frames == 0 {
        return Err(CmdError::Usage(
            "synth requires frames=N in the metadata".into(),
        ));
    }
    let params = SynthParams {
        seed: cmd.seed,
        n_frames: cmd.meta.n_frames,
        meta: cmd.meta,
        smoothness: cmd.smoothness,
        lag_frames: cmd.lag_frames,
        jitter_sigma_px: cmd.jitter_sigma_px,
        dropout_prob: cmd.dropout_prob,
    };
    params
        .validate()
        .map_err(|e| CmdError::Usage(e.to_string()))?;
    let actor = generate_actor_stream(&params).map_err(|e| CmdError::Usage(e.to_string()))?;
    let viewer =
        derive_viewer_stream(&actor, cmd.lag_frames, cmd.jitter_sigma_px, cmd.seed.wrapping_add(1))
            .map_err(|e| CmdError::Usage(e.to_string()))?;
    write_file(&cmd.out_actor, actor.to_canonical_csv().as_bytes())?;
    write_file(&cmd.out_viewer, viewer.to_canonical_csv().as_bytes())?;
    println!(
        "synth lag_frames={} ({:.6} ms) seed={} frames={}",
        cmd.lag_frames,
        tau_to_ms(cmd.lag_frames, cmd.meta.fps),
        cmd.seed,
        cmd.meta.n_frames
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_csv_parses_with_and_without_header() {
        let (a, b) = parse_pairs_csv("a,b\n1.5,2.5\n3.0,4.0\n").unwrap();
        assert_eq!(a, vec![1.5, 3.0]);
        assert_eq!(b, vec![2.5, 4.0]);
        let (a, _) = parse_pairs_csv("1,2\n").unwrap();
        assert_eq!(a, vec![1.0]);
    }

    #[test]
    fn pairs_csv_rejects_bad_shapes() {
        assert!(parse_pairs_csv("").is_err());
        assert!(parse_pairs_csv("a,b\n").is_err());
        assert!(parse_pairs_csv("1,2,3\n").is_err());
        assert!(parse_pairs_csv("1,x\n").is_err());
    }

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(CmdError::Usage("x".into()).exit_code(), 64);
        assert_eq!(CmdError::Io("x".into()).exit_code(), 1);
        assert_eq!(CmdError::Domain("x".into()).exit_code(), 2);
    }
}
