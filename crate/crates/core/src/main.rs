use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gazelag::cli::{
    cmd_map, cmd_sweep, cmd_synth, cmd_wilcoxon, CmdError, MapCmd, SweepCmd, SynthCmd,
    WilcoxonCmd, WilcoxonInput, EXIT_USAGE,
};
use gazelag::fixmap::DEFAULT_SIGMA_PX;
use gazelag::gaze::{parse_meta_spec, VideoMeta};
use gazelag::metrics::MetricKind;
use gazelag::shift::ShiftGrid;
use gazelag::stats::Alternative;
use gazelag::synth::DEFAULT_SMOOTHNESS;

/// Gaze-stream saliency maps, actor/viewer time-shift sweeps, and paired rank
/// statistics.
#[derive(Debug, Parser)]
#[command(name = "gazelag", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct MetaArgs {
    /// Video metadata as width=W,height=H,fps=F[,frames=N]
    #[arg(long, value_name = "SPEC")]
    meta: Option<String>,
    /// File holding the same key=value metadata, one pair per line
    #[arg(long, value_name = "PATH", conflicts_with = "meta")]
    meta_file: Option<PathBuf>,
}

impl MetaArgs {
    fn resolve(&self) -> Result<VideoMeta, CmdError> {
        let spec = match (&self.meta, &self.meta_file) {
            (Some(spec), None) => spec.clone(),
            (None, Some(path)) => std::fs::read_to_string(path)
                .map_err(|e| CmdError::Io(format!("reading {}: {e}", path.display())))?,
            _ => {
                return Err(CmdError::Usage(
                    "exactly one of --meta or --meta-file is required".into(),
                ))
            }
        };
        parse_meta_spec(&spec).map_err(|e| CmdError::Usage(e.to_string()))
    }
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Actor gaze CSV
    #[arg(long, value_name = "PATH")]
    actor: PathBuf,
    /// Viewer gaze CSV
    #[arg(long, value_name = "PATH")]
    viewer: PathBuf,
    #[command(flatten)]
    meta: MetaArgs,
    /// Similarity metric
    #[arg(long, value_name = "KIND", default_value = "auc-maps")]
    metric: String,
    /// Shift grid as MIN:MAX[:STEP], in frames
    #[arg(long, value_name = "RANGE", default_value = "-20:20", allow_hyphen_values = true)]
    tau: String,
    /// Gaussian kernel sigma in pixels
    #[arg(long, value_name = "PX", default_value_t = DEFAULT_SIGMA_PX)]
    sigma: f64,
    /// Evaluate every K-th frame
    #[arg(long, value_name = "K", default_value_t = 1)]
    frame_step: u32,
    /// Top pixel fraction binarizing the reference map (auc-maps)
    #[arg(long, value_name = "F", default_value_t = 0.2)]
    top_frac: f64,
}

impl SweepArgs {
    fn resolve(&self, out_report: Option<PathBuf>) -> Result<SweepCmd, CmdError> {
        Ok(SweepCmd {
            actor_csv: self.actor.clone(),
            viewer_csv: self.viewer.clone(),
            meta: self.meta.resolve()?,
            metric: parse_metric(&self.metric)?,
            grid: parse_tau_spec(&self.tau)?,
            sigma: self.sigma,
            frame_step: self.frame_step,
            top_frac: self.top_frac,
            out_report,
        })
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render the saliency map of one frame window from a gaze log
    Map {
        /// Gaze CSV to read
        #[arg(long, value_name = "PATH")]
        gaze: PathBuf,
        #[command(flatten)]
        meta: MetaArgs,
        /// Frame index to render
        #[arg(long, value_name = "N")]
        frame: u32,
        /// Also include samples from frames within this window
        #[arg(long, value_name = "W", default_value_t = 0)]
        window: u32,
        /// Gaussian kernel sigma in pixels
        #[arg(long, value_name = "PX", default_value_t = DEFAULT_SIGMA_PX)]
        sigma: f64,
        /// 16-bit PGM output path
        #[arg(long, value_name = "PATH")]
        out_pgm: Option<PathBuf>,
        /// Lossless CSV output path
        #[arg(long, value_name = "PATH")]
        out_csv: Option<PathBuf>,
    },
    /// Sweep time shifts between an actor and a viewer stream
    Sweep {
        #[command(flatten)]
        args: SweepArgs,
        /// Report CSV output path
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Wilcoxon signed-rank test on paired scores
    Wilcoxon {
        /// CSV of paired scores (two numeric columns, optional header)
        #[arg(long, value_name = "PATH", conflicts_with_all = ["actor", "viewer"])]
        pairs: Option<PathBuf>,
        #[command(flatten)]
        sweep: WilcoxonSweepArgs,
        /// Alternative hypothesis
        #[arg(long, value_name = "KIND", default_value = "two-sided")]
        alternative: String,
    },
    /// Generate a synthetic actor/viewer pair with a known lag
    Synth {
        #[command(flatten)]
        meta: MetaArgs,
        /// Seed for the whole pair
        #[arg(long, value_name = "S", default_value_t = 0)]
        seed: u64,
        /// AR(1) coefficient of the trajectory, inside (0, 1)
        #[arg(long, value_name = "PHI", default_value_t = DEFAULT_SMOOTHNESS)]
        smoothness: f64,
        /// Ground-truth lag in frames (positive = viewer lags actor)
        #[arg(long, value_name = "K", default_value_t = 0, allow_negative_numbers = true)]
        lag: i32,
        /// Viewer jitter sigma in pixels
        #[arg(long, value_name = "PX", default_value_t = 0.0)]
        jitter: f64,
        /// Per-sample dropout probability in [0, 1)
        #[arg(long, value_name = "P", default_value_t = 0.0)]
        dropout: f64,
        /// Actor CSV output path
        #[arg(long, value_name = "PATH")]
        out_actor: PathBuf,
        /// Viewer CSV output path
        #[arg(long, value_name = "PATH")]
        out_viewer: PathBuf,
    },
}

#[derive(Debug, Args)]
struct WilcoxonSweepArgs {
    /// Actor gaze CSV (sweep mode)
    #[arg(long, value_name = "PATH", requires = "viewer")]
    actor: Option<PathBuf>,
    /// Viewer gaze CSV (sweep mode)
    #[arg(long, value_name = "PATH", requires = "actor")]
    viewer: Option<PathBuf>,
    #[command(flatten)]
    meta: MetaArgs,
    /// Similarity metric (sweep mode)
    #[arg(long, value_name = "KIND", default_value = "auc-maps")]
    metric: String,
    /// Shift grid as MIN:MAX[:STEP] (sweep mode)
    #[arg(long, value_name = "RANGE", default_value = "-20:20", allow_hyphen_values = true)]
    tau: String,
    /// Gaussian kernel sigma in pixels (sweep mode)
    #[arg(long, value_name = "PX", default_value_t = DEFAULT_SIGMA_PX)]
    sigma: f64,
    /// Evaluate every K-th frame (sweep mode)
    #[arg(long, value_name = "K", default_value_t = 1)]
    frame_step: u32,
    /// Top pixel fraction binarizing the reference map (sweep mode)
    #[arg(long, value_name = "F", default_value_t = 0.2)]
    top_frac: f64,
    /// First shift of the pairing; defaults to the best shift
    #[arg(long, value_name = "TAU", allow_negative_numbers = true)]
    tau_a: Option<i32>,
    /// Second shift of the pairing
    #[arg(long, value_name = "TAU", default_value_t = 0, allow_negative_numbers = true)]
    tau_b: i32,
}

fn parse_metric(s: &str) -> Result<MetricKind, CmdError> {
    s.parse::<MetricKind>()
        .map_err(|e| CmdError::Usage(e.to_string()))
}

/// Parse MIN:MAX[:STEP] into a shift grid.
fn parse_tau_spec(spec: &str) -> Result<ShiftGrid, CmdError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let usage = || CmdError::Usage(format!("bad tau range '{spec}', expected MIN:MAX[:STEP]"));
    if parts.len() < 2 || parts.len() > 3 {
        return Err(usage());
    }
    let tau_min: i32 = parts[0].trim().parse().map_err(|_| usage())?;
    let tau_max: i32 = parts[1].trim().parse().map_err(|_| usage())?;
    let step: u32 = if parts.len() == 3 {
        parts[2].trim().parse().map_err(|_| usage())?
    } else {
        1
    };
    ShiftGrid::new(tau_min, tau_max, step).map_err(|e| CmdError::Usage(e.to_string()))
}

fn parse_alternative(s: &str) -> Result<Alternative, CmdError> {
    s.parse::<Alternative>()
        .map_err(|e| CmdError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CmdError> {
    match cli.command {
        Command::Map {
            gaze,
            meta,
            frame,
            window,
            sigma,
            out_pgm,
            out_csv,
        } => cmd_map(&MapCmd {
            gaze_csv: gaze,
            meta: meta.resolve()?,
            frame,
            window,
            sigma,
            out_pgm,
            out_csv,
        }),
        Command::Sweep { args, out } => {
            cmd_sweep(&args.resolve(Some(out))?)?;
            Ok(())
        }
        Command::Wilcoxon {
            pairs,
            sweep,
            alternative,
        } => {
            let alternative = parse_alternative(&alternative)?;
            let input = match (pairs, &sweep.actor, &sweep.viewer) {
                (Some(path), _, _) => WilcoxonInput::PairsCsv(path),
                (None, Some(actor), Some(viewer)) => WilcoxonInput::FromSweep {
                    sweep: SweepCmd {
                        actor_csv: actor.clone(),
                        viewer_csv: viewer.clone(),
                        meta: sweep.meta.resolve()?,
                        metric: parse_metric(&sweep.metric)?,
                        grid: parse_tau_spec(&sweep.tau)?,
                        sigma: sweep.sigma,
                        frame_step: sweep.frame_step,
                        top_frac: sweep.top_frac,
                        out_report: None,
                    },
                    tau_a: sweep.tau_a,
                    tau_b: sweep.tau_b,
                },
                _ => {
                    return Err(CmdError::Usage(
                        "either --pairs or --actor/--viewer sweep inputs are required".into(),
                    ))
                }
            };
            cmd_wilcoxon(&WilcoxonCmd { input, alternative })?;
            Ok(())
        }
        Command::Synth {
            meta,
            seed,
            smoothness,
            lag,
            jitter,
            dropout,
            out_actor,
            out_viewer,
        } => cmd_synth(&SynthCmd {
            meta: meta.resolve()?,
            seed,
            smoothness,
            lag_frames: lag,
            jitter_sigma_px: jitter,
            dropout_prob: dropout,
            out_actor,
            out_viewer,
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
