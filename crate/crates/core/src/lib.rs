//! Toolkit for comparing where a camera wearer (the actor) and people
//! watching the footage (viewers) look.
//!
//! The pipeline: parse sparse eye-tracker gaze logs ([`gaze`]), densify them
//! into per-frame saliency maps by truncated-Gaussian splatting ([`fixmap`]),
//! score map similarity with NSS, AUC, or PCC ([`metrics`]), sweep a discrete
//! time shift between two gaze streams to locate the lag of best agreement
//! ([`shift`]), and confirm that lag with a Wilcoxon signed-rank test
//! ([`stats`]). The [`synth`] module generates seeded actor/viewer pairs with
//! a known ground-truth lag, and [`cli`] wires everything into reproducible
//! batch commands.

pub mod cli;
pub mod fixmap;
pub mod gaze;
pub mod metrics;
pub mod shift;
pub mod stats;
pub mod synth;
