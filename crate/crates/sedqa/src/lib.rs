//! Cascaded audio question answering over sound-event detection scores.
//!
//! The pipeline turns per-frame class posteriors into answered multiple-choice
//! questions in four stages:
//!
//! 1. [`calibration`] — per-class affine log-likelihood-ratio calibration,
//!    fitted and scored with the Cllr proper scoring rule.
//! 2. [`decoder`] — median filtering and thresholding of calibrated
//!    posteriors into timestamped events.
//! 3. [`prompt`] — rendering decoded events and a question into a fixed,
//!    byte-deterministic prompt.
//! 4. [`grpo`] — a small categorical answer policy over hashed prompt
//!    features, trained with group-relative policy optimization.
//!
//! [`synth`] generates seeded corpora with exact ground truth so every stage
//! is verifiable end to end, [`pipeline`] fuses the stages, [`eval`] scores
//! predictions, and [`cli`] exposes everything as subcommands of the `sedqa`
//! binary.
//!
//! Runnable walkthroughs live in `examples/`:
//!
//! * `generate_corpus` — synthesize a corpus and inspect its files.
//! * `calibrate_scores` — fit calibration on distorted scores and compare Cllr.
//! * `decode_events` — decode posteriors into events at several thresholds.
//! * `build_prompt` — render prompts for a few items.
//! * `train_policy` — train the answer policy and watch reward climb.
//! * `full_pipeline` — run the fused pipeline against the oracle ceiling.
//! * `reliability_report` — write reliability and Cllr scatter SVGs.

pub mod calibration;
pub mod cli;
pub mod decoder;
pub mod error;
pub mod eval;
pub mod grpo;
pub mod ingest;
pub mod pipeline;
pub mod plot;
pub mod prompt;
pub mod synth;

pub use error::{Error, Result};
