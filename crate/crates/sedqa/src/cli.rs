//! Command-line surface. Every pipeline stage is a subcommand reading and
//! writing the crate's file formats, so stages compose through files and a
//! fused `pipeline` run is byte-identical to running them separately.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write as IoWrite};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::calibration::{fit_calibration_model, reliability_curve, CalibrationModel};
use crate::decoder::{DecoderConfig, Event};
use crate::error::{Error, Result};
use crate::eval::{evaluate, load_predictions, prediction_map, save_predictions};
use crate::grpo::{train, Featurizer, GrpoConfig, Policy, PolicyCheckpoint, TrainExample};
use crate::ingest::{
    load_aqa_items, load_event_rows, load_ontology, load_scores, rasterize_events,
    save_annotations, save_scores, AqaItem, ClassOntology, FrameLabelMatrix, FrameScoreMatrix,
};
use crate::pipeline::{
    answer_items, decode_all, run_oracle_ceiling, run_pipeline, sweep_csv, threshold_sweep,
};
use crate::plot::{cllr_scatter_svg, reliability_svg};
use crate::prompt::build_prompt;
use crate::synth::{
    generate_corpus, random_distortions, write_corpus, SynthConfig, DEV_PART_WEIGHTS,
    EVAL_PART_WEIGHTS, TRAIN_PART_WEIGHTS,
};

#[derive(Parser)]
#[command(
    name = "sedqa",
    version,
    about = "Sound-event detection scores to answered questions: calibration, event decoding, prompts, and policy training"
)]
struct Cli {
    /// Cap worker threads used for parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON file with default decoder/training settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic corpus with exact ground truth.
    Synth(SynthArgs),
    /// Fit per-class affine LLR calibration scored by Cllr.
    Calibrate(CalibrateArgs),
    /// Transform raw scores through a fitted calibration model.
    ApplyCalib(ApplyCalibArgs),
    /// Decode frame posteriors into timestamped events.
    Decode(DecodeArgs),
    /// Render the fixed answer prompt for items from an event file.
    Prompt(PromptArgs),
    /// Train the categorical answer policy with group-relative updates.
    TrainGrpo(TrainGrpoArgs),
    /// Answer items with a trained policy.
    Answer(AnswerArgs),
    /// Score predictions against items and print the accuracy report.
    Evaluate(EvaluateArgs),
    /// Fused inference: scores to events to answers to a report.
    Pipeline(PipelineArgs),
    /// Render a pooled reliability diagram as SVG.
    PlotReliability(PlotReliabilityArgs),
    /// Render the per-class Cllr before/after scatter as SVG.
    PlotCllr(PlotCllrArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for the corpus files.
    #[arg(long)]
    out: PathBuf,
    /// Generator seed; identical seeds give bitwise-identical corpora.
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    clips: usize,
    #[arg(long, default_value_t = 6)]
    classes: usize,
    #[arg(long, default_value_t = 84)]
    frames: usize,
    #[arg(long, default_value_t = 0.04)]
    frame_duration: f64,
    /// Stationary activity probability of every class.
    #[arg(long, default_value_t = 0.15)]
    prior: f64,
    /// Gaussian-pair separation; larger scores are more informative.
    #[arg(long, default_value_t = 2.0)]
    separation: f64,
    /// Affine miscalibration scale applied to every class's true LLR.
    #[arg(long, default_value_t = 1.0)]
    distort_a: f64,
    /// Affine miscalibration offset applied to every class's true LLR.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    distort_b: f64,
    /// Draw a random per-class distortion from the seed instead.
    #[arg(long)]
    random_distort: bool,
    /// Per-part item caps as three comma-separated counts, e.g. 74,104,644.
    #[arg(long, value_delimiter = ',')]
    parts: Option<Vec<usize>>,
    /// Size the corpus to this many items, following --weights proportions.
    #[arg(long, conflicts_with_all = ["clips", "parts"])]
    total: Option<usize>,
    /// Reference split whose part proportions --total follows.
    #[arg(long, default_value = "train", value_parser = ["train", "dev", "eval"])]
    weights: String,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Frame score file (JSON lines).
    #[arg(long)]
    scores: PathBuf,
    /// Ground-truth event annotations (TSV).
    #[arg(long)]
    annotations: PathBuf,
    /// Class ontology (JSON).
    #[arg(long)]
    ontology: PathBuf,
    /// Where to write the fitted model (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV of per-class Cllr before/after.
    #[arg(long)]
    scatter_csv: Option<PathBuf>,
}

#[derive(Args)]
struct ApplyCalibArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    ontology: PathBuf,
    /// Fitted calibration model (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Where to write calibrated scores (JSON lines).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    ontology: PathBuf,
    /// Where to write decoded events (TSV).
    #[arg(long)]
    out: PathBuf,
    /// Posterior threshold; frames strictly above it are active.
    #[arg(long)]
    threshold: Option<f64>,
    /// Odd median filter window in frames.
    #[arg(long)]
    median_window: Option<usize>,
}

#[derive(Args)]
struct PromptArgs {
    /// Event file (TSV) with one clip's events per group of rows.
    #[arg(long)]
    events: PathBuf,
    /// Question items (JSON lines).
    #[arg(long)]
    items: PathBuf,
    /// Where to write rendered prompts (JSON lines); required without --item-id.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print this single item's prompt to stdout instead of writing a file.
    #[arg(long)]
    item_id: Option<String>,
}

#[derive(Args)]
struct TrainGrpoArgs {
    #[arg(long)]
    items: PathBuf,
    /// Events (TSV) the prompts are built from, decoded or ground truth.
    #[arg(long)]
    events: PathBuf,
    /// Training seed; runs are bitwise reproducible.
    #[arg(long)]
    seed: u64,
    /// Where to write the policy checkpoint (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV of per-step training diagnostics.
    #[arg(long)]
    log_csv: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    group_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    clip_epsilon: Option<f64>,
    #[arg(long)]
    kl_coeff: Option<f64>,
    /// Hashed feature dimension of the policy featurizer.
    #[arg(long)]
    hash_dim: Option<usize>,
}

#[derive(Args)]
struct AnswerArgs {
    #[arg(long)]
    items: PathBuf,
    /// Events (TSV) to answer from.
    #[arg(long)]
    events: PathBuf,
    /// Policy checkpoint (JSON).
    #[arg(long)]
    policy: PathBuf,
    /// Where to write predictions (JSON lines).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    items: PathBuf,
    /// Predictions (JSON lines).
    #[arg(long)]
    predictions: PathBuf,
    /// Optional CSV report destination.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    items: PathBuf,
    #[arg(long)]
    ontology: PathBuf,
    /// Calibration model; raw scores are decoded directly when absent.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Policy checkpoint; required unless --oracle is given.
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Answer from embedded ground-truth events with the rule oracle instead.
    #[arg(long, conflicts_with = "policy")]
    oracle: bool,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    median_window: Option<usize>,
    /// Extra thresholds to sweep, comma separated, e.g. 0.05,0.1,0.2.
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<f64>>,
    /// Where to write the sweep comparison table (CSV).
    #[arg(long)]
    sweep_csv: Option<PathBuf>,
    /// Where to write the report (CSV).
    #[arg(long)]
    report_csv: Option<PathBuf>,
    /// Where to write decoded events (TSV).
    #[arg(long)]
    out_events: Option<PathBuf>,
    /// Where to write predictions (JSON lines).
    #[arg(long)]
    out_predictions: Option<PathBuf>,
}

#[derive(Args)]
struct PlotReliabilityArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    ontology: PathBuf,
    /// Calibration model to apply before pooling; raw scores when absent.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Where to write the SVG.
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV of the binned curve.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Diagram title.
    #[arg(long, default_value = "Reliability diagram")]
    title: String,
}

#[derive(Args)]
struct PlotCllrArgs {
    /// Fitted calibration model (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Where to write the SVG.
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV of per-class Cllr before/after.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Diagram title.
    #[arg(long, default_value = "Cllr before vs after calibration")]
    title: String,
}

/// Optional defaults file; command-line flags override its values.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    decoder: Option<DecoderConfig>,
    grpo: Option<GrpoConfig>,
    hash_dim: Option<usize>,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, 0, e.to_string()))
}

fn decoder_config(
    file: &FileConfig,
    threshold: Option<f64>,
    median_window: Option<usize>,
) -> Result<DecoderConfig> {
    let mut config = file.decoder.unwrap_or_default();
    if let Some(t) = threshold {
        config.threshold = t;
    }
    if let Some(w) = median_window {
        config.median_window = w;
    }
    config.validate()?;
    Ok(config)
}

fn grpo_config(file: &FileConfig, args: &TrainGrpoArgs) -> Result<GrpoConfig> {
    let mut config = file.grpo.unwrap_or_default();
    config.seed = args.seed;
    if let Some(v) = args.epochs {
        config.epochs = v;
    }
    if let Some(v) = args.group_size {
        config.group_size = v;
    }
    if let Some(v) = args.learning_rate {
        config.learning_rate = v;
    }
    if let Some(v) = args.clip_epsilon {
        config.clip_epsilon = v;
    }
    if let Some(v) = args.kl_coeff {
        config.kl_coeff = v;
    }
    config.validate()?;
    Ok(config)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Entry point used by the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .try_init()
        .ok();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not configure {n} worker threads: {e}");
        }
    }
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let file = load_file_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::ApplyCalib(args) => cmd_apply_calib(args),
        Command::Decode(args) => cmd_decode(args, &file),
        Command::Prompt(args) => cmd_prompt(args),
        Command::TrainGrpo(args) => cmd_train_grpo(args, &file),
        Command::Answer(args) => cmd_answer(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Pipeline(args) => cmd_pipeline(args, &file),
        Command::PlotReliability(args) => cmd_plot_reliability(args),
        Command::PlotCllr(args) => cmd_plot_cllr(args),
    }
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let mut config = match args.total {
        Some(total) => {
            let weights = match args.weights.as_str() {
                "train" => TRAIN_PART_WEIGHTS,
                "dev" => DEV_PART_WEIGHTS,
                _ => EVAL_PART_WEIGHTS,
            };
            SynthConfig::sized(args.seed, args.classes, weights, total)
        }
        None => SynthConfig::new(args.seed, args.clips, args.classes),
    };
    config = config
        .with_frames(args.frames, args.frame_duration)
        .with_priors(vec![args.prior; args.classes])
        .with_separation(vec![args.separation; args.classes]);
    config = if args.random_distort {
        config.with_distortions(random_distortions(args.seed, args.classes))
    } else {
        config.with_distortions(vec![(args.distort_a, args.distort_b); args.classes])
    };
    if let Some(parts) = &args.parts {
        if parts.len() != 3 {
            return Err(Error::invalid(format!(
                "--parts needs exactly 3 counts, got {}",
                parts.len()
            )));
        }
        config = config.with_split_sizes([parts[0], parts[1], parts[2]]);
    }

    let corpus = generate_corpus(&config)?;
    write_corpus(&corpus, &args.out)?;
    let mut part_counts = [0usize; 3];
    for item in &corpus.items {
        part_counts[item.part.index()] += 1;
    }
    println!(
        "wrote {} clips, {} items (parts {}/{}/{}) to {}",
        corpus.scores.len(),
        corpus.items.len(),
        part_counts[0],
        part_counts[1],
        part_counts[2],
        args.out.display()
    );
    Ok(())
}

/// Rasterizes annotation rows onto each score matrix's own frame grid.
fn labels_for_scores(
    scores: &[FrameScoreMatrix],
    annotations: &Path,
    ontology: &ClassOntology,
) -> Result<Vec<FrameLabelMatrix>> {
    let rows = load_event_rows(annotations)?;
    let by_clip: HashMap<&str, &Vec<Event>> =
        rows.iter().map(|(id, evs)| (id.as_str(), evs)).collect();
    scores
        .iter()
        .map(|m| {
            let events = by_clip.get(m.clip_id.as_str()).map_or(&[][..], |v| v.as_slice());
            rasterize_events(&m.clip_id, events, ontology, m.frame_duration_s, m.n_frames())
        })
        .collect()
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<()> {
    let ontology = load_ontology(&args.ontology)?;
    let scores = load_scores(&args.scores, &ontology)?;
    let labels = labels_for_scores(&scores, &args.annotations, &ontology)?;
    let model = fit_calibration_model(&scores, &labels, &ontology)?;
    model.save(&args.out)?;
    if let Some(path) = &args.scatter_csv {
        write_text(path, &crate::calibration::cllr_scatter_csv(&model))?;
    }
    for class in &model.classes {
        match (class.cllr_before, class.cllr_after) {
            (Some(before), Some(after)) => println!(
                "{}: a={:.4} b={:.4} Cllr {:.4} -> {:.4} bits",
                class.label, class.a, class.b, before, after
            ),
            _ => println!("{}: identity (single-class frames)", class.label),
        }
    }
    println!("wrote model to {}", args.out.display());
    Ok(())
}

fn cmd_apply_calib(args: &ApplyCalibArgs) -> Result<()> {
    let ontology = load_ontology(&args.ontology)?;
    let model = CalibrationModel::load(&args.model)?;
    let scores = load_scores(&args.scores, &ontology)?;
    let calibrated: Vec<FrameScoreMatrix> = scores
        .iter()
        .map(|m| model.apply(m))
        .collect::<Result<_>>()?;
    save_scores(&args.out, &calibrated)?;
    println!("wrote {} calibrated clips to {}", calibrated.len(), args.out.display());
    Ok(())
}

fn cmd_decode(args: &DecodeArgs, file: &FileConfig) -> Result<()> {
    let config = decoder_config(file, args.threshold, args.median_window)?;
    let ontology = load_ontology(&args.ontology)?;
    let scores = load_scores(&args.scores, &ontology)?;
    let events = decode_all(&scores, &ontology, None, &config)?;
    let n_events: usize = events.iter().map(|(_, e)| e.len()).sum();
    save_annotations(&args.out, &events)?;
    println!(
        "decoded {n_events} events from {} clips to {}",
        scores.len(),
        args.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct PromptRow<'a> {
    item_id: &'a str,
    prompt: &'a str,
}

fn cmd_prompt(args: &PromptArgs) -> Result<()> {
    let rows = load_event_rows(&args.events)?;
    let by_clip: HashMap<&str, &Vec<Event>> =
        rows.iter().map(|(id, evs)| (id.as_str(), evs)).collect();
    let items = load_aqa_items(&args.items)?;
    let render = |item: &AqaItem| -> Result<String> {
        let events = by_clip.get(item.clip_id.as_str()).ok_or_else(|| {
            Error::invalid(format!(
                "item {}: no events for clip {:?}",
                item.item_id, item.clip_id
            ))
        })?;
        Ok(build_prompt(events, &item.question, &item.options))
    };

    if let Some(item_id) = &args.item_id {
        let item = items
            .iter()
            .find(|i| &i.item_id == item_id)
            .ok_or_else(|| Error::invalid(format!("no item with id {item_id:?}")))?;
        print!("{}", render(item)?);
        return Ok(());
    }
    let out = args
        .out
        .as_ref()
        .ok_or_else(|| Error::invalid("either --out or --item-id is required"))?;
    let f = fs::File::create(out).map_err(|e| Error::io(out, e))?;
    let mut w = BufWriter::new(f);
    for item in &items {
        let prompt = render(item)?;
        let row = PromptRow {
            item_id: &item.item_id,
            prompt: &prompt,
        };
        let line = serde_json::to_string(&row).map_err(|e| Error::invalid(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io(out, e))?;
    }
    w.flush().map_err(|e| Error::io(out, e))?;
    println!("wrote {} prompts to {}", items.len(), out.display());
    Ok(())
}

fn cmd_train_grpo(args: &TrainGrpoArgs, file: &FileConfig) -> Result<()> {
    let config = grpo_config(file, args)?;
    let hash_dim = args.hash_dim.or(file.hash_dim).unwrap_or(4096);
    let featurizer = Featurizer::new(hash_dim)?;

    let rows = load_event_rows(&args.events)?;
    let by_clip: HashMap<&str, &Vec<Event>> =
        rows.iter().map(|(id, evs)| (id.as_str(), evs)).collect();
    let items = load_aqa_items(&args.items)?;
    let mut examples = Vec::with_capacity(items.len());
    for item in &items {
        let events = by_clip.get(item.clip_id.as_str()).ok_or_else(|| {
            Error::invalid(format!(
                "item {}: no events for clip {:?}",
                item.item_id, item.clip_id
            ))
        })?;
        let prompt = build_prompt(events, &item.question, &item.options);
        let feats = item
            .options
            .iter()
            .map(|(_, text)| featurizer.features(&prompt, text))
            .collect();
        examples.push(TrainExample::new(feats, item.answer_key.index())?);
    }

    let mut policy = Policy::zeros(featurizer.feature_dim());
    let log = train(&mut policy, &examples, &config)?;
    PolicyCheckpoint::new(&policy, &featurizer, config).save(&args.out)?;
    if let Some(path) = &args.log_csv {
        write_text(path, &crate::grpo::training_log_csv(&log))?;
    }
    let tail = log.len().saturating_sub(50);
    let recent = &log[tail..];
    let mean_reward = if recent.is_empty() {
        0.0
    } else {
        recent.iter().map(|s| s.mean_reward).sum::<f64>() / recent.len() as f64
    };
    println!(
        "trained on {} items for {} steps; mean reward over the last {} steps {:.3}",
        examples.len(),
        log.len(),
        recent.len(),
        mean_reward
    );
    println!("wrote policy to {}", args.out.display());
    Ok(())
}

fn cmd_answer(args: &AnswerArgs) -> Result<()> {
    let (policy, featurizer, _) = PolicyCheckpoint::load(&args.policy)?.into_parts()?;
    let rows = load_event_rows(&args.events)?;
    let items = load_aqa_items(&args.items)?;
    let predictions = answer_items(&items, &rows, &policy, &featurizer)?;
    save_predictions(&args.out, &predictions)?;
    println!("wrote {} predictions to {}", predictions.len(), args.out.display());
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let items = load_aqa_items(&args.items)?;
    let predictions = load_predictions(&args.predictions)?;
    let report = evaluate(&items, &prediction_map(&predictions)?)?;
    print!("{report}");
    if let Some(path) = &args.csv {
        write_text(path, &report.to_csv())?;
    }
    Ok(())
}

fn cmd_pipeline(args: &PipelineArgs, file: &FileConfig) -> Result<()> {
    let config = decoder_config(file, args.threshold, args.median_window)?;
    let ontology = load_ontology(&args.ontology)?;
    let scores = load_scores(&args.scores, &ontology)?;
    let items = load_aqa_items(&args.items)?;
    let model = args.model.as_ref().map(CalibrationModel::load).transpose()?;

    if args.oracle {
        let report = run_oracle_ceiling(&items)?;
        print!("{report}");
        if let Some(path) = &args.report_csv {
            write_text(path, &report.to_csv())?;
        }
        return Ok(());
    }

    let policy_path = args
        .policy
        .as_ref()
        .ok_or_else(|| Error::invalid("either --policy or --oracle is required"))?;
    let (policy, featurizer, _) = PolicyCheckpoint::load(policy_path)?.into_parts()?;
    let output = run_pipeline(
        &scores,
        &items,
        &ontology,
        model.as_ref(),
        &config,
        &policy,
        &featurizer,
    )?;
    print!("{}", output.report);
    if let Some(path) = &args.report_csv {
        write_text(path, &output.report.to_csv())?;
    }
    if let Some(path) = &args.out_events {
        save_annotations(path, &output.events_by_clip)?;
    }
    if let Some(path) = &args.out_predictions {
        save_predictions(path, &output.predictions)?;
    }
    if let Some(thresholds) = &args.sweep {
        let sweep = threshold_sweep(
            &scores,
            &items,
            &ontology,
            model.as_ref(),
            &config,
            &policy,
            &featurizer,
            thresholds,
        )?;
        let table = sweep_csv(&sweep);
        println!();
        print!("{table}");
        if let Some(path) = &args.sweep_csv {
            write_text(path, &table)?;
        }
    }
    Ok(())
}

fn cmd_plot_reliability(args: &PlotReliabilityArgs) -> Result<()> {
    let ontology = load_ontology(&args.ontology)?;
    let raw = load_scores(&args.scores, &ontology)?;
    let labels = labels_for_scores(&raw, &args.annotations, &ontology)?;
    let scores: Vec<FrameScoreMatrix> = match &args.model {
        Some(path) => {
            let model = CalibrationModel::load(path)?;
            raw.iter().map(|m| model.apply(m)).collect::<Result<_>>()?
        }
        None => raw,
    };

    let mut pooled = Vec::new();
    let mut pooled_labels = Vec::new();
    for (m, lab) in scores.iter().zip(&labels) {
        for (row, yrow) in m.posteriors.iter().zip(&lab.labels) {
            pooled.extend_from_slice(row);
            pooled_labels.extend_from_slice(yrow);
        }
    }
    let curve = reliability_curve(&pooled, &pooled_labels)?;
    write_text(&args.out, &reliability_svg(&curve, &args.title))?;
    if let Some(path) = &args.csv {
        write_text(path, &curve.to_csv())?;
    }
    println!(
        "pooled {} frame scores; ECE {:.4}; wrote {}",
        curve.n,
        curve.ece,
        args.out.display()
    );
    Ok(())
}

fn cmd_plot_cllr(args: &PlotCllrArgs) -> Result<()> {
    let model = CalibrationModel::load(&args.model)?;
    write_text(&args.out, &cllr_scatter_svg(&model, &args.title))?;
    if let Some(path) = &args.csv {
        write_text(path, &crate::calibration::cllr_scatter_csv(&model))?;
    }
    let fitted: Vec<(f64, f64)> = model
        .classes
        .iter()
        .filter_map(|c| c.cllr_before.zip(c.cllr_after))
        .collect();
    if !fitted.is_empty() {
        let mean = |f: fn(&(f64, f64)) -> f64| {
            fitted.iter().map(f).sum::<f64>() / fitted.len() as f64
        };
        println!(
            "{} classes; mean Cllr {:.4} -> {:.4} bits; wrote {}",
            fitted.len(),
            mean(|p| p.0),
            mean(|p| p.1),
            args.out.display()
        );
    } else {
        println!("no fitted classes in model; wrote {}", args.out.display());
    }
    Ok(())
}
