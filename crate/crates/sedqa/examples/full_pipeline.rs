//! Runs the fused pipeline — calibrate, decode, prompt, answer — on a
//! miscalibrated corpus and compares it against skipping calibration and
//! against the rule-oracle ceiling on ground-truth events.

use sedqa::calibration::fit_calibration_model;
use sedqa::decoder::DecoderConfig;
use sedqa::grpo::{train, Featurizer, GrpoConfig, Policy, TrainExample};
use sedqa::pipeline::{run_oracle_ceiling, run_pipeline};
use sedqa::prompt::build_prompt;
use sedqa::synth::{generate_corpus, SynthConfig, TRAIN_PART_WEIGHTS};

fn main() -> sedqa::Result<()> {
    let distortions = vec![(0.45, -1.1); 6];
    let train_corpus = generate_corpus(
        &SynthConfig::sized(31, 6, TRAIN_PART_WEIGHTS, 600).with_distortions(distortions.clone()),
    )?;
    let eval_corpus = generate_corpus(
        &SynthConfig::sized(32, 6, TRAIN_PART_WEIGHTS, 400).with_distortions(distortions),
    )?;

    // Calibration is fitted on the training split's frame labels.
    let model = fit_calibration_model(
        &train_corpus.scores,
        &train_corpus.rolls,
        &train_corpus.ontology,
    )?;

    // The policy never sees decoder output at training time: it learns to
    // read prompts built from ground-truth events.
    let featurizer = Featurizer::default();
    let examples: Vec<TrainExample> = train_corpus
        .items
        .iter()
        .map(|item| {
            let prompt = build_prompt(&item.events, &item.question, &item.options);
            let feats = item
                .options
                .iter()
                .map(|(_, text)| featurizer.features(&prompt, text))
                .collect();
            TrainExample::new(feats, item.answer_key.index())
        })
        .collect::<sedqa::Result<_>>()?;
    let mut policy = Policy::zeros(featurizer.feature_dim());
    train(
        &mut policy,
        &examples,
        &GrpoConfig {
            seed: 4,
            epochs: 3,
            ..GrpoConfig::default()
        },
    )?;

    let decoder = DecoderConfig::default();
    let raw = run_pipeline(
        &eval_corpus.scores,
        &eval_corpus.items,
        &eval_corpus.ontology,
        None,
        &decoder,
        &policy,
        &featurizer,
    )?;
    let calibrated = run_pipeline(
        &eval_corpus.scores,
        &eval_corpus.items,
        &eval_corpus.ontology,
        Some(&model),
        &decoder,
        &policy,
        &featurizer,
    )?;
    let ceiling = run_oracle_ceiling(&eval_corpus.items)?;

    println!(
        "{:<22} {:>10} {:>12}",
        "configuration", "weighted", "unweighted"
    );
    for (name, report) in [
        ("raw scores", &raw.report),
        ("calibrated scores", &calibrated.report),
        ("oracle ceiling", &ceiling),
    ] {
        println!(
            "{:<22} {:>10.4} {:>12.4}",
            name, report.overall_weighted, report.overall_unweighted
        );
    }
    Ok(())
}
