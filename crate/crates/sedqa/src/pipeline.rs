//! End-to-end inference: scores to calibrated posteriors to events to
//! prompts to answers to an accuracy report.

use std::collections::HashMap;

use crate::calibration::CalibrationModel;
use crate::decoder::{decode_events, DecoderConfig, Event};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport, Prediction};
use crate::grpo::{Featurizer, Policy};
use crate::ingest::{AqaItem, ClassOntology, FrameScoreMatrix, Letter};
use crate::prompt::build_prompt;
use crate::synth::rule_oracle;

/// Everything one inference run produces.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub report: EvalReport,
    pub events_by_clip: Vec<(String, Vec<Event>)>,
    pub predictions: Vec<Prediction>,
}

/// Decodes every clip, applying the calibration model first when given.
pub fn decode_all(
    scores: &[FrameScoreMatrix],
    ontology: &ClassOntology,
    calibration: Option<&CalibrationModel>,
    decoder: &DecoderConfig,
) -> Result<Vec<(String, Vec<Event>)>> {
    let mut out = Vec::with_capacity(scores.len());
    for matrix in scores {
        let events = match calibration {
            Some(model) => decode_events(&model.apply(matrix)?, ontology, decoder)?,
            None => decode_events(matrix, ontology, decoder)?,
        };
        out.push((matrix.clip_id.clone(), events));
    }
    Ok(out)
}

/// Answers each item with the policy, reading events for its clip from
/// `events_by_clip`. Items whose clip is missing are an error.
pub fn answer_items(
    items: &[AqaItem],
    events_by_clip: &[(String, Vec<Event>)],
    policy: &Policy,
    featurizer: &Featurizer,
) -> Result<Vec<Prediction>> {
    let by_clip: HashMap<&str, &Vec<Event>> = events_by_clip
        .iter()
        .map(|(id, evs)| (id.as_str(), evs))
        .collect();
    let mut predictions = Vec::with_capacity(items.len());
    for item in items {
        let events = by_clip.get(item.clip_id.as_str()).ok_or_else(|| {
            Error::invalid(format!(
                "item {}: no decoded events for clip {:?}",
                item.item_id, item.clip_id
            ))
        })?;
        let prompt = build_prompt(events, &item.question, &item.options);
        let prediction = policy.answer(featurizer, &prompt, &item.options)?;
        predictions.push(Prediction {
            item_id: item.item_id.clone(),
            prediction,
        });
    }
    Ok(predictions)
}

/// Full two-step inference over a corpus: decode (optionally calibrated)
/// frame scores into events, answer every item from its clip's events, and
/// score the answers.
pub fn run_pipeline(
    scores: &[FrameScoreMatrix],
    items: &[AqaItem],
    ontology: &ClassOntology,
    calibration: Option<&CalibrationModel>,
    decoder: &DecoderConfig,
    policy: &Policy,
    featurizer: &Featurizer,
) -> Result<PipelineOutput> {
    let events_by_clip = decode_all(scores, ontology, calibration, decoder)?;
    let predictions = answer_items(items, &events_by_clip, policy, featurizer)?;
    let map: HashMap<String, Letter> = predictions
        .iter()
        .map(|p| (p.item_id.clone(), p.prediction))
        .collect();
    let report = evaluate(items, &map)?;
    Ok(PipelineOutput {
        report,
        events_by_clip,
        predictions,
    })
}

/// Accuracy ceiling: answer every item from its embedded ground-truth
/// events with the symbolic rule oracle. On generator output this is 1.0.
pub fn run_oracle_ceiling(items: &[AqaItem]) -> Result<EvalReport> {
    let mut map = HashMap::with_capacity(items.len());
    for item in items {
        map.insert(item.item_id.clone(), rule_oracle(item)?);
    }
    evaluate(items, &map)
}

/// Runs the pipeline once per threshold and pairs each with its report.
#[allow(clippy::too_many_arguments)]
pub fn threshold_sweep(
    scores: &[FrameScoreMatrix],
    items: &[AqaItem],
    ontology: &ClassOntology,
    calibration: Option<&CalibrationModel>,
    decoder: &DecoderConfig,
    policy: &Policy,
    featurizer: &Featurizer,
    thresholds: &[f64],
) -> Result<Vec<(f64, EvalReport)>> {
    let mut out = Vec::with_capacity(thresholds.len());
    for &threshold in thresholds {
        let config = DecoderConfig {
            threshold,
            ..*decoder
        };
        let run = run_pipeline(scores, items, ontology, calibration, &config, policy, featurizer)?;
        out.push((threshold, run.report));
    }
    Ok(out)
}

/// CSV table for a threshold sweep: one row per threshold.
pub fn sweep_csv(sweep: &[(f64, EvalReport)]) -> String {
    let mut out = String::from(
        "threshold,part1_accuracy,part2_accuracy,part3_accuracy,overall_weighted,overall_unweighted\n",
    );
    for (threshold, report) in sweep {
        let acc = |i: usize| {
            report.parts[i]
                .accuracy()
                .map(|a| a.to_string())
                .unwrap_or_default()
        };
        out.push_str(&format!(
            "{threshold},{},{},{},{},{}\n",
            acc(0),
            acc(1),
            acc(2),
            report.overall_weighted,
            report.overall_unweighted
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_corpus, SynthConfig};

    fn corpus_and_heads() -> (crate::synth::Corpus, Featurizer, Policy) {
        let corpus = generate_corpus(&SynthConfig::new(61, 40, 5)).unwrap();
        let featurizer = Featurizer::new(512).unwrap();
        let policy = Policy::zeros(featurizer.feature_dim());
        (corpus, featurizer, policy)
    }

    #[test]
    fn oracle_ceiling_is_exact_on_generated_items() {
        let (corpus, _, _) = corpus_and_heads();
        let report = run_oracle_ceiling(&corpus.items).unwrap();
        assert_eq!(report.overall_weighted, 1.0);
        assert_eq!(report.overall_unweighted, 1.0);
        assert_eq!(report.n_items, corpus.items.len());
    }

    #[test]
    fn pipeline_runs_and_is_deterministic() {
        let (corpus, featurizer, policy) = corpus_and_heads();
        let decoder = DecoderConfig::default();
        let run = |_: ()| {
            run_pipeline(
                &corpus.scores,
                &corpus.items,
                &corpus.ontology,
                None,
                &decoder,
                &policy,
                &featurizer,
            )
            .unwrap()
        };
        let a = run(());
        let b = run(());
        assert_eq!(a.predictions, b.predictions);
        assert_eq!(a.report, b.report);
        assert_eq!(a.report.n_items, corpus.items.len());
        assert_eq!(a.events_by_clip.len(), corpus.scores.len());
    }

    #[test]
    fn missing_clip_is_reported_with_the_item() {
        let (corpus, featurizer, policy) = corpus_and_heads();
        let err = answer_items(&corpus.items, &[], &policy, &featurizer).unwrap_err();
        assert!(err.to_string().contains("clip"), "{err}");
    }

    #[test]
    fn sweep_produces_one_row_per_threshold() {
        let (corpus, featurizer, policy) = corpus_and_heads();
        let sweep = threshold_sweep(
            &corpus.scores[..10],
            &corpus.items[..20],
            &corpus.ontology,
            None,
            &DecoderConfig::default(),
            &policy,
            &featurizer,
            &[0.05, 0.1, 0.2],
        )
        .unwrap();
        assert_eq!(sweep.len(), 3);
        let csv = sweep_csv(&sweep);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("threshold,"));
        assert!(csv.contains("\n0.05,"));
    }

    #[test]
    fn calibrated_decode_differs_from_raw_on_distorted_scores() {
        use crate::calibration::fit_calibration_model;
        let config = SynthConfig::new(67, 60, 5).with_distortions(vec![(0.4, -1.2); 5]);
        let corpus = generate_corpus(&config).unwrap();
        let model =
            fit_calibration_model(&corpus.scores, &corpus.rolls, &corpus.ontology).unwrap();
        let decoder = DecoderConfig::default();
        let raw = decode_all(&corpus.scores, &corpus.ontology, None, &decoder).unwrap();
        let calibrated =
            decode_all(&corpus.scores, &corpus.ontology, Some(&model), &decoder).unwrap();
        assert_ne!(raw, calibrated);
    }
}
