//! Trains the answer policy on ground-truth event prompts and reports
//! accuracy before and after.

use sedqa::grpo::{train, Featurizer, GrpoConfig, Policy, TrainExample};
use sedqa::ingest::AqaItem;
use sedqa::prompt::build_prompt;
use sedqa::synth::{generate_corpus, SynthConfig, TRAIN_PART_WEIGHTS};

fn accuracy(policy: &Policy, featurizer: &Featurizer, items: &[AqaItem]) -> sedqa::Result<f64> {
    let mut correct = 0usize;
    for item in items {
        let prompt = build_prompt(&item.events, &item.question, &item.options);
        if policy.answer(featurizer, &prompt, &item.options)? == item.answer_key {
            correct += 1;
        }
    }
    Ok(correct as f64 / items.len() as f64)
}

fn main() -> sedqa::Result<()> {
    let corpus = generate_corpus(&SynthConfig::sized(13, 6, TRAIN_PART_WEIGHTS, 600))?;
    let featurizer = Featurizer::default();

    let examples: Vec<TrainExample> = corpus
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

    let config = GrpoConfig {
        seed: 99,
        epochs: 3,
        ..GrpoConfig::default()
    };
    let mut policy = Policy::zeros(featurizer.feature_dim());
    println!(
        "before training: accuracy {:.3} on {} items",
        accuracy(&policy, &featurizer, &corpus.items)?,
        corpus.items.len()
    );

    let log = train(&mut policy, &examples, &config)?;
    for epoch in 0..config.epochs {
        let steps: Vec<_> = log.iter().filter(|s| s.epoch == epoch).collect();
        let reward = steps.iter().map(|s| s.mean_reward).sum::<f64>() / steps.len() as f64;
        println!("epoch {epoch}: mean sampled reward {reward:.3}");
    }
    println!(
        "after training:  accuracy {:.3}",
        accuracy(&policy, &featurizer, &corpus.items)?
    );
    Ok(())
}
