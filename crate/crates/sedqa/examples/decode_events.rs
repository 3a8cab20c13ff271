//! Decodes frame posteriors into timestamped events at a few thresholds.

use sedqa::decoder::{decode_events, serialize_event, DecoderConfig};
use sedqa::synth::{generate_corpus, SynthConfig};

fn main() -> sedqa::Result<()> {
    let config = SynthConfig::new(5, 20, 4);
    let corpus = generate_corpus(&config)?;

    // Pick the clip with the most true events so there is something to see.
    let (clip_idx, truth) = corpus
        .events
        .iter()
        .enumerate()
        .max_by_key(|(_, (_, evs))| evs.len())
        .map(|(i, (_, evs))| (i, evs))
        .expect("corpus has clips");
    let matrix = &corpus.scores[clip_idx];

    println!("clip {} has {} true events:", matrix.clip_id, truth.len());
    for e in truth {
        println!("  {}", serialize_event(e));
    }

    for threshold in [0.05, 0.1, 0.2, 0.5] {
        let decoder = DecoderConfig {
            threshold,
            ..DecoderConfig::default()
        };
        let events = decode_events(matrix, &corpus.ontology, &decoder)?;
        println!("\nthreshold {threshold}: {} events", events.len());
        for e in &events {
            println!("  {}", serialize_event(e));
        }
    }
    Ok(())
}
