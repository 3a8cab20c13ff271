//! Generates a seeded synthetic corpus and shows what lands on disk.

use sedqa::synth::{generate_corpus, write_corpus, SynthConfig, TRAIN_PART_WEIGHTS};

fn main() -> sedqa::Result<()> {
    let config = SynthConfig::sized(7, 6, TRAIN_PART_WEIGHTS, 400)
        .with_distortions(vec![(0.6, -0.8); 6]);
    let corpus = generate_corpus(&config)?;

    let dir = std::env::temp_dir().join("sedqa-generate-corpus");
    write_corpus(&corpus, &dir)?;

    let mut parts = [0usize; 3];
    for item in &corpus.items {
        parts[item.part.index()] += 1;
    }
    println!("classes: {:?}", corpus.ontology.labels().collect::<Vec<_>>());
    println!(
        "{} clips, {} items (part counts {:?})",
        corpus.scores.len(),
        corpus.items.len(),
        parts
    );

    let item = &corpus.items[0];
    println!("\nfirst item ({}, clip {}):", item.item_id, item.clip_id);
    println!("  Q: {}", item.question);
    for (letter, text) in item.options.iter() {
        println!("  {letter}. {text}");
    }
    println!("  key: {}", item.answer_key);

    println!("\nfiles under {}:", dir.display());
    for name in ["ontology.json", "scores.jsonl", "annotations.tsv", "items.jsonl", "true_llrs.jsonl"] {
        let len = std::fs::metadata(dir.join(name)).map(|m| m.len()).unwrap_or(0);
        println!("  {name} ({len} bytes)");
    }
    Ok(())
}
