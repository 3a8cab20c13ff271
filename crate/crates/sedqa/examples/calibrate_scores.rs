//! Fits per-class affine LLR calibration on miscalibrated scores and shows
//! the Cllr improvement together with the recovered transform.

use sedqa::calibration::fit_calibration_model;
use sedqa::synth::{generate_corpus, SynthConfig};

fn main() -> sedqa::Result<()> {
    // Every class's true LLR is squashed and shifted before being turned
    // into a posterior, so the fitted transform should recover roughly
    // (1/0.5, -(-1)/0.5) = (2, 2).
    let distortion = (0.5, -1.0);
    let config = SynthConfig::new(21, 400, 6).with_distortions(vec![distortion; 6]);
    let corpus = generate_corpus(&config)?;

    let model = fit_calibration_model(&corpus.scores, &corpus.rolls, &corpus.ontology)?;

    println!("applied distortion: llr' = {}*llr + {}", distortion.0, distortion.1);
    println!("{:<6} {:>8} {:>8} {:>12} {:>12}", "class", "a", "b", "Cllr before", "Cllr after");
    for class in &model.classes {
        let (before, after) = match (class.cllr_before, class.cllr_after) {
            (Some(b), Some(a)) => (format!("{b:.4}"), format!("{a:.4}")),
            _ => ("-".into(), "-".into()),
        };
        println!(
            "{:<6} {:>8.3} {:>8.3} {:>12} {:>12}",
            class.label, class.a, class.b, before, after
        );
    }
    Ok(())
}
