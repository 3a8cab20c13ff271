//! Writes reliability diagrams before and after calibration plus the
//! per-class Cllr scatter as standalone SVG files.

use sedqa::calibration::{fit_calibration_model, reliability_curve};
use sedqa::ingest::{FrameLabelMatrix, FrameScoreMatrix};
use sedqa::plot::{cllr_scatter_svg, reliability_svg};
use sedqa::synth::{generate_corpus, SynthConfig};

fn pooled_curve(
    scores: &[FrameScoreMatrix],
    labels: &[FrameLabelMatrix],
) -> sedqa::Result<sedqa::calibration::ReliabilityCurve> {
    let mut p = Vec::new();
    let mut y = Vec::new();
    for (m, lab) in scores.iter().zip(labels) {
        for (row, yrow) in m.posteriors.iter().zip(&lab.labels) {
            p.extend_from_slice(row);
            y.extend_from_slice(yrow);
        }
    }
    reliability_curve(&p, &y)
}

fn main() -> sedqa::Result<()> {
    let config = SynthConfig::new(17, 300, 6).with_distortions(vec![(0.5, -1.0); 6]);
    let corpus = generate_corpus(&config)?;
    let model = fit_calibration_model(&corpus.scores, &corpus.rolls, &corpus.ontology)?;
    let calibrated: Vec<FrameScoreMatrix> = corpus
        .scores
        .iter()
        .map(|m| model.apply(m))
        .collect::<sedqa::Result<_>>()?;

    let before = pooled_curve(&corpus.scores, &corpus.rolls)?;
    let after = pooled_curve(&calibrated, &corpus.rolls)?;
    println!("pooled ECE before calibration: {:.4}", before.ece);
    println!("pooled ECE after calibration:  {:.4}", after.ece);

    let dir = std::env::temp_dir().join("sedqa-reliability-report");
    std::fs::create_dir_all(&dir).expect("create output directory");
    for (name, svg) in [
        ("reliability_raw.svg", reliability_svg(&before, "Reliability (raw scores)")),
        ("reliability_calibrated.svg", reliability_svg(&after, "Reliability (calibrated)")),
        ("cllr_scatter.svg", cllr_scatter_svg(&model, "Cllr before vs after")),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, svg).expect("write svg");
        println!("wrote {}", path.display());
    }
    Ok(())
}
