//! Per-class likelihood-ratio calibration of frame posteriors.
//!
//! Detector posteriors are mapped to log-likelihood ratios against a
//! per-class prior, an affine transform `a * llr + b` is fit per class by
//! minimizing Cllr, and calibrated LLRs are mapped back to posteriors under
//! the same prior. Cllr is the proper scoring rule
//!
//! ```text
//! Cllr = 1/2 * ( mean over targets     of log2(1 + 1/LR)
//!              + mean over non-targets of log2(1 + LR) )
//! ```
//!
//! measured in bits; an uninformative detector that always emits LR = 1
//! costs exactly one bit. The identity transform is inside the affine
//! family and the fit only ever accepts descent steps, so calibration can
//! never raise Cllr on its training data.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ClassOntology, FrameLabelMatrix, FrameScoreMatrix};

/// Posteriors are clamped to `[EPSILON_CLIP, 1 - EPSILON_CLIP]` before the
/// logit so that saturated detector outputs stay finite.
pub const EPSILON_CLIP: f64 = 1e-7;

const LN_2: f64 = std::f64::consts::LN_2;

/// Gradient infinity-norm below which the affine fit is converged.
const FIT_GRAD_TOL: f64 = 1e-8;

/// Iteration cap for the affine fit.
const FIT_MAX_ITERS: usize = 10_000;

#[inline]
fn clamp_posterior(p: f64) -> f64 {
    p.clamp(EPSILON_CLIP, 1.0 - EPSILON_CLIP)
}

#[inline]
fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow for |x| up to the f64 exponent range.
#[inline]
fn softplus(x: f64) -> f64 {
    if x >= 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `(softplus(x), sigmoid(x))` from a single exponential.
#[inline]
fn softplus_sigmoid(x: f64) -> (f64, f64) {
    if x >= 0.0 {
        let e = (-x).exp();
        (x + e.ln_1p(), 1.0 / (1.0 + e))
    } else {
        let e = x.exp();
        (e.ln_1p(), e / (1.0 + e))
    }
}

fn check_prior(prior: f64) -> Result<()> {
    if !(prior.is_finite() && prior > 0.0 && prior < 1.0) {
        return Err(Error::invalid(format!(
            "prior must lie strictly inside (0, 1), got {prior}"
        )));
    }
    Ok(())
}

/// Converts a posterior under `prior` into a log-likelihood ratio.
///
/// The posterior is clamped away from 0 and 1 by [`EPSILON_CLIP`] first, so
/// the result is always finite.
pub fn posterior_to_llr(posterior: f64, prior: f64) -> Result<f64> {
    check_prior(prior)?;
    if !posterior.is_finite() {
        return Err(Error::invalid(format!(
            "posterior must be finite, got {posterior}"
        )));
    }
    Ok(logit(clamp_posterior(posterior)) - logit(prior))
}

/// Converts a log-likelihood ratio back into a posterior under `prior`:
/// `LR * prior / (LR * prior + (1 - prior))`, evaluated stably.
pub fn llr_to_posterior(llr: f64, prior: f64) -> Result<f64> {
    check_prior(prior)?;
    if llr.is_nan() {
        return Err(Error::invalid("llr must not be NaN"));
    }
    Ok(sigmoid(llr + logit(prior)))
}

/// Cllr in bits of a set of target and non-target LLRs.
///
/// Both sides must be non-empty; all values must be finite. Evaluated with
/// log-sum-exp stabilization so |llr| up to several hundred stays exact.
pub fn cllr(llrs_target: &[f64], llrs_nontarget: &[f64]) -> Result<f64> {
    if llrs_target.is_empty() || llrs_nontarget.is_empty() {
        return Err(Error::SingleClassFit {
            n_target: llrs_target.len(),
            n_nontarget: llrs_nontarget.len(),
        });
    }
    for &x in llrs_target.iter().chain(llrs_nontarget) {
        if !x.is_finite() {
            return Err(Error::invalid(format!("non-finite llr {x}")));
        }
    }
    let mean_t: f64 =
        llrs_target.iter().map(|&x| softplus(-x)).sum::<f64>() / llrs_target.len() as f64;
    let mean_n: f64 =
        llrs_nontarget.iter().map(|&x| softplus(x)).sum::<f64>() / llrs_nontarget.len() as f64;
    Ok((mean_t + mean_n) / (2.0 * LN_2))
}

/// Result of fitting one class's affine LLR transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a: f64,
    pub b: f64,
    /// Cllr in bits of `a * llr + b` on the training frames.
    pub final_cllr: f64,
    /// Whether the gradient tolerance was reached within the iteration cap.
    /// When false the best iterate found is still returned.
    pub converged: bool,
    pub iterations: usize,
}

struct FitData {
    targets: Vec<f64>,
    nontargets: Vec<f64>,
}

impl FitData {
    /// Objective value in bits plus the gradient with respect to `(a, b)`.
    fn value_grad(&self, a: f64, b: f64) -> (f64, f64, f64) {
        let mut f = 0.0;
        let mut ga = 0.0;
        let mut gb = 0.0;
        for &x in &self.targets {
            let z = a * x + b;
            let (sp, sg) = softplus_sigmoid(-z);
            f += sp;
            ga -= x * sg;
            gb -= sg;
        }
        let nt = self.targets.len() as f64;
        let mut f2 = 0.0;
        let mut ga2 = 0.0;
        let mut gb2 = 0.0;
        for &x in &self.nontargets {
            let z = a * x + b;
            let (sp, sg) = softplus_sigmoid(z);
            f2 += sp;
            ga2 += x * sg;
            gb2 += sg;
        }
        let nn = self.nontargets.len() as f64;
        let scale = 2.0 * LN_2;
        (
            (f / nt + f2 / nn) / scale,
            (ga / nt + ga2 / nn) / scale,
            (gb / nt + gb2 / nn) / scale,
        )
    }

    fn value(&self, a: f64, b: f64) -> f64 {
        let ft: f64 = self.targets.iter().map(|&x| softplus(-(a * x + b))).sum();
        let fn_: f64 = self.nontargets.iter().map(|&x| softplus(a * x + b)).sum();
        (ft / self.targets.len() as f64 + fn_ / self.nontargets.len() as f64) / (2.0 * LN_2)
    }
}

/// Fits the per-class affine transform `a * llr + b` that minimizes Cllr.
///
/// `labels` marks each frame as target (1) or non-target (0). The search is
/// gradient descent with a backtracking line search, started at the identity
/// `(a, b) = (1, 0)`; only descent steps are accepted, so the fitted Cllr is
/// never above the identity's. Fitting requires both frame kinds.
pub fn fit_class_calibration(raw_llrs: &[f64], labels: &[u8]) -> Result<FitResult> {
    if raw_llrs.len() != labels.len() {
        return Err(Error::invalid(format!(
            "got {} llrs but {} labels",
            raw_llrs.len(),
            labels.len()
        )));
    }
    let mut targets = Vec::new();
    let mut nontargets = Vec::new();
    for (&x, &y) in raw_llrs.iter().zip(labels) {
        if !x.is_finite() {
            return Err(Error::invalid(format!("non-finite llr {x}")));
        }
        match y {
            1 => targets.push(x),
            0 => nontargets.push(x),
            other => {
                return Err(Error::invalid(format!(
                    "labels must be 0 or 1, got {other}"
                )))
            }
        }
    }
    if targets.is_empty() || nontargets.is_empty() {
        return Err(Error::SingleClassFit {
            n_target: targets.len(),
            n_nontarget: nontargets.len(),
        });
    }

    // Descend in RMS-scaled coordinates: same objective, same start point,
    // same minimizer, but near-unit curvature in both directions instead of
    // a slope axis dominated by the LLR magnitude.
    let n_total = (targets.len() + nontargets.len()) as f64;
    let sum_sq: f64 = targets
        .iter()
        .chain(&nontargets)
        .map(|&x| x * x)
        .sum();
    let rms = (sum_sq / n_total).sqrt();
    let scale = if rms > 0.0 { rms } else { 1.0 };
    let data = FitData {
        targets: targets.iter().map(|&x| x / scale).collect(),
        nontargets: nontargets.iter().map(|&x| x / scale).collect(),
    };

    // (sa, sb) are the scaled-coordinate parameters; the original transform
    // is a = sa / scale, b = sb, so (1, 0) starts as (scale, 0).
    let (mut sa, mut sb) = (scale, 0.0_f64);
    let (mut f, mut ga, mut gb) = data.value_grad(sa, sb);
    let mut step = 1.0_f64;
    let mut iterations = 0;
    let mut converged = false;

    // The convergence test applies to the gradient in the original
    // coordinates: d/da = scale * d/dsa.
    let grad_ok = |ga: f64, gb: f64| (ga * scale).abs().max(gb.abs()) < FIT_GRAD_TOL;

    while iterations < FIT_MAX_ITERS {
        if grad_ok(ga, gb) {
            converged = true;
            break;
        }
        iterations += 1;
        let g2 = ga * ga + gb * gb;
        // Decreases below the objective's own rounding noise are meaningless;
        // demanding more than that keeps the search from idling on noise.
        let floor = 4.0 * f64::EPSILON * f.abs();
        let mut t = step;
        let mut accepted = false;
        // Armijo backtracking; on success the accepted step seeds the next
        // iteration's trial step, doubled.
        for _ in 0..60 {
            let (ca, cb) = (sa - t * ga, sb - t * gb);
            let fc = data.value(ca, cb);
            if fc <= f - (1e-4 * t * g2).max(floor) {
                sa = ca;
                sb = cb;
                let (nf, nga, ngb) = data.value_grad(sa, sb);
                f = nf;
                ga = nga;
                gb = ngb;
                step = (t * 2.0).min(1e8);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // No meaningful decrease at any trial step: the current iterate
            // is as good as the arithmetic allows.
            converged = grad_ok(ga, gb);
            break;
        }
    }
    if iterations >= FIT_MAX_ITERS && !converged {
        log::warn!(
            "calibration fit stopped at {FIT_MAX_ITERS} iterations with gradient norm {:.3e}",
            (ga * scale).abs().max(gb.abs())
        );
    }

    Ok(FitResult {
        a: sa / scale,
        b: sb,
        final_cllr: f,
        converged,
        iterations,
    })
}

/// Fitted calibration state for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCalibration {
    pub class_id: usize,
    pub label: String,
    pub a: f64,
    pub b: f64,
    /// Class prior used for both the raw-LLR derivation and the calibrated
    /// posterior mapping.
    pub prior: f64,
    /// Cllr in bits of the raw LLRs on the fit corpus; absent when the class
    /// had only one kind of frame and kept the identity transform.
    pub cllr_before: Option<f64>,
    pub cllr_after: Option<f64>,
    pub n_target: usize,
    pub n_nontarget: usize,
}

/// Per-class affine calibration model for a whole ontology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationModel {
    pub classes: Vec<ClassCalibration>,
}

impl CalibrationModel {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn priors(&self) -> Vec<f64> {
        self.classes.iter().map(|c| c.prior).collect()
    }

    /// Applies the model using its stored priors as the raw priors.
    pub fn apply(&self, scores: &FrameScoreMatrix) -> Result<FrameScoreMatrix> {
        let priors = self.priors();
        apply_calibration(self, scores, &priors)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("model serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<CalibrationModel> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: CalibrationModel =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, class) in self.classes.iter().enumerate() {
            if class.class_id != i {
                return Err(Error::invalid(format!(
                    "calibration classes must be ordered by id: position {i} has class_id {}",
                    class.class_id
                )));
            }
            if !(class.a.is_finite() && class.b.is_finite()) {
                return Err(Error::invalid(format!(
                    "class {i}: non-finite transform ({}, {})",
                    class.a, class.b
                )));
            }
            check_prior(class.prior)?;
        }
        Ok(())
    }
}

/// Applies a fitted model to one score matrix.
///
/// Each posterior is mapped to a raw LLR against `raw_priors[class]`, pushed
/// through the class's affine transform, and mapped back to a posterior
/// under the model's stored class prior.
pub fn apply_calibration(
    model: &CalibrationModel,
    scores: &FrameScoreMatrix,
    raw_priors: &[f64],
) -> Result<FrameScoreMatrix> {
    let c = model.n_classes();
    if raw_priors.len() != c {
        return Err(Error::invalid(format!(
            "model has {c} classes but {} raw priors were given",
            raw_priors.len()
        )));
    }
    scores.validate(c)?;
    model.validate()?;
    for &p in raw_priors {
        check_prior(p)?;
    }
    let raw_logits: Vec<f64> = raw_priors.iter().map(|&p| logit(p)).collect();
    let out_logits: Vec<f64> = model.classes.iter().map(|cc| logit(cc.prior)).collect();

    let posteriors = scores
        .posteriors
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(ci, &p)| {
                    let raw_llr = logit(clamp_posterior(p)) - raw_logits[ci];
                    let cal = model.classes[ci].a * raw_llr + model.classes[ci].b;
                    sigmoid(cal + out_logits[ci])
                })
                .collect()
        })
        .collect();
    Ok(FrameScoreMatrix {
        clip_id: scores.clip_id.clone(),
        frame_duration_s: scores.frame_duration_s,
        posteriors,
    })
}

/// One bin of a reliability curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    /// Mean predicted probability in the bin; `None` when the bin is empty.
    pub mean_confidence: Option<f64>,
    /// Fraction of positive labels in the bin; `None` when the bin is empty.
    pub empirical_frequency: Option<f64>,
    pub count: usize,
}

/// Ten-bin reliability curve with its expected calibration error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReliabilityCurve {
    pub bins: Vec<ReliabilityBin>,
    /// Count-weighted mean absolute gap between confidence and frequency.
    pub ece: f64,
    pub n: usize,
}

impl ReliabilityCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,mean_confidence,empirical_frequency,count\n");
        for bin in &self.bins {
            let conf = bin.mean_confidence.map_or(String::new(), |v| v.to_string());
            let freq = bin
                .empirical_frequency
                .map_or(String::new(), |v| v.to_string());
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                bin.lo, bin.hi, conf, freq, bin.count
            ));
        }
        out
    }
}

const RELIABILITY_BINS: usize = 10;

/// Bins posteriors into ten equal-width bins and compares mean confidence
/// to empirical frequency; exact 1.0 falls in the top bin.
pub fn reliability_curve(posteriors: &[f64], labels: &[u8]) -> Result<ReliabilityCurve> {
    if posteriors.len() != labels.len() {
        return Err(Error::invalid(format!(
            "got {} posteriors but {} labels",
            posteriors.len(),
            labels.len()
        )));
    }
    if posteriors.is_empty() {
        return Err(Error::invalid("reliability curve needs at least one frame"));
    }
    let mut sums = [0.0_f64; RELIABILITY_BINS];
    let mut positives = [0usize; RELIABILITY_BINS];
    let mut counts = [0usize; RELIABILITY_BINS];
    for (&p, &y) in posteriors.iter().zip(labels) {
        if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
            return Err(Error::invalid(format!("posterior {p} outside [0, 1]")));
        }
        if y > 1 {
            return Err(Error::invalid(format!("labels must be 0 or 1, got {y}")));
        }
        let bin = ((p * RELIABILITY_BINS as f64) as usize).min(RELIABILITY_BINS - 1);
        sums[bin] += p;
        positives[bin] += y as usize;
        counts[bin] += 1;
    }
    let n = posteriors.len();
    let mut bins = Vec::with_capacity(RELIABILITY_BINS);
    let mut ece = 0.0;
    for i in 0..RELIABILITY_BINS {
        let (conf, freq) = if counts[i] > 0 {
            let conf = sums[i] / counts[i] as f64;
            let freq = positives[i] as f64 / counts[i] as f64;
            ece += counts[i] as f64 / n as f64 * (conf - freq).abs();
            (Some(conf), Some(freq))
        } else {
            (None, None)
        };
        bins.push(ReliabilityBin {
            lo: i as f64 / RELIABILITY_BINS as f64,
            hi: (i + 1) as f64 / RELIABILITY_BINS as f64,
            mean_confidence: conf,
            empirical_frequency: freq,
            count: counts[i],
        });
    }
    Ok(ReliabilityCurve { bins, ece, n })
}

/// Frame-level class priors across a corpus, floored at `1/(N+2)` and capped
/// at `(N+1)/(N+2)` so downstream logits stay finite.
pub fn estimate_priors(labels: &[FrameLabelMatrix]) -> Result<Vec<f64>> {
    let c = labels
        .first()
        .map(FrameLabelMatrix::n_classes)
        .ok_or_else(|| Error::invalid("prior estimation needs at least one clip"))?;
    let mut counts = vec![0usize; c];
    let mut n_frames = 0usize;
    for matrix in labels {
        if matrix.n_classes() != c {
            return Err(Error::invalid(format!(
                "clip {}: {} classes, expected {c}",
                matrix.clip_id,
                matrix.n_classes()
            )));
        }
        for row in &matrix.labels {
            n_frames += 1;
            for (ci, &y) in row.iter().enumerate() {
                if y > 1 {
                    return Err(Error::invalid(format!("labels must be 0 or 1, got {y}")));
                }
                counts[ci] += y as usize;
            }
        }
    }
    if n_frames == 0 {
        return Err(Error::invalid("prior estimation needs at least one frame"));
    }
    let floor = 1.0 / (n_frames as f64 + 2.0);
    let cap = (n_frames as f64 + 1.0) / (n_frames as f64 + 2.0);
    Ok(counts
        .iter()
        .map(|&k| (k as f64 / n_frames as f64).clamp(floor, cap))
        .collect())
}

/// Fits a full per-class calibration model from paired scores and labels.
///
/// Matrices are paired by clip id; clips present in `scores` but absent from
/// `labels` count as all-negative (a clip with no events is valid data).
/// Raw LLRs are derived against the estimated corpus prior of each class. A
/// class with only one kind of frame keeps the identity transform and
/// carries no Cllr figures.
pub fn fit_calibration_model(
    scores: &[FrameScoreMatrix],
    labels: &[FrameLabelMatrix],
    ontology: &ClassOntology,
) -> Result<CalibrationModel> {
    let c = ontology.n_classes();
    if scores.is_empty() {
        return Err(Error::invalid("calibration needs at least one clip of scores"));
    }
    for m in scores {
        m.validate(c)?;
    }
    let by_clip: std::collections::HashMap<&str, &FrameLabelMatrix> =
        labels.iter().map(|m| (m.clip_id.as_str(), m)).collect();

    // Effective per-clip label matrices aligned with the score matrices.
    let mut aligned: Vec<FrameLabelMatrix> = Vec::with_capacity(scores.len());
    for m in scores {
        match by_clip.get(m.clip_id.as_str()) {
            Some(lab) => {
                if lab.n_frames() != m.n_frames() || lab.n_classes() != c {
                    return Err(Error::invalid(format!(
                        "clip {}: labels are {}x{} but scores are {}x{c}",
                        m.clip_id,
                        lab.n_frames(),
                        lab.n_classes(),
                        m.n_frames()
                    )));
                }
                aligned.push((*lab).clone());
            }
            None => aligned.push(FrameLabelMatrix::zeros(&m.clip_id, m.n_frames(), c)),
        }
    }

    let priors = estimate_priors(&aligned)?;

    let classes: Result<Vec<ClassCalibration>> = (0..c)
        .into_par_iter()
        .map(|ci| {
            let prior = priors[ci];
            let prior_logit = logit(prior);
            let mut llrs = Vec::new();
            let mut ys = Vec::new();
            for (m, lab) in scores.iter().zip(&aligned) {
                for (row, yrow) in m.posteriors.iter().zip(&lab.labels) {
                    llrs.push(logit(clamp_posterior(row[ci])) - prior_logit);
                    ys.push(yrow[ci]);
                }
            }
            let n_target = ys.iter().filter(|&&y| y == 1).count();
            let n_nontarget = ys.len() - n_target;
            if n_target == 0 || n_nontarget == 0 {
                log::warn!(
                    "class {} ({}) has no {} frames; keeping identity transform",
                    ci,
                    ontology.label(ci),
                    if n_target == 0 { "target" } else { "non-target" }
                );
                return Ok(ClassCalibration {
                    class_id: ci,
                    label: ontology.label(ci).to_string(),
                    a: 1.0,
                    b: 0.0,
                    prior,
                    cllr_before: None,
                    cllr_after: None,
                    n_target,
                    n_nontarget,
                });
            }
            let (targets, nontargets): (Vec<f64>, Vec<f64>) = {
                let mut t = Vec::with_capacity(n_target);
                let mut n = Vec::with_capacity(n_nontarget);
                for (&x, &y) in llrs.iter().zip(&ys) {
                    if y == 1 {
                        t.push(x)
                    } else {
                        n.push(x)
                    }
                }
                (t, n)
            };
            let before = cllr(&targets, &nontargets)?;
            let fit = fit_class_calibration(&llrs, &ys)?;
            if !fit.converged {
                log::warn!(
                    "class {} ({}): fit stopped short of tolerance after {} iterations; keeping the best iterate",
                    ci,
                    ontology.label(ci),
                    fit.iterations
                );
            }
            Ok(ClassCalibration {
                class_id: ci,
                label: ontology.label(ci).to_string(),
                a: fit.a,
                b: fit.b,
                prior,
                cllr_before: Some(before),
                cllr_after: Some(fit.final_cllr),
                n_target,
                n_nontarget,
            })
        })
        .collect();

    Ok(CalibrationModel { classes: classes? })
}

/// CSV of per-class Cllr before and after calibration.
pub fn cllr_scatter_csv(model: &CalibrationModel) -> String {
    let mut out = String::from("class_id,label,cllr_before,cllr_after\n");
    for class in &model.classes {
        let before = class.cllr_before.map_or(String::new(), |v| v.to_string());
        let after = class.cllr_after.map_or(String::new(), |v| v.to_string());
        out.push_str(&format!(
            "{},{},{},{}\n",
            class.class_id, class.label, before, after
        ));
    }
    out
}
