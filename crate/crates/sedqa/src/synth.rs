//! Seeded synthetic corpora with exact ground truth.
//!
//! Event activity is a per-class two-state Markov chain whose stationary
//! occupancy equals the class prior. True log-likelihood ratios come from
//! the self-consistent Gaussian pair (targets at +mu, non-targets at -mu,
//! both with variance 2 mu), for which the drawn value *is* its own LLR —
//! so emitted scores are calibrated by construction until a known affine
//! distortion is applied. Questions are instantiated from five templates
//! answered exactly by a rule oracle over the true events, which makes the
//! corpus solvable with accuracy 1.0 by construction.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::calibration::llr_to_posterior;
use crate::decoder::{events_from_active, serialize_event, sort_events, Event};
use crate::error::{Error, Result};
use crate::ingest::{
    save_annotations, save_aqa_items, save_ontology, save_scores, AqaItem, ClassOntology,
    FrameLabelMatrix, FrameScoreMatrix, Letter, OptionSet, Part,
};

/// Mean event length, in frames, of the activity chain.
pub const MEAN_EVENT_FRAMES: f64 = 10.0;

/// Per-part item counts of the reference dataset's train split.
pub const TRAIN_PART_WEIGHTS: [usize; 3] = [740, 1038, 6443];
/// Per-part item counts of the reference dataset's dev split.
pub const DEV_PART_WEIGHTS: [usize; 3] = [224, 609, 1633];
/// Per-part item counts of the reference dataset's eval split.
pub const EVAL_PART_WEIGHTS: [usize; 3] = [1480, 1004, 2400];

const PURPOSE_ROLLS: u64 = 1;
const PURPOSE_SCORES: u64 = 2;
const PURPOSE_ITEMS: u64 = 3;
const PURPOSE_DISTORT: u64 = 4;

/// Question asked by the first-event template.
pub const Q_FIRST: &str = "Which sound event occurs first in the clip?";
/// Question asked by the longest-total-duration template.
pub const Q_LONGEST: &str = "Which sound event has the longest total duration in the clip?";

/// Question asked by the count template for one class.
pub fn q_count(label: &str) -> String {
    format!("How many {label} events occur in the clip?")
}

/// Question asked by the ordering template for a pair of classes.
pub fn q_before(first: &str, second: &str) -> String {
    format!("Does the first {first} event occur before the first {second} event?")
}

/// Question asked by the presence template for one class.
pub fn q_presence(label: &str) -> String {
    format!("Is there at least one {label} event in the clip?")
}

const YES_NO_FILLERS: [&str; 4] = [
    "Only in the first half of the clip",
    "Only in the second half of the clip",
    "It cannot be determined",
    "Exactly half the time",
];

/// Generator settings. All randomness derives from `seed` alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_clips: usize,
    pub n_classes: usize,
    pub frames_per_clip: usize,
    pub frame_duration_s: f64,
    /// Stationary activity probability per class, each in [0, 1).
    pub class_priors: Vec<f64>,
    /// Gaussian-pair separation per class; larger means more informative scores.
    pub llr_separation: Vec<f64>,
    /// Affine (a, b) applied to each class's true LLR before emission.
    pub distortions: Vec<(f64, f64)>,
    /// Per-part item caps [part 1, part 2, part 3] for question generation.
    pub split_sizes: [usize; 3],
}

impl SynthConfig {
    /// Uniform defaults: 84 frames of 40 ms, priors 0.15, separation 2.0,
    /// identity distortion, and caps loose enough to keep every item.
    pub fn new(seed: u64, n_clips: usize, n_classes: usize) -> Self {
        SynthConfig {
            seed,
            n_clips,
            n_classes,
            frames_per_clip: 84,
            frame_duration_s: 0.04,
            class_priors: vec![0.15; n_classes],
            llr_separation: vec![2.0; n_classes],
            distortions: vec![(1.0, 0.0); n_classes],
            split_sizes: [n_clips, 2 * n_clips, 2 * n_clips],
        }
    }

    /// Corpus sized to roughly `total_items` questions whose part counts
    /// follow the given per-part weights (see the `*_PART_WEIGHTS` rows).
    pub fn sized(seed: u64, n_classes: usize, part_weights: [usize; 3], total_items: usize) -> Self {
        let split_sizes = scaled_part_counts(part_weights, total_items);
        // Each clip yields at most one part-1, two part-2, and two part-3
        // items; a margin absorbs clips where a template is skipped.
        let need = split_sizes[0]
            .max(split_sizes[1].div_ceil(2))
            .max(split_sizes[2].div_ceil(2));
        let n_clips = need + need / 3 + 8;
        SynthConfig {
            split_sizes,
            ..SynthConfig::new(seed, n_clips, n_classes)
        }
    }

    pub fn with_priors(mut self, priors: Vec<f64>) -> Self {
        self.class_priors = priors;
        self
    }

    pub fn with_separation(mut self, separation: Vec<f64>) -> Self {
        self.llr_separation = separation;
        self
    }

    pub fn with_distortions(mut self, distortions: Vec<(f64, f64)>) -> Self {
        self.distortions = distortions;
        self
    }

    pub fn with_frames(mut self, frames_per_clip: usize, frame_duration_s: f64) -> Self {
        self.frames_per_clip = frames_per_clip;
        self.frame_duration_s = frame_duration_s;
        self
    }

    pub fn with_split_sizes(mut self, split_sizes: [usize; 3]) -> Self {
        self.split_sizes = split_sizes;
        self
    }

    /// Ontology of synthetic class labels `C0..C{n-1}`.
    pub fn ontology(&self) -> ClassOntology {
        ClassOntology::from_labels((0..self.n_classes).map(|i| format!("C{i}"))).expect("distinct labels")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes == 0 || self.n_clips == 0 || self.frames_per_clip == 0 {
            return Err(Error::invalid(
                "n_classes, n_clips and frames_per_clip must all be positive",
            ));
        }
        if !(self.frame_duration_s.is_finite() && self.frame_duration_s > 0.0) {
            return Err(Error::invalid(format!(
                "frame_duration_s must be positive, got {}",
                self.frame_duration_s
            )));
        }
        for (name, len) in [
            ("class_priors", self.class_priors.len()),
            ("llr_separation", self.llr_separation.len()),
            ("distortions", self.distortions.len()),
        ] {
            if len != self.n_classes {
                return Err(Error::invalid(format!(
                    "{name} has {len} entries but n_classes is {}",
                    self.n_classes
                )));
            }
        }
        for (c, &p) in self.class_priors.iter().enumerate() {
            if !(p.is_finite() && (0.0..1.0).contains(&p)) {
                return Err(Error::invalid(format!(
                    "class {c}: prior must lie in [0, 1), got {p}"
                )));
            }
        }
        for (c, &mu) in self.llr_separation.iter().enumerate() {
            if !(mu.is_finite() && mu > 0.0) {
                return Err(Error::invalid(format!(
                    "class {c}: llr_separation must be positive, got {mu}"
                )));
            }
        }
        for (c, &(a, b)) in self.distortions.iter().enumerate() {
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::invalid(format!(
                    "class {c}: distortion must be finite, got ({a}, {b})"
                )));
            }
        }
        Ok(())
    }
}

/// Splits `total` into three part counts proportional to `weights`,
/// assigning remainders to the largest fractional shares.
pub fn scaled_part_counts(weights: [usize; 3], total: usize) -> [usize; 3] {
    let sum: usize = weights.iter().sum();
    assert!(sum > 0, "part weights must not all be zero");
    let mut counts = [0usize; 3];
    let mut fracs = [(0.0f64, 0usize); 3];
    let mut assigned = 0;
    for i in 0..3 {
        let share = weights[i] as f64 * total as f64 / sum as f64;
        counts[i] = share.floor() as usize;
        assigned += counts[i];
        fracs[i] = (share - share.floor(), i);
    }
    fracs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    for &(_, i) in fracs.iter().take(total - assigned) {
        counts[i] += 1;
    }
    counts
}

/// Seeded per-class affine miscalibrations: scale log-uniform in
/// [0.3, 3.0], offset uniform in [-1.5, 1.5].
pub fn random_distortions(seed: u64, n_classes: usize) -> Vec<(f64, f64)> {
    (0..n_classes)
        .map(|c| {
            let mut rng = substream(seed, PURPOSE_DISTORT, c as u64);
            let a = rng.gen_range(0.3_f64.ln()..3.0_f64.ln()).exp();
            let b = rng.gen_range(-1.5..1.5);
            (a, b)
        })
        .collect()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent per-clip random substream for one generation purpose.
fn substream(seed: u64, purpose: u64, clip_index: u64) -> ChaCha12Rng {
    let mixed = splitmix64(splitmix64(seed ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15)) ^ clip_index);
    ChaCha12Rng::seed_from_u64(mixed)
}

fn clip_id(index: usize) -> String {
    format!("clip{index:06}")
}

/// Per-clip matrix of true log-likelihood ratios, frames by classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameLlrMatrix {
    pub clip_id: String,
    pub frame_duration_s: f64,
    pub llrs: Vec<Vec<f64>>,
}

/// Ground-truth activity rolls paired with each clip's event list.
pub type RollsAndEvents = (Vec<FrameLabelMatrix>, Vec<(String, Vec<Event>)>);

/// Samples per-class activity rolls and extracts their ground-truth events.
///
/// Each class follows a two-state Markov chain with leave rate
/// `1 / MEAN_EVENT_FRAMES` and entry rate chosen so the stationary
/// occupancy equals the class prior; the initial state is drawn from the
/// stationary distribution. Events are the maximal active runs, i.e. the
/// same run-length rule the decoder applies.
pub fn generate_event_rolls(config: &SynthConfig) -> Result<RollsAndEvents> {
    config.validate()?;
    let p10 = 1.0 / MEAN_EVENT_FRAMES;
    let mut rolls = Vec::with_capacity(config.n_clips);
    let mut events = Vec::with_capacity(config.n_clips);
    for idx in 0..config.n_clips {
        let id = clip_id(idx);
        let mut rng = substream(config.seed, PURPOSE_ROLLS, idx as u64);
        let mut roll = FrameLabelMatrix::zeros(&id, config.frames_per_clip, config.n_classes);
        let mut clip_events = Vec::new();
        for (c, &prior) in config.class_priors.iter().enumerate() {
            let p01 = prior * p10 / (1.0 - prior);
            let mut state = rng.gen::<f64>() < prior;
            let mut active = Vec::with_capacity(config.frames_per_clip);
            for t in 0..config.frames_per_clip {
                if t > 0 {
                    let u: f64 = rng.gen();
                    state = if state { u >= p10 } else { u < p01 };
                }
                active.push(state);
                roll.labels[t][c] = state as u8;
            }
            clip_events.extend(events_from_active(
                &active,
                &format!("C{c}"),
                config.frame_duration_s,
            ));
        }
        sort_events(&mut clip_events);
        rolls.push(roll);
        events.push((id, clip_events));
    }
    Ok((rolls, events))
}

/// Samples true LLRs for the rolls and emits distorted posterior scores.
///
/// Active frames draw from Normal(mu, 2 mu), inactive from Normal(-mu, 2 mu);
/// the drawn value equals its own log-likelihood ratio under that pair. The
/// emitted posterior is `llr_to_posterior(a * llr + b, prior)` with the
/// class's configured distortion. Classes with prior 0 emit posterior 0.
pub fn generate_scores(
    rolls: &[FrameLabelMatrix],
    config: &SynthConfig,
) -> Result<(Vec<FrameLlrMatrix>, Vec<FrameScoreMatrix>)> {
    config.validate()?;
    let pairs: Vec<(Normal<f64>, Normal<f64>)> = config
        .llr_separation
        .iter()
        .map(|&mu| {
            let sd = (2.0 * mu).sqrt();
            let target = Normal::new(mu, sd).map_err(|e| Error::invalid(e.to_string()))?;
            let nontarget = Normal::new(-mu, sd).map_err(|e| Error::invalid(e.to_string()))?;
            Ok((target, nontarget))
        })
        .collect::<Result<_>>()?;

    let mut true_llrs = Vec::with_capacity(rolls.len());
    let mut scores = Vec::with_capacity(rolls.len());
    for (idx, roll) in rolls.iter().enumerate() {
        let mut rng = substream(config.seed, PURPOSE_SCORES, idx as u64);
        let n_frames = roll.labels.len();
        let mut llrs = vec![vec![0.0; config.n_classes]; n_frames];
        let mut posts = vec![vec![0.0; config.n_classes]; n_frames];
        for c in 0..config.n_classes {
            let prior = config.class_priors[c];
            let (a, b) = config.distortions[c];
            for t in 0..n_frames {
                let llr = if roll.labels[t][c] == 1 {
                    pairs[c].0.sample(&mut rng)
                } else {
                    pairs[c].1.sample(&mut rng)
                };
                llrs[t][c] = llr;
                posts[t][c] = if prior == 0.0 {
                    0.0
                } else {
                    llr_to_posterior(a * llr + b, prior)?
                };
            }
        }
        true_llrs.push(FrameLlrMatrix {
            clip_id: roll.clip_id.clone(),
            frame_duration_s: config.frame_duration_s,
            llrs,
        });
        scores.push(FrameScoreMatrix {
            clip_id: roll.clip_id.clone(),
            frame_duration_s: config.frame_duration_s,
            posteriors: posts,
        });
    }
    Ok((true_llrs, scores))
}

/// Earliest event's label, by (start, label) order. None when empty.
pub fn oracle_first(events: &[Event]) -> Option<&str> {
    events
        .iter()
        .min_by(|x, y| {
            x.start_s
                .total_cmp(&y.start_s)
                .then_with(|| x.class_label.cmp(&y.class_label))
        })
        .map(|e| e.class_label.as_str())
}

/// Number of events carrying the label.
pub fn oracle_count(events: &[Event], label: &str) -> usize {
    events.iter().filter(|e| e.class_label == label).count()
}

/// Whether the first `x` event starts strictly before the first `y` event.
/// None when either label is absent or both start together.
pub fn oracle_before(events: &[Event], x: &str, y: &str) -> Option<bool> {
    let earliest = |label: &str| {
        events
            .iter()
            .filter(|e| e.class_label == label)
            .map(|e| e.start_s)
            .min_by(f64::total_cmp)
    };
    let (fx, fy) = (earliest(x)?, earliest(y)?);
    if fx == fy {
        None
    } else {
        Some(fx < fy)
    }
}

/// Label with the strictly largest total duration. None when empty or tied.
pub fn oracle_longest(events: &[Event]) -> Option<&str> {
    let mut totals: Vec<(&str, f64)> = Vec::new();
    for e in events {
        match totals.iter_mut().find(|(l, _)| *l == e.class_label) {
            Some((_, d)) => *d += e.duration_s(),
            None => totals.push((e.class_label.as_str(), e.duration_s())),
        }
    }
    totals.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(y.0)));
    match totals.len() {
        0 => None,
        1 => Some(totals[0].0),
        _ if totals[0].1 > totals[1].1 => Some(totals[0].0),
        _ => None,
    }
}

/// Whether any event carries the label.
pub fn oracle_presence(events: &[Event], label: &str) -> bool {
    events.iter().any(|e| e.class_label == label)
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "Yes"
    } else {
        "No"
    }
}

/// Answers a generated item from its embedded ground-truth events by
/// re-deriving the template from the question text. This is the symbolic
/// ceiling solver: on generator output it is exact by construction.
pub fn rule_oracle(item: &AqaItem) -> Result<Letter> {
    let q = item.question.as_str();
    let answer: String = if q == Q_FIRST {
        oracle_first(&item.events)
            .ok_or_else(|| Error::invalid(format!("item {}: no events for first-event question", item.item_id)))?
            .to_string()
    } else if q == Q_LONGEST {
        oracle_longest(&item.events)
            .ok_or_else(|| Error::invalid(format!("item {}: no strict longest class", item.item_id)))?
            .to_string()
    } else if let Some(label) = q
        .strip_prefix("How many ")
        .and_then(|rest| rest.strip_suffix(" events occur in the clip?"))
    {
        oracle_count(&item.events, label).to_string()
    } else if let Some(rest) = q.strip_prefix("Does the first ") {
        let (x, rest) = rest
            .split_once(" event occur before the first ")
            .ok_or_else(|| Error::invalid(format!("item {}: unrecognized question", item.item_id)))?;
        let y = rest
            .strip_suffix(" event?")
            .ok_or_else(|| Error::invalid(format!("item {}: unrecognized question", item.item_id)))?;
        let before = oracle_before(&item.events, x, y)
            .ok_or_else(|| Error::invalid(format!("item {}: ordering undefined", item.item_id)))?;
        yes_no(before).to_string()
    } else if let Some(label) = q
        .strip_prefix("Is there at least one ")
        .and_then(|rest| rest.strip_suffix(" event in the clip?"))
    {
        yes_no(oracle_presence(&item.events, label)).to_string()
    } else {
        return Err(Error::invalid(format!(
            "item {}: question matches no known template",
            item.item_id
        )));
    };

    item.options
        .iter()
        .find(|(_, text)| *text == answer)
        .map(|(letter, _)| letter)
        .ok_or_else(|| {
            Error::invalid(format!(
                "item {}: oracle answer {answer:?} not among the options",
                item.item_id
            ))
        })
}

/// Draws `k` distinct elements from `pool` without replacement.
fn sample_without_replacement<T: Clone>(pool: &[T], k: usize, rng: &mut ChaCha12Rng) -> Vec<T> {
    let mut indices: Vec<usize> = (0..pool.len()).collect();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k.min(pool.len()) {
        let j = rng.gen_range(0..indices.len());
        out.push(pool[indices.swap_remove(j)].clone());
    }
    out
}

/// Distractor labels: present classes first, padded from the absent ones.
fn label_distractors(
    answer: &str,
    present: &[String],
    all: &[String],
    rng: &mut ChaCha12Rng,
) -> Vec<String> {
    let present_pool: Vec<String> = present.iter().filter(|l| *l != answer).cloned().collect();
    let mut out = sample_without_replacement(&present_pool, 3, rng);
    if out.len() < 3 {
        let absent_pool: Vec<String> = all
            .iter()
            .filter(|l| *l != answer && !present.contains(*l))
            .cloned()
            .collect();
        out.extend(sample_without_replacement(&absent_pool, 3 - out.len(), rng));
    }
    out
}

fn yes_no_distractors(answer: &str, rng: &mut ChaCha12Rng) -> Vec<String> {
    let mut out = vec![yes_no(answer != "Yes").to_string()];
    let fillers: Vec<String> = YES_NO_FILLERS.iter().map(|s| s.to_string()).collect();
    out.extend(sample_without_replacement(&fillers, 2, rng));
    out
}

/// Places the answer uniformly among the distractors and builds the item.
#[allow(clippy::too_many_arguments)]
fn place_item(
    item_id: String,
    clip_id: &str,
    part: Part,
    question: String,
    answer: String,
    distractors: Vec<String>,
    events: &[Event],
    rng: &mut ChaCha12Rng,
) -> Result<AqaItem> {
    debug_assert_eq!(distractors.len(), 3);
    let pos = rng.gen_range(0..4usize);
    let mut texts = distractors;
    texts.insert(pos, answer);
    let options = OptionSet::new([
        texts[0].as_str(),
        texts[1].as_str(),
        texts[2].as_str(),
        texts[3].as_str(),
    ])?;
    Ok(AqaItem {
        item_id,
        clip_id: clip_id.to_string(),
        part,
        question,
        options,
        answer_key: Letter::from_index(pos).expect("position in range"),
        events: events.to_vec(),
    })
}

/// Instantiates the question templates over ground-truth events.
///
/// Per clip, up to five items are produced — first-event and ordering
/// (part 2), count and longest-duration (part 3), presence (part 1) — and
/// appended while the corresponding `split_sizes` cap has room. Clips with
/// no events skip the event-dependent templates with a log notice; the
/// ordering template also needs two labels with distinct first onsets and
/// the longest template a strict maximum.
pub fn generate_aqa_items(
    events: &[(String, Vec<Event>)],
    config: &SynthConfig,
) -> Result<Vec<AqaItem>> {
    config.validate()?;
    if config.n_classes < 4 {
        return Err(Error::invalid(
            "question generation needs at least 4 classes for distinct options",
        ));
    }
    let all_labels: Vec<String> = (0..config.n_classes).map(|c| format!("C{c}")).collect();
    let caps = config.split_sizes;
    let mut counts = [0usize; 3];
    let mut items = Vec::new();

    for (idx, (id, clip_events)) in events.iter().enumerate() {
        if counts[0] >= caps[0] && counts[1] >= caps[1] && counts[2] >= caps[2] {
            break;
        }
        let mut rng = substream(config.seed, PURPOSE_ITEMS, idx as u64);
        let mut present: Vec<String> = clip_events.iter().map(|e| e.class_label.clone()).collect();
        present.sort();
        present.dedup();
        let mut candidates: Vec<AqaItem> = Vec::with_capacity(5);

        if clip_events.is_empty() {
            log::info!("clip {id}: no events, skipping event-dependent question templates");
        } else {
            // Template 1: first event (part 2).
            let answer = oracle_first(clip_events).expect("non-empty").to_string();
            let distractors = label_distractors(&answer, &present, &all_labels, &mut rng);
            candidates.push(place_item(
                format!("{id}-t1"),
                id,
                Part::Two,
                Q_FIRST.to_string(),
                answer,
                distractors,
                clip_events,
                &mut rng,
            )?);

            // Template 2: count of a uniformly chosen class (part 3).
            let label = all_labels[rng.gen_range(0..all_labels.len())].clone();
            let n = oracle_count(clip_events, &label);
            let lo = n.saturating_sub(3);
            let pool: Vec<String> = (lo..=n + 3).filter(|&k| k != n).map(|k| k.to_string()).collect();
            let distractors = sample_without_replacement(&pool, 3, &mut rng);
            candidates.push(place_item(
                format!("{id}-t2"),
                id,
                Part::Three,
                q_count(&label),
                n.to_string(),
                distractors,
                clip_events,
                &mut rng,
            )?);

            // Template 3: ordering of two present classes (part 2).
            let mut pairs = Vec::new();
            for x in &present {
                for y in &present {
                    if x != y && oracle_before(clip_events, x, y).is_some() {
                        pairs.push((x.clone(), y.clone()));
                    }
                }
            }
            if let Some((x, y)) = (!pairs.is_empty())
                .then(|| pairs[rng.gen_range(0..pairs.len())].clone())
            {
                let before = oracle_before(clip_events, &x, &y).expect("pair pre-checked");
                let answer = yes_no(before).to_string();
                let distractors = yes_no_distractors(&answer, &mut rng);
                candidates.push(place_item(
                    format!("{id}-t3"),
                    id,
                    Part::Two,
                    q_before(&x, &y),
                    answer,
                    distractors,
                    clip_events,
                    &mut rng,
                )?);
            }

            // Template 4: longest total duration, strict max only (part 3).
            if let Some(answer) = oracle_longest(clip_events).map(str::to_string) {
                let distractors = label_distractors(&answer, &present, &all_labels, &mut rng);
                candidates.push(place_item(
                    format!("{id}-t4"),
                    id,
                    Part::Three,
                    Q_LONGEST.to_string(),
                    answer,
                    distractors,
                    clip_events,
                    &mut rng,
                )?);
            }
        }

        // Template 5: presence of a uniformly chosen class (part 1).
        let label = all_labels[rng.gen_range(0..all_labels.len())].clone();
        let answer = yes_no(oracle_presence(clip_events, &label)).to_string();
        let distractors = yes_no_distractors(&answer, &mut rng);
        candidates.push(place_item(
            format!("{id}-t5"),
            id,
            Part::One,
            q_presence(&label),
            answer,
            distractors,
            clip_events,
            &mut rng,
        )?);

        for item in candidates {
            let p = item.part.index();
            if counts[p] < caps[p] {
                counts[p] += 1;
                items.push(item);
            }
        }
    }

    for (p, (&got, &want)) in counts.iter().zip(&caps).enumerate() {
        if got < want {
            log::warn!(
                "part {}: generated {got} of {want} requested items; add clips to fill the quota",
                p + 1
            );
        }
    }
    Ok(items)
}

/// A complete synthetic corpus.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub ontology: ClassOntology,
    pub rolls: Vec<FrameLabelMatrix>,
    pub events: Vec<(String, Vec<Event>)>,
    pub true_llrs: Vec<FrameLlrMatrix>,
    pub scores: Vec<FrameScoreMatrix>,
    pub items: Vec<AqaItem>,
}

/// Runs the full generator: rolls, scores, and question items.
pub fn generate_corpus(config: &SynthConfig) -> Result<Corpus> {
    let (rolls, events) = generate_event_rolls(config)?;
    let (true_llrs, scores) = generate_scores(&rolls, config)?;
    let items = generate_aqa_items(&events, config)?;
    Ok(Corpus {
        ontology: config.ontology(),
        rolls,
        events,
        true_llrs,
        scores,
        items,
    })
}

/// Writes a corpus into a directory using the standard file formats:
/// `ontology.json`, `scores.jsonl`, `true_llrs.jsonl`, `annotations.tsv`,
/// and `items.jsonl`.
pub fn write_corpus(corpus: &Corpus, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_ontology(dir.join("ontology.json"), &corpus.ontology)?;
    save_scores(dir.join("scores.jsonl"), &corpus.scores)?;
    save_annotations(dir.join("annotations.tsv"), &corpus.events)?;
    save_aqa_items(dir.join("items.jsonl"), &corpus.items)?;

    let path = dir.join("true_llrs.jsonl");
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    for m in &corpus.true_llrs {
        let line = serde_json::to_string(m).map_err(|e| Error::invalid(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(())
}

/// Debug rendering of a clip's ground truth: one serialized event per line.
pub fn events_to_lines(events: &[Event]) -> String {
    events.iter().map(|e| serialize_event(e) + "\n").collect()
}
