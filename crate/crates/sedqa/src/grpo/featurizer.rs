//! Deterministic featurization of (prompt, option) pairs.
//!
//! The policy sees nothing but the rendered prompt text, so every feature
//! is computed from it: hashed token counts of the prompt joined with the
//! option's text, plus a set of engineered evidence-agreement features that
//! are parsed back out of the prompt's event and question sections. The
//! engineered features stand in for the reasoning a large model would do
//! over the event list — matching labels, comparing first occurrences,
//! counting, ordering, and totalling durations — so a linear scorer over
//! them can ground its answers in the decoded events.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Number of reserved engineered slots appended after the hashed range.
pub const ENGINEERED_FEATURES: usize = 12;

const BUCKETS: usize = 6;

// Engineered slot offsets (relative to hash_dim).
const SLOT_LABEL_MATCH: usize = 0;
const SLOT_FIRST_EVENT: usize = 1;
const SLOT_BUCKET0: usize = 2; // ..=7 one-hot event-count bucket
const SLOT_COUNT_MATCH: usize = 8;
const SLOT_PRESENCE_AGREE: usize = 9;
const SLOT_ORDER_AGREE: usize = 10;
const SLOT_DURATION_MATCH: usize = 11;

/// Sparse feature vector: strictly increasing indices with values.
pub type SparseFeatures = Vec<(usize, f64)>;

/// Hashing featurizer over rendered prompts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Featurizer {
    hash_dim: usize,
}

impl Default for Featurizer {
    fn default() -> Self {
        Featurizer { hash_dim: 4096 }
    }
}

#[derive(Debug)]
struct PromptView {
    /// `(label, start_s, end_s)` triples parsed from the events section.
    events: Vec<(String, f64, f64)>,
    question: String,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Parses `label_start_end` back into its parts; labels may themselves
/// contain underscores, so the split comes from the right.
fn parse_event_line(line: &str) -> Option<(String, f64, f64)> {
    let mut it = line.rsplitn(3, '_');
    let end: f64 = it.next()?.parse().ok()?;
    let start: f64 = it.next()?.parse().ok()?;
    let label = it.next()?;
    if label.is_empty() || !start.is_finite() || !end.is_finite() {
        return None;
    }
    Some((label.to_string(), start, end))
}

fn parse_prompt(prompt: &str) -> PromptView {
    let mut events = Vec::new();
    let mut question_lines: Vec<&str> = Vec::new();
    let mut section = "";
    for line in prompt.lines() {
        match line {
            "[Timestamped Events]" | "[Question]" | "[Options]" => section = line,
            "---" => section = "",
            _ => match section {
                "[Timestamped Events]" => {
                    if let Some(ev) = parse_event_line(line) {
                        events.push(ev);
                    }
                }
                "[Question]" => question_lines.push(line),
                _ => {}
            },
        }
    }
    PromptView {
        events,
        question: question_lines.join(" "),
    }
}

/// True when every token of `label` occurs in the token set of a text.
fn label_in(label_tokens: &[String], text_tokens: &BTreeSet<String>) -> bool {
    !label_tokens.is_empty() && label_tokens.iter().all(|t| text_tokens.contains(t))
}

fn normalized_yes_no(option_text: &str) -> Option<bool> {
    match option_text.trim().trim_end_matches('.').to_lowercase().as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}

impl Featurizer {
    pub fn new(hash_dim: usize) -> Result<Self> {
        if hash_dim == 0 {
            return Err(Error::invalid("hash_dim must be positive"));
        }
        Ok(Featurizer { hash_dim })
    }

    pub fn hash_dim(&self) -> usize {
        self.hash_dim
    }

    /// Total feature dimension: hashed range plus engineered slots.
    pub fn feature_dim(&self) -> usize {
        self.hash_dim + ENGINEERED_FEATURES
    }

    /// Features of one option against a rendered prompt.
    ///
    /// Deterministic: identical `(prompt, option_text)` always produces the
    /// identical sparse vector, with indices strictly increasing.
    pub fn features(&self, prompt: &str, option_text: &str) -> SparseFeatures {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();

        // Hashed token counts of the prompt joined with the option text.
        for token in tokenize(prompt).iter().chain(tokenize(option_text).iter()) {
            let idx = (fnv1a(token.as_bytes()) % self.hash_dim as u64) as usize;
            *acc.entry(idx).or_insert(0.0) += 1.0;
        }

        let view = parse_prompt(prompt);
        let option_tokens: BTreeSet<String> = tokenize(option_text).into_iter().collect();
        let question_tokens: BTreeSet<String> = tokenize(&view.question).into_iter().collect();

        let label_tokens: Vec<(usize, Vec<String>)> = view
            .events
            .iter()
            .enumerate()
            .map(|(i, (label, _, _))| (i, tokenize(label)))
            .collect();
        let mut distinct_labels: Vec<&str> = view.events.iter().map(|(l, _, _)| l.as_str()).collect();
        distinct_labels.sort_unstable();
        distinct_labels.dedup();

        let mut engineered = [0.0_f64; ENGINEERED_FEATURES];

        // Distinct event labels fully contained in the option text.
        let mut label_match = 0.0;
        for label in &distinct_labels {
            if label_in(&tokenize(label), &option_tokens) {
                label_match += 1.0;
            }
        }
        engineered[SLOT_LABEL_MATCH] = label_match;

        // Earliest event by (start, label); does the option name it?
        if let Some((first_idx, _)) = view
            .events
            .iter()
            .enumerate()
            .min_by(|(_, x), (_, y)| x.1.total_cmp(&y.1).then_with(|| x.0.cmp(&y.0)))
        {
            if label_in(&label_tokens[first_idx].1, &option_tokens) {
                engineered[SLOT_FIRST_EVENT] = 1.0;
            }
        }

        // One-hot bucket of the total event count: 0, 1, 2, 3, 4, 5+.
        engineered[SLOT_BUCKET0 + view.events.len().min(BUCKETS - 1)] = 1.0;

        // Events whose label is named by the question.
        let question_event_count = label_tokens
            .iter()
            .filter(|(_, toks)| label_in(toks, &question_tokens))
            .count();

        // Numeric option equal to that count.
        if let Ok(n) = option_text.trim().parse::<i64>() {
            if n >= 0 && n as usize == question_event_count {
                engineered[SLOT_COUNT_MATCH] = 1.0;
            }
        }

        if let Some(yes) = normalized_yes_no(option_text) {
            // Yes/No agreement with presence of any question-named label.
            let present = question_event_count > 0;
            if yes == present {
                engineered[SLOT_PRESENCE_AGREE] = 1.0;
            }

            // Yes/No agreement with the first-occurrence order of the two
            // labels the question names, in question word order.
            let mut named: Vec<(&str, usize)> = distinct_labels
                .iter()
                .filter(|l| label_in(&tokenize(l), &question_tokens))
                .filter_map(|l| {
                    view.question
                        .to_lowercase()
                        .find(&l.to_lowercase())
                        .map(|pos| (*l, pos))
                })
                .collect();
            named.sort_by_key(|&(_, pos)| pos);
            if named.len() >= 2 {
                let earliest = |label: &str| -> Option<f64> {
                    view.events
                        .iter()
                        .filter(|(l, _, _)| l == label)
                        .map(|&(_, s, _)| s)
                        .min_by(f64::total_cmp)
                };
                if let (Some(x), Some(y)) = (earliest(named[0].0), earliest(named[1].0)) {
                    if x != y && (yes == (x < y)) {
                        engineered[SLOT_ORDER_AGREE] = 1.0;
                    }
                }
            }
        }

        // Does the option name the strictly longest label by total duration?
        let mut totals: BTreeMap<&str, f64> = BTreeMap::new();
        for (label, start, end) in &view.events {
            *totals.entry(label.as_str()).or_insert(0.0) += end - start;
        }
        let mut ordered: Vec<(&str, f64)> = totals.into_iter().collect();
        ordered.sort_by(|x, y| y.1.total_cmp(&x.1));
        let strictly_longest =
            ordered.len() == 1 || (ordered.len() >= 2 && ordered[0].1 > ordered[1].1);
        if strictly_longest && label_in(&tokenize(ordered[0].0), &option_tokens) {
            engineered[SLOT_DURATION_MATCH] = 1.0;
        }

        for (slot, &v) in engineered.iter().enumerate() {
            if v != 0.0 {
                acc.insert(self.hash_dim + slot, v);
            }
        }
        acc.into_iter().collect()
    }
}
