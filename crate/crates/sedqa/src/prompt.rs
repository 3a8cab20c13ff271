//! Fixed prompt template for event-grounded multiple-choice answering.
//!
//! The template text is frozen: byte-identical inputs must always render
//! byte-identical prompts, because downstream policies key their features
//! off this exact layout. Only three slots vary — the serialized event
//! list, the question, and the four options.

use crate::decoder::{serialize_event, sort_events, Event};
use crate::ingest::OptionSet;

/// Line substituted into the events section when the decoder found nothing.
pub const NO_EVENTS_SENTINEL: &str = "(no events detected)";

const SKELETON: &str = "Answer the question using ONLY the timestamped events.\n\
Your answer must be EXACTLY one of the provided options (A/B/C/D).\n\
\n\
---\n\
[Timestamped Events]\n\
{events}\n\
---\n\
[Question]\n\
{question}\n\
---\n\
[Options]\n\
{choices}\n\
---\n\
\n\
Rules:\n\
- Use ONLY the provided events.\n\
- If unsure, choose the option most consistent with the evidence \u{2014} never output \"N/A\" or \"N\".\n\
- Output ONLY the letter of the correct option (A/B/C/D), with NO punctuation, text, or explanations.\n";

/// The frozen prompt skeleton with `{events}`, `{question}`, and
/// `{choices}` slots.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PromptTemplate;

impl PromptTemplate {
    pub fn skeleton(&self) -> &'static str {
        SKELETON
    }

    /// Substitutes pre-rendered blocks into the three slots.
    pub fn render(&self, events_block: &str, question: &str, choices_block: &str) -> String {
        SKELETON
            .replacen("{events}", events_block, 1)
            .replacen("{question}", question, 1)
            .replacen("{choices}", choices_block, 1)
    }
}

/// Serialized events, one per line in chronological order, or the sentinel.
pub fn events_block(events: &[Event]) -> String {
    if events.is_empty() {
        return NO_EVENTS_SENTINEL.to_string();
    }
    let mut sorted = events.to_vec();
    sort_events(&mut sorted);
    sorted
        .iter()
        .map(serialize_event)
        .collect::<Vec<_>>()
        .join("\n")
}

fn choices_block(options: &OptionSet) -> String {
    options
        .iter()
        .map(|(letter, text)| format!("{letter}. {text}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Renders the full prompt for one question.
///
/// The question and option texts are copied verbatim; events are sorted
/// chronologically and serialized one per line, with a fixed sentinel when
/// the list is empty.
pub fn build_prompt(events: &[Event], question: &str, options: &OptionSet) -> String {
    PromptTemplate.render(&events_block(events), question, &choices_block(options))
}
