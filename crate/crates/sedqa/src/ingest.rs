//! Corpus data model and file formats.
//!
//! Four kinds of artifact move between pipeline stages:
//!
//! * class ontologies — JSON list of `{class_id, label}` records;
//! * frame-level score matrices — one JSON record per line, each carrying a
//!   clip id, its frame duration, and a `T x C` posterior matrix;
//! * ground-truth annotations — tab-separated `(clip_id, start_s, end_s,
//!   label)` rows, rasterized onto the frame grid on load;
//! * question items — one JSON record per line with question text, four
//!   options keyed `A`..`D`, the answer key, and an event list.
//!
//! Annotation intervals follow a frame-center convention: frame `t` is
//! labeled active for an interval `[start, end)` exactly when its center
//! `(t + 0.5) * frame_duration` lies inside the interval.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::decoder::Event;
use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Ontology
// ---------------------------------------------------------------------------

/// Ordered set of sound classes; class ids are dense indices `0..C`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassOntology {
    labels: Vec<String>,
    by_label: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct ClassEntry {
    class_id: usize,
    label: String,
}

impl ClassOntology {
    /// Builds an ontology from labels in class-id order.
    ///
    /// Labels must be non-empty and unique.
    pub fn from_labels<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::invalid("ontology has no classes"));
        }
        let mut by_label = HashMap::new();
        for (id, label) in labels.iter().enumerate() {
            if label.is_empty() {
                return Err(Error::invalid(format!("class {id} has an empty label")));
            }
            if by_label.insert(label.clone(), id).is_some() {
                return Err(Error::invalid(format!("duplicate class label {label:?}")));
            }
        }
        Ok(ClassOntology { labels, by_label })
    }

    pub fn n_classes(&self) -> usize {
        self.labels.len()
    }

    /// Label for a class id; panics only on out-of-range ids, which are
    /// validated at every ingest boundary.
    pub fn label(&self, class_id: usize) -> &str {
        &self.labels[class_id]
    }

    pub fn id_of(&self, label: &str) -> Option<usize> {
        self.by_label.get(label).copied()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(String::as_str)
    }
}

/// Loads an ontology from a JSON list of `{class_id, label}` records.
///
/// Class ids must be exactly `0..C` in order.
pub fn load_ontology(path: impl AsRef<Path>) -> Result<ClassOntology> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let entries: Vec<ClassEntry> = serde_json::from_str(&text)
        .map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    for (i, entry) in entries.iter().enumerate() {
        if entry.class_id != i {
            return Err(Error::invalid(format!(
                "ontology ids must be contiguous from 0: position {i} has class_id {}",
                entry.class_id
            )));
        }
    }
    ClassOntology::from_labels(entries.into_iter().map(|e| e.label))
}

pub fn save_ontology(path: impl AsRef<Path>, ontology: &ClassOntology) -> Result<()> {
    let path = path.as_ref();
    let entries: Vec<ClassEntry> = ontology
        .labels()
        .enumerate()
        .map(|(class_id, label)| ClassEntry {
            class_id,
            label: label.to_string(),
        })
        .collect();
    let text = serde_json::to_string_pretty(&entries).expect("ontology serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Frame matrices
// ---------------------------------------------------------------------------

/// Per-frame class posteriors for one clip, row-major `T x C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameScoreMatrix {
    pub clip_id: String,
    pub frame_duration_s: f64,
    pub posteriors: Vec<Vec<f64>>,
}

impl FrameScoreMatrix {
    pub fn n_frames(&self) -> usize {
        self.posteriors.len()
    }

    pub fn n_classes(&self) -> usize {
        self.posteriors.first().map_or(0, Vec::len)
    }

    /// Checks shape, frame duration, and the `[0, 1]` range of every entry.
    pub fn validate(&self, n_classes: usize) -> Result<()> {
        if !(self.frame_duration_s.is_finite() && self.frame_duration_s > 0.0) {
            return Err(Error::invalid(format!(
                "clip {}: frame_duration_s must be positive, got {}",
                self.clip_id, self.frame_duration_s
            )));
        }
        for (t, row) in self.posteriors.iter().enumerate() {
            if row.len() != n_classes {
                return Err(Error::invalid(format!(
                    "clip {}: frame {t} has {} classes, expected {n_classes}",
                    self.clip_id,
                    row.len()
                )));
            }
            for (c, &p) in row.iter().enumerate() {
                if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                    return Err(Error::ScoreOutOfRange {
                        clip_id: self.clip_id.clone(),
                        frame: t,
                        class: c,
                        value: p,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Per-frame binary class activity for one clip, row-major `T x C`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameLabelMatrix {
    pub clip_id: String,
    pub labels: Vec<Vec<u8>>,
}

impl FrameLabelMatrix {
    pub fn zeros(clip_id: impl Into<String>, n_frames: usize, n_classes: usize) -> Self {
        FrameLabelMatrix {
            clip_id: clip_id.into(),
            labels: vec![vec![0; n_classes]; n_frames],
        }
    }

    pub fn n_frames(&self) -> usize {
        self.labels.len()
    }

    pub fn n_classes(&self) -> usize {
        self.labels.first().map_or(0, Vec::len)
    }
}

/// Loads score matrices from a line-delimited JSON file.
///
/// Every record must agree with the ontology's class count; clip ids must be
/// unique. An empty file yields an empty corpus.
pub fn load_scores(path: impl AsRef<Path>, ontology: &ClassOntology) -> Result<Vec<FrameScoreMatrix>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut seen = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let matrix: FrameScoreMatrix = serde_json::from_str(line)
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        matrix
            .validate(ontology.n_classes())
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        if let Some(prev) = seen.insert(matrix.clip_id.clone(), lineno) {
            return Err(Error::parse(
                path,
                lineno,
                format!("duplicate clip_id {:?} (first seen on line {prev})", matrix.clip_id),
            ));
        }
        out.push(matrix);
    }
    Ok(out)
}

pub fn save_scores(path: impl AsRef<Path>, scores: &[FrameScoreMatrix]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for matrix in scores {
        let line = serde_json::to_string(matrix).expect("score matrix serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Annotations
// ---------------------------------------------------------------------------

const ANNOTATION_HEADER: &str = "clip_id\tstart_s\tend_s\tlabel";

/// Loads timestamped annotations and rasterizes them onto the frame grid.
///
/// Rows are `clip_id<TAB>start_s<TAB>end_s<TAB>label`; a leading header line
/// equal to the canonical column names is skipped. Each clip becomes a
/// `frames_per_clip x C` label matrix where frame `t` is active for an
/// interval `[start, end)` iff its center `(t + 0.5) * frame_duration_s`
/// falls inside. Clips appear in first-occurrence order; intervals past the
/// clip horizon simply stop contributing frames.
pub fn load_annotations(
    path: impl AsRef<Path>,
    ontology: &ClassOntology,
    frame_duration_s: f64,
    frames_per_clip: usize,
) -> Result<Vec<FrameLabelMatrix>> {
    let path = path.as_ref();
    if !(frame_duration_s.is_finite() && frame_duration_s > 0.0) {
        return Err(Error::invalid(format!(
            "frame_duration_s must be positive, got {frame_duration_s}"
        )));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;

    let mut order: Vec<String> = Vec::new();
    let mut matrices: HashMap<String, FrameLabelMatrix> = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if idx == 0 && line == ANNOTATION_HEADER {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 4 tab-separated fields, got {}", fields.len()),
            ));
        }
        let clip_id = fields[0];
        let start: f64 = fields[1]
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad start_s {:?}", fields[1])))?;
        let end: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad end_s {:?}", fields[2])))?;
        let label = fields[3];
        if !(start.is_finite() && end.is_finite()) {
            return Err(Error::parse(path, lineno, "non-finite interval bounds"));
        }
        if start < 0.0 {
            return Err(Error::parse(path, lineno, format!("negative start_s {start}")));
        }
        if start >= end {
            return Err(Error::parse(
                path,
                lineno,
                format!("empty or negative interval: start_s {start} >= end_s {end}"),
            ));
        }
        let class_id = ontology.id_of(label).ok_or_else(|| {
            Error::parse(path, lineno, format!("unknown class label {label:?}"))
        })?;

        let matrix = matrices.entry(clip_id.to_string()).or_insert_with(|| {
            order.push(clip_id.to_string());
            FrameLabelMatrix::zeros(clip_id, frames_per_clip, ontology.n_classes())
        });
        for t in 0..frames_per_clip {
            let center = (t as f64 + 0.5) * frame_duration_s;
            if center >= start && center < end {
                matrix.labels[t][class_id] = 1;
            }
        }
    }

    Ok(order
        .into_iter()
        .map(|clip_id| matrices.remove(&clip_id).expect("clip recorded"))
        .collect())
}

/// Rasterizes one clip's events onto a frame grid by the frame-center
/// rule: frame `t` is active when its center `(t + 0.5) * frame_duration_s`
/// falls inside `[start_s, end_s)`.
pub fn rasterize_events(
    clip_id: &str,
    events: &[Event],
    ontology: &ClassOntology,
    frame_duration_s: f64,
    n_frames: usize,
) -> Result<FrameLabelMatrix> {
    if !(frame_duration_s.is_finite() && frame_duration_s > 0.0) {
        return Err(Error::invalid(format!(
            "frame_duration_s must be positive, got {frame_duration_s}"
        )));
    }
    let mut matrix = FrameLabelMatrix::zeros(clip_id, n_frames, ontology.n_classes());
    for event in events {
        let class_id = ontology.id_of(&event.class_label).ok_or_else(|| {
            Error::invalid(format!(
                "clip {clip_id}: unknown class label {:?}",
                event.class_label
            ))
        })?;
        for t in 0..n_frames {
            let center = (t as f64 + 0.5) * frame_duration_s;
            if center >= event.start_s && center < event.end_s {
                matrix.labels[t][class_id] = 1;
            }
        }
    }
    Ok(matrix)
}

/// Writes `(clip_id, events)` groups as annotation rows, one interval each.
pub fn save_annotations(path: impl AsRef<Path>, clips: &[(String, Vec<Event>)]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{ANNOTATION_HEADER}").map_err(|e| Error::io(path, e))?;
    for (clip_id, events) in clips {
        for event in events {
            writeln!(
                w,
                "{clip_id}\t{}\t{}\t{}",
                event.start_s, event.end_s, event.class_label
            )
            .map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads annotation rows back as per-clip event lists without rasterizing.
pub fn load_event_rows(path: impl AsRef<Path>) -> Result<Vec<(String, Vec<Event>)>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut order: Vec<String> = Vec::new();
    let mut by_clip: HashMap<String, Vec<Event>> = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if idx == 0 && line == ANNOTATION_HEADER {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 4 tab-separated fields, got {}", fields.len()),
            ));
        }
        let start: f64 = fields[1]
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad start_s {:?}", fields[1])))?;
        let end: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad end_s {:?}", fields[2])))?;
        if !(start.is_finite() && end.is_finite()) || start < 0.0 || start >= end {
            return Err(Error::parse(path, lineno, "bad interval bounds"));
        }
        let clip_id = fields[0].to_string();
        if !by_clip.contains_key(&clip_id) {
            order.push(clip_id.clone());
        }
        by_clip.entry(clip_id).or_default().push(Event {
            class_label: fields[3].to_string(),
            start_s: start,
            end_s: end,
        });
    }
    Ok(order
        .into_iter()
        .map(|clip_id| {
            let events = by_clip.remove(&clip_id).expect("clip recorded");
            (clip_id, events)
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Question items
// ---------------------------------------------------------------------------

/// Answer letter for a four-way multiple-choice item.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Letter {
    A,
    B,
    C,
    D,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::A, Letter::B, Letter::C, Letter::D];

    pub fn index(self) -> usize {
        match self {
            Letter::A => 0,
            Letter::B => 1,
            Letter::C => 2,
            Letter::D => 3,
        }
    }

    pub fn from_index(index: usize) -> Option<Letter> {
        Letter::ALL.get(index).copied()
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Letter::A => "A",
            Letter::B => "B",
            Letter::C => "C",
            Letter::D => "D",
        })
    }
}

impl std::str::FromStr for Letter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Letter> {
        match s {
            "A" => Ok(Letter::A),
            "B" => Ok(Letter::B),
            "C" => Ok(Letter::C),
            "D" => Ok(Letter::D),
            other => Err(Error::invalid(format!(
                "answer letter must be one of A/B/C/D, got {other:?}"
            ))),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptionSet {
    #[serde(rename = "A")]
    a: String,
    #[serde(rename = "B")]
    b: String,
    #[serde(rename = "C")]
    c: String,
    #[serde(rename = "D")]
    d: String,
}

/// The four option texts of an item, keyed `A`..`D`.
///
/// Construction enforces that all four texts are non-empty and pairwise
/// distinct, so a value of this type is always a complete option set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawOptionSet")]
pub struct OptionSet {
    #[serde(rename = "A")]
    a: String,
    #[serde(rename = "B")]
    b: String,
    #[serde(rename = "C")]
    c: String,
    #[serde(rename = "D")]
    d: String,
}

impl TryFrom<RawOptionSet> for OptionSet {
    type Error = String;

    fn try_from(raw: RawOptionSet) -> std::result::Result<Self, String> {
        OptionSet::new([raw.a, raw.b, raw.c, raw.d]).map_err(|e| e.to_string())
    }
}

impl OptionSet {
    /// Builds an option set from texts in `A`..`D` order.
    pub fn new(texts: [impl Into<String>; 4]) -> Result<Self> {
        let [a, b, c, d] = texts.map(Into::into);
        let all = [&a, &b, &c, &d];
        for (i, text) in all.iter().enumerate() {
            if text.is_empty() {
                return Err(Error::invalid(format!(
                    "option {} has empty text",
                    Letter::ALL[i]
                )));
            }
        }
        for i in 0..4 {
            for j in (i + 1)..4 {
                if all[i] == all[j] {
                    return Err(Error::invalid(format!(
                        "options {} and {} have the same text {:?}",
                        Letter::ALL[i],
                        Letter::ALL[j],
                        all[i]
                    )));
                }
            }
        }
        Ok(OptionSet { a, b, c, d })
    }

    pub fn get(&self, letter: Letter) -> &str {
        match letter {
            Letter::A => &self.a,
            Letter::B => &self.b,
            Letter::C => &self.c,
            Letter::D => &self.d,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Letter, &str)> {
        Letter::ALL.into_iter().map(move |l| (l, self.get(l)))
    }

    /// Letter of the first option whose text equals `text`, if any.
    pub fn find(&self, text: &str) -> Option<Letter> {
        Letter::ALL.into_iter().find(|&l| self.get(l) == text)
    }
}

/// Dataset part an item belongs to, mirroring a three-part benchmark layout.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(try_from = "u8", into = "u8")]
pub enum Part {
    One,
    Two,
    Three,
}

impl Part {
    pub const ALL: [Part; 3] = [Part::One, Part::Two, Part::Three];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl TryFrom<u8> for Part {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Part::One),
            2 => Ok(Part::Two),
            3 => Ok(Part::Three),
            other => Err(format!("part must be 1, 2, or 3, got {other}")),
        }
    }
}

impl From<Part> for u8 {
    fn from(p: Part) -> u8 {
        p as u8 + 1
    }
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

/// One four-way multiple-choice question grounded in a clip's events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AqaItem {
    pub item_id: String,
    pub clip_id: String,
    pub part: Part,
    pub question: String,
    pub options: OptionSet,
    pub answer_key: Letter,
    pub events: Vec<Event>,
}

impl AqaItem {
    /// Copy of the item with its event list swapped out, as done when
    /// answering from decoded rather than ground-truth events.
    pub fn with_events(&self, events: Vec<Event>) -> AqaItem {
        AqaItem {
            events,
            ..self.clone()
        }
    }
}

/// Loads question items from a line-delimited JSON file.
pub fn load_aqa_items(path: impl AsRef<Path>) -> Result<Vec<AqaItem>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut items = Vec::new();
    let mut seen = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let item: AqaItem =
            serde_json::from_str(line).map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        if item.question.trim().is_empty() {
            return Err(Error::parse(
                path,
                lineno,
                format!("item {} has an empty question", item.item_id),
            ));
        }
        for event in &item.events {
            if !(event.start_s.is_finite() && event.end_s.is_finite())
                || event.start_s < 0.0
                || event.start_s >= event.end_s
            {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!(
                        "item {}: bad event interval [{}, {})",
                        item.item_id, event.start_s, event.end_s
                    ),
                ));
            }
        }
        if let Some(prev) = seen.insert(item.item_id.clone(), lineno) {
            return Err(Error::parse(
                path,
                lineno,
                format!("duplicate item_id {:?} (first seen on line {prev})", item.item_id),
            ));
        }
        items.push(item);
    }
    Ok(items)
}

pub fn save_aqa_items(path: impl AsRef<Path>, items: &[AqaItem]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).expect("item serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
