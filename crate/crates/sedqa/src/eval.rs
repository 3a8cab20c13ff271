//! Accuracy reporting over answered question items.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{AqaItem, Letter, Part};

/// One item's predicted answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prediction {
    pub item_id: String,
    pub prediction: Letter,
}

/// Writes predictions as line-delimited JSON.
pub fn save_predictions(path: impl AsRef<Path>, predictions: &[Prediction]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for p in predictions {
        let line = serde_json::to_string(p).map_err(|e| Error::invalid(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads line-delimited predictions, rejecting duplicate item ids.
pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out: Vec<Prediction> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let p: Prediction =
            serde_json::from_str(line).map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        if let Some(first) = seen.insert(p.item_id.clone(), lineno) {
            return Err(Error::parse(
                path,
                lineno,
                format!("duplicate item_id {:?} (first seen on line {first})", p.item_id),
            ));
        }
        out.push(p);
    }
    Ok(out)
}

/// Index predictions by item id, rejecting duplicates.
pub fn prediction_map(predictions: &[Prediction]) -> Result<HashMap<String, Letter>> {
    let mut map = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if map.insert(p.item_id.clone(), p.prediction).is_some() {
            return Err(Error::invalid(format!(
                "duplicate prediction for item {:?}",
                p.item_id
            )));
        }
    }
    Ok(map)
}

/// Counts for one question part.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartStats {
    pub n_items: usize,
    pub n_correct: usize,
}

impl PartStats {
    /// Fraction correct; None when the part has no items.
    pub fn accuracy(&self) -> Option<f64> {
        (self.n_items > 0).then(|| self.n_correct as f64 / self.n_items as f64)
    }
}

/// Accuracy report over the three question parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub parts: [PartStats; 3],
    /// Letter confusion, indexed `[answer_key][prediction]`.
    pub confusion: [[usize; 4]; 4],
    pub n_items: usize,
    /// Sum over parts of (part share of items) times part accuracy.
    pub overall_weighted: f64,
    /// Plain mean of the accuracies of non-empty parts.
    pub overall_unweighted: f64,
}

/// Scores predictions against items. Every item must have a prediction;
/// extra predictions for unknown items are ignored.
pub fn evaluate(items: &[AqaItem], predictions: &HashMap<String, Letter>) -> Result<EvalReport> {
    if items.is_empty() {
        return Err(Error::invalid("cannot evaluate an empty item list"));
    }
    let mut parts = [PartStats::default(); 3];
    let mut confusion = [[0usize; 4]; 4];
    for item in items {
        let &predicted = predictions
            .get(&item.item_id)
            .ok_or_else(|| Error::MissingPrediction(item.item_id.clone()))?;
        let stats = &mut parts[item.part.index()];
        stats.n_items += 1;
        if predicted == item.answer_key {
            stats.n_correct += 1;
        }
        confusion[item.answer_key.index()][predicted.index()] += 1;
    }

    let n_items = items.len();
    let mut weighted = 0.0;
    let mut acc_sum = 0.0;
    let mut non_empty = 0usize;
    for stats in &parts {
        if let Some(acc) = stats.accuracy() {
            weighted += stats.n_items as f64 / n_items as f64 * acc;
            acc_sum += acc;
            non_empty += 1;
        }
    }
    Ok(EvalReport {
        parts,
        confusion,
        n_items,
        overall_weighted: weighted,
        overall_unweighted: acc_sum / non_empty as f64,
    })
}

impl EvalReport {
    /// CSV rendering: `metric,value` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        for (i, stats) in self.parts.iter().enumerate() {
            let p = i + 1;
            out.push_str(&format!("part{p}_n,{}\n", stats.n_items));
            out.push_str(&format!("part{p}_correct,{}\n", stats.n_correct));
            match stats.accuracy() {
                Some(acc) => out.push_str(&format!("part{p}_accuracy,{acc}\n")),
                None => out.push_str(&format!("part{p}_accuracy,\n")),
            }
        }
        out.push_str(&format!("n_items,{}\n", self.n_items));
        out.push_str(&format!("overall_weighted,{}\n", self.overall_weighted));
        out.push_str(&format!("overall_unweighted,{}\n", self.overall_unweighted));
        for (ti, row) in self.confusion.iter().enumerate() {
            for (pi, &count) in row.iter().enumerate() {
                out.push_str(&format!(
                    "confusion_{}_{},{count}\n",
                    Letter::ALL[ti],
                    Letter::ALL[pi]
                ));
            }
        }
        out
    }

    pub fn part(&self, part: Part) -> &PartStats {
        &self.parts[part.index()]
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "part        items  correct  accuracy")?;
        for (i, stats) in self.parts.iter().enumerate() {
            let acc = match stats.accuracy() {
                Some(a) => format!("{a:.4}"),
                None => "-".to_string(),
            };
            writeln!(f, "{:<11} {:>5}  {:>7}  {acc:>8}", i + 1, stats.n_items, stats.n_correct)?;
        }
        writeln!(f, "weighted    {:>5}           {:>8.4}", self.n_items, self.overall_weighted)?;
        writeln!(f, "unweighted                  {:>8.4}", self.overall_unweighted)?;
        writeln!(f)?;
        writeln!(f, "confusion (rows = answer key, columns = prediction)")?;
        writeln!(f, "     A      B      C      D")?;
        for (ti, row) in self.confusion.iter().enumerate() {
            writeln!(
                f,
                "{}  {:>5}  {:>5}  {:>5}  {:>5}",
                Letter::ALL[ti], row[0], row[1], row[2], row[3]
            )?;
        }
        Ok(())
    }
}
