//! Frame posteriors to timestamped events.
//!
//! Each class column is median-filtered, binarized against a threshold, and
//! maximal active runs become events: a run covering frames `i..=j` spans
//! `[i * dt, (j + 1) * dt)` seconds. Events serialize as
//! `<label>_<start>_<end>` with times rounded half-up to two decimals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ClassOntology, FrameScoreMatrix};

/// One decoded or annotated sound event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub class_label: String,
    pub start_s: f64,
    pub end_s: f64,
}

impl Event {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Decoder settings.
///
/// `frame_duration_s` is the grid step used by helpers that work on bare
/// frame sequences; [`decode_events`] always takes the step from the score
/// matrix itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoderConfig {
    pub threshold: f64,
    pub median_window: usize,
    pub frame_duration_s: f64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            threshold: 0.1,
            median_window: 5,
            frame_duration_s: 0.04,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.median_window == 0 || self.median_window.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "median window must be odd and positive, got {}",
                self.median_window
            )));
        }
        if !(self.threshold.is_finite() && (0.0..=1.0).contains(&self.threshold)) {
            return Err(Error::invalid(format!(
                "threshold must lie in [0, 1], got {}",
                self.threshold
            )));
        }
        if !(self.frame_duration_s.is_finite() && self.frame_duration_s > 0.0) {
            return Err(Error::invalid(format!(
                "frame_duration_s must be positive, got {}",
                self.frame_duration_s
            )));
        }
        Ok(())
    }
}

/// Sliding-window median with edge replication.
///
/// The window must be odd; the ends of the sequence are padded by repeating
/// the first and last values, so a window of 1 or a constant input returns
/// the input unchanged.
pub fn median_filter(values: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "median window must be odd and positive, got {window}"
        )));
    }
    if values.len() <= 1 || window == 1 {
        return Ok(values.to_vec());
    }
    if window > 2 * values.len() + 1 {
        return Err(Error::invalid(format!(
            "median window {window} exceeds 2 * len + 1 = {}",
            2 * values.len() + 1
        )));
    }
    let half = window / 2;
    let last = values.len() - 1;
    let mut scratch = Vec::with_capacity(window);
    let mut out = Vec::with_capacity(values.len());
    for i in 0..values.len() {
        scratch.clear();
        for k in 0..window {
            // Edge replication: indices beyond either end clamp to it.
            let idx = (i + k).saturating_sub(half).min(last);
            scratch.push(values[idx]);
        }
        scratch.sort_unstable_by(f64::total_cmp);
        out.push(scratch[half]);
    }
    Ok(out)
}

/// Converts one class's active-frame mask into events on the time grid.
pub fn events_from_active(active: &[bool], class_label: &str, frame_duration_s: f64) -> Vec<Event> {
    let mut events = Vec::new();
    let mut run_start: Option<usize> = None;
    for (t, &on) in active.iter().enumerate() {
        match (on, run_start) {
            (true, None) => run_start = Some(t),
            (false, Some(i)) => {
                events.push(Event {
                    class_label: class_label.to_string(),
                    start_s: i as f64 * frame_duration_s,
                    end_s: t as f64 * frame_duration_s,
                });
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(i) = run_start {
        events.push(Event {
            class_label: class_label.to_string(),
            start_s: i as f64 * frame_duration_s,
            end_s: active.len() as f64 * frame_duration_s,
        });
    }
    events
}

/// Decodes a score matrix into a chronologically sorted event list.
///
/// Per class: median filter, then strictly-greater-than-threshold
/// binarization, then maximal runs. The output is sorted by
/// `(start_s, class_label)`; an empty or never-active matrix yields no
/// events.
pub fn decode_events(
    scores: &FrameScoreMatrix,
    ontology: &ClassOntology,
    config: &DecoderConfig,
) -> Result<Vec<Event>> {
    config.validate()?;
    scores.validate(ontology.n_classes())?;
    let dt = scores.frame_duration_s;
    let t_len = scores.n_frames();
    let mut events = Vec::new();
    let mut column = Vec::with_capacity(t_len);
    for ci in 0..ontology.n_classes() {
        column.clear();
        column.extend(scores.posteriors.iter().map(|row| row[ci]));
        let filtered = median_filter(&column, config.median_window)?;
        let active: Vec<bool> = filtered.iter().map(|&p| p > config.threshold).collect();
        events.extend(events_from_active(&active, ontology.label(ci), dt));
    }
    sort_events(&mut events);
    Ok(events)
}

/// Sorts events by start time, breaking ties by label then end time.
pub fn sort_events(events: &mut [Event]) {
    events.sort_by(|x, y| {
        x.start_s
            .total_cmp(&y.start_s)
            .then_with(|| x.class_label.cmp(&y.class_label))
            .then_with(|| x.end_s.total_cmp(&y.end_s))
    });
}

/// Seconds rendered with two decimals, rounding half away from zero.
fn format_seconds(x: f64) -> String {
    // Half-up on the value the float actually holds. The rounded product can
    // land exactly on a half cent even when x * 100 is not one, so recover
    // the exact residual with a fused multiply-add before deciding ties.
    let product = x * 100.0;
    let residual = x.mul_add(100.0, -product);
    let base = product.floor();
    let round_up = match (product - base).partial_cmp(&0.5) {
        Some(std::cmp::Ordering::Greater) => true,
        Some(std::cmp::Ordering::Equal) => residual >= 0.0,
        _ => false,
    };
    let cents = base as i64 + i64::from(round_up);
    format!("{}.{:02}", cents / 100, (cents % 100).abs())
}

/// Renders an event as `<label>_<start>_<end>` with two-decimal times.
pub fn serialize_event(event: &Event) -> String {
    format!(
        "{}_{}_{}",
        event.class_label,
        format_seconds(event.start_s),
        format_seconds(event.end_s)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ontology(labels: &[&str]) -> ClassOntology {
        ClassOntology::from_labels(labels.iter().copied()).unwrap()
    }

    fn matrix(clip: &str, dt: f64, cols: Vec<Vec<f64>>) -> FrameScoreMatrix {
        // cols is class-major for test readability; transpose to row-major.
        let t_len = cols[0].len();
        let posteriors = (0..t_len)
            .map(|t| cols.iter().map(|col| col[t]).collect())
            .collect();
        FrameScoreMatrix {
            clip_id: clip.into(),
            frame_duration_s: dt,
            posteriors,
        }
    }

    /// Reference median filter: build each window by explicit edge
    /// replication, sort, take the middle.
    fn median_oracle(values: &[f64], window: usize) -> Vec<f64> {
        let half = window as isize / 2;
        (0..values.len() as isize)
            .map(|i| {
                let mut w: Vec<f64> = (i - half..=i + half)
                    .map(|j| values[j.clamp(0, values.len() as isize - 1) as usize])
                    .collect();
                w.sort_unstable_by(f64::total_cmp);
                w[window / 2]
            })
            .collect()
    }

    #[test]
    fn median_window_one_is_identity() {
        let v = vec![0.3, 0.9, 0.1, 0.5];
        assert_eq!(median_filter(&v, 1).unwrap(), v);
    }

    #[test]
    fn median_constant_input_unchanged() {
        let v = vec![0.42; 9];
        assert_eq!(median_filter(&v, 5).unwrap(), v);
    }

    #[test]
    fn median_removes_single_frame_blip() {
        let v = vec![0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0];
        let got = median_filter(&v, 3).unwrap();
        assert_eq!(got, vec![0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn median_rejects_even_window() {
        assert!(median_filter(&[0.1, 0.2], 2).is_err());
        assert!(median_filter(&[0.1, 0.2], 0).is_err());
    }

    #[test]
    fn median_rejects_oversized_window() {
        assert!(median_filter(&[0.1, 0.2], 7).is_err());
    }

    #[test]
    fn median_matches_oracle_exhaustively() {
        // All binary sequences up to length 7, windows 1/3/5.
        for len in 1..=7usize {
            for bits in 0..(1u32 << len) {
                let v: Vec<f64> = (0..len).map(|i| ((bits >> i) & 1) as f64).collect();
                for window in [1, 3, 5] {
                    if window > 2 * len + 1 {
                        continue;
                    }
                    assert_eq!(
                        median_filter(&v, window).unwrap(),
                        median_oracle(&v, window),
                        "len {len} bits {bits:b} window {window}"
                    );
                }
            }
        }
    }

    #[test]
    fn decode_single_event_span() {
        let m = matrix("c1", 0.04, vec![vec![0.05, 0.5, 0.6, 0.05]]);
        let cfg = DecoderConfig {
            threshold: 0.1,
            median_window: 1,
            frame_duration_s: 0.04,
        };
        let events = decode_events(&m, &ontology(&["Dog"]), &cfg).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].class_label, "Dog");
        approx::assert_abs_diff_eq!(events[0].start_s, 0.04, epsilon = 1e-12);
        approx::assert_abs_diff_eq!(events[0].end_s, 0.12, epsilon = 1e-12);
    }

    #[test]
    fn decode_all_below_threshold_is_empty() {
        let m = matrix("c1", 0.04, vec![vec![0.01; 6]]);
        let events = decode_events(&m, &ontology(&["Dog"]), &DecoderConfig::default()).unwrap();
        assert!(events.is_empty());
    }

    #[test]
    fn decode_always_active_spans_whole_clip() {
        let m = matrix("c1", 0.04, vec![vec![0.99; 6]]);
        let events = decode_events(&m, &ontology(&["Dog"]), &DecoderConfig::default()).unwrap();
        assert_eq!(events.len(), 1);
        approx::assert_abs_diff_eq!(events[0].start_s, 0.0);
        approx::assert_abs_diff_eq!(events[0].end_s, 0.24, epsilon = 1e-12);
    }

    #[test]
    fn decode_threshold_is_strict() {
        let m = matrix("c1", 0.04, vec![vec![0.1, 0.1]]);
        let cfg = DecoderConfig {
            threshold: 0.1,
            median_window: 1,
            frame_duration_s: 0.04,
        };
        assert!(decode_events(&m, &ontology(&["Dog"]), &cfg).unwrap().is_empty());
    }

    #[test]
    fn decode_sorts_across_classes() {
        let m = matrix(
            "c1",
            0.04,
            vec![vec![0.0, 0.9, 0.0, 0.9], vec![0.9, 0.0, 0.0, 0.9]],
        );
        let cfg = DecoderConfig {
            threshold: 0.1,
            median_window: 1,
            frame_duration_s: 0.04,
        };
        let events = decode_events(&m, &ontology(&["B", "A"]), &cfg).unwrap();
        let labels: Vec<&str> = events.iter().map(|e| e.class_label.as_str()).collect();
        assert_eq!(labels, vec!["A", "B", "A", "B"]);
        let starts: Vec<f64> = events.iter().map(|e| e.start_s).collect();
        assert!(starts.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn decode_empty_matrix_is_empty() {
        let m = FrameScoreMatrix {
            clip_id: "c1".into(),
            frame_duration_s: 0.04,
            posteriors: vec![],
        };
        let events = decode_events(&m, &ontology(&["Dog"]), &DecoderConfig::default()).unwrap();
        assert!(events.is_empty());
    }

    #[test]
    fn serialize_rounds_half_up() {
        let e = Event {
            class_label: "Dog".into(),
            start_s: 1.2,
            end_s: 3.444,
        };
        assert_eq!(serialize_event(&e), "Dog_1.20_3.44");
        let f = Event {
            class_label: "Dog".into(),
            start_s: 0.125,
            end_s: 2.675,
        };
        // 0.125 carries exactly a half cent and rounds up.
        assert_eq!(serialize_event(&f), "Dog_0.13_2.67");
    }

    #[test]
    fn serialize_keeps_label_verbatim() {
        let e = Event {
            class_label: "Male speech, man speaking".into(),
            start_s: 0.0,
            end_s: 0.4,
        };
        assert_eq!(serialize_event(&e), "Male speech, man speaking_0.00_0.40");
    }

    proptest! {
        #[test]
        fn prop_events_are_disjoint_and_ordered(
            ps in proptest::collection::vec(0.0..=1.0_f64, 0..40),
            window in prop_oneof![Just(1usize), Just(3), Just(5)],
            threshold in 0.05..=0.5_f64,
        ) {
            let m = matrix("c1", 0.04, vec![ps]);
            let cfg = DecoderConfig { threshold, median_window: window, frame_duration_s: 0.04 };
            if let Ok(events) = decode_events(&m, &ontology(&["Dog"]), &cfg) {
                for e in &events {
                    prop_assert!(e.end_s > e.start_s);
                }
                for w in events.windows(2) {
                    // Single class: consecutive events are separated by at
                    // least one inactive frame.
                    prop_assert!(w[1].start_s >= w[0].end_s + 0.04 - 1e-9);
                }
            }
        }

        #[test]
        fn prop_higher_threshold_never_extends_activity(
            ps in proptest::collection::vec(0.0..=1.0_f64, 1..40),
        ) {
            let m = matrix("c1", 0.04, vec![ps]);
            let ont = ontology(&["Dog"]);
            let total = |thr: f64| -> f64 {
                let cfg = DecoderConfig { threshold: thr, median_window: 3, frame_duration_s: 0.04 };
                decode_events(&m, &ont, &cfg)
                    .unwrap()
                    .iter()
                    .map(Event::duration_s)
                    .sum()
            };
            prop_assert!(total(0.3) <= total(0.1) + 1e-9);
        }

        #[test]
        fn prop_serialized_times_have_two_decimals(
            start in 0.0..100.0_f64,
            len in 0.01..10.0_f64,
        ) {
            let e = Event { class_label: "X".into(), start_s: start, end_s: start + len };
            let s = serialize_event(&e);
            let parts: Vec<&str> = s.split('_').collect();
            prop_assert_eq!(parts.len(), 3);
            for time in &parts[1..] {
                let dot = time.find('.').unwrap();
                prop_assert_eq!(time.len() - dot - 1, 2);
            }
        }
    }
}
