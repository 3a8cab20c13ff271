//! Minimal self-contained SVG rendering for calibration diagnostics.

use std::fmt::Write;

use crate::calibration::{CalibrationModel, ReliabilityCurve};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;

struct Frame {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl Frame {
    /// Maps unit-square coordinates into pixel space (y grows upward).
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.x0 + x * (self.x1 - self.x0),
            self.y0 - y * (self.y0 - self.y1),
        )
    }
}

fn open_svg(title: &str) -> (String, Frame) {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(s, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        xml_escape(title)
    );
    let frame = Frame {
        x0: MARGIN,
        y0: HEIGHT - MARGIN,
        x1: WIDTH - MARGIN / 2.0,
        y1: MARGIN / 1.4,
    };
    let _ = writeln!(
        s,
        "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"black\"/>",
        frame.x0,
        frame.y1,
        frame.x1 - frame.x0,
        frame.y0 - frame.y1
    );
    (s, frame)
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axis_labels(s: &mut String, frame: &Frame, x_label: &str, y_label: &str, max: f64) {
    for i in 0..=4 {
        let v = max * i as f64 / 4.0;
        let (px, py) = frame.map(i as f64 / 4.0, 0.0);
        let _ = writeln!(
            s,
            "<text x=\"{px:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{v:.2}</text>",
            py + 16.0
        );
        let (qx, qy) = frame.map(0.0, i as f64 / 4.0);
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{v:.2}</text>",
            qx - 6.0,
            qy + 4.0
        );
    }
    let (cx, cy) = frame.map(0.5, 0.0);
    let _ = writeln!(
        s,
        "<text x=\"{cx:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
        cy + 36.0,
        xml_escape(x_label)
    );
    let (lx, ly) = frame.map(0.0, 0.5);
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{ly:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 {:.1} {ly:.1})\">{}</text>",
        lx - 38.0,
        lx - 38.0,
        xml_escape(y_label)
    );
}

fn diagonal(s: &mut String, frame: &Frame) {
    let (x0, y0) = frame.map(0.0, 0.0);
    let (x1, y1) = frame.map(1.0, 1.0);
    let _ = writeln!(
        s,
        "<line x1=\"{x0:.1}\" y1=\"{y0:.1}\" x2=\"{x1:.1}\" y2=\"{y1:.1}\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>"
    );
}

/// Reliability diagram: mean confidence vs empirical frequency per bin,
/// with the diagonal as the perfectly calibrated reference.
pub fn reliability_svg(curve: &ReliabilityCurve, title: &str) -> String {
    let (mut s, frame) = open_svg(title);
    axis_labels(&mut s, &frame, "mean predicted probability", "empirical frequency", 1.0);
    diagonal(&mut s, &frame);

    let points: Vec<(f64, f64)> = curve
        .bins
        .iter()
        .filter_map(|b| match (b.mean_confidence, b.empirical_frequency) {
            (Some(c), Some(f)) => Some((c, f)),
            _ => None,
        })
        .collect();
    if points.len() > 1 {
        let path: Vec<String> = points
            .iter()
            .enumerate()
            .map(|(i, &(c, f))| {
                let (px, py) = frame.map(c, f);
                format!("{}{px:.1} {py:.1}", if i == 0 { "M" } else { "L" })
            })
            .collect();
        let _ = writeln!(
            s,
            "<path d=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\"/>",
            path.join(" ")
        );
    }
    for &(c, f) in &points {
        let (px, py) = frame.map(c, f);
        let _ = writeln!(s, "<circle cx=\"{px:.1}\" cy=\"{py:.1}\" r=\"4\" fill=\"steelblue\"/>");
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">ECE = {:.4} (n = {})</text>",
        frame.x0 + 10.0,
        frame.y1 + 18.0,
        curve.ece,
        curve.n
    );
    s.push_str("</svg>\n");
    s
}

/// Per-class Cllr before vs after calibration; points below the diagonal
/// improved.
pub fn cllr_scatter_svg(model: &CalibrationModel, title: &str) -> String {
    let (mut s, frame) = open_svg(title);
    let pairs: Vec<(f64, f64)> = model
        .classes
        .iter()
        .filter_map(|c| match (c.cllr_before, c.cllr_after) {
            (Some(b), Some(a)) => Some((b, a)),
            _ => None,
        })
        .collect();
    let max = pairs
        .iter()
        .flat_map(|&(b, a)| [b, a])
        .fold(1.0_f64, f64::max)
        * 1.05;
    axis_labels(&mut s, &frame, "Cllr before calibration (bits)", "Cllr after calibration (bits)", max);
    diagonal(&mut s, &frame);
    for &(before, after) in &pairs {
        let (px, py) = frame.map(before / max, after / max);
        let _ = writeln!(s, "<circle cx=\"{px:.1}\" cy=\"{py:.1}\" r=\"4\" fill=\"firebrick\" fill-opacity=\"0.7\"/>");
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{} classes</text>",
        frame.x0 + 10.0,
        frame.y1 + 18.0,
        pairs.len()
    );
    s.push_str("</svg>\n");
    s
}
