//! Minimal SVG polyline plot for distance sequences.
//!
//! No plotting dependency: the output is a fixed-size chart with the
//! distance polyline, a dashed threshold line, and a marker on every
//! flagged index. Coordinates are formatted with fixed precision so the
//! bytes are stable across runs.

use std::collections::BTreeSet;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN_LEFT: f64 = 50.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 40.0;

fn x_of(i: usize, n: usize) -> f64 {
    let span = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    if n <= 1 {
        MARGIN_LEFT + span / 2.0
    } else {
        MARGIN_LEFT + span * i as f64 / (n - 1) as f64
    }
}

fn y_of(v: f64, max: f64) -> f64 {
    let span = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    HEIGHT - MARGIN_BOTTOM - span * (v / max)
}

/// Renders the distance sequence with its flag threshold.
pub fn distance_plot(values: &[f64], threshold: f64, flagged: &BTreeSet<usize>) -> String {
    let n = values.len();
    let max = values.iter().copied().fold(threshold, f64::max).max(1e-12);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{:.4}\" y1=\"{:.4}\" x2=\"{:.4}\" y2=\"{:.4}\" stroke=\"black\" stroke-width=\"1\"/>\n",
        MARGIN_LEFT,
        HEIGHT - MARGIN_BOTTOM,
        WIDTH - MARGIN_RIGHT,
        HEIGHT - MARGIN_BOTTOM
    ));
    svg.push_str(&format!(
        "<line x1=\"{:.4}\" y1=\"{:.4}\" x2=\"{:.4}\" y2=\"{:.4}\" stroke=\"black\" stroke-width=\"1\"/>\n",
        MARGIN_LEFT,
        MARGIN_TOP,
        MARGIN_LEFT,
        HEIGHT - MARGIN_BOTTOM
    ));
    // Distance polyline.
    let points: Vec<String> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| format!("{:.4},{:.4}", x_of(i, n), y_of(v, max)))
        .collect();
    svg.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"2\" points=\"{}\"/>\n",
        points.join(" ")
    ));
    // Threshold line.
    let ty = y_of(threshold, max);
    svg.push_str(&format!(
        "<line x1=\"{:.4}\" y1=\"{ty:.4}\" x2=\"{:.4}\" y2=\"{ty:.4}\" stroke=\"#c23b22\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>\n",
        MARGIN_LEFT,
        WIDTH - MARGIN_RIGHT
    ));
    // Flagged markers.
    for &i in flagged {
        if i < n {
            svg.push_str(&format!(
                "<circle cx=\"{:.4}\" cy=\"{:.4}\" r=\"5\" fill=\"none\" stroke=\"#c23b22\" stroke-width=\"2\"/>\n",
                x_of(i, n),
                y_of(values[i], max)
            ));
        }
    }
    // Index ticks.
    for i in 0..n {
        svg.push_str(&format!(
            "<text x=\"{:.4}\" y=\"{:.4}\" font-size=\"11\" text-anchor=\"middle\">{i}</text>\n",
            x_of(i, n),
            HEIGHT - MARGIN_BOTTOM + 16.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.4}\" y=\"{:.4}\" font-size=\"11\" text-anchor=\"start\">max {max:.6}</text>\n",
        MARGIN_LEFT + 4.0,
        MARGIN_TOP + 4.0
    ));
    svg.push_str("</svg>\n");
    svg
}
