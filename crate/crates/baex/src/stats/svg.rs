//! SVG rank diagram: a horizontal average-rank axis with method labels and
//! thick bars connecting cliques of methods with no significant difference.

use super::CdSummary;

const WIDTH: f64 = 720.0;
const AXIS_LEFT: f64 = 60.0;
const AXIS_RIGHT: f64 = 660.0;
const AXIS_Y: f64 = 50.0;
const LABEL_STEP: f64 = 22.0;

fn esc(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn rank_diagram_svg(summary: &CdSummary) -> String {
    let k = summary.method_names.len();
    let rank_to_x = |rank: f64| {
        if k <= 1 {
            (AXIS_LEFT + AXIS_RIGHT) / 2.0
        } else {
            AXIS_LEFT + (rank - 1.0) / (k as f64 - 1.0) * (AXIS_RIGHT - AXIS_LEFT)
        }
    };

    let label_rows = k as f64;
    let clique_rows = summary.cliques.len() as f64;
    let height = AXIS_Y + 20.0 + clique_rows * 10.0 + label_rows * LABEL_STEP + 60.0;

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {WIDTH} {height:.0}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    s.push_str(&format!(
        "<text x=\"{AXIS_LEFT}\" y=\"20\">average rank (1 = best); Friedman p = {:.4}{}</text>\n",
        summary.friedman_p,
        if summary.significant {
            ""
        } else {
            " — no significant differences"
        }
    ));

    // axis with integer ticks
    s.push_str(&format!(
        "<line x1=\"{AXIS_LEFT}\" y1=\"{AXIS_Y}\" x2=\"{AXIS_RIGHT}\" y2=\"{AXIS_Y}\" \
         stroke=\"black\"/>\n"
    ));
    for tick in 1..=k {
        let x = rank_to_x(tick as f64);
        s.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{}\" x2=\"{x:.1}\" y2=\"{}\" stroke=\"black\"/>\n",
            AXIS_Y - 4.0,
            AXIS_Y + 4.0
        ));
        s.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\">{tick}</text>\n",
            AXIS_Y - 8.0
        ));
    }

    // clique bars just below the axis
    let mut bar_y = AXIS_Y + 10.0;
    for clique in &summary.cliques {
        if clique.len() < 2 {
            continue;
        }
        let lo = clique
            .iter()
            .map(|&m| summary.average_ranks[m])
            .fold(f64::INFINITY, f64::min);
        let hi = clique
            .iter()
            .map(|&m| summary.average_ranks[m])
            .fold(f64::NEG_INFINITY, f64::max);
        s.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{bar_y:.1}\" x2=\"{:.1}\" y2=\"{bar_y:.1}\" \
             stroke=\"black\" stroke-width=\"5\"/>\n",
            rank_to_x(lo),
            rank_to_x(hi)
        ));
        bar_y += 10.0;
    }

    // method labels with leader lines, best first
    let mut label_y = bar_y + 24.0;
    for &m in &summary.order {
        let rank = summary.average_ranks[m];
        let x = rank_to_x(rank);
        s.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{AXIS_Y}\" x2=\"{x:.1}\" y2=\"{:.1}\" \
             stroke=\"gray\" stroke-dasharray=\"2,3\"/>\n",
            label_y - 10.0
        ));
        s.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{label_y:.1}\" text-anchor=\"middle\">{} ({rank:.2})</text>\n",
            esc(&summary.method_names[m])
        ));
        label_y += LABEL_STEP;
    }

    s.push_str("</svg>\n");
    s
}
