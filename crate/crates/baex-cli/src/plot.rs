//! Minimal SVG plotting: line plots and step plots with axes, ticks, a
//! legend, optional vertical marker and annotation.

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: String,
    pub dashed: bool,
}

pub const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 48.0;

fn esc(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn of(values: impl Iterator<Item = f64>) -> Range {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Range { lo: 0.0, hi: 1.0 };
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        Range { lo, hi }
    }

    fn to_unit(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let magnitude = v.abs();
    if (1e-3..1e4).contains(&magnitude) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

/// Renders a line plot of the given series.
pub fn line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    vline: Option<f64>,
    annotation: Option<&str>,
) -> String {
    let x_range = Range::of(
        series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.0))
            .chain(vline),
    );
    let y_range = Range::of(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| MARGIN_LEFT + x_range.to_unit(x) * plot_w;
    let py = |y: f64| MARGIN_TOP + (1.0 - y_range.to_unit(y)) * plot_h;

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"20\" font-size=\"14\">{}</text>\n",
        MARGIN_LEFT,
        esc(title)
    ));

    // frame
    s.push_str(&format!(
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"black\"/>\n"
    ));

    // ticks
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x_range.lo + f * (x_range.hi - x_range.lo);
        let yv = y_range.lo + f * (y_range.hi - y_range.lo);
        let x = MARGIN_LEFT + f * plot_w;
        let y = MARGIN_TOP + (1.0 - f) * plot_h;
        s.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
            MARGIN_TOP + plot_h,
            MARGIN_TOP + plot_h + 4.0
        ));
        s.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_TOP + plot_h + 18.0,
            tick_label(xv)
        ));
        s.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{MARGIN_LEFT}\" y2=\"{y:.1}\" stroke=\"black\"/>\n",
            MARGIN_LEFT - 4.0
        ));
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT - 8.0,
            y + 4.0,
            tick_label(yv)
        ));
    }

    // axis labels
    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0,
        esc(x_label)
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        esc(y_label)
    ));

    if let Some(x) = vline {
        let xp = px(x);
        s.push_str(&format!(
            "<line x1=\"{xp:.1}\" y1=\"{MARGIN_TOP}\" x2=\"{xp:.1}\" y2=\"{:.1}\" \
             stroke=\"black\" stroke-width=\"3\"/>\n",
            MARGIN_TOP + plot_h
        ));
    }

    for series in series {
        if series.points.is_empty() {
            continue;
        }
        let points: Vec<String> = series
            .points
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        let dash = if series.dashed {
            " stroke-dasharray=\"5,4\""
        } else {
            ""
        };
        s.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{dash}/>\n",
            points.join(" "),
            series.color
        ));
    }

    // legend
    let mut ly = MARGIN_TOP + 14.0;
    for series in series {
        let dash = if series.dashed {
            " stroke-dasharray=\"5,4\""
        } else {
            ""
        };
        s.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"{}\" \
             stroke-width=\"2\"{dash}/>\n",
            MARGIN_LEFT + 10.0,
            ly - 4.0,
            MARGIN_LEFT + 34.0,
            ly - 4.0,
            series.color
        ));
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{ly:.1}\">{}</text>\n",
            MARGIN_LEFT + 40.0,
            esc(&series.label)
        ));
        ly += 16.0;
    }

    if let Some(note) = annotation {
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT + plot_w - 8.0,
            MARGIN_TOP + 16.0,
            esc(note)
        ));
    }

    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_valid_svg_shell() {
        let series = [Series {
            label: "curve".into(),
            points: vec![(0.0, 1.0), (1.0, 2.0), (2.0, 0.5)],
            color: PALETTE[0].into(),
            dashed: false,
        }];
        let svg = line_plot("title", "x", "y", &series, Some(1.0), Some("note"));
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("note"));
    }

    #[test]
    fn degenerate_range_does_not_panic() {
        let series = [Series {
            label: "flat".into(),
            points: vec![(0.0, 1.0), (1.0, 1.0)],
            color: PALETTE[1].into(),
            dashed: true,
        }];
        let svg = line_plot("t", "x", "y", &series, None, None);
        assert!(svg.contains("polyline"));
    }
}
