//! Minimal deterministic SVG plotting. Every builder returns the complete
//! SVG document as a string; numbers are formatted with fixed precision so
//! identical inputs yield byte-identical output.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

const PALETTE: [&str; 6] = ["#1f6fb2", "#d1495b", "#3a8a5f", "#8a5fb2", "#c88a2a", "#4a4a4a"];

fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.3}")
    } else {
        "0.000".to_string()
    }
}

fn esc(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Pick a short human-readable label for a tick value.
fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if a >= 1e4 || a < 1e-3 {
        format!("{v:.1e}")
    } else if a >= 10.0 {
        format!("{v:.0}")
    } else if a >= 1.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

/// Linear map from data space to pixel space.
struct Scale {
    min: f64,
    max: f64,
    lo_px: f64,
    hi_px: f64,
    log: bool,
}

impl Scale {
    fn new(min: f64, max: f64, lo_px: f64, hi_px: f64, log: bool) -> Scale {
        let (min, max) = if log {
            (min.max(1e-300).ln(), max.max(1e-300).ln())
        } else {
            (min, max)
        };
        let (min, max) = if (max - min).abs() < 1e-300 {
            (min - 0.5, max + 0.5)
        } else {
            (min, max)
        };
        Scale { min, max, lo_px, hi_px, log }
    }

    fn px(&self, v: f64) -> f64 {
        let v = if self.log { v.max(1e-300).ln() } else { v };
        let t = (v - self.min) / (self.max - self.min);
        self.lo_px + t * (self.hi_px - self.lo_px)
    }

    fn ticks(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                let v = self.min + t * (self.max - self.min);
                if self.log {
                    v.exp()
                } else {
                    v
                }
            })
            .collect()
    }
}

struct Doc {
    body: String,
}

impl Doc {
    fn new(title: &str) -> Doc {
        let mut body = String::new();
        body.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"Helvetica, Arial, sans-serif\">\n"
        ));
        body.push_str(&format!(
            "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>\n"
        ));
        body.push_str(&format!(
            "<text x=\"{}\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n",
            WIDTH / 2.0,
            esc(title)
        ));
        Doc { body }
    }

    fn axes(&mut self, x: &Scale, y: &Scale, x_label: &str, y_label: &str) {
        let (x0, x1) = (MARGIN_L, WIDTH - MARGIN_R);
        let (y0, y1) = (HEIGHT - MARGIN_B, MARGIN_T);
        self.body.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333\" stroke-width=\"1\"/>\n",
            fmt(x0), fmt(y0), fmt(x1), fmt(y0)
        ));
        self.body.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333\" stroke-width=\"1\"/>\n",
            fmt(x0), fmt(y0), fmt(x0), fmt(y1)
        ));
        for t in x.ticks(5) {
            let px = x.px(t);
            self.body.push_str(&format!(
                "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#333\"/>\n",
                fmt(px), fmt(y0), fmt(y0 + 4.0)
            ));
            self.body.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
                fmt(px), fmt(y0 + 18.0), tick_label(t)
            ));
        }
        for t in y.ticks(5) {
            let py = y.px(t);
            self.body.push_str(&format!(
                "<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"#333\"/>\n",
                fmt(py), fmt(x0 - 4.0), fmt(x0)
            ));
            self.body.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
                fmt(x0 - 8.0), fmt(py + 4.0), tick_label(t)
            ));
        }
        self.body.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            (x0 + x1) / 2.0,
            HEIGHT - 12.0,
            esc(x_label)
        ));
        self.body.push_str(&format!(
            "<text x=\"16\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" \
             transform=\"rotate(-90 16 {})\">{}</text>\n",
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            esc(y_label)
        ));
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn plot_area() -> (f64, f64, f64, f64) {
    (MARGIN_L, WIDTH - MARGIN_R, HEIGHT - MARGIN_B, MARGIN_T)
}

/// One named line in a line plot.
pub struct Series<'a> {
    pub name: &'a str,
    pub points: &'a [(f64, f64)],
}

/// Multi-series line plot with an optional logarithmic y axis.
pub fn line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series<'_>],
    log_y: bool,
) -> String {
    let pts: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (x_min, x_max, y_min, y_max) = extent(&pts);
    let (px0, px1, py0, py1) = plot_area();
    let xs = Scale::new(x_min, x_max, px0, px1, false);
    let ys = Scale::new(y_min, y_max, py0, py1, log_y);
    let mut doc = Doc::new(title);
    doc.axes(&xs, &ys, x_label, y_label);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{},{}", fmt(xs.px(x)), fmt(ys.px(y))))
            .collect();
        doc.body.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            path.join(" ")
        ));
        doc.body.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{color}\">{}</text>\n",
            fmt(px1 - 150.0),
            fmt(py1 + 14.0 + 14.0 * i as f64),
            esc(s.name)
        ));
    }
    doc.finish()
}

/// Mean with symmetric error bars per x position, log y axis by default for
/// validation errors.
pub fn errorbar_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    points: &[(f64, f64, f64)],
    log_y: bool,
) -> String {
    let lo = points
        .iter()
        .map(|&(_, m, s)| if log_y { (m - s).max(m * 0.1).max(1e-300) } else { m - s })
        .fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|&(_, m, s)| m + s).fold(f64::NEG_INFINITY, f64::max);
    let x_min = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x_max = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let (px0, px1, py0, py1) = plot_area();
    let xs = Scale::new(x_min - 0.5, x_max + 0.5, px0, px1, false);
    let ys = Scale::new(lo, hi, py0, py1, log_y);
    let mut doc = Doc::new(title);
    doc.axes(&xs, &ys, x_label, y_label);
    let color = PALETTE[0];
    let path: Vec<String> = points
        .iter()
        .map(|&(x, m, _)| format!("{},{}", fmt(xs.px(x)), fmt(ys.px(m))))
        .collect();
    doc.body.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
        path.join(" ")
    ));
    for &(x, m, s) in points {
        let cx = xs.px(x);
        let top = ys.px(if log_y { (m + s).max(1e-300) } else { m + s });
        let bot = ys.px(if log_y { (m - s).max(m * 0.1).max(1e-300) } else { m - s });
        doc.body.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"{color}\"/>\n",
            fmt(cx), fmt(top), fmt(bot)
        ));
        for py in [top, bot] {
            doc.body.push_str(&format!(
                "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{color}\"/>\n",
                fmt(cx - 4.0), fmt(py), fmt(cx + 4.0)
            ));
        }
        doc.body.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\"/>\n",
            fmt(cx), fmt(ys.px(m))
        ));
    }
    doc.finish()
}

/// Blue-to-red heatmap of a small matrix with row and column labels and cell
/// value annotations.
pub fn heatmap(
    title: &str,
    row_labels: &[String],
    col_labels: &[String],
    values: &[Vec<f64>],
) -> String {
    let rows = row_labels.len();
    let cols = col_labels.len();
    let (px0, px1, py0, py1) = plot_area();
    let cell_w = (px1 - px0) / cols.max(1) as f64;
    let cell_h = (py0 - py1) / rows.max(1) as f64;
    let v_max = values
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, &v| acc.max(v.abs()))
        .max(1e-300);
    let mut doc = Doc::new(title);
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let t = (v.abs() / v_max).clamp(0.0, 1.0);
            let r = (247.0 + t * (178.0 - 247.0)) as u8;
            let g = (251.0 + t * (24.0 - 251.0)) as u8;
            let b = (255.0 + t * (43.0 - 255.0)) as u8;
            let x = px0 + j as f64 * cell_w;
            let y = py1 + i as f64 * cell_h;
            doc.body.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" \
                 fill=\"rgb({r},{g},{b})\" stroke=\"#ddd\"/>\n",
                fmt(x), fmt(y), fmt(cell_w), fmt(cell_h)
            ));
            let text_color = if t > 0.55 { "#ffffff" } else { "#222222" };
            doc.body.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"middle\" \
                 fill=\"{text_color}\">{}</text>\n",
                fmt(x + cell_w / 2.0),
                fmt(y + cell_h / 2.0 + 3.0),
                fmt(v)
            ));
        }
    }
    for (j, label) in col_labels.iter().enumerate() {
        doc.body.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            fmt(px0 + (j as f64 + 0.5) * cell_w),
            fmt(py0 + 16.0),
            esc(label)
        ));
    }
    for (i, label) in row_labels.iter().enumerate() {
        doc.body.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            fmt(px0 - 6.0),
            fmt(py1 + (i as f64 + 0.5) * cell_h + 3.0),
            esc(label)
        ));
    }
    doc.finish()
}

/// Scatter of predicted against target values with the identity diagonal.
pub fn scatter_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    points: &[(f64, f64)],
    diagonal: bool,
) -> String {
    let (x_min, x_max, y_min, y_max) = extent(points);
    let lo = x_min.min(y_min);
    let hi = x_max.max(y_max);
    let pad = 0.05 * (hi - lo).max(1e-12);
    let (px0, px1, py0, py1) = plot_area();
    let xs = Scale::new(lo - pad, hi + pad, px0, px1, false);
    let ys = Scale::new(lo - pad, hi + pad, py0, py1, false);
    let mut doc = Doc::new(title);
    doc.axes(&xs, &ys, x_label, y_label);
    if diagonal {
        doc.body.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999\" \
             stroke-dasharray=\"4 3\"/>\n",
            fmt(xs.px(lo - pad)), fmt(ys.px(lo - pad)), fmt(xs.px(hi + pad)), fmt(ys.px(hi + pad))
        ));
    }
    for &(x, y) in points {
        doc.body.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"{}\" fill-opacity=\"0.7\"/>\n",
            fmt(xs.px(x)), fmt(ys.px(y)), PALETTE[0]
        ));
    }
    doc.finish()
}

fn extent(points: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    let mut e = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        e.0 = e.0.min(x);
        e.1 = e.1.max(x);
        e.2 = e.2.min(y);
        e.3 = e.3.max(y);
    }
    if !e.0.is_finite() {
        e = (0.0, 1.0, 0.0, 1.0);
    }
    (e.0, e.1, e.2, e.3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_is_deterministic_and_well_formed() {
        let pts = [(0.0, 1.0), (1.0, 0.5), (2.0, 0.25)];
        let s = [Series { name: "val", points: &pts }];
        let a = line_plot("loss", "epoch", "mse", &s, true);
        let b = line_plot("loss", "epoch", "mse", &s, true);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.trim_end().ends_with("</svg>"));
        assert!(a.contains("polyline"));
    }

    #[test]
    fn errorbar_plot_renders_every_point() {
        let pts = [(1.0, 0.1, 0.02), (2.0, 0.05, 0.01), (3.0, 0.04, 0.015)];
        let svg = errorbar_plot("error vs k", "k", "mse", &pts, true);
        assert_eq!(svg.matches("<circle").count(), pts.len());
    }

    #[test]
    fn heatmap_annotates_cells_and_escapes_labels() {
        let svg = heatmap(
            "s",
            &["a<b".to_string(), "c".to_string()],
            &["L1".to_string(), "L2".to_string(), "L3".to_string()],
            &[vec![0.1, 0.2, 0.3], vec![0.4, 0.5, 0.6]],
        );
        assert_eq!(svg.matches("<rect").count(), 1 + 6);
        assert!(svg.contains("a&lt;b"));
        assert!(svg.contains("0.600"));
    }

    #[test]
    fn scatter_plot_handles_degenerate_input() {
        let svg = scatter_plot("fit", "target", "model", &[(0.5, 0.5)], true);
        assert!(svg.contains("circle"));
        let empty = scatter_plot("fit", "target", "model", &[], false);
        assert!(empty.contains("</svg>"));
    }

    #[test]
    fn non_finite_values_do_not_poison_the_output() {
        let pts = [(0.0, f64::NAN), (1.0, 1.0)];
        let s = [Series { name: "v", points: &pts }];
        let svg = line_plot("t", "x", "y", &s, false);
        assert!(!svg.contains("NaN"));
    }
}
