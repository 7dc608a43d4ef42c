//! Minimal SVG 1.1 plots: polylines and rect-based heat maps.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn header(title: &str, xlabel: &str, ylabel: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(ylabel)
    );
    s
}

#[derive(Debug, Clone, Copy)]
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Self {
        let mut f = Frame {
            x0: f64::INFINITY,
            x1: f64::NEG_INFINITY,
            y0: f64::INFINITY,
            y1: f64::NEG_INFINITY,
        };
        for (x, y) in points.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            f.x0 = f.x0.min(x);
            f.x1 = f.x1.max(x);
            f.y0 = f.y0.min(y);
            f.y1 = f.y1.max(y);
        }
        if !f.x0.is_finite() {
            f = Frame {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0,
            };
        }
        if f.x1 <= f.x0 {
            f.x1 = f.x0 + 1.0;
        }
        if f.y1 <= f.y0 {
            f.y0 -= 0.5;
            f.y1 += 0.5;
        }
        f
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }

    fn axes(&self, s: &mut String, log_y: bool) {
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            WIDTH - 2.0 * MARGIN,
            HEIGHT - 2.0 * MARGIN
        );
        let ylab = |v: f64| {
            if log_y {
                format!("1e{v:.1}")
            } else {
                format!("{v:.4}")
            }
        };
        for (v, anchor, x, y) in [
            (
                format!("{:.4}", self.x0),
                "start",
                MARGIN,
                HEIGHT - MARGIN + 16.0,
            ),
            (
                format!("{:.4}", self.x1),
                "end",
                WIDTH - MARGIN,
                HEIGHT - MARGIN + 16.0,
            ),
            (ylab(self.y0), "end", MARGIN - 4.0, HEIGHT - MARGIN),
            (ylab(self.y1), "end", MARGIN - 4.0, MARGIN + 10.0),
        ] {
            let _ = writeln!(
                s,
                r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-family="sans-serif" font-size="10">{v}</text>"#
            );
        }
    }
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// One or more polylines. With `log_y`, nonpositive values are dropped.
pub fn line_plot(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[(&str, Vec<(f64, f64)>)],
    log_y: bool,
) -> String {
    let tf = |(x, y): (f64, f64)| if log_y { (x, y.log10()) } else { (x, y) };
    let series: Vec<(&str, Vec<(f64, f64)>)> = series
        .iter()
        .map(|(name, pts)| {
            let kept = pts
                .iter()
                .copied()
                .filter(|(x, y)| x.is_finite() && y.is_finite() && (!log_y || *y > 0.0))
                .map(tf)
                .collect();
            (*name, kept)
        })
        .collect();
    let frame = Frame::fit(series.iter().flat_map(|(_, p)| p.iter().copied()));
    let ylabel = if log_y {
        format!("log10 {ylabel}")
    } else {
        ylabel.to_string()
    };
    let mut s = header(title, xlabel, &ylabel);
    frame.axes(&mut s, log_y);
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        if series.len() > 1 {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
                WIDTH - MARGIN - 120.0,
                MARGIN + 16.0 + 14.0 * k as f64,
                escape(name)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Heat map of `cells[i][j]` (row = current state `i`, column = next state
/// `j`) over `[lo, hi]²`, darker for larger values, with an optional overlay
/// curve in the same coordinates.
pub fn heat_map(
    title: &str,
    label: &str,
    lo: f64,
    hi: f64,
    cells: &[Vec<f64>],
    overlay: &[(f64, f64)],
) -> String {
    let frame = Frame {
        x0: lo,
        x1: hi,
        y0: lo,
        y1: hi,
    };
    let mut s = header(title, &format!("current {label}"), &format!("next {label}"));
    let n = cells.len().max(1);
    let step = (hi - lo) / n as f64;
    let max = cells
        .iter()
        .flat_map(|r| r.iter().copied())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let w = frame.px(lo + step) - frame.px(lo);
    for (i, row) in cells.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v <= 0.0 {
                continue;
            }
            // square-root scaling keeps faint tails visible
            let shade = (255.0 * (1.0 - (v / max).sqrt())).round() as u8;
            let x = frame.px(lo + i as f64 * step);
            let y = frame.py(lo + (j + 1) as f64 * step);
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="rgb({shade},{shade},255)"/>"#,
                w + 0.05,
                w + 0.05
            );
        }
    }
    frame.axes(&mut s, false);
    let diag = format!(
        "{:.2},{:.2} {:.2},{:.2}",
        frame.px(lo),
        frame.py(lo),
        frame.px(hi),
        frame.py(hi)
    );
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="gray" stroke-dasharray="4 3" points="{diag}"/>"#
    );
    if !overlay.is_empty() {
        let coords: Vec<String> = overlay
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y.clamp(lo, hi))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            COLORS[1],
            coords.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_is_well_formed() {
        let s = line_plot(
            "t <1>",
            "x",
            "y",
            &[("a", vec![(0.0, 1.0), (1.0, 2.0)])],
            false,
        );
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("t &lt;1&gt;"));
        assert_eq!(s.matches("<polyline").count(), 1);
    }

    #[test]
    fn log_plot_drops_nonpositive() {
        let s = line_plot(
            "t",
            "x",
            "y",
            &[("a", vec![(0.0, 0.0), (1.0, 10.0), (2.0, 100.0)])],
            true,
        );
        let line = s.lines().find(|l| l.starts_with("<polyline")).unwrap();
        assert_eq!(line.matches(',').count(), 2);
    }

    #[test]
    fn heat_map_skips_zero_cells() {
        let s = heat_map(
            "t",
            "y",
            0.0,
            1.0,
            &[vec![0.0, 1.0], vec![0.5, 0.0]],
            &[(0.25, 0.5)],
        );
        assert_eq!(s.matches("fill=\"rgb(").count(), 2);
    }
}
