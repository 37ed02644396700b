//! Minimal line and scatter plots of table columns.

use std::fmt::Write as _;

use crate::table::Table;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Scatter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x: String,
    pub ys: Vec<String>,
    pub log_x: bool,
    pub style: Style,
}

impl Plot {
    pub fn new(title: &str, x: &str, ys: &[&str], log_x: bool, style: Style) -> Self {
        Self { title: title.into(), x: x.into(), ys: ys.iter().map(|y| y.to_string()).collect(), log_x, style }
    }
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Renders `plot` from `table`; missing columns are skipped.
pub fn render(table: &Table, plot: &Plot) -> String {
    let tx = |v: f64| if plot.log_x { v.ln() } else { v };
    let xs: Vec<f64> = table.column(&plot.x).unwrap_or_default().into_iter().map(tx).collect();
    let series: Vec<(&str, Vec<f64>)> = plot.ys.iter().filter_map(|y| table.column(y).map(|c| (y.as_str(), c))).collect();
    let (x0, x1) = extent(xs.iter().copied());
    let (y0, y1) = extent(series.iter().flat_map(|(_, v)| v.iter().copied()));
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, plot.title).unwrap();
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    writeln!(s, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" stroke="black" fill="none"/>"#).unwrap();
    let xlabel = |v: f64| if plot.log_x { v.exp() } else { v };
    writeln!(s, r#"<text x="{l}" y="{}" text-anchor="middle">{:.3}</text>"#, b + 18.0, xlabel(x0)).unwrap();
    writeln!(s, r#"<text x="{r}" y="{}" text-anchor="middle">{:.3}</text>"#, b + 18.0, xlabel(x1)).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}{}</text>"#, WIDTH / 2.0, b + 38.0, plot.x, if plot.log_x { " (log)" } else { "" }).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.4}</text>"#, l - 6.0, b, y0).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.4}</text>"#, l - 6.0, t + 4.0, y1).unwrap();

    for (k, (name, ys)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(x, y)| x.is_finite() && y.is_finite()).map(|(&x, &y)| (px(x), py(y))).collect();
        match plot.style {
            Style::Line => {
                let d: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                writeln!(s, r#"<polyline points="{}" stroke="{color}" stroke-width="1.5" fill="none"/>"#, d.join(" ")).unwrap();
            }
            Style::Scatter => {
                for (x, y) in pts {
                    writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"#).unwrap();
                }
            }
        }
        writeln!(s, r#"<text x="{}" y="{}" fill="{color}">{name}</text>"#, r - 120.0, t + 16.0 * (k as f64 + 1.0)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}
