//! CSV tables and SVG line charts.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use norminflate::{BoundReport, SweepResult};

/// Shortest decimal that round-trips; exponent form for very small or large
/// magnitudes.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Writes `# comment` lines, a header row and the rows, LF-terminated.
pub fn write_table(path: &Path, comments: &[String], columns: &[String], rows: &[Vec<String>]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(columns)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn emit_csv(result: &SweepResult, path: &Path, comments: &[String]) -> Result<()> {
    let rows: Vec<Vec<String>> = result.rows.iter().map(|r| r.iter().map(|&x| num(x)).collect()).collect();
    write_table(path, comments, &result.columns, &rows)
}

pub const REPORT_COLUMNS: [&str; 12] =
    ["name", "r", "beta", "K", "t", "lhs", "rhs_model", "implied_constant", "pass", "informational", "note", "nu"];

pub fn emit_reports(reports: &[BoundReport], path: &Path, comments: &[String]) -> Result<()> {
    let opt = |x: Option<String>| x.unwrap_or_default();
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.name.clone(),
                opt(r.params.map(|p| p.r.to_string())),
                opt(r.params.map(|p| num(p.beta))),
                opt(r.params.map(|p| p.k.to_string())),
                opt(r.t.map(num)),
                num(r.lhs),
                num(r.rhs_model),
                num(r.implied_constant),
                r.pass.to_string(),
                r.informational.to_string(),
                r.note.clone(),
                opt(r.params.map(|p| num(p.nu))),
            ]
        })
        .collect();
    let columns: Vec<String> = REPORT_COLUMNS.iter().map(|c| c.to_string()).collect();
    write_table(path, comments, &columns, &rows)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        } else if hi - lo <= 1e-12 * lo.abs().max(1.0) {
            // Constant data: centre it.
            let pad = if log { 0.5 } else { 0.5 * lo.abs().max(1.0) };
            (lo, hi) = (lo - pad, hi + pad);
        }
        Axis { log, lo, hi }
    }

    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn tick_label(&self, f: f64) -> String {
        let v = self.lo + f * (self.hi - self.lo);
        let v = if self.log { 10f64.powf(v) } else { v };
        if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
            format!("{v:.2e}")
        } else {
            format!("{v:.3}")
        }
    }
}

/// Standalone SVG line chart. Non-finite points, and non-positive ones on a
/// log axis, are skipped.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series], log_x: bool, log_y: bool) -> String {
    let usable = |&(x, y): &(f64, f64)| {
        x.is_finite() && y.is_finite() && (!log_x || x > 0.0) && (!log_y || y > 0.0)
    };
    let pts = || series.iter().flat_map(|s| s.points.iter().copied().filter(usable));
    let ax = Axis::fit(pts().map(|p| p.0), log_x);
    let ay = Axis::fit(pts().map(|p| p.1), log_y);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + ax.frac(x) * pw;
    let py = |y: f64| TOP + (1.0 - ay.frac(y)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, escape(title));
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let x = LEFT + f * pw;
        let y = TOP + (1.0 - f) * ph;
        let _ = writeln!(s, r##"<line x1="{x}" y1="{TOP}" x2="{x}" y2="{}" stroke="#ddd"/>"##, TOP + ph);
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, ax.tick_label(f));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, ay.tick_label(f));
    }
    let scale = |log: bool| if log { " (log)" } else { "" };
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 16.0,
        escape(x_label),
        scale(log_x)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label),
        scale(log_y)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> =
            ser.points.iter().copied().filter(usable).map(|(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        if coords.len() > 1 {
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, coords.join(" "));
        }
        for c in &coords {
            let (cx, cy) = c.split_once(',').expect("formatted pair");
            let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
        }
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&ser.name));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polylines(svg: &str) -> Vec<Vec<(f64, f64)>> {
        svg.lines()
            .filter_map(|l| l.split("points=\"").nth(1))
            .map(|rest| {
                rest.split('"')
                    .next()
                    .unwrap()
                    .split(' ')
                    .map(|p| {
                        let (x, y) = p.split_once(',').unwrap();
                        (x.parse().unwrap(), y.parse().unwrap())
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn empty_chart_has_axes_only() {
        let svg = line_chart("empty", "x", "y", &[], true, true);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(polylines(&svg).is_empty());
    }

    #[test]
    fn constant_series_is_horizontal() {
        let s = Series {
            name: "c".into(),
            points: vec![(1.0, 2.0), (2.0, 2.0), (4.0, 2.0)],
        };
        let lines = polylines(&line_chart("c", "x", "y", &[s], true, false));
        assert_eq!(lines.len(), 1);
        assert!(lines[0].iter().all(|p| p.1 == lines[0][0].1));
    }

    #[test]
    fn increasing_series_rises() {
        let s = Series {
            name: "up".into(),
            points: (1..6).map(|i| (2f64.powi(i), 1.5f64.powi(i))).collect(),
        };
        let line = &polylines(&line_chart("up", "r", "v", &[s], true, true))[0];
        // SVG y grows downward.
        assert!(line.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 < w[0].1));
    }

    #[test]
    fn csv_is_lf_with_comment_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut res = SweepResult::new("t", &["a", "b"]);
        res.push_row(vec![0.1, 1e-20]);
        emit_csv(&res, &path, &["seed=7".into()]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "# seed=7\na,b\n0.1,1e-20\n");
        let empty = SweepResult::new("t", &["a"]);
        emit_csv(&empty, &path, &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a\n");
    }
}
