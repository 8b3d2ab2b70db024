//! Minimal native SVG line plots.

use std::fmt::Write;

use deism::metrics::{spl, unwrap_phase};
use deism::spectrum::RtfSpectrum;

const WIDTH: f64 = 760.0;
const PANEL_HEIGHT: f64 = 260.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 45.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// One curve: a legend label and its points.
pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return Axis { lo: 1.0, hi: 10.0, log };
        }
        if log {
            lo = 10f64.powf(lo.log10().floor());
            hi = 10f64.powf(hi.log10().ceil());
            if hi <= lo {
                hi = lo * 10.0;
            }
        } else if hi - lo < 1e-12 * lo.abs().max(1.0) {
            lo -= 1.0;
            hi += 1.0;
        } else {
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Axis { lo, hi, log }
    }

    /// Position in `[0, 1]`, or `None` when the value cannot be drawn.
    fn unit(&self, v: f64) -> Option<f64> {
        if !v.is_finite() || (self.log && v <= 0.0) {
            return None;
        }
        Some(if self.log {
            (v.log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10())
        } else {
            (v - self.lo) / (self.hi - self.lo)
        })
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let mut t = Vec::new();
            let mut decade = self.lo;
            while decade <= self.hi * (1.0 + 1e-9) {
                for m in [1.0, 2.0, 5.0] {
                    let v = decade * m;
                    if v >= self.lo * (1.0 - 1e-9) && v <= self.hi * (1.0 + 1e-9) {
                        t.push(v);
                    }
                }
                decade *= 10.0;
            }
            t
        } else {
            let raw = (self.hi - self.lo) / 6.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0]
                .iter()
                .map(|m| m * mag)
                .find(|s| *s >= raw)
                .unwrap_or(10.0 * mag);
            let mut v = (self.lo / step).ceil() * step;
            let mut t = Vec::new();
            while v <= self.hi + 1e-9 * step {
                t.push(if v.abs() < 1e-12 * step { 0.0 } else { v });
                v += step;
            }
            t
        }
    }
}

fn label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[allow(clippy::too_many_arguments)]
fn panel(out: &mut String, top: f64, title: &str, xlabel: &str, ylabel: &str, series: &[Series], logx: bool, logy: bool) {
    let x = Axis::fit(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)), logx);
    let y = Axis::fit(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)), logy);
    let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (y0, y1) = (top + MARGIN_TOP, top + PANEL_HEIGHT - MARGIN_BOTTOM);
    let px = |v: f64| x.unit(v).map(|u| x0 + u * (x1 - x0));
    let py = |v: f64| y.unit(v).map(|u| y1 - u * (y1 - y0));

    let _ = writeln!(
        out,
        r##"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        x1 - x0,
        y1 - y0
    );
    for t in x.ticks() {
        if let Some(p) = px(t) {
            let _ = writeln!(
                out,
                r##"<line x1="{p:.2}" y1="{y0}" x2="{p:.2}" y2="{y1}" stroke="#ddd"/><text x="{p:.2}" y="{}" font-size="11" text-anchor="middle">{}</text>"##,
                y1 + 15.0,
                label(t)
            );
        }
    }
    for t in y.ticks() {
        if let Some(p) = py(t) {
            let _ = writeln!(
                out,
                r##"<line x1="{x0}" y1="{p:.2}" x2="{x1}" y2="{p:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"##,
                x0 - 5.0,
                p + 4.0,
                label(t)
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        top + 18.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        y1 + 34.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{0}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );

    for (i, s) in series.iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        // Break the line at points that cannot be drawn (e.g. zero on a log axis).
        let mut path = String::new();
        let mut pen_down = false;
        for &(a, b) in &s.points {
            match (px(a), py(b)) {
                (Some(u), Some(v)) => {
                    let _ = write!(path, "{}{u:.2},{v:.2} ", if pen_down { "L" } else { "M" });
                    pen_down = true;
                }
                _ => pen_down = false,
            }
        }
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{colour}" stroke-width="1.3"/>"#,
            path.trim_end()
        );
        if s.points.len() == 1 {
            if let (Some(u), Some(v)) = (px(s.points[0].0), py(s.points[0].1)) {
                let _ = writeln!(out, r#"<circle cx="{u:.2}" cy="{v:.2}" r="3" fill="{colour}"/>"#);
            }
        }
        let ly = y0 + 14.0 + 15.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/><text x="{}" y="{}" font-size="11">{}</text>"#,
            x1 - 120.0,
            x1 - 100.0,
            x1 - 95.0,
            ly + 4.0,
            escape(s.label)
        );
    }
}

fn document(panels: usize, body: &str) -> String {
    let height = PANEL_HEIGHT * panels as f64;
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\" viewBox=\"0 0 {WIDTH} {height}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

/// Magnitude (SPL) and unwrapped-phase panels over a log frequency axis.
pub fn rtf_figure(spectra: &[RtfSpectrum]) -> String {
    let names: Vec<String> = spectra
        .iter()
        .map(|s| s.method.map_or_else(|| "spectrum".to_string(), |m| m.to_string()))
        .collect();
    let mag: Vec<Series> = spectra
        .iter()
        .zip(&names)
        .map(|(s, n)| Series {
            label: n,
            points: s.frequencies().iter().copied().zip(spl(s).0).collect(),
        })
        .collect();
    let phase: Vec<Series> = spectra
        .iter()
        .zip(&names)
        .map(|(s, n)| Series {
            label: n,
            points: s.frequencies().iter().copied().zip(unwrap_phase(s.values())).collect(),
        })
        .collect();
    let mut body = String::new();
    panel(&mut body, 0.0, "Magnitude", "Frequency (Hz)", "SPL (dB)", &mag, true, false);
    panel(&mut body, PANEL_HEIGHT, "Phase", "Frequency (Hz)", "Unwrapped phase (rad)", &phase, true, false);
    document(2, &body)
}

/// A single-panel line plot.
pub fn xy_figure(title: &str, xlabel: &str, ylabel: &str, series: &[Series], logx: bool, logy: bool) -> String {
    let mut body = String::new();
    panel(&mut body, 0.0, title, xlabel, ylabel, series, logx, logy);
    document(1, &body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn figure_is_well_formed() {
        let s = RtfSpectrum::new(
            vec![20.0, 100.0, 1000.0],
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0)],
            None,
        )
        .unwrap();
        let svg = rtf_figure(&[s]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn log_ticks_cover_decades() {
        let a = Axis { lo: 10.0, hi: 1000.0, log: true };
        assert_eq!(a.ticks(), vec![10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0]);
    }
}
