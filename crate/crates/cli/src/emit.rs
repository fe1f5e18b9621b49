//! Report files: `report.json`, `rows.csv` and `plot.svg`.
//!
//! JSON keys come out sorted (serde_json maps are ordered) and every float
//! is written with 17 significant digits, so identical runs give identical
//! bytes. Row wall times are not part of the JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use split_nls::experiments::ExperimentReport;

use crate::config::{ExperimentConfig, Format};
use crate::error::CliError;

/// Pretty printer with fixed `{:.16e}` floats.
struct FixedFloats<'a> {
    inner: PrettyFormatter<'a>,
}

impl Formatter for FixedFloats<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

/// Serialises a JSON value with sorted keys and fixed float formatting.
pub fn to_stable_json(value: &Value) -> String {
    let mut out = Vec::new();
    let formatter = FixedFloats { inner: PrettyFormatter::with_indent(b"  ") };
    let mut ser = serde_json::Serializer::with_formatter(&mut out, formatter);
    serde::Serialize::serialize(value, &mut ser).expect("writing to memory cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// The full `report.json` document.
pub fn report_document(report: &ExperimentReport, config: &ExperimentConfig, command: &str) -> Value {
    let echo = config.echo();
    let canonical = serde_json::to_string(&echo).expect("config is serialisable");
    let mut doc = serde_json::to_value(report).expect("report is serialisable");
    let map = doc.as_object_mut().expect("report serialises to an object");
    map.insert("config".into(), echo);
    map.insert(
        "provenance".into(),
        json!({
            "command": command,
            "config_sha256": sha256_hex(canonical.as_bytes()),
            "seed": config.seed,
            "grid": {
                "box_length": config.grid.box_length,
                "points": config.grid.points,
            },
            "version": env!("CARGO_PKG_VERSION"),
        }),
    );
    doc
}

/// C-style `%.12e`: twelve decimals and a signed exponent of at least two
/// digits.
pub fn format_sci(value: f64) -> String {
    if value.is_nan() {
        return "nan".into();
    }
    if value.is_infinite() {
        return if value > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let raw = format!("{value:.12e}");
    let (mantissa, exponent) = raw.split_once('e').expect("exponent present");
    let exp: i32 = exponent.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// `tau,metric,valid,wall_ms`, plus a trailing `label` column when rows
/// carry labels (several series per step size).
pub fn rows_csv(report: &ExperimentReport) -> String {
    let labelled = report.rows.iter().any(|r| r.label.is_some());
    let mut out = String::from("tau,metric,valid,wall_ms");
    if labelled {
        out.push_str(",label");
    }
    out.push('\n');
    for row in &report.rows {
        let _ =
            write!(out, "{},{},{},{}", format_sci(row.tau), format_sci(row.metric), row.valid, format_sci(row.wall_ms));
        if labelled {
            let label = row.label.as_deref().unwrap_or("");
            let _ = write!(out, ",\"{}\"", label.replace('"', "\"\""));
        }
        out.push('\n');
    }
    out
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 70.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn decade_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return None;
    }
    let (lo, hi) = (lo.log10().floor(), hi.log10().ceil());
    Some((lo, if hi > lo { hi } else { lo + 1.0 }))
}

/// Log-log plot of metric against tau with the fitted power law overlaid.
/// `None` when no row has positive finite coordinates.
pub fn plot_svg(report: &ExperimentReport) -> Option<String> {
    let usable = |t: f64, m: f64| t > 0.0 && m > 0.0 && t.is_finite() && m.is_finite();
    let points: Vec<_> = report.valid_rows().filter(|r| usable(r.tau, r.metric)).collect();
    let (x_lo, x_hi) = decade_range(points.iter().map(|r| r.tau))?;
    let mut y_values: Vec<f64> = points.iter().map(|r| r.metric).collect();
    if let Some(fit) = &report.fit {
        y_values.extend(points.iter().map(|r| fit.predict(r.tau)).filter(|v| *v > 0.0 && v.is_finite()));
    }
    let (y_lo, y_hi) = decade_range(y_values.into_iter())?;

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |t: f64| MARGIN_LEFT + (t.log10() - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |m: f64| MARGIN_TOP + (y_hi - m.log10()) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="13">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="28" text-anchor="middle" font-size="16">{}: {}</text>"#,
        WIDTH / 2.0,
        escape(&report.experiment),
        escape(&report.metric)
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for e in (x_lo as i32)..=(x_hi as i32) {
        let x = sx(10f64.powi(e));
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{MARGIN_TOP}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"##,
            MARGIN_TOP + plot_h,
            MARGIN_TOP + plot_h + 20.0
        );
    }
    for e in (y_lo as i32)..=(y_hi as i32) {
        let y = sy(10f64.powi(e));
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN_LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"##,
            MARGIN_LEFT + plot_w,
            MARGIN_LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">tau</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 20.0
    );

    let mut series: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for row in &points {
        series.entry(row.label.as_deref().unwrap_or("")).or_default().push((row.tau, row.metric));
    }
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(t, m)| format!("{:.2},{:.2}", sx(t), sy(m))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}"/>"#, path.join(" "));
        for &(t, m) in pts {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{color}"/>"#, sx(t), sy(m));
        }
        if !label.is_empty() {
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" fill="{color}">{}</text>"#,
                MARGIN_LEFT + 10.0,
                MARGIN_TOP + 20.0 + 18.0 * i as f64,
                escape(label)
            );
        }
    }
    if let Some(fit) = &report.fit {
        let (t0, t1) = points.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(r.tau), b.max(r.tau)));
        let (m0, m1) = (fit.predict(t0), fit.predict(t1));
        if m0 > 0.0 && m1 > 0.0 {
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-dasharray="6 4"/>"#,
                sx(t0),
                sy(m0),
                sx(t1),
                sy(m1)
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">fit: slope {:.3}, C {:.3e}</text>"#,
                MARGIN_LEFT + plot_w - 10.0,
                MARGIN_TOP + plot_h - 12.0,
                fit.slope,
                fit.constant()
            );
        }
    }
    svg.push_str("</svg>\n");
    Some(svg)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(path, e))
}

/// Writes the requested formats to `out_dir` and returns the JSON text.
pub fn emit_report(
    report: &ExperimentReport,
    config: &ExperimentConfig,
    command: &str,
    out_dir: &Path,
) -> Result<String, CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let json = to_stable_json(&report_document(report, config, command));
    if config.output.wants(Format::Json) {
        write_file(out_dir, "report.json", &json)?;
    }
    if config.output.wants(Format::Csv) {
        write_file(out_dir, "rows.csv", &rows_csv(report))?;
    }
    if config.output.wants(Format::Svg) {
        if let Some(svg) = plot_svg(report) {
            write_file(out_dir, "plot.svg", &svg)?;
        }
    }
    Ok(json)
}

#[cfg(test)]
mod tests {
    use split_nls::experiments::{rate_fit, ReportRow};

    use super::*;

    #[test]
    fn sci_matches_c_printf() {
        assert_eq!(format_sci(0.0), "0.000000000000e+00");
        assert_eq!(format_sci(1234.5), "1.234500000000e+03");
        assert_eq!(format_sci(-2.5e-7), "-2.500000000000e-07");
        assert_eq!(format_sci(1e-100), "1.000000000000e-100");
        assert_eq!(format_sci(f64::NAN), "nan");
    }

    #[test]
    fn json_floats_have_17_digits_and_sorted_keys() {
        let text = to_stable_json(&json!({"b": 0.1, "a": [1.0, 2], "c": null}));
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        assert!(text.contains("1.0000000000000000e0"));
        assert!(text.find("\"a\"").unwrap() < text.find("\"b\"").unwrap());
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["b"], 0.1);
    }

    #[test]
    fn empty_report_is_valid_json() {
        let mut report = ExperimentReport::new("converge", "error");
        report.finalize();
        let text = to_stable_json(&serde_json::to_value(&report).unwrap());
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["rows"], json!([]));
        assert_eq!(v["pass"], false);
        assert_eq!(v["reason"], "no rows");
        assert!(plot_svg(&report).is_none());
    }

    fn ladder_report() -> ExperimentReport {
        let mut report = ExperimentReport::new("converge", "error");
        let rows: Vec<(f64, f64)> =
            (0..6).map(|j| (0.1 * 0.5f64.powi(j), 0.3 * (0.1 * 0.5f64.powi(j)).sqrt())).collect();
        report.rows = rows.iter().map(|&(t, e)| ReportRow { wall_ms: 12.5, ..ReportRow::valid(t, e) }).collect();
        report.fit = Some(rate_fit(&rows).unwrap());
        report.finalize();
        report
    }

    #[test]
    fn ladder_csv_has_one_line_per_row() {
        let csv = rows_csv(&ladder_report());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[0], "tau,metric,valid,wall_ms");
        assert!(lines[1].starts_with("1.000000000000e-01,"));
        assert!(lines[1].ends_with(",true,1.250000000000e+01"));
    }

    #[test]
    fn wall_time_stays_out_of_json() {
        let text = to_stable_json(&serde_json::to_value(ladder_report()).unwrap());
        assert!(!text.contains("wall_ms"));
    }

    #[test]
    fn plot_contains_points_and_fit() {
        let svg = plot_svg(&ladder_report()).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<circle").count(), 6);
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("slope 0.500"));
        assert!(svg.contains(r#"width="800" height="600""#));
    }

    #[test]
    fn digest_is_hex_sha256() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
