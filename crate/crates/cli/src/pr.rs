//! PR curve emission as CSV and standalone SVG.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};

use wireframe_core::eval::{PrCurve, PrPoint};

pub const CSV_HEADER: &str = "threshold,precision,recall";

/// CSV with shortest round-trip decimals, one row per point.
pub fn curve_to_csv(curve: &[PrPoint]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for p in curve {
        let _ = writeln!(s, "{},{},{}", p.threshold, p.precision, p.recall);
    }
    s
}

pub fn parse_csv(text: &str) -> Result<PrCurve> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => bail!("expected header {CSV_HEADER:?}, found {other:?}"),
    }
    let mut curve = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            bail!("row {}: expected 3 fields, found {}", i + 1, fields.len());
        }
        let num = |k: usize| -> Result<f64> {
            fields[k]
                .trim()
                .parse()
                .with_context(|| format!("row {}: bad number {:?}", i + 1, fields[k]))
        };
        curve.push(PrPoint {
            threshold: num(0)?,
            precision: num(1)?,
            recall: num(2)?,
        });
    }
    Ok(curve)
}

/// `v` rounded to `digits` significant digits, trailing zeros trimmed.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { format!("{v}") };
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

const SIZE: f64 = 400.0;
const PAD: f64 = 50.0;

fn sx(recall: f64) -> String {
    format_sig(PAD + recall * SIZE, 6)
}

fn sy(precision: f64) -> String {
    format_sig(PAD + (1.0 - precision) * SIZE, 6)
}

/// Recall on x, precision on y, both over `[0, 1]`; points labelled with
/// their threshold.
pub fn curve_to_svg(curve: &[PrPoint]) -> String {
    let total = SIZE + 2.0 * PAD;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{t}" height="{t}" viewBox="0 0 {t} {t}" font-family="sans-serif" font-size="11">"#,
        t = total
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{total}" height="{total}" fill="white"/>"#
    );
    let (x0, x1, y0, y1) = (sx(0.0), sx(1.0), sy(0.0), sy(1.0));
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#
    );
    for i in 0..=10 {
        let v = i as f64 / 10.0;
        let label = format_sig(v, 6);
        let (tx, ty) = (sx(v), sy(v));
        let _ = writeln!(
            s,
            r#"<line x1="{tx}" y1="{y0}" x2="{tx}" y2="{}" stroke="black"/><text x="{tx}" y="{}" text-anchor="middle">{label}</text>"#,
            format_sig(PAD + SIZE + 5.0, 6),
            format_sig(PAD + SIZE + 18.0, 6),
        );
        let _ = writeln!(
            s,
            r#"<line x1="{x0}" y1="{ty}" x2="{}" y2="{ty}" stroke="black"/><text x="{}" y="{ty}" text-anchor="end" dominant-baseline="middle">{label}</text>"#,
            format_sig(PAD - 5.0, 6),
            format_sig(PAD - 8.0, 6),
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">recall</text>"#,
        format_sig(PAD + SIZE / 2.0, 6),
        format_sig(total - 8.0, 6)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">precision</text>"#,
        format_sig(PAD + SIZE / 2.0, 6),
        format_sig(PAD + SIZE / 2.0, 6)
    );
    if !curve.is_empty() {
        let pts: Vec<String> = curve
            .iter()
            .map(|p| format!("{},{}", sx(p.recall), sy(p.precision)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
            pts.join(" ")
        );
        for p in curve {
            let (px, py) = (sx(p.recall), sy(p.precision));
            let _ = writeln!(
                s,
                r#"<circle cx="{px}" cy="{py}" r="3" fill="steelblue"/><text x="{px}" y="{py}" dx="5" dy="-5">{}</text>"#,
                format_sig(p.threshold, 6)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
