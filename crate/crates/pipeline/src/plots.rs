//! Static SVG plots: per-country difference bars and the prediction scatter.
//!
//! Every file embeds its plotted values in a leading comment so the numbers
//! survive without the picture, and all coordinates are printed with fixed
//! precision so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use co2_core::reporting::{CountrySeries, ScatterTable};

use crate::error::{io_err, Result};

/// Underestimation (actual above prediction).
pub const GREEN: &str = "#2e8b57";
/// Overestimation.
pub const BROWN: &str = "#8b4513";

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 56.0;

/// Six significant digits.
pub fn sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    if (-3..6).contains(&mag) {
        format!("{:.*}", (5 - mag).max(0) as usize, v)
    } else {
        format!("{v:.5e}")
    }
}

fn comment_safe(s: &str) -> String {
    s.replace("--", "- -")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open_svg(out: &mut String, title: &str, data_header: &str, data: &[String]) {
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#);
    let _ = writeln!(out, "<!-- data\n{}", comment_safe(data_header));
    for line in data {
        let _ = writeln!(out, "{}", comment_safe(line));
    }
    out.push_str("-->\n");
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
}

/// Bar chart of one value per year around a zero line, green above and brown below.
/// `None` values are listed as `NA` and not drawn.
pub fn bar_chart(title: &str, unit: &str, years: &[i32], values: &[Option<f64>]) -> String {
    let data: Vec<String> = years
        .iter()
        .zip(values)
        .map(|(y, v)| format!("{y},{}", v.map_or_else(|| "NA".to_owned(), |v| v.to_string())))
        .collect();
    let mut out = String::new();
    open_svg(&mut out, title, &format!("year,{unit}"), &data);

    let extent = values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let extent = if extent > 0.0 { extent } else { 1.0 };
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let zero_y = MARGIN + plot_h / 2.0;
    let scale = (plot_h / 2.0) / extent;
    let slot = (WIDTH - 2.0 * MARGIN) / years.len().max(1) as f64;

    let _ = writeln!(out, r#"<line x1="{MARGIN:.2}" y1="{zero_y:.2}" x2="{:.2}" y2="{zero_y:.2}" stroke="black" stroke-width="1"/>"#, WIDTH - MARGIN);
    for (label, y) in [(extent, MARGIN), (-extent, HEIGHT - MARGIN)] {
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"#, MARGIN - 4.0, y + 4.0, sig6(label));
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, escape(unit));
    for (i, (year, v)) in years.iter().zip(values).enumerate() {
        let x = MARGIN + i as f64 * slot;
        if let Some(v) = v {
            let h = v.abs() * scale;
            let top = if *v >= 0.0 { zero_y - h } else { zero_y };
            let fill = if *v >= 0.0 { GREEN } else { BROWN };
            let _ = writeln!(out, r#"<rect x="{:.2}" y="{top:.2}" width="{:.2}" height="{h:.2}" fill="{fill}"><title>{year}: {}</title></rect>"#, x + 0.1 * slot, 0.8 * slot, sig6(*v));
        }
        if i == 0 || i + 1 == years.len() {
            let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="middle">{year}</text>"#, x + slot / 2.0, HEIGHT - MARGIN + 14.0);
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Predicted against actual with the `predicted = actual` reference line.
pub fn scatter_plot(title: &str, table: &ScatterTable) -> String {
    let data: Vec<String> = table.points.iter().map(|(a, p)| format!("{a},{p}")).collect();
    let mut out = String::new();
    open_svg(&mut out, title, "actual,predicted", &data);
    let (lo, hi) = match table.diagonal {
        Some([(lo, _), (hi, _)]) if hi > lo => (lo, hi),
        Some([(lo, _), _]) => (lo - 1.0, lo + 1.0),
        None => (0.0, 1.0),
    };
    let side = HEIGHT - 2.0 * MARGIN;
    let left = (WIDTH - side) / 2.0;
    let px = |v: f64| left + (v - lo) / (hi - lo) * side;
    let py = |v: f64| HEIGHT - MARGIN - (v - lo) / (hi - lo) * side;
    let _ = writeln!(out, r#"<rect x="{left:.2}" y="{MARGIN:.2}" width="{side:.2}" height="{side:.2}" fill="none" stroke="black" stroke-width="1"/>"#);
    if table.diagonal.is_some() {
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 3"/>"#, px(lo), py(lo), px(hi), py(hi));
    }
    for (a, p) in &table.points {
        let fill = if a >= p { GREEN } else { BROWN };
        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{fill}" fill-opacity="0.8"/>"#, px(*a), py(*p));
    }
    for (v, anchor_x, anchor_y) in [(lo, px(lo), HEIGHT - MARGIN + 14.0), (hi, px(hi), HEIGHT - MARGIN + 14.0)] {
        let _ = writeln!(out, r#"<text x="{anchor_x:.2}" y="{anchor_y:.2}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#, sig6(v));
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">actual (kt) vs predicted (kt)</text>"#, WIDTH / 2.0, HEIGHT - 12.0);
    out.push_str("</svg>\n");
    out
}

/// File-name stem for a country code: anything outside `[A-Za-z0-9_-]` becomes `_`.
pub fn file_stem(country: &str) -> String {
    country.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Writes `<country>_diff.svg` and `<country>_pct.svg` per series, then
/// `scatter.svg`; returns the paths in that order.
pub fn emit_plots(series: &[CountrySeries], scatter: &ScatterTable, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::with_capacity(2 * series.len() + 1);
    let mut write = |name: String, body: String| -> Result<()> {
        let path = out_dir.join(name);
        std::fs::write(&path, body).map_err(io_err(&path))?;
        written.push(path);
        Ok(())
    };
    for s in series {
        let stem = file_stem(&s.country);
        let diff: Vec<Option<f64>> = s.difference.iter().copied().map(Some).collect();
        write(format!("{stem}_diff.svg"), bar_chart(&format!("{}: actual − predicted", s.country), "diff_kt", &s.years, &diff))?;
        write(
            format!("{stem}_pct.svg"),
            bar_chart(&format!("{}: difference relative to actual", s.country), "pct_diff", &s.years, &s.pct_difference),
        )?;
    }
    write("scatter.svg".to_owned(), scatter_plot("predicted vs actual", scatter))?;
    Ok(written)
}
