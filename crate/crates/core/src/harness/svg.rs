//! Hand-written SVG figures: visitation heatmaps and learning curves.

use std::fmt::Write as _;
use std::path::Path;

use super::write_atomic;
use crate::{Error, Result};

const CELL: f64 = 10.0;
const MARGIN: f64 = 40.0;
const BAR_WIDTH: f64 = 16.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// White at 0, dark blue at 1.
pub fn heat_color(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * v).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(255.0, 8.0), lerp(255.0, 48.0), lerp(255.0, 107.0))
}

/// Heatmap of a `width x height` grid given row-major values with row 0 at
/// the bottom. Deeper color means a larger value; the color bar is labeled
/// with the value range.
pub fn emit_heatmap(values: &[f64], width: usize, height: usize, title: &str) -> Result<String> {
    if width == 0 || height == 0 || values.len() != width * height {
        return Err(Error::contract(format!(
            "{} values do not fill a {width}x{height} grid",
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::contract(format!("heatmap value {v} is not finite")));
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min).min(0.0);
    let span = if max > min { max - min } else { 1.0 };
    let gw = width as f64 * CELL;
    let gh = height as f64 * CELL;
    let total_w = gw + 2.0 * MARGIN + BAR_WIDTH + 60.0;
    let total_h = gh + 2.0 * MARGIN;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{total_h}" viewBox="0 0 {total_w} {total_h}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{total_w}" height="{total_h}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="14">{}</text>"#,
        MARGIN - 12.0,
        escape(title)
    )
    .unwrap();
    writeln!(s, r#"<g id="cells">"#).unwrap();
    for y in 0..height {
        for x in 0..width {
            let v = values[y * width + x];
            let px = MARGIN + x as f64 * CELL;
            let py = MARGIN + (height - 1 - y) as f64 * CELL;
            writeln!(
                s,
                r#"<rect x="{px}" y="{py}" width="{CELL}" height="{CELL}" fill="{}"/>"#,
                heat_color((v - min) / span)
            )
            .unwrap();
        }
    }
    writeln!(s, "</g>").unwrap();
    // Color bar: top is the maximum.
    let bx = MARGIN + gw + 20.0;
    writeln!(s, r#"<g id="scale">"#).unwrap();
    let steps = 20;
    for i in 0..steps {
        let frac = 1.0 - i as f64 / (steps - 1) as f64;
        writeln!(
            s,
            r#"<rect x="{bx}" y="{}" width="{BAR_WIDTH}" height="{}" fill="{}"/>"#,
            MARGIN + i as f64 * gh / steps as f64,
            gh / steps as f64,
            heat_color(frac)
        )
        .unwrap();
    }
    let lx = bx + BAR_WIDTH + 4.0;
    writeln!(s, r#"<text x="{lx}" y="{}" font-family="sans-serif" font-size="10">{max:.3e}</text>"#, MARGIN + 8.0).unwrap();
    writeln!(s, r#"<text x="{lx}" y="{}" font-family="sans-serif" font-size="10">{min:.3e}</text>"#, MARGIN + gh).unwrap();
    writeln!(
        s,
        r#"<text x="{lx}" y="{}" font-family="sans-serif" font-size="10">visit probability</text>"#,
        MARGIN + gh / 2.0
    )
    .unwrap();
    writeln!(s, "</g>\n</svg>").unwrap();
    Ok(s)
}

/// One curve: `(x, mean, stderr)` points.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveSeries {
    pub label: String,
    pub points: Vec<(f64, f64, f64)>,
}

/// Line plot of each series' mean with a shaded mean +/- stderr band.
pub fn emit_curves(series: &[CurveSeries], title: &str, x_label: &str, y_label: &str) -> Result<String> {
    let pts = series.iter().flat_map(|c| c.points.iter());
    let mut x_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut y_range = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, m, e) in pts {
        if !(x.is_finite() && m.is_finite() && e.is_finite()) {
            return Err(Error::contract("curve points must be finite"));
        }
        x_range = (x_range.0.min(x), x_range.1.max(x));
        y_range = (y_range.0.min(m - e), y_range.1.max(m + e));
    }
    if !x_range.0.is_finite() {
        x_range = (0.0, 1.0);
        y_range = (0.0, 1.0);
    }
    if x_range.1 <= x_range.0 {
        x_range.1 = x_range.0 + 1.0;
    }
    if y_range.1 <= y_range.0 {
        y_range = (y_range.0 - 0.5, y_range.0 + 0.5);
    }
    let (w, h) = (480.0, 300.0);
    let (left, top) = (60.0, 30.0);
    let sx = |x: f64| left + (x - x_range.0) / (x_range.1 - x_range.0) * w;
    let sy = |y: f64| top + h - (y - y_range.0) / (y_range.1 - y_range.0) * h;
    let (tw, th) = (w + left + 160.0, h + top + 50.0);
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{tw}" height="{th}" viewBox="0 0 {tw} {th}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{tw}" height="{th}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{left}" y="20" font-family="sans-serif" font-size="14">{}</text>"#,
        escape(title)
    )
    .unwrap();
    writeln!(
        s,
        r#"<path d="M{left} {top} V{} H{}" stroke="black" fill="none"/>"#,
        top + h,
        left + w
    )
    .unwrap();
    for (v, y) in [(y_range.0, top + h), (y_range.1, top + 8.0)] {
        writeln!(
            s,
            r#"<text x="4" y="{y}" font-family="sans-serif" font-size="10">{v:.3}</text>"#
        )
        .unwrap();
    }
    for (v, x) in [(x_range.0, left), (x_range.1, left + w - 30.0)] {
        writeln!(
            s,
            r#"<text x="{x}" y="{}" font-family="sans-serif" font-size="10">{v}</text>"#,
            top + h + 14.0
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
        left + w / 2.0 - 20.0,
        top + h + 36.0,
        escape(x_label)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="12" y="{}" font-family="sans-serif" font-size="12" transform="rotate(-90 12 {})">{}</text>"#,
        top + h / 2.0,
        top + h / 2.0,
        escape(y_label)
    )
    .unwrap();
    for (i, c) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if c.points.is_empty() {
            continue;
        }
        let mut band = String::new();
        for (j, &(x, m, e)) in c.points.iter().enumerate() {
            write!(band, "{}{:.2} {:.2} ", if j == 0 { "M" } else { "L" }, sx(x), sy(m + e)).unwrap();
        }
        for &(x, m, e) in c.points.iter().rev() {
            write!(band, "L{:.2} {:.2} ", sx(x), sy(m - e)).unwrap();
        }
        band.push('Z');
        writeln!(s, r#"<path d="{band}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#).unwrap();
        let mut line = String::new();
        for (j, &(x, m, _)) in c.points.iter().enumerate() {
            write!(line, "{}{:.2} {:.2} ", if j == 0 { "M" } else { "L" }, sx(x), sy(m)).unwrap();
        }
        writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, line.trim_end()).unwrap();
        let ly = top + 14.0 + 16.0 * i as f64;
        writeln!(
            s,
            r#"<text x="{}" y="{ly}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            left + w + 10.0,
            escape(&c.label)
        )
        .unwrap();
    }
    writeln!(s, "</svg>").unwrap();
    Ok(s)
}

/// Writes an SVG document atomically.
pub fn write_svg(path: &Path, document: &str) -> Result<()> {
    write_atomic(path, document.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell_fills(doc: &str) -> Vec<&str> {
        let cells = &doc[doc.find(r#"<g id="cells">"#).unwrap()..doc.find("</g>").unwrap()];
        cells
            .lines()
            .filter_map(|l| l.split("fill=\"").nth(1))
            .map(|f| &f[..7])
            .collect()
    }

    #[test]
    fn zero_grid_is_uniform() {
        let doc = emit_heatmap(&[0.0; 9], 3, 3, "zeros").unwrap();
        let fills = cell_fills(&doc);
        assert_eq!(fills.len(), 9);
        assert!(fills.iter().all(|f| *f == fills[0]));
    }

    #[test]
    fn single_hot_cell() {
        let mut v = vec![0.0; 16];
        v[5] = 0.3;
        let doc = emit_heatmap(&v, 4, 4, "hot").unwrap();
        let darkest = heat_color(1.0);
        assert_eq!(cell_fills(&doc).iter().filter(|f| **f == darkest).count(), 1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(emit_heatmap(&[0.0; 3], 2, 2, "x").is_err());
        assert!(emit_heatmap(&[f64::NAN; 4], 2, 2, "x").is_err());
    }

    #[test]
    fn title_is_escaped() {
        let doc = emit_curves(&[], "a < b & c", "x", "y").unwrap();
        assert!(doc.contains("a &lt; b &amp; c"));
    }
}
