//! Grid snapshots as SVG. Cell `(r, c)` shows vertex `c·rows + r`, the
//! column-major labelling used for grid graphs.
//!
//! The sign image paints positive agents black and negative agents white;
//! the magnitude image shades from white (most negative) through a midtone
//! (zero) to black (most positive) on a symmetric scale.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

const CELL: usize = 40;
const MARGIN: usize = 10;
const LEGEND: usize = 60;
const MIDTONE: u8 = 128;

/// Agents with `|x_i|` at or below this are drawn as zero.
pub const ZERO_TOL: f64 = 1e-6;

/// Writes `<stem>_sign.svg` and `<stem>_magnitude.svg` for a grid, or
/// `<stem>_signs.txt` when `grid` is `None`. Returns the written paths.
pub fn render_snapshot(
    x: &[f64],
    grid: Option<(usize, usize)>,
    stem: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let with_suffix = |suffix: &str| {
        let mut name = stem.file_name().unwrap_or_default().to_os_string();
        name.push(suffix);
        stem.with_file_name(name)
    };
    match grid {
        Some((rows, cols)) if rows * cols == x.len() => {
            let sign = with_suffix("_sign.svg");
            let magnitude = with_suffix("_magnitude.svg");
            fs::write(&sign, sign_svg(x, rows, cols))?;
            fs::write(&magnitude, magnitude_svg(x, rows, cols))?;
            Ok(vec![sign, magnitude])
        }
        _ => {
            let path = with_suffix("_signs.txt");
            fs::write(&path, sign_list(x))?;
            Ok(vec![path])
        }
    }
}

fn is_zero_state(x: &[f64]) -> bool {
    x.iter().all(|v| v.abs() <= ZERO_TOL)
}

/// One line per agent: label, sign and value.
pub fn sign_list(x: &[f64]) -> String {
    let mut out = String::new();
    if is_zero_state(x) {
        out.push_str("# no pattern\n");
    }
    for (i, v) in x.iter().enumerate() {
        let sign = if v.abs() <= ZERO_TOL {
            '0'
        } else if *v > 0.0 {
            '+'
        } else {
            '-'
        };
        let _ = writeln!(out, "{} {sign} {v}", i + 1);
    }
    out
}

fn header(out: &mut String, rows: usize, cols: usize) {
    let width = 2 * MARGIN + cols * CELL;
    let height = 2 * MARGIN + rows * CELL + LEGEND;
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="rgb(235,235,235)"/>"#);
}

fn cell(out: &mut String, r: usize, c: usize, shade: u8, label: usize) {
    let (x, y) = (MARGIN + c * CELL, MARGIN + r * CELL);
    let _ = writeln!(
        out,
        r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="rgb({shade},{shade},{shade})" stroke="rgb(100,100,100)" stroke-width="1"><title>{label}</title></rect>"#
    );
}

fn text(out: &mut String, x: usize, y: usize, body: &str) {
    let _ = writeln!(
        out,
        r#"<text x="{x}" y="{y}" font-family="sans-serif" font-size="12" fill="rgb(0,0,0)">{body}</text>"#
    );
}

fn footer(out: &mut String, x: &[f64], rows: usize) {
    if is_zero_state(x) {
        text(out, MARGIN, MARGIN + rows * CELL + 50, "no pattern");
    }
    out.push_str("</svg>\n");
}

fn sign_svg(x: &[f64], rows: usize, cols: usize) -> String {
    let mut out = String::new();
    header(&mut out, rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            let v = x[c * rows + r];
            let shade = if v.abs() <= ZERO_TOL {
                MIDTONE
            } else if v > 0.0 {
                0
            } else {
                255
            };
            cell(&mut out, r, c, shade, c * rows + r + 1);
        }
    }
    let y = MARGIN + rows * CELL + 20;
    text(&mut out, MARGIN, y, "black: x &gt; 0, white: x &lt; 0");
    footer(&mut out, x, rows);
    out
}

fn magnitude_svg(x: &[f64], rows: usize, cols: usize) -> String {
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let shade = |v: f64| -> u8 {
        if peak <= ZERO_TOL {
            return MIDTONE;
        }
        // −peak → 255, 0 → 128, +peak → 0
        let t = (v / peak).clamp(-1.0, 1.0);
        (127.5 * (1.0 - t)).round() as u8
    };
    let mut out = String::new();
    header(&mut out, rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            cell(&mut out, r, c, shade(x[c * rows + r]), c * rows + r + 1);
        }
    }
    // legend bar from −peak to +peak
    let y = MARGIN + rows * CELL + 8;
    let steps = 16;
    let bar = (cols * CELL).min(240);
    for k in 0..steps {
        let v = -peak + 2.0 * peak * (k as f64 + 0.5) / steps as f64;
        let s = shade(v);
        let w = bar / steps;
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{y}" width="{w}" height="10" fill="rgb({s},{s},{s})"/>"#,
            MARGIN + k * w
        );
    }
    text(&mut out, MARGIN, y + 24, &format!("{:.4}", -peak));
    text(&mut out, MARGIN + bar / 2 - 4, y + 24, "0");
    text(&mut out, MARGIN + bar - 40, y + 24, &format!("{peak:.4}"));
    footer(&mut out, x, rows);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_state_is_midtone_and_annotated() {
        let svg = sign_svg(&[0.0; 4], 2, 2);
        assert_eq!(svg.matches("rgb(128,128,128)").count(), 4);
        assert!(svg.contains("no pattern"));
        assert!(magnitude_svg(&[0.0; 4], 2, 2).contains("no pattern"));
    }

    #[test]
    fn cells_follow_column_major_labels() {
        // 2×2: vertices 1, 2 fill the first column
        let svg = sign_svg(&[1.0, 1.0, -1.0, -1.0], 2, 2);
        let first = svg.find("<title>1</title>").unwrap();
        assert!(svg[..first].ends_with(r#"fill="rgb(0,0,0)" stroke="rgb(100,100,100)" stroke-width="1">"#));
        let c0 = format!(r#"x="{MARGIN}" y="{}""#, MARGIN + CELL);
        let second = svg.find(&c0).unwrap();
        assert!(svg[second..].starts_with(&c0) && svg[second..].contains("<title>2</title>"));
        assert!(!svg.contains("no pattern"));
    }

    #[test]
    fn sign_list_fallback() {
        let text = sign_list(&[2.0, -1.0, 0.0]);
        assert_eq!(text, "1 + 2\n2 - -1\n3 0 0\n");
        assert!(sign_list(&[0.0]).starts_with("# no pattern"));
    }
}
