//! Label rows as SVG or as coloured terminal blocks. Colours depend only on
//! the class id, so the same input always gives the same bytes.

use std::fmt::Write;

use simseg::{to_timeline, LabelSequence};

const TITLE_W: f64 = 140.0;
const BAR_W: f64 = 800.0;
const ROW_H: f64 = 24.0;
const GAP: f64 = 8.0;

/// Golden-ratio hue walk over class ids.
pub fn class_rgb(id: usize) -> (u8, u8, u8) {
    let h = ((id as f64 + 1.0) * 0.618_033_988_749_895).fract();
    hsl_to_rgb(h, 0.65, if id.is_multiple_of(2) { 0.55 } else { 0.42 })
}

fn hsl_to_rgb(h: f64, s: f64, l: f64) -> (u8, u8, u8) {
    let q = if l < 0.5 {
        l * (1.0 + s)
    } else {
        l + s - l * s
    };
    let p = 2.0 * l - q;
    let channel = |t: f64| {
        let t = t.rem_euclid(1.0);
        let v = if t < 1.0 / 6.0 {
            p + (q - p) * 6.0 * t
        } else if t < 0.5 {
            q
        } else if t < 2.0 / 3.0 {
            p + (q - p) * (2.0 / 3.0 - t) * 6.0
        } else {
            p
        };
        (v * 255.0).round() as u8
    };
    (channel(h + 1.0 / 3.0), channel(h), channel(h - 1.0 / 3.0))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// One row per sequence; every row is scaled to the longest sequence.
pub fn svg(rows: &[(String, LabelSequence)]) -> String {
    let frames = rows.iter().map(|(_, l)| l.len()).max().unwrap_or(1).max(1);
    let height = rows.len() as f64 * (ROW_H + GAP) + GAP;
    let scale = BAR_W / frames as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{height:.0}" font-family="monospace" font-size="12">"#,
        TITLE_W + BAR_W + GAP
    );
    for (i, (title, labels)) in rows.iter().enumerate() {
        let y = GAP + i as f64 * (ROW_H + GAP);
        let _ = writeln!(
            out,
            r#"<text x="4" y="{:.1}">{}</text>"#,
            y + ROW_H * 0.7,
            escape(title)
        );
        for seg in to_timeline(labels).expect("non-empty labels").segments() {
            let (r, g, b) = class_rgb(seg.class);
            let _ = writeln!(
                out,
                r##"<rect x="{:.2}" y="{y:.1}" width="{:.2}" height="{ROW_H:.0}" fill="#{r:02x}{g:02x}{b:02x}"><title>{} [{}, {})</title></rect>"##,
                TITLE_W + seg.start as f64 * scale,
                seg.len() as f64 * scale,
                seg.class,
                seg.start,
                seg.end
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Each column shows the class of the frame at its centre as a 24-bit
/// coloured full block.
pub fn text(rows: &[(String, LabelSequence)], width: usize) -> String {
    let frames = rows.iter().map(|(_, l)| l.len()).max().unwrap_or(1);
    let width = width.max(1);
    let pad = rows
        .iter()
        .map(|(t, _)| t.chars().count())
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    for (title, labels) in rows {
        let _ = write!(out, "{title:<pad$} ");
        for c in 0..width {
            let t = ((2 * c + 1) * frames) / (2 * width);
            match labels.as_slice().get(t) {
                Some(&id) => {
                    let (r, g, b) = class_rgb(id);
                    let _ = write!(out, "\x1b[38;2;{r};{g};{b}m\u{2588}");
                }
                None => out.push(' '),
            }
        }
        out.push_str("\x1b[0m\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colours_are_stable_and_distinct_nearby() {
        assert_eq!(class_rgb(3), class_rgb(3));
        for a in 0..8 {
            for b in a + 1..8 {
                assert_ne!(class_rgb(a), class_rgb(b));
            }
        }
    }

    #[test]
    fn svg_has_one_rect_per_segment() {
        let rows = vec![
            (
                "GT".to_string(),
                LabelSequence::from_labels(vec![0, 0, 1, 1, 2]),
            ),
            (
                "Pr".to_string(),
                LabelSequence::from_labels(vec![0, 1, 1, 1, 1]),
            ),
        ];
        let s = svg(&rows);
        assert_eq!(s.matches("<rect").count(), 5);
        assert_eq!(s, svg(&rows));
        assert!(s.contains(">GT</text>"));
    }
}
