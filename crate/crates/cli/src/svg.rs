//! Minimal scatter-plot emitter.

use std::fmt::Write;

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 40.0;

const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#555555"];

fn span(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() || hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        let c = if lo.is_finite() { lo } else { 0.0 };
        (c - 1.0, c + 1.0)
    } else {
        (lo, hi)
    }
}

/// One `<circle>` per point, colored by label (1 or 2) when given.
pub fn scatter(points: &[(f64, f64)], labels: Option<&[u8]>, x_label: &str, y_label: &str) -> String {
    let (x0, x1) = span(points.iter().map(|p| p.0));
    let (y0, y1) = span(points.iter().map(|p| p.1));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (bx, by) = (MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{bx} {MARGIN} L{bx} {by} L{} {by}" stroke="black" fill="none"/>"#,
        WIDTH - MARGIN
    );
    if x0 < 0.0 && x1 > 0.0 {
        let _ = writeln!(s, r##"<line x1="{0:.2}" y1="{MARGIN}" x2="{0:.2}" y2="{by}" stroke="#bbbbbb"/>"##, sx(0.0));
    }
    if y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(s, r##"<line x1="{bx}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="#bbbbbb"/>"##, sy(0.0), WIDTH - MARGIN);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{x_label}</text>"#, WIDTH / 2.0, HEIGHT - 10.0);
    let _ = writeln!(
        s,
        r#"<text x="14" y="{0}" text-anchor="middle" font-size="13" transform="rotate(-90 14 {0})">{y_label}</text>"#,
        HEIGHT / 2.0
    );
    for (i, &(x, y)) in points.iter().enumerate() {
        let color = match labels.map(|l| l[i]) {
            Some(1) => COLORS[0],
            Some(2) => COLORS[1],
            _ => COLORS[2],
        };
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(x), sy(y));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_circle_per_point() {
        let pts = [(0.0, 1.0), (-1.0, 2.0), (3.0, -1.0)];
        let s = scatter(&pts, Some(&[1, 2, 1]), "PC1", "PC2");
        assert_eq!(s.matches("<circle").count(), 3);
        assert!(s.contains(r#"width="640""#));
        assert_eq!(s.matches(COLORS[1]).count(), 1);
    }

    #[test]
    fn degenerate_ranges() {
        let s = scatter(&[(1.0, 1.0), (1.0, 1.0)], None, "a", "b");
        assert_eq!(s.matches("<circle").count(), 2);
        assert!(!s.contains("NaN"));
        assert_eq!(scatter(&[], None, "a", "b").matches("<circle").count(), 0);
    }
}
