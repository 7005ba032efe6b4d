//! Minimal self-contained SVG documents for plots and shape overlays.

use std::fmt::Write as _;

use crate::types::Vec2;

/// An SVG canvas mapping a data rectangle onto a pixel viewport (y up).
#[derive(Debug, Clone)]
pub struct SvgCanvas {
    width: f64,
    height: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
    body: String,
}

impl SvgCanvas {
    pub fn new(width: f64, height: f64, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        Self {
            width,
            height,
            x_range,
            y_range,
            body: String::new(),
        }
    }

    fn map(&self, p: Vec2) -> (f64, f64) {
        let (x0, x1) = self.x_range;
        let (y0, y1) = self.y_range;
        (
            (p[0] - x0) / (x1 - x0) * self.width,
            self.height - (p[1] - y0) / (y1 - y0) * self.height,
        )
    }

    pub fn polyline(&mut self, points: &[Vec2], closed: bool, stroke: &str, width: f64) {
        if points.is_empty() {
            return;
        }
        let coords: Vec<String> = points
            .iter()
            .map(|p| {
                let (x, y) = self.map(*p);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let tag = if closed { "polygon" } else { "polyline" };
        let _ = writeln!(
            self.body,
            r#"<{tag} points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"/>"#,
            coords.join(" ")
        );
    }

    pub fn points(&mut self, points: &[Vec2], radius: f64, fill: &str) {
        for p in points {
            let (x, y) = self.map(*p);
            let _ = writeln!(self.body, r#"<circle cx="{x:.3}" cy="{y:.3}" r="{radius}" fill="{fill}"/>"#);
        }
    }

    /// Filled bars `(left, right, height)` in data units.
    pub fn bars(&mut self, bars: &[(f64, f64, f64)], fill: &str) {
        for &(l, r, h) in bars {
            let (x0, y0) = self.map([l, h]);
            let (x1, y1) = self.map([r, self.y_range.0]);
            let _ = writeln!(
                self.body,
                r#"<rect x="{x0:.3}" y="{y0:.3}" width="{:.3}" height="{:.3}" fill="{fill}" fill-opacity="0.6"/>"#,
                (x1 - x0).max(0.0),
                (y1 - y0).max(0.0)
            );
        }
    }

    pub fn text(&mut self, at: Vec2, text: &str) {
        let (x, y) = self.map(at);
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.3}" y="{y:.3}" font-family="sans-serif" font-size="12">{text}</text>"#
        );
    }

    pub fn render(&self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_elements() {
        let mut c = SvgCanvas::new(100.0, 100.0, (-1.0, 1.0), (-1.0, 1.0));
        c.polyline(&[[-1.0, -1.0], [1.0, 1.0]], false, "black", 1.0);
        c.points(&[[0.0, 0.0]], 2.0, "red");
        let s = c.render();
        assert!(s.contains(r#"points="0.000,100.000 100.000,0.000""#));
        assert!(s.contains(r#"cx="50.000" cy="50.000""#));
    }
}
