//! Minimal SVG writer for tiling and plane-map output.

use riemann_core::Complex64;

pub struct SvgDoc {
    body: String,
    min_x: f64,
    min_y: f64,
    max_x: f64,
    max_y: f64,
}

impl SvgDoc {
    pub fn new() -> Self {
        SvgDoc {
            body: String::new(),
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        }
    }

    fn cover(&mut self, p: Complex64) {
        self.min_x = self.min_x.min(p.re);
        self.max_x = self.max_x.max(p.re);
        // SVG's y axis points down; flip on output.
        self.min_y = self.min_y.min(-p.im);
        self.max_y = self.max_y.max(-p.im);
    }

    fn points_attr(&mut self, points: &[Complex64]) -> String {
        points
            .iter()
            .map(|p| {
                self.cover(*p);
                format!("{:.6},{:.6}", p.re, -p.im)
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn polygon(&mut self, points: &[Complex64], stroke: &str, fill: &str, width: f64) {
        let attr = self.points_attr(points);
        self.body.push_str(&format!(
            "  <polygon points=\"{attr}\" fill=\"{fill}\" stroke=\"{stroke}\" stroke-width=\"{width:.4}\"/>\n"
        ));
    }

    pub fn polyline(&mut self, points: &[Complex64], stroke: &str, width: f64) {
        if points.len() < 2 {
            return;
        }
        let attr = self.points_attr(points);
        self.body.push_str(&format!(
            "  <polyline points=\"{attr}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{width:.4}\"/>\n"
        ));
    }

    pub fn arrow(&mut self, from: Complex64, to: Complex64, stroke: &str, width: f64) {
        self.cover(from);
        self.cover(to);
        self.body.push_str(&format!(
            "  <line x1=\"{:.6}\" y1=\"{:.6}\" x2=\"{:.6}\" y2=\"{:.6}\" stroke=\"{stroke}\" stroke-width=\"{width:.4}\" marker-end=\"url(#arrowhead)\"/>\n",
            from.re, -from.im, to.re, -to.im
        ));
    }

    pub fn circle(&mut self, center: Complex64, r: f64, fill: &str) {
        self.cover(center + Complex64::new(r, r));
        self.cover(center - Complex64::new(r, r));
        self.body.push_str(&format!(
            "  <circle cx=\"{:.6}\" cy=\"{:.6}\" r=\"{r:.4}\" fill=\"{fill}\"/>\n",
            center.re, -center.im
        ));
    }

    pub fn finish(self) -> String {
        let (min_x, min_y) = (self.min_x, self.min_y);
        let w = (self.max_x - self.min_x).max(1e-6);
        let h = (self.max_y - self.min_y).max(1e-6);
        let pad = 0.05 * w.max(h);
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.6} {:.6} {:.6} {:.6}\">\n\
             <defs><marker id=\"arrowhead\" markerWidth=\"8\" markerHeight=\"6\" refX=\"7\" refY=\"3\" orient=\"auto\">\
             <polygon points=\"0 0, 8 3, 0 6\" fill=\"#444\"/></marker></defs>\n{}</svg>\n",
            min_x - pad,
            min_y - pad,
            w + 2.0 * pad,
            h + 2.0 * pad,
            self.body
        )
    }
}

impl Default for SvgDoc {
    fn default() -> Self {
        Self::new()
    }
}
