//! Run reports and the small SVG writers used by the CLI.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::packing::CirclePacking;

/// How a measured value must relate to its bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">")]
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub claim: String,
    pub measured: f64,
    pub relation: Relation,
    pub bound: f64,
    pub pass: bool,
}

impl Certificate {
    pub fn new(claim: impl Into<String>, measured: f64, relation: Relation, bound: f64) -> Self {
        // NaN never passes
        let pass = match relation {
            Relation::Below => measured < bound,
            Relation::AtMost => measured <= bound,
            Relation::Above => measured > bound,
        };
        Certificate {
            claim: claim.into(),
            measured,
            relation,
            bound,
            pass,
        }
    }

    pub fn at_most(claim: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::new(claim, measured, Relation::AtMost, bound)
    }

    pub fn below(claim: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::new(claim, measured, Relation::Below, bound)
    }

    pub fn above(claim: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::new(claim, measured, Relation::Above, bound)
    }
}

/// Output of one CLI command. Contains no timestamps, so identical inputs
/// give byte-identical JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Map<String, Value>,
    pub results: Map<String, Value>,
    pub certificates: Vec<Certificate>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        RunReport {
            command: command.to_string(),
            inputs: Map::new(),
            results: Map::new(),
            certificates: Vec::new(),
        }
    }

    pub fn input(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.inputs.insert(key.into(), to_value(value));
        self
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.results.insert(key.into(), to_value(value));
        self
    }

    pub fn certify(&mut self, c: Certificate) -> &mut Self {
        self.certificates.push(c);
        self
    }

    pub fn passed(&self) -> bool {
        self.certificates.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("command: {}\n", self.command);
        for (section, map) in [("inputs", &self.inputs), ("results", &self.results)] {
            if map.is_empty() {
                continue;
            }
            let _ = writeln!(s, "{section}:");
            for (k, v) in map {
                let _ = writeln!(s, "  {k}: {v}");
            }
        }
        if !self.certificates.is_empty() {
            let _ = writeln!(s, "certificates:");
        }
        for c in &self.certificates {
            let rel = match c.relation {
                Relation::Below => "<",
                Relation::AtMost => "<=",
                Relation::Above => ">",
            };
            let _ = writeln!(
                s,
                "  [{}] {}: {:.6e} {rel} {:.6e}",
                if c.pass { "pass" } else { "FAIL" },
                c.claim,
                c.measured,
                c.bound
            );
        }
        s
    }
}

fn to_value(v: impl Serialize) -> Value {
    // non-finite floats become null rather than failing
    serde_json::to_value(v).unwrap_or(Value::Null)
}

/// Circles, tangency edges and (optionally) dual edges as an SVG document.
pub fn packing_svg(packing: &CirclePacking, dual: bool) -> String {
    let (mut lo, mut hi) = (
        nalgebra::Vector2::repeat(f64::INFINITY),
        nalgebra::Vector2::repeat(f64::NEG_INFINITY),
    );
    for c in packing.circles() {
        lo = lo.inf(&c.center.add_scalar(-c.radius));
        hi = hi.sup(&c.center.add_scalar(c.radius));
    }
    let span = (hi - lo).max().max(1e-300);
    let size = 800.0;
    let k = size / span;
    let map = |p: &crate::geometry::Point| ((p.x - lo.x) * k, (hi.y - p.y) * k);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.3} {h:.3}\">\n",
        w = (hi.x - lo.x) * k,
        h = (hi.y - lo.y) * k
    );
    for c in packing.circles() {
        let (x, y) = map(&c.center);
        let _ = writeln!(
            s,
            "<circle cx=\"{x:.4}\" cy=\"{y:.4}\" r=\"{:.4}\" fill=\"none\" stroke=\"black\" stroke-width=\"0.5\"/>",
            c.radius * k
        );
    }
    for &(i, j) in packing.edge_indices() {
        let (x1, y1) = map(&packing.circle_at(i).center);
        let (x2, y2) = map(&packing.circle_at(j).center);
        let _ = writeln!(
            s,
            "<line x1=\"{x1:.4}\" y1=\"{y1:.4}\" x2=\"{x2:.4}\" y2=\"{y2:.4}\" stroke=\"#888\" stroke-width=\"0.3\"/>"
        );
    }
    if dual {
        for e in packing.dual_edges() {
            if let (a, Some(b)) = e.endpoints {
                let (x1, y1) = map(&a);
                let (x2, y2) = map(&b);
                let _ = writeln!(
                    s,
                    "<line x1=\"{x1:.4}\" y1=\"{y1:.4}\" x2=\"{x2:.4}\" y2=\"{y2:.4}\" stroke=\"#c33\" stroke-width=\"0.3\"/>"
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Line plot with markers, axes labelled by `x_label` and `y_label`.
pub fn line_plot_svg(points: &[(f64, f64)], x_label: &str, y_label: &str) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let fold = |f: fn(f64, f64) -> f64, init: f64, pick: fn(&(f64, f64)) -> f64| {
        points.iter().map(pick).fold(init, f)
    };
    let (x0, x1) = (
        fold(f64::min, f64::INFINITY, |p| p.0),
        fold(f64::max, f64::NEG_INFINITY, |p| p.0),
    );
    let (y0, y1) = (
        fold(f64::min, f64::INFINITY, |p| p.1),
        fold(f64::max, f64::NEG_INFINITY, |p| p.1),
    );
    let sx = |x: f64| m + (x - x0) / (x1 - x0).max(1e-300) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0).max(1e-300) * (h - 2.0 * m);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    );
    let _ = writeln!(
        s,
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>",
        b = h - m,
        r = w - m
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>\n<text x=\"15\" y=\"{}\" transform=\"rotate(-90 15 {})\" text-anchor=\"middle\">{y_label}</text>",
        w / 2.0,
        h - 15.0,
        h / 2.0,
        h / 2.0
    );
    let path: Vec<String> = points
        .iter()
        .map(|&(x, y)| format!("{:.3},{:.3}", sx(x), sy(y)))
        .collect();
    let _ = writeln!(
        s,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#246\"/>",
        path.join(" ")
    );
    for &(x, y) in points {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"3\" fill=\"#246\"/>\n<text x=\"{:.3}\" y=\"{:.3}\" font-size=\"10\">({x:.3}, {y:.4})</text>",
            sx(x),
            sy(y),
            sx(x) + 5.0,
            sy(y) - 5.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Least-squares line `y = a + b x`, with the largest residual relative to
/// the spread of `y` (or to `max |y|` when `y` is flat).
pub fn affine_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let worst = points
        .iter()
        .map(|p| (p.1 - a - b * p.0).abs())
        .fold(0.0, f64::max);
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| {
            (l.min(p.1), h.max(p.1))
        });
    let scale = if hi > lo {
        hi - lo
    } else {
        hi.abs().max(lo.abs()).max(1e-300)
    };
    (a, b, worst / scale)
}
