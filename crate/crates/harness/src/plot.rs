//! Minimal static SVG plots. Every marker carries its data coordinates in
//! `data-x`, `data-y` (and `data-z` for heatmaps) so that tests can read the
//! plotted values back.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    SpectrumHeatmap,
    VarianceVsA,
    VarianceVsK,
    SpacingSweep,
}

impl PlotKind {
    pub fn tag(&self) -> &'static str {
        match self {
            PlotKind::SpectrumHeatmap => "spectrum-heatmap",
            PlotKind::VarianceVsA => "variance-vs-a",
            PlotKind::VarianceVsK => "variance-vs-k",
            PlotKind::SpacingSweep => "spacing-sweep",
        }
    }

    fn log_axes(&self) -> (bool, bool) {
        match self {
            PlotKind::SpectrumHeatmap => (false, false),
            PlotKind::VarianceVsA | PlotKind::VarianceVsK => (true, true),
            PlotKind::SpacingSweep => (false, true),
        }
    }

    fn labels(&self) -> (&'static str, &'static str) {
        match self {
            PlotKind::SpectrumHeatmap => ("k_x", "k_y"),
            PlotKind::VarianceVsA => ("a", "variance"),
            PlotKind::VarianceVsK => ("oversampling k", "variance"),
            PlotKind::SpacingSweep => ("spacing", "rmse %"),
        }
    }
}

/// One data series. `z` is only used by heatmaps.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl Series {
    pub fn new(label: &str, x: Vec<f64>, y: Vec<f64>) -> Self {
        Series { label: label.to_string(), x, y, z: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub kind: PlotKind,
    pub title: String,
    pub series: Vec<Series>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn axis(values: impl Iterator<Item = f64>, log: bool) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        let v = if log { v.max(f64::MIN_POSITIVE).log10() } else { v };
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

pub fn render(plot: &Plot) -> Result<String, HarnessError> {
    if plot.series.iter().all(|s| s.x.is_empty()) {
        return Err(HarnessError::Parameter("cannot plot an empty series".into()));
    }
    for s in &plot.series {
        if s.x.len() != s.y.len() || (plot.kind == PlotKind::SpectrumHeatmap && s.z.len() != s.x.len()) {
            return Err(HarnessError::Parameter(format!("series `{}` has mismatched coordinate lengths", s.label)));
        }
    }
    let (lx, ly) = plot.kind.log_axes();
    let (x0, x1) = axis(plot.series.iter().flat_map(|s| s.x.iter().copied()), lx);
    let (y0, y1) = axis(plot.series.iter().flat_map(|s| s.y.iter().copied()), ly);
    let px = |x: f64| {
        let x = if lx { x.max(f64::MIN_POSITIVE).log10() } else { x };
        MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN)
    };
    let py = |y: f64| {
        let y = if ly { y.max(f64::MIN_POSITIVE).log10() } else { y };
        H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN)
    };
    let (xl, yl) = plot.kind.labels();
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" data-kind="{}">"#, plot.kind.tag());
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#, W / 2.0, escape(&plot.title));
    let _ = writeln!(
        svg,
        r#"<path d="M{m} {t} L{m} {b} L{r} {b}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    let scale = |log: bool| if log { " (log10)" } else { "" };
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}{}</text>"#, W / 2.0, H - 20.0, xl, scale(lx));
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle" font-family="sans-serif" font-size="12">{}{}</text>"#,
        H / 2.0,
        H / 2.0,
        yl,
        scale(ly)
    );
    for (lo, hi, x, y, anchor) in [(x0, x1, true, H - MARGIN + 16.0, "middle"), (y0, y1, false, 0.0, "end")] {
        for (v, pos) in [(lo, 0.0), (hi, 1.0)] {
            let label = format!("{:.3}", v);
            if x {
                let at = MARGIN + pos * (W - 2.0 * MARGIN);
                let _ = writeln!(svg, r#"<text x="{at}" y="{y}" text-anchor="{anchor}" font-family="sans-serif" font-size="10">{label}</text>"#);
            } else {
                let at = H - MARGIN - pos * (H - 2.0 * MARGIN);
                let _ = writeln!(svg, r#"<text x="{}" y="{at}" text-anchor="{anchor}" font-family="sans-serif" font-size="10">{label}</text>"#, MARGIN - 4.0);
            }
        }
    }
    let zmax = plot.series.iter().flat_map(|s| s.z.iter().copied()).fold(0.0f64, |m, z| m.max(z.abs()));
    for (i, s) in plot.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(svg, r#"<g data-series="{}">"#, escape(&s.label));
        if plot.kind != PlotKind::SpectrumHeatmap && s.x.len() > 1 {
            let pts: Vec<String> = s.x.iter().zip(&s.y).map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
            let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}"/>"#, pts.join(" "));
        }
        for j in 0..s.x.len() {
            let (cx, cy) = (px(s.x[j]), py(s.y[j]));
            if plot.kind == PlotKind::SpectrumHeatmap {
                let shade = if zmax > 0.0 { (s.z[j].abs() / zmax).sqrt() } else { 0.0 };
                let level = (255.0 * (1.0 - shade)).round() as u8;
                let _ = writeln!(
                    svg,
                    r#"<rect x="{:.2}" y="{:.2}" width="6" height="6" fill="rgb(255,{level},{level})" data-x="{}" data-y="{}" data-z="{}"/>"#,
                    cx - 3.0,
                    cy - 3.0,
                    s.x[j],
                    s.y[j],
                    s.z[j]
                );
            } else {
                let _ = writeln!(svg, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3" fill="{color}" data-x="{}" data-y="{}"/>"#, s.x[j], s.y[j]);
            }
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            W - MARGIN - 120.0,
            MARGIN + 14.0 * i as f64,
            escape(&s.label)
        );
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_plot(plot: &Plot, path: &Path) -> Result<(), HarnessError> {
    let svg = render(plot)?;
    std::fs::write(path, svg)?;
    Ok(())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// `(x, y)` pairs read back from `data-x` / `data-y` attributes.
pub fn read_points(svg: &str) -> Vec<(f64, f64)> {
    let attr = |tag: &str, name: &str| -> Option<f64> {
        let key = format!("{name}=\"");
        let i = tag.find(&key)? + key.len();
        let j = tag[i..].find('"')? + i;
        tag[i..j].parse().ok()
    };
    svg.lines()
        .filter_map(|l| Some((attr(l, "data-x")?, attr(l, "data-y")?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(kind: PlotKind) -> Plot {
        Plot { kind, title: "t".into(), series: vec![Series::new("s", vec![2.0], vec![3.0])] }
    }

    #[test]
    fn single_point_has_one_marker() {
        let svg = render(&one(PlotKind::VarianceVsK)).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(read_points(&svg), vec![(2.0, 3.0)]);
    }

    #[test]
    fn identical_inputs_identical_output() {
        let p = Plot {
            kind: PlotKind::SpacingSweep,
            title: "sweep <a&b>".into(),
            series: vec![Series::new("x", vec![1.0, 2.0, 3.0], vec![1e-12, 5.0, 30.0])],
        };
        assert_eq!(render(&p).unwrap(), render(&p.clone()).unwrap());
        assert!(render(&p).unwrap().contains("&lt;a&amp;b&gt;"));
    }

    #[test]
    fn empty_series_is_rejected() {
        let p = Plot { kind: PlotKind::VarianceVsA, title: String::new(), series: vec![Series::new("e", vec![], vec![])] };
        assert!(matches!(render(&p), Err(HarnessError::Parameter(_))));
    }

    #[test]
    fn heatmap_needs_values() {
        let mut p = one(PlotKind::SpectrumHeatmap);
        assert!(render(&p).is_err());
        p.series[0].z = vec![1.0];
        assert!(render(&p).unwrap().contains("data-z=\"1\""));
    }
}
