//! Minimal SVG scatter of edge count against validation error.

use std::fmt::Write;

use crate::sgm::CandidatePoint;

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;

/// All grid points in grey, front points in red joined by a polyline.
pub fn scatter_svg(points: &[CandidatePoint], front_indices: &[usize]) -> String {
    let xs = points.iter().map(|c| c.edge_count as f64);
    let ys = points.iter().map(|c| c.error_val);
    let (x0, x1) = bounds(xs);
    let (y0, y1) = bounds(ys);
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{PAD} {PAD} V{b} H{r}" fill="none" stroke="black"/>"#,
        b = H - PAD,
        r = W - PAD
    );
    for (v, x) in [(x0, sx(x0)), (x1, sx(x1))] {
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{v}</text>"#, H - PAD + 16.0);
    }
    for (v, y) in [(y0, sy(y0)), (y1, sy(y1))] {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{y:.1}" text-anchor="end">{v:.3}</text>"#, PAD - 6.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">edges</text>"#,
        W / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">validation error</text>"#,
        H / 2.0,
        H / 2.0
    );
    for c in points {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="#999"/>"##,
            sx(c.edge_count as f64),
            sy(c.error_val)
        );
    }
    if !front_indices.is_empty() {
        let path: Vec<String> = front_indices
            .iter()
            .map(|&i| format!("{:.2},{:.2}", sx(points[i].edge_count as f64), sy(points[i].error_val)))
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="red"/>"#, path.join(" "));
        for &i in front_indices {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="red"/>"#,
                sx(points[i].edge_count as f64),
                sy(points[i].error_val)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GaugeGraph;
    use std::sync::Arc;

    #[test]
    fn emits_points_and_front() {
        let g = Arc::new(GaugeGraph::empty(vec!["A".into()]));
        let pts: Vec<CandidatePoint> = [(1, 0.5), (2, 0.3), (3, 0.4)]
            .iter()
            .map(|&(e, x)| CandidatePoint {
                lambda_index: 0,
                k_requested: e,
                edge_count: e,
                error_val: x,
                lambda: 0.1,
                tau: 0.0,
                converged: true,
                graph: Arc::clone(&g),
            })
            .collect();
        let svg = scatter_svg(&pts, &[0, 1]);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<circle").count(), 5);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
