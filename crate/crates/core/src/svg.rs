//! Dependency-free SVG scatter of Pareto fronts.

use crate::report::Report;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 28.0;
const MARGIN_BOTTOM: f64 = 48.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

/// Scatter of every per-trial front point colored by strategy, with the
/// cross-strategy front drawn as a black staircase. Output is byte-stable
/// for a given report.
pub fn pareto_scatter_svg(report: &Report) -> String {
    let points = &report.per_trial_fronts;
    let (mut u_lo, mut u_hi, mut d_lo, mut d_hi) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points.iter().chain(&report.summary.global_front) {
        u_lo = u_lo.min(p.utility);
        u_hi = u_hi.max(p.utility);
        d_lo = d_lo.min(p.der);
        d_hi = d_hi.max(p.der);
    }
    if !u_lo.is_finite() {
        (u_lo, u_hi, d_lo, d_hi) = (0.0, 1.0, 0.0, 1.0);
    }
    let pad = |lo: &mut f64, hi: &mut f64| {
        let span = (*hi - *lo).max(1e-9);
        *lo -= 0.05 * span;
        *hi += 0.05 * span;
    };
    pad(&mut u_lo, &mut u_hi);
    pad(&mut d_lo, &mut d_hi);

    let sx = |u: f64| MARGIN_LEFT + (u - u_lo) / (u_hi - u_lo) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT);
    let sy = |d: f64| HEIGHT - MARGIN_BOTTOM - (d - d_lo) / (d_hi - d_lo) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        MARGIN_LEFT,
        HEIGHT - MARGIN_BOTTOM,
        WIDTH - MARGIN_RIGHT,
        HEIGHT - MARGIN_BOTTOM
    ));
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        MARGIN_LEFT,
        MARGIN_TOP,
        MARGIN_LEFT,
        HEIGHT - MARGIN_BOTTOM
    ));
    for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let u = u_lo + frac * (u_hi - u_lo);
        let d = d_lo + frac * (d_hi - d_lo);
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"middle\">{u:.3}</text>\n",
            sx(u),
            HEIGHT - MARGIN_BOTTOM + 16.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"end\">{d:.3}</text>\n",
            MARGIN_LEFT - 6.0,
            sy(d) + 3.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">utility</text>\n",
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 10.0
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.2})\">der</text>\n",
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0
    ));

    // Per-trial front points, one color per strategy.
    let strategies: Vec<&str> = {
        let mut names: Vec<&str> = Vec::new();
        for p in points {
            if !names.contains(&p.strategy.as_str()) {
                names.push(&p.strategy);
            }
        }
        names
    };
    for (si, name) in strategies.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        for p in points.iter().filter(|p| p.strategy == *name) {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\" fill-opacity=\"0.65\"/>\n",
                sx(p.utility),
                sy(p.der)
            ));
        }
    }

    // Global front as a black staircase with ring markers.
    let mut global: Vec<(f64, f64)> = report
        .summary
        .global_front
        .iter()
        .map(|p| (p.utility, p.der))
        .collect();
    global.sort_by(|a, b| a.0.total_cmp(&b.0));
    if !global.is_empty() {
        let mut path = String::new();
        for (i, &(u, d)) in global.iter().enumerate() {
            if i == 0 {
                path.push_str(&format!("M {:.2} {:.2}", sx(u), sy(d)));
            } else {
                let (pu, _) = global[i - 1];
                let _ = pu;
                path.push_str(&format!(" H {:.2} V {:.2}", sx(u), sy(d)));
            }
        }
        svg.push_str(&format!(
            "<path d=\"{path}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.2\"/>\n"
        ));
        for &(u, d) in &global {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4.5\" fill=\"none\" stroke=\"black\" stroke-width=\"1.2\"/>\n",
                sx(u),
                sy(d)
            ));
        }
    }

    // Legend.
    for (si, name) in strategies.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let y = MARGIN_TOP + 14.0 * si as f64;
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"{color}\"/>\n",
            MARGIN_LEFT + 10.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{name}</text>\n",
            MARGIN_LEFT + 20.0,
            y + 3.5
        ));
    }

    svg.push_str("</svg>\n");
    svg
}
