//! SVG plot of `log2 e(n)` against `n` with a guide line of the predicted
//! slope, shifted to pass through the centroid of the measured points.

use std::fmt::Write;

use sparsewiener::rates::Report;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

struct Series {
    title: String,
    points: Vec<(f64, f64)>,
    guide: Vec<(f64, f64)>,
}

fn series(report: &Report) -> Series {
    match report {
        Report::Rate(r) => {
            let points: Vec<(f64, f64)> = r
                .rows
                .iter()
                .filter(|row| row.error > 0.0)
                .map(|row| (row.n, row.error.log2()))
                .collect();
            let shape: Vec<(f64, f64)> = r.rows.iter().map(|row| (row.n, r.theory.omega(row.n).log2())).collect();
            Series {
                title: format!("{}: predicted E = {:.3}, L = {:.3}", r.scheme, r.theory.exponent, r.theory.log_power),
                guide: anchor(&shape, &points),
                points,
            }
        }
        Report::Sharpness(r) => {
            let points: Vec<(f64, f64)> = r
                .rows
                .iter()
                .filter(|row| row.worst_error > 0.0)
                .map(|row| (f64::from(row.n), row.worst_error.log2()))
                .collect();
            let shape: Vec<(f64, f64)> = r.rows.iter().map(|row| (f64::from(row.n), -r.expected * f64::from(row.n))).collect();
            Series {
                title: format!("{}: worst witness error, slope −{:.3}", r.scheme, r.expected),
                guide: anchor(&shape, &points),
                points,
            }
        }
    }
}

/// Shifts `shape` vertically so its mean matches the mean of `points`.
fn anchor(shape: &[(f64, f64)], points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if points.is_empty() || shape.is_empty() {
        return Vec::new();
    }
    let mean = |v: &[(f64, f64)]| v.iter().map(|p| p.1).sum::<f64>() / v.len() as f64;
    let shift = mean(points) - mean(shape);
    shape.iter().map(|&(x, y)| (x, y + shift)).collect()
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

pub fn render(report: &Report) -> String {
    let s = series(report);
    let all = s.points.iter().chain(&s.guide);
    let (x0, x1) = bounds(all.clone().map(|p| p.0));
    let (y0, y1) = bounds(all.map(|p| p.1));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(&s.title));
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{left},{top} L{left},{bottom} L{right},{bottom}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">n</text>"#, WIDTH / 2.0, HEIGHT - 16.0);
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">log2 error</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (x, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}">{x}</text>"#, sx(x), bottom + 16.0);
    }
    for y in [y0, y1] {
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.1}</text>"#, left - 6.0, sy(y) + 4.0);
    }
    if s.guide.len() >= 2 {
        let path: Vec<String> = s.guide.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="gray" stroke-dasharray="6 4"/>"#,
            path.join(" ")
        );
    }
    if !s.points.is_empty() {
        let path: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="steelblue"/>"#, path.join(" "));
        for &(x, y) in &s.points {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, sx(x), sy(y));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
