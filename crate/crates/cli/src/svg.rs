//! Static snapshot scenes: region outline, bars, agents and centroids.

use std::fmt::Write;

use coverage_core::geometry::{AnnularRegion, Vec2, TAU};
use coverage_core::sim::Record;

const OUTLINE_POINTS: usize = 256;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

fn polyline(out: &mut String, pts: impl Iterator<Item = Vec2>, style: &str) {
    out.push_str("  <polygon points=\"");
    for (k, p) in pts.enumerate() {
        if k > 0 {
            out.push(' ');
        }
        write!(out, "{:.5},{:.5}", p.x, p.y).unwrap();
    }
    writeln!(out, "\" {style}/>").unwrap();
}

fn outline<'a>(f: impl Fn(f64) -> f64 + 'a) -> impl Iterator<Item = Vec2> + 'a {
    (0..OUTLINE_POINTS).map(move |k| {
        let th = TAU * k as f64 / OUTLINE_POINTS as f64;
        Vec2::from_polar(f(th), th)
    })
}

fn star(center: Vec2, radius: f64) -> impl Iterator<Item = Vec2> {
    (0..10).map(move |k| {
        let r = if k % 2 == 0 { radius } else { 0.4 * radius };
        center + Vec2::from_polar(r, TAU * k as f64 / 10.0 + TAU / 4.0)
    })
}

pub fn snapshot(region: &AnnularRegion, record: &Record) -> String {
    let r = region.bounding_radius() * 1.05;
    let unit = r / 100.0;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="600" height="600">"#,
        -r,
        -r,
        2.0 * r,
        2.0 * r
    )
    .unwrap();
    writeln!(out, "  <title>t = {}</title>", record.t).unwrap();
    // y axis up
    out.push_str("  <g transform=\"scale(1,-1)\">\n");
    let style = format!("fill=\"none\" stroke=\"black\" stroke-width=\"{:.5}\"", 0.6 * unit);
    polyline(&mut out, outline(|th| region.r_out(th)), &style);
    polyline(&mut out, outline(|th| region.r_in(th)), &style);

    for (i, &phi) in record.phases.iter().enumerate() {
        let a = Vec2::from_polar(region.r_in(phi), phi);
        let b = Vec2::from_polar(region.r_out(phi), phi);
        writeln!(
            out,
            "  <line x1=\"{:.5}\" y1=\"{:.5}\" x2=\"{:.5}\" y2=\"{:.5}\" stroke=\"{}\" stroke-width=\"{:.5}\"/>",
            a.x,
            a.y,
            b.x,
            b.y,
            PALETTE[i % PALETTE.len()],
            0.8 * unit
        )
        .unwrap();
    }
    for (i, c) in record.centroids.iter().enumerate() {
        let style = format!("fill=\"{}\" fill-opacity=\"0.5\"", PALETTE[i % PALETTE.len()]);
        polyline(&mut out, star(*c, 3.0 * unit), &style);
    }
    for (i, p) in record.positions.iter().enumerate() {
        writeln!(
            out,
            "  <circle cx=\"{:.5}\" cy=\"{:.5}\" r=\"{:.5}\" fill=\"{}\"/>",
            p.x,
            p.y,
            1.6 * unit,
            PALETTE[i % PALETTE.len()]
        )
        .unwrap();
    }
    out.push_str("  </g>\n</svg>\n");
    out
}
