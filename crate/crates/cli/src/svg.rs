//! Static SVG figures: MDS scatter plots and barcode diagrams.

use std::fmt::Write as _;

use topobar::Barcode;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// One scatter point. Points sharing a label share a color.
pub struct Point {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub label: Option<String>,
}

/// Scatter plot scaled to fit a square canvas, with a legend per label.
pub fn scatter(points: &[Point], title: &str) -> String {
    const SIZE: f64 = 480.0;
    const PAD: f64 = 40.0;
    let mut labels: Vec<&str> = points.iter().filter_map(|p| p.label.as_deref()).collect();
    labels.sort_unstable();
    labels.dedup();

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo = lo.min(p.x).min(p.y);
        hi = hi.max(p.x).max(p.y);
    }
    if !lo.is_finite() {
        lo = -1.0;
        hi = 1.0;
    }
    // equal scale on both axes so distances read true
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mid = (hi + lo) / 2.0;
    let scale = (SIZE - 2.0 * PAD) / span;
    let px = |v: f64| SIZE / 2.0 + (v - mid) * scale;
    let py = |v: f64| SIZE / 2.0 - (v - mid) * scale;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{}" viewBox="0 0 {SIZE} {}">"#,
        SIZE + 20.0 * labels.len() as f64,
        SIZE + 20.0 * labels.len() as f64
    )
    .unwrap();
    writeln!(s, "<title>{}</title>", escape(title)).unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        SIZE / 2.0,
        escape(title)
    )
    .unwrap();
    writeln!(
        s,
        r##"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="#999"/>"##,
        SIZE - 2.0 * PAD,
        SIZE - 2.0 * PAD
    )
    .unwrap();
    for p in points {
        let color = p
            .label
            .as_deref()
            .and_then(|l| labels.iter().position(|x| *x == l))
            .map_or("#333333", |i| PALETTE[i % PALETTE.len()]);
        writeln!(
            s,
            r#"<circle cx="{:.3}" cy="{:.3}" r="4" fill="{color}" fill-opacity="0.8"><title>{}</title></circle>"#,
            px(p.x),
            py(p.y),
            escape(&p.id)
        )
        .unwrap();
    }
    for (i, l) in labels.iter().enumerate() {
        let y = SIZE + 20.0 * i as f64;
        writeln!(
            s,
            r#"<circle cx="{PAD}" cy="{}" r="5" fill="{}"/><text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            y - 4.0,
            PALETTE[i % PALETTE.len()],
            PAD + 12.0,
            y,
            escape(l)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Horizontal bars on a `[0, cap]` axis, longest first.
pub fn barcode(b: &Barcode, title: &str, cap: f64) -> String {
    const WIDTH: f64 = 600.0;
    const LEFT: f64 = 30.0;
    const TOP: f64 = 40.0;
    const ROW: f64 = 8.0;
    let mut bars = b.intervals().to_vec();
    bars.sort_by(|x, y| y.len().total_cmp(&x.len()).then(x.birth.total_cmp(&y.birth)));
    let plot_w = WIDTH - 2.0 * LEFT;
    let x = |v: f64| LEFT + v / cap * plot_w;
    let axis_y = TOP + ROW * bars.len() as f64 + 10.0;
    let height = axis_y + 30.0;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    )
    .unwrap();
    writeln!(s, "<title>{}</title>", escape(title)).unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    )
    .unwrap();
    for (i, bar) in bars.iter().enumerate() {
        writeln!(
            s,
            r##"<rect class="bar" x="{:.3}" y="{:.3}" width="{:.3}" height="{}" fill="#1f77b4"><title>[{}, {}]</title></rect>"##,
            x(bar.birth),
            TOP + ROW * i as f64,
            x(bar.death) - x(bar.birth),
            ROW - 2.0,
            bar.birth,
            bar.death
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{axis_y}" x2="{}" y2="{axis_y}" stroke="black"/>"#,
        x(cap)
    )
    .unwrap();
    let ticks = (cap * 10.0).round() as usize;
    for t in 0..=ticks {
        let v = t as f64 / 10.0;
        writeln!(
            s,
            r#"<line x1="{0:.3}" y1="{axis_y}" x2="{0:.3}" y2="{1}" stroke="black"/><text x="{0:.3}" y="{2}" text-anchor="middle" font-family="sans-serif" font-size="10">{3:.1}</text>"#,
            x(v),
            axis_y + 4.0,
            axis_y + 16.0,
            v
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}
