//! Plain-text SVG line chart of mean ARI against noise_dims, one panel per
//! configuration, shaded by one standard deviation.

use std::fmt::Write;
use ucsl::experiment::{CellSummary, Method};

const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 240.0;
const MARGIN_L: f64 = 48.0;
const MARGIN_R: f64 = 12.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 36.0;
const LEGEND_H: f64 = 28.0;

fn color(method: Method) -> &'static str {
    match method {
        Method::Ucsl => "#d62728",
        Method::UcslUniform => "#ff7f0e",
        Method::Kmeans => "#1f77b4",
        Method::Gmm => "#2ca02c",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn unique<T: PartialEq + Copy>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = Vec::new();
    for i in items {
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

pub fn ari_chart(cells: &[CellSummary]) -> String {
    let configs = unique(cells.iter().map(|c| c.config.as_str()));
    let methods = unique(cells.iter().map(|c| c.method));
    let finite = cells.iter().filter(|c| c.mean_ari.is_finite());
    let y_min = finite.map(|c| c.mean_ari - c.std_ari).fold(0.0f64, f64::min).max(-1.0).floor();
    let (y_min, y_max) = (y_min, 1.0);

    let width = PANEL_W * configs.len().max(1) as f64;
    let height = PANEL_H + LEGEND_H;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);

    for (p, config) in configs.iter().enumerate() {
        let rows: Vec<&CellSummary> = cells.iter().filter(|c| c.config == *config).collect();
        let xs = unique(rows.iter().map(|c| c.noise_dims));
        let x_max = xs.iter().copied().max().unwrap_or(0).max(1) as f64;
        let x0 = p as f64 * PANEL_W + MARGIN_L;
        let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
        let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
        let px = |n: usize| x0 + n as f64 / x_max * plot_w;
        let py = |v: f64| MARGIN_T + (y_max - v.clamp(y_min, y_max)) / (y_max - y_min) * plot_h;

        let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-weight="bold">{}</text>"#, x0 + plot_w / 2.0, escape(config));
        let _ = writeln!(s, r##"<rect x="{x0}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>"##);
        let ticks = ((y_max - y_min) / 0.25).round() as usize;
        for t in 0..=ticks {
            let v = y_min + t as f64 * 0.25;
            let y = py(v);
            let _ = writeln!(s, r##"<line x1="{x0}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/>"##, x0 + plot_w);
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{v:.2}</text>"#, x0 - 4.0, y + 4.0);
        }
        for &n in &xs {
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{n}</text>"#, px(n), MARGIN_T + plot_h + 14.0);
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">noise dimensions</text>"#, x0 + plot_w / 2.0, PANEL_H - 6.0);
        if p == 0 {
            let _ = writeln!(
                s,
                r#"<text x="12" y="{}" text-anchor="middle" transform="rotate(-90 12 {})">ARI</text>"#,
                MARGIN_T + plot_h / 2.0,
                MARGIN_T + plot_h / 2.0
            );
        }

        for &m in &methods {
            let mut pts: Vec<&CellSummary> = rows.iter().copied().filter(|c| c.method == m && c.mean_ari.is_finite()).collect();
            pts.sort_by_key(|c| c.noise_dims);
            if pts.is_empty() {
                continue;
            }
            let upper = pts.iter().map(|c| format!("{:.2},{:.2}", px(c.noise_dims), py(c.mean_ari + c.std_ari)));
            let lower = pts.iter().rev().map(|c| format!("{:.2},{:.2}", px(c.noise_dims), py(c.mean_ari - c.std_ari)));
            let band: Vec<String> = upper.chain(lower).collect();
            let _ = writeln!(s, r#"<polygon points="{}" fill="{}" fill-opacity="0.18" stroke="none"/>"#, band.join(" "), color(m));
            let line: Vec<String> = pts.iter().map(|c| format!("{:.2},{:.2}", px(c.noise_dims), py(c.mean_ari))).collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#, line.join(" "), color(m));
            for c in &pts {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"#, px(c.noise_dims), py(c.mean_ari), color(m));
            }
        }
    }

    for (i, &m) in methods.iter().enumerate() {
        let x = MARGIN_L + i as f64 * 120.0;
        let y = PANEL_H + LEGEND_H / 2.0;
        let _ = writeln!(s, r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="3"/>"#, x + 20.0, color(m));
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, x + 26.0, y + 4.0, m.name());
    }
    s.push_str("</svg>\n");
    s
}
