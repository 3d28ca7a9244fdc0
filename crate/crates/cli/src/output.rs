//! Artifact writers: CSV traces and a minimal SVG line chart.

use std::fmt::Write;

use epst::eval::ErrorTrace;
use epst::runner::AlgorithmResult;

/// Combined trace followed by one column pair per scoring group.
pub fn trace_csv(result: &AlgorithmResult) -> String {
    let mut out = String::from("bin_start,mean_error,samples");
    for (name, _) in &result.groups {
        let _ = write!(out, ",{name}_mean_error,{name}_samples");
    }
    out.push('\n');
    for (k, bin) in result.trace.bins.iter().enumerate() {
        let _ = write!(out, "{},{:.6},{}", bin.start, bin.mean_error, bin.samples);
        for (_, g) in &result.groups {
            let b = &g.bins[k];
            let _ = write!(out, ",{:.6},{}", b.mean_error, b.samples);
        }
        out.push('\n');
    }
    out
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Error traces over time on a fixed `[0, 1]` axis. Bins without samples
/// break the line.
pub fn line_chart(title: &str, series: &[(String, &ErrorTrace)]) -> String {
    let (w, h, left, right, top, bottom) = (800.0, 400.0, 60.0, 20.0, 40.0, 40.0);
    let x_max = series
        .iter()
        .filter_map(|(_, t)| t.bins.last().map(|b| (b.start + t.bin_width) as f64))
        .fold(1.0, f64::max);
    let px = |x: f64| left + x / x_max * (w - left - right);
    let py = |y: f64| top + (1.0 - y.clamp(0.0, 1.0)) * (h - top - bottom);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{title}</text>"#,
        w / 2.0
    );
    let _ = writeln!(
        s,
        r#"<path d="M{l},{t} L{l},{b} L{r},{b}" fill="none" stroke="black"/>"#,
        l = left,
        t = top,
        b = h - bottom,
        r = w - right
    );
    for k in 0..=4 {
        let y = k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{y:.2}</text>"#,
            left - 6.0,
            py(y) + 4.0
        );
    }
    for k in 0..=4 {
        let x = x_max * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{x:.0}</text>"#,
            px(x),
            h - bottom + 16.0
        );
    }
    for (i, (name, trace)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut runs: Vec<Vec<String>> = vec![Vec::new()];
        for b in &trace.bins {
            if b.samples == 0 {
                runs.push(Vec::new());
                continue;
            }
            let x = b.start as f64 + trace.bin_width as f64 / 2.0;
            runs.last_mut()
                .expect("non-empty")
                .push(format!("{:.1},{:.1}", px(x), py(b.mean_error)));
        }
        for run in runs.iter().filter(|r| !r.is_empty()) {
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                run.join(" ")
            );
        }
        let ly = top + 14.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            w - right - 90.0,
            w - right - 70.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{name}</text>"#,
            w - right - 65.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}
