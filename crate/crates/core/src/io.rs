//! CSV tables and SVG charts for computed results. Numbers are written with
//! 17 significant digits so that every double survives a round trip.

use std::fmt::Write as _;

use crate::diophantine::SubsequenceReport;
use crate::error::{Error, Result};
use crate::kirchhoff::KirchhoffSpectrum;
use crate::measure::{MeasureEstimate, MeasureKind};
use crate::robin::RobinEigenvalue;

/// `x` with 17 significant digits, `.` as decimal separator.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn table(comment: Option<&str>, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut out = String::new();
    if let Some(c) = comment {
        for line in c.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
    Ok(out)
}

pub fn kirchhoff_csv(s: &KirchhoffSpectrum, comment: Option<&str>) -> Result<String> {
    table(
        comment,
        &["n", "tau", "class", "dirichlet_multiplicity", "rho"],
        s.entries.iter().map(|e| {
            vec![
                e.index.to_string(),
                fmt_f64(e.tau),
                e.class.label().to_string(),
                e.class.dirichlet_multiplicity().to_string(),
                e.rho.map(fmt_f64).unwrap_or_default(),
            ]
        }),
    )
}

pub fn robin_csv(entries: &[RobinEigenvalue], comment: Option<&str>) -> Result<String> {
    table(
        comment,
        &["n", "class", "re_z", "im_z", "re_lambda", "im_lambda", "re_delta", "im_delta", "residual", "certified"],
        entries.iter().map(|e| {
            vec![
                e.index.to_string(),
                e.class.label().to_string(),
                fmt_f64(e.z.re),
                fmt_f64(e.z.im),
                fmt_f64(e.eigenvalue.re),
                fmt_f64(e.eigenvalue.im),
                fmt_f64(e.delta.re),
                fmt_f64(e.delta.im),
                fmt_f64(e.residual),
                e.certified.to_string(),
            ]
        }),
    )
}

/// Histogram (`bin_left, bin_right, mass`) or atoms (`s, mass`).
pub fn measure_csv(m: &MeasureEstimate, comment: Option<&str>) -> Result<String> {
    match &m.kind {
        MeasureKind::Histogram { bin_edges, masses } => table(
            comment,
            &["bin_left", "bin_right", "mass"],
            bin_edges.windows(2).zip(masses).map(|(e, &v)| vec![fmt_f64(e[0]), fmt_f64(e[1]), fmt_f64(v)]),
        ),
        MeasureKind::Atoms(a) => table(comment, &["s", "mass"], a.iter().map(|&(s, v)| vec![fmt_f64(s), fmt_f64(v)])),
    }
}

pub fn subsequence_csv(r: &SubsequenceReport, comment: Option<&str>) -> Result<String> {
    let window_of = |n: usize| -> String {
        r.windows.iter().position(|w| w.index == Some(n)).map(|w| w.to_string()).unwrap_or_default()
    };
    table(
        comment,
        &["k", "n_k", "tau", "re_delta", "im_delta", "dist_to_target", "window"],
        r.indices.iter().enumerate().map(|(k, &n)| {
            let d = r.values[k];
            vec![
                (k + 1).to_string(),
                n.to_string(),
                fmt_f64(r.taus[k]),
                fmt_f64(d.re),
                fmt_f64(d.im),
                fmt_f64((d - r.target).norm()),
                window_of(n),
            ]
        }),
    )
}

/// Rows `r1, r2, count, defect`.
pub fn weyl_csv(rows: &[(f64, f64, usize, f64)], comment: Option<&str>) -> Result<String> {
    table(
        comment,
        &["r1", "r2", "count", "defect"],
        rows.iter().map(|&(a, b, n, d)| vec![fmt_f64(a), fmt_f64(b), n.to_string(), fmt_f64(d)]),
    )
}

const SVG_W: f64 = 720.0;
const SVG_H: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 3] = ["#4878a8", "#d0783a", "#5a9e5a"];

/// Bar chart of one or more estimates over `[0, 2/|Γ|]`; histograms are
/// drawn as outlined bars, atoms as stems.
pub fn measure_svg(series: &[(&str, &MeasureEstimate)]) -> String {
    let top = series.first().map_or(1.0, |s| s.1.support_max);
    let ymax = series.iter().flat_map(|(_, m)| m.points().into_iter().map(|p| p.1)).fold(0.0, f64::max).max(1e-300);
    let plot_w = SVG_W - 2.0 * MARGIN;
    let plot_h = SVG_H - 2.0 * MARGIN;
    let x_of = |s: f64| MARGIN + plot_w * s / top;
    let y_of = |m: f64| SVG_H - MARGIN - plot_h * m / ymax;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{SVG_W}" height="{SVG_H}" fill="white"/>"#);
    for (k, (name, m)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        match &m.kind {
            MeasureKind::Histogram { bin_edges, masses } => {
                for (e, &v) in bin_edges.windows(2).zip(masses) {
                    if v <= 0.0 {
                        continue;
                    }
                    let _ = writeln!(
                        svg,
                        r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="{color}"/>"#,
                        x_of(e[0]),
                        y_of(v),
                        x_of(e[1]) - x_of(e[0]),
                        y_of(0.0) - y_of(v)
                    );
                }
            }
            MeasureKind::Atoms(a) => {
                for &(s, v) in a {
                    let _ = writeln!(
                        svg,
                        r#"<line x1="{x:.3}" y1="{:.3}" x2="{x:.3}" y2="{:.3}" stroke="{color}" stroke-width="3"/>"#,
                        y_of(0.0),
                        y_of(v),
                        x = x_of(s)
                    );
                }
            }
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="13" fill="{color}">{}</text>"#,
            SVG_W - MARGIN - 160.0,
            MARGIN + 16.0 * (k as f64 + 1.0),
            escape(name)
        );
    }
    // Axis with the support interval marked.
    let y0 = y_of(0.0);
    let _ = writeln!(
        svg,
        r#"<line x1="{:.3}" y1="{y0:.3}" x2="{:.3}" y2="{y0:.3}" stroke="black"/>"#,
        x_of(0.0),
        x_of(top)
    );
    for (s, label) in [(0.0, "0".to_string()), (top, format!("2/|Γ| = {top:.5}"))] {
        let x = x_of(s);
        let _ = writeln!(svg, r#"<line x1="{x:.3}" y1="{y0:.3}" x2="{x:.3}" y2="{:.3}" stroke="black"/>"#, y0 + 6.0);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.3}" y="{:.3}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
            y0 + 22.0,
            escape(&label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
