//! Report artifacts: long-format CSV, JSON summary and log-log SVG plots.

use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::error::Result;

use super::{Check, EpsFit, RateReport, SweepPlan, TimeFit};

pub const REPORT_HEADER: [&str; 4] = ["quantity", "eps", "t", "value"];

pub fn write_report_csv<W: Write>(out: W, report: &RateReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in report.runs.iter().filter(|r| r.ok()) {
        for f in &r.frames {
            for (q, v) in f.quantities() {
                w.write_record([q.to_string(), format!("{:e}", r.eps), format!("{:e}", f.t), format!("{v:.16e}")])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct FlowSummary {
    eps: f64,
    c: f64,
    cap_c: f64,
    margin: f64,
    passed: bool,
}

#[derive(Serialize)]
struct Summary<'a> {
    passed: bool,
    synthetic: bool,
    note: &'a str,
    plan: &'a SweepPlan,
    checks: &'a [Check],
    eps_fits: Vec<&'a EpsFit>,
    time_fits: &'a [TimeFit],
    flow: Vec<FlowSummary>,
    failures: Vec<(f64, &'a str)>,
}

/// Fitted exponents, bands and per-check status as pretty JSON.
pub fn summary_json(report: &RateReport) -> Result<String> {
    let s = Summary {
        passed: report.passed(),
        synthetic: report.synthetic,
        note: &report.note,
        plan: &report.plan,
        checks: &report.checks,
        eps_fits: report.eps_fits.iter().filter(|f| f.t > 0.0).collect(),
        time_fits: &report.time_fits,
        flow: report
            .runs
            .iter()
            .filter_map(|r| {
                r.flow.as_ref().map(|f| FlowSummary { eps: r.eps, c: f.c, cap_c: f.cap_c, margin: f.margin, passed: f.passed })
            })
            .collect(),
        failures: report.runs.iter().filter_map(|r| r.error.as_deref().map(|e| (r.eps, e))).collect(),
    };
    Ok(serde_json::to_string_pretty(&s).expect("summary is serializable"))
}

/// One named polyline of a log-log plot.
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Minimal standalone SVG log-log plot. Non-positive points are dropped.
pub fn loglog_svg(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let (w, h, ml, mr, mt, mb) = (640.0, 440.0, 80.0, 170.0, 40.0, 60.0);
    let pts = || series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0 > 0.0 && p.1 > 0.0);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts() {
        x0 = x0.min(x.log10());
        x1 = x1.max(x.log10());
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let pad = |a: f64, b: f64| if b - a < 1e-9 { (a - 0.5, b + 0.5) } else { (a - 0.05 * (b - a), b + 0.05 * (b - a)) };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    let px = |x: f64| ml + (x.log10() - x0) / (x1 - x0) * (w - ml - mr);
    let py = |y: f64| h - mb - (y.log10() - y0) / (y1 - y0) * (h - mt - mb);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, (w - mr + ml) / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{ml}" y="{mt}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - ml - mr,
        h - mt - mb
    );
    for d in x0.ceil() as i32..=x1.floor() as i32 {
        let x = px(10f64.powi(d));
        let _ = writeln!(s, r##"<line x1="{x:.1}" y1="{mt}" x2="{x:.1}" y2="{}" stroke="#ddd"/>"##, h - mb);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{}" text-anchor="middle">1e{d}</text>"#, h - mb + 16.0);
    }
    for d in y0.ceil() as i32..=y1.floor() as i32 {
        let y = py(10f64.powi(d));
        let _ = writeln!(s, r##"<line x1="{ml}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#ddd"/>"##, w - mr);
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">1e{d}</text>"#, ml - 6.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (w - mr + ml) / 2.0, h - 16.0, escape(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        (h - mb + mt) / 2.0,
        escape(ylabel)
    );
    for (k, ser) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> =
            ser.points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, path.join(" "));
        for p in &path {
            let (a, b) = p.split_once(',').unwrap();
            let _ = writeln!(s, r#"<circle cx="{a}" cy="{b}" r="2.5" fill="{color}"/>"#);
        }
        let ly = mt + 16.0 * k as f64 + 8.0;
        let _ = writeln!(s, r#"<line x1="{0}" y1="{ly}" x2="{1}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, w - mr + 10.0, w - mr + 30.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, w - mr + 36.0, ly + 4.0, escape(&ser.name));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// ε-rate plot at the fit time and `(1+t)`-decay plot of every run.
pub fn report_plots(report: &RateReport) -> Vec<(&'static str, String)> {
    let t = report.plan.fit_time;
    let eps_series = ["e_macro", "e_u", "macro_l2_sq"]
        .iter()
        .filter_map(|q| {
            report.eps_fit(q, t).map(|o| Series { name: (*q).to_string(), points: o.x.iter().copied().zip(o.y.iter().copied()).collect() })
        })
        .collect::<Vec<_>>();
    let mut decay = Vec::new();
    for r in report.runs.iter().filter(|r| r.ok()) {
        for (q, f) in [("macro", 0), ("micro", 1)] {
            let points = r
                .frames
                .iter()
                .filter(|fr| fr.t > 0.0)
                .map(|fr| (1.0 + fr.t, if f == 0 { fr.macro_l2 * fr.macro_l2 } else { fr.micro_l2 * fr.micro_l2 }))
                .collect();
            decay.push(Series { name: format!("{q}² ε={}", r.eps), points });
        }
    }
    vec![
        ("eps_rates.svg", loglog_svg(&format!("errors against ε at t = {t}"), "ε", "error", &eps_series)),
        ("temporal_decay.svg", loglog_svg("squared L² errors against 1+t", "1 + t", "norm²", &decay)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convergence_harness::synthetic_report;

    #[test]
    fn synthetic_report_artifacts() {
        let r = synthetic_report(&SweepPlan::default()).unwrap();
        let mut buf = Vec::new();
        write_report_csv(&mut buf, &r).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("quantity,eps,t,value\n"));
        assert_eq!(text.lines().count(), 1 + 3 * 17 * 12);
        let js: serde_json::Value = serde_json::from_str(&summary_json(&r).unwrap()).unwrap();
        assert_eq!(js["passed"], serde_json::Value::Bool(true));
        for (_, svg) in report_plots(&r) {
            assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
            assert!(svg.contains("polyline"));
        }
    }
}
