//! Self-contained HTML report with inline SVG charts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{AppError, AppResult};
use crate::fsutil::Staging;
use crate::store::{DYNAMIC, REPORT, VALIDATION, WINDOW_MODELS};

#[derive(Debug, Clone, clap::Args)]
pub struct ReportArgs {
    /// Comma-separated dynamic topics to include, e.g. `3,5`.
    #[arg(long, value_delimiter = ',')]
    pub topics: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
struct SeriesRow {
    dynamic_topic: usize,
    window_label: String,
    speech_count: usize,
    weight_sum: f64,
}

#[derive(Debug, Deserialize)]
struct DescriptorRow {
    dynamic_topic: usize,
    label: String,
    top_terms: String,
    coherence: Option<f64>,
    frequency: usize,
}

#[derive(Debug, Deserialize)]
struct KRow {
    k: usize,
    coherence: f64,
    chosen: bool,
}

#[derive(Debug, Deserialize)]
struct WindowKRow {
    window_index: usize,
    window_label: String,
    k: usize,
    coherence: f64,
    chosen: bool,
}

#[derive(Debug, Deserialize)]
struct StabilityRow {
    dynamic_topic: usize,
    mean_jaccard: Option<f64>,
    n_members: usize,
}

fn read_csv<T: DeserializeOwned>(path: &Path) -> AppResult<Vec<T>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| AppError::input(path, e.to_string()))?;
    reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| AppError::input(path, format!("row {}: {e}", i + 1))))
        .collect()
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Series<'a> {
    name: &'a str,
    values: Vec<f64>,
    color: &'a str,
    width: f64,
}

/// A line chart over categorical x positions. `mark` draws a dot at that index
/// on the first series.
fn line_chart(title: &str, x_labels: &[String], series: &[Series], mark: Option<usize>) -> String {
    const W: f64 = 640.0;
    const H: f64 = 220.0;
    const L: f64 = 56.0;
    const R: f64 = 16.0;
    const T: f64 = 28.0;
    const B: f64 = 44.0;
    let values = series.iter().flat_map(|s| s.values.iter().copied()).filter(|v| v.is_finite());
    let (lo, hi) = values.fold((0.0f64, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let hi = if hi.is_finite() && hi > lo { hi } else { lo + 1.0 };
    let n = x_labels.len();
    let x = |i: usize| if n <= 1 { L + (W - L - R) / 2.0 } else { L + (W - L - R) * i as f64 / (n - 1) as f64 };
    let y = |v: f64| T + (H - T - B) * (1.0 - (v - lo) / (hi - lo));

    let mut svg = String::new();
    write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" width="{W}" height="{H}" role="img"><title>{}</title>"#,
        escape(title)
    )
    .unwrap();
    write!(svg, r#"<text x="{L}" y="16" class="ct">{}</text>"#, escape(title)).unwrap();
    write!(
        svg,
        r##"<line x1="{L}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#888"/><line x1="{L}" y1="{T}" x2="{L}" y2="{:.1}" stroke="#888"/>"##,
        H - B,
        W - R,
        H - B,
        H - B
    )
    .unwrap();
    for v in [lo, (lo + hi) / 2.0, hi] {
        write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" class="yt">{}</text>"#,
            L - 6.0,
            y(v) + 4.0,
            format_tick(v)
        )
        .unwrap();
    }
    let step = n.div_ceil(12).max(1);
    for (i, label) in x_labels.iter().enumerate() {
        if i % step == 0 || i + 1 == n {
            write!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" class="xt">{}</text>"#,
                x(i),
                H - B + 16.0,
                escape(label)
            )
            .unwrap();
        }
    }
    for s in series {
        let points: Vec<String> = s
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, &v)| format!("{:.1},{:.1}", x(i), y(v)))
            .collect();
        write!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="{}" points="{}"><title>{}</title></polyline>"#,
            s.color,
            s.width,
            points.join(" "),
            escape(s.name)
        )
        .unwrap();
    }
    if let (Some(i), Some(first)) = (mark, series.first()) {
        if let Some(&v) = first.values.get(i).filter(|v| v.is_finite()) {
            write!(svg, r##"<circle cx="{:.1}" cy="{:.1}" r="4" fill="#d62728"/>"##, x(i), y(v)).unwrap();
        }
    }
    svg.push_str("</svg>");
    svg
}

fn format_tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

const STYLE: &str = "body{font-family:sans-serif;max-width:60em;margin:2em auto;color:#222}\
table{border-collapse:collapse;margin:.5em 0}td,th{border:1px solid #ccc;padding:2px 8px;text-align:left}\
.ct{font-size:13px;font-weight:bold}.xt{font-size:10px;text-anchor:middle}.yt{font-size:10px;text-anchor:end}\
section{margin-bottom:2em}";

/// Paths the report reads, in a fixed order.
pub fn report_inputs(out_dir: &Path) -> [PathBuf; 4] {
    [
        out_dir.join(DYNAMIC).join("time_series.csv"),
        out_dir.join(DYNAMIC).join("descriptors.csv"),
        out_dir.join(DYNAMIC).join("k_coherence.csv"),
        out_dir.join(WINDOW_MODELS).join("k_coherence.csv"),
    ]
}

/// Render the report HTML from pipeline outputs.
pub fn render(out_dir: &Path, topics: Option<&[usize]>) -> AppResult<String> {
    let inputs = report_inputs(out_dir);
    let missing: Vec<String> = inputs.iter().filter(|p| !p.exists()).map(|p| p.display().to_string()).collect();
    if !missing.is_empty() {
        return Err(AppError::Usage(format!("report inputs missing: {}", missing.join(", "))));
    }
    let series: Vec<SeriesRow> = read_csv(&inputs[0])?;
    let descriptors: Vec<DescriptorRow> = read_csv(&inputs[1])?;
    let k_curve: Vec<KRow> = read_csv(&inputs[2])?;
    let window_curves: Vec<WindowKRow> = read_csv(&inputs[3])?;
    let stability_path = out_dir.join(VALIDATION).join("stability.csv");
    let stability: BTreeMap<usize, StabilityRow> = if stability_path.exists() {
        read_csv::<StabilityRow>(&stability_path)?
            .into_iter()
            .map(|r| (r.dynamic_topic, r))
            .collect()
    } else {
        BTreeMap::new()
    };

    let all: BTreeSet<usize> = descriptors.iter().map(|d| d.dynamic_topic).collect();
    let selected: BTreeSet<usize> = match topics {
        None => all.clone(),
        Some(list) => {
            let unknown: Vec<String> = list.iter().filter(|t| !all.contains(t)).map(|t| t.to_string()).collect();
            if !unknown.is_empty() {
                return Err(AppError::Usage(format!(
                    "unknown dynamic topics {}; the model has {}",
                    unknown.join(", "),
                    all.len()
                )));
            }
            list.iter().copied().collect()
        }
    };

    let mut html = String::new();
    html.push_str("<!DOCTYPE html>\n<html lang=\"en\"><head><meta charset=\"utf-8\"><title>Dynamic topic report</title>");
    write!(html, "<style>{STYLE}</style></head><body>\n<h1>Dynamic topic report</h1>\n").unwrap();
    writeln!(
        html,
        "<p>{} dynamic topics, {} shown.</p>",
        all.len(),
        selected.len()
    )
    .unwrap();

    html.push_str("<section id=\"k-selection\"><h2>Model selection</h2>\n");
    let labels: Vec<String> = k_curve.iter().map(|r| r.k.to_string()).collect();
    let chosen = k_curve.iter().position(|r| r.chosen);
    html.push_str(&line_chart(
        "Dynamic layer: mean TC-W2V coherence by k'",
        &labels,
        &[Series {
            name: "coherence",
            values: k_curve.iter().map(|r| r.coherence).collect(),
            color: PALETTE[0],
            width: 2.0,
        }],
        chosen,
    ));
    html.push('\n');

    let mut by_window: BTreeMap<(usize, &str), Vec<&WindowKRow>> = BTreeMap::new();
    for r in &window_curves {
        by_window.entry((r.window_index, r.window_label.as_str())).or_default().push(r);
    }
    let window_labels: Vec<String> = by_window.keys().map(|(_, l)| l.to_string()).collect();
    let chosen_ks: Vec<f64> = by_window
        .values()
        .map(|rows| rows.iter().find(|r| r.chosen).map_or(f64::NAN, |r| r.k as f64))
        .collect();
    html.push_str(&line_chart(
        "Window layer: chosen k per window",
        &window_labels,
        &[Series {
            name: "chosen k",
            values: chosen_ks,
            color: PALETTE[2],
            width: 2.0,
        }],
        None,
    ));
    html.push_str("\n<table><tr><th>window</th><th>k</th><th>coherence by k</th></tr>\n");
    for ((_, label), rows) in &by_window {
        let curve: Vec<String> = rows
            .iter()
            .map(|r| {
                let s = format!("{}: {:.4}", r.k, r.coherence);
                if r.chosen { format!("<b>{s}</b>") } else { s }
            })
            .collect();
        let k = rows.iter().find(|r| r.chosen).map_or(String::new(), |r| r.k.to_string());
        writeln!(html, "<tr><td>{}</td><td>{k}</td><td>{}</td></tr>", escape(label), curve.join(", ")).unwrap();
    }
    html.push_str("</table></section>\n");

    let mut per_topic: BTreeMap<usize, Vec<&SeriesRow>> = BTreeMap::new();
    for r in &series {
        per_topic.entry(r.dynamic_topic).or_default().push(r);
    }
    html.push_str("<section id=\"topics\"><h2>Dynamic topics</h2>\n<table><tr><th>topic</th><th>label</th><th>top terms</th><th>coherence</th><th>frequency</th><th>stability</th></tr>\n");
    for d in descriptors.iter().filter(|d| selected.contains(&d.dynamic_topic)) {
        let stab = stability
            .get(&d.dynamic_topic)
            .and_then(|s| s.mean_jaccard.map(|j| format!("{j:.3} ({} members)", s.n_members)))
            .unwrap_or_default();
        writeln!(
            html,
            "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{stab}</td></tr>",
            d.dynamic_topic,
            escape(&d.label),
            escape(&d.top_terms),
            d.coherence.map_or(String::new(), |c| format!("{c:.4}")),
            d.frequency
        )
        .unwrap();
    }
    html.push_str("</table>\n");
    for d in descriptors.iter().filter(|d| selected.contains(&d.dynamic_topic)) {
        let rows = per_topic.get(&d.dynamic_topic).map(Vec::as_slice).unwrap_or(&[]);
        let labels: Vec<String> = rows.iter().map(|r| r.window_label.clone()).collect();
        let counts: Vec<f64> = rows.iter().map(|r| r.speech_count as f64).collect();
        let weights: Vec<f64> = rows.iter().map(|r| r.weight_sum).collect();
        writeln!(
            html,
            "<div class=\"topic\" id=\"topic-{}\"><h3>Topic {}: {}</h3>",
            d.dynamic_topic,
            d.dynamic_topic,
            escape(&d.top_terms)
        )
        .unwrap();
        html.push_str(&line_chart(
            &format!("Topic {}: speeches per window (blue), weight sum (red)", d.dynamic_topic),
            &labels,
            &[
                Series {
                    name: "speech count",
                    values: counts,
                    color: PALETTE[0],
                    width: 2.0,
                },
                Series {
                    name: "weight sum",
                    values: weights,
                    color: PALETTE[1],
                    width: 1.0,
                },
            ],
            None,
        ));
        html.push_str("</div>\n");
    }
    html.push_str("</section>\n</body></html>\n");
    Ok(html)
}

pub fn report(out_dir: &Path, args: &ReportArgs) -> AppResult<()> {
    let html = render(out_dir, args.topics.as_deref())?;
    let staging = Staging::new(&out_dir.join(REPORT))?;
    staging.write("report.html", html.as_bytes())?;
    staging.publish()?;
    println!("report: {}", out_dir.join(REPORT).join("report.html").display());
    Ok(())
}
