use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use super::{html_escape, label};
use crate::model::MethodStats;
use crate::parser::MethodIdentity;
use crate::window::WindowConfig;

/// Height in pixels of the tallest bar of a chart.
pub const CHART_HEIGHT: u32 = 40;
const BAR_WIDTH: u32 = 12;
const BAR_GAP: u32 = 2;

const STYLE: &str = "body{font-family:sans-serif;margin:2em}\
table{border-collapse:collapse}td,th{padding:2px 8px;text-align:left}\
rect{fill:#c0392b}section{margin-bottom:1.5em}code{font-size:110%}";

/// Writes `index.html` plus one page per source file into `out_dir` and
/// returns the written paths, index first.
pub fn render_html(
    stats: &[MethodStats],
    window: &WindowConfig,
    lines: &HashMap<MethodIdentity, u32>,
    out_dir: &Path,
) -> io::Result<Vec<PathBuf>> {
    let mut files: BTreeMap<&str, Vec<&MethodStats>> = BTreeMap::new();
    for s in stats {
        files.entry(&s.identity.file_path).or_default().push(s);
    }
    let pages: Vec<(&str, String)> = files
        .keys()
        .enumerate()
        .map(|(i, f)| (*f, format!("files/file_{i:03}.html")))
        .collect();

    std::fs::create_dir_all(out_dir.join("files"))?;
    let mut written = Vec::with_capacity(pages.len() + 1);
    let index = out_dir.join("index.html");
    std::fs::write(&index, render_index_html(stats, window, &pages))?;
    written.push(index);
    for (file, page) in &pages {
        let path = out_dir.join(page);
        std::fs::write(&path, render_file_page(file, &files[file], window, lines))?;
        written.push(path);
    }
    Ok(written)
}

/// Summary page: the hotspot table (in the order of `stats`) and every
/// file with its change total, linking to its page.
pub fn render_index_html(
    stats: &[MethodStats],
    window: &WindowConfig,
    pages: &[(&str, String)],
) -> String {
    let mut totals: HashMap<&str, (u64, usize)> = HashMap::new();
    for s in stats {
        let e = totals.entry(&s.identity.file_path).or_default();
        e.0 += s.histogram(window).iter().sum::<u64>();
        e.1 += 1;
    }
    let mut body = String::new();
    let _ = writeln!(
        body,
        "<h1>Method change hotspots</h1>\n<p>Window: {} days ending {}</p>",
        window.days,
        window.end_date()
    );
    body.push_str("<h2>Hotspots</h2>\n<table class=\"hotspots\">\n<tr><th>Rank</th><th>Changes</th><th>Method</th><th>File</th></tr>\n");
    let page_of: HashMap<&str, &str> = pages.iter().map(|(f, p)| (*f, p.as_str())).collect();
    for (i, s) in stats.iter().enumerate() {
        let id = &s.identity;
        let total: u64 = s.histogram(window).iter().sum();
        let href = page_of.get(id.file_path.as_str()).copied().unwrap_or("");
        let _ = writeln!(
            body,
            "<tr><td>{}</td><td>{total}</td><td><code>{}({})</code></td><td><a href=\"{}\">{}</a></td></tr>",
            i + 1,
            html_escape(&id.qualified_name),
            html_escape(&id.param_types.join(", ")),
            html_escape(href),
            html_escape(&id.file_path)
        );
    }
    body.push_str("</table>\n<h2>Files</h2>\n<table class=\"files\">\n<tr><th>File</th><th>Methods</th><th>Changes</th></tr>\n");
    for (file, page) in pages {
        let (total, methods) = totals.get(file).copied().unwrap_or_default();
        let _ = writeln!(
            body,
            "<tr><td><a href=\"{}\">{}</a></td><td>{methods}</td><td>{total}</td></tr>",
            html_escape(page),
            html_escape(file)
        );
    }
    body.push_str("</table>\n");
    page("Method change hotspots", &body)
}

fn render_file_page(
    file: &str,
    stats: &[&MethodStats],
    window: &WindowConfig,
    lines: &HashMap<MethodIdentity, u32>,
) -> String {
    let dates = window.dates();
    let mut body = String::new();
    let _ = writeln!(body, "<p><a href=\"../index.html\">index</a></p>\n<h1>{}</h1>", html_escape(file));
    for s in stats {
        let hist = s.histogram(window);
        let total: u64 = hist.iter().sum();
        let id = &s.identity;
        let sig = format!("{}({})", id.qualified_name, id.param_types.join(", "));
        let line = lines
            .get(id)
            .map(|l| format!(" <small>line {l}</small>"))
            .unwrap_or_default();
        let _ = writeln!(
            body,
            "<section data-method=\"{}\">\n<h2><code>{}</code>{line}</h2>\n<p>{}</p>",
            html_escape(&id.canonical()),
            html_escape(&sig),
            label(total, window.days)
        );
        body.push_str(&svg_chart(&hist, &dates));
        body.push_str("</section>\n");
    }
    page(file, &body)
}

/// Bar chart with one `rect` per day. Bar heights are proportional to the
/// day's count relative to the busiest day.
fn svg_chart(counts: &[u64], dates: &[chrono::NaiveDate]) -> String {
    let max = counts.iter().copied().max().unwrap_or(0);
    let width = counts.len() as u32 * (BAR_WIDTH + BAR_GAP);
    let mut svg = format!(
        "<svg width=\"{width}\" height=\"{CHART_HEIGHT}\">\n"
    );
    for (i, (&c, d)) in counts.iter().zip(dates).enumerate() {
        let h = if max == 0 {
            0.0
        } else {
            c as f64 * f64::from(CHART_HEIGHT) / max as f64
        };
        let x = i as u32 * (BAR_WIDTH + BAR_GAP);
        let y = f64::from(CHART_HEIGHT) - h;
        let _ = writeln!(
            svg,
            "<rect x=\"{x}\" y=\"{y:.2}\" width=\"{BAR_WIDTH}\" height=\"{h:.2}\" data-date=\"{d}\" data-count=\"{c}\"><title>{d}: {c}</title></rect>"
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn page(title: &str, body: &str) -> String {
    format!(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n<style>{STYLE}</style>\n</head>\n<body>\n{body}</body>\n</html>\n",
        html_escape(title)
    )
}
