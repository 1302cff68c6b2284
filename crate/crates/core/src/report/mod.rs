//! Rendering of collected statistics: annotated listings, hotspot tables,
//! JSON exports and static HTML pages.

mod annotate;
mod html;
mod json;
mod table;

use std::collections::HashMap;
use std::path::Path;

pub use annotate::{annotate_file, Annotated};
pub use html::{render_html, render_index_html, CHART_HEIGHT};
pub use json::{parse_json, render_json, JsonMethod, JsonReport};
pub use table::{render_hotspots, HotspotRow};

use crate::model::MethodStats;
use crate::parser::{extract_methods, MethodIdentity};
use crate::window::WindowConfig;

const BARS: [char; 8] = ['▁', '▂', '▃', '▄', '▅', '▆', '▇', '█'];

/// Label and histogram for one method.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub file_path: String,
    pub anchor_line: u32,
    pub label: String,
    /// One count per window date, oldest first.
    pub histogram: Vec<u64>,
}

impl Annotation {
    pub fn new(stats: &MethodStats, anchor_line: u32, window: &WindowConfig) -> Self {
        let histogram = stats.histogram(window);
        let total: u64 = histogram.iter().sum();
        Annotation {
            file_path: stats.identity.file_path.clone(),
            anchor_line,
            label: label(total, window.days),
            histogram,
        }
    }

    pub fn sparkline(&self) -> String {
        sparkline(&self.histogram)
    }
}

/// `N changes in last D days`
pub fn label(changes: u64, days: u32) -> String {
    format!("{changes} changes in last {days} days")
}

/// One cell per count, scaled to the largest count. Zero days are blank.
pub fn sparkline(counts: &[u64]) -> String {
    let max = counts.iter().copied().max().unwrap_or(0);
    counts
        .iter()
        .map(|&c| {
            if c == 0 || max == 0 {
                ' '
            } else {
                let level = (c * 8).div_ceil(max).clamp(1, 8);
                BARS[(level - 1) as usize]
            }
        })
        .collect()
}

/// Finds the declaration line of each method in the files under `root`.
/// Methods whose file or declaration is gone are left out.
pub fn resolve_lines<'a>(
    root: &Path,
    stats: impl IntoIterator<Item = &'a MethodStats>,
) -> HashMap<MethodIdentity, u32> {
    let mut by_file: HashMap<&str, Vec<&MethodIdentity>> = HashMap::new();
    for s in stats {
        by_file
            .entry(s.identity.file_path.as_str())
            .or_default()
            .push(&s.identity);
    }
    let mut out = HashMap::new();
    for (file, ids) in by_file {
        let Ok(bytes) = std::fs::read(root.join(file)) else {
            continue;
        };
        let source = String::from_utf8_lossy(&bytes);
        let parsed = extract_methods(&source, file);
        let lines: HashMap<MethodIdentity, u32> = parsed
            .methods
            .iter()
            .map(|m| (m.identity(), m.start_line))
            .collect();
        for id in ids {
            if let Some(&line) = lines.get(id) {
                out.insert(id.clone(), line);
            }
        }
    }
    out
}

fn html_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}
