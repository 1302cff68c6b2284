use std::collections::HashMap;

use crate::model::MethodStats;
use crate::parser::MethodIdentity;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HotspotRow {
    pub rank: usize,
    pub identity: MethodIdentity,
    pub total: u64,
    pub line: Option<u32>,
}

impl HotspotRow {
    /// `path:line`, or just the path when the line is unknown.
    pub fn location(&self) -> String {
        match self.line {
            Some(l) => format!("{}:{l}", self.identity.file_path),
            None => self.identity.file_path.clone(),
        }
    }
}

const HEADERS: [&str; 4] = ["RANK", "TOTAL", "METHOD", "LOCATION"];

/// Text table of the first `n` entries of `stats`, which must already be
/// in hotspot order.
pub fn render_hotspots(
    stats: &[MethodStats],
    n: usize,
    lines: &HashMap<MethodIdentity, u32>,
) -> String {
    let rows: Vec<HotspotRow> = stats
        .iter()
        .take(n)
        .enumerate()
        .map(|(i, s)| HotspotRow {
            rank: i + 1,
            identity: s.identity.clone(),
            total: s.total_changes,
            line: lines.get(&s.identity).copied(),
        })
        .collect();
    let cells: Vec<[String; 4]> = rows
        .iter()
        .map(|r| {
            let method = format!("{}({})", r.identity.qualified_name, r.identity.param_types.join(","));
            [r.rank.to_string(), r.total.to_string(), method, r.location()]
        })
        .collect();
    let mut widths = HEADERS.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let header = HEADERS.map(str::to_owned);
    for row in std::iter::once(&header).chain(&cells) {
        let line = format!(
            "{:>w0$}  {:>w1$}  {:<w2$}  {}",
            row[0],
            row[1],
            row[2],
            row[3],
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2],
        );
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}
