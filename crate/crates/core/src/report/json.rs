use std::collections::HashMap;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::model::MethodStats;
use crate::parser::MethodIdentity;
use crate::window::WindowConfig;

/// Exported document. Field order is the serialized key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonReport {
    pub window_days: u32,
    /// End of the window, RFC 3339 UTC. Tied to the window rather than the
    /// wall clock so exports of the same data are identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
    pub methods: Vec<JsonMethod>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonMethod {
    pub id: String,
    pub file: String,
    /// Declaration line, 0 when unknown.
    pub line: u32,
    pub total: u64,
    /// One count per window date, oldest first.
    pub daily: Vec<u64>,
}

/// Renders `stats` (restricted to the window) in the given order.
pub fn render_json(
    stats: &[MethodStats],
    window: &WindowConfig,
    lines: &HashMap<MethodIdentity, u32>,
) -> String {
    let methods = stats
        .iter()
        .map(|s| {
            let daily = s.histogram(window);
            JsonMethod {
                id: s.identity.canonical(),
                file: s.identity.file_path.clone(),
                line: lines.get(&s.identity).copied().unwrap_or(0),
                total: daily.iter().sum(),
                daily,
            }
        })
        .collect();
    let generated_at = DateTime::<Utc>::from_timestamp(window.end_time, 0)
        .map(|d| d.to_rfc3339_opts(SecondsFormat::Secs, true));
    let report = JsonReport {
        window_days: window.days,
        generated_at,
        methods,
    };
    let mut out = serde_json::to_string_pretty(&report).expect("plain data serializes");
    out.push('\n');
    out
}

/// Reads a document written by [`render_json`] back into statistics.
pub fn parse_json(text: &str) -> Result<(JsonReport, Vec<MethodStats>), String> {
    let report: JsonReport = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let end = match &report.generated_at {
        Some(s) => DateTime::parse_from_rfc3339(s)
            .map_err(|e| format!("bad generated_at: {e}"))?
            .timestamp(),
        None if report.methods.is_empty() => 0,
        None => return Err("generated_at is required to date the daily counts".into()),
    };
    let window = WindowConfig::new(report.window_days, end);
    let dates = window.dates();
    let mut stats = Vec::with_capacity(report.methods.len());
    for m in &report.methods {
        let identity = MethodIdentity::parse_canonical(&m.id)
            .ok_or_else(|| format!("malformed method id {:?}", m.id))?;
        if m.daily.len() != dates.len() {
            return Err(format!("{}: expected {} daily counts", m.id, dates.len()));
        }
        let mut s = MethodStats::new(identity);
        for (d, &c) in dates.iter().zip(&m.daily) {
            s.record(*d, c);
        }
        if s.total_changes != m.total {
            return Err(format!("{}: total does not match daily counts", m.id));
        }
        stats.push(s);
    }
    Ok((report, stats))
}
