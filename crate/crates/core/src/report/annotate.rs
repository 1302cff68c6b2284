use std::collections::BTreeMap;

use super::Annotation;
use crate::model::MethodStats;
use crate::parser::extract_methods;
use crate::window::WindowConfig;

/// Source text with a label line inserted above each changed method.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotated {
    pub text: String,
    pub annotations: Vec<Annotation>,
    pub warnings: Vec<String>,
}

/// Inserts `// N changes in last D days [sparkline]` above the declaration
/// of every method of `source` with changes in the window. Original lines
/// are kept verbatim; nothing but whole lines is inserted.
pub fn annotate_file(
    source: &str,
    file_path: &str,
    stats: &[MethodStats],
    window: &WindowConfig,
) -> Annotated {
    let parsed = extract_methods(source, file_path);
    if parsed.degraded {
        return Annotated {
            text: source.to_owned(),
            annotations: Vec::new(),
            warnings: vec![format!("{file_path}: could not parse, shown without annotations")],
        };
    }

    let mut by_line: BTreeMap<u32, Vec<Annotation>> = BTreeMap::new();
    let mut annotations = Vec::new();
    for m in &parsed.methods {
        let Some(s) = stats.iter().find(|s| {
            s.identity.qualified_name == m.qualified_name && s.identity.param_types == m.param_types
        }) else {
            continue;
        };
        let a = Annotation::new(s, m.start_line, window);
        if a.histogram.iter().all(|&c| c == 0) {
            continue;
        }
        by_line.entry(m.start_line).or_default().push(a.clone());
        annotations.push(a);
    }
    if annotations.is_empty() {
        return Annotated {
            text: source.to_owned(),
            annotations,
            warnings: Vec::new(),
        };
    }

    let mut text = String::with_capacity(source.len() + annotations.len() * 64);
    for (i, line) in source.split_inclusive('\n').enumerate() {
        if let Some(anns) = by_line.get(&(i as u32 + 1)) {
            let indent: String = line.chars().take_while(|c| *c == ' ' || *c == '\t').collect();
            for a in anns {
                text.push_str(&format!("{indent}// {} [{}]\n", a.label, a.sparkline()));
            }
        }
        text.push_str(line);
    }
    Annotated {
        text,
        annotations,
        warnings: Vec::new(),
    }
}
