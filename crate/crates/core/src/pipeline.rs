//! The end-to-end scan: commits oldest first, each parsed, matched, checked
//! for refactorings and applied to the store in one transaction.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;
use thiserror::Error;

use crate::diff::{classify_changes, match_methods, ChangeKind, MethodMatching};
use crate::model::StatsSink;
use crate::parser::{extract_methods, MethodIdentity, ParsedFile};
use crate::refactor::{
    apply_refactorings, detect_refactorings, ApplyOptions, ClassHierarchy, RefactoringEvent,
    RefactoringKind, Thresholds,
};
use crate::store::{open_store, ProcessedCommit, Store, StoreError};
use crate::vcs::{open_repo, CommitMeta, FileChange, VcsError};
use crate::window::{day_of, WindowConfig};

pub const DEFAULT_TOP_N: usize = 10;
pub const STORE_DIR: &str = ".churnscope";
pub const STORE_FILE: &str = "stats.db";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Vcs(#[from] VcsError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputKind {
    Annotate,
    #[default]
    Hotspots,
    Json,
    Html,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub repo_path: PathBuf,
    pub window: WindowConfig,
    /// Defaults to `<repo root>/.churnscope/stats.db`.
    pub db_path: Option<PathBuf>,
    pub thresholds: Thresholds,
    pub count_renames: bool,
    pub output: OutputKind,
    pub top_n: usize,
    /// Drop the store before scanning.
    pub rebuild: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            repo_path: PathBuf::from("."),
            window: WindowConfig::default(),
            db_path: None,
            thresholds: Thresholds::default(),
            count_renames: true,
            output: OutputKind::default(),
            top_n: DEFAULT_TOP_N,
            rebuild: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let t = &self.thresholds;
        for (name, v) in [
            ("rename threshold", t.rename),
            ("move threshold", t.moved),
            ("containment threshold", t.containment),
            ("rename-and-move threshold", t.rename_and_move),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(PipelineError::InvalidConfig(format!(
                    "{name} must be in (0, 1], got {v}"
                )));
            }
        }
        if self.top_n == 0 {
            return Err(PipelineError::InvalidConfig("top must be at least 1".into()));
        }
        if self.window.days == 0 {
            return Err(PipelineError::InvalidConfig("days must be at least 1".into()));
        }
        Ok(())
    }

    pub fn db_path_for(&self, repo_root: &Path) -> PathBuf {
        self.db_path
            .clone()
            .unwrap_or_else(|| repo_root.join(STORE_DIR).join(STORE_FILE))
    }

    pub fn apply_options(&self) -> ApplyOptions {
        ApplyOptions {
            count_renames: self.count_renames,
        }
    }
}

/// Counters for one scan. `commits_seen` = processed + skipped.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct ProcessSummary {
    pub commits_seen: u64,
    pub commits_processed: u64,
    pub commits_skipped_cached: u64,
    pub files_parsed: u64,
    pub parse_failures: u64,
    pub events_by_kind: BTreeMap<String, u64>,
}

impl ProcessSummary {
    fn absorb(&mut self, c: &CommitSummary) {
        self.commits_processed += 1;
        self.files_parsed += c.files_parsed;
        self.parse_failures += c.parse_failures;
        for ev in &c.events {
            *self.events_by_kind.entry(ev.kind.to_string()).or_default() += 1;
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CommitSummary {
    pub files_parsed: u64,
    pub parse_failures: u64,
    pub modified: u64,
    pub deleted: u64,
    pub events: Vec<RefactoringEvent>,
}

/// Everything a commit does to the statistics, computed without touching
/// the store.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CommitAnalysis {
    pub day: Option<NaiveDate>,
    /// Identities that moved because their file was renamed.
    pub file_renames: Vec<(MethodIdentity, MethodIdentity)>,
    pub modified: Vec<MethodIdentity>,
    pub deleted: Vec<MethodIdentity>,
    pub events: Vec<RefactoringEvent>,
    pub files_parsed: u64,
    pub parse_failures: u64,
}

fn parse_side(content: Option<&str>, path: Option<&str>) -> ParsedFile {
    match (content, path) {
        (Some(c), Some(p)) => extract_methods(c, p),
        _ => ParsedFile::default(),
    }
}

/// Parses both revisions of every change and works out method changes and
/// refactorings. Files degraded on either side are skipped.
pub fn analyze_commit(
    commit: &CommitMeta,
    changes: &[FileChange],
    thresholds: &Thresholds,
) -> CommitAnalysis {
    let parsed: Vec<(ParsedFile, ParsedFile)> = changes
        .par_iter()
        .map(|c| {
            (
                parse_side(c.content_before.as_deref(), c.path_before.as_deref()),
                parse_side(c.content_after.as_deref(), c.path_after.as_deref()),
            )
        })
        .collect();

    let mut analysis = CommitAnalysis {
        day: Some(day_of(commit.timestamp)),
        ..CommitAnalysis::default()
    };
    let mut hierarchy = ClassHierarchy::new();
    let mut matchings: Vec<MethodMatching> = Vec::new();
    for (before, after) in &parsed {
        if before.degraded || after.degraded {
            analysis.parse_failures += 1;
            continue;
        }
        analysis.files_parsed += 1;
        for class in after.classes.iter().chain(&before.classes) {
            if let Some(sup) = &class.superclass {
                hierarchy
                    .entry(class.simple_name.clone())
                    .or_insert_with(|| sup.clone());
            }
        }
        matchings.push(match_methods(&before.methods, &after.methods));
    }

    for m in &matchings {
        for (b, a) in &m.matched_pairs {
            if b.file_path != a.file_path {
                analysis.file_renames.push((b.identity(), a.identity()));
            }
        }
    }

    let events = detect_refactorings(&matchings, &hierarchy, thresholds);
    let in_event: HashSet<&MethodIdentity> =
        events.iter().filter_map(|e| e.before.as_ref()).collect();
    let inline_hosts: HashSet<&MethodIdentity> = events
        .iter()
        .filter(|e| e.kind == RefactoringKind::InlineMethod)
        .filter_map(|e| e.host.as_ref())
        .collect();
    for m in &matchings {
        for (id, kind) in classify_changes(m) {
            match kind {
                ChangeKind::Modified if !inline_hosts.contains(&id) => {
                    analysis.modified.push(id)
                }
                ChangeKind::Deleted if !in_event.contains(&id) => analysis.deleted.push(id),
                _ => {}
            }
        }
    }
    analysis.events = events;
    analysis
}

/// Applies an analysis: file renames, plain deletions, one change per
/// modified method, then the refactoring rules.
pub fn apply_analysis<S: StatsSink>(
    sink: &mut S,
    analysis: &CommitAnalysis,
    opts: ApplyOptions,
) -> std::result::Result<(), S::Error> {
    let Some(day) = analysis.day else {
        return Ok(());
    };
    for (old, new) in &analysis.file_renames {
        sink.rekey(old, new)?;
    }
    for id in &analysis.deleted {
        sink.delete(id)?;
    }
    for id in &analysis.modified {
        sink.increment(id, day)?;
    }
    apply_refactorings(sink, &analysis.events, day, opts)?;
    Ok(())
}

/// Processes one unprocessed commit into the store atomically.
pub fn process_commit(
    commit: &CommitMeta,
    changes: &[FileChange],
    store: &mut Store,
    thresholds: &Thresholds,
    opts: ApplyOptions,
) -> Result<CommitSummary> {
    let analysis = analyze_commit(commit, changes, thresholds);
    let mut tx = store.begin()?;
    apply_analysis(&mut tx, &analysis, opts)?;
    tx.commit(&ProcessedCommit::now(commit.hash.clone()))?;
    Ok(CommitSummary {
        files_parsed: analysis.files_parsed,
        parse_failures: analysis.parse_failures,
        modified: analysis.modified.len() as u64,
        deleted: analysis.deleted.len() as u64,
        events: analysis.events,
    })
}

/// Removes the database and its side files.
pub fn remove_store(db_path: &Path) -> Result<()> {
    for suffix in ["", "-wal", "-shm", "-journal"] {
        let mut p = db_path.as_os_str().to_owned();
        p.push(suffix);
        match std::fs::remove_file(PathBuf::from(p)) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

/// Scans the window's commits that are not yet in the store.
pub fn process_window(config: &RunConfig) -> Result<ProcessSummary> {
    config.validate()?;
    let repo = open_repo(&config.repo_path)?;
    let db_path = config.db_path_for(repo.root());
    if config.rebuild {
        remove_store(&db_path)?;
    }
    let mut store = open_store(&db_path)?;
    store.lock_for_writing()?;

    let mut summary = ProcessSummary::default();
    for commit in repo.list_commits(&config.window)? {
        summary.commits_seen += 1;
        if store.is_processed(&commit.hash)? {
            summary.commits_skipped_cached += 1;
            continue;
        }
        let changes = repo.commit_file_changes(&commit, &config.window)?;
        let c = process_commit(
            &commit,
            &changes,
            &mut store,
            &config.thresholds,
            config.apply_options(),
        )?;
        summary.absorb(&c);
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ChangeModel;
    use crate::vcs::FileChangeKind;

    fn commit(ts: i64) -> CommitMeta {
        CommitMeta {
            hash: "0".repeat(40),
            author: "a".into(),
            timestamp: ts,
            parent_hashes: vec![],
            message: String::new(),
        }
    }

    fn modified(path: &str, before: &str, after: &str) -> FileChange {
        FileChange {
            path_before: Some(path.into()),
            path_after: Some(path.into()),
            kind: FileChangeKind::Modified,
            content_before: Some(before.into()),
            content_after: Some(after.into()),
        }
    }

    fn run(changes: &[FileChange], model: &mut ChangeModel) -> CommitAnalysis {
        let a = analyze_commit(&commit(1_700_000_000), changes, &Thresholds::default());
        apply_analysis(model, &a, ApplyOptions::default()).unwrap();
        a
    }

    fn id(q: &str) -> MethodIdentity {
        MethodIdentity::new("A.java", q, vec![])
    }

    #[test]
    fn body_edit_counts_once() {
        let mut m = ChangeModel::new();
        run(
            &[modified("A.java", "class A { void f() { a(); } void g() {} }", "class A { void f() { b(); } void g() {} }")],
            &mut m,
        );
        assert_eq!(m.get(&id("A#f")).unwrap().total_changes, 1);
        assert!(m.get(&id("A#g")).is_none());
    }

    #[test]
    fn rename_rekeys_and_counts() {
        let f = MethodIdentity::new("A.java", "A#f", vec!["int".into()]);
        let g = MethodIdentity::new("A.java", "A#g", vec!["int".into()]);
        let mut m = ChangeModel::new();
        m.increment(&f, day_of(1_699_000_000)).unwrap();
        let a = run(
            &[modified(
                "A.java",
                "class A { int f(int x) { return x * x + 1; } }",
                "class A { int g(int x) { return x * x + 1; } }",
            )],
            &mut m,
        );
        assert_eq!(a.events.len(), 1);
        assert!(m.get(&f).is_none());
        assert_eq!(m.get(&g).unwrap().total_changes, 2);
    }

    #[test]
    fn inline_host_counts_exactly_once() {
        let mut m = ChangeModel::new();
        m.increment(&id("A#g"), day_of(1_699_000_000)).unwrap();
        run(
            &[modified(
                "A.java",
                "class A { void h() { a(); g(); } void g() { x(1); y(2); } }",
                "class A { void h() { a(); x(1); y(2); } }",
            )],
            &mut m,
        );
        assert!(m.get(&id("A#g")).is_none());
        let h = m.get(&id("A#h")).unwrap();
        assert_eq!(h.total_changes, 1);
    }

    #[test]
    fn degraded_file_is_skipped() {
        let mut m = ChangeModel::new();
        let a = run(
            &[modified("A.java", "class A { void f() { a(); } }", "class A { void f() { b(); } /* open")],
            &mut m,
        );
        assert_eq!(a.parse_failures, 1);
        assert_eq!(a.files_parsed, 0);
        assert!(m.is_empty());
    }

    #[test]
    fn renamed_file_carries_stats() {
        let mut m = ChangeModel::new();
        m.increment(&id("A#f"), day_of(1_699_000_000)).unwrap();
        let change = FileChange {
            path_before: Some("A.java".into()),
            path_after: Some("sub/A.java".into()),
            kind: FileChangeKind::Renamed,
            content_before: Some("class A { void f() { a(); } }".into()),
            content_after: Some("class A { void f() { a(); } }".into()),
        };
        run(&[change], &mut m);
        assert!(m.get(&id("A#f")).is_none());
        let moved = MethodIdentity::new("sub/A.java", "A#f", vec![]);
        assert_eq!(m.get(&moved).unwrap().total_changes, 1);
    }

    #[test]
    fn deleted_method_loses_stats() {
        let mut m = ChangeModel::new();
        m.increment(&id("A#f"), day_of(1_699_000_000)).unwrap();
        run(
            &[modified("A.java", "class A { void f() { a(); } void k() {} }", "class A { void k() {} }")],
            &mut m,
        );
        assert!(m.is_empty());
    }

    #[test]
    fn config_validation() {
        let mut c = RunConfig::default();
        assert!(c.validate().is_ok());
        assert_eq!(c.window.days, 7);
        assert_eq!(c.top_n, 10);
        c.thresholds.rename = 0.0;
        assert!(c.validate().is_err());
        c.thresholds.rename = 0.5;
        c.top_n = 0;
        assert!(c.validate().is_err());
    }
}
