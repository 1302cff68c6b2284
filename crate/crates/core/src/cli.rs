//! Command-line front end. [`run`] is the whole program minus process
//! plumbing, so it can be driven from tests.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use clap::{Parser, Subcommand, ValueEnum};

use crate::pipeline::{process_window, OutputKind, PipelineError, RunConfig, STORE_DIR};
use crate::refactor::Thresholds;
use crate::report::{annotate_file, render_hotspots, render_html, render_json, resolve_lines};
use crate::store::{open_store, StoreError};
use crate::vcs::{open_repo, VcsError};
use crate::window::{WindowConfig, DEFAULT_DAYS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_NO_REPO: i32 = 2;
pub const EXIT_STORE_CORRUPT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "churnscope",
    version,
    about = "Per-method change history for Java code in a Git repository"
)]
pub struct Cli {
    /// Repository to analyze (any directory inside it).
    #[arg(long, global = true, default_value = ".")]
    pub repo: PathBuf,
    /// Length of the window in days.
    #[arg(long, global = true, default_value_t = DEFAULT_DAYS)]
    pub days: u32,
    /// Statistics database [default: <repo>/.churnscope/stats.db]
    #[arg(long, global = true)]
    pub db: Option<PathBuf>,
    /// Number of hotspots to list.
    #[arg(long, global = true, default_value_t = crate::pipeline::DEFAULT_TOP_N)]
    pub top: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long, global = true, default_value_t = Thresholds::default().rename)]
    pub rename_threshold: f64,
    #[arg(long, global = true, default_value_t = Thresholds::default().moved)]
    pub move_threshold: f64,
    /// Body containment needed to report an extract or inline.
    #[arg(long, global = true, default_value_t = Thresholds::default().containment)]
    pub containment: f64,
    /// Carry renamed and moved methods' history without counting the
    /// refactoring itself as a change.
    #[arg(long, global = true)]
    pub no_count_renames: bool,
    /// Discard the database and rescan the window (scan only).
    #[arg(long, global = true)]
    pub rebuild: bool,
    /// End of the window: RFC 3339 time, YYYY-MM-DD (end of that day, UTC)
    /// or Unix seconds [default: now]
    #[arg(long, global = true, value_parser = parse_until)]
    pub until: Option<i64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bring the database up to date without printing a report.
    Scan,
    /// Print a source file with change counts above each method.
    Annotate { file: PathBuf },
    /// List the most frequently changed methods.
    Hotspots,
    /// Write all windowed statistics as JSON.
    ExportJson {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write static HTML pages with per-method charts.
    ExportHtml {
        /// [default: <repo>/.churnscope/html]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Drop daily counts older than the window.
    Prune,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Html,
}

fn parse_until(s: &str) -> Result<i64, String> {
    if let Ok(t) = s.parse::<i64>() {
        return Ok(t);
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.timestamp());
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        let t = d.and_hms_opt(23, 59, 59).expect("valid time").and_utc();
        return Ok(t.timestamp());
    }
    Err(format!("cannot read {s:?} as a time"))
}

impl Cli {
    pub fn run_config(&self) -> RunConfig {
        let end = self.until.unwrap_or_else(|| Utc::now().timestamp());
        let output = match (&self.command, self.format) {
            (Command::Annotate { .. }, _) => OutputKind::Annotate,
            (Command::ExportJson { .. }, _) | (_, Format::Json) => OutputKind::Json,
            (Command::ExportHtml { .. }, _) | (_, Format::Html) => OutputKind::Html,
            _ => OutputKind::Hotspots,
        };
        RunConfig {
            repo_path: self.repo.clone(),
            window: WindowConfig::new(self.days, end),
            db_path: self.db.clone(),
            thresholds: Thresholds {
                rename: self.rename_threshold,
                moved: self.move_threshold,
                containment: self.containment,
                ..Thresholds::default()
            },
            count_renames: !self.no_count_renames,
            output,
            top_n: self.top,
            rebuild: self.rebuild,
        }
    }
}

/// Parses `args` (including the program name), executes the command and
/// returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FAILURE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let (code, prefix) = match &e {
                PipelineError::Vcs(VcsError::NoVcsRoot(_)) => (EXIT_NO_REPO, "warning"),
                PipelineError::Store(StoreError::StoreCorrupt(_)) => (EXIT_STORE_CORRUPT, "error"),
                _ => (EXIT_FAILURE, "error"),
            };
            let _ = writeln!(err, "{prefix}: {e}");
            if code == EXIT_STORE_CORRUPT {
                let _ = writeln!(err, "hint: rerun with --rebuild to recreate the database");
            }
            code
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), PipelineError> {
    let config = cli.run_config();
    config.validate()?;
    let window = &config.window;

    if let Command::Prune = cli.command {
        let repo = open_repo(&config.repo_path)?;
        let mut store = open_store(config.db_path_for(repo.root()))?;
        store.lock_for_writing()?;
        let removed = store.prune(window)?;
        writeln!(out, "pruned {removed} daily entries")?;
        return Ok(());
    }

    if let Command::Scan = cli.command {
        let summary = process_window(&config)?;
        match cli.format {
            Format::Json => {
                let s = serde_json::to_string_pretty(&summary).expect("plain data serializes");
                writeln!(out, "{s}")?;
            }
            _ => {
                writeln!(
                    out,
                    "{} commits in window, {} processed, {} already in database; {} files parsed, {} unparseable",
                    summary.commits_seen,
                    summary.commits_processed,
                    summary.commits_skipped_cached,
                    summary.files_parsed,
                    summary.parse_failures
                )?;
                for (kind, n) in &summary.events_by_kind {
                    writeln!(out, "  {kind}: {n}")?;
                }
            }
        }
        return Ok(());
    }

    // Reports only read what earlier scans stored.
    let repo = open_repo(&config.repo_path)?;
    let root = repo.root().to_path_buf();
    let store = open_store(config.db_path_for(&root))?;
    match &cli.command {
        Command::Annotate { file } => {
            let rel = repo_relative(&root, file)?;
            let source = std::fs::read(root.join(&rel))?;
            let source = String::from_utf8_lossy(&source);
            let stats = store.load_file_stats(&rel, window)?;
            let annotated = annotate_file(&source, &rel, &stats, window);
            for w in &annotated.warnings {
                writeln!(err, "warning: {w}")?;
            }
            out.write_all(annotated.text.as_bytes())?;
        }
        Command::Hotspots => {
            let top = store.top_hotspots(config.top_n, window)?;
            let lines = resolve_lines(&root, &top);
            match cli.format {
                Format::Text => out.write_all(render_hotspots(&top, config.top_n, &lines).as_bytes())?,
                Format::Json => out.write_all(render_json(&top, window, &lines).as_bytes())?,
                Format::Html => {
                    let dir = root.join(STORE_DIR).join("html");
                    render_html(&top, window, &lines, &dir)?;
                    writeln!(out, "{}", dir.join("index.html").display())?;
                }
            }
        }
        Command::ExportJson { out: path } => {
            let all = store.load_window(window)?;
            let lines = resolve_lines(&root, &all);
            let json = render_json(&all, window, &lines);
            match path {
                Some(p) => std::fs::write(p, json)?,
                None => out.write_all(json.as_bytes())?,
            }
        }
        Command::ExportHtml { out: dir } => {
            let all = store.load_window(window)?;
            let lines = resolve_lines(&root, &all);
            let dir = dir.clone().unwrap_or_else(|| root.join(STORE_DIR).join("html"));
            render_html(&all, window, &lines, &dir)?;
            writeln!(out, "{}", dir.join("index.html").display())?;
        }
        Command::Scan | Command::Prune => unreachable!("handled above"),
    }
    Ok(())
}

/// Repository-relative, `/`-separated form of `file`, which may be given
/// relative to the working directory or to the repository root.
fn repo_relative(root: &Path, file: &Path) -> Result<String, PipelineError> {
    let candidates = [file.to_path_buf(), root.join(file)];
    let full = candidates
        .iter()
        .find_map(|p| p.canonicalize().ok())
        .ok_or_else(|| {
            std::io::Error::new(std::io::ErrorKind::NotFound, format!("{}: no such file", file.display()))
        })?;
    let root = root.canonicalize()?;
    let rel = full.strip_prefix(&root).map_err(|_| {
        PipelineError::InvalidConfig(format!("{} is outside the repository", file.display()))
    })?;
    Ok(rel
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/"))
}
