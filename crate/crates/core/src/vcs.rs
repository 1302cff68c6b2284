//! Read-only access to a Git repository's mainline history.
//!
//! Uses the `git` plumbing commands (`rev-parse`, `log`, `diff-tree` and a
//! long-lived `cat-file --batch`) rather than linking libgit2. Nothing here
//! ever writes to the repository.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use thiserror::Error;

pub use crate::window::WindowConfig;

/// Files whose similarity reaches this share of identical lines pair up as
/// renames.
pub const RENAME_LINE_THRESHOLD: f64 = 0.60;

// Same heuristic as git: a NUL in the first 8000 bytes means binary.
const BINARY_SNIFF_LEN: usize = 8000;

#[derive(Debug, Error)]
pub enum VcsError {
    #[error("no Git repository found at or above {}", .0.display())]
    NoVcsRoot(PathBuf),
    #[error("repository is unreadable: {0}")]
    CorruptRepo(String),
    #[error("failed to run git: {0}")]
    GitUnavailable(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, VcsError>;

/// One commit on the mainline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitMeta {
    pub hash: String,
    pub author: String,
    /// Author time, UTC seconds.
    pub timestamp: i64,
    pub parent_hashes: Vec<String>,
    pub message: String,
}

impl CommitMeta {
    pub fn first_parent(&self) -> Option<&str> {
        self.parent_hashes.first().map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FileChangeKind {
    Added,
    Deleted,
    Modified,
    Renamed,
}

/// Before and after revisions of one changed source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileChange {
    pub path_before: Option<String>,
    pub path_after: Option<String>,
    pub kind: FileChangeKind,
    pub content_before: Option<String>,
    pub content_after: Option<String>,
}

impl FileChange {
    /// The path the change is reported under: the new path when it exists.
    pub fn path(&self) -> &str {
        self.path_after
            .as_deref()
            .or(self.path_before.as_deref())
            .unwrap_or_default()
    }

    /// Checks the per-kind presence rules.
    pub fn is_well_formed(&self) -> bool {
        match self.kind {
            FileChangeKind::Added => {
                self.path_before.is_none()
                    && self.content_before.is_none()
                    && self.path_after.is_some()
                    && self.content_after.is_some()
            }
            FileChangeKind::Deleted => {
                self.path_after.is_none()
                    && self.content_after.is_none()
                    && self.path_before.is_some()
                    && self.content_before.is_some()
            }
            FileChangeKind::Modified => {
                self.content_before.is_some()
                    && self.content_after.is_some()
                    && self.path_before.is_some()
                    && self.path_before == self.path_after
            }
            FileChangeKind::Renamed => {
                self.content_before.is_some()
                    && self.content_after.is_some()
                    && self.path_before.is_some()
                    && self.path_after.is_some()
                    && self.path_before != self.path_after
            }
        }
    }
}

struct CatFile {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl Drop for CatFile {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// An opened repository.
pub struct RepoHandle {
    root: PathBuf,
    head: Option<String>,
    cat: Mutex<Option<CatFile>>,
}

impl std::fmt::Debug for RepoHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RepoHandle")
            .field("root", &self.root)
            .field("head", &self.head)
            .finish()
    }
}

fn git_command(dir: &Path) -> Command {
    let mut cmd = Command::new("git");
    cmd.arg("-C").arg(dir);
    cmd.env("GIT_OPTIONAL_LOCKS", "0");
    cmd.env("LC_ALL", "C");
    cmd
}

/// Opens the repository containing `path`, searching parent directories.
pub fn open_repo(path: impl AsRef<Path>) -> Result<RepoHandle> {
    let path = path.as_ref();
    if !path.is_dir() {
        return Err(VcsError::NoVcsRoot(path.to_path_buf()));
    }
    let out = git_command(path)
        .args(["rev-parse", "--show-toplevel"])
        .stderr(Stdio::piped())
        .output()?;
    if !out.status.success() {
        let err = String::from_utf8_lossy(&out.stderr);
        if err.contains("not a git repository") || err.contains("bare repository") {
            return Err(VcsError::NoVcsRoot(path.to_path_buf()));
        }
        return Err(VcsError::CorruptRepo(err.trim().to_owned()));
    }
    let root = PathBuf::from(String::from_utf8_lossy(&out.stdout).trim_end_matches('\n'));

    let head = git_command(&root)
        .args(["rev-parse", "--verify", "--quiet", "HEAD^{commit}"])
        .stderr(Stdio::null())
        .output()?;
    let head = head
        .status
        .success()
        .then(|| String::from_utf8_lossy(&head.stdout).trim().to_owned());
    Ok(RepoHandle {
        root,
        head,
        cat: Mutex::new(None),
    })
}

impl RepoHandle {
    /// Top level of the working tree.
    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Hash of the checked-out branch head, `None` before the first commit.
    pub fn head(&self) -> Option<&str> {
        self.head.as_deref()
    }

    fn run(&self, args: &[&str]) -> Result<Vec<u8>> {
        let out = git_command(&self.root)
            .args(args)
            .stderr(Stdio::piped())
            .output()?;
        if !out.status.success() {
            return Err(VcsError::CorruptRepo(format!(
                "git {} failed: {}",
                args.join(" "),
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        Ok(out.stdout)
    }

    /// First-parent commits from head whose author time falls in the window,
    /// ordered by `(timestamp, hash)`.
    pub fn list_commits(&self, window: &WindowConfig) -> Result<Vec<CommitMeta>> {
        let Some(head) = self.head.as_deref() else {
            return Ok(Vec::new());
        };
        let raw = self.run(&[
            "log",
            "--first-parent",
            "-z",
            "--no-color",
            "--format=%H%x00%an%x00%at%x00%P%x00%B",
            head,
        ])?;
        let text = String::from_utf8_lossy(&raw);
        let mut commits = parse_log(&text)?;
        commits.retain(|c| window.contains_time(c.timestamp));
        commits.sort_by(|a, b| (a.timestamp, &a.hash).cmp(&(b.timestamp, &b.hash)));
        commits.dedup_by(|a, b| a.hash == b.hash);
        Ok(commits)
    }

    /// Source files changed by `commit` relative to its first parent, with
    /// both revisions loaded. Binary blobs are skipped and add/delete pairs
    /// with mostly identical lines are reported as renames.
    pub fn commit_file_changes(
        &self,
        commit: &CommitMeta,
        window: &WindowConfig,
    ) -> Result<Vec<FileChange>> {
        let raw = match commit.first_parent() {
            Some(parent) => self.run(&[
                "diff-tree",
                "-r",
                "-z",
                "--no-renames",
                "--no-color",
                parent,
                &commit.hash,
            ])?,
            None => self.run(&[
                "diff-tree",
                "-r",
                "-z",
                "--root",
                "--no-renames",
                "--no-color",
                &commit.hash,
            ])?,
        };
        let entries = parse_raw_diff(&raw)?;

        let mut added = Vec::new();
        let mut deleted = Vec::new();
        let mut changes = Vec::new();
        for e in entries {
            if !window.matches_path(&e.path) {
                continue;
            }
            let before = if e.old_blob() {
                match self.read_text(&e.old_sha)? {
                    Some(t) => Some(t),
                    None => continue,
                }
            } else {
                None
            };
            let after = if e.new_blob() {
                match self.read_text(&e.new_sha)? {
                    Some(t) => Some(t),
                    None => continue,
                }
            } else {
                None
            };
            match (before, after) {
                (Some(b), Some(a)) => changes.push(FileChange {
                    path_before: Some(e.path.clone()),
                    path_after: Some(e.path),
                    kind: FileChangeKind::Modified,
                    content_before: Some(b),
                    content_after: Some(a),
                }),
                (None, Some(a)) => added.push((e.path, a)),
                (Some(b), None) => deleted.push((e.path, b)),
                (None, None) => {}
            }
        }

        let pairs = pair_renames(&deleted, &added);
        let mut used_deleted = vec![false; deleted.len()];
        let mut used_added = vec![false; added.len()];
        for &(d, a) in &pairs {
            used_deleted[d] = true;
            used_added[a] = true;
            changes.push(FileChange {
                path_before: Some(deleted[d].0.clone()),
                path_after: Some(added[a].0.clone()),
                kind: FileChangeKind::Renamed,
                content_before: Some(deleted[d].1.clone()),
                content_after: Some(added[a].1.clone()),
            });
        }
        for (i, (path, text)) in added.into_iter().enumerate() {
            if !used_added[i] {
                changes.push(FileChange {
                    path_before: None,
                    path_after: Some(path),
                    kind: FileChangeKind::Added,
                    content_before: None,
                    content_after: Some(text),
                });
            }
        }
        for (i, (path, text)) in deleted.into_iter().enumerate() {
            if !used_deleted[i] {
                changes.push(FileChange {
                    path_before: Some(path),
                    path_after: None,
                    kind: FileChangeKind::Deleted,
                    content_before: Some(text),
                    content_after: None,
                });
            }
        }
        changes.sort_by(|a, b| a.path().cmp(b.path()).then(a.kind.cmp(&b.kind)));
        Ok(changes)
    }

    /// Contents of a blob decoded lossily as UTF-8; `None` when binary.
    fn read_text(&self, sha: &str) -> Result<Option<String>> {
        let bytes = self.read_blob(sha)?;
        let sniff = &bytes[..bytes.len().min(BINARY_SNIFF_LEN)];
        if sniff.contains(&0) {
            return Ok(None);
        }
        Ok(Some(String::from_utf8_lossy(&bytes).into_owned()))
    }

    fn read_blob(&self, sha: &str) -> Result<Vec<u8>> {
        let mut guard = self
            .cat
            .lock()
            .map_err(|_| VcsError::CorruptRepo("blob reader poisoned".into()))?;
        if guard.is_none() {
            let mut child = git_command(&self.root)
                .args(["cat-file", "--batch"])
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .stderr(Stdio::null())
                .spawn()?;
            let stdin = child.stdin.take().expect("piped stdin");
            let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
            *guard = Some(CatFile {
                child,
                stdin,
                stdout,
            });
        }
        let cat = guard.as_mut().expect("initialized above");
        let res = read_batch_object(cat, sha);
        if res.is_err() {
            *guard = None;
        }
        res
    }
}

fn read_batch_object(cat: &mut CatFile, sha: &str) -> Result<Vec<u8>> {
    writeln!(cat.stdin, "{sha}")?;
    cat.stdin.flush()?;
    let mut header = String::new();
    cat.stdout.read_line(&mut header)?;
    let mut parts = header.split_whitespace();
    let _ = parts.next();
    let kind = parts.next().unwrap_or("missing");
    if kind != "blob" {
        return Err(VcsError::CorruptRepo(format!("object {sha} is {kind}")));
    }
    let size: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| VcsError::CorruptRepo(format!("bad cat-file header {header:?}")))?;
    let mut buf = vec![0u8; size + 1];
    cat.stdout.read_exact(&mut buf)?;
    buf.truncate(size);
    Ok(buf)
}

fn parse_log(text: &str) -> Result<Vec<CommitMeta>> {
    let mut fields = text.split('\0');
    let mut out = Vec::new();
    while let Some(h) = fields.next() {
        let hash = h.trim_start_matches('\n');
        if hash.is_empty() {
            continue;
        }
        let malformed = || VcsError::CorruptRepo(format!("malformed log entry for {hash}"));
        let author = fields.next().ok_or_else(malformed)?;
        let ts = fields.next().ok_or_else(malformed)?;
        let parents = fields.next().ok_or_else(malformed)?;
        let message = fields.next().ok_or_else(malformed)?;
        if hash.len() != 40 || !hash.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(malformed());
        }
        out.push(CommitMeta {
            hash: hash.to_ascii_lowercase(),
            author: author.to_owned(),
            timestamp: ts.parse().map_err(|_| malformed())?,
            parent_hashes: parents.split_whitespace().map(str::to_owned).collect(),
            message: message.trim_end().to_owned(),
        });
    }
    Ok(out)
}

#[derive(Debug)]
struct RawEntry {
    old_mode: String,
    new_mode: String,
    old_sha: String,
    new_sha: String,
    path: String,
}

fn is_regular_file(mode: &str) -> bool {
    matches!(mode, "100644" | "100755" | "100664")
}

impl RawEntry {
    fn old_blob(&self) -> bool {
        is_regular_file(&self.old_mode)
    }

    fn new_blob(&self) -> bool {
        is_regular_file(&self.new_mode)
    }
}

fn parse_raw_diff(raw: &[u8]) -> Result<Vec<RawEntry>> {
    let text = String::from_utf8_lossy(raw);
    let mut parts = text.split('\0').filter(|s| !s.is_empty());
    let mut out = Vec::new();
    while let Some(meta) = parts.next() {
        let meta = meta.trim_start_matches('\n');
        // A bare hash line precedes the entries of a root commit diff.
        let Some(meta) = meta.strip_prefix(':') else {
            continue;
        };
        let path = parts
            .next()
            .ok_or_else(|| VcsError::CorruptRepo("truncated diff-tree output".into()))?;
        let cols: Vec<&str> = meta.split(' ').collect();
        if cols.len() < 5 {
            return Err(VcsError::CorruptRepo(format!("bad diff-tree line {meta:?}")));
        }
        out.push(RawEntry {
            old_mode: cols[0].to_owned(),
            new_mode: cols[1].to_owned(),
            old_sha: cols[2].to_owned(),
            new_sha: cols[3].to_owned(),
            path: path.to_owned(),
        });
    }
    Ok(out)
}

/// Share of identical lines between two texts: multiset line overlap over
/// the longer line count. Empty files never pair.
pub fn line_similarity(a: &str, b: &str) -> f64 {
    let la: Vec<&str> = a.lines().collect();
    let lb: Vec<&str> = b.lines().collect();
    let longest = la.len().max(lb.len());
    if la.is_empty() || lb.is_empty() {
        return 0.0;
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for l in &la {
        *counts.entry(l).or_default() += 1;
    }
    let mut common = 0usize;
    for l in &lb {
        if let Some(c) = counts.get_mut(l) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    common as f64 / longest as f64
}

/// Greedy best-first pairing of deleted and added files.
fn pair_renames(deleted: &[(String, String)], added: &[(String, String)]) -> Vec<(usize, usize)> {
    let mut candidates = Vec::new();
    for (d, (dp, dt)) in deleted.iter().enumerate() {
        for (a, (ap, at)) in added.iter().enumerate() {
            let score = line_similarity(dt, at);
            if score >= RENAME_LINE_THRESHOLD {
                candidates.push((score, dp, ap, d, a));
            }
        }
    }
    candidates.sort_by(|x, y| {
        y.0.total_cmp(&x.0)
            .then_with(|| x.1.cmp(y.1))
            .then_with(|| x.2.cmp(y.2))
    });
    let mut taken_d = vec![false; deleted.len()];
    let mut taken_a = vec![false; added.len()];
    let mut out = Vec::new();
    for (_, _, _, d, a) in candidates {
        if !taken_d[d] && !taken_a[a] {
            taken_d[d] = true;
            taken_a[a] = true;
            out.push((d, a));
        }
    }
    out
}
