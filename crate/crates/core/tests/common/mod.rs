//! Shared fixtures: scripted Git repositories and Java source builders.
#![allow(dead_code)]

pub mod gen;
pub mod java;
pub mod mutate;

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use tempfile::TempDir;

/// 2024-06-01T12:00:00Z
pub const END: i64 = 1_717_243_200;
pub const DAY: i64 = 86_400;

/// A repository whose history is written with `git fast-import`, so commit
/// timestamps are exact and thousands of commits stay cheap.
///
/// Edits are staged with `write`/`remove`/`rename` and turned into a commit
/// on `main` by `commit`. The work tree is synced on `flush`.
pub struct ScriptRepo {
    tmp: TempDir,
    root: PathBuf,
    marks_file: PathBuf,
    files: BTreeMap<String, Vec<u8>>,
    dirty: BTreeMap<String, Option<Vec<u8>>>,
    stream: Vec<u8>,
    next_mark: u32,
    head: Option<u32>,
    marks: HashMap<u32, String>,
}

pub fn git(dir: &Path, args: &[&str]) -> String {
    let out = Command::new("git")
        .args(args)
        .current_dir(dir)
        .output()
        .expect("git runs");
    assert!(
        out.status.success(),
        "git {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

impl ScriptRepo {
    pub fn new() -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().join("repo");
        std::fs::create_dir(&root).unwrap();
        git(&root, &["init", "-q", "-b", "main"]);
        ScriptRepo {
            marks_file: tmp.path().join("marks"),
            tmp,
            root,
            files: BTreeMap::new(),
            dirty: BTreeMap::new(),
            stream: Vec::new(),
            next_mark: 1,
            head: None,
            marks: HashMap::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// A scratch directory outside the repository.
    pub fn scratch(&self) -> &Path {
        self.tmp.path()
    }

    pub fn write(&mut self, path: &str, content: impl Into<Vec<u8>>) -> &mut Self {
        let content = content.into();
        self.files.insert(path.to_owned(), content.clone());
        self.dirty.insert(path.to_owned(), Some(content));
        self
    }

    pub fn remove(&mut self, path: &str) -> &mut Self {
        self.files.remove(path);
        self.dirty.insert(path.to_owned(), None);
        self
    }

    pub fn rename(&mut self, from: &str, to: &str) -> &mut Self {
        let content = self.files.get(from).cloned().expect("renamed file exists");
        self.remove(from);
        self.write(to, content)
    }

    pub fn file(&self, path: &str) -> Option<&str> {
        self.files.get(path).map(|b| std::str::from_utf8(b).unwrap())
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    /// Commits the staged edits on `main` at `ts` and returns its mark.
    pub fn commit(&mut self, ts: i64, msg: &str) -> u32 {
        let mark = self.header("refs/heads/main", ts, msg);
        if let Some(h) = self.head {
            self.push(format!("from :{h}\n"));
        }
        self.emit_dirty();
        self.head = Some(mark);
        mark
    }

    /// A commit on a side branch with `parent` as its only parent.
    pub fn side_commit(&mut self, parent: u32, ts: i64, msg: &str, writes: &[(&str, &str)]) -> u32 {
        let mark = self.header("refs/heads/side", ts, msg);
        self.push(format!("from :{parent}\n"));
        for (p, c) in writes {
            self.emit_file(p, Some(c.as_bytes()));
        }
        mark
    }

    /// Merges `other` into `main`; the tree is main's plus staged edits.
    pub fn merge(&mut self, other: u32, ts: i64, msg: &str) -> u32 {
        let mark = self.header("refs/heads/main", ts, msg);
        self.push(format!("from :{}\n", self.head.expect("main has a commit")));
        self.push(format!("merge :{other}\n"));
        self.emit_dirty();
        self.head = Some(mark);
        mark
    }

    /// Runs fast-import on everything queued and checks out `main`.
    pub fn flush(&mut self) {
        if self.stream.is_empty() {
            return;
        }
        let marks = self.marks_file.to_str().unwrap().to_owned();
        let mut child = Command::new("git")
            .args([
                "fast-import",
                "--quiet",
                "--force",
                &format!("--import-marks-if-exists={marks}"),
                &format!("--export-marks={marks}"),
            ])
            .current_dir(&self.root)
            .stdin(Stdio::piped())
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .spawn()
            .unwrap();
        let stream = std::mem::take(&mut self.stream);
        child.stdin.take().unwrap().write_all(&stream).unwrap();
        let out = child.wait_with_output().unwrap();
        assert!(out.status.success(), "fast-import: {}", String::from_utf8_lossy(&out.stderr));
        git(&self.root, &["reset", "-q", "--hard", "main"]);
        for line in std::fs::read_to_string(&self.marks_file).unwrap().lines() {
            let (m, h) = line.split_once(' ').unwrap();
            self.marks.insert(m[1..].parse().unwrap(), h.to_owned());
        }
    }

    pub fn hash(&mut self, mark: u32) -> String {
        self.flush();
        self.marks[&mark].clone()
    }

    fn header(&mut self, branch: &str, ts: i64, msg: &str) -> u32 {
        let mark = self.next_mark;
        self.next_mark += 1;
        self.push(format!(
            "commit {branch}\nmark :{mark}\nauthor Dev <dev@example.com> {ts} +0000\ncommitter Dev <dev@example.com> {ts} +0000\ndata {}\n{msg}\n",
            msg.len()
        ));
        mark
    }

    fn emit_dirty(&mut self) {
        for (path, content) in std::mem::take(&mut self.dirty) {
            self.emit_file(&path, content.as_deref());
        }
    }

    fn emit_file(&mut self, path: &str, content: Option<&[u8]>) {
        match content {
            Some(c) => {
                self.push(format!("M 100644 inline {path}\ndata {}\n", c.len()));
                self.stream.extend_from_slice(c);
                self.stream.push(b'\n');
            }
            None => self.push(format!("D {path}\n")),
        }
    }

    fn push(&mut self, s: String) {
        self.stream.extend_from_slice(s.as_bytes());
    }
}

/// Runs the command line in-process: (exit code, stdout, stderr).
pub fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = churnscope::cli::run(
        std::iter::once("churnscope").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

/// Runs the built binary: (exit code, stdout, stderr).
pub fn bin(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_churnscope"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}
