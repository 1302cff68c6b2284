//! SQLite persistence of method statistics and processed commits.
//!
//! Counts are merged with UPSERTs as commits are processed, so history is
//! read once. All writes of one commit go through a [`StoreTx`] whose last
//! statement marks the commit processed.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, Utc};
use rusqlite::{params, Connection, ErrorCode, OptionalExtension, Transaction};
use thiserror::Error;

use crate::model::{MethodStats, StatsSink};
use crate::parser::MethodIdentity;
use crate::window::WindowConfig;

pub const SCHEMA_VERSION: i64 = 1;

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS meta(schema_version INTEGER);
CREATE TABLE IF NOT EXISTS processed_commits(hash TEXT PRIMARY KEY, processed_at INTEGER);
CREATE TABLE IF NOT EXISTS method_stats(
    id TEXT PRIMARY KEY,
    file_path TEXT,
    qualified_name TEXT,
    total_changes INTEGER
);
CREATE TABLE IF NOT EXISTS daily_changes(
    id TEXT,
    day TEXT,
    count INTEGER,
    PRIMARY KEY(id, day)
);
CREATE INDEX IF NOT EXISTS method_stats_file ON method_stats(file_path);
";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("statistics database is corrupt: {0}")]
    StoreCorrupt(String),
    #[error("statistics database {} is in use by another process", .0.display())]
    Locked(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<rusqlite::Error> for StoreError {
    fn from(e: rusqlite::Error) -> Self {
        StoreError::StoreCorrupt(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, StoreError>;

/// A commit whose changes are already in the store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessedCommit {
    pub hash: String,
    pub processed_at: i64,
}

impl ProcessedCommit {
    pub fn now(hash: impl Into<String>) -> Self {
        ProcessedCommit {
            hash: hash.into(),
            processed_at: Utc::now().timestamp(),
        }
    }
}

#[derive(Debug)]
pub struct Store {
    conn: Connection,
    path: PathBuf,
    lock: Option<File>,
}

/// Opens or creates the database at `db_path`.
pub fn open_store(db_path: impl AsRef<Path>) -> Result<Store> {
    let path = db_path.as_ref().to_path_buf();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let conn = Connection::open(&path).map_err(corrupt_or_io)?;
    conn.busy_timeout(std::time::Duration::from_secs(5))?;
    conn.execute_batch(SCHEMA).map_err(corrupt_or_io)?;
    let version: Option<i64> = conn
        .query_row("SELECT schema_version FROM meta LIMIT 1", [], |r| r.get(0))
        .optional()?;
    match version {
        None => {
            conn.execute("INSERT INTO meta(schema_version) VALUES (?1)", [SCHEMA_VERSION])?;
        }
        Some(SCHEMA_VERSION) => {}
        Some(v) => {
            return Err(StoreError::StoreCorrupt(format!(
                "unsupported schema version {v}"
            )))
        }
    }
    Ok(Store {
        conn,
        path,
        lock: None,
    })
}

fn corrupt_or_io(e: rusqlite::Error) -> StoreError {
    match e.sqlite_error_code() {
        Some(ErrorCode::CannotOpen) => StoreError::Io(std::io::Error::other(e.to_string())),
        _ => StoreError::StoreCorrupt(e.to_string()),
    }
}

impl Store {
    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Takes the advisory writer lock next to the database file.
    pub fn lock_for_writing(&mut self) -> Result<()> {
        if self.lock.is_some() {
            return Ok(());
        }
        let mut lock_path = self.path.clone().into_os_string();
        lock_path.push(".lock");
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)?;
        match file.try_lock() {
            Ok(()) => {
                self.lock = Some(file);
                Ok(())
            }
            Err(std::fs::TryLockError::WouldBlock) => Err(StoreError::Locked(self.path.clone())),
            Err(std::fs::TryLockError::Error(e)) => Err(e.into()),
        }
    }

    pub fn schema_version(&self) -> Result<i64> {
        Ok(self
            .conn
            .query_row("SELECT schema_version FROM meta LIMIT 1", [], |r| r.get(0))?)
    }

    /// Adds `stats` to whatever is stored for its identity.
    pub fn upsert_stats(&mut self, stats: &MethodStats) -> Result<()> {
        let tx = self.conn.transaction()?;
        upsert(&tx, stats)?;
        tx.commit()?;
        Ok(())
    }

    pub fn rekey_stats(&mut self, old: &MethodIdentity, new: &MethodIdentity) -> Result<()> {
        let tx = self.conn.transaction()?;
        rekey(&tx, old, new)?;
        tx.commit()?;
        Ok(())
    }

    pub fn delete_stats(&mut self, id: &MethodIdentity) -> Result<()> {
        delete(&self.conn, id)
    }

    pub fn mark_processed(&mut self, commit: &ProcessedCommit) -> Result<()> {
        mark_processed(&self.conn, commit)
    }

    pub fn is_processed(&self, hash: &str) -> Result<bool> {
        Ok(self
            .conn
            .query_row(
                "SELECT 1 FROM processed_commits WHERE hash = ?1",
                [hash],
                |_| Ok(()),
            )
            .optional()?
            .is_some())
    }

    pub fn processed_count(&self) -> Result<u64> {
        Ok(self
            .conn
            .query_row("SELECT COUNT(*) FROM processed_commits", [], |r| r.get(0))?)
    }

    /// Starts the transaction that applies one commit.
    pub fn begin(&mut self) -> Result<StoreTx<'_>> {
        Ok(StoreTx {
            tx: self.conn.transaction()?,
        })
    }

    /// All-time statistics of one method, `None` when absent.
    pub fn get(&self, id: &MethodIdentity) -> Result<Option<MethodStats>> {
        let key = id.canonical();
        let exists: Option<i64> = self
            .conn
            .query_row("SELECT total_changes FROM method_stats WHERE id = ?1", [&key], |r| {
                r.get(0)
            })
            .optional()?;
        if exists.is_none() {
            return Ok(None);
        }
        let mut stats = MethodStats::new(id.clone());
        let mut stmt = self
            .conn
            .prepare_cached("SELECT day, count FROM daily_changes WHERE id = ?1 ORDER BY day")?;
        let rows = stmt.query_map([&key], |r| Ok((r.get::<_, String>(0)?, r.get::<_, i64>(1)?)))?;
        for row in rows {
            let (day, count) = row?;
            stats.record(parse_day(&day)?, count as u64);
        }
        Ok(Some(stats))
    }

    /// Statistics of the methods of `file_path` restricted to the window's
    /// dates; methods without changes in the window are left out.
    pub fn load_file_stats(&self, file_path: &str, window: &WindowConfig) -> Result<Vec<MethodStats>> {
        let (from, to) = date_bounds(window);
        self.collect(
            "SELECT m.id, d.day, d.count FROM method_stats m
             JOIN daily_changes d ON d.id = m.id
             WHERE m.file_path = ?1 AND d.day BETWEEN ?2 AND ?3
             ORDER BY m.id, d.day",
            params![file_path, from, to],
        )
    }

    /// Every method with changes in the window, by total descending then
    /// canonical identity ascending.
    pub fn load_window(&self, window: &WindowConfig) -> Result<Vec<MethodStats>> {
        let (from, to) = date_bounds(window);
        let mut out = self.collect(
            "SELECT d.id, d.day, d.count FROM daily_changes d
             WHERE d.day BETWEEN ?1 AND ?2
             ORDER BY d.id, d.day",
            params![from, to],
        )?;
        sort_hotspots(&mut out);
        Ok(out)
    }

    /// The `n` most changed methods in the window.
    pub fn top_hotspots(&self, n: usize, window: &WindowConfig) -> Result<Vec<MethodStats>> {
        let mut all = self.load_window(window)?;
        all.truncate(n);
        Ok(all)
    }

    /// Drops daily rows dated before the window and methods left empty.
    pub fn prune(&mut self, window: &WindowConfig) -> Result<usize> {
        let (from, _) = date_bounds(window);
        let tx = self.conn.transaction()?;
        let removed = tx.execute("DELETE FROM daily_changes WHERE day < ?1", [&from])?;
        tx.execute(
            "UPDATE method_stats SET total_changes =
                 (SELECT COALESCE(SUM(count), 0) FROM daily_changes d WHERE d.id = method_stats.id)",
            [],
        )?;
        tx.execute("DELETE FROM method_stats WHERE total_changes = 0", [])?;
        tx.commit()?;
        Ok(removed)
    }

    /// Deterministic dump of the statistics tables, for comparing stores.
    pub fn dump(&self) -> Result<String> {
        let mut out = String::new();
        let mut stmt = self.conn.prepare(
            "SELECT id, file_path, qualified_name, total_changes FROM method_stats ORDER BY id",
        )?;
        let rows = stmt.query_map([], |r| {
            Ok(format!(
                "method\t{}\t{}\t{}\t{}\n",
                r.get::<_, String>(0)?,
                r.get::<_, String>(1)?,
                r.get::<_, String>(2)?,
                r.get::<_, i64>(3)?
            ))
        })?;
        for r in rows {
            out.push_str(&r?);
        }
        let mut stmt = self
            .conn
            .prepare("SELECT id, day, count FROM daily_changes ORDER BY id, day")?;
        let rows = stmt.query_map([], |r| {
            Ok(format!(
                "daily\t{}\t{}\t{}\n",
                r.get::<_, String>(0)?,
                r.get::<_, String>(1)?,
                r.get::<_, i64>(2)?
            ))
        })?;
        for r in rows {
            out.push_str(&r?);
        }
        let mut stmt = self
            .conn
            .prepare("SELECT hash FROM processed_commits ORDER BY hash")?;
        let rows = stmt.query_map([], |r| r.get::<_, String>(0))?;
        for r in rows {
            out.push_str(&format!("commit\t{}\n", r?));
        }
        Ok(out)
    }

    fn collect(&self, sql: &str, params: impl rusqlite::Params) -> Result<Vec<MethodStats>> {
        let mut stmt = self.conn.prepare_cached(sql)?;
        let rows = stmt.query_map(params, |r| {
            Ok((
                r.get::<_, String>(0)?,
                r.get::<_, String>(1)?,
                r.get::<_, i64>(2)?,
            ))
        })?;
        let mut by_id: BTreeMap<String, MethodStats> = BTreeMap::new();
        for row in rows {
            let (id, day, count) = row?;
            if count <= 0 {
                continue;
            }
            if !by_id.contains_key(&id) {
                let identity = MethodIdentity::parse_canonical(&id).ok_or_else(|| {
                    StoreError::StoreCorrupt(format!("malformed method id {id:?}"))
                })?;
                by_id.insert(id.clone(), MethodStats::new(identity));
            }
            let stats = by_id.get_mut(&id).expect("inserted above");
            stats.record(parse_day(&day)?, count as u64);
        }
        Ok(by_id.into_values().collect())
    }
}

/// Orders by total descending, canonical identity ascending.
pub fn sort_hotspots(stats: &mut [MethodStats]) {
    stats.sort_by(|a, b| {
        b.total_changes
            .cmp(&a.total_changes)
            .then_with(|| a.identity.canonical().cmp(&b.identity.canonical()))
    });
}

fn date_bounds(window: &WindowConfig) -> (String, String) {
    (window.first_date().to_string(), window.end_date().to_string())
}

fn parse_day(s: &str) -> Result<NaiveDate> {
    s.parse()
        .map_err(|_| StoreError::StoreCorrupt(format!("malformed day {s:?}")))
}

fn upsert(conn: &Connection, stats: &MethodStats) -> Result<()> {
    if stats.daily.is_empty() {
        return Ok(());
    }
    let key = stats.identity.canonical();
    let total: u64 = stats.daily.values().sum();
    conn.prepare_cached(
        "INSERT INTO method_stats(id, file_path, qualified_name, total_changes)
         VALUES (?1, ?2, ?3, ?4)
         ON CONFLICT(id) DO UPDATE SET total_changes = total_changes + excluded.total_changes",
    )?
    .execute(params![
        key,
        stats.identity.file_path,
        stats.identity.qualified_name,
        total as i64
    ])?;
    let mut daily = conn.prepare_cached(
        "INSERT INTO daily_changes(id, day, count) VALUES (?1, ?2, ?3)
         ON CONFLICT(id, day) DO UPDATE SET count = count + excluded.count",
    )?;
    for (day, count) in &stats.daily {
        daily.execute(params![key, day.to_string(), *count as i64])?;
    }
    Ok(())
}

fn rekey(conn: &Connection, old: &MethodIdentity, new: &MethodIdentity) -> Result<()> {
    if old == new {
        return Ok(());
    }
    let old_key = old.canonical();
    let mut moved = MethodStats::new(new.clone());
    {
        let mut stmt = conn.prepare_cached("SELECT day, count FROM daily_changes WHERE id = ?1")?;
        let rows = stmt.query_map([&old_key], |r| Ok((r.get::<_, String>(0)?, r.get::<_, i64>(1)?)))?;
        for row in rows {
            let (day, count) = row?;
            moved.record(parse_day(&day)?, count.max(0) as u64);
        }
    }
    let old_total: Option<i64> = conn
        .query_row("SELECT total_changes FROM method_stats WHERE id = ?1", [&old_key], |r| r.get(0))
        .optional()?;
    let Some(old_total) = old_total else {
        return Ok(());
    };
    upsert(conn, &moved)?;
    // Counts of pruned days survive only in the total.
    let pruned = old_total - moved.total_changes as i64;
    if pruned > 0 {
        conn.execute(
            "INSERT INTO method_stats(id, file_path, qualified_name, total_changes)
             VALUES (?1, ?2, ?3, ?4)
             ON CONFLICT(id) DO UPDATE SET total_changes = total_changes + excluded.total_changes",
            params![new.canonical(), new.file_path, new.qualified_name, pruned],
        )?;
    }
    delete(conn, old)
}

fn delete(conn: &Connection, id: &MethodIdentity) -> Result<()> {
    let key = id.canonical();
    conn.prepare_cached("DELETE FROM daily_changes WHERE id = ?1")?
        .execute([&key])?;
    conn.prepare_cached("DELETE FROM method_stats WHERE id = ?1")?
        .execute([&key])?;
    Ok(())
}

fn contains(conn: &Connection, id: &MethodIdentity) -> Result<bool> {
    Ok(conn
        .prepare_cached("SELECT 1 FROM method_stats WHERE id = ?1")?
        .query_row([id.canonical()], |_| Ok(()))
        .optional()?
        .is_some())
}

fn mark_processed(conn: &Connection, commit: &ProcessedCommit) -> Result<()> {
    conn.execute(
        "INSERT INTO processed_commits(hash, processed_at) VALUES (?1, ?2)
         ON CONFLICT(hash) DO NOTHING",
        params![commit.hash, commit.processed_at],
    )?;
    Ok(())
}

/// Writes of one commit. Dropping without [`StoreTx::commit`] rolls back.
pub struct StoreTx<'a> {
    tx: Transaction<'a>,
}

impl StoreTx<'_> {
    pub fn upsert_stats(&mut self, stats: &MethodStats) -> Result<()> {
        upsert(&self.tx, stats)
    }

    /// Marks the commit processed and commits everything atomically.
    pub fn commit(self, commit: &ProcessedCommit) -> Result<()> {
        mark_processed(&self.tx, commit)?;
        self.tx.commit()?;
        Ok(())
    }
}

impl StatsSink for StoreTx<'_> {
    type Error = StoreError;

    fn contains(&mut self, id: &MethodIdentity) -> Result<bool> {
        contains(&self.tx, id)
    }

    fn increment(&mut self, id: &MethodIdentity, day: NaiveDate) -> Result<()> {
        let mut one = MethodStats::new(id.clone());
        one.record(day, 1);
        upsert(&self.tx, &one)
    }

    fn rekey(&mut self, old: &MethodIdentity, new: &MethodIdentity) -> Result<()> {
        rekey(&self.tx, old, new)
    }

    fn delete(&mut self, id: &MethodIdentity) -> Result<()> {
        delete(&self.tx, id)
    }
}
