//! Per-method change statistics held in memory.

use std::collections::BTreeMap;
use std::convert::Infallible;

use chrono::NaiveDate;

use crate::parser::MethodIdentity;
use crate::window::WindowConfig;

/// Change counts of one method.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodStats {
    pub identity: MethodIdentity,
    pub total_changes: u64,
    /// UTC date to positive change count.
    pub daily: BTreeMap<NaiveDate, u64>,
}

impl MethodStats {
    pub fn new(identity: MethodIdentity) -> Self {
        MethodStats {
            identity,
            total_changes: 0,
            daily: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, day: NaiveDate, count: u64) {
        if count == 0 {
            return;
        }
        *self.daily.entry(day).or_default() += count;
        self.total_changes += count;
    }

    /// Adds every count of `other` into `self`.
    pub fn merge(&mut self, other: &MethodStats) {
        for (&day, &count) in &other.daily {
            self.record(day, count);
        }
    }

    /// The same method restricted to the window's dates.
    pub fn windowed(&self, window: &WindowConfig) -> MethodStats {
        let mut out = MethodStats::new(self.identity.clone());
        for (&day, &count) in &self.daily {
            if window.contains_date(day) {
                out.record(day, count);
            }
        }
        out
    }

    /// Zero-filled counts for each window date, oldest first.
    pub fn histogram(&self, window: &WindowConfig) -> Vec<u64> {
        let mut out = vec![0; window.days as usize];
        for (&day, &count) in &self.daily {
            if let Some(i) = window.date_index(day) {
                out[i] += count;
            }
        }
        out
    }
}

/// Mutations the refactoring rules need. Implemented by [`ChangeModel`] and
/// by store transactions so both follow exactly the same update path.
pub trait StatsSink {
    type Error;

    fn contains(&mut self, id: &MethodIdentity) -> Result<bool, Self::Error>;

    /// Adds one change on `day`, creating the method's stats when absent.
    fn increment(&mut self, id: &MethodIdentity, day: NaiveDate) -> Result<(), Self::Error>;

    /// Moves all counts of `old` to `new`, merging additively. No-op when
    /// `old` is absent.
    fn rekey(&mut self, old: &MethodIdentity, new: &MethodIdentity) -> Result<(), Self::Error>;

    /// Removes `id`; no-op when absent.
    fn delete(&mut self, id: &MethodIdentity) -> Result<(), Self::Error>;
}

/// Method statistics grouped by file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChangeModel {
    files: BTreeMap<String, BTreeMap<MethodIdentity, MethodStats>>,
}

impl ChangeModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: &MethodIdentity) -> Option<&MethodStats> {
        self.files.get(&id.file_path)?.get(id)
    }

    pub fn file(&self, path: &str) -> impl Iterator<Item = &MethodStats> {
        self.files.get(path).into_iter().flat_map(|m| m.values())
    }

    pub fn iter(&self) -> impl Iterator<Item = &MethodStats> {
        self.files.values().flat_map(|m| m.values())
    }

    pub fn len(&self) -> usize {
        self.files.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn total_changes(&self) -> u64 {
        self.iter().map(|s| s.total_changes).sum()
    }

    /// Merges `stats` into the model; empty stats are ignored.
    pub fn insert(&mut self, stats: MethodStats) {
        if stats.daily.is_empty() {
            return;
        }
        self.files
            .entry(stats.identity.file_path.clone())
            .or_default()
            .entry(stats.identity.clone())
            .or_insert_with(|| MethodStats::new(stats.identity.clone()))
            .merge(&stats);
    }

    pub fn remove(&mut self, id: &MethodIdentity) -> Option<MethodStats> {
        let file = self.files.get_mut(&id.file_path)?;
        let out = file.remove(id);
        if file.is_empty() {
            self.files.remove(&id.file_path);
        }
        out
    }
}

impl FromIterator<MethodStats> for ChangeModel {
    fn from_iter<T: IntoIterator<Item = MethodStats>>(iter: T) -> Self {
        let mut model = ChangeModel::new();
        for s in iter {
            model.insert(s);
        }
        model
    }
}

impl StatsSink for ChangeModel {
    type Error = Infallible;

    fn contains(&mut self, id: &MethodIdentity) -> Result<bool, Infallible> {
        Ok(self.get(id).is_some())
    }

    fn increment(&mut self, id: &MethodIdentity, day: NaiveDate) -> Result<(), Infallible> {
        let mut one = MethodStats::new(id.clone());
        one.record(day, 1);
        self.insert(one);
        Ok(())
    }

    fn rekey(&mut self, old: &MethodIdentity, new: &MethodIdentity) -> Result<(), Infallible> {
        if old == new {
            return Ok(());
        }
        if let Some(mut stats) = self.remove(old) {
            stats.identity = new.clone();
            self.insert(stats);
        }
        Ok(())
    }

    fn delete(&mut self, id: &MethodIdentity) -> Result<(), Infallible> {
        self.remove(id);
        Ok(())
    }
}
