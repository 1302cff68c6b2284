use chrono::{DateTime, Days, NaiveDate, Utc};

pub const SECONDS_PER_DAY: i64 = 86_400;
pub const DEFAULT_DAYS: u32 = 7;

/// The analyzed time period.
///
/// Commits are selected by the closed interval
/// `[end_time - days * 86400, end_time]`. Reports bucket by UTC calendar
/// date and cover the `days` dates ending on the date of `end_time`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowConfig {
    pub days: u32,
    /// UTC seconds since the epoch.
    pub end_time: i64,
    /// Extensions including the leading dot, e.g. `.java`.
    pub source_extensions: Vec<String>,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            days: DEFAULT_DAYS,
            end_time: Utc::now().timestamp(),
            source_extensions: vec![".java".to_owned()],
        }
    }
}

impl WindowConfig {
    pub fn new(days: u32, end_time: i64) -> Self {
        WindowConfig {
            days,
            end_time,
            ..WindowConfig::default()
        }
    }

    pub fn start_time(&self) -> i64 {
        self.end_time - i64::from(self.days) * SECONDS_PER_DAY
    }

    pub fn contains_time(&self, ts: i64) -> bool {
        (self.start_time()..=self.end_time).contains(&ts)
    }

    pub fn end_date(&self) -> NaiveDate {
        day_of(self.end_time)
    }

    /// First date of the reporting range.
    pub fn first_date(&self) -> NaiveDate {
        self.end_date()
            .checked_sub_days(Days::new(u64::from(self.days.max(1)) - 1))
            .unwrap_or(NaiveDate::MIN)
    }

    /// The `days` reporting dates, oldest first.
    pub fn dates(&self) -> Vec<NaiveDate> {
        self.first_date()
            .iter_days()
            .take(self.days as usize)
            .collect()
    }

    pub fn contains_date(&self, date: NaiveDate) -> bool {
        (self.first_date()..=self.end_date()).contains(&date)
    }

    /// Position of `date` in [`WindowConfig::dates`].
    pub fn date_index(&self, date: NaiveDate) -> Option<usize> {
        self.contains_date(date)
            .then(|| (date - self.first_date()).num_days() as usize)
    }

    pub fn matches_path(&self, path: &str) -> bool {
        self.source_extensions.iter().any(|ext| path.ends_with(ext.as_str()))
    }
}

/// UTC calendar date of a unix timestamp.
pub fn day_of(ts: i64) -> NaiveDate {
    DateTime::<Utc>::from_timestamp(ts, 0)
        .map(|d| d.date_naive())
        .unwrap_or(NaiveDate::MIN)
}
