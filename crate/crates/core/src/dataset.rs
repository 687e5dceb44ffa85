//! Event-log ingestion, preprocessing and the leave-the-latest-out split.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to read event log: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid log format: {0}")]
    Format(String),
}

/// One implicit-feedback event: `user` saved `item` at `timestamp` (seconds).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingEvent {
    pub user: String,
    pub item: String,
    pub timestamp: i64,
}

impl RatingEvent {
    pub fn new(user: impl Into<String>, item: impl Into<String>, timestamp: i64) -> Self {
        RatingEvent { user: user.into(), item: item.into(), timestamp }
    }
}

/// Raw events in input order. Duplicate `(user, item)` pairs are allowed here.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RatingLog {
    pub events: Vec<RatingEvent>,
}

impl RatingLog {
    pub fn new(events: Vec<RatingEvent>) -> Self {
        RatingLog { events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Serializes the log using `format`, one event per LF-terminated line.
    pub fn to_delimited(&self, format: &LogFormat) -> String {
        let mut out = String::new();
        for e in &self.events {
            for (pos, col) in format.columns.iter().enumerate() {
                if pos > 0 {
                    out.push(format.delimiter);
                }
                match col {
                    Column::User => out.push_str(&e.user),
                    Column::Item => out.push_str(&e.item),
                    Column::Timestamp => out.push_str(&e.timestamp.to_string()),
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    User,
    Item,
    Timestamp,
}

/// Delimiter and column order of a line-oriented event log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogFormat {
    pub delimiter: char,
    pub columns: [Column; 3],
}

impl Default for LogFormat {
    fn default() -> Self {
        LogFormat { delimiter: '\t', columns: [Column::User, Column::Item, Column::Timestamp] }
    }
}

impl LogFormat {
    /// Builds a format from a delimiter and a column order such as `user,item,timestamp`.
    pub fn new(delimiter: char, order: &str) -> Result<Self, DatasetError> {
        let names: Vec<&str> = order.split(',').map(str::trim).collect();
        if names.len() != 3 {
            return Err(DatasetError::Format(format!("expected three columns, got {order:?}")));
        }
        let mut columns = [Column::User; 3];
        for (slot, name) in columns.iter_mut().zip(&names) {
            *slot = match *name {
                "user" => Column::User,
                "item" => Column::Item,
                "timestamp" => Column::Timestamp,
                other => return Err(DatasetError::Format(format!("unknown column {other:?}"))),
            };
        }
        let distinct: BTreeSet<&str> = names.iter().copied().collect();
        if distinct.len() != 3 {
            return Err(DatasetError::Format(format!("duplicate column in {order:?}")));
        }
        Ok(LogFormat { delimiter, columns })
    }
}

/// Result of [`parse_events`]: the events plus the number of malformed lines.
#[derive(Debug, Clone, Default)]
pub struct ParsedLog {
    pub log: RatingLog,
    pub skipped: usize,
}

/// Reads a delimiter-separated event log.
///
/// Malformed lines (wrong field count, empty identifiers, a timestamp that is
/// not a non-negative integer, invalid UTF-8) are skipped and counted. Blank
/// lines are ignored without being counted.
pub fn parse_events<R: BufRead>(mut reader: R, format: &LogFormat) -> Result<ParsedLog, DatasetError> {
    let mut parsed = ParsedLog::default();
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        let line = match std::str::from_utf8(&buf) {
            Ok(s) => s.trim_end_matches(['\n', '\r']),
            Err(_) => {
                parsed.skipped += 1;
                continue;
            }
        };
        if line.is_empty() {
            continue;
        }
        match parse_line(line, format) {
            Some(event) => parsed.log.events.push(event),
            None => parsed.skipped += 1,
        }
    }
    Ok(parsed)
}

fn parse_line(line: &str, format: &LogFormat) -> Option<RatingEvent> {
    let fields: Vec<&str> = line.split(format.delimiter).collect();
    if fields.len() != 3 {
        return None;
    }
    let (mut user, mut item, mut timestamp) = (None, None, None);
    for (col, field) in format.columns.iter().zip(fields) {
        match col {
            Column::User => user = Some(field),
            Column::Item => item = Some(field),
            Column::Timestamp => timestamp = field.trim().parse::<i64>().ok(),
        }
    }
    let (user, item, timestamp) = (user?, item?, timestamp?);
    if user.is_empty() || item.is_empty() || timestamp < 0 {
        return None;
    }
    Some(RatingEvent::new(user, item, timestamp))
}

/// A single retained rating: dense item index and timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rating {
    pub timestamp: i64,
    pub item: u32,
}

/// Bidirectional mapping between external identifiers and dense indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Interner {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Interner {
    fn from_sorted(names: Vec<String>) -> Self {
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect();
        Interner { names, index }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, idx: u32) -> Option<&str> {
        self.names.get(idx as usize).map(String::as_str)
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DatasetStats {
    pub users: usize,
    pub items: usize,
    pub ratings: usize,
    pub sparsity: f64,
}

/// Preprocessed, indexed ratings. Every item has at least two distinct users,
/// every user has a nonempty profile, and profiles are sorted by
/// `(timestamp, item index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub users: Interner,
    pub items: Interner,
    profiles: Vec<Vec<Rating>>,
}

impl Dataset {
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn n_ratings(&self) -> usize {
        self.profiles.iter().map(Vec::len).sum()
    }

    pub fn profile(&self, user: u32) -> &[Rating] {
        &self.profiles[user as usize]
    }

    pub fn profiles(&self) -> &[Vec<Rating>] {
        &self.profiles
    }

    pub fn profile_len(&self, user: u32) -> usize {
        self.profiles[user as usize].len()
    }

    pub fn stats(&self) -> DatasetStats {
        let (users, items, ratings) = (self.n_users(), self.n_items(), self.n_ratings());
        let cells = users as f64 * items as f64;
        let sparsity = if cells > 0.0 { 1.0 - ratings as f64 / cells } else { 1.0 };
        DatasetStats { users, items, ratings, sparsity }
    }

    pub fn summary(&self) -> DatasetSummary {
        let stats = self.stats();
        DatasetSummary {
            users: stats.users,
            items: stats.items,
            ratings: stats.ratings,
            sparsity: stats.sparsity,
            excluded_users: self.profiles.iter().filter(|p| p.len() == 1).count(),
        }
    }

    /// All ratings as a training set, with nothing held out. Used to serve
    /// recommendations from the full history.
    pub fn to_train_set(&self) -> TrainSet {
        TrainSet { n_items: self.n_items(), profiles: self.profiles.clone() }
    }

    /// Converts back to an event log with external identifiers.
    pub fn to_log(&self) -> RatingLog {
        let mut events = Vec::with_capacity(self.n_ratings());
        for (u, profile) in self.profiles.iter().enumerate() {
            for r in profile {
                events.push(RatingEvent::new(
                    self.users.names[u].clone(),
                    self.items.names[r.item as usize].clone(),
                    r.timestamp,
                ));
            }
        }
        RatingLog::new(events)
    }
}

/// JSON summary emitted by `ingest`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub users: usize,
    pub items: usize,
    pub ratings: usize,
    pub sparsity: f64,
    pub excluded_users: usize,
}

/// Deduplicates, drops items saved by a single user (and users left with
/// nothing) until stable, then assigns dense indices in lexicographic order of
/// the external identifiers.
pub fn preprocess(log: &RatingLog) -> Dataset {
    // (user, item) -> earliest timestamp
    let mut first_seen: BTreeMap<(&str, &str), i64> = BTreeMap::new();
    for e in &log.events {
        first_seen
            .entry((e.user.as_str(), e.item.as_str()))
            .and_modify(|t| *t = (*t).min(e.timestamp))
            .or_insert(e.timestamp);
    }
    let mut ratings: Vec<(&str, &str, i64)> = first_seen.into_iter().map(|((u, i), t)| (u, i, t)).collect();

    loop {
        let mut item_users: HashMap<&str, usize> = HashMap::new();
        for (_, item, _) in &ratings {
            *item_users.entry(item).or_default() += 1;
        }
        let before = ratings.len();
        ratings.retain(|(_, item, _)| item_users[item] >= 2);
        // Users with no remaining ratings vanish implicitly: they are only
        // ever materialized from surviving ratings.
        if ratings.len() == before {
            break;
        }
    }

    let user_names: BTreeSet<&str> = ratings.iter().map(|r| r.0).collect();
    let item_names: BTreeSet<&str> = ratings.iter().map(|r| r.1).collect();
    let users = Interner::from_sorted(user_names.into_iter().map(String::from).collect());
    let items = Interner::from_sorted(item_names.into_iter().map(String::from).collect());

    let mut profiles = vec![Vec::new(); users.len()];
    for (u, i, t) in ratings {
        let u = users.get(u).expect("interned user");
        let i = items.get(i).expect("interned item");
        profiles[u as usize].push(Rating { timestamp: t, item: i });
    }
    for p in &mut profiles {
        p.sort_unstable();
    }
    Dataset { users, items, profiles }
}

/// Training ratings indexed like the originating [`Dataset`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainSet {
    n_items: usize,
    profiles: Vec<Vec<Rating>>,
}

impl TrainSet {
    /// Builds a training set directly from per-user profiles. Profiles are
    /// sorted by `(timestamp, item)`; item indices must be `< n_items` and
    /// unique within a profile.
    pub fn from_profiles(n_items: usize, mut profiles: Vec<Vec<Rating>>) -> Self {
        for p in &mut profiles {
            p.sort_unstable();
            debug_assert!(p.iter().all(|r| (r.item as usize) < n_items));
        }
        TrainSet { n_items, profiles }
    }

    pub fn n_users(&self) -> usize {
        self.profiles.len()
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_ratings(&self) -> usize {
        self.profiles.iter().map(Vec::len).sum()
    }

    pub fn profile(&self, user: u32) -> Option<&[Rating]> {
        self.profiles.get(user as usize).map(Vec::as_slice)
    }

    pub fn profiles(&self) -> &[Vec<Rating>] {
        &self.profiles
    }

    /// Stable content hash, used to key on-disk similarity caches.
    pub fn content_hash(&self) -> u64 {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update((self.n_items as u64).to_le_bytes());
        hasher.update((self.profiles.len() as u64).to_le_bytes());
        for p in &self.profiles {
            hasher.update((p.len() as u64).to_le_bytes());
            for r in p {
                hasher.update(r.item.to_le_bytes());
                hasher.update(r.timestamp.to_le_bytes());
            }
        }
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }
}

/// A held-out latest rating.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Probe {
    pub user: u32,
    pub item: u32,
    pub timestamp: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProbeSet {
    /// One probe per evaluated user, ordered by user index.
    pub probes: Vec<Probe>,
    /// Users with a single rating; they appear in neither set.
    pub excluded: Vec<u32>,
}

impl ProbeSet {
    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }
}

/// Holds out every user's latest rating at once. Users with a single rating
/// are excluded entirely.
pub fn split_leave_latest(dataset: &Dataset) -> (TrainSet, ProbeSet) {
    let mut probes = ProbeSet::default();
    let mut profiles = Vec::with_capacity(dataset.n_users());
    for (u, profile) in dataset.profiles.iter().enumerate() {
        match profile.split_last() {
            Some((latest, rest)) if !rest.is_empty() => {
                probes.probes.push(Probe { user: u as u32, item: latest.item, timestamp: latest.timestamp });
                profiles.push(rest.to_vec());
            }
            _ => {
                probes.excluded.push(u as u32);
                profiles.push(Vec::new());
            }
        }
    }
    (TrainSet { n_items: dataset.n_items(), profiles }, probes)
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} users, {} items, {} ratings, sparsity {:.6}", self.users, self.items, self.ratings, self.sparsity)
    }
}

impl FromStr for LogFormat {
    type Err = DatasetError;

    /// Parses a column order with the default tab delimiter.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LogFormat::new('\t', s)
    }
}
