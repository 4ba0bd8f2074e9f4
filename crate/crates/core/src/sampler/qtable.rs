use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::{Action, SamplerState};

pub const QTABLE_HEADER: &str = "rearguard-qtable";
const QTABLE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum QTableError {
    #[error("q-table line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("q-table version {found} is not supported (expected {expected})")]
    VersionMismatch { found: String, expected: u32 },
    #[error("q-table i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QEntry {
    pub value: f64,
    pub visits: u64,
}

/// Action values with visit counts. Missing entries read as value 0 with no
/// visits.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QTable {
    entries: BTreeMap<(SamplerState, Action), QEntry>,
    /// Global decision counter driving the exploration schedule.
    pub tick: u64,
}

impl QTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self, s: SamplerState, a: Action) -> f64 {
        self.entries.get(&(s, a)).map_or(0.0, |e| e.value)
    }

    pub fn visits(&self, s: SamplerState, a: Action) -> u64 {
        self.entries.get(&(s, a)).map_or(0, |e| e.visits)
    }

    pub fn set(&mut self, s: SamplerState, a: Action, entry: QEntry) {
        self.entries.insert((s, a), entry);
    }

    pub fn entry_mut(&mut self, s: SamplerState, a: Action) -> &mut QEntry {
        self.entries.entry((s, a)).or_default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(SamplerState, Action), &QEntry)> {
        self.entries.iter()
    }

    /// Greedy action; ties go to `Blink`.
    pub fn greedy(&self, s: SamplerState) -> Action {
        if self.value(s, Action::Blink) >= self.value(s, Action::Skip) {
            Action::Blink
        } else {
            Action::Skip
        }
    }

    /// Text form: a version header, the tick counter, then one sorted line
    /// per entry `conf_bin dist_bin dt_bin action value visits`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{QTABLE_HEADER} v{QTABLE_VERSION}");
        let _ = writeln!(out, "tick {}", self.tick);
        for ((s, a), e) in &self.entries {
            let _ = writeln!(
                out,
                "{} {} {} {} {:?} {}",
                s.conf_bin,
                s.dist_bin,
                s.dt_bin,
                a.as_u8(),
                e.value,
                e.visits
            );
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, QTableError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (n, header) = lines.next().ok_or(QTableError::Parse { line: 1, message: "empty file".into() })?;
        let version = header
            .strip_prefix(QTABLE_HEADER)
            .map(str::trim)
            .ok_or_else(|| QTableError::Parse { line: n, message: format!("expected `{QTABLE_HEADER} v{QTABLE_VERSION}` header") })?;
        if version != format!("v{QTABLE_VERSION}") {
            return Err(QTableError::VersionMismatch { found: version.to_string(), expected: QTABLE_VERSION });
        }

        let (n, tick_line) = lines.next().ok_or(QTableError::Parse { line: 2, message: "missing tick line".into() })?;
        let tick = tick_line
            .strip_prefix("tick ")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| QTableError::Parse { line: n, message: "expected `tick <count>`".into() })?;

        let mut table = QTable { entries: BTreeMap::new(), tick };
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let err = |message: &str| QTableError::Parse { line: n, message: message.to_string() };
            if fields.len() != 6 {
                return Err(err("expected 6 fields"));
            }
            let bin = |i: usize| fields[i].parse::<u8>().map_err(|_| err("bad bin index"));
            let state = SamplerState::new(bin(0)?, bin(1)?, bin(2)?);
            let action = fields[3]
                .parse::<u8>()
                .ok()
                .and_then(Action::from_u8)
                .ok_or_else(|| err("action must be 0 or 1"))?;
            let value = fields[4].parse::<f64>().map_err(|_| err("bad value"))?;
            let visits = fields[5].parse::<u64>().map_err(|_| err("bad visit count"))?;
            if table.entries.insert((state, action), QEntry { value, visits }).is_some() {
                return Err(err("duplicate entry"));
            }
        }
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<(), QTableError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, QTableError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip_is_exact() {
        let mut q = QTable::new();
        q.tick = 1234;
        q.set(SamplerState::new(4, 3, 0), Action::Skip, QEntry { value: -0.1 / 3.0, visits: 17 });
        q.set(SamplerState::new(0, 1, 2), Action::Blink, QEntry { value: 1e-300, visits: 1 });
        q.set(SamplerState::new(0, 1, 2), Action::Skip, QEntry { value: f64::MAX, visits: 0 });
        let text = q.to_text();
        let back = QTable::from_text(&text).unwrap();
        assert_eq!(back, q);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn lines_are_sorted() {
        let mut q = QTable::new();
        q.set(SamplerState::new(2, 0, 0), Action::Blink, QEntry::default());
        q.set(SamplerState::new(0, 3, 1), Action::Skip, QEntry::default());
        let text = q.to_text();
        let body: Vec<&str> = text.lines().skip(2).collect();
        assert_eq!(body, vec!["0 3 1 0 0.0 0", "2 0 0 1 0.0 0"]);
    }

    #[test]
    fn rejects_other_versions() {
        let err = QTable::from_text("rearguard-qtable v9\ntick 0\n").unwrap_err();
        assert!(matches!(err, QTableError::VersionMismatch { .. }));
    }

    #[test]
    fn reports_bad_line() {
        let err = QTable::from_text("rearguard-qtable v1\ntick 3\n0 0 0 1 0.5 2\n0 0 0 7 0.5 2\n").unwrap_err();
        match err {
            QTableError::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn greedy_ties_blink() {
        let q = QTable::new();
        assert_eq!(q.greedy(SamplerState::new(0, 0, 0)), Action::Blink);
    }
}
