use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;

use super::mapping::{Mapping, Normalized};
use crate::placing::SensorKind;
use crate::time::{parse_duration, Timestamp};

/// One normalized sensor record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorEvent {
    pub time: Timestamp,
    pub sensor: String,
    pub kind: SensorKind,
    pub value: bool,
    /// Activity annotation, used only for scoring.
    pub label: Option<u8>,
}

/// A participant run: time-ordered events from one file or script.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Run {
    pub name: String,
    pub events: Vec<SensorEvent>,
}

/// First to last labeled event of one activity within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelWindow {
    pub run: usize,
    pub activity: u8,
    pub start: Timestamp,
    pub end: Timestamp,
}

impl Run {
    pub fn start(&self) -> Option<Timestamp> {
        self.events.first().map(|e| e.time)
    }

    pub fn end(&self) -> Option<Timestamp> {
        self.events.last().map(|e| e.time)
    }

    pub fn duration_ms(&self) -> u64 {
        match (self.start(), self.end()) {
            (Some(s), Some(e)) => e.saturating_sub(s),
            _ => 0,
        }
    }

    /// Label windows in order of activity index, tagged with `run`.
    pub fn label_windows(&self, run: usize) -> Vec<LabelWindow> {
        let mut spans: BTreeMap<u8, (Timestamp, Timestamp)> = BTreeMap::new();
        for ev in &self.events {
            if let Some(a) = ev.label {
                let span = spans.entry(a).or_insert((ev.time, ev.time));
                span.1 = ev.time;
            }
        }
        spans
            .into_iter()
            .map(|(activity, (start, end))| LabelWindow { run, activity, start, end })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DatasetError {
    #[error("{file}:{line}: {message}")]
    Line { file: String, line: usize, message: String },
    #[error("{file}: {message}")]
    Io { file: String, message: String },
    #[error("no data files under {0}")]
    Empty(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Sequential,
    Interwoven,
}

impl Variant {
    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "sequential" => Some(Variant::Sequential),
            "interwoven" | "interweave" => Some(Variant::Interwoven),
            _ => None,
        }
    }

    pub fn dir_name(self) -> &'static str {
        match self {
            Variant::Sequential => "sequential",
            Variant::Interwoven => "interwoven",
        }
    }
}

/// Parses a label token: a leading activity index 1..8, optionally followed
/// by a non-digit suffix such as `-start`.
pub fn parse_label(token: &str) -> Option<u8> {
    let digits: String = token.chars().take_while(char::is_ascii_digit).collect();
    match digits.parse::<u8>() {
        Ok(n @ 1..=8) => Some(n),
        _ => None,
    }
}

fn parse_datetime(date: &str, time: &str) -> Option<Timestamp> {
    let text = format!("{date} {time}");
    let dt = NaiveDateTime::parse_from_str(&text, "%Y-%m-%d %H:%M:%S%.f").ok()?;
    u64::try_from(dt.and_utc().timestamp_millis()).ok().map(Timestamp)
}

/// Parses one log. Each line is `date time sensor value [label]` or
/// `<ms> sensor value [label]`; `#` starts a comment.
pub fn parse_log(text: &str, name: &str, mapping: &Mapping) -> Result<Run, DatasetError> {
    let mut events: Vec<SensorEvent> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let fail = |message: String| DatasetError::Line { file: name.to_string(), line, message };
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let words: Vec<&str> = body.split_whitespace().collect();
        let (time, rest) = if let Ok(ms) = words[0].parse::<u64>() {
            (Timestamp(ms), &words[1..])
        } else if words.len() >= 4 {
            let t = parse_datetime(words[0], words[1])
                .ok_or_else(|| fail(format!("bad date/time `{} {}`", words[0], words[1])))?;
            (t, &words[2..])
        } else {
            return Err(fail("expected `date time sensor value [label]`".into()));
        };
        if rest.len() < 2 {
            return Err(fail("missing sensor or value".into()));
        }
        let label = match rest.get(2) {
            Some(tok) => Some(parse_label(tok).ok_or_else(|| fail(format!("bad label `{tok}`")))?),
            None => None,
        };
        let (sensor, kind, value) = match mapping.normalize(rest[0], rest[1]).map_err(fail)? {
            Normalized::Skipped => continue,
            Normalized::Event { sensor, kind, value } => (sensor, kind, value),
        };
        if let Some(prev) = events.last() {
            if time < prev.time {
                return Err(fail(format!("timestamp {time} precedes {}", prev.time)));
            }
        }
        events.push(SensorEvent { time, sensor, kind, value, label });
    }
    Ok(Run { name: name.to_string(), events })
}

/// Parses a synthetic script: `<offset> sensor value [label]` where the
/// offset is absolute from the script start (`90s`) or relative to the
/// previous line (`+5s`).
pub fn parse_script(text: &str, name: &str, mapping: &Mapping) -> Result<Run, DatasetError> {
    let mut events: Vec<SensorEvent> = Vec::new();
    let mut clock: i64 = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let fail = |message: String| DatasetError::Line { file: name.to_string(), line, message };
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let words: Vec<&str> = body.split_whitespace().collect();
        if words.len() < 3 || words.len() > 4 {
            return Err(fail("expected `offset sensor value [label]`".into()));
        }
        let (relative, dur) = match words[0].strip_prefix('+') {
            Some(d) => (true, d),
            None => (false, words[0]),
        };
        let ms = parse_duration(dur).map_err(|e| fail(e.to_string()))?;
        let t = if relative { clock + ms } else { ms };
        if t < clock {
            return Err(fail(format!("offset {t}ms precedes {clock}ms")));
        }
        clock = t;
        let label = match words.get(3) {
            Some(tok) => Some(parse_label(tok).ok_or_else(|| fail(format!("bad label `{tok}`")))?),
            None => None,
        };
        match mapping.normalize(words[1], words[2]).map_err(fail)? {
            Normalized::Skipped => {}
            Normalized::Event { sensor, kind, value } => events.push(SensorEvent {
                time: Timestamp(t as u64),
                sensor,
                kind,
                value,
                label,
            }),
        }
    }
    Ok(Run { name: name.to_string(), events })
}

fn data_files(dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let io = |e: std::io::Error| DatasetError::Io { file: dir.display().to_string(), message: e.to_string() };
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        let hidden = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_none_or(|n| n.starts_with('.') || n.ends_with(".md"));
        if path.is_file() && !hidden {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Loads every run under `path`: a single file, or one run per file in the
/// directory. With a variant, a subdirectory of that name is used when present.
pub fn parse_dataset(
    path: &Path,
    variant: Option<Variant>,
    mapping: &Mapping,
) -> Result<Vec<Run>, DatasetError> {
    let dir = match variant.map(|v| path.join(v.dir_name())) {
        Some(sub) if sub.is_dir() => sub,
        _ => path.to_path_buf(),
    };
    let files = if dir.is_file() { vec![dir.clone()] } else { data_files(&dir)? };
    if files.is_empty() {
        return Err(DatasetError::Empty(dir.display().to_string()));
    }
    files
        .iter()
        .map(|f| {
            let name = f.file_name().and_then(|n| n.to_str()).unwrap_or("run").to_string();
            let text = std::fs::read_to_string(f).map_err(|e| DatasetError::Io {
                file: f.display().to_string(),
                message: e.to_string(),
            })?;
            parse_log(&text, &name, mapping)
        })
        .collect()
}
