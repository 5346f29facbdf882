//! Append-only, line-delimited record of everything that happened in one
//! tournament.
//!
//! The first line is a header, `{"format":"battle-journal","version":1}`.
//! Each further line is one [`JournalRecord`]. Sequences start at 0 and have
//! no gaps. A final line without its newline is a torn write and is ignored.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ai_proxy::{DeceptionClaim, QueryRecord};
use crate::config::TournamentConfig;
use crate::engine::{Presentation, Tournament};
use crate::error::EngineError;
use crate::model::{EntryResult, HintMark, Phase, Submission, SubmissionId, TeamId, TournamentId, Verdict};
use crate::recon::ReconEntry;
use crate::scoring::ScoreEvent;

pub const JOURNAL_FORMAT: &str = "battle-journal";
pub const JOURNAL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum JournalEvent {
    Created {
        tournament_id: TournamentId,
        config: TournamentConfig,
    },
    TeamRegistered {
        team_id: TeamId,
        name: String,
    },
    PhaseChanged {
        from: Phase,
        to: Phase,
        /// Teams marked inactive by this transition.
        #[serde(default)]
        deactivated: Vec<TeamId>,
        #[serde(default)]
        penalties: Vec<ScoreEvent>,
    },
    SubmissionFiled {
        submission: Submission,
    },
    Judged {
        submission_id: SubmissionId,
        judge: String,
        verdict: Verdict,
        hint_marks: BTreeMap<crate::model::QueryId, HintMark>,
        events: Vec<ScoreEvent>,
    },
    PieceAwarded {
        team_id: TeamId,
        problem_id: String,
        pieces: u32,
    },
    EntryAttempt {
        team_id: TeamId,
        result: EntryResult,
        attempts_used: u32,
    },
    QueryHandled {
        record: QueryRecord,
    },
    ClaimAdjudicated {
        claim: DeceptionClaim,
        events: Vec<ScoreEvent>,
    },
    ScoreEventEmitted {
        event: ScoreEvent,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        presentation: Option<Presentation>,
    },
    WindowOpened {
        opened_at: u64,
        duration_secs: u64,
    },
    WindowClosed {
        closed_at: u64,
    },
    ReconQuery {
        entry: ReconEntry,
        record: QueryRecord,
    },
}

impl JournalEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            JournalEvent::Created { .. } => "Created",
            JournalEvent::TeamRegistered { .. } => "TeamRegistered",
            JournalEvent::PhaseChanged { .. } => "PhaseChanged",
            JournalEvent::SubmissionFiled { .. } => "SubmissionFiled",
            JournalEvent::Judged { .. } => "Judged",
            JournalEvent::PieceAwarded { .. } => "PieceAwarded",
            JournalEvent::EntryAttempt { .. } => "EntryAttempt",
            JournalEvent::QueryHandled { .. } => "QueryHandled",
            JournalEvent::ClaimAdjudicated { .. } => "ClaimAdjudicated",
            JournalEvent::ScoreEventEmitted { .. } => "ScoreEventEmitted",
            JournalEvent::WindowOpened { .. } => "WindowOpened",
            JournalEvent::WindowClosed { .. } => "WindowClosed",
            JournalEvent::ReconQuery { .. } => "ReconQuery",
        }
    }

    /// Score events carried by this record.
    pub fn score_events(&self) -> &[ScoreEvent] {
        match self {
            JournalEvent::PhaseChanged { penalties, .. } => penalties,
            JournalEvent::Judged { events, .. } | JournalEvent::ClaimAdjudicated { events, .. } => events,
            JournalEvent::ScoreEventEmitted { event, .. } => std::slice::from_ref(event),
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalRecord {
    pub sequence: u64,
    pub timestamp: u64,
    #[serde(flatten)]
    pub event: JournalEvent,
}

impl JournalRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("journal record serializes")
    }
}

#[derive(Debug, Error)]
pub enum JournalError {
    #[error("journal io: {0}")]
    Io(#[from] io::Error),
    #[error("sequence gap: expected {expected}, got {got}")]
    SequenceGap { expected: u64, got: u64 },
    #[error("sequence {0} already holds a different record")]
    SequenceConflict(u64),
    #[error("corrupt journal record {sequence}: {reason}")]
    CorruptRecord { sequence: u64, reason: String },
    #[error("bad journal header: {0}")]
    BadHeader(String),
    #[error("journal {0} already exists")]
    AlreadyExists(PathBuf),
}

/// Where committed records go.
pub trait JournalSink: Send {
    /// Writes `record`, which must carry the next sequence. Resending a
    /// record identical to one already stored is accepted and changes
    /// nothing.
    fn append(&mut self, record: &JournalRecord) -> Result<(), JournalError>;

    fn len(&self) -> u64;

    /// The journal as it would appear on disk, header included.
    fn to_bytes(&self) -> Vec<u8>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_sequence(lines: &[String], record: &JournalRecord, line: &str) -> Result<bool, JournalError> {
    let len = lines.len() as u64;
    if record.sequence < len {
        return if lines[record.sequence as usize] == line {
            Ok(false)
        } else {
            Err(JournalError::SequenceConflict(record.sequence))
        };
    }
    if record.sequence > len {
        return Err(JournalError::SequenceGap {
            expected: len,
            got: record.sequence,
        });
    }
    Ok(true)
}

/// Keeps records in memory only.
#[derive(Debug, Default, Clone)]
pub struct MemoryJournal {
    lines: Vec<String>,
}

impl MemoryJournal {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> Vec<JournalRecord> {
        self.lines
            .iter()
            .map(|l| serde_json::from_str(l).expect("stored line parses"))
            .collect()
    }
}

fn encode(lines: &[String]) -> Vec<u8> {
    let mut out = header_line().into_bytes();
    for line in lines {
        out.extend_from_slice(line.as_bytes());
        out.push(b'\n');
    }
    out
}

impl JournalSink for MemoryJournal {
    fn append(&mut self, record: &JournalRecord) -> Result<(), JournalError> {
        let line = record.to_line();
        if check_sequence(&self.lines, record, &line)? {
            self.lines.push(line);
        }
        Ok(())
    }

    fn len(&self) -> u64 {
        self.lines.len() as u64
    }

    fn to_bytes(&self) -> Vec<u8> {
        encode(&self.lines)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SyncPolicy {
    /// fsync after every record.
    #[default]
    Always,
    /// Flush to the OS only.
    Flush,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

fn header_line() -> String {
    let header = Header {
        format: JOURNAL_FORMAT.into(),
        version: JOURNAL_VERSION,
    };
    format!("{}\n", serde_json::to_string(&header).expect("header serializes"))
}

/// A journal file opened for appending.
#[derive(Debug)]
pub struct FileJournal {
    path: PathBuf,
    file: File,
    lines: Vec<String>,
    sync: SyncPolicy,
}

impl FileJournal {
    /// Creates a new file holding only the header.
    pub fn create(path: impl AsRef<Path>, sync: SyncPolicy) -> Result<Self, JournalError> {
        let path = path.as_ref().to_path_buf();
        let mut file = match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(file) => file,
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => return Err(JournalError::AlreadyExists(path)),
            Err(e) => return Err(e.into()),
        };
        file.write_all(header_line().as_bytes())?;
        if sync == SyncPolicy::Always {
            file.sync_all()?;
        }
        Ok(Self {
            path,
            file,
            lines: Vec::new(),
            sync,
        })
    }

    /// Opens an existing journal, discarding a torn final line, and returns
    /// it with the intact records.
    pub fn open(path: impl AsRef<Path>, sync: SyncPolicy) -> Result<(Self, Vec<JournalRecord>), JournalError> {
        let path = path.as_ref().to_path_buf();
        let contents = read_journal(BufReader::new(File::open(&path)?))?;
        if contents.torn_tail {
            let keep = header_line().len() as u64 + contents.lines.iter().map(|l| l.len() as u64 + 1).sum::<u64>();
            let file = OpenOptions::new().write(true).open(&path)?;
            file.set_len(keep)?;
            file.sync_all()?;
        }
        let file = OpenOptions::new().append(true).open(&path)?;
        let journal = Self {
            path,
            file,
            lines: contents.lines,
            sync,
        };
        Ok((journal, contents.records))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl JournalSink for FileJournal {
    fn append(&mut self, record: &JournalRecord) -> Result<(), JournalError> {
        let line = record.to_line();
        if !check_sequence(&self.lines, record, &line)? {
            return Ok(());
        }
        let mut bytes = line.clone().into_bytes();
        bytes.push(b'\n');
        self.file.write_all(&bytes)?;
        match self.sync {
            SyncPolicy::Always => self.file.sync_data()?,
            SyncPolicy::Flush => self.file.flush()?,
        }
        self.lines.push(line);
        Ok(())
    }

    fn len(&self) -> u64 {
        self.lines.len() as u64
    }

    fn to_bytes(&self) -> Vec<u8> {
        encode(&self.lines)
    }
}

/// Parsed journal contents.
#[derive(Debug, Clone)]
pub struct JournalContents {
    pub records: Vec<JournalRecord>,
    lines: Vec<String>,
    /// A partial final line was present and dropped.
    pub torn_tail: bool,
}

/// Reads a journal. Only the final line may be damaged; it is then dropped.
pub fn read_journal(mut input: impl BufRead) -> Result<JournalContents, JournalError> {
    let mut raw = Vec::new();
    input.read_to_end(&mut raw)?;
    let text = String::from_utf8_lossy(&raw);
    let mut pieces: Vec<&str> = text.split('\n').collect();
    // The element after the last newline is empty for a clean file.
    let tail = pieces.pop().unwrap_or_default();
    let mut torn_tail = !tail.is_empty();
    let mut pieces = pieces.into_iter();
    let header = pieces
        .next()
        .ok_or_else(|| JournalError::BadHeader("missing header".into()))?;
    let header: Header = serde_json::from_str(header).map_err(|e| JournalError::BadHeader(e.to_string()))?;
    if header.format != JOURNAL_FORMAT {
        return Err(JournalError::BadHeader(format!("unknown format {:?}", header.format)));
    }
    if header.version != JOURNAL_VERSION {
        return Err(JournalError::BadHeader(format!("unsupported version {}", header.version)));
    }
    let pieces: Vec<&str> = pieces.collect();
    let mut records = Vec::new();
    let mut lines = Vec::new();
    for (index, line) in pieces.iter().enumerate() {
        let sequence = index as u64;
        let is_last = index + 1 == pieces.len() && !torn_tail;
        let parsed: Result<JournalRecord, String> = serde_json::from_str::<JournalRecord>(line)
            .map_err(|e| e.to_string())
            .and_then(|r| {
                if r.sequence == sequence {
                    Ok(r)
                } else {
                    Err(format!("holds sequence {}", r.sequence))
                }
            });
        match parsed {
            Ok(record) => {
                records.push(record);
                lines.push((*line).to_owned());
            }
            // A write cut short after its newline still counts as torn.
            Err(_) if is_last && serde_json::from_str::<serde_json::Value>(line).is_err() => {
                torn_tail = true;
                break;
            }
            Err(reason) => return Err(JournalError::CorruptRecord { sequence, reason }),
        }
    }
    Ok(JournalContents {
        records,
        lines,
        torn_tail,
    })
}

pub fn read_journal_file(path: impl AsRef<Path>) -> Result<JournalContents, JournalError> {
    read_journal(BufReader::new(File::open(path)?))
}

/// Rebuilds tournament state by applying every record in order.
pub fn replay(records: &[JournalRecord]) -> Result<Tournament, EngineError> {
    let (first, rest) = records.split_first().ok_or_else(|| EngineError::CorruptRecord {
        sequence: 0,
        reason: "journal has no Created record".into(),
    })?;
    let mut state = Tournament::from_created(first)?;
    for record in rest {
        state.apply(record)?;
    }
    Ok(state)
}

pub fn replay_file(path: impl AsRef<Path>) -> Result<Tournament, EngineError> {
    replay(&read_journal_file(path)?.records)
}

/// Journal path for a tournament inside `dir`.
pub fn journal_path(dir: impl AsRef<Path>, id: &TournamentId) -> PathBuf {
    dir.as_ref().join(format!("{id}.journal"))
}

/// Tournament ids with a journal in `dir`, in numeric order.
pub fn list_journals(dir: impl AsRef<Path>) -> Result<Vec<TournamentId>, JournalError> {
    let mut ids = Vec::new();
    for entry in fs::read_dir(dir)? {
        let name = entry?.file_name();
        let name = name.to_string_lossy();
        if let Some(stem) = name.strip_suffix(".journal") {
            ids.push(TournamentId::from(stem));
        }
    }
    ids.sort_by_key(|id| {
        id.as_str()
            .strip_prefix(TournamentId::PREFIX)
            .and_then(|n| n.parse::<u64>().ok())
            .unwrap_or(u64::MAX)
    });
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(sequence: u64, name: &str) -> JournalRecord {
        JournalRecord {
            sequence,
            timestamp: sequence * 10,
            event: JournalEvent::TeamRegistered {
                team_id: TeamId::from_index(sequence as usize),
                name: name.into(),
            },
        }
    }

    #[test]
    fn line_shape() {
        let line = record(0, "Alpha").to_line();
        assert_eq!(
            line,
            r#"{"sequence":0,"timestamp":0,"kind":"TeamRegistered","payload":{"team_id":"team-0","name":"Alpha"}}"#
        );
        let back: JournalRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back, record(0, "Alpha"));
    }

    #[test]
    fn append_rules() {
        let mut j = MemoryJournal::new();
        j.append(&record(0, "a")).unwrap();
        assert!(matches!(
            j.append(&record(2, "c")),
            Err(JournalError::SequenceGap { expected: 1, got: 2 })
        ));
        j.append(&record(0, "a")).unwrap();
        assert_eq!(j.len(), 1);
        assert!(matches!(j.append(&record(0, "x")), Err(JournalError::SequenceConflict(0))));
        j.append(&record(1, "b")).unwrap();
        assert_eq!(j.records().len(), 2);
    }

    #[test]
    fn file_round_trip_and_torn_tail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t0.journal");
        {
            let mut j = FileJournal::create(&path, SyncPolicy::Flush).unwrap();
            for i in 0..3 {
                j.append(&record(i, &format!("n{i}"))).unwrap();
            }
        }
        assert!(matches!(
            FileJournal::create(&path, SyncPolicy::Flush),
            Err(JournalError::AlreadyExists(_))
        ));
        let mut bytes = fs::read(&path).unwrap();
        let full = bytes.clone();
        bytes.truncate(bytes.len() - 7);
        fs::write(&path, &bytes).unwrap();
        let contents = read_journal_file(&path).unwrap();
        assert!(contents.torn_tail);
        assert_eq!(contents.records.len(), 2);

        let (mut j, records) = FileJournal::open(&path, SyncPolicy::Flush).unwrap();
        assert_eq!(records.len(), 2);
        j.append(&record(2, "n2")).unwrap();
        drop(j);
        assert_eq!(fs::read(&path).unwrap(), full);
    }

    #[test]
    fn corrupt_middle_is_an_error() {
        let mut text = header_line();
        text.push_str(&record(0, "a").to_line());
        text.push_str("\nnot json\n");
        text.push_str(&record(2, "c").to_line());
        text.push('\n');
        assert!(matches!(
            read_journal(text.as_bytes()),
            Err(JournalError::CorruptRecord { sequence: 1, .. })
        ));
    }

    #[test]
    fn out_of_order_sequence_is_corrupt() {
        let mut text = header_line();
        text.push_str(&record(1, "a").to_line());
        text.push('\n');
        assert!(matches!(
            read_journal(text.as_bytes()),
            Err(JournalError::CorruptRecord { sequence: 0, .. })
        ));
    }

    #[test]
    fn empty_journal_cannot_replay() {
        assert!(replay(&[]).is_err());
        let contents = read_journal(header_line().as_bytes()).unwrap();
        assert!(contents.records.is_empty());
        assert!(read_journal(&b""[..]).is_err());
    }

    #[test]
    fn memory_bytes_match_file_format() {
        let mut j = MemoryJournal::new();
        j.append(&record(0, "a")).unwrap();
        let text = String::from_utf8(j.to_bytes()).unwrap();
        assert!(text.starts_with("{\"format\":\"battle-journal\",\"version\":1}\n"));
        assert!(read_journal(text.as_bytes()).unwrap().records.len() == 1);
    }
}
