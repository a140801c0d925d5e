//! Append-only session log.
//!
//! Every change is one JSON line appended with a single write, so a crash
//! can at worst leave an unterminated final line. Opening the store drops
//! such a tail and replays the rest; sessions are a pure function of the
//! log.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use instrlearn_core::protocol::{ExperimentKind, ResponseRecord, Session, SESSION_SCHEMA_VERSION};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::to_jsonl;

pub const LOG_FILE: &str = "sessions.jsonl";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Created {
        session_id: String,
        kind: ExperimentKind,
        seed: u64,
    },
    Response {
        session_id: String,
        record: ResponseRecord,
    },
    Survey {
        session_id: String,
        external_aid: bool,
    },
}

impl Event {
    pub fn session_id(&self) -> &str {
        match self {
            Event::Created { session_id, .. }
            | Event::Response { session_id, .. }
            | Event::Survey { session_id, .. } => session_id,
        }
    }
}

#[derive(Debug)]
pub struct SessionStore {
    path: PathBuf,
    file: File,
    sessions: BTreeMap<String, Session>,
    sync: bool,
}

impl SessionStore {
    /// Opens (creating if needed) the log in `dir` and replays it.
    pub fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(LOG_FILE);
        let mut bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(Error::io(&path, e)),
        };
        let complete = bytes.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
        if complete < bytes.len() {
            bytes.truncate(complete);
            let f = OpenOptions::new().write(true).open(&path).map_err(|e| Error::io(&path, e))?;
            f.set_len(complete as u64).map_err(|e| Error::io(&path, e))?;
        }
        let text = String::from_utf8(bytes).map_err(|_| Error::Format(format!("{}: not UTF-8", path.display())))?;
        let events: Vec<Event> = crate::io::parse_jsonl(&text, &path)?;
        let mut sessions = BTreeMap::new();
        for ev in events {
            apply(&mut sessions, ev).map_err(|m| Error::Format(format!("{}: {m}", path.display())))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(SessionStore {
            path,
            file,
            sessions,
            sync: true,
        })
    }

    /// Whether each append waits for the data to reach the disk.
    pub fn set_sync(&mut self, sync: bool) {
        self.sync = sync;
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    pub fn get(&self, session_id: &str) -> Option<&Session> {
        self.sessions.get(session_id)
    }

    pub fn sessions(&self) -> impl Iterator<Item = &Session> {
        self.sessions.values()
    }

    /// Writes `event` to the log, then applies it.
    pub fn append(&mut self, event: Event) -> Result<()> {
        let mut probe = BTreeMap::new();
        if let Some(s) = self.sessions.get(event.session_id()) {
            probe.insert(s.participant_id.clone(), s.clone());
        }
        apply(&mut probe, event.clone()).map_err(Error::Format)?;

        let line = to_jsonl(std::slice::from_ref(&event));
        self.file
            .write_all(line.as_bytes())
            .map_err(|e| Error::io(&self.path, e))?;
        if self.sync {
            self.file.sync_data().map_err(|e| Error::io(&self.path, e))?;
        }
        let (id, s) = probe.into_iter().next().expect("applied event");
        self.sessions.insert(id, s);
        Ok(())
    }

    /// Sessions of `kind` (all when `None`) ordered by id, one JSON line
    /// each.
    pub fn export(&self, kind: Option<ExperimentKind>) -> String {
        let picked: Vec<&Session> = self
            .sessions
            .values()
            .filter(|s| kind.map_or(true, |k| s.kind == k))
            .collect();
        to_jsonl(&picked)
    }
}

fn apply(sessions: &mut BTreeMap<String, Session>, ev: Event) -> std::result::Result<(), String> {
    match ev {
        Event::Created { session_id, kind, seed } => {
            if sessions.contains_key(&session_id) {
                return Err(format!("session `{session_id}` created twice"));
            }
            let session = Session {
                schema_version: SESSION_SCHEMA_VERSION,
                participant_id: session_id.clone(),
                kind,
                seed,
                records: Vec::new(),
                external_aid: None,
            };
            sessions.insert(session_id, session);
        }
        Event::Response { session_id, record } => {
            let s = sessions
                .get_mut(&session_id)
                .ok_or_else(|| format!("response for unknown session `{session_id}`"))?;
            s.records.push(record);
        }
        Event::Survey {
            session_id,
            external_aid,
        } => {
            let s = sessions
                .get_mut(&session_id)
                .ok_or_else(|| format!("survey for unknown session `{session_id}`"))?;
            s.external_aid = Some(external_aid);
        }
    }
    Ok(())
}
