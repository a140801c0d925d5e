//! JSON documents and line-delimited session files.

use std::fs;
use std::io::Write;
use std::path::Path;

use instrlearn_core::protocol::{ExperimentSpec, ProtocolError, Session};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.into(),
        line: source.line(),
        source,
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, to_json_string(value).as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// One compact JSON value per line.
pub fn to_jsonl<T: Serialize>(values: &[T]) -> String {
    let mut out = String::new();
    for v in values {
        out.push_str(&serde_json::to_string(v).expect("serializable value"));
        out.push('\n');
    }
    out
}

pub fn parse_jsonl<T: DeserializeOwned>(text: &str, path: &Path) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|source| Error::Json {
                path: path.into(),
                line: i + 1,
                source,
            })
        })
        .collect()
}

pub fn read_sessions(path: &Path) -> Result<Vec<Session>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(&text, path)
}

pub fn write_sessions(path: &Path, sessions: &[Session]) -> Result<()> {
    write_file(path, to_jsonl(sessions).as_bytes())
}

/// Regenerates the spec of every session, reusing one per `(kind, seed)`.
/// When `given` is present every session must belong to it.
pub fn specs_for(sessions: &[Session], given: Option<&ExperimentSpec>) -> Result<Vec<ExperimentSpec>> {
    let mut specs: Vec<ExperimentSpec> = Vec::new();
    if let Some(spec) = given {
        specs.push(spec.clone());
    }
    for s in sessions {
        if specs.iter().any(|sp| sp.kind == s.kind && sp.seed == s.seed) {
            continue;
        }
        if let Some(spec) = given {
            return Err(ProtocolError::SpecMismatch {
                session: format!("{} seed {}", s.kind, s.seed),
                spec: format!("{} seed {}", spec.kind, spec.seed),
            }
            .into());
        }
        specs.push(ExperimentSpec::generate(s.kind, s.seed));
    }
    Ok(specs)
}

/// Pairs each session with its spec from `specs`.
pub fn pair<'a>(specs: &'a [ExperimentSpec], sessions: &'a [Session]) -> Vec<(&'a ExperimentSpec, &'a Session)> {
    sessions
        .iter()
        .map(|s| {
            let spec = specs
                .iter()
                .find(|sp| sp.kind == s.kind && sp.seed == s.seed)
                .expect("spec generated for every session");
            (spec, s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use instrlearn_core::protocol::ExperimentKind;

    #[test]
    fn sessions_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ExperimentSpec::generate(ExperimentKind::Exp2, 3);
        let sessions = vec![Session::new("a", &spec), Session::new("b", &spec)];
        let path = dir.path().join("s.jsonl");
        write_sessions(&path, &sessions).unwrap();
        assert_eq!(read_sessions(&path).unwrap(), sessions);
    }

    #[test]
    fn bad_line_reports_its_number() {
        let err = parse_jsonl::<Session>("\n{oops\n", Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::Json { line: 2, .. }), "{err}");
    }

    #[test]
    fn given_spec_must_match() {
        let a = ExperimentSpec::generate(ExperimentKind::Exp1, 1);
        let b = ExperimentSpec::generate(ExperimentKind::Exp1, 2);
        let s = vec![Session::new("p", &b)];
        assert!(specs_for(&s, Some(&a)).is_err());
        assert_eq!(specs_for(&s, None).unwrap(), vec![b]);
    }
}
