use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// One JSON line of a run trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub tick: u64,
    pub source: String,
    pub kind: String,
    #[serde(default)]
    pub payload: Value,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("CorruptTrace: line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn write_trace(w: &mut impl Write, events: &[TraceEvent]) -> std::io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut *w, e)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn trace_bytes(events: &[TraceEvent]) -> Vec<u8> {
    let mut out = Vec::new();
    write_trace(&mut out, events).expect("writing to memory");
    out
}

pub fn read_trace(r: impl BufRead) -> Result<Vec<TraceEvent>, TraceError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e: TraceEvent = serde_json::from_str(&line).map_err(|err| TraceError::Corrupt {
            line: i + 1,
            reason: err.to_string(),
        })?;
        out.push(e);
    }
    Ok(out)
}
