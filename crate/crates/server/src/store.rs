//! Append-only per-session event logs: `<data dir>/sessions/<id>.jsonl`.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use verbacode::session::Event;

#[derive(Debug)]
pub struct EventLog {
    file: File,
}

impl EventLog {
    pub fn open(dir: &Path, id: &str) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(log_path(dir, id))?;
        Ok(Self { file })
    }

    /// Appends one event and flushes it to the OS.
    pub fn append(&mut self, event: &Event) -> io::Result<()> {
        let mut line = serde_json::to_vec(event)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.flush()
    }
}

pub fn sessions_dir(data_dir: &Path) -> io::Result<PathBuf> {
    let dir = data_dir.join("sessions");
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn log_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.jsonl"))
}

/// Every stored log as `(session id, events)`, sorted by id.
pub fn read_all(dir: &Path) -> io::Result<Vec<(String, Vec<Event>)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().map_or(true, |e| e != "jsonl") {
            continue;
        }
        let Some(id) = path.file_stem().map(|s| s.to_string_lossy().into_owned()) else {
            continue;
        };
        let mut events = Vec::new();
        for (i, line) in BufReader::new(File::open(&path)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let event = serde_json::from_str(&line).map_err(|e| {
                io::Error::new(io::ErrorKind::InvalidData, format!("{}:{}: {e}", path.display(), i + 1))
            })?;
            events.push(event);
        }
        out.push((id, events));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}
