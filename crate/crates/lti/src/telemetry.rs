//! JSON-lines event log.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use crate::error::{CliError, Result};

/// Appends one JSON object per event. Wall-clock fields are only added when
/// timing is enabled.
#[derive(Debug)]
pub struct Telemetry {
    sink: Option<(PathBuf, BufWriter<File>)>,
    started: Option<Instant>,
}

impl Telemetry {
    pub fn disabled() -> Self {
        Self { sink: None, started: None }
    }

    pub fn to_file(path: &Path, timing: bool) -> Result<Self> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self { sink: Some((path.to_path_buf(), BufWriter::new(file))), started: timing.then(Instant::now) })
    }

    pub fn event(&mut self, kind: &str, mut fields: Value) -> Result<()> {
        let Some((path, w)) = &mut self.sink else {
            return Ok(());
        };
        if let Value::Object(map) = &mut fields {
            map.insert("event".into(), json!(kind));
            if let Some(t0) = self.started {
                map.insert("elapsed_s".into(), json!(t0.elapsed().as_secs_f64()));
            }
        }
        serde_json::to_writer(&mut *w, &fields).map_err(|e| CliError::io(path.clone(), e.into()))?;
        w.write_all(b"\n").map_err(|e| CliError::io(path.clone(), e))
    }

    pub fn flush(&mut self) -> Result<()> {
        if let Some((path, w)) = &mut self.sink {
            w.flush().map_err(|e| CliError::io(path.clone(), e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_one_object_per_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let mut t = Telemetry::to_file(&path, false).unwrap();
        t.event("epoch", json!({ "epoch": 1, "nll": -0.5 })).unwrap();
        t.event("done", json!({})).unwrap();
        t.flush().unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0]["event"], "epoch");
        assert!(lines[0].get("elapsed_s").is_none());
        Telemetry::disabled().event("x", json!({})).unwrap();
    }
}
