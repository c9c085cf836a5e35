use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::{CmdResult, Failure};

pub fn write_file(path: &Path, bytes: &[u8]) -> CmdResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

/// `{"command", "seed", ...body}` as pretty JSON, to `out` or stdout.
pub fn emit(command: &str, seed: u64, body: &impl Serialize, out: Option<&Path>) -> CmdResult {
    let mut map = Map::new();
    map.insert("command".into(), command.into());
    map.insert("seed".into(), seed.into());
    match serde_json::to_value(body).map_err(|e| Failure::Runtime(e.to_string()))? {
        Value::Object(fields) => map.extend(fields),
        other => {
            map.insert("result".into(), other);
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(map)).map_err(|e| Failure::Runtime(e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => write_file(path, text.as_bytes()),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Runtime(format!("stdout: {e}"))),
    }
}

pub fn print(text: &str) -> CmdResult {
    std::io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| Failure::Runtime(format!("stdout: {e}")))
}
