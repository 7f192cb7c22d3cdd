//! Output directory bookkeeping and the run manifest.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Serialize;
use serde_json::Value;

/// Writes files into the output directory and remembers their names.
pub struct OutDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    /// Pretty JSON; refuses to write non-finite numbers.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let v = serde_json::to_value(value)?;
        ensure_finite(&v, name)?;
        let mut text = serde_json::to_string_pretty(&v)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
        self.write_text(name, &String::from_utf8(bytes)?)
    }
}

/// Every report field that can be absent is omitted rather than null, so a
/// null here can only come from a NaN or infinity.
pub fn ensure_finite(v: &Value, context: &str) -> anyhow::Result<()> {
    fn walk(v: &Value, path: &mut String) -> bool {
        match v {
            Value::Null => false,
            Value::Array(items) => items.iter().enumerate().all(|(i, x)| {
                let len = path.len();
                path.push_str(&format!("[{i}]"));
                let ok = walk(x, path);
                if ok {
                    path.truncate(len);
                }
                ok
            }),
            Value::Object(map) => map.iter().all(|(k, x)| {
                let len = path.len();
                path.push('.');
                path.push_str(k);
                let ok = walk(x, path);
                if ok {
                    path.truncate(len);
                }
                ok
            }),
            _ => true,
        }
    }
    let mut path = String::new();
    if !walk(v, &mut path) {
        bail!("non-finite number in {context} at {}", if path.is_empty() { "<root>" } else { &path });
    }
    Ok(())
}

/// Shortest decimal that round-trips to the same `f64`.
pub fn num(x: f64) -> anyhow::Result<String> {
    if !x.is_finite() {
        bail!("non-finite number {x}");
    }
    Ok(format!("{x:?}"))
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: Value,
    pub seed: u64,
    pub version: String,
    pub threads: usize,
    pub started_at: String,
    pub finished_at: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub outputs: Vec<String>,
}
