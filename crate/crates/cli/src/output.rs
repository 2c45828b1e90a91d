//! Output files stamped with the config hash and seed.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub struct Output {
    dir: PathBuf,
    hash: String,
    seed: u64,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn new(dir: &Path, hash: String, seed: u64) -> Result<Output, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Output { dir: dir.to_path_buf(), hash, seed, written: Vec::new() })
    }

    pub fn stamp(&self) -> String {
        format!("# config_hash={} seed={}\n", self.hash, self.seed)
    }

    fn write(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    /// CSV with a leading `#` comment carrying the hash and seed.
    pub fn csv(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = format!("{}{body}", self.stamp());
        self.write(name, &text)
    }

    /// JSON object with `config_hash` and `seed` added at the top level.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut v = serde_json::to_value(value).expect("output serializes");
        let stamp = |m: &mut serde_json::Map<String, Value>| {
            m.insert("config_hash".into(), Value::String(self.hash.clone()));
            m.insert("seed".into(), Value::from(self.seed));
        };
        match &mut v {
            Value::Object(m) => stamp(m),
            other => {
                let mut m = serde_json::Map::new();
                m.insert("data".into(), other.take());
                stamp(&mut m);
                v = Value::Object(m);
            }
        }
        let text = serde_json::to_string_pretty(&v).expect("output serializes") + "\n";
        self.write(name, &text)
    }

    /// Gnuplot script; the data files it reads sit next to it.
    pub fn gnuplot(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = format!("{}set datafile separator ','\nset key autotitle columnhead\n{body}", self.stamp());
        self.write(name, &text)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
