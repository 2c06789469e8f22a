use std::io::Write;
use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;

use crate::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Standard output, or a file replaced atomically through a temporary
/// file in the same directory.
pub struct Sink {
    path: Option<PathBuf>,
}

impl Sink {
    pub fn new(path: Option<PathBuf>) -> Self {
        Sink { path }
    }

    pub fn write(&self, text: &str) -> Result<(), Failure> {
        let io = |e: std::io::Error| Failure::Usage(format!("cannot write output: {e}"));
        match &self.path {
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes()).map_err(io)?;
                out.flush().map_err(io)
            }
            Some(path) => {
                let dir = match path.parent() {
                    Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
                    _ => PathBuf::from("."),
                };
                let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
                tmp.write_all(text.as_bytes()).map_err(io)?;
                tmp.as_file().sync_all().map_err(io)?;
                tmp.persist(path).map_err(|e| io(e.error))?;
                Ok(())
            }
        }
    }

    pub fn write_json<T: Serialize>(&self, value: &T) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Usage(e.to_string()))?;
        self.write(&(text + "\n"))
    }
}
