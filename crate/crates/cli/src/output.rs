use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Collects the files a run writes, in order, under one directory.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.root.join(name)
    }

    /// Rows of floats, 17 significant digits each.
    pub fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> CliResult<()>
    where
        I: IntoIterator,
        I::Item: AsRef<[f64]>,
    {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| CliError::io(&path, e);
        writeln!(w, "{}", header.join(",")).map_err(io)?;
        for row in rows {
            let mut first = true;
            for v in row.as_ref() {
                if !first {
                    w.write_all(b",").map_err(io)?;
                }
                first = false;
                write!(w, "{v:.16e}").map_err(io)?;
            }
            w.write_all(b"\n").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).expect("output serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}

/// Reads `x,re,im` rows. The header line is optional.
pub fn read_wave_csv(path: &Path) -> CliResult<(Vec<f64>, Vec<(f64, f64)>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut xs = Vec::new();
    let mut vals = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with(|c: char| c.is_ascii_alphabetic())) {
            continue;
        }
        let fields: Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match fields.as_deref() {
            Ok([x, re, im]) => {
                xs.push(*x);
                vals.push((*re, *im));
            }
            _ => {
                return Err(CliError::config(format!("expected `x,re,im` on line {}", lineno + 1))
                    .with_context(serde_json::json!({ "path": path.display().to_string(), "line": lineno + 1 })))
            }
        }
    }
    Ok((xs, vals))
}
