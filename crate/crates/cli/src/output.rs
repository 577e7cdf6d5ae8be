//! Artifact files: CSV tables, JSON documents and the run manifest.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

pub struct Output {
    root: PathBuf,
    artifacts: Vec<String>,
    started: Instant,
    quiet: bool,
}

/// One CSV row; every value is written with Rust's shortest round-trip
/// formatting so identical inputs give byte-identical files.
/// Very small or large magnitudes use exponent notation.
#[derive(Default)]
pub struct Row(Vec<String>);

impl Row {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num(mut self, x: f64) -> Self {
        self.0.push(format_float(x));
        self
    }

    pub fn nums(mut self, xs: impl IntoIterator<Item = f64>) -> Self {
        self.0.extend(xs.into_iter().map(format_float));
        self
    }

    pub fn int(mut self, n: usize) -> Self {
        self.0.push(n.to_string());
        self
    }

    pub fn text(mut self, s: impl Into<String>) -> Self {
        self.0.push(s.into());
        self
    }
}

fn format_float(x: f64) -> String {
    let magnitude = x.abs();
    if x != 0.0 && x.is_finite() && !(1e-4..1e6).contains(&magnitude) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

impl Output {
    pub fn new(root: &Path, quiet: bool) -> Result<Self, CliError> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            artifacts: Vec::new(),
            started: Instant::now(),
            quiet,
        })
    }

    pub fn progress(&self, message: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("[{:7.2}s] {}", self.started.elapsed().as_secs_f64(), message.as_ref());
        }
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let file = File::create(self.root.join(name))?;
        self.artifacts.push(name.to_string());
        Ok(BufWriter::new(file))
    }

    pub fn csv<S: AsRef<str>>(&mut self, name: &str, header: &[S], rows: impl IntoIterator<Item = Row>) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(self.create(name)?);
        w.write_record(header.iter().map(|h| h.as_ref()))?;
        for row in rows {
            w.write_record(&row.0)?;
        }
        w.flush()?;
        self.progress(format!("wrote {name}"));
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        std::io::Write::write_all(&mut w, b"\n")?;
        self.progress(format!("wrote {name}"));
        Ok(())
    }

    pub fn binary(&mut self, name: &str, write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
        let mut w = self.create(name)?;
        write(&mut w)?;
        std::io::Write::flush(&mut w)?;
        self.progress(format!("wrote {name}"));
        Ok(())
    }

    /// Writes `manifest.json` listing the command, the resolved config,
    /// crate versions, wall time and every artifact produced.
    pub fn finish(mut self, command: &str, config: &RunConfig) -> Result<(), CliError> {
        let manifest = Manifest {
            command,
            config,
            versions: Versions {
                rydchain: rydchain::VERSION,
                rydchain_cli: env!("CARGO_PKG_VERSION"),
            },
            wall_time_s: self.started.elapsed().as_secs_f64(),
            artifacts: &self.artifacts.clone(),
        };
        self.json("manifest.json", &manifest)
    }
}

#[derive(Serialize)]
struct Versions {
    rydchain: &'static str,
    rydchain_cli: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: &'a RunConfig,
    versions: Versions,
    wall_time_s: f64,
    artifacts: &'a [String],
}
