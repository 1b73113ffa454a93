//! Output files. Every file carries the tool version, the resolved
//! configuration, the seed, the duration (unless disabled) and the warnings.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use tas_core::io::{format_number, write_matrix_csv, write_table_csv};
use tas_core::{Result, SymMatrix};

use crate::OutputArgs;

/// Provenance shared by all files written by one invocation.
pub struct RunInfo {
    pub command: &'static str,
    pub config: Value,
    pub seed: Option<u64>,
    pub duration: Option<f64>,
    pub warnings: Vec<String>,
}

impl RunInfo {
    pub fn new(command: &'static str, config: &impl Serialize, seed: Option<u64>) -> Self {
        Self {
            command,
            config: serde_json::to_value(config).expect("config serialises"),
            seed,
            duration: None,
            warnings: Vec::new(),
        }
    }

    pub fn finish(&mut self, start: Instant, out: &OutputArgs) {
        if !out.no_timing {
            self.duration = Some(start.elapsed().as_secs_f64());
        }
        self.warnings.sort();
        self.warnings.dedup();
    }

    fn header(&self) -> Value {
        json!({
            "tool": "tas",
            "version": tas_core::VERSION,
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "duration_seconds": self.duration,
            "warnings": self.warnings,
        })
    }

    fn metadata(&self) -> Vec<String> {
        let mut lines = vec![
            format!("tool: tas {}", tas_core::VERSION),
            format!("command: {}", self.command),
            format!("config: {}", self.config),
        ];
        if let Some(seed) = self.seed {
            lines.push(format!("seed: {seed}"));
        }
        if let Some(d) = self.duration {
            lines.push(format!("duration_seconds: {d:.3}"));
        }
        lines.extend(self.warnings.iter().map(|w| format!("warning: {w}")));
        lines
    }
}

pub struct Writer<'a> {
    dir: &'a Path,
    info: &'a RunInfo,
    written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    pub fn new(out: &'a OutputArgs, info: &'a RunInfo) -> Result<Self> {
        std::fs::create_dir_all(&out.out_dir)?;
        Ok(Self {
            dir: &out.out_dir,
            info,
            written: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let file = File::create(&path)?;
        self.written.push(path);
        Ok(BufWriter::new(file))
    }

    /// Writes `body` merged under the provenance header.
    pub fn json(&mut self, name: &str, body: Value) -> Result<()> {
        let mut doc = self.info.header();
        if let (Value::Object(doc), Value::Object(body)) = (&mut doc, body) {
            doc.extend(body);
        }
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, &doc)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    pub fn matrix(&mut self, name: &str, labels: &[String], m: &SymMatrix) -> Result<()> {
        let mut w = self.create(name)?;
        write_matrix_csv(&mut w, labels, m, &self.info.metadata())?;
        w.flush()?;
        Ok(())
    }

    pub fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = self.create(name)?;
        write_table_csv(&mut w, header, rows, &self.info.metadata())?;
        w.flush()?;
        Ok(())
    }

    pub fn finish(self) -> Vec<PathBuf> {
        self.written
    }
}

pub fn num(x: f64) -> String {
    format_number(x)
}
