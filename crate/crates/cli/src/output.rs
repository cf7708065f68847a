//! Self-describing output documents.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::config::Resolver;
use crate::error::CliError;

pub const TOOL: &str = concat!("sparsebound ", env!("CARGO_PKG_VERSION"));
pub const OUT_DIR_ENV: &str = "SPARSEBOUND_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl std::fmt::Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
        })
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("unknown format `{s}` (json or csv)")),
        }
    }
}

/// Where and how a command writes its results.
pub struct Sink {
    pub command: String,
    pub format: Format,
    pub out_dir: Option<PathBuf>,
    pub deterministic: bool,
    started: Instant,
}

impl Sink {
    pub fn new(command: &str, format: Format, out_dir: Option<PathBuf>, deterministic: bool) -> Self {
        Self {
            command: command.to_string(),
            format,
            out_dir,
            deterministic,
            started: Instant::now(),
        }
    }

    fn clock(&self) -> Vec<(&'static str, Value)> {
        if self.deterministic {
            return Vec::new();
        }
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        vec![
            ("generated_unix", json!(now)),
            ("elapsed_seconds", json!(self.started.elapsed().as_secs_f64())),
        ]
    }

    fn config_map(&self, res: &Resolver) -> BTreeMap<String, String> {
        let mut m = res.resolved().clone();
        m.insert("command".into(), self.command.clone());
        m
    }

    pub fn json_document(&self, res: &Resolver, result: Value) -> String {
        let mut doc = serde_json::Map::new();
        doc.insert("tool".into(), json!(TOOL));
        doc.insert("command".into(), json!(self.command));
        doc.insert("config".into(), json!(self.config_map(res)));
        doc.insert("notes".into(), json!(res.notes()));
        for (k, v) in self.clock() {
            doc.insert(k.into(), v);
        }
        doc.insert("result".into(), result);
        let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("serialisable");
        s.push('\n');
        s
    }

    /// CSV body prefixed with `#` lines holding the tool version and resolved configuration.
    pub fn csv_document(&self, res: &Resolver, body: &str) -> String {
        let mut s = format!("# tool = {TOOL}\n");
        for (k, v) in self.config_map(res) {
            s.push_str(&format!("# {k} = {v}\n"));
        }
        for n in res.notes() {
            s.push_str(&format!("# note: {n}\n"));
        }
        for (k, v) in self.clock() {
            s.push_str(&format!("# {k} = {v}\n"));
        }
        s.push_str(body);
        s
    }

    /// Replayable `key = value` configuration.
    pub fn config_file(&self, res: &Resolver) -> String {
        let mut s = format!("# {TOOL}\n");
        for (k, v) in self.config_map(res) {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    /// Write `name` into the output directory, or print it when there is none.
    pub fn emit(&self, name: &str, content: &str) -> Result<Option<PathBuf>, CliError> {
        match &self.out_dir {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                let p = dir.join(name);
                fs::write(&p, content)?;
                Ok(Some(p))
            }
            None => {
                print!("{content}");
                Ok(None)
            }
        }
    }

    /// Emit the main document in the selected format plus, with an output directory,
    /// the replayable config next to it.
    pub fn emit_main(&self, res: &Resolver, stem: &str, json_result: Value, csv_body: &str) -> Result<(), CliError> {
        let (ext, doc) = match self.format {
            Format::Json => ("json", self.json_document(res, json_result)),
            Format::Csv => ("csv", self.csv_document(res, csv_body)),
        };
        if let Some(p) = self.emit(&format!("{stem}.{ext}"), &doc)? {
            self.emit(&format!("{stem}.conf"), &self.config_file(res))?;
            eprintln!("wrote {}", p.display());
        }
        Ok(())
    }

    /// Human-readable text: standard output when files are written, standard error otherwise
    /// so that standard output stays machine-readable.
    pub fn summary(&self, text: &str) {
        if self.out_dir.is_some() {
            print!("{text}");
        } else {
            eprint!("{text}");
        }
    }
}

pub fn resolve_out_dir(flag: Option<&Path>) -> Option<PathBuf> {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
}
