//! Flattening of configuration files into dotted key paths with line
//! provenance.

use std::path::Path;

use yaml_rust2::parser::{Event, MarkedEventReceiver, Parser};
use yaml_rust2::scanner::Marker;

use super::{ConfigEntry, ConfigModel, EnvRead};
use crate::diag::{Diagnostic, Stage};

/// Scans every config file under `root`; unreadable or malformed files
/// become diagnostics. Environment reads come from the parsed code units.
pub fn scan_config_env(
    root: &Path,
    config_files: &[String],
    env_var_reads: Vec<EnvRead>,
) -> (ConfigModel, Vec<Diagnostic>) {
    let mut model = ConfigModel {
        entries: Vec::new(),
        env_var_reads,
    };
    let mut diags = Vec::new();
    for rel in config_files {
        let text = match std::fs::read(root.join(rel)) {
            Ok(bytes) => String::from_utf8_lossy(&bytes).into_owned(),
            Err(e) => {
                diags.push(Diagnostic::new(rel.clone(), Stage::Config, e.to_string()));
                continue;
            }
        };
        match scan_config_file(rel, &text) {
            Ok(entries) => model.entries.extend(entries),
            Err(reason) => diags.push(Diagnostic::new(rel.clone(), Stage::Config, reason)),
        }
    }
    (model, diags)
}

/// Flattens one config file, choosing the format from its name.
pub fn scan_config_file(rel: &str, text: &str) -> Result<Vec<ConfigEntry>, String> {
    let name = rel.rsplit('/').next().unwrap_or(rel).to_ascii_lowercase();
    let ext = name.rsplit_once('.').map(|(_, e)| e).unwrap_or("");
    let raw = if name.starts_with("requirements") && ext == "txt" {
        scan_requirements(text)
    } else if name == ".env" || name.starts_with(".env.") || ext == "env" {
        scan_dotenv(text)
    } else {
        match ext {
            "yaml" | "yml" => scan_yaml(text)?,
            "json" => scan_json(text)?,
            "toml" => scan_toml(text)?,
            "ini" | "cfg" => scan_ini(text),
            _ => Vec::new(),
        }
    };
    Ok(raw
        .into_iter()
        .map(|(key, value, line)| ConfigEntry {
            key,
            value,
            file: rel.to_string(),
            line,
        })
        .collect())
}

type Raw = Vec<(String, String, u32)>;

fn scan_requirements(text: &str) -> Raw {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() || line.starts_with('-') {
                return None;
            }
            let name_end = line
                .find(|c: char| !(c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.')))
                .unwrap_or(line.len());
            let name = &line[..name_end];
            (!name.is_empty()).then(|| {
                (
                    format!("requirements.{}", name.to_ascii_lowercase()),
                    line.to_string(),
                    i as u32 + 1,
                )
            })
        })
        .collect()
}

fn scan_dotenv(text: &str) -> Raw {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.trim();
            if line.starts_with('#') {
                return None;
            }
            let line = line.strip_prefix("export ").unwrap_or(line);
            let (k, v) = line.split_once('=')?;
            let v = v.trim().trim_matches(|c| c == '"' || c == '\'');
            Some((k.trim().to_string(), v.to_string(), i as u32 + 1))
        })
        .collect()
}

fn scan_ini(text: &str) -> Raw {
    let mut section = String::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with(';') {
            continue;
        }
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let Some(pos) = t.find(['=', ':']) else { continue };
        let key = t[..pos].trim();
        if key.is_empty() || line.starts_with([' ', '\t']) {
            // Continuation lines belong to the previous value.
            continue;
        }
        let full = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        out.push((full, t[pos + 1..].trim().to_string(), i as u32 + 1));
    }
    out
}

fn join_key(prefix: &str, seg: &str) -> String {
    if prefix.is_empty() {
        seg.to_string()
    } else {
        format!("{prefix}.{seg}")
    }
}

/// Line (1-based) of the first line at or after `from` mentioning `needle`.
fn locate(lines: &[&str], needle: &str, from: u32) -> u32 {
    let start = from.saturating_sub(1) as usize;
    lines
        .iter()
        .enumerate()
        .skip(start)
        .find(|(_, l)| l.contains(needle))
        .map(|(i, _)| i as u32 + 1)
        .unwrap_or(from.max(1))
}

fn scan_json(text: &str) -> Result<Raw, String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::new();
    flatten_json(&value, "", 1, &lines, &mut out);
    Ok(out)
}

fn flatten_json(v: &serde_json::Value, prefix: &str, line: u32, lines: &[&str], out: &mut Raw) {
    use serde_json::Value;
    match v {
        Value::Object(map) if !map.is_empty() => {
            for (k, child) in map {
                let l = locate(lines, &format!("\"{k}\""), line);
                flatten_json(child, &join_key(prefix, k), l, lines, out);
            }
        }
        Value::Array(items) if !items.is_empty() => {
            for (i, child) in items.iter().enumerate() {
                flatten_json(child, &join_key(prefix, &i.to_string()), line, lines, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone(), line)),
        other => out.push((prefix.to_string(), other.to_string(), line)),
    }
}

fn scan_toml(text: &str) -> Result<Raw, String> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| e.message().to_string())?;
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::new();
    flatten_toml(&toml::Value::Table(table), "", 1, &lines, &mut out);
    Ok(out)
}

fn flatten_toml(v: &toml::Value, prefix: &str, line: u32, lines: &[&str], out: &mut Raw) {
    use toml::Value;
    match v {
        Value::Table(map) if !map.is_empty() => {
            for (k, child) in map {
                let l = locate(lines, k, line);
                flatten_toml(child, &join_key(prefix, k), l, lines, out);
            }
        }
        Value::Array(items) if !items.is_empty() => {
            for (i, child) in items.iter().enumerate() {
                flatten_toml(child, &join_key(prefix, &i.to_string()), line, lines, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone(), line)),
        other => out.push((prefix.to_string(), other.to_string(), line)),
    }
}

enum Frame {
    Map {
        key: Option<(String, u32)>,
        pushed: bool,
    },
    Seq {
        index: usize,
        pushed: bool,
    },
}

#[derive(Default)]
struct YamlFlattener {
    path: Vec<String>,
    frames: Vec<Frame>,
    out: Raw,
}

impl YamlFlattener {
    /// Path segment and line of the value about to be read in the current
    /// container.
    fn take_slot(&mut self, line: u32) -> Option<(String, u32)> {
        match self.frames.last_mut()? {
            Frame::Map { key, .. } => key.take(),
            Frame::Seq { index, .. } => {
                let seg = index.to_string();
                *index += 1;
                Some((seg, line))
            }
        }
    }

    fn emit(&mut self, value: String, line: u32) {
        let expecting_key = matches!(self.frames.last(), Some(Frame::Map { key: None, .. }));
        if expecting_key {
            if let Some(Frame::Map { key, .. }) = self.frames.last_mut() {
                *key = Some((value, line));
            }
            return;
        }
        if let Some((seg, l)) = self.take_slot(line) {
            let mut key = self.path.join(".");
            key = join_key(&key, &seg);
            self.out.push((key, value, l));
        }
    }

    fn open(&mut self, line: u32, map: bool) {
        let pushed = match self.take_slot(line) {
            Some((seg, _)) => {
                self.path.push(seg);
                true
            }
            None => false,
        };
        self.frames.push(if map {
            Frame::Map { key: None, pushed }
        } else {
            Frame::Seq { index: 0, pushed }
        });
    }

    fn close(&mut self) {
        if let Some(Frame::Map { pushed: true, .. } | Frame::Seq { pushed: true, .. }) =
            self.frames.pop()
        {
            self.path.pop();
        }
    }
}

impl MarkedEventReceiver for YamlFlattener {
    fn on_event(&mut self, ev: Event, mark: Marker) {
        let line = mark.line() as u32;
        match ev {
            Event::Scalar(value, ..) => self.emit(value, line),
            Event::Alias(_) => self.emit("*alias".to_string(), line),
            Event::MappingStart(..) => self.open(line, true),
            Event::SequenceStart(..) => self.open(line, false),
            Event::MappingEnd | Event::SequenceEnd => self.close(),
            _ => {}
        }
    }
}

fn scan_yaml(text: &str) -> Result<Raw, String> {
    let mut flat = YamlFlattener::default();
    Parser::new_from_str(text)
        .load(&mut flat, true)
        .map_err(|e| e.to_string())?;
    Ok(flat.out)
}
