//! Flat `key = value` configuration files and flag/file/default resolution.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

/// Parse `key = value` lines. Blank lines and lines starting with `#` are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected `key = value`", no + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(CliError::Config(format!("config line {}: empty key", no + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(CliError::Config(format!("config line {}: duplicate key `{k}`", no + 1)));
        }
    }
    Ok(out)
}

/// Resolves each parameter from its flag, then the config file, then a default, and
/// records the outcome so outputs can embed the full configuration.
#[derive(Debug, Default)]
pub struct Resolver {
    file: BTreeMap<String, String>,
    used: BTreeSet<String>,
    resolved: BTreeMap<String, String>,
    notes: Vec<String>,
}

impl Resolver {
    /// Load `path` if given. A missing file is not an error: defaults apply and a note is kept.
    pub fn load(path: Option<&Path>, command: &str) -> Result<Self, CliError> {
        let mut r = Self::default();
        let Some(path) = path else {
            r.notes.push("no config file; flags and defaults only".into());
            return Ok(r);
        };
        match std::fs::read_to_string(path) {
            Ok(text) => {
                r.file = parse_config(&text)?;
                r.notes.push(format!("config file {}", path.display()));
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                r.notes.push(format!("config file {} not found; defaults used", path.display()));
            }
            Err(e) => return Err(CliError::Config(format!("cannot read {}: {e}", path.display()))),
        }
        if let Some(c) = r.file.get("command") {
            if c != command {
                return Err(CliError::Config(format!("config is for `{c}`, not `{command}`")));
            }
        }
        r.used.insert("command".into());
        Ok(r)
    }

    fn from_file<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.used.insert(key.to_string());
        match self.file.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|e| CliError::Config(format!("config key `{key}`: cannot parse `{s}`: {e}"))),
        }
    }

    /// Flag, then file; `None` if neither is set. Only set values are recorded.
    pub fn opt<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => {
                self.used.insert(key.to_string());
                Some(v)
            }
            None => self.from_file(key)?,
        };
        if let Some(v) = &v {
            self.resolved.insert(key.to_string(), v.to_string());
        }
        Ok(v)
    }

    pub fn get<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let v = self.opt(key, flag)?.unwrap_or(default);
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    /// Like [`Resolver::get`] with an error when no value is available.
    pub fn require<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        self.opt(key, flag)?
            .ok_or_else(|| CliError::Config(format!("missing required parameter `{key}`")))
    }

    /// Record a derived value (such as `p = auto` resolved to a number).
    pub fn set(&mut self, key: &str, value: impl Display) {
        self.resolved.insert(key.to_string(), value.to_string());
    }

    /// Fail on config-file keys this command never asked for.
    pub fn finish(&self) -> Result<(), CliError> {
        let unknown: Vec<&str> = self
            .file
            .keys()
            .filter(|k| !self.used.contains(*k))
            .map(String::as_str)
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!("unknown config keys: {}", unknown.join(", "))))
        }
    }

    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }
}

/// Comma-separated numbers.
pub fn parse_list<T: FromStr>(key: &str, s: &str) -> Result<Vec<T>, CliError>
where
    T::Err: Display,
{
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|e| CliError::Config(format!("`{key}`: cannot parse `{v}`: {e}")))
        })
        .collect()
}

/// A numeric grid: `a,b,c`, `start:stop:log[:per_decade]` or `start:stop:lin:step`.
pub fn parse_grid(key: &str, s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 1 {
        return parse_list(key, s);
    }
    let bad = || CliError::Config(format!("`{key}`: expected `start:stop:log[:per_decade]` or `start:stop:lin:step`, got `{s}`"));
    if parts.len() < 3 {
        return Err(bad());
    }
    let num = |v: &str| v.parse::<f64>().map_err(|_| bad());
    let (start, stop) = (num(parts[0])?, num(parts[1])?);
    if !(start >= 0.0 && stop >= start && stop.is_finite()) {
        return Err(CliError::Config(format!("`{key}`: need 0 <= start <= stop")));
    }
    match (parts[2], parts.len()) {
        ("log", 3 | 4) => {
            if start == 0.0 {
                return Err(CliError::Config(format!("`{key}`: a log grid needs start > 0")));
            }
            let per = if parts.len() == 4 { num(parts[3])? } else { 1.0 };
            if !(per >= 1.0) || per.fract() != 0.0 {
                return Err(bad());
            }
            let steps = ((stop / start).log10() * per + 1e-9).floor() as usize;
            Ok((0..=steps).map(|j| tidy(start * 10f64.powf(j as f64 / per))).collect())
        }
        ("lin", 4) => {
            let step = num(parts[3])?;
            if !(step > 0.0) {
                return Err(bad());
            }
            let steps = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=steps).map(|j| start + j as f64 * step).collect())
        }
        _ => Err(bad()),
    }
}

/// Round values that are within float noise of an integer.
fn tidy(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() <= 1e-9 * v.abs().max(1.0) {
        r
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_rejects_garbage() {
        let c = parse_config("# x\n n = 10 \n\nk=2\n").unwrap();
        assert_eq!(c["n"], "10");
        assert_eq!(c["k"], "2");
        assert!(parse_config("n 10").is_err());
        assert!(parse_config("n = 1\nn = 2").is_err());
    }

    #[test]
    fn flag_beats_file_beats_default() {
        let mut r = Resolver {
            file: parse_config("n = 10\nk = 3").unwrap(),
            ..Default::default()
        };
        assert_eq!(r.get("n", Some(20usize), 5).unwrap(), 20);
        assert_eq!(r.get("k", None, 1usize).unwrap(), 3);
        assert_eq!(r.get("t", None, 7usize).unwrap(), 7);
        assert_eq!(r.resolved()["n"], "20");
        r.finish().unwrap();
    }

    #[test]
    fn unknown_file_keys_are_reported() {
        let r = Resolver {
            file: parse_config("bogus = 1").unwrap(),
            ..Default::default()
        };
        assert!(r.finish().is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("g", "100:10000:log").unwrap(), vec![100.0, 1000.0, 10000.0]);
        assert_eq!(parse_grid("g", "1:100:log:2").unwrap().len(), 5);
        assert_eq!(parse_grid("g", "1:2:lin:0.5").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_grid("g", "3,1").unwrap(), vec![3.0, 1.0]);
        assert!(parse_grid("g", "1:2:cubic").is_err());
        assert_eq!(parse_grid("g", "0:1:lin:0.125").unwrap().len(), 9);
        assert!(parse_grid("g", "0:10:log").is_err());
    }
}
