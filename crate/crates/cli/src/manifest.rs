//! Run manifests: the command line that produced an artifact plus the
//! resolved parameters, as `key = value` lines.

use std::fmt::{self, Display};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Manifest {
    /// working directory the arguments are relative to
    pub cwd: PathBuf,
    /// command line without the program name
    pub args: Vec<String>,
    values: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(cwd: PathBuf, args: Vec<String>) -> Self {
        Self {
            cwd,
            args,
            values: Vec::new(),
        }
    }

    /// Records a resolved parameter, replacing an earlier value of `key`.
    pub fn set(&mut self, key: &str, value: impl Display) {
        let value = value.to_string();
        match self.values.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.values.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Manifest::default();
        let mut cwd = None;
        for (k, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once(" = ") else {
                bail!("manifest line {}: expected 'key = value'", k + 1);
            };
            match key {
                "cwd" => cwd = Some(PathBuf::from(value)),
                "arg" => m.args.push(value.to_string()),
                _ => m.set(key, value),
            }
        }
        m.cwd = cwd.context("manifest has no 'cwd' line")?;
        if m.args.is_empty() {
            bail!("manifest records no command");
        }
        Ok(m)
    }
}

impl Display for Manifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# firemap run manifest")?;
        writeln!(f, "version = {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(f, "cwd = {}", self.cwd.display())?;
        for a in &self.args {
            writeln!(f, "arg = {a}")?;
        }
        for (k, v) in &self.values {
            if k != "version" {
                writeln!(f, "{k} = {v}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut m = Manifest::new(
            "/tmp/x y".into(),
            vec!["surveil".into(), "--r".into(), "0.5".into()],
        );
        m.set("r", 0.5);
        m.set("input", "grid16");
        m.set("r", 0.75);
        let back = Manifest::parse(&m.to_string()).unwrap();
        assert_eq!(back.cwd, m.cwd);
        assert_eq!(back.args, m.args);
        assert_eq!(back.get("r"), Some("0.75"));
        assert_eq!(back.get("input"), Some("grid16"));
        assert!(back.get("version").is_some());
    }

    #[test]
    fn rejects_garbage() {
        assert!(Manifest::parse("arg = surveil\n").is_err());
        assert!(Manifest::parse("cwd = /\n").is_err());
        assert!(Manifest::parse("cwd = /\nnonsense\n").is_err());
    }
}
