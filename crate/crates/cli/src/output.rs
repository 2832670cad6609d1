//! Writing rule files and tables, and mapping errors to exit codes.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use clap::ValueEnum;
use cq_core::io::{cubature_csv, quadrature_csv, Payload, RuleFile};
use serde_json::Value;

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    /// Explicit choice, else `.csv` extension, else JSON.
    pub fn resolve(explicit: Option<Format>, out: Option<&Path>) -> Format {
        explicit.unwrap_or_else(|| match out.and_then(|p| p.extension()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        })
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

/// Invalid flags or input files; exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// 2 for usage and validation errors, 3 for algorithmic failures.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    use cq_core::Error as E;
    for cause in e.chain() {
        if cause.is::<UsageError>() || cause.is::<std::io::Error>() {
            return 2;
        }
        if let Some(core) = cause.downcast_ref::<E>() {
            return match core {
                E::InvalidDistribution(_)
                | E::InvalidArgument(_)
                | E::UnboundedSupport(_)
                | E::NotSymmetric
                | E::TooManyNodes { .. }
                | E::Io(_)
                | E::Format(_)
                | E::Overflow => 2,
                _ => 3,
            };
        }
    }
    3
}

/// Metadata block shared by every output.
pub fn metadata(invocation: &str) -> BTreeMap<String, Value> {
    let mut m = BTreeMap::new();
    m.insert("command".to_string(), Value::from(invocation));
    m.insert("cq_version".to_string(), Value::from(env!("CARGO_PKG_VERSION")));
    m
}

pub fn write_text(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// Serializes a rule file as JSON or CSV. Families have no CSV form.
pub fn render(file: &RuleFile, format: Format) -> anyhow::Result<String> {
    match format {
        Format::Json => Ok(file.to_json()? + "\n"),
        Format::Csv => match &file.payload {
            Payload::Quadrature(r) => Ok(quadrature_csv(r, &file.metadata)),
            Payload::Cubature(r) => Ok(cubature_csv(r, &file.metadata)),
            Payload::Family(_) => Err(usage("a family has no CSV form; use JSON")),
        },
    }
}

pub fn emit(file: &RuleFile, out: Option<&Path>, format: Option<Format>) -> anyhow::Result<()> {
    let format = Format::resolve(format, out);
    write_text(out, &render(file, format)?)
}

/// `# key: value` lines followed by a CSV table.
pub fn table(metadata: &BTreeMap<String, Value>, header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = String::new();
    for (k, v) in metadata {
        s.push_str(&format!("# {k}: {v}\n"));
    }
    s.push_str(&header.join(","));
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_from_extension() {
        assert_eq!(Format::resolve(None, Some(Path::new("a.CSV"))), Format::Csv);
        assert_eq!(Format::resolve(None, Some(Path::new("a.json"))), Format::Json);
        assert_eq!(Format::resolve(None, None), Format::Json);
        assert_eq!(Format::resolve(Some(Format::Json), Some(Path::new("a.csv"))), Format::Json);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&usage("bad")), 2);
        assert_eq!(exit_code(&cq_core::Error::NotSymmetric.into()), 2);
        let e: anyhow::Error = cq_core::Error::ReductionExhausted("x".into()).into();
        assert_eq!(exit_code(&e.context("reducing")), 3);
    }

    #[test]
    fn table_layout() {
        let mut m = BTreeMap::new();
        m.insert("seed".to_string(), Value::from(3));
        let t = table(&m, &["a", "b"], &[vec!["1".into(), "2".into()]]);
        assert_eq!(t, "# seed: 3\na,b\n1,2\n");
    }
}
