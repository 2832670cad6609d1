//! Versioned JSON rule files and CSV export.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cubature::CubatureRule;
use crate::error::{Error, Result};
use crate::genz::StudyRow;
use crate::quadrature::QuadratureRule;
use crate::reduce1d::NestedFamily;

pub const SCHEMA: &str = "cq-rule/1";

/// Rule payload of a [`RuleFile`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "rule", rename_all = "snake_case")]
pub enum Payload {
    Quadrature(QuadratureRule),
    Cubature(CubatureRule),
    Family(FamilyRepr),
}

/// Family members from largest to smallest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyRepr {
    pub nested: bool,
    pub rules: Vec<QuadratureRule>,
}

impl From<&NestedFamily> for FamilyRepr {
    fn from(f: &NestedFamily) -> Self {
        FamilyRepr {
            nested: true,
            rules: f.rules().to_vec(),
        }
    }
}

/// Schema-versioned rule with free-form creation metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleFile {
    pub schema: String,
    #[serde(default)]
    pub metadata: BTreeMap<String, Value>,
    #[serde(flatten)]
    pub payload: Payload,
}

impl RuleFile {
    pub fn new(payload: Payload) -> Self {
        RuleFile {
            schema: SCHEMA.to_string(),
            metadata: BTreeMap::new(),
            payload,
        }
    }

    pub fn quadrature(rule: QuadratureRule) -> Self {
        Self::new(Payload::Quadrature(rule))
    }

    pub fn cubature(rule: CubatureRule) -> Self {
        Self::new(Payload::Cubature(rule))
    }

    pub fn family(family: &NestedFamily) -> Self {
        Self::new(Payload::Family(family.into()))
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// Parses and re-validates the payload.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: RuleFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if file.schema != SCHEMA {
            return Err(Error::Format(format!(
                "schema `{}` is not `{SCHEMA}`",
                file.schema
            )));
        }
        match &file.payload {
            Payload::Quadrature(r) => {
                revalidate(r)?;
            }
            Payload::Family(f) => {
                for r in &f.rules {
                    revalidate(r)?;
                }
                if f.nested {
                    NestedFamily::new(f.rules.clone())?;
                }
            }
            Payload::Cubature(_) => {}
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Nested family stored in the file, if any.
    pub fn nested_family(&self) -> Result<NestedFamily> {
        match &self.payload {
            Payload::Family(f) => NestedFamily::new(f.rules.clone()),
            _ => Err(Error::Format("file does not hold a family".into())),
        }
    }
}

fn revalidate(r: &QuadratureRule) -> Result<QuadratureRule> {
    QuadratureRule::new(
        r.nodes.clone(),
        r.weights.clone(),
        r.degree,
        r.distribution.clone(),
        r.provenance,
    )
}

/// Seventeen significant digits.
pub fn full_precision(x: f64) -> String {
    format!("{x:.16e}")
}

fn comment_block(out: &mut Vec<u8>, metadata: &BTreeMap<String, Value>) {
    for (k, v) in metadata {
        let _ = writeln!(out, "# {k}: {v}");
    }
}

/// `node,weight` rows preceded by `#` metadata lines.
pub fn quadrature_csv(rule: &QuadratureRule, metadata: &BTreeMap<String, Value>) -> String {
    let mut out = Vec::new();
    comment_block(&mut out, metadata);
    let _ = writeln!(out, "node,weight");
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let _ = writeln!(out, "{},{}", full_precision(*x), full_precision(*w));
    }
    String::from_utf8(out).expect("CSV is ASCII")
}

/// `x1,...,xd,weight` rows preceded by `#` metadata lines.
pub fn cubature_csv(rule: &CubatureRule, metadata: &BTreeMap<String, Value>) -> String {
    let mut out = Vec::new();
    comment_block(&mut out, metadata);
    let header: Vec<String> = (1..=rule.dim()).map(|i| format!("x{i}")).collect();
    let _ = writeln!(out, "{},weight", header.join(","));
    for (p, w) in rule.nodes().zip(rule.weights()) {
        let coords: Vec<String> = p.iter().map(|&x| full_precision(x)).collect();
        let _ = writeln!(out, "{},{}", coords.join(","), full_precision(*w));
    }
    String::from_utf8(out).expect("CSV is ASCII")
}

/// Convergence table with columns `rule_name,N_nodes,degree,mean_error`.
pub fn study_csv(rows: &[StudyRow], metadata: &BTreeMap<String, Value>) -> String {
    let mut out = Vec::new();
    comment_block(&mut out, metadata);
    let _ = writeln!(out, "rule_name,N_nodes,degree,mean_error");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.rule_name,
            r.nodes,
            r.degree,
            full_precision(r.mean_error)
        );
    }
    String::from_utf8(out).expect("CSV is ASCII")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubature::tensor_rule;
    use crate::distributions::Distribution;
    use crate::quadrature::gauss_rule;
    use crate::reduce1d::{nested_family, ReductionCriterion};

    fn uniform() -> Distribution {
        Distribution::uniform(-1.0, 1.0).unwrap()
    }

    #[test]
    fn quadrature_round_trip_is_lossless() {
        let rule = gauss_rule(&Distribution::beta(4.0, 4.0).unwrap(), 7).unwrap();
        let file = RuleFile::quadrature(rule.clone()).with_meta("n", 7);
        let back = RuleFile::from_json(&file.to_json().unwrap()).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.payload, Payload::Quadrature(rule));
    }

    #[test]
    fn family_and_cubature_round_trip() {
        let g = gauss_rule(&uniform(), 5).unwrap();
        let fam = nested_family(&g, ReductionCriterion::Prior).unwrap();
        let file = RuleFile::family(&fam);
        let json = file.to_json().unwrap();
        assert!(json.contains("\"nested\": true"));
        let back = RuleFile::from_json(&json).unwrap();
        assert_eq!(back.nested_family().unwrap(), fam);

        let cub = RuleFile::cubature(tensor_rule(&[g.clone(), g]).unwrap());
        assert_eq!(RuleFile::from_json(&cub.to_json().unwrap()).unwrap(), cub);
    }

    #[test]
    fn wrong_schema_rejected() {
        let file = RuleFile::quadrature(gauss_rule(&uniform(), 2).unwrap());
        let json = file.to_json().unwrap().replace("cq-rule/1", "cq-rule/0");
        assert!(matches!(RuleFile::from_json(&json), Err(Error::Format(_))));
    }

    #[test]
    fn csv_uses_full_precision() {
        let rule = gauss_rule(&uniform(), 2).unwrap();
        let csv = quadrature_csv(&rule, &BTreeMap::new());
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("node,weight"));
        let first: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(first[0], rule.nodes[0]);
        assert_eq!(first[1], rule.weights[0]);
        assert_eq!(full_precision(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn cubature_csv_header() {
        let g = gauss_rule(&uniform(), 2).unwrap();
        let rule = tensor_rule(&[g.clone(), g.clone(), g]).unwrap();
        let mut meta = BTreeMap::new();
        meta.insert("command".to_string(), Value::from("cq quad"));
        let csv = cubature_csv(&rule, &meta);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# command: \"cq quad\"");
        assert_eq!(lines[1], "x1,x2,x3,weight");
        assert_eq!(lines.len(), 2 + 8);
    }
}
