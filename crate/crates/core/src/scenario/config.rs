//! JSON scenario documents.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chart::{Chart, TensorField};
use crate::error::{Error, Result};
use crate::maps::SmoothMapSpec;
use crate::metric::MetricField;
use crate::structures::{ParaHermitianStructure, ParacontactStructure};

use super::{PartialOptions, Scenario, ScenarioStructure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub name: String,
    pub charts: BTreeMap<String, ChartDoc>,
    #[serde(default)]
    pub metrics: BTreeMap<String, MetricDoc>,
    pub structures: BTreeMap<String, StructureDoc>,
    #[serde(default)]
    pub map: Option<MapDoc>,
    #[serde(default)]
    pub domains: BTreeMap<String, Vec<[f64; 2]>>,
    #[serde(default)]
    pub suite: Option<Vec<String>>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub expected_fail: Vec<String>,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartDoc {
    pub coords: Vec<String>,
    pub domain: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricDoc {
    pub chart: String,
    /// Rows of `g_ij` as expressions.
    pub components: Vec<Vec<String>>,
    pub signature: [usize; 2],
}

/// Structure tensors are given as rows: row `k` holds the components
/// `T^k_0 … T^k_{n−1}`, so column `j` is the image of `∂_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StructureDoc {
    Paracontact {
        chart: String,
        phi: Vec<Vec<String>>,
        xi: Vec<String>,
        eta: Vec<String>,
        metric: String,
    },
    ParaHermitian {
        chart: String,
        j: Vec<Vec<String>>,
        metric: String,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Paraholomorphy {
    #[default]
    Direct,
    Anti,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDoc {
    #[serde(default = "default_map_name")]
    pub name: String,
    pub source: String,
    pub target: String,
    pub components: Vec<String>,
    #[serde(default)]
    pub paraholomorphy: Paraholomorphy,
}

fn default_map_name() -> String {
    "map".into()
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn square_rows<'a>(rows: &'a [Vec<String>], n: usize, path: &str) -> Result<Vec<&'a str>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        let shape: Vec<usize> = rows.iter().map(Vec::len).collect();
        return Err(schema(path, format!("expected {n} rows of {n} expressions, got row lengths {shape:?}")));
    }
    Ok(rows.iter().flatten().map(String::as_str).collect())
}

fn field(chart: &Arc<Chart>, upper: u8, lower: u8, texts: &[&str], path: &str) -> Result<TensorField> {
    let n = chart.dim();
    let comps = texts
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let sub = if upper + lower == 2 {
                format!("{path}[{}][{}]", k / n, k % n)
            } else {
                format!("{path}[{k}]")
            };
            chart.parse(t).map_err(|e| e.at_path(sub))
        })
        .collect::<Result<Vec<_>>>()?;
    TensorField::new(chart, upper, lower, comps).map_err(|e| schema(path, e.to_string()))
}

fn vector_texts<'a>(v: &'a [String], n: usize, path: &str) -> Result<Vec<&'a str>> {
    if v.len() != n {
        return Err(schema(path, format!("expected {n} expressions, got {}", v.len())));
    }
    Ok(v.iter().map(String::as_str).collect())
}

impl ConfigDocument {
    fn charts(&self) -> Result<BTreeMap<String, Arc<Chart>>> {
        self.charts
            .iter()
            .map(|(name, c)| {
                let domain = c.domain.iter().map(|&[a, b]| (a, b)).collect();
                Chart::from_parts(name.clone(), c.coords.clone(), domain)
                    .map(|chart| (name.clone(), chart))
                    .map_err(|e| schema(format!("charts.{name}"), e.to_string()))
            })
            .collect()
    }

    fn metric(&self, charts: &BTreeMap<String, Arc<Chart>>, name: &str, chart: &Arc<Chart>, path: &str) -> Result<MetricField> {
        let doc = self
            .metrics
            .get(name)
            .ok_or_else(|| schema(path, format!("no metric named `{name}`")))?;
        let mpath = format!("metrics.{name}");
        let mchart = charts
            .get(&doc.chart)
            .ok_or_else(|| schema(format!("{mpath}.chart"), format!("no chart named `{}`", doc.chart)))?;
        if mchart != chart {
            return Err(schema(path, format!("metric `{name}` lives on chart `{}`", doc.chart)));
        }
        let texts = square_rows(&doc.components, chart.dim(), &format!("{mpath}.components"))?;
        let f = field(chart, 0, 2, &texts, &format!("{mpath}.components"))?;
        MetricField::new(f, (doc.signature[0], doc.signature[1])).map_err(|e| schema(mpath, e.to_string()))
    }

    /// Builds the scenario, reporting the first problem with its path.
    pub fn build(&self) -> Result<Scenario> {
        let charts = self.charts()?;
        let chart = |name: &str, path: &str| {
            charts
                .get(name)
                .cloned()
                .ok_or_else(|| schema(path, format!("no chart named `{name}`")))
        };
        let mut structures = Vec::new();
        for (label, doc) in &self.structures {
            let path = format!("structures.{label}");
            let s = match doc {
                StructureDoc::Paracontact {
                    chart: c,
                    phi,
                    xi,
                    eta,
                    metric,
                } => {
                    let ch = chart(c, &format!("{path}.chart"))?;
                    let n = ch.dim();
                    let phi = field(&ch, 1, 1, &square_rows(phi, n, &format!("{path}.phi"))?, &format!("{path}.phi"))?;
                    let xi = field(&ch, 1, 0, &vector_texts(xi, n, &format!("{path}.xi"))?, &format!("{path}.xi"))?;
                    let eta = field(&ch, 0, 1, &vector_texts(eta, n, &format!("{path}.eta"))?, &format!("{path}.eta"))?;
                    let g = self.metric(&charts, metric, &ch, &format!("{path}.metric"))?;
                    ScenarioStructure::Contact(
                        ParacontactStructure::new(label.clone(), phi, xi, eta, g).map_err(|e| schema(&path, e.to_string()))?,
                    )
                }
                StructureDoc::ParaHermitian { chart: c, j, metric } => {
                    let ch = chart(c, &format!("{path}.chart"))?;
                    let n = ch.dim();
                    let j = field(&ch, 1, 1, &square_rows(j, n, &format!("{path}.j"))?, &format!("{path}.j"))?;
                    let g = self.metric(&charts, metric, &ch, &format!("{path}.metric"))?;
                    ScenarioStructure::Hermitian(
                        ParaHermitianStructure::new(label.clone(), j, g).map_err(|e| schema(&path, e.to_string()))?,
                    )
                }
            };
            structures.push(s);
        }
        let mut sc = Scenario::new(self.name.clone(), structures)?;
        if let Some(m) = &self.map {
            let find = |label: &str, role: &str| {
                sc.structure(label)
                    .map(|s| s.chart().clone())
                    .ok_or_else(|| schema(format!("map.{role}"), format!("no structure named `{label}`")))
            };
            let (src, tgt) = (find(&m.source, "source")?, find(&m.target, "target")?);
            if m.components.len() != tgt.dim() {
                return Err(schema(
                    "map.components",
                    format!("expected {} expressions, got {}", tgt.dim(), m.components.len()),
                ));
            }
            let texts: Vec<&str> = m.components.iter().map(String::as_str).collect();
            let f = SmoothMapSpec::parse(m.name.clone(), &src, &tgt, &texts)?;
            let sign = match m.paraholomorphy {
                Paraholomorphy::Direct => Some(1),
                Paraholomorphy::Anti => Some(-1),
                Paraholomorphy::None => None,
            };
            sc = sc.with_map(f, &m.source, &m.target, sign)?;
        }
        for (name, dom) in &self.domains {
            sc = sc.with_domain(name, dom.iter().map(|&[a, b]| (a, b)).collect())?;
        }
        sc.defaults = PartialOptions {
            checks: self.suite.clone(),
            samples: self.samples,
            seed: self.seed,
            tol: self.tol,
        };
        sc.expected_fail.extend(self.expected_fail.iter().cloned());
        sc.notes.extend(self.notes.iter().cloned());
        Ok(sc)
    }
}

pub fn parse_config(text: &str) -> Result<Scenario> {
    let doc: ConfigDocument = serde_json::from_str(text).map_err(|e| schema("$", e.to_string()))?;
    doc.build()
}

pub fn load_config(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLAT: &str = r#"{
        "name": "flat",
        "charts": {"R3": {"coords": ["x", "y", "z"], "domain": [[-1, 1], [-1, 1], [-1, 1]]}},
        "metrics": {"g": {"chart": "R3", "components": [["1","0","0"],["0","-1","0"],["0","0","1"]], "signature": [2, 1]}},
        "structures": {"S": {"kind": "paracontact", "chart": "R3",
            "phi": [["0","1","0"],["1","0","0"],["0","0","0"]], "xi": ["0","0","1"], "eta": ["0","0","1"], "metric": "g"}},
        "samples": 8, "seed": 3
    }"#;

    #[test]
    fn parses_flat_structure() {
        let sc = parse_config(FLAT).unwrap();
        assert_eq!(sc.structures.len(), 1);
        assert_eq!(sc.defaults.samples, Some(8));
    }

    #[test]
    fn wrong_phi_shape_is_schema_error() {
        let bad = FLAT.replace(r#"[["0","1","0"],["1","0","0"],["0","0","0"]]"#, r#"[["0","1"],["1","0"]]"#);
        match parse_config(&bad) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "structures.S.phi"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn expression_error_carries_location() {
        let bad = FLAT.replace(r#""eta": ["0","0","1"]"#, r#""eta": ["0","0","2*/x"]"#);
        match parse_config(&bad) {
            Err(Error::Expression { path, source }) => {
                assert_eq!(path, "structures.S.eta[2]");
                assert!(matches!(*source, Error::Syntax { offset: 2, .. }));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let bad = FLAT.replace(r#""samples": 8"#, r#""sample": 8"#);
        assert!(matches!(parse_config(&bad), Err(Error::Schema { .. })));
    }
}
