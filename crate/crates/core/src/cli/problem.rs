//! The JSON problem file.
//!
//! ```json
//! {
//!   "graph": {
//!     "vertices": ["v1", "v2"],
//!     "internal_edges": [{"id": "i3", "from": "v1", "to": "v2", "length": 1.0}],
//!     "external_edges": [{"id": "e1", "at": "v1"}, {"id": "e2", "at": "v2"}]
//!   },
//!   "conditions": {
//!     "mode": "vertex",
//!     "vertices": {
//!       "v1": {"type": "delta_prime", "gamma": -1},
//!       "v2": {"type": "delta_prime", "gamma": -1}
//!     }
//!   }
//! }
//! ```
//!
//! In `"global"` mode the conditions carry full `"A"` and `"B"` matrices in
//! the boundary layout (external ends, then initial ends, then terminal
//! ends). Matrix entries are numbers or `[re, im]` pairs.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::de::{self, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer};

use crate::conditions::{assemble, BoundarySpec, VertexCondition};
use crate::graph::MetricGraph;
use crate::linalg::CMatrix;

#[derive(Debug, thiserror::Error)]
pub enum ProblemError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error(transparent)]
    Model(#[from] crate::Error),
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> ProblemError {
    ProblemError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub graph: GraphSpec,
    pub conditions: ConditionsSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub vertices: Vec<String>,
    #[serde(default)]
    pub internal_edges: Vec<InternalEdgeSpec>,
    #[serde(default)]
    pub external_edges: Vec<ExternalEdgeSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InternalEdgeSpec {
    pub id: String,
    pub from: String,
    pub to: String,
    pub length: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalEdgeSpec {
    pub id: String,
    pub at: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Vertex,
    Global,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionsSpec {
    pub mode: Mode,
    #[serde(default)]
    pub vertices: Option<BTreeMap<String, VertexSpec>>,
    #[serde(rename = "A", default)]
    pub a: Option<Matrix>,
    #[serde(rename = "B", default)]
    pub b: Option<Matrix>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexKind {
    Dirichlet,
    Neumann,
    Kirchhoff,
    Delta,
    DeltaPrime,
    Custom,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexSpec {
    #[serde(rename = "type")]
    pub kind: VertexKind,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(rename = "A", default)]
    pub a: Option<Matrix>,
    #[serde(rename = "B", default)]
    pub b: Option<Matrix>,
}

/// A complex entry written as a number or as `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entry(pub Complex64);

impl<'de> Deserialize<'de> for Entry {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct EntryVisitor;

        impl<'de> Visitor<'de> for EntryVisitor {
            type Value = Entry;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a [re, im] pair")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Entry, E> {
                Ok(Entry(Complex64::new(v, 0.0)))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Entry, E> {
                self.visit_f64(v as f64)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Entry, E> {
                self.visit_f64(v as f64)
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Entry, A::Error> {
                let re: f64 = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let im: f64 = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                Ok(Entry(Complex64::new(re, im)))
            }
        }

        deserializer.deserialize_any(EntryVisitor)
    }
}

pub type Matrix = Vec<Vec<Entry>>;

fn to_matrix(rows: &Matrix, n: usize, path: &str) -> Result<CMatrix, ProblemError> {
    if rows.len() != n {
        return Err(schema(path, format!("expected {n} rows, found {}", rows.len())));
    }
    let mut m = CMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(schema(format!("{path}[{i}]"), format!("expected {n} entries, found {}", row.len())));
        }
        for (j, e) in row.iter().enumerate() {
            if !(e.0.re.is_finite() && e.0.im.is_finite()) {
                return Err(schema(format!("{path}[{i}][{j}]"), "entry is not finite"));
            }
            m[(i, j)] = e.0;
        }
    }
    Ok(m)
}

/// A parsed problem: the graph and its boundary conditions.
#[derive(Clone, Debug)]
pub struct Problem {
    pub graph: MetricGraph,
    pub spec: BoundarySpec,
}

pub fn parse_str(text: &str) -> Result<Problem, ProblemError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ProblemFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(path, e.into_inner().to_string())
    })?;
    build(&file)
}

pub fn load(path: &Path) -> Result<Problem, ProblemError> {
    let text = std::fs::read_to_string(path).map_err(|source| ProblemError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_str(&text)
}

fn build(file: &ProblemFile) -> Result<Problem, ProblemError> {
    let gs = &file.graph;
    let internal: Vec<(&str, &str, &str, f64)> = gs
        .internal_edges
        .iter()
        .map(|e| (e.id.as_str(), e.from.as_str(), e.to.as_str(), e.length))
        .collect();
    let external: Vec<(&str, &str)> = gs.external_edges.iter().map(|e| (e.id.as_str(), e.at.as_str())).collect();
    let vertices: Vec<&str> = gs.vertices.iter().map(String::as_str).collect();
    let graph = MetricGraph::new(&vertices, &internal, &external)?;

    let cs = &file.conditions;
    let spec = match cs.mode {
        Mode::Vertex => {
            if cs.a.is_some() || cs.b.is_some() {
                return Err(schema("conditions", "A and B are only allowed in global mode"));
            }
            let entries = cs
                .vertices
                .as_ref()
                .ok_or_else(|| schema("conditions.vertices", "missing in vertex mode"))?;
            let mut conds = HashMap::new();
            for (name, vs) in entries {
                let path = format!("conditions.vertices.{name}");
                let degree = graph.vertex_index(name).map_or(0, |v| graph.degree(v));
                conds.insert(name.clone(), vertex_condition(vs, degree, &path)?);
            }
            assemble(&graph, &conds)?
        }
        Mode::Global => {
            if cs.vertices.is_some() {
                return Err(schema("conditions.vertices", "only allowed in vertex mode"));
            }
            let d = graph.boundary_layout().dim();
            let a = cs.a.as_ref().ok_or_else(|| schema("conditions.A", "missing in global mode"))?;
            let b = cs.b.as_ref().ok_or_else(|| schema("conditions.B", "missing in global mode"))?;
            BoundarySpec::new(
                to_matrix(a, d, "conditions.A")?,
                to_matrix(b, d, "conditions.B")?,
                graph.boundary_layout(),
            )?
        }
    };
    Ok(Problem { graph, spec })
}

fn vertex_condition(vs: &VertexSpec, degree: usize, path: &str) -> Result<VertexCondition, ProblemError> {
    let needs_gamma = matches!(vs.kind, VertexKind::Delta | VertexKind::DeltaPrime);
    if vs.gamma.is_some() && !needs_gamma {
        return Err(schema(format!("{path}.gamma"), "only delta and delta_prime take a coupling"));
    }
    if vs.kind != VertexKind::Custom && (vs.a.is_some() || vs.b.is_some()) {
        return Err(schema(path, "A and B are only allowed for type custom"));
    }
    let gamma = || vs.gamma.ok_or_else(|| schema(format!("{path}.gamma"), "required for this type"));
    Ok(match vs.kind {
        VertexKind::Dirichlet => VertexCondition::Dirichlet,
        VertexKind::Neumann => VertexCondition::Neumann,
        VertexKind::Kirchhoff => VertexCondition::Kirchhoff,
        VertexKind::Delta => VertexCondition::Delta(gamma()?),
        VertexKind::DeltaPrime => VertexCondition::DeltaPrime(gamma()?),
        VertexKind::Custom => {
            let a = vs.a.as_ref().ok_or_else(|| schema(format!("{path}.A"), "required for type custom"))?;
            let b = vs.b.as_ref().ok_or_else(|| schema(format!("{path}.B"), "required for type custom"))?;
            VertexCondition::Custom {
                a: to_matrix(a, degree, &format!("{path}.A"))?,
                b: to_matrix(b, degree, &format!("{path}.B"))?,
            }
        }
    })
}
