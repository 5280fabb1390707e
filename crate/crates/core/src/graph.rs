//! Finite metric graphs and the boundary-space index layout.
//!
//! Every matrix in this crate acts on the boundary space of dimension
//! `d = |E| + 2|I|`, ordered as external slots, then the initial ends of the
//! internal edges, then their terminal ends. Derivative traces use the
//! convention `ψ'(0)` at initial ends and `-ψ'(a)` at terminal ends, so every
//! derivative slot points away from its vertex.

use std::collections::HashMap;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct InternalEdge {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExternalEdge {
    pub id: String,
    pub at: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricGraph {
    vertices: Vec<String>,
    internal: Vec<InternalEdge>,
    external: Vec<ExternalEdge>,
}

/// Which end of an edge a boundary slot belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeEnd {
    External(usize),
    Initial(usize),
    Terminal(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryLayout {
    pub n_external: usize,
    pub n_internal: usize,
}

impl BoundaryLayout {
    pub fn dim(&self) -> usize {
        self.n_external + 2 * self.n_internal
    }

    pub fn external_slot(&self, e: usize) -> usize {
        debug_assert!(e < self.n_external);
        e
    }

    pub fn initial_slot(&self, i: usize) -> usize {
        debug_assert!(i < self.n_internal);
        self.n_external + i
    }

    pub fn terminal_slot(&self, i: usize) -> usize {
        debug_assert!(i < self.n_internal);
        self.n_external + self.n_internal + i
    }

    pub fn slot(&self, end: EdgeEnd) -> usize {
        match end {
            EdgeEnd::External(e) => self.external_slot(e),
            EdgeEnd::Initial(i) => self.initial_slot(i),
            EdgeEnd::Terminal(i) => self.terminal_slot(i),
        }
    }

    /// Inverse of [`BoundaryLayout::slot`].
    pub fn end_of(&self, slot: usize) -> EdgeEnd {
        assert!(slot < self.dim(), "slot {slot} out of range");
        if slot < self.n_external {
            EdgeEnd::External(slot)
        } else if slot < self.n_external + self.n_internal {
            EdgeEnd::Initial(slot - self.n_external)
        } else {
            EdgeEnd::Terminal(slot - self.n_external - self.n_internal)
        }
    }
}

impl MetricGraph {
    /// Builds a graph from vertex names and edges given by vertex name.
    ///
    /// Internal edges are `(id, initial, terminal, length)`, external edges
    /// `(id, vertex)`. Input order fixes the boundary layout.
    pub fn new<S: AsRef<str>>(
        vertices: &[S],
        internal: &[(S, S, S, f64)],
        external: &[(S, S)],
    ) -> Result<Self> {
        let vertices: Vec<String> = vertices.iter().map(|v| v.as_ref().to_owned()).collect();
        let mut index = HashMap::new();
        for (k, v) in vertices.iter().enumerate() {
            if index.insert(v.as_str(), k).is_some() {
                return Err(Error::Graph(format!("duplicate vertex '{v}'")));
            }
        }
        let lookup = |name: &str, edge: &str| {
            index.get(name).copied().ok_or_else(|| {
                Error::Graph(format!("edge '{edge}' references unknown vertex '{name}'"))
            })
        };
        let mut ids = std::collections::HashSet::new();
        let mut int_edges = Vec::with_capacity(internal.len());
        for (id, from, to, length) in internal {
            let id = id.as_ref();
            if !ids.insert(id.to_owned()) {
                return Err(Error::Graph(format!("duplicate edge id '{id}'")));
            }
            if !(length.is_finite() && *length > 0.0) {
                return Err(Error::Graph(format!(
                    "edge '{id}' has length {length}; lengths must be positive and finite"
                )));
            }
            int_edges.push(InternalEdge {
                id: id.to_owned(),
                from: lookup(from.as_ref(), id)?,
                to: lookup(to.as_ref(), id)?,
                length: *length,
            });
        }
        let mut ext_edges = Vec::with_capacity(external.len());
        for (id, at) in external {
            let id = id.as_ref();
            if !ids.insert(id.to_owned()) {
                return Err(Error::Graph(format!("duplicate edge id '{id}'")));
            }
            ext_edges.push(ExternalEdge {
                id: id.to_owned(),
                at: lookup(at.as_ref(), id)?,
            });
        }
        if int_edges.is_empty() && ext_edges.is_empty() {
            return Err(Error::Graph("a metric graph needs at least one edge".into()));
        }
        Ok(Self {
            vertices,
            internal: int_edges,
            external: ext_edges,
        })
    }

    /// The interval `[0, a]` with vertices `v0` (initial) and `v1` (terminal).
    pub fn interval(a: f64) -> Result<Self> {
        Self::new(&["v0", "v1"], &[("i0", "v0", "v1", a)], &[])
    }

    /// A star with `k` half-lines attached to vertex `v0`.
    pub fn star(k: usize) -> Result<Self> {
        let ids: Vec<String> = (0..k).map(|e| format!("e{e}")).collect();
        let ext: Vec<(&str, &str)> = ids.iter().map(|id| (id.as_str(), "v0")).collect();
        Self::new::<&str>(&["v0"], &[], &ext)
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn internal_edges(&self) -> &[InternalEdge] {
        &self.internal
    }

    pub fn external_edges(&self) -> &[ExternalEdge] {
        &self.external
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.internal.iter().map(|e| e.length).collect()
    }

    pub fn is_compact(&self) -> bool {
        self.external.is_empty()
    }

    pub fn boundary_layout(&self) -> BoundaryLayout {
        BoundaryLayout {
            n_external: self.external.len(),
            n_internal: self.internal.len(),
        }
    }

    /// `(a_min, a_max)` over internal edges, `None` for star graphs.
    pub fn edge_length_extrema(&self) -> Option<(f64, f64)> {
        let mut it = self.internal.iter().map(|e| e.length);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), a| (lo.min(a), hi.max(a))))
    }

    /// Boundary slots incident to vertex `v`: external edges first, then
    /// internal edge ends, each group in input order. A loop contributes its
    /// initial end before its terminal end.
    pub fn vertex_slots(&self, v: usize) -> Vec<usize> {
        let layout = self.boundary_layout();
        let mut slots: Vec<usize> = self
            .external
            .iter()
            .enumerate()
            .filter(|(_, e)| e.at == v)
            .map(|(k, _)| layout.external_slot(k))
            .collect();
        for (k, e) in self.internal.iter().enumerate() {
            if e.from == v {
                slots.push(layout.initial_slot(k));
            }
            if e.to == v {
                slots.push(layout.terminal_slot(k));
            }
        }
        slots
    }

    pub fn degree(&self, v: usize) -> usize {
        self.vertex_slots(v).len()
    }
}
