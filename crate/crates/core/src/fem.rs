//! Piecewise-linear finite elements for the form `‖u′‖² − ⟨L u̲, u̲⟩` on
//! `{u : P u̲ = 0}`, used to cross-check the other modules.
//!
//! Each edge carries a uniform mesh of hat functions; external edges are cut
//! at length `T` with a homogeneous Dirichlet far end. Boundary node values
//! are parametrized by `u̲ = W c` with `W` an orthonormal basis of `ran P⊥`,
//! which enforces the constraint exactly.
//!
//! The stiffness and mass matrices are never assembled globally. For a shift
//! σ, eliminating the interior nodes of every edge leaves a Schur complement
//! on `c`; by Sylvester's law of inertia the number of eigenvalues below σ is
//! the number of negative pivots in the edge chains plus the number of
//! negative eigenvalues of that Schur complement. Eigenvalues follow by
//! bisection on σ.

use serde::{Deserialize, Serialize};

use crate::bounds::BoundsReport;
use crate::conditions::CanonicalForm;
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::linalg::{self, c, CMatrix};
use crate::nonlinear::poincare_criterion;
use crate::tolerance::Tolerances;

pub const MAX_NODES: usize = 1_000_000;
pub const MIN_NODES_PER_UNIT: usize = 10;
const BISECTION_STEPS: usize = 200;
/// Discrete eigenvalues above this are treated as non-negative; zero modes
/// come out at roundoff level.
pub const NEGATIVE_THRESHOLD: f64 = -1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
enum ChainEnds {
    Internal { initial: usize, terminal: usize },
    External { slot: usize },
}

/// One edge: `elements` uniform elements of width `h`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Chain {
    h: f64,
    elements: usize,
    ends: ChainEnds,
}

impl Chain {
    fn interior(&self) -> usize {
        self.elements - 1
    }
}

#[derive(Clone, Debug)]
pub struct Discretization {
    pub nodes_per_unit: usize,
    pub truncation: Option<f64>,
    chains: Vec<Chain>,
    basis: CMatrix,
    l_reduced: CMatrix,
}

/// Shifted element data of `K − σM` for hat functions of width `h`.
struct Shifted {
    /// Interior diagonal.
    diag: f64,
    /// Off-diagonal.
    off: f64,
    /// Diagonal at an edge endpoint.
    end: f64,
}

impl Shifted {
    fn new(h: f64, sigma: f64) -> Self {
        Self {
            diag: 2.0 / h - sigma * 2.0 * h / 3.0,
            off: -1.0 / h - sigma * h / 6.0,
            end: 1.0 / h - sigma * h / 3.0,
        }
    }
}

/// Eliminates the `m` interior nodes of a constant tridiagonal chain.
/// Returns the negative pivot count, `(T⁻¹)₁₁ = (T⁻¹)ₘₘ` and `(T⁻¹)₁ₘ`.
fn eliminate_chain(s: &Shifted, m: usize) -> (usize, f64, f64) {
    let tiny = f64::EPSILON * (s.diag.abs() + s.off.abs());
    let mut negatives = 0;
    let mut pivot = s.diag;
    // log|(T⁻¹)₁ₘ · p_m| and its sign, accumulated over the first m−1 pivots
    let mut log_prod = 0.0;
    let mut sign = 1.0;
    for k in 0..m {
        if k > 0 {
            let ratio = -s.off / pivot;
            log_prod += ratio.abs().ln();
            sign *= ratio.signum();
            pivot = s.diag - s.off * s.off / pivot;
        }
        if pivot == 0.0 {
            pivot = tiny;
        }
        if pivot < 0.0 {
            negatives += 1;
        }
    }
    let corner = 1.0 / pivot;
    let far = sign * corner.signum() * (log_prod + corner.abs().ln()).exp();
    (negatives, corner, far)
}

impl Discretization {
    pub fn new(g: &MetricGraph, cf: &CanonicalForm, nodes_per_unit: usize, truncation: Option<f64>) -> Result<Self> {
        if nodes_per_unit < MIN_NODES_PER_UNIT {
            return Err(Error::InvalidArgument(format!(
                "at least {MIN_NODES_PER_UNIT} nodes per unit length required, got {nodes_per_unit}"
            )));
        }
        let layout = g.boundary_layout();
        if cf.layout != layout {
            return Err(Error::InvalidArgument("canonical form does not belong to this graph".into()));
        }
        let truncation = match (g.is_compact(), truncation) {
            (true, None) => None,
            (true, Some(_)) => {
                return Err(Error::InvalidArgument("truncation length given for a compact graph".into()));
            }
            (false, Some(t)) if t > 0.0 && t.is_finite() => Some(t),
            (false, Some(t)) => {
                return Err(Error::InvalidArgument(format!("truncation length must be positive, got {t}")));
            }
            (false, None) => {
                return Err(Error::InvalidArgument("external edges need a truncation length".into()));
            }
        };
        let elements_for = |len: f64| ((nodes_per_unit as f64 * len).ceil() as usize).max(2);
        let mut chains = Vec::new();
        for e in 0..g.external_edges().len() {
            let t = truncation.expect("checked above");
            let elements = elements_for(t);
            chains.push(Chain {
                h: t / elements as f64,
                elements,
                ends: ChainEnds::External {
                    slot: layout.external_slot(e),
                },
            });
        }
        for (i, edge) in g.internal_edges().iter().enumerate() {
            let elements = elements_for(edge.length);
            chains.push(Chain {
                h: edge.length / elements as f64,
                elements,
                ends: ChainEnds::Internal {
                    initial: layout.initial_slot(i),
                    terminal: layout.terminal_slot(i),
                },
            });
        }
        let disc = Self {
            nodes_per_unit,
            truncation,
            chains,
            basis: cf.basis.clone(),
            l_reduced: cf.l_reduced.clone(),
        };
        let nodes = disc.nodes();
        if nodes > MAX_NODES {
            return Err(Error::InvalidArgument(format!(
                "discretization needs {nodes} nodes, above the limit of {MAX_NODES}"
            )));
        }
        Ok(disc)
    }

    /// Dimension of the constrained space.
    pub fn dim(&self) -> usize {
        self.chains.iter().map(Chain::interior).sum::<usize>() + self.basis.ncols()
    }

    /// Mesh nodes including boundary and Dirichlet far-end nodes.
    pub fn nodes(&self) -> usize {
        self.chains.iter().map(|ch| ch.elements + 1).sum()
    }

    /// Number of eigenvalues of the discrete pencil strictly below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        let r = self.basis.ncols();
        let mut schur = -self.l_reduced.clone();
        let mut negatives = 0;
        for ch in &self.chains {
            let s = Shifted::new(ch.h, sigma);
            let (neg, corner, far) = eliminate_chain(&s, ch.interior());
            negatives += neg;
            let w2 = s.off * s.off;
            let diag = s.end - w2 * corner;
            match ch.ends {
                ChainEnds::External { slot } => {
                    let row = self.basis.row(slot);
                    schur += row.adjoint() * row * c(diag);
                }
                ChainEnds::Internal { initial, terminal } => {
                    let cross = -w2 * far;
                    let rows = CMatrix::from_rows(&[self.basis.row(initial).into_owned(), self.basis.row(terminal).into_owned()]);
                    let local = CMatrix::from_row_slice(2, 2, &[c(diag), c(cross), c(cross), c(diag)]);
                    schur += rows.adjoint() * local * rows;
                }
            }
        }
        if r > 0 {
            negatives += linalg::hermitian_eigenvalues(&linalg::symmetrize(&schur))
                .iter()
                .filter(|&&x| x < 0.0)
                .count();
        }
        negatives
    }

    /// `(K − σM)` eigenvalue `j` (1-based, ascending) by bisection on the count.
    fn eigenvalue(&self, j: usize) -> f64 {
        let mut lo = -1.0;
        while self.count_below(lo) >= j {
            lo *= 2.0;
        }
        let mut hi = 1.0f64.max(lo + 1.0);
        while self.count_below(hi) < j {
            hi *= 2.0;
        }
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-14 * hi.abs().max(lo.abs()).max(1.0) {
                break;
            }
            if self.count_below(mid) >= j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// The lowest `k` eigenvalues, ascending.
    pub fn spectrum(&self, k: usize) -> Result<Vec<f64>> {
        if k > self.dim() {
            return Err(Error::InvalidArgument(format!(
                "{k} eigenvalues requested from a {}-dimensional space",
                self.dim()
            )));
        }
        Ok((1..=k).map(|j| self.eigenvalue(j)).collect())
    }

    /// All eigenvalues below [`NEGATIVE_THRESHOLD`], ascending.
    pub fn negative_eigenvalues(&self) -> Vec<f64> {
        let n = self.count_below(NEGATIVE_THRESHOLD);
        (1..=n).map(|j| self.eigenvalue(j)).collect()
    }
}

pub fn discretize(g: &MetricGraph, cf: &CanonicalForm, n: usize, truncation: Option<f64>) -> Result<Discretization> {
    Discretization::new(g, cf, n, truncation)
}

pub fn fem_spectrum(disc: &Discretization, k: usize) -> Result<Vec<f64>> {
    disc.spectrum(k)
}

/// `max(20/κ_est, 10·a_max, 1)` with `κ_est` the combined lower bound on the
/// smallest `κ` (1 when the operator is non-negative). `None` for compact graphs.
pub fn default_truncation(g: &MetricGraph, report: &BoundsReport) -> Option<f64> {
    if g.is_compact() {
        return None;
    }
    let kappa_est = report
        .indices
        .last()
        .map(|ix| ix.combined.lower)
        .filter(|&k| k > 0.0)
        .unwrap_or(1.0);
    let a_max = g.edge_length_extrema().map_or(0.0, |(_, hi)| hi);
    let a_max = if a_max.is_finite() { a_max } else { 0.0 };
    Some((20.0 / kappa_est).max(10.0 * a_max).max(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareConstant {
    pub constant: f64,
    pub lowest_eigenvalue: f64,
    pub nodes_per_unit: usize,
}

/// `C = √λ₁` of the Laplacian with conditions `P u̲ = 0, P⊥ u̲′ = 0` on a
/// compact graph.
pub fn poincare_constant(g: &MetricGraph, p: &CMatrix, n: usize, tol: &Tolerances) -> Result<PoincareConstant> {
    let criterion = poincare_criterion(p, g, tol)?;
    if !criterion.holds {
        return Err(Error::InvalidArgument(format!(
            "criterion fails, defect {} (zero mode present)",
            criterion.defect
        )));
    }
    let layout = g.boundary_layout();
    let d = layout.dim();
    let cf = CanonicalForm::from_parts(p.clone(), CMatrix::zeros(d, d), layout)?;
    let disc = Discretization::new(g, &cf, n, None)?;
    let lowest = disc.eigenvalue(1);
    if lowest <= 0.0 {
        return Err(Error::Numerical(format!("lowest discrete eigenvalue {lowest:e} is not positive")));
    }
    Ok(PoincareConstant {
        constant: lowest.sqrt(),
        lowest_eigenvalue: lowest,
        nodes_per_unit: n,
    })
}
