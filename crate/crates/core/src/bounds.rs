//! Two-sided bounds on the numbers `κ₁ ≥ … ≥ κ_n > 0`, where `−κ_i²` are the
//! negative eigenvalues of the Laplacian.
//!
//! Everything here is computed from three Hermitian matrices on `ran P⊥`:
//! `L(0,a)`, `L` and `R(0,a)`. Their positive eigenvalues in descending
//! order are `l_i`, `m_i` and `r_i`. The eigenvalue count equals the number
//! of positive eigenvalues of `L(0,a)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::CanonicalForm;
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::linalg::{self, CMatrix};
use crate::spectral::{l_of_kappa, r_of_kappa};
use crate::tolerance::Tolerances;
use crate::transcendental::{eta_with, nu_with, xi};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BoundsOptions {
    pub tol: Tolerances,
    /// Allow per-index work to run on the rayon pool. Output order is unaffected.
    pub parallel: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        x >= self.lower - slack && x <= self.upper + slack
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Bound {
    /// `η(m_i − 2/a_min, a_min)`, present only when `m_i > 2/a_min`.
    pub lower: Option<f64>,
    /// `ν(m_i, a_min)`.
    pub upper: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoarseBounds {
    /// `−ξ(m₁, a_min)²`.
    pub xi_bound: f64,
    /// The vertex-count bound, defined for `|E| + |I| ≥ 2`.
    pub kuchment: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub holds: bool,
    /// Largest principal cosine between the top eigenspace and the
    /// minimal-length coordinate subspace.
    pub cosine: f64,
    /// The corresponding principal angle in radians.
    pub angle: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    /// `η(l₁, a_min)` is attained by κ₁ (upper bound attained for κ₁).
    pub thm1: Certificate,
    /// `ν(m₁, a_min)` is attained by κ₁.
    pub thm2: Certificate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexBounds {
    pub index: usize,
    pub l: f64,
    pub m: f64,
    pub r: f64,
    pub thm1: Interval,
    pub thm2: Theorem2Bound,
    pub thm3: Interval,
    pub combined: Interval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub negative_count: usize,
    pub a_min: Option<f64>,
    /// Star graphs: every bound is attained.
    pub exact: bool,
    pub indices: Vec<IndexBounds>,
    pub coarse: Option<CoarseBounds>,
    pub certificates: Option<Certificates>,
    /// Bounds on the semigroup growth bound `κ₁²`.
    pub growth_bound: Option<Interval>,
    pub note: Option<String>,
}

pub const NON_NEGATIVE_NOTE: &str = "operator is non-negative";

/// Positive eigenvalues of a Hermitian matrix, descending, with the
/// threshold `tol.eig(‖H‖)`.
fn positive_eigenvalues(h: &CMatrix, tol: &Tolerances) -> Vec<f64> {
    let ev = linalg::hermitian_eigenvalues(h);
    let norm = ev.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let eps = tol.eig(norm);
    ev.into_iter().rev().filter(|&x| x > eps).collect()
}

/// `a_min`, or `+∞` for star graphs.
pub fn effective_a_min(g: &MetricGraph) -> f64 {
    g.edge_length_extrema().map_or(f64::INFINITY, |(lo, _)| lo)
}

/// `l_1 ≥ … ≥ l_n > 0`.
pub fn l_values(cf: &CanonicalForm, g: &MetricGraph, tol: &Tolerances) -> Result<Vec<f64>> {
    Ok(positive_eigenvalues(&l_of_kappa(cf, g, 0.0)?, tol))
}

fn top_n(values: Vec<f64>, n: usize, what: &str) -> Result<Vec<f64>> {
    if values.len() < n {
        return Err(Error::Consistency(format!(
            "{what} has {} positive eigenvalues but L(0,a) has {n}",
            values.len()
        )));
    }
    Ok(values.into_iter().take(n).collect())
}

/// `m_1 ≥ … ≥ m_n`: the n largest positive eigenvalues of `L`.
pub fn m_values(cf: &CanonicalForm, n: usize, tol: &Tolerances) -> Result<Vec<f64>> {
    top_n(positive_eigenvalues(&cf.l_reduced, tol), n, "L")
}

/// `r_1 ≥ … ≥ r_n`: the n largest positive eigenvalues of `R(0,a)`.
pub fn r_values(cf: &CanonicalForm, g: &MetricGraph, n: usize, tol: &Tolerances) -> Result<Vec<f64>> {
    top_n(positive_eigenvalues(&r_of_kappa(cf, g, 0.0)?, tol), n, "R(0,a)")
}

/// Number of negative eigenvalues, counted with multiplicity.
pub fn count_negative(cf: &CanonicalForm, g: &MetricGraph, tol: &Tolerances) -> Result<usize> {
    Ok(l_values(cf, g, tol)?.len())
}

fn map_indices<T: Send>(
    values: &[f64],
    parallel: bool,
    f: impl Fn(f64) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    if parallel {
        values.par_iter().map(|&x| f(x)).collect()
    } else {
        values.iter().map(|&x| f(x)).collect()
    }
}

/// `l_i ≤ κ_i ≤ η(l_i, a_min)`.
pub fn theorem1(cf: &CanonicalForm, g: &MetricGraph, opts: &BoundsOptions) -> Result<Vec<Interval>> {
    let a_min = effective_a_min(g);
    let ls = l_values(cf, g, &opts.tol)?;
    map_indices(&ls, opts.parallel, |l| {
        Ok(Interval::new(l, eta_with(l, a_min, &opts.tol)?.root))
    })
}

/// `κ_i ≤ ν(m_i, a_min)`, and `η(m_i − 2/a_min, a_min) ≤ κ_i` when `m_i > 2/a_min`.
pub fn theorem2(cf: &CanonicalForm, g: &MetricGraph, opts: &BoundsOptions) -> Result<Vec<Theorem2Bound>> {
    let a_min = effective_a_min(g);
    let n = count_negative(cf, g, &opts.tol)?;
    let ms = m_values(cf, n, &opts.tol)?;
    map_indices(&ms, opts.parallel, |m| {
        let upper = nu_with(m, a_min, &opts.tol)?.root;
        let shifted = m - 2.0 / a_min;
        let lower = if shifted > opts.tol.eig(m) {
            Some(eta_with(shifted, a_min, &opts.tol)?.root)
        } else {
            None
        };
        Ok(Theorem2Bound { lower, upper })
    })
}

/// `l_i ≤ κ_i ≤ r_i`.
pub fn theorem3(cf: &CanonicalForm, g: &MetricGraph, opts: &BoundsOptions) -> Result<Vec<Interval>> {
    let ls = l_values(cf, g, &opts.tol)?;
    let rs = r_values(cf, g, ls.len(), &opts.tol)?;
    Ok(ls.into_iter().zip(rs).map(|(l, r)| Interval::new(l, r)).collect())
}

/// The coarse lower bounds on the spectrum derived from `m₁`. `None` when
/// there is no negative spectrum or no internal edge.
pub fn coarse_bounds(cf: &CanonicalForm, g: &MetricGraph, tol: &Tolerances) -> Result<Option<CoarseBounds>> {
    let n = count_negative(cf, g, tol)?;
    let Some((a_min, _)) = g.edge_length_extrema() else {
        return Ok(None);
    };
    if n == 0 {
        return Ok(None);
    }
    let m1 = m_values(cf, n, tol)?[0];
    Ok(Some(coarse_from(m1, a_min, g.external_edges().len() + g.internal_edges().len())?))
}

/// Coarse bounds for given `m₁`, `a_min` and edge count `|E| + |I|`.
pub fn coarse_from(m1: f64, a_min: f64, edges: usize) -> Result<CoarseBounds> {
    let x = xi(m1, a_min)?;
    let kuchment = (edges >= 2).then(|| {
        let e = edges as f64;
        if m1 <= 1.0 / (2.0 * a_min) {
            -4.0 * m1 * e / a_min
        } else {
            -8.0 * m1 * m1 * e
        }
    });
    Ok(CoarseBounds { xi_bound: -x * x, kuchment })
}

/// Columns `(e_init(i) + sign·e_term(i))/√2` for the shortest internal edges.
fn shortest_edge_subspace(g: &MetricGraph, sign: f64) -> CMatrix {
    let layout = g.boundary_layout();
    let a_min = effective_a_min(g);
    let shortest: Vec<usize> = g
        .internal_edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| (e.length - a_min).abs() <= 1e-12 * a_min)
        .map(|(i, _)| i)
        .collect();
    let mut s = CMatrix::zeros(layout.dim(), shortest.len());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for (k, &i) in shortest.iter().enumerate() {
        s[(layout.initial_slot(i), k)] = linalg::c(h);
        s[(layout.terminal_slot(i), k)] = linalg::c(sign * h);
    }
    s
}

/// Top eigenspace of a reduced Hermitian matrix, embedded in 𝒦.
fn top_eigenspace(cf: &CanonicalForm, h: &CMatrix, tol: &Tolerances) -> CMatrix {
    let (values, vectors) = linalg::hermitian_eigen(h);
    let Some(&top) = values.last() else {
        return CMatrix::zeros(cf.dim(), 0);
    };
    let norm = values.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let cluster = tol.cert() * (1.0 + norm);
    let cols: Vec<usize> = (0..values.len()).filter(|&k| top - values[k] <= cluster).collect();
    &cf.basis * linalg::select_columns(&vectors, &cols)
}

fn certificate(space: &CMatrix, eig: &CMatrix, tol: &Tolerances) -> Certificate {
    let cosine = linalg::principal_cosines(space, eig).first().copied().unwrap_or(0.0);
    Certificate {
        holds: cosine > 1.0 - tol.cert(),
        cosine,
        angle: cosine.clamp(-1.0, 1.0).acos(),
    }
}

/// Optimality certificates for `η(l₁, a_min)` and `ν(m₁, a_min)`. `None`
/// when there is no negative spectrum or no internal edge.
pub fn optimality_certificates(
    cf: &CanonicalForm,
    g: &MetricGraph,
    tol: &Tolerances,
) -> Result<Option<Certificates>> {
    if g.internal_edges().is_empty() || count_negative(cf, g, tol)? == 0 {
        return Ok(None);
    }
    let l0 = l_of_kappa(cf, g, 0.0)?;
    let thm1 = certificate(&shortest_edge_subspace(g, -1.0), &top_eigenspace(cf, &l0, tol), tol);
    let thm2 = certificate(
        &shortest_edge_subspace(g, 1.0),
        &top_eigenspace(cf, &cf.l_reduced, tol),
        tol,
    );
    Ok(Some(Certificates { thm1, thm2 }))
}

/// All bounds, aggregated per index.
pub fn combined(cf: &CanonicalForm, g: &MetricGraph, opts: &BoundsOptions) -> Result<BoundsReport> {
    let tol = &opts.tol;
    let ls = l_values(cf, g, tol)?;
    let n = ls.len();
    let a_min = g.edge_length_extrema().map(|(lo, _)| lo);
    let exact = g.internal_edges().is_empty();
    if n == 0 {
        return Ok(BoundsReport {
            negative_count: 0,
            a_min,
            exact,
            indices: Vec::new(),
            coarse: None,
            certificates: None,
            growth_bound: None,
            note: Some(NON_NEGATIVE_NOTE.to_owned()),
        });
    }
    let thm1 = theorem1(cf, g, opts)?;
    let thm2 = theorem2(cf, g, opts)?;
    let thm3 = theorem3(cf, g, opts)?;
    let ms = m_values(cf, n, tol)?;
    let mut indices = Vec::with_capacity(n);
    for i in 0..n {
        let lower = thm2[i].lower.map_or(ls[i], |x| x.max(ls[i]));
        let upper = thm1[i].upper.min(thm2[i].upper).min(thm3[i].upper);
        let mut combined = Interval::new(lower, upper);
        if lower > upper {
            // both endpoints come from independent root solves of the same value
            if lower - upper > 1e-9 * (1.0 + upper) {
                return Err(Error::Consistency(format!(
                    "index {}: combined lower bound {lower} exceeds upper bound {upper}",
                    i + 1
                )));
            }
            let mid = 0.5 * (lower + upper);
            combined = Interval::new(mid, mid);
        }
        indices.push(IndexBounds {
            index: i + 1,
            l: ls[i],
            m: ms[i],
            r: thm3[i].upper,
            thm1: thm1[i],
            thm2: thm2[i],
            thm3: thm3[i],
            combined,
        });
    }
    let first = indices[0].combined;
    Ok(BoundsReport {
        negative_count: n,
        a_min,
        exact,
        coarse: coarse_bounds(cf, g, tol)?,
        certificates: optimality_certificates(cf, g, tol)?,
        growth_bound: Some(Interval::new(first.lower * first.lower, first.upper * first.upper)),
        indices,
        note: None,
    })
}
