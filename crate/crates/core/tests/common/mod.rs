//! Problem builders and random generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use qgbounds::conditions::{assemble, canonical_form, BoundarySpec, CanonicalForm, VertexCondition};
use qgbounds::graph::MetricGraph;
use qgbounds::linalg::{self, CMatrix};
use qgbounds::spectral::m_matrix;
use qgbounds::tolerance::Tolerances;

pub fn canonical(g: &MetricGraph, pairs: &[(&str, VertexCondition)]) -> CanonicalForm {
    let conds: HashMap<String, VertexCondition> = pairs.iter().map(|(v, c)| (v.to_string(), c.clone())).collect();
    canonical_form(&assemble(g, &conds).unwrap(), &Tolerances::default()).unwrap()
}

/// Two half-lines joined by an edge of length `a`, δ′ coupling `gamma` at both ends.
pub fn dumbbell(gamma: f64, a: f64) -> (MetricGraph, CanonicalForm) {
    let g = MetricGraph::new(&["v1", "v2"], &[("i3", "v1", "v2", a)], &[("e1", "v1"), ("e2", "v2")]).unwrap();
    let cf = canonical(&g, &[("v1", VertexCondition::DeltaPrime(gamma)), ("v2", VertexCondition::DeltaPrime(gamma))]);
    (g, cf)
}

/// `[0, a]` with `P = 0` and `L = (c/2)·[[1, −1], [−1, 1]]`.
pub fn lc_interval(c: f64, a: f64) -> (MetricGraph, CanonicalForm) {
    let g = MetricGraph::interval(a).unwrap();
    let l = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]) * (c / 2.0);
    let cf = CanonicalForm::from_parts(CMatrix::zeros(2, 2), linalg::to_complex(&l), g.boundary_layout()).unwrap();
    (g, cf)
}

/// `[0, a]` with `P = 0` and `L = 1`.
pub fn identity_interval(a: f64) -> (MetricGraph, CanonicalForm) {
    let g = MetricGraph::interval(a).unwrap();
    let cf = CanonicalForm::from_parts(CMatrix::zeros(2, 2), CMatrix::identity(2, 2), g.boundary_layout()).unwrap();
    (g, cf)
}

/// Three unit edges from a Kirchhoff center; one Dirichlet leaf, two Kirchhoff leaves.
pub fn y_graph() -> (MetricGraph, CanonicalForm) {
    let g = MetricGraph::new(
        &["c", "l1", "l2", "l3"],
        &[("x", "c", "l1", 1.0), ("y", "c", "l2", 1.0), ("z", "c", "l3", 1.0)],
        &[],
    )
    .unwrap();
    let cf = canonical(
        &g,
        &[
            ("c", VertexCondition::Kirchhoff),
            ("l1", VertexCondition::Dirichlet),
            ("l2", VertexCondition::Kirchhoff),
            ("l3", VertexCondition::Kirchhoff),
        ],
    );
    (g, cf)
}

fn random_complex<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize, scale: f64) -> CMatrix {
    let m = random_complex(rng, n, n);
    linalg::symmetrize(&m).scale(scale)
}

pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    random_complex(rng, n, n).qr().q()
}

/// Random graph with boundary dimension at most `max_dim` and internal
/// lengths drawn from `lengths`.
pub fn random_graph<R: Rng>(rng: &mut R, max_dim: usize, lengths: (f64, f64)) -> MetricGraph {
    loop {
        let n_vertices = rng.random_range(1..=4);
        let n_internal = rng.random_range(0..=max_dim / 2);
        let n_external = rng.random_range(0..=max_dim - 2 * n_internal);
        if n_internal + n_external == 0 {
            continue;
        }
        let names: Vec<String> = (0..n_vertices).map(|v| format!("v{v}")).collect();
        let mut pick = || names[rng.random_range(0..n_vertices)].clone();
        let internal: Vec<(String, String, String, f64)> = (0..n_internal)
            .map(|i| (format!("i{i}"), pick(), pick(), 0.0))
            .collect();
        let internal: Vec<_> = internal
            .into_iter()
            .map(|(id, f, t, _)| (id, f, t, rng.random_range(lengths.0..=lengths.1)))
            .collect();
        let external: Vec<(String, String)> = (0..n_external)
            .map(|e| (format!("e{e}"), names[rng.random_range(0..n_vertices)].clone()))
            .collect();
        return MetricGraph::new(&names, &internal, &external).unwrap();
    }
}

/// Random canonical form on `g`. With `plant`, `L(0,a)` is given one or two
/// zero eigenvalues.
pub fn random_canonical<R: Rng>(rng: &mut R, g: &MetricGraph, plant: bool) -> CanonicalForm {
    let layout = g.boundary_layout();
    let d = layout.dim();
    let u = random_unitary(rng, d);
    let k = rng.random_range(0..=d);
    let kernel = u.columns(0, k).into_owned();
    let p = &kernel * kernel.adjoint();
    let w = u.columns(k, d - k).into_owned();
    let r = d - k;
    let l_reduced = if plant && r > 0 {
        let v = random_unitary(rng, r);
        let zeros = rng.random_range(1..=r.min(2));
        let diag: Vec<Complex64> = (0..r)
            .map(|i| Complex64::new(if i < zeros { 0.0 } else { rng.random_range(-3.0..3.0) }, 0.0))
            .collect();
        let l0 = &v * CMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)) * v.adjoint();
        let m0 = linalg::to_complex(&m_matrix(g, 0.0).unwrap());
        l0 - w.adjoint() * m0 * &w
    } else {
        random_hermitian(rng, r, 3.0)
    };
    let l = &w * l_reduced * w.adjoint();
    CanonicalForm::from_parts(p, linalg::symmetrize(&l), layout).unwrap()
}

/// `(C(L + P), C P⊥)` for a random well-conditioned `C`.
pub fn disguise<R: Rng>(rng: &mut R, cf: &CanonicalForm) -> BoundarySpec {
    let d = cf.dim();
    let c = CMatrix::identity(d, d) + random_complex(rng, d, d).scale(0.3 / (d as f64).sqrt());
    BoundarySpec::new(&c * (&cf.l + &cf.p), &c * cf.p_perp(), cf.layout.clone()).unwrap()
}
