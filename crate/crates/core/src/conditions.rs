//! Vertex conditions: local presets, global `(A, B)` pairs and the canonical
//! `(P, L)` parametrization.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{BoundaryLayout, MetricGraph};
use crate::linalg::{self, c, CMatrix};
use crate::tolerance::Tolerances;

/// Boundary conditions `A ψ + B ψ' = 0` on the boundary space of a graph.
#[derive(Clone, Debug)]
pub struct BoundarySpec {
    pub a: CMatrix,
    pub b: CMatrix,
    pub layout: BoundaryLayout,
}

impl BoundarySpec {
    pub fn new(a: CMatrix, b: CMatrix, layout: BoundaryLayout) -> Result<Self> {
        let d = layout.dim();
        for (name, m) in [("A", &a), ("B", &b)] {
            if m.shape() != (d, d) {
                return Err(Error::Condition(format!(
                    "{name} is {}x{}, expected {d}x{d}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(Self { a, b, layout })
    }

    pub fn from_real(a: DMatrix<f64>, b: DMatrix<f64>, layout: BoundaryLayout) -> Result<Self> {
        Self::new(linalg::to_complex(&a), linalg::to_complex(&b), layout)
    }

    /// The equivalent pair `(L + P, P⊥)`.
    pub fn from_canonical(cf: &CanonicalForm) -> Self {
        Self {
            a: &cf.l + &cf.p,
            b: cf.p_perp(),
            layout: cf.layout.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// The block row `(A B)` of size d×2d.
    pub fn block_row(&self) -> CMatrix {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, 2 * d);
        m.view_mut((0, 0), (d, d)).copy_from(&self.a);
        m.view_mut((0, d), (d, d)).copy_from(&self.b);
        m
    }

    /// Orthonormal basis of the Lagrangian subspace `Ker (A B)` in 𝒦².
    /// Cut-off for the singular values of B, taken relative to (A B): when
    /// Ker B is the whole space, B itself is pure roundoff.
    pub fn b_rank_threshold(&self, tol: &Tolerances) -> f64 {
        tol.rank(self.dim(), linalg::op_norm(&self.block_row()))
    }

    pub fn lagrangian_subspace(&self, tol: &Tolerances) -> CMatrix {
        let row = self.block_row();
        let smax = linalg::op_norm(&row);
        linalg::null_space(&row, tol.rank(2 * self.dim(), smax))
    }
}

/// Sine of the largest principal angle between the Lagrangian subspaces of two specs.
pub fn lagrangian_distance(s1: &BoundarySpec, s2: &BoundarySpec, tol: &Tolerances) -> f64 {
    linalg::subspace_distance(&s1.lagrangian_subspace(tol), &s2.lagrangian_subspace(tol))
}

/// Local condition at a single vertex.
#[derive(Clone, Debug, PartialEq)]
pub enum VertexCondition {
    Dirichlet,
    Neumann,
    /// Continuity plus vanishing sum of outgoing derivatives.
    Kirchhoff,
    /// Continuity plus `Σ ψ' = γ ψ(v)`; `γ = 0` is Kirchhoff.
    Delta(f64),
    /// Equal outgoing derivatives plus `Σ ψ = γ ψ'`.
    DeltaPrime(f64),
    /// Explicit `deg(v) × deg(v)` blocks, columns ordered as [`MetricGraph::vertex_slots`].
    Custom { a: CMatrix, b: CMatrix },
}

impl VertexCondition {
    /// Local `(A_v, B_v)` blocks for a vertex of the given degree.
    pub fn local_blocks(&self, degree: usize) -> Result<(CMatrix, CMatrix)> {
        let n = degree;
        let zero = || CMatrix::zeros(n, n);
        let block = match self {
            VertexCondition::Dirichlet => (CMatrix::identity(n, n), zero()),
            VertexCondition::Neumann => (zero(), CMatrix::identity(n, n)),
            VertexCondition::Kirchhoff => VertexCondition::Delta(0.0).local_blocks(n)?,
            VertexCondition::Delta(gamma) => {
                if !gamma.is_finite() {
                    return Err(Error::Condition(format!("delta coupling {gamma} is not finite")));
                }
                let (mut a, mut b) = (zero(), zero());
                if n > 0 {
                    for r in 0..n - 1 {
                        a[(r, r)] = c(1.0);
                        a[(r, r + 1)] = c(-1.0);
                    }
                    a[(n - 1, 0)] = c(-gamma);
                    for k in 0..n {
                        b[(n - 1, k)] = c(1.0);
                    }
                }
                (a, b)
            }
            VertexCondition::DeltaPrime(gamma) => {
                if *gamma == 0.0 || !gamma.is_finite() {
                    return Err(Error::Condition(format!(
                        "delta-prime coupling must be finite and nonzero, got {gamma}"
                    )));
                }
                let (mut a, mut b) = (zero(), zero());
                if n > 0 {
                    for r in 0..n - 1 {
                        b[(r, r)] = c(1.0);
                        b[(r, r + 1)] = c(-1.0);
                    }
                    for k in 0..n {
                        a[(n - 1, k)] = c(1.0);
                    }
                    b[(n - 1, 0)] = c(-gamma);
                }
                (a, b)
            }
            VertexCondition::Custom { a, b } => {
                if a.shape() != (n, n) || b.shape() != (n, n) {
                    return Err(Error::Condition(format!(
                        "custom blocks are {}x{} and {}x{}, vertex degree is {n}",
                        a.nrows(),
                        a.ncols(),
                        b.nrows(),
                        b.ncols()
                    )));
                }
                (a.clone(), b.clone())
            }
        };
        Ok(block)
    }
}

/// Assembles per-vertex conditions into a global `(A, B)`.
///
/// Rows are grouped by vertex in vertex order; columns follow the boundary layout.
pub fn assemble(g: &MetricGraph, conds: &HashMap<String, VertexCondition>) -> Result<BoundarySpec> {
    for name in conds.keys() {
        if g.vertex_index(name).is_none() {
            return Err(Error::Condition(format!("condition given for unknown vertex '{name}'")));
        }
    }
    let layout = g.boundary_layout();
    let d = layout.dim();
    let mut a = CMatrix::zeros(d, d);
    let mut b = CMatrix::zeros(d, d);
    let mut row = 0;
    for (v, name) in g.vertices().iter().enumerate() {
        let cond = conds
            .get(name)
            .ok_or_else(|| Error::Condition(format!("no condition for vertex '{name}'")))?;
        let slots = g.vertex_slots(v);
        let (av, bv) = cond.local_blocks(slots.len())?;
        if let VertexCondition::Custom { .. } = cond {
            let local = BoundarySpec {
                a: av.clone(),
                b: bv.clone(),
                layout: BoundaryLayout {
                    n_external: slots.len(),
                    n_internal: 0,
                },
            };
            let report = validate(&local, &Tolerances::default());
            if !report.valid {
                return Err(Error::NotSelfAdjoint(format!(
                    "custom condition at vertex '{name}': {}",
                    report.message()
                )));
            }
        }
        for (r, _) in slots.iter().enumerate() {
            for (k, &slot) in slots.iter().enumerate() {
                a[(row + r, slot)] = av[(r, k)];
                b[(row + r, slot)] = bv[(r, k)];
            }
        }
        row += slots.len();
    }
    debug_assert_eq!(row, d);
    BoundarySpec::new(a, b, layout)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub dim: usize,
    pub rank: usize,
    pub surjective: bool,
    /// σ_d of `(A B)`.
    pub smallest_singular_value: f64,
    pub ab_star_hermitian: bool,
    /// `‖AB* − (AB*)*‖`.
    pub hermitian_residual: f64,
    pub hermitian_tolerance: f64,
    pub valid: bool,
}

impl ValidationReport {
    pub fn message(&self) -> String {
        if !self.surjective {
            format!("rank (A B) = {} < {}", self.rank, self.dim)
        } else if !self.ab_star_hermitian {
            format!(
                "A B* is not Hermitian (residual {:.3e} > {:.3e})",
                self.hermitian_residual, self.hermitian_tolerance
            )
        } else {
            "self-adjoint".to_owned()
        }
    }
}

pub fn validate(spec: &BoundarySpec, tol: &Tolerances) -> ValidationReport {
    let d = spec.dim();
    let sv = linalg::singular_values(&spec.block_row());
    let smax = sv.first().copied().unwrap_or(0.0);
    let threshold = tol.rank(2 * d, smax);
    let rank = sv.iter().filter(|&&s| s > threshold).count();
    let ab = &spec.a * spec.b.adjoint();
    let residual = linalg::hermitian_residual(&ab);
    let herm_tol = tol.herm(linalg::op_norm(&spec.a), linalg::op_norm(&spec.b));
    let surjective = rank == d;
    let hermitian = residual <= herm_tol;
    ValidationReport {
        dim: d,
        rank,
        surjective,
        smallest_singular_value: sv.last().copied().unwrap_or(0.0),
        ab_star_hermitian: hermitian,
        hermitian_residual: residual,
        hermitian_tolerance: herm_tol,
        valid: surjective && hermitian,
    }
}

/// Canonical parametrization: `P` projects onto `Ker B`, `L` is Hermitian on `ran P⊥`.
#[derive(Clone, Debug)]
pub struct CanonicalForm {
    pub p: CMatrix,
    /// `L` embedded in 𝒦 (equal to `P⊥ L P⊥`).
    pub l: CMatrix,
    /// Orthonormal basis of `ran P⊥`, d×r.
    pub basis: CMatrix,
    /// `L` in the coordinates of `basis`, r×r.
    pub l_reduced: CMatrix,
    pub layout: BoundaryLayout,
}

impl CanonicalForm {
    /// Builds a canonical form directly from a projector and a Hermitian `L`.
    /// `L` is compressed onto `ran P⊥`.
    pub fn from_parts(p: CMatrix, l: CMatrix, layout: BoundaryLayout) -> Result<Self> {
        let d = layout.dim();
        if p.shape() != (d, d) || l.shape() != (d, d) {
            return Err(Error::Condition(format!("P and L must be {d}x{d}")));
        }
        let basis = range_of_complement(&p);
        let l_reduced = linalg::symmetrize(&(basis.adjoint() * &l * &basis));
        let l = &basis * &l_reduced * basis.adjoint();
        Ok(Self {
            p,
            l,
            basis,
            l_reduced,
            layout,
        })
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// Dimension of `ran P⊥`.
    pub fn p_perp_rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn p_perp(&self) -> CMatrix {
        CMatrix::identity(self.dim(), self.dim()) - &self.p
    }

    /// `W* H W` for a full-space operator `H`, symmetrized.
    pub fn reduce(&self, full: &CMatrix) -> CMatrix {
        linalg::symmetrize(&(self.basis.adjoint() * full * &self.basis))
    }

    pub fn reduce_real(&self, full: &DMatrix<f64>) -> CMatrix {
        self.reduce(&linalg::to_complex(full))
    }

    pub fn embed(&self, reduced: &CMatrix) -> CMatrix {
        &self.basis * reduced * self.basis.adjoint()
    }
}

/// Orthonormal basis of `ran (1 − P)` for an orthogonal projector `P`.
fn range_of_complement(p: &CMatrix) -> CMatrix {
    let d = p.nrows();
    let (values, vectors) = linalg::hermitian_eigen(p);
    let cols: Vec<usize> = (0..d).filter(|&k| values[k] < 0.5).collect();
    linalg::select_columns(&vectors, &cols)
}

/// `P` onto `Ker B` and `L = B⁺ A P⊥`, the Moore–Penrose form of
/// `(B|ran B*)⁻¹ A P⊥`.
pub fn canonical_form(spec: &BoundarySpec, tol: &Tolerances) -> Result<CanonicalForm> {
    let d = spec.dim();
    let svd = linalg::sorted_svd(&spec.b);
    let threshold = spec.b_rank_threshold(tol);
    let (range_cols, kernel_cols): (Vec<usize>, Vec<usize>) =
        (0..d).partition(|&k| svd.singular_values[k] > threshold);
    let kernel = linalg::select_columns(&svd.v, &kernel_cols);
    let basis = linalg::select_columns(&svd.v, &range_cols);
    let p = &kernel * kernel.adjoint();
    let p_perp = CMatrix::identity(d, d) - &p;

    // B⁺ = V_r Σ_r⁻¹ U_r*
    let mut b_pinv = CMatrix::zeros(d, d);
    for &k in &range_cols {
        let inv = Complex64::new(1.0 / svd.singular_values[k], 0.0);
        b_pinv += svd.v.column(k) * svd.u.column(k).adjoint() * inv;
    }
    let l_raw = b_pinv * &spec.a * &p_perp;
    let residual = linalg::hermitian_residual(&l_raw);
    let herm_tol = tol.herm(linalg::op_norm(&spec.a), linalg::op_norm(&spec.b));
    let l_norm = linalg::op_norm(&l_raw);
    if residual > 10.0 * herm_tol * l_norm.max(1.0) {
        return Err(Error::Numerical(format!(
            "reconstructed L is not Hermitian (residual {residual:.3e}); boundary conditions are not self-adjoint"
        )));
    }
    let l_reduced = linalg::symmetrize(&(basis.adjoint() * &l_raw * &basis));
    let l = &basis * &l_reduced * basis.adjoint();
    Ok(CanonicalForm {
        p,
        l,
        basis,
        l_reduced,
        layout: spec.layout.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &CMatrix, b: &CMatrix, eps: f64) {
        let diff = linalg::op_norm(&(a - b));
        assert!(diff <= eps, "matrices differ by {diff}:\n{a}\n{b}");
    }

    fn dumbbell() -> MetricGraph {
        MetricGraph::new(
            &["v1", "v2"],
            &[("i3", "v1", "v2", 1.0)],
            &[("e1", "v1"), ("e2", "v2")],
        )
        .unwrap()
    }

    fn uniform(g: &MetricGraph, cond: VertexCondition) -> HashMap<String, VertexCondition> {
        g.vertices().iter().map(|v| (v.clone(), cond.clone())).collect()
    }

    #[test]
    fn delta_prime_dumbbell_canonical_form() {
        let g = dumbbell();
        for gamma in [-1.0, -0.3, 2.0] {
            let spec = assemble(&g, &uniform(&g, VertexCondition::DeltaPrime(gamma))).unwrap();
            let tol = Tolerances::default();
            assert!(validate(&spec, &tol).valid);
            let cf = canonical_form(&spec, &tol).unwrap();
            assert_close(&cf.p, &CMatrix::zeros(4, 4), 1e-12);
            // layout (e1, e2, i3-, i3+): vertex v1 couples slots 0 and 2, v2 couples 1 and 3
            let mut expected = CMatrix::zeros(4, 4);
            for (s, t) in [(0, 2), (1, 3)] {
                for i in [s, t] {
                    for j in [s, t] {
                        expected[(i, j)] = c(-1.0 / gamma);
                    }
                }
            }
            assert_close(&cf.l, &expected, 1e-12);
            let ev = linalg::hermitian_eigenvalues(&cf.l_reduced);
            let mut want = vec![0.0, 0.0, -2.0 / gamma, -2.0 / gamma];
            want.sort_by(f64::total_cmp);
            for (x, y) in ev.iter().zip(&want) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn local_delta_prime_block() {
        let (a, b) = VertexCondition::DeltaPrime(-2.0).local_blocks(2).unwrap();
        let want_a = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 1.0]);
        let want_b = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 2.0, 0.0]);
        assert_close(&a, &linalg::to_complex(&want_a), 0.0);
        assert_close(&b, &linalg::to_complex(&want_b), 0.0);
    }

    #[test]
    fn dirichlet_everywhere_is_identity_zero() {
        let g = dumbbell();
        let spec = assemble(&g, &uniform(&g, VertexCondition::Dirichlet)).unwrap();
        // rows come vertex by vertex, so A is a permutation matrix
        assert_close(&(&spec.a * spec.a.adjoint()), &CMatrix::identity(4, 4), 0.0);
        assert_close(&spec.b, &CMatrix::zeros(4, 4), 0.0);
        let cf = canonical_form(&spec, &Tolerances::default()).unwrap();
        assert_close(&cf.p, &CMatrix::identity(4, 4), 1e-14);
        assert_eq!(cf.p_perp_rank(), 0);
        assert_eq!(cf.l_reduced.shape(), (0, 0));
    }

    #[test]
    fn roundoff_in_b_is_not_rank() {
        let g = dumbbell();
        let mut spec = assemble(&g, &uniform(&g, VertexCondition::Dirichlet)).unwrap();
        spec.b = CMatrix::from_fn(4, 4, |i, j| Complex64::new(1e-17 * (i + 2 * j) as f64, -3e-17));
        let cf = canonical_form(&spec, &Tolerances::default()).unwrap();
        assert_eq!(cf.p_perp_rank(), 0);
    }

    #[test]
    fn kirchhoff_at_degree_one_is_neumann() {
        let (a, b) = VertexCondition::Kirchhoff.local_blocks(1).unwrap();
        assert_eq!(a[(0, 0)], c(0.0));
        assert_eq!(b[(0, 0)], c(1.0));
    }

    #[test]
    fn validate_examples() {
        let layout = BoundaryLayout {
            n_external: 0,
            n_internal: 1,
        };
        let tol = Tolerances::default();
        let id = DMatrix::<f64>::identity(2, 2);
        let zero = DMatrix::<f64>::zeros(2, 2);
        let dirichlet = BoundarySpec::from_real(id.clone(), zero.clone(), layout.clone()).unwrap();
        assert!(validate(&dirichlet, &tol).valid);
        let neumann = BoundarySpec::from_real(zero, id, layout.clone()).unwrap();
        assert!(validate(&neumann, &tol).valid);
        let diag = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let bad = BoundarySpec::from_real(diag.clone(), diag, layout).unwrap();
        let report = validate(&bad, &tol);
        assert!(!report.valid);
        assert_eq!(report.rank, 1);
        assert_eq!(report.message(), "rank (A B) = 1 < 2");
    }

    #[test]
    fn non_hermitian_ab_star_is_rejected() {
        let layout = BoundaryLayout {
            n_external: 2,
            n_internal: 0,
        };
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = DMatrix::identity(2, 2);
        let spec = BoundarySpec::from_real(a, b, layout).unwrap();
        let report = validate(&spec, &Tolerances::default());
        assert!(report.surjective);
        assert!(!report.ab_star_hermitian);
        assert!(canonical_form(&spec, &Tolerances::default()).is_err());
    }

    #[test]
    fn identity_b_gives_l_equal_a() {
        let layout = BoundaryLayout {
            n_external: 0,
            n_internal: 1,
        };
        let cval = 3.0;
        let lc = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]) * (cval / 2.0);
        let spec = BoundarySpec::from_real(lc.clone(), DMatrix::identity(2, 2), layout).unwrap();
        let cf = canonical_form(&spec, &Tolerances::default()).unwrap();
        assert_close(&cf.p, &CMatrix::zeros(2, 2), 1e-14);
        assert_close(&cf.l, &linalg::to_complex(&lc), 1e-14);
        let ev = linalg::hermitian_eigenvalues(&cf.l_reduced);
        assert!(ev[0].abs() < 1e-14 && (ev[1] - cval).abs() < 1e-14);
    }

    #[test]
    fn round_trip_preserves_lagrangian_subspace() {
        let g = MetricGraph::new(
            &["a", "b", "c"],
            &[("x", "a", "b", 1.0), ("y", "b", "c", 2.0)],
            &[("e", "a")],
        )
        .unwrap();
        let conds: HashMap<String, VertexCondition> = [
            ("a".to_owned(), VertexCondition::Delta(-0.7)),
            ("b".to_owned(), VertexCondition::Kirchhoff),
            ("c".to_owned(), VertexCondition::Dirichlet),
        ]
        .into_iter()
        .collect();
        let tol = Tolerances::default();
        let spec = assemble(&g, &conds).unwrap();
        assert!(validate(&spec, &tol).valid);
        let cf = canonical_form(&spec, &tol).unwrap();
        let rebuilt = BoundarySpec::from_canonical(&cf);
        assert!(lagrangian_distance(&spec, &rebuilt, &tol) < 1e-10);
        let cf2 = canonical_form(&rebuilt, &tol).unwrap();
        assert_close(&cf.p, &cf2.p, 1e-10);
        assert_close(&cf.l, &cf2.l, 1e-10);
    }

    #[test]
    fn assembly_errors() {
        let g = dumbbell();
        let mut conds = uniform(&g, VertexCondition::Kirchhoff);
        conds.remove("v2");
        assert!(assemble(&g, &conds).is_err());
        let conds = uniform(&g, VertexCondition::DeltaPrime(0.0));
        assert!(assemble(&g, &conds).is_err());
        let conds = uniform(
            &g,
            VertexCondition::Custom {
                a: CMatrix::identity(3, 3),
                b: CMatrix::zeros(3, 3),
            },
        );
        assert!(assemble(&g, &conds).is_err());
        let mut conds = uniform(&g, VertexCondition::Kirchhoff);
        conds.insert("nope".into(), VertexCondition::Dirichlet);
        assert!(assemble(&g, &conds).is_err());
    }
}
