//! Matrix families on the boundary space: `M(κ,a) = Q D(κ,a) Q`, its limit
//! `M(0,a)`, the majorant `M₁(a)`, the Hermitian family
//! `L(κ,a) = L + P⊥ M(κ,a) P⊥`, the affine comparison family
//! `R(κ,a) = L + P⊥ M₁(a) P⊥ − κ P⊥`, the secular matrix `Z` and `τ(0,a)`.
//!
//! `L(κ,a)` and `R(κ,a)` are returned in the reduced coordinates of the
//! canonical form (`ran P⊥`).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::conditions::{BoundarySpec, CanonicalForm};
use crate::error::{Error, Result};
use crate::graph::{BoundaryLayout, MetricGraph};
use crate::linalg::{self, CMatrix};
use crate::tolerance::Tolerances;
use crate::transcendental::{kappa_coth, kappa_tanh};

/// Beyond this value of `κ a` the exponentials in `X`, `Y` are rescaled.
const OVERFLOW_GUARD: f64 = 300.0;

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "κ must be finite and non-negative, got {kappa}"
        )));
    }
    Ok(())
}

/// `λ(κ,a) = −κ tanh(κa/2)` and `μ(κ,a) = −κ coth(κa/2)` (with `μ(0,a) = −2/a`).
pub fn lambda_mu(kappa: f64, a: f64) -> (f64, f64) {
    (-kappa_tanh(kappa, a), -kappa_coth(kappa, a))
}

/// The symmetry `Q`: identity on 𝒦_E and `[[1, 1], [1, −1]]/√2` on each
/// pair of internal-edge slots.
pub fn q_matrix(layout: &BoundaryLayout) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(layout.dim(), layout.dim());
    for e in 0..layout.n_external {
        q[(e, e)] = 1.0;
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..layout.n_internal {
        let (s, t) = (layout.initial_slot(i), layout.terminal_slot(i));
        q[(s, s)] = h;
        q[(s, t)] = h;
        q[(t, s)] = h;
        q[(t, t)] = -h;
    }
    q
}

/// `D(κ,a) = diag(−κ, λ(κ,a), μ(κ,a))`.
pub fn d_matrix(g: &MetricGraph, kappa: f64) -> Result<DMatrix<f64>> {
    check_kappa(kappa)?;
    let layout = g.boundary_layout();
    let mut d = DMatrix::zeros(layout.dim(), layout.dim());
    for e in 0..layout.n_external {
        d[(e, e)] = -kappa;
    }
    for (i, edge) in g.internal_edges().iter().enumerate() {
        let (lambda, mu) = lambda_mu(kappa, edge.length);
        d[(layout.initial_slot(i), layout.initial_slot(i))] = lambda;
        d[(layout.terminal_slot(i), layout.terminal_slot(i))] = mu;
    }
    Ok(d)
}

/// `M(κ,a) = Q D(κ,a) Q`; at κ = 0 this is the limit matrix with internal
/// blocks `[[−1/a, 1/a], [1/a, −1/a]]`.
pub fn m_matrix(g: &MetricGraph, kappa: f64) -> Result<DMatrix<f64>> {
    let q = q_matrix(&g.boundary_layout());
    let d = d_matrix(g, kappa)?;
    let m = &q * d * &q;
    Ok((&m + m.transpose()) * 0.5)
}

/// `M₁(a)`: internal blocks `[[1/a, 1/a], [1/a, 1/a]]`, zero on 𝒦_E.
pub fn m_one(g: &MetricGraph) -> DMatrix<f64> {
    let layout = g.boundary_layout();
    let mut m = DMatrix::zeros(layout.dim(), layout.dim());
    for (i, edge) in g.internal_edges().iter().enumerate() {
        let (s, t) = (layout.initial_slot(i), layout.terminal_slot(i));
        let w = 1.0 / edge.length;
        for x in [s, t] {
            for y in [s, t] {
                m[(x, y)] = w;
            }
        }
    }
    m
}

/// `L(κ,a)` on `ran P⊥` (reduced coordinates).
pub fn l_of_kappa(cf: &CanonicalForm, g: &MetricGraph, kappa: f64) -> Result<CMatrix> {
    let m = m_matrix(g, kappa)?;
    Ok(linalg::symmetrize(&(&cf.l_reduced + cf.reduce_real(&m))))
}

/// `L(κ,a)` embedded in the full boundary space.
pub fn l_of_kappa_full(cf: &CanonicalForm, g: &MetricGraph, kappa: f64) -> Result<CMatrix> {
    Ok(cf.embed(&l_of_kappa(cf, g, kappa)?))
}

/// `R(κ,a)` on `ran P⊥` (reduced coordinates).
pub fn r_of_kappa(cf: &CanonicalForm, g: &MetricGraph, kappa: f64) -> Result<CMatrix> {
    check_kappa(kappa)?;
    let r = cf.p_perp_rank();
    let shift = CMatrix::identity(r, r) * Complex64::new(kappa, 0.0);
    Ok(linalg::symmetrize(&(&cf.l_reduced + cf.reduce_real(&m_one(g)) - shift)))
}

/// `X(iκ,a)` and `Y(iκ,a)` with columns ordered (s_e, α_i, β_i).
///
/// If `rescale` is set, every column whose entries grow like `e^{κa}` with
/// `κa > 300` is multiplied by `e^{−κa}`; this leaves the zero set of
/// `det Z` unchanged.
pub fn x_y_matrices(g: &MetricGraph, kappa: f64, rescale: bool) -> (DMatrix<f64>, DMatrix<f64>) {
    let layout = g.boundary_layout();
    let dim = layout.dim();
    let mut x = DMatrix::zeros(dim, dim);
    let mut y = DMatrix::zeros(dim, dim);
    for e in 0..layout.n_external {
        x[(e, e)] = 1.0;
        y[(e, e)] = 1.0;
    }
    for (i, edge) in g.internal_edges().iter().enumerate() {
        let (s, t) = (layout.initial_slot(i), layout.terminal_slot(i));
        let ka = kappa * edge.length;
        // α column: e^{−κx}
        x[(s, s)] = 1.0;
        x[(t, s)] = (-ka).exp();
        y[(s, s)] = 1.0;
        y[(t, s)] = -(-ka).exp();
        // β column: e^{κx}
        let scale = if rescale && ka > OVERFLOW_GUARD { (-ka).exp() } else { 1.0 };
        let grow = if scale == 1.0 { ka.exp() } else { 1.0 };
        x[(s, t)] = scale;
        x[(t, t)] = grow;
        y[(s, t)] = -scale;
        y[(t, t)] = grow;
    }
    (x, y)
}

/// `Z(iκ,a,A,B) = A X(iκ,a) − κ B Y(iκ,a)`; `−κ²` is an eigenvalue iff `det Z = 0`.
pub fn secular_matrix_z(spec: &BoundarySpec, g: &MetricGraph, kappa: f64) -> Result<CMatrix> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidArgument(format!("Z requires κ > 0, got {kappa}")));
    }
    let (x, y) = x_y_matrices(g, kappa, true);
    let x = linalg::to_complex(&x);
    let y = linalg::to_complex(&y);
    Ok(&spec.a * x - (&spec.b * y) * Complex64::new(kappa, 0.0))
}

/// Smallest singular value of `Z` after scaling each column to unit norm.
pub fn scaled_smallest_singular_value(z: &CMatrix) -> f64 {
    let mut z = z.clone();
    for mut col in z.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= Complex64::new(n, 0.0);
        }
    }
    linalg::singular_values(&z).last().copied().unwrap_or(0.0)
}

/// `τ(0,a) = AB* + B M(0,a) B*` restricted to `ran B`.
pub fn tau_zero(spec: &BoundarySpec, g: &MetricGraph, tol: &Tolerances) -> Result<CMatrix> {
    let d = spec.dim();
    let svd = linalg::sorted_svd(&spec.b);
    let threshold = spec.b_rank_threshold(tol);
    let cols: Vec<usize> = (0..d).filter(|&k| svd.singular_values[k] > threshold).collect();
    let range = linalg::select_columns(&svd.u, &cols);
    let m0 = linalg::to_complex(&m_matrix(g, 0.0)?);
    let bstar = spec.b.adjoint();
    let tau = &spec.a * &bstar + &spec.b * m0 * &bstar;
    Ok(linalg::symmetrize(&(range.adjoint() * tau * &range)))
}

/// Number of eigenvalues within `tol.eig(‖H‖)` of zero.
pub fn kernel_dimension(h: &CMatrix, tol: &Tolerances) -> usize {
    let ev = linalg::hermitian_eigenvalues(h);
    let norm = ev.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let eps = tol.eig(norm);
    ev.iter().filter(|x| x.abs() <= eps).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn interval(a: f64) -> MetricGraph {
        MetricGraph::interval(a).unwrap()
    }

    fn canonical_interval(a: f64, l: DMatrix<f64>) -> (MetricGraph, CanonicalForm) {
        let g = interval(a);
        let cf = CanonicalForm::from_parts(
            CMatrix::zeros(2, 2),
            linalg::to_complex(&l),
            g.boundary_layout(),
        )
        .unwrap();
        (g, cf)
    }

    #[test]
    fn m_zero_interval() {
        let m = m_matrix(&interval(2.0), 0.0).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[-0.5, 0.5, 0.5, -0.5]);
        assert!((m - want).abs().max() < 1e-15);
    }

    #[test]
    fn m_star_is_minus_kappa() {
        let g = MetricGraph::star(3).unwrap();
        let m = m_matrix(&g, 1.7).unwrap();
        assert!((m + DMatrix::identity(3, 3) * 1.7).abs().max() == 0.0);
    }

    #[test]
    fn m_matches_y_x_inverse() {
        // independent route: −κ Y X⁻¹ from the exponential ansatz
        let g = interval(2.0);
        let kappa = 1.0;
        let (x, y) = x_y_matrices(&g, kappa, false);
        let direct = -(y * x.try_inverse().unwrap()) * kappa;
        let m = m_matrix(&g, kappa).unwrap();
        assert!((&m - &direct).abs().max() < 1e-12, "{m}\n{direct}");
        let t = 1f64.tanh();
        let want_diag = 0.5 * (-t - 1.0 / t);
        let want_off = 0.5 * (-t + 1.0 / t);
        assert!((m[(0, 0)] - want_diag).abs() < 1e-14);
        assert!((m[(0, 1)] - want_off).abs() < 1e-14);
    }

    #[test]
    fn q_is_a_symmetry() {
        let layout = BoundaryLayout { n_external: 2, n_internal: 3 };
        let q = q_matrix(&layout);
        assert!((&q - q.transpose()).abs().max() == 0.0);
        assert!((&q * &q - DMatrix::identity(8, 8)).abs().max() < 1e-15);
    }

    #[test]
    fn l_of_kappa_identity_interval() {
        let a = 1.3;
        let (g, cf) = canonical_interval(a, DMatrix::identity(2, 2));
        for kappa in [0.0, 0.4, 2.0] {
            let lk = cf.embed(&l_of_kappa(&cf, &g, kappa).unwrap());
            let q = linalg::to_complex(&q_matrix(&g.boundary_layout()));
            let diag = &q * &lk * &q;
            assert!((diag[(0, 0)].re - (1.0 - kappa_tanh(kappa, a))).abs() < 1e-13);
            assert!((diag[(1, 1)].re - (1.0 - kappa_coth(kappa, a))).abs() < 1e-13);
            assert!(diag[(0, 1)].norm() < 1e-13);
        }
    }

    #[test]
    fn l_of_kappa_lc_interval() {
        let (a, cval, kappa) = (1.0, 3.0, 0.8);
        let lc = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]) * (cval / 2.0);
        let (g, cf) = canonical_interval(a, lc);
        let lk = cf.embed(&l_of_kappa(&cf, &g, kappa).unwrap());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let x = nalgebra::DVector::from_vec(vec![c(h), c(-h)]);
        let value = (x.adjoint() * &lk * &x)[(0, 0)].re;
        assert!((value - (cval - kappa_coth(kappa, a))).abs() < 1e-13);
    }

    #[test]
    fn star_graph_r_equals_l() {
        let g = MetricGraph::star(2).unwrap();
        let l = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let cf = CanonicalForm::from_parts(
            CMatrix::zeros(2, 2),
            linalg::to_complex(&l),
            g.boundary_layout(),
        )
        .unwrap();
        for kappa in [0.0, 0.7, 3.0] {
            let lk = l_of_kappa(&cf, &g, kappa).unwrap();
            let rk = r_of_kappa(&cf, &g, kappa).unwrap();
            let shifted = &cf.l_reduced - CMatrix::identity(2, 2) * c(kappa);
            assert!(linalg::op_norm(&(&lk - &rk)) < 1e-14);
            assert!(linalg::op_norm(&(&lk - &shifted)) < 1e-14);
        }
    }

    #[test]
    fn z_dirichlet_interval_determinant() {
        let g = interval(1.5);
        let spec = BoundarySpec::from_real(
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            g.boundary_layout(),
        )
        .unwrap();
        for kappa in [0.1, 1.0, 5.0] {
            let z = secular_matrix_z(&spec, &g, kappa).unwrap();
            let det = z.determinant();
            let ka = kappa * 1.5;
            let want = ka.exp() - (-ka).exp();
            assert!((det.re - want).abs() < 1e-12 * want.max(1.0) && det.im.abs() < 1e-12);
        }
        assert!(secular_matrix_z(&spec, &g, 0.0).is_err());
    }

    #[test]
    fn z_survives_huge_kappa() {
        let g = interval(10.0);
        let spec = BoundarySpec::from_real(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            g.boundary_layout(),
        )
        .unwrap();
        let z = secular_matrix_z(&spec, &g, 100.0).unwrap();
        assert!(z.iter().all(|x| x.re.is_finite() && x.im.is_finite()));
    }

    #[test]
    fn tau_zero_trivial_cases() {
        let g = interval(2.0);
        let tol = Tolerances::default();
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, -2.0]);
        let spec = BoundarySpec::from_real(a.clone(), DMatrix::identity(2, 2), g.boundary_layout())
            .unwrap();
        let tau = tau_zero(&spec, &g, &tol).unwrap();
        let l0 = linalg::to_complex(&(a + m_matrix(&g, 0.0).unwrap()));
        // ran B is all of 𝒦; the basis may be rotated, so compare spectra
        let (t_ev, l_ev) = (linalg::hermitian_eigenvalues(&tau), linalg::hermitian_eigenvalues(&l0));
        for (x, y) in t_ev.iter().zip(&l_ev) {
            assert!((x - y).abs() < 1e-13);
        }
        let dirichlet =
            BoundarySpec::from_real(DMatrix::identity(2, 2), DMatrix::zeros(2, 2), g.boundary_layout())
                .unwrap();
        assert_eq!(tau_zero(&dirichlet, &g, &tol).unwrap().shape(), (0, 0));
    }

    #[test]
    fn negative_kappa_rejected() {
        assert!(m_matrix(&interval(1.0), -1.0).is_err());
    }
}
