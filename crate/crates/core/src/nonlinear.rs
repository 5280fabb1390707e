//! Negative eigenvalues as zeros of the eigenvalue curves of `κ ↦ L(κ,a)`.
//!
//! Every Rayleigh quotient of `L(κ,a)` is strictly decreasing in κ and tends
//! to `−∞`, so the j-th largest eigenvalue `g_j(κ)` starts at `l_j > 0` and
//! crosses zero exactly once. The zeros are the `κ_j`, and a cluster of
//! coinciding zeros is a multiple eigenvalue.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundsOptions};
use crate::conditions::CanonicalForm;
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::linalg::{self, CMatrix};
use crate::spectral::{kernel_dimension, l_of_kappa, m_matrix};
use crate::tolerance::Tolerances;

const BISECTION_WIDTH: f64 = 1e-4;
const MAX_REFINEMENT: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRoot {
    pub kappa: f64,
    pub multiplicity: usize,
    /// `−κ²`.
    pub eigenvalue: f64,
    /// Smallest singular value of `L(κ,a)` at the root.
    pub residual: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NegativeSpectrum {
    /// Sorted by κ descending.
    pub roots: Vec<SpectrumRoot>,
}

impl NegativeSpectrum {
    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    /// `κ_1 ≥ … ≥ κ_n`, repeated according to multiplicity.
    pub fn kappas(&self) -> Vec<f64> {
        self.roots
            .iter()
            .flat_map(|r| std::iter::repeat_n(r.kappa, r.multiplicity))
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }
}

/// `g_j(κ)`: the j-th largest eigenvalue of `L(κ,a)`, `j` starting at 1.
pub fn eigenvalue_curve(cf: &CanonicalForm, g: &MetricGraph, j: usize, kappa: f64) -> Result<f64> {
    let ev = linalg::hermitian_eigenvalues(&l_of_kappa(cf, g, kappa)?);
    ev.len()
        .checked_sub(j)
        .map(|k| ev[k])
        .ok_or_else(|| Error::InvalidArgument(format!("curve {j} requested on a {}-dimensional space", ev.len())))
}

/// Zero of a continuous function with `f(lo) > 0 > f(hi)`: bisection down to
/// [`BISECTION_WIDTH`], then Illinois-modified regula falsi.
fn curve_zero(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, target: f64) -> Result<f64> {
    let mut f_lo = f(lo)?;
    let mut f_hi = f(hi)?;
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm > 0.0 {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
    }
    let mut side = 0i8;
    let mut best = if f_lo.abs() < f_hi.abs() { lo } else { hi };
    for _ in 0..MAX_REFINEMENT {
        let x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        let x = if x > lo && x < hi { x } else { 0.5 * (lo + hi) };
        let fx = f(x)?;
        best = x;
        if fx.abs() <= target || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        if fx > 0.0 {
            lo = x;
            f_lo = fx;
            if side == 1 {
                f_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = x;
            f_hi = fx;
            if side == -1 {
                f_lo *= 0.5;
            }
            side = -1;
        }
    }
    Ok(best)
}

/// Computes the negative spectrum, or fails loudly if a curve has no zero.
pub fn negative_spectrum(cf: &CanonicalForm, g: &MetricGraph, opts: &BoundsOptions) -> Result<NegativeSpectrum> {
    let tol = &opts.tol;
    let report = bounds::combined(cf, g, opts)?;
    let n = report.negative_count;
    if n == 0 {
        return Ok(NegativeSpectrum::default());
    }
    let kappa_max = report.indices[0].combined.upper + 1.0;
    let l_norm = linalg::op_norm(&cf.l_reduced);
    let target = tol.curve(l_norm);

    let solve = |j: usize| -> Result<f64> {
        let f = |k: f64| eigenvalue_curve(cf, g, j, k);
        let mut hi = kappa_max;
        if f(hi)? >= 0.0 {
            hi *= 2.0;
            if f(hi)? >= 0.0 {
                return Err(Error::Numerical(format!(
                    "eigenvalue curve {j} has no sign change on (0, {hi}]; tolerances are misconfigured"
                )));
            }
        }
        curve_zero(f, 0.0, hi, target)
    };
    let js: Vec<usize> = (1..=n).collect();
    let kappas: Vec<f64> = if opts.parallel {
        js.par_iter().map(|&j| solve(j)).collect::<Result<_>>()?
    } else {
        js.iter().map(|&j| solve(j)).collect::<Result<_>>()?
    };

    // κ_j is non-increasing in j; merge clusters
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for k in kappas {
        match clusters.last_mut() {
            Some(cl) if (cl[0] - k).abs() <= tol.multiplicity(cl[0]) => cl.push(k),
            _ => clusters.push(vec![k]),
        }
    }
    let mut roots = Vec::with_capacity(clusters.len());
    for cl in clusters {
        let kappa = cl.iter().sum::<f64>() / cl.len() as f64;
        let ev = linalg::hermitian_eigenvalues(&l_of_kappa(cf, g, kappa)?);
        let residual = ev.iter().fold(f64::INFINITY, |acc, x| acc.min(x.abs()));
        let scale = ev.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if residual > 1e-8 * tol.scale * (1.0 + scale) {
            return Err(Error::Numerical(format!(
                "root κ = {kappa} leaves L(κ,a) invertible (smallest singular value {residual:e})"
            )));
        }
        roots.push(SpectrumRoot {
            kappa,
            multiplicity: cl.len(),
            eigenvalue: -kappa * kappa,
            residual,
        });
    }
    let spectrum = NegativeSpectrum { roots };
    if spectrum.total_multiplicity() != n {
        return Err(Error::Numerical(format!(
            "found {} roots but L(0,a) has {n} positive eigenvalues",
            spectrum.total_multiplicity()
        )));
    }
    Ok(spectrum)
}

/// Number of positive eigenvalues of `L(κ,a)` at each grid point.
pub fn positivity_index_profile(
    cf: &CanonicalForm,
    g: &MetricGraph,
    grid: &[f64],
    tol: &Tolerances,
) -> Result<Vec<(f64, usize)>> {
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("κ grid must be sorted ascending".into()));
    }
    grid.iter()
        .map(|&k| {
            let ev = linalg::hermitian_eigenvalues(&l_of_kappa(cf, g, k)?);
            let norm = ev.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            let eps = tol.eig(norm);
            Ok((k, ev.iter().filter(|&&x| x > eps).count()))
        })
        .collect()
}

fn require_compact(g: &MetricGraph, what: &str) -> Result<()> {
    if !g.is_compact() {
        return Err(Error::InvalidArgument(format!("{what} requires a compact graph (no external edges)")));
    }
    Ok(())
}

/// `dim Ker(−Δ)` on a compact graph, equal to `dim Ker L(0,a)`.
pub fn zero_mode_dimension(cf: &CanonicalForm, g: &MetricGraph, tol: &Tolerances) -> Result<usize> {
    require_compact(g, "zero-mode analysis")?;
    Ok(kernel_dimension(&l_of_kappa(cf, g, 0.0)?, tol))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoincareCriterion {
    pub holds: bool,
    /// `dim Ker(P⊥ M(0,a) P⊥ + P)`.
    pub defect: usize,
}

/// Whether `P⊥ M(0,a) P⊥ + P` has trivial kernel on a compact graph.
pub fn poincare_criterion(p: &CMatrix, g: &MetricGraph, tol: &Tolerances) -> Result<PoincareCriterion> {
    require_compact(g, "the Poincaré criterion")?;
    let d = g.boundary_layout().dim();
    if p.shape() != (d, d) {
        return Err(Error::InvalidArgument(format!("projector must be {d}x{d}")));
    }
    let p_perp = CMatrix::identity(d, d) - p;
    let m0 = linalg::to_complex(&m_matrix(g, 0.0)?);
    let h = &p_perp * m0 * &p_perp + p;
    let defect = kernel_dimension(&h, tol);
    Ok(PoincareCriterion { holds: defect == 0, defect })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::{assemble, canonical_form, VertexCondition};
    use crate::transcendental::{eta, nu};
    use nalgebra::DMatrix;
    use std::collections::HashMap;

    fn conds(pairs: &[(&str, VertexCondition)]) -> HashMap<String, VertexCondition> {
        pairs.iter().map(|(v, c)| (v.to_string(), c.clone())).collect()
    }

    fn canonical(g: &MetricGraph, pairs: &[(&str, VertexCondition)]) -> CanonicalForm {
        canonical_form(&assemble(g, &conds(pairs)).unwrap(), &Tolerances::default()).unwrap()
    }

    fn identity_interval(a: f64) -> (MetricGraph, CanonicalForm) {
        let g = MetricGraph::interval(a).unwrap();
        let cf = CanonicalForm::from_parts(CMatrix::zeros(2, 2), CMatrix::identity(2, 2), g.boundary_layout())
            .unwrap();
        (g, cf)
    }

    #[test]
    fn identity_interval_two_roots() {
        let (g, cf) = identity_interval(3.0);
        let spec = negative_spectrum(&cf, &g, &BoundsOptions::default()).unwrap();
        let ks = spec.kappas();
        assert_eq!(ks.len(), 2);
        assert!((ks[0] - nu(1.0, 3.0).unwrap().root).abs() < 1e-10);
        assert!((ks[1] - eta(1.0 / 3.0, 3.0).unwrap().root).abs() < 1e-10);
        assert!(spec.roots.iter().all(|r| r.multiplicity == 1));
    }

    #[test]
    fn dumbbell_roots_inside_closed_form_intervals() {
        let g = MetricGraph::new(&["v1", "v2"], &[("i3", "v1", "v2", 1.0)], &[("e1", "v1"), ("e2", "v2")])
            .unwrap();
        let cf = canonical(&g, &[("v1", VertexCondition::DeltaPrime(-1.0)), ("v2", VertexCondition::DeltaPrime(-1.0))]);
        let ks = negative_spectrum(&cf, &g, &BoundsOptions::default()).unwrap().kappas();
        let s2 = 2f64.sqrt();
        assert!(ks[0] > 2.0 && ks[0] < 2.0 + s2);
        assert!(ks[1] > s2 && ks[1] < 2.0);
    }

    #[test]
    fn dirichlet_graph_is_empty() {
        let g = MetricGraph::interval(1.0).unwrap();
        let cf = canonical(&g, &[("v0", VertexCondition::Dirichlet), ("v1", VertexCondition::Dirichlet)]);
        assert!(negative_spectrum(&cf, &g, &BoundsOptions::default()).unwrap().is_empty());
    }

    #[test]
    fn double_root_is_merged() {
        // two identical decoupled δ-attractions on a star: L = diag(2, 2, 0)
        let g = MetricGraph::star(3).unwrap();
        let l = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 2.0, 0.0]));
        let cf = CanonicalForm::from_parts(CMatrix::zeros(3, 3), linalg::to_complex(&l), g.boundary_layout())
            .unwrap();
        let spec = negative_spectrum(&cf, &g, &BoundsOptions::default()).unwrap();
        assert_eq!(spec.roots.len(), 1);
        assert_eq!(spec.roots[0].multiplicity, 2);
        assert!((spec.roots[0].kappa - 2.0).abs() < 1e-12);
    }

    #[test]
    fn profile_on_star() {
        let g = MetricGraph::star(2).unwrap();
        let l = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let cf = CanonicalForm::from_parts(CMatrix::zeros(2, 2), linalg::to_complex(&l), g.boundary_layout())
            .unwrap();
        let grid: Vec<f64> = (0..=30).map(|k| 0.1 * k as f64 + 0.05).collect();
        let profile = positivity_index_profile(&cf, &g, &grid, &Tolerances::default()).unwrap();
        for (k, count) in profile {
            let want = usize::from(k < 1.0) + usize::from(k < 2.0);
            assert_eq!(count, want, "κ = {k}");
        }
        assert!(positivity_index_profile(&cf, &g, &[1.0, 0.5], &Tolerances::default()).is_err());
    }

    #[test]
    fn zero_modes() {
        let tol = Tolerances::default();
        let g = MetricGraph::new(&["a", "b", "c"], &[("x", "a", "b", 1.0), ("y", "b", "c", 2.0), ("z", "c", "a", 0.5)], &[])
            .unwrap();
        let cf = canonical(&g, &[("a", VertexCondition::Kirchhoff), ("b", VertexCondition::Kirchhoff), ("c", VertexCondition::Kirchhoff)]);
        assert_eq!(zero_mode_dimension(&cf, &g, &tol).unwrap(), 1);

        let g = MetricGraph::interval(1.0).unwrap();
        let cf = canonical(&g, &[("v0", VertexCondition::Dirichlet), ("v1", VertexCondition::Dirichlet)]);
        assert_eq!(zero_mode_dimension(&cf, &g, &tol).unwrap(), 0);

        let g = MetricGraph::new(&["p", "q"], &[("x", "p", "p", 1.0), ("y", "q", "q", 2.5)], &[]).unwrap();
        let cf = canonical(&g, &[("p", VertexCondition::Kirchhoff), ("q", VertexCondition::Kirchhoff)]);
        assert_eq!(zero_mode_dimension(&cf, &g, &tol).unwrap(), 2);

        let star = MetricGraph::star(2).unwrap();
        let cf = canonical(&star, &[("v0", VertexCondition::Kirchhoff)]);
        assert!(zero_mode_dimension(&cf, &star, &tol).is_err());
    }

    #[test]
    fn poincare_criterion_examples() {
        let tol = Tolerances::default();
        let g = MetricGraph::interval(1.0).unwrap();
        let cf = canonical(&g, &[("v0", VertexCondition::Dirichlet), ("v1", VertexCondition::Neumann)]);
        assert_eq!(poincare_criterion(&cf.p, &g, &tol).unwrap(), PoincareCriterion { holds: true, defect: 0 });

        let lp = MetricGraph::new(&["v"], &[("x", "v", "v", 1.0)], &[]).unwrap();
        let cf = canonical(&lp, &[("v", VertexCondition::Kirchhoff)]);
        assert_eq!(poincare_criterion(&cf.p, &lp, &tol).unwrap(), PoincareCriterion { holds: false, defect: 1 });

        let y = MetricGraph::new(
            &["c", "l1", "l2", "l3"],
            &[("x", "c", "l1", 1.0), ("y", "c", "l2", 1.0), ("z", "c", "l3", 1.0)],
            &[],
        )
        .unwrap();
        let cf = canonical(
            &y,
            &[
                ("c", VertexCondition::Kirchhoff),
                ("l1", VertexCondition::Dirichlet),
                ("l2", VertexCondition::Kirchhoff),
                ("l3", VertexCondition::Kirchhoff),
            ],
        );
        assert!(poincare_criterion(&cf.p, &y, &tol).unwrap().holds);
    }
}
