//! Small dense helpers for complex Hermitian work.
//!
//! Matrices are nalgebra `DMatrix<Complex64>`; the Hermitian eigensolver and
//! the SVD run through faer. nalgebra's complex SVD loses accuracy on some
//! well-conditioned inputs and its complex eigensolver has no iteration cap.

use faer::{c64, Side};
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(c)
}

/// (H + H*) / 2
pub fn symmetrize(h: &CMatrix) -> CMatrix {
    (h + h.adjoint()).scale(0.5)
}

fn to_faer(m: &CMatrix) -> faer::Mat<c64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        c64::new(z.re, z.im)
    })
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
/// The input is symmetrized first.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let evd = match to_faer(&symmetrize(h)).self_adjoint_eigen(Side::Lower) {
        Ok(evd) => evd,
        Err(e) => panic!("Hermitian eigensolver failed on a {n}x{n} matrix: {e:?}"),
    };
    let (s, u) = (evd.S(), evd.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[i].re.total_cmp(&s[j].re));
    let values = order.iter().map(|&i| s[i].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, k)] = Complex64::new(u[(r, i)].re, u[(r, i)].im);
        }
    }
    (values, vectors)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Vec<f64> {
    let n = h.nrows();
    if n == 0 {
        return Vec::new();
    }
    let mut v = match to_faer(&symmetrize(h)).self_adjoint_eigenvalues(Side::Lower) {
        Ok(v) => v,
        Err(e) => panic!("Hermitian eigensolver failed on a {n}x{n} matrix: {e:?}"),
    };
    v.sort_by(f64::total_cmp);
    v
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    sorted_svd(m).singular_values
}

/// Spectral norm.
pub fn op_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Full SVD with singular triplets sorted by descending singular value.
pub struct SortedSvd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    /// All right singular vectors, the first `singular_values.len()` in sorted order.
    pub v: CMatrix,
}

pub fn sorted_svd(m: &CMatrix) -> SortedSvd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return SortedSvd {
            u: CMatrix::zeros(rows, 0),
            singular_values: Vec::new(),
            v: CMatrix::identity(cols, cols),
        };
    }
    let svd = match to_faer(m).svd() {
        Ok(svd) => svd,
        Err(e) => panic!("SVD failed to converge on a {rows}x{cols} matrix: {e:?}"),
    };
    let (u, s, v) = (svd.U(), svd.S(), svd.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s[j].re.total_cmp(&s[i].re));
    let mut us = CMatrix::zeros(rows, k);
    let mut vs = CMatrix::zeros(cols, cols);
    let mut sv = Vec::with_capacity(k);
    for (pos, &i) in order.iter().enumerate() {
        for r in 0..rows {
            us[(r, pos)] = Complex64::new(u[(r, i)].re, u[(r, i)].im);
        }
        sv.push(s[i].re);
    }
    // right singular vectors: sorted ones first, then the complement
    let v_order: Vec<usize> = order.iter().copied().chain(k..cols).collect();
    for (pos, &i) in v_order.iter().enumerate() {
        for r in 0..cols {
            vs[(r, pos)] = Complex64::new(v[(r, i)].re, v[(r, i)].im);
        }
    }
    SortedSvd {
        u: us,
        singular_values: sv,
        v: vs,
    }
}

/// Orthonormal basis of the null space of a square matrix, via a full SVD.
/// Singular values `<= threshold` count as zero.
pub fn null_space(m: &CMatrix, threshold: f64) -> CMatrix {
    let n = m.ncols();
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    // pad to square so the right singular vectors span the whole domain
    let padded = if m.nrows() < n {
        let mut p = CMatrix::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = sorted_svd(&padded);
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= threshold)
        .collect();
    select_columns(&svd.v, &cols)
}

pub fn select_columns(m: &CMatrix, cols: &[usize]) -> CMatrix {
    let mut out = CMatrix::zeros(m.nrows(), cols.len());
    for (k, &j) in cols.iter().enumerate() {
        out.set_column(k, &m.column(j));
    }
    out
}

/// Orthonormal basis of the column space; columns with singular value
/// `<= threshold` are dropped.
pub fn orthonormal_range(m: &CMatrix, threshold: f64) -> CMatrix {
    let svd = sorted_svd(m);
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > threshold)
        .collect();
    select_columns(&svd.u, &cols)
}

/// Cosines of the principal angles between the spans of two matrices with
/// orthonormal columns, descending.
pub fn principal_cosines(q1: &CMatrix, q2: &CMatrix) -> Vec<f64> {
    if q1.ncols() == 0 || q2.ncols() == 0 {
        return Vec::new();
    }
    singular_values(&(q1.adjoint() * q2))
        .into_iter()
        .map(|s| s.min(1.0))
        .collect()
}

/// Sine of the largest principal angle between two subspaces of equal
/// dimension given by orthonormal bases. Returns 1 when dimensions differ.
pub fn subspace_distance(q1: &CMatrix, q2: &CMatrix) -> f64 {
    if q1.ncols() != q2.ncols() {
        return 1.0;
    }
    if q1.ncols() == 0 {
        return 0.0;
    }
    let residual = q2 - q1 * (q1.adjoint() * q2);
    op_norm(&residual)
}

pub fn hermitian_residual(m: &CMatrix) -> f64 {
    op_norm(&(m - m.adjoint()))
}
