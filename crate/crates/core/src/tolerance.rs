//! Tolerance families. A single `scale` factor multiplies all of them.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub scale: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { scale: 1.0 }
    }
}

impl Tolerances {
    pub fn scaled(scale: f64) -> Self {
        Self { scale }
    }

    /// Residual target for the scalar transcendental equations.
    pub fn root(&self, input: f64) -> f64 {
        1e-12 * self.scale * (1.0 + input.abs())
    }

    /// Threshold below which an eigenvalue of a Hermitian matrix of norm
    /// `norm` is treated as zero.
    pub fn eig(&self, norm: f64) -> f64 {
        1e-10 * self.scale * (1.0 + norm)
    }

    /// Hermiticity tolerance for a pair (A, B).
    pub fn herm(&self, norm_a: f64, norm_b: f64) -> f64 {
        1e-10 * self.scale * (1.0 + norm_a * norm_b)
    }

    /// Rank threshold for the kernel of a d×d matrix with largest singular value `smax`.
    pub fn rank(&self, d: usize, smax: f64) -> f64 {
        d as f64 * smax * 2f64.powi(-40) * self.scale
    }

    /// Principal-cosine slack for optimality certificates.
    pub fn cert(&self) -> f64 {
        1e-8 * self.scale
    }

    /// Target for `|g_j(κ)|` when refining eigenvalue-curve zeros.
    pub fn curve(&self, norm: f64) -> f64 {
        1e-13 * self.scale * (1.0 + norm)
    }

    /// Roots closer than this are merged into one multiple root.
    pub fn multiplicity(&self, kappa: f64) -> f64 {
        1e-7 * self.scale * (1.0 + kappa)
    }
}
