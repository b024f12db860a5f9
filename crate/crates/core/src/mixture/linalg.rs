use serde::{Deserialize, Serialize};

/// Symmetric 2x2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymMat2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymMat2 {
    pub const IDENTITY: SymMat2 = SymMat2::diag(1.0, 1.0);

    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub const fn diag(xx: f64, yy: f64) -> Self {
        Self { xx, xy: 0.0, yy }
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Eigenvalues, smallest first.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let half_trace = 0.5 * self.trace();
        let disc = (0.25 * (self.xx - self.yy).powi(2) + self.xy * self.xy).sqrt();
        [half_trace - disc, half_trace + disc]
    }

    pub fn add_diagonal(&self, v: f64) -> Self {
        Self::new(self.xx + v, self.xy, self.yy + v)
    }

    /// Same eigenvectors, with every eigenvalue raised to at least `floor`.
    pub fn clamp_eigenvalues(&self, floor: f64) -> Self {
        let [lo, hi] = self.eigenvalues();
        if lo >= floor {
            return *self;
        }
        if hi <= floor {
            return Self::diag(floor, floor);
        }
        // Two candidate eigenvectors for `lo`; the longer is better conditioned.
        let a = [self.xy, lo - self.xx];
        let b = [lo - self.yy, self.xy];
        let norm = |v: [f64; 2]| v[0] * v[0] + v[1] * v[1];
        let v = if norm(a) >= norm(b) { a } else { b };
        if norm(v) == 0.0 {
            return self.add_diagonal(floor - lo);
        }
        let s = (floor - lo) / norm(v);
        Self::new(
            self.xx + s * v[0] * v[0],
            self.xy + s * v[0] * v[1],
            self.yy + s * v[1] * v[1],
        )
    }

    /// `d^T A^{-1} d`, or `None` when the matrix is not positive definite.
    pub fn inverse_quadratic(&self, d: [f64; 2]) -> Option<f64> {
        let det = self.det();
        if !(det > 0.0 && self.xx > 0.0) {
            return None;
        }
        let q = (d[0] * d[0] * self.yy - 2.0 * d[0] * d[1] * self.xy + d[1] * d[1] * self.xx) / det;
        Some(q.max(0.0))
    }
}
