use std::ops::Mul;

/// A real 2×2 matrix stored row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2([[a11, a12], [a21, a22]])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    #[inline]
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let a = &self.0;
        [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
    }

    pub fn det(&self) -> f64 {
        let a = &self.0;
        a[0][0] * a[1][1] - a[0][1] * a[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    /// Largest eigenvalue, assuming the spectrum is real.
    pub fn top_eigenvalue(&self) -> f64 {
        let t = self.trace();
        let disc = (t * t - 4.0 * self.det()).max(0.0);
        0.5 * (t + disc.sqrt())
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        let a = &self.0;
        let f = a.iter().flatten().map(|x| x * x).sum::<f64>();
        let d = self.det();
        let disc = (f * f - 4.0 * d * d).max(0.0);
        (0.5 * (f + disc.sqrt())).sqrt()
    }

    pub fn is_positive(&self) -> bool {
        self.0.iter().flatten().all(|&x| x > 0.0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().flatten().all(|&x| x >= 0.0)
    }

    pub fn scale(&self, c: f64) -> Mat2 {
        let a = &self.0;
        Mat2([[c * a[0][0], c * a[0][1]], [c * a[1][0], c * a[1][1]]])
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        m
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, b: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &b.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_norm_dominates_perron_root() {
        let a = Mat2::new(0.9, 2.0, 0.01, 0.5);
        assert!(a.spectral_norm() > a.top_eigenvalue());
        let s = Mat2::new(2.0, 1.0, 1.0, 2.0);
        assert!((s.spectral_norm() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn product_and_determinant() {
        let a = Mat2::new(1.0, 2.0, 3.0, 4.0);
        let b = Mat2::new(0.5, -1.0, 2.0, 0.25);
        let c = a * b;
        assert_eq!(c, Mat2::new(4.5, -0.5, 9.5, -2.0));
        assert!((c.det() - a.det() * b.det()).abs() < 1e-12);
    }

    #[test]
    fn top_eigenvalue_of_diagonal() {
        assert_eq!(Mat2::new(3.0, 0.0, 0.0, 2.0).top_eigenvalue(), 3.0);
    }
}
