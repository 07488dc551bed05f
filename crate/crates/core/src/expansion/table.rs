//! Tail integrals `G(t) = ∫_t^T f(s) ds` tabulated on a uniform grid.

use crate::quadrature::gauss_legendre;

const GL_POINTS: usize = 5;

/// Cubic Hermite interpolant of a tail integral; the nodal slopes are `−f`.
#[derive(Debug, Clone)]
pub(crate) struct TailTable {
    horizon: f64,
    h: f64,
    vals: Vec<f64>,
    slopes: Vec<f64>,
}

impl TailTable {
    pub(crate) fn build<F: Fn(f64) -> f64>(f: F, horizon: f64, panels: usize) -> Self {
        let h = horizon / panels as f64;
        let (x, w) = gauss_legendre(GL_POINTS);
        let mut vals = vec![0.0; panels + 1];
        for j in (0..panels).rev() {
            let a = j as f64 * h;
            let piece: f64 = x
                .iter()
                .zip(&w)
                .map(|(xi, wi)| wi * f(a + 0.5 * h * (xi + 1.0)))
                .sum();
            vals[j] = vals[j + 1] + 0.5 * h * piece;
        }
        let slopes = (0..=panels).map(|j| -f(j as f64 * h)).collect();
        Self {
            horizon,
            h,
            vals,
            slopes,
        }
    }

    pub(crate) fn eval(&self, t: f64) -> f64 {
        let last = self.vals.len() - 1;
        let t = t.clamp(0.0, self.horizon);
        let j = ((t / self.h) as usize).min(last - 1);
        let s = (t - j as f64 * self.h) / self.h;
        let (y0, y1) = (self.vals[j], self.vals[j + 1]);
        let (d0, d1) = (self.slopes[j] * self.h, self.slopes[j + 1] * self.h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * d1
    }
}
