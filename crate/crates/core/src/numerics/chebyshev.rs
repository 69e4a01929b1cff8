use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Chebyshev-Lobatto grid on `[a, b]` with a spectral cumulative-integration
/// matrix anchored at the right end `b`.
///
/// Node `j` sits at `(a+b)/2 + (b-a)/2 cos(j pi / n)`, so node 0 is `b`.
#[derive(Debug, Clone)]
pub struct ChebyshevGrid {
    pub a: f64,
    pub b: f64,
    nodes: Vec<f64>,
    cumint: DMatrix<f64>,
}

impl ChebyshevGrid {
    pub fn new(a: f64, b: f64, n: usize) -> Self {
        assert!(n >= 2 && b > a);
        let nodes: Vec<f64> = (0..=n)
            .map(|j| 0.5 * (a + b) + 0.5 * (b - a) * (j as f64 * PI / n as f64).cos())
            .collect();
        let cumint = Self::build_cumint(n, 0.5 * (b - a));
        ChebyshevGrid { a, b, nodes, cumint }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n(&self) -> usize {
        self.nodes.len() - 1
    }

    // Column m of the matrix maps the m-th unit vector of nodal values to
    // the nodal values of its antiderivative vanishing at node 0.
    fn build_cumint(n: usize, scale: f64) -> DMatrix<f64> {
        let nf = n as f64;
        let cosm = |j: usize, k: usize| ((j * k) as f64 * PI / nf).cos();
        let mut m = DMatrix::zeros(n + 1, n + 1);
        for col in 0..=n {
            // coefficients of the interpolant of e_col
            let w = if col == 0 || col == n { 0.5 } else { 1.0 };
            let mut a = vec![0.0; n + 3];
            for (k, ak) in a.iter_mut().enumerate().take(n + 1) {
                let mut c = 2.0 / nf * w * cosm(col, k);
                if k == 0 || k == n {
                    c *= 0.5;
                }
                *ak = c;
            }
            // antiderivative coefficients
            let mut big = vec![0.0; n + 2];
            big[1] = a[0] - 0.5 * a[2];
            for k in 2..=n + 1 {
                big[k] = (a[k - 1] - a[k + 1]) / (2.0 * k as f64);
            }
            let value_at = |j: usize| -> f64 {
                let x = (j as f64 * PI / nf).cos();
                let theta = x.clamp(-1.0, 1.0).acos();
                big.iter().enumerate().map(|(k, c)| c * (k as f64 * theta).cos()).sum()
            };
            let ref0 = value_at(0);
            for j in 0..=n {
                m[(j, col)] = scale * (value_at(j) - ref0);
            }
        }
        m
    }

    /// Nodal values of `t -> integral_b^t f`.
    pub fn integrate_from_right(&self, values: &[f64]) -> Vec<f64> {
        let n1 = self.nodes.len();
        (0..n1).map(|j| (0..n1).map(|m| self.cumint[(j, m)] * values[m]).sum()).collect()
    }

    /// Barycentric interpolation of nodal values at `t`.
    pub fn interpolate(&self, values: &[f64], t: f64) -> f64 {
        let n = self.n();
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, (&tj, &fj)) in self.nodes.iter().zip(values).enumerate() {
            let d = t - tj;
            if d == 0.0 {
                return fj;
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                w *= 0.5;
            }
            num += w * fj / d;
            den += w / d;
        }
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_exponential() {
        let g = ChebyshevGrid::new(0.0, 4.0, 40);
        let vals: Vec<f64> = g.nodes().iter().map(|t| t.exp()).collect();
        let int = g.integrate_from_right(&vals);
        for (t, v) in g.nodes().iter().zip(&int) {
            let exact = t.exp() - 4f64.exp();
            assert!((v - exact).abs() < 1e-11 * 4f64.exp(), "{t} {v} {exact}");
        }
    }

    #[test]
    fn interpolation_is_spectral() {
        let g = ChebyshevGrid::new(-1.0, 2.0, 30);
        let vals: Vec<f64> = g.nodes().iter().map(|t| (2.0 * t).sin()).collect();
        for k in 0..17 {
            let t = -1.0 + 3.0 * k as f64 / 16.5;
            assert!((g.interpolate(&vals, t) - (2.0 * t).sin()).abs() < 1e-12);
        }
    }
}
