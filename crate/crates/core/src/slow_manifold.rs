//! Slow manifold of the scaling chart as a convergent power series.
//!
//! With `mu = r2 mu2` the chart-2 system reads `u' = f(u, y2)`,
//! `y2' = r2 g(u, y2)` with `u = (x2, z2)`. The manifold is the graph
//! `u = M(y2) = h0(y2) + r2 h1(y2) + r2 ũ(v)`, `v = y2 + mu2 / (2 lambda)`,
//! where `h0 = (-y2^2, y2)`, `h1` comes from formal matching, and `ũ` is
//! the fixed point of the coefficientwise resolvent iteration
//! `ũ_n <- ũ_n - (r2 n I - A)^{-1} E(ũ)_n`,
//! `E(ũ) = (r2 g M' - f(M)) / (lambda r2)`,
//! `A = lambda^{-1} [[0, -1], [1, -mu2/lambda]]`.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::blowup::BlowupFields;
use crate::error::{CanardError, Result};
use crate::poly::{Coeff, Poly, Series, MAXV};
use crate::system::SlowFastSystem;

/// Chart-2 field with `mu = r2 mu2` substituted, as polynomials in
/// `(x2, y2, z2, r2)`: `f = (x2', z2')` and `g = y2' / r2`.
#[derive(Debug, Clone)]
pub struct ScaledChart2 {
    pub mu2: f64,
    pub lambda: f64,
    pub f: [Poly; 2],
    pub g: Poly,
}

impl ScaledChart2 {
    pub fn new(sys: &SlowFastSystem, mu2: f64) -> Self {
        let bf = BlowupFields::new(sys);
        let scale_mu = |p: &Poly| {
            p.remap(4, |e| {
                let mut f = [0u8; MAXV];
                f[0] = e[0];
                f[1] = e[1];
                f[2] = e[2];
                f[3] = e[3] + e[4];
                (f, mu2.powi(e[4] as i32))
            })
        };
        let g = scale_mu(&bf.chart2[1]).div_var_pow(3, 1).expect("y2' is O(r2) once mu = r2 mu2");
        ScaledChart2 { mu2, lambda: sys.lambda, f: [scale_mu(&bf.chart2[0]), scale_mu(&bf.chart2[2])], g }
    }

    /// `(f_x, f_z, g)` at a point.
    pub fn eval(&self, x2: f64, y2: f64, z2: f64, r2: f64) -> [f64; 3] {
        let v = [x2, y2, z2, r2];
        [self.f[0].eval(&v), self.f[1].eval(&v), self.g.eval(&v)]
    }

    pub fn eval_generic<T: Coeff>(&self, x2: &T, y2: &T, z2: &T, r2: &T) -> [T; 3] {
        let v = [x2.clone(), y2.clone(), z2.clone(), r2.clone()];
        [self.f[0].eval_generic(&v), self.f[1].eval_generic(&v), self.g.eval_generic(&v)]
    }
}

/// Univariate polynomial in y2, coefficients in increasing degree.
pub type YPoly = Vec<f64>;

fn ypoly_eval(p: &[f64], y: f64) -> f64 {
    p.iter().rev().fold(0.0, |a, c| a * y + c)
}

fn ypoly_deriv(p: &[f64], y: f64) -> f64 {
    p.iter().enumerate().skip(1).rev().fold(0.0, |a, (k, c)| a * y + k as f64 * c)
}

/// Formal slow-manifold coefficients `h_0, ..., h_order` (each a pair of
/// polynomials in y2) from matching powers of r2.
pub fn formal_coefficients(sys: &SlowFastSystem, mu2: f64, order: usize) -> Result<Vec<[YPoly; 2]>> {
    if order < 1 {
        return Err(CanardError::InvalidInput("order must be at least 1".into()));
    }
    let sc = ScaledChart2::new(sys, mu2);
    // bivariate polynomials in (y2, r2)
    let y = Poly::var(2, 0);
    let r = Poly::var(2, 1);
    let mut mx = y.mul(&y).scale(-1.0);
    let mut mz = y.clone();
    let mut out: Vec<[YPoly; 2]> = vec![[vec![0.0, 0.0, -1.0], vec![0.0, 1.0]]];
    for n in 1..=order {
        let subs = [mx.clone(), y.clone(), mz.clone(), r.clone()];
        let fx = sc.f[0].compose(&subs, None);
        let fz = sc.f[1].compose(&subs, None);
        let g = sc.g.compose(&subs, None);
        let lhs_x = r.mul(&g).mul(&mx.derivative(0));
        let lhs_z = r.mul(&g).mul(&mz.derivative(0));
        let rx = coeff_in_r(&lhs_x.sub(&fx), n);
        let rz = coeff_in_r(&lhs_z.sub(&fz), n);
        // Df(h0)^{-1} = [[2 y2, 1], [-1, 0]]
        let hx = rx.mul(&Poly::var(1, 0)).scale(2.0).add(&rz);
        let hz = rx.scale(-1.0);
        let hxv = to_ypoly(&hx);
        let hzv = to_ypoly(&hz);
        let rn = r_pow(n);
        mx = mx.add(&lift(&hx).mul(&rn));
        mz = mz.add(&lift(&hz).mul(&rn));
        out.push([hxv, hzv]);
    }
    Ok(out)
}

fn r_pow(n: usize) -> Poly {
    Poly::monomial(2, &[(1, n as u8)], 1.0)
}

fn coeff_in_r(p: &Poly, n: usize) -> Poly {
    let mut q = Poly::zero(1);
    for (e, c) in p.terms() {
        if e[1] as usize == n {
            let mut f = [0u8; MAXV];
            f[0] = e[0];
            q.add_term(f, *c);
        }
    }
    q
}

fn lift(p: &Poly) -> Poly {
    p.remap(2, |e| (*e, 1.0))
}

fn to_ypoly(p: &Poly) -> YPoly {
    let d = p.degree_in(0);
    let mut v = vec![0.0; d + 1];
    for (e, c) in p.terms() {
        v[e[0] as usize] += c;
    }
    v
}

/// Supremum over `y2` in `grid` of the invariance defect
/// `|r2 g M' - f(M)|` of the truncated formal expansion of given order.
pub fn formal_defect(sys: &SlowFastSystem, coeffs: &[[YPoly; 2]], mu2: f64, r2: f64, grid: &[f64]) -> f64 {
    let sc = ScaledChart2::new(sys, mu2);
    grid.iter()
        .map(|&y| {
            let mut m = [0.0; 2];
            let mut dm = [0.0; 2];
            for (k, h) in coeffs.iter().enumerate() {
                let rk = r2.powi(k as i32);
                for i in 0..2 {
                    m[i] += rk * ypoly_eval(&h[i], y);
                    dm[i] += rk * ypoly_deriv(&h[i], y);
                }
            }
            let [fx, fz, g] = sc.eval(m[0], y, m[1], r2);
            (r2 * g * dm[0] - fx).abs().max((r2 * g * dm[1] - fz).abs())
        })
        .fold(0.0, f64::max)
}

/// Truncated R^2-valued power series with the weighted norm
/// `sum |h_n| nu^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorPowerSeries {
    pub coeffs: Vec<[f64; 2]>,
    pub nu: f64,
}

impl VectorPowerSeries {
    pub fn zero(n: usize, nu: f64) -> Self {
        VectorPowerSeries { coeffs: vec![[0.0; 2]; n + 1], nu }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn norm(&self) -> f64 {
        let mut w = 1.0;
        let mut s = 0.0;
        for c in &self.coeffs {
            s += c[0].hypot(c[1]) * w;
            w *= self.nu;
        }
        s
    }

    /// Weighted norm of the top tenth of the coefficients.
    pub fn tail_norm(&self) -> f64 {
        let n = self.coeffs.len();
        let start = n - (n / 10).max(1);
        self.coeffs
            .iter()
            .enumerate()
            .skip(start)
            .map(|(k, c)| c[0].hypot(c[1]) * self.nu.powi(k as i32))
            .sum()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        let mut w = 1.0;
        let mut s = 0.0;
        for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
            s += (a[0] - b[0]).hypot(a[1] - b[1]) * w;
            w *= self.nu;
        }
        s
    }

    pub fn eval(&self, v: f64) -> [f64; 2] {
        let mut r = [0.0; 2];
        for c in self.coeffs.iter().rev() {
            r[0] = r[0] * v + c[0];
            r[1] = r[1] * v + c[1];
        }
        r
    }

    pub fn eval_derivative(&self, v: f64) -> [f64; 2] {
        let mut r = [0.0; 2];
        for (k, c) in self.coeffs.iter().enumerate().skip(1).rev() {
            r[0] = r[0] * v + k as f64 * c[0];
            r[1] = r[1] * v + k as f64 * c[1];
        }
        r
    }

    fn component(&self, i: usize) -> Series {
        Series::from_coeffs(self.coeffs.iter().map(|c| c[i]).collect(), self.degree())
    }

    fn from_components(a: &Series, b: &Series, nu: f64) -> Self {
        VectorPowerSeries { coeffs: a.c.iter().zip(&b.c).map(|(x, y)| [*x, *y]).collect(), nu }
    }
}

/// `A(0, mu2)` of the resolvent iteration.
pub fn resolvent_matrix(mu2: f64, lambda: f64) -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, -mu2 / lambda) / lambda
}

/// `(q I - A)^{-1}`.
pub fn resolvent(q: f64, mu2: f64, lambda: f64) -> Matrix2<f64> {
    (Matrix2::identity() * q - resolvent_matrix(mu2, lambda))
        .try_inverse()
        .expect("A has no real eigenvalues")
}

/// Smallest C with `|(qI - A)^{-1}| <= C / (q + 1)` on a dense grid of q >= 0.
pub fn resolvent_constant(mu2: f64, lambda: f64) -> f64 {
    let mut c: f64 = 0.0;
    let mut q = 0.0;
    while q <= 1e4 {
        c = c.max((q + 1.0) * resolvent(q, mu2, lambda).norm_l2());
        q += if q < 10.0 { 1e-3 } else { q * 1e-3 };
    }
    c
}

trait NormL2 {
    fn norm_l2(&self) -> f64;
}

impl NormL2 for Matrix2<f64> {
    fn norm_l2(&self) -> f64 {
        self.singular_values().max()
    }
}

/// Applies `T_n = (r2 n I - A)^{-1}` coefficientwise.
pub fn apply_t(f: &VectorPowerSeries, r2: f64, mu2: f64, lambda: f64) -> VectorPowerSeries {
    let coeffs = f
        .coeffs
        .iter()
        .enumerate()
        .map(|(n, c)| {
            let v = resolvent(r2 * n as f64, mu2, lambda) * Vector2::new(c[0], c[1]);
            [v[0], v[1]]
        })
        .collect();
    VectorPowerSeries { coeffs, nu: f.nu }
}

/// Operator norm of `T_k` in the Euclidean norm.
pub fn t_norm(k: usize, r2: f64, mu2: f64, lambda: f64) -> f64 {
    resolvent(r2 * k as f64, mu2, lambda).norm_l2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ManifoldConfig {
    pub nu: f64,
    pub n: usize,
    pub max_iter: usize,
    pub fp_tol: f64,
    pub sigma: f64,
    pub r2_max: f64,
    pub mu2_max: f64,
}

impl Default for ManifoldConfig {
    fn default() -> Self {
        ManifoldConfig { nu: 0.2, n: 40, max_iter: 400, fp_tol: 1e-14, sigma: 1.0, r2_max: 0.1, mu2_max: 0.1 }
    }
}

impl ManifoldConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu <= 0.2) {
            return Err(CanardError::InvalidInput(format!("nu must lie in (0, 0.2], got {}", self.nu)));
        }
        if self.n < 2 || self.n > 200 {
            return Err(CanardError::InvalidInput(format!("truncation degree {} out of range", self.n)));
        }
        if !(self.fp_tol > 0.0) || self.max_iter == 0 || !(self.sigma > 0.0) {
            return Err(CanardError::InvalidInput("fp_tol, max_iter and sigma must be positive".into()));
        }
        Ok(())
    }
}

/// Converged slow-manifold series with everything needed to undo the
/// transformations.
#[derive(Debug, Clone)]
pub struct ManifoldResult {
    pub series: VectorPowerSeries,
    pub r2: f64,
    pub mu2: f64,
    pub lambda: f64,
    /// `h1(y2)` as coefficient lists for (x2, z2).
    pub h1: [YPoly; 2],
    /// `v = y2 + shift`.
    pub shift: f64,
    /// Successive iterate distances.
    pub distances: Vec<f64>,
    pub iterations: usize,
    pub tail: f64,
    pub chart: ScaledChart2,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifoldExport {
    pub r2: f64,
    pub mu2: f64,
    pub lambda: f64,
    pub nu: f64,
    pub shift: f64,
    pub h1_x: Vec<f64>,
    pub h1_z: Vec<f64>,
    pub coeffs: Vec<[f64; 2]>,
    pub norm: f64,
    pub tail: f64,
    pub iterations: usize,
    pub contraction_ratio: f64,
    pub residual: f64,
}

impl ManifoldResult {
    pub fn nu(&self) -> f64 {
        self.series.nu
    }

    /// Largest ratio of successive iterate distances above the noise floor.
    pub fn contraction_ratio(&self) -> f64 {
        let floor = 1e-13 * self.distances.first().copied().unwrap_or(0.0).max(1e-300);
        self.distances
            .windows(2)
            .filter(|w| w[1] > floor.max(1e-15))
            .map(|w| w[1] / w[0])
            .fold(0.0, f64::max)
    }

    /// Graph value and y2-derivative without the radius check.
    pub fn eval_with_derivative(&self, y2: f64) -> ([f64; 2], [f64; 2]) {
        let v = y2 + self.shift;
        let u = self.series.eval(v);
        let du = self.series.eval_derivative(v);
        let r = self.r2;
        let m = [
            -y2 * y2 + r * ypoly_eval(&self.h1[0], y2) + r * u[0],
            y2 + r * ypoly_eval(&self.h1[1], y2) + r * u[1],
        ];
        let dm = [
            -2.0 * y2 + r * ypoly_deriv(&self.h1[0], y2) + r * du[0],
            1.0 + r * ypoly_deriv(&self.h1[1], y2) + r * du[1],
        ];
        (m, dm)
    }

    /// `E(ũ)` evaluated pointwise at `v`.
    pub fn defect_at(&self, v: f64) -> [f64; 2] {
        if self.r2 == 0.0 {
            return [0.0; 2];
        }
        let y2 = v - self.shift;
        let (m, dm) = self.eval_with_derivative(y2);
        let [fx, fz, g] = self.chart.eval(m[0], y2, m[1], self.r2);
        let s = self.lambda * self.r2;
        [(self.r2 * g * dm[0] - fx) / s, (self.r2 * g * dm[1] - fz) / s]
    }

    pub fn export(&self) -> ManifoldExport {
        let nu = self.nu();
        let grid: Vec<f64> = (0..=40).map(|k| -nu + 2.0 * nu * k as f64 / 40.0).collect();
        ManifoldExport {
            r2: self.r2,
            mu2: self.mu2,
            lambda: self.lambda,
            nu,
            shift: self.shift,
            h1_x: self.h1[0].clone(),
            h1_z: self.h1[1].clone(),
            coeffs: self.series.coeffs.clone(),
            norm: self.series.norm(),
            tail: self.tail,
            iterations: self.iterations,
            contraction_ratio: self.contraction_ratio(),
            residual: invariance_residual(self, &grid).unwrap_or(f64::NAN),
        }
    }
}

fn defect_series(
    chart: &ScaledChart2,
    h1: &[YPoly; 2],
    u: &VectorPowerSeries,
    r2: f64,
    shift: f64,
) -> VectorPowerSeries {
    let n = u.degree();
    let y = Series::linear(-shift, 1.0, n);
    let r = y.constant_like(r2);
    let h1s = |p: &YPoly| {
        let poly = {
            let mut q = Poly::zero(1);
            for (k, c) in p.iter().enumerate() {
                let mut e = [0u8; MAXV];
                e[0] = k as u8;
                q.add_term(e, *c);
            }
            q
        };
        if poly.is_zero() {
            y.constant_like(0.0)
        } else {
            poly.eval_generic(&[y.clone()])
        }
    };
    let mut mx = y.mul(&y).scale(-1.0);
    mx.add_assign(&h1s(&h1[0]).scale(r2));
    mx.add_assign(&u.component(0).scale(r2));
    let mut mz = y.clone();
    mz.add_assign(&h1s(&h1[1]).scale(r2));
    mz.add_assign(&u.component(1).scale(r2));
    let [fx, fz, g] = chart.eval_generic(&mx, &y, &mz, &r);
    let s = 1.0 / (chart.lambda * r2);
    let ex = g.mul(&mx.derivative()).scale(r2).sub(&fx).scale(s);
    let ez = g.mul(&mz.derivative()).scale(r2).sub(&fz).scale(s);
    VectorPowerSeries::from_components(&ex, &ez, u.nu)
}

/// Solves for the slow-manifold series at `(r2, mu2)` starting from `ũ = 0`.
pub fn solve_invariant_series(
    sys: &SlowFastSystem,
    r2: f64,
    mu2: f64,
    cfg: &ManifoldConfig,
) -> Result<ManifoldResult> {
    solve_invariant_series_from(sys, r2, mu2, cfg, None)
}

/// As [`solve_invariant_series`] with an optional initial iterate.
pub fn solve_invariant_series_from(
    sys: &SlowFastSystem,
    r2: f64,
    mu2: f64,
    cfg: &ManifoldConfig,
    init: Option<&VectorPowerSeries>,
) -> Result<ManifoldResult> {
    cfg.validate()?;
    sys.require_nondegenerate()?;
    if !(r2 >= 0.0) || r2 > cfg.r2_max || mu2.abs() > cfg.mu2_max {
        return Err(CanardError::OutOfDomain(format!(
            "(r2, mu2) = ({r2}, {mu2}) outside r2 in [0, {}], |mu2| <= {}",
            cfg.r2_max, cfg.mu2_max
        )));
    }
    let lambda = sys.lambda;
    let chart = ScaledChart2::new(sys, mu2);
    let formal = formal_coefficients(sys, mu2, 1)?;
    let h1 = formal[1].clone();
    let shift = mu2 / (2.0 * lambda);
    let mut u = match init {
        Some(s) if s.degree() == cfg.n => VectorPowerSeries { coeffs: s.coeffs.clone(), nu: cfg.nu },
        Some(_) => return Err(CanardError::InvalidInput("initial series has the wrong degree".into())),
        None => VectorPowerSeries::zero(cfg.n, cfg.nu),
    };
    let mut distances = Vec::new();
    if r2 == 0.0 {
        let series = VectorPowerSeries::zero(cfg.n, cfg.nu);
        return Ok(ManifoldResult {
            series,
            r2,
            mu2,
            lambda,
            h1,
            shift,
            distances,
            iterations: 0,
            tail: 0.0,
            chart,
        });
    }

    let resolvents: Vec<Matrix2<f64>> = (0..=cfg.n).map(|k| resolvent(r2 * k as f64, mu2, lambda)).collect();
    let mut ball = f64::INFINITY;
    let mut increases = 0;
    for it in 1..=cfg.max_iter {
        let e = defect_series(&chart, &h1, &u, r2, shift);
        let mut next = u.clone();
        for (k, c) in next.coeffs.iter_mut().enumerate() {
            let d = resolvents[k] * Vector2::new(e.coeffs[k][0], e.coeffs[k][1]);
            c[0] -= d[0];
            c[1] -= d[1];
        }
        let dist = next.distance(&u);
        if !dist.is_finite() {
            return Err(CanardError::NonContraction { iteration: it, ratio: f64::INFINITY });
        }
        if let Some(&prev) = distances.last() {
            if dist > prev && dist > 10.0 * cfg.fp_tol {
                increases += 1;
                if increases >= 3 {
                    return Err(CanardError::NonContraction { iteration: it, ratio: dist / prev });
                }
            } else {
                increases = 0;
            }
        }
        distances.push(dist);
        u = next;
        if it == 1 && init.is_none() {
            ball = cfg.sigma * 2.0 * u.norm().max(1e-300);
        }
        let norm = u.norm();
        if norm > ball && init.is_none() {
            return Err(CanardError::BallExit { norm, bound: ball });
        }
        if dist <= cfg.fp_tol {
            let tail = u.tail_norm();
            log::debug!("slow manifold r2={r2} mu2={mu2}: {it} iterations, tail {tail:e}");
            return Ok(ManifoldResult {
                series: u,
                r2,
                mu2,
                lambda,
                h1,
                shift,
                distances,
                iterations: it,
                tail,
                chart,
            });
        }
    }
    Err(CanardError::FixedPointMaxIter(cfg.max_iter))
}

/// Graph value `(x2, z2)` of the slow manifold at `y2`.
pub fn eval_manifold(res: &ManifoldResult, y2: f64) -> Result<(f64, f64)> {
    let v = y2 + res.shift;
    if v.abs() > res.nu() * (1.0 + 1e-12) {
        return Err(CanardError::OutOfDomain(format!("|v| = {} exceeds the radius {}", v.abs(), res.nu())));
    }
    let (m, _) = res.eval_with_derivative(y2);
    Ok((m[0], m[1]))
}

/// Supremum of `|E(ũ)|` over the grid of recentered values `v`.
pub fn invariance_residual(res: &ManifoldResult, grid: &[f64]) -> Result<f64> {
    let nu = res.nu();
    let mut sup: f64 = 0.0;
    for &v in grid {
        if v.abs() > nu * (1.0 + 1e-12) {
            return Err(CanardError::OutOfDomain(format!("grid point {v} outside [-{nu}, {nu}]")));
        }
        let e = res.defect_at(v);
        sup = sup.max(e[0].hypot(e[1]));
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blowup::{BlowupFields, Chart2Point};

    fn canonical() -> SlowFastSystem {
        SlowFastSystem::canonical(0.0, 1.0)
    }

    fn grid(nu: f64) -> Vec<f64> {
        (0..=20).map(|k| -nu + 2.0 * nu * k as f64 / 20.0).collect()
    }

    #[test]
    fn leading_coefficient_is_critical_manifold() {
        let c = formal_coefficients(&canonical(), 0.0, 2).unwrap();
        assert_eq!(ypoly_eval(&c[0][0], 0.3), -0.09);
        assert_eq!(ypoly_eval(&c[0][1], 0.3), 0.3);
    }

    #[test]
    fn formal_defect_slope() {
        let sys = canonical();
        let g = grid(0.2);
        for order in 1..=3 {
            let c = formal_coefficients(&sys, 0.0, order).unwrap();
            let d1 = formal_defect(&sys, &c, 0.0, 1e-2, &g);
            let d2 = formal_defect(&sys, &c, 0.0, 1e-3, &g);
            let slope = (d1 / d2).log10();
            assert!(slope >= order as f64 + 0.8, "order {order}: slope {slope}");
        }
    }

    #[test]
    fn recentering_is_identity_at_zero_mu2() {
        let res = solve_invariant_series(&canonical(), 0.0, 0.0, &ManifoldConfig::default()).unwrap();
        assert_eq!(res.shift, 0.0);
        for v in [-0.1, 0.05, 0.2] {
            let (x, z) = eval_manifold(&res, v).unwrap();
            assert_eq!((x, z), (-v * v, v));
        }
    }

    #[test]
    fn resolvent_examples() {
        let f = VectorPowerSeries { coeffs: vec![[1.0, 0.0]], nu: 0.2 };
        let t = apply_t(&f, 0.3, 0.0, 1.0);
        assert!((t.coeffs[0][0]).abs() < 1e-15 && (t.coeffs[0][1] - 1.0).abs() < 1e-15);
        let z = apply_t(&VectorPowerSeries::zero(5, 0.2), 0.1, 0.02, 1.0);
        assert_eq!(z.norm(), 0.0);
        let c = resolvent_constant(0.0, 1.0);
        assert!(t_norm(100, 0.1, 0.0, 1.0) <= c / 11.0);
        for k in [0, 1, 5, 50, 1000] {
            assert!(t_norm(k, 0.1, 0.05, 1.0) <= resolvent_constant(0.05, 1.0) / (0.1 * k as f64 + 1.0) + 1e-12);
        }
    }

    #[test]
    fn zero_r2_gives_critical_manifold() {
        let res = solve_invariant_series(&canonical(), 0.0, 0.05, &ManifoldConfig::default()).unwrap();
        assert_eq!(res.series.norm(), 0.0);
        let y = 0.1 - res.shift;
        let (x, z) = eval_manifold(&res, y).unwrap();
        assert!((x + y * y).abs() < 1e-15 && (z - y).abs() < 1e-15);
        assert_eq!(invariance_residual(&res, &grid(0.2)).unwrap(), 0.0);
    }

    #[test]
    fn fixed_point_at_r2_005() {
        let cfg = ManifoldConfig { n: 30, ..ManifoldConfig::default() };
        let res = solve_invariant_series(&canonical(), 0.05, 0.0, &cfg).unwrap();
        let r = invariance_residual(&res, &grid(0.2)).unwrap();
        assert!(r <= 1e-8, "residual {r}");
        assert!(res.contraction_ratio() <= 0.5, "ratio {}", res.contraction_ratio());
        let (x, z) = eval_manifold(&res, 0.0).unwrap();
        let h1x = ypoly_eval(&res.h1[0], 0.0);
        let h1z = ypoly_eval(&res.h1[1], 0.0);
        let dev = (x - 0.05 * h1x).hypot(z - 0.05 * h1z);
        assert!(dev <= 0.05 * res.series.norm() + 1e-15);
    }

    #[test]
    fn manifold_is_tangent_to_the_flow() {
        let sys = canonical();
        let (r2, mu2) = (0.05, 0.03);
        let res = solve_invariant_series(&sys, r2, mu2, &ManifoldConfig::default()).unwrap();
        let bf = BlowupFields::new(&sys);
        for k in 0..10 {
            let y2 = -0.15 + 0.03 * k as f64 - res.shift;
            let (m, dm) = res.eval_with_derivative(y2);
            let v = bf.field_chart2(&Chart2Point::new(r2, m[0], y2, m[1]), r2 * mu2);
            let d = (v[0] - dm[0] * v[1]).hypot(v[2] - dm[1] * v[1]);
            assert!(d <= 1e-7, "{d}");
        }
    }

    #[test]
    fn truncation_sweep_improves_residual() {
        let sys = canonical();
        let g = grid(0.2);
        let mut last = f64::INFINITY;
        for n in [10, 20, 30] {
            let cfg = ManifoldConfig { n, ..ManifoldConfig::default() };
            let r = invariance_residual(&solve_invariant_series(&sys, 0.05, 0.02, &cfg).unwrap(), &g).unwrap();
            assert!(r < last, "N = {n}: {r} vs {last}");
            last = r;
        }
    }

    #[test]
    fn outside_box_rejected() {
        let cfg = ManifoldConfig::default();
        assert!(matches!(solve_invariant_series(&canonical(), 0.5, 0.0, &cfg), Err(CanardError::OutOfDomain(_))));
        let res = solve_invariant_series(&canonical(), 0.05, 0.0, &cfg).unwrap();
        assert!(eval_manifold(&res, 0.5).is_err());
    }
}
