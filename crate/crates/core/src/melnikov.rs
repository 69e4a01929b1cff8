//! Small periodic orbits of the scaling chart.
//!
//! The slow manifold is straightened, `(x2, z2) = M(y2) + u`, and the
//! return map from `{u2 = 0, u1 < 0}` to itself is measured against the
//! layer orbits `phi_h` with the adjoint solution
//! `psi_h = -h^{-1} exp(int_t^T 2 z_2h) (z_2h', -x_2h')`.
//! All integrations run on the amplitude-scaled variables `u = h w`, so
//! `h = 0` is a regular limit.

use nalgebra::{Complex, Matrix3};
use serde::{Deserialize, Serialize};

use crate::blowup::BlowupFields;
use crate::error::{CanardError, Result};
use crate::numerics::{
    bracketed_root, central_jacobian, integrate_to_section, max_norm, newton_solve, Crossing, SectionHit,
    SectionSpec, TimeDirection, Tolerances,
};
use crate::poly::{Poly, UPoly};
use crate::slow_manifold::{solve_invariant_series, ManifoldConfig, ManifoldResult};
use crate::system::SlowFastSystem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StraightenedState {
    pub u: [f64; 2],
    pub y2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MelnikovValue {
    pub d1: f64,
    pub d2: f64,
    pub d1_hat: f64,
    pub transition_time: f64,
    /// `w1(T) + 1` read directly off the perturbed orbit.
    pub d1_hat_direct: f64,
}

impl MelnikovValue {
    pub fn hat(&self) -> [f64; 2] {
        [self.d1_hat, self.d2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallBranchPoint {
    pub h: f64,
    pub r2: f64,
    pub y2_bar: f64,
    pub mu2_bar: f64,
    pub residual: f64,
    pub period: f64,
}

impl SmallBranchPoint {
    pub fn mu(&self) -> f64 {
        self.r2 * self.mu2_bar
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MelnikovConfig {
    pub manifold: ManifoldConfig,
    pub tol: Tolerances,
    /// Largest admissible amplitude.
    pub h_max: f64,
    /// Step of the central differences of the Melnikov function.
    pub fd_step: f64,
}

impl Default for MelnikovConfig {
    fn default() -> Self {
        MelnikovConfig {
            // the Hopf value has mu2 close to -r2, so r2 = 0.1 needs more room than 0.1
            manifold: ManifoldConfig { mu2_max: 0.25, ..ManifoldConfig::default() },
            tol: Tolerances { abs_tol: 1e-13, rel_tol: 1e-12, newton_tol: 1e-10, newton_max_iter: 30, event_tol: 1e-14 },
            h_max: 6.0,
            fd_step: 1e-5,
        }
    }
}

fn check_manifold_domain(res: &ManifoldResult, y2: f64) -> Result<()> {
    let v = y2 + res.shift;
    if !(v.abs() <= res.nu()) {
        return Err(CanardError::OutOfDomain(format!(
            "y2 = {y2} is outside the slow-manifold chart |y2 + {}| <= {}",
            res.shift,
            res.nu()
        )));
    }
    Ok(())
}

/// Field of the straightened system `(u1', u2', y2')`.
pub fn straightened_field(res: &ManifoldResult, s: &StraightenedState) -> Result<[f64; 3]> {
    check_manifold_domain(res, s.y2)?;
    let (m, dm) = res.eval_with_derivative(s.y2);
    let [fx, fz, g] = res.chart.eval(m[0] + s.u[0], s.y2, m[1] + s.u[1], res.r2);
    let y2dot = res.r2 * g;
    Ok([fx - dm[0] * y2dot, fz - dm[1] * y2dot, y2dot])
}

/// Amplitude-scaled straightened field: returns `w'` with `u = h w`, the
/// difference quotient `(F(h w) - F(0)) / h` taken exactly, and `y2' / r2`.
fn scaled_field(res: &ManifoldResult, h: f64, w: [f64; 2], y2: f64) -> ([f64; 2], f64) {
    let (m, dm) = res.eval_with_derivative(y2);
    let x = UPoly(vec![m[0], w[0]]);
    let z = UPoly(vec![m[1], w[1]]);
    let y = UPoly(vec![y2]);
    let r = UPoly(vec![res.r2]);
    let [fx, fz, g] = res.chart.eval_generic(&x, &y, &z, &r);
    let dq = |p: &UPoly| p.0.iter().skip(1).rev().fold(0.0, |a, c| a * h + c);
    let gq = dq(&g);
    let r2 = res.r2;
    ([dq(&fx) - dm[0] * r2 * gq, dq(&fz) - dm[1] * r2 * gq], g.eval(h))
}

/// Falling crossing of `{w2 = 0}` on the side `w1 < 0`.
fn return_section() -> SectionSpec<'static> {
    SectionSpec::new(|s: &[f64]| if s[0] < 0.0 { s[1] } else { 1.0 }, Crossing::Falling)
}

fn horizon(h: f64) -> f64 {
    100.0 + 20.0 * h
}

/// Scaled layer orbit `phi_h / h` with `Z = int 2 z_2h`.
fn scaled_layer_field(h: f64) -> impl Fn(f64, &[f64], &mut [f64]) {
    move |_t, s, ds| {
        ds[0] = -s[1];
        ds[1] = s[0] + h * s[1] * s[1];
        ds[2] = 2.0 * h * s[1];
        ds[3] = (-s[2]).exp() * s[1] * s[1];
    }
}

/// Period `T0(h)` of the layer orbit through `(-h, 0)`, extended to `h = 0`.
pub fn layer_period(h: f64, tol: &Tolerances) -> Result<f64> {
    if !(h >= 0.0) {
        return Err(CanardError::InvalidInput(format!("amplitude must be nonnegative, got {h}")));
    }
    let f = scaled_layer_field(h);
    let hit = integrate_to_section(&f, &[-1.0, 0.0, 0.0, 0.0], 0.0, &return_section(), TimeDirection::Forward, horizon(h), tol)?;
    Ok(hit.t)
}

/// Closed-form column entry of the y2-derivative of the scaled first
/// Melnikov function at `(h, 0, 0, 0)`:
/// `-2 int_0^T0 exp(int_t^T0 2 z_2h) (z_2h / h)^2 dt`.
pub fn d1_hat_y2_formula(h: f64, tol: &Tolerances) -> Result<f64> {
    let f = scaled_layer_field(h);
    let hit = integrate_to_section(&f, &[-1.0, 0.0, 0.0, 0.0], 0.0, &return_section(), TimeDirection::Forward, horizon(h), tol)?;
    Ok(-2.0 * hit.state[2].exp() * hit.state[3])
}

/// Adjoint solution along the layer orbit `phi_h` on `[0, T]`.
#[derive(Debug, Clone)]
pub struct AdjointSolution {
    pub h: f64,
    pub t_end: f64,
    hit: crate::numerics::Trajectory,
}

impl AdjointSolution {
    /// `T = None` uses the period `T0(h)`.
    pub fn new(h: f64, t_end: Option<f64>, tol: &Tolerances) -> Result<Self> {
        let t_end = match t_end {
            Some(t) if t > 0.0 => t,
            Some(t) => return Err(CanardError::InvalidInput(format!("T must be positive, got {t}"))),
            None => layer_period(h, tol)?,
        };
        let f = scaled_layer_field(h);
        let tr = crate::numerics::integrate(&f, &[-1.0, 0.0, 0.0, 0.0], (0.0, t_end), tol)?;
        Ok(AdjointSolution { h, t_end, hit: tr })
    }

    /// `psi_h(t)` for `0 <= t <= T`.
    pub fn eval(&self, t: f64) -> [f64; 2] {
        let s = self.hit.eval(t);
        let zt = self.hit.last_state()[2];
        let e = (zt - s[2]).exp();
        [-e * (s[0] + self.h * s[1] * s[1]), -e * s[1]]
    }

    /// `A_h(t)` of the linearization about `phi_h`.
    pub fn linearization(&self, t: f64) -> [[f64; 2]; 2] {
        let s = self.hit.eval(t);
        [[0.0, -1.0], [1.0, 2.0 * self.h * s[1]]]
    }
}

/// Closed-form adjoint solution at time `t` for the layer orbit of
/// amplitude `h`, normalized at time `T`.
pub fn adjoint_solution(h: f64, t: f64, t_end: f64, tol: &Tolerances) -> Result<[f64; 2]> {
    if !(0.0..=t_end).contains(&t) {
        return Err(CanardError::InvalidInput(format!("t = {t} outside [0, {t_end}]")));
    }
    Ok(AdjointSolution::new(h, Some(t_end), tol)?.eval(t))
}

/// Melnikov function on a precomputed slow manifold (which fixes `r2`
/// and `mu2`).
pub fn melnikov(res: &ManifoldResult, h: f64, y2: f64, tol: &Tolerances) -> Result<MelnikovValue> {
    if !(h >= 0.0) || !h.is_finite() {
        return Err(CanardError::InvalidInput(format!("amplitude must be nonnegative, got {h}")));
    }
    check_manifold_domain(res, y2)?;
    let r2 = res.r2;
    // state: w1, w2, y2, p1, p2, Z, K, D
    let field = |_t: f64, s: &[f64], ds: &mut [f64]| {
        let (wd, g) = scaled_field(res, h, [s[0], s[1]], s[2]);
        let (p1, p2) = (s[3], s[4]);
        let pd = [-p2, p1 + h * p2 * p2];
        let (e1, e2) = (s[0] - p1, s[1] - p2);
        let a = [-e2, e1 + 2.0 * h * p2 * e2];
        let b = [wd[0] - pd[0] - a[0], wd[1] - pd[1] - a[1]];
        ds[0] = wd[0];
        ds[1] = wd[1];
        ds[2] = r2 * g;
        ds[3] = pd[0];
        ds[4] = pd[1];
        ds[5] = 2.0 * h * p2;
        ds[6] = (-s[5]).exp() * ((p1 + h * p2 * p2) * b[0] + p2 * b[1]);
        ds[7] = g;
    };
    let x0 = [-1.0, 0.0, y2, -1.0, 0.0, 0.0, 0.0, 0.0];
    let hit: SectionHit = integrate_to_section(&field, &x0, 0.0, &return_section(), TimeDirection::Forward, horizon(h), tol)?;
    let y_max = hit.trajectory.states().map(|s| (s[2] + res.shift).abs()).fold(0.0, f64::max);
    if y_max > res.nu() {
        return Err(CanardError::OutOfDomain(format!("orbit leaves the slow-manifold chart (|v| = {y_max})")));
    }
    let s = &hit.state;
    let (p1, p2) = (s[3], s[4]);
    let j = -s[5].exp() * s[6];
    let psi = [-(p1 + h * p2 * p2), -p2];
    let d1_hat = p1 + 1.0 + (j + psi[1] * p2) / psi[0];
    Ok(MelnikovValue { d1: h * d1_hat, d2: s[7], d1_hat, transition_time: hit.t, d1_hat_direct: s[0] + 1.0 })
}

/// Melnikov function at `(h, y2, r2, mu2)`, computing the slow manifold.
pub fn melnikov_at(sys: &SlowFastSystem, h: f64, y2: f64, r2: f64, mu2: f64, cfg: &MelnikovConfig) -> Result<MelnikovValue> {
    let res = solve_invariant_series(sys, r2, mu2, &cfg.manifold)?;
    melnikov(&res, h, y2, &cfg.tol)
}

/// Central-difference Jacobian of `(d1_hat, d2)` in `(y2, mu2)`.
pub fn melnikov_jacobian(
    sys: &SlowFastSystem,
    h: f64,
    y2: f64,
    r2: f64,
    mu2: f64,
    cfg: &MelnikovConfig,
) -> Result<[[f64; 2]; 2]> {
    let f = |p: &[f64]| melnikov_at(sys, h, p[0], r2, p[1], cfg).map(|m| m.hat().to_vec());
    let j = central_jacobian(&f, &[y2, mu2], cfg.fd_step)?;
    Ok([[j[(0, 0)], j[(0, 1)]], [j[(1, 0)], j[(1, 1)]]])
}

fn check_branch_input(h: f64, r2: f64, cfg: &MelnikovConfig) -> Result<()> {
    if !(h >= 0.0 && h <= cfg.h_max) {
        return Err(CanardError::OutOfDomain(format!("h = {h} outside [0, {}]", cfg.h_max)));
    }
    if !(r2 >= 0.0 && r2 <= cfg.manifold.r2_max) {
        return Err(CanardError::OutOfDomain(format!("r2 = {r2} outside [0, {}]", cfg.manifold.r2_max)));
    }
    Ok(())
}

/// Root `(y2_bar, mu2_bar)` of the scaled Melnikov function by Newton's
/// method seeded at the origin.
pub fn solve_small_branch(sys: &SlowFastSystem, h: f64, r2: f64, cfg: &MelnikovConfig) -> Result<SmallBranchPoint> {
    solve_small_branch_from(sys, h, r2, [0.0, 0.0], cfg)
}

/// As [`solve_small_branch`] with an explicit seed (used for continuation).
pub fn solve_small_branch_from(
    sys: &SlowFastSystem,
    h: f64,
    r2: f64,
    seed: [f64; 2],
    cfg: &MelnikovConfig,
) -> Result<SmallBranchPoint> {
    check_branch_input(h, r2, cfg)?;
    sys.require_nondegenerate()?;
    let f = |p: &[f64]| melnikov_at(sys, h, p[0], r2, p[1], cfg).map(|m| m.hat().to_vec());
    let rep = newton_solve(&f, &seed, &cfg.tol, None)?;
    let m = melnikov_at(sys, h, rep.x[0], r2, rep.x[1], cfg)?;
    Ok(SmallBranchPoint {
        h,
        r2,
        y2_bar: rep.x[0],
        mu2_bar: rep.x[1],
        residual: max_norm(&m.hat()),
        period: m.transition_time,
    })
}

/// Fixed point of the return map found by shooting the unstraightened
/// chart-2 system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnMapFixedPoint {
    pub y2: f64,
    pub mu2: f64,
    pub transition_time: f64,
    pub residual: f64,
}

/// Scaled return-map mismatch `((u1(T) + h) / h, (y2(T) - y2) / r2)`
/// and the transition time.
pub fn return_map_mismatch(
    sys: &SlowFastSystem,
    bf: &BlowupFields,
    h: f64,
    y2: f64,
    r2: f64,
    mu2: f64,
    cfg: &MelnikovConfig,
) -> Result<([f64; 2], f64)> {
    let res = solve_invariant_series(sys, r2, mu2, &cfg.manifold)?;
    check_manifold_domain(&res, y2)?;
    let mu = r2 * mu2;
    let (m0, _) = res.eval_with_derivative(y2);
    let field = |_t: f64, s: &[f64], ds: &mut [f64]| {
        let v = bf.chart2_at(r2, s, mu);
        ds.copy_from_slice(&v);
    };
    let resc = &res;
    let section = SectionSpec::new(
        move |s: &[f64]| {
            let (m, _) = resc.eval_with_derivative(s[1]);
            if s[0] - m[0] < 0.0 {
                s[2] - m[1]
            } else {
                1.0
            }
        },
        Crossing::Falling,
    );
    let x0 = [m0[0] - h, y2, m0[1]];
    let hit = integrate_to_section(&field, &x0, 0.0, &section, TimeDirection::Forward, horizon(h), &cfg.tol)?;
    let s = &hit.state;
    let (m, _) = res.eval_with_derivative(s[1]);
    let e1 = (s[0] - m[0] + h) / h;
    let e2 = if r2 > 0.0 { (s[1] - y2) / r2 } else { s[1] - y2 };
    Ok(([e1, e2], hit.t))
}

/// Independent oracle for [`solve_small_branch`] (requires `h > 0`).
pub fn return_map_fixed_point(sys: &SlowFastSystem, h: f64, r2: f64, cfg: &MelnikovConfig) -> Result<ReturnMapFixedPoint> {
    if !(h > 0.0) {
        return Err(CanardError::InvalidInput("shooting needs h > 0".into()));
    }
    check_branch_input(h, r2, cfg)?;
    let bf = BlowupFields::new(sys);
    if r2 == 0.0 {
        // y2 is frozen and mu2 is inert: the layer orbit closes on its own
        let (e, t) = return_map_mismatch(sys, &bf, h, 0.0, 0.0, 0.0, cfg)?;
        return Ok(ReturnMapFixedPoint { y2: 0.0, mu2: 0.0, transition_time: t, residual: e[0].abs() });
    }
    let f = |p: &[f64]| return_map_mismatch(sys, &bf, h, p[0], r2, p[1], cfg).map(|(e, _)| e.to_vec());
    let rep = newton_solve(&f, &[0.0, 0.0], &cfg.tol, None)?;
    let (e, t) = return_map_mismatch(sys, &bf, h, rep.x[0], r2, rep.x[1], cfg)?;
    Ok(ReturnMapFixedPoint { y2: rep.x[0], mu2: rep.x[1], transition_time: t, residual: max_norm(&e) })
}

/// Hopf value `mu_H(r2) = r2 mu2_bar(0, r2)`.
pub fn hopf_mu(sys: &SlowFastSystem, r2: f64, cfg: &MelnikovConfig) -> Result<f64> {
    if !(r2 > 0.0) {
        return Err(CanardError::InvalidInput(format!("r2 must be positive, got {r2}")));
    }
    Ok(r2 * solve_small_branch(sys, 0.0, r2, cfg)?.mu2_bar)
}

/// Equilibrium of the chart-2 system near the origin and the eigenvalues
/// of its Jacobian, complex pair first (positive imaginary part first).
pub fn chart2_equilibrium(
    sys: &SlowFastSystem,
    r2: f64,
    mu: f64,
    tol: &Tolerances,
) -> Result<([f64; 3], [Complex<f64>; 3])> {
    let bf = BlowupFields::new(sys);
    let jac_polys: Vec<Vec<Poly>> = (0..3).map(|i| (0..3).map(|j| bf.chart2[i].derivative(j)).collect()).collect();
    let f = |p: &[f64]| Ok(bf.chart2_at(r2, p, mu).to_vec());
    let jac = |p: &[f64]| {
        let v = [p[0], p[1], p[2], r2, mu];
        Ok(nalgebra::DMatrix::from_fn(3, 3, |i, j| jac_polys[i][j].eval(&v)))
    };
    let y0 = if r2 > 0.0 { -mu / (2.0 * r2 * sys.lambda) } else { 0.0 };
    let rep = newton_solve(&f, &[-y0 * y0, y0, y0], tol, Some(&jac))?;
    let p = [rep.x[0], rep.x[1], rep.x[2]];
    let j = jac(&rep.x)?;
    let m = Matrix3::from_fn(|a, b| j[(a, b)]);
    let mut ev: Vec<Complex<f64>> = m.complex_eigenvalues().iter().cloned().collect();
    ev.sort_by(|a, b| b.im.partial_cmp(&a.im).unwrap());
    // ev[0] has the largest, ev[2] the smallest imaginary part
    Ok((p, [ev[0], ev[2], ev[1]]))
}

/// Oracle for [`hopf_mu`]: the value of `mu` at which the complex pair of
/// the equilibrium crosses the imaginary axis.
pub fn hopf_mu_eigen(sys: &SlowFastSystem, r2: f64, tol: &Tolerances) -> Result<f64> {
    if !(r2 > 0.0) {
        return Err(CanardError::InvalidInput(format!("r2 must be positive, got {r2}")));
    }
    let re = |mu: f64| chart2_equilibrium(sys, r2, mu, tol).map(|(_, ev)| ev[0].re);
    let span = 0.5 * r2;
    let (a, b) = (-span, span);
    if !(re(a)? * re(b)? < 0.0) {
        return Err(CanardError::NoCrossing { horizon: span });
    }
    bracketed_root(re, a, b, 1e-15, 200)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sys() -> SlowFastSystem {
        SlowFastSystem::canonical(0.0, 1.0)
    }

    fn cfg() -> MelnikovConfig {
        MelnikovConfig::default()
    }

    fn manifold(r2: f64, mu2: f64) -> ManifoldResult {
        solve_invariant_series(&sys(), r2, mu2, &ManifoldConfig::default()).unwrap()
    }

    #[test]
    fn manifold_is_invariant_in_straightened_coordinates() {
        let res = manifold(0.05, 0.02);
        for y2 in [-0.1, 0.0, 0.07] {
            let v = straightened_field(&res, &StraightenedState { u: [0.0, 0.0], y2 }).unwrap();
            assert!(v[0].hypot(v[1]) <= 1e-7);
        }
    }

    #[test]
    fn straightened_field_reduces_to_layer() {
        let res = manifold(0.0, 0.0);
        for u in [[-0.3, 0.2], [0.1, -0.5], [1.0, 1.0]] {
            let v = straightened_field(&res, &StraightenedState { u, y2: 0.0 }).unwrap();
            let mut du = [0.0; 2];
            crate::layer::layer_field(&u, &mut du);
            assert!((v[0] - du[0]).abs() < 1e-12 && (v[1] - du[1]).abs() < 1e-12 && v[2] == 0.0);
        }
        let (wd, _) = scaled_field(&res, 0.0, [1.0, 0.0], 0.0);
        let (wd2, _) = scaled_field(&res, 0.0, [0.0, 1.0], 0.0);
        let a = nalgebra::Matrix2::new(wd[0], wd2[0], wd[1], wd2[1]);
        let ev = a.complex_eigenvalues();
        assert!(ev.iter().all(|e| e.re.abs() < 1e-12 && (e.im.abs() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn adjoint_boundary_value_and_equation() {
        let tol = cfg().tol;
        for h in [0.0, 0.3, 1.0] {
            let adj = AdjointSolution::new(h, None, &tol).unwrap();
            let end = adj.eval(adj.t_end);
            assert!((end[0] - 1.0).abs() < 1e-10 && end[1].abs() < 1e-10, "h = {h}: {end:?}");
            for k in 1..20 {
                let t = adj.t_end * k as f64 / 20.0;
                let d = 1e-5;
                let (p, m) = (adj.eval(t + d), adj.eval(t - d));
                let dpsi = [(p[0] - m[0]) / (2.0 * d), (p[1] - m[1]) / (2.0 * d)];
                let a = adj.linearization(t);
                let psi = adj.eval(t);
                let rhs = [-(a[0][0] * psi[0] + a[1][0] * psi[1]), -(a[0][1] * psi[0] + a[1][1] * psi[1])];
                assert!((dpsi[0] - rhs[0]).abs() <= 1e-8 && (dpsi[1] - rhs[1]).abs() <= 1e-8);
                assert!(psi[0].hypot(psi[1]) < 10.0);
            }
        }
        assert!(adjoint_solution(0.5, 7.0, 6.0, &tol).is_err());
    }

    #[test]
    fn melnikov_vanishes_on_layer_orbits() {
        let res = manifold(0.0, 0.0);
        for h in [0.0, 0.2, 0.5, 1.0] {
            let m = melnikov(&res, h, 0.0, &cfg().tol).unwrap();
            assert!(m.d1.abs() <= 1e-9 && m.d2.abs() <= 1e-9 && m.d1_hat.abs() <= 1e-9, "{h}: {m:?}");
        }
    }

    #[test]
    fn adjoint_reconstruction_matches_direct_return() {
        let res = manifold(0.05, 0.03);
        for h in [0.0, 0.4, 1.5] {
            let m = melnikov(&res, h, 0.01, &cfg().tol).unwrap();
            assert!((m.d1_hat - m.d1_hat_direct).abs() < 1e-9, "{m:?}");
        }
    }

    #[test]
    fn mu2_derivative_is_half_period() {
        let c = cfg();
        for h in [0.0, 0.5] {
            let j = melnikov_jacobian(&sys(), h, 0.0, 0.0, 0.0, &c).unwrap();
            let t0 = layer_period(h, &c.tol).unwrap();
            assert!(j[0][1].abs() < 1e-6);
            assert!((j[1][1] - 0.5 * t0).abs() <= 1e-4 * 0.5 * t0, "{} vs {}", j[1][1], 0.5 * t0);
            let d = d1_hat_y2_formula(h, &c.tol).unwrap();
            assert!((j[0][0] - d).abs() <= 1e-4 * d.abs());
        }
        let j = melnikov_jacobian(&sys(), 0.0, 0.0, 0.0, 0.0, &c).unwrap();
        assert!((j[1][1] - PI).abs() <= 1e-4);
        assert!((j[0][0] + 2.0 * PI).abs() <= 1e-3);
    }

    #[test]
    fn small_branch_trivial_at_r2_zero() {
        let p = solve_small_branch(&sys(), 0.5, 0.0, &cfg()).unwrap();
        assert_eq!((p.y2_bar, p.mu2_bar), (0.0, 0.0));
        let q = return_map_fixed_point(&sys(), 0.5, 0.0, &cfg()).unwrap();
        assert_eq!((q.y2, q.mu2), (0.0, 0.0));
        let q = return_map_fixed_point(&sys(), 1e-4, 0.0, &cfg()).unwrap();
        assert!((q.transition_time - 2.0 * PI).abs() < 1e-3);
    }

    #[test]
    fn small_branch_matches_return_map() {
        let c = cfg();
        let p = solve_small_branch(&sys(), 0.5, 0.05, &c).unwrap();
        assert!(p.residual <= 1e-9);
        let q = return_map_fixed_point(&sys(), 0.5, 0.05, &c).unwrap();
        assert!((p.y2_bar - q.y2).abs() <= 1e-6 && (p.mu2_bar - q.mu2).abs() <= 1e-6, "{p:?} {q:?}");
    }

    #[test]
    fn hopf_agrees_with_eigenvalue_crossing() {
        let c = cfg();
        for r2 in [0.05, 0.1] {
            let a = hopf_mu(&sys(), r2, &c).unwrap();
            let b = hopf_mu_eigen(&sys(), r2, &c.tol).unwrap();
            assert!((a - b).abs() <= 1e-6, "r2 = {r2}: {a} vs {b}");
            let (_, ev) = chart2_equilibrium(&sys(), r2, b, &c.tol).unwrap();
            assert!((ev[0].im - 1.0).abs() < 10.0 * r2);
            assert!(ev[2].im.abs() < 1e-12 && (ev[2].re - r2 * sys().lambda).abs() < 10.0 * r2 * r2);
        }
        assert!(hopf_mu(&sys(), 0.0, &c).is_err());
    }

    #[test]
    fn equilibrium_at_origin_for_zero_parameters() {
        let (p, _) = chart2_equilibrium(&sys(), 0.05, 0.0, &Tolerances::tight()).unwrap();
        assert!(p[1].abs() < 1e-12);
    }
}
