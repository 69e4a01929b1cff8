//! Entry-chart transition: center manifolds near `z1 = -1` and `z1 = 1`,
//! the Shilnikov problem for the normal form
//!
//! `eps1' = eps1`, `r1' = -r1/2`,
//! `y' = (lambda(mu) + r1 L0(r1, y, mu)) y + r1 eps1 L1(eps1, r1, y, mu)`,
//!
//! with `eps1(tau) = eps11`, `r1(0) = r10`, `y(tau) = y11`, and a numerical
//! check of the transition-map structure from `{z1 = 0}` to
//! `{eps1 = eps11}`.

use serde::{Deserialize, Serialize};

use crate::blowup::BlowupFields;
use crate::error::{CanardError, Result};
use crate::numerics::{
    integrate, integrate_to_section, newton_solve, ChebyshevGrid, Crossing, SectionSpec, TimeDirection,
    Tolerances, Trajectory,
};
use crate::poly::Poly;
use crate::system::SlowFastSystem;

/// Exponent of the reduced flow on the attracting center manifold.
pub fn lambda_mu(mu: f64) -> f64 {
    0.5 * (1.0 - mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Attracting,
    Repelling,
}

impl Side {
    /// `-1` on the attracting side, `+1` on the repelling side.
    pub fn base(self) -> f64 {
        match self {
            Side::Attracting => -1.0,
            Side::Repelling => 1.0,
        }
    }
}

/// Graph `z1 = base + m(eps1, r1, y1)` of a center manifold, for fixed mu.
#[derive(Debug, Clone)]
pub struct CenterManifoldGraph {
    pub side: Side,
    pub mu: f64,
    pub degree: usize,
    /// Correction `m` as a polynomial in `(eps1, r1, y1)`.
    pub correction: Poly,
    fields: BlowupFields,
}

impl CenterManifoldGraph {
    pub fn eval(&self, eps1: f64, r1: f64, y1: f64) -> f64 {
        self.side.base() + self.correction.eval(&[eps1, r1, y1])
    }

    /// Invariance defect `z1' - grad m . (eps1', r1', y1')` on the graph.
    pub fn defect(&self, eps1: f64, r1: f64, y1: f64) -> f64 {
        let z1 = self.eval(eps1, r1, y1);
        let v = self.fields.chart1_at(&[eps1, r1, y1, z1], self.mu);
        let p = [eps1, r1, y1];
        let grad: Vec<f64> = (0..3).map(|i| self.correction.derivative(i).eval(&p)).collect();
        v[3] - grad[0] * v[0] - grad[1] * v[1] - grad[2] * v[2]
    }
}

/// Center manifold by power matching, degree by degree.
pub fn center_manifold_graph(sys: &SlowFastSystem, side: Side, mu: f64, degree: usize) -> Result<CenterManifoldGraph> {
    if degree < 2 || degree > 20 {
        return Err(CanardError::InvalidInput(format!("degree must lie in [2, 20], got {degree}")));
    }
    let fields = BlowupFields::new(sys);
    let nv = 3;
    let base = side.base();
    // the linear part of z1' in the correction is 2 * base * m
    let gain = 2.0 * base;
    let mut m = Poly::zero(nv);
    for d in 1..=degree {
        let mut scale = 1.0f64;
        for sweep in 0..=d + 1 {
            let rd = invariance_residual_poly(&fields, &m, base, mu, d).homogeneous(d);
            if sweep == 0 {
                scale = scale.max(rd.max_abs_coeff());
            }
            if rd.max_abs_coeff() <= 1e-14 * scale {
                break;
            }
            if sweep == d + 1 {
                let worst = rd.terms().max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap()).map(|(e, _)| *e);
                return Err(CanardError::OrderCondition {
                    term: format!("center manifold at degree {d}"),
                    monomial: worst
                        .map(|e| crate::poly::format_monomial(&e, &["eps1", "r1", "y1"]))
                        .unwrap_or_default(),
                });
            }
            m = m.add(&rd.scale(-1.0 / gain));
        }
    }
    Ok(CenterManifoldGraph { side, mu, degree, correction: m, fields })
}

fn invariance_residual_poly(fields: &BlowupFields, m: &Poly, base: f64, mu: f64, deg: usize) -> Poly {
    let nv = 3;
    let z = Poly::constant(nv, base).add(m);
    let subs = [Poly::var(nv, 0), Poly::var(nv, 1), Poly::var(nv, 2), z, Poly::constant(nv, mu)];
    let v: Vec<Poly> = fields.chart1.iter().map(|p| p.compose(&subs, Some(deg))).collect();
    let mut r = v[3].clone();
    for i in 0..3 {
        r = r.sub(&m.derivative(i).mul_trunc(&v[i], deg));
    }
    r.truncate(deg)
}

/// Coefficient functions of the entry-chart normal form:
/// `L0(r1, y, mu)`, `L1(eps1, r1, y, mu)`, `L2(r1, y, z, eps1, mu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalForm {
    pub l0: Poly,
    pub l1: Poly,
    pub l2: Poly,
}

impl NormalForm {
    /// `L0 = 1 + y`, `L1 = 1`, `L2 = r1 + y`.
    pub fn benchmark() -> Self {
        NormalForm {
            l0: Poly::constant(3, 1.0).add(&Poly::var(3, 1)),
            l1: Poly::constant(4, 1.0),
            l2: Poly::var(5, 0).add(&Poly::var(5, 1)),
        }
    }

    /// `L0 = L0(r1, 0, mu) + Lbar0(r1, y, mu) y`; returns `Lbar0`.
    fn l0_bar(&self) -> Poly {
        let mut p = Poly::zero(3);
        for (e, c) in self.l0.terms() {
            if e[1] >= 1 {
                let mut f = *e;
                f[1] -= 1;
                p.add_term(f, *c);
            }
        }
        p
    }

    /// Coefficients `c_k` of `L0(r1, 0, mu) = sum c_k r1^k`.
    fn l0_at_zero(&self, mu: f64) -> Vec<f64> {
        let mut c = vec![0.0; self.l0.degree_in(0) + 1];
        for (e, v) in self.l0.terms() {
            if e[1] == 0 {
                c[e[0] as usize] += v * mu.powi(e[2] as i32);
            }
        }
        c
    }

    /// `int_t^infinity r1(s) L0(r1(s), 0, mu) ds` with `r1(s) = r10 e^{-s/2}`.
    pub fn tail_integral(&self, t: f64, r10: f64, mu: f64) -> f64 {
        self.l0_at_zero(mu)
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let k1 = (k + 1) as f64;
                c * r10.powi(k as i32 + 1) * 2.0 / k1 * (-0.5 * k1 * t).exp()
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShilnikovBc {
    pub tau: f64,
    pub eps11: f64,
    pub r10: f64,
    pub y11: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShilnikovConfig {
    pub alpha: f64,
    pub delta: f64,
    pub tau0: f64,
    pub chi: f64,
    pub eps11: f64,
    pub eps10: f64,
    pub r10_max: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ShilnikovConfig {
    fn default() -> Self {
        ShilnikovConfig {
            alpha: 0.25,
            delta: 0.1,
            tau0: 5.0,
            chi: 0.1,
            eps11: 0.25,
            eps10: 0.05,
            r10_max: 0.1,
            tol: 1e-14,
            max_iter: 200,
        }
    }
}

impl ShilnikovConfig {
    pub fn nodes(tau: f64) -> usize {
        32 + (8.0 * tau).ceil() as usize
    }

    fn check(&self, bc: &ShilnikovBc) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(CanardError::InvalidInput(format!("alpha must lie in (0, 1/2), got {}", self.alpha)));
        }
        if !(bc.tau > self.tau0) || !bc.tau.is_finite() {
            return Err(CanardError::InvalidInput(format!("tau = {} must exceed tau0 = {}", bc.tau, self.tau0)));
        }
        if !(bc.eps11 > 0.0 && bc.eps11 <= self.eps11)
            || !(bc.r10 >= 0.0 && bc.r10 <= self.r10_max)
            || bc.y11.abs() > self.chi
            || bc.mu.abs() > self.chi
        {
            return Err(CanardError::OutOfDomain(format!("boundary data {bc:?} outside the smallness box")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ShilnikovSolution {
    pub bc: ShilnikovBc,
    pub lambda: f64,
    pub alpha: f64,
    pub grid: ChebyshevGrid,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub phi: Vec<f64>,
    pub distances: Vec<f64>,
    pub iterations: usize,
}

impl ShilnikovSolution {
    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn y_at(&self, t: f64) -> f64 {
        self.grid.interpolate(&self.y, t)
    }

    pub fn phi_at(&self, t: f64) -> f64 {
        self.grid.interpolate(&self.phi, t)
    }

    pub fn eps1_at(&self, t: f64) -> f64 {
        (t - self.bc.tau).exp() * self.bc.eps11
    }

    pub fn r1_at(&self, t: f64) -> f64 {
        (-0.5 * t).exp() * self.bc.r10
    }

    /// Largest ratio of successive iterate distances above the noise floor.
    pub fn contraction_ratio(&self) -> f64 {
        self.distances
            .windows(2)
            .filter(|w| w[1] > 1e-13)
            .map(|w| w[1] / w[0])
            .fold(0.0, f64::max)
    }
}

struct Picard<'a> {
    nf: &'a NormalForm,
    l0_bar: Poly,
    bc: ShilnikovBc,
    lambda: f64,
}

impl Picard<'_> {
    fn log_e(&self, t: f64) -> f64 {
        let b = &self.bc;
        self.lambda * (t - b.tau) + self.nf.tail_integral(b.tau, b.r10, b.mu) - self.nf.tail_integral(t, b.r10, b.mu)
    }

    fn integrand(&self, t: f64, u: f64) -> f64 {
        let b = &self.bc;
        let r1 = (-0.5 * t).exp() * b.r10;
        let eps1 = (t - b.tau).exp() * b.eps11;
        let e = self.log_e(t).exp();
        let w = b.y11 + u;
        let y = e * w;
        r1 * self.l0_bar.eval(&[r1, y, b.mu]) * e * w * w + r1 * eps1 * self.nf.l1.eval(&[eps1, r1, y, b.mu]) / e
    }

    fn apply(&self, grid: &ChebyshevGrid, u: &[f64]) -> Vec<f64> {
        let vals: Vec<f64> = grid.nodes().iter().zip(u).map(|(&t, &ui)| self.integrand(t, ui)).collect();
        let mut out = grid.integrate_from_right(&vals);
        out[0] = 0.0;
        out
    }
}

/// Picard iteration of the correction `u` on a Chebyshev grid of `[0, tau]`.
pub fn shilnikov_solve(nf: &NormalForm, bc: &ShilnikovBc, cfg: &ShilnikovConfig) -> Result<ShilnikovSolution> {
    cfg.check(bc)?;
    let lambda = lambda_mu(bc.mu);
    let pic = Picard { nf, l0_bar: nf.l0_bar(), bc: *bc, lambda };
    let n = ShilnikovConfig::nodes(bc.tau);
    let grid = ChebyshevGrid::new(0.0, bc.tau, n);
    let weight = (cfg.alpha * bc.tau).exp();
    let mut u = vec![0.0; n + 1];
    let mut distances = Vec::new();
    let mut bad = 0;
    let mut iterations = 0;
    loop {
        if iterations == cfg.max_iter {
            return Err(CanardError::FixedPointMaxIter(cfg.max_iter));
        }
        iterations += 1;
        let next = pic.apply(&grid, &u);
        let d = weight * next.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if let Some(&prev) = distances.last() {
            if d >= prev && d > 10.0 * cfg.tol {
                bad += 1;
                if bad >= 3 {
                    return Err(CanardError::NonContraction { iteration: iterations, ratio: d / prev });
                }
            } else {
                bad = 0;
            }
        }
        distances.push(d);
        u = next;
        let norm = weight * u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm > cfg.delta {
            return Err(CanardError::BallExit { norm, bound: cfg.delta });
        }
        if d <= cfg.tol {
            break;
        }
    }

    // resolution: the fixed point must also be one on a finer grid
    let fine = ChebyshevGrid::new(0.0, bc.tau, n + n / 2);
    let uf: Vec<f64> = fine.nodes().iter().map(|&t| grid.interpolate(&u, t)).collect();
    let tf = pic.apply(&fine, &uf);
    let gap = tf.iter().zip(&uf).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(bc.y11.abs()).max(1e-300);
    if gap > 1e-10 * scale.max(1e-3) {
        return Err(CanardError::GridResolution { nodes: n, defect: gap });
    }

    let mut y = Vec::with_capacity(n + 1);
    let mut phi = Vec::with_capacity(n + 1);
    for (&t, &ui) in grid.nodes().iter().zip(&u) {
        let integral = pic.log_e(t) - lambda * (t - bc.tau);
        let ei = integral.exp();
        y.push((lambda * (t - bc.tau)).exp() * ei * (bc.y11 + ui));
        phi.push((ei - 1.0) * bc.y11 + ei * ui);
    }
    Ok(ShilnikovSolution { bc: *bc, lambda, alpha: cfg.alpha, grid, u, y, phi, distances, iterations })
}

/// `phi_inf(t) = (exp(-int_t^inf r1 L0(r1, 0, mu)) - 1) y11`.
pub fn phi_infinity(nf: &NormalForm, t: f64, r10: f64, y11: f64, mu: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(CanardError::InvalidInput(format!("t must be positive, got {t}")));
    }
    Ok(((-nf.tail_integral(t, r10, mu)).exp() - 1.0) * y11)
}

/// Least-squares decay rate of `sup_t |phi(t, tau) - phi_inf(t)|` over the
/// given `tau` values, sampled at `t` in `ts`.
pub fn phi_decay_rate(nf: &NormalForm, base: &ShilnikovBc, taus: &[f64], ts: &[f64], cfg: &ShilnikovConfig) -> Result<f64> {
    let mut pts = Vec::new();
    for &tau in taus {
        let sol = shilnikov_solve(nf, &ShilnikovBc { tau, ..*base }, cfg)?;
        let mut err: f64 = 0.0;
        for &t in ts {
            err = err.max((sol.phi_at(t) - phi_infinity(nf, t, base.r10, base.y11, base.mu)?).abs());
        }
        pts.push((tau, err.ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(-sxy / sxx)
}

/// Shooting oracle: Newton on `y(0)` so that the forward solution meets
/// `y(tau) = y11`.
pub fn shilnikov_shooting(nf: &NormalForm, bc: &ShilnikovBc, tol: &Tolerances) -> Result<Trajectory> {
    let lambda = lambda_mu(bc.mu);
    let b = *bc;
    let field = move |t: f64, y: &[f64], dy: &mut [f64]| {
        let r1 = (-0.5 * t).exp() * b.r10;
        let eps1 = (t - b.tau).exp() * b.eps11;
        dy[0] = (lambda + r1 * nf.l0.eval(&[r1, y[0], b.mu])) * y[0] + r1 * eps1 * nf.l1.eval(&[eps1, r1, y[0], b.mu]);
    };
    let miss = |y0: &[f64]| -> Result<Vec<f64>> {
        let tr = integrate(&field, y0, (0.0, b.tau), tol)?;
        Ok(vec![(tr.last_state()[0] - b.y11) * (-lambda * b.tau).exp()])
    };
    let guess = [b.y11 * (-lambda * b.tau).exp()];
    let tight = Tolerances { newton_tol: 1e-18, ..*tol };
    let rep = newton_solve(&miss, &guess, &tight, None).or_else(|e| match e {
        CanardError::NewtonMaxIter { .. } => newton_solve(&miss, &guess, &Tolerances { newton_tol: 1e-16, ..*tol }, None),
        other => Err(other),
    })?;
    integrate(&field, &rep.x, (0.0, b.tau), tol)
}

/// Outcome of [`transition_map_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionCheck {
    pub leading: f64,
    pub psi: f64,
    pub arrival_y: f64,
    pub arrival_r1: f64,
    /// `sqrt(eps1 / eps11) r1` from conservation of `eps = r1^2 eps1`.
    pub arrival_r1_conserved: f64,
    /// `ln |z|` at arrival.
    pub arrival_log_z: f64,
    pub time: f64,
}

/// Integrates the normal form (with `z` carried as `ln |z|`) from the
/// section `{z1 = 0}` to `{eps1 = eps11}`, forward on the attracting side
/// and backward on the repelling side.
#[allow(clippy::too_many_arguments)]
pub fn transition_map_check(
    sys: &SlowFastSystem,
    nf: &NormalForm,
    side: Side,
    eps1: f64,
    r1: f64,
    y: f64,
    mu: f64,
    cfg: &ShilnikovConfig,
    tol: &Tolerances,
) -> Result<TransitionCheck> {
    let lambda = lambda_mu(mu);
    let eps11 = cfg.eps11;
    if !(eps1 > 0.0 && eps1 <= cfg.eps10) || !(r1 >= 0.0 && r1 <= cfg.r10_max) {
        return Err(CanardError::OutOfDomain(format!("(eps1, r1) = ({eps1}, {r1}) outside the entry box")));
    }
    if y.abs() > cfg.chi * (eps1 / eps11).powf(lambda) {
        return Err(CanardError::OutOfDomain(format!("|y| = {} outside the transition domain", y.abs())));
    }
    // z_{1,a} on the section z1 = 0 is minus the graph value
    let graph = center_manifold_graph(sys, side, mu, 6)?;
    let z0 = -graph.eval(eps1, r1, y);
    let s = match side {
        Side::Attracting => 1.0,
        Side::Repelling => -1.0,
    };
    let field = move |_t: f64, v: &[f64], dv: &mut [f64]| {
        let (e, r, yy) = (v[0], v[1], v[2]);
        let z = z0.signum() * v[3].exp();
        dv[0] = s * e * e;
        dv[1] = -s * 0.5 * r * e;
        dv[2] = s * ((lambda + r * nf.l0.eval(&[r, yy, mu])) * yy + r * e * nf.l1.eval(&[e, r, yy, mu])) * e;
        dv[3] = s * (-2.0 + nf.l2.eval(&[r, yy, z, e, mu]));
    };
    let dir = match side {
        Side::Attracting => TimeDirection::Forward,
        Side::Repelling => TimeDirection::Backward,
    };
    let sec = SectionSpec::coordinate(0, eps11, Crossing::Any);
    let horizon = 2.0 / eps1 + 10.0;
    let hit = integrate_to_section(&field, &[eps1, r1, y, z0.abs().ln()], 0.0, &sec, dir, horizon, tol)?;
    let st = &hit.state;
    let leading = (eps11 / eps1).powf(lambda) * y;
    Ok(TransitionCheck {
        leading,
        psi: st[2] - leading,
        arrival_y: st[2],
        arrival_r1: st[1],
        arrival_r1_conserved: (eps1 / eps11).sqrt() * r1,
        arrival_log_z: st[3],
        time: hit.t.abs(),
    })
}

/// Slope of `ln |arrival y|` against `ln(eps11 / eps1)`.
pub fn transition_exponent(
    sys: &SlowFastSystem,
    nf: &NormalForm,
    side: Side,
    eps1s: &[f64],
    r1: f64,
    y: f64,
    mu: f64,
    cfg: &ShilnikovConfig,
    tol: &Tolerances,
) -> Result<f64> {
    let mut pts = Vec::new();
    for &e in eps1s {
        let c = transition_map_check(sys, nf, side, e, r1, y, mu, cfg, tol)?;
        pts.push(((cfg.eps11 / e).ln(), c.arrival_y.abs().ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}
