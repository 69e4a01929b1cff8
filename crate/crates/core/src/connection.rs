//! Intermediate and canard cycles: the connection problem between the
//! attracting and repelling legs through the entry chart, its branch
//! `mu_bar(h, eps)`, the gluing with the small cycles of the scaling chart,
//! and Hausdorff diagnostics against the singular canard cycles.
//!
//! A cycle of amplitude `h` crosses `{z = 0}` at `x = -h^2`, which in the
//! entry chart is the section point `(eps1, r1, y1, 0)` with `r1 = h` and
//! `eps1 = eps / h^2`. Both legs start from that point, one forward and one
//! backward in time, and are followed into the scaling chart up to
//! `{z2 = 0, x2 > 0}`; the cycle closes when the two landings agree.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::blowup::{blow_down_chart1, blow_down_chart2, chart1_to_chart2, BlowupFields, Chart1Point, Chart2Point};
use crate::error::{CanardError, Result};
use crate::melnikov::{solve_small_branch, MelnikovConfig, SmallBranchPoint};
use crate::numerics::{
    central_jacobian, integrate_to_section, max_norm, newton_solve, Crossing, SectionSpec, TimeDirection, Tolerances,
    Trajectory,
};
use crate::shilnikov::{lambda_mu, Side};
use crate::slow_manifold::solve_invariant_series;
use crate::system::{AmbientState, Params, SlowFastSystem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConnectionConfig {
    /// Exit section `{eps1 = eps11}` of the entry chart.
    pub eps11: f64,
    /// Largest `eps1` admitted on the sweep.
    pub eps10: f64,
    /// Largest amplitude `r1`.
    pub r10: f64,
    pub tol: Tolerances,
    /// Central-difference step of the scaled Newton Jacobian.
    pub fd_step: f64,
    /// Landings must satisfy `|x2 - 1/2| <= window` and `|y2| <= window`.
    pub landing_window: f64,
    /// Largest admissible ambient gap of a reconstructed cycle.
    pub closure_tol: f64,
    /// Number of arclength-uniform samples per reconstructed cycle.
    pub samples: usize,
    /// Largest admissible seam mismatch in `mu`.
    pub seam_tol: f64,
}

impl Default for ConnectionConfig {
    fn default() -> Self {
        ConnectionConfig {
            eps11: 0.25,
            eps10: 0.05,
            r10: 0.5,
            tol: Tolerances { abs_tol: 1e-14, rel_tol: 1e-12, newton_tol: 1e-10, newton_max_iter: 30, event_tol: 1e-14 },
            fd_step: 1e-6,
            landing_window: 1.0,
            closure_tol: 1e-8,
            samples: 600,
            seam_tol: 1e-4,
        }
    }
}

impl ConnectionConfig {
    pub fn validate(&self) -> Result<()> {
        self.tol.validate()?;
        let ok = self.eps11 > 0.0
            && self.eps10 > 0.0
            && self.eps10 <= self.eps11
            && self.r10 > 0.0
            && self.fd_step > 0.0
            && self.landing_window > 0.0
            && self.closure_tol > 0.0
            && self.samples >= 2
            && self.seam_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(CanardError::Config(format!("inconsistent connection settings {self:?}")))
        }
    }
}

/// Landing of one leg on `{z2 = 0}` with the pieces that produced it.
#[derive(Debug, Clone)]
pub struct SeparationValue {
    pub side: Side,
    /// `(x2, y2)` at the landing.
    pub landing: [f64; 2],
    /// The suppressed `z2` at the landing.
    pub landing_z2: f64,
    pub r2: f64,
    /// Entry-chart leg in `(eps1, r1, y1, z1)`; `None` when the section
    /// point already lies on `{eps1 >= eps11}`.
    pub chart1: Option<Trajectory>,
    /// Scaling-chart leg in `(x2, y2, z2)`.
    pub chart2: Trajectory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    /// Amplitude, `r1` on the section.
    pub h: f64,
    pub eps: f64,
    pub eps1: f64,
    pub y1_star: f64,
    pub mu_star: f64,
    pub mu0: f64,
    pub y1_0: f64,
    /// `|Delta_r - Delta_a|_inf` at the solution.
    pub residual: f64,
    pub iterations: usize,
    /// Determinant of the Jacobian in the scaled unknowns.
    pub jacobian_det: f64,
}

/// A closed orbit in ambient coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleOrbit {
    pub h: f64,
    pub eps: f64,
    pub mu: f64,
    /// Arclength-uniform samples, first point on the section `{z = 0}`.
    pub samples: Vec<[f64; 3]>,
    /// Ambient distance between the two landings.
    pub gap: f64,
    /// Largest deviation of `r1^2 eps1` from `eps` along the entry-chart legs.
    pub eps_drift: f64,
}

/// Comparison of the connection branch with the small-cycle branch on the
/// orbit of scaling-chart amplitude `1 / eps11`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeamReport {
    pub eps: f64,
    pub h_small: f64,
    pub r1: f64,
    pub eps1: f64,
    pub mu_small: f64,
    pub mu_connection: f64,
    pub mismatch: f64,
}

/// One branch `h -> mu_bar(h, eps)` with its reconstructed orbits.
#[derive(Debug, Clone)]
pub struct CycleFamily {
    pub eps: f64,
    pub points: Vec<BranchPoint>,
    pub orbits: Vec<CycleOrbit>,
    pub seam: Option<SeamReport>,
}

impl CycleFamily {
    /// Sorts the records by amplitude.
    pub fn assemble(eps: f64, mut records: Vec<(BranchPoint, CycleOrbit)>, seam: Option<SeamReport>) -> Self {
        records.sort_by(|a, b| a.0.h.partial_cmp(&b.0.h).unwrap());
        let (points, orbits) = records.into_iter().unzip();
        CycleFamily { eps, points, orbits, seam }
    }

    /// Largest finite-difference slope `|d mu_bar / d h|` along the branch.
    pub fn max_slope(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| ((w[1].mu_star - w[0].mu_star) / (w[1].h - w[0].h)).abs())
            .fold(0.0, f64::max)
    }

    /// Largest jump of `mu_bar` between neighbours.
    pub fn max_gap(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1].mu_star - w[0].mu_star).abs()).fold(0.0, f64::max)
    }
}

/// Curves of the singular canard `gamma_0` on the critical manifold.
#[derive(Debug, Clone)]
pub struct SingularCanard {
    pub mu: f64,
    pub h: f64,
    /// Ambient points from the attracting jump point to the origin.
    pub attracting: Vec<[f64; 3]>,
    /// Ambient points from the origin to the repelling jump point.
    pub repelling: Vec<[f64; 3]>,
}

impl SingularCanard {
    /// `y` at the repelling jump point minus `y` at the attracting one.
    pub fn mismatch(&self) -> f64 {
        self.repelling.last().unwrap()[1] - self.attracting[0][1]
    }

    /// Closed polyline: canard segment and the fast fiber back.
    pub fn cycle(&self) -> Vec<[f64; 3]> {
        let mut pts = self.attracting.clone();
        pts.extend(self.repelling.iter().skip(1));
        let (a, b) = (*self.repelling.last().unwrap(), self.attracting[0]);
        let n = 50;
        for k in 1..=n {
            let s = k as f64 / n as f64;
            pts.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]), a[2] + s * (b[2] - a[2])]);
        }
        pts
    }
}

/// The connection problem for one system.
pub struct ConnectionProblem<'a> {
    pub sys: &'a SlowFastSystem,
    pub cfg: ConnectionConfig,
    fields: BlowupFields,
}

impl<'a> ConnectionProblem<'a> {
    pub fn new(sys: &'a SlowFastSystem, cfg: ConnectionConfig) -> Result<Self> {
        cfg.validate()?;
        sys.require_nondegenerate()?;
        Ok(ConnectionProblem { sys, cfg, fields: BlowupFields::new(sys) })
    }

    fn check_section(&self, eps1: f64, r1: f64) -> Result<()> {
        if !(eps1 > 0.0 && eps1 <= self.cfg.eps11) || !(r1 >= 0.0 && r1 <= self.cfg.r10) {
            return Err(CanardError::OutOfDomain(format!(
                "section point (eps1, r1) = ({eps1}, {r1}) outside (0, {}] x [0, {}]",
                self.cfg.eps11, self.cfg.r10
            )));
        }
        Ok(())
    }

    /// Transition from `(eps1, r1, y1, 0)` to `{z2 = 0, x2 > 0}`, forward in
    /// time on the attracting side and backward on the repelling side.
    pub fn separation(&self, side: Side, eps1: f64, r1: f64, y1: f64, mu: f64) -> Result<SeparationValue> {
        self.check_section(eps1, r1)?;
        let tol = &self.cfg.tol;
        let dir = match side {
            Side::Attracting => TimeDirection::Forward,
            Side::Repelling => TimeDirection::Backward,
        };
        let start = Chart1Point::new(eps1, r1, y1, 0.0);
        let (exit, chart1) = if eps1 >= self.cfg.eps11 {
            (start, None)
        } else {
            let f1 = |_t: f64, w: &[f64], dw: &mut [f64]| dw.copy_from_slice(&self.fields.chart1_at(w, mu));
            let sec = SectionSpec::coordinate(0, self.cfg.eps11, Crossing::Rising);
            let horizon = 4.0 / eps1 + 100.0;
            let hit = integrate_to_section(&f1, &start.to_array(), 0.0, &sec, dir, horizon, tol)?;
            (Chart1Point::from_slice(&hit.state), Some(hit.trajectory))
        };
        let p2 = chart1_to_chart2(&exit)?;
        let r2 = p2.r2;
        let f2 = |_t: f64, u: &[f64], du: &mut [f64]| du.copy_from_slice(&self.fields.chart2_at(r2, u, mu));
        // the guard keeps the sign fixed on x2 <= 0, where the leg is still approaching
        let away = match side {
            Side::Attracting => -1.0,
            Side::Repelling => 1.0,
        };
        let sec = SectionSpec::new(move |u: &[f64]| if u[0] > 0.0 { u[2] } else { away }, Crossing::Any);
        let hit = integrate_to_section(&f2, &[p2.x2, p2.y2, p2.z2], 0.0, &sec, dir, 500.0, tol)?;
        let s = &hit.state;
        let w = self.cfg.landing_window;
        if (s[0] - 0.5).abs() > w || s[1].abs() > w {
            return Err(CanardError::OutOfDomain(format!(
                "landing ({}, {}) outside the window around the strong canard",
                s[0], s[1]
            )));
        }
        Ok(SeparationValue { side, landing: [s[0], s[1]], landing_z2: s[2], r2, chart1, chart2: hit.trajectory })
    }

    /// `Delta_r - Delta_a` at the section point `(eps1, r1, y1, 0)`.
    pub fn mismatch(&self, eps1: f64, r1: f64, y1: f64, mu: f64) -> Result<[f64; 2]> {
        let a = self.separation(Side::Attracting, eps1, r1, y1, mu)?;
        let r = self.separation(Side::Repelling, eps1, r1, y1, mu)?;
        Ok([r.landing[0] - a.landing[0], r.landing[1] - a.landing[1]])
    }

    /// Strong canard `gamma_0` of the reduced problem at `mu`, followed from
    /// the folded singularity to the fibers `{x = -h^2}` on both sheets.
    pub fn singular_canard(&self, mu: f64, h: f64) -> Result<SingularCanard> {
        if !(h > 0.0) {
            return Err(CanardError::InvalidInput(format!("amplitude must be positive, got {h}")));
        }
        let sys = self.sys;
        let tol = self.cfg.tol;
        let field = |_t: f64, p: &[f64], dp: &mut [f64]| match sys.eval_reduced_field(p[0], p[1], mu, &tol) {
            Ok(v) => dp.copy_from_slice(&v),
            Err(_) => dp.fill(f64::NAN),
        };
        let sec = SectionSpec::new(
            move |p: &[f64]| sys.critical_manifold_x(p[0], p[1], mu, &tol).map_or(f64::NAN, |x| x + h * h),
            Crossing::Falling,
        );
        // strong eigenvector (mu, 1) with eigenvalue -1; backward time expands along it
        let delta = 1e-7 / (1.0 + mu * mu).sqrt();
        let mut legs = Vec::with_capacity(2);
        for sgn in [-1.0, 1.0] {
            let p0 = [sgn * delta * mu, sgn * delta];
            let hit = integrate_to_section(&field, &p0, 0.0, &sec, TimeDirection::Backward, 200.0, &tol)?;
            let mut pts = vec![[0.0, 0.0, 0.0]];
            for p in hit.trajectory.states() {
                let x = sys.critical_manifold_x(p[0], p[1], mu, &tol)?;
                pts.push([x, p[0], p[1]]);
            }
            let last = &hit.state;
            pts.push([sys.critical_manifold_x(last[0], last[1], mu, &tol)?, last[0], last[1]]);
            legs.push(pts);
        }
        let mut attracting = legs.remove(0);
        attracting.reverse();
        let repelling = legs.remove(0);
        Ok(SingularCanard { mu, h, attracting, repelling })
    }

    /// `mu_0(eps1, r1)`: the parameter at which the fast fiber at amplitude
    /// `r1` reconnects `gamma_0` to itself. This is the centering condition
    /// taken at `eps1 = 0`, so the result does not depend on `eps1`.
    pub fn mu0_predictor(&self, eps1: f64, r1: f64) -> Result<f64> {
        Ok(self.centering(eps1, r1)?.0)
    }

    /// `(mu_0, y1_0)`: `mu_0` as in [`Self::mu0_predictor`] and `y1_0` the
    /// entry-chart `y1` of the reconnecting fiber.
    pub fn centering(&self, eps1: f64, r1: f64) -> Result<(f64, f64)> {
        if !(eps1 >= 0.0 && eps1 <= self.cfg.eps11) || !(r1 >= 0.0 && r1 <= self.cfg.r10) {
            return Err(CanardError::OutOfDomain(format!("(eps1, r1) = ({eps1}, {r1}) outside the entry box")));
        }
        if r1 == 0.0 {
            return Ok((0.0, 0.0));
        }
        let f = |m: &[f64]| self.singular_canard(m[0], r1).map(|c| vec![c.mismatch() / r1]);
        let tol = Tolerances { newton_tol: 1e-13, ..self.cfg.tol };
        let mu0 = newton_solve(&f, &[0.0], &tol, None)?.x[0];
        let c = self.singular_canard(mu0, r1)?;
        let y = 0.5 * (c.attracting[0][1] + c.repelling.last().unwrap()[1]);
        Ok((mu0, y / r1))
    }

    /// Solves `Delta_r = Delta_a` for `(y1, mu)` in the scaled unknowns
    /// `y1 = y1_0 + k y_hat`, `mu = mu0 + k mu_hat`,
    /// `k = (eps1 / eps11)^lambda(mu0)`, seeded at the origin.
    pub fn solve_connection(&self, eps1: f64, r1: f64) -> Result<BranchPoint> {
        self.solve_connection_from(eps1, r1, [0.0, 0.0])
    }

    /// As [`Self::solve_connection`] from a seed in the scaled unknowns.
    pub fn solve_connection_from(&self, eps1: f64, r1: f64, seed: [f64; 2]) -> Result<BranchPoint> {
        self.check_section(eps1, r1)?;
        let (mu0, y0) = self.centering(eps1, r1)?;
        let k = (eps1 / self.cfg.eps11).powf(lambda_mu(mu0));
        let f = |p: &[f64]| self.mismatch(eps1, r1, y0 + k * p[0], mu0 + k * p[1]).map(|d| d.to_vec());
        let step = self.cfg.fd_step;
        let jac = |p: &[f64]| central_jacobian(&f, p, step);
        let rep = newton_solve(&f, &seed, &self.cfg.tol, Some(&jac))?;
        let j: DMatrix<f64> = jac(&rep.x)?;
        Ok(BranchPoint {
            h: r1,
            eps: r1 * r1 * eps1,
            eps1,
            y1_star: y0 + k * rep.x[0],
            mu_star: mu0 + k * rep.x[1],
            mu0,
            y1_0: y0,
            residual: rep.residual,
            iterations: rep.iterations,
            jacobian_det: j.determinant(),
        })
    }

    /// Branch point of amplitude `h` at fixed `eps`.
    pub fn solve_at(&self, eps: f64, h: f64) -> Result<BranchPoint> {
        if !(h > 0.0) || !(eps > 0.0) {
            return Err(CanardError::InvalidInput(format!("need eps > 0 and h > 0, got ({eps}, {h})")));
        }
        self.solve_connection(eps / (h * h), h)
    }

    /// Closed orbit of a branch point in ambient coordinates.
    pub fn reconstruct_cycle(&self, bp: &BranchPoint) -> Result<CycleOrbit> {
        let a = self.separation(Side::Attracting, bp.eps1, bp.h, bp.y1_star, bp.mu_star)?;
        let r = self.separation(Side::Repelling, bp.eps1, bp.h, bp.y1_star, bp.mu_star)?;
        let mut eps_drift: f64 = 0.0;
        let mut leg = |s: &SeparationValue| -> Vec<[f64; 3]> {
            let mut pts = Vec::new();
            if let Some(tr) = &s.chart1 {
                for w in tr.states() {
                    let (p, e) = blow_down_chart1(&Chart1Point::from_slice(w));
                    eps_drift = eps_drift.max((e - bp.eps).abs());
                    pts.push([p.x, p.y, p.z]);
                }
            }
            for u in s.chart2.states() {
                let (p, _) = blow_down_chart2(&Chart2Point::new(s.r2, u[0], u[1], u[2]));
                pts.push([p.x, p.y, p.z]);
            }
            pts
        };
        let mut pts = leg(&a);
        let mut back = leg(&r);
        let (pa, pr) = (*pts.last().unwrap(), *back.last().unwrap());
        let gap = dist(&pa, &pr);
        if !(gap <= self.cfg.closure_tol) {
            return Err(CanardError::ClosureGap { gap, limit: self.cfg.closure_tol });
        }
        back.reverse();
        pts.extend(back.into_iter().skip(1));
        Ok(CycleOrbit {
            h: bp.h,
            eps: bp.eps,
            mu: bp.mu_star,
            samples: resample_arclength(&pts, self.cfg.samples),
            gap,
            eps_drift,
        })
    }

    /// End-to-end check in ambient coordinates: both legs from the section
    /// point `(-h^2, h y1, 0)` under the original field at `(eps, mu_bar)`
    /// up to `{z = 0, x > 0}`; returns the distance of the two landings.
    pub fn ambient_reclosure(&self, bp: &BranchPoint) -> Result<f64> {
        let params = Params::new(bp.eps, bp.mu_star)?;
        let sys = self.sys;
        let field = |_t: f64, s: &[f64], ds: &mut [f64]| {
            ds.copy_from_slice(&sys.eval_fast_field(&AmbientState::new(s[0], s[1], s[2]), &params));
        };
        let x0 = [-bp.h * bp.h, bp.h * bp.y1_star, 0.0];
        let tol = Tolerances { abs_tol: 1e-14, rel_tol: 1e-12, ..self.cfg.tol };
        let horizon = 20.0 / bp.eps + 1000.0;
        let mut ends = Vec::with_capacity(2);
        for (dir, away) in [(TimeDirection::Forward, -1.0), (TimeDirection::Backward, 1.0)] {
            let sec = SectionSpec::new(move |u: &[f64]| if u[0] > 0.0 { u[2] } else { away }, Crossing::Any);
            ends.push(integrate_to_section(&field, &x0, 0.0, &sec, dir, horizon, &tol)?.state);
        }
        Ok(dist(&[ends[0][0], ends[0][1], ends[0][2]], &[ends[1][0], ends[1][1], ends[1][2]]))
    }

    /// Symmetric Hausdorff distance between a reconstructed cycle and the
    /// singular canard cycle at `mu` with the same amplitude.
    pub fn hausdorff_to_singular(&self, orbit: &CycleOrbit, mu: f64) -> Result<f64> {
        let sing = self.singular_canard(mu, orbit.h)?.cycle();
        let sing = resample_arclength(&sing, 4 * self.cfg.samples);
        Ok(hausdorff(&orbit.samples, &sing))
    }

    /// Compares the connection branch with the small-cycle branch on the
    /// orbit whose scaling-chart amplitude is `1 / eps11`.
    pub fn seam_check(&self, eps: f64, mcfg: &MelnikovConfig) -> Result<SeamReport> {
        let r2 = eps.sqrt();
        let h_small = 1.0 / self.cfg.eps11;
        let sp: SmallBranchPoint = solve_small_branch(self.sys, h_small, r2, mcfg)?;
        let res = solve_invariant_series(self.sys, r2, sp.mu2_bar, &mcfg.manifold)?;
        let (m, _) = res.eval_with_derivative(sp.y2_bar);
        let mu = sp.mu();
        // the small cycle starts on {u2 = 0}; move it onto {z2 = 0}
        let p0 = [m[0] - h_small, sp.y2_bar, m[1]];
        let c2 = |_t: f64, u: &[f64], du: &mut [f64]| du.copy_from_slice(&self.fields.chart2_at(r2, u, mu));
        let dir = if p0[2] > 0.0 { TimeDirection::Forward } else { TimeDirection::Backward };
        let cross = if p0[2] == 0.0 {
            p0.to_vec()
        } else {
            let sec = SectionSpec::new(|u: &[f64]| u[2], Crossing::Any);
            integrate_to_section(&c2, &p0, 0.0, &sec, dir, 1.0, &self.cfg.tol)?.state
        };
        let eps1 = -1.0 / cross[0];
        let r1 = r2 * (-cross[0]).sqrt();
        let k = (eps1 / self.cfg.eps11).powf(lambda_mu(mu));
        let (_, y0) = self.centering(eps1, r1)?;
        let y_hat = (cross[1] * eps1.sqrt() - y0) / k;
        let bp = if eps1 <= self.cfg.eps11 {
            self.solve_connection_from(eps1, r1, [y_hat, 0.0])?
        } else {
            // the orbit lies just inside x2 = -1/eps11: start from its section point in chart 2
            return Err(CanardError::OutOfDomain(format!("seam orbit crosses at eps1 = {eps1} > eps11")));
        };
        let mismatch = (bp.mu_star - mu).abs();
        Ok(SeamReport { eps, h_small, r1, eps1, mu_small: mu, mu_connection: bp.mu_star, mismatch })
    }
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// `n` points equally spaced in arclength along a polyline.
pub fn resample_arclength(pts: &[[f64; 3]], n: usize) -> Vec<[f64; 3]> {
    if pts.len() < 2 || n < 2 {
        return pts.to_vec();
    }
    let mut cum = vec![0.0];
    for w in pts.windows(2) {
        cum.push(cum.last().unwrap() + dist(&w[0], &w[1]));
    }
    let total = *cum.last().unwrap();
    if total == 0.0 {
        return vec![pts[0]; n];
    }
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        let s = total * i as f64 / (n - 1) as f64;
        while j + 2 < cum.len() && cum[j + 1] < s {
            j += 1;
        }
        let seg = cum[j + 1] - cum[j];
        let t = if seg > 0.0 { ((s - cum[j]) / seg).clamp(0.0, 1.0) } else { 0.0 };
        let (a, b) = (pts[j], pts[j + 1]);
        out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]);
    }
    out
}

fn point_segment(p: &[f64; 3], a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let dd = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    let t = if dd > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1] + (p[2] - a[2]) * d[2]) / dd).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, &[a[0] + t * d[0], a[1] + t * d[1], a[2] + t * d[2]])
}

fn directed(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    a.iter()
        .map(|p| {
            if b.len() == 1 {
                return dist(p, &b[0]);
            }
            b.windows(2).map(|w| point_segment(p, &w[0], &w[1])).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between two polylines, measured from the
/// vertices of each to the segments of the other.
pub fn hausdorff(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    directed(a, b).max(directed(b, a))
}

/// Connection branch over `n` amplitudes in `[h_min, h_max]` at fixed `eps`;
/// with `seam` set, the gluing with the small cycles is checked as well.
pub fn branch_sweep(
    sys: &SlowFastSystem,
    eps: f64,
    h_range: (f64, f64),
    n: usize,
    cfg: &ConnectionConfig,
    seam: Option<&MelnikovConfig>,
) -> Result<CycleFamily> {
    let hs = sweep_amplitudes(eps, h_range, n, cfg)?;
    let prob = ConnectionProblem::new(sys, *cfg)?;
    let mut records = Vec::with_capacity(n);
    for h in hs {
        let bp = prob.solve_at(eps, h)?;
        let orbit = prob.reconstruct_cycle(&bp)?;
        records.push((bp, orbit));
    }
    let seam = match seam {
        Some(m) => {
            let s = prob.seam_check(eps, m)?;
            if s.mismatch > cfg.seam_tol {
                return Err(CanardError::SeamMismatch { mismatch: s.mismatch, limit: cfg.seam_tol });
            }
            Some(s)
        }
        None => None,
    };
    Ok(CycleFamily::assemble(eps, records, seam))
}

/// Amplitudes of a sweep; every one must keep `eps / h^2 <= eps10`.
pub fn sweep_amplitudes(eps: f64, h_range: (f64, f64), n: usize, cfg: &ConnectionConfig) -> Result<Vec<f64>> {
    let (a, b) = h_range;
    if !(eps > 0.0) || !(a > 0.0 && a <= b && b <= cfg.r10) || n == 0 || (n == 1 && a != b) {
        return Err(CanardError::InvalidInput(format!("bad sweep eps = {eps}, h in [{a}, {b}], n = {n}")));
    }
    if eps / (a * a) > cfg.eps10 {
        return Err(CanardError::OutOfDomain(format!(
            "h = {a} gives eps1 = {} > {}; use the small-cycle branch there",
            eps / (a * a),
            cfg.eps10
        )));
    }
    Ok((0..n).map(|i| if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect())
}

pub fn max_residual(points: &[BranchPoint]) -> f64 {
    max_norm(&points.iter().map(|p| p.residual).collect::<Vec<_>>())
}
