//! Dormand-Prince 5(4) integrator with Hairer's continuous extension and
//! section (event) location on the dense output.

use super::Tolerances;
use crate::error::{CanardError, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Below this rate of change a section hit is treated as tangential.
pub const TANGENT_RATE_MIN: f64 = 1e-10;

/// Step-control settings for a single integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
    /// Largest admissible |h|; infinite by default.
    pub h_max: f64,
}

impl OdeOptions {
    pub fn from_tolerances(tol: &Tolerances) -> Self {
        OdeOptions {
            abs_tol: tol.abs_tol,
            rel_tol: tol.rel_tol,
            max_steps: 2_000_000,
            h_max: f64::INFINITY,
        }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }
}

/// Dense trajectory produced by [`integrate`].
///
/// Each accepted step keeps the five Hairer coefficient vectors, so the
/// solution can be evaluated anywhere between the first and last stored time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    step_t0: Vec<f64>,
    step_h: Vec<f64>,
    dense: Vec<f64>,
}

impl Trajectory {
    fn new(t0: f64, x0: &[f64]) -> Self {
        Trajectory {
            dim: x0.len(),
            times: vec![t0],
            states: x0.to_vec(),
            step_t0: Vec::new(),
            step_h: Vec::new(),
            dense: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored nodes (steps + 1).
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks(self.dim)
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn first_state(&self) -> &[f64] {
        self.state(0)
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    fn forward(&self) -> bool {
        self.t_end() >= self.t_start()
    }

    fn step_index(&self, t: f64) -> usize {
        let n = self.step_h.len();
        if n == 0 {
            return 0;
        }
        let fwd = self.forward();
        // first node strictly beyond t in the direction of integration
        let k = self.times.partition_point(|&s| if fwd { s <= t } else { s >= t });
        k.saturating_sub(1).min(n - 1)
    }

    fn eval_step_into(&self, k: usize, t: f64, out: &mut [f64]) {
        let d = self.dim;
        let c = &self.dense[5 * d * k..5 * d * (k + 1)];
        let s = (t - self.step_t0[k]) / self.step_h[k];
        let s1 = 1.0 - s;
        for i in 0..d {
            out[i] = c[i] + s * (c[d + i] + s1 * (c[2 * d + i] + s * (c[3 * d + i] + s1 * c[4 * d + i])));
        }
    }

    /// Evaluate the dense output at `t`; times outside the covered interval
    /// are clamped to its ends.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out);
        out
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        if self.step_h.is_empty() {
            out.copy_from_slice(self.state(0));
            return;
        }
        let (lo, hi) = if self.forward() {
            (self.t_start(), self.t_end())
        } else {
            (self.t_end(), self.t_start())
        };
        let tc = t.clamp(lo, hi);
        let k = self.step_index(tc);
        self.eval_step_into(k, tc, out);
    }

    /// `n >= 2` samples equally spaced in time, endpoints included.
    pub fn sample_uniform(&self, n: usize) -> Vec<(f64, Vec<f64>)> {
        let n = n.max(2);
        let (a, b) = (self.t_start(), self.t_end());
        (0..n)
            .map(|i| {
                let t = if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 };
                (t, self.eval(t))
            })
            .collect()
    }

    /// Cut the trajectory at an interior time `t`; the step containing `t`
    /// keeps its dense coefficients so evaluation stays consistent.
    pub fn truncate_at(&mut self, t: f64) {
        if self.step_h.is_empty() {
            return;
        }
        let k = self.step_index(t);
        let x = self.eval(t);
        self.step_t0.truncate(k + 1);
        self.step_h.truncate(k + 1);
        self.dense.truncate(5 * self.dim * (k + 1));
        self.times.truncate(k + 2);
        self.states.truncate(self.dim * (k + 2));
        self.times[k + 1] = t;
        let d = self.dim;
        self.states[d * (k + 1)..].copy_from_slice(&x);
    }
}

/// Crossing direction of a section, measured along integration progress.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    Rising,
    Falling,
    Any,
}

/// Integration direction in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeDirection {
    Forward,
    Backward,
}

impl TimeDirection {
    pub fn sign(self) -> f64 {
        match self {
            TimeDirection::Forward => 1.0,
            TimeDirection::Backward => -1.0,
        }
    }
}

/// A scalar event function with a crossing direction.
pub struct SectionSpec<'a> {
    pub g: Box<dyn Fn(&[f64]) -> f64 + Send + Sync + 'a>,
    pub direction: Crossing,
    /// Crossings closer than this (in |t - t0|) to the start are ignored.
    pub skip: f64,
}

impl<'a> SectionSpec<'a> {
    pub fn new(g: impl Fn(&[f64]) -> f64 + Send + Sync + 'a, direction: Crossing) -> Self {
        SectionSpec { g: Box::new(g), direction, skip: 0.0 }
    }

    /// Section `{x[i] = value}`.
    pub fn coordinate(i: usize, value: f64, direction: Crossing) -> SectionSpec<'static> {
        SectionSpec::new(move |x: &[f64]| x[i] - value, direction)
    }

    pub fn with_skip(mut self, skip: f64) -> Self {
        self.skip = skip;
        self
    }

    fn matches(&self, g_prev: f64, g_new: f64) -> bool {
        let rising = g_prev < 0.0 && g_new >= 0.0;
        let falling = g_prev > 0.0 && g_new <= 0.0;
        match self.direction {
            Crossing::Rising => rising,
            Crossing::Falling => falling,
            Crossing::Any => rising || falling,
        }
    }
}

/// Result of [`integrate_to_section`].
#[derive(Debug, Clone)]
pub struct SectionHit {
    pub t: f64,
    pub state: Vec<f64>,
    /// Trajectory from the start up to and including the hit.
    pub trajectory: Trajectory,
}

fn norm_scaled(v: &[f64], y: &[f64], y1: &[f64], atol: f64, rtol: f64) -> f64 {
    let n = v.len().max(1) as f64;
    let s: f64 = v
        .iter()
        .zip(y.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sk = atol + rtol * a.abs().max(b.abs());
            (e / sk) * (e / sk)
        })
        .sum();
    (s / n).sqrt()
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Adaptive DOPRI5 engine. After every accepted step `stop` is called with
/// the trajectory so far; returning `true` ends the integration.
pub fn integrate_with<F, S>(
    field: &F,
    x0: &[f64],
    t0: f64,
    t1: f64,
    opts: &OdeOptions,
    mut stop: S,
) -> Result<Trajectory>
where
    F: Fn(f64, &[f64], &mut [f64]) + ?Sized,
    S: FnMut(&Trajectory) -> Result<bool>,
{
    if t0 == t1 || !t0.is_finite() || !t1.is_finite() {
        return Err(CanardError::InvalidInput(format!("invalid time span [{t0}, {t1}]")));
    }
    if !all_finite(x0) {
        return Err(CanardError::InvalidInput("non-finite initial state".into()));
    }
    let n = x0.len();
    let dir = (t1 - t0).signum();
    let (atol, rtol) = (opts.abs_tol, opts.rel_tol);
    let mut traj = Trajectory::new(t0, x0);

    let mut y = x0.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ys = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut err = vec![0.0; n];

    let mut t = t0;
    field(t, &y, &mut k1);
    if !all_finite(&k1) {
        return Err(CanardError::FieldEvaluation { t });
    }

    // initial step (Hairer's heuristic)
    let span = (t1 - t0).abs();
    let mut h = {
        let sk: Vec<f64> = y.iter().map(|v| atol + rtol * v.abs()).collect();
        let d0 = (y.iter().zip(&sk).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n as f64).sqrt();
        let d1 = (k1.iter().zip(&sk).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n as f64).sqrt();
        let mut h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(opts.h_max).min(span);
        for i in 0..n {
            ys[i] = y[i] + dir * h0 * k1[i];
        }
        field(t + dir * h0, &ys, &mut k2);
        let d2 = (k2.iter().zip(&k1).zip(&sk).map(|((a, b), s)| ((a - b) / s).powi(2)).sum::<f64>()
            / n as f64)
            .sqrt()
            / h0;
        let dm = d1.max(d2);
        let h1 = if dm <= 1e-15 || !dm.is_finite() {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / dm).powf(0.2)
        };
        (100.0 * h0).min(h1).min(opts.h_max).min(span) * dir
    };

    let mut facold: f64 = 1e-4;
    let mut reject = false;
    let mut steps = 0usize;
    let expo1 = 0.2 - BETA * 0.75;

    loop {
        if steps >= opts.max_steps {
            return Err(CanardError::TooManySteps(opts.max_steps));
        }
        if (t + 1.01 * h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        if h.abs() <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(CanardError::StepSizeUnderflow { t, h });
        }
        steps += 1;

        for i in 0..n {
            ys[i] = y[i] + h * A21 * k1[i];
        }
        field(t + C2 * h, &ys, &mut k2);
        for i in 0..n {
            ys[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        field(t + C3 * h, &ys, &mut k3);
        for i in 0..n {
            ys[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        field(t + C4 * h, &ys, &mut k4);
        for i in 0..n {
            ys[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        field(t + C5 * h, &ys, &mut k5);
        for i in 0..n {
            ys[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        field(t + h, &ys, &mut k6);
        for i in 0..n {
            y1[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        field(t + h, &y1, &mut k7);
        for i in 0..n {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }

        if !all_finite(&y1) || !all_finite(&k7) || !all_finite(&err) {
            // treat as a hard rejection; a persistent failure ends in underflow
            if h.abs() <= 1e3 * f64::EPSILON * t.abs().max(1.0) {
                return Err(CanardError::FieldEvaluation { t: t + h });
            }
            h *= 0.25;
            reject = true;
            continue;
        }

        let e = norm_scaled(&err, &y, &y1, atol, rtol);
        let fac11 = e.powf(expo1);
        if e <= 1.0 {
            let fac = (fac11 / facold.powf(BETA) / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut hnew = h / fac;
            if hnew.abs() > opts.h_max {
                hnew = opts.h_max * dir;
            }
            if reject && hnew.abs() > h.abs() {
                hnew = h;
            }
            facold = e.max(1e-4);

            traj.step_t0.push(t);
            traj.step_h.push(h);
            for i in 0..n {
                traj.dense.push(y[i]);
            }
            for i in 0..n {
                traj.dense.push(y1[i] - y[i]);
            }
            for i in 0..n {
                traj.dense.push(h * k1[i] - (y1[i] - y[i]));
            }
            for i in 0..n {
                let bspl = h * k1[i] - (y1[i] - y[i]);
                traj.dense.push((y1[i] - y[i]) - h * k7[i] - bspl);
            }
            for i in 0..n {
                traj.dense
                    .push(h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]));
            }

            let last = (t + h - t1) * dir >= 0.0;
            t = if last { t1 } else { t + h };
            traj.times.push(t);
            traj.states.extend_from_slice(&y1);
            std::mem::swap(&mut y, &mut y1);
            std::mem::swap(&mut k1, &mut k7);

            if stop(&traj)? || last {
                return Ok(traj);
            }
            h = hnew;
            reject = false;
        } else {
            h /= (fac11 / SAFE).min(1.0 / FAC_MIN);
            reject = true;
        }
    }
}

/// Integrate `field` over `t_span`; backward in time when `t_span.1 < t_span.0`.
pub fn integrate<F>(field: &F, x0: &[f64], t_span: (f64, f64), tol: &Tolerances) -> Result<Trajectory>
where
    F: Fn(f64, &[f64], &mut [f64]) + ?Sized,
{
    integrate_with(field, x0, t_span.0, t_span.1, &OdeOptions::from_tolerances(tol), |_| Ok(false))
}

/// Integrate until the first crossing of `section` (in the requested
/// direction) within `horizon` units of time from `t0`.
pub fn integrate_to_section<F>(
    field: &F,
    x0: &[f64],
    t0: f64,
    section: &SectionSpec<'_>,
    direction: TimeDirection,
    horizon: f64,
    tol: &Tolerances,
) -> Result<SectionHit>
where
    F: Fn(f64, &[f64], &mut [f64]) + ?Sized,
{
    let opts = OdeOptions::from_tolerances(tol);
    integrate_to_section_with(field, x0, t0, section, direction, horizon, tol.event_tol, &opts)
}

/// As [`integrate_to_section`] with explicit step-control options.
#[allow(clippy::too_many_arguments)]
pub fn integrate_to_section_with<F>(
    field: &F,
    x0: &[f64],
    t0: f64,
    section: &SectionSpec<'_>,
    direction: TimeDirection,
    horizon: f64,
    event_tol: f64,
    opts: &OdeOptions,
) -> Result<SectionHit>
where
    F: Fn(f64, &[f64], &mut [f64]) + ?Sized,
{
    if horizon <= 0.0 || !horizon.is_finite() {
        return Err(CanardError::InvalidInput(format!("horizon must be positive, got {horizon}")));
    }
    let g = &section.g;
    let t1 = t0 + direction.sign() * horizon;
    let mut g_prev = g(x0);
    let mut bracket: Option<(f64, f64, f64, f64)> = None;
    let mut scratch = vec![0.0; x0.len()];

    let traj = integrate_with(field, x0, t0, t1, opts, |tr| {
        let k = tr.len() - 1;
        let (ta, tb) = (tr.times()[k - 1], tr.times()[k]);
        let g_new = g(tr.state(k));
        let g_old = g_prev;
        g_prev = g_new;
        if (tb - t0).abs() < section.skip {
            return Ok(false);
        }
        if section.matches(g_old, g_new) {
            // the skip window may cut the step: restart the bracket at its edge
            let mut ta = ta;
            let mut ga = g_old;
            if (ta - t0).abs() < section.skip {
                ta = t0 + direction.sign() * section.skip;
                tr.eval_into(ta, &mut scratch);
                ga = g(&scratch);
                if !section.matches(ga, g_new) {
                    return Ok(false);
                }
            }
            bracket = Some((ta, ga, tb, g_new));
            return Ok(true);
        }
        Ok(false)
    })?;

    let (mut ta, mut ga, mut tb, mut gb) = match bracket {
        Some(b) => b,
        None => return Err(CanardError::NoCrossing { horizon }),
    };
    let mut x = vec![0.0; traj.dim()];
    let (mut t_best, mut g_best) = if ga.abs() < gb.abs() { (ta, ga) } else { (tb, gb) };
    // Illinois false position on the dense output
    let mut side = 0i32;
    for _ in 0..200 {
        if g_best.abs() <= event_tol && (tb - ta).abs() <= 1e-6 * (1.0 + tb.abs()) {
            break;
        }
        if (tb - ta).abs() <= 4.0 * f64::EPSILON * tb.abs().max(1.0) {
            break;
        }
        let mut tm = (ta * gb - tb * ga) / (gb - ga);
        if !tm.is_finite() || (tm - ta) * (tm - tb) > 0.0 {
            tm = 0.5 * (ta + tb);
        }
        traj.eval_into(tm, &mut x);
        let gm = g(&x);
        if gm.abs() < g_best.abs() || (gm.abs() == g_best.abs() && (tm - ta).abs() < (t_best - ta).abs()) {
            t_best = tm;
            g_best = gm;
        }
        if gm == 0.0 {
            break;
        }
        if (gm > 0.0) == (gb > 0.0) {
            tb = tm;
            gb = gm;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        } else {
            ta = tm;
            ga = gm;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        }
    }

    // transversality: rate of g along the flow, relative to time progress
    let h_loc = (traj.times()[traj.len() - 1] - traj.times()[traj.len() - 2]).abs();
    let delta = (1e-4 * h_loc).max(1e-12);
    let dir = direction.sign();
    let mut xp = vec![0.0; traj.dim()];
    let mut xm = vec![0.0; traj.dim()];
    traj.eval_into(t_best + dir * delta, &mut xp);
    traj.eval_into(t_best - dir * delta, &mut xm);
    let rate = (g(&xp) - g(&xm)) / (2.0 * delta);
    if rate.abs() < TANGENT_RATE_MIN {
        return Err(CanardError::TangentialCrossing { t: t_best, rate });
    }

    let mut trajectory = traj;
    trajectory.truncate_at(t_best);
    let state = trajectory.last_state().to_vec();
    Ok(SectionHit { t: t_best, state, trajectory })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances { abs_tol: 1e-12, rel_tol: 1e-11, ..Tolerances::default() }
    }

    fn harmonic(_t: f64, x: &[f64], dx: &mut [f64]) {
        dx[0] = -x[1];
        dx[1] = x[0];
    }

    #[test]
    fn zero_field_is_constant() {
        let tr = integrate(&|_t: f64, _x: &[f64], dx: &mut [f64]| dx.fill(0.0), &[1.0, 2.0], (0.0, 1.0), &tol())
            .unwrap();
        for s in tr.states() {
            assert_eq!(s, &[1.0, 2.0]);
        }
    }

    #[test]
    fn exponential_growth() {
        let tr = integrate(&|_t: f64, x: &[f64], dx: &mut [f64]| dx[0] = x[0], &[1.0], (0.0, 1.0), &tol()).unwrap();
        let e = std::f64::consts::E;
        assert!((tr.last_state()[0] - e).abs() / e < 1e-10);
        assert_eq!(tr.t_end(), 1.0);
    }

    #[test]
    fn harmonic_oscillator_period() {
        let t = tol();
        let tr = integrate(&harmonic, &[1.0, 0.0], (0.0, 2.0 * std::f64::consts::PI), &t).unwrap();
        let x = tr.last_state();
        assert!((x[0] - 1.0).abs() < 10.0 * t.rel_tol);
        assert!(x[1].abs() < 10.0 * t.rel_tol);
    }

    #[test]
    fn dense_output_matches_nodes_and_exact() {
        let tr = integrate(&harmonic, &[1.0, 0.0], (0.0, 3.0), &tol()).unwrap();
        for i in 0..tr.len() {
            let v = tr.eval(tr.times()[i]);
            assert!((v[0] - tr.state(i)[0]).abs() < 1e-14);
        }
        for k in 0..50 {
            let s = 0.06 * k as f64;
            let v = tr.eval(s);
            assert!((v[0] - s.cos()).abs() < 1e-8);
            assert!((v[1] - s.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn backward_time() {
        let tr = integrate(&|_t: f64, x: &[f64], dx: &mut [f64]| dx[0] = x[0], &[1.0], (0.0, -1.0), &tol()).unwrap();
        assert!((tr.last_state()[0] - (-1.0f64).exp()).abs() < 1e-10);
        assert!(tr.times().windows(2).all(|w| w[1] < w[0]));
        let mid = tr.eval(-0.5)[0];
        assert!((mid - (-0.5f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn section_harmonic_half_period() {
        let sec = SectionSpec::coordinate(1, 0.0, Crossing::Falling);
        let hit = integrate_to_section(&harmonic, &[1.0, 0.0], 0.0, &sec, TimeDirection::Forward, 10.0, &tol()).unwrap();
        assert!((hit.t - std::f64::consts::PI).abs() < 1e-9);
        assert!((hit.state[0] + 1.0).abs() < 1e-9);
        assert!(hit.state[1].abs() <= tol().event_tol);
    }

    #[test]
    fn section_rising_skips_falling() {
        // y rises first (y = sin t), so a rising crossing of y = 0 is at 2 pi
        let sec = SectionSpec::coordinate(1, 0.0, Crossing::Rising);
        let hit = integrate_to_section(&harmonic, &[1.0, 0.0], 0.0, &sec, TimeDirection::Forward, 10.0, &tol()).unwrap();
        assert!((hit.t - 2.0 * std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn section_unit_speed() {
        let sec = SectionSpec::coordinate(0, 0.0, Crossing::Any);
        let hit = integrate_to_section(
            &|_t: f64, _x: &[f64], dx: &mut [f64]| dx[0] = 1.0,
            &[-1.0],
            0.0,
            &sec,
            TimeDirection::Forward,
            5.0,
            &tol(),
        )
        .unwrap();
        assert!((hit.t - 1.0).abs() < 1e-12);
        assert!(hit.state[0].abs() < 1e-12);
    }

    #[test]
    fn no_crossing_reported() {
        let sec = SectionSpec::coordinate(0, 10.0, Crossing::Any);
        let r = integrate_to_section(
            &|_t: f64, _x: &[f64], dx: &mut [f64]| dx[0] = 1.0,
            &[0.0],
            0.0,
            &sec,
            TimeDirection::Forward,
            2.0,
            &tol(),
        );
        assert!(matches!(r, Err(CanardError::NoCrossing { .. })));
    }

    #[test]
    fn tangential_crossing_rejected() {
        // g = x^5 changes sign at x = 0 with vanishing rate
        let sec = SectionSpec::new(|x: &[f64]| x[0].powi(5), Crossing::Any);
        let r = integrate_to_section(
            &|_t: f64, _x: &[f64], dx: &mut [f64]| dx[0] = 1.0,
            &[-1.0],
            0.0,
            &sec,
            TimeDirection::Forward,
            3.0,
            &tol(),
        );
        assert!(matches!(r, Err(CanardError::TangentialCrossing { .. })), "{r:?}");
    }

    #[test]
    fn truncation_keeps_dense_output() {
        let mut tr = integrate(&harmonic, &[1.0, 0.0], (0.0, 3.0), &tol()).unwrap();
        let before = tr.eval(1.3);
        tr.truncate_at(1.7);
        assert_eq!(tr.t_end(), 1.7);
        assert_eq!(tr.eval(1.3), before);
        assert!((tr.last_state()[0] - 1.7f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn step_size_underflow_on_blowup() {
        // x' = x^2 blows up at t = 1
        let r = integrate(&|_t: f64, x: &[f64], dx: &mut [f64]| dx[0] = x[0] * x[0], &[1.0], (0.0, 2.0), &tol());
        assert!(r.is_err());
    }
}
