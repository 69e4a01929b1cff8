//! The layer problem of the scaling chart:
//! `x2' = y2 - z2`, `y2' = 0`, `z2' = x2 + z2^2`.
//!
//! Inside `y2 = 0` it is reversible and has the first integral
//! `H = (x2 + z2^2 - 1/2) exp(2 x2)`; the level `H = 0` is the strong
//! canard parabola and the closed level sets `H < 0` are the periodic
//! orbits `phi_h` through `(-h, 0)`.

use nalgebra::{Complex, Matrix2};
use serde::{Deserialize, Serialize};

use crate::blowup::Chart2Point;
use crate::error::{CanardError, Result};
use crate::numerics::{integrate_to_section, Crossing, SectionSpec, TimeDirection, Tolerances, Trajectory};

pub fn first_integral(x2: f64, z2: f64) -> f64 {
    (x2 + z2 * z2 - 0.5) * (2.0 * x2).exp()
}

/// Layer field within `y2 = 0` on `(x2, z2)`.
pub fn layer_field(u: &[f64], du: &mut [f64]) {
    du[0] = -u[1];
    du[1] = u[0] + u[1] * u[1];
}

/// Point of the strong canard at r2 = 0: `(1/2 - t2^2/4, mu t2 / 2, t2 / 2)`.
pub fn strong_canard_point(mu: f64, t2: f64) -> Chart2Point {
    Chart2Point { r2: 0.0, x2: 0.5 - 0.25 * t2 * t2, y2: 0.5 * mu * t2, z2: 0.5 * t2 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Attracting,
    Repelling,
    Degenerate,
}

/// Linearization of the layer problem at the point `(-y2^2, y2)` of C2.
pub fn layer_linearization(y2: f64) -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 2.0 * y2)
}

pub fn layer_eigenvalues(y2: f64) -> [Complex<f64>; 2] {
    let ev = layer_linearization(y2).complex_eigenvalues();
    let (a, b) = (ev[0], ev[1]);
    if a.im >= b.im {
        [a, b]
    } else {
        [b, a]
    }
}

pub fn classify_c2(y2: f64) -> Stability {
    if y2 < 0.0 {
        Stability::Attracting
    } else if y2 > 0.0 {
        Stability::Repelling
    } else {
        Stability::Degenerate
    }
}

/// One closed orbit of the planar layer problem.
#[derive(Debug, Clone)]
pub struct LayerOrbit {
    pub h: f64,
    pub period: f64,
    /// `(x2, z2)` over one period, starting and ending at `(-h, 0)`.
    pub samples: Trajectory,
    /// Largest relative deviation of the first integral from its initial value.
    pub max_drift: f64,
}

impl LayerOrbit {
    /// Rows `(t, x2, z2, H)` equally spaced in time.
    pub fn table(&self, n: usize) -> Vec<[f64; 4]> {
        self.samples
            .sample_uniform(n)
            .into_iter()
            .map(|(t, u)| [t, u[0], u[1], first_integral(u[0], u[1])])
            .collect()
    }
}

/// Integrates the orbit through `(-h, 0)` until it returns to
/// `{z2 = 0, x2 < 0}`.
pub fn periodic_orbit(h: f64, tol: &Tolerances) -> Result<LayerOrbit> {
    if !(h > 0.0) {
        return Err(CanardError::InvalidInput(format!("amplitude must be positive, got {h}")));
    }
    let h0 = first_integral(-h, 0.0);
    if h0 >= 0.0 {
        return Err(CanardError::OutOfDomain(format!("h = {h} lies beyond the separatrix")));
    }
    let field = |_t: f64, u: &[f64], du: &mut [f64]| layer_field(u, du);
    // returns through z2 = 0 from above while x2 < 0
    let sec = SectionSpec::new(|u: &[f64]| if u[0] < 0.0 { u[1] } else { 1.0 }, Crossing::Falling);
    let horizon = 100.0 + 20.0 * h;
    let hit = integrate_to_section(&field, &[-h, 0.0], 0.0, &sec, TimeDirection::Forward, horizon, tol)
        .map_err(|e| match e {
            CanardError::NoCrossing { .. } => CanardError::OutOfDomain(format!("orbit through -{h} does not return")),
            other => other,
        })?;
    let max_drift = hit
        .trajectory
        .states()
        .map(|u| ((first_integral(u[0], u[1]) - h0) / h0).abs())
        .fold(0.0, f64::max);
    Ok(LayerOrbit { h, period: hit.t, samples: hit.trajectory, max_drift })
}

/// Symbolic check that the first integral is conserved: the derivative of
/// `(x + z^2 - 1/2)` along the field, plus `2 x'` times the same factor,
/// must vanish identically. Returns the largest coefficient of the result.
pub fn first_integral_symbolic_defect() -> f64 {
    use crate::poly::Poly;
    let x = Poly::var(2, 0);
    let z = Poly::var(2, 1);
    let xdot = z.scale(-1.0);
    let zdot = x.add(&z.mul(&z));
    // H = P e^{2x},  dH/dt = e^{2x} (P_x x' + P_z z' + 2 P x')
    let p = x.add(&z.mul(&z)).add(&Poly::constant(2, -0.5));
    let dp = p.derivative(0).mul(&xdot).add(&p.derivative(1).mul(&zdot));
    let total = dp.add(&p.mul(&xdot).scale(2.0));
    total.max_abs_coeff()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blowup::BlowupFields;
    use crate::numerics::integrate;
    use crate::system::SlowFastSystem;
    use std::f64::consts::PI;

    fn tight() -> Tolerances {
        Tolerances { abs_tol: 1e-14, rel_tol: 1e-13, event_tol: 1e-13, ..Tolerances::default() }
    }

    #[test]
    fn first_integral_values() {
        assert_eq!(first_integral(0.5, 0.0), 0.0);
        assert!((first_integral(-0.5, 0.0) + (-1.0f64).exp()).abs() < 1e-15);
        for t in [-1.0, 0.0, 2.0] {
            let p = strong_canard_point(0.0, t);
            assert!(first_integral(p.x2, p.z2).abs() < 1e-15);
        }
        assert_eq!(first_integral_symbolic_defect(), 0.0);
    }

    #[test]
    fn strong_canard_examples() {
        let p = strong_canard_point(0.0, 0.0);
        assert_eq!((p.x2, p.y2, p.z2), (0.5, 0.0, 0.0));
        let p = strong_canard_point(0.0, 2.0);
        assert_eq!((p.x2, p.y2, p.z2), (-0.5, 0.0, 1.0));
        let p = strong_canard_point(0.3, 2.0);
        assert!((p.y2 - 0.3).abs() < 1e-15 && p.x2 == -0.5 && p.z2 == 1.0);
    }

    #[test]
    fn strong_canard_solves_scaling_chart_at_r2_zero() {
        let bf = BlowupFields::new(&SlowFastSystem::canonical(0.0, 1.0));
        for k in 0..20 {
            let mu = -0.4 + 0.04 * k as f64;
            let t = -3.0 + 0.31 * k as f64;
            let p = strong_canard_point(mu, t);
            let v = bf.field_chart2(&p, mu);
            let want = [-0.5 * t, 0.5 * mu, 0.5];
            for i in 0..3 {
                assert!((v[i] - want[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn c2_classification() {
        assert_eq!(classify_c2(-0.2), Stability::Attracting);
        assert_eq!(classify_c2(0.2), Stability::Repelling);
        assert_eq!(classify_c2(0.0), Stability::Degenerate);
        let ev = layer_eigenvalues(0.0);
        assert!(ev[0].re.abs() < 1e-12 && (ev[0].im - 1.0).abs() < 1e-12);
        assert!(ev[1].re.abs() < 1e-12 && (ev[1].im + 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_orbit_period_near_two_pi() {
        let o = periodic_orbit(1e-3, &tight()).unwrap();
        assert!((o.period - 2.0 * PI).abs() < 1e-2);
    }

    #[test]
    fn half_amplitude_orbit_conserves_h() {
        let o = periodic_orbit(0.5, &tight()).unwrap();
        assert!(o.max_drift <= 1e-9, "{}", o.max_drift);
        let end = o.samples.last_state();
        assert!((end[0] + 0.5).abs() < 1e-9 && end[1].abs() <= 1e-12);
        assert!((first_integral(-0.5, 0.0) + (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn orbit_is_time_reversible() {
        let o = periodic_orbit(0.5, &tight()).unwrap();
        let t = o.period;
        for k in 1..20 {
            let s = t * k as f64 / 20.0;
            let a = o.samples.eval(s);
            let b = o.samples.eval(t - s);
            assert!((a[0] - b[0]).abs() < 1e-8);
            assert!((a[1] + b[1]).abs() < 1e-8);
        }
    }

    #[test]
    fn separatrix_follows_parabola() {
        let field = |_t: f64, u: &[f64], du: &mut [f64]| layer_field(u, du);
        for end in [2.0, -2.0] {
            let tr = integrate(&field, &[0.5, 0.0], (0.0, end), &tight()).unwrap();
            for k in 0..=40 {
                let t = end * k as f64 / 40.0;
                let u = tr.eval(t);
                assert!((u[0] - (0.5 - 0.25 * t * t)).abs() <= 1e-8);
                assert!((u[1] - 0.5 * t).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn nonpositive_amplitude_rejected() {
        assert!(periodic_orbit(-1.0, &tight()).is_err());
        assert!(periodic_orbit(0.0, &tight()).is_err());
    }
}
