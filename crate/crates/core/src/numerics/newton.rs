use nalgebra::{DMatrix, DVector};

use super::Tolerances;
use crate::error::{CanardError, Result};

/// Condition numbers above this are reported as a singular Jacobian.
pub const MAX_CONDITION: f64 = 1e13;

/// Outcome of a converged Newton solve.
#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// Jacobian at the last iterate.
    pub jacobian: DMatrix<f64>,
    pub condition: f64,
}

pub fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Forward-difference Jacobian with step sqrt(eps) * max(1, |x_j|).
pub fn fd_jacobian<F>(f: &F, x: &[f64], fx: &[f64]) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + ?Sized,
{
    let n = x.len();
    let m = fx.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = f64::EPSILON.sqrt() * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let h = xp[j] - x[j];
        let fp = f(&xp)?;
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fx[i]) / h;
        }
        xp[j] = x[j];
    }
    Ok(jac)
}

/// Central-difference Jacobian with a fixed step.
pub fn central_jacobian<F>(f: &F, x: &[f64], step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + ?Sized,
{
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    let mut xp = x.to_vec();
    for j in 0..n {
        xp[j] = x[j] + step;
        let fp = f(&xp)?;
        xp[j] = x[j] - step;
        let fm = f(&xp)?;
        xp[j] = x[j];
        cols.push(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * step)).collect::<Vec<_>>());
    }
    let m = cols.first().map_or(0, |c| c.len());
    Ok(DMatrix::from_fn(m, n, |i, j| cols[j][i]))
}

pub fn condition_number(j: &DMatrix<f64>) -> f64 {
    let sv = j.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0f64, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin == 0.0 || !smin.is_finite() {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Damped Newton iteration for `f(x) = 0` with max-norm stopping criterion
/// `|f(x)|_inf <= tol.newton_tol`.
pub fn newton_solve<F>(
    f: &F,
    x0: &[f64],
    tol: &Tolerances,
    jacobian: Option<&dyn Fn(&[f64]) -> Result<DMatrix<f64>>>,
) -> Result<NewtonReport>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + ?Sized,
{
    let mut x = x0.to_vec();
    let mut fx = f(&x)?;
    if fx.len() != x.len() {
        return Err(CanardError::InvalidInput(format!(
            "newton_solve needs a square system, got {} equations in {} unknowns",
            fx.len(),
            x.len()
        )));
    }
    let mut res = max_norm(&fx);
    for it in 0..=tol.newton_max_iter {
        let jac = match jacobian {
            Some(j) => j(&x)?,
            None => fd_jacobian(f, &x, &fx)?,
        };
        let cond = condition_number(&jac);
        if res <= tol.newton_tol {
            return Ok(NewtonReport { x, residual: res, iterations: it, jacobian: jac, condition: cond });
        }
        if it == tol.newton_max_iter {
            break;
        }
        if cond > MAX_CONDITION {
            return Err(CanardError::SingularJacobian { condition: cond });
        }
        let rhs = DVector::from_iterator(fx.len(), fx.iter().map(|v| -v));
        let dx = jac.lu().solve(&rhs).ok_or(CanardError::SingularJacobian { condition: cond })?;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let xt: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + lambda * d).collect();
            if let Ok(ft) = f(&xt) {
                let rt = max_norm(&ft);
                if rt.is_finite() && (rt < res || lambda < 1e-3) {
                    accepted = Some((xt, ft, rt));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((xt, ft, rt)) => {
                x = xt;
                fx = ft;
                res = rt;
            }
            None => {
                // no decrease along the Newton direction; take the full step
                let xt: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + d).collect();
                fx = f(&xt)?;
                x = xt;
                res = max_norm(&fx);
            }
        }
        log::trace!("newton iteration {} residual {:e}", it + 1, res);
    }
    Err(CanardError::NewtonMaxIter { iterations: tol.newton_max_iter, residual: res })
}

/// Root of a scalar function on a sign-changing bracket by the Illinois
/// variant of false position; returns the abscissa.
pub fn bracketed_root<F>(f: F, mut a: f64, mut b: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if (fa > 0.0) == (fb > 0.0) {
        return Err(CanardError::InvalidInput(format!("no sign change on [{a}, {b}]: {fa:e}, {fb:e}")));
    }
    let mut side = 0;
    for _ in 0..max_iter {
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !c.is_finite() || (c - a) * (c - b) > 0.0 {
            c = 0.5 * (a + b);
        }
        let fc = f(c)?;
        if fc == 0.0 || (b - a).abs() <= xtol {
            return Ok(c);
        }
        if (fc > 0.0) == (fb > 0.0) {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() <= xtol {
            return Ok(if fa.abs() < fb.abs() { a } else { b });
        }
    }
    Err(CanardError::NewtonMaxIter { iterations: max_iter, residual: fa.abs().min(fb.abs()) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances { newton_tol: 1e-12, ..Tolerances::default() }
    }

    #[test]
    fn square_root_of_four() {
        let r = newton_solve(&|x: &[f64]| Ok(vec![x[0] * x[0] - 4.0]), &[3.0], &tol(), None).unwrap();
        assert!((r.x[0] - 2.0).abs() < 1e-12);
        assert!(r.residual <= 1e-12);
    }

    #[test]
    fn linear_system() {
        let r = newton_solve(&|x: &[f64]| Ok(vec![x[0] + x[1] - 1.0, x[0] - x[1]]), &[0.0, 0.0], &tol(), None)
            .unwrap();
        assert!((r.x[0] - 0.5).abs() < 1e-12 && (r.x[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dottie_number_against_fixed_point_iteration() {
        let r = newton_solve(&|x: &[f64]| Ok(vec![x[0] - x[0].cos()]), &[1.0], &tol(), None).unwrap();
        let mut y = 1.0f64;
        for _ in 0..200 {
            y = y.cos();
        }
        assert!((r.x[0] - y).abs() < 1e-10);
        assert!((r.x[0] - 0.7390851332).abs() < 1e-10);
    }

    #[test]
    fn analytic_jacobian_is_used() {
        let jac = |x: &[f64]| Ok(DMatrix::from_element(1, 1, 2.0 * x[0]));
        let r = newton_solve(&|x: &[f64]| Ok(vec![x[0] * x[0] - 4.0]), &[3.0], &tol(), Some(&jac)).unwrap();
        assert!((r.x[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_jacobian_detected() {
        let r = newton_solve(&|x: &[f64]| Ok(vec![x[0] + x[1] - 1.0, 2.0 * x[0] + 2.0 * x[1]]), &[0.0, 0.0], &tol(), None);
        assert!(matches!(r, Err(CanardError::SingularJacobian { .. })));
    }

    #[test]
    fn iteration_limit() {
        let t = Tolerances { newton_max_iter: 2, newton_tol: 1e-14, ..Tolerances::default() };
        let r = newton_solve(&|x: &[f64]| Ok(vec![x[0].atan()]), &[10.0], &t, None);
        assert!(matches!(r, Err(CanardError::NewtonMaxIter { .. })));
    }

    #[test]
    fn illinois_root() {
        let r = bracketed_root(|x| Ok(x * x * x - 2.0), 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-12);
    }
}
