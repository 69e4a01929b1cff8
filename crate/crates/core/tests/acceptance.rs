//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use canard_core::connection::{branch_sweep, max_residual, ConnectionConfig, ConnectionProblem};
use canard_core::layer::{first_integral_symbolic_defect, layer_eigenvalues, layer_field, periodic_orbit};
use canard_core::melnikov::{hopf_mu, hopf_mu_eigen, layer_period, melnikov_jacobian, solve_small_branch, MelnikovConfig};
use canard_core::numerics::{integrate, Tolerances};
use canard_core::shilnikov::{
    lambda_mu, phi_decay_rate, shilnikov_shooting, shilnikov_solve, transition_exponent, transition_map_check,
    NormalForm, ShilnikovBc, ShilnikovConfig, Side,
};
use canard_core::slow_manifold::{eval_manifold, invariance_residual, solve_invariant_series, ManifoldConfig};
use canard_core::{Result, SlowFastSystem};

const EIGEN_TOL: f64 = 1e-12;
const SEPARATRIX_TOL: f64 = 1e-8;
const DRIFT_TOL: f64 = 1e-9;
const PERIOD_TOL: f64 = 1e-2;
const MANIFOLD_R2_ZERO_TOL: f64 = 1e-12;
const MANIFOLD_RESIDUAL_TOL: f64 = 1e-8;
const PICARD_RATIO_MAX: f64 = 0.5;
const MELNIKOV_REL_TOL: f64 = 1e-4;
const MELNIKOV_MU_LIMIT_TOL: f64 = 1e-4;
const MELNIKOV_Y_LIMIT_TOL: f64 = 1e-3;
const HOPF_TOL: f64 = 1e-6;
const SHILNIKOV_EXACT_TOL: f64 = 1e-12;
const SHOOTING_TOL: f64 = 1e-8;
const PHI_RATE_MIN: f64 = 0.25;
const SLOPE_TOL: f64 = 1e-6;
const Z_FIT_REL_TOL: f64 = 0.01;
const BRANCH_RESIDUAL_TOL: f64 = 1e-8;
const RECLOSURE_TOL: f64 = 1e-5;
const SEAM_TOL: f64 = 1e-4;
const HOPF_LIMIT_TOL: f64 = 1e-4;
const SLOPE_BOUND: f64 = 100.0;

const BRANCH_EPS: f64 = 1e-4;
const BRANCH_H: (f64, f64) = (0.05, 0.4);
const BRANCH_N: usize = 20;

fn canonical() -> SlowFastSystem {
    SlowFastSystem::canonical(0.0, 1.0)
}

fn tight() -> Tolerances {
    Tolerances { abs_tol: 1e-14, rel_tol: 1e-13, event_tol: 1e-13, ..Tolerances::default() }
}

type Outcome = Result<(bool, String)>;

fn layer_eigenvalues_are_plus_minus_i() -> Outcome {
    let ev = layer_eigenvalues(0.0);
    let err = (ev[0].re.abs() + (ev[0].im - 1.0).abs()).max(ev[1].re.abs() + (ev[1].im + 1.0).abs());
    Ok((err <= EIGEN_TOL, format!("max deviation from ±i = {err:.3e} (tol {EIGEN_TOL:e})")))
}

fn separatrix_closed_form() -> Outcome {
    let field = |_t: f64, u: &[f64], du: &mut [f64]| layer_field(u, du);
    let mut err: f64 = 0.0;
    for end in [2.0, -2.0] {
        let tr = integrate(&field, &[0.5, 0.0], (0.0, end), &tight())?;
        for k in 0..=400 {
            let t = end * k as f64 / 400.0;
            let u = tr.eval(t);
            err = err.max((u[0] - (0.5 - 0.25 * t * t)).abs()).max((u[1] - 0.5 * t).abs());
        }
    }
    Ok((err <= SEPARATRIX_TOL, format!("max deviation on [-2, 2] = {err:.3e} (tol {SEPARATRIX_TOL:e})")))
}

fn first_integral_conserved() -> Outcome {
    let symbolic = first_integral_symbolic_defect();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for h in [0.1, 0.5, 1.0, 2.0] {
        let o = periodic_orbit(h, &tight())?;
        worst = worst.max(o.max_drift);
        parts.push(format!("h={h}: {:.2e}", o.max_drift));
    }
    Ok((
        worst <= DRIFT_TOL && symbolic == 0.0,
        format!("relative drift [{}] (tol {DRIFT_TOL:e}); symbolic dH/dt coefficient max = {symbolic}", parts.join(", ")),
    ))
}

fn period_tends_to_two_pi() -> Outcome {
    let tol = tight();
    let t_small = periodic_orbit(1e-3, &tol)?.period;
    let gaps: Vec<f64> = (1..=8)
        .map(|k| layer_period(0.5f64.powi(k), &tol).map(|t| t - 2.0 * PI))
        .collect::<Result<_>>()?;
    let monotone = gaps.windows(2).all(|w| w[1].abs() < w[0].abs() && w[1] * w[0] > 0.0);
    let err = (t_small - 2.0 * PI).abs();
    Ok((
        err <= PERIOD_TOL && monotone,
        format!("|T0(1e-3) - 2π| = {err:.3e} (tol {PERIOD_TOL:e}); T0(2^-k) - 2π monotone for k=1..8: {monotone} (last {:.3e})", gaps[7]),
    ))
}

fn slow_manifold_checks() -> Outcome {
    let sys = canonical();
    let cfg = ManifoldConfig { nu: 0.2, n: 30, ..ManifoldConfig::default() };
    let mut zero_err: f64 = 0.0;
    for mu2 in [-0.05, 0.0, 0.05] {
        let res = solve_invariant_series(&sys, 0.0, mu2, &cfg)?;
        for k in -10..=10 {
            let y2 = 0.015 * k as f64;
            let (x2, z2) = eval_manifold(&res, y2)?;
            zero_err = zero_err.max((x2 + y2 * y2).abs()).max((z2 - y2).abs());
        }
    }
    let res = solve_invariant_series(&sys, 0.05, 0.0, &cfg)?;
    let grid: Vec<f64> = (-20..=20).map(|k| 0.01 * k as f64).collect();
    let residual = invariance_residual(&res, &grid)?;
    let ratio = res.contraction_ratio();
    Ok((
        zero_err <= MANIFOLD_R2_ZERO_TOL && residual <= MANIFOLD_RESIDUAL_TOL && ratio <= PICARD_RATIO_MAX,
        format!(
            "m(y2,0,mu2) deviation {zero_err:.3e} (tol {MANIFOLD_R2_ZERO_TOL:e}); residual {residual:.3e} (tol {MANIFOLD_RESIDUAL_TOL:e}); Picard ratio {ratio:.3} (max {PICARD_RATIO_MAX})"
        ),
    ))
}

fn melnikov_derivatives() -> Outcome {
    let sys = canonical();
    let cfg = MelnikovConfig::default();
    let mut worst: f64 = 0.0;
    for h in [0.25, 0.5, 1.0] {
        let j = melnikov_jacobian(&sys, h, 0.0, 0.0, 0.0, &cfg)?;
        let want = 0.5 * layer_period(h, &cfg.tol)?;
        worst = worst.max(((j[1][1] - want) / want).abs());
    }
    let j0 = melnikov_jacobian(&sys, 0.0, 0.0, 0.0, 0.0, &cfg)?;
    let mu_lim = (j0[1][1] - PI).abs();
    let y_lim = (j0[0][0] + 2.0 * PI).abs();
    Ok((
        worst <= MELNIKOV_REL_TOL && mu_lim <= MELNIKOV_MU_LIMIT_TOL && y_lim <= MELNIKOV_Y_LIMIT_TOL,
        format!(
            "dD2/dmu2 vs T0/2 rel err {worst:.3e} (tol {MELNIKOV_REL_TOL:e}); h=0: |dD2/dmu2 - π| = {mu_lim:.3e} (tol {MELNIKOV_MU_LIMIT_TOL:e}), |dD1/dy2 + 2π| = {y_lim:.3e} (tol {MELNIKOV_Y_LIMIT_TOL:e})"
        ),
    ))
}

fn hopf_consistency() -> Outcome {
    let sys = canonical();
    let cfg = MelnikovConfig::default();
    let mut worst: f64 = 0.0;
    for r2 in [0.05, 0.1] {
        worst = worst.max((hopf_mu(&sys, r2, &cfg)? - hopf_mu_eigen(&sys, r2, &cfg.tol)?).abs());
    }
    let limits: Vec<f64> = [0.04, 0.02, 0.01, 0.005]
        .iter()
        .map(|&r2| hopf_mu(&sys, r2, &cfg).map(f64::abs))
        .collect::<Result<_>>()?;
    let to_zero = limits.windows(2).all(|w| w[1] < 0.5 * w[0]);
    Ok((
        worst <= HOPF_TOL && to_zero,
        format!(
            "Melnikov vs eigenvalue crossing max diff {worst:.3e} (tol {HOPF_TOL:e}); |mu_H| at r2=0.04..0.005: {}",
            limits.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", ")
        ),
    ))
}

fn shilnikov_solver() -> Outcome {
    let nf = NormalForm::benchmark();
    let cfg = ShilnikovConfig::default();
    let bc = |r10: f64| ShilnikovBc { tau: 10.0, eps11: 0.25, r10, y11: 0.1, mu: 0.0 };
    let lambda = lambda_mu(0.0);
    let zero = shilnikov_solve(&nf, &bc(0.0), &cfg)?;
    let exact_err = zero
        .nodes()
        .iter()
        .zip(&zero.y)
        .map(|(&t, &y)| (y - 0.1 * (lambda * (t - 10.0)).exp()).abs())
        .fold(0.0, f64::max);
    let b = bc(0.05);
    let sol = shilnikov_solve(&nf, &b, &cfg)?;
    let tr = shilnikov_shooting(&nf, &b, &Tolerances::tight())?;
    let shoot_err = sol.nodes().iter().map(|&t| (sol.y_at(t) - tr.eval(t)[0]).abs()).fold(0.0, f64::max);
    let rate = phi_decay_rate(&nf, &b, &[8.0, 12.0, 16.0], &[1.0, 2.0, 4.0], &cfg)?;
    Ok((
        exact_err <= SHILNIKOV_EXACT_TOL && shoot_err <= SHOOTING_TOL && rate >= PHI_RATE_MIN,
        format!(
            "r10=0 error {exact_err:.3e} (tol {SHILNIKOV_EXACT_TOL:e}); shooting diff at r10=0.05 {shoot_err:.3e} (tol {SHOOTING_TOL:e}); phi decay rate {rate:.3} (min {PHI_RATE_MIN})"
        ),
    ))
}

fn transition_structure() -> Outcome {
    let (sys, nf, cfg, tol) = (canonical(), NormalForm::benchmark(), ShilnikovConfig::default(), Tolerances::tight());
    let mu = 0.1;
    let slope = transition_exponent(&sys, &nf, Side::Attracting, &[0.05, 0.02, 0.01, 0.005], 0.0, 0.01, mu, &cfg, &tol)?;
    let slope_err = (slope - lambda_mu(mu)).abs();
    let c = transition_map_check(&sys, &nf, Side::Attracting, 0.01, 0.04, 0.001, 0.0, &cfg, &tol)?;
    let r1_err = (c.arrival_r1 - c.arrival_r1_conserved).abs().max((c.arrival_r1_conserved - 0.008).abs());
    let lz: Vec<(f64, f64)> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&e| transition_map_check(&sys, &nf, Side::Attracting, e, 0.02, 0.001, 0.0, &cfg, &tol).map(|c| (1.0 / e, c.arrival_log_z)))
        .collect::<Result<_>>()?;
    let rate = -(lz[1].1 - lz[0].1) / (lz[1].0 - lz[0].0);
    let predicted = lz[1].1 - rate * (lz[2].0 - lz[1].0);
    let z_err = (predicted - lz[2].1).abs() / lz[2].1.abs();
    Ok((
        slope_err <= SLOPE_TOL && r1_err <= 1e-12 && rate > 0.0 && z_err <= Z_FIT_REL_TOL,
        format!(
            "slope {slope:.9} vs lambda {} (err {slope_err:.2e}, tol {SLOPE_TOL:e}); arrival r1 error {r1_err:.1e}; ln|z| fit c = {rate:.3}, prediction at eps1=0.01 off by {z_err:.2e} rel (tol {Z_FIT_REL_TOL})",
            lambda_mu(mu)
        ),
    ))
}

fn connection_branch() -> Outcome {
    let sys = canonical();
    let cfg = ConnectionConfig::default();
    let mcfg = MelnikovConfig::default();
    let fam = branch_sweep(&sys, BRANCH_EPS, BRANCH_H, BRANCH_N, &cfg, Some(&mcfg))?;
    let prob = ConnectionProblem::new(&sys, cfg)?;
    let residual = max_residual(&fam.points);
    let mut reclosure: f64 = 0.0;
    for bp in &fam.points {
        reclosure = reclosure.max(prob.ambient_reclosure(bp)?);
    }
    let seam = fam.seam.as_ref().map(|s| s.mismatch).unwrap_or(f64::INFINITY);

    // below the seam the family continues as the small cycles of the scaling chart,
    // whose ambient amplitude is sqrt(eps * h2)
    let r2 = BRANCH_EPS.sqrt();
    let mu_h = hopf_mu_eigen(&sys, r2, &mcfg.tol)?;
    let mut limit: Vec<(f64, f64)> = Vec::new();
    for h2 in [1.0, 0.1, 0.01] {
        limit.push(((BRANCH_EPS * h2).sqrt(), solve_small_branch(&sys, h2, r2, &mcfg)?.mu()));
    }
    let limit_err = (limit.last().unwrap().1 - mu_h).abs();
    let approaching = limit.windows(2).all(|w| (w[1].1 - mu_h).abs() < (w[0].1 - mu_h).abs());

    // the connection branch alone, extrapolated quadratically in h^2 from its lowest amplitudes
    let low: Vec<(f64, f64)> = [0.02, 0.025, 0.03]
        .iter()
        .map(|&h| prob.solve_at(BRANCH_EPS, h).map(|bp| (h * h, bp.mu_star)))
        .collect::<Result<_>>()?;
    let extrapolated = lagrange_at_zero(&low);

    let pass = fam.points.len() >= BRANCH_N
        && residual <= BRANCH_RESIDUAL_TOL
        && reclosure <= RECLOSURE_TOL
        && seam <= SEAM_TOL
        && limit_err <= HOPF_LIMIT_TOL
        && approaching;
    Ok((
        pass,
        format!(
            "{} points; max residual {residual:.2e} (tol {BRANCH_RESIDUAL_TOL:e}); max re-closure {reclosure:.2e} (tol {RECLOSURE_TOL:e}); seam {seam:.2e} (tol {SEAM_TOL:e}); mu_bar(h={:.1e}) - mu_H(sqrt eps) = {limit_err:.2e} (tol {HOPF_LIMIT_TOL:e}); connection-only extrapolation off by {:.2e}",
            fam.points.len(),
            limit.last().unwrap().0,
            (extrapolated - mu_h).abs()
        ),
    ))
}

fn lagrange_at_zero(pts: &[(f64, f64)]) -> f64 {
    let mut s = 0.0;
    for (i, &(xi, yi)) in pts.iter().enumerate() {
        let mut w = 1.0;
        for (j, &(xj, _)) in pts.iter().enumerate() {
            if i != j {
                w *= xj / (xj - xi);
            }
        }
        s += w * yi;
    }
    s
}

fn hausdorff_decreases() -> Outcome {
    let sys = canonical();
    let prob = ConnectionProblem::new(&sys, ConnectionConfig::default())?;
    let mut d = Vec::new();
    for eps in [1e-3, 1e-4] {
        let bp = prob.solve_at(eps, 0.3)?;
        let orbit = prob.reconstruct_cycle(&bp)?;
        d.push(prob.hausdorff_to_singular(&orbit, bp.mu0)?);
    }
    Ok((d[1] < d[0], format!("d_H at h=0.3: eps=1e-3 -> {:.3e}, eps=1e-4 -> {:.3e}", d[0], d[1])))
}

fn no_explosion() -> Outcome {
    let sys = canonical();
    let fam = branch_sweep(&sys, BRANCH_EPS, BRANCH_H, BRANCH_N, &ConnectionConfig::default(), None)?;
    let slope = fam.max_slope();
    Ok((slope <= SLOPE_BOUND, format!("max |dmu_bar/dh| = {slope:.3} (bound {SLOPE_BOUND})")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("layer eigenvalues ±i", layer_eigenvalues_are_plus_minus_i),
        ("separatrix closed form", separatrix_closed_form),
        ("first integral conservation", first_integral_conserved),
        ("period limit 2π", period_tends_to_two_pi),
        ("slow manifold", slow_manifold_checks),
        ("Melnikov derivatives", melnikov_derivatives),
        ("Hopf consistency", hopf_consistency),
        ("Shilnikov solver", shilnikov_solver),
        ("transition map structure", transition_structure),
        ("connection branch", connection_branch),
        ("Hausdorff convergence", hausdorff_decreases),
        ("non-explosiveness", no_explosion),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match run() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {detail} [{:.1}s]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
