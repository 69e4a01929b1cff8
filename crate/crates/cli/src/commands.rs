//! The subcommands. Each returns a JSON summary that goes into the manifest.

use canard_core::connection::{sweep_amplitudes, BranchPoint, CycleFamily, CycleOrbit, ConnectionProblem};
use canard_core::layer::periodic_orbit;
use canard_core::melnikov::{hopf_mu, hopf_mu_eigen, solve_small_branch, SmallBranchPoint};
use canard_core::shilnikov::{shilnikov_shooting, shilnikov_solve, NormalForm, ShilnikovBc};
use canard_core::slow_manifold::{
    eval_manifold, invariance_residual, solve_invariant_series, solve_invariant_series_from, VectorPowerSeries,
};
use clap::Args;
use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::output::{OutputDir, PlotSeries};
use crate::CliError;

pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub out: &'a mut OutputDir,
    pub pool: &'a ThreadPool,
    pub plot_data: bool,
}

fn require(cond: bool, msg: impl Into<String>) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(msg.into()))
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LayerArgs {
    /// Amplitude: the orbit passes through (x2, z2) = (-h, 0).
    #[arg(long, default_value_t = 0.5)]
    pub h: f64,
    /// Rows of the orbit table, equally spaced in time.
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
}

pub fn layer(a: &LayerArgs, ctx: &mut Context) -> Result<Value, CliError> {
    require(a.h > 0.0 && a.h.is_finite(), format!("--h must be positive, got {}", a.h))?;
    require(a.samples >= 2, "--samples must be at least 2")?;
    let orbit = periodic_orbit(a.h, &ctx.cfg.tolerances)?;
    let table = orbit.table(a.samples);
    let h0 = canard_core::layer::first_integral(-a.h, 0.0);
    ctx.out.csv("layer.csv", &["t", "x2", "z2", "H"], table.iter().map(|r| r.to_vec()))?;
    ctx.out.csv(
        "layer_summary.csv",
        &["h", "period", "H", "max_drift"],
        [vec![a.h, orbit.period, h0, orbit.max_drift]],
    )?;
    if ctx.plot_data {
        let rows = table.iter().map(|r| r.to_vec()).collect();
        ctx.out.plot_data(
            "layer_plot.csv",
            &[PlotSeries { name: "layer_orbit".into(), param: a.h, variables: vec!["t", "x2", "z2", "H"], rows }],
        )?;
    }
    info!("layer orbit h = {}: period {}, drift {:e}", a.h, orbit.period, orbit.max_drift);
    Ok(json!({ "h": a.h, "period": orbit.period, "first_integral": h0, "max_drift": orbit.max_drift }))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SlowManifoldArgs {
    #[arg(long, default_value_t = 0.05)]
    pub r2: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mu2: f64,
    /// Radius of the weighted norm (overrides the config).
    #[arg(long)]
    pub nu: Option<f64>,
    /// Truncation degree (overrides the config).
    #[arg(long)]
    pub n: Option<usize>,
    /// Points of the graph table.
    #[arg(long, default_value_t = 41)]
    pub grid: usize,
}

pub fn slow_manifold(a: &SlowManifoldArgs, ctx: &mut Context) -> Result<Value, CliError> {
    let mut mcfg = ctx.cfg.manifold;
    if let Some(nu) = a.nu {
        mcfg.nu = nu;
    }
    if let Some(n) = a.n {
        mcfg.n = n;
    }
    mcfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    require(a.r2 >= 0.0 && a.r2 <= mcfg.r2_max, format!("--r2 must lie in [0, {}]", mcfg.r2_max))?;
    require(a.mu2.abs() <= mcfg.mu2_max, format!("|--mu2| must not exceed {}", mcfg.mu2_max))?;
    require(a.grid >= 2, "--grid must be at least 2")?;

    let sys = &ctx.cfg.system;
    let res = solve_invariant_series(sys, a.r2, a.mu2, &mcfg)?;
    let vs = linspace(-mcfg.nu, mcfg.nu, a.grid);
    let residual = invariance_residual(&res, &vs)?;
    let mut rows = Vec::with_capacity(vs.len());
    for &v in &vs {
        let y2 = v - res.shift;
        let (x2, z2) = eval_manifold(&res, y2)?;
        rows.push(vec![y2, x2, z2]);
    }

    // same fixed point from a seeded random start
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let init = VectorPowerSeries {
        coeffs: (0..=mcfg.n).map(|_| [rng.gen_range(-1e-2..1e-2), rng.gen_range(-1e-2..1e-2)]).collect(),
        nu: mcfg.nu,
    };
    let other = solve_invariant_series_from(sys, a.r2, a.mu2, &mcfg, Some(&init))?;
    let uniqueness = res.series.distance(&other.series);

    ctx.out.json("slow_manifold.json", &res.export())?;
    ctx.out.csv("slow_manifold.csv", &["y2", "x2", "z2"], rows.clone())?;
    if ctx.plot_data {
        ctx.out.plot_data(
            "slow_manifold_plot.csv",
            &[PlotSeries { name: "slow_manifold".into(), param: a.r2, variables: vec!["y2", "x2", "z2"], rows }],
        )?;
    }
    Ok(json!({
        "r2": a.r2,
        "mu2": a.mu2,
        "residual": residual,
        "iterations": res.iterations,
        "contraction_ratio": res.contraction_ratio(),
        "tail": res.tail,
        "uniqueness_distance": uniqueness,
    }))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HopfArgs {
    /// Comma-separated r2 values.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.02,0.05,0.1")]
    pub r2: Vec<f64>,
}

pub fn hopf(a: &HopfArgs, ctx: &mut Context) -> Result<Value, CliError> {
    let r2_max = ctx.cfg.melnikov.manifold.r2_max;
    require(!a.r2.is_empty(), "--r2 needs at least one value")?;
    for &r in &a.r2 {
        require(r > 0.0 && r <= r2_max, format!("r2 must lie in (0, {r2_max}], got {r}"))?;
    }
    let (sys, mcfg) = (&ctx.cfg.system, &ctx.cfg.melnikov);
    let rows: Vec<Vec<f64>> = ctx.pool.install(|| {
        a.r2.par_iter()
            .map(|&r| {
                let m = hopf_mu(sys, r, mcfg)?;
                let e = hopf_mu_eigen(sys, r, &mcfg.tol)?;
                Ok(vec![r, m, e, m - e])
            })
            .collect::<Result<_, CliError>>()
    })?;
    let max_diff = rows.iter().map(|r| r[3].abs()).fold(0.0, f64::max);
    ctx.out.csv("hopf.csv", &["r2", "mu_h", "mu_h_eigen", "difference"], rows)?;
    Ok(json!({ "points": a.r2.len(), "max_difference": max_diff }))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SmallBranchArgs {
    #[arg(long, default_value_t = 0.05)]
    pub r2: f64,
    #[arg(long, default_value_t = 0.1)]
    pub h_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub h_max: f64,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
}

pub fn small_branch(a: &SmallBranchArgs, ctx: &mut Context) -> Result<Value, CliError> {
    let mcfg = &ctx.cfg.melnikov;
    require(
        a.r2 > 0.0 && a.r2 <= mcfg.manifold.r2_max,
        format!("--r2 must lie in (0, {}]", mcfg.manifold.r2_max),
    )?;
    require(
        a.h_min >= 0.0 && a.h_min <= a.h_max && a.h_max <= mcfg.h_max,
        format!("need 0 <= h-min <= h-max <= {}", mcfg.h_max),
    )?;
    require(a.n >= 1 && (a.n > 1 || a.h_min == a.h_max), "--n must be at least 2 for a range")?;
    let sys = &ctx.cfg.system;
    let hs = linspace(a.h_min, a.h_max, a.n);
    let points: Vec<SmallBranchPoint> = ctx.pool.install(|| {
        hs.par_iter()
            .map(|&h| solve_small_branch(sys, h, a.r2, mcfg).map_err(CliError::from))
            .collect::<Result<_, _>>()
    })?;
    let max_res = points.iter().map(|p| p.residual).fold(0.0, f64::max);
    ctx.out.csv(
        "small_branch.csv",
        &["h", "r2", "y2_bar", "mu2_bar", "mu", "residual"],
        points.iter().map(|p| vec![p.h, p.r2, p.y2_bar, p.mu2_bar, p.mu(), p.residual]),
    )?;
    Ok(json!({ "points": points.len(), "max_residual": max_res }))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ShilnikovArgs {
    /// Passage time.
    #[arg(long, default_value_t = 10.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.05)]
    pub r10: f64,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub y11: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mu: f64,
}

pub fn shilnikov(a: &ShilnikovArgs, ctx: &mut Context) -> Result<Value, CliError> {
    let scfg = &ctx.cfg.shilnikov;
    require(a.tau > scfg.tau0 && a.tau.is_finite(), format!("--tau must exceed {}", scfg.tau0))?;
    require(a.r10 >= 0.0 && a.r10 <= scfg.r10_max, format!("--r10 must lie in [0, {}]", scfg.r10_max))?;
    require(a.y11.abs() <= scfg.chi && a.mu.abs() <= scfg.chi, format!("|y11| and |mu| must not exceed {}", scfg.chi))?;
    let nf = NormalForm::benchmark();
    let bc = ShilnikovBc { tau: a.tau, eps11: scfg.eps11, r10: a.r10, y11: a.y11, mu: a.mu };
    let sol = shilnikov_solve(&nf, &bc, scfg)?;
    let shoot = shilnikov_shooting(&nf, &bc, &ctx.cfg.tolerances)?;
    let shooting_diff = sol.nodes().iter().map(|&t| (sol.y_at(t) - shoot.eval(t)[0]).abs()).fold(0.0, f64::max);

    let mut idx: Vec<usize> = (0..sol.nodes().len()).collect();
    idx.sort_by(|&i, &j| sol.nodes()[i].total_cmp(&sol.nodes()[j]));
    let rows: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| {
            let t = sol.nodes()[i];
            vec![t, sol.y[i], sol.u[i], sol.phi[i], sol.eps1_at(t), sol.r1_at(t)]
        })
        .collect();
    ctx.out.csv("shilnikov.csv", &["t", "y", "u", "phi", "eps1", "r1"], rows.clone())?;
    let report = json!({
        "boundary_data": bc,
        "lambda": sol.lambda,
        "iterations": sol.iterations,
        "contraction_ratio": sol.contraction_ratio(),
        "distances": sol.distances,
        "shooting_max_difference": shooting_diff,
    });
    ctx.out.json("shilnikov.json", &report)?;
    if ctx.plot_data {
        ctx.out.plot_data(
            "shilnikov_plot.csv",
            &[PlotSeries { name: "shilnikov".into(), param: a.r10, variables: vec!["t", "y", "u", "phi", "eps1", "r1"], rows }],
        )?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BranchArgs {
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.05)]
    pub h_min: f64,
    #[arg(long, default_value_t = 0.4)]
    pub h_max: f64,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Skip the comparison with the small-cycle branch.
    #[arg(long)]
    pub no_seam: bool,
}

fn orbit_rows(o: &CycleOrbit) -> Vec<Vec<f64>> {
    o.samples.iter().map(|p| p.to_vec()).collect()
}

pub fn branch(a: &BranchArgs, ctx: &mut Context) -> Result<Value, CliError> {
    let ccfg = ctx.cfg.connection;
    let hs = sweep_amplitudes(a.eps, (a.h_min, a.h_max), a.n, &ccfg).map_err(|e| CliError::Config(e.to_string()))?;
    let prob = ConnectionProblem::new(&ctx.cfg.system, ccfg)?;
    let records: Vec<(BranchPoint, CycleOrbit, f64)> = ctx.pool.install(|| {
        hs.par_iter()
            .map(|&h| {
                let bp = prob.solve_at(a.eps, h)?;
                let orbit = prob.reconstruct_cycle(&bp)?;
                let d = prob.hausdorff_to_singular(&orbit, bp.mu0)?;
                info!("branch point h = {h}: mu = {:e}, residual {:e}", bp.mu_star, bp.residual);
                Ok((bp, orbit, d))
            })
            .collect::<Result<_, CliError>>()
    })?;
    ctx.out.csv(
        "branch.csv",
        &["h", "eps", "mu_bar", "y1_star", "residual", "hausdorff"],
        records.iter().map(|(bp, _, d)| vec![bp.h, bp.eps, bp.mu_star, bp.y1_star, bp.residual, *d]),
    )?;
    if ctx.plot_data {
        let series: Vec<PlotSeries> = records
            .iter()
            .map(|(bp, o, _)| PlotSeries { name: "orbit".into(), param: bp.h, variables: vec!["x", "y", "z"], rows: orbit_rows(o) })
            .collect();
        ctx.out.plot_data("branch_plot.csv", &series)?;
    }

    let seam = if a.no_seam {
        None
    } else {
        let s = prob.seam_check(a.eps, &ctx.cfg.melnikov)?;
        ctx.out.json("branch_seam.json", &s)?;
        if s.mismatch > ccfg.seam_tol {
            return Err(canard_core::CanardError::SeamMismatch { mismatch: s.mismatch, limit: ccfg.seam_tol }.into());
        }
        Some(s)
    };
    let mu_hopf = hopf_mu_eigen(&ctx.cfg.system, a.eps.sqrt(), &ctx.cfg.melnikov.tol).ok();
    let family = CycleFamily::assemble(a.eps, records.into_iter().map(|(bp, o, _)| (bp, o)).collect(), seam);
    Ok(json!({
        "points": family.points.len(),
        "max_residual": canard_core::connection::max_residual(&family.points),
        "max_slope": family.max_slope(),
        "max_mu_gap": family.max_gap(),
        "seam": family.seam,
        "mu_hopf_sqrt_eps": mu_hopf,
    }))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OrbitArgs {
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.3)]
    pub h: f64,
}

pub fn orbit(a: &OrbitArgs, ctx: &mut Context) -> Result<Value, CliError> {
    let ccfg = ctx.cfg.connection;
    require(a.eps > 0.0 && a.h > 0.0 && a.h <= ccfg.r10, format!("need eps > 0 and 0 < h <= {}", ccfg.r10))?;
    require(
        a.eps / (a.h * a.h) <= ccfg.eps11,
        format!("eps / h^2 = {} exceeds {}; use small-branch for this amplitude", a.eps / (a.h * a.h), ccfg.eps11),
    )?;
    let prob = ConnectionProblem::new(&ctx.cfg.system, ccfg)?;
    let bp = prob.solve_at(a.eps, a.h)?;
    let orbit = prob.reconstruct_cycle(&bp)?;
    let hausdorff = prob.hausdorff_to_singular(&orbit, bp.mu0)?;
    let reclosure = prob.ambient_reclosure(&bp)?;
    ctx.out.csv("orbit.csv", &["x", "y", "z"], orbit_rows(&orbit))?;
    let report = json!({
        "branch_point": bp,
        "closure_gap": orbit.gap,
        "eps_drift": orbit.eps_drift,
        "hausdorff": hausdorff,
        "ambient_reclosure": reclosure,
    });
    ctx.out.json("orbit.json", &report)?;
    if ctx.plot_data {
        let singular = prob.singular_canard(bp.mu0, a.h)?.cycle();
        ctx.out.plot_data(
            "orbit_plot.csv",
            &[
                PlotSeries { name: "orbit".into(), param: a.h, variables: vec!["x", "y", "z"], rows: orbit_rows(&orbit) },
                PlotSeries {
                    name: "singular_cycle".into(),
                    param: a.h,
                    variables: vec!["x", "y", "z"],
                    rows: singular.iter().map(|p| p.to_vec()).collect(),
                },
            ],
        )?;
    }
    Ok(report)
}
