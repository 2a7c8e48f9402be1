//! Task runners. Each one turns a validated config into artifacts.

use std::collections::BTreeMap;

use quarterlab::{
    assemble, bound_state_certificate, constant_reference, count_below_perturbed, decay_fit, decay_fit_fn, default_window,
    full_report, ground_energy_sandwich, lowest_eigenpairs, negative_count_bound, richardson, BoundaryPotential,
    DecayFit, Error, Grid, Interval1DSpectrum, OuterBc, PotentialKind, SpectralResult,
};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{ExperimentConfig, SweepPoint};
use crate::error::CliError;
use crate::output::{fmt_f64, fmt_opt_f64, json_bytes, Artifacts, Csv};

/// Eigenvalue runs shared between `solve` and `decay`, keyed by outer
/// condition and grid index (coarsest first).
#[derive(Default)]
pub struct SolveCache {
    runs: BTreeMap<(OuterBc, usize), SpectralResult>,
}

pub fn reference(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let PotentialKind::Constant { sigma } = *cfg.potential.kind() else {
        return Err(CliError::Inapplicable("the reference task needs a constant potential".into()));
    };
    out.add("reference.json", json_bytes(&constant_reference(sigma)?));
    Ok(())
}

pub fn bounds(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    out.add("bounds.json", json_bytes(&full_report(&cfg.potential, cfg.certify.n_max)));
    Ok(())
}

pub fn certify(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let p = &cfg.potential;
    match bound_state_certificate(p, cfg.certify.n_max)? {
        Some(c) => {
            let value = json!({
                "n": c.n,
                "kinetic": c.kinetic,
                "boundary": c.boundary,
                "q_value": c.q_value,
                "integral": p.integral()?,
                "n_max": cfg.certify.n_max,
            });
            out.add("certify.json", json_bytes(&value));
            Ok(())
        }
        None => Err(CliError::Inapplicable(format!("no negative test value for n <= {}", cfg.certify.n_max))),
    }
}

pub fn roots1d(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let p = &cfg.potential;
    let length = p.support_bound();
    if !length.is_finite() {
        return Err(Error::InfiniteSupport.into());
    }
    let spec = Interval1DSpectrum::compute(p.ess_sup(), length, cfg.roots1d.k_max)?;
    let mut csv = Csv::new(&["index", "kind", "k", "eigenvalue", "residual"]);
    csv.row(&[
        "0".to_string(),
        "negative".to_string(),
        fmt_f64(spec.kappa),
        fmt_f64(-spec.kappa * spec.kappa),
        fmt_f64(spec.kappa_residual()),
    ]);
    for (i, &k) in spec.positive_roots.iter().enumerate() {
        csv.row(&[(i + 1).to_string(), "positive".into(), fmt_f64(k), fmt_f64(k * k), fmt_f64(spec.root_residual(k))]);
    }
    out.add("roots1d.csv", csv.into_bytes());
    Ok(())
}

fn solve_one(
    cfg: &ExperimentConfig,
    p: &BoundaryPotential,
    grid: &Grid,
    outer: OuterBc,
    k: usize,
) -> Result<(SpectralResult, usize, usize), CliError> {
    let form = assemble(p, grid, outer);
    let result = lowest_eigenpairs(&form, k, cfg.solver.tol)?;
    if result.converged.iter().any(|c| !c) {
        return Err(CliError::NoConvergence(Error::NoConvergence { restarts: 0, residuals: result.residuals }));
    }
    Ok((result, count_below_perturbed(&form, 0.0)?, form.dim()))
}

pub fn solve(cfg: &ExperimentConfig, cache: &mut SolveCache, out: &mut Artifacts) -> Result<(), CliError> {
    let grids = cfg.grids()?;
    let outers = cfg.outer_bcs();
    let k = cfg.solver.k;
    let mut runs = Vec::new();
    let mut csv = Csv::new(&["outer_bc", "h", "index", "eigenvalue", "residual"]);
    for &outer in &outers {
        for (gi, grid) in grids.iter().enumerate() {
            let (result, count, dim) = solve_one(cfg, &cfg.potential, grid, outer, k)?;
            for (i, (l, r)) in result.eigenvalues.iter().zip(&result.residuals).enumerate() {
                csv.row(&[outer.as_str().to_string(), fmt_f64(grid.spacing()), i.to_string(), fmt_f64(*l), fmt_f64(*r)]);
            }
            runs.push(json!({
                "outer_bc": outer.as_str(),
                "h": grid.spacing(),
                "dim": dim,
                "eigenvalues": result.eigenvalues,
                "residuals": result.residuals,
                "negative_count": result.negative_count,
                "count_below_zero": count,
            }));
            cache.runs.insert((outer, gi), result);
        }
    }

    let mut extrapolation = Vec::new();
    if cfg.richardson() {
        for &outer in &outers {
            for m in 0..k {
                let pts: Vec<(f64, f64)> =
                    grids.iter().enumerate().map(|(gi, g)| (g.spacing(), cache.runs[&(outer, gi)].eigenvalues[m])).collect();
                let entry = match richardson(&pts) {
                    Ok(s) => json!({"outer_bc": outer.as_str(), "index": m, "order": s.order, "extrapolated": s.extrapolated}),
                    Err(e) => json!({"outer_bc": outer.as_str(), "index": m, "error": e.to_string()}),
                };
                extrapolation.push(entry);
            }
        }
    }

    let mut brackets = Vec::new();
    if outers.contains(&OuterBc::Dirichlet) && outers.contains(&OuterBc::Neumann) {
        let (_, ess_bottom) = quarterlab::ess_spectrum_class(&cfg.potential);
        for (gi, grid) in grids.iter().enumerate() {
            let lo = &cache.runs[&(OuterBc::Neumann, gi)].eigenvalues;
            let hi = &cache.runs[&(OuterBc::Dirichlet, gi)].eigenvalues;
            let certified: Vec<bool> = hi.iter().map(|&v| ess_bottom.is_some_and(|b| v < b)).collect();
            brackets.push(json!({"h": grid.spacing(), "lo": lo, "hi": hi, "certified": certified}));
        }
    }

    let report = json!({
        "potential": cfg.potential,
        "R": grids[0].radius(),
        "k": k,
        "tol": cfg.solver.tol,
        "runs": runs,
        "richardson": extrapolation,
        "brackets": brackets,
    });
    out.add("solve.json", json_bytes(&report));
    out.add("eigenvalues.csv", csv.into_bytes());
    Ok(())
}

pub fn decay(cfg: &ExperimentConfig, cache: &mut SolveCache, out: &mut Artifacts) -> Result<(), CliError> {
    let grids = cfg.grids()?;
    let gi = grids.len() - 1;
    let grid = grids[gi];
    let outer = cfg.outer_bcs()[0];
    let d = &cfg.decay;
    let ray = (d.ray[0], d.ray[1]);
    let samples = d.samples;
    let radius = grid.radius();

    let (fit, source, energy, eval): (DecayFit, &str, f64, Box<dyn Fn(f64) -> f64>) =
        if let PotentialKind::Constant { sigma } = *cfg.potential.kind() {
            // no compact support: use the closed-form ground state
            let reference = constant_reference(sigma)?;
            let window = (d.r_min.unwrap_or(2.0), d.r_max.unwrap_or(radius - 3.0));
            let e = reference.ground_energy;
            let f = move |x: f64, y: f64| reference.ground_state(x, y);
            let fit = decay_fit_fn(f, e, ray, window, samples, d.with_prefactor)?;
            let (ux, uy) = fit.ray;
            (fit, "analytic", e, Box::new(move |r| reference.ground_state(r * ux, r * uy)))
        } else {
            if !cache.runs.contains_key(&(outer, gi)) {
                let (result, _, _) = solve_one(cfg, &cfg.potential, &grid, outer, 1)?;
                cache.runs.insert((outer, gi), result);
            }
            let result = &cache.runs[&(outer, gi)];
            let e = result.eigenvalues[0];
            if !(e < 0.0) {
                return Err(CliError::Inapplicable(format!("ground energy {e} is not negative; nothing decays")));
            }
            let form = assemble(&cfg.potential, &grid, outer);
            let (lo, hi) = default_window(&cfg.potential, radius);
            let window = (d.r_min.unwrap_or(lo), d.r_max.unwrap_or(hi));
            let v = result.eigenvectors[0].clone();
            let fit = decay_fit(&form, &v, e, ray, window, samples, d.with_prefactor)?;
            let (ux, uy) = fit.ray;
            (fit, "computed", e, Box::new(move |r| form.interpolate(&v, r * ux, r * uy)))
        };

    let (r0, _) = fit.r_window;
    let rate = (-energy).sqrt();
    let c = eval(r0).abs() * r0.sqrt() * (rate * r0).exp();
    let mut csv = Csv::new(&["r", "abs_phi", "model"]);
    for i in 0..fit.samples {
        let r = fit.r_window.0 + (fit.r_window.1 - fit.r_window.0) * i as f64 / (fit.samples - 1) as f64;
        csv.row(&[fmt_f64(r), fmt_f64(eval(r).abs()), fmt_f64(c * (-rate * r).exp() / r.sqrt())]);
    }
    let report = json!({
        "source": source,
        "outer_bc": outer.as_str(),
        "h": grid.spacing(),
        "energy": energy,
        "fit": fit,
        "respects_bound": fit.respects_bound(),
        "relative_rate_error": fit.relative_rate_error(),
        "model_prefactor": c,
    });
    out.add("decay.csv", csv.into_bytes());
    out.add("decay_fit.json", json_bytes(&report));
    Ok(())
}

struct SweepRow {
    point: SweepPoint,
    lo: f64,
    hi: f64,
    count_bound: Option<usize>,
    computed: Option<f64>,
    negative_count: Option<usize>,
}

fn sweep_row(cfg: &ExperimentConfig, point: SweepPoint, solve: bool) -> Result<SweepRow, CliError> {
    let p = cfg.sweep_potential(point)?;
    let (lo, hi) = ground_energy_sandwich(&p);
    let count_bound = negative_count_bound(&p).ok().flatten();
    let (computed, negative_count) = if solve {
        let grids = cfg.grids()?;
        let grid = grids[grids.len() - 1];
        let (result, count, _) = solve_one(cfg, &p, &grid, cfg.outer_bcs()[0], 1)?;
        (Some(result.eigenvalues[0]), Some(count))
    } else {
        (None, None)
    };
    Ok(SweepRow { point, lo, hi, count_bound, computed, negative_count })
}

pub fn sweep(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let points = cfg.sweep_points()?;
    let solve = cfg.sweep.as_ref().is_some_and(|s| s.solve);
    // indexed parallel collect keeps grid order regardless of scheduling
    let rows: Vec<Result<SweepRow, CliError>> = points.par_iter().map(|&pt| sweep_row(cfg, pt, solve)).collect();
    let mut csv = Csv::new(&["sigma", "L", "E_lo", "E_hi", "count_bound", "E_computed", "negative_count"]);
    for row in rows {
        let r = row?;
        csv.row(&[
            fmt_f64(r.point.sigma),
            fmt_opt_f64(r.point.length),
            fmt_f64(r.lo),
            fmt_f64(r.hi),
            r.count_bound.map(|c| c.to_string()).unwrap_or_default(),
            fmt_opt_f64(r.computed),
            r.negative_count.map(|c| c.to_string()).unwrap_or_default(),
        ]);
    }
    out.add("sweep.csv", csv.into_bytes());
    Ok(())
}
