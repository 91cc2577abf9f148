//! Batch orchestration: the solve / crosscheck / converge / sweep-lambda
//! pipelines, the delta-halving retry policy, and artifact emission.

use crate::config::RunConfig;
use crate::crosscheck::{self, Perturbation};
use crate::error::Error;
use crate::grid::{FieldQuartet, HodographGrid};
use crate::material::MaterialModel;
use crate::oracle::ode_reference;
use crate::reconstruct::{
    consistency_residuals, recover_physical, sample_lattice, PhysicalField, ResidualSummary,
};
use crate::report::{self, OrderRow, RunReport, SweepRow};
use crate::scenario::{derive_boundary, validate_assumptions, DerivedBoundary, ScenarioData};
use crate::solver::{select_window, IterationReport, Stepper, Window};
use crate::source::{eval_coefficient_matrix, eval_forcing, SourceContext, SourceTables};
use std::path::Path;

/// Norms at or below this are classified "exact" in refinement studies
/// (interpolated floating-point data cannot meaningfully divide below it).
pub const EXACT_NORM_FLOOR: f64 = 1e-9;

/// Seed for the reproducible cross-check sample.
const CROSSCHECK_SEED: u64 = 0x5eed_c0ef;

#[derive(Debug)]
pub enum PipelineError {
    /// exit 2: malformed configuration or flags
    Usage(Error),
    /// exit 3: the scenario violates a structural assumption
    Validation(Error),
    /// exit 4: the iteration would not contract within the halving budget
    Contraction { error: Error },
    /// exit 5: physical reconstruction failed
    Reconstruction(Error),
    /// exit 1: a verification subcommand found a genuine deviation
    CheckFailed(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::CheckFailed(_) => 1,
            PipelineError::Usage(_) => 2,
            PipelineError::Validation(_) => 3,
            PipelineError::Contraction { .. } => 4,
            PipelineError::Reconstruction(_) => 5,
        }
    }
}

impl std::fmt::Display for PipelineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PipelineError::Usage(e) => write!(f, "usage: {e}"),
            PipelineError::Validation(e) => write!(f, "{e}"),
            PipelineError::Contraction { error } => write!(f, "{error}"),
            PipelineError::Reconstruction(e) => write!(f, "{e}"),
            PipelineError::CheckFailed(m) => write!(f, "check failed: {m}"),
        }
    }
}

type PResult<T> = std::result::Result<T, PipelineError>;

fn io_usage(e: Error) -> PipelineError {
    PipelineError::Usage(e)
}

struct Prepared {
    model: MaterialModel,
    scenario: ScenarioData,
    boundary: DerivedBoundary,
    window: Window,
}

fn prepare(cfg: &RunConfig) -> PResult<Prepared> {
    let model = cfg.build_model().map_err(PipelineError::Usage)?;
    let scenario = cfg.build_scenario().map_err(PipelineError::Usage)?;
    validate_assumptions(&model, &scenario)
        .ensure()
        .map_err(PipelineError::Validation)?;
    let boundary = derive_boundary(&model, &scenario);
    let window = select_window(&model, &boundary, Some(cfg.grid.delta));
    Ok(Prepared {
        model,
        scenario,
        boundary,
        window,
    })
}

struct SolveArtifacts {
    grid: HodographGrid,
    field: FieldQuartet,
    solver_report: IterationReport,
    phys: PhysicalField,
    delta_final: f64,
    halvings: usize,
}

/// Run the fixed-point solve at the configured delta, halving on failure up
/// to the budget; then recover the physical solution.
fn solve_with_halving(
    cfg: &RunConfig,
    prep: &Prepared,
) -> PResult<std::result::Result<SolveArtifacts, (Error, Option<IterationReport>)>> {
    let mut delta = cfg.grid.delta;
    let mut last: Option<(Error, Option<IterationReport>)> = None;

    for attempt in 0..=cfg.solver.max_halvings {
        let speed_bound = 2.0 * delta / (prep.model.m0 * prep.scenario.psi0);
        let grid = match HodographGrid::new(
            delta,
            cfg.grid.n_tau,
            prep.scenario.y_range,
            cfg.grid.n_y,
            speed_bound,
        ) {
            Ok(g) => g,
            Err(e) => return Err(PipelineError::Usage(e)),
        };
        let stepper = match Stepper::new(
            &prep.model,
            &prep.boundary,
            &grid,
            &prep.window,
            cfg.solver.eps_dd,
        ) {
            Ok(s) => s,
            Err(e) => {
                // the hodograph window itself may shrink into range
                last = Some((e, None));
                delta *= 0.5;
                continue;
            }
        };
        match stepper.solve_fixed_point(cfg.solver.tol, cfg.solver.max_iters) {
            Ok((field, solver_report)) => {
                let jac_floor = 0.5 * prep.model.m0 * prep.scenario.psi0;
                let phys = recover_physical(
                    &field,
                    &prep.boundary,
                    &grid,
                    stepper.levels(),
                    jac_floor,
                )
                .map_err(PipelineError::Reconstruction)?;
                return Ok(Ok(SolveArtifacts {
                    grid,
                    field,
                    solver_report,
                    phys,
                    delta_final: delta,
                    halvings: attempt,
                }));
            }
            Err(fail) => {
                last = Some((fail.error, Some(fail.report)));
                delta *= 0.5;
            }
        }
    }
    Ok(Err(last.expect("at least one attempt ran")))
}

/// Full solve pipeline: validate, iterate, reconstruct, verify, emit.
pub fn run_solve(cfg: &RunConfig, cfg_text: &str, out_dir: &Path) -> PResult<RunReport> {
    std::fs::create_dir_all(out_dir).map_err(|e| io_usage(e.into()))?;
    let prep = prepare(cfg)?;

    match solve_with_halving(cfg, &prep)? {
        Err((error, report)) => {
            // emit the last report for diagnosis, then fail with exit 4
            let run = RunReport {
                schema_version: crate::config::SCHEMA_VERSION,
                scenario: prep.scenario.name.clone(),
                config_digest: RunConfig::digest(cfg_text),
                window: prep.window.clone(),
                delta_initial: cfg.grid.delta,
                delta_final: cfg.grid.delta * 0.5f64.powi(cfg.solver.max_halvings as i32),
                halvings: cfg.solver.max_halvings,
                solver: report.unwrap_or_else(|| empty_report(&error)),
                oracle_max_abs_dev: None,
                jacobian_min: None,
                jacobian_floor: None,
                residuals: None,
                exit: format!("contraction failure: {error}"),
            };
            report::write_json(&out_dir.join("report.json"), &run)
                .map_err(PipelineError::Usage)?;
            Err(PipelineError::Contraction { error })
        }
        Ok(art) => {
            let lat = sample_lattice(
                &art.phys,
                &prep.model,
                &prep.boundary,
                cfg.grid.n_tau,
                None,
            )
            .map_err(PipelineError::Reconstruction)?;
            let t_excl = head_exclusion_time(&art.phys);
            let residuals =
                consistency_residuals(&lat, &prep.model, prep.scenario.lambda, t_excl);

            let oracle_dev = if prep.scenario.is_y_independent() {
                Some(
                    oracle_deviation(cfg, &prep, &art.grid, &art.field)
                        .map_err(PipelineError::Reconstruction)?,
                )
            } else {
                None
            };

            let run = RunReport {
                schema_version: crate::config::SCHEMA_VERSION,
                scenario: prep.scenario.name.clone(),
                config_digest: RunConfig::digest(cfg_text),
                window: prep.window.clone(),
                delta_initial: cfg.grid.delta,
                delta_final: art.delta_final,
                halvings: art.halvings,
                solver: art.solver_report.clone(),
                oracle_max_abs_dev: oracle_dev,
                jacobian_min: Some(art.phys.jac_min),
                jacobian_floor: Some(art.phys.jac_floor),
                residuals: Some(residuals),
                exit: "ok".into(),
            };
            report::write_field_csv(&out_dir.join("field.csv"), &art.grid, &art.field)
                .map_err(PipelineError::Usage)?;
            report::write_physical_csv(&out_dir.join("physical.csv"), &lat)
                .map_err(PipelineError::Usage)?;
            report::write_json(&out_dir.join("report.json"), &run)
                .map_err(PipelineError::Usage)?;
            Ok(run)
        }
    }
}

fn empty_report(error: &Error) -> IterationReport {
    IterationReport {
        converged: false,
        iterations: 0,
        records: Vec::new(),
        kappa_measured: f64::NAN,
        kappa_fit: None,
        fit_log_rms: None,
        p2_max: f64::NAN,
        p2_final: f64::NAN,
        p3_final: f64::NAN,
        min_margin: f64::NAN,
        margin_floor: f64::NAN,
        sup_argmax: (0.0, 0.0),
        failure: Some(error.to_string()),
    }
}

/// Largest time reached by the second tau-level across columns; H-norms
/// exclude lattice rows below it.
fn head_exclusion_time(phys: &PhysicalField) -> f64 {
    let nc = phys.cols.len();
    (0..nc)
        .map(|jj| phys.t[2 * nc + jj])
        .fold(0.0f64, f64::max)
}

fn oracle_deviation(
    cfg: &RunConfig,
    prep: &Prepared,
    grid: &HodographGrid,
    field: &FieldQuartet,
) -> crate::error::Result<f64> {
    let reference = ode_reference(
        &prep.model,
        &prep.boundary,
        cfg.solver.eps_dd,
        &grid.taus,
        1e-10,
    )?;
    let mut dev = 0.0f64;
    for (k, r) in reference.iter().enumerate() {
        for c in 0..4 {
            for j in grid.user_cols() {
                dev = dev.max((field.get(c, k, j) - r[c]).abs());
            }
        }
    }
    Ok(dev)
}

pub struct CrosscheckArtifacts {
    pub outcome: crosscheck::CrosscheckOutcome,
}

/// Coefficient fidelity check against the raw re-derivation route.
pub fn run_crosscheck(
    cfg: &RunConfig,
    out_dir: &Path,
    dump_at: Option<(f64, f64)>,
    perturb: Option<Perturbation>,
) -> PResult<CrosscheckArtifacts> {
    std::fs::create_dir_all(out_dir).map_err(|e| io_usage(e.into()))?;
    let prep = prepare(cfg)?;

    if let Some((tau, y)) = dump_at {
        let tables = SourceTables::new(&prep.model, &prep.scenario, cfg.solver.eps_dd);
        let level = tables
            .level(&prep.model, tau)
            .map_err(PipelineError::Validation)?;
        let bnd = prep.boundary.point(y);
        let ctx = SourceContext {
            tables: &tables,
            level: &level,
            bnd: &bnd,
            u: [0.0; 4],
        };
        let t = eval_coefficient_matrix(&ctx).map_err(PipelineError::Validation)?;
        let f = eval_forcing(&ctx).map_err(PipelineError::Validation)?;
        report::write_coeff_dump(&out_dir.join("coeffs.csv"), tau, y, &t, &f)
            .map_err(PipelineError::Usage)?;
    }

    let outcome = crosscheck::run_crosscheck(
        &prep.model,
        &prep.boundary,
        cfg.grid.delta,
        100,
        CROSSCHECK_SEED,
        perturb,
    )
    .map_err(PipelineError::Validation)?;
    report::write_crosscheck_csv(&out_dir.join("crosscheck.csv"), &outcome.families)
        .map_err(PipelineError::Usage)?;

    if outcome.passed() {
        Ok(CrosscheckArtifacts { outcome })
    } else {
        let w = outcome.worst();
        Err(PipelineError::CheckFailed(format!(
            "{} deviates by {:.3e} at (tau = {:.6e}, y = {:.6e}): raw {:.9e} vs transcribed {:.9e}",
            w.family, w.max_rel_dev, w.tau_worst, w.y_worst, w.raw_worst, w.transcribed_worst
        )))
    }
}

pub struct ConvergeArtifacts {
    pub rows: Vec<OrderRow>,
    pub passed: bool,
}

/// Refinement study across a ladder of grids: fixed-point values, the H
/// identities, and the PDE residuals must all shrink at order >= 1.8 (or be
/// exact) on the finest pair.
pub fn run_converge(cfg: &RunConfig, out_dir: &Path) -> PResult<ConvergeArtifacts> {
    std::fs::create_dir_all(out_dir).map_err(|e| io_usage(e.into()))?;
    let ladder = &cfg.converge.n_tau_grids;
    if ladder.len() < 3 {
        return Err(PipelineError::Usage(Error::Config {
            field: "converge.n_tau_grids".into(),
            message: "refinement study needs at least 3 grids".into(),
        }));
    }
    for w in ladder.windows(2) {
        if w[1] != 2 * w[0] {
            return Err(PipelineError::Usage(Error::Config {
                field: "converge.n_tau_grids".into(),
                message: "grids must halve the spacing (each n_tau doubles)".into(),
            }));
        }
    }
    let prep = prepare(cfg)?;

    // solve every grid at the same delta (halving would desynchronize the study)
    let mut runs: Vec<(HodographGrid, FieldQuartet, PhysicalField, usize)> = Vec::new();
    for (gi, &n_tau) in ladder.iter().enumerate() {
        let n_y = cfg.grid.n_y * (n_tau / ladder[0]);
        let speed_bound = 2.0 * cfg.grid.delta / (prep.model.m0 * prep.scenario.psi0);
        let grid = HodographGrid::new(
            cfg.grid.delta,
            n_tau,
            prep.scenario.y_range,
            n_y,
            speed_bound,
        )
        .map_err(PipelineError::Usage)?;
        let stepper = Stepper::new(
            &prep.model,
            &prep.boundary,
            &grid,
            &prep.window,
            cfg.solver.eps_dd,
        )
        .map_err(|e| PipelineError::Contraction { error: e })?;
        let (field, _rep) = stepper
            .solve_fixed_point(cfg.solver.tol, cfg.solver.max_iters)
            .map_err(|f| PipelineError::Contraction { error: f.error })?;
        let phys = recover_physical(
            &field,
            &prep.boundary,
            &grid,
            stepper.levels(),
            0.5 * prep.model.m0 * prep.scenario.psi0,
        )
        .map_err(PipelineError::Reconstruction)?;
        runs.push((grid, field, phys, n_tau));
        let _ = gi;
    }

    // common lattice window and head exclusion so norms share a domain
    let t_cap = 0.98
        * runs
            .iter()
            .map(|(_, _, p, _)| {
                let nc = p.cols.len();
                (0..nc)
                    .map(|jj| p.t[(p.n_levels - 1) * nc + jj])
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min);
    let t_excl = runs
        .iter()
        .map(|(_, _, p, _)| head_exclusion_time(p))
        .fold(0.0f64, f64::max);

    let mut summaries: Vec<ResidualSummary> = Vec::new();
    for (_, _, phys, n_tau) in &runs {
        let lat = sample_lattice(phys, &prep.model, &prep.boundary, *n_tau, Some(t_cap))
            .map_err(PipelineError::Reconstruction)?;
        summaries.push(consistency_residuals(
            &lat,
            &prep.model,
            prep.scenario.lambda,
            t_excl,
        ));
    }

    // fixed-point self-convergence between consecutive grids
    let mut field_diffs: Vec<f64> = Vec::new();
    for pair in runs.windows(2) {
        let (gc, fc, _, _) = &pair[0];
        let (gf, ff, _, _) = &pair[1];
        field_diffs.push(field_pair_diff(gc, fc, gf, ff));
    }

    let mut rows: Vec<OrderRow> = Vec::new();
    let mut passed = true;
    let mut push_series = |name: &str, norms: &[f64], n_taus: &[usize], gate: bool| {
        let mut prev: Option<f64> = None;
        let mut last_order: Option<f64> = None;
        let mut last_exact = false;
        for (i, &v) in norms.iter().enumerate() {
            let exact = v <= EXACT_NORM_FLOOR;
            let order = match prev {
                Some(p) if p > 0.0 && v > 0.0 && !exact => Some((p / v).log2()),
                _ => None,
            };
            rows.push(OrderRow {
                quantity: name.to_string(),
                n_tau: n_taus[i],
                norm: v,
                order,
                exact,
            });
            last_order = order;
            last_exact = exact;
            prev = Some(v);
        }
        if gate && !last_exact {
            match last_order {
                Some(o) if o >= 1.8 => {}
                _ => passed = false,
            }
        }
    };

    let n_taus: Vec<usize> = runs.iter().map(|r| r.3).collect();
    push_series("fixed_point", &field_diffs, &n_taus[1..], true);
    let h1: Vec<f64> = summaries.iter().map(|s| s.h1_sup).collect();
    let h2: Vec<f64> = summaries.iter().map(|s| s.h2_sup).collect();
    let p1: Vec<f64> = summaries.iter().map(|s| s.pde1_sup).collect();
    let p2: Vec<f64> = summaries.iter().map(|s| s.pde2_sup).collect();
    push_series("h1_sup", &h1, &n_taus, true);
    push_series("h2_sup", &h2, &n_taus, true);
    push_series("pde1_sup", &p1, &n_taus, true);
    push_series("pde2_sup", &p2, &n_taus, true);
    let h1l2: Vec<f64> = summaries.iter().map(|s| s.h1_l2).collect();
    let h2l2: Vec<f64> = summaries.iter().map(|s| s.h2_l2).collect();
    push_series("h1_l2", &h1l2, &n_taus, false);
    push_series("h2_l2", &h2l2, &n_taus, false);

    report::write_orders_csv(&out_dir.join("orders.csv"), &rows)
        .map_err(PipelineError::Usage)?;

    if passed {
        Ok(ConvergeArtifacts { rows, passed })
    } else {
        let failing: Vec<String> = rows
            .iter()
            .filter(|r| !r.exact && r.order.map(|o| o < 1.8).unwrap_or(false))
            .map(|r| format!("{} at n_tau = {} (order {:?})", r.quantity, r.n_tau, r.order))
            .collect();
        Err(PipelineError::CheckFailed(format!(
            "refinement orders below 1.8: {}",
            failing.join("; ")
        )))
    }
}

/// Sup over common user nodes of the summed component differences between a
/// coarse field and a twice-refined one.
fn field_pair_diff(
    gc: &HodographGrid,
    fc: &FieldQuartet,
    gf: &HodographGrid,
    ff: &FieldQuartet,
) -> f64 {
    let mut sup = 0.0f64;
    let nc_user = gc.user_hi - gc.user_lo;
    for k in 0..gc.n_levels() {
        for jj in 0..=nc_user {
            let (jc, jf) = (gc.user_lo + jj, gf.user_lo + 2 * jj);
            let mut s = 0.0;
            for c in 0..4 {
                s += (fc.get(c, k, jc) - ff.get(c, 2 * k, jf)).abs();
            }
            sup = sup.max(s);
        }
    }
    sup
}

pub struct SweepArtifacts {
    pub rows: Vec<SweepRow>,
}

/// Measure the contraction rate across a chirality grid [0, cap * scale].
pub fn run_sweep_lambda(cfg: &RunConfig, out_dir: &Path) -> PResult<SweepArtifacts> {
    std::fs::create_dir_all(out_dir).map_err(|e| io_usage(e.into()))?;
    // the cap comes from the lambda-free base scenario
    let mut base_cfg = cfg.clone();
    base_cfg.scenario.lambda = 0.0;
    let base = prepare(&base_cfg)?;
    let cap = base.window.lambda_cap * cfg.sweep.scale;
    let n = cfg.sweep.points.max(2);

    let mut rows = Vec::new();
    for i in 0..n {
        let lambda = cap * i as f64 / (n - 1) as f64;
        let mut cfg_i = cfg.clone();
        cfg_i.scenario.lambda = lambda;
        let prep = match prepare(&cfg_i) {
            Ok(p) => p,
            Err(e) => return Err(e),
        };
        match solve_with_halving(&cfg_i, &prep)? {
            Ok(art) => rows.push(SweepRow {
                lambda,
                kappa: art.solver_report.kappa_measured,
                converged: true,
                iterations: art.solver_report.iterations,
            }),
            Err((_, report)) => rows.push(SweepRow {
                lambda,
                kappa: report.map(|r| r.kappa_measured).unwrap_or(f64::NAN),
                converged: false,
                iterations: 0,
            }),
        }
    }
    report::write_sweep_csv(&out_dir.join("kappa_sweep.csv"), &rows)
        .map_err(PipelineError::Usage)?;
    Ok(SweepArtifacts { rows })
}
