//! The fixed-point machinery: characteristic tracing, quadrature of the
//! integral map along characteristics, the outer iteration with contraction
//! monitoring, and the window-selection rule for (M, lambda-cap, delta).
//!
//! One update of the map integrates, for each grid node and each component,
//! the corresponding right-hand side along the backward characteristic of its
//! family (composite trapezoid on the tau-levels, with the tau = 0 endpoint
//! supplied by the analytic limit). The characteristic ODE uses a two-stage
//! second-order scheme whose stages sit exactly on the tau-levels, so path
//! nodes align with field levels and no tau-interpolation is ever needed.

use crate::error::{Error, Result};
use crate::grid::{FieldQuartet, HodographGrid};
use crate::material::MaterialModel;
use crate::scenario::DerivedBoundary;
use crate::source::{eval_rhs, SourceContext, SourceTables, TauLevel};
use rayon::prelude::*;
use serde::Serialize;

/// Which characteristic family a quantity rides on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// dy/dtau = -tau / (c'(U_2 + g)); carries components U_1, U_3.
    Plus,
    /// dy/dtau = +tau / (c'(U_1 + g)); carries components U_2, U_4.
    Minus,
}

/// Constants selected for a run: the norm proxy K, the class bound M = 64 K,
/// the chirality cap 1/(32 K), and the window bounds.
#[derive(Debug, Clone, Serialize)]
pub struct Window {
    pub k_proxy: f64,
    pub m_cap: f64,
    pub lambda_cap: f64,
    /// Largest delta keeping the denominator margin, from the quadratic
    /// margin inequality.
    pub delta0: f64,
    /// min(1/M, delta0): the conservative theory window.
    pub delta_theory: f64,
    /// min(delta_theory, user cap): the seeded window; runs may start from
    /// the user cap instead, with the contraction monitor as the authority.
    pub delta: f64,
}

const WINDOW_SAMPLES: usize = 1024;

/// Estimate the constant family (K, M, lambda-cap, delta) from sampled
/// sup-norms of the material derivatives, the data norms, and the
/// denominator margins.
pub fn select_window(
    model: &MaterialModel,
    boundary: &DerivedBoundary,
    user_delta: Option<f64>,
) -> Window {
    let scen = &boundary.scenario;
    let mut k: f64 = 1.0;

    let (ulo, uhi) = model.u_domain;
    for i in 0..=WINDOW_SAMPLES {
        let u = ulo + (uhi - ulo) * (i as f64) / (WINDOW_SAMPLES as f64);
        for v in [
            model.dc(u),
            model.d2c(u),
            model.d3c(u),
            model.a(u),
            model.da(u),
            model.d2a(u),
            model.d3a(u),
        ] {
            k = k.max(v.abs());
        }
    }

    let (ylo, yhi) = scen.y_range;
    let mut sup_g11: f64 = 0.0;
    for i in 0..=WINDOW_SAMPLES {
        let y = ylo + (yhi - ylo) * (i as f64) / (WINDOW_SAMPLES as f64);
        for kk in 0..=3 {
            k = k.max(scen.psi1.eval(kk, y).abs());
            k = k.max(scen.psi2.eval(kk, y).abs());
        }
        for kk in 1..=4 {
            k = k.max(scen.phi2.eval(kk, y).abs());
        }
        for v in [
            boundary.g11(y),
            boundary.g21(y),
            boundary.g22(y),
            boundary.g11_d(y),
            boundary.g21_d(y),
            boundary.g22_d(y),
        ] {
            k = k.max(v.abs());
        }
        sup_g11 = sup_g11.max(boundary.g11(y).abs());
    }
    let margin = model.m0 * scen.psi0;
    k = k.max(1.0 / margin);

    let m_cap = 64.0 * k;
    let lambda_cap = 1.0 / (32.0 * k);
    // delta0 solves  delta (|c'| M delta + |c' g11| ) = m0 psi0 / 2
    let b = {
        let mut s: f64 = 0.0;
        for i in 0..=WINDOW_SAMPLES {
            let u = ulo + (uhi - ulo) * (i as f64) / (WINDOW_SAMPLES as f64);
            s = s.max(model.dc(u).abs());
        }
        s
    };
    let g_term = b * sup_g11;
    let delta0 = (-g_term + (g_term * g_term + 2.0 * b * m_cap * margin).sqrt())
        / (2.0 * b * m_cap);
    let delta_theory = (1.0 / m_cap).min(delta0);
    let delta = match user_delta {
        Some(d) => delta_theory.min(d),
        None => delta_theory,
    };
    Window {
        k_proxy: k,
        m_cap,
        lambda_cap,
        delta0,
        delta_theory,
        delta,
    }
}

/// One backward characteristic path: node positions at every tau-level up to
/// the endpoint's level.
#[derive(Debug, Clone)]
pub struct CharacteristicPath {
    pub family: Family,
    pub endpoint_level: usize,
    pub nodes: Vec<f64>,
}

/// Per-iteration convergence record.
#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// d(u^(n), u^(n-1)) in the tau^2-weighted metric.
    pub distance: f64,
    /// distance ratio against the previous iteration, when defined
    pub ratio: Option<f64>,
    /// weighted class norm of the new iterate
    pub weighted_norm: f64,
    pub min_margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationReport {
    pub converged: bool,
    pub iterations: usize,
    pub records: Vec<IterationRecord>,
    /// median of the last three distance ratios (0 when none exist)
    pub kappa_measured: f64,
    /// single-rate geometric fit over the last five distances
    pub kappa_fit: Option<f64>,
    /// RMS residual of that fit in log scale (decades)
    pub fit_log_rms: Option<f64>,
    /// worst weighted class norm over all iterates (P2 monitor)
    pub p2_max: f64,
    pub p2_final: f64,
    /// finite-difference slope monitor on the final iterate (P3)
    pub p3_final: f64,
    /// smallest characteristic-denominator magnitude seen
    pub min_margin: f64,
    pub margin_floor: f64,
    /// where the final distance sup was attained
    pub sup_argmax: (f64, f64),
    pub failure: Option<String>,
}

/// A failed run still carries its partial report for diagnostics.
#[derive(Debug)]
pub struct SolveFailure {
    pub error: Error,
    pub report: IterationReport,
}

/// Fixed-point stepper bound to one grid and scenario.
pub struct Stepper<'a> {
    pub model: &'a MaterialModel,
    pub boundary: &'a DerivedBoundary,
    pub grid: &'a HodographGrid,
    pub window: &'a Window,
    pub tables: SourceTables,
    levels: Vec<TauLevel>,
}

impl<'a> Stepper<'a> {
    pub fn new(
        model: &'a MaterialModel,
        boundary: &'a DerivedBoundary,
        grid: &'a HodographGrid,
        window: &'a Window,
        eps_dd: f64,
    ) -> Result<Stepper<'a>> {
        let tables = SourceTables::new(model, &boundary.scenario, eps_dd);
        let levels = grid
            .taus
            .iter()
            .map(|&tau| tables.level(model, tau))
            .collect::<Result<Vec<_>>>()?;
        Ok(Stepper {
            model,
            boundary,
            grid,
            window,
            tables,
            levels,
        })
    }

    pub fn levels(&self) -> &[TauLevel] {
        &self.levels
    }

    /// Characteristic speed of `family` at tau-level `l`, position `y`,
    /// reading the driving component off the given iterate.
    fn speed(&self, family: Family, l: usize, y: f64, field: &FieldQuartet) -> Result<f64> {
        let lvl = &self.levels[l];
        if lvl.tau == 0.0 {
            return Ok(0.0);
        }
        let comp = match family {
            Family::Plus => 1,
            Family::Minus => 0,
        };
        let u = field.interp_y(comp, l, y, self.grid);
        let g = self.boundary.g(lvl.tau, y);
        let den = lvl.dc * (u + g);
        let floor = self.tables.margin_floor();
        if !(den.abs() >= floor) {
            return Err(Error::ClassBreach {
                what: "characteristic denominator",
                tau: lvl.tau,
                y,
                value: den.abs(),
                floor,
            });
        }
        Ok(match family {
            Family::Plus => -lvl.tau / den,
            Family::Minus => lvl.tau / den,
        })
    }

    /// Backward characteristic from grid endpoint (tau_k, eta) down to tau = 0.
    ///
    /// Two-stage second-order scheme with both stages on tau-levels. With
    /// `strict` the path must stay inside the buffered domain (reported
    /// nodes); otherwise excursions are clamped to the domain edge.
    pub fn trace_characteristic(
        &self,
        field: &FieldQuartet,
        k: usize,
        eta: f64,
        family: Family,
        strict: bool,
    ) -> Result<CharacteristicPath> {
        let mut nodes = vec![0.0; k + 1];
        nodes[k] = eta;
        for l in (1..=k).rev() {
            let h = self.grid.taus[l] - self.grid.taus[l - 1];
            let y_l = nodes[l];
            let s1 = self.speed(family, l, y_l, field)?;
            let predictor = y_l - h * s1;
            let s0 = self.speed(family, l - 1, self.clamp_y(predictor), field)?;
            let mut y_next = y_l - 0.5 * h * (s1 + s0);
            if !self.grid.contains(y_next) {
                if strict {
                    return Err(Error::DomainBreach {
                        tau: self.grid.taus[k],
                        y: eta,
                        reached: y_next,
                    });
                }
                y_next = self.clamp_y(y_next);
            }
            nodes[l - 1] = y_next;
        }
        Ok(CharacteristicPath {
            family,
            endpoint_level: k,
            nodes,
        })
    }

    fn clamp_y(&self, y: f64) -> f64 {
        y.clamp(self.grid.y_nodes[0], *self.grid.y_nodes.last().unwrap())
    }

    /// Right-hand sides at (tau_l, y) with the field read off `field`;
    /// returns the rhs vector and the denominator margin at the point.
    fn rhs_at(&self, l: usize, y: f64, field: &FieldQuartet) -> Result<([f64; 4], f64)> {
        let bnd = self.boundary.point(y);
        let u = field.interp_all(l, y, self.grid);
        let ctx = SourceContext {
            tables: &self.tables,
            level: &self.levels[l],
            bnd: &bnd,
            u,
        };
        let margin = ctx.margin();
        let vals = eval_rhs(&ctx)?;
        Ok((vals.rhs, margin))
    }

    /// One application of the integral map to `field`.
    ///
    /// The new field is exactly zero on the tau = 0 level; every other node
    /// integrates its two characteristic families by composite trapezoid.
    pub fn picard_step(&self, field: &FieldQuartet) -> Result<(FieldQuartet, f64)> {
        let n_cols = self.grid.n_cols();
        let n_tau = self.grid.n_tau;
        let h = self.grid.h_tau();

        let jobs: Vec<(usize, usize)> = (1..=n_tau)
            .flat_map(|k| (0..n_cols).map(move |j| (k, j)))
            .collect();

        let results: Vec<Result<([f64; 4], f64)>> = jobs
            .par_iter()
            .map(|&(k, j)| -> Result<([f64; 4], f64)> {
                let eta = self.grid.y_nodes[j];
                let strict = j >= self.grid.user_lo && j <= self.grid.user_hi;
                let plus = self.trace_characteristic(field, k, eta, Family::Plus, strict)?;
                let minus = self.trace_characteristic(field, k, eta, Family::Minus, strict)?;

                let mut acc = [0.0f64; 4];
                let mut margin = f64::INFINITY;
                let (mut prev_p, mut prev_m) = ([0.0f64; 4], [0.0f64; 4]);
                for l in 0..=k {
                    let (rp, mp) = self.rhs_at(l, plus.nodes[l], field)?;
                    let (rm, mm) = self.rhs_at(l, minus.nodes[l], field)?;
                    margin = margin.min(mp).min(mm);
                    if l > 0 {
                        acc[0] += 0.5 * h * (prev_p[0] + rp[0]);
                        acc[2] += 0.5 * h * (prev_p[2] + rp[2]);
                        acc[1] += 0.5 * h * (prev_m[1] + rm[1]);
                        acc[3] += 0.5 * h * (prev_m[3] + rm[3]);
                    }
                    prev_p = rp;
                    prev_m = rm;
                }
                Ok((acc, margin))
            })
            .collect();

        let mut out = FieldQuartet::zeros(self.grid);
        let mut min_margin = f64::INFINITY;
        for (idx, res) in results.into_iter().enumerate() {
            let (k, j) = jobs[idx];
            let (vals, margin) = res?;
            out.set_at(k, j, vals);
            min_margin = min_margin.min(margin);
        }
        Ok((out, min_margin))
    }

    /// Iterate the map from the zero field until the weighted distance drops
    /// below `tol`, monitoring contraction and class membership.
    pub fn solve_fixed_point(
        &self,
        tol: f64,
        max_iters: usize,
    ) -> std::result::Result<(FieldQuartet, IterationReport), Box<SolveFailure>> {
        let mut records: Vec<IterationRecord> = Vec::new();
        let mut prev = FieldQuartet::zeros(self.grid);
        let mut p2_max = 0.0f64;
        let mut min_margin = f64::INFINITY;
        let mut increase_streak = 0usize;

        let fail = |err: Error, records: Vec<IterationRecord>, p2_max: f64, min_margin: f64| {
            let report = assemble_report(
                false,
                records,
                p2_max,
                f64::NAN,
                f64::NAN,
                min_margin,
                self.tables.margin_floor(),
                (0.0, 0.0),
                Some(err.to_string()),
            );
            Box::new(SolveFailure { error: err, report })
        };

        for n in 1..=max_iters {
            let (next, margin) = match self.picard_step(&prev) {
                Ok(v) => v,
                Err(e) => return Err(fail(e, records, p2_max, min_margin)),
            };
            min_margin = min_margin.min(margin);

            let (d, argmax) = next
                .weighted_distance(&prev, self.grid)
                .expect("same grid by construction");
            let sup_argmax = argmax;
            let p2 = next.weighted_norm(self.grid);
            p2_max = p2_max.max(p2);
            let ratio = records
                .last()
                .filter(|r| r.distance > 0.0)
                .map(|r| d / r.distance);
            records.push(IterationRecord {
                iteration: n,
                distance: d,
                ratio,
                weighted_norm: p2,
                min_margin: margin,
            });

            if p2 > self.window.m_cap {
                let e = Error::ClassBreach {
                    what: "weighted class norm (P2)",
                    tau: argmax.0,
                    y: argmax.1,
                    value: p2,
                    floor: self.window.m_cap,
                };
                return Err(fail(e, records, p2_max, min_margin));
            }

            if d <= tol {
                let p3 = next.weighted_slope_norm(self.grid);
                let report = assemble_report(
                    true,
                    records,
                    p2_max,
                    p2,
                    p3,
                    min_margin,
                    self.tables.margin_floor(),
                    sup_argmax,
                    None,
                );
                return Ok((next, report));
            }

            let increased = records.len() >= 2 && {
                let m = records.len();
                records[m - 1].distance > records[m - 2].distance
            };
            increase_streak = if increased { increase_streak + 1 } else { 0 };
            if increase_streak >= 3 {
                let e = Error::ContractionFailure {
                    streak: increase_streak,
                    last_distance: d,
                };
                return Err(fail(e, records, p2_max, min_margin));
            }

            prev = next;
        }

        let last = records.last().map(|r| r.distance).unwrap_or(f64::NAN);
        let e = Error::MaxIterations {
            iterations: max_iters,
            last_distance: last,
        };
        Err(fail(e, records, p2_max, min_margin))
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble_report(
    converged: bool,
    records: Vec<IterationRecord>,
    p2_max: f64,
    p2_final: f64,
    p3_final: f64,
    min_margin: f64,
    margin_floor: f64,
    sup_argmax: (f64, f64),
    failure: Option<String>,
) -> IterationReport {
    let ratios: Vec<f64> = records.iter().filter_map(|r| r.ratio).collect();
    let kappa_measured = median_of_tail(&ratios, 3);
    let (kappa_fit, fit_log_rms) = geometric_fit(&records);
    IterationReport {
        converged,
        iterations: records.len(),
        kappa_measured,
        kappa_fit,
        fit_log_rms,
        p2_max,
        p2_final,
        p3_final,
        min_margin,
        margin_floor,
        sup_argmax,
        failure,
        records,
    }
}

fn median_of_tail(ratios: &[f64], tail: usize) -> f64 {
    if ratios.is_empty() {
        return 0.0;
    }
    let start = ratios.len().saturating_sub(tail);
    let mut t: Vec<f64> = ratios[start..].to_vec();
    t.sort_by(f64::total_cmp);
    let m = t.len();
    if m % 2 == 1 {
        t[m / 2]
    } else {
        0.5 * (t[m / 2 - 1] + t[m / 2])
    }
}

/// Least-squares fit of log10 d_n against n over the last five positive
/// distances. Returns (kappa, rms residual in decades).
fn geometric_fit(records: &[IterationRecord]) -> (Option<f64>, Option<f64>) {
    let ds: Vec<f64> = records
        .iter()
        .map(|r| r.distance)
        .filter(|&d| d > 0.0)
        .collect();
    if ds.len() < 2 {
        return (None, None);
    }
    let tail = &ds[ds.len().saturating_sub(5)..];
    let n = tail.len() as f64;
    let xs: Vec<f64> = (0..tail.len()).map(|i| i as f64).collect();
    let ys: Vec<f64> = tail.iter().map(|d| d.log10()).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let alpha = ym - slope * xm;
    let rms = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (alpha + slope * x);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    (Some(10f64.powf(slope)), Some(rms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{derive_boundary, ScenarioData};
    use crate::source::EPS_DD_DEFAULT;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn constant_setup() -> (MaterialModel, ScenarioData) {
        let model = MaterialModel::linear(2.0, (-1.0, 1.0)).unwrap();
        let data = ScenarioData::from_sources(
            "constant-data",
            0.0,
            0.0,
            1.0,
            (-1.0, 1.0),
            "0",
            "1",
            "0.5",
        )
        .unwrap();
        (model, data)
    }

    fn trivial_setup() -> (MaterialModel, ScenarioData) {
        let model = MaterialModel::linear(2.0, (-1.0, 1.0)).unwrap();
        let data = ScenarioData::from_sources(
            "trivial",
            0.0,
            0.0,
            1.0,
            (-1.0, 1.0),
            "0.3",
            "1",
            "0",
        )
        .unwrap();
        (model, data)
    }

    #[test]
    fn window_scales_with_the_norm_proxy() {
        // all norms at 1: K = 1, M = 64, lambda cap 1/32, delta <= 1/64
        let model =
            MaterialModel::from_sources("unit", "-u", "1", Some(1.0), (-1.0, 1.0)).unwrap();
        let data =
            ScenarioData::from_sources("unit", 0.0, 0.0, 1.0, (-1.0, 1.0), "0", "1", "0").unwrap();
        let b = derive_boundary(&model, &data);
        let w = select_window(&model, &b, None);
        assert_relative_eq!(w.k_proxy, 1.0, epsilon = 1e-12);
        assert_relative_eq!(w.m_cap, 64.0, epsilon = 1e-12);
        assert_relative_eq!(w.lambda_cap, 1.0 / 32.0, epsilon = 1e-12);
        assert_relative_eq!(w.delta_theory, 1.0 / 64.0, epsilon = 1e-12);

        // doubling the data slope doubles K and halves the caps
        let data2 =
            ScenarioData::from_sources("unit2", 0.0, 0.0, 2.0, (-1.0, 1.0), "0", "2", "0").unwrap();
        let b2 = derive_boundary(&model, &data2);
        let w2 = select_window(&model, &b2, None);
        assert_relative_eq!(w2.k_proxy, 2.0, epsilon = 1e-12);
        assert_relative_eq!(w2.m_cap, 128.0, epsilon = 1e-12);
        assert_relative_eq!(w2.lambda_cap, 1.0 / 64.0, epsilon = 1e-12);
    }

    fn stepper_fixture<'a>(
        model: &'a MaterialModel,
        boundary: &'a DerivedBoundary,
        grid: &'a HodographGrid,
        window: &'a Window,
    ) -> Stepper<'a> {
        Stepper::new(model, boundary, grid, window, EPS_DD_DEFAULT).unwrap()
    }

    #[test]
    fn traced_path_matches_closed_form_integral() {
        let (model, data) = constant_setup();
        let b = derive_boundary(&model, &data);
        let w = select_window(&model, &b, Some(0.1));
        let grid = HodographGrid::new(0.1, 128, (-1.0, 1.0), 16, 0.5).unwrap();
        let st = stepper_fixture(&model, &b, &grid, &w);
        let field = FieldQuartet::zeros(&grid);

        let path = st
            .trace_characteristic(&field, 128, 0.0, Family::Plus, true)
            .unwrap();
        // dy/dtau = tau/(1 + tau/2), so y(0) = -(0.2 - 4 ln 1.05)
        let expected = -(0.2 - 4.0 * 1.05f64.ln());
        assert_abs_diff_eq!(path.nodes[0], expected, epsilon = 1e-8);
        assert_abs_diff_eq!(path.nodes[0], -0.0048393, epsilon = 1e-7);
        assert_eq!(path.nodes[128], 0.0);
    }

    #[test]
    fn single_step_path_obeys_speed_bound() {
        let (model, data) = constant_setup();
        let b = derive_boundary(&model, &data);
        let w = select_window(&model, &b, Some(0.1));
        let grid = HodographGrid::new(0.1, 16, (-1.0, 1.0), 16, 0.5).unwrap();
        let st = stepper_fixture(&model, &b, &grid, &w);
        let field = FieldQuartet::zeros(&grid);
        let h = grid.h_tau();
        let path = st
            .trace_characteristic(&field, 1, 0.25, Family::Minus, true)
            .unwrap();
        let bound = h / (model.m0 * data.psi0 / 2.0) * grid.taus[1].max(h);
        assert!((path.nodes[0] - 0.25).abs() <= bound);
    }

    #[test]
    fn paths_do_not_depend_on_lambda() {
        let (model, _) = constant_setup();
        let mk = |lambda: f64| {
            ScenarioData::from_sources(
                "s",
                0.0,
                lambda,
                1.0,
                (-1.0, 1.0),
                "0",
                "1",
                "0.5",
            )
            .unwrap()
        };
        let grid = HodographGrid::new(0.1, 32, (-1.0, 1.0), 16, 0.5).unwrap();
        let field = FieldQuartet::zeros(&grid);
        let mut endpoints = Vec::new();
        for lambda in [0.0, 1.0 / 96.0] {
            let data = mk(lambda);
            let b = derive_boundary(&model, &data);
            let w = select_window(&model, &b, Some(0.1));
            let st = stepper_fixture(&model, &b, &grid, &w);
            let p = st
                .trace_characteristic(&field, 32, 0.3, Family::Plus, true)
                .unwrap();
            endpoints.push(p.nodes);
        }
        assert_eq!(endpoints[0], endpoints[1]);
    }

    #[test]
    fn first_iterate_has_the_predicted_small_time_profile() {
        let (model, data) = constant_setup();
        let b = derive_boundary(&model, &data);
        let w = select_window(&model, &b, Some(0.1));
        let grid = HodographGrid::new(0.1, 128, (-1.0, 1.0), 16, 0.5).unwrap();
        let st = stepper_fixture(&model, &b, &grid, &w);
        let zero = FieldQuartet::zeros(&grid);
        let (first, _) = st.picard_step(&zero).unwrap();

        // F_1(0) = -1 makes U_1(xi)/xi^2 -> -1/2
        let j = grid.user_lo + 8;
        let mut seen = 0;
        for k in 1..=grid.n_tau {
            let xi = grid.taus[k];
            if xi > 1e-2 {
                break;
            }
            seen += 1;
            let ratio = first.get(0, k, j) / (xi * xi);
            assert!(
                (ratio + 0.5).abs() <= 1e-3,
                "xi = {xi}: U1/xi^2 = {ratio}"
            );
        }
        assert!(seen >= 5);
        assert!(first.initial_level_is_zero());
    }

    #[test]
    fn zero_is_the_exact_fixed_point_of_the_trivial_scenario() {
        let (model, data) = trivial_setup();
        let b = derive_boundary(&model, &data);
        let w = select_window(&model, &b, Some(0.1));
        let grid = HodographGrid::new(0.1, 32, (-1.0, 1.0), 16, 0.5).unwrap();
        let st = stepper_fixture(&model, &b, &grid, &w);
        let zero = FieldQuartet::zeros(&grid);
        let (next, _) = st.picard_step(&zero).unwrap();
        assert_eq!(next.sup_norm_user(&grid), 0.0);

        let (field, report) = st.solve_fixed_point(1e-12, 10).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 1);
        assert_eq!(field.sup_norm_user(&grid), 0.0);
        assert!(report.kappa_measured < 1.0);
    }

    #[test]
    fn constant_data_run_contracts_quickly() {
        let (model, data) = constant_setup();
        let b = derive_boundary(&model, &data);
        let w = select_window(&model, &b, Some(0.1));
        let grid = HodographGrid::new(0.1, 64, (-1.0, 1.0), 16, 0.5).unwrap();
        let st = stepper_fixture(&model, &b, &grid, &w);
        let (field, report) = st.solve_fixed_point(1e-10, 60).unwrap();
        assert!(report.converged, "{:?}", report.failure);
        assert!(report.kappa_measured < 0.9, "kappa = {}", report.kappa_measured);
        assert!(field.initial_level_is_zero());
        assert!(report.p2_max <= w.m_cap);
        assert!(report.min_margin >= st.tables.margin_floor());
        // the weighted profile is flat in y, so P2 roughly matches |F(0)| * 2
        assert!(report.p2_final > 0.0);
    }
}
