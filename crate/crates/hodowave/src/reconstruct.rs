//! Conversion of the converged hodograph fields back to physical variables,
//! and the independent consistency checks in the physical plane.
//!
//! The Riemann invariants come from undoing the homogenization, the time map
//! integrates dt/dtau = -2/(c'(u)(R1+S1)) per column, and the angles (u, v)
//! follow from the decoupled equations. The physical sample is a rectangular
//! (t, x) lattice obtained per column by inverting the strictly monotone
//! time map with a cubic Hermite interpolant whose slopes are the exact
//! Jacobian values, so no derivative estimation enters the inversion.
//!
//! The residuals H1 = R1 - S1 - 2 c u_x and H2 = R2 - S2 - 2 c v_x are
//! formed with physical-plane finite differences; in hodograph variables
//! they vanish identically by construction, so evaluating them on the
//! (t, x) lattice is a genuine test of the whole chain of transformations.

use crate::error::{Error, Result};
use crate::grid::{FieldQuartet, HodographGrid};
use crate::material::MaterialModel;
use crate::scenario::DerivedBoundary;
use crate::source::TauLevel;
use serde::Serialize;

/// Physical solution sampled on the hodograph grid (user columns only).
#[derive(Debug, Clone)]
pub struct PhysicalField {
    pub n_levels: usize,
    /// y values of the user columns
    pub cols: Vec<f64>,
    pub taus: Vec<f64>,
    /// angle u per tau-level (y-independent by construction)
    pub u_of_tau: Vec<f64>,
    pub r1: Vec<f64>,
    pub s1: Vec<f64>,
    pub r2: Vec<f64>,
    pub s2: Vec<f64>,
    /// Jacobian -c'(u)(R1+S1)/2 per node
    pub jac: Vec<f64>,
    /// time map per node, t(0, y) = 0
    pub t: Vec<f64>,
    pub v: Vec<f64>,
    pub jac_floor: f64,
    pub jac_min: f64,
}

impl PhysicalField {
    #[inline]
    pub fn idx(&self, level: usize, col: usize) -> usize {
        level * self.cols.len() + col
    }
}

/// Undo the homogenization: R1 = U1 + psi1 + g11 tau and so on.
pub fn recover_invariants(
    field: &FieldQuartet,
    boundary: &DerivedBoundary,
    grid: &HodographGrid,
) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let cols: Vec<usize> = grid.user_cols().collect();
    let n = cols.len() * grid.n_levels();
    let mut r1 = vec![0.0; n];
    let mut s1 = vec![0.0; n];
    let mut r2 = vec![0.0; n];
    let mut s2 = vec![0.0; n];
    for (jj, &j) in cols.iter().enumerate() {
        let y = grid.y_nodes[j];
        let psi1 = boundary.scenario.psi1.eval(0, y);
        let psi2 = boundary.scenario.psi2.eval(0, y);
        let (g11, g21, g22) = (boundary.g11(y), boundary.g21(y), boundary.g22(y));
        for (k, &tau) in grid.taus.iter().enumerate() {
            let i = k * cols.len() + jj;
            r1[i] = field.get(0, k, j) + psi1 + g11 * tau;
            s1[i] = field.get(1, k, j) + psi1 + g11 * tau;
            r2[i] = field.get(2, k, j) + psi2 + g21 * tau;
            s2[i] = field.get(3, k, j) + psi2 + g22 * tau;
        }
    }
    (r1, s1, r2, s2)
}

/// Full recovery: invariants, Jacobian with its positivity guard, time map,
/// the angle u(tau), and v integrated per column from phi2.
pub fn recover_physical(
    field: &FieldQuartet,
    boundary: &DerivedBoundary,
    grid: &HodographGrid,
    levels: &[TauLevel],
    jac_floor: f64,
) -> Result<PhysicalField> {
    let cols_idx: Vec<usize> = grid.user_cols().collect();
    let cols: Vec<f64> = cols_idx.iter().map(|&j| grid.y_nodes[j]).collect();
    let nc = cols.len();
    let nl = grid.n_levels();
    let (r1, s1, r2, s2) = recover_invariants(field, boundary, grid);

    let mut jac = vec![0.0; nl * nc];
    let mut jac_min = f64::INFINITY;
    for k in 0..nl {
        let dc = levels[k].dc;
        for jj in 0..nc {
            let i = k * nc + jj;
            let j_val = -dc * (r1[i] + s1[i]) / 2.0;
            jac[i] = j_val;
            if j_val < jac_min {
                jac_min = j_val;
            }
            if !(j_val >= jac_floor) {
                return Err(Error::JacobianDegeneration {
                    tau: grid.taus[k],
                    y: cols[jj],
                    value: j_val,
                    floor: jac_floor,
                });
            }
        }
    }

    // time map and v by compensated trapezoid per column
    let h = grid.h_tau();
    let mut t = vec![0.0; nl * nc];
    let mut v = vec![0.0; nl * nc];
    for jj in 0..nc {
        v[jj] = boundary.scenario.phi2.eval(0, cols[jj]);
        let dt_dtau = |i: usize| 1.0 / jac[i];
        let dv_dtau =
            |k: usize, i: usize| -(r2[i] + s2[i]) / (levels[k].dc * (r1[i] + s1[i]));
        let mut t_acc = Kahan::default();
        let mut v_acc = Kahan::new(v[jj]);
        for k in 1..nl {
            let (i0, i1) = ((k - 1) * nc + jj, k * nc + jj);
            t_acc.add(0.5 * h * (dt_dtau(i0) + dt_dtau(i1)));
            v_acc.add(0.5 * h * (dv_dtau(k - 1, i0) + dv_dtau(k, i1)));
            t[i1] = t_acc.value();
            v[i1] = v_acc.value();
        }
    }

    Ok(PhysicalField {
        n_levels: nl,
        cols,
        taus: grid.taus.clone(),
        u_of_tau: levels.iter().map(|l| l.u).collect(),
        r1,
        s1,
        r2,
        s2,
        jac,
        t,
        v,
        jac_floor,
        jac_min,
    })
}

#[derive(Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn new(v: f64) -> Kahan {
        Kahan { sum: v, c: 0.0 }
    }
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
    fn value(&self) -> f64 {
        self.sum
    }
}

/// Rectangular (t, x) sample of the physical solution.
#[derive(Debug, Clone)]
pub struct PhysicalLattice {
    pub t_nodes: Vec<f64>,
    pub x_nodes: Vec<f64>,
    pub tau_star: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub r1: Vec<f64>,
    pub s1: Vec<f64>,
    pub r2: Vec<f64>,
    pub s2: Vec<f64>,
    pub jac: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    /// largest time reachable by every column
    pub t_common: f64,
}

impl PhysicalLattice {
    #[inline]
    pub fn idx(&self, row: usize, col: usize) -> usize {
        row * self.x_nodes.len() + col
    }
}

/// Cubic Hermite value of tau(t) on one column, using exact slopes
/// dtau/dt = J at the nodes.
fn invert_time(t_nodes: &[f64], taus: &[f64], jac: &[f64], t_query: f64) -> f64 {
    let n = t_nodes.len();
    let mut lo = 0usize;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if t_nodes[mid] <= t_query {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let d = t_nodes[hi] - t_nodes[lo];
    let s = ((t_query - t_nodes[lo]) / d).clamp(0.0, 1.0);
    let (h00, h10, h01, h11) = (
        2.0 * s.powi(3) - 3.0 * s * s + 1.0,
        s.powi(3) - 2.0 * s * s + s,
        -2.0 * s.powi(3) + 3.0 * s * s,
        s.powi(3) - s * s,
    );
    h00 * taus[lo] + h10 * d * jac[lo] + h01 * taus[hi] + h11 * d * jac[hi]
}

/// 4-point Lagrange interpolation on the uniform tau-levels of one column.
fn interp_tau(values: &[f64], nc: usize, col: usize, taus: &[f64], tau_q: f64) -> f64 {
    let n = taus.len();
    let h = taus[1] - taus[0];
    let s = (tau_q / h).clamp(0.0, (n - 1) as f64);
    let cell = (s.floor() as usize).min(n - 2);
    let i0 = cell.saturating_sub(1).min(n - 4);
    let t = s - i0 as f64;
    let w = [
        -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0,
        t * (t - 2.0) * (t - 3.0) / 2.0,
        -t * (t - 1.0) * (t - 3.0) / 2.0,
        t * (t - 1.0) * (t - 2.0) / 6.0,
    ];
    // difference form: exact on constant columns
    let base = values[(i0 + 1) * nc + col];
    base + w[0] * (values[i0 * nc + col] - base)
        + w[2] * (values[(i0 + 2) * nc + col] - base)
        + w[3] * (values[(i0 + 3) * nc + col] - base)
}

/// Sample the physical solution on a rectangular lattice with `n_rows` time
/// intervals up to `t_cap` (defaults to 98% of the common reachable time).
pub fn sample_lattice(
    phys: &PhysicalField,
    model: &MaterialModel,
    boundary: &DerivedBoundary,
    n_rows: usize,
    t_cap: Option<f64>,
) -> Result<PhysicalLattice> {
    let nc = phys.cols.len();
    let nl = phys.n_levels;
    let t_common = (0..nc)
        .map(|jj| phys.t[(nl - 1) * nc + jj])
        .fold(f64::INFINITY, f64::min);
    let t_use = t_cap.unwrap_or(0.98 * t_common);
    if t_use > t_common {
        return Err(Error::CoverageGap(format!(
            "requested time cap {t_use:.6e} exceeds the common reachable time {t_common:.6e}"
        )));
    }

    let t_nodes: Vec<f64> = (0..=n_rows)
        .map(|i| t_use * i as f64 / n_rows as f64)
        .collect();
    let x_nodes = phys.cols.clone();
    let phi1 = boundary.scenario.phi1;

    let nn = t_nodes.len() * nc;
    let mut lat = PhysicalLattice {
        t_nodes: t_nodes.clone(),
        x_nodes,
        tau_star: vec![0.0; nn],
        u: vec![0.0; nn],
        v: vec![0.0; nn],
        r1: vec![0.0; nn],
        s1: vec![0.0; nn],
        r2: vec![0.0; nn],
        s2: vec![0.0; nn],
        jac: vec![0.0; nn],
        h1: vec![0.0; nn],
        h2: vec![0.0; nn],
        t_common,
    };

    for jj in 0..nc {
        let t_col: Vec<f64> = (0..nl).map(|k| phys.t[k * nc + jj]).collect();
        let jac_col: Vec<f64> = (0..nl).map(|k| phys.jac[k * nc + jj]).collect();
        for (row, &tq) in t_nodes.iter().enumerate() {
            let tau_q = if row == 0 {
                0.0
            } else {
                invert_time(&t_col, &phys.taus, &jac_col, tq)
            };
            let i = row * nc + jj;
            lat.tau_star[i] = tau_q;
            lat.u[i] = model.invert_wave_speed(phi1, tau_q)?;
            lat.v[i] = interp_tau(&phys.v, nc, jj, &phys.taus, tau_q);
            lat.r1[i] = interp_tau(&phys.r1, nc, jj, &phys.taus, tau_q);
            lat.s1[i] = interp_tau(&phys.s1, nc, jj, &phys.taus, tau_q);
            lat.r2[i] = interp_tau(&phys.r2, nc, jj, &phys.taus, tau_q);
            lat.s2[i] = interp_tau(&phys.s2, nc, jj, &phys.taus, tau_q);
            lat.jac[i] = -model.dc(lat.u[i]) * (lat.r1[i] + lat.s1[i]) / 2.0;
        }
    }

    // H residuals with second-order x-derivatives (one-sided at the edges)
    let hx = lat.x_nodes[1] - lat.x_nodes[0];
    // difference-first forms so that constant rows differentiate to exact zero
    let dx = |vals: &[f64], row: usize, col: usize| -> f64 {
        let i = row * nc + col;
        if col == 0 {
            (4.0 * (vals[i + 1] - vals[i]) - (vals[i + 2] - vals[i])) / (2.0 * hx)
        } else if col == nc - 1 {
            (-4.0 * (vals[i - 1] - vals[i]) + (vals[i - 2] - vals[i])) / (2.0 * hx)
        } else {
            (vals[i + 1] - vals[i - 1]) / (2.0 * hx)
        }
    };
    for row in 0..t_nodes.len() {
        for col in 0..nc {
            let i = row * nc + col;
            let c = model.c(lat.u[i]);
            lat.h1[i] = lat.r1[i] - lat.s1[i] - 2.0 * c * dx(&lat.u, row, col);
            lat.h2[i] = lat.r2[i] - lat.s2[i] - 2.0 * c * dx(&lat.v, row, col);
        }
    }

    Ok(lat)
}

/// Norms of the consistency and PDE residuals.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualSummary {
    /// H-norms exclude lattice rows below this time (the discrete analogue
    /// of dividing by small tau near the degenerate line)
    pub t_excluded_below: f64,
    pub h1_sup: f64,
    pub h2_sup: f64,
    pub h1_l2: f64,
    pub h2_l2: f64,
    /// sup of the excluded head rows, recorded separately
    pub h1_sup_head: f64,
    pub h2_sup_head: f64,
    pub pde1_sup: f64,
    pub pde2_sup: f64,
    pub pde1_l2: f64,
    pub pde2_l2: f64,
    pub pde_t_window: (f64, f64),
    pub lattice_rows: usize,
    pub lattice_cols: usize,
}

/// Residual norms over the lattice: the H identities away from the first
/// tau-levels, and the second-order finite-difference residuals of the
/// original system on the interior time window [0.2, 0.8] x t_max.
pub fn consistency_residuals(
    lat: &PhysicalLattice,
    model: &MaterialModel,
    lambda: f64,
    t_exclude: f64,
) -> ResidualSummary {
    let nc = lat.x_nodes.len();
    let nr = lat.t_nodes.len();
    let ht = lat.t_nodes[1] - lat.t_nodes[0];
    let hx = lat.x_nodes[1] - lat.x_nodes[0];

    let mut h1_sup: f64 = 0.0;
    let mut h2_sup: f64 = 0.0;
    let mut h1_sq = 0.0;
    let mut h2_sq = 0.0;
    let mut n_kept = 0usize;
    let mut h1_head: f64 = 0.0;
    let mut h2_head: f64 = 0.0;
    for row in 0..nr {
        let head = lat.t_nodes[row] < t_exclude;
        for col in 0..nc {
            let i = row * nc + col;
            if head {
                h1_head = h1_head.max(lat.h1[i].abs());
                h2_head = h2_head.max(lat.h2[i].abs());
            } else {
                h1_sup = h1_sup.max(lat.h1[i].abs());
                h2_sup = h2_sup.max(lat.h2[i].abs());
                h1_sq += lat.h1[i] * lat.h1[i];
                h2_sq += lat.h2[i] * lat.h2[i];
                n_kept += 1;
            }
        }
    }
    let h1_l2 = (h1_sq / n_kept.max(1) as f64).sqrt();
    let h2_l2 = (h2_sq / n_kept.max(1) as f64).sqrt();

    // PDE residuals on the interior sub-rectangle
    let t_max = *lat.t_nodes.last().unwrap();
    let (t_lo, t_hi) = (0.2 * t_max, 0.8 * t_max);
    let mut p1_sup: f64 = 0.0;
    let mut p2_sup: f64 = 0.0;
    let mut p1_sq = 0.0;
    let mut p2_sq = 0.0;
    let mut n_pde = 0usize;

    let at = |vals: &[f64], r: usize, c: usize| vals[r * nc + c];
    for row in 1..nr - 1 {
        let t = lat.t_nodes[row];
        if t < t_lo || t > t_hi {
            continue;
        }
        for col in 1..nc - 1 {
            let u_c = at(&lat.u, row, col);
            let (c_c, dc_c) = (model.c(u_c), model.dc(u_c));
            let (a_c, da_c) = (model.a(u_c), model.da(u_c));

            let u_tt = (at(&lat.u, row + 1, col) - 2.0 * u_c + at(&lat.u, row - 1, col))
                / (ht * ht);
            let c2 = |u: f64| model.c(u) * model.c(u);
            let flux_x = {
                let up = 0.5 * (u_c + at(&lat.u, row, col + 1));
                let um = 0.5 * (u_c + at(&lat.u, row, col - 1));
                (c2(up) * (at(&lat.u, row, col + 1) - u_c)
                    - c2(um) * (u_c - at(&lat.u, row, col - 1)))
                    / (hx * hx)
            };
            let u_x = (at(&lat.u, row, col + 1) - at(&lat.u, row, col - 1)) / (2.0 * hx);
            let v_x = (at(&lat.v, row, col + 1) - at(&lat.v, row, col - 1)) / (2.0 * hx);
            let v_t = (at(&lat.v, row + 1, col) - at(&lat.v, row - 1, col)) / (2.0 * ht);

            let res1 = u_tt - flux_x + c_c * dc_c * u_x * u_x
                - a_c * da_c * (v_t * v_t - c_c * c_c * v_x * v_x)
                + a_c * a_c * c_c * dc_c * v_x * v_x
                - 2.0 * lambda * a_c * da_c * v_x;

            let a2 = |u: f64| model.a(u) * model.a(u);
            let g_t = {
                let up = 0.5 * (u_c + at(&lat.u, row + 1, col));
                let um = 0.5 * (u_c + at(&lat.u, row - 1, col));
                (a2(up) * (at(&lat.v, row + 1, col) - at(&lat.v, row, col))
                    - a2(um) * (at(&lat.v, row, col) - at(&lat.v, row - 1, col)))
                    / (ht * ht)
            };
            let p_x = {
                let up = 0.5 * (u_c + at(&lat.u, row, col + 1));
                let um = 0.5 * (u_c + at(&lat.u, row, col - 1));
                let fp = a2(up) * c2(up) * (at(&lat.v, row, col + 1) - at(&lat.v, row, col))
                    / hx
                    - lambda * a2(up);
                let fm = a2(um) * c2(um) * (at(&lat.v, row, col) - at(&lat.v, row, col - 1))
                    / hx
                    - lambda * a2(um);
                (fp - fm) / hx
            };
            let res2 = g_t - p_x;

            p1_sup = p1_sup.max(res1.abs());
            p2_sup = p2_sup.max(res2.abs());
            p1_sq += res1 * res1;
            p2_sq += res2 * res2;
            n_pde += 1;
        }
    }

    ResidualSummary {
        t_excluded_below: t_exclude,
        h1_sup,
        h2_sup,
        h1_l2,
        h2_l2,
        h1_sup_head: h1_head,
        h2_sup_head: h2_head,
        pde1_sup: p1_sup,
        pde2_sup: p2_sup,
        pde1_l2: (p1_sq / n_pde.max(1) as f64).sqrt(),
        pde2_l2: (p2_sq / n_pde.max(1) as f64).sqrt(),
        pde_t_window: (t_lo, t_hi),
        lattice_rows: nr,
        lattice_cols: nc,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{derive_boundary, ScenarioData};
    use crate::solver::{select_window, Stepper};
    use crate::source::EPS_DD_DEFAULT;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn solve(
        model: &MaterialModel,
        data: &ScenarioData,
        delta: f64,
        n_tau: usize,
        n_y: usize,
    ) -> (PhysicalField, PhysicalLattice, f64) {
        let b = derive_boundary(model, data);
        let w = select_window(model, &b, Some(delta));
        let speed_bound = delta / (0.5 * model.m0 * data.psi0);
        let grid = HodographGrid::new(delta, n_tau, data.y_range, n_y, speed_bound).unwrap();
        let st = Stepper::new(model, &b, &grid, &w, EPS_DD_DEFAULT).unwrap();
        let (field, _report) = st.solve_fixed_point(1e-11, 80).unwrap();
        let phys = recover_physical(
            &field,
            &b,
            &grid,
            st.levels(),
            0.5 * model.m0 * data.psi0,
        )
        .unwrap();
        let lat = sample_lattice(&phys, model, &b, n_tau, None).unwrap();
        let t_excl = (0..phys.cols.len())
            .map(|jj| phys.t[2 * phys.cols.len() + jj])
            .fold(0.0f64, f64::max);
        (phys, lat, t_excl)
    }

    fn trivial() -> (MaterialModel, ScenarioData) {
        let model = MaterialModel::linear(2.0, (-1.0, 1.0)).unwrap();
        let data =
            ScenarioData::from_sources("trivial", 0.0, 0.0, 1.0, (-1.0, 1.0), "0.3", "1", "0")
                .unwrap();
        (model, data)
    }

    fn constant_data() -> (MaterialModel, ScenarioData) {
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

    #[test]
    fn invariants_reduce_to_data_on_the_degenerate_line() {
        let (model, data) = constant_data();
        let (phys, _, _) = solve(&model, &data, 0.1, 32, 16);
        let nc = phys.cols.len();
        for jj in 0..nc {
            assert_eq!(phys.r1[jj], 1.0);
            assert_eq!(phys.s1[jj], 1.0);
            assert_eq!(phys.r2[jj], 0.5);
            assert_eq!(phys.s2[jj], 0.5);
            assert_eq!(phys.t[jj], 0.0);
        }
    }

    #[test]
    fn trivial_scenario_reconstructs_exactly() {
        let (model, data) = trivial();
        let (phys, lat, _) = solve(&model, &data, 0.1, 32, 16);
        // dt/dtau = 1, so t = tau; u = tau; v constant at phi2 = 0.3
        let nc = phys.cols.len();
        for k in 0..phys.n_levels {
            for jj in 0..nc {
                let i = k * nc + jj;
                assert_abs_diff_eq!(phys.t[i], phys.taus[k], epsilon = 1e-13);
                assert_eq!(phys.v[i], 0.3);
            }
        }
        // on the lattice u = t to high accuracy and H vanishes identically
        for (i, &u) in lat.u.iter().enumerate() {
            let row = i / nc;
            assert_abs_diff_eq!(u, lat.t_nodes[row], epsilon = 1e-12);
            assert_eq!(lat.h1[i], 0.0);
            assert_eq!(lat.h2[i], 0.0);
            assert_abs_diff_eq!(lat.v[i], 0.3, epsilon = 1e-15);
        }
    }

    #[test]
    fn time_map_has_the_predicted_leading_curvature() {
        let (model, data) = constant_data();
        let (phys, _, _) = solve(&model, &data, 0.1, 64, 16);
        let nc = phys.cols.len();
        // dt/dtau = 2/(2 + tau + O(tau^2)) gives t = tau - tau^2/4 + O(tau^3)
        for k in [4usize, 8, 16] {
            let tau = phys.taus[k];
            let expected = tau - tau * tau / 4.0;
            assert_abs_diff_eq!(phys.t[k * nc], expected, epsilon = 3.0 * tau.powi(3));
        }
    }

    #[test]
    fn v_grows_at_the_predicted_rate() {
        let (model, data) = constant_data();
        let (phys, _, _) = solve(&model, &data, 0.1, 64, 16);
        let nc = phys.cols.len();
        // v_tau(0) = psi2/psi1 = 1/2
        for k in [2usize, 4, 8] {
            let tau = phys.taus[k];
            let v = phys.v[k * nc + nc / 2];
            assert_abs_diff_eq!(v, 0.5 * tau, epsilon = 2.0 * tau * tau);
        }
    }

    #[test]
    fn jacobian_keeps_its_margin() {
        let (model, data) = constant_data();
        let (phys, _, _) = solve(&model, &data, 0.1, 32, 16);
        assert!(phys.jac_min >= phys.jac_floor);
        // J ~ psi1 = 1 at tau = 0
        assert_relative_eq!(phys.jac[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn round_trip_reproduces_the_hodograph_time() {
        let (model, data) = constant_data();
        let (_, lat, _) = solve(&model, &data, 0.1, 32, 16);
        for i in 0..lat.u.len() {
            // tau = -c(u) by definition of the transformation
            assert_abs_diff_eq!(-model.c(lat.u[i]), lat.tau_star[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn initial_data_is_recovered_on_the_first_row() {
        let (model, data) = constant_data();
        let (_, lat, _) = solve(&model, &data, 0.1, 32, 16);
        let nc = lat.x_nodes.len();
        for col in 0..nc {
            // u_t and v_t read as (R+S)/2 at t = 0
            assert_abs_diff_eq!(0.5 * (lat.r1[col] + lat.s1[col]), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(0.5 * (lat.r2[col] + lat.s2[col]), 0.5, epsilon = 1e-12);
            assert_eq!(lat.u[col], 0.0);
            assert_eq!(lat.v[col], 0.0);
        }
    }

    #[test]
    fn trivial_residual_norms_are_tiny() {
        let (model, data) = trivial();
        let (_, lat, t_excl) = solve(&model, &data, 0.1, 32, 16);
        let res = consistency_residuals(&lat, &model, 0.0, t_excl);
        assert_eq!(res.h1_sup, 0.0);
        assert_eq!(res.h2_sup, 0.0);
        assert!(res.pde2_sup <= 1e-12, "{}", res.pde2_sup);
        // the first equation picks up only time-map rounding noise
        assert!(res.pde1_sup <= 1e-9, "{}", res.pde1_sup);
    }
}
