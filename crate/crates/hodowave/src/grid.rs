//! Discretization of the hodograph strip [0, delta] x y_range and the
//! four-component field container with its tau^2-weighted metric.
//!
//! The y-axis carries a buffer beyond the user range sized from the
//! characteristic-speed bound, so every backward characteristic from a
//! reported node stays inside the sampled domain. Buffer nodes are computed
//! but never reported; the metric, the class monitors, and all output
//! restrict to the user range.

use crate::error::{Error, Result};

/// Grid over the hodograph strip.
#[derive(Debug, Clone)]
pub struct HodographGrid {
    pub delta: f64,
    /// Number of tau intervals; levels are tau_k = k delta / n_tau, k = 0..=n_tau.
    pub n_tau: usize,
    pub taus: Vec<f64>,
    pub h_y: f64,
    /// All y nodes including the buffer, uniformly spaced.
    pub y_nodes: Vec<f64>,
    /// Inclusive index range of the user (reported) nodes.
    pub user_lo: usize,
    pub user_hi: usize,
    /// Width of the one-sided buffer actually allocated.
    pub buffer: f64,
}

impl HodographGrid {
    /// Build a grid; `speed_bound` is an upper estimate of max |Lambda|,
    /// used to size the domain-of-dependence buffer at twice the drift.
    pub fn new(
        delta: f64,
        n_tau: usize,
        y_range: (f64, f64),
        n_y: usize,
        speed_bound: f64,
    ) -> Result<HodographGrid> {
        if n_tau < 8 || n_y < 8 {
            return Err(Error::Config {
                field: "n_tau/n_y".into(),
                message: "grid must have at least 8 intervals per axis".into(),
            });
        }
        if !(delta > 0.0) || !(y_range.0 < y_range.1) {
            return Err(Error::Config {
                field: "delta/y_range".into(),
                message: "delta must be positive and y_range nonempty".into(),
            });
        }
        let h_tau = delta / n_tau as f64;
        let taus: Vec<f64> = (0..=n_tau).map(|k| k as f64 * h_tau).collect();
        let h_y = (y_range.1 - y_range.0) / n_y as f64;
        // buffer: twice the worst-case characteristic drift, at least two
        // cells for the cubic interpolation stencil, capped to keep pathological
        // windows allocatable (runtime breach checks stay authoritative)
        let want = 2.0 * delta * speed_bound;
        let n_buf = ((want / h_y).ceil() as usize + 2).min(4 * n_y.max(8));
        let y_nodes: Vec<f64> = (0..=(n_y + 2 * n_buf))
            .map(|j| y_range.0 + (j as f64 - n_buf as f64) * h_y)
            .collect();
        Ok(HodographGrid {
            delta,
            n_tau,
            taus,
            h_y,
            y_nodes,
            user_lo: n_buf,
            user_hi: n_buf + n_y,
            buffer: n_buf as f64 * h_y,
        })
    }

    pub fn n_levels(&self) -> usize {
        self.n_tau + 1
    }

    pub fn n_cols(&self) -> usize {
        self.y_nodes.len()
    }

    pub fn user_cols(&self) -> std::ops::RangeInclusive<usize> {
        self.user_lo..=self.user_hi
    }

    pub fn h_tau(&self) -> f64 {
        self.delta / self.n_tau as f64
    }

    /// Whether y lies inside the buffered domain.
    pub fn contains(&self, y: f64) -> bool {
        y >= self.y_nodes[0] && y <= *self.y_nodes.last().unwrap()
    }

    pub fn same_layout(&self, other: &HodographGrid) -> bool {
        self.n_tau == other.n_tau
            && self.n_cols() == other.n_cols()
            && (self.delta - other.delta).abs() <= f64::EPSILON * self.delta.abs()
            && (self.h_y - other.h_y).abs() <= f64::EPSILON * self.h_y.abs()
    }
}

/// The four homogenized unknowns sampled on a grid.
#[derive(Debug, Clone)]
pub struct FieldQuartet {
    pub n_levels: usize,
    pub n_cols: usize,
    comps: [Vec<f64>; 4],
}

impl FieldQuartet {
    pub fn zeros(grid: &HodographGrid) -> FieldQuartet {
        let n = grid.n_levels() * grid.n_cols();
        FieldQuartet {
            n_levels: grid.n_levels(),
            n_cols: grid.n_cols(),
            comps: std::array::from_fn(|_| vec![0.0; n]),
        }
    }

    #[inline]
    pub fn get(&self, comp: usize, level: usize, col: usize) -> f64 {
        self.comps[comp][level * self.n_cols + col]
    }

    #[inline]
    pub fn set(&mut self, comp: usize, level: usize, col: usize, v: f64) {
        self.comps[comp][level * self.n_cols + col] = v;
    }

    pub fn at(&self, level: usize, col: usize) -> [f64; 4] {
        std::array::from_fn(|c| self.get(c, level, col))
    }

    pub fn set_at(&mut self, level: usize, col: usize, v: [f64; 4]) {
        for (c, vc) in v.into_iter().enumerate() {
            self.set(c, level, col, vc);
        }
    }

    /// Cubic interpolation of one component along y at a fixed level.
    ///
    /// Uniform 4-point Lagrange stencil; queries are clamped to the buffered
    /// domain edge, which only matters for buffer-node characteristics.
    pub fn interp_y(&self, comp: usize, level: usize, y: f64, grid: &HodographGrid) -> f64 {
        let n = self.n_cols;
        let y0 = grid.y_nodes[0];
        let s = ((y - y0) / grid.h_y).clamp(0.0, (n - 1) as f64);
        let cell = (s.floor() as usize).min(n - 2);
        let i0 = cell.saturating_sub(1).min(n - 4);
        let t = s - i0 as f64;
        let row = &self.comps[comp][level * n + i0..level * n + i0 + 4];
        let w0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
        let w2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
        let w3 = t * (t - 1.0) * (t - 2.0) / 6.0;
        // difference form: exact on constant rows
        row[1] + w0 * (row[0] - row[1]) + w2 * (row[2] - row[1]) + w3 * (row[3] - row[1])
    }

    pub fn interp_all(&self, level: usize, y: f64, grid: &HodographGrid) -> [f64; 4] {
        std::array::from_fn(|c| self.interp_y(c, level, y, grid))
    }

    /// Weighted distance sum_j sup |u_j - v_j| / tau^2 over user nodes with
    /// tau > 0, together with the location where the worst component ratio
    /// is attained.
    pub fn weighted_distance(
        &self,
        other: &FieldQuartet,
        grid: &HodographGrid,
    ) -> Result<(f64, (f64, f64))> {
        if self.n_levels != other.n_levels || self.n_cols != other.n_cols {
            return Err(Error::GridMismatch(
                "weighted distance needs fields on the same grid".into(),
            ));
        }
        let mut total = 0.0;
        let mut arg = (0.0, 0.0);
        let mut arg_best = 0.0f64;
        for c in 0..4 {
            let mut sup = 0.0f64;
            for k in 1..self.n_levels {
                let w = 1.0 / (grid.taus[k] * grid.taus[k]);
                for j in grid.user_cols() {
                    let r = (self.get(c, k, j) - other.get(c, k, j)).abs() * w;
                    if r > sup {
                        sup = r;
                        if r > arg_best {
                            arg_best = r;
                            arg = (grid.taus[k], grid.y_nodes[j]);
                        }
                    }
                }
            }
            total += sup;
        }
        Ok((total, arg))
    }

    /// Class monitor: sum of per-component sups of |U_c|/tau^2 over user nodes.
    pub fn weighted_norm(&self, grid: &HodographGrid) -> f64 {
        let zero = FieldQuartet::zeros_like(self);
        self.weighted_distance(&zero, grid).map(|(d, _)| d).unwrap_or(f64::NAN)
    }

    fn zeros_like(like: &FieldQuartet) -> FieldQuartet {
        FieldQuartet {
            n_levels: like.n_levels,
            n_cols: like.n_cols,
            comps: std::array::from_fn(|_| vec![0.0; like.n_levels * like.n_cols]),
        }
    }

    /// Class monitor on the y-slope: sum of per-component sups of
    /// |d U_c / dy| / tau^2 by second-order finite differences.
    pub fn weighted_slope_norm(&self, grid: &HodographGrid) -> f64 {
        let h = grid.h_y;
        let n = self.n_cols;
        let mut total = 0.0;
        for c in 0..4 {
            let mut sup = 0.0f64;
            for k in 1..self.n_levels {
                let w = 1.0 / (grid.taus[k] * grid.taus[k]);
                for j in grid.user_cols() {
                    let d = if j == 0 {
                        let f0 = self.get(c, k, 0);
                        (4.0 * (self.get(c, k, 1) - f0) - (self.get(c, k, 2) - f0))
                            / (2.0 * h)
                    } else if j == n - 1 {
                        let f0 = self.get(c, k, n - 1);
                        (-4.0 * (self.get(c, k, n - 2) - f0)
                            + (self.get(c, k, n - 3) - f0))
                            / (2.0 * h)
                    } else {
                        (self.get(c, k, j + 1) - self.get(c, k, j - 1)) / (2.0 * h)
                    };
                    sup = sup.max(d.abs() * w);
                }
            }
            total += sup;
        }
        total
    }

    /// Max over user nodes of |U_c| for any component (plain sup norm).
    pub fn sup_norm_user(&self, grid: &HodographGrid) -> f64 {
        let mut sup = 0.0f64;
        for c in 0..4 {
            for k in 0..self.n_levels {
                for j in grid.user_cols() {
                    sup = sup.max(self.get(c, k, j).abs());
                }
            }
        }
        sup
    }

    /// True if the tau = 0 level is exactly zero everywhere.
    pub fn initial_level_is_zero(&self) -> bool {
        (0..4).all(|c| (0..self.n_cols).all(|j| self.get(c, 0, j) == 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> HodographGrid {
        HodographGrid::new(0.1, 16, (-1.0, 1.0), 16, 0.2).unwrap()
    }

    #[test]
    fn metric_axioms_and_examples() {
        let g = grid();
        let f0 = FieldQuartet::zeros(&g);
        let mut f1 = FieldQuartet::zeros(&g);
        // identical fields are at distance zero
        assert_eq!(f0.weighted_distance(&f0, &g).unwrap().0, 0.0);

        // u1 = tau^2 everywhere: distance to zero is exactly 1
        for k in 0..g.n_levels() {
            for j in 0..g.n_cols() {
                f1.set(0, k, j, g.taus[k] * g.taus[k]);
            }
        }
        assert_relative_eq!(f1.weighted_distance(&f0, &g).unwrap().0, 1.0, epsilon = 1e-14);

        // u1 = tau^2, u2 = 2 tau^2: component sups add up to 3
        let mut f2 = f1.clone();
        for k in 0..g.n_levels() {
            for j in 0..g.n_cols() {
                f2.set(1, k, j, 2.0 * g.taus[k] * g.taus[k]);
            }
        }
        assert_relative_eq!(f2.weighted_distance(&f0, &g).unwrap().0, 3.0, epsilon = 1e-14);
    }

    #[test]
    fn grid_levels_start_at_zero_and_increase() {
        let g = grid();
        assert_eq!(g.taus[0], 0.0);
        assert!(g.taus.windows(2).all(|w| w[1] > w[0]));
        assert!(g.user_lo >= 2);
        assert_eq!(g.user_hi - g.user_lo, 16);
        assert_relative_eq!(g.y_nodes[g.user_lo], -1.0, epsilon = 1e-14);
        assert_relative_eq!(g.y_nodes[g.user_hi], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn cubic_interpolation_is_exact_on_cubics() {
        let g = grid();
        let mut f = FieldQuartet::zeros(&g);
        let poly = |y: f64| 0.3 + 1.7 * y - 0.4 * y * y + 0.9 * y * y * y;
        for j in 0..g.n_cols() {
            f.set(2, 3, j, poly(g.y_nodes[j]));
        }
        for &y in &[-0.97, -0.31, 0.0, 0.113, 0.88] {
            assert_relative_eq!(f.interp_y(2, 3, y, &g), poly(y), epsilon = 1e-12);
        }
    }

    #[test]
    fn interpolation_order_is_at_least_cubic() {
        // refine and watch the max error drop by ~16x per halving
        let f = |y: f64| (2.0 * y).sin();
        let mut errs = Vec::new();
        for n_y in [16usize, 32, 64] {
            let g = HodographGrid::new(0.1, 8, (-1.0, 1.0), n_y, 0.1).unwrap();
            let mut fq = FieldQuartet::zeros(&g);
            for j in 0..g.n_cols() {
                fq.set(0, 1, j, f(g.y_nodes[j]));
            }
            let mut err = 0.0f64;
            for i in 0..=400 {
                let y = -1.0 + 2.0 * (i as f64) / 400.0;
                err = err.max((fq.interp_y(0, 1, y, &g) - f(y)).abs());
            }
            errs.push(err);
        }
        let order1 = (errs[0] / errs[1]).log2();
        let order2 = (errs[1] / errs[2]).log2();
        assert!(order1 > 3.5 && order2 > 3.5, "orders {order1}, {order2}");
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let g1 = grid();
        let g2 = HodographGrid::new(0.1, 8, (-1.0, 1.0), 16, 0.2).unwrap();
        let f1 = FieldQuartet::zeros(&g1);
        let f2 = FieldQuartet::zeros(&g2);
        assert!(f1.weighted_distance(&f2, &g1).is_err());
    }
}
