//! Initial-data scenarios on the degenerate line, validation of the
//! structural assumptions, and the derived boundary quantities.
//!
//! A scenario fixes the constant angle `phi1` (where the wave speed
//! vanishes), the data functions `phi2`, `psi1`, `psi2`, the chirality
//! constant `lambda`, and the truncated interval `y_range`. From these and a
//! material model the second-order data `f11, f21, f22` in physical time and
//! the first-order hodograph data `g11, g21, g22` are assembled in closed
//! form, with y-derivatives obtained by the chain rule from the supplied
//! data derivatives.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::material::MaterialModel;

/// A scalar data function of one variable with derivatives up to a fixed order.
///
/// The analytic variant differentiates a parsed expression exactly. The
/// tabulated variant interpolates samples with a quintic Hermite spline whose
/// node derivatives come from high-order finite differences; it is accepted
/// for data-file input but is lower accuracy than closed forms.
#[derive(Debug, Clone)]
pub enum DataFn {
    Analytic(Vec<Expr>),
    Tabulated(QuinticSpline),
}

impl DataFn {
    pub fn analytic(src: &str, max_order: usize) -> Result<DataFn> {
        Ok(DataFn::Analytic(Expr::parse(src, "x")?.derivatives(max_order)))
    }

    pub fn constant(v: f64, max_order: usize) -> DataFn {
        DataFn::Analytic(Expr::Const(v).derivatives(max_order))
    }

    pub fn tabulated(xs: &[f64], vs: &[f64]) -> Result<DataFn> {
        Ok(DataFn::Tabulated(QuinticSpline::new(xs, vs)?))
    }

    /// Value of the k-th derivative at x.
    pub fn eval(&self, k: usize, x: f64) -> f64 {
        match self {
            DataFn::Analytic(d) => d[k].eval(x),
            DataFn::Tabulated(s) => s.eval(k, x),
        }
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self, DataFn::Tabulated(_))
    }
}

/// Quintic Hermite spline on uniform nodes; supports derivatives 0..=4.
#[derive(Debug, Clone)]
pub struct QuinticSpline {
    x0: f64,
    h: f64,
    /// Power-basis coefficients per interval, in the local variable s in [0, 1].
    coeffs: Vec<[f64; 6]>,
}

impl QuinticSpline {
    pub fn new(xs: &[f64], vs: &[f64]) -> Result<QuinticSpline> {
        let n = xs.len();
        if n < 6 || vs.len() != n {
            return Err(Error::Validation(
                "tabulated data needs at least 6 samples with matching lengths".into(),
            ));
        }
        let h = xs[1] - xs[0];
        if h <= 0.0 {
            return Err(Error::Validation("tabulated abscissae must increase".into()));
        }
        for i in 1..n {
            if (xs[i] - xs[i - 1] - h).abs() > 1e-9 * h {
                return Err(Error::Validation(
                    "tabulated abscissae must be uniformly spaced".into(),
                ));
            }
        }

        // Node derivatives from 5-point finite differences (4th order for d1,
        // at least 2nd order for d2 near the edges).
        let d1: Vec<f64> = (0..n).map(|i| fd5(vs, i, n, h, 1)).collect();
        let d2: Vec<f64> = (0..n).map(|i| fd5(vs, i, n, h, 2)).collect();

        let mut coeffs = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let (v0, v1) = (vs[i], vs[i + 1]);
            let (m0, m1) = (d1[i] * h, d1[i + 1] * h);
            let (k0, k1) = (d2[i] * h * h, d2[i + 1] * h * h);
            // Quintic Hermite matching (value, d1, d2) at both interval ends.
            let c0 = v0;
            let c1 = m0;
            let c2 = 0.5 * k0;
            let c3 = -10.0 * v0 - 6.0 * m0 - 1.5 * k0 + 10.0 * v1 - 4.0 * m1 + 0.5 * k1;
            let c4 = 15.0 * v0 + 8.0 * m0 + 1.5 * k0 - 15.0 * v1 + 7.0 * m1 - k1;
            let c5 = -6.0 * v0 - 3.0 * m0 - 0.5 * k0 + 6.0 * v1 - 3.0 * m1 + 0.5 * k1;
            coeffs.push([c0, c1, c2, c3, c4, c5]);
        }
        Ok(QuinticSpline {
            x0: xs[0],
            h,
            coeffs,
        })
    }

    pub fn eval(&self, k: usize, x: f64) -> f64 {
        let n_int = self.coeffs.len();
        let s_glob = (x - self.x0) / self.h;
        let cell = (s_glob.floor() as isize).clamp(0, n_int as isize - 1) as usize;
        let s = s_glob - cell as f64;
        let c = &self.coeffs[cell];
        let mut acc = 0.0;
        for p in (k..6).rev() {
            let mut f = 1.0;
            for q in 0..k {
                f *= (p - q) as f64;
            }
            acc = acc * s + c[p] * f;
        }
        acc / self.h.powi(k as i32)
    }
}

/// 5-point finite difference of order `deriv` (1 or 2) at index i.
fn fd5(v: &[f64], i: usize, n: usize, h: f64, deriv: usize) -> f64 {
    let base = (i as isize - 2).clamp(0, n as isize - 5) as usize;
    let o = i as isize - base as isize; // offset of i within the 5-point stencil
    let w: [f64; 5] = match (deriv, o) {
        (1, 0) => [-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25],
        (1, 1) => [-0.25, -5.0 / 6.0, 1.5, -0.5, 1.0 / 12.0],
        (1, 2) => [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0],
        (1, 3) => [-1.0 / 12.0, 0.5, -1.5, 5.0 / 6.0, 0.25],
        (1, 4) => [0.25, -4.0 / 3.0, 3.0, -4.0, 25.0 / 12.0],
        (2, 0) => [35.0 / 12.0, -26.0 / 3.0, 9.5, -14.0 / 3.0, 11.0 / 12.0],
        (2, 1) => [11.0 / 12.0, -5.0 / 3.0, 0.5, 1.0 / 3.0, -1.0 / 12.0],
        (2, 2) => [-1.0 / 12.0, 4.0 / 3.0, -2.5, 4.0 / 3.0, -1.0 / 12.0],
        (2, 3) => [-1.0 / 12.0, 1.0 / 3.0, 0.5, -5.0 / 3.0, 11.0 / 12.0],
        (2, 4) => [11.0 / 12.0, -14.0 / 3.0, 9.5, -26.0 / 3.0, 35.0 / 12.0],
        _ => unreachable!(),
    };
    let mut acc = 0.0;
    for (j, wj) in w.iter().enumerate() {
        acc += wj * v[base + j];
    }
    acc / h.powi(deriv as i32)
}

/// Initial data on the degenerate line plus scenario constants.
#[derive(Debug, Clone)]
pub struct ScenarioData {
    pub name: String,
    /// Constant angle value at t = 0; the wave speed vanishes there.
    pub phi1: f64,
    pub lambda: f64,
    /// Positive lower bound for psi1 on `y_range`.
    pub psi0: f64,
    pub y_range: (f64, f64),
    /// phi2 with derivatives through order 4.
    pub phi2: DataFn,
    /// psi1 with derivatives through order 3.
    pub psi1: DataFn,
    /// psi2 with derivatives through order 3.
    pub psi2: DataFn,
}

impl ScenarioData {
    pub fn from_sources(
        name: &str,
        phi1: f64,
        lambda: f64,
        psi0: f64,
        y_range: (f64, f64),
        phi2_src: &str,
        psi1_src: &str,
        psi2_src: &str,
    ) -> Result<ScenarioData> {
        Ok(ScenarioData {
            name: name.to_string(),
            phi1,
            lambda,
            psi0,
            y_range,
            phi2: DataFn::analytic(phi2_src, 4)?,
            psi1: DataFn::analytic(psi1_src, 3)?,
            psi2: DataFn::analytic(psi2_src, 3)?,
        })
    }

    /// Whether all data functions are y-independent on `y_range` (sampled).
    pub fn is_y_independent(&self) -> bool {
        let (lo, hi) = self.y_range;
        let mut max_slope: f64 = 0.0;
        for i in 0..=64 {
            let y = lo + (hi - lo) * (i as f64) / 64.0;
            max_slope = max_slope
                .max(self.psi1.eval(1, y).abs())
                .max(self.psi2.eval(1, y).abs())
                .max(self.phi2.eval(2, y).abs());
        }
        max_slope <= 1e-13
    }
}

/// One line of a validation report.
#[derive(Debug, Clone)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Worst-case sampled value for the quantity being bounded.
    pub worst: f64,
    pub detail: String,
}

/// Assumption-by-assumption validation outcome.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Fail fast on the first violated bound.
    pub fn ensure(&self) -> Result<()> {
        match self.checks.iter().find(|c| !c.passed) {
            None => Ok(()),
            Some(c) => Err(Error::Validation(format!("{}: {}", c.name, c.detail))),
        }
    }
}

const VALIDATION_SAMPLES: usize = 1500;

/// Check the structural assumptions on the model and the scenario data.
///
/// Covers the degeneracy condition c(phi1) = 0, the lower bounds
/// |c'| >= m0, |a| >= m0 and psi1 >= psi0 > 0, finiteness of the required
/// derivatives, consistency of the supplied derivatives with finite
/// differences, and the fixed sign case c' <= -m0 with psi1 > 0.
pub fn validate_assumptions(model: &MaterialModel, data: &ScenarioData) -> ValidationReport {
    let mut checks = Vec::new();
    let (ulo, uhi) = model.u_domain;
    let (ylo, yhi) = data.y_range;
    let usample =
        |i: usize| ulo + (uhi - ulo) * (i as f64) / (VALIDATION_SAMPLES as f64);
    let ysample =
        |i: usize| ylo + (yhi - ylo) * (i as f64) / (VALIDATION_SAMPLES as f64);

    // degeneracy of the wave speed on the initial line
    let c_at_phi1 = model.c(data.phi1);
    checks.push(AssumptionCheck {
        name: "degeneracy condition",
        passed: c_at_phi1.abs() <= 1e-12,
        worst: c_at_phi1,
        detail: format!("c(phi1) = {c_at_phi1:.6e} must vanish (|.| <= 1e-12)"),
    });

    // slope and amplitude lower bounds, and the fixed sign case c' < 0
    let mut min_abs_dc = f64::INFINITY;
    let mut max_dc = f64::NEG_INFINITY;
    let mut min_abs_a = f64::INFINITY;
    for i in 0..=VALIDATION_SAMPLES {
        let u = usample(i);
        min_abs_dc = min_abs_dc.min(model.dc(u).abs());
        max_dc = max_dc.max(model.dc(u));
        min_abs_a = min_abs_a.min(model.a(u).abs());
    }
    checks.push(AssumptionCheck {
        name: "wave-speed slope bound",
        passed: min_abs_dc >= model.m0 * (1.0 - 1e-9),
        worst: min_abs_dc,
        detail: format!("min |c'| = {min_abs_dc:.6e} must be >= m0 = {:.6e}", model.m0),
    });
    checks.push(AssumptionCheck {
        name: "coupling amplitude bound",
        passed: min_abs_a >= model.m0 * (1.0 - 1e-9),
        worst: min_abs_a,
        detail: format!("min |a| = {min_abs_a:.6e} must be >= m0 = {:.6e}", model.m0),
    });
    checks.push(AssumptionCheck {
        name: "sign case",
        passed: max_dc < 0.0,
        worst: max_dc,
        detail: format!(
            "only the case c' <= -m0 with psi1 >= psi0 is handled; max c' = {max_dc:.6e}"
        ),
    });

    // finiteness of c^(l), a^(l), l = 1..3
    let mut worst_deriv = 0.0f64;
    let mut finite = true;
    for i in 0..=VALIDATION_SAMPLES {
        let u = usample(i);
        for k in 1..=3 {
            for v in [model.c_deriv(k, u), model.a_deriv(k, u)] {
                if !v.is_finite() {
                    finite = false;
                }
                worst_deriv = worst_deriv.max(v.abs());
            }
        }
    }
    checks.push(AssumptionCheck {
        name: "material derivative bounds",
        passed: finite,
        worst: worst_deriv,
        detail: format!("|c^(l)|, |a^(l)| finite for l = 1..3; max seen {worst_deriv:.6e}"),
    });

    // supplied derivatives vs central differences of the level below
    let h = 1e-5 * (uhi - ulo).max(1.0);
    let mut worst_rel = 0.0f64;
    for i in 1..VALIDATION_SAMPLES {
        let u = usample(i);
        if u - h < ulo || u + h > uhi {
            continue;
        }
        for k in 1..=3usize {
            for (lo_fn, hi_fn, sup) in [
                (model.c_deriv(k - 1, u - h), model.c_deriv(k - 1, u + h), model.c_deriv(k, u)),
                (model.a_deriv(k - 1, u - h), model.a_deriv(k - 1, u + h), model.a_deriv(k, u)),
            ] {
                let fd = (hi_fn - lo_fn) / (2.0 * h);
                let scale = sup.abs().max(1.0);
                worst_rel = worst_rel.max((fd - sup).abs() / scale);
            }
        }
    }
    checks.push(AssumptionCheck {
        name: "derivative consistency",
        passed: worst_rel <= 1e-6,
        worst: worst_rel,
        detail: format!(
            "supplied derivatives vs central differences: worst relative deviation {worst_rel:.3e} (<= 1e-6)"
        ),
    });

    // psi1 >= psi0 > 0 and finiteness of the data derivative family
    let mut min_psi1 = f64::INFINITY;
    let mut data_finite = true;
    let mut worst_data = 0.0f64;
    for i in 0..=VALIDATION_SAMPLES {
        let y = ysample(i);
        min_psi1 = min_psi1.min(data.psi1.eval(0, y));
        for k in 1..=4 {
            let v = data.phi2.eval(k, y);
            if !v.is_finite() {
                data_finite = false;
            }
            worst_data = worst_data.max(v.abs());
        }
        for k in 1..=3 {
            for v in [data.psi1.eval(k, y), data.psi2.eval(k, y)] {
                if !v.is_finite() {
                    data_finite = false;
                }
                worst_data = worst_data.max(v.abs());
            }
        }
    }
    checks.push(AssumptionCheck {
        name: "initial-slope lower bound",
        passed: data.psi0 > 0.0 && min_psi1 >= data.psi0 * (1.0 - 1e-12),
        worst: min_psi1,
        detail: format!(
            "min psi1 = {min_psi1:.6e} must be >= psi0 = {:.6e} > 0",
            data.psi0
        ),
    });
    checks.push(AssumptionCheck {
        name: "data derivative bounds",
        passed: data_finite,
        worst: worst_data,
        detail: format!(
            "phi2^(1..4), psi1^(1..3), psi2^(1..3) finite on y_range; max seen {worst_data:.6e}"
        ),
    });

    ValidationReport { checks }
}

/// All boundary-data values needed by the source terms at one point y.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryPoint {
    pub y: f64,
    pub psi1: f64,
    pub psi1_d: f64,
    pub psi2: f64,
    pub psi2_d: f64,
    pub phi2: f64,
    pub phi2_d: f64,
    pub g11: f64,
    pub g21: f64,
    pub g22: f64,
    pub g11_d: f64,
    pub g21_d: f64,
    pub g22_d: f64,
}

/// Derived boundary quantities: the second-order data `f_ij` in physical
/// time and the first-order hodograph data `g_ij = -f_ij / (c'(phi1) psi1)`.
#[derive(Debug, Clone)]
pub struct DerivedBoundary {
    pub scenario: ScenarioData,
    /// a(phi1), a'(phi1), c'(phi1)
    pub a_phi1: f64,
    pub da_phi1: f64,
    pub dc_phi1: f64,
}

/// Assemble the derived boundary quantities; assumes validation has passed.
pub fn derive_boundary(model: &MaterialModel, data: &ScenarioData) -> DerivedBoundary {
    DerivedBoundary {
        scenario: data.clone(),
        a_phi1: model.a(data.phi1),
        da_phi1: model.da(data.phi1),
        dc_phi1: model.dc(data.phi1),
    }
}

impl DerivedBoundary {
    pub fn f11(&self, y: f64) -> f64 {
        let s = &self.scenario;
        let psi2 = s.psi2.eval(0, y);
        let phi2_d = s.phi2.eval(1, y);
        self.a_phi1 * self.da_phi1 * psi2 * psi2
            + 2.0 * s.lambda * self.a_phi1 * self.da_phi1 * phi2_d
    }

    pub fn f21(&self, y: f64) -> f64 {
        let s = &self.scenario;
        let psi1 = s.psi1.eval(0, y);
        self.dc_phi1 * psi1 * s.phi2.eval(1, y)
            - 2.0 * self.da_phi1 / self.a_phi1 * psi1 * s.psi2.eval(0, y)
    }

    pub fn f22(&self, y: f64) -> f64 {
        let s = &self.scenario;
        let psi1 = s.psi1.eval(0, y);
        -self.dc_phi1 * psi1 * s.phi2.eval(1, y)
            - 2.0 * self.da_phi1 / self.a_phi1 * psi1 * s.psi2.eval(0, y)
    }

    pub fn g11(&self, y: f64) -> f64 {
        -self.f11(y) / (self.dc_phi1 * self.scenario.psi1.eval(0, y))
    }

    pub fn g21(&self, y: f64) -> f64 {
        -self.f21(y) / (self.dc_phi1 * self.scenario.psi1.eval(0, y))
    }

    pub fn g22(&self, y: f64) -> f64 {
        -self.f22(y) / (self.dc_phi1 * self.scenario.psi1.eval(0, y))
    }

    /// d/dy of g11 via the chain rule on the closed form
    /// g11 = -(a a'/c')(phi1) (psi2^2 + 2 lambda phi2') / psi1.
    pub fn g11_d(&self, y: f64) -> f64 {
        let s = &self.scenario;
        let psi1 = s.psi1.eval(0, y);
        let psi1_d = s.psi1.eval(1, y);
        let psi2 = s.psi2.eval(0, y);
        let psi2_d = s.psi2.eval(1, y);
        let phi2_dd = s.phi2.eval(2, y);
        let coef = -self.a_phi1 * self.da_phi1 / self.dc_phi1;
        let w = psi2 * psi2 + 2.0 * s.lambda * s.phi2.eval(1, y);
        let w_d = 2.0 * psi2 * psi2_d + 2.0 * s.lambda * phi2_dd;
        coef * (w_d * psi1 - w * psi1_d) / (psi1 * psi1)
    }

    /// d/dy of g21 = -phi2' + (2 a'/(a c'))(phi1) psi2.
    pub fn g21_d(&self, y: f64) -> f64 {
        let s = &self.scenario;
        -s.phi2.eval(2, y)
            + 2.0 * self.da_phi1 / (self.a_phi1 * self.dc_phi1) * s.psi2.eval(1, y)
    }

    /// d/dy of g22 = +phi2' + (2 a'/(a c'))(phi1) psi2.
    pub fn g22_d(&self, y: f64) -> f64 {
        let s = &self.scenario;
        s.phi2.eval(2, y)
            + 2.0 * self.da_phi1 / (self.a_phi1 * self.dc_phi1) * s.psi2.eval(1, y)
    }

    /// g(tau, y) = psi1(y) + g11(y) tau, the shifted slope entering all
    /// characteristic denominators.
    pub fn g(&self, tau: f64, y: f64) -> f64 {
        self.scenario.psi1.eval(0, y) + self.g11(y) * tau
    }

    /// Everything the source terms need at one y.
    pub fn point(&self, y: f64) -> BoundaryPoint {
        let s = &self.scenario;
        BoundaryPoint {
            y,
            psi1: s.psi1.eval(0, y),
            psi1_d: s.psi1.eval(1, y),
            psi2: s.psi2.eval(0, y),
            psi2_d: s.psi2.eval(1, y),
            phi2: s.phi2.eval(0, y),
            phi2_d: s.phi2.eval(1, y),
            g11: self.g11(y),
            g21: self.g21(y),
            g22: self.g22(y),
            g11_d: self.g11_d(y),
            g21_d: self.g21_d(y),
            g22_d: self.g22_d(y),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn constant_data_scenario() -> (MaterialModel, ScenarioData) {
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
    fn constant_data_scenario_validates() {
        let (model, data) = constant_data_scenario();
        let report = validate_assumptions(&model, &data);
        assert!(report.passed(), "{:#?}", report.checks);
        assert_relative_eq!(model.m0, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn nondegenerate_speed_fails_validation() {
        // c(0) = 1 at phi1 = 0 breaks the degeneracy condition
        let model = MaterialModel::from_sources("bad", "1 - u", "2 + sin(u)", Some(1.0), (-1.0, 1.0))
            .unwrap();
        let data = ScenarioData::from_sources("s", 0.0, 0.0, 1.0, (-1.0, 1.0), "0", "1", "0").unwrap();
        let report = validate_assumptions(&model, &data);
        assert!(!report.passed());
        let err = report.ensure().unwrap_err();
        assert!(err.to_string().contains("degeneracy condition"), "{err}");
    }

    #[test]
    fn trig_preset_passes_with_half_m0() {
        let model = MaterialModel::saxton_trig(1.0, 2.0, (-10.0, 10.0)).unwrap();
        let data = ScenarioData::from_sources("s", 0.0, 0.0, 1.0, (-1.0, 1.0), "0", "1", "0").unwrap();
        let report = validate_assumptions(&model, &data);
        assert!(report.passed(), "{:#?}", report.checks);
        assert_relative_eq!(model.m0, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn derived_boundary_matches_closed_forms() {
        let (model, data) = constant_data_scenario();
        let b = derive_boundary(&model, &data);
        // a(0) a'(0) psi2^2 = 2 * 1 * 0.25
        assert_relative_eq!(b.f11(0.3), 0.5, epsilon = 1e-15);
        assert_relative_eq!(b.g11(0.3), 0.5, epsilon = 1e-15);
        // -2 (a'/a) psi1 psi2 = -2 * (1/2) * 1 * (1/2)
        assert_relative_eq!(b.f21(0.0), -0.5, epsilon = 1e-15);
        assert_relative_eq!(b.f22(0.0), -0.5, epsilon = 1e-15);
        assert_relative_eq!(b.g21(0.0), -0.5, epsilon = 1e-15);
        assert_relative_eq!(b.g22(0.0), -0.5, epsilon = 1e-15);
        // g(0, y) = psi1(y)
        assert_eq!(b.g(0.0, 0.2), 1.0);
    }

    #[test]
    fn trivial_data_produces_zero_boundary() {
        let model = MaterialModel::linear(2.0, (-1.0, 1.0)).unwrap();
        let data =
            ScenarioData::from_sources("trivial", 0.0, 0.0, 1.0, (-1.0, 1.0), "0.3", "1", "0")
                .unwrap();
        let b = derive_boundary(&model, &data);
        for y in [-0.7, 0.0, 0.4] {
            assert_eq!(b.f11(y), 0.0);
            assert_eq!(b.f21(y), 0.0);
            assert_eq!(b.f22(y), 0.0);
            assert_eq!(b.g11(y), 0.0);
            assert_eq!(b.g21(y), 0.0);
            assert_eq!(b.g22(y), 0.0);
        }
    }

    #[test]
    fn definitional_identity_g_times_denominator_plus_f() {
        let model = MaterialModel::saxton_trig(1.0, 2.0, (-10.0, 10.0)).unwrap();
        let data = ScenarioData::from_sources(
            "wavy",
            0.0,
            0.02,
            0.8,
            (-2.0, 2.0),
            "0.2*sin(x)",
            "1 + 0.1*sin(x)",
            "0.5 + 0.1*cos(x)",
        )
        .unwrap();
        let b = derive_boundary(&model, &data);
        for i in 0..=200 {
            let y = -2.0 + 4.0 * (i as f64) / 200.0;
            let den = b.dc_phi1 * data.psi1.eval(0, y);
            assert_abs_diff_eq!(b.g11(y) * den + b.f11(y), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(b.g21(y) * den + b.f21(y), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(b.g22(y) * den + b.f22(y), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn g11_ignores_lambda_when_phi2_is_flat() {
        let model = MaterialModel::linear(2.0, (-1.0, 1.0)).unwrap();
        let mk = |lambda: f64| {
            let data = ScenarioData::from_sources(
                "s", 0.0, lambda, 1.0, (-1.0, 1.0), "0.3", "1", "0.5",
            )
            .unwrap();
            derive_boundary(&model, &data).g11(0.1)
        };
        assert_eq!(mk(0.0), mk(0.25));
    }

    #[test]
    fn boundary_derivatives_match_finite_differences() {
        let model = MaterialModel::saxton_trig(1.0, 2.0, (-10.0, 10.0)).unwrap();
        let data = ScenarioData::from_sources(
            "wavy",
            0.0,
            0.05,
            0.8,
            (-2.0, 2.0),
            "0.2*sin(x)",
            "1 + 0.1*sin(x)",
            "0.5 + 0.1*cos(x)",
        )
        .unwrap();
        let b = derive_boundary(&model, &data);
        let h = 1e-6;
        for y in [-1.3, 0.0, 0.9] {
            let fd = |f: &dyn Fn(f64) -> f64| (f(y + h) - f(y - h)) / (2.0 * h);
            assert_abs_diff_eq!(b.g11_d(y), fd(&|y| b.g11(y)), epsilon = 1e-7);
            assert_abs_diff_eq!(b.g21_d(y), fd(&|y| b.g21(y)), epsilon = 1e-7);
            assert_abs_diff_eq!(b.g22_d(y), fd(&|y| b.g22(y)), epsilon = 1e-7);
        }
    }

    #[test]
    fn tabulated_data_tracks_analytic_values() {
        let n = 201;
        let xs: Vec<f64> = (0..n).map(|i| -2.0 + 4.0 * (i as f64) / ((n - 1) as f64)).collect();
        let vs: Vec<f64> = xs.iter().map(|x| 1.0 + 0.1 * x.sin()).collect();
        let tab = DataFn::tabulated(&xs, &vs).unwrap();
        for &x in &[-1.7, -0.2, 0.0, 1.31] {
            assert_abs_diff_eq!(tab.eval(0, x), 1.0 + 0.1 * x.sin(), epsilon = 1e-9);
            assert_abs_diff_eq!(tab.eval(1, x), 0.1 * x.cos(), epsilon = 1e-6);
            assert_abs_diff_eq!(tab.eval(2, x), -0.1 * x.sin(), epsilon = 1e-4);
            assert_abs_diff_eq!(tab.eval(3, x), -0.1 * x.cos(), epsilon = 1e-2);
        }
    }
}
