//! Coefficients of the homogenized system in hodograph variables: the
//! characteristic speeds, the linear coefficient matrix `T_ij`, the forcing
//! family `F_i`, and the fully assembled right-hand sides.
//!
//! Conventions used throughout:
//! - `u(tau)` is the material angle with `c(u) = -tau`; it depends on tau
//!   only, so all material values are cached once per tau-level.
//! - `g = psi1(y) + g11(y) tau`; the composite denominators are the products
//!   `den_i = c'(u) * (U_i + g)` for i = 1, 2, which must stay above
//!   `m0 psi0 / 2` in magnitude (and `|a| den_i` above `m0^2 psi0 / 2`).
//!   A violation means the iterate left the admissible class and is a hard
//!   error, never a silent clamp.
//! - Four divided-difference families appear in the forcing terms:
//!   (c'(u) - c'(phi1))/tau, ((a^2)'(phi1) - (a^2)'(u))/tau,
//!   (a'(u) - a'(phi1))/tau, and (a(u)c'(u) - a(phi1)c'(phi1))/tau.
//!   Below `eps_dd` they switch from the direct quotient to a Taylor rule
//!   expanded at phi1, which keeps full precision down to tau = 0.

use crate::error::{Error, Result};
use crate::material::MaterialModel;
use crate::scenario::{BoundaryPoint, ScenarioData};

/// Default crossover point between direct quotients and the Taylor rule.
///
/// Chosen so that both branches agree to well below 1e-8 across the
/// crossover window [eps/2, 2 eps]: the quotient's rounding error scales like
/// eps_machine/tau and the Taylor rule's truncation like tau^2.
pub const EPS_DD_DEFAULT: f64 = 1e-5;

/// Material quantities frozen at the degenerate angle phi1.
#[derive(Debug, Clone, Copy)]
pub struct Phi1Values {
    pub a: f64,
    pub da: f64,
    pub d2a: f64,
    pub d3a: f64,
    pub dc: f64,
    pub d2c: f64,
    pub d3c: f64,
    /// du/dtau at tau = 0: -1/c'(phi1).
    pub u_tau0: f64,
    /// d2u/dtau2 at tau = 0: -c''(phi1)/c'(phi1)^3.
    pub u_tautau0: f64,
}

impl Phi1Values {
    pub fn new(model: &MaterialModel, phi1: f64) -> Phi1Values {
        let dc = model.dc(phi1);
        let d2c = model.d2c(phi1);
        Phi1Values {
            a: model.a(phi1),
            da: model.da(phi1),
            d2a: model.d2a(phi1),
            d3a: model.d3a(phi1),
            dc,
            d2c,
            d3c: model.d3c(phi1),
            u_tau0: -1.0 / dc,
            u_tautau0: -d2c / (dc * dc * dc),
        }
    }
}

/// Per-tau-level cache: the inverted angle, material values there, and the
/// divided-difference family values.
#[derive(Debug, Clone, Copy)]
pub struct TauLevel {
    pub tau: f64,
    pub u: f64,
    pub c: f64,
    pub dc: f64,
    pub d2c: f64,
    pub a: f64,
    pub da: f64,
    pub d2a: f64,
    /// (c'(u) - c'(phi1)) / tau
    pub q_dc: f64,
    /// ((a^2)'(phi1) - (a^2)'(u)) / tau
    pub q_a2p: f64,
    /// (a'(u) - a'(phi1)) / tau
    pub q_da: f64,
    /// (a(u) c'(u) - a(phi1) c'(phi1)) / tau
    pub q_adc: f64,
}

/// Divided difference (h(u(tau)) - h(phi1))/tau for a family h given by its
/// derivatives h', h'' at phi1, in the Taylor-rule branch.
fn taylor_quotient(dh: f64, d2h: f64, p: &Phi1Values, tau: f64) -> f64 {
    dh * p.u_tau0 + 0.5 * (d2h * p.u_tau0 * p.u_tau0 + dh * p.u_tautau0) * tau
}

impl TauLevel {
    pub fn build(
        model: &MaterialModel,
        p: &Phi1Values,
        phi1: f64,
        tau: f64,
        eps_dd: f64,
    ) -> Result<TauLevel> {
        let u = model.invert_wave_speed(phi1, tau)?;
        let (c, dc, d2c) = (model.c(u), model.dc(u), model.d2c(u));
        let (a, da, d2a) = (model.a(u), model.da(u), model.d2a(u));

        let (q_dc, q_a2p, q_da, q_adc) = if tau < eps_dd {
            // h = c'
            let q_dc = taylor_quotient(p.d2c, p.d3c, p, tau);
            // h = (a^2)' = 2 a a'  (sign: family stores phi1-value minus u-value)
            let dh = 2.0 * (p.da * p.da + p.a * p.d2a);
            let d2h = 2.0 * (3.0 * p.da * p.d2a + p.a * p.d3a);
            let q_a2p = -taylor_quotient(dh, d2h, p, tau);
            // h = a'
            let q_da = taylor_quotient(p.d2a, p.d3a, p, tau);
            // h = a c'
            let dh = p.da * p.dc + p.a * p.d2c;
            let d2h = p.d2a * p.dc + 2.0 * p.da * p.d2c + p.a * p.d3c;
            let q_adc = taylor_quotient(dh, d2h, p, tau);
            (q_dc, q_a2p, q_da, q_adc)
        } else {
            (
                (dc - p.dc) / tau,
                (2.0 * p.a * p.da - 2.0 * a * da) / tau,
                (da - p.da) / tau,
                (a * dc - p.a * p.dc) / tau,
            )
        };

        Ok(TauLevel {
            tau,
            u,
            c,
            dc,
            d2c,
            a,
            da,
            d2a,
            q_dc,
            q_a2p,
            q_da,
            q_adc,
        })
    }
}

/// Scenario-wide constants for source evaluation.
#[derive(Debug, Clone)]
pub struct SourceTables {
    pub phi1_vals: Phi1Values,
    pub phi1: f64,
    pub lambda: f64,
    pub m0: f64,
    pub psi0: f64,
    pub eps_dd: f64,
}

impl SourceTables {
    pub fn new(model: &MaterialModel, scen: &ScenarioData, eps_dd: f64) -> SourceTables {
        SourceTables {
            phi1_vals: Phi1Values::new(model, scen.phi1),
            phi1: scen.phi1,
            lambda: scen.lambda,
            m0: model.m0,
            psi0: scen.psi0,
            eps_dd,
        }
    }

    pub fn level(&self, model: &MaterialModel, tau: f64) -> Result<TauLevel> {
        TauLevel::build(model, &self.phi1_vals, self.phi1, tau, self.eps_dd)
    }

    /// Denominator floor m0 psi0 / 2.
    pub fn margin_floor(&self) -> f64 {
        0.5 * self.m0 * self.psi0
    }
}

/// Everything needed to evaluate the source terms at one point: the tau-level
/// cache, the boundary data at y, and the four field values there.
#[derive(Debug, Clone, Copy)]
pub struct SourceContext<'a> {
    pub tables: &'a SourceTables,
    pub level: &'a TauLevel,
    pub bnd: &'a BoundaryPoint,
    pub u: [f64; 4],
}

/// Characteristic speeds and assembled right-hand sides at one point.
#[derive(Debug, Clone, Copy)]
pub struct SourceValues {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub rhs: [f64; 4],
}

/// Shared intermediates, guarded at construction.
struct Guarded {
    tau: f64,
    lambda: f64,
    /// U_1 + g, U_2 + g
    s1: f64,
    s2: f64,
    /// c'(u) (U_1 + g), c'(u) (U_2 + g)
    den1: f64,
    den2: f64,
}

impl<'a> SourceContext<'a> {
    fn guarded(&self) -> Result<Guarded> {
        let lvl = self.level;
        let b = self.bnd;
        let g = b.psi1 + b.g11 * lvl.tau;
        let s1 = self.u[0] + g;
        let s2 = self.u[1] + g;
        let den1 = lvl.dc * s1;
        let den2 = lvl.dc * s2;
        let floor = self.tables.margin_floor();
        let floor_a = self.tables.m0 * floor;
        for (what, v, f) in [
            ("|c'(U1+g)|", den1.abs(), floor),
            ("|c'(U2+g)|", den2.abs(), floor),
            ("|a c'(U1+g)|", (lvl.a * den1).abs(), floor_a),
            ("|a c'(U2+g)|", (lvl.a * den2).abs(), floor_a),
        ] {
            if !(v >= f) {
                return Err(Error::ClassBreach {
                    what,
                    tau: lvl.tau,
                    y: b.y,
                    value: v,
                    floor: f,
                });
            }
        }
        Ok(Guarded {
            tau: lvl.tau,
            lambda: self.tables.lambda,
            s1,
            s2,
            den1,
            den2,
        })
    }

    /// Smallest denominator magnitude at this point (for margin monitoring).
    pub fn margin(&self) -> f64 {
        let lvl = self.level;
        let b = self.bnd;
        let g = b.psi1 + b.g11 * lvl.tau;
        (lvl.dc * (self.u[0] + g))
            .abs()
            .min((lvl.dc * (self.u[1] + g)).abs())
    }
}

/// Characteristic speeds (Lambda_+, Lambda_-); both vanish at tau = 0.
pub fn eval_lambda(ctx: &SourceContext) -> Result<(f64, f64)> {
    let gd = ctx.guarded()?;
    Ok((-gd.tau / gd.den2, gd.tau / gd.den1))
}

/// The sixteen linear coefficients `T_ij`; rows follow the four equations.
///
/// Transcribed term for term; `T_11` and `T_22` vanish structurally, and the
/// psi1 factors are kept unsimplified as written.
pub fn eval_coefficient_matrix(ctx: &SourceContext) -> Result<[[f64; 4]; 4]> {
    let gd = ctx.guarded()?;
    let lvl = ctx.level;
    let b = ctx.bnd;
    let p = &ctx.tables.phi1_vals;
    let (a, da, dc) = (lvl.a, lvl.da, lvl.dc);
    let (u1, u2, u3) = (ctx.u[0], ctx.u[1], ctx.u[2]);
    let aa = a * da;
    let w_num = aa * b.psi2 * b.psi2 + 2.0 * gd.lambda * aa * b.phi2_d;

    let t12 = w_num / (p.dc * b.psi1 * gd.s2);
    let t13 = (dc * a * a * b.phi2_d - aa * b.psi2) / gd.den2;
    let t14 = -(dc * a * a * b.phi2_d + aa * b.psi2 + aa * u3) / gd.den2;
    let t21 = w_num / (p.dc * b.psi1 * gd.s1);
    let t23 = (a * a * dc * b.phi2_d - aa * b.psi2) / gd.den1;
    let t24 = -(dc * a * a * b.phi2_d + aa * b.psi2 + aa * u3) / gd.den1;

    let t31 = (da * b.psi2 - a * dc * b.phi2_d) / (a * gd.den2);
    let t32 = (da * b.psi2 + a * dc * b.phi2_d) / (a * gd.den2)
        - 2.0 * da * b.psi1 * b.psi2 / (p.a * p.dc * b.psi1 * gd.s2);
    let t33 = da * (u2 + b.psi1) / (a * gd.den2);
    let t34 = da * (u1 + b.psi1) / (a * gd.den2);
    let t41 = (da * b.psi2 - a * dc * b.phi2_d) / (a * gd.den1)
        - 2.0 * da * b.psi1 * b.psi2 / (p.a * p.dc * b.psi1 * gd.s1);
    let t42 = (da * b.psi2 + a * dc * b.phi2_d) / (a * gd.den1);
    let t43 = da * (u2 + b.psi1) / (a * gd.den1);
    let t44 = da * (u1 + b.psi1) / (a * gd.den1);

    let t = [
        [0.0, t12, t13, t14],
        [t21, 0.0, t23, t24],
        [t31, t32, t33, t34],
        [t41, t42, t43, t44],
    ];
    for (i, row) in t.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::SourceAssembly {
                    term: COEFF_NAMES[i * 4 + j],
                    tau: lvl.tau,
                    y: b.y,
                });
            }
        }
    }
    Ok(t)
}

static COEFF_NAMES: [&str; 16] = [
    "T11", "T12", "T13", "T14", "T21", "T22", "T23", "T24", "T31", "T32", "T33", "T34", "T41",
    "T42", "T43", "T44",
];

/// The four forcing coefficients `F_i` (they multiply tau in the sources and
/// carry the divided-difference families).
pub fn eval_forcing(ctx: &SourceContext) -> Result<[f64; 4]> {
    let gd = ctx.guarded()?;
    let lvl = ctx.level;
    let b = ctx.bnd;
    let p = &ctx.tables.phi1_vals;
    let tau = gd.tau;
    let (a, da, dc) = (lvl.a, lvl.da, lvl.dc);
    let (u1, u2, u3, u4) = (ctx.u[0], ctx.u[1], ctx.u[2], ctx.u[3]);
    let aa = a * da;
    let w_num = aa * b.psi2 * b.psi2 + 2.0 * gd.lambda * aa * b.phi2_d;

    // data_sign: the y-derivative data term rides the characteristic
    // operator, so it enters with opposite signs for the two families
    let f_first_pair = |s: f64, den: f64, data_sign: f64| -> f64 {
        -(dc * a * a * b.phi2_d * b.phi2_d + aa * b.psi2 * (b.g21 + b.g22)) / den
            + (data_sign * (b.psi1_d + b.g11_d * tau) - aa * b.g21 * b.g22 * tau) / den
            - aa * (b.g22 * u3 + b.g21 * u4) / den
            + w_num * b.g11 / (p.dc * b.psi1 * s)
            + w_num / (p.dc * den) * lvl.q_dc
            + (2.0 * gd.lambda * b.phi2_d + b.psi2 * b.psi2) / (2.0 * p.dc * b.psi1) * lvl.q_a2p
    };
    let f1 = f_first_pair(gd.s2, gd.den2, 1.0);
    let f2 = f_first_pair(gd.s1, gd.den1, -1.0);

    let u_mix = da * (b.g22 * u1 + b.g21 * u2 + b.g11 * u3 + b.g11 * u4);
    let data_mix = da * (b.psi1 * b.g22 + b.psi2 * b.g11 + b.psi1 * b.g21 + b.psi2 * b.g11);
    let f3 = u_mix / (a * gd.den2)
        + (a * b.psi2_d + a * b.g21_d * tau + da * b.g11 * (b.g22 + b.g21) * tau) / (a * gd.den2)
        + data_mix / (a * gd.den2)
        + 2.0 * b.psi2 * b.psi1 / (p.a * p.dc * b.psi1) * lvl.q_da
        - 2.0 * da * b.psi1 * b.psi2 * b.g11 / (p.a * p.dc * b.psi1 * gd.s2)
        - 2.0 * da * b.psi1 * b.psi2 / (a * gd.den2 * p.a * p.dc) * lvl.q_adc;
    let f4 = u_mix / (a * gd.den1)
        - (a * b.psi2_d + a * b.g22_d * tau - da * b.g11 * (b.g22 + b.g21) * tau) / (a * gd.den1)
        + data_mix / (a * gd.den1)
        + 2.0 * b.psi1 * b.psi2 / (p.a * p.dc * b.psi1) * lvl.q_da
        - 2.0 * da * b.psi1 * b.psi2 * b.g11 / (gd.s1 * p.a * p.dc * b.psi1)
        - 2.0 * da * b.psi1 * b.psi2 / (a * gd.den1 * p.a * p.dc) * lvl.q_adc;

    let f = [f1, f2, f3, f4];
    for (i, v) in f.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::SourceAssembly {
                term: ["F1", "F2", "F3", "F4"][i],
                tau: lvl.tau,
                y: b.y,
            });
        }
    }
    Ok(f)
}

/// Full right-hand sides of the four transport equations, including the
/// singular leading terms, the lambda-coupled singular terms, the quadratic
/// difference terms, the linear part, and the forcing.
///
/// At tau = 0 the analytic limit applies: every term vanishes for admissible
/// fields (which satisfy U_i = O(tau^2)), so the assembled value is zero.
pub fn eval_rhs(ctx: &SourceContext) -> Result<SourceValues> {
    let gd = ctx.guarded()?;
    let lvl = ctx.level;
    let b = ctx.bnd;
    let tau = gd.tau;
    let (lambda_plus, lambda_minus) = (-tau / gd.den2, tau / gd.den1);

    if tau == 0.0 {
        return Ok(SourceValues {
            lambda_plus,
            lambda_minus,
            rhs: [0.0; 4],
        });
    }

    let t = eval_coefficient_matrix(ctx)?;
    let f = eval_forcing(ctx)?;
    let (a, da) = (lvl.a, lvl.da);
    let [u1, u2, u3, u4] = ctx.u;
    let d12 = u1 - u2;
    let d34 = u3 - u4;
    let lam = gd.lambda;

    let lead = [
        d12 / (2.0 * tau),
        -d12 / (2.0 * tau),
        d34 / (2.0 * tau),
        -d34 / (2.0 * tau),
    ];
    let sing = [
        lam * (a * da / gd.den2) * d34 / tau,
        lam * (a * da / gd.den1) * d34 / tau,
        -lam * (da / (a * gd.den2)) * d12 / tau,
        -lam * (da / (a * gd.den1)) * d12 / tau,
    ];
    let quad = [
        d12 * d12 / (4.0 * gd.s2 * tau) - a * a * d34 * d34 / (4.0 * gd.s2 * tau),
        d12 * d12 / (4.0 * gd.s1 * tau) - a * a * d34 * d34 / (4.0 * gd.s1 * tau),
        d12 / (2.0 * gd.s2) * d34 / tau,
        d12 / (2.0 * gd.s1) * d34 / tau,
    ];

    let mut rhs = [0.0; 4];
    for i in 0..4 {
        let linear: f64 = (0..4).map(|j| t[i][j] * ctx.u[j]).sum();
        rhs[i] = lead[i] + sing[i] + quad[i] + linear + f[i] * tau;
        if !rhs[i].is_finite() {
            let term = if !lead[i].is_finite() {
                "leading difference"
            } else if !sing[i].is_finite() {
                "lambda-coupled difference"
            } else if !quad[i].is_finite() {
                "quadratic difference"
            } else if !linear.is_finite() {
                "linear part"
            } else {
                "forcing"
            };
            return Err(Error::SourceAssembly {
                term,
                tau,
                y: b.y,
            });
        }
    }

    Ok(SourceValues {
        lambda_plus,
        lambda_minus,
        rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{derive_boundary, ScenarioData};
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

    fn ctx_parts(
        model: &MaterialModel,
        data: &ScenarioData,
        tau: f64,
        y: f64,
    ) -> (SourceTables, TauLevel, BoundaryPoint) {
        let tables = SourceTables::new(model, data, EPS_DD_DEFAULT);
        let level = tables.level(model, tau).unwrap();
        let bnd = derive_boundary(model, data).point(y);
        (tables, level, bnd)
    }

    #[test]
    fn lambda_speeds_match_hand_values() {
        let (model, data) = constant_setup();
        let (tables, level, bnd) = ctx_parts(&model, &data, 0.1, 0.0);
        let ctx = SourceContext {
            tables: &tables,
            level: &level,
            bnd: &bnd,
            u: [0.0; 4],
        };
        let (lp, lm) = eval_lambda(&ctx).unwrap();
        // Lambda_+ = -tau/(c'(U2+g)) with c' = -1 and g = 1 + 0.05
        assert_relative_eq!(lp, 0.1 / 1.05, epsilon = 1e-15);
        assert_relative_eq!(lp, 0.0952381, epsilon = 1e-7);
        assert_relative_eq!(lm, -0.1 / 1.05, epsilon = 1e-15);

        let ctx2 = SourceContext {
            u: [0.0, 0.01, 0.0, 0.0],
            ..ctx
        };
        let (lp2, _) = eval_lambda(&ctx2).unwrap();
        assert_relative_eq!(lp2, 0.1 / 1.06, epsilon = 1e-15);
        assert_relative_eq!(lp2, 0.0943396, epsilon = 1e-7);
    }

    #[test]
    fn speeds_vanish_at_tau_zero() {
        let (model, data) = constant_setup();
        let (tables, level, bnd) = ctx_parts(&model, &data, 0.0, 0.3);
        let ctx = SourceContext {
            tables: &tables,
            level: &level,
            bnd: &bnd,
            u: [0.0; 4],
        };
        assert_eq!(eval_lambda(&ctx).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn structural_zeros_and_t33_value() {
        let (model, data) = constant_setup();
        let (tables, level, bnd) = ctx_parts(&model, &data, 0.0, 0.0);
        let ctx = SourceContext {
            tables: &tables,
            level: &level,
            bnd: &bnd,
            u: [0.0; 4],
        };
        let t = eval_coefficient_matrix(&ctx).unwrap();
        assert_eq!(t[0][0], 0.0);
        assert_eq!(t[1][1], 0.0);
        // T33 = a'(0) psi1 / (a(0) c'(0) g(0, y)) = 1/(2 * -1 * 1)
        assert_relative_eq!(t[2][2], -0.5, epsilon = 1e-15);
    }

    #[test]
    fn t12_vanishes_without_psi2_and_phi2_slope() {
        let model = MaterialModel::linear(2.0, (-1.0, 1.0)).unwrap();
        let data =
            ScenarioData::from_sources("trivial", 0.0, 0.0, 1.0, (-1.0, 1.0), "0.3", "1", "0")
                .unwrap();
        let (tables, level, bnd) = ctx_parts(&model, &data, 0.05, 0.2);
        let ctx = SourceContext {
            tables: &tables,
            level: &level,
            bnd: &bnd,
            u: [1e-4, -2e-4, 5e-5, 0.0],
        };
        let t = eval_coefficient_matrix(&ctx).unwrap();
        assert_eq!(t[0][1], 0.0);
        assert_eq!(t[1][0], 0.0);
    }

    #[test]
    fn forcing_at_origin_matches_term_by_term_value() {
        let (model, data) = constant_setup();
        let (tables, level, bnd) = ctx_parts(&model, &data, 0.0, 0.0);
        let ctx = SourceContext {
            tables: &tables,
            level: &level,
            bnd: &bnd,
            u: [0.0; 4],
        };
        let f = eval_forcing(&ctx).unwrap();
        // term-by-term: -1 (data product) - 0.25 (g11 coupling) + 0.25
        // (amplitude divided difference); the c' family vanishes for linear c
        assert_relative_eq!(f[0], -1.0, epsilon = 1e-14);
        assert_relative_eq!(f[1], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn forcing_34_vanishes_for_trivial_data() {
        let model = MaterialModel::linear(2.0, (-1.0, 1.0)).unwrap();
        let data =
            ScenarioData::from_sources("trivial", 0.0, 0.0, 1.0, (-1.0, 1.0), "0.3", "1", "0")
                .unwrap();
        let (tables, level, bnd) = ctx_parts(&model, &data, 0.07, -0.4);
        let ctx = SourceContext {
            tables: &tables,
            level: &level,
            bnd: &bnd,
            u: [0.0; 4],
        };
        let f = eval_forcing(&ctx).unwrap();
        assert_eq!(f[2], 0.0);
        assert_eq!(f[3], 0.0);
    }

    #[test]
    fn linear_speed_kills_its_divided_difference_family() {
        let (model, data) = constant_setup();
        for tau in [0.0, 1e-6, 1e-3, 0.09] {
            let (tables, level, _) = ctx_parts(&model, &data, tau, 0.0);
            let _ = &tables;
            assert_eq!(level.q_dc, 0.0, "tau = {tau}");
        }
    }

    #[test]
    fn divided_difference_crossover_is_smooth() {
        // Taylor-rule and direct-quotient branches agree to 1e-8 across
        // [eps/2, 2 eps] for a material with nontrivial third derivatives.
        let (model, data) = constant_setup();
        let tables = SourceTables::new(&model, &data, EPS_DD_DEFAULT);
        for k in 0..=40 {
            let tau = EPS_DD_DEFAULT * (0.5 + 1.5 * (k as f64) / 40.0);
            let lo =
                TauLevel::build(&model, &tables.phi1_vals, 0.0, tau, f64::INFINITY).unwrap();
            let hi = TauLevel::build(&model, &tables.phi1_vals, 0.0, tau, 0.0).unwrap();
            for (a, b) in [
                (lo.q_dc, hi.q_dc),
                (lo.q_a2p, hi.q_a2p),
                (lo.q_da, hi.q_da),
                (lo.q_adc, hi.q_adc),
            ] {
                assert_abs_diff_eq!(a, b, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn rhs_vanishes_at_origin_and_keeps_leading_term() {
        let (model, data) = constant_setup();
        let (tables, level, bnd) = ctx_parts(&model, &data, 0.0, 0.0);
        let ctx = SourceContext {
            tables: &tables,
            level: &level,
            bnd: &bnd,
            u: [0.0; 4],
        };
        assert_eq!(eval_rhs(&ctx).unwrap().rhs, [0.0; 4]);

        // u1 - u2 = tau^2 puts tau/2 into the first leading term
        let tau = 0.05;
        let (tables, level, bnd) = ctx_parts(&model, &data, tau, 0.0);
        let u = [tau * tau, 0.0, 0.0, 0.0];
        let ctx = SourceContext {
            tables: &tables,
            level: &level,
            bnd: &bnd,
            u,
        };
        let full = eval_rhs(&ctx).unwrap().rhs[0];
        // subtract everything except the leading difference
        let t = eval_coefficient_matrix(&ctx).unwrap();
        let f = eval_forcing(&ctx).unwrap();
        let linear: f64 = (0..4).map(|j| t[0][j] * u[j]).sum();
        let g = bnd.psi1 + bnd.g11 * tau;
        let quad = tau.powi(4) / (4.0 * (u[1] + g) * tau);
        assert_relative_eq!(
            full - linear - f[0] * tau - quad,
            tau / 2.0,
            epsilon = 1e-13
        );
    }

    #[test]
    fn with_zero_field_only_forcing_survives() {
        let (model, data) = constant_setup();
        let tau = 0.1;
        let (tables, level, bnd) = ctx_parts(&model, &data, tau, 0.0);
        let ctx = SourceContext {
            tables: &tables,
            level: &level,
            bnd: &bnd,
            u: [0.0; 4],
        };
        let rhs = eval_rhs(&ctx).unwrap().rhs;
        let f = eval_forcing(&ctx).unwrap();
        for i in 0..4 {
            assert_relative_eq!(rhs[i], f[i] * tau, epsilon = 1e-15);
        }
    }

    #[test]
    fn denominator_guard_is_a_hard_error() {
        let (model, data) = constant_setup();
        let (tables, level, bnd) = ctx_parts(&model, &data, 0.1, 0.0);
        // drive U2 + g below the floor m0 psi0 / 2
        let ctx = SourceContext {
            tables: &tables,
            level: &level,
            bnd: &bnd,
            u: [0.0, -0.9, 0.0, 0.0],
        };
        match eval_rhs(&ctx) {
            Err(Error::ClassBreach { what, .. }) => assert!(what.contains("U2")),
            other => panic!("expected class breach, got {other:?}"),
        }
    }

    #[test]
    fn singular_terms_cancel_for_class_sized_fields() {
        // For |U_i| <= M tau^2 the assembled right-hand side stays O(tau):
        // the ratio |rhs| / (tau (1 + M delta)^2) must not blow up as tau -> 0.
        let (model, data) = constant_setup();
        let tables = SourceTables::new(&model, &data, EPS_DD_DEFAULT);
        let bnd = derive_boundary(&model, &data).point(0.0);
        let m_cap = 4.0;
        let delta = 0.1;
        let bound_scale = |tau: f64| tau * (1.0 + m_cap * delta) * (1.0 + m_cap * delta);

        let ratio_at = |tau: f64| -> f64 {
            let level = tables.level(&model, tau).unwrap();
            // deterministic class-sized field pattern with unequal pairs
            let u = [
                0.9 * m_cap * tau * tau / 4.0,
                -0.7 * m_cap * tau * tau / 4.0,
                0.5 * m_cap * tau * tau / 4.0,
                -0.3 * m_cap * tau * tau / 4.0,
            ];
            let ctx = SourceContext {
                tables: &tables,
                level: &level,
                bnd: &bnd,
                u,
            };
            let rhs = eval_rhs(&ctx).unwrap().rhs;
            rhs.iter().map(|v| v.abs()).fold(0.0, f64::max) / bound_scale(tau)
        };

        let mut small = 0.0f64;
        let mut large = 0.0f64;
        for k in 0..=60 {
            // geometric sweep over [1e-6, delta]
            let tau = 1e-6 * (delta / 1e-6f64).powf(k as f64 / 60.0);
            let r = ratio_at(tau);
            if tau < delta / 10.0 {
                small = small.max(r);
            } else {
                large = large.max(r);
            }
        }
        assert!(
            small <= 2.0 * large + 1e-12,
            "singular cancellation failed: small-tau ratio {small}, large-tau ratio {large}"
        );
    }
}
