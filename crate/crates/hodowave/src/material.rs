//! Material models: the wave-speed function `c` and coupling amplitude `a`
//! with their derivatives through third order, the lower-bound constant `m0`,
//! and the monotone wave-speed inversion that drives the hodograph map.
//!
//! The solver only treats the sign case `c' <= -m0 < 0`, so `c` is strictly
//! decreasing on `u_domain` and `c(u) = -tau` has at most one root there.

use crate::error::{Error, Result};
use crate::expr::Expr;

/// Number of sample points used when estimating bounds over an interval.
const BOUND_SAMPLES: usize = 2048;

/// Wave speed and coupling amplitude with derivatives through third order.
#[derive(Debug, Clone)]
pub struct MaterialModel {
    pub name: String,
    /// c and its first three derivatives.
    c: Vec<Expr>,
    /// a and its first three derivatives.
    a: Vec<Expr>,
    /// Lower bound: |c'| >= m0 and |a| >= m0 on `u_domain`.
    pub m0: f64,
    pub u_domain: (f64, f64),
}

impl MaterialModel {
    /// Linear wave speed `c = -u` with `a = shift + sin u`.
    pub fn linear(a_shift: f64, u_domain: (f64, f64)) -> Result<MaterialModel> {
        Self::from_sources(
            "linear",
            "-u",
            &format!("{a_shift:.17e} + sin(u)"),
            None,
            u_domain,
        )
    }

    /// Trigonometric speed `c = -sqrt(k1) sin u`, `a = shift + sin u`.
    ///
    /// The domain is clipped to |u| < pi/3 so that `c'` keeps a definite sign
    /// with margin; the physical trigonometric forms only satisfy the slope
    /// bound on such a restricted branch.
    pub fn saxton_trig(k1: f64, a_shift: f64, u_domain: (f64, f64)) -> Result<MaterialModel> {
        if k1 <= 0.0 {
            return Err(Error::Validation(format!(
                "saxton-trig preset requires k1 > 0, got {k1}"
            )));
        }
        let third = std::f64::consts::PI / 3.0;
        let lo = u_domain.0.max(-third);
        let hi = u_domain.1.min(third);
        if !(lo < hi) {
            return Err(Error::Validation(
                "saxton-trig preset: u_domain does not intersect (-pi/3, pi/3)".into(),
            ));
        }
        Self::from_sources(
            "saxton-trig",
            &format!("-{:.17e}*sin(u)", k1.sqrt()),
            &format!("{a_shift:.17e} + sin(u)"),
            None,
            (lo, hi),
        )
    }

    /// Model from expression strings in the variable `u`.
    ///
    /// `m0` may be supplied (it is then validated later against samples) or
    /// left to be estimated as the sampled minimum of min(|c'|, |a|).
    pub fn from_sources(
        name: &str,
        c_src: &str,
        a_src: &str,
        m0: Option<f64>,
        u_domain: (f64, f64),
    ) -> Result<MaterialModel> {
        if !(u_domain.0 < u_domain.1) {
            return Err(Error::Validation(format!(
                "u_domain [{}, {}] is empty",
                u_domain.0, u_domain.1
            )));
        }
        let c = Expr::parse(c_src, "u")?.derivatives(3);
        let a = Expr::parse(a_src, "u")?.derivatives(3);
        let mut model = MaterialModel {
            name: name.to_string(),
            c,
            a,
            m0: 0.0,
            u_domain,
        };
        model.m0 = match m0 {
            Some(v) => {
                if v <= 0.0 {
                    return Err(Error::Validation(format!("m0 must be positive, got {v}")));
                }
                v
            }
            None => model.estimate_m0(),
        };
        Ok(model)
    }

    /// Sampled minimum of min(|c'|, |a|) over `u_domain` (endpoints included).
    fn estimate_m0(&self) -> f64 {
        let (lo, hi) = self.u_domain;
        let mut m = f64::INFINITY;
        for i in 0..=BOUND_SAMPLES {
            let u = lo + (hi - lo) * (i as f64) / (BOUND_SAMPLES as f64);
            m = m.min(self.dc(u).abs()).min(self.a(u).abs());
        }
        m
    }

    pub fn c(&self, u: f64) -> f64 {
        self.c[0].eval(u)
    }
    pub fn dc(&self, u: f64) -> f64 {
        self.c[1].eval(u)
    }
    pub fn d2c(&self, u: f64) -> f64 {
        self.c[2].eval(u)
    }
    pub fn d3c(&self, u: f64) -> f64 {
        self.c[3].eval(u)
    }
    pub fn a(&self, u: f64) -> f64 {
        self.a[0].eval(u)
    }
    pub fn da(&self, u: f64) -> f64 {
        self.a[1].eval(u)
    }
    pub fn d2a(&self, u: f64) -> f64 {
        self.a[2].eval(u)
    }
    pub fn d3a(&self, u: f64) -> f64 {
        self.a[3].eval(u)
    }

    /// k-th derivative of c, k = 0..=3.
    pub fn c_deriv(&self, k: usize, u: f64) -> f64 {
        self.c[k].eval(u)
    }
    /// k-th derivative of a, k = 0..=3.
    pub fn a_deriv(&self, k: usize, u: f64) -> f64 {
        self.a[k].eval(u)
    }

    /// Solve `c(u) = -tau` for `u` in `u_domain`.
    ///
    /// Safeguarded Newton from the first-order guess `phi1 - tau/c'(phi1)`,
    /// falling back to bisection of the bracket; monotonicity of `c` makes
    /// this unconditionally convergent. Returns `u` with |c(u) + tau| <= 1e-12.
    pub fn invert_wave_speed(&self, phi1: f64, tau: f64) -> Result<f64> {
        if tau == 0.0 {
            return Ok(phi1);
        }
        let (dom_lo, dom_hi) = self.u_domain;
        let resid = |u: f64| self.c(u) + tau;

        // c decreases, so for tau > 0 the root sits right of phi1 and within
        // tau/m0 of it; the mirror case covers tau < 0 diagnostics.
        let (mut lo, mut hi) = if tau > 0.0 {
            (phi1, (phi1 + tau / self.m0 * 1.0001).min(dom_hi))
        } else {
            ((phi1 + tau / self.m0 * 1.0001).max(dom_lo), phi1)
        };
        if !(resid(lo) >= -1e-12 && resid(hi) <= 1e-12) && resid(lo) * resid(hi) > 0.0 {
            return Err(Error::HodographWindow {
                target: -tau,
                lo: dom_lo,
                hi: dom_hi,
            });
        }

        let mut u = phi1 - tau / self.dc(phi1);
        if !(lo..=hi).contains(&u) {
            u = 0.5 * (lo + hi);
        }
        for _ in 0..200 {
            let r = resid(u);
            if r.abs() <= 1e-13 {
                return Ok(u);
            }
            // keep the bracket: c decreasing means resid decreasing
            if r > 0.0 {
                lo = u;
            } else {
                hi = u;
            }
            let d = self.dc(u);
            let mut next = u - r / d;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - u).abs() <= f64::EPSILON * u.abs().max(1.0) {
                u = next;
                break;
            }
            u = next;
        }
        if resid(u).abs() <= 1e-12 {
            Ok(u)
        } else {
            Err(Error::HodographWindow {
                target: -tau,
                lo: dom_lo,
                hi: dom_hi,
            })
        }
    }
}
