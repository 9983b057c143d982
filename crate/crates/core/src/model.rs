//! Physical parameters, effective couplings and momentum-space vertex functions.
//!
//! Energies are measured in units of the hopping amplitude `t_e`, so the phonon
//! frequency doubles as the adiabaticity ratio `omega_ph / t_e` when `t_e = 1`.
//! Only `t_e > 0` is modeled; the `t_e < 0` case maps onto it through the gauge
//! transform `c_n -> (-1)^n c_n`, which moves the bare band minimum from `k = 0`
//! to `k = pi`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::MAX_PHONONS;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Hopping amplitude; the energy unit.
    #[serde(default = "one")]
    pub t_e: f64,
    /// Einstein phonon frequency.
    pub omega_ph: f64,
    /// Dimensionless Peierls coupling.
    pub g_p: f64,
    /// Dimensionless breathing-mode coupling.
    pub g_bm: f64,
    /// Ring size `N`.
    pub n_sites: usize,
    /// Cap on the total phonon number.
    pub n_ph: usize,
}

fn one() -> f64 {
    1.0
}

impl ModelParams {
    pub fn new(omega_ph: f64, g_p: f64, g_bm: f64, n_sites: usize, n_ph: usize) -> Result<Self> {
        let p = Self {
            t_e: 1.0,
            omega_ph,
            g_p,
            g_bm,
            n_sites,
            n_ph,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.t_e > 0.0 && self.t_e.is_finite()) {
            return bad(format!("t_e must be positive, got {}", self.t_e));
        }
        if !(self.omega_ph > 0.0 && self.omega_ph.is_finite()) {
            return bad(format!("omega_ph must be positive, got {}", self.omega_ph));
        }
        if !(self.g_p >= 0.0 && self.g_p.is_finite()) {
            return bad(format!("g_P must be non-negative, got {}", self.g_p));
        }
        if !(self.g_bm >= 0.0 && self.g_bm.is_finite()) {
            return bad(format!("g_BM must be non-negative, got {}", self.g_bm));
        }
        if self.n_sites < 2 {
            return bad(format!("need at least 2 sites, got {}", self.n_sites));
        }
        if self.n_ph > MAX_PHONONS {
            return Err(Error::Sizing(format!(
                "phonon cap {} exceeds {MAX_PHONONS}",
                self.n_ph
            )));
        }
        Ok(())
    }

    /// Adiabaticity ratio `omega_ph / t_e`.
    pub fn adiabaticity(&self) -> f64 {
        self.omega_ph / self.t_e
    }

    pub fn with_g_p(self, g_p: f64) -> Self {
        Self { g_p, ..self }
    }

    pub fn with_n_ph(self, n_ph: usize) -> Self {
        Self { n_ph, ..self }
    }

    pub fn with_sites(self, n_sites: usize) -> Self {
        Self { n_sites, ..self }
    }
}

/// Effective Peierls coupling `2 g_P^2 omega_ph / t_e`.
pub fn lambda_p(params: &ModelParams) -> f64 {
    2.0 * params.g_p * params.g_p * params.adiabaticity()
}

/// Effective breathing-mode coupling `g_BM^2 omega_ph / t_e`.
pub fn lambda_bm(params: &ModelParams) -> f64 {
    params.g_bm * params.g_bm * params.adiabaticity()
}

/// Total effective coupling; the P-BM cross term averages to zero over the zone.
pub fn lambda_total(params: &ModelParams) -> f64 {
    lambda_p(params) + lambda_bm(params)
}

/// Inverse of [`lambda_p`] at fixed `omega_ph / t_e`.
pub fn g_p_from_lambda(lambda_p: f64, params: &ModelParams) -> f64 {
    (lambda_p / (2.0 * params.adiabaticity())).sqrt()
}

/// Inverse of [`lambda_bm`] at fixed `omega_ph / t_e`.
pub fn g_bm_from_lambda(lambda_bm: f64, params: &ModelParams) -> f64 {
    (lambda_bm / params.adiabaticity()).sqrt()
}

/// Peierls vertex `2 i g_P omega_ph [sin k - sin(k + q)]`.
pub fn vertex_peierls(k: f64, q: f64, params: &ModelParams) -> Complex64 {
    Complex64::new(0.0, 2.0 * params.g_p * params.omega_ph * (k.sin() - (k + q).sin()))
}

/// Breathing-mode vertex `2 i g_BM omega_ph sin q`.
pub fn vertex_breathing(q: f64, params: &ModelParams) -> Complex64 {
    Complex64::new(0.0, 2.0 * params.g_bm * params.omega_ph * q.sin())
}

/// Total vertex `gamma_P(k, q) + gamma_BM(q)`; purely imaginary.
pub fn vertex_total(k: f64, q: f64, params: &ModelParams) -> Complex64 {
    vertex_peierls(k, q, params) + vertex_breathing(q, params)
}

/// Brillouin-zone averages computed by uniform quadrature on `(-pi, pi]^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZoneAverage {
    /// `<|gamma_total|^2> / (2 t_e omega_ph)`.
    pub lambda_total: f64,
    /// `<2 Re[gamma_P^* gamma_BM]> / (2 t_e omega_ph)`.
    pub cross_term: f64,
}

/// Periodic trapezoid rule with `points` nodes per axis.
pub fn zone_average(params: &ModelParams, points: usize) -> ZoneAverage {
    let h = 2.0 * PI / points as f64;
    let node = |i: usize| -PI + (i as f64 + 1.0) * h;
    let mut total = 0.0;
    let mut cross = 0.0;
    for i in 0..points {
        let k = node(i);
        for j in 0..points {
            let q = node(j);
            let gp = vertex_peierls(k, q, params);
            let gb = vertex_breathing(q, params);
            total += (gp + gb).norm_sqr();
            cross += 2.0 * (gp.conj() * gb).re;
        }
    }
    let norm = (points * points) as f64 * 2.0 * params.t_e * params.omega_ph;
    ZoneAverage {
        lambda_total: total / norm,
        cross_term: cross / norm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(omega: f64, g_p: f64, g_bm: f64) -> ModelParams {
        ModelParams::new(omega, g_p, g_bm, 8, 9).unwrap()
    }

    #[test]
    fn effective_couplings() {
        assert_eq!(lambda_p(&params(0.7, 0.0, 0.3)), 0.0);
        assert_relative_eq!(lambda_p(&params(0.5, 1.0, 0.0)), 1.0);
        assert_relative_eq!(lambda_p(&params(2.0, 0.5, 0.0)), 1.0);
        assert_eq!(lambda_bm(&params(1.0, 0.2, 0.0)), 0.0);
        assert_relative_eq!(lambda_bm(&params(1.0, 0.0, 0.25)), 0.0625);
        assert_relative_eq!(lambda_bm(&params(2.0, 0.0, 0.4)), 0.32, max_relative = 1e-15);
        assert_eq!(lambda_total(&params(1.0, 0.0, 0.0)), 0.0);
        assert_relative_eq!(lambda_total(&params(1.0, 0.5, 0.25)), 0.5625);
    }

    #[test]
    fn inverse_coupling() {
        assert_eq!(g_p_from_lambda(0.0, &params(1.0, 0.0, 0.0)), 0.0);
        let p = params(0.5, 0.0, 0.0);
        assert_relative_eq!(g_p_from_lambda(1.0, &p), 1.0);
        let p = params(1.0, 0.0, 0.0);
        let g = g_p_from_lambda(3.2, &p);
        assert_relative_eq!(g, 1.6f64.sqrt());
        assert_relative_eq!(g, 1.264911, epsilon = 1e-6);
        assert_relative_eq!(lambda_p(&p.with_g_p(g)), 3.2, max_relative = 1e-15);
    }

    #[test]
    fn vertex_examples() {
        let p = params(1.3, 0.6, 0.6);
        for i in 0..1000 {
            let q = -PI + 2.0 * PI * (i as f64 + 1.0) / 1000.0;
            assert_eq!(vertex_total(0.0, q, &p).norm(), 0.0);
        }
        let p = params(0.9, 0.6, 0.2);
        for k in [-2.0, 0.3, 1.1, PI] {
            assert_eq!(vertex_total(k, 0.0, &p), Complex64::new(0.0, 0.0));
        }
        let p = params(1.0, 1.0, 0.0);
        let v = vertex_total(PI / 2.0, PI / 2.0, &p);
        assert_relative_eq!(v.re, 0.0);
        assert_relative_eq!(v.im, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn unequal_couplings_break_the_cancellation() {
        let p = params(1.0, 0.6, 0.2);
        assert!(vertex_total(0.0, 1.0, &p).norm() > 0.1);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let p = params(1.0, 0.5, 0.25);
        let avg = zone_average(&p, 256);
        assert_relative_eq!(avg.lambda_total, 0.5625, max_relative = 1e-6);
        assert!(avg.cross_term.abs() < 1e-10);
    }

    #[test]
    fn rejects_invalid() {
        assert!(ModelParams::new(0.0, 0.1, 0.1, 8, 9).is_err());
        assert!(ModelParams::new(1.0, -0.1, 0.1, 8, 9).is_err());
        assert!(ModelParams::new(1.0, 0.1, f64::NAN, 8, 9).is_err());
        assert!(ModelParams::new(1.0, 0.1, 0.1, 1, 9).is_err());
        assert!(ModelParams::new(1.0, 0.1, 0.1, 8, 300).is_err());
    }

    proptest! {
        #[test]
        fn lambda_round_trip(lam in 0.0f64..10.0, omega in 0.05f64..5.0) {
            let p = params(omega, 0.0, 0.0);
            let g = g_p_from_lambda(lam, &p);
            let back = lambda_p(&p.with_g_p(g));
            prop_assert!((back - lam).abs() <= 1e-15 * lam);
            let gb = g_bm_from_lambda(lam, &p);
            let back = lambda_bm(&ModelParams { g_bm: gb, ..p });
            prop_assert!((back - lam).abs() <= 1e-15 * lam);
        }

        #[test]
        fn lambda_monotone(a in 0.0f64..3.0, b in 0.0f64..3.0, omega in 0.1f64..4.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(lambda_p(&params(omega, lo, 0.0)) <= lambda_p(&params(omega, hi, 0.0)));
            prop_assert!(lambda_bm(&params(omega, 0.0, lo)) <= lambda_bm(&params(omega, 0.0, hi)));
        }
    }
}
