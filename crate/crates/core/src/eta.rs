//! Closed-form potentials: the retarded low-temperature series and the
//! classical high-temperature limit.
//!
//! Retarded (reduced units, ε = U·πd⁴/(ħc)):
//!
//! ```text
//! ε = −[α_⊥η_⊥ + α_zz η_zz + α_zi η_zi + (α_xx − α_yy) η_xy]
//! ```
//!
//! with η polynomial in τ = d/λ_T through τ⁵. Classical (thermal units,
//! U·d³/(k_B T)) is the static Matsubara term alone.

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::beta::{beta_at_zero_exact, BetaIndex, Rational};
use crate::error::{Error, Result};
use crate::geometry::{to_principal_frame, Frame, LocalGeometry};
use crate::potential::{
    check_frames, EnergyUnit, PotentialBreakdown, TermTable, ValidityFlags, CURV1, CURV2, FLAT,
    GRAD, PERP, XY, ZI, ZZ,
};
use crate::specfun::CONSTANTS;
use crate::tensor::PolarizabilityTensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaCoefficients {
    pub eta_perp: f64,
    pub eta_zz: f64,
    /// η_zi for i = x, y; contracted with (α_zx, α_zy).
    pub eta_zi: [f64; 2],
    pub eta_xy: f64,
    pub flags: ValidityFlags,
}

/// η split by curvature order: [flat, first order, second order].
#[derive(Debug, Clone, Copy, PartialEq)]
struct EtaOrders {
    perp: [f64; 3],
    zz: [f64; 3],
    zi: [f64; 2],
    xy: [f64; 3],
}

const fn q(n: i64, d: i64) -> f64 {
    n as f64 / d as f64
}

fn eta_orders(a: f64, b: f64, g: [f64; 2], t: f64, perp_quadratic_t5: bool) -> EtaOrders {
    let pi2 = std::f64::consts::PI.powi(2);
    let pi4 = pi2 * pi2;
    let z3 = CONSTANTS.zeta3 / pi2;
    let z5 = CONSTANTS.zeta5 / pi4;
    let (t2, t3, t4, t5) = (t * t, t.powi(3), t.powi(4), t.powi(5));
    let s = a + b;
    let sq = a * a + b * b;

    let perp_sq_t5 = if perp_quadratic_t5 { -q(9, 32) * z5 * t5 } else { 0.0 };
    let perp = [
        q(1, 8) - q(1, 360) * t4,
        -s * (q(3, 40) - q(3, 32) * z5 * t5),
        s * s * (q(3, 280) - q(3, 64) * z5 * t5) + sq * (q(13, 280) + q(1, 360) * t4 + perp_sq_t5),
    ];
    let zz = [
        q(1, 8) + q(1, 360) * t4,
        -s * (q(1, 15) - q(1, 8) * z3 * t3 + q(1, 90) * t4 - q(3, 16) * z5 * t5),
        -s * s
            * (q(1, 240) - q(1, 45) * t2 + q(1, 4) * z3 * t3 - q(1, 60) * t4 + q(7, 16) * z5 * t5)
            + sq * (q(3, 40) - q(1, 90) * t2 + q(1, 180) * t4 - q(1, 4) * z5 * t5),
    ];
    let zi_bracket = q(1, 30) - q(1, 16) * z3 * t3 + q(1, 180) * t4 - q(3, 32) * z5 * t5;
    let xy = [
        0.0,
        -(a - b) * (q(1, 40) + q(3, 64) * z5 * t5),
        (a * a - b * b) * (q(9, 560) + q(1, 360) * t4 - q(3, 16) * z5 * t5),
    ];
    EtaOrders {
        perp,
        zz,
        zi: [g[0] * zi_bracket, g[1] * zi_bracket],
        xy,
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            function: "eta_coefficients",
            value: tau,
            expected: "finite tau >= 0",
        })
    }
}

fn principal_inputs(geom: &LocalGeometry) -> Result<(f64, f64, [f64; 2])> {
    let g = if geom.frame() == Frame::Principal {
        *geom
    } else {
        to_principal_frame(geom, &PolarizabilityTensor::isotropic(1.0))?.0
    };
    let (a, b) = g.d_over_r();
    Ok((a, b, g.reduced_grad_lap()))
}

fn coefficients_from(orders: &EtaOrders, flags: ValidityFlags) -> EtaCoefficients {
    EtaCoefficients {
        eta_perp: orders.perp.iter().sum(),
        eta_zz: orders.zz.iter().sum(),
        eta_zi: orders.zi,
        eta_xy: orders.xy.iter().sum(),
        flags,
    }
}

/// Low-temperature η coefficients. General-frame geometry is rotated to its
/// principal axes first. The (d/R1)² + (d/R2)² bracket of η_⊥ carries the
/// −9ζ(5)τ⁵/(32π⁴) term that the Matsubara sums of β^(4)_3 require.
pub fn eta_coefficients(geom: &LocalGeometry, tau: f64) -> Result<EtaCoefficients> {
    check_tau(tau)?;
    let (a, b, g) = principal_inputs(geom)?;
    let orders = eta_orders(a, b, g, tau, true);
    Ok(coefficients_from(&orders, ValidityFlags::assess(geom, Some(tau))))
}

/// Same series without the quadratic τ⁵ term of η_⊥, as originally
/// tabulated. Kept for comparison only.
pub fn eta_coefficients_uncorrected(geom: &LocalGeometry, tau: f64) -> Result<EtaCoefficients> {
    check_tau(tau)?;
    let (a, b, g) = principal_inputs(geom)?;
    let orders = eta_orders(a, b, g, tau, false);
    Ok(coefficients_from(&orders, ValidityFlags::assess(geom, Some(tau))))
}

fn retarded_with(
    alpha: &PolarizabilityTensor,
    geom: &LocalGeometry,
    tau: f64,
    corrected: bool,
) -> Result<PotentialBreakdown> {
    check_tau(tau)?;
    check_frames(alpha, geom)?;
    let (geom, alpha, _) = to_principal_frame(geom, alpha)?;
    let (a, b) = geom.d_over_r();
    let e = eta_orders(a, b, geom.reduced_grad_lap(), tau, corrected);
    let (perp, zz, dxy, zi) = (alpha.perp(), alpha.zz(), alpha.in_plane_anisotropy(), alpha.zi());

    let mut t: TermTable = [[0.0; 4]; 4];
    for (o, row) in [FLAT, CURV1, CURV2].into_iter().enumerate() {
        t[row][PERP] = -perp * e.perp[o];
        t[row][ZZ] = -zz * e.zz[o];
        t[row][XY] = -dxy * e.xy[o];
    }
    t[GRAD][ZI] = -(zi[0] * e.zi[0] + zi[1] * e.zi[1]);
    Ok(PotentialBreakdown::from_terms(
        EnergyUnit::Reduced,
        &t,
        ValidityFlags::assess(&geom, Some(tau)),
    ))
}

/// Retarded low-temperature free energy in reduced units.
pub fn u_retarded(
    alpha: &PolarizabilityTensor,
    geom: &LocalGeometry,
    tau: f64,
) -> Result<PotentialBreakdown> {
    retarded_with(alpha, geom, tau, true)
}

pub fn u_retarded_uncorrected(
    alpha: &PolarizabilityTensor,
    geom: &LocalGeometry,
    tau: f64,
) -> Result<PotentialBreakdown> {
    retarded_with(alpha, geom, tau, false)
}

/// Coefficients of the classical free energy, U·d³/(k_B T) = −½{…}, per
/// diagonal component of α. Each array is
/// [1, d/R1, d/R2, (d/R1)², (d/R2)², d²/(R1R2)].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassicalCoefficients {
    pub xx: [Rational; 6],
    pub yy: [Rational; 6],
    pub zz: [Rational; 6],
}

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

/// The classical expression as written in closed form.
pub fn classical_coefficients_closed_form() -> ClassicalCoefficients {
    ClassicalCoefficients {
        xx: [r(1, 8), r(-9, 64), r(-3, 64), r(17, 128), r(5, 128), r(2, 128)],
        yy: [r(1, 8), r(-3, 64), r(-9, 64), r(5, 128), r(17, 128), r(2, 128)],
        zz: [r(1, 4), r(-1, 16), r(-1, 16), r(5, 64), r(5, 64), r(-2, 64)],
    }
}

/// The same coefficients rebuilt from β(0) of the table through the
/// principal-frame contraction.
pub fn classical_coefficients_from_table() -> ClassicalCoefficients {
    let b = |p, q| beta_at_zero_exact(BetaIndex::raw(p, q));
    let half = r(1, 2);
    let lin_plus = b(2, 1) + half * b(2, 3);
    let lin_minus = b(2, 1) - half * b(2, 3);
    let quad_plus = b(4, 1) + b(4, 3) + half * b(4, 5);
    let quad_minus = b(4, 1) + b(4, 3) - half * b(4, 5);
    let two = r(2, 1);
    ClassicalCoefficients {
        xx: [b(0, 1), lin_plus, lin_minus, quad_plus, quad_minus, two * b(4, 1)],
        yy: [b(0, 1), lin_minus, lin_plus, quad_minus, quad_plus, two * b(4, 1)],
        zz: [b(0, 2), b(2, 2), b(2, 2), b(4, 2) + b(4, 4), b(4, 2) + b(4, 4), two * b(4, 2)],
    }
}

/// Classical free energy U·d³/(k_B T), including the curvature-gradient
/// term ½·β^(3)(0)·α_zi d²∂_i∇²H inside the braces.
pub fn u_classical(alpha: &PolarizabilityTensor, geom: &LocalGeometry) -> Result<PotentialBreakdown> {
    check_frames(alpha, geom)?;
    let (geom, alpha, _) = to_principal_frame(geom, alpha)?;
    let (a, b) = geom.d_over_r();
    let g = geom.reduced_grad_lap();
    let c = classical_coefficients_closed_form();
    let f = |v: &[Rational; 6]| v.map(|x| x.to_f64().unwrap_or(f64::NAN));
    let (cx, cy, cz) = (f(&c.xx), f(&c.yy), f(&c.zz));
    let monomials = [1.0, a, b, a * a, b * b, a * b];
    let order_of = [FLAT, CURV1, CURV1, CURV2, CURV2, CURV2];
    let (perp, zz, dxy) = (alpha.perp(), alpha.zz(), alpha.in_plane_anisotropy());

    let mut t: TermTable = [[0.0; 4]; 4];
    for k in 0..6 {
        let o = order_of[k];
        let m = monomials[k];
        // c_xx α_xx + c_yy α_yy = ½(c_xx + c_yy)α_⊥ + ½(c_xx − c_yy)(α_xx − α_yy)
        t[o][PERP] += -0.25 * (cx[k] + cy[k]) * m * perp;
        t[o][XY] += -0.25 * (cx[k] - cy[k]) * m * dxy;
        t[o][ZZ] += -0.5 * cz[k] * m * zz;
    }
    let b3 = beta_at_zero_exact(BetaIndex::raw(3, 1)).to_f64().unwrap_or(f64::NAN);
    let zi = alpha.zi();
    t[GRAD][ZI] = -0.5 * b3 * (zi[0] * g[0] + zi[1] * g[1]);
    Ok(PotentialBreakdown::from_terms(
        EnergyUnit::Thermal,
        &t,
        ValidityFlags::assess(&geom, None),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::u_full;
    use crate::thermal::ThermalConfig;

    fn principal(a: f64, b: f64, g: [f64; 2]) -> LocalGeometry {
        LocalGeometry::principal(1.0, a, b, g).unwrap()
    }

    #[test]
    fn flat_zero_temperature() {
        let e = eta_coefficients(&LocalGeometry::flat(2.0).unwrap(), 0.0).unwrap();
        assert_eq!(e.eta_perp, 0.125);
        assert_eq!(e.eta_zz, 0.125);
        assert_eq!(e.eta_zi, [0.0, 0.0]);
        assert_eq!(e.eta_xy, 0.0);
    }

    #[test]
    fn worked_values() {
        let e = eta_coefficients(&principal(0.1, 0.1, [0.0; 2]), 0.0).unwrap();
        let exact = 0.125 - 0.2 * 3.0 / 40.0 + 0.04 * 3.0 / 280.0 + 0.02 * 13.0 / 280.0;
        assert!((e.eta_perp - exact).abs() < 1e-16);
        assert!((e.eta_perp - 0.111_357_142_857_142_86).abs() < 1e-15);
        let e = eta_coefficients(&LocalGeometry::flat(1.0).unwrap(), 0.2).unwrap();
        assert!((e.eta_zz - (0.125 + 0.0016 / 360.0)).abs() < 1e-16);
        assert!((e.eta_zz - 0.125_004_444_444).abs() < 1e-12);
        let e = eta_coefficients(&principal(0.0, 0.0, [0.05, 0.0]), 0.0).unwrap();
        assert!((e.eta_zi[0] - 0.05 / 30.0).abs() < 1e-17);
        assert!(flagged(0.4, 0.1).flags.tau_large);
        assert!(flagged(0.1, 0.6).flags.curvature_large);
        assert!(eta_coefficients(&LocalGeometry::flat(1.0).unwrap(), -0.1).is_err());
    }

    fn flagged(tau: f64, a: f64) -> EtaCoefficients {
        eta_coefficients(&principal(a, 0.0, [0.0; 2]), tau).unwrap()
    }

    #[test]
    fn flat_plane_isotropic() {
        let u = u_retarded(&PolarizabilityTensor::isotropic(1.0), &LocalGeometry::flat(1.0).unwrap(), 0.0)
            .unwrap();
        assert_eq!(u.total, -0.375);
    }

    #[test]
    fn covariant_under_axis_swap() {
        let alpha = PolarizabilityTensor::new([[2.0, 0.0, 0.3], [0.0, 1.0, -0.2], [0.3, -0.2, 1.5]])
            .unwrap()
            .with_frame(Frame::Principal);
        let swapped = PolarizabilityTensor::new([[1.0, 0.0, -0.2], [0.0, 2.0, 0.3], [-0.2, 0.3, 1.5]])
            .unwrap()
            .with_frame(Frame::Principal);
        let u1 = u_retarded(&alpha, &principal(0.15, -0.05, [0.02, 0.01]), 0.2).unwrap();
        let u2 = u_retarded(&swapped, &principal(-0.05, 0.15, [0.01, 0.02]), 0.2).unwrap();
        assert!((u1.total - u2.total).abs() < 1e-16);
    }

    #[test]
    fn cylinder_orders_match_series() {
        // spherical particle, R2 = ∞: the 1/R and 1/R² coefficients
        let g = principal(0.1, 0.0, [0.0; 2]);
        let u = u_retarded(&PolarizabilityTensor::isotropic(1.0), &g, 0.0).unwrap();
        assert!((u.curvature1 - 0.1 * (2.0 * 3.0 / 40.0 + 1.0 / 15.0)).abs() < 1e-16);
        let c2 = -(2.0 * (3.0 / 280.0 + 13.0 / 280.0) + (-1.0 / 240.0 + 3.0 / 40.0)) * 0.01;
        assert!((u.curvature2 - c2).abs() < 1e-16);
    }

    #[test]
    fn classical_closed_form_matches_table() {
        assert_eq!(classical_coefficients_from_table(), classical_coefficients_closed_form());
    }

    #[test]
    fn classical_flat_isotropic() {
        let u = u_classical(&PolarizabilityTensor::isotropic(1.0), &LocalGeometry::flat(1.0).unwrap()).unwrap();
        assert_eq!(u.total, -0.25);
        let alpha = PolarizabilityTensor::diagonal(1.0, 0.0, 0.0).with_frame(Frame::Principal);
        let u = u_classical(&alpha, &LocalGeometry::from_radii(1.0, 10.0, f64::INFINITY, [0.0; 2]).unwrap()).unwrap();
        let expected = -0.5 * (0.125 - 3.0 / 64.0 * 0.3 + 17.0 / 128.0 * 0.01);
        assert!((u.total - expected).abs() < 1e-16);
        assert!((u.curvature1 + 0.5 * (-3.0 / 64.0 * 0.3)).abs() < 1e-17);
    }

    #[test]
    fn classical_is_the_high_temperature_slope() {
        let geom = LocalGeometry::general(1.0, [[0.12, -0.04], [-0.04, 0.03]], [0.05, -0.02]).unwrap();
        let alpha = PolarizabilityTensor::new([[1.4, 0.2, 0.3], [0.2, 0.8, -0.1], [0.3, -0.1, 1.1]]).unwrap();
        let tau = 50.0;
        let full = u_full(&alpha, &geom, &ThermalConfig::new(tau).unwrap())
            .unwrap()
            .to_thermal(tau)
            .unwrap();
        let classical = u_classical(&alpha, &geom).unwrap();
        assert!(((full.total - classical.total) / classical.total).abs() < 1e-12);
        for (x, y) in full.order_terms().iter().zip(classical.order_terms()) {
            assert!((x - y).abs() <= 1e-12 * y.abs().max(1e-300), "{x} vs {y}");
        }
    }

    /// ½β̃ of the quadratic α_⊥ bracket minus either series, over τ⁶.
    #[test]
    fn quadratic_perp_bracket_needs_fifth_order_term() {
        use crate::thermal::matsubara_beta_sum;
        // d/R1 = 0.2, R2 = ∞: s² = q = 0.04
        let mut corrected = Vec::new();
        let mut uncorrected = Vec::new();
        for tau in [0.05, 0.1, 0.2] {
            let cfg = ThermalConfig::new(tau).unwrap().with_tolerance(1e-15).unwrap();
            let sum = |p, q| matsubara_beta_sum(BetaIndex::raw(p, q), &cfg).unwrap().value;
            let exact = 0.5 * (0.04 * sum(4, 1) + 0.04 * sum(4, 3));
            let e1 = eta_orders(0.2, 0.0, [0.0; 2], tau, true).perp[2];
            let e0 = eta_orders(0.2, 0.0, [0.0; 2], tau, false).perp[2];
            corrected.push((exact - e1) / tau.powi(6));
            uncorrected.push((exact - e0) / tau.powi(6));
        }
        let spread = |v: &[f64]| {
            let (lo, hi) = v.iter().fold((f64::MAX, f64::MIN), |(l, h), x| (l.min(x.abs()), h.max(x.abs())));
            hi / lo
        };
        assert!(spread(&corrected) < 1.5, "{corrected:?}");
        assert!(spread(&uncorrected) > 3.0, "{uncorrected:?}");
    }
}
