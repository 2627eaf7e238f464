//! Matsubara sums of the coefficient functions.
//!
//! With τ = d/λ_T and ξ_n = nτ, the thermal coefficient is
//!
//! ```text
//! β̃(τ) = τ·[½β(0) + Σ_{n≥1} β(nτ)]
//! ```
//!
//! The ½ weight of the static term lives here. β̃ tends to ∫₀^∞ β(ξ)dξ as
//! τ → 0 and to ½τβ(0) as τ → ∞.

use serde::Serialize;

use crate::beta::{beta_at_zero_exact, beta_envelope, beta_eval, BetaIndex, Rational};
use crate::error::{Error, Result};
use crate::specfun::quad_halfline;
use num_traits::ToPrimitive;

pub const DEFAULT_SUM_REL_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_TERMS: usize = 1_000_000;

/// Temperature, as τ = d/λ_T, plus summation controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalConfig {
    pub tau: f64,
    pub sum_rel_tol: f64,
    pub max_terms: usize,
}

impl ThermalConfig {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::Domain {
                function: "ThermalConfig::new",
                value: tau,
                expected: "finite tau >= 0",
            });
        }
        Ok(Self {
            tau,
            sum_rel_tol: DEFAULT_SUM_REL_TOL,
            max_terms: DEFAULT_MAX_TERMS,
        })
    }

    pub fn zero_temperature() -> Self {
        Self::new(0.0).expect("zero is valid")
    }

    pub fn with_tolerance(mut self, rel_tol: f64) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(Error::Domain {
                function: "ThermalConfig::with_tolerance",
                value: rel_tol,
                expected: "0 < rel_tol < 1",
            });
        }
        self.sum_rel_tol = rel_tol;
        Ok(self)
    }

    pub fn with_max_terms(mut self, max_terms: usize) -> Self {
        self.max_terms = max_terms;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        self.tau = Self::new(tau)?.tau;
        Ok(self)
    }

    /// Tolerance handed to the quadrature on the τ = 0 path.
    pub fn quad_tolerance(&self) -> f64 {
        self.sum_rel_tol.clamp(1e-14, 1e-3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaSumResult {
    /// β̃(τ) including the half-weighted static term.
    pub value: f64,
    /// Matsubara terms included, counting n = 0.
    pub terms_used: usize,
    /// Rigorous bound on the omitted tail (already scaled by τ).
    pub truncation_bound: f64,
    /// τ·Σ_{n≥1} β(nτ), summed separately so that it keeps full relative
    /// precision when it is tiny compared to the static term.
    pub excess: f64,
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// β̃(τ) for τ > 0 by direct summation with a rigorous tail bound.
///
/// After term n the remaining terms are bounded by the index envelope
/// e^{−2ξ}M(ξ): consecutive envelope values shrink at least by
/// ρ = ((m+1)/m)^deg·e^{−2τ}, so the tail is below M(mτ)e^{−2mτ}/(1−ρ)
/// once ρ < 1.
pub fn matsubara_beta_sum(idx: BetaIndex, cfg: &ThermalConfig) -> Result<BetaSumResult> {
    let tau = cfg.tau;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Domain {
            function: "matsubara_beta_sum",
            value: tau,
            expected: "tau > 0 (use beta_t0_integral at tau = 0)",
        });
    }
    let envelope = beta_envelope(idx);
    let degree = envelope.degree() as i32;
    let static_term = 0.5 * beta_eval(idx, 0.0)?;
    let decay = (-2.0 * tau).exp();

    let mut excess = Accumulator::default();
    let mut n: usize = 1;
    loop {
        if n >= cfg.max_terms {
            return Err(Error::Convergence {
                what: "matsubara_beta_sum",
                estimate: tau * (static_term + excess.value()),
                error_bound: f64::INFINITY,
            });
        }
        excess.add(beta_eval(idx, n as f64 * tau)?);
        let value = tau * (static_term + excess.value());

        let m = (n + 1) as f64;
        let ratio = ((m + 1.0) / m).powi(degree) * decay;
        if ratio < 1.0 {
            let xi = m * tau;
            let tail = tau * envelope.poly(xi) * (-2.0 * xi).exp() / (1.0 - ratio);
            if tail <= cfg.sum_rel_tol * value.abs() {
                return Ok(BetaSumResult {
                    value,
                    terms_used: n + 1,
                    truncation_bound: tail,
                    excess: tau * excess.value(),
                });
            }
        }
        n += 1;
    }
}

/// β̃(0) = ∫₀^∞ β(ξ) dξ.
pub fn beta_t0_integral(idx: BetaIndex, rel_tol: f64) -> Result<f64> {
    let envelope = beta_envelope(idx);
    let r = quad_halfline(
        |xi| beta_eval(idx, xi).expect("quadrature nodes are non-negative"),
        rel_tol,
        &envelope,
    )?;
    Ok(r.value)
}

/// β(0), the static Matsubara term without its ½ weight.
pub fn beta_classical(idx: BetaIndex) -> f64 {
    beta_classical_exact(idx).to_f64().unwrap_or(f64::NAN)
}

pub fn beta_classical_exact(idx: BetaIndex) -> Rational {
    beta_at_zero_exact(idx)
}

/// β̃(τ)/β̃(0) on a grid of strictly positive, increasing τ.
pub fn normalized_beta_curve(
    idx: BetaIndex,
    tau_grid: &[f64],
    cfg: &ThermalConfig,
) -> Result<Vec<(f64, f64)>> {
    validate_tau_grid(tau_grid)?;
    let t0 = beta_t0_integral(idx, cfg.quad_tolerance())?;
    if t0 == 0.0 {
        return Err(Error::Normalization);
    }
    tau_grid
        .iter()
        .map(|&tau| {
            let c = cfg.with_tau(tau)?;
            Ok((tau, matsubara_beta_sum(idx, &c)?.value / t0))
        })
        .collect()
}

pub fn validate_tau_grid(tau_grid: &[f64]) -> Result<()> {
    if let Some(&bad) = tau_grid.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        return Err(Error::Domain {
            function: "normalized_beta_curve",
            value: bad,
            expected: "strictly positive tau grid",
        });
    }
    if tau_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation("tau grid must be strictly increasing".into()));
    }
    Ok(())
}

/// One value per coefficient function, indexed by [`BetaIndex::ordinal`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaTildeSet {
    values: [f64; 11],
    tau: Option<f64>,
}

impl BetaTildeSet {
    pub fn from_fn<F: FnMut(BetaIndex) -> Result<f64>>(mut f: F) -> Result<Self> {
        let mut values = [0.0; 11];
        for (slot, idx) in values.iter_mut().zip(BetaIndex::ALL) {
            *slot = f(idx)?;
        }
        Ok(Self { values, tau: None })
    }

    /// β̃(τ) at the configured temperature; τ = 0 routes to the integrals.
    pub fn compute(cfg: &ThermalConfig) -> Result<Self> {
        let set = if cfg.tau == 0.0 {
            Self::zero_temperature(cfg.quad_tolerance())?
        } else {
            Self::from_fn(|idx| Ok(matsubara_beta_sum(idx, cfg)?.value))?
        };
        Ok(set.at_tau(cfg.tau))
    }

    pub fn zero_temperature(rel_tol: f64) -> Result<Self> {
        Ok(Self::from_fn(|idx| beta_t0_integral(idx, rel_tol))?.at_tau(0.0))
    }

    /// Records the temperature the values belong to.
    pub fn at_tau(mut self, tau: f64) -> Self {
        self.tau = Some(tau);
        self
    }

    pub fn tau(&self) -> Option<f64> {
        self.tau
    }

    /// β(0) for every index. Contracting this set gives the static term
    /// of the free energy before its ½ weight.
    pub fn static_values() -> Self {
        Self::from_fn(|idx| Ok(beta_classical(idx))).expect("infallible")
    }

    /// τ·Σ_{n≥1} β(nτ): the departure of β̃ from its classical asymptote.
    pub fn excess(cfg: &ThermalConfig) -> Result<Self> {
        Self::from_fn(|idx| Ok(matsubara_beta_sum(idx, cfg)?.excess))
    }

    pub fn get(&self, idx: BetaIndex) -> f64 {
        self.values[idx.ordinal()]
    }

    pub(crate) fn at(&self, p: u8, q: u8) -> f64 {
        self.get(BetaIndex::raw(p, q))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut values = self.values;
        values.iter_mut().for_each(|v| *v *= factor);
        Self { values, tau: self.tau }
    }
}
