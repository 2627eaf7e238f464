//! Coefficient functions β^(p)_q(ξ) for a perfectly conducting surface.
//!
//! Each coefficient is `exp_part(ξ)·e^{−2ξ} + ei_part(ξ)·Ei(2ξ)` with exact
//! rational polynomials. Large arguments go through a cancellation-free
//! route: with g(x) = eˣE₁(x) and x = 2ξ,
//!
//! ```text
//! β·e^{2ξ} = P(ξ) − Q(ξ)·g(2ξ)
//!          = [P − Q·g_K](ξ) − Q(ξ)·r_K(2ξ)
//! ```
//!
//! where g_K is the K-term asymptotic sum of g and r_K = (−1)^K K! x^{−K}
//! eˣE_{K+1}(x) its exact remainder. The bracket `P − Q·g_K` is a Laurent
//! polynomial whose growing powers are combined in rational arithmetic.

use std::fmt;
use std::sync::OnceLock;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{self, ExpPolyBound};

/// Switch from direct evaluation to the remainder form.
pub const ASYMPTOTIC_CROSSOVER: f64 = 15.0;

/// Number of asymptotic terms moved into the exact Laurent bracket.
const ASYMPTOTIC_TERMS: usize = 8;

/// Identifies one row β^(p)_q of the coefficient table.
///
/// `p` counts derivatives of the height profile. The single p = 3 row is
/// stored as q = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BetaIndex {
    p: u8,
    q: u8,
}

impl BetaIndex {
    pub const ALL: [BetaIndex; 11] = [
        BetaIndex { p: 0, q: 1 },
        BetaIndex { p: 0, q: 2 },
        BetaIndex { p: 2, q: 1 },
        BetaIndex { p: 2, q: 2 },
        BetaIndex { p: 2, q: 3 },
        BetaIndex { p: 3, q: 1 },
        BetaIndex { p: 4, q: 1 },
        BetaIndex { p: 4, q: 2 },
        BetaIndex { p: 4, q: 3 },
        BetaIndex { p: 4, q: 4 },
        BetaIndex { p: 4, q: 5 },
    ];

    pub fn new(p: u8, q: u8) -> Result<Self> {
        let idx = BetaIndex { p, q };
        if Self::ALL.contains(&idx) {
            Ok(idx)
        } else {
            Err(Error::InvalidIndex { p, q })
        }
    }

    pub(crate) const fn raw(p: u8, q: u8) -> Self {
        BetaIndex { p, q }
    }

    pub fn p(self) -> u8 {
        self.p
    }

    pub fn q(self) -> u8 {
        self.q
    }

    /// Position in [`BetaIndex::ALL`].
    pub fn ordinal(self) -> usize {
        Self::ALL
            .iter()
            .position(|&i| i == self)
            .expect("BetaIndex values are always table rows")
    }

    /// Whether the row has a non-vanishing Ei column.
    pub fn has_ei_part(self) -> bool {
        self.p >= 2
    }
}

impl fmt::Display for BetaIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.p, self.q)
    }
}

pub type Rational = Ratio<i64>;

/// Polynomial in ξ with exact rational coefficients, lowest power first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatPoly(Vec<Rational>);

impl RatPoly {
    fn scaled(scale: (i64, i64), ints: &[i64]) -> Self {
        let s = Rational::new(scale.0, scale.1);
        RatPoly(ints.iter().map(|&c| s * c).collect())
    }

    fn from_ratios(coeffs: &[(i64, i64)]) -> Self {
        RatPoly(coeffs.iter().map(|&(n, d)| Rational::new(n, d)).collect())
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.0
    }

    /// Coefficient of ξᵏ (zero beyond the stored length).
    pub fn coeff(&self, k: usize) -> Rational {
        self.0.get(k).copied().unwrap_or_else(Rational::zero)
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.iter().rposition(|c| !c.is_zero())
    }

    /// Lowest power with a non-zero coefficient.
    pub fn lowest_power(&self) -> Option<usize> {
        self.0.iter().position(|c| !c.is_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn eval(&self, x: f64) -> f64 {
        specfun::horner(&self.to_f64(), x)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

/// The two columns of one table row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BetaPolyPair {
    /// Multiplies e^{−2ξ}.
    pub exp_part: RatPoly,
    /// Multiplies Ei(2ξ) = −E₁(2ξ).
    pub ei_part: RatPoly,
}

/// Exact polynomial pair of one coefficient function.
pub fn beta_poly(idx: BetaIndex) -> BetaPolyPair {
    let none = RatPoly(Vec::new());
    let (exp_part, ei_part) = match (idx.p, idx.q) {
        (0, 1) => (RatPoly::scaled((1, 8), &[1, 2, 4]), none),
        (0, 2) => (RatPoly::scaled((1, 4), &[1, 2]), none),
        (2, 1) => (
            RatPoly::scaled((-1, 32), &[3, 6, 6, 4]),
            RatPoly::from_ratios(&[(0, 1), (0, 1), (0, 1), (0, 1), (-1, 4)]),
        ),
        (2, 2) => (
            RatPoly::scaled((-1, 16), &[1, 2, -2, 4]),
            RatPoly::from_ratios(&[(0, 1), (0, 1), (1, 1), (0, 1), (-1, 2)]),
        ),
        (2, 3) => (
            RatPoly::scaled((-1, 32), &[3, 6, 2, -4]),
            RatPoly::from_ratios(&[(0, 1), (0, 1), (0, 1), (0, 1), (1, 4)]),
        ),
        (3, 1) => (
            RatPoly::scaled((1, 32), &[1, 2, -2, 4]),
            // −(ξ²/4)(2 − ξ²)
            RatPoly::from_ratios(&[(0, 1), (0, 1), (-1, 2), (0, 1), (1, 4)]),
        ),
        (4, 1) => (
            RatPoly::scaled((1, 384), &[3, 6, 15, 22, 2, -4]),
            // (ξ⁴/48)(6 − ξ²)
            RatPoly::from_ratios(&[(0, 1), (0, 1), (0, 1), (0, 1), (1, 8), (0, 1), (-1, 48)]),
        ),
        (4, 2) => (
            RatPoly::scaled((-1, 960), &[15, 542, 259, -546, -14, 28]),
            // −ξ²(2 − 7ξ²/6 + 7ξ⁴/120)
            RatPoly::from_ratios(&[(0, 1), (0, 1), (-2, 1), (0, 1), (7, 6), (0, 1), (-7, 120)]),
        ),
        (4, 3) => (
            RatPoly::scaled((1, 192), &[15, 30, -9, 70, 2, -4]),
            // (ξ⁴/24)(18 − ξ²)
            RatPoly::from_ratios(&[(0, 1), (0, 1), (0, 1), (0, 1), (3, 4), (0, 1), (-1, 24)]),
        ),
        (4, 4) => (
            RatPoly::scaled((1, 480), &[45, 218, -59, 146, 14, -28]),
            // (ξ⁴/60)(40 − 7ξ²)
            RatPoly::from_ratios(&[(0, 1), (0, 1), (0, 1), (0, 1), (2, 3), (0, 1), (-7, 60)]),
        ),
        (4, 5) => (
            RatPoly::scaled((1, 96), &[9, 18, -27, 50, -2, 4]),
            // ξ⁴(1 + ξ²/12)
            RatPoly::from_ratios(&[(0, 1), (0, 1), (0, 1), (0, 1), (1, 1), (0, 1), (1, 12)]),
        ),
        _ => unreachable!("BetaIndex is validated on construction"),
    };
    BetaPolyPair { exp_part, ei_part }
}

/// β^(p)_q(0) as an exact rational.
pub fn beta_at_zero_exact(idx: BetaIndex) -> Rational {
    beta_poly(idx).exp_part.coeff(0)
}

/// β^(p)_q(ξ) for ξ ≥ 0.
pub fn beta_eval(idx: BetaIndex, xi: f64) -> Result<f64> {
    if !(xi >= 0.0) {
        return Err(Error::Domain {
            function: "beta_eval",
            value: xi,
            expected: "xi >= 0",
        });
    }
    if xi == 0.0 {
        return Ok(beta_at_zero_exact(idx).to_f64().unwrap_or(f64::NAN));
    }
    if xi >= ASYMPTOTIC_CROSSOVER {
        return beta_eval_asymptotic(idx, xi);
    }
    Ok(beta_eval_direct(idx, xi))
}

/// Direct column formula; accurate below the crossover.
pub(crate) fn beta_eval_direct(idx: BetaIndex, xi: f64) -> f64 {
    let tables = tables();
    let t = &tables[idx.ordinal()];
    let x = 2.0 * xi;
    let p = specfun::horner(&t.exp_part, xi);
    if t.ei_part.is_empty() {
        return p * (-x).exp();
    }
    let q = specfun::horner(&t.ei_part, xi);
    if x <= 1.5 {
        let e1 = specfun::exp_integral_e1(x).expect("x > 0");
        p * (-x).exp() - q * e1
    } else {
        let g = specfun::scaled_exp_integral_e1(x).expect("x > 0");
        (p - q * g) * (-x).exp()
    }
}

/// Large-ξ route through the exact-remainder bracket.
pub fn beta_eval_asymptotic(idx: BetaIndex, xi: f64) -> Result<f64> {
    if !(xi >= ASYMPTOTIC_CROSSOVER) {
        return Err(Error::Domain {
            function: "beta_eval_asymptotic",
            value: xi,
            expected: "xi >= 15",
        });
    }
    Ok(asymptotic_bracket(idx, xi) * (-2.0 * xi).exp())
}

/// e^{2ξ}·β(ξ) via the Laurent bracket plus exact remainder.
pub(crate) fn asymptotic_bracket(idx: BetaIndex, xi: f64) -> f64 {
    let tables = tables();
    let t = &tables[idx.ordinal()];
    let laurent = specfun::horner(&t.laurent_pos, xi) + specfun::horner(&t.laurent_neg, 1.0 / xi) / xi;
    if t.ei_part.is_empty() {
        return laurent;
    }
    let x = 2.0 * xi;
    let k = ASYMPTOTIC_TERMS as i32;
    let sign = if ASYMPTOTIC_TERMS % 2 == 0 { 1.0 } else { -1.0 };
    let kfact: f64 = (1..=ASYMPTOTIC_TERMS).map(|i| i as f64).product();
    let en = specfun::scaled_exp_integral_en(ASYMPTOTIC_TERMS as u32 + 1, x).expect("x >= 30");
    let remainder = sign * kfact * en / x.powi(k);
    laurent - specfun::horner(&t.ei_part, xi) * remainder
}

/// Envelope |β(ξ)| ≤ e^{−2ξ}·M(ξ) with non-negative coefficients.
///
/// Uses E₁(x) ≤ e^{−x}/x, so the Ei column contributes |q_k|·ξ^{k−1}/2.
pub fn beta_envelope(idx: BetaIndex) -> ExpPolyBound {
    let t = &tables()[idx.ordinal()];
    let n = t.exp_part.len().max(t.ei_part.len());
    let mut coeffs = vec![0.0; n];
    for (k, c) in t.exp_part.iter().enumerate() {
        coeffs[k] += c.abs();
    }
    for (k, c) in t.ei_part.iter().enumerate() {
        if *c != 0.0 {
            coeffs[k - 1] += 0.5 * c.abs();
        }
    }
    while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
    ExpPolyBound::new(2.0, coeffs).expect("non-negative by construction")
}

/// Exact Laurent coefficients of P − Q·g_K, split into ξ^{≥0} and ξ^{<0}.
///
/// Returned as (non-negative powers lowest first, negative powers with
/// index m holding the coefficient of ξ^{−(m+1)}).
pub fn laurent_bracket_exact(idx: BetaIndex) -> (Vec<Rational>, Vec<Rational>) {
    let pair = beta_poly(idx);
    let deg_q = pair.ei_part.coeffs().len();
    let deg_p = pair.exp_part.coeffs().len();
    let mut pos = vec![Rational::zero(); deg_p.max(deg_q)];
    let mut neg = vec![Rational::zero(); ASYMPTOTIC_TERMS + 1];
    for (k, c) in pair.exp_part.coeffs().iter().enumerate() {
        pos[k] += *c;
    }
    // g_K(2ξ) = Σ_{k<K} (−1)^k k! / (2^{k+1} ξ^{k+1})
    let mut fact: i64 = 1;
    for k in 0..ASYMPTOTIC_TERMS {
        if k > 0 {
            fact *= k as i64;
        }
        let sign = if k % 2 == 0 { 1 } else { -1 };
        let gk = Rational::new(sign * fact, 1i64 << (k + 1));
        for (j, qj) in pair.ei_part.coeffs().iter().enumerate() {
            if qj.is_zero() {
                continue;
            }
            let power = j as i64 - k as i64 - 1;
            let contribution = -*qj * gk;
            if power >= 0 {
                pos[power as usize] += contribution;
            } else {
                neg[(-power - 1) as usize] += contribution;
            }
        }
    }
    (pos, neg)
}

struct RowTable {
    exp_part: Vec<f64>,
    ei_part: Vec<f64>,
    laurent_pos: Vec<f64>,
    laurent_neg: Vec<f64>,
}

fn tables() -> &'static [RowTable] {
    static TABLES: OnceLock<Vec<RowTable>> = OnceLock::new();
    TABLES.get_or_init(|| {
        BetaIndex::ALL
            .iter()
            .map(|&idx| {
                let pair = beta_poly(idx);
                let (pos, neg) = laurent_bracket_exact(idx);
                let to_f = |v: &[Rational]| v.iter().map(|c| c.to_f64().unwrap()).collect::<Vec<_>>();
                RowTable {
                    exp_part: pair.exp_part.to_f64(),
                    ei_part: if pair.ei_part.is_zero() { Vec::new() } else { pair.ei_part.to_f64() },
                    laurent_pos: to_f(&pos),
                    laurent_neg: to_f(&neg),
                }
            })
            .collect()
    })
}
