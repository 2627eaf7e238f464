//! Special functions and half-line quadrature.
//!
//! The exponential integral is provided in two sign conventions:
//! [`exp_integral_e1`] returns the positive E₁(x) = ∫ₓ^∞ e^{−t}/t dt, and
//! [`paper_ei`] returns Ei(x) ≡ −E₁(x), the convention in which the
//! coefficient table is written.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Fixed mathematical constants used by the low-temperature expansions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MathConstants {
    pub zeta3: f64,
    pub zeta5: f64,
    pub euler_gamma: f64,
}

#[allow(clippy::excessive_precision)]
pub const CONSTANTS: MathConstants = MathConstants {
    zeta3: 1.2020569031595942854,
    zeta5: 1.0369277551433699263,
    euler_gamma: 0.57721566490153286061,
};

/// Power series below, continued fraction above.
const E1_SERIES_LIMIT: f64 = 1.5;

const LENTZ_TINY: f64 = 1e-300;
const LENTZ_MAX_ITER: usize = 2000;

/// E₁(x) = ∫ₓ^∞ e^{−t}/t dt for x > 0.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    check_positive("exp_integral_e1", x)?;
    if x <= E1_SERIES_LIMIT {
        Ok(e1_series(x))
    } else {
        Ok(scaled_en_cf(1, x) * (-x).exp())
    }
}

/// Ei(x) = −∫ₓ^∞ e^{−t}/t dt = −E₁(x).
pub fn paper_ei(x: f64) -> Result<f64> {
    check_positive("paper_ei", x)?;
    Ok(-exp_integral_e1(x)?)
}

/// eˣ·E₁(x), finite for every x > 0 without overflow.
pub fn scaled_exp_integral_e1(x: f64) -> Result<f64> {
    check_positive("scaled_exp_integral_e1", x)?;
    if x <= E1_SERIES_LIMIT {
        Ok(e1_series(x) * x.exp())
    } else {
        Ok(scaled_en_cf(1, x))
    }
}

/// eˣ·Eₙ(x) with Eₙ(x) = ∫₁^∞ e^{−xt}/tⁿ dt, for n ≥ 1 and x ≥ 1.
///
/// Evaluated by the modified Lentz algorithm on the continued fraction
/// `1/(x+n− 1·n/(x+n+2− 2(n+1)/(x+n+4− …)))`, which converges quickly
/// for x ≥ 1 and carries no cancellation.
pub fn scaled_exp_integral_en(n: u32, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain {
            function: "scaled_exp_integral_en",
            value: 0.0,
            expected: "order n >= 1",
        });
    }
    if !(x >= 1.0) || !x.is_finite() {
        return Err(Error::Domain {
            function: "scaled_exp_integral_en",
            value: x,
            expected: "x >= 1",
        });
    }
    Ok(scaled_en_cf(n, x))
}

fn check_positive(function: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && !x.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain {
            function,
            value: x,
            expected: "x > 0",
        })
    }
}

fn e1_series(x: f64) -> f64 {
    // E₁(x) = −γ − ln x + Σ_{k≥1} (−1)^{k+1} xᵏ/(k·k!)
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut power = x; // (−1)^{k+1} xᵏ/k!
    for k in 1..200 {
        let term = power / k as f64;
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
        power *= -x / (k + 1) as f64;
    }
    -CONSTANTS.euler_gamma - x.ln() + sum
}

fn scaled_en_cf(n: u32, x: f64) -> f64 {
    let nm1 = f64::from(n - 1);
    let mut b = x + f64::from(n);
    let mut c = 1.0 / LENTZ_TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=LENTZ_MAX_ITER {
        let i = i as f64;
        let an = -i * (nm1 + i);
        b += 2.0;
        d = an * d + b;
        if d.abs() < LENTZ_TINY {
            d = LENTZ_TINY;
        }
        d = 1.0 / d;
        c = b + an / c;
        if c.abs() < LENTZ_TINY {
            c = LENTZ_TINY;
        }
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    h
}

/// Upper bound |f(ξ)| ≤ e^{−rate·ξ}·Σ coeffs[k]·ξᵏ on [0, ∞).
///
/// All coefficients must be non-negative; the tail integral of the envelope
/// is then an exact finite sum of incomplete gamma functions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpPolyBound {
    pub rate: f64,
    pub coeffs: Vec<f64>,
}

impl ExpPolyBound {
    pub fn new(rate: f64, coeffs: Vec<f64>) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::Domain {
                function: "ExpPolyBound::new",
                value: rate,
                expected: "rate > 0",
            });
        }
        if coeffs.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::Validation(
                "envelope coefficients must be finite and non-negative".into(),
            ));
        }
        Ok(Self { rate, coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Envelope value at ξ.
    pub fn value(&self, xi: f64) -> f64 {
        horner(&self.coeffs, xi) * (-self.rate * xi).exp()
    }

    /// Polynomial factor alone, without the exponential.
    pub fn poly(&self, xi: f64) -> f64 {
        horner(&self.coeffs, xi)
    }

    /// ∫_cut^∞ of the envelope.
    pub fn tail(&self, cut: f64) -> f64 {
        // ∫_X^∞ ξᵏ e^{−rξ} dξ = e^{−rX} Σ_{j=0}^{k} k!/j! · X^j / r^{k−j+1}
        let r = self.rate;
        let mut total = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let inner = if cut == 0.0 {
                factorial(k) / r.powi(k as i32 + 1)
            } else {
                // j = k down to 0: k!/j! · X^j / r^{k−j+1}
                let mut term = cut.powi(k as i32) / r;
                let mut acc = term;
                for j in (1..=k).rev() {
                    term *= j as f64 / (cut * r);
                    acc += term;
                }
                acc
            };
            total += c * inner;
        }
        total * (-r * cut).exp()
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

pub(crate) fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Outcome of a half-line integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Estimated error of the finite part plus the rigorous tail bound.
    pub error_bound: f64,
    /// Finite upper limit of the adaptive part.
    pub cutoff: f64,
    pub subdivisions: usize,
}

const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7.
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_SUBDIVISIONS: usize = 5000;
const MAX_CUTOFF: f64 = 1e4;

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * KRONROD_WEIGHTS[7];
    let mut gauss = fc * GAUSS_WEIGHTS[3];
    for (i, (&x, &wk)) in GK_NODES[..7].iter().zip(&KRONROD_WEIGHTS[..7]).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += wk * pair;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    budget: &mut usize,
) -> (f64, f64, bool) {
    let mut heap = BinaryHeap::new();
    let first = gauss_kronrod(f, a, b);
    let mut value = first.value;
    let mut error = first.error;
    heap.push(first);
    loop {
        if error <= rel_tol * value.abs() || error <= f64::MIN_POSITIVE {
            return (value, error, true);
        }
        if *budget == 0 {
            return (value, error, false);
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval at floating-point resolution
            heap.push(worst);
            return (value, error, false);
        }
        let left = gauss_kronrod(f, worst.a, mid);
        let right = gauss_kronrod(f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        *budget -= 1;
        if heap.len() % 64 == 0 {
            // refresh running sums against drift
            value = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum();
        }
    }
}

/// ∫₀^∞ f(ξ) dξ to relative tolerance `rel_tol`.
///
/// `bound` must dominate |f| on the whole half-line. The integral is split
/// into an adaptive Gauss–Kronrod (7/15) part on [0, Ξ] and a tail whose
/// magnitude is bounded by the envelope integral; Ξ grows until that bound
/// is below a quarter of the requested error.
pub fn quad_halfline<F: Fn(f64) -> f64>(
    f: F,
    rel_tol: f64,
    bound: &ExpPolyBound,
) -> Result<QuadResult> {
    if !(1e-14..=1e-3).contains(&rel_tol) {
        return Err(Error::Domain {
            function: "quad_halfline",
            value: rel_tol,
            expected: "1e-14 <= rel_tol <= 1e-3",
        });
    }
    let mut cutoff = 4.0;
    let mut budget = MAX_SUBDIVISIONS;
    loop {
        let (value, err, ok) = adaptive(&f, 0.0, cutoff, 0.5 * rel_tol, &mut budget);
        let tail = bound.tail(cutoff);
        let error_bound = err + tail;
        if !ok {
            return Err(Error::Convergence {
                what: "quad_halfline",
                estimate: value,
                error_bound,
            });
        }
        if tail <= 0.25 * rel_tol * value.abs() || (value == 0.0 && tail == 0.0) {
            return Ok(QuadResult {
                value,
                error_bound,
                cutoff,
                subdivisions: MAX_SUBDIVISIONS - budget,
            });
        }
        cutoff *= 1.5;
        if cutoff > MAX_CUTOFF {
            return Err(Error::Convergence {
                what: "quad_halfline",
                estimate: value,
                error_bound,
            });
        }
    }
}
