//! Extended-precision reference arithmetic for the integration tests.
//!
//! Binary fixed point with 704 fractional bits (about 212 decimal digits);
//! the Euler constant is carried to 100 digits, which bounds the E₁ series
//! at roughly 1e-100 absolute.

#![allow(dead_code)]

use std::ops::{Add, Mul, Neg, Sub};

use curvcp::beta::{beta_poly, RatPoly};
use curvcp::BetaIndex;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

const FRAC_BITS: usize = 704;

const EULER_GAMMA_100: &str =
    "5772156649015328606065120900824024310421593359399235988057672348848677267776646709369470632917467495";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fx(BigInt);

impl Fx {
    fn one_raw() -> BigInt {
        BigInt::one() << FRAC_BITS
    }

    pub fn zero() -> Self {
        Fx(BigInt::zero())
    }

    pub fn from_int(n: i64) -> Self {
        Fx(BigInt::from(n) << FRAC_BITS)
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        Fx((BigInt::from(n) << FRAC_BITS) / BigInt::from(d))
    }

    /// Exact conversion of a finite double.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite());
        if x == 0.0 {
            return Self::zero();
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let mant = if exp == 0 {
            (bits & ((1u64 << 52) - 1)) << 1
        } else {
            (bits & ((1u64 << 52) - 1)) | (1u64 << 52)
        };
        let shift = exp - 1075 + FRAC_BITS as i64;
        let m = BigInt::from(mant) * sign;
        Fx(if shift >= 0 { m << shift as usize } else { m >> (-shift) as usize })
    }

    pub fn to_f64(&self) -> f64 {
        let bits = self.0.bits() as i64;
        // keep 64 significant bits, then scale exactly
        let drop = (bits - 64).max(0);
        let top = (&self.0 >> drop as usize).to_f64().unwrap();
        top * 2f64.powi((drop - FRAC_BITS as i64) as i32)
    }

    pub fn div(&self, other: &Fx) -> Fx {
        Fx((&self.0 << FRAC_BITS) / &other.0)
    }

    pub fn div_int(&self, n: i64) -> Fx {
        Fx(&self.0 / BigInt::from(n))
    }

    pub fn mul_int(&self, n: i64) -> Fx {
        Fx(&self.0 * BigInt::from(n))
    }

    pub fn abs(&self) -> Fx {
        Fx(self.0.abs())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn shr(&self, k: usize) -> Fx {
        Fx(&self.0 >> k)
    }

    pub fn euler_gamma() -> Fx {
        let digits: BigInt = EULER_GAMMA_100.parse().unwrap();
        let scale = BigInt::from(10).pow(EULER_GAMMA_100.len() as u32);
        Fx((digits << FRAC_BITS) / scale)
    }

    /// e^x by halving until |x| < 2⁻¹², Taylor series, then squaring.
    pub fn exp(&self) -> Fx {
        let mut halvings = 12usize;
        let mut mag = self.0.bits() as i64 - FRAC_BITS as i64;
        while mag > -12 {
            halvings += 1;
            mag -= 1;
        }
        let r = self.shr(halvings);
        let mut sum = Fx(Self::one_raw());
        let mut term = Fx(Self::one_raw());
        let mut k = 1i64;
        loop {
            term = (&term * &r).div_int(k);
            if term.is_zero() {
                break;
            }
            sum = &sum + &term;
            k += 1;
        }
        for _ in 0..halvings {
            sum = &sum * &sum;
        }
        sum
    }

    /// 2·atanh(y) for |y| < 1.
    fn two_atanh(y: &Fx) -> Fx {
        let y2 = y * y;
        let mut pow = y.clone();
        let mut sum = Fx::zero();
        let mut k = 1i64;
        loop {
            let t = pow.div_int(k);
            if t.is_zero() {
                break;
            }
            sum = &sum + &t;
            pow = &pow * &y2;
            k += 2;
        }
        sum.mul_int(2)
    }

    pub fn ln2() -> Fx {
        Self::two_atanh(&Fx::from_ratio(1, 3))
    }

    pub fn ln(&self) -> Fx {
        assert!(self.0.is_positive());
        // x = m·2^e with m in [1, 2)
        let e = self.0.bits() as i64 - 1 - FRAC_BITS as i64;
        let m = if e >= 0 {
            Fx(&self.0 >> e as usize)
        } else {
            Fx(&self.0 << (-e) as usize)
        };
        let one = Fx(Self::one_raw());
        let y = (&m - &one).div(&(&m + &one));
        &Self::two_atanh(&y) + &Self::ln2().mul_int(e)
    }

    /// E₁(x) = −γ − ln x − Σ_{k≥1} (−x)^k/(k·k!), x > 0.
    pub fn e1(&self) -> Fx {
        let mut term = Fx(Self::one_raw()); // (−x)^k/k!
        let mut sum = Fx::zero();
        let mut k = 1i64;
        loop {
            term = -(&term * self).div_int(k);
            let t = term.div_int(k);
            if t.is_zero() && k > 2 {
                break;
            }
            sum = &sum + &t;
            k += 1;
        }
        -(&(&Self::euler_gamma() + &self.ln()) + &sum)
    }
}

impl<'a> Add<&'a Fx> for &'a Fx {
    type Output = Fx;
    fn add(self, o: &Fx) -> Fx {
        Fx(&self.0 + &o.0)
    }
}

impl<'a> Sub<&'a Fx> for &'a Fx {
    type Output = Fx;
    fn sub(self, o: &Fx) -> Fx {
        Fx(&self.0 - &o.0)
    }
}

impl<'a> Mul<&'a Fx> for &'a Fx {
    type Output = Fx;
    fn mul(self, o: &Fx) -> Fx {
        Fx((&self.0 * &o.0) >> FRAC_BITS)
    }
}

impl Neg for Fx {
    type Output = Fx;
    fn neg(self) -> Fx {
        Fx(-self.0)
    }
}

fn poly_hp(p: &RatPoly, x: &Fx) -> Fx {
    let mut acc = Fx::zero();
    for c in p.coeffs().iter().rev() {
        let c = Fx::from_ratio(*c.numer(), *c.denom());
        acc = &(&acc * x) + &c;
    }
    acc
}

/// β^(p)_q(ξ) = P(ξ)e^{−2ξ} − Q(ξ)E₁(2ξ) in extended precision.
pub fn beta_hp(idx: BetaIndex, xi: f64) -> f64 {
    let pair = beta_poly(idx);
    let x = Fx::from_f64(xi);
    let two_x = x.mul_int(2);
    let mut v = &poly_hp(&pair.exp_part, &x) * &(-two_x.clone()).exp();
    if !pair.ei_part.is_zero() {
        v = &v - &(&poly_hp(&pair.ei_part, &x) * &two_x.e1());
    }
    v.to_f64()
}

pub fn e1_hp(x: f64) -> f64 {
    Fx::from_f64(x).e1().to_f64()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}
