//! Double-double arithmetic: unevaluated sums `hi + lo` of two `f64`,
//! giving roughly 31 significant decimal digits.
//!
//! The alternating series evaluated in [`crate::specfun`] cancel down to
//! `~1e-20` of their largest term for the argument ranges the truncation
//! policy allows, which is far below what plain f64 summation can resolve.
//! Everything here is therefore sized for absolute term errors near 1e-30:
//! basic arithmetic (Dekker/Knuth error-free transforms), `exp`, `ln`,
//! `sin(pi x)`, and a Stirling-based `ln Gamma` with argument shifting.

use std::sync::OnceLock;

/// A double-double number `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    /// ln 2 to double-double precision.
    pub const LN2: Dd = Dd {
        hi: 0.693_147_180_559_945_3,
        lo: 2.319_046_813_846_299_6e-17,
    };
    /// pi to double-double precision.
    pub const PI: Dd = Dd {
        hi: 3.141_592_653_589_793,
        lo: 1.224_646_799_147_353_2e-16,
    };
    /// ln(2 pi) / 2 to double-double precision.
    pub const HALF_LN_2PI: Dd = Dd {
        hi: 0.918_938_533_204_672_8,
        lo: -3.878_294_158_067_241_4e-17,
    };

    #[inline]
    pub fn from_f64(a: f64) -> Dd {
        Dd { hi: a, lo: 0.0 }
    }

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Dd {
        let (s, e) = quick_two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn add_f64(self, b: f64) -> Dd {
        let (s1, s2) = two_sum(self.hi, b);
        let (hi, lo) = quick_two_sum(s1, s2 + self.lo);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, b: Dd) -> Dd {
        self.add(b.neg())
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    #[inline]
    pub fn mul(self, b: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, b.hi);
        let p2 = p2 + self.hi * b.lo + self.lo * b.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p1, p2 + self.lo * b);
        Dd { hi, lo }
    }

    #[inline]
    pub fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self.sub(b.mul_f64(q1));
        let q2 = r.hi / b.hi;
        let r = r.sub(b.mul_f64(q2));
        let q3 = r.hi / b.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd::new(s, e + q3)
    }

    /// Exact ratio of two small integers.
    pub fn from_ratio(num: i64, den: i64) -> Dd {
        Dd::from_f64(num as f64).div(Dd::from_f64(den as f64))
    }

    /// Exact product of two f64 (error-free transform).
    #[inline]
    pub fn mul_exact(a: f64, b: f64) -> Dd {
        let (hi, lo) = two_prod(a, b);
        Dd { hi, lo }
    }

    /// Exact sum of two f64 (error-free transform).
    #[inline]
    pub fn sum2(a: f64, b: f64) -> Dd {
        let (hi, lo) = two_sum(a, b);
        Dd { hi, lo }
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            self.neg()
        } else {
            self
        }
    }

    /// e^self. Overflows to f64 infinity past ~709.
    pub fn exp(self) -> Dd {
        if self.hi < -746.0 {
            return Dd::ZERO;
        }
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        let m = (self.hi / Dd::LN2.hi).round();
        let r = self.sub(Dd::LN2.mul_f64(m));
        // |r| <= ln2/2; Taylor series converges below 1e-33 within ~26 terms.
        let mut sum = Dd::ONE;
        let mut term = Dd::ONE;
        for k in 1..40 {
            term = term.mul(r).div(Dd::from_f64(k as f64));
            sum = sum.add(term);
            if term.hi.abs() < 1e-35 {
                break;
            }
        }
        let scale = (m as i32).clamp(-2000, 2000);
        Dd {
            hi: libm_ldexp(sum.hi, scale),
            lo: libm_ldexp(sum.lo, scale),
        }
    }

    /// Natural logarithm, self > 0.
    pub fn ln(self) -> Dd {
        assert!(self.hi > 0.0, "dd ln of non-positive value");
        // Newton iteration on exp(y) = x, seeded by the f64 log.
        let mut y = Dd::from_f64(self.hi.ln());
        for _ in 0..2 {
            let ey = y.exp();
            y = y.add(self.div(ey)).add_f64(-1.0);
        }
        y
    }

    /// sin(pi x) for f64 `x`, with exact reduction by integers.
    pub fn sin_pi(x: f64) -> Dd {
        Dd::sin_pi_dd(Dd::from_f64(x))
    }

    /// sin(pi x) for double-double `x`.
    pub fn sin_pi_dd(x: Dd) -> Dd {
        let n = x.hi.round();
        let t = x.add_f64(-n); // exact for |x| < 2^52
        let u = Dd::PI.mul(t);
        let u2 = u.mul(u);
        // sin(u) = u (1 - u^2/3! + u^4/5! - ...), |u| <= pi/2 + eps
        let mut term = u;
        let mut sum = u;
        for k in 1..26 {
            let d = (2 * k) as f64 * (2 * k + 1) as f64;
            term = term.mul(u2).div(Dd::from_f64(-d));
            sum = sum.add(term);
            if term.hi.abs() < 1e-35 {
                break;
            }
        }
        if (n as i64) % 2 != 0 {
            sum = sum.neg();
        }
        sum
    }
}

#[inline]
fn libm_ldexp(x: f64, e: i32) -> f64 {
    // Two-step scaling avoids intermediate under/overflow for |e| <= 2000.
    let h = e / 2;
    x * f64::powi(2.0, h) * f64::powi(2.0, e - h)
}

/// Stirling coefficients B_{2n} / (2n (2n-1)) as exact rationals.
fn stirling_coeffs() -> &'static Vec<Dd> {
    static C: OnceLock<Vec<Dd>> = OnceLock::new();
    C.get_or_init(|| {
        let b2n: [(i64, i64); 13] = [
            (1, 6),
            (-1, 30),
            (1, 42),
            (-1, 30),
            (5, 66),
            (-691, 2730),
            (7, 6),
            (-3617, 510),
            (43867, 798),
            (-174611, 330),
            (854513, 138),
            (-236364091, 2730),
            (8553103, 6),
        ];
        b2n.iter()
            .enumerate()
            .map(|(i, &(p, q))| {
                let n = (i + 1) as i64;
                Dd::from_ratio(p, q * 2 * n * (2 * n - 1))
            })
            .collect()
    })
}

/// ln Gamma(x) for x >= 0.5, accurate to ~1e-31 relative.
pub fn ln_gamma(x: f64) -> Dd {
    ln_gamma_dd(Dd::from_f64(x))
}

/// ln Gamma for a double-double argument >= 0.5.
pub fn ln_gamma_dd(x: Dd) -> Dd {
    assert!(x.hi >= 0.5, "dd ln_gamma requires x >= 0.5, got {}", x.hi);
    const SHIFT_TO: f64 = 35.0;
    let mut z = x;
    let mut shift = Dd::ONE;
    while z.hi < SHIFT_TO {
        shift = shift.mul(z);
        z = z.add_f64(1.0);
    }
    // Stirling: (z - 1/2) ln z - z + ln(2 pi)/2 + sum B_2n / (2n(2n-1) z^(2n-1))
    let lnz = z.ln();
    let mut acc = z.add_f64(-0.5).mul(lnz).sub(z).add(Dd::HALF_LN_2PI);
    let z2 = z.mul(z);
    let mut zpow = z; // z^(2n-1)
    for (i, c) in stirling_coeffs().iter().enumerate() {
        if i > 0 {
            zpow = zpow.mul(z2);
        }
        acc = acc.add(c.div(zpow));
    }
    if shift.hi != 1.0 || shift.lo != 0.0 {
        acc = acc.sub(shift.ln());
    }
    acc
}

/// ln |Gamma(x)| and the sign of Gamma(x) for any real x.
///
/// Returns sign 0 exactly at the poles (x a non-positive integer).
pub fn ln_abs_gamma(x: f64) -> (Dd, i8) {
    ln_abs_gamma_dd(Dd::from_f64(x))
}

/// Double-double argument version of [`ln_abs_gamma`]. The pole test is
/// exact on the two-component representation.
pub fn ln_abs_gamma_dd(x: Dd) -> (Dd, i8) {
    if x.hi >= 0.5 {
        return (ln_gamma_dd(x), 1);
    }
    if x.hi == x.hi.round() && x.lo == 0.0 && x.hi <= 0.0 {
        return (Dd::ZERO, 0); // pole
    }
    // Reflection: Gamma(x) = pi / (sin(pi x) Gamma(1 - x))
    let s = Dd::sin_pi_dd(x);
    let sign = if s.hi > 0.0 { 1 } else { -1 };
    let one_minus = Dd::from_f64(1.0).sub(x);
    let ln_val = Dd::PI.div(s.abs()).ln().sub(ln_gamma_dd(one_minus));
    (ln_val, sign)
}

/// 1 / Gamma(x) in double-double precision; exactly zero at the poles.
pub fn recip_gamma(x: f64) -> Dd {
    let (ln_abs, sign) = ln_abs_gamma(x);
    match sign {
        0 => Dd::ZERO,
        1 => ln_abs.neg().exp(),
        _ => ln_abs.neg().exp().neg(),
    }
}

/// ln k! for k = 0..=max, built once.
pub fn ln_factorials(max: usize) -> Vec<Dd> {
    let mut v = Vec::with_capacity(max + 1);
    let mut acc = Dd::ZERO;
    v.push(acc);
    for k in 1..=max {
        acc = acc.add(Dd::from_f64(k as f64).ln());
        v.push(acc);
    }
    v
}
