//! Error-free transformations and a small double-double kit.
//!
//! Two places in this crate genuinely outrun plain f64:
//!
//!   * phase reduction for cos(2π·√(t·μν) − π/4) with t up to 10⁶ and
//!     μν up to ~10⁷ — the product reaches 10¹³, its square root 3·10⁶,
//!     and an error of one ulp in the root is ~4·10⁻¹⁰ *revolutions*,
//!     which is fine; but computing √(t·μν) from the *rounded* product
//!     loses ~10⁻³ radians at the top of the range, audible in a sum of
//!     10⁵ cosines;
//!   * long alternating sums (moments over ~10⁷ intervals, exponential
//!     sums over ~10⁵ terms), where naive accumulation drifts.
//!
//! The representation is the usual unevaluated pair hi + lo with
//! |lo| ≤ ulp(hi)/2.  Only the handful of operations actually used are
//! implemented; this is deliberately not a general dd library.

/// Exact sum: returns (s, e) with s = fl(a+b) and a + b = s + e exactly.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Exact sum under the assumption |a| ≥ |b| (one branch cheaper).
#[inline]
pub fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// Exact product via fused multiply-add: a·b = p + e exactly.
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

/// Unevaluated double-double value hi + lo.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

// Inherent add/sub/mul/div instead of operator impls: every call site then
// says explicitly that it is a double-double step, and the mixed-width
// variants (mul_f64, div_f64) read the same way.
#[allow(clippy::should_implement_trait)]
impl Dd {
    /// 2π to ~32 decimal digits (hi = round(2π), lo = residual).
    pub const TWO_PI: Dd = Dd {
        hi: std::f64::consts::TAU,
        lo: 2.4492935982947064e-16,
    };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// Renormalizing constructor: collapses an arbitrary (hi, lo) pair.
    #[inline]
    pub fn new(hi: f64, lo: f64) -> Dd {
        let (s, e) = two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    /// The exact product a·b as a double-double.
    #[inline]
    pub fn from_prod(a: f64, b: f64) -> Dd {
        let (p, e) = two_prod(a, b);
        Dd { hi: p, lo: e }
    }

    #[inline]
    pub fn add(self, rhs: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, rhs.hi);
        Dd::new(s, e + self.lo + rhs.lo)
    }

    #[inline]
    pub fn add_f64(self, x: f64) -> Dd {
        let (s, e) = two_sum(self.hi, x);
        Dd::new(s, e + self.lo)
    }

    #[inline]
    pub fn sub(self, rhs: Dd) -> Dd {
        self.add(Dd {
            hi: -rhs.hi,
            lo: -rhs.lo,
        })
    }

    #[inline]
    pub fn mul_f64(self, x: f64) -> Dd {
        let (p, e) = two_prod(self.hi, x);
        Dd::new(p, e + self.lo * x)
    }

    #[inline]
    pub fn mul(self, rhs: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, rhs.hi);
        Dd::new(p, e + self.hi * rhs.lo + self.lo * rhs.hi)
    }

    /// Division by a plain f64, one Newton correction.
    #[inline]
    pub fn div_f64(self, x: f64) -> Dd {
        let q0 = self.hi / x;
        let r = self.sub(Dd::from_prod(q0, x));
        let q1 = (r.hi + r.lo) / x;
        let (s, e) = quick_two_sum(q0, q1);
        Dd { hi: s, lo: e }
    }

    /// Full double-double division, one Newton correction.
    #[inline]
    pub fn div(self, rhs: Dd) -> Dd {
        let q0 = self.hi / rhs.hi;
        let r = self.sub(rhs.mul_f64(q0));
        let q1 = (r.hi + r.lo) / rhs.hi;
        let (s, e) = quick_two_sum(q0, q1);
        Dd { hi: s, lo: e }
    }

    /// Square root by one Newton step off the f64 root.
    ///
    /// With s0 = fl(√hi) the correction r = (self − s0²)/(2·s0) is computed
    /// with an exact s0² (two_prod), so the result carries ~2⁻¹⁰⁴ relative
    /// error — far below anything the callers can feel.
    #[inline]
    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 {
            return Dd::from_f64(0.0);
        }
        debug_assert!(self.hi > 0.0, "dd sqrt of negative value");
        let s0 = self.hi.sqrt();
        let (p, pe) = two_prod(s0, s0);
        let d = self.sub(Dd { hi: p, lo: pe });
        let r = (d.hi + d.lo) / (2.0 * s0);
        let (s, e) = quick_two_sum(s0, r);
        Dd { hi: s, lo: e }
    }

    /// Fractional part in [0, 1).
    ///
    /// hi − floor(hi) is exact for finite f64 (when hi ≥ 2⁵² it is zero and
    /// the fraction lives entirely in lo), so no precision is lost before
    /// the final fold.
    #[inline]
    pub fn fract(self) -> f64 {
        let f = self.hi - self.hi.floor();
        let mut x = f + self.lo;
        if x >= 1.0 {
            x -= 1.0;
        } else if x < 0.0 {
            x += 1.0;
        }
        x
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Neumaier-compensated accumulator.
///
/// Like Kahan summation but robust when the incoming term is larger than
/// the running sum (the branch keeps the compensation attached to the
/// bigger operand).  Used for every long reduction in the crate.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Merge another compensated sum (used when blocks are reduced in
    /// parallel and folded back in deterministic order).
    #[inline]
    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.comp += other.comp;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
