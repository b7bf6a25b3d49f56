//! Counting functions and their smooth main terms.
//!
//! The eigenvalue count below `s` grows like
//!
//! ```text
//!     N(s) = kappa * s^(3/2) + R(s),        kappa = sqrt(2*pi) / (6*pi^2),
//! ```
//!
//! and everything interesting lives in the remainder `R`.  This module
//! evaluates the main term carefully (double-double internally, so the
//! returned f64 is correctly rounded for all practical `s`), packages
//! count/main/remainder samples, and exposes the rescaled remainder of the
//! multiplicity-weighted branch on its natural `t = s / (2*pi)` axis:
//!
//! ```text
//!     R_H(t) = N_H(2*pi*t) - (2/3) t^(3/2) + t/2 .
//! ```
//!
//! A second entry point, [`remainder_h_scaled_at_s`], evaluates the same
//! quantity without ever forming `t` in floating point.  The distinction
//! matters: rounding `s / (2*pi)` to f64 perturbs the main term by about
//! `1.5 * kappa * sqrt(s) * ulp(t) * pi`, which at `s = 1e6` is a few parts
//! in 1e-9 — larger than the error of everything else combined.  Identity
//! checks that recombine the two branches should use the `_at_s` form; see
//! its docs for the cancellation argument.

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Leading Weyl coefficient, `sqrt(2*pi) / (6*pi^2)`, to double-double
/// accuracy.  Built once; the f64 head is what [`WeylConstants`] reports.
fn kappa_dd() -> Dd {
    static KAPPA: OnceLock<Dd> = OnceLock::new();
    *KAPPA.get_or_init(|| {
        // pi to ~1e-32: halving the stored 2*pi is exact in both limbs.
        let pi = Dd::new(Dd::TWO_PI.hi * 0.5, Dd::TWO_PI.lo * 0.5);
        let six_pi_sq = pi.mul(pi).mul_f64(6.0);
        Dd::TWO_PI.sqrt().div(six_pi_sq)
    })
}

/// `2/3` as a double-double (the scaled main term wants it beyond f64).
fn two_thirds_dd() -> Dd {
    static TT: OnceLock<Dd> = OnceLock::new();
    *TT.get_or_init(|| Dd::from_f64(2.0).div_f64(3.0))
}

/// The geometric constants entering the leading Weyl term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylConstants {
    /// Coefficient of `s^(3/2)` in the eigenvalue count.
    pub kappa: f64,
    /// Metric volume of the quotient, `sqrt(2*pi)`.
    pub volume: f64,
}

impl WeylConstants {
    /// Constants for the standard metric normalization.
    pub fn standard() -> WeylConstants {
        WeylConstants {
            kappa: kappa_dd().to_f64(),
            volume: Dd::TWO_PI.sqrt().to_f64(),
        }
    }
}

/// One evaluation of the counting function against its main term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemainderSample {
    /// Spectral parameter the count was taken at.
    pub s: f64,
    /// Closed count `N(s)` (jumps at `s` included).
    pub count: f64,
    /// Smooth main term `kappa * s^(3/2)`.
    pub main: f64,
    /// `count - main`, in that order, no re-rounding.
    pub remainder: f64,
}

impl RemainderSample {
    /// Header line matching [`RemainderSample::csv_line`].
    pub fn csv_header() -> &'static str {
        "s,count,main,remainder"
    }

    /// One CSV row with 17 significant digits on every real column, enough
    /// to reconstruct the exact f64 bits.
    pub fn csv_line(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            self.s, self.count, self.main, self.remainder
        )
    }
}

/// Smooth main term `kappa * s^(3/2)`.
///
/// The product is assembled in double-double and rounded once at the end,
/// so the result is faithful for any `s` the spectrum enumeration can
/// reach.  Negative `s` is a caller bug.
pub fn main_term(s: f64) -> f64 {
    debug_assert!(s >= 0.0, "main term wants s >= 0, got {s}");
    if s <= 0.0 {
        return 0.0;
    }
    // s^(3/2) = sqrt(s) * s; s itself is exact.
    let s32 = Dd::from_f64(s).sqrt().mul_f64(s);
    kappa_dd().mul(s32).to_f64()
}

/// Count, main term, and remainder at `s` for the full spectrum.
pub fn remainder(s: f64, spectrum: &Spectrum) -> Result<RemainderSample> {
    if !s.is_finite() || s < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "remainder sample wants finite s >= 0, got {s}"
        )));
    }
    let count = spectrum.count_total(s)? as f64;
    let main = main_term(s);
    Ok(RemainderSample {
        s,
        count,
        main,
        remainder: count - main,
    })
}

/// Rescaled remainder of the multiplicity-weighted branch at `t`:
/// `N_H(2*pi*t) - (2/3) t^(3/2) + t/2`.
///
/// The main term is evaluated in double-double.  The count lookup forms
/// `2*pi*t` with the *same* f64 expression the enumeration uses for its
/// jump values, so integer `t` lands bit-exactly on the stored jump and
/// the closed-count convention holds there; for non-integer `t` the
/// nearest jump is many orders of magnitude further away than one ulp, so
/// the rounding never flips a count.
pub fn remainder_h_scaled(t: f64, spectrum: &Spectrum) -> Result<f64> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "scaled remainder wants finite t >= 0, got {t}"
        )));
    }
    let s = (2.0 * PI) * t;
    let count = spectrum.count_typeii(s)? as f64;
    // (2/3) t^(3/2) - t/2, both pieces beyond f64 before the final round.
    let t32 = Dd::from_f64(t).sqrt().mul_f64(t);
    let main = two_thirds_dd().mul(t32).to_f64();
    Ok((count - main) + 0.5 * t)
}

/// The same rescaled remainder, evaluated at `t = s / (2*pi)` without ever
/// rounding `t`:
///
/// ```text
///     R_H(s/(2*pi)) = N_H(s) - kappa * s^(3/2) + s/(4*pi),
/// ```
///
/// using `(2/3) t^(3/2) = kappa s^(3/2)` and `t/2 = s/(4*pi)`.  Use this
/// form when recombining with the torus branch: the identity
///
/// ```text
///     R(s) = R_H(s/(2*pi)) + ( N_T(s) - s/(4*pi) )
/// ```
///
/// then cancels to roundoff.  Concretely, `N(s) - main` and
/// `N_H(s) - main` differ by the integer `N_T(s)` exactly (the counts are
/// moderate integers and the subtractions stay well inside 53 bits), and
/// the `s/(4*pi)` term here is the same f64 the torus side subtracts, so
/// the floating-point residual of the identity is a couple of additions'
/// worth of rounding — about 1e-11 at `s = 1e6` — rather than the ~5e-9
/// floor the rounded-`t` route carries.
pub fn remainder_h_scaled_at_s(s: f64, spectrum: &Spectrum) -> Result<f64> {
    if !s.is_finite() || s < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "scaled remainder wants finite s >= 0, got {s}"
        )));
    }
    let count = spectrum.count_typeii(s)? as f64;
    let main = main_term(s);
    Ok((count - main) + s / (4.0 * PI))
}
