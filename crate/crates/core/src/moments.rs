//! Moments of the remainder: `M_k(T) = integral_1^T R(s)^k ds`.
//!
//! Between consecutive jumps the count is constant, so the integrand is
//! `(C - main(s))^k` with `main` either the Weyl term `kappa * s^(3/2)`
//! (full spectrum) or the linear term `s / (4*pi)` (torus branch).  Both
//! admit exact antiderivatives:
//!
//! * half-power pieces substitute `s = (p + d)^2`, `p = sqrt(a)`, turning
//!   the integrand into a polynomial of degree at most `3k + 1` in `d`
//!   over `d in [0, sqrt(b) - sqrt(a)]`;
//! * linear pieces are already polynomial in `s - a`.
//!
//! The piecewise pass is therefore exact up to floating-point rounding —
//! no quadrature error at all — and one sweep over the jump sequence
//! serves a whole grid of upper limits.  An adaptive-quadrature evaluator
//! of the same integral is kept alongside as an independent cross-check;
//! it is orders of magnitude slower and only as accurate as its
//! tolerance, which is the point: the two share no code path.
//!
//! Working in `d = sqrt(s) - p` rather than `s` is not a stylistic
//! choice.  Expanding `(C - kappa s^{3/2})^k` directly around `s = 0`
//! loses all precision once `T` is large, because the binomial pieces
//! reach `kappa^3 T^{9/2}` (~1e13 at `T = 1e6`) while the integral itself
//! may be a few orders of magnitude smaller.  The local substitution
//! keeps every polynomial coefficient at the scale of the remainder on
//! that interval, so the compensated sum over intervals retains ~1e-13
//! relative accuracy even on the widest grids the fitting code uses.

use crate::counting::WeylConstants;
use crate::dd::NeumaierSum;
use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use crate::spectrum::{JumpSequence, Spectrum};
use std::f64::consts::PI;

/// How a moment value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMethod {
    /// Exact piecewise antiderivatives between jumps.
    PiecewiseExact,
    /// Adaptive Simpson quadrature on the raw integrand.
    Quadrature,
}

/// One evaluated moment `M_k(T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentResult {
    /// Upper integration limit `T`.
    pub t: f64,
    /// Power of the remainder, `k in {1, 2, 3}`.
    pub k: u32,
    /// Value of the integral from 1 to `t`.
    pub value: f64,
    /// Evaluation route.
    pub method: MomentMethod,
    /// Pieces the integral decomposed into (jump intervals touched for
    /// the exact route, Simpson panels for the quadrature route).
    pub interval_count: usize,
}

/// Least-squares power law `value ~ coefficient * T^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub exponent: f64,
    pub coefficient: f64,
    /// RMS residual of `log(value)` against the fitted line.
    pub residual_rms: f64,
    pub points_used: usize,
}

const BINOM: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0],
    [1.0, 2.0, 1.0, 0.0],
    [1.0, 3.0, 3.0, 1.0],
];

/// Main term subtracted on each constant-count piece.
#[derive(Clone, Copy)]
enum MainTerm {
    /// `kappa * s^(3/2)`.
    HalfPower(f64),
    /// `slope * s`.
    Linear(f64),
}

fn check_k(k: u32) -> Result<()> {
    if (1..=3).contains(&k) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "moment power k must be 1, 2, or 3, got {k}"
        )))
    }
}

// --- small dense polynomials over d, degree <= 10 -------------------------

fn poly_mul(a: &[f64; 11], da: usize, b: &[f64; 11], db: usize) -> ([f64; 11], usize) {
    debug_assert!(da + db <= 10);
    let mut out = [0.0; 11];
    for (i, &ai) in a.iter().enumerate().take(da + 1) {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(db + 1) {
            out[i + j] += ai * bj;
        }
    }
    (out, da + db)
}

/// `integral_0^h` of the polynomial with coefficients `c[0..=deg]`.
fn poly_integral(c: &[f64; 11], deg: usize, h: f64) -> f64 {
    let mut acc = 0.0;
    for i in (0..=deg).rev() {
        acc = acc * h + c[i] / (i as f64 + 1.0);
    }
    acc * h
}

/// Exact `integral_a^b (count - kappa s^{3/2})^k ds` on a constant piece.
fn piece_half_power(a: f64, b: f64, count: f64, kappa: f64, k: u32) -> f64 {
    let p = a.sqrt();
    let h = b.sqrt() - p;
    if h <= 0.0 {
        return 0.0;
    }
    let r0 = count - kappa * (p * p * p);
    // w(d) = (p+d)^3 - p^3; the integrand in d is
    //   (r0 - kappa w)^k * (2p + 2d).
    let w: [f64; 11] = {
        let mut c = [0.0; 11];
        c[1] = 3.0 * p * p;
        c[2] = 3.0 * p;
        c[3] = 1.0;
        c
    };
    let g: [f64; 11] = {
        let mut c = [0.0; 11];
        c[0] = 2.0 * p;
        c[1] = 2.0;
        c
    };
    let mut wj: ([f64; 11], usize) = {
        let mut c = [0.0; 11];
        c[0] = 1.0;
        (c, 0)
    };
    let mut total = 0.0;
    let mut sign_pow = 1.0; // (-kappa)^j
    for j in 0..=k {
        let (integrand, deg) = poly_mul(&wj.0, wj.1, &g, 1);
        let ij = poly_integral(&integrand, deg, h);
        total += BINOM[k as usize][j as usize] * r0.powi((k - j) as i32) * sign_pow * ij;
        if j < k {
            wj = poly_mul(&wj.0, wj.1, &w, 3);
            sign_pow *= -kappa;
        }
    }
    total
}

/// Exact `integral_a^b (count - slope * s)^k ds` on a constant piece.
fn piece_linear(a: f64, b: f64, count: f64, slope: f64, k: u32) -> f64 {
    let r0 = count - slope * a;
    let len = b - a;
    let mut total = 0.0;
    let mut sign_pow = 1.0;
    let mut len_pow = len;
    for j in 0..=k {
        total += BINOM[k as usize][j as usize] * r0.powi((k - j) as i32) * sign_pow * len_pow
            / (j as f64 + 1.0);
        sign_pow *= -slope;
        len_pow *= len;
    }
    total
}

fn piece(main: MainTerm, a: f64, b: f64, count: f64, k: u32) -> f64 {
    match main {
        MainTerm::HalfPower(kappa) => piece_half_power(a, b, count, kappa, k),
        MainTerm::Linear(slope) => piece_linear(a, b, count, slope, k),
    }
}

/// One sweep over a jump sequence, reporting the running integral at each
/// grid checkpoint.  The grid must be non-decreasing with values in
/// `[1, seq.limit]`.
fn sweep(seq: &JumpSequence, main: MainTerm, k: u32, grid: &[f64]) -> Result<Vec<(f64, usize)>> {
    check_k(k)?;
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty moment grid".into()));
    }
    for pair in grid.windows(2) {
        if pair[1] < pair[0] {
            return Err(Error::InvalidConfig(format!(
                "moment grid must be non-decreasing, saw {} after {}",
                pair[1], pair[0]
            )));
        }
    }
    if grid[0] < 1.0 || !grid[0].is_finite() {
        return Err(Error::InvalidConfig(format!(
            "moment lower limit is 1, cannot evaluate at T = {}",
            grid[0]
        )));
    }
    let last = *grid.last().unwrap();
    if last > seq.limit {
        return Err(Error::OutOfRange {
            value: last,
            limit: seq.limit,
        });
    }

    let jumps = &seq.jumps;
    let cum = &seq.cumulative;
    let mut acc = NeumaierSum::new();
    let mut pieces = 0usize;
    let mut out = Vec::with_capacity(grid.len());
    let mut lo = 1.0f64;
    let mut idx = seq.interval_index(lo);
    for &t in grid {
        // Whole intervals strictly below the checkpoint.
        while idx + 1 < jumps.len() && jumps[idx + 1] < t {
            let hi = jumps[idx + 1];
            if hi > lo {
                acc.add(piece(main, lo, hi, cum[idx] as f64, k));
                pieces += 1;
            }
            lo = hi;
            idx += 1;
        }
        // Partial interval up to the checkpoint itself.
        if t > lo {
            acc.add(piece(main, lo, t, cum[idx] as f64, k));
            pieces += 1;
            lo = t;
        }
        out.push((acc.value(), pieces));
    }
    Ok(out)
}

/// `integral_1^T R(s)^k ds` for the full spectrum, exact piecewise form.
pub fn moment_integral(t: f64, k: u32, spectrum: &Spectrum) -> Result<MomentResult> {
    Ok(moment_curve(&[t], k, spectrum)?.pop().unwrap())
}

/// Moments of the full remainder at every grid point in one sweep.
pub fn moment_curve(grid: &[f64], k: u32, spectrum: &Spectrum) -> Result<Vec<MomentResult>> {
    let kappa = WeylConstants::standard().kappa;
    let vals = sweep(&spectrum.merged, MainTerm::HalfPower(kappa), k, grid)?;
    Ok(vals
        .into_iter()
        .zip(grid)
        .map(|((value, interval_count), &t)| MomentResult {
            t,
            k,
            value,
            method: MomentMethod::PiecewiseExact,
            interval_count,
        })
        .collect())
}

/// `integral_1^T (N_T(s) - s/(4*pi))^k ds` for the torus branch alone.
///
/// The torus remainder oscillates around a *linear* main term — its count
/// grows like `s / (4*pi)` — so the pieces here are plain polynomials.
pub fn torus_moment_integral(t: f64, k: u32, spectrum: &Spectrum) -> Result<MomentResult> {
    let slope = 1.0 / (4.0 * PI);
    let vals = sweep(&spectrum.torus, MainTerm::Linear(slope), k, &[t])?;
    let (value, interval_count) = vals[0];
    Ok(MomentResult {
        t,
        k,
        value,
        method: MomentMethod::PiecewiseExact,
        interval_count,
    })
}

/// Same integral as [`moment_integral`], but via adaptive Simpson on the
/// raw integrand.  `tolerance` is the absolute error target handed to the
/// quadrature; the jump discontinuities cost the adaptive pass a deep
/// recursion around each jump, so this is strictly a cross-check, not a
/// production path.
pub fn moment_quadrature(t: f64, k: u32, spectrum: &Spectrum, tolerance: f64) -> Result<MomentResult> {
    check_k(k)?;
    if !(t >= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "moment lower limit is 1, cannot evaluate at T = {t}"
        )));
    }
    if t > spectrum.limit() {
        return Err(Error::OutOfRange {
            value: t,
            limit: spectrum.limit(),
        });
    }
    if !(tolerance > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "quadrature tolerance must be positive, got {tolerance}"
        )));
    }
    let kappa = WeylConstants::standard().kappa;
    let f = |s: f64| {
        // Safe: s stays within [1, t] <= limit.
        let c = spectrum.count_total(s).expect("s within limit") as f64;
        (c - kappa * s * s.sqrt()).powi(k as i32)
    };
    let q = adaptive_simpson(f, 1.0, t, tolerance)?;
    Ok(MomentResult {
        t,
        k,
        value: q.value,
        method: MomentMethod::Quadrature,
        interval_count: q.panels,
    })
}

/// Fit `value = coefficient * T^exponent` through every supplied point by
/// least squares on `log value` against `log T`.
///
/// All points are used as given — windowing (e.g. dropping a pre-asymptotic
/// head) is the caller's business.  Fails with a nonpositive-value error
/// if any moment is `<= 0`, since the log-log line is meaningless there.
pub fn fit_power_law(points: &[MomentResult]) -> Result<PowerFit> {
    if points.len() < 3 {
        return Err(Error::InvalidConfig(format!(
            "power-law fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for p in points {
        if !(p.value > 0.0) {
            return Err(Error::NonpositiveValue(format!(
                "moment at T = {} is {}; power-law fit needs positive values",
                p.t, p.value
            )));
        }
        xs.push(p.t.ln());
        ys.push(p.value.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidConfig(
            "power-law fit needs at least two distinct T values".into(),
        ));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let mut ss = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let r = y - (intercept + exponent * x);
        ss += r * r;
    }
    Ok(PowerFit {
        exponent,
        coefficient: intercept.exp(),
        residual_rms: (ss / n).sqrt(),
        points_used: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::Spectrum;
    use std::sync::OnceLock;

    fn spec1100() -> &'static Spectrum {
        static S: OnceLock<Spectrum> = OnceLock::new();
        S.get_or_init(|| Spectrum::build(1100.0).unwrap())
    }

    #[test]
    fn moment_vanishes_at_lower_limit() {
        let m = moment_integral(1.0, 2, spec1100()).unwrap();
        assert_eq!(m.value, 0.0);
        assert_eq!(m.interval_count, 0);
    }

    #[test]
    fn first_window_closed_form() {
        // Below 4*pi the only mode is the zero mode, so for k = 1
        //   M_1(4*pi) = (4*pi - 1) - (2*kappa/5) ((4*pi)^{5/2} - 1).
        let t = 4.0 * PI;
        let kappa = WeylConstants::standard().kappa;
        let expect = (t - 1.0) - 0.4 * kappa * (t.powf(2.5) - 1.0);
        let m = moment_integral(t, 1, spec1100()).unwrap();
        assert!(
            (m.value - expect).abs() <= 1e-12 * expect.abs(),
            "{} vs {}",
            m.value,
            expect
        );
        assert_eq!(m.interval_count, 1);
    }

    #[test]
    fn frozen_merged_moments() {
        // Brute-force reference values, float128 accumulation.
        let cases = [
            (100.0, 1, 2.202396208827332e+01),
            (100.0, 2, 5.453625769018907e+02),
            (100.0, 3, 4.889292086172854e+02),
            (1000.0, 1, -8.79333445092814e+02),
            (1000.0, 2, 1.272297375905939e+05),
            (1000.0, 3, -6.942885003625075e+05),
        ];
        for (t, k, want) in cases {
            let got = moment_integral(t, k, spec1100()).unwrap().value;
            assert!(
                (got - want).abs() <= 1e-10 * want.abs(),
                "M_{k}({t}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn frozen_torus_moments() {
        let spec = Spectrum::build(10010.0).unwrap();
        let cases = [
            (1, 4.412559880953e+02),
            (2, 2.467871206425e+05),
            (3, -1.086973805668e+05),
        ];
        for (k, want) in cases {
            let got = torus_moment_integral(1e4, k, &spec).unwrap().value;
            assert!(
                (got - want).abs() <= 1e-10 * want.abs(),
                "torus M_{k}(1e4) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn curve_checkpoints_match_separate_integrals() {
        let spec = spec1100();
        let grid = [1.0, 4.0 * PI, 250.0, 250.0, 1000.0];
        let curve = moment_curve(&grid, 3, spec).unwrap();
        assert_eq!(curve[0].value, 0.0);
        assert_eq!(curve[2].value, curve[3].value);
        for point in &curve {
            let single = moment_integral(point.t, 3, spec).unwrap();
            // Same pieces, same order modulo the checkpoint split; the
            // compensated sums agree to machine precision.
            assert!(
                (point.value - single.value).abs() <= 1e-12 * single.value.abs().max(1.0),
                "checkpoint {} differs: {} vs {}",
                point.t,
                point.value,
                single.value
            );
        }
    }

    #[test]
    fn quadrature_agrees_on_small_window() {
        let spec = spec1100();
        let exact = moment_integral(100.0, 2, spec).unwrap();
        let quad = moment_quadrature(100.0, 2, spec, 1e-6).unwrap();
        assert_eq!(quad.method, MomentMethod::Quadrature);
        assert!(
            (quad.value - exact.value).abs() < 1e-4,
            "quadrature {} vs exact {}",
            quad.value,
            exact.value
        );
        assert!(quad.interval_count > 100);
    }

    #[test]
    fn synthetic_power_law_is_recovered_exactly() {
        let points: Vec<MomentResult> = [10.0, 31.6, 100.0, 316.0, 1000.0]
            .iter()
            .map(|&t| MomentResult {
                t,
                k: 2,
                value: 2.0 * t.powf(2.5),
                method: MomentMethod::PiecewiseExact,
                interval_count: 0,
            })
            .collect();
        let fit = fit_power_law(&points).unwrap();
        assert!((fit.exponent - 2.5).abs() < 1e-12);
        assert!((fit.coefficient - 2.0).abs() < 1e-12);
        assert!(fit.residual_rms < 1e-12);
        assert_eq!(fit.points_used, 5);
    }

    #[test]
    fn frozen_torus_fit() {
        // Second torus moment on T = 10^(4 + j/4), j = 0..12, from the
        // exact sweep; the fitted line is the slow-growth benchmark the
        // partial-series coefficient is compared against.
        let values = [
            2.467871206425e+05,
            6.195517757854e+05,
            1.429337767146e+06,
            3.464345894907e+06,
            8.404675984607e+06,
            1.992880840026e+07,
            4.771521887149e+07,
            1.134735557878e+08,
            2.681322027065e+08,
            6.368376889481e+08,
            1.513411170928e+09,
            3.596524429462e+09,
            8.508476035016e+09,
        ];
        let points: Vec<MomentResult> = values
            .iter()
            .enumerate()
            .map(|(j, &v)| MomentResult {
                t: 10f64.powf(4.0 + j as f64 / 4.0),
                k: 2,
                value: v,
                method: MomentMethod::PiecewiseExact,
                interval_count: 0,
            })
            .collect();
        let fit = fit_power_law(&points).unwrap();
        assert!((fit.exponent - 1.509885).abs() < 1e-5, "{}", fit.exponent);
        assert!(
            (fit.coefficient - 0.233097040).abs() < 1e-6 * 0.233097040,
            "{}",
            fit.coefficient
        );
    }

    #[test]
    fn fit_rejects_bad_inputs() {
        let mk = |t: f64, value: f64| MomentResult {
            t,
            k: 3,
            value,
            method: MomentMethod::PiecewiseExact,
            interval_count: 0,
        };
        let two = vec![mk(10.0, 5.0), mk(100.0, 50.0)];
        assert!(matches!(
            fit_power_law(&two),
            Err(Error::InvalidConfig(_))
        ));
        let with_neg = vec![mk(10.0, 5.0), mk(100.0, -2.0), mk(1000.0, 50.0)];
        assert!(matches!(
            fit_power_law(&with_neg),
            Err(Error::NonpositiveValue(_))
        ));
    }

    #[test]
    fn argument_validation() {
        let spec = spec1100();
        assert!(matches!(
            moment_integral(100.0, 0, spec),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            moment_integral(100.0, 4, spec),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            moment_integral(0.5, 2, spec),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            moment_integral(2000.0, 2, spec),
            Err(Error::OutOfRange { .. })
        ));
        let grid = [100.0, 50.0];
        assert!(moment_curve(&grid, 2, spec).is_err());
    }
}
