//! The third-moment series constant and its second-moment cousin.
//!
//! The cubed remainder has a nonvanishing mean because triples of
//! resonance frequencies `sqrt(mu_1 nu_1) +- sqrt(mu_2 nu_2) +- sqrt(mu_3 nu_3)`
//! can cancel exactly.  Each exact cancellation pattern contributes one of
//! four series (radicals collapse either because all three products share
//! a square-free kernel, or because they are perfect squares):
//!
//! 1. all three slots off-diagonal, `mu_j nu_j = k m_j^2` with a common
//!    square-free kernel `k` and `m_1 + m_2 = m_3`;
//! 2. all three slots diagonal, `nu_1 + nu_2 = nu_3`;
//! 3. slots 1 and 2 off-diagonal with square products (`kernel 1`),
//!    slot 3 diagonal, `m_1 + m_2 = nu_3`;
//! 4. slot 1 diagonal, slots 2 and 3 off-diagonal with square products,
//!    `nu_1 + m_2 = m_3`.
//!
//! Every lattice solution is expanded over the same-parity divisor pairs
//! of its three slot values, each expanded term carrying the product of
//! slot amplitudes `mu^(-5/4) nu^(-1/4)` (off-diagonal) or `nu^(-3/2)`
//! (diagonal).  The parity constraint forces `(-1)^(nu_1+nu_2+nu_3) = +1`
//! on every surviving term, which is why the series is a sum of positive
//! numbers — a property worth asserting, since it is what makes plain
//! truncation monotone from below.
//!
//! Truncation is by the third slot's product `mu_3 nu_3 <= limit`, and the
//! reported tail estimate is the doubling heuristic
//! `4 * |b_3(L) - b_3(L/2)|` computed in the same enumeration pass.

use crate::dd::NeumaierSum;
use crate::error::{Error, Result};
use crate::spectrum::r2_sieve;
use std::f64::consts::{PI, SQRT_2};

/// Enumeration cap: limits implying more expanded terms than this are
/// refused up front.
const MAX_DELTA_TERMS: u64 = 1 << 26;

/// Series prefactors, in sum order.
fn prefactors() -> [f64; 4] {
    let pi3 = PI * PI * PI;
    [
        3.0 * SQRT_2 / (26.0 * pi3),
        3.0 * SQRT_2 / (208.0 * pi3),
        9.0 * SQRT_2 / (52.0 * pi3),
        9.0 * SQRT_2 / (104.0 * pi3),
    ]
}

/// True when no square divides `n` (1 counts as square-free).
pub fn square_free(n: u64) -> bool {
    if n == 0 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d * d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Divisor pairs `(nu, mu)` of `n` with `nu <= mu` (strict unless
/// `allow_equal`) and `nu = mu (mod 2)`, ascending in `nu`.
pub fn same_parity_pairs(n: u64, allow_equal: bool) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut nu = 1u64;
    while nu * nu <= n {
        if n.is_multiple_of(nu) {
            let mu = n / nu;
            let proper = nu < mu || (allow_equal && nu == mu);
            if proper && nu % 2 == mu % 2 {
                out.push((nu, mu));
            }
        }
        nu += 1;
    }
    out
}

/// Smallest-prime-factor sieve for `0..=n`.
fn spf_sieve(n: usize) -> Vec<u32> {
    let mut spf = vec![0u32; n + 1];
    let mut i = 2usize;
    while i <= n {
        if spf[i] == 0 {
            let mut j = i;
            while j <= n {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
        i += 1;
    }
    spf
}

/// Same pairs as [`same_parity_pairs`], but factoring through a
/// smallest-prime-factor sieve — the enumeration below asks for divisor
/// pairs of millions of slot values, and repeated trial division is the
/// hot spot there.  Output order and content are identical to the public
/// routine (a test pins that).
fn pairs_via_spf(n: u64, spf: &[u32], allow_equal: bool, out: &mut Vec<(u64, u64)>) {
    out.clear();
    if n == 0 {
        return;
    }
    // Factor n, then build its divisor list.
    let mut divisors: Vec<u64> = vec![1];
    let mut rest = n as usize;
    while rest > 1 {
        let p = spf[rest] as u64;
        let mut power = 1u64;
        let base = divisors.len();
        while rest.is_multiple_of(p as usize) {
            rest /= p as usize;
            power *= p;
            for i in 0..base {
                divisors.push(divisors[i] * power);
            }
        }
    }
    divisors.sort_unstable();
    for &nu in &divisors {
        if nu * nu > n {
            break;
        }
        let mu = n / nu;
        let proper = nu < mu || (allow_equal && nu == mu);
        if proper && nu % 2 == mu % 2 {
            out.push((nu, mu));
        }
    }
}

/// One expanded term of the third-moment series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaZeroTerm {
    /// Common square-free kernel of the slot products (1 for sums 2-4).
    pub kernel: u64,
    /// Lattice solution indices; for diagonal slots these hold the
    /// diagonal value itself.
    pub m1: u64,
    pub m2: u64,
    pub m3: u64,
    /// Divisor pair `(nu, mu)` chosen in each slot.
    pub pairs: [(u64, u64); 3],
    /// Product of the three slot amplitudes, before the sum's prefactor.
    /// Positive on every term (the parity constraint kills the signs).
    pub weight: f64,
    /// Which of the four sums the term belongs to (1-4).
    pub sum_id: u8,
}

/// Off-diagonal slot amplitude.
fn nd_amplitude(nu: u64, mu: u64) -> f64 {
    (mu as f64).powf(-1.25) * (nu as f64).powf(-0.25)
}

/// Diagonal slot amplitude.
fn diag_amplitude(nu: u64) -> f64 {
    (nu as f64).powf(-1.5)
}

fn parity_ok(pairs: &[(u64, u64); 3]) -> bool {
    (pairs[0].0 + pairs[1].0 + pairs[2].0).is_multiple_of(2)
}

fn radical_collapses(nu: u64, mu: u64, m: u64) -> bool {
    (((nu * mu) as f64).sqrt() - m as f64).abs() < 1e-12 * (m as f64).max(1.0)
}

fn estimated_terms(limit: u64) -> u64 {
    let l = limit as f64;
    (l * (l.ln().max(1.0) + 1.0)) as u64
}

/// Walk every expanded term with slot-3 product at most `limit`, in a
/// fixed deterministic order: sums 1-4 in turn, outer indices ascending,
/// divisor pairs lexicographic per slot.
fn visit_terms<F: FnMut(DeltaZeroTerm)>(limit: u64, mut f: F) {
    let spf = spf_sieve(limit.max(3) as usize);
    let mut p1: Vec<(u64, u64)> = Vec::new();
    let mut p2: Vec<(u64, u64)> = Vec::new();
    let mut p3: Vec<(u64, u64)> = Vec::new();

    // Sum 1: slot values k m_j^2, square-free kernel, m1 + m2 = m3.
    let mut k = 1u64;
    while 4 * k <= limit {
        if square_free(k) {
            let mut m3 = 2u64;
            while k * m3 * m3 <= limit {
                pairs_via_spf(k * m3 * m3, &spf, false, &mut p3);
                if !p3.is_empty() {
                    for m1 in 1..m3 {
                        let m2 = m3 - m1;
                        pairs_via_spf(k * m1 * m1, &spf, false, &mut p1);
                        if p1.is_empty() {
                            continue;
                        }
                        pairs_via_spf(k * m2 * m2, &spf, false, &mut p2);
                        for &(v1, u1) in &p1 {
                            for &(v2, u2) in &p2 {
                                for &(v3, u3) in &p3 {
                                    let pairs = [(v1, u1), (v2, u2), (v3, u3)];
                                    debug_assert!(parity_ok(&pairs));
                                    f(DeltaZeroTerm {
                                        kernel: k,
                                        m1,
                                        m2,
                                        m3,
                                        pairs,
                                        weight: nd_amplitude(v1, u1)
                                            * nd_amplitude(v2, u2)
                                            * nd_amplitude(v3, u3),
                                        sum_id: 1,
                                    });
                                }
                            }
                        }
                    }
                }
                m3 += 1;
            }
        }
        k += 1;
    }

    // Sum 2: all slots diagonal, nu1 + nu2 = nu3.
    let mut nu3 = 2u64;
    while nu3 * nu3 <= limit {
        for nu1 in 1..nu3 {
            let nu2 = nu3 - nu1;
            let pairs = [(nu1, nu1), (nu2, nu2), (nu3, nu3)];
            debug_assert!(parity_ok(&pairs));
            f(DeltaZeroTerm {
                kernel: 1,
                m1: nu1,
                m2: nu2,
                m3: nu3,
                pairs,
                weight: diag_amplitude(nu1) * diag_amplitude(nu2) * diag_amplitude(nu3),
                sum_id: 2,
            });
        }
        nu3 += 1;
    }

    // Sum 3: square off-diagonal slots against a diagonal third,
    // m1 + m2 = nu3.
    let mut nu3 = 2u64;
    while nu3 * nu3 <= limit {
        let a3 = diag_amplitude(nu3);
        for m1 in 1..nu3 {
            let m2 = nu3 - m1;
            pairs_via_spf(m1 * m1, &spf, false, &mut p1);
            if p1.is_empty() {
                continue;
            }
            pairs_via_spf(m2 * m2, &spf, false, &mut p2);
            for &(v1, u1) in &p1 {
                debug_assert!(radical_collapses(v1, u1, m1));
                for &(v2, u2) in &p2 {
                    debug_assert!(radical_collapses(v2, u2, m2));
                    let pairs = [(v1, u1), (v2, u2), (nu3, nu3)];
                    debug_assert!(parity_ok(&pairs));
                    f(DeltaZeroTerm {
                        kernel: 1,
                        m1,
                        m2,
                        m3: nu3,
                        pairs,
                        weight: nd_amplitude(v1, u1) * nd_amplitude(v2, u2) * a3,
                        sum_id: 3,
                    });
                }
            }
        }
        nu3 += 1;
    }

    // Sum 4: diagonal first slot against square off-diagonal slots,
    // nu1 + m2 = m3.
    let mut m3 = 2u64;
    while m3 * m3 <= limit {
        pairs_via_spf(m3 * m3, &spf, false, &mut p3);
        if !p3.is_empty() {
            for nu1 in 1..m3 {
                let m2 = m3 - nu1;
                pairs_via_spf(m2 * m2, &spf, false, &mut p2);
                if p2.is_empty() {
                    continue;
                }
                let a1 = diag_amplitude(nu1);
                for &(v2, u2) in &p2 {
                    debug_assert!(radical_collapses(v2, u2, m2));
                    for &(v3, u3) in &p3 {
                        debug_assert!(radical_collapses(v3, u3, m3));
                        let pairs = [(nu1, nu1), (v2, u2), (v3, u3)];
                        debug_assert!(parity_ok(&pairs));
                        f(DeltaZeroTerm {
                            kernel: 1,
                            m1: nu1,
                            m2,
                            m3,
                            pairs,
                            weight: a1 * nd_amplitude(v2, u2) * nd_amplitude(v3, u3),
                            sum_id: 4,
                        });
                    }
                }
            }
        }
        m3 += 1;
    }
}

/// Materialize the expanded terms up to `limit`.
pub fn enumerate_delta_zero(limit: u64) -> Result<Vec<DeltaZeroTerm>> {
    if estimated_terms(limit) > MAX_DELTA_TERMS {
        return Err(Error::TermBudget {
            estimated: estimated_terms(limit),
            cap: MAX_DELTA_TERMS,
        });
    }
    let mut out = Vec::new();
    visit_terms(limit, |t| out.push(t));
    Ok(out)
}

/// A truncated positive series with a doubling tail estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEstimate {
    /// Truncated value, prefactors included.
    pub partial: f64,
    pub truncation_limit: u64,
    /// `4 |b_3(L) - b_3(L/2)|`, the doubling extrapolation of the tail.
    pub tail_estimate: f64,
    /// Per-sum contributions, prefactors included; they add up to
    /// `partial` exactly.
    pub per_sum_partials: [f64; 4],
}

/// Truncated third-moment constant `b_3` with slot-3 products up to
/// `limit`, plus the half-limit tail diagnostic from the same pass.
pub fn b3_estimate(limit: u64) -> Result<SeriesEstimate> {
    if estimated_terms(limit) > MAX_DELTA_TERMS {
        return Err(Error::TermBudget {
            estimated: estimated_terms(limit),
            cap: MAX_DELTA_TERMS,
        });
    }
    let half = limit / 2;
    let mut full_acc = [NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new()];
    let mut half_acc = [NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new()];
    visit_terms(limit, |t| {
        debug_assert!(t.weight > 0.0);
        let i = (t.sum_id - 1) as usize;
        full_acc[i].add(t.weight);
        if t.pairs[2].0 * t.pairs[2].1 <= half {
            half_acc[i].add(t.weight);
        }
    });
    let pref = prefactors();
    let per_sum_partials = [
        pref[0] * full_acc[0].value(),
        pref[1] * full_acc[1].value(),
        pref[2] * full_acc[2].value(),
        pref[3] * full_acc[3].value(),
    ];
    let partial = per_sum_partials[0] + per_sum_partials[1] + per_sum_partials[2] + per_sum_partials[3];
    let half_value: f64 = (0..4).map(|i| pref[i] * half_acc[i].value()).sum();
    Ok(SeriesEstimate {
        partial,
        truncation_limit: limit,
        tail_estimate: 4.0 * (partial - half_value).abs(),
        per_sum_partials,
    })
}

/// Third-moment coefficient estimate `d_3 = (2 pi)^(-9/4) b_3(limit)`.
pub fn d3_estimate(limit: u64) -> Result<f64> {
    let series = b3_estimate(limit)?;
    Ok((2.0 * PI).powf(-2.25) * series.partial)
}

/// Truncated second-moment coefficient of the torus branch:
/// `(6 pi^3)^(-1) sum_{n <= n_max} r_2(n)^2 / n^(3/2)`.
pub fn c2_partial(n_max: u64) -> f64 {
    if n_max == 0 {
        return 0.0;
    }
    let r2 = r2_sieve(n_max);
    let mut acc = NeumaierSum::new();
    for n in 1..=n_max {
        let r = r2[n as usize] as f64;
        if r != 0.0 {
            acc.add(r * r * (n as f64).powf(-1.5));
        }
    }
    acc.value() / (6.0 * PI * PI * PI)
}
