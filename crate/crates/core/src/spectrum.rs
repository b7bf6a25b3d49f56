//! Eigenvalue enumeration for the two spectral branches.
//!
//! The spectrum splits into
//!
//!   torus branch    λ(m,n) = 4π²·(m² + n²),     multiplicity r₂(m²+n²),
//!   type-II branch  μ(c,k) = 2π·c·(c + 2k + 1),  multiplicity 2c,
//!
//! with c ≥ 1, k ≥ 0, and the constant eigenfunction at λ = 0 coming from
//! (m,n) = (0,0).  Internally everything is an exact integer payload:
//! N = m²+n² for the torus, B = c(c+2k+1) (plus c) for type-II.  Reals
//! appear only at the boundary, via the two value functions below.
//!
//! ## Why cross-branch ties cannot happen
//!
//! A collision 4π²·N = 2π·B would force 2π·N = B with N ≥ 1, B integers —
//! impossible since π is irrational.  So the merge is a strict interleave
//! decided by comparing 2π·N against B; the closest approach over the
//! ranges enumerated here is |2π·N − B| ≈ 6·10⁻⁵ at N = 113 (and ~4·10⁻⁶
//! near the π convergent N = 16551), about five orders of magnitude above
//! f64 rounding at these scales.  The comparison is still done through a
//! double-double product and asserted strict, so a future widening of the
//! enumeration range cannot silently break the order.
//!
//! Same-branch ties are real and common (r₂ aggregates the torus side;
//! distinct (c,k) with equal B, e.g. (1,2) and (2,0) at B = 6, aggregate
//! on the type-II side) and are merged exactly in integer arithmetic.

use crate::dd::Dd;
use crate::error::{Error, Result};

/// Memory budget for any single enumeration, in entries.
pub const MAX_ENTRIES: u64 = 1 << 28;

/// Spectral branch tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Torus,
    TypeII,
}

/// One enumerated eigenvalue.
///
/// For the torus branch `index` is a lexicographically smallest
/// representative (m, n) with 0 ≤ m ≤ n and m² + n² = N (the value is
/// aggregated over all r₂(N) representations).  For type-II the index is
/// (c, k) and entries with equal values but different (c, k) stay separate;
/// they merge only inside a [`JumpSequence`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenvalueEntry {
    pub value: f64,
    pub multiplicity: u64,
    pub branch: Branch,
    pub index: (i64, i64),
}

/// r₂ table row: n together with r(n) = #{(a,b) ∈ ℤ²: a² + b² = n}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RepresentationCount {
    pub n: u64,
    pub r: u32,
}

/// Torus eigenvalue for payload N = m² + n², always through this one
/// expression so recomputation is bit-for-bit stable.
#[inline]
pub fn torus_value(n: u64) -> f64 {
    let tp = 2.0 * std::f64::consts::PI;
    (tp * tp) * (n as f64)
}

/// Type-II eigenvalue for payload B = c(c + 2k + 1).
#[inline]
pub fn typeii_value(b: u64) -> f64 {
    2.0 * std::f64::consts::PI * (b as f64)
}

/// Exact number of representations of n as an ordered sum of two squares
/// (signs included): r(0) = 1, r(1) = 4, r(5) = 8.
pub fn r2(n: u64) -> u64 {
    if n == 0 {
        return 1;
    }
    let mut count = 0u64;
    let mut a = 0u64;
    while a * a <= n {
        let rest = n - a * a;
        let b = rest.isqrt();
        if b * b == rest {
            // (±a, ±b) with zero coordinates counted once.
            let wa = if a == 0 { 1 } else { 2 };
            let wb = if b == 0 { 1 } else { 2 };
            count += wa * wb;
        }
        a += 1;
    }
    count
}

/// r₂ sieve: r(n) for all 0 ≤ n ≤ nmax by direct lattice accumulation,
/// O(nmax) points visited.
pub fn r2_sieve(nmax: u64) -> Vec<u32> {
    let mut table = vec![0u32; nmax as usize + 1];
    let amax = nmax.isqrt();
    for a in 0..=amax {
        let wa: u32 = if a == 0 { 1 } else { 2 };
        let mut b = 0u64;
        loop {
            let n = a * a + b * b;
            if n > nmax {
                break;
            }
            let wb: u32 = if b == 0 { 1 } else { 2 };
            table[n as usize] += wa * wb;
            b += 1;
        }
    }
    table
}

/// The r₂ table in row form.
pub fn representation_counts(nmax: u64) -> Vec<RepresentationCount> {
    r2_sieve(nmax)
        .into_iter()
        .enumerate()
        .map(|(n, r)| RepresentationCount { n: n as u64, r })
        .collect()
}

/// Largest N with torus_value(N) ≤ limit (membership by the f64 value,
/// the same convention the entry lists use).
fn torus_payload_max(limit: f64) -> u64 {
    if limit < 0.0 {
        return 0;
    }
    let tp = 2.0 * std::f64::consts::PI;
    let mut n = (limit / (tp * tp)).floor().max(0.0) as u64;
    while torus_value(n + 1) <= limit {
        n += 1;
    }
    while n > 0 && torus_value(n) > limit {
        n -= 1;
    }
    n
}

/// Largest B with typeii_value(B) ≤ limit.
fn typeii_payload_max(limit: f64) -> u64 {
    let tp = 2.0 * std::f64::consts::PI;
    if limit < typeii_value(2) {
        return 0;
    }
    let mut b = (limit / tp).floor() as u64;
    while typeii_value(b + 1) <= limit {
        b += 1;
    }
    while b > 0 && typeii_value(b) > limit {
        b -= 1;
    }
    b
}

/// Number of (c,k) pairs with c(c+2k+1) ≤ bmax — cheap exact pre-count
/// used for the memory-budget check before anything is materialized.
fn typeii_pair_count(bmax: u64) -> u64 {
    let mut total = 0u64;
    let mut c = 1u64;
    while c * (c + 1) <= bmax {
        // k ranges over 0..=(bmax/c − c − 1)/2.
        total += (bmax / c - c - 1) / 2 + 1;
        c += 1;
    }
    total
}

/// All distinct torus eigenvalues ≤ limit, ascending, with aggregated
/// multiplicity r₂(N).  Values with r₂(N) = 0 are skipped (they are not
/// eigenvalues).
pub fn torus_eigenvalues(limit: f64) -> Result<Vec<EigenvalueEntry>> {
    let nmax = torus_payload_max(limit);
    if nmax + 1 > MAX_ENTRIES {
        return Err(Error::CutoffTooLarge {
            estimated: nmax + 1,
            budget: MAX_ENTRIES,
        });
    }
    if limit < 0.0 {
        return Ok(Vec::new());
    }
    let table = r2_sieve(nmax);
    let mut out = Vec::new();
    for (n, &r) in table.iter().enumerate() {
        if r == 0 {
            continue;
        }
        let n = n as u64;
        // Lexicographically smallest representative (m, n−part) with m ≤ n.
        let mut rep = (0i64, 0i64);
        let mut m = 0u64;
        while m * m * 2 <= n {
            let rest = n - m * m;
            let b = rest.isqrt();
            if b * b == rest {
                rep = (m as i64, b as i64);
                break;
            }
            m += 1;
        }
        out.push(EigenvalueEntry {
            value: torus_value(n),
            multiplicity: r as u64,
            branch: Branch::Torus,
            index: rep,
        });
    }
    Ok(out)
}

/// All type-II eigenvalues ≤ limit, one entry per (c, k) pair, sorted by
/// value then by c.  Collisions (equal B from different pairs) remain
/// separate entries here.
pub fn typeii_eigenvalues(limit: f64) -> Result<Vec<EigenvalueEntry>> {
    let bmax = typeii_payload_max(limit);
    if bmax == 0 {
        return Ok(Vec::new());
    }
    let pairs = typeii_pair_count(bmax);
    if pairs > MAX_ENTRIES {
        return Err(Error::CutoffTooLarge {
            estimated: pairs,
            budget: MAX_ENTRIES,
        });
    }
    let mut raw: Vec<(u64, u64, u64)> = Vec::with_capacity(pairs as usize);
    let mut c = 1u64;
    while c * (c + 1) <= bmax {
        let kmax = (bmax / c - c - 1) / 2;
        for k in 0..=kmax {
            let b = c * (c + 2 * k + 1);
            debug_assert!(b <= bmax);
            raw.push((b, c, k));
        }
        c += 1;
    }
    raw.sort_unstable();
    Ok(raw
        .into_iter()
        .map(|(b, c, k)| EigenvalueEntry {
            value: typeii_value(b),
            multiplicity: 2 * c,
            branch: Branch::TypeII,
            index: (c as i64, k as i64),
        })
        .collect())
}

/// Exact step representation of a counting function N(s): strictly
/// increasing jump locations with running multiplicity totals.
///
/// `count_at` recovers N(s) for any 0 ≤ s ≤ limit by binary search, with
/// the closed convention (eigenvalues at exactly s are counted).
///
/// The merged and torus sequences start with jumps[0] = 0 and
/// cumulative[0] = 1 (the constant eigenfunction); the type-II-only
/// sequence keeps the anchor jump at 0 with cumulative[0] = 0 since its
/// branch has no zero mode.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpSequence {
    pub limit: f64,
    pub jumps: Vec<f64>,
    pub cumulative: Vec<u64>,
}

impl JumpSequence {
    /// Index of the interval [jumps[i], jumps[i+1]) containing s.
    #[inline]
    pub fn interval_index(&self, s: f64) -> usize {
        debug_assert!(s >= self.jumps[0]);
        self.jumps.partition_point(|&j| j <= s) - 1
    }

    /// N(s) with eigenvalues at exactly s included.
    pub fn count_at(&self, s: f64) -> Result<u64> {
        if s > self.limit {
            return Err(Error::OutOfRange {
                value: s,
                limit: self.limit,
            });
        }
        if s < self.jumps[0] {
            return Ok(0);
        }
        Ok(self.cumulative[self.interval_index(s)])
    }

    /// Total multiplicity enumerated.
    pub fn total(&self) -> u64 {
        *self.cumulative.last().unwrap_or(&0)
    }
}

/// Type-II multiplicity histogram: mult[B] = Σ_{c(c+2k+1)=B} 2c for all
/// B ≤ bmax.  Bincounting replaces a 10⁷-element sort and is deterministic.
fn typeii_multiplicity_histogram(bmax: u64) -> Vec<u64> {
    let mut mult = vec![0u64; bmax as usize + 1];
    let mut c = 1u64;
    while c * (c + 1) <= bmax {
        let mut b = c * (c + 1);
        while b <= bmax {
            mult[b as usize] += 2 * c;
            b += 2 * c;
        }
        c += 1;
    }
    mult
}

/// Interleave the two branches' aggregated (payload, multiplicity) streams
/// into one strictly increasing jump list.  Order is decided on the exact
/// key 2π·N vs B through a double-double product (see module docs for why
/// ties are impossible and why f64 resolution suffices once the product is
/// exact).
fn merge_streams(torus: &[(u64, u64)], typeii: &[(u64, u64)]) -> (Vec<f64>, Vec<u64>) {
    let mut jumps = Vec::with_capacity(torus.len() + typeii.len());
    let mut cumulative = Vec::with_capacity(torus.len() + typeii.len());
    let mut running = 0u64;
    let mut i = 0;
    let mut j = 0;
    while i < torus.len() || j < typeii.len() {
        let take_torus = if i < torus.len() && j < typeii.len() {
            let torus_key = Dd::TWO_PI.mul_f64(torus[i].0 as f64).to_f64();
            let typeii_key = typeii[j].0 as f64;
            debug_assert!(
                torus_key != typeii_key,
                "cross-branch tie at N={}, B={} — impossible for integers",
                torus[i].0,
                typeii[j].0
            );
            torus_key < typeii_key
        } else {
            i < torus.len()
        };
        let (value, mult) = if take_torus {
            let (n, m) = torus[i];
            i += 1;
            (torus_value(n), m)
        } else {
            let (b, m) = typeii[j];
            j += 1;
            (typeii_value(b), m)
        };
        debug_assert!(jumps.last().is_none_or(|&prev| prev < value));
        running += mult;
        jumps.push(value);
        cumulative.push(running);
    }
    (jumps, cumulative)
}

/// Merged jump sequence over both branches, eigenvalues ≤ limit.
pub fn merged_jump_sequence(limit: f64) -> Result<JumpSequence> {
    if limit < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "enumeration limit must be nonnegative, got {limit}"
        )));
    }
    let nmax = torus_payload_max(limit);
    let bmax = typeii_payload_max(limit);
    let budget_estimate = nmax + 1 + typeii_pair_count(bmax);
    if budget_estimate > MAX_ENTRIES {
        return Err(Error::CutoffTooLarge {
            estimated: budget_estimate,
            budget: MAX_ENTRIES,
        });
    }
    let torus: Vec<(u64, u64)> = r2_sieve(nmax)
        .into_iter()
        .enumerate()
        .filter(|&(_, r)| r > 0)
        .map(|(n, r)| (n as u64, r as u64))
        .collect();
    let typeii: Vec<(u64, u64)> = typeii_multiplicity_histogram(bmax)
        .into_iter()
        .enumerate()
        .filter(|&(_, m)| m > 0)
        .map(|(b, m)| (b as u64, m))
        .collect();
    let (jumps, cumulative) = merge_streams(&torus, &typeii);
    Ok(JumpSequence {
        limit,
        jumps,
        cumulative,
    })
}

/// Rebuild the three jump sequences from a flat entry list (the cache
/// path).  Entries may cover more than `limit`; anything above it is
/// dropped.  Both branches must appear in ascending payload order, the
/// order the enumerators and the cache file use.
pub fn spectrum_from_entries(limit: f64, entries: &[EigenvalueEntry]) -> Result<Spectrum> {
    let mut torus: Vec<(u64, u64)> = Vec::new();
    let mut typeii: Vec<(u64, u64)> = Vec::new();
    for e in entries {
        match e.branch {
            Branch::Torus => {
                let (m, n) = e.index;
                if m < 0 || n < 0 {
                    return Err(Error::CacheFormat(format!(
                        "negative torus representative ({m}, {n})"
                    )));
                }
                let payload = (m * m + n * n) as u64;
                if torus_value(payload) > limit {
                    continue;
                }
                if torus.last().is_some_and(|&(p, _)| p >= payload) {
                    return Err(Error::CacheFormat(format!(
                        "torus payloads out of order at N={payload}"
                    )));
                }
                torus.push((payload, e.multiplicity));
            }
            Branch::TypeII => {
                let (c, k) = e.index;
                if c < 1 || k < 0 {
                    return Err(Error::CacheFormat(format!("bad type-II index ({c}, {k})")));
                }
                let (c, k) = (c as u64, k as u64);
                let payload = c * (c + 2 * k + 1);
                if typeii_value(payload) > limit {
                    continue;
                }
                if e.multiplicity != 2 * c {
                    return Err(Error::CacheFormat(format!(
                        "type-II multiplicity {} at c={c} (expected {})",
                        e.multiplicity,
                        2 * c
                    )));
                }
                match typeii.last_mut() {
                    Some(last) if last.0 == payload => last.1 += e.multiplicity,
                    Some(last) if last.0 > payload => {
                        return Err(Error::CacheFormat(format!(
                            "type-II payloads out of order at B={payload}"
                        )))
                    }
                    _ => typeii.push((payload, e.multiplicity)),
                }
            }
        }
    }

    if torus.first().map(|&(n, _)| n) != Some(0) {
        return Err(Error::CacheFormat(
            "entry list is missing the zero mode (torus N=0)".into(),
        ));
    }
    let (jumps, cumulative) = merge_streams(&torus, &typeii);
    let merged = JumpSequence {
        limit,
        jumps,
        cumulative,
    };

    let mut running = 0u64;
    let torus_seq = JumpSequence {
        limit,
        jumps: torus.iter().map(|&(n, _)| torus_value(n)).collect(),
        cumulative: torus
            .iter()
            .map(|&(_, m)| {
                running += m;
                running
            })
            .collect(),
    };
    let mut running = 0u64;
    let mut jumps = vec![0.0];
    let mut cumulative = vec![0u64];
    for &(b, m) in &typeii {
        running += m;
        jumps.push(typeii_value(b));
        cumulative.push(running);
    }
    let typeii_seq = JumpSequence {
        limit,
        jumps,
        cumulative,
    };
    Ok(Spectrum {
        merged,
        torus: torus_seq,
        type_ii: typeii_seq,
    })
}

/// Torus-only jump sequence (zero mode included).
pub fn torus_jump_sequence(limit: f64) -> Result<JumpSequence> {
    let nmax = torus_payload_max(limit.max(0.0));
    if nmax + 1 > MAX_ENTRIES {
        return Err(Error::CutoffTooLarge {
            estimated: nmax + 1,
            budget: MAX_ENTRIES,
        });
    }
    let r2 = r2_sieve(nmax);
    let mut jumps = Vec::new();
    let mut cumulative = Vec::new();
    let mut running = 0u64;
    for (n, &r) in r2.iter().enumerate() {
        if r == 0 {
            continue;
        }
        running += r as u64;
        jumps.push(torus_value(n as u64));
        cumulative.push(running);
    }
    Ok(JumpSequence {
        limit,
        jumps,
        cumulative,
    })
}

/// Type-II-only jump sequence, anchored with a zero jump of count 0 so all
/// sequences share the same indexing convention.
pub fn typeii_jump_sequence(limit: f64) -> Result<JumpSequence> {
    let bmax = typeii_payload_max(limit.max(0.0));
    if typeii_pair_count(bmax) > MAX_ENTRIES {
        return Err(Error::CutoffTooLarge {
            estimated: typeii_pair_count(bmax),
            budget: MAX_ENTRIES,
        });
    }
    let t2 = typeii_multiplicity_histogram(bmax);
    let mut jumps = vec![0.0];
    let mut cumulative = vec![0u64];
    let mut running = 0u64;
    for (b, &m) in t2.iter().enumerate() {
        if m == 0 {
            continue;
        }
        running += m;
        jumps.push(typeii_value(b as u64));
        cumulative.push(running);
    }
    Ok(JumpSequence {
        limit,
        jumps,
        cumulative,
    })
}

/// A fully built spectrum: the merged sequence plus the per-branch views
/// needed by the remainder identities.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub merged: JumpSequence,
    pub torus: JumpSequence,
    pub type_ii: JumpSequence,
}

impl Spectrum {
    pub fn build(limit: f64) -> Result<Spectrum> {
        Ok(Spectrum {
            merged: merged_jump_sequence(limit)?,
            torus: torus_jump_sequence(limit)?,
            type_ii: typeii_jump_sequence(limit)?,
        })
    }

    pub fn limit(&self) -> f64 {
        self.merged.limit
    }

    /// N(s): all eigenvalues ≤ s, both branches.
    pub fn count_total(&self, s: f64) -> Result<u64> {
        self.merged.count_at(s)
    }

    /// N_T(s): torus branch only (zero mode included).
    pub fn count_torus(&self, s: f64) -> Result<u64> {
        self.torus.count_at(s)
    }

    /// N_H(s): type-II branch only.
    pub fn count_typeii(&self, s: f64) -> Result<u64> {
        self.type_ii.count_at(s)
    }
}
