//! Cross-checks the spectrum enumeration against brute-force lattice
//! counts that share no code with it: direct double loops over the
//! lattice, with thresholds decided in double-double arithmetic.

use hweyl_core::dd::Dd;
use hweyl_core::{load_or_build, Spectrum, SplitMix64};

/// True if the double-double `v` is at most the float `s`.
fn dd_le(v: Dd, s: f64) -> bool {
    v.hi < s || (v.hi == s && v.lo <= 0.0)
}

/// #{(m, n) in Z^2 : 4 pi^2 (m^2 + n^2) <= s}, including the origin.
fn brute_torus(s: f64) -> u64 {
    if s < 0.0 {
        return 0;
    }
    let q = Dd::TWO_PI.mul(Dd::TWO_PI);
    let radius = (s / q.to_f64()).sqrt() as i64 + 2;
    let mut count = 0u64;
    for m in -radius..=radius {
        for n in -radius..=radius {
            let v = (m * m + n * n) as f64;
            if dd_le(q.mul_f64(v), s) {
                count += 1;
            }
        }
    }
    count
}

/// Sum of 2c over pairs (c, k), c >= 1, k >= 0, with
/// 2 pi c (c + 2k + 1) <= s.
fn brute_typeii(s: f64) -> u64 {
    if s <= 0.0 {
        return 0;
    }
    let mut count = 0u64;
    let mut c = 1u64;
    loop {
        // Smallest value in this column is k = 0.
        let base = (c * (c + 1)) as f64;
        if !dd_le(Dd::TWO_PI.mul_f64(base), s) {
            break;
        }
        // First guess from float arithmetic, then settle the boundary
        // with exact comparisons.
        let mut k = ((s / (2.0 * std::f64::consts::PI * c as f64) - c as f64 - 1.0) / 2.0)
            .max(0.0) as u64;
        let val = |k: u64| Dd::TWO_PI.mul_f64((c * (c + 2 * k + 1)) as f64);
        while k > 0 && !dd_le(val(k), s) {
            k -= 1;
        }
        while dd_le(val(k + 1), s) {
            k += 1;
        }
        if dd_le(val(k), s) {
            count += 2 * c * (k + 1);
        }
        c += 1;
    }
    count
}

#[test]
fn counts_match_brute_force_at_small_integers() {
    let spectrum = Spectrum::build(2001.0).unwrap();
    for s in 0..=2000u64 {
        let s = s as f64;
        assert_eq!(
            spectrum.count_torus(s).unwrap(),
            brute_torus(s),
            "torus at {s}"
        );
        assert_eq!(
            spectrum.count_typeii(s).unwrap(),
            brute_typeii(s),
            "type-II at {s}"
        );
        assert_eq!(
            spectrum.count_total(s).unwrap(),
            brute_torus(s) + brute_typeii(s),
            "total at {s}"
        );
    }
}

#[test]
fn counts_match_brute_force_at_random_reals() {
    let spectrum = Spectrum::build(1e5).unwrap();
    let mut rng = SplitMix64::new(0x5eed_c0de);
    for _ in 0..500 {
        let s = rng.uniform(1.0, 1e5);
        assert_eq!(
            spectrum.count_total(s).unwrap(),
            brute_torus(s) + brute_typeii(s),
            "total at {s}"
        );
    }
}

#[test]
fn cached_spectrum_counts_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("entries.bin");
    let fresh = Spectrum::build(5000.0).unwrap();
    let written = load_or_build(5000.0, Some(&path)).unwrap();
    let reread = load_or_build(5000.0, Some(&path)).unwrap();
    let mut rng = SplitMix64::new(7);
    for _ in 0..200 {
        let s = rng.uniform(0.0, 5000.0);
        let want = fresh.count_total(s).unwrap();
        assert_eq!(written.count_total(s).unwrap(), want);
        assert_eq!(reread.count_total(s).unwrap(), want);
    }
}
