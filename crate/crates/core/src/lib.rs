//! Spectral counting for the arithmetic Heisenberg manifold.
//!
//! The Laplacian on the Heisenberg manifold at the standard arithmetic
//! metric has a point spectrum made of two interleaved families: a torus
//! branch `4 pi^2 (m^2 + n^2)` counted with lattice multiplicity, and a
//! sequence `2 pi c (c + 2k + 1)` with multiplicity `2c` coming from the
//! infinite-dimensional representations.  This crate builds both families
//! exactly, counts them, and studies the remainder
//!
//! ```text
//! R(s) = N(s) - kappa s^(3/2),    kappa = sqrt(2 pi) / (6 pi^2),
//! ```
//!
//! through several lenses:
//!
//! * [`spectrum`] / [`cache`] — exact enumeration, merged jump sequences,
//!   and a flat binary cache for the expensive part;
//! * [`counting`] — the remainder itself, plus the rescaled single-branch
//!   remainder whose second moment has a clean limit;
//! * [`moments`] — exact piecewise integration of `R^k` between jumps,
//!   quadrature cross-checks, and power-law fits;
//! * [`mollifier`] — a smooth two-sided squeeze of the sharp counting
//!   function, used to sandwich it at controlled resolution;
//! * [`expsum`] — the truncated oscillating-sum model of the smoothed
//!   remainder and its mean-square agreement with the truth;
//! * [`constants`] — the positive series behind the third-moment
//!   coefficient and the second-moment constant it sits next to.
//!
//! Numerical policy, applied throughout: error-free transformations
//! ([`dd`]) wherever a cancellation would otherwise eat the answer,
//! compensated accumulation for every long sum, and deterministic
//! results — the same inputs give bit-identical outputs regardless of
//! thread count.

// Validation guards are written `!(x >= lo)` rather than `x < lo` on
// purpose: the negated form also rejects NaN instead of waving it through
// into the numerics.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod constants;
pub mod counting;
pub mod dd;
pub mod error;
pub mod expsum;
pub mod moments;
pub mod mollifier;
pub mod quad;
pub mod rng;
pub mod spectrum;

pub use cache::load_or_build;
pub use constants::{
    b3_estimate, c2_partial, d3_estimate, enumerate_delta_zero, same_parity_pairs, square_free,
    DeltaZeroTerm, SeriesEstimate,
};
pub use counting::{
    main_term, remainder, remainder_h_scaled, remainder_h_scaled_at_s, RemainderSample,
    WeylConstants,
};
pub use dd::{Dd, NeumaierSum};
pub use error::{Error, Result};
pub use expsum::{build_terms, evaluate_r_eps, meansquare_gap, ExpSumConfig, ExpSumTerm, GapReport};
pub use moments::{
    fit_power_law, moment_curve, moment_integral, moment_quadrature, torus_moment_integral,
    MomentMethod, MomentResult, PowerFit,
};
pub use mollifier::{
    build_bump, count_h_exact, mollified_count_h, sandwich_check, BumpProfile, SandwichReport,
};
pub use quad::{adaptive_simpson, GaussRule, QuadResult};
pub use rng::SplitMix64;
pub use spectrum::{Branch, EigenvalueEntry, JumpSequence, Spectrum};
