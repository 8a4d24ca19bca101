//! Numeric policy shared across the crate.
//!
//! Every tolerance that a check or a certificate depends on lives here, so
//! the values can be audited in one place instead of hunting magic numbers.

/// Largest supported ambient dimension. Dense vectors over `F_2^n` have
/// `2^n` entries, so this bounds memory at 128 MiB per distribution.
pub const MAX_DIM: usize = 24;

/// A distribution must sum to 1 within this tolerance.
pub const DIST_SUM_TOL: f64 = 1e-12;

/// Entries below this are treated as exact zeros by support queries and by
/// the KL-divergence infinity rule. Distinguishes transform round-off from
/// genuinely small probabilities.
pub const SUPPORT_CUTOFF: f64 = 1e-15;

/// Conditioning events lighter than this are dropped from conditional
/// families (with weight renormalization) to avoid 0/0 fibres.
pub const COND_WEIGHT_MIN: f64 = 1e-9;

/// Slack for identities and inequalities evaluated in exact arithmetic
/// (entropies, mutual informations, the fibring identities), in bits.
pub const IDENTITY_TOL: f64 = 1e-9;

/// Slack for inequalities whose sides go through the EM inner solver, which
/// only certifies an upper bound on the KL infimum.
pub const EM_CHECK_TOL: f64 = 1e-6;

/// EM stops once an iteration improves the objective by less than this many
/// bits…
pub const EM_TOL_BITS: f64 = 1e-10;

/// …or after this many iterations, whichever comes first.
pub const EM_MAX_ITERS: usize = 10_000;

/// Pointwise agreement required between the Walsh-Hadamard convolution and
/// the direct quadratic convolution.
pub const FWHT_AGREEMENT_TOL: f64 = 1e-10;

/// Slack allowed on the certified τ inequality reported after a descent,
/// in bits. Absorbs dropped sub-`COND_WEIGHT_MIN` fibres, the `d_stop`
/// residue, and EM gaps accumulated over a full run.
pub const CERT_SLACK_BITS: f64 = 1e-3;

/// A freshly extracted subspace must reproduce the final iterate within
/// this many bits of Ruzsa distance.
pub const EXTRACT_DIST_TOL: f64 = 0.01;

/// Probabilities are quantized at this granularity before fingerprinting a
/// distribution for the τ memo table.
pub const MEMO_QUANTUM: f64 = 1e-12;

/// A candidate must beat the current φ by more than this to count as
/// progress.
pub const PHI_PROGRESS_MARGIN: f64 = 1e-12;

/// Sum tolerance accepted when loading a distribution from a text file
/// (looser than [`DIST_SUM_TOL`] because probabilities arrive in decimal);
/// the loader renormalizes after validating.
pub const DIST_FILE_SUM_TOL: f64 = 1e-9;
