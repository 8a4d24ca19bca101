//! Additive combinatorics over `F_2^n`, computed exactly.
//!
//! The crate has four layers:
//!
//! - [`f2n`]: bitwise group arithmetic — elements, finite sets, sumsets,
//!   doubling constants, and RREF-canonical linear subspaces.
//! - [`dist`] + [`fwht`]: dense probability distributions on all `2^n` group
//!   elements, Shannon entropy / mutual information / KL divergence, and XOR
//!   convolution through the fast Walsh-Hadamard transform.
//! - [`ruzsa`] + [`tau`]: the entropic Ruzsa distance, its fibring
//!   decomposition into sum / fibre / mutual-information terms, the entropic
//!   Balog-Szemerédi-Gowers bound, and two families of translation-invariant
//!   τ potentials (reference-distance and KL-deconvolution).
//! - [`descent`] + [`covering`]: the φ = d + η·τ minimization loop that
//!   drives a pair of distributions to uniformity on a coset, extracts the
//!   subspace, and converts it into a certified cover of a set `A` with
//!   `|A+A| ≤ K|A|` by at most `2K^9` translates of a subspace no larger
//!   than `|A|`.
//!
//! [`suites`] bundles the randomized verification suites behind the `pfr`
//! binary, and [`report`] holds its machine-readable output format.

pub mod consts;
pub mod covering;
pub mod descent;
pub mod dist;
pub mod error;
pub mod f2n;
pub mod fwht;
pub mod report;
pub mod ruzsa;
pub mod sampling;
pub mod suites;
pub mod tau;

pub use covering::{pfr_cover, ruzsa_cover, shrink_subspace, slice_to_cover, Cover};
pub use descent::{run_descent, DescentConfig, DescentOutcome, DescentTrace};
pub use dist::{kl_divergence, xor_convolve, CondFamily, Dist, Joint2};
pub use error::{Error, Result};
pub use f2n::{Element, F2Set, Subspace};
pub use ruzsa::{conditional_ruzsa_distance, fibring_report, ruzsa_distance};
pub use tau::{kl_inf_conv, tau_minus_subspace_oracle, TauFunctional};
