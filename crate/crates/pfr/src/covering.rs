//! From a subspace to a certified cover.
//!
//! Given `A` with `|A+A| ≤ K|A|` and a subspace `V` whose densest translate
//! meets `A` in at least `max(|A|,|V|)/R` points, greedy Ruzsa covering plus
//! a basis-prefix shrink of `V` covers `A` by at most `2KR` translates of a
//! subspace no larger than `|A|`. Feeding in the subspace found by the
//! covering-τ descent makes `R ≤ K^8`, which is the `2K^9` certificate.
//! Every certificate emitted here is re-verified membership-exhaustively.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::consts::{CERT_SLACK_BITS, IDENTITY_TOL};
use crate::descent::{run_descent, DescentConfig, TauCertificate};
use crate::dist::Dist;
use crate::error::{check_dims, Error, Result};
use crate::f2n::{coset_intersection_max, Element, F2Set, Subspace};
use crate::ruzsa::ruzsa_distance;
use crate::tau::{tau_minus_subspace_oracle, TauFunctional};

/// Greedy maximal packing: scans `A` in ascending order and keeps `x`
/// whenever `x+B` is disjoint from every translate already kept. The kept
/// translates `X` satisfy `A ⊆ X + (B+B)` and `|X| ≤ |A+B|/|B|`; both are
/// re-checked before returning.
pub fn ruzsa_cover(a: &F2Set, b: &F2Set) -> Result<Vec<Element>> {
    check_dims(a.dim(), b.dim())?;
    if b.is_empty() {
        return Err(Error::EmptySet);
    }
    let words = (1usize << a.dim()).div_ceil(64);
    let mut packed = vec![0u64; words];
    let mut selected: Vec<u32> = Vec::new();
    for &x in a.members() {
        let disjoint = b
            .members()
            .iter()
            .all(|&bb| packed[((x ^ bb) >> 6) as usize] >> ((x ^ bb) & 63) & 1 == 0);
        if disjoint {
            for &bb in b.members() {
                let i = (x ^ bb) as usize;
                packed[i >> 6] |= 1u64 << (i & 63);
            }
            selected.push(x);
        }
    }

    let diff = b.sumset(b)?;
    for &x in a.members() {
        if !selected.iter().any(|&s| diff.contains(x ^ s)) {
            return Err(Error::CertificateFailed(format!(
                "packing misses element {x:#b}"
            )));
        }
    }
    let ab = a.sumset(b)?;
    if selected.len() * b.len() > ab.len() {
        return Err(Error::CertificateFailed(format!(
            "packing size {} exceeds |A+B|/|B| = {}/{}",
            selected.len(),
            ab.len(),
            b.len()
        )));
    }
    selected
        .into_iter()
        .map(|x| Element::new(x, a.dim()))
        .collect()
}

/// Caps a subspace at `limit` points by keeping a prefix of its RREF
/// basis. Returns the sub-subspace and the number of its translates
/// needed to tile `V`, which never exceeds `2·|V|/limit`.
pub fn shrink_subspace(v: &Subspace, limit: u64) -> Result<(Subspace, u64)> {
    if limit == 0 {
        return Err(Error::InvalidConfig("limit must be at least 1".into()));
    }
    if v.span_size() <= limit {
        return Ok((v.clone(), 1));
    }
    let keep = 63 - limit.leading_zeros() as usize; // largest k with 2^k ≤ limit
    let vprime = Subspace::from_vectors(v.dim(), &v.basis()[..keep])?;
    let count = 1u64 << (v.rank() - keep);
    debug_assert!(count as f64 <= 2.0 * v.span_size() as f64 / limit as f64);
    Ok((vprime, count))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CoverCertificate {
    /// Every member of `A` lies in some `V' + t`.
    pub covers: bool,
    /// `|span V'| ≤ |A|`.
    pub subspace_within_size: bool,
    /// `|translates| ≤ bound`.
    pub count_within_bound: bool,
}

impl CoverCertificate {
    pub fn all(&self) -> bool {
        self.covers && self.subspace_within_size && self.count_within_bound
    }
}

/// A verified cover of a set by translates of a subspace.
#[derive(Clone, Debug, Serialize)]
pub struct Cover {
    pub vprime: Subspace,
    /// Canonical coset representatives, duplicate-free and sorted.
    pub translates: Vec<Element>,
    pub k: f64,
    /// The bound this cover was certified against: `2KR` out of
    /// [`slice_to_cover`], tightened to `2K^9` by [`pfr_cover`].
    pub bound: f64,
    pub certificate: CoverCertificate,
}

impl Cover {
    pub fn count(&self) -> usize {
        self.translates.len()
    }

    /// Membership-exhaustive coverage check.
    pub fn verify_coverage(&self, a: &F2Set) -> bool {
        let reps: BTreeSet<u32> = self
            .translates
            .iter()
            .map(|t| self.vprime.coset_rep(t.bits()))
            .collect();
        a.members()
            .iter()
            .all(|&m| reps.contains(&self.vprime.coset_rep(m)))
    }
}

/// Slices `A` along the densest translate of `V` and assembles the cover:
/// `B = A ∩ (V+t*)`, greedy packing of `A` by translates of `B`, then the
/// shrink of `V` to at most `|A|` points. Certifies
/// `count ≤ 2KR` with `R = max(|A|,|V|)/|B|`.
pub fn slice_to_cover(a: &F2Set, v: &Subspace) -> Result<Cover> {
    check_dims(a.dim(), v.dim())?;
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    let k = a.doubling_constant()?;
    let (t_star, slice_size) = coset_intersection_max(a, v)?;
    let b = a.intersect_coset(v, t_star.bits())?;
    debug_assert_eq!(b.len(), slice_size);
    let r = (a.len() as f64).max(v.span_size() as f64) / b.len() as f64;

    let packing = ruzsa_cover(a, &b)?;
    let (vprime, _) = shrink_subspace(v, a.len() as u64)?;
    // Tiling of V by V': the span of the dropped basis suffix.
    let tiling = Subspace::from_vectors(v.dim(), &v.basis()[vprime.rank()..])?;

    let mut reps: BTreeSet<u32> = BTreeSet::new();
    for x in &packing {
        for c in tiling.span_elements() {
            reps.insert(vprime.coset_rep(x.bits() ^ c));
        }
    }
    let translates: Vec<Element> = reps
        .into_iter()
        .map(|t| Element::new(t, a.dim()))
        .collect::<Result<_>>()?;

    let bound = 2.0 * k * r;
    let cover = Cover {
        vprime,
        translates,
        k,
        bound,
        certificate: CoverCertificate {
            covers: false,
            subspace_within_size: false,
            count_within_bound: false,
        },
    };
    finish_certificate(cover, a)
}

fn finish_certificate(mut cover: Cover, a: &F2Set) -> Result<Cover> {
    cover.certificate = CoverCertificate {
        covers: cover.verify_coverage(a),
        subspace_within_size: cover.vprime.span_size() <= a.len() as u64,
        count_within_bound: cover.count() as f64 <= cover.bound + IDENTITY_TOL,
    };
    if cover.certificate.all() {
        Ok(cover)
    } else {
        Err(Error::CertificateFailed(format!(
            "covers={} small-subspace={} count {} vs bound {}",
            cover.certificate.covers,
            cover.certificate.subspace_within_size,
            cover.count(),
            cover.bound
        )))
    }
}

/// Everything a full covering run certifies.
#[derive(Clone, Debug, Serialize)]
pub struct PfrCoverOutcome {
    pub cover: Cover,
    pub k: f64,
    /// `d[U_A;U_A]`, which never exceeds `log2 K`.
    pub d_aa: f64,
    /// The subspace located by the descent, before shrinking.
    pub subspace: Subspace,
    pub descent_iterations: usize,
    /// Closed-form `τ⁻(U_V)` and `τ⁺(U_V)` for that subspace.
    pub tau_minus_uv: f64,
    pub tau_plus_uv: f64,
    /// Their sum must stay below `log2(K)/η + slack`.
    pub tau_sum_cap: f64,
    /// The densest translate meets `A` in at least
    /// `2^{-(τ⁺+τ⁻)}·max(|A|,|V|)` points.
    pub slice_lower_bound_ok: bool,
    pub descent_certificate: TauCertificate,
}

/// End-to-end covering pipeline: build the covering τ for `A`, descend
/// from `(U_A, U_A)`, slice along the resulting subspace, and certify a
/// cover by at most `2K^9` translates of a subspace no larger than `|A|`.
pub fn pfr_cover(a: &F2Set, config: &DescentConfig) -> Result<PfrCoverOutcome> {
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    let k = a.doubling_constant()?;
    let log_k = k.log2();
    let ua = Dist::uniform_on(a)?;
    let d_aa = ruzsa_distance(&ua, &ua)?;
    if d_aa > log_k + IDENTITY_TOL {
        return Err(Error::CertificateFailed(format!(
            "d[U_A;U_A] = {d_aa} exceeds log2 K = {log_k}"
        )));
    }

    let tau = TauFunctional::covering(a.clone())?;
    let outcome = run_descent(&ua, &ua, &tau, &tau, config)?;
    let v = outcome.subspace.clone();

    let tau_minus_uv = tau_minus_subspace_oracle(a, &v)?;
    let tau_plus_uv = tau_minus_uv + v.rank() as f64 - (a.len() as f64).log2();
    let tau_sum_cap = log_k / config.eta + CERT_SLACK_BITS;
    if tau_minus_uv + tau_plus_uv > tau_sum_cap {
        return Err(Error::CertificateFailed(format!(
            "τ⁻(U_V)+τ⁺(U_V) = {} exceeds {tau_sum_cap}",
            tau_minus_uv + tau_plus_uv
        )));
    }

    // The slice is at least 2^{-(τ⁺+τ⁻)} of both |A| and |V|.
    let (_, slice) = coset_intersection_max(a, &v)?;
    let scale = 2f64.powf(-(tau_minus_uv + tau_plus_uv)) * (1.0 - IDENTITY_TOL);
    let floor = (a.len() as f64).max(v.span_size() as f64) * scale;
    let slice_lower_bound_ok = slice as f64 >= floor;
    if !slice_lower_bound_ok {
        return Err(Error::CertificateFailed(format!(
            "densest slice {slice} below the certified floor {floor}"
        )));
    }

    let mut cover = slice_to_cover(a, &v)?;
    cover.bound = 2.0 * k.powi(9);
    let cover = finish_certificate(cover, a)?;

    Ok(PfrCoverOutcome {
        cover,
        k,
        d_aa,
        subspace: v,
        descent_iterations: outcome.final_state.iteration,
        tau_minus_uv,
        tau_plus_uv,
        tau_sum_cap,
        slice_lower_bound_ok,
        descent_certificate: outcome.certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(dim: usize, members: &[u32]) -> F2Set {
        F2Set::new(dim, members.iter().copied()).unwrap()
    }

    #[test]
    fn packing_examples() {
        // B = A a subspace: the zero representative covers everything.
        let v = Subspace::from_vectors(3, &[0b001, 0b010]).unwrap();
        let a = v.member_set();
        let picked = ruzsa_cover(&a, &a).unwrap();
        assert_eq!(picked.len(), 1);
        assert_eq!(picked[0].bits(), 0);

        // Worked example: A = {00,01,10}, B = {00,01} packs {00, 10}.
        let a = set(2, &[0b00, 0b01, 0b10]);
        let b = set(2, &[0b00, 0b01]);
        let picked = ruzsa_cover(&a, &b).unwrap();
        let bits: Vec<u32> = picked.iter().map(|e| e.bits()).collect();
        assert_eq!(bits, vec![0b00, 0b10]);

        // Singleton B: every member of A is its own translate.
        let b = set(2, &[0b11]);
        let picked = ruzsa_cover(&a, &b).unwrap();
        assert_eq!(picked.len(), a.len());
    }

    #[test]
    fn shrink_examples() {
        let v = Subspace::from_vectors(4, &[0b0001, 0b0010, 0b0100]).unwrap();
        let (same, count) = shrink_subspace(&v, 8).unwrap();
        assert_eq!(same, v);
        assert_eq!(count, 1);

        let (smaller, count) = shrink_subspace(&v, 3).unwrap();
        assert_eq!(smaller.rank(), 1);
        assert_eq!(count, 4);
        assert!(count as f64 <= 2.0 * 8.0 / 3.0 + 1e-12);

        let zero = Subspace::zero(4).unwrap();
        let (same, count) = shrink_subspace(&zero, 5).unwrap();
        assert_eq!(same.rank(), 0);
        assert_eq!(count, 1);
    }

    #[test]
    fn slice_examples() {
        // A is itself a subspace and V matches it: one translate, 2K = 2.
        let v = Subspace::from_vectors(3, &[0b001, 0b010]).unwrap();
        let a = v.member_set();
        let cover = slice_to_cover(&a, &v).unwrap();
        assert_eq!(cover.count(), 1);
        assert!((cover.bound - 2.0).abs() < 1e-12);
        assert!(cover.verify_coverage(&a));

        // Worked example with V = span{01}: R = 1.5, bound 4.
        let a = set(2, &[0b00, 0b01, 0b10]);
        let v = Subspace::from_vectors(2, &[0b01]).unwrap();
        let cover = slice_to_cover(&a, &v).unwrap();
        assert!((cover.bound - 2.0 * (4.0 / 3.0) * 1.5).abs() < 1e-12);
        assert!(cover.count() as f64 <= cover.bound);
        assert!(cover.verify_coverage(&a));

        // A = V ∪ (x+V): K = 1, two translates suffice.
        let v = Subspace::from_vectors(3, &[0b001]).unwrap();
        let mut members = v.span_elements();
        members.extend(v.span_elements().iter().map(|&s| s ^ 0b100));
        let a = F2Set::new(3, members).unwrap();
        assert!((a.doubling_constant().unwrap() - 1.0).abs() < 1e-12);
        let cover = slice_to_cover(&a, &v).unwrap();
        assert_eq!(cover.count(), 2);
        assert!(cover.verify_coverage(&a));
    }

    #[test]
    fn pfr_cover_on_subspace_is_a_single_translate() {
        let v = Subspace::from_vectors(3, &[0b011, 0b100]).unwrap();
        let a = v.member_set();
        let out = pfr_cover(&a, &DescentConfig::default()).unwrap();
        assert_eq!(out.cover.count(), 1);
        assert!((out.k - 1.0).abs() < 1e-12);
        assert!((out.cover.bound - 2.0).abs() < 1e-12);
        assert!(out.cover.certificate.all());
        assert_eq!(out.descent_iterations, 0);
    }

    #[test]
    fn pfr_cover_on_affine_coset() {
        let v = Subspace::from_vectors(3, &[0b001, 0b010]).unwrap();
        let members: Vec<u32> = v.span_elements().iter().map(|&s| s ^ 0b100).collect();
        let a = F2Set::new(3, members).unwrap();
        let out = pfr_cover(&a, &DescentConfig::default()).unwrap();
        assert_eq!(out.cover.count(), 1);
        assert!(out.cover.verify_coverage(&a));
    }

    #[test]
    fn pfr_cover_three_point_set() {
        let a = set(2, &[0b00, 0b01, 0b10]);
        let out = pfr_cover(&a, &DescentConfig::default()).unwrap();
        let bound = 2.0 * (4.0f64 / 3.0).powi(9);
        assert!((out.cover.bound - bound).abs() < 1e-9);
        assert!(out.cover.count() as f64 <= bound);
        assert!(out.cover.verify_coverage(&a));
        assert!(out.cover.vprime.span_size() <= a.len() as u64);
    }
}
