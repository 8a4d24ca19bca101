//! The τ potentials steering the descent.
//!
//! Two families, both translation invariant and both shrinking under the
//! sum/conditioning growth laws the descent needs:
//!
//! - **Entropic**: `τ(X) = d[R ; X]` against a fixed reference
//!   distribution `R`.
//! - **Covering**: `τ(X) = ½(τ⁺(X) + τ⁻(X))` for a fixed reference set
//!   `A`, where `τ⁻(X) = inf_T D_KL(X ‖ U_A + T)` and
//!   `τ⁺(X) = τ⁻(X) + H(X) - H(U_A)`. The infimum runs over all auxiliary
//!   distributions `T`; it is approached from above by EM, so every
//!   reported value is a certified upper bound.
//!
//! Evaluations canonicalize their argument by translating the argmax to
//! the origin first. Translates of the same distribution therefore produce
//! bit-identical inputs, which makes translation invariance exact and lets
//! one memo entry serve the whole orbit.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::consts::{
    EM_CHECK_TOL, EM_MAX_ITERS, EM_TOL_BITS, IDENTITY_TOL, MEMO_QUANTUM,
};
use crate::dist::{kl_raw, CondFamily, Dist};
use crate::error::{check_dims, Error, Result};
use crate::f2n::{coset_intersection_max, F2Set, Subspace};
use crate::fwht::wht_in_place;

/// Result of minimizing `T ↦ D_KL(X ‖ U_A + T)` over the simplex.
#[derive(Clone, Debug)]
pub struct KlInfResult {
    /// Achieved objective in bits; an upper bound on the infimum.
    pub value: f64,
    pub minimizer: Dist,
    pub iterations: usize,
    pub converged: bool,
}

/// EM (multiplicative mixture-weight) minimization of
/// `F(T) = D_KL(X ‖ U_A * T)`.
///
/// The objective is convex in `T` and each update
/// `T'(t) ∝ T(t) · Σ_x X(x)·U_A(x+t)/(U_A*T)(x)` stays on the simplex and
/// never increases `F`. Starting from the uniform `T` makes `U_A * T`
/// exactly uniform, so the objective starts finite for every valid `X`.
pub fn kl_inf_conv(x: &Dist, a: &F2Set) -> Result<KlInfResult> {
    check_dims(x.dim(), a.dim())?;
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    let dim = x.dim();
    let size = 1usize << dim;
    let ua = Dist::uniform_on(a)?;
    let mut wht_ua = ua.probabilities().to_vec();
    wht_in_place(&mut wht_ua);

    let xp = x.probabilities();
    let mut t = vec![1.0 / size as f64; size];
    let mut value = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let scale = 1.0 / size as f64;

    let mut scratch = vec![0.0; size];
    for _ in 0..EM_MAX_ITERS {
        // m = U_A * T through the transform.
        let mut m = t.clone();
        wht_in_place(&mut m);
        for (mi, &ui) in m.iter_mut().zip(&wht_ua) {
            *mi *= ui;
        }
        wht_in_place(&mut m);
        for mi in &mut m {
            *mi = (*mi * scale).max(0.0);
        }

        let f = kl_raw(xp, &m);
        iterations += 1;
        let improvement = value - f;
        debug_assert!(
            improvement > -IDENTITY_TOL,
            "EM objective increased by {}",
            -improvement
        );
        value = f;
        if improvement < EM_TOL_BITS {
            converged = true;
            break;
        }

        // T'(t) = T(t) · (X/M ⋆ U_A)(t); the correlation is a convolution
        // because every group element is its own inverse.
        for (g, (&xi, &mi)) in scratch.iter_mut().zip(xp.iter().zip(&m)) {
            *g = if xi > 0.0 { xi / mi.max(1e-300) } else { 0.0 };
        }
        wht_in_place(&mut scratch);
        for (g, &ui) in scratch.iter_mut().zip(&wht_ua) {
            *g *= ui;
        }
        wht_in_place(&mut scratch);
        let mut total = 0.0;
        for (ti, &g) in t.iter_mut().zip(&scratch) {
            *ti *= (g * scale).max(0.0);
            total += *ti;
        }
        if total <= 0.0 || !total.is_finite() {
            break;
        }
        for ti in &mut t {
            *ti /= total;
        }
    }

    Ok(KlInfResult {
        value,
        minimizer: Dist::from_raw_normalized(dim, t),
        iterations,
        converged,
    })
}

/// Closed form `τ⁻(U_V) = log|A| - log max_t |A ∩ (V+t)|`; the exactness
/// oracle for [`kl_inf_conv`] on subspace-uniform inputs.
pub fn tau_minus_subspace_oracle(a: &F2Set, v: &Subspace) -> Result<f64> {
    let (_, best) = coset_intersection_max(a, v)?;
    Ok((a.len() as f64).log2() - (best as f64).log2())
}

enum Inner {
    Entropic { reference: Dist },
    Covering { reference: F2Set, log_size: f64 },
}

/// A τ potential: `eval` on distributions, `eval_cond` on conditional
/// families by weighted average.
pub struct TauFunctional {
    inner: Inner,
    dim: usize,
    memo: Mutex<HashMap<u128, f64>>,
}

impl TauFunctional {
    /// `τ(X) = d[R ; X]` for a fixed reference distribution.
    pub fn entropic(reference: Dist) -> TauFunctional {
        TauFunctional {
            dim: reference.dim(),
            inner: Inner::Entropic { reference },
            memo: Mutex::new(HashMap::new()),
        }
    }

    /// `τ(X) = ½(τ⁺(X) + τ⁻(X))` for a fixed reference set; zero at `U_A`.
    pub fn covering(reference: F2Set) -> Result<TauFunctional> {
        if reference.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(TauFunctional {
            dim: reference.dim(),
            inner: Inner::Covering {
                log_size: (reference.len() as f64).log2(),
                reference,
            },
        memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_covering(&self) -> bool {
        matches!(self.inner, Inner::Covering { .. })
    }

    /// Slack to allow when checking inequalities whose sides pass through
    /// this functional: exact arithmetic for the entropic kind, EM upper
    /// bounds for the covering kind.
    pub fn check_slack(&self) -> f64 {
        match self.inner {
            Inner::Entropic { .. } => IDENTITY_TOL,
            Inner::Covering { .. } => EM_CHECK_TOL,
        }
    }

    pub fn eval(&self, x: &Dist) -> Result<f64> {
        check_dims(x.dim(), self.dim)?;
        let canon = x.canonical_translate();
        match &self.inner {
            Inner::Entropic { reference } => {
                let key = fingerprint(&canon);
                if let Some(&v) = self.memo.lock().unwrap().get(&key) {
                    return Ok(v);
                }
                let v = crate::ruzsa::ruzsa_distance(reference, &canon)?;
                self.memo.lock().unwrap().insert(key, v);
                Ok(v)
            }
            Inner::Covering { log_size, .. } => {
                let minus = self.minus_of_canonical(&canon)?;
                Ok(minus + 0.5 * (canon.entropy() - log_size))
            }
        }
    }

    /// `τ(X|Z) = E_z τ(X|_{Z=z})`.
    pub fn eval_cond(&self, family: &CondFamily) -> Result<f64> {
        check_dims(family.dim(), self.dim)?;
        let mut acc = 0.0;
        for c in family.conditions() {
            acc += c.weight * self.eval(&c.dist)?;
        }
        Ok(acc)
    }

    /// `τ⁻(X)`, covering kind only.
    pub fn minus_value(&self, x: &Dist) -> Result<f64> {
        check_dims(x.dim(), self.dim)?;
        match &self.inner {
            Inner::Entropic { .. } => Err(Error::InvalidConfig(
                "τ⁻ is only defined for the covering kind".into(),
            )),
            Inner::Covering { .. } => self.minus_of_canonical(&x.canonical_translate()),
        }
    }

    /// `τ⁺(X) = τ⁻(X) + H(X) - log|A|`, covering kind only.
    pub fn plus_value(&self, x: &Dist) -> Result<f64> {
        match &self.inner {
            Inner::Entropic { .. } => Err(Error::InvalidConfig(
                "τ⁺ is only defined for the covering kind".into(),
            )),
            Inner::Covering { log_size, .. } => {
                let canon = x.canonical_translate();
                Ok(self.minus_of_canonical(&canon)? + canon.entropy() - log_size)
            }
        }
    }

    pub fn reference_set(&self) -> Option<&F2Set> {
        match &self.inner {
            Inner::Covering { reference, .. } => Some(reference),
            Inner::Entropic { .. } => None,
        }
    }

    fn minus_of_canonical(&self, canon: &Dist) -> Result<f64> {
        let Inner::Covering { reference, .. } = &self.inner else {
            unreachable!("caller checked the kind");
        };
        let key = fingerprint(canon);
        if let Some(&v) = self.memo.lock().unwrap().get(&key) {
            return Ok(v);
        }
        let v = kl_inf_conv(canon, reference)?.value;
        self.memo.lock().unwrap().insert(key, v);
        Ok(v)
    }
}

/// One named inequality / identity check with its worst observed violation.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ConditionCheck {
    pub name: String,
    pub instances: usize,
    pub max_violation: f64,
    pub tolerance: f64,
}

impl ConditionCheck {
    pub fn pass(&self) -> bool {
        self.max_violation <= self.tolerance
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ConditionsReport {
    pub checks: Vec<ConditionCheck>,
    pub trials: usize,
}

impl ConditionsReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(ConditionCheck::pass)
    }

    pub fn max_violation(&self) -> f64 {
        self.checks
            .iter()
            .fold(0.0f64, |m, c| m.max(c.max_violation))
    }
}

struct CheckAccum {
    name: &'static str,
    tolerance: f64,
    max_violation: f64,
    instances: usize,
}

impl CheckAccum {
    fn new(name: &'static str, tolerance: f64) -> Self {
        CheckAccum {
            name,
            tolerance,
            max_violation: 0.0,
            instances: 0,
        }
    }

    fn record(&mut self, violation: f64) {
        if violation.is_finite() {
            self.max_violation = self.max_violation.max(violation);
        }
        self.instances += 1;
    }
}

/// Randomized verification of the growth laws the descent requires of a τ
/// potential, on `trials` seeded instances at the functional's own
/// dimension:
///
/// - `τ(X+Y) ≤ τ(X) + ½(H(X+Y) - H(X))`
/// - `τ(X|Z) ≤ τ(X) + ½(H(X) - H(X|Z))`
/// - `τ(X+s) = τ(X)`, exactly
/// - stability under a `1e-6` mixture perturbation (continuity, qualitative)
///
/// For the covering kind the four one-sided laws of τ⁻/τ⁺ and the two KL
/// facts they rest on (`D(X+Z‖Y+Z) ≤ D(X‖Y)` and the conditioning identity
/// `D(X|W‖Y) = D(X‖Y) + H(X) - H(X|W)`) are checked as well.
pub fn verify_tau_conditions(
    tau: &TauFunctional,
    trials: usize,
    seed: u64,
) -> Result<ConditionsReport> {
    use crate::dist::{kl_divergence, kl_divergence_conditional, xor_convolve};
    use crate::sampling;
    use rand::Rng;

    let dim = tau.dim();
    let slack = tau.check_slack();
    let mut sum_growth = CheckAccum::new("sum-growth", slack);
    let mut cond_growth = CheckAccum::new("conditioning-growth", slack);
    let mut translation = CheckAccum::new("translation-invariance", 0.0);
    let mut continuity = CheckAccum::new("continuity-perturbation", 1e-3);
    let mut minus_sum = CheckAccum::new("minus-sum-contraction", EM_CHECK_TOL);
    let mut minus_cond = CheckAccum::new("minus-conditioning-growth", EM_CHECK_TOL);
    let mut plus_sum = CheckAccum::new("plus-sum-growth", EM_CHECK_TOL);
    let mut plus_cond = CheckAccum::new("plus-conditioning-contraction", EM_CHECK_TOL);
    let mut kl_conv = CheckAccum::new("kl-convolution-contraction", IDENTITY_TOL);
    let mut kl_cond_id = CheckAccum::new("kl-conditioning-identity", IDENTITY_TOL);

    for trial in 0..trials {
        let mut rng = sampling::trial_rng(seed, trial as u64);
        let x = sampling::random_mixed_dist(&mut rng, dim);
        let y = sampling::random_mixed_dist(&mut rng, dim);
        let zdim = rng.gen_range(1..=2usize.min(dim));
        let joint = sampling::random_joint(&mut rng, (dim, zdim));
        let xj = joint.marginal_first();
        let family = joint.condition_on_second()?;

        // Sum growth.
        let conv = xor_convolve(&x, &y)?;
        let rhs = tau.eval(&x)? + 0.5 * (conv.entropy() - x.entropy());
        sum_growth.record(tau.eval(&conv)? - rhs);

        // Conditioning growth.
        let rhs = tau.eval(&xj)? + 0.5 * (xj.entropy() - joint.conditional_entropy());
        cond_growth.record(tau.eval_cond(&family)? - rhs);

        // Exact translation invariance.
        let s = rng.gen_range(0..1u32 << dim);
        translation.record((tau.eval(&x.shift(s))? - tau.eval(&x)?).abs());

        // Continuity under a small mixture with the uniform distribution.
        let eps = 1e-6;
        let uniform_mass = eps / (1usize << dim) as f64;
        let perturbed: Vec<f64> = x
            .probabilities()
            .iter()
            .map(|&p| (1.0 - eps) * p + uniform_mass)
            .collect();
        let perturbed = Dist::from_weights(dim, perturbed)?;
        continuity.record((tau.eval(&perturbed)? - tau.eval(&x)?).abs());

        if tau.is_covering() {
            minus_sum.record(tau.minus_value(&conv)? - tau.minus_value(&x)?);

            let minus_cond_lhs: f64 = family
                .conditions()
                .iter()
                .map(|c| Ok(c.weight * tau.minus_value(&c.dist)?))
                .sum::<Result<f64>>()?;
            let rhs =
                tau.minus_value(&xj)? + xj.entropy() - joint.conditional_entropy();
            minus_cond.record(minus_cond_lhs - rhs);

            let rhs = tau.plus_value(&x)? + conv.entropy() - x.entropy();
            plus_sum.record(tau.plus_value(&conv)? - rhs);

            let plus_cond_lhs: f64 = family
                .conditions()
                .iter()
                .map(|c| Ok(c.weight * tau.plus_value(&c.dist)?))
                .sum::<Result<f64>>()?;
            plus_cond.record(plus_cond_lhs - tau.plus_value(&xj)?);

            // KL contraction under an independent convolution. Only dense
            // second arguments keep both sides finite.
            let dense = sampling::random_dense_dist(&mut rng, dim);
            let z = sampling::random_mixed_dist(&mut rng, dim);
            let base = kl_divergence(&x, &dense)?;
            let smeared = kl_divergence(&xor_convolve(&x, &z)?, &xor_convolve(&dense, &z)?)?;
            kl_conv.record(smeared - base);

            // Conditioning identity for KL against an independent target.
            let lhs = kl_divergence_conditional(&family, &dense)?;
            let rhs = kl_divergence(&xj, &dense)? + xj.entropy() - joint.conditional_entropy();
            kl_cond_id.record((lhs - rhs).abs());
        }
    }

    let mut accums = vec![sum_growth, cond_growth, translation, continuity];
    if tau.is_covering() {
        accums.extend([minus_sum, minus_cond, plus_sum, plus_cond, kl_conv, kl_cond_id]);
    }
    Ok(ConditionsReport {
        checks: accums
            .into_iter()
            .map(|a| ConditionCheck {
                name: a.name.to_string(),
                instances: a.instances,
                max_violation: a.max_violation,
                tolerance: a.tolerance,
            })
            .collect(),
        trials,
    })
}

/// 128-bit FNV-1a over the dimension and the probabilities quantized at
/// [`MEMO_QUANTUM`]. Collisions are negligible at the table sizes a
/// descent produces.
fn fingerprint(d: &Dist) -> u128 {
    const OFFSET: u128 = 0x6c62272e07bb014262b821756295c58d;
    const PRIME: u128 = 0x0000000001000000000000000000013B;
    let mut h = OFFSET;
    let feed = |h: &mut u128, byte: u8| {
        *h ^= byte as u128;
        *h = h.wrapping_mul(PRIME);
    };
    for b in (d.dim() as u64).to_le_bytes() {
        feed(&mut h, b);
    }
    for &p in d.probabilities() {
        let q = (p / MEMO_QUANTUM).round() as u64;
        for b in q.to_le_bytes() {
            feed(&mut h, b);
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::xor_convolve;
    use crate::ruzsa::ruzsa_distance;

    fn three_point_set() -> F2Set {
        F2Set::new(2, [0b00, 0b01, 0b10]).unwrap()
    }

    #[test]
    fn em_recovers_zero_on_reference_uniform() {
        let a = three_point_set();
        let ua = Dist::uniform_on(&a).unwrap();
        let result = kl_inf_conv(&ua, &a).unwrap();
        assert!(result.value.abs() < 1e-6, "value {}", result.value);
        // The point mass at 0 is the unique exact deconvolution here.
        assert!(result.minimizer.probability(0) > 0.9);
    }

    #[test]
    fn em_matches_subspace_closed_form() {
        let a = three_point_set();
        let v = Subspace::from_vectors(2, &[0b01]).unwrap();
        let uv = Dist::uniform_on_subspace(&v).unwrap();
        let result = kl_inf_conv(&uv, &a).unwrap();
        let expect = 3f64.log2() - 1.0;
        assert!((result.value - expect).abs() < 1e-6, "value {}", result.value);

        let oracle = tau_minus_subspace_oracle(&a, &v).unwrap();
        assert!((oracle - expect).abs() < 1e-12);
    }

    #[test]
    fn em_exact_deconvolution_of_point_mass() {
        let c = 0b101;
        let a = F2Set::new(3, [c]).unwrap();
        let x = Dist::point_mass(3, c).unwrap();
        let result = kl_inf_conv(&x, &a).unwrap();
        assert!(result.value.abs() < 1e-9);
    }

    #[test]
    fn oracle_edge_cases() {
        let a = three_point_set();
        let full = Subspace::full(2).unwrap();
        assert!(tau_minus_subspace_oracle(&a, &full).unwrap().abs() < 1e-12);

        let v = Subspace::from_vectors(3, &[0b001, 0b010]).unwrap();
        let members = v.member_set();
        assert!(tau_minus_subspace_oracle(&members, &v).unwrap().abs() < 1e-12);
    }

    #[test]
    fn covering_tau_examples() {
        let a = three_point_set();
        let tau = TauFunctional::covering(a.clone()).unwrap();
        let ua = Dist::uniform_on(&a).unwrap();
        assert!(tau.eval(&ua).unwrap().abs() < 1e-6);

        let v = Subspace::from_vectors(2, &[0b01]).unwrap();
        let uv = Dist::uniform_on_subspace(&v).unwrap();
        let expect = 0.5 * (2.0 * (3f64.log2() - 1.0) + 1.0 - 3f64.log2());
        assert!((tau.eval(&uv).unwrap() - expect).abs() < 1e-6);

        let c = 0b11;
        let single = F2Set::new(2, [c]).unwrap();
        let tau_single = TauFunctional::covering(single).unwrap();
        let point = Dist::point_mass(2, c).unwrap();
        assert!(tau_single.eval(&point).unwrap().abs() < 1e-9);
    }

    #[test]
    fn entropic_tau_is_reference_distance() {
        let a = three_point_set();
        let ua = Dist::uniform_on(&a).unwrap();
        let tau = TauFunctional::entropic(ua.clone());
        let expect = ruzsa_distance(&ua, &ua).unwrap();
        assert!((tau.eval(&ua).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 0.3899750004807704).abs() < 1e-12);

        let v = Subspace::from_vectors(3, &[0b110]).unwrap();
        let uv = Dist::uniform_on_subspace(&v).unwrap();
        let tau_v = TauFunctional::entropic(uv.clone());
        assert!(tau_v.eval(&uv).unwrap().abs() < 1e-12);
    }

    #[test]
    fn translation_invariance_is_exact() {
        let a = three_point_set();
        let ua = Dist::uniform_on(&a).unwrap();
        for tau in [
            TauFunctional::entropic(ua.clone()),
            TauFunctional::covering(a).unwrap(),
        ] {
            let x = Dist::from_weights(2, vec![0.4, 0.3, 0.2, 0.1]).unwrap();
            let base = tau.eval(&x).unwrap();
            for s in 0..4u32 {
                let shifted = tau.eval(&x.shift(s)).unwrap();
                assert_eq!(base.to_bits(), shifted.to_bits());
            }
        }
    }

    #[test]
    fn eval_cond_is_weighted_average() {
        let a = three_point_set();
        let tau = TauFunctional::entropic(Dist::uniform_on(&a).unwrap());
        let x = Dist::from_weights(2, vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let y = xor_convolve(&x, &x).unwrap();
        let fam = CondFamily::new(
            2,
            vec![
                crate::dist::Condition { label: 0, weight: 0.25, dist: x.clone() },
                crate::dist::Condition { label: 1, weight: 0.75, dist: y.clone() },
            ],
        )
        .unwrap();
        let expect = 0.25 * tau.eval(&x).unwrap() + 0.75 * tau.eval(&y).unwrap();
        assert!((tau.eval_cond(&fam).unwrap() - expect).abs() < 1e-12);
    }
}
