//! Seeded randomized verification suites.
//!
//! Each suite draws `trials` independent instances (trial `i` from its own
//! ChaCha8 stream, dimensions cycling through `1..=n`) and tracks the worst
//! violation of every named property. Workers only change scheduling, never
//! the instances or the aggregate, so reports are identical at any `--jobs`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::consts::{EM_CHECK_TOL, IDENTITY_TOL};
use crate::dist::{kl_divergence, kl_raw, Dist};
use crate::error::{Error, Result};
use crate::f2n::coset_intersection_max;
use crate::ruzsa::{bsg_bound, endgame_candidates, fibring_report};
use crate::sampling;
use crate::tau::{
    kl_inf_conv, tau_minus_subspace_oracle, verify_tau_conditions, ConditionCheck,
    TauFunctional,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuiteKind {
    Measures,
    Fibring,
    Bsg,
    Tau,
    Bridge,
}

impl SuiteKind {
    pub const ALL: [SuiteKind; 5] = [
        SuiteKind::Measures,
        SuiteKind::Fibring,
        SuiteKind::Bsg,
        SuiteKind::Tau,
        SuiteKind::Bridge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::Measures => "measures",
            SuiteKind::Fibring => "fibring",
            SuiteKind::Bsg => "bsg",
            SuiteKind::Tau => "tau",
            SuiteKind::Bridge => "bridge",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        SuiteKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub max_dim: usize,
    pub trials: usize,
    pub seed: u64,
    pub checks: Vec<ConditionCheck>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(ConditionCheck::pass)
    }

    pub fn max_violation(&self) -> f64 {
        self.checks
            .iter()
            .fold(0.0f64, |m, c| m.max(c.max_violation))
    }
}

/// Runs `trials` seeded instances, possibly in parallel, and folds the
/// per-check violations by maximum. Trial streams depend only on
/// `(seed, index)`, so the fold is order-independent.
fn run_trials<F>(
    names: &[(&'static str, f64)],
    trials: usize,
    seed: u64,
    jobs: usize,
    trial: F,
) -> Result<Vec<ConditionCheck>>
where
    F: Fn(usize, &mut ChaCha8Rng) -> Result<Vec<f64>> + Sync,
{
    let run_one = |i: usize| -> Result<Vec<f64>> {
        let mut rng = sampling::trial_rng(seed, i as u64);
        let v = trial(i, &mut rng)?;
        debug_assert_eq!(v.len(), names.len());
        Ok(v)
    };
    let all: Vec<Vec<f64>> = if jobs <= 1 {
        (0..trials).map(run_one).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(|| (0..trials).into_par_iter().map(run_one).collect::<Result<_>>())?
    };
    Ok(names
        .iter()
        .enumerate()
        .map(|(idx, (name, tolerance))| ConditionCheck {
            name: name.to_string(),
            instances: trials,
            max_violation: all
                .iter()
                .map(|v| v[idx])
                .fold(0.0f64, |m, x| if x.is_finite() { m.max(x) } else { m }),
            tolerance: *tolerance,
        })
        .collect())
}

fn cycle_dim(i: usize, max_dim: usize) -> usize {
    1 + i % max_dim
}

/// Entropy / KL / mutual-information properties on random instances.
fn measures_suite(max_dim: usize, trials: usize, seed: u64, jobs: usize) -> Result<Vec<ConditionCheck>> {
    const CHECKS: [(&str, f64); 6] = [
        ("subadditivity", IDENTITY_TOL),
        ("entropy-concavity", IDENTITY_TOL),
        ("kl-nonnegativity", IDENTITY_TOL),
        ("kl-convexity", IDENTITY_TOL),
        ("injection-invariance", IDENTITY_TOL),
        ("chain-rule", IDENTITY_TOL),
    ];
    run_trials(&CHECKS, trials, seed, jobs, |i, rng| {
        let dim = cycle_dim(i, max_dim);
        let zdim = rng.gen_range(1..=2usize);
        let joint = sampling::random_joint(rng, (dim, zdim));

        let subadd = -(joint.marginal_first().entropy() + joint.marginal_second().entropy()
            - joint.entropy());

        let p = sampling::random_dense_dist(rng, dim);
        let q = sampling::random_dense_dist(rng, dim);
        let lambda = [0.0, 0.25, 0.5, 1.0][i % 4];
        let mix: Vec<f64> = p
            .probabilities()
            .iter()
            .zip(q.probabilities())
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        let mix = Dist::new(dim, mix)?;
        let concavity =
            lambda * p.entropy() + (1.0 - lambda) * q.entropy() - mix.entropy();

        let kl_nonneg = -kl_divergence(&p, &q)?;

        let p2 = sampling::random_dense_dist(rng, dim);
        let q2 = sampling::random_dense_dist(rng, dim);
        let mix_p: Vec<f64> = p
            .probabilities()
            .iter()
            .zip(p2.probabilities())
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        let mix_q: Vec<f64> = q
            .probabilities()
            .iter()
            .zip(q2.probabilities())
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        let convexity = kl_raw(&mix_p, &mix_q)
            - (lambda * kl_divergence(&p, &q)? + (1.0 - lambda) * kl_divergence(&p2, &q2)?);

        // Shift composed with an invertible linear map.
        let cols = sampling::random_invertible_map(rng, dim);
        let shift = rng.gen_range(0..1u32 << dim);
        let f = |x: u32| sampling::apply_linear_map(&cols, x) ^ shift;
        let x = sampling::random_mixed_dist(rng, dim);
        let fx = x.apply_bijection(f);
        let fq = q.apply_bijection(f);
        let injection = (fx.entropy() - x.entropy())
            .abs()
            .max((kl_divergence(&fx, &fq)? - kl_divergence(&x, &q)?).abs());

        // H(X|Z) two ways: joint formula vs averaged fibres.
        let averaged = joint.condition_on_second()?.mean_entropy();
        let chain = (joint.conditional_entropy() - averaged).abs();

        Ok(vec![subadd, concavity, kl_nonneg, convexity, injection, chain])
    })
}

/// The three sum/fibre identities and the non-negativity of `I1`, `I2`.
fn fibring_suite(max_dim: usize, trials: usize, seed: u64, jobs: usize) -> Result<Vec<ConditionCheck>> {
    const CHECKS: [(&str, f64); 4] = [
        ("sum-fibre-identity-t", IDENTITY_TOL),
        ("sum-fibre-identity-w", IDENTITY_TOL),
        ("self-distance-identity", IDENTITY_TOL),
        ("information-nonnegativity", IDENTITY_TOL),
    ];
    run_trials(&CHECKS, trials, seed, jobs, |i, rng| {
        let dim = cycle_dim(i, max_dim);
        let x = sampling::random_mixed_dist(rng, dim);
        let y = sampling::random_mixed_dist(rng, dim);
        let report = fibring_report(&x, &y)?;
        let [r1, r2, r3] = report.identity_residuals();
        Ok(vec![
            r1.abs(),
            r2.abs(),
            r3.abs(),
            (-report.i1).max(-report.i2),
        ])
    })
}

/// The conditioned-pair inequality and the endgame bounds built on it.
fn bsg_suite(max_dim: usize, trials: usize, seed: u64, jobs: usize) -> Result<Vec<ConditionCheck>> {
    const CHECKS: [(&str, f64); 4] = [
        ("bsg-inequality", IDENTITY_TOL),
        ("endgame-sum-bound", IDENTITY_TOL),
        ("endgame-best-pair", IDENTITY_TOL),
        ("endgame-shift-structure", 0.0),
    ];
    run_trials(&CHECKS, trials, seed, jobs, |i, rng| {
        let dim = cycle_dim(i, max_dim);
        let joint = sampling::random_joint(rng, (dim, dim));
        let (lhs, rhs) = bsg_bound(&joint)?;
        let bsg = lhs - rhs;

        let x = sampling::random_mixed_dist(rng, dim);
        let y = sampling::random_mixed_dist(rng, dim);
        let report = endgame_candidates(&x, &y)?;
        let sum_bound = report.summary.lhs_sum - report.summary.rhs_bound;
        let best = report.best_pair_distance()
            - (report.summary.i1 + 2.0 * report.summary.i2);
        let mut shift_structure = 0.0f64;
        for pair in &report.pairs {
            for (cf, cs) in pair
                .first
                .conditions()
                .iter()
                .zip(pair.second.conditions())
            {
                let translate = (cf.label >> 32) as u32;
                shift_structure =
                    shift_structure.max(cf.dist.shift(translate).max_abs_diff(&cs.dist));
            }
        }
        Ok(vec![bsg, sum_bound, best, shift_structure])
    })
}

/// Growth-law conditions for both τ kinds, plus the EM-vs-closed-form
/// agreement on subspace uniforms.
fn tau_suite(max_dim: usize, trials: usize, seed: u64) -> Result<Vec<ConditionCheck>> {
    let refs = 4usize;
    let per_ref = trials.div_ceil(refs);
    let mut merged: Vec<ConditionCheck> = Vec::new();

    let mut fold = |report: crate::tau::ConditionsReport, prefix: &str| {
        for check in report.checks {
            let name = format!("{prefix}-{}", check.name);
            match merged.iter_mut().find(|c| c.name == name) {
                Some(existing) => {
                    existing.max_violation = existing.max_violation.max(check.max_violation);
                    existing.instances += check.instances;
                }
                None => merged.push(ConditionCheck { name, ..check }),
            }
        }
    };

    for r in 0..refs {
        let mut rng = sampling::trial_rng(seed, 1000 + r as u64);
        let dim = cycle_dim(r, max_dim);
        let reference = sampling::random_mixed_dist(&mut rng, dim);
        let tau = TauFunctional::entropic(reference);
        fold(
            verify_tau_conditions(&tau, per_ref, seed ^ (r as u64))?,
            "entropic",
        );

        let set = if r == 0 {
            sampling::random_subspace(&mut rng, dim).member_set()
        } else {
            sampling::random_set(&mut rng, dim)
        };
        let tau = TauFunctional::covering(set)?;
        fold(
            verify_tau_conditions(&tau, per_ref, seed ^ (r as u64) ^ 0xffff)?,
            "covering",
        );
    }

    // EM against the closed form on subspace uniforms.
    let mut em_check = ConditionCheck {
        name: "em-matches-closed-form".into(),
        instances: 0,
        max_violation: 0.0,
        tolerance: EM_CHECK_TOL,
    };
    for i in 0..trials {
        let mut rng = sampling::trial_rng(seed, 2000 + i as u64);
        let dim = cycle_dim(i, max_dim);
        let a = sampling::random_set(&mut rng, dim);
        let v = sampling::random_subspace(&mut rng, dim);
        let uv = Dist::uniform_on_subspace(&v)?;
        let em = kl_inf_conv(&uv, &a)?.value;
        let oracle = tau_minus_subspace_oracle(&a, &v)?;
        em_check.max_violation = em_check.max_violation.max((em - oracle).abs());
        em_check.instances += 1;
    }
    merged.push(em_check);
    Ok(merged)
}

/// Distance-to-slice bridge: `d[U_A;U_V] ≤ r` forces a translate with
/// `|A ∩ (V+t)| ≥ max(|A|,|V|)·2^{-2r}`, and the τ± pair gives the same
/// floor at exponent `τ⁺+τ⁻`.
fn bridge_suite(max_dim: usize, trials: usize, seed: u64, jobs: usize) -> Result<Vec<ConditionCheck>> {
    const CHECKS: [(&str, f64); 2] = [
        ("coset-slice-from-distance", 0.0),
        ("claim-slice-lower-bound", 0.0),
    ];
    run_trials(&CHECKS, trials, seed, jobs, |i, rng| {
        let dim = cycle_dim(i, max_dim);
        let a = sampling::random_set(rng, dim);
        let v = sampling::random_subspace(rng, dim);
        let ua = Dist::uniform_on(&a)?;
        let uv = Dist::uniform_on_subspace(&v)?;
        let r = crate::ruzsa::ruzsa_distance(&ua, &uv)?;
        let (_, slice) = coset_intersection_max(&a, &v)?;
        let biggest = (a.len() as f64).max(v.span_size() as f64);
        let floor = biggest * 2f64.powf(-2.0 * r) * (1.0 - IDENTITY_TOL);
        let bridge = floor - slice as f64;

        let tau = TauFunctional::covering(a.clone())?;
        let minus = tau.minus_value(&uv)?;
        let plus = tau.plus_value(&uv)?;
        let scale = 2f64.powf(-(minus + plus)) * (1.0 - IDENTITY_TOL);
        let claim = (a.len() as f64 * scale - slice as f64)
            .max(v.span_size() as f64 * scale - slice as f64);
        Ok(vec![bridge, claim])
    })
}

/// Runs one named suite at dimensions up to `max_dim`.
pub fn run_suite(
    kind: SuiteKind,
    max_dim: usize,
    trials: usize,
    seed: u64,
    jobs: usize,
) -> Result<SuiteReport> {
    if !(1..=8).contains(&max_dim) {
        return Err(Error::InvalidConfig(format!(
            "suite dimension {max_dim} outside 1..=8"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let checks = match kind {
        SuiteKind::Measures => measures_suite(max_dim, trials, seed, jobs)?,
        SuiteKind::Fibring => fibring_suite(max_dim, trials, seed, jobs)?,
        SuiteKind::Bsg => bsg_suite(max_dim, trials, seed, jobs)?,
        SuiteKind::Tau => tau_suite(max_dim, trials, seed)?,
        SuiteKind::Bridge => bridge_suite(max_dim, trials, seed, jobs)?,
    };
    Ok(SuiteReport {
        suite: kind.name().to_string(),
        max_dim,
        trials,
        seed,
        checks,
    })
}
