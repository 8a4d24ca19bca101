//! Entropic Ruzsa distance and its exact decompositions.
//!
//! For independent copies `X1, X2 ~ X` and `Y1, Y2 ~ Y`, the six sums
//!
//! ```text
//! T = X1+Y1   T̄ = X2+Y2
//! V = X1+Y2   V̄ = X2+Y1
//! W = X1+X2   W̄ = Y1+Y2      S = X1+X2+Y1+Y2
//! ```
//!
//! tie the distance `d[X;Y] = H(X'+Y') - (H(X)+H(Y))/2` to sum terms,
//! fibre terms, and the conditional informations `I1 = I(T:V|S)`,
//! `I2 = I(T:W|S)`. The identities computed here are the invariants the
//! descent engine relies on:
//!
//! ```text
//! d[T;T̄] + d[X1|T ; Y2|T̄] = 2·d[X;Y] - I1
//! d[W;W̄] + d[X1|W ; Y1|W̄] = 2·d[X;Y] - I2
//! d[X;X] + d[Y;Y]          = 2·d[X;Y] + (I2 - I1)
//! ```
//!
//! None of the four-variable joints are ever materialized: each triple
//! `(·,·,S)` needed is assembled by one `O(2^{4n})` pass into `2^{3n}`
//! scratch, which is what makes dimensions 6-8 reachable.

use serde::Serialize;

use crate::consts::{COND_WEIGHT_MIN, IDENTITY_TOL};
use crate::dist::{entropy_bits, xor_convolve, CondFamily, Condition, Dist, Joint2};
use crate::error::{check_dims, Error, Result};

/// `d[X;Y] = H(X'+Y') - (H(X)+H(Y))/2` in bits, for independent copies.
/// Zero exactly when both are uniform on translates of one subspace.
pub fn ruzsa_distance(x: &Dist, y: &Dist) -> Result<f64> {
    check_dims(x.dim(), y.dim())?;
    let conv = xor_convolve(x, y)?;
    Ok(clamp_distance(
        conv.entropy() - 0.5 * (x.entropy() + y.entropy()),
    ))
}

fn clamp_distance(d: f64) -> f64 {
    if d < 0.0 && d > -IDENTITY_TOL {
        0.0
    } else {
        d
    }
}

/// `d[X|Z ; Y|W] = E_{z,w} d[X|_{Z=z} ; Y|_{W=w}]` over the product of the
/// two condition sets.
pub fn conditional_ruzsa_distance(fx: &CondFamily, fy: &CondFamily) -> Result<f64> {
    check_dims(fx.dim(), fy.dim())?;
    if fx.is_empty() || fy.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let mut acc = 0.0;
    for cx in fx.conditions() {
        for cy in fy.conditions() {
            acc += cx.weight * cy.weight * ruzsa_distance(&cx.dist, &cy.dist)?;
        }
    }
    Ok(acc)
}

/// The conditionals `X1 | X1+R = t` for `R` independent of `X1`, one entry
/// per sum value of positive mass, weighted by the exact law of the sum.
pub(crate) fn fibre_conditionals(x: &Dist, r: &Dist) -> Vec<Condition> {
    let size = 1usize << x.dim();
    let xp = x.probabilities();
    let rp = r.probabilities();
    let mut out = Vec::new();
    for t in 0..size {
        let mut fibre = vec![0.0; size];
        let mut mass = 0.0;
        for (a, slot) in fibre.iter_mut().enumerate() {
            let w = xp[a] * rp[t ^ a];
            *slot = w;
            mass += w;
        }
        if mass <= 0.0 {
            continue;
        }
        for slot in &mut fibre {
            *slot /= mass;
        }
        out.push(Condition {
            label: t as u64,
            weight: mass,
            dist: Dist::new(x.dim(), fibre).expect("normalized fibre"),
        });
    }
    out
}

/// Mean Ruzsa distance over the product of two full condition lists.
fn mean_pair_distance(fx: &[Condition], fy: &[Condition]) -> Result<f64> {
    let mut acc = 0.0;
    for cx in fx {
        for cy in fy {
            acc += cx.weight * cy.weight * ruzsa_distance(&cx.dist, &cy.dist)?;
        }
    }
    Ok(acc)
}

/// A 3-coordinate joint on `F_2^n × F_2^n × F_2^n`, dense.
struct TripleJoint {
    size: usize,
    p: Vec<f64>,
}

impl TripleJoint {
    fn index(&self, a: usize, b: usize, c: usize) -> usize {
        (a * self.size + b) * self.size + c
    }

    /// `I(A : B | C) = H(A,C) + H(B,C) - H(A,B,C) - H(C)` in bits.
    fn cond_information(&self) -> f64 {
        let size = self.size;
        let mut ac = vec![0.0; size * size];
        let mut bc = vec![0.0; size * size];
        let mut c = vec![0.0; size];
        for a in 0..size {
            for b in 0..size {
                let base = (a * size + b) * size;
                for (k, &mass) in self.p[base..base + size].iter().enumerate() {
                    if mass != 0.0 {
                        ac[a * size + k] += mass;
                        bc[b * size + k] += mass;
                        c[k] += mass;
                    }
                }
            }
        }
        entropy_bits(&ac) + entropy_bits(&bc) - entropy_bits(&self.p) - entropy_bits(&c)
    }

    /// Conditions on `(B, C)`, returning for each pair of positive mass the
    /// label `(b << n) | c`, the mass, and the conditional law of `A`.
    fn condition_on_last_two(&self, dim: usize) -> Vec<Condition> {
        let size = self.size;
        let mut out = Vec::new();
        for b in 0..size {
            for c in 0..size {
                let mut fibre = vec![0.0; size];
                let mut mass = 0.0;
                for (a, slot) in fibre.iter_mut().enumerate() {
                    let w = self.p[self.index(a, b, c)];
                    *slot = w;
                    mass += w;
                }
                if mass <= 0.0 {
                    continue;
                }
                for slot in &mut fibre {
                    *slot /= mass;
                }
                out.push(Condition {
                    label: ((b as u64) << 32) | c as u64,
                    weight: mass,
                    dist: Dist::new(dim, fibre).expect("normalized fibre"),
                });
            }
        }
        out
    }
}

/// One `O(2^{4n})` pass building the joint of `(X1+Y1, X1+Y2, S)`.
fn joint_t_v_s(x: &Dist, y: &Dist) -> TripleJoint {
    let size = 1usize << x.dim();
    let xp = x.probabilities();
    let yp = y.probabilities();
    let mut p = vec![0.0; size * size * size];
    for x1 in 0..size {
        if xp[x1] == 0.0 {
            continue;
        }
        for y1 in 0..size {
            let p2 = xp[x1] * yp[y1];
            if p2 == 0.0 {
                continue;
            }
            let t = x1 ^ y1;
            for y2 in 0..size {
                let p3 = p2 * yp[y2];
                if p3 == 0.0 {
                    continue;
                }
                let v = x1 ^ y2;
                let base = (t * size + v) * size;
                let ts = t ^ y2;
                for (x2, &px2) in xp.iter().enumerate() {
                    p[base + (ts ^ x2)] += p3 * px2;
                }
            }
        }
    }
    TripleJoint { size, p }
}

/// One `O(2^{4n})` pass building the joint of `(X1+Y1, X1+X2, S)`.
fn joint_t_w_s(x: &Dist, y: &Dist) -> TripleJoint {
    let size = 1usize << x.dim();
    let xp = x.probabilities();
    let yp = y.probabilities();
    let mut p = vec![0.0; size * size * size];
    for x1 in 0..size {
        if xp[x1] == 0.0 {
            continue;
        }
        for y1 in 0..size {
            let p2 = xp[x1] * yp[y1];
            if p2 == 0.0 {
                continue;
            }
            let t = x1 ^ y1;
            for x2 in 0..size {
                let p3 = p2 * xp[x2];
                if p3 == 0.0 {
                    continue;
                }
                let w = x1 ^ x2;
                let base = (t * size + w) * size;
                let ts = t ^ x2;
                for (y2, &py2) in yp.iter().enumerate() {
                    p[base + (ts ^ y2)] += p3 * py2;
                }
            }
        }
    }
    TripleJoint { size, p }
}

/// Joint of `(X1+Y1, Y1+Y2, S)`: the sum `T` against the conditioning pair
/// `(W̄, S)` of the first endgame family.
fn joint_t_wbar_s(x: &Dist, y: &Dist) -> TripleJoint {
    let size = 1usize << x.dim();
    let xp = x.probabilities();
    let yp = y.probabilities();
    let mut p = vec![0.0; size * size * size];
    for y1 in 0..size {
        if yp[y1] == 0.0 {
            continue;
        }
        for x1 in 0..size {
            let p2 = yp[y1] * xp[x1];
            if p2 == 0.0 {
                continue;
            }
            let t = x1 ^ y1;
            for y2 in 0..size {
                let p3 = p2 * yp[y2];
                if p3 == 0.0 {
                    continue;
                }
                let wb = y1 ^ y2;
                let base = (t * size + wb) * size;
                let ts = t ^ y2;
                for (x2, &px2) in xp.iter().enumerate() {
                    p[base + (ts ^ x2)] += p3 * px2;
                }
            }
        }
    }
    TripleJoint { size, p }
}

/// Joint of `(X1+X2, X2+Y2, S)`: the sum `W` against the conditioning pair
/// `(T̄, S)`. By symmetry of the independent copies this is also the joint
/// of `(W, V̄, S)`, so it serves both remaining endgame families.
fn joint_w_tbar_s(x: &Dist, y: &Dist) -> TripleJoint {
    let size = 1usize << x.dim();
    let xp = x.probabilities();
    let yp = y.probabilities();
    let mut p = vec![0.0; size * size * size];
    for x2 in 0..size {
        if xp[x2] == 0.0 {
            continue;
        }
        for x1 in 0..size {
            let p2 = xp[x2] * xp[x1];
            if p2 == 0.0 {
                continue;
            }
            let w = x1 ^ x2;
            for y2 in 0..size {
                let p3 = p2 * yp[y2];
                if p3 == 0.0 {
                    continue;
                }
                let tb = x2 ^ y2;
                let base = (w * size + tb) * size;
                let ws = w ^ y2;
                for (y1, &py1) in yp.iter().enumerate() {
                    p[base + (ws ^ y1)] += p3 * py1;
                }
            }
        }
    }
    TripleJoint { size, p }
}

/// `(I1, I2) = (I(T:V|S), I(T:W|S))`.
pub fn conditional_informations(x: &Dist, y: &Dist) -> Result<(f64, f64)> {
    check_dims(x.dim(), y.dim())?;
    let i1 = joint_t_v_s(x, y).cond_information();
    let i2 = joint_t_w_s(x, y).cond_information();
    Ok((i1, i2))
}

/// Everything the sum/fibre decomposition of one pair `(X, Y)` produces.
#[derive(Clone, Debug)]
pub struct FibringReport {
    /// `d[X;Y]`.
    pub d_xy: f64,
    /// `d[X;X]` and `d[Y;Y]`, for the self-distance identity.
    pub d_xx: f64,
    pub d_yy: f64,
    /// Laws of `T = X1+Y1`, `W = X1+X2`, and `S`.
    pub dist_t: Dist,
    pub dist_w: Dist,
    pub dist_s: Dist,
    /// `d[T;T̄]` and the fibre term `d[X1|T ; Y2|T̄]`.
    pub d_sum_t: f64,
    pub d_fib_t: f64,
    /// `d[W;W̄]` and the fibre term `d[X1|W ; Y1|W̄]`.
    pub d_sum_w: f64,
    pub d_fib_w: f64,
    /// `I(T:V|S)` and `I(T:W|S)`.
    pub i1: f64,
    pub i2: f64,
}

impl FibringReport {
    /// Signed residuals of the three identities, in bits; all should
    /// vanish within [`IDENTITY_TOL`].
    pub fn identity_residuals(&self) -> [f64; 3] {
        [
            self.d_sum_t + self.d_fib_t - (2.0 * self.d_xy - self.i1),
            self.d_sum_w + self.d_fib_w - (2.0 * self.d_xy - self.i2),
            self.d_xx + self.d_yy - (2.0 * self.d_xy + (self.i2 - self.i1)),
        ]
    }

    pub fn max_violation(&self) -> f64 {
        let residual = self
            .identity_residuals()
            .iter()
            .fold(0.0f64, |m, r| m.max(r.abs()));
        residual.max(-self.i1).max(-self.i2)
    }
}

/// Computes the full sum/fibre decomposition of `(X, Y)`.
pub fn fibring_report(x: &Dist, y: &Dist) -> Result<FibringReport> {
    check_dims(x.dim(), y.dim())?;
    let dist_t = xor_convolve(x, y)?;
    let dist_w = xor_convolve(x, x)?;
    let dist_wbar = xor_convolve(y, y)?;
    let dist_s = xor_convolve(&dist_w, &dist_wbar)?;

    let d_xy = clamp_distance(dist_t.entropy() - 0.5 * (x.entropy() + y.entropy()));
    let d_xx = clamp_distance(dist_w.entropy() - x.entropy());
    let d_yy = clamp_distance(dist_wbar.entropy() - y.entropy());
    let d_sum_t = ruzsa_distance(&dist_t, &dist_t)?;
    let d_sum_w = clamp_distance(
        dist_s.entropy() - 0.5 * (dist_w.entropy() + dist_wbar.entropy()),
    );

    // Fibre terms from the exact conditional laws, full condition lists.
    let x1_given_t = fibre_conditionals(x, y);
    let y2_given_tbar = fibre_conditionals(y, x);
    let d_fib_t = mean_pair_distance(&x1_given_t, &y2_given_tbar)?;

    let x1_given_w = fibre_conditionals(x, x);
    let y1_given_wbar = fibre_conditionals(y, y);
    let d_fib_w = mean_pair_distance(&x1_given_w, &y1_given_wbar)?;

    let (i1, i2) = conditional_informations(x, y)?;

    Ok(FibringReport {
        d_xy,
        d_xx,
        d_yy,
        dist_t,
        dist_w,
        dist_s,
        d_sum_t,
        d_fib_t,
        d_sum_w,
        d_fib_w,
        i1,
        i2,
    })
}

/// The entropic Balog-Szemerédi-Gowers bound for a joint `(R1, R2)`:
/// returns `(lhs, rhs)` of
/// `d[(R1;R2) | R1+R2] ≤ 3·I(R1:R2) + 2·H(R1+R2) - H(R1) - H(R2)`.
pub fn bsg_bound(joint: &Joint2) -> Result<(f64, f64)> {
    let (n1, n2) = joint.dims();
    check_dims(n1, n2)?;
    let size = 1usize << n1;
    let p = joint.probabilities();

    let mut lhs = 0.0;
    let mut sum_law = vec![0.0; size];
    for s in 0..size {
        let mut r1_cond = vec![0.0; size];
        let mut mass = 0.0;
        for (r1, slot) in r1_cond.iter_mut().enumerate() {
            let w = p[r1 * size + (r1 ^ s)];
            *slot = w;
            mass += w;
        }
        sum_law[s] = mass;
        if mass <= 0.0 {
            continue;
        }
        let mut r2_cond = vec![0.0; size];
        for (r2, slot) in r2_cond.iter_mut().enumerate() {
            *slot = p[(s ^ r2) * size + r2] / mass;
        }
        for slot in &mut r1_cond {
            *slot /= mass;
        }
        let d = ruzsa_distance(
            &Dist::new(n1, r1_cond)?,
            &Dist::new(n1, r2_cond)?,
        )?;
        lhs += mass * d;
    }

    let r1 = joint.marginal_first();
    let r2 = joint.marginal_second();
    let rhs = 3.0 * joint.mutual_information() + 2.0 * entropy_bits(&sum_law)
        - r1.entropy()
        - r2.entropy();
    Ok((lhs, rhs))
}

/// One endgame family: a conditioned pair whose second component is the
/// first translated by the conditioning value.
#[derive(Clone, Debug)]
pub struct EndgamePair {
    pub name: &'static str,
    pub first: CondFamily,
    pub second: CondFamily,
    /// Ruzsa distance of each kept condition, aligned with `first`.
    pub per_condition_d: Vec<f64>,
    /// Exact mean distance over all conditions of positive mass.
    pub mean_d: f64,
}

/// The three conditioned pairs entered when no sum or fibre step improves,
/// with the inequality `Σ mean_d ≤ 3·I1 + 6·I2` they must satisfy.
#[derive(Clone, Debug, Serialize)]
pub struct EndgameSummary {
    pub i1: f64,
    pub i2: f64,
    pub lhs_sum: f64,
    pub rhs_bound: f64,
    pub per_pair_mean_d: [f64; 3],
}

#[derive(Clone, Debug)]
pub struct EndgameReport {
    pub pairs: [EndgamePair; 3],
    pub summary: EndgameSummary,
}

impl EndgameReport {
    /// Smallest mean distance among the three pairs; bounded by
    /// `I1 + 2·I2`.
    pub fn best_pair_distance(&self) -> f64 {
        self.summary
            .per_pair_mean_d
            .iter()
            .fold(f64::INFINITY, |m, &d| m.min(d))
    }
}

fn build_endgame_pair(
    name: &'static str,
    conditions: Vec<Condition>,
    shift_first: bool,
    dim: usize,
) -> Result<(EndgamePair, f64)> {
    // The translate comes from the high half of the packed (cond, s) label.
    let mut full_d = Vec::with_capacity(conditions.len());
    let mut mean_d = 0.0;
    for c in &conditions {
        let shift = (c.label >> 32) as u32;
        let shifted = c.dist.shift(shift);
        let d = ruzsa_distance(&c.dist, &shifted)?;
        full_d.push(d);
        mean_d += c.weight * d;
    }
    let kept_d: Vec<f64> = conditions
        .iter()
        .zip(&full_d)
        .filter(|(c, _)| c.weight >= COND_WEIGHT_MIN)
        .map(|(_, &d)| d)
        .collect();
    let shifted_conditions: Vec<Condition> = conditions
        .iter()
        .map(|c| Condition {
            label: c.label,
            weight: c.weight,
            dist: c.dist.shift((c.label >> 32) as u32),
        })
        .collect();
    let (first, second) = if shift_first {
        (
            CondFamily::new(dim, shifted_conditions)?,
            CondFamily::new(dim, conditions)?,
        )
    } else {
        (
            CondFamily::new(dim, conditions)?,
            CondFamily::new(dim, shifted_conditions)?,
        )
    };
    Ok((
        EndgamePair {
            name,
            first,
            second,
            per_condition_d: kept_d,
            mean_d,
        },
        mean_d,
    ))
}

/// Builds the three endgame families from the factored conditional joints.
///
/// Conditioned on `(W̄=w, S=s)` the variable `V` equals `T + w`; conditioned
/// on `(T̄=t, S=s)`, `V = W + t`; conditioned on `(V̄=v, S=s)`, `T = W + v`.
/// Each second component is therefore the exact translate of the first,
/// and only the first component's conditional law is ever tabulated.
pub fn endgame_candidates(x: &Dist, y: &Dist) -> Result<EndgameReport> {
    check_dims(x.dim(), y.dim())?;
    let dim = x.dim();

    let t_conds = joint_t_wbar_s(x, y).condition_on_last_two(dim);
    let (pair_tv, d_tv) = build_endgame_pair("tv", t_conds, false, dim)?;

    // (W, T̄, S) and (W, V̄, S) share one law; the pairs differ only in
    // which side carries the translate.
    let w_conds = joint_w_tbar_s(x, y).condition_on_last_two(dim);
    let (pair_vw, d_vw) = build_endgame_pair("vw", w_conds.clone(), true, dim)?;
    let (pair_wt, d_wt) = build_endgame_pair("wt", w_conds, false, dim)?;

    let (i1, i2) = conditional_informations(x, y)?;
    let lhs_sum = d_tv + d_vw + d_wt;
    let rhs_bound = 3.0 * i1 + 6.0 * i2;

    Ok(EndgameReport {
        pairs: [pair_tv, pair_vw, pair_wt],
        summary: EndgameSummary {
            i1,
            i2,
            lhs_sum,
            rhs_bound,
            per_pair_mean_d: [d_tv, d_vw, d_wt],
        },
    })
}

/// Direct-formula law of `V = X1+Y2` against `(W̄, S)`; used by the tests
/// to confirm the translate structure of the first endgame family.
#[doc(hidden)]
pub fn endgame_tv_second_direct(x: &Dist, y: &Dist) -> Vec<(u64, f64, Dist)> {
    let size = 1usize << x.dim();
    let xp = x.probabilities();
    let yp = y.probabilities();
    let mut p = vec![0.0; size * size * size];
    for y2 in 0..size {
        if yp[y2] == 0.0 {
            continue;
        }
        for x1 in 0..size {
            let p2 = yp[y2] * xp[x1];
            if p2 == 0.0 {
                continue;
            }
            let v = x1 ^ y2;
            for y1 in 0..size {
                let p3 = p2 * yp[y1];
                if p3 == 0.0 {
                    continue;
                }
                let wb = y1 ^ y2;
                let base = (v * size + wb) * size;
                let vs = v ^ y1;
                for (x2, &px2) in xp.iter().enumerate() {
                    p[base + (vs ^ x2)] += p3 * px2;
                }
            }
        }
    }
    let joint = TripleJoint { size, p };
    joint
        .condition_on_last_two(x.dim())
        .into_iter()
        .map(|c| (c.label, c.weight, c.dist))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::f2n::{F2Set, Subspace};

    fn three_point_set() -> Dist {
        let a = F2Set::new(2, [0b00, 0b01, 0b10]).unwrap();
        Dist::uniform_on(&a).unwrap()
    }

    #[test]
    fn distance_examples() {
        let v = Subspace::from_vectors(3, &[0b001, 0b110]).unwrap();
        let uv = Dist::uniform_on_subspace(&v).unwrap();
        assert!(ruzsa_distance(&uv, &uv).unwrap().abs() < 1e-12);

        // Uniform on {00,01,10}: the nine ordered sums give
        // H = (1/3)log2(3) + (2/3)log2(4.5); subtract log2(3).
        let ua = three_point_set();
        let d = ruzsa_distance(&ua, &ua).unwrap();
        assert!((d - 0.3899750004807704).abs() < 1e-12);

        let pa = Dist::point_mass(3, 2).unwrap();
        let pb = Dist::point_mass(3, 7).unwrap();
        assert!(ruzsa_distance(&pa, &pb).unwrap().abs() < 1e-12);
    }

    #[test]
    fn conditional_distance_reduces_to_plain() {
        let ua = three_point_set();
        let ub = Dist::uniform(2).unwrap();
        let fx = CondFamily::singleton(ua.clone());
        let fy = CondFamily::singleton(ub.clone());
        let lhs = conditional_ruzsa_distance(&fx, &fy).unwrap();
        let rhs = ruzsa_distance(&ua, &ub).unwrap();
        assert!((lhs - rhs).abs() < 1e-15);

        // Point-mass pairs all have distance zero.
        let fam = CondFamily::new(
            2,
            vec![
                Condition { label: 0, weight: 0.5, dist: Dist::point_mass(2, 0).unwrap() },
                Condition { label: 1, weight: 0.5, dist: Dist::point_mass(2, 3).unwrap() },
            ],
        )
        .unwrap();
        let point = CondFamily::singleton(Dist::point_mass(2, 1).unwrap());
        assert!(conditional_ruzsa_distance(&fam, &point).unwrap().abs() < 1e-12);
    }

    #[test]
    fn fibring_on_uniform_pair_vanishes() {
        let u = Dist::uniform(3).unwrap();
        let report = fibring_report(&u, &u).unwrap();
        assert!(report.d_xy.abs() < 1e-12);
        assert!(report.i1.abs() < 1e-9);
        assert!(report.i2.abs() < 1e-9);
        assert!(report.d_sum_t.abs() < 1e-9);
        assert!(report.d_fib_t.abs() < 1e-9);
        assert!(report.max_violation() < 1e-9);
    }

    #[test]
    fn fibring_on_subspace_uniform_vanishes() {
        let v = Subspace::from_vectors(3, &[0b011, 0b100]).unwrap();
        let uv = Dist::uniform_on_subspace(&v).unwrap();
        let report = fibring_report(&uv, &uv).unwrap();
        for value in [
            report.d_xy,
            report.d_sum_t,
            report.d_fib_t,
            report.d_sum_w,
            report.d_fib_w,
            report.i1,
            report.i2,
        ] {
            assert!(value.abs() < 1e-9, "expected 0, got {value}");
        }
    }

    #[test]
    fn fibring_identities_on_set_against_point_mass() {
        let ua = three_point_set();
        let point = Dist::point_mass(2, 0).unwrap();
        let report = fibring_report(&ua, &point).unwrap();
        // d[U_A ; δ] = H(U_A) - H(U_A)/2 = log2(3)/2.
        assert!((report.d_xy - 0.5 * 3f64.log2()).abs() < 1e-12);
        assert!(report.max_violation() < 1e-9);
    }

    #[test]
    fn bsg_equality_cases() {
        let v = Subspace::from_vectors(3, &[0b101, 0b010]).unwrap();
        let uv = Dist::uniform_on_subspace(&v).unwrap();
        let j = Joint2::product(&uv, &uv);
        let (lhs, rhs) = bsg_bound(&j).unwrap();
        assert!(lhs.abs() < 1e-9);
        assert!(rhs.abs() < 1e-9);

        // Fully correlated uniform on 2^k: rhs = 3k - 2k = k, lhs = 0.
        let k = 3usize;
        let size = 1usize << k;
        let mut p = vec![0.0; size * size];
        for i in 0..size {
            p[i * size + i] = 1.0 / size as f64;
        }
        let j = Joint2::new((k, k), p).unwrap();
        let (lhs, rhs) = bsg_bound(&j).unwrap();
        assert!(lhs.abs() < 1e-9);
        assert!((rhs - k as f64).abs() < 1e-9);
        assert!(lhs <= rhs + 1e-9);
    }

    #[test]
    fn endgame_zero_cases() {
        let u = Dist::uniform(2).unwrap();
        let report = endgame_candidates(&u, &u).unwrap();
        assert!(report.summary.lhs_sum.abs() < 1e-9);
        assert!(report.summary.rhs_bound.abs() < 1e-9);

        let v = Subspace::from_vectors(2, &[0b01]).unwrap();
        let uv = Dist::uniform_on_subspace(&v).unwrap();
        let report = endgame_candidates(&uv, &uv).unwrap();
        assert!(report.summary.lhs_sum.abs() < 1e-9);
        assert!(report.summary.rhs_bound.abs() < 1e-9);
    }

    #[test]
    fn endgame_second_component_is_translate_of_first() {
        let ua = three_point_set();
        let ub = Dist::from_weights(2, vec![0.4, 0.1, 0.3, 0.2]).unwrap();
        let report = endgame_candidates(&ua, &ub).unwrap();
        for pair in &report.pairs {
            for (cf, cs) in pair
                .first
                .conditions()
                .iter()
                .zip(pair.second.conditions())
            {
                assert_eq!(cf.label, cs.label);
                let shift = (cf.label >> 32) as u32;
                assert!(cf.dist.shift(shift).max_abs_diff(&cs.dist) < 1e-15);
            }
        }

        // And the derived second family matches its own direct formula.
        let direct = endgame_tv_second_direct(&ua, &ub);
        let pair = &report.pairs[0];
        assert_eq!(direct.len(), pair.second.conditions().len());
        for ((label, weight, dist), c) in direct.iter().zip(pair.second.conditions()) {
            assert_eq!(label, &c.label);
            assert!((weight - c.weight).abs() < 1e-12);
            assert!(dist.max_abs_diff(&c.dist) < 1e-12);
        }
    }

    #[test]
    fn endgame_bound_holds_on_small_random_sets() {
        let ua = three_point_set();
        let ub = Dist::from_weights(2, vec![0.05, 0.45, 0.3, 0.2]).unwrap();
        let report = endgame_candidates(&ua, &ub).unwrap();
        assert!(report.summary.lhs_sum <= report.summary.rhs_bound + 1e-9);
        let best = report.best_pair_distance();
        assert!(best <= report.summary.i1 + 2.0 * report.summary.i2 + 1e-9);
    }
}
