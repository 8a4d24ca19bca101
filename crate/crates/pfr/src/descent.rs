//! The φ-minimization loop.
//!
//! With `φ[X;Y] = d[X;Y] + η(τ_A(X) + τ_B(Y))` and `η < 1/8`, some update
//! among seven candidates strictly lowers φ whenever `d[X;Y] > 0`:
//!
//! - sums `(T, T̄)` and `(W, W̄)`,
//! - fibres `(X1|T, Y2|T̄)` and `(X1|W, Y1|W̄)`, fixed at the best pair of
//!   conditioning values,
//! - and, only when none of those improve, the three endgame pairs
//!   `(T;V)|W̄,S`, `(V;W)|T̄,S`, `(W;T)|V̄,S`, fixed at the best shared
//!   conditioning value.
//!
//! Iterating until `d` vanishes leaves a pair uniform on cosets of one
//! subspace `V`, and the total growth of the τ terms along the way is paid
//! for by the total decrease of `d`, giving the certified conclusion
//! `τ_A(U_V) + τ_B(U_V) ≤ τ_A(X0) + τ_B(Y0) + d[X0;Y0]/η`.

use serde::Serialize;

use crate::consts::{CERT_SLACK_BITS, COND_WEIGHT_MIN, EXTRACT_DIST_TOL, PHI_PROGRESS_MARGIN};
use crate::dist::{xor_convolve, CondFamily, Dist};
use crate::error::{check_dims, Error, Result};
use crate::f2n::{Element, Subspace};
use crate::ruzsa::{
    endgame_candidates, fibre_conditionals, ruzsa_distance, EndgameSummary,
};
use crate::tau::TauFunctional;

/// Knobs of one descent run. `eta` must stay strictly below 1/8.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DescentConfig {
    pub eta: f64,
    /// Stop once `d[X;Y]` falls to this many bits.
    pub d_stop: f64,
    pub max_iters: usize,
    /// Relative cutoff θ used when reading the support of the final
    /// iterate off its probability vector.
    pub support_cutoff: f64,
    /// Conditioning values lighter than this are not eligible fixings.
    pub p_min: f64,
}

impl Default for DescentConfig {
    fn default() -> Self {
        DescentConfig {
            eta: 0.124999,
            d_stop: 1e-6,
            max_iters: 500,
            support_cutoff: 1e-4,
            p_min: COND_WEIGHT_MIN,
        }
    }
}

impl DescentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 0.125) {
            return Err(Error::InvalidConfig(format!(
                "eta must lie strictly inside (0, 1/8), got {}",
                self.eta
            )));
        }
        if !(self.d_stop > 0.0) {
            return Err(Error::InvalidConfig("d_stop must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.support_cutoff > 0.0 && self.support_cutoff < 1.0) {
            return Err(Error::InvalidConfig(
                "support cutoff must lie in (0, 1)".into(),
            ));
        }
        if self.p_min < COND_WEIGHT_MIN {
            return Err(Error::InvalidConfig(format!(
                "p_min below the family floor {COND_WEIGHT_MIN}"
            )));
        }
        Ok(())
    }
}

/// The seven update slots, in fixed tie-breaking priority.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateTag {
    SumT,
    SumW,
    FibreT,
    FibreW,
    EndgameTv,
    EndgameVw,
    EndgameWt,
}

impl CandidateTag {
    pub fn name(self) -> &'static str {
        match self {
            CandidateTag::SumT => "sum-t",
            CandidateTag::SumW => "sum-w",
            CandidateTag::FibreT => "fibre-t",
            CandidateTag::FibreW => "fibre-w",
            CandidateTag::EndgameTv => "eg-tv",
            CandidateTag::EndgameVw => "eg-vw",
            CandidateTag::EndgameWt => "eg-wt",
        }
    }
}

/// φ split into its distance and τ parts, so downstream consumers can
/// recombine without re-evaluating anything.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PhiParts {
    pub d: f64,
    pub tau_sum: f64,
}

impl PhiParts {
    pub fn phi(&self, eta: f64) -> f64 {
        self.d + eta * self.tau_sum
    }
}

#[derive(Clone, Debug)]
pub enum CandidateData {
    /// Endgame slot left unevaluated because a sum or fibre already
    /// improves φ.
    Skipped,
    Pair {
        x: Dist,
        y: Dist,
    },
    /// Product conditioning: the two sides fix conditions independently.
    Product {
        fx: CondFamily,
        fy: CondFamily,
        tau_x: Vec<f64>,
        tau_y: Vec<f64>,
    },
    /// Shared conditioning: both components fix the same condition.
    Paired {
        first: CondFamily,
        second: CondFamily,
        per_condition: Vec<PhiParts>,
    },
}

#[derive(Clone, Debug)]
pub struct Candidate {
    pub tag: CandidateTag,
    pub parts: Option<PhiParts>,
    pub data: CandidateData,
}

/// Endgame numbers recorded when the lazy branch actually runs.
#[derive(Clone, Debug, Serialize)]
pub struct EndgameDiagnostics {
    pub i1: f64,
    pub i2: f64,
    /// Mean-distance inequality of the three conditioned pairs.
    pub pair_sum_lhs: f64,
    pub pair_sum_rhs: f64,
    /// τ_A + τ_B of each conditioned pair, order tv / vw / wt.
    pub pair_tau_sums: [f64; 3],
    /// Their total and the growth cap `3τ0 + 6d + (I2 - I1)`.
    pub tau_total: f64,
    pub tau_total_cap: f64,
    /// Σ of the three family φ values and the strict cap `3·φ[X;Y]`.
    pub phi_family_sum: f64,
    pub phi_family_cap: f64,
}

/// Per-iteration diagnostics accompanying candidate generation.
#[derive(Clone, Debug)]
pub struct StepDiagnostics {
    pub current: PhiParts,
    pub d_xx: f64,
    pub d_yy: f64,
    /// τ sums of the four sum/fibre candidates: the growth-law subjects.
    pub tau_t_plus: f64,
    pub tau_t_minus: f64,
    pub tau_w_plus: f64,
    pub tau_w_minus: f64,
    pub endgame: Option<EndgameDiagnostics>,
}

/// `φ[X;Y] = d[X;Y] + η(τ_A(X) + τ_B(Y))`.
pub fn phi(
    x: &Dist,
    y: &Dist,
    tau_a: &TauFunctional,
    tau_b: &TauFunctional,
    eta: f64,
) -> Result<f64> {
    Ok(ruzsa_distance(x, y)? + eta * (tau_a.eval(x)? + tau_b.eval(y)?))
}

fn product_candidate(
    tag: CandidateTag,
    fx_conditions: Vec<crate::dist::Condition>,
    fy_conditions: Vec<crate::dist::Condition>,
    tau_a: &TauFunctional,
    tau_b: &TauFunctional,
    dim: usize,
) -> Result<Candidate> {
    let fx = CondFamily::new(dim, fx_conditions)?;
    let fy = CondFamily::new(dim, fy_conditions)?;
    let tau_x: Vec<f64> = fx
        .conditions()
        .iter()
        .map(|c| tau_a.eval(&c.dist))
        .collect::<Result<_>>()?;
    let tau_y: Vec<f64> = fy
        .conditions()
        .iter()
        .map(|c| tau_b.eval(&c.dist))
        .collect::<Result<_>>()?;
    let mut mean_d = 0.0;
    for cx in fx.conditions() {
        for cy in fy.conditions() {
            mean_d += cx.weight * cy.weight * ruzsa_distance(&cx.dist, &cy.dist)?;
        }
    }
    let mean_tau = fx
        .conditions()
        .iter()
        .zip(&tau_x)
        .map(|(c, t)| c.weight * t)
        .sum::<f64>()
        + fy.conditions()
            .iter()
            .zip(&tau_y)
            .map(|(c, t)| c.weight * t)
            .sum::<f64>();
    Ok(Candidate {
        tag,
        parts: Some(PhiParts {
            d: mean_d,
            tau_sum: mean_tau,
        }),
        data: CandidateData::Product {
            fx,
            fy,
            tau_x,
            tau_y,
        },
    })
}

/// Builds the seven candidates for the current pair. The endgame slots are
/// only evaluated when no sum or fibre candidate already improves on the
/// current φ, mirroring the case split that bounds their growth.
pub fn generate_candidates(
    x: &Dist,
    y: &Dist,
    tau_a: &TauFunctional,
    tau_b: &TauFunctional,
    eta: f64,
) -> Result<(Vec<Candidate>, StepDiagnostics)> {
    check_dims(x.dim(), y.dim())?;
    check_dims(x.dim(), tau_a.dim())?;
    check_dims(x.dim(), tau_b.dim())?;
    let dim = x.dim();

    let d_cur = ruzsa_distance(x, y)?;
    let tau_cur = tau_a.eval(x)? + tau_b.eval(y)?;
    let current = PhiParts {
        d: d_cur,
        tau_sum: tau_cur,
    };
    let phi_cur = current.phi(eta);

    let law_t = xor_convolve(x, y)?;
    let law_w = xor_convolve(x, x)?;
    let law_wbar = xor_convolve(y, y)?;
    let d_xx = ruzsa_distance(x, x)?;
    let d_yy = ruzsa_distance(y, y)?;

    let sum_t = Candidate {
        tag: CandidateTag::SumT,
        parts: Some(PhiParts {
            d: ruzsa_distance(&law_t, &law_t)?,
            tau_sum: tau_a.eval(&law_t)? + tau_b.eval(&law_t)?,
        }),
        data: CandidateData::Pair {
            x: law_t.clone(),
            y: law_t.clone(),
        },
    };
    let sum_w = Candidate {
        tag: CandidateTag::SumW,
        parts: Some(PhiParts {
            d: ruzsa_distance(&law_w, &law_wbar)?,
            tau_sum: tau_a.eval(&law_w)? + tau_b.eval(&law_wbar)?,
        }),
        data: CandidateData::Pair {
            x: law_w.clone(),
            y: law_wbar.clone(),
        },
    };

    let fibre_t = product_candidate(
        CandidateTag::FibreT,
        fibre_conditionals(x, y),
        fibre_conditionals(y, x),
        tau_a,
        tau_b,
        dim,
    )?;
    let fibre_w = product_candidate(
        CandidateTag::FibreW,
        fibre_conditionals(x, x),
        fibre_conditionals(y, y),
        tau_a,
        tau_b,
        dim,
    )?;

    let tau_t_plus = sum_t.parts.expect("computed").tau_sum;
    let tau_w_plus = sum_w.parts.expect("computed").tau_sum;
    let tau_t_minus = fibre_t.parts.expect("computed").tau_sum;
    let tau_w_minus = fibre_w.parts.expect("computed").tau_sum;

    let sum_fibre_best = [&sum_t, &sum_w, &fibre_t, &fibre_w]
        .iter()
        .filter_map(|c| c.parts.map(|p| p.phi(eta)))
        .fold(f64::INFINITY, f64::min);
    let need_endgame = !(sum_fibre_best < phi_cur - PHI_PROGRESS_MARGIN);

    let mut endgame_diag = None;
    let mut candidates = vec![sum_t, sum_w, fibre_t, fibre_w];
    if need_endgame {
        let report = endgame_candidates(x, y)?;
        let EndgameSummary { i1, i2, lhs_sum, rhs_bound, .. } = report.summary;
        let mut pair_tau_sums = [0.0; 3];
        let mut tau_total = 0.0;
        let mut phi_family_sum = 0.0;
        let tags = [
            CandidateTag::EndgameTv,
            CandidateTag::EndgameVw,
            CandidateTag::EndgameWt,
        ];
        for (slot, (pair, tag)) in report.pairs.into_iter().zip(tags).enumerate() {
            let mut per_condition = Vec::with_capacity(pair.per_condition_d.len());
            let mut mean = PhiParts { d: 0.0, tau_sum: 0.0 };
            for ((cf, cs), &d) in pair
                .first
                .conditions()
                .iter()
                .zip(pair.second.conditions())
                .zip(&pair.per_condition_d)
            {
                let tau_sum = tau_a.eval(&cf.dist)? + tau_b.eval(&cs.dist)?;
                per_condition.push(PhiParts { d, tau_sum });
                mean.d += cf.weight * d;
                mean.tau_sum += cf.weight * tau_sum;
            }
            pair_tau_sums[slot] = mean.tau_sum;
            tau_total += mean.tau_sum;
            phi_family_sum += mean.phi(eta);
            candidates.push(Candidate {
                tag,
                parts: Some(mean),
                data: CandidateData::Paired {
                    first: pair.first,
                    second: pair.second,
                    per_condition,
                },
            });
        }
        endgame_diag = Some(EndgameDiagnostics {
            i1,
            i2,
            pair_sum_lhs: lhs_sum,
            pair_sum_rhs: rhs_bound,
            pair_tau_sums,
            tau_total,
            tau_total_cap: 3.0 * tau_cur + 6.0 * d_cur + (i2 - i1),
            phi_family_sum,
            phi_family_cap: 3.0 * phi_cur,
        });
    } else {
        for tag in [
            CandidateTag::EndgameTv,
            CandidateTag::EndgameVw,
            CandidateTag::EndgameWt,
        ] {
            candidates.push(Candidate {
                tag,
                parts: None,
                data: CandidateData::Skipped,
            });
        }
    }

    Ok((
        candidates,
        StepDiagnostics {
            current,
            d_xx,
            d_yy,
            tau_t_plus,
            tau_t_minus,
            tau_w_plus,
            tau_w_minus,
            endgame: endgame_diag,
        },
    ))
}

/// Outcome of fixing the best candidate.
#[derive(Clone, Debug)]
pub enum StepChoice {
    /// No candidate beats the current φ by more than the progress margin.
    Converged,
    Step {
        x: Dist,
        y: Dist,
        tag: CandidateTag,
        label_first: Option<u64>,
        label_second: Option<u64>,
        parts: PhiParts,
    },
}

/// Picks the candidate with minimal φ (ties: slot order, then smallest
/// conditioning labels) and fixes its conditioning at the per-condition φ
/// minimum among conditions of weight at least `p_min`. The fixed value
/// can only undercut the family average it was selected by.
pub fn select_and_fix(
    candidates: &[Candidate],
    current_phi: f64,
    eta: f64,
    p_min: f64,
) -> Result<StepChoice> {
    let mut best: Option<(usize, f64)> = None;
    for (idx, c) in candidates.iter().enumerate() {
        if let Some(parts) = c.parts {
            let phi = parts.phi(eta);
            if best.map_or(true, |(_, b)| phi < b) {
                best = Some((idx, phi));
            }
        }
    }
    let Some((idx, best_phi)) = best else {
        return Ok(StepChoice::Converged);
    };
    if !(best_phi < current_phi - PHI_PROGRESS_MARGIN) {
        return Ok(StepChoice::Converged);
    }
    let chosen = &candidates[idx];
    match &chosen.data {
        CandidateData::Skipped => unreachable!("skipped slots carry no φ"),
        CandidateData::Pair { x, y } => Ok(StepChoice::Step {
            x: x.clone(),
            y: y.clone(),
            tag: chosen.tag,
            label_first: None,
            label_second: None,
            parts: chosen.parts.expect("selected candidate has parts"),
        }),
        CandidateData::Product {
            fx,
            fy,
            tau_x,
            tau_y,
        } => {
            let mut pick: Option<(f64, usize, usize, f64)> = None;
            for (i, cx) in fx.conditions().iter().enumerate() {
                if cx.weight < p_min {
                    continue;
                }
                for (j, cy) in fy.conditions().iter().enumerate() {
                    if cy.weight < p_min {
                        continue;
                    }
                    let d = ruzsa_distance(&cx.dist, &cy.dist)?;
                    let phi = d + eta * (tau_x[i] + tau_y[j]);
                    if pick.map_or(true, |(b, ..)| phi < b) {
                        pick = Some((phi, i, j, d));
                    }
                }
            }
            let (_, i, j, d) = pick.expect("family kept at least one condition");
            let cx = &fx.conditions()[i];
            let cy = &fy.conditions()[j];
            Ok(StepChoice::Step {
                x: cx.dist.clone(),
                y: cy.dist.clone(),
                tag: chosen.tag,
                label_first: Some(cx.label),
                label_second: Some(cy.label),
                parts: PhiParts {
                    d,
                    tau_sum: tau_x[i] + tau_y[j],
                },
            })
        }
        CandidateData::Paired {
            first,
            second,
            per_condition,
        } => {
            let mut pick: Option<(f64, usize)> = None;
            for (i, (c, parts)) in first.conditions().iter().zip(per_condition).enumerate() {
                if c.weight < p_min {
                    continue;
                }
                let phi = parts.phi(eta);
                if pick.map_or(true, |(b, _)| phi < b) {
                    pick = Some((phi, i));
                }
            }
            let (_, i) = pick.expect("family kept at least one condition");
            Ok(StepChoice::Step {
                x: first.conditions()[i].dist.clone(),
                y: second.conditions()[i].dist.clone(),
                tag: chosen.tag,
                label_first: Some(first.conditions()[i].label),
                label_second: None,
                parts: per_condition[i],
            })
        }
    }
}

/// State after `iteration` steps; `phi = d + η·tau_sum` by construction.
#[derive(Clone, Debug)]
pub struct DescentState {
    pub x: Dist,
    pub y: Dist,
    pub d: f64,
    pub tau_sum: f64,
    pub phi: f64,
    pub iteration: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CandidatePhi {
    pub tag: CandidateTag,
    pub phi: Option<f64>,
}

/// One row per executed step, recording the pre-step state, the φ of every
/// candidate slot, the chosen update, and the growth-law subjects.
#[derive(Clone, Debug, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub d: f64,
    pub phi: f64,
    pub tau_sum: f64,
    pub candidate_phi: Vec<CandidatePhi>,
    pub chosen: CandidateTag,
    pub label_first: Option<u64>,
    pub label_second: Option<u64>,
    pub d_xx: f64,
    pub d_yy: f64,
    pub tau_t_plus: f64,
    pub tau_t_minus: f64,
    pub tau_w_plus: f64,
    pub tau_w_minus: f64,
    pub endgame: Option<EndgameDiagnostics>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DescentTrace {
    pub eta: f64,
    pub rows: Vec<TraceRow>,
    pub final_d: f64,
    pub final_phi: f64,
}

/// A named bound with its worst observed violation across the trace.
#[derive(Clone, Debug, Serialize)]
pub struct TraceCheck {
    pub name: &'static str,
    pub max_violation: f64,
    pub tolerance: f64,
}

impl TraceCheck {
    pub fn pass(&self) -> bool {
        self.max_violation <= self.tolerance
    }
}

impl DescentTrace {
    /// Audits the invariants the proof promises along the path: strict φ
    /// decrease, the four τ growth caps, and on endgame iterations the
    /// information caps plus the chained `< 3φ` bound. `tau_slack` should
    /// be the functional's [`TauFunctional::check_slack`].
    pub fn validate(&self, tau_slack: f64) -> Vec<TraceCheck> {
        let mut decrease = 0.0f64;
        let mut growth_t_plus = 0.0f64;
        let mut growth_t_minus = 0.0f64;
        let mut growth_w_plus = 0.0f64;
        let mut growth_w_minus = 0.0f64;
        let mut info_cap_i1 = 0.0f64;
        let mut info_cap_i2 = 0.0f64;
        let mut pair_sum = 0.0f64;
        let mut tau_total = 0.0f64;
        let mut phi_chain = 0.0f64;

        for (k, row) in self.rows.iter().enumerate() {
            let next_phi = self
                .rows
                .get(k + 1)
                .map(|r| r.phi)
                .unwrap_or(self.final_phi);
            decrease = decrease.max(next_phi - row.phi);

            let base = row.tau_sum + row.d;
            let skew = 0.5 * (row.d_xx + row.d_yy - 2.0 * row.d);
            growth_t_plus = growth_t_plus.max(row.tau_t_plus - base);
            growth_t_minus = growth_t_minus.max(row.tau_t_minus - base);
            growth_w_plus = growth_w_plus.max(row.tau_w_plus - (base + skew));
            growth_w_minus = growth_w_minus.max(row.tau_w_minus - (base + skew));

            if let Some(eg) = &row.endgame {
                let eta = self.eta;
                info_cap_i1 = info_cap_i1.max(eg.i1 - 2.0 * eta * row.d);
                let slack_i2 = (eta / (1.0 - eta)) * (2.0 * eta * row.d - eg.i1);
                info_cap_i2 = info_cap_i2.max(eg.i2 - 2.0 * eta * row.d - slack_i2);
                pair_sum = pair_sum.max(eg.pair_sum_lhs - eg.pair_sum_rhs);
                tau_total = tau_total.max(eg.tau_total - eg.tau_total_cap);
                phi_chain = phi_chain.max(eg.phi_family_sum - eg.phi_family_cap);
            }
        }

        vec![
            TraceCheck {
                name: "phi-strict-decrease",
                max_violation: decrease,
                tolerance: 0.0,
            },
            TraceCheck {
                name: "tau-growth-sum-t",
                max_violation: growth_t_plus,
                tolerance: tau_slack,
            },
            TraceCheck {
                name: "tau-growth-fibre-t",
                max_violation: growth_t_minus,
                tolerance: tau_slack,
            },
            TraceCheck {
                name: "tau-growth-sum-w",
                max_violation: growth_w_plus,
                tolerance: tau_slack,
            },
            TraceCheck {
                name: "tau-growth-fibre-w",
                max_violation: growth_w_minus,
                tolerance: tau_slack,
            },
            TraceCheck {
                name: "endgame-information-cap",
                max_violation: info_cap_i1,
                tolerance: tau_slack,
            },
            TraceCheck {
                name: "endgame-information-relation",
                max_violation: info_cap_i2,
                tolerance: tau_slack,
            },
            TraceCheck {
                name: "endgame-pair-distance-sum",
                max_violation: pair_sum,
                tolerance: crate::consts::IDENTITY_TOL,
            },
            TraceCheck {
                name: "endgame-tau-total-cap",
                max_violation: tau_total,
                tolerance: 3.0 * tau_slack,
            },
            TraceCheck {
                name: "endgame-phi-chain",
                max_violation: phi_chain,
                tolerance: 3.0 * tau_slack,
            },
        ]
    }

    /// Line-oriented rendering: one record per iteration.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let (i1, i2) = row
                .endgame
                .as_ref()
                .map(|e| (format!("{}", e.i1), format!("{}", e.i2)))
                .unwrap_or_else(|| ("NA".into(), "NA".into()));
            out.push_str(&format!(
                "iter={} d={} phi={} i1={} i2={} chosen={}\n",
                row.iteration,
                row.d,
                row.phi,
                i1,
                i2,
                row.chosen.name()
            ));
        }
        out.push_str(&format!(
            "final d={} phi={}\n",
            self.final_d, self.final_phi
        ));
        out
    }

    /// Structured dump, one JSON object per row.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            out.push_str(&serde_json::to_string(row).expect("trace rows serialize"));
            out.push('\n');
        }
        out
    }
}

/// The certified conclusion of a run:
/// `τ_A(U_V) + τ_B(U_V) ≤ τ_A(X0) + τ_B(Y0) + d[X0;Y0]/η + slack`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TauCertificate {
    pub tau_uv_sum: f64,
    pub tau_start_sum: f64,
    pub d_start: f64,
    pub bound: f64,
    pub slack: f64,
    pub satisfied: bool,
}

#[derive(Debug)]
pub struct DescentOutcome {
    pub subspace: Subspace,
    pub rep: Element,
    pub trace: DescentTrace,
    pub final_state: DescentState,
    pub certificate: TauCertificate,
}

/// Reads the subspace off a near-coset-uniform distribution: the support
/// at relative cutoff θ, translated by its smallest element, spans `V`.
/// Fails with `NotCosetUniform` when the reconstruction sits further than
/// [`EXTRACT_DIST_TOL`] bits from the input.
pub fn extract_subspace(x: &Dist, theta: f64) -> Result<(Subspace, Element)> {
    let max = x
        .probabilities()
        .iter()
        .fold(0.0f64, |m, &p| m.max(p));
    if !(max > 0.0) {
        return Err(Error::InvalidDist("no positive mass".into()));
    }
    let threshold = theta * max;
    let members: Vec<u32> = (0..x.probabilities().len() as u32)
        .filter(|&i| x.probability(i) >= threshold)
        .collect();
    let rep = members[0];
    let diffs: Vec<u32> = members.iter().map(|&m| m ^ rep).collect();
    let v = Subspace::from_vectors(x.dim(), &diffs)?;
    let model = Dist::uniform_on_coset(&v, rep)?;
    let distance = ruzsa_distance(&model, x)?;
    if distance > EXTRACT_DIST_TOL {
        return Err(Error::NotCosetUniform { distance });
    }
    Ok((v, Element::new(rep, x.dim())?))
}

/// Runs the descent from `(x0, y0)` until `d ≤ d_stop`, then extracts the
/// subspace and evaluates the certified τ inequality.
///
/// A plateau with `d` still above `d_stop` is reported as
/// [`Error::NoProgress`], and exhausting `max_iters` as
/// [`Error::IterationCap`]; neither is ever silently accepted.
pub fn run_descent(
    x0: &Dist,
    y0: &Dist,
    tau_a: &TauFunctional,
    tau_b: &TauFunctional,
    config: &DescentConfig,
) -> Result<DescentOutcome> {
    config.validate()?;
    check_dims(x0.dim(), y0.dim())?;
    check_dims(x0.dim(), tau_a.dim())?;
    check_dims(x0.dim(), tau_b.dim())?;
    let eta = config.eta;

    let d0 = ruzsa_distance(x0, y0)?;
    let tau0 = tau_a.eval(x0)? + tau_b.eval(y0)?;
    let mut state = DescentState {
        x: x0.clone(),
        y: y0.clone(),
        d: d0,
        tau_sum: tau0,
        phi: d0 + eta * tau0,
        iteration: 0,
    };
    let mut rows: Vec<TraceRow> = Vec::new();

    while state.d > config.d_stop {
        if state.iteration >= config.max_iters {
            return Err(Error::IterationCap {
                max_iters: config.max_iters,
                d: state.d,
            });
        }
        let (candidates, diag) =
            generate_candidates(&state.x, &state.y, tau_a, tau_b, eta)?;
        let choice = select_and_fix(&candidates, state.phi, eta, config.p_min)?;
        match choice {
            StepChoice::Converged => {
                return Err(Error::NoProgress {
                    iteration: state.iteration,
                    d: state.d,
                });
            }
            StepChoice::Step {
                x,
                y,
                tag,
                label_first,
                label_second,
                parts,
            } => {
                rows.push(TraceRow {
                    iteration: state.iteration,
                    d: state.d,
                    phi: state.phi,
                    tau_sum: state.tau_sum,
                    candidate_phi: candidates
                        .iter()
                        .map(|c| CandidatePhi {
                            tag: c.tag,
                            phi: c.parts.map(|p| p.phi(eta)),
                        })
                        .collect(),
                    chosen: tag,
                    label_first,
                    label_second,
                    d_xx: diag.d_xx,
                    d_yy: diag.d_yy,
                    tau_t_plus: diag.tau_t_plus,
                    tau_t_minus: diag.tau_t_minus,
                    tau_w_plus: diag.tau_w_plus,
                    tau_w_minus: diag.tau_w_minus,
                    endgame: diag.endgame.clone(),
                });
                let new_phi = parts.phi(eta);
                if !(new_phi < state.phi) {
                    return Err(Error::NoProgress {
                        iteration: state.iteration,
                        d: state.d,
                    });
                }
                state = DescentState {
                    x,
                    y,
                    d: parts.d,
                    tau_sum: parts.tau_sum,
                    phi: new_phi,
                    iteration: state.iteration + 1,
                };
            }
        }
    }

    let (subspace, rep) = extract_subspace(&state.x, config.support_cutoff)?;
    let uv = Dist::uniform_on_subspace(&subspace)?;
    let tau_uv_sum = tau_a.eval(&uv)? + tau_b.eval(&uv)?;
    let bound = tau0 + d0 / eta;
    let certificate = TauCertificate {
        tau_uv_sum,
        tau_start_sum: tau0,
        d_start: d0,
        bound,
        slack: CERT_SLACK_BITS,
        satisfied: tau_uv_sum <= bound + CERT_SLACK_BITS,
    };
    let trace = DescentTrace {
        eta,
        rows,
        final_d: state.d,
        final_phi: state.phi,
    };
    Ok(DescentOutcome {
        subspace,
        rep,
        trace,
        final_state: state,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::f2n::F2Set;

    fn three_point_set() -> F2Set {
        F2Set::new(2, [0b00, 0b01, 0b10]).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(DescentConfig::default().validate().is_ok());
        let mut c = DescentConfig::default();
        c.eta = 0.125;
        assert!(c.validate().is_err());
        c.eta = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn descent_on_coset_uniform_returns_immediately() {
        let v = Subspace::from_vectors(3, &[0b011, 0b100]).unwrap();
        let uv = Dist::uniform_on_coset(&v, 0b001).unwrap();
        let tau = TauFunctional::entropic(uv.clone());
        let out = run_descent(&uv, &uv, &tau, &tau, &DescentConfig::default()).unwrap();
        assert_eq!(out.final_state.iteration, 0);
        assert_eq!(out.subspace, v);
        assert_eq!(out.rep.bits(), 0b001);
        assert!(out.certificate.satisfied);
    }

    #[test]
    fn descent_from_three_point_set_certifies() {
        let a = three_point_set();
        let ua = Dist::uniform_on(&a).unwrap();
        let tau = TauFunctional::entropic(ua.clone());
        let out = run_descent(&ua, &ua, &tau, &tau, &DescentConfig::default()).unwrap();
        assert!(out.final_state.d <= 1e-6);
        assert!(out.certificate.satisfied);

        // Strict decrease and growth caps along the whole path.
        for check in out.trace.validate(tau.check_slack()) {
            assert!(
                check.pass(),
                "{} violated by {}",
                check.name,
                check.max_violation
            );
        }

        // Theorem-shape conclusion: d[U_V;A] + d[U_V;B] ≤ 10·d[A;B] + slack.
        let uv = Dist::uniform_on_subspace(&out.subspace).unwrap();
        let d_ab = ruzsa_distance(&ua, &ua).unwrap();
        let lhs = ruzsa_distance(&uv, &ua).unwrap() * 2.0;
        assert!(lhs <= 10.0 * d_ab + 1e-3, "lhs {lhs} vs {}", 10.0 * d_ab);
    }

    #[test]
    fn descent_is_translation_invariant_in_d() {
        let a = three_point_set();
        let ua = Dist::uniform_on(&a).unwrap();
        let shifted = ua.shift(0b11);
        let tau = TauFunctional::entropic(ua.clone());
        let base = run_descent(&ua, &ua, &tau, &tau, &DescentConfig::default()).unwrap();
        let moved = run_descent(&ua, &shifted, &tau, &tau, &DescentConfig::default()).unwrap();
        assert_eq!(base.trace.rows.len(), moved.trace.rows.len());
        for (r1, r2) in base.trace.rows.iter().zip(&moved.trace.rows) {
            assert!((r1.d - r2.d).abs() < 1e-9, "{} vs {}", r1.d, r2.d);
        }
        assert_eq!(base.subspace, moved.subspace);
    }

    #[test]
    fn extract_subspace_handles_exact_and_noisy_cosets() {
        let v = Subspace::from_vectors(4, &[0b0011, 0b0100]).unwrap();
        let t = 0b1000;
        let uvt = Dist::uniform_on_coset(&v, t).unwrap();
        let (got, rep) = extract_subspace(&uvt, 1e-4).unwrap();
        assert_eq!(got, v);
        assert_eq!(rep.bits(), v.coset_rep(t));

        let point = Dist::point_mass(4, 0b101).unwrap();
        let (got, rep) = extract_subspace(&point, 1e-4).unwrap();
        assert_eq!(got.rank(), 0);
        assert_eq!(rep.bits(), 0b101);

        // A 1e-6 uniform mixture is absorbed by the cutoff.
        let eps = 1e-6;
        let noisy: Vec<f64> = uvt
            .probabilities()
            .iter()
            .map(|&p| (1.0 - eps) * p + eps / 16.0)
            .collect();
        let noisy = Dist::new(4, noisy).unwrap();
        let (got, _) = extract_subspace(&noisy, 1e-4).unwrap();
        assert_eq!(got, v);

        // A genuinely non-coset distribution is rejected.
        let bad = Dist::from_weights(3, vec![4.0, 2.0, 1.0, 1.0, 0.5, 0.25, 0.25, 1.0])
            .unwrap();
        assert!(matches!(
            extract_subspace(&bad, 1e-4),
            Err(Error::NotCosetUniform { .. })
        ));
    }

    #[test]
    fn selected_fixing_beats_family_average() {
        let a = three_point_set();
        let ua = Dist::uniform_on(&a).unwrap();
        let x = Dist::from_weights(2, vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let tau = TauFunctional::entropic(ua);
        let eta = 0.124999;
        let (candidates, _) = generate_candidates(&x, &x, &tau, &tau, eta).unwrap();
        let phi_now = phi(&x, &x, &tau, &tau, eta).unwrap();
        if let StepChoice::Step { tag, parts, .. } =
            select_and_fix(&candidates, phi_now, eta, COND_WEIGHT_MIN).unwrap()
        {
            let family_phi = candidates
                .iter()
                .find(|c| c.tag == tag)
                .and_then(|c| c.parts)
                .map(|p| p.phi(eta))
                .unwrap();
            assert!(parts.phi(eta) <= family_phi + 1e-12);
        } else {
            panic!("expected progress from a non-uniform start");
        }
    }
}
