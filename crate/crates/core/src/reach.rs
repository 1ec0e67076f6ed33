//! Domains of attraction, reach-avoid, and reach under a hitting constraint.

use std::fmt::Write as _;

use serde::Serialize;

use crate::avg::{
    evaluate_policy_gain, extract_policy, harmonic_residual, solve_gain, EpsilonRow, GainSolution, Reward, CHECK_TOL,
};
use crate::error::{Error, Result};
use crate::fmt::{sig17, to_json};
use crate::model::{
    policy_doc, Distribution, Model, PolicyFile, PolicyJson, StateSet, StationaryPolicy, TwoPhasePolicy,
};
use crate::transform::{augment, lift_distribution, make_absorbing, project_policy, IndicatorReward};

/// Values at or below this count as zero when separating Λ_A from Γ_A.
pub const ZERO_THRESHOLD: f64 = 1e-8;
/// Slack allowed when testing `V* ≥ p` and `mass ≤ ε`.
pub const LEVEL_TOL: f64 = 1e-8;
/// Bound on `|λ*·(ε − mass)|` accepted from a constrained solve.
pub const SLACKNESS_TOL: f64 = 1e-6;
/// Agreement required between an extracted policy's exact evaluation and the LP.
pub const POLICY_TOL: f64 = 1e-6;

/// Per member of `target`: whether some feasible action keeps all mass in `target`.
pub fn check_closable(m: &Model, target: &StateSet) -> Result<Vec<(usize, bool)>> {
    m.check_set(target)?;
    let mask = target.mask(m.n_states());
    Ok(target
        .iter()
        .map(|x| {
            let ok = m.choices(x).iter().any(|c| c.mass_in(&mask) >= 1.0 - crate::PROB_TOL);
            (x, ok)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PDomainResult {
    pub v_star: Vec<f64>,
    /// `(p, Λ_{A,p})` in the order requested.
    pub lambda_sets: Vec<(f64, StateSet)>,
    pub domain: StateSet,
    pub escape: StateSet,
    pub policy: StationaryPolicy,
}

/// Maximal reach probability of `target` by the gain LP on the model with
/// `target` absorbing, `r = 1_target`, unit weights.
fn reach_values(
    m: &Model,
    target: &StateSet,
    avoid: Option<&StateSet>,
) -> Result<(Model, GainSolution, StationaryPolicy)> {
    let sets: Vec<&StateSet> = std::iter::once(target).chain(avoid).collect();
    let t = make_absorbing(m, &sets)?;
    let n = m.n_states();
    let ones = vec![1.0; n];
    let sol = solve_gain(&t, &Reward::indicator(n, target), &ones, None)?;
    let pi = extract_policy(&t, &sol);
    let res = harmonic_residual(&t, &pi, &sol.v, &StateSet::all(n))?;
    if res > CHECK_TOL {
        return Err(Error::Numerical(format!(
            "extracted policy leaves residual {res:e} in P v = v"
        )));
    }
    Ok((t, sol, pi))
}

pub fn p_domain(m: &Model, target: &StateSet, ps: &[f64]) -> Result<PDomainResult> {
    p_domain_with(m, target, ps, ZERO_THRESHOLD)
}

/// `V*` on the model with `target` made absorbing (equivalent to the
/// original kernel when `target` is closable), `Λ_A = {V* > τ₀}`,
/// `Γ_A = {V* ≤ τ₀}` and `Λ_{A,p} = {V* ≥ p − 1e-8}`.
pub fn p_domain_with(m: &Model, target: &StateSet, ps: &[f64], zero_threshold: f64) -> Result<PDomainResult> {
    if let Some(&(x, _)) = check_closable(m, target)?.iter().find(|e| !e.1) {
        return Err(Error::NotClosable(x));
    }
    if let Some(p) = ps.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return Err(Error::InvalidArgument(format!("level {p} is outside (0, 1]")));
    }
    let (_, sol, policy) = reach_values(m, target, None)?;
    let v = sol.v;
    let n = m.n_states();
    let domain: StateSet = (0..n).filter(|&x| v[x] > zero_threshold).collect();
    let escape = domain.complement(n);
    let lambda_sets = ps
        .iter()
        .map(|&p| (p, (0..n).filter(|&x| v[x] >= p - LEVEL_TOL).collect()))
        .collect();
    Ok(PDomainResult {
        v_star: v,
        lambda_sets,
        domain,
        escape,
        policy,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachAvoidResult {
    pub v_tilde: Vec<f64>,
    pub policy: StationaryPolicy,
    pub value: f64,
}

/// `sup_π P^π_ν(τ_A < τ_B, τ_A < ∞)` via the kernel with `A` and `B`
/// absorbing. `Ṽ` comes from a unit-weight solve, so the aggregate for
/// any `ν` is the dot product `ν·Ṽ`.
pub fn reach_avoid(m: &Model, target: &StateSet, avoid: &StateSet, nu: &Distribution) -> Result<ReachAvoidResult> {
    check_distribution(m, nu)?;
    if let Some(x) = target.first_common(avoid) {
        return Err(Error::OverlappingSets(x));
    }
    let (_, sol, policy) = reach_values(m, target, Some(avoid))?;
    let value = nu.dot(&sol.v);
    Ok(ReachAvoidResult {
        v_tilde: sol.v,
        policy,
        value,
    })
}

/// Unconstrained `sup_π P^π_x(τ_A < ∞)` per state.
pub fn reach_probability(m: &Model, target: &StateSet) -> Result<Vec<f64>> {
    Ok(reach_values(m, target, None)?.1.v)
}

/// `min_π P^π_x(τ_B < ∞, τ_B < τ_A)` per state: the least constraint mass a
/// point start at `x` can achieve in a constrained solve.
pub fn min_avoid_hit(m: &Model, target: &StateSet, avoid: &StateSet) -> Result<Vec<f64>> {
    if let Some(x) = target.first_common(avoid) {
        return Err(Error::OverlappingSets(x));
    }
    let t = make_absorbing(m, &[target, avoid])?;
    let n = m.n_states();
    let r: Vec<f64> = avoid.mask(n).into_iter().map(|b| if b { -1.0 } else { 0.0 }).collect();
    let sol = solve_gain(&t, &Reward::State(r), &vec![1.0; n], None)?;
    Ok(sol.v.iter().map(|v| (-v).max(0.0)).collect())
}

/// Start states for which a constrained solve with bound `eps` is
/// infeasible: those where even the most cautious policy hits `avoid`
/// (before `target`) with probability above `eps`.
pub fn infeasible_region(m: &Model, target: &StateSet, avoid: &StateSet, eps: f64) -> Result<StateSet> {
    let w = min_avoid_hit(m, target, avoid)?;
    Ok((0..m.n_states()).filter(|&x| w[x] > eps + LEVEL_TOL).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Feasibility {
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedReachResult {
    pub status: Feasibility,
    pub epsilon: f64,
    /// Optimal `P^π_ν(τ_A < ∞)` over two-phase policies meeting the bound.
    pub value: Option<f64>,
    pub lambda_star: Option<f64>,
    pub policy: Option<TwoPhasePolicy>,
    /// `Σ α` over the visited layer: the constraint activity.
    pub constraint_mass: Option<f64>,
    /// `λ*·(ε − constraint_mass)`.
    pub slackness: Option<f64>,
}

/// Maximize `P_ν(τ_A < ∞)` subject to `P_ν(τ_B < τ_A, τ_B < ∞) ≤ ε` on the
/// model augmented with a visited-B flag, with `A` absorbing on both layers.
pub fn constrained_reach(
    m: &Model,
    target: &StateSet,
    avoid: &StateSet,
    nu: &Distribution,
    eps: f64,
) -> Result<ConstrainedReachResult> {
    check_distribution(m, nu)?;
    if let Some(x) = target.first_common(avoid) {
        return Err(Error::OverlappingSets(x));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon {eps} must be finite and >= 0")));
    }
    m.check_set(target)?;
    let aug = augment(m, avoid)?;
    let a0: StateSet = target.iter().map(|x| crate::transform::aug_index(x, 0)).collect();
    let a1: StateSet = target.iter().map(|x| crate::transform::aug_index(x, 1)).collect();
    let model = make_absorbing(&aug.model, &[&a0, &a1])?;
    let n = model.n_states();
    let nu_hat = lift_distribution(nu, avoid);
    let visited = aug.visited_layer();
    let row = EpsilonRow {
        states: visited.clone(),
        bound: eps,
    };
    let targets = a0.union(&a1);
    let sol = match solve_gain(&model, &Reward::indicator(n, &targets), nu_hat.as_slice(), Some(&row)) {
        Ok(s) => s,
        Err(Error::Infeasible) => {
            return Ok(ConstrainedReachResult {
                status: Feasibility::Infeasible,
                epsilon: eps,
                value: None,
                lambda_star: None,
                policy: None,
                constraint_mass: None,
                slackness: None,
            })
        }
        Err(e) => return Err(e),
    };
    let lambda = sol.lambda_dual.expect("epsilon row present");
    let mass = sol.alpha_mass_on(&visited);
    let slackness = lambda * (eps - mass);
    if mass > eps + LEVEL_TOL || slackness.abs() > SLACKNESS_TOL {
        return Err(Error::Numerical(format!(
            "constraint mass {mass} and multiplier {lambda} violate complementary slackness"
        )));
    }
    // v is only pinned on the support of ν̂, so certify the extracted policy
    // by evaluating it exactly instead of testing P v = v
    let aug_pi = extract_policy(&model, &sol);
    let reached = evaluate_policy_gain(&model, &IndicatorReward::indicator(targets), &aug_pi, nu_hat.as_slice())?;
    let hit_b = evaluate_policy_gain(&model, &IndicatorReward::indicator(visited), &aug_pi, nu_hat.as_slice())?;
    if (reached.aggregate - sol.objective).abs() > POLICY_TOL || hit_b.aggregate > eps + POLICY_TOL {
        return Err(Error::Numerical(format!(
            "extracted policy attains {} with constraint mass {}, LP reports {} and {mass}",
            reached.aggregate, hit_b.aggregate, sol.objective
        )));
    }
    Ok(ConstrainedReachResult {
        status: Feasibility::Feasible,
        epsilon: eps,
        value: Some(sol.objective),
        lambda_star: Some(lambda),
        policy: Some(project_policy(&aug_pi, avoid)),
        constraint_mass: Some(mass),
        slackness: Some(slackness),
    })
}

fn check_distribution(m: &Model, nu: &Distribution) -> Result<()> {
    if nu.len() != m.n_states() {
        return Err(Error::InvalidArgument(format!(
            "distribution has {} entries for {} states",
            nu.len(),
            m.n_states()
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct PDomainFile<'a> {
    v_star: &'a [f64],
    domain: Vec<String>,
    escape: Vec<String>,
    lambda_sets: Vec<LevelSet>,
    policy: PolicyJson,
}

#[derive(Serialize)]
struct LevelSet {
    p: f64,
    states: Vec<String>,
}

#[derive(Serialize)]
struct ReachAvoidFile<'a> {
    value: f64,
    v_tilde: &'a [f64],
    policy: PolicyJson,
}

#[derive(Serialize)]
struct ConstrainedFile {
    status: Feasibility,
    epsilon: f64,
    value: Option<f64>,
    lambda_star: Option<f64>,
    constraint_mass: Option<f64>,
    slackness: Option<f64>,
    policy: Option<PolicyJson>,
}

fn labels(m: &Model, s: &StateSet) -> Vec<String> {
    s.iter().map(|x| m.state_label(x)).collect()
}

impl PDomainResult {
    pub fn to_json(&self, m: &Model) -> String {
        to_json(&PDomainFile {
            v_star: &self.v_star,
            domain: labels(m, &self.domain),
            escape: labels(m, &self.escape),
            lambda_sets: self
                .lambda_sets
                .iter()
                .map(|(p, s)| LevelSet {
                    p: *p,
                    states: labels(m, s),
                })
                .collect(),
            policy: policy_doc(m, &PolicyFile::Stationary(self.policy.clone())),
        })
        .expect("plain data serializes")
    }
}

impl ReachAvoidResult {
    pub fn to_json(&self, m: &Model) -> String {
        to_json(&ReachAvoidFile {
            value: self.value,
            v_tilde: &self.v_tilde,
            policy: policy_doc(m, &PolicyFile::Stationary(self.policy.clone())),
        })
        .expect("plain data serializes")
    }
}

impl ConstrainedReachResult {
    pub fn to_json(&self, m: &Model) -> String {
        to_json(&ConstrainedFile {
            status: self.status,
            epsilon: self.epsilon,
            value: self.value,
            lambda_star: self.lambda_star,
            constraint_mass: self.constraint_mass,
            slackness: self.slackness,
            policy: self
                .policy
                .as_ref()
                .map(|tp| policy_doc(m, &PolicyFile::TwoPhase(tp.clone()))),
        })
        .expect("plain data serializes")
    }
}

/// `state,value` CSV with state labels.
pub fn values_csv(m: &Model, values: &[f64]) -> String {
    let mut out = String::from("state,value\n");
    for (x, v) in values.iter().enumerate() {
        writeln!(out, "{},{}", m.state_label(x), sig17(*v)).expect("string write");
    }
    out
}
