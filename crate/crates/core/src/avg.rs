//! The multichain average-reward linear programs, policy extraction from
//! occupation measures, and LP-free oracles for hitting probabilities.
//!
//! The dual program has variables `α(x,u), β(x,u) ≥ 0` and, per state `j`,
//!
//! ```text
//! flow:    Σ_u α(j,u) − Σ_{x,u} Q(j|x,u) α(x,u)                    = 0
//! mixing:  Σ_u α(j,u) + Σ_u β(j,u) − Σ_{x,u} Q(j|x,u) β(x,u)       = ν(j)
//! ```
//!
//! maximizing `Σ r(x,u) α(x,u)`. Its LP dual is the primal gain/bias
//! program, so the optimal gain `v` is the dual of the mixing rows and a
//! bias `h` is the dual of the flow rows.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpStatus, Relation, Sense};
use crate::model::{induced_chain, ActionId, Model, StateId, StateSet, StationaryPolicy};
use crate::transform::IndicatorReward;

/// Threshold on `Σ_u α` or `Σ_u β` below which a state's measure counts as empty.
pub const MASS_TOL: f64 = 1e-9;
/// Residual allowed in the post-solve checks of [`solve_gain`].
pub const CHECK_TOL: f64 = 1e-8;

/// Per-pair reward for the gain LP.
#[derive(Debug, Clone, PartialEq)]
pub enum Reward {
    /// `r(x,u) = f(x)` for every feasible `u`.
    State(Vec<f64>),
    /// The rewards stored in the model; every feasible pair must carry one.
    Model,
}

impl Reward {
    pub fn indicator(n: usize, set: &StateSet) -> Self {
        Reward::State(set.mask(n).into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect())
    }

    pub fn from_indicator(r: &IndicatorReward, n: usize) -> Self {
        Reward::State(r.per_state(n))
    }

    fn value(&self, m: &Model, x: StateId, u: ActionId) -> Result<f64> {
        match self {
            Reward::State(f) => Ok(f[x]),
            Reward::Model => m
                .choice(x, u)
                .and_then(|c| c.reward)
                .ok_or(Error::MissingReward { x, u }),
        }
    }
}

/// Extra row `Σ_{j∈states, u} α(j,u) ≤ bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonRow {
    pub states: StateSet,
    pub bound: f64,
}

/// A gain LP together with its column and row layout.
///
/// Column `k < pairs.len()` is `α(pairs[k])`, column `pairs.len() + k` is
/// `β(pairs[k])`. Row `j` is the flow row of state `j`, row `n + j` its
/// mixing row, and row `2n` the ε row when present.
#[derive(Debug, Clone)]
pub struct GainLp {
    pub lp: LinearProgram,
    pub pairs: Vec<(StateId, ActionId)>,
    pub n_states: usize,
    pub epsilon_row: Option<usize>,
}

impl GainLp {
    pub fn alpha_col(&self, k: usize) -> usize {
        k
    }

    pub fn beta_col(&self, k: usize) -> usize {
        self.pairs.len() + k
    }
}

fn check_weights(m: &Model, nu: &[f64]) -> Result<()> {
    if nu.len() != m.n_states() {
        return Err(Error::InvalidArgument(format!(
            "weight vector has {} entries for {} states",
            nu.len(),
            m.n_states()
        )));
    }
    if let Some(x) = nu.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "weight at state {x} must be finite and >= 0"
        )));
    }
    Ok(())
}

pub fn build_gain_lp(m: &Model, reward: &Reward, nu: &[f64], epsilon_row: Option<&EpsilonRow>) -> Result<GainLp> {
    check_weights(m, nu)?;
    if let Reward::State(f) = reward {
        if f.len() != m.n_states() {
            return Err(Error::InvalidArgument(format!(
                "state reward has {} entries for {} states",
                f.len(),
                m.n_states()
            )));
        }
    }
    if let Some(e) = epsilon_row {
        m.check_set(&e.states)?;
        if !e.bound.is_finite() {
            return Err(Error::InvalidArgument("epsilon bound must be finite".into()));
        }
    }
    let n = m.n_states();
    let mut pairs = Vec::with_capacity(m.n_pairs());
    for x in 0..n {
        for c in m.choices(x) {
            pairs.push((x, c.action));
        }
    }
    let mut lp = LinearProgram::new(Sense::Max);
    for &(x, u) in &pairs {
        let r = reward.value(m, x, u)?;
        lp.add_column(r, false, format!("alpha({x},{u})"));
    }
    for &(x, u) in &pairs {
        lp.add_column(0.0, false, format!("beta({x},{u})"));
    }
    let np = pairs.len();
    let mut flow: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut mixing: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (k, &(x, u)) in pairs.iter().enumerate() {
        let c = m.choice(x, u).expect("pair listed from the model");
        let stay = c.next.iter().find(|e| e.0 == x).map_or(0.0, |e| e.1);
        // α: +1 in flow(x) and mixing(x), −Q(y|x,u) in flow(y)
        let own = 1.0 - stay;
        if own != 0.0 {
            flow[x].push((k, own));
        }
        mixing[x].push((k, 1.0));
        // β: +1 in mixing(x), −Q(y|x,u) in mixing(y)
        if own != 0.0 {
            mixing[x].push((np + k, own));
        }
        for &(y, p) in &c.next {
            if y != x && p != 0.0 {
                flow[y].push((k, -p));
                mixing[y].push((np + k, -p));
            }
        }
    }
    for (j, coeffs) in flow.into_iter().enumerate() {
        lp.add_row(coeffs, Relation::Eq, 0.0, format!("flow({j})"));
    }
    for (j, coeffs) in mixing.into_iter().enumerate() {
        lp.add_row(coeffs, Relation::Eq, nu[j], format!("mixing({j})"));
    }
    let eps_idx = epsilon_row.map(|e| {
        let mask = e.states.mask(n);
        let coeffs = pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| mask[p.0])
            .map(|(k, _)| (k, 1.0))
            .collect();
        lp.add_row(coeffs, Relation::Le, e.bound, "epsilon")
    });
    Ok(GainLp {
        lp,
        pairs,
        n_states: n,
        epsilon_row: eps_idx,
    })
}

/// Primal gain/bias program: `min Σ ν v` over free `v, h` with
/// `v(x) ≥ Σ Q(y|x,u) v(y)` and `v(x) + h(x) ≥ r(x,u) + Σ Q(y|x,u) h(y)`.
/// Columns `0..n` are `v`, `n..2n` are `h`; rows come in pairs per `(x,u)`.
pub fn build_gain_primal_lp(m: &Model, reward: &Reward, nu: &[f64]) -> Result<LinearProgram> {
    check_weights(m, nu)?;
    let n = m.n_states();
    let mut lp = LinearProgram::new(Sense::Min);
    for x in 0..n {
        lp.add_column(nu[x], true, format!("v({x})"));
    }
    for x in 0..n {
        lp.add_column(0.0, true, format!("h({x})"));
    }
    for x in 0..n {
        for c in m.choices(x) {
            let u = c.action;
            let r = reward.value(m, x, u)?;
            let stay = c.next.iter().find(|e| e.0 == x).map_or(0.0, |e| e.1);
            let mut gain = Vec::new();
            let mut bias = Vec::new();
            if 1.0 - stay != 0.0 {
                gain.push((x, 1.0 - stay));
                bias.push((n + x, 1.0 - stay));
            }
            bias.push((x, 1.0));
            for &(y, p) in &c.next {
                if y != x && p != 0.0 {
                    gain.push((y, -p));
                    bias.push((n + y, -p));
                }
            }
            lp.add_row(gain, Relation::Ge, 0.0, format!("gain({x},{u})"));
            lp.add_row(bias, Relation::Ge, r, format!("bias({x},{u})"));
        }
    }
    Ok(lp)
}

/// Optimal gain and occupation measures of one gain LP solve.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSolution {
    pub v: Vec<f64>,
    pub h: Vec<f64>,
    /// Per state, `(u, α(x,u))` over the feasible actions.
    pub alpha: Vec<Vec<(ActionId, f64)>>,
    pub beta: Vec<Vec<(ActionId, f64)>>,
    pub objective: f64,
    pub lambda_dual: Option<f64>,
    pub iterations: usize,
    pub duality_gap: f64,
}

impl GainSolution {
    pub fn alpha_mass(&self, x: StateId) -> f64 {
        self.alpha[x].iter().map(|e| e.1).sum()
    }

    pub fn beta_mass(&self, x: StateId) -> f64 {
        self.beta[x].iter().map(|e| e.1).sum()
    }

    pub fn alpha_mass_on(&self, set: &StateSet) -> f64 {
        set.iter().map(|x| self.alpha_mass(x)).sum()
    }

    pub fn alpha(&self, x: StateId, u: ActionId) -> f64 {
        self.alpha[x].iter().find(|e| e.0 == u).map_or(0.0, |e| e.1)
    }

    pub fn beta(&self, x: StateId, u: ActionId) -> f64 {
        self.beta[x].iter().find(|e| e.0 == u).map_or(0.0, |e| e.1)
    }
}

/// Solve the gain LP and verify the result: `α, β ≥ −1e-9`, `v` and `h`
/// satisfy the primal constraints within `1e-8`, total `α` mass equals
/// `Σ ν`, and the objective equals `ν·v` (plus `bound·λ` with an ε row).
///
/// Returns [`Error::Infeasible`] when the LP is infeasible (only possible
/// with an ε row) and [`Error::Numerical`] for any other failure.
pub fn solve_gain(m: &Model, reward: &Reward, nu: &[f64], epsilon_row: Option<&EpsilonRow>) -> Result<GainSolution> {
    let g = build_gain_lp(m, reward, nu, epsilon_row)?;
    let s = g.lp.solve()?;
    match s.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::Infeasible),
        LpStatus::Unbounded => return Err(Error::Numerical("gain LP reported unbounded".into())),
        LpStatus::Numerical => {
            return Err(Error::Numerical(format!(
                "simplex failed to certify the gain LP after {} pivots",
                s.iterations
            )))
        }
    }
    let n = g.n_states;
    let np = g.pairs.len();
    let mut alpha = vec![Vec::new(); n];
    let mut beta = vec![Vec::new(); n];
    for (k, &(x, u)) in g.pairs.iter().enumerate() {
        alpha[x].push((u, s.primal[g.alpha_col(k)]));
        beta[x].push((u, s.primal[g.beta_col(k)]));
    }
    let sol = GainSolution {
        h: s.dual[..n].to_vec(),
        v: s.dual[n..2 * n].to_vec(),
        alpha,
        beta,
        objective: s.objective,
        lambda_dual: g.epsilon_row.map(|i| s.dual[i]),
        iterations: s.iterations,
        duality_gap: s.certificate.duality_gap,
    };
    debug_assert_eq!(s.primal.len(), 2 * np);
    verify_gain(m, reward, nu, epsilon_row, &sol)?;
    Ok(sol)
}

fn verify_gain(
    m: &Model,
    reward: &Reward,
    nu: &[f64],
    epsilon_row: Option<&EpsilonRow>,
    sol: &GainSolution,
) -> Result<()> {
    let fail = |what: String| Err(Error::Numerical(what));
    let n = m.n_states();
    let lambda = sol.lambda_dual.unwrap_or(0.0);
    let eps_mask = epsilon_row.map(|e| e.states.mask(n));
    for x in 0..n {
        for ((u, a), (_, b)) in sol.alpha[x].iter().zip(&sol.beta[x]) {
            if *a < -MASS_TOL || *b < -MASS_TOL {
                return fail(format!("negative occupation measure at ({x},{u})"));
            }
        }
        for c in m.choices(x) {
            let gain = c.expect(&sol.v) - sol.v[x];
            if gain > CHECK_TOL {
                return fail(format!("gain constraint violated by {gain:e} at ({x},{})", c.action));
            }
            let lam = match &eps_mask {
                Some(mask) if mask[x] => lambda,
                _ => 0.0,
            };
            let slack = sol.v[x] + sol.h[x] + lam - reward.value(m, x, c.action)? - c.expect(&sol.h);
            if slack < -CHECK_TOL {
                return fail(format!(
                    "bias constraint violated by {:e} at ({x},{})",
                    -slack, c.action
                ));
            }
        }
    }
    let total: f64 = (0..n).map(|x| sol.alpha_mass(x)).sum();
    let nu_total: f64 = nu.iter().sum();
    if (total - nu_total).abs() > CHECK_TOL {
        return fail(format!("alpha mass {total} differs from weight total {nu_total}"));
    }
    let dual_obj: f64 =
        nu.iter().zip(&sol.v).map(|(w, v)| w * v).sum::<f64>() + epsilon_row.map_or(0.0, |e| e.bound * lambda);
    if (dual_obj - sol.objective).abs() > CHECK_TOL {
        return fail(format!(
            "objective {} differs from dual value {dual_obj}",
            sol.objective
        ));
    }
    Ok(())
}

/// Stationary policy from occupation measures: `α` ratios where
/// `Σ_u α > 1e-9`, else `β` ratios where `Σ_u β > 1e-9`, else the action
/// maximizing `Σ Q(y|x,u) v(y)` (lowest action id on ties).
pub fn extract_policy(m: &Model, sol: &GainSolution) -> StationaryPolicy {
    let ratios = |row: &[(ActionId, f64)]| -> Option<Vec<(ActionId, f64)>> {
        let total: f64 = row.iter().map(|e| e.1.max(0.0)).sum();
        (total > MASS_TOL).then(|| row.iter().map(|&(u, w)| (u, w.max(0.0) / total)).collect())
    };
    let rows = (0..m.n_states())
        .map(|x| {
            ratios(&sol.alpha[x])
                .or_else(|| ratios(&sol.beta[x]))
                .unwrap_or_else(|| vec![(greedy_action(m, x, &sol.v), 1.0)])
        })
        .collect();
    StationaryPolicy::new(rows)
}

fn greedy_action(m: &Model, x: StateId, v: &[f64]) -> ActionId {
    let mut best: Option<(ActionId, f64)> = None;
    for c in m.choices(x) {
        let q = c.expect(v);
        if best.map_or(true, |(_, b)| q > b + PROB_TIE) {
            best = Some((c.action, q));
        }
    }
    best.expect("every state has a feasible action").0
}

const PROB_TIE: f64 = 1e-12;

/// `max |(P^π v)(x) − v(x)|` over states reachable from `start` under `pi`.
pub fn harmonic_residual(m: &Model, pi: &StationaryPolicy, v: &[f64], start: &StateSet) -> Result<f64> {
    let chain = induced_chain(m, pi)?;
    let pv = chain.apply(v);
    Ok(chain
        .reachable_from(start)
        .iter()
        .map(|x| (pv[x] - v[x]).abs())
        .fold(0.0, f64::max))
}

/// Gain of a stationary policy under a closed-indicator reward.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyGain {
    pub per_state: Vec<f64>,
    pub aggregate: f64,
}

/// `v^π = Σ_k c_k · P^π(τ_{S_k} < ∞)`, valid because every `S_k` is
/// closed under all policies, so the long-run average of `1_{S_k}` equals
/// its absorption probability.
pub fn evaluate_policy_gain(
    m: &Model,
    reward: &IndicatorReward,
    pi: &StationaryPolicy,
    nu: &[f64],
) -> Result<PolicyGain> {
    check_weights(m, nu)?;
    let mut per_state = vec![0.0; m.n_states()];
    for (c, set) in &reward.terms {
        m.check_set(set)?;
        if !m.is_closed_under_all(set) {
            return Err(Error::InvalidArgument(
                "reward term is not the indicator of a set closed under every policy".into(),
            ));
        }
        let h = absorption_probability(m, pi, set)?;
        for (acc, p) in per_state.iter_mut().zip(h) {
            *acc += c * p;
        }
    }
    let aggregate = nu.iter().zip(&per_state).map(|(w, v)| w * v).sum();
    Ok(PolicyGain { per_state, aggregate })
}

/// Iteration cap for the fixed-point oracles.
pub const ORACLE_MAX_ITER: usize = 10_000_000;

/// Minimal nonnegative solution of `h = 1` on `S`, `h = P^π h` off `S`,
/// by monotone iteration from `1_S` until successive iterates agree to
/// `1e-12`. States with no path to `S` are exactly 0.
pub fn absorption_probability(m: &Model, pi: &StationaryPolicy, set: &StateSet) -> Result<Vec<f64>> {
    m.check_set(set)?;
    let chain = induced_chain(m, pi)?;
    if let Some((x, mass)) = chain.leak(set) {
        if mass > crate::PROB_TOL {
            return Err(Error::NotClosed {
                what: "absorption set".into(),
                state: x,
                mass,
            });
        }
    }
    let n = m.n_states();
    let inside = set.mask(n);
    let mut h: Vec<f64> = inside.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    for _ in 0..ORACLE_MAX_ITER {
        let mut diff: f64 = 0.0;
        let next: Vec<f64> = (0..n)
            .map(|x| {
                if inside[x] {
                    return 1.0;
                }
                let v: f64 = chain.row(x).iter().map(|&(y, p)| p * h[y]).sum();
                diff = diff.max((v - h[x]).abs());
                v
            })
            .collect();
        h = next;
        if diff <= 1e-12 {
            return Ok(h);
        }
    }
    Err(Error::Numerical("absorption iteration did not converge".into()))
}

/// One Bellman step `V(x) ← max_u Σ Q(y|x,u) V(y)` (target states stay 1).
pub fn bellman_reach_step(m: &Model, target: &[bool], v: &[f64]) -> Vec<f64> {
    (0..m.n_states())
        .map(|x| {
            if target[x] {
                1.0
            } else {
                m.choices(x).iter().map(|c| c.expect(v)).fold(0.0, f64::max)
            }
        })
        .collect()
}

/// Maximal probability of reaching `target`, by value iteration from
/// `1_target` until the sup-norm step is at most `tol`. Expects `target`
/// to be absorbing in `m`. Never touches the LP solver.
pub fn value_iteration_reach(m: &Model, target: &StateSet, tol: f64) -> Result<Vec<f64>> {
    m.check_set(target)?;
    let mask = target.mask(m.n_states());
    let mut v: Vec<f64> = mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    for _ in 0..ORACLE_MAX_ITER {
        let next = bellman_reach_step(m, &mask, &v);
        let diff = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if diff <= tol {
            return Ok(v);
        }
    }
    Err(Error::Numerical("value iteration did not converge".into()))
}

/// `(1/N) Σ_{t<N} P^π_x(X_t ∈ A)`, exactly, by repeated products with `P^π`.
pub fn cesaro_average(m: &Model, pi: &StationaryPolicy, set: &StateSet, horizon: usize) -> Result<Vec<f64>> {
    m.check_set(set)?;
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let chain = induced_chain(m, pi)?;
    let mut g: Vec<f64> = set
        .mask(m.n_states())
        .into_iter()
        .map(|b| if b { 1.0 } else { 0.0 })
        .collect();
    let mut sum = vec![0.0; g.len()];
    for t in 0..horizon {
        for (s, x) in sum.iter_mut().zip(&g) {
            *s += x;
        }
        if t + 1 < horizon {
            g = chain.apply(&g);
        }
    }
    Ok(sum.into_iter().map(|s| s / horizon as f64).collect())
}

#[derive(Serialize)]
struct GainSolutionFile<'a> {
    objective: f64,
    lambda_dual: Option<f64>,
    v: &'a [f64],
    h: &'a [f64],
    alpha: BTreeMap<String, f64>,
    beta: BTreeMap<String, f64>,
    iterations: usize,
}

/// JSON form with `α`/`β` keyed by `"(x,u)"` label tags.
pub fn gain_solution_to_json(m: &Model, sol: &GainSolution) -> String {
    let tag = |x: StateId, u: ActionId| format!("({},{})", m.state_label(x), m.action_labels()[u]);
    let keyed = |rows: &[Vec<(ActionId, f64)>]| {
        rows.iter()
            .enumerate()
            .flat_map(|(x, r)| r.iter().map(move |&(u, w)| (x, u, w)))
            .map(|(x, u, w)| (tag(x, u), w))
            .collect()
    };
    let file = GainSolutionFile {
        objective: sol.objective,
        lambda_dual: sol.lambda_dual,
        v: &sol.v,
        h: &sol.h,
        alpha: keyed(&sol.alpha),
        beta: keyed(&sol.beta),
        iterations: sol.iterations,
    };
    crate::fmt::to_json(&file).expect("plain data serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{m5, random_disjoint_sets, random_model};
    use crate::transform::make_absorbing;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn m5_lp_shape() {
        let m = make_absorbing(&m5(), &[&StateSet::from([3])]).unwrap();
        let g = build_gain_lp(&m, &Reward::indicator(5, &StateSet::from([3])), &[1.0; 5], None).unwrap();
        assert_eq!(g.lp.n_cols(), 20);
        assert_eq!(g.lp.n_rows(), 10);
    }

    #[test]
    fn m5_reach_target_only() {
        let a = StateSet::from([3]);
        let m = make_absorbing(&m5(), &[&a]).unwrap();
        let s = solve_gain(&m, &Reward::indicator(5, &a), &[1.0; 5], None).unwrap();
        assert!(close(&s.v, &[1.0, 1.0, 1.0, 1.0, 0.0], 1e-9), "{:?}", s.v);
        let vi = value_iteration_reach(&m, &a, 1e-13).unwrap();
        assert!(close(&vi, &[1.0, 1.0, 1.0, 1.0, 0.0], 1e-9));
    }

    #[test]
    fn m5_reach_avoid_values_and_policy() {
        let a = StateSet::from([3]);
        let b = StateSet::from([0, 1]);
        let m = make_absorbing(&m5(), &[&a, &b]).unwrap();
        let s = solve_gain(&m, &Reward::indicator(5, &a), &[1.0; 5], None).unwrap();
        assert!(close(&s.v, &[0.0, 0.0, 0.1, 1.0, 0.0], 1e-9), "{:?}", s.v);
        let pi = extract_policy(&m, &s);
        assert_eq!(pi.row(2), &[(0, 1.0)]);
        assert!(harmonic_residual(&m, &pi, &s.v, &StateSet::all(5)).unwrap() <= 1e-8);
    }

    #[test]
    fn zero_weights_give_zero_objective() {
        let a = StateSet::from([3]);
        let m = make_absorbing(&m5(), &[&a]).unwrap();
        let s = solve_gain(&m, &Reward::indicator(5, &a), &[0.0; 5], None).unwrap();
        assert!(s.objective.abs() < 1e-12);
    }

    #[test]
    fn missing_reward_rejected() {
        let err = build_gain_lp(&m5(), &Reward::Model, &[1.0; 5], None).unwrap_err();
        assert!(matches!(err, Error::MissingReward { x: 0, u: 0 }));
    }

    #[test]
    fn extraction_rules() {
        let m = m5();
        let mut sol = GainSolution {
            v: vec![0.0, 0.0, 0.0, 1.0, 0.0],
            h: vec![0.0; 5],
            alpha: (0..5).map(|_| vec![(0, 0.0), (1, 0.0)]).collect(),
            beta: (0..5).map(|_| vec![(0, 0.0), (1, 0.0)]).collect(),
            objective: 0.0,
            lambda_dual: None,
            iterations: 0,
            duality_gap: 0.0,
        };
        sol.alpha[2] = vec![(0, 0.2), (1, 0.6)];
        sol.beta[1] = vec![(0, 0.0), (1, 0.3)];
        let pi = extract_policy(&m, &sol);
        assert!((pi.prob(2, 0) - 0.25).abs() < 1e-15 && (pi.prob(2, 1) - 0.75).abs() < 1e-15);
        assert_eq!(pi.row(1), &[(1, 1.0)]);
        // no mass at all: greedy on v, ties to the lowest action
        assert_eq!(pi.row(0), &[(0, 1.0)]);
        assert_eq!(pi.row(4), &[(0, 1.0)]);
    }

    #[test]
    fn greedy_fallback_prefers_value() {
        let m = m5();
        let v = [0.0, 0.0, 0.0, 1.0, 0.0];
        assert_eq!(greedy_action(&m, 1, &v), 1);
        assert_eq!(greedy_action(&m, 0, &v), 0);
    }

    #[test]
    fn policy_gain_examples() {
        let a = StateSet::from([3]);
        let b = StateSet::from([0, 1]);
        let m = make_absorbing(&m5(), &[&a, &b]).unwrap();
        let u1 = StationaryPolicy::deterministic(&m, |_| 0).unwrap();
        let g = evaluate_policy_gain(&m, &IndicatorReward::indicator(a.clone()), &u1, &[0.2; 5]).unwrap();
        assert!((g.per_state[2] - 0.1).abs() < 1e-12);
        let z = evaluate_policy_gain(&m, &IndicatorReward::zero(), &u1, &[0.2; 5]).unwrap();
        assert!(z.per_state.iter().all(|&v| v == 0.0));
        let u2 = StationaryPolicy::deterministic(&m, |_| 1).unwrap();
        let h = absorption_probability(&m, &u2, &b).unwrap();
        assert_eq!(h[2], 1.0);
        assert_eq!(h[4], 0.0);
    }

    #[test]
    fn non_closed_reward_rejected() {
        let m = m5();
        let pi = StationaryPolicy::uniform(&m);
        let r = IndicatorReward::indicator(StateSet::from([2]));
        assert!(evaluate_policy_gain(&m, &r, &pi, &[0.2; 5]).is_err());
        assert!(matches!(
            absorption_probability(&m, &pi, &StateSet::from([2])),
            Err(Error::NotClosed { .. })
        ));
    }

    #[test]
    fn value_iteration_trivia() {
        let m = m5();
        let all = StateSet::all(5);
        assert_eq!(value_iteration_reach(&m, &all, 1e-12).unwrap(), vec![1.0; 5]);
        // state 1 (id 0) has no incoming edges
        let t = StateSet::from([0]);
        let mt = make_absorbing(&m, &[&t]).unwrap();
        let v = value_iteration_reach(&mt, &t, 1e-12).unwrap();
        assert_eq!(v, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn cesaro_trivia() {
        let a = StateSet::from([3]);
        let b = StateSet::from([0, 1]);
        let m = make_absorbing(&m5(), &[&a, &b]).unwrap();
        let pi = StationaryPolicy::uniform(&m);
        assert_eq!(cesaro_average(&m, &pi, &a, 1).unwrap(), vec![0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(cesaro_average(&m, &pi, &StateSet::new(), 50).unwrap(), vec![0.0; 5]);
        let c = cesaro_average(&m, &pi, &a, 10_000).unwrap();
        let h = absorption_probability(&m, &pi, &a).unwrap();
        assert!(close(&c, &h, 1e-3));
    }

    #[test]
    fn primal_and_dual_programs_agree() {
        let a = StateSet::from([3]);
        let b = StateSet::from([0, 1]);
        let m = make_absorbing(&m5(), &[&a, &b]).unwrap();
        let r = Reward::indicator(5, &a);
        let primal = build_gain_primal_lp(&m, &r, &[1.0; 5]).unwrap().solve().unwrap();
        let dual = solve_gain(&m, &r, &[1.0; 5], None).unwrap();
        assert_eq!(primal.status, LpStatus::Optimal);
        assert!((primal.objective - dual.objective).abs() < 1e-9);
        assert!(close(&primal.primal[..5], &dual.v, 1e-9));
    }

    #[test]
    fn bias_shift_stays_feasible() {
        let a = StateSet::from([3]);
        let m = make_absorbing(&m5(), &[&a]).unwrap();
        let r = Reward::indicator(5, &a);
        let lp = build_gain_primal_lp(&m, &r, &[1.0; 5]).unwrap();
        let s = lp.solve().unwrap();
        for shift in [-3.5, 0.25, 1e3] {
            let mut x = s.primal.clone();
            for h in &mut x[5..] {
                *h += shift;
            }
            let c = lp.certificate(&x, &s.dual);
            assert!(c.primal_residual <= 1e-9, "shift {shift}: {c:?}");
        }
    }

    #[test]
    fn json_keys_use_labels() {
        let a = StateSet::from([3]);
        let m = make_absorbing(&m5(), &[&a]).unwrap();
        let s = solve_gain(&m, &Reward::indicator(5, &a), &[1.0; 5], None).unwrap();
        let j = gain_solution_to_json(&m, &s);
        assert!(j.contains("\"(3,u2)\""), "{j}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn lp_matches_value_iteration(seed in 0u64..10_000, n in 2usize..10) {
            let m = random_model(seed, n, 3);
            let (a, b) = random_disjoint_sets(seed, n);
            let t = make_absorbing(&m, &[&a, &b]).unwrap();
            let s = solve_gain(&t, &Reward::indicator(n, &a), &vec![1.0; n], None).unwrap();
            let vi = value_iteration_reach(&t, &a, 1e-13).unwrap();
            prop_assert!(close(&s.v, &vi, 1e-6), "lp {:?} vi {:?}", s.v, vi);
            let pi = extract_policy(&t, &s);
            let g = evaluate_policy_gain(&t, &IndicatorReward::indicator(a.clone()), &pi, &vec![1.0; n]).unwrap();
            prop_assert!(close(&g.per_state, &s.v, 1e-6));
            prop_assert!(harmonic_residual(&t, &pi, &s.v, &StateSet::all(n)).unwrap() <= 1e-8);
        }

        #[test]
        fn value_iteration_is_monotone(seed in 0u64..10_000, n in 2usize..10) {
            let m = random_model(seed, n, 3);
            let (a, _) = random_disjoint_sets(seed, n);
            let t = make_absorbing(&m, &[&a]).unwrap();
            let mask = a.mask(n);
            let mut v: Vec<f64> = mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
            for _ in 0..50 {
                let next = bellman_reach_step(&t, &mask, &v);
                prop_assert!(next.iter().zip(&v).all(|(a, b)| a >= b));
                v = next;
            }
        }
    }
}
