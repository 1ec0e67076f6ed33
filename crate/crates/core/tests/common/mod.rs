//! Brute-force path computations shared by the integration tests.

#![allow(dead_code)]

use avreach_core::avg::absorption_probability;
use avreach_core::fixtures::{random_disjoint_sets, random_model};
use avreach_core::model::{Chain, Model, StateId, StateSet, StationaryPolicy, TwoPhasePolicy};
use avreach_core::transform::{aug_index, make_absorbing};

/// One finite history `x_0 u_0 x_1 … x_T` and its probability.
#[derive(Debug, Clone)]
pub struct Path {
    pub states: Vec<StateId>,
    pub actions: Vec<usize>,
    pub prob: f64,
}

/// Every positive-probability history of length `horizon` from `x0` under
/// a two-phase policy, whose phase flips once a state of its avoid set has
/// been seen (the current state included).
pub fn two_phase_paths(m: &Model, tp: &TwoPhasePolicy, x0: StateId, horizon: usize) -> Vec<Path> {
    let mut out = Vec::new();
    let mut stack = vec![Path {
        states: vec![x0],
        actions: Vec::new(),
        prob: 1.0,
    }];
    while let Some(p) = stack.pop() {
        if p.actions.len() == horizon {
            out.push(p);
            continue;
        }
        let x = *p.states.last().unwrap();
        let visited = p.states.iter().any(|&s| tp.avoid.contains(s));
        for &(u, w) in tp.phase(visited).row(x) {
            if w == 0.0 {
                continue;
            }
            for &(y, q) in &m.choice(x, u).unwrap().next {
                let mut next = p.clone();
                next.states.push(y);
                next.actions.push(u);
                next.prob *= w * q;
                stack.push(next);
            }
        }
    }
    out
}

/// Probability of an augmented history under a stationary policy.
pub fn stationary_path_prob(m: &Model, pi: &StationaryPolicy, states: &[StateId], actions: &[usize]) -> f64 {
    let mut p = 1.0;
    for (t, &u) in actions.iter().enumerate() {
        p *= pi.prob(states[t], u) * m.prob(states[t], u, states[t + 1]);
    }
    p
}

/// The augmented image of a base history that starts outside `avoid`.
pub fn lift_path(states: &[StateId], avoid: &StateSet) -> Vec<StateId> {
    let mut layer = 0;
    states
        .iter()
        .map(|&x| {
            if avoid.contains(x) {
                layer = 1;
            }
            aug_index(x, layer)
        })
        .collect()
}

/// `P_x(τ_A < τ_B, τ_A ≤ T)` per start, by propagating the mass of
/// histories that have entered neither set yet.
pub fn reach_before_within(chain: &Chain, a: &StateSet, b: &StateSet, horizon: usize) -> Vec<f64> {
    let n = chain.n_states();
    (0..n)
        .map(|x0| {
            if a.contains(x0) {
                return 1.0;
            }
            if b.contains(x0) {
                return 0.0;
            }
            let mut live = vec![0.0; n];
            live[x0] = 1.0;
            let mut hit = 0.0;
            for _ in 0..horizon {
                let mut next = vec![0.0; n];
                for (x, &w) in live.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    for &(y, p) in chain.row(x) {
                        if a.contains(y) {
                            hit += w * p;
                        } else if !b.contains(y) {
                            next[y] += w * p;
                        }
                    }
                }
                live = next;
            }
            hit
        })
        .collect()
}

/// `P_x(X_t ∈ A)` per start by matrix powers.
pub fn marginal_in(chain: &Chain, a: &StateSet, t: usize) -> Vec<f64> {
    let mut g: Vec<f64> = a
        .mask(chain.n_states())
        .into_iter()
        .map(|b| if b { 1.0 } else { 0.0 })
        .collect();
    for _ in 0..t {
        g = chain.apply(&g);
    }
    g
}

/// A random model with a random target made absorbing, a random policy,
/// and the target's absorption probabilities under that policy.
pub fn closed_instance(seed: u64, n: usize, max_actions: usize) -> (Model, StateSet, StationaryPolicy, Vec<f64>) {
    let base = random_model(seed, n, max_actions);
    let (a, _) = random_disjoint_sets(seed, n);
    let m = make_absorbing(&base, &[&a]).unwrap();
    let pi = StationaryPolicy::random(&m, seed ^ 0x51);
    let h = absorption_probability(&m, &pi, &a).unwrap();
    (m, a, pi, h)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `(value, hit-B mass)` of a two-phase policy on M5 with `A = {4}`,
/// `B = {1,2}` under the uniform start, evaluated exactly on the
/// augmented model.
pub fn m5_two_phase_outcome(tp: &TwoPhasePolicy) -> (f64, f64) {
    use avreach_core::avg::evaluate_policy_gain;
    use avreach_core::fixtures::m5;
    use avreach_core::model::Distribution;
    use avreach_core::transform::{augment, embed_policy, lift_distribution, IndicatorReward};
    let m = m5();
    let (a, b) = m5_sets();
    let aug = augment(&m, &b).unwrap();
    let a_hat = aug.both_layers(&a);
    let model = make_absorbing(&aug.model, &[&a_hat]).unwrap();
    let nu = lift_distribution(&Distribution::uniform(5), &b);
    let pi = embed_policy(tp);
    let value = evaluate_policy_gain(&model, &IndicatorReward::indicator(a_hat), &pi, nu.as_slice()).unwrap();
    let mass = evaluate_policy_gain(
        &model,
        &IndicatorReward::indicator(aug.visited_layer()),
        &pi,
        nu.as_slice(),
    )
    .unwrap();
    (value.aggregate, mass.aggregate)
}

/// `A = {4}` and `B = {1,2}` as ids.
pub fn m5_sets() -> (StateSet, StateSet) {
    ([3].into_iter().collect(), [0, 1].into_iter().collect())
}

/// Policy on M5 playing `u2` with probability `q3` at state 3 and `q2` at
/// state 2, `u1` elsewhere.
pub fn m5_policy(q2: f64, q3: f64) -> StationaryPolicy {
    let mix = |q: f64| vec![(0, 1.0 - q), (1, q)];
    StationaryPolicy::new(vec![vec![(0, 1.0)], mix(q2), mix(q3), vec![(0, 1.0)], vec![(0, 1.0)]])
}

/// Best two-phase value on M5 over the family `pre(u2|3) = q` on a grid of
/// the given step, with `u2` at state 2 in both phases and at state 3 after
/// visiting B; `None` when no member meets the bound.
pub fn m5_two_phase_search(eps: f64, step: f64) -> Option<(f64, f64)> {
    let k = (1.0 / step).round() as usize;
    let post = m5_policy(1.0, 1.0);
    let (_, b) = m5_sets();
    (0..=k)
        .map(|i| i as f64 / k as f64)
        .filter_map(|q| {
            let tp = TwoPhasePolicy::new(m5_policy(1.0, q), post.clone(), b.clone());
            let (v, mass) = m5_two_phase_outcome(&tp);
            (mass <= eps + 1e-12).then_some((v, q))
        })
        .max_by(|x, y| x.0.total_cmp(&y.0))
}

/// Best stationary Markov value on M5 under the hitting bound, over a grid
/// of `(q2, q3)`.
pub fn m5_markov_search(eps: f64, step3: f64) -> Option<f64> {
    let (_, b) = m5_sets();
    let k = (1.0 / step3).round() as usize;
    let mut best: Option<f64> = None;
    for q2 in [0.0, 0.25, 0.5, 0.75, 1.0] {
        for i in 0..=k {
            let pi = m5_policy(q2, i as f64 / k as f64);
            let tp = TwoPhasePolicy::new(pi.clone(), pi, b.clone());
            let (v, mass) = m5_two_phase_outcome(&tp);
            if mass <= eps + 1e-12 && best.map_or(true, |bv| v > bv) {
                best = Some(v);
            }
        }
    }
    best
}
