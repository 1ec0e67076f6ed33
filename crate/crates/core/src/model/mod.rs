//! Finite Markov control models, policies, and induced chains.
//!
//! States and actions are dense ids `0..n`. Labels are carried as metadata
//! for file I/O and never influence any computation.

mod io;
mod policy;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::PROB_TOL;

pub use io::{load_model, policy_from_json, policy_to_json, save_model, PolicyFile};
pub(crate) use io::{policy_doc, PolicyJson};
pub use policy::{StationaryPolicy, TwoPhasePolicy};

pub type StateId = usize;
pub type ActionId = usize;

/// An ordered set of state ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateSet(BTreeSet<StateId>);

impl StateSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn all(n: usize) -> Self {
        (0..n).collect()
    }

    pub fn contains(&self, x: StateId) -> bool {
        self.0.contains(&x)
    }

    pub fn insert(&mut self, x: StateId) -> bool {
        self.0.insert(x)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = StateId> + '_ {
        self.0.iter().copied()
    }

    pub fn max(&self) -> Option<StateId> {
        self.0.last().copied()
    }

    /// Membership vector of length `n`.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for x in self.iter().filter(|&x| x < n) {
            m[x] = true;
        }
        m
    }

    /// First common element, if any.
    pub fn first_common(&self, other: &StateSet) -> Option<StateId> {
        self.0.intersection(&other.0).next().copied()
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        StateSet(self.0.union(&other.0).copied().collect())
    }

    pub fn complement(&self, n: usize) -> StateSet {
        (0..n).filter(|x| !self.contains(*x)).collect()
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn to_vec(&self) -> Vec<StateId> {
        self.iter().collect()
    }
}

impl FromIterator<StateId> for StateSet {
    fn from_iter<I: IntoIterator<Item = StateId>>(iter: I) -> Self {
        StateSet(iter.into_iter().collect())
    }
}

impl<const N: usize> From<[StateId; N]> for StateSet {
    fn from(a: [StateId; N]) -> Self {
        a.into_iter().collect()
    }
}

/// One feasible action at a state: its kernel row and optional reward.
#[derive(Debug, Clone, PartialEq)]
pub struct Choice {
    pub action: ActionId,
    /// Destinations sorted by state id, no duplicates.
    pub next: Vec<(StateId, f64)>,
    pub reward: Option<f64>,
}

impl Choice {
    /// `Σ_y Q(y|x,u) f(y)`
    pub fn expect(&self, f: &[f64]) -> f64 {
        self.next.iter().map(|&(y, p)| p * f[y]).sum()
    }

    pub fn mass_in(&self, set: &[bool]) -> f64 {
        self.next.iter().filter(|(y, _)| set[*y]).map(|(_, p)| p).sum()
    }
}

/// A finite Markov control model.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    state_labels: Option<Vec<String>>,
    action_labels: Vec<String>,
    choices: Vec<Vec<Choice>>,
}

impl Model {
    pub fn n_states(&self) -> usize {
        self.choices.len()
    }

    pub fn n_actions(&self) -> usize {
        self.action_labels.len()
    }

    pub fn state_labels(&self) -> Option<&[String]> {
        self.state_labels.as_deref()
    }

    pub fn state_label(&self, x: StateId) -> String {
        match &self.state_labels {
            Some(l) => l[x].clone(),
            None => x.to_string(),
        }
    }

    pub fn action_labels(&self) -> &[String] {
        &self.action_labels
    }

    /// Feasible actions at `x` with their kernel rows, sorted by action id.
    pub fn choices(&self, x: StateId) -> &[Choice] {
        &self.choices[x]
    }

    pub fn feasible(&self, x: StateId) -> impl Iterator<Item = ActionId> + '_ {
        self.choices[x].iter().map(|c| c.action)
    }

    pub fn choice(&self, x: StateId, u: ActionId) -> Option<&Choice> {
        self.choices[x]
            .binary_search_by_key(&u, |c| c.action)
            .ok()
            .map(|k| &self.choices[x][k])
    }

    pub fn is_feasible(&self, x: StateId, u: ActionId) -> bool {
        self.choice(x, u).is_some()
    }

    /// `Q(y|x,u)`, zero when the pair is not feasible.
    pub fn prob(&self, x: StateId, u: ActionId, y: StateId) -> f64 {
        self.choice(x, u)
            .and_then(|c| c.next.binary_search_by_key(&y, |e| e.0).ok().map(|k| c.next[k].1))
            .unwrap_or(0.0)
    }

    pub fn has_reward(&self) -> bool {
        self.choices.iter().flatten().any(|c| c.reward.is_some())
    }

    /// Number of feasible state-action pairs.
    pub fn n_pairs(&self) -> usize {
        self.choices.iter().map(Vec::len).sum()
    }

    pub(crate) fn from_parts(
        state_labels: Option<Vec<String>>,
        action_labels: Vec<String>,
        choices: Vec<Vec<Choice>>,
    ) -> Self {
        Model {
            state_labels,
            action_labels,
            choices,
        }
    }

    pub(crate) fn choices_mut(&mut self) -> &mut Vec<Vec<Choice>> {
        &mut self.choices
    }

    pub fn validate(&self) -> ValidationReport {
        validate_model(self)
    }

    /// Remark ClosedQ: `set` is closed under every policy when no feasible
    /// action at a member state puts mass outside it.
    pub fn is_closed_under_all(&self, set: &StateSet) -> bool {
        let mask = set.mask(self.n_states());
        set.iter().all(|x| {
            self.choices[x]
                .iter()
                .all(|c| c.next.iter().all(|&(y, p)| mask[y] || p == 0.0))
        })
    }

    /// Successor sets of the action-union graph.
    pub fn successors(&self, x: StateId) -> BTreeSet<StateId> {
        self.choices[x]
            .iter()
            .flat_map(|c| c.next.iter().filter(|e| e.1 > 0.0).map(|e| e.0))
            .collect()
    }

    /// States with a directed path into `target` in the action-union graph
    /// (including `target` itself).
    pub fn backward_reachable(&self, target: &StateSet) -> StateSet {
        let n = self.n_states();
        let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); n];
        for x in 0..n {
            for y in self.successors(x) {
                preds[y].push(x);
            }
        }
        let mut seen = target.mask(n);
        let mut stack: Vec<StateId> = target.to_vec();
        while let Some(y) = stack.pop() {
            for &x in &preds[y] {
                if !seen[x] {
                    seen[x] = true;
                    stack.push(x);
                }
            }
        }
        (0..n).filter(|&x| seen[x]).collect()
    }

    pub fn check_state(&self, x: StateId) -> Result<()> {
        if x < self.n_states() {
            Ok(())
        } else {
            Err(Error::UnknownState(x.to_string()))
        }
    }

    pub fn check_set(&self, set: &StateSet) -> Result<()> {
        match set.max() {
            Some(x) => self.check_state(x),
            None => Ok(()),
        }
    }
}

/// Incremental construction of a [`Model`].
#[derive(Debug, Clone)]
pub struct ModelBuilder {
    state_labels: Option<Vec<String>>,
    action_labels: Vec<String>,
    choices: Vec<Vec<Choice>>,
}

impl ModelBuilder {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        ModelBuilder {
            state_labels: None,
            action_labels: (0..n_actions).map(|u| format!("u{}", u + 1)).collect(),
            choices: vec![Vec::new(); n_states],
        }
    }

    pub fn state_labels(mut self, labels: Vec<String>) -> Self {
        self.state_labels = Some(labels);
        self
    }

    pub fn action_labels(mut self, labels: Vec<String>) -> Self {
        self.action_labels = labels;
        self
    }

    pub fn n_states(&self) -> usize {
        self.choices.len()
    }

    /// Declare `u` feasible at `x`. Redeclaring is a no-op.
    pub fn feasible(&mut self, x: StateId, u: ActionId) -> Result<&mut Self> {
        if x >= self.choices.len() {
            return Err(Error::UnknownState(x.to_string()));
        }
        if u >= self.action_labels.len() {
            return Err(Error::UnknownAction(u.to_string()));
        }
        let row = &mut self.choices[x];
        if let Err(k) = row.binary_search_by_key(&u, |c| c.action) {
            row.insert(
                k,
                Choice {
                    action: u,
                    next: Vec::new(),
                    reward: None,
                },
            );
        }
        Ok(self)
    }

    fn slot(&mut self, x: StateId, u: ActionId) -> Result<&mut Choice> {
        if x >= self.choices.len() {
            return Err(Error::UnknownState(x.to_string()));
        }
        let row = &mut self.choices[x];
        match row.binary_search_by_key(&u, |c| c.action) {
            Ok(k) => Ok(&mut row[k]),
            Err(_) => Err(Error::InfeasiblePair { x, u }),
        }
    }

    /// Add `Q(to|x,u) = p`. Destinations outside the state range are kept
    /// and reported by validation; duplicates are rejected.
    pub fn transition(&mut self, x: StateId, u: ActionId, to: StateId, p: f64) -> Result<&mut Self> {
        let c = self.slot(x, u)?;
        match c.next.binary_search_by_key(&to, |e| e.0) {
            Ok(_) => return Err(Error::DuplicateTransition { x, u, to }),
            Err(k) => c.next.insert(k, (to, p)),
        }
        Ok(self)
    }

    pub fn reward(&mut self, x: StateId, u: ActionId, r: f64) -> Result<&mut Self> {
        let c = self.slot(x, u)?;
        if c.reward.is_some() {
            return Err(Error::DuplicateReward { x, u });
        }
        c.reward = Some(r);
        Ok(self)
    }

    /// Convenience: make `u` feasible at `x` with the given row.
    pub fn row(&mut self, x: StateId, u: ActionId, next: &[(StateId, f64)]) -> Result<&mut Self> {
        self.feasible(x, u)?;
        for &(y, p) in next {
            self.transition(x, u, y, p)?;
        }
        Ok(self)
    }

    /// The model as given, without validation.
    pub fn build_unchecked(self) -> Model {
        Model::from_parts(self.state_labels, self.action_labels, self.choices)
    }

    /// The model, or the aggregated validation report.
    pub fn build(self) -> Result<Model> {
        if self.choices.is_empty() {
            return Err(Error::NoStates);
        }
        let m = self.build_unchecked();
        let report = validate_model(&m);
        if report.is_valid() {
            Ok(m)
        } else {
            Err(Error::Invalid(report))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NoStates,
    LabelCount {
        expected: usize,
        found: usize,
    },
    EmptyFeasible {
        state: StateId,
    },
    NegativeProbability {
        x: StateId,
        u: ActionId,
        to: StateId,
        p: f64,
    },
    BadDestination {
        x: StateId,
        u: ActionId,
        to: StateId,
    },
    RowSum {
        x: StateId,
        u: ActionId,
        sum: f64,
    },
    MissingReward {
        x: StateId,
        u: ActionId,
    },
    NonFiniteReward {
        x: StateId,
        u: ActionId,
        r: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoStates => write!(f, "no states"),
            Violation::LabelCount { expected, found } => {
                write!(f, "expected {expected} state labels, found {found}")
            }
            Violation::EmptyFeasible { state } => write!(f, "state {state} has no feasible action"),
            Violation::NegativeProbability { x, u, to, p } => {
                write!(f, "Q({to}|{x},{u}) = {p} is negative or not finite")
            }
            Violation::BadDestination { x, u, to } => {
                write!(f, "kernel row ({x},{u}) references unknown state {to}")
            }
            Violation::RowSum { x, u, sum } => {
                write!(f, "kernel row ({x},{u}) sums to {sum}, not 1")
            }
            Violation::MissingReward { x, u } => write!(f, "reward missing at ({x},{u})"),
            Violation::NonFiniteReward { x, u, r } => write!(f, "reward at ({x},{u}) is {r}"),
        }
    }
}

/// Every invariant violation of a model; empty iff the model is valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate_model(m: &Model) -> ValidationReport {
    let n = m.n_states();
    let mut out = Vec::new();
    if n == 0 {
        out.push(Violation::NoStates);
    }
    if let Some(l) = m.state_labels() {
        if l.len() != n {
            out.push(Violation::LabelCount {
                expected: n,
                found: l.len(),
            });
        }
    }
    let with_reward = m.has_reward();
    for x in 0..n {
        if m.choices(x).is_empty() {
            out.push(Violation::EmptyFeasible { state: x });
        }
        for c in m.choices(x) {
            let u = c.action;
            let mut sum = 0.0;
            for &(to, p) in &c.next {
                if to >= n {
                    out.push(Violation::BadDestination { x, u, to });
                }
                if !(p >= 0.0) || !p.is_finite() {
                    out.push(Violation::NegativeProbability { x, u, to, p });
                }
                sum += p;
            }
            if !((sum - 1.0).abs() <= PROB_TOL) {
                out.push(Violation::RowSum { x, u, sum });
            }
            if with_reward {
                match c.reward {
                    None => out.push(Violation::MissingReward { x, u }),
                    Some(r) if !r.is_finite() => out.push(Violation::NonFiniteReward { x, u, r }),
                    _ => {}
                }
            }
        }
    }
    ValidationReport { violations: out }
}

/// A probability distribution (or nonnegative weight vector) over states.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    /// A strict distribution: nonnegative weights summing to one.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let d = Self::weights(weights)?;
        let s = d.total();
        if (s - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidArgument(format!("distribution sums to {s}, not 1")));
        }
        Ok(d)
    }

    /// A nonnegative weight vector with arbitrary total mass.
    pub fn weights(weights: Vec<f64>) -> Result<Self> {
        if let Some((x, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w >= 0.0) || !w.is_finite())
        {
            return Err(Error::InvalidArgument(format!("weight {w} at state {x}")));
        }
        Ok(Distribution { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Distribution {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn point(n: usize, x: StateId) -> Self {
        let mut weights = vec![0.0; n];
        weights[x] = 1.0;
        Distribution { weights }
    }

    /// Uniform over the members of `set`.
    pub fn uniform_on(n: usize, set: &StateSet) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::InvalidArgument("empty support".into()));
        }
        let w = 1.0 / set.len() as f64;
        let mut weights = vec![0.0; n];
        for x in set.iter() {
            weights[x] = w;
        }
        Ok(Distribution { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, x: StateId) -> f64 {
        self.weights[x]
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn support(&self) -> StateSet {
        (0..self.len()).filter(|&x| self.weights[x] > 0.0).collect()
    }

    pub fn dot(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    pub fn mass_on(&self, set: &StateSet) -> f64 {
        set.iter().map(|x| self.weights[x]).sum()
    }
}

/// The row-stochastic matrix `P^π` of a stationary policy, stored by rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    rows: Vec<Vec<(StateId, f64)>>,
}

impl Chain {
    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, x: StateId) -> &[(StateId, f64)] {
        &self.rows[x]
    }

    pub fn get(&self, x: StateId, y: StateId) -> f64 {
        self.rows[x]
            .binary_search_by_key(&y, |e| e.0)
            .map(|k| self.rows[x][k].1)
            .unwrap_or(0.0)
    }

    /// `P f`
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(y, p)| p * f[y]).sum())
            .collect()
    }

    /// `μ P` for a row vector of state weights.
    pub fn push(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows.len()];
        for (x, r) in self.rows.iter().enumerate() {
            if mu[x] == 0.0 {
                continue;
            }
            for &(y, p) in r {
                out[y] += mu[x] * p;
            }
        }
        out
    }

    /// Largest mass leaving `set` from any of its members.
    pub fn leak(&self, set: &StateSet) -> Option<(StateId, f64)> {
        let mask = set.mask(self.n_states());
        set.iter()
            .map(|x| {
                let out: f64 = self.rows[x].iter().filter(|e| !mask[e.0]).map(|e| e.1).sum();
                (x, out)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// States reachable from `start` along positive entries.
    pub fn reachable_from(&self, start: &StateSet) -> StateSet {
        let mut seen = start.mask(self.n_states());
        let mut stack = start.to_vec();
        while let Some(x) = stack.pop() {
            for &(y, p) in &self.rows[x] {
                if p > 0.0 && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        (0..self.n_states()).filter(|&x| seen[x]).collect()
    }
}

/// `P^π[x,x'] = Σ_u π(u|x) Q(x'|x,u)`.
pub fn induced_chain(m: &Model, pi: &StationaryPolicy) -> Result<Chain> {
    pi.check_against(m)?;
    let rows = (0..m.n_states())
        .map(|x| {
            let mut acc: Vec<(StateId, f64)> = Vec::new();
            for &(u, w) in pi.row(x) {
                if w == 0.0 {
                    continue;
                }
                let c = m.choice(x, u).expect("checked policy support");
                for &(y, p) in &c.next {
                    acc.push((y, w * p));
                }
            }
            acc.sort_by_key(|e| e.0);
            let mut merged: Vec<(StateId, f64)> = Vec::with_capacity(acc.len());
            for (y, p) in acc {
                match merged.last_mut() {
                    Some(last) if last.0 == y => last.1 += p,
                    _ => merged.push((y, p)),
                }
            }
            merged
        })
        .collect();
    Ok(Chain { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{m5, random_model};
    use proptest::prelude::*;

    #[test]
    fn m5_is_valid() {
        assert!(validate_model(&m5()).is_valid());
    }

    #[test]
    fn short_row_is_reported() {
        let mut b = ModelBuilder::new(2, 1);
        b.row(0, 0, &[(0, 0.5), (1, 0.4)]).unwrap();
        b.row(1, 0, &[(1, 1.0)]).unwrap();
        let r = validate_model(&b.build_unchecked());
        assert_eq!(r.violations.len(), 1);
        match &r.violations[0] {
            Violation::RowSum { x, u, sum } => {
                assert_eq!((*x, *u), (0, 0));
                assert!((sum - 0.9).abs() < 1e-15);
            }
            v => panic!("unexpected {v:?}"),
        }
    }

    #[test]
    fn empty_feasible_set_is_reported() {
        let mut b = ModelBuilder::new(5, 1);
        for x in [0, 1, 2, 4] {
            b.row(x, 0, &[(x, 1.0)]).unwrap();
        }
        let r = validate_model(&b.build_unchecked());
        assert_eq!(r.violations, vec![Violation::EmptyFeasible { state: 3 }]);
    }

    #[test]
    fn bad_destination_and_negative_mass() {
        let mut b = ModelBuilder::new(1, 1);
        b.row(0, 0, &[(0, 1.5), (3, -0.5)]).unwrap();
        let r = validate_model(&b.build_unchecked());
        assert!(r.violations.contains(&Violation::BadDestination { x: 0, u: 0, to: 3 }));
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NegativeProbability { to: 3, .. })));
    }

    #[test]
    fn duplicate_destination_rejected() {
        let mut b = ModelBuilder::new(2, 1);
        b.feasible(0, 0).unwrap();
        b.transition(0, 0, 1, 0.5).unwrap();
        let err = b.transition(0, 0, 1, 0.5).unwrap_err();
        assert!(matches!(err, Error::DuplicateTransition { x: 0, u: 0, to: 1 }));
    }

    #[test]
    fn partial_reward_is_reported() {
        let mut b = ModelBuilder::new(1, 2);
        b.row(0, 0, &[(0, 1.0)]).unwrap();
        b.row(0, 1, &[(0, 1.0)]).unwrap();
        b.reward(0, 0, 1.0).unwrap();
        let r = validate_model(&b.build_unchecked());
        assert_eq!(r.violations, vec![Violation::MissingReward { x: 0, u: 1 }]);
    }

    #[test]
    fn m5_always_u1_row_three() {
        let m = m5();
        let pi = StationaryPolicy::deterministic(&m, |_| 0).unwrap();
        let p = induced_chain(&m, &pi).unwrap();
        assert_eq!(p.row(2), &[(3, 0.1), (4, 0.9)]);
        assert_eq!(p.row(0), &[(2, 1.0)]);
    }

    #[test]
    fn m5_half_mixture_at_three() {
        let m = m5();
        let mut rows: Vec<Vec<(ActionId, f64)>> = (0..5).map(|_| vec![(0, 1.0)]).collect();
        rows[2] = vec![(0, 0.5), (1, 0.5)];
        let pi = StationaryPolicy::new(rows);
        let p = induced_chain(&m, &pi).unwrap();
        let row = p.row(2);
        assert_eq!(row.len(), 3);
        assert_eq!(row[0], (1, 0.5));
        assert_eq!(row[1].0, 3);
        assert!((row[1].1 - 0.05).abs() < 1e-15);
        assert_eq!(row[2].0, 4);
        assert!((row[2].1 - 0.45).abs() < 1e-15);
    }

    #[test]
    fn policy_outside_feasible_set_is_rejected() {
        let mut b = ModelBuilder::new(1, 2);
        b.row(0, 0, &[(0, 1.0)]).unwrap();
        let m = b.build().unwrap();
        let pi = StationaryPolicy::new(vec![vec![(1, 1.0)]]);
        assert!(matches!(induced_chain(&m, &pi), Err(Error::PolicyMismatch(_))));
    }

    #[test]
    fn closed_kernel_keeps_mass_under_every_policy() {
        let m = m5();
        let a = StateSet::from([3]);
        assert!(m.is_closed_under_all(&a));
        for u in 0..2 {
            let pi = StationaryPolicy::deterministic(&m, |_| u).unwrap();
            let p = induced_chain(&m, &pi).unwrap();
            assert_eq!(p.leak(&a).unwrap().1, 0.0);
        }
        assert!(!m.is_closed_under_all(&StateSet::from([2])));
    }

    proptest! {
        #[test]
        fn induced_rows_are_stochastic(seed in 0u64..500) {
            let m = random_model(seed, 8, 3);
            let pi = StationaryPolicy::random(&m, seed ^ 0x55);
            let p = induced_chain(&m, &pi).unwrap();
            for x in 0..m.n_states() {
                let s: f64 = p.row(x).iter().map(|e| e.1).sum();
                prop_assert!((s - 1.0).abs() <= 1e-12);
            }
        }

        #[test]
        fn induced_chain_is_affine_in_policy(seed in 0u64..200) {
            let m = random_model(seed, 6, 3);
            let a = StationaryPolicy::random(&m, seed + 1);
            let b = StationaryPolicy::random(&m, seed + 2);
            let pa = induced_chain(&m, &a).unwrap();
            let pb = induced_chain(&m, &b).unwrap();
            for t in [0.0, 0.25, 0.5, 1.0] {
                let mix = a.mix(&b, t);
                let pm = induced_chain(&m, &mix).unwrap();
                for x in 0..m.n_states() {
                    for y in 0..m.n_states() {
                        let want = (1.0 - t) * pa.get(x, y) + t * pb.get(x, y);
                        prop_assert!((pm.get(x, y) - want).abs() <= 1e-12);
                    }
                }
            }
        }

        #[test]
        fn closed_kernel_property(seed in 0u64..300) {
            let m = random_model(seed, 7, 3);
            let set: StateSet = (0..7).filter(|x| (seed >> x) & 1 == 1).collect();
            if m.is_closed_under_all(&set) {
                let pi = StationaryPolicy::random(&m, seed);
                let p = induced_chain(&m, &pi).unwrap();
                if let Some((_, leak)) = p.leak(&set) {
                    prop_assert_eq!(leak, 0.0);
                }
            }
        }
    }
}
