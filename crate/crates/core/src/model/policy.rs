use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ActionId, Model, StateId, StateSet};
use crate::error::{Error, Result};
use crate::PROB_TOL;

/// A randomized stationary policy: per state, a distribution over actions.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPolicy {
    rows: Vec<Vec<(ActionId, f64)>>,
}

impl StationaryPolicy {
    /// Rows are sorted by action and zero weights dropped; no validation
    /// against a model happens here.
    pub fn new(rows: Vec<Vec<(ActionId, f64)>>) -> Self {
        let rows = rows
            .into_iter()
            .map(|mut r| {
                r.retain(|e| e.1 != 0.0);
                r.sort_by_key(|e| e.0);
                r
            })
            .collect();
        StationaryPolicy { rows }
    }

    pub fn deterministic(m: &Model, mut choose: impl FnMut(StateId) -> ActionId) -> Result<Self> {
        let pi = StationaryPolicy::new((0..m.n_states()).map(|x| vec![(choose(x), 1.0)]).collect());
        pi.check_against(m)?;
        Ok(pi)
    }

    /// Uniform over the feasible actions of each state.
    pub fn uniform(m: &Model) -> Self {
        StationaryPolicy::new(
            (0..m.n_states())
                .map(|x| {
                    let k = m.choices(x).len() as f64;
                    m.feasible(x).map(|u| (u, 1.0 / k)).collect()
                })
                .collect(),
        )
    }

    /// Random full-support policy, reproducible from `seed`.
    pub fn random(m: &Model, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        StationaryPolicy::new(
            (0..m.n_states())
                .map(|x| {
                    let w: Vec<f64> = m.feasible(x).map(|_| rng.random::<f64>() + 0.05).collect();
                    let s: f64 = w.iter().sum();
                    m.feasible(x).zip(w).map(|(u, w)| (u, w / s)).collect()
                })
                .collect(),
        )
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, x: StateId) -> &[(ActionId, f64)] {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[Vec<(ActionId, f64)>] {
        &self.rows
    }

    pub fn prob(&self, x: StateId, u: ActionId) -> f64 {
        self.rows[x]
            .binary_search_by_key(&u, |e| e.0)
            .map(|k| self.rows[x][k].1)
            .unwrap_or(0.0)
    }

    /// `(1-t)·self + t·other`, row by row.
    pub fn mix(&self, other: &StationaryPolicy, t: f64) -> StationaryPolicy {
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| {
                let mut acts: Vec<ActionId> = a.iter().chain(b).map(|e| e.0).collect();
                acts.sort_unstable();
                acts.dedup();
                acts.into_iter()
                    .map(|u| {
                        let pa = a.iter().find(|e| e.0 == u).map_or(0.0, |e| e.1);
                        let pb = b.iter().find(|e| e.0 == u).map_or(0.0, |e| e.1);
                        (u, (1.0 - t) * pa + t * pb)
                    })
                    .collect()
            })
            .collect();
        StationaryPolicy::new(rows)
    }

    pub fn is_deterministic(&self) -> bool {
        self.rows.iter().all(|r| r.len() == 1)
    }

    /// Support within feasible actions, nonnegative rows summing to one.
    pub fn check_against(&self, m: &Model) -> Result<()> {
        if self.rows.len() != m.n_states() {
            return Err(Error::PolicyMismatch(format!(
                "policy has {} rows, model has {} states",
                self.rows.len(),
                m.n_states()
            )));
        }
        for (x, row) in self.rows.iter().enumerate() {
            let mut s = 0.0;
            for &(u, w) in row {
                if !m.is_feasible(x, u) {
                    return Err(Error::PolicyMismatch(format!(
                        "action {u} is not feasible at state {x}"
                    )));
                }
                if !(w >= 0.0) {
                    return Err(Error::PolicyMismatch(format!("weight {w} at ({x},{u})")));
                }
                s += w;
            }
            if row.is_empty() {
                return Err(Error::EmptyPolicyRow(x));
            }
            if (s - 1.0).abs() > PROB_TOL {
                return Err(Error::PolicyMismatch(format!("row {x} sums to {s}")));
            }
        }
        Ok(())
    }
}

/// A policy that only remembers whether the avoid set has been visited:
/// `pre` acts until the first visit to `avoid` (inclusive of the visiting
/// step), `post` afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhasePolicy {
    pub pre: StationaryPolicy,
    pub post: StationaryPolicy,
    pub avoid: StateSet,
}

impl TwoPhasePolicy {
    pub fn new(pre: StationaryPolicy, post: StationaryPolicy, avoid: StateSet) -> Self {
        TwoPhasePolicy { pre, post, avoid }
    }

    pub fn check_against(&self, m: &Model) -> Result<()> {
        self.pre.check_against(m)?;
        self.post.check_against(m)?;
        m.check_set(&self.avoid)
    }

    /// The stationary policy for the given phase (`false` before B).
    pub fn phase(&self, visited: bool) -> &StationaryPolicy {
        if visited {
            &self.post
        } else {
            &self.pre
        }
    }
}
