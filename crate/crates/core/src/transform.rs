//! Kernel constructions: absorbing sets, and the two-layer model that
//! records whether the avoid set has been visited.
//!
//! Augmented states are encoded `(x, i) ↦ 2x + i`, with layer `i = 1`
//! meaning "B already visited".

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Choice, Distribution, Model, StateId, StateSet, StationaryPolicy, TwoPhasePolicy};

/// Replace the kernel row of every feasible action at each member of the
/// given sets by a self-loop. Sets must be pairwise disjoint.
pub fn make_absorbing(m: &Model, sets: &[&StateSet]) -> Result<Model> {
    for (k, a) in sets.iter().enumerate() {
        m.check_set(a)?;
        for b in &sets[k + 1..] {
            if let Some(x) = a.first_common(b) {
                return Err(Error::OverlappingSets(x));
            }
        }
    }
    let mut out = m.clone();
    let choices = out.choices_mut();
    for set in sets {
        for x in set.iter() {
            for c in &mut choices[x] {
                c.next = vec![(x, 1.0)];
            }
        }
    }
    Ok(out)
}

#[inline]
pub fn aug_index(x: StateId, layer: usize) -> StateId {
    2 * x + layer
}

#[inline]
pub fn aug_split(j: StateId) -> (StateId, usize) {
    (j / 2, j % 2)
}

/// The base model lifted to `𝕏 × {0,1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedModel {
    pub base: Model,
    pub avoid: StateSet,
    pub model: Model,
}

impl AugmentedModel {
    pub fn n_base(&self) -> usize {
        self.base.n_states()
    }

    /// `S × {0,1}`
    pub fn both_layers(&self, set: &StateSet) -> StateSet {
        set.iter().flat_map(|x| [aug_index(x, 0), aug_index(x, 1)]).collect()
    }

    /// `𝕏 × {1}`
    pub fn visited_layer(&self) -> StateSet {
        (0..self.n_base()).map(|x| aug_index(x, 1)).collect()
    }

    /// Sidecar `{"aug_index": {"<id>": {"x": s, "i": 0|1}}}` mapping
    /// augmented ids back to base states.
    pub fn index_sidecar(&self) -> AugIndexFile {
        AugIndexFile {
            aug_index: (0..self.model.n_states())
                .map(|j| {
                    let (x, i) = aug_split(j);
                    (j.to_string(), AugEntry { x, i })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AugEntry {
    pub x: StateId,
    pub i: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AugIndexFile {
    pub aug_index: BTreeMap<String, AugEntry>,
}

/// Two-layer kernel: from layer 0, landing in B switches to layer 1;
/// layer 1 never returns to layer 0.
pub fn augment(m: &Model, avoid: &StateSet) -> Result<AugmentedModel> {
    m.check_set(avoid)?;
    let n = m.n_states();
    let in_b = avoid.mask(n);
    let mut choices = Vec::with_capacity(2 * n);
    for x in 0..n {
        for layer in 0..2 {
            let row = m
                .choices(x)
                .iter()
                .map(|c| {
                    let mut next: Vec<(StateId, f64)> = c
                        .next
                        .iter()
                        .map(|&(y, p)| {
                            let to = if layer == 1 || in_b[y] { 1 } else { 0 };
                            (aug_index(y, to), p)
                        })
                        .collect();
                    next.sort_by_key(|e| e.0);
                    Choice {
                        action: c.action,
                        next,
                        reward: c.reward,
                    }
                })
                .collect();
            choices.push(row);
        }
    }
    let labels = (0..2 * n)
        .map(|j| {
            let (x, i) = aug_split(j);
            format!("({},{})", m.state_label(x), i)
        })
        .collect();
    let model = Model::from_parts(Some(labels), m.action_labels().to_vec(), choices);
    Ok(AugmentedModel {
        base: m.clone(),
        avoid: avoid.clone(),
        model,
    })
}

/// `ν̂(x,0) = ν(x)` off B, `ν̂(x,1) = ν(x)` on B, zero elsewhere.
pub fn lift_distribution(nu: &Distribution, avoid: &StateSet) -> Distribution {
    let mut w = vec![0.0; 2 * nu.len()];
    for x in 0..nu.len() {
        let layer = usize::from(avoid.contains(x));
        w[aug_index(x, layer)] = nu.get(x);
    }
    Distribution::weights(w).expect("lifted weights stay nonnegative")
}

/// A reward of the form `Σ_k c_k · 1_{S_k}` over states (independent of
/// the action).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorReward {
    pub terms: Vec<(f64, StateSet)>,
}

impl IndicatorReward {
    pub fn indicator(set: StateSet) -> Self {
        IndicatorReward {
            terms: vec![(1.0, set)],
        }
    }

    pub fn zero() -> Self {
        IndicatorReward { terms: Vec::new() }
    }

    pub fn value_at(&self, x: StateId) -> f64 {
        self.terms.iter().filter(|(_, s)| s.contains(x)).map(|(c, _)| c).sum()
    }

    pub fn per_state(&self, n: usize) -> Vec<f64> {
        (0..n).map(|x| self.value_at(x)).collect()
    }
}

/// `r(x,i) = 1_{A×{0,1}}(x,i) − λ·1_{𝕏×{1}}(x,i)`.
pub fn build_lagrangian_reward(aug: &AugmentedModel, target: &StateSet, lambda: f64) -> Result<IndicatorReward> {
    if let Some(x) = target.first_common(&aug.avoid) {
        return Err(Error::OverlappingSets(x));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda {lambda} must be >= 0")));
    }
    aug.base.check_set(target)?;
    let mut terms = vec![(1.0, aug.both_layers(target))];
    if lambda != 0.0 {
        terms.push((-lambda, aug.visited_layer()));
    }
    Ok(IndicatorReward { terms })
}

/// Restrict an augmented stationary policy to its two layers.
pub fn project_policy(aug_pi: &StationaryPolicy, avoid: &StateSet) -> TwoPhasePolicy {
    let n = aug_pi.n_states() / 2;
    let layer = |i: usize| StationaryPolicy::new((0..n).map(|x| aug_pi.row(aug_index(x, i)).to_vec()).collect());
    TwoPhasePolicy::new(layer(0), layer(1), avoid.clone())
}

/// The augmented stationary policy acting as `pre` on layer 0 and `post` on layer 1.
pub fn embed_policy(tp: &TwoPhasePolicy) -> StationaryPolicy {
    let n = tp.pre.n_states();
    StationaryPolicy::new(
        (0..2 * n)
            .map(|j| {
                let (x, i) = aug_split(j);
                tp.phase(i == 1).row(x).to_vec()
            })
            .collect(),
    )
}
