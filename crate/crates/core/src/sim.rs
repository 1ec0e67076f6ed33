//! Seeded Monte Carlo rollouts under stationary and two-phase policies.
//!
//! Trajectory `i` of a run with seed `s` draws from ChaCha8 seeded with `s`
//! on stream `i`, so estimates do not depend on scheduling or thread count.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ActionId, Distribution, Model, PolicyFile, StateId, StateSet};

/// Why a trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum End {
    /// Entered the stop set.
    Stopped,
    /// Reached a state every action of the current policy row keeps fixed.
    Trapped,
    /// Ran out of horizon.
    Truncated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `X_0 .. X_T`.
    pub states: Vec<StateId>,
    /// `U_0 .. U_{T-1}`.
    pub actions: Vec<ActionId>,
    /// Policy phase in force at each visited state (1 once the avoid set has been visited).
    pub modes: Vec<u8>,
    pub mode_switch: Option<usize>,
    pub end: End,
}

impl Trajectory {
    pub fn start(&self) -> StateId {
        self.states[0]
    }

    pub fn first_hit(&self, set: &StateSet) -> Option<usize> {
        self.states.iter().position(|&x| set.contains(x))
    }
}

fn draw<T: Copy>(rng: &mut ChaCha8Rng, items: &[(T, f64)]) -> Option<T> {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(k, w) in items {
        acc += w;
        if u < acc {
            return Some(k);
        }
    }
    // rounding: fall back to the last positive entry
    items.iter().rev().find(|e| e.1 > 0.0).map(|e| e.0)
}

/// Rollout from `x0` for at most `horizon` steps, stopping on entry into
/// `stop`. A two-phase policy switches to its post phase from the first
/// time index whose state lies in its avoid set, the start included.
pub fn sample_trajectory(
    m: &Model,
    policy: &PolicyFile,
    x0: StateId,
    horizon: usize,
    stop: &StateSet,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory> {
    m.check_state(x0)?;
    let (pre, post, avoid) = match policy {
        PolicyFile::Stationary(pi) => (pi, pi, None),
        PolicyFile::TwoPhase(tp) => (&tp.pre, &tp.post, Some(&tp.avoid)),
    };
    let mut t = Trajectory {
        states: vec![x0],
        actions: Vec::new(),
        modes: Vec::new(),
        mode_switch: None,
        end: End::Truncated,
    };
    let mut x = x0;
    let mut visited = false;
    loop {
        if !visited && avoid.is_some_and(|b| b.contains(x)) {
            visited = true;
            t.mode_switch = Some(t.states.len() - 1);
        }
        t.modes.push(u8::from(visited));
        if stop.contains(x) {
            t.end = End::Stopped;
            break;
        }
        let row = if visited { post.row(x) } else { pre.row(x) };
        if row.is_empty() {
            return Err(Error::EmptyPolicyRow(x));
        }
        let trapped = row
            .iter()
            .all(|&(u, w)| w == 0.0 || m.choice(x, u).is_some_and(|c| c.next.len() == 1 && c.next[0].0 == x));
        if trapped {
            t.end = End::Trapped;
            break;
        }
        if t.actions.len() == horizon {
            break;
        }
        let u = draw(rng, row).ok_or(Error::EmptyPolicyRow(x))?;
        let c = m
            .choice(x, u)
            .ok_or_else(|| Error::PolicyMismatch(format!("action {u} is not feasible at state {x}")))?;
        x = draw(rng, &c.next).expect("kernel rows are nonempty");
        t.actions.push(u);
        t.states.push(x);
    }
    Ok(t)
}

/// Random stream for trajectory `index` of a run seeded with `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingEstimate {
    pub p_hat_a: f64,
    pub p_hat_b: f64,
    pub half_width_95_a: f64,
    pub half_width_95_b: f64,
    pub n: u64,
    pub truncated_fraction: f64,
    pub horizon: usize,
    pub seed: u64,
}

impl HittingEstimate {
    pub fn std_error_a(&self) -> f64 {
        (self.p_hat_a * (1.0 - self.p_hat_a) / self.n as f64).sqrt()
    }

    pub fn std_error_b(&self) -> f64 {
        (self.p_hat_b * (1.0 - self.p_hat_b) / self.n as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    a: u64,
    b: u64,
    truncated: u64,
}

impl std::ops::Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts {
            a: self.a + o.a,
            b: self.b + o.b,
            truncated: self.truncated + o.truncated,
        }
    }
}

/// Parameters of [`estimate_hitting`].
#[derive(Debug, Clone)]
pub struct HittingSpec<'a> {
    pub target: &'a StateSet,
    pub avoid: &'a StateSet,
    pub n: u64,
    pub horizon: usize,
    pub seed: u64,
    pub parallel: bool,
}

/// Fractions of `n` rollouts (starts drawn from `nu`) that hit `target`
/// within the horizon, and that visit `avoid` before absorbing in
/// `target`. Rollouts stop on entering `target`.
pub fn estimate_hitting(
    m: &Model,
    policy: &PolicyFile,
    nu: &Distribution,
    spec: &HittingSpec,
) -> Result<HittingEstimate> {
    if spec.n == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    if nu.len() != m.n_states() {
        return Err(Error::InvalidArgument(
            "distribution length differs from the state count".into(),
        ));
    }
    match policy {
        PolicyFile::Stationary(pi) => pi.check_against(m)?,
        PolicyFile::TwoPhase(tp) => tp.check_against(m)?,
    }
    let starts = start_weights(nu);
    let one = |i: u64| -> Result<Counts> {
        let t = rollout(m, policy, &starts, spec, i)?;
        let ta = t.first_hit(spec.target);
        let tb = t.first_hit(spec.avoid);
        let b_first = match (tb, ta) {
            (Some(b), Some(a)) => b < a,
            (Some(_), None) => true,
            _ => false,
        };
        Ok(Counts {
            a: u64::from(ta.is_some()),
            b: u64::from(b_first),
            truncated: u64::from(t.end == End::Truncated),
        })
    };
    let counts = if spec.parallel {
        (0..spec.n)
            .into_par_iter()
            .map(one)
            .try_reduce(Counts::default, |a, b| Ok(a + b))?
    } else {
        (0..spec.n)
            .map(one)
            .try_fold(Counts::default(), |acc, c| c.map(|c| acc + c))?
    };
    let n = spec.n as f64;
    let pa = counts.a as f64 / n;
    let pb = counts.b as f64 / n;
    let hw = |p: f64| 1.96 * (p * (1.0 - p) / n).sqrt();
    Ok(HittingEstimate {
        p_hat_a: pa,
        p_hat_b: pb,
        half_width_95_a: hw(pa),
        half_width_95_b: hw(pb),
        n: spec.n,
        truncated_fraction: counts.truncated as f64 / n,
        horizon: spec.horizon,
        seed: spec.seed,
    })
}

fn start_weights(nu: &Distribution) -> Vec<(StateId, f64)> {
    nu.as_slice()
        .iter()
        .copied()
        .enumerate()
        .filter(|e| e.1 > 0.0)
        .collect()
}

fn rollout(
    m: &Model,
    policy: &PolicyFile,
    starts: &[(StateId, f64)],
    spec: &HittingSpec,
    i: u64,
) -> Result<Trajectory> {
    let mut rng = trajectory_rng(spec.seed, i);
    let x0 = draw(&mut rng, starts).ok_or_else(|| Error::InvalidArgument("empty start distribution".into()))?;
    sample_trajectory(m, policy, x0, spec.horizon, spec.target, &mut rng)
}

/// The first `k` rollouts of the run [`estimate_hitting`] performs with the
/// same arguments, trajectory for trajectory.
pub fn sample_rollouts(
    m: &Model,
    policy: &PolicyFile,
    nu: &Distribution,
    spec: &HittingSpec,
    k: u64,
) -> Result<Vec<Trajectory>> {
    if nu.len() != m.n_states() {
        return Err(Error::InvalidArgument(
            "distribution length differs from the state count".into(),
        ));
    }
    let starts = start_weights(nu);
    (0..k).map(|i| rollout(m, policy, &starts, spec, i)).collect()
}

/// `traj_id,t,state,action,mode` rows; the final state has an empty action.
pub fn trajectories_csv(m: &Model, trajs: &[Trajectory]) -> String {
    let mut out = String::from("traj_id,t,state,action,mode\n");
    for (i, tr) in trajs.iter().enumerate() {
        for (t, &x) in tr.states.iter().enumerate() {
            let action = tr
                .actions
                .get(t)
                .map_or(String::new(), |&u| m.action_labels()[u].clone());
            writeln!(out, "{i},{t},{},{action},{}", m.state_label(x), tr.modes[t]).expect("string write");
        }
    }
    out
}
