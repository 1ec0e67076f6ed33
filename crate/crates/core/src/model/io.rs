//! JSON encoding of models and policies.
//!
//! State and action references are either JSON numbers (dense 0-based ids)
//! or strings (labels). A model without explicit state labels uses the
//! decimal ids as labels, so `"3"` and `3` name the same state there.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ActionId, Model, ModelBuilder, StateId, StateSet, StationaryPolicy, TwoPhasePolicy};
use crate::error::{Error, Result};
use crate::fmt::to_json;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub(crate) enum Ref {
    Id(u64),
    Label(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum States {
    Count(u64),
    Labels(Vec<String>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelEntry {
    x: Ref,
    u: Ref,
    to: Ref,
    p: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RewardEntry {
    x: Ref,
    u: Ref,
    r: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    states: States,
    actions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feasible: Option<BTreeMap<String, Vec<Ref>>>,
    kernel: Vec<KernelEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reward: Option<Vec<RewardEntry>>,
}

fn parse_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.into(),
        message: message.into(),
    }
}

/// Resolves labels and ids against one namespace.
pub(crate) struct Names<'a> {
    labels: Option<&'a [String]>,
    n: usize,
}

impl<'a> Names<'a> {
    pub(crate) fn states(m: &'a Model) -> Self {
        Names {
            labels: m.state_labels(),
            n: m.n_states(),
        }
    }

    pub(crate) fn actions(m: &'a Model) -> Self {
        Names {
            labels: Some(m.action_labels()),
            n: m.n_actions(),
        }
    }

    /// Label match first, then a decimal id.
    pub(crate) fn lookup(&self, s: &str) -> Option<usize> {
        if let Some(l) = self.labels {
            if let Some(k) = l.iter().position(|x| x == s) {
                return Some(k);
            }
        }
        s.trim().parse::<usize>().ok().filter(|&k| k < self.n)
    }

    fn resolve(&self, r: &Ref) -> Option<usize> {
        match r {
            Ref::Id(k) => Some(*k as usize).filter(|&k| k < self.n),
            Ref::Label(s) => match self.labels {
                Some(l) => l.iter().position(|x| x == s),
                None => s.parse::<usize>().ok().filter(|&k| k < self.n),
            },
        }
    }
}

impl Model {
    /// State named by `s`: a label match first, then a decimal id.
    pub fn find_state(&self, s: &str) -> Option<StateId> {
        Names::states(self).lookup(s)
    }

    /// Action named by `s`: a label match first, then a decimal id.
    pub fn find_action(&self, s: &str) -> Option<ActionId> {
        Names::actions(self).lookup(s)
    }
}

fn ref_str(r: &Ref) -> String {
    match r {
        Ref::Id(k) => k.to_string(),
        Ref::Label(s) => s.clone(),
    }
}

/// Parse and validate a model from its JSON text.
pub fn load_model(text: &str) -> Result<Model> {
    let file: ModelFile = serde_json::from_str(text)
        .map_err(|e| parse_err(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    let (n, labels) = match file.states {
        States::Count(n) => (n as usize, None),
        States::Labels(l) => (l.len(), Some(l)),
    };
    if n == 0 {
        return Err(Error::NoStates);
    }
    if file.actions.is_empty() {
        return Err(parse_err("actions", "no actions"));
    }
    let mut b = ModelBuilder::new(n, file.actions.len()).action_labels(file.actions.clone());
    if let Some(l) = labels.clone() {
        b = b.state_labels(l);
    }
    let snames = Names {
        labels: labels.as_deref(),
        n,
    };
    let anames = Names {
        labels: Some(&file.actions),
        n: file.actions.len(),
    };
    let state = |r: &Ref, path: String| {
        snames
            .resolve(r)
            .ok_or_else(|| parse_err(path, format!("unknown state {}", ref_str(r))))
    };
    let action = |r: &Ref, path: String| {
        anames
            .resolve(r)
            .ok_or_else(|| parse_err(path, format!("unknown action {}", ref_str(r))))
    };

    match &file.feasible {
        Some(map) => {
            for (key, acts) in map {
                let x = state(&Ref::Label(key.clone()), format!("feasible.{key}"))?;
                for (k, a) in acts.iter().enumerate() {
                    let u = action(a, format!("feasible.{key}[{k}]"))?;
                    b.feasible(x, u)?;
                }
            }
        }
        None => {
            for (k, e) in file.kernel.iter().enumerate() {
                let x = state(&e.x, format!("kernel[{k}].x"))?;
                let u = action(&e.u, format!("kernel[{k}].u"))?;
                b.feasible(x, u)?;
            }
        }
    }
    for (k, e) in file.kernel.iter().enumerate() {
        let x = state(&e.x, format!("kernel[{k}].x"))?;
        let u = action(&e.u, format!("kernel[{k}].u"))?;
        let to = state(&e.to, format!("kernel[{k}].to"))?;
        b.transition(x, u, to, e.p).map_err(|err| match err {
            Error::InfeasiblePair { .. } | Error::DuplicateTransition { .. } => {
                parse_err(format!("kernel[{k}]"), err.to_string())
            }
            other => other,
        })?;
    }
    if let Some(rs) = &file.reward {
        for (k, e) in rs.iter().enumerate() {
            let x = state(&e.x, format!("reward[{k}].x"))?;
            let u = action(&e.u, format!("reward[{k}].u"))?;
            b.reward(x, u, e.r)
                .map_err(|err| parse_err(format!("reward[{k}]"), err.to_string()))?;
        }
    }
    b.build()
}

fn model_file(m: &Model) -> ModelFile {
    let sref = |x: StateId| Ref::Label(m.state_label(x));
    let aref = |u: ActionId| Ref::Label(m.action_labels()[u].clone());
    let states = match m.state_labels() {
        Some(l) => States::Labels(l.to_vec()),
        None => States::Count(m.n_states() as u64),
    };
    let mut feasible = BTreeMap::new();
    let mut kernel = Vec::new();
    let mut reward = Vec::new();
    for x in 0..m.n_states() {
        feasible.insert(m.state_label(x), m.feasible(x).map(aref).collect());
        for c in m.choices(x) {
            for &(y, p) in &c.next {
                kernel.push(KernelEntry {
                    x: sref(x),
                    u: aref(c.action),
                    to: sref(y),
                    p,
                });
            }
            if let Some(r) = c.reward {
                reward.push(RewardEntry {
                    x: sref(x),
                    u: aref(c.action),
                    r,
                });
            }
        }
    }
    ModelFile {
        states,
        actions: m.action_labels().to_vec(),
        feasible: Some(feasible),
        kernel,
        reward: (!reward.is_empty()).then_some(reward),
    }
}

pub fn save_model(m: &Model) -> String {
    to_json(&model_file(m)).expect("model serializes")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum PolicyRows {
    Two([BTreeMap<String, BTreeMap<String, f64>>; 2]),
    One(BTreeMap<String, BTreeMap<String, f64>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct PolicyJson {
    mode: String,
    #[serde(default)]
    avoid: Vec<Ref>,
    rows: PolicyRows,
}

/// A policy read from a file: stationary or two-phase.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyFile {
    Stationary(StationaryPolicy),
    TwoPhase(TwoPhasePolicy),
}

fn rows_json(m: &Model, pi: &StationaryPolicy) -> BTreeMap<String, BTreeMap<String, f64>> {
    (0..pi.n_states())
        .map(|x| {
            let row = pi
                .row(x)
                .iter()
                .map(|&(u, w)| (m.action_labels()[u].clone(), w))
                .collect();
            (m.state_label(x), row)
        })
        .collect()
}

/// Serializable form of a policy, for embedding in larger documents.
pub(crate) fn policy_doc(m: &Model, policy: &PolicyFile) -> PolicyJson {
    match policy {
        PolicyFile::Stationary(pi) => PolicyJson {
            mode: "stationary".into(),
            avoid: Vec::new(),
            rows: PolicyRows::One(rows_json(m, pi)),
        },
        PolicyFile::TwoPhase(tp) => PolicyJson {
            mode: "two-phase".into(),
            avoid: tp.avoid.iter().map(|x| Ref::Label(m.state_label(x))).collect(),
            rows: PolicyRows::Two([rows_json(m, &tp.pre), rows_json(m, &tp.post)]),
        },
    }
}

pub fn policy_to_json(m: &Model, policy: &PolicyFile) -> String {
    to_json(&policy_doc(m, policy)).expect("policy serializes")
}

fn rows_from(m: &Model, rows: &BTreeMap<String, BTreeMap<String, f64>>, path: &str) -> Result<StationaryPolicy> {
    let s = Names::states(m);
    let a = Names::actions(m);
    let mut out: Vec<Vec<(ActionId, f64)>> = vec![Vec::new(); m.n_states()];
    for (key, row) in rows {
        let x = s
            .lookup(key)
            .ok_or_else(|| parse_err(format!("{path}.{key}"), "unknown state"))?;
        for (ak, w) in row {
            let u = a
                .lookup(ak)
                .ok_or_else(|| parse_err(format!("{path}.{key}.{ak}"), "unknown action"))?;
            out[x].push((u, *w));
        }
    }
    let pi = StationaryPolicy::new(out);
    pi.check_against(m)?;
    Ok(pi)
}

pub fn policy_from_json(m: &Model, text: &str) -> Result<PolicyFile> {
    let doc: PolicyJson = serde_json::from_str(text)
        .map_err(|e| parse_err(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    let s = Names::states(m);
    match (doc.mode.as_str(), &doc.rows) {
        ("stationary", PolicyRows::One(r)) => Ok(PolicyFile::Stationary(rows_from(m, r, "rows")?)),
        ("two-phase", PolicyRows::Two([pre, post])) => {
            let avoid = doc
                .avoid
                .iter()
                .enumerate()
                .map(|(k, r)| {
                    s.resolve(r)
                        .ok_or_else(|| parse_err(format!("avoid[{k}]"), "unknown state"))
                })
                .collect::<Result<StateSet>>()?;
            Ok(PolicyFile::TwoPhase(TwoPhasePolicy::new(
                rows_from(m, pre, "rows[0]")?,
                rows_from(m, post, "rows[1]")?,
                avoid,
            )))
        }
        (mode, _) => Err(parse_err(
            "mode",
            format!("mode {mode:?} does not match the rows layout"),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{m5, random_model};
    use proptest::prelude::*;

    const M5_JSON: &str = r#"{
      "states": ["1","2","3","4","5"],
      "actions": ["u1","u2"],
      "feasible": {"1":["u1","u2"],"2":["u1","u2"],"3":["u1","u2"],"4":["u1","u2"],"5":["u1","u2"]},
      "kernel": [
        {"x":"1","u":"u1","to":"3","p":1.0}, {"x":"2","u":"u1","to":"2","p":1.0},
        {"x":"3","u":"u1","to":"4","p":0.1}, {"x":"3","u":"u1","to":"5","p":0.9},
        {"x":"4","u":"u1","to":"4","p":1.0}, {"x":"5","u":"u1","to":"5","p":1.0},
        {"x":"1","u":"u2","to":"3","p":1.0}, {"x":"2","u":"u2","to":"4","p":1.0},
        {"x":"3","u":"u2","to":"2","p":1.0}, {"x":"4","u":"u2","to":"4","p":1.0},
        {"x":"5","u":"u2","to":"5","p":1.0}
      ]
    }"#;

    #[test]
    fn loads_m5() {
        let m = load_model(M5_JSON).unwrap();
        assert_eq!(m, m5());
        assert_eq!(m.prob(0, 0, 2), 1.0);
        assert_eq!(m.prob(2, 0, 3), 0.1);
        assert_eq!(m.prob(2, 0, 4), 0.9);
    }

    #[test]
    fn empty_state_list() {
        let err = load_model(r#"{"states": [], "actions": ["a"], "kernel": []}"#).unwrap_err();
        assert!(matches!(err, Error::NoStates));
        assert_eq!(err.to_string(), "no states");
    }

    #[test]
    fn duplicate_triple_is_named() {
        let text = r#"{"states": 2, "actions": ["a"],
            "kernel": [{"x":0,"u":0,"to":1,"p":0.5},{"x":0,"u":0,"to":1,"p":0.5},
                       {"x":1,"u":0,"to":1,"p":1}]}"#;
        let err = load_model(text).unwrap_err().to_string();
        assert!(err.contains("kernel[1]"), "{err}");
        assert!(err.contains("x=0, u=0, to=1"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_a_position() {
        let err = load_model("{\"states\": 2,\n \"actions\": [}").unwrap_err();
        assert!(matches!(err, Error::Parse { ref path, .. } if path.starts_with("line 2")));
    }

    #[test]
    fn invalid_model_aggregates_report() {
        let text = r#"{"states": 2, "actions": ["a"],
            "kernel": [{"x":0,"u":0,"to":1,"p":0.9},{"x":1,"u":0,"to":1,"p":1}]}"#;
        match load_model(text) {
            Err(Error::Invalid(r)) => assert_eq!(r.violations.len(), 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_phase_policy_round_trip() {
        let m = m5();
        let pre = StationaryPolicy::random(&m, 3);
        let post = StationaryPolicy::deterministic(&m, |_| 1).unwrap();
        let tp = PolicyFile::TwoPhase(TwoPhasePolicy::new(pre, post, StateSet::from([0, 1])));
        let back = policy_from_json(&m, &policy_to_json(&m, &tp)).unwrap();
        assert_eq!(back, tp);
    }

    proptest! {
        #[test]
        fn save_load_round_trip(seed in 0u64..300, n in 1usize..9) {
            let m = random_model(seed, n, 3);
            let back = load_model(&save_model(&m)).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
