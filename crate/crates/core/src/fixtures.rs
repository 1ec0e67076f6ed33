//! Reference models shared by tests, benchmarks and the CLI oracle.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Model, ModelBuilder, StateId, StateSet};

/// The five-state, two-action counterexample model where history-dependent
/// policies beat Markov ones under a hitting constraint.
///
/// Ids `0..5` carry labels `"1".."5"`; actions `u1`, `u2`.
///
/// | state | u1              | u2   |
/// |-------|-----------------|------|
/// | 1     | 3               | 3    |
/// | 2     | 2               | 4    |
/// | 3     | 4: 0.1, 5: 0.9  | 2    |
/// | 4     | 4               | 4    |
/// | 5     | 5               | 5    |
pub fn m5() -> Model {
    let mut b = ModelBuilder::new(5, 2).state_labels((1..=5).map(|k| k.to_string()).collect());
    let rows: [[&[(StateId, f64)]; 2]; 5] = [
        [&[(2, 1.0)], &[(2, 1.0)]],
        [&[(1, 1.0)], &[(3, 1.0)]],
        [&[(3, 0.1), (4, 0.9)], &[(1, 1.0)]],
        [&[(3, 1.0)], &[(3, 1.0)]],
        [&[(4, 1.0)], &[(4, 1.0)]],
    ];
    for (x, acts) in rows.iter().enumerate() {
        for (u, next) in acts.iter().enumerate() {
            b.row(x, u, next).expect("static model");
        }
    }
    b.build().expect("m5 is valid")
}

/// A random sparse model: every state gets between one and `max_actions`
/// feasible actions, each with a kernel row supported on at most three
/// states. Roughly one state in six is absorbing.
pub fn random_model(seed: u64, n: usize, max_actions: usize) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = ModelBuilder::new(n, max_actions);
    let actions: Vec<usize> = (0..max_actions).collect();
    for x in 0..n {
        let k = rng.random_range(1..=max_actions);
        let mut acts = actions.clone();
        acts.shuffle(&mut rng);
        let absorbing = rng.random_bool(1.0 / 6.0);
        for &u in &acts[..k] {
            if absorbing {
                b.row(x, u, &[(x, 1.0)]).expect("fresh pair");
                continue;
            }
            let support = rng.random_range(1..=3.min(n));
            let mut dest: Vec<StateId> = (0..n).collect();
            dest.shuffle(&mut rng);
            let w: Vec<f64> = (0..support).map(|_| rng.random::<f64>() + 0.1).collect();
            let s: f64 = w.iter().sum();
            let mut row: Vec<(StateId, f64)> = dest[..support].iter().zip(&w).map(|(&y, &w)| (y, w / s)).collect();
            // push rounding residue into the largest weight so rows sum to 1
            let total: f64 = row.iter().map(|e| e.1).sum();
            let big = (0..row.len())
                .max_by(|&a, &b| row[a].1.total_cmp(&row[b].1))
                .expect("nonempty row");
            row[big].1 += 1.0 - total;
            row.sort_by_key(|e| e.0);
            b.row(x, u, &row).expect("fresh pair");
        }
    }
    b.build().expect("random model is valid")
}

/// Two disjoint random subsets of `0..n`, each nonempty when `n >= 2`.
pub fn random_disjoint_sets(seed: u64, n: usize) -> (StateSet, StateSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut ids: Vec<StateId> = (0..n).collect();
    ids.shuffle(&mut rng);
    let ka = rng.random_range(1..=(n / 3).max(1));
    let kb = if n >= 2 {
        rng.random_range(1..=((n - ka) / 3).max(1))
    } else {
        0
    };
    let a = ids[..ka].iter().copied().collect();
    let b = ids[ka..ka + kb].iter().copied().collect();
    (a, b)
}
