//! Wind-grid navigation models.
//!
//! Cell `(r, c)` is state `r·cols + c`, with row 0 at the top. Three
//! controls move up-left, up and up-right. With probability `1 − w` the
//! nominal move happens; with probability `w` a north-west wind displaces
//! the outcome one cell south-east of the nominal cell. Cells are clamped
//! at the grid border, and mass that would leave the grid is folded onto
//! the clamped cell.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::sig17;
use crate::model::{Model, ModelBuilder, StateId, StateSet};

pub type Cell = (usize, usize);

pub const ACTIONS: [&str; 3] = ["up-left", "up", "up-right"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub wind_strength: f64,
    pub target_cells: Vec<Cell>,
    pub obstacle_cells: Vec<Cell>,
    /// Top row absorbing.
    pub absorbing_top: bool,
    /// Target cells absorbing, so the target set is closed.
    pub close_targets: bool,
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize, wind_strength: f64) -> Self {
        GridSpec {
            rows,
            cols,
            wind_strength,
            target_cells: Vec::new(),
            obstacle_cells: Vec::new(),
            absorbing_top: true,
            close_targets: false,
        }
    }

    /// 30×30, closed 4×4 target in the middle.
    pub fn domain_preset() -> Self {
        let mut s = GridSpec::new(30, 30, 0.2);
        s.target_cells = rect(13, 16, 13, 16);
        s.close_targets = true;
        s
    }

    /// 40×20, target on the top edge, four obstacle bars.
    pub fn reach_avoid_preset() -> Self {
        let mut s = GridSpec::new(40, 20, 0.2);
        s.target_cells = rect(0, 0, 6, 13);
        for (r0, r1, c0, c1) in [(8, 9, 3, 9), (16, 17, 10, 16), (24, 25, 2, 7), (31, 32, 11, 17)] {
            s.obstacle_cells.extend(rect(r0, r1, c0, c1));
        }
        s
    }

    /// 40×10, target on the top edge, three obstacle bars.
    pub fn constrained_preset() -> Self {
        let mut s = GridSpec::new(40, 10, 0.2);
        s.target_cells = rect(0, 0, 2, 7);
        for (r0, r1, c0, c1) in [(10, 11, 0, 4), (19, 20, 5, 9), (28, 29, 2, 6)] {
            s.obstacle_cells.extend(rect(r0, r1, c0, c1));
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidArgument("grid needs at least one row and column".into()));
        }
        if !(0.0..=1.0).contains(&self.wind_strength) {
            return Err(Error::InvalidArgument(format!(
                "wind strength {} is outside [0, 1]",
                self.wind_strength
            )));
        }
        for &(r, c) in self.target_cells.iter().chain(&self.obstacle_cells) {
            if r >= self.rows || c >= self.cols {
                return Err(Error::InvalidArgument(format!("cell ({r},{c}) is outside the grid")));
            }
        }
        if let Some(x) = self.target().first_common(&self.obstacles()) {
            return Err(Error::OverlappingSets(x));
        }
        Ok(())
    }

    pub fn map(&self) -> GridMap {
        GridMap {
            rows: self.rows,
            cols: self.cols,
        }
    }

    pub fn target(&self) -> StateSet {
        self.map().states(&self.target_cells)
    }

    pub fn obstacles(&self) -> StateSet {
        self.map().states(&self.obstacle_cells)
    }
}

/// Inclusive rectangle `r0..=r1 × c0..=c1`.
pub fn rect(r0: usize, r1: usize, c0: usize, c1: usize) -> Vec<Cell> {
    (r0..=r1).flat_map(|r| (c0..=c1).map(move |c| (r, c))).collect()
}

/// Parse `r0:r1,c0:c1` (inclusive bounds; a bare `r` means `r:r`).
pub fn parse_rect(s: &str) -> Result<Vec<Cell>> {
    let bad = || Error::InvalidArgument(format!("bad rectangle {s:?}, expected r0:r1,c0:c1"));
    let range = |t: &str| -> Result<(usize, usize)> {
        let (a, b) = t.split_once(':').unwrap_or((t, t));
        let a = a.trim().parse().map_err(|_| bad())?;
        let b = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        Ok((a, b))
    };
    let (rs, cs) = s.split_once(',').ok_or_else(bad)?;
    let (r0, r1) = range(rs)?;
    let (c0, c1) = range(cs)?;
    Ok(rect(r0, r1, c0, c1))
}

/// Cell ↔ state bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridMap {
    pub rows: usize,
    pub cols: usize,
}

impl GridMap {
    pub fn n_states(&self) -> usize {
        self.rows * self.cols
    }

    pub fn state(&self, (r, c): Cell) -> StateId {
        r * self.cols + c
    }

    pub fn cell(&self, x: StateId) -> Cell {
        (x / self.cols, x % self.cols)
    }

    pub fn states(&self, cells: &[Cell]) -> StateSet {
        cells.iter().map(|&c| self.state(c)).collect()
    }

    /// `{"rows":R,"cols":C,"cell":{"<state>":[r,c]}}`
    pub fn sidecar_json(&self) -> String {
        #[derive(Serialize)]
        struct Sidecar {
            rows: usize,
            cols: usize,
            cell: BTreeMap<String, [usize; 2]>,
        }
        let cell = (0..self.n_states())
            .map(|x| {
                let (r, c) = self.cell(x);
                (x.to_string(), [r, c])
            })
            .collect();
        crate::fmt::to_json(&Sidecar {
            rows: self.rows,
            cols: self.cols,
            cell,
        })
        .expect("plain data serializes")
    }

    pub fn from_sidecar_json(text: &str) -> Result<GridMap> {
        #[derive(Deserialize)]
        struct Head {
            rows: usize,
            cols: usize,
        }
        let h: Head = serde_json::from_str(text)?;
        Ok(GridMap {
            rows: h.rows,
            cols: h.cols,
        })
    }

    /// `row,col,value` CSV.
    pub fn values_csv(&self, values: &[f64]) -> String {
        let mut out = String::from("row,col,value\n");
        for (x, v) in values.iter().enumerate() {
            let (r, c) = self.cell(x);
            writeln!(out, "{r},{c},{}", sig17(*v)).expect("string write");
        }
        out
    }
}

pub fn build_grid(spec: &GridSpec) -> Result<(Model, GridMap)> {
    spec.validate()?;
    let map = spec.map();
    let (rows, cols, w) = (spec.rows, spec.cols, spec.wind_strength);
    let target = spec.target();
    let mut b = ModelBuilder::new(map.n_states(), 3).action_labels(ACTIONS.iter().map(|s| s.to_string()).collect());
    for r in 0..rows {
        for c in 0..cols {
            let x = map.state((r, c));
            let absorbing = (spec.absorbing_top && r == 0) || (spec.close_targets && target.contains(x));
            for (u, dc) in [-1isize, 0, 1].into_iter().enumerate() {
                if absorbing {
                    b.row(x, u, &[(x, 1.0)])?;
                    continue;
                }
                let (nr, nc) = (
                    r.saturating_sub(1),
                    (c as isize + dc).clamp(0, cols as isize - 1) as usize,
                );
                let nominal = map.state((nr, nc));
                let pushed = map.state(((nr + 1).min(rows - 1), (nc + 1).min(cols - 1)));
                let mut next: Vec<(StateId, f64)> = Vec::with_capacity(2);
                for (y, p) in [(nominal, 1.0 - w), (pushed, w)] {
                    if p == 0.0 {
                        continue;
                    }
                    match next.iter_mut().find(|e| e.0 == y) {
                        Some(e) => e.1 += p,
                        None => next.push((y, p)),
                    }
                }
                next.sort_by_key(|e| e.0);
                b.row(x, u, &next)?;
            }
        }
    }
    Ok((b.build()?, map))
}

/// States with a path to `target` in the union graph of all actions,
/// ignoring probabilities. Members of `target` are included.
pub fn graph_reachable(m: &Model, target: &StateSet) -> StateSet {
    m.backward_reachable(target)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windless_moves_are_nominal() {
        let (m, map) = build_grid(&GridSpec::new(3, 3, 0.0)).unwrap();
        let x = map.state((2, 1));
        assert_eq!(m.choice(x, 0).unwrap().next, vec![(map.state((1, 0)), 1.0)]);
        assert_eq!(m.choice(x, 1).unwrap().next, vec![(map.state((1, 1)), 1.0)]);
        assert_eq!(m.choice(x, 2).unwrap().next, vec![(map.state((1, 2)), 1.0)]);
        // clamped at the left edge
        assert_eq!(
            m.choice(map.state((1, 0)), 0).unwrap().next,
            vec![(map.state((0, 0)), 1.0)]
        );
        // top row absorbing
        assert_eq!(
            m.choice(map.state((0, 2)), 1).unwrap().next,
            vec![(map.state((0, 2)), 1.0)]
        );
    }

    #[test]
    fn wind_displaces_the_outcome_south_east() {
        let (m, map) = build_grid(&GridSpec::new(4, 4, 0.25)).unwrap();
        let x = map.state((2, 1));
        assert_eq!(
            m.choice(x, 1).unwrap().next,
            vec![(map.state((1, 1)), 0.75), (map.state((2, 2)), 0.25)]
        );
        // up-left under wind lands back on the start cell
        assert_eq!(m.choice(x, 0).unwrap().next, vec![(map.state((1, 0)), 0.75), (x, 0.25)]);
        // right border: the displaced cell folds onto the nominal one
        let y = map.state((3, 3));
        assert_eq!(m.choice(y, 2).unwrap().next, vec![(map.state((2, 3)), 0.75), (y, 0.25)]);
        let z = map.state((2, 3));
        assert_eq!(m.choice(z, 1).unwrap().next, vec![(map.state((1, 3)), 0.75), (z, 0.25)]);
    }

    #[test]
    fn presets_are_valid() {
        for spec in [
            GridSpec::domain_preset(),
            GridSpec::reach_avoid_preset(),
            GridSpec::constrained_preset(),
        ] {
            let (m, _) = build_grid(&spec).unwrap();
            assert!(m.validate().is_valid());
            assert_eq!(m.n_states(), spec.rows * spec.cols);
        }
    }

    #[test]
    fn spec_errors() {
        let mut s = GridSpec::new(3, 3, 0.1);
        s.target_cells = vec![(1, 1)];
        s.obstacle_cells = vec![(1, 1)];
        assert!(matches!(build_grid(&s), Err(Error::OverlappingSets(4))));
        assert!(build_grid(&GridSpec::new(3, 3, 1.5)).is_err());
        let mut s = GridSpec::new(3, 3, 0.1);
        s.target_cells = vec![(3, 0)];
        assert!(build_grid(&s).is_err());
    }

    #[test]
    fn rectangles() {
        assert_eq!(parse_rect("1:2,3:3").unwrap(), vec![(1, 3), (2, 3)]);
        assert_eq!(parse_rect("4,0:1").unwrap(), vec![(4, 0), (4, 1)]);
        assert!(parse_rect("2:1,0:0").is_err());
        assert!(parse_rect("1:2").is_err());
    }

    #[test]
    fn sidecar_and_csv() {
        let map = GridMap { rows: 2, cols: 3 };
        let j = map.sidecar_json();
        assert!(
            j.contains("\"4\": [\n      1,\n      1\n    ]") || j.contains("\"4\": [1, 1]"),
            "{j}"
        );
        assert_eq!(GridMap::from_sidecar_json(&j).unwrap(), map);
        let csv = map.values_csv(&[0.0, 1.0, 0.5, 0.0, 0.0, 0.0]);
        assert!(csv.starts_with("row,col,value\n0,0,0.0\n0,1,1.0000000000000000\n"));
    }
}
