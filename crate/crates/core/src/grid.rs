//! Grid-world generator: an `M × N` grid with one unsafe and one goal cell,
//! noisy moves, and an adversary that can degrade move success.

use serde::{Deserialize, Serialize};

use crate::posg::{Posg, PosgParts, Row};
use crate::word::Letter;
use crate::{Error, Result};

pub const DEF_ACTIONS: [&str; 4] = ["R", "L", "U", "D"];
pub const ADV_ACTIONS: [&str; 2] = ["A", "NA"];
pub const OBSERVATIONS: [&str; 2] = ["correct", "wrong"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub m: usize,
    pub n: usize,
    pub unsafe_state: usize,
    pub goal: usize,
    pub p_obs_def: f64,
    pub p_obs_adv: f64,
    pub p_move: f64,
    pub p_move_attacked: f64,
}

impl GridSpec {
    /// The 3 × 2 configuration with `s_4` unsafe and `s_5` the goal.
    pub fn example() -> GridSpec {
        GridSpec {
            m: 3,
            n: 2,
            unsafe_state: 4,
            goal: 5,
            p_obs_def: 0.8,
            p_obs_adv: 0.6,
            p_move: 0.8,
            p_move_attacked: 0.6,
        }
    }

    pub fn check(&self) -> Result<()> {
        let cells = self.m * self.n;
        if self.m == 0 || self.n == 0 {
            return Err(Error::Schema("grid dimensions must be positive".into()));
        }
        for (name, idx) in [("unsafe", self.unsafe_state), ("goal", self.goal)] {
            if idx == 0 || idx >= cells {
                return Err(Error::Schema(format!(
                    "{name} cell must lie in 1..{cells} (cell 0 is the initial state)"
                )));
            }
        }
        if self.unsafe_state == self.goal {
            return Err(Error::Schema("unsafe and goal cells must differ".into()));
        }
        for (name, p) in [
            ("p_obs_def", self.p_obs_def),
            ("p_obs_adv", self.p_obs_adv),
            ("p_move", self.p_move),
            ("p_move_attacked", self.p_move_attacked),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Schema(format!("{name} = {p} is not a probability")));
            }
        }
        Ok(())
    }

    fn coords(&self, s: usize) -> (usize, usize) {
        (s % self.m, s / self.m)
    }

    /// 4-neighbourhood of `s`, ascending.
    pub fn neighbors(&self, s: usize) -> Vec<usize> {
        let (x, y) = self.coords(s);
        let mut out = Vec::with_capacity(4);
        if y > 0 {
            out.push(s - self.m);
        }
        if x > 0 {
            out.push(s - 1);
        }
        if x + 1 < self.m {
            out.push(s + 1);
        }
        if y + 1 < self.n {
            out.push(s + self.m);
        }
        out
    }

    /// Cell reached by `dir` (index into [`DEF_ACTIONS`]), `None` when it
    /// would leave the grid. `U` increases the row index.
    pub fn target(&self, s: usize, dir: usize) -> Option<usize> {
        let (x, y) = self.coords(s);
        match dir {
            0 if x + 1 < self.m => Some(s + 1),
            1 if x > 0 => Some(s - 1),
            2 if y + 1 < self.n => Some(s + self.m),
            3 if y > 0 => Some(s - self.m),
            _ => None,
        }
    }
}

/// `1 - p` rounded to twelve decimals, so `1 - 0.8` is exactly `0.2`.
fn complement(p: f64) -> f64 {
    ((1.0 - p) * 1e12).round() / 1e12
}

fn move_row(spec: &GridSpec, s: usize, dir: usize, p_success: f64) -> Row {
    let Some(t) = spec.target(s, dir) else {
        return vec![(s, 1.0)];
    };
    let neighbors = spec.neighbors(s);
    let share = complement(p_success) / neighbors.len() as f64;
    let mut row: Row = vec![(t, p_success)];
    row.push((s, share));
    row.extend(neighbors.iter().filter(|&&nb| nb != t).map(|&nb| (nb, share)));
    row.sort_by_key(|&(j, _)| j);
    row
}

pub fn make_grid_posg(spec: &GridSpec) -> Result<Posg> {
    spec.check()?;
    let cells = spec.m * spec.n;
    let ap = vec!["goal".to_string(), "unsafe".to_string()];
    let mut labels = vec![Letter::EMPTY; cells];
    labels[spec.goal] = Letter::EMPTY.with(0);
    labels[spec.unsafe_state] = Letter::EMPTY.with(1);

    let mut transitions = Vec::with_capacity(cells * 8);
    for s in 0..cells {
        for dir in 0..DEF_ACTIONS.len() {
            // adversary actions in ADV_ACTIONS order: A, NA
            transitions.push(move_row(spec, s, dir, spec.p_move_attacked));
            transitions.push(move_row(spec, s, dir, spec.p_move));
        }
    }
    let obs = |p: f64| -> Vec<f64> { (0..cells).flat_map(|_| [p, complement(p)]).collect() };
    let names = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    Posg::from_parts(PosgParts {
        states: cells,
        initial: 0,
        def_actions: names(&DEF_ACTIONS),
        adv_actions: names(&ADV_ACTIONS),
        def_observations: names(&OBSERVATIONS),
        adv_observations: names(&OBSERVATIONS),
        ap,
        labels,
        transitions,
        def_obs: obs(spec.p_obs_def),
        adv_obs: obs(spec.p_obs_adv),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posg::validate_posg;

    const R: usize = 0;
    const A: usize = 0;
    const NA: usize = 1;

    #[test]
    fn right_move_matches_table() {
        let g = make_grid_posg(&GridSpec::example()).unwrap();
        assert_eq!(g.prob(0, R, NA, 1), 0.8);
        assert_eq!(g.prob(0, R, NA, 0), 0.2 / 2.0);
        assert_eq!(g.prob(0, R, NA, 3), 0.2 / 2.0);
        assert_eq!(g.prob(0, R, A, 1), 0.6);
        assert_eq!(g.prob(0, R, A, 0), 0.4 / 2.0);
        assert_eq!(g.prob(0, R, A, 3), 0.4 / 2.0);
        assert_eq!(g.prob(2, R, NA, 2), 1.0);
        assert_eq!(g.prob(5, R, A, 5), 1.0);
        // interior-edge cell s_1 has three neighbours
        assert_eq!(g.prob(1, R, NA, 0), 0.2 / 3.0);
        assert_eq!(g.prob(1, R, NA, 4), 0.2 / 3.0);
    }

    #[test]
    fn observation_kernels() {
        let g = make_grid_posg(&GridSpec::example()).unwrap();
        for s in 0..6 {
            assert_eq!(g.obs_def(s, 0), 0.8);
            assert_eq!(g.obs_adv(s, 0), 0.6);
        }
    }

    #[test]
    fn labels_mark_one_goal_one_unsafe() {
        let spec = GridSpec::example();
        let g = make_grid_posg(&spec).unwrap();
        let goals: Vec<_> = (0..6).filter(|&s| g.label(s).contains(0)).collect();
        let unsafe_: Vec<_> = (0..6).filter(|&s| g.label(s).contains(1)).collect();
        assert_eq!(goals, vec![5]);
        assert_eq!(unsafe_, vec![4]);
    }

    #[test]
    fn sweep_is_stochastic() {
        for m in 2..=6 {
            for n in 2..=6 {
                for p in [0.5, 0.6, 0.8, 1.0] {
                    let spec = GridSpec {
                        m,
                        n,
                        unsafe_state: 1,
                        goal: m * n - 1,
                        p_obs_def: p,
                        p_obs_adv: p,
                        p_move: p,
                        p_move_attacked: p,
                    };
                    let g = make_grid_posg(&spec).unwrap();
                    assert!(validate_posg(&g).is_empty(), "{m}x{n} p={p}");
                }
            }
        }
    }

    #[test]
    fn success_branch_xor_boundary_self_loop() {
        let spec = GridSpec::example();
        let g = make_grid_posg(&spec).unwrap();
        for s in 0..6 {
            for dir in 0..4 {
                for (ua, p) in [(A, spec.p_move_attacked), (NA, spec.p_move)] {
                    match spec.target(s, dir) {
                        Some(t) => {
                            assert_eq!(g.prob(s, dir, ua, t), p);
                            assert!(g.prob(s, dir, ua, s) < 1.0);
                        }
                        None => assert_eq!(g.row(s, dir, ua), &[(s, 1.0)]),
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = GridSpec::example();
        s.goal = 4;
        assert!(s.check().is_err());
        let mut s = GridSpec::example();
        s.unsafe_state = 6;
        assert!(s.check().is_err());
        let mut s = GridSpec::example();
        s.p_move = 1.5;
        assert!(s.check().is_err());
    }
}
