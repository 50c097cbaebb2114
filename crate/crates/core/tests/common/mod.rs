//! Random instance generators and independent oracles shared by the
//! integration tests.
#![allow(dead_code)]

use posg_fsc::controller::{softmax_policy, Agent, Fsc, FscStructure};
use posg_fsc::dra::{RabinAutomaton, RabinPair};
use posg_fsc::posg::{Posg, PosgParts};
use posg_fsc::product::{build_product, AcceptancePair, ProductPosg};
use posg_fsc::word::Letter;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Distribution over `n` outcomes with a random support of size `1..=max_support`.
pub fn random_distribution(rng: &mut ChaCha8Rng, n: usize, max_support: usize) -> Vec<(usize, f64)> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let k = rng.gen_range(1..=max_support.min(n));
    let mut w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    let mut row: Vec<(usize, f64)> = idx[..k].iter().copied().zip(w).collect();
    row.sort_by_key(|&(i, _)| i);
    row
}

fn dense(n: usize, row: &[(usize, f64)]) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for &(i, p) in row {
        out[i] = p;
    }
    out
}

/// Random game over the propositions `ap` with the given sizes.
pub fn random_posg(
    rng: &mut ChaCha8Rng,
    states: usize,
    observations: usize,
    actions: (usize, usize),
    ap: &[String],
) -> Posg {
    let (nud, nua) = actions;
    let transitions = (0..states * nud * nua)
        .map(|_| random_distribution(rng, states, 3))
        .collect();
    let def_obs = (0..states)
        .flat_map(|_| dense(observations, &random_distribution(rng, observations, observations)))
        .collect();
    let adv_obs = (0..states)
        .flat_map(|_| dense(observations, &random_distribution(rng, observations, observations)))
        .collect();
    Posg::from_parts(PosgParts {
        states,
        initial: rng.gen_range(0..states),
        def_actions: names("d", nud),
        adv_actions: names("a", nua),
        def_observations: names("o", observations),
        adv_observations: names("o", observations),
        ap: ap.to_vec(),
        labels: (0..states)
            .map(|_| Letter(rng.gen_range(0..1u32 << ap.len())))
            .collect(),
        transitions,
        def_obs,
        adv_obs,
    })
    .unwrap()
}

pub fn random_dra(rng: &mut ChaCha8Rng, ap: &[String], states: usize) -> RabinAutomaton {
    let letters = 1usize << ap.len();
    let table: Vec<usize> = (0..states * letters).map(|_| rng.gen_range(0..states)).collect();
    let pairs = (0..rng.gen_range(1..=2))
        .map(|_| RabinPair {
            finite: (0..states).filter(|_| rng.gen_bool(0.3)).collect(),
            infinite: (0..states).filter(|_| rng.gen_bool(0.5)).collect(),
        })
        .collect();
    RabinAutomaton::from_fn(ap, states, 0, |q, l| table[q * letters + l.0 as usize], pairs).unwrap()
}

/// Product of a random game and a random automaton over `{a}`.
pub fn random_product(rng: &mut ChaCha8Rng, max_states: usize, max_q: usize) -> ProductPosg {
    let ap = vec!["a".to_string()];
    let states = rng.gen_range(1..=max_states);
    let g = random_posg(rng, states, 2, (2, 2), &ap);
    let q = rng.gen_range(1..=max_q);
    let a = random_dra(rng, &ap, q);
    build_product(&g, &a).unwrap()
}

pub fn random_structure(rng: &mut ChaCha8Rng, agent: Agent, nodes: usize, obs: usize, actions: usize) -> FscStructure {
    let mut st = FscStructure::fully_connected(agent, nodes, obs, actions);
    for g in 0..nodes {
        for o in 0..obs {
            let keep = rng.gen_range(0..nodes * actions);
            for g2 in 0..nodes {
                for u in 0..actions {
                    let on = g2 * actions + u == keep || rng.gen_bool(0.5);
                    st.set(g, o, g2, u, on);
                }
            }
        }
    }
    st
}

pub fn random_fsc(rng: &mut ChaCha8Rng, agent: Agent, nodes: usize, obs: usize, actions: usize) -> Fsc {
    let st = random_structure(rng, agent, nodes, obs, actions);
    let params: Vec<f64> = st
        .mask()
        .iter()
        .map(|&on| if on { rng.gen_range(-2.0..2.0) } else { 0.0 })
        .collect();
    softmax_policy(&st, &params).unwrap()
}

/// Chain matrix enumerated term by term from the four kernels, dense.
pub fn brute_force_chain(p: &ProductPosg, c_def: &Fsc, c_adv: &Fsc) -> Vec<Vec<f64>> {
    let g = p.game();
    let (gd_n, ga_n) = (c_def.structure().nodes(), c_adv.structure().nodes());
    let n = p.states() * gd_n * ga_n;
    let mut t = vec![vec![0.0; n]; n];
    for s in 0..p.states() {
        for gd in 0..gd_n {
            for ga in 0..ga_n {
                let from = (s * gd_n + gd) * ga_n + ga;
                for s2 in 0..p.states() {
                    for gd2 in 0..gd_n {
                        for ga2 in 0..ga_n {
                            let to = (s2 * gd_n + gd2) * ga_n + ga2;
                            let mut sum = 0.0;
                            for od in 0..g.def_observations().len() {
                                for oa in 0..g.adv_observations().len() {
                                    for ud in 0..g.def_actions().len() {
                                        for ua in 0..g.adv_actions().len() {
                                            sum += g.obs_def(s, od)
                                                * g.obs_adv(s, oa)
                                                * c_def.prob(gd, od, gd2, ud)
                                                * c_adv.prob(ga, oa, ga2, ua)
                                                * g.prob(s, ud, ua, s2);
                                        }
                                    }
                                }
                            }
                            t[from][to] = sum;
                        }
                    }
                }
            }
        }
    }
    t
}

/// Reflexive-transitive closure by Floyd–Warshall.
#[allow(clippy::needless_range_loop)]
pub fn closure(adj: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = adj.len();
    let mut r = adj.to_vec();
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    r
}

/// Mutual-reachability classes, each ascending, sorted.
pub fn closure_partition(reach: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let n = reach.len();
    let mut seen = vec![false; n];
    let mut parts = Vec::new();
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let part: Vec<usize> = (0..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
        for &j in &part {
            seen[j] = true;
        }
        parts.push(part);
    }
    parts.sort();
    parts
}

/// Classes closed under reachability: every state reachable from a member
/// reaches back.
pub fn closure_recurrent_classes(reach: &[Vec<bool>]) -> Vec<Vec<usize>> {
    closure_partition(reach)
        .into_iter()
        .filter(|c| (0..reach.len()).all(|j| !reach[c[0]][j] || reach[j][c[0]]))
        .collect()
}

/// Whether the dense chain has a recurrent class reachable from `start`
/// that meets some `K(i)` and avoids the matching `L(i)`.
pub fn oracle_has_feasible_class(t: &[Vec<f64>], pairs: &[AcceptancePair], start: Option<usize>) -> bool {
    let adj: Vec<Vec<bool>> = t.iter().map(|r| r.iter().map(|&p| p > 0.0).collect()).collect();
    let reach = closure(&adj);
    closure_recurrent_classes(&reach).iter().any(|c| {
        start.is_none_or(|s| reach[s][c[0]])
            && pairs
                .iter()
                .any(|p| c.iter().any(|&m| p.infinite[m]) && c.iter().all(|&m| !p.finite[m]))
    })
}

/// Random sparse chain with one or two random pairs.
pub fn random_chain_rows(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Vec<(usize, f64)>>, Vec<AcceptancePair>) {
    let rows = (0..n).map(|_| random_distribution(rng, n, 3)).collect();
    let pairs = (0..rng.gen_range(1..=2))
        .map(|_| {
            let finite: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.2)).collect();
            let infinite: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.3)).collect();
            AcceptancePair::from_indices(n, &finite, &infinite).unwrap()
        })
        .collect();
    (rows, pairs)
}
