//! Candidate controller structures that give the composed chain a feasible
//! recurrent set, and the steady-state target states of a recurrent class.

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{compose_gmc, GlobalChain, RecurrenceAnalysis};
use crate::controller::{uniform_policy, Agent, FscStructure};
use crate::graph::tarjan;
use crate::product::{AcceptancePair, ProductPosg};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PruneOptions {
    /// Zero only the `(g_def, g'_def)` entries of the state being processed
    /// instead of the whole `(u_def, o_def)` column.
    pub narrow: bool,
}

/// A structure pair accepted by [`prune_candidates`], with how it was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub def: FscStructure,
    pub adv: FscStructure,
    /// Chain states of the SCC being processed, under the seed structures.
    pub scc: Vec<usize>,
    pub pair: usize,
    pub bad: Vec<usize>,
    pub good: Vec<usize>,
    /// The recurrent class of the new chain that contains a good state.
    pub witness_class: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    /// `(SCC, pair)` combinations examined.
    pub iterations: usize,
    /// Combinations with no good state.
    pub no_good: usize,
    /// Combinations whose pruning emptied a controller row.
    pub non_viable: usize,
    /// Combinations whose pruned structures left every good state transient
    /// or in a class meeting the finite set.
    pub rejected: usize,
    /// Accepted combinations that repeated an earlier structure pair.
    pub duplicates: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
    pub stats: SearchStats,
}

impl CandidateSet {
    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    /// Append candidates not already present, in order.
    pub fn merge(&mut self, other: CandidateSet) {
        let s = &mut self.stats;
        s.iterations += other.stats.iterations;
        s.no_good += other.stats.no_good;
        s.non_viable += other.stats.non_viable;
        s.rejected += other.stats.rejected;
        s.duplicates += other.stats.duplicates;
        for c in other.candidates {
            if self.contains(&c.def, &c.adv) {
                self.stats.duplicates += 1;
            } else {
                self.candidates.push(c);
            }
        }
    }

    pub fn contains(&self, def: &FscStructure, adv: &FscStructure) -> bool {
        self.candidates.iter().any(|c| c.def == *def && c.adv == *adv)
    }
}

fn structure_digraph(p: &ProductPosg, def: &FscStructure, adv: &FscStructure) -> Result<GlobalChain> {
    compose_gmc(p, &uniform_policy(def)?, &uniform_policy(adv)?)
}

/// Prune fully-connected structures against one SCC and one Rabin pair.
/// Returns `Ok(None)` with the reason recorded in `stats` when no candidate results.
#[allow(clippy::too_many_arguments)]
fn process(
    p: &ProductPosg,
    chain: &GlobalChain,
    scc: &[usize],
    pair: usize,
    in_scc: &[bool],
    def0: &FscStructure,
    adv0: &FscStructure,
    opts: PruneOptions,
    stats: &mut SearchStats,
) -> Result<Option<Candidate>> {
    let game = p.game();
    let pr = &chain.pairs()[pair];
    let graph = chain.digraph(0.0);

    let mut bad: Vec<usize> = scc
        .iter()
        .flat_map(|&m| graph.successors(m).iter().copied())
        .filter(|&m2| !in_scc[m2])
        .chain(scc.iter().copied().filter(|&m| pr.finite[m]))
        .collect();
    bad.sort_unstable();
    bad.dedup();
    let good: Vec<usize> = scc.iter().copied().filter(|&m| pr.infinite[m]).collect();
    if good.is_empty() {
        stats.no_good += 1;
        return Ok(None);
    }

    let (nod, noa) = (game.def_observations().len(), game.adv_observations().len());
    let (nud, nua) = (game.def_actions().len(), game.adv_actions().len());
    let (gd_n, ga_n) = (def0.nodes(), adv0.nodes());
    let mut def = FscStructure::fully_connected(Agent::Defender, gd_n, nod, nud).with_initial(def0.initial())?;
    let mut adv = FscStructure::fully_connected(Agent::Adversary, ga_n, noa, nua).with_initial(adv0.initial())?;

    let mut remaining = bad.clone();
    let (target_sp, target_gd, target_ga) = chain.decode(good[0]);
    while def.is_viable() && adv.is_viable() && !remaining.is_empty() {
        let (bad_sp, bad_gd, bad_ga) = chain.decode(remaining[0]);
        for &m in scc.iter().filter(|m| remaining.binary_search(m).is_err()) {
            let (sp, gd, ga) = chain.decode(m);
            // defender actions that some adversary action can turn into a move to the bad state
            for ud in 0..nud {
                for od in (0..nod).filter(|&od| game.obs_def(sp, od) > 0.0) {
                    if !def.allowed(gd, od, bad_gd, ud) {
                        continue;
                    }
                    let risky = (0..nua).any(|ua| {
                        game.prob(sp, ud, ua, bad_sp) > 0.0
                            && (0..noa).any(|oa| game.obs_adv(sp, oa) > 0.0 && adv.allowed(ga, oa, bad_ga, ua))
                    });
                    if !risky {
                        continue;
                    }
                    if opts.narrow {
                        def.set(gd, od, bad_gd, ud, false);
                    } else {
                        for g in 0..gd_n {
                            for g2 in 0..gd_n {
                                def.set(g, od, g2, ud, false);
                            }
                        }
                    }
                }
            }
            // adversary actions under which every defender action still reaches the good state
            for ua in 0..nua {
                for oa in (0..noa).filter(|&oa| game.obs_adv(sp, oa) > 0.0) {
                    if !adv.allowed(ga, oa, target_ga, ua) {
                        continue;
                    }
                    let useless = (0..nud).all(|ud| {
                        game.prob(sp, ud, ua, target_sp) > 0.0
                            && (0..nod).any(|od| game.obs_def(sp, od) > 0.0 && def.allowed(gd, od, target_gd, ud))
                    });
                    if useless {
                        adv.set(ga, oa, target_ga, ua, false);
                    }
                }
            }
        }
        remaining.remove(0);
    }
    if !def.is_viable() || !adv.is_viable() {
        stats.non_viable += 1;
        return Ok(None);
    }

    let new_chain = structure_digraph(p, &def, &adv)?;
    let analysis = RecurrenceAnalysis::of_chain(&new_chain, 0.0);
    let witness = good.iter().find_map(|&m| {
        analysis.class_of(m).and_then(|k| {
            let class = &analysis.classes()[k];
            class.iter().all(|&x| !pr.finite[x]).then(|| class.clone())
        })
    });
    match witness {
        Some(witness_class) => Ok(Some(Candidate {
            def,
            adv,
            scc: scc.to_vec(),
            pair,
            bad,
            good,
            witness_class,
        })),
        None => {
            stats.rejected += 1;
            Ok(None)
        }
    }
}

/// Candidate structure generation.
///
/// The seed structures only shape the SCC decomposition; every
/// `(SCC, pair)` combination restarts from fully-connected structures of
/// the same sizes and prunes defender actions that risk leaving the SCC or
/// entering the finite set, and adversary actions that cannot keep the
/// defender away from the first good state. Bad and good states are taken
/// in ascending order.
pub fn prune_candidates(
    p: &ProductPosg,
    def0: &FscStructure,
    adv0: &FscStructure,
    opts: PruneOptions,
) -> Result<CandidateSet> {
    for (st, agent) in [(def0, Agent::Defender), (adv0, Agent::Adversary)] {
        if st.agent() != agent {
            return Err(Error::Dimension(format!(
                "seed for the {agent} is a {} structure",
                st.agent()
            )));
        }
        if !st.is_viable() {
            let (node, observation) = st.first_dead_row().expect("non-viable");
            return Err(Error::NonViable {
                agent,
                node,
                observation,
            });
        }
    }
    let chain = structure_digraph(p, def0, adv0)?;
    let graph = chain.digraph(0.0);
    let sccs = tarjan(&graph);
    let mut order: Vec<usize> = (0..sccs.count()).collect();
    order.sort_by_key(|&c| sccs.members[c][0]);
    let tasks: Vec<(usize, usize)> = order
        .iter()
        .flat_map(|&c| (0..chain.pairs().len()).map(move |i| (c, i)))
        .collect();

    let results: Vec<(Option<Candidate>, SearchStats)> = tasks
        .par_iter()
        .map(|&(c, i)| {
            let scc = &sccs.members[c];
            let in_scc: Vec<bool> = (0..chain.states()).map(|m| sccs.component[m] == c).collect();
            let mut stats = SearchStats {
                iterations: 1,
                ..SearchStats::default()
            };
            process(p, &chain, scc, i, &in_scc, def0, adv0, opts, &mut stats).map(|r| (r, stats))
        })
        .collect::<Result<_>>()?;

    let mut out = CandidateSet::default();
    for (candidate, stats) in results {
        out.merge(CandidateSet {
            candidates: candidate.into_iter().collect(),
            stats,
        });
    }
    Ok(out)
}

/// Seed structures for [`synthesize`]: the fully-connected pair, then for
/// each defender action a defender restricted to that action, paired with a
/// fully-connected adversary.
pub fn seed_structures(p: &ProductPosg, g_def: usize, g_adv: usize) -> Vec<(FscStructure, FscStructure)> {
    let game = p.game();
    let (nod, noa) = (game.def_observations().len(), game.adv_observations().len());
    let (nud, nua) = (game.def_actions().len(), game.adv_actions().len());
    let adv = FscStructure::fully_connected(Agent::Adversary, g_adv, noa, nua);
    let mut seeds = vec![(
        FscStructure::fully_connected(Agent::Defender, g_def, nod, nud),
        adv.clone(),
    )];
    seeds.extend((0..nud).map(|u| {
        (
            FscStructure::single_action(Agent::Defender, g_def, nod, nud, u),
            adv.clone(),
        )
    }));
    seeds
}

/// Run [`prune_candidates`] from every seed and merge the results.
pub fn synthesize(p: &ProductPosg, seeds: &[(FscStructure, FscStructure)], opts: PruneOptions) -> Result<CandidateSet> {
    let mut out = CandidateSet::default();
    for (def0, adv0) in seeds {
        out.merge(prune_candidates(p, def0, adv0, opts)?);
    }
    Ok(out)
}

/// Steady-state targets of a recurrent class: the union of `K(i) ∩ class`
/// over the pairs whose `L(i)` misses the class.
pub fn steady_state_targets(class: &[usize], pairs: &[AcceptancePair]) -> Vec<usize> {
    let mut out: Vec<usize> = pairs
        .iter()
        .filter(|p| class.iter().all(|&m| !p.finite[m]))
        .flat_map(|p| class.iter().copied().filter(|&m| p.infinite[m]))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{phi_feasible_sets, satisfaction};
    use crate::dra::RabinAutomaton;
    use crate::grid::{make_grid_posg, GridSpec};
    use crate::posg::{Posg, PosgParts};
    use crate::product::build_product;
    use crate::word::Letter;

    fn all_accepting_product() -> ProductPosg {
        let game = Posg::from_parts(PosgParts {
            states: 2,
            initial: 0,
            def_actions: vec!["a".into(), "b".into()],
            adv_actions: vec!["x".into(), "y".into()],
            def_observations: vec!["o".into()],
            adv_observations: vec!["o".into()],
            ap: vec![],
            labels: vec![Letter::EMPTY; 2],
            transitions: vec![
                vec![(1, 1.0)],
                vec![(0, 1.0)],
                vec![(0, 0.5), (1, 0.5)],
                vec![(1, 1.0)],
                vec![(0, 1.0)],
                vec![(1, 1.0)],
                vec![(1, 1.0)],
                vec![(0, 1.0)],
            ],
            def_obs: vec![1.0, 1.0],
            adv_obs: vec![1.0, 1.0],
        })
        .unwrap();
        let pairs = vec![AcceptancePair::from_indices(2, &[], &[0, 1]).unwrap()];
        ProductPosg::new(game, vec![(0, 0), (1, 0)], pairs).unwrap()
    }

    #[test]
    fn nothing_to_prune_keeps_full_structures() {
        let p = all_accepting_product();
        let def = FscStructure::fully_connected(Agent::Defender, 1, 1, 2);
        let adv = FscStructure::fully_connected(Agent::Adversary, 1, 1, 2);
        let out = prune_candidates(&p, &def, &adv, PruneOptions::default()).unwrap();
        assert!(out.contains(&def, &adv));
    }

    #[test]
    fn steady_state_target_set() {
        let pairs = vec![
            AcceptancePair::from_indices(4, &[0], &[1]).unwrap(),
            AcceptancePair::from_indices(4, &[], &[2, 3]).unwrap(),
        ];
        assert_eq!(steady_state_targets(&[0, 1, 2], &pairs), vec![2]);
        assert_eq!(steady_state_targets(&[1, 2], &pairs), vec![1, 2]);
        let blocked = vec![AcceptancePair::from_indices(4, &[1], &[1]).unwrap()];
        assert!(steady_state_targets(&[1, 2], &blocked).is_empty());
    }

    #[test]
    fn grid_candidates_are_sound() {
        let g = make_grid_posg(&GridSpec::example()).unwrap();
        let p = build_product(&g, &RabinAutomaton::reach_avoid_recurrence())
            .unwrap()
            .prune_unreachable();
        let seeds = seed_structures(&p, 2, 1);
        let out = synthesize(&p, &seeds, PruneOptions::default()).unwrap();
        assert!(!out.is_empty());
        for c in &out.candidates {
            assert!(c.def.is_viable() && c.adv.is_viable());
            let chain = compose_gmc(&p, &uniform_policy(&c.def).unwrap(), &uniform_policy(&c.adv).unwrap()).unwrap();
            let an = RecurrenceAnalysis::of_chain(&chain, 0.0);
            assert!(!phi_feasible_sets(&an).is_empty());
        }
        let best = out
            .candidates
            .iter()
            .map(|c| satisfaction(&p, &uniform_policy(&c.def).unwrap(), &uniform_policy(&c.adv).unwrap()).unwrap())
            .fold(0.0, f64::max);
        assert!(best > 0.0);
    }
}
