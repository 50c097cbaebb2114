//! Product of a game with a Rabin automaton.

use serde::{Deserialize, Serialize};

use crate::dra::{PairDoc, RabinAutomaton};
use crate::posg::{parse_posg, Posg, PosgDoc, PosgParts};
use crate::{Error, Result};

/// A Rabin pair lifted to some state space, stored as membership masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcceptancePair {
    /// Visited finitely often (`L`).
    pub finite: Vec<bool>,
    /// Visited infinitely often (`K`).
    pub infinite: Vec<bool>,
}

impl AcceptancePair {
    pub fn from_indices(states: usize, finite: &[usize], infinite: &[usize]) -> Result<Self> {
        let mut pair = AcceptancePair {
            finite: vec![false; states],
            infinite: vec![false; states],
        };
        for (mask, idx) in [(&mut pair.finite, finite), (&mut pair.infinite, infinite)] {
            for &i in idx {
                if i >= states {
                    return Err(Error::DanglingState {
                        index: i,
                        count: states,
                        context: "acceptance pair".into(),
                    });
                }
                mask[i] = true;
            }
        }
        Ok(pair)
    }

    pub fn finite_indices(&self) -> Vec<usize> {
        indices(&self.finite)
    }

    pub fn infinite_indices(&self) -> Vec<usize> {
        indices(&self.infinite)
    }

    pub fn to_doc(&self) -> PairDoc {
        PairDoc {
            l: self.finite_indices(),
            k: self.infinite_indices(),
        }
    }
}

fn indices(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
}

/// Product game `S × Q`. The embedded [`Posg`] ranges over product states;
/// its labels, observations and actions are those of the base game.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductPosg {
    game: Posg,
    /// `(s, q)` of every product state.
    origin: Vec<(usize, usize)>,
    pairs: Vec<AcceptancePair>,
}

impl ProductPosg {
    pub fn new(game: Posg, origin: Vec<(usize, usize)>, pairs: Vec<AcceptancePair>) -> Result<Self> {
        let n = game.states();
        if origin.len() != n {
            return Err(Error::Dimension(format!(
                "origin lists {} states, game has {n}",
                origin.len()
            )));
        }
        if pairs.is_empty() {
            return Err(Error::Schema("product needs at least one acceptance pair".into()));
        }
        if pairs.iter().any(|p| p.finite.len() != n || p.infinite.len() != n) {
            return Err(Error::Dimension("acceptance pair size".into()));
        }
        Ok(ProductPosg { game, origin, pairs })
    }

    pub fn game(&self) -> &Posg {
        &self.game
    }

    pub fn states(&self) -> usize {
        self.game.states()
    }

    pub fn origin(&self, sp: usize) -> (usize, usize) {
        self.origin[sp]
    }

    pub fn pairs(&self) -> &[AcceptancePair] {
        &self.pairs
    }

    pub fn to_doc(&self) -> ProductDoc {
        ProductDoc {
            game: self.game.to_doc(),
            origin: self.origin.iter().map(|&(s, q)| [s, q]).collect(),
            pairs: self.pairs.iter().map(AcceptancePair::to_doc).collect(),
        }
    }

    /// Drop product states not reachable from the initial state under any
    /// action pair, renumbering the rest in ascending order.
    pub fn prune_unreachable(&self) -> ProductPosg {
        let g = &self.game;
        let (nud, nua) = (g.def_actions().len(), g.adv_actions().len());
        let mut reached = vec![false; g.states()];
        let mut stack = vec![g.initial()];
        reached[g.initial()] = true;
        while let Some(s) = stack.pop() {
            for ud in 0..nud {
                for ua in 0..nua {
                    for &(t, _) in g.row(s, ud, ua) {
                        if !reached[t] {
                            reached[t] = true;
                            stack.push(t);
                        }
                    }
                }
            }
        }
        let kept: Vec<usize> = (0..g.states()).filter(|&s| reached[s]).collect();
        let mut new_index = vec![usize::MAX; g.states()];
        for (i, &s) in kept.iter().enumerate() {
            new_index[s] = i;
        }
        let mut transitions = Vec::with_capacity(kept.len() * nud * nua);
        for &s in &kept {
            for ud in 0..nud {
                for ua in 0..nua {
                    transitions.push(g.row(s, ud, ua).iter().map(|&(t, p)| (new_index[t], p)).collect());
                }
            }
        }
        let pick = |mask: &[bool]| kept.iter().map(|&s| mask[s]).collect::<Vec<_>>();
        let game = Posg::from_parts(PosgParts {
            states: kept.len(),
            initial: new_index[g.initial()],
            def_actions: g.def_actions().to_vec(),
            adv_actions: g.adv_actions().to_vec(),
            def_observations: g.def_observations().to_vec(),
            adv_observations: g.adv_observations().to_vec(),
            ap: g.ap().to_vec(),
            labels: kept.iter().map(|&s| g.label(s)).collect(),
            transitions,
            def_obs: kept.iter().flat_map(|&s| g.obs_def_row(s).to_vec()).collect(),
            adv_obs: kept.iter().flat_map(|&s| g.obs_adv_row(s).to_vec()).collect(),
        })
        .expect("pruning preserves shape");
        ProductPosg {
            game,
            origin: kept.iter().map(|&s| self.origin[s]).collect(),
            pairs: self
                .pairs
                .iter()
                .map(|p| AcceptancePair {
                    finite: pick(&p.finite),
                    infinite: pick(&p.infinite),
                })
                .collect(),
        }
    }
}

/// Build `S × Q` with `T((s',q') | (s,q), u_d, u_a) = T(s' | s, u_d, u_a)`
/// iff `q' = δ(q, L(s'))`. The initial state is `(s0, δ(q0, L(s0)))`.
pub fn build_product(g: &Posg, a: &RabinAutomaton) -> Result<ProductPosg> {
    if g.ap() != a.ap() {
        return Err(Error::ApMismatch {
            model: g.ap().to_vec(),
            automaton: a.ap().to_vec(),
        });
    }
    let nq = a.states();
    let n = g.states() * nq;
    let (nud, nua) = (g.def_actions().len(), g.adv_actions().len());
    let mut transitions = Vec::with_capacity(n * nud * nua);
    for s in 0..g.states() {
        for q in 0..nq {
            for ud in 0..nud {
                for ua in 0..nua {
                    transitions.push(
                        g.row(s, ud, ua)
                            .iter()
                            .map(|&(s2, p)| (s2 * nq + a.step(q, g.label(s2)), p))
                            .collect(),
                    );
                }
            }
        }
    }
    let repeat = |s: usize| std::iter::repeat_n(s, nq);
    let game = Posg::from_parts(PosgParts {
        states: n,
        initial: g.initial() * nq + a.step(a.initial(), g.label(g.initial())),
        def_actions: g.def_actions().to_vec(),
        adv_actions: g.adv_actions().to_vec(),
        def_observations: g.def_observations().to_vec(),
        adv_observations: g.adv_observations().to_vec(),
        ap: g.ap().to_vec(),
        labels: (0..g.states()).flat_map(repeat).map(|s| g.label(s)).collect(),
        transitions,
        def_obs: (0..g.states())
            .flat_map(repeat)
            .flat_map(|s| g.obs_def_row(s).to_vec())
            .collect(),
        adv_obs: (0..g.states())
            .flat_map(repeat)
            .flat_map(|s| g.obs_adv_row(s).to_vec())
            .collect(),
    })?;
    let origin: Vec<(usize, usize)> = (0..n).map(|i| (i / nq, i % nq)).collect();
    let pairs = a
        .pairs()
        .iter()
        .map(|rp| {
            let lift = |set: &[usize]| origin.iter().map(|&(_, q)| set.contains(&q)).collect();
            AcceptancePair {
                finite: lift(&rp.finite),
                infinite: lift(&rp.infinite),
            }
        })
        .collect();
    ProductPosg::new(game, origin, pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductDoc {
    #[serde(flatten)]
    pub game: PosgDoc,
    pub origin: Vec<[usize; 2]>,
    pub pairs: Vec<PairDoc>,
}

pub fn parse_product(doc: &ProductDoc) -> Result<ProductPosg> {
    let game = parse_posg(&doc.game)?;
    let n = game.states();
    let pairs = doc
        .pairs
        .iter()
        .map(|p| AcceptancePair::from_indices(n, &p.l, &p.k))
        .collect::<Result<Vec<_>>>()?;
    ProductPosg::new(game, doc.origin.iter().map(|o| (o[0], o[1])).collect(), pairs)
}

pub fn parse_product_json(text: &str) -> Result<ProductPosg> {
    let doc: ProductDoc = serde_json::from_str(text)?;
    parse_product(&doc)
}
