//! Worst-case selection of a defender structure against a set of adversary
//! structures, both played with uniform policies.

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::satisfaction;
use crate::controller::{uniform_policy, Agent, FscStructure};
use crate::product::ProductPosg;
use crate::synthesis::Candidate;
use crate::{Error, Result};

/// Cap on the number of adversary structures enumerated exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 1 << 16;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MaxMinOptions {
    /// Range over every viable adversary structure of the candidate size
    /// instead of the discovered ones.
    pub exhaustive_adv: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefenderScore {
    /// Index into [`MaxMinResult::defenders`].
    pub defender: usize,
    pub worst_value: f64,
    /// Index into [`MaxMinResult::adversaries`].
    pub worst_adversary: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxMinResult {
    /// Distinct defender structures, ascending by indicator.
    pub defenders: Vec<FscStructure>,
    /// Adversary structures the minimum ranged over, ascending by indicator.
    pub adversaries: Vec<FscStructure>,
    pub scores: Vec<DefenderScore>,
    /// Index of the selected defender.
    pub best: usize,
}

impl MaxMinResult {
    pub fn best_defender(&self) -> &FscStructure {
        &self.defenders[self.best]
    }

    pub fn value(&self) -> f64 {
        self.scores[self.best].worst_value
    }

    pub fn best_response(&self) -> &FscStructure {
        &self.adversaries[self.scores[self.best].worst_adversary]
    }
}

fn sorted_distinct(mut v: Vec<FscStructure>) -> Vec<FscStructure> {
    v.sort_by(|a, b| a.mask().cmp(b.mask()).then_with(|| a.cmp(b)));
    v.dedup();
    v
}

/// Max over defender structures of the min over adversary structures of
/// the satisfaction probability.
///
/// Adversaries are the distinct candidate adversaries plus the
/// fully-connected structure of the same size, or every viable structure
/// with `exhaustive_adv`. Ties go to the lexicographically smallest
/// flattened indicator on both sides.
pub fn maxmin_select(p: &ProductPosg, candidates: &[Candidate], opts: MaxMinOptions) -> Result<MaxMinResult> {
    let first = candidates.first().ok_or(Error::EmptyCandidates)?;
    let defenders = sorted_distinct(candidates.iter().map(|c| c.def.clone()).collect());
    let adv_shape = &first.adv;
    let adversaries = if opts.exhaustive_adv {
        FscStructure::enumerate_viable(
            Agent::Adversary,
            adv_shape.nodes(),
            adv_shape.observations(),
            adv_shape.actions(),
            EXHAUSTIVE_LIMIT,
        )?
    } else {
        let full = FscStructure::fully_connected(
            Agent::Adversary,
            adv_shape.nodes(),
            adv_shape.observations(),
            adv_shape.actions(),
        )
        .with_initial(adv_shape.initial())?;
        candidates.iter().map(|c| c.adv.clone()).chain([full]).collect()
    };
    let adversaries = sorted_distinct(adversaries);
    maxmin_over(p, defenders, adversaries)
}

/// [`maxmin_select`] over explicit structure lists, which are sorted and
/// deduplicated first.
pub fn maxmin_over(
    p: &ProductPosg,
    defenders: Vec<FscStructure>,
    adversaries: Vec<FscStructure>,
) -> Result<MaxMinResult> {
    if defenders.is_empty() || adversaries.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let defenders = sorted_distinct(defenders);
    let adversaries = sorted_distinct(adversaries);
    let def_policies = defenders.iter().map(uniform_policy).collect::<Result<Vec<_>>>()?;
    let adv_policies = adversaries.iter().map(uniform_policy).collect::<Result<Vec<_>>>()?;

    let pairs: Vec<(usize, usize)> = (0..defenders.len())
        .flat_map(|d| (0..adversaries.len()).map(move |a| (d, a)))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(d, a)| satisfaction(p, &def_policies[d], &adv_policies[a]))
        .collect::<Result<_>>()?;

    let scores: Vec<DefenderScore> = (0..defenders.len())
        .map(|d| {
            let row = &values[d * adversaries.len()..(d + 1) * adversaries.len()];
            let (worst_adversary, &worst_value) =
                row.iter()
                    .enumerate()
                    .fold((0, &row[0]), |best, x| if x.1 < best.1 { x } else { best });
            DefenderScore {
                defender: d,
                worst_value,
                worst_adversary,
            }
        })
        .collect();
    let best = scores.iter().fold(0, |best, s| {
        if s.worst_value > scores[best].worst_value {
            s.defender
        } else {
            best
        }
    });
    Ok(MaxMinResult {
        defenders,
        adversaries,
        scores,
        best,
    })
}
