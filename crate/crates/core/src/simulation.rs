//! Seeded Monte Carlo runs of a product game under two controllers.
//!
//! Random numbers come from ChaCha8 (`rand_chacha`): the generator is seeded
//! with `seed_from_u64(seed)` and episode `j` uses stream `j`, so every
//! episode is reproducible on its own.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{compose_gmc, GlobalChain, RecurrenceAnalysis};
use crate::controller::Fsc;
use crate::product::ProductPosg;
use crate::{Error, Result};

/// Episodes longer than this are reported as an error.
pub const STEP_CAP: usize = 1_000_000;

const WILSON_Z: f64 = 1.959963984540054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StepSample {
    pub o_def: usize,
    pub o_adv: usize,
    pub u_def: usize,
    pub u_adv: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Episode {
    pub seed: u64,
    pub stream: u64,
    /// Chain states visited, starting at the initial state and ending at
    /// the first recurrent state.
    pub states: Vec<usize>,
    pub steps: Vec<StepSample>,
    pub class: usize,
    pub accepted: bool,
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Index drawn from `weights` (summing to one). Rounding slack falls on the
/// last positive entry.
fn sample(rng: &mut ChaCha8Rng, weights: impl Iterator<Item = f64> + Clone) -> usize {
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if r < acc {
            return i;
        }
    }
    last
}

fn run(
    p: &ProductPosg,
    c_def: &Fsc,
    c_adv: &Fsc,
    analysis: &RecurrenceAnalysis,
    seed: u64,
    stream: u64,
    record: bool,
) -> Result<(usize, Vec<usize>, Vec<StepSample>)> {
    let game = p.game();
    let (nud, nua) = (game.def_actions().len(), game.adv_actions().len());
    let (gd_n, ga_n) = (c_def.structure().nodes(), c_adv.structure().nodes());
    let index = |sp: usize, gd: usize, ga: usize| (sp * gd_n + gd) * ga_n + ga;
    let mut rng = rng_for(seed, stream);
    let (mut sp, mut gd, mut ga) = (game.initial(), c_def.structure().initial(), c_adv.structure().initial());
    let mut states = Vec::new();
    let mut steps = Vec::new();
    for _ in 0..=STEP_CAP {
        let m = index(sp, gd, ga);
        if record {
            states.push(m);
        }
        if let Some(class) = analysis.class_of(m) {
            return Ok((class, states, steps));
        }
        let o_def = sample(&mut rng, game.obs_def_row(sp).iter().copied());
        let o_adv = sample(&mut rng, game.obs_adv_row(sp).iter().copied());
        let jd = sample(&mut rng, c_def.row(gd, o_def).iter().copied());
        let ja = sample(&mut rng, c_adv.row(ga, o_adv).iter().copied());
        let (u_def, u_adv) = (jd % nud, ja % nua);
        let row = game.row(sp, u_def, u_adv);
        let k = sample(&mut rng, row.iter().map(|&(_, q)| q));
        sp = row[k].0;
        gd = jd / nud;
        ga = ja / nua;
        if record {
            steps.push(StepSample {
                o_def,
                o_adv,
                u_def,
                u_adv,
            });
        }
    }
    Err(Error::StepCap(STEP_CAP))
}

/// Run one episode until it enters a recurrent class of the composed chain.
pub fn simulate_episode(
    p: &ProductPosg,
    c_def: &Fsc,
    c_adv: &Fsc,
    analysis: &RecurrenceAnalysis,
    seed: u64,
    stream: u64,
) -> Result<Episode> {
    let (class, states, steps) = run(p, c_def, c_adv, analysis, seed, stream, true)?;
    Ok(Episode {
        seed,
        stream,
        states,
        steps,
        class,
        accepted: analysis.is_feasible(class),
    })
}

/// Recurrent class entered by a walk on an explicit chain.
pub fn simulate_chain(chain: &GlobalChain, analysis: &RecurrenceAnalysis, seed: u64, stream: u64) -> Result<usize> {
    let mut rng = rng_for(seed, stream);
    let mut m = chain.initial();
    for _ in 0..=STEP_CAP {
        if let Some(class) = analysis.class_of(m) {
            return Ok(class);
        }
        let row = chain.row(m);
        m = row[sample(&mut rng, row.iter().map(|&(_, q)| q))].0;
    }
    Err(Error::StepCap(STEP_CAP))
}

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: u64, runs: u64) -> (f64, f64) {
    let n = runs as f64;
    let phat = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub runs: u64,
    pub accepted: u64,
    pub estimate: f64,
    pub interval: (f64, f64),
    /// Episodes ending in each recurrent class.
    pub class_counts: Vec<u64>,
}

impl Estimate {
    fn from_classes(classes: &[usize], analysis: &RecurrenceAnalysis) -> Estimate {
        let mut class_counts = vec![0u64; analysis.classes().len()];
        for &c in classes {
            class_counts[c] += 1;
        }
        let runs = classes.len() as u64;
        let accepted = class_counts
            .iter()
            .enumerate()
            .filter(|&(k, _)| analysis.is_feasible(k))
            .map(|(_, &n)| n)
            .sum();
        Estimate {
            runs,
            accepted,
            estimate: accepted as f64 / runs as f64,
            interval: wilson_interval(accepted, runs),
            class_counts,
        }
    }
}

/// Fraction of `n_runs` episodes that end in a feasible class. Episodes run
/// in parallel; the result equals the sequential one.
pub fn estimate_satisfaction(p: &ProductPosg, c_def: &Fsc, c_adv: &Fsc, n_runs: u64, seed: u64) -> Result<Estimate> {
    if n_runs == 0 {
        return Err(Error::Schema("at least one run is required".into()));
    }
    let chain = compose_gmc(p, c_def, c_adv)?;
    let analysis = RecurrenceAnalysis::of_chain(&chain, 0.0);
    estimate_with(p, c_def, c_adv, &analysis, n_runs, seed)
}

/// [`estimate_satisfaction`] against an analysis computed by the caller.
pub fn estimate_with(
    p: &ProductPosg,
    c_def: &Fsc,
    c_adv: &Fsc,
    analysis: &RecurrenceAnalysis,
    n_runs: u64,
    seed: u64,
) -> Result<Estimate> {
    let classes: Vec<usize> = (0..n_runs)
        .into_par_iter()
        .map(|j| run(p, c_def, c_adv, analysis, seed, j, false).map(|r| r.0))
        .collect::<Result<_>>()?;
    Ok(Estimate::from_classes(&classes, analysis))
}

/// Monte Carlo counterpart for an explicit chain.
pub fn estimate_chain(chain: &GlobalChain, analysis: &RecurrenceAnalysis, n_runs: u64, seed: u64) -> Result<Estimate> {
    let classes: Vec<usize> = (0..n_runs)
        .into_par_iter()
        .map(|j| simulate_chain(chain, analysis, seed, j))
        .collect::<Result<_>>()?;
    Ok(Estimate::from_classes(&classes, analysis))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product::AcceptancePair;

    #[test]
    fn wilson_matches_hand_values() {
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.4038).abs() < 1e-4 && (hi - 0.5962).abs() < 1e-4);
        assert_eq!(wilson_interval(0, 10).0, 0.0);
    }

    #[test]
    fn recurrent_start_has_no_steps() {
        let chain = GlobalChain::from_rows(
            vec![vec![(0, 1.0)]],
            0,
            vec![AcceptancePair::from_indices(1, &[], &[0]).unwrap()],
        )
        .unwrap();
        let an = RecurrenceAnalysis::of_chain(&chain, 0.0);
        assert_eq!(simulate_chain(&chain, &an, 3, 0).unwrap(), 0);
        let e = estimate_chain(&chain, &an, 10, 1).unwrap();
        assert_eq!(e.estimate, 1.0);
    }

    #[test]
    fn branching_frequency() {
        let chain = GlobalChain::from_rows(
            vec![vec![(1, 0.3), (2, 0.7)], vec![(1, 1.0)], vec![(2, 1.0)]],
            0,
            vec![AcceptancePair::from_indices(3, &[], &[1]).unwrap()],
        )
        .unwrap();
        let an = RecurrenceAnalysis::of_chain(&chain, 0.0);
        let e = estimate_chain(&chain, &an, 100_000, 7).unwrap();
        assert!((e.estimate - 0.3).abs() < 0.01);
        assert_eq!(e, estimate_chain(&chain, &an, 100_000, 7).unwrap());
    }
}
