//! Finite state controllers and their structure indicators.
//!
//! Tables are flat and indexed by `((g * |O| + o) * |G| + g') * |U| + u`,
//! so the distribution `μ(·, · | g, o)` is one contiguous block.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::report::{check_probability, ValidationReport, Violation, STOCHASTIC_TOLERANCE};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Agent {
    #[serde(rename = "def")]
    Defender,
    #[serde(rename = "adv")]
    Adversary,
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Agent::Defender => "defender",
            Agent::Adversary => "adversary",
        })
    }
}

/// Support pattern `I(g', u | g, o)` of a controller.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FscStructure {
    agent: Agent,
    nodes: usize,
    observations: usize,
    actions: usize,
    initial: usize,
    mask: Vec<bool>,
}

impl FscStructure {
    pub fn new(
        agent: Agent,
        nodes: usize,
        observations: usize,
        actions: usize,
        initial: usize,
        mask: Vec<bool>,
    ) -> Result<Self> {
        if nodes == 0 || observations == 0 || actions == 0 {
            return Err(Error::Dimension("controller dimensions must be positive".into()));
        }
        if initial >= nodes {
            return Err(Error::DanglingState {
                index: initial,
                count: nodes,
                context: "controller initial node".into(),
            });
        }
        if mask.len() != nodes * observations * nodes * actions {
            return Err(Error::Dimension(format!(
                "indicator has {} entries, expected {}",
                mask.len(),
                nodes * observations * nodes * actions
            )));
        }
        Ok(FscStructure {
            agent,
            nodes,
            observations,
            actions,
            initial,
            mask,
        })
    }

    pub fn fully_connected(agent: Agent, nodes: usize, observations: usize, actions: usize) -> Self {
        let len = nodes * observations * nodes * actions;
        FscStructure::new(agent, nodes, observations, actions, 0, vec![true; len]).expect("positive dimensions")
    }

    /// Every `(g, o)` may move to any next node, but only with action `action`.
    pub fn single_action(agent: Agent, nodes: usize, observations: usize, actions: usize, action: usize) -> Self {
        let mut st = FscStructure::fully_connected(agent, nodes, observations, actions);
        for (i, m) in st.mask.iter_mut().enumerate() {
            *m = i % actions == action;
        }
        st
    }

    pub fn agent(&self) -> Agent {
        self.agent
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn observations(&self) -> usize {
        self.observations
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn with_initial(mut self, initial: usize) -> Result<Self> {
        if initial >= self.nodes {
            return Err(Error::DanglingState {
                index: initial,
                count: self.nodes,
                context: "controller initial node".into(),
            });
        }
        self.initial = initial;
        Ok(self)
    }

    pub fn index(&self, g: usize, o: usize, g2: usize, u: usize) -> usize {
        ((g * self.observations + o) * self.nodes + g2) * self.actions + u
    }

    pub fn block(&self, g: usize, o: usize) -> Range<usize> {
        let len = self.nodes * self.actions;
        let start = (g * self.observations + o) * len;
        start..start + len
    }

    pub fn allowed(&self, g: usize, o: usize, g2: usize, u: usize) -> bool {
        self.mask[self.index(g, o, g2, u)]
    }

    pub fn set(&mut self, g: usize, o: usize, g2: usize, u: usize, on: bool) {
        let i = self.index(g, o, g2, u);
        self.mask[i] = on;
    }

    /// The flattened indicator.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// First `(g, o)` whose row of the indicator is empty.
    pub fn first_dead_row(&self) -> Option<(usize, usize)> {
        (0..self.nodes)
            .flat_map(|g| (0..self.observations).map(move |o| (g, o)))
            .find(|&(g, o)| !self.mask[self.block(g, o)].iter().any(|&b| b))
    }

    pub fn is_viable(&self) -> bool {
        self.first_dead_row().is_none()
    }

    fn require_viable(&self) -> Result<()> {
        match self.first_dead_row() {
            Some((node, observation)) => Err(Error::NonViable {
                agent: self.agent,
                node,
                observation,
            }),
            None => Ok(()),
        }
    }

    /// Decode a flat index into `(g, o, g', u)`.
    pub fn decode(&self, i: usize) -> (usize, usize, usize, usize) {
        let u = i % self.actions;
        let rest = i / self.actions;
        let g2 = rest % self.nodes;
        let rest = rest / self.nodes;
        (rest / self.observations, rest % self.observations, g2, u)
    }

    /// Every viable structure of the given shape with initial node 0.
    pub fn enumerate_viable(
        agent: Agent,
        nodes: usize,
        observations: usize,
        actions: usize,
        limit: usize,
    ) -> Result<Vec<FscStructure>> {
        let block = nodes * actions;
        let blocks = nodes * observations;
        let per_block = (1u128 << block) - 1;
        let total = (0..blocks).try_fold(1u128, |acc, _| acc.checked_mul(per_block));
        match total {
            Some(t) if t <= limit as u128 => {}
            _ => {
                return Err(Error::TooLarge(format!(
                    "{agent} structures with {blocks} rows of {block} entries exceed {limit}"
                )))
            }
        }
        let mut out = Vec::new();
        let mut codes = vec![1u128; blocks];
        loop {
            let mask = codes
                .iter()
                .flat_map(|&c| (0..block).map(move |b| c >> b & 1 == 1))
                .collect();
            out.push(FscStructure::new(agent, nodes, observations, actions, 0, mask)?);
            let mut k = 0;
            loop {
                if k == blocks {
                    return Ok(out);
                }
                if codes[k] < per_block {
                    codes[k] += 1;
                    break;
                }
                codes[k] = 1;
                k += 1;
            }
        }
    }
}

/// A controller: structure plus policy `μ(g', u | g, o)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fsc {
    structure: FscStructure,
    probs: Vec<f64>,
    params: Option<Vec<f64>>,
}

impl Fsc {
    /// Wrap an explicit policy table; the structure is its support.
    pub fn from_table(
        agent: Agent,
        nodes: usize,
        observations: usize,
        actions: usize,
        initial: usize,
        probs: Vec<f64>,
    ) -> Result<Self> {
        let mask = probs.iter().map(|&p| p > 0.0).collect();
        let structure = FscStructure::new(agent, nodes, observations, actions, initial, mask)?;
        Ok(Fsc {
            structure,
            probs,
            params: None,
        })
    }

    pub fn structure(&self) -> &FscStructure {
        &self.structure
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn params(&self) -> Option<&[f64]> {
        self.params.as_deref()
    }

    pub fn prob(&self, g: usize, o: usize, g2: usize, u: usize) -> f64 {
        self.probs[self.structure.index(g, o, g2, u)]
    }

    /// `μ(·, · | g, o)` as a slice over `(g', u)`.
    pub fn row(&self, g: usize, o: usize) -> &[f64] {
        &self.probs[self.structure.block(g, o)]
    }
}

/// `μ(g', u | g, o) = I(g', u | g, o) / Σ I(·, · | g, o)`.
pub fn uniform_policy(st: &FscStructure) -> Result<Fsc> {
    st.require_viable()?;
    let mut probs = vec![0.0; st.mask.len()];
    for g in 0..st.nodes {
        for o in 0..st.observations {
            let block = st.block(g, o);
            let count = st.mask[block.clone()].iter().filter(|&&b| b).count();
            let p = 1.0 / count as f64;
            for i in block {
                if st.mask[i] {
                    probs[i] = p;
                }
            }
        }
    }
    Ok(Fsc {
        structure: st.clone(),
        probs,
        params: None,
    })
}

/// Softmax over the support of `st`; off-support parameters are ignored and
/// their probabilities fixed at zero.
pub fn softmax_policy(st: &FscStructure, params: &[f64]) -> Result<Fsc> {
    st.require_viable()?;
    if params.len() != st.mask.len() {
        return Err(Error::Dimension(format!(
            "{} parameters for {} indicator entries",
            params.len(),
            st.mask.len()
        )));
    }
    let mut probs = vec![0.0; st.mask.len()];
    for g in 0..st.nodes {
        for o in 0..st.observations {
            let block = st.block(g, o);
            let max = block
                .clone()
                .filter(|&i| st.mask[i])
                .map(|i| params[i])
                .fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for i in block.clone().filter(|&i| st.mask[i]) {
                probs[i] = (params[i] - max).exp();
                total += probs[i];
            }
            for i in block.filter(|&i| st.mask[i]) {
                probs[i] /= total;
            }
        }
    }
    Ok(Fsc {
        structure: st.clone(),
        probs,
        params: Some(params.to_vec()),
    })
}

pub fn validate_fsc(c: &Fsc) -> ValidationReport {
    let st = &c.structure;
    let mut report = ValidationReport::default();
    for g in 0..st.nodes {
        for o in 0..st.observations {
            let block = st.block(g, o);
            let mut sum = 0.0;
            for i in block {
                let p = c.probs[i];
                let (_, _, g2, u) = st.decode(i);
                check_probability(&mut report, || format!("mu({g2}, {u} | {g}, {o})"), p);
                sum += p;
                if (p > 0.0) != st.mask[i] {
                    report.push(Violation::SupportMismatch {
                        node: g,
                        observation: o,
                        next_node: g2,
                        action: u,
                    });
                }
            }
            if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
                report.push(Violation::ControllerRow {
                    node: g,
                    observation: o,
                    sum,
                });
            }
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FscEntryDoc {
    pub g: usize,
    pub o: String,
    pub g2: usize,
    pub u: String,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FscDoc {
    pub agent: Agent,
    pub g: usize,
    pub g_init: usize,
    pub entries: Vec<FscEntryDoc>,
}

impl FscDoc {
    /// Entries with positive probability, named by the game's observation
    /// and action lists for this agent.
    pub fn from_fsc(c: &Fsc, observations: &[String], actions: &[String]) -> FscDoc {
        let st = &c.structure;
        let entries = (0..st.mask.len())
            .filter(|&i| st.mask[i])
            .map(|i| {
                let (g, o, g2, u) = st.decode(i);
                FscEntryDoc {
                    g,
                    o: observations[o].clone(),
                    g2,
                    u: actions[u].clone(),
                    p: c.probs[i],
                    phi: c.params.as_ref().map(|p| p[i]),
                }
            })
            .collect();
        FscDoc {
            agent: st.agent,
            g: st.nodes,
            g_init: st.initial,
            entries,
        }
    }
}

/// Read a controller document against the agent's observation/action names.
/// Rows must be stochastic; when every entry carries `phi` the parameters are kept.
pub fn parse_fsc(doc: &FscDoc, observations: &[String], actions: &[String]) -> Result<Fsc> {
    let (no, nu) = (observations.len(), actions.len());
    let len = doc.g * no * doc.g * nu;
    let mut probs = vec![0.0; len];
    let mut params = vec![0.0; len];
    let mut seen = vec![false; len];
    let all_phi = !doc.entries.is_empty() && doc.entries.iter().all(|e| e.phi.is_some());
    for e in &doc.entries {
        if e.g >= doc.g || e.g2 >= doc.g {
            return Err(Error::DanglingState {
                index: e.g.max(e.g2),
                count: doc.g,
                context: "controller entry".into(),
            });
        }
        let o = observations
            .iter()
            .position(|n| *n == e.o)
            .ok_or_else(|| Error::Schema(format!("unknown observation `{}`", e.o)))?;
        let u = actions
            .iter()
            .position(|n| *n == e.u)
            .ok_or_else(|| Error::Schema(format!("unknown action `{}`", e.u)))?;
        let i = ((e.g * no + o) * doc.g + e.g2) * nu + u;
        if seen[i] {
            return Err(Error::Schema(format!(
                "controller entry (g={}, o={}, g2={}, u={}) given twice",
                e.g, e.o, e.g2, e.u
            )));
        }
        seen[i] = true;
        probs[i] = e.p;
        params[i] = e.phi.unwrap_or(0.0);
    }
    let mut c = Fsc::from_table(doc.agent, doc.g, no, nu, doc.g_init, probs)?;
    validate_fsc(&c).into_result()?;
    if all_phi {
        c.params = Some(params);
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_over_full_support() {
        let st = FscStructure::fully_connected(Agent::Defender, 2, 1, 4);
        let c = uniform_policy(&st).unwrap();
        assert!(c.probs().iter().all(|&p| p == 1.0 / 8.0));
        assert!(validate_fsc(&c).is_empty());
    }

    #[test]
    fn single_entry_rows_are_deterministic() {
        let mut st = FscStructure::fully_connected(Agent::Adversary, 2, 2, 2);
        for i in 0..st.mask.len() {
            let (_, _, g2, u) = st.decode(i);
            st.mask[i] = g2 == 1 && u == 0;
        }
        let c = uniform_policy(&st).unwrap();
        assert!(c.probs().iter().all(|&p| p == 0.0 || p == 1.0));
        assert!(validate_fsc(&c).is_empty());
    }

    #[test]
    fn non_viable_rejected() {
        let mut st = FscStructure::fully_connected(Agent::Defender, 1, 2, 2);
        st.set(0, 1, 0, 0, false);
        st.set(0, 1, 0, 1, false);
        assert!(matches!(
            uniform_policy(&st),
            Err(Error::NonViable {
                node: 0,
                observation: 1,
                ..
            })
        ));
        assert!(softmax_policy(&st, &[0.0; 4]).is_err());
    }

    #[test]
    fn softmax_two_entry_support() {
        let mut st = FscStructure::fully_connected(Agent::Defender, 1, 1, 3);
        st.set(0, 0, 0, 2, false);
        let params = [2f64.ln(), 0.0, 100.0];
        let c = softmax_policy(&st, &params).unwrap();
        assert!((c.prob(0, 0, 0, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.prob(0, 0, 0, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.prob(0, 0, 0, 2), 0.0);
    }

    #[test]
    fn scaled_row_is_reported() {
        let st = FscStructure::fully_connected(Agent::Defender, 1, 2, 2);
        let c = uniform_policy(&st).unwrap();
        let mut probs = c.probs().to_vec();
        for p in &mut probs[st.block(0, 1)] {
            *p *= 0.5;
        }
        let bad = Fsc::from_table(Agent::Defender, 1, 2, 2, 0, probs).unwrap();
        let r = validate_fsc(&bad);
        assert_eq!(
            r.violations,
            vec![Violation::ControllerRow {
                node: 0,
                observation: 1,
                sum: 0.5
            }]
        );
    }

    #[test]
    fn enumerate_counts() {
        // one row of two entries: 3 nonempty subsets
        let all = FscStructure::enumerate_viable(Agent::Adversary, 1, 1, 2, 100).unwrap();
        assert_eq!(all.len(), 3);
        let all = FscStructure::enumerate_viable(Agent::Adversary, 1, 2, 2, 100).unwrap();
        assert_eq!(all.len(), 9);
        assert!(all.iter().all(FscStructure::is_viable));
        assert!(FscStructure::enumerate_viable(Agent::Defender, 2, 2, 4, 1000).is_err());
    }

    #[test]
    fn doc_round_trip_keeps_params() {
        let obs = vec!["correct".to_string(), "wrong".to_string()];
        let acts = vec!["A".to_string(), "NA".to_string()];
        let st = FscStructure::fully_connected(Agent::Adversary, 1, 2, 2);
        let c = softmax_policy(&st, &[0.3, -0.2, 1.0, 0.0]).unwrap();
        let doc = FscDoc::from_fsc(&c, &obs, &acts);
        let text = serde_json::to_string(&doc).unwrap();
        let back = parse_fsc(&serde_json::from_str(&text).unwrap(), &obs, &acts).unwrap();
        assert_eq!(back, c);
    }
}
