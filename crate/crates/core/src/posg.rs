//! Partially observable stochastic games: the data model, validation and
//! the JSON document format.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::report::{check_probability, ValidationReport, Violation, STOCHASTIC_TOLERANCE};
use crate::word::{normalize_ap, Letter};
use crate::{Error, Result};

/// A sparse probability row, sorted by target index, zero entries omitted.
pub type Row = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct Posg {
    pub(crate) states: usize,
    pub(crate) initial: usize,
    pub(crate) def_actions: Vec<String>,
    pub(crate) adv_actions: Vec<String>,
    pub(crate) def_observations: Vec<String>,
    pub(crate) adv_observations: Vec<String>,
    pub(crate) ap: Vec<String>,
    pub(crate) labels: Vec<Letter>,
    /// Indexed by `(s * |U_def| + u_def) * |U_adv| + u_adv`.
    pub(crate) transitions: Vec<Row>,
    /// `O_def(o | s)` at `s * |O_def| + o`.
    pub(crate) def_obs: Vec<f64>,
    pub(crate) adv_obs: Vec<f64>,
}

/// Unvalidated constituents of a [`Posg`].
#[derive(Debug, Clone, Default)]
pub struct PosgParts {
    pub states: usize,
    pub initial: usize,
    pub def_actions: Vec<String>,
    pub adv_actions: Vec<String>,
    pub def_observations: Vec<String>,
    pub adv_observations: Vec<String>,
    pub ap: Vec<String>,
    pub labels: Vec<Letter>,
    pub transitions: Vec<Row>,
    pub def_obs: Vec<f64>,
    pub adv_obs: Vec<f64>,
}

impl Posg {
    /// Assemble a game, checking shapes only. Stochasticity is left to
    /// [`validate_posg`].
    pub fn from_parts(parts: PosgParts) -> Result<Posg> {
        let PosgParts {
            states,
            initial,
            def_actions,
            adv_actions,
            def_observations,
            adv_observations,
            ap,
            labels,
            mut transitions,
            def_obs,
            adv_obs,
        } = parts;
        if states == 0 || def_actions.is_empty() || adv_actions.is_empty() {
            return Err(Error::Dimension(
                "a game needs at least one state and one action per agent".into(),
            ));
        }
        if def_observations.is_empty() || adv_observations.is_empty() {
            return Err(Error::Dimension("each agent needs at least one observation".into()));
        }
        if initial >= states {
            return Err(Error::DanglingState {
                index: initial,
                count: states,
                context: "initial state".into(),
            });
        }
        let n_rows = states * def_actions.len() * adv_actions.len();
        if transitions.len() != n_rows {
            return Err(Error::Dimension(format!(
                "expected {n_rows} transition rows, got {}",
                transitions.len()
            )));
        }
        if labels.len() != states {
            return Err(Error::Dimension("one label per state required".into()));
        }
        if def_obs.len() != states * def_observations.len() || adv_obs.len() != states * adv_observations.len() {
            return Err(Error::Dimension("observation kernel shape".into()));
        }
        let sorted = normalize_ap(&ap)?;
        if sorted != ap {
            return Err(Error::Schema("atomic propositions must be sorted and unique".into()));
        }
        for l in &labels {
            l.check(ap.len())?;
        }
        for row in &mut transitions {
            row.retain(|&(_, p)| p != 0.0);
            row.sort_by_key(|&(t, _)| t);
            for &(t, _) in row.iter() {
                if t >= states {
                    return Err(Error::DanglingState {
                        index: t,
                        count: states,
                        context: "transition target".into(),
                    });
                }
            }
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::Schema("duplicate target in a transition row".into()));
            }
        }
        Ok(Posg {
            states,
            initial,
            def_actions,
            adv_actions,
            def_observations,
            adv_observations,
            ap,
            labels,
            transitions,
            def_obs,
            adv_obs,
        })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn def_actions(&self) -> &[String] {
        &self.def_actions
    }

    pub fn adv_actions(&self) -> &[String] {
        &self.adv_actions
    }

    pub fn def_observations(&self) -> &[String] {
        &self.def_observations
    }

    pub fn adv_observations(&self) -> &[String] {
        &self.adv_observations
    }

    pub fn ap(&self) -> &[String] {
        &self.ap
    }

    pub fn label(&self, s: usize) -> Letter {
        self.labels[s]
    }

    fn row_index(&self, s: usize, ud: usize, ua: usize) -> usize {
        (s * self.def_actions.len() + ud) * self.adv_actions.len() + ua
    }

    /// `T(· | s, u_def, u_adv)` as a sparse row.
    pub fn row(&self, s: usize, ud: usize, ua: usize) -> &[(usize, f64)] {
        &self.transitions[self.row_index(s, ud, ua)]
    }

    /// `T(s2 | s, u_def, u_adv)`.
    pub fn prob(&self, s: usize, ud: usize, ua: usize, s2: usize) -> f64 {
        let row = self.row(s, ud, ua);
        row.binary_search_by_key(&s2, |&(t, _)| t)
            .map(|i| row[i].1)
            .unwrap_or(0.0)
    }

    pub fn obs_def(&self, s: usize, o: usize) -> f64 {
        self.def_obs[s * self.def_observations.len() + o]
    }

    pub fn obs_adv(&self, s: usize, o: usize) -> f64 {
        self.adv_obs[s * self.adv_observations.len() + o]
    }

    pub fn obs_def_row(&self, s: usize) -> &[f64] {
        let n = self.def_observations.len();
        &self.def_obs[s * n..(s + 1) * n]
    }

    pub fn obs_adv_row(&self, s: usize) -> &[f64] {
        let n = self.adv_observations.len();
        &self.adv_obs[s * n..(s + 1) * n]
    }

    pub fn to_doc(&self) -> PosgDoc {
        let mut labels = BTreeMap::new();
        for s in 0..self.states {
            if self.labels[s] != Letter::EMPTY {
                labels.insert(s.to_string(), self.labels[s].names(&self.ap));
            }
        }
        let mut transitions = Vec::with_capacity(self.transitions.len());
        for s in 0..self.states {
            for (ud, ud_name) in self.def_actions.iter().enumerate() {
                for (ua, ua_name) in self.adv_actions.iter().enumerate() {
                    transitions.push(TransitionDoc {
                        s,
                        ud: ud_name.clone(),
                        ua: ua_name.clone(),
                        to: self.row(s, ud, ua).iter().map(|&(s2, p)| TargetDoc { s2, p }).collect(),
                    });
                }
            }
        }
        let obs_entries = |kernel: &[f64], names: &[String]| {
            let mut out = Vec::new();
            for s in 0..self.states {
                for (o, name) in names.iter().enumerate() {
                    let p = kernel[s * names.len() + o];
                    if p != 0.0 {
                        out.push(ObsDoc { s, o: name.clone(), p });
                    }
                }
            }
            out
        };
        PosgDoc {
            states: self.states,
            initial: self.initial,
            u_def: self.def_actions.clone(),
            u_adv: self.adv_actions.clone(),
            obs_def: self.def_observations.clone(),
            obs_adv: self.adv_observations.clone(),
            ap: self.ap.clone(),
            labels,
            transitions,
            obs: ObsKernelsDoc {
                def: obs_entries(&self.def_obs, &self.def_observations),
                adv: obs_entries(&self.adv_obs, &self.adv_observations),
            },
        }
    }
}

/// Check every stochasticity constraint; an empty report means valid.
pub fn validate_posg(g: &Posg) -> ValidationReport {
    let mut report = ValidationReport::default();
    for s in 0..g.states {
        for (ud, ud_name) in g.def_actions.iter().enumerate() {
            for (ua, ua_name) in g.adv_actions.iter().enumerate() {
                let row = g.row(s, ud, ua);
                for &(s2, p) in row {
                    check_probability(&mut report, || format!("T({s2} | {s}, {ud_name}, {ua_name})"), p);
                }
                let sum: f64 = row.iter().map(|&(_, p)| p).sum();
                if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
                    report.push(Violation::TransitionRow {
                        state: s,
                        def_action: ud_name.clone(),
                        adv_action: ua_name.clone(),
                        sum,
                    });
                }
            }
        }
        for (agent, row, names) in [
            ("def", g.obs_def_row(s), &g.def_observations),
            ("adv", g.obs_adv_row(s), &g.adv_observations),
        ] {
            for (o, &p) in row.iter().enumerate() {
                check_probability(&mut report, || format!("O_{agent}({} | {s})", names[o]), p);
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
                report.push(Violation::ObservationRow {
                    agent: agent.to_string(),
                    state: s,
                    sum,
                });
            }
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetDoc {
    pub s2: usize,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionDoc {
    pub s: usize,
    pub ud: String,
    pub ua: String,
    pub to: Vec<TargetDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObsDoc {
    pub s: usize,
    pub o: String,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObsKernelsDoc {
    pub def: Vec<ObsDoc>,
    pub adv: Vec<ObsDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosgDoc {
    pub states: usize,
    pub initial: usize,
    pub u_def: Vec<String>,
    pub u_adv: Vec<String>,
    pub obs_def: Vec<String>,
    pub obs_adv: Vec<String>,
    pub ap: Vec<String>,
    #[serde(default)]
    pub labels: BTreeMap<String, Vec<String>>,
    pub transitions: Vec<TransitionDoc>,
    pub obs: ObsKernelsDoc,
}

fn name_index(names: &[String], name: &str, what: &str) -> Result<usize> {
    names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| Error::Schema(format!("unknown {what} `{name}`")))
}

fn check_unique(names: &[String], what: &str) -> Result<()> {
    let mut sorted = names.to_vec();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Schema(format!("duplicate {what} name")));
    }
    Ok(())
}

/// Read a game from its document form; fails closed on any violation.
pub fn parse_posg(doc: &PosgDoc) -> Result<Posg> {
    let ap = normalize_ap(&doc.ap)?;
    check_unique(&doc.u_def, "defender action")?;
    check_unique(&doc.u_adv, "adversary action")?;
    check_unique(&doc.obs_def, "defender observation")?;
    check_unique(&doc.obs_adv, "adversary observation")?;

    let mut labels = vec![Letter::EMPTY; doc.states];
    for (key, names) in &doc.labels {
        let s: usize = key
            .parse()
            .map_err(|_| Error::Schema(format!("label key `{key}` is not a state index")))?;
        if s >= doc.states {
            return Err(Error::DanglingState {
                index: s,
                count: doc.states,
                context: "labels".into(),
            });
        }
        labels[s] = Letter::from_names(&ap, names)?;
    }

    let (nud, nua) = (doc.u_def.len(), doc.u_adv.len());
    let mut transitions: Vec<Option<Row>> = vec![None; doc.states * nud * nua];
    for t in &doc.transitions {
        if t.s >= doc.states {
            return Err(Error::DanglingState {
                index: t.s,
                count: doc.states,
                context: "transition source".into(),
            });
        }
        let ud = name_index(&doc.u_def, &t.ud, "defender action")?;
        let ua = name_index(&doc.u_adv, &t.ua, "adversary action")?;
        let slot = &mut transitions[(t.s * nud + ud) * nua + ua];
        if slot.is_some() {
            return Err(Error::Schema(format!(
                "transition row (s={}, ud={}, ua={}) given twice",
                t.s, t.ud, t.ua
            )));
        }
        *slot = Some(t.to.iter().map(|e| (e.s2, e.p)).collect());
    }

    let read_obs = |entries: &[ObsDoc], names: &[String], agent: &str| -> Result<Vec<f64>> {
        let mut kernel = vec![0.0; doc.states * names.len()];
        let mut seen = vec![false; kernel.len()];
        for e in entries {
            if e.s >= doc.states {
                return Err(Error::DanglingState {
                    index: e.s,
                    count: doc.states,
                    context: format!("{agent} observations"),
                });
            }
            let o = name_index(names, &e.o, &format!("{agent} observation"))?;
            let i = e.s * names.len() + o;
            if seen[i] {
                return Err(Error::Schema(format!(
                    "{agent} observation ({}, {}) given twice",
                    e.s, e.o
                )));
            }
            seen[i] = true;
            kernel[i] = e.p;
        }
        Ok(kernel)
    };

    let g = Posg::from_parts(PosgParts {
        states: doc.states,
        initial: doc.initial,
        def_actions: doc.u_def.clone(),
        adv_actions: doc.u_adv.clone(),
        def_observations: doc.obs_def.clone(),
        adv_observations: doc.obs_adv.clone(),
        ap,
        labels,
        transitions: transitions.into_iter().map(Option::unwrap_or_default).collect(),
        def_obs: read_obs(&doc.obs.def, &doc.obs_def, "defender")?,
        adv_obs: read_obs(&doc.obs.adv, &doc.obs_adv, "adversary")?,
    })?;
    validate_posg(&g).into_result()?;
    Ok(g)
}

pub fn parse_posg_json(text: &str) -> Result<Posg> {
    let doc: PosgDoc = serde_json::from_str(text)?;
    parse_posg(&doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_doc() -> PosgDoc {
        PosgDoc {
            states: 1,
            initial: 0,
            u_def: vec!["a".into()],
            u_adv: vec!["b".into()],
            obs_def: vec!["o".into()],
            obs_adv: vec!["o".into()],
            ap: vec![],
            labels: BTreeMap::new(),
            transitions: vec![TransitionDoc {
                s: 0,
                ud: "a".into(),
                ua: "b".into(),
                to: vec![TargetDoc { s2: 0, p: 1.0 }],
            }],
            obs: ObsKernelsDoc {
                def: vec![ObsDoc {
                    s: 0,
                    o: "o".into(),
                    p: 1.0,
                }],
                adv: vec![ObsDoc {
                    s: 0,
                    o: "o".into(),
                    p: 1.0,
                }],
            },
        }
    }

    #[test]
    fn minimal_document_is_valid() {
        let g = parse_posg(&minimal_doc()).unwrap();
        assert_eq!(g.states(), 1);
        assert_eq!(g.row(0, 0, 0), &[(0, 1.0)]);
    }

    #[test]
    fn unknown_action_is_schema_error() {
        let mut d = minimal_doc();
        d.transitions[0].ud = "zz".into();
        assert!(matches!(parse_posg(&d), Err(Error::Schema(m)) if m.contains("zz")));
    }

    #[test]
    fn short_row_is_reported() {
        let mut d = minimal_doc();
        d.transitions[0].to[0].p = 0.9;
        match parse_posg(&d) {
            Err(Error::Validation(r)) => {
                assert_eq!(r.violations.len(), 1);
                assert!(matches!(
                    &r.violations[0],
                    Violation::TransitionRow { state: 0, def_action, adv_action, sum }
                        if def_action == "a" && adv_action == "b" && (*sum - 0.9).abs() < 1e-12
                ));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn noisy_observation_kernel_is_valid() {
        let mut d = minimal_doc();
        d.obs_def = vec!["correct".into(), "wrong".into()];
        d.obs.def = vec![
            ObsDoc {
                s: 0,
                o: "correct".into(),
                p: 0.8,
            },
            ObsDoc {
                s: 0,
                o: "wrong".into(),
                p: 0.2,
            },
        ];
        let g = parse_posg(&d).unwrap();
        assert!(validate_posg(&g).is_empty());
    }

    #[test]
    fn missing_row_fails_closed() {
        let mut d = minimal_doc();
        d.transitions.clear();
        assert!(matches!(parse_posg(&d), Err(Error::Validation(_))));
    }
}
