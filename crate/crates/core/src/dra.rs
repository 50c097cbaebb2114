//! Deterministic Rabin automata over `2^AP`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::word::{letter_label, normalize_ap, LassoWord, Letter};
use crate::{Error, Result};

/// One Rabin pair: visit `finite` finitely often and `infinite` infinitely often.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RabinPair {
    pub finite: Vec<usize>,
    pub infinite: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RabinAutomaton {
    ap: Vec<String>,
    states: usize,
    initial: usize,
    /// `delta[q * 2^|AP| + letter]`
    delta: Vec<usize>,
    pairs: Vec<RabinPair>,
}

impl RabinAutomaton {
    /// Build from a complete transition function `delta(q, letter)`.
    pub fn from_fn(
        ap: &[String],
        states: usize,
        initial: usize,
        delta: impl Fn(usize, Letter) -> usize,
        pairs: Vec<RabinPair>,
    ) -> Result<Self> {
        let ap = normalize_ap(ap)?;
        let letters = 1usize << ap.len();
        let mut table = Vec::with_capacity(states * letters);
        for q in 0..states {
            for l in Letter::all(ap.len()) {
                table.push(delta(q, l));
            }
        }
        let a = RabinAutomaton {
            ap,
            states,
            initial,
            delta: table,
            pairs,
        };
        a.check_indices()?;
        Ok(a)
    }

    fn check_indices(&self) -> Result<()> {
        let dangling = |index: usize, context: &str| -> Result<()> {
            if index >= self.states {
                Err(Error::DanglingState {
                    index,
                    count: self.states,
                    context: context.to_string(),
                })
            } else {
                Ok(())
            }
        };
        if self.states == 0 {
            return Err(Error::Schema("automaton needs at least one state".into()));
        }
        dangling(self.initial, "initial state")?;
        for &to in &self.delta {
            dangling(to, "transition target")?;
        }
        if self.pairs.is_empty() {
            return Err(Error::Schema("automaton needs at least one Rabin pair".into()));
        }
        for p in &self.pairs {
            for &q in p.finite.iter().chain(&p.infinite) {
                dangling(q, "Rabin pair")?;
            }
        }
        Ok(())
    }

    pub fn ap(&self) -> &[String] {
        &self.ap
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn pairs(&self) -> &[RabinPair] {
        &self.pairs
    }

    pub fn step(&self, q: usize, letter: Letter) -> usize {
        self.delta[(q << self.ap.len()) | letter.0 as usize]
    }

    /// Rabin acceptance of the run on `prefix · cycle^ω`.
    ///
    /// The run is advanced over the cycle until a (state, cycle position)
    /// pair repeats; the states seen inside that loop are exactly the states
    /// visited infinitely often.
    pub fn accepts_lasso(&self, word: &LassoWord) -> Result<bool> {
        word.check(self.ap.len())?;
        let mut q = self.initial;
        for &l in word.prefix() {
            q = self.step(q, l);
        }
        let cycle = word.cycle();
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        let mut trace = Vec::new();
        let mut pos = 0;
        let loop_start = loop {
            if let Some(&at) = seen.get(&(q, pos)) {
                break at;
            }
            seen.insert((q, pos), trace.len());
            q = self.step(q, cycle[pos]);
            trace.push(q);
            pos = (pos + 1) % cycle.len();
        };
        let mut inf = vec![false; self.states];
        for &s in &trace[loop_start..] {
            inf[s] = true;
        }
        Ok(self
            .pairs
            .iter()
            .any(|p| p.finite.iter().all(|&s| !inf[s]) && p.infinite.iter().any(|&s| inf[s])))
    }

    /// Automaton for `GF goal & G !unsafe` over `{goal, unsafe}`.
    ///
    /// States: 0 = safe and the last letter lacked `goal`, 1 = safe and the
    /// last letter had `goal`, 2 = `unsafe` has been read (absorbing).
    /// Pairs: `[({2}, {1})]`.
    pub fn reach_avoid_recurrence() -> Self {
        let ap = vec!["goal".to_string(), "unsafe".to_string()];
        RabinAutomaton::from_fn(
            &ap,
            3,
            0,
            |q, l| {
                if q == 2 || l.contains(1) {
                    2
                } else if l.contains(0) {
                    1
                } else {
                    0
                }
            },
            vec![RabinPair {
                finite: vec![2],
                infinite: vec![1],
            }],
        )
        .expect("built-in automaton is well formed")
    }

    pub fn to_doc(&self) -> DraDoc {
        let mut transitions = Vec::new();
        for q in 0..self.states {
            for l in Letter::all(self.ap.len()) {
                transitions.push(DraTransitionDoc {
                    from: q,
                    letter: l.names(&self.ap),
                    to: self.step(q, l),
                });
            }
        }
        DraDoc {
            ap: self.ap.clone(),
            states: self.states,
            initial: self.initial,
            transitions,
            pairs: self
                .pairs
                .iter()
                .map(|p| PairDoc {
                    l: p.finite.clone(),
                    k: p.infinite.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DraTransitionDoc {
    pub from: usize,
    pub letter: Vec<String>,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairDoc {
    #[serde(rename = "L")]
    pub l: Vec<usize>,
    #[serde(rename = "K")]
    pub k: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DraDoc {
    pub ap: Vec<String>,
    pub states: usize,
    pub initial: usize,
    pub transitions: Vec<DraTransitionDoc>,
    pub pairs: Vec<PairDoc>,
}

/// Validate a document into an automaton; totality and determinism are enforced.
pub fn parse_dra(doc: &DraDoc) -> Result<RabinAutomaton> {
    let ap = normalize_ap(&doc.ap)?;
    let letters = 1usize << ap.len();
    let mut table: Vec<Option<usize>> = vec![None; doc.states * letters];
    for t in &doc.transitions {
        if t.from >= doc.states {
            return Err(Error::DanglingState {
                index: t.from,
                count: doc.states,
                context: "transition source".into(),
            });
        }
        let letter = Letter::from_names(&ap, &t.letter)?;
        let slot = &mut table[t.from * letters + letter.0 as usize];
        if slot.is_some() {
            return Err(Error::DuplicateTransition {
                state: t.from,
                letter: letter_label(letter, &ap),
            });
        }
        *slot = Some(t.to);
    }
    let mut delta = Vec::with_capacity(table.len());
    for (i, slot) in table.into_iter().enumerate() {
        match slot {
            Some(to) => delta.push(to),
            None => {
                return Err(Error::MissingTransition {
                    state: i / letters,
                    letter: letter_label(Letter((i % letters) as u32), &ap),
                })
            }
        }
    }
    let a = RabinAutomaton {
        ap,
        states: doc.states,
        initial: doc.initial,
        delta,
        pairs: doc
            .pairs
            .iter()
            .map(|p| RabinPair {
                finite: p.l.clone(),
                infinite: p.k.clone(),
            })
            .collect(),
    };
    a.check_indices()?;
    Ok(a)
}

pub fn parse_dra_json(text: &str) -> Result<RabinAutomaton> {
    let doc: DraDoc = serde_json::from_str(text)?;
    parse_dra(&doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_state_doc() -> DraDoc {
        DraDoc {
            ap: vec!["a".into()],
            states: 1,
            initial: 0,
            transitions: vec![
                DraTransitionDoc {
                    from: 0,
                    letter: vec![],
                    to: 0,
                },
                DraTransitionDoc {
                    from: 0,
                    letter: vec!["a".into()],
                    to: 0,
                },
            ],
            pairs: vec![PairDoc { l: vec![], k: vec![0] }],
        }
    }

    #[test]
    fn single_state_self_loop_accepts() {
        let a = parse_dra(&one_state_doc()).unwrap();
        let w = LassoWord::new(vec![Letter(1)], vec![Letter(0)]).unwrap();
        assert!(a.accepts_lasso(&w).unwrap());
    }

    #[test]
    fn totality_enforced() {
        let mut d = one_state_doc();
        d.transitions.pop();
        assert!(matches!(parse_dra(&d), Err(Error::MissingTransition { state: 0, .. })));
    }

    #[test]
    fn determinism_enforced() {
        let mut d = one_state_doc();
        d.transitions.push(DraTransitionDoc {
            from: 0,
            letter: vec!["a".into()],
            to: 0,
        });
        assert!(matches!(parse_dra(&d), Err(Error::DuplicateTransition { .. })));
    }

    #[test]
    fn dangling_index_rejected() {
        let mut d = one_state_doc();
        d.transitions[0].to = 3;
        assert!(matches!(parse_dra(&d), Err(Error::DanglingState { index: 3, .. })));
        let mut d = one_state_doc();
        d.pairs[0].k = vec![1];
        assert!(matches!(parse_dra(&d), Err(Error::DanglingState { .. })));
    }

    #[test]
    fn builtin_omitting_unsafe_letter_is_non_total() {
        let mut d = RabinAutomaton::reach_avoid_recurrence().to_doc();
        d.transitions
            .retain(|t| !(t.from == 0 && t.letter == vec!["unsafe".to_string()]));
        assert!(matches!(parse_dra(&d), Err(Error::MissingTransition { state: 0, .. })));
    }

    #[test]
    fn builtin_doc_round_trips() {
        let a = RabinAutomaton::reach_avoid_recurrence();
        let text = serde_json::to_string(&a.to_doc()).unwrap();
        assert_eq!(parse_dra_json(&text).unwrap(), a);
    }

    #[test]
    fn builtin_runs() {
        let a = RabinAutomaton::reach_avoid_recurrence();
        let goal = Letter(0b01);
        let unsafe_ = Letter(0b10);
        assert!(a.accepts_lasso(&LassoWord::new(vec![], vec![goal]).unwrap()).unwrap());
        assert!(!a
            .accepts_lasso(&LassoWord::new(vec![], vec![goal, unsafe_]).unwrap())
            .unwrap());
        assert!(!a
            .accepts_lasso(&LassoWord::new(vec![goal], vec![Letter::EMPTY]).unwrap())
            .unwrap());
    }

    #[test]
    fn pair_with_full_finite_set_rejects_everything() {
        let base = RabinAutomaton::reach_avoid_recurrence();
        let a = RabinAutomaton::from_fn(
            base.ap(),
            3,
            0,
            |q, l| base.step(q, l),
            vec![RabinPair {
                finite: vec![0, 1, 2],
                infinite: vec![1],
            }],
        )
        .unwrap();
        for w in LassoWord::enumerate(2, 2, 2) {
            assert!(!a.accepts_lasso(&w).unwrap());
        }
    }
}
