//! Letters over an atomic-proposition set and ultimately periodic words.

use std::fmt;

use crate::{Error, Result};

/// Upper bound on |AP|; letters are stored as bitmasks.
pub const MAX_PROPOSITIONS: usize = 16;

/// A subset of the atomic propositions, bit `i` set iff `ap[i]` holds.
///
/// Proposition lists are kept sorted everywhere in the crate, so a letter is
/// meaningful only together with the sorted list it indexes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Letter(pub u32);

impl Letter {
    pub const EMPTY: Letter = Letter(0);

    pub fn contains(self, prop: usize) -> bool {
        self.0 & (1 << prop) != 0
    }

    pub fn with(self, prop: usize) -> Letter {
        Letter(self.0 | (1 << prop))
    }

    /// Build a letter from proposition names against a sorted AP list.
    pub fn from_names<S: AsRef<str>>(ap: &[String], names: &[S]) -> Result<Letter> {
        let mut letter = Letter::EMPTY;
        for name in names {
            let name = name.as_ref();
            let idx = ap
                .iter()
                .position(|a| a == name)
                .ok_or_else(|| Error::UnknownProposition(name.to_string()))?;
            letter = letter.with(idx);
        }
        Ok(letter)
    }

    /// Sorted proposition names (the serialized form of a letter).
    pub fn names(self, ap: &[String]) -> Vec<String> {
        ap.iter()
            .enumerate()
            .filter(|(i, _)| self.contains(*i))
            .map(|(_, a)| a.clone())
            .collect()
    }

    pub fn check(self, ap_count: usize) -> Result<()> {
        if ap_count < 32 && self.0 >> ap_count != 0 {
            return Err(Error::LetterOutOfRange {
                letter: self.0,
                ap_count,
            });
        }
        Ok(())
    }

    /// All letters of `2^AP` in ascending bitmask order.
    pub fn all(ap_count: usize) -> impl Iterator<Item = Letter> {
        (0..1u32 << ap_count).map(Letter)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#b}", self.0)
    }
}

/// Sort and deduplicate a proposition list, rejecting oversized sets.
pub fn normalize_ap(ap: &[String]) -> Result<Vec<String>> {
    let mut v = ap.to_vec();
    v.sort();
    v.dedup();
    if v.len() > MAX_PROPOSITIONS {
        return Err(Error::Schema(format!(
            "at most {MAX_PROPOSITIONS} atomic propositions are supported"
        )));
    }
    Ok(v)
}

pub fn letter_label(letter: Letter, ap: &[String]) -> String {
    format!("{{{}}}", letter.names(ap).join(","))
}

/// The infinite word `prefix · cycle^ω`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LassoWord {
    prefix: Vec<Letter>,
    cycle: Vec<Letter>,
}

impl LassoWord {
    pub fn new(prefix: Vec<Letter>, cycle: Vec<Letter>) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::Schema("lasso cycle must be nonempty".into()));
        }
        Ok(LassoWord { prefix, cycle })
    }

    pub fn prefix(&self) -> &[Letter] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[Letter] {
        &self.cycle
    }

    /// Number of distinct positions `|prefix| + |cycle|`.
    pub fn positions(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    /// Successor of a canonical position; the last cycle position wraps.
    pub fn successor(&self, pos: usize) -> usize {
        let next = pos + 1;
        if next < self.positions() {
            next
        } else {
            self.prefix.len()
        }
    }

    /// Letter at an arbitrary position of the infinite word.
    pub fn letter_at(&self, pos: usize) -> Letter {
        if pos < self.prefix.len() {
            self.prefix[pos]
        } else {
            self.cycle[(pos - self.prefix.len()) % self.cycle.len()]
        }
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        self.prefix.iter().chain(self.cycle.iter()).copied()
    }

    pub fn check(&self, ap_count: usize) -> Result<()> {
        self.letters().try_for_each(|l| l.check(ap_count))
    }

    /// Every lasso over `2^AP` with `|prefix| <= max_prefix` and
    /// `1 <= |cycle| <= max_cycle`.
    pub fn enumerate(ap_count: usize, max_prefix: usize, max_cycle: usize) -> Vec<LassoWord> {
        let prefixes: Vec<Vec<Letter>> = (0..=max_prefix).flat_map(|len| sequences(ap_count, len)).collect();
        let cycles: Vec<Vec<Letter>> = (1..=max_cycle).flat_map(|len| sequences(ap_count, len)).collect();
        let mut out = Vec::with_capacity(prefixes.len() * cycles.len());
        for p in &prefixes {
            for c in &cycles {
                out.push(LassoWord {
                    prefix: p.clone(),
                    cycle: c.clone(),
                });
            }
        }
        out
    }
}

fn sequences(ap_count: usize, len: usize) -> Vec<Vec<Letter>> {
    let alphabet = 1usize << ap_count;
    let total = alphabet.pow(len as u32);
    (0..total)
        .map(|mut code| {
            (0..len)
                .map(|_| {
                    let l = Letter((code % alphabet) as u32);
                    code /= alphabet;
                    l
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        let ap = vec!["goal".to_string(), "unsafe".to_string()];
        let l = Letter::from_names(&ap, &["unsafe"]).unwrap();
        assert_eq!(l, Letter(0b10));
        assert_eq!(l.names(&ap), vec!["unsafe".to_string()]);
        assert!(Letter::from_names(&ap, &["nope"]).is_err());
    }

    #[test]
    fn lasso_positions_wrap() {
        let w = LassoWord::new(vec![Letter(1)], vec![Letter(2), Letter(3)]).unwrap();
        assert_eq!(w.successor(0), 1);
        assert_eq!(w.successor(2), 1);
        assert_eq!(w.letter_at(5), Letter(2));
        assert!(LassoWord::new(vec![], vec![]).is_err());
    }

    #[test]
    fn enumeration_count() {
        // 4 letters: prefixes 1+4+16, cycles 4+16
        assert_eq!(LassoWord::enumerate(2, 2, 2).len(), 21 * 20);
    }
}
