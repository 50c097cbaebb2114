//! LTL formulas: parsing, printing and evaluation on lasso words.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! impl   := or ( "->" impl )?
//! or     := and ( "|" and )*
//! and    := until ( "&" until )*
//! until  := unary ( "U" until )?
//! unary  := ("!" | "X" | "F" | "G") unary | atom
//! atom   := "true" | ident | "(" impl ")"
//! ```
//!
//! `->` and `U` associate to the right; `&` and `|` to the left.

use std::fmt;

use crate::word::LassoWord;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    Prop(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
}

impl Formula {
    pub fn prop(name: &str) -> Formula {
        Formula::Prop(name.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn next(f: Formula) -> Formula {
        Formula::Next(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn eventually(f: Formula) -> Formula {
        Formula::Eventually(Box::new(f))
    }

    pub fn always(f: Formula) -> Formula {
        Formula::Always(Box::new(f))
    }

    /// Rewrite derived operators into `true`, props, `!`, `&`, `X`, `U`.
    pub fn desugar(&self) -> Formula {
        use Formula::*;
        match self {
            True => True,
            Prop(p) => Prop(p.clone()),
            Not(a) => Formula::not(a.desugar()),
            And(a, b) => Formula::and(a.desugar(), b.desugar()),
            Or(a, b) => Formula::not(Formula::and(Formula::not(a.desugar()), Formula::not(b.desugar()))),
            Implies(a, b) => Formula::or(Formula::not((**a).clone()), (**b).clone()).desugar(),
            Next(a) => Formula::next(a.desugar()),
            Until(a, b) => Formula::until(a.desugar(), b.desugar()),
            Eventually(a) => Formula::until(True, a.desugar()),
            Always(a) => Formula::not(Formula::until(True, Formula::not(a.desugar()))),
        }
    }

    pub fn propositions(&self) -> Vec<String> {
        fn walk(f: &Formula, out: &mut Vec<String>) {
            use Formula::*;
            match f {
                True => {}
                Prop(p) => out.push(p.clone()),
                Not(a) | Next(a) | Eventually(a) | Always(a) => walk(a, out),
                And(a, b) | Or(a, b) | Implies(a, b) | Until(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort();
        out.dedup();
        out
    }

    /// The formula `GF goal & G !unsafe`.
    pub fn reach_avoid_recurrence() -> Formula {
        Formula::and(
            Formula::always(Formula::eventually(Formula::prop("goal"))),
            Formula::always(Formula::not(Formula::prop("unsafe"))),
        )
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Formula::*;
        match self {
            True => write!(f, "true"),
            Prop(p) => write!(f, "{p}"),
            Not(a) => write!(f, "!{a}"),
            Next(a) => write!(f, "X {a}"),
            Eventually(a) => write!(f, "F {a}"),
            Always(a) => write!(f, "G {a}"),
            And(a, b) => write!(f, "({a} & {b})"),
            Or(a, b) => write!(f, "({a} | {b})"),
            Implies(a, b) => write!(f, "({a} -> {b})"),
            Until(a, b) => write!(f, "({a} U {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    True,
    Not,
    Next,
    Eventually,
    Always,
    Until,
    And,
    Or,
    Implies,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '!' => Tok::Not,
            '&' => Tok::And,
            '|' => Tok::Or,
            '-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    i += 1;
                    Tok::Implies
                } else {
                    return Err(Error::Syntax {
                        pos: start,
                        message: "expected `->`".into(),
                    });
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i + 1 < bytes.len() && ((bytes[i + 1] as char).is_ascii_alphanumeric() || bytes[i + 1] == b'_') {
                    i += 1;
                }
                match &text[start..=i] {
                    "true" => Tok::True,
                    "X" => Tok::Next,
                    "F" => Tok::Eventually,
                    "G" => Tok::Always,
                    "U" => Tok::Until,
                    word => Tok::Ident(word.to_string()),
                }
            }
            other => {
                return Err(Error::Syntax {
                    pos: start,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    ap: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn implication(&mut self) -> Result<Formula> {
        let lhs = self.disjunction()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula> {
        let mut lhs = self.conjunction()?;
        while self.eat(&Tok::Or) {
            lhs = Formula::or(lhs, self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut lhs = self.until()?;
        while self.eat(&Tok::And) {
            lhs = Formula::and(lhs, self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula> {
        let lhs = self.unary()?;
        if self.eat(&Tok::Until) {
            let rhs = self.until()?;
            return Ok(Formula::until(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula> {
        let wrap: Option<fn(Formula) -> Formula> = match self.peek() {
            Some(Tok::Not) => Some(Formula::not),
            Some(Tok::Next) => Some(Formula::next),
            Some(Tok::Eventually) => Some(Formula::eventually),
            Some(Tok::Always) => Some(Formula::always),
            _ => None,
        };
        match wrap {
            Some(w) => {
                self.at += 1;
                Ok(w(self.unary()?))
            }
            None => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::True) => {
                self.at += 1;
                Ok(Formula::True)
            }
            Some(Tok::Ident(name)) => {
                if !self.ap.contains(&name) {
                    return Err(Error::UnknownProposition(name));
                }
                self.at += 1;
                Ok(Formula::Prop(name))
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let f = self.implication()?;
                if !self.eat(&Tok::RParen) {
                    return Err(Error::Syntax {
                        pos: self.pos(),
                        message: "expected `)`".into(),
                    });
                }
                Ok(f)
            }
            Some(t) => Err(Error::Syntax {
                pos,
                message: format!("unexpected token {t:?}"),
            }),
            None => Err(Error::Syntax {
                pos,
                message: "unexpected end of input".into(),
            }),
        }
    }
}

/// Parse `text` against the declared proposition set.
pub fn parse_ltl(text: &str, ap: &[String]) -> Result<Formula> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(Error::Syntax {
            pos: 0,
            message: "empty formula".into(),
        });
    }
    let mut p = Parser {
        toks,
        at: 0,
        end: text.len(),
        ap,
    };
    let f = p.implication()?;
    if p.at != p.toks.len() {
        return Err(Error::Syntax {
            pos: p.pos(),
            message: "trailing input".into(),
        });
    }
    Ok(f)
}

/// Decide `word ⊨ formula`. Letters index into the sorted list `ap`.
///
/// Each subformula is tabulated over the `|prefix| + |cycle|` canonical
/// positions. `U` is the least fixpoint of `v[p] = b[p] ∨ (a[p] ∧ v[succ p])`.
pub fn eval_lasso(formula: &Formula, ap: &[String], word: &LassoWord) -> Result<bool> {
    word.check(ap.len())?;
    let core = formula.desugar();
    let table = tabulate(&core, ap, word)?;
    Ok(table[0])
}

fn tabulate(f: &Formula, ap: &[String], w: &LassoWord) -> Result<Vec<bool>> {
    let n = w.positions();
    Ok(match f {
        Formula::True => vec![true; n],
        Formula::Prop(name) => {
            let idx = ap
                .iter()
                .position(|a| a == name)
                .ok_or_else(|| Error::UnknownProposition(name.clone()))?;
            (0..n).map(|p| w.letter_at(p).contains(idx)).collect()
        }
        Formula::Not(a) => tabulate(a, ap, w)?.into_iter().map(|v| !v).collect(),
        Formula::And(a, b) => {
            let (a, b) = (tabulate(a, ap, w)?, tabulate(b, ap, w)?);
            a.iter().zip(&b).map(|(x, y)| *x && *y).collect()
        }
        Formula::Next(a) => {
            let a = tabulate(a, ap, w)?;
            (0..n).map(|p| a[w.successor(p)]).collect()
        }
        Formula::Until(a, b) => {
            let (a, b) = (tabulate(a, ap, w)?, tabulate(b, ap, w)?);
            let mut v = vec![false; n];
            loop {
                let mut changed = false;
                for p in (0..n).rev() {
                    let next = b[p] || (a[p] && v[w.successor(p)]);
                    if next != v[p] {
                        v[p] = next;
                        changed = true;
                    }
                }
                if !changed {
                    break v;
                }
            }
        }
        other => {
            return tabulate(&other.desugar(), ap, w);
        }
    })
}
