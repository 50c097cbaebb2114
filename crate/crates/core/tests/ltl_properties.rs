use posg_fsc::dra::{parse_dra_json, RabinAutomaton};
use posg_fsc::ltl::{eval_lasso, parse_ltl, Formula};
use posg_fsc::word::{LassoWord, Letter};
use proptest::prelude::*;

fn ap() -> Vec<String> {
    vec!["a".into(), "b".into(), "c".into()]
}

fn formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        Just(Formula::True),
        prop::sample::select(vec!["a", "b", "c"]).prop_map(Formula::prop),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            inner.clone().prop_map(Formula::next),
            inner.clone().prop_map(Formula::eventually),
            inner.clone().prop_map(Formula::always),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Formula::and(x, y)),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Formula::or(x, y)),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Formula::implies(x, y)),
            (inner.clone(), inner).prop_map(|(x, y)| Formula::until(x, y)),
        ]
    })
}

fn lasso(ap_count: usize) -> impl Strategy<Value = LassoWord> {
    let letter = (0..1u32 << ap_count).prop_map(Letter);
    (
        prop::collection::vec(letter.clone(), 0..4),
        prop::collection::vec(letter, 1..4),
    )
        .prop_map(|(p, c)| LassoWord::new(p, c).unwrap())
}

/// Direct recursive semantics on positions of the infinite word. Positions
/// past the first cycle repeat, so every existential search is bounded by
/// one full period from the current position.
fn holds(f: &Formula, ap: &[String], w: &LassoWord, i: usize) -> bool {
    let canon = |k: usize| {
        if k < w.prefix().len() {
            k
        } else {
            w.prefix().len() + (k - w.prefix().len()) % w.cycle().len()
        }
    };
    let letter = |k: usize| {
        let k = canon(k);
        if k < w.prefix().len() {
            w.prefix()[k]
        } else {
            w.cycle()[k - w.prefix().len()]
        }
    };
    let horizon = i + w.prefix().len() + w.cycle().len() + 1;
    match f {
        Formula::True => true,
        Formula::Prop(name) => letter(i).contains(ap.iter().position(|x| x == name).unwrap()),
        Formula::Not(x) => !holds(x, ap, w, i),
        Formula::And(x, y) => holds(x, ap, w, i) && holds(y, ap, w, i),
        Formula::Or(x, y) => holds(x, ap, w, i) || holds(y, ap, w, i),
        Formula::Implies(x, y) => !holds(x, ap, w, i) || holds(y, ap, w, i),
        Formula::Next(x) => holds(x, ap, w, i + 1),
        Formula::Until(x, y) => (i..horizon).any(|j| holds(y, ap, w, j) && (i..j).all(|k| holds(x, ap, w, k))),
        Formula::Eventually(x) => (i..horizon).any(|j| holds(x, ap, w, j)),
        Formula::Always(x) => (i..horizon).all(|j| holds(x, ap, w, j)),
    }
}

proptest! {
    #[test]
    fn print_then_parse_is_identity(f in formula()) {
        let text = f.to_string();
        prop_assert_eq!(parse_ltl(&text, &ap()).unwrap(), f);
    }

    #[test]
    fn eval_agrees_with_recursive_semantics(f in formula(), w in lasso(3)) {
        prop_assert_eq!(eval_lasso(&f, &ap(), &w).unwrap(), holds(&f, &ap(), &w, 0));
    }

    #[test]
    fn eval_invariant_under_unrolling(f in formula(), w in lasso(3)) {
        let mut prefix = w.prefix().to_vec();
        prefix.push(w.cycle()[0]);
        let mut cycle = w.cycle()[1..].to_vec();
        cycle.push(w.cycle()[0]);
        let rotated = LassoWord::new(prefix, cycle).unwrap();
        prop_assert_eq!(eval_lasso(&f, &ap(), &w).unwrap(), eval_lasso(&f, &ap(), &rotated).unwrap());
    }

    #[test]
    fn desugaring_preserves_meaning(f in formula(), w in lasso(3)) {
        prop_assert_eq!(eval_lasso(&f, &ap(), &w).unwrap(), eval_lasso(&f.desugar(), &ap(), &w).unwrap());
    }
}

#[test]
fn builtin_automaton_matches_formula_exhaustively() {
    let a = RabinAutomaton::reach_avoid_recurrence();
    let f = Formula::reach_avoid_recurrence();
    for w in LassoWord::enumerate(2, 3, 3) {
        assert_eq!(
            a.accepts_lasso(&w).unwrap(),
            eval_lasso(&f, a.ap(), &w).unwrap(),
            "{w:?}"
        );
    }
}

#[test]
fn builtin_automaton_is_total_after_parse() {
    let a = RabinAutomaton::reach_avoid_recurrence();
    let text = serde_json::to_string(&a.to_doc()).unwrap();
    let b = parse_dra_json(&text).unwrap();
    for q in 0..b.states() {
        for l in Letter::all(b.ap().len()) {
            assert!(b.step(q, l) < b.states());
        }
    }
}

#[test]
fn eval_examples_on_named_words() {
    let ap = vec!["goal".to_string(), "unsafe".to_string()];
    let f = parse_ltl("G F goal & G !unsafe", &ap).unwrap();
    let goal = Letter(0b01);
    let unsafe_ = Letter(0b10);
    let w = |p: Vec<Letter>, c: Vec<Letter>| LassoWord::new(p, c).unwrap();
    assert!(eval_lasso(&f, &ap, &w(vec![], vec![Letter::EMPTY, goal])).unwrap());
    assert!(!eval_lasso(&f, &ap, &w(vec![unsafe_], vec![goal])).unwrap());
    assert!(!eval_lasso(&f, &ap, &w(vec![goal], vec![Letter::EMPTY])).unwrap());
}
