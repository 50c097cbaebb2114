mod common;

use common::*;
use posg_fsc::controller::{parse_fsc, Agent, FscDoc};
use posg_fsc::dra::parse_dra_json;
use posg_fsc::posg::parse_posg_json;
use posg_fsc::product::{build_product, parse_product_json};
use posg_fsc::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posg_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ap = names("p", rng.gen_range(0..=2));
        let states = rng.gen_range(1..=5);
        let g = random_posg(&mut rng, states, 2, (2, 3), &ap);
        let text = serde_json::to_string(&g.to_doc()).unwrap();
        prop_assert_eq!(parse_posg_json(&text).unwrap(), g);
    }

    #[test]
    fn dra_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ap = names("p", rng.gen_range(1..=2));
        let states = rng.gen_range(1..=4);
        let a = random_dra(&mut rng, &ap, states);
        let text = serde_json::to_string(&a.to_doc()).unwrap();
        prop_assert_eq!(parse_dra_json(&text).unwrap(), a);
    }

    #[test]
    fn product_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_product(&mut rng, 4, 3);
        let text = serde_json::to_string(&p.to_doc()).unwrap();
        prop_assert_eq!(parse_product_json(&text).unwrap(), p);
    }

    #[test]
    fn fsc_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let agent = if rng.gen_bool(0.5) { Agent::Defender } else { Agent::Adversary };
        let nodes = rng.gen_range(1..=3);
        let c = random_fsc(&mut rng, agent, nodes, 2, 3);
        let (obs, acts) = (names("o", 2), names("u", 3));
        let text = serde_json::to_string(&FscDoc::from_fsc(&c, &obs, &acts)).unwrap();
        let doc: FscDoc = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(parse_fsc(&doc, &obs, &acts).unwrap(), c);
    }
}

fn grid_posg_json() -> serde_json::Value {
    let g = posg_fsc::grid::make_grid_posg(&posg_fsc::grid::GridSpec::example()).unwrap();
    serde_json::to_value(g.to_doc()).unwrap()
}

#[test]
fn posg_rejects_bad_documents() {
    let mut v = grid_posg_json();
    v["transitions"][0]["to"][0]["p"] = serde_json::json!(0.25);
    assert!(matches!(parse_posg_json(&v.to_string()), Err(Error::Validation(_))));

    let mut v = grid_posg_json();
    v["transitions"][0]["ud"] = serde_json::json!("jump");
    assert!(matches!(parse_posg_json(&v.to_string()), Err(Error::Schema(_))));

    let mut v = grid_posg_json();
    v["transitions"][0]["s"] = serde_json::json!(99);
    assert!(matches!(
        parse_posg_json(&v.to_string()),
        Err(Error::DanglingState { index: 99, .. })
    ));

    let mut v = grid_posg_json();
    v["transitions"][0]["extra"] = serde_json::json!(1);
    assert!(matches!(parse_posg_json(&v.to_string()), Err(Error::Json(_))));

    let mut v = grid_posg_json();
    let first = v["transitions"][0].clone();
    v["transitions"].as_array_mut().unwrap().push(first);
    assert!(matches!(parse_posg_json(&v.to_string()), Err(Error::Schema(_))));

    let mut v = grid_posg_json();
    v["transitions"].as_array_mut().unwrap().pop();
    assert!(parse_posg_json(&v.to_string()).is_err());

    assert!(matches!(parse_posg_json("{"), Err(Error::Json(_))));
}

#[test]
fn violation_report_names_the_row() {
    let mut v = grid_posg_json();
    v["transitions"][0]["to"][0]["p"] = serde_json::json!(0.25);
    let msg = parse_posg_json(&v.to_string()).unwrap_err().to_string();
    assert!(msg.contains("transition row (s=0"), "{msg}");
}

#[test]
fn dra_rejects_incomplete_table() {
    let a = posg_fsc::dra::RabinAutomaton::reach_avoid_recurrence();
    let mut v = serde_json::to_value(a.to_doc()).unwrap();
    v["transitions"].as_array_mut().unwrap().pop();
    assert!(matches!(
        parse_dra_json(&v.to_string()),
        Err(Error::MissingTransition { .. })
    ));

    let mut v = serde_json::to_value(a.to_doc()).unwrap();
    let first = v["transitions"][0].clone();
    v["transitions"].as_array_mut().unwrap().push(first);
    assert!(matches!(
        parse_dra_json(&v.to_string()),
        Err(Error::DuplicateTransition { .. })
    ));
}

#[test]
fn product_rejects_dangling_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = random_posg(&mut rng, 3, 2, (2, 2), &names("a", 1));
    let a = random_dra(&mut rng, &names("a", 1), 2);
    let p = build_product(&g, &a).unwrap();
    let mut v = serde_json::to_value(p.to_doc()).unwrap();
    v["pairs"][0]["infinite"] = serde_json::json!([1000]);
    assert!(parse_product_json(&v.to_string()).is_err());
}

#[test]
fn fsc_rejects_bad_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let c = random_fsc(&mut rng, Agent::Defender, 2, 2, 2);
    let (obs, acts) = (names("o", 2), names("u", 2));
    let doc = FscDoc::from_fsc(&c, &obs, &acts);

    let mut broken = doc.clone();
    broken.entries[0].p += 0.5;
    assert!(parse_fsc(&broken, &obs, &acts).is_err());

    let mut broken = doc.clone();
    broken.entries[0].u = "missing".into();
    assert!(matches!(parse_fsc(&broken, &obs, &acts), Err(Error::Schema(_))));

    let mut broken = doc;
    broken.entries[0].g2 = 7;
    assert!(parse_fsc(&broken, &obs, &acts).is_err());
}
