use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::automata::{canonical_lassos, random_automaton, universal, LassoChecker};
use crate::complement::{complement_uca, ComplementOpts};
use crate::mdp::random_mdp;

fn gf_b() -> Automaton {
    let mut a = Automaton::new(Kind::Uca, Alphabet::new(["b"]).unwrap(), 2);
    a.initial = vec![0];
    a.add_edge(0, 0, 0, false);
    a.add_edge(0, 1, 0, false);
    a.add_edge(0, 0, 1, false);
    a.add_edge(1, 0, 1, true);
    a
}

fn fair_coin() -> Mdp {
    let mut m = Mdp::new(vec!["b".into()]);
    let s1 = m.add_state(1);
    let s0 = m.add_state(0);
    let flip = m.action_id("flip");
    for s in [s1, s0] {
        let outcomes =
            vec![Outcome { target: s1, prob: 0.5, reward: 0.0 }, Outcome { target: s0, prob: 0.5, reward: 0.0 }];
        m.add_choice(s, Choice { action: flip, outcomes, letter: None, accepting: false });
    }
    m
}

#[test]
fn accepting_self_loop_collapses_the_root() {
    let step = HistoryTree::initial(1).successor(|s| s, |s| s);
    assert_eq!(step.tree, HistoryTree::initial(1));
    assert_eq!(step.collapsing, vec![Vec::<u8>::new()]);
    assert_eq!(step.stable, vec![Vec::<u8>::new()]);
    assert!(step.removed.is_empty());
}

#[test]
fn younger_siblings_lose_shared_states_and_get_renamed() {
    // Root {0,1,2} with children 0:{0}, 1:{1}; every state moves to itself
    // and state 0 also to 1, so child 0 claims state 1 first.
    let tree = HistoryTree::initial(0b111).successor(|s| s, |s| s & 0b001);
    assert_eq!(tree.tree.nodes(), &[(vec![], 0b111), (vec![0], 0b001)]);
    let grown = tree.tree.successor(|s| s, |s| s & 0b010);
    assert_eq!(grown.tree.nodes(), &[(vec![], 0b111), (vec![0], 0b001), (vec![1], 0b010)]);
    let post = |s: u64| if s & 1 == 1 { s | 0b010 } else { s };
    let step = grown.tree.successor(post, |_| 0);
    assert_eq!(step.tree.nodes(), &[(vec![], 0b111), (vec![0], 0b011)]);
    assert_eq!(step.removed, vec![vec![1u8]]);
    assert!(step.stable.contains(&vec![0]));
    assert!(step.tree.is_valid());
    // Removing child 0 instead renames child 1 to 0, which is unstable.
    let step = grown.tree.successor(|s| s & 0b110, |_| 0);
    assert_eq!(step.tree.nodes(), &[(vec![], 0b110), (vec![0], 0b010)]);
    assert_eq!(step.stable, vec![Vec::<u8>::new()]);
}

#[test]
fn reachable_trees_are_valid_and_dsa_matches_uca() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let alpha = Alphabet::new(["a", "b"]).unwrap();
    for round in 0..50 {
        let n = 1 + round % 4;
        let a = random_automaton(&mut rng, Kind::Uca, &alpha, n, 0.35, 0.35);
        let d = determinize_uca(&a, 100_000).unwrap();
        assert!(d.trees.iter().all(HistoryTree::is_valid));
        let letters: Vec<Letter> = alpha.letters().collect();
        let mut check = LassoChecker::new(&a);
        for w in canonical_lassos(&letters, 4) {
            assert_eq!(lasso_member_dsa(&d, &w).unwrap(), check.member_uca(&w), "round {round} {w:?}\n{}", d.dump());
        }
        for _ in 0..50 {
            let w = LassoWord::random(&mut rng, &letters, 4, 6);
            assert_eq!(lasso_member_dsa(&d, &w).unwrap(), check.member_uca(&w));
        }
    }
}

#[test]
fn trivial_objectives() {
    let alpha = Alphabet::new(["b"]).unwrap();
    let m = fair_coin();
    let all = determinize_uca(&universal(Kind::Uca, alpha.clone(), false), 100).unwrap();
    assert_eq!(streett_mdp_max_prob(&m, &all).unwrap(), 1.0);
    let none = determinize_uca(&universal(Kind::Uca, alpha, true), 100).unwrap();
    assert_eq!(streett_mdp_max_prob(&m, &none).unwrap(), 0.0);
}

#[test]
fn fair_coin_sees_infinitely_many_b() {
    let d = determinize_uca(&gf_b(), 100).unwrap();
    assert!((streett_mdp_max_prob(&fair_coin(), &d).unwrap() - 1.0).abs() < 1e-10);
    // Once the coin shows no b the run is stuck there for good.
    let mut m = fair_coin();
    let stop = m.action_id("stop");
    m.add_choice(0, Choice { action: stop, outcomes: vec![Outcome { target: 1, prob: 1.0, reward: 0.0 }], letter: None, accepting: false });
    m.choices[1] = vec![Choice { action: stop, outcomes: vec![Outcome { target: 1, prob: 1.0, reward: 0.0 }], letter: None, accepting: false }];
    let v = streett_mdp_max_prob(&m, &d).unwrap();
    assert!(v.abs() < 1e-10, "{v}");
}

#[test]
fn guessing_automaton_is_not_good_for_mdps() {
    let mut c = Automaton::new(Kind::Nba, Alphabet::new(["b"]).unwrap(), 4);
    c.initial = vec![0];
    for l in 0..2 {
        for q in 0..3 {
            c.add_edge(0, l, q, false);
        }
        c.add_edge(3, l, 3, true);
    }
    c.add_edge(1, 1, 3, false);
    c.add_edge(2, 0, 3, false);
    let a = universal(Kind::Uca, Alphabet::new(["b"]).unwrap(), false);
    let verdict = gfm_value_test(&c, &a, &fair_coin(), 100).unwrap();
    assert!(!verdict.agree);
    assert!((verdict.product - 0.5).abs() < 1e-10);
    assert!((verdict.semantic - 1.0).abs() < 1e-10);
}

#[test]
fn complements_are_good_for_random_mdps() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let alpha = Alphabet::new(["a"]).unwrap();
    for _ in 0..40 {
        let n = rng.gen_range(1..=3);
        let a = random_automaton(&mut rng, Kind::Uca, &alpha, n, 0.45, 0.35);
        let c = complement_uca(&a, &ComplementOpts::default()).unwrap();
        let k = rng.gen_range(1..=6);
        let m = random_mdp(&mut rng, k, 1, 2);
        let verdict = gfm_value_test(&c.nba, &a, &m, 100_000).unwrap();
        assert!(verdict.agree, "{verdict:?}");
    }
}

#[test]
fn deterministic_automata_always_agree() {
    let alpha = Alphabet::new(["b"]).unwrap();
    let mut c = Automaton::new(Kind::Nba, alpha, 2);
    c.initial = vec![0];
    c.add_edge(0, 1, 1, true);
    c.add_edge(0, 0, 0, false);
    c.add_edge(1, 1, 1, true);
    c.add_edge(1, 0, 0, false);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let m = random_mdp(&mut rng, 4, 1, 2);
        assert!(gfm_value_test(&c, &gf_b(), &m, 100).unwrap().agree);
    }
}
