use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::automata::{
    canonical_lassos, intersect_nba, is_nonempty, is_strongly_limit_deterministic, random_automaton, universal,
    Alphabet, LassoChecker, LassoWord, Promise, PromiseMode,
};
use crate::collect::{build_collection, Finality};

fn fixture(name: &str) -> Automaton {
    let text = match name {
        "f1" => include_str!("../../../../fixtures/reduction/f1.hoa"),
        "f2" => include_str!("../../../../fixtures/reduction/f2.hoa"),
        "f3" => include_str!("../../../../fixtures/reduction/f3.hoa"),
        "f4" => include_str!("../../../../fixtures/reduction/f4.hoa"),
        _ => unreachable!(),
    };
    crate::hoa::parse_hoa(text).unwrap().reinterpret(Kind::Uca)
}

fn agrees_on_lassos(c: &GfmNba, a: &Automaton, max_len: usize) {
    let letters: Vec<Letter> = a.alphabet.letters().collect();
    let mut cc = LassoChecker::new(&c.nba);
    let mut ca = LassoChecker::new(a);
    for w in canonical_lassos(&letters, max_len) {
        assert_eq!(cc.member_nba(&w), ca.member_uca(&w), "{w:?}");
    }
}

#[test]
fn universal_uca_gives_universal_nba() {
    let a = universal(Kind::Uca, Alphabet::new(["p"]).unwrap(), false);
    let c = complement_uca(&a, &ComplementOpts::default()).unwrap();
    agrees_on_lassos(&c, &a, 4);
    assert!(c.nba.edges(0).iter().all(|e| !e.marked));
}

#[test]
fn all_rejecting_uca_gives_empty_language() {
    let a = universal(Kind::Uca, Alphabet::new(["p"]).unwrap(), true);
    let c = complement_uca(&a, &ComplementOpts::default()).unwrap();
    assert!(!is_nonempty(&c.nba));
    assert!(c.stats.blocked_transitions > 0);
}

#[test]
fn random_ucas_are_complemented_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let alpha = Alphabet::new(["a", "b"]).unwrap();
    for round in 0..60 {
        let n = 1 + round % 3;
        let a = random_automaton(&mut rng, Kind::Uca, &alpha, n, 0.4, 0.3);
        for opts in [ComplementOpts::default(), ComplementOpts::unrestricted()] {
            let c = complement_uca(&a, &opts).unwrap();
            agrees_on_lassos(&c, &a, 4);
            assert!(!is_nonempty(&intersect_nba(&c.nba, &a.reinterpret(Kind::Nba)).unwrap()));
            assert!(is_strongly_limit_deterministic(&c.nba).ok);
        }
    }
}

#[test]
fn accepting_transitions_lie_in_the_second_phase() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let alpha = Alphabet::new(["a"]).unwrap();
    for _ in 0..30 {
        let a = random_automaton(&mut rng, Kind::Uca, &alpha, 3, 0.5, 0.3);
        let c = complement_uca(&a, &ComplementOpts::unrestricted()).unwrap();
        for q in c.nba.states() {
            let p = c.part[q as usize];
            for e in c.nba.edges(q) {
                if e.marked {
                    assert_ne!(p, Part::Subset);
                }
                if p != Part::Subset {
                    assert_ne!(c.part[e.target as usize], Part::Subset);
                }
            }
            if p == Part::Ranking {
                let es = c.nba.edges(q);
                assert!(es.windows(2).all(|w| w[0].letter != w[1].letter));
            }
        }
    }
}

#[test]
fn restricted_entry_is_never_larger() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let alpha = Alphabet::new(["a", "b"]).unwrap();
    for _ in 0..40 {
        let a = random_automaton(&mut rng, Kind::Uca, &alpha, 3, 0.4, 0.4);
        let full = complement_uca(&a, &ComplementOpts::unrestricted()).unwrap();
        let odd = complement_uca(&a, &ComplementOpts::default()).unwrap();
        assert!(odd.num_states() <= full.num_states());
    }
}

#[test]
fn pinned_collection_complements_are_correct() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let alpha = Alphabet::new(["a"]).unwrap();
    for _ in 0..25 {
        let schema = random_automaton(&mut rng, Kind::Uca, &alpha, 2, 0.5, 0.4).as_schema();
        let col = build_collection(&schema, PromiseMode::AtMostOne, Finality::Default).unwrap();
        let general = ComplementOpts { special_cases: false, ..Default::default() };
        let pinned = complement_uca(&col, &general).unwrap();
        let plain = complement_uca(&col, &ComplementOpts::unrestricted()).unwrap();
        assert!(pinned.num_states() <= plain.num_states());
        agrees_on_lassos(&pinned, &col, 3);
    }
}

#[test]
fn pinning_requires_a_fresh_designated_state() {
    let mut a = universal(Kind::Uca, Alphabet::new(["p"]).unwrap(), false);
    let q = a.add_state();
    a.add_edge(q, 0, 0, false);
    a.designated = Some(0);
    let opts = ComplementOpts { pin: Pin::On, ..Default::default() };
    assert!(matches!(complement_uca(&a, &opts), Err(Error::Shape(_))));
    a.designated = None;
    assert!(matches!(complement_uca(&a, &opts), Err(Error::Shape(_))));
}

#[test]
fn safety_special_case_is_a_subset_construction() {
    // always !p: state 0 loops on !p, moves to the rejecting sink 1 on p
    let alpha = Alphabet::new(["p"]).unwrap();
    let mut s = Automaton::new(Kind::Uca, alpha, 2);
    s.add_edge(0, 0, 0, false);
    s.add_edge(0, 1, 1, false);
    s.add_edge(1, 0, 1, true);
    s.add_edge(1, 1, 1, true);
    let col = build_collection(&s, PromiseMode::AtMostOne, Finality::SafetyAdjusted).unwrap();
    assert_eq!(detect_shape(&col), Some(Shape::Safety));
    let special = complement_special(&col, Shape::Safety, &ComplementOpts::default()).unwrap();
    let general = complement_uca(&col, &ComplementOpts { special_cases: false, ..Default::default() }).unwrap();
    assert!(special.num_states() <= general.num_states());
    agrees_on_lassos(&special, &col, 4);
    for q in special.nba.states() {
        if special.part[q as usize] != Part::Subset {
            assert!(special.nba.edges(q).iter().all(|e| e.marked));
        }
    }
    let promise = col.alphabet.promise_letter(0, Promise::State(0)).unwrap();
    let quiet_p = col.alphabet.promise_letter(1, Promise::Top).unwrap();
    let mut check = LassoChecker::new(&special.nba);
    assert!(check.member_nba(&LassoWord::new(vec![promise], vec![promise])));
    assert!(!check.member_nba(&LassoWord::new(vec![promise], vec![quiet_p])));
    assert!(matches!(complement_special(&col, Shape::Reachability, &ComplementOpts::default()), Err(Error::Shape(_))));
}

#[test]
fn reachability_special_case_agrees_with_general() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let alpha = Alphabet::new(["a"]).unwrap();
    let mut seen = 0;
    for _ in 0..60 {
        let schema = random_automaton(&mut rng, Kind::Uca, &alpha, 2, 0.4, 1.0).as_schema();
        let col = build_collection(&schema, PromiseMode::AtMostOne, Finality::Default).unwrap();
        if detect_shape(&col) != Some(Shape::Reachability) {
            continue;
        }
        seen += 1;
        let special = complement_special(&col, Shape::Reachability, &ComplementOpts::default()).unwrap();
        let general = complement_uca(&col, &ComplementOpts { special_cases: false, ..Default::default() }).unwrap();
        assert!(special.num_states() <= general.num_states());
        agrees_on_lassos(&special, &col, 3);
    }
    assert!(seen > 10);
}

#[test]
fn table_fixture_complement_sizes() {
    let opts = ComplementOpts::default();
    for (name, orig, compl) in [("f1", 2, 4), ("f2", 1, 2), ("f3", 3, 6), ("f4", 4, 8)] {
        let a = fixture(name);
        assert_eq!(a.num_states(), orig, "{name}");
        let c = complement_uca(&a, &opts).unwrap();
        assert_eq!(c.num_states(), compl, "{name}");
        agrees_on_lassos(&c, &a, 4);
    }
}

#[test]
fn single_collection_promise_enters_with_pinned_rank() {
    let alpha = Alphabet::new(["p"]).unwrap();
    let schema = universal(Kind::Uca, alpha, false).as_schema();
    let col = build_collection(&schema, PromiseMode::AtMostOne, Finality::Default).unwrap();
    let c = complement_uca(&col, &ComplementOpts { special_cases: false, ..Default::default() }).unwrap();
    assert!(c.part.iter().any(|&p| p == Part::Ranking));
    let d = col.designated.unwrap() as usize;
    let entry = Entry::General { odd_only: true, pin: Some(d), ties: true };
    for f in tight_rankings(&[0, d], col.num_states(), entry) {
        assert_eq!(f[d], *f.iter().filter(|&&v| v != NONE).max().unwrap());
    }
}
