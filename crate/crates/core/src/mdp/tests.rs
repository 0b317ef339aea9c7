use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::automata::{Alphabet, Automaton, Kind};

/// Dense Gaussian elimination with partial pivoting.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in 0..n {
            if row != col && a[row][col] != 0.0 {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    (0..n).map(|i| b[i] / a[i][i]).collect()
}

fn all_positional(m: &Mdp) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for cs in &m.choices {
        out = out.into_iter().flat_map(|p| (0..cs.len()).map(move |c| [p.clone(), vec![c]].concat())).collect();
    }
    out
}

fn chain_succ(m: &Mdp, sigma: &[usize], s: usize) -> Vec<usize> {
    m.choices[s][sigma[s]].outcomes.iter().map(|o| o.target as usize).collect()
}

fn reach_sets(m: &Mdp, sigma: &[usize]) -> Vec<Vec<bool>> {
    let n = m.num_states();
    (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(u) = stack.pop() {
                for t in chain_succ(m, sigma, u) {
                    if !seen[t] {
                        seen[t] = true;
                        stack.push(t);
                    }
                }
            }
            seen
        })
        .collect()
}

/// Reachability probability in the induced chain by a linear solve.
fn chain_reach(m: &Mdp, sigma: &[usize], target: &[bool]) -> Vec<f64> {
    let n = m.num_states();
    let reach = reach_sets(m, sigma);
    let can: Vec<bool> = (0..n).map(|s| (0..n).any(|t| reach[s][t] && target[t])).collect();
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for s in 0..n {
        a[s][s] = 1.0;
        if target[s] {
            b[s] = 1.0;
        } else if can[s] {
            for o in &m.choices[s][sigma[s]].outcomes {
                a[s][o.target as usize] -= o.prob;
            }
        }
    }
    solve_linear(a, b)
}

/// Almost-sure Büchi under a positional strategy: every bottom SCC
/// reachable from `s` has an accepting choice.
fn chain_buchi_sure(m: &Mdp, sigma: &[usize], s: usize) -> bool {
    let n = m.num_states();
    let reach = reach_sets(m, sigma);
    (0..n).filter(|&u| reach[s][u]).all(|u| {
        let bottom = (0..n).filter(|&t| reach[u][t]).all(|t| reach[t][u]);
        !bottom || (0..n).any(|t| reach[u][t] && m.choices[t][sigma[t]].accepting)
    })
}

fn chain_discounted(m: &Mdp, sigma: &[usize], lambda: f64) -> Vec<f64> {
    let n = m.num_states();
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for s in 0..n {
        a[s][s] = 1.0;
        for o in &m.choices[s][sigma[s]].outcomes {
            a[s][o.target as usize] -= lambda * o.prob;
            b[s] += o.prob * o.reward;
        }
    }
    solve_linear(a, b)
}

fn random_instance(rng: &mut ChaCha8Rng) -> Mdp {
    let n = rng.gen_range(2..=5);
    let mut m = random_mdp(rng, n, 1, 2);
    for cs in &mut m.choices {
        for c in cs {
            c.accepting = rng.gen_bool(0.3);
            for o in &mut c.outcomes {
                o.reward = rng.gen_range(-2..=3) as f64;
            }
        }
    }
    m
}

/// Brute-force maximal end components: end components are state sets with
/// a choice set staying inside that is strongly connected.
fn brute_mecs(m: &Mdp) -> Vec<Vec<u32>> {
    let n = m.num_states();
    let mut ecs: Vec<u32> = Vec::new();
    for mask in 1u32..1 << n {
        let inside = |t: u32| mask >> t & 1 == 1;
        let mut ok = true;
        let mut adj = vec![Vec::new(); n];
        for s in (0..n).filter(|&s| inside(s as u32)) {
            let stay: Vec<&Choice> =
                m.choices[s].iter().filter(|c| c.outcomes.iter().all(|o| inside(o.target))).collect();
            if stay.is_empty() {
                ok = false;
                break;
            }
            adj[s] = stay.iter().flat_map(|c| c.outcomes.iter().map(|o| o.target as usize)).collect();
        }
        if !ok {
            continue;
        }
        let first = mask.trailing_zeros() as usize;
        let mut strongly = true;
        for s in (0..n).filter(|&s| inside(s as u32)) {
            for (from, to) in [(first, s), (s, first)] {
                let mut seen = vec![false; n];
                let mut stack = vec![from];
                seen[from] = true;
                while let Some(u) = stack.pop() {
                    for &t in &adj[u] {
                        if !seen[t] {
                            seen[t] = true;
                            stack.push(t);
                        }
                    }
                }
                strongly &= seen[to];
            }
        }
        if strongly {
            ecs.push(mask);
        }
    }
    let mut out: Vec<Vec<u32>> = ecs
        .iter()
        .filter(|&&e| !ecs.iter().any(|&f| f != e && f & e == e))
        .map(|&e| (0..n as u32).filter(|&s| e >> s & 1 == 1).collect())
        .collect();
    out.sort();
    out
}

#[test]
fn mecs_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let m = random_instance(&mut rng);
        let mut got: Vec<Vec<u32>> = mec_decomposition(&m).into_iter().map(|mec| mec.states).collect();
        got.sort();
        assert_eq!(got, brute_mecs(&m));
    }
}

#[test]
fn max_reach_matches_positional_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..150 {
        let m = random_instance(&mut rng);
        let target: Vec<bool> = (0..m.num_states()).map(|_| rng.gen_bool(0.3)).collect();
        let (v, strat) = max_reach_prob(&m, &target);
        let best = all_positional(&m).iter().map(|sig| chain_reach(&m, sig, &target)).fold(
            vec![0.0; m.num_states()],
            |acc: Vec<f64>, x| acc.iter().zip(&x).map(|(a, b)| a.max(*b)).collect(),
        );
        let achieved = chain_reach(&m, &strat, &target);
        for s in 0..m.num_states() {
            assert!((v[s] - best[s]).abs() < 1e-9, "{s}: {} vs {}", v[s], best[s]);
            assert!((achieved[s] - best[s]).abs() < 1e-9);
        }
    }
}

#[test]
fn almost_sure_region_matches_positional_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..150 {
        let m = random_instance(&mut rng);
        let sure = almost_sure_buchi_region(&m);
        let sigmas = all_positional(&m);
        for s in 0..m.num_states() {
            let exists = sigmas.iter().any(|sig| chain_buchi_sure(&m, sig, s));
            assert_eq!(sure.region[s], exists);
            if exists {
                assert!(chain_buchi_sure(&m, &sure.strategy, s));
            }
        }
    }
}

#[test]
fn discounted_values_match_policy_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let m = random_instance(&mut rng);
        let lambda = 0.9;
        let (v, strat) = discounted_vi(&m, lambda, 1e-9).unwrap();
        let best = all_positional(&m).iter().map(|sig| chain_discounted(&m, sig, lambda)).fold(
            vec![f64::NEG_INFINITY; m.num_states()],
            |acc, x| acc.iter().zip(&x).map(|(a, b)| a.max(*b)).collect(),
        );
        let achieved = chain_discounted(&m, &strat, lambda);
        for s in 0..m.num_states() {
            assert!((v[s] - best[s]).abs() < 1e-8);
            assert!(best[s] - achieved[s] < 1e-8);
        }
        let checked = markov_discounted(&m, &strat, lambda).unwrap();
        assert!((checked[m.initial as usize] - achieved[m.initial as usize]).abs() < 1e-10);
    }
}

#[test]
fn switch_step_examples() {
    assert_eq!(switch_step(0.5, 2f64.powi(-10), 1.0), 12);
    assert_eq!(switch_step(0.5, 1.0, 0.0), 0);
    let t = switch_step(0.99, 0.01, 10.0);
    assert!(0.99f64.powi(t as i32) * 10.0 / 0.01 <= 0.01 / 2.0 + 1e-12);
    assert!(0.99f64.powi(t as i32 - 1) * 10.0 / 0.01 > 0.01 / 2.0);
}

/// Two states: `a` loops with reward 1 but is never accepting, `b` is
/// accepting with reward 0. The best valid strategy loops in `a` and then
/// leaves, so its value approaches 1/(1-lambda).
fn loop_then_leave() -> Mdp {
    let mut m = Mdp::new(vec!["b".into()]);
    let sa = m.add_state(0);
    let sb = m.add_state(1);
    let stay = m.action_id("stay");
    let go = m.action_id("go");
    m.add_choice(sa, Choice { action: stay, outcomes: vec![Outcome { target: sa, prob: 1.0, reward: 1.0 }], letter: None, accepting: false });
    m.add_choice(sa, Choice { action: go, outcomes: vec![Outcome { target: sb, prob: 1.0, reward: 0.0 }], letter: None, accepting: false });
    m.add_choice(sb, Choice { action: go, outcomes: vec![Outcome { target: sa, prob: 1.0, reward: 0.0 }], letter: None, accepting: true });
    m
}

#[test]
fn lexicographic_solution_is_valid_and_near_optimal() {
    let m = loop_then_leave();
    let eps = 2f64.powi(-10);
    let sol = lexicographic_solve(&m, 0.5, eps).unwrap();
    assert_eq!(sol.switch_step, 12);
    assert!((sol.value(0) - 2.0).abs() < 1e-8);
    let (sat, disc) = strategy_value_check(&m, &sol.strategy, 0.5).unwrap();
    assert_eq!(sat, 1.0);
    assert!(disc >= 2.0 - eps && disc <= 2.0 + 1e-9, "{disc}");
}

#[test]
fn lexicographic_reports_unsatisfiable_objectives() {
    let mut m = loop_then_leave();
    for c in &mut m.choices[1] {
        c.accepting = false;
    }
    assert!(matches!(lexicographic_solve(&m, 0.5, 0.01), Err(crate::Error::NoValidStrategy { max_sat }) if max_sat == 0.0));
    assert!(matches!(lexicographic_solve(&m, 1.0, 0.01), Err(crate::Error::InvalidParameter(_))));
}

#[test]
fn lexicographic_strategies_are_valid_on_random_mdps() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut solved = 0;
    for _ in 0..100 {
        let m = random_instance(&mut rng);
        let eps = 0.05;
        match lexicographic_solve(&m, 0.8, eps) {
            Ok(sol) => {
                solved += 1;
                let (sat, disc) = strategy_value_check(&m, &sol.strategy, 0.8).unwrap();
                assert_eq!(sat, 1.0);
                assert!(disc >= sol.value(m.initial) - eps - 1e-9);
                // No positional valid strategy beats the reported value.
                for sig in all_positional(&m) {
                    if chain_buchi_sure(&m, &sig, m.initial as usize) {
                        assert!(chain_discounted(&m, &sig, 0.8)[m.initial as usize] <= sol.value(m.initial) + 1e-8);
                    }
                }
            }
            Err(crate::Error::NoValidStrategy { max_sat }) => assert!(max_sat < 1.0),
            Err(e) => panic!("{e}"),
        }
    }
    assert!(solved > 20);
}

fn fair_coin() -> Mdp {
    let mut m = Mdp::new(vec!["p".into()]);
    let s1 = m.add_state(1);
    let s0 = m.add_state(0);
    let flip = m.action_id("flip");
    for s in [s1, s0] {
        let outcomes = vec![
            Outcome { target: s1, prob: 0.5, reward: 0.0 },
            Outcome { target: s0, prob: 0.5, reward: 0.0 },
        ];
        m.add_choice(s, Choice { action: flip, outcomes, letter: None, accepting: false });
    }
    m
}

fn guessing_nba() -> Automaton {
    let mut a = Automaton::new(Kind::Nba, Alphabet::new(["p"]).unwrap(), 4);
    a.initial = vec![0];
    for l in 0..2 {
        a.add_edge(0, l, 0, false);
        a.add_edge(0, l, 1, false);
        a.add_edge(0, l, 2, false);
        a.add_edge(3, l, 3, true);
    }
    a.add_edge(1, 1, 3, false);
    a.add_edge(2, 0, 3, false);
    a
}

#[test]
fn guessing_automaton_product_value_is_one_half() {
    let p = product_with_nba(&fair_coin(), &guessing_nba()).unwrap();
    let target: Vec<bool> = {
        let mut t = vec![false; p.mdp.num_states()];
        for mec in accepting_mecs(&p.mdp) {
            for s in mec.states {
                t[s as usize] = true;
            }
        }
        t
    };
    let (v, _) = max_reach_prob(&p.mdp, &target);
    assert!((v[p.mdp.initial as usize] - 0.5).abs() < 1e-10);
    // Brute force over positional product strategies agrees.
    let best = all_positional(&p.mdp)
        .iter()
        .map(|sig| chain_reach(&p.mdp, sig, &target)[p.mdp.initial as usize])
        .fold(0.0, f64::max);
    assert!((best - 0.5).abs() < 1e-10);
    assert!(p.dead.iter().any(|&d| d));
}

#[test]
fn reward_machine_product_pays_on_entering_finals() {
    let alpha = Alphabet::new(["p"]).unwrap();
    let mut d = Automaton::new(Kind::Dfa, alpha, 2);
    d.initial = vec![0];
    d.add_edge(0, 0, 0, false);
    d.add_edge(0, 1, 1, false);
    d.add_edge(1, 0, 0, false);
    d.add_edge(1, 1, 1, false);
    d.finals = vec![false, true];
    let rm = RewardMachine::from_dfa(&d, 2.0).unwrap();
    let p = product_with_reward_machine(&fair_coin(), &rm).unwrap();
    p.mdp.validate().unwrap();
    // From the initial state (label p) every step pays 2 exactly when the
    // current label is p.
    let (v, _) = discounted_vi(&p.mdp, 0.5, 1e-10).unwrap();
    // v(p) = 2 + 0.5 * avg, v(!p) = 0.5 * avg, avg = (v(p) + v(!p)) / 2.
    assert!((v[p.mdp.initial as usize] - 3.0).abs() < 1e-8);
}

#[test]
fn json_round_trip_and_errors() {
    let m = loop_then_leave();
    let text = serde_json::to_string(&MdpJson::from_mdp(&m)).unwrap();
    let back = MdpJson::parse(&text).unwrap();
    assert_eq!(back.labels, m.labels);
    assert_eq!(back.num_choices(), m.num_choices());
    let bad = r#"{"states":[{"id":0,"label":[]}],"initial":0,"actions":[{"state":0,"name":"a","successors":[{"target":0,"prob":0.7}]}]}"#;
    assert!(matches!(MdpJson::parse(bad), Err(crate::Error::InvalidModel(_))));
    let unknown = r#"{"states":[{"id":0,"label":[]}],"initial":3,"actions":[]}"#;
    assert!(matches!(MdpJson::parse(unknown), Err(crate::Error::UnknownState(3))));
}
