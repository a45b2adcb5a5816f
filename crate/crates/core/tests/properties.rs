use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ptsm_core::approx::witness_formula;
use ptsm_core::eval::{eval_fo, eval_modal, eval_modal_all, Environment};
use ptsm_core::formula::{
    modal_rank, parse_modal, quantifier_rank, random_modal, render_modal, standard_translation,
    Formula, RandomFormulaConfig, Variable,
};
use ptsm_core::game::{
    certificate_from_json, certificate_to_json, exhaustive_spoiler, verify_certificate, Synthesizer,
};
use ptsm_core::metrics::{
    behavioural_distance, distance_chain, logical_distance_lb, wasserstein_lift, Method,
};
use ptsm_core::rational::{self, ratio};
use ptsm_core::system::{
    check_morphism, disjoint_union, gaifman_distance, random_system, restrict, unravel,
    MorphismCandidate, StateId, TransitionSystem,
};
use ptsm_core::Rational;

fn system(seed: u64, max_states: usize, atoms: usize) -> TransitionSystem {
    let n = 1 + (seed as usize % max_states);
    random_system(n, atoms, 3, 12, &ratio(1, 5), seed).unwrap()
}

fn formula(seed: u64, sys: &TransitionSystem, max_rank: usize) -> Formula {
    let cfg = RandomFormulaConfig {
        atoms: sys.atoms().to_vec(),
        max_rank,
        max_depth: 6,
        grid: 8,
        sugar: true,
    };
    random_modal(&mut ChaCha8Rng::seed_from_u64(seed), &cfg)
}

fn state(sys: &TransitionSystem, pick: usize) -> StateId {
    StateId(pick % sys.state_count())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rendering_round_trips(seed in any::<u64>()) {
        let sys = system(seed, 4, 2);
        let phi = formula(seed, &sys, 3);
        let text = render_modal(&phi);
        let back = parse_modal(&text).unwrap();
        prop_assert_eq!(render_modal(&back), text);
        prop_assert_eq!(eval_modal_all(&sys, &back).unwrap(), eval_modal_all(&sys, &phi).unwrap());
    }

    #[test]
    fn values_stay_in_the_unit_interval(seed in any::<u64>()) {
        let sys = system(seed, 8, 2);
        let phi = formula(seed ^ 1, &sys, 4);
        for v in eval_modal_all(&sys, &phi).unwrap() {
            prop_assert!(rational::is_unit_interval(&v));
        }
    }

    #[test]
    fn batch_and_pointwise_evaluation_agree(seed in any::<u64>(), pick in 0usize..16) {
        let sys = system(seed, 8, 2);
        let phi = formula(seed ^ 2, &sys, 3);
        let a = state(&sys, pick);
        prop_assert_eq!(&eval_modal_all(&sys, &phi).unwrap()[a.0], &eval_modal(&sys, &phi, a).unwrap());
    }

    #[test]
    fn translation_preserves_value_and_rank(seed in any::<u64>(), pick in 0usize..16) {
        let sys = system(seed, 6, 1);
        let phi = formula(seed ^ 3, &sys, 3);
        let a = state(&sys, pick);
        let x = Variable::new("x");
        let st = standard_translation(&phi, &x);
        prop_assert_eq!(quantifier_rank(&st), modal_rank(&phi));
        let env: Environment = [(x, a)].into_iter().collect();
        prop_assert_eq!(eval_fo(&sys, &st, &env).unwrap(), eval_modal(&sys, &phi, a).unwrap());
    }

    #[test]
    fn formulas_only_see_their_neighbourhood(seed in any::<u64>(), pick in 0usize..16) {
        let sys = system(seed, 10, 2);
        let phi = formula(seed ^ 4, &sys, 3);
        let a = state(&sys, pick);
        let local = restrict(&sys, a, modal_rank(&phi)).unwrap();
        prop_assert_eq!(
            eval_modal(&local.system, &phi, local.center).unwrap(),
            eval_modal(&sys, &phi, a).unwrap()
        );
    }

    #[test]
    fn union_injections_are_morphisms_and_preserve_values(seed in any::<u64>()) {
        let sa = system(seed, 6, 1);
        let sb = system(seed.rotate_left(7), 6, 1);
        let u = disjoint_union(&[&sa, &sb]).unwrap();
        let phi = formula(seed ^ 5, &sa, 3);
        let whole = eval_modal_all(&u.system, &phi).unwrap();
        for (part, sys) in [(0, &sa), (1, &sb)] {
            let map: Vec<StateId> = sys.states().map(|s| u.inject(part, s)).collect();
            let report = check_morphism(&MorphismCandidate { source: sys, target: &u.system, map }).unwrap();
            prop_assert!(report.is_morphism);
            let own = eval_modal_all(sys, &phi).unwrap();
            for s in sys.states() {
                prop_assert_eq!(&own[s.0], &whole[u.inject(part, s).0]);
            }
        }
    }

    #[test]
    fn gaifman_distance_is_symmetric_and_triangular(seed in any::<u64>(), p in 0usize..16, q in 0usize..16, r in 0usize..16) {
        let sys = system(seed, 10, 1);
        let (a, b, c) = (state(&sys, p), state(&sys, q), state(&sys, r));
        let d = |x, y| gaifman_distance(&sys, x, y).unwrap();
        prop_assert_eq!(d(a, b), d(b, a));
        prop_assert_eq!(d(a, a), Some(0));
        if let (Some(ab), Some(bc)) = (d(a, b), d(b, c)) {
            prop_assert!(d(a, c).is_some_and(|ac| ac <= ab + bc));
        }
    }

    #[test]
    fn unravelling_is_a_tree_with_the_same_behaviour(seed in any::<u64>(), pick in 0usize..16, depth in 0usize..4) {
        let sys = system(seed, 6, 1);
        let a = state(&sys, pick);
        let tree = unravel(&sys, a, depth).unwrap();
        let t = &tree.system;
        let mut indegree = vec![0usize; t.state_count()];
        for s in t.states() {
            for (child, _) in t.successors(s).entries() {
                indegree[child.0] += 1;
                prop_assert_eq!(tree.depth_of[child.0], tree.depth_of[s.0] + 1);
            }
            prop_assert!(tree.depth_of[s.0] <= depth);
        }
        prop_assert_eq!(indegree[tree.root.0], 0);
        prop_assert!(t.states().filter(|s| *s != tree.root).all(|s| indegree[s.0] == 1));
        let phi = formula(seed ^ 6, &sys, depth);
        prop_assert_eq!(eval_modal(t, &phi, tree.root).unwrap(), eval_modal(&sys, &phi, a).unwrap());
    }

    #[test]
    fn chain_is_monotone_pseudometric_and_method_independent(seed in any::<u64>()) {
        let sys = system(seed, 8, 2);
        let w = distance_chain(&sys, 3, Method::Wasserstein).unwrap();
        let k = distance_chain(&sys, 3, Method::Kantorovich).unwrap();
        prop_assert_eq!(&w, &k);
        for m in 0..w.len() {
            prop_assert!(w[m].check().is_ok());
            if m > 0 {
                prop_assert!(w[m - 1].le(&w[m]));
            }
        }
    }

    #[test]
    fn optimal_coupling_realizes_the_lift(seed in any::<u64>(), p in 0usize..16, q in 0usize..16) {
        let sys = system(seed, 8, 1);
        let d = &distance_chain(&sys, 2, Method::Wasserstein).unwrap()[2];
        let (a, b) = (state(&sys, p), state(&sys, q));
        let lift = wasserstein_lift(d, sys.successors(a), sys.successors(b)).unwrap();
        prop_assert!(lift.coupling.is_coupling_of(sys.successors(a), sys.successors(b)));
        prop_assert_eq!(lift.coupling.cost(d), lift.value);
    }

    #[test]
    fn formulas_are_nonexpansive(seed in any::<u64>()) {
        let sys = system(seed, 8, 2);
        let chain = distance_chain(&sys, 3, Method::Wasserstein).unwrap();
        let phi = formula(seed ^ 7, &sys, 3);
        let v = eval_modal_all(&sys, &phi).unwrap();
        let d = &chain[modal_rank(&phi)];
        for a in sys.states() {
            for b in sys.states() {
                prop_assert!(rational::abs_diff(&v[a.0], &v[b.0]) <= *d.get(a, b));
            }
        }
    }

    #[test]
    fn witnesses_sandwich_the_distance(seed in any::<u64>(), p in 0usize..16, q in 0usize..16, n in 1usize..4) {
        let sa = system(seed, 5, 1);
        let sb = system(seed.rotate_left(13), 5, 1);
        let (a, b) = (state(&sa, p), state(&sb, q));
        let delta = ratio(1, 16);
        let d = behavioural_distance(&sa, &sb, n, Method::Kantorovich).unwrap().between(n, a, b).clone();
        let phi = witness_formula(&sa, &sb, a, b, n, &delta).unwrap();
        prop_assert!(modal_rank(&phi) <= n);
        let lb = logical_distance_lb(&sa, &sb, a, b, &[phi], n).unwrap();
        prop_assert!(lb <= d && lb >= &d - &delta);
    }

    #[test]
    fn certificates_survive_json_and_reject_tampering(seed in any::<u64>(), p in 0usize..16, q in 0usize..16, n in 0usize..4) {
        let sa = system(seed, 5, 1);
        let sb = system(seed.rotate_left(29), 5, 1);
        let (a, b) = (state(&sa, p), state(&sb, q));
        let synth = Synthesizer::new(&sa, &sb, n).unwrap();
        let eps = synth.distance(a, b, n).clone();
        let cert = synth.synthesize(a, b, n, &eps).unwrap();
        prop_assert!(verify_certificate(&cert, &sa, &sb).ok);
        prop_assert!(exhaustive_spoiler(&cert, &sa, &sb));
        let json = certificate_to_json(&cert, &sa, &sb);
        let back = certificate_from_json(&json, &sa, &sb).unwrap();
        prop_assert_eq!(&back, &cert);
        if eps > Rational::from_integer(0.into()) {
            let mut bad = cert.clone();
            bad.root.epsilon = &eps / Rational::from_integer(2.into());
            prop_assert!(!verify_certificate(&bad, &sa, &sb).ok);
            prop_assert!(!exhaustive_spoiler(&bad, &sa, &sb));
        }
    }
}
