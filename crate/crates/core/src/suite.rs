//! Randomized property checks on seeded random systems.
//!
//! Every check is deterministic in the configured seed: trial `t` of
//! property `p` draws from its own generator, trials run in parallel and
//! the first failing trial (by index) is reported with a serialized
//! counterexample.

use num_traits::{One, Zero};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::approx::{witness_from_chain, Approximator, StateFunction};
use crate::eval::{eval_fo, eval_modal, expectation, Environment, Evaluator};
use crate::fixtures::perturbed_pair;
use crate::formula::{
    modal_rank, random_modal, render_modal, standard_translation, Formula, RandomFormulaConfig,
    Variable,
};
use crate::game::{
    exhaustive_spoiler, verify_certificate, GameError, StrategyCertificate, Synthesizer,
};
use crate::metrics::{
    behavioural_distance, behavioural_distance_with, distance_chain, kantorovich_lift,
    logical_distance_lb, wasserstein_lift, ChainOptions, Method, PseudometricMatrix,
};
use crate::rational::{self, int, ratio, Rational};
use crate::system::{
    check_morphism, disjoint_union, random_system, restrict, system_to_json, unravel, Distribution,
    MorphismCandidate, StateId, Successors, TransitionSystem,
};

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub seed: u64,
    pub max_states: usize,
    pub max_atoms: usize,
    pub max_branching: usize,
    pub denominator_bound: u32,
    pub depth: usize,
    /// Random system pairs for the coincidence check.
    pub trials: usize,
    /// Pairs per coincidence run that also get a witness formula.
    pub witness_pairs: usize,
    pub witness_delta: Rational,
    pub duality_instances: usize,
    pub game_samples: usize,
    pub formulas: usize,
    pub structural_instances: usize,
    pub density_systems: usize,
    pub density_functions: usize,
    pub density_deltas: Vec<Rational>,
    #[doc(hidden)]
    pub faults: ChainOptions,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_states: 12,
            max_atoms: 2,
            max_branching: 3,
            denominator_bound: 16,
            depth: 4,
            trials: 50,
            witness_pairs: 10,
            witness_delta: ratio(1, 64),
            duality_instances: 200,
            game_samples: 100,
            formulas: 500,
            structural_instances: 500,
            density_systems: 3,
            density_functions: 20,
            density_deltas: vec![ratio(1, 16), ratio(1, 64)],
            faults: ChainOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    /// Number of individual checks performed.
    pub checked: usize,
    pub detail: String,
    pub counterexample: Option<Value>,
}

impl PropertyResult {
    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "detail": self.detail,
            "counterexample": self.counterexample,
        })
    }
}

type Failure = (String, Value);

fn trial_rng(seed: u64, property: u64, trial: usize) -> ChaCha8Rng {
    let mut base = ChaCha8Rng::seed_from_u64(seed ^ property.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    base.set_stream(trial as u64);
    base
}

/// Runs `trials` independent trials in parallel; each returns the number of
/// checks it made or a counterexample.
fn run_trials(
    name: &'static str,
    trials: usize,
    body: impl Fn(usize) -> Result<usize, Failure> + Sync,
) -> PropertyResult {
    let results: Vec<Result<usize, Failure>> = (0..trials).into_par_iter().map(&body).collect();
    let mut checked = 0;
    for (t, r) in results.into_iter().enumerate() {
        match r {
            Ok(n) => checked += n,
            Err((detail, cx)) => {
                return PropertyResult {
                    name,
                    passed: false,
                    checked,
                    detail: format!("trial {t}: {detail}"),
                    counterexample: Some(cx),
                }
            }
        }
    }
    PropertyResult {
        name,
        passed: true,
        checked,
        detail: if trials == 0 {
            "no trials requested; vacuously true".into()
        } else {
            format!("{checked} checks over {trials} trials")
        },
        counterexample: None,
    }
}

fn gen_system(rng: &mut ChaCha8Rng, cfg: &SuiteConfig, atoms: usize) -> TransitionSystem {
    let n = rng.gen_range(1..=cfg.max_states.max(1));
    let branching = rng.gen_range(1..=cfg.max_branching.max(1));
    random_system(
        n,
        atoms,
        branching,
        cfg.denominator_bound.max(1),
        &ratio(1, 5),
        rng.gen(),
    )
    .expect("generator parameters are valid")
}

fn gen_pair(rng: &mut ChaCha8Rng, cfg: &SuiteConfig) -> (TransitionSystem, TransitionSystem) {
    let atoms = rng.gen_range(1..=cfg.max_atoms.max(1));
    (gen_system(rng, cfg, atoms), gen_system(rng, cfg, atoms))
}

fn systems_json(a: &TransitionSystem, b: &TransitionSystem) -> Value {
    json!({ "system_a": system_to_json(a), "system_b": system_to_json(b) })
}

fn with(mut base: Value, extra: Value) -> Value {
    if let (Some(b), Some(e)) = (base.as_object_mut(), extra.as_object()) {
        for (k, v) in e {
            b.insert(k.clone(), v.clone());
        }
    }
    base
}

fn r(q: &Rational) -> Value {
    json!(rational::format(q))
}

fn internal(e: impl std::fmt::Display, cx: Value) -> Failure {
    (format!("unexpected error: {e}"), cx)
}

/// Exact distances of the ten-state perturbed pair at depth 2 and 3.
pub fn fixture_replay() -> PropertyResult {
    let epsilons = [int(0), ratio(1, 10), ratio(1, 4), ratio(1, 2)];
    run_trials("fixture_replay", epsilons.len(), |t| {
        let eps = &epsilons[t];
        let sys = perturbed_pair(eps);
        let id = |l: &str| sys.lookup(l).expect("fixture label");
        let half = ratio(1, 2);
        let cx = json!({ "epsilon": r(eps) });
        let mut checks = 0;
        for method in [Method::Wasserstein, Method::Kantorovich] {
            let chain = distance_chain(&sys, 3, method).map_err(|e| internal(e, cx.clone()))?;
            let expected = [
                ("x", "y", 3, eps - eps * eps),
                ("x1", "y1", 2, eps.clone()),
                ("x1", "y2", 2, half.clone()),
                ("x2", "y1", 2, &half - eps),
                ("x2", "y2", 2, int(0)),
            ];
            for (a, b, m, want) in expected {
                let got = chain[m].get(id(a), id(b));
                if *got != want {
                    return Err((
                        format!("{method:?}: d_{m}({a},{b}) = {got}, expected {want}"),
                        cx,
                    ));
                }
                checks += 1;
            }
        }
        Ok(checks)
    })
}

/// Transport and price-function chains agree entrywise, the game value
/// matches them, and synthesized witnesses bracket the logical distance.
pub fn coincidence(cfg: &SuiteConfig) -> PropertyResult {
    run_trials("coincidence", cfg.trials, |t| {
        let mut rng = trial_rng(cfg.seed, 1, t);
        let (sa, sb) = gen_pair(&mut rng, cfg);
        let cx = systems_json(&sa, &sb);
        let n = cfg.depth;
        let w = behavioural_distance_with(&sa, &sb, n, Method::Wasserstein, cfg.faults)
            .map_err(|e| internal(e, cx.clone()))?;
        let k = behavioural_distance(&sa, &sb, n, Method::Kantorovich)
            .map_err(|e| internal(e, cx.clone()))?;
        let size = w.system.state_count();
        let mut checks = 0;
        for m in 0..=n {
            for i in 0..size {
                for j in i + 1..size {
                    let (x, y) = (StateId(i), StateId(j));
                    let (dw, dk) = (w.levels[m].get(x, y), k.levels[m].get(x, y));
                    if dw != dk {
                        return Err((
                            format!("depth {m}: W and K differ at union states ({i},{j})"),
                            with(
                                cx,
                                json!({"depth": m, "union_states": [i, j], "w": r(dw), "k": r(dk)}),
                            ),
                        ));
                    }
                    checks += 1;
                }
            }
        }
        let synth = Synthesizer::new(&sa, &sb, n).map_err(|e| internal(e, cx.clone()))?;
        for m in 0..=n {
            for a in sa.states() {
                for b in sb.states() {
                    if synth.chain().between(m, a, b) != k.between(m, a, b) {
                        return Err((
                            format!("depth {m}: game value differs from K at ({a},{b})"),
                            with(cx, json!({"depth": m, "a": a.0, "b": b.0})),
                        ));
                    }
                    checks += 1;
                }
            }
        }
        // the game value is attained
        let a = StateId(rng.gen_range(0..sa.state_count()));
        let b = StateId(rng.gen_range(0..sb.state_count()));
        let m = rng.gen_range(0..=n);
        let d = k.between(m, a, b).clone();
        let cert = synth
            .synthesize(a, b, m, &d)
            .map_err(|e| internal(e, cx.clone()))?;
        if !verify_certificate(&cert, &sa, &sb).ok {
            return Err((
                format!("certificate at the game value fails for ({a},{b}) depth {m}"),
                with(cx, json!({"a": a.0, "b": b.0, "depth": m})),
            ));
        }
        checks += 1;
        if t < cfg.witness_pairs {
            let m = rng.gen_range(1..=n.max(1)).min(n);
            let d = k.between(m, a, b).clone();
            let delta = &cfg.witness_delta;
            let phi =
                witness_from_chain(&k, a, b, m, delta).map_err(|e| internal(e, cx.clone()))?;
            let lb = logical_distance_lb(&sa, &sb, a, b, std::slice::from_ref(&phi), m)
                .map_err(|e| internal(e, cx.clone()))?;
            if lb > d || lb < &d - delta {
                return Err((
                    format!("witness gap {lb} outside [d - δ, d] with d = {d}"),
                    with(
                        cx,
                        json!({"a": a.0, "b": b.0, "depth": m, "formula": render_modal(&phi)}),
                    ),
                ));
            }
            checks += 1;
        }
        Ok(checks)
    })
}

fn random_distribution(rng: &mut ChaCha8Rng, points: usize, den_bound: u32) -> Successors {
    let k = rng.gen_range(1..=points);
    let den = rng.gen_range(k as u32..=den_bound.max(k as u32));
    let targets = sample(rng, points, k).into_vec();
    let mut cuts: Vec<u32> = sample(rng, den as usize - 1, k - 1)
        .into_iter()
        .map(|c| c as u32 + 1)
        .collect();
    cuts.sort_unstable();
    cuts.push(den);
    let mut prev = 0;
    let weights = targets.into_iter().zip(cuts).map(|(s, c)| {
        let w = ratio((c - prev) as i64, den as i64);
        prev = c;
        (StateId(s), w)
    });
    Successors::Distribution(Distribution::from_weights(weights).expect("weights sum to one"))
}

#[allow(clippy::needless_range_loop)]
fn random_pseudometric(rng: &mut ChaCha8Rng, size: usize, den_bound: u32) -> PseudometricMatrix {
    let mut d = vec![vec![Rational::zero(); size]; size];
    for i in 0..size {
        for j in i + 1..size {
            let v = if rng.gen_bool(0.2) {
                Rational::zero()
            } else {
                let den = rng.gen_range(1..=den_bound as i64);
                ratio(rng.gen_range(0..=den), den)
            };
            d[i][j] = v.clone();
            d[j][i] = v;
        }
    }
    // shortest-path closure restores the triangle inequality
    for k in 0..size {
        for i in 0..size {
            for j in 0..size {
                let via = &d[i][k] + &d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    PseudometricMatrix::from_rows(d).expect("closure is a pseudometric")
}

/// Transport and price-function lifts agree on random instances, and both
/// certificates check out.
pub fn duality(cfg: &SuiteConfig) -> PropertyResult {
    run_trials("duality", cfg.duality_instances, |t| {
        let mut rng = trial_rng(cfg.seed, 2, t);
        let size = rng.gen_range(1..=6);
        let d = random_pseudometric(&mut rng, size, cfg.denominator_bound);
        let pick = |rng: &mut ChaCha8Rng| {
            if rng.gen_bool(0.1) {
                Successors::Terminating
            } else {
                random_distribution(rng, size, cfg.denominator_bound)
            }
        };
        let (p1, p2) = (pick(&mut rng), pick(&mut rng));
        let dist_json = |p: &Successors| -> Value {
            match p {
                Successors::Terminating => Value::Null,
                Successors::Distribution(dd) => Value::Array(
                    dd.entries()
                        .iter()
                        .map(|(s, w)| json!([s.0, rational::format(w)]))
                        .collect(),
                ),
            }
        };
        let cx = json!({
            "metric": d.rows().iter().map(|row| row.iter().map(r).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "pi1": dist_json(&p1),
            "pi2": dist_json(&p2),
        });
        let w = wasserstein_lift(&d, &p1, &p2).map_err(|e| internal(e, cx.clone()))?;
        let k = kantorovich_lift(&d, &p1, &p2).map_err(|e| internal(e, cx.clone()))?;
        if w.value != k.value {
            return Err((format!("W = {} but K = {}", w.value, k.value), cx));
        }
        if !w.coupling.is_coupling_of(&p1, &p2) || w.coupling.cost(&d) != w.value {
            return Err(("optimal coupling does not certify its value".into(), cx));
        }
        let realized = rational::abs_diff(&k.price.integrate(&p1), &k.price.integrate(&p2));
        if !k.price.is_nonexpansive(&d) || realized != k.value {
            return Err((
                "optimal price function does not certify its value".into(),
                cx,
            ));
        }
        Ok(1)
    })
}

/// Applies one random corruption somewhere in the certificate.
fn tamper(cert: &mut StrategyCertificate, rng: &mut ChaCha8Rng) {
    if !cert.children.is_empty() && rng.gen_bool(0.5) {
        let i = rng.gen_range(0..cert.children.len());
        let child = cert.children.values_mut().nth(i).unwrap();
        return tamper(child, rng);
    }
    let keys: Vec<(StateId, StateId)> = cert
        .duplicator
        .as_ref()
        .map(|m| m.coupling.keys().copied().collect())
        .unwrap_or_default();
    match (rng.gen_range(0..5), keys.is_empty()) {
        (0, false) => {
            // lower one slack value consistently in the child
            let k = keys[rng.gen_range(0..keys.len())];
            let mv = cert.duplicator.as_mut().unwrap();
            let s = mv.slack[&k].clone();
            let lowered = rational::clamp_unit(s - ratio(1, 8));
            mv.slack.insert(k, lowered.clone());
            if let Some(c) = cert.children.get_mut(&k) {
                c.root.epsilon = lowered;
            }
        }
        (1, false) if keys.len() >= 2 => {
            // shift coupling mass between two cells
            let mv = cert.duplicator.as_mut().unwrap();
            let (k1, k2) = (keys[0], keys[1]);
            let amount = mv.coupling[&k1].clone() / int(2);
            *mv.coupling.get_mut(&k1).unwrap() -= &amount;
            *mv.coupling.get_mut(&k2).unwrap() += amount;
        }
        (2, false) => {
            let k = keys[rng.gen_range(0..keys.len())];
            cert.children.remove(&k);
        }
        (3, false) => {
            let k = keys[rng.gen_range(0..keys.len())];
            if let Some(c) = cert.children.get_mut(&k) {
                c.root.epsilon = rational::clamp_unit(&c.root.epsilon + ratio(1, 3));
            }
        }
        _ => {
            cert.root.epsilon = &cert.root.epsilon / int(2);
        }
    }
}

/// Synthesis succeeds at and above the distance, is refused just below it,
/// and the two certificate checkers agree on corrupted certificates.
pub fn game_bracket(cfg: &SuiteConfig) -> PropertyResult {
    const PER_SYSTEM: usize = 5;
    let systems = cfg.game_samples.div_ceil(PER_SYSTEM);
    run_trials("game_bracket", systems, |t| {
        let mut rng = trial_rng(cfg.seed, 3, t);
        let (sa, sb) = gen_pair(&mut rng, cfg);
        let cx = systems_json(&sa, &sb);
        let n = cfg.depth;
        let synth = Synthesizer::new(&sa, &sb, n).map_err(|e| internal(e, cx.clone()))?;
        let nudge = ratio(1, 1000);
        let samples = PER_SYSTEM.min(cfg.game_samples - t * PER_SYSTEM);
        let mut checks = 0;
        for _ in 0..samples {
            let a = StateId(rng.gen_range(0..sa.state_count()));
            let b = StateId(rng.gen_range(0..sb.state_count()));
            let m = rng.gen_range(0..=n);
            let d = synth.distance(a, b, m).clone();
            let here = with(
                cx.clone(),
                json!({"a": a.0, "b": b.0, "depth": m, "distance": r(&d)}),
            );
            let mut accepted = vec![d.clone()];
            if &d + &nudge <= Rational::one() {
                accepted.push(&d + &nudge);
            }
            for eps in &accepted {
                let cert = synth
                    .synthesize(a, b, m, eps)
                    .map_err(|e| internal(e, here.clone()))?;
                let v = verify_certificate(&cert, &sa, &sb);
                if !v.ok || !exhaustive_spoiler(&cert, &sa, &sb) {
                    return Err((
                        format!("certificate at ε = {eps} rejected: {:?}", v.violation),
                        here,
                    ));
                }
                let mut bad = cert.clone();
                tamper(&mut bad, &mut rng);
                let verdict = verify_certificate(&bad, &sa, &sb).ok;
                if verdict != exhaustive_spoiler(&bad, &sa, &sb) {
                    return Err(("checkers disagree on a corrupted certificate".into(), here));
                }
                checks += 2;
            }
            if d.is_zero() || d < nudge {
                continue;
            }
            match synth.synthesize(a, b, m, &(&d - &nudge)) {
                Err(GameError::NotWinnable { .. }) => checks += 1,
                Ok(_) => return Err(("synthesis succeeded below the distance".into(), here)),
                Err(e) => return Err(internal(e, here)),
            }
        }
        Ok(checks)
    })
}

/// `|φ(a) - φ(b)| <= d_rank(φ)(a, b)` for random formulas, and `<>` does
/// not expand sup-distances between state functions.
pub fn nonexpansivity(cfg: &SuiteConfig) -> PropertyResult {
    const PER_SYSTEM: usize = 50;
    let systems = cfg.formulas.div_ceil(PER_SYSTEM);
    run_trials("nonexpansivity", systems, |t| {
        let mut rng = trial_rng(cfg.seed, 4, t);
        let (sa, sb) = gen_pair(&mut rng, cfg);
        let cx = systems_json(&sa, &sb);
        let union = disjoint_union(&[&sa, &sb]).map_err(|e| internal(e, cx.clone()))?;
        let sys = &union.system;
        let chain = distance_chain(sys, cfg.depth, Method::Wasserstein)
            .map_err(|e| internal(e, cx.clone()))?;
        let fcfg = RandomFormulaConfig {
            atoms: sys.atoms().to_vec(),
            max_rank: cfg.depth,
            max_depth: 7,
            grid: cfg.denominator_bound,
            sugar: true,
        };
        let mut ev = Evaluator::new(sys);
        let size = sys.state_count();
        let count = PER_SYSTEM.min(cfg.formulas - t * PER_SYSTEM);
        let mut checks = 0;
        for _ in 0..count {
            let phi = random_modal(&mut rng, &fcfg);
            let rank = modal_rank(&phi);
            let v = ev.values(&phi).map_err(|e| internal(e, cx.clone()))?;
            for i in 0..size {
                for j in i + 1..size {
                    if rational::abs_diff(&v[i], &v[j]) > *chain[rank].get(StateId(i), StateId(j)) {
                        return Err((
                            format!("formula separates union states ({i},{j}) beyond d_{rank}"),
                            with(
                                cx,
                                json!({"formula": render_modal(&phi), "union_states": [i, j]}),
                            ),
                        ));
                    }
                    checks += 1;
                }
            }
        }
        let mut vec_f = || -> Vec<Rational> {
            (0..size)
                .map(|_| ratio(rng.gen_range(0..=16), 16))
                .collect()
        };
        for _ in 0..10 {
            let (f, g) = (vec_f(), vec_f());
            let sup = |x: &[Rational], y: &[Rational]| {
                x.iter()
                    .zip(y)
                    .map(|(p, q)| rational::abs_diff(p, q))
                    .max()
                    .unwrap_or_else(Rational::zero)
            };
            let df: Vec<Rational> = sys
                .states()
                .map(|s| expectation(sys.successors(s), &f))
                .collect();
            let dg: Vec<Rational> = sys
                .states()
                .map(|s| expectation(sys.successors(s), &g))
                .collect();
            if sup(&df, &dg) > sup(&f, &g) {
                return Err(("<> expands the sup distance".into(), cx));
            }
            checks += 1;
        }
        Ok(checks)
    })
}

/// Standard translation, locality under restriction, zero distance to the
/// unravelling and to images under union injections.
pub fn structural(cfg: &SuiteConfig) -> PropertyResult {
    run_trials("structural", cfg.structural_instances, |t| {
        let mut rng = trial_rng(cfg.seed, 5, t);
        let atoms = rng.gen_range(1..=cfg.max_atoms.max(1));
        let sys = gen_system(&mut rng, cfg, atoms);
        let cx = json!({ "system": system_to_json(&sys) });
        let a = StateId(rng.gen_range(0..sys.state_count()));
        let fcfg = RandomFormulaConfig {
            atoms: sys.atoms().to_vec(),
            max_rank: cfg.depth.min(3),
            max_depth: 6,
            grid: cfg.denominator_bound,
            sugar: true,
        };
        let phi: Formula = random_modal(&mut rng, &fcfg);
        let here = with(
            cx.clone(),
            json!({"state": a.0, "formula": render_modal(&phi)}),
        );
        let direct = eval_modal(&sys, &phi, a).map_err(|e| internal(e, here.clone()))?;
        let x = Variable::new("x");
        let st = standard_translation(&phi, &x);
        let env: Environment = [(x, a)].into_iter().collect();
        let translated = eval_fo(&sys, &st, &env).map_err(|e| internal(e, here.clone()))?;
        if direct != translated {
            return Err((
                format!("standard translation gives {translated}, modal value {direct}"),
                here,
            ));
        }
        let k = modal_rank(&phi);
        let local = restrict(&sys, a, k).map_err(|e| internal(e, here.clone()))?;
        let restricted =
            eval_modal(&local.system, &phi, local.center).map_err(|e| internal(e, here.clone()))?;
        if restricted != direct {
            return Err((
                format!("rank-{k} formula changes under radius-{k} restriction"),
                here,
            ));
        }
        let mut checks = 2;
        // the costlier game checks run on every tenth instance
        if t % 10 == 0 {
            let n = rng.gen_range(0..=cfg.depth.min(3));
            let tree = unravel(&sys, a, n).map_err(|e| internal(e, here.clone()))?;
            let game_here = with(here.clone(), json!({"depth": n}));
            let cert = Synthesizer::new(&sys, &tree.system, n)
                .map_err(|e| internal(e, game_here.clone()))?
                .synthesize(a, tree.root, n, &Rational::zero())
                .map_err(|e| internal(e, game_here.clone()))?;
            if !verify_certificate(&cert, &sys, &tree.system).ok
                || !exhaustive_spoiler(&cert, &sys, &tree.system)
            {
                return Err((
                    "unravelling certificate at ε = 0 rejected".into(),
                    game_here,
                ));
            }
            let doubled = disjoint_union(&[&sys, &sys]).map_err(|e| internal(e, here.clone()))?;
            let synth = Synthesizer::new(&sys, &doubled.system, n)
                .map_err(|e| internal(e, game_here.clone()))?;
            for part in 0..2 {
                let map: Vec<StateId> = sys.states().map(|s| doubled.inject(part, s)).collect();
                let report = check_morphism(&MorphismCandidate {
                    source: &sys,
                    target: &doubled.system,
                    map,
                })
                .map_err(|e| internal(e, game_here.clone()))?;
                if !report.is_morphism {
                    return Err((
                        format!("union injection is not a morphism: {:?}", report.violation),
                        game_here,
                    ));
                }
                let image = doubled.inject(part, a);
                let cert = synth
                    .synthesize(a, image, n, &Rational::zero())
                    .map_err(|e| internal(e, game_here.clone()))?;
                if !verify_certificate(&cert, &sys, &doubled.system).ok {
                    return Err(("morphism certificate at ε = 0 rejected".into(), game_here));
                }
            }
            checks += 4;
        }
        Ok(checks)
    })
}

/// Optimal price functions, extended to all states, are approximated within
/// δ in sup-norm by formulas of the right rank.
pub fn density(cfg: &SuiteConfig) -> PropertyResult {
    run_trials("density", cfg.density_systems, |t| {
        let mut rng = trial_rng(cfg.seed, 6, t);
        let atoms = rng.gen_range(1..=cfg.max_atoms.max(1));
        let sys = gen_system(&mut rng, cfg, atoms);
        let cx = json!({ "system": system_to_json(&sys) });
        let n = cfg.depth.max(1);
        let chain =
            distance_chain(&sys, n, Method::Kantorovich).map_err(|e| internal(e, cx.clone()))?;
        let transient: Vec<StateId> = sys.states().filter(|s| !sys.is_terminating(*s)).collect();
        let mut functions = Vec::new();
        for _ in 0..cfg.density_functions {
            let m = rng.gen_range(1..=n);
            let d = &chain[m - 1];
            let f = if transient.is_empty() {
                let val = ratio(rng.gen_range(0..=4), 4);
                StateFunction::new([(StateId(0), val)].into_iter().collect(), m - 1, d)
            } else {
                let a = transient[rng.gen_range(0..transient.len())];
                let b = transient[rng.gen_range(0..transient.len())];
                let lift = kantorovich_lift(d, sys.successors(a), sys.successors(b))
                    .map_err(|e| internal(e, cx.clone()))?;
                StateFunction::from_price(&lift.price, m - 1, d)
            }
            .map_err(|e| internal(e, cx.clone()))?;
            functions.push(f.extend_to_all(d));
        }
        let mut ap = Approximator::with_chain(&sys, chain);
        let mut checks = 0;
        for f in &functions {
            for delta in &cfg.density_deltas {
                let here = with(
                    cx.clone(),
                    json!({
                        "depth": f.base_depth(),
                        "delta": r(delta),
                        "function": f.values().values().map(r).collect::<Vec<_>>(),
                    }),
                );
                let phi = ap
                    .approximate(f, delta)
                    .map_err(|e| internal(e, here.clone()))?;
                let v = ap.values(&phi).map_err(|e| internal(e, here.clone()))?;
                let err = f
                    .values()
                    .iter()
                    .map(|(s, target)| rational::abs_diff(&v[s.0], target))
                    .max()
                    .unwrap_or_else(Rational::zero);
                if err > *delta || modal_rank(&phi) > f.base_depth() {
                    return Err((
                        format!("sup error {err} or rank {} out of budget", modal_rank(&phi)),
                        here,
                    ));
                }
                checks += 1;
            }
        }
        Ok(checks)
    })
}

/// All properties in a fixed order.
pub fn run_suite(cfg: &SuiteConfig) -> Vec<PropertyResult> {
    vec![
        fixture_replay(),
        coincidence(cfg),
        duality(cfg),
        game_bracket(cfg),
        nonexpansivity(cfg),
        structural(cfg),
        density(cfg),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SuiteConfig {
        SuiteConfig {
            max_states: 4,
            depth: 2,
            trials: 3,
            witness_pairs: 2,
            duality_instances: 20,
            game_samples: 10,
            formulas: 60,
            structural_instances: 20,
            density_systems: 1,
            density_functions: 3,
            ..Default::default()
        }
    }

    #[test]
    fn small_suite_passes_and_is_deterministic() {
        let cfg = small();
        let first = run_suite(&cfg);
        for p in &first {
            assert!(p.passed, "{}: {}", p.name, p.detail);
        }
        let again = run_suite(&cfg);
        let summary = |rs: &[PropertyResult]| -> Vec<(bool, usize)> {
            rs.iter().map(|p| (p.passed, p.checked)).collect()
        };
        assert_eq!(summary(&first), summary(&again));
    }

    #[test]
    fn dropping_the_atom_term_is_detected() {
        let cfg = SuiteConfig {
            faults: ChainOptions {
                skip_atom_term: true,
            },
            ..small()
        };
        let result = coincidence(&cfg);
        assert!(!result.passed);
        assert!(result.counterexample.is_some());
    }

    #[test]
    fn zero_trials_pass_vacuously() {
        let cfg = SuiteConfig {
            trials: 0,
            ..small()
        };
        let result = coincidence(&cfg);
        assert!(result.passed && result.checked == 0);
    }
}
