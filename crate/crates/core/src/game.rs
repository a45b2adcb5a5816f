//! The n-round ε-bisimulation game.
//!
//! At a configuration `(a, b, ε)` with rounds left the spoiler wins at once
//! if some atom differs by more than ε. Otherwise the duplicator wins if
//! both states terminate or ε = 1, and loses if exactly one terminates.
//! In every other case the duplicator commits to a coupling `μ` of the two
//! successor distributions and a slack `ε'` with `∫ ε' dμ <= ε`; the spoiler
//! then picks a pair `(a', b')` with `μ(a', b') > 0` and play continues at
//! `(a', b', ε'(a', b'))`. Nothing is checked once no rounds are left.
//!
//! A [`StrategyCertificate`] records one duplicator move per reachable
//! configuration and can be checked without trusting its producer.

#![allow(clippy::result_large_err)]

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::metrics::{
    behavioural_distance, wasserstein_lift, DistanceChain, Method, MetricError, Point,
};
use crate::rational::{self, Rational};
use crate::system::{StateId, SystemError, TransitionSystem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(
        "the duplicator cannot win with ε = {epsilon}: the depth-{depth} distance is {distance}"
    )]
    NotWinnable {
        epsilon: Rational,
        distance: Rational,
        depth: usize,
    },
    #[error("ε = {0} is outside [0,1]")]
    EpsilonRange(Rational),
    #[error("depth {requested} exceeds the precomputed depth {available}")]
    DepthExceeded { requested: usize, available: usize },
    #[error("tuples have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("certificate format: {at}: {message}")]
    Format { at: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameConfig {
    pub a: StateId,
    pub b: StateId,
    pub epsilon: Rational,
    pub rounds_left: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DuplicatorMove {
    pub coupling: BTreeMap<(StateId, StateId), Rational>,
    pub slack: BTreeMap<(StateId, StateId), Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyCertificate {
    pub root: GameConfig,
    pub duplicator: Option<DuplicatorMove>,
    pub children: BTreeMap<(StateId, StateId), StrategyCertificate>,
}

impl StrategyCertificate {
    pub fn node_count(&self) -> usize {
        1 + self
            .children
            .values()
            .map(|c| c.node_count())
            .sum::<usize>()
    }
}

/// The depth-n game value, read off the transport chain.
pub fn game_distance(
    sys_a: &TransitionSystem,
    sys_b: &TransitionSystem,
    a: StateId,
    b: StateId,
    n: usize,
) -> Result<Rational, GameError> {
    sys_a.check_id(a)?;
    sys_b.check_id(b)?;
    let chain = behavioural_distance(sys_a, sys_b, n, Method::Wasserstein)?;
    Ok(chain.between(n, a, b).clone())
}

/// Builds duplicator strategies from optimal transport plans.
pub struct Synthesizer<'a> {
    sys_a: &'a TransitionSystem,
    sys_b: &'a TransitionSystem,
    chain: DistanceChain,
}

impl<'a> Synthesizer<'a> {
    /// Precomputes distances up to `depth`.
    pub fn new(
        sys_a: &'a TransitionSystem,
        sys_b: &'a TransitionSystem,
        depth: usize,
    ) -> Result<Self, GameError> {
        let chain = behavioural_distance(sys_a, sys_b, depth, Method::Wasserstein)?;
        Ok(Self {
            sys_a,
            sys_b,
            chain,
        })
    }

    pub fn chain(&self) -> &DistanceChain {
        &self.chain
    }

    pub fn distance(&self, a: StateId, b: StateId, n: usize) -> &Rational {
        self.chain.between(n, a, b)
    }

    /// A certificate for `(a, b, ε)` with `n` rounds, available exactly
    /// when `ε >= d_n(a, b)`.
    pub fn synthesize(
        &self,
        a: StateId,
        b: StateId,
        n: usize,
        epsilon: &Rational,
    ) -> Result<StrategyCertificate, GameError> {
        self.sys_a.check_id(a)?;
        self.sys_b.check_id(b)?;
        if !rational::is_unit_interval(epsilon) {
            return Err(GameError::EpsilonRange(epsilon.clone()));
        }
        if n > self.chain.depth() {
            return Err(GameError::DepthExceeded {
                requested: n,
                available: self.chain.depth(),
            });
        }
        let distance = self.distance(a, b, n);
        if epsilon < distance {
            return Err(GameError::NotWinnable {
                epsilon: epsilon.clone(),
                distance: distance.clone(),
                depth: n,
            });
        }
        self.node(a, b, n, epsilon.clone())
    }

    fn node(
        &self,
        a: StateId,
        b: StateId,
        m: usize,
        epsilon: Rational,
    ) -> Result<StrategyCertificate, GameError> {
        let root = GameConfig {
            a,
            b,
            epsilon,
            rounds_left: m,
        };
        let leaf = |root| StrategyCertificate {
            root,
            duplicator: None,
            children: BTreeMap::new(),
        };
        let (ta, tb) = (self.sys_a.is_terminating(a), self.sys_b.is_terminating(b));
        if m == 0 || ta || tb || root.epsilon.is_one() {
            return Ok(leaf(root));
        }
        let prev = self.chain.level(m - 1);
        let plan = wasserstein_lift(
            prev,
            self.chain.system.successors(a),
            self.chain.system.successors(self.chain.b_state(b)),
        )?;
        let surplus = &root.epsilon - &plan.value;
        let share = surplus / Rational::from_integer(plan.coupling.entries.len().into());
        let mut mv = DuplicatorMove::default();
        let mut children = BTreeMap::new();
        for ((x, y), w) in plan.coupling.entries {
            let (Point::State(x), Point::State(y)) = (x, y) else {
                unreachable!("both states have distributions");
            };
            let y_local = StateId(y.0 - self.chain.offset_b);
            let slack = (prev.get(x, y) + &share).min(Rational::one());
            children.insert((x, y_local), self.node(x, y_local, m - 1, slack.clone())?);
            mv.coupling.insert((x, y_local), w);
            mv.slack.insert((x, y_local), slack);
        }
        Ok(StrategyCertificate {
            root,
            duplicator: Some(mv),
            children,
        })
    }
}

pub fn synthesize_duplicator_strategy(
    sys_a: &TransitionSystem,
    sys_b: &TransitionSystem,
    a: StateId,
    b: StateId,
    n: usize,
    epsilon: &Rational,
) -> Result<StrategyCertificate, GameError> {
    Synthesizer::new(sys_a, sys_b, n)?.synthesize(a, b, n, epsilon)
}

/// Rule broken by a certificate node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clause {
    UnknownState,
    EpsilonRange,
    AtomCondition,
    Termination,
    MissingMove,
    CouplingSupport,
    Marginals,
    SlackRange,
    SlackBudget,
    ChildrenCover,
    ChildConfig,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Spoiler choices leading from the root to the offending node.
    pub path: Vec<(StateId, StateId)>,
    pub clause: Clause,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub ok: bool,
    pub violation: Option<Violation>,
}

/// Checks every node of the certificate against the game rules, reporting
/// the first violation in depth-first order.
pub fn verify_certificate(
    cert: &StrategyCertificate,
    sys_a: &TransitionSystem,
    sys_b: &TransitionSystem,
) -> Verification {
    let mut path = Vec::new();
    match verify_node(cert, sys_a, sys_b, &mut path) {
        Ok(()) => Verification {
            ok: true,
            violation: None,
        },
        Err((clause, detail)) => Verification {
            ok: false,
            violation: Some(Violation {
                path,
                clause,
                detail,
            }),
        },
    }
}

fn verify_node(
    cert: &StrategyCertificate,
    sys_a: &TransitionSystem,
    sys_b: &TransitionSystem,
    path: &mut Vec<(StateId, StateId)>,
) -> Result<(), (Clause, String)> {
    let GameConfig {
        a,
        b,
        epsilon,
        rounds_left,
    } = &cert.root;
    let (a, b) = (*a, *b);
    if sys_a.check_id(a).is_err() || sys_b.check_id(b).is_err() {
        return Err((Clause::UnknownState, format!("({a}, {b})")));
    }
    if !rational::is_unit_interval(epsilon) {
        return Err((Clause::EpsilonRange, format!("ε = {epsilon}")));
    }
    if *rounds_left == 0 {
        return Ok(());
    }
    let gap = sys_a.atom_gap(a, sys_b, b);
    if gap > *epsilon {
        return Err((
            Clause::AtomCondition,
            format!("atom gap {gap} exceeds ε = {epsilon}"),
        ));
    }
    let (ta, tb) = (sys_a.is_terminating(a), sys_b.is_terminating(b));
    if ta && tb {
        return Ok(());
    }
    if ta != tb && !epsilon.is_one() {
        return Err((
            Clause::Termination,
            format!("exactly one state terminates and ε = {epsilon} < 1"),
        ));
    }
    if epsilon.is_one() {
        return Ok(());
    }
    let Some(mv) = &cert.duplicator else {
        return Err((Clause::MissingMove, "no duplicator move".into()));
    };
    let (pa, pb) = (sys_a.successors(a), sys_b.successors(b));
    let mut row: BTreeMap<StateId, Rational> = BTreeMap::new();
    let mut col: BTreeMap<StateId, Rational> = BTreeMap::new();
    for ((x, y), w) in &mv.coupling {
        if !w.is_positive() || pa.weight(*x).is_zero() || pb.weight(*y).is_zero() {
            return Err((
                Clause::CouplingSupport,
                format!("μ({x}, {y}) = {w} outside the successor supports or not positive"),
            ));
        }
        *row.entry(*x).or_insert_with(Rational::zero) += w;
        *col.entry(*y).or_insert_with(Rational::zero) += w;
    }
    let want_row: BTreeMap<StateId, Rational> = pa.entries().iter().cloned().collect();
    let want_col: BTreeMap<StateId, Rational> = pb.entries().iter().cloned().collect();
    if row != want_row || col != want_col {
        return Err((
            Clause::Marginals,
            "coupling marginals differ from π_a, π_b".into(),
        ));
    }
    if let Some((k, v)) = mv
        .slack
        .iter()
        .find(|(_, v)| !rational::is_unit_interval(v))
    {
        return Err((Clause::SlackRange, format!("ε'{k:?} = {v} outside [0,1]")));
    }
    let mut integral = Rational::zero();
    for (k, w) in &mv.coupling {
        match mv.slack.get(k) {
            Some(s) => integral += w * s,
            None => {
                return Err((Clause::SlackRange, format!("ε'{k:?} is undefined")));
            }
        }
    }
    if integral > *epsilon {
        return Err((
            Clause::SlackBudget,
            format!("∫ε' dμ = {integral} exceeds ε = {epsilon}"),
        ));
    }
    if !cert.children.keys().eq(mv.coupling.keys()) {
        return Err((
            Clause::ChildrenCover,
            "children do not match the coupling support".into(),
        ));
    }
    for (k, child) in &cert.children {
        let want = GameConfig {
            a: k.0,
            b: k.1,
            epsilon: mv.slack[k].clone(),
            rounds_left: rounds_left - 1,
        };
        path.push(*k);
        if child.root != want {
            return Err((
                Clause::ChildConfig,
                format!("child configuration {:?} should be {want:?}", child.root),
            ));
        }
        verify_node(child, sys_a, sys_b, path)?;
        path.pop();
    }
    Ok(())
}

/// Plays the game against every spoiler line, with the duplicator
/// answering from the certificate. True iff the duplicator never loses.
pub fn exhaustive_spoiler(
    cert: &StrategyCertificate,
    sys_a: &TransitionSystem,
    sys_b: &TransitionSystem,
) -> bool {
    // each pending play: the configuration actually reached, and the
    // certificate node the duplicator consults there
    let start = (
        cert.root.a,
        cert.root.b,
        cert.root.epsilon.clone(),
        cert.root.rounds_left,
    );
    let mut plays = vec![(start, cert)];
    while let Some(((a, b, eps, rounds), node)) = plays.pop() {
        if sys_a.check_id(a).is_err() || sys_b.check_id(b).is_err() {
            return false;
        }
        if eps.is_negative() || eps > Rational::one() {
            return false;
        }
        if rounds == 0 {
            continue;
        }
        let atoms_ok = (0..sys_a.atoms().len())
            .all(|p| rational::abs_diff(sys_a.value(p, a), sys_b.value(p, b)) <= eps);
        if !atoms_ok {
            return false;
        }
        match (
            sys_a.successors(a).distribution(),
            sys_b.successors(b).distribution(),
        ) {
            (None, None) => continue,
            (None, Some(_)) | (Some(_), None) => {
                if eps.is_one() {
                    continue;
                }
                return false;
            }
            (Some(da), Some(db)) => {
                if eps.is_one() {
                    continue;
                }
                let Some(mv) = &node.duplicator else {
                    return false;
                };
                // μ must be a coupling: check each successor's mass row by row
                for (x, wx) in da.entries() {
                    let s: Rational = mv
                        .coupling
                        .range((*x, StateId(0))..=(*x, StateId(usize::MAX)))
                        .map(|(_, w)| w)
                        .sum();
                    if s != *wx {
                        return false;
                    }
                }
                for (y, wy) in db.entries() {
                    let s: Rational = mv
                        .coupling
                        .iter()
                        .filter(|((_, y2), _)| y2 == y)
                        .map(|(_, w)| w)
                        .sum();
                    if s != *wy {
                        return false;
                    }
                }
                let total: Rational = mv.coupling.values().sum();
                if !total.is_one() || mv.coupling.values().any(|w| !w.is_positive()) {
                    return false;
                }
                if mv
                    .slack
                    .values()
                    .any(|s| s.is_negative() || *s > Rational::one())
                {
                    return false;
                }
                let mut spent = Rational::zero();
                for (pair, w) in &mv.coupling {
                    let Some(s) = mv.slack.get(pair) else {
                        return false;
                    };
                    spent += w * s;
                }
                if spent > eps {
                    return false;
                }
                // the spoiler may pick any pair of positive weight
                for pair in mv.coupling.keys() {
                    let next = (pair.0, pair.1, mv.slack[pair].clone(), rounds - 1);
                    match node.children.get(pair) {
                        Some(child)
                            if child.root.a == next.0
                                && child.root.b == next.1
                                && child.root.epsilon == next.2
                                && child.root.rounds_left == next.3 =>
                        {
                            plays.push((next, child));
                        }
                        _ => return false,
                    }
                }
            }
        }
    }
    true
}

/// Same equality pattern, equal valuations and equal transition weights
/// between corresponding entries.
pub fn partial_isomorphism(
    sys_a: &TransitionSystem,
    a: &[StateId],
    sys_b: &TransitionSystem,
    b: &[StateId],
) -> Result<bool, GameError> {
    if a.len() != b.len() {
        return Err(GameError::LengthMismatch(a.len(), b.len()));
    }
    sys_a.same_atoms(sys_b)?;
    for (&x, &y) in a.iter().zip(b) {
        sys_a.check_id(x)?;
        sys_b.check_id(y)?;
    }
    for i in 0..a.len() {
        if (0..sys_a.atoms().len()).any(|p| sys_a.value(p, a[i]) != sys_b.value(p, b[i])) {
            return Ok(false);
        }
        for j in 0..a.len() {
            if (a[i] == a[j]) != (b[i] == b[j]) {
                return Ok(false);
            }
            if sys_a.weight(a[i], a[j]) != sys_b.weight(b[i], b[j]) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// JSON form with states given by label and numbers as rational strings.
pub fn certificate_to_json(
    cert: &StrategyCertificate,
    sys_a: &TransitionSystem,
    sys_b: &TransitionSystem,
) -> Value {
    let mut obj = Map::new();
    obj.insert("a".into(), json!(sys_a.label(cert.root.a)));
    obj.insert("b".into(), json!(sys_b.label(cert.root.b)));
    obj.insert(
        "epsilon".into(),
        json!(rational::format(&cert.root.epsilon)),
    );
    obj.insert("rounds_left".into(), json!(cert.root.rounds_left));
    if let Some(mv) = &cert.duplicator {
        let moves: Vec<Value> = mv
            .coupling
            .iter()
            .map(|(k, w)| {
                let mut m = Map::new();
                m.insert("a".into(), json!(sys_a.label(k.0)));
                m.insert("b".into(), json!(sys_b.label(k.1)));
                m.insert("weight".into(), json!(rational::format(w)));
                if let Some(s) = mv.slack.get(k) {
                    m.insert("slack".into(), json!(rational::format(s)));
                }
                if let Some(c) = cert.children.get(k) {
                    m.insert("next".into(), certificate_to_json(c, sys_a, sys_b));
                }
                Value::Object(m)
            })
            .collect();
        obj.insert("move".into(), Value::Array(moves));
    }
    Value::Object(obj)
}

pub fn certificate_from_json(
    v: &Value,
    sys_a: &TransitionSystem,
    sys_b: &TransitionSystem,
) -> Result<StrategyCertificate, GameError> {
    parse_node(v, sys_a, sys_b, "$")
}

fn format_err(at: &str, message: impl Into<String>) -> GameError {
    GameError::Format {
        at: at.to_string(),
        message: message.into(),
    }
}

fn field<'v>(v: &'v Value, key: &str, at: &str) -> Result<&'v Value, GameError> {
    v.get(key)
        .ok_or_else(|| format_err(at, format!("missing field {key:?}")))
}

fn state_field(
    v: &Value,
    key: &str,
    sys: &TransitionSystem,
    at: &str,
) -> Result<StateId, GameError> {
    let label = field(v, key, at)?
        .as_str()
        .ok_or_else(|| format_err(&format!("{at}.{key}"), "expected a state label"))?;
    Ok(sys.lookup(label)?)
}

fn rational_field(v: &Value, key: &str, at: &str) -> Result<Rational, GameError> {
    let text = field(v, key, at)?
        .as_str()
        .ok_or_else(|| format_err(&format!("{at}.{key}"), "expected a rational string"))?;
    rational::parse(text).map_err(|e| format_err(&format!("{at}.{key}"), e.to_string()))
}

fn parse_node(
    v: &Value,
    sys_a: &TransitionSystem,
    sys_b: &TransitionSystem,
    at: &str,
) -> Result<StrategyCertificate, GameError> {
    let root = GameConfig {
        a: state_field(v, "a", sys_a, at)?,
        b: state_field(v, "b", sys_b, at)?,
        epsilon: rational_field(v, "epsilon", at)?,
        rounds_left: field(v, "rounds_left", at)?
            .as_u64()
            .ok_or_else(|| format_err(&format!("{at}.rounds_left"), "expected a natural number"))?
            as usize,
    };
    let mut cert = StrategyCertificate {
        root,
        duplicator: None,
        children: BTreeMap::new(),
    };
    if let Some(moves) = v.get("move") {
        let moves = moves
            .as_array()
            .ok_or_else(|| format_err(&format!("{at}.move"), "expected an array"))?;
        let mut mv = DuplicatorMove::default();
        for (i, m) in moves.iter().enumerate() {
            let here = format!("{at}.move[{i}]");
            let k = (
                state_field(m, "a", sys_a, &here)?,
                state_field(m, "b", sys_b, &here)?,
            );
            mv.coupling.insert(k, rational_field(m, "weight", &here)?);
            if m.get("slack").is_some() {
                mv.slack.insert(k, rational_field(m, "slack", &here)?);
            }
            if let Some(next) = m.get("next") {
                let child = parse_node(next, sys_a, sys_b, &format!("{here}.next"))?;
                cert.children.insert(k, child);
            }
        }
        cert.duplicator = Some(mv);
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::perturbed_pair;
    use crate::rational::{int, ratio};
    use crate::system::disjoint_union;

    #[test]
    fn fixture_game_value_and_replayed_plan() {
        let sys = perturbed_pair(&ratio(1, 4));
        let id = |l: &str| sys.lookup(l).unwrap();
        assert_eq!(
            game_distance(&sys, &sys, id("x"), id("y"), 3).unwrap(),
            ratio(3, 16)
        );
        let cert =
            synthesize_duplicator_strategy(&sys, &sys, id("x"), id("y"), 3, &ratio(3, 16)).unwrap();
        let mv = cert.duplicator.as_ref().unwrap();
        let expected: BTreeMap<_, _> = [
            ((id("x1"), id("y1")), ratio(1, 4)),
            ((id("x1"), id("y2")), ratio(1, 4)),
            ((id("x2"), id("y2")), ratio(1, 2)),
        ]
        .into_iter()
        .collect();
        assert_eq!(mv.coupling, expected);
        // zero surplus: slack is exactly the depth-2 distance
        assert_eq!(mv.slack[&(id("x1"), id("y1"))], ratio(1, 4));
        assert_eq!(mv.slack[&(id("x1"), id("y2"))], ratio(1, 2));
        assert_eq!(mv.slack[&(id("x2"), id("y2"))], int(0));
        assert!(verify_certificate(&cert, &sys, &sys).ok);
        assert!(exhaustive_spoiler(&cert, &sys, &sys));
        assert_eq!(cert.children.len(), 3);
    }

    #[test]
    fn refuses_below_the_distance() {
        let sys = perturbed_pair(&ratio(1, 4));
        let id = |l: &str| sys.lookup(l).unwrap();
        let eps = ratio(3, 16) - ratio(1, 64);
        assert!(matches!(
            synthesize_duplicator_strategy(&sys, &sys, id("x"), id("y"), 3, &eps),
            Err(GameError::NotWinnable { .. })
        ));
        // exactly one terminating state
        assert!(matches!(
            synthesize_duplicator_strategy(&sys, &sys, id("x3"), id("x4"), 1, &ratio(1, 2)),
            Err(GameError::NotWinnable { .. })
        ));
    }

    #[test]
    fn zero_rounds_and_identity() {
        let sys = perturbed_pair(&ratio(1, 10));
        let id = |l: &str| sys.lookup(l).unwrap();
        assert_eq!(
            game_distance(&sys, &sys, id("x"), id("y4"), 0).unwrap(),
            int(0)
        );
        let cert =
            synthesize_duplicator_strategy(&sys, &sys, id("x"), id("x"), 3, &int(0)).unwrap();
        assert!(verify_certificate(&cert, &sys, &sys).ok);
        let mv = cert.duplicator.as_ref().unwrap();
        assert!(mv.coupling.keys().all(|(p, q)| p == q));
        assert!(mv.slack.values().all(|s| s.is_zero()));
    }

    #[test]
    fn tampered_slack_is_caught() {
        let sys = perturbed_pair(&ratio(1, 4));
        let id = |l: &str| sys.lookup(l).unwrap();
        let mut cert =
            synthesize_duplicator_strategy(&sys, &sys, id("x"), id("y"), 3, &ratio(3, 16)).unwrap();
        let k = (id("x1"), id("y1"));
        let lowered = ratio(1, 8);
        cert.duplicator
            .as_mut()
            .unwrap()
            .slack
            .insert(k, lowered.clone());
        cert.children.get_mut(&k).unwrap().root.epsilon = lowered;
        let v = verify_certificate(&cert, &sys, &sys);
        assert!(!v.ok);
        let violation = v.violation.unwrap();
        assert_eq!(violation.path.first(), Some(&k));
        assert!(!exhaustive_spoiler(&cert, &sys, &sys));
    }

    #[test]
    fn json_round_trip() {
        let sys = perturbed_pair(&ratio(1, 4));
        let id = |l: &str| sys.lookup(l).unwrap();
        let cert =
            synthesize_duplicator_strategy(&sys, &sys, id("x"), id("y"), 3, &ratio(1, 4)).unwrap();
        let v = certificate_to_json(&cert, &sys, &sys);
        assert_eq!(certificate_from_json(&v, &sys, &sys).unwrap(), cert);
    }

    #[test]
    fn partial_isomorphisms() {
        let sys = perturbed_pair(&ratio(1, 4));
        let id = |l: &str| sys.lookup(l).unwrap();
        assert!(partial_isomorphism(&sys, &[], &sys, &[]).unwrap());
        let u = disjoint_union(&[&sys, &sys]).unwrap();
        let x2 = u.inject(1, id("x"));
        assert!(partial_isomorphism(&sys, &[id("x")], &u.system, &[x2]).unwrap());
        assert!(
            !partial_isomorphism(&sys, &[id("x"), id("x1")], &sys, &[id("y"), id("y1")]).unwrap()
        );
        assert!(matches!(
            partial_isomorphism(&sys, &[id("x")], &sys, &[]),
            Err(GameError::LengthMismatch(1, 0))
        ));
    }
}
