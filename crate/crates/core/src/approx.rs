//! Synthesis of modal formulas that approximate non-expansive state
//! functions and witness depth-n distances.
//!
//! The three constructions call each other with shrinking slack:
//!
//! * `witness(a, b, m, δ)`: an atom if an atom realizes `d_m(a, b)`, `<>1`
//!   if exactly one state terminates, and otherwise `<>ψ` where `ψ`
//!   approximates an optimal price function of the lift within `δ/2`.
//! * `approximate(f, k, δ)`: `max_x min_y g_xy` over the domain of `f`, with
//!   each `g_xy` matching `f` at `x` and `y` within `δ/2`.
//! * `pair(f, x, y, k, δ)`: a constant if `f(x)` and `f(y)` are close,
//!   otherwise a witness for `(x, y)` at slack `δ/2`, shifted with `-.` so
//!   its lower value lands on the lower target and clipped between the two
//!   target values.
//!
//! Synthesized constants are rounded to multiples of `δ / (4 |A|)`.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::eval::{EvalError, Evaluator};
use crate::formula::{
    and, and_all, atom, constant, diamond, modal_rank, neg, or, or_all, simplify, trunc_sub,
    Formula,
};
use crate::metrics::{
    distance_chain, kantorovich_lift, DistanceChain, Method, MetricError, Point, PseudometricMatrix,
};
use crate::rational::{self, Rational};
use crate::system::{disjoint_union, StateId, SystemError, TransitionSystem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApproxError {
    #[error("slack must be positive")]
    SlackTooSmall,
    #[error("value {value} at state {state} is outside [0,1]")]
    Range { state: StateId, value: Rational },
    #[error("|f({a}) - f({b})| exceeds the depth-{depth} distance")]
    NotNonExpansive {
        a: StateId,
        b: StateId,
        depth: usize,
    },
    #[error("depth {requested} exceeds the precomputed depth {available}")]
    DepthExceeded { requested: usize, available: usize },
    #[error("synthesized formula misses its guarantee: {0}")]
    Internal(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// A `[0,1]`-valued function on some of the states of a system that is
/// non-expansive with respect to `d_n`, `n = base_depth`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateFunction {
    values: BTreeMap<StateId, Rational>,
    base_depth: usize,
}

impl StateFunction {
    /// Checks range and non-expansiveness against `d`, which must be `d_n`.
    pub fn new(
        values: BTreeMap<StateId, Rational>,
        base_depth: usize,
        d: &PseudometricMatrix,
    ) -> Result<Self, ApproxError> {
        for (s, v) in &values {
            if s.0 >= d.size() {
                return Err(MetricError::OutOfDomain(*s, d.size()).into());
            }
            if !rational::is_unit_interval(v) {
                return Err(ApproxError::Range {
                    state: *s,
                    value: v.clone(),
                });
            }
        }
        for (a, fa) in &values {
            for (b, fb) in values.range(a..) {
                if rational::abs_diff(fa, fb) > *d.get(*a, *b) {
                    return Err(ApproxError::NotNonExpansive {
                        a: *a,
                        b: *b,
                        depth: base_depth,
                    });
                }
            }
        }
        Ok(Self { values, base_depth })
    }

    /// Restriction of an optimal price function to its states.
    pub fn from_price(
        price: &crate::metrics::PriceFunction,
        base_depth: usize,
        d: &PseudometricMatrix,
    ) -> Result<Self, ApproxError> {
        let values = price
            .values
            .iter()
            .filter_map(|(p, v)| match p {
                Point::State(s) => Some((*s, v.clone())),
                Point::Halt => None,
            })
            .collect();
        Self::new(values, base_depth, d)
    }

    pub fn values(&self) -> &BTreeMap<StateId, Rational> {
        &self.values
    }

    pub fn base_depth(&self) -> usize {
        self.base_depth
    }

    pub fn get(&self, s: StateId) -> Option<&Rational> {
        self.values.get(&s)
    }

    /// Non-expansive extension to every state of `d`'s domain:
    /// `z ↦ min_x f(x) + d(x, z)`, clipped to `[0,1]`. Agrees with `f` on
    /// its domain. An empty function extends to 0.
    pub fn extend_to_all(&self, d: &PseudometricMatrix) -> StateFunction {
        let values = (0..d.size())
            .map(|z| {
                let z = StateId(z);
                let v = self
                    .values
                    .iter()
                    .map(|(x, fx)| fx + d.get(*x, z))
                    .min()
                    .unwrap_or_else(Rational::zero);
                (z, v.min(Rational::one()))
            })
            .collect();
        StateFunction {
            values,
            base_depth: self.base_depth,
        }
    }
}

/// Memoized synthesis engine over one system and its distance chain.
pub struct Approximator<'a> {
    sys: &'a TransitionSystem,
    chain: Vec<PseudometricMatrix>,
    eval: Evaluator<'a>,
    witnesses: HashMap<(StateId, StateId, usize, Rational), Formula>,
    grid_den: Rational,
}

impl<'a> Approximator<'a> {
    pub fn new(sys: &'a TransitionSystem, depth: usize) -> Result<Self, ApproxError> {
        let chain = distance_chain(sys, depth, Method::Wasserstein)?;
        Ok(Self::with_chain(sys, chain))
    }

    /// Uses a precomputed chain `d_0, ..., d_n` of `sys`.
    pub fn with_chain(sys: &'a TransitionSystem, chain: Vec<PseudometricMatrix>) -> Self {
        assert!(!chain.is_empty() && chain[0].size() == sys.state_count());
        Self {
            sys,
            chain,
            eval: Evaluator::new(sys),
            witnesses: HashMap::new(),
            grid_den: Rational::from_integer((4 * sys.state_count()).into()),
        }
    }

    pub fn chain(&self) -> &[PseudometricMatrix] {
        &self.chain
    }

    pub fn values(&mut self, f: &Formula) -> Result<std::sync::Arc<Vec<Rational>>, ApproxError> {
        Ok(self.eval.values(f)?)
    }

    fn check_depth(&self, n: usize) -> Result<(), ApproxError> {
        let available = self.chain.len() - 1;
        if n > available {
            return Err(ApproxError::DepthExceeded {
                requested: n,
                available,
            });
        }
        Ok(())
    }

    fn check_slack(delta: &Rational) -> Result<(), ApproxError> {
        if delta.is_positive() {
            Ok(())
        } else {
            Err(ApproxError::SlackTooSmall)
        }
    }

    fn grid_constant(&self, v: &Rational, delta: &Rational) -> Formula {
        let step = delta / &self.grid_den;
        constant(rational::clamp_unit(rational::round_to_grid(v, &step)))
    }

    /// Formula of rank at most `n` with `|φ(a) - φ(b)| >= d_n(a, b) - δ`.
    pub fn witness(
        &mut self,
        a: StateId,
        b: StateId,
        n: usize,
        delta: &Rational,
    ) -> Result<Formula, ApproxError> {
        Self::check_slack(delta)?;
        self.check_depth(n)?;
        self.sys.check_id(a)?;
        self.sys.check_id(b)?;
        let raw = self.witness_raw(a, b, n, delta)?;
        let phi = simplify(&raw);
        let v = self.values(&phi)?;
        let gap = rational::abs_diff(&v[a.0], &v[b.0]);
        let target = self.chain[n].get(a, b) - delta;
        if gap < target || modal_rank(&phi) > n {
            return Err(ApproxError::Internal(format!(
                "witness for ({a}, {b}) at depth {n} separates by {gap} only"
            )));
        }
        Ok(phi)
    }

    fn witness_raw(
        &mut self,
        a: StateId,
        b: StateId,
        m: usize,
        delta: &Rational,
    ) -> Result<Formula, ApproxError> {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let memo_key = (a, b, m, delta.clone());
        if let Some(f) = self.witnesses.get(&memo_key) {
            return Ok(f.clone());
        }
        let sys = self.sys;
        let dist = self.chain[m].get(a, b).clone();
        let f = if m == 0 || dist.is_zero() {
            constant(Rational::zero())
        } else if sys.atom_gap(a, sys, b) >= dist {
            let p = sys
                .widest_atom(a, sys, b)
                .expect("positive gap needs an atom");
            atom(&sys.atoms()[p])
        } else if sys.is_terminating(a) != sys.is_terminating(b) {
            diamond(constant(Rational::one()))
        } else {
            let prev = &self.chain[m - 1];
            let lift = kantorovich_lift(prev, sys.successors(a), sys.successors(b))?;
            let f = StateFunction::from_price(&lift.price, m - 1, prev)?;
            let psi =
                self.approximate_raw(&f, m - 1, &(delta / Rational::from_integer(2.into())))?;
            diamond(psi)
        };
        self.witnesses.insert(memo_key, f.clone());
        Ok(f)
    }

    /// Formula of rank at most `f.base_depth()` within `δ` of `f` on every
    /// state of its domain.
    pub fn approximate(
        &mut self,
        f: &StateFunction,
        delta: &Rational,
    ) -> Result<Formula, ApproxError> {
        Self::check_slack(delta)?;
        self.check_depth(f.base_depth)?;
        self.check_function(f)?;
        let raw = self.approximate_raw(f, f.base_depth, delta)?;
        let phi = simplify(&raw);
        self.verify_close(&phi, f, &[], delta)?;
        Ok(phi)
    }

    /// Formula of rank at most `f.base_depth()` within `δ` of `f` at `a`
    /// and at `b`.
    pub fn pair(
        &mut self,
        f: &StateFunction,
        a: StateId,
        b: StateId,
        delta: &Rational,
    ) -> Result<Formula, ApproxError> {
        Self::check_slack(delta)?;
        self.check_depth(f.base_depth)?;
        self.check_function(f)?;
        let raw = self.pair_raw(f, a, b, f.base_depth, delta)?;
        let phi = simplify(&raw);
        self.verify_close(&phi, f, &[a, b], delta)?;
        Ok(phi)
    }

    fn check_function(&self, f: &StateFunction) -> Result<(), ApproxError> {
        // re-check against this system's chain
        StateFunction::new(f.values.clone(), f.base_depth, &self.chain[f.base_depth]).map(|_| ())
    }

    fn verify_close(
        &mut self,
        phi: &Formula,
        f: &StateFunction,
        at: &[StateId],
        delta: &Rational,
    ) -> Result<(), ApproxError> {
        if modal_rank(phi) > f.base_depth {
            return Err(ApproxError::Internal("rank budget exceeded".into()));
        }
        let v = self.values(phi)?;
        let states: Vec<StateId> = if at.is_empty() {
            f.values.keys().copied().collect()
        } else {
            at.to_vec()
        };
        for s in states {
            let target = f.get(s).ok_or_else(|| {
                ApproxError::Internal(format!("state {s} is outside the function's domain"))
            })?;
            if rational::abs_diff(&v[s.0], target) > *delta {
                return Err(ApproxError::Internal(format!(
                    "value {} at {s} is not within {delta} of {target}",
                    v[s.0]
                )));
            }
        }
        Ok(())
    }

    fn approximate_raw(
        &mut self,
        f: &StateFunction,
        k: usize,
        delta: &Rational,
    ) -> Result<Formula, ApproxError> {
        let domain: Vec<StateId> = f.values.keys().copied().collect();
        let (Some(lo), Some(hi)) = (f.values.values().min(), f.values.values().max()) else {
            return Ok(constant(Rational::zero()));
        };
        if hi - lo <= *delta {
            let mid = (lo + hi) / Rational::from_integer(2.into());
            return Ok(self.grid_constant(&mid, delta));
        }
        let half = delta / Rational::from_integer(2.into());
        let mut outer = Vec::with_capacity(domain.len());
        for &x in &domain {
            let mut inner = Vec::with_capacity(domain.len());
            for &y in &domain {
                inner.push(self.pair_raw(f, x, y, k, &half)?);
            }
            outer.push(and_all(inner));
        }
        Ok(or_all(outer))
    }

    fn pair_raw(
        &mut self,
        f: &StateFunction,
        x: StateId,
        y: StateId,
        k: usize,
        delta: &Rational,
    ) -> Result<Formula, ApproxError> {
        let missing = |s: StateId| ApproxError::Internal(format!("state {s} outside the domain"));
        let fx = f.get(x).ok_or_else(|| missing(x))?.clone();
        let fy = f.get(y).ok_or_else(|| missing(y))?.clone();
        if rational::abs_diff(&fx, &fy) <= *delta {
            let mid = (&fx + &fy) / Rational::from_integer(2.into());
            return Ok(self.grid_constant(&mid, delta));
        }
        let (lo, hi, f_lo, f_hi) = if fx < fy {
            (x, y, fx, fy)
        } else {
            (y, x, fy, fx)
        };
        let half = delta / Rational::from_integer(2.into());
        let psi = self.witness_raw(lo, hi, k, &half)?;
        let v = self.values(&psi)?;
        let (chi, c_lo) = if v[hi.0] >= v[lo.0] {
            (psi, v[lo.0].clone())
        } else {
            (neg(psi), Rational::one() - &v[lo.0])
        };
        let step = delta / &self.grid_den;
        let shift = &f_lo - &c_lo;
        let shifted = if shift.is_negative() {
            let t = rational::clamp_unit(rational::round_to_grid(&-shift, &step));
            trunc_sub(chi, t)
        } else {
            let t = rational::clamp_unit(rational::round_to_grid(&shift, &step));
            // χ + t, capped at 1
            neg(trunc_sub(neg(chi), t))
        };
        let top = self.grid_constant(&f_hi, delta);
        let bottom = self.grid_constant(&f_lo, delta);
        Ok(or(and(shifted, top), bottom))
    }
}

/// Formula of rank at most `f.base_depth()` matching `f` within `δ` at `a`
/// and `b`.
pub fn pair_approximation(
    sys: &TransitionSystem,
    f: &StateFunction,
    a: StateId,
    b: StateId,
    delta: &Rational,
) -> Result<Formula, ApproxError> {
    Approximator::check_slack(delta)?;
    Approximator::new(sys, f.base_depth)?.pair(f, a, b, delta)
}

/// Formula of rank at most `f.base_depth()` within `δ` of `f` on its whole
/// domain.
pub fn approximate_nonexpansive(
    sys: &TransitionSystem,
    f: &StateFunction,
    delta: &Rational,
) -> Result<Formula, ApproxError> {
    Approximator::check_slack(delta)?;
    Approximator::new(sys, f.base_depth)?.approximate(f, delta)
}

/// Formula of rank at most `n` separating `a` in `sys_a` from `b` in `sys_b`
/// by at least `d_n(a, b) - δ`.
pub fn witness_formula(
    sys_a: &TransitionSystem,
    sys_b: &TransitionSystem,
    a: StateId,
    b: StateId,
    n: usize,
    delta: &Rational,
) -> Result<Formula, ApproxError> {
    Approximator::check_slack(delta)?;
    sys_a.same_atoms(sys_b)?;
    sys_a.check_id(a)?;
    sys_b.check_id(b)?;
    let union = disjoint_union(&[sys_a, sys_b])?;
    let b_union = union.inject(1, b);
    Approximator::new(&union.system, n)?.witness(a, b_union, n, delta)
}

/// Witness synthesis reusing an already computed two-system chain.
pub fn witness_from_chain(
    chain: &DistanceChain,
    a: StateId,
    b: StateId,
    n: usize,
    delta: &Rational,
) -> Result<Formula, ApproxError> {
    let mut ap = Approximator::with_chain(&chain.system, chain.levels.clone());
    ap.witness(a, chain.b_state(b), n, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::eval_modal_all;
    use crate::fixtures::perturbed_pair;
    use crate::formula::render_modal;
    use crate::rational::{int, ratio};
    use crate::system::SystemBuilder;

    fn two_states() -> TransitionSystem {
        let mut b = SystemBuilder::new(["p"]);
        b.state("a");
        b.state("b");
        b.value("a", "p", int(1));
        b.build().unwrap()
    }

    #[test]
    fn atom_is_its_own_approximation() {
        let sys = two_states();
        let chain = distance_chain(&sys, 1, Method::Wasserstein).unwrap();
        let f = StateFunction::new(
            [(StateId(0), int(1)), (StateId(1), int(0))]
                .into_iter()
                .collect(),
            1,
            &chain[1],
        )
        .unwrap();
        let phi = pair_approximation(&sys, &f, StateId(0), StateId(1), &ratio(1, 8)).unwrap();
        let v = eval_modal_all(&sys, &phi).unwrap();
        assert_eq!(v, vec![int(1), int(0)]);
        assert_eq!(render_modal(&phi), "p");
    }

    #[test]
    fn constants_and_zero_slack() {
        let sys = two_states();
        let chain = distance_chain(&sys, 1, Method::Wasserstein).unwrap();
        let f = StateFunction::new(
            [(StateId(0), ratio(1, 3)), (StateId(1), ratio(1, 3))]
                .into_iter()
                .collect(),
            1,
            &chain[1],
        )
        .unwrap();
        let phi = approximate_nonexpansive(&sys, &f, &ratio(1, 16)).unwrap();
        assert_eq!(modal_rank(&phi), 0);
        assert_eq!(
            approximate_nonexpansive(&sys, &f, &int(0)),
            Err(ApproxError::SlackTooSmall)
        );
        let same = pair_approximation(&sys, &f, StateId(0), StateId(0), &ratio(1, 16)).unwrap();
        assert_eq!(modal_rank(&same), 0);
    }

    #[test]
    fn rejects_expansive_functions() {
        let sys = two_states();
        let chain = distance_chain(&sys, 0, Method::Wasserstein).unwrap();
        let r = StateFunction::new(
            [(StateId(0), int(1)), (StateId(1), int(0))]
                .into_iter()
                .collect(),
            0,
            &chain[0],
        );
        assert!(matches!(r, Err(ApproxError::NotNonExpansive { .. })));
    }

    #[test]
    fn witness_for_the_fixture() {
        let sys = perturbed_pair(&ratio(1, 4));
        let (x, y) = (sys.lookup("x").unwrap(), sys.lookup("y").unwrap());
        let delta = ratio(1, 32);
        let phi = witness_formula(&sys, &sys, x, y, 3, &delta).unwrap();
        let v = eval_modal_all(&sys, &phi).unwrap();
        let gap = rational::abs_diff(&v[x.0], &v[y.0]);
        assert!(gap >= ratio(3, 16) - &delta, "gap {gap}");
        assert!(gap <= ratio(3, 16));
        assert!(modal_rank(&phi) <= 3);
        let zero = witness_formula(&sys, &sys, x, y, 0, &delta).unwrap();
        assert_eq!(render_modal(&zero), "0");
    }

    #[test]
    fn price_function_of_the_fixture_is_approximable() {
        let sys = perturbed_pair(&ratio(1, 4));
        let (x, y) = (sys.lookup("x").unwrap(), sys.lookup("y").unwrap());
        let chain = distance_chain(&sys, 2, Method::Kantorovich).unwrap();
        let lift = kantorovich_lift(&chain[2], sys.successors(x), sys.successors(y)).unwrap();
        let f = StateFunction::from_price(&lift.price, 2, &chain[2]).unwrap();
        let full = f.extend_to_all(&chain[2]);
        let delta = ratio(1, 16);
        let phi = approximate_nonexpansive(&sys, &full, &delta).unwrap();
        let v = eval_modal_all(&sys, &phi).unwrap();
        for (s, target) in full.values() {
            assert!(rational::abs_diff(&v[s.0], target) <= delta);
        }
        assert!(modal_rank(&phi) <= 2);
    }

    #[test]
    fn extension_agrees_on_the_domain() {
        let sys = perturbed_pair(&ratio(1, 10));
        let chain = distance_chain(&sys, 2, Method::Wasserstein).unwrap();
        let x1 = sys.lookup("x1").unwrap();
        let f =
            StateFunction::new([(x1, ratio(1, 2))].into_iter().collect(), 2, &chain[2]).unwrap();
        let g = f.extend_to_all(&chain[2]);
        assert_eq!(g.get(x1), Some(&ratio(1, 2)));
        assert!(StateFunction::new(g.values().clone(), 2, &chain[2]).is_ok());
    }
}
