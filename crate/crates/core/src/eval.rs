//! Exact semantics of modal and first-order formulas on a finite system.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::formula::{key, FoFormula, Formula, ModalFormula, NodeKey, Variable};
use crate::rational::Rational;
use crate::system::{StateId, Successors, TransitionSystem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("atom {0:?} is not declared by the system")]
    UnknownAtom(String),
    #[error("variable {0} has no value in the environment")]
    UnboundVariable(Variable),
    #[error("state {0} does not exist")]
    UnknownState(StateId),
}

/// Assignment of states to first-order variables.
pub type Environment = BTreeMap<Variable, StateId>;

/// Expectation of `values` under the successor distribution; 0 at
/// terminating states.
pub fn expectation(succ: &Successors, values: &[Rational]) -> Rational {
    succ.entries()
        .iter()
        .fold(Rational::zero(), |acc, (t, w)| acc + w * &values[t.0])
}

/// Batch evaluator. Each distinct formula node is evaluated once on all
/// states; results are kept for the lifetime of the evaluator, so repeated
/// queries over shared subformulas are free.
pub struct Evaluator<'a> {
    sys: &'a TransitionSystem,
    // the Formula handle keeps the node alive so its address stays unique
    cache: HashMap<NodeKey, (Formula, Arc<Vec<Rational>>)>,
}

impl<'a> Evaluator<'a> {
    pub fn new(sys: &'a TransitionSystem) -> Self {
        Self {
            sys,
            cache: HashMap::new(),
        }
    }

    pub fn system(&self) -> &'a TransitionSystem {
        self.sys
    }

    /// Values of `f` at every state, indexed by state id.
    pub fn values(&mut self, f: &Formula) -> Result<Arc<Vec<Rational>>, EvalError> {
        if let Some((_, v)) = self.cache.get(&key(f)) {
            return Ok(v.clone());
        }
        let sys = self.sys;
        let n = sys.state_count();
        let v: Vec<Rational> = match &**f {
            ModalFormula::Const(c) => vec![c.clone(); n],
            ModalFormula::Atom(p) => {
                let i = sys
                    .atom_index(p)
                    .ok_or_else(|| EvalError::UnknownAtom(p.clone()))?;
                sys.states().map(|s| sys.value(i, s).clone()).collect()
            }
            ModalFormula::TruncSub(g, c) => self
                .values(g)?
                .iter()
                .map(|x| if x > c { x - c } else { Rational::zero() })
                .collect(),
            ModalFormula::Neg(g) => self
                .values(g)?
                .iter()
                .map(|x| Rational::one() - x)
                .collect(),
            ModalFormula::And(g, h) => {
                let (a, b) = (self.values(g)?, self.values(h)?);
                a.iter()
                    .zip(b.iter())
                    .map(|(x, y)| x.min(y).clone())
                    .collect()
            }
            ModalFormula::Or(g, h) => {
                let (a, b) = (self.values(g)?, self.values(h)?);
                a.iter()
                    .zip(b.iter())
                    .map(|(x, y)| x.max(y).clone())
                    .collect()
            }
            ModalFormula::Diamond(g) => {
                let a = self.values(g)?;
                sys.states()
                    .map(|s| expectation(sys.successors(s), &a))
                    .collect()
            }
            // ~<>~g: the expectation of g where a distribution exists, 1 otherwise
            ModalFormula::Box(g) => {
                let a = self.values(g)?;
                sys.states()
                    .map(|s| match sys.successors(s) {
                        Successors::Terminating => Rational::one(),
                        succ => expectation(succ, &a),
                    })
                    .collect()
            }
        };
        let v = Arc::new(v);
        self.cache.insert(key(f), (f.clone(), v.clone()));
        Ok(v)
    }

    pub fn value(&mut self, f: &Formula, a: StateId) -> Result<Rational, EvalError> {
        self.sys
            .check_id(a)
            .map_err(|_| EvalError::UnknownState(a))?;
        Ok(self.values(f)?[a.0].clone())
    }
}

pub fn eval_modal(sys: &TransitionSystem, f: &Formula, a: StateId) -> Result<Rational, EvalError> {
    Evaluator::new(sys).value(f, a)
}

pub fn eval_modal_all(sys: &TransitionSystem, f: &Formula) -> Result<Vec<Rational>, EvalError> {
    let v = Evaluator::new(sys).values(f)?;
    Ok(Arc::try_unwrap(v).unwrap_or_else(|v| (*v).clone()))
}

pub fn eval_fo(
    sys: &TransitionSystem,
    f: &FoFormula,
    env: &Environment,
) -> Result<Rational, EvalError> {
    for s in env.values() {
        sys.check_id(*s).map_err(|_| EvalError::UnknownState(*s))?;
    }
    let mut env = env.clone();
    fo(sys, f, &mut env)
}

fn lookup(env: &Environment, v: &Variable) -> Result<StateId, EvalError> {
    env.get(v)
        .copied()
        .ok_or_else(|| EvalError::UnboundVariable(v.clone()))
}

fn with_binding<T>(
    env: &mut Environment,
    v: &Variable,
    s: StateId,
    body: impl FnOnce(&mut Environment) -> T,
) -> T {
    let old = env.insert(v.clone(), s);
    let r = body(env);
    match old {
        Some(o) => env.insert(v.clone(), o),
        None => env.remove(v),
    };
    r
}

fn fo(sys: &TransitionSystem, f: &FoFormula, env: &mut Environment) -> Result<Rational, EvalError> {
    Ok(match f {
        FoFormula::Const(c) => c.clone(),
        FoFormula::Atom(p, v) => {
            let i = sys
                .atom_index(p)
                .ok_or_else(|| EvalError::UnknownAtom(p.clone()))?;
            sys.value(i, lookup(env, v)?).clone()
        }
        FoFormula::Eq(v, w) => {
            if lookup(env, v)? == lookup(env, w)? {
                Rational::one()
            } else {
                Rational::zero()
            }
        }
        FoFormula::TruncSub(g, c) => {
            let x = fo(sys, g, env)?;
            if &x > c {
                x - c
            } else {
                Rational::zero()
            }
        }
        FoFormula::Neg(g) => Rational::one() - fo(sys, g, env)?,
        FoFormula::And(g, h) => {
            let x = fo(sys, g, env)?;
            let y = fo(sys, h, env)?;
            x.min(y)
        }
        FoFormula::Exists(v, g) => {
            let mut best = Rational::zero();
            for s in sys.states() {
                let x = with_binding(env, v, s, |env| fo(sys, g, env))?;
                if x > best {
                    best = x;
                }
            }
            best
        }
        FoFormula::DiamondBind(x, y, g) => {
            let src = lookup(env, x)?;
            let mut sum = Rational::zero();
            for (t, w) in sys.successors(src).entries() {
                sum += w * with_binding(env, y, *t, |env| fo(sys, g, env))?;
            }
            sum
        }
    })
}
