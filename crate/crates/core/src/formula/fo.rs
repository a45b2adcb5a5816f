use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{normalize, Formula, ModalFormula};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Variable(pub String);

impl Variable {
    pub fn new(name: &str) -> Self {
        Variable(name.to_string())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// First-order formula. `DiamondBind(x, y, f)` is `x:<>y. f`, the expected
/// value of `f` with `y` ranging over successors of `x`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FoFormula {
    Const(#[serde(with = "rational::serde_str")] Rational),
    Atom(String, Variable),
    Eq(Variable, Variable),
    TruncSub(
        Arc<FoFormula>,
        #[serde(with = "rational::serde_str")] Rational,
    ),
    Neg(Arc<FoFormula>),
    And(Arc<FoFormula>, Arc<FoFormula>),
    Exists(Variable, Arc<FoFormula>),
    DiamondBind(Variable, Variable, Arc<FoFormula>),
}

/// Nesting depth of `E`, binder-`<>` and atoms; equality and constants have
/// rank 0.
pub fn quantifier_rank(f: &FoFormula) -> usize {
    match f {
        FoFormula::Const(_) | FoFormula::Eq(..) => 0,
        FoFormula::Atom(..) => 1,
        FoFormula::TruncSub(g, _) | FoFormula::Neg(g) => quantifier_rank(g),
        FoFormula::And(g, h) => quantifier_rank(g).max(quantifier_rank(h)),
        FoFormula::Exists(_, g) | FoFormula::DiamondBind(_, _, g) => 1 + quantifier_rank(g),
    }
}

/// Free variables in order of first occurrence (left to right).
pub fn free_variables(f: &FoFormula) -> Vec<Variable> {
    fn go(f: &FoFormula, bound: &mut Vec<Variable>, out: &mut Vec<Variable>) {
        let mut note = |v: &Variable, bound: &Vec<Variable>| {
            if !bound.contains(v) && !out.contains(v) {
                out.push(v.clone());
            }
        };
        match f {
            FoFormula::Const(_) => {}
            FoFormula::Atom(_, v) => note(v, bound),
            FoFormula::Eq(v, w) => {
                note(v, bound);
                note(w, bound);
            }
            FoFormula::TruncSub(g, _) | FoFormula::Neg(g) => go(g, bound, out),
            FoFormula::And(g, h) => {
                go(g, bound, out);
                go(h, bound, out);
            }
            FoFormula::Exists(v, g) => {
                bound.push(v.clone());
                go(g, bound, out);
                bound.pop();
            }
            FoFormula::DiamondBind(x, y, g) => {
                note(x, bound);
                bound.push(y.clone());
                go(g, bound, out);
                bound.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(f, &mut Vec::new(), &mut out);
    out
}

const FRESH: [&str; 5] = ["y", "z", "w", "u", "v"];

/// Translation of a modal formula into the first-order language with `x`
/// as the only free variable. Each `<>` binds a fresh variable, drawn in
/// pre-order from `y, z, w, u, v, y1, z1, ...` skipping `x`; `|` and `[]` are expanded first. Quantifier rank equals the
/// modal rank.
pub fn standard_translation(f: &Formula, x: &Variable) -> FoFormula {
    struct Ctx {
        next: usize,
        avoid: Variable,
    }
    impl Ctx {
        fn fresh(&mut self) -> Variable {
            loop {
                let (round, slot) = (self.next / FRESH.len(), self.next % FRESH.len());
                let v = if round == 0 {
                    Variable::new(FRESH[slot])
                } else {
                    Variable(format!("{}{round}", FRESH[slot]))
                };
                self.next += 1;
                if v != self.avoid {
                    return v;
                }
            }
        }
    }
    fn go(f: &Formula, x: &Variable, ctx: &mut Ctx) -> FoFormula {
        match &**f {
            ModalFormula::Const(c) => FoFormula::Const(c.clone()),
            ModalFormula::Atom(p) => FoFormula::Atom(p.clone(), x.clone()),
            ModalFormula::TruncSub(g, c) => FoFormula::TruncSub(Arc::new(go(g, x, ctx)), c.clone()),
            ModalFormula::Neg(g) => FoFormula::Neg(Arc::new(go(g, x, ctx))),
            ModalFormula::And(g, h) => {
                let l = go(g, x, ctx);
                let r = go(h, x, ctx);
                FoFormula::And(Arc::new(l), Arc::new(r))
            }
            ModalFormula::Diamond(g) => {
                let y = ctx.fresh();
                let body = go(g, &y, ctx);
                FoFormula::DiamondBind(x.clone(), y, Arc::new(body))
            }
            ModalFormula::Or(..) | ModalFormula::Box(..) => {
                unreachable!("normalized before translation")
            }
        }
    }
    let mut ctx = Ctx {
        next: 0,
        avoid: x.clone(),
    };
    go(&normalize(f), x, &mut ctx)
}

/// Equality up to consistent renaming of bound variables.
pub fn alpha_equivalent(a: &FoFormula, b: &FoFormula) -> bool {
    fn var_eq(v: &Variable, w: &Variable, env: &[(Variable, Variable)]) -> bool {
        for (l, r) in env.iter().rev() {
            if l == v || r == w {
                return l == v && r == w;
            }
        }
        v == w
    }
    fn go(a: &FoFormula, b: &FoFormula, env: &mut Vec<(Variable, Variable)>) -> bool {
        match (a, b) {
            (FoFormula::Const(c), FoFormula::Const(d)) => c == d,
            (FoFormula::Atom(p, v), FoFormula::Atom(q, w)) => p == q && var_eq(v, w, env),
            (FoFormula::Eq(v1, v2), FoFormula::Eq(w1, w2)) => {
                var_eq(v1, w1, env) && var_eq(v2, w2, env)
            }
            (FoFormula::TruncSub(f, c), FoFormula::TruncSub(g, d)) => c == d && go(f, g, env),
            (FoFormula::Neg(f), FoFormula::Neg(g)) => go(f, g, env),
            (FoFormula::And(f1, f2), FoFormula::And(g1, g2)) => go(f1, g1, env) && go(f2, g2, env),
            (FoFormula::Exists(v, f), FoFormula::Exists(w, g)) => {
                env.push((v.clone(), w.clone()));
                let r = go(f, g, env);
                env.pop();
                r
            }
            (FoFormula::DiamondBind(x1, y1, f), FoFormula::DiamondBind(x2, y2, g)) => {
                if !var_eq(x1, x2, env) {
                    return false;
                }
                env.push((y1.clone(), y2.clone()));
                let r = go(f, g, env);
                env.pop();
                r
            }
            _ => false,
        }
    }
    go(a, b, &mut Vec::new())
}
