//! Quantitative probabilistic modal and first-order formulas.
//!
//! Modal formulas are immutable trees with shared (`Arc`) children, so the
//! synthesis code can build large formulas as DAGs without copying. Every
//! traversal that may see shared nodes memoizes on node identity.
//!
//! Concrete syntax (ASCII):
//!
//! | construct          | modal      | first-order        |
//! |--------------------|------------|--------------------|
//! | constant           | `1/2`      | `1/2`              |
//! | atom               | `p`        | `p(x)`             |
//! | truncated minus    | `f -. 1/4` | `f -. 1/4`         |
//! | negation           | `~f`       | `~f`               |
//! | min / max          | `f & g`, `f \| g` | `f & g`, `f \| g` (desugared) |
//! | expectation        | `<>f`, `[]f` | `x:<>y. f`       |
//! | sup over states    |            | `Ex. f`            |
//! | crisp equality     |            | `x = y`            |
//!
//! Binding strength, tightest first: `-.` (postfix), then the prefix
//! operators `~ <> []`, then `&`, then `|`; binary operators associate to the
//! left. First-order binders extend as far to the right as possible. The
//! placement of `-.` is a convention of this toolkit.

mod fo;
mod parse;
mod random;
mod render;

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{self, Rational};

pub use fo::{
    alpha_equivalent, free_variables, quantifier_rank, standard_translation, FoFormula, Variable,
};
pub use parse::{parse_fo, parse_modal, FormulaError, ParsedFo};
pub use random::{random_modal, RandomFormulaConfig};
pub use render::{render_fo, render_modal};

/// Shared handle to a modal formula node.
pub type Formula = Arc<ModalFormula>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModalFormula {
    Const(#[serde(with = "rational::serde_str")] Rational),
    Atom(String),
    TruncSub(Formula, #[serde(with = "rational::serde_str")] Rational),
    Neg(Formula),
    And(Formula, Formula),
    /// Sugar for `~(~f & ~g)`.
    Or(Formula, Formula),
    Diamond(Formula),
    /// Sugar for `~<>~f`.
    Box(Formula),
}

pub(crate) type NodeKey = *const ModalFormula;

pub(crate) fn key(f: &Formula) -> NodeKey {
    Arc::as_ptr(f)
}

pub fn constant(c: Rational) -> Formula {
    assert!(rational::is_unit_interval(&c), "constant {c} outside [0,1]");
    Arc::new(ModalFormula::Const(c))
}

pub fn atom(name: &str) -> Formula {
    Arc::new(ModalFormula::Atom(name.to_string()))
}

pub fn trunc_sub(f: Formula, c: Rational) -> Formula {
    assert!(rational::is_unit_interval(&c), "constant {c} outside [0,1]");
    Arc::new(ModalFormula::TruncSub(f, c))
}

pub fn neg(f: Formula) -> Formula {
    Arc::new(ModalFormula::Neg(f))
}

pub fn and(f: Formula, g: Formula) -> Formula {
    Arc::new(ModalFormula::And(f, g))
}

pub fn or(f: Formula, g: Formula) -> Formula {
    Arc::new(ModalFormula::Or(f, g))
}

pub fn diamond(f: Formula) -> Formula {
    Arc::new(ModalFormula::Diamond(f))
}

pub fn boxed(f: Formula) -> Formula {
    Arc::new(ModalFormula::Box(f))
}

/// Conjunction of a non-empty list, balanced to keep nesting shallow.
pub fn and_all(mut items: Vec<Formula>) -> Formula {
    assert!(!items.is_empty());
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => and(a, b),
                None => a,
            });
        }
        items = next;
    }
    items.pop().unwrap()
}

pub fn or_all(mut items: Vec<Formula>) -> Formula {
    assert!(!items.is_empty());
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => or(a, b),
                None => a,
            });
        }
        items = next;
    }
    items.pop().unwrap()
}

impl ModalFormula {
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            ModalFormula::Const(_) | ModalFormula::Atom(_) => vec![],
            ModalFormula::TruncSub(f, _)
            | ModalFormula::Neg(f)
            | ModalFormula::Diamond(f)
            | ModalFormula::Box(f) => vec![f],
            ModalFormula::And(f, g) | ModalFormula::Or(f, g) => vec![f, g],
        }
    }
}

/// Nesting depth of modalities and atoms; constants have rank 0, atoms 1,
/// `-.`, `~`, `&`, `|` are transparent and `<>`/`[]` add one.
pub fn modal_rank(f: &Formula) -> usize {
    fn go(f: &Formula, memo: &mut HashMap<NodeKey, usize>) -> usize {
        if let Some(&r) = memo.get(&key(f)) {
            return r;
        }
        let r = match &**f {
            ModalFormula::Const(_) => 0,
            ModalFormula::Atom(_) => 1,
            ModalFormula::TruncSub(g, _) | ModalFormula::Neg(g) => go(g, memo),
            ModalFormula::And(g, h) | ModalFormula::Or(g, h) => go(g, memo).max(go(h, memo)),
            ModalFormula::Diamond(g) | ModalFormula::Box(g) => 1 + go(g, memo),
        };
        memo.insert(key(f), r);
        r
    }
    go(f, &mut HashMap::new())
}

/// Rewrites `|` and `[]` into the core connectives.
pub fn normalize(f: &Formula) -> Formula {
    fn go(f: &Formula, memo: &mut HashMap<NodeKey, Formula>) -> Formula {
        if let Some(r) = memo.get(&key(f)) {
            return r.clone();
        }
        let r = match &**f {
            ModalFormula::Const(_) | ModalFormula::Atom(_) => f.clone(),
            ModalFormula::TruncSub(g, c) => trunc_sub(go(g, memo), c.clone()),
            ModalFormula::Neg(g) => neg(go(g, memo)),
            ModalFormula::And(g, h) => and(go(g, memo), go(h, memo)),
            ModalFormula::Or(g, h) => neg(and(neg(go(g, memo)), neg(go(h, memo)))),
            ModalFormula::Diamond(g) => diamond(go(g, memo)),
            ModalFormula::Box(g) => neg(diamond(neg(go(g, memo)))),
        };
        memo.insert(key(f), r.clone());
        r
    }
    go(f, &mut HashMap::new())
}

/// Atom names in order of first occurrence.
pub fn atoms_of(f: &Formula) -> Vec<String> {
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![f];
    while let Some(g) = stack.pop() {
        if !seen.insert(key(g)) {
            continue;
        }
        if let ModalFormula::Atom(p) = &**g {
            if !out.contains(p) {
                out.push(p.clone());
            }
        }
        stack.extend(g.children().into_iter().rev());
    }
    out
}

/// Number of distinct nodes.
pub fn dag_size(f: &Formula) -> usize {
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![f];
    while let Some(g) = stack.pop() {
        if seen.insert(key(g)) {
            stack.extend(g.children());
        }
    }
    seen.len()
}

/// Number of nodes of the fully expanded tree, saturating.
pub fn tree_size(f: &Formula) -> u64 {
    fn go(f: &Formula, memo: &mut HashMap<NodeKey, u64>) -> u64 {
        if let Some(&n) = memo.get(&key(f)) {
            return n;
        }
        let n = f
            .children()
            .into_iter()
            .fold(1u64, |acc, c| acc.saturating_add(go(c, memo)));
        memo.insert(key(f), n);
        n
    }
    go(f, &mut HashMap::new())
}

/// Every constant (including `-.` amounts) in the formula.
pub fn constants_of(f: &Formula) -> Vec<Rational> {
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![f];
    while let Some(g) = stack.pop() {
        if !seen.insert(key(g)) {
            continue;
        }
        match &**g {
            ModalFormula::Const(c) | ModalFormula::TruncSub(_, c) => out.push(c.clone()),
            _ => {}
        }
        stack.extend(g.children());
    }
    out
}

/// Semantics-preserving clean-up: constant folding through the Boolean
/// connectives, `<>0 = 0`, double negation, `f -. 0 = f`, and idempotent or
/// absorbing operands of `&`/`|`. Does not change the rank upward.
pub fn simplify(f: &Formula) -> Formula {
    fn as_const(f: &Formula) -> Option<&Rational> {
        match &**f {
            ModalFormula::Const(c) => Some(c),
            _ => None,
        }
    }
    fn same(a: &Formula, b: &Formula) -> bool {
        Arc::ptr_eq(a, b) || a == b
    }
    fn go(f: &Formula, memo: &mut HashMap<NodeKey, Formula>) -> Formula {
        if let Some(r) = memo.get(&key(f)) {
            return r.clone();
        }
        let r = match &**f {
            ModalFormula::Const(_) | ModalFormula::Atom(_) => f.clone(),
            ModalFormula::TruncSub(g, c) => {
                let g = go(g, memo);
                if c.is_zero() {
                    g
                } else if let Some(v) = as_const(&g) {
                    constant(rational::clamp_unit(v - c))
                } else if let ModalFormula::TruncSub(h, d) = &*g {
                    // (h -. d) -. c = h -. (d + c), valid while d + c <= 1
                    let s = d + c;
                    if s <= Rational::one() {
                        trunc_sub(h.clone(), s)
                    } else {
                        constant(Rational::zero())
                    }
                } else {
                    trunc_sub(g, c.clone())
                }
            }
            ModalFormula::Neg(g) => {
                let g = go(g, memo);
                match &*g {
                    ModalFormula::Const(v) => constant(Rational::one() - v),
                    ModalFormula::Neg(h) => h.clone(),
                    _ => neg(g),
                }
            }
            ModalFormula::And(g, h) => {
                let (g, h) = (go(g, memo), go(h, memo));
                match (as_const(&g), as_const(&h)) {
                    (Some(a), Some(b)) => constant(a.min(b).clone()),
                    (Some(a), None) if a.is_one() => h,
                    (None, Some(b)) if b.is_one() => g,
                    (Some(a), None) if a.is_zero() => g_zero(),
                    (None, Some(b)) if b.is_zero() => g_zero(),
                    _ if same(&g, &h) => g,
                    _ => and(g, h),
                }
            }
            ModalFormula::Or(g, h) => {
                let (g, h) = (go(g, memo), go(h, memo));
                match (as_const(&g), as_const(&h)) {
                    (Some(a), Some(b)) => constant(a.max(b).clone()),
                    (Some(a), None) if a.is_zero() => h,
                    (None, Some(b)) if b.is_zero() => g,
                    (Some(a), None) if a.is_one() => constant(Rational::one()),
                    (None, Some(b)) if b.is_one() => constant(Rational::one()),
                    _ if same(&g, &h) => g,
                    _ => or(g, h),
                }
            }
            ModalFormula::Diamond(g) => {
                let g = go(g, memo);
                match as_const(&g) {
                    Some(c) if c.is_zero() => constant(Rational::zero()),
                    _ => diamond(g),
                }
            }
            ModalFormula::Box(g) => {
                let g = go(g, memo);
                match as_const(&g) {
                    Some(c) if c.is_one() => constant(Rational::one()),
                    _ => boxed(g),
                }
            }
        };
        memo.insert(key(f), r.clone());
        r
    }
    fn g_zero() -> Formula {
        constant(Rational::zero())
    }
    go(f, &mut HashMap::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn rank_examples() {
        let f = and(diamond(diamond(atom("p"))), diamond(atom("q")));
        assert_eq!(modal_rank(&f), 3);
        assert_eq!(modal_rank(&constant(ratio(1, 3))), 0);
        assert_eq!(modal_rank(&neg(trunc_sub(atom("p"), ratio(1, 4)))), 1);
        assert_eq!(modal_rank(&boxed(constant(ratio(0, 1)))), 1);
        assert_eq!(modal_rank(&or(atom("p"), diamond(atom("p")))), 2);
    }

    #[test]
    fn normalization_removes_sugar_and_keeps_rank() {
        let f = or(boxed(atom("p")), constant(ratio(1, 2)));
        let n = normalize(&f);
        assert_eq!(modal_rank(&n), modal_rank(&f));
        let text = render_modal(&n);
        assert!(!text.contains('|') && !text.contains("[]"), "{text}");
    }

    #[test]
    fn shared_dag_is_measured_without_expansion() {
        let mut f = atom("p");
        for _ in 0..80 {
            f = and(f.clone(), f);
        }
        assert_eq!(dag_size(&f), 81);
        assert_eq!(tree_size(&f), u64::MAX);
        assert_eq!(modal_rank(&f), 1);
    }

    #[test]
    fn simplify_folds_constants() {
        let half = constant(ratio(1, 2));
        let f = and(neg(half.clone()), or(constant(ratio(0, 1)), atom("p")));
        assert_eq!(render_modal(&simplify(&f)), "1/2 & p");
        let g = diamond(and(atom("q"), constant(ratio(0, 1))));
        assert_eq!(render_modal(&simplify(&g)), "0");
        let h = trunc_sub(trunc_sub(atom("p"), ratio(1, 2)), ratio(1, 3));
        assert_eq!(render_modal(&simplify(&h)), "p -. 5/6");
        let d = neg(neg(atom("p")));
        assert_eq!(render_modal(&simplify(&d)), "p");
    }

    #[test]
    fn balanced_conjunction() {
        let items: Vec<Formula> = (0..5).map(|i| atom(&format!("p{i}"))).collect();
        let f = and_all(items);
        assert_eq!(atoms_of(&f).len(), 5);
    }
}
