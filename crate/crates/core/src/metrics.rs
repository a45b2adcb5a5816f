//! Depth-bounded behavioural distances.
//!
//! `d_0 = 0` and `d_{m+1}(a, b) = max(max_p |p(a) - p(b)|, L(d_m)(π_a, π_b))`
//! where the lift `L` is either the optimal-transport (Wasserstein) value or
//! the price-function (Kantorovich) value. A terminating state is treated as
//! the Dirac distribution on an extra point [`Point::Halt`] at distance 1
//! from every state.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{EvalError, Evaluator};
use crate::formula::{modal_rank, Formula};
use crate::lp::{self, Constraint, LinearProgram, LpOutcome, Relation};
use crate::rational::{self, Rational};
use crate::system::{disjoint_union, StateId, Successors, SystemError, TransitionSystem};
use crate::transport::{solve_transport, TransportError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("linear program ended {0}")]
    Solver(&'static str),
    #[error("formula of rank {rank} exceeds depth {depth}")]
    RankViolation { rank: usize, depth: usize },
    #[error("matrix is not a pseudometric: {0}")]
    NotPseudometric(String),
    #[error("state {0} is outside the {1}-point domain")]
    OutOfDomain(StateId, usize),
}

/// A state, or the extra point standing for termination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Point {
    State(StateId),
    Halt,
}

/// Symmetric `[0,1]` matrix indexed by the states of one system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudometricMatrix {
    size: usize,
    values: Vec<Rational>,
}

impl PseudometricMatrix {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            values: vec![Rational::zero(); size * size],
        }
    }

    /// Validates zero diagonal, symmetry, range and the triangle inequality.
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, MetricError> {
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(MetricError::NotPseudometric("matrix is not square".into()));
        }
        let m = Self {
            size,
            values: rows.into_iter().flatten().collect(),
        };
        m.check()?;
        Ok(m)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, a: StateId, b: StateId) -> &Rational {
        &self.values[a.0 * self.size + b.0]
    }

    fn set(&mut self, a: usize, b: usize, v: Rational) {
        self.values[a * self.size + b] = v.clone();
        self.values[b * self.size + a] = v;
    }

    /// Distance on states plus the halt point.
    pub fn point(&self, x: Point, y: Point) -> Rational {
        match (x, y) {
            (Point::Halt, Point::Halt) => Rational::zero(),
            (Point::Halt, _) | (_, Point::Halt) => Rational::one(),
            (Point::State(a), Point::State(b)) => self.get(a, b).clone(),
        }
    }

    pub fn check(&self) -> Result<(), MetricError> {
        let n = self.size;
        let bad = |msg: String| Err(MetricError::NotPseudometric(msg));
        for i in 0..n {
            if !self.values[i * n + i].is_zero() {
                return bad(format!("nonzero diagonal at {i}"));
            }
            for j in 0..n {
                let v = &self.values[i * n + j];
                if !rational::is_unit_interval(v) {
                    return bad(format!("entry ({i},{j}) = {v} outside [0,1]"));
                }
                if *v != self.values[j * n + i] {
                    return bad(format!("asymmetric at ({i},{j})"));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.values[i * n + k] > &self.values[i * n + j] + &self.values[j * n + k] {
                        return bad(format!("triangle inequality fails at ({i},{j},{k})"));
                    }
                }
            }
        }
        Ok(())
    }

    /// True if every entry is at most the corresponding entry of `other`.
    pub fn le(&self, other: &PseudometricMatrix) -> bool {
        self.size == other.size && self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }

    pub fn rows(&self) -> Vec<Vec<Rational>> {
        self.values
            .chunks(self.size.max(1))
            .map(|r| r.to_vec())
            .take(self.size)
            .collect()
    }

    fn check_state(&self, s: StateId) -> Result<(), MetricError> {
        if s.0 < self.size {
            Ok(())
        } else {
            Err(MetricError::OutOfDomain(s, self.size))
        }
    }
}

/// Joint distribution with the two given marginals.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Coupling {
    pub entries: BTreeMap<(Point, Point), Rational>,
}

impl Coupling {
    pub fn marginals(&self) -> (BTreeMap<Point, Rational>, BTreeMap<Point, Rational>) {
        let (mut left, mut right) = (BTreeMap::new(), BTreeMap::new());
        for ((x, y), w) in &self.entries {
            *left.entry(*x).or_insert_with(Rational::zero) += w;
            *right.entry(*y).or_insert_with(Rational::zero) += w;
        }
        (left, right)
    }

    /// Exact check that all weights are positive and the marginals match.
    pub fn is_coupling_of(&self, pi1: &Successors, pi2: &Successors) -> bool {
        if self.entries.values().any(|w| !w.is_positive()) {
            return false;
        }
        let (l, r) = self.marginals();
        l == points(pi1).into_iter().collect() && r == points(pi2).into_iter().collect()
    }

    /// `∫ d dμ`.
    pub fn cost(&self, d: &PseudometricMatrix) -> Rational {
        self.entries
            .iter()
            .map(|((x, y), w)| w * d.point(*x, *y))
            .sum()
    }
}

/// A `[0,1]`-valued function on points, the dual variable of the lift.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PriceFunction {
    pub values: BTreeMap<Point, Rational>,
}

impl PriceFunction {
    pub fn get(&self, x: Point) -> Option<&Rational> {
        self.values.get(&x)
    }

    /// `∫ f dπ`; points outside the domain count as 0.
    pub fn integrate(&self, pi: &Successors) -> Rational {
        points(pi)
            .into_iter()
            .map(|(x, w)| self.values.get(&x).map_or_else(Rational::zero, |v| v * w))
            .sum()
    }

    /// `|f(x) - f(y)| <= d(x, y)` on the whole domain, values in `[0,1]`.
    pub fn is_nonexpansive(&self, d: &PseudometricMatrix) -> bool {
        self.values.values().all(rational::is_unit_interval)
            && self.values.iter().all(|(x, fx)| {
                self.values
                    .iter()
                    .all(|(y, fy)| rational::abs_diff(fx, fy) <= d.point(*x, *y))
            })
    }
}

/// Successor distribution as weighted points; termination is the Dirac at
/// [`Point::Halt`].
pub fn points(pi: &Successors) -> Vec<(Point, Rational)> {
    match pi {
        Successors::Terminating => vec![(Point::Halt, Rational::one())],
        Successors::Distribution(d) => d
            .entries()
            .iter()
            .map(|(s, w)| (Point::State(*s), w.clone()))
            .collect(),
    }
}

fn check_support(d: &PseudometricMatrix, pi: &Successors) -> Result<(), MetricError> {
    pi.entries().iter().try_for_each(|(s, _)| d.check_state(*s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WassersteinLift {
    pub value: Rational,
    pub coupling: Coupling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KantorovichLift {
    pub value: Rational,
    pub price: PriceFunction,
}

/// Minimum of `∫ d dμ` over couplings `μ` of `pi1` and `pi2`, with an
/// optimal coupling.
pub fn wasserstein_lift(
    d: &PseudometricMatrix,
    pi1: &Successors,
    pi2: &Successors,
) -> Result<WassersteinLift, MetricError> {
    check_support(d, pi1)?;
    check_support(d, pi2)?;
    let (p1, p2) = (points(pi1), points(pi2));
    let supply: Vec<Rational> = p1.iter().map(|(_, w)| w.clone()).collect();
    let demand: Vec<Rational> = p2.iter().map(|(_, w)| w.clone()).collect();
    let cost: Vec<Vec<Rational>> = p1
        .iter()
        .map(|(x, _)| p2.iter().map(|(y, _)| d.point(*x, *y)).collect())
        .collect();
    let sol = solve_transport(&supply, &demand, &cost)?;
    let coupling = Coupling {
        entries: sol
            .flows
            .into_iter()
            .map(|(i, j, w)| ((p1[i].0, p2[j].0), w))
            .collect(),
    };
    Ok(WassersteinLift {
        value: sol.value,
        coupling,
    })
}

/// Maximum of `|∫ f dpi1 - ∫ f dpi2|` over non-expansive `f` into `[0,1]`
/// on the joint support, with a maximizing `f`.
pub fn kantorovich_lift(
    d: &PseudometricMatrix,
    pi1: &Successors,
    pi2: &Successors,
) -> Result<KantorovichLift, MetricError> {
    check_support(d, pi1)?;
    check_support(d, pi2)?;
    let mut mass: BTreeMap<Point, Rational> = BTreeMap::new();
    for (x, w) in points(pi1) {
        *mass.entry(x).or_insert_with(Rational::zero) += w;
    }
    for (x, w) in points(pi2) {
        *mass.entry(x).or_insert_with(Rational::zero) -= w;
    }
    let domain: Vec<Point> = mass.keys().copied().collect();
    let k = domain.len();
    let mut constraints = Vec::with_capacity(k * k);
    for i in 0..k {
        constraints.push(Constraint {
            terms: vec![(i, Rational::one())],
            relation: Relation::Le,
            rhs: Rational::one(),
        });
        for j in 0..k {
            if i != j {
                constraints.push(Constraint {
                    terms: vec![(i, Rational::one()), (j, -Rational::one())],
                    relation: Relation::Le,
                    rhs: d.point(domain[i], domain[j]),
                });
            }
        }
    }
    let mut best: Option<(Rational, Vec<Rational>)> = None;
    for sign in [Rational::one(), -Rational::one()] {
        let lp = LinearProgram {
            n_vars: k,
            objective: domain.iter().map(|x| &mass[x] * &sign).collect(),
            constraints: constraints.clone(),
        };
        match lp::maximize(&lp) {
            LpOutcome::Optimal { value, x } => {
                if best.as_ref().is_none_or(|(b, _)| value > *b) {
                    best = Some((value, x));
                }
            }
            LpOutcome::Infeasible => return Err(MetricError::Solver("infeasible")),
            LpOutcome::Unbounded => return Err(MetricError::Solver("unbounded")),
        }
    }
    let (value, x) = best.expect("two programs solved");
    Ok(KantorovichLift {
        value,
        price: PriceFunction {
            values: domain.into_iter().zip(x).collect(),
        },
    })
}

/// `|W - K|` on one instance; zero whenever both solvers are right.
pub fn duality_gap(
    d: &PseudometricMatrix,
    pi1: &Successors,
    pi2: &Successors,
) -> Result<Rational, MetricError> {
    let w = wasserstein_lift(d, pi1, pi2)?;
    let k = kantorovich_lift(d, pi1, pi2)?;
    Ok(rational::abs_diff(&w.value, &k.value))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Wasserstein,
    Kantorovich,
}

impl Method {
    pub fn lift(
        self,
        d: &PseudometricMatrix,
        pi1: &Successors,
        pi2: &Successors,
    ) -> Result<Rational, MetricError> {
        Ok(match self {
            Method::Wasserstein => wasserstein_lift(d, pi1, pi2)?.value,
            Method::Kantorovich => kantorovich_lift(d, pi1, pi2)?.value,
        })
    }
}

#[doc(hidden)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ChainOptions {
    /// Drops the atom term from the recursion. Only for checking that the
    /// test suite notices a broken distance.
    pub skip_atom_term: bool,
}

/// `d_0, ..., d_n` on the states of one system.
pub fn distance_chain(
    sys: &TransitionSystem,
    n: usize,
    method: Method,
) -> Result<Vec<PseudometricMatrix>, MetricError> {
    distance_chain_with(sys, n, method, ChainOptions::default())
}

#[doc(hidden)]
pub fn distance_chain_with(
    sys: &TransitionSystem,
    n: usize,
    method: Method,
    opts: ChainOptions,
) -> Result<Vec<PseudometricMatrix>, MetricError> {
    let size = sys.state_count();
    let pairs: Vec<(usize, usize)> = (0..size)
        .flat_map(|i| (i + 1..size).map(move |j| (i, j)))
        .collect();
    let gaps: Vec<Rational> = pairs
        .iter()
        .map(|&(i, j)| {
            if opts.skip_atom_term {
                Rational::zero()
            } else {
                sys.atom_gap(StateId(i), sys, StateId(j))
            }
        })
        .collect();
    let mut chain = vec![PseudometricMatrix::zeros(size)];
    for _ in 0..n {
        let prev = chain.last().unwrap();
        let entries: Vec<Rational> = pairs
            .par_iter()
            .zip(gaps.par_iter())
            .map(|(&(i, j), gap)| {
                if gap.is_one() {
                    return Ok(gap.clone());
                }
                let lift =
                    method.lift(prev, sys.successors(StateId(i)), sys.successors(StateId(j)))?;
                Ok(lift.max(gap.clone()))
            })
            .collect::<Result<_, MetricError>>()?;
        let mut next = PseudometricMatrix::zeros(size);
        for (&(i, j), v) in pairs.iter().zip(entries) {
            next.set(i, j, v);
        }
        chain.push(next);
    }
    Ok(chain)
}

/// Distance chain between the states of two systems, computed on their
/// disjoint union so that successors on either side can be compared.
#[derive(Debug, Clone)]
pub struct DistanceChain {
    /// The union; states of the first system come first.
    pub system: TransitionSystem,
    /// Union id of the first state of the second system.
    pub offset_b: usize,
    pub levels: Vec<PseudometricMatrix>,
}

impl DistanceChain {
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, m: usize) -> &PseudometricMatrix {
        &self.levels[m]
    }

    /// Union id of a state of the second system.
    pub fn b_state(&self, b: StateId) -> StateId {
        StateId(b.0 + self.offset_b)
    }

    /// `d_m(a, b)` with `a` in the first and `b` in the second system.
    pub fn between(&self, m: usize, a: StateId, b: StateId) -> &Rational {
        self.levels[m].get(a, self.b_state(b))
    }
}

pub fn behavioural_distance(
    sys_a: &TransitionSystem,
    sys_b: &TransitionSystem,
    n: usize,
    method: Method,
) -> Result<DistanceChain, MetricError> {
    behavioural_distance_with(sys_a, sys_b, n, method, ChainOptions::default())
}

#[doc(hidden)]
pub fn behavioural_distance_with(
    sys_a: &TransitionSystem,
    sys_b: &TransitionSystem,
    n: usize,
    method: Method,
    opts: ChainOptions,
) -> Result<DistanceChain, MetricError> {
    sys_a.same_atoms(sys_b)?;
    let union = disjoint_union(&[sys_a, sys_b])?;
    let levels = distance_chain_with(&union.system, n, method, opts)?;
    Ok(DistanceChain {
        offset_b: union.offsets[1],
        system: union.system,
        levels,
    })
}

/// `max_φ |φ(a) - φ(b)|` over the given formulas, each of rank at most `n`.
pub fn logical_distance_lb(
    sys_a: &TransitionSystem,
    sys_b: &TransitionSystem,
    a: StateId,
    b: StateId,
    formulas: &[Formula],
    n: usize,
) -> Result<Rational, MetricError> {
    sys_a.check_id(a)?;
    sys_b.check_id(b)?;
    let mut ev_a = Evaluator::new(sys_a);
    let mut ev_b = Evaluator::new(sys_b);
    let mut best = Rational::zero();
    for f in formulas {
        let rank = modal_rank(f);
        if rank > n {
            return Err(MetricError::RankViolation { rank, depth: n });
        }
        let gap = rational::abs_diff(&ev_a.value(f, a)?, &ev_b.value(f, b)?);
        if gap > best {
            best = gap;
        }
    }
    Ok(best)
}
