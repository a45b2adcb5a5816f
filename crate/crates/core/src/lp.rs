//! Dense two-phase simplex over exact rationals with Bland's rule.
//!
//! Small problems only: the tableau is stored densely, but pivots skip zero
//! entries, which keeps sparse constraint systems cheap.

use num_traits::{Signed, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    /// Sparse coefficients `(variable, coefficient)`.
    pub terms: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// `maximize objective · x` subject to the constraints and `x >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: Rational, x: Vec<Rational> },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    n_cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        if !p.is_zero() {
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v /= &p;
                }
            }
            self.rhs[r] /= &p;
        }
        let prow = std::mem::take(&mut self.rows[r]);
        let nz: Vec<usize> = (0..self.n_cols).filter(|&j| !prow[j].is_zero()).collect();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for &j in &nz {
                let delta = &f * &prow[j];
                self.rows[i][j] -= delta;
            }
            if !prhs.is_zero() {
                self.rhs[i] -= &f * &prhs;
            }
        }
        self.rows[r] = prow;
        self.basis[r] = c;
    }

    /// Maximizes `cost` over the columns `< allowed`; `false` if unbounded.
    fn optimize(&mut self, cost: &[Rational], allowed: usize) -> bool {
        loop {
            // reduced cost r_j = c_j - sum_i c_{B_i} a_ij; enter lowest j with r_j > 0
            let mut entering = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut r = cost[j].clone();
                for (i, row) in self.rows.iter().enumerate() {
                    let cb = &cost[self.basis[i]];
                    if !cb.is_zero() && !row[j].is_zero() {
                        r -= cb * &row[j];
                    }
                }
                if r.is_positive() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else {
                return true;
            };
            // ratio test; ties go to the lowest basic variable index
            let mut leave: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c].is_positive() {
                    let ratio = &self.rhs[i] / &row[c];
                    let better = match &leave {
                        None => true,
                        Some((l, best)) => {
                            ratio < *best || (ratio == *best && self.basis[i] < self.basis[*l])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }
}

type Row = (Vec<(usize, Rational)>, Relation, Rational);

pub fn maximize(lp: &LinearProgram) -> LpOutcome {
    let n = lp.n_vars;
    let m = lp.constraints.len();
    // normalize to non-negative right-hand sides
    let cons: Vec<Row> = lp
        .constraints
        .iter()
        .map(|c| {
            if c.rhs.is_negative() {
                let rel = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                let terms = c.terms.iter().map(|(j, a)| (*j, -a)).collect();
                (terms, rel, -&c.rhs)
            } else {
                (c.terms.clone(), c.relation, c.rhs.clone())
            }
        })
        .collect();
    let n_slack = cons.iter().filter(|c| c.1 != Relation::Eq).count();
    let n_art = cons.iter().filter(|c| c.1 != Relation::Le).count();
    let first_art = n + n_slack;
    let n_cols = first_art + n_art;

    let mut t = Tableau {
        rows: Vec::with_capacity(m),
        rhs: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        n_cols,
    };
    let (mut slack, mut art) = (n, first_art);
    for (terms, rel, rhs) in cons {
        let mut row = vec![Rational::zero(); n_cols];
        for (j, a) in terms {
            row[j] += a;
        }
        match rel {
            Relation::Le => {
                row[slack] = Rational::from_integer(1.into());
                t.basis.push(slack);
                slack += 1;
            }
            Relation::Ge => {
                row[slack] = Rational::from_integer((-1).into());
                slack += 1;
                row[art] = Rational::from_integer(1.into());
                t.basis.push(art);
                art += 1;
            }
            Relation::Eq => {
                row[art] = Rational::from_integer(1.into());
                t.basis.push(art);
                art += 1;
            }
        }
        t.rows.push(row);
        t.rhs.push(rhs);
    }

    if n_art > 0 {
        let mut phase1 = vec![Rational::zero(); n_cols];
        for c in phase1.iter_mut().skip(first_art) {
            *c = Rational::from_integer((-1).into());
        }
        t.optimize(&phase1, n_cols);
        let infeasible = t
            .basis
            .iter()
            .zip(&t.rhs)
            .any(|(&b, v)| b >= first_art && !v.is_zero());
        if infeasible {
            return LpOutcome::Infeasible;
        }
        // drive zero-level artificials out of the basis, dropping redundant rows
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= first_art {
                match (0..first_art).find(|&j| !t.rows[i][j].is_zero()) {
                    Some(j) => {
                        t.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        t.rows.remove(i);
                        t.rhs.remove(i);
                        t.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }

    let mut cost = vec![Rational::zero(); n_cols];
    cost[..n].clone_from_slice(&lp.objective);
    if !t.optimize(&cost, first_art) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Rational::zero(); n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs[i].clone();
        }
    }
    let value = x
        .iter()
        .zip(&lp.objective)
        .fold(Rational::zero(), |acc, (xi, ci)| acc + xi * ci);
    LpOutcome::Optimal { value, x }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn c(terms: &[(usize, i64)], relation: Relation, rhs: Rational) -> Constraint {
        Constraint {
            terms: terms.iter().map(|&(j, a)| (j, int(a))).collect(),
            relation,
            rhs,
        }
    }

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
        let lp = LinearProgram {
            n_vars: 2,
            objective: vec![int(3), int(5)],
            constraints: vec![
                c(&[(0, 1)], Relation::Le, int(4)),
                c(&[(1, 2)], Relation::Le, int(12)),
                c(&[(0, 3), (1, 2)], Relation::Le, int(18)),
            ],
        };
        assert_eq!(
            maximize(&lp),
            LpOutcome::Optimal {
                value: int(36),
                x: vec![int(2), int(6)]
            }
        );
    }

    #[test]
    fn equality_and_lower_bounds() {
        // max -x - y, x + y = 1, x >= 1/3 -> -1
        let lp = LinearProgram {
            n_vars: 2,
            objective: vec![int(-1), int(-1)],
            constraints: vec![
                c(&[(0, 1), (1, 1)], Relation::Eq, int(1)),
                c(&[(0, 1)], Relation::Ge, ratio(1, 3)),
            ],
        };
        match maximize(&lp) {
            LpOutcome::Optimal { value, x } => {
                assert_eq!(value, int(-1));
                assert!(x[0] >= ratio(1, 3));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let lp = LinearProgram {
            n_vars: 1,
            objective: vec![int(1)],
            constraints: vec![
                c(&[(0, 1)], Relation::Le, int(1)),
                c(&[(0, 1)], Relation::Ge, int(2)),
            ],
        };
        assert_eq!(maximize(&lp), LpOutcome::Infeasible);
        let lp = LinearProgram {
            n_vars: 2,
            objective: vec![int(1), int(0)],
            constraints: vec![c(&[(0, 1), (1, -1)], Relation::Le, int(1))],
        };
        assert_eq!(maximize(&lp), LpOutcome::Unbounded);
    }

    #[test]
    fn negative_right_hand_side_and_redundant_rows() {
        // -x <= -1 (x >= 1), x + y = 2, 2x + 2y = 4; max y -> 1
        let lp = LinearProgram {
            n_vars: 2,
            objective: vec![int(0), int(1)],
            constraints: vec![
                c(&[(0, -1)], Relation::Le, int(-1)),
                c(&[(0, 1), (1, 1)], Relation::Eq, int(2)),
                c(&[(0, 2), (1, 2)], Relation::Eq, int(4)),
            ],
        };
        match maximize(&lp) {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, int(1)),
            other => panic!("{other:?}"),
        }
    }
}
