//! Transportation simplex over exact rationals.
//!
//! Starts from the northwest-corner basis (degenerate cells kept, so the
//! basis is always a spanning tree with `m + n - 1` cells) and improves it
//! with the u/v potential method. Entering and leaving cells are chosen by
//! Bland's rule over row-major cell indices, so degenerate pivots cannot
//! cycle.

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("supplies and demands must be non-empty with equal totals")]
    InfeasibleMarginals,
    #[error("cost matrix has the wrong shape")]
    Shape,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportSolution {
    pub value: Rational,
    /// Positive flows `(row, column, amount)` in row-major order.
    pub flows: Vec<(usize, usize, Rational)>,
}

/// Minimum-cost transport plan from `supply` to `demand` under `cost`
/// (`cost[i][j]` for row `i`, column `j`).
pub fn solve_transport(
    supply: &[Rational],
    demand: &[Rational],
    cost: &[Vec<Rational>],
) -> Result<TransportSolution, TransportError> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 {
        return Err(TransportError::InfeasibleMarginals);
    }
    if cost.len() != m || cost.iter().any(|r| r.len() != n) {
        return Err(TransportError::Shape);
    }
    let total: Rational = supply.iter().sum();
    if total != demand.iter().sum::<Rational>()
        || supply.iter().chain(demand).any(|x| x.is_negative())
    {
        return Err(TransportError::InfeasibleMarginals);
    }

    let mut flow = vec![vec![Rational::zero(); n]; m];
    let mut basic = vec![vec![false; n]; m];
    let (mut s, mut d) = (supply.to_vec(), demand.to_vec());
    let (mut i, mut j) = (0, 0);
    while i < m && j < n {
        let x = s[i].clone().min(d[j].clone());
        s[i] -= &x;
        d[j] -= &x;
        flow[i][j] = x;
        basic[i][j] = true;
        if i == m - 1 {
            j += 1;
        } else if j == n - 1 || s[i].is_zero() {
            i += 1;
        } else {
            j += 1;
        }
    }

    loop {
        let (u, v) = potentials(&basic, cost);
        let mut entering = None;
        'search: for (r, row) in cost.iter().enumerate() {
            for (c, cij) in row.iter().enumerate() {
                if !basic[r][c] && (cij - &u[r] - &v[c]).is_negative() {
                    entering = Some((r, c));
                    break 'search;
                }
            }
        }
        let Some((er, ec)) = entering else { break };
        let path = tree_path(&basic, er, ec);
        // path cells alternate -, +, -, ... starting from the entering row
        let mut leave: Option<(usize, usize)> = None;
        for &(r, c) in path.iter().step_by(2) {
            let better = match leave {
                None => true,
                Some((lr, lc)) => {
                    flow[r][c] < flow[lr][lc] || (flow[r][c] == flow[lr][lc] && (r, c) < (lr, lc))
                }
            };
            if better {
                leave = Some((r, c));
            }
        }
        let (lr, lc) = leave.expect("cycle has a minus cell");
        let theta = flow[lr][lc].clone();
        for (k, &(r, c)) in path.iter().enumerate() {
            if k % 2 == 0 {
                flow[r][c] -= &theta;
            } else {
                flow[r][c] += &theta;
            }
        }
        flow[er][ec] = theta;
        basic[er][ec] = true;
        basic[lr][lc] = false;
    }

    let mut value = Rational::zero();
    let mut flows = Vec::new();
    for r in 0..m {
        for c in 0..n {
            if !flow[r][c].is_zero() {
                value += &flow[r][c] * &cost[r][c];
                flows.push((r, c, flow[r][c].clone()));
            }
        }
    }
    Ok(TransportSolution { value, flows })
}

/// Dual potentials with `u[0] = 0` and `u_i + v_j = c_ij` on basic cells.
fn potentials(basic: &[Vec<bool>], cost: &[Vec<Rational>]) -> (Vec<Rational>, Vec<Rational>) {
    let (m, n) = (basic.len(), basic[0].len());
    let mut u: Vec<Option<Rational>> = vec![None; m];
    let mut v: Vec<Option<Rational>> = vec![None; n];
    u[0] = Some(Rational::zero());
    // node ids: rows 0..m, columns m..m+n
    let mut stack = vec![0usize];
    while let Some(node) = stack.pop() {
        if node < m {
            let r = node;
            let ur = u[r].clone().unwrap();
            for c in 0..n {
                if basic[r][c] && v[c].is_none() {
                    v[c] = Some(&cost[r][c] - &ur);
                    stack.push(m + c);
                }
            }
        } else {
            let c = node - m;
            let vc = v[c].clone().unwrap();
            for r in 0..m {
                if basic[r][c] && u[r].is_none() {
                    u[r] = Some(&cost[r][c] - &vc);
                    stack.push(r);
                }
            }
        }
    }
    (
        u.into_iter()
            .map(|x| x.expect("basis spans all rows"))
            .collect(),
        v.into_iter()
            .map(|x| x.expect("basis spans all columns"))
            .collect(),
    )
}

/// Basic cells on the tree path from row `er` to column `ec`, in order.
fn tree_path(basic: &[Vec<bool>], er: usize, ec: usize) -> Vec<(usize, usize)> {
    let (m, n) = (basic.len(), basic[0].len());
    let mut parent: Vec<Option<usize>> = vec![None; m + n];
    let mut seen = vec![false; m + n];
    seen[er] = true;
    let mut queue = std::collections::VecDeque::from([er]);
    while let Some(node) = queue.pop_front() {
        if node == m + ec {
            break;
        }
        let next: Vec<usize> = if node < m {
            (0..n).filter(|&c| basic[node][c]).map(|c| m + c).collect()
        } else {
            (0..m).filter(|&r| basic[r][node - m]).collect()
        };
        for k in next {
            if !seen[k] {
                seen[k] = true;
                parent[k] = Some(node);
                queue.push_back(k);
            }
        }
    }
    let mut nodes = vec![m + ec];
    while let Some(p) = parent[*nodes.last().unwrap()] {
        nodes.push(p);
    }
    nodes.reverse();
    nodes
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            if a < m {
                (a, b - m)
            } else {
                (b, a - m)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn two_by_two_unit_cost() {
        let cost = vec![vec![int(0), int(1)], vec![int(1), int(0)]];
        let sol = solve_transport(
            &[ratio(1, 3), ratio(2, 3)],
            &[ratio(1, 2), ratio(1, 2)],
            &cost,
        )
        .unwrap();
        assert_eq!(sol.value, ratio(1, 6));
    }

    #[test]
    fn identical_marginals_cost_nothing() {
        let w = [ratio(1, 4), ratio(1, 4), ratio(1, 2)];
        let cost: Vec<Vec<Rational>> = (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| if i == j { int(0) } else { int(1) })
                    .collect()
            })
            .collect();
        let sol = solve_transport(&w, &w, &cost).unwrap();
        assert_eq!(sol.value, int(0));
    }

    #[test]
    fn needs_improvement_from_northwest_start() {
        // northwest corner ships along the expensive diagonal
        let cost = vec![
            vec![int(9), int(1), int(9)],
            vec![int(9), int(9), int(1)],
            vec![int(1), int(9), int(9)],
        ];
        let third = ratio(1, 3);
        let w = [third.clone(), third.clone(), third];
        let sol = solve_transport(&w, &w, &cost).unwrap();
        assert_eq!(sol.value, int(1));
        assert_eq!(sol.flows.len(), 3);
    }

    #[test]
    fn rejects_unbalanced_marginals() {
        let cost = vec![vec![int(0)]];
        assert_eq!(
            solve_transport(&[ratio(1, 2)], &[int(1)], &cost),
            Err(TransportError::InfeasibleMarginals)
        );
    }
}
