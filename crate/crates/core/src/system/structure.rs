//! Structural constructions: disjoint union, Gaifman distance and
//! neighbourhoods, radius-k restriction, depth-bounded unravelling and
//! morphism checking.

use std::collections::{BTreeSet, HashSet, VecDeque};

use num_traits::Zero;

use super::{Distribution, State, StateId, Successors, SystemError, TransitionSystem};
use crate::rational::Rational;

#[derive(Debug, Clone)]
pub struct Union {
    pub system: TransitionSystem,
    /// `offsets[k]` is the id of the first state of part `k`.
    pub offsets: Vec<usize>,
}

impl Union {
    pub fn inject(&self, part: usize, s: StateId) -> StateId {
        StateId(self.offsets[part] + s.0)
    }
}

/// Disjoint union of systems sharing one atom header. Labels that would
/// collide with an earlier part get a `#k` suffix (k = part index).
pub fn disjoint_union(parts: &[&TransitionSystem]) -> Result<Union, SystemError> {
    let first = parts
        .first()
        .ok_or_else(|| SystemError::Parameter("union of zero systems".into()))?;
    let mut states: Vec<State> = Vec::new();
    let mut offsets = Vec::with_capacity(parts.len());
    let mut used: HashSet<String> = HashSet::new();
    for (k, part) in parts.iter().enumerate() {
        first.same_atoms(part)?;
        let offset = states.len();
        offsets.push(offset);
        for s in part.states() {
            let st = part.state(s);
            let mut label = st.label.clone();
            if used.contains(&label) {
                label = format!("{}#{k}", st.label);
                let mut bump = 1;
                while used.contains(&label) {
                    label = format!("{}#{k}.{bump}", st.label);
                    bump += 1;
                }
            }
            used.insert(label.clone());
            states.push(State {
                label,
                valuation: st.valuation.clone(),
                successors: shift(&st.successors, offset),
            });
        }
    }
    Ok(Union {
        system: TransitionSystem::from_parts_unchecked(first.atoms().to_vec(), states),
        offsets,
    })
}

fn shift(succ: &Successors, offset: usize) -> Successors {
    match succ {
        Successors::Terminating => Successors::Terminating,
        Successors::Distribution(d) => {
            Successors::Distribution(Distribution::from_sorted_unchecked(
                d.entries()
                    .iter()
                    .map(|(t, w)| (StateId(t.0 + offset), w.clone()))
                    .collect(),
            ))
        }
    }
}

/// Undirected adjacency of the Gaifman graph.
fn gaifman_adjacency(sys: &TransitionSystem) -> Vec<Vec<usize>> {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); sys.state_count()];
    for a in sys.states() {
        for (b, _) in sys.successors(a).entries() {
            if b.0 != a.0 {
                adj[a.0].insert(b.0);
                adj[b.0].insert(a.0);
            }
        }
    }
    adj.into_iter().map(|s| s.into_iter().collect()).collect()
}

/// Breadth-first distances from a set of sources; `None` = unreachable.
fn bfs(adj: &[Vec<usize>], sources: &[usize]) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if dist[s].is_none() {
            dist[s] = Some(0);
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap();
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

pub(crate) fn gaifman_distances_from(sys: &TransitionSystem, a: StateId) -> Vec<Option<usize>> {
    bfs(&gaifman_adjacency(sys), &[a.0])
}

/// Shortest-path length in the Gaifman graph; `None` when disconnected.
pub fn gaifman_distance(
    sys: &TransitionSystem,
    a: StateId,
    b: StateId,
) -> Result<Option<usize>, SystemError> {
    sys.check_id(a)?;
    sys.check_id(b)?;
    Ok(gaifman_distances_from(sys, a)[b.0])
}

/// All states within Gaifman distance `k` of some center.
pub fn neighborhood(
    sys: &TransitionSystem,
    centers: &[StateId],
    k: usize,
) -> Result<BTreeSet<StateId>, SystemError> {
    for c in centers {
        sys.check_id(*c)?;
    }
    let sources: Vec<usize> = centers.iter().map(|c| c.0).collect();
    Ok(bfs(&gaifman_adjacency(sys), &sources)
        .into_iter()
        .enumerate()
        .filter(|(_, d)| d.is_some_and(|d| d <= k))
        .map(|(i, _)| StateId(i))
        .collect())
}

/// Sub-system on a radius-k neighbourhood.
#[derive(Debug, Clone)]
pub struct Restriction {
    pub system: TransitionSystem,
    /// `original[new.0]` is the state of the source system.
    pub original: Vec<StateId>,
    /// Image of the center.
    pub center: StateId,
}

/// Restriction to `N_k(a)`: states keep their valuations, states at
/// distance `< k` keep their transitions and states at distance exactly `k`
/// become terminating. States keep their relative order.
pub fn restrict(sys: &TransitionSystem, a: StateId, k: usize) -> Result<Restriction, SystemError> {
    sys.check_id(a)?;
    let dist = gaifman_distances_from(sys, a);
    let original: Vec<StateId> = sys
        .states()
        .filter(|s| dist[s.0].is_some_and(|d| d <= k))
        .collect();
    let mut new_id = vec![None; sys.state_count()];
    for (i, s) in original.iter().enumerate() {
        new_id[s.0] = Some(StateId(i));
    }
    let states = original
        .iter()
        .map(|&s| {
            let st = sys.state(s);
            let successors = if dist[s.0].unwrap() < k {
                match &st.successors {
                    Successors::Terminating => Successors::Terminating,
                    Successors::Distribution(d) => {
                        // targets of an interior state are within radius k
                        let mut entries: Vec<(StateId, Rational)> = d
                            .entries()
                            .iter()
                            .map(|(t, w)| (new_id[t.0].expect("target inside radius"), w.clone()))
                            .collect();
                        entries.sort_by_key(|(t, _)| *t);
                        Successors::Distribution(Distribution::from_sorted_unchecked(entries))
                    }
                }
            } else {
                Successors::Terminating
            };
            State {
                label: st.label.clone(),
                valuation: st.valuation.clone(),
                successors,
            }
        })
        .collect();
    Ok(Restriction {
        system: TransitionSystem::from_parts_unchecked(sys.atoms().to_vec(), states),
        center: new_id[a.0].unwrap(),
        original,
    })
}

/// Depth-bounded tree of paths.
#[derive(Debug, Clone)]
pub struct Unravelling {
    pub system: TransitionSystem,
    pub root: StateId,
    /// `last[node.0]` is the final state of the path the node stands for.
    pub last: Vec<StateId>,
    pub depth_of: Vec<usize>,
}

/// Tree of all transition paths from `a` of length at most `depth`. A node
/// carries the valuation of the last state of its path; nodes at exactly
/// `depth` are terminating. Nodes are numbered breadth-first, root 0, and
/// labelled by the path (`x/x1/x3`).
pub fn unravel(
    sys: &TransitionSystem,
    a: StateId,
    depth: usize,
) -> Result<Unravelling, SystemError> {
    sys.check_id(a)?;
    struct Node {
        label: String,
        last: StateId,
        depth: usize,
        children: Vec<(usize, Rational)>,
    }
    let mut nodes = vec![Node {
        label: sys.label(a).to_string(),
        last: a,
        depth: 0,
        children: Vec::new(),
    }];
    let mut i = 0;
    while i < nodes.len() {
        if nodes[i].depth < depth {
            let last = nodes[i].last;
            for (t, w) in sys.successors(last).entries() {
                let child = Node {
                    label: format!("{}/{}", nodes[i].label, sys.label(*t)),
                    last: *t,
                    depth: nodes[i].depth + 1,
                    children: Vec::new(),
                };
                nodes.push(child);
                let id = nodes.len() - 1;
                nodes[i].children.push((id, w.clone()));
            }
        }
        i += 1;
    }
    let last: Vec<StateId> = nodes.iter().map(|n| n.last).collect();
    let depth_of: Vec<usize> = nodes.iter().map(|n| n.depth).collect();
    let states = nodes
        .into_iter()
        .map(|n| State {
            valuation: sys.state(n.last).valuation.clone(),
            successors: if n.children.is_empty() {
                Successors::Terminating
            } else {
                Successors::Distribution(Distribution::from_sorted_unchecked(
                    n.children
                        .into_iter()
                        .map(|(c, w)| (StateId(c), w))
                        .collect(),
                ))
            },
            label: n.label,
        })
        .collect();
    Ok(Unravelling {
        system: TransitionSystem::from_parts_unchecked(sys.atoms().to_vec(), states),
        root: StateId(0),
        last,
        depth_of,
    })
}

/// A candidate map between two systems, total on the source.
#[derive(Debug, Clone)]
pub struct MorphismCandidate<'a> {
    pub source: &'a TransitionSystem,
    pub target: &'a TransitionSystem,
    pub map: Vec<StateId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MorphismReport {
    pub is_morphism: bool,
    pub violation: Option<String>,
}

/// Checks valuations, termination and the pushforward condition
/// `π_B(f(a), b') = Σ_{f(a') = b'} π_A(a, a')` exactly, stopping at the first
/// violation.
pub fn check_morphism(cand: &MorphismCandidate<'_>) -> Result<MorphismReport, SystemError> {
    let (src, tgt) = (cand.source, cand.target);
    src.same_atoms(tgt)?;
    if cand.map.len() != src.state_count() {
        return Err(SystemError::Parameter(format!(
            "map covers {} of {} source states",
            cand.map.len(),
            src.state_count()
        )));
    }
    for &b in &cand.map {
        tgt.check_id(b)?;
    }
    let fail = |msg: String| {
        Ok(MorphismReport {
            is_morphism: false,
            violation: Some(msg),
        })
    };
    for a in src.states() {
        let fa = cand.map[a.0];
        for (p, name) in src.atoms().iter().enumerate() {
            if src.value(p, a) != tgt.value(p, fa) {
                return fail(format!(
                    "atom {name}: {} at {} but {} at image {}",
                    src.value(p, a),
                    src.label(a),
                    tgt.value(p, fa),
                    tgt.label(fa)
                ));
            }
        }
        if src.is_terminating(a) != tgt.is_terminating(fa) {
            return fail(format!(
                "{} and its image {} disagree on termination",
                src.label(a),
                tgt.label(fa)
            ));
        }
        let mut pushed: Vec<Rational> = vec![Rational::zero(); tgt.state_count()];
        for (t, w) in src.successors(a).entries() {
            pushed[cand.map[t.0].0] += w;
        }
        for b in tgt.states() {
            let expected = tgt.weight(fa, b);
            if pushed[b.0] != expected {
                return fail(format!(
                    "from {}: pushed weight {} into {} but image has {}",
                    src.label(a),
                    pushed[b.0],
                    tgt.label(b),
                    expected
                ));
            }
        }
    }
    Ok(MorphismReport {
        is_morphism: true,
        violation: None,
    })
}

/// Connected components of the Gaifman graph.
pub fn component_count(sys: &TransitionSystem) -> usize {
    let adj = gaifman_adjacency(sys);
    let mut seen = vec![false; adj.len()];
    let mut count = 0;
    for s in 0..adj.len() {
        if !seen[s] {
            count += 1;
            for (i, d) in bfs(&adj, &[s]).into_iter().enumerate() {
                if d.is_some() {
                    seen[i] = true;
                }
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::perturbed_pair;
    use crate::rational::ratio;
    use crate::system::SystemBuilder;

    fn ex() -> TransitionSystem {
        perturbed_pair(&ratio(1, 4))
    }

    fn id(sys: &TransitionSystem, l: &str) -> StateId {
        sys.lookup(l).unwrap()
    }

    #[test]
    fn union_with_itself_doubles_and_keeps_components() {
        let sys = ex();
        let u = disjoint_union(&[&sys, &sys]).unwrap();
        assert_eq!(u.system.state_count(), 20);
        assert_eq!(u.offsets, vec![0, 10]);
        assert_eq!(component_count(&sys), 2);
        assert_eq!(component_count(&u.system), 4);
        assert_eq!(u.system.label(StateId(10)), "x#1");
    }

    #[test]
    fn union_of_one_is_identity() {
        let sys = ex();
        let u = disjoint_union(&[&sys]).unwrap();
        assert_eq!(u.system, sys);
        assert_eq!(u.offsets, vec![0]);
    }

    #[test]
    fn union_rejects_mismatched_atoms() {
        let mut b = SystemBuilder::new(["p"]);
        b.state("a");
        let other = b.build().unwrap();
        assert!(matches!(
            disjoint_union(&[&ex(), &other]),
            Err(SystemError::AtomMismatch { .. })
        ));
    }

    #[test]
    fn locality_union_has_expected_component_count() {
        // A + n copies of A + n copies of its radius-k restriction
        let sys = ex();
        let x = id(&sys, "x");
        let local = restrict(&sys, x, 1).unwrap().system;
        let n = 3;
        let mut parts: Vec<&TransitionSystem> = vec![&sys];
        parts.extend(std::iter::repeat_n(&sys, n));
        parts.extend(std::iter::repeat_n(&local, n));
        let u = disjoint_union(&parts).unwrap();
        assert_eq!(u.offsets.len(), 2 * n + 1);
        // each copy of the fixture has 2 components, the restriction 1
        assert_eq!(component_count(&u.system), 2 * (n + 1) + n);
    }

    #[test]
    fn gaifman_distances_on_fixture() {
        let sys = ex();
        let (x, x3, y) = (id(&sys, "x"), id(&sys, "x3"), id(&sys, "y"));
        assert_eq!(gaifman_distance(&sys, x, x3).unwrap(), Some(2));
        assert_eq!(gaifman_distance(&sys, x, x).unwrap(), Some(0));
        assert_eq!(gaifman_distance(&sys, x, y).unwrap(), None);
        assert!(gaifman_distance(&sys, x, StateId(99)).is_err());
    }

    #[test]
    fn neighborhoods() {
        let sys = ex();
        let (x, y) = (id(&sys, "x"), id(&sys, "y"));
        let n1: Vec<&str> = neighborhood(&sys, &[x], 1)
            .unwrap()
            .into_iter()
            .map(|s| sys.label(s))
            .collect();
        assert_eq!(n1, vec!["x", "x1", "x2"]);
        assert_eq!(neighborhood(&sys, &[y], 0).unwrap(), BTreeSet::from([y]));
        let both = neighborhood(&sys, &[x, y], 1).unwrap();
        let mut expect = neighborhood(&sys, &[x], 1).unwrap();
        expect.extend(neighborhood(&sys, &[y], 1).unwrap());
        assert_eq!(both, expect);
    }

    #[test]
    fn restriction_clips_the_boundary() {
        let sys = ex();
        let x = id(&sys, "x");
        let r = restrict(&sys, x, 1).unwrap();
        assert_eq!(r.system.state_count(), 3);
        let rx = r.center;
        assert_eq!(r.system.successors(rx).entries().len(), 2);
        for l in ["x1", "x2"] {
            assert!(r.system.is_terminating(r.system.lookup(l).unwrap()));
        }
    }

    #[test]
    fn restriction_radius_zero_and_large() {
        let sys = ex();
        let x1 = id(&sys, "x1");
        let r = restrict(&sys, x1, 0).unwrap();
        assert_eq!(r.system.state_count(), 1);
        assert!(r.system.is_terminating(StateId(0)));

        let x = id(&sys, "x");
        let r = restrict(&sys, x, 10).unwrap();
        assert_eq!(r.system.state_count(), 5);
        for (new, old) in r.original.iter().enumerate() {
            assert_eq!(
                r.system.successors(StateId(new)).entries().len(),
                sys.successors(*old).entries().len()
            );
        }
    }

    #[test]
    fn restriction_is_idempotent_from_roots() {
        let sys = ex();
        for a in [id(&sys, "x"), id(&sys, "y")] {
            for k in 0..4 {
                let once = restrict(&sys, a, k).unwrap();
                let twice = restrict(&once.system, once.center, k).unwrap();
                assert_eq!(once.system, twice.system);
            }
        }
    }

    #[test]
    fn boundary_state_entered_backwards_is_isolated() {
        // x1 -> x3 only: seen from x3, x1 sits on the boundary and loses its edges
        let sys = ex();
        let x3 = id(&sys, "x3");
        let once = restrict(&sys, x3, 1).unwrap();
        assert_eq!(once.system.state_count(), 2);
        assert!(once.system.states().all(|s| once.system.is_terminating(s)));
        let twice = restrict(&once.system, once.center, 1).unwrap();
        assert_eq!(twice.system.state_count(), 1);
    }

    #[test]
    fn unravel_depth_zero_and_self_loop() {
        let sys = ex();
        let u = unravel(&sys, id(&sys, "x"), 0).unwrap();
        assert_eq!(u.system.state_count(), 1);
        assert!(u.system.is_terminating(u.root));

        let mut b = SystemBuilder::new(Vec::<String>::new());
        b.state("a");
        b.edge("a", "a", ratio(1, 1));
        let lp = b.build().unwrap();
        let u = unravel(&lp, StateId(0), 2).unwrap();
        assert_eq!(u.system.state_count(), 3);
        assert_eq!(u.system.label(StateId(2)), "a/a/a");
        assert!(u.system.is_terminating(StateId(2)));
        assert!(!u.system.is_terminating(StateId(1)));
    }

    #[test]
    fn unravel_is_a_tree() {
        let sys = ex();
        let u = unravel(&sys, id(&sys, "x"), 3).unwrap();
        let mut parents = vec![0usize; u.system.state_count()];
        for s in u.system.states() {
            for (t, _) in u.system.successors(s).entries() {
                parents[t.0] += 1;
                assert_eq!(u.depth_of[t.0], u.depth_of[s.0] + 1);
            }
        }
        assert_eq!(parents[0], 0);
        assert!(parents[1..].iter().all(|&p| p == 1));
    }

    #[test]
    fn identity_and_fold_are_morphisms() {
        let sys = ex();
        let idmap: Vec<StateId> = sys.states().collect();
        let r = check_morphism(&MorphismCandidate {
            source: &sys,
            target: &sys,
            map: idmap,
        })
        .unwrap();
        assert!(r.is_morphism);

        let u = disjoint_union(&[&sys, &sys]).unwrap();
        let fold: Vec<StateId> = u.system.states().map(|s| StateId(s.0 % 10)).collect();
        let r = check_morphism(&MorphismCandidate {
            source: &u.system,
            target: &sys,
            map: fold,
        })
        .unwrap();
        assert!(r.is_morphism, "{:?}", r.violation);
    }

    #[test]
    fn clipped_unravelling_is_not_a_morphism() {
        let sys = ex();
        let u = unravel(&sys, id(&sys, "x"), 2).unwrap();
        let r = check_morphism(&MorphismCandidate {
            source: &u.system,
            target: &sys,
            map: u.last.clone(),
        })
        .unwrap();
        assert!(!r.is_morphism);
        assert!(r.violation.unwrap().contains("termination"));
    }

    #[test]
    fn union_injections_are_morphisms() {
        let sys = ex();
        let u = disjoint_union(&[&sys, &sys]).unwrap();
        for part in 0..2 {
            let map = sys.states().map(|s| u.inject(part, s)).collect();
            let r = check_morphism(&MorphismCandidate {
                source: &sys,
                target: &u.system,
                map,
            })
            .unwrap();
            assert!(r.is_morphism);
        }
    }
}
