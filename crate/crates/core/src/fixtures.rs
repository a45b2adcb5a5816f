//! Built-in systems used as smoke tests and CLI fixtures.

use crate::rational::{self, Rational};
use crate::system::{SystemBuilder, TransitionSystem};

/// Two disconnected five-state components without atoms.
///
/// ```text
///        x                      y
///   1/2 / \ 1/2       1/2-e  /   \ 1/2+e
///     x1   x2 (loop)       y1     y2 (loop)
/// 1/2 / \ 1/2       1/2-e /  \ 1/2+e
///   x3   x4 (loop)      y3    y4 (loop)
/// ```
///
/// `x3` and `y3` terminate. The `y` side is the `x` side with its branching
/// skewed by `eps`, which must lie in `[0, 1/2]`. Zero-weight edges
/// (at `eps = 1/2`) are omitted. At depth 3 the behavioural distance of
/// `x` and `y` is `eps - eps^2`.
pub fn perturbed_pair(eps: &Rational) -> TransitionSystem {
    let half = rational::ratio(1, 2);
    assert!(
        rational::is_unit_interval(eps) && *eps <= half,
        "eps must lie in [0, 1/2]"
    );
    let lo = &half - eps;
    let hi = &half + eps;
    let mut b = SystemBuilder::new(Vec::<String>::new());
    for l in ["x", "x1", "x2", "x3", "x4", "y", "y1", "y2", "y3", "y4"] {
        b.state(l);
    }
    b.edge("x", "x1", half.clone())
        .edge("x", "x2", half.clone())
        .edge("x1", "x3", half.clone())
        .edge("x1", "x4", half.clone())
        .edge("x2", "x2", rational::one())
        .edge("x4", "x4", rational::one())
        .edge("y", "y1", lo.clone())
        .edge("y", "y2", hi.clone())
        .edge("y1", "y3", lo)
        .edge("y1", "y4", hi)
        .edge("y2", "y2", rational::one())
        .edge("y4", "y4", rational::one());
    b.build().expect("fixture is well formed")
}

/// File name under `fixtures/` for the JSON form of [`perturbed_pair`].
pub fn perturbed_pair_file_name(eps: &Rational) -> String {
    format!(
        "perturbed_pair_eps_{}.json",
        rational::format(eps).replace('/', "_")
    )
}
