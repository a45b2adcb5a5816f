use rand::Rng;

use super::{and, atom, boxed, constant, diamond, neg, or, trunc_sub, Formula};
use crate::rational;

#[derive(Debug, Clone)]
pub struct RandomFormulaConfig {
    pub atoms: Vec<String>,
    /// Upper bound on the modal rank of generated formulas.
    pub max_rank: usize,
    /// Upper bound on the syntactic nesting depth.
    pub max_depth: usize,
    /// Constants are multiples of `1/grid`.
    pub grid: u32,
    /// Emit `|` and `[]` as well as the core connectives.
    pub sugar: bool,
}

impl Default for RandomFormulaConfig {
    fn default() -> Self {
        Self {
            atoms: vec!["p".into()],
            max_rank: 3,
            max_depth: 6,
            grid: 8,
            sugar: true,
        }
    }
}

/// Random modal formula over `cfg.atoms` of rank at most `cfg.max_rank`.
pub fn random_modal(rng: &mut impl Rng, cfg: &RandomFormulaConfig) -> Formula {
    gen(rng, cfg, cfg.max_depth, cfg.max_rank)
}

fn grid_constant(rng: &mut impl Rng, grid: u32) -> rational::Rational {
    let g = grid.max(1) as i64;
    rational::ratio(rng.gen_range(0..=g), g)
}

fn gen(rng: &mut impl Rng, cfg: &RandomFormulaConfig, depth: usize, rank: usize) -> Formula {
    fn leaf(rng: &mut impl Rng, cfg: &RandomFormulaConfig, rank: usize) -> Formula {
        if rank >= 1 && !cfg.atoms.is_empty() && rng.gen_bool(0.7) {
            atom(&cfg.atoms[rng.gen_range(0..cfg.atoms.len())])
        } else {
            constant(grid_constant(rng, cfg.grid))
        }
    }
    if depth == 0 || rng.gen_bool(0.2) {
        return leaf(rng, cfg, rank);
    }
    let kinds = if cfg.sugar { 7 } else { 5 };
    match rng.gen_range(0..kinds) {
        0 => trunc_sub(gen(rng, cfg, depth - 1, rank), grid_constant(rng, cfg.grid)),
        1 => neg(gen(rng, cfg, depth - 1, rank)),
        2 => and(
            gen(rng, cfg, depth - 1, rank),
            gen(rng, cfg, depth - 1, rank),
        ),
        3 | 4 if rank == 0 => leaf(rng, cfg, rank),
        3 | 4 => diamond(gen(rng, cfg, depth - 1, rank - 1)),
        5 => or(
            gen(rng, cfg, depth - 1, rank),
            gen(rng, cfg, depth - 1, rank),
        ),
        _ if rank == 0 => leaf(rng, cfg, rank),
        _ => boxed(gen(rng, cfg, depth - 1, rank - 1)),
    }
}
