use super::fo::FoFormula;
use super::{Formula, ModalFormula};
use crate::rational;

const OR: u8 = 1;
const AND: u8 = 2;
const PREFIX: u8 = 3;
const POSTFIX: u8 = 4;
const PRIMARY: u8 = 5;

fn wrap(out: &mut String, own: u8, min: u8, body: impl FnOnce(&mut String)) {
    if own < min {
        out.push('(');
        body(out);
        out.push(')');
    } else {
        body(out);
    }
}

/// Concrete syntax with the fewest parentheses that parse back to the same
/// tree. Shared subformulas are printed once per occurrence.
pub fn render_modal(f: &Formula) -> String {
    fn go(f: &Formula, min: u8, out: &mut String) {
        match &**f {
            ModalFormula::Const(c) => out.push_str(&rational::format(c)),
            ModalFormula::Atom(p) => out.push_str(p),
            ModalFormula::TruncSub(g, c) => wrap(out, POSTFIX, min, |out| {
                go(g, POSTFIX, out);
                out.push_str(" -. ");
                out.push_str(&rational::format(c));
            }),
            ModalFormula::Neg(g) => prefix(out, "~", g, min),
            ModalFormula::Diamond(g) => prefix(out, "<>", g, min),
            ModalFormula::Box(g) => prefix(out, "[]", g, min),
            ModalFormula::And(g, h) => binary(out, " & ", AND, g, h, min),
            ModalFormula::Or(g, h) => binary(out, " | ", OR, g, h, min),
        }
    }
    fn prefix(out: &mut String, op: &str, g: &Formula, min: u8) {
        wrap(out, PREFIX, min, |out| {
            out.push_str(op);
            go(g, PREFIX, out);
        })
    }
    fn binary(out: &mut String, op: &str, prec: u8, g: &Formula, h: &Formula, min: u8) {
        wrap(out, prec, min, |out| {
            go(g, prec, out);
            out.push_str(op);
            go(h, prec + 1, out);
        })
    }
    let mut out = String::new();
    go(f, 0, &mut out);
    out
}

/// First-order counterpart of [`render_modal`]. Binders are parenthesized
/// unless they stand at the top or directly under another binder.
pub fn render_fo(f: &FoFormula) -> String {
    fn go(f: &FoFormula, min: u8, out: &mut String) {
        match f {
            FoFormula::Const(c) => out.push_str(&rational::format(c)),
            FoFormula::Atom(p, v) => {
                out.push_str(p);
                out.push('(');
                out.push_str(v.name());
                out.push(')');
            }
            FoFormula::Eq(v, w) => wrap(out, PRIMARY, min, |out| {
                out.push_str(v.name());
                out.push_str(" = ");
                out.push_str(w.name());
            }),
            FoFormula::TruncSub(g, c) => wrap(out, POSTFIX, min, |out| {
                go(g, POSTFIX, out);
                out.push_str(" -. ");
                out.push_str(&rational::format(c));
            }),
            FoFormula::Neg(g) => wrap(out, PREFIX, min, |out| {
                out.push('~');
                go(g, PREFIX, out);
            }),
            FoFormula::And(g, h) => wrap(out, AND, min, |out| {
                go(g, AND, out);
                out.push_str(" & ");
                go(h, AND + 1, out);
            }),
            FoFormula::Exists(v, g) => wrap(out, 0, min, |out| {
                out.push('E');
                out.push_str(v.name());
                out.push_str(". ");
                go(g, 0, out);
            }),
            FoFormula::DiamondBind(x, y, g) => wrap(out, 0, min, |out| {
                out.push_str(x.name());
                out.push_str(":<>");
                out.push_str(y.name());
                out.push_str(". ");
                go(g, 0, out);
            }),
        }
    }
    let mut out = String::new();
    go(f, 0, &mut out);
    out
}
