use std::sync::Arc;

use thiserror::Error;

use super::fo::{free_variables, FoFormula, Variable};
use super::{and, atom, boxed, constant, diamond, neg, or, trunc_sub, Formula};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("syntax error at offset {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("constant {value} at offset {pos} is outside [0,1]")]
    Range { pos: usize, value: Rational },
    #[error("modal rank {rank} exceeds the budget {budget}")]
    RankViolation { rank: usize, budget: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Rat(Rational),
    Ident(String),
    LParen,
    RParen,
    Tilde,
    Amp,
    Bar,
    Minus,
    Diamond,
    Box,
    BindDiamond,
    Dot,
    Equals,
}

fn syntax(pos: usize, message: impl Into<String>) -> FormulaError {
    FormulaError::Syntax {
        pos,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, FormulaError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let rest = &text[i..];
        let tok = if c.is_ascii_whitespace() {
            i += 1;
            continue;
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                return Err(syntax(
                    start,
                    "decimal constants are not accepted, use num/den",
                ));
            }
            if i < bytes.len() && bytes[i] == b'/' {
                i += 1;
                let den_start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i == den_start {
                    return Err(syntax(start, "missing denominator"));
                }
            }
            let q = rational::parse(&text[start..i]).map_err(|e| syntax(start, e.to_string()))?;
            Tok::Rat(q)
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Tok::Ident(text[start..i].to_string())
        } else if rest.starts_with("<>") {
            i += 2;
            Tok::Diamond
        } else if rest.starts_with("[]") {
            i += 2;
            Tok::Box
        } else if rest.starts_with(":<>") {
            i += 3;
            Tok::BindDiamond
        } else if rest.starts_with("-.") {
            i += 2;
            Tok::Minus
        } else {
            i += 1;
            match c {
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b'~' => Tok::Tilde,
                b'&' => Tok::Amp,
                b'|' => Tok::Bar,
                b'.' => Tok::Dot,
                b'=' => Tok::Equals,
                _ => {
                    let ch = rest.chars().next().unwrap();
                    return Err(syntax(start, format!("unexpected character {ch:?}")));
                }
            }
        };
        out.push((start, tok));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, FormulaError> {
        Ok(Self {
            toks: lex(text)?,
            at: 0,
            end: text.len(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.at + k).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(_, t)| t.clone());
        self.at += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), FormulaError> {
        let pos = self.pos();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(syntax(pos, format!("expected {what}, found {t:?}"))),
            None => Err(syntax(pos, format!("expected {what}, found end of input"))),
        }
    }

    fn finish(&self) -> Result<(), FormulaError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(syntax(self.pos(), format!("unexpected {t:?}"))),
        }
    }

    fn unit_constant(&mut self) -> Result<Rational, FormulaError> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Rat(q)) if rational::is_unit_interval(&q) => Ok(q),
            Some(Tok::Rat(q)) => Err(FormulaError::Range { pos, value: q }),
            _ => Err(syntax(pos, "expected a rational constant")),
        }
    }

    fn ident(&mut self) -> Result<String, FormulaError> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Ident(s)) => Ok(s),
            _ => Err(syntax(pos, "expected an identifier")),
        }
    }

    // modal grammar

    fn modal_or(&mut self) -> Result<Formula, FormulaError> {
        let mut f = self.modal_and()?;
        while self.peek() == Some(&Tok::Bar) {
            self.bump();
            f = or(f, self.modal_and()?);
        }
        Ok(f)
    }

    fn modal_and(&mut self) -> Result<Formula, FormulaError> {
        let mut f = self.modal_unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.bump();
            f = and(f, self.modal_unary()?);
        }
        Ok(f)
    }

    fn modal_unary(&mut self) -> Result<Formula, FormulaError> {
        match self.peek() {
            Some(Tok::Tilde) => {
                self.bump();
                Ok(neg(self.modal_unary()?))
            }
            Some(Tok::Diamond) => {
                self.bump();
                Ok(diamond(self.modal_unary()?))
            }
            Some(Tok::Box) => {
                self.bump();
                Ok(boxed(self.modal_unary()?))
            }
            _ => {
                let mut f = self.modal_primary()?;
                while self.peek() == Some(&Tok::Minus) {
                    self.bump();
                    f = trunc_sub(f, self.unit_constant()?);
                }
                Ok(f)
            }
        }
    }

    fn modal_primary(&mut self) -> Result<Formula, FormulaError> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Rat(q)) if rational::is_unit_interval(&q) => Ok(constant(q)),
            Some(Tok::Rat(q)) => Err(FormulaError::Range { pos, value: q }),
            Some(Tok::Ident(name)) => Ok(atom(&name)),
            Some(Tok::LParen) => {
                let f = self.modal_or()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(f)
            }
            Some(t) => Err(syntax(pos, format!("unexpected {t:?}"))),
            None => Err(syntax(pos, "unexpected end of input")),
        }
    }

    // first-order grammar

    fn fo_or(&mut self) -> Result<FoFormula, FormulaError> {
        let mut f = self.fo_and()?;
        while self.peek() == Some(&Tok::Bar) {
            self.bump();
            let g = self.fo_and()?;
            // f | g  =  ~(~f & ~g)
            f = FoFormula::Neg(Arc::new(FoFormula::And(
                Arc::new(FoFormula::Neg(Arc::new(f))),
                Arc::new(FoFormula::Neg(Arc::new(g))),
            )));
        }
        Ok(f)
    }

    fn fo_and(&mut self) -> Result<FoFormula, FormulaError> {
        let mut f = self.fo_unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.bump();
            f = FoFormula::And(Arc::new(f), Arc::new(self.fo_unary()?));
        }
        Ok(f)
    }

    fn fo_unary(&mut self) -> Result<FoFormula, FormulaError> {
        let pos = self.pos();
        match (self.peek(), self.peek_at(1), self.peek_at(2)) {
            (Some(Tok::Tilde), _, _) => {
                self.bump();
                Ok(FoFormula::Neg(Arc::new(self.fo_unary()?)))
            }
            (Some(Tok::Diamond | Tok::Box), _, _) => Err(syntax(
                pos,
                "modal operators need a binder in first-order formulas: x:<>y. f",
            )),
            // `Ex. f`
            (Some(Tok::Ident(e)), Some(Tok::Dot), _) if e.len() > 1 && e.starts_with('E') => {
                let var = Variable(e[1..].to_string());
                self.bump();
                self.bump();
                Ok(FoFormula::Exists(var, Arc::new(self.fo_or()?)))
            }
            // `E x. f`
            (Some(Tok::Ident(e)), Some(Tok::Ident(_)), Some(Tok::Dot)) if e == "E" => {
                self.bump();
                let var = Variable(self.ident()?);
                self.bump();
                Ok(FoFormula::Exists(var, Arc::new(self.fo_or()?)))
            }
            (Some(Tok::Ident(_)), Some(Tok::BindDiamond), _) => {
                let x = Variable(self.ident()?);
                self.bump();
                let y_pos = self.pos();
                let y = Variable(self.ident()?);
                if x == y {
                    return Err(syntax(
                        y_pos,
                        format!("binder variable {y} must differ from the source variable"),
                    ));
                }
                self.expect(Tok::Dot, "'.' after the bound variable")?;
                Ok(FoFormula::DiamondBind(x, y, Arc::new(self.fo_or()?)))
            }
            _ => {
                let mut f = self.fo_primary()?;
                while self.peek() == Some(&Tok::Minus) {
                    self.bump();
                    f = FoFormula::TruncSub(Arc::new(f), self.unit_constant()?);
                }
                Ok(f)
            }
        }
    }

    fn fo_primary(&mut self) -> Result<FoFormula, FormulaError> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Rat(q)) if rational::is_unit_interval(&q) => Ok(FoFormula::Const(q)),
            Some(Tok::Rat(q)) => Err(FormulaError::Range { pos, value: q }),
            Some(Tok::Ident(name)) => match self.peek() {
                Some(Tok::LParen) => {
                    self.bump();
                    let v = Variable(self.ident()?);
                    self.expect(Tok::RParen, "')'")?;
                    Ok(FoFormula::Atom(name, v))
                }
                Some(Tok::Equals) => {
                    self.bump();
                    let w = Variable(self.ident()?);
                    Ok(FoFormula::Eq(Variable(name), w))
                }
                _ => Err(syntax(
                    pos,
                    format!("{name:?}: atoms take a variable argument, p(x)"),
                )),
            },
            Some(Tok::LParen) => {
                let f = self.fo_or()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(f)
            }
            Some(t) => Err(syntax(pos, format!("unexpected {t:?}"))),
            None => Err(syntax(pos, "unexpected end of input")),
        }
    }
}

pub fn parse_modal(text: &str) -> Result<Formula, FormulaError> {
    let mut p = Parser::new(text)?;
    let f = p.modal_or()?;
    p.finish()?;
    Ok(f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedFo {
    pub formula: FoFormula,
    pub free: Vec<Variable>,
}

pub fn parse_fo(text: &str) -> Result<ParsedFo, FormulaError> {
    let mut p = Parser::new(text)?;
    let f = p.fo_or()?;
    p.finish()?;
    Ok(ParsedFo {
        free: free_variables(&f),
        formula: f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{modal_rank, quantifier_rank, ModalFormula};
    use crate::rational::ratio;

    #[test]
    fn nested_modalities() {
        let f = parse_modal("<><>[]0").unwrap();
        assert_eq!(f, diamond(diamond(boxed(constant(ratio(0, 1))))));
    }

    #[test]
    fn constants() {
        assert_eq!(parse_modal("1/2").unwrap(), constant(ratio(1, 2)));
        assert!(matches!(
            parse_modal("3/2"),
            Err(FormulaError::Range { pos: 0, .. })
        ));
        assert!(matches!(
            parse_modal("p -. 2"),
            Err(FormulaError::Range { .. })
        ));
        assert!(matches!(
            parse_modal("0.5"),
            Err(FormulaError::Syntax { .. })
        ));
    }

    #[test]
    fn conjunction_of_diamonds() {
        let f = parse_modal("<>p & <>q").unwrap();
        assert_eq!(f, and(diamond(atom("p")), diamond(atom("q"))));
        assert_eq!(modal_rank(&f), 2);
    }

    #[test]
    fn precedence() {
        // & over |, left associative
        let f = parse_modal("a | b & c | d").unwrap();
        assert_eq!(f, or(or(atom("a"), and(atom("b"), atom("c"))), atom("d")));
        // -. binds tighter than prefix operators
        let g = parse_modal("~p -. 1/2").unwrap();
        assert_eq!(g, neg(trunc_sub(atom("p"), ratio(1, 2))));
        let h = parse_modal("(~p) -. 1/2 -. 1/4").unwrap();
        assert!(
            matches!(&*h, ModalFormula::TruncSub(inner, _) if matches!(&**inner, ModalFormula::TruncSub(..)))
        );
    }

    #[test]
    fn syntax_errors_report_positions() {
        match parse_modal("p & ") {
            Err(FormulaError::Syntax { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
        match parse_modal("p $ q") {
            Err(FormulaError::Syntax { pos, .. }) => assert_eq!(pos, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_modal("(p").is_err());
        assert!(parse_modal("p q").is_err());
    }

    #[test]
    fn first_order_binders() {
        let p = parse_fo("Ex. x:<>y. p(y)").unwrap();
        let expected = FoFormula::Exists(
            Variable::new("x"),
            Arc::new(FoFormula::DiamondBind(
                Variable::new("x"),
                Variable::new("y"),
                Arc::new(FoFormula::Atom("p".into(), Variable::new("y"))),
            )),
        );
        assert_eq!(p.formula, expected);
        assert!(p.free.is_empty());
        assert_eq!(quantifier_rank(&p.formula), 3);
        assert_eq!(
            parse_fo("E x. x = x").unwrap().formula,
            parse_fo("Ex. x = x").unwrap().formula
        );
    }

    #[test]
    fn first_order_equality_and_free_variables() {
        let p = parse_fo("x = x").unwrap();
        assert_eq!(
            p.formula,
            FoFormula::Eq(Variable::new("x"), Variable::new("x"))
        );
        let q = parse_fo("x:<>z. z = y").unwrap();
        assert_eq!(q.free, vec![Variable::new("x"), Variable::new("y")]);
    }

    #[test]
    fn first_order_rejections() {
        assert!(parse_fo("x:<>x. p(x)").is_err());
        assert!(parse_fo("<>p").is_err());
        assert!(parse_fo("p").is_err());
        assert!(parse_fo("Ex p(x)").is_err());
    }
}
