//! Recursive-descent parser for the textual formula syntax.
//!
//! ```text
//! phi      := or
//! or       := and ('|' and)*
//! and      := unary ('&' unary)*
//! unary    := '!' unary | primary
//! primary  := 'true' | temporal | '(' phi ')' | atom
//! temporal := ('F'|'G') interval? '(' phi ')' | 'U' interval? '(' phi ',' phi ')'
//! interval := ('['|'(') bound ',' bound (']'|')')
//! atom     := expr cmp ['-'] (number | param)
//! expr     := ['-'] term (('+'|'-') term)*
//! term     := number ['*' channel] | channel
//! ```
//! Omitting the interval means `[0, inf)`.

use super::{Atom, Cmp, Formula, FormulaError, Interval, LinearExpr, Operand, TimeBound};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Bang,
    Amp,
    Pipe,
    Plus,
    Minus,
    Star,
    Cmp(Cmp),
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(n) => format!("number {n}"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::End => "end of input".into(),
        other => format!("{other:?}"),
    }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, FormulaError> {
    let bytes: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |pos: usize, msg: String| FormulaError::Syntax { pos, msg };
    while i < bytes.len() {
        let (pos, c) = bytes[i];
        let next = bytes.get(i + 1).map(|&(_, c)| c);
        let mut single = |t: Tok, width: usize| {
            out.push((t, pos));
            i += width;
        };
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => single(Tok::LParen, 1),
            ')' => single(Tok::RParen, 1),
            '[' => single(Tok::LBrack, 1),
            ']' => single(Tok::RBrack, 1),
            ',' => single(Tok::Comma, 1),
            '+' => single(Tok::Plus, 1),
            '-' | '−' => single(Tok::Minus, 1),
            '*' => single(Tok::Star, 1),
            '¬' => single(Tok::Bang, 1),
            '∧' => single(Tok::Amp, 1),
            '∨' => single(Tok::Pipe, 1),
            '≥' => single(Tok::Cmp(Cmp::Ge), 1),
            '≤' => single(Tok::Cmp(Cmp::Le), 1),
            '!' => single(Tok::Bang, 1),
            '&' => single(Tok::Amp, if next == Some('&') { 2 } else { 1 }),
            '|' => single(Tok::Pipe, if next == Some('|') { 2 } else { 1 }),
            '=' => single(Tok::Cmp(Cmp::Eq), if next == Some('=') { 2 } else { 1 }),
            '>' if next == Some('=') => single(Tok::Cmp(Cmp::Ge), 2),
            '<' if next == Some('=') => single(Tok::Cmp(Cmp::Le), 2),
            '>' => single(Tok::Cmp(Cmp::Gt), 1),
            '<' => single(Tok::Cmp(Cmp::Lt), 1),
            c if c.is_ascii_digit() || (c == '.' && next.is_some_and(|n| n.is_ascii_digit())) => {
                let start = i;
                let mut j = i;
                let mut seen_exp = false;
                while j < bytes.len() {
                    let ch = bytes[j].1;
                    if ch.is_ascii_digit() || ch == '.' {
                        j += 1;
                    } else if (ch == 'e' || ch == 'E') && !seen_exp {
                        // exponent only when followed by digits (optionally signed)
                        let a = bytes.get(j + 1).map(|b| b.1);
                        let b = bytes.get(j + 2).map(|b| b.1);
                        let ok = a.is_some_and(|a| a.is_ascii_digit())
                            || (matches!(a, Some('+') | Some('-'))
                                && b.is_some_and(|b| b.is_ascii_digit()));
                        if !ok {
                            break;
                        }
                        seen_exp = true;
                        j += if a.is_some_and(|a| a.is_ascii_digit()) { 1 } else { 2 };
                    } else {
                        break;
                    }
                }
                let end = bytes.get(j).map_or(src.len(), |b| b.0);
                let text = &src[bytes[start].0..end];
                let v: f64 = text
                    .parse()
                    .map_err(|_| err(pos, format!("invalid number `{text}`")))?;
                out.push((Tok::Num(v), pos));
                i = j;
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < bytes.len() {
                    let ch = bytes[j].1;
                    if ch.is_alphanumeric() || ch == '_' || ch == '.' {
                        j += 1;
                    } else {
                        break;
                    }
                }
                let end = bytes.get(j).map_or(src.len(), |b| b.0);
                out.push((Tok::Ident(src[pos..end].to_string()), pos));
                i = j;
            }
            other => return Err(err(pos, format!("unexpected character `{other}`"))),
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, FormulaError> {
        Err(FormulaError::Syntax {
            pos: self.offset(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), FormulaError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn formula(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        if *self.peek() == Tok::Bang {
            self.bump();
            return Ok(Formula::not(self.unary()?));
        }
        self.primary()
    }

    fn is_temporal_keyword(&self) -> Option<char> {
        match self.peek() {
            Tok::Ident(s) if matches!(s.as_str(), "F" | "G" | "U") => {
                if matches!(self.peek_at(1), Tok::LParen | Tok::LBrack) {
                    s.chars().next()
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    fn primary(&mut self) -> Result<Formula, FormulaError> {
        if let Some(op) = self.is_temporal_keyword() {
            self.bump();
            let interval = self.maybe_interval()?;
            self.expect(Tok::LParen, "`(`")?;
            let first = self.formula()?;
            let f = match op {
                'F' => Formula::Eventually(interval, Box::new(first)),
                'G' => Formula::Always(interval, Box::new(first)),
                _ => {
                    self.expect(Tok::Comma, "`,` between the operands of U")?;
                    let second = self.formula()?;
                    Formula::Until(interval, Box::new(first), Box::new(second))
                }
            };
            self.expect(Tok::RParen, "`)`")?;
            return Ok(f);
        }
        match self.peek() {
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Ident(_) | Tok::Num(_) | Tok::Minus => self.atom(),
            other => {
                let d = describe(other);
                self.error(format!("expected a formula, found {d}"))
            }
        }
    }

    // An interval follows when the next tokens look like `[` or `(` bound `,`.
    fn maybe_interval(&mut self) -> Result<Interval, FormulaError> {
        let opener = self.peek().clone();
        let looks_like_interval = match opener {
            Tok::LBrack => true,
            Tok::LParen => {
                matches!(self.peek_at(1), Tok::Num(_) | Tok::Ident(_))
                    && *self.peek_at(2) == Tok::Comma
            }
            _ => false,
        };
        if !looks_like_interval {
            return Ok(Interval::unbounded());
        }
        let start = self.offset();
        self.bump();
        let lo = self.bound()?;
        self.expect(Tok::Comma, "`,` in interval")?;
        let hi = self.bound()?;
        let hi_open = match self.bump() {
            Tok::RBrack => false,
            Tok::RParen => true,
            other => {
                self.pos -= 1;
                return self.error(format!("expected `]` or `)`, found {}", describe(&other)));
            }
        };
        let interval = Interval {
            lo,
            hi,
            lo_open: opener == Tok::LParen,
            hi_open,
        };
        interval.check_constant().map_err(|e| match e {
            FormulaError::ReversedInterval { .. } | FormulaError::EmptyInterval(_) => {
                FormulaError::Syntax {
                    pos: start,
                    msg: e.to_string(),
                }
            }
            other => other,
        })?;
        Ok(interval)
    }

    fn bound(&mut self) -> Result<TimeBound, FormulaError> {
        match self.bump() {
            Tok::Num(v) => Ok(TimeBound::Const(v)),
            Tok::Ident(s) if s == "inf" => Ok(TimeBound::Const(f64::INFINITY)),
            Tok::Ident(s) => Ok(TimeBound::Param(s)),
            other => {
                self.pos -= 1;
                self.error(format!("expected a time bound, found {}", describe(&other)))
            }
        }
    }

    fn atom(&mut self) -> Result<Formula, FormulaError> {
        let expr = self.expr()?;
        let cmp = match self.bump() {
            Tok::Cmp(c) => c,
            other => {
                self.pos -= 1;
                return self.error(format!(
                    "expected a comparison after `{expr}`, found {}",
                    describe(&other)
                ));
            }
        };
        let negated = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let rhs = match self.bump() {
            Tok::Num(v) => Operand::Const(if negated { -v } else { v }),
            Tok::Ident(p) if negated => Operand::NegParam(p),
            Tok::Ident(p) => Operand::Param(p),
            other => {
                self.pos -= 1;
                return self.error(format!(
                    "expected a number or parameter, found {}",
                    describe(&other)
                ));
            }
        };
        Ok(Formula::Atom(Atom { expr, cmp, rhs }))
    }

    fn expr(&mut self) -> Result<LinearExpr, FormulaError> {
        let mut e = LinearExpr::default();
        let mut sign = 1.0;
        if *self.peek() == Tok::Minus {
            self.bump();
            sign = -1.0;
        }
        loop {
            match self.bump() {
                Tok::Num(v) => {
                    if *self.peek() == Tok::Star {
                        self.bump();
                        match self.bump() {
                            Tok::Ident(name) => e.terms.push((sign * v, name)),
                            other => {
                                self.pos -= 1;
                                return self.error(format!(
                                    "expected a channel after `*`, found {}",
                                    describe(&other)
                                ));
                            }
                        }
                    } else {
                        e.constant += sign * v;
                    }
                }
                Tok::Ident(name) => e.terms.push((sign, name)),
                other => {
                    self.pos -= 1;
                    return self.error(format!(
                        "expected a channel or number, found {}",
                        describe(&other)
                    ));
                }
            }
            match self.peek() {
                Tok::Plus => sign = 1.0,
                Tok::Minus => sign = -1.0,
                _ => return Ok(e),
            }
            self.bump();
        }
    }
}

/// Parses formula text. Parameter references are allowed; see
/// [`Formula::parse_ground`] to forbid them.
pub fn parse_formula(text: &str) -> Result<Formula, FormulaError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let f = p.formula()?;
    if *p.peek() != Tok::End {
        return p.error(format!("unexpected {} after formula", describe(p.peek())));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overshoot_template_shape() {
        let f = parse_formula("F(lane_change > 0.5 & F[0, tau](x - x_ref > a))").unwrap();
        let Formula::Eventually(outer, body) = f else {
            panic!("expected F")
        };
        assert_eq!(outer, Interval::unbounded());
        let Formula::And(lc, inner) = *body else {
            panic!("expected &")
        };
        assert_eq!(
            *lc,
            Formula::Atom(Atom {
                expr: LinearExpr::channel("lane_change"),
                cmp: Cmp::Gt,
                rhs: Operand::Const(0.5)
            })
        );
        let Formula::Eventually(i, atom) = *inner else {
            panic!("expected inner F")
        };
        assert_eq!(i.lo, TimeBound::Const(0.0));
        assert_eq!(i.hi, TimeBound::Param("tau".into()));
        assert_eq!(
            *atom,
            Formula::Atom(Atom {
                expr: LinearExpr {
                    terms: vec![(1.0, "x".into()), (-1.0, "x_ref".into())],
                    constant: 0.0
                },
                cmp: Cmp::Gt,
                rhs: Operand::Param("a".into())
            })
        );
    }

    #[test]
    fn reversed_bounds_rejected() {
        let err = parse_formula("F[3,1](x > 0)").unwrap_err();
        assert!(err.to_string().contains("reversed interval bounds"), "{err}");
        assert!(parse_formula("F(1,1](x > 0)").is_err());
        assert!(parse_formula("F[1,1](x > 0)").is_ok());
    }

    #[test]
    fn precedence_not_and_or() {
        let f = parse_formula("!a > 0 & b > 0 | c > 0").unwrap();
        let Formula::Or(l, _) = f else { panic!() };
        let Formula::And(n, _) = *l else { panic!() };
        assert!(matches!(*n, Formula::Not(_)));
    }

    #[test]
    fn open_left_interval_and_until() {
        let f = parse_formula("U(0,tau](x = 3, !(x = 3))").unwrap();
        let Formula::Until(i, _, _) = f else { panic!() };
        assert!(i.lo_open && !i.hi_open);
        let g = parse_formula("F(0, 2)(x > 1)").unwrap();
        let Formula::Eventually(i, _) = g else { panic!() };
        assert!(i.lo_open && i.hi_open);
    }

    #[test]
    fn numbers_and_scaled_terms() {
        let f = parse_formula("2.5e-1*x - y + 3 >= -1.5").unwrap();
        let Formula::Atom(a) = f else { panic!() };
        assert_eq!(a.expr.terms, vec![(0.25, "x".into()), (-1.0, "y".into())]);
        assert_eq!(a.expr.constant, 3.0);
        assert_eq!(a.rhs, Operand::Const(-1.5));
    }

    #[test]
    fn dotted_channel_names() {
        let f = parse_formula("G[0,tau](pos.y < y_min | pos.x > x_max)").unwrap();
        let ch: Vec<_> = f.channels().into_iter().collect();
        assert_eq!(ch, vec!["pos.x", "pos.y"]);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_formula("F[0,1](x >)") {
            Err(FormulaError::Syntax { pos, .. }) => assert_eq!(pos, 10),
            other => panic!("{other:?}"),
        }
        assert!(parse_formula("x > 0 &").is_err());
        assert!(parse_formula("x > 0)").is_err());
        assert!(parse_formula("U[0,1](x > 0)").is_err());
        assert!(parse_formula("x $ 0").is_err());
    }

    #[test]
    fn ground_parse_rejects_params() {
        assert!(Formula::parse_ground("G[0,5](x > 0)").is_ok());
        assert!(matches!(
            Formula::parse_ground("G[0,5](x > c)"),
            Err(FormulaError::NotGround(_))
        ));
    }

    #[test]
    fn unicode_operators() {
        let a = parse_formula("¬(x ≥ 1) ∧ y ≤ 2 ∨ true").unwrap();
        let b = parse_formula("!(x >= 1) & y <= 2 | true").unwrap();
        assert_eq!(a, b);
    }
}
