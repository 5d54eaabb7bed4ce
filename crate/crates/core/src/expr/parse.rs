use super::{BinOp, Constant, Expr, Func};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i];
        let start = i;
        let tok = match ch {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let v: f64 = lit.parse().map_err(|_| Error::Syntax {
                    pos: start,
                    msg: format!("malformed number `{lit}`"),
                })?;
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let c = text[i..].chars().next().unwrap_or('?');
                return Err(Error::Syntax {
                    pos: i,
                    msg: format!("unexpected character `{c}`"),
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    Ok(out)
}

pub(super) struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    allowed: Option<&'a [&'a str]>,
}

impl<'a> Parser<'a> {
    pub(super) fn new(text: &str, allowed: Option<&'a [&'a str]>) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::Syntax {
                pos: 0,
                msg: "empty expression".into(),
            });
        }
        Ok(Self {
            toks: tokenize(text)?,
            pos: 0,
            end: text.len(),
            allowed,
        })
    }

    pub(super) fn parse(mut self) -> Result<Expr> {
        let e = self.expr()?;
        if let Some((tok, at)) = self.toks.get(self.pos) {
            return Err(Error::Syntax {
                pos: *at,
                msg: format!("unexpected token {tok:?}"),
            });
        }
        Ok(e)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, p)| *p)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        let at = self.offset();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(Error::Syntax {
                pos: at,
                msg: format!("expected {want:?}, found {t:?}"),
            }),
            None => Err(Error::Syntax {
                pos: at,
                msg: format!("expected {want:?}, found end of input"),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let at = self.offset();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Num(v)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    let func = Func::from_name(&name).ok_or_else(|| Error::UnknownFunction {
                        name: name.clone(),
                        pos: at,
                    })?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                self.identifier(name, at)
            }
            Some(t) => Err(Error::Syntax {
                pos: at,
                msg: format!("unexpected token {t:?}"),
            }),
            None => Err(Error::Syntax {
                pos: at,
                msg: "unexpected end of input".into(),
            }),
        }
    }

    fn identifier(&self, name: String, at: usize) -> Result<Expr> {
        match name.as_str() {
            "x" => return Ok(Expr::Var),
            "pi" => return Ok(Expr::Const(Constant::Pi)),
            "e" => return Ok(Expr::Const(Constant::E)),
            _ => {}
        }
        if Func::from_name(&name).is_some() {
            return Err(Error::Syntax {
                pos: at,
                msg: format!("function `{name}` needs an argument"),
            });
        }
        match self.allowed {
            Some(allowed) if !allowed.contains(&name.as_str()) => {
                Err(Error::UnknownIdentifier { name, pos: at })
            }
            _ => Ok(Expr::Param(name)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syntax_error_reports_position() {
        let err = Expr::parse("1 + * 2").unwrap_err();
        assert_eq!(
            err,
            Error::Syntax {
                pos: 4,
                msg: "unexpected token Star".into()
            }
        );
        assert!(matches!(Expr::parse("(x"), Err(Error::Syntax { pos: 2, .. })));
        assert!(matches!(Expr::parse("x $ 1"), Err(Error::Syntax { pos: 2, .. })));
        assert!(matches!(Expr::parse("   "), Err(Error::Syntax { .. })));
        assert!(matches!(Expr::parse("x x"), Err(Error::Syntax { pos: 2, .. })));
    }

    #[test]
    fn unknown_function() {
        assert_eq!(
            Expr::parse("2*foo(x)").unwrap_err(),
            Error::UnknownFunction {
                name: "foo".into(),
                pos: 2
            }
        );
    }

    #[test]
    fn strict_mode_rejects_undeclared_identifiers() {
        assert_eq!(
            Expr::parse_with_params("c*x + d", &["c"]).unwrap_err(),
            Error::UnknownIdentifier {
                name: "d".into(),
                pos: 6
            }
        );
        assert!(Expr::parse_with_params("c*x + pi", &["c"]).is_ok());
    }

    #[test]
    fn function_name_without_call() {
        assert!(matches!(Expr::parse("exp + 1"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn number_forms() {
        assert_eq!(Expr::parse("1.5e3").unwrap(), Expr::Num(1500.0));
        assert_eq!(Expr::parse(".25").unwrap(), Expr::Num(0.25));
        assert_eq!(Expr::parse("2E-2").unwrap(), Expr::Num(0.02));
        assert!(matches!(Expr::parse("1.2.3"), Err(Error::Syntax { pos: 0, .. })));
    }
}
