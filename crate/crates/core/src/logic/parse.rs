use super::{Arity, Expr, Formula};
use crate::error::{Error, Result};

const RESERVED: &[char] = &['(', ')', '[', ']', ',', '&', '!'];

pub fn parse_formula(text: &str, arity: Arity) -> Result<Formula> {
    let mut p = Parser { text, pos: 0 };
    let expr = p.formula()?;
    p.skip_ws();
    if p.pos < text.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(Formula { expr, arity })
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn rest(&self) -> &str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.text.len() - trimmed.len();
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{token}`")))
        }
    }

    fn name(&mut self, what: &str) -> Result<String> {
        self.skip_ws();
        let len = self
            .rest()
            .find(|c: char| c.is_whitespace() || RESERVED.contains(&c))
            .unwrap_or(self.rest().len());
        if len == 0 {
            return Err(self.error(&format!("expected {what}")));
        }
        let name = self.rest()[..len].to_string();
        self.pos += len;
        Ok(name)
    }

    fn formula(&mut self) -> Result<Expr> {
        self.skip_ws();
        if self.eat("!") {
            return Ok(Expr::not(self.formula()?));
        }
        if self.eat("(") {
            let a = self.formula()?;
            self.expect("&")?;
            let b = self.formula()?;
            self.expect(")")?;
            return Ok(Expr::and(a, b));
        }
        if self.eat("DIA[") {
            let relation = self.name("a relation name")?;
            self.expect(",")?;
            self.skip_ws();
            let start = self.pos;
            let digits = self.rest().find(|c: char| !c.is_ascii_digit()).unwrap_or(self.rest().len());
            let count: u32 = self.rest()[..digits]
                .parse()
                .map_err(|_| self.error("expected a count"))?;
            if count == 0 {
                self.pos = start;
                return Err(self.error("counting quantifier needs N ≥ 1"));
            }
            self.pos += digits;
            self.expect("]")?;
            self.expect("(")?;
            let body = self.formula()?;
            self.expect(")")?;
            return Ok(Expr::Exists {
                count,
                relation,
                body: Box::new(body),
            });
        }
        if self.eat("A:") {
            return Ok(Expr::Atom(self.name("a color label")?));
        }
        Err(self.error("expected a formula"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Expr> {
        parse_formula(s, Arity::Binary).map(|f| f.expr)
    }

    #[test]
    fn grammar_examples() {
        assert_eq!(parse("A:eq").unwrap(), Expr::atom("eq"));
        assert_eq!(parse("DIA[r,2](A:eq)").unwrap(), Expr::exists(2, "r", Expr::atom("eq")));
        assert_eq!(
            parse("(A:eq & !A:eq)").unwrap(),
            Expr::and(Expr::atom("eq"), Expr::not(Expr::atom("eq")))
        );
        assert_eq!(
            parse("  DIA[ r1 , 10 ] ( ! A:x ) ").unwrap(),
            Expr::exists(10, "r1", Expr::not(Expr::atom("x")))
        );
    }

    #[test]
    fn errors_carry_offsets() {
        match parse("DIA[r,0](A:eq)") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("{other:?}"),
        }
        match parse("(A:a | A:b)") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("{other:?}"),
        }
        assert!(parse("A:a extra").is_err());
        assert!(parse("A:").is_err());
        assert!(parse("").is_err());
    }
}
