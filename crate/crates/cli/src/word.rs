//! Text grammar for operator words.
//!
//! ```text
//! word   := [scalar '*'] factor*          (empty word or "1" is the identity)
//! factor := MATRIX | 'a*(' FN ')' | 'a(' FN ')' | 'W(' FN ')'
//!         | 'exp(' term ('+' term)* ')'
//! term   := [scalar '*'] MATRIX ('a*' | 'a') '(' FN ')'
//! scalar := real | '(' real ',' real ')'
//! ```
//!
//! `MATRIX` and `FN` are names declared in the `[matrices]` and
//! `[functions]` tables.

use std::collections::BTreeMap;

use corrbath::linalg::{CMatrix, C1};
use corrbath::states::{Factor, OperatorWord};
use corrbath::thermal::{Ladder, TestFunction};
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Star,
    Plus,
    Comma,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        match ch {
            c if c.is_whitespace() => i += 1,
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            ',' => {
                out.push(Tok::Comma);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            c if c.is_ascii_digit() || c == '-' || c == '.' => {
                let start = i;
                i += 1;
                while i < chars.len() {
                    let d = chars[i];
                    let exp_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let v = text.parse::<f64>().map_err(|_| format!("malformed number `{text}`"))?;
                out.push(Tok::Num(v));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

/// Named building blocks a word may refer to.
pub struct Symbols<'a> {
    pub matrices: &'a BTreeMap<String, CMatrix>,
    pub functions: &'a BTreeMap<String, TestFunction>,
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    sym: &'a Symbols<'a>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), String> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(format!("expected {want:?}, found {t:?}")),
            None => Err(format!("expected {want:?}, found end of word")),
        }
    }

    /// `real` or `(re, im)` followed by `*`, if present.
    fn scalar_prefix(&mut self) -> Result<Option<Complex64>, String> {
        match (self.peek(), self.peek_at(1), self.peek_at(2), self.peek_at(3)) {
            (Some(Tok::Num(v)), Some(Tok::Star), _, _) => {
                let v = *v;
                self.pos += 2;
                Ok(Some(Complex64::new(v, 0.0)))
            }
            (Some(Tok::LParen), Some(Tok::Num(_)), Some(Tok::Comma), Some(Tok::Num(_))) => {
                self.pos += 1;
                let re = self.number()?;
                self.expect(Tok::Comma)?;
                let im = self.number()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Star)?;
                Ok(Some(Complex64::new(re, im)))
            }
            _ => Ok(None),
        }
    }

    fn number(&mut self) -> Result<f64, String> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(v),
            other => Err(format!("expected a number, found {other:?}")),
        }
    }

    fn ident(&mut self) -> Result<String, String> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            other => Err(format!("expected a name, found {other:?}")),
        }
    }

    fn function_arg(&mut self) -> Result<TestFunction, String> {
        self.expect(Tok::LParen)?;
        let name = self.ident()?;
        self.expect(Tok::RParen)?;
        self.sym.functions.get(&name).cloned().ok_or_else(|| format!("unknown test function `{name}`"))
    }

    fn matrix(&self, name: &str) -> Result<CMatrix, String> {
        self.sym.matrices.get(name).cloned().ok_or_else(|| format!("unknown matrix `{name}`"))
    }

    /// `a*` or `a` directly followed by `(`.
    fn ladder(&mut self) -> Result<Option<Ladder>, String> {
        if let Some(Tok::Ident(s)) = self.peek() {
            if s == "a" {
                match self.peek_at(1) {
                    Some(Tok::Star) => {
                        self.pos += 2;
                        return Ok(Some(Ladder::Create));
                    }
                    Some(Tok::LParen) => {
                        self.pos += 1;
                        return Ok(Some(Ladder::Annihilate));
                    }
                    _ => return Err("`a` must be followed by `*(` or `(`".into()),
                }
            }
        }
        Ok(None)
    }

    fn exp_terms(&mut self) -> Result<Vec<(CMatrix, Ladder, TestFunction)>, String> {
        self.expect(Tok::LParen)?;
        let mut terms = Vec::new();
        loop {
            let coef = self.scalar_prefix()?.unwrap_or(C1);
            let name = self.ident()?;
            let b = self.matrix(&name)? * coef;
            let ladder = self.ladder()?.ok_or_else(|| format!("expected `a*(..)` or `a(..)` after `{name}` inside exp"))?;
            let f = self.function_arg()?;
            terms.push((b, ladder, f));
            match self.next() {
                Some(Tok::Plus) => continue,
                Some(Tok::RParen) => break,
                other => return Err(format!("expected `+` or `)` inside exp, found {other:?}")),
            }
        }
        Ok(terms)
    }

    fn word(&mut self) -> Result<OperatorWord, String> {
        let scalar = self.scalar_prefix()?.unwrap_or(C1);
        let mut factors = Vec::new();
        if self.toks.len() == 1 && self.toks[0] == Tok::Num(1.0) {
            self.pos = 1;
        }
        while self.peek().is_some() {
            if let Some(l) = self.ladder()? {
                let f = self.function_arg()?;
                factors.push(match l {
                    Ladder::Create => Factor::Create(f),
                    Ladder::Annihilate => Factor::Annihilate(f),
                });
                continue;
            }
            let name = self.ident()?;
            match (name.as_str(), self.peek()) {
                ("W", Some(Tok::LParen)) => factors.push(Factor::Weyl(self.function_arg()?)),
                ("exp", Some(Tok::LParen)) => {
                    factors.push(Factor::ExpLinear { prefactor: C1, terms: self.exp_terms()? });
                }
                _ => factors.push(Factor::System(self.matrix(&name)?)),
            }
        }
        Ok(OperatorWord { factors, scalar })
    }
}

/// Parses one word; the error message names the offending token.
pub fn parse_word(src: &str, sym: &Symbols) -> Result<OperatorWord, String> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0, sym };
    p.word()
}

#[cfg(test)]
mod tests {
    use super::*;
    use corrbath::linalg::C0;
    use corrbath::model::RadialProfile;
    use corrbath::thermal::FunctionClass;

    fn symbols() -> (BTreeMap<String, CMatrix>, BTreeMap<String, TestFunction>) {
        let mut m = BTreeMap::new();
        m.insert("sx".to_string(), CMatrix::from_row_slice(2, 2, &[C0, C1, C1, C0]));
        m.insert("B".to_string(), CMatrix::identity(2, 2));
        let mut f = BTreeMap::new();
        let tf = TestFunction::new(FunctionClass::Cor, 0.5, 2.5, RadialProfile::gaussian(1.0, 1.0)).unwrap();
        f.insert("f".to_string(), tf);
        (m, f)
    }

    #[test]
    fn parses_every_factor_kind() {
        let (m, f) = symbols();
        let sym = Symbols { matrices: &m, functions: &f };
        let w = parse_word("0.5* sx a*(f) a(f) W(f) exp(B a*(f) + (0,2)*sx a(f))", &sym).unwrap();
        assert_eq!(w.scalar, Complex64::new(0.5, 0.0));
        assert_eq!(w.factors.len(), 5);
        match &w.factors[4] {
            Factor::ExpLinear { terms, .. } => {
                assert_eq!(terms.len(), 2);
                assert_eq!(terms[1].1, Ladder::Annihilate);
                assert_eq!(terms[1].0[(0, 1)], Complex64::new(0.0, 2.0));
            }
            other => panic!("unexpected factor {other:?}"),
        }
    }

    #[test]
    fn identity_forms() {
        let (m, f) = symbols();
        let sym = Symbols { matrices: &m, functions: &f };
        assert!(parse_word("", &sym).unwrap().factors.is_empty());
        assert!(parse_word("1", &sym).unwrap().factors.is_empty());
    }

    #[test]
    fn unknown_names_are_reported() {
        let (m, f) = symbols();
        let sym = Symbols { matrices: &m, functions: &f };
        assert!(parse_word("sy", &sym).unwrap_err().contains("unknown matrix `sy`"));
        assert!(parse_word("a*(g)", &sym).unwrap_err().contains("unknown test function `g`"));
        assert!(parse_word("exp(B)", &sym).is_err());
        assert!(parse_word("a sx", &sym).is_err());
    }
}
