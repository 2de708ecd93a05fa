//! Recursive-descent parser for the query syntax.
//!
//! ```text
//! query   := formula | "filter" "(" "state" "," formula "," atom ")"
//! formula := or
//! or      := and ("|" and)*
//! and     := unary ("&" unary)*
//! unary   := "!" unary | primary
//! primary := "true" | "false" | atom | "P" bound "[" path "]" | "(" formula ")"
//! bound   := "=?" | ("<" | "<=" | ">" | ">=") probability
//! path    := "X" formula | "F" ["<=" int] formula | formula "U" ["<=" int] formula
//! atom    := '"' chars '"'
//! ```

use std::fmt;

use thiserror::Error;

use super::{Comparison, PathFormula, ProbBound, Query, StateFormula};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {}, found {found}", .expected.join(" or "))]
    Syntax {
        offset: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("probability {value} at byte {offset} is outside [0,1]")]
    ProbabilityRange { offset: usize, value: f64 },
    #[error("step bound {value} at byte {offset} must be a non-negative integer")]
    BadStepBound { offset: usize, value: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Bang,
    Amp,
    Pipe,
    Lt,
    Le,
    Gt,
    Ge,
    EqQuery,
    Str(String),
    Num(String),
    Word(String),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Bang => f.write_str("`!`"),
            Tok::Amp => f.write_str("`&`"),
            Tok::Pipe => f.write_str("`|`"),
            Tok::Lt => f.write_str("`<`"),
            Tok::Le => f.write_str("`<=`"),
            Tok::Gt => f.write_str("`>`"),
            Tok::Ge => f.write_str("`>=`"),
            Tok::EqQuery => f.write_str("`=?`"),
            Tok::Str(s) => write!(f, "\"{s}\""),
            Tok::Num(n) => write!(f, "`{n}`"),
            Tok::Word(w) => write!(f, "`{w}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn syntax(offset: usize, expected: &[&str], found: impl fmt::Display) -> ParseError {
    ParseError::Syntax {
        offset,
        expected: expected.iter().map(|s| s.to_string()).collect(),
        found: found.to_string(),
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'[' => Tok::LBracket,
            b']' => Tok::RBracket,
            b',' => Tok::Comma,
            b'!' => Tok::Bang,
            b'&' => Tok::Amp,
            b'|' => Tok::Pipe,
            b'<' | b'>' => {
                let eq = bytes.get(i + 1) == Some(&b'=');
                if eq {
                    i += 1;
                }
                match (c, eq) {
                    (b'<', false) => Tok::Lt,
                    (b'<', true) => Tok::Le,
                    (_, false) => Tok::Gt,
                    (_, true) => Tok::Ge,
                }
            }
            b'=' => {
                if bytes.get(i + 1) == Some(&b'?') {
                    i += 1;
                    Tok::EqQuery
                } else {
                    return Err(syntax(i, &["`=?`"], "`=`"));
                }
            }
            b'"' => {
                let body_start = i + 1;
                let Some(len) = src[body_start..].find('"') else {
                    return Err(syntax(src.len(), &["closing `\"`"], Tok::Eof));
                };
                if len == 0 {
                    return Err(syntax(body_start, &["non-empty atom label"], "`\"\"`"));
                }
                i = body_start + len;
                Tok::Str(src[body_start..i].to_string())
            }
            b'0'..=b'9' | b'.' | b'-' => {
                let mut j = i + 1;
                while j < bytes.len() {
                    let d = bytes[j];
                    let exp_sign = matches!(d, b'+' | b'-') && matches!(bytes[j - 1], b'e' | b'E');
                    if d.is_ascii_digit() || d == b'.' || d == b'e' || d == b'E' || exp_sign {
                        j += 1;
                    } else {
                        break;
                    }
                }
                i = j - 1;
                Tok::Num(src[start..j].to_string())
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut j = i + 1;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                i = j - 1;
                Tok::Word(src[start..j].to_string())
            }
            _ => {
                let ch = src[i..].chars().next().expect("in bounds");
                return Err(syntax(i, &["a token"], format!("`{ch}`")));
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((src.len(), Tok::Eof));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

const FORMULA_START: &[&str] = &["`true`", "`false`", "atom", "`!`", "`P`", "`(`"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Word(x) if x == w)
    }

    fn expect(&mut self, tok: Tok, name: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.offset(), &[name], self.peek()))
        }
    }

    fn query(&mut self) -> Result<Query, ParseError> {
        let query = if self.is_word("filter") {
            self.bump();
            self.expect(Tok::LParen, "`(`")?;
            if !self.is_word("state") {
                return Err(syntax(self.offset(), &["`state`"], self.peek()));
            }
            self.bump();
            self.expect(Tok::Comma, "`,`")?;
            let formula = self.formula()?;
            self.expect(Tok::Comma, "`,`")?;
            let state = match self.peek().clone() {
                Tok::Str(s) => {
                    self.bump();
                    s
                }
                other => return Err(syntax(self.offset(), &["quoted state"], other)),
            };
            self.expect(Tok::RParen, "`)`")?;
            Query::filtered(formula, state)
        } else {
            Query::new(self.formula()?)
        };
        if *self.peek() != Tok::Eof {
            return Err(syntax(self.offset(), &["end of input"], self.peek()));
        }
        Ok(query)
    }

    fn formula(&mut self) -> Result<StateFormula, ParseError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = StateFormula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<StateFormula, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.unary()?;
            lhs = StateFormula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<StateFormula, ParseError> {
        if *self.peek() == Tok::Bang {
            self.bump();
            return Ok(StateFormula::not(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<StateFormula, ParseError> {
        let offset = self.offset();
        match self.bump() {
            Tok::Word(w) if w == "true" => Ok(StateFormula::True),
            Tok::Word(w) if w == "false" => Ok(StateFormula::False),
            Tok::Word(w) if w == "P" => {
                let bound = self.bound()?;
                self.expect(Tok::LBracket, "`[`")?;
                let path = self.path()?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(StateFormula::prob(bound, path))
            }
            Tok::Str(s) => Ok(StateFormula::Atom(s)),
            Tok::LParen => {
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            other => Err(syntax(offset, FORMULA_START, other)),
        }
    }

    fn bound(&mut self) -> Result<ProbBound, ParseError> {
        let offset = self.offset();
        let op = match self.bump() {
            Tok::EqQuery => return Ok(ProbBound::Query),
            Tok::Lt => Comparison::Lt,
            Tok::Le => Comparison::Le,
            Tok::Gt => Comparison::Gt,
            Tok::Ge => Comparison::Ge,
            other => {
                return Err(syntax(
                    offset,
                    &["`=?`", "`<`", "`<=`", "`>`", "`>=`"],
                    other,
                ))
            }
        };
        let offset = self.offset();
        match self.bump() {
            Tok::Num(n) => {
                let value: f64 = n
                    .parse()
                    .map_err(|_| syntax(offset, &["probability"], format!("`{n}`")))?;
                if !(0.0..=1.0).contains(&value) {
                    return Err(ParseError::ProbabilityRange { offset, value });
                }
                Ok(ProbBound::Threshold(op, value))
            }
            other => Err(syntax(offset, &["probability"], other)),
        }
    }

    /// Optional `<= k` after `U` or `F`.
    fn step_bound(&mut self) -> Result<Option<u64>, ParseError> {
        if *self.peek() != Tok::Le {
            return Ok(None);
        }
        self.bump();
        let offset = self.offset();
        match self.bump() {
            Tok::Num(n) => n
                .parse::<u64>()
                .map(Some)
                .map_err(|_| ParseError::BadStepBound { offset, value: n }),
            other => Err(syntax(offset, &["step bound"], other)),
        }
    }

    fn path(&mut self) -> Result<PathFormula, ParseError> {
        if self.is_word("X") {
            self.bump();
            return Ok(PathFormula::next(self.formula()?));
        }
        if self.is_word("F") {
            self.bump();
            let k = self.step_bound()?;
            let g = self.formula()?;
            return Ok(match k {
                Some(k) => PathFormula::bounded_eventually(g, k),
                None => PathFormula::eventually(g),
            });
        }
        let lhs = self.formula()?;
        if !self.is_word("U") {
            return Err(syntax(self.offset(), &["`U`"], self.peek()));
        }
        self.bump();
        let k = self.step_bound()?;
        let rhs = self.formula()?;
        Ok(match k {
            Some(k) => PathFormula::bounded_until(lhs, rhs, k),
            None => PathFormula::until(lhs, rhs),
        })
    }
}

/// Parses a query. Whitespace is insignificant; `F`, `F<=k` and `|` are
/// desugared on the way in.
pub fn parse(text: &str) -> Result<Query, ParseError> {
    let toks = lex(text)?;
    Parser { toks, pos: 0 }.query()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pctl::format::format;
    use proptest::prelude::*;

    #[test]
    fn eventually_desugars_to_until() {
        let q = parse(r#"P=?[F "collision_static"]"#).unwrap();
        assert_eq!(
            q,
            Query::new(StateFormula::prob(
                ProbBound::Query,
                PathFormula::Until(
                    Box::new(StateFormula::True),
                    Box::new(StateFormula::atom("collision_static"))
                )
            ))
        );
        assert_eq!(q, parse(r#"P=?[true U "collision_static"]"#).unwrap());
    }

    #[test]
    fn filter_query() {
        let q = parse(r#"filter(state, P=?[F "fail"], "s3")"#).unwrap();
        assert_eq!(q.filter_state.as_deref(), Some("s3"));
        assert_eq!(
            q.formula,
            StateFormula::prob(
                ProbBound::Query,
                PathFormula::eventually(StateFormula::atom("fail"))
            )
        );
    }

    #[test]
    fn whitespace_is_insignificant() {
        let a = parse(r#"filter(state,P<=0.01[F<=10 "fail"],"NNNN")"#).unwrap();
        let b = parse("filter ( state ,\n\tP <= 0.01 [ F <= 10 \"fail\" ] , \"NNNN\" )").unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.formula,
            StateFormula::prob(
                ProbBound::Threshold(Comparison::Le, 0.01),
                PathFormula::bounded_eventually(StateFormula::atom("fail"), 10)
            )
        );
    }

    #[test]
    fn precedence() {
        let q = parse(r#"!"a" & "b" | "c""#).unwrap();
        let a = StateFormula::atom("a");
        let b = StateFormula::atom("b");
        let c = StateFormula::atom("c");
        assert_eq!(
            q.formula,
            StateFormula::or(StateFormula::and(StateFormula::not(a), b), c)
        );
        let disj = parse(r#""a" | "b""#).unwrap();
        assert_eq!(disj, parse(r#"!(!"a" & !"b")"#).unwrap());
    }

    #[test]
    fn range_and_bound_errors() {
        assert!(matches!(
            parse(r#"P<=1.5[X "a"]"#),
            Err(ParseError::ProbabilityRange { offset: 3, value }) if value == 1.5
        ));
        assert!(matches!(
            parse(r#"P>=-0.1[X "a"]"#),
            Err(ParseError::ProbabilityRange { .. })
        ));
        assert!(matches!(
            parse(r#"P=?[F<=-1 "a"]"#),
            Err(ParseError::BadStepBound { .. })
        ));
        assert!(matches!(
            parse(r#"P=?["a" U<=2.5 "b"]"#),
            Err(ParseError::BadStepBound { .. })
        ));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match parse(r#"P=?[F "a""#) {
            Err(ParseError::Syntax {
                offset, expected, ..
            }) => {
                assert_eq!(offset, 9);
                assert_eq!(expected, ["`]`"]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse(""),
            Err(ParseError::Syntax { offset: 0, .. })
        ));
        assert!(matches!(parse(r#""""#), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse(r#""a"#), Err(ParseError::Syntax { .. })));
        assert!(matches!(
            parse(r#"P=?["a" U "b" U "c"]"#),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse(r#"filter(states, "a", "b")"#),
            Err(ParseError::Syntax { offset: 7, .. })
        ));
        assert!(matches!(
            parse(r#"P=?[G "a"]"#),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse(r#""a" "b""#),
            Err(ParseError::Syntax { offset: 4, .. })
        ));
    }

    #[test]
    fn canonical_text_is_a_fixpoint() {
        for text in [
            r#"P=?[X "a"]"#,
            r#"P=?[F "fail"]"#,
            r#"filter(state, P<=0.01[F<=10 "fail"], "NNNN")"#,
            r#"!("a" | "b") & P>=1[X true]"#,
            r#"P>0.5["a" U<=3 "b" | false]"#,
        ] {
            let q = parse(text).unwrap();
            assert_eq!(format(&q), text);
        }
        assert_eq!(
            format(&parse(r#"P=?[true U "x"]"#).unwrap()),
            r#"P=?[F "x"]"#
        );
    }

    pub(crate) fn arb_state(depth: u32) -> BoxedStrategy<StateFormula> {
        let leaf = prop_oneof![
            Just(StateFormula::True),
            Just(StateFormula::False),
            "[A-Za-z0-9_:]{1,6}".prop_map(StateFormula::Atom),
        ];
        leaf.prop_recursive(depth, 24, 3, |inner| {
            let bound = prop_oneof![
                Just(ProbBound::Query),
                (
                    prop_oneof![
                        Just(Comparison::Lt),
                        Just(Comparison::Le),
                        Just(Comparison::Gt),
                        Just(Comparison::Ge)
                    ],
                    0.0f64..=1.0
                )
                    .prop_map(|(op, p)| ProbBound::Threshold(op, p)),
            ];
            let path = prop_oneof![
                inner.clone().prop_map(PathFormula::next),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| PathFormula::until(a, b)),
                (inner.clone(), inner.clone(), 0u64..50)
                    .prop_map(|(a, b, k)| PathFormula::bounded_until(a, b, k)),
            ];
            prop_oneof![
                inner.clone().prop_map(StateFormula::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| StateFormula::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| StateFormula::or(a, b)),
                (bound, path).prop_map(|(b, p)| StateFormula::prob(b, p)),
            ]
        })
        .boxed()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]
        #[test]
        fn parse_inverts_format(
            f in arb_state(4),
            filter in prop::option::of("[A-Z]{4}"),
        ) {
            let q = Query { formula: f, filter_state: filter };
            let text = format(&q);
            let back = parse(&text).unwrap();
            prop_assert_eq!(&back, &q);
            prop_assert_eq!(format(&back), text);
        }
    }
}
