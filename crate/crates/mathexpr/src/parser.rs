//! Recursive-descent parser.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := factor (('*' | '/') factor)*
//! factor   := base ('^' exponent)?
//! base     := number | '(' expr ')' | '-' base
//! exponent := '-' integer | chain
//! chain    := integer ('^' chain)?
//! number   := digits ('.' digits)?
//! ```
//!
//! Precedence, tightest first: unary minus, `^` (right-associative),
//! `*` `/` (left), `+` `-` (left). `-2^2` is therefore `(-2)^2 = 4`.
//! `×`, `·`, `÷` and `−` are accepted as aliases.

use num_bigint::BigInt;

use crate::ast::{BinOp, Exponent, Expr};
use crate::error::ParseError;
use crate::Rational;

/// Maximum parenthesis / unary nesting depth.
pub const MAX_DEPTH: usize = 256;

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Ident(String),
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Number(n) => format!("number {n}"),
            Token::Plus => "'+'".into(),
            Token::Minus => "'-'".into(),
            Token::Star => "'*'".into(),
            Token::Slash => "'/'".into(),
            Token::Caret => "'^'".into(),
            Token::LParen => "'('".into(),
            Token::RParen => "')'".into(),
            Token::Ident(name) => format!("identifier {name}"),
            Token::End => "end of input".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(offset, c)) = chars.peek() {
        let single = match c {
            c if c.is_whitespace() => {
                chars.next();
                continue;
            }
            '+' => Some(Token::Plus),
            '-' | '−' => Some(Token::Minus),
            '*' | '×' | '·' => Some(Token::Star),
            '/' | '÷' => Some(Token::Slash),
            '^' => Some(Token::Caret),
            '(' => Some(Token::LParen),
            ')' => Some(Token::RParen),
            _ => None,
        };
        if let Some(token) = single {
            chars.next();
            tokens.push((offset, token));
            continue;
        }
        if c.is_ascii_digit() {
            let mut literal = String::new();
            while let Some(&(_, d)) = chars.peek() {
                if d.is_ascii_digit() {
                    literal.push(d);
                    chars.next();
                } else {
                    break;
                }
            }
            if let Some(&(dot_offset, '.')) = chars.peek() {
                chars.next();
                literal.push('.');
                let before = literal.len();
                while let Some(&(_, d)) = chars.peek() {
                    if d.is_ascii_digit() {
                        literal.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
                if literal.len() == before {
                    return Err(ParseError::Syntax {
                        offset: dot_offset,
                        message: "expected digits after decimal point".into(),
                    });
                }
            }
            tokens.push((offset, Token::Number(literal)));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut name = String::new();
            while let Some(&(_, d)) = chars.peek() {
                if d.is_alphanumeric() || d == '_' {
                    name.push(d);
                    chars.next();
                } else {
                    break;
                }
            }
            tokens.push((offset, Token::Ident(name)));
            continue;
        }
        return Err(ParseError::Syntax {
            offset,
            message: format!("unexpected character {c:?}"),
        });
    }
    tokens.push((text.len(), Token::End));
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].1
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].0
    }

    fn bump(&mut self) -> Token {
        let token = self.tokens[self.pos].1.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        token
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        if let Token::Ident(name) = self.peek() {
            return self.unsupported(name.clone());
        }
        ParseError::Syntax {
            offset: self.offset(),
            message: format!("expected {expected}, found {}", self.peek().describe()),
        }
    }

    fn unsupported(&self, name: String) -> ParseError {
        let is_call = matches!(self.tokens.get(self.pos + 1), Some((_, Token::LParen)));
        ParseError::Unsupported {
            offset: self.offset(),
            construct: if is_call {
                format!("function {name}(...)")
            } else {
                format!("variable {name}")
            },
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError::Syntax {
                offset: self.offset(),
                message: format!("nesting deeper than {MAX_DEPTH}"),
            });
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Token::Plus => BinOp::Add,
                Token::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Token::Star => BinOp::Mul,
                Token::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if *self.peek() != Token::Caret {
            return Ok(base);
        }
        self.bump();
        let exponent = if *self.peek() == Token::Minus {
            self.bump();
            let value = self.integer()?;
            Exponent::literal(-value)
        } else {
            self.chain()?
        };
        Ok(Expr::Pow {
            base: Box::new(base),
            exponent,
        })
    }

    fn chain(&mut self) -> Result<Exponent, ParseError> {
        self.enter()?;
        let base = self.integer()?;
        let power = if *self.peek() == Token::Caret {
            self.bump();
            Some(Box::new(self.chain()?))
        } else {
            None
        };
        self.depth -= 1;
        Ok(Exponent { base, power })
    }

    fn integer(&mut self) -> Result<BigInt, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Token::Number(text) if !text.contains('.') => {
                self.bump();
                Ok(text.parse().expect("digit-only literal"))
            }
            Token::Number(_) => Err(ParseError::Syntax {
                offset,
                message: "exponent must be an integer".into(),
            }),
            _ => Err(self.unexpected("integer exponent")),
        }
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Token::Number(text) => {
                self.bump();
                let value = Rational::from_decimal_str(&text).ok_or(ParseError::Syntax {
                    offset,
                    message: format!("malformed number {text}"),
                })?;
                Ok(Expr::Number(value))
            }
            Token::LParen => {
                self.enter()?;
                self.bump();
                let inner = self.expr()?;
                if *self.peek() != Token::RParen {
                    return Err(self.unexpected("')'"));
                }
                self.bump();
                self.depth -= 1;
                Ok(Expr::Group(Box::new(inner)))
            }
            Token::Minus => {
                self.enter()?;
                self.bump();
                let inner = self.base()?;
                self.depth -= 1;
                Ok(Expr::Neg(Box::new(inner)))
            }
            _ => Err(self.unexpected("number, '(' or '-'")),
        }
    }
}

/// Parses an arithmetic expression over exact rationals.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        depth: 0,
    };
    let expr = parser.expr()?;
    if *parser.peek() != Token::End {
        return Err(parser.unexpected("operator or end of input"));
    }
    Ok(expr)
}
