//! Exact arithmetic over rationals: a small recursive-descent parser and an
//! evaluator that never rounds.
//!
//! ```
//! let expr = battle_mathexpr::parse("1/3 + 1/6").unwrap();
//! assert_eq!(battle_mathexpr::evaluate(&expr).unwrap().to_string(), "1/2");
//! assert_eq!(expr.operator_count(), 3);
//! ```

mod ast;
mod error;
mod eval;
mod parser;
mod rational;

pub use ast::{BinOp, Exponent, Expr};
pub use error::{Error, EvalError, ParseError};
pub use eval::{evaluate, Evaluator, Limits, DEFAULT_MAX_DIGITS, DEFAULT_MAX_EXPONENT};
pub use parser::{parse, MAX_DEPTH};
pub use rational::{ParseRationalError, Rational};

/// Parses and evaluates `text` with the default limits.
pub fn eval_str(text: &str) -> Result<Rational, Error> {
    let expr = parse(text)?;
    Ok(evaluate(&expr)?)
}

/// Free-function form of [`Expr::operator_count`].
pub fn operator_count(expr: &Expr) -> usize {
    expr.operator_count()
}
