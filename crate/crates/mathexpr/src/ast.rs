use std::fmt;

use num_bigint::BigInt;

use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

/// Integer exponent of a power, possibly itself a right-associated power
/// chain: `2^3^2` stores `3^2` here.
///
/// Only the outermost exponent may be negative; inner links are
/// non-negative by construction of the grammar.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Exponent {
    pub base: BigInt,
    pub power: Option<Box<Exponent>>,
}

impl Exponent {
    pub fn literal(value: impl Into<BigInt>) -> Self {
        Self {
            base: value.into(),
            power: None,
        }
    }

    fn links(&self) -> usize {
        self.power.as_ref().map_or(0, |p| 1 + p.links())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Number(Rational),
    Neg(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Pow {
        base: Box<Expr>,
        exponent: Exponent,
    },
    Group(Box<Expr>),
}

impl Expr {
    pub fn number(value: impl Into<Rational>) -> Self {
        Expr::Number(value.into())
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    /// Number of operator nodes: unary negations, binary operators and every
    /// `^` (including each link of a power chain). Grouping is not an
    /// operator.
    pub fn operator_count(&self) -> usize {
        match self {
            Expr::Number(_) => 0,
            Expr::Neg(inner) | Expr::Group(inner) => {
                usize::from(matches!(self, Expr::Neg(_))) + inner.operator_count()
            }
            Expr::Binary { lhs, rhs, .. } => 1 + lhs.operator_count() + rhs.operator_count(),
            Expr::Pow { base, exponent } => 1 + exponent.links() + base.operator_count(),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base)?;
        if let Some(power) = &self.power {
            write!(f, "^{power}")?;
        }
        Ok(())
    }
}

/// Canonical printing. Parentheses are emitted only for `Group` nodes, so a
/// tree produced by the parser prints to text that parses back to the same
/// tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(value) => match value.to_decimal_string() {
                Some(text) if !value.is_negative() => f.write_str(&text),
                _ => write!(f, "({value})"),
            },
            Expr::Neg(inner) => write!(f, "-{inner}"),
            Expr::Binary { op, lhs, rhs } => write!(f, "{lhs} {} {rhs}", op.symbol()),
            Expr::Pow { base, exponent } => write!(f, "{base}^{exponent}"),
            Expr::Group(inner) => write!(f, "({inner})"),
        }
    }
}
