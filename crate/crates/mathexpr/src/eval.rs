use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};

use crate::ast::{BinOp, Exponent, Expr};
use crate::error::EvalError;
use crate::rational::digits_for_bits;
use crate::Rational;

pub const DEFAULT_MAX_EXPONENT: u32 = 64;
pub const DEFAULT_MAX_DIGITS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Largest permitted `|exponent|`.
    pub max_exponent: u32,
    /// Largest permitted decimal digit count of any numerator or denominator.
    pub max_digits: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_exponent: DEFAULT_MAX_EXPONENT,
            max_digits: DEFAULT_MAX_DIGITS,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Evaluator {
    limits: Limits,
}

impl Evaluator {
    pub fn new(limits: Limits) -> Self {
        Self { limits }
    }

    pub fn limits(&self) -> Limits {
        self.limits
    }

    pub fn evaluate(&self, expr: &Expr) -> Result<Rational, EvalError> {
        let value = match expr {
            Expr::Number(value) => value.clone(),
            Expr::Group(inner) => return self.evaluate(inner),
            Expr::Neg(inner) => -self.evaluate(inner)?,
            Expr::Binary { op, lhs, rhs } => {
                let lhs = self.evaluate(lhs)?;
                let rhs = self.evaluate(rhs)?;
                match op {
                    BinOp::Add => lhs + rhs,
                    BinOp::Sub => lhs - rhs,
                    BinOp::Mul => lhs * rhs,
                    BinOp::Div => lhs.checked_div(&rhs).ok_or(EvalError::DivisionByZero)?,
                }
            }
            Expr::Pow { base, exponent } => {
                let base = self.evaluate(base)?;
                let exponent = self.exponent(exponent)?;
                self.power(&base, exponent)?
            }
        };
        self.check_magnitude(&value)?;
        Ok(value)
    }

    fn check_magnitude(&self, value: &Rational) -> Result<(), EvalError> {
        if value.digit_estimate() > self.limits.max_digits {
            return Err(EvalError::MagnitudeOverflow {
                limit_digits: self.limits.max_digits,
            });
        }
        Ok(())
    }

    fn overflow(&self, exponent: impl ToString) -> EvalError {
        EvalError::ExponentOverflow {
            exponent: exponent.to_string(),
            limit: self.limits.max_exponent,
        }
    }

    /// Reduces an exponent chain to a bounded machine integer.
    fn exponent(&self, exponent: &Exponent) -> Result<i32, EvalError> {
        let limit = BigInt::from(self.limits.max_exponent);
        let value = match &exponent.power {
            None => exponent.base.clone(),
            Some(power) => {
                let power = self.exponent(power)?;
                // Inner chain links are non-negative by grammar.
                let power = u32::try_from(power).map_err(|_| self.overflow(power))?;
                let base = &exponent.base;
                if base.abs() <= BigInt::one() || power == 0 {
                    num_traits::Pow::pow(base, power)
                } else if (base.abs().bits() - 1) * power as u64 > limit.bits() {
                    return Err(self.overflow(format!("{base}^{power}")));
                } else {
                    num_traits::Pow::pow(base, power)
                }
            }
        };
        if value.abs() > limit {
            return Err(self.overflow(value));
        }
        Ok(value.to_i32().expect("bounded exponent fits i32"))
    }

    fn power(&self, base: &Rational, exponent: i32) -> Result<Rational, EvalError> {
        if base.is_zero() && exponent < 0 {
            return Err(EvalError::DivisionByZero);
        }
        let bits = base.numer().bits().max(base.denom().bits()) as u64;
        let projected = digits_for_bits(bits.saturating_mul(exponent.unsigned_abs() as u64));
        if projected > self.limits.max_digits.saturating_add(1) && !is_unit(base) {
            return Err(EvalError::MagnitudeOverflow {
                limit_digits: self.limits.max_digits,
            });
        }
        Ok(base.pow(exponent).expect("zero base with negative exponent handled"))
    }
}

fn is_unit(value: &Rational) -> bool {
    value.is_zero() || (value.denom().is_one() && value.numer().abs().is_one())
}

/// Evaluates with the default limits.
pub fn evaluate(expr: &Expr) -> Result<Rational, EvalError> {
    Evaluator::default().evaluate(expr)
}
