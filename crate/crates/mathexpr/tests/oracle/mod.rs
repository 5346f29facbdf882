//! Independent reference for the expression evaluator.
//!
//! Expressions are generated as trees of this module's own type, printed to
//! text with the documented precedence table, and evaluated here with plain
//! unreduced `BigInt` fraction arithmetic. Nothing in this module goes through
//! the crate's parser, AST or rational type.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, RngCore};

/// Unreduced fraction; the denominator may be negative but is never zero.
#[derive(Debug, Clone)]
pub struct Frac {
    pub n: BigInt,
    pub d: BigInt,
}

impl Frac {
    fn int(v: i64) -> Self {
        Frac {
            n: BigInt::from(v),
            d: BigInt::one(),
        }
    }

    fn add(&self, o: &Frac) -> Frac {
        Frac {
            n: &self.n * &o.d + &o.n * &self.d,
            d: &self.d * &o.d,
        }
    }

    fn sub(&self, o: &Frac) -> Frac {
        Frac {
            n: &self.n * &o.d - &o.n * &self.d,
            d: &self.d * &o.d,
        }
    }

    fn mul(&self, o: &Frac) -> Frac {
        Frac {
            n: &self.n * &o.n,
            d: &self.d * &o.d,
        }
    }

    fn div(&self, o: &Frac) -> Option<Frac> {
        if o.n.is_zero() {
            return None;
        }
        Some(Frac {
            n: &self.n * &o.d,
            d: &self.d * &o.n,
        })
    }

    fn pow(&self, e: i64) -> Option<Frac> {
        let mut acc = Frac::int(1);
        for _ in 0..e.unsigned_abs() {
            acc = acc.mul(self);
        }
        if e < 0 {
            Frac::int(1).div(&acc)
        } else {
            Some(acc)
        }
    }

    /// Cross-multiplication equality against a reduced `numer/denom` pair.
    pub fn equals(&self, numer: &BigInt, denom: &BigInt) -> bool {
        &self.n * denom == numer * &self.d
    }
}

#[derive(Debug, Clone)]
pub enum Node {
    /// digits and number of fractional digits
    Lit { digits: u32, frac: u32 },
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    /// base, then exponent chain (first element may be negative)
    Pow(Box<Node>, Vec<i64>),
}

impl Node {
    pub fn operators(&self) -> usize {
        match self {
            Node::Lit { .. } => 0,
            Node::Neg(a) => 1 + a.operators(),
            Node::Bin(_, a, b) => 1 + a.operators() + b.operators(),
            Node::Pow(a, chain) => chain.len() + a.operators(),
        }
    }

    pub fn eval(&self) -> Option<Frac> {
        match self {
            Node::Lit { digits, frac } => Some(Frac {
                n: BigInt::from(*digits),
                d: BigInt::from(10u32).pow(*frac),
            }),
            Node::Neg(a) => {
                let v = a.eval()?;
                Some(Frac { n: -v.n, d: v.d })
            }
            Node::Bin(op, a, b) => {
                let (a, b) = (a.eval()?, b.eval()?);
                match op {
                    '+' => Some(a.add(&b)),
                    '-' => Some(a.sub(&b)),
                    '*' => Some(a.mul(&b)),
                    '/' => a.div(&b),
                    _ => unreachable!(),
                }
            }
            Node::Pow(a, chain) => {
                let base = a.eval()?;
                // right fold: e0^(e1^(...))
                let mut e = *chain.last().unwrap();
                for link in chain.iter().rev().skip(1) {
                    e = link.pow(u32::try_from(e).unwrap());
                }
                base.pow(e)
            }
        }
    }

    fn level(&self) -> u8 {
        match self {
            Node::Bin('+' | '-', ..) => 1,
            Node::Bin(..) => 2,
            Node::Pow(..) => 3,
            Node::Neg(_) => 4,
            Node::Lit { .. } => 5,
        }
    }

    /// Prints with the fewest parentheses the grammar needs, plus random
    /// redundant ones.
    pub fn print(&self, rng: &mut impl RngCore) -> String {
        match self {
            Node::Lit { digits, frac } => {
                if *frac == 0 {
                    digits.to_string()
                } else {
                    let width = *frac as usize + 1;
                    let s = format!("{digits:0>width$}");
                    let (i, f) = s.split_at(s.len() - *frac as usize);
                    format!("{i}.{f}")
                }
            }
            Node::Neg(a) => format!("-{}", child(a, 4, rng)),
            Node::Bin(op, a, b) => {
                let level = self.level();
                let space = if rng.random_bool(0.5) { " " } else { "" };
                format!("{}{space}{op}{space}{}", child(a, level, rng), child(b, level + 1, rng))
            }
            Node::Pow(a, chain) => {
                let exps: Vec<String> = chain.iter().map(|e| e.to_string()).collect();
                format!("{}^{}", child(a, 4, rng), exps.join("^"))
            }
        }
    }
}

fn child(node: &Node, min_level: u8, rng: &mut impl RngCore) -> String {
    let text = node.print(rng);
    if node.level() < min_level || rng.random_ratio(1, 8) {
        format!("({text})")
    } else {
        text
    }
}

fn literal(rng: &mut impl RngCore) -> Node {
    let frac = if rng.random_ratio(1, 4) { rng.random_range(1..=3) } else { 0 };
    let digits = match rng.random_range(0..10) {
        0 => 0,
        1 => 1,
        _ => rng.random_range(0..=9999),
    };
    Node::Lit { digits, frac }
}

/// Random tree with at most `budget` operators and operands of at most four
/// digits.
pub fn generate(rng: &mut impl RngCore, budget: usize) -> Node {
    if budget == 0 || rng.random_ratio(1, 5) {
        return literal(rng);
    }
    match rng.random_range(0..10) {
        0 => Node::Neg(Box::new(generate(rng, budget - 1))),
        1 if budget >= 2 && rng.random_bool(0.3) => {
            let chain = vec![rng.random_range(0..=3), rng.random_range(0..=2)];
            Node::Pow(Box::new(generate(rng, budget - 2)), chain)
        }
        1 => Node::Pow(Box::new(generate(rng, budget - 1)), vec![rng.random_range(-3..=4)]),
        _ => {
            let op = ['+', '-', '*', '/'][rng.random_range(0..4)];
            let rest = budget - 1;
            let left = rng.random_range(0..=rest);
            Node::Bin(
                op,
                Box::new(generate(rng, left)),
                Box::new(generate(rng, rest - left)),
            )
        }
    }
}

pub fn is_lowest_terms(numer: &BigInt, denom: &BigInt) -> bool {
    use num_integer::Integer;
    denom.is_positive() && numer.gcd(denom).is_one()
}
