use battle_mathexpr::Rational;
use rand::RngCore;

use super::FlawKind;
use crate::rng::pick;

const FACTORS: [&str; 3] = ["1/2", "2", "10"];

/// Returns a value that differs from `value`, and the kind of glitch used.
///
/// The kind is drawn uniformly. Zero cannot be sign-flipped or scaled into
/// something different, so it falls through to a digit change.
pub fn perturb_value(value: &Rational, rng: &mut impl RngCore) -> (Rational, FlawKind) {
    let mut kind = match pick(rng, 3) {
        0 => FlawKind::SignFlip,
        1 => FlawKind::FactorError,
        _ => FlawKind::DigitPerturbation,
    };
    if value.is_zero() && kind != FlawKind::DigitPerturbation {
        kind = FlawKind::DigitPerturbation;
    }
    let out = match kind {
        FlawKind::SignFlip => -value.clone(),
        FlawKind::FactorError => {
            let factor: Rational = FACTORS[pick(rng, FACTORS.len())].parse().expect("factor literal");
            value.clone() * factor
        }
        _ => perturb_digit(value, rng),
    };
    debug_assert_ne!(&out, value);
    (out, kind)
}

/// Moves one digit of the numerator by one. A 9 only goes down and a 0 only
/// goes up, so the digit stays a digit and the numerator always changes.
fn perturb_digit(value: &Rational, rng: &mut impl RngCore) -> Rational {
    if value.is_zero() {
        let sign = if pick(rng, 2) == 0 { 1 } else { -1 };
        return Rational::from_integer(sign);
    }
    let numer = value.numer().to_string();
    let (sign, digits) = match numer.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", numer.as_str()),
    };
    let mut bytes = digits.as_bytes().to_vec();
    let index = pick(rng, bytes.len());
    let up = match bytes[index] {
        b'0' => true,
        b'9' => false,
        _ => pick(rng, 2) == 0,
    };
    if up {
        bytes[index] += 1;
    } else {
        bytes[index] -= 1;
    }
    let digits = String::from_utf8(bytes).expect("ascii digits");
    format!("{sign}{digits}/{}", value.denom())
        .parse()
        .expect("digit perturbation yields a rational")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn r(text: &str) -> Rational {
        text.parse().unwrap()
    }

    #[test]
    fn always_differs() {
        let mut rng = seeded(11);
        for text in ["9", "0", "-3/7", "1000000", "1/2", "99", "10"] {
            for _ in 0..200 {
                let (out, kind) = perturb_value(&r(text), &mut rng);
                assert_ne!(out, r(text), "{text} {kind:?}");
            }
        }
    }

    #[test]
    fn zero_only_moves_by_one() {
        let mut rng = seeded(5);
        for _ in 0..100 {
            let (out, kind) = perturb_value(&Rational::zero(), &mut rng);
            assert_eq!(kind, FlawKind::DigitPerturbation);
            assert!(out == r("1") || out == r("-1"));
        }
    }

    #[test]
    fn kinds_follow_their_definitions() {
        let mut rng = seeded(9);
        let nine = r("9");
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..300 {
            let (out, kind) = perturb_value(&nine, &mut rng);
            seen.insert(format!("{kind:?}"));
            match kind {
                FlawKind::SignFlip => assert_eq!(out, r("-9")),
                FlawKind::FactorError => assert!([r("9/2"), r("18"), r("90")].contains(&out)),
                FlawKind::DigitPerturbation => assert_eq!(out, r("8")),
                other => panic!("{other:?}"),
            }
        }
        assert_eq!(seen.len(), 3);
    }
}
