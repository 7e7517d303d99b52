//! Decimal rendering for machine- and human-readable outputs.

/// Significant digits in machine-readable outputs.
pub const MACHINE_DIGITS: usize = 15;

/// Renders `x` rounded to exactly `digits` significant digits.
///
/// Positional notation for decimal exponents from `-5` up to `digits - 1`,
/// scientific otherwise; zero is `0`.
pub fn format_significant(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_owned()
        } else if x > 0.0 {
            "inf".to_owned()
        } else {
            "-inf".to_owned()
        };
    }
    if x == 0.0 {
        return "0".to_owned();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("`{:e}` always has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let sign = if negative { "-" } else { "" };
    if (-5..digits.len() as i32).contains(&exp) {
        if exp >= 0 {
            let (int_part, frac) = digits.split_at(exp as usize + 1);
            if frac.is_empty() {
                format!("{sign}{int_part}")
            } else {
                format!("{sign}{int_part}.{frac}")
            }
        } else {
            let zeros = "0".repeat((-exp - 1) as usize);
            format!("{sign}0.{zeros}{digits}")
        }
    } else {
        let (head, tail) = digits.split_at(1);
        if tail.is_empty() {
            format!("{sign}{head}e{exp}")
        } else {
            format!("{sign}{head}.{tail}e{exp}")
        }
    }
}

/// Machine output: [`MACHINE_DIGITS`] significant digits.
pub fn format_machine(x: f64) -> String {
    format_significant(x, MACHINE_DIGITS)
}

/// Four significant digits for terminal tables.
pub fn format_human(x: f64) -> String {
    if !x.is_finite() || x == 0.0 {
        return format_significant(x, 1);
    }
    let magnitude = x.abs().log10().floor() as i32;
    if (-3..6).contains(&magnitude) {
        let decimals = (3 - magnitude).max(0) as usize;
        format!("{:.*}", decimals, x)
    } else {
        format!("{:.3e}", x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pads_short_representations() {
        assert_eq!(format_machine(0.1), "0.100000000000000");
        assert_eq!(format_machine(0.75), "0.750000000000000");
        assert_eq!(format_machine(1.0), "1.00000000000000");
        assert_eq!(format_machine(12345.0), "12345.0000000000");
        assert_eq!(format_machine(-2.5), "-2.50000000000000");
        assert_eq!(format_machine(1e-7), "1.00000000000000e-7");
        assert_eq!(format_machine(1.0 / 3.0), "0.333333333333333");
        assert_eq!(format_machine(0.075 / 0.1), "0.750000000000000");
        assert_eq!(format_machine(2.0 / 3.0 * 1e20), "6.66666666666667e19");
        assert_eq!(format_machine(123456789012345.0), "123456789012345");
        assert_eq!(format_machine(3930896367521870.5), "3.93089636752187e15");
    }

    #[test]
    fn human_digits() {
        assert_eq!(format_human(2.41666), "2.417");
        assert_eq!(format_human(123.456), "123.5");
        assert_eq!(format_human(0.0123456), "0.01235");
        assert_eq!(format_human(0.0), "0");
    }

    proptest! {
        #[test]
        fn machine_format_is_close_and_stable(x in proptest::num::f64::NORMAL) {
            let text = format_machine(x);
            let back: f64 = text.parse().unwrap();
            prop_assert!(((back - x) / x).abs() <= 5e-15 + 2.0 * f64::EPSILON, "{x} -> {text}");
            prop_assert_eq!(format_machine(back), text.clone());
            let sig = text
                .trim_start_matches('-')
                .split('e')
                .next()
                .unwrap()
                .chars()
                .filter(|c| c.is_ascii_digit())
                .collect::<String>();
            prop_assert_eq!(sig.trim_start_matches('0').len(), MACHINE_DIGITS);
        }
    }
}
