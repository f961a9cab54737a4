mod common;

use common::{point3, smooth_expr};
use equiaffine::expr::{parse_expr, parse_expr_in, ParseError};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn display_parses_back_to_the_same_tree(src in smooth_expr(), x in point3()) {
        let e = parse_expr(&src).unwrap();
        let printed = e.to_string();
        let again = parse_expr(&printed).unwrap();
        prop_assert_eq!(&again, &e);
        prop_assert_eq!(again.to_string(), printed);
        let (a, b) = (e.eval(&x).unwrap(), again.eval(&x).unwrap());
        prop_assert!(a == b || (a.is_nan() && b.is_nan()));
    }
}

#[test]
fn precedence() {
    let at = |s: &str| parse_expr(s).unwrap().eval(&[2.0, 3.0]).unwrap();
    assert_eq!(at("-x1^2"), -4.0);
    assert_eq!(at("2*x1^3/4"), 4.0);
    assert_eq!(at("x1 - x2 - 1"), -2.0);
    assert_eq!(at("x1^-1"), 0.5);
    assert_eq!(at("t*x2"), 6.0);
}

#[test]
fn errors_carry_positions() {
    assert!(matches!(parse_expr("x1 +"), Err(ParseError::Syntax { .. })));
    assert!(matches!(parse_expr("tan(x1)"), Err(ParseError::UnknownIdentifier { .. })));
    assert!(matches!(parse_expr("x1^1.5"), Err(ParseError::NonIntegerExponent { .. })));
    assert!(matches!(parse_expr_in("x3", 2), Err(ParseError::UnknownVariable { .. })));
    assert!(matches!(parse_expr("  "), Err(ParseError::Empty)));
}
