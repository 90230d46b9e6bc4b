use beltrami::expr::{Func, ParseError};
use beltrami::*;

#[test]
fn parse_errors_report_offset_and_expected_tokens() {
    let err: ParseError = parse("sin(x) + * 2").unwrap_err();
    assert_eq!(err.offset, 9);
    assert!(!err.expected.is_empty());
    assert_eq!(parse("foo(x)").unwrap_err().offset, 0);
    assert_eq!(parse("(x + 1").unwrap_err().offset, 6);
    assert_eq!(parse("x y").unwrap_err().offset, 2);
    assert!(parse("").is_err());
}

#[test]
fn whitespace_is_ignored() {
    assert_eq!(parse(" sin ( x )*z+2 ^ 3 ").unwrap(), parse("sin(x)*z+2^3").unwrap());
}

#[test]
fn variables_and_functions_resolve() {
    let e = parse("x").unwrap();
    assert_eq!(e, Expr::var(Var::X));
    assert_eq!(e.free_vars(), vec![Var::X]);
    let e = parse("atan(theta) + r").unwrap();
    assert!(e.depends_on(Var::Theta) && e.depends_on(Var::R) && !e.depends_on(Var::Z));
    for f in [Func::Sin, Func::Cos, Func::Tan, Func::Exp, Func::Ln, Func::Sqrt, Func::Tanh, Func::Atan] {
        assert_eq!(Func::from_name(f.name()), Some(f));
    }
}

#[test]
fn derivatives_are_closed_over_the_grammar() {
    let e = parse("atan(x*y) + ln(sqrt(x^2 + 1)) - tan(y)/exp(x)").unwrap();
    let d = e.differentiate(Var::X).differentiate(Var::Y);
    let reparsed = parse(&d.to_string()).unwrap();
    let b = Bindings::new().with(Var::X, 0.4).with(Var::Y, -0.3);
    assert_eq!(reparsed.evaluate(&b).unwrap(), d.evaluate(&b).unwrap());
}
