use super::{BinOp, Expr, Func, Var};

use BinOp::*;

fn is_const(e: &Expr) -> bool {
    matches!(e, Expr::Num(_))
}

fn num(e: &Expr) -> Option<f64> {
    match e {
        Expr::Num(v) => Some(*v),
        _ => None,
    }
}

// Builders that fold literal-literal subtrees and nothing else (beyond the
// trivial zero/one identities needed to keep derivatives readable).

fn add(a: Expr, b: Expr) -> Expr {
    match (num(&a), num(&b)) {
        (Some(x), Some(y)) => Expr::Num(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::bin(Add, a, b),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (num(&a), num(&b)) {
        (Some(x), Some(y)) => Expr::Num(x - y),
        (_, Some(y)) if y == 0.0 => a,
        (Some(x), _) if x == 0.0 => neg(b),
        _ => Expr::bin(Sub, a, b),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (num(&a), num(&b)) {
        (Some(x), Some(y)) => Expr::Num(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Num(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::bin(Mul, a, b),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (num(&a), num(&b)) {
        (Some(x), Some(y)) if y != 0.0 => Expr::Num(x / y),
        (Some(x), _) if x == 0.0 => Expr::Num(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::bin(Div, a, b),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (num(&a), num(&b)) {
        (Some(x), Some(y)) => Expr::Num(x.powf(y)),
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::bin(Pow, a, b),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::neg(other),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::call(f, a)
}

pub(super) fn differentiate(e: &Expr, v: Var) -> Expr {
    if !e.depends_on(v) {
        return Expr::Num(0.0);
    }
    match e {
        Expr::Num(_) | Expr::Pi => Expr::Num(0.0),
        Expr::Var(w) => Expr::Num(if *w == v { 1.0 } else { 0.0 }),
        Expr::Neg(a) => neg(differentiate(a, v)),
        Expr::Bin(op, a, b) => {
            let da = differentiate(a, v);
            let db = differentiate(b, v);
            let (a, b) = ((**a).clone(), (**b).clone());
            match op {
                Add => add(da, db),
                Sub => sub(da, db),
                Mul => add(mul(da, b.clone()), mul(a, db)),
                Div if !b.depends_on(v) => div(da, b),
                Div => div(sub(mul(da, b.clone()), mul(a, db)), pow(b, Expr::Num(2.0))),
                Pow => {
                    if !b.depends_on(v) {
                        // d(a^b) = b a^(b-1) a'
                        let lowered = if is_const(&b) { Expr::Num(num(&b).unwrap() - 1.0) } else { sub(b.clone(), Expr::Num(1.0)) };
                        mul(mul(b, pow(a, lowered)), da)
                    } else {
                        // d(a^b) = a^b (b' ln a + b a'/a)
                        let term = add(mul(db, call(Func::Ln, a.clone())), div(mul(b.clone(), da), a.clone()));
                        mul(pow(a, b), term)
                    }
                }
            }
        }
        Expr::Call(f, a) => {
            let da = differentiate(a, v);
            let a = (**a).clone();
            let outer = match f {
                Func::Sin => call(Func::Cos, a),
                Func::Cos => neg(call(Func::Sin, a)),
                Func::Tan => div(Expr::Num(1.0), pow(call(Func::Cos, a), Expr::Num(2.0))),
                Func::Exp => call(Func::Exp, a),
                Func::Ln => div(Expr::Num(1.0), a),
                Func::Sqrt => div(Expr::Num(1.0), mul(Expr::Num(2.0), call(Func::Sqrt, a))),
                Func::Tanh => sub(Expr::Num(1.0), pow(call(Func::Tanh, a), Expr::Num(2.0))),
                Func::Atan => div(Expr::Num(1.0), add(Expr::Num(1.0), pow(a, Expr::Num(2.0)))),
            };
            mul(outer, da)
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Bindings, Var};

    fn d_at(s: &str, t: f64) -> f64 {
        parse(s).unwrap().differentiate(Var::T).eval_t(t).unwrap()
    }

    #[test]
    fn simple_rules() {
        assert_eq!(parse("3*t").unwrap().differentiate(Var::T), parse("3").unwrap());
        assert_eq!(parse("t^2/2").unwrap().differentiate(Var::T).to_string(), "2 * t / 2");
        assert_eq!(d_at("t^2/2", 1.7), 1.7);
        assert_eq!(parse("x*y").unwrap().differentiate(Var::T), parse("0").unwrap());
    }

    #[test]
    fn tanh_against_central_difference() {
        let e = parse("tanh(t)").unwrap();
        let h = 1e-6;
        let fd = (e.eval_t(0.3 + h).unwrap() - e.eval_t(0.3 - h).unwrap()) / (2.0 * h);
        assert!((d_at("tanh(t)", 0.3) - fd).abs() <= 1e-8);
    }

    #[test]
    fn variable_exponent() {
        // d/dt t^t = t^t (ln t + 1)
        let t: f64 = 1.3;
        let expected = t.powf(t) * (t.ln() + 1.0);
        assert!((d_at("t^t", t) - expected).abs() < 1e-14);
        let b = Bindings::new().with(Var::X, 2.0).with(Var::Y, 3.0);
        let dx = parse("x^y").unwrap().differentiate(Var::X).evaluate(&b).unwrap();
        assert_eq!(dx, 12.0);
    }
}
