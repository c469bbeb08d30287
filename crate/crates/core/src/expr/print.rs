use std::fmt::{self, Write};

use super::{BinaryOp, Expr, UnaryOp};

const ADDITIVE: u8 = 1;
const MULTIPLICATIVE: u8 = 2;
const PREFIX: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Constant(_) | Expr::Variable(_) => ATOM,
        Expr::Unary(UnaryOp::Neg, _) => PREFIX,
        Expr::Unary(_, _) => ATOM,
        Expr::Binary(op, _, _) => match op {
            BinaryOp::Add | BinaryOp::Sub => ADDITIVE,
            BinaryOp::Mul | BinaryOp::Div => MULTIPLICATIVE,
            BinaryOp::Pow => POWER,
        },
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        f.write_char('(')?;
        write_expr(f, e)?;
        f.write_char(')')
    } else {
        write_expr(f, e)
    }
}

fn write_constant(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    // The parser never yields negative or non-finite literals; these forms
    // keep the printed value correct for hand-built trees.
    if v.is_nan() {
        return f.write_str("(0 / 0)");
    }
    if v.is_infinite() {
        return f.write_str(if v > 0.0 { "(1 / 0)" } else { "(-1 / 0)" });
    }
    if v.is_sign_negative() {
        f.write_str("(-")?;
        write_constant(f, -v)?;
        return f.write_char(')');
    }
    if v.fract() == 0.0 && v < 1e15 {
        write!(f, "{v}")
    } else {
        // Debug gives the shortest round-trip form, switching to exponents.
        write!(f, "{v:?}")
    }
}

pub(super) fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e {
        Expr::Constant(v) => write_constant(f, *v),
        Expr::Variable(name) => f.write_str(name),
        Expr::Unary(UnaryOp::Neg, child) => {
            f.write_char('-')?;
            write_operand(f, child, precedence(child) < PREFIX)
        }
        Expr::Unary(op, child) => {
            write!(f, "{}(", op.name())?;
            write_expr(f, child)?;
            f.write_char(')')
        }
        Expr::Binary(op, lhs, rhs) => {
            let own = precedence(e);
            let (left_parens, right_parens) = if *op == BinaryOp::Pow {
                (precedence(lhs) <= POWER, precedence(rhs) < PREFIX)
            } else {
                (precedence(lhs) < own, precedence(rhs) <= own)
            };
            write_operand(f, lhs, left_parens)?;
            write!(f, " {} ", op.symbol())?;
            write_operand(f, rhs, right_parens)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn minimal_parentheses() {
        let xy = Expr::binary(BinaryOp::Mul, Expr::var("x"), Expr::var("y"));
        assert_eq!(xy.to_string(), "x * y");
        let neg_sum = Expr::unary(
            UnaryOp::Neg,
            Expr::binary(BinaryOp::Add, Expr::var("x"), Expr::var("y")),
        );
        assert_eq!(neg_sum.to_string(), "-(x + y)");
    }

    #[test]
    fn canonical_forms() {
        let cases = [
            ("x*y", "x * y"),
            ("sin(x)", "sin(x)"),
            ("(x+y)*z", "(x + y) * z"),
            ("x-(y-z)", "x - (y - z)"),
            ("(x-y)-z", "x - y - z"),
            ("2^3^2", "2 ^ 3 ^ 2"),
            ("(2^3)^2", "(2 ^ 3) ^ 2"),
            ("-x^2", "-x ^ 2"),
            ("(-x)^2", "(-x) ^ 2"),
            ("x^-y", "x ^ -y"),
            ("x^(y*z)", "x ^ (y * z)"),
            ("--x", "--x"),
            ("x/(y*z)", "x / (y * z)"),
            ("0.1 + 1e300 + 2.50", "0.1 + 1e300 + 2.5"),
            ("exp(-(x))", "exp(-x)"),
        ];
        for (src, printed) in cases {
            let e = parse(src).unwrap();
            assert_eq!(e.to_string(), printed, "source {src:?}");
            assert_eq!(parse(printed).unwrap(), e);
        }
    }

    #[test]
    fn negative_constant_keeps_value() {
        let e = Expr::binary(BinaryOp::Pow, Expr::constant(-2.0), Expr::constant(2.0));
        let reparsed = parse(&e.to_string()).unwrap();
        assert_eq!(reparsed.eval_with(&|_| None).unwrap(), 4.0);
    }
}
