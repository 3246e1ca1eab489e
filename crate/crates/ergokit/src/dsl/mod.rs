//! A small expression language for scalar fields over `R^d`, used to define
//! drift components, dispersion entries, weight functions, and Lyapunov
//! candidates in config files.
//!
//! Grammar (usual precedence; `^` binds tightest and associates right, then
//! unary minus, then `* /`, then `+ -`):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'x'<k> | 't' | func '(' args ')' | '(' expr ')'
//! func   := exp | log | sqrt | abs | tanh | min | max | pow
//! ```
//!
//! Variables are `x1 .. xd` plus the time symbol `t`. Evaluation is strict
//! about domains: `log` of a nonpositive value, square roots of negative
//! values, fractional powers of negative bases, division by zero, and
//! non-finite results are all reported as errors rather than silently
//! producing `NaN` or `inf`.

mod parser;

pub use parser::{parse, ParseError, ParseErrorKind};

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Abs,
    Tanh,
    Min,
    Max,
    Pow,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Tanh => "tanh",
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Exp | Func::Log | Func::Sqrt | Func::Abs | Func::Tanh => 1,
            Func::Min | Func::Max | Func::Pow => 2,
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "tanh" => Func::Tanh,
            "min" => Func::Min,
            "max" => Func::Max,
            "pow" => Func::Pow,
            _ => return None,
        })
    }
}

/// Abstract syntax tree of an expression. Variables hold zero-based indices
/// (`x1` parses to `Var(0)`).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(f64),
    Var(usize),
    Time,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("log of nonpositive value {0}")]
    LogNonPositive(f64),
    #[error("square root of negative value {0}")]
    SqrtNegative(f64),
    #[error("fractional power of negative base: {base}^{exponent}")]
    NegativeBasePow { base: f64, exponent: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite result in {op}")]
    NonFinite { op: &'static str },
    #[error("variable x{} needs a point of dimension > {index}, got {dim}", index + 1)]
    VariableOutOfRange { index: usize, dim: usize },
    #[error("expression uses the time variable t but no time was supplied")]
    TimeUnavailable,
}

impl Expr {
    /// Evaluates at a spatial point with no time binding; expressions that
    /// reference `t` report [`EvalError::TimeUnavailable`].
    pub fn evaluate(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.eval_inner(x, None)
    }

    pub fn evaluate_at_time(&self, x: &[f64], t: f64) -> Result<f64, EvalError> {
        self.eval_inner(x, Some(t))
    }

    fn eval_inner(&self, x: &[f64], t: Option<f64>) -> Result<f64, EvalError> {
        let value = match self {
            Expr::Literal(v) => *v,
            Expr::Var(i) => {
                if *i >= x.len() {
                    return Err(EvalError::VariableOutOfRange {
                        index: *i,
                        dim: x.len(),
                    });
                }
                x[*i]
            }
            Expr::Time => t.ok_or(EvalError::TimeUnavailable)?,
            Expr::Neg(inner) => -inner.eval_inner(x, t)?,
            Expr::Binary(op, lhs, rhs) => {
                let a = lhs.eval_inner(x, t)?;
                let b = rhs.eval_inner(x, t)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                    BinOp::Pow => checked_pow(a, b)?,
                }
            }
            Expr::Call(func, args) => {
                let a = args[0].eval_inner(x, t)?;
                match func {
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(EvalError::LogNonPositive(a));
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::SqrtNegative(a));
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                    Func::Tanh => a.tanh(),
                    Func::Min | Func::Max | Func::Pow => {
                        let b = args[1].eval_inner(x, t)?;
                        match func {
                            Func::Min => a.min(b),
                            Func::Max => a.max(b),
                            Func::Pow => checked_pow(a, b)?,
                            _ => unreachable!(),
                        }
                    }
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(EvalError::NonFinite {
                op: self.op_name(),
            })
        }
    }

    fn op_name(&self) -> &'static str {
        match self {
            Expr::Literal(_) => "literal",
            Expr::Var(_) => "variable",
            Expr::Time => "t",
            Expr::Neg(_) => "negation",
            Expr::Binary(BinOp::Add, ..) => "+",
            Expr::Binary(BinOp::Sub, ..) => "-",
            Expr::Binary(BinOp::Mul, ..) => "*",
            Expr::Binary(BinOp::Div, ..) => "/",
            Expr::Binary(BinOp::Pow, ..) => "^",
            Expr::Call(f, _) => f.name(),
        }
    }

    /// Central difference in coordinate `i` with step `h`.
    pub fn differentiate_fd(&self, x: &[f64], i: usize, h: f64) -> Result<f64, EvalError> {
        if i >= x.len() {
            return Err(EvalError::VariableOutOfRange {
                index: i,
                dim: x.len(),
            });
        }
        let mut fwd = x.to_vec();
        let mut bwd = x.to_vec();
        fwd[i] += h;
        bwd[i] -= h;
        Ok((self.evaluate(&fwd)? - self.evaluate(&bwd)?) / (2.0 * h))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Binary(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

fn checked_pow(base: f64, exponent: f64) -> Result<f64, EvalError> {
    let value = base.powf(exponent);
    if value.is_nan() && base < 0.0 && exponent.fract() != 0.0 {
        return Err(EvalError::NegativeBasePow { base, exponent });
    }
    Ok(value)
}

impl fmt::Display for Expr {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(
            out: &mut fmt::Formatter<'_>,
            e: &Expr,
            needs_parens: bool,
        ) -> fmt::Result {
            if needs_parens {
                write!(out, "({e})")
            } else {
                write!(out, "{e}")
            }
        }
        match self {
            Expr::Literal(v) => write!(out, "{v}"),
            Expr::Var(i) => write!(out, "x{}", i + 1),
            Expr::Time => write!(out, "t"),
            Expr::Neg(inner) => {
                write!(out, "-")?;
                child(out, inner, inner.precedence() < self.precedence())
            }
            Expr::Binary(op, lhs, rhs) => {
                let prec = self.precedence();
                let symbol = match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => " * ",
                    BinOp::Div => " / ",
                    BinOp::Pow => "^",
                };
                if *op == BinOp::Pow {
                    // right-associative: parenthesize a power on the left
                    child(out, lhs, lhs.precedence() <= prec)?;
                    write!(out, "{symbol}")?;
                    child(out, rhs, rhs.precedence() < prec)
                } else {
                    child(out, lhs, lhs.precedence() < prec)?;
                    write!(out, "{symbol}")?;
                    child(out, rhs, rhs.precedence() <= prec)
                }
            }
            Expr::Call(func, args) => {
                write!(out, "{}(", func.name())?;
                for (k, arg) in args.iter().enumerate() {
                    if k > 0 {
                        write!(out, ", ")?;
                    }
                    write!(out, "{arg}")?;
                }
                write!(out, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn eval(src: &str, d: usize, x: &[f64]) -> f64 {
        parse(src, d).unwrap().evaluate(x).unwrap()
    }

    #[test]
    fn parses_polynomial() {
        let e = parse("x1^2 + 1", 1).unwrap();
        assert_abs_diff_eq!(e.evaluate(&[2.0]).unwrap(), 5.0);
    }

    #[test]
    fn unary_negation() {
        let e = parse("-x1", 1).unwrap();
        assert_eq!(e, Expr::Neg(Box::new(Expr::Var(0))));
        assert_abs_diff_eq!(e.evaluate(&[3.0]).unwrap(), -3.0);
    }

    #[test]
    fn gaussian_bump_at_origin() {
        assert_abs_diff_eq!(eval("exp(-(x1^2+x2^2)/2)", 2, &[0.0, 0.0]), 1.0);
    }

    #[test]
    fn literal_is_constant() {
        assert_abs_diff_eq!(eval("2", 1, &[99.0]), 2.0);
    }

    #[test]
    fn min_max_clamp() {
        assert_abs_diff_eq!(eval("min(x1, 3)", 1, &[5.0]), 3.0);
        assert_abs_diff_eq!(eval("max(x1, 3)", 1, &[5.0]), 5.0);
    }

    #[test]
    fn precedence_mul_before_add() {
        assert_abs_diff_eq!(eval("2+3*4", 1, &[0.0]), 14.0);
    }

    #[test]
    fn power_is_right_associative() {
        assert_abs_diff_eq!(eval("2^3^2", 1, &[0.0]), 512.0);
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        assert_abs_diff_eq!(eval("-2^2", 1, &[0.0]), -4.0);
        assert_abs_diff_eq!(eval("(-2)^2", 1, &[0.0]), 4.0);
    }

    #[test]
    fn negative_exponent_literal() {
        assert_abs_diff_eq!(eval("2^-1", 1, &[0.0]), 0.5);
    }

    #[test]
    fn integer_power_of_negative_base_allowed() {
        assert_abs_diff_eq!(eval("(-2)^3", 1, &[0.0]), -8.0);
    }

    #[test]
    fn fractional_power_of_negative_base_rejected() {
        let e = parse("pow(x1, 0.5)", 1).unwrap();
        assert!(matches!(
            e.evaluate(&[-8.0]),
            Err(EvalError::NegativeBasePow { .. })
        ));
    }

    #[test]
    fn log_domain_error() {
        let e = parse("log(x1)", 1).unwrap();
        assert!(matches!(
            e.evaluate(&[-1.0]),
            Err(EvalError::LogNonPositive(_))
        ));
    }

    #[test]
    fn division_by_zero_reported() {
        let e = parse("1/x1", 1).unwrap();
        assert!(matches!(e.evaluate(&[0.0]), Err(EvalError::DivisionByZero)));
    }

    #[test]
    fn overflow_reported_not_propagated() {
        let e = parse("exp(x1)", 1).unwrap();
        assert!(matches!(
            e.evaluate(&[1.0e4]),
            Err(EvalError::NonFinite { .. })
        ));
    }

    #[test]
    fn time_variable_requires_binding() {
        let e = parse("t + x1", 1).unwrap();
        assert!(matches!(e.evaluate(&[1.0]), Err(EvalError::TimeUnavailable)));
        assert_abs_diff_eq!(e.evaluate_at_time(&[1.0], 2.0).unwrap(), 3.0);
    }

    #[test]
    fn fd_of_constant_is_zero() {
        let e = parse("7", 1).unwrap();
        assert_abs_diff_eq!(e.differentiate_fd(&[0.0], 0, 1e-4).unwrap(), 0.0);
    }

    #[test]
    fn fd_of_square_near_six() {
        let e = parse("x1^2", 1).unwrap();
        let d = e.differentiate_fd(&[3.0], 0, 1e-5).unwrap();
        assert_abs_diff_eq!(d, 6.0, epsilon = 1e-8);
    }

    #[test]
    fn fd_of_linear_is_exact() {
        let e = parse("2*x1", 1).unwrap();
        let d = e.differentiate_fd(&[1.3], 0, 1e-3).unwrap();
        assert_abs_diff_eq!(d, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn fd_error_scales_quadratically() {
        // Richardson: halving h should cut the central-difference error by ~4
        let e = parse("exp(x1)", 1).unwrap();
        let x = [0.7f64];
        let exact = x[0].exp();
        let err_h = (e.differentiate_fd(&x, 0, 1e-2).unwrap() - exact).abs();
        let err_h2 = (e.differentiate_fd(&x, 0, 5e-3).unwrap() - exact).abs();
        let ratio = err_h / err_h2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn print_parse_round_trip() {
        for src in [
            "x1^2 + 1",
            "-x1^2",
            "(x1 + 2) * (x1 - 2)",
            "2^3^2",
            "(2^3)^2",
            "min(x1, max(x2, 0.5))",
            "exp(-(x1^2 + x2^2) / 2)",
            "1 - -x1",
            "x1 / x2 / 2",
            "pow(x1, 3) * tanh(t)",
        ] {
            let parsed = parse(src, 2).unwrap();
            let printed = parsed.to_string();
            let reparsed = parse(&printed, 2).unwrap();
            assert_eq!(parsed, reparsed, "{src} printed as {printed}");
            // printing is stable after one round
            assert_eq!(printed, reparsed.to_string());
        }
    }
}
