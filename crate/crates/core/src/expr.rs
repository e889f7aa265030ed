//! Small expression language for user-supplied f(t,y) and Ψ(t).
//!
//! Grammar (standard precedence, `^` right-associative and tighter than
//! unary minus, which is tighter than `*` `/`, which are tighter than
//! `+` `-`):
//!
//! ```text
//! expr  := term (('+'|'-') term)*
//! term  := unary (('*'|'/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 't' | 'y' | name '(' expr ')' | '(' expr ')'
//! ```
//!
//! The function set is closed: exp, ln, sqrt, sin, cos, abs. There is no
//! implicit multiplication ("4y" is a syntax error). Printing an [`Ast`]
//! re-parses to an identical tree.

use std::fmt;

/// Expression-language errors (parse, evaluation, differentiation).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdent { pos: usize, name: String },
    #[error("division by zero in `{expr}`")]
    DivisionByZero { expr: String },
    #[error("domain error in `{expr}`: {msg}")]
    EvalDomain { expr: String, msg: String },
    #[error("expression references y but no y value was supplied")]
    MissingY,
    #[error("non-finite result in `{expr}`")]
    NonFinite { expr: String },
    #[error("cannot differentiate: {0}")]
    NonDifferentiable(String),
}

type ExprResult<T> = std::result::Result<T, ExprError>;

/// Built-in unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Abs,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
        }
    }
}

/// Expression tree over variables `t` and `y`.
#[derive(Debug, Clone, PartialEq)]
pub enum Ast {
    Const(f64),
    /// The time variable `t`.
    T,
    /// The state variable `y`.
    Y,
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Div(Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, Box<Ast>),
    Neg(Box<Ast>),
    Call(Func, Box<Ast>),
}

impl Ast {
    pub fn contains_y(&self) -> bool {
        match self {
            Ast::Y => true,
            Ast::Const(_) | Ast::T => false,
            Ast::Add(a, b) | Ast::Sub(a, b) | Ast::Mul(a, b) | Ast::Div(a, b) | Ast::Pow(a, b) => {
                a.contains_y() || b.contains_y()
            }
            Ast::Neg(a) => a.contains_y(),
            Ast::Call(_, a) => a.contains_y(),
        }
    }

    pub fn contains_abs(&self) -> bool {
        match self {
            Ast::Call(Func::Abs, _) => true,
            Ast::Const(_) | Ast::T | Ast::Y => false,
            Ast::Add(a, b) | Ast::Sub(a, b) | Ast::Mul(a, b) | Ast::Div(a, b) | Ast::Pow(a, b) => {
                a.contains_abs() || b.contains_abs()
            }
            Ast::Neg(a) => a.contains_abs(),
            Ast::Call(_, a) => a.contains_abs(),
        }
    }
}

// Precedence levels used by both the parser (implicitly) and the printer.
const PREC_ADD: u8 = 2;
const PREC_MUL: u8 = 3;
const PREC_NEG: u8 = 4;
const PREC_POW: u8 = 5;
const PREC_ATOM: u8 = 6;

fn prec(ast: &Ast) -> u8 {
    match ast {
        Ast::Add(..) | Ast::Sub(..) => PREC_ADD,
        Ast::Mul(..) | Ast::Div(..) => PREC_MUL,
        Ast::Neg(..) => PREC_NEG,
        Ast::Pow(..) => PREC_POW,
        Ast::Const(c) if *c < 0.0 => PREC_NEG, // prints with a leading minus
        _ => PREC_ATOM,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Ast, min: u8) -> fmt::Result {
    if prec(child) < min {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ast::Const(c) => write!(f, "{c}"),
            Ast::T => write!(f, "t"),
            Ast::Y => write!(f, "y"),
            Ast::Add(a, b) => {
                write_child(f, a, PREC_ADD)?;
                write!(f, " + ")?;
                write_child(f, b, PREC_ADD + 1)
            }
            Ast::Sub(a, b) => {
                write_child(f, a, PREC_ADD)?;
                write!(f, " - ")?;
                write_child(f, b, PREC_ADD + 1)
            }
            Ast::Mul(a, b) => {
                write_child(f, a, PREC_MUL)?;
                write!(f, " * ")?;
                write_child(f, b, PREC_MUL + 1)
            }
            Ast::Div(a, b) => {
                write_child(f, a, PREC_MUL)?;
                write!(f, " / ")?;
                write_child(f, b, PREC_MUL + 1)
            }
            Ast::Pow(a, b) => {
                // Right-associative: the base needs parens even at equal
                // precedence, the exponent does not.
                write_child(f, a, PREC_POW + 1)?;
                write!(f, " ^ ")?;
                write_child(f, b, PREC_NEG)
            }
            Ast::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, PREC_NEG)
            }
            Ast::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

/// Parses an expression. Errors carry the byte position.
pub fn parse(src: &str) -> ExprResult<Ast> {
    if src.trim().is_empty() {
        return Err(ExprError::Syntax {
            pos: 0,
            msg: "empty expression".into(),
        });
    }
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
    };
    let ast = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(ExprError::Syntax {
            pos: p.pos,
            msg: format!("unexpected `{}`", p.src[p.pos] as char),
        });
    }
    Ok(ast)
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> ExprResult<Ast> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Ast::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Ast::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> ExprResult<Ast> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Ast::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Ast::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> ExprResult<Ast> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.unary()?;
            // Fold a literal so `-2` prints and re-parses identically.
            return Ok(match inner {
                Ast::Const(c) => Ast::Const(-c),
                other => Ast::Neg(Box::new(other)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> ExprResult<Ast> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?; // right-associative
            return Ok(Ast::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> ExprResult<Ast> {
        match self.peek() {
            None => Err(ExprError::Syntax {
                pos: self.pos,
                msg: "unexpected end of input".into(),
            }),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(ExprError::Syntax {
                        pos: self.pos,
                        msg: "expected `)`".into(),
                    });
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(c) => Err(ExprError::Syntax {
                pos: self.pos,
                msg: format!("unexpected `{}`", c as char),
            }),
        }
    }

    fn number(&mut self) -> ExprResult<Ast> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        // Optional exponent.
        if self.pos < self.src.len() && (self.src[self.pos] | 0x20) == b'e' {
            let mut look = self.pos + 1;
            if look < self.src.len() && (self.src[look] == b'+' || self.src[look] == b'-') {
                look += 1;
            }
            if look < self.src.len() && self.src[look].is_ascii_digit() {
                self.pos = look;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Ast::Const(v)),
            _ => Err(ExprError::Syntax {
                pos: start,
                msg: format!("invalid number literal `{text}`"),
            }),
        }
    }

    fn ident(&mut self) -> ExprResult<Ast> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match name {
            "t" => Ok(Ast::T),
            "y" => Ok(Ast::Y),
            "exp" | "ln" | "sqrt" | "sin" | "cos" | "abs" => {
                let func = match name {
                    "exp" => Func::Exp,
                    "ln" => Func::Ln,
                    "sqrt" => Func::Sqrt,
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    _ => Func::Abs,
                };
                if self.peek() != Some(b'(') {
                    return Err(ExprError::Syntax {
                        pos: self.pos,
                        msg: format!("expected `(` after `{name}`"),
                    });
                }
                self.pos += 1;
                let arg = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(ExprError::Syntax {
                        pos: self.pos,
                        msg: "expected `)`".into(),
                    });
                }
                self.pos += 1;
                Ok(Ast::Call(func, Box::new(arg)))
            }
            _ => Err(ExprError::UnknownIdent {
                pos: start,
                name: name.into(),
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Evaluates `ast` at `t` (and `y`, which must be supplied iff the tree
/// references it). Non-finite intermediate results are reported with the
/// offending subexpression.
pub fn eval(ast: &Ast, t: f64, y: Option<f64>) -> ExprResult<f64> {
    let v = eval_inner(ast, t, y)?;
    Ok(v)
}

fn eval_inner(ast: &Ast, t: f64, y: Option<f64>) -> ExprResult<f64> {
    let check = |v: f64| -> ExprResult<f64> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NonFinite {
                expr: ast.to_string(),
            })
        }
    };
    match ast {
        Ast::Const(c) => Ok(*c),
        Ast::T => Ok(t),
        Ast::Y => y.ok_or(ExprError::MissingY),
        Ast::Add(a, b) => check(eval_inner(a, t, y)? + eval_inner(b, t, y)?),
        Ast::Sub(a, b) => check(eval_inner(a, t, y)? - eval_inner(b, t, y)?),
        Ast::Mul(a, b) => check(eval_inner(a, t, y)? * eval_inner(b, t, y)?),
        Ast::Div(a, b) => {
            let den = eval_inner(b, t, y)?;
            if den == 0.0 {
                return Err(ExprError::DivisionByZero {
                    expr: ast.to_string(),
                });
            }
            check(eval_inner(a, t, y)? / den)
        }
        Ast::Pow(a, b) => check(eval_inner(a, t, y)?.powf(eval_inner(b, t, y)?)),
        Ast::Neg(a) => Ok(-eval_inner(a, t, y)?),
        Ast::Call(func, a) => {
            let x = eval_inner(a, t, y)?;
            match func {
                Func::Exp => check(x.exp()),
                Func::Ln => {
                    if x <= 0.0 {
                        return Err(ExprError::EvalDomain {
                            expr: ast.to_string(),
                            msg: format!("ln of non-positive value {x}"),
                        });
                    }
                    check(x.ln())
                }
                Func::Sqrt => {
                    if x < 0.0 {
                        return Err(ExprError::EvalDomain {
                            expr: ast.to_string(),
                            msg: format!("sqrt of negative value {x}"),
                        });
                    }
                    check(x.sqrt())
                }
                Func::Sin => Ok(x.sin()),
                Func::Cos => Ok(x.cos()),
                Func::Abs => Ok(x.abs()),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Differentiation
// ---------------------------------------------------------------------------

fn fold(ast: Ast) -> Ast {
    match ast {
        Ast::Add(a, b) => match (fold(*a), fold(*b)) {
            (Ast::Const(x), Ast::Const(y)) if (x + y).is_finite() => Ast::Const(x + y),
            (Ast::Const(c), rhs) if c == 0.0 => rhs,
            (lhs, Ast::Const(c)) if c == 0.0 => lhs,
            (lhs, rhs) => Ast::Add(Box::new(lhs), Box::new(rhs)),
        },
        Ast::Sub(a, b) => match (fold(*a), fold(*b)) {
            (Ast::Const(x), Ast::Const(y)) if (x - y).is_finite() => Ast::Const(x - y),
            (lhs, Ast::Const(c)) if c == 0.0 => lhs,
            (Ast::Const(c), rhs) if c == 0.0 => fold(Ast::Neg(Box::new(rhs))),
            (lhs, rhs) => Ast::Sub(Box::new(lhs), Box::new(rhs)),
        },
        Ast::Mul(a, b) => match (fold(*a), fold(*b)) {
            (Ast::Const(x), Ast::Const(y)) if (x * y).is_finite() => Ast::Const(x * y),
            (Ast::Const(c), _) | (_, Ast::Const(c)) if c == 0.0 => Ast::Const(0.0),
            (Ast::Const(c), rhs) if c == 1.0 => rhs,
            (lhs, Ast::Const(c)) if c == 1.0 => lhs,
            (lhs, rhs) => Ast::Mul(Box::new(lhs), Box::new(rhs)),
        },
        Ast::Div(a, b) => match (fold(*a), fold(*b)) {
            (lhs, Ast::Const(c)) if c == 1.0 => lhs,
            (Ast::Const(c), rhs) if c == 0.0 && !matches!(rhs, Ast::Const(x) if x == 0.0) => {
                Ast::Const(0.0)
            }
            (lhs, rhs) => Ast::Div(Box::new(lhs), Box::new(rhs)),
        },
        Ast::Pow(a, b) => match (fold(*a), fold(*b)) {
            (_, Ast::Const(c)) if c == 0.0 => Ast::Const(1.0),
            (lhs, Ast::Const(c)) if c == 1.0 => lhs,
            (lhs, rhs) => Ast::Pow(Box::new(lhs), Box::new(rhs)),
        },
        Ast::Neg(a) => match fold(*a) {
            Ast::Const(c) => Ast::Const(-c),
            Ast::Neg(inner) => *inner,
            other => Ast::Neg(Box::new(other)),
        },
        Ast::Call(f, a) => Ast::Call(f, Box::new(fold(*a))),
        leaf => leaf,
    }
}

/// Symbolic derivative d/dt with constant folding.
///
/// The tree must be y-free (this is how Ψ′ is produced, and Ψ never depends
/// on the state); `abs` is rejected because it is not differentiable at 0.
pub fn differentiate(ast: &Ast) -> ExprResult<Ast> {
    if ast.contains_y() {
        return Err(ExprError::NonDifferentiable(
            "expression references y; only t-expressions can be differentiated".into(),
        ));
    }
    if ast.contains_abs() {
        return Err(ExprError::NonDifferentiable(
            "abs is not differentiable at 0 and is not allowed here".into(),
        ));
    }
    Ok(fold(d(ast)))
}

fn d(ast: &Ast) -> Ast {
    match ast {
        Ast::Const(_) => Ast::Const(0.0),
        Ast::T => Ast::Const(1.0),
        Ast::Y => unreachable!("y-free checked by differentiate"),
        Ast::Add(a, b) => Ast::Add(Box::new(d(a)), Box::new(d(b))),
        Ast::Sub(a, b) => Ast::Sub(Box::new(d(a)), Box::new(d(b))),
        Ast::Mul(a, b) => Ast::Add(
            Box::new(Ast::Mul(Box::new(d(a)), b.clone())),
            Box::new(Ast::Mul(a.clone(), Box::new(d(b)))),
        ),
        Ast::Div(a, b) => Ast::Div(
            Box::new(Ast::Sub(
                Box::new(Ast::Mul(Box::new(d(a)), b.clone())),
                Box::new(Ast::Mul(a.clone(), Box::new(d(b)))),
            )),
            Box::new(Ast::Pow(b.clone(), Box::new(Ast::Const(2.0)))),
        ),
        Ast::Pow(base, expo) => match expo.as_ref() {
            // f^c: c f^{c-1} f'
            Ast::Const(c) => Ast::Mul(
                Box::new(Ast::Mul(
                    Box::new(Ast::Const(*c)),
                    Box::new(Ast::Pow(base.clone(), Box::new(Ast::Const(c - 1.0)))),
                )),
                Box::new(d(base)),
            ),
            // f^g: f^g (g' ln f + g f'/f)
            _ => Ast::Mul(
                Box::new(ast.clone()),
                Box::new(Ast::Add(
                    Box::new(Ast::Mul(
                        Box::new(d(expo)),
                        Box::new(Ast::Call(Func::Ln, base.clone())),
                    )),
                    Box::new(Ast::Div(
                        Box::new(Ast::Mul(expo.clone(), Box::new(d(base)))),
                        base.clone(),
                    )),
                )),
            ),
        },
        Ast::Neg(a) => Ast::Neg(Box::new(d(a))),
        Ast::Call(func, a) => {
            let da = d(a);
            let outer = match func {
                Func::Exp => Ast::Call(Func::Exp, a.clone()),
                Func::Ln => Ast::Div(Box::new(Ast::Const(1.0)), a.clone()),
                Func::Sqrt => Ast::Div(
                    Box::new(Ast::Const(0.5)),
                    Box::new(Ast::Call(Func::Sqrt, a.clone())),
                ),
                Func::Sin => Ast::Call(Func::Cos, a.clone()),
                Func::Cos => Ast::Neg(Box::new(Ast::Call(Func::Sin, a.clone()))),
                Func::Abs => unreachable!("abs rejected by differentiate"),
            };
            Ast::Mul(Box::new(outer), Box::new(da))
        }
    }
}
