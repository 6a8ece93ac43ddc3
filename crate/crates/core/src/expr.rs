//! Closed-form data expressions from a fixed catalogue.
//!
//! Scalars are sums of terms; each term is one of
//!
//! ```text
//! constant c
//! affine c0 cx cy                      c0 + cx x + cy y
//! gaussian c0 amp x0 y0 width          c0 + amp exp(-|x - x0|^2 / width^2)
//! trig c0 amp kx ky px py              c0 + amp sin(kx x + px) sin(ky y + py)
//! ```
//!
//! joined by ` + `. Vectors are `constant ux uy`, `components S ; S`, or
//! `stream S` (the divergence-free field `(dS/dy, -dS/dx)`).

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum ScalarExpr {
    Constant(f64),
    Affine {
        c0: f64,
        cx: f64,
        cy: f64,
    },
    Gaussian {
        c0: f64,
        amp: f64,
        x0: f64,
        y0: f64,
        width: f64,
    },
    Trig {
        c0: f64,
        amp: f64,
        kx: f64,
        ky: f64,
        px: f64,
        py: f64,
    },
    Sum(Vec<ScalarExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum VectorExpr {
    Components(ScalarExpr, ScalarExpr),
    Stream(ScalarExpr),
}

/// Parse failure with the byte offset of the offending token.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprError {
    pub offset: usize,
    pub message: String,
}

impl ScalarExpr {
    pub fn value(&self, x: f64, y: f64) -> f64 {
        match self {
            ScalarExpr::Constant(c) => *c,
            ScalarExpr::Affine { c0, cx, cy } => c0 + cx * x + cy * y,
            ScalarExpr::Gaussian {
                c0,
                amp,
                x0,
                y0,
                width,
            } => {
                let r2 = (x - x0).powi(2) + (y - y0).powi(2);
                c0 + amp * (-r2 / (width * width)).exp()
            }
            ScalarExpr::Trig {
                c0,
                amp,
                kx,
                ky,
                px,
                py,
            } => c0 + amp * (kx * x + px).sin() * (ky * y + py).sin(),
            ScalarExpr::Sum(terms) => terms.iter().map(|t| t.value(x, y)).sum(),
        }
    }

    pub fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        match self {
            ScalarExpr::Constant(_) => [0.0, 0.0],
            ScalarExpr::Affine { cx, cy, .. } => [*cx, *cy],
            ScalarExpr::Gaussian {
                amp,
                x0,
                y0,
                width,
                ..
            } => {
                let w2 = width * width;
                let r2 = (x - x0).powi(2) + (y - y0).powi(2);
                let g = amp * (-r2 / w2).exp() * (-2.0 / w2);
                [g * (x - x0), g * (y - y0)]
            }
            ScalarExpr::Trig {
                amp,
                kx,
                ky,
                px,
                py,
                ..
            } => {
                let (sx, cx) = (kx * x + px).sin_cos();
                let (sy, cy) = (ky * y + py).sin_cos();
                [amp * kx * cx * sy, amp * ky * sx * cy]
            }
            ScalarExpr::Sum(terms) => terms.iter().fold([0.0, 0.0], |acc, t| {
                let g = t.gradient(x, y);
                [acc[0] + g[0], acc[1] + g[1]]
            }),
        }
    }

    pub fn parse(text: &str) -> Result<ScalarExpr, ExprError> {
        let mut terms = Vec::new();
        let mut offset = 0;
        for piece in text.split(" + ") {
            terms.push(parse_term(piece, offset)?);
            offset += piece.len() + 3;
        }
        if terms.len() == 1 {
            Ok(terms.pop().unwrap())
        } else {
            Ok(ScalarExpr::Sum(terms))
        }
    }
}

impl VectorExpr {
    pub fn constant(ux: f64, uy: f64) -> VectorExpr {
        VectorExpr::Components(ScalarExpr::Constant(ux), ScalarExpr::Constant(uy))
    }

    pub fn value(&self, x: f64, y: f64) -> [f64; 2] {
        match self {
            VectorExpr::Components(a, b) => [a.value(x, y), b.value(x, y)],
            VectorExpr::Stream(psi) => {
                let g = psi.gradient(x, y);
                [g[1], -g[0]]
            }
        }
    }

    pub fn parse(text: &str) -> Result<VectorExpr, ExprError> {
        let lead = text.len() - text.trim_start().len();
        let trimmed = text.trim();
        let (head, rest) = split_word(trimmed);
        let rest_offset = lead + trimmed.len() - rest.len();
        match head {
            "constant" => {
                let nums = numbers(rest, rest_offset)?;
                if nums.len() != 2 {
                    return Err(ExprError {
                        offset: rest_offset,
                        message: format!("constant vector takes 2 numbers, got {}", nums.len()),
                    });
                }
                Ok(VectorExpr::constant(nums[0], nums[1]))
            }
            "components" => {
                let Some(split) = rest.find(';') else {
                    return Err(ExprError {
                        offset: rest_offset,
                        message: "components needs two scalars separated by ';'".into(),
                    });
                };
                let a = ScalarExpr::parse(&rest[..split]).map_err(|e| shift(e, rest_offset))?;
                let b = ScalarExpr::parse(&rest[split + 1..])
                    .map_err(|e| shift(e, rest_offset + split + 1))?;
                Ok(VectorExpr::Components(a, b))
            }
            "stream" => Ok(VectorExpr::Stream(
                ScalarExpr::parse(rest).map_err(|e| shift(e, rest_offset))?,
            )),
            other => Err(ExprError {
                offset: lead,
                message: format!("unknown vector form '{other}' (expected constant, components or stream)"),
            }),
        }
    }
}

fn shift(mut e: ExprError, by: usize) -> ExprError {
    e.offset += by;
    e
}

fn split_word(s: &str) -> (&str, &str) {
    match s.find(char::is_whitespace) {
        Some(p) => (&s[..p], &s[p..]),
        None => (s, ""),
    }
}

fn numbers(s: &str, base: usize) -> Result<Vec<f64>, ExprError> {
    let mut out = Vec::new();
    let mut pos = 0;
    for tok in s.split_whitespace() {
        let at = s[pos..].find(tok).map(|p| p + pos).unwrap_or(pos);
        pos = at + tok.len();
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            _ => {
                return Err(ExprError {
                    offset: base + at,
                    message: format!("expected a finite number, found '{tok}'"),
                })
            }
        }
    }
    Ok(out)
}

fn parse_term(piece: &str, base: usize) -> Result<ScalarExpr, ExprError> {
    let lead = piece.len() - piece.trim_start().len();
    let trimmed = piece.trim();
    let (head, rest) = split_word(trimmed);
    let rest_offset = base + lead + trimmed.len() - rest.len();
    let nums = numbers(rest, rest_offset)?;
    let want = |n: usize| -> Result<(), ExprError> {
        if nums.len() == n {
            Ok(())
        } else {
            Err(ExprError {
                offset: base + lead,
                message: format!("'{head}' takes {n} numbers, got {}", nums.len()),
            })
        }
    };
    match head {
        "constant" => {
            want(1)?;
            Ok(ScalarExpr::Constant(nums[0]))
        }
        "affine" => {
            want(3)?;
            Ok(ScalarExpr::Affine {
                c0: nums[0],
                cx: nums[1],
                cy: nums[2],
            })
        }
        "gaussian" => {
            want(5)?;
            if nums[4] <= 0.0 {
                return Err(ExprError {
                    offset: base + lead,
                    message: "gaussian width must be positive".into(),
                });
            }
            Ok(ScalarExpr::Gaussian {
                c0: nums[0],
                amp: nums[1],
                x0: nums[2],
                y0: nums[3],
                width: nums[4],
            })
        }
        "trig" => {
            want(6)?;
            Ok(ScalarExpr::Trig {
                c0: nums[0],
                amp: nums[1],
                kx: nums[2],
                ky: nums[3],
                px: nums[4],
                py: nums[5],
            })
        }
        other => Err(ExprError {
            offset: base + lead,
            message: format!("unknown expression '{other}'"),
        }),
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarExpr::Constant(c) => write!(f, "constant {c:e}"),
            ScalarExpr::Affine { c0, cx, cy } => write!(f, "affine {c0:e} {cx:e} {cy:e}"),
            ScalarExpr::Gaussian {
                c0,
                amp,
                x0,
                y0,
                width,
            } => write!(f, "gaussian {c0:e} {amp:e} {x0:e} {y0:e} {width:e}"),
            ScalarExpr::Trig {
                c0,
                amp,
                kx,
                ky,
                px,
                py,
            } => write!(f, "trig {c0:e} {amp:e} {kx:e} {ky:e} {px:e} {py:e}"),
            ScalarExpr::Sum(terms) => {
                for (n, t) in terms.iter().enumerate() {
                    if n > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{t}")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for VectorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorExpr::Components(a, b) => write!(f, "components {a} ; {b}"),
            VectorExpr::Stream(s) => write!(f, "stream {s}"),
        }
    }
}
