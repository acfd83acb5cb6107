//! Exact expressions to double precision.

use std::collections::BTreeMap;

use num_complex::Complex64;
use slowvary::problems::{ParamValue, ProblemSpec};
use slowvary_algebra::{Expr, Factor, Scalar};

use crate::error::{Result, VerifyError};

/// Numeric values of parameter symbols such as `Pe` or `r`.
pub type Values = BTreeMap<String, f64>;

pub fn scalar(s: &Scalar) -> Complex64 {
    let (re, im) = s.to_f64_pair();
    Complex64::new(re, im)
}

/// Evaluate an expression whose symbols are all in `values`.
pub fn eval(e: &Expr, values: &Values) -> Result<Complex64> {
    let mut out = Complex64::new(0.0, 0.0);
    for (m, c) in e.terms() {
        let mut t = scalar(c);
        for (f, p) in m.factors() {
            let Factor::Sym(s) = f else {
                return Err(VerifyError::Expression(format!("history convolution in '{e}'")));
            };
            let v = values
                .get(s.name())
                .ok_or_else(|| VerifyError::Expression(format!("no value for '{}'", s.name())))?;
            t *= v.powi(p as i32);
        }
        out += t;
    }
    Ok(out)
}

/// Values of the problem's parameters by key, with symbolic ones looked up in `values`.
pub fn param_values(problem: &ProblemSpec, values: &Values) -> Result<Values> {
    let mut out = values.clone();
    for p in &problem.params {
        let v = match &p.value {
            ParamValue::Number(r) => scalar(&Scalar::real(r.clone())).re,
            ParamValue::Symbol(s) => *values
                .get(s)
                .ok_or_else(|| VerifyError::Config(format!("parameter '{s}' needs a numeric value")))?,
        };
        out.insert(p.key.clone(), v);
    }
    Ok(out)
}

/// `Σ_n M_n (ik)^n` for a list of square matrices.
pub fn matrix_symbol(ms: &[Vec<Vec<Expr>>], k: f64, values: &Values) -> Result<Vec<Vec<Complex64>>> {
    let dim = ms.first().map_or(0, Vec::len);
    let mut out = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    let ik = Complex64::new(0.0, k);
    for (n, m) in ms.iter().enumerate() {
        let w = ik.powi(n as i32);
        for (i, row) in m.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                if !e.is_zero() {
                    out[i][j] += eval(e, values)? * w;
                }
            }
        }
    }
    Ok(out)
}
