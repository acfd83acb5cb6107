//! Linear slowly-varying models: the generalised eigenvector recursion.
//!
//! For `∂t u = Σ_ℓ L_ℓ ∂ₓ^ℓ u` the recursion
//!
//! ```text
//! A_n = Σ_{k=1}^n ⟨Z₀, L_k V_{n−k}⟩
//! L₀V_n − V_n A₀ = −Σ_{k=1}^n L_k V_{n−k} + Σ_{k=1}^n V_{n−k} A_k,   ⟨Z₀,V_n⟩ = 0
//! ```
//!
//! gives the model `∂t c = Σ_n A_n ∂ₓⁿ c`.

use slowvary_algebra::{BigInt, Expr, Scalar};

use crate::crosssec::{apply_op, inner, linv_static, CrossField, CrossOp, CrossSpace, SpectralData};
use crate::error::{Error, Result};
use crate::problems::{validate_spec, ProblemSpec};
use crate::report::{x_derivative, Entry, ModelReport};

/// An `m × m` matrix of expressions, row-major.
pub type Matrix = Vec<Vec<Expr>>;

/// One term `coef · L_op · u_N^{(deriv)}` of a remainder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemainderTerm {
    pub coef: BigInt,
    pub op: usize,
    pub deriv: u32,
}

/// The coupling remainder `r_n` of the local equation for `u_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Remainder {
    pub n: u32,
    pub terms: Vec<RemainderTerm>,
}

#[derive(Clone, Debug)]
pub struct LinearReduction {
    pub order: u32,
    /// `A₀ … A_N`.
    pub a: Vec<Matrix>,
    /// `V₀ … V_N`, one field per slow direction.
    pub v: Vec<Vec<CrossField>>,
    pub remainders: Vec<Remainder>,
}

fn a0_matrix(spec: &SpectralData) -> Matrix {
    spec.a0.iter().map(|row| row.iter().map(|s| Expr::constant(s.clone())).collect()).collect()
}

fn op_at(stack: &[CrossOp], k: usize) -> Option<&CrossOp> {
    stack.get(k).filter(|op| !op.is_zero())
}

/// `(V·A)_j = Σ_i V_i A_{ij}`.
fn times_matrix(v: &[CrossField], a: &Matrix) -> Vec<CrossField> {
    (0..a.first().map_or(0, Vec::len))
        .map(|j| {
            let mut out = CrossField::zero();
            for (i, vi) in v.iter().enumerate() {
                out.add_assign(&vi.mul_expr(&a[i][j]));
            }
            out
        })
        .collect()
}

fn apply_cols(space: &CrossSpace, op: &CrossOp, v: &[CrossField]) -> Result<Vec<CrossField>> {
    v.iter().map(|c| apply_op(space, op, c)).collect()
}

/// Run the recursion to order `order`.
pub fn reduce_linear(problem: &ProblemSpec, order: u32) -> Result<LinearReduction> {
    validate_spec(&problem.linearized(), order)?;
    let space = &problem.space;
    let stack = &problem.stack;
    let spec = &problem.spectral;
    let m = spec.dim();
    let mut a = vec![a0_matrix(spec)];
    let mut v = vec![spec.v0.clone()];
    for n in 1..=order as usize {
        // images L_k V_{n−k}, reused for A_n and the right-hand side
        let mut images: Vec<Vec<CrossField>> = Vec::new();
        for k in 1..=n {
            images.push(match op_at(stack, k) {
                Some(op) => apply_cols(space, op, &v[n - k])?,
                None => vec![CrossField::zero(); m],
            });
        }
        let an: Matrix = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let mut acc = Expr::zero();
                        for img in &images {
                            acc.add_assign(&inner(space, &spec.z0[i], &img[j]));
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        a.push(an);
        let mut rhs = vec![CrossField::zero(); m];
        for (k, img) in (1..=n).zip(&images) {
            let va = times_matrix(&v[n - k], &a[k]);
            for j in 0..m {
                rhs[j] = &(&rhs[j] - &img[j]) + &va[j];
            }
        }
        for (j, r) in rhs.iter().enumerate() {
            if spec.project(space, r).iter().any(|p| !p.is_zero()) {
                return Err(Error::Unsolvable(format!("order {n}, column {j}: right-hand side has a slow component")));
            }
        }
        v.push(linv_static(space, &stack[0], spec, &rhs)?);
    }
    let red = LinearReduction { order, a, v, remainders: remainder_terms(stack.len(), order) };
    check_recursion(problem, &red)?;
    Ok(red)
}

/// Re-verify every recursion step and the orthogonality `⟨Z₀,V_n⟩ = 0`.
fn check_recursion(problem: &ProblemSpec, red: &LinearReduction) -> Result<()> {
    let space = &problem.space;
    for n in 1..red.v.len() {
        for (j, vn) in red.v[n].iter().enumerate() {
            if problem.spectral.project(space, vn).iter().any(|p| !p.is_zero()) {
                return Err(Error::Inconsistent(format!("<Z0,V{n}> != 0 in column {j}")));
            }
        }
    }
    let (_, _) = assemble_toeplitz(problem, red)?;
    Ok(())
}

/// Block upper-triangular Toeplitz matrix: block `(i, j)` is `diagonals[j − i]` for `j ≥ i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockToeplitz<T> {
    pub diagonals: Vec<T>,
}

impl<T> BlockToeplitz<T> {
    pub fn size(&self) -> usize {
        self.diagonals.len()
    }

    pub fn block(&self, i: usize, j: usize) -> Option<&T> {
        if j >= i {
            self.diagonals.get(j - i)
        } else {
            None
        }
    }
}

/// Assemble `cV` and `cA` and verify `cL·cV = cV·cA` block by block.
pub fn assemble_toeplitz(
    problem: &ProblemSpec,
    red: &LinearReduction,
) -> Result<(BlockToeplitz<Vec<CrossField>>, BlockToeplitz<Matrix>)> {
    let space = &problem.space;
    let cv = BlockToeplitz { diagonals: red.v.clone() };
    let ca = BlockToeplitz { diagonals: red.a.clone() };
    let size = cv.size();
    let m = problem.spectral.dim();
    for i in 0..size {
        for j in i..size {
            let mut lhs = vec![CrossField::zero(); m];
            let mut rhs = vec![CrossField::zero(); m];
            for k in i..=j {
                if let Some(op) = op_at(&problem.stack, k - i) {
                    let img = apply_cols(space, op, cv.block(k, j).expect("upper block"))?;
                    for (l, x) in lhs.iter_mut().zip(&img) {
                        l.add_assign(x);
                    }
                }
                let prod = times_matrix(cv.block(i, k).expect("upper block"), ca.block(k, j).expect("upper block"));
                for (r, x) in rhs.iter_mut().zip(&prod) {
                    r.add_assign(x);
                }
            }
            if lhs != rhs {
                return Err(Error::Inconsistent(format!("L*cV != cV*cA at block ({i}, {j})")));
            }
        }
    }
    Ok((cv, ca))
}

fn binomial(n: u32, k: u32) -> BigInt {
    let mut out = BigInt::from(1);
    for i in 0..k {
        out = out * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    out
}

/// `r_n = Σ_{k≥1} binom(k+N, N) L_{k+N−n} u_N^{(k)}` for `n = 0 … N`, for a stack of `stack_len` operators.
pub fn remainder_terms(stack_len: usize, order: u32) -> Vec<Remainder> {
    (0..=order)
        .map(|n| {
            let mut terms = Vec::new();
            for k in 1u32.. {
                let op = (k + order - n) as usize;
                if op >= stack_len {
                    break;
                }
                terms.push(RemainderTerm { coef: binomial(k + order, order), op, deriv: k });
            }
            Remainder { n, terms }
        })
        .collect()
}

/// Coupling symbol for the `k`-th `x`-derivative of component `field` at order `n`, like `d4x`.
pub fn coupling_name(field: &str, n: u32, k: u32) -> String {
    format!("{field}{n}{}", "x".repeat(k as usize))
}

/// Render `r_n`; on vector cross-sections the operators are applied to the coupling vector.
pub fn render_remainder(problem: &ProblemSpec, order: u32, r: &Remainder) -> Result<String> {
    if r.terms.is_empty() {
        return Ok("0".into());
    }
    if let CrossSpace::FiniteDim { .. } = problem.space {
        let mut acc = CrossField::zero();
        for t in &r.terms {
            let u = CrossField::from_vec(
                problem.fields.iter().map(|f| Expr::coupling(&coupling_name(f, order, t.deriv))).collect(),
            );
            let img = apply_op(&problem.space, &problem.stack[t.op], &u)?;
            acc.add_assign(&img.scale(&Scalar::from(t.coef.clone())));
        }
        return Ok(acc.render(&problem.space));
    }
    let field = &problem.fields[0];
    let parts: Vec<String> = r
        .terms
        .iter()
        .map(|t| format!("{}*L{}[{}]", t.coef, t.op, coupling_name(field, order, t.deriv)))
        .collect();
    Ok(parts.join(" + "))
}

/// Render a coefficient matrix: a scalar for one slow direction, `diag(…)` when diagonal.
pub fn render_matrix(a: &Matrix) -> String {
    if a.len() == 1 {
        return a[0][0].to_string();
    }
    let diagonal = a.iter().enumerate().all(|(i, row)| row.iter().enumerate().all(|(j, e)| i == j || e.is_zero()));
    if diagonal {
        let d: Vec<String> = a.iter().enumerate().map(|(i, row)| row[i].to_string()).collect();
        return format!("diag({})", d.join(", "));
    }
    let rows: Vec<String> = a
        .iter()
        .map(|row| format!("[{}]", row.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")))
        .collect();
    format!("[{}]", rows.join(", "))
}

/// `Σ_n Σ_j (A_n)_{ij} ∂ₓⁿ c_j` for each amplitude `c_i`.
pub fn model_rhs(problem: &ProblemSpec, a: &[Matrix]) -> Vec<Expr> {
    let amps = &problem.amplitudes;
    (0..amps.len())
        .map(|i| {
            let mut acc = Expr::zero();
            for (n, an) in a.iter().enumerate() {
                for (j, amp) in amps.iter().enumerate() {
                    acc.add_assign(&(&an[i][j] * &Expr::slow(&x_derivative(amp, n as u32))));
                }
            }
            acc
        })
        .collect()
}

/// Amplitude `i`'s right-hand side written as `Σ coefficient*derivative`, lowest derivative first.
pub fn grouped_rhs(problem: &ProblemSpec, a: &[Matrix], i: usize) -> String {
    let mut out = String::new();
    for (n, an) in a.iter().enumerate() {
        for (j, amp) in problem.amplitudes.iter().enumerate() {
            let coef = &an[i][j];
            if coef.is_zero() {
                continue;
            }
            let var = x_derivative(amp, n as u32);
            let text = coef.to_string();
            let (neg, body) = match (coef.len(), text.strip_prefix('-')) {
                (1, Some(rest)) => (true, rest.to_string()),
                (1, None) => (false, text),
                _ => (false, format!("({text})")),
            };
            let term = if body == "1" { var } else { format!("{body}*{var}") };
            match (out.is_empty(), neg) {
                (true, false) => out.push_str(&term),
                (true, true) => out.push_str(&format!("-{term}")),
                (false, false) => out.push_str(&format!(" + {term}")),
                (false, true) => out.push_str(&format!(" - {term}")),
            }
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// The slowly-varying PDE `∂t c = Σ_n A_n ∂ₓⁿ c` with its coupling remainders.
pub fn emit_slow_pde(problem: &ProblemSpec, red: &LinearReduction) -> Result<ModelReport> {
    let mut rep = ModelReport::new(&problem.name, "linear", red.order);
    rep.grading = "x-derivative order".into();
    rep.params = problem.params.iter().map(|p| Entry::new(&p.key, &p.value)).collect();
    rep.amplitudes = problem.amplitudes.clone();
    for (n, an) in red.a.iter().enumerate() {
        rep.coefficients.push(Entry::new(format!("A{n}"), render_matrix(an)));
    }
    for (n, vn) in red.v.iter().enumerate() {
        for (j, f) in vn.iter().enumerate() {
            let key = if vn.len() == 1 { format!("V{n}") } else { format!("V{n}[{}]", problem.amplitudes[j]) };
            rep.manifold.push(Entry::new(key, f.render(&problem.space)));
        }
    }
    for (i, amp) in problem.amplitudes.iter().enumerate() {
        rep.evolution.push(Entry::new(amp, grouped_rhs(problem, &red.a, i)));
    }
    for r in &red.remainders {
        rep.coupling_error.push(Entry::new(format!("r{}", r.n), render_remainder(problem, red.order, r)?));
    }
    rep.notes.push(format!(
        "coupling enters through u_{n}^(k), k >= 1, of size O(d_x^{} u)",
        red.order + 1,
        n = red.order
    ));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::builtin;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(4, 0), BigInt::from(1));
    }

    #[test]
    fn second_order_stack_remainders() {
        let r = remainder_terms(3, 4);
        assert!(r[..3].iter().all(|x| x.terms.is_empty()));
        assert_eq!(r[3].terms, vec![RemainderTerm { coef: 5.into(), op: 2, deriv: 1 }]);
        assert_eq!(
            r[4].terms,
            vec![RemainderTerm { coef: 5.into(), op: 1, deriv: 1 }, RemainderTerm { coef: 15.into(), op: 2, deriv: 2 }]
        );
        assert!(remainder_terms(1, 3).iter().all(|x| x.terms.is_empty()));
    }

    #[test]
    fn heat_exchanger_remainder_is_the_swapped_coupling() {
        let p = builtin("heat-exchanger-linear").unwrap();
        let red = reduce_linear(&p, 4).unwrap();
        assert_eq!(render_remainder(&p, 4, &red.remainders[4]).unwrap(), "(5*d4x, 5*c4x)");
    }

    #[test]
    fn order_zero_is_the_eigendata() {
        let p = builtin("shear-dispersion").unwrap();
        let red = reduce_linear(&p, 0).unwrap();
        let (cv, ca) = assemble_toeplitz(&p, &red).unwrap();
        assert_eq!(cv.size(), 1);
        assert_eq!(ca.diagonals[0], vec![vec![Expr::zero()]]);
    }
}
