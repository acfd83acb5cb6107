//! The local ODEs for the Taylor coefficients of a field about a station.
//!
//! Writing `u(x) = Σ_{n≤N} u_n (x−X)ⁿ/n!` in `∂t u = Σ_ℓ L_ℓ ∂ₓ^ℓ u + f(u)` gives,
//! exactly,
//!
//! ```text
//! u̇_n = Σ_{ℓ: n+ℓ≤N} L_ℓ u_{n+ℓ} + r_n + n!·[ξⁿ] f(Σ_m u_m ξ^m/m!)
//! ```
//!
//! where the remainder `r_n` involves only the coupling symbols `u_N^{(k)}`.
//! Only vector cross-sections with constant-matrix operators are supported.

use std::collections::BTreeMap;

use slowvary_algebra::{DependencyTable, Expr, GradedRing, Scalar};

use crate::crosssec::{CrossOp, CrossSpace};
use crate::error::{Error, Result};
use crate::linreduce::{coupling_name, remainder_terms};
use crate::problems::{Evaluator, FieldVar, ProblemSpec};

#[derive(Clone, Debug)]
pub struct LocalSystem {
    pub order: u32,
    pub fields: Vec<String>,
    /// `L_ℓ[i][k]`.
    ops: Vec<Vec<Vec<Expr>>>,
    /// `r_n[i]`, already scaled.
    coupling: Vec<Vec<Expr>>,
}

fn factorial(n: u32) -> Scalar {
    (1..=n as i64).fold(Scalar::one(), |acc, k| &acc * &Scalar::from(k))
}

impl LocalSystem {
    /// Build the system to order `order`; the remainders are multiplied by `coupling_scale`.
    pub fn new(problem: &ProblemSpec, order: u32, coupling_scale: &Expr) -> Result<Self> {
        let CrossSpace::FiniteDim { dim } = problem.space else {
            return Err(Error::VariantMismatch("local ODEs need a vector cross-section".into()));
        };
        let mut ops = Vec::new();
        for op in &problem.stack {
            match op {
                CrossOp::Matrix(m) if m.len() == dim && m.iter().all(|r| r.len() == dim) => ops.push(m.clone()),
                _ => return Err(Error::VariantMismatch("local ODEs need constant matrices".into())),
            }
        }
        let mut coupling = Vec::new();
        for r in remainder_terms(ops.len(), order) {
            let mut rn = vec![Expr::zero(); dim];
            for t in &r.terms {
                for (i, slot) in rn.iter_mut().enumerate() {
                    for (k, field) in problem.fields.iter().enumerate() {
                        let e = &ops[t.op][i][k];
                        if e.is_zero() {
                            continue;
                        }
                        let sym = Expr::coupling(&coupling_name(field, order, t.deriv));
                        slot.add_assign(&(&(e * &sym) * coupling_scale).scale(&Scalar::from(t.coef.clone())));
                    }
                }
            }
            coupling.push(rn);
        }
        Ok(LocalSystem { order, fields: problem.fields.clone(), ops, coupling })
    }

    pub fn dim(&self) -> usize {
        self.fields.len()
    }

    /// `Σ_{ℓ: n+ℓ≤N} L_ℓ u_{n+ℓ} + r_n` where `u[m][i]` is component `i` of `u_m`.
    pub fn linear_rhs(&self, u: &[Vec<Expr>], n: usize) -> Vec<Expr> {
        let mut out = self.coupling[n].clone();
        for (l, op) in self.ops.iter().enumerate() {
            let Some(um) = u.get(n + l) else { break };
            for (i, slot) in out.iter_mut().enumerate() {
                for (k, e) in op[i].iter().enumerate() {
                    if !e.is_zero() {
                        slot.add_assign(&(e * &um[k]));
                    }
                }
            }
        }
        out
    }

    /// `n!·[ξⁿ] f(Σ_m u_m ξ^m/m!)` per component, products truncated in `ring`.
    ///
    /// `params` gives the value of each parameter symbol in the nonlinearity.
    pub fn nonlinear_rhs(
        &self,
        problem: &ProblemSpec,
        u: &[Vec<Expr>],
        n: usize,
        params: &BTreeMap<String, Expr>,
        ring: &GradedRing,
    ) -> Result<Vec<Expr>> {
        let mut out = vec![Expr::zero(); self.dim()];
        for (slot, f) in out.iter_mut().zip(&problem.nonlinearity) {
            let mut ev = SeriesEval { sys: self, u, params, ring, degree: n };
            let series = f.eval(&mut ev)?;
            *slot = series[n].scale(&factorial(n as u32));
        }
        Ok(out)
    }

    /// Residual `−d/dt u_n + rhs` of the equations for `u_n`.
    pub fn residual_at(
        &self,
        problem: &ProblemSpec,
        u: &[Vec<Expr>],
        n: usize,
        deps: &DependencyTable,
        nonlinear: Option<(&BTreeMap<String, Expr>, &GradedRing)>,
    ) -> Result<Vec<Expr>> {
        let mut r = self.linear_rhs(u, n);
        if let Some((params, ring)) = nonlinear {
            let f = self.nonlinear_rhs(problem, u, n, params, ring)?;
            for (ri, fi) in r.iter_mut().zip(&f) {
                ri.add_assign(fi);
            }
        }
        for (ri, ui) in r.iter_mut().zip(&u[n]) {
            ri.sub_assign(&slowvary_algebra::ddt(ui, deps)?);
            if let Some((_, ring)) = nonlinear {
                *ri = ring.truncate(ri);
            }
        }
        Ok(r)
    }

    /// [`LocalSystem::residual_at`] for every `n`, as `res[n][i]`.
    pub fn residual(
        &self,
        problem: &ProblemSpec,
        u: &[Vec<Expr>],
        deps: &DependencyTable,
        nonlinear: Option<(&BTreeMap<String, Expr>, &GradedRing)>,
    ) -> Result<Vec<Vec<Expr>>> {
        (0..u.len()).map(|n| self.residual_at(problem, u, n, deps, nonlinear)).collect()
    }
}

/// Truncated power series in `ξ` with coefficients `a_m` of `ξ^m` (not `ξ^m/m!`).
struct SeriesEval<'a> {
    sys: &'a LocalSystem,
    u: &'a [Vec<Expr>],
    params: &'a BTreeMap<String, Expr>,
    ring: &'a GradedRing,
    degree: usize,
}

impl Evaluator for SeriesEval<'_> {
    type Value = Vec<Expr>;
    type Error = Error;

    fn var(&mut self, v: &FieldVar) -> Result<Vec<Expr>> {
        let mut out = vec![Expr::zero(); self.degree + 1];
        if let Some(p) = self.params.get(&v.name) {
            if v.deriv > 0 {
                return Err(Error::Invalid(format!("parameter '{}' cannot be differentiated", v.name)));
            }
            out[0] = p.clone();
            return Ok(out);
        }
        let i = self
            .sys
            .fields
            .iter()
            .position(|f| *f == v.name)
            .ok_or_else(|| Error::Invalid(format!("unknown field '{}'", v.name)))?;
        // ∂ₓ^k shifts the Taylor coefficients down by k
        for (m, slot) in out.iter_mut().enumerate() {
            if let Some(um) = self.u.get(m + v.deriv as usize) {
                *slot = um[i].scale(&factorial(m as u32).inv().expect("nonzero"));
            }
        }
        Ok(out)
    }

    fn constant(&self, c: &Scalar) -> Vec<Expr> {
        let mut out = vec![Expr::zero(); self.degree + 1];
        out[0] = Expr::constant(c.clone());
        out
    }

    fn mul(&self, a: &Vec<Expr>, b: &Vec<Expr>) -> Result<Vec<Expr>> {
        let mut out = vec![Expr::zero(); self.degree + 1];
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate().take(self.degree + 1 - i) {
                if !bj.is_zero() {
                    out[i + j].add_assign(&self.ring.mul(ai, bj));
                }
            }
        }
        Ok(out)
    }

    fn add(&self, acc: &mut Vec<Expr>, x: &Vec<Expr>) {
        for (a, b) in acc.iter_mut().zip(x) {
            a.add_assign(b);
        }
    }
}
