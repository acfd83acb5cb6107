//! Nonlinear slow manifolds with uncertain coupling.
//!
//! Two constructions are provided. The direct one iterates the local ODEs of
//! the Taylor coefficients `u_n`, each slow coefficient `c_n` carrying order
//! `εⁿ⁺¹`. The generating-polynomial one packages the coefficients into
//! `ũ(ξ)`, with amplitude `a(ξ)` and its derivatives `a^{(k)}` (`c_xi2`, …),
//! and solves
//!
//! ```text
//! ∂t ũ = Σ_ℓ ε^ℓ L_ℓ ∂_ξ^ℓ ũ + f(ũ, ε∂_ξũ, …) + r[u]
//! ```
//!
//! in the ring truncated at combined `ε`/`ξ` order `N + offset`. Both agree
//! once `a^{(k)} = Σ_{n≥k} ξ^{n−k}/(n−k)! c_n` is substituted.

use std::collections::BTreeMap;

use slowvary_algebra::{conv, ddt, BigInt, DependencyTable, Expr, GradedRing, Scalar, Symbol};

use crate::crosssec::{apply_op, decay_rate, linv_residual, mul_fields, CrossField, CrossSpace};
use crate::error::{Error, Result};
use crate::linreduce::{coupling_name, render_matrix, Matrix};
use crate::local::LocalSystem;
use crate::problems::{validate_spec, Evaluator, FieldVar, ProblemSpec};
use crate::report::{x_derivative, Entry, ModelReport};

/// Iteration cap for both constructions.
pub const MAX_ITERATIONS: usize = 99;
/// The order-counting symbol.
pub const EPS: &str = "eps";
/// The generating variable.
pub const XI: &str = "xi";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Direct,
    Generating,
}

#[derive(Clone, Debug)]
pub struct SlowManifold {
    pub method: Method,
    pub order: u32,
    /// Terms of combined order `bound` and higher are dropped.
    pub bound: u32,
    pub amplitudes: Vec<String>,
    /// Generating: the single field `ũ`. Direct: `u_0 … u_N`.
    pub field: Vec<CrossField>,
    /// Generating: `[g_j]`. Direct: `evolution[n][j]` is `ċ_{j,n}`.
    pub evolution: Vec<Vec<Expr>>,
    pub iterations: usize,
    pub log: Vec<String>,
}

fn eps() -> Symbol {
    Symbol::slow(EPS)
}

fn xi() -> Symbol {
    Symbol::slow(XI)
}

fn eps_pow(k: u32) -> Expr {
    Expr::sym(&eps()).pow(k)
}

/// Amplitude derivative `a^{(k)}` in the generating polynomial: `c`, `c_xi`, `c_xi2`, …
pub fn amplitude_name(amp: &str, k: u32) -> String {
    match k {
        0 => amp.to_string(),
        1 => format!("{amp}_xi"),
        _ => format!("{amp}_xi{k}"),
    }
}

/// Taylor coefficient `c_n` of the direct construction: `c0`, `c1`, …
pub fn coefficient_name(amp: &str, n: u32) -> String {
    format!("{amp}{n}")
}

/// Coupling symbol of harmonic `p` on a periodic cross-section, like `u2xx_m1`.
pub fn fourier_coupling_name(field: &str, n: u32, k: u32, p: i64) -> String {
    let tag = match p {
        0 => "0".to_string(),
        p if p > 0 => format!("p{p}"),
        p => format!("m{}", -p),
    };
    format!("{}_{tag}", coupling_name(field, n, k))
}

/// The truncation ring: `ε` and `ξ` both count one order.
pub fn truncation_ring(bound: u32) -> GradedRing {
    GradedRing::new(bound).with_weight(&eps(), 1).with_weight(&xi(), 1)
}

fn factorial(n: u32) -> BigInt {
    (1..=n as u64).fold(BigInt::from(1), |acc, k| acc * BigInt::from(k))
}

fn binomial(n: u32, k: u32) -> BigInt {
    factorial(n) / (factorial(k) * factorial(n - k))
}

fn inv_factorial(n: u32) -> Scalar {
    Scalar::from(factorial(n)).inv().expect("nonzero factorial")
}

/// Parameter values with their order weights applied: `p ↦ ε^w p`.
fn scaled_params(problem: &ProblemSpec) -> BTreeMap<String, Expr> {
    problem.params.iter().map(|p| (p.key.clone(), &eps_pow(p.weight) * &p.value.expr())).collect()
}

fn constants(problem: &ProblemSpec) -> DependencyTable {
    let mut deps = DependencyTable::new();
    deps.constant(eps()).constant(xi());
    for s in problem.param_symbols() {
        deps.constant(s);
    }
    deps
}

/// `U^{(k)}`: the coupling field of `k`-th derivatives of `u_N`.
fn coupling_field(problem: &ProblemSpec, order: u32, k: u32, modes: i64) -> Result<CrossField> {
    match problem.space {
        CrossSpace::FiniteDim { .. } => Ok(CrossField::from_vec(
            problem.fields.iter().map(|f| Expr::coupling(&coupling_name(f, order, k))).collect(),
        )),
        CrossSpace::PeriodicFourier { .. } => {
            let mut out = CrossField::zero();
            for p in -modes..=modes {
                out.add_at(p, &Expr::coupling(&fourier_coupling_name(&problem.fields[0], order, k, p)));
            }
            Ok(out)
        }
        CrossSpace::NeumannChannel { .. } => {
            Err(Error::VariantMismatch("coupling fields on channel cross-sections are not supported".into()))
        }
    }
}

/// `r[u] = Σ_{ℓ≥1} Σ_{n=max(N−ℓ+1,0)}^{N} binom(n+ℓ,N) ε^{N+1−n} ξⁿ/n! L_ℓ U^{(n+ℓ−N)}`.
pub fn assemble_coupling(problem: &ProblemSpec, order: u32, modes: i64) -> Result<CrossField> {
    let mut out = CrossField::zero();
    for (l, op) in problem.stack.iter().enumerate().skip(1) {
        if op.is_zero() {
            continue;
        }
        let l = l as u32;
        for n in (order + 1).saturating_sub(l)..=order {
            let k = n + l - order;
            let img = apply_op(&problem.space, op, &coupling_field(problem, order, k, modes)?)?;
            let weight = &(&eps_pow(order + 1 - n) * &Expr::sym(&xi()).pow(n))
                .scale(&(&Scalar::from(binomial(n + l, order)) * &inv_factorial(n)));
            out.add_assign(&img.mul_expr(weight));
        }
    }
    Ok(out)
}

/// Amplitude symbol table for the generating construction, derivatives up to `max`.
struct Amplitudes {
    names: Vec<String>,
    max: u32,
    index: BTreeMap<Symbol, (usize, u32)>,
}

impl Amplitudes {
    fn new(names: &[String], max: u32) -> Self {
        let mut index = BTreeMap::new();
        for (j, a) in names.iter().enumerate() {
            for k in 0..=max {
                index.insert(Symbol::slow(&amplitude_name(a, k)), (j, k));
            }
        }
        Amplitudes { names: names.to_vec(), max, index }
    }

    fn sym(&self, j: usize, k: u32) -> Symbol {
        Symbol::slow(&amplitude_name(&self.names[j], k))
    }

    /// `∂_ξ`: `ξ ↦ 1`, `a^{(k)} ↦ a^{(k+1)}`.
    fn dxi(&self, e: &Expr) -> Expr {
        let r: std::result::Result<Expr, ()> = e.derive(
            |s| {
                if *s == xi() {
                    return Ok(Some(Expr::one()));
                }
                Ok(match self.index.get(s) {
                    // past the table the term is below the truncation bound anyway
                    Some(&(j, k)) if k < self.max => Some(Expr::sym(&self.sym(j, k + 1))),
                    _ => None,
                })
            },
            |_| Ok(None),
        );
        r.expect("infallible")
    }

    fn dxi_field(&self, f: &CrossField) -> CrossField {
        f.map(|e| self.dxi(e))
    }
}

struct ExprEval<'a> {
    comps: &'a [Vec<Expr>],
    fields: &'a [String],
    params: &'a BTreeMap<String, Expr>,
    ring: &'a GradedRing,
}

impl Evaluator for ExprEval<'_> {
    type Value = Expr;
    type Error = Error;

    fn var(&mut self, v: &FieldVar) -> Result<Expr> {
        if let Some(p) = self.params.get(&v.name) {
            return Ok(p.clone());
        }
        let i = self
            .fields
            .iter()
            .position(|f| *f == v.name)
            .ok_or_else(|| Error::Invalid(format!("unknown field '{}'", v.name)))?;
        Ok(self.comps.get(v.deriv as usize).map(|d| d[i].clone()).unwrap_or_else(Expr::zero))
    }

    fn constant(&self, c: &Scalar) -> Expr {
        Expr::constant(c.clone())
    }

    fn mul(&self, a: &Expr, b: &Expr) -> Result<Expr> {
        Ok(self.ring.mul(a, b))
    }

    fn add(&self, acc: &mut Expr, x: &Expr) {
        acc.add_assign(x);
    }
}

struct FieldEval<'a> {
    space: &'a CrossSpace,
    derivs: &'a [CrossField],
    field: &'a str,
    params: &'a BTreeMap<String, Expr>,
    ring: &'a GradedRing,
}

impl Evaluator for FieldEval<'_> {
    type Value = CrossField;
    type Error = Error;

    fn var(&mut self, v: &FieldVar) -> Result<CrossField> {
        if let Some(p) = self.params.get(&v.name) {
            return Ok(CrossField::scalar(p.clone()));
        }
        if v.name != self.field {
            return Err(Error::Invalid(format!("unknown field '{}'", v.name)));
        }
        Ok(self.derivs.get(v.deriv as usize).cloned().unwrap_or_else(CrossField::zero))
    }

    fn constant(&self, c: &Scalar) -> CrossField {
        CrossField::scalar(Expr::constant(c.clone()))
    }

    fn mul(&self, a: &CrossField, b: &CrossField) -> Result<CrossField> {
        mul_fields(self.space, a, b, self.ring)
    }

    fn add(&self, acc: &mut CrossField, x: &CrossField) {
        acc.add_assign(x);
    }
}

struct Generating<'a> {
    problem: &'a ProblemSpec,
    amps: Amplitudes,
    ring: GradedRing,
    params: BTreeMap<String, Expr>,
    coupling: CrossField,
    max_deriv: u32,
}

impl Generating<'_> {
    fn deps(&self, g: &[Expr]) -> DependencyTable {
        let mut deps = constants(self.problem);
        for (j, gj) in g.iter().enumerate() {
            let mut d = gj.clone();
            for k in 0..self.amps.max {
                deps.rule(self.amps.sym(j, k), d.clone());
                d = self.amps.dxi(&d);
            }
        }
        deps
    }

    /// `ε^k ∂_ξ^k ũ` for `k = 0 … max_deriv`.
    fn scaled_derivatives(&self, u: &CrossField) -> Vec<CrossField> {
        let mut out = vec![u.clone()];
        for k in 1..=self.max_deriv {
            let next = self.amps.dxi_field(&out[k as usize - 1]).mul_expr(&Expr::sym(&eps()));
            out.push(self.ring_field(&next));
        }
        out
    }

    fn ring_field(&self, f: &CrossField) -> CrossField {
        f.truncate(&self.ring)
    }

    fn nonlinear(&self, derivs: &[CrossField]) -> Result<CrossField> {
        let p = self.problem;
        if p.is_linear() {
            return Ok(CrossField::zero());
        }
        match p.space {
            CrossSpace::FiniteDim { .. } => {
                let comps: Vec<Vec<Expr>> =
                    derivs.iter().map(|d| (0..p.fields.len()).map(|i| d.get(i as i64)).collect()).collect();
                let mut out = Vec::new();
                for f in &p.nonlinearity {
                    let mut ev = ExprEval { comps: &comps, fields: &p.fields, params: &self.params, ring: &self.ring };
                    out.push(f.eval(&mut ev)?);
                }
                Ok(CrossField::from_vec(out))
            }
            _ => {
                let mut ev = FieldEval {
                    space: &p.space,
                    derivs,
                    field: &p.fields[0],
                    params: &self.params,
                    ring: &self.ring,
                };
                p.nonlinearity[0].eval(&mut ev)
            }
        }
    }

    fn residual(&self, u: &CrossField, g: &[Expr]) -> Result<CrossField> {
        let p = self.problem;
        let deps = self.deps(g);
        let mut res = u.try_map(|e| ddt(e, &deps))?.scale(&Scalar::from(-1));
        let derivs = self.scaled_derivatives(u);
        for (l, op) in p.stack.iter().enumerate() {
            if op.is_zero() {
                continue;
            }
            let dl = match derivs.get(l) {
                Some(d) => d.clone(),
                None => {
                    let mut d = derivs.last().expect("nonempty").clone();
                    for _ in derivs.len()..=l {
                        d = self.ring_field(&self.amps.dxi_field(&d).mul_expr(&Expr::sym(&eps())));
                    }
                    d
                }
            };
            res.add_assign(&apply_op(&p.space, op, &dl)?);
        }
        res.add_assign(&self.nonlinear(&derivs)?);
        res.add_assign(&self.coupling);
        Ok(self.ring_field(&res))
    }
}

fn check_nonlinear(problem: &ProblemSpec, order: u32) -> Result<u32> {
    validate_spec(problem, order)?;
    if problem.spectral.a0.iter().flatten().any(|a| !a.is_zero()) {
        return Err(Error::Unsolvable("nonlinear constructions need A0 = 0".into()));
    }
    Ok(order + problem.error_offset)
}

fn residual_size(f: &CrossField) -> usize {
    f.entries().map(|(_, e)| e.len()).sum()
}

/// Highest `x`-derivative in the operator stack or the nonlinearity.
fn max_derivative(problem: &ProblemSpec) -> u32 {
    problem
        .nonlinearity
        .iter()
        .flat_map(|f| f.terms().flat_map(|(p, _)| p.keys().map(|v| v.deriv).collect::<Vec<_>>()))
        .max()
        .unwrap_or(0)
        .max(problem.stack.len() as u32 - 1)
}

/// Every ξ-derivative of `ũ` carries a factor ε, so amplitude derivatives past this vanish.
fn derivative_limit(problem: &ProblemSpec, bound: u32) -> u32 {
    bound + max_derivative(problem) + 1
}

/// The generating-polynomial construction.
pub fn reduce_nonlinear(problem: &ProblemSpec, order: u32) -> Result<SlowManifold> {
    let bound = check_nonlinear(problem, order)?;
    let max_deriv = max_derivative(problem);
    let ctx = Generating {
        problem,
        amps: Amplitudes::new(&problem.amplitudes, derivative_limit(problem, bound)),
        ring: truncation_ring(bound),
        params: scaled_params(problem),
        coupling: assemble_coupling(problem, order, problem.coupling_modes)?,
        max_deriv,
    };
    let m = problem.spectral.dim();
    let amps: Vec<Expr> = (0..m).map(|j| Expr::sym(&ctx.amps.sym(j, 0))).collect();
    let mut u = problem.spectral.combine(&amps).mul_expr(&Expr::sym(&eps()));
    let mut g = vec![Expr::zero(); m];
    let mut log = Vec::new();
    for iter in 1..=MAX_ITERATIONS {
        let res = ctx.residual(&u, &g)?;
        let size = residual_size(&res);
        log.push(format!("iteration {iter}: {size} residual terms"));
        if size == 0 {
            return Ok(SlowManifold {
                method: Method::Generating,
                order,
                bound,
                amplitudes: problem.amplitudes.clone(),
                field: vec![u],
                evolution: vec![g],
                iterations: iter,
                log,
            });
        }
        let proj = problem.spectral.project(&problem.space, &res);
        for (gj, pj) in g.iter_mut().zip(&proj) {
            let q = pj
                .div_sym_pow(&eps(), 1)
                .ok_or_else(|| Error::Inconsistent(format!("slow residual {pj} is not of positive order")))?;
            gj.add_assign(&q);
        }
        let rest = &res - &problem.spectral.combine(&proj);
        u.add_assign(&linv_residual(&problem.space, &problem.stack[0], &rest)?);
        u = ctx.ring_field(&u);
    }
    Err(Error::NoConvergence(MAX_ITERATIONS))
}

/// The per-coefficient construction on the local ODEs (vector cross-sections only).
pub fn reduce_nonlinear_direct(problem: &ProblemSpec, order: u32) -> Result<SlowManifold> {
    let bound = check_nonlinear(problem, order)?;
    let CrossSpace::FiniteDim { dim } = problem.space else {
        return Err(Error::VariantMismatch("the direct construction needs a vector cross-section".into()));
    };
    let ring = truncation_ring(bound);
    let sys = LocalSystem::new(problem, order, &eps_pow(order + 1))?;
    let params = scaled_params(problem);
    let slow: Vec<usize> = problem.slow_components().iter().map(|&i| i as usize).collect();
    if slow.len() != problem.spectral.dim()
        || problem.spectral.v0.iter().zip(&problem.spectral.z0).any(|(v, z)| v != z || v.size() != 1)
    {
        return Err(Error::Unsolvable("the direct construction needs coordinate eigenvectors".into()));
    }
    let mut rates = vec![None; dim];
    for (i, r) in rates.iter_mut().enumerate() {
        if !slow.contains(&i) {
            *r = Some(decay_rate(&problem.space, &problem.stack[0], i as i64)?);
        }
    }
    let n_max = order as usize;
    let coef = |j: usize, n: usize| Symbol::slow(&coefficient_name(&problem.amplitudes[j], n as u32));
    let mut maps: Vec<Vec<Expr>> = (0..=n_max)
        .map(|n| {
            let mut row = vec![Expr::zero(); dim];
            for (j, &c) in slow.iter().enumerate() {
                row[c] = &eps_pow(n as u32 + 1) * &Expr::sym(&coef(j, n));
            }
            row
        })
        .collect();
    let mut evo: Vec<Vec<Expr>> = vec![vec![Expr::zero(); slow.len()]; n_max + 1];
    let deps_for = |evo: &[Vec<Expr>]| {
        let mut d = constants(problem);
        for (n, row) in evo.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                d.rule(coef(j, n), e.clone());
            }
        }
        d
    };
    let mut log = Vec::new();
    for iter in 1..=MAX_ITERATIONS {
        let res = sys.residual(problem, &maps, &deps_for(&evo), Some((&params, &ring)))?;
        let size: usize = res.iter().flatten().map(Expr::len).sum();
        log.push(format!("iteration {iter}: {size} residual terms"));
        if size == 0 {
            return Ok(SlowManifold {
                method: Method::Direct,
                order,
                bound,
                amplitudes: problem.amplitudes.clone(),
                field: maps.into_iter().map(CrossField::from_vec).collect(),
                evolution: evo,
                iterations: iter,
                log,
            });
        }
        for n in 0..=n_max {
            let res = sys.residual_at(problem, &maps, n, &deps_for(&evo), Some((&params, &ring)))?;
            for (i, r) in rates.iter().enumerate() {
                if let Some(lam) = r {
                    let upd = conv(&res[i], lam)?;
                    maps[n][i] = ring.truncate(&(&maps[n][i] + &upd));
                }
            }
            let res = sys.residual_at(problem, &maps, n, &deps_for(&evo), Some((&params, &ring)))?;
            for (j, &c) in slow.iter().enumerate() {
                let q = res[c].div_sym_pow(&eps(), n as u32 + 1).ok_or_else(|| {
                    Error::Inconsistent(format!("slow residual {} at order {n} is not divisible", res[c]))
                })?;
                evo[n][j].add_assign(&q);
            }
        }
    }
    Err(Error::NoConvergence(MAX_ITERATIONS))
}

/// `e` with `ε = 1`.
pub fn at_unit_eps(e: &Expr) -> Expr {
    e.subs_one(&eps(), &Expr::one())
}

fn substitute_taylor(problem: &ProblemSpec, order: u32, bound: u32) -> BTreeMap<Symbol, Expr> {
    let mut map = BTreeMap::new();
    for a in &problem.amplitudes {
        // `a` is a degree-N polynomial, so higher derivatives map to zero
        for k in 0..=derivative_limit(problem, bound) {
            let mut e = Expr::zero();
            for n in k..=order {
                let t = &Expr::sym(&xi()).pow(n - k) * &Expr::slow(&coefficient_name(a, n));
                e.add_assign(&t.scale(&inv_factorial(n - k)));
            }
            map.insert(Symbol::slow(&amplitude_name(a, k)), e);
        }
    }
    map
}

/// `εⁿ n! [ξⁿ] e`, truncated.
fn taylor_coefficient(e: &Expr, n: u32, ring: &GradedRing, extra: u32) -> Expr {
    let c = e.coeff(&xi(), n).scale(&Scalar::from(factorial(n)));
    ring.truncate(&(&c * &eps_pow(n + extra)))
}

/// Termwise differences between the generating and direct constructions; empty on agreement.
pub fn extract_taylor_compare(problem: &ProblemSpec, generating: &SlowManifold, direct: &SlowManifold) -> Result<Vec<String>> {
    if generating.method != Method::Generating || direct.method != Method::Direct {
        return Err(Error::Invalid("compare a generating construction with a direct one".into()));
    }
    if generating.order != direct.order || generating.bound != direct.bound {
        return Err(Error::Invalid("constructions differ in order or truncation".into()));
    }
    let ring = truncation_ring(direct.bound);
    let subs = substitute_taylor(problem, direct.order, generating.bound);
    let u = generating.field[0].map(|e| e.subs(&subs));
    let g: Vec<Expr> = generating.evolution[0].iter().map(|e| e.subs(&subs)).collect();
    let mut diffs = Vec::new();
    for n in 0..=direct.order {
        let d = &direct.field[n as usize];
        for i in problem.space.indices() {
            let from_gen = taylor_coefficient(&u.get(i), n, &ring, 0);
            let diff = &from_gen - &d.get(i);
            if !diff.is_zero() {
                diffs.push(format!("u{n}[{}]: {diff}", problem.fields[i as usize]));
            }
        }
        for (j, amp) in problem.amplitudes.iter().enumerate() {
            let from_gen = taylor_coefficient(&g[j], n, &ring, 1);
            let from_direct = ring.truncate(&(&direct.evolution[n as usize][j] * &eps_pow(n + 1)));
            let diff = &from_gen - &from_direct;
            if !diff.is_zero() {
                diffs.push(format!("d/dt {}: {diff}", coefficient_name(amp, n)));
            }
        }
    }
    Ok(diffs)
}

/// Rename `a^{(k)}` to `x`-derivative names and evaluate at `ξ = 0`, `ε = 1`.
fn at_station(problem: &ProblemSpec, bound: u32, e: &Expr) -> Expr {
    let mut map = BTreeMap::new();
    map.insert(xi(), Expr::zero());
    map.insert(eps(), Expr::one());
    for a in &problem.amplitudes {
        for k in 0..=derivative_limit(problem, bound) {
            map.insert(Symbol::slow(&amplitude_name(a, k)), Expr::slow(&x_derivative(a, k)));
        }
    }
    e.subs(&map)
}

/// Linear coefficients `A_n[j][k]`: the coefficient of `∂ₓⁿ c_k` in the `c_j` equation.
pub fn linear_coefficients(problem: &ProblemSpec, order: u32, evolution: &[Expr]) -> Vec<Matrix> {
    let amps = &problem.amplitudes;
    (0..=order)
        .map(|n| {
            evolution
                .iter()
                .map(|e| {
                    amps.iter()
                        .map(|a| {
                            let s = Symbol::slow(&x_derivative(a, n));
                            let mut out = Expr::zero();
                            for (m, c) in e.terms() {
                                if m.degree() == 1 && m.sym_exponent(&s) == 1 {
                                    out.add_assign(&Expr::constant(c.clone()));
                                }
                            }
                            out
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// The generating manifold at the station: `ξ = 0`, `ε = 1`, `a^{(k)} ↦ c_x…`.
pub fn station_manifold(problem: &ProblemSpec, sm: &SlowManifold) -> Result<CrossField> {
    if sm.method != Method::Generating {
        return Err(Error::Invalid("only the generating construction gives a manifold field".into()));
    }
    Ok(sm.field[0].map(|e| at_station(problem, sm.bound, e)))
}

/// The model PDE, the manifold at the station, and the coupling terms.
pub fn emit_model(problem: &ProblemSpec, sm: &SlowManifold) -> Result<ModelReport> {
    let method = match sm.method {
        Method::Direct => "direct",
        Method::Generating => "generating-polynomial",
    };
    let mut rep = ModelReport::new(&problem.name, method, sm.order);
    rep.grading = format!("eps and xi weight 1, truncated at order {}", sm.bound);
    rep.params = problem.params.iter().map(|p| Entry::new(&p.key, format!("{} (weight {})", p.value, p.weight))).collect();
    rep.amplitudes = problem.amplitudes.clone();
    rep.log = sm.log.clone();
    match sm.method {
        Method::Generating => {
            let evo: Vec<Expr> = sm.evolution[0].iter().map(|e| at_station(problem, sm.bound, e)).collect();
            for (n, a) in linear_coefficients(problem, sm.order, &evo).iter().enumerate() {
                rep.coefficients.push(Entry::new(format!("A{n}"), render_matrix(a)));
            }
            let u = station_manifold(problem, sm)?;
            if let CrossSpace::FiniteDim { .. } = problem.space {
                for (i, f) in problem.fields.iter().enumerate() {
                    rep.manifold.push(Entry::new(f, u.get(i as i64)));
                }
            } else {
                rep.manifold.push(Entry::new(&problem.fields[0], u.render(&problem.space)));
            }
            for (a, e) in problem.amplitudes.iter().zip(&evo) {
                rep.evolution.push(Entry::new(a, e.autonomous()));
                rep.coupling_error.push(Entry::new(a, e.coupling_part()));
            }
        }
        Method::Direct => {
            for (n, f) in sm.field.iter().enumerate() {
                for (i, name) in problem.fields.iter().enumerate() {
                    rep.manifold.push(Entry::new(format!("{name}{n}"), at_unit_eps(&f.get(i as i64))));
                }
            }
            for (n, row) in sm.evolution.iter().enumerate() {
                for (j, a) in problem.amplitudes.iter().enumerate() {
                    let e = at_unit_eps(&row[j]);
                    let key = coefficient_name(a, n as u32);
                    rep.evolution.push(Entry::new(&key, e.autonomous()));
                    rep.coupling_error.push(Entry::new(&key, e.coupling_part()));
                }
            }
            rep.amplitudes = (0..sm.evolution.len())
                .flat_map(|n| problem.amplitudes.iter().map(move |a| coefficient_name(a, n as u32)))
                .collect();
        }
    }
    rep.notes.push(format!("amplitude truncation error O(||u||^{})", sm.bound));
    Ok(rep)
}
