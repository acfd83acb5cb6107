//! Exact time-dependent coordinate transforms that separate slow and stable
//! variables of the local ODEs of a linear problem.
//!
//! Each Taylor coefficient `u_n` is written in new variables: the slow ones
//! `C_n` and the stable ones `D_n` (upper-cased field names). The evolution of
//! `D_n` stays homogeneous in the `D`s, while the history of the coupling
//! inputs is pushed into the `Ċ_n` equations as convolutions.

use std::collections::{BTreeMap, BTreeSet};

use slowvary_algebra::{conv, BigRational, DependencyTable, Expr, Factor, Scalar, Symbol};

use crate::crosssec::{decay_rate, CrossField, CrossSpace};
use crate::error::{Error, Result};
use crate::linreduce::{coupling_name, reduce_linear, render_matrix, Matrix};
use crate::local::LocalSystem;
use crate::problems::{validate_spec, ProblemSpec};
use crate::report::{x_derivative, Entry, ModelReport};

/// Iteration cap for [`separate`].
pub const MAX_ITERATIONS: usize = 99;

#[derive(Clone, Debug)]
pub struct NormalForm {
    pub order: u32,
    pub fields: Vec<String>,
    /// Component indices of the slow and the stable variables.
    pub slow: Vec<usize>,
    pub stable: Vec<usize>,
    /// Decay rate of each stable component, indexed like `fields`.
    rates: Vec<Option<BigRational>>,
    /// `maps[n][i]`: component `i` of `u_n` in the new variables.
    pub maps: Vec<Vec<Expr>>,
    /// `evolution[n][i]`: time derivative of the new variable for component `i` at order `n`.
    pub evolution: Vec<Vec<Expr>>,
    pub iterations: usize,
    pub log: Vec<String>,
}

/// Name of the new variable for `field` at order `n`: `C3` for `c`.
pub fn variable_name(field: &str, n: u32) -> String {
    format!("{}{n}", field.to_uppercase())
}

impl NormalForm {
    pub fn variable(&self, n: usize, i: usize) -> Symbol {
        Symbol::slow(&variable_name(&self.fields[i], n as u32))
    }

    fn stable_vars(&self) -> BTreeMap<Symbol, BigRational> {
        let mut out = BTreeMap::new();
        for n in 0..self.maps.len() {
            for &i in &self.stable {
                out.insert(self.variable(n, i), self.rates[i].clone().expect("stable rate"));
            }
        }
        out
    }

    fn dependencies(&self, problem: &ProblemSpec) -> DependencyTable {
        let mut deps = DependencyTable::new();
        for (n, row) in self.evolution.iter().enumerate() {
            for (i, e) in row.iter().enumerate() {
                deps.rule(self.variable(n, i), e.clone());
            }
        }
        for s in problem.param_symbols() {
            deps.constant(s);
        }
        deps
    }

    /// Serialized maps and evolutions, one `key = expr` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.fields.len() {
            for (n, row) in self.maps.iter().enumerate() {
                out.push_str(&format!("{}{n} = {}\n", self.fields[i], row[i]));
            }
        }
        for i in 0..self.fields.len() {
            for (n, row) in self.evolution.iter().enumerate() {
                out.push_str(&format!("{}_t = {}\n", variable_name(&self.fields[i], n as u32), row[i]));
            }
        }
        out
    }
}

fn has_any(m: &slowvary_algebra::Monomial, set: &BTreeMap<Symbol, BigRational>) -> Option<(Symbol, BigRational)> {
    m.factors().find_map(|(f, _)| match f {
        Factor::Sym(s) => set.get(s).map(|r| (s.clone(), r.clone())),
        Factor::Atom(_) => None,
    })
}

/// Slow components, stable components, and the decay rate of each stable one.
type Roles = (Vec<usize>, Vec<usize>, Vec<Option<BigRational>>);

/// Component roles: slow components carry `Z₀`, the rest must decay.
fn roles(problem: &ProblemSpec) -> Result<Roles> {
    let CrossSpace::FiniteDim { dim } = problem.space else {
        return Err(Error::VariantMismatch("the normal form needs a vector cross-section".into()));
    };
    let spec = &problem.spectral;
    let mut slow = Vec::new();
    for (j, (v, z)) in spec.v0.iter().zip(&spec.z0).enumerate() {
        let unit = v.size() == 1 && v == z && v.entries().all(|(_, e)| *e == Expr::one());
        let diag = spec.a0[j].iter().enumerate().all(|(k, a)| k == j || a.is_zero());
        if !unit || !diag {
            return Err(Error::Unsolvable("the normal form needs coordinate eigenvectors and a diagonal A0".into()));
        }
        slow.push(v.entries().next().expect("one entry").0 as usize);
    }
    let mut stable = Vec::new();
    let mut rates = vec![None; dim];
    for (i, rate) in rates.iter_mut().enumerate() {
        if slow.contains(&i) {
            continue;
        }
        *rate = Some(decay_rate(&problem.space, &problem.stack[0], i as i64)?);
        stable.push(i);
    }
    // slow components must not feel L0 beyond A0
    let l0 = &problem.stack[0];
    for (j, &i) in slow.iter().enumerate() {
        let img = crate::crosssec::apply_op(&problem.space, l0, &CrossField::basis(i as i64, Expr::one()))?;
        if img != CrossField::basis(i as i64, Expr::constant(spec.a0[j][j].clone())) {
            return Err(Error::Unsolvable("L0 must be diagonal on the slow components".into()));
        }
    }
    Ok((slow, stable, rates))
}

/// Iterate the slow/stable separation to an exact transform.
pub fn separate(problem: &ProblemSpec, order: u32) -> Result<NormalForm> {
    if !problem.is_linear() {
        return Err(Error::Invalid("the normal form is constructed for linear problems only".into()));
    }
    validate_spec(problem, order)?;
    let (slow, stable, rates) = roles(problem)?;
    let sys = LocalSystem::new(problem, order, &Expr::one())?;
    let n_max = order as usize;
    let mut nf = NormalForm {
        order,
        fields: problem.fields.clone(),
        slow: slow.clone(),
        stable: stable.clone(),
        rates: rates.clone(),
        maps: Vec::new(),
        evolution: Vec::new(),
        iterations: 0,
        log: Vec::new(),
    };
    for n in 0..=n_max {
        let mut maps = Vec::new();
        let mut evo = Vec::new();
        for (i, rate) in rates.iter().enumerate().take(nf.fields.len()) {
            let v = Expr::sym(&nf.variable(n, i));
            maps.push(v.clone());
            evo.push(match rate {
                Some(r) => v.scale(&Scalar::real(r.clone())),
                None => {
                    let j = slow.iter().position(|&s| s == i).expect("slow component");
                    v.scale(&problem.spectral.a0[j][j])
                }
            });
        }
        nf.maps.push(maps);
        nf.evolution.push(evo);
    }
    let stable_vars = nf.stable_vars();
    for iter in 1..=MAX_ITERATIONS {
        for n in 0..=n_max {
            for &s in &stable {
                let res = sys.residual_at(problem, &nf.maps, n, &nf.dependencies(problem), None)?;
                let resd = &res[s];
                let gd = resd.filter(|m| has_any(m, &stable_vars).is_some());
                nf.evolution[n][s].add_assign(&gd);
                let rest = resd - &gd;
                let lam = rates[s].as_ref().expect("stable rate");
                nf.maps[n][s].add_assign(&conv(&rest, lam)?);
            }
            for &c in &slow {
                let res = sys.residual_at(problem, &nf.maps, n, &nf.dependencies(problem), None)?;
                let resc = &res[c];
                let mut fd = Expr::zero();
                for (m, k) in resc.terms() {
                    if let Some((_, lam)) = has_any(m, &stable_vars) {
                        let t = Expr::term(m.clone(), k.clone());
                        fd.add_assign(&t);
                        nf.maps[n][c].add_assign(&t.scale(&Scalar::real(lam.recip())));
                    }
                }
                let update = resc - &fd;
                nf.evolution[n][c].add_assign(&update);
            }
        }
        let res = residual(&nf, problem)?;
        let size: usize = res.iter().flatten().map(Expr::len).sum();
        nf.log.push(format!("iteration {iter}: {size} residual terms"));
        if size == 0 {
            nf.iterations = iter;
            check_structure(&nf)?;
            return Ok(nf);
        }
    }
    Err(Error::NoConvergence(MAX_ITERATIONS))
}

/// Residual of the original local ODEs with the transform substituted.
pub fn residual(nf: &NormalForm, problem: &ProblemSpec) -> Result<Vec<Vec<Expr>>> {
    let sys = LocalSystem::new(problem, nf.order, &Expr::one())?;
    sys.residual(problem, &nf.maps, &nf.dependencies(problem), None)
}

/// Verify that the transform satisfies the local ODEs identically.
pub fn check_exact(nf: &NormalForm, problem: &ProblemSpec) -> Result<()> {
    let res = residual(nf, problem)?;
    for (n, row) in res.iter().enumerate() {
        for (i, e) in row.iter().enumerate() {
            if !e.is_zero() {
                return Err(Error::Inconsistent(format!("{}{n} equation residual {e}", nf.fields[i])));
            }
        }
    }
    Ok(())
}

/// `D` evolutions are homogeneous in the `D`s; slow maps reduce to `C_n` without `D` and coupling.
fn check_structure(nf: &NormalForm) -> Result<()> {
    let stable_vars = nf.stable_vars();
    for (n, row) in nf.evolution.iter().enumerate() {
        for &s in &nf.stable {
            let e = &row[s];
            if e.terms().any(|(m, _)| m.has_fast() || has_any(m, &stable_vars).is_none()) {
                return Err(Error::Inconsistent(format!("stable evolution at order {n} is not homogeneous: {e}")));
            }
        }
    }
    let zero_d: BTreeMap<Symbol, Expr> = stable_vars.keys().map(|s| (s.clone(), Expr::zero())).collect();
    for (n, row) in nf.maps.iter().enumerate() {
        for &c in &nf.slow {
            if row[c].autonomous().subs(&zero_d) != Expr::sym(&nf.variable(n, c)) {
                return Err(Error::Inconsistent(format!("slow map at order {n} is not the identity on D = 0")));
            }
        }
    }
    Ok(())
}

/// Slow evolution coefficients: `A_n[j][k]` is the coefficient of `C_{n,k}` in `Ċ_{0,j}`.
pub fn coefficients(nf: &NormalForm) -> Vec<Matrix> {
    (0..nf.maps.len())
        .map(|n| {
            nf.slow
                .iter()
                .map(|&j| {
                    let e = nf.evolution[0][j].autonomous();
                    nf.slow.iter().map(|&k| e.coeff(&nf.variable(n, k), 1).autonomous()).collect()
                })
                .collect()
        })
        .collect()
}

/// The slow PDE with its explicit convolution error.
pub fn slow_pde_with_error(nf: &NormalForm, problem: &ProblemSpec) -> Result<ModelReport> {
    let mut rep = ModelReport::new(&problem.name, "normal-form", nf.order);
    rep.grading = "x-derivative order".into();
    rep.params = problem.params.iter().map(|p| Entry::new(&p.key, &p.value)).collect();
    // slow components follow the order of the eigenvectors, like the amplitudes
    let amps = problem.amplitudes.clone();
    rep.amplitudes = amps.clone();
    for (n, a) in coefficients(nf).iter().enumerate() {
        rep.coefficients.push(Entry::new(format!("A{n}"), render_matrix(a)));
    }
    for i in 0..nf.fields.len() {
        for (n, row) in nf.maps.iter().enumerate() {
            rep.manifold.push(Entry::new(format!("{}{n}", nf.fields[i]), &row[i]));
        }
    }
    for i in 0..nf.fields.len() {
        for (n, row) in nf.evolution.iter().enumerate() {
            rep.manifold.push(Entry::new(format!("{}_t", variable_name(&nf.fields[i], n as u32)), &row[i]));
        }
    }
    let mut rename = BTreeMap::new();
    for n in 0..nf.maps.len() {
        for (j, &c) in nf.slow.iter().enumerate() {
            rename.insert(nf.variable(n, c), Expr::slow(&x_derivative(&amps[j], n as u32)));
        }
    }
    let red = reduce_linear(problem, nf.order)?;
    for (j, &c) in nf.slow.iter().enumerate() {
        let rhs = &nf.evolution[0][c];
        rep.evolution.push(Entry::new(&amps[j], rhs.autonomous().subs(&rename)));
        let coupling = rhs.coupling_part();
        rep.coupling_error.push(Entry::new(&amps[j], &coupling));
        for note in magnitude_notes(problem, nf, &red.v, &coupling, &amps[j]) {
            rep.notes.push(note);
        }
    }
    rep.log = nf.log.clone();
    Ok(rep)
}

/// `5*d4x = O(d_x^6 c)`-style estimates for the leading convolution of each coupling symbol.
fn magnitude_notes(problem: &ProblemSpec, nf: &NormalForm, v: &[Vec<CrossField>], coupling: &Expr, amp: &str) -> Vec<String> {
    // component i first appears in V_q
    let lag = |i: usize| v.iter().position(|vn| vn.iter().any(|f| !f.get(i as i64).is_zero())).unwrap_or(0);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (m, k) in coupling.terms() {
        let Some(atom) = m.as_single_atom() else { continue };
        if m.degree() != 1 {
            continue;
        }
        let Some((Factor::Sym(s), 1)) = atom.content().factors().next() else { continue };
        if atom.content().degree() != 1 || !seen.insert(s.clone()) {
            continue;
        }
        for (i, field) in problem.fields.iter().enumerate() {
            for d in 1..problem.stack.len() as u32 {
                if coupling_name(field, nf.order, d) == s.name() {
                    let p = nf.order + d + lag(i) as u32;
                    out.push(format!("{}*{} = O(d_x^{p} {amp})", Expr::constant(k.clone()), s.name()));
                }
            }
        }
    }
    out
}
