//! Method-of-lines simulation of full systems and of reduced models on periodic domains.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slowvary::crosssec::{CrossOp, CrossSpace};
use slowvary::problems::{Evaluator, FieldVar, ProblemSpec};
use slowvary::ModelReport;
use slowvary_algebra::{parse_expr, Expr, Factor, Registry, Scalar};

use crate::error::{Result, VerifyError};
use crate::grid::{Field, Grid, Scheme};
use crate::numeric::{self, Values};

/// Fraction of RK4's stability interval that a time step may use.
const STABILITY_MARGIN: f64 = 2.5;
/// Any value beyond this counts as divergence.
const BLOWUP: f64 = 1e8;

/// One Fourier mode `amplitude·cos(2π·harmonic·x/L + phase)` in one field.
#[derive(Clone, Debug)]
pub struct Mode {
    pub field: usize,
    pub harmonic: i64,
    pub amplitude: f64,
    pub phase: f64,
}

#[derive(Clone, Debug)]
pub enum InitialCondition {
    Zero,
    Modes(Vec<Mode>),
    /// Band-limited noise in every field, harmonics `1..=max_harmonic` (capped at `M/8`),
    /// scaled so the largest value is `amplitude`.
    Random { seed: u64, amplitude: f64, max_harmonic: usize },
    Fields(Vec<Field>),
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub length: f64,
    pub points: usize,
    pub dt: f64,
    pub scheme: Scheme,
    pub tmax: f64,
    /// Record every `stride` steps; the final state is always recorded.
    pub stride: usize,
    pub initial: InitialCondition,
    /// Numeric values of symbolic parameters.
    pub values: Values,
}

impl SimConfig {
    pub fn new(points: usize, length: f64) -> Self {
        SimConfig {
            length,
            points,
            dt: 1e-2,
            scheme: Scheme::Spectral,
            tmax: 1.0,
            stride: 10,
            initial: InitialCondition::Zero,
            values: Values::new(),
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.points, self.length, self.scheme)
    }
}

#[derive(Clone, Debug)]
pub struct SimResult {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    /// `snapshots[r][f]` is field `f` at time `times[r]`.
    pub snapshots: Vec<Vec<Field>>,
}

impl SimResult {
    pub fn last(&self) -> &[Field] {
        self.snapshots.last().expect("at least the initial state is recorded")
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Initial fields for `names` on `grid`.
pub fn initial_fields(grid: &Grid, ic: &InitialCondition, count: usize) -> Result<Vec<Field>> {
    let zero = vec![Complex64::new(0.0, 0.0); grid.points];
    let mut u = vec![zero; count];
    let two_pi = 2.0 * std::f64::consts::PI;
    match ic {
        InitialCondition::Zero => {}
        InitialCondition::Modes(modes) => {
            for m in modes {
                let f = u
                    .get_mut(m.field)
                    .ok_or_else(|| VerifyError::Config(format!("no field {}", m.field)))?;
                for (j, z) in f.iter_mut().enumerate() {
                    let k = two_pi * m.harmonic as f64 / grid.length;
                    *z += m.amplitude * (k * grid.x(j) + m.phase).cos();
                }
            }
        }
        InitialCondition::Random { seed, amplitude, max_harmonic } => {
            let top = (*max_harmonic).min(grid.points / 8);
            if top == 0 {
                return Err(VerifyError::Config("random initial data needs at least one harmonic".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for f in &mut u {
                for h in 1..=top {
                    let (a, b): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    let k = two_pi * h as f64 / grid.length;
                    for (j, z) in f.iter_mut().enumerate() {
                        let x = k * grid.x(j);
                        *z += a * x.cos() + b * x.sin();
                    }
                }
                let peak = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if peak > 0.0 {
                    f.iter_mut().for_each(|z| *z *= amplitude / peak);
                }
            }
        }
        InitialCondition::Fields(fields) => {
            if fields.len() != count || fields.iter().any(|f| f.len() != grid.points) {
                return Err(VerifyError::Config("initial fields do not match the grid".into()));
            }
            u = fields.clone();
        }
    }
    Ok(u)
}

/// Classical RK4 from `u0`, recording every `cfg.stride` steps.
fn integrate(
    cfg: &SimConfig,
    names: Vec<String>,
    u0: Vec<Field>,
    rhs: impl Fn(&[Field]) -> Result<Vec<Field>>,
) -> Result<SimResult> {
    if !(cfg.dt > 0.0 && cfg.tmax >= 0.0 && cfg.stride > 0) {
        return Err(VerifyError::Config("need dt > 0, tmax >= 0 and stride > 0".into()));
    }
    let steps = (cfg.tmax / cfg.dt).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { cfg.tmax / steps as f64 };
    let axpy = |u: &[Field], k: &[Field], a: f64| -> Vec<Field> {
        u.iter().zip(k).map(|(f, g)| f.iter().zip(g).map(|(x, y)| x + y * a).collect()).collect()
    };
    let mut u = u0;
    let mut out = SimResult { names, times: vec![0.0], snapshots: vec![u.clone()] };
    for step in 1..=steps {
        let k1 = rhs(&u)?;
        let k2 = rhs(&axpy(&u, &k1, h / 2.0))?;
        let k3 = rhs(&axpy(&u, &k2, h / 2.0))?;
        let k4 = rhs(&axpy(&u, &k3, h))?;
        for (f, ((a, b), (c, d))) in u.iter_mut().zip(k1.iter().zip(&k2).zip(k3.iter().zip(&k4))) {
            for (j, z) in f.iter_mut().enumerate() {
                *z += (a[j] + b[j] * 2.0 + c[j] * 2.0 + d[j]) * (h / 6.0);
            }
        }
        let t = step as f64 * h;
        if u.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite() || z.norm() > BLOWUP) {
            return Err(VerifyError::Diverged(t));
        }
        if step % cfg.stride == 0 || step == steps {
            out.times.push(t);
            out.snapshots.push(u.clone());
        }
    }
    Ok(out)
}

/// Reject time steps outside RK4's stability region for a linear symbol bounded by `bound`.
fn check_step(dt: f64, bound: f64) -> Result<()> {
    let limit = if bound > 0.0 { STABILITY_MARGIN / bound } else { f64::INFINITY };
    if dt > limit {
        return Err(VerifyError::Cfl { dt, limit });
    }
    Ok(())
}

/// Gershgorin bound on the eigenvalues of a complex matrix.
fn gershgorin(m: &[Vec<Complex64>]) -> f64 {
    m.iter().map(|row| row.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Cache of `∂ₓⁿ` of each field.
struct Derivs<'a> {
    grid: &'a Grid,
    u: &'a [Field],
    cache: BTreeMap<(usize, u32), Field>,
}

impl<'a> Derivs<'a> {
    fn new(grid: &'a Grid, u: &'a [Field]) -> Self {
        Derivs { grid, u, cache: BTreeMap::new() }
    }

    fn get(&mut self, field: usize, n: u32) -> &Field {
        let (grid, u) = (self.grid, self.u);
        self.cache.entry((field, n)).or_insert_with(|| grid.derivative(&u[field], n))
    }
}

/// The linear operator of a full problem, as `ops[ℓ][i][k]` acting on `∂ₓ^ℓ u_k`.
fn full_operator(problem: &ProblemSpec, values: &Values) -> Result<Vec<Vec<Vec<Complex64>>>> {
    match &problem.space {
        CrossSpace::FiniteDim { dim } => problem
            .stack
            .iter()
            .map(|op| match op {
                CrossOp::Matrix(m) if m.len() == *dim => m
                    .iter()
                    .map(|row| row.iter().map(|e| numeric::eval(e, values)).collect())
                    .collect(),
                _ => Err(VerifyError::Unsupported("vector problems need constant matrices".into())),
            })
            .collect(),
        CrossSpace::PeriodicFourier { .. } => {
            // A Fourier cross-section is a fast phase of a single periodic field when the
            // stack is the Taylor shift of L0: then the full operator is L0 with ∂_y ↦ ∂ₓ.
            let coefs = |op: &CrossOp| match op {
                CrossOp::Fourier(a) => Ok(a.clone()),
                _ => Err(VerifyError::Unsupported("mixed operator kinds".into())),
            };
            let l0 = coefs(&problem.stack[0])?;
            for (l, op) in problem.stack.iter().enumerate() {
                let a = coefs(op)?;
                let len = a.len().max(l0.len().saturating_sub(l));
                for j in 0..len {
                    let want = l0
                        .get(j + l)
                        .map_or(Expr::zero(), |e| e.scale(&Scalar::from(binomial(j + l, l))));
                    if a.get(j).cloned().unwrap_or_else(Expr::zero) != want {
                        return Err(VerifyError::Unsupported(
                            "the Fourier stack is not the shift of a single operator".into(),
                        ));
                    }
                }
            }
            let mut ops = Vec::new();
            for e in &l0 {
                ops.push(vec![vec![numeric::eval(e, values)?]]);
            }
            Ok(ops)
        }
        CrossSpace::NeumannChannel { .. } => {
            Err(VerifyError::Unsupported("full simulation of channel cross-sections".into()))
        }
    }
}

fn binomial(n: usize, k: usize) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

/// Largest eigenvalue bound of `Σ_ℓ ops_ℓ (iq)^ℓ` over the grid.
fn operator_bound(ops: &[Vec<Vec<Complex64>>], grid: &Grid) -> f64 {
    let dim = ops.first().map_or(0, Vec::len);
    (0..grid.points)
        .map(|j| {
            let iq = Complex64::new(0.0, grid.wavenumber(j));
            let mut s = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
            for (l, m) in ops.iter().enumerate() {
                let w = iq.powi(l as i32);
                for (i, row) in m.iter().enumerate() {
                    for (k, z) in row.iter().enumerate() {
                        s[i][k] += z * w;
                    }
                }
            }
            gershgorin(&s)
        })
        .fold(0.0, f64::max)
}

struct GridEval<'a, 'b> {
    derivs: &'b mut Derivs<'a>,
    fields: &'b [String],
    params: &'b Values,
    points: usize,
}

impl Evaluator for GridEval<'_, '_> {
    type Value = Field;
    type Error = VerifyError;

    fn var(&mut self, v: &FieldVar) -> Result<Field> {
        if let Some(p) = self.params.get(&v.name) {
            return Ok(vec![Complex64::new(*p, 0.0); self.points]);
        }
        let i = self
            .fields
            .iter()
            .position(|f| *f == v.name)
            .ok_or_else(|| VerifyError::Expression(format!("unknown field '{}'", v.name)))?;
        Ok(self.derivs.get(i, v.deriv).clone())
    }

    fn constant(&self, c: &Scalar) -> Field {
        vec![numeric::scalar(c); self.points]
    }

    fn mul(&self, a: &Field, b: &Field) -> Result<Field> {
        Ok(a.iter().zip(b).map(|(x, y)| x * y).collect())
    }

    fn add(&self, acc: &mut Field, x: &Field) {
        acc.iter_mut().zip(x).for_each(|(a, b)| *a += b);
    }
}

/// Integrate the full system `∂t u = Σ_ℓ L_ℓ ∂ₓ^ℓ u + f(u)`.
///
/// Vector cross-sections integrate every component; Fourier cross-sections integrate
/// the single periodic field whose fast phase the harmonics describe.
pub fn simulate_full(problem: &ProblemSpec, cfg: &SimConfig) -> Result<SimResult> {
    let grid = cfg.grid()?;
    let ops = full_operator(problem, &cfg.values)?;
    check_step(cfg.dt, operator_bound(&ops, &grid))?;
    let params = numeric::param_values(problem, &cfg.values)?;
    let fields = problem.fields.clone();
    let u0 = initial_fields(&grid, &cfg.initial, fields.len())?;
    integrate(cfg, fields.clone(), u0, |u| {
        let mut derivs = Derivs::new(&grid, u);
        let mut out = vec![vec![Complex64::new(0.0, 0.0); grid.points]; u.len()];
        for (l, m) in ops.iter().enumerate() {
            for (i, row) in m.iter().enumerate() {
                for (k, z) in row.iter().enumerate() {
                    if z.norm() != 0.0 {
                        let d = derivs.get(k, l as u32);
                        out[i].iter_mut().zip(d).for_each(|(o, x)| *o += z * x);
                    }
                }
            }
        }
        for (o, f) in out.iter_mut().zip(&problem.nonlinearity) {
            if f.is_zero() {
                continue;
            }
            let mut ev = GridEval { derivs: &mut derivs, fields: &fields, params: &params, points: grid.points };
            let v = f.eval(&mut ev)?;
            o.iter_mut().zip(&v).for_each(|(a, b)| *a += b);
        }
        Ok(out)
    })
}

/// `(coefficient, [(amplitude, derivative, power)])`.
type Term = (Complex64, Vec<(usize, u32, u32)>);

/// A polynomial in amplitude fields and their `x`-derivatives, with numeric coefficients.
#[derive(Clone, Debug)]
pub struct FieldPolynomial {
    terms: Vec<Term>,
}

impl FieldPolynomial {
    /// Compile `e`, reading `c`, `c_x`, `c_xx`, … for each amplitude `c` and taking other
    /// symbols from `values`. History convolutions and coupling symbols are rejected.
    pub fn compile(e: &Expr, amplitudes: &[String], values: &Values) -> Result<Self> {
        let mut terms = Vec::new();
        for (m, c) in e.terms() {
            let mut coef = numeric::scalar(c);
            let mut vars = Vec::new();
            for (f, p) in m.factors() {
                let Factor::Sym(s) = f else {
                    return Err(VerifyError::Expression(format!("history convolution in '{e}'")));
                };
                if s.is_coupling() {
                    return Err(VerifyError::Expression(format!("coupling symbol '{}'", s.name())));
                }
                if let Some(v) = amplitude_derivative(s.name(), amplitudes) {
                    vars.push((v.0, v.1, p));
                } else if let Some(x) = values.get(s.name()) {
                    coef *= x.powi(p as i32);
                } else {
                    return Err(VerifyError::Expression(format!("no value for '{}'", s.name())));
                }
            }
            terms.push((coef, vars));
        }
        Ok(FieldPolynomial { terms })
    }

    pub fn parse(src: &str, amplitudes: &[String], values: &Values) -> Result<Self> {
        let e = parse_expr(src, &Registry::new()).map_err(|err| VerifyError::Expression(format!("'{src}': {err}")))?;
        Self::compile(&e, amplitudes, values)
    }

    fn eval(&self, derivs: &mut Derivs<'_>, points: usize) -> Field {
        let mut out = vec![Complex64::new(0.0, 0.0); points];
        for (c, vars) in &self.terms {
            let mut t = vec![*c; points];
            for &(a, n, p) in vars {
                let d = derivs.get(a, n);
                for (x, y) in t.iter_mut().zip(d) {
                    *x *= y.powi(p as i32);
                }
            }
            out.iter_mut().zip(&t).for_each(|(o, x)| *o += x);
        }
        out
    }

    /// Evaluate on amplitude fields `u` over `grid`.
    pub fn evaluate(&self, grid: &Grid, u: &[Field]) -> Field {
        self.eval(&mut Derivs::new(grid, u), grid.points)
    }

    /// Linear part as `ops[n][i]` acting on `∂ₓⁿ u_i`.
    fn linear_part(&self, count: usize) -> Vec<Vec<Complex64>> {
        let mut ops: Vec<Vec<Complex64>> = Vec::new();
        for (c, vars) in &self.terms {
            if let [(a, n, 1)] = vars[..] {
                while ops.len() <= n as usize {
                    ops.push(vec![Complex64::new(0.0, 0.0); count]);
                }
                ops[n as usize][a] += c;
            }
        }
        ops
    }
}

/// `c_xx` ↦ `(index of c, 2)`.
fn amplitude_derivative(name: &str, amplitudes: &[String]) -> Option<(usize, u32)> {
    amplitudes.iter().enumerate().find_map(|(i, a)| {
        if name == a {
            return Some((i, 0));
        }
        let rest = name.strip_prefix(a.as_str())?.strip_prefix('_')?;
        (!rest.is_empty() && rest.bytes().all(|b| b == b'x')).then_some((i, rest.len() as u32))
    })
}

/// Integrate the autonomous part of a model PDE, `∂t c = G(c, c_x, …)`.
pub fn simulate_model(model: &ModelReport, cfg: &SimConfig) -> Result<SimResult> {
    if model.method == "direct" {
        return Err(VerifyError::Unsupported("direct-method reports are local ODEs, not a PDE".into()));
    }
    let grid = cfg.grid()?;
    let amps = model.amplitudes.clone();
    let rhs: Vec<FieldPolynomial> = amps
        .iter()
        .map(|a| {
            let src = model
                .evolution_of(a)
                .ok_or_else(|| VerifyError::Expression(format!("no evolution for '{a}'")))?;
            FieldPolynomial::parse(src, &amps, &cfg.values)
        })
        .collect::<Result<_>>()?;
    // ops[n][i][k]
    let mut ops: Vec<Vec<Vec<Complex64>>> = Vec::new();
    for (i, p) in rhs.iter().enumerate() {
        for (n, row) in p.linear_part(amps.len()).into_iter().enumerate() {
            while ops.len() <= n {
                ops.push(vec![vec![Complex64::new(0.0, 0.0); amps.len()]; amps.len()]);
            }
            ops[n][i] = row;
        }
    }
    check_step(cfg.dt, operator_bound(&ops, &grid))?;
    let u0 = initial_fields(&grid, &cfg.initial, amps.len())?;
    integrate(cfg, amps, u0, |u| {
        let mut derivs = Derivs::new(&grid, u);
        Ok(rhs.iter().map(|p| p.eval(&mut derivs, grid.points)).collect())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amplitude_derivative_names() {
        let amps = vec!["cp".to_string(), "cm".to_string()];
        assert_eq!(amplitude_derivative("cm_xxx", &amps), Some((1, 3)));
        assert_eq!(amplitude_derivative("cp", &amps), Some((0, 0)));
        assert_eq!(amplitude_derivative("cp_y", &amps), None);
        assert_eq!(amplitude_derivative("cpx", &amps), None);
    }

    #[test]
    fn step_check() {
        assert!(check_step(0.1, 10.0).is_ok());
        assert!(matches!(check_step(0.3, 10.0), Err(VerifyError::Cfl { .. })));
    }
}
