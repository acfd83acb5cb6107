//! The built-in problem catalog and user-specified nonlinearities.

mod file;
mod multinomial;

use std::collections::BTreeMap;
use std::fmt;

use slowvary_algebra::{parse_expr, rat, BigRational, Expr, Registry, Scalar, Symbol};

use crate::crosssec::{spectral_check, CrossField, CrossOp, CrossSpace, SpectralData, SpectralReport};
use crate::error::{Error, Result};

pub use file::parse_problem_file;
pub use multinomial::{parse_multinomial, Evaluator, FieldVar, Multinomial};

/// Names accepted by [`builtin`].
pub const BUILTINS: [&str; 5] = [
    "heat-exchanger-linear",
    "heat-exchanger-nonlinear",
    "shear-dispersion",
    "swift-hohenberg-linear",
    "swift-hohenberg-nonlinear",
];

/// A parameter value: a rational number or a symbol kept in the results.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParamValue {
    Symbol(String),
    Number(BigRational),
}

impl ParamValue {
    /// `3/2`, `-1` or an identifier such as `Pe`.
    pub fn parse(src: &str) -> Result<ParamValue> {
        let s = src.trim();
        let is_ident = s.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
            && s.chars().all(|c| c.is_ascii_alphanumeric());
        if is_ident {
            if s == "i" || s == "Z" {
                return Err(Error::Invalid(format!("'{s}' is reserved")));
            }
            return Ok(ParamValue::Symbol(s.to_string()));
        }
        let e = parse_expr(s, &Registry::new())?;
        match e.as_constant().and_then(|c| c.as_real().cloned()) {
            Some(r) if !s.contains('Z') && !s.contains('i') => Ok(ParamValue::Number(r)),
            _ => Err(Error::Invalid(format!("parameter value '{s}' is neither a rational nor a symbol"))),
        }
    }

    pub fn expr(&self) -> Expr {
        match self {
            ParamValue::Symbol(s) => Expr::slow(s),
            ParamValue::Number(r) => Expr::constant(Scalar::real(r.clone())),
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Symbol(s) => f.write_str(s),
            ParamValue::Number(r) => f.write_str(&slowvary_algebra::fmt_rational(r)),
        }
    }
}

/// A named parameter with its order weight in nonlinear constructions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub key: String,
    pub value: ParamValue,
    pub weight: u32,
}

/// Everything a construction needs to know about a PDE on a thin domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemSpec {
    pub name: String,
    /// One line on where the system comes from.
    pub provenance: String,
    pub space: CrossSpace,
    /// Component names (vector spaces) or the single field name.
    pub fields: Vec<String>,
    /// `L₀, L₁, …`: the PDE is `∂t u = Σ_ℓ L_ℓ ∂ₓ^ℓ u + f`.
    pub stack: Vec<CrossOp>,
    pub spectral: SpectralData,
    /// One multinomial per component for vector spaces, a single one otherwise;
    /// empty for linear problems.
    pub nonlinearity: Vec<Multinomial>,
    pub params: Vec<Param>,
    /// Amplitude names, one per slow direction.
    pub amplitudes: Vec<String>,
    /// Harmonics `|k| ≤ coupling_modes` resolved in the coupling (Fourier only).
    pub coupling_modes: i64,
    /// Nonlinear truncation: residuals vanish to absolute order `N + error_offset`.
    pub error_offset: u32,
    pub default_order: u32,
}

impl ProblemSpec {
    pub fn is_linear(&self) -> bool {
        self.nonlinearity.iter().all(Multinomial::is_zero)
    }

    pub fn param(&self, key: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.key == key)
    }

    /// Symbols of symbolic parameters; these are constant in time.
    pub fn param_symbols(&self) -> Vec<Symbol> {
        self.params
            .iter()
            .filter_map(|p| match &p.value {
                ParamValue::Symbol(s) => Some(Symbol::slow(s)),
                ParamValue::Number(_) => None,
            })
            .collect()
    }

    /// The same problem with the nonlinearity removed.
    pub fn linearized(&self) -> ProblemSpec {
        let mut p = self.clone();
        p.nonlinearity.clear();
        p
    }

    /// Index of a field name.
    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f == name)
    }

    /// Slow component indices of a vector problem, by `Z₀` support.
    pub fn slow_components(&self) -> Vec<i64> {
        let mut out: Vec<i64> = self.spectral.z0.iter().flat_map(|z| z.entries().map(|(i, _)| i).collect::<Vec<_>>()).collect();
        out.sort();
        out.dedup();
        out
    }

    /// Multi-line description for catalog listings.
    pub fn describe(&self, verbose: bool) -> String {
        let mut s = format!("{}\n  {}\n", self.name, self.provenance);
        if verbose {
            s.push_str(&format!("  space: {}\n", self.space.kind_name()));
            s.push_str(&format!("  fields: {}\n", self.fields.join(", ")));
            for (l, op) in self.stack.iter().enumerate() {
                s.push_str(&format!("  L{l} = {}\n", op.describe()));
            }
            for (i, f) in self.nonlinearity.iter().enumerate() {
                let label = if self.nonlinearity.len() == 1 { "f".to_string() } else { format!("f_{}", self.fields[i]) };
                s.push_str(&format!("  {label} = {f}\n"));
            }
            for p in &self.params {
                s.push_str(&format!("  param {} = {} (weight {})\n", p.key, p.value, p.weight));
            }
        }
        s
    }
}

/// The built-in problem `name` with default parameters.
pub fn builtin(name: &str) -> Result<ProblemSpec> {
    builtin_with(name, &[])
}

/// The built-in problem `name` with parameter overrides `key = value`.
pub fn builtin_with(name: &str, overrides: &[(String, ParamValue)]) -> Result<ProblemSpec> {
    let mut params: Vec<Param> = match name {
        "shear-dispersion" => vec![Param { key: "pe".into(), value: ParamValue::Symbol("Pe".into()), weight: 0 }],
        "swift-hohenberg-nonlinear" => vec![Param { key: "r".into(), value: ParamValue::Symbol("r".into()), weight: 2 }],
        _ => vec![],
    };
    for (k, v) in overrides {
        let slot = params
            .iter_mut()
            .find(|p| p.key == *k)
            .ok_or_else(|| Error::Invalid(format!("problem '{name}' has no parameter '{k}'")))?;
        slot.value = v.clone();
    }
    let value = |key: &str| params.iter().find(|p| p.key == key).map(|p| p.value.expr()).expect("declared above");
    let spec = match name {
        "heat-exchanger-linear" | "heat-exchanger-nonlinear" => {
            let nonlinear = name.ends_with("nonlinear");
            heat_exchanger(nonlinear)?
        }
        "shear-dispersion" => shear(&value("pe"))?,
        "swift-hohenberg-linear" => swift_hohenberg(false)?,
        "swift-hohenberg-nonlinear" => swift_hohenberg(true)?,
        _ => return Err(Error::UnknownProblem(name.to_string())),
    };
    Ok(ProblemSpec { params, ..spec })
}

fn e_vec(v: &[i64]) -> CrossField {
    CrossField::from_vec(v.iter().map(|&x| Expr::int(x)).collect())
}

fn heat_exchanger(nonlinear: bool) -> Result<ProblemSpec> {
    let nonlinearity = if nonlinear {
        vec![parse_multinomial("-c*d")?, parse_multinomial("-1/2*(c^2+d^2)")?]
    } else {
        vec![]
    };
    let (name, provenance, order) = if nonlinear {
        (
            "heat-exchanger-nonlinear",
            "mean/difference heat exchanger with quadratic reaction: c_t = d_x - c*d, d_t = -d + c_x - (c^2+d^2)/2",
            2,
        )
    } else {
        ("heat-exchanger-linear", "mean/difference heat exchanger: c_t = d_x, d_t = -d + c_x", 4)
    };
    Ok(ProblemSpec {
        name: name.into(),
        provenance: provenance.into(),
        space: CrossSpace::FiniteDim { dim: 2 },
        fields: vec!["c".into(), "d".into()],
        stack: vec![CrossOp::matrix_int(&[&[0, 0], &[0, -1]]), CrossOp::matrix_int(&[&[0, 1], &[1, 0]])],
        spectral: SpectralData {
            v0: vec![e_vec(&[1, 0])],
            z0: vec![e_vec(&[1, 0])],
            a0: vec![vec![Scalar::zero()]],
            alpha: rat(0, 1),
            beta: rat(1, 1),
        },
        nonlinearity,
        params: vec![],
        amplitudes: vec!["c".into()],
        coupling_modes: 0,
        error_offset: 3,
        default_order: order,
    })
}

/// Degree cap for channel polynomials.
pub const CHANNEL_MAX_DEGREE: i64 = 32;

fn shear(pe: &Expr) -> Result<ProblemSpec> {
    let profile = parse_expr("-3/2*(1 - y^2)", &Registry::new())?;
    let l1 = CrossOp::channel_multiply(CrossField::from_y_expr(&(&profile * pe)));
    Ok(ProblemSpec {
        name: "shear-dispersion".into(),
        provenance: "advection-diffusion in a 2D channel with velocity 3/2*Pe*(1-y^2) and insulating walls".into(),
        space: CrossSpace::NeumannChannel { max_degree: CHANNEL_MAX_DEGREE },
        fields: vec!["u".into()],
        stack: vec![CrossOp::d_yy(), l1, CrossOp::channel_multiply(CrossField::scalar(Expr::one()))],
        spectral: SpectralData {
            v0: vec![CrossField::scalar(Expr::one())],
            z0: vec![CrossField::scalar(Expr::one())],
            a0: vec![vec![Scalar::zero()]],
            alpha: rat(0, 1),
            // rational lower bound on the gap pi^2/4
            beta: rat(2, 1),
        },
        nonlinearity: vec![],
        params: vec![],
        amplitudes: vec!["c".into()],
        coupling_modes: 0,
        error_offset: 2,
        default_order: 3,
    })
}

/// Harmonic cap for the Swift–Hohenberg cross-section.
pub const FOURIER_MAX_HARMONIC: i64 = 8;

fn swift_hohenberg(nonlinear: bool) -> Result<ProblemSpec> {
    // −(1 + (∂ₓ + ∂_y)²)² expanded in powers of ∂ₓ
    let stack = vec![
        CrossOp::fourier_int(&[-1, 0, -2, 0, -1]),
        CrossOp::fourier_int(&[0, -4, 0, -4]),
        CrossOp::fourier_int(&[-2, 0, -6]),
        CrossOp::fourier_int(&[0, -4]),
        CrossOp::fourier_int(&[-1]),
    ];
    let cis = |m| CrossField::basis(m, Expr::one());
    let (name, provenance, nonlinearity, order) = if nonlinear {
        (
            "swift-hohenberg-nonlinear",
            "Swift-Hohenberg u_t = r*u - (1+D^2)^2 u - u^3 embedded on a periodic cross-section",
            vec![parse_multinomial("r*u - u^3")?],
            2,
        )
    } else {
        (
            "swift-hohenberg-linear",
            "linear Swift-Hohenberg u_t = -(1+D^2)^2 u embedded on a periodic cross-section",
            vec![],
            4,
        )
    };
    Ok(ProblemSpec {
        name: name.into(),
        provenance: provenance.into(),
        space: CrossSpace::PeriodicFourier { max_harmonic: FOURIER_MAX_HARMONIC },
        fields: vec!["u".into()],
        stack,
        spectral: SpectralData {
            v0: vec![cis(1), cis(-1)],
            z0: vec![cis(1), cis(-1)],
            a0: vec![vec![Scalar::zero(), Scalar::zero()], vec![Scalar::zero(), Scalar::zero()]],
            alpha: rat(0, 1),
            beta: rat(1, 1),
        },
        nonlinearity,
        params: vec![],
        amplitudes: vec!["cp".into(), "cm".into()],
        coupling_modes: if nonlinear { 2 } else { 1 },
        error_offset: 2,
        default_order: order,
    })
}

/// Builtin names with their provenance lines.
pub fn catalog() -> Vec<ProblemSpec> {
    BUILTINS.iter().map(|n| builtin(n).expect("builtins construct")).collect()
}

/// What [`validate_spec`] checked.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub spectral: SpectralReport,
    /// Lowest weighted degree of the nonlinearity, `None` when linear.
    pub nonlinear_order: Option<u32>,
}

/// Check the eigendata, the gap condition for order `order`, and the form of the nonlinearity.
pub fn validate_spec(spec: &ProblemSpec, order: u32) -> Result<ValidationReport> {
    if spec.stack.is_empty() {
        return Err(Error::Invalid("empty operator stack".into()));
    }
    if spec.amplitudes.len() != spec.spectral.dim() {
        return Err(Error::Invalid("one amplitude name is needed per slow direction".into()));
    }
    let components = match spec.space {
        CrossSpace::FiniteDim { dim } => dim,
        _ => 1,
    };
    if spec.fields.len() != components {
        return Err(Error::Invalid(format!("expected {components} field names, found {}", spec.fields.len())));
    }
    let spectral = spectral_check(&spec.space, &spec.stack, &spec.spectral, order)?;
    let mut nonlinear_order = None;
    if !spec.is_linear() {
        if spec.nonlinearity.len() != components {
            return Err(Error::Invalid(format!("expected {components} nonlinear terms, found {}", spec.nonlinearity.len())));
        }
        let mut lowest = u32::MAX;
        for f in &spec.nonlinearity {
            for n in f.names() {
                if spec.field_index(&n).is_none() && spec.param(&n).is_none() {
                    return Err(Error::Invalid(format!("nonlinearity uses unknown symbol '{n}'")));
                }
            }
            let d = f.min_degree(|v| match spec.param(&v.name) {
                Some(p) => p.weight,
                None => 1,
            });
            lowest = lowest.min(d);
        }
        if lowest < 2 {
            return Err(Error::Invalid(format!("nonlinearity has order {lowest}; at least 2 is required")));
        }
        nonlinear_order = Some(lowest);
    }
    Ok(ValidationReport { spectral, nonlinear_order })
}

/// Parse `key=value` parameter overrides.
pub fn parse_overrides<'a>(items: impl IntoIterator<Item = &'a str>) -> Result<Vec<(String, ParamValue)>> {
    let mut out = Vec::new();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Invalid(format!("parameter '{item}' is not key=value")))?;
        out.push((k.trim().to_string(), ParamValue::parse(v)?));
    }
    Ok(out)
}

/// The symbolic substitution that turns numeric parameters back into their symbols; used in reports.
pub fn param_table(spec: &ProblemSpec) -> BTreeMap<String, String> {
    spec.params.iter().map(|p| (p.key.clone(), p.value.to_string())).collect()
}
