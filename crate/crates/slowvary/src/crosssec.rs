//! Cross-sectional function spaces and the operators acting on them.
//!
//! A [`CrossField`] is a sparse map from basis index to [`Expr`] coefficient.
//! The index means a vector component (`FiniteDim`), a power of `y`
//! (`NeumannChannel`) or a Fourier harmonic `e^{imy}` (`PeriodicFourier`), so
//! the same container serves all three spaces.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};
use slowvary_algebra::{conv, fmt_rational, BigRational, Expr, GradedRing, Scalar, Symbol};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CrossSpace {
    /// `R^dim` with the plain dot product.
    FiniteDim { dim: usize },
    /// Polynomials in `y ∈ [−1, 1]` of degree at most `max_degree`, paired by `½∫ z·v dy`.
    NeumannChannel { max_degree: i64 },
    /// Trigonometric polynomials with harmonics `|m| ≤ max_harmonic`, paired by
    /// `(1/2π)∫ conj(z)·v dy`.
    PeriodicFourier { max_harmonic: i64 },
}

impl CrossSpace {
    pub fn kind_name(&self) -> &'static str {
        match self {
            CrossSpace::FiniteDim { .. } => "finite-dimensional",
            CrossSpace::NeumannChannel { .. } => "neumann-channel",
            CrossSpace::PeriodicFourier { .. } => "periodic-fourier",
        }
    }

    fn check_index(&self, i: i64) -> Result<()> {
        match *self {
            CrossSpace::FiniteDim { dim } => {
                if i < 0 || i >= dim as i64 {
                    return Err(Error::CapOverflow { what: "component", got: i, cap: dim as i64 - 1 });
                }
            }
            CrossSpace::NeumannChannel { max_degree } => {
                if i < 0 || i > max_degree {
                    return Err(Error::CapOverflow { what: "y-degree", got: i, cap: max_degree });
                }
            }
            CrossSpace::PeriodicFourier { max_harmonic } => {
                if i.abs() > max_harmonic {
                    return Err(Error::CapOverflow { what: "harmonic", got: i, cap: max_harmonic });
                }
            }
        }
        Ok(())
    }

    /// Every basis index of the space, in order.
    pub fn indices(&self) -> Vec<i64> {
        match *self {
            CrossSpace::FiniteDim { dim } => (0..dim as i64).collect(),
            CrossSpace::NeumannChannel { max_degree } => (0..=max_degree).collect(),
            CrossSpace::PeriodicFourier { max_harmonic } => (-max_harmonic..=max_harmonic).collect(),
        }
    }
}

/// An element of a cross-sectional space with expression coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct CrossField {
    entries: BTreeMap<i64, Expr>,
}

impl CrossField {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `e` times basis element `i`.
    pub fn basis(i: i64, e: Expr) -> Self {
        let mut f = Self::zero();
        f.add_at(i, &e);
        f
    }

    /// A field constant across the section (index 0).
    pub fn scalar(e: Expr) -> Self {
        Self::basis(0, e)
    }

    pub fn from_vec(v: Vec<Expr>) -> Self {
        let mut f = Self::zero();
        for (i, e) in v.into_iter().enumerate() {
            f.add_at(i as i64, &e);
        }
        f
    }

    pub fn get(&self, i: i64) -> Expr {
        self.entries.get(&i).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn entries(&self) -> impl Iterator<Item = (i64, &Expr)> {
        self.entries.iter().map(|(i, e)| (*i, e))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of stored terms across all entries.
    pub fn size(&self) -> usize {
        self.entries.values().map(Expr::len).sum()
    }

    pub fn add_at(&mut self, i: i64, e: &Expr) {
        let slot = self.entries.entry(i).or_default();
        slot.add_assign(e);
        if slot.is_zero() {
            self.entries.remove(&i);
        }
    }

    pub fn add_assign(&mut self, other: &CrossField) {
        for (i, e) in &other.entries {
            self.add_at(*i, e);
        }
    }

    /// Apply `f` to every entry, dropping entries that become zero.
    pub fn map(&self, mut f: impl FnMut(&Expr) -> Expr) -> CrossField {
        let mut out = CrossField::zero();
        for (i, e) in &self.entries {
            out.add_at(*i, &f(e));
        }
        out
    }

    pub fn try_map<E>(&self, mut f: impl FnMut(&Expr) -> std::result::Result<Expr, E>) -> std::result::Result<CrossField, E> {
        let mut out = CrossField::zero();
        for (i, e) in &self.entries {
            out.add_at(*i, &f(e)?);
        }
        Ok(out)
    }

    pub fn scale(&self, s: &Scalar) -> CrossField {
        self.map(|e| e.scale(s))
    }

    pub fn mul_expr(&self, k: &Expr) -> CrossField {
        self.map(|e| e * k)
    }

    pub fn truncate(&self, ring: &GradedRing) -> CrossField {
        self.map(|e| ring.truncate(e))
    }

    /// The `y`-polynomial `Σ e_k y^k` of a channel field.
    pub fn to_y_expr(&self) -> Expr {
        let y = Expr::slow("y");
        let mut out = Expr::zero();
        for (k, e) in &self.entries {
            out.add_assign(&(e * &y.pow(*k as u32)));
        }
        out
    }

    /// Inverse of [`CrossField::to_y_expr`]: split an expression by powers of `y`.
    pub fn from_y_expr(e: &Expr) -> CrossField {
        let y = Symbol::slow("y");
        let mut out = CrossField::zero();
        for k in 0..=e.max_degree(&y) {
            out.add_at(i64::from(k), &e.coeff(&y, k));
        }
        out
    }

    /// Human-readable form in the given space.
    pub fn render(&self, space: &CrossSpace) -> String {
        match space {
            CrossSpace::FiniteDim { dim } => {
                let parts: Vec<String> = (0..*dim as i64).map(|i| self.get(i).to_string()).collect();
                format!("({})", parts.join(", "))
            }
            CrossSpace::NeumannChannel { .. } => self.to_y_expr().to_string(),
            CrossSpace::PeriodicFourier { .. } => {
                if self.is_zero() {
                    return "0".to_string();
                }
                let parts: Vec<String> =
                    self.entries.iter().map(|(m, e)| format!("({e})*cis({m}*y)")).collect();
                parts.join(" + ")
            }
        }
    }
}

impl fmt::Display for CrossField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|(i, e)| format!("{i}: {e}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

impl std::ops::Add for &CrossField {
    type Output = CrossField;
    fn add(self, rhs: &CrossField) -> CrossField {
        let mut out = self.clone();
        out.add_assign(rhs);
        out
    }
}

impl std::ops::Sub for &CrossField {
    type Output = CrossField;
    fn sub(self, rhs: &CrossField) -> CrossField {
        let mut out = self.clone();
        for (i, e) in &rhs.entries {
            out.add_at(*i, &-e);
        }
        out
    }
}

impl std::ops::Neg for &CrossField {
    type Output = CrossField;
    fn neg(self) -> CrossField {
        self.map(|e| -e)
    }
}

/// A linear operator on one of the cross-sectional spaces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CrossOp {
    /// Square matrix acting on `FiniteDim` vectors.
    Matrix(Vec<Vec<Expr>>),
    /// `Σ_j p_j(y) ∂_y^j`; entry `j` holds the polynomial `p_j` as a channel field.
    Channel(Vec<CrossField>),
    /// `Σ_j a_j ∂_y^j` on harmonics; `e^{imy}` is scaled by `Σ_j a_j (im)^j`.
    Fourier(Vec<Expr>),
}

impl CrossOp {
    pub fn matrix_int(rows: &[&[i64]]) -> CrossOp {
        CrossOp::Matrix(rows.iter().map(|r| r.iter().map(|&x| Expr::int(x)).collect()).collect())
    }

    pub fn fourier_int(coefs: &[i64]) -> CrossOp {
        CrossOp::Fourier(coefs.iter().map(|&x| Expr::int(x)).collect())
    }

    /// `∂_yy` on channel fields.
    pub fn d_yy() -> CrossOp {
        CrossOp::Channel(vec![CrossField::zero(), CrossField::zero(), CrossField::scalar(Expr::one())])
    }

    /// Multiplication by the channel polynomial `p`.
    pub fn channel_multiply(p: CrossField) -> CrossOp {
        CrossOp::Channel(vec![p])
    }

    /// True when the operator is identically zero.
    pub fn is_zero(&self) -> bool {
        match self {
            CrossOp::Matrix(m) => m.iter().flatten().all(Expr::is_zero),
            CrossOp::Channel(ps) => ps.iter().all(CrossField::is_zero),
            CrossOp::Fourier(a) => a.iter().all(Expr::is_zero),
        }
    }

    /// Substitute symbols in every coefficient.
    pub fn subs(&self, map: &BTreeMap<Symbol, Expr>) -> CrossOp {
        match self {
            CrossOp::Matrix(m) => CrossOp::Matrix(m.iter().map(|r| r.iter().map(|e| e.subs(map)).collect()).collect()),
            CrossOp::Channel(ps) => CrossOp::Channel(ps.iter().map(|p| p.map(|e| e.subs(map))).collect()),
            CrossOp::Fourier(a) => CrossOp::Fourier(a.iter().map(|e| e.subs(map)).collect()),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            CrossOp::Matrix(m) => {
                let rows: Vec<String> = m
                    .iter()
                    .map(|r| format!("[{}]", r.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ")))
                    .collect();
                format!("[{}]", rows.join(", "))
            }
            CrossOp::Channel(ps) => {
                let mut parts = Vec::new();
                for (j, p) in ps.iter().enumerate() {
                    if p.is_zero() {
                        continue;
                    }
                    let poly = p.to_y_expr();
                    parts.push(match j {
                        0 => format!("({poly})"),
                        1 => format!("({poly})*D_y"),
                        _ => format!("({poly})*D_y^{j}"),
                    });
                }
                if parts.is_empty() {
                    "0".to_string()
                } else {
                    parts.join(" + ")
                }
            }
            CrossOp::Fourier(a) => {
                let d = Symbol::slow("D_y");
                let mut e = Expr::zero();
                for (j, c) in a.iter().enumerate() {
                    e.add_assign(&(c * &Expr::sym(&d).pow(j as u32)));
                }
                e.to_string()
            }
        }
    }
}

/// `Σ_j a_j (im)^j`, the multiplier of `e^{imy}`.
pub fn fourier_symbol(a: &[Expr], m: i64) -> Expr {
    let im = Scalar::new(BigRational::zero(), BigRational::from_integer(m.into()));
    let mut out = Expr::zero();
    for (j, c) in a.iter().enumerate() {
        out.add_assign(&c.scale(&im.pow(j as u32)));
    }
    out
}

fn channel_derivative(v: &CrossField, j: usize) -> CrossField {
    let mut out = CrossField::zero();
    for (k, e) in v.entries() {
        if k < j as i64 {
            continue;
        }
        let falling: i64 = (0..j as i64).map(|t| k - t).product();
        out.add_at(k - j as i64, &e.scale(&Scalar::from_int(falling)));
    }
    out
}

fn unbounded() -> GradedRing {
    GradedRing::new(u32::MAX)
}

/// Apply `op` to `v`.
pub fn apply_op(space: &CrossSpace, op: &CrossOp, v: &CrossField) -> Result<CrossField> {
    let out = match (space, op) {
        (CrossSpace::FiniteDim { dim }, CrossOp::Matrix(m)) => {
            if m.len() != *dim || m.iter().any(|r| r.len() != *dim) {
                return Err(Error::VariantMismatch(format!("matrix is not {dim}x{dim}")));
            }
            let mut out = CrossField::zero();
            for (i, row) in m.iter().enumerate() {
                for (j, a) in row.iter().enumerate() {
                    if a.is_zero() {
                        continue;
                    }
                    out.add_at(i as i64, &(a * &v.get(j as i64)));
                }
            }
            out
        }
        (CrossSpace::NeumannChannel { .. }, CrossOp::Channel(ps)) => {
            let mut out = CrossField::zero();
            for (j, p) in ps.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                let dv = channel_derivative(v, j);
                out.add_assign(&mul_fields(space, p, &dv, &unbounded())?);
            }
            out
        }
        (CrossSpace::PeriodicFourier { .. }, CrossOp::Fourier(a)) => {
            let mut out = CrossField::zero();
            for (m, e) in v.entries() {
                out.add_at(m, &(e * &fourier_symbol(a, m)));
            }
            out
        }
        _ => return Err(Error::VariantMismatch(format!("operator does not act on a {} space", space.kind_name()))),
    };
    for (i, _) in out.entries() {
        space.check_index(i)?;
    }
    Ok(out)
}

/// Pointwise product of two fields, truncated in `ring`.
pub fn mul_fields(space: &CrossSpace, a: &CrossField, b: &CrossField, ring: &GradedRing) -> Result<CrossField> {
    if matches!(space, CrossSpace::FiniteDim { .. }) {
        return Err(Error::VariantMismatch("vector fields have no pointwise product".into()));
    }
    let mut out = CrossField::zero();
    for (i, x) in a.entries() {
        for (j, y) in b.entries() {
            let p = ring.mul(x, y);
            if !p.is_zero() {
                space.check_index(i + j)?;
                out.add_at(i + j, &p);
            }
        }
    }
    Ok(out)
}

/// The pairing `⟨z, v⟩` of the space.
pub fn inner(space: &CrossSpace, z: &CrossField, v: &CrossField) -> Expr {
    let mut out = Expr::zero();
    match space {
        CrossSpace::FiniteDim { .. } => {
            for (i, a) in z.entries() {
                out.add_assign(&(a * &v.get(i)));
            }
        }
        CrossSpace::NeumannChannel { .. } => {
            for (a, za) in z.entries() {
                for (b, vb) in v.entries() {
                    if (a + b) % 2 == 0 {
                        out.add_assign(&(za * vb).scale(&Scalar::ratio(1, a + b + 1)));
                    }
                }
            }
        }
        CrossSpace::PeriodicFourier { .. } => {
            for (m, a) in z.entries() {
                out.add_assign(&(&a.conj() * &v.get(m)));
            }
        }
    }
    out
}

/// Matrix of pairings `⟨z_i, v_j⟩`.
pub fn inner_matrix(space: &CrossSpace, z: &[CrossField], v: &[CrossField]) -> Vec<Vec<Expr>> {
    z.iter().map(|zi| v.iter().map(|vj| inner(space, zi, vj)).collect()).collect()
}

/// Eigendata of the slow subspace: `L₀V₀ = V₀A₀`, `⟨Z₀,V₀⟩ = I`, and the gap `α < β`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectralData {
    pub v0: Vec<CrossField>,
    pub z0: Vec<CrossField>,
    pub a0: Vec<Vec<Scalar>>,
    pub alpha: BigRational,
    pub beta: BigRational,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.v0.len()
    }

    /// `⟨Z₀_j, v⟩` for each slow direction `j`.
    pub fn project(&self, space: &CrossSpace, v: &CrossField) -> Vec<Expr> {
        self.z0.iter().map(|z| inner(space, z, v)).collect()
    }

    /// `Σ_j V₀_j a_j`.
    pub fn combine(&self, amps: &[Expr]) -> CrossField {
        let mut out = CrossField::zero();
        for (v, a) in self.v0.iter().zip(amps) {
            out.add_assign(&v.mul_expr(a));
        }
        out
    }

    fn diagonal_shift(&self, j: usize) -> Result<Scalar> {
        for (i, row) in self.a0.iter().enumerate() {
            for (k, a) in row.iter().enumerate() {
                if i != k && !a.is_zero() {
                    return Err(Error::Unsolvable("A0 must be diagonal for the static solve".into()));
                }
            }
        }
        Ok(self.a0[j][j].clone())
    }
}

/// Eigenvalue of `L₀` at basis index `i`, when `L₀` is diagonal in the basis with constant entries.
pub fn basis_eigenvalue(space: &CrossSpace, l0: &CrossOp, i: i64) -> Option<Scalar> {
    match (space, l0) {
        (CrossSpace::FiniteDim { dim }, CrossOp::Matrix(m)) => {
            let i = i as usize;
            if i >= *dim {
                return None;
            }
            let off_zero = (0..*dim).all(|k| k == i || (m[i][k].is_zero() && m[k][i].is_zero()));
            if off_zero {
                m[i][i].as_constant()
            } else {
                None
            }
        }
        (CrossSpace::PeriodicFourier { .. }, CrossOp::Fourier(a)) => fourier_symbol(a, i).as_constant(),
        _ => None,
    }
}

/// Negative decay rate along basis index `i`, or an error when it does not decay.
pub fn decay_rate(space: &CrossSpace, l0: &CrossOp, i: i64) -> Result<BigRational> {
    let lam = basis_eigenvalue(space, l0, i)
        .ok_or_else(|| Error::Unsolvable(format!("L0 is not diagonal at index {i}")))?;
    match lam.as_real() {
        Some(r) if r.is_negative() => Ok(r.clone()),
        _ => Err(Error::Unsolvable(format!("residual along the non-decaying mode {i} (eigenvalue {lam})"))),
    }
}

/// Solve `(L₀ − ∂t)v = −res` componentwise: each decaying component becomes
/// a history convolution `z(res_i; λ_i)`.
///
/// The caller removes the slow part of `res` first.
pub fn linv_residual(space: &CrossSpace, l0: &CrossOp, res: &CrossField) -> Result<CrossField> {
    let mut out = CrossField::zero();
    for (i, e) in res.entries() {
        let lam = decay_rate(space, l0, i)?;
        out.add_at(i, &conv(e, &lam)?);
    }
    Ok(out)
}

/// Solve `L₀V − V·A₀ = rhs` with `⟨Z₀,V⟩ = 0`, one column per slow direction.
///
/// The postcondition is checked exactly before returning.
pub fn linv_static(space: &CrossSpace, l0: &CrossOp, spec: &SpectralData, rhs: &[CrossField]) -> Result<Vec<CrossField>> {
    let mut cols = Vec::with_capacity(rhs.len());
    for (j, r) in rhs.iter().enumerate() {
        let shift = spec.diagonal_shift(j)?;
        let v = match space {
            CrossSpace::FiniteDim { dim } => solve_vector(*dim, l0, &shift, spec, r)?,
            CrossSpace::NeumannChannel { .. } => solve_channel(space, l0, &shift, spec, r)?,
            CrossSpace::PeriodicFourier { .. } => solve_fourier(space, l0, &shift, r)?,
        };
        let lhs = &apply_op(space, l0, &v)? - &v.scale(&shift);
        if lhs != *r {
            return Err(Error::Inconsistent(format!("static solve residual {}", (&lhs - r))));
        }
        if spec.project(space, &v).iter().any(|p| !p.is_zero()) {
            return Err(Error::Inconsistent("static solve leaves a slow component".into()));
        }
        cols.push(v);
    }
    Ok(cols)
}

fn solve_vector(dim: usize, l0: &CrossOp, shift: &Scalar, spec: &SpectralData, rhs: &CrossField) -> Result<CrossField> {
    let CrossOp::Matrix(m) = l0 else {
        return Err(Error::VariantMismatch("vector space needs a matrix L0".into()));
    };
    let mut rows: Vec<Vec<Scalar>> = Vec::new();
    let mut b: Vec<Expr> = Vec::new();
    for (i, row) in m.iter().enumerate() {
        let mut r = Vec::with_capacity(dim);
        for (k, e) in row.iter().enumerate() {
            let mut a = e
                .as_constant()
                .ok_or_else(|| Error::Unsolvable("L0 entries must be constants".into()))?;
            if i == k {
                a -= shift;
            }
            r.push(a);
        }
        rows.push(r);
        b.push(rhs.get(i as i64));
    }
    for z in &spec.z0 {
        let r = (0..dim as i64)
            .map(|i| z.get(i).as_constant().ok_or_else(|| Error::Unsolvable("Z0 entries must be constants".into())))
            .collect::<Result<Vec<_>>>()?;
        rows.push(r);
        b.push(Expr::zero());
    }
    let x = gauss_jordan(rows, b, dim)?;
    Ok(CrossField::from_vec(x))
}

/// Exact Gauss–Jordan elimination for a consistent, full-column-rank system.
fn gauss_jordan(mut rows: Vec<Vec<Scalar>>, mut b: Vec<Expr>, n: usize) -> Result<Vec<Expr>> {
    let mut rank = 0;
    let mut pivots = Vec::new();
    for col in 0..n {
        let Some(p) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        b.swap(rank, p);
        let inv = rows[rank][col].inv().expect("nonzero pivot");
        for a in rows[rank].iter_mut() {
            *a = &*a * &inv;
        }
        b[rank] = b[rank].scale(&inv);
        for r in 0..rows.len() {
            if r == rank || rows[r][col].is_zero() {
                continue;
            }
            let f = rows[r][col].clone();
            let pivot_row = rows[rank].clone();
            for (x, p) in rows[r].iter_mut().zip(&pivot_row).take(n) {
                *x -= &(&f * p);
            }
            let d = b[rank].scale(&f);
            b[r].sub_assign(&d);
        }
        pivots.push(col);
        rank += 1;
    }
    if b[rank..].iter().any(|e| !e.is_zero()) {
        return Err(Error::Unsolvable("right-hand side has a component along the slow subspace".into()));
    }
    if rank < n {
        return Err(Error::Unsolvable("the static solve is underdetermined".into()));
    }
    let mut x = vec![Expr::zero(); n];
    for (r, col) in pivots.into_iter().enumerate() {
        x[col] = b[r].clone();
    }
    Ok(x)
}

fn is_d_yy(l0: &CrossOp) -> bool {
    match l0 {
        CrossOp::Channel(ps) => {
            ps.len() == 3 && ps[0].is_zero() && ps[1].is_zero() && ps[2] == CrossField::scalar(Expr::one())
        }
        _ => false,
    }
}

/// `∫_{−1}^{y} p`, as a channel polynomial.
fn integrate_from_minus_one(p: &CrossField) -> CrossField {
    let mut out = CrossField::zero();
    let mut at_minus_one = Expr::zero();
    for (k, e) in p.entries() {
        let c = e.scale(&Scalar::ratio(1, k + 1));
        out.add_at(k + 1, &c);
        // (−1)^{k+1}/(k+1)
        let sign = if (k + 1) % 2 == 0 { 1 } else { -1 };
        at_minus_one.add_assign(&c.scale(&Scalar::from_int(sign)));
    }
    out.add_at(0, &-&at_minus_one);
    out
}

fn solve_channel(space: &CrossSpace, l0: &CrossOp, shift: &Scalar, spec: &SpectralData, rhs: &CrossField) -> Result<CrossField> {
    if !is_d_yy(l0) || !shift.is_zero() {
        return Err(Error::Unsolvable("channel solves need L0 = D_yy and A0 = 0".into()));
    }
    let one = CrossField::scalar(Expr::one());
    if !inner(space, &one, rhs).is_zero() {
        return Err(Error::Unsolvable("right-hand side has nonzero cross-sectional mean".into()));
    }
    let slope = integrate_from_minus_one(rhs);
    let mut v = integrate_from_minus_one(&slope);
    for (k, _) in v.entries() {
        space.check_index(k)?;
    }
    let z = spec.z0.first().ok_or_else(|| Error::Unsolvable("no slow direction".into()))?;
    let norm = inner(space, z, &one)
        .as_constant()
        .and_then(|c| c.inv())
        .ok_or_else(|| Error::Unsolvable("Z0 is orthogonal to constants".into()))?;
    let c = inner(space, z, &v).scale(&norm);
    v.add_at(0, &-c);
    // Neumann condition at both walls
    let dv = channel_derivative(&v, 1);
    let at = |sign: i64| {
        let mut s = Expr::zero();
        for (k, e) in dv.entries() {
            s.add_assign(&e.scale(&Scalar::from_int(sign.pow(k as u32))));
        }
        s
    };
    if !at(1).is_zero() || !at(-1).is_zero() {
        return Err(Error::Inconsistent("channel solve violates the Neumann condition".into()));
    }
    Ok(v)
}

fn solve_fourier(space: &CrossSpace, l0: &CrossOp, shift: &Scalar, rhs: &CrossField) -> Result<CrossField> {
    let mut v = CrossField::zero();
    for (m, e) in rhs.entries() {
        let lam = basis_eigenvalue(space, l0, m)
            .ok_or_else(|| Error::Unsolvable("L0 must have constant Fourier symbol".into()))?;
        let d = &lam - shift;
        match d.inv() {
            Some(inv) => v.add_at(m, &e.scale(&inv)),
            None => return Err(Error::Unsolvable(format!("right-hand side excites the slow harmonic {m}"))),
        }
    }
    Ok(v)
}

/// What [`spectral_check`] verified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectralReport {
    pub order: u32,
    pub alpha: BigRational,
    pub beta: BigRational,
    /// `(label, eigenvalue)` for the stable modes seen by the residual solve.
    pub stable: Vec<(String, String)>,
}

impl fmt::Display for SpectralReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "alpha = {}, beta = {}, order = {}", fmt_rational(&self.alpha), fmt_rational(&self.beta), self.order)?;
        for (label, lam) in &self.stable {
            writeln!(f, "  {label}: {lam}")?;
        }
        Ok(())
    }
}

/// Verify the eigendata identities exactly and the gap condition `β > N·α`.
pub fn spectral_check(space: &CrossSpace, stack: &[CrossOp], spec: &SpectralData, order: u32) -> Result<SpectralReport> {
    let m = spec.dim();
    let l0 = stack.first().ok_or_else(|| Error::Spectral("empty operator stack".into()))?;
    if m == 0 || spec.z0.len() != m || spec.a0.len() != m || spec.a0.iter().any(|r| r.len() != m) {
        return Err(Error::Spectral("V0, Z0 and A0 dimensions disagree".into()));
    }
    for (j, v) in spec.v0.iter().enumerate() {
        let mut lhs = apply_op(space, l0, v)?;
        for (i, vi) in spec.v0.iter().enumerate() {
            lhs = &lhs - &vi.scale(&spec.a0[i][j]);
        }
        if !lhs.is_zero() {
            return Err(Error::Spectral(format!("L0 V0 != V0 A0 in column {j}")));
        }
    }
    let g = inner_matrix(space, &spec.z0, &spec.v0);
    for (i, row) in g.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            let want = if i == j { Expr::one() } else { Expr::zero() };
            if *e != want {
                return Err(Error::Spectral(format!("<Z0,V0> is not the identity at ({i},{j})")));
            }
        }
    }
    // Z0 must be a left eigenbasis where the basis is finite and L0 maps it to itself
    if !matches!(space, CrossSpace::NeumannChannel { .. }) {
        for k in space.indices() {
            let e = CrossField::basis(k, Expr::one());
            let le = apply_op(space, l0, &e)?;
            for i in 0..m {
                let lhs = inner(space, &spec.z0[i], &le);
                let mut rhs = Expr::zero();
                for l in 0..m {
                    rhs.add_assign(&inner(space, &spec.z0[l], &e).scale(&spec.a0[i][l]));
                }
                if lhs != rhs {
                    return Err(Error::Spectral(format!("Z0 is not a left eigenbasis (row {i}, index {k})")));
                }
            }
        }
    }
    if spec.alpha.is_negative() || !spec.beta.is_positive() {
        return Err(Error::Spectral("gap bounds need 0 <= alpha and beta > 0".into()));
    }
    if spec.beta <= &spec.alpha * BigRational::from_integer(order.into()) {
        return Err(Error::Spectral(format!(
            "gap condition beta > N*alpha fails: beta = {}, N*alpha = {}",
            fmt_rational(&spec.beta),
            fmt_rational(&(&spec.alpha * BigRational::from_integer(order.into())))
        )));
    }
    let mut stable = Vec::new();
    match space {
        CrossSpace::NeumannChannel { .. } => {
            // eigenvalues −(kπ/2)², the first being π²/4 > 2.4674
            if spec.beta > BigRational::new(24674.into(), 10000.into()) {
                return Err(Error::Spectral("beta exceeds the channel gap pi^2/4".into()));
            }
            stable.push(("cos(k*pi*(y+1)/2), k>=1".to_string(), "-(k*pi/2)^2".to_string()));
        }
        _ => {
            let slow: Vec<i64> = spec.v0.iter().flat_map(|v| v.entries().map(|(i, _)| i).collect::<Vec<_>>()).collect();
            for k in space.indices() {
                if slow.contains(&k) {
                    continue;
                }
                let lam = basis_eigenvalue(space, l0, k)
                    .ok_or_else(|| Error::Spectral(format!("L0 is not diagonal at index {k}")))?;
                let re = lam.as_real().ok_or_else(|| Error::Spectral(format!("complex eigenvalue {lam}")))?;
                if *re > -spec.beta.clone() {
                    return Err(Error::Spectral(format!("eigenvalue {lam} at index {k} is above -beta")));
                }
                stable.push((format!("index {k}"), lam.to_string()));
            }
        }
    }
    Ok(SpectralReport { order, alpha: spec.alpha.clone(), beta: spec.beta.clone(), stable })
}

#[cfg(test)]
mod tests {
    use super::*;
    use slowvary_algebra::{parse_expr, rat, Registry};

    fn channel() -> CrossSpace {
        CrossSpace::NeumannChannel { max_degree: 16 }
    }

    fn y(src: &str) -> CrossField {
        CrossField::from_y_expr(&parse_expr(src, &Registry::new()).unwrap())
    }

    fn fourier() -> CrossSpace {
        CrossSpace::PeriodicFourier { max_harmonic: 4 }
    }

    fn sh_l0() -> CrossOp {
        CrossOp::fourier_int(&[-1, 0, -2, 0, -1])
    }

    #[test]
    fn channel_pairings() {
        let s = channel();
        assert_eq!(inner(&s, &y("1"), &y("1")), Expr::one());
        assert_eq!(inner(&s, &y("1"), &y("y^2")), Expr::ratio(1, 3));
        assert_eq!(inner(&s, &y("1"), &y("y^3")), Expr::zero());
    }

    #[test]
    fn fourier_pairing_conjugates() {
        let s = fourier();
        let e = CrossField::basis(1, Expr::one());
        let ie = CrossField::basis(1, Expr::constant(Scalar::i()));
        assert_eq!(inner(&s, &e, &e), Expr::one());
        assert_eq!(inner(&s, &ie, &ie), Expr::one());
        assert_eq!(inner(&s, &e, &CrossField::basis(-1, Expr::one())), Expr::zero());
    }

    #[test]
    fn operator_images() {
        let hx = CrossSpace::FiniteDim { dim: 2 };
        let l0 = CrossOp::matrix_int(&[&[0, 0], &[0, -1]]);
        let v = CrossField::from_vec(vec![Expr::zero(), Expr::one()]);
        assert_eq!(apply_op(&hx, &l0, &v).unwrap(), CrossField::from_vec(vec![Expr::zero(), Expr::int(-1)]));

        let pe = parse_expr("-3/2*Pe*(1-y^2)", &Registry::new()).unwrap();
        let l1 = CrossOp::channel_multiply(CrossField::from_y_expr(&pe));
        assert_eq!(apply_op(&channel(), &l1, &y("1")).unwrap().to_y_expr(), pe);

        let s = fourier();
        for k in -3..=3 {
            let img = apply_op(&s, &sh_l0(), &CrossField::basis(k, Expr::one())).unwrap();
            assert_eq!(img.get(k), Expr::int(-(1 - k * k).pow(2)));
        }
        assert!(apply_op(&s, &sh_l0(), &CrossField::basis(5, Expr::one())).is_err());
        assert!(apply_op(&hx, &sh_l0(), &v).is_err());
    }

    #[test]
    fn static_solves() {
        let spec = SpectralData {
            v0: vec![y("1")],
            z0: vec![y("1")],
            a0: vec![vec![Scalar::zero()]],
            alpha: rat(0, 1),
            beta: rat(2, 1),
        };
        let rhs = y("Pe*(1/2 - 3/2*y^2)");
        let v = linv_static(&channel(), &CrossOp::d_yy(), &spec, &[rhs]).unwrap();
        let want = parse_expr("Pe*(-7/120 + 1/4*y^2 - 1/8*y^4)", &Registry::new()).unwrap();
        assert_eq!(v[0].to_y_expr(), want);
        assert!(linv_static(&channel(), &CrossOp::d_yy(), &spec, &[y("1")]).is_err());

        let hx = CrossSpace::FiniteDim { dim: 2 };
        let l0 = CrossOp::matrix_int(&[&[0, 0], &[0, -1]]);
        let e0 = CrossField::from_vec(vec![Expr::one(), Expr::zero()]);
        let hspec = SpectralData {
            v0: vec![e0.clone()],
            z0: vec![e0],
            a0: vec![vec![Scalar::zero()]],
            alpha: rat(0, 1),
            beta: rat(1, 1),
        };
        let v = linv_static(&hx, &l0, &hspec, &[CrossField::from_vec(vec![Expr::zero(), Expr::int(-1)])]).unwrap();
        assert_eq!(v[0], CrossField::from_vec(vec![Expr::zero(), Expr::one()]));
        let bad = CrossField::from_vec(vec![Expr::one(), Expr::zero()]);
        assert!(linv_static(&hx, &l0, &hspec, &[bad]).is_err());
    }

    #[test]
    fn residual_solve_makes_convolutions() {
        let w = Expr::coupling("w");
        let v = linv_residual(&fourier(), &sh_l0(), &CrossField::basis(0, w.clone())).unwrap();
        assert_eq!(v.get(0).to_string(), "Z[w;-1]");
        let v = linv_residual(&fourier(), &sh_l0(), &CrossField::basis(3, Expr::slow("a"))).unwrap();
        assert_eq!(v.get(3), Expr::slow("a").scale(&Scalar::ratio(1, 64)));
        assert!(linv_residual(&fourier(), &sh_l0(), &CrossField::basis(1, w)).is_err());
    }

    #[test]
    fn channel_operator_is_self_adjoint_on_neumann_fields() {
        // fields with zero slope at both walls, built by the solver
        let spec = SpectralData {
            v0: vec![y("1")],
            z0: vec![y("1")],
            a0: vec![vec![Scalar::zero()]],
            alpha: rat(0, 1),
            beta: rat(2, 1),
        };
        let a = linv_static(&channel(), &CrossOp::d_yy(), &spec, &[y("1 - 3*y^2")]).unwrap().remove(0);
        let b = linv_static(&channel(), &CrossOp::d_yy(), &spec, &[y("y^4 - 1/5 + 2*y")]).unwrap().remove(0);
        let s = channel();
        let lhs = inner(&s, &apply_op(&s, &CrossOp::d_yy(), &a).unwrap(), &b);
        let rhs = inner(&s, &a, &apply_op(&s, &CrossOp::d_yy(), &b).unwrap());
        assert_eq!(lhs, rhs);
    }
}
