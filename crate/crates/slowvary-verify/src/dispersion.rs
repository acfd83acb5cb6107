//! Dispersion oracles and the error of linear models against them.

use num_complex::Complex64;
use slowvary::crosssec::CrossSpace;
use slowvary::linreduce::{reduce_linear, LinearReduction};
use slowvary::problems::ProblemSpec;

use crate::error::{Result, VerifyError};
use crate::numeric::{self, Values};

/// Errors below this are rounding.
pub const EXACT_TOLERANCE: f64 = 1e-12;

/// Exact slow eigenvalue of the full linear system at wavenumber `k`.
pub fn dispersion_oracle(problem: &ProblemSpec, k: f64) -> Result<Complex64> {
    match problem.name.as_str() {
        "heat-exchanger-linear" | "heat-exchanger-nonlinear" => {
            // slow eigenvalue of [[0, ik], [ik, -1]]
            let disc = 1.0 - 4.0 * k * k;
            if disc <= 0.0 {
                return Err(VerifyError::Branch(k));
            }
            Ok(Complex64::new((-1.0 + disc.sqrt()) / 2.0, 0.0))
        }
        "swift-hohenberg-linear" | "swift-hohenberg-nonlinear" => {
            let s = 1.0 - k * k;
            Ok(Complex64::new(-s * s, 0.0))
        }
        other => Err(VerifyError::Unsupported(format!("no dispersion oracle for '{other}'"))),
    }
}

/// Wavenumber of the first slow mode: zero for vector cross-sections, the harmonic
/// of the first slow eigenvector for Fourier ones.
pub fn carrier(problem: &ProblemSpec) -> f64 {
    match problem.space {
        CrossSpace::PeriodicFourier { .. } => {
            problem.spectral.v0.first().and_then(|v| v.entries().next()).map_or(0.0, |(m, _)| m as f64)
        }
        _ => 0.0,
    }
}

/// `Σ_n A_n (iκ)ⁿ` for the first amplitude.
pub fn model_symbol(red: &LinearReduction, kappa: f64, values: &Values) -> Result<Complex64> {
    Ok(numeric::matrix_symbol(&red.a, kappa, values)?[0][0])
}

#[derive(Clone, Debug, PartialEq)]
pub struct DispersionRow {
    pub k: f64,
    pub lambda_full: Complex64,
    pub lambda_model: Complex64,
    pub abs_err: f64,
}

fn rows(problem: &ProblemSpec, order: u32, kappas: &[f64], values: &Values) -> Result<Vec<DispersionRow>> {
    let red = reduce_linear(&problem.linearized(), order)?;
    let k0 = carrier(problem);
    kappas
        .iter()
        .map(|&kappa| {
            let full = dispersion_oracle(problem, k0 + kappa)?;
            let model = model_symbol(&red, kappa, values)?;
            Ok(DispersionRow { k: k0 + kappa, lambda_full: full, lambda_model: model, abs_err: (full - model).norm() })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Dispersion {
    pub rows: Vec<DispersionRow>,
    pub max_err: f64,
}

/// Model and full eigenvalues at `samples` evenly spaced offsets `κ ∈ [kmin, kmax]` from the carrier.
pub fn dispersion_table(
    problem: &ProblemSpec,
    order: u32,
    kmin: f64,
    kmax: f64,
    samples: usize,
    values: &Values,
) -> Result<Dispersion> {
    if kmin.partial_cmp(&kmax) != Some(std::cmp::Ordering::Less) || samples < 2 {
        return Err(VerifyError::Degenerate(format!("[{kmin}, {kmax}] with {samples} samples")));
    }
    let kappas: Vec<f64> =
        (0..samples).map(|i| kmin + (kmax - kmin) * i as f64 / (samples - 1) as f64).collect();
    let rows = rows(problem, order, &kappas, values)?;
    let max_err = rows.iter().map(|r| r.abs_err).fold(0.0, f64::max);
    Ok(Dispersion { rows, max_err })
}

#[derive(Clone, Debug)]
pub struct Scaling {
    pub rows: Vec<DispersionRow>,
    /// Least-squares slope of `log|err|` against `log κ`; `None` when the model is exact.
    pub slope: Option<f64>,
    pub max_err: f64,
    /// Slope the oracle's expansion predicts; `None` when the model should be exact.
    pub expected: Option<f64>,
}

impl Scaling {
    pub fn accepted(&self, tolerance: f64) -> bool {
        match (self.expected, self.slope) {
            (Some(e), Some(s)) => (s - e).abs() <= tolerance,
            (None, _) => self.max_err < EXACT_TOLERANCE,
            (Some(_), None) => false,
        }
    }
}

/// Leading power of the model error. The heat exchanger's slow branch
/// `−k² − k⁴ − 2k⁶ − …` has every even power, so a model through `(ik)^N` misses
/// the next even one; the Swift–Hohenberg symbol is a quartic and is exact at `N ≥ 4`.
pub fn expected_slope(problem: &ProblemSpec, order: u32) -> Option<f64> {
    match problem.name.as_str() {
        "swift-hohenberg-linear" | "swift-hohenberg-nonlinear" if order >= 4 => None,
        "swift-hohenberg-linear" | "swift-hohenberg-nonlinear" => Some(f64::from(order + 1)),
        _ if order % 2 == 1 => Some(f64::from(order + 1)),
        _ => Some(f64::from(order + 2)),
    }
}

/// `|λ_full − λ_model|` at `samples` log-spaced offsets in `[kmin, kmax]`, and its log-log slope.
pub fn error_scaling_experiment(
    problem: &ProblemSpec,
    order: u32,
    kmin: f64,
    kmax: f64,
    samples: usize,
    values: &Values,
) -> Result<Scaling> {
    if !(kmin > 0.0 && kmin < kmax) || samples < 2 {
        return Err(VerifyError::Degenerate(format!("[{kmin}, {kmax}] with {samples} samples")));
    }
    let (a, b) = (kmin.ln(), kmax.ln());
    let kappas: Vec<f64> = (0..samples).map(|i| (a + (b - a) * i as f64 / (samples - 1) as f64).exp()).collect();
    let rows = rows(problem, order, &kappas, values)?;
    let max_err = rows.iter().map(|r| r.abs_err).fold(0.0, f64::max);
    let slope = if max_err < EXACT_TOLERANCE {
        None
    } else {
        let k0 = carrier(problem);
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((r.k - k0).ln(), r.abs_err.ln())).collect();
        Some(least_squares(&pts).0)
    };
    Ok(Scaling { rows, slope, max_err, expected: expected_slope(problem, order) })
}

/// Slope, intercept and R² of the line through `pts`.
pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}
