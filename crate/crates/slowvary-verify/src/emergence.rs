//! Decay of off-manifold transients in full simulations.

use num_complex::Complex64;
use slowvary::nlreduce::{reduce_nonlinear, station_manifold};
use slowvary::problems::ProblemSpec;

use crate::dispersion::least_squares;
use crate::error::{Result, VerifyError};
use crate::grid::{Field, Grid};
use crate::numeric;
use crate::sim::{simulate_full, FieldPolynomial, SimConfig, SimResult};

/// Fits with a lower R² are flagged.
pub const MIN_R2: f64 = 0.9;

#[derive(Clone, Debug)]
pub struct Fit {
    pub rate: f64,
    pub r2: f64,
}

#[derive(Clone, Debug)]
pub struct Emergence {
    pub times: Vec<f64>,
    /// L² distance from the manifold at each recorded time.
    pub distance: Vec<f64>,
    /// Exponential decay rate over the fit window; `None` without two positive samples.
    pub fit: Option<Fit>,
}

impl Emergence {
    pub fn poor_fit(&self) -> bool {
        self.fit.as_ref().is_none_or(|f| f.r2 < MIN_R2)
    }

    pub fn rate_in(&self, lo: f64, hi: f64) -> bool {
        !self.poor_fit() && self.fit.as_ref().is_some_and(|f| (lo..=hi).contains(&f.rate))
    }
}

/// The slow manifold of `problem` at `order`, as one amplitude polynomial per field.
pub struct ManifoldMap {
    z0: Vec<Vec<Complex64>>,
    fields: Vec<FieldPolynomial>,
}

impl ManifoldMap {
    pub fn new(problem: &ProblemSpec, order: u32, values: &numeric::Values) -> Result<Self> {
        let sm = reduce_nonlinear(problem, order)?;
        let u = station_manifold(problem, &sm)?;
        let values = numeric::param_values(problem, values)?;
        let fields = (0..problem.fields.len())
            .map(|i| FieldPolynomial::compile(&u.get(i as i64).autonomous(), &problem.amplitudes, &values))
            .collect::<Result<_>>()?;
        let z0 = problem
            .spectral
            .z0
            .iter()
            .map(|z| (0..problem.fields.len()).map(|i| numeric::eval(&z.get(i as i64).conj(), &values)).collect())
            .collect::<Result<_>>()?;
        Ok(ManifoldMap { z0, fields })
    }

    /// Amplitudes `⟨Z0_j, u⟩` of a full state.
    pub fn amplitudes(&self, u: &[Field]) -> Vec<Field> {
        self.z0
            .iter()
            .map(|z| {
                let mut a = vec![Complex64::new(0.0, 0.0); u[0].len()];
                for (w, f) in z.iter().zip(u) {
                    a.iter_mut().zip(f).for_each(|(x, y)| *x += w * y);
                }
                a
            })
            .collect()
    }

    /// The manifold state over amplitudes `c`.
    pub fn lift(&self, grid: &Grid, c: &[Field]) -> Vec<Field> {
        self.fields.iter().map(|p| p.evaluate(grid, c)).collect()
    }

    /// L² distance of `u` from the manifold point with the same amplitudes.
    pub fn distance(&self, grid: &Grid, u: &[Field]) -> f64 {
        let m = self.lift(grid, &self.amplitudes(u));
        let diff: Vec<f64> = u.iter().zip(&m).map(|(a, b)| {
            let d: Field = a.iter().zip(b).map(|(x, y)| x - y).collect();
            grid.l2(&d).powi(2)
        }).collect();
        diff.iter().sum::<f64>().sqrt()
    }
}

/// Simulate the full system and fit `distance ~ e^{−rate·t}` over `window`.
pub fn emergence_experiment(
    problem: &ProblemSpec,
    order: u32,
    cfg: &SimConfig,
    window: (f64, f64),
) -> Result<(Emergence, SimResult)> {
    if window.0.partial_cmp(&window.1) != Some(std::cmp::Ordering::Less) {
        return Err(VerifyError::Degenerate(format!("fit window {window:?}")));
    }
    let map = ManifoldMap::new(problem, order, &cfg.values)?;
    let sim = simulate_full(problem, cfg)?;
    let grid = cfg.grid()?;
    let distance: Vec<f64> = sim.snapshots.iter().map(|u| map.distance(&grid, u)).collect();
    let pts: Vec<(f64, f64)> = sim
        .times
        .iter()
        .zip(&distance)
        .filter(|(t, d)| (window.0..=window.1).contains(*t) && **d > 0.0)
        .map(|(t, d)| (*t, d.ln()))
        .collect();
    let fit = (pts.len() >= 2).then(|| {
        let (slope, _, r2) = least_squares(&pts);
        Fit { rate: -slope, r2 }
    });
    Ok((Emergence { times: sim.times.clone(), distance, fit }, sim))
}
