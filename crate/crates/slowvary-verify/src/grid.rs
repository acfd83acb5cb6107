//! Periodic grids and derivatives.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, VerifyError};

pub type Field = Vec<Complex64>;

/// How spatial derivatives are computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Spectral,
    /// Second-order centred differences, a cross-check on the spectral runs.
    FiniteDifference,
}

pub struct Grid {
    pub points: usize,
    pub length: f64,
    pub scheme: Scheme,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Grid {
    pub fn new(points: usize, length: f64, scheme: Scheme) -> Result<Self> {
        if points < 8 {
            return Err(VerifyError::Config(format!("need at least 8 grid points, got {points}")));
        }
        if scheme == Scheme::Spectral && !points.is_power_of_two() {
            return Err(VerifyError::Config(format!("spectral grids need a power of two, got {points}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(VerifyError::Config(format!("bad domain length {length}")));
        }
        let mut planner = FftPlanner::new();
        Ok(Grid {
            points,
            length,
            scheme,
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
        })
    }

    pub fn dx(&self) -> f64 {
        self.length / self.points as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    /// Wavenumber of FFT bin `j`, with the Nyquist bin taken as zero for odd derivatives.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let m = self.points;
        let h = if j <= m / 2 { j as f64 } else { j as f64 - m as f64 };
        2.0 * std::f64::consts::PI * h / self.length
    }

    /// Largest resolved wavenumber.
    pub fn max_wavenumber(&self) -> f64 {
        std::f64::consts::PI * self.points as f64 / self.length
    }

    pub fn fft(&self, u: &[Complex64]) -> Field {
        let mut buf = u.to_vec();
        self.forward.process(&mut buf);
        buf
    }

    pub fn ifft(&self, u: &[Complex64]) -> Field {
        let mut buf = u.to_vec();
        self.inverse.process(&mut buf);
        let s = 1.0 / self.points as f64;
        buf.iter_mut().for_each(|z| *z *= s);
        buf
    }

    /// `∂ₓⁿ u`.
    pub fn derivative(&self, u: &[Complex64], n: u32) -> Field {
        if n == 0 {
            return u.to_vec();
        }
        match self.scheme {
            Scheme::Spectral => {
                let mut h = self.fft(u);
                let m = self.points;
                for (j, z) in h.iter_mut().enumerate() {
                    if n % 2 == 1 && j == m / 2 {
                        *z = Complex64::new(0.0, 0.0);
                    } else {
                        *z *= Complex64::new(0.0, self.wavenumber(j)).powi(n as i32);
                    }
                }
                self.ifft(&h)
            }
            Scheme::FiniteDifference => {
                let mut out = u.to_vec();
                for _ in 0..n / 2 {
                    out = self.second_difference(&out);
                }
                if n % 2 == 1 {
                    out = self.centred_difference(&out);
                }
                out
            }
        }
    }

    fn centred_difference(&self, u: &[Complex64]) -> Field {
        let m = self.points;
        let s = 0.5 / self.dx();
        (0..m).map(|j| (u[(j + 1) % m] - u[(j + m - 1) % m]) * s).collect()
    }

    fn second_difference(&self, u: &[Complex64]) -> Field {
        let m = self.points;
        let s = 1.0 / (self.dx() * self.dx());
        (0..m).map(|j| (u[(j + 1) % m] - u[j] * 2.0 + u[(j + m - 1) % m]) * s).collect()
    }

    /// `(∫|u|² dx)^{1/2}`.
    pub fn l2(&self, u: &[Complex64]) -> f64 {
        (u.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx()).sqrt()
    }

    /// `∫u dx`.
    pub fn integral(&self, u: &[Complex64]) -> Complex64 {
        u.iter().sum::<Complex64>() * self.dx()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(g: &Grid, k: f64) -> Field {
        (0..g.points).map(|j| Complex64::new((k * g.x(j)).sin(), 0.0)).collect()
    }

    #[test]
    fn spectral_derivative_of_a_sine() {
        let g = Grid::new(64, 2.0 * std::f64::consts::PI, Scheme::Spectral).unwrap();
        let d = g.derivative(&wave(&g, 3.0), 2);
        for (j, z) in d.iter().enumerate() {
            assert!((z.re + 9.0 * (3.0 * g.x(j)).sin()).abs() < 1e-10);
        }
    }

    #[test]
    fn finite_differences_converge() {
        let err = |m| {
            let g = Grid::new(m, 2.0 * std::f64::consts::PI, Scheme::FiniteDifference).unwrap();
            let d = g.derivative(&wave(&g, 1.0), 1);
            d.iter().enumerate().map(|(j, z)| (z.re - g.x(j).cos()).abs()).fold(0.0, f64::max)
        };
        let ratio = err(32) / err(64);
        assert!((3.5..4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(100, 1.0, Scheme::Spectral).is_err());
        assert!(Grid::new(100, 1.0, Scheme::FiniteDifference).is_ok());
        assert!(Grid::new(64, 0.0, Scheme::Spectral).is_err());
    }
}
