//! Initial data: exact step functions and synthetic power-law data.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{japanese, sobolev_norm, FourierState};

/// A piecewise-constant function on the circle. `values[i]` holds on
/// `[jumps[i], jumps[i+1])`, the last interval wrapping around to `jumps[0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepFunctionSpec {
    pub jumps: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepFunctionSpec {
    pub fn new(jumps: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let spec = Self { jumps, values };
        spec.validate()?;
        Ok(spec)
    }

    /// Indicator of `[0, π)`.
    pub fn indicator_half() -> Self {
        Self {
            jumps: vec![0.0, PI],
            values: vec![1.0, 0.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.jumps.is_empty() {
            return Err(Error::InvalidParameter("step function needs at least one jump".into()));
        }
        if self.jumps.len() != self.values.len() {
            return Err(Error::InvalidParameter(format!(
                "{} jumps need {} values, got {}",
                self.jumps.len(),
                self.jumps.len(),
                self.values.len()
            )));
        }
        if self.jumps.iter().chain(&self.values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite jump or value".into()));
        }
        if self.jumps.iter().any(|&x| !(0.0..TAU).contains(&x)) {
            return Err(Error::InvalidParameter("jump locations must lie in [0, 2π)".into()));
        }
        if self.jumps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("jump locations must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Number of locations where the value actually changes.
    pub fn jump_count(&self) -> usize {
        let n = self.values.len();
        (0..n).filter(|&i| self.values[i] != self.values[(i + n - 1) % n]).count()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.rem_euclid(TAU);
        match self.jumps.iter().rposition(|&a| a <= x) {
            Some(i) => self.values[i],
            None => *self.values.last().expect("validated"),
        }
    }

    pub fn mean(&self) -> f64 {
        let n = self.jumps.len();
        (0..n)
            .map(|i| {
                let a = self.jumps[i];
                let b = if i + 1 < n { self.jumps[i + 1] } else { self.jumps[0] + TAU };
                self.values[i] * (b - a)
            })
            .sum::<f64>()
            / TAU
    }

    /// `ĝ(k) = (1/2πik) Σ_i (v_i − v_{i−1}) e^{−ik x_i}` for `k ≠ 0`.
    pub fn coefficient(&self, k: i64) -> Complex64 {
        if k == 0 {
            return Complex64::new(self.mean(), 0.0);
        }
        let n = self.values.len();
        let sum: Complex64 = (0..n)
            .map(|i| {
                let jump = self.values[i] - self.values[(i + n - 1) % n];
                jump * Complex64::from_polar(1.0, -(k as f64 * self.jumps[i]).rem_euclid(TAU))
            })
            .sum();
        sum / Complex64::new(0.0, TAU * k as f64)
    }
}

/// Exact Fourier coefficients of a step function on `|k| ≤ N`.
pub fn make_step_function(spec: &StepFunctionSpec, n_modes: usize) -> Result<FourierState> {
    spec.validate()?;
    if spec.jump_count() == 0 {
        return Err(Error::InvalidParameter("step function is constant".into()));
    }
    Ok(FourierState::from_positive_modes(n_modes, |k| spec.coefficient(k)))
}

/// Step coefficients multiplied by the Gaussian `e^{−(kw)²/2}`, i.e. the step
/// convolved with a normalized Gaussian of width `w`.
pub fn make_smoothed_step(spec: &StepFunctionSpec, n_modes: usize, width: f64) -> Result<FourierState> {
    let g = make_step_function(spec, n_modes)?;
    Ok(g.map_modes(|k, z| z * (-0.5 * (k as f64 * width).powi(2)).exp()))
}

#[cfg(test)]
pub(crate) fn indicator_half(n_modes: usize) -> FourierState {
    make_step_function(&StepFunctionSpec::indicator_half(), n_modes).expect("valid spec")
}

/// Real mean-zero data with `|g_k| = |k|^{−σ0−1/2}` and seeded random phases.
pub fn make_sobolev_data(sigma0: f64, seed: u64, n_modes: usize) -> FourierState {
    if !(0.5..17.0 / 32.0).contains(&sigma0) {
        log::warn!("sigma0 = {sigma0} is outside [1/2, 17/32); generating anyway");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<f64> = (0..n_modes).map(|_| rng.random::<f64>() * TAU).collect();
    FourierState::from_positive_modes(n_modes, |k| {
        if k == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::from_polar((k as f64).powf(-sigma0 - 0.5), phases[k as usize - 1])
        }
    })
}

/// Real mean-zero data with Gaussian coefficients under the envelope
/// `⟨k⟩^{−decay}`, scaled to the given `H^s` norm.
pub fn make_random_data(n_modes: usize, decay: f64, s: f64, norm: f64, seed: u64) -> FourierState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(f64, f64)> = (0..n_modes)
        .map(|_| (rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let g = FourierState::from_positive_modes(n_modes, |k| {
        if k == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let (a, b) = draws[k as usize - 1];
        Complex64::new(a, b) * japanese(k).powf(-decay)
    });
    let current = sobolev_norm(&g, s);
    if current == 0.0 {
        g
    } else {
        g.scaled(norm / current)
    }
}
