//! Fourier states on a symmetric band, real grid functions, and the
//! transforms and products between them.
//!
//! Coefficients follow the analysis convention
//! `ĝ(k) = (1/2π) ∫ e^{−ikx} g(x) dx`; synthesis `Σ u_k e^{ikx}` carries no
//! factor.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::phase;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Complex coefficients `u_k` for `|k| ≤ N`, stored densely from `−N` to `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierState {
    n_modes: usize,
    coeffs: Vec<Complex64>,
    real_symmetric: bool,
}

impl FourierState {
    /// Tolerance for the `u_{−k} = conj(u_k)` check.
    pub const SYMMETRY_TOL: f64 = 1e-12;

    pub fn zeros(n_modes: usize) -> Self {
        Self {
            n_modes,
            coeffs: vec![ZERO; 2 * n_modes + 1],
            real_symmetric: true,
        }
    }

    /// Builds a state from the dense coefficient vector `[u_{−N}, …, u_N]`.
    pub fn new(n_modes: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * n_modes + 1 {
            return Err(Error::InvalidParameter(format!(
                "expected {} coefficients for n_modes = {n_modes}, got {}",
                2 * n_modes + 1,
                coeffs.len()
            )));
        }
        Ok(Self::from_vec(n_modes, coeffs))
    }

    pub(crate) fn from_vec(n_modes: usize, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), 2 * n_modes + 1);
        let real_symmetric = symmetry_defect(n_modes, &coeffs) <= Self::SYMMETRY_TOL;
        Self {
            n_modes,
            coeffs,
            real_symmetric,
        }
    }

    pub fn from_fn(n_modes: usize, mut f: impl FnMut(i64) -> Complex64) -> Self {
        let n = n_modes as i64;
        Self::from_vec(n_modes, (-n..=n).map(&mut f).collect())
    }

    /// Builds a real-symmetric state from its `k ≥ 0` half; `u_{−k}` is set to
    /// `conj(u_k)` and `u_0` to the real part of `f(0)`.
    pub fn from_positive_modes(n_modes: usize, mut f: impl FnMut(i64) -> Complex64) -> Self {
        let mut coeffs = vec![ZERO; 2 * n_modes + 1];
        coeffs[n_modes] = Complex64::new(f(0).re, 0.0);
        for k in 1..=n_modes {
            let z = f(k as i64);
            coeffs[n_modes + k] = z;
            coeffs[n_modes - k] = z.conj();
        }
        Self {
            n_modes,
            coeffs,
            real_symmetric: true,
        }
    }

    /// `u_k = 1` at a single mode.
    pub fn delta(n_modes: usize, k: i64) -> Self {
        Self::from_fn(n_modes, |j| if j == k { Complex64::new(1.0, 0.0) } else { ZERO })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// `u_k`, or zero outside the band.
    pub fn coeff(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.n_modes {
            ZERO
        } else {
            self.coeffs[(k + self.n_modes as i64) as usize]
        }
    }

    pub fn set_coeff(&mut self, k: i64, value: Complex64) {
        assert!(k.unsigned_abs() as usize <= self.n_modes, "mode {k} outside band");
        self.coeffs[(k + self.n_modes as i64) as usize] = value;
        self.real_symmetric = symmetry_defect(self.n_modes, &self.coeffs) <= Self::SYMMETRY_TOL;
    }

    /// Dense coefficients `[u_{−N}, …, u_N]`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let n = self.n_modes as i64;
        self.coeffs.iter().enumerate().map(move |(i, &z)| (i as i64 - n, z))
    }

    pub fn is_real_symmetric(&self) -> bool {
        self.real_symmetric
    }

    /// `max_k |u_{−k} − conj(u_k)|`, including `|Im u_0|`.
    pub fn symmetry_defect(&self) -> f64 {
        symmetry_defect(self.n_modes, &self.coeffs)
    }

    /// Projection onto real-symmetric states.
    pub fn symmetrized(&self) -> Self {
        let mut out = self.clone();
        symmetrize(self.n_modes, &mut out.coeffs);
        out.real_symmetric = true;
        out
    }

    pub fn mean(&self) -> Complex64 {
        self.coeffs[self.n_modes]
    }

    pub fn is_mean_zero(&self) -> bool {
        self.mean().norm() <= 1e-12
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|z| *z == ZERO)
    }

    /// Applies `f(k, u_k)` mode by mode.
    pub fn map_modes(&self, mut f: impl FnMut(i64, Complex64) -> Complex64) -> Self {
        let n = self.n_modes as i64;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &z)| f(i as i64 - n, z))
            .collect();
        Self::from_vec(self.n_modes, coeffs)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|z| *z *= c);
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        check_band(self, other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self::from_vec(self.n_modes, coeffs))
    }

    /// Same function on a band of `n_modes`: truncates or zero-pads.
    pub fn resized(&self, n_modes: usize) -> Self {
        Self::from_fn(n_modes, |k| self.coeff(k))
    }

    /// `max_k |u_k − v_k|` over the union of both bands.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let n = self.n_modes.max(other.n_modes) as i64;
        (-n..=n)
            .map(|k| (self.coeff(k) - other.coeff(k)).norm())
            .fold(0.0, f64::max)
    }

    /// `(Σ|u_k − v_k|²)^{1/2}` over the union of both bands.
    pub fn l2_diff(&self, other: &Self) -> f64 {
        let n = self.n_modes.max(other.n_modes) as i64;
        (-n..=n)
            .map(|k| (self.coeff(k) - other.coeff(k)).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `Σ|u_k|²`.
    pub fn l2_sq(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

fn symmetry_defect(n_modes: usize, coeffs: &[Complex64]) -> f64 {
    let mut defect = coeffs[n_modes].im.abs();
    for k in 1..=n_modes {
        defect = defect.max((coeffs[n_modes - k] - coeffs[n_modes + k].conj()).norm());
    }
    defect
}

pub(crate) fn symmetrize(n_modes: usize, coeffs: &mut [Complex64]) {
    coeffs[n_modes].im = 0.0;
    for k in 1..=n_modes {
        let z = 0.5 * (coeffs[n_modes + k] + coeffs[n_modes - k].conj());
        coeffs[n_modes + k] = z;
        coeffs[n_modes - k] = z.conj();
    }
}

pub(crate) fn check_band(a: &FourierState, b: &FourierState) -> Result<()> {
    if a.n_modes != b.n_modes {
        return Err(Error::BandMismatch {
            left: a.n_modes,
            right: b.n_modes,
        });
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct FourierStateJson {
    n_modes: usize,
    coeffs: Vec<(i64, f64, f64)>,
}

impl Serialize for FourierState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        FourierStateJson {
            n_modes: self.n_modes,
            coeffs: self.modes().map(|(k, z)| (k, z.re, z.im)).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FourierState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = FourierStateJson::deserialize(deserializer)?;
        let n = raw.n_modes;
        let mut coeffs = vec![ZERO; 2 * n + 1];
        let mut seen = vec![false; 2 * n + 1];
        for (k, re, im) in raw.coeffs {
            if k.unsigned_abs() as usize > n {
                return Err(D::Error::custom(format!("mode {k} outside band |k| <= {n}")));
            }
            let i = (k + n as i64) as usize;
            if seen[i] {
                return Err(D::Error::custom(format!("mode {k} listed twice")));
            }
            seen[i] = true;
            coeffs[i] = Complex64::new(re, im);
        }
        Ok(FourierState::from_vec(n, coeffs))
    }
}

/// Real samples at `x_j = 2πj/M`, `j = 0, …, M−1`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealGridFunction {
    samples: Vec<f64>,
}

impl RealGridFunction {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter("grid function needs at least one sample".into()));
        }
        Ok(Self { samples })
    }

    pub fn from_fn(n_points: usize, f: impl Fn(f64) -> f64) -> Self {
        Self {
            samples: (0..n_points).map(|j| f(grid_point(j, n_points))).collect(),
        }
    }

    pub fn n_points(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn x(&self, j: usize) -> f64 {
        grid_point(j, self.samples.len())
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,value\n");
        for (j, v) in self.samples.iter().enumerate() {
            let _ = writeln!(out, "{},{}", self.x(j), v);
        }
        out
    }

    /// Parses `x,value` CSV. The `x` column is ignored apart from a sanity
    /// check that the rows are in grid order.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == "x,value" => {}
            other => {
                return Err(Error::InvalidParameter(format!(
                    "expected header 'x,value', found {other:?}"
                )))
            }
        }
        let mut xs = Vec::new();
        let mut samples = Vec::new();
        for (row, line) in lines.enumerate() {
            let (x, v) = line
                .split_once(',')
                .ok_or_else(|| Error::InvalidParameter(format!("row {row}: expected two columns")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidParameter(format!("row {row}: {e}")))
            };
            xs.push(parse(x)?);
            samples.push(parse(v)?);
        }
        let m = samples.len();
        if m == 0 {
            return Err(Error::InvalidParameter("no samples".into()));
        }
        for (j, &x) in xs.iter().enumerate() {
            if (x - grid_point(j, m)).abs() > 1e-9 * TAU {
                return Err(Error::InvalidParameter(format!(
                    "row {j}: x = {x} is not the grid point 2π·{j}/{m}"
                )));
            }
        }
        Ok(Self { samples })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

#[inline]
pub fn grid_point(j: usize, n_points: usize) -> f64 {
    TAU * j as f64 / n_points as f64
}

/// The linear symbol `ω(k) = k⁵ − αk³ + m·k`, so that `e^{Lt}` acts by
/// `e^{−iω(k)t}` and the mean drift appears as the translation `g(x − mt)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionSymbol {
    alpha: i32,
    mean_drift: f64,
}

impl DispersionSymbol {
    pub fn new(alpha: i32, mean_drift: f64) -> Result<Self> {
        if !(-1..=1).contains(&alpha) {
            return Err(Error::InvalidParameter(format!("alpha must be -1, 0 or 1, got {alpha}")));
        }
        if !mean_drift.is_finite() {
            return Err(Error::InvalidParameter("mean drift must be finite".into()));
        }
        Ok(Self { alpha, mean_drift })
    }

    pub fn alpha(&self) -> i32 {
        self.alpha
    }

    pub fn mean_drift(&self) -> f64 {
        self.mean_drift
    }

    /// The integer part `k⁵ − αk³`.
    pub fn polynomial(&self, k: i64) -> i128 {
        let k = k as i128;
        k.pow(5) - self.alpha as i128 * k.pow(3)
    }

    /// `ω(k)` as a float; only meaningful for moderate `|k|`.
    pub fn value(&self, k: i64) -> f64 {
        self.polynomial(k) as f64 + self.mean_drift * k as f64
    }

    /// `e^{−iω(k)·steps·dt}` with the polynomial phase reduced exactly.
    pub fn multiplier(&self, k: i64, dt: f64, steps: u64) -> Complex64 {
        let turns = phase::frac_mul(self.polynomial(k) * steps as i128, dt / TAU);
        let drift = (self.mean_drift * k as f64 * (dt * steps as f64)).rem_euclid(TAU);
        Complex64::from_polar(1.0, -(TAU * turns + drift))
    }
}

fn check_grid(n_modes: usize, points: usize) -> Result<()> {
    if points < 2 * n_modes + 1 {
        return Err(Error::BandTooLarge {
            n_modes,
            points,
        });
    }
    Ok(())
}

/// Discrete analysis `u_k ≈ (1/M) Σ_j f(x_j) e^{−ikx_j}` for `|k| ≤ N`.
pub fn forward_transform(f: &RealGridFunction, n_modes: usize) -> Result<FourierState> {
    let m = f.n_points();
    check_grid(n_modes, m)?;
    let mut buf: Vec<Complex64> = f.samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    let mut coeffs = vec![ZERO; 2 * n_modes + 1];
    for k in -(n_modes as i64)..=n_modes as i64 {
        coeffs[(k + n_modes as i64) as usize] = buf[k.rem_euclid(m as i64) as usize] * scale;
    }
    symmetrize(n_modes, &mut coeffs);
    Ok(FourierState::from_vec(n_modes, coeffs))
}

/// Complex synthesis `Σ_k u_k e^{ikx_j}` on `M` points.
pub fn synthesize(u: &FourierState, n_points: usize) -> Result<Vec<Complex64>> {
    check_grid(u.n_modes, n_points)?;
    let mut buf = vec![ZERO; n_points];
    for (k, z) in u.modes() {
        buf[k.rem_euclid(n_points as i64) as usize] += z;
    }
    FftPlanner::new().plan_fft_inverse(n_points).process(&mut buf);
    Ok(buf)
}

/// Real synthesis; rejects states that are not real-symmetric.
pub fn inverse_transform(u: &FourierState, n_points: usize) -> Result<RealGridFunction> {
    if !u.is_real_symmetric() {
        return Err(Error::NotRealSymmetric);
    }
    let buf = synthesize(u, n_points)?;
    Ok(RealGridFunction {
        samples: buf.into_iter().map(|z| z.re).collect(),
    })
}

/// Real part of the synthesis plus a flag telling whether the imaginary part
/// was discarded (state not real-symmetric).
pub fn inverse_transform_real_part(u: &FourierState, n_points: usize) -> Result<(RealGridFunction, bool)> {
    let buf = synthesize(u, n_points)?;
    Ok((
        RealGridFunction {
            samples: buf.into_iter().map(|z| z.re).collect(),
        },
        !u.is_real_symmetric(),
    ))
}

#[inline]
pub fn japanese(k: i64) -> f64 {
    (1.0 + (k as f64) * (k as f64)).sqrt()
}

/// `(Σ ⟨k⟩^{2s} |u_k|²)^{1/2}`.
pub fn sobolev_norm(u: &FourierState, s: f64) -> f64 {
    u.modes()
        .map(|(k, z)| (1.0 + (k as f64).powi(2)).powf(s) * z.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `(a∗b)_k = Σ_{k1+k2=k} a_{k1} b_{k2}` over the band, truncated to `|k| ≤ N`.
pub fn convolve_direct(a: &FourierState, b: &FourierState) -> Result<FourierState> {
    check_band(a, b)?;
    let n = a.n_modes as i64;
    Ok(FourierState::from_fn(a.n_modes, |k| {
        let lo = (-n).max(k - n);
        let hi = n.min(k + n);
        (lo..=hi).map(|k1| a.coeff(k1) * b.coeff(k - k1)).sum()
    }))
}

/// The same product through zero-padded FFTs.
pub fn convolve_dealiased(a: &FourierState, b: &FourierState) -> Result<FourierState> {
    check_band(a, b)?;
    let mut plan = ProductPlan::new(a.n_modes, true);
    let mut out = vec![ZERO; 2 * a.n_modes + 1];
    plan.product_into(a.coeffs(), b.coeffs(), &mut out);
    Ok(FourierState::from_vec(a.n_modes, out))
}

/// Reusable FFT buffers for quadratic products of band-`N` coefficient
/// vectors. With `dealias` the grid has at least `3N+1` points, so the
/// retained band of the product is exact; without it the grid has `2N+2`
/// points and high modes alias.
pub struct ProductPlan {
    n_modes: usize,
    points: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl ProductPlan {
    pub fn new(n_modes: usize, dealias: bool) -> Self {
        let min_points = if dealias { 3 * n_modes + 1 } else { 2 * n_modes + 2 };
        let points = if dealias { min_points.next_power_of_two() } else { min_points };
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(points);
        let inverse = planner.plan_fft_inverse(points);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            n_modes,
            points,
            forward,
            inverse,
            a: vec![ZERO; points],
            b: vec![ZERO; points],
            scratch: vec![ZERO; scratch_len],
        }
    }

    pub fn n_points(&self) -> usize {
        self.points
    }

    fn load(buf: &mut [Complex64], n_modes: usize, coeffs: &[Complex64]) {
        let m = buf.len() as i64;
        buf.fill(ZERO);
        for (i, &z) in coeffs.iter().enumerate() {
            let k = i as i64 - n_modes as i64;
            buf[k.rem_euclid(m) as usize] = z;
        }
    }

    fn unload(&self, buf: &[Complex64], out: &mut [Complex64]) {
        let m = self.points as i64;
        let scale = 1.0 / self.points as f64;
        for (i, o) in out.iter_mut().enumerate() {
            let k = i as i64 - self.n_modes as i64;
            *o = buf[k.rem_euclid(m) as usize] * scale;
        }
    }

    /// `out = P_N(a∗b)`.
    pub fn product_into(&mut self, a: &[Complex64], b: &[Complex64], out: &mut [Complex64]) {
        Self::load(&mut self.a, self.n_modes, a);
        Self::load(&mut self.b, self.n_modes, b);
        self.inverse.process_with_scratch(&mut self.a, &mut self.scratch);
        self.inverse.process_with_scratch(&mut self.b, &mut self.scratch);
        for (x, y) in self.a.iter_mut().zip(&self.b) {
            *x *= y;
        }
        self.forward.process_with_scratch(&mut self.a, &mut self.scratch);
        let a = std::mem::take(&mut self.a);
        self.unload(&a, out);
        self.a = a;
    }

    /// `out = P_N(u∗u)`.
    pub fn square_into(&mut self, u: &[Complex64], out: &mut [Complex64]) {
        Self::load(&mut self.a, self.n_modes, u);
        self.inverse.process_with_scratch(&mut self.a, &mut self.scratch);
        for x in self.a.iter_mut() {
            *x = *x * *x;
        }
        self.forward.process_with_scratch(&mut self.a, &mut self.scratch);
        let a = std::mem::take(&mut self.a);
        self.unload(&a, out);
        self.a = a;
    }

    /// `max_x |Σ u_k e^{ikx}|` sampled on the plan's grid.
    pub fn max_abs(&mut self, u: &[Complex64]) -> f64 {
        Self::load(&mut self.a, self.n_modes, u);
        self.inverse.process_with_scratch(&mut self.a, &mut self.scratch);
        self.a.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}
