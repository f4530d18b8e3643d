//! Differentiation by parts on the Fourier side.
//!
//! With `ω(k) = k⁵ − αk³ (+ mk)` and the quadratic term
//! `−(ik/2) Σ_{k1+k2=k} u_{k1}u_{k2}`, one integration by parts in time
//! splits the nonlinearity into the boundary term `B(u,u)` and a cubic term
//!
//! ```text
//! C(u)_k = −(i/2) Σ_{k1+k2+k3=k} u_{k1}u_{k2}u_{k3} / (k1·D(k1, k2+k3)),
//! D(a, b) = 5(a² + b² + ab) − 3α,
//! ```
//!
//! which is further split into the resonant parts `ρ`, `σ` (triples with a
//! vanishing pair sum) and the non-resonant remainder `R`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::Trajectory;
use crate::spectral::{check_band, japanese, sobolev_norm, DispersionSymbol, FourierState, ProductPlan};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// `5(a² + b² + ab) − 3α`.
#[inline]
pub fn pair_denominator(a: i64, b: i64, alpha: i32) -> i64 {
    5 * (a * a + b * b + a * b) - 3 * alpha as i64
}

/// `15k² − 3α`, the denominator of the self-interaction term.
#[inline]
pub fn self_denominator(k: i64, alpha: i32) -> i64 {
    15 * k * k - 3 * alpha as i64
}

/// `θ` and the pair sums of a triple, with
/// `P(k1+k2+k3) − P(k1) − P(k2) − P(k3) = (k1+k2)(k2+k3)(k3+k1)·θ` for
/// `P(k) = k⁵ − αk³`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResonanceFactor {
    pub k1: i64,
    pub k2: i64,
    pub k3: i64,
    pub theta: i64,
    pub pairs: (i64, i64, i64),
}

impl ResonanceFactor {
    pub fn new(k1: i64, k2: i64, k3: i64, alpha: i32) -> Self {
        let theta = 5 * (k1 * k1 + k2 * k2 + k3 * k3 + k1 * k2 + k2 * k3 + k3 * k1) - 3 * alpha as i64;
        Self {
            k1,
            k2,
            k3,
            theta,
            pairs: (k1 + k2, k2 + k3, k3 + k1),
        }
    }

    pub fn is_resonant(&self) -> bool {
        self.pairs.0 == 0 || self.pairs.1 == 0 || self.pairs.2 == 0
    }

    /// `(k1+k2)(k2+k3)(k3+k1)·θ` as an exact integer.
    pub fn phase(&self) -> i128 {
        self.pairs.0 as i128 * self.pairs.1 as i128 * self.pairs.2 as i128 * self.theta as i128
    }
}

/// How cubic sums treat the intermediate frequency `k2 + k3`.
///
/// `Literal` sums every triple on the band, as the formulas read. `Galerkin`
/// keeps only `|k2 + k3| ≤ N`, which is what the band-limited equation
/// actually generates; then `ρ_k` needs `|2k| ≤ N` and `σ` needs `|k − j| ≤ N`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Truncation {
    #[default]
    Literal,
    Galerkin,
}

impl Truncation {
    #[inline]
    fn keeps(self, inner: i64, n: i64) -> bool {
        match self {
            Truncation::Literal => true,
            Truncation::Galerkin => inner.abs() <= n,
        }
    }
}

/// `B(φ,ψ)_k = −½ Σ_{k1+k2=k} φ_{k1}ψ_{k2} / (k1 k2 D(k1,k2))`, `B_0 = 0`.
pub fn bilinear_b(phi: &FourierState, psi: &FourierState, alpha: i32) -> Result<FourierState> {
    check_band(phi, psi)?;
    let n = phi.n_modes() as i64;
    Ok(FourierState::from_fn(phi.n_modes(), |k| {
        if k == 0 {
            return ZERO;
        }
        let mut acc = ZERO;
        for k1 in (k - n).max(-n)..=n.min(k + n) {
            let k2 = k - k1;
            if k1 == 0 || k2 == 0 {
                continue;
            }
            let d = (k1 * k2 * pair_denominator(k1, k2, alpha)) as f64;
            acc += phi.coeff(k1) * psi.coeff(k2) / d;
        }
        -0.5 * acc
    }))
}

/// `ρ(u)_k = i|u_k|²u_k / (2(15k² − 3α)k)`.
pub fn resonant_rho(u: &FourierState, alpha: i32) -> FourierState {
    resonant_rho_with(u, alpha, Truncation::Literal)
}

pub fn resonant_rho_with(u: &FourierState, alpha: i32, trunc: Truncation) -> FourierState {
    let n = u.n_modes() as i64;
    u.map_modes(|k, z| {
        if k == 0 || !trunc.keeps(2 * k, n) {
            return ZERO;
        }
        I * z.norm_sqr() * z / (2 * self_denominator(k, alpha) * k) as f64
    })
}

/// `σ(u)_k = −i u_k Σ_{|j|≠|k|} |u_j|² / (j(5(k² − kj + j²) − 3α))`.
pub fn resonant_sigma(u: &FourierState, alpha: i32) -> FourierState {
    resonant_sigma_with(u, alpha, Truncation::Literal)
}

pub fn resonant_sigma_with(u: &FourierState, alpha: i32, trunc: Truncation) -> FourierState {
    let n = u.n_modes() as i64;
    u.map_modes(|k, z| {
        if k == 0 {
            return ZERO;
        }
        let sum: f64 = (-n..=n)
            .filter(|&j| j != 0 && j.abs() != k.abs() && trunc.keeps(k - j, n))
            .map(|j| u.coeff(j).norm_sqr() / (j * pair_denominator(j, k - j, alpha)) as f64)
            .sum();
        -I * z * sum
    })
}

/// Raw cubic sum over triples of the band selected by `keep(k1, k2, k3)`;
/// the triples with `k1 = 0` or `k2 + k3 = 0` never contribute, and the
/// output mode `k = 0` is left at zero.
pub fn raw_trilinear_sum(
    u: &FourierState,
    alpha: i32,
    trunc: Truncation,
    keep: impl Fn(i64, i64, i64) -> bool,
) -> FourierState {
    let n = u.n_modes() as i64;
    let mut out = vec![ZERO; 2 * n as usize + 1];
    for k1 in -n..=n {
        if k1 == 0 {
            continue;
        }
        for k2 in -n..=n {
            let u12 = u.coeff(k1) * u.coeff(k2);
            for k3 in -n..=n {
                let k = k1 + k2 + k3;
                let m = k2 + k3;
                if k == 0 || k.abs() > n || m == 0 || !trunc.keeps(m, n) || !keep(k1, k2, k3) {
                    continue;
                }
                let d = (k1 * pair_denominator(k1, m, alpha)) as f64;
                out[(k + n) as usize] += -0.5 * I * u12 * u.coeff(k3) / d;
            }
        }
    }
    FourierState::from_vec(n as usize, out)
}

/// Above this band `nonresonant_r` switches to the convolution path.
pub const DIRECT_R_MAX_MODES: usize = 64;

/// `R(u)`: the cubic sum restricted to `(k1+k2)(k2+k3)(k3+k1) ≠ 0`.
pub fn nonresonant_r(u: &FourierState, alpha: i32) -> FourierState {
    if u.n_modes() <= DIRECT_R_MAX_MODES {
        nonresonant_r_direct(u, alpha, Truncation::Literal)
    } else {
        nonresonant_r_fast(u, alpha, Truncation::Literal)
    }
}

/// `O(N³)` filtered triple sum.
pub fn nonresonant_r_direct(u: &FourierState, alpha: i32, trunc: Truncation) -> FourierState {
    raw_trilinear_sum(u, alpha, trunc, |k1, k2, k3| (k1 + k2) != 0 && (k3 + k1) != 0)
}

/// `O(N²)` evaluation: the full cubic sum through the convolution
/// `Q = u∗u`, minus the resonant triples `(−k,k,k)`, `(j,−j,k)`, `(j,k,−j)`
/// summed with the literal products `u_j u_{−j}`.
pub fn nonresonant_r_fast(u: &FourierState, alpha: i32, trunc: Truncation) -> FourierState {
    let total = cubic_total(u, alpha, trunc);
    let n = u.n_modes() as i64;
    total.map_modes(|k, c| {
        if k == 0 {
            return ZERO;
        }
        let uk = u.coeff(k);
        let mut resonant = ZERO;
        if trunc.keeps(2 * k, n) {
            let d = (-k * pair_denominator(-k, 2 * k, alpha)) as f64;
            resonant += u.coeff(-k) * uk * uk / d;
        }
        for j in -n..=n {
            if j == 0 || j.abs() == k.abs() || !trunc.keeps(k - j, n) {
                continue;
            }
            let d = (j * pair_denominator(j, k - j, alpha)) as f64;
            resonant += 2.0 * u.coeff(j) * u.coeff(-j) * uk / d;
        }
        c + 0.5 * I * resonant
    })
}

/// The whole cubic term `C(u)`: for real-symmetric `u` it equals
/// `ρ + σ + R` with the same truncation.
pub fn cubic_total(u: &FourierState, alpha: i32, trunc: Truncation) -> FourierState {
    let n = u.n_modes() as i64;
    let inner = match trunc {
        Truncation::Literal => 2 * n,
        Truncation::Galerkin => n,
    };
    // Q_m = Σ_{k2+k3=m} u_{k2}u_{k3} for |m| ≤ inner.
    let q: Vec<Complex64> = (-inner..=inner)
        .map(|m| {
            ((m - n).max(-n)..=n.min(m + n))
                .map(|k2| u.coeff(k2) * u.coeff(m - k2))
                .sum()
        })
        .collect();
    FourierState::from_fn(u.n_modes(), |k| {
        if k == 0 {
            return ZERO;
        }
        let mut acc = ZERO;
        for k1 in -n..=n {
            let m = k - k1;
            if k1 == 0 || m == 0 || m.abs() > inner {
                continue;
            }
            let d = (k1 * pair_denominator(k1, m, alpha)) as f64;
            acc += u.coeff(k1) * q[(m + inner) as usize] / d;
        }
        -0.5 * I * acc
    })
}

/// Precomputed Galerkin normal-form sums for real-symmetric, mean-zero
/// states stored densely as `[u_{−N}, …, u_N]`. Only `k ≥ 1` is computed;
/// negative modes are mirrored.
pub struct NormalFormKernel {
    n: usize,
    offsets: Vec<usize>,
    inv_kd: Vec<f64>,
    b_weight: Vec<f64>,
    plan: ProductPlan,
    q: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl NormalFormKernel {
    pub fn new(n_modes: usize, alpha: i32) -> Self {
        let n = n_modes as i64;
        let mut offsets = Vec::with_capacity(n_modes + 1);
        let mut inv_kd = Vec::new();
        let mut b_weight = Vec::new();
        for k in 1..=n {
            offsets.push(inv_kd.len());
            for k1 in (k - n)..=n {
                let k2 = k - k1;
                if k1 == 0 || k2 == 0 {
                    inv_kd.push(0.0);
                    b_weight.push(0.0);
                } else {
                    let d = pair_denominator(k1, k2, alpha) as f64;
                    inv_kd.push(1.0 / (k1 as f64 * d));
                    b_weight.push(-0.5 / (k1 as f64 * k2 as f64 * d));
                }
            }
        }
        offsets.push(inv_kd.len());
        Self {
            n: n_modes,
            offsets,
            inv_kd,
            b_weight,
            plan: ProductPlan::new(n_modes, true),
            q: vec![ZERO; 2 * n_modes + 1],
            scratch: vec![ZERO; 2 * n_modes + 1],
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n
    }

    fn mirror(n: usize, out: &mut [Complex64]) {
        out[n] = ZERO;
        for k in 1..=n {
            out[n - k] = out[n + k].conj();
        }
    }

    /// `out = B(u,u)`.
    pub fn bilinear_into(&self, u: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        for k in 1..=n {
            let w = &self.b_weight[self.offsets[k - 1]..self.offsets[k]];
            let s = &u[k..=2 * n];
            let len = s.len();
            let half = len / 2;
            let mut re = 0.0;
            let mut im = 0.0;
            for i in 0..half {
                let p = s[i] * s[len - 1 - i];
                re += w[i] * p.re;
                im += w[i] * p.im;
            }
            let mut acc = Complex64::new(2.0 * re, 2.0 * im);
            if len % 2 == 1 {
                acc += w[half] * s[half] * s[half];
            }
            out[n + k] = acc;
        }
        Self::mirror(n, out);
    }

    /// `out = C(u)` with Galerkin truncation.
    pub fn cubic_into(&mut self, u: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        self.plan.square_into(u, &mut self.q);
        for k in 1..=n {
            let w = &self.inv_kd[self.offsets[k - 1]..self.offsets[k]];
            let a = &u[k..=2 * n];
            let b = &self.q[k..=2 * n];
            let len = a.len();
            let mut re = 0.0;
            let mut im = 0.0;
            for i in 0..len {
                let p = a[i] * b[len - 1 - i];
                re += w[i] * p.re;
                im += w[i] * p.im;
            }
            // −(i/2)(re + i·im)
            out[n + k] = Complex64::new(0.5 * im, -0.5 * re);
        }
        Self::mirror(n, out);
    }

    /// Solves `u = z + B(u,u)` by fixed-point iteration, starting from the
    /// contents of `u`. Returns the number of iterations used.
    pub fn invert_into(&mut self, z: &[Complex64], u: &mut [Complex64], max_iter: usize) -> Result<usize> {
        let scale = z.iter().fold(0.0f64, |m, c| m.max(c.norm())).max(f64::MIN_POSITIVE);
        let mut scratch = std::mem::take(&mut self.scratch);
        for it in 1..=max_iter {
            self.bilinear_into(u, &mut scratch);
            let mut change = 0.0f64;
            for ((ui, zi), bi) in u.iter_mut().zip(z).zip(&scratch) {
                let next = zi + bi;
                change = change.max((next - *ui).norm());
                *ui = next;
            }
            if !change.is_finite() {
                break;
            }
            if change <= 1e-15 * scale {
                self.scratch = scratch;
                return Ok(it);
            }
        }
        self.scratch = scratch;
        Err(Error::InvalidParameter(
            "normal-form inversion u = z + B(u,u) did not converge".into(),
        ))
    }
}

/// Residual of the Fourier-side representation on a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_residual: f64,
    pub per_time: Vec<(f64, f64)>,
}

/// Checks, at every quadrature node of the recording,
///
/// ```text
/// u_k(t) = e^{−iω t} g_k + B(u,u)_k(t) − e^{−iω t} B(g,g)_k
///        + ∫₀ᵗ e^{−iω(t−r)} C(u(r))_k dr
/// ```
///
/// with `C = ρ + σ + R` in Galerkin truncation and composite Simpson
/// quadrature (3/8 rule on the last panel for an odd number of intervals).
/// The first node after `t = 0` has no Simpson rule and is not reported.
pub fn verify_representation(
    tr: &Trajectory,
    g: &FourierState,
    sym: &DispersionSymbol,
    quad_dt: f64,
) -> Result<ResidualReport> {
    let n_modes = tr.config.n_modes;
    if g.n_modes() != n_modes {
        return Err(Error::BandMismatch {
            left: g.n_modes(),
            right: n_modes,
        });
    }
    let stride = tr.config.record_stride as u64;
    let spacing = tr.config.dt * stride as f64;
    let ratio = quad_dt / spacing;
    let r = ratio.round();
    if !(quad_dt > 0.0) || r < 1.0 || (ratio - r).abs() > 1e-6 * ratio.max(1.0) {
        return Err(Error::InsufficientRecording(format!(
            "quadrature step {quad_dt} must be a positive multiple of the recording spacing {spacing}"
        )));
    }
    let node_stride = stride * r as u64;
    let nodes: Vec<usize> = tr
        .steps
        .iter()
        .enumerate()
        .filter(|(_, &s)| s % node_stride == 0)
        .map(|(i, _)| i)
        .take_while({
            let mut expect = 0u64;
            move |&i| {
                let ok = tr.steps[i] == expect;
                expect += node_stride;
                ok
            }
        })
        .collect();
    if nodes.is_empty() {
        return Err(Error::InsufficientRecording("no recorded state at t = 0".into()));
    }

    let alpha = sym.alpha();
    let mut g0 = g.clone();
    g0.set_coeff(0, ZERO);
    let b_g = bilinear_b(&g0, &g0, alpha)?;
    let h = quad_dt;
    let dt = tr.config.dt;

    // Integrand in the interaction frame at every node.
    let integrand: Vec<Vec<Complex64>> = nodes
        .iter()
        .map(|&i| {
            let c = cubic_total(&tr.states[i], alpha, Truncation::Galerkin);
            c.modes()
                .map(|(k, z)| z * sym.multiplier(k, dt, tr.steps[i]).conj())
                .collect()
        })
        .collect();

    let width = 2 * n_modes + 1;
    let mut per_time = Vec::new();
    let mut max_residual = 0.0f64;
    for (n, &i) in nodes.iter().enumerate() {
        if n == 1 {
            continue;
        }
        let mut integral = vec![ZERO; width];
        let mut add = |node: usize, w: f64| {
            for (acc, v) in integral.iter_mut().zip(&integrand[node]) {
                *acc += w * h * v;
            }
        };
        let simpson_end = if n % 2 == 0 { n } else { n - 3 };
        for p in (0..simpson_end).step_by(2) {
            add(p, 1.0 / 3.0);
            add(p + 1, 4.0 / 3.0);
            add(p + 2, 1.0 / 3.0);
        }
        if n % 2 == 1 {
            let s = n - 3;
            add(s, 3.0 / 8.0);
            add(s + 1, 9.0 / 8.0);
            add(s + 2, 9.0 / 8.0);
            add(s + 3, 3.0 / 8.0);
        }
        let u = &tr.states[i];
        let b_u = bilinear_b(u, u, alpha)?;
        let mut worst = 0.0f64;
        for (idx, (k, uk)) in u.modes().enumerate() {
            let e = sym.multiplier(k, dt, tr.steps[i]);
            let rhs = e * (g0.coeff(k) - b_g.coeff(k) + integral[idx]) + b_u.coeff(k);
            worst = worst.max((uk - rhs).norm());
        }
        max_residual = max_residual.max(worst);
        per_time.push((tr.times[i], worst));
    }
    Ok(ResidualReport {
        max_residual,
        per_time,
    })
}

/// Empirical sup ratios `‖B(φ,ψ)‖_{H^{s1}}/(‖φ‖_{H^s}‖ψ‖_{H^s})` and
/// `‖ρ(u)‖_{H^{s1}}/‖u‖³_{H^s}`, `‖σ(u)‖_{H^{s1}}/‖u‖³_{H^s}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub s: f64,
    pub s1: f64,
    pub n_modes: usize,
    pub trials: usize,
    pub b: Option<f64>,
    pub rho: Option<f64>,
    pub sigma: Option<f64>,
    pub warnings: Vec<String>,
}

fn random_envelope_state(rng: &mut ChaCha8Rng, n_modes: usize, s: f64) -> FourierState {
    let beta: f64 = rng.random_range(0.5..3.0);
    let draws: Vec<(f64, f64)> = (0..n_modes)
        .map(|_| (rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let u = FourierState::from_positive_modes(n_modes, |k| {
        if k == 0 {
            return ZERO;
        }
        let (a, b) = draws[k as usize - 1];
        Complex64::new(a, b) * japanese(k).powf(-s - beta)
    });
    let norm = sobolev_norm(&u, s);
    if norm > 0.0 {
        u.scaled(1.0 / norm)
    } else {
        u
    }
}

/// Samples unit-norm real states with random power-law envelopes
/// `⟨k⟩^{−s−β}`, `β ∈ [0.5, 3)`, and records the largest ratios.
pub fn estimate_multilinear_constants(
    s: f64,
    s1: f64,
    n_modes: usize,
    trials: usize,
    seed: u64,
    alpha: i32,
) -> ConstantsReport {
    let mut report = ConstantsReport {
        s,
        s1,
        n_modes,
        trials,
        ..Default::default()
    };
    if s <= -0.5 {
        report.warnings.push(format!("s = {s} is not above -1/2"));
    }
    if s1 > s + 3.0 {
        report.warnings.push(format!("B: s1 = {s1} exceeds s + 3"));
    }
    if s1 > s + 2.0 {
        report.warnings.push(format!("rho/sigma: s1 = {s1} exceeds s + 2"));
    }
    for w in &report.warnings {
        log::warn!("{w}");
    }
    if trials == 0 || n_modes == 0 {
        return report;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut b_max, mut rho_max, mut sigma_max) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..trials {
        let phi = random_envelope_state(&mut rng, n_modes, s);
        let psi = random_envelope_state(&mut rng, n_modes, s);
        let b = bilinear_b(&phi, &psi, alpha).expect("same band");
        b_max = b_max.max(sobolev_norm(&b, s1));
        rho_max = rho_max.max(sobolev_norm(&resonant_rho(&phi, alpha), s1));
        sigma_max = sigma_max.max(sobolev_norm(&resonant_sigma(&phi, alpha), s1));
    }
    report.b = Some(b_max);
    report.rho = Some(rho_max);
    report.sigma = Some(sigma_max);
    report
}
