//! Measurement instruments: Littlewood–Paley blocks, Besov norms, decay
//! slopes, box-counting dimension, calibration fractals and a discrete
//! Bourgain-norm diagnostic.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::Trajectory;
use crate::spectral::{japanese, synthesize, DispersionSymbol, FourierState, RealGridFunction};

/// `e^{−1/x}` for `x > 0`, else 0.
fn flat(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth transition from 0 (`x ≤ 0`) to 1 (`x ≥ 1`).
pub fn smooth_step(x: f64) -> f64 {
    let a = flat(x);
    let b = flat(1.0 - x);
    a / (a + b)
}

/// `χ(t) = 1 − S(|t| − 1)`: 1 on `|t| ≤ 1`, 0 on `|t| ≥ 2`.
pub fn cutoff_chi(t: f64) -> f64 {
    1.0 - smooth_step(t.abs() - 1.0)
}

/// `φ(t) = χ(t) − χ(2t)`, supported in `1/2 ≤ |t| ≤ 2`.
pub fn cutoff_phi(t: f64) -> f64 {
    cutoff_chi(t) - cutoff_chi(2.0 * t)
}

/// Weight of block `j` at mode `k`: `χ(k)` for `j = 0`, `φ(2^{−j}k)` after.
pub fn block_weight(j: u32, k: i64) -> f64 {
    if j == 0 {
        cutoff_chi(k as f64)
    } else {
        cutoff_phi(k as f64 / 2f64.powi(j as i32))
    }
}

/// `P_j u`.
pub fn lp_projection(u: &FourierState, j: u32) -> FourierState {
    u.map_modes(|k, z| z * block_weight(j, k))
}

/// Number of the last block with support inside the band.
pub fn max_block(n_modes: usize) -> u32 {
    // Block j ≥ 1 starts at 2^{j−1}.
    let mut j = 0;
    while (1usize << j) <= n_modes {
        j += 1;
    }
    j
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpExponent {
    One,
    Two,
    Infinity,
}

impl std::str::FromStr for LpExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(LpExponent::One),
            "2" => Ok(LpExponent::Two),
            "inf" | "infinity" => Ok(LpExponent::Infinity),
            other => Err(Error::InvalidParameter(format!("p must be 1, 2 or inf, got '{other}'"))),
        }
    }
}

/// `sup_{j ≤ j_max} 2^{sj}‖P_j u‖_{L^p}` together with the last block used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovNorm {
    pub value: f64,
    pub j_max: u32,
}

/// `‖f‖_{L^p(𝕋)}` of a band-limited function; `L²` by Parseval, the others
/// on a grid of at least eight points per shortest wavelength.
pub fn lp_norm(u: &FourierState, p: LpExponent) -> f64 {
    match p {
        LpExponent::Two => (TAU * u.l2_sq()).sqrt(),
        LpExponent::One | LpExponent::Infinity => {
            let m = (8 * u.n_modes().max(1)).next_power_of_two();
            let samples = synthesize(u, m).expect("grid covers band");
            match p {
                LpExponent::One => samples.iter().map(|z| z.norm()).sum::<f64>() * TAU / m as f64,
                _ => samples.iter().fold(0.0, |a, z| a.max(z.norm())),
            }
        }
    }
}

pub fn besov_norm(u: &FourierState, s: f64, p: LpExponent) -> BesovNorm {
    let j_max = max_block(u.n_modes());
    let value = (0..=j_max)
        .map(|j| 2f64.powf(s * j as f64) * lp_norm(&lp_projection(u, j), p))
        .fold(0.0, f64::max);
    BesovNorm { value, j_max }
}

/// Fitted dyadic decay exponent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecaySlope {
    /// Slope of `log₂ RMS_j` against `j`.
    pub beta: f64,
    /// `−β − 1/2`.
    pub sigma0: f64,
}

/// RMS of `|u_k|` over the sharp block `2^{j−1} ≤ |k| < 2^j`.
pub fn block_rms(u: &FourierState, j: u32) -> f64 {
    let lo = 1i64 << (j - 1);
    let hi = (1i64 << j).min(u.n_modes() as i64 + 1);
    let mut sum = 0.0;
    let mut count = 0usize;
    for k in lo..hi {
        sum += u.coeff(k).norm_sqr() + u.coeff(-k).norm_sqr();
        count += 2;
    }
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).sqrt()
    }
}

/// Least-squares slope of `(x, y)` pairs and the coefficient of
/// determination.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}

/// Fits `log₂ RMS_j ≈ βj + c` over `j_min ≤ j ≤ j_max`.
pub fn decay_slope(u: &FourierState, j_min: u32, j_max: u32) -> Result<DecaySlope> {
    if j_min == 0 {
        return Err(Error::InvalidParameter("j_min must be at least 1".into()));
    }
    if j_max < j_min + 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 blocks, got {j_min}..={j_max}"
        )));
    }
    if (1usize << (j_max + 1)) > u.n_modes() {
        return Err(Error::InvalidParameter(format!(
            "j_max = {j_max} needs 2^(j_max+1) <= N = {}",
            u.n_modes()
        )));
    }
    let mut points = Vec::new();
    for j in j_min..=j_max {
        let rms = block_rms(u, j);
        if rms == 0.0 || !rms.is_finite() {
            return Err(Error::DegenerateFit(format!("block {j} is empty")));
        }
        points.push((j as f64, rms.log2()));
    }
    let (beta, _, _) = linear_fit(&points);
    Ok(DecaySlope {
        beta,
        sigma0: -beta - 0.5,
    })
}

/// Box-counting estimate of the graph dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub slope: f64,
    /// `(ε_min, ε_max)` of the fitted scales.
    pub window: (f64, f64),
    pub r2: f64,
    /// `(ε, N(ε))` for every level, coarsest first.
    pub counts: Vec<(f64, u64)>,
    pub reliable: bool,
}

/// Minimum `r²` for a fit to be reported as reliable.
pub const MIN_R2: f64 = 0.98;

/// Column-oscillation box counting. At level `l` the period is split into
/// `2^l` columns of width `ε = 2^{−l}` (abscissa scaled to unit length) and
/// column `i` needs `⌈osc_i/ε⌉ + 1` boxes, `osc_i` including the first
/// sample of the next column. The fit drops the two coarsest and two finest
/// levels.
pub fn box_dimension(f: &RealGridFunction, eps_levels: u32) -> Result<DimensionEstimate> {
    let m = f.n_points();
    if eps_levels < 8 {
        return Err(Error::DegenerateFit(format!(
            "{eps_levels} levels leave fewer than 4 usable scales"
        )));
    }
    if eps_levels >= 40 || m < 1usize << (eps_levels + 4) {
        return Err(Error::InvalidParameter(format!(
            "{eps_levels} levels need at least 2^{} samples, got {m}",
            eps_levels + 4
        )));
    }
    if m % (1usize << eps_levels) != 0 {
        return Err(Error::InvalidParameter(format!(
            "{m} samples do not split into 2^{eps_levels} columns"
        )));
    }
    let y = f.samples();
    let counts: Vec<(f64, u64)> = (1..=eps_levels)
        .map(|l| {
            let columns = 1usize << l;
            let width = m / columns;
            let eps = 1.0 / columns as f64;
            let total: u64 = (0..columns)
                .map(|c| {
                    let start = c * width;
                    let (lo, hi) = (start..=start + width)
                        .map(|i| y[i % m])
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                    ((hi - lo) / eps).ceil() as u64 + 1
                })
                .sum();
            (eps, total)
        })
        .collect();
    let window = &counts[2..counts.len() - 2];
    let points: Vec<(f64, f64)> = window
        .iter()
        .map(|&(eps, n)| ((1.0 / eps).ln(), (n as f64).ln()))
        .collect();
    let (slope, _, r2) = linear_fit(&points);
    Ok(DimensionEstimate {
        slope,
        window: (window.last().expect("≥4 scales").0, window[0].0),
        r2,
        reliable: r2 >= MIN_R2,
        counts,
    })
}

/// `Σ_{j=0}^{j_max} 2^{−αj} cos(2^j x)` on `M` points, phases reduced exactly.
pub fn weierstrass(alpha_exp: f64, j_max: u32, n_points: usize) -> Result<RealGridFunction> {
    if !(alpha_exp > 0.0 && alpha_exp < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "Hölder exponent must lie in (0, 1), got {alpha_exp}"
        )));
    }
    if j_max >= 62 || (1usize << j_max) > n_points / 4 {
        return Err(Error::InvalidParameter(format!(
            "2^{j_max} exceeds M/4 = {}",
            n_points / 4
        )));
    }
    let m = n_points as u128;
    let samples = (0..n_points)
        .map(|i| {
            (0..=j_max)
                .map(|j| {
                    let r = ((i as u128) << j) % m;
                    2f64.powf(-alpha_exp * j as f64) * (TAU * r as f64 / m as f64).cos()
                })
                .sum()
        })
        .collect();
    RealGridFunction::new(samples)
}

/// Fraction of the window used by each taper ramp.
pub const TAPER_FRACTION: f64 = 0.1;

/// `1` in the interior, `C^∞` ramps over the first and last 10% of `[0, T]`.
pub fn taper(t: f64, t_total: f64) -> f64 {
    if t_total <= 0.0 {
        return 1.0;
    }
    let ramp = TAPER_FRACTION * t_total;
    smooth_step(t / ramp) * smooth_step((t_total - t) / ramp)
}

/// Discrete `X^{s,b}` norm of a tapered trajectory: the interaction-frame
/// coefficients `w_k(t) = e^{iω(k)t}u_k(t)` are transformed in time and
/// weighted by `⟨k⟩^{2s}⟨σ⟩^{2b}`; `b = 0` gives the windowed `L²_{t,x}`
/// norm.
pub fn xsb_norm(tr: &Trajectory, s: f64, b: f64, sym: &DispersionSymbol) -> Result<f64> {
    let len = tr.states.len();
    if len < 2 {
        return Ok(0.0);
    }
    let spacing = tr.steps[1] - tr.steps[0];
    if spacing == 0 || tr.steps.windows(2).any(|w| w[1] - w[0] != spacing) {
        return Err(Error::NonUniformTimes);
    }
    let h = tr.config.dt * spacing as f64;
    let t_total = h * (len - 1) as f64;
    let window: Vec<f64> = tr.times.iter().map(|&t| taper(t - tr.times[0], t_total)).collect();
    let fft = FftPlanner::new().plan_fft_forward(len);
    let sigma: Vec<f64> = (0..len)
        .map(|n| {
            let n = if n <= len / 2 { n as f64 } else { n as f64 - len as f64 };
            TAU * n / (len as f64 * h)
        })
        .collect();
    let n = tr.config.n_modes as i64;
    let mut total = 0.0;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for k in -n..=n {
        for (i, slot) in buf.iter_mut().enumerate() {
            let w = tr.states[i].coeff(k) * sym.multiplier(k, tr.config.dt, tr.steps[i]).conj();
            *slot = w * window[i];
        }
        if buf.iter().all(|z| z.norm_sqr() == 0.0) {
            continue;
        }
        fft.process(&mut buf);
        let weighted: f64 = buf
            .iter()
            .zip(&sigma)
            .map(|(z, &sg)| (1.0 + sg * sg).powf(b) * z.norm_sqr())
            .sum();
        total += japanese(k).powf(2.0 * s) * weighted;
    }
    // Parseval: Σ_n |DFT|² = len·Σ_i |x_i|², and the time integral is h·Σ_i.
    Ok((TAU * h * total / len as f64).sqrt())
}
