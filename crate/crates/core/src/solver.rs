//! Time integration of the band-limited equation
//!
//! ```text
//! ∂t u_k = −iω(k) u_k − (ik/2) Σ_{k1+k2=k} u_{k1}u_{k2},   |k|, |k1|, |k2| ≤ N,
//! ```
//!
//! for mean-zero states, with the mean of the data carried by the drift term
//! of `ω`. Two integrating-factor RK4 schemes are available: [`Scheme::Lawson`]
//! applies RK4 to the quadratic term in the interaction frame, and
//! [`Scheme::NormalForm`] applies it to `z = u − B(u,u)`, whose right-hand side
//! is the cubic term of [`crate::normal_form`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::propagate_steps;
use crate::normal_form::NormalFormKernel;
use crate::spectral::{check_band, symmetrize, DispersionSymbol, FourierState, ProductPlan};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Fixed-point iterations allowed when recovering `u` from `z`.
const MAX_INVERSION_ITERS: usize = 200;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Lawson,
    #[default]
    NormalForm,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lawson" => Ok(Scheme::Lawson),
            "normal-form" => Ok(Scheme::NormalForm),
            other => Err(Error::InvalidParameter(format!(
                "unknown scheme '{other}' (expected lawson or normal-form)"
            ))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Lawson => "lawson",
            Scheme::NormalForm => "normal-form",
        })
    }
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub n_modes: usize,
    pub dt: f64,
    pub t_end: f64,
    pub alpha: i32,
    #[serde(default = "default_true")]
    pub dealias: bool,
    pub record_stride: usize,
    #[serde(default)]
    pub scheme: Scheme,
}

impl SolverConfig {
    pub fn new(n_modes: usize, dt: f64, t_end: f64, alpha: i32) -> Self {
        Self {
            n_modes,
            dt,
            t_end,
            alpha,
            dealias: true,
            record_stride: 1,
            scheme: Scheme::default(),
        }
    }

    pub fn with_stride(mut self, record_stride: usize) -> Self {
        self.record_stride = record_stride;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    /// Number of steps to reach `t_end`; a `t_end` that is not a whole
    /// number of steps is rounded up.
    pub fn n_steps(&self) -> u64 {
        let ratio = self.t_end / self.dt;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest as u64
        } else {
            ratio.ceil() as u64
        }
    }

    /// Checks everything that does not depend on the data.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n_modes == 0 {
            return bad("n_modes must be at least 1".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive and finite, got {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be non-negative and finite, got {}", self.t_end));
        }
        if !(-1..=1).contains(&self.alpha) {
            return bad(format!("alpha must be -1, 0 or 1, got {}", self.alpha));
        }
        if self.record_stride == 0 {
            return bad("record_stride must be at least 1".into());
        }
        if self.scheme == Scheme::NormalForm && !self.dealias {
            return bad("the normal-form scheme needs dealiased products".into());
        }
        Ok(())
    }
}

/// Mean, `Σ|u_k|²` and the Hamiltonian
/// `H = ∫ (½u_xx² − (α/2)u_x² + u³/6) dx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Conserved {
    pub mean: f64,
    pub l2: f64,
    pub hamiltonian: f64,
}

impl From<[f64; 3]> for Conserved {
    fn from([mean, l2, hamiltonian]: [f64; 3]) -> Self {
        Self { mean, l2, hamiltonian }
    }
}

impl From<Conserved> for [f64; 3] {
    fn from(c: Conserved) -> Self {
        [c.mean, c.l2, c.hamiltonian]
    }
}

pub fn conserved_quantities(u: &FourierState, alpha: i32) -> Result<Conserved> {
    if !u.is_real_symmetric() {
        return Err(Error::NotRealSymmetric);
    }
    let n = u.n_modes();
    let mut q = vec![ZERO; 2 * n + 1];
    ProductPlan::new(n, true).square_into(u.coeffs(), &mut q);
    let mut quadratic = 0.0;
    let mut cubic = 0.0;
    for (i, (k, z)) in u.modes().enumerate() {
        let k2 = (k * k) as f64;
        quadratic += (0.5 * k2 * k2 - 0.5 * alpha as f64 * k2) * z.norm_sqr();
        cubic += (q[i] * z.conj()).re;
    }
    Ok(Conserved {
        mean: u.mean().re,
        l2: u.l2_sq(),
        hamiltonian: std::f64::consts::TAU * (quadratic + cubic / 6.0),
    })
}

/// Splits off the mean: returns `g − u_0` and `m = u_0`.
pub fn reduce_mean(g: &FourierState) -> Result<(FourierState, f64)> {
    if !g.is_real_symmetric() {
        return Err(Error::NotRealSymmetric);
    }
    let m = g.mean().re;
    let mut v = g.clone();
    v.set_coeff(0, ZERO);
    Ok((v, m))
}

/// `1/(4·N·max_x|u|)`, infinite for the zero state.
pub fn stability_bound(u: &FourierState) -> f64 {
    let mut plan = ProductPlan::new(u.n_modes(), true);
    bound_from_max(u.n_modes(), plan.max_abs(u.coeffs()))
}

fn bound_from_max(n_modes: usize, max_abs: f64) -> f64 {
    if max_abs == 0.0 {
        f64::INFINITY
    } else {
        1.0 / (4.0 * n_modes as f64 * max_abs)
    }
}

/// One integrator bound to a band, symbol and step size.
pub struct Stepper {
    n: usize,
    dt: f64,
    scheme: Scheme,
    nonlinear: bool,
    wavenumbers: Vec<f64>,
    e_half: Vec<Complex64>,
    e_full: Vec<Complex64>,
    plan: ProductPlan,
    kernel: Option<NormalFormKernel>,
    stage: [Vec<Complex64>; 4],
    tmp: Vec<Complex64>,
    guess: Vec<Complex64>,
    offset: Vec<Complex64>,
    inversion_iters: usize,
}

impl Stepper {
    pub fn new(n_modes: usize, dt: f64, sym: &DispersionSymbol, scheme: Scheme, dealias: bool) -> Self {
        let n = n_modes as i64;
        let width = 2 * n_modes + 1;
        let kernel = match scheme {
            Scheme::NormalForm => Some(NormalFormKernel::new(n_modes, sym.alpha())),
            Scheme::Lawson => None,
        };
        Self {
            n: n_modes,
            dt,
            scheme,
            nonlinear: true,
            wavenumbers: (-n..=n).map(|k| k as f64).collect(),
            e_half: (-n..=n).map(|k| sym.multiplier(k, 0.5 * dt, 1)).collect(),
            e_full: (-n..=n).map(|k| sym.multiplier(k, dt, 1)).collect(),
            plan: ProductPlan::new(n_modes, dealias),
            kernel,
            stage: std::array::from_fn(|_| vec![ZERO; width]),
            tmp: vec![ZERO; width],
            guess: vec![ZERO; width],
            offset: vec![ZERO; width],
            inversion_iters: 0,
        }
    }

    /// Drops the nonlinear term, leaving the exact linear flow.
    pub fn without_nonlinearity(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    /// Total fixed-point iterations spent recovering `u` from `z`.
    pub fn inversion_iterations(&self) -> usize {
        self.inversion_iters
    }

    /// `−(ik/2) P_N(u∗u)`.
    fn quadratic(&mut self, u: &[Complex64], out: &mut [Complex64]) {
        self.plan.square_into(u, out);
        for (o, k) in out.iter_mut().zip(&self.wavenumbers) {
            *o *= Complex64::new(0.0, -0.5 * k);
        }
    }

    /// Right-hand side in the evolved variable. For the normal-form scheme
    /// `y` is `z` and `u` is recovered first, seeded with `y + offset`.
    fn rhs(&mut self, y: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        if !self.nonlinear {
            out.fill(ZERO);
            return Ok(());
        }
        match self.scheme {
            Scheme::Lawson => {
                self.quadratic(y, out);
                Ok(())
            }
            Scheme::NormalForm => {
                let kernel = self.kernel.as_mut().expect("normal-form kernel");
                for ((g, yi), o) in self.guess.iter_mut().zip(y).zip(&self.offset) {
                    *g = yi + o;
                }
                self.inversion_iters += kernel.invert_into(y, &mut self.guess, MAX_INVERSION_ITERS)?;
                kernel.cubic_into(&self.guess, out);
                Ok(())
            }
        }
    }

    /// Advances `u` by one step in place.
    pub fn step(&mut self, u: &mut [Complex64]) -> Result<()> {
        assert_eq!(u.len(), 2 * self.n + 1);
        let h = self.dt;
        let real = {
            let probe = FourierState::new(self.n, u.to_vec()).expect("band checked");
            probe.is_real_symmetric()
        };

        let mut y = u.to_vec();
        let nf = self.scheme == Scheme::NormalForm && self.nonlinear;
        if nf {
            let kernel = self.kernel.as_mut().expect("normal-form kernel");
            kernel.bilinear_into(u, &mut self.offset);
            for (yi, b) in y.iter_mut().zip(&self.offset) {
                *yi -= b;
            }
        }

        let [mut a, mut b, mut c, mut d] = std::mem::take(&mut self.stage);
        let mut tmp = std::mem::take(&mut self.tmp);
        let result = (|| -> Result<()> {
            if nf {
                // u itself is known at the first stage.
                self.kernel.as_mut().expect("kernel").cubic_into(u, &mut a);
            } else {
                self.rhs(&y, &mut a)?;
            }
            for i in 0..y.len() {
                tmp[i] = self.e_half[i] * (y[i] + 0.5 * h * a[i]);
            }
            self.rhs(&tmp.clone(), &mut b)?;
            for i in 0..y.len() {
                tmp[i] = self.e_half[i] * y[i] + 0.5 * h * b[i];
            }
            self.rhs(&tmp.clone(), &mut c)?;
            for i in 0..y.len() {
                tmp[i] = self.e_full[i] * y[i] + h * self.e_half[i] * c[i];
            }
            self.rhs(&tmp.clone(), &mut d)?;
            for i in 0..y.len() {
                let e1 = self.e_half[i];
                let e2 = self.e_full[i];
                y[i] = e2 * y[i] + h / 6.0 * (e2 * a[i] + 2.0 * e1 * (b[i] + c[i]) + d[i]);
            }
            Ok(())
        })();
        self.stage = [a, b, c, d];
        self.tmp = tmp;
        result?;

        if nf {
            let kernel = self.kernel.as_mut().expect("kernel");
            for ((g, yi), o) in self.guess.iter_mut().zip(&y).zip(&self.offset) {
                *g = yi + o;
            }
            self.inversion_iters += kernel.invert_into(&y, &mut self.guess, MAX_INVERSION_ITERS)?;
            u.copy_from_slice(&self.guess);
        } else {
            u.copy_from_slice(&y);
        }
        if real {
            symmetrize(self.n, u);
        }
        u[self.n] = ZERO;
        if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NumericalAbort {
                time: f64::NAN,
                reason: "non-finite coefficients".into(),
            });
        }
        Ok(())
    }

    /// `max_x |u|` on the product grid.
    pub fn max_abs(&mut self, u: &[Complex64]) -> f64 {
        self.plan.max_abs(u)
    }
}

/// One Lawson integrating-factor RK4 step of a mean-zero state.
pub fn step_ifrk4(u: &FourierState, dt: f64, sym: &DispersionSymbol) -> Result<FourierState> {
    if !u.is_mean_zero() {
        return Err(Error::InvalidParameter("state must be mean-zero".into()));
    }
    let mut stepper = Stepper::new(u.n_modes(), dt, sym, Scheme::Lawson, true);
    let mut coeffs = u.coeffs().to_vec();
    stepper.step(&mut coeffs)?;
    Ok(FourierState::from_vec(u.n_modes(), coeffs))
}

/// A recorded run. States are mean-reduced; the mean enters through
/// `mean_drift`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "TrajectoryJson", into = "TrajectoryJson")]
pub struct Trajectory {
    pub config: SolverConfig,
    pub mean_drift: f64,
    pub times: Vec<f64>,
    pub steps: Vec<u64>,
    pub states: Vec<FourierState>,
    pub conserved: Vec<Conserved>,
}

#[derive(Clone, Serialize, Deserialize)]
struct TrajectoryConfigJson {
    #[serde(flatten)]
    solver: SolverConfig,
    mean_drift: f64,
}

#[derive(Clone, Serialize, Deserialize)]
struct TrajectoryJson {
    config: TrajectoryConfigJson,
    times: Vec<f64>,
    steps: Vec<u64>,
    states: Vec<FourierState>,
    conserved: Vec<Conserved>,
}

impl From<TrajectoryJson> for Trajectory {
    fn from(t: TrajectoryJson) -> Self {
        Self {
            config: t.config.solver,
            mean_drift: t.config.mean_drift,
            times: t.times,
            steps: t.steps,
            states: t.states,
            conserved: t.conserved,
        }
    }
}

impl From<Trajectory> for TrajectoryJson {
    fn from(t: Trajectory) -> Self {
        Self {
            config: TrajectoryConfigJson {
                solver: t.config,
                mean_drift: t.mean_drift,
            },
            times: t.times,
            steps: t.steps,
            states: t.states,
            conserved: t.conserved,
        }
    }
}

impl Trajectory {
    pub fn symbol(&self) -> DispersionSymbol {
        DispersionSymbol::new(self.config.alpha, self.mean_drift).expect("validated at evolve")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &FourierState {
        self.states.last().expect("trajectory has the initial state")
    }
}

/// Integrates from `g` to `cfg.t_end`, recording every `record_stride`
/// steps and at the final step.
pub fn evolve(g: &FourierState, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if g.n_modes() != cfg.n_modes {
        return Err(Error::BandMismatch {
            left: g.n_modes(),
            right: cfg.n_modes,
        });
    }
    let (v, m) = reduce_mean(g)?;
    let sym = DispersionSymbol::new(cfg.alpha, m)?;
    let mut stepper = Stepper::new(cfg.n_modes, cfg.dt, &sym, cfg.scheme, cfg.dealias);

    let mut u = v.coeffs().to_vec();
    let initial_max = stepper.max_abs(&u);
    let bound = bound_from_max(cfg.n_modes, initial_max);
    if cfg.dt > bound {
        return Err(Error::InvalidParameter(format!(
            "dt = {} exceeds the stability bound 1/(4·N·max|u|) = {bound:.3e}",
            cfg.dt
        )));
    }

    let n_steps = cfg.n_steps();
    let mut tr = Trajectory {
        config: cfg.clone(),
        mean_drift: m,
        times: vec![0.0],
        steps: vec![0],
        conserved: vec![conserved_quantities(&v, cfg.alpha)?],
        states: vec![v],
    };
    for step in 1..=n_steps {
        let t = step as f64 * cfg.dt;
        stepper.step(&mut u).map_err(|e| match e {
            Error::NumericalAbort { reason, .. } => Error::NumericalAbort { time: t, reason },
            other => other,
        })?;
        if step % cfg.record_stride as u64 == 0 || step == n_steps {
            let max_abs = stepper.max_abs(&u);
            if max_abs > 10.0 * initial_max {
                return Err(Error::NumericalAbort {
                    time: t,
                    reason: format!("max|u| grew from {initial_max:.3e} to {max_abs:.3e}"),
                });
            }
            if cfg.dt > bound_from_max(cfg.n_modes, max_abs) {
                return Err(Error::NumericalAbort {
                    time: t,
                    reason: format!("dt = {} violates the stability bound (max|u| = {max_abs:.3e})", cfg.dt),
                });
            }
            let state = FourierState::from_vec(cfg.n_modes, u.clone());
            tr.conserved.push(conserved_quantities(&state, cfg.alpha)?);
            tr.states.push(state);
            tr.times.push(t);
            tr.steps.push(step);
        }
    }
    if cfg.scheme == Scheme::NormalForm && n_steps > 0 {
        log::debug!(
            "normal-form inversion: {:.1} iterations per solve",
            stepper.inversion_iterations() as f64 / (4 * n_steps) as f64
        );
    }
    Ok(tr)
}

/// `N(t) = u(t) − e^{Lt}g` at every recorded time. The mean of `g` is
/// removed first, matching the mean-reduced trajectory states.
pub fn duhamel_part(tr: &Trajectory, g: &FourierState, sym: &DispersionSymbol) -> Result<Vec<FourierState>> {
    let mut g0 = g.clone();
    g0.set_coeff(0, ZERO);
    tr.states
        .iter()
        .zip(&tr.steps)
        .map(|(u, &steps)| {
            check_band(u, &g0)?;
            u.sub(&propagate_steps(&g0, tr.config.dt, steps, sym))
        })
        .collect()
}
