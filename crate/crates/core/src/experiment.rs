//! The rational/irrational dichotomy experiment, its CSV outputs and run
//! manifests.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI, SQRT_2, TAU};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{box_dimension, decay_slope, DimensionEstimate};
use crate::config::{initial_from_keys, split_list, InitialSpec, KeyValues};
use crate::error::{Error, Result};
use crate::linear::{classify_time, propagate, reconstruct_translates_with, RationalTime, TimeClass, TranslateDecomposition};
use crate::solver::{duhamel_part, evolve, reduce_mean, Scheme, SolverConfig};
use crate::spectral::{synthesize, DispersionSymbol, FourierState, RealGridFunction};

/// Successive samples closer than this belong to the same plateau.
pub const PLATEAU_TOL: f64 = 1e-8;

/// Number of maximal runs of samples whose neighbours differ by less than
/// `tol`, read left to right without wrapping.
pub fn count_plateaus(samples: &[f64], tol: f64) -> usize {
    if samples.is_empty() {
        return 0;
    }
    1 + samples.windows(2).filter(|w| (w[1] - w[0]).abs() >= tol).count()
}

/// Number of values that differ pairwise by at least `tol`.
pub fn count_distinct_values(samples: &[f64], tol: f64) -> usize {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    count_plateaus(&sorted, tol)
}

/// Named irrational surrogates, as fractions of the period `2π`.
pub const IRRATIONAL_SURROGATES: [(&str, f64); 4] = [
    ("golden", 0.618_033_988_749_894_9),
    ("sqrt2", SQRT_2 - 1.0),
    ("e", E - 2.0),
    ("pi", PI - 3.0),
];

fn surrogate(name: &str) -> Result<(String, f64)> {
    if let Some(&(n, f)) = IRRATIONAL_SURROGATES.iter().find(|(n, _)| *n == name) {
        return Ok((n.to_string(), f));
    }
    let f = crate::config::parse_real(name)?;
    Ok((name.to_string(), f))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Linear,
    Nonlinear,
}

/// Settings of one dichotomy run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomyConfig {
    pub alpha: i32,
    pub n_modes: usize,
    pub grid_points: usize,
    pub mode: Mode,
    pub dt: f64,
    pub t_end: Option<f64>,
    pub initial: InitialSpec,
    pub rational_times: Vec<RationalTime>,
    /// `(label, t/2π)`.
    pub irrational_times: Vec<(String, f64)>,
    pub levels: u32,
    pub q_max: u64,
    pub seed: u64,
}

/// Every reduced `p/q` in `(0, 1)` with `q ≤ q_max`, plus `0/1`.
pub fn rationals_up_to(q_max: u64) -> Vec<RationalTime> {
    let mut out = vec![RationalTime::new(0, 1).expect("q > 0")];
    for q in 2..=q_max {
        for p in 1..q as i64 {
            let rt = RationalTime::new(p, q).expect("q > 0");
            if rt.q() == q {
                out.push(rt);
            }
        }
    }
    out
}

impl Default for DichotomyConfig {
    fn default() -> Self {
        Self {
            alpha: 0,
            n_modes: 4096,
            grid_points: 1 << 16,
            mode: Mode::Linear,
            dt: 2.5e-4,
            t_end: None,
            initial: InitialSpec::Step(crate::data::StepFunctionSpec::indicator_half()),
            rational_times: rationals_up_to(8),
            irrational_times: IRRATIONAL_SURROGATES.iter().map(|&(n, f)| (n.to_string(), f)).collect(),
            levels: 12,
            q_max: 64,
            seed: 0,
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "alpha",
    "n_modes",
    "dt",
    "t_end",
    "mode",
    "grid.points",
    "initial.kind",
    "initial.jumps",
    "initial.values",
    "initial.width",
    "initial.sigma0",
    "initial.h1_norm",
    "initial.path",
    "times.rational",
    "times.irrational",
    "times.q_max",
    "dimension.levels",
    "seed",
];

impl DichotomyConfig {
    pub fn from_keys(kv: &KeyValues) -> Result<Self> {
        kv.check_known(KNOWN_KEYS)?;
        let d = Self::default();
        let rational_times = match kv.get("times.rational") {
            None => d.rational_times,
            Some(text) => split_list(text)
                .into_iter()
                .map(|item| {
                    let (p, q) = item.split_once('/').unwrap_or((item, "1"));
                    let p = p.trim().parse::<i64>();
                    let q = q.trim().parse::<u64>();
                    match (p, q) {
                        (Ok(p), Ok(q)) => RationalTime::new(p, q).map_err(|e| Error::InvalidConfig(e.to_string())),
                        _ => Err(Error::InvalidConfig(format!("rational time '{item}' should be p/q"))),
                    }
                })
                .collect::<Result<_>>()?,
        };
        let irrational_times = match kv.get("times.irrational") {
            None => d.irrational_times,
            Some(text) => split_list(text).into_iter().map(surrogate).collect::<Result<_>>()?,
        };
        let mode = match kv.get("mode") {
            None | Some("linear") => Mode::Linear,
            Some("nonlinear") => Mode::Nonlinear,
            Some(other) => return Err(Error::InvalidConfig(format!("unknown mode '{other}'"))),
        };
        let cfg = Self {
            alpha: kv.parsed("alpha")?.unwrap_or(d.alpha),
            n_modes: kv.parsed("n_modes")?.unwrap_or(d.n_modes),
            grid_points: kv.parsed("grid.points")?.unwrap_or(d.grid_points),
            mode,
            dt: kv.real("dt")?.unwrap_or(d.dt),
            t_end: kv.real("t_end")?,
            initial: initial_from_keys(kv)?,
            rational_times,
            irrational_times,
            levels: kv.parsed("dimension.levels")?.unwrap_or(d.levels),
            q_max: kv.parsed("times.q_max")?.unwrap_or(d.q_max),
            seed: kv.parsed("seed")?.unwrap_or(d.seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(-1..=1).contains(&self.alpha) {
            return bad(format!("alpha must be -1, 0 or 1, got {}", self.alpha));
        }
        if self.n_modes == 0 || self.grid_points < 2 * self.n_modes + 1 {
            return bad(format!(
                "grid.points = {} must be at least 2·n_modes + 1 = {}",
                self.grid_points,
                2 * self.n_modes + 1
            ));
        }
        if self.levels < 8 || self.grid_points < 1usize << (self.levels + 4) || self.grid_points % (1usize << self.levels) != 0 {
            return bad(format!(
                "dimension.levels = {} needs at least 8 levels and grid.points a multiple of 2^levels, at least 2^(levels+4)",
                self.levels
            ));
        }
        if !(self.dt > 0.0) {
            return bad("dt must be positive".into());
        }
        if let Some(t_end) = self.t_end {
            let latest = self.sample_times().iter().map(|s| s.time).fold(0.0, f64::max);
            if self.mode == Mode::Nonlinear && latest > t_end + 1e-12 {
                return bad(format!("sampled time {latest} lies beyond t_end = {t_end}"));
            }
        }
        Ok(())
    }

    fn sample_times(&self) -> Vec<SampleTime> {
        let mut out: Vec<SampleTime> = self
            .rational_times
            .iter()
            .map(|rt| SampleTime {
                label: format!("{}/{}", rt.p(), rt.q()),
                time: rt.value(),
                rational: Some(*rt),
            })
            .collect();
        out.extend(self.irrational_times.iter().map(|(label, f)| SampleTime {
            label: label.clone(),
            time: TAU * f,
            rational: None,
        }));
        out
    }
}

struct SampleTime {
    label: String,
    time: f64,
    rational: Option<RationalTime>,
}

/// Measurements at one sampled time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeReport {
    pub label: String,
    pub time: f64,
    pub classification: String,
    pub p: Option<i64>,
    pub q: Option<u64>,
    pub n_plateaus: Option<usize>,
    pub plateau_bound: Option<usize>,
    #[serde(rename = "D_re")]
    pub d_re: f64,
    #[serde(rename = "D_im")]
    pub d_im: f64,
    #[serde(rename = "D_abs2")]
    pub d_abs2: f64,
    pub slope_g: f64,
    #[serde(rename = "slope_N")]
    pub slope_n: Option<f64>,
    pub fit_re: DimensionEstimate,
    pub fit_im: DimensionEstimate,
    pub fit_abs2: DimensionEstimate,
}

impl TimeReport {
    pub fn reliable(&self) -> bool {
        self.fit_re.reliable && self.fit_im.reliable && self.fit_abs2.reliable
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DichotomySummary {
    pub min_d_re_irrational: Option<f64>,
    pub max_d_re_rational: Option<f64>,
    /// `min_d_re_irrational − max_d_re_rational`.
    pub separation: Option<f64>,
    pub plateau_bound_violations: usize,
    pub unreliable_fits: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub config: DichotomyConfig,
    /// Sobolev ceiling of the data: 1/2 for steps, the prescribed value for
    /// synthetic data.
    pub sigma0: f64,
    /// `[33/16 − 2σ0, 31/16]`.
    pub dimension_window: (f64, f64),
    pub times: Vec<TimeReport>,
    pub summary: DichotomySummary,
}

fn sigma0_of(spec: &InitialSpec) -> f64 {
    match spec {
        InitialSpec::Sobolev { sigma0, .. } => *sigma0,
        _ => 0.5,
    }
}

/// Graph dimension of the real part, imaginary part and squared modulus of
/// a band-limited function.
fn dimensions(u: &FourierState, grid_points: usize, levels: u32) -> Result<[DimensionEstimate; 3]> {
    let samples = synthesize(u, grid_points)?;
    let fit = |f: &dyn Fn(num_complex::Complex64) -> f64| {
        let g = RealGridFunction::new(samples.iter().map(|&z| f(z)).collect())?;
        box_dimension(&g, levels)
    };
    Ok([fit(&|z| z.re)?, fit(&|z| z.im)?, fit(&|z| z.norm_sqr())?])
}

fn slope_range(n_modes: usize) -> Option<(u32, u32)> {
    let top = (n_modes as f64).log2().floor() as i64 - 1;
    (top >= 4).then_some((2, top as u32))
}

/// Samples `u(·,t)` at the configured rational and irrational times.
///
/// The piecewise-constant test is always applied to the exact translate
/// reconstruction of the linear part; dimensions are measured on the
/// band-limited synthesis of the linear part (linear mode) or of the
/// nonlinear solution (nonlinear mode).
pub fn run_dichotomy_experiment(cfg: &DichotomyConfig) -> Result<DichotomyReport> {
    cfg.validate()?;
    let g = cfg.initial.build(cfg.n_modes).map_err(|e| e.in_stage("initial data"))?;
    let (_, mean) = reduce_mean(&g).map_err(|e| e.in_stage("initial data"))?;
    let sym = DispersionSymbol::new(cfg.alpha, mean)?;
    let step = match &cfg.initial {
        InitialSpec::Step(s) => Some(s.clone()),
        _ => None,
    };
    let slope_g = match slope_range(cfg.n_modes) {
        Some((lo, hi)) => decay_slope(&g, lo, hi).map_err(|e| e.in_stage("decay slope of g"))?.beta,
        None => f64::NAN,
    };

    let mut times = Vec::new();
    for sample in cfg.sample_times() {
        let classification = classify_time(sample.time, cfg.q_max, 1e-12);
        let (class_name, p, q) = match classification {
            TimeClass::Rational(rt) => ("rational", Some(rt.p()), Some(rt.q())),
            TimeClass::Irrational => ("irrational", None, None),
        };

        let (n_plateaus, plateau_bound) = match (&step, sample.rational) {
            (Some(spec), Some(rt)) => {
                let td = TranslateDecomposition::at(rt, &sym);
                let f = reconstruct_translates_with(|x| spec.eval(x), &td, cfg.grid_points);
                (
                    Some(count_plateaus(f.samples(), PLATEAU_TOL)),
                    Some(rt.q() as usize * spec.jump_count() + 1),
                )
            }
            _ => (None, None),
        };

        let (u, slope_n) = match cfg.mode {
            Mode::Linear => (propagate(&g, sample.time, &sym), None),
            Mode::Nonlinear => {
                let (u, n) = nonlinear_sample(&g, cfg, sample.time).map_err(|e| e.in_stage("evolve"))?;
                let slope = match slope_range(cfg.n_modes) {
                    Some((lo, hi)) if !n.is_zero() => decay_slope(&n, lo.max(3), hi).ok().map(|d| d.beta),
                    _ => None,
                };
                (u, slope)
            }
        };
        let [fit_re, fit_im, fit_abs2] =
            dimensions(&u, cfg.grid_points, cfg.levels).map_err(|e| e.in_stage("box dimension"))?;
        log::info!(
            "t = {:.6} ({}): D_re = {:.3}, plateaus = {:?}",
            sample.time,
            sample.label,
            fit_re.slope,
            n_plateaus
        );
        times.push(TimeReport {
            label: sample.label,
            time: sample.time,
            classification: class_name.into(),
            p,
            q,
            n_plateaus,
            plateau_bound,
            d_re: fit_re.slope,
            d_im: fit_im.slope,
            d_abs2: fit_abs2.slope,
            slope_g,
            slope_n,
            fit_re,
            fit_im,
            fit_abs2,
        });
    }

    let sigma0 = sigma0_of(&cfg.initial);
    Ok(DichotomyReport {
        config: cfg.clone(),
        sigma0,
        dimension_window: (33.0 / 16.0 - 2.0 * sigma0, 31.0 / 16.0),
        summary: summarize(&times),
        times,
    })
}

fn nonlinear_sample(g: &FourierState, cfg: &DichotomyConfig, t: f64) -> Result<(FourierState, FourierState)> {
    if t == 0.0 {
        return Ok((g.clone(), FourierState::zeros(g.n_modes())));
    }
    let steps = (t / cfg.dt).ceil().max(1.0);
    let solver = SolverConfig {
        n_modes: cfg.n_modes,
        dt: t / steps,
        t_end: t,
        alpha: cfg.alpha,
        dealias: true,
        record_stride: steps as usize,
        scheme: Scheme::NormalForm,
    };
    let tr = evolve(g, &solver)?;
    let n = duhamel_part(&tr, g, &tr.symbol())?.pop().expect("initial entry");
    let mut u = tr.final_state().clone();
    u.set_coeff(0, g.mean());
    Ok((u, n))
}

fn summarize(times: &[TimeReport]) -> DichotomySummary {
    let irr = times.iter().filter(|t| t.classification == "irrational").map(|t| t.d_re);
    let rat = times.iter().filter(|t| t.classification == "rational").map(|t| t.d_re);
    let min_irr = irr.fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))));
    let max_rat = rat.fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    DichotomySummary {
        min_d_re_irrational: min_irr,
        max_d_re_rational: max_rat,
        separation: min_irr.zip(max_rat).map(|(a, b)| a - b),
        plateau_bound_violations: times
            .iter()
            .filter(|t| matches!((t.n_plateaus, t.plateau_bound), (Some(n), Some(b)) if n > b))
            .count(),
        unreliable_fits: times.iter().filter(|t| !t.reliable()).count(),
    }
}

pub const SUMMARY_CSV: &str = "dichotomy_summary.csv";
pub const SUMMARY_HEADER: &str = "t,classification,q,n_plateaus,D_re,D_im,D_abs2,slope_g,slope_N";

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes `dichotomy_summary.csv` and one `counts_<i>.csv` (`eps,count`,
/// real part) per sampled time into `dir`.
pub fn emit_plot_data(report: &DichotomyReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut summary = format!("{SUMMARY_HEADER}\n");
    let mut written = Vec::new();
    for (i, t) in report.times.iter().enumerate() {
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{},{},{}",
            t.time,
            t.classification,
            opt(t.q),
            opt(t.n_plateaus),
            t.d_re,
            t.d_im,
            t.d_abs2,
            t.slope_g,
            opt(t.slope_n)
        );
        let mut counts = String::from("eps,count\n");
        for (eps, n) in &t.fit_re.counts {
            let _ = writeln!(counts, "{eps},{n}");
        }
        let path = dir.join(format!("counts_{i}.csv"));
        std::fs::write(&path, counts)?;
        written.push(path);
    }
    let path = dir.join(SUMMARY_CSV);
    std::fs::write(&path, summary)?;
    written.insert(0, path);
    Ok(written)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Everything needed to rerun a command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub code_version: String,
    pub input_hashes: BTreeMap<String, String>,
    pub output_paths: Vec<String>,
    pub timing_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seeds: Vec<u64>) -> Self {
        Self {
            command: command.to_string(),
            config,
            seeds,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            input_hashes: BTreeMap::new(),
            output_paths: Vec::new(),
            timing_seconds: 0.0,
        }
    }

    pub fn hash_input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)?;
        self.input_hashes
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}
