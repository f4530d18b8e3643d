//! The linear flow `e^{Lt}`: exact propagation, rational-time translate
//! decompositions and continued-fraction time classification.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase;
use crate::spectral::{DispersionSymbol, FourierState, RealGridFunction};

/// `t = 2πp/q` with `gcd(p, q) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalTime {
    p: i64,
    q: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl RationalTime {
    /// `t = 2πp/q`, reduced to lowest terms.
    pub fn new(p: i64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParameter("q must be positive".into()));
        }
        let g = gcd(p.unsigned_abs(), q).max(1);
        Ok(Self {
            p: p / g as i64,
            q: q / g,
        })
    }

    /// `t = πa/b`, i.e. `2π·a/(2b)`.
    pub fn from_pi_multiple(a: i64, b: u64) -> Result<Self> {
        Self::new(a, 2 * b)
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn value(&self) -> f64 {
        TAU * self.p as f64 / self.q as f64
    }
}

/// Result of [`classify_time`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeClass {
    Rational(RationalTime),
    Irrational,
}

/// `e^{Lt}g = Σ_j c_j g(· − 2πj/q − mean_shift)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslateDecomposition {
    pub q: u64,
    pub coeffs: Vec<Complex64>,
    pub mean_shift: f64,
}

impl TranslateDecomposition {
    pub fn identity() -> Self {
        Self {
            q: 1,
            coeffs: vec![Complex64::new(1.0, 0.0)],
            mean_shift: 0.0,
        }
    }

    pub fn at(rt: RationalTime, sym: &DispersionSymbol) -> Self {
        Self {
            q: rt.q,
            coeffs: rational_multipliers(rt, sym.alpha()),
            mean_shift: sym.mean_drift() * rt.value(),
        }
    }

    /// The multiplier `Σ_j c_j e^{−2πijk/q} e^{−ik·mean_shift}` this
    /// decomposition applies to mode `k`.
    pub fn multiplier(&self, k: i64) -> Complex64 {
        let q = self.q as i128;
        let sum: Complex64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| c * phase::root_of_unity(j as i128 * k as i128, q as u64))
            .sum();
        sum * Complex64::from_polar(1.0, -(k as f64 * self.mean_shift).rem_euclid(TAU))
    }
}

/// `e^{Lt}g` at a float time `t`.
pub fn propagate(g: &FourierState, t: f64, sym: &DispersionSymbol) -> FourierState {
    propagate_steps(g, t, 1, sym)
}

/// `e^{Lt}g` at `t = steps·dt`, with the phase of each mode reduced exactly
/// from the integer `(k⁵ − αk³)·steps`. Composition in `steps` is exact, so
/// trajectories recorded at `n·dt` see exactly the same phases.
pub fn propagate_steps(g: &FourierState, dt: f64, steps: u64, sym: &DispersionSymbol) -> FourierState {
    if steps == 0 || dt == 0.0 {
        return g.clone();
    }
    let out = g.map_modes(|k, z| z * sym.multiplier(k, dt, steps));
    if g.is_real_symmetric() {
        out.symmetrized()
    } else {
        out
    }
}

/// `e^{Lt}g` at `t = 2πp/q`, with residues taken modulo `q` before
/// exponentiation.
pub fn propagate_rational(g: &FourierState, rt: RationalTime, sym: &DispersionSymbol) -> FourierState {
    let t = rt.value();
    let out = g.map_modes(|k, z| {
        let drift = Complex64::from_polar(1.0, -(sym.mean_drift() * k as f64 * t).rem_euclid(TAU));
        z * rational_mode_multiplier(rt, sym.alpha(), k) * drift
    });
    if g.is_real_symmetric() {
        out.symmetrized()
    } else {
        out
    }
}

/// `e^{−2πi p(k⁵ − αk³)/q}` from the exact residue.
pub fn rational_mode_multiplier(rt: RationalTime, alpha: i32, k: i64) -> Complex64 {
    let q = rt.q as i128;
    let r = (k as i128).rem_euclid(q);
    let poly = (r.pow(5) - alpha as i128 * r.pow(3)).rem_euclid(q);
    phase::root_of_unity(rt.p as i128 * poly, rt.q)
}

/// Translate coefficients `c_j = (1/q) Σ_r e^{−2πi p(r⁵−αr³)/q} e^{2πijr/q}`.
pub fn rational_multipliers(rt: RationalTime, alpha: i32) -> Vec<Complex64> {
    let q = rt.q;
    let m: Vec<Complex64> = (0..q as i64)
        .map(|r| rational_mode_multiplier(rt, alpha, r))
        .collect();
    (0..q as i128)
        .map(|j| {
            let sum: Complex64 = m
                .iter()
                .enumerate()
                .map(|(r, &mr)| mr * phase::root_of_unity(-j * r as i128, q))
                .sum();
            sum / q as f64
        })
        .collect()
}

/// `Re Σ_j c_j g(x − 2πj/q − mean_shift)` on the grid of `g`.
pub fn reconstruct_translates(g: &RealGridFunction, td: &TranslateDecomposition) -> Result<RealGridFunction> {
    let m = g.n_points();
    if m as u64 % td.q != 0 {
        return Err(Error::GridNotDivisible { points: m, q: td.q });
    }
    let cells = td.mean_shift * m as f64 / TAU;
    let shift = cells.round();
    if (cells - shift).abs() > 1e-9 * cells.abs().max(1.0) {
        return Err(Error::ShiftNotOnGrid { shift: td.mean_shift });
    }
    let shift = shift as i64;
    let stride = (m as u64 / td.q) as i64;
    let samples = g.samples();
    let out = (0..m as i64)
        .map(|i| {
            td.coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    let src = (i - j as i64 * stride - shift).rem_euclid(m as i64) as usize;
                    c.re * samples[src]
                })
                .sum()
        })
        .collect();
    RealGridFunction::new(out)
}

/// Translate reconstruction of a function known in closed form, evaluated at
/// the exact shifted points rather than on a grid.
pub fn reconstruct_translates_with(
    g: impl Fn(f64) -> f64,
    td: &TranslateDecomposition,
    n_points: usize,
) -> RealGridFunction {
    RealGridFunction::from_fn(n_points, |x| {
        td.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let y = (x - TAU * j as f64 / td.q as f64 - td.mean_shift).rem_euclid(TAU);
                c.re * g(y)
            })
            .sum()
    })
}

/// Finds the smallest-denominator continued-fraction convergent `p/q` of
/// `t/2π` with `q ≤ q_max` and `|t − 2πp/q| ≤ tol`.
pub fn classify_time(t: f64, q_max: u64, tol: f64) -> TimeClass {
    let x = t / TAU;
    let (mut h_prev, mut h) = (1i128, x.floor() as i128);
    let (mut k_prev, mut k) = (0i128, 1i128);
    let mut rest = x - x.floor();
    loop {
        if k as u64 > q_max {
            return TimeClass::Irrational;
        }
        if (t - TAU * h as f64 / k as f64).abs() <= tol {
            return RationalTime::new(h as i64, k as u64)
                .map(TimeClass::Rational)
                .unwrap_or(TimeClass::Irrational);
        }
        if rest < 1e-300 {
            return TimeClass::Irrational;
        }
        let inv = 1.0 / rest;
        let a = inv.floor();
        rest = inv - a;
        if a > 1e18 {
            return TimeClass::Irrational;
        }
        let a = a as i128;
        (h_prev, h) = (h, a * h + h_prev);
        (k_prev, k) = (k, a * k + k_prev);
    }
}

/// `t = πa/b` as a float, for configs written in multiples of π.
pub fn pi_multiple(a: f64, b: f64) -> f64 {
    PI * a / b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(alpha: i32) -> DispersionSymbol {
        DispersionSymbol::new(alpha, 0.0).unwrap()
    }

    #[test]
    fn rational_time_reduces() {
        let rt = RationalTime::new(6, 14).unwrap();
        assert_eq!((rt.p(), rt.q()), (3, 7));
        let half = RationalTime::from_pi_multiple(1, 1).unwrap();
        assert_eq!((half.p(), half.q()), (1, 2));
        assert!(RationalTime::new(1, 0).is_err());
    }

    #[test]
    fn zero_time_is_identity() {
        let g = FourierState::from_fn(5, |k| Complex64::new(k as f64, 1.0));
        assert_eq!(propagate(&g, 0.0, &sym(1)), g);
    }

    #[test]
    fn single_mode_phase() {
        let g = FourierState::delta(3, 1);
        let t = 0.7;
        let out = propagate(&g, t, &sym(0));
        assert!((out.coeff(1) - Complex64::from_polar(1.0, -t)).norm() < 1e-15);
    }

    #[test]
    fn full_period_revives() {
        let g = crate::data::indicator_half(64);
        let out = propagate(&g, TAU, &sym(1));
        assert!(out.max_abs_diff(&g) < 1e-12);
        // k⁵ − k³ is an integer, so e^{−2πi(k⁵−k³)} = 1 for every k.
        for k in -64i64..=64 {
            assert!((rational_mode_multiplier(RationalTime::new(1, 1).unwrap(), 1, k) - 1.0).norm() < 1e-15);
        }
    }

    #[test]
    fn multiplier_examples() {
        let c = rational_multipliers(RationalTime::new(0, 1).unwrap(), 0);
        assert_eq!(c.len(), 1);
        assert!((c[0] - 1.0).norm() < 1e-15);

        let c = rational_multipliers(RationalTime::new(1, 2).unwrap(), 0);
        assert!(c[0].norm() < 1e-15);
        assert!((c[1] - 1.0).norm() < 1e-15);
    }

    #[test]
    fn three_point_transform_by_brute_force() {
        let rt = RationalTime::new(1, 3).unwrap();
        let c = rational_multipliers(rt, 0);
        // r⁵ ≡ r (mod 3): the multiplier at residue r is e^{−2πir/3}.
        let m: Vec<Complex64> = (0..3).map(|r| Complex64::from_polar(1.0, -TAU * r as f64 / 3.0)).collect();
        for j in 0..3 {
            let cj: Complex64 = (0..3)
                .map(|r| m[r] * Complex64::from_polar(1.0, TAU * (j * r) as f64 / 3.0))
                .sum::<Complex64>()
                / 3.0;
            assert!((c[j] - cj).norm() < 1e-15);
        }
        for k in -100i64..=100 {
            let direct = Complex64::from_polar(1.0, -TAU * (k.pow(5)).rem_euclid(3) as f64 / 3.0);
            let td = TranslateDecomposition::at(rt, &sym(0));
            assert!((td.multiplier(k) - direct).norm() < 1e-13, "k = {k}");
        }
    }

    #[test]
    fn identity_and_half_shift_reconstruction() {
        let g = RealGridFunction::from_fn(16, |x| (x + 0.3).sin() + 0.1 * (2.0 * x).cos());
        assert_eq!(reconstruct_translates(&g, &TranslateDecomposition::identity()).unwrap(), g);
        let td = TranslateDecomposition::at(RationalTime::new(1, 2).unwrap(), &sym(0));
        let out = reconstruct_translates(&g, &td).unwrap();
        for j in 0..16 {
            assert!((out.samples()[j] - g.samples()[(j + 8) % 16]).abs() < 1e-15);
        }
    }

    #[test]
    fn grid_must_be_divisible() {
        let g = RealGridFunction::from_fn(16, f64::sin);
        let td = TranslateDecomposition::at(RationalTime::new(1, 3).unwrap(), &sym(0));
        assert!(matches!(reconstruct_translates(&g, &td), Err(Error::GridNotDivisible { .. })));
    }

    #[test]
    fn shift_must_be_on_grid() {
        let g = RealGridFunction::from_fn(16, f64::sin);
        let td = TranslateDecomposition::at(RationalTime::new(1, 2).unwrap(), &DispersionSymbol::new(0, 0.01).unwrap());
        assert!(matches!(reconstruct_translates(&g, &td), Err(Error::ShiftNotOnGrid { .. })));
    }

    #[test]
    fn quarter_period_step_has_few_jumps() {
        let td = TranslateDecomposition::at(RationalTime::new(1, 4).unwrap(), &sym(0));
        let out = reconstruct_translates_with(|x| if x < 1.0 { 1.0 } else { 0.0 }, &td, 4096);
        let s = out.samples();
        let jumps = (0..s.len()).filter(|&i| (s[i] - s[(i + 1) % s.len()]).abs() >= 1e-8).count();
        assert!(jumps <= 4 * 2, "{jumps} jumps");
        assert!(jumps > 0);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(
            classify_time(PI, 10, 1e-12),
            TimeClass::Rational(RationalTime::new(1, 2).unwrap())
        );
        assert_eq!(classify_time(TAU * 0.618_033_988_7, 50, 1e-12), TimeClass::Irrational);
        assert_eq!(
            classify_time(TAU * 3.0 / 7.0 + 1e-15, 64, 1e-12),
            TimeClass::Rational(RationalTime::new(3, 7).unwrap())
        );
        assert_eq!(
            classify_time(0.0, 4, 1e-12),
            TimeClass::Rational(RationalTime::new(0, 1).unwrap())
        );
    }
}
