use kawahara_core::spectral::{
    convolve_dealiased, convolve_direct, forward_transform, inverse_transform, sobolev_norm, synthesize,
};
use kawahara_core::{FourierState, RealGridFunction};
use num_complex::Complex64;
use proptest::prelude::*;

fn real_state(max_modes: usize) -> impl Strategy<Value = FourierState> {
    (1..=max_modes).prop_flat_map(|n| {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n + 1).prop_map(move |v| {
            FourierState::from_positive_modes(n, |k| {
                let (re, im) = v[k as usize];
                if k == 0 {
                    Complex64::new(re, 0.0)
                } else {
                    Complex64::new(re, im)
                }
            })
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_round_trip(u in real_state(40), extra in 0usize..40) {
        let m = 2 * u.n_modes() + 1 + extra;
        let f = inverse_transform(&u, m).unwrap();
        let back = forward_transform(&f, u.n_modes()).unwrap();
        prop_assert!(back.max_abs_diff(&u) < 1e-13);
    }

    #[test]
    fn parseval(u in real_state(40)) {
        let m = 4 * u.n_modes() + 3;
        let f = inverse_transform(&u, m).unwrap();
        let grid: f64 = f.samples().iter().map(|v| v * v).sum::<f64>() / m as f64;
        prop_assert!((grid - u.l2_sq()).abs() < 1e-12 * u.l2_sq().max(1.0));
    }

    #[test]
    fn dealiased_product_is_exact(a in real_state(24), seed in 0u64..1000) {
        let b = kawahara_core::data::make_random_data(a.n_modes(), 0.0, 0.0, 1.0, seed);
        let fast = convolve_dealiased(&a, &b).unwrap();
        let slow = convolve_direct(&a, &b).unwrap();
        prop_assert!(fast.max_abs_diff(&slow) < 1e-12);
    }

    #[test]
    fn json_round_trip_is_bit_exact(u in real_state(16)) {
        let back = FourierState::from_json(&u.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, u);
    }

    #[test]
    fn sobolev_norm_is_monotone_in_s(u in real_state(16), s in -1.0f64..2.0) {
        prop_assert!(sobolev_norm(&u, s) <= sobolev_norm(&u, s + 0.5) + 1e-15);
    }
}

#[test]
fn csv_round_trip() {
    let f = RealGridFunction::from_fn(64, |x| (3.0 * x).sin() + 0.1 * x);
    let back = RealGridFunction::from_csv(&f.to_csv()).unwrap();
    assert_eq!(back.samples(), f.samples());
    assert!(f.to_csv().starts_with("x,value\n"));
}

#[test]
fn csv_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    let f = RealGridFunction::from_fn(32, f64::cos);
    f.write_csv(&path).unwrap();
    assert_eq!(RealGridFunction::read_csv(&path).unwrap(), f);
}

#[test]
fn state_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.json");
    let u = kawahara_core::data::make_random_data(12, 1.0, 0.0, 1.0, 4);
    u.write_json(&path).unwrap();
    assert_eq!(FourierState::read_json(&path).unwrap(), u);
}

#[test]
fn state_json_schema() {
    let u = FourierState::delta(1, 1);
    let v: serde_json::Value = serde_json::from_str(&u.to_json().unwrap()).unwrap();
    assert_eq!(v["n_modes"], 1);
    let ks: Vec<i64> = v["coeffs"].as_array().unwrap().iter().map(|e| e[0].as_i64().unwrap()).collect();
    assert_eq!(ks, vec![-1, 0, 1]);
    assert!(FourierState::from_json(r#"{"n_modes":1,"coeffs":[[2,1,0]]}"#).is_err());
}

#[test]
fn synthesis_of_single_mode() {
    let samples = synthesize(&FourierState::delta(3, 2), 16).unwrap();
    for (j, z) in samples.iter().enumerate() {
        let x = std::f64::consts::TAU * j as f64 / 16.0;
        assert!((z - Complex64::from_polar(1.0, 2.0 * x)).norm() < 1e-14);
    }
    assert!(synthesize(&FourierState::delta(8, 1), 16).is_err());
}
