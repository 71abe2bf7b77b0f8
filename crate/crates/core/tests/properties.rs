use fwm_core::gain::{gain_conjugate, gain_probe, DkCoupling, GainParameters};
use fwm_core::grid::{ComplexField2D, GridSpec, OpticalConfig, Plane};
use fwm_core::io::{decode_pgm, encode_pgm, format_profile, parse_profile, ImageScale};
use fwm_core::profile::{
    annular_airy_intensity, compare_profiles, extract_slice, fit_airy, FitGuess, PositionUnit, RadialProfile,
    SliceOrientation,
};
use fwm_core::propagation::{fraunhofer_with, lens_ft, TransformOptions};
use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;

fn synthetic(eps: f64, scale: f64, center: f64) -> RadialProfile {
    let x: Vec<f64> = (0..301).map(|k| -150.0 + k as f64).collect();
    let y = x
        .iter()
        .map(|&p| annular_airy_intensity((p - center) / scale, eps, 1.0).unwrap())
        .collect();
    RadialProfile::new(x, y, PositionUnit::Micrometers).unwrap()
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-1e-3..1e-3f64, -1e-3..1e-3f64).prop_map(|(a, b)| Complex64::new(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn airy_is_even_and_pinned_at_zero(v in -60.0..60.0f64, eps in 0.0..0.99f64, i0 in 0.1..10.0f64) {
        let a = annular_airy_intensity(v, eps, i0).unwrap();
        let b = annular_airy_intensity(-v, eps, i0).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(annular_airy_intensity(0.0, eps, i0).unwrap(), i0);
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn fit_is_scale_equivariant(eps in 0.1..0.8f64, c in 0.01..100.0f64) {
        let p = synthetic(eps, 6.0, 2.0);
        let scaled = RadialProfile::new(
            p.positions().to_vec(),
            p.intensities().iter().map(|v| v * c).collect(),
            p.unit(),
        ).unwrap();
        let a = fit_airy(&p, &FitGuess::default()).unwrap();
        let b = fit_airy(&scaled, &FitGuess::default()).unwrap();
        prop_assert!((a.eps_ratio - b.eps_ratio).abs() < 1e-6, "{} vs {}", a.eps_ratio, b.eps_ratio);
        prop_assert!((b.i0 / a.i0 - c).abs() < 1e-6 * c);
    }

    #[test]
    fn unitary_transforms_conserve_power(seed in any::<u64>(), pitch in 0.5..20.0f64) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let grid = GridSpec::new(32, 64, pitch, Plane::Aperture).unwrap();
        let s = Array2::from_shape_fn((32, 64), |_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let f = ComplexField2D::new(grid, s).unwrap();
        let cfg = OpticalConfig::default();
        let p0 = f.total_power();
        let ff = fraunhofer_with(&f, &cfg, TransformOptions::unitary()).unwrap().field;
        prop_assert!((ff.total_power() / p0 - 1.0).abs() < 1e-12);
        let opts = TransformOptions { include_phase: true, ..TransformOptions::unitary() };
        let lf = lens_ft(&f, &cfg, opts).unwrap();
        prop_assert!((lf.total_power() / p0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gain_boundary_values(
        eps in complex(), ad in complex(), app in complex(), acc in complex(), acp in complex(),
        dk in -1e-3..1e-3f64, literal in any::<bool>(),
    ) {
        let p = GainParameters {
            eps_g: eps, a_d: ad, a_pp: app, a_cc: acc, a_cp: acp, length: 0.0,
            coupling: if literal { DkCoupling::Literal } else { DkCoupling::CoupledWave },
        };
        prop_assert!((gain_probe(dk, &p) - 1.0).abs() < 1e-15);
        prop_assert_eq!(gain_conjugate(dk, &p), 0.0);
    }

    #[test]
    fn slice_of_width_one_is_the_raw_line(seed in any::<u64>(), ci in 0usize..12, cj in 0usize..9) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let img = Array2::from_shape_fn((12, 9), |_| rng.random::<f64>());
        let h = extract_slice(&img, SliceOrientation::Horizontal, (ci, cj), 1).unwrap();
        let v = extract_slice(&img, SliceOrientation::Vertical, (ci, cj), 1).unwrap();
        prop_assert_eq!(h.intensities().to_vec(), img.column(cj).to_vec());
        prop_assert_eq!(v.intensities().to_vec(), img.row(ci).to_vec());
        prop_assert_eq!(h.positions()[ci], 0.0);
    }

    #[test]
    fn comparison_ignores_intensity_scale(eps in 0.0..0.9f64, c in 0.1..50.0f64) {
        let a = synthetic(eps, 5.0, 0.0);
        let b = RadialProfile::new(a.positions().to_vec(), a.intensities().iter().map(|v| v * c).collect(), a.unit()).unwrap();
        let r = compare_profiles(&a, &b).unwrap();
        prop_assert!(r.nrmse < 1e-14);
        prop_assert_eq!(r.peak_offset, 0.0);
        prop_assert!(r.warning.is_none());
    }

    #[test]
    fn pgm_roundtrip_is_the_quantized_image(seed in any::<u64>(), nx in 1usize..20, ny in 1usize..20) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let img = Array2::from_shape_fn((nx, ny), |_| rng.random::<f64>() * 7.0);
        let bytes = encode_pgm(&img, ImageScale::Peak).unwrap();
        prop_assert_eq!(&bytes, &encode_pgm(&img, ImageScale::Peak).unwrap());
        let back = decode_pgm(&bytes).unwrap();
        let peak = img.iter().cloned().fold(0.0, f64::max);
        for (a, b) in img.iter().zip(back.iter()) {
            prop_assert!((a / peak * 65535.0 - *b as f64).abs() <= 0.5 + 1e-9);
        }
    }

    #[test]
    fn profile_csv_roundtrip(xs in prop::collection::vec(0.001..10.0f64, 1..50), ys in prop::collection::vec(0.0..1e6f64, 50)) {
        let mut pos = Vec::with_capacity(xs.len());
        let mut acc = -100.0;
        for d in &xs {
            acc += d;
            pos.push(acc);
        }
        let p = RadialProfile::new(pos.clone(), ys[..pos.len()].to_vec(), PositionUnit::Micrometers).unwrap();
        prop_assert_eq!(parse_profile(&format_profile(&p)).unwrap(), p);
    }
}
