//! Four-wave-mixing gain versus geometric phase mismatch, and the soft
//! apertures derived from it.
//!
//! Probe and conjugate efficiencies after an interaction length `L`:
//!
//! ```text
//! g_pr   = | exp(da L) [cosh(eps L) + (a / eps) sinh(eps L)] |^2
//! g_conj = | exp(da L) (a_cp / eps) sinh(eps L) |^2
//! da     = (a_pp - a_cc + i dk) / 2
//! ```
//!
//! With [`DkCoupling::Literal`], `eps` and `a` are fixed, so `dk` only
//! enters through the unit-modulus factor `exp(i dk L / 2)`. With
//! [`DkCoupling::CoupledWave`] they follow the eigenvalues of the coupled
//! probe/conjugate equations, `a(dk) = a_d - i dk / 2` and
//! `eps(dk)^2 = eps_g^2 - a_d^2 + a(dk)^2`, which makes the gain fall off
//! away from the phase-matching cone. Both coincide at `dk = 0`.

use ndarray::{Array2, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Interaction length of the 1.7 cm vapour cell, um.
pub const CELL_LENGTH_UM: f64 = 17_000.0;
/// Single-pass probe gain of the experiment.
pub const TARGET_GAIN: f64 = 30.0;

/// `eps L` for which `cosh^2(eps L)` equals `gain`.
pub fn eps_l_for_gain(gain: f64) -> f64 {
    gain.sqrt().acosh()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DkCoupling {
    #[default]
    CoupledWave,
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainParameters {
    /// Gain rate `eps` at `dk = 0`, 1/um.
    pub eps_g: Complex64,
    /// In-bracket coefficient `a` at `dk = 0`, 1/um.
    pub a_d: Complex64,
    pub a_pp: Complex64,
    pub a_cc: Complex64,
    /// Cross coefficient feeding the conjugate, 1/um.
    pub a_cp: Complex64,
    /// Interaction length, um.
    pub length: f64,
    pub coupling: DkCoupling,
}

impl GainParameters {
    /// Phase-insensitive amplifier slice: `a_d = 0`, `a_pp = a_cc = 0`,
    /// `a_cp = eps_g` real, with `eps_g L` chosen for `gain` at `dk = 0`.
    pub fn ideal(gain: f64, length: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::param("length", format!("{length} must be positive")));
        }
        if !(gain.is_finite() && gain >= 1.0) {
            return Err(Error::param("gain", format!("{gain} must be >= 1")));
        }
        let eps = Complex64::new(eps_l_for_gain(gain) / length, 0.0);
        Ok(GainParameters {
            eps_g: eps,
            a_d: Complex64::new(0.0, 0.0),
            a_pp: Complex64::new(0.0, 0.0),
            a_cc: Complex64::new(0.0, 0.0),
            a_cp: eps,
            length,
            coupling: DkCoupling::CoupledWave,
        })
    }

    /// Gain 30 over the 1.7 cm cell.
    pub fn experiment() -> Self {
        Self::ideal(TARGET_GAIN, CELL_LENGTH_UM).expect("constants are valid")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length.is_finite() && self.length >= 0.0) {
            return Err(Error::param("length", "must be non-negative and finite"));
        }
        let all = [self.eps_g, self.a_d, self.a_pp, self.a_cc, self.a_cp];
        if all.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::param("gain coefficients", "must be finite"));
        }
        Ok(())
    }

    fn delta_a(&self, dk: f64) -> Complex64 {
        (self.a_pp - self.a_cc + Complex64::new(0.0, dk)) / 2.0
    }

    /// `(a, eps)` at the given mismatch.
    fn coefficients(&self, dk: f64) -> (Complex64, Complex64) {
        match self.coupling {
            DkCoupling::Literal => (self.a_d, self.eps_g),
            DkCoupling::CoupledWave => {
                let a = self.a_d - Complex64::new(0.0, dk / 2.0);
                let eps2 = self.eps_g * self.eps_g - self.a_d * self.a_d + a * a;
                // cosh(x) and sinh(x)/x are even, so the root's branch
                // does not matter.
                (a, eps2.sqrt())
            }
        }
    }
}

/// `sinh(x) / x`, analytic at 0.
fn sinhc(x: Complex64) -> Complex64 {
    if x.norm() < 1e-4 {
        let x2 = x * x;
        Complex64::new(1.0, 0.0) + x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sinh() / x
    }
}

pub fn gain_probe(dk: f64, p: &GainParameters) -> f64 {
    let l = p.length;
    let (a, eps) = p.coefficients(dk);
    let el = eps * l;
    // (a / eps) sinh(eps L) = a L sinhc(eps L); finite as eps -> 0.
    let bracket = el.cosh() + a * l * sinhc(el);
    ((p.delta_a(dk) * l).exp() * bracket).norm_sqr()
}

pub fn gain_conjugate(dk: f64, p: &GainParameters) -> f64 {
    let l = p.length;
    let (_, eps) = p.coefficients(dk);
    let term = p.a_cp * l * sinhc(eps * l);
    ((p.delta_a(dk) * l).exp() * term).norm_sqr()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Beam {
    Probe,
    Conjugate,
}

impl Beam {
    pub fn name(self) -> &'static str {
        match self {
            Beam::Probe => "probe",
            Beam::Conjugate => "conjugate",
        }
    }

    pub fn gain(self, dk: f64, p: &GainParameters) -> f64 {
        match self {
            Beam::Probe => gain_probe(dk, p),
            Beam::Conjugate => gain_conjugate(dk, p),
        }
    }
}

/// Spatial model of the phase mismatch over the far-field plane.
#[derive(Debug, Clone, PartialEq)]
pub enum DkModel {
    /// `dk = kappa (theta^2 - theta_pm^2) / 2`, with `theta` the angle from
    /// the cone axis. `axis` is the cone axis direction `(theta_x,
    /// theta_y)` relative to the grid centre, radians; `(0, 0)` centres the
    /// cone on the beam.
    RadialQuadratic {
        theta_pm: f64,
        kappa: f64,
        axis: (f64, f64),
    },
    External(Array2<f64>),
}

impl DkModel {
    /// Cone of half-angle 1 degree centred on the beam.
    pub fn centered(theta_pm: f64, kappa: f64) -> Self {
        DkModel::RadialQuadratic {
            theta_pm,
            kappa,
            axis: (0.0, 0.0),
        }
    }
}

/// Probe/pump crossing angle, radians.
pub const PHASE_MATCHING_ANGLE: f64 = 1.0 * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMismatchMap {
    grid: GridSpec,
    dk: Array2<f64>,
    model: DkModel,
}

impl PhaseMismatchMap {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn dk(&self) -> &Array2<f64> {
        &self.dk
    }

    pub fn model(&self) -> &DkModel {
        &self.model
    }
}

/// `theta = rho / z` for a far-field grid at distance `z`.
pub fn build_dk_map(grid: &GridSpec, z: f64, model: DkModel) -> Result<PhaseMismatchMap> {
    if !(z > 0.0) {
        return Err(Error::param("z", "must be positive"));
    }
    let dk = match &model {
        DkModel::RadialQuadratic { theta_pm, kappa, axis } => {
            if !(theta_pm.is_finite() && kappa.is_finite() && axis.0.is_finite() && axis.1.is_finite()) {
                return Err(Error::param("dk model", "parameters must be finite"));
            }
            let pm2 = theta_pm * theta_pm;
            grid.map(|x, y| {
                let tx = x / z - axis.0;
                let ty = y / z - axis.1;
                kappa * (tx * tx + ty * ty - pm2) / 2.0
            })
        }
        DkModel::External(values) => {
            if values.dim() != grid.shape() {
                return Err(Error::ShapeMismatch {
                    expected: grid.shape(),
                    got: values.dim(),
                });
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::param("dk map", "non-finite entry"));
            }
            values.clone()
        }
    };
    Ok(PhaseMismatchMap { grid: *grid, dk, model })
}

/// Gain over the map divided by its maximum. The maximum is taken in
/// row-major order, so ties resolve to the first index.
pub fn soft_aperture_mask(map: &PhaseMismatchMap, p: &GainParameters, which: Beam) -> Result<Array2<f64>> {
    p.validate()?;
    let gains = map.dk.mapv(|dk| which.gain(dk, p));
    if gains.iter().any(|g| !g.is_finite()) {
        return Err(Error::param("gain", "non-finite gain over the map"));
    }
    let peak = gains.iter().fold(0.0f64, |m, &g| if g > m { g } else { m });
    if peak <= 0.0 {
        return Err(Error::ZeroGain);
    }
    Ok(gains.mapv(|g| (g / peak).min(1.0)))
}

pub fn apply_soft_aperture(intensity: &Array2<f64>, mask: &Array2<f64>) -> Result<Array2<f64>> {
    if intensity.dim() != mask.dim() {
        return Err(Error::ShapeMismatch {
            expected: intensity.dim(),
            got: mask.dim(),
        });
    }
    let mut out = intensity.clone();
    Zip::from(&mut out).and(mask).for_each(|v, &m| *v *= m);
    Ok(out)
}

/// Pixels where the mask is at least half its peak.
pub fn half_maximum_band(mask: &Array2<f64>) -> Array2<bool> {
    mask.mapv(|m| m >= 0.5)
}

/// Fraction of `intensity` that falls inside `band`.
pub fn band_power_fraction(intensity: &Array2<f64>, band: &Array2<bool>) -> f64 {
    let total: f64 = intensity.sum();
    if total == 0.0 {
        return 0.0;
    }
    let inside: f64 = Zip::from(intensity)
        .and(band)
        .fold(0.0, |acc, &v, &b| if b { acc + v } else { acc });
    inside / total
}

/// Mismatch at which the gain falls to half its `dk = 0` value, found by
/// scanning outward and bisecting.
pub fn half_gain_mismatch(p: &GainParameters, which: Beam) -> Option<f64> {
    let g0 = which.gain(0.0, p);
    let f = |dk: f64| which.gain(dk, p) - g0 / 2.0;
    let step = (p.eps_g.norm().max(1e-12)) / 50.0;
    let mut lo = 0.0;
    for _ in 0..100_000 {
        let hi = lo + step;
        if f(hi) < 0.0 {
            return Some(crate::special::bisect(&f, lo, hi, f(lo)));
        }
        lo = hi;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Plane;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unpumped_medium() {
        let mut p = GainParameters::experiment();
        p.length = 0.0;
        assert_eq!(gain_probe(0.3, &p), 1.0);
        assert_eq!(gain_conjugate(0.3, &p), 0.0);
    }

    #[test]
    fn gain_thirty_at_matching() {
        let p = GainParameters::experiment();
        assert!((gain_probe(0.0, &p) - 30.0).abs() < 1e-9);
        assert!((gain_conjugate(0.0, &p) - 29.0).abs() < 1e-9);
        assert!((p.eps_g.re - 1.403_121e-4).abs() < 1e-9);
    }

    #[test]
    fn literal_reading_ignores_mismatch() {
        let mut p = GainParameters::experiment();
        p.coupling = DkCoupling::Literal;
        let g = gain_probe(0.0, &p);
        for dk in [1e-4, 1e-2, 1.0, -5.0] {
            assert!((gain_probe(dk, &p) - g).abs() < 1e-9 * g);
        }
    }

    #[test]
    fn coupled_wave_gain_falls_off() {
        let p = GainParameters::experiment();
        let g0 = gain_conjugate(0.0, &p);
        let g1 = gain_conjugate(1e-3, &p);
        assert!(g1 < 0.1 * g0);
        let half = half_gain_mismatch(&p, Beam::Conjugate).unwrap();
        assert!((gain_conjugate(half, &p) - g0 / 2.0).abs() < 1e-9 * g0);
        // Known value for eps L = arccosh(sqrt 30), L = 1.7 cm.
        assert!((half - 1.9039e-4).abs() < 1e-7, "{half}");
    }

    #[test]
    fn zero_eps_series_limit() {
        let p = GainParameters {
            eps_g: c(0.0, 0.0),
            a_d: c(1e-4, 0.0),
            a_pp: c(0.0, 0.0),
            a_cc: c(0.0, 0.0),
            a_cp: c(2e-4, 0.0),
            length: 1000.0,
            coupling: DkCoupling::Literal,
        };
        // (a/eps) sinh(eps L) -> a L; (a_cp/eps) sinh(eps L) -> a_cp L
        assert!((gain_probe(0.0, &p) - 1.1f64.powi(2)).abs() < 1e-12);
        assert!((gain_conjugate(0.0, &p) - 0.04).abs() < 1e-12);
    }

    #[test]
    fn no_cross_coupling_no_conjugate() {
        let mut p = GainParameters::experiment();
        p.a_cp = c(0.0, 0.0);
        for l in [0.0, 100.0, 17_000.0] {
            p.length = l;
            assert_eq!(gain_conjugate(0.0, &p), 0.0);
        }
    }

    #[test]
    fn dk_map_models() {
        let grid = GridSpec::new(64, 64, 50.0, Plane::Lens).unwrap();
        let z = 100_000.0;
        let m = build_dk_map(&grid, z, DkModel::centered(0.01, 2.0)).unwrap();
        // sample 20 px out on x: theta = 1000/1e5 = 0.01 -> on the cone
        assert!(m.dk()[[52, 32]].abs() < 1e-18);
        assert!(m.dk()[[32, 32]] < 0.0);
        let flat = build_dk_map(&grid, z, DkModel::centered(0.01, 0.0)).unwrap();
        assert!(flat.dk().iter().all(|&v| v == 0.0));
        let ext = Array2::from_elem((64, 64), 0.5);
        assert_eq!(
            build_dk_map(&grid, z, DkModel::External(ext.clone())).unwrap().dk(),
            &ext
        );
        assert!(build_dk_map(&grid, z, DkModel::External(Array2::zeros((8, 8)))).is_err());
    }

    #[test]
    fn uniform_gain_gives_unit_mask() {
        let grid = GridSpec::new(32, 32, 50.0, Plane::Lens).unwrap();
        let map = build_dk_map(&grid, 1e5, DkModel::centered(0.01, 0.0)).unwrap();
        let m = soft_aperture_mask(&map, &GainParameters::experiment(), Beam::Conjugate).unwrap();
        assert!(m.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn zero_gain_reported() {
        let grid = GridSpec::new(8, 8, 1.0, Plane::Lens).unwrap();
        let map = build_dk_map(&grid, 1e5, DkModel::centered(0.01, 1.0)).unwrap();
        let mut p = GainParameters::experiment();
        p.a_cp = c(0.0, 0.0);
        assert_eq!(soft_aperture_mask(&map, &p, Beam::Conjugate), Err(Error::ZeroGain));
    }

    #[test]
    fn soft_aperture_identities() {
        let img = Array2::from_shape_fn((8, 8), |(i, j)| (i * j) as f64);
        assert_eq!(apply_soft_aperture(&img, &Array2::ones((8, 8))).unwrap(), img);
        assert_eq!(
            apply_soft_aperture(&img, &Array2::zeros((8, 8))).unwrap(),
            Array2::<f64>::zeros((8, 8))
        );
        assert!(apply_soft_aperture(&img, &Array2::ones((4, 8))).is_err());
    }

    #[test]
    fn mask_ring_peaks_at_cone() {
        let grid = GridSpec::new(512, 512, 30.0, Plane::Lens).unwrap();
        let z = 300_000.0;
        let map = build_dk_map(&grid, z, DkModel::centered(PHASE_MATCHING_ANGLE, 6.5)).unwrap();
        let mask = soft_aperture_mask(&map, &GainParameters::experiment(), Beam::Conjugate).unwrap();
        // radial bins of one pixel; argmax bin must hold theta_pm
        let nbins = 256;
        let mut sum = vec![0.0; nbins];
        let mut cnt = vec![0usize; nbins];
        for ((i, j), &v) in mask.indexed_iter() {
            let (x, y) = grid.coordinate(i, j);
            let b = (x.hypot(y) / 30.0).round() as usize;
            if b < nbins {
                sum[b] += v;
                cnt[b] += 1;
            }
        }
        let (best, _) = (0..nbins)
            .map(|b| (b, sum[b] / cnt[b].max(1) as f64))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let ring = PHASE_MATCHING_ANGLE * z / 30.0;
        assert!((best as f64 - ring).abs() <= 1.0, "{best} vs {ring}");
        assert!(mask[[256, 256]] < 0.05, "{}", mask[[256, 256]]);
    }

    proptest! {
        #[test]
        fn unpumped_identity_random(
            er in -1e-3f64..1e-3, ei in -1e-3f64..1e-3,
            ar in -1e-3f64..1e-3, ai in -1e-3f64..1e-3,
            pr in -1e-3f64..1e-3, cr in -1e-3f64..1e-3,
            xr in -1e-3f64..1e-3, dk in -1e-2f64..1e-2,
            literal in any::<bool>(),
        ) {
            let p = GainParameters {
                eps_g: c(er, ei), a_d: c(ar, ai), a_pp: c(pr, 0.0), a_cc: c(cr, 0.0),
                a_cp: c(xr, 0.0), length: 0.0,
                coupling: if literal { DkCoupling::Literal } else { DkCoupling::CoupledWave },
            };
            prop_assert_eq!(gain_probe(dk, &p), 1.0);
            prop_assert_eq!(gain_conjugate(dk, &p), 0.0);
        }

        #[test]
        fn mask_bounded_by_one(kappa in 0.0f64..20.0, theta in 0.0f64..0.02) {
            let grid = GridSpec::new(32, 32, 200.0, Plane::Lens).unwrap();
            let map = build_dk_map(&grid, 300_000.0, DkModel::centered(theta, kappa)).unwrap();
            let m = soft_aperture_mask(&map, &GainParameters::experiment(), Beam::Probe).unwrap();
            prop_assert!(m.iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert_eq!(m.iter().cloned().fold(0.0, f64::max), 1.0);
            let img = Array2::from_shape_fn((32, 32), |(i, j)| ((i + 3 * j) % 7) as f64);
            let out = apply_soft_aperture(&img, &m).unwrap();
            prop_assert!(out.iter().zip(img.iter()).all(|(o, i)| o <= i));
        }
    }
}
