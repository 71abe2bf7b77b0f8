//! Sampled complex fields on uniform, centered grids.
//!
//! All lengths are micrometres. Sample `(i, j)` sits at
//! `((i - nx/2) * pitch_x, (j - ny/2) * pitch_y)`, so the origin is the
//! sample at `(nx/2, ny/2)`; this is the DC bin of the centered FFT.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Plane {
    Aperture,
    Lens,
    Focal,
}

impl Plane {
    pub fn name(self) -> &'static str {
        match self {
            Plane::Aperture => "aperture",
            Plane::Lens => "lens",
            Plane::Focal => "focal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    nx: usize,
    ny: usize,
    pitch_x: f64,
    pitch_y: f64,
    plane: Plane,
}

fn check_size(name: &str, n: usize) -> Result<()> {
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::InvalidGrid(format!("{name} = {n} must be a power of two >= 8")));
    }
    Ok(())
}

fn check_pitch(name: &str, p: f64) -> Result<()> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidGrid(format!("{name} = {p} must be positive")));
    }
    Ok(())
}

impl GridSpec {
    /// Square-pitch grid.
    pub fn new(nx: usize, ny: usize, pitch: f64, plane: Plane) -> Result<Self> {
        Self::with_pitches(nx, ny, pitch, pitch, plane)
    }

    pub fn with_pitches(nx: usize, ny: usize, pitch_x: f64, pitch_y: f64, plane: Plane) -> Result<Self> {
        check_size("nx", nx)?;
        check_size("ny", ny)?;
        check_pitch("pitch_x", pitch_x)?;
        check_pitch("pitch_y", pitch_y)?;
        Ok(GridSpec {
            nx,
            ny,
            pitch_x,
            pitch_y,
            plane,
        })
    }

    /// 1024 x 1024 at 4 um in the aperture plane.
    pub fn default_aperture() -> Self {
        GridSpec {
            nx: 1024,
            ny: 1024,
            pitch_x: 4.0,
            pitch_y: 4.0,
            plane: Plane::Aperture,
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn pitch_x(&self) -> f64 {
        self.pitch_x
    }

    pub fn pitch_y(&self) -> f64 {
        self.pitch_y
    }

    pub fn plane(&self) -> Plane {
        self.plane
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn center_index(&self) -> (usize, usize) {
        (self.nx / 2, self.ny / 2)
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - (self.nx / 2) as f64) * self.pitch_x
    }

    pub fn y(&self, j: usize) -> f64 {
        (j as f64 - (self.ny / 2) as f64) * self.pitch_y
    }

    pub fn coordinate(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x(i), self.y(j))
    }

    /// Half-open physical extent along x: `[-nx/2, nx/2) * pitch_x`.
    pub fn extent_x(&self) -> (f64, f64) {
        (self.x(0), self.x(self.nx))
    }

    pub fn extent_y(&self) -> (f64, f64) {
        (self.y(0), self.y(self.ny))
    }

    pub fn cell_area(&self) -> f64 {
        self.pitch_x * self.pitch_y
    }

    pub fn with_plane(mut self, plane: Plane) -> Self {
        self.plane = plane;
        self
    }

    /// Evaluates `f(x, y)` at every sample.
    pub fn map<T, F>(&self, f: F) -> Array2<T>
    where
        F: Fn(f64, f64) -> T,
    {
        Array2::from_shape_fn((self.nx, self.ny), |(i, j)| f(self.x(i), self.y(j)))
    }

    /// Radial coordinate of every sample.
    pub fn radii(&self) -> Array2<f64> {
        self.map(|x, y| x.hypot(y))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField2D {
    grid: GridSpec,
    samples: Array2<Complex64>,
}

impl ComplexField2D {
    pub fn new(grid: GridSpec, samples: Array2<Complex64>) -> Result<Self> {
        if samples.dim() != grid.shape() {
            return Err(Error::ShapeMismatch {
                expected: grid.shape(),
                got: samples.dim(),
            });
        }
        if samples.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::param("samples", "non-finite sample"));
        }
        Ok(ComplexField2D { grid, samples })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        ComplexField2D {
            grid,
            samples: Array2::zeros(grid.shape()),
        }
    }

    pub fn from_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64,
    {
        ComplexField2D {
            grid,
            samples: grid.map(f),
        }
    }

    /// Unchecked constructor for results of internal transforms.
    pub(crate) fn from_parts(grid: GridSpec, samples: Array2<Complex64>) -> Self {
        debug_assert_eq!(samples.dim(), grid.shape());
        ComplexField2D { grid, samples }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn samples(&self) -> &Array2<Complex64> {
        &self.samples
    }

    pub fn into_samples(self) -> Array2<Complex64> {
        self.samples
    }

    pub fn intensity(&self) -> Array2<f64> {
        self.samples.mapv(|c| c.norm_sqr())
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        ComplexField2D {
            grid: self.grid,
            samples: self.samples.mapv(|s| s * c),
        }
    }

    /// Sum of |U|^2 times the cell area.
    pub fn total_power(&self) -> f64 {
        total_power(self)
    }
}

pub fn total_power(field: &ComplexField2D) -> f64 {
    field.samples.iter().map(|c| c.norm_sqr()).sum::<f64>() * field.grid.cell_area()
}

/// Wavelength, propagation distance to the lens plane, and lens focal length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalConfig {
    wavelength: f64,
    z: f64,
    focal_length: f64,
}

impl OpticalConfig {
    /// Rb D1 line (0.795 um), z = 30 cm, f = 20 cm.
    pub const DEFAULT_WAVELENGTH_UM: f64 = 0.795;
    pub const DEFAULT_Z_UM: f64 = 300_000.0;
    pub const DEFAULT_FOCAL_UM: f64 = 200_000.0;

    pub fn new(wavelength: f64, z: f64, focal_length: f64) -> Result<Self> {
        for (name, v) in [("wavelength", wavelength), ("z", z), ("focal_length", focal_length)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("{v} must be positive")));
            }
        }
        Ok(OpticalConfig {
            wavelength,
            z,
            focal_length,
        })
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn focal_length(&self) -> f64 {
        self.focal_length
    }

    /// k = 2 pi / lambda, rad/um.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }
}

impl Default for OpticalConfig {
    fn default() -> Self {
        OpticalConfig {
            wavelength: Self::DEFAULT_WAVELENGTH_UM,
            z: Self::DEFAULT_Z_UM,
            focal_length: Self::DEFAULT_FOCAL_UM,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_grid_extent() {
        let g = GridSpec::new(1024, 1024, 4.0, Plane::Aperture).unwrap();
        assert_eq!(g.extent_x(), (-2048.0, 2048.0));
        assert_eq!(g.extent_y(), (-2048.0, 2048.0));
        assert_eq!(g, GridSpec::default_aperture());
    }

    #[test]
    fn minimal_grid_and_rejections() {
        assert!(GridSpec::new(8, 8, 1.0, Plane::Aperture).is_ok());
        assert!(GridSpec::new(100, 100, 1.0, Plane::Aperture).is_err());
        assert!(GridSpec::new(4, 4, 1.0, Plane::Aperture).is_err());
        assert!(GridSpec::new(8, 8, 0.0, Plane::Aperture).is_err());
        assert!(GridSpec::new(8, 8, -1.0, Plane::Aperture).is_err());
        assert!(GridSpec::new(8, 8, f64::NAN, Plane::Aperture).is_err());
    }

    #[test]
    fn origin_is_center_sample() {
        let g = GridSpec::with_pitches(16, 32, 1.5, 2.5, Plane::Lens).unwrap();
        let (ci, cj) = g.center_index();
        assert_eq!(g.coordinate(ci, cj), (0.0, 0.0));
        assert_eq!(g.coordinate(0, 0), (-12.0, -40.0));
    }

    #[test]
    fn power_of_trivial_fields() {
        let g = GridSpec::new(8, 8, 1.0, Plane::Aperture).unwrap();
        assert_eq!(ComplexField2D::zeros(g).total_power(), 0.0);
        let mut s = Array2::zeros(g.shape());
        s[[3, 5]] = Complex64::new(1.0, 0.0);
        assert_eq!(ComplexField2D::new(g, s).unwrap().total_power(), 1.0);
    }

    #[test]
    fn field_shape_checked() {
        let g = GridSpec::new(8, 8, 1.0, Plane::Aperture).unwrap();
        assert!(matches!(
            ComplexField2D::new(g, Array2::zeros((8, 16))),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn optics_validation() {
        let o = OpticalConfig::default();
        assert_eq!(o.wavenumber(), 2.0 * PI / 0.795);
        assert!(OpticalConfig::new(0.795, 0.0, 1.0).is_err());
        assert!(OpticalConfig::new(-1.0, 1.0, 1.0).is_err());
    }

    fn random_field(seed: u64) -> ComplexField2D {
        let g = GridSpec::new(16, 8, 0.7, Plane::Aperture).unwrap();
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let s = Array2::from_shape_fn(g.shape(), |_| Complex64::new(next(), next()));
        ComplexField2D::new(g, s).unwrap()
    }

    proptest! {
        #[test]
        fn power_invariant_under_global_phase(seed in any::<u64>(), phi in -10.0f64..10.0) {
            let f = random_field(seed);
            let p0 = f.total_power();
            let p1 = f.scaled(Complex64::from_polar(1.0, phi)).total_power();
            prop_assert!((p0 - p1).abs() <= 1e-12 * p0);
        }

        #[test]
        fn power_scales_quadratically(seed in any::<u64>(), re in -5.0f64..5.0, im in -5.0f64..5.0) {
            let f = random_field(seed);
            let c = Complex64::new(re, im);
            let p0 = f.total_power();
            let p1 = f.scaled(c).total_power();
            prop_assert!((p1 - c.norm_sqr() * p0).abs() <= 1e-12 * (1.0 + p1));
        }
    }
}
