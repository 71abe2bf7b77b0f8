//! Fraunhofer propagation, the closed-form far field of a Gaussian-lit
//! annulus, and the lens Fourier transform.
//!
//! Frequencies are ordinary spatial frequencies, `nu = x / (lambda z)`.
//! An input grid of `N` samples at pitch `d` maps to an output pitch of
//! `lambda z / (N d)`.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftDirection;

use crate::aperture::{annulus_mask, apply_mask, gaussian_field, AnnulusSpec, GaussianSpec, MaskSampling};
use crate::error::{Error, Result};
use crate::fft::centered_fft2;
use crate::grid::{ComplexField2D, GridSpec, OpticalConfig, Plane};
use crate::special::bessel_j1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// `d_x d_y / (i lambda z)` times the DFT: a sampled version of the
    /// continuous diffraction integral.
    #[default]
    Physical,
    /// Orthonormal DFT rescaled by the ratio of cell areas, so that
    /// [`ComplexField2D::total_power`] is conserved. No `1/i` factor.
    Unitary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TransformOptions {
    pub normalization: Normalization,
    /// Apply the unit-modulus quadratic phase factors. Off by default:
    /// every comparison is on intensities, and the phases alias badly on
    /// large output grids.
    pub include_phase: bool,
}

impl TransformOptions {
    pub fn unitary() -> Self {
        TransformOptions {
            normalization: Normalization::Unitary,
            include_phase: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    pub field: ComplexField2D,
    pub normalization: Normalization,
    pub phase_prefactor_included: bool,
}

impl PropagationResult {
    pub fn grid(&self) -> &GridSpec {
        self.field.grid()
    }
}

/// Output pitch `lambda * distance / (n * pitch_in)`.
pub fn output_pitch(n: usize, pitch_in: f64, wavelength: f64, distance: f64) -> f64 {
    wavelength * distance / (n as f64 * pitch_in)
}

fn transformed_grid(input: &GridSpec, wavelength: f64, distance: f64, plane: Plane) -> GridSpec {
    GridSpec::with_pitches(
        input.nx(),
        input.ny(),
        output_pitch(input.nx(), input.pitch_x(), wavelength, distance),
        output_pitch(input.ny(), input.pitch_y(), wavelength, distance),
        plane,
    )
    .expect("input grid is valid, so is its transform")
}

fn scaled_transform(
    field: &ComplexField2D,
    wavelength: f64,
    distance: f64,
    plane: Plane,
    normalization: Normalization,
) -> (GridSpec, Array2<Complex64>) {
    let g_in = *field.grid();
    let g_out = transformed_grid(&g_in, wavelength, distance, plane);
    let mut data = field.samples().as_standard_layout().into_owned();
    centered_fft2(&mut data, FftDirection::Forward);
    let scale = match normalization {
        Normalization::Physical => Complex64::new(0.0, -g_in.cell_area() / (wavelength * distance)),
        Normalization::Unitary => {
            let n = (g_in.nx() * g_in.ny()) as f64;
            Complex64::new((g_in.cell_area() / g_out.cell_area() / n).sqrt(), 0.0)
        }
    };
    data.mapv_inplace(|v| v * scale);
    (g_out, data)
}

/// Far field at distance `z` of the given aperture-plane field.
pub fn fraunhofer_numeric(
    field: &ComplexField2D,
    cfg: &OpticalConfig,
    include_prefactor: bool,
) -> Result<PropagationResult> {
    fraunhofer_with(
        field,
        cfg,
        TransformOptions {
            normalization: Normalization::Physical,
            include_phase: include_prefactor,
        },
    )
}

pub fn fraunhofer_with(
    field: &ComplexField2D,
    cfg: &OpticalConfig,
    opts: TransformOptions,
) -> Result<PropagationResult> {
    let z = cfg.z();
    if !(z > 0.0) {
        return Err(Error::param("z", "must be positive"));
    }
    let (grid, mut data) = scaled_transform(field, cfg.wavelength(), z, Plane::Lens, opts.normalization);
    if opts.include_phase {
        let k = cfg.wavenumber();
        let curvature = grid.map(|x, y| Complex64::from_polar(1.0, k * z + k * (x * x + y * y) / (2.0 * z)));
        data *= &curvature;
    }
    Ok(PropagationResult {
        field: ComplexField2D::from_parts(grid, data),
        normalization: opts.normalization,
        phase_prefactor_included: opts.include_phase,
    })
}

/// Closed-form far field of the annulus transmission:
/// `[a1 J1(k a1 rho / z) - a0 J1(k a0 rho / z)] / (rho / z)`, with the limit
/// `k (a1^2 - a0^2) / 2` at `rho = 0`.
///
/// This is `1/lambda` times the 2D Fourier transform of the annulus at
/// `nu = rho / (lambda z)`.
pub fn annular_ring_ft(rho: f64, spec: &AnnulusSpec, cfg: &OpticalConfig) -> f64 {
    let k = cfg.wavenumber();
    let z = cfg.z();
    let (a0, a1) = (spec.a0(), spec.a1());
    let rho = rho.abs();
    let arg = k * a1 * rho / z;
    if arg < 1e-6 {
        // J1(x) = x/2 - x^3/16 + ...
        let q = k * rho / z;
        return k / 2.0 * (a1 * a1 - a0 * a0) - k * q * q / 16.0 * (a1.powi(4) - a0.powi(4));
    }
    (a1 * bessel_j1(arg) - a0 * bessel_j1(k * a0 * rho / z)) / (rho / z)
}

/// 2D Fourier transform of `exp(-(rho'/w)^2)` at `nu = rho / (lambda z)`:
/// `pi w^2 exp(-(k w rho / (2 z))^2)`.
pub fn gaussian_ft(rho: f64, waist: f64, cfg: &OpticalConfig) -> f64 {
    let q = cfg.wavenumber() * waist * rho / (2.0 * cfg.z());
    PI * waist * waist * (-q * q).exp()
}

/// Physical far field of a centred Gaussian, without quadratic phases.
pub fn gaussian_farfield(rho: f64, waist: f64, cfg: &OpticalConfig) -> Complex64 {
    Complex64::new(0.0, -gaussian_ft(rho, waist, cfg) / (cfg.wavelength() * cfg.z()))
}

/// Far field of the Gaussian-lit annulus by FFT of the masked source.
pub fn gaussian_annulus_farfield(
    grid: &GridSpec,
    gspec: &GaussianSpec,
    aspec: &AnnulusSpec,
    cfg: &OpticalConfig,
) -> Result<ComplexField2D> {
    let source = gaussian_field(grid, gspec);
    let masked = apply_mask(&source, &annulus_mask(grid, aspec, MaskSampling::default()))?;
    Ok(fraunhofer_numeric(&masked, cfg, false)?.field)
}

/// Far field of the Gaussian-lit annulus as the convolution of the two
/// closed-form transforms, sampled on the far-field grid of `grid`.
///
/// The Gaussian kernel is separable, so the 2D convolution runs as two 1D
/// passes; the ring transform is evaluated on a border wide enough that the
/// kernel never reads outside it.
pub fn farfield_by_convolution(
    grid: &GridSpec,
    gspec: &GaussianSpec,
    aspec: &AnnulusSpec,
    cfg: &OpticalConfig,
) -> Result<ComplexField2D> {
    let out = transformed_grid(grid, cfg.wavelength(), cfg.z(), Plane::Lens);
    let w = gspec.waist();
    let (cx, cy) = gspec.center();
    let lz = cfg.wavelength() * cfg.z();
    let dnu_x = out.pitch_x() / lz;
    let dnu_y = out.pitch_y() / lz;

    // 1D factor of the shifted Gaussian's transform, times the cell width.
    let kernel = |dnu: f64, shift: f64| -> Vec<Complex64> {
        let decay = (PI * w * dnu).powi(2);
        let half = ((41.5f64 / decay).sqrt().ceil() as usize).max(1);
        (0..=2 * half)
            .map(|t| {
                let a = t as f64 - half as f64;
                let nu = a * dnu;
                PI.sqrt() * w * (-decay * a * a).exp() * dnu * Complex64::from_polar(1.0, -2.0 * PI * nu * shift)
            })
            .collect()
    };
    let kx = kernel(dnu_x, cx);
    let ky = kernel(dnu_y, cy);
    let (hx, hy) = (kx.len() / 2, ky.len() / 2);
    let (nx, ny) = out.shape();

    // Ring transform in FT units (lambda * closed form) on the padded grid.
    let ring = Array2::from_shape_fn((nx + 2 * hx, ny + 2 * hy), |(i, j)| {
        let x = (i as f64 - hx as f64 - (nx / 2) as f64) * out.pitch_x();
        let y = (j as f64 - hy as f64 - (ny / 2) as f64) * out.pitch_y();
        cfg.wavelength() * annular_ring_ft(x.hypot(y), aspec, cfg)
    });

    // Kernel index t corresponds to frequency offset (t - half); the output
    // at m collects ring samples at m - offset.
    let pass_x = Array2::from_shape_fn((nx, ny + 2 * hy), |(i, j)| {
        kx.iter()
            .enumerate()
            .map(|(t, &g)| g * ring[[i + 2 * hx - t, j]])
            .sum::<Complex64>()
    });
    let scale = Complex64::new(0.0, -1.0 / lz);
    let data = Array2::from_shape_fn((nx, ny), |(i, j)| {
        scale
            * ky.iter()
                .enumerate()
                .map(|(t, &g)| g * pass_x[[i, j + 2 * hy - t]])
                .sum::<Complex64>()
    });
    Ok(ComplexField2D::from_parts(out, data))
}

/// Field in the back focal plane of a lens of focal length `f`.
///
/// With phases included this is
/// `exp(-ikf) exp(ik rho_f^2 / 2f) F[U exp(ik rho^2 / 2f)]` at
/// `nu = rho_f / (lambda f)`; without them it is the bare scaled transform
/// used for collimated beams.
pub fn lens_ft(field: &ComplexField2D, cfg: &OpticalConfig, opts: TransformOptions) -> Result<ComplexField2D> {
    let f = cfg.focal_length();
    if !(f > 0.0) {
        return Err(Error::param("focal_length", "must be positive"));
    }
    let k = cfg.wavenumber();
    let input = if opts.include_phase {
        let g = *field.grid();
        let phase = g.map(|x, y| Complex64::from_polar(1.0, k * (x * x + y * y) / (2.0 * f)));
        ComplexField2D::from_parts(g, field.samples() * &phase)
    } else {
        field.clone()
    };
    let (grid, mut data) = scaled_transform(&input, cfg.wavelength(), f, Plane::Focal, opts.normalization);
    if opts.include_phase {
        let outer = grid.map(|x, y| Complex64::from_polar(1.0, -k * f + k * (x * x + y * y) / (2.0 * f)));
        data *= &outer;
    }
    Ok(ComplexField2D::from_parts(grid, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_pitch_relation() {
        let grid = GridSpec::default_aperture();
        let cfg = OpticalConfig::default();
        let f = gaussian_field(&grid, &GaussianSpec::new(200.0).unwrap());
        let r = fraunhofer_numeric(&f, &cfg, false).unwrap();
        let expect = 0.795 * 300_000.0 / (1024.0 * 4.0);
        assert_eq!(r.grid().pitch_x(), expect);
        assert_eq!(r.grid().pitch_y(), expect);
        assert_eq!(r.grid().plane(), Plane::Lens);
        assert!(!r.phase_prefactor_included);
    }

    #[test]
    fn delta_gives_flat_magnitude() {
        let grid = GridSpec::new(32, 32, 2.0, Plane::Aperture).unwrap();
        let mut s = Array2::zeros(grid.shape());
        s[[16, 16]] = Complex64::new(1.0, 0.0);
        let f = ComplexField2D::new(grid, s).unwrap();
        let cfg = OpticalConfig::default();
        let r = fraunhofer_numeric(&f, &cfg, true).unwrap();
        let m0 = r.field.samples()[[0, 0]].norm();
        assert!((m0 - 4.0 / (0.795 * 300_000.0)).abs() < 1e-15);
        assert!(r.field.samples().iter().all(|c| (c.norm() - m0).abs() < 1e-15));
    }

    #[test]
    fn ring_ft_limits() {
        let cfg = OpticalConfig::default();
        let k = cfg.wavenumber();
        let a = AnnulusSpec::experiment();
        assert_eq!(
            annular_ring_ft(0.0, &a, &cfg),
            k * (400.0f64.powi(2) - 200.0f64.powi(2)) / 2.0
        );
        let disc = AnnulusSpec::new(0.0, 400.0).unwrap();
        for rho in [10.0, 100.0, 333.0, 2000.0] {
            let expect = 400.0 * bessel_j1(k * 400.0 * rho / cfg.z()) / (rho / cfg.z());
            assert!((annular_ring_ft(rho, &disc, &cfg) - expect).abs() < 1e-9 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn ring_ft_small_rho_matches_series() {
        // J1 series to three terms as the oracle.
        let cfg = OpticalConfig::default();
        let k = cfg.wavenumber();
        let z = cfg.z();
        let a = AnnulusSpec::experiment();
        let j1s = |x: f64| x / 2.0 - x.powi(3) / 16.0 + x.powi(5) / 384.0;
        for rho in [1e-6, 1e-3, 0.1, 1.0] {
            let series = (a.a1() * j1s(k * a.a1() * rho / z) - a.a0() * j1s(k * a.a0() * rho / z)) / (rho / z);
            let got = annular_ring_ft(rho, &a, &cfg);
            assert!(
                (got - series).abs() < 1e-10 * series.abs(),
                "rho={rho}: {got} vs {series}"
            );
        }
    }

    #[test]
    fn rejects_bad_distances() {
        let grid = GridSpec::new(8, 8, 1.0, Plane::Aperture).unwrap();
        let f = ComplexField2D::zeros(grid);
        // OpticalConfig::new already refuses non-positive values; the
        // transforms still check in case of a hand-built config.
        assert!(OpticalConfig::new(0.8, -1.0, 1.0).is_err());
        assert!(lens_ft(&f, &OpticalConfig::default(), TransformOptions::default()).is_ok());
    }
}
