//! Source fields and transmission functions.
//!
//! The pointwise transmissions (`circ`, annulus, slit) are binary with an
//! inclusive outer boundary: `circ(1) = 1`. Masks sampled onto a grid can
//! either take the pointwise value at each sample centre or the fraction of
//! the pixel area that transmits (see [`MaskSampling`]).

use ndarray::{Array2, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField2D, GridSpec};

/// `1` for `0 <= t <= 1`, `0` beyond. Negative ratios are rejected.
pub fn circ(t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::param("t", format!("{t} must be non-negative")));
    }
    Ok(if t <= 1.0 { 1.0 } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusSpec {
    a0: f64,
    a1: f64,
}

impl AnnulusSpec {
    /// Inner radius `a0` and outer radius `a1` in um, `0 <= a0 < a1`.
    pub fn new(a0: f64, a1: f64) -> Result<Self> {
        if !(a0.is_finite() && a1.is_finite()) || a0 < 0.0 || a0 >= a1 {
            return Err(Error::param(
                "annulus",
                format!("need 0 <= a0 < a1, got a0 = {a0}, a1 = {a1}"),
            ));
        }
        Ok(AnnulusSpec { a0, a1 })
    }

    /// 400 um inner and 800 um outer diameter.
    pub fn experiment() -> Self {
        AnnulusSpec { a0: 200.0, a1: 400.0 }
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    /// Obscuration ratio `a0 / a1`.
    pub fn obscuration(&self) -> f64 {
        self.a0 / self.a1
    }
}

/// `circ(rho/a1) - circ(rho/a0)`: 1 on `a0 < rho <= a1`.
pub fn annulus_transmission(rho: f64, spec: &AnnulusSpec) -> f64 {
    let rho = rho.abs();
    let outer = if rho <= spec.a1 { 1.0 } else { 0.0 };
    let inner = if spec.a0 > 0.0 && rho <= spec.a0 { 1.0 } else { 0.0 };
    outer - inner
}

/// Gaussian amplitude `exp(-(rho/w)^2)` with optional centre offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpec {
    waist: f64,
    center: (f64, f64),
}

impl GaussianSpec {
    pub fn new(waist: f64) -> Result<Self> {
        Self::with_center(waist, (0.0, 0.0))
    }

    pub fn with_center(waist: f64, center: (f64, f64)) -> Result<Self> {
        if !(waist.is_finite() && waist > 0.0) {
            return Err(Error::param("waist", format!("{waist} must be positive")));
        }
        if !(center.0.is_finite() && center.1.is_finite()) {
            return Err(Error::param("center", "must be finite"));
        }
        Ok(GaussianSpec { waist, center })
    }

    /// Beam whose intensity `exp(-2 (rho/w)^2)` has the given full width at
    /// half maximum.
    pub fn from_intensity_fwhm(fwhm: f64) -> Result<Self> {
        Self::new(waist_from_fwhm(fwhm))
    }

    /// The 1 mm FWHM probe.
    pub fn probe() -> Self {
        GaussianSpec {
            waist: waist_from_fwhm(1000.0),
            center: (0.0, 0.0),
        }
    }

    pub fn waist(&self) -> f64 {
        self.waist
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    pub fn intensity_fwhm(&self) -> f64 {
        self.waist * (2.0 * std::f64::consts::LN_2).sqrt()
    }

    pub fn amplitude(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.center.0;
        let dy = y - self.center.1;
        (-(dx * dx + dy * dy) / (self.waist * self.waist)).exp()
    }
}

pub fn waist_from_fwhm(fwhm: f64) -> f64 {
    fwhm / (2.0 * std::f64::consts::LN_2).sqrt()
}

pub fn gaussian_field(grid: &GridSpec, spec: &GaussianSpec) -> ComplexField2D {
    ComplexField2D::from_fn(*grid, |x, y| Complex64::new(spec.amplitude(x, y), 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlitOrientation {
    /// Long axis along y; blocks in x.
    Vertical,
    /// Long axis along x; blocks in y.
    Horizontal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitSpec {
    width: f64,
    orientation: SlitOrientation,
}

impl SlitSpec {
    pub fn new(width: f64, orientation: SlitOrientation) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::param("slit width", format!("{width} must be positive")));
        }
        Ok(SlitSpec { width, orientation })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn orientation(&self) -> SlitOrientation {
        self.orientation
    }
}

/// `coordinate` is measured along the blocking axis (x for a vertical slit).
pub fn slit_transmission(coordinate: f64, spec: &SlitSpec) -> f64 {
    if coordinate.abs() <= spec.width / 2.0 {
        1.0
    } else {
        0.0
    }
}

/// Real transmission sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    grid: GridSpec,
    values: Array2<f64>,
}

impl Mask {
    pub fn new(grid: GridSpec, values: Array2<f64>) -> Result<Self> {
        if values.dim() != grid.shape() {
            return Err(Error::ShapeMismatch {
                expected: grid.shape(),
                got: values.dim(),
            });
        }
        Ok(Mask { grid, values })
    }

    pub fn ones(grid: GridSpec) -> Self {
        Mask {
            grid,
            values: Array2::ones(grid.shape()),
        }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Mask {
            grid,
            values: Array2::zeros(grid.shape()),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Pointwise product of two masks on the same grid.
    pub fn product(&self, other: &Mask) -> Result<Mask> {
        check_same_grid(&self.grid, &other.grid)?;
        Ok(Mask {
            grid: self.grid,
            values: &self.values * &other.values,
        })
    }
}

fn check_same_grid(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            expected: a.shape(),
            got: b.shape(),
        });
    }
    if a.pitch_x() != b.pitch_x() || a.pitch_y() != b.pitch_y() {
        return Err(Error::InvalidGrid(format!(
            "pitch mismatch: ({}, {}) vs ({}, {})",
            a.pitch_x(),
            a.pitch_y(),
            b.pitch_x(),
            b.pitch_y()
        )));
    }
    Ok(())
}

/// How hard-edged apertures are rasterised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskSampling {
    /// Pointwise transmission at the sample centre.
    Hard,
    /// Transmitting fraction of each pixel, estimated on an `n x n`
    /// sub-grid for pixels the edge passes through.
    AreaWeighted { subsamples: usize },
}

impl Default for MaskSampling {
    fn default() -> Self {
        MaskSampling::AreaWeighted { subsamples: 8 }
    }
}

pub fn annulus_mask(grid: &GridSpec, spec: &AnnulusSpec, sampling: MaskSampling) -> Mask {
    let values = match sampling {
        MaskSampling::Hard => grid.map(|x, y| annulus_transmission(x.hypot(y), spec)),
        MaskSampling::AreaWeighted { subsamples } => {
            let n = subsamples.max(1);
            let (px, py) = (grid.pitch_x(), grid.pitch_y());
            let half_diag = 0.5 * px.hypot(py);
            let near = |rho: f64, edge: f64| edge > 0.0 && (rho - edge).abs() <= half_diag;
            grid.map(|x, y| {
                let rho = x.hypot(y);
                if !(near(rho, spec.a0) || near(rho, spec.a1)) {
                    return annulus_transmission(rho, spec);
                }
                let mut hits = 0usize;
                for a in 0..n {
                    let sx = x + ((a as f64 + 0.5) / n as f64 - 0.5) * px;
                    for b in 0..n {
                        let sy = y + ((b as f64 + 0.5) / n as f64 - 0.5) * py;
                        if annulus_transmission(sx.hypot(sy), spec) == 1.0 {
                            hits += 1;
                        }
                    }
                }
                hits as f64 / (n * n) as f64
            })
        }
    };
    Mask { grid: *grid, values }
}

/// Slit centred on the optical axis; always hard-sampled.
pub fn slit_mask(grid: &GridSpec, spec: &SlitSpec) -> Mask {
    let values = grid.map(|x, y| {
        let c = match spec.orientation {
            SlitOrientation::Vertical => x,
            SlitOrientation::Horizontal => y,
        };
        slit_transmission(c, spec)
    });
    Mask { grid: *grid, values }
}

pub fn apply_mask(field: &ComplexField2D, mask: &Mask) -> Result<ComplexField2D> {
    check_same_grid(field.grid(), mask.grid())?;
    let mut out = field.samples().clone();
    Zip::from(&mut out).and(mask.values()).for_each(|s, &t| *s *= t);
    Ok(ComplexField2D::from_parts(*field.grid(), out))
}
