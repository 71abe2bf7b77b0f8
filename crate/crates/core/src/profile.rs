//! Slices through intensity images and the annular Airy law.
//!
//! The radial intensity behind an annulus with obscuration `eps` is
//!
//! ```text
//! I(v) = I0 / (1 - eps^2)^2 * [2 J1(v) / v - eps^2 * 2 J1(eps v) / (eps v)]^2
//! ```
//!
//! with `I(0) = I0`. Fits map a physical position `p` to `v = (p - c) / s`.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{storage::Owned, DMatrix, DVector, Dyn};
use ndarray::{s, Array2};

use crate::error::{Error, Result};
use crate::special::{bessel_j0, bessel_j2, bracket_roots, jinc};

/// Largest obscuration the fit will return.
pub const MAX_EPS: f64 = 0.99;
/// Slice width of the measured profiles, pixels.
pub const DEFAULT_SLICE_WIDTH: usize = 10;
const MIN_FIT_SAMPLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositionUnit {
    Micrometers,
    Pixels,
}

impl PositionUnit {
    pub fn suffix(self) -> &'static str {
        match self {
            PositionUnit::Micrometers => "um",
            PositionUnit::Pixels => "px",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    positions: Vec<f64>,
    intensities: Vec<f64>,
    unit: PositionUnit,
    /// Peak the intensities were divided by, if they were normalised.
    normalization: Option<f64>,
}

impl RadialProfile {
    pub fn new(positions: Vec<f64>, intensities: Vec<f64>, unit: PositionUnit) -> Result<Self> {
        if positions.len() != intensities.len() {
            return Err(Error::param(
                "profile",
                format!("{} positions vs {} intensities", positions.len(), intensities.len()),
            ));
        }
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::param("profile", "non-finite position"));
        }
        if positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("profile", "positions must be strictly increasing"));
        }
        if intensities.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::param("profile", "intensities must be finite and non-negative"));
        }
        Ok(RadialProfile {
            positions,
            intensities,
            unit,
            normalization: None,
        })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn unit(&self) -> PositionUnit {
        self.unit
    }

    pub fn normalization(&self) -> Option<f64> {
        self.normalization
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn peak(&self) -> f64 {
        self.intensities.iter().cloned().fold(0.0, f64::max)
    }

    /// Index of the first maximum.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.intensities.iter().enumerate() {
            if v > self.intensities[best] {
                best = i;
            }
        }
        best
    }

    /// Divides by the peak; an all-zero profile is returned unchanged.
    pub fn normalized(&self) -> RadialProfile {
        let peak = self.peak();
        let scale = if peak > 0.0 { peak } else { 1.0 };
        RadialProfile {
            positions: self.positions.clone(),
            intensities: self.intensities.iter().map(|v| v / scale).collect(),
            unit: self.unit,
            normalization: Some(scale),
        }
    }

    /// Multiplies pixel positions by `pitch` to get micrometres.
    pub fn with_pitch(&self, pitch: f64) -> Result<RadialProfile> {
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(Error::param("pitch", format!("{pitch} must be positive")));
        }
        Ok(RadialProfile {
            positions: self.positions.iter().map(|p| p * pitch).collect(),
            intensities: self.intensities.clone(),
            unit: PositionUnit::Micrometers,
            normalization: self.normalization,
        })
    }

    /// Linear interpolation; `None` outside the sampled range.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        let p = &self.positions;
        if p.is_empty() || x < p[0] || x > p[p.len() - 1] {
            return None;
        }
        let k = p.partition_point(|&q| q <= x);
        if k == p.len() {
            return Some(self.intensities[p.len() - 1]);
        }
        if k == 0 {
            return Some(self.intensities[0]);
        }
        let (x0, x1) = (p[k - 1], p[k]);
        let t = (x - x0) / (x1 - x0);
        Some(self.intensities[k - 1] * (1.0 - t) + self.intensities[k] * t)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::param("eps_ratio", format!("{eps} must lie in [0, 1)")));
    }
    Ok(())
}

/// Bracket `2 J1(v)/v - eps^2 2 J1(eps v)/(eps v)`.
fn airy_bracket(v: f64, eps: f64) -> f64 {
    jinc(v) - eps * eps * jinc(eps * v)
}

pub fn annular_airy_intensity(v: f64, eps: f64, i0: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(airy_unchecked(v, eps, i0))
}

fn airy_unchecked(v: f64, eps: f64, i0: f64) -> f64 {
    if v == 0.0 {
        return i0;
    }
    let r = airy_bracket(v, eps) / (1.0 - eps * eps);
    r * r * i0
}

/// `J2(x) / x`, finite at 0.
fn j2_over_x(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        x / 8.0
    } else {
        bessel_j2(x) / x
    }
}

/// `(I / i0, d(I/i0)/dv, d(I/i0)/d eps)`.
fn airy_with_gradient(v: f64, eps: f64) -> (f64, f64, f64) {
    let d = 1.0 - eps * eps;
    let b = airy_bracket(v, eps);
    let db_dv = -2.0 * j2_over_x(v) + 2.0 * eps * eps * eps * j2_over_x(eps * v);
    let db_de = -2.0 * eps * bessel_j0(eps * v);
    let a = b * b / (d * d);
    let da_dv = 2.0 * b * db_dv / (d * d);
    let da_de = 2.0 * b * db_de / (d * d) + 4.0 * eps * b * b / (d * d * d);
    (a, da_dv, da_de)
}

/// First positive zero of the annular Airy intensity.
pub fn annular_airy_first_zero(eps: f64) -> Result<f64> {
    check_eps(eps)?;
    bracket_roots(|v| airy_bracket(v, eps), 1e-3, 200.0, 0.01, 1)
        .first()
        .copied()
        .ok_or_else(|| Error::param("eps_ratio", "no zero found below v = 200"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceOrientation {
    /// Profile along x, averaged over a band of rows in y.
    Horizontal,
    /// Profile along y, averaged over a band of columns in x.
    Vertical,
}

impl SliceOrientation {
    pub fn name(self) -> &'static str {
        match self {
            SliceOrientation::Horizontal => "horizontal",
            SliceOrientation::Vertical => "vertical",
        }
    }
}

/// Averages `width` adjacent lines centred on `center`; for even widths the
/// band is `[c - width/2, c + width/2)`. Positions are pixel offsets from
/// the centre along the profile axis.
pub fn extract_slice(
    image: &Array2<f64>,
    orientation: SliceOrientation,
    center: (usize, usize),
    width: usize,
) -> Result<RadialProfile> {
    let (nx, ny) = image.dim();
    if width == 0 {
        return Err(Error::SliceOutOfBounds("width must be at least 1".into()));
    }
    let (c_band, c_axis, band_len) = match orientation {
        SliceOrientation::Horizontal => (center.1, center.0, ny),
        SliceOrientation::Vertical => (center.0, center.1, nx),
    };
    let lo = c_band as isize - (width / 2) as isize;
    let hi = lo + width as isize;
    if lo < 0 || hi as usize > band_len {
        return Err(Error::SliceOutOfBounds(format!(
            "band [{lo}, {hi}) outside 0..{band_len}"
        )));
    }
    let (lo, hi) = (lo as usize, hi as usize);
    let band = match orientation {
        SliceOrientation::Horizontal => image.slice(s![.., lo..hi]).to_owned(),
        SliceOrientation::Vertical => image.slice(s![lo..hi, ..]).t().to_owned(),
    };
    let values: Vec<f64> = band
        .rows()
        .into_iter()
        .map(|row| row.iter().sum::<f64>() / width as f64)
        .collect();
    let positions = (0..values.len()).map(|k| k as f64 - c_axis as f64).collect();
    RadialProfile::new(positions, values, PositionUnit::Pixels)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryFit {
    pub eps_ratio: f64,
    pub i0: f64,
    /// Position units per unit of `v`.
    pub scale: f64,
    pub center: f64,
    /// Additive background; zero unless fitted.
    pub offset: f64,
    /// Sum of squared residuals.
    pub residual: f64,
    pub iterations: usize,
}

impl AiryFit {
    pub fn model(&self, position: f64) -> f64 {
        let v = (position - self.center) / self.scale;
        airy_unchecked(v, self.eps_ratio, self.i0) + self.offset
    }

    /// Samples the fitted law at the given positions.
    pub fn evaluate(&self, positions: &[f64], unit: PositionUnit) -> Result<RadialProfile> {
        let vals = positions.iter().map(|&p| self.model(p).max(0.0)).collect();
        RadialProfile::new(positions.to_vec(), vals, unit)
    }
}

/// Starting point of the local search; unset fields are estimated from the
/// profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitGuess {
    pub eps_ratio: f64,
    pub i0: Option<f64>,
    pub scale: Option<f64>,
    pub center: Option<f64>,
    pub fit_offset: bool,
    /// Cap on residual evaluations.
    pub max_evaluations: usize,
}

impl Default for FitGuess {
    fn default() -> Self {
        FitGuess {
            eps_ratio: 0.5,
            i0: None,
            scale: None,
            center: None,
            fit_offset: false,
            max_evaluations: 2000,
        }
    }
}

fn logistic(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

struct AiryProblem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    fit_offset: bool,
    // [u, i0, ln s, c, (offset)]
    params: DVector<f64>,
}

impl AiryProblem<'_> {
    fn decode(&self) -> (f64, f64, f64, f64, f64) {
        let p = &self.params;
        let eps = MAX_EPS * logistic(p[0]);
        let off = if self.fit_offset { p[4] } else { 0.0 };
        (eps, p[1], p[2].exp(), p[3], off)
    }
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for AiryProblem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.params.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.params.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let (eps, i0, s, c, off) = self.decode();
        if !(s.is_finite() && s > 0.0) {
            return None;
        }
        Some(DVector::from_iterator(
            self.x.len(),
            self.x
                .iter()
                .zip(self.y)
                .map(|(&x, &y)| airy_unchecked((x - c) / s, eps, i0) + off - y),
        ))
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let (eps, i0, s, c, _) = self.decode();
        let n = self.params.len();
        let sig = logistic(self.params[0]);
        let deps_du = MAX_EPS * sig * (1.0 - sig);
        let mut jac = DMatrix::zeros(self.x.len(), n);
        for (k, &x) in self.x.iter().enumerate() {
            let v = (x - c) / s;
            let (a, da_dv, da_de) = airy_with_gradient(v, eps);
            jac[(k, 0)] = i0 * da_de * deps_du;
            jac[(k, 1)] = a;
            jac[(k, 2)] = -i0 * da_dv * v;
            jac[(k, 3)] = -i0 * da_dv / s;
            if self.fit_offset {
                jac[(k, 4)] = 1.0;
            }
        }
        Some(jac)
    }
}

fn first_local_min(values: &[f64], start: usize, step: isize) -> Option<usize> {
    let mut i = start as isize + step;
    while i > 0 && (i as usize) < values.len() - 1 {
        let k = i as usize;
        if values[k] <= values[k - 1] && values[k] <= values[k + 1] {
            return Some(k);
        }
        i += step;
    }
    None
}

/// Initial scale from the distance between the peak and its nearest minima.
fn guess_scale(profile: &RadialProfile, peak: usize, eps: f64) -> Result<f64> {
    let p = profile.positions();
    let v = profile.intensities();
    let mut dists = Vec::new();
    if let Some(k) = first_local_min(v, peak, 1) {
        dists.push(p[k] - p[peak]);
    }
    if let Some(k) = first_local_min(v, peak, -1) {
        dists.push(p[peak] - p[k]);
    }
    let zero = annular_airy_first_zero(eps)?;
    if dists.is_empty() {
        // No minimum visible: assume the profile spans a few lobes.
        let span = p[p.len() - 1] - p[0];
        return Ok(span / (4.0 * zero));
    }
    let d = dists.iter().sum::<f64>() / dists.len() as f64;
    Ok(d / zero)
}

/// Least-squares fit of the annular Airy law to a profile.
pub fn fit_airy(profile: &RadialProfile, guess: &FitGuess) -> Result<AiryFit> {
    if profile.len() < MIN_FIT_SAMPLES {
        return Err(Error::DegenerateProfile(format!(
            "{} samples, need at least {MIN_FIT_SAMPLES}",
            profile.len()
        )));
    }
    let peak = profile.peak();
    let floor = profile.intensities().iter().cloned().fold(f64::INFINITY, f64::min);
    if peak <= 0.0 {
        return Err(Error::DegenerateProfile("all intensities are zero".into()));
    }
    if peak - floor <= 1e-12 * peak {
        return Err(Error::DegenerateProfile("constant intensity".into()));
    }
    if !(0.0..=MAX_EPS).contains(&guess.eps_ratio) {
        return Err(Error::param(
            "eps0",
            format!("{} must lie in [0, {MAX_EPS}]", guess.eps_ratio),
        ));
    }
    let argmax = profile.argmax();
    let eps0 = guess.eps_ratio.clamp(1e-3, MAX_EPS - 1e-3);
    let center = guess.center.unwrap_or(profile.positions()[argmax]);
    let i0 = guess.i0.unwrap_or(peak);
    let scale = match guess.scale {
        Some(s) if s > 0.0 => s,
        Some(s) => return Err(Error::param("scale", format!("{s} must be positive"))),
        None => guess_scale(profile, argmax, eps0)?,
    };

    let mut init = vec![logit(eps0 / MAX_EPS), i0, scale.ln(), center];
    if guess.fit_offset {
        init.push(0.0);
    }
    let n = init.len();
    let problem = AiryProblem {
        x: profile.positions(),
        y: profile.intensities(),
        fit_offset: guess.fit_offset,
        params: DVector::from_vec(init),
    };
    let patience = (guess.max_evaluations / (n + 1)).max(1);
    let (problem, report) = LevenbergMarquardt::new()
        .with_ftol(1e-15)
        .with_xtol(1e-15)
        .with_gtol(1e-15)
        .with_patience(patience)
        .minimize(problem);

    let (eps, i0, s, c, off) = problem.decode();
    let residual = problem.residuals().map(|r| r.norm_squared()).unwrap_or(f64::INFINITY);
    let fit = AiryFit {
        eps_ratio: eps,
        i0,
        scale: s,
        center: c,
        offset: off,
        residual,
        iterations: report.number_of_evaluations,
    };
    let usable = report.termination.was_successful()
        || matches!(
            report.termination,
            levenberg_marquardt::TerminationReason::NoImprovementPossible(_)
        );
    if !usable || !residual.is_finite() {
        return Err(Error::NoConvergence {
            iterations: report.number_of_evaluations,
            reason: format!("{:?}", report.termination),
            best: Box::new(fit),
        });
    }
    Ok(fit)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileComparison {
    /// RMS difference of the peak-normalised profiles on the common grid.
    pub nrmse: f64,
    /// Position of `b`'s principal maximum minus `a`'s.
    pub peak_offset: f64,
    pub samples: usize,
    pub warning: Option<String>,
}

pub fn compare_profiles(a: &RadialProfile, b: &RadialProfile) -> Result<ProfileComparison> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::DisjointRanges);
    }
    let (pa, pb) = (a.positions(), b.positions());
    let lo = pa[0].max(pb[0]);
    let hi = pa[pa.len() - 1].min(pb[pb.len() - 1]);
    if lo > hi {
        return Err(Error::DisjointRanges);
    }
    let an = a.normalized();
    let bn = b.normalized();
    let count = |p: &[f64]| p.iter().filter(|&&x| x >= lo && x <= hi).count();
    let samples = count(pa).max(count(pb)).max(1);
    let mut acc = 0.0;
    for k in 0..samples {
        let x = if samples == 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (samples - 1) as f64
        };
        let d = an.interpolate(x).unwrap_or(0.0) - bn.interpolate(x).unwrap_or(0.0);
        acc += d * d;
    }
    let warning = (a.unit() != b.unit()).then(|| {
        format!(
            "position units differ ({} vs {}); no scale applied",
            a.unit().suffix(),
            b.unit().suffix()
        )
    });
    Ok(ProfileComparison {
        nrmse: (acc / samples as f64).sqrt(),
        peak_offset: pb[b.argmax()] - pa[a.argmax()],
        samples,
        warning,
    })
}
