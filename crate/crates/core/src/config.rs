//! Scenario configuration: a flat set of dotted keys in TOML syntax
//! (`aperture.a0_um = 200`), the built-in presets, and their serialisation.
//!
//! Every key is optional and falls back to the value in [`KEYS`]; unknown
//! keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use toml::Value;

use crate::aperture::{AnnulusSpec, GaussianSpec, MaskSampling, SlitOrientation, SlitSpec};
use crate::error::{Error, Result};
use crate::gain::{Beam, DkCoupling, DkModel, GainParameters, PHASE_MATCHING_ANGLE};
use crate::grid::{GridSpec, OpticalConfig, Plane};
use crate::io::{self, Record};

/// Pipeline stages in their canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Source,
    Masks,
    Farfield,
    SoftAperture,
    Lens,
    Slices,
    Fit,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Source,
        Stage::Masks,
        Stage::Farfield,
        Stage::SoftAperture,
        Stage::Lens,
        Stage::Slices,
        Stage::Fit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Source => "source",
            Stage::Masks => "masks",
            Stage::Farfield => "farfield",
            Stage::SoftAperture => "soft_aperture",
            Stage::Lens => "lens",
            Stage::Slices => "slices",
            Stage::Fit => "fit",
        }
    }

    pub fn from_name(s: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|st| st.name() == s)
    }

    fn requires(self) -> Option<Stage> {
        match self {
            Stage::Source => None,
            Stage::Masks | Stage::Farfield => Some(Stage::Source),
            Stage::SoftAperture | Stage::Lens | Stage::Slices => Some(Stage::Farfield),
            Stage::Fit => Some(Stage::Slices),
        }
    }
}

/// Which image the slices are cut from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceSource {
    Farfield,
    SoftAperture,
    Lens,
}

impl SliceSource {
    pub fn stage(self) -> Stage {
        match self {
            SliceSource::Farfield => Stage::Farfield,
            SliceSource::SoftAperture => Stage::SoftAperture,
            SliceSource::Lens => Stage::Lens,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DkSpec {
    RadialQuadratic {
        theta_pm: f64,
        kappa: f64,
        axis: (f64, f64),
    },
    /// CSV grid, see [`io::parse_dk_grid`].
    File(PathBuf),
}

impl DkSpec {
    /// The model, reading the file form against the far-field grid shape.
    pub fn resolve(&self, shape: (usize, usize)) -> Result<DkModel> {
        match self {
            DkSpec::RadialQuadratic { theta_pm, kappa, axis } => Ok(DkModel::RadialQuadratic {
                theta_pm: *theta_pm,
                kappa: *kappa,
                axis: *axis,
            }),
            DkSpec::File(p) => Ok(DkModel::External(io::parse_dk_grid(&io::read_text(p)?, shape)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainSettings {
    pub beam: Beam,
    pub params: GainParameters,
    pub dk: DkSpec,
}

/// Parameters of the experiment that do not enter the computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metadata {
    pub pump_power_mw: f64,
    pub detuning_ghz: f64,
    pub cell_temperature_c: f64,
    pub ccd_pixel_um: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub grid: GridSpec,
    pub optics: OpticalConfig,
    pub source: GaussianSpec,
    pub aperture: AnnulusSpec,
    pub sampling: MaskSampling,
    pub slit: Option<SlitSpec>,
    pub gain: GainSettings,
    pub stages: Vec<Stage>,
    pub slice_width: usize,
    pub slice_source: SliceSource,
    pub fit_eps0: f64,
    pub fit_offset: bool,
    /// Fixed intensity mapped to white; peak normalisation when unset.
    pub raw_scale: Option<f64>,
    pub metadata: Metadata,
}

/// Recognised keys with their meaning and units.
pub const KEYS: &[(&str, &str)] = &[
    ("grid.nx", "samples along x, power of two >= 8 [1024]"),
    ("grid.ny", "samples along y, power of two >= 8 [1024]"),
    ("grid.pitch_um", "aperture-plane sample pitch, um [4]"),
    ("optics.wavelength_um", "vacuum wavelength, um [0.795]"),
    ("optics.z_um", "aperture to far-field distance, um [300000]"),
    ("optics.focal_um", "lens focal length, um [200000]"),
    ("source.waist_um", "Gaussian 1/e amplitude radius, um [849.32]"),
    ("source.center_x_um", "beam centre x, um [0]"),
    ("source.center_y_um", "beam centre y, um [0]"),
    ("aperture.a0_um", "annulus inner radius, um [200]"),
    ("aperture.a1_um", "annulus outer radius, um [400]"),
    (
        "aperture.sampling",
        "\"area\" (edge pixels area-weighted) or \"hard\" [area]",
    ),
    ("aperture.subsamples", "sub-grid size per axis for area sampling [8]"),
    ("slit.width_um", "slit full width, um; no slit when absent"),
    (
        "slit.orientation",
        "\"vertical\" (blocks x) or \"horizontal\" [vertical]",
    ),
    ("gain.beam", "\"probe\" or \"conjugate\" [probe]"),
    (
        "gain.eps_re",
        "gain rate eps at dk = 0, real part, 1/um [acosh(sqrt 30)/17000]",
    ),
    ("gain.eps_im", "imaginary part, 1/um [0]"),
    ("gain.a_d_re", "coefficient a at dk = 0, 1/um [0]"),
    ("gain.a_d_im", "1/um [0]"),
    ("gain.a_pp_re", "probe self coefficient, 1/um [0]"),
    ("gain.a_pp_im", "1/um [0]"),
    ("gain.a_cc_re", "conjugate self coefficient, 1/um [0]"),
    ("gain.a_cc_im", "1/um [0]"),
    ("gain.a_cp_re", "cross coefficient, 1/um [= eps_re]"),
    ("gain.a_cp_im", "1/um [0]"),
    ("gain.length_um", "interaction length, um [17000]"),
    ("gain.coupling", "\"coupled_wave\" or \"literal\" [coupled_wave]"),
    ("dk.model", "\"radial_quadratic\" or \"file\" [radial_quadratic]"),
    ("dk.theta_pm_rad", "phase-matching cone half-angle, rad [0.0174533]"),
    ("dk.kappa_per_um", "dk = kappa (theta^2 - theta_pm^2) / 2, 1/um [6.5]"),
    ("dk.axis_x_rad", "cone axis direction x, rad [0]"),
    ("dk.axis_y_rad", "cone axis direction y, rad [0]"),
    (
        "dk.file",
        "CSV dk grid (1/um), ny rows of nx values, relative to the config",
    ),
    (
        "pipeline.stages",
        "ordered subset of source, masks, farfield, soft_aperture, lens, slices, fit",
    ),
    ("slices.width_px", "averaged slice width, pixels [10]"),
    (
        "slices.source",
        "\"farfield\", \"soft_aperture\" or \"lens\" [farfield]",
    ),
    ("fit.eps0", "initial obscuration ratio [0.5]"),
    ("fit.offset", "fit an additive background [false]"),
    (
        "output.raw_scale",
        "intensity mapped to white; images are peak-normalised when absent",
    ),
    ("metadata.pump_power_mw", "recorded only, mW [550]"),
    ("metadata.detuning_ghz", "recorded only, GHz [3.024]"),
    ("metadata.cell_temperature_c", "recorded only, deg C [115]"),
    ("metadata.ccd_pixel_um", "recorded only, um [5.5]"),
];

pub const PRESETS: &[&str] = &["annulus-probe", "annulus-slit", "fwm-probe", "fwm-conjugate"];

/// Grid used by the presets: fine enough in the far field to resolve the
/// rings and wide enough to hold the phase-matching cone.
const PRESET_N: usize = 2048;
const PRESET_KAPPA: f64 = 6.5;

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            grid: GridSpec::default_aperture(),
            optics: OpticalConfig::default(),
            source: GaussianSpec::probe(),
            aperture: AnnulusSpec::experiment(),
            sampling: MaskSampling::default(),
            slit: None,
            gain: GainSettings {
                beam: Beam::Probe,
                params: GainParameters::experiment(),
                dk: DkSpec::RadialQuadratic {
                    theta_pm: PHASE_MATCHING_ANGLE,
                    kappa: PRESET_KAPPA,
                    axis: (0.0, 0.0),
                },
            },
            stages: vec![Stage::Source, Stage::Masks, Stage::Farfield, Stage::Slices, Stage::Fit],
            slice_width: crate::profile::DEFAULT_SLICE_WIDTH,
            slice_source: SliceSource::Farfield,
            fit_eps0: 0.5,
            fit_offset: false,
            raw_scale: None,
            metadata: Metadata {
                pump_power_mw: 550.0,
                detuning_ghz: 3.024,
                cell_temperature_c: 115.0,
                ccd_pixel_um: 5.5,
            },
        }
    }
}

fn cfg_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

struct Keys(BTreeMap<String, Value>);

impl Keys {
    fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.0.get(key) {
            None => Ok(default),
            Some(Value::Float(v)) if v.is_finite() => Ok(*v),
            Some(Value::Integer(v)) => Ok(*v as f64),
            Some(v) => Err(cfg_err(key, format!("expected a finite number, got {v}"))),
        }
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        self.0.contains_key(key).then(|| self.f64(key, 0.0)).transpose()
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.0.get(key) {
            None => Ok(default),
            Some(Value::Integer(v)) if *v >= 0 => Ok(*v as usize),
            Some(v) => Err(cfg_err(key, format!("expected a non-negative integer, got {v}"))),
        }
    }

    fn bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.0.get(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(v) => Err(cfg_err(key, format!("expected true or false, got {v}"))),
        }
    }

    fn str(&self, key: &str) -> Result<Option<&str>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(cfg_err(key, format!("expected a string, got {v}"))),
        }
    }

    fn choice<T: Copy>(&self, key: &str, options: &[(&str, T)], default: T) -> Result<T> {
        match self.str(key)? {
            None => Ok(default),
            Some(s) => options.iter().find(|(n, _)| *n == s).map(|(_, v)| *v).ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                cfg_err(key, format!("`{s}` is not one of {}", names.join(", ")))
            }),
        }
    }

    fn complex(&self, stem: &str, default: Complex64) -> Result<Complex64> {
        Ok(Complex64::new(
            self.f64(&format!("{stem}_re"), default.re)?,
            self.f64(&format!("{stem}_im"), default.im)?,
        ))
    }
}

const SAMPLING: &[(&str, bool)] = &[("area", true), ("hard", false)];
const ORIENTATION: &[(&str, SlitOrientation)] = &[
    ("vertical", SlitOrientation::Vertical),
    ("horizontal", SlitOrientation::Horizontal),
];
const BEAM: &[(&str, Beam)] = &[("probe", Beam::Probe), ("conjugate", Beam::Conjugate)];
const COUPLING: &[(&str, DkCoupling)] = &[
    ("coupled_wave", DkCoupling::CoupledWave),
    ("literal", DkCoupling::Literal),
];
const DK_MODEL: &[(&str, bool)] = &[("radial_quadratic", false), ("file", true)];
const SLICE_SOURCE: &[(&str, SliceSource)] = &[
    ("farfield", SliceSource::Farfield),
    ("soft_aperture", SliceSource::SoftAperture),
    ("lens", SliceSource::Lens),
];

fn name_of<T: PartialEq>(options: &[(&'static str, T)], v: T) -> &'static str {
    options
        .iter()
        .find(|(_, o)| *o == v)
        .map(|(n, _)| *n)
        .expect("every variant is named")
}

impl ScenarioConfig {
    /// Parses a config; `dk.file` is resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Parse {
            what: "config",
            line: 0,
            reason: e.to_string().trim().replace('\n', " "),
        })?;
        let mut flat = BTreeMap::new();
        flatten("", &table, &mut flat);
        if let Some(k) = flat.keys().find(|k| !KEYS.iter().any(|(name, _)| name == k)) {
            return Err(cfg_err(k, "unknown key"));
        }
        let k = Keys(flat);
        let d = ScenarioConfig::default();
        fn wrap(key: &'static str) -> impl Fn(Error) -> Error {
            move |e| cfg_err(key, e.to_string())
        }

        let n = d.grid.nx();
        let grid = GridSpec::new(
            k.usize("grid.nx", n)?,
            k.usize("grid.ny", d.grid.ny())?,
            k.f64("grid.pitch_um", d.grid.pitch_x())?,
            Plane::Aperture,
        )
        .map_err(wrap("grid"))?;
        let optics = OpticalConfig::new(
            k.f64("optics.wavelength_um", d.optics.wavelength())?,
            k.f64("optics.z_um", d.optics.z())?,
            k.f64("optics.focal_um", d.optics.focal_length())?,
        )
        .map_err(wrap("optics"))?;
        let source = GaussianSpec::with_center(
            k.f64("source.waist_um", d.source.waist())?,
            (k.f64("source.center_x_um", 0.0)?, k.f64("source.center_y_um", 0.0)?),
        )
        .map_err(wrap("source.waist_um"))?;
        let aperture = AnnulusSpec::new(
            k.f64("aperture.a0_um", d.aperture.a0())?,
            k.f64("aperture.a1_um", d.aperture.a1())?,
        )
        .map_err(wrap("aperture"))?;
        let sampling = if k.choice("aperture.sampling", SAMPLING, true)? {
            let n = k.usize("aperture.subsamples", 8)?;
            if n == 0 {
                return Err(cfg_err("aperture.subsamples", "must be at least 1"));
            }
            MaskSampling::AreaWeighted { subsamples: n }
        } else {
            MaskSampling::Hard
        };
        let slit = match k.opt_f64("slit.width_um")? {
            Some(w) => Some(
                SlitSpec::new(w, k.choice("slit.orientation", ORIENTATION, SlitOrientation::Vertical)?)
                    .map_err(wrap("slit.width_um"))?,
            ),
            None if k.0.contains_key("slit.orientation") => {
                return Err(cfg_err("slit.orientation", "given without slit.width_um"));
            }
            None => None,
        };

        let dp = d.gain.params;
        let eps_g = k.complex("gain.eps", dp.eps_g)?;
        let params = GainParameters {
            eps_g,
            a_d: k.complex("gain.a_d", dp.a_d)?,
            a_pp: k.complex("gain.a_pp", dp.a_pp)?,
            a_cc: k.complex("gain.a_cc", dp.a_cc)?,
            a_cp: k.complex("gain.a_cp", eps_g)?,
            length: k.f64("gain.length_um", dp.length)?,
            coupling: k.choice("gain.coupling", COUPLING, dp.coupling)?,
        };
        params.validate().map_err(wrap("gain"))?;
        let dk = if k.choice("dk.model", DK_MODEL, false)? {
            let file = k
                .str("dk.file")?
                .ok_or_else(|| cfg_err("dk.file", "required by dk.model = \"file\""))?;
            let path = match base_dir {
                Some(b) => b.join(file),
                None => PathBuf::from(file),
            };
            DkSpec::File(path)
        } else {
            if k.0.contains_key("dk.file") {
                return Err(cfg_err("dk.file", "only used with dk.model = \"file\""));
            }
            DkSpec::RadialQuadratic {
                theta_pm: k.f64("dk.theta_pm_rad", PHASE_MATCHING_ANGLE)?,
                kappa: k.f64("dk.kappa_per_um", PRESET_KAPPA)?,
                axis: (k.f64("dk.axis_x_rad", 0.0)?, k.f64("dk.axis_y_rad", 0.0)?),
            }
        };
        let gain = GainSettings {
            beam: k.choice("gain.beam", BEAM, Beam::Probe)?,
            params,
            dk,
        };

        let stages = match k.0.get("pipeline.stages") {
            None => d.stages.clone(),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| {
                    v.as_str()
                        .and_then(Stage::from_name)
                        .ok_or_else(|| cfg_err("pipeline.stages", format!("unknown stage {v}")))
                })
                .collect::<Result<Vec<_>>>()?,
            Some(v) => return Err(cfg_err("pipeline.stages", format!("expected an array, got {v}"))),
        };
        let slice_width = k.usize("slices.width_px", d.slice_width)?;
        if slice_width == 0 {
            return Err(cfg_err("slices.width_px", "must be at least 1"));
        }
        let fit_eps0 = k.f64("fit.eps0", d.fit_eps0)?;
        if !(0.0..crate::profile::MAX_EPS).contains(&fit_eps0) {
            return Err(cfg_err(
                "fit.eps0",
                format!("{fit_eps0} is outside [0, {})", crate::profile::MAX_EPS),
            ));
        }
        let raw_scale = k.opt_f64("output.raw_scale")?;
        if let Some(s) = raw_scale {
            if s <= 0.0 {
                return Err(cfg_err("output.raw_scale", "must be positive"));
            }
        }
        let cfg = ScenarioConfig {
            grid,
            optics,
            source,
            aperture,
            sampling,
            slit,
            gain,
            stages,
            slice_width,
            slice_source: k.choice("slices.source", SLICE_SOURCE, d.slice_source)?,
            fit_eps0,
            fit_offset: k.bool("fit.offset", d.fit_offset)?,
            raw_scale,
            metadata: Metadata {
                pump_power_mw: k.f64("metadata.pump_power_mw", d.metadata.pump_power_mw)?,
                detuning_ghz: k.f64("metadata.detuning_ghz", d.metadata.detuning_ghz)?,
                cell_temperature_c: k.f64("metadata.cell_temperature_c", d.metadata.cell_temperature_c)?,
                ccd_pixel_um: k.f64("metadata.ccd_pixel_um", d.metadata.ccd_pixel_um)?,
            },
        };
        cfg.validate_stages()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&io::read_text(path)?, path.parent())
    }

    /// Stages must appear in canonical order, each with its prerequisite.
    pub fn validate_stages(&self) -> Result<()> {
        let key = "pipeline.stages";
        for w in self.stages.windows(2) {
            if w[0] >= w[1] {
                return Err(cfg_err(
                    key,
                    format!("`{}` cannot follow `{}`", w[1].name(), w[0].name()),
                ));
            }
        }
        for s in &self.stages {
            if let Some(r) = s.requires() {
                if !self.stages.contains(&r) {
                    return Err(cfg_err(key, format!("`{}` requires `{}`", s.name(), r.name())));
                }
            }
        }
        if self.stages.contains(&Stage::Slices) && !self.stages.contains(&self.slice_source.stage()) {
            return Err(cfg_err(
                "slices.source",
                format!("stage `{}` is not in the pipeline", self.slice_source.stage().name()),
            ));
        }
        Ok(())
    }

    pub fn has(&self, stage: Stage) -> bool {
        self.stages.contains(&stage)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let base = ScenarioConfig {
            grid: GridSpec::new(PRESET_N, PRESET_N, 4.0, Plane::Aperture).expect("valid"),
            ..ScenarioConfig::default()
        };
        let fwm = |beam: Beam, axis_sign: f64| ScenarioConfig {
            gain: GainSettings {
                beam,
                params: GainParameters::experiment(),
                dk: DkSpec::RadialQuadratic {
                    theta_pm: PHASE_MATCHING_ANGLE,
                    kappa: PRESET_KAPPA,
                    axis: (axis_sign * PHASE_MATCHING_ANGLE, 0.0),
                },
            },
            stages: Stage::ALL.to_vec(),
            slice_source: SliceSource::SoftAperture,
            ..base.clone()
        };
        match name {
            "annulus-probe" => Ok(base),
            "annulus-slit" => Ok(ScenarioConfig {
                slit: Some(SlitSpec::new(400.0, SlitOrientation::Vertical).expect("valid")),
                ..base
            }),
            // Probe and conjugate leave the cell on opposite sides of the
            // pump, so their cones are centred on opposite axes.
            "fwm-probe" => Ok(fwm(Beam::Probe, -1.0)),
            "fwm-conjugate" => Ok(fwm(Beam::Conjugate, 1.0)),
            other => Err(cfg_err(
                "preset",
                format!("unknown preset `{other}`; available: {}", PRESETS.join(", ")),
            )),
        }
    }

    /// Every key with its resolved value, in [`KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, Value)> {
        let f = Value::Float;
        let i = |n: usize| Value::Integer(n as i64);
        let s = |t: &str| Value::String(t.to_string());
        let p = &self.gain.params;
        let mut out = vec![
            ("grid.nx", i(self.grid.nx())),
            ("grid.ny", i(self.grid.ny())),
            ("grid.pitch_um", f(self.grid.pitch_x())),
            ("optics.wavelength_um", f(self.optics.wavelength())),
            ("optics.z_um", f(self.optics.z())),
            ("optics.focal_um", f(self.optics.focal_length())),
            ("source.waist_um", f(self.source.waist())),
            ("source.center_x_um", f(self.source.center().0)),
            ("source.center_y_um", f(self.source.center().1)),
            ("aperture.a0_um", f(self.aperture.a0())),
            ("aperture.a1_um", f(self.aperture.a1())),
        ];
        match self.sampling {
            MaskSampling::Hard => out.push(("aperture.sampling", s("hard"))),
            MaskSampling::AreaWeighted { subsamples } => {
                out.push(("aperture.sampling", s("area")));
                out.push(("aperture.subsamples", i(subsamples)));
            }
        }
        if let Some(slit) = &self.slit {
            out.push(("slit.width_um", f(slit.width())));
            out.push(("slit.orientation", s(name_of(ORIENTATION, slit.orientation()))));
        }
        out.push(("gain.beam", s(name_of(BEAM, self.gain.beam))));
        for (re, im, c) in [
            ("gain.eps_re", "gain.eps_im", p.eps_g),
            ("gain.a_d_re", "gain.a_d_im", p.a_d),
            ("gain.a_pp_re", "gain.a_pp_im", p.a_pp),
            ("gain.a_cc_re", "gain.a_cc_im", p.a_cc),
            ("gain.a_cp_re", "gain.a_cp_im", p.a_cp),
        ] {
            out.push((re, f(c.re)));
            out.push((im, f(c.im)));
        }
        out.push(("gain.length_um", f(p.length)));
        out.push(("gain.coupling", s(name_of(COUPLING, p.coupling))));
        match &self.gain.dk {
            DkSpec::RadialQuadratic { theta_pm, kappa, axis } => {
                out.push(("dk.model", s("radial_quadratic")));
                out.push(("dk.theta_pm_rad", f(*theta_pm)));
                out.push(("dk.kappa_per_um", f(*kappa)));
                out.push(("dk.axis_x_rad", f(axis.0)));
                out.push(("dk.axis_y_rad", f(axis.1)));
            }
            DkSpec::File(path) => {
                out.push(("dk.model", s("file")));
                out.push(("dk.file", s(&path.display().to_string())));
            }
        }
        out.push((
            "pipeline.stages",
            Value::Array(self.stages.iter().map(|st| s(st.name())).collect()),
        ));
        out.push(("slices.width_px", i(self.slice_width)));
        out.push(("slices.source", s(name_of(SLICE_SOURCE, self.slice_source))));
        out.push(("fit.eps0", f(self.fit_eps0)));
        out.push(("fit.offset", Value::Boolean(self.fit_offset)));
        if let Some(r) = self.raw_scale {
            out.push(("output.raw_scale", f(r)));
        }
        let m = &self.metadata;
        out.push(("metadata.pump_power_mw", f(m.pump_power_mw)));
        out.push(("metadata.detuning_ghz", f(m.detuning_ghz)));
        out.push(("metadata.cell_temperature_c", f(m.cell_temperature_c)));
        out.push(("metadata.ccd_pixel_um", f(m.ccd_pixel_um)));
        out
    }

    /// Config text that parses back to `self`.
    pub fn to_toml_string(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn to_record(&self) -> Record {
        self.entries()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }
}

/// `--help` text listing every key.
pub fn keys_help() -> String {
    let width = KEYS.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut s = String::from("Config keys (TOML, dotted; defaults in brackets):\n");
    for (k, d) in KEYS {
        s.push_str(&format!("  {k:width$}  {d}\n"));
    }
    s
}
