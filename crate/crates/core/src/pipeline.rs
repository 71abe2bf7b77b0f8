//! Runs a [`ScenarioConfig`] stage by stage and writes its outputs.
//!
//! Output names carry the stage index so a directory listing reads in
//! pipeline order: `01_source.pgm`, `03_farfield.pgm`,
//! `06_slice_horizontal.csv`, `07_fit_vertical.txt`, `manifest.txt`.

use std::path::Path;
use std::time::Instant;

use ndarray::{Array2, Zip};

use crate::aperture::{annulus_mask, apply_mask, gaussian_field, slit_mask};
use crate::config::{ScenarioConfig, SliceSource, Stage};
use crate::error::{Error, Result};
use crate::gain::{apply_soft_aperture, band_power_fraction, build_dk_map, half_maximum_band, soft_aperture_mask};
use crate::grid::{ComplexField2D, GridSpec};
use crate::io::{self, ImageScale, RunManifest};
use crate::profile::{
    compare_profiles, extract_slice, fit_airy, AiryFit, FitGuess, ProfileComparison, RadialProfile, SliceOrientation,
};
use crate::propagation::{fraunhofer_numeric, lens_ft, TransformOptions};

#[derive(Debug, Clone)]
pub struct SliceResult {
    pub orientation: SliceOrientation,
    /// Positions in micrometres from the image centre.
    pub profile: RadialProfile,
    pub fit: Option<AiryFit>,
    /// Slice against the fitted law.
    pub fit_comparison: Option<ProfileComparison>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    /// Source field after the masks stage, if it ran.
    pub aperture_field: Option<ComplexField2D>,
    pub farfield: Option<ComplexField2D>,
    pub soft_mask: Option<Array2<f64>>,
    /// Far-field intensity times the soft aperture.
    pub soft_intensity: Option<Array2<f64>>,
    /// Fraction of the soft-aperture output inside the mask's half-maximum
    /// band.
    pub band_fraction: Option<f64>,
    pub lens: Option<ComplexField2D>,
    pub slices: Vec<SliceResult>,
    /// Intensity images in pipeline order.
    pub images: Vec<(String, Array2<f64>)>,
    pub timings: Vec<(Stage, f64)>,
}

fn in_stage<T>(stage: Stage, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: stage.name(),
        source: Box::new(e),
    })
}

fn prefix(stage: Stage) -> usize {
    Stage::ALL.iter().position(|s| *s == stage).expect("stage is listed") + 1
}

fn image_name(stage: Stage, suffix: &str) -> String {
    format!("{:02}_{}{suffix}", prefix(stage), stage.name())
}

fn slice_image<'a>(out: &'a RunOutput, source: SliceSource) -> (GridSpec, std::borrow::Cow<'a, Array2<f64>>) {
    use std::borrow::Cow;
    let ff = out.farfield.as_ref().expect("validated: slices require farfield");
    match source {
        SliceSource::Farfield => (*ff.grid(), Cow::Owned(ff.intensity())),
        SliceSource::SoftAperture => (
            *ff.grid(),
            Cow::Borrowed(out.soft_intensity.as_ref().expect("validated: stage present")),
        ),
        SliceSource::Lens => {
            let l = out.lens.as_ref().expect("validated: stage present");
            (*l.grid(), Cow::Owned(l.intensity()))
        }
    }
}

/// Computes every configured stage in memory.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput> {
    cfg.validate_stages()?;
    let mut out = RunOutput::default();
    let mut field: Option<ComplexField2D> = None;

    for &stage in &cfg.stages {
        let t0 = Instant::now();
        match stage {
            Stage::Source => {
                let f = gaussian_field(&cfg.grid, &cfg.source);
                out.images.push((image_name(stage, ".pgm"), f.intensity()));
                field = Some(f);
            }
            Stage::Masks => {
                let src = field.take().expect("validated: masks require source");
                let masked = in_stage(
                    stage,
                    (|| {
                        let mut mask = annulus_mask(&cfg.grid, &cfg.aperture, cfg.sampling);
                        if let Some(slit) = &cfg.slit {
                            mask = mask.product(&slit_mask(&cfg.grid, slit))?;
                        }
                        apply_mask(&src, &mask)
                    })(),
                )?;
                out.images.push((image_name(stage, ".pgm"), masked.intensity()));
                out.aperture_field = Some(masked.clone());
                field = Some(masked);
            }
            Stage::Farfield => {
                let src = field.take().expect("validated: farfield requires source");
                let ff = in_stage(stage, fraunhofer_numeric(&src, &cfg.optics, false))?.field;
                out.images.push((image_name(stage, ".pgm"), ff.intensity()));
                field = Some(ff.clone());
                out.farfield = Some(ff);
            }
            Stage::SoftAperture => {
                let ff = out.farfield.as_ref().expect("validated");
                let g = &cfg.gain;
                let (mask, intensity) = in_stage(
                    stage,
                    (|| {
                        let model = g.dk.resolve(ff.grid().shape())?;
                        let map = build_dk_map(ff.grid(), cfg.optics.z(), model)?;
                        let mask = soft_aperture_mask(&map, &g.params, g.beam)?;
                        let intensity = apply_soft_aperture(&ff.intensity(), &mask)?;
                        Ok((mask, intensity))
                    })(),
                )?;
                // The gain acts on intensity; the field carries its root.
                let mut samples = ff.samples().clone();
                Zip::from(&mut samples).and(&mask).for_each(|u, &m| *u *= m.sqrt());
                field = Some(in_stage(stage, ComplexField2D::new(*ff.grid(), samples))?);
                out.band_fraction = Some(band_power_fraction(&intensity, &half_maximum_band(&mask)));
                out.images.push((image_name(stage, ".pgm"), intensity.clone()));
                out.images.push((image_name(stage, "_mask.pgm"), mask.clone()));
                out.soft_mask = Some(mask);
                out.soft_intensity = Some(intensity);
            }
            Stage::Lens => {
                let src = field.as_ref().expect("validated: lens requires farfield");
                let l = in_stage(stage, lens_ft(src, &cfg.optics, TransformOptions::default()))?;
                out.images.push((image_name(stage, ".pgm"), l.intensity()));
                out.lens = Some(l);
            }
            Stage::Slices => {
                let (grid, image) = slice_image(&out, cfg.slice_source);
                let center = grid.center_index();
                let mut slices = Vec::new();
                for (orientation, pitch) in [
                    (SliceOrientation::Horizontal, grid.pitch_x()),
                    (SliceOrientation::Vertical, grid.pitch_y()),
                ] {
                    let profile = in_stage(
                        stage,
                        (|| extract_slice(&image, orientation, center, cfg.slice_width)?.with_pitch(pitch))(),
                    )?;
                    slices.push(SliceResult {
                        orientation,
                        profile,
                        fit: None,
                        fit_comparison: None,
                    });
                }
                out.slices = slices;
            }
            Stage::Fit => {
                let guess = FitGuess {
                    eps_ratio: cfg.fit_eps0,
                    fit_offset: cfg.fit_offset,
                    ..FitGuess::default()
                };
                for s in &mut out.slices {
                    let (fit, cmp) = in_stage(
                        stage,
                        (|| {
                            let fit = fit_airy(&s.profile, &guess)?;
                            let model = fit.evaluate(s.profile.positions(), s.profile.unit())?;
                            Ok((fit, compare_profiles(&s.profile, &model)?))
                        })(),
                    )?;
                    s.fit = Some(fit);
                    s.fit_comparison = Some(cmp);
                }
            }
        }
        out.timings.push((stage, t0.elapsed().as_secs_f64()));
    }
    Ok(out)
}

/// Writes images, slices, fit records and the manifest into `dir`.
pub fn write_outputs(cfg: &ScenarioConfig, out: &RunOutput, dir: &Path) -> Result<RunManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = RunManifest {
        config: cfg.to_record(),
        ..RunManifest::default()
    };
    let scale = match cfg.raw_scale {
        Some(s) => ImageScale::Fixed(s),
        None => ImageScale::Peak,
    };
    manifest.notes.push((
        "image_scale".into(),
        cfg.raw_scale.map_or("peak".to_string(), |s| format!("{s:?}")),
    ));

    for (name, img) in &out.images {
        let bytes = io::write_pgm(&dir.join(name), img, scale)?;
        manifest.add_file(name.clone(), &bytes);
    }
    for s in &out.slices {
        let o = s.orientation.name();
        let name = format!("{:02}_slice_{o}.csv", prefix(Stage::Slices));
        let bytes = io::write_profile(&dir.join(&name), &s.profile)?;
        manifest.add_file(name, &bytes);
        if let (Some(fit), Some(cmp)) = (&s.fit, &s.fit_comparison) {
            let mut rec = io::fit_record(fit, s.profile.unit(), "converged");
            rec.extend(io::comparison_record(cmp, s.profile.unit()));
            let name = format!("{:02}_fit_{o}.txt", prefix(Stage::Fit));
            let bytes = io::format_record(&rec).into_bytes();
            io::write_bytes(&dir.join(&name), &bytes)?;
            manifest.add_file(name, &bytes);
            manifest
                .notes
                .push((format!("fit_{o}.eps_ratio"), format!("{:?}", fit.eps_ratio)));
            manifest
                .notes
                .push((format!("fit_{o}.nrmse"), format!("{:?}", cmp.nrmse)));
        }
    }
    if let Some(f) = out.band_fraction {
        manifest
            .notes
            .push(("soft_aperture.band_power_fraction".into(), format!("{f:?}")));
    }
    manifest.timings = out.timings.iter().map(|(s, t)| (s.name().to_string(), *t)).collect();
    let path = dir.join("manifest.txt");
    io::write_bytes(&path, manifest.to_text().as_bytes())?;
    Ok(manifest)
}

pub fn simulate(cfg: &ScenarioConfig, dir: &Path) -> Result<(RunOutput, RunManifest)> {
    let out = run(cfg)?;
    let manifest = write_outputs(cfg, &out, dir)?;
    Ok((out, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Plane;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            grid: GridSpec::new(256, 256, 8.0, Plane::Aperture).unwrap(),
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn names_follow_stage_order() {
        assert_eq!(image_name(Stage::Source, ".pgm"), "01_source.pgm");
        assert_eq!(
            image_name(Stage::SoftAperture, "_mask.pgm"),
            "04_soft_aperture_mask.pgm"
        );
    }

    #[test]
    fn empty_pipeline_writes_only_the_manifest() {
        let cfg = ScenarioConfig {
            stages: vec![],
            ..small()
        };
        let dir = tempfile::tempdir().unwrap();
        let (_, m) = simulate(&cfg, dir.path()).unwrap();
        assert!(m.files.is_empty());
        let names: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names, vec!["manifest.txt"]);
    }

    #[test]
    fn default_stages_produce_slices_and_fits() {
        let out = run(&small()).unwrap();
        assert_eq!(out.images.len(), 3);
        assert_eq!(out.slices.len(), 2);
        assert!(out.slices.iter().all(|s| s.fit.is_some()));
    }

    #[test]
    fn soft_aperture_failure_names_stage() {
        let mut cfg = small();
        cfg.stages = vec![Stage::Source, Stage::Farfield, Stage::SoftAperture];
        cfg.gain.dk = crate::config::DkSpec::File("/nonexistent/dk.csv".into());
        match run(&cfg) {
            Err(Error::Stage { stage, .. }) => assert_eq!(stage, "soft_aperture"),
            other => panic!("{other:?}"),
        }
    }
}
