use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fwm_core::config::{keys_help, ScenarioConfig, PRESETS};
use fwm_core::io::{self, comparison_record, fit_record, format_record};
use fwm_core::pipeline;
use fwm_core::profile::{compare_profiles, fit_airy, FitGuess, PositionUnit};
use fwm_core::Error;

#[derive(Parser)]
#[command(
    name = "fwm",
    version,
    about = "Four-wave-mixing mode conversion through an annular aperture"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write images, slices, fits and a manifest.
    #[command(after_help = keys_help())]
    Simulate {
        /// Config file, or `preset:NAME` for a built-in scenario.
        config: Option<String>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Write the named preset to CONFIG (stdout when omitted) instead of
        /// running.
        #[arg(long, value_name = "NAME")]
        dump_preset: Option<String>,
    },
    /// Fit the annular Airy law to a two-column profile CSV.
    Fit {
        csv: PathBuf,
        /// Initial obscuration ratio.
        #[arg(long, default_value_t = 0.5)]
        eps0: f64,
        /// Also fit an additive background.
        #[arg(long)]
        offset: bool,
        /// Record path; defaults to CSV with a `.fit.txt` extension.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two profiles after peak normalisation.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Micrometres per pixel for profile A (pixel positions only).
        #[arg(long)]
        scale_a: Option<f64>,
        #[arg(long)]
        scale_b: Option<f64>,
        /// Also write the metrics record here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(spec: &str) -> Result<ScenarioConfig, Error> {
    match spec.strip_prefix("preset:") {
        Some(name) => ScenarioConfig::preset(name),
        None => ScenarioConfig::load(Path::new(spec)),
    }
}

fn simulate(config: Option<String>, out: PathBuf, dump: Option<String>) -> Result<(), Error> {
    if let Some(name) = dump {
        let text = ScenarioConfig::preset(&name)?.to_toml_string();
        let text = format!("# preset {name}\n{text}");
        match config {
            Some(path) => io::write_bytes(Path::new(&path), text.as_bytes())?,
            None => print!("{text}"),
        }
        return Ok(());
    }
    let spec = config.ok_or_else(|| Error::Config {
        key: "config".into(),
        reason: format!("missing config path (or preset:NAME, one of {})", PRESETS.join(", ")),
    })?;
    let cfg = load_config(&spec)?;
    let (_, manifest) = pipeline::simulate(&cfg, &out)?;
    println!(
        "wrote {} files and manifest.txt to {}",
        manifest.files.len(),
        out.display()
    );
    for (k, v) in &manifest.notes {
        println!("{k} = {v}");
    }
    Ok(())
}

fn fit(csv: PathBuf, eps0: f64, offset: bool, out: Option<PathBuf>) -> Result<(), Error> {
    let profile = io::read_profile(&csv)?;
    let guess = FitGuess {
        eps_ratio: eps0,
        fit_offset: offset,
        ..FitGuess::default()
    };
    let out = out.unwrap_or_else(|| csv.with_extension("fit.txt"));
    let (fit, status, err) = match fit_airy(&profile, &guess) {
        Ok(f) => (f, "converged", None),
        Err(e) => match &e {
            Error::NoConvergence { best, .. } => (**best, "no_convergence", Some(e)),
            _ => return Err(e),
        },
    };
    let record = fit_record(&fit, profile.unit(), status);
    io::write_bytes(&out, format_record(&record).as_bytes())?;
    println!("eps_ratio = {:?}", fit.eps_ratio);
    println!("residual = {:?}", fit.residual);
    err.map_or(Ok(()), Err)
}

fn compare(
    a: PathBuf,
    b: PathBuf,
    scale_a: Option<f64>,
    scale_b: Option<f64>,
    out: Option<PathBuf>,
) -> Result<(), Error> {
    let load = |p: &Path, scale: Option<f64>| -> Result<_, Error> {
        let prof = io::read_profile(p)?;
        match scale {
            Some(s) if prof.unit() == PositionUnit::Pixels => prof.with_pitch(s),
            Some(_) => Err(Error::Config {
                key: "scale".into(),
                reason: format!("{} already has micrometre positions", p.display()),
            }),
            None => Ok(prof),
        }
    };
    let pa = load(&a, scale_a)?;
    let pb = load(&b, scale_b)?;
    let cmp = compare_profiles(&pa, &pb)?;
    let text = format_record(&comparison_record(&cmp, pa.unit()));
    print!("{text}");
    if let Some(path) = out {
        io::write_bytes(&path, text.as_bytes())?;
    }
    if let Some(w) = &cmp.warning {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Simulate {
            config,
            out,
            dump_preset,
        } => simulate(config, out, dump_preset),
        Command::Fit { csv, eps0, offset, out } => fit(csv, eps0, offset, out),
        Command::Compare {
            a,
            b,
            scale_a,
            scale_b,
            out,
        } => compare(a, b, scale_a, scale_b, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
