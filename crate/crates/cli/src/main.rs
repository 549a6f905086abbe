mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser};
use quadprop::nls::{NLSParams, NlsFamily};
use serde_json::json;

use commands::Command;
use config::{CoefficientSpec, RunConfig};
use error::{CliError, CliResult};
use output::OutputDir;

/// Exact propagators for quadratic Hamiltonians and charged particles in
/// time-varying magnetic fields.
#[derive(Debug, Parser)]
#[command(name = "quadprop", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Args)]
struct Flags {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// ODE tolerance.
    #[arg(long, allow_hyphen_values = true)]
    tol: Option<f64>,
    /// Quadrature tolerance.
    #[arg(long, allow_hyphen_values = true)]
    qtol: Option<f64>,
    /// `N` or `min:max:N`.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Evaluation time, or end of the time range.
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    #[arg(long)]
    time_samples: Option<usize>,
    /// free, constant_force, sho, modified_oscillator or custom.
    #[arg(long)]
    preset: Option<String>,
    /// Comma-separated preset parameters.
    #[arg(long, allow_hyphen_values = true)]
    params: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Initial state CSV (`x,re,im`) for `propagate`.
    #[arg(long)]
    psi0: Option<PathBuf>,
    /// simple, kernel or modified_oscillator.
    #[arg(long)]
    family: Option<String>,
    /// `const:H0` or `linear:H0,H1`.
    #[arg(long = "H", allow_hyphen_values = true)]
    field: Option<String>,
    /// `zero` or `const:F0`.
    #[arg(long = "F", allow_hyphen_values = true)]
    force: Option<String>,
}

fn parse_list(spec: &str) -> CliResult<Vec<f64>> {
    if spec.trim().is_empty() {
        return Ok(Vec::new());
    }
    spec.split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::config(format!("--params expects comma-separated numbers, got `{spec}`")))
}

fn default_family(name: &str) -> CliResult<NlsFamily> {
    match name {
        "simple" => Ok(NlsFamily::Simple(NLSParams { mu1: 1.0, ..NLSParams::default() })),
        "kernel" => Ok(NlsFamily::Kernel { epsilon: 1.0, h: 1.0, s: 1.0, y: 0.0 }),
        "modified_oscillator" => Ok(NlsFamily::ModifiedOscillator { s: 1.0, y: 0.0 }),
        _ => Err(CliError::config(format!(
            "unknown family `{name}`; expected simple, kernel or modified_oscillator"
        ))),
    }
}

fn apply_flags(cfg: &mut RunConfig, f: &Flags) -> CliResult<()> {
    if let Some(v) = f.tol {
        cfg.tol = v;
    }
    if let Some(v) = f.qtol {
        cfg.qtol = v;
    }
    if let Some(g) = &f.grid {
        cfg.grid.override_with(g)?;
    }
    if let Some(v) = f.t {
        cfg.t = v;
    }
    if let Some(v) = f.time_samples {
        cfg.time_samples = v;
    }
    if f.preset.is_some() || f.params.is_some() {
        let (old_name, old_params) = match &cfg.coefficients {
            CoefficientSpec::Preset { preset, params } => (Some(preset.clone()), params.clone()),
            CoefficientSpec::Custom(_) => (None, Vec::new()),
        };
        let preset = f
            .preset
            .clone()
            .or(old_name)
            .ok_or_else(|| CliError::config("--params needs --preset when the config holds a custom set"))?;
        let params = match &f.params {
            Some(p) => parse_list(p)?,
            // Parameters of a different preset do not carry over.
            None if f.preset.is_some() => Vec::new(),
            None => old_params,
        };
        cfg.coefficients = CoefficientSpec::Preset { preset, params };
    }
    if let Some(v) = f.seed {
        cfg.seed = v;
    }
    if let Some(p) = &f.psi0 {
        cfg.psi0 = Some(p.clone());
    }
    if let Some(name) = &f.family {
        if cfg.nls.name() != name {
            cfg.nls = default_family(name)?;
        }
    }
    if let Some(h) = &f.field {
        cfg.magnetic.field = h.clone();
    }
    if let Some(force) = &f.force {
        cfg.magnetic.force = force.clone();
    }
    Ok(())
}

fn execute(cli: &Cli) -> CliResult<bool> {
    let start = Instant::now();
    let mut cfg = RunConfig::load(cli.flags.config.as_deref())?;
    apply_flags(&mut cfg, &cli.flags)?;
    cfg.check()?;
    let mut out = OutputDir::create(&cli.flags.out)?;
    let outcome = commands::run(cli.command, &cfg, &mut out)?;
    let mut outputs = out.written().to_vec();
    outputs.push("manifest.json".into());
    // Saving the `config` field as a file and passing it to `--config`
    // reproduces the run.
    let manifest = json!({
        "tool": "quadprop",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cli.command,
        "config": cfg,
        "outputs": outputs,
        "summary": outcome.summary,
        "success": outcome.success,
        "elapsed_seconds": start.elapsed().as_secs_f64(),
    });
    out.json("manifest.json", &manifest)?;
    Ok(outcome.success)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let err = CliError::config(e.kind().to_string())
                .with_context(json!({ "usage": e.render().to_string() }));
            eprintln!("{}", serde_json::to_string(&err).expect("error serializes"));
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e).expect("error serializes"));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
