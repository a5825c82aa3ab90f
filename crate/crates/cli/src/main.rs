use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use leland_core::experiment::{preset_table, run_experiment, RunConfig};
use leland_core::{preset, Error};

/// Finite-element pricing of European calls under Leland's transaction-cost model.
///
/// Settings are applied in order: --preset, then --config, then each --set,
/// then --out and --oracles. Without --preset or --config the run uses le04-coarse.
#[derive(Debug, Parser)]
#[command(name = "leland-fem", version)]
struct Cli {
    /// Named experiment preset (see --list-presets).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,

    /// Flat key = value configuration file.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one key, e.g. --set h=0.05 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Run the finite-difference and closed-form oracles.
    #[arg(long, value_enum, value_name = "on|off")]
    oracles: Option<Switch>,

    /// Print the preset table and exit.
    #[arg(long)]
    list_presets: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

fn build_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.preset {
        Some(name) => preset(name)?,
        None => RunConfig::default(),
    };
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    for s in &cli.set {
        cfg.apply_assignment(s)?;
    }
    if let Some(dir) = &cli.out {
        cfg.outputs.dir = dir.clone();
    }
    if let Some(sw) = cli.oracles {
        cfg.outputs.oracles = matches!(sw, Switch::On);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_presets {
        print!("{}", preset_table());
        return ExitCode::SUCCESS;
    }
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run_experiment(&cfg) {
        Ok(res) => {
            for w in res.advisory.warnings() {
                eprintln!("warning: {w}");
            }
            for n in res.advisory.notes() {
                eprintln!("note: {n}");
            }
            let s = &res.stability;
            println!("preset:            {}", cfg.preset.as_deref().unwrap_or("(custom)"));
            println!("Leland number:     {:.6}", res.leland);
            println!(
                "mesh:              {} elements ({}), h = {:.6}, R = {:.6}",
                res.mesh.n_elements(),
                res.mesh.order(),
                res.mesh.max_element_size(),
                res.mesh.half_width()
            );
            println!("d_tau/h, d_tau/h^2: {:.6}, {:.6}", s.ratio_tau_h, s.ratio_tau_h2);
            println!(
                "oscillation index: {:.6e} (threshold {}){}",
                s.oscillation_index,
                s.threshold,
                if s.flagged { "  FLAGGED" } else { "" }
            );
            println!("output:            {}", cfg.outputs.dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
