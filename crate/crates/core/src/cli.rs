//! Command-line front end. [`run`] parses arguments, executes one command
//! and returns the process exit code.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{self, ExperimentConfig, Overrides, Preset};
use crate::error::{Error, Result};
use crate::experiment::{compare_theory_sim, monte_carlo, Scenario, ScenarioEcho, TheorySummary};
use crate::report::{ensure_dir, output_path, write_curve_csv, write_json, TheoryColumns};
use crate::selection::SchemeKind;
use crate::theory::oracle::{validate_moments, MomentCheck, OracleSettings, MAX_SAMPLED_STACKED_DIM};

#[derive(Debug, Parser)]
#[command(name = "pdrls", version, about = "Partial-diffusion RLS over noisy links: simulation and theory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo learning curve and summary.
    Simulate(CommonArgs),
    /// Stability and steady-state MSD predictions.
    Theory {
        #[command(flatten)]
        common: CommonArgs,
        /// Also evaluate every L in the configured sweep.
        #[arg(long)]
        sweep: bool,
    },
    /// Simulated against predicted steady state for every L in the sweep.
    Compare(CommonArgs),
    /// Monte-Carlo checks of the closed-form moments.
    ValidateMoments(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    Desk,
    Paper,
    Tiny,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Sequential,
    Stochastic,
    UniformSubset,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML file layered over the preset.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Base configuration (default: desk; tiny for validate-moments).
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    /// Entries transmitted per iteration.
    #[arg(long, value_name = "L")]
    pub entries: Option<usize>,
    #[arg(long, value_name = "F")]
    pub lambda: Option<f64>,
    #[arg(long, value_name = "F")]
    pub link_noise_scale: Option<f64>,
    #[arg(long, value_name = "N")]
    pub runs: Option<usize>,
    #[arg(long, value_name = "N")]
    pub iterations: Option<usize>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            scheme: self.scheme.map(|s| match s {
                SchemeArg::Sequential => SchemeKind::Sequential,
                SchemeArg::Stochastic => SchemeKind::Stochastic,
                SchemeArg::UniformSubset => SchemeKind::UniformSubset,
            }),
            entries: self.entries,
            lambda: self.lambda,
            link_noise_scale: self.link_noise_scale,
            runs: self.runs,
            iterations: self.iterations,
        }
    }

    fn load(&self, default: Preset) -> Result<ExperimentConfig> {
        let preset = match self.preset {
            Some(PresetArg::Desk) => Preset::Desk,
            Some(PresetArg::Paper) => Preset::Paper,
            Some(PresetArg::Tiny) => Preset::Tiny,
            None => default,
        };
        config::load(preset, self.config.as_deref(), &self.overrides())
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Simulate(a) => cmd_simulate(&a.load(Preset::Desk)?, &a.out),
        Command::Theory { common, sweep } => cmd_theory(&common.load(Preset::Desk)?, &common.out, *sweep),
        Command::Compare(a) => cmd_compare(&a.load(Preset::Desk)?, &a.out),
        Command::ValidateMoments(a) => cmd_validate_moments(&a.load(Preset::Tiny)?, &a.out),
    }
}

fn print_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

/// Writes `curve.csv` and `summary.json`.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let scenario = Scenario::resolve(cfg)?;
    ensure_dir(out)?;
    let (curve, summary) = monte_carlo(&scenario)?;

    let theory_curves = if cfg.lambda < 1.0 {
        let model = scenario.theory()?;
        print_warnings(&model.warnings);
        let w_o = scenario.ground_truth(0)?;
        Some((
            model.ideal().transient_msd(&w_o, cfg.iterations)?,
            model.transient_msd(&w_o, cfg.iterations)?,
        ))
    } else {
        None
    };
    write_curve_csv(
        &output_path(out, "curve.csv"),
        &curve.msd,
        theory_curves.as_ref().map(|(ideal, noisy)| TheoryColumns { ideal, noisy }),
    )?;
    write_json(&output_path(out, "summary.json"), &summary)?;

    match &summary.steady_state {
        Some(ss) => println!(
            "steady-state MSD {:.2} dB over the last {} iterations ({} runs, {} diverged)",
            ss.msd_db,
            ss.window,
            summary.runs,
            summary.diverged.len()
        ),
        None => println!("all {} runs diverged", summary.runs),
    }
    if let Some(t) = &summary.theory {
        println!(
            "theory: ideal {:.2} dB, noisy {:.2} dB",
            t.msd_ideal_db, t.msd_noisy_db
        );
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct TheoryReport {
    config: ExperimentConfig,
    scenario: ScenarioEcho,
    theory: TheorySummary,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    sweep: Vec<TheorySummary>,
}

/// Writes `theory.json`.
pub fn cmd_theory(cfg: &ExperimentConfig, out: &Path, sweep: bool) -> Result<()> {
    let scenario = Scenario::resolve(cfg)?;
    let model = scenario.theory()?;
    print_warnings(&model.warnings);
    let theory = TheorySummary::from_model(&model)?;
    let sweep = if sweep {
        let values: Vec<usize> = if cfg.selection.sweep.is_empty() {
            (1..=cfg.selection.dim).collect()
        } else {
            cfg.selection.sweep.clone()
        };
        values
            .iter()
            .map(|&l| TheorySummary::from_model(&scenario.with_entries(l)?.theory()?))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    ensure_dir(out)?;
    let report = TheoryReport {
        config: cfg.clone(),
        scenario: ScenarioEcho::new(&scenario)?,
        theory,
        sweep,
    };
    write_json(&output_path(out, "theory.json"), &report)?;

    let t = &report.theory;
    println!(
        "spectral radius of lambda Q {:.12}, of lambda^2 Phi {:.12}",
        t.stability.spectral_radius_mean, t.stability.spectral_radius_ms
    );
    println!("{:>3} {:>12} {:>12} {:>14}", "L", "ideal dB", "noisy dB", "noise penalty");
    for row in std::iter::once(t).chain(&report.sweep) {
        println!(
            "{:>3} {:>12.3} {:>12.3} {:>14.6e}",
            row.entries, row.msd_ideal_db, row.msd_noisy_db, row.noise_penalty
        );
    }
    Ok(())
}

/// Writes `compare.json`.
pub fn cmd_compare(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let scenario = Scenario::resolve(cfg)?;
    let entries = if cfg.selection.sweep.is_empty() {
        vec![cfg.selection.entries]
    } else {
        cfg.selection.sweep.clone()
    };
    let report = compare_theory_sim(&scenario, &entries)?;
    ensure_dir(out)?;
    write_json(&output_path(out, "compare.json"), &report)?;
    println!(
        "{:>3} {:>10} {:>10} {:>10} {:>8}",
        "L", "sim dB", "ideal dB", "noisy dB", "gap dB"
    );
    for r in &report.rows {
        println!(
            "{:>3} {:>10.2} {:>10.2} {:>10.2} {:>8.2}",
            r.entries, r.msd_sim_db, r.msd_ideal_db, r.msd_noisy_db, r.gap_db
        );
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct MomentReport<'a> {
    config: &'a ExperimentConfig,
    checks: &'a [MomentCheck],
    passed: bool,
}

/// Writes `moments.json`; fails with a validation error if any check fails.
pub fn cmd_validate_moments(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let nm = cfg.network.nodes * cfg.selection.dim;
    if nm > MAX_SAMPLED_STACKED_DIM {
        return Err(Error::Resource(format!(
            "moment validation needs N M <= {MAX_SAMPLED_STACKED_DIM}, got {nm}"
        )));
    }
    let scenario = Scenario::resolve(cfg)?;
    let settings = OracleSettings {
        mean_draws: cfg.oracle.mean_draws,
        second_moment_draws: cfg.oracle.second_moment_draws,
        noise_draws: cfg.oracle.noise_draws,
        seed: cfg.seed,
    };
    let checks = validate_moments(
        &scenario.weights,
        &scenario.link_noise,
        cfg.selection.scheme,
        cfg.selection.entries,
        cfg.selection.dim,
        &settings,
    )?;
    for c in &checks {
        println!("{c}");
    }
    let passed = checks.iter().all(|c| c.passed);
    ensure_dir(out)?;
    write_json(
        &output_path(out, "moments.json"),
        &MomentReport {
            config: cfg,
            checks: &checks,
            passed,
        },
    )?;
    if passed {
        Ok(())
    } else {
        let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(Error::Validation(format!("failed: {}", failed.join(", "))))
    }
}
