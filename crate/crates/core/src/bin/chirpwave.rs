//! Command-line front end for the experiment drivers.
//!
//! Exit codes: 0 on success, 1 on configuration or validation errors, 2 when
//! `selftest` finds a failing criterion.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chirpwave::harness::{
    acceptance, complexity_compare, run_iorel_checks, run_nmse_sweep, run_ortho_experiment, run_psd_experiment,
    ExperimentConfig, SweepKind,
};
use chirpwave::Result;

#[derive(Parser)]
#[command(name = "chirpwave", version, about = "Chirp-domain multicarrier waveform experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Desk-scale run: N = 256, at most 20 trials, oversampling 8.
    #[arg(long)]
    small: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic vs simulated PSD and the occupied bandwidth.
    Psd(Common),
    /// |I(n,n')|/T grid of aliased chirps plus the predictor's classes.
    Ortho {
        #[command(flatten)]
        common: Common,
        /// Chirp index C = 2N·c1.
        #[arg(long)]
        c: Option<f64>,
    },
    /// NMSE between the simulated receiver and the effective-channel model.
    Nmse {
        #[command(flatten)]
        common: Common,
        /// speed, rolloff or span; overrides the `sweep` key.
        #[arg(long)]
        sweep: Option<SweepKind>,
    },
    /// Checks on the matched-filter input/output relation.
    Iorel(Common),
    /// Multiplication counts and transform timings.
    Complexity(Common),
    /// Runs the acceptance criteria.
    Selftest {
        /// Desk-scale NMSE sweeps only.
        #[arg(long)]
        small: bool,
        /// Run a single criterion.
        #[arg(long)]
        only: Option<u8>,
    },
}

fn load(c: &Common) -> Result<ExperimentConfig> {
    let mut ec = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        ec.seed = s;
    }
    if let Some(t) = c.trials {
        ec.trials = t;
    }
    if c.small {
        ec = ec.small();
    }
    ec.validate()?;
    Ok(ec)
}

fn out_path(c: &Common, default: &str) -> PathBuf {
    c.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Psd(c) => {
            let ec = load(&c)?;
            let r = run_psd_experiment(&ec)?;
            let out = out_path(&c, "psd.csv");
            r.write_csv(&out)?;
            println!("occupied bandwidth (-20 dB): {:.6} MHz", r.occupied_bw / 1e6);
            println!("analytic occupied bandwidth: {:.6} MHz", r.analytic_bw / 1e6);
            println!("nominal bandwidth: {:.6} MHz", r.nominal_bw / 1e6);
            println!("in-band deviation: {:.3} dB", r.inband_dev_db);
            println!("wrote {}", out.display());
        }
        Command::Ortho { common, c } => {
            let mut ec = load(&common)?;
            if c.is_some() {
                ec.c = c;
            }
            let r = run_ortho_experiment(&ec)?;
            let out = out_path(&common, "ortho.csv");
            r.grid.write_csv(&out)?;
            let pred = sibling(&out, "predictions");
            r.write_predictions_csv(&pred)?;
            println!("max off-diagonal |I|/T: {:.3e}", r.grid.max_off_diagonal());
            println!("predictor disagreements: {}", r.disagreements().len());
            println!("wrote {} and {}", out.display(), pred.display());
        }
        Command::Nmse { common, sweep } => {
            let mut ec = load(&common)?;
            if let Some(s) = sweep {
                ec.sweep = s;
            }
            let r = run_nmse_sweep(&ec)?;
            let out = out_path(&common, "nmse.csv");
            r.write_csv(&out)?;
            for p in &r.points {
                println!("{} = {}: {:.2} dB (± {:.2})", r.variable, p.value, p.nmse_db, p.stderr_db);
            }
            println!("wrote {}", out.display());
        }
        Command::Iorel(c) => {
            let ec = load(&c)?;
            let r = run_iorel_checks(&ec)?;
            let out = out_path(&c, "iorel.csv");
            r.write_csv(&out)?;
            println!("taps compared: {}, max relative deviation {:.3e}", r.taps_compared, r.tap_max_rel);
            println!("sample-spaced model gap: still {:.3e}, moving {:.3e}", r.gap_still, r.gap_moving);
            println!("dual-path gap: {:.3e}", r.dual_path_gap);
            println!(
                "noise: {} samples, variance/N0 {:.4}, max off-diagonal/N0 {:.4}",
                r.noise.samples, r.noise.diag_ratio, r.noise.max_off_ratio
            );
            println!("wrote {}", out.display());
        }
        Command::Complexity(c) => {
            let ec = load(&c)?;
            let r = complexity_compare(ec.n, ec.n_od)?;
            let out = out_path(&c, "complexity.csv");
            r.write_csv(&out)?;
            println!("AFDM multiplies: {}, ODDM multiplies: {}, ratio {}", r.afdm_mults, r.oddm_mults, r.ratio);
            println!("log-log timing slope: {:.3}", r.slope);
            println!("wrote {}", out.display());
        }
        Command::Selftest { small, only } => {
            let outcomes = match only {
                Some(id) => vec![acceptance::evaluate(id, !small)?],
                None => acceptance::run_all(!small),
            };
            for o in &outcomes {
                println!("{o}");
            }
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
            if failed > 0 {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
