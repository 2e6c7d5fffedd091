use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use oam_qkd::dump::{write_field, write_screen};
use oam_qkd::harness::analysis::{read_report, write_report};
use oam_qkd::harness::campaign::{build_simulator, GeometryContext};
use oam_qkd::harness::{
    analyze, export_csv, run_campaign, validate_suite, with_configured_threads, AnalysisReport, CampaignConfig,
    EnsembleStore, THREADS_ENV,
};

#[derive(Parser)]
#[command(name = "oamqkd", version, about = "Satellite-to-ground OAM QKD channel simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Paper,
    Desk,
}

impl Preset {
    fn config(self) -> CampaignConfig {
        match self {
            Self::Paper => CampaignConfig::paper(),
            Self::Desk => CampaignConfig::desk(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run or analyse a Monte Carlo campaign.
    Campaign {
        #[command(subcommand)]
        action: CampaignAction,
    },
    /// Run the vacuum, MUB, phase-screen and filter checks. Exits nonzero
    /// if any check fails.
    Validate {
        /// Campaign configuration (TOML); defaults to the preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "desk")]
        preset: Preset,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Convert an analysis report to CSV.
    Export {
        #[arg(long)]
        csv: PathBuf,
        /// Analysis report written by `campaign analyze`.
        #[arg(long, default_value = "results.json")]
        results: PathBuf,
    },
    /// Print a configuration template.
    Config {
        #[arg(long, value_enum, default_value = "desk")]
        preset: Preset,
    },
    /// Write debug dumps for one realization.
    Dump {
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        geometry: usize,
        #[arg(long, default_value_t = 0)]
        realization: usize,
        /// Directory receiving `field_l<l>.bin` and `screen_<j>.bin`.
        #[arg(long, default_value = "dump")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum CampaignAction {
    /// Simulate every (geometry, realization) missing from the store.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "ensemble.jsonl")]
        store: PathBuf,
    },
    /// Compute error and key rates from a store.
    Analyze {
        store: PathBuf,
        config: PathBuf,
        /// JSON report path.
        #[arg(long, default_value = "results.json")]
        out: PathBuf,
        /// Optional CSV written alongside the JSON.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>, preset: Preset) -> Result<CampaignConfig> {
    match path {
        Some(p) => CampaignConfig::load(p).with_context(|| format!("reading {}", p.display())),
        None => Ok(preset.config()),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4e}"))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Campaign {
            action: CampaignAction::Run { config, store },
        } => {
            let config = load_config(Some(&config), Preset::Desk)?;
            let summary = with_configured_threads(|| run_campaign(&config, &store))?;
            println!(
                "{}: {} realizations written, {} already present",
                store.display(),
                summary.written,
                summary.skipped
            );
        }
        Command::Campaign {
            action: CampaignAction::Analyze { store, config, out, csv },
        } => {
            let config = load_config(Some(&config), Preset::Desk)?;
            let store = EnsembleStore::open(&store).with_context(|| format!("opening {}", store.display()))?;
            let records = with_configured_threads(|| analyze(&store, &config))?;
            println!(
                "{:>9} {:>6} {:>5} {:>2} {:<14} {:>6} {:>5} {:>4} {:>10} {:>10} {:>10}",
                "H[km]", "theta", "r_a", "d", "subspace", "mis[m]", "inf", "conj", "Q", "T", "K"
            );
            for r in &records {
                println!(
                    "{:>9.1} {:>6.3} {:>5.2} {:>2} {:<14} {:>6.3} {:>5.2} {:>4} {:>10.4e} {:>10.4e} {:>10}",
                    r.satellite_altitude / 1e3,
                    r.zenith_angle,
                    r.aperture_radius,
                    r.d,
                    r.subspace.to_string(),
                    r.misalignment,
                    r.infidelity,
                    if r.conjugated { "on" } else { "off" },
                    r.q,
                    r.t,
                    fmt_opt(r.k)
                );
            }
            write_report(&AnalysisReport { config, records: records.clone() }, &out)?;
            if let Some(csv) = csv {
                export_csv(&records, &csv)?;
            }
        }
        Command::Validate { config, preset, json } => {
            let config = load_config(config.as_deref(), preset)?;
            let report = with_configured_threads(|| validate_suite(&config))?;
            println!("{report}");
            if let Some(path) = json {
                std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
            }
            if !report.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Export { csv, results } => {
            let report = read_report(&results).with_context(|| format!("reading {}", results.display()))?;
            export_csv(&report.records, &csv)?;
            println!("{} rows written to {}", report.records.len(), csv.display());
        }
        Command::Config { preset } => {
            print!("{}", preset.config().to_toml_string());
        }
        Command::Dump {
            config,
            geometry,
            realization,
            out,
        } => {
            let config = load_config(Some(&config), Preset::Desk)?;
            let geometries = config.geometries()?;
            let Some(&geom) = geometries.get(geometry) else {
                bail!("geometry index {geometry} out of range (0..{})", geometries.len());
            };
            std::fs::create_dir_all(&out)?;
            let simulator = build_simulator(&config)?;
            let ctx = GeometryContext::new(&config, &simulator, geometry, geom)?;
            let spec = ctx.spec(realization)?;
            for (j, screen) in simulator.screens(&spec).iter().enumerate() {
                write_screen(BufWriter::new(File::create(out.join(format!("screen_{j}.bin")))?), screen)?;
            }
            let received = simulator.propagate_modes(&oam_qkd::quantum::ALL_MODES, &spec)?;
            for (l, field) in &received {
                let file = BufWriter::new(File::create(out.join(format!("field_l{l}.bin")))?);
                write_field(file, field, geom.path_length(), Some(*l))?;
            }
            println!("{} screens and {} fields written to {}", ctx.partition.len(), received.len(), out.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    log::debug!("thread override variable: {THREADS_ENV}");
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
