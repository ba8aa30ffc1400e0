use clap::{Args, Parser, Subcommand};
use spinpair::pipeline_io::{
    emit_reference_tables, run_analyze, run_calibrate, run_generate, run_pipeline, Analysis, ConfigError,
    PipelineError, RunConfig, RunStatus,
};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "spinpair", version, about = "Singlet proton-pair polarization correlation simulator")]
struct Cli {
    /// Worker threads (default: all cores). Does not change any output.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat TOML run configuration.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set n_events=1000000`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, ConfigError> {
        match &self.config {
            Some(path) => RunConfig::from_path(path, &self.overrides),
            None => RunConfig::from_toml_str("", &self.overrides),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate an event file.
    Generate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Event file to write.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Analyze an event file.
    Analyze {
        #[command(flatten)]
        config: ConfigArgs,
        /// Event file to read.
        #[arg(long, short)]
        events: PathBuf,
        /// Directory for results.json and CSV tables.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Generate and analyze in one pass.
    Pipeline {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out_dir: PathBuf,
        /// Also write the generated events here.
        #[arg(long)]
        events_out: Option<PathBuf>,
    },
    /// Estimate the analyzing power from an event file.
    Calibrate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, short)]
        events: PathBuf,
    },
    /// Write the reference Bell and Wigner case tables.
    Tables {
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn open_events(path: &Path) -> Result<BufReader<File>, PipelineError> {
    Ok(BufReader::new(File::open(path)?))
}

fn report_status(analysis: &Analysis) -> ExitCode {
    let d = &analysis.document;
    match d.status {
        RunStatus::Ok => {
            eprintln!(
                "analyzed {} pairs of {} events; A = {}",
                d.n_analyzed,
                d.n_input,
                d.analyzing_power.value.map_or("n/a".into(), |a| format!("{a:.4}"))
            );
            ExitCode::SUCCESS
        }
        RunStatus::EmptySample => {
            eprintln!("empty sample: no pairs survived selection");
            ExitCode::from(4)
        }
        RunStatus::CalibrationFailed => {
            eprintln!("analyzing-power calibration failed: azimuthal moment is not negative");
            ExitCode::from(3)
        }
        RunStatus::NonPositiveWeight => {
            eprintln!("random subtraction left no positive net weight");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, PipelineError> {
    match cli.command {
        Command::Generate { config, out } => {
            let cfg = config.load()?;
            let report = run_generate(&cfg, BufWriter::new(File::create(&out)?))?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze { config, events, out_dir } => {
            let cfg = config.load()?;
            let analysis = run_analyze(open_events(&events)?, &cfg)?;
            analysis.write_outputs(&out_dir)?;
            Ok(report_status(&analysis))
        }
        Command::Pipeline {
            config,
            out_dir,
            events_out,
        } => {
            let cfg = config.load()?;
            let writer = match &events_out {
                Some(p) => Some(BufWriter::new(File::create(p)?)),
                None => None,
            };
            let (report, analysis) = run_pipeline(&cfg, writer)?;
            analysis.write_outputs(&out_dir)?;
            fs::write(
                out_dir.join("generation.json"),
                serde_json::to_string_pretty(&report)? + "\n",
            )?;
            Ok(report_status(&analysis))
        }
        Command::Calibrate { config, events } => {
            let cfg = config.load()?;
            let analysis = run_calibrate(open_events(&events)?, &cfg)?;
            let ap = &analysis.document.analyzing_power;
            println!("{}", serde_json::to_string_pretty(ap)?);
            Ok(report_status(&analysis))
        }
        Command::Tables { out_dir } => {
            let (bell, wigner) = emit_reference_tables();
            fs::create_dir_all(&out_dir)?;
            fs::write(out_dir.join("bell_reference.csv"), bell)?;
            fs::write(out_dir.join("wigner_reference.csv"), wigner)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match cli.workers {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(code) => {
            let _ = std::io::stdout().flush();
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
