use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hrushovski::amalgam::GenericApproximation;
use hrushovski::class::ClassSpec;
use hrushovski::error::Result;
use hrushovski::measure::{parse_q, SampleMode};
use hrushovski_cli::artifacts::ArtifactStore;
use hrushovski_cli::commands::{self, Binding, Host, IndepRequirement};
use hrushovski_cli::{run_pipeline, Exit, Format, ParamSelector, Report, RunConfig};

#[derive(Parser)]
#[command(name = "hrush", version, about = "Build, verify and certify finite approximations of generic graphs")]
struct Cli {
    /// Report format on stdout and in the output directory.
    #[arg(long, value_enum, global = true, default_value = "text")]
    format: FormatArg,
    /// Output directory for artifacts and reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Class file; the default is the girth-six preset.
    #[arg(long, global = true)]
    class: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Records,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline described by a config file.
    Run { config: PathBuf },
    #[command(subcommand)]
    Class(ClassCmd),
    #[command(subcommand)]
    Generic(GenericCmd),
    #[command(subcommand)]
    Props(PropsCmd),
    /// Weak algebraic and dimension independence of two vertices.
    Indep {
        a: usize,
        b: usize,
        /// Fail unless the pair is weakly algebraically independent.
        #[arg(long, conflicts_with = "dim")]
        weak: bool,
        /// Fail unless the pair is independent in the dimension sense.
        #[arg(long)]
        dim: bool,
        #[command(flatten)]
        host: HostArgs,
    },
    #[command(subcommand)]
    Measure(MeasureCmd),
}

#[derive(Subcommand)]
enum ClassCmd {
    /// Membership of a graph file in the class.
    Check { graph: PathBuf },
}

#[derive(Subcommand)]
enum GenericCmd {
    /// Build an approximation of the generic structure.
    Build {
        #[arg(long, default_value_t = 40)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum PropsCmd {
    /// Check the construction properties of an approximation file, or of a fresh build.
    Verify {
        approximation: Option<PathBuf>,
        #[arg(long, default_value_t = 40)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum MeasureCmd {
    /// Derive that every invariant measure gives the formula measure zero.
    CertifyZero {
        formula: String,
        /// Further fragment formulas over the same parameters.
        #[arg(long = "with")]
        with: Vec<String>,
        /// Vertex for the parameter `a`.
        #[arg(long, requires = "pb")]
        pa: Option<usize>,
        /// Vertex for the parameter `b`.
        #[arg(long, requires = "pa")]
        pb: Option<usize>,
        /// Choose `a`, `b` as the least adjacent or distance-2 pair.
        #[arg(long, default_value = "adjacent", conflicts_with = "pa")]
        params: String,
        #[command(flatten)]
        host: HostArgs,
    },
    /// Ergodic decomposition of a finite action file.
    Decompose { action: PathBuf },
    /// Product rule for edge conjunctions on the random graph.
    ErCheck {
        #[arg(long, default_value = "1/2")]
        p: String,
        #[arg(long, default_value = "E(x,a)")]
        phi: String,
        #[arg(long, default_value = "E(x,b)")]
        psi: String,
        /// Number of sampled draws; exact arithmetic only when absent.
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct HostArgs {
    /// Graph or approximation file; otherwise an approximation is built.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 40)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl HostArgs {
    fn host(&self) -> Host {
        match &self.graph {
            Some(p) => Host::File(p.clone()),
            None => Host::Build {
                budget: self.budget,
                seed: self.seed,
            },
        }
    }
}

fn load_class(path: Option<&Path>) -> Result<ClassSpec> {
    match path {
        Some(p) => ClassSpec::parse(&commands::read(p)?, p.parent()),
        None => Ok(ClassSpec::p0()),
    }
}

fn execute(cli: &Cli, format: Format) -> Result<(String, Exit)> {
    let out_dir = |fallback: Option<&Path>| -> PathBuf {
        cli.out.clone().or_else(|| fallback.map(Path::to_path_buf)).unwrap_or_else(|| PathBuf::from("hrush-out"))
    };
    if let Command::Run { config } = &cli.command {
        let config = RunConfig::load(config)?;
        let out = out_dir(config.output.as_deref());
        let result = run_pipeline(&config, &out, format)?;
        let mut text = result.rendered;
        text.push_str(&format!("report file {}\n", out.join(&result.report_name).display()));
        return Ok((text, Exit::of_verdict(result.report.verdict())));
    }

    let class = load_class(cli.class.as_deref())?;
    let mut store = ArtifactStore::open(&out_dir(None))?;
    let report: Report = match &cli.command {
        Command::Run { .. } => unreachable!("handled above"),
        Command::Class(ClassCmd::Check { graph }) => commands::class_check(&class, graph, &mut store)?,
        Command::Generic(GenericCmd::Build { budget, seed }) => commands::generic_build(&class, *budget, *seed, &mut store)?,
        Command::Props(PropsCmd::Verify { approximation, budget, seed }) => match approximation {
            Some(p) => {
                let approx = GenericApproximation::parse(&commands::read(p)?, &class)?;
                commands::props_verify(&class, &approx, &p.display().to_string(), &mut store)?
            }
            None => {
                if *budget == 0 {
                    return Err(hrushovski::error::Error::InvalidInput("budget must be at least 1".into()));
                }
                let approx = hrushovski::amalgam::build_generic(&class, *budget, *seed)?;
                commands::props_verify(&class, &approx, &format!("build budget {budget} seed {seed}"), &mut store)?
            }
        },
        Command::Indep { a, b, weak, dim, host } => {
            let need = match (weak, dim) {
                (true, _) => IndepRequirement::Weak,
                (_, true) => IndepRequirement::Dim,
                _ => IndepRequirement::None,
            };
            commands::indep(&class, &host.host(), *a, *b, need, &mut store)?
        }
        Command::Measure(MeasureCmd::CertifyZero {
            formula,
            with,
            pa,
            pb,
            params,
            host,
        }) => {
            let binding = match (pa, pb) {
                (Some(a), Some(b)) => Binding::Vertices(*a, *b),
                _ => Binding::Select(
                    params
                        .parse::<ParamSelector>()
                        .map_err(hrushovski::error::Error::InvalidInput)?,
                ),
            };
            commands::certify_zero(&class, &host.host(), formula, with, binding, &mut store)?
        }
        Command::Measure(MeasureCmd::Decompose { action }) => commands::decompose(action, &mut store)?,
        Command::Measure(MeasureCmd::ErCheck { p, phi, psi, sample, seed }) => {
            let mode = match sample {
                Some(draws) => SampleMode::Sample { draws: *draws, seed: *seed },
                None => SampleMode::Exact,
            };
            commands::er_check(&parse_q(p)?, phi, psi, mode)?
        }
    };
    let rendered = report.render(format);
    let ext = match format {
        Format::Text => "txt",
        Format::Records => "records",
    };
    let name = store.put("report", ext, &rendered)?;
    let text = format!("{rendered}report file {}\n", store.dir().join(name).display());
    Ok((text, Exit::of_verdict(report.verdict())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = match cli.format {
        FormatArg::Text => Format::Text,
        FormatArg::Records => Format::Records,
    };
    match execute(&cli, format) {
        Ok((text, exit)) => {
            print!("{text}");
            ExitCode::from(exit as u8)
        }
        Err(e) => {
            eprintln!("hrush: {e}");
            ExitCode::from(Exit::of_error(&e) as u8)
        }
    }
}
