use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ner_core::{render_report, AlignmentApproach, Execution, SplitSpec};
use ner_service::cli::{self, Overrides};
use ner_service::AppState;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Approach {
    /// Continuation pieces carry I- tags.
    All,
    /// Only the first piece is labelled.
    First,
    /// Every piece repeats the word tag.
    AllLiteral,
}

impl From<Approach> for AlignmentApproach {
    fn from(a: Approach) -> Self {
        match a {
            Approach::All => AlignmentApproach::AllSubtokens,
            Approach::First => AlignmentApproach::FirstSubtokenOnly,
            Approach::AllLiteral => AlignmentApproach::AllSubtokensRepeat,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ner", version, about = "Arabic and Arabizi named entity recognition")]
struct Args {
    /// TOML service configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Model id from the configuration.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Sub-token label alignment.
    #[arg(long, global = true, value_enum)]
    approach: Option<Approach>,
    /// Use the local rule table even if the config enables the external service.
    #[arg(long, global = true)]
    no_external_translit: bool,
    /// Run batch work on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tag a text file, one sentence per line, and write CoNLL.
    Tag {
        input: PathBuf,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Input is CoNLL; keep its words and replace the tags.
        #[arg(long)]
        conll: bool,
    },
    /// Score predicted CoNLL against gold CoNLL.
    Eval {
        gold: PathBuf,
        predicted: PathBuf,
        /// Also write key=value metrics to this file.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Shuffle and cut a CoNLL corpus into train, eval and test files.
    Split {
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Train, eval and test percentages.
        #[arg(long, default_value = "80,10,10")]
        ratios: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Run the HTTP service.
    Serve {
        /// Overrides the configured listen address.
        #[arg(long)]
        listen: Option<std::net::SocketAddr>,
    },
}

fn run(args: Args) -> anyhow::Result<()> {
    let overrides = Overrides {
        approach: args.approach.map(Into::into),
        no_external_translit: args.no_external_translit,
    };
    let exec = if args.sequential { Execution::Sequential } else { Execution::default() };
    let config = || cli::load_config(args.config.as_deref(), &overrides);
    match args.command {
        Command::Tag { input, output, conll } => {
            let config = config()?;
            let pipeline = cli::build_pipeline(&config, args.model.as_deref())?;
            let text = if conll {
                cli::cli_tag_conll(&pipeline, &input, exec)?
            } else {
                cli::cli_tag(&pipeline, &input, exec)?
            };
            match output {
                Some(path) => std::fs::write(&path, text)?,
                None => std::io::stdout().lock().write_all(text.as_bytes())?,
            }
        }
        Command::Eval { gold, predicted, export } => {
            let report = cli::cli_eval(&gold, &predicted, exec)?;
            print!("{}", render_report(&report));
            if let Some(path) = export {
                std::fs::write(path, report.to_key_values())?;
            }
        }
        Command::Split {
            input,
            out_dir,
            ratios,
            seed,
        } => {
            let (train, eval, test) = cli::parse_ratios(&ratios)?;
            let spec = SplitSpec::from_percent(train, eval, test, seed)?;
            print!("{}", cli::cli_split(&input, &out_dir, &spec)?);
        }
        Command::Serve { listen } => {
            let mut config = config()?;
            if let Some(listen) = listen {
                config.listen = listen;
            }
            let state = AppState::new(config)?;
            tokio::runtime::Runtime::new()?.block_on(ner_service::api::serve(state))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
