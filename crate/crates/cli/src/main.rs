use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pico_cli::commands::{self, default_c_grid};
use pico_cli::{CliError, ConfigLayer, Report, RunConfig};
use pico_core::vectorizer::IdfMode;
use pico_core::{NGramRange, Task};

#[derive(Parser)]
#[command(name = "pico", version, about = "Sentence-level PICO classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Label counts, split sizes and top words per task.
    Stats {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
    },
    /// Train one model per task and evaluate on the test and dev parts.
    Train {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Cross-validate n-gram ranges on identical folds.
    SweepNgram {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated ranges such as `1,2,1-2`.
        #[arg(long, value_delimiter = ',', default_values_t = NGramRange::control_set())]
        ranges: Vec<NGramRange>,
    },
    /// Search the penalty C by dev-part F1.
    SweepC {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated C values (default 0.1 to 3.0 in steps of 0.1).
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
    },
    /// Stratified k-fold cross-validation per task.
    EvalCv {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Score sentences with saved models.
    Predict {
        /// Model artifact; repeat for several tasks.
        #[arg(long = "model", required = true)]
        models: Vec<PathBuf>,
        /// One sentence per line, optionally `pmid<TAB>text`.
        #[arg(long)]
        input: PathBuf,
        /// Output TSV file (standard output if omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Comma-separated subset of P,I,O.
    #[arg(long, value_delimiter = ',')]
    tasks: Option<Vec<Task>>,
    /// `n` or `min-max`, 1 <= min <= max <= 3.
    #[arg(long)]
    ngram: Option<NGramRange>,
    #[arg(long)]
    c_p: Option<f64>,
    #[arg(long)]
    c_i: Option<f64>,
    #[arg(long)]
    c_o: Option<f64>,
    /// Train, test and dev fractions, e.g. `0.8,0.1,0.1`.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    ratios: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Whether to L2-normalize feature vectors.
    #[arg(long)]
    normalize: Option<bool>,
    /// `smoothed` or `unsmoothed`.
    #[arg(long)]
    idf: Option<IdfMode>,
    #[arg(long)]
    min_df: Option<usize>,
    /// Stop-word list, one word per line (built-in English list if omitted).
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Number of cross-validation folds.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig, CliError> {
        let flags = ConfigLayer {
            corpus: self.corpus,
            tasks: self.tasks,
            ngram_range: self.ngram,
            c_p: self.c_p,
            c_i: self.c_i,
            c_o: self.c_o,
            ratios: self.ratios.map(|r| [r[0], r[1], r[2]]),
            seed: self.seed,
            normalize: self.normalize,
            idf: self.idf,
            min_df: self.min_df,
            stopwords: self.stopwords,
            k: self.k,
            tol: self.tol,
            max_epochs: self.max_epochs,
            out: self.out,
        };
        RunConfig::resolve(self.config.as_deref(), flags)
    }
}

fn emit(report: Report, cfg: &RunConfig) -> Result<(), CliError> {
    report.commit(&cfg.out)?;
    print!("{}", report.text());
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Stats { run, top_k } => {
            let cfg = run.resolve()?;
            if top_k == 0 {
                return Err(CliError::Usage("--top-k must be at least 1".into()));
            }
            emit(commands::stats(&cfg, top_k)?, &cfg)
        }
        Command::Train { run } => {
            let cfg = run.resolve()?;
            emit(commands::train(&cfg)?, &cfg)
        }
        Command::SweepNgram { run, ranges } => {
            let cfg = run.resolve()?;
            emit(commands::sweep_ngram_report(&cfg, &ranges)?, &cfg)
        }
        Command::SweepC { run, grid } => {
            let cfg = run.resolve()?;
            let grid = if grid.is_empty() { default_c_grid() } else { grid };
            emit(commands::sweep_c_report(&cfg, &grid)?, &cfg)
        }
        Command::EvalCv { run } => {
            let cfg = run.resolve()?;
            emit(commands::eval_cv(&cfg)?, &cfg)
        }
        Command::Predict {
            models,
            input,
            output,
        } => {
            let tsv = commands::predict(&models, &input)?;
            match output {
                Some(path) => std::fs::write(&path, tsv).map_err(|source| CliError::Output { path, source }),
                None => {
                    print!("{tsv}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let err = CliError::Usage(e.render().to_string().trim().replace('\n', " "));
            eprintln!("{}", err.record());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
