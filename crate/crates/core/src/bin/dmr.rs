use clap::{Parser, Subcommand, ValueEnum};
use dmr::encoder::{fit, save_checkpoint, EncoderError};
use dmr::harness::{
    build_embedder, build_training_set, evaluate, ingest, report_csv, sweep, sweep_csv, sweep_table, synth,
    turn_state, write_corpus, Demonstration, EvalConfig, HarnessError, Predictions, SnapshotCache, Split,
    SweepAxes,
};
use dmr::ranking::rank_turn;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Stdout printing that stops quietly when the reader has gone away.
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        if let Err(e) = write!(std::io::stdout().lock(), $($t)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
        }
    }};
}

macro_rules! outln {
    ($($t:tt)*) => {{
        out!($($t)*);
        out!("\n");
    }};
}

#[derive(Parser)]
#[command(name = "dmr", version, about = "Rank DOM candidates for conversational web agents and evaluate rankers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a corpus and print a summary.
    Ingest { corpus: PathBuf },
    /// Rank the candidates of one turn and print the result.
    Rank {
        corpus: PathBuf,
        /// `<demo id>:<turn index>`
        #[arg(long)]
        turn: String,
        #[arg(long)]
        ckpt: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Fit the hash encoder on the corpus's training demos.
    Train {
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Evaluate a ranker and write a JSON report.
    Eval {
        corpus: PathBuf,
        #[arg(long)]
        ckpt: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-split CSV next to the report.
        #[arg(long)]
        csv: bool,
        /// JSONL of predicted actions to score.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Evaluate every cell of a history x token-limit grid.
    Sweep {
        corpus: PathBuf,
        #[arg(long)]
        axes: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        ckpt: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        csv: bool,
    },
    /// Write a generated corpus.
    Synth {
        #[arg(value_enum)]
        kind: SynthKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Turns (marker) or demos (history).
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Marker,
    History,
    Mixed,
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let validation = e.is_validation()
            || matches!(
                e,
                HarnessError::Encoder(EncoderError::CheckpointVersion { .. } | EncoderError::Checkpoint(_))
            );
        if validation {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<EncoderError> for Failure {
    fn from(e: EncoderError) -> Self {
        HarnessError::from(e).into()
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn load_config(path: Option<&Path>) -> Result<EvalConfig, Failure> {
    Ok(match path {
        Some(p) => EvalConfig::load(p)?,
        None => EvalConfig::default(),
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Ingest { corpus } => {
            let demos = ingest(&corpus)?;
            let mut per_split: BTreeMap<String, usize> = BTreeMap::new();
            for d in &demos {
                for s in &d.splits {
                    *per_split.entry(s.to_string()).or_default() += 1;
                }
            }
            let summary = serde_json::json!({
                "demos": demos.len(),
                "turns": demos.iter().map(|d| d.turns.len()).sum::<usize>(),
                "evaluable_turns": demos.iter().map(|d| d.evaluable_positions().count()).sum::<usize>(),
                "demos_per_split": per_split,
            });
            out!("{}", to_json(&summary));
        }
        Command::Rank { corpus, turn, ckpt, config } => {
            let cfg = load_config(config.as_deref())?;
            let (demo_id, index) = turn
                .rsplit_once(':')
                .and_then(|(d, i)| Some((d, i.parse::<u64>().ok()?)))
                .ok_or_else(|| Failure::Validation(format!("--turn must look like <demo>:<index>, got {turn:?}")))?;
            let demos = ingest(&corpus)?;
            let unknown = || HarnessError::UnknownTurn {
                demo: demo_id.to_owned(),
                turn: index,
            };
            let demo = demos.iter().find(|d| d.id == demo_id).ok_or_else(unknown)?;
            let pos = demo.turns.iter().position(|t| t.index == index).ok_or_else(unknown)?;
            let embedder = build_embedder(&cfg, ckpt.as_deref())?;
            let mut cache = SnapshotCache::new(demo, &cfg.uid_attr);
            let state = turn_state(demo, pos, &cfg, &mut cache)?;
            let result = rank_turn(&state, embedder.as_ref(), cfg.top_k, &cfg.query).map_err(HarnessError::from)?;
            out!("{}", to_json(&result));
        }
        Command::Train { corpus, out, config } => {
            let cfg = load_config(config.as_deref())?;
            let demos = ingest(&corpus)?;
            let examples = build_training_set(&demos, &cfg)?;
            if examples.is_empty() {
                return Err(Failure::Validation("corpus has no evaluable training turns".into()));
            }
            let outcome = fit(&examples, &cfg.encoder.hash, &cfg.train.fit)?;
            save_checkpoint(&outcome.model, &out)?;
            out!(
                "{}",
                to_json(&serde_json::json!({"examples": examples.len(), "loss_curve": outcome.loss_curve}))
            );
        }
        Command::Eval {
            corpus,
            ckpt,
            config,
            out,
            csv,
            predictions,
        } => {
            let cfg = load_config(config.as_deref())?;
            let demos = ingest(&corpus)?;
            let preds = predictions.as_deref().map(Predictions::load).transpose()?;
            let embedder = build_embedder(&cfg, ckpt.as_deref())?;
            let report = evaluate(&demos, embedder.as_ref(), &cfg, preds.as_ref())?;
            write_file(&out, &to_json(&report))?;
            if csv {
                write_file(&out.with_extension("csv"), &report_csv(&report))?;
            }
        }
        Command::Sweep {
            corpus,
            axes,
            out,
            ckpt,
            config,
            csv,
        } => {
            let cfg = load_config(config.as_deref())?;
            let axes = SweepAxes::load(&axes)?;
            let demos = ingest(&corpus)?;
            let embedder = build_embedder(&cfg, ckpt.as_deref())?;
            let reports = sweep(&demos, embedder.as_ref(), &cfg, &axes)?;
            write_file(&out.join("sweep.json"), &to_json(&reports))?;
            for r in &reports {
                let c = &r.config_echo;
                let stem = format!("h{}_l{}", c.history_turns, c.candidate_token_limit);
                write_file(&out.join(format!("{stem}.json")), &to_json(r))?;
                if csv {
                    write_file(&out.join(format!("{stem}.csv")), &report_csv(r))?;
                }
            }
            if csv {
                write_file(&out.join("sweep.csv"), &sweep_csv(&reports))?;
            }
            for k in cfg.sorted_ks() {
                outln!("{}", sweep_table(&reports, k));
            }
        }
        Command::Synth { kind, out, seed, n } => {
            let demos: Vec<Demonstration> = match kind {
                SynthKind::Marker => synth::marker_corpus(n.unwrap_or(200), seed),
                SynthKind::History => synth::history_corpus(n.unwrap_or(300), seed),
                SynthKind::Mixed => synth::mixed_corpus(seed),
            };
            let path = write_corpus(&demos, &out)?;
            let test = demos.iter().filter(|d| !d.splits.contains(&Split::Train)).count();
            outln!("{} ({} demos, {} held out)", path.display(), demos.len(), test);
        }
    }
    Ok(())
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
