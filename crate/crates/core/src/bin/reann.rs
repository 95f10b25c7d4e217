use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use reann_core::dataset::{self, SchemaId};
use reann_core::discretizer::DiscretizedSnapshot;
use reann_core::network::NetworkSnapshot;
use reann_core::pipeline::{self, Extracted, PipelineReport, RunConfig};
use reann_core::rules::{self, RuleSetDocument, RuleVocabulary};
use reann_core::{Error, Result};

/// Grow, prune and discretize a feedforward network, then extract rules from it.
#[derive(Parser)]
#[command(name = "reann", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline for every seed.
    Run(Common),
    /// Run one phase from a serialized earlier artifact.
    Phase {
        #[arg(value_enum)]
        phase: Phase,
        /// Input artifact: a network snapshot for `prune`/`discretize`, a
        /// discretized snapshot for `extract`. Unused by `grow`.
        #[arg(long)]
        from: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Apply a serialized rule set to a dataset split.
    Eval {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        split: Split,
        #[command(flatten)]
        common: Common,
    },
    /// Re-render a structured report.
    Report {
        #[arg(long)]
        from: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

#[derive(Args)]
struct Common {
    /// breast_cancer, diabetes or lenses.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    data_path: Option<PathBuf>,
    /// TOML file with any RunConfig fields; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated seeds or ranges, e.g. `0-9` or `1,4,7`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Phase {
    Grow,
    Prune,
    Discretize,
    Extract,
}

#[derive(Clone, Copy, ValueEnum)]
enum Split {
    Train,
    Test,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || Error::Usage(format!("bad seed list entry `{part}`"));
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().map_err(|_| bad())?),
        }
    }
    if seeds.is_empty() {
        return Err(Error::Usage("empty seed list".into()));
    }
    Ok(seeds)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn config(common: &Common) -> Result<RunConfig> {
    let id = common.dataset.as_deref().map(str::parse::<SchemaId>).transpose()?;
    let mut cfg = match (&common.config, id) {
        (Some(path), id) => RunConfig::from_toml(&read(path)?, id)?,
        (None, Some(id)) => RunConfig::for_dataset(id),
        (None, None) => return Err(Error::Usage("either --dataset or --config is required".into())),
    };
    if let Some(p) = &common.data_path {
        cfg.data_path = Some(p.clone());
    }
    if let Some(s) = &common.seeds {
        cfg.seeds = parse_seeds(s)?;
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn phase(which: Phase, from: Option<&Path>, common: &Common) -> Result<()> {
    let cfg = config(common)?;
    let seed = cfg.seeds[0];
    let cfg = cfg.seeded(seed);
    let (train, _) = pipeline::load_splits(&cfg)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let input = || from.ok_or_else(|| Error::Usage("--from is required for this phase".into()));
    match which {
        Phase::Grow => {
            let grown = pipeline::phase_grow(&cfg, &train)?;
            let snap = NetworkSnapshot::new(grown.network, cfg.growth.train);
            write(&out.join("grown.json"), &snap.to_json()?)?;
        }
        Phase::Prune => {
            let snap = NetworkSnapshot::from_json(&read(input()?)?)?;
            let (net, trace) = pipeline::phase_prune(&cfg, &snap.network, &train)?;
            write(
                &out.join("pruned.json"),
                &NetworkSnapshot::new(net, cfg.prune.retrain).to_json()?,
            )?;
            write(&out.join("prune_trace.json"), &serde_json::to_string_pretty(&trace)?)?;
        }
        Phase::Discretize => {
            let snap = NetworkSnapshot::from_json(&read(input()?)?)?;
            let dnet = pipeline::phase_discretize(&cfg, &snap.network, &train)?;
            write(&out.join("discretized.json"), &DiscretizedSnapshot::new(dnet).to_json()?)?;
        }
        Phase::Extract => {
            let snap = DiscretizedSnapshot::from_json(&read(input()?)?)?;
            let extracted: Extracted = pipeline::phase_extract(&cfg, &snap.discretized, &train)?;
            let vocab = RuleVocabulary::from_dataset(&train);
            write(&out.join("extraction.json"), &extracted.to_json()?)?;
            write(
                &out.join("rules.json"),
                &RuleSetDocument::new(&extracted.rules, vocab.clone()).to_json()?,
            )?;
            let text = rules::render_text(&extracted.rules, &vocab);
            write(&out.join("rules.txt"), &text)?;
            print!("{text}");
        }
    }
    Ok(())
}

fn eval(rules_path: &Path, split: Split, common: &Common) -> Result<()> {
    let cfg = config(common)?;
    let doc = RuleSetDocument::from_json(&read(rules_path)?)?;
    let data = dataset::load_uci(cfg.data_path(), cfg.dataset)?;
    let (train, test) = dataset::split(&data, cfg.split_spec())?;
    let target = match split {
        Split::Train => train,
        Split::Test => test,
        Split::All => data,
    };
    let rs = doc.rule_set();
    let ev = rules::evaluate(&rs, &target);
    print!("{}", rules::render_text(&rs, &doc.vocabulary));
    println!("accuracy: {:.2}% on {} patterns", 100.0 * ev.accuracy, target.len());
    for (k, c) in ev.coverage.iter().enumerate() {
        println!("rule {} covers {c}", k + 1);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(common) => config(common).and_then(|cfg| pipeline::run(&cfg)).map(|report| {
            print!("{}", report.render_text());
            !report.records.is_empty()
        }),
        Command::Phase { phase: p, from, common } => phase(*p, from.as_deref(), common).map(|_| true),
        Command::Eval { rules, split, common } => eval(rules, *split, common).map(|_| true),
        Command::Report { from, format } => read(from)
            .and_then(|t| PipelineReport::from_json(&t))
            .and_then(|r| {
                match format {
                    Format::Text => print!("{}", r.render_text()),
                    Format::Json => println!("{}", r.to_json()?),
                }
                Ok(true)
            }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: every seed failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("0-3").unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_seeds("1, 4,7").unwrap(), vec![1, 4, 7]);
        assert!(parse_seeds("3-1").is_err());
        assert!(parse_seeds("x").is_err());
    }
}
