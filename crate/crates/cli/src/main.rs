use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use tlexplain_core::pipeline::{EvidenceKind, KbSource, Pipeline, PipelineConfig};
use tlexplain_core::report::{ReportQuery, TSV_HEADER};
use tlexplain_core::{selftest, Error};

#[derive(Parser, Debug)]
#[command(
    name = "tlexplain",
    version,
    about = "Explains transferability between ontology-described learning domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Materialize the entailment closure of every sample.
    Materialize,
    /// Mine frequent and effective entailments and root individuals.
    MineRoots,
    /// Import consistent external knowledge for root individuals.
    ImportExternal,
    /// Measure feature transferability by training or from an AUC table.
    Fti,
    /// Infer explanatory evidence.
    Explain {
        /// Evidence kinds: general, narrator, context. Defaults to all.
        #[arg(long = "kind", value_parser = parse_kind)]
        kinds: Vec<EvidenceKind>,
        /// Print every evaluated context as a JSON line.
        #[arg(long)]
        stream: bool,
    },
    /// Render the explanation report from the evidence tables.
    Report {
        #[arg(long = "kind", value_parser = parse_kind)]
        kinds: Vec<EvidenceKind>,
        /// Sentences per transfer and kind; 0 keeps all.
        #[arg(long, default_value_t = 5)]
        top_k: usize,
        /// Restricts the report to SOURCE:TARGET transfers.
        #[arg(long = "transfer", value_parser = parse_transfer)]
        transfers: Vec<(String, String)>,
        #[arg(long)]
        json: bool,
    },
    /// Check every fast path against its brute-force oracle.
    Selftest {
        #[arg(long, default_value_t = 200)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Settings shared by all stages. Unset flags fall back to the config file,
/// then to built-in defaults.
#[derive(Args, Debug, Default)]
struct Options {
    /// Flat `key = value` file using the long flag names as keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Knowledge base TSV file, or `none`.
    #[arg(long, global = true)]
    kb: Option<String>,
    /// Remote knowledge base endpoint; overrides --kb.
    #[arg(long, global = true)]
    kb_endpoint: Option<String>,
    #[arg(long, global = true)]
    kb_label_query: Option<String>,
    #[arg(long, global = true)]
    kb_describe_query: Option<String>,
    #[arg(long, global = true)]
    mapping: Option<PathBuf>,
    #[arg(long, global = true)]
    constraints: Option<PathBuf>,
    /// Check import candidates against this many sampled LSOs only.
    #[arg(long, global = true)]
    consistency_sample: Option<usize>,
    #[arg(long, global = true)]
    sigma: Option<f64>,
    #[arg(long, global = true)]
    kappa: Option<usize>,
    #[arg(long, global = true)]
    tau: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    ensemble: Option<usize>,
    #[arg(long, global = true)]
    hidden: Option<usize>,
    #[arg(long, global = true)]
    learning_rate: Option<f64>,
    #[arg(long, global = true)]
    omega1: Option<f64>,
    #[arg(long, global = true)]
    omega2: Option<f64>,
    /// Read AUCs from `source,target,auc_base,auc_hard,auc_soft` rows instead of training.
    #[arg(long, global = true)]
    auc_csv: Option<PathBuf>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    max_dim: Option<usize>,
    /// Disable early stopping in the context search.
    #[arg(long, global = true)]
    no_early_stop: bool,
}

fn parse_kind(s: &str) -> Result<EvidenceKind, String> {
    EvidenceKind::parse(s).ok_or_else(|| format!("unknown evidence kind `{s}`; use general, narrator or context"))
}

fn parse_transfer(s: &str) -> Result<(String, String), String> {
    s.split_once(':')
        .filter(|(a, b)| !a.is_empty() && !b.is_empty())
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .ok_or_else(|| format!("expected SOURCE:TARGET, got `{s}`"))
}

/// A failure caused by the invocation rather than the data.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn read_config(path: &Path) -> anyhow::Result<BTreeMap<String, String>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Usage(format!("{}:{}: expected `key = value`", path.display(), i + 1)))?;
        out.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(out)
}

struct Settings {
    file: BTreeMap<String, String>,
}

impl Settings {
    fn get<T: FromStr>(&mut self, key: &str, flag: Option<T>) -> anyhow::Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        let from_file = self.file.remove(key);
        if flag.is_some() {
            return Ok(flag);
        }
        from_file
            .map(|v| {
                v.parse()
                    .map_err(|e| Usage(format!("config key `{key}`: cannot parse `{v}`: {e}")).into())
            })
            .transpose()
    }
}

fn build_config(o: Options) -> anyhow::Result<PipelineConfig> {
    let file = match &o.config {
        Some(p) => read_config(p)?,
        None => BTreeMap::new(),
    };
    let mut s = Settings { file };
    let corpus = s
        .get("corpus", o.corpus)?
        .unwrap_or_else(|| PathBuf::from("corpus/mini-flights"));
    let out = s.get("out", o.out)?.unwrap_or_else(|| PathBuf::from("out"));
    let mut cfg = PipelineConfig::new(corpus, out);

    let endpoint = s.get("kb-endpoint", o.kb_endpoint)?;
    let label = s.get("kb-label-query", o.kb_label_query)?;
    let describe = s.get("kb-describe-query", o.kb_describe_query)?;
    let kb: Option<String> = s.get("kb", o.kb)?;
    cfg.kb = match (endpoint, kb) {
        (Some(endpoint), _) => KbSource::Remote {
            endpoint,
            label_query: label.ok_or_else(|| Usage("--kb-endpoint needs --kb-label-query".into()))?,
            describe_query: describe.ok_or_else(|| Usage("--kb-endpoint needs --kb-describe-query".into()))?,
        },
        (None, Some(k)) if k == "none" => KbSource::None,
        (None, Some(k)) => KbSource::File(k.into()),
        (None, None) => KbSource::Auto,
    };
    cfg.mapping = s.get("mapping", o.mapping)?;
    cfg.constraints = s.get("constraints", o.constraints)?;
    cfg.import.consistency_sample = s.get("consistency-sample", o.consistency_sample)?;

    macro_rules! set {
        ($key:literal, $flag:expr, $field:expr) => {
            if let Some(v) = s.get($key, $flag)? {
                $field = v;
            }
        };
    }
    set!("sigma", o.sigma, cfg.mining.sigma);
    set!("kappa", o.kappa, cfg.mining.kappa);
    set!("tau", o.tau, cfg.mining.tau);
    set!("seed", o.seed, cfg.train.seed);
    set!("epochs", o.epochs, cfg.train.epochs);
    set!("ensemble", o.ensemble, cfg.train.ensemble);
    set!("hidden", o.hidden, cfg.train.hidden);
    set!("learning-rate", o.learning_rate, cfg.train.learning_rate);
    set!("omega1", o.omega1, cfg.train.omega1);
    set!("omega2", o.omega2, cfg.train.omega2);
    set!("epsilon", o.epsilon, cfg.search.params.epsilon);
    set!("alpha", o.alpha, cfg.search.params.alpha);
    set!("max-dim", o.max_dim, cfg.search.max_dim);
    cfg.import.seed = cfg.train.seed;
    cfg.auc_csv = s.get("auc-csv", o.auc_csv)?;
    let no_early_stop: Option<bool> = s.get("no-early-stop", o.no_early_stop.then_some(true))?;
    cfg.search.early_stop = !no_early_stop.unwrap_or(false);

    if let Some(k) = s.file.keys().next() {
        bail!(Usage(format!("unknown config key `{k}`")));
    }
    cfg.mining.validate().map_err(|e| Usage(e.to_string()))?;
    cfg.search.validate().map_err(|e| Usage(e.to_string()))?;
    Ok(cfg)
}

fn kinds_or_all(kinds: Vec<EvidenceKind>) -> Vec<EvidenceKind> {
    if kinds.is_empty() {
        EvidenceKind::ALL.to_vec()
    } else {
        let mut k = kinds;
        k.sort();
        k.dedup();
        k
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    if let Command::Selftest { cases, seed } = cli.command {
        let checks = selftest::run(seed, cases);
        for c in &checks {
            println!("{}\t{}\t{}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        return Ok(checks.iter().all(|c| c.passed));
    }
    let cfg = build_config(cli.opts)?;
    let p = Pipeline::new(cfg);
    match cli.command {
        Command::Materialize => {
            for d in p.materialize()? {
                println!(
                    "{}\t{} samples\t{} inconsistent\t{} atoms",
                    d.id, d.samples, d.inconsistent, d.atoms
                );
            }
        }
        Command::MineRoots => {
            for (id, r) in p.mine_roots()? {
                println!(
                    "{id}\t{} frequent\t{} effective\t{} roots\t{} individuals",
                    r.frequent.len(),
                    r.effective_subsets.len(),
                    r.root_entailments.len(),
                    r.root_individuals.len()
                );
            }
        }
        Command::ImportExternal => {
            for (id, ext) in p.import_external()? {
                println!("{id}\t{} external axioms", ext.len());
            }
        }
        Command::Fti => {
            let m = p.fti()?;
            println!("{} transfers over {} domains", m.len(), m.domains().len());
        }
        Command::Explain { kinds, stream } => {
            let kinds = kinds_or_all(kinds);
            let summary = p.explain(&kinds)?;
            for k in &kinds {
                if *k == EvidenceKind::Context {
                    continue;
                }
                println!("{TSV_HEADER}");
                for r in p.load_evidence(&[*k])? {
                    println!(
                        "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                        k.name(),
                        r.evidence,
                        r.gamma,
                        r.rho,
                        r.n,
                        r.valid,
                        r.reason.map_or("", |r| r.code())
                    );
                }
            }
            if stream && kinds.contains(&EvidenceKind::Context) {
                let path = p.cfg.out.join("evidence/context.jsonl");
                print!(
                    "{}",
                    std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?
                );
            }
            for (k, (total, valid)) in &summary.counts {
                eprintln!("{k}: {total} evaluated, {valid} valid");
            }
            if let Some(s) = summary.search {
                eprintln!(
                    "context search: {} visited, {} early-stopped, {} fast-extended, valid by dimension {:?}",
                    s.visited, s.early_stopped, s.fast_extended, s.valid_by_dim
                );
            }
        }
        Command::Report {
            kinds,
            top_k,
            transfers,
            json,
        } => {
            let query = ReportQuery {
                kinds: kinds_or_all(kinds).iter().map(|k| k.name().to_string()).collect(),
                top_k: (top_k > 0).then_some(top_k),
                transfers: (!transfers.is_empty()).then_some(transfers),
            };
            let report = p.report(&query)?;
            if json {
                println!("{}", report.to_json()?);
            } else {
                print!("{}", report.to_text());
            }
        }
        Command::Selftest { .. } => unreachable!(),
    }
    Ok(true)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() || matches!(e.downcast_ref::<Error>(), Some(Error::InvalidParameter(_))) {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {}", one_line(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

fn one_line(e: &anyhow::Error) -> String {
    e.chain().map(|c| c.to_string()).collect::<Vec<_>>().join(": ")
}
