//! Resumable pipeline stages over an output directory of plain artifacts.
//!
//! ```text
//! closures/<domain>.txt        sorted local closure atoms
//! closures/summary.tsv         samples, inconsistent samples and atoms per domain
//! roots/<domain>.tsv           frequent, effective, root atoms and individuals
//! external/<domain>.abox       accepted external axioms
//! external/<domain>.audit.tsv  per-individual import decisions
//! external/summary.tsv         axioms, introduced names, sampling flag
//! fti.csv                      source,target,auc_base,auc_hard,auc_soft
//! evidence/<kind>.tsv          evidence tables sorted by |gamma|
//! evidence/context.jsonl       one line per evaluated cluster set
//! evidence/search-stats.json   context search counters
//! report.txt, report.json      explanation report
//! ```
//!
//! Every file is a function of the corpus and the configuration, so deleting
//! downstream artifacts and rerunning a stage reproduces them exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::domain::{load_corpus, Corpus};
use crate::error::{Error, Result};
use crate::evidence::{
    correlative_reason, general_factors, narrators, Evidence, EvidenceParams, EvidenceResult, EvidenceSpace,
};
use crate::kb::{import_external, parse_mapping, FileKb, ImportOptions, KbAdapter, RemoteKb, VocabularyMapping};
use crate::mining::{mine_roots, MiningParams, RootSet};
use crate::ontology::{parse_ontology, ABoxAxiom, TBoxAxiom};
use crate::report::{build_report, read_evidence_tsv, write_evidence_tsv, ExplanationReport, ReportQuery};
use crate::search::{core_context_search, SearchConfig, SearchStats, SyncClusters};
use crate::transfer::{fti_matrix, FtiMatrix, TrainConfig};

#[derive(Clone, Debug, PartialEq)]
pub enum KbSource {
    /// The corpus' `kb.tsv` when present, otherwise no import.
    Auto,
    None,
    File(PathBuf),
    Remote {
        endpoint: String,
        label_query: String,
        describe_query: String,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub out: PathBuf,
    pub kb: KbSource,
    /// Defaults to the corpus' `mapping.txt` when present.
    pub mapping: Option<PathBuf>,
    /// Defaults to the corpus' `constraints.ont` when present.
    pub constraints: Option<PathBuf>,
    pub mining: MiningParams,
    pub import: ImportOptions,
    pub train: TrainConfig,
    /// Precomputed AUCs instead of training.
    pub auc_csv: Option<PathBuf>,
    pub search: SearchConfig,
}

impl PipelineConfig {
    pub fn new(corpus: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            corpus: corpus.into(),
            out: out.into(),
            kb: KbSource::Auto,
            mapping: None,
            constraints: None,
            mining: MiningParams::default(),
            import: ImportOptions::default(),
            train: TrainConfig::default(),
            auc_csv: None,
            search: SearchConfig::default(),
        }
    }

    pub fn evidence_params(&self) -> EvidenceParams {
        self.search.params
    }

    /// Parameters as reported in run metadata.
    pub fn describe(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("sigma", self.mining.sigma.to_string());
        put("kappa", self.mining.kappa.to_string());
        put("tau", self.mining.tau.to_string());
        put("epsilon", self.search.params.epsilon.to_string());
        put("alpha", self.search.params.alpha.to_string());
        put("max_dim", self.search.max_dim.to_string());
        put("omega1", self.train.omega1.to_string());
        put("omega2", self.train.omega2.to_string());
        match &self.auc_csv {
            Some(p) => put("auc_csv", p.display().to_string()),
            None => {
                put("seed", self.train.seed.to_string());
                put("epochs", self.train.epochs.to_string());
                put("ensemble", self.train.ensemble.to_string());
            }
        }
        m
    }
}

/// Evidence kinds handled by the explain stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EvidenceKind {
    General,
    Narrator,
    Context,
}

impl EvidenceKind {
    pub const ALL: [EvidenceKind; 3] = [EvidenceKind::General, EvidenceKind::Narrator, EvidenceKind::Context];

    pub fn name(self) -> &'static str {
        match self {
            EvidenceKind::General => "general",
            EvidenceKind::Narrator => "narrator",
            EvidenceKind::Context => "context",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        EvidenceKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn require(path: PathBuf, stage: &'static str) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::MissingArtifact(path, stage))
    }
}

fn check_id(id: &str) -> Result<()> {
    let ok =
        !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) && !id.starts_with('.');
    if ok {
        Ok(())
    } else {
        Err(Error::malformed(
            "domain id",
            id,
            "only ASCII letters, digits, `-`, `_` and `.` can name artifacts",
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DomainSummary {
    pub id: String,
    pub samples: usize,
    pub inconsistent: usize,
    pub atoms: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExplainSummary {
    pub counts: BTreeMap<String, (usize, usize)>,
    pub search: Option<SearchStats>,
}

pub struct Pipeline {
    pub cfg: PipelineConfig,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Self {
        Pipeline { cfg }
    }

    fn out(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.cfg.out.join(rel)
    }

    pub fn load_corpus(&self) -> Result<Corpus> {
        let corpus = load_corpus(&self.cfg.corpus)?;
        for d in &corpus.domains {
            check_id(&d.id)?;
        }
        Ok(corpus)
    }

    /// Stage `materialize`: local closures and their summary.
    pub fn materialize(&self) -> Result<Vec<DomainSummary>> {
        let corpus = self.load_corpus()?;
        let mut summary = String::from("domain\tsamples\tinconsistent\tatoms\n");
        let mut out = Vec::new();
        for d in &corpus.domains {
            let mut text = String::new();
            for g in d.domain_closure() {
                let _ = writeln!(text, "{g}");
            }
            write_file(&self.out(format!("closures/{}.txt", d.id)), &text)?;
            let s = DomainSummary {
                id: d.id.clone(),
                samples: d.lsos.len(),
                inconsistent: d.closures().iter().filter(|c| c.is_inconsistent()).count(),
                atoms: d.domain_closure().len(),
            };
            let _ = writeln!(summary, "{}\t{}\t{}\t{}", s.id, s.samples, s.inconsistent, s.atoms);
            out.push(s);
        }
        write_file(&self.out("closures/summary.tsv"), &summary)?;
        Ok(out)
    }

    /// Stage `mine-roots`.
    pub fn mine_roots(&self) -> Result<Vec<(String, RootSet)>> {
        require(self.out("closures/summary.tsv"), "materialize")?;
        self.cfg.mining.validate()?;
        let corpus = self.load_corpus()?;
        let mut out = Vec::new();
        for d in &corpus.domains {
            let roots = mine_roots(d, &self.cfg.mining)?;
            write_file(&self.out(format!("roots/{}.tsv", d.id)), &roots_text(&roots))?;
            out.push((d.id.clone(), roots));
        }
        Ok(out)
    }

    fn adapter(&self, corpus: &Corpus) -> Result<Option<Box<dyn KbAdapter>>> {
        Ok(match &self.cfg.kb {
            KbSource::None => None,
            KbSource::Auto => {
                let p = corpus.kb_path();
                if p.exists() {
                    Some(Box::new(FileKb::load(p)?))
                } else {
                    None
                }
            }
            KbSource::File(p) => Some(Box::new(FileKb::load(p)?)),
            KbSource::Remote {
                endpoint,
                label_query,
                describe_query,
            } => Some(Box::new(RemoteKb::new(
                endpoint.clone(),
                label_query.clone(),
                describe_query.clone(),
            ))),
        })
    }

    fn mapping(&self, corpus: &Corpus) -> Result<VocabularyMapping> {
        let path = self
            .cfg
            .mapping
            .clone()
            .or_else(|| Some(corpus.mapping_path()).filter(|p| p.exists()));
        match path {
            Some(p) => parse_mapping(&read_file(&p)?, &p.display().to_string()),
            None => Ok(VocabularyMapping::default()),
        }
    }

    pub fn constraints(&self, corpus: &Corpus) -> Result<Vec<TBoxAxiom>> {
        let path = self
            .cfg
            .constraints
            .clone()
            .or_else(|| Some(corpus.constraints_path()).filter(|p| p.exists()));
        match path {
            Some(p) => {
                let ont = parse_ontology(&read_file(&p)?)
                    .map_err(|e| Error::malformed("constraints", p.display().to_string(), e.to_string()))?;
                if !ont.abox.is_empty() {
                    return Err(Error::malformed(
                        "constraints",
                        p.display().to_string(),
                        "ABox axioms in a constraint file",
                    ));
                }
                Ok(ont.tbox)
            }
            None => Ok(Vec::new()),
        }
    }

    /// Stage `import-external`: gated import per domain from its root
    /// individuals. Without a knowledge base every domain gets an empty
    /// external ABox.
    pub fn import_external(&self) -> Result<Vec<(String, Vec<ABoxAxiom>)>> {
        let mut corpus = self.load_corpus()?;
        let adapter = self.adapter(&corpus)?;
        let mapping = self.mapping(&corpus)?;
        let constraints = self.constraints(&corpus)?;
        let mut summary = String::from("domain\taxioms\tintroduced\tapproximate\n");
        let mut out = Vec::new();
        for d in corpus.domains.iter_mut() {
            let roots_path = require(self.out(format!("roots/{}.tsv", d.id)), "mine-roots")?;
            let individuals = read_root_individuals(&read_file(&roots_path)?);
            let (external, audit, introduced, approximate) = match &adapter {
                Some(kb) => {
                    let o = import_external(d, &individuals, kb.as_ref(), &mapping, &constraints, &self.cfg.import)
                        .map_err(|e| {
                            log::error!(
                                "import stopped at `{}` after {} individuals",
                                e.individual,
                                e.partial.len()
                            );
                            e.source
                        })?;
                    (o.external, o.audit, o.introduced_names, o.approximate)
                }
                None => (Vec::new(), Vec::new(), Default::default(), false),
            };
            let mut text = String::new();
            for ax in &external {
                let _ = writeln!(text, "{ax}");
            }
            write_file(&self.out(format!("external/{}.abox", d.id)), &text)?;
            let mut at = String::from("individual\tcandidates\toutcome\taccepted\tadded\trejected\n");
            for e in &audit {
                let rejected: Vec<String> = e
                    .rejected
                    .iter()
                    .map(|r| format!("{}@{}", r.entity, r.witness))
                    .collect();
                let _ = writeln!(
                    at,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    e.individual,
                    e.candidates,
                    e.outcome(),
                    e.accepted.as_deref().unwrap_or(""),
                    e.added,
                    rejected.join(";")
                );
            }
            write_file(&self.out(format!("external/{}.audit.tsv", d.id)), &at)?;
            let names: Vec<&str> = introduced.iter().map(|n| &**n).collect();
            let _ = writeln!(
                summary,
                "{}\t{}\t{}\t{}",
                d.id,
                external.len(),
                names.join(" "),
                approximate
            );
            out.push((d.id.clone(), external));
        }
        write_file(&self.out("external/summary.tsv"), &summary)?;
        Ok(out)
    }

    /// The corpus with every domain's accepted external axioms installed.
    pub fn load_imported(&self) -> Result<Corpus> {
        require(self.out("external/summary.tsv"), "import-external")?;
        let mut corpus = self.load_corpus()?;
        for d in corpus.domains.iter_mut() {
            let p = require(self.out(format!("external/{}.abox", d.id)), "import-external")?;
            let ont = parse_ontology(&read_file(&p)?)
                .map_err(|e| Error::malformed("external axioms", p.display().to_string(), e.to_string()))?;
            if !ont.abox.is_empty() {
                d.set_external_axioms(ont.abox);
            }
        }
        Ok(corpus)
    }

    /// Stage `fti`: trains and transfers, or ingests the AUC table.
    pub fn fti(&self) -> Result<FtiMatrix> {
        let (w1, w2) = (self.cfg.train.omega1, self.cfg.train.omega2);
        let m = match &self.cfg.auc_csv {
            Some(p) => {
                let f = fs::File::open(p).map_err(|e| Error::io(p, e))?;
                FtiMatrix::read_csv(BufReader::new(f), w1, w2)?
            }
            None => {
                let corpus = self.load_imported()?;
                fti_matrix(&corpus.domains, &self.cfg.train)?
            }
        };
        let mut buf = Vec::new();
        m.write_csv(&mut buf)?;
        write_file(&self.out("fti.csv"), &String::from_utf8_lossy(&buf))?;
        Ok(m)
    }

    pub fn load_fti(&self) -> Result<FtiMatrix> {
        let p = require(self.out("fti.csv"), "fti")?;
        let f = fs::File::open(&p).map_err(|e| Error::io(&p, e))?;
        FtiMatrix::read_csv(BufReader::new(f), self.cfg.train.omega1, self.cfg.train.omega2)
    }

    pub fn evidence_space(&self) -> Result<EvidenceSpace> {
        let fti = self.load_fti()?;
        let corpus = self.load_imported()?;
        let known: std::collections::BTreeSet<String> = corpus.domains.iter().map(|d| d.id.clone()).collect();
        let unknown: Vec<String> = fti.domains().into_iter().filter(|d| !known.contains(d)).collect();
        if !unknown.is_empty() {
            log::warn!(
                "FTI table names {} domains missing from the corpus, e.g. `{}`",
                unknown.len(),
                unknown[0]
            );
        }
        Ok(EvidenceSpace::from_domains(&corpus.domains, &fti))
    }

    /// Stage `explain`: evidence tables for the requested kinds.
    pub fn explain(&self, kinds: &[EvidenceKind]) -> Result<ExplainSummary> {
        self.cfg.search.validate()?;
        let space = self.evidence_space()?;
        let p = self.cfg.evidence_params();
        let mut counts = BTreeMap::new();
        let mut search = None;
        for &kind in kinds {
            let results = match kind {
                EvidenceKind::General => general_factors(&space, &p),
                EvidenceKind::Narrator => narrators(&space, &p),
                EvidenceKind::Context => {
                    let clusters = SyncClusters::from_space(&space);
                    let outcome = core_context_search(&space, &clusters, &self.cfg.search)?;
                    let mut jsonl = String::new();
                    for hit in &outcome.hits {
                        let line = serde_json::json!({
                            "context": hit.result.evidence.to_string(),
                            "gamma": hit.result.gamma,
                            "rho": hit.result.rho,
                            "n": hit.result.n,
                            "valid": hit.result.valid,
                            "reason": hit.result.reason.map(|r| r.code()),
                            "expansions": hit.expansion_total().to_string(),
                        });
                        let _ = writeln!(jsonl, "{line}");
                    }
                    write_file(&self.out("evidence/context.jsonl"), &jsonl)?;
                    let stats = serde_json::to_string_pretty(&outcome.stats)
                        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
                    write_file(&self.out("evidence/search-stats.json"), &(stats + "\n"))?;
                    let expanded: Vec<EvidenceResult> = outcome
                        .expanded(&clusters, self.cfg.search.max_dim)
                        .into_values()
                        .collect();
                    search = Some(outcome.stats);
                    expanded
                }
            };
            let path = self.out(format!("evidence/{}.tsv", kind.name()));
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = BufWriter::new(f);
            write_evidence_tsv(&results, &mut w)?;
            w.flush().map_err(|e| Error::io(&path, e))?;
            let valid = results.iter().filter(|r| r.valid).count();
            counts.insert(kind.name().to_string(), (results.len(), valid));
        }
        Ok(ExplainSummary { counts, search })
    }

    /// Direct evaluation of one evidence, for ad hoc queries.
    pub fn evaluate(&self, evidence: &Evidence) -> Result<EvidenceResult> {
        let space = self.evidence_space()?;
        Ok(correlative_reason(&space, evidence, &self.cfg.evidence_params()))
    }

    pub fn load_evidence(&self, kinds: &[EvidenceKind]) -> Result<Vec<EvidenceResult>> {
        let mut out = Vec::new();
        for k in kinds {
            let p = require(self.out(format!("evidence/{}.tsv", k.name())), "explain")?;
            let f = fs::File::open(&p).map_err(|e| Error::io(&p, e))?;
            out.extend(read_evidence_tsv(BufReader::new(f), &p.display().to_string())?);
        }
        Ok(out)
    }

    /// Stage `report`: text and JSON reports from the evidence tables.
    pub fn report(&self, query: &ReportQuery) -> Result<ExplanationReport> {
        let kinds: Vec<EvidenceKind> = query.kinds.iter().filter_map(|k| EvidenceKind::parse(k)).collect();
        let results = self.load_evidence(&kinds)?;
        let space = self.evidence_space()?;
        let report = build_report(&space, &results, query, self.cfg.describe());
        write_file(&self.out("report.txt"), &report.to_text())?;
        write_file(&self.out("report.json"), &(report.to_json()? + "\n"))?;
        Ok(report)
    }

    /// Every stage in order.
    pub fn run_all(&self, query: &ReportQuery) -> Result<ExplanationReport> {
        self.materialize()?;
        self.mine_roots()?;
        self.import_external()?;
        self.fti()?;
        self.explain(&EvidenceKind::ALL)?;
        self.report(query)
    }
}

fn roots_text(r: &RootSet) -> String {
    let mut out = String::from("kind\tvalue\tr_e\tr_i\n");
    for g in &r.frequent {
        let _ = writeln!(out, "frequent\t{g}\t\t");
    }
    for s in &r.effective_subsets {
        let members: Vec<String> = s.members.iter().map(|g| g.to_string()).collect();
        let _ = writeln!(out, "effective\t{}\t{}\t{}", members.join(" & "), s.r_e, s.r_i);
    }
    for g in &r.root_entailments {
        let _ = writeln!(out, "root\t{g}\t\t");
    }
    for n in &r.root_individuals {
        let _ = writeln!(out, "individual\t{n}\t\t");
    }
    out
}

fn read_root_individuals(text: &str) -> std::collections::BTreeSet<crate::Name> {
    text.lines()
        .filter_map(|l| l.strip_prefix("individual\t"))
        .map(|l| crate::Name::from(l.split('\t').next().unwrap_or("")))
        .filter(|n| !n.is_empty())
        .collect()
}
