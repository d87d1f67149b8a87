//! The table of transfer measurements over ordered domain pairs.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{union_value_properties, union_vocabulary, LearningDomain};
use crate::error::{Error, Result};

use super::{fti, train_within, transfer, DomainData, PredictorModel, TrainConfig, TransferMode};

/// Measurements of one transfer `source -> target`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransferRecord {
    pub source: String,
    pub target: String,
    pub auc_base: f64,
    pub auc_hard: f64,
    pub auc_soft: f64,
    pub fsi: f64,
    pub fgi: f64,
    pub fti: f64,
}

impl TransferRecord {
    pub fn new(
        source: impl Into<String>,
        target: impl Into<String>,
        aucs: (f64, f64, f64),
        w1: f64,
        w2: f64,
    ) -> Result<Self> {
        let (base, hard, soft) = aucs;
        let (source, target) = (source.into(), target.into());
        for v in [base, hard, soft] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "AUC {v} for {source} -> {target} is outside [0, 1]"
                )));
            }
        }
        let fsi = base - hard;
        let fgi = soft - base;
        Ok(TransferRecord {
            fti: fti(fsi, fgi, w1, w2)?,
            source,
            target,
            auc_base: base,
            auc_hard: hard,
            auc_soft: soft,
            fsi,
            fgi,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    source: String,
    target: String,
    auc_base: f64,
    auc_hard: f64,
    auc_soft: f64,
}

/// Records keyed by `(source, target)`, computed once and shared by every
/// evidence query.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FtiMatrix {
    records: BTreeMap<(String, String), TransferRecord>,
}

impl FtiMatrix {
    pub fn from_records(records: impl IntoIterator<Item = TransferRecord>) -> Result<Self> {
        let mut m = FtiMatrix::default();
        for r in records {
            if r.source == r.target {
                return Err(Error::InvalidParameter(format!(
                    "self transfer {} -> {}",
                    r.source, r.target
                )));
            }
            let key = (r.source.clone(), r.target.clone());
            if m.records.insert(key, r).is_some() {
                let (s, t) = m.records.keys().last().cloned().unwrap_or_default();
                return Err(Error::InvalidParameter(format!("duplicate transfer {s} -> {t}")));
            }
        }
        Ok(m)
    }

    pub fn get(&self, source: &str, target: &str) -> Option<&TransferRecord> {
        self.records.get(&(source.to_string(), target.to_string()))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records sorted by `(source, target)`.
    pub fn records(&self) -> impl Iterator<Item = &TransferRecord> {
        self.records.values()
    }

    /// Sorted ids appearing as source or target.
    pub fn domains(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.records.keys().flat_map(|(s, t)| [s.clone(), t.clone()]).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Recomputes every index with new weights.
    pub fn reweight(&self, w1: f64, w2: f64) -> Result<Self> {
        FtiMatrix::from_records(
            self.records()
                .map(|r| TransferRecord::new(&r.source, &r.target, (r.auc_base, r.auc_hard, r.auc_soft), w1, w2))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// Writes `source,target,auc_base,auc_hard,auc_soft` rows.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in self.records() {
            wr.serialize(CsvRow {
                source: r.source.clone(),
                target: r.target.clone(),
                auc_base: r.auc_base,
                auc_hard: r.auc_hard,
                auc_soft: r.auc_soft,
            })?;
        }
        wr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Reads externally measured AUCs; the indices are derived with the
    /// given weights.
    pub fn read_csv(r: impl Read, w1: f64, w2: f64) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let header = rd.headers()?.clone();
        let want = ["source", "target", "auc_base", "auc_hard", "auc_soft"];
        if header.iter().collect::<Vec<_>>() != want {
            return Err(Error::malformed(
                "AUC table",
                "header",
                format!("expected `{}`", want.join(",")),
            ));
        }
        let mut out = Vec::new();
        for row in rd.deserialize() {
            let row: CsvRow = row?;
            out.push(TransferRecord::new(
                row.source,
                row.target,
                (row.auc_base, row.auc_hard, row.auc_soft),
                w1,
                w2,
            )?);
        }
        FtiMatrix::from_records(out)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Trains within-domain ensembles for every domain, then hard and soft
/// transfers for every ordered pair, all against the union vocabulary of
/// `domains`. Domains that cannot be trained are logged and their pairs left
/// out.
pub fn fti_matrix(domains: &[LearningDomain], cfg: &TrainConfig) -> Result<FtiMatrix> {
    cfg.validate()?;
    if domains.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 domains, got {}",
            domains.len()
        )));
    }
    let vocab = union_vocabulary(domains);
    let values = union_value_properties(domains);
    let seeds: Vec<u64> = cfg.seeds().collect();

    // Per domain: encoded data, one model per seed, and the mean AUC.
    type Trained = (DomainData, Vec<PredictorModel>, f64);
    let trained: Vec<Option<Trained>> = domains
        .par_iter()
        .map(|d| {
            let run = || -> Result<Trained> {
                let data = DomainData::encode(d, &vocab, &values, cfg)?;
                let mut models = Vec::new();
                let mut aucs = Vec::new();
                for &s in &seeds {
                    let (m, a) = train_within(&data, cfg, s)?;
                    models.push(m);
                    aucs.push(a);
                }
                Ok((data, models, mean(&aucs)))
            };
            run().map_err(|e| log::warn!("domain {} skipped: {e}", d.id)).ok()
        })
        .collect();

    let pairs: Vec<(usize, usize)> = (0..domains.len())
        .flat_map(|a| (0..domains.len()).filter(move |&b| b != a).map(move |b| (a, b)))
        .filter(|&(a, b)| trained[a].is_some() && trained[b].is_some())
        .collect();
    let records: Vec<TransferRecord> = pairs
        .par_iter()
        .filter_map(|&(a, b)| {
            let (_, models, _) = trained[a].as_ref()?;
            let (target, _, base) = trained[b].as_ref()?;
            let run = || -> Result<TransferRecord> {
                let mut hard = Vec::new();
                let mut soft = Vec::new();
                for (m, &s) in models.iter().zip(&seeds) {
                    hard.push(transfer(m, target, TransferMode::Hard, cfg, s)?.1);
                    soft.push(transfer(m, target, TransferMode::Soft, cfg, s)?.1);
                }
                TransferRecord::new(
                    &domains[a].id,
                    &domains[b].id,
                    (*base, mean(&hard), mean(&soft)),
                    cfg.omega1,
                    cfg.omega2,
                )
            };
            run()
                .map_err(|e| log::warn!("transfer {} -> {} skipped: {e}", domains[a].id, domains[b].id))
                .ok()
        })
        .collect();
    FtiMatrix::from_records(records)
}
