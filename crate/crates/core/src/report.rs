//! Evidence tables and human-readable explanation reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::Serialize;

use crate::entailment::Entailment;
use crate::error::{Error, Result};
use crate::evidence::{change_rates, dec, sort_results, Evidence, EvidenceResult, EvidenceSpace, FactorKind, Reason};

pub const TSV_HEADER: &str = "kind\tevidence\tgamma\trho\tn\tvalid\treason";

fn direction(gamma: f64) -> &'static str {
    if gamma >= 0.0 {
        "positive"
    } else {
        "negative"
    }
}

fn conjunction(gs: &[Entailment]) -> String {
    let names: Vec<String> = gs.iter().map(|g| g.to_string()).collect();
    match names.as_slice() {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

/// One sentence per evidence, keyed by its kind and the sign of gamma.
pub fn render_evidence(e: &EvidenceResult, src: &str, dst: &str) -> String {
    let g = e.gamma;
    match &e.evidence {
        Evidence::GeneralFactor(FactorKind::Inv) => format!(
            "There are a high percentage of invariant entailments shared by {src} and {dst}, \
             which is associated with {} transfer (γ={g:.3})",
            direction(g)
        ),
        Evidence::GeneralFactor(k) => format!(
            "There are a high percentage of {} entailments from {src} to {dst}, \
             which is associated with {} transfer (γ={g:.3})",
            k.name(),
            direction(g)
        ),
        Evidence::Narrator(n) => format!(
            "{n} holds in both {src} and {dst} and is {}ly associated with transfer success (γ={g:.3})",
            direction(g)
        ),
        Evidence::Context(gs) => format!(
            "{} hold together in both {src} and {dst} and have a high impact on the {} transfer (γ={g:.3})",
            conjunction(gs),
            direction(g)
        ),
    }
}

/// Extra remark for results that are not valid evidence.
pub fn note(e: &EvidenceResult) -> Option<&'static str> {
    match e.reason? {
        Reason::ZeroVariance => Some("always or never co-transfers; no correlation can be measured"),
        Reason::NoEvidenceDomains => Some("no source domain entails it"),
        Reason::InsufficientSamples => Some("too few transfers to test"),
        Reason::WeakCorrelation => Some("significant but below the strength threshold"),
        Reason::NotSignificant => Some("not significant"),
    }
}

fn parse_factor(s: &str) -> Option<FactorKind> {
    FactorKind::ALL.into_iter().find(|k| format!("d_{}", k.name()) == s)
}

/// Reads an evidence string in the form written by the tables.
pub fn parse_evidence(kind: &str, text: &str) -> Result<Evidence> {
    let bad = |m: String| Error::malformed("evidence", text, m);
    match kind {
        "general" => parse_factor(text)
            .map(Evidence::GeneralFactor)
            .ok_or_else(|| bad("unknown general factor".into())),
        "narrator" => Ok(Evidence::Narrator(text.parse()?)),
        "context" => {
            let gs = text
                .split(" & ")
                .map(|s| s.trim().parse::<Entailment>())
                .collect::<Result<Vec<_>>>()?;
            Evidence::context(gs)
        }
        other => Err(bad(format!("unknown evidence kind `{other}`"))),
    }
}

fn reason_from_code(code: &str) -> Option<Reason> {
    [
        Reason::NoEvidenceDomains,
        Reason::InsufficientSamples,
        Reason::ZeroVariance,
        Reason::WeakCorrelation,
        Reason::NotSignificant,
    ]
    .into_iter()
    .find(|r| r.code() == code)
}

/// Writes one row per result, sorted by `|gamma|` descending. Floats use
/// their shortest exact form so the table reads back bit-identically.
pub fn write_evidence_tsv(results: &[EvidenceResult], mut w: impl Write) -> Result<()> {
    let mut sorted = results.to_vec();
    sort_results(&mut sorted);
    let io = |e| Error::io("evidence table", e);
    writeln!(w, "{TSV_HEADER}").map_err(io)?;
    for r in &sorted {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.evidence.kind(),
            r.evidence,
            r.gamma,
            r.rho,
            r.n,
            r.valid,
            r.reason.map_or("", Reason::code)
        )
        .map_err(io)?;
    }
    Ok(())
}

pub fn read_evidence_tsv(r: impl BufRead, location: &str) -> Result<Vec<EvidenceResult>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io(location, e))?;
        if i == 0 {
            // The six-column form without reason codes is also accepted.
            if line != TSV_HEADER && Some(line.as_str()) != TSV_HEADER.rsplit_once('\t').map(|h| h.0) {
                return Err(Error::malformed("evidence table", location, "unexpected header"));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let at = |m: &str| Error::malformed("evidence table", format!("{location}:{}", i + 1), m);
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 && f.len() != 7 {
            return Err(at("expected 6 or 7 tab-separated fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| at("bad number"));
        out.push(EvidenceResult {
            evidence: parse_evidence(f[0], f[1])?,
            gamma: num(f[2])?,
            rho: num(f[3])?,
            n: f[4].parse().map_err(|_| at("bad count"))?,
            valid: f[5].parse().map_err(|_| at("bad flag"))?,
            reason: match f.get(6) {
                None | Some(&"") => None,
                Some(code) => Some(reason_from_code(code).ok_or_else(|| at("unknown reason"))?),
            },
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RenderedEvidence {
    pub kind: &'static str,
    pub evidence: String,
    pub gamma: f64,
    pub rho: f64,
    pub n: usize,
    pub sentence: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransferSection {
    pub source: String,
    pub target: String,
    pub fti: f64,
    pub sentences: Vec<RenderedEvidence>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExplanationReport {
    pub parameters: BTreeMap<String, String>,
    pub counts: BTreeMap<String, u64>,
    pub transfers: Vec<TransferSection>,
    /// Results that are not valid evidence, with a note.
    pub appendix: Vec<AppendixRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AppendixRow {
    pub kind: &'static str,
    pub evidence: String,
    pub gamma: f64,
    pub rho: f64,
    pub n: usize,
    pub reason: Option<Reason>,
    pub note: Option<&'static str>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportQuery {
    /// Evidence kinds to render: `general`, `narrator`, `context`.
    pub kinds: Vec<String>,
    /// Sentences per transfer and kind; `None` keeps all.
    pub top_k: Option<usize>,
    /// Restricts the report to these `(source, target)` pairs.
    pub transfers: Option<Vec<(String, String)>>,
}

impl Default for ReportQuery {
    fn default() -> Self {
        ReportQuery {
            kinds: vec!["general".into(), "narrator".into(), "context".into()],
            top_k: Some(5),
            transfers: None,
        }
    }
}

/// Renders, for every measured transfer, the valid evidence that applies to
/// it. A general factor applies when the transfer's rate is above the mean
/// over all transfers, so "a high percentage" holds; a narrator or context
/// applies when both domains entail it.
pub fn build_report(
    space: &EvidenceSpace,
    results: &[EvidenceResult],
    query: &ReportQuery,
    parameters: BTreeMap<String, String>,
) -> ExplanationReport {
    let mut valid: Vec<EvidenceResult> = results
        .iter()
        .filter(|r| r.valid && query.kinds.iter().any(|k| k == r.evidence.kind()))
        .cloned()
        .collect();
    sort_results(&mut valid);

    let rates: Vec<Option<crate::evidence::ChangeRates>> = space
        .pairs
        .iter()
        .map(|&(a, b, _)| change_rates(&space.closures[a], &space.closures[b]).ok())
        .collect();
    let mean = |k: FactorKind| {
        let v: Vec<f64> = rates.iter().flatten().map(|r| r.get(k)).collect();
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let means: BTreeMap<FactorKind, f64> = FactorKind::ALL.iter().map(|&k| (k, mean(k))).collect();

    let mut transfers = Vec::new();
    for (p, &(a, b, fti)) in space.pairs.iter().enumerate() {
        let (src, dst) = (&space.ids[a], &space.ids[b]);
        if let Some(sel) = &query.transfers {
            if !sel.iter().any(|(s, t)| s == src && t == dst) {
                continue;
            }
        }
        let mut per_kind: BTreeMap<&str, usize> = BTreeMap::new();
        let mut sentences = Vec::new();
        for r in &valid {
            let applies = match &r.evidence {
                Evidence::GeneralFactor(k) => rates[p].is_some_and(|x| x.get(*k) > means[k]),
                x => matches!(dec(x.entailments(), &space.closures[a], &space.closures[b]), Ok(1)),
            };
            if !applies {
                continue;
            }
            let used = per_kind.entry(r.evidence.kind()).or_default();
            if query.top_k.is_some_and(|k| *used >= k) {
                continue;
            }
            *used += 1;
            sentences.push(RenderedEvidence {
                kind: r.evidence.kind(),
                evidence: r.evidence.to_string(),
                gamma: r.gamma,
                rho: r.rho,
                n: r.n,
                sentence: render_evidence(r, src, dst),
            });
        }
        transfers.push(TransferSection {
            source: src.clone(),
            target: dst.clone(),
            fti,
            sentences,
        });
    }

    let mut appendix: Vec<EvidenceResult> = results.iter().filter(|r| !r.valid).cloned().collect();
    sort_results(&mut appendix);
    let appendix: Vec<AppendixRow> = appendix
        .iter()
        .map(|r| AppendixRow {
            kind: r.evidence.kind(),
            evidence: r.evidence.to_string(),
            gamma: r.gamma,
            rho: r.rho,
            n: r.n,
            reason: r.reason,
            note: note(r),
        })
        .collect();

    let mut counts = BTreeMap::new();
    counts.insert("domains".to_string(), space.domain_count() as u64);
    counts.insert("transfers".to_string(), space.pairs.len() as u64);
    for kind in ["general", "narrator", "context"] {
        let of_kind = results.iter().filter(|r| r.evidence.kind() == kind);
        let (all, ok) = of_kind.fold((0u64, 0u64), |(n, v), r| (n + 1, v + r.valid as u64));
        counts.insert(format!("{kind}_evaluated"), all);
        counts.insert(format!("{kind}_valid"), ok);
    }
    counts.insert(
        "sentences".to_string(),
        transfers.iter().map(|t| t.sentences.len() as u64).sum(),
    );
    ExplanationReport {
        parameters,
        counts,
        transfers,
        appendix,
    }
}

impl ExplanationReport {
    pub fn to_text(&self) -> String {
        let mut out = String::from("Transferability explanation report\n\nParameters\n");
        for (k, v) in &self.parameters {
            let _ = writeln!(out, "  {k} = {v}");
        }
        out.push_str("\nCounts\n");
        for (k, v) in &self.counts {
            let _ = writeln!(out, "  {k} = {v}");
        }
        for t in &self.transfers {
            let _ = writeln!(out, "\n{} -> {} (FTI {:.4})", t.source, t.target, t.fti);
            if t.sentences.is_empty() {
                out.push_str("  no valid evidence applies\n");
            }
            for s in &t.sentences {
                let _ = writeln!(out, "  - {}.", s.sentence);
            }
        }
        if !self.appendix.is_empty() {
            out.push_str("\nAppendix: evidence that is not valid\n");
            for r in &self.appendix {
                let _ = writeln!(
                    out,
                    "  {}\t{}\tγ={:.3}\tρ={:.4}\tn={}\t{}",
                    r.kind,
                    r.evidence,
                    r.gamma,
                    r.rho,
                    r.n,
                    r.note.unwrap_or("")
                );
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidParameter(format!("report serialization: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::evidence::EvidenceParams;
    use crate::transfer::{FtiMatrix, TransferRecord};

    fn g(s: &str) -> Entailment {
        s.parse().unwrap()
    }

    fn result(evidence: Evidence, gamma: f64) -> EvidenceResult {
        EvidenceResult {
            evidence,
            gamma,
            rho: 0.01,
            n: 20,
            valid: true,
            reason: None,
        }
    }

    #[test]
    fn templates_by_kind_and_sign() {
        let s = render_evidence(&result(Evidence::GeneralFactor(FactorKind::Obs), -0.4), "D1", "D2");
        assert!(s.starts_with("There are a high percentage of obsolete entailments from D1 to D2"));
        assert!(s.contains("negative transfer"));
        let s = render_evidence(&result(Evidence::Narrator(g("locatedIn(ori,East)")), 0.3), "D1", "D2");
        assert!(s.contains("locatedIn(ori,East) holds in both D1 and D2"));
        assert!(s.contains("positively associated"));
        let c = Evidence::context([g("hasOri(dep,ORD)"), g("locatedIn(des,CA)")]).unwrap();
        let s = render_evidence(&result(c, 0.35), "D1", "D2");
        assert!(s.starts_with("hasOri(dep,ORD) and locatedIn(des,CA) hold together"));
        assert!(s.contains("positive transfer (γ=0.350)"));
    }

    #[test]
    fn tsv_roundtrip_is_exact() {
        let mut rs = vec![
            result(Evidence::GeneralFactor(FactorKind::Inv), 0.1 + 0.2),
            result(Evidence::Narrator(g("A(x)")), -0.7),
            result(Evidence::context([g("A(x)"), g("r(x,y)")]).unwrap(), 1.0 / 3.0),
        ];
        rs[0].valid = false;
        rs[0].reason = Some(Reason::WeakCorrelation);
        let mut buf = Vec::new();
        write_evidence_tsv(&rs, &mut buf).unwrap();
        let back = read_evidence_tsv(buf.as_slice(), "t").unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[0], rs[1]);
        for r in &rs {
            assert!(back.contains(r));
        }
    }

    #[test]
    fn six_column_tables_read_without_reasons() {
        let text = "kind\tevidence\tgamma\trho\tn\tvalid\nnarrator\tA(x)\t-0.5\t0.01\t12\ttrue\n";
        let back = read_evidence_tsv(text.as_bytes(), "t").unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(
            (back[0].gamma, back[0].n, back[0].valid, back[0].reason),
            (-0.5, 12, true, None)
        );
        assert!(read_evidence_tsv("kind\tevidence\n".as_bytes(), "t").is_err());
    }

    #[test]
    fn every_sentence_is_backed_by_one_valid_result() {
        let ids: Vec<String> = (0..4).map(|i| format!("D{i}")).collect();
        let closures: Vec<BTreeSet<Entailment>> = vec![
            [g("A(x)"), g("B(x)")].into(),
            [g("A(x)"), g("B(x)")].into(),
            [g("A(x)"), g("C(x)")].into(),
            [g("C(x)")].into(),
        ];
        let mut recs = Vec::new();
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    let f = if (a < 2) == (b < 2) { 0.2 } else { -0.1 } + 0.01 * (a + b) as f64;
                    recs.push(TransferRecord::new(&ids[a], &ids[b], (0.5, 0.5 - f, 0.5 + f), 1.0, 1.0).unwrap());
                }
            }
        }
        let space = EvidenceSpace::new(ids, closures, BTreeSet::new(), &FtiMatrix::from_records(recs).unwrap());
        let p = EvidenceParams::default();
        let mut results = crate::evidence::general_factors(&space, &p);
        results.extend(crate::evidence::narrators(&space, &p));
        let q = ReportQuery {
            top_k: None,
            ..ReportQuery::default()
        };
        let rep = build_report(&space, &results, &q, BTreeMap::new());
        for t in &rep.transfers {
            for s in &t.sentences {
                let backing: Vec<_> = results
                    .iter()
                    .filter(|r| r.evidence.to_string() == s.evidence)
                    .collect();
                assert_eq!(backing.len(), 1);
                assert!(backing[0].valid);
            }
        }
        let invalid = results.iter().filter(|r| !r.valid).count();
        assert_eq!(rep.appendix.len(), invalid);
        assert!(rep.to_text().contains("D0 -> D1"));
        assert!(rep.to_json().unwrap().contains("\"transfers\""));
    }
}
