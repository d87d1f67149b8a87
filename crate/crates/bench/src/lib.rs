//! Fixtures shared by the benchmarks.

use std::path::{Path, PathBuf};

use tlexplain_core::domain::{load_corpus, Corpus};
use tlexplain_core::evidence::{change_rates, EvidenceSpace};
use tlexplain_core::transfer::{FtiMatrix, TransferRecord};

pub fn bundled_corpus_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/mini-flights")
}

pub fn bundled_corpus() -> Corpus {
    load_corpus(bundled_corpus_path()).expect("bundled corpus loads")
}

/// FTI values that rise with closure overlap, so benchmarks see realistic
/// numbers of valid contexts without training.
pub fn overlap_fti(corpus: &Corpus) -> FtiMatrix {
    let mut recs = Vec::new();
    for (i, a) in corpus.domains.iter().enumerate() {
        for (j, b) in corpus.domains.iter().enumerate().filter(|(j, _)| *j != i) {
            let inv = change_rates(a.domain_closure(), b.domain_closure())
                .expect("non-empty closures")
                .inv;
            let jitter = ((i * 7 + j * 3) % 11) as f64 / 100.0;
            let rec = TransferRecord::new(&a.id, &b.id, (0.7, 0.5 + jitter, 0.5 + 0.4 * inv), 1.0, 1.0);
            recs.push(rec.expect("AUCs in range"));
        }
    }
    FtiMatrix::from_records(recs).expect("distinct transfers")
}

pub fn bundled_space() -> EvidenceSpace {
    let corpus = bundled_corpus();
    let fti = overlap_fti(&corpus);
    EvidenceSpace::from_domains(&corpus.domains, &fti)
}
