//! On-disk corpus layout.
//!
//! ```text
//! <root>/domains/<dir>/domain.manifest   flat `key = value` lines
//! <root>/domains/<dir>/<lsos>/*.abox     one LSO per file
//! ```
//!
//! Manifest keys: `id`, `target`, `tbox` (path relative to the manifest),
//! optional `lsos` (directory, default `lsos`) and `annotations` (space
//! separated keys every LSO must carry). LSO files start with `@ann key value`
//! and `@val property number` directives followed by ABox axioms.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use crate::entailment::Entailment;
use crate::error::{Error, Result};
use crate::ontology::{normalize_tbox, parse_ontology, Ontology, Signature};
use crate::reasoner::Reasoner;

use super::{LearningDomain, Lso};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainManifest {
    pub id: String,
    pub target: Entailment,
    pub tbox: PathBuf,
    pub lsos: PathBuf,
    pub annotation_keys: Vec<String>,
}

pub fn parse_manifest(text: &str, location: &str) -> Result<DomainManifest> {
    let mut kv = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::malformed("manifest", format!("{location}:{}", i + 1), "expected `key = value`"))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let need = |k: &str| {
        kv.get(k)
            .cloned()
            .ok_or_else(|| Error::malformed("manifest", location, format!("missing key `{k}`")))
    };
    Ok(DomainManifest {
        id: need("id")?,
        target: need("target")?.parse()?,
        tbox: need("tbox")?.into(),
        lsos: kv.get("lsos").cloned().unwrap_or_else(|| "lsos".into()).into(),
        annotation_keys: kv
            .get("annotations")
            .map(|s| s.split_whitespace().map(String::from).collect())
            .unwrap_or_default(),
    })
}

/// Parses one LSO document; `id` usually comes from the file stem.
pub fn parse_lso(id: &str, text: &str, location: &str) -> Result<Lso> {
    parse_lso_signed(id, text, location).map(|(lso, _)| lso)
}

fn parse_lso_signed(id: &str, text: &str, location: &str) -> Result<(Lso, Signature)> {
    let mut lso = Lso {
        id: id.to_string(),
        ..Default::default()
    };
    // Directive lines are blanked rather than removed so axiom errors keep
    // their line numbers.
    let mut body = String::with_capacity(text.len());
    for (i, line) in text.lines().enumerate() {
        let at = |msg: &str| Error::malformed("sample", format!("{location}:{}", i + 1), msg);
        let t = line.trim_start();
        if let Some(rest) = t.strip_prefix("@ann ") {
            let (k, v) = rest
                .trim()
                .split_once(char::is_whitespace)
                .ok_or_else(|| at("expected `@ann key value`"))?;
            lso.annotations.insert(k.to_string(), v.trim().to_string());
        } else if let Some(rest) = t.strip_prefix("@val ") {
            let (k, v) = rest
                .trim()
                .split_once(char::is_whitespace)
                .ok_or_else(|| at("expected `@val property number`"))?;
            let x: f64 = v.trim().parse().map_err(|_| at("data value is not a number"))?;
            lso.values.insert(k.to_string(), x);
        } else if t.starts_with('@') {
            return Err(at("unknown directive"));
        } else {
            body.push_str(line);
        }
        body.push('\n');
    }
    let ont = parse_ontology(&body).map_err(|e| relocate(e, location))?;
    if !ont.tbox.is_empty() {
        return Err(Error::malformed(
            "sample",
            location,
            "TBox axioms belong in the shared domain TBox",
        ));
    }
    if lso.annotations.is_empty() {
        return Err(Error::malformed("sample", location, "no `@ann` annotations"));
    }
    lso.abox = ont.abox;
    Ok((lso, ont.signature))
}

fn relocate(e: Error, location: &str) -> Error {
    match e {
        Error::Syntax { line, column, message } => {
            Error::malformed("sample", format!("{location}:{line}:{column}"), message)
        }
        other => Error::malformed("sample", location, other.to_string()),
    }
}

pub fn write_lso(lso: &Lso) -> String {
    let mut out = String::new();
    for (k, v) in &lso.annotations {
        let _ = writeln!(out, "@ann {k} {v}");
    }
    for (k, v) in &lso.values {
        let _ = writeln!(out, "@val {k} {v}");
    }
    for ax in &lso.abox {
        let _ = writeln!(out, "{ax}");
    }
    out
}

/// A loaded corpus with materialized domains, ordered by directory name.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub root: PathBuf,
    pub domains: Vec<LearningDomain>,
    pub manifests: Vec<DomainManifest>,
}

impl Corpus {
    pub fn domain(&self, id: &str) -> Option<&LearningDomain> {
        self.domains.iter().find(|d| d.id == id)
    }

    pub fn kb_path(&self) -> PathBuf {
        self.root.join("kb.tsv")
    }

    pub fn mapping_path(&self) -> PathBuf {
        self.root.join("mapping.txt")
    }

    pub fn constraints_path(&self) -> PathBuf {
        self.root.join("constraints.ont")
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_corpus(root: impl AsRef<Path>) -> Result<Corpus> {
    let root = root.as_ref().to_path_buf();
    let dir = root.join("domains");
    let mut dirs: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| Error::io(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("domain.manifest").is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::malformed(
            "corpus",
            dir.display().to_string(),
            "no domain manifests found",
        ));
    }

    let mut tboxes: HashMap<PathBuf, (Arc<Reasoner>, Ontology)> = HashMap::new();
    let mut domains = Vec::new();
    let mut manifests = Vec::new();
    for ddir in dirs {
        let mpath = ddir.join("domain.manifest");
        let manifest = parse_manifest(&read(&mpath)?, &mpath.display().to_string())?;
        let tpath = ddir.join(&manifest.tbox);
        let key = tpath.canonicalize().map_err(|e| Error::io(&tpath, e))?;
        if !tboxes.contains_key(&key) {
            let text = read(&tpath)?;
            let ont = parse_ontology(&text).map_err(|e| match e {
                Error::Syntax { line, column, message } => {
                    Error::malformed("tbox", format!("{}:{line}:{column}", tpath.display()), message)
                }
                other => other,
            })?;
            if !ont.abox.is_empty() {
                return Err(Error::malformed(
                    "tbox",
                    tpath.display().to_string(),
                    "ABox axioms in a TBox file",
                ));
            }
            let reasoner = Arc::new(Reasoner::new(&normalize_tbox(&ont.tbox)));
            tboxes.insert(key.clone(), (reasoner, ont));
        }
        let (reasoner, tbox_ont) = &tboxes[&key];

        let ldir = ddir.join(&manifest.lsos);
        let mut files: Vec<PathBuf> = fs::read_dir(&ldir)
            .map_err(|e| Error::io(&ldir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "abox"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::EmptyDomain(manifest.id.clone()));
        }
        let lsos: Vec<Lso> = files
            .par_iter()
            .map(|f| {
                let loc = f.display().to_string();
                let stem = f.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
                let (lso, abox_sig) = parse_lso_signed(stem, &read(f)?, &loc)?;
                let mut sig = tbox_ont.signature.clone();
                sig.merge(&abox_sig)
                    .map_err(|e| Error::malformed("sample", loc.clone(), e.to_string()))?;
                for k in &manifest.annotation_keys {
                    if !lso.annotations.contains_key(k) {
                        return Err(Error::malformed("sample", loc, format!("missing annotation `{k}`")));
                    }
                }
                Ok(lso)
            })
            .collect::<Result<_>>()?;

        let mut d = LearningDomain::new(manifest.id.clone(), reasoner.clone(), manifest.target.clone(), lsos);
        d.materialize();
        domains.push(d);
        manifests.push(manifest);
    }
    let mut ids: Vec<&str> = domains.iter().map(|d| d.id.as_str()).collect();
    ids.sort();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::malformed(
            "corpus",
            root.display().to_string(),
            format!("duplicate domain id `{}`", w[0]),
        ));
    }
    Ok(Corpus {
        root,
        domains,
        manifests,
    })
}
