//! External knowledge bases: entity lookup by name, vocabulary mapping, and
//! consistency-checked import of entity facts as ABox axioms.

mod file;
mod import;
mod remote;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::entailment::{is_valid_name, Name};
use crate::error::{Error, Result};
use crate::ontology::ABoxAxiom;

pub use file::{parse_kb, FileKb};
pub use import::{
    all_individuals, import_external, AuditEntry, ImportAborted, ImportOptions, ImportOutcome, Rejection,
};
pub use remote::RemoteKb;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KbEntity {
    pub entity_id: String,
    pub labels: Vec<String>,
    pub types: Vec<String>,
    pub properties: Vec<(String, String)>,
}

/// Read access to an external knowledge base. `lookup_by_name` must return
/// candidates in an order that is stable for a fixed snapshot: the first
/// acceptable candidate wins during import.
pub trait KbAdapter: Send + Sync {
    fn lookup_by_name(&self, name: &str) -> Result<Vec<KbEntity>>;
    fn describe(&self, entity_id: &str) -> Result<KbEntity>;
}

/// Case-folded, trimmed, with `_` and `-` read as spaces.
pub fn normalize_label(s: &str) -> String {
    s.trim()
        .chars()
        .map(|c| if c == '_' || c == '-' { ' ' } else { c })
        .collect::<String>()
        .trim()
        .to_lowercase()
}

/// Candidates whose normalized label equals the normalized `ind`, in adapter
/// order.
pub fn match_entities(adapter: &dyn KbAdapter, ind: &str) -> Result<Vec<KbEntity>> {
    let key = normalize_label(ind);
    Ok(adapter
        .lookup_by_name(ind)?
        .into_iter()
        .filter(|e| e.labels.iter().any(|l| normalize_label(l) == key))
        .collect())
}

/// External type and property names translated to the local vocabulary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VocabularyMapping {
    pub type_map: BTreeMap<String, Name>,
    pub prop_map: BTreeMap<String, Name>,
    pub drop_unmapped: bool,
}

impl Default for VocabularyMapping {
    fn default() -> Self {
        VocabularyMapping {
            type_map: BTreeMap::new(),
            prop_map: BTreeMap::new(),
            drop_unmapped: true,
        }
    }
}

/// Reads `type <external> -> <local>` and `prop <external> -> <local>` lines,
/// plus an optional `drop-unmapped true|false`.
pub fn parse_mapping(text: &str, location: &str) -> Result<VocabularyMapping> {
    let mut m = VocabularyMapping::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: String| Error::malformed("mapping", format!("{location}:{}", i + 1), msg);
        let (kind, rest) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| at("incomplete line".into()))?;
        if kind == "drop-unmapped" {
            m.drop_unmapped = match rest.trim() {
                "true" => true,
                "false" => false,
                other => return Err(at(format!("expected true or false, got `{other}`"))),
            };
            continue;
        }
        let (from, to) = rest
            .split_once("->")
            .ok_or_else(|| at("expected `<external> -> <local>`".into()))?;
        let (from, to) = (from.trim(), to.trim());
        if from.is_empty() || !is_valid_name(to) {
            return Err(at(format!("bad mapping `{from}` -> `{to}`")));
        }
        let table = match kind {
            "type" => &mut m.type_map,
            "prop" => &mut m.prop_map,
            other => return Err(at(format!("unknown mapping kind `{other}`"))),
        };
        table.insert(from.to_string(), Name::from(to));
    }
    Ok(m)
}

/// Individual name standing for a literal or an entity reference: characters
/// outside the name alphabet become `_`.
pub fn value_individual(v: &str) -> Option<Name> {
    let s: String = v
        .trim()
        .chars()
        .map(|c| {
            if is_valid_name(c.encode_utf8(&mut [0; 4])) {
                c
            } else {
                '_'
            }
        })
        .collect();
    (!s.is_empty() && is_valid_name(&s)).then(|| Name::from(s))
}

/// Translates an entity's types and properties into assertions about `ind`.
/// Items without a mapping are dropped, or kept under their external name
/// when the mapping says so and that name is usable.
pub fn extract_axioms(entity: &KbEntity, mapping: &VocabularyMapping, ind: &str) -> Vec<ABoxAxiom> {
    let pass = |ext: &str| (!mapping.drop_unmapped && is_valid_name(ext)).then(|| Name::from(ext));
    let mut out = BTreeSet::new();
    for t in &entity.types {
        if let Some(c) = mapping.type_map.get(t).cloned().or_else(|| pass(t)) {
            out.insert(ABoxAxiom::class(c, ind));
        }
    }
    for (p, v) in &entity.properties {
        let Some(r) = mapping.prop_map.get(p).cloned().or_else(|| pass(p)) else {
            continue;
        };
        if let Some(o) = value_individual(v) {
            out.insert(ABoxAxiom::role(r, ind, o));
        }
    }
    out.into_iter().collect()
}
