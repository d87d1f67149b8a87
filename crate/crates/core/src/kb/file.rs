//! Tab-separated snapshot: `entity_id  labels  types  properties` per line,
//! labels and types `|`-separated, properties `role=value` pairs
//! `;`-separated. Lines starting with `#` are comments.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

use super::{normalize_label, KbAdapter, KbEntity};

#[derive(Clone, Debug, Default)]
pub struct FileKb {
    entities: Vec<KbEntity>,
    by_id: HashMap<String, usize>,
    by_label: HashMap<String, Vec<usize>>,
}

fn list(field: &str, sep: char) -> Vec<String> {
    field
        .split(sep)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

pub fn parse_kb(text: &str, location: &str) -> Result<Vec<KbEntity>> {
    let mut rd = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .flexible(true)
        .quoting(false)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let at = |msg: String| Error::malformed("knowledge base", format!("{location}:{line}"), msg);
        if rec.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let field = |i: usize| rec.get(i).unwrap_or("");
        let id = field(0).trim();
        if id.is_empty() {
            return Err(at("empty entity id".into()));
        }
        let labels = list(field(1), '|');
        if labels.is_empty() {
            return Err(at(format!("entity `{id}` has no labels")));
        }
        let mut properties = Vec::new();
        for pair in list(field(3), ';') {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| at(format!("property `{pair}` is not `role=value`")))?;
            properties.push((k.trim().to_string(), v.trim().to_string()));
        }
        out.push(KbEntity {
            entity_id: id.to_string(),
            labels,
            types: list(field(2), '|'),
            properties,
        });
    }
    Ok(out)
}

impl FileKb {
    pub fn new(entities: Vec<KbEntity>) -> Result<Self> {
        let mut kb = FileKb::default();
        for e in entities {
            let i = kb.entities.len();
            if kb.by_id.insert(e.entity_id.clone(), i).is_some() {
                return Err(Error::malformed("knowledge base", &e.entity_id, "duplicate entity id"));
            }
            let mut keys: Vec<String> = e.labels.iter().map(|l| normalize_label(l)).collect();
            keys.sort();
            keys.dedup();
            for k in keys {
                kb.by_label.entry(k).or_default().push(i);
            }
            kb.entities.push(e);
        }
        Ok(kb)
    }

    pub fn parse(text: &str, location: &str) -> Result<Self> {
        FileKb::new(parse_kb(text, location)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        FileKb::parse(&text, &path.display().to_string())
    }

    pub fn entities(&self) -> &[KbEntity] {
        &self.entities
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }
}

impl KbAdapter for FileKb {
    /// Matches in file order.
    fn lookup_by_name(&self, name: &str) -> Result<Vec<KbEntity>> {
        Ok(self
            .by_label
            .get(&normalize_label(name))
            .map(|ix| ix.iter().map(|&i| self.entities[i].clone()).collect())
            .unwrap_or_default())
    }

    fn describe(&self, entity_id: &str) -> Result<KbEntity> {
        self.by_id
            .get(entity_id)
            .map(|&i| self.entities[i].clone())
            .ok_or_else(|| Error::malformed("knowledge base", entity_id, "unknown entity"))
    }
}
