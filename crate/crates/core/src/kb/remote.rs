//! HTTP endpoint adapter.
//!
//! Each request is `GET <endpoint>?query=<text>`, where the text is a
//! configured template with `{label}` or `{entity}` substituted. Responses
//! are CSV result tables with a header row. A label lookup answers with an
//! `entity` column (otherwise the first column is used); a describe request
//! answers with `property,value` rows, where `label` and `type` (or
//! `rdfs:label` and `rdf:type`) rows carry labels and types.

use std::time::Duration;

use crate::error::{Error, Result};

use super::{KbAdapter, KbEntity};

#[derive(Clone, Debug)]
pub struct RemoteKb {
    pub endpoint: String,
    pub label_query: String,
    pub describe_query: String,
    agent: ureq::Agent,
}

impl RemoteKb {
    pub fn new(endpoint: impl Into<String>, label_query: impl Into<String>, describe_query: impl Into<String>) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .build();
        RemoteKb {
            endpoint: endpoint.into(),
            label_query: label_query.into(),
            describe_query: describe_query.into(),
            agent: ureq::Agent::new_with_config(config),
        }
    }

    fn fetch(&self, query: &str) -> Result<Vec<csv::StringRecord>> {
        let body = self
            .agent
            .get(&self.endpoint)
            .query("query", query)
            .call()
            .and_then(|mut r| r.body_mut().read_to_string())
            .map_err(|e| Error::KbTransport(format!("{}: {e}", self.endpoint)))?;
        let mut rd = csv::ReaderBuilder::new().flexible(true).from_reader(body.as_bytes());
        let header = rd
            .headers()
            .map_err(|e| Error::KbTransport(format!("unreadable response: {e}")))?
            .clone();
        let mut rows = vec![header];
        for rec in rd.records() {
            rows.push(rec.map_err(|e| Error::KbTransport(format!("unreadable response: {e}")))?);
        }
        Ok(rows)
    }
}

fn column(header: &csv::StringRecord, names: &[&str], fallback: usize) -> usize {
    header
        .iter()
        .position(|h| names.contains(&h.trim()))
        .unwrap_or(fallback)
}

impl KbAdapter for RemoteKb {
    fn lookup_by_name(&self, name: &str) -> Result<Vec<KbEntity>> {
        let rows = self.fetch(&self.label_query.replace("{label}", name))?;
        let col = column(&rows[0], &["entity", "?entity"], 0);
        let mut ids: Vec<String> = Vec::new();
        for r in &rows[1..] {
            if let Some(id) = r.get(col).map(str::trim).filter(|s| !s.is_empty()) {
                if !ids.iter().any(|x| x == id) {
                    ids.push(id.to_string());
                }
            }
        }
        ids.iter().map(|id| self.describe(id)).collect()
    }

    fn describe(&self, entity_id: &str) -> Result<KbEntity> {
        let rows = self.fetch(&self.describe_query.replace("{entity}", entity_id))?;
        let p = column(&rows[0], &["property", "?property", "p"], 0);
        let v = column(&rows[0], &["value", "?value", "o"], 1);
        let mut e = KbEntity {
            entity_id: entity_id.to_string(),
            labels: Vec::new(),
            types: Vec::new(),
            properties: Vec::new(),
        };
        for r in &rows[1..] {
            let (Some(k), Some(val)) = (r.get(p), r.get(v)) else {
                continue;
            };
            let (k, val) = (k.trim(), val.trim().to_string());
            match k {
                "label" | "rdfs:label" => e.labels.push(val),
                "type" | "rdf:type" => e.types.push(val),
                _ => e.properties.push((k.to_string(), val)),
            }
        }
        Ok(e)
    }
}
