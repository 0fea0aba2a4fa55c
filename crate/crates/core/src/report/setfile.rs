//! On-disk format of a redescription set.
//!
//! A set file is TOML: optional run metadata, an optional `[scores]` table and
//! one `[[redescription]]` table per redescription whose `queries` map view
//! names to query text. Only the queries are needed to read a file back; the
//! support list and statistics are informative and recomputed on load.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{MeasureScores, SetScores};
use crate::query::{format_query, parse_query, Redescription};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureRecord {
    pub j_sc: f64,
    pub p_sc: f64,
    pub aaj_sc: f64,
    pub aej_sc: f64,
    pub comp_sc: f64,
    pub total_sc: f64,
}

impl From<MeasureScores> for MeasureRecord {
    fn from(m: MeasureScores) -> Self {
        MeasureRecord {
            j_sc: m.j_sc,
            p_sc: m.p_sc,
            aaj_sc: m.aaj_sc,
            aej_sc: m.aej_sc,
            comp_sc: m.comp_sc,
            total_sc: m.total_sc,
        }
    }
}

impl MeasureRecord {
    pub const NAMES: [&'static str; 6] = ["j_sc", "p_sc", "aaj_sc", "aej_sc", "comp_sc", "total_sc"];

    pub fn values(&self) -> [f64; 6] {
        [self.j_sc, self.p_sc, self.aaj_sc, self.aej_sc, self.comp_sc, self.total_sc]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoresRecord {
    pub size: usize,
    pub expected_size: usize,
    pub weights: [f64; 5],
    pub entity_coverage: f64,
    pub attribute_coverage: f64,
    pub underlined_avg_jaccard: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avg_jaccard: Option<f64>,
    pub underlined: MeasureRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plain: Option<MeasureRecord>,
}

impl ScoresRecord {
    pub fn new(s: &SetScores, weights: [f64; 5], expected_size: usize) -> Self {
        ScoresRecord {
            size: s.size,
            expected_size,
            weights,
            entity_coverage: s.entity_coverage,
            attribute_coverage: s.attribute_coverage,
            underlined_avg_jaccard: s.underlined_avg_jaccard,
            avg_jaccard: s.avg_jaccard,
            underlined: s.underlined.into(),
            plain: s.plain.map(Into::into),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedescriptionRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jaccard: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pvalue: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub support: Vec<String>,
    pub queries: BTreeMap<String, String>,
}

/// Run statistics of the naive baseline, stored alongside its set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NaiveStatsRecord {
    pub pair_sizes: Vec<(usize, usize, usize)>,
    pub fold_sizes: Vec<usize>,
    pub peak: usize,
    pub complete: usize,
    pub output: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SetFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_row: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<ScoresRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<NaiveStatsRecord>,
    #[serde(default)]
    pub redescription: Vec<RedescriptionRecord>,
}

pub fn record_of(r: &Redescription, dataset: &Dataset) -> RedescriptionRecord {
    let queries = (0..r.n_slots())
        .filter_map(|v| {
            r.query(v)
                .map(|q| (dataset.views[v].name.clone(), format_query(q, dataset)))
        })
        .collect();
    RedescriptionRecord {
        jaccard: Some(r.jaccard()),
        pvalue: Some(r.pvalue()),
        support_size: Some(r.support().len()),
        support: r.support().iter().map(|e| dataset.entities[e].clone()).collect(),
        queries,
    }
}

/// Parses and evaluates one record's queries.
pub fn redescription_of(rec: &RedescriptionRecord, dataset: &Dataset) -> Result<Redescription> {
    let mut slots = vec![None; dataset.n_views()];
    for (view, text) in &rec.queries {
        let v = dataset.view_index(view).ok_or_else(|| Error::Query {
            query: text.clone(),
            message: format!("unknown view `{view}`"),
        })?;
        let q = parse_query(text, dataset, v).map_err(|e| match e {
            Error::Query { .. } => e,
            other => Error::Query {
                query: text.clone(),
                message: other.to_string(),
            },
        })?;
        slots[v] = Some(q);
    }
    if slots.iter().all(Option::is_none) {
        return Err(Error::Format("a redescription has no queries".into()));
    }
    Redescription::evaluate(dataset, slots)
}

impl SetFile {
    pub fn from_set(set: &[Redescription], dataset: &Dataset) -> Self {
        SetFile {
            redescription: set.iter().map(|r| record_of(r, dataset)).collect(),
            ..Default::default()
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("set file serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    pub fn redescriptions(&self, dataset: &Dataset) -> Result<Vec<Redescription>> {
        self.redescription.iter().map(|r| redescription_of(r, dataset)).collect()
    }
}
