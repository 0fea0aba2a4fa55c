use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttributeKind {
    Numeric,
    Categorical,
    /// Two-level categorical attribute.
    Boolean,
}

impl AttributeKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "numeric" | "num" | "real" => Some(AttributeKind::Numeric),
            "categorical" | "cat" | "nominal" => Some(AttributeKind::Categorical),
            "boolean" | "bool" => Some(AttributeKind::Boolean),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<Option<f64>>),
    Categorical {
        levels: Vec<String>,
        codes: Vec<Option<u32>>,
    },
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            Column::Numeric(v) => v[row].is_none(),
            Column::Categorical { codes, .. } => codes[row].is_none(),
        }
    }

    pub fn numeric(&self, row: usize) -> Option<f64> {
        match self {
            Column::Numeric(v) => v[row],
            Column::Categorical { .. } => None,
        }
    }

    pub fn code(&self, row: usize) -> Option<u32> {
        match self {
            Column::Numeric(_) => None,
            Column::Categorical { codes, .. } => codes[row],
        }
    }

    /// Cell rendered back to its file token; missing renders as the empty string.
    pub fn token(&self, row: usize) -> String {
        match self {
            Column::Numeric(v) => v[row].map(|x| format!("{x}")).unwrap_or_default(),
            Column::Categorical { levels, codes } => codes[row]
                .map(|c| levels[c as usize].clone())
                .unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
    pub column: Column,
}

impl Attribute {
    pub fn numeric(name: impl Into<String>, values: Vec<Option<f64>>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Numeric,
            column: Column::Numeric(values),
        }
    }

    pub fn categorical(name: impl Into<String>, tokens: &[Option<&str>]) -> Self {
        let (levels, codes) = encode_levels(tokens.iter().map(|t| t.map(str::to_string)));
        Attribute {
            name: name.into(),
            kind: AttributeKind::Categorical,
            column: Column::Categorical { levels, codes },
        }
    }

    pub fn level_index(&self, level: &str) -> Option<u32> {
        match &self.column {
            Column::Categorical { levels, .. } => {
                levels.iter().position(|l| l == level).map(|i| i as u32)
            }
            Column::Numeric(_) => None,
        }
    }
}

/// Levels in sorted order so that codes do not depend on row order.
fn encode_levels<I: Iterator<Item = Option<String>>>(tokens: I) -> (Vec<String>, Vec<Option<u32>>) {
    let tokens: Vec<Option<String>> = tokens.collect();
    let levels: Vec<String> = tokens
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<&str, u32> = levels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i as u32))
        .collect();
    let codes = tokens
        .iter()
        .map(|t| t.as_deref().map(|s| index[s]))
        .collect();
    (levels, codes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub name: String,
    pub attributes: Vec<Attribute>,
    n_rows: usize,
}

impl View {
    pub fn new(name: impl Into<String>, n_rows: usize, attributes: Vec<Attribute>) -> Result<Self> {
        let name = name.into();
        let mut seen = HashSet::new();
        for a in &attributes {
            if a.column.len() != n_rows {
                return Err(Error::Alignment(format!(
                    "attribute `{}` of view `{name}` has {} rows, expected {n_rows}",
                    a.name,
                    a.column.len()
                )));
            }
            if !seen.insert(a.name.as_str()) {
                return Err(Error::config(format!(
                    "duplicate attribute `{}` in view `{name}`",
                    a.name
                )));
            }
        }
        Ok(View {
            name,
            attributes,
            n_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub entities: Vec<String>,
    pub views: Vec<View>,
}

impl Dataset {
    pub fn new(entities: Vec<String>, views: Vec<View>) -> Result<Self> {
        if views.len() < 2 {
            return Err(Error::config(format!(
                "a dataset needs at least two views, got {}",
                views.len()
            )));
        }
        let mut names = HashSet::new();
        for v in &views {
            if v.n_rows() != entities.len() {
                return Err(Error::Alignment(format!(
                    "view `{}` has {} rows but the dataset has {} entities",
                    v.name,
                    v.n_rows(),
                    entities.len()
                )));
            }
            if !names.insert(v.name.as_str()) {
                return Err(Error::config(format!("duplicate view name `{}`", v.name)));
            }
        }
        Ok(Dataset { entities, views })
    }

    pub fn n_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.views.iter().map(View::n_attributes).sum()
    }

    pub fn view_index(&self, name: &str) -> Option<usize> {
        self.views.iter().position(|v| v.name == name)
    }

    pub fn entity_index(&self) -> HashMap<&str, usize> {
        self.entities
            .iter()
            .enumerate()
            .map(|(i, e)| (e.as_str(), i))
            .collect()
    }

    /// Writes each view as `<dir>/<view>.csv` with a leading `id` column.
    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut paths = Vec::new();
        for view in &self.views {
            let path = dir.join(format!("{}.csv", view.name));
            let mut w = csv::Writer::from_path(&path).map_err(|e| csv_io(&path, e))?;
            let mut header = vec!["id".to_string()];
            header.extend(view.attributes.iter().map(|a| a.name.clone()));
            w.write_record(&header).map_err(|e| csv_io(&path, e))?;
            for (row, id) in self.entities.iter().enumerate() {
                let mut rec = vec![id.clone()];
                rec.extend(view.attributes.iter().map(|a| a.column.token(row)));
                w.write_record(&rec).map_err(|e| csv_io(&path, e))?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            paths.push(path);
        }
        Ok(paths)
    }
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

/// How one view file is to be read.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewSource {
    pub name: String,
    pub path: PathBuf,
    /// Per-attribute kind overrides; unlisted attributes are inferred.
    pub kinds: Vec<(String, AttributeKind)>,
}

struct RawTable {
    path: PathBuf,
    ids: Option<Vec<String>>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_io(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_io(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let has_id = header.first().is_some_and(|h| h.eq_ignore_ascii_case("id"));
    let mut ids = has_id.then(Vec::new);
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            file: path.to_path_buf(),
            row: i + 2,
            column: 0,
            message: e.to_string(),
        })?;
        if rec.len() != header.len() {
            return Err(Error::Parse {
                file: path.to_path_buf(),
                row: i + 2,
                column: rec.len(),
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let mut fields: Vec<String> = rec.iter().map(str::to_string).collect();
        if let Some(ids) = ids.as_mut() {
            ids.push(fields.remove(0));
        }
        rows.push(fields);
    }
    let header = if has_id { header[1..].to_vec() } else { header };
    Ok(RawTable {
        path: path.to_path_buf(),
        ids,
        header,
        rows,
    })
}

fn is_boolean_token(t: &str) -> bool {
    matches!(t.to_ascii_lowercase().as_str(), "0" | "1" | "true" | "false")
}

fn infer_kind(cells: &[&str]) -> AttributeKind {
    let present: Vec<&str> = cells.iter().copied().filter(|c| !c.is_empty()).collect();
    let distinct: BTreeSet<&str> = present.iter().copied().collect();
    if !distinct.is_empty() && distinct.len() <= 2 && distinct.iter().all(|t| is_boolean_token(t)) {
        AttributeKind::Boolean
    } else if present.iter().all(|c| c.parse::<f64>().is_ok_and(f64::is_finite)) {
        AttributeKind::Numeric
    } else {
        AttributeKind::Categorical
    }
}

fn build_view(table: &RawTable, source: &ViewSource, order: &[usize]) -> Result<View> {
    let overrides: HashMap<&str, AttributeKind> = source
        .kinds
        .iter()
        .map(|(n, k)| (n.as_str(), *k))
        .collect();
    for name in overrides.keys() {
        if !table.header.iter().any(|h| h == name) {
            return Err(Error::config(format!(
                "kind override for unknown attribute `{name}` in view `{}`",
                source.name
            )));
        }
    }
    let mut attributes = Vec::with_capacity(table.header.len());
    let col_offset = usize::from(table.ids.is_some());
    for (c, name) in table.header.iter().enumerate() {
        let cells: Vec<&str> = order.iter().map(|&r| table.rows[r][c].as_str()).collect();
        let kind = overrides
            .get(name.as_str())
            .copied()
            .unwrap_or_else(|| infer_kind(&cells));
        let column = match kind {
            AttributeKind::Numeric => {
                let mut values = Vec::with_capacity(cells.len());
                for (i, cell) in cells.iter().enumerate() {
                    if cell.is_empty() {
                        values.push(None);
                        continue;
                    }
                    match cell.parse::<f64>() {
                        Ok(x) if x.is_finite() => values.push(Some(x)),
                        _ => {
                            return Err(Error::Parse {
                                file: table.path.clone(),
                                row: order[i] + 2,
                                column: c + 1 + col_offset,
                                message: format!(
                                    "non-numeric token `{cell}` in numeric column `{name}`"
                                ),
                            })
                        }
                    }
                }
                Column::Numeric(values)
            }
            AttributeKind::Categorical | AttributeKind::Boolean => {
                let (levels, codes) = encode_levels(
                    cells
                        .iter()
                        .map(|c| (!c.is_empty()).then(|| c.to_string())),
                );
                if kind == AttributeKind::Boolean && levels.len() > 2 {
                    return Err(Error::Parse {
                        file: table.path.clone(),
                        row: 1,
                        column: c + 1 + col_offset,
                        message: format!("boolean column `{name}` has {} levels", levels.len()),
                    });
                }
                Column::Categorical { levels, codes }
            }
        };
        attributes.push(Attribute {
            name: name.clone(),
            kind,
            column,
        });
    }
    View::new(source.name.clone(), order.len(), attributes)
}

/// Loads one CSV file per view and aligns their rows into a [`Dataset`].
///
/// Views are aligned by their `id` column when every file has one, and by row
/// position otherwise.
pub fn load_dataset(sources: &[ViewSource]) -> Result<Dataset> {
    if sources.len() < 2 {
        return Err(Error::config("at least two views are required"));
    }
    let tables = sources
        .iter()
        .map(|s| read_table(&s.path))
        .collect::<Result<Vec<_>>>()?;
    let first = &tables[0];
    let by_id = tables.iter().all(|t| t.ids.is_some());
    let entities: Vec<String> = match &first.ids {
        Some(ids) if by_id => ids.clone(),
        _ => (0..first.rows.len()).map(|i| format!("e{i}")).collect(),
    };
    let mut views = Vec::with_capacity(sources.len());
    for (table, source) in tables.iter().zip(sources) {
        if table.rows.len() != first.rows.len() {
            return Err(Error::Alignment(format!(
                "{} has {} rows but {} has {}",
                first.path.display(),
                first.rows.len(),
                table.path.display(),
                table.rows.len()
            )));
        }
        let order: Vec<usize> = if by_id {
            let ids = table.ids.as_ref().expect("checked by_id");
            let index: HashMap<&str, usize> =
                ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
            if index.len() != ids.len() {
                return Err(Error::Alignment(format!(
                    "{} contains duplicate ids",
                    table.path.display()
                )));
            }
            entities
                .iter()
                .map(|e| {
                    index.get(e.as_str()).copied().ok_or_else(|| {
                        Error::Alignment(format!(
                            "entity `{e}` of {} is missing from {}",
                            first.path.display(),
                            table.path.display()
                        ))
                    })
                })
                .collect::<Result<_>>()?
        } else {
            (0..table.rows.len()).collect()
        };
        views.push(build_view(table, source, &order)?);
    }
    Dataset::new(entities, views)
}
