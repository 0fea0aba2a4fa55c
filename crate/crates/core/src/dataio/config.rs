//! Run configuration: constraints, settings and the view descriptor.
//!
//! The file is TOML. Every key is optional except the view list; defaults are
//! filled in by [`ConfigFile::resolve`], which needs the entity count for the
//! default maximal support.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::dataset::{load_dataset, AttributeKind, Dataset, ViewSource};
use crate::error::{Error, Result};

pub const SEED_ENV: &str = "REDESCRIBE_SEED";

pub const DEFAULT_MAX_PVALUE: f64 = 0.01;
pub const DEFAULT_WEIGHT: f64 = 0.2;
pub const DEFAULT_KC: usize = 20;
pub const DEFAULT_TARGET_BATCH: usize = 100;
pub const DEFAULT_MAX_SUPPORT_FRACTION: f64 = 0.9;

/// Logical operators allowed when building queries. Conjunction is always on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Operators {
    pub disjunction: bool,
    pub negation: bool,
}

impl Operators {
    pub const ALL: Operators = Operators {
        disjunction: true,
        negation: true,
    };
    pub const CONJUNCTION_ONLY: Operators = Operators {
        disjunction: false,
        negation: false,
    };

    fn from_names(names: &[String]) -> Result<Self> {
        let mut ops = Operators::CONJUNCTION_ONLY;
        for n in names {
            match n.as_str() {
                "and" | "&" => {}
                "or" | "|" => ops.disjunction = true,
                "not" | "!" => ops.negation = true,
                "all" => ops = Operators::ALL,
                other => return Err(Error::config(format!("unknown operator `{other}`"))),
            }
        }
        Ok(ops)
    }

    fn names(&self) -> Vec<String> {
        let mut v = vec!["and".to_string()];
        if self.disjunction {
            v.push("or".into());
        }
        if self.negation {
            v.push("not".into());
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraints {
    pub min_jaccard: f64,
    /// Minimal accuracy for a candidate to enter conjunctive refinement.
    pub min_jaccard_refine: f64,
    pub max_pvalue: f64,
    pub min_support: usize,
    pub max_support: usize,
    pub work_set_size: usize,
    pub max_expansion_size: usize,
    /// Trees in the supplementing forest; 0 disables it.
    pub num_supplement_models: usize,
    pub max_rule_len: usize,
    pub num_target_batch: usize,
    pub operators: Operators,
}

impl Constraints {
    /// Defaults for a dataset with `n_entities` entities.
    pub fn defaults(n_entities: usize) -> Self {
        Constraints {
            min_jaccard: 0.5,
            min_jaccard_refine: 0.4,
            max_pvalue: DEFAULT_MAX_PVALUE,
            min_support: 5.min(n_entities.max(1)),
            max_support: default_max_support(n_entities),
            work_set_size: 1000,
            max_expansion_size: 4000,
            num_supplement_models: 0,
            max_rule_len: 8,
            num_target_batch: DEFAULT_TARGET_BATCH,
            operators: Operators::ALL,
        }
    }

    /// Threshold `t` of the memory model: the floor of the mean of the two budgets.
    pub fn memory_threshold(&self) -> usize {
        (self.max_expansion_size + self.work_set_size) / 2
    }

    pub fn support_ok(&self, size: usize) -> bool {
        size >= self.min_support && size <= self.max_support
    }

    pub fn validate(&self, n_entities: usize) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(format!("{name} = {v} is outside [0, 1]")))
            }
        };
        unit("min_jaccard", self.min_jaccard)?;
        unit("min_jaccard_refine", self.min_jaccard_refine)?;
        unit("max_pvalue", self.max_pvalue)?;
        if self.min_jaccard_refine > self.min_jaccard {
            return Err(Error::config(format!(
                "min_jaccard_refine ({}) exceeds min_jaccard ({})",
                self.min_jaccard_refine, self.min_jaccard
            )));
        }
        if self.min_support < 1 {
            return Err(Error::config("min_support must be at least 1"));
        }
        if self.max_support > n_entities {
            return Err(Error::config(format!(
                "max_support ({}) exceeds the number of entities ({n_entities})",
                self.max_support
            )));
        }
        if self.min_support > self.max_support {
            return Err(Error::config(format!(
                "min_support ({}) exceeds max_support ({})",
                self.min_support, self.max_support
            )));
        }
        if self.work_set_size > self.max_expansion_size {
            return Err(Error::config(format!(
                "work_set_size ({}) exceeds max_expansion_size ({})",
                self.work_set_size, self.max_expansion_size
            )));
        }
        if self.max_expansion_size == 0 {
            return Err(Error::config("max_expansion_size must be positive"));
        }
        if self.max_rule_len == 0 || self.num_target_batch == 0 {
            return Err(Error::config(
                "max_rule_len and num_target_batch must be positive",
            ));
        }
        Ok(())
    }
}

pub fn default_max_support(n_entities: usize) -> usize {
    (DEFAULT_MAX_SUPPORT_FRACTION * n_entities as f64).floor() as usize
}

/// Rows of weights over (J, p-value, AAJ, AEJ, complexity); one output set per row.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: Vec<[f64; 5]>,
}

impl WeightMatrix {
    pub fn new(rows: Vec<[f64; 5]>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::config("weight matrix needs at least one row"));
        }
        for row in &rows {
            if row.iter().any(|w| !(0.0..=1.0).contains(w)) {
                return Err(Error::config(format!("weights {row:?} must lie in [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::config(format!(
                    "weights {row:?} sum to {sum}, expected 1"
                )));
            }
        }
        Ok(WeightMatrix { rows })
    }

    pub fn uniform() -> Self {
        WeightMatrix {
            rows: vec![[DEFAULT_WEIGHT; 5]],
        }
    }

    pub fn single(row: [f64; 5]) -> Result<Self> {
        Self::new(vec![row])
    }

    pub fn rows(&self) -> &[[f64; 5]] {
        &self.rows
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratingModel {
    Pct,
    /// `trees` Extra-PCTs, each testing `k` random candidate splits per node.
    ExtraPct { trees: usize, k: Option<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SupplementingModel {
    None,
    /// Random attribute subspaces; `p` is the probability that an attribute
    /// appears in some tree and `z` the divisor of the subspace formula
    /// (defaults to the number of trees).
    Subspace { p: f64, z: Option<usize> },
    Extra { k: Option<usize> },
    /// Random output selections on bagged samples.
    Ros { target_fraction: Option<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub n_random_restarts: usize,
    pub max_iter: usize,
    pub output_set_size: usize,
    pub weights: WeightMatrix,
    pub seed: u64,
    pub generating_model: GeneratingModel,
    pub supplementing_model: SupplementingModel,
    pub expected_out_size: usize,
    pub k_c: usize,
    pub min_leaf: usize,
    /// Number of view pairs sampled per restart; `None` visits all pairs.
    pub view_pairs: Option<usize>,
    /// Entity-Jaccard threshold of the naive baseline's redundancy filter.
    pub redundancy_threshold: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            n_random_restarts: 1,
            max_iter: 5,
            output_set_size: 200,
            weights: WeightMatrix::uniform(),
            seed: 0,
            generating_model: GeneratingModel::Pct,
            supplementing_model: SupplementingModel::None,
            expected_out_size: 200,
            k_c: DEFAULT_KC,
            min_leaf: 5,
            view_pairs: None,
            redundancy_threshold: 0.95,
        }
    }
}

impl Settings {
    pub fn validate(&self, n_views: usize) -> Result<()> {
        if self.output_set_size < 1 {
            return Err(Error::config("output_set_size must be at least 1"));
        }
        if self.expected_out_size < 1 || self.k_c < 1 || self.min_leaf < 1 {
            return Err(Error::config(
                "expected_out_size, k_c and min_leaf must be at least 1",
            ));
        }
        if !(self.redundancy_threshold > 0.0 && self.redundancy_threshold <= 1.0) {
            return Err(Error::config("redundancy_threshold must lie in (0, 1]"));
        }
        let pairs = n_views * n_views.saturating_sub(1) / 2;
        if let Some(m) = self.view_pairs {
            if m == 0 || m > pairs {
                return Err(Error::config(format!(
                    "view_pairs = {m} but only {pairs} view pairs exist"
                )));
            }
        }
        match &self.generating_model {
            GeneratingModel::ExtraPct { trees: 0, .. } => {
                return Err(Error::config("extra_pct needs at least one tree"))
            }
            GeneratingModel::ExtraPct { k: Some(0), .. } => {
                return Err(Error::config("extra_pct k must be at least 1"))
            }
            _ => {}
        }
        match &self.supplementing_model {
            SupplementingModel::Subspace { p, .. } if !(*p > 0.0 && *p < 1.0) => {
                Err(Error::config("subspace p must lie in (0, 1)"))
            }
            SupplementingModel::Ros {
                target_fraction: Some(f),
            } if !(*f > 0.0 && *f <= 1.0) => {
                Err(Error::config("ros target_fraction must lie in (0, 1]"))
            }
            _ => Ok(()),
        }
    }
}

// ---------------------------------------------------------------------------
// File format

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewEntry {
    pub name: String,
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    pub kinds: std::collections::BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub views: Vec<ViewEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsSection {
    pub min_jaccard: Option<f64>,
    pub min_jaccard_refine: Option<f64>,
    pub max_pvalue: Option<f64>,
    pub min_support: Option<usize>,
    pub max_support: Option<usize>,
    pub work_set_size: Option<usize>,
    pub max_expansion_size: Option<usize>,
    pub num_supplement_models: Option<usize>,
    pub max_rule_len: Option<usize>,
    pub num_target_batch: Option<usize>,
    pub operators: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingsSection {
    pub n_random_restarts: Option<usize>,
    pub max_iter: Option<usize>,
    pub output_set_size: Option<usize>,
    pub weights: Option<Vec<[f64; 5]>>,
    pub seed: Option<u64>,
    pub generating_model: Option<GeneratingModel>,
    pub supplementing_model: Option<SupplementingModel>,
    pub expected_out_size: Option<usize>,
    pub k_c: Option<usize>,
    pub min_leaf: Option<usize>,
    pub view_pairs: Option<usize>,
    pub redundancy_threshold: Option<f64>,
}

/// The config file as written, before defaults are applied.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub dataset: DatasetSection,
    #[serde(default)]
    pub constraints: ConstraintsSection,
    #[serde(default)]
    pub settings: SettingsSection,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config sections serialize")
    }

    /// View sources with paths resolved against `base`.
    pub fn view_sources(&self, base: &Path) -> Result<Vec<ViewSource>> {
        self.dataset
            .views
            .iter()
            .map(|v| {
                let kinds = v
                    .kinds
                    .iter()
                    .map(|(attr, kind)| {
                        AttributeKind::parse(kind)
                            .map(|k| (attr.clone(), k))
                            .ok_or_else(|| {
                                Error::config(format!("unknown attribute kind `{kind}` for `{attr}`"))
                            })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(ViewSource {
                    name: v.name.clone(),
                    path: base.join(&v.path),
                    kinds,
                })
            })
            .collect()
    }

    /// Applies defaults and validates against a dataset of the given shape.
    pub fn resolve(&self, n_entities: usize, n_views: usize) -> Result<(Constraints, Settings)> {
        let c = &self.constraints;
        let d = Constraints::defaults(n_entities);
        let min_jaccard = c.min_jaccard.unwrap_or(d.min_jaccard);
        let constraints = Constraints {
            min_jaccard,
            min_jaccard_refine: c
                .min_jaccard_refine
                .unwrap_or_else(|| (min_jaccard - 0.1).max(0.0)),
            max_pvalue: c.max_pvalue.unwrap_or(d.max_pvalue),
            min_support: c.min_support.unwrap_or(d.min_support),
            max_support: c.max_support.unwrap_or(d.max_support),
            work_set_size: c.work_set_size.unwrap_or(d.work_set_size),
            max_expansion_size: c.max_expansion_size.unwrap_or(d.max_expansion_size),
            num_supplement_models: c.num_supplement_models.unwrap_or(d.num_supplement_models),
            max_rule_len: c.max_rule_len.unwrap_or(d.max_rule_len),
            num_target_batch: c.num_target_batch.unwrap_or(d.num_target_batch),
            operators: match &c.operators {
                Some(names) => Operators::from_names(names)?,
                None => d.operators,
            },
        };
        constraints.validate(n_entities)?;

        let s = &self.settings;
        let d = Settings::default();
        let settings = Settings {
            n_random_restarts: s.n_random_restarts.unwrap_or(d.n_random_restarts),
            max_iter: s.max_iter.unwrap_or(d.max_iter),
            output_set_size: s.output_set_size.unwrap_or(d.output_set_size),
            weights: match &s.weights {
                Some(rows) => WeightMatrix::new(rows.clone())?,
                None => d.weights,
            },
            seed: s.seed.unwrap_or(d.seed),
            generating_model: s.generating_model.clone().unwrap_or(d.generating_model),
            supplementing_model: s
                .supplementing_model
                .clone()
                .unwrap_or(d.supplementing_model),
            expected_out_size: s.expected_out_size.unwrap_or(d.expected_out_size),
            k_c: s.k_c.unwrap_or(d.k_c),
            min_leaf: s.min_leaf.unwrap_or(d.min_leaf),
            view_pairs: s.view_pairs,
            redundancy_threshold: s.redundancy_threshold.unwrap_or(d.redundancy_threshold),
        };
        settings.validate(n_views)?;
        let supplementing = settings.supplementing_model != SupplementingModel::None;
        if supplementing != (constraints.num_supplement_models > 0) {
            return Err(Error::config(
                "num_supplement_models must be positive exactly when a supplementing model is configured",
            ));
        }
        Ok((constraints, settings))
    }

    /// A config file with every key spelled out, equivalent to `constraints` and `settings`.
    pub fn fully_specified(
        dataset: DatasetSection,
        constraints: &Constraints,
        settings: &Settings,
    ) -> Self {
        ConfigFile {
            dataset,
            constraints: ConstraintsSection {
                min_jaccard: Some(constraints.min_jaccard),
                min_jaccard_refine: Some(constraints.min_jaccard_refine),
                max_pvalue: Some(constraints.max_pvalue),
                min_support: Some(constraints.min_support),
                max_support: Some(constraints.max_support),
                work_set_size: Some(constraints.work_set_size),
                max_expansion_size: Some(constraints.max_expansion_size),
                num_supplement_models: Some(constraints.num_supplement_models),
                max_rule_len: Some(constraints.max_rule_len),
                num_target_batch: Some(constraints.num_target_batch),
                operators: Some(constraints.operators.names()),
            },
            settings: SettingsSection {
                n_random_restarts: Some(settings.n_random_restarts),
                max_iter: Some(settings.max_iter),
                output_set_size: Some(settings.output_set_size),
                weights: Some(settings.weights.rows().to_vec()),
                seed: Some(settings.seed),
                generating_model: Some(settings.generating_model.clone()),
                supplementing_model: Some(settings.supplementing_model.clone()),
                expected_out_size: Some(settings.expected_out_size),
                k_c: Some(settings.k_c),
                min_leaf: Some(settings.min_leaf),
                view_pairs: settings.view_pairs,
                redundancy_threshold: Some(settings.redundancy_threshold),
            },
        }
    }
}

/// A loaded dataset together with its resolved configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub path: Option<PathBuf>,
    pub file: ConfigFile,
    pub dataset: Dataset,
    pub constraints: Constraints,
    pub settings: Settings,
}

impl RunConfig {
    /// Canonical fully-resolved config text; used as the config digest input.
    pub fn resolved_toml(&self) -> String {
        ConfigFile::fully_specified(self.file.dataset.clone(), &self.constraints, &self.settings)
            .to_toml()
    }
}

/// Reads the config at `path`, loads its views (relative to the config's
/// directory) and resolves all defaults. `REDESCRIBE_SEED` overrides the seed.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = ConfigFile::parse(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let dataset = load_dataset(&file.view_sources(base)?)?;
    let (constraints, mut settings) = file.resolve(dataset.n_entities(), dataset.n_views())?;
    if let Some(seed) = seed_from_env()? {
        settings.seed = seed;
    }
    Ok(RunConfig {
        path: Some(path.to_path_buf()),
        file,
        dataset,
        constraints,
        settings,
    })
}

pub fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| Error::config(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[dataset]
views = [{ name = "A", path = "a.csv" }, { name = "B", path = "b.csv" }]
"#;

    #[test]
    fn defaults_applied() {
        let f = ConfigFile::parse(MINIMAL).unwrap();
        let (c, s) = f.resolve(141, 2).unwrap();
        assert_eq!(c.max_pvalue, 0.01);
        assert_eq!(c.max_support, 126);
        assert_eq!(c.num_target_batch, 100);
        assert_eq!(s.k_c, 20);
        assert_eq!(s.weights.rows(), &[[0.2; 5]]);
    }

    #[test]
    fn weights_must_sum_to_one() {
        let text = format!("{MINIMAL}\n[settings]\nweights = [[0.5, 0.5, 0.5, 0.0, 0.0]]\n");
        let err = ConfigFile::parse(&text).unwrap().resolve(100, 2).unwrap_err();
        assert!(err.to_string().contains("sum"), "{err}");
    }

    #[test]
    fn work_set_cannot_exceed_max_expansion() {
        let text = format!("{MINIMAL}\n[constraints]\nwork_set_size = 10\nmax_expansion_size = 5\n");
        let err = ConfigFile::parse(&text).unwrap().resolve(100, 2).unwrap_err();
        assert!(err.to_string().contains("work_set_size"), "{err}");
    }

    #[test]
    fn refine_threshold_not_above_min_jaccard() {
        let text = format!("{MINIMAL}\n[constraints]\nmin_jaccard = 0.3\nmin_jaccard_refine = 0.5\n");
        assert!(ConfigFile::parse(&text).unwrap().resolve(100, 2).is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{MINIMAL}\n[settings]\nseeed = 3\n");
        assert!(ConfigFile::parse(&text).is_err());
    }

    #[test]
    fn model_specs_parse() {
        let text = format!(
            "{MINIMAL}\n[constraints]\nnum_supplement_models = 20\n[settings]\n\
             generating_model = {{ kind = \"extra_pct\", trees = 2, k = 5 }}\n\
             supplementing_model = {{ kind = \"subspace\", p = 0.99 }}\n"
        );
        let (_, s) = ConfigFile::parse(&text).unwrap().resolve(100, 3).unwrap();
        assert_eq!(
            s.generating_model,
            GeneratingModel::ExtraPct { trees: 2, k: Some(5) }
        );
        assert_eq!(
            s.supplementing_model,
            SupplementingModel::Subspace { p: 0.99, z: None }
        );
    }

    #[test]
    fn defaulting_is_idempotent() {
        let f = ConfigFile::parse(MINIMAL).unwrap();
        let (c, s) = f.resolve(200, 3).unwrap();
        let full = ConfigFile::fully_specified(f.dataset.clone(), &c, &s);
        let reparsed = ConfigFile::parse(&full.to_toml()).unwrap();
        assert_eq!(reparsed, full);
        let (c2, s2) = reparsed.resolve(200, 3).unwrap();
        assert_eq!((c, s), (c2, s2));
    }

    #[test]
    fn memory_threshold_floors() {
        let mut c = Constraints::defaults(100);
        c.work_set_size = 50;
        c.max_expansion_size = 121;
        assert_eq!(c.memory_threshold(), 85);
    }
}
