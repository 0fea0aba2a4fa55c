//! Datasets, views, run configuration and synthetic data.

mod config;
mod dataset;
mod synthetic;

pub use config::{
    default_max_support, load_config, seed_from_env, ConfigFile, Constraints, ConstraintsSection,
    DatasetSection, GeneratingModel, Operators, RunConfig, Settings, SettingsSection,
    SupplementingModel, ViewEntry, WeightMatrix, DEFAULT_KC, DEFAULT_MAX_PVALUE,
    DEFAULT_TARGET_BATCH, SEED_ENV,
};
pub use dataset::{load_dataset, Attribute, AttributeKind, Column, Dataset, View, ViewSource};
pub use synthetic::{
    generate_synthetic, PlantedBlock, SyntheticData, SyntheticSpec, PLANTED_HI, PLANTED_LO,
};
