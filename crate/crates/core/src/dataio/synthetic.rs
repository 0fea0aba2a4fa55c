//! Planted-block multi-view data for tests and benchmarks.
//!
//! Background cells are uniform on `[0, 1)`. Each block owns
//! `attrs_per_block` attributes in every view; its members take values in
//! `[1.0, 1.2)` there, so the block is exactly the support of a conjunction of
//! interval literals in each view. With probability `noise` a planted cell is
//! redrawn uniformly from `[0, 1.2)`, which can push members out of the
//! interval and non-members into it.

use rand::seq::SliceRandom;
use rand::Rng;

use super::dataset::{Attribute, Dataset, View};
use crate::entities::EntitySet;
use crate::error::{Error, Result};
use crate::rng::SeedStream;

pub const PLANTED_LO: f64 = 1.0;
pub const PLANTED_HI: f64 = 1.2;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_entities: usize,
    pub n_views: usize,
    pub attrs_per_view: usize,
    pub block_sizes: Vec<usize>,
    pub attrs_per_block: usize,
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// `n_blocks` disjoint blocks of `block_size` entities, two planted attributes per view.
    pub fn blocks(
        n_entities: usize,
        n_views: usize,
        attrs_per_view: usize,
        n_blocks: usize,
        block_size: usize,
        noise: f64,
        seed: u64,
    ) -> Self {
        SyntheticSpec {
            n_entities,
            n_views,
            attrs_per_view,
            block_sizes: vec![block_size; n_blocks],
            attrs_per_block: 2,
            noise,
            seed,
        }
    }

    /// The benchmark used throughout the test suites: 200 entities, three
    /// views of ten attributes, three blocks of 30.
    pub fn benchmark(noise: f64, seed: u64) -> Self {
        Self::blocks(200, 3, 10, 3, 30, noise, seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedBlock {
    pub members: EntitySet,
    /// Planted attribute indices, one list per view.
    pub attributes: Vec<Vec<usize>>,
}

impl PlantedBlock {
    /// Query text selecting the block's planted interval in `view`.
    pub fn query_text(&self, dataset: &Dataset, view: usize) -> String {
        self.attributes[view]
            .iter()
            .map(|&a| {
                format!(
                    "{PLANTED_LO:?} <= {} <= {PLANTED_HI:?}",
                    dataset.views[view].attributes[a].name
                )
            })
            .collect::<Vec<_>>()
            .join(" & ")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub dataset: Dataset,
    pub blocks: Vec<PlantedBlock>,
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    let n = spec.n_entities;
    if spec.n_views < 2 {
        return Err(Error::config("synthetic data needs at least two views"));
    }
    if !(0.0..=1.0).contains(&spec.noise) {
        return Err(Error::config(format!("noise {} outside [0, 1]", spec.noise)));
    }
    for &b in &spec.block_sizes {
        if b > n {
            return Err(Error::config(format!(
                "block of {b} entities exceeds the {n} available"
            )));
        }
    }
    let total: usize = spec.block_sizes.iter().sum();
    if total > n {
        return Err(Error::config(format!(
            "disjoint blocks need {total} entities but only {n} exist"
        )));
    }
    let planted_attrs = spec.block_sizes.len() * spec.attrs_per_block;
    if planted_attrs > spec.attrs_per_view {
        return Err(Error::config(format!(
            "{planted_attrs} planted attributes do not fit in {} attributes per view",
            spec.attrs_per_view
        )));
    }

    let root = SeedStream::new(spec.seed);
    let mut rng = root.child("blocks").rng();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut blocks = Vec::new();
    let mut offset = 0;
    for (b, &size) in spec.block_sizes.iter().enumerate() {
        let members = EntitySet::from_indices(n, order[offset..offset + size].iter().copied());
        offset += size;
        let attrs: Vec<usize> =
            (b * spec.attrs_per_block..(b + 1) * spec.attrs_per_block).collect();
        blocks.push(PlantedBlock {
            members,
            attributes: vec![attrs; spec.n_views],
        });
    }

    let mut views = Vec::with_capacity(spec.n_views);
    for v in 0..spec.n_views {
        let mut rng = root.child_idx("view", v).rng();
        let mut columns: Vec<Vec<f64>> = (0..spec.attrs_per_view)
            .map(|_| (0..n).map(|_| rng.gen::<f64>()).collect())
            .collect();
        for block in &blocks {
            for &a in &block.attributes[v] {
                for e in block.members.iter() {
                    columns[a][e] = rng.gen_range(PLANTED_LO..PLANTED_HI);
                }
            }
        }
        if spec.noise > 0.0 {
            for block in &blocks {
                for &a in &block.attributes[v] {
                    for cell in columns[a].iter_mut() {
                        if rng.gen::<f64>() < spec.noise {
                            *cell = rng.gen_range(0.0..PLANTED_HI);
                        }
                    }
                }
            }
        }
        let attributes = columns
            .into_iter()
            .enumerate()
            .map(|(a, col)| Attribute::numeric(format!("v{v}_a{a}"), col.into_iter().map(Some).collect()))
            .collect();
        views.push(View::new(format!("v{v}"), n, attributes)?);
    }
    let width = n.to_string().len();
    let entities = (0..n).map(|i| format!("e{i:0width$}")).collect();
    Ok(SyntheticData {
        dataset: Dataset::new(entities, views)?,
        blocks,
    })
}
