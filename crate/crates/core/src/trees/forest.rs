use rand::seq::index::sample;

use super::tree::{grow, Problem, Splitter, TargetMatrix, Tree, TreeParams};
use crate::dataio::{Column, GeneratingModel, SupplementingModel};
use crate::rng::SeedStream;

/// Fraction of rows drawn for each bagged tree.
pub const BAG_FRACTION: f64 = 0.632;
pub const DEFAULT_ROS_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForestKind {
    /// Each tree is a PCT on a random attribute subset.
    Subspace { p: f64, z: usize },
    /// Each tree is an Extra-PCT testing `k` candidates per node.
    Extra { k: usize },
    /// Each tree is a PCT on a bagged row sample and a random target subset.
    Ros { target_fraction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestSpec {
    pub kind: ForestKind,
    pub n_trees: usize,
}

/// Attribute subset size `max(⌈|V|·(1 − (1−p)^{1/z})⌉, ⌈log2 |V|⌉)`, clamped to `|V|`.
pub fn subspace_size(n_attributes: usize, z: usize, p: f64) -> usize {
    assert!(z >= 1 && p > 0.0 && p < 1.0, "invalid subspace parameters");
    if n_attributes == 0 {
        return 0;
    }
    let frac = 1.0 - (1.0 - p).powf(1.0 / z as f64);
    let by_prob = (n_attributes as f64 * frac).ceil() as usize;
    let by_log = (n_attributes as f64).log2().ceil() as usize;
    by_prob.max(by_log).clamp(1, n_attributes)
}

/// Rows drawn per bagged tree: `⌊0.632·|E|⌋`, at least one.
pub fn ros_bag_size(n_rows: usize) -> usize {
    ((BAG_FRACTION * n_rows as f64).floor() as usize).clamp(1.min(n_rows), n_rows)
}

fn all_rows(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// Target columns `0..S` split into consecutive batches of at most `nt`.
pub fn target_batches(n_targets: usize, nt: usize) -> Vec<Vec<usize>> {
    let nt = nt.max(1);
    (0..n_targets)
        .step_by(nt)
        .map(|s| (s..(s + nt).min(n_targets)).collect())
        .collect()
}

/// Plain PCTs, one per target batch.
pub fn train_pct(columns: &[&Column], targets: &TargetMatrix, params: TreeParams, nt: usize) -> Vec<Tree> {
    let attributes: Vec<usize> = (0..columns.len()).collect();
    target_batches(targets.n_targets(), nt)
        .iter()
        .map(|batch| {
            let p = Problem {
                columns,
                targets,
                target_cols: batch,
                attributes: &attributes,
            };
            grow(&p, all_rows(targets.n_rows()), params, &mut Splitter::Exhaustive)
        })
        .collect()
}

/// One Extra-PCT over all targets.
pub fn train_extra_pct(
    columns: &[&Column],
    targets: &TargetMatrix,
    target_cols: &[usize],
    k: usize,
    params: TreeParams,
    seeds: &SeedStream,
) -> Tree {
    assert!(k >= 1, "k must be positive");
    let attributes: Vec<usize> = (0..columns.len()).collect();
    let p = Problem {
        columns,
        targets,
        target_cols,
        attributes: &attributes,
    };
    let mut rng = seeds.rng();
    grow(&p, all_rows(targets.n_rows()), params, &mut Splitter::Random { k, rng: &mut rng })
}

/// Trains `spec.n_trees` randomized trees on the target columns `target_cols`.
///
/// Each tree draws from its own child seed, so the forest does not depend on
/// training order.
pub fn train_forest(
    columns: &[&Column],
    targets: &TargetMatrix,
    target_cols: &[usize],
    spec: &ForestSpec,
    params: TreeParams,
    seeds: &SeedStream,
) -> Vec<Tree> {
    assert!(spec.n_trees >= 1, "a forest needs at least one tree");
    let n_attr = columns.len();
    (0..spec.n_trees)
        .map(|t| {
            let tree_seeds = seeds.child_idx("tree", t);
            match spec.kind {
                ForestKind::Subspace { p, z } => {
                    let mut rng = tree_seeds.rng();
                    let size = subspace_size(n_attr, z, p);
                    let mut attributes = sample(&mut rng, n_attr, size).into_vec();
                    attributes.sort_unstable();
                    let prob = Problem {
                        columns,
                        targets,
                        target_cols,
                        attributes: &attributes,
                    };
                    grow(&prob, all_rows(targets.n_rows()), params, &mut Splitter::Exhaustive)
                }
                ForestKind::Extra { k } => {
                    train_extra_pct(columns, targets, target_cols, k, params, &tree_seeds)
                }
                ForestKind::Ros { target_fraction } => {
                    let mut rng = tree_seeds.rng();
                    let n = targets.n_rows();
                    let mut rows = sample(&mut rng, n, ros_bag_size(n)).into_vec();
                    rows.sort_unstable();
                    let s = target_cols.len();
                    let n_sel = ((target_fraction * s as f64).ceil() as usize).clamp(1.min(s), s);
                    let mut sel: Vec<usize> = sample(&mut rng, s, n_sel)
                        .into_iter()
                        .map(|i| target_cols[i])
                        .collect();
                    sel.sort_unstable();
                    let attributes: Vec<usize> = (0..n_attr).collect();
                    let prob = Problem {
                        columns,
                        targets,
                        target_cols: &sel,
                        attributes: &attributes,
                    };
                    grow(&prob, rows, params, &mut Splitter::Exhaustive)
                }
            }
        })
        .collect()
}

/// Trees of the generating model, one model per target batch.
pub fn train_generating(
    columns: &[&Column],
    targets: &TargetMatrix,
    model: &GeneratingModel,
    params: TreeParams,
    nt: usize,
    seeds: &SeedStream,
) -> Vec<Tree> {
    match model {
        GeneratingModel::Pct => train_pct(columns, targets, params, nt),
        GeneratingModel::ExtraPct { trees, k } => {
            let k = k.unwrap_or(columns.len()).max(1);
            let spec = ForestSpec {
                kind: ForestKind::Extra { k },
                n_trees: (*trees).max(1),
            };
            batched_forest(columns, targets, &spec, params, nt, seeds)
        }
    }
}

/// Trees of the supplementing forest with `n_trees` members; empty when disabled.
pub fn train_supplementing(
    columns: &[&Column],
    targets: &TargetMatrix,
    model: &SupplementingModel,
    n_trees: usize,
    params: TreeParams,
    nt: usize,
    seeds: &SeedStream,
) -> Vec<Tree> {
    if n_trees == 0 {
        return Vec::new();
    }
    let kind = match model {
        SupplementingModel::None => return Vec::new(),
        SupplementingModel::Subspace { p, z } => ForestKind::Subspace {
            p: *p,
            z: z.unwrap_or(n_trees).max(1),
        },
        SupplementingModel::Extra { k } => ForestKind::Extra {
            k: k.unwrap_or(columns.len()).max(1),
        },
        SupplementingModel::Ros { target_fraction } => ForestKind::Ros {
            target_fraction: target_fraction.unwrap_or(DEFAULT_ROS_FRACTION),
        },
    };
    let spec = ForestSpec { kind, n_trees };
    batched_forest(columns, targets, &spec, params, nt, seeds)
}

fn batched_forest(
    columns: &[&Column],
    targets: &TargetMatrix,
    spec: &ForestSpec,
    params: TreeParams,
    nt: usize,
    seeds: &SeedStream,
) -> Vec<Tree> {
    target_batches(targets.n_targets(), nt)
        .iter()
        .enumerate()
        .flat_map(|(b, batch)| {
            train_forest(columns, targets, batch, spec, params, &seeds.child_idx("batch", b))
        })
        .collect()
}
