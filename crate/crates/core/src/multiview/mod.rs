//! The multi-view framework: pairwise mining, cross-view completion, the
//! bounded working memory and final set selection.

mod complete;
mod grsc;
mod store;

use rand::seq::SliceRandom;

pub use complete::{
    complete_redescriptions, minimize_queries, minimize_redescription, refine_by_query_replacement,
    refine_disjunctive, CompletionRecord,
};
pub use grsc::{grsc, grsc_indices};
pub use store::{
    normalize_memory, AddOutcome, MemberId, MemoryEvent, MemoryOp, NormalizeRecord,
    RedescriptionStore,
};

use crate::dataio::{Column, Constraints, Dataset, Settings, SupplementingModel};
use crate::gclusrm::{run_gclusrm, GclusOptions, IterationRecord};
use crate::query::{Origin, Redescription};
use crate::rng::SeedStream;
use crate::trees::{extract_rules, train_generating, train_supplementing, TargetMatrix, TreeParams};

/// All view pairs `(i, j)`, `i < j`, or `m` of them sampled uniformly and
/// returned in canonical order.
pub fn view_pairs(n_views: usize, sample: Option<usize>, seeds: &SeedStream) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (0..n_views)
        .flat_map(|i| (i + 1..n_views).map(move |j| (i, j)))
        .collect();
    if let Some(m) = sample {
        if m < pairs.len() {
            let mut rng = seeds.child("pairs").rng();
            pairs = pairs.choose_multiple(&mut rng, m).copied().collect();
            pairs.sort();
        }
    }
    pairs
}

#[derive(Debug, Clone, Default)]
pub struct FrameworkOptions {
    /// Record store sizes after every memory operation.
    pub instrument: bool,
}

/// One line of the framework trace.
#[derive(Debug, Clone)]
pub enum TraceEntry {
    Pair { views: (usize, usize), found: usize, size: usize },
    Gclus(IterationRecord),
    Complete { pair: (usize, usize), record: CompletionRecord },
    Normalize(NormalizeRecord),
}

impl std::fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TraceEntry::Pair { views, found, size } => {
                write!(f, "pair views={},{} found={found} size={size}", views.0, views.1)
            }
            TraceEntry::Gclus(r) => write!(f, "{r}"),
            TraceEntry::Complete { pair, record } => write!(f, "pair={},{} {record}", pair.0, pair.1),
            TraceEntry::Normalize(r) => write!(f, "{r}"),
        }
    }
}

/// Outcome of one restart.
#[derive(Debug, Clone, Default)]
pub struct RestartResult {
    pub restart: usize,
    /// One selected set per weight row.
    pub sets: Vec<Vec<Redescription>>,
    /// Complete, minimized redescriptions before selection.
    pub complete: Vec<Redescription>,
    pub pairs: Vec<(usize, usize)>,
    pub peak_store: usize,
    pub trace: Vec<TraceEntry>,
    pub events: Vec<MemoryEvent>,
}

fn columns_of(dataset: &Dataset, view: usize) -> Vec<&Column> {
    dataset.views[view].attributes.iter().map(|a| &a.column).collect()
}

/// Seeds of restart `restart` under the master seed.
pub fn restart_seeds(settings: &Settings, restart: usize) -> SeedStream {
    SeedStream::new(settings.seed).child_idx("restart", restart)
}

/// Runs one restart of the framework with its own private store.
pub fn run_restart(
    dataset: &Dataset,
    constraints: &Constraints,
    settings: &Settings,
    restart: usize,
    options: &FrameworkOptions,
) -> RestartResult {
    let seeds = restart_seeds(settings, restart);
    let n = dataset.n_entities();
    let n_views = dataset.n_views();
    let mut store = RedescriptionStore::from_constraints(n_views, constraints);
    if options.instrument {
        store.instrument();
    }
    let mut result = RestartResult {
        restart,
        pairs: view_pairs(n_views, settings.view_pairs, &seeds),
        ..Default::default()
    };
    let params = TreeParams::new(constraints.max_rule_len, settings.min_leaf);
    let supplementing = constraints.num_supplement_models > 0
        && !matches!(settings.supplementing_model, SupplementingModel::None);
    let gopts = GclusOptions { keep_snapshots: false };

    for &(i, j) in &result.pairs.clone() {
        let pair_seeds = seeds.child_idx("pair", i * n_views + j);
        let g = run_gclusrm(dataset, (i, j), constraints, settings, &pair_seeds.child("gclus"), &gopts);
        result.trace.extend(g.log.into_iter().map(TraceEntry::Gclus));
        let found = g.redescriptions.len();
        for r in g.redescriptions {
            store.add_discard_or_replace(r);
        }
        result.trace.push(TraceEntry::Pair {
            views: (i, j),
            found,
            size: store.len(),
        });
        for k in (0..n_views).filter(|&k| k != i && k != j) {
            if store.is_empty() {
                break;
            }
            let targets = TargetMatrix::from_supports(n, store.members().iter().map(|r| r.support()));
            let cols = columns_of(dataset, k);
            let view_seeds = pair_seeds.child_idx("view", k);
            let trees = train_generating(&cols, &targets, &settings.generating_model, params, constraints.num_target_batch, &view_seeds.child("generating"));
            let mut rules = extract_rules(&trees, dataset, k, constraints.max_rule_len, Origin::Generating, 0);
            if supplementing {
                let sup = train_supplementing(
                    &cols,
                    &targets,
                    &settings.supplementing_model,
                    constraints.num_supplement_models,
                    params,
                    constraints.num_target_batch,
                    &view_seeds.child("supplementing"),
                );
                rules.extend(extract_rules(&sup, dataset, k, constraints.max_rule_len, Origin::Supplementing, 0));
            }
            let record = complete_redescriptions(&mut store, &rules, k, constraints);
            // rules, supplementing ones included, live only for this step
            drop(rules);
            result.trace.push(TraceEntry::Complete { pair: (i, j), record });
            let norm = normalize_memory(&mut store, settings);
            result.trace.push(TraceEntry::Normalize(norm));
        }
    }
    store.remove_incomplete();
    minimize_queries(&mut store, dataset, constraints);
    result.peak_store = store.peak();
    result.events = store.take_events();
    result.complete = store.into_members();
    result.sets = grsc(&result.complete, settings.weights.rows(), settings.output_set_size, settings.k_c);
    result
}

/// Runs every restart sequentially.
pub fn run_framework(
    dataset: &Dataset,
    constraints: &Constraints,
    settings: &Settings,
    options: &FrameworkOptions,
) -> Vec<RestartResult> {
    (0..settings.n_random_restarts)
        .map(|r| run_restart(dataset, constraints, settings, r, options))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{generate_synthetic, SyntheticSpec};

    #[test]
    fn all_pairs_or_sample() {
        let s = SeedStream::new(3);
        assert_eq!(view_pairs(3, None, &s), vec![(0, 1), (0, 2), (1, 2)]);
        let two = view_pairs(3, Some(2), &s);
        assert_eq!(two.len(), 2);
        assert!(two.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(view_pairs(2, Some(5), &s), vec![(0, 1)]);
    }

    fn small_planted() -> crate::dataio::SyntheticData {
        generate_synthetic(&SyntheticSpec {
            n_entities: 60,
            n_views: 3,
            attrs_per_view: 4,
            block_sizes: vec![20],
            attrs_per_block: 2,
            noise: 0.0,
            seed: 5,
        })
        .unwrap()
    }

    #[test]
    fn planted_block_completed_across_three_views() {
        let data = small_planted();
        let mut c = Constraints::defaults(60);
        c.work_set_size = 50;
        c.max_expansion_size = 120;
        let settings = Settings {
            max_iter: 3,
            min_leaf: 3,
            output_set_size: 10,
            ..Settings::default()
        };
        let res = run_restart(&data.dataset, &c, &settings, 0, &FrameworkOptions { instrument: true });
        assert!(!res.complete.is_empty());
        let block = &data.blocks[0].members;
        let best = res.complete.iter().map(|r| r.support().jaccard(block)).fold(0.0, f64::max);
        assert!(best >= 0.8, "best elemJ {best}");
        for r in res.sets.iter().flatten() {
            assert!(r.is_complete());
            assert!(r.jaccard() >= c.min_jaccard);
            assert_eq!(r, &r.recomputed(&data.dataset));
        }
        assert!(res.events.iter().all(|e| e.size <= 120));
        assert!(res.peak_store <= 120);
    }

    #[test]
    fn two_views_skip_completion() {
        let mut data = small_planted();
        data.dataset.views.truncate(2);
        let c = Constraints::defaults(60);
        let settings = Settings {
            max_iter: 2,
            min_leaf: 3,
            ..Settings::default()
        };
        let res = run_restart(&data.dataset, &c, &settings, 0, &FrameworkOptions::default());
        assert!(!res.trace.iter().any(|t| matches!(t, TraceEntry::Complete { .. })));
        assert!(res.complete.iter().all(|r| r.n_views() == 2));
    }

    #[test]
    fn restarts_are_reproducible() {
        let data = small_planted();
        let c = Constraints::defaults(60);
        let settings = Settings {
            max_iter: 2,
            min_leaf: 3,
            ..Settings::default()
        };
        let a = run_restart(&data.dataset, &c, &settings, 0, &FrameworkOptions::default());
        let b = run_restart(&data.dataset, &c, &settings, 0, &FrameworkOptions::default());
        assert_eq!(a.sets, b.sets);
    }
}
