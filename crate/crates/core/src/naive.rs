//! Baseline multi-view miner: mine every view pair, join the pairwise sets and
//! keep complete, non-redundant results.

use std::fmt;

use crate::dataio::{Constraints, Dataset, Settings};
use crate::gclusrm::{run_gclusrm, satisfies, GclusOptions};
use crate::multiview::{restart_seeds, view_pairs};
use crate::query::{Query, Redescription};

/// Join of `r1` (views S1) with the two-view `r2` (views S2).
///
/// Disjoint view sets give one redescription over S1 ∪ S2. A single shared
/// view `k` gives two, one keeping each operand's query on `k`. If S1 ⊇ S2
/// nothing is produced.
pub fn oplus(r1: &Redescription, r2: &Redescription) -> Vec<Redescription> {
    let s1 = r1.views();
    let s2 = r2.views();
    assert_eq!(s2.len(), 2, "the second operand of a join must have exactly two views");
    let shared: Vec<usize> = s2.iter().copied().filter(|v| s1.contains(v)).collect();
    let merge = |keep_first_on: Option<usize>| {
        let n = r1.n_entities();
        let parts = (0..r1.n_slots())
            .map(|v| {
                let from = |r: &Redescription| -> Option<(Query, crate::entities::EntitySet)> {
                    Some((r.query(v)?.clone(), r.query_support(v)?.clone()))
                };
                match (r1.has_view(v), r2.has_view(v)) {
                    (true, true) => {
                        if keep_first_on == Some(v) {
                            from(r1)
                        } else {
                            from(r2)
                        }
                    }
                    (true, false) => from(r1),
                    (false, true) => from(r2),
                    (false, false) => None,
                }
            })
            .collect();
        Redescription::from_parts(n, parts)
    };
    match shared.len() {
        0 => vec![merge(None)],
        1 => {
            let k = shared[0];
            vec![merge(Some(k)), merge(None)]
        }
        // both views of r2 are in S1
        _ => Vec::new(),
    }
}

/// `set1` followed by every join `r1 ⊕ r2`; joins failing `keep` are dropped.
pub fn otimes_filtered(
    set1: &[Redescription],
    set2: &[Redescription],
    mut keep: impl FnMut(&Redescription) -> bool,
) -> Vec<Redescription> {
    let mut out = set1.to_vec();
    for r1 in set1 {
        for r2 in set2 {
            out.extend(oplus(r1, r2).into_iter().filter(|r| keep(r)));
        }
    }
    out
}

/// `set1 ∪ { r1 ⊕ r2 }` over all pairs.
pub fn otimes(set1: &[Redescription], set2: &[Redescription]) -> Vec<Redescription> {
    otimes_filtered(set1, set2, |_| true)
}

/// Keeps, in descending accuracy order, each redescription whose entity
/// Jaccard to every already kept one is at most `perc`.
pub fn filter_redundant(set: &[Redescription], perc: f64) -> Vec<Redescription> {
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by(|&a, &b| set[b].jaccard().total_cmp(&set[a].jaccard()).then(a.cmp(&b)));
    let mut kept: Vec<&Redescription> = Vec::new();
    for i in order {
        let r = &set[i];
        if kept.iter().all(|k| k.support().jaccard(r.support()) <= perc) {
            kept.push(r);
        }
    }
    kept.into_iter().cloned().collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NaiveStats {
    /// Redescriptions mined per view pair.
    pub pair_sizes: Vec<((usize, usize), usize)>,
    /// Candidate-set size after each join step, the first entry being the first pair's set.
    pub fold_sizes: Vec<usize>,
    pub peak: usize,
    pub complete: usize,
    pub output: usize,
}

impl fmt::Display for NaiveStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ((i, j), s) in &self.pair_sizes {
            writeln!(f, "pair views={i},{j} found={s}")?;
        }
        for (step, s) in self.fold_sizes.iter().enumerate() {
            writeln!(f, "fold step={step} candidates={s}")?;
        }
        write!(f, "peak={} complete={} output={}", self.peak, self.complete, self.output)
    }
}

#[derive(Debug, Clone, Default)]
pub struct NaiveResult {
    pub redescriptions: Vec<Redescription>,
    pub stats: NaiveStats,
}

#[derive(Debug, Clone)]
pub struct NaiveOptions {
    /// Drop joins that violate the constraints as soon as they are formed.
    pub validate_joins: bool,
}

impl Default for NaiveOptions {
    fn default() -> Self {
        NaiveOptions { validate_joins: true }
    }
}

/// Joins already-mined pairwise sets, given in canonical pair order.
pub fn fold_pairwise(
    pairwise: &[Vec<Redescription>],
    n_views: usize,
    constraints: &Constraints,
    perc: f64,
    options: &NaiveOptions,
) -> NaiveResult {
    let mut stats = NaiveStats::default();
    let mut acc: Vec<Redescription> = pairwise.first().cloned().unwrap_or_default();
    stats.fold_sizes.push(acc.len());
    stats.peak = acc.len();
    for set in pairwise.iter().skip(1) {
        acc = if options.validate_joins {
            otimes_filtered(&acc, set, |r| satisfies(r, constraints))
        } else {
            otimes(&acc, set)
        };
        stats.fold_sizes.push(acc.len());
        stats.peak = stats.peak.max(acc.len());
    }
    let complete: Vec<Redescription> = acc
        .into_iter()
        .filter(|r| r.n_views() == n_views && satisfies(r, constraints))
        .collect();
    stats.complete = complete.len();
    let redescriptions = filter_redundant(&complete, perc);
    stats.output = redescriptions.len();
    NaiveResult { redescriptions, stats }
}

/// Mines every view pair with GCLUS-RM, using the same seed streams as the
/// framework's restart `restart`, then folds the sets with joins.
pub fn run_naive(
    dataset: &Dataset,
    constraints: &Constraints,
    settings: &Settings,
    restart: usize,
    options: &NaiveOptions,
) -> NaiveResult {
    let n_views = dataset.n_views();
    let seeds = restart_seeds(settings, restart);
    let pairs = view_pairs(n_views, None, &seeds);
    let gopts = GclusOptions { keep_snapshots: false };
    let pairwise: Vec<Vec<Redescription>> = pairs
        .iter()
        .map(|&(i, j)| {
            let s = seeds.child_idx("pair", i * n_views + j).child("gclus");
            run_gclusrm(dataset, (i, j), constraints, settings, &s, &gopts).redescriptions
        })
        .collect();
    let mut res = fold_pairwise(&pairwise, n_views, constraints, settings.redundancy_threshold, options);
    res.stats.pair_sizes = pairs.into_iter().zip(pairwise.iter().map(Vec::len)).collect();
    res
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entities::EntitySet;
    use crate::query::Literal;

    const N: usize = 12;

    fn red(views: &[usize], supp: &[usize], tag: usize) -> Redescription {
        let parts = (0..4)
            .map(|v| {
                views.contains(&v).then(|| {
                    (
                        Query::literal(v, Literal::interval(tag, 0.0, 1.0)),
                        EntitySet::from_indices(N, supp.iter().copied()),
                    )
                })
            })
            .collect();
        Redescription::from_parts(N, parts)
    }

    #[test]
    fn oplus_cases() {
        let r = |v: &[usize]| red(v, &[1, 2, 3], 0);
        let out = oplus(&r(&[0, 1]), &r(&[2, 3]));
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].views(), vec![0, 1, 2, 3]);
        let a = red(&[0, 1], &[1, 2, 3], 0);
        let b = red(&[1, 2], &[1, 2, 3], 1);
        let out = oplus(&a, &b);
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|x| x.views() == vec![0, 1, 2]));
        assert_eq!(out[0].query(1), a.query(1));
        assert_eq!(out[1].query(1), b.query(1));
        assert!(oplus(&r(&[0, 1, 2]), &r(&[1, 2])).is_empty());
    }

    #[test]
    fn otimes_expansion() {
        let a = red(&[0, 1], &[1, 2], 0);
        assert_eq!(otimes(std::slice::from_ref(&a), &[]), vec![a.clone()]);
        assert_eq!(otimes(std::slice::from_ref(&a), &[red(&[2, 3], &[1, 2], 0)]).len(), 2);
        assert_eq!(otimes(std::slice::from_ref(&a), &[red(&[0, 1], &[1, 2], 1)]), vec![a]);
    }

    #[test]
    fn redundancy_filter() {
        let a = red(&[0, 1], &[1, 2, 3], 0);
        assert_eq!(filter_redundant(&[a.clone(), a.clone()], 0.95).len(), 1);
        // elemJ 0.9 between the two: both survive
        let big: Vec<usize> = (0..10).collect();
        let x = red(&[0, 1], &big, 0);
        let y = red(&[0, 1], &big[..9], 1);
        assert_eq!(filter_redundant(&[x, y], 0.95).len(), 2);
    }

    #[test]
    fn redundancy_filter_drops_less_accurate() {
        // supports of 25 and 24 entities (elemJ 0.96), accuracies 0.7 and 0.6
        let n = 40;
        let a = {
            let s = EntitySet::from_indices(n, 0..25);
            let mut w = s.clone();
            for e in 25..35 {
                w.insert(e);
            }
            // J = 25 / 35 ≈ 0.714
            Redescription::from_parts(
                n,
                vec![
                    Some((Query::literal(0, Literal::interval(0, 0.0, 1.0)), s)),
                    Some((Query::literal(1, Literal::interval(0, 0.0, 1.0)), w)),
                ],
            )
        };
        let b = {
            let s = EntitySet::from_indices(n, 0..24);
            let w = EntitySet::from_indices(n, 0..40);
            // J = 24 / 40 = 0.6
            Redescription::from_parts(
                n,
                vec![
                    Some((Query::literal(0, Literal::interval(1, 0.0, 1.0)), s)),
                    Some((Query::literal(1, Literal::interval(1, 0.0, 1.0)), w)),
                ],
            )
        };
        assert!((a.support().jaccard(b.support()) - 0.96).abs() < 1e-12);
        let out = filter_redundant(&[b, a.clone()], 0.95);
        assert_eq!(out, vec![a]);
    }

    #[test]
    fn early_validation_keeps_final_set() {
        let c = Constraints {
            min_support: 2,
            max_support: N,
            max_pvalue: 1.0,
            ..Constraints::defaults(N)
        };
        let p01 = vec![red(&[0, 1], &[1, 2, 3, 4], 0), red(&[0, 1], &[5, 6, 7], 1)];
        let p02 = vec![red(&[0, 2], &[1, 2, 3], 2), red(&[0, 2], &[8, 9], 3)];
        let p12 = vec![red(&[1, 2], &[2, 3, 4], 4), red(&[1, 2], &[5, 6], 5)];
        let sets = [p01, p02, p12];
        let eager = fold_pairwise(&sets, 3, &c, 0.95, &NaiveOptions { validate_joins: true });
        let lazy = fold_pairwise(&sets, 3, &c, 0.95, &NaiveOptions { validate_joins: false });
        assert_eq!(eager.redescriptions, lazy.redescriptions);
        assert!(eager.stats.peak <= lazy.stats.peak);
        assert!(!eager.redescriptions.is_empty());
    }
}
