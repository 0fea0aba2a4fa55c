//! Two-view redescription mining by alternating multi-target tree learning.
//!
//! Rules learned on one view become targets for the other, so each iteration
//! produces rule pairs with similar supports. Marked rules (from the current
//! and previous iteration) are combined into two-view redescriptions.

use std::collections::HashMap;
use std::fmt;

use rand::seq::SliceRandom;

use crate::dataio::{Column, Constraints, Dataset, Settings, SupplementingModel};
use crate::entities::EntitySet;
use crate::query::{Origin, Query, Redescription, Rule};
use crate::rng::SeedStream;
use crate::trees::{extract_rules, train_generating, train_supplementing, TargetMatrix, TreeParams};

/// Original rows followed by one artificial row per entity, with target 1 for
/// original rows and 0 for artificial ones.
///
/// Each artificial column is an independent random permutation of the
/// corresponding original column.
pub fn make_initial_task(columns: &[&Column], seeds: &SeedStream) -> (Vec<Column>, TargetMatrix) {
    let n = columns.first().map_or(0, |c| c.len());
    let augmented = columns
        .iter()
        .enumerate()
        .map(|(a, col)| {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut seeds.child_idx("attribute", a).rng());
            match col {
                Column::Numeric(v) => {
                    let mut out = v.clone();
                    out.extend(perm.iter().map(|&r| v[r]));
                    Column::Numeric(out)
                }
                Column::Categorical { levels, codes } => {
                    let mut out = codes.clone();
                    out.extend(perm.iter().map(|&r| codes[r]));
                    Column::Categorical {
                        levels: levels.clone(),
                        codes: out,
                    }
                }
            }
        })
        .collect();
    let mut target = vec![1.0; n];
    target.extend(std::iter::repeat_n(0.0, n));
    (augmented, TargetMatrix::new(2 * n, 1, target))
}

/// One 0/1 target column per rule.
pub fn construct_targets(n_entities: usize, rules: &[&Rule]) -> TargetMatrix {
    TargetMatrix::from_supports(n_entities, rules.iter().map(|r| &r.support))
}

fn passes(r: &Redescription, c: &Constraints, min_jaccard: f64) -> bool {
    r.jaccard() >= min_jaccard && c.support_ok(r.support().len()) && r.pvalue() <= c.max_pvalue
}

/// Whether `r` satisfies the accuracy, support and significance constraints.
pub fn satisfies(r: &Redescription, c: &Constraints) -> bool {
    passes(r, c, c.min_jaccard)
}

fn two_view(n_entities: usize, n_views: usize, a: (Query, EntitySet), b: (Query, EntitySet)) -> Redescription {
    let mut parts: Vec<Option<(Query, EntitySet)>> = vec![None; n_views];
    let (va, vb) = (a.0.view, b.0.view);
    parts[va] = Some(a);
    parts[vb] = Some(b);
    Redescription::from_parts(n_entities, parts)
}

fn jaccard_of(a: &EntitySet, b: &EntitySet) -> f64 {
    a.jaccard(b)
}

/// Two-view redescriptions built from marked rule pairs, including negated
/// operands when negation is allowed, filtered by accuracy `min_jaccard`,
/// support bounds and maximal p-value.
pub fn create_redescriptions_at(
    rules_i: &[&Rule],
    rules_j: &[&Rule],
    n_views: usize,
    constraints: &Constraints,
    min_jaccard: f64,
) -> Vec<Redescription> {
    let negs: &[bool] = if constraints.operators.negation {
        &[false, true]
    } else {
        &[false]
    };
    let mut out = Vec::new();
    for a in rules_i {
        for b in rules_j {
            for &na in negs {
                for &nb in negs {
                    let sa = if na { a.support.complement() } else { a.support.clone() };
                    let sb = if nb { b.support.complement() } else { b.support.clone() };
                    let inter = sa.intersection_len(&sb);
                    if !constraints.support_ok(inter) || jaccard_of(&sa, &sb) < min_jaccard {
                        continue;
                    }
                    let n = sa.universe();
                    let r = two_view(n, n_views, a.as_query(na), b.as_query(nb));
                    if passes(&r, constraints, min_jaccard) {
                        out.push(r);
                    }
                }
            }
        }
    }
    out
}

/// [`create_redescriptions_at`] with the main accuracy threshold.
pub fn create_redescriptions(
    rules_i: &[&Rule],
    rules_j: &[&Rule],
    n_views: usize,
    constraints: &Constraints,
) -> Vec<Redescription> {
    create_redescriptions_at(rules_i, rules_j, n_views, constraints, constraints.min_jaccard)
}

/// Disjunctive candidates `(a ∨ a', b)`: for every rule `b` on one view, its
/// best partner `a` on the other view is extended by the one rule `a'` that
/// raises accuracy above both plain pairs.
fn disjunctive_candidates(
    side: &[&Rule],
    other: &[&Rule],
    n_views: usize,
    constraints: &Constraints,
) -> Vec<Redescription> {
    let mut out = Vec::new();
    for b in other {
        let Some((ai, ja)) = side
            .iter()
            .enumerate()
            .map(|(i, a)| (i, a.support.jaccard(&b.support)))
            .filter(|(_, j)| *j >= constraints.min_jaccard_refine)
            .fold(None, |best: Option<(usize, f64)>, c| match best {
                Some(bb) if bb.1 >= c.1 => Some(bb),
                _ => Some(c),
            })
        else {
            continue;
        };
        let a = side[ai];
        let mut best: Option<(usize, f64)> = None;
        for (k, a2) in side.iter().enumerate() {
            if k == ai {
                continue;
            }
            let merged = a.support.union(&a2.support);
            let j = merged.jaccard(&b.support);
            let plain = a2.support.jaccard(&b.support);
            if j > ja && j > plain && best.is_none_or(|(_, bj)| j > bj) {
                best = Some((k, j));
            }
        }
        if let Some((k, _)) = best {
            let a2 = side[k];
            let q = a.query.or(&a2.query);
            let s = a.support.union(&a2.support);
            let r = two_view(s.universe(), n_views, (q, s), (b.query.clone(), b.support.clone()));
            if satisfies(&r, constraints) {
                out.push(r);
            }
        }
    }
    out
}

fn slots_jaccard(slots: &[Option<EntitySet>]) -> f64 {
    let mut present = slots.iter().flatten();
    let first = present.next().expect("at least one query");
    let (mut inter, mut union) = (first.clone(), first.clone());
    for s in present {
        inter.intersect_with(s);
        union.union_with(s);
    }
    match union.len() {
        0 => 0.0,
        u => inter.len() as f64 / u as f64,
    }
}

fn same_views(a: &Redescription, b: &Redescription) -> bool {
    (0..a.n_slots()).all(|v| a.has_view(v) == b.has_view(v))
}

/// Raises the accuracy of `r_new` by conjoining queries of members whose
/// support contains `supp(r_new)`; returns `None` when a member over the same
/// views already has the same support with at least the refined accuracy.
pub fn conjunctive_refinement(r_new: Redescription, set: &[Redescription]) -> Option<Redescription> {
    let mut cur = r_new;
    loop {
        let mut changed = false;
        for other in set {
            if !cur.support().is_subset(other.support()) {
                continue;
            }
            // accuracy is tracked on supports; a redescription is only built on improvement
            let mut slots: Vec<Option<EntitySet>> = (0..cur.n_slots()).map(|v| cur.query_support(v).cloned()).collect();
            let mut best = cur.jaccard();
            let mut joined_views = Vec::new();
            for v in 0..cur.n_slots() {
                let (Some(q), Some(oq)) = (cur.query(v), other.query(v)) else {
                    continue;
                };
                if q == oq {
                    continue;
                }
                let s = slots[v].as_ref().unwrap().intersection(other.query_support(v).unwrap());
                let previous = slots[v].replace(s);
                let j = slots_jaccard(&slots);
                if j > best {
                    best = j;
                    joined_views.push(v);
                } else {
                    slots[v] = previous;
                }
            }
            if !joined_views.is_empty() {
                for v in joined_views {
                    let joined = cur.query(v).unwrap().and(other.query(v).unwrap());
                    let s = slots[v].take().unwrap();
                    cur = cur.with_query(joined, s);
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let duplicate = set
        .iter()
        .any(|o| same_views(o, &cur) && o.support() == cur.support() && o.jaccard() >= cur.jaccard());
    (!duplicate).then_some(cur)
}

/// Index of the member `r_new` would evict: the argmax of
/// `J(r_new) − J(R′) − (1 − elemJ(r_new, R′))` over incomplete members with
/// lower accuracy (first index wins ties).
pub fn replacement_index(r_new: &Redescription, set: &[Redescription], n_views: usize) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in set.iter().enumerate() {
        if r_new.jaccard() <= r.jaccard() || r.n_views() >= n_views {
            continue;
        }
        let score = r_new.jaccard() - r.jaccard() - (1.0 - r_new.support().jaccard(r.support()));
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((i, score));
        }
    }
    best.map(|(i, _)| i)
}

/// Replaces the worst eligible member with `r_new`; returns whether it was kept.
pub fn replace_worst(r_new: Redescription, set: &mut [Redescription], n_views: usize) -> bool {
    match replacement_index(&r_new, set, n_views) {
        Some(i) => {
            set[i] = r_new;
            true
        }
        None => false,
    }
}

/// Counters for one GCLUS-RM iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationRecord {
    pub views: (usize, usize),
    pub iteration: usize,
    pub rules: (usize, usize),
    pub supplementing_rules: (usize, usize),
    pub marked: (usize, usize),
    pub candidates: usize,
    pub accepted: usize,
    pub evicted: usize,
    pub rejected: usize,
    pub size: usize,
}

impl fmt::Display for IterationRecord {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(
            f,
            "gclus views={},{} iter={} rules={},{} supp_rules={},{} marked={},{} candidates={} accepted={} evicted={} rejected={} size={}",
            self.views.0,
            self.views.1,
            self.iteration,
            self.rules.0,
            self.rules.1,
            self.supplementing_rules.0,
            self.supplementing_rules.1,
            self.marked.0,
            self.marked.1,
            self.candidates,
            self.accepted,
            self.evicted,
            self.rejected,
            self.size
        )
    }
}

/// Rule pools captured around supplement removal, for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolSnapshot {
    pub iteration: usize,
    pub before_removal: [Vec<Rule>; 2],
    pub after_removal: [Vec<Rule>; 2],
}

#[derive(Debug, Clone, Default)]
pub struct GclusResult {
    pub redescriptions: Vec<Redescription>,
    /// Persistent rule pools of the two views at the end of the run.
    pub rules: [Vec<Rule>; 2],
    pub log: Vec<IterationRecord>,
    /// Filled only when snapshots were requested.
    pub snapshots: Vec<PoolSnapshot>,
    /// Largest redescription list observed during the run.
    pub peak_size: usize,
}

/// Rule pool of one view, deduplicated by support.
#[derive(Debug, Clone, Default)]
struct RulePool {
    rules: Vec<Rule>,
    index: HashMap<EntitySet, usize>,
}

impl RulePool {
    /// Adds `rule` or refreshes the iteration of an existing rule with the same support.
    fn add(&mut self, rule: Rule, refresh: bool) {
        match self.index.get(&rule.support) {
            Some(&i) => {
                if refresh {
                    self.rules[i].iteration = self.rules[i].iteration.max(rule.iteration);
                }
            }
            None => {
                self.index.insert(rule.support.clone(), self.rules.len());
                self.rules.push(rule);
            }
        }
    }

    fn mark(&mut self, iteration: usize) {
        for r in &mut self.rules {
            r.marked = r.iteration + 1 >= iteration;
        }
    }

    fn marked(&self) -> Vec<&Rule> {
        self.rules.iter().filter(|r| r.marked).collect()
    }

    fn remove_supplementing(&mut self) {
        self.rules.retain(|r| r.origin == Origin::Generating);
        self.index = self
            .rules
            .iter()
            .enumerate()
            .map(|(i, r)| (r.support.clone(), i))
            .collect();
    }
}

/// Inserts candidates in order (accuracy descending, support ascending),
/// refining each and replacing the worst member once the list is full.
fn insert_candidates(
    mut cands: Vec<Redescription>,
    set: &mut Vec<Redescription>,
    constraints: &Constraints,
    n_views: usize,
    rec: &mut IterationRecord,
    peak: &mut usize,
) {
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&a, &b| {
        cands[b]
            .jaccard()
            .total_cmp(&cands[a].jaccard())
            .then(cands[a].support().len().cmp(&cands[b].support().len()))
            .then(a.cmp(&b))
    });
    let mut taken: Vec<Option<Redescription>> = cands.drain(..).map(Some).collect();
    for i in order {
        let cand = taken[i].take().unwrap();
        let Some(r) = conjunctive_refinement(cand, set) else {
            rec.rejected += 1;
            continue;
        };
        if !satisfies(&r, constraints) {
            rec.rejected += 1;
            continue;
        }
        if set.len() < constraints.max_expansion_size {
            set.push(r);
            rec.accepted += 1;
        } else if replace_worst(r, set, n_views) {
            rec.accepted += 1;
            rec.evicted += 1;
        } else {
            rec.rejected += 1;
        }
        *peak = (*peak).max(set.len());
    }
}

fn columns_of(dataset: &Dataset, view: usize) -> Vec<&Column> {
    dataset.views[view].attributes.iter().map(|a| &a.column).collect()
}

pub struct GclusOptions {
    /// Record rule pools around supplement removal in every iteration.
    pub keep_snapshots: bool,
}

/// Runs GCLUS-RM on views `(vi, vj)`.
pub fn run_gclusrm(
    dataset: &Dataset,
    (vi, vj): (usize, usize),
    constraints: &Constraints,
    settings: &Settings,
    seeds: &SeedStream,
    options: &GclusOptions,
) -> GclusResult {
    let n = dataset.n_entities();
    let n_views = dataset.n_views();
    let views = [vi, vj];
    let params = TreeParams::new(constraints.max_rule_len, settings.min_leaf);
    let nt = constraints.num_target_batch;
    let cols = [columns_of(dataset, vi), columns_of(dataset, vj)];
    let mut result = GclusResult::default();
    let mut pools = [RulePool::default(), RulePool::default()];

    // Initial models separate original rows from permuted ones.
    let mut last: [Vec<Rule>; 2] = [Vec::new(), Vec::new()];
    for s in 0..2 {
        let init_seeds = seeds.child("init").child_idx("view", views[s]);
        let (aug, target) = make_initial_task(&cols[s], &init_seeds.child("permute"));
        let aug_refs: Vec<&Column> = aug.iter().collect();
        let init_params = params.with_lookahead();
        let trees = train_generating(&aug_refs, &target, &settings.generating_model, init_params, nt, &init_seeds.child("model"));
        last[s] = extract_rules(&trees, dataset, views[s], constraints.max_rule_len, Origin::Generating, 0);
        for r in &last[s] {
            pools[s].add(r.clone(), true);
        }
    }

    let supplementing = constraints.num_supplement_models > 0
        && !matches!(settings.supplementing_model, SupplementingModel::None);
    let mut set: Vec<Redescription> = Vec::new();
    for it in 1..=settings.max_iter {
        let mut rec = IterationRecord {
            views: (vi, vj),
            iteration: it,
            rules: (0, 0),
            supplementing_rules: (0, 0),
            marked: (0, 0),
            candidates: 0,
            accepted: 0,
            evicted: 0,
            rejected: 0,
            size: 0,
        };
        let mut fresh: [Vec<Rule>; 2] = [Vec::new(), Vec::new()];
        let mut counts = [0usize; 2];
        let mut sup_counts = [0usize; 2];
        for s in 0..2 {
            // rules of the other view from the previous iteration are the targets
            let targets_from: Vec<&Rule> = last[1 - s].iter().collect();
            if targets_from.is_empty() {
                continue;
            }
            let targets = construct_targets(n, &targets_from);
            let it_seeds = seeds.child_idx("iteration", it).child_idx("view", views[s]);
            let trees = train_generating(&cols[s], &targets, &settings.generating_model, params, nt, &it_seeds.child("generating"));
            fresh[s] = extract_rules(&trees, dataset, views[s], constraints.max_rule_len, Origin::Generating, it);
            counts[s] = fresh[s].len();
            for r in &fresh[s] {
                pools[s].add(r.clone(), true);
            }
            if supplementing {
                let sup_trees = train_supplementing(
                    &cols[s],
                    &targets,
                    &settings.supplementing_model,
                    constraints.num_supplement_models,
                    params,
                    nt,
                    &it_seeds.child("supplementing"),
                );
                let sup = extract_rules(&sup_trees, dataset, views[s], constraints.max_rule_len, Origin::Supplementing, it);
                sup_counts[s] = sup.len();
                for r in sup {
                    pools[s].add(r, false);
                }
            }
        }
        for p in &mut pools {
            p.mark(it);
        }
        let (mi, mj) = (pools[0].marked(), pools[1].marked());
        rec.rules = (counts[0], counts[1]);
        rec.supplementing_rules = (sup_counts[0], sup_counts[1]);
        rec.marked = (mi.len(), mj.len());
        let mut cands = create_redescriptions_at(&mi, &mj, n_views, constraints, constraints.min_jaccard_refine);
        if constraints.operators.disjunction {
            cands.extend(disjunctive_candidates(&mi, &mj, n_views, constraints));
            cands.extend(disjunctive_candidates(&mj, &mi, n_views, constraints));
        }
        rec.candidates = cands.len();
        insert_candidates(cands, &mut set, constraints, n_views, &mut rec, &mut result.peak_size);

        let before = options
            .keep_snapshots
            .then(|| [pools[0].rules.clone(), pools[1].rules.clone()]);
        if supplementing {
            for p in &mut pools {
                p.remove_supplementing();
            }
        }
        if let Some(before_removal) = before {
            result.snapshots.push(PoolSnapshot {
                iteration: it,
                before_removal,
                after_removal: [pools[0].rules.clone(), pools[1].rules.clone()],
            });
        }
        for s in 0..2 {
            if !fresh[s].is_empty() {
                last[s] = std::mem::take(&mut fresh[s]);
            }
        }
        rec.size = set.len();
        result.log.push(rec);
    }
    if set.is_empty() && pools.iter().any(|p| p.rules.is_empty()) {
        log::warn!("views {vi} and {vj} produced no rules");
    }
    result.redescriptions = set;
    let [p0, p1] = pools;
    result.rules = [p0.rules, p1.rules];
    result
}
