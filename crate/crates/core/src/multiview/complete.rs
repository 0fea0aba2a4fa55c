use std::collections::HashSet;
use std::fmt;

use super::store::{AddOutcome, MemberId, RedescriptionStore};
use crate::dataio::{Constraints, Dataset};
use crate::entities::EntitySet;
use crate::gclusrm::{conjunctive_refinement, satisfies};
use crate::query::{Node, Query, Redescription, Rule};

/// Counters of one completion step on a view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CompletionRecord {
    pub view: usize,
    pub rules: usize,
    pub incomplete: usize,
    pub candidates: usize,
    pub inserted: usize,
    pub replaced: usize,
    pub discarded: usize,
    pub requeried: usize,
    pub disjunctive: usize,
    pub size: usize,
}

impl fmt::Display for CompletionRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "complete view={} rules={} incomplete={} candidates={} inserted={} replaced={} discarded={} requeried={} disjunctive={} size={}",
            self.view,
            self.rules,
            self.incomplete,
            self.candidates,
            self.inserted,
            self.replaced,
            self.discarded,
            self.requeried,
            self.disjunctive,
            self.size
        )
    }
}

fn negations(c: &Constraints) -> &'static [bool] {
    if c.operators.negation {
        &[false, true]
    } else {
        &[false]
    }
}

fn operand(rule: &Rule, negated: bool) -> (Query, EntitySet) {
    rule.as_query(negated)
}

/// Extends the store's redescriptions lacking view `k` with rules learned on `k`.
///
/// Each (member, rule) pair is first screened by the accuracy the completed
/// redescription would have, then conjunctively refined against the store and
/// admitted through [`RedescriptionStore::add_discard_or_replace`]. Negated
/// rules are tried when negation is allowed. Afterwards a full store without
/// incomplete members gets query replacement, and disjunction-enabled runs get
/// disjunctive refinement.
pub fn complete_redescriptions(
    store: &mut RedescriptionStore,
    rules: &[Rule],
    k: usize,
    constraints: &Constraints,
) -> CompletionRecord {
    let mut rec = CompletionRecord {
        view: k,
        rules: rules.len(),
        ..Default::default()
    };
    let pending: Vec<(MemberId, Redescription)> = store
        .ids()
        .iter()
        .zip(store.members())
        .filter(|(_, r)| !r.has_view(k))
        .map(|(id, r)| (*id, r.clone()))
        .collect();
    rec.incomplete = pending.len();
    let mut touched: HashSet<MemberId> = pending.iter().map(|(id, _)| *id).collect();
    let mut used = vec![false; rules.len()];
    for (_, r) in &pending {
        for (j, rule) in rules.iter().enumerate() {
            for &neg in negations(constraints) {
                let supp = if neg { rule.support.complement() } else { rule.support.clone() };
                if r.jaccard_with(&supp) < constraints.min_jaccard {
                    continue;
                }
                rec.candidates += 1;
                let (q, s) = operand(rule, neg);
                let r_new = r.insert_query(q, s).expect("view k is empty in pending members");
                let r_new = if neg {
                    Some(r_new)
                } else {
                    conjunctive_refinement(r_new, store.members())
                };
                let Some(r_new) = r_new else { continue };
                if !satisfies(&r_new, constraints) {
                    continue;
                }
                match store.add_discard_or_replace(r_new) {
                    AddOutcome::Inserted(id) => {
                        rec.inserted += 1;
                        touched.insert(id);
                        used[j] = true;
                    }
                    AddOutcome::Replaced(id) => {
                        rec.replaced += 1;
                        touched.insert(id);
                        used[j] = true;
                    }
                    AddOutcome::Discarded => rec.discarded += 1,
                }
            }
        }
    }
    if !store.has_incomplete() && store.is_full() {
        rec.requeried = refine_by_query_replacement(store, rules, &mut used, &touched, k, constraints);
    }
    if constraints.operators.disjunction {
        rec.disjunctive = refine_disjunctive(store, rules, k, constraints);
    }
    rec.size = store.len();
    rec
}

/// Swaps the view-`k` query of members not touched by the current pass for an
/// unused rule (or its negation) when that strictly raises accuracy.
///
/// Each member changes at most once, taking its best replacement, and a rule
/// used once is no longer available. Returns the number of replacements.
pub fn refine_by_query_replacement(
    store: &mut RedescriptionStore,
    rules: &[Rule],
    used: &mut [bool],
    touched: &HashSet<MemberId>,
    k: usize,
    constraints: &Constraints,
) -> usize {
    let mut count = 0;
    for i in 0..store.len() {
        if touched.contains(&store.ids()[i]) || !store.members()[i].has_view(k) {
            continue;
        }
        let r = &store.members()[i];
        let mut best: Option<(usize, Redescription)> = None;
        for (j, rule) in rules.iter().enumerate() {
            if used[j] {
                continue;
            }
            for &neg in negations(constraints) {
                let (q, s) = operand(rule, neg);
                let cand = r.with_query(q, s);
                let bar = best.as_ref().map_or(r.jaccard(), |(_, b)| b.jaccard());
                if cand.jaccard() > bar && satisfies(&cand, constraints) {
                    best = Some((j, cand));
                }
            }
        }
        if let Some((j, cand)) = best {
            used[j] = true;
            store.update(i, cand);
            count += 1;
        }
    }
    count
}

/// Entities in every other query of `r` but not in its view-`k` query.
fn missed_on(r: &Redescription, k: usize) -> Option<EntitySet> {
    let mut others = (0..r.n_slots()).filter(|&v| v != k).filter_map(|v| r.query_support(v));
    let mut acc = others.next()?.clone();
    for s in others {
        acc.intersect_with(s);
    }
    Some(acc.difference(r.query_support(k)?))
}

/// Adds `q_k ∨ r` to members whose view-`k` query misses entities described
/// by all other queries, choosing the rule (or negated rule) that best covers
/// them. Kept only when accuracy rises and all constraints still hold. A query
/// that is already a disjunction is left alone. Returns the number of changes.
pub fn refine_disjunctive(
    store: &mut RedescriptionStore,
    rules: &[Rule],
    k: usize,
    constraints: &Constraints,
) -> usize {
    let mut count = 0;
    for i in 0..store.len() {
        let r = &store.members()[i];
        let Some(qk) = r.query(k) else { continue };
        if matches!(qk.root, Node::Or(_)) {
            continue;
        }
        let Some(missed) = missed_on(r, k) else { continue };
        if missed.is_empty() {
            continue;
        }
        let mut best: Option<(usize, bool, f64)> = None;
        for (j, rule) in rules.iter().enumerate() {
            for &neg in negations(constraints) {
                let s = if neg { rule.support.complement() } else { rule.support.clone() };
                let score = missed.jaccard(&s);
                if score > best.map_or(0.0, |b| b.2) {
                    best = Some((j, neg, score));
                }
            }
        }
        let Some((j, neg, _)) = best else { continue };
        let (q, s) = operand(&rules[j], neg);
        let merged = qk.or(&q);
        let merged_supp = r.query_support(k).unwrap().union(&s);
        let cand = r.with_query(merged, merged_supp);
        if cand.jaccard() > r.jaccard() && satisfies(&cand, constraints) {
            store.update(i, cand);
            count += 1;
        }
    }
    count
}

/// Drops top-level conjuncts, last first, while accuracy does not decrease
/// and every constraint still holds, until no single removal qualifies.
pub fn minimize_redescription(r: &Redescription, dataset: &Dataset, constraints: &Constraints) -> Redescription {
    let mut cur = r.clone();
    for v in 0..cur.n_slots() {
        'shrink: loop {
            let Some(q) = cur.query(v) else { break };
            for idx in (0..q.conjuncts().len()).rev() {
                let Some(shorter) = q.without_conjunct(idx) else { break 'shrink };
                let s = shorter.support(dataset);
                let cand = cur.with_query(shorter, s);
                if cand.jaccard() >= cur.jaccard() && satisfies(&cand, constraints) {
                    cur = cand;
                    continue 'shrink;
                }
            }
            break;
        }
    }
    cur
}

/// [`minimize_redescription`] applied to every member.
pub fn minimize_queries(store: &mut RedescriptionStore, dataset: &Dataset, constraints: &Constraints) {
    store.map_members(|r| minimize_redescription(r, dataset, constraints));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{Attribute, Operators, View};
    use crate::query::{Literal, Origin};

    fn set(ids: &[usize]) -> EntitySet {
        EntitySet::from_indices(10, ids.iter().copied())
    }

    fn q(v: usize, a: usize) -> Query {
        Query::literal(v, Literal::interval(a, 0.0, 1.0))
    }

    fn rule(v: usize, a: usize, ids: &[usize]) -> Rule {
        Rule::new(q(v, a), set(ids), Origin::Generating, 0)
    }

    fn constraints() -> Constraints {
        Constraints {
            min_support: 1,
            max_support: 10,
            max_pvalue: 1.0,
            operators: Operators::CONJUNCTION_ONLY,
            ..Constraints::defaults(10)
        }
    }

    fn incomplete(supp: &[usize]) -> Redescription {
        Redescription::from_parts(10, vec![Some((q(0, 0), set(supp))), Some((q(1, 0), set(supp))), None])
    }

    #[test]
    fn completes_with_covering_rule() {
        let mut store = RedescriptionStore::new(3, 10, 10);
        store.add_discard_or_replace(incomplete(&[1, 2, 3]));
        let rec = complete_redescriptions(&mut store, &[rule(2, 0, &[2, 3])], 2, &constraints());
        assert_eq!(rec.inserted, 1);
        let done = store.members().iter().find(|r| r.is_complete()).unwrap();
        assert_eq!(done.support(), &set(&[2, 3]));
        assert!((done.jaccard() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_rule_is_screened_out() {
        let mut store = RedescriptionStore::new(3, 10, 10);
        store.add_discard_or_replace(incomplete(&[1, 2, 3]));
        let rec = complete_redescriptions(&mut store, &[rule(2, 0, &[6, 7])], 2, &constraints());
        assert_eq!((rec.candidates, rec.inserted, store.len()), (0, 0, 1));
    }

    #[test]
    fn negated_rule_completes_the_gap() {
        let mut c = constraints();
        c.operators = Operators {
            disjunction: false,
            negation: true,
        };
        let mut store = RedescriptionStore::new(3, 10, 10);
        store.add_discard_or_replace(incomplete(&[0, 1, 2, 3, 4]));
        // the rule covers exactly the entities outside supp(R)
        let rec = complete_redescriptions(&mut store, &[rule(2, 0, &[5, 6, 7, 8, 9])], 2, &c);
        assert_eq!(rec.inserted, 1);
        let done = store.members().iter().find(|r| r.is_complete()).unwrap();
        assert!(matches!(done.query(2).unwrap().root, Node::Not(_)));
        assert_eq!(done.jaccard(), 1.0);
    }

    fn complete3(s0: &[usize], s1: &[usize], s2: &[usize]) -> Redescription {
        Redescription::from_parts(10, vec![Some((q(0, 0), set(s0))), Some((q(1, 0), set(s1))), Some((q(2, 0), set(s2)))])
    }

    #[test]
    fn query_replacement_needs_strict_gain() {
        let member = complete3(&[1, 2, 3, 4, 5, 6], &[1, 2, 3, 4, 5, 6], &[1, 2, 3, 4, 5, 9, 8, 7]);
        let mut store = RedescriptionStore::new(3, 1, 1);
        store.add_discard_or_replace(member.clone());
        assert!((member.jaccard() - 5.0 / 9.0).abs() < 1e-12);
        let rules = [rule(2, 1, &[1, 2, 3, 4, 5, 7, 8]), rule(2, 2, &[1, 2, 3, 4, 5, 6])];
        let mut used = vec![false; 2];
        let n = refine_by_query_replacement(&mut store, &rules, &mut used, &HashSet::new(), 2, &constraints());
        assert_eq!(n, 1);
        assert_eq!(store.members()[0].jaccard(), 1.0);
        assert_eq!(used, vec![false, true]);
        // nothing better remains
        let n = refine_by_query_replacement(&mut store, &rules, &mut [false, false], &HashSet::new(), 2, &constraints());
        assert_eq!(n, 0);
    }

    #[test]
    fn replacement_skipped_while_incomplete_members_exist() {
        let mut store = RedescriptionStore::new(3, 2, 2);
        store.add_discard_or_replace(complete3(&[1, 2, 3, 4], &[1, 2, 3, 4], &[1, 2, 3, 9]));
        store.add_discard_or_replace(incomplete(&[6, 7]));
        let rec = complete_redescriptions(&mut store, &[rule(2, 1, &[1, 2, 3, 4])], 2, &constraints());
        assert_eq!(rec.requeried, 0);
    }

    #[test]
    fn disjunction_covers_missed_entities() {
        let mut c = constraints();
        c.operators = Operators::ALL;
        let member = complete3(&[1, 2, 3, 4, 7, 8], &[1, 2, 3, 4, 7, 8], &[1, 2, 3, 4]);
        let mut store = RedescriptionStore::new(3, 5, 5);
        store.add_discard_or_replace(member);
        let n = refine_disjunctive(&mut store, &[rule(2, 1, &[7, 8]), rule(2, 2, &[0])], 2, &c);
        assert_eq!(n, 1);
        assert_eq!(store.members()[0].jaccard(), 1.0);
        assert!(matches!(store.members()[0].query(2).unwrap().root, Node::Or(_)));
    }

    #[test]
    fn disjunction_respects_max_support() {
        let mut c = constraints();
        c.operators = Operators::ALL;
        c.max_support = 4;
        let member = complete3(&[1, 2, 3, 4, 7, 8], &[1, 2, 3, 4, 7, 8], &[1, 2, 3, 4]);
        let mut store = RedescriptionStore::new(3, 5, 5);
        store.add_discard_or_replace(member.clone());
        assert_eq!(refine_disjunctive(&mut store, &[rule(2, 1, &[7, 8])], 2, &c), 0);
        assert_eq!(store.members()[0], member);
    }

    #[test]
    fn disjoint_rules_leave_member_alone() {
        let mut c = constraints();
        c.operators = Operators::ALL;
        let member = complete3(&[1, 2, 3, 4, 7], &[1, 2, 3, 4, 7], &[1, 2, 3, 4]);
        let mut store = RedescriptionStore::new(3, 5, 5);
        store.add_discard_or_replace(member);
        c.operators.negation = false;
        assert_eq!(refine_disjunctive(&mut store, &[rule(2, 1, &[0, 9])], 2, &c), 0);
    }

    fn minimize_dataset() -> Dataset {
        let x: Vec<Option<f64>> = (0..10).map(|i| Some(i as f64)).collect();
        let y: Vec<Option<f64>> = (0..10).map(|i| Some((i % 2) as f64)).collect();
        let v0 = View::new(
            "A",
            10,
            vec![Attribute::numeric("x", x.clone()), Attribute::numeric("y", y)],
        )
        .unwrap();
        let w: Vec<Option<f64>> = (0..10).map(|i| Some((i % 2) as f64)).collect();
        let v1 = View::new("B", 10, vec![Attribute::numeric("z", x), Attribute::numeric("w", w)]).unwrap();
        Dataset::new((0..10).map(|i| format!("e{i}")).collect(), vec![v0, v1]).unwrap()
    }

    #[test]
    fn redundant_literal_removed_and_useful_one_kept() {
        let d = minimize_dataset();
        let c = constraints();
        // x <= 4 ∧ x <= 9: the second literal changes nothing
        let q0 = Query::conjunction(0, vec![Literal::interval(0, 0.0, 4.0), Literal::interval(0, 0.0, 9.0)]);
        let q1 = Query::literal(1, Literal::interval(0, 0.0, 4.0));
        let r = Redescription::evaluate(&d, vec![Some(q0), Some(q1.clone())]).unwrap();
        let m = minimize_redescription(&r, &d, &c);
        assert_eq!(m.query(0).unwrap().literal_count(), 1);
        assert_eq!(m.jaccard(), 1.0);
        // both sides describe {0, 2, 4}; dropping either literal lowers accuracy
        let q0 = Query::conjunction(0, vec![Literal::interval(0, 0.0, 4.0), Literal::interval(1, 0.0, 0.0)]);
        let q1 = Query::conjunction(1, vec![Literal::interval(0, 0.0, 4.0), Literal::interval(1, 0.0, 0.0)]);
        let r = Redescription::evaluate(&d, vec![Some(q0), Some(q1)]).unwrap();
        let before = r.jaccard();
        let m = minimize_redescription(&r, &d, &c);
        assert_eq!(m.query(0).unwrap().literal_count(), 2);
        assert_eq!(m.jaccard(), before);
    }
}
