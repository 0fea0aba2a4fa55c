use std::collections::BTreeSet;

use super::ast::Query;
use crate::dataio::Dataset;
use crate::entities::EntitySet;
use crate::error::{Error, Result};
use crate::metrics;

/// `(view, attribute)` index pair identifying one attribute of the dataset.
pub type AttrId = (usize, usize);

/// A tuple of per-view queries, some possibly absent, with cached statistics.
///
/// Caches are computed at construction and every mutation builds a new value,
/// so they never go stale.
#[derive(Debug, Clone, PartialEq)]
pub struct Redescription {
    queries: Vec<Option<Query>>,
    query_supports: Vec<Option<EntitySet>>,
    support: EntitySet,
    union: EntitySet,
    jaccard: f64,
    pvalue: f64,
}

impl Redescription {
    /// Builds a redescription from per-view `(query, support)` slots.
    ///
    /// Panics if every slot is empty.
    pub fn from_parts(n_entities: usize, parts: Vec<Option<(Query, EntitySet)>>) -> Self {
        let mut queries = Vec::with_capacity(parts.len());
        let mut query_supports = Vec::with_capacity(parts.len());
        for (v, p) in parts.into_iter().enumerate() {
            match p {
                Some((q, s)) => {
                    debug_assert_eq!(q.view, v, "query stored in the wrong view slot");
                    debug_assert_eq!(s.universe(), n_entities);
                    queries.push(Some(q));
                    query_supports.push(Some(s));
                }
                None => {
                    queries.push(None);
                    query_supports.push(None);
                }
            }
        }
        Self::with_caches(n_entities, queries, query_supports)
    }

    fn with_caches(
        n_entities: usize,
        queries: Vec<Option<Query>>,
        query_supports: Vec<Option<EntitySet>>,
    ) -> Self {
        let present: Vec<&EntitySet> = query_supports.iter().flatten().collect();
        assert!(!present.is_empty(), "a redescription needs at least one query");
        let mut support = present[0].clone();
        let mut union = present[0].clone();
        for s in &present[1..] {
            support.intersect_with(s);
            union.union_with(s);
        }
        let union_len = union.len();
        let jaccard = if union_len == 0 {
            0.0
        } else {
            support.len() as f64 / union_len as f64
        };
        let sizes: Vec<usize> = present.iter().map(|s| s.len()).collect();
        let pvalue = metrics::p_value(n_entities, &sizes, support.len());
        Redescription {
            queries,
            query_supports,
            support,
            union,
            jaccard,
            pvalue,
        }
    }

    /// Evaluates `queries` against `dataset`.
    pub fn evaluate(dataset: &Dataset, queries: Vec<Option<Query>>) -> Result<Self> {
        if queries.len() != dataset.n_views() {
            return Err(Error::Usage(format!(
                "expected {} query slots, got {}",
                dataset.n_views(),
                queries.len()
            )));
        }
        if queries.iter().all(Option::is_none) {
            return Err(Error::Usage("a redescription needs at least one query".into()));
        }
        let parts = queries
            .into_iter()
            .enumerate()
            .map(|(v, q)| match q {
                Some(q) => {
                    if q.view != v {
                        return Err(Error::Usage(format!(
                            "query for view {} placed in slot {v}",
                            q.view
                        )));
                    }
                    let s = q.try_support(dataset)?;
                    Ok(Some((q, s)))
                }
                None => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_parts(dataset.n_entities(), parts))
    }

    pub fn n_slots(&self) -> usize {
        self.queries.len()
    }

    pub fn n_entities(&self) -> usize {
        self.support.universe()
    }

    pub fn queries(&self) -> &[Option<Query>] {
        &self.queries
    }

    pub fn query(&self, view: usize) -> Option<&Query> {
        self.queries[view].as_ref()
    }

    pub fn query_support(&self, view: usize) -> Option<&EntitySet> {
        self.query_supports[view].as_ref()
    }

    pub fn support(&self) -> &EntitySet {
        &self.support
    }

    /// Union of the present queries' supports.
    pub fn union(&self) -> &EntitySet {
        &self.union
    }

    pub fn jaccard(&self) -> f64 {
        self.jaccard
    }

    pub fn pvalue(&self) -> f64 {
        self.pvalue
    }

    pub fn n_views(&self) -> usize {
        self.queries.iter().filter(|q| q.is_some()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.queries.iter().all(Option::is_some)
    }

    pub fn has_view(&self, view: usize) -> bool {
        self.queries[view].is_some()
    }

    pub fn views(&self) -> Vec<usize> {
        (0..self.queries.len()).filter(|&v| self.has_view(v)).collect()
    }

    /// Installs `query` into the empty slot `view`.
    pub fn insert_query(&self, query: Query, support: EntitySet) -> Result<Self> {
        let view = query.view;
        if self.queries[view].is_some() {
            return Err(Error::Usage(format!(
                "view {view} already holds a query; use replacement instead"
            )));
        }
        Ok(self.with_query(query, support))
    }

    /// Installs `query` into its view slot, replacing any existing query.
    pub fn with_query(&self, query: Query, support: EntitySet) -> Self {
        let view = query.view;
        let mut queries = self.queries.clone();
        let mut supports = self.query_supports.clone();
        queries[view] = Some(query);
        supports[view] = Some(support);
        Self::with_caches(self.n_entities(), queries, supports)
    }

    /// The redescription with view `view` removed, or `None` if it was the last query.
    pub fn without_query(&self, view: usize) -> Option<Self> {
        if self.queries[view].is_none() || self.n_views() == 1 {
            return None;
        }
        let mut queries = self.queries.clone();
        let mut supports = self.query_supports.clone();
        queries[view] = None;
        supports[view] = None;
        Some(Self::with_caches(self.n_entities(), queries, supports))
    }

    /// Keeps only the queries whose view is in `views`.
    pub fn restricted_to(&self, views: &[usize]) -> Option<Self> {
        let mut queries = self.queries.clone();
        let mut supports = self.query_supports.clone();
        for v in 0..queries.len() {
            if !views.contains(&v) {
                queries[v] = None;
                supports[v] = None;
            }
        }
        if queries.iter().all(Option::is_none) {
            return None;
        }
        Some(Self::with_caches(self.n_entities(), queries, supports))
    }

    /// Accuracy the redescription would have after adding a query with support `extra`.
    pub fn jaccard_with(&self, extra: &EntitySet) -> f64 {
        let union = self.union.union_len(extra);
        if union == 0 {
            0.0
        } else {
            self.support.intersection_len(extra) as f64 / union as f64
        }
    }

    /// Distinct attributes used by the queries.
    pub fn attrs(&self) -> BTreeSet<AttrId> {
        let mut out = BTreeSet::new();
        for q in self.queries.iter().flatten() {
            for l in q.literals() {
                out.insert((q.view, l.attribute));
            }
        }
        out
    }

    /// Number of attribute occurrences, counted with multiplicity.
    pub fn attr_occurrences(&self) -> usize {
        self.queries.iter().flatten().map(Query::literal_count).sum()
    }

    /// Re-evaluates every query from scratch.
    pub fn recomputed(&self, dataset: &Dataset) -> Self {
        let supports = self
            .queries
            .iter()
            .map(|q| q.as_ref().map(|q| q.support(dataset)))
            .collect();
        Self::with_caches(dataset.n_entities(), self.queries.clone(), supports)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    Generating,
    Supplementing,
}

/// A conjunctive query extracted from one tree leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub query: Query,
    pub support: EntitySet,
    /// Eligible for redescription construction.
    pub marked: bool,
    pub origin: Origin,
    /// Iteration that produced the rule.
    pub iteration: usize,
}

impl Rule {
    pub fn new(query: Query, support: EntitySet, origin: Origin, iteration: usize) -> Self {
        Rule {
            query,
            support,
            marked: true,
            origin,
            iteration,
        }
    }

    pub fn len(&self) -> usize {
        self.query.literal_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(query, support)` of the rule, or of its negation.
    pub fn as_query(&self, negated: bool) -> (Query, EntitySet) {
        if negated {
            (self.query.negated(), self.support.complement())
        } else {
            (self.query.clone(), self.support.clone())
        }
    }
}
