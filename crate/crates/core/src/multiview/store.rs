use std::fmt;

use super::grsc::grsc_indices;
use crate::dataio::{Constraints, Settings};
use crate::query::Redescription;

/// Stable identity of a store member, kept across in-place refinements.
pub type MemberId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryOp {
    Insert,
    Replace,
    Discard,
    Update,
    Normalize,
    RemoveIncomplete,
}

/// Store size observed right after one operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryEvent {
    pub op: MemoryOp,
    pub size: usize,
    pub complete: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddOutcome {
    Inserted(MemberId),
    Replaced(MemberId),
    Discarded,
}

/// Working memory of the framework: complete and incomplete redescriptions,
/// bounded by the maximal expansion size.
#[derive(Debug, Clone)]
pub struct RedescriptionStore {
    members: Vec<Redescription>,
    ids: Vec<MemberId>,
    next_id: MemberId,
    n_views: usize,
    pub work_set_size: usize,
    pub max_expansion_size: usize,
    peak: usize,
    events: Option<Vec<MemoryEvent>>,
}

impl RedescriptionStore {
    pub fn new(n_views: usize, work_set_size: usize, max_expansion_size: usize) -> Self {
        RedescriptionStore {
            members: Vec::new(),
            ids: Vec::new(),
            next_id: 0,
            n_views,
            work_set_size,
            max_expansion_size,
            peak: 0,
            events: None,
        }
    }

    pub fn from_constraints(n_views: usize, c: &Constraints) -> Self {
        Self::new(n_views, c.work_set_size, c.max_expansion_size)
    }

    /// Records a [`MemoryEvent`] after every operation from now on.
    pub fn instrument(&mut self) {
        self.events.get_or_insert_with(Vec::new);
    }

    pub fn events(&self) -> &[MemoryEvent] {
        self.events.as_deref().unwrap_or(&[])
    }

    pub fn take_events(&mut self) -> Vec<MemoryEvent> {
        self.events.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn members(&self) -> &[Redescription] {
        &self.members
    }

    pub fn ids(&self) -> &[MemberId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.members.len() >= self.max_expansion_size
    }

    pub fn n_views(&self) -> usize {
        self.n_views
    }

    /// Largest size the store ever reached.
    pub fn peak(&self) -> usize {
        self.peak
    }

    pub fn complete_count(&self) -> usize {
        self.members.iter().filter(|r| r.n_views() == self.n_views).count()
    }

    pub fn has_incomplete(&self) -> bool {
        self.members.iter().any(|r| r.n_views() < self.n_views)
    }

    pub fn into_members(self) -> Vec<Redescription> {
        self.members
    }

    fn record(&mut self, op: MemoryOp) {
        self.peak = self.peak.max(self.members.len());
        if self.events.is_some() {
            let ev = MemoryEvent {
                op,
                size: self.members.len(),
                complete: self.complete_count(),
            };
            self.events.as_mut().unwrap().push(ev);
        }
    }

    fn fresh_id(&mut self) -> MemberId {
        self.next_id += 1;
        self.next_id - 1
    }

    /// Inserts while capacity remains. A full store instead replaces the
    /// member most similar to `r_new` (entity Jaccard) among those strictly
    /// less accurate, preferring the largest accuracy gap on ties; if no
    /// member is less accurate, `r_new` is discarded.
    pub fn add_discard_or_replace(&mut self, r_new: Redescription) -> AddOutcome {
        if self.members.len() < self.max_expansion_size {
            let id = self.fresh_id();
            self.members.push(r_new);
            self.ids.push(id);
            self.record(MemoryOp::Insert);
            return AddOutcome::Inserted(id);
        }
        let mut best: Option<(usize, f64, f64)> = None;
        for (i, m) in self.members.iter().enumerate() {
            if m.jaccard() >= r_new.jaccard() {
                continue;
            }
            let sim = r_new.support().jaccard(m.support());
            let gap = r_new.jaccard() - m.jaccard();
            let better = match best {
                None => true,
                Some((_, bs, bg)) => sim > bs || (sim == bs && gap > bg),
            };
            if better {
                best = Some((i, sim, gap));
            }
        }
        match best {
            Some((i, _, _)) => {
                let id = self.fresh_id();
                self.members[i] = r_new;
                self.ids[i] = id;
                self.record(MemoryOp::Replace);
                AddOutcome::Replaced(id)
            }
            None => {
                self.record(MemoryOp::Discard);
                AddOutcome::Discarded
            }
        }
    }

    /// Replaces member `i` in place, keeping its identity.
    pub fn update(&mut self, i: usize, r: Redescription) {
        self.members[i] = r;
        self.record(MemoryOp::Update);
    }

    fn retain_indices(&mut self, keep: &[bool]) {
        let mut k = keep.iter();
        self.members.retain(|_| *k.next().unwrap());
        let mut k = keep.iter();
        self.ids.retain(|_| *k.next().unwrap());
    }

    /// Drops every incomplete member.
    pub fn remove_incomplete(&mut self) -> usize {
        let keep: Vec<bool> = self.members.iter().map(|r| r.n_views() == self.n_views).collect();
        let dropped = keep.iter().filter(|k| !**k).count();
        self.retain_indices(&keep);
        self.record(MemoryOp::RemoveIncomplete);
        dropped
    }

    /// Applies `f` to every member in place.
    pub fn map_members(&mut self, mut f: impl FnMut(&Redescription) -> Redescription) {
        for i in 0..self.members.len() {
            let next = f(&self.members[i]);
            self.members[i] = next;
        }
        self.record(MemoryOp::Update);
    }
}

/// Counters of one [`normalize_memory`] call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NormalizeRecord {
    pub before: usize,
    pub dropped_two_view: usize,
    pub dropped_incomplete: usize,
    pub selected: bool,
    pub after: usize,
}

impl fmt::Display for NormalizeRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "normalize before={} dropped_two_view={} dropped_incomplete={} selected={} after={}",
            self.before, self.dropped_two_view, self.dropped_incomplete, self.selected, self.after
        )
    }
}

/// Keeps the store within the memory budget after a completion step.
///
/// Above the work set size, incomplete two-view members go first. While the
/// store exceeds `t`, incomplete members are dropped fewest-views first
/// (least accurate first within a view count). If complete members alone still
/// exceed `t`, set selection with the first weight row shrinks them to the
/// output set size.
pub fn normalize_memory(store: &mut RedescriptionStore, settings: &Settings) -> NormalizeRecord {
    let n = store.n_views;
    let t = (store.max_expansion_size + store.work_set_size) / 2;
    let mut rec = NormalizeRecord {
        before: store.len(),
        ..Default::default()
    };
    if store.len() > store.work_set_size {
        let keep: Vec<bool> = store
            .members
            .iter()
            .map(|r| !(r.n_views() == 2 && r.n_views() < n))
            .collect();
        rec.dropped_two_view = keep.iter().filter(|k| !**k).count();
        store.retain_indices(&keep);
    }
    if store.len() > t {
        let mut order: Vec<usize> = (0..store.len()).filter(|&i| store.members[i].n_views() < n).collect();
        order.sort_by(|&a, &b| {
            let (ra, rb) = (&store.members[a], &store.members[b]);
            ra.n_views()
                .cmp(&rb.n_views())
                .then(ra.jaccard().total_cmp(&rb.jaccard()))
                .then(b.cmp(&a))
        });
        let excess = store.len() - t;
        let mut keep = vec![true; store.len()];
        for &i in order.iter().take(excess) {
            keep[i] = false;
        }
        rec.dropped_incomplete = excess.min(order.len());
        store.retain_indices(&keep);
    }
    if store.complete_count() > t {
        // only complete members remain here: the previous step removed every incomplete one
        let row = settings.weights.rows()[0];
        let chosen = grsc_indices(&store.members, &row, settings.output_set_size, settings.k_c);
        let mut keep = vec![false; store.len()];
        for i in chosen {
            keep[i] = true;
        }
        store.retain_indices(&keep);
        rec.selected = true;
    }
    rec.after = store.len();
    store.record(MemoryOp::Normalize);
    rec
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entities::EntitySet;
    use crate::query::{Literal, Query};

    fn red(n_views: usize, present: &[usize], supp: &[usize], extra: &[usize]) -> Redescription {
        let parts = (0..n_views)
            .map(|v| {
                present.contains(&v).then(|| {
                    let mut ids: Vec<usize> = supp.to_vec();
                    if v == present[0] {
                        ids.extend_from_slice(extra);
                    }
                    (
                        Query::literal(v, Literal::interval(0, 0.0, 1.0)),
                        EntitySet::from_indices(40, ids),
                    )
                })
            })
            .collect();
        Redescription::from_parts(40, parts)
    }

    #[test]
    fn insert_below_capacity() {
        let mut s = RedescriptionStore::new(3, 2, 3);
        assert!(matches!(s.add_discard_or_replace(red(3, &[0, 1], &[1, 2], &[])), AddOutcome::Inserted(_)));
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn full_store_of_better_members_discards() {
        let mut s = RedescriptionStore::new(3, 1, 1);
        s.add_discard_or_replace(red(3, &[0, 1], &[1, 2], &[]));
        assert_eq!(s.add_discard_or_replace(red(3, &[0, 1], &[1, 2], &[3])), AddOutcome::Discarded);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn replaces_most_similar_lower_member() {
        // member A: J 0.4, shares most entities with the newcomer; member B: J 0.1, far away
        let a = red(2, &[0, 1], &[1, 2, 3, 4], &[5, 6, 7, 8, 9, 10]);
        let b = red(2, &[0, 1], &[20], &[21, 22, 23, 24, 25, 26, 27, 28, 29]);
        assert!((a.jaccard() - 0.4).abs() < 1e-12);
        assert!((b.jaccard() - 0.1).abs() < 1e-12);
        let new = red(2, &[0, 1], &[1, 2, 3, 4], &[5]);
        assert!((new.jaccard() - 0.8).abs() < 1e-12);
        let mut s = RedescriptionStore::new(2, 2, 2);
        s.add_discard_or_replace(a);
        s.add_discard_or_replace(b.clone());
        assert!(matches!(s.add_discard_or_replace(new.clone()), AddOutcome::Replaced(_)));
        assert_eq!(s.members()[0], new);
        assert_eq!(s.members()[1], b);
    }

    #[test]
    fn small_store_untouched() {
        let mut s = RedescriptionStore::new(3, 25, 35);
        for i in 0..10 {
            s.add_discard_or_replace(red(3, &[0, 1], &[i], &[]));
        }
        let rec = normalize_memory(&mut s, &Settings::default());
        assert_eq!(rec.after, 10);
    }

    #[test]
    fn incomplete_two_view_members_dropped_first() {
        let mut s = RedescriptionStore::new(3, 25, 35);
        for i in 0..10 {
            s.add_discard_or_replace(red(3, &[0, 1, 2], &[i], &[]));
        }
        for i in 0..20 {
            s.add_discard_or_replace(red(3, &[0, 1], &[i], &[]));
        }
        assert_eq!(s.len(), 30);
        let rec = normalize_memory(&mut s, &Settings::default());
        assert_eq!(rec.dropped_two_view, 20);
        assert_eq!(rec.after, 10);
        assert!(!s.has_incomplete());
    }

    #[test]
    fn complete_excess_goes_through_selection() {
        let mut s = RedescriptionStore::new(2, 20, 40);
        for i in 0..40 {
            s.add_discard_or_replace(red(2, &[0, 1], &[i, (i + 1) % 40, (i + 2) % 40], &[]));
        }
        let settings = Settings {
            output_set_size: 25,
            ..Settings::default()
        };
        let rec = normalize_memory(&mut s, &settings);
        assert!(rec.selected);
        assert!(s.len() <= 25);
    }

    #[test]
    fn incomplete_dropped_in_view_order() {
        let mut s = RedescriptionStore::new(4, 1, 7);
        s.instrument();
        for i in 0..3 {
            s.add_discard_or_replace(red(4, &[0, 1, 2], &[i], &[]));
        }
        for i in 0..3 {
            s.add_discard_or_replace(red(4, &[0, 1, 2, 3], &[i], &[]));
        }
        s.add_discard_or_replace(red(4, &[0, 1], &[5], &[]));
        // t = 4: the 2-view member goes by rule (a), then two 3-view members
        let rec = normalize_memory(&mut s, &Settings::default());
        assert_eq!((rec.dropped_two_view, rec.dropped_incomplete, rec.after), (1, 2, 4));
        assert_eq!(s.complete_count(), 3);
        assert_eq!(s.events().last().unwrap().op, MemoryOp::Normalize);
        assert!(s.events().iter().all(|e| e.size <= 7));
    }
}
